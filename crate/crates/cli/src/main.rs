//! `seqsnap`: run simulations, replay scripted scenarios, check history
//! files and print the cost comparison.
//!
//! Exit status: 0 on success (or an accepted history), 1 for a rejected
//! history, 2 for usage errors, unreadable input and refusals.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use seqsnap::bench::{render_table, run_bench, BenchConfig};
use seqsnap::check::{check_sc_fast, BruteForce, CheckError, Verdict, DEFAULT_BOUND};
use seqsnap::history::History;
use seqsnap::rounds::{check_composition, run_rounds, RoundConfig};
use seqsnap::sim::invariants::{
    clock_order_violations, liveness_violations, message_count_violations,
};
use seqsnap::sim::scenarios::{replay_scripted, SCENARIOS};
use seqsnap::sim::workload::{random_config, WorkloadKind};
use seqsnap::sim::{max_tolerated_crashes, run_simulation, DelayModel, RunArtifacts};

#[derive(Parser, Debug)]
#[command(
    name = "seqsnap",
    version,
    about = "Sequentially consistent snapshot memory: simulate, replay, check, bench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one seeded simulation and write its trace files.
    Simulate {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        ops: usize,
        /// Number of processes that crash; must stay below n/2.
        #[arg(long, default_value_t = 0)]
        crashes: usize,
        /// `async`, `async:<min>,<max>` or `sync:<d>,<u>`.
        #[arg(long, default_value = "async", value_parser = parse_delay)]
        delay: DelayModel,
        /// `random` or `write-heavy`.
        #[arg(long, default_value = "random")]
        workload: WorkloadKind,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Replay a scenario with a fixed delivery schedule.
    Replay {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SCENARIOS))]
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a history file.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Fast)]
        mode: Mode,
        /// Largest history the exhaustive modes accept.
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: usize,
        /// Number of processes, when the file alone does not tell.
        #[arg(long)]
        n: Option<usize>,
        /// Also write the verdict to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare message counts and causal depths with the register baseline.
    Bench {
        /// May be repeated.
        #[arg(long, default_values_t = [5])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 40)]
        ops: usize,
    },
    /// Run processes through rounds, one fresh object per round, and check the composition.
    Rounds {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        rounds: u32,
        /// Write-then-snapshot cycles per process and round.
        #[arg(long, default_value_t = 1)]
        cycles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        crashes: usize,
        #[arg(long, default_value = "async", value_parser = parse_delay)]
        delay: DelayModel,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Fast,
    Brute,
    Lin,
}

fn parse_pair(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two numbers `a,b`, got `{s}`"))?;
    let num = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(a)?, num(b)?))
}

fn parse_delay(s: &str) -> Result<DelayModel, String> {
    match s.split_once(':') {
        None if s == "async" => Ok(DelayModel::Async { min: 1, max: 10 }),
        Some(("async", rest)) => parse_pair(rest).map(|(min, max)| DelayModel::Async { min, max }),
        Some(("sync", rest)) => parse_pair(rest).map(|(d, u)| DelayModel::Sync { d, u }),
        _ => Err(format!(
            "unknown delay model `{s}` (expected async, async:<min>,<max> or sync:<d>,<u>)"
        )),
    }
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn write_artifacts(run: &RunArtifacts, out: &Path) -> Result<(), ExitCode> {
    run.write_to(out)
        .map_err(|e| usage_error(format!("cannot write to {}: {e}", out.display())))?;
    println!(
        "wrote {} operations, {} messages to {}",
        run.history.len(),
        run.metrics.messages_total,
        out.display()
    );
    Ok(())
}

fn report_verdict(verdict: &Verdict, out: Option<&Path>) -> ExitCode {
    let json = verdict.to_json();
    // A closed pipe (e.g. `| head`) must not turn a verdict into a crash.
    let _ = writeln!(std::io::stdout(), "{json}");
    if let Some(path) = out {
        if let Err(e) = std::fs::write(path, json + "\n") {
            return usage_error(format!("cannot write {}: {e}", path.display()));
        }
    }
    if verdict.accepted {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn simulate(
    n: usize,
    seed: u64,
    ops: usize,
    crashes: usize,
    delay: DelayModel,
    workload: WorkloadKind,
    out: &Path,
) -> ExitCode {
    if n == 0 {
        return usage_error("--n must be at least 1");
    }
    if crashes > max_tolerated_crashes(n) {
        return usage_error(format!(
            "{crashes} crashes among {n} processes: at most {} may crash (fewer than n/2)",
            max_tolerated_crashes(n)
        ));
    }
    let config = random_config(n, seed, ops, crashes, workload).with_delay(delay);
    let outcome = match run_simulation(&config) {
        Ok(o) => o,
        Err(e) => return usage_error(e),
    };
    for problem in clock_order_violations(&outcome.trace)
        .iter()
        .map(ToString::to_string)
        .chain(
            liveness_violations(&outcome)
                .into_iter()
                .chain(message_count_violations(&outcome)),
        )
    {
        eprintln!("warning: {problem}");
    }
    match write_artifacts(&outcome.into(), out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn check(file: &Path, mode: Mode, bound: usize, n: Option<usize>, out: Option<&Path>) -> ExitCode {
    let reader = match File::open(file) {
        Ok(f) => BufReader::new(f),
        Err(e) => return usage_error(format!("cannot open {}: {e}", file.display())),
    };
    let history = match History::read_jsonl(reader, n) {
        Ok(h) => h,
        Err(e) => return usage_error(format!("{}: {e}", file.display())),
    };
    let result = match mode {
        Mode::Fast if history.objects().len() > 1 => check_composition(&history),
        Mode::Fast => check_sc_fast(&history),
        Mode::Brute => BruteForce::sc().with_bound(bound).check(&history),
        Mode::Lin => BruteForce::lin().with_bound(bound).check(&history),
    };
    match result {
        Ok(verdict) => report_verdict(&verdict, out),
        Err(e @ CheckError::TooLarge { .. }) => usage_error(format!("refused: {e}")),
        Err(e) => usage_error(e),
    }
}

fn rounds(config: RoundConfig, out: &Path) -> ExitCode {
    let outcome = match run_rounds(&config) {
        Ok(o) => o,
        Err(e) => return usage_error(e),
    };
    let verdict = check_composition(&outcome.history);
    let run: RunArtifacts = outcome.into();
    if let Err(code) = write_artifacts(&run, out) {
        return code;
    }
    match verdict {
        Ok(v) => report_verdict(&v, Some(&out.join("verdict.json"))),
        Err(e) => usage_error(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            n,
            seed,
            ops,
            crashes,
            delay,
            workload,
            out,
        } => simulate(n, seed, ops, crashes, delay, workload, &out),
        Command::Replay { scenario, out } => match replay_scripted(&scenario) {
            Ok(run) => match write_artifacts(&run, &out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(code) => code,
            },
            Err(e) => usage_error(e),
        },
        Command::Check {
            file,
            mode,
            bound,
            n,
            out,
        } => check(&file, mode, bound, n, out.as_deref()),
        Command::Bench { n, seeds, ops } => {
            for n in n {
                if n == 0 {
                    return usage_error("--n must be at least 1");
                }
                match run_bench(BenchConfig { n, seeds, ops }) {
                    Ok(report) => println!("{}", render_table(&report)),
                    Err(e) => return usage_error(e),
                }
            }
            ExitCode::SUCCESS
        }
        Command::Rounds {
            n,
            rounds: count,
            cycles,
            seed,
            crashes,
            delay,
            out,
        } => {
            if crashes > max_tolerated_crashes(n) {
                return usage_error(format!(
                    "{crashes} crashes among {n} processes: at most {} may crash (fewer than n/2)",
                    max_tolerated_crashes(n)
                ));
            }
            let mut config = RoundConfig::new(n, count, seed);
            config.cycles = cycles;
            config.delay = delay;
            rounds(config.with_random_crashes(crashes), &out)
        }
    }
}
