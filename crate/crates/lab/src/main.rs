use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use dobc_lab::experiments::{self, ClockShape, FpParams, MergeParams, UsageError};
use dobc_lab::scenario::{Decay, Scenario, Strategy};

/// Experiments with decaying onion Bloom clocks and the Kstore simulator.
///
/// Every subcommand writes CSV with a header row to --out (or stdout) and is
/// deterministic in its flags. Exit codes: 0 success, 1 runtime error,
/// 2 bad usage, 3 a --check invariant failed.
#[derive(Parser)]
#[command(name = "dobc", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ClockFlags {
    /// Hash functions per inserted digest.
    #[arg(long, default_value_t = 3)]
    m: u32,
    /// Slots per layer, innermost first.
    #[arg(long, value_delimiter = ',', default_value = "4,2,1")]
    layers: Vec<u32>,
    /// Counter bit width per layer.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    widths: Vec<u8>,
    #[arg(long, value_enum, default_value_t = Decay::Complete)]
    decay: Decay,
    /// Track cap for the hybrid strategy.
    #[arg(long, default_value_t = 2)]
    p: u32,
}

#[derive(Args)]
struct Output {
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Assert the subcommand's invariants and exit 3 if any fails.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Window statistics and capacity formulas for one layer layout.
    /// Columns: layers, widths, decay, unit_capacities, gamma_formula,
    /// k_formula, window_min, window_max, window_mean, cycle_length,
    /// measured_ticks, perfect_decay.
    Capacity {
        #[command(flatten)]
        clock: ClockFlags,
        /// Filter length.
        #[arg(long, default_value_t = 256)]
        n: u32,
        /// Minimum ticks to measure after warm-up.
        #[arg(long, default_value_t = 600)]
        ticks: u64,
        #[command(flatten)]
        out: Output,
    },
    /// False positive and negative rates of DOBC, Bloom and vector clocks
    /// against the derivation history. Columns: seed, n, m, events, nodes,
    /// clock, trials, true_causal, true_concurrent, false_positives,
    /// false_negatives, indeterminate, fp_rate, fn_rate.
    FpRate {
        #[command(flatten)]
        clock: ClockFlags,
        /// Filter lengths to sweep.
        #[arg(long, value_delimiter = ',', default_value = "64,256,1024")]
        n: Vec<u32>,
        #[arg(long, value_enum, default_value_t = Strategy::Maxima)]
        strategy: Strategy,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        /// Objects per workload.
        #[arg(long, default_value_t = 5000)]
        events: u32,
        /// Nodes performing the workload.
        #[arg(long, default_value_t = 16)]
        nodes: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Clock size after a merge, per tick, next to an unmerged parent, and the
    /// workload accuracy of each merge strategy. Columns: seed, strategy,
    /// series (size, baseline, fp_rate, fn_rate, indeterminate), tick, value.
    MergeBench {
        #[command(flatten)]
        clock: ClockFlags,
        #[arg(long, default_value_t = 256)]
        n: u32,
        /// Strategy to run; all three when omitted.
        #[arg(long, value_enum)]
        strategy: Option<Strategy>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 2000)]
        events: u32,
        #[arg(long, default_value_t = 16)]
        nodes: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Runs a Kstore scenario file. Columns: seed, converged,
    /// rounds_to_converge, messages, dropped, rejected_count,
    /// divergence_keys, failed_ops, final_time.
    Kstore {
        /// Scenario TOML with [ring], [workload], [faults] and [clock].
        scenario: PathBuf,
        /// Seeds to run; the scenario's own seed when omitted.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Human-readable event log destination.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

fn shape(c: &ClockFlags, n: u32, strategy: Strategy) -> ClockShape {
    ClockShape {
        n,
        m: c.m,
        layers: c.layers.clone(),
        widths: c.widths.clone(),
        decay: c.decay.into(),
        strategy: strategy.with_p(c.p),
    }
}

/// Writes the rows and reports check violations; `Ok(false)` means a check failed.
fn finish<T: serde::Serialize>(rows: &[T], out: &Output, violations: impl FnOnce() -> Vec<String>) -> Result<bool> {
    experiments::write_csv(rows, out.out.as_deref())?;
    if !out.check {
        return Ok(true);
    }
    let bad = violations();
    for v in &bad {
        eprintln!("check failed: {v}");
    }
    Ok(bad.is_empty())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Capacity { clock, n, ticks, out } => {
            let s = shape(&clock, n, Strategy::Maxima);
            let row = experiments::capacity(&s, ticks)?;
            finish(&[row.clone()], &out, || experiments::check_capacity(&row, &s))
        }
        Cmd::FpRate { clock, n, strategy, seeds, events, nodes, out } => {
            let p = FpParams { shape: shape(&clock, 256, strategy), ns: n, seeds, events, nodes };
            let rows = experiments::fp_rate(&p)?;
            finish(&rows, &out, || experiments::check_fp(&rows))
        }
        Cmd::MergeBench { clock, n, strategy, seeds, events, nodes, out } => {
            let all = [Strategy::Extending, Strategy::Maxima, Strategy::Hybrid];
            let strategies = match strategy {
                Some(s) => vec![s.with_p(clock.p)],
                None => all.iter().map(|s| s.with_p(clock.p)).collect(),
            };
            let s = shape(&clock, n, Strategy::Maxima);
            let p = MergeParams { shape: s.clone(), strategies, seeds, events, nodes };
            let rows = experiments::merge_bench(&p)?;
            finish(&rows, &out, || experiments::check_merge(&rows, &s))
        }
        Cmd::Kstore { scenario, seeds, log, out } => {
            let sc = Scenario::load(&scenario).map_err(|e| UsageError(format!("{}: {e:#}", scenario.display())))?;
            let seeds = seeds.unwrap_or_else(|| vec![sc.workload.seed]);
            let (rows, lines) = experiments::kstore(&sc, &seeds).map_err(|e| match e.downcast::<dobc_core::Error>() {
                Ok(e) => UsageError(format!("{}: {e}", scenario.display())).into(),
                Err(e) => e,
            })?;
            if let Some(path) = log {
                std::fs::write(path, lines.join("\n") + "\n")?;
            }
            finish(&rows, &out, || experiments::check_kstore(&rows))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
