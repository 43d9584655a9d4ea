//! The experiments behind each subcommand. Every function is deterministic in
//! its inputs and returns rows sorted in a fixed order.

use std::io::Write;
use std::path::Path;

use anyhow::Result;
use dobc_core::dobc::{capacity_stats, is_perfect_decay};
use dobc_core::hash::digest;
use dobc_core::kstore::SimWorld;
use dobc_core::lab::{generate_workload, measure_accuracy, ClockKind, FpReport, WorkloadSpec};
use dobc_core::{DecayMode, Dobc, DobcConfig, HashConfig, MergeStrategy};
use rayon::prelude::*;
use serde::Serialize;

use crate::scenario::{strategy_name, Scenario};

/// A bad flag value; the message starts with the flag's name.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Clock parameters shared by the subcommands.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockShape {
    pub n: u32,
    pub m: u32,
    pub layers: Vec<u32>,
    pub widths: Vec<u8>,
    pub decay: DecayMode,
    pub strategy: MergeStrategy,
}

impl Default for ClockShape {
    fn default() -> Self {
        Self {
            n: 256,
            m: 3,
            layers: vec![4, 2, 1],
            widths: vec![1, 2, 3],
            decay: DecayMode::Complete,
            strategy: MergeStrategy::Maxima,
        }
    }
}

fn usage(msg: String) -> anyhow::Error {
    UsageError(msg).into()
}

impl ClockShape {
    pub fn config(&self, seed: u64) -> DobcConfig {
        DobcConfig::default_shape(HashConfig::new(self.n, self.m, seed))
            .with_layers(&self.layers, &self.widths)
            .with_decay(self.decay)
            .with_strategy(self.strategy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(usage("--n: filter length must be positive".into()));
        }
        if self.m == 0 || self.m > self.n {
            return Err(usage(format!("--m: hash count must lie in 1..={}", self.n)));
        }
        if self.layers.is_empty() || self.layers.contains(&0) {
            return Err(usage("--layers: need at least one layer, each with a positive slot count".into()));
        }
        if self.widths.len() != self.layers.len() {
            return Err(usage(format!(
                "--widths: {} widths given for {} layers",
                self.widths.len(),
                self.layers.len()
            )));
        }
        if let Some(w) = self.widths.iter().find(|w| !(1..=16).contains(*w)) {
            return Err(usage(format!("--widths: width {w} outside 1..=16")));
        }
        if self.strategy == MergeStrategy::Hybrid(0) {
            return Err(usage("--p: hybrid needs p >= 1".into()));
        }
        self.config(0).validate().map_err(|e| usage(format!("--widths: {e}")))
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityRow {
    pub layers: String,
    pub widths: String,
    pub decay: &'static str,
    pub unit_capacities: String,
    pub gamma_formula: u64,
    pub k_formula: u64,
    pub window_min: u64,
    pub window_max: u64,
    pub window_mean: f64,
    pub cycle_length: u64,
    pub measured_ticks: u64,
    pub perfect_decay: bool,
}

pub fn capacity(shape: &ClockShape, ticks: u64) -> Result<CapacityRow> {
    shape.validate()?;
    let cfg = shape.config(0);
    let r = capacity_stats(&cfg, ticks);
    Ok(CapacityRow {
        layers: join(&shape.layers),
        widths: join(&shape.widths),
        decay: match shape.decay {
            DecayMode::Complete => "complete",
            DecayMode::Incomplete => "incomplete",
        },
        unit_capacities: join(&cfg.unit_capacities()),
        gamma_formula: r.gamma_formula,
        k_formula: r.k_formula,
        window_min: r.window_min,
        window_max: r.window_max,
        window_mean: r.window_mean,
        cycle_length: r.cycle_length,
        measured_ticks: r.measured_ticks,
        perfect_decay: is_perfect_decay(&cfg),
    })
}

pub fn check_capacity(row: &CapacityRow, shape: &ClockShape) -> Vec<String> {
    let mut bad = Vec::new();
    let mean_ok = row.window_min as f64 <= row.window_mean && row.window_mean <= row.window_max as f64;
    if !mean_ok {
        bad.push(format!("window mean {} outside [{}, {}]", row.window_mean, row.window_min, row.window_max));
    }
    if row.window_max > shape.config(0).max_window() {
        bad.push(format!("window max {} exceeds the layout's capacity", row.window_max));
    }
    bad
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FpRow {
    pub seed: u64,
    pub n: u32,
    pub m: u32,
    pub events: u32,
    pub nodes: u32,
    pub clock: &'static str,
    pub trials: u64,
    pub true_causal: u64,
    pub true_concurrent: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub indeterminate: u64,
    pub fp_rate: f64,
    pub fn_rate: f64,
}

#[derive(Clone, Debug)]
pub struct FpParams {
    pub shape: ClockShape,
    pub ns: Vec<u32>,
    pub seeds: Vec<u64>,
    pub events: u32,
    pub nodes: u32,
}

/// DOBC, Bloom clock and vector clock accuracy on one workload. The history
/// depends only on `seed`, so cells sharing a seed are paired.
pub fn fp_cell(shape: &ClockShape, n: u32, seed: u64, events: u32, nodes: u32) -> Result<Vec<FpRow>> {
    let shape = ClockShape { n, ..shape.clone() };
    shape.validate()?;
    let w = generate_workload(&WorkloadSpec::new(nodes, events, seed), &shape.config(seed))?;
    [ClockKind::Dobc, ClockKind::Bloom, ClockKind::Vector]
        .into_iter()
        .map(|kind| {
            let r: FpReport = measure_accuracy(&w, kind)?;
            Ok(FpRow {
                seed,
                n,
                m: shape.m,
                events,
                nodes,
                clock: kind.name(),
                trials: r.trials,
                true_causal: r.true_causal,
                true_concurrent: r.true_concurrent,
                false_positives: r.false_positive_count,
                false_negatives: r.false_negative_count,
                indeterminate: r.indeterminate_count,
                fp_rate: r.fp_rate,
                fn_rate: r.fn_rate,
            })
        })
        .collect()
}

pub fn fp_rate(p: &FpParams) -> Result<Vec<FpRow>> {
    if p.ns.is_empty() {
        return Err(usage("--n: give at least one filter length".into()));
    }
    if p.nodes == 0 {
        return Err(usage("--nodes: must be positive".into()));
    }
    let cells: Vec<(u64, u32)> = p.seeds.iter().flat_map(|&s| p.ns.iter().map(move |&n| (s, n))).collect();
    let rows: Result<Vec<Vec<FpRow>>> =
        cells.par_iter().map(|&(seed, n)| fp_cell(&p.shape, n, seed, p.events, p.nodes)).collect();
    let mut rows: Vec<FpRow> = rows?.into_iter().flatten().collect();
    rows.sort_by(|a, b| (a.seed, a.n, a.clock).cmp(&(b.seed, b.n, b.clock)));
    Ok(rows)
}

pub fn check_fp(rows: &[FpRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| r.clock != "vector" && r.false_negatives > 0)
        .map(|r| format!("{} seed {} n {}: {} false negatives", r.clock, r.seed, r.n, r.false_negatives))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MergeRow {
    pub seed: u64,
    pub strategy: String,
    /// `size` and `baseline` are byte sizes per tick after the merge;
    /// `fp_rate`, `fn_rate` and `indeterminate` describe a whole workload.
    pub series: &'static str,
    pub tick: Option<u64>,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct MergeParams {
    pub shape: ClockShape,
    pub strategies: Vec<MergeStrategy>,
    pub seeds: Vec<u64>,
    pub events: u32,
    pub nodes: u32,
}

fn chain(clock: Dobc, seed: u64, tag: &[u8], len: u64) -> Dobc {
    (0..len).fold(clock, |c, i| c.tick(&digest(&[&seed.to_le_bytes()[..], tag, &i.to_le_bytes()].concat())))
}

/// Two chains longer than the window are merged; the merged clock and one
/// unmerged parent then tick side by side for twice the longest window.
fn merge_cell(shape: &ClockShape, strategy: MergeStrategy, seed: u64, events: u32, nodes: u32) -> Result<Vec<MergeRow>> {
    let shape = ClockShape { strategy, ..shape.clone() };
    shape.validate()?;
    let cfg = shape.config(seed);
    let k = capacity_stats(&cfg, 600).window_max;
    let empty = Dobc::new(cfg.clone())?;
    let a = chain(empty.clone(), seed, b"a", 2 * k + 3);
    let b = chain(empty, seed, b"b", 3 * k + 1);
    let name = strategy_name(strategy);
    let row = |series, tick, value| MergeRow { seed, strategy: name.clone(), series, tick, value };
    let mut rows = Vec::new();
    let mut merged = a.merge(&b)?;
    let mut base = a;
    for t in 0..=2 * k {
        let d = digest(&[&seed.to_le_bytes()[..], b"after", &t.to_le_bytes()].concat());
        merged = merged.tick(&d);
        base = base.tick(&d);
        rows.push(row("size", Some(t), merged.encoded_filter_len() as f64));
        rows.push(row("baseline", Some(t), base.encoded_filter_len() as f64));
    }
    let w = generate_workload(&WorkloadSpec::new(nodes, events, seed), &cfg)?;
    let r = measure_accuracy(&w, ClockKind::Dobc)?;
    rows.push(row("fp_rate", None, r.fp_rate));
    rows.push(row("fn_rate", None, r.fn_rate));
    rows.push(row("indeterminate", None, r.indeterminate_count as f64));
    Ok(rows)
}

pub fn merge_bench(p: &MergeParams) -> Result<Vec<MergeRow>> {
    let cells: Vec<(u64, MergeStrategy)> =
        p.seeds.iter().flat_map(|&s| p.strategies.iter().map(move |&st| (s, st))).collect();
    let rows: Result<Vec<Vec<MergeRow>>> =
        cells.par_iter().map(|&(seed, st)| merge_cell(&p.shape, st, seed, p.events, p.nodes)).collect();
    let mut rows: Vec<MergeRow> = rows?.into_iter().flatten().collect();
    rows.sort_by(|a, b| (a.seed, &a.strategy, a.series, a.tick).cmp(&(b.seed, &b.strategy, b.series, b.tick)));
    Ok(rows)
}

/// Ticks after the merge until the merged size stays at the baseline, `None`
/// if it never settles.
pub fn settle_tick(rows: &[MergeRow], seed: u64, strategy: &str) -> Option<u64> {
    let series = |name: &str| -> Vec<(u64, f64)> {
        rows.iter()
            .filter(|r| r.seed == seed && r.strategy == strategy && r.series == name)
            .map(|r| (r.tick.unwrap_or(0), r.value))
            .collect()
    };
    let (size, base) = (series("size"), series("baseline"));
    let last_off = size.iter().zip(&base).rposition(|(s, b)| s.1 != b.1);
    match last_off {
        None => Some(0),
        Some(i) if i + 1 < size.len() => Some(size[i + 1].0),
        Some(_) => None,
    }
}

pub fn check_merge(rows: &[MergeRow], shape: &ClockShape) -> Vec<String> {
    let mut bad = Vec::new();
    let cells: std::collections::BTreeSet<(u64, String)> =
        rows.iter().map(|r| (r.seed, r.strategy.clone())).collect();
    for (seed, strategy) in cells {
        let k = capacity_stats(&shape.config(seed), 600).window_max;
        let settle = settle_tick(rows, seed, &strategy);
        let ok = match strategy.as_str() {
            "maxima" | "hybrid(1)" => settle == Some(0),
            _ => settle.is_some_and(|t| t <= k),
        };
        if !ok {
            bad.push(format!("seed {seed} {strategy}: size settles at {settle:?}, window {k}"));
        }
        let fns = rows.iter().find(|r| r.seed == seed && r.strategy == strategy && r.series == "fn_rate");
        if fns.is_some_and(|r| r.value != 0.0) {
            bad.push(format!("seed {seed} {strategy}: false negatives"));
        }
    }
    bad
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KstoreRow {
    pub seed: u64,
    pub converged: bool,
    pub rounds_to_converge: u32,
    pub messages: u64,
    pub dropped: u64,
    pub rejected_count: u64,
    pub divergence_keys: usize,
    pub failed_ops: u64,
    pub final_time: u64,
}

/// One simulation per seed; the log lines are prefixed with the seed.
pub fn kstore(scenario: &Scenario, seeds: &[u64]) -> Result<(Vec<KstoreRow>, Vec<String>)> {
    let runs: Result<Vec<(KstoreRow, Vec<String>)>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut world = SimWorld::new(scenario.spec(seed))?;
            let r = world.run();
            let mut log: Vec<String> = world.log().iter().map(|l| format!("seed={seed} {l}")).collect();
            log.push(format!(
                "seed={seed} converged={} rounds={} divergent={:?}",
                r.converged, r.rounds_to_converge, r.divergence_keys
            ));
            let row = KstoreRow {
                seed,
                converged: r.converged,
                rounds_to_converge: r.rounds_to_converge,
                messages: r.messages,
                dropped: r.dropped,
                rejected_count: r.rejected_count,
                divergence_keys: r.divergence_keys.len(),
                failed_ops: r.failed_ops,
                final_time: r.final_time,
            };
            Ok((row, log))
        })
        .collect();
    let mut runs = runs?;
    runs.sort_by_key(|(r, _)| r.seed);
    let log = runs.iter().flat_map(|(_, l)| l.clone()).collect();
    Ok((runs.into_iter().map(|(r, _)| r).collect(), log))
}

pub fn check_kstore(rows: &[KstoreRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| !r.converged)
        .map(|r| format!("seed {}: {} keys diverge", r.seed, r.divergence_keys))
        .collect()
}

/// Writes `rows` as CSV with a header to `out`, or to stdout.
pub fn write_csv<T: Serialize>(rows: &[T], out: Option<&Path>) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
