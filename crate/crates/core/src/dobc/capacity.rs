//! Window-size analytics: closed forms and simulated truth.

use alloc::vec::Vec;

use super::{Dobc, DobcConfig};
use crate::hash::digest;
use crate::vbf::max_value;

/// Closed-form and simulated capacity of a clock shape.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityReport {
    /// Largest number of states the last slot of the last layer holds.
    pub gamma_formula: u64,
    /// Printed closed form for the number of tracked states.
    pub k_formula: u64,
    pub window_min: u64,
    pub window_max: u64,
    pub window_mean: f64,
    /// Period of the steady-state window sequence.
    pub cycle_length: u64,
    /// Ticks actually measured (whole cycles, at least the requested count).
    pub measured_ticks: u64,
}

fn full(width: u8) -> u64 {
    u64::from(max_value(width))
}

/// `prod floor((2^w[i+1]-1)/(2^w[i]-1)) * (2^w[0]-1)`.
pub fn gamma_formula(cfg: &DobcConfig) -> u64 {
    let w = &cfg.bit_widths;
    let product: u64 = w.windows(2).map(|p| full(p[1]) / full(p[0])).product();
    product * full(w[0])
}

/// `|l1| (2^w[0]-1) + sum_{i>=2} floor((2^w[i]-1)/(2^w[i-1]-1)) |li|`.
pub fn k_formula(cfg: &DobcConfig) -> u64 {
    let w = &cfg.bit_widths;
    let s = &cfg.slots_per_layer;
    let first = u64::from(s[0]) * full(w[0]);
    let rest: u64 = (1..w.len())
        .map(|i| full(w[i]) / full(w[i - 1]) * u64::from(s[i]))
        .sum();
    first + rest
}

/// True iff each layer's full counter range is a multiple of the previous one's.
pub fn is_perfect_decay(cfg: &DobcConfig) -> bool {
    cfg.bit_widths.windows(2).all(|p| full(p[1]).is_multiple_of(full(p[0])))
}

/// Simulates `ticks` (rounded up to whole cycles) steady-state ticks with
/// distinct states and reports the tracked-window statistics.
pub fn capacity_stats(cfg: &DobcConfig, ticks: u64) -> CapacityReport {
    let mut clock = Dobc::new(cfg.clone()).expect("valid config");
    let mut counter = 0u64;
    let mut step = |c: &Dobc| {
        counter += 1;
        c.tick(&digest(&counter.to_le_bytes()))
    };

    // warm up until the first state is evicted
    let limit = 4 * cfg.max_window() + 16;
    let mut prev = clock.window();
    for _ in 0..limit {
        clock = step(&clock);
        let w = clock.window();
        if w <= prev {
            break;
        }
        prev = w;
    }

    let probe = (4 * cfg.max_window()).max(64) as usize;
    let mut windows: Vec<u64> = alloc::vec![clock.window()];
    let mut probe_clock = clock.clone();
    for _ in 1..2 * probe {
        probe_clock = step(&probe_clock);
        windows.push(probe_clock.window());
    }
    let cycle = smallest_period(&windows[probe..]).unwrap_or(1) as u64;

    let measured = ticks.max(1).div_ceil(cycle) * cycle;
    let mut seq = Vec::with_capacity(measured as usize);
    seq.push(clock.window());
    for _ in 1..measured {
        clock = step(&clock);
        seq.push(clock.window());
    }
    let min = *seq.iter().min().expect("non-empty");
    let max = *seq.iter().max().expect("non-empty");
    let mean = seq.iter().sum::<u64>() as f64 / seq.len() as f64;
    CapacityReport {
        gamma_formula: gamma_formula(cfg),
        k_formula: k_formula(cfg),
        window_min: min,
        window_max: max,
        window_mean: mean,
        cycle_length: cycle,
        measured_ticks: measured,
    }
}

fn smallest_period(seq: &[u64]) -> Option<usize> {
    (1..=seq.len() / 2).find(|&p| seq.iter().zip(&seq[p..]).all(|(a, b)| a == b))
}
