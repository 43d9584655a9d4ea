use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dag::ObjectId;
use super::workload::Workload;
use crate::{CausalVerdict, Error};

/// Above this many objects pairs are sampled instead of enumerated.
pub const ALL_PAIRS_LIMIT: usize = 500;
pub const SAMPLED_PAIRS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClockKind {
    Dobc,
    Bloom,
    Vector,
    Oracle,
}

impl ClockKind {
    pub fn name(self) -> &'static str {
        match self {
            ClockKind::Dobc => "dobc",
            ClockKind::Bloom => "bloom",
            ClockKind::Vector => "vector",
            ClockKind::Oracle => "oracle",
        }
    }
}

/// Verdicts of one clock kind against the derivation history.
///
/// Every compared pair lands in exactly one of `true_causal` or
/// `true_concurrent`. Indeterminate verdicts count neither as false
/// positives nor as false negatives and are excluded from `fn_rate`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FpReport {
    pub trials: u64,
    pub true_causal: u64,
    pub true_concurrent: u64,
    pub false_positive_count: u64,
    pub false_negative_count: u64,
    pub indeterminate_count: u64,
    pub fp_rate: f64,
    pub fn_rate: f64,
}

/// Unordered pairs `(a, b)` with `a < b`: all of them for small histories,
/// otherwise a fixed-seed uniform sample.
pub fn sample_pairs(objects: usize, seed: u64) -> Vec<(ObjectId, ObjectId)> {
    if objects < 2 {
        return Vec::new();
    }
    if objects <= ALL_PAIRS_LIMIT {
        let mut out = Vec::with_capacity(objects * (objects - 1) / 2);
        for b in 1..objects {
            for a in 0..b {
                out.push((a as ObjectId, b as ObjectId));
            }
        }
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7061_6972_735f_7631);
    (0..SAMPLED_PAIRS)
        .map(|_| {
            let a = rng.gen_range(0..objects);
            let mut b = rng.gen_range(0..objects - 1);
            if b >= a {
                b += 1;
            }
            (a.min(b) as ObjectId, a.max(b) as ObjectId)
        })
        .collect()
}

pub fn measure_accuracy(w: &Workload, kind: ClockKind) -> Result<FpReport, Error> {
    let mut r = FpReport::default();
    let mut causal_indeterminate = 0;
    for (a, b) in sample_pairs(w.dag.len(), w.spec.seed) {
        // ids are topological, so only `a` can precede `b`
        let causal = w.dag.reaches(a, b)?;
        let (a, b) = (a as usize, b as usize);
        let v = match kind {
            ClockKind::Dobc => w.dobc[b].compare(&w.dobc[a])?,
            ClockKind::Bloom => w.bloom[b].compare(&w.bloom[a])?,
            ClockKind::Vector => w.vector[b].compare(&w.vector[a])?,
            ClockKind::Oracle => w.dag.verdict(b as ObjectId, a as ObjectId)?,
        };
        r.trials += 1;
        if v == CausalVerdict::Indeterminate {
            r.indeterminate_count += 1;
        }
        if causal {
            r.true_causal += 1;
            if v == CausalVerdict::Indeterminate {
                causal_indeterminate += 1;
            } else if !v.is_after() {
                r.false_negative_count += 1;
            }
        } else {
            r.true_concurrent += 1;
            if v.is_causal() {
                r.false_positive_count += 1;
            }
        }
    }
    r.fp_rate = ratio(r.false_positive_count, r.true_concurrent);
    r.fn_rate = ratio(r.false_negative_count, r.true_causal - causal_indeterminate);
    Ok(r)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::{generate_workload, WorkloadSpec};
    use crate::{DobcConfig, HashConfig};

    #[test]
    fn pair_sampling() {
        assert_eq!(sample_pairs(4, 0), [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]);
        let s = sample_pairs(2000, 7);
        assert_eq!(s.len(), SAMPLED_PAIRS);
        assert!(s.iter().all(|(a, b)| a < b && *b < 2000));
        assert_eq!(s, sample_pairs(2000, 7));
    }

    #[test]
    fn oracle_is_exact_and_clocks_have_no_false_negatives() {
        let cfg = DobcConfig::default_shape(HashConfig::new(128, 3, 0));
        let w = generate_workload(&WorkloadSpec::new(4, 400, 21), &cfg).unwrap();
        let o = measure_accuracy(&w, ClockKind::Oracle).unwrap();
        assert_eq!(o.trials, 400 * 399 / 2);
        assert_eq!((o.false_positive_count, o.false_negative_count), (0, 0));
        assert_eq!(o.true_causal + o.true_concurrent, o.trials);
        for kind in [ClockKind::Dobc, ClockKind::Bloom, ClockKind::Vector] {
            let r = measure_accuracy(&w, kind).unwrap();
            assert_eq!(r.false_negative_count, 0, "{kind:?}");
            assert_eq!(r.true_causal, o.true_causal);
        }
    }
}
