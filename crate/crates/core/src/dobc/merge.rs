use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{anchor_index, Dobc, MergeStrategy, Track};
use crate::Error;

impl Dobc {
    /// Combines two clocks with the configured merge strategy.
    ///
    /// Depths are unioned, not incremented: the tick that records the merged
    /// object's own state moves every depth forward.
    pub fn merge(&self, other: &Dobc) -> Result<Dobc, Error> {
        self.merge_with(other, self.config.merge_strategy)
    }

    pub fn merge_with(&self, other: &Dobc, strategy: MergeStrategy) -> Result<Dobc, Error> {
        if !Arc::ptr_eq(&self.config, &other.config) && self.config != other.config {
            return Err(Error::ConfigMismatch);
        }
        let mut tracks: Vec<Track> = self.tracks.iter().chain(&other.tracks).cloned().collect();
        let config = self.config.clone();
        match strategy {
            MergeStrategy::Extending => {}
            MergeStrategy::Maxima => tracks = alloc::vec![combine_maxima(tracks, &config)],
            MergeStrategy::Hybrid(p) => {
                let mut merged = Dobc::from_parts(config.clone(), tracks);
                while merged.tracks.len() > p.max(1) as usize {
                    let (a, b) = two_oldest(&merged.tracks);
                    let pair = alloc::vec![merged.tracks[a].clone(), merged.tracks[b].clone()];
                    let (hi, lo) = (a.max(b), a.min(b));
                    merged.tracks.remove(hi);
                    merged.tracks.remove(lo);
                    merged.tracks.push(combine_maxima(pair, &config));
                    merged.canonicalize();
                }
                return Ok(merged);
            }
        }
        Ok(Dobc::from_parts(config, tracks))
    }
}

/// Projects every track onto the most decayed one and takes per-slot maxima.
fn combine_maxima(tracks: Vec<Track>, cfg: &super::DobcConfig) -> Track {
    let anchor = anchor_index(&tracks);
    let mut out = tracks[anchor].clone();
    for (i, t) in tracks.iter().enumerate() {
        if i == anchor {
            continue;
        }
        let shape = out.shape();
        let projected = if t.shape() == shape { t.clone() } else { t.project_onto(&out, cfg) };
        if projected.shape() == shape {
            out.max_with(&projected);
        } else {
            // the other track ends before the anchor does; keep the common prefix
            let mut base = out.project_onto(&projected, cfg);
            base.max_with(&projected);
            out = base;
        }
    }
    out
}

/// Indices of the two tracks with the smallest maximum depth.
fn two_oldest(tracks: &[Track]) -> (usize, usize) {
    let mut idx: Vec<usize> = (0..tracks.len()).collect();
    idx.sort_by(|&a, &b| tracks[a].max_depth().cmp(&tracks[b].max_depth()).then(a.cmp(&b)));
    (idx[0], idx[1])
}
