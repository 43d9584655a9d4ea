//! Decaying onion Bloom clocks.
//!
//! A clock is a stack of layers. Layer 1 holds the filters of the most recent
//! states one by one; each deeper layer holds wider filters that are sums of
//! whole groups pushed out of the layer above it. When the last slot of the
//! last layer is pushed out it is deleted, so a clock only remembers a window
//! of recent history, and older parts of that window are kept more coarsely.
//!
//! Every slot records the range of *ages* it covers, where age 0 is the state
//! that produced the clock. A track anchored at depth `d` maps an age `g` to
//! depth `d - g`. Merged clocks may carry several depths and, under the
//! extending strategy, several tracks.

mod capacity;
mod compare;
mod encode;
mod merge;

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::hash::{unit_filter, Digest, HashConfig};
use crate::vbf::{max_value, Vbf, MAX_WIDTH};
use crate::Error;

pub use capacity::{capacity_stats, gamma_formula, is_perfect_decay, k_formula, CapacityReport};

/// How full a slot must be before it is pushed into the next layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecayMode {
    /// A slot of layer `i + 1` only absorbs whole groups from layer `i` and
    /// holds the largest multiple of layer `i`'s group size its counters fit.
    Complete,
    /// Slots may move on before they are full so that every slot of the next
    /// layer fills its counters exactly (`2^width - 1` states).
    Incomplete,
}

/// How two clocks are combined when an object has two parents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MergeStrategy {
    /// Keep both histories as parallel tracks until they decay into one.
    Extending,
    /// Per-index maximum of aligned slots; constant size.
    Maxima,
    /// Extending up to `p` tracks, collapsing the oldest with maxima beyond that.
    Hybrid(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DobcConfig {
    pub hash: HashConfig,
    pub slots_per_layer: Vec<u32>,
    pub bit_widths: Vec<u8>,
    pub decay_mode: DecayMode,
    pub merge_strategy: MergeStrategy,
}

impl DobcConfig {
    /// Three layers of (4, 2, 1) slots with widths (1, 2, 3).
    pub fn default_shape(hash: HashConfig) -> Self {
        Self {
            hash,
            slots_per_layer: alloc::vec![4, 2, 1],
            bit_widths: alloc::vec![1, 2, 3],
            decay_mode: DecayMode::Complete,
            merge_strategy: MergeStrategy::Maxima,
        }
    }

    pub fn with_layers(mut self, slots: &[u32], widths: &[u8]) -> Self {
        self.slots_per_layer = slots.to_vec();
        self.bit_widths = widths.to_vec();
        self
    }

    pub fn with_decay(mut self, mode: DecayMode) -> Self {
        self.decay_mode = mode;
        self
    }

    pub fn with_strategy(mut self, strategy: MergeStrategy) -> Self {
        self.merge_strategy = strategy;
        self
    }

    pub fn num_layers(&self) -> usize {
        self.bit_widths.len()
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !self.hash.is_valid() {
            return Err(Error::InvalidConfig("n and m must be at least 1"));
        }
        if self.bit_widths.is_empty() {
            return Err(Error::InvalidConfig("at least one layer is required"));
        }
        if self.bit_widths.len() != self.slots_per_layer.len() {
            return Err(Error::InvalidConfig("one width per layer is required"));
        }
        if self.slots_per_layer.contains(&0) {
            return Err(Error::InvalidConfig("every layer needs at least one slot"));
        }
        if self.bit_widths.iter().any(|&w| w == 0 || w > MAX_WIDTH) {
            return Err(Error::InvalidConfig("bit widths must lie in 1..=16"));
        }
        if self.bit_widths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("bit widths must be strictly increasing"));
        }
        if self.merge_strategy == MergeStrategy::Hybrid(0) {
            return Err(Error::InvalidConfig("hybrid merge needs p >= 1"));
        }
        Ok(())
    }

    /// Number of unit filters one slot of each layer holds.
    pub fn unit_capacities(&self) -> Vec<u32> {
        let mut caps = Vec::with_capacity(self.num_layers());
        for (i, &w) in self.bit_widths.iter().enumerate() {
            let full = max_value(w);
            let cap = match (self.decay_mode, i) {
                (DecayMode::Incomplete, _) | (_, 0) => full,
                (DecayMode::Complete, _) => {
                    let prev: u32 = caps[i - 1];
                    (full / prev) * prev
                }
            };
            caps.push(cap);
        }
        caps
    }

    /// Most states a single track can hold.
    pub fn max_window(&self) -> u64 {
        self.unit_capacities()
            .iter()
            .zip(&self.slots_per_layer)
            .map(|(&c, &s)| u64::from(c) * u64::from(s))
            .sum()
    }
}

/// One filter of a layer and the ages it summarises.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    newest_age: u32,
    oldest_age: u32,
    /// Smallest width cap at which a sum in this slot's history was clamped,
    /// or 0 if none was. Counters at or above it may stand for larger values.
    clamp_floor: u16,
    filter: Vbf,
}

impl Slot {
    pub(crate) fn new(filter: Vbf, newest_age: u32, oldest_age: u32) -> Self {
        debug_assert!(newest_age <= oldest_age);
        Self { newest_age, oldest_age, clamp_floor: 0, filter }
    }

    pub(crate) fn with_clamp_floor(mut self, floor: u16) -> Self {
        self.clamp_floor = floor;
        self
    }

    pub fn is_clamped(&self) -> bool {
        self.clamp_floor != 0
    }

    pub fn clamp_floor(&self) -> u16 {
        self.clamp_floor
    }

    /// Counter `index` may stand for a larger true value.
    pub fn is_saturated(&self, index: usize) -> bool {
        self.clamp_floor != 0 && self.filter.counters()[index] >= self.clamp_floor
    }

    /// Adds `other`'s counters, recording any clamp.
    fn absorb(&mut self, other: &Slot) {
        let mut floor = min_floor(self.clamp_floor, other.clamp_floor);
        if self.filter.absorb(&other.filter) {
            floor = min_floor(floor, self.filter.max_value() as u16);
        }
        self.clamp_floor = floor;
    }

    pub fn filter(&self) -> &Vbf {
        &self.filter
    }

    pub fn newest_age(&self) -> u32 {
        self.newest_age
    }

    pub fn oldest_age(&self) -> u32 {
        self.oldest_age
    }

    /// Number of unit filters folded into this slot.
    pub fn fill(&self) -> u32 {
        self.oldest_age - self.newest_age + 1
    }

    /// Covered depth interval `[lo, hi]` when the owning track sits at `depth`.
    pub fn depth_range(&self, depth: u64) -> (i64, i64) {
        let d = depth as i64;
        (d - i64::from(self.oldest_age), d - i64::from(self.newest_age))
    }
}

/// Minimum of two clamp floors where 0 means "never clamped".
fn min_floor(a: u16, b: u16) -> u16 {
    match (a, b) {
        (0, x) | (x, 0) => x,
        (x, y) => x.min(y),
    }
}

/// One lineage view of a clock: per-layer slot lists, head first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Track {
    depths: BTreeSet<u64>,
    layers: Vec<Vec<Slot>>,
}

impl Track {
    fn empty(num_layers: usize) -> Self {
        let mut depths = BTreeSet::new();
        depths.insert(0);
        Self { depths, layers: alloc::vec![Vec::new(); num_layers] }
    }

    pub fn depths(&self) -> &BTreeSet<u64> {
        &self.depths
    }

    pub fn layers(&self) -> &[Vec<Slot>] {
        &self.layers
    }

    /// Number of states the track still covers.
    pub fn window(&self) -> u64 {
        self.slots().map(|s| u64::from(s.fill())).sum()
    }

    pub fn slots(&self) -> impl Iterator<Item = &Slot> {
        self.layers.iter().flatten()
    }

    /// Age ranges per layer; two tracks with equal shapes decay in lockstep.
    fn shape(&self) -> Vec<Vec<(u32, u32)>> {
        self.layers
            .iter()
            .map(|l| l.iter().map(|s| (s.newest_age, s.oldest_age)).collect())
            .collect()
    }

    fn tick(&mut self, unit: &Vbf, cfg: &DobcConfig, caps: &[u32]) {
        for slot in self.layers.iter_mut().flatten() {
            slot.newest_age += 1;
            slot.oldest_age += 1;
        }
        self.depths = self.depths.iter().map(|d| d + 1).collect();
        let head = unit.widened(cfg.bit_widths[0]).expect("validated width");
        self.push(0, Slot::new(head, 0, 0), cfg, caps);
    }

    fn push(&mut self, layer: usize, incoming: Slot, cfg: &DobcConfig, caps: &[u32]) {
        let width = cfg.bit_widths[layer];
        let target = self.head_target(layer, cfg, caps);
        if let Some(head) = self.layers[layer].first_mut() {
            if head.fill() + incoming.fill() <= target {
                // incoming states are newer than everything already in this layer
                head.absorb(&incoming);
                head.newest_age = incoming.newest_age;
                return;
            }
        }
        let filter = incoming.filter.widened(width).expect("validated width");
        let slots = &mut self.layers[layer];
        let slot = Slot::new(filter, incoming.newest_age, incoming.oldest_age)
            .with_clamp_floor(incoming.clamp_floor);
        slots.insert(0, slot);
        if slots.len() > cfg.slots_per_layer[layer] as usize {
            let out = slots.pop().expect("non-empty");
            if layer + 1 < self.layers.len() {
                self.push(layer + 1, out, cfg, caps);
            }
        }
    }

    /// How many units the head of `layer` may grow to.
    ///
    /// Under incomplete decay the head stops growing once it exactly fills
    /// the room that will be left in the next layer when it gets there.
    fn head_target(&self, layer: usize, cfg: &DobcConfig, caps: &[u32]) -> u32 {
        let cap = caps[layer];
        if cfg.decay_mode == DecayMode::Complete || layer + 1 == self.layers.len() {
            return cap;
        }
        let next_cap = caps[layer + 1];
        let mut room = match self.layers[layer + 1].first() {
            Some(h) => self.head_target(layer + 1, cfg, caps).saturating_sub(h.fill()),
            None => next_cap,
        };
        if room == 0 {
            room = next_cap;
        }
        // queued slots of this layer land before the head does, oldest first
        for s in self.layers[layer].iter().skip(1).rev() {
            room = match room.checked_sub(s.fill()) {
                Some(0) => next_cap,
                Some(r) => r,
                None => match next_cap.saturating_sub(s.fill()) {
                    0 => next_cap,
                    r => r,
                },
            };
        }
        cap.min(room)
    }

    /// Re-expresses this track on `anchor`'s slot boundaries.
    ///
    /// Each anchor slot receives the sum of every slot here that overlaps its
    /// ages, so counters only ever over-approximate. Anchor slots older than
    /// this track's window are dropped.
    fn project_onto(&self, anchor: &Track, cfg: &DobcConfig) -> Track {
        let oldest = self.slots().map(|s| s.oldest_age).max();
        let mut layers = alloc::vec![Vec::new(); self.layers.len()];
        'outer: for (i, layer) in anchor.layers.iter().enumerate() {
            for a in layer {
                if oldest.is_none_or(|o| o < a.oldest_age) {
                    break 'outer;
                }
                let f = Vbf::zeroed(cfg.bit_widths[i], cfg.hash.n as usize);
                let mut slot = Slot::new(f, a.newest_age, a.oldest_age);
                for s in self.slots() {
                    if s.newest_age <= a.oldest_age && s.oldest_age >= a.newest_age {
                        slot.absorb(s);
                    }
                }
                layers[i].push(slot);
            }
        }
        Track { depths: self.depths.clone(), layers }
    }

    /// Per-slot maximum with `other`, which must already share this shape.
    fn max_with(&mut self, other: &Track) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.slots_mut().zip(other.slots()) {
            a.filter.max_in_place(&b.filter);
            a.clamp_floor = min_floor(a.clamp_floor, b.clamp_floor);
        }
        self.depths.extend(other.depths.iter().copied());
    }

    fn slots_mut(&mut self) -> impl Iterator<Item = &mut Slot> {
        self.layers.iter_mut().flatten()
    }

    fn max_depth(&self) -> u64 {
        self.depths.last().copied().unwrap_or(0)
    }
}

/// Decaying onion Bloom clock.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dobc {
    config: Arc<DobcConfig>,
    tracks: Vec<Track>,
}

impl Dobc {
    /// An empty clock at depth 0.
    pub fn new(config: DobcConfig) -> Result<Self, Error> {
        config.validate()?;
        Ok(Self::with_shared(Arc::new(config)))
    }

    pub(crate) fn with_shared(config: Arc<DobcConfig>) -> Self {
        let tracks = alloc::vec![Track::empty(config.num_layers())];
        Self { config, tracks }
    }

    pub(crate) fn from_parts(config: Arc<DobcConfig>, tracks: Vec<Track>) -> Self {
        let mut c = Self { config, tracks };
        c.canonicalize();
        c
    }

    pub fn config(&self) -> &DobcConfig {
        &self.config
    }

    /// An empty clock sharing this clock's configuration.
    pub fn emptied(&self) -> Self {
        Self::with_shared(self.config.clone())
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Union of every track's depths.
    pub fn depths(&self) -> BTreeSet<u64> {
        self.tracks.iter().flat_map(|t| t.depths.iter().copied()).collect()
    }

    pub fn max_depth(&self) -> u64 {
        self.tracks.iter().map(Track::max_depth).max().unwrap_or(0)
    }

    /// States covered by the primary (first) track.
    pub fn window(&self) -> u64 {
        self.tracks[0].window()
    }

    /// Counter storage of all tracks in bits.
    pub fn filter_bits(&self) -> usize {
        self.tracks
            .iter()
            .flat_map(Track::slots)
            .map(|s| s.filter.size_bits())
            .sum()
    }

    /// Records the state with digest `digest` as the newest entry.
    pub fn tick(&self, digest: &Digest) -> Self {
        let unit = unit_filter(digest, &self.config.hash);
        self.tick_unit(&unit)
    }

    pub(crate) fn tick_unit(&self, unit: &Vbf) -> Self {
        let caps = self.config.unit_capacities();
        let mut next = self.clone();
        for t in &mut next.tracks {
            t.tick(unit, &self.config, &caps);
        }
        next.anchor_tracks();
        next.canonicalize();
        next
    }

    /// Reshapes every track onto the most decayed one so that all tracks
    /// evict in lockstep and eventually become identical.
    fn anchor_tracks(&mut self) {
        if self.tracks.len() < 2 {
            return;
        }
        let anchor = anchor_index(&self.tracks);
        let anchor_track = self.tracks[anchor].clone();
        let shape = anchor_track.shape();
        for (i, t) in self.tracks.iter_mut().enumerate() {
            if i != anchor && t.shape() != shape {
                *t = t.project_onto(&anchor_track, &self.config);
            }
        }
    }

    /// Folds tracks with identical slots together and sorts them.
    pub(crate) fn canonicalize(&mut self) {
        self.tracks.sort_by(|a, b| a.layers.cmp(&b.layers).then(a.depths.cmp(&b.depths)));
        let mut out: Vec<Track> = Vec::with_capacity(self.tracks.len());
        for t in self.tracks.drain(..) {
            match out.last_mut() {
                Some(prev) if prev.layers == t.layers => prev.depths.extend(t.depths),
                _ => out.push(t),
            }
        }
        self.tracks = out;
    }
}

/// Most decayed track (smallest window), ties broken by track order.
fn anchor_index(tracks: &[Track]) -> usize {
    tracks
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.window().cmp(&b.window()).then_with(|| a.cmp(b)))
        .map(|(i, _)| i)
        .expect("at least one track")
}
