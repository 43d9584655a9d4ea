//! A deterministic discrete-event simulation of an eventually consistent
//! key-value store whose replicas reconcile objects by their clocks.
//!
//! Keys live on the replica group picked by a consistent-hash [`Ring`]. A
//! client operation is routed to one reachable replica, which derives the new
//! object, proves it and forwards it to the rest of the group. Receivers verify
//! the proof and then ignore, replace or merge according to
//! [`receive_action`]. Periodic push-pull anti-entropy repairs what the
//! network lost. All randomness comes from the scenario seed, so a run is a
//! pure function of its [`SimSpec`].

mod ring;
pub mod values;

#[cfg(test)]
mod tests;

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hash::{digest, Digest};
use crate::object::Obj;
use crate::proof::{ProofBackend, TranscriptBackend, TranscriptProof, VerifyCache};
use crate::{CausalVerdict, DobcConfig, Error, HashConfig, MergeStrategy};

pub use ring::{key_position, Ring};
pub use values::{builtin_merge_fns, MergeFn};

/// Nodes in `side` cannot exchange messages with the others during
/// `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub start: u64,
    pub end: u64,
    pub side: Vec<u32>,
}

impl Partition {
    fn splits(&self, t: u64, a: u32, b: u32) -> bool {
        (self.start..self.end).contains(&t) && self.side.contains(&a) != self.side.contains(&b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimSpec {
    pub nodes: u32,
    pub vnodes: u32,
    pub replicas: usize,
    /// Generated client operations; 0 leaves the workload to [`SimWorld::schedule`].
    pub ops: usize,
    pub insert_ratio: f64,
    pub get_ratio: f64,
    pub op_interval: u64,
    pub merge_fn: String,
    pub seed: u64,
    pub drop_rate: f64,
    /// Message delays, drawn uniformly.
    pub delays: Vec<u64>,
    pub partitions: Vec<Partition>,
    /// Nodes that forge the clock of every object they send.
    pub byzantine: Vec<u32>,
    pub anti_entropy_period: u64,
    /// Anti-entropy rounds allowed after the last operation before giving up.
    pub max_rounds: u32,
    pub clock: DobcConfig,
}

impl SimSpec {
    /// 8 nodes with 64 virtual nodes each, groups of 3, 200 operations, 5%
    /// loss and maxima-merged clocks.
    pub fn new(seed: u64) -> Self {
        Self {
            nodes: 8,
            vnodes: 64,
            replicas: 3,
            ops: 200,
            insert_ratio: 0.2,
            get_ratio: 0.2,
            op_interval: 2,
            merge_fn: String::from("maximum"),
            seed,
            drop_rate: 0.05,
            delays: alloc::vec![1, 2, 3, 5, 8],
            partitions: Vec::new(),
            byzantine: Vec::new(),
            anti_entropy_period: 10,
            max_rounds: 200,
            clock: DobcConfig::default_shape(HashConfig::new(256, 3, seed)).with_strategy(MergeStrategy::Maxima),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::Scenario(String::from(m)));
        if self.replicas == 0 {
            return bad("replicas must be positive");
        }
        if self.replicas > self.nodes as usize {
            return Err(Error::GroupTooLarge { requested: self.replicas, available: self.nodes as usize });
        }
        if !(0.0..1.0).contains(&self.drop_rate) {
            return bad("drop_rate must be in [0, 1)");
        }
        let ratios = [self.insert_ratio, self.get_ratio];
        if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || self.insert_ratio + self.get_ratio > 1.0 {
            return bad("operation ratios must be probabilities summing to at most 1");
        }
        if self.delays.is_empty() || self.delays.contains(&0) {
            return bad("delays must be a non-empty list of positive ticks");
        }
        if self.op_interval == 0 || self.anti_entropy_period == 0 {
            return bad("op_interval and anti_entropy_period must be positive");
        }
        if self.byzantine.iter().chain(self.partitions.iter().flat_map(|p| &p.side)).any(|&n| n >= self.nodes) {
            return bad("node id out of range");
        }
        if self.partitions.iter().any(|p| p.start >= p.end) {
            return bad("partition window must have start < end");
        }
        self.clock.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpKind {
    Insert { value: Vec<u8> },
    Update { value: Vec<u8> },
    Get,
}

/// A client request entering the system at node `entry`; `leader` pins the
/// replica that handles it when that replica is reachable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientOp {
    pub key: String,
    pub kind: OpKind,
    pub entry: u32,
    pub leader: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Reject,
    Ignore,
    Replace,
    Merge,
}

/// What a replica holding `local` does with a verified (or not) `incoming`.
/// Equal clocks on different objects cannot be ordered, so they merge.
pub fn receive_action(local: Option<&Obj>, incoming: &Obj, verified: bool) -> Result<Action, Error> {
    if !verified {
        return Ok(Action::Reject);
    }
    let Some(local) = local else { return Ok(Action::Replace) };
    if local == incoming {
        return Ok(Action::Ignore);
    }
    Ok(match incoming.clock().compare(local.clock())? {
        CausalVerdict::StrictlyBefore => Action::Ignore,
        CausalVerdict::StrictlyAfter => Action::Replace,
        _ => Action::Merge,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredEntry {
    pub obj: Obj,
    pub proof: TranscriptProof,
    pub merge_fn_id: u32,
    hash: Digest,
}

impl StoredEntry {
    fn new(obj: Obj, proof: TranscriptProof) -> Self {
        let merge_fn_id = values::tag(obj.state()).unwrap_or(0);
        let hash = digest(&obj.encode());
        Self { obj, proof, merge_fn_id, hash }
    }

    pub fn value(&self) -> &[u8] {
        values::value(self.obj.state())
    }

    /// Hash of the object's canonical encoding, exchanged by anti-entropy.
    pub fn hash(&self) -> &Digest {
        &self.hash
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SimReport {
    pub seed: u64,
    pub converged: bool,
    /// Anti-entropy rounds after the last operation and partition until
    /// honest replicas agreed.
    pub rounds_to_converge: u32,
    pub messages: u64,
    pub dropped: u64,
    pub rejected_count: u64,
    pub divergence_keys: Vec<String>,
    pub failed_ops: u64,
    pub final_time: u64,
}

#[derive(Clone, Debug)]
enum Msg {
    Object { key: String, obj: Obj, proof: TranscriptProof },
    Summary { key: String, hash: Digest },
    Request { key: String },
}

#[derive(Clone, Debug)]
enum Event {
    Deliver { from: u32, to: u32, msg: Msg },
    Client(ClientOp),
    AntiEntropy,
}

struct Queued {
    time: u64,
    seq: u64,
    event: Event,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// min-heap on (time, seq)
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

const EVENT_CAP: u64 = 5_000_000;

pub struct SimWorld {
    spec: SimSpec,
    ring: Ring,
    backend: TranscriptBackend,
    merge_ids: BTreeMap<String, u32>,
    samplers: BTreeMap<u32, MergeFn>,
    stores: Vec<BTreeMap<String, StoredEntry>>,
    caches: Vec<VerifyCache>,
    queue: BinaryHeap<Queued>,
    seq: u64,
    now: u64,
    rng: ChaCha8Rng,
    objects_in_flight: u64,
    settle_time: u64,
    rounds: u32,
    report: SimReport,
    gets: Vec<(u64, String, Option<Vec<u8>>)>,
    log: Vec<String>,
}

impl SimWorld {
    pub fn new(spec: SimSpec) -> Result<Self, Error> {
        Self::with_merge_fns(spec, &builtin_merge_fns())
    }

    /// A world whose keys may use any of `merges`. Each is checked for
    /// commutativity and idempotence first.
    pub fn with_merge_fns(spec: SimSpec, merges: &[MergeFn]) -> Result<Self, Error> {
        spec.validate()?;
        let registry = values::registry(merges)?;
        let mut check_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x6d65_7267_6500);
        let mut merge_ids = BTreeMap::new();
        let mut samplers = BTreeMap::new();
        for m in merges {
            let id = registry.id_of(m.name).expect("just registered");
            values::check_merge_fn(&registry, id, m, &mut check_rng, 64)?;
            merge_ids.insert(String::from(m.name), id);
            samplers.insert(id, *m);
        }
        if !merge_ids.contains_key(&spec.merge_fn) {
            return Err(Error::Scenario(format!("unknown merge function {}", spec.merge_fn)));
        }
        let n = spec.nodes as usize;
        let mut world = Self {
            ring: Ring::new(spec.nodes, spec.vnodes)?,
            backend: TranscriptBackend::new(Arc::new(registry), spec.clock.clone()),
            merge_ids,
            samplers,
            stores: alloc::vec![BTreeMap::new(); n],
            caches: alloc::vec![VerifyCache::new(); n],
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            objects_in_flight: 0,
            settle_time: spec.partitions.iter().map(|p| p.end).max().unwrap_or(0),
            rounds: 0,
            report: SimReport { seed: spec.seed, ..SimReport::default() },
            gets: Vec::new(),
            log: Vec::new(),
            spec,
        };
        world.generate_ops();
        world.push(world.spec.anti_entropy_period, Event::AntiEntropy);
        Ok(world)
    }

    fn generate_ops(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed ^ 0x6f70_7300);
        let merge = self.samplers[&self.merge_ids[&self.spec.merge_fn]];
        let mut keys = 0usize;
        for i in 0..self.spec.ops {
            let t = (i as u64 + 1) * self.spec.op_interval;
            let r: f64 = rng.gen();
            let entry = rng.gen_range(0..self.spec.nodes);
            let kind = if keys == 0 || r < self.spec.insert_ratio {
                keys += 1;
                OpKind::Insert { value: (merge.sample)(&mut rng) }
            } else if r < self.spec.insert_ratio + self.spec.get_ratio {
                OpKind::Get
            } else {
                OpKind::Update { value: (merge.sample)(&mut rng) }
            };
            let k = match kind {
                OpKind::Insert { .. } => keys - 1,
                _ => rng.gen_range(0..keys),
            };
            self.schedule(t, ClientOp { key: format!("k{k}"), kind, entry, leader: None });
        }
    }

    /// Queues a client operation. The run does not settle before `time`.
    pub fn schedule(&mut self, time: u64, op: ClientOp) {
        self.settle_time = self.settle_time.max(time);
        self.push(time, Event::Client(op));
    }

    fn push(&mut self, time: u64, event: Event) {
        self.seq += 1;
        self.queue.push(Queued { time, seq: self.seq, event });
    }

    pub fn spec(&self) -> &SimSpec {
        &self.spec
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn backend(&self) -> &TranscriptBackend {
        &self.backend
    }

    pub fn store(&self, node: u32) -> &BTreeMap<String, StoredEntry> {
        &self.stores[node as usize]
    }

    /// Results of every `Get`: time, key and the value found, if any.
    pub fn gets(&self) -> &[(u64, String, Option<Vec<u8>>)] {
        &self.gets
    }

    pub fn log(&self) -> &[String] {
        &self.log
    }

    pub fn merge_fn_id(&self, name: &str) -> Option<u32> {
        self.merge_ids.get(name).copied()
    }

    fn is_byzantine(&self, node: u32) -> bool {
        self.spec.byzantine.contains(&node)
    }

    fn partitioned(&self, a: u32, b: u32) -> bool {
        self.spec.partitions.iter().any(|p| p.splits(self.now, a, b))
    }

    fn group(&self, key: &str) -> Vec<u32> {
        self.ring.replica_group(key.as_bytes(), self.spec.replicas).expect("replicas validated")
    }

    /// Runs to quiescence: honest replicas agree and no object is in flight,
    /// checked at each anti-entropy round once all operations and partitions
    /// are over. Gives up after `max_rounds` such rounds.
    pub fn run(&mut self) -> SimReport {
        let mut events = 0u64;
        while let Some(q) = self.queue.pop() {
            self.now = q.time;
            events += 1;
            if events > EVENT_CAP {
                self.log.push(format!("t={} event cap reached", self.now));
                self.report.divergence_keys = self.divergent_keys();
                break;
            }
            match q.event {
                Event::Deliver { from, to, msg } => self.deliver(from, to, msg),
                Event::Client(op) => self.client(op),
                Event::AntiEntropy => {
                    if self.now > self.settle_time {
                        let divergent = self.divergent_keys();
                        if divergent.is_empty() && self.objects_in_flight == 0 {
                            self.report.converged = true;
                            self.report.divergence_keys.clear();
                            break;
                        }
                        if self.rounds >= self.spec.max_rounds {
                            self.log.push(format!("t={} gave up with {} divergent keys", self.now, divergent.len()));
                            self.report.divergence_keys = divergent;
                            break;
                        }
                        self.rounds += 1;
                    }
                    self.anti_entropy();
                    self.push(self.now + self.spec.anti_entropy_period, Event::AntiEntropy);
                }
            }
        }
        self.report.rounds_to_converge = self.rounds;
        self.report.final_time = self.now;
        self.report.clone()
    }

    /// Keys on which some honest member of the replica group is missing the
    /// object or holds a different one.
    pub fn divergent_keys(&self) -> Vec<String> {
        let honest: Vec<u32> = (0..self.spec.nodes).filter(|&n| !self.is_byzantine(n)).collect();
        let keys: BTreeSet<&String> = honest.iter().flat_map(|&n| self.stores[n as usize].keys()).collect();
        keys.into_iter()
            .filter(|key| {
                let held: Vec<Option<&Digest>> = self
                    .group(key)
                    .into_iter()
                    .filter(|n| !self.is_byzantine(*n))
                    .map(|n| self.stores[n as usize].get(*key).map(StoredEntry::hash))
                    .collect();
                held.iter().any(|h| h.is_none() || *h != held[0])
            })
            .cloned()
            .collect()
    }

    fn send(&mut self, from: u32, to: u32, msg: Msg) {
        self.report.messages += 1;
        if self.rng.gen_bool(self.spec.drop_rate) {
            self.report.dropped += 1;
            return;
        }
        let delay = self.spec.delays[self.rng.gen_range(0..self.spec.delays.len())];
        let msg = match msg {
            Msg::Object { key, obj, proof } if self.is_byzantine(from) => {
                let forged = obj.clock().tick(obj.digest());
                Msg::Object { key, obj: obj.with_clock(forged), proof }
            }
            m => m,
        };
        if self.counts_in_flight(from, to, &msg) {
            self.objects_in_flight += 1;
        }
        self.push(self.now + delay, Event::Deliver { from, to, msg });
    }

    /// Objects between honest nodes can still change honest state; anything
    /// touching a forging node cannot.
    fn counts_in_flight(&self, from: u32, to: u32, msg: &Msg) -> bool {
        matches!(msg, Msg::Object { .. }) && !self.is_byzantine(from) && !self.is_byzantine(to)
    }

    fn forward(&mut self, node: u32, key: &str) {
        let e = self.stores[node as usize][key].clone();
        for peer in self.group(key) {
            if peer != node {
                let msg = Msg::Object { key: String::from(key), obj: e.obj.clone(), proof: e.proof.clone() };
                self.send(node, peer, msg);
            }
        }
    }

    fn client(&mut self, op: ClientOp) {
        let t = self.now;
        let reachable: Vec<u32> =
            self.group(&op.key).into_iter().filter(|&n| !self.partitioned(op.entry, n)).collect();
        if reachable.is_empty() {
            self.fail(format!("t={t} {:?} {} from n{}: no reachable replica", op.kind, op.key, op.entry));
            return;
        }
        if op.kind == OpKind::Get {
            let found = reachable.iter().find_map(|&n| self.stores[n as usize].get(&op.key));
            let value = found.map(|e| e.value().to_vec());
            self.log.push(format!("t={t} get {} -> {:?}", op.key, value));
            self.gets.push((t, op.key, value));
            return;
        }
        let leader = match op.leader {
            Some(l) if reachable.contains(&l) => l,
            _ => reachable[self.rng.gen_range(0..reachable.len())],
        };
        let derived = self.derive(&op, leader);
        match derived {
            Ok((proof, obj)) => {
                self.log.push(format!("t={t} {:?} {} at n{leader}", op.kind, op.key));
                self.stores[leader as usize].insert(op.key.clone(), StoredEntry::new(obj, proof));
                self.forward(leader, &op.key);
            }
            Err(why) => self.fail(format!("t={t} {:?} {} at n{leader}: {why}", op.kind, op.key)),
        }
    }

    fn derive(&self, op: &ClientOp, leader: u32) -> Result<(TranscriptProof, Obj), &'static str> {
        let local = self.stores[leader as usize].get(&op.key);
        match (&op.kind, local) {
            (OpKind::Insert { .. }, Some(_)) => Err("key exists"),
            (OpKind::Update { .. }, None) => Err("no local object"),
            (OpKind::Insert { value }, None) => {
                let tag = self.merge_ids[&self.spec.merge_fn];
                let obj = Obj::create(values::state(tag, value), self.backend.config()).map_err(|_| "create failed")?;
                Ok((self.backend.prove_genesis(&obj), obj))
            }
            (OpKind::Update { value }, Some(e)) => {
                let obj = Obj::mutate(self.backend.registry(), values::SET_FN, &[&e.obj], value)
                    .map_err(|_| "mutate failed")?;
                let proof = self.backend.prove_step(&[&e.proof], values::SET_FN, value, &[&e.obj], &obj);
                proof.map(|p| (p, obj)).map_err(|_| "proof failed")
            }
            (OpKind::Get, _) => Err("get derives nothing"),
        }
    }

    fn fail(&mut self, line: String) {
        self.report.failed_ops += 1;
        self.log.push(line);
    }

    fn deliver(&mut self, from: u32, to: u32, msg: Msg) {
        if self.counts_in_flight(from, to, &msg) {
            self.objects_in_flight -= 1;
        }
        if self.partitioned(from, to) {
            self.report.dropped += 1;
            return;
        }
        let local = |key: &str| self.stores[to as usize].get(key).cloned();
        match msg {
            Msg::Object { key, obj, proof } => self.receive(to, key, obj, proof),
            Msg::Summary { key, hash } => match local(&key) {
                None => self.send(to, from, Msg::Request { key }),
                Some(e) if e.hash != hash => {
                    self.send(to, from, Msg::Object { key: key.clone(), obj: e.obj, proof: e.proof });
                    self.send(to, from, Msg::Request { key });
                }
                Some(_) => {}
            },
            Msg::Request { key } => {
                if let Some(e) = local(&key) {
                    self.send(to, from, Msg::Object { key, obj: e.obj, proof: e.proof });
                }
            }
        }
    }

    fn receive(&mut self, node: u32, key: String, obj: Obj, proof: TranscriptProof) {
        let t = self.now;
        let verified = self.backend.verify_cached(&obj, &proof, &mut self.caches[node as usize]);
        let local = self.stores[node as usize].get(&key);
        let action = match receive_action(local.map(|e| &e.obj), &obj, verified) {
            Ok(a) => a,
            Err(e) => {
                self.log.push(format!("t={t} n{node} {key}: {e}"));
                return;
            }
        };
        match action {
            Action::Reject => {
                self.report.rejected_count += 1;
                self.log.push(format!("t={t} n{node} rejected {key}"));
            }
            Action::Ignore => {}
            Action::Replace => {
                self.stores[node as usize].insert(key, StoredEntry::new(obj, proof));
            }
            Action::Merge => {
                let local = local.expect("merge needs a local object").clone();
                let tag = values::tag(obj.state()).unwrap_or(0).min(local.merge_fn_id);
                let merged = Obj::mutate(self.backend.registry(), tag, &[&obj, &local.obj], &[]).and_then(|m| {
                    let p = self.backend.prove_step(&[&proof, &local.proof], tag, &[], &[&obj, &local.obj], &m)?;
                    Ok((m, p))
                });
                match merged {
                    Ok((m, p)) => {
                        self.stores[node as usize].insert(key.clone(), StoredEntry::new(m, p));
                        self.forward(node, &key);
                    }
                    Err(e) => self.log.push(format!("t={t} n{node} {key}: merge with function {tag} failed: {e}")),
                }
            }
        }
    }

    fn anti_entropy(&mut self) {
        for node in 0..self.spec.nodes {
            let entries: Vec<(String, Digest)> =
                self.stores[node as usize].iter().map(|(k, e)| (k.clone(), e.hash)).collect();
            for (key, hash) in entries {
                let peers: Vec<u32> = self.group(&key).into_iter().filter(|&p| p != node).collect();
                if peers.is_empty() {
                    continue;
                }
                let peer = peers[self.rng.gen_range(0..peers.len())];
                self.send(node, peer, Msg::Summary { key, hash });
            }
        }
    }
}
