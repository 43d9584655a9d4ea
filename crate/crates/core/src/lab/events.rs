//! Event-level executions of a small message-passing system.

use alloc::vec;
use alloc::vec::Vec;

use super::baseline::{LamportClock, LamportEvent, VcEvent, VectorClock};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Local,
    Send { to: usize },
    /// Receipt of the message sent by event `send`.
    Recv { send: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub node: usize,
    pub kind: EventKind,
}

/// A totally ordered trace of events across `nodes` processes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution {
    pub nodes: usize,
    pub events: Vec<Event>,
}

/// Calls `f` once for every execution of exactly `len` events.
///
/// At each step any node may do a local step, send to any other node, or
/// receive any message addressed to it that is still in flight. Messages may
/// stay undelivered.
pub fn enumerate_executions(nodes: usize, len: usize, mut f: impl FnMut(&Execution)) {
    let mut exec = Execution { nodes, events: Vec::with_capacity(len) };
    let mut delivered = Vec::new();
    walk(&mut exec, len, &mut delivered, &mut f);
}

fn walk(
    exec: &mut Execution,
    len: usize,
    delivered: &mut Vec<usize>,
    f: &mut impl FnMut(&Execution),
) {
    if exec.events.len() == len {
        f(exec);
        return;
    }
    for node in 0..exec.nodes {
        let mut options = vec![EventKind::Local];
        options.extend((0..exec.nodes).filter(|&t| t != node).map(|to| EventKind::Send { to }));
        for (i, e) in exec.events.iter().enumerate() {
            if e.kind == (EventKind::Send { to: node }) && !delivered.contains(&i) {
                options.push(EventKind::Recv { send: i });
            }
        }
        for kind in options {
            exec.events.push(Event { node, kind });
            if let EventKind::Recv { send } = kind {
                delivered.push(send);
            }
            walk(exec, len, delivered, f);
            if let EventKind::Recv { .. } = kind {
                delivered.pop();
            }
            exec.events.pop();
        }
    }
}

/// `hb[i][j]` iff event `i` happens before event `j`: the transitive closure of
/// program order and send-to-receive edges.
pub fn happens_before(exec: &Execution) -> Vec<Vec<bool>> {
    let n = exec.events.len();
    let mut hb = vec![vec![false; n]; n];
    let mut last = vec![None; exec.nodes];
    for (j, e) in exec.events.iter().enumerate() {
        let mut direct: Vec<usize> = last[e.node].into_iter().collect();
        if let EventKind::Recv { send } = e.kind {
            direct.push(send);
        }
        for p in direct {
            hb[p][j] = true;
            for row in &mut hb[..p] {
                if row[p] {
                    row[j] = true;
                }
            }
        }
        last[e.node] = Some(j);
    }
    hb
}

pub fn vector_clocks(exec: &Execution) -> Vec<VectorClock> {
    let mut node = vec![VectorClock::new(exec.nodes); exec.nodes];
    let mut out: Vec<VectorClock> = Vec::with_capacity(exec.events.len());
    for e in &exec.events {
        let ev = match e.kind {
            EventKind::Local => VcEvent::Local,
            EventKind::Send { .. } => VcEvent::Send,
            EventKind::Recv { send } => VcEvent::Recv(&out[send]),
        };
        let next = node[e.node].step(e.node, ev).expect("node index in range");
        node[e.node] = next.clone();
        out.push(next);
    }
    out
}

pub fn lamport_clocks(exec: &Execution) -> Vec<LamportClock> {
    let mut node = vec![LamportClock::default(); exec.nodes];
    let mut out: Vec<LamportClock> = Vec::with_capacity(exec.events.len());
    for e in &exec.events {
        let ev = match e.kind {
            EventKind::Local => LamportEvent::Local,
            EventKind::Send { .. } => LamportEvent::Send,
            EventKind::Recv { send } => LamportEvent::Recv(out[send]),
        };
        node[e.node] = node[e.node].step(ev);
        out.push(node[e.node]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CausalVerdict;

    #[test]
    fn counts_small_executions() {
        // 2 nodes, 2 events: first event is local or send (2 nodes x 2);
        // second adds a receive option after a send.
        let mut count = 0;
        enumerate_executions(2, 2, |_| count += 1);
        assert_eq!(count, 2 * 4 + 2 * 5);
    }

    #[test]
    fn message_chain() {
        let exec = Execution {
            nodes: 3,
            events: vec![
                Event { node: 0, kind: EventKind::Send { to: 1 } },
                Event { node: 2, kind: EventKind::Local },
                Event { node: 1, kind: EventKind::Recv { send: 0 } },
                Event { node: 1, kind: EventKind::Local },
            ],
        };
        let hb = happens_before(&exec);
        assert!(hb[0][2] && hb[0][3] && hb[2][3]);
        assert!(!hb[1][3] && !hb[0][1]);
        let vc = vector_clocks(&exec);
        assert_eq!(vc[3].entries(), [1, 2, 0]);
        assert_eq!(vc[3].compare(&vc[0]).unwrap(), CausalVerdict::StrictlyAfter);
        assert_eq!(vc[3].compare(&vc[1]).unwrap(), CausalVerdict::Concurrent);
        let lc = lamport_clocks(&exec);
        assert_eq!(lc.iter().map(|c| c.0).collect::<Vec<_>>(), [1, 1, 2, 3]);
    }
}
