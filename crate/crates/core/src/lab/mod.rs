//! Ground truth and baselines for measuring clock accuracy.

mod accuracy;
mod baseline;
mod dag;
mod events;
mod workload;

pub use accuracy::{measure_accuracy, sample_pairs, ClockKind, FpReport, ALL_PAIRS_LIMIT, SAMPLED_PAIRS};
pub use baseline::{LamportClock, LamportEvent, VcEvent, VectorClock};
pub use dag::{DagNode, DerivationDag, ObjectId};
pub use events::{enumerate_executions, happens_before, lamport_clocks, vector_clocks, Event, EventKind, Execution};
pub use workload::{generate_workload, Workload, WorkloadSpec};
