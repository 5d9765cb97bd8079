//! The polymorphic receiver: split the stream into buffers, classify each
//! buffer from its head, reconfigure the demodulator, and score recovered
//! bits against a receiver that knows the schedule.

mod catalog;
mod receiver;
mod report;

pub use catalog::{CatalogEntry, ClassCatalog, ExperimentKind, SINGLE_CARRIER_SHIFTS_HZ};
pub use receiver::{
    classify_buffer, confusion_matrix, decide_buffers, misdemodulated_samples, oracle_receive, poly_receive,
    poly_receive_detailed, AlwaysWrongClassifier, BufferClassifier, BufferDecision, PerfectClassifier, ReceiverRun,
    RfnetClassifier,
};
pub use report::{ClassStats, ReportRow, ThroughputReport};
