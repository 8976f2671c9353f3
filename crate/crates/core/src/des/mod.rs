//! Deterministic discrete-event core.
//!
//! Events are processed in strict `(time, aircraft id, event type, insertion
//! sequence)` order on an integer picosecond clock. The fourth component
//! makes the order total: the three-part key can collide, and collisions
//! must resolve by insertion order for runs to be reproducible.

mod network;
mod queue;
mod scheduler;

pub use network::{DeliveryModel, Network};
pub use queue::{EventKey, EventQueue, EventTypeRank};
pub use scheduler::{EventLogRecord, RunLimits, Scheduler, SchedulerError, TraceHasher};
