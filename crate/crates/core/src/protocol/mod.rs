//! The three-phase sector-admission protocol.
//!
//! Admission runs in three sequential phases per sector entry:
//!
//! * **Discovery**: the entrant broadcasts `INIT_REQ`; occupants answer
//!   `REQ_ACK` with their current view of the admitted plan set. A majority
//!   of the occupant cohort must answer before the entrant may proceed. An
//!   empty sector admits immediately.
//! * **Agreement**: one single-decree round (`PREPARE`/`PROMISE`,
//!   `ACCEPT`/`ACCEPTED`, `NACK` on rejection) decides the admitted value.
//!   A proposer that learns of an already-accepted value must re-propose
//!   the highest-numbered one instead of its own.
//! * **Dissemination**: two acknowledge rounds (`LEARN`/`LEARNT`, then
//!   `AK`/`ACK`) guarantee every member holds the decided value before the
//!   sector's next admission can decide.
//!
//! Exits reuse the last two phases with an exit flag, proposing removal;
//! discovery is unnecessary because the exiting aircraft is already a
//! member. A denied entrant aborts through the same exit machinery,
//! purging itself from occupant tracking state.
//!
//! Sector decisions are serialized by an epoch counter (the number of
//! applied decisions). Acceptor state is per epoch, and stale-epoch traffic
//! is rejected with `NACK`, which forces the proposer to refresh its view.

mod member;
mod msg;
mod params;
mod synod;

pub use member::{AkOutcome, LearnOutcome, Reply, SectorMemberState};
pub use msg::{DecreeValue, Message, NackReason, Payload, ProposalNumber};
pub use params::{nack_backoff, quorum, ParamError, ProtocolParams, PARAM_NAMES};
pub use synod::{SynodProposer, SynodStage};
