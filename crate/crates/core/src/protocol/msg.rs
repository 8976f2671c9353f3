//! Protocol messages and decree values.

use std::sync::Arc;

use crate::airspace::{FlightPlan, SectorId};
use crate::des::TraceHasher;

/// Totally ordered proposal number: round first, proposer id as tiebreaker.
/// Unique per `(proposer, round)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProposalNumber {
    pub round: u64,
    pub proposer: u32,
}

impl std::fmt::Display for ProposalNumber {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.round, self.proposer)
    }
}

/// The unit of agreement: admit a plan into the sector's view, or (with the
/// exit flag) remove the owner's plan and purge their tracking state.
#[derive(Debug, Clone, PartialEq)]
pub struct DecreeValue {
    pub plan: Arc<FlightPlan>,
    /// Set when the plan was verified collision free against the view it
    /// was constructed from.
    pub certified: bool,
    pub exit: bool,
}

impl DecreeValue {
    pub fn entry(plan: Arc<FlightPlan>) -> DecreeValue {
        DecreeValue { plan, certified: true, exit: false }
    }

    pub fn exit(plan: Arc<FlightPlan>) -> DecreeValue {
        DecreeValue { plan, certified: false, exit: true }
    }

    pub fn owner(&self) -> u32 {
        self.plan.owner
    }

    pub fn digest_into(&self, h: &mut TraceHasher) {
        h.write_u64(self.plan.owner as u64);
        h.write_u64(self.exit as u64);
        h.write_u64(self.plan.speed_kt.to_bits());
        for w in &self.plan.waypoints {
            h.write_u64(w.x_nm.to_bits());
            h.write_u64(w.y_nm.to_bits());
            h.write_u64(w.alt_ft.to_bits());
            h.write_u64(w.time.as_ps());
        }
    }
}

/// Reasons an acceptor refuses a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NackReason {
    /// A higher proposal number was already promised this epoch.
    HigherPromised { promised: ProposalNumber },
    /// The message's epoch does not match the acceptor's.
    WrongEpoch { current: u64 },
    /// The acceptor is mid-dissemination and may not vote yet.
    Busy,
    /// The recipient is not a member of the sector.
    NotMember,
}

/// Kind-specific message content.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    InitReq,
    ReqAck {
        /// The responder's full admitted-plan view.
        view: Vec<Arc<FlightPlan>>,
        /// Highest promised round, so new proposers can start above it.
        round_floor: u64,
    },
    Prepare { pn: ProposalNumber },
    Promise { pn: ProposalNumber, accepted: Option<(ProposalNumber, DecreeValue)> },
    Accept { pn: ProposalNumber, value: DecreeValue },
    Accepted { pn: ProposalNumber },
    Nack { pn: Option<ProposalNumber>, reason: NackReason },
    Learn { value: DecreeValue },
    Learnt,
    Ak,
    Ack,
}

impl Payload {
    /// Wire name of the message kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::InitReq => "INIT_REQ",
            Payload::ReqAck { .. } => "REQ_ACK",
            Payload::Prepare { .. } => "PREPARE",
            Payload::Promise { .. } => "PROMISE",
            Payload::Accept { .. } => "ACCEPT",
            Payload::Accepted { .. } => "ACCEPTED",
            Payload::Nack { .. } => "NACK",
            Payload::Learn { .. } => "LEARN",
            Payload::Learnt => "LEARNT",
            Payload::Ak => "AK",
            Payload::Ack => "ACK",
        }
    }
}

/// A protocol message between two aircraft, scoped to one sector epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    /// Unique message id (dedup key).
    pub id: u64,
    pub from: u32,
    pub sector: SectorId,
    /// Number of decisions applied in `sector` when this was sent.
    pub epoch: u64,
    pub payload: Payload,
}
