//! Acceptor-side state for one sector membership.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::airspace::FlightPlan;
use crate::des::TraceHasher;

use super::msg::{DecreeValue, NackReason, Payload, ProposalNumber};

/// Reply to a `PREPARE` or `ACCEPT`.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Send(Payload),
    Nack(NackReason),
}

/// Outcome of applying a `LEARN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnOutcome {
    /// Applied now; acknowledge with `LEARNT`.
    Applied,
    /// Stale epoch, already applied; acknowledge idempotently.
    AlreadyApplied,
    /// Future epoch; cannot apply until the gap closes. No reply.
    Future,
}

/// Outcome of an `AK`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AkOutcome {
    /// Acknowledge with `ACK` (freed now or already free).
    Ack,
    /// The corresponding `LEARN` has not been applied yet. No reply.
    NotLearned,
}

/// Per-sector consensus state of one member: its admitted-plan view, its
/// acceptor registers, and the dissemination gate.
///
/// `promised` is monotone for the life of the membership; `accepted` is
/// per-epoch and clears when a decision applies. While `tap_busy_epoch` is
/// set the member refuses to vote, which serializes the next admission
/// behind the current dissemination round.
#[derive(Debug, Clone)]
pub struct SectorMemberState {
    pub epoch: u64,
    pub view: BTreeMap<u32, Arc<FlightPlan>>,
    pub promised: Option<ProposalNumber>,
    pub accepted: Option<(ProposalNumber, DecreeValue)>,
    /// The decided epoch whose final acknowledge round is still open.
    pub tap_busy_epoch: Option<u64>,
    /// Audit trail: every promised number, in order.
    pub promised_log: Vec<ProposalNumber>,
    /// Owners whose tracking state was purged by an exit decree.
    pub purged: Vec<u32>,
}

impl SectorMemberState {
    pub fn new(epoch: u64, view: BTreeMap<u32, Arc<FlightPlan>>) -> Self {
        SectorMemberState {
            epoch,
            view,
            promised: None,
            accepted: None,
            tap_busy_epoch: None,
            promised_log: Vec::new(),
            purged: Vec::new(),
        }
    }

    /// Members are the owners of admitted plans.
    pub fn members(&self) -> impl Iterator<Item = u32> + '_ {
        self.view.keys().copied()
    }

    pub fn view_plans(&self) -> Vec<Arc<FlightPlan>> {
        self.view.values().cloned().collect()
    }

    pub fn round_floor(&self) -> u64 {
        self.promised.map_or(0, |p| p.round)
    }

    /// Order-independent digest of the admitted view.
    pub fn digest(&self) -> u64 {
        let mut h = TraceHasher::new();
        h.write_u64(self.epoch);
        for (owner, plan) in &self.view {
            h.write_u64(*owner as u64);
            h.write_u64(plan.speed_kt.to_bits());
            for w in &plan.waypoints {
                h.write_u64(w.x_nm.to_bits());
                h.write_u64(w.y_nm.to_bits());
                h.write_u64(w.alt_ft.to_bits());
                h.write_u64(w.time.as_ps());
            }
        }
        h.finish()
    }

    fn gate(&self, msg_epoch: u64) -> Option<NackReason> {
        if msg_epoch != self.epoch {
            return Some(NackReason::WrongEpoch { current: self.epoch });
        }
        if self.tap_busy_epoch.is_some() {
            return Some(NackReason::Busy);
        }
        None
    }

    pub fn handle_prepare(&mut self, msg_epoch: u64, pn: ProposalNumber) -> Reply {
        if let Some(reason) = self.gate(msg_epoch) {
            return Reply::Nack(reason);
        }
        if let Some(promised) = self.promised {
            if pn < promised {
                return Reply::Nack(NackReason::HigherPromised { promised });
            }
        }
        if self.promised != Some(pn) {
            self.promised = Some(pn);
            self.promised_log.push(pn);
        }
        Reply::Send(Payload::Promise { pn, accepted: self.accepted.clone() })
    }

    pub fn handle_accept(&mut self, msg_epoch: u64, pn: ProposalNumber, value: DecreeValue) -> Reply {
        if let Some(reason) = self.gate(msg_epoch) {
            return Reply::Nack(reason);
        }
        if let Some(promised) = self.promised {
            if pn < promised {
                return Reply::Nack(NackReason::HigherPromised { promised });
            }
        }
        if self.promised != Some(pn) {
            self.promised = Some(pn);
            self.promised_log.push(pn);
        }
        self.accepted = Some((pn, value));
        Reply::Send(Payload::Accepted { pn })
    }

    pub fn handle_learn(&mut self, msg_epoch: u64, value: &DecreeValue) -> LearnOutcome {
        if msg_epoch < self.epoch {
            return LearnOutcome::AlreadyApplied;
        }
        if msg_epoch > self.epoch {
            return LearnOutcome::Future;
        }
        self.apply_decision(value);
        LearnOutcome::Applied
    }

    /// Applies a decided value and opens the acknowledge gate for it.
    pub fn apply_decision(&mut self, value: &DecreeValue) {
        if value.exit {
            self.view.remove(&value.owner());
            self.purged.push(value.owner());
        } else {
            self.view.insert(value.owner(), value.plan.clone());
        }
        self.tap_busy_epoch = Some(self.epoch);
        self.epoch += 1;
        self.accepted = None;
    }

    pub fn handle_ak(&mut self, msg_epoch: u64) -> AkOutcome {
        if self.tap_busy_epoch == Some(msg_epoch) {
            self.tap_busy_epoch = None;
            return AkOutcome::Ack;
        }
        if msg_epoch < self.epoch {
            // That decision is already applied and (here) already freed.
            return AkOutcome::Ack;
        }
        AkOutcome::NotLearned
    }

    /// Audit: the promised sequence never decreases.
    pub fn promised_monotone(&self) -> bool {
        self.promised_log.windows(2).all(|w| w[0] <= w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airspace::Waypoint;
    use crate::time::SimTime;

    fn plan(owner: u32) -> Arc<FlightPlan> {
        Arc::new(
            FlightPlan::new_relaxed(
                owner,
                300.0,
                vec![
                    Waypoint { x_nm: 0.0, y_nm: 0.0, alt_ft: 5000.0, time: SimTime::ZERO },
                    Waypoint { x_nm: 1.0, y_nm: 0.0, alt_ft: 5000.0, time: SimTime::from_secs_f64(12.0) },
                ],
            )
            .unwrap(),
        )
    }

    fn pn(round: u64, proposer: u32) -> ProposalNumber {
        ProposalNumber { round, proposer }
    }

    #[test]
    fn lower_proposals_are_rejected() {
        let mut m = SectorMemberState::new(0, BTreeMap::new());
        assert!(matches!(m.handle_prepare(0, pn(2, 9)), Reply::Send(Payload::Promise { .. })));
        match m.handle_prepare(0, pn(1, 4)) {
            Reply::Nack(NackReason::HigherPromised { promised }) => assert_eq!(promised, pn(2, 9)),
            other => panic!("expected higher-promised nack, got {other:?}"),
        }
        assert!(matches!(m.handle_accept(0, pn(1, 4), DecreeValue::entry(plan(4))), Reply::Nack(_)));
    }

    #[test]
    fn promise_reports_accepted_value() {
        let mut m = SectorMemberState::new(0, BTreeMap::new());
        m.handle_prepare(0, pn(1, 1));
        m.handle_accept(0, pn(1, 1), DecreeValue::entry(plan(1)));
        match m.handle_prepare(0, pn(2, 2)) {
            Reply::Send(Payload::Promise { accepted: Some((apn, v)), .. }) => {
                assert_eq!(apn, pn(1, 1));
                assert_eq!(v.owner(), 1);
            }
            other => panic!("expected promise with accepted value, got {other:?}"),
        }
    }

    #[test]
    fn wrong_epoch_is_rejected_and_learn_advances() {
        let mut m = SectorMemberState::new(0, BTreeMap::new());
        assert_eq!(m.handle_learn(0, &DecreeValue::entry(plan(5))), LearnOutcome::Applied);
        assert_eq!(m.epoch, 1);
        assert!(m.view.contains_key(&5));
        assert!(matches!(
            m.handle_prepare(0, pn(1, 2)),
            Reply::Nack(NackReason::WrongEpoch { current: 1 })
        ));
        // Busy until the acknowledge round closes.
        assert!(matches!(m.handle_prepare(1, pn(1, 2)), Reply::Nack(NackReason::Busy)));
        assert_eq!(m.handle_ak(0), AkOutcome::Ack);
        assert!(matches!(m.handle_prepare(1, pn(1, 2)), Reply::Send(_)));
    }

    #[test]
    fn stale_learn_and_ak_are_idempotent() {
        let mut m = SectorMemberState::new(0, BTreeMap::new());
        let v = DecreeValue::entry(plan(5));
        assert_eq!(m.handle_learn(0, &v), LearnOutcome::Applied);
        assert_eq!(m.handle_ak(0), AkOutcome::Ack);
        assert_eq!(m.handle_learn(0, &v), LearnOutcome::AlreadyApplied);
        assert_eq!(m.handle_ak(0), AkOutcome::Ack);
        assert_eq!(m.handle_learn(5, &v), LearnOutcome::Future);
        assert_eq!(m.handle_ak(5), AkOutcome::NotLearned);
    }

    #[test]
    fn exit_decree_removes_and_purges() {
        let mut m = SectorMemberState::new(3, BTreeMap::from([(5, plan(5)), (6, plan(6))]));
        m.handle_learn(3, &DecreeValue::exit(plan(5)));
        assert!(!m.view.contains_key(&5));
        assert_eq!(m.purged, vec![5]);
        assert_eq!(m.epoch, 4);
    }

    #[test]
    fn promised_is_monotone_across_epochs() {
        let mut m = SectorMemberState::new(0, BTreeMap::new());
        m.handle_prepare(0, pn(3, 1));
        m.handle_learn(0, &DecreeValue::entry(plan(1)));
        m.handle_ak(0);
        // New epoch: a smaller proposal number still loses to the old promise.
        assert!(matches!(m.handle_prepare(1, pn(2, 2)), Reply::Nack(_)));
        assert!(matches!(m.handle_prepare(1, pn(4, 2)), Reply::Send(_)));
        assert!(m.promised_monotone());
    }
}
