//! Proposer-side core of one agreement round.

use std::collections::{BTreeMap, BTreeSet};

use super::msg::{DecreeValue, NackReason, ProposalNumber};
use super::params::quorum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynodStage {
    AwaitPromises,
    AwaitAccepts,
    Decided,
}

/// One proposer's progress through a single round. The caller owns message
/// transport and timers; this tracks quorum counting, value adoption, and
/// round-number hints from rejections.
#[derive(Debug, Clone)]
pub struct SynodProposer {
    pub proposer: u32,
    pub epoch: u64,
    pub cohort: BTreeSet<u32>,
    pub pn: ProposalNumber,
    pub own_value: DecreeValue,
    /// The value actually driven: own, or an adopted earlier acceptance.
    pub driving: DecreeValue,
    pub stage: SynodStage,
    promises: BTreeMap<u32, Option<(ProposalNumber, DecreeValue)>>,
    accepts: BTreeSet<u32>,
    /// Highest round observed anywhere, for picking the next round.
    pub max_round_seen: u64,
}

impl SynodProposer {
    /// Starts a round at `round`. The caller sends `Prepare { pn }` to the
    /// whole cohort.
    pub fn start(
        proposer: u32,
        epoch: u64,
        cohort: BTreeSet<u32>,
        value: DecreeValue,
        round: u64,
    ) -> SynodProposer {
        debug_assert!(!cohort.is_empty(), "agreement needs at least one acceptor");
        SynodProposer {
            proposer,
            epoch,
            cohort,
            pn: ProposalNumber { round, proposer },
            own_value: value.clone(),
            driving: value,
            stage: SynodStage::AwaitPromises,
            promises: BTreeMap::new(),
            accepts: BTreeSet::new(),
            max_round_seen: round,
        }
    }

    pub fn quorum_size(&self) -> usize {
        quorum(self.cohort.len())
    }

    /// Records a promise. At quorum, adopts the highest-numbered previously
    /// accepted value (if any promise carried one) and returns the value to
    /// send in `Accept` messages to the whole cohort.
    pub fn on_promise(
        &mut self,
        from: u32,
        pn: ProposalNumber,
        accepted: Option<(ProposalNumber, DecreeValue)>,
    ) -> Option<DecreeValue> {
        if self.stage != SynodStage::AwaitPromises || pn != self.pn || !self.cohort.contains(&from) {
            return None;
        }
        self.promises.insert(from, accepted);
        if self.promises.len() < self.quorum_size() {
            return None;
        }
        let adopted = self
            .promises
            .values()
            .flatten()
            .max_by_key(|(apn, _)| *apn)
            .map(|(_, v)| v.clone());
        self.driving = adopted.unwrap_or_else(|| self.own_value.clone());
        self.stage = SynodStage::AwaitAccepts;
        Some(self.driving.clone())
    }

    /// Records an acceptance; true once a quorum has accepted (decided).
    pub fn on_accepted(&mut self, from: u32, pn: ProposalNumber) -> bool {
        if self.stage != SynodStage::AwaitAccepts || pn != self.pn || !self.cohort.contains(&from) {
            return false;
        }
        self.accepts.insert(from);
        if self.accepts.len() >= self.quorum_size() {
            self.stage = SynodStage::Decided;
            return true;
        }
        false
    }

    /// Folds a rejection into the round-number hint. Returns true when the
    /// rejection belongs to this round (and the round should back off).
    pub fn on_nack(&mut self, pn: Option<ProposalNumber>, reason: &NackReason) -> bool {
        if pn != Some(self.pn) || self.stage == SynodStage::Decided {
            return false;
        }
        if let NackReason::HigherPromised { promised } = reason {
            self.max_round_seen = self.max_round_seen.max(promised.round);
        }
        true
    }

    /// True when the decided value is not the proposer's own candidate.
    pub fn adopted_foreign(&self) -> bool {
        self.driving != self.own_value
    }

    /// Members whose promises were counted this round.
    pub fn promise_set(&self) -> BTreeSet<u32> {
        self.promises.keys().copied().collect()
    }

    /// Members whose acceptances were counted this round.
    pub fn accept_set(&self) -> BTreeSet<u32> {
        self.accepts.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airspace::{FlightPlan, Waypoint};
    use crate::time::SimTime;
    use std::sync::Arc;

    fn value(owner: u32) -> DecreeValue {
        DecreeValue::entry(Arc::new(
            FlightPlan::new_relaxed(
                owner,
                300.0,
                vec![
                    Waypoint { x_nm: 0.0, y_nm: 0.0, alt_ft: 5000.0, time: SimTime::ZERO },
                    Waypoint { x_nm: 9.0, y_nm: 0.0, alt_ft: 5000.0, time: SimTime::from_secs_f64(99.0) },
                ],
            )
            .unwrap(),
        ))
    }

    fn pn(round: u64, proposer: u32) -> ProposalNumber {
        ProposalNumber { round, proposer }
    }

    #[test]
    fn quorum_then_accept_then_decide() {
        let cohort = BTreeSet::from([1, 2, 3]);
        let mut p = SynodProposer::start(9, 0, cohort, value(9), 1);
        assert_eq!(p.quorum_size(), 2);
        assert!(p.on_promise(1, p.pn, None).is_none());
        let drive = p.on_promise(2, p.pn, None).expect("quorum of promises");
        assert_eq!(drive.owner(), 9, "no prior acceptance: drives its own value");
        assert!(!p.on_accepted(1, p.pn));
        assert!(p.on_accepted(3, p.pn));
        assert_eq!(p.stage, SynodStage::Decided);
    }

    #[test]
    fn adopts_highest_numbered_accepted_value() {
        let cohort = BTreeSet::from([1, 2, 3]);
        let mut p = SynodProposer::start(9, 0, cohort, value(9), 5);
        assert!(p.on_promise(1, p.pn, Some((pn(1, 7), value(7)))).is_none());
        let drive = p.on_promise(2, p.pn, Some((pn(2, 8), value(8)))).unwrap();
        assert_eq!(drive.owner(), 8, "highest-numbered prior acceptance wins");
        assert!(p.adopted_foreign());
    }

    #[test]
    fn stale_or_foreign_messages_are_ignored() {
        let cohort = BTreeSet::from([1, 2]);
        let mut p = SynodProposer::start(9, 0, cohort, value(9), 3);
        assert!(p.on_promise(1, pn(2, 9), None).is_none(), "old round");
        assert!(p.on_promise(5, p.pn, None).is_none(), "not in cohort");
        assert!(!p.on_accepted(1, p.pn), "accept before accept stage");
    }

    #[test]
    fn nack_raises_round_hint() {
        let cohort = BTreeSet::from([1, 2, 3]);
        let mut p = SynodProposer::start(9, 0, cohort, value(9), 1);
        let matched =
            p.on_nack(Some(p.pn), &NackReason::HigherPromised { promised: pn(7, 2) });
        assert!(matched);
        assert_eq!(p.max_round_seen, 7);
        assert!(!p.on_nack(Some(pn(99, 9)), &NackReason::Busy), "foreign pn ignored");
    }
}
