//! The simulation world: flights, sector registry, protocol drivers.
//!
//! Each aircraft owns a consensus engine (acceptor state per sector
//! membership plus one active protocol context). Engines interact only
//! through messages on the shared event queue; the world owns the queue,
//! the sector occupancy registry used for broadcast fan-out, and the
//! metrics. The loop is strictly single threaded.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::airspace::{sectors_crossed, FlightPlan, SectorCrossing, SectorGrid, SectorId};
use crate::conflict::{
    backtrack_speeds_with, conflict_in_sector, scan_nmacs, CheckBudget, ConflictReport,
    SeparationConfig,
};
use crate::des::{
    DeliveryModel, EventKey, EventLogRecord, EventTypeRank, Network, RunLimits, Scheduler,
    TraceHasher,
};
use crate::metrics::RunMetrics;
use crate::protocol::{
    nack_backoff, AkOutcome, DecreeValue, LearnOutcome, Message, NackReason, Payload,
    ProtocolParams, Reply, SectorMemberState, SynodProposer, SynodStage,
};
use crate::time::SimTime;
use crate::Scalar;

// ---------------------------------------------------------------------------
// Configuration and outcome
// ---------------------------------------------------------------------------

/// Full configuration of one simulation run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub grid: SectorGrid,
    pub params: ProtocolParams,
    pub separation: SeparationConfig,
    pub network: DeliveryModel,
    pub limits: RunLimits,
    pub sim_seed: u64,
    /// Holding delay quantum, seconds.
    pub hold_quantum_s: Scalar,
    pub max_holds: u32,
    /// Endurance floor that triggers diversion while awaiting admission.
    pub fuel_reserve_min: Scalar,
    pub fuel_check_period_s: Scalar,
    pub initial_fuel_min: Scalar,
    pub collect_event_log: bool,
}

impl SimConfig {
    pub fn new(grid: SectorGrid) -> SimConfig {
        SimConfig {
            grid,
            params: ProtocolParams::default(),
            separation: SeparationConfig::default(),
            network: DeliveryModel::default(),
            limits: RunLimits::default(),
            sim_seed: 0,
            hold_quantum_s: 120.0,
            max_holds: 6,
            fuel_reserve_min: 30.0,
            fuel_check_period_s: 60.0,
            initial_fuel_min: 240.0,
            collect_event_log: false,
        }
    }
}

/// Which quorum a record describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuorumKind {
    Promise,
    Accept,
}

/// A quorum observed at a decision, for post-hoc intersection audits.
#[derive(Debug, Clone)]
pub struct QuorumRecord {
    pub sector: SectorId,
    /// Increments each time the sector repopulates from empty.
    pub era: u64,
    pub epoch: u64,
    pub kind: QuorumKind,
    pub members: BTreeSet<u32>,
}

/// Everything a run produces.
#[derive(Debug)]
pub struct SimOutcome {
    pub metrics: RunMetrics,
    pub trace_hash: u64,
    /// As-flown trajectories (admission adjustments and truncations applied).
    pub executed: Vec<FlightPlan>,
    pub nmacs: Vec<ConflictReport>,
    /// Co-admission safety violations found by the online audit. Always
    /// empty under correct protocol operation.
    pub violations: Vec<String>,
    pub quorum_log: Vec<QuorumRecord>,
    /// Final (member, epoch, view digest) per sector, registry members only.
    pub sector_digests: BTreeMap<SectorId, Vec<(u32, u64, u64)>>,
    pub event_log: Vec<EventLogRecord>,
    /// Promise monotonicity audit over all engines.
    pub promised_monotone: bool,
}

// ---------------------------------------------------------------------------
// Events and per-flight state
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimerKind {
    DiscoveryWindow,
    PrepareWindow,
    AcceptWindow,
    Backoff,
    TapResend,
}

#[derive(Debug, Clone)]
enum Ev {
    Deliver { to: u32, msg: Message },
    Timer { aircraft: u32, gen: u64, kind: TimerKind },
    EntryAttempt { aircraft: u32, leg: usize, plan_gen: u64 },
    ExitSector { aircraft: u32, leg: usize, plan_gen: u64 },
    FuelCheck { aircraft: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FlightStatus {
    Scheduled,
    Enroute,
    Done,
    Diverted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Construction {
    Direct,
    Speed,
    Hold(u32),
    Alternate(u32),
    Removal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Goal {
    Entry { leg: usize },
    Exit { sector: SectorId, is_final: bool },
    /// Emergency abort of a failed entry: agree on self-removal, purge
    /// occupant tracking state, record the denial or diversion.
    Abort { leg: usize, diverted: bool },
    /// Agreed removal of an unresponsive member.
    Evict { sector: SectorId, member: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TapRound {
    Learn,
    Ak,
}

#[derive(Debug)]
enum Phase {
    Discovery {
        responses: BTreeMap<u32, (u64, Vec<Arc<FlightPlan>>, u64)>,
    },
    Synod {
        proposer: SynodProposer,
        view: BTreeMap<u32, Arc<FlightPlan>>,
        construction: Construction,
    },
    Backoff {
        epoch: u64,
        cohort: BTreeSet<u32>,
        view: BTreeMap<u32, Arc<FlightPlan>>,
        value: DecreeValue,
        construction: Construction,
        next_round: u64,
    },
    Tap {
        epoch: u64,
        cohort: BTreeSet<u32>,
        view: BTreeMap<u32, Arc<FlightPlan>>,
        value: DecreeValue,
        construction: Construction,
        round: TapRound,
        got: BTreeSet<u32>,
        resends: u32,
        unreachable: BTreeSet<u32>,
    },
}

#[derive(Debug)]
struct Ctx {
    goal: Goal,
    sector: SectorId,
    started: SimTime,
    phase: Phase,
    discovery_attempts: u32,
    synod_attempts: u32,
}

#[derive(Debug)]
struct Flight {
    id: u32,
    plan: FlightPlan,
    plan_gen: u64,
    legs: Vec<SectorCrossing>,
    status: FlightStatus,
    fuel_min: Scalar,
    fuel_last_check: SimTime,
    memberships: BTreeMap<SectorId, SectorMemberState>,
    dedup: BTreeMap<u32, BTreeSet<u64>>,
    ctx: Option<Ctx>,
    pending: VecDeque<Goal>,
    timer_gen: u64,
    attempted_legs: BTreeSet<usize>,
    leg_assists: u32,
    last_construction: Construction,
}

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

struct World {
    cfg: SimConfig,
    sched: Scheduler<Ev>,
    net: Network,
    flights: BTreeMap<u32, Flight>,
    registry: BTreeMap<SectorId, BTreeSet<u32>>,
    sector_era: BTreeMap<SectorId, u64>,
    metrics: RunMetrics,
    hasher: TraceHasher,
    backoff_rng: ChaCha8Rng,
    msg_seq: u64,
    violations: Vec<String>,
    quorum_log: Vec<QuorumRecord>,
    event_log: Vec<EventLogRecord>,
}

/// Bound on dissemination re-send rounds before a member is declared
/// unreachable and proposed for eviction.
const MAX_TAP_RESENDS: u32 = 8;

impl World {
    fn new(plans: Vec<FlightPlan>, cfg: SimConfig) -> World {
        let mut backoff_rng = ChaCha8Rng::seed_from_u64(cfg.sim_seed);
        backoff_rng.set_stream(0x42414b4f);
        let mut net_model = cfg.network;
        net_model.seed = cfg.sim_seed.wrapping_add(net_model.seed);
        let mut world = World {
            net: Network::new(net_model),
            sched: Scheduler::new(),
            flights: BTreeMap::new(),
            registry: BTreeMap::new(),
            sector_era: BTreeMap::new(),
            metrics: RunMetrics::default(),
            hasher: TraceHasher::new(),
            backoff_rng,
            msg_seq: 0,
            violations: Vec::new(),
            quorum_log: Vec::new(),
            event_log: Vec::new(),
            cfg,
        };
        for plan in plans {
            let legs = sectors_crossed(&world.cfg.grid, &plan).crossings;
            let id = plan.owner;
            let start_lead = SimTime::from_secs_f64(world.cfg.params.start_ir_time_s);
            let first_attempt = legs[0].entry.saturating_sub(start_lead);
            let fuel_anchor = plan.start_time();
            world.flights.insert(
                id,
                Flight {
                    id,
                    plan,
                    plan_gen: 0,
                    legs,
                    status: FlightStatus::Scheduled,
                    fuel_min: world.cfg.initial_fuel_min,
                    fuel_last_check: fuel_anchor,
                    memberships: BTreeMap::new(),
                    dedup: BTreeMap::new(),
                    ctx: None,
                    pending: VecDeque::new(),
                    timer_gen: 0,
                    attempted_legs: BTreeSet::new(),
                    leg_assists: 0,
                    last_construction: Construction::Direct,
                },
            );
            world
                .sched
                .schedule(
                    EventKey { time: first_attempt, aircraft: id, rank: EventTypeRank::EntryAttempt },
                    Ev::EntryAttempt { aircraft: id, leg: 0, plan_gen: 0 },
                )
                .expect("initial events start at the epoch");
            world
                .sched
                .schedule(
                    EventKey {
                        time: fuel_anchor + SimTime::from_secs_f64(world.cfg.fuel_check_period_s),
                        aircraft: id,
                        rank: EventTypeRank::FuelCheck,
                    },
                    Ev::FuelCheck { aircraft: id },
                )
                .expect("initial events start at the epoch");
        }
        world
    }

    // -- plumbing ----------------------------------------------------------

    fn now(&self) -> SimTime {
        self.sched.now()
    }

    fn log_event(&mut self, aircraft: u32, kind: &'static str, detail: String) {
        if self.cfg.collect_event_log {
            self.event_log.push(EventLogRecord { time: self.now(), aircraft, kind, detail });
        }
    }

    fn send(&mut self, from: u32, to: u32, sector: SectorId, epoch: u64, payload: Payload) {
        let id = self.msg_seq;
        self.msg_seq += 1;
        self.metrics.messages_sent += 1;
        match self.net.sample_delay(from == to) {
            Some(delay) => {
                let msg = Message { id, from, sector, epoch, payload };
                let key = EventKey {
                    time: self.now() + delay,
                    aircraft: to,
                    rank: EventTypeRank::Delivery,
                };
                self.sched.schedule(key, Ev::Deliver { to, msg }).expect("delivery in the future");
            }
            None => {
                self.metrics.messages_dropped += 1;
            }
        }
    }

    fn set_timer(&mut self, flight: &mut Flight, kind: TimerKind, delay_s: Scalar) {
        flight.timer_gen += 1;
        let key = EventKey {
            time: self.now() + SimTime::from_secs_f64(delay_s),
            aircraft: flight.id,
            rank: EventTypeRank::Timer,
        };
        self.sched
            .schedule(key, Ev::Timer { aircraft: flight.id, gen: flight.timer_gen, kind })
            .expect("timer in the future");
    }

    fn occupants(&self, sector: SectorId) -> BTreeSet<u32> {
        self.registry.get(&sector).cloned().unwrap_or_default()
    }

    fn era(&self, sector: SectorId) -> u64 {
        self.sector_era.get(&sector).copied().unwrap_or(0)
    }

    // -- goal lifecycle ----------------------------------------------------

    fn queue_goal(&mut self, flight: &mut Flight, goal: Goal) {
        flight.pending.push_back(goal);
        self.drain_goals(flight);
    }

    fn drain_goals(&mut self, flight: &mut Flight) {
        while flight.ctx.is_none() {
            let Some(goal) = flight.pending.pop_front() else { return };
            self.start_goal(flight, goal);
        }
    }

    fn start_goal(&mut self, flight: &mut Flight, goal: Goal) {
        if flight.status == FlightStatus::Diverted
            || (flight.status == FlightStatus::Done && !matches!(goal, Goal::Evict { .. }))
        {
            return;
        }
        match goal {
            Goal::Entry { leg } => {
                let sector = flight.legs[leg].sector;
                if flight.memberships.contains_key(&sector) {
                    return; // already admitted (defensive; straight plans do not revisit)
                }
                if flight.attempted_legs.insert(leg) {
                    self.metrics.attempted += 1;
                    flight.leg_assists = 0;
                }
                flight.ctx = Some(Ctx {
                    goal: Goal::Entry { leg },
                    sector,
                    started: self.now(),
                    phase: Phase::Discovery { responses: BTreeMap::new() },
                    discovery_attempts: 0,
                    synod_attempts: 0,
                });
                self.begin_discovery(flight);
            }
            Goal::Abort { leg, diverted } => {
                let sector = flight.legs[leg].sector;
                flight.ctx = Some(Ctx {
                    goal: Goal::Abort { leg, diverted },
                    sector,
                    started: self.now(),
                    phase: Phase::Discovery { responses: BTreeMap::new() },
                    discovery_attempts: 0,
                    synod_attempts: 0,
                });
                self.begin_discovery(flight);
            }
            Goal::Exit { sector, is_final } => {
                if !flight.memberships.contains_key(&sector) {
                    // Evicted or already removed; just finish the leg.
                    self.finish_exit_effects(flight, sector, is_final);
                    return;
                }
                flight.ctx = Some(Ctx {
                    goal: Goal::Exit { sector, is_final },
                    sector,
                    started: self.now(),
                    phase: Phase::Discovery { responses: BTreeMap::new() },
                    discovery_attempts: 0,
                    synod_attempts: 0,
                });
                self.start_member_synod(flight);
            }
            Goal::Evict { sector, member } => {
                let known = flight
                    .memberships
                    .get(&sector)
                    .map_or(false, |m| m.view.contains_key(&member));
                if !known {
                    return;
                }
                flight.ctx = Some(Ctx {
                    goal: Goal::Evict { sector, member },
                    sector,
                    started: self.now(),
                    phase: Phase::Discovery { responses: BTreeMap::new() },
                    discovery_attempts: 0,
                    synod_attempts: 0,
                });
                self.start_member_synod(flight);
            }
        }
    }

    /// Discovery for entry and abort goals: broadcast INIT_REQ to the
    /// registered occupants, or take the empty-sector fast path.
    fn begin_discovery(&mut self, flight: &mut Flight) {
        let ctx = flight.ctx.as_mut().expect("discovery requires a context");
        let sector = ctx.sector;
        let occupants = self.occupants(sector);
        if occupants.is_empty() {
            // Atomic with this event: the registry cannot change between the
            // check and the admission, so two simultaneous first arrivals
            // are serialized by the event order.
            let goal = ctx.goal.clone();
            match goal {
                Goal::Entry { leg } => {
                    let value = DecreeValue::entry(Arc::new(flight.plan.clone()));
                    flight.last_construction = Construction::Direct;
                    self.metrics.fast_path_admissions += 1;
                    let era = self.sector_era.entry(sector).or_insert(0);
                    *era += 1;
                    self.complete_admission(flight, leg, BTreeMap::new(), 0, value);
                }
                Goal::Abort { leg, diverted } => {
                    // Nothing to purge anywhere.
                    self.finish_abort_effects(flight, leg, diverted);
                }
                _ => unreachable!("discovery only serves entry and abort goals"),
            }
            return;
        }
        ctx.phase = Phase::Discovery { responses: BTreeMap::new() };
        ctx.discovery_attempts += 1;
        if ctx.discovery_attempts > 1 {
            self.metrics.retries += 1;
        }
        for occ in occupants {
            self.send(flight.id, occ, sector, 0, Payload::InitReq);
        }
        let window = self.cfg.params.timeout_duration_s;
        self.set_timer(flight, TimerKind::DiscoveryWindow, window);
    }

    /// Exit and evict goals skip discovery: the proposer is a member and
    /// its own view is current.
    fn start_member_synod(&mut self, flight: &mut Flight) {
        let ctx = flight.ctx.as_ref().expect("member op requires context");
        let sector = ctx.sector;
        let Some(membership) = flight.memberships.get(&sector) else {
            // Lost membership (evicted) while queued.
            let goal = ctx.goal.clone();
            flight.ctx = None;
            if let Goal::Exit { sector, is_final } = goal {
                self.finish_exit_effects(flight, sector, is_final);
            }
            return;
        };
        let epoch = membership.epoch;
        let view: BTreeMap<u32, Arc<FlightPlan>> = membership.view.clone();
        let round = membership.round_floor() + 1;
        let goal = flight.ctx.as_ref().unwrap().goal.clone();
        // Degenerate views (we were already removed, or an evictee is gone)
        // complete locally: there is nothing to agree on.
        let stale = match &goal {
            Goal::Exit { .. } | Goal::Abort { .. } => !view.contains_key(&flight.id),
            Goal::Evict { member, .. } => !view.contains_key(member),
            Goal::Entry { .. } => unreachable!("entries go through discovery"),
        };
        if stale || view.is_empty() {
            flight.ctx = None;
            match goal {
                Goal::Exit { sector, is_final } => {
                    flight.memberships.remove(&sector);
                    if let Some(set) = self.registry.get_mut(&sector) {
                        set.remove(&flight.id);
                        if set.is_empty() {
                            self.registry.remove(&sector);
                        }
                    }
                    self.finish_exit_effects(flight, sector, is_final);
                }
                _ => self.drain_goals(flight),
            }
            return;
        }
        let value = match &goal {
            Goal::Exit { .. } | Goal::Abort { .. } => {
                DecreeValue::exit(Arc::new(flight.plan.clone()))
            }
            Goal::Evict { member, .. } => {
                DecreeValue::exit(view.get(member).expect("checked above").clone())
            }
            Goal::Entry { .. } => unreachable!("entries go through discovery"),
        };
        let cohort: BTreeSet<u32> = view.keys().copied().collect();
        self.launch_synod(flight, epoch, cohort, view, value, Construction::Removal, round);
    }

    fn launch_synod(
        &mut self,
        flight: &mut Flight,
        epoch: u64,
        cohort: BTreeSet<u32>,
        view: BTreeMap<u32, Arc<FlightPlan>>,
        value: DecreeValue,
        construction: Construction,
        round: u64,
    ) {
        let proposer = SynodProposer::start(flight.id, epoch, cohort.clone(), value, round);
        let pn = proposer.pn;
        let sector = flight.ctx.as_ref().expect("synod requires context").sector;
        flight.ctx.as_mut().unwrap().phase = Phase::Synod { proposer, view, construction };
        for member in &cohort {
            self.send(flight.id, *member, sector, epoch, Payload::Prepare { pn });
        }
        let window = self.cfg.params.timeout_duration_s;
        self.set_timer(flight, TimerKind::PrepareWindow, window);
    }

    // -- discovery evaluation and plan construction -------------------------

    fn evaluate_discovery(&mut self, flight: &mut Flight) {
        let ctx = flight.ctx.as_mut().expect("window fired with context");
        let Phase::Discovery { responses } = &ctx.phase else { return };
        let sector = ctx.sector;
        let goal = ctx.goal.clone();

        if responses.is_empty() {
            return self.retry_discovery(flight);
        }
        let target_epoch = responses.values().map(|(e, _, _)| *e).max().expect("non-empty");
        let mut view: Option<BTreeMap<u32, Arc<FlightPlan>>> = None;
        let mut round_floor = 0;
        let mut responders = BTreeSet::new();
        for (from, (epoch, plans, floor)) in responses {
            if *epoch != target_epoch {
                continue;
            }
            responders.insert(*from);
            round_floor = round_floor.max(*floor);
            let as_map: BTreeMap<u32, Arc<FlightPlan>> =
                plans.iter().map(|p| (p.owner, p.clone())).collect();
            match &view {
                None => view = Some(as_map),
                Some(existing) => {
                    if *existing != as_map {
                        self.violations.push(format!(
                            "discovery: members of {sector} at epoch {target_epoch} disagree on the view"
                        ));
                    }
                }
            }
        }
        let view = view.expect("at least one max-epoch response");
        let cohort: BTreeSet<u32> = view.keys().copied().collect();
        let quorum_needed = crate::protocol::quorum(cohort.len());
        let heard = responders.intersection(&cohort).count();
        if heard < quorum_needed {
            return self.retry_discovery(flight);
        }

        match goal {
            Goal::Entry { leg } => {
                if view.contains_key(&flight.id) {
                    // An earlier proposal of ours was driven to decision by a
                    // competing proposer; adopt the admitted plan.
                    let admitted = view.get(&flight.id).expect("present").clone();
                    flight.plan = (*admitted).clone();
                    let value = DecreeValue::entry(admitted);
                    self.complete_admission(flight, leg, view, target_epoch, value);
                    return;
                }
                match self.construct_candidate(flight, leg, &view) {
                    Some((value, construction)) => {
                        flight.last_construction = construction;
                        self.launch_synod(
                            flight,
                            target_epoch,
                            cohort,
                            view,
                            value,
                            construction,
                            round_floor + 1,
                        );
                    }
                    None => self.fail_entry(flight, leg),
                }
            }
            Goal::Abort { .. } => {
                let value = DecreeValue::exit(Arc::new(flight.plan.clone()));
                self.launch_synod(
                    flight,
                    target_epoch,
                    cohort,
                    view,
                    value,
                    Construction::Removal,
                    round_floor + 1,
                );
            }
            _ => unreachable!("discovery only serves entry and abort goals"),
        }
    }

    fn retry_discovery(&mut self, flight: &mut Flight) {
        let ctx = flight.ctx.as_mut().expect("retry requires context");
        if ctx.discovery_attempts >= self.cfg.params.ir_attempts {
            let goal = ctx.goal.clone();
            match goal {
                Goal::Entry { leg } => self.fail_entry(flight, leg),
                Goal::Abort { leg, diverted } => {
                    // Could not even reach the occupants; give up the purge.
                    flight.ctx = None;
                    self.finish_abort_effects(flight, leg, diverted);
                }
                _ => unreachable!(),
            }
            return;
        }
        self.begin_discovery(flight);
    }

    /// Builds the candidate value for an entry: the direct plan when it is
    /// conflict free against the discovered view, else a speed change, else
    /// a hold, else lateral alternates. `None` means denial.
    fn construct_candidate(
        &mut self,
        flight: &mut Flight,
        leg: usize,
        view: &BTreeMap<u32, Arc<FlightPlan>>,
    ) -> Option<(DecreeValue, Construction)> {
        let sector = flight.legs[leg].sector;
        let grid = self.cfg.grid;
        let sep = self.cfg.separation;
        let check = move |a: &FlightPlan, b: &FlightPlan, pairs: &mut u64| {
            conflict_in_sector(a, b, &sep, &grid, sector, pairs)
        };
        let admitted: Vec<FlightPlan> = view.values().map(|p| (**p).clone()).collect();
        let base = flight.plan.clone();
        let anchor = if leg == 0 { base.start_time() } else { flight.legs[leg].entry };
        let hold_anchor = self.hold_anchor(flight, leg);

        let mut budget = CheckBudget::unlimited();
        let direct_clean = admitted.iter().all(|other| {
            let mut pairs = 0;
            let hit = check(&base, other, &mut pairs);
            budget.consume(pairs);
            !hit
        });
        if direct_clean {
            return Some((DecreeValue::entry(Arc::new(base)), Construction::Direct));
        }

        let mut solver_budget = CheckBudget::from_solve_timeout(self.cfg.params.solve_timeout_s);
        if let Ok((plan, _factor)) =
            backtrack_speeds_with(&base, &admitted, (0.7, 1.3), anchor, &mut solver_budget, &check)
        {
            return Some((DecreeValue::entry(Arc::new(plan)), Construction::Speed));
        }

        // Holds park the aircraft just short of the boundary, inside the
        // sector it currently occupies. The holder knows that sector's
        // admitted set, so it only proposes loiters that are clean against
        // everything it can see there.
        let prev_clear = |candidate: &FlightPlan| -> bool {
            if leg == 0 {
                return true;
            }
            let prev_sector = flight.legs[leg - 1].sector;
            let Some(prev) = flight.memberships.get(&prev_sector) else { return true };
            prev.view.values().filter(|p| p.owner != flight.id).all(|other| {
                let mut pairs = 0;
                !conflict_in_sector(candidate, other, &sep, &grid, prev_sector, &mut pairs)
            })
        };
        for k in 1..=self.cfg.max_holds {
            let delay = SimTime::from_secs_f64(self.cfg.hold_quantum_s * k as Scalar);
            let candidate = if leg == 0 {
                base.shifted(delay)
            } else {
                base.with_hold_at(hold_anchor, delay)
            };
            let clean = admitted.iter().all(|other| {
                let mut pairs = 0;
                !check(&candidate, other, &mut pairs)
            });
            if clean && prev_clear(&candidate) {
                return Some((DecreeValue::entry(Arc::new(candidate)), Construction::Hold(k)));
            }
        }

        for (i, offset) in alternate_offsets(self.cfg.params.alternates).enumerate() {
            let Some(candidate) = alternate_plan(&base, anchor, offset) else { continue };
            if !candidate.within_region(self.cfg.grid.region_side_nm()) {
                continue;
            }
            let clean = admitted.iter().all(|other| {
                let mut pairs = 0;
                !check(&candidate, other, &mut pairs)
            });
            if clean {
                return Some((
                    DecreeValue::entry(Arc::new(candidate)),
                    Construction::Alternate(i as u32 + 1),
                ));
            }
        }
        None
    }

    /// Anchor instant for parked hold segments: half a mile short of the
    /// boundary, strictly inside the sector being left. Holding is a
    /// pre-entry delay, so the aircraft loiters outside the sector it is
    /// negotiating with and enters only when its slot starts. First-leg
    /// holds delay departure itself and need no park point.
    fn hold_anchor(&self, flight: &Flight, leg: usize) -> SimTime {
        const HOLD_NUDGE_NM: Scalar = 0.5;
        if leg == 0 {
            return flight.plan.start_time();
        }
        let entry = flight.legs[leg].entry;
        let nudge_s = HOLD_NUDGE_NM / flight.plan.speed_kt * 3600.0;
        entry.saturating_sub(SimTime::from_secs_f64(nudge_s)).max(flight.plan.start_time())
    }

    // -- synod lifecycle -----------------------------------------------------

    fn synod_rejected(&mut self, flight: &mut Flight, refresh_view: bool) {
        let ctx = flight.ctx.as_mut().expect("rejection requires context");
        ctx.synod_attempts += 1;
        self.metrics.retries += 1;
        if ctx.synod_attempts >= self.cfg.params.ir_attempts {
            return self.fail_synod(flight);
        }
        if refresh_view {
            // The view this round was built on is stale.
            match ctx.goal.clone() {
                Goal::Entry { .. } | Goal::Abort { .. } => {
                    ctx.phase = Phase::Discovery { responses: BTreeMap::new() };
                    return self.begin_discovery(flight);
                }
                Goal::Exit { .. } | Goal::Evict { .. } => {
                    // Members refresh from their own applied state.
                    return self.start_member_synod(flight);
                }
            }
        }
        let (epoch, cohort, view, value, construction, next_round) = {
            let (proposer, view, construction) = match &ctx.phase {
                Phase::Synod { proposer, view, construction } => {
                    (proposer, view.clone(), *construction)
                }
                _ => return,
            };
            (
                proposer.epoch,
                proposer.cohort.clone(),
                view,
                proposer.own_value.clone(),
                construction,
                proposer.max_round_seen + 1,
            )
        };
        ctx.phase = Phase::Backoff { epoch, cohort, view, value, construction, next_round };
        let attempt = ctx.synod_attempts - 1;
        let delay = nack_backoff(attempt, &self.cfg.params, &mut self.backoff_rng);
        self.set_timer(flight, TimerKind::Backoff, delay);
    }

    fn fail_synod(&mut self, flight: &mut Flight) {
        let ctx = flight.ctx.take().expect("failure requires context");
        self.account_phase(&ctx);
        match ctx.goal {
            Goal::Entry { leg } => {
                flight.ctx = None;
                self.fail_entry(flight, leg);
            }
            Goal::Abort { leg, diverted } => {
                self.finish_abort_effects(flight, leg, diverted);
            }
            Goal::Exit { sector, is_final } => {
                // Give up cleanly: drop membership locally.
                flight.memberships.remove(&sector);
                if let Some(set) = self.registry.get_mut(&sector) {
                    set.remove(&flight.id);
                    if set.is_empty() {
                        self.registry.remove(&sector);
                    }
                }
                self.finish_exit_effects(flight, sector, is_final);
            }
            Goal::Evict { .. } => {
                self.drain_goals(flight);
            }
        }
    }

    /// Entry failed: start the emergency abort. The denial itself is
    /// recorded when the abort completes.
    fn fail_entry(&mut self, flight: &mut Flight, leg: usize) {
        if let Some(ctx) = flight.ctx.take() {
            self.account_phase(&ctx);
        }
        flight.timer_gen += 1;
        self.start_goal(flight, Goal::Abort { leg, diverted: false });
    }

    fn decide(&mut self, flight: &mut Flight) {
        let ctx = flight.ctx.as_mut().expect("decision requires context");
        let sector = ctx.sector;
        let Phase::Synod { proposer, view, construction } = &ctx.phase else { return };
        debug_assert_eq!(proposer.stage, SynodStage::Decided);
        let epoch = proposer.epoch;
        let cohort = proposer.cohort.clone();
        let value = proposer.driving.clone();
        let view = view.clone();
        let construction = *construction;
        let era = self.era(sector);
        self.quorum_log.push(QuorumRecord {
            sector,
            era,
            epoch,
            kind: QuorumKind::Accept,
            members: proposer_accepts(proposer),
        });
        self.quorum_log.push(QuorumRecord {
            sector,
            era,
            epoch,
            kind: QuorumKind::Promise,
            members: proposer_promises(proposer),
        });

        ctx.phase = Phase::Tap {
            epoch,
            cohort: cohort.clone(),
            view,
            value: value.clone(),
            construction,
            round: TapRound::Learn,
            got: BTreeSet::new(),
            resends: 0,
            unreachable: BTreeSet::new(),
        };
        for member in &cohort {
            self.send(flight.id, *member, sector, epoch, Payload::Learn { value: value.clone() });
        }
        let window = self.cfg.params.timeout_duration_s * self.cfg.params.phase_delay_factor;
        self.set_timer(flight, TimerKind::TapResend, window);
    }

    fn tap_advance(&mut self, flight: &mut Flight) {
        let ctx = flight.ctx.as_mut().expect("tap requires context");
        let sector = ctx.sector;
        let Phase::Tap { epoch, cohort, value, round, got, resends, unreachable, .. } = &mut ctx.phase
        else {
            return;
        };
        let reachable: BTreeSet<u32> = cohort.difference(unreachable).copied().collect();
        if !reachable.is_subset(got) {
            return;
        }
        match round {
            TapRound::Learn => {
                *round = TapRound::Ak;
                got.clear();
                *resends = 0;
                let epoch = *epoch;
                let targets = reachable;
                for member in targets {
                    self.send(flight.id, member, sector, epoch, Payload::Ak);
                }
                let window =
                    self.cfg.params.timeout_duration_s * self.cfg.params.phase_delay_factor;
                self.set_timer(flight, TimerKind::TapResend, window);
            }
            TapRound::Ak => {
                let value = value.clone();
                self.finish_tap(flight, value);
            }
        }
    }

    fn tap_resend(&mut self, flight: &mut Flight) {
        let ctx = flight.ctx.as_mut().expect("resend requires context");
        let sector = ctx.sector;
        let Phase::Tap { epoch, cohort, value, round, got, resends, unreachable, .. } =
            &mut ctx.phase
        else {
            return;
        };
        *resends += 1;
        if *resends > MAX_TAP_RESENDS {
            // Whoever is still silent is unreachable; exclude and evict.
            let missing: BTreeSet<u32> =
                cohort.difference(got).copied().filter(|m| !unreachable.contains(m)).collect();
            for m in missing {
                unreachable.insert(m);
                flight.pending.push_back(Goal::Evict { sector, member: m });
            }
            return self.tap_advance(flight);
        }
        let epoch = *epoch;
        let payload = |value: &DecreeValue, round: &TapRound| match round {
            TapRound::Learn => Payload::Learn { value: value.clone() },
            TapRound::Ak => Payload::Ak,
        };
        let missing: Vec<u32> =
            cohort.difference(got).copied().filter(|m| !unreachable.contains(m)).collect();
        let msg = payload(value, round);
        for m in missing {
            self.send(flight.id, m, sector, epoch, msg.clone());
        }
        let window = self.cfg.params.timeout_duration_s * self.cfg.params.phase_delay_factor;
        self.set_timer(flight, TimerKind::TapResend, window);
    }

    fn finish_tap(&mut self, flight: &mut Flight, value: DecreeValue) {
        let ctx = flight.ctx.take().expect("tap completion requires context");
        self.account_phase(&ctx);
        flight.timer_gen += 1;
        let sector = ctx.sector;
        let Phase::Tap { epoch, view, construction, .. } = ctx.phase else { unreachable!() };

        if !value.exit {
            // Entry decided: register the admitted owner for broadcasts.
            self.registry.entry(sector).or_default().insert(value.owner());
        }
        match ctx.goal {
            Goal::Entry { leg } => {
                if value.owner() == flight.id && !value.exit {
                    flight.ctx = None;
                    flight.last_construction = construction;
                    self.complete_admission(flight, leg, view, epoch, value);
                } else {
                    // Drove a competitor's value to decision; retry our own
                    // entry against the advanced epoch.
                    flight.leg_assists += 1;
                    self.metrics.retries += 1;
                    if flight.leg_assists > self.cfg.params.ir_attempts {
                        self.fail_entry(flight, leg);
                    } else {
                        flight.pending.push_front(Goal::Entry { leg });
                        self.drain_goals(flight);
                    }
                }
            }
            Goal::Abort { leg, diverted } => {
                if value.owner() == flight.id && !value.exit {
                    // Our earlier entry proposal turned out to be chosen:
                    // the admission stands, no abort needed.
                    flight.plan = (*value.plan).clone();
                    flight.last_construction = construction;
                    self.complete_admission(flight, leg, view, epoch, value);
                } else if value.owner() == flight.id && value.exit {
                    self.finish_abort_effects(flight, leg, diverted);
                } else {
                    // Drove someone else's decision first; retry the abort.
                    flight.pending.push_front(Goal::Abort { leg, diverted });
                    self.drain_goals(flight);
                }
            }
            Goal::Exit { sector, is_final } => {
                if value.owner() == flight.id && value.exit {
                    flight.memberships.remove(&sector);
                    if let Some(set) = self.registry.get_mut(&sector) {
                        set.remove(&flight.id);
                        if set.is_empty() {
                            self.registry.remove(&sector);
                        }
                    }
                    self.finish_exit_effects(flight, sector, is_final);
                } else {
                    flight.pending.push_front(Goal::Exit { sector, is_final });
                    self.drain_goals(flight);
                }
            }
            Goal::Evict { sector, member } => {
                if value.exit && value.owner() == member {
                    if let Some(set) = self.registry.get_mut(&sector) {
                        set.remove(&member);
                        if set.is_empty() {
                            self.registry.remove(&sector);
                        }
                    }
                    self.metrics.evictions += 1;
                    self.drain_goals(flight);
                } else {
                    flight.pending.push_front(Goal::Evict { sector, member });
                    self.drain_goals(flight);
                }
            }
        }
    }

    // -- completions ---------------------------------------------------------

    /// Applies a successful admission at the entrant: initialize membership,
    /// adopt the decided plan, reschedule downstream events, count metrics.
    fn complete_admission(
        &mut self,
        flight: &mut Flight,
        leg: usize,
        view: BTreeMap<u32, Arc<FlightPlan>>,
        epoch: u64,
        value: DecreeValue,
    ) {
        if let Some(ctx) = flight.ctx.take() {
            self.account_phase(&ctx);
        }
        flight.timer_gen += 1;
        let sector = flight.legs[leg].sector;
        self.registry.entry(sector).or_default().insert(flight.id);

        // Audit before inserting ourselves: the decided plan must be clean
        // against every co-admitted plan in this sector.
        self.audit_admission(sector, &value, view.values());

        let mut new_view = view;
        new_view.insert(flight.id, value.plan.clone());
        flight.memberships.insert(sector, SectorMemberState::new(epoch + 1, new_view));

        flight.plan = (*value.plan).clone();
        flight.legs = sectors_crossed(&self.cfg.grid, &flight.plan).crossings;

        // If the admission finished after the planned crossing, the flight
        // waited at the boundary: reflect the wait in the executed plan.
        let leg = flight
            .legs
            .iter()
            .position(|c| c.sector == sector)
            .expect("admitted sector on route");
        let planned_entry = flight.legs[leg].entry;
        if self.now() > planned_entry {
            let wait = self.now() - planned_entry;
            flight.plan = if leg == 0 {
                flight.plan.shifted(wait)
            } else {
                flight.plan.with_hold_at(self.hold_anchor(flight, leg), wait)
            };
            flight.legs = sectors_crossed(&self.cfg.grid, &flight.plan).crossings;
            self.metrics.late_entries += 1;
        }
        flight.plan_gen += 1;
        flight.status = FlightStatus::Enroute;

        match flight.last_construction {
            Construction::Direct | Construction::Removal => {}
            Construction::Speed => self.metrics.speed_mods += 1,
            Construction::Hold(k) => {
                self.metrics.holdings += 1;
                self.metrics.hold_quanta += k as u64;
            }
            Construction::Alternate(_) => self.metrics.alternates_used += 1,
        }
        self.metrics.admitted += 1;

        // Exit from the previous sector fires at this leg's (final) entry
        // time; the exit from this sector is scheduled by the next
        // admission, or at plan end for the last leg.
        let gen = flight.plan_gen;
        if leg > 0 {
            let t = flight.legs[leg].entry.max(self.now());
            self.sched
                .schedule(
                    EventKey { time: t, aircraft: flight.id, rank: EventTypeRank::Exit },
                    Ev::ExitSector { aircraft: flight.id, leg: leg - 1, plan_gen: gen },
                )
                .expect("exit in the future");
        }
        if leg + 1 < flight.legs.len() {
            let lead = SimTime::from_secs_f64(self.cfg.params.start_ir_time_s);
            let t = flight.legs[leg + 1].entry.saturating_sub(lead).max(self.now());
            self.sched
                .schedule(
                    EventKey { time: t, aircraft: flight.id, rank: EventTypeRank::EntryAttempt },
                    Ev::EntryAttempt { aircraft: flight.id, leg: leg + 1, plan_gen: gen },
                )
                .expect("entry attempt in the future");
        } else {
            let t = flight.legs[leg].exit.max(self.now());
            self.sched
                .schedule(
                    EventKey { time: t, aircraft: flight.id, rank: EventTypeRank::Exit },
                    Ev::ExitSector { aircraft: flight.id, leg, plan_gen: gen },
                )
                .expect("exit in the future");
        }
        self.drain_goals(flight);
    }

    fn finish_exit_effects(&mut self, flight: &mut Flight, _sector: SectorId, is_final: bool) {
        if is_final && flight.status != FlightStatus::Diverted {
            flight.status = FlightStatus::Done;
        }
        self.drain_goals(flight);
    }

    fn finish_abort_effects(&mut self, flight: &mut Flight, _leg: usize, diverted: bool) {
        if flight.status == FlightStatus::Diverted {
            self.drain_goals(flight);
            return;
        }
        if diverted {
            self.metrics.diverted += 1;
        } else {
            self.metrics.denied += 1;
        }
        flight.status = FlightStatus::Diverted;
        flight.plan_gen += 1;
        flight.timer_gen += 1;
        let now = self.now();
        if now < flight.plan.end_time() {
            flight.plan = flight.plan.truncated_at(now);
        }
        flight.pending.clear();
        // Leave every remaining membership cleanly so occupant views do not
        // carry a plan that will never be flown.
        let sectors: Vec<SectorId> = flight.memberships.keys().copied().collect();
        for sector in sectors {
            flight.pending.push_back(Goal::Exit { sector, is_final: false });
        }
        self.drain_goals(flight);
    }

    fn account_phase(&mut self, ctx: &Ctx) {
        let elapsed = (self.now() - ctx.started).as_secs_f64();
        match ctx.goal {
            Goal::Entry { leg: 0 } | Goal::Abort { leg: 0, .. } => self.metrics.phase1_s += elapsed,
            _ => self.metrics.phase2_s += elapsed,
        }
    }

    /// Online co-admission safety audit: the decided entry value must be
    /// conflict free, within this sector, against every plan in the view it
    /// joins.
    fn audit_admission<'v>(
        &mut self,
        sector: SectorId,
        value: &DecreeValue,
        view: impl Iterator<Item = &'v Arc<FlightPlan>>,
    ) {
        if value.exit {
            return;
        }
        for other in view {
            if other.owner == value.owner() {
                continue;
            }
            let mut pairs = 0;
            if conflict_in_sector(
                &value.plan,
                other,
                &self.cfg.separation,
                &self.cfg.grid,
                sector,
                &mut pairs,
            ) {
                self.violations.push(format!(
                    "co-admission conflict in {sector}: plans {} and {}",
                    value.owner(),
                    other.owner
                ));
            }
        }
    }

    // -- event dispatch ------------------------------------------------------

    fn dispatch(&mut self, key: EventKey, ev: Ev) {
        self.hasher.write_u64(key.time.as_ps());
        self.hasher.write_u64(key.aircraft as u64);
        self.hasher.write_u64(key.rank as u64);
        match ev {
            Ev::Deliver { to, msg } => {
                self.hasher.write_u64(msg.id);
                self.hasher.write_u64(msg.from as u64);
                self.hasher.write_bytes(msg.payload.kind().as_bytes());
                self.on_deliver(to, msg);
            }
            Ev::Timer { aircraft, gen, kind } => {
                self.hasher.write_u64(gen);
                self.on_timer(aircraft, gen, kind);
            }
            Ev::EntryAttempt { aircraft, leg, plan_gen } => {
                self.hasher.write_u64(leg as u64);
                self.on_entry_attempt(aircraft, leg, plan_gen);
            }
            Ev::ExitSector { aircraft, leg, plan_gen } => {
                self.hasher.write_u64(leg as u64 ^ 0x58);
                self.on_exit_event(aircraft, leg, plan_gen);
            }
            Ev::FuelCheck { aircraft } => {
                self.on_fuel_check(aircraft);
            }
        }
    }

    fn with_flight(&mut self, id: u32, f: impl FnOnce(&mut World, &mut Flight)) -> bool {
        match self.flights.remove(&id) {
            Some(mut flight) => {
                f(self, &mut flight);
                self.flights.insert(id, flight);
                true
            }
            None => false,
        }
    }

    fn on_entry_attempt(&mut self, aircraft: u32, leg: usize, plan_gen: u64) {
        self.with_flight(aircraft, |world, flight| {
            if flight.plan_gen != plan_gen
                || matches!(flight.status, FlightStatus::Diverted | FlightStatus::Done)
            {
                return;
            }
            world.log_event(aircraft, "ENTRY_ATTEMPT", format!("leg={leg}"));
            world.queue_goal(flight, Goal::Entry { leg });
        });
    }

    fn on_exit_event(&mut self, aircraft: u32, leg: usize, plan_gen: u64) {
        self.with_flight(aircraft, |world, flight| {
            if flight.plan_gen != plan_gen
                || matches!(flight.status, FlightStatus::Diverted | FlightStatus::Done)
            {
                return;
            }
            let sector = flight.legs[leg].sector;
            let is_final = leg + 1 == flight.legs.len();
            world.log_event(aircraft, "EXIT", format!("leg={leg} sector={sector}"));
            world.queue_goal(flight, Goal::Exit { sector, is_final });
        });
    }

    fn on_fuel_check(&mut self, aircraft: u32) {
        self.with_flight(aircraft, |world, flight| {
            if matches!(flight.status, FlightStatus::Diverted | FlightStatus::Done) {
                return;
            }
            let now = world.now();
            let elapsed_min = (now - flight.fuel_last_check).as_secs_f64() / 60.0;
            // Time spent waiting at a boundary burns at the holding rate.
            let mut hold_min = 0.0;
            if let Some(ctx) = &flight.ctx {
                if let Goal::Entry { leg } = ctx.goal {
                    let boundary = flight.legs[leg].entry;
                    if now > boundary {
                        let start = flight.fuel_last_check.max(boundary);
                        hold_min = (now - start).as_secs_f64() / 60.0;
                    }
                }
            }
            flight.fuel_last_check = now;
            flight.fuel_min -= (elapsed_min - hold_min) + 1.5 * hold_min;

            let awaiting_entry = flight
                .ctx
                .as_ref()
                .map_or(false, |c| matches!(c.goal, Goal::Entry { .. }))
                || flight.pending.iter().any(|g| matches!(g, Goal::Entry { .. }));
            if flight.fuel_min < world.cfg.fuel_reserve_min && awaiting_entry {
                // Out of margin while still negotiating: abandon via the
                // emergency path.
                let leg = match flight.ctx.as_ref().map(|c| &c.goal) {
                    Some(Goal::Entry { leg }) => *leg,
                    _ => flight
                        .pending
                        .iter()
                        .find_map(|g| match g {
                            Goal::Entry { leg } => Some(*leg),
                            _ => None,
                        })
                        .unwrap_or(0),
                };
                world.log_event(aircraft, "FUEL_DIVERT", format!("fuel={:.1}min", flight.fuel_min));
                flight.ctx = None;
                flight.timer_gen += 1;
                flight.pending.clear();
                world.start_goal(flight, Goal::Abort { leg, diverted: true });
                return;
            }
            if flight.status != FlightStatus::Done && flight.status != FlightStatus::Diverted {
                let t = now + SimTime::from_secs_f64(world.cfg.fuel_check_period_s);
                world
                    .sched
                    .schedule(
                        EventKey { time: t, aircraft, rank: EventTypeRank::FuelCheck },
                        Ev::FuelCheck { aircraft },
                    )
                    .expect("fuel check in the future");
            }
        });
    }

    fn on_timer(&mut self, aircraft: u32, gen: u64, kind: TimerKind) {
        self.with_flight(aircraft, |world, flight| {
            if flight.timer_gen != gen || flight.ctx.is_none() {
                return;
            }
            match kind {
                TimerKind::DiscoveryWindow => world.evaluate_discovery(flight),
                TimerKind::PrepareWindow | TimerKind::AcceptWindow => {
                    // Quorum not reached in time.
                    world.synod_rejected(flight, false);
                }
                TimerKind::Backoff => {
                    let Some(ctx) = flight.ctx.as_mut() else { return };
                    let Phase::Backoff { epoch, cohort, view, value, construction, next_round } =
                        &ctx.phase
                    else {
                        return;
                    };
                    let (epoch, cohort, view, value, construction, round) = (
                        *epoch,
                        cohort.clone(),
                        view.clone(),
                        value.clone(),
                        *construction,
                        *next_round,
                    );
                    world.launch_synod(flight, epoch, cohort, view, value, construction, round);
                }
                TimerKind::TapResend => world.tap_resend(flight),
            }
        });
    }

    fn on_deliver(&mut self, to: u32, msg: Message) {
        let known = self.with_flight(to, |world, flight| {
            let seen = flight.dedup.entry(msg.from).or_default();
            if !seen.insert(msg.id) {
                world.metrics.dedup_drops += 1;
                return;
            }
            world.metrics.messages_delivered += 1;
            if world.cfg.collect_event_log {
                world.log_event(
                    to,
                    msg.payload.kind(),
                    format!("from={} sector={} epoch={}", msg.from, msg.sector, msg.epoch),
                );
            }
            world.handle_message(flight, msg);
        });
        if !known {
            self.metrics.dead_letters += 1;
        }
    }

    fn handle_message(&mut self, flight: &mut Flight, msg: Message) {
        let sector = msg.sector;
        match msg.payload {
            Payload::InitReq => {
                if let Some(m) = flight.memberships.get(&sector) {
                    let payload = Payload::ReqAck {
                        view: m.view_plans(),
                        round_floor: m.round_floor(),
                    };
                    let epoch = m.epoch;
                    self.send(flight.id, msg.from, sector, epoch, payload);
                }
            }
            Payload::ReqAck { view, round_floor } => {
                if let Some(ctx) = flight.ctx.as_mut() {
                    if ctx.sector == sector {
                        if let Phase::Discovery { responses } = &mut ctx.phase {
                            responses.insert(msg.from, (msg.epoch, view, round_floor));
                        }
                    }
                }
            }
            Payload::Prepare { pn } => {
                let reply = match flight.memberships.get_mut(&sector) {
                    Some(m) => m.handle_prepare(msg.epoch, pn),
                    None => Reply::Nack(NackReason::NotMember),
                };
                let out = match reply {
                    Reply::Send(p) => p,
                    Reply::Nack(reason) => Payload::Nack { pn: Some(pn), reason },
                };
                self.send(flight.id, msg.from, sector, msg.epoch, out);
            }
            Payload::Accept { pn, value } => {
                let reply = match flight.memberships.get_mut(&sector) {
                    Some(m) => m.handle_accept(msg.epoch, pn, value),
                    None => Reply::Nack(NackReason::NotMember),
                };
                let out = match reply {
                    Reply::Send(p) => p,
                    Reply::Nack(reason) => Payload::Nack { pn: Some(pn), reason },
                };
                self.send(flight.id, msg.from, sector, msg.epoch, out);
            }
            Payload::Promise { pn, accepted } => {
                let Some(ctx) = flight.ctx.as_mut() else { return };
                if ctx.sector != sector {
                    return;
                }
                if let Phase::Synod { proposer, .. } = &mut ctx.phase {
                    if let Some(value) = proposer.on_promise(msg.from, pn, accepted) {
                        let epoch = proposer.epoch;
                        let cohort = proposer.cohort.clone();
                        for member in cohort {
                            self.send(
                                flight.id,
                                member,
                                sector,
                                epoch,
                                Payload::Accept { pn, value: value.clone() },
                            );
                        }
                        let window = self.cfg.params.timeout_duration_s;
                        self.set_timer(flight, TimerKind::AcceptWindow, window);
                    }
                }
            }
            Payload::Accepted { pn } => {
                let Some(ctx) = flight.ctx.as_mut() else { return };
                if ctx.sector != sector {
                    return;
                }
                if let Phase::Synod { proposer, .. } = &mut ctx.phase {
                    if proposer.on_accepted(msg.from, pn) {
                        self.decide(flight);
                    }
                }
            }
            Payload::Nack { pn, reason } => {
                let Some(ctx) = flight.ctx.as_mut() else { return };
                if ctx.sector != sector {
                    return;
                }
                if let Phase::Synod { proposer, .. } = &mut ctx.phase {
                    if !proposer.on_nack(pn, &reason) {
                        return;
                    }
                    match reason {
                        NackReason::WrongEpoch { current } if current > proposer.epoch => {
                            self.synod_rejected(flight, true);
                        }
                        NackReason::WrongEpoch { .. } => { /* lagging member; ignore */ }
                        NackReason::NotMember => {
                            // The cohort changed under us (an occupant left
                            // or has not initialized yet); refresh the view.
                            self.synod_rejected(flight, true);
                        }
                        NackReason::HigherPromised { .. } | NackReason::Busy => {
                            self.synod_rejected(flight, false);
                        }
                    }
                }
            }
            Payload::Learn { value } => {
                match flight.memberships.get_mut(&sector) {
                    Some(m) => {
                        match m.handle_learn(msg.epoch, &value) {
                            LearnOutcome::Applied => {
                                // Audit against the view the value joins
                                // (just applied: exclude the new plan itself).
                                let others: Vec<Arc<FlightPlan>> = m
                                    .view
                                    .values()
                                    .filter(|p| p.owner != value.owner())
                                    .cloned()
                                    .collect();
                                self.audit_admission(sector, &value, others.iter());
                                self.send(flight.id, msg.from, sector, msg.epoch, Payload::Learnt);
                                if value.exit && value.owner() == flight.id {
                                    // We were removed (eviction); stop acting
                                    // as a member of this sector.
                                    flight.memberships.remove(&sector);
                                }
                            }
                            LearnOutcome::AlreadyApplied => {
                                self.send(flight.id, msg.from, sector, msg.epoch, Payload::Learnt);
                            }
                            LearnOutcome::Future => { /* the driver will resend */ }
                        }
                    }
                    None => {
                        let becoming_member = flight
                            .ctx
                            .as_ref()
                            .map_or(false, |c| c.sector == sector && matches!(c.goal, Goal::Entry { .. }))
                            || flight.pending.iter().any(|g| matches!(g, Goal::Entry { .. }));
                        if !becoming_member {
                            // Former member: acknowledge so the driver can
                            // finish its round.
                            self.send(flight.id, msg.from, sector, msg.epoch, Payload::Learnt);
                        }
                    }
                }
            }
            Payload::Learnt => {
                let Some(ctx) = flight.ctx.as_mut() else { return };
                if ctx.sector != sector {
                    return;
                }
                if let Phase::Tap { epoch, round: TapRound::Learn, got, .. } = &mut ctx.phase {
                    if *epoch == msg.epoch {
                        got.insert(msg.from);
                        self.tap_advance(flight);
                    }
                }
            }
            Payload::Ak => {
                let outcome = match flight.memberships.get_mut(&sector) {
                    Some(m) => m.handle_ak(msg.epoch),
                    None => AkOutcome::Ack,
                };
                if outcome == AkOutcome::Ack {
                    self.send(flight.id, msg.from, sector, msg.epoch, Payload::Ack);
                }
            }
            Payload::Ack => {
                let Some(ctx) = flight.ctx.as_mut() else { return };
                if ctx.sector != sector {
                    return;
                }
                if let Phase::Tap { epoch, round: TapRound::Ak, got, .. } = &mut ctx.phase {
                    if *epoch == msg.epoch {
                        got.insert(msg.from);
                        self.tap_advance(flight);
                    }
                }
            }
        }
    }
}

fn proposer_promises(p: &SynodProposer) -> BTreeSet<u32> {
    p.promise_set()
}

fn proposer_accepts(p: &SynodProposer) -> BTreeSet<u32> {
    p.accept_set()
}

/// Alternate lateral offsets in trial order: right 3 NM, left 3 NM, right
/// 6 NM, and so on.
fn alternate_offsets(alternates: u32) -> impl Iterator<Item = Scalar> {
    (0..alternates).map(|i| {
        let k = (i / 2 + 1) as Scalar * 3.0;
        if i % 2 == 0 {
            k
        } else {
            -k
        }
    })
}

/// Branches the plan laterally at `anchor`: waypoints after the anchor are
/// offset perpendicular to the overall track and the suffix is re-timed at
/// the plan's nominal speed. Stationary hold segments keep their duration.
fn alternate_plan(plan: &FlightPlan, anchor: SimTime, offset_nm: Scalar) -> Option<FlightPlan> {
    if anchor <= plan.start_time() {
        return Some(plan.lateral_offset(offset_nm));
    }
    let mut out = plan.clone();
    out.split_at(anchor);
    let first = out.waypoints.first().expect("plans have waypoints");
    let last = out.waypoints.last().expect("plans have waypoints");
    let (dx, dy) = (last.x_nm - first.x_nm, last.y_nm - first.y_nm);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return None;
    }
    let (nx, ny) = (dy / len, -dx / len);
    let idx = out.waypoints.iter().position(|w| w.time > anchor)?;
    for w in &mut out.waypoints[idx..] {
        w.x_nm += nx * offset_nm;
        w.y_nm += ny * offset_nm;
    }
    // Re-time the suffix at nominal speed, preserving hold durations.
    for i in idx.max(1)..out.waypoints.len() {
        let (prev, cur) = {
            let (a, b) = out.waypoints.split_at(i);
            (a[a.len() - 1], b[0])
        };
        let dist = ((cur.x_nm - prev.x_nm).powi(2) + (cur.y_nm - prev.y_nm).powi(2)).sqrt();
        let dur = if dist == 0.0 {
            cur.time - prev.time // keep hold durations as they were
        } else {
            SimTime::from_secs_f64(dist / out.speed_kt * 3600.0)
        };
        out.waypoints[i].time = prev.time + dur;
    }
    for pair in out.waypoints.windows(2) {
        if pair[1].time <= pair[0].time {
            return None;
        }
    }
    Some(out)
}

/// Runs one scenario to quiescence (or a limit) and gathers every output.
pub fn run_scenario(plans: Vec<FlightPlan>, cfg: &SimConfig) -> SimOutcome {
    let started = std::time::Instant::now();
    let mut world = World::new(plans, cfg.clone());
    let limits = cfg.limits;
    while let Some((key, ev)) = world.sched.next(&limits) {
        world.dispatch(key, ev);
    }

    let mut metrics = std::mem::take(&mut world.metrics);
    metrics.timed_out = world.sched.timed_out;
    metrics.events_processed = world.sched.processed();
    metrics.makespan_s = world.now().as_secs_f64();
    metrics.wall_time_s = started.elapsed().as_secs_f64();

    // Executed trajectories: whatever each flight actually flew.
    let executed: Vec<FlightPlan> = world.flights.values().map(|f| f.plan.clone()).collect();
    let nmacs = scan_nmacs(&executed, &cfg.separation);
    metrics.nmac_count = nmacs.len() as u64;

    let mut sector_digests: BTreeMap<SectorId, Vec<(u32, u64, u64)>> = BTreeMap::new();
    for (sector, members) in &world.registry {
        let mut rows = Vec::new();
        for m in members {
            if let Some(state) = world.flights.get(m).and_then(|f| f.memberships.get(sector)) {
                rows.push((*m, state.epoch, state.digest()));
            }
        }
        sector_digests.insert(*sector, rows);
    }
    let promised_monotone = world
        .flights
        .values()
        .all(|f| f.memberships.values().all(|m| m.promised_monotone()));

    SimOutcome {
        metrics,
        trace_hash: world.hasher.finish(),
        executed,
        nmacs,
        violations: world.violations,
        quorum_log: world.quorum_log,
        sector_digests,
        event_log: world.event_log,
        promised_monotone,
    }
}
