//! Discrete-event episode engine.
//!
//! Each episode plays one primary handshake between a seeded-random
//! initiator and the sink. Every other node overhears the initiator's RTS
//! (and the sink's CTS), arms a NAV through its policy table, transmits its
//! own RTS the instant the NAV expires, and is rewarded ±1 by the failure
//! rule. Episodes are temporally isolated: the channel is idle between them
//! and every episode starts its clock at zero.
//!
//! Events are processed in the total order (time, node id, kind rank,
//! insertion sequence), so a run is a pure function of (config, seed).
//!
//! In the default isolated mode each follower attempt is scored against the
//! primary exchange alone, counterfactually independent of other followers,
//! which lets every (follower, peer) row learn its true boundary. The
//! contending mode makes follower transmissions real and mutually visible.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::frames::{build_exchange, ExchangeSchedule, Frame, FrameKind, Interval};
use crate::policy::{EpsilonSchedule, NavDecision, QTable, SelectionBranch};
use crate::rng::{SeededStream, POLICY_STREAM_TAG};
use crate::scenario::{NodeId, ScenarioConfig};
use crate::time::Time;
use crate::{Error, Result};

/// How follower attempts interact within an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FollowerMode {
    /// Every overheard control frame triggers its own counterfactual
    /// attempt; attempts never collide with each other.
    #[default]
    Isolated,
    /// One real attempt per follower (armed by the first overheard frame of
    /// the exchange); attempts collide at the sink and block each other.
    Contending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    TxEnd,
    RxEnd,
    NavExpiry,
    TxStart,
    RxStart,
    EpisodeEnd,
}

impl EventKind {
    /// Tie rank at equal times: frame ends resolve first, then NAV expiries,
    /// then new transmissions.
    fn rank(self) -> u8 {
        match self {
            EventKind::TxEnd => 0,
            EventKind::RxEnd => 1,
            EventKind::NavExpiry => 2,
            EventKind::TxStart => 3,
            EventKind::RxStart => 4,
            EventKind::EpisodeEnd => 5,
        }
    }
}

#[derive(Debug, Clone)]
pub enum EventPayload {
    Frame(Frame),
    Nav { peer: NodeId, decision: NavDecision },
    None,
}

/// A timestamped simulator event.
#[derive(Debug, Clone)]
pub struct Event {
    pub time: Time,
    pub node: NodeId,
    pub kind: EventKind,
    pub payload: EventPayload,
    seq: u64,
}

impl Event {
    fn key(&self) -> (Time, u16, u8, u64) {
        (self.time, self.node.0, self.kind.rank(), self.seq)
    }
}

#[derive(Default)]
struct EventQueue {
    heap: BinaryHeap<Reverse<HeapEntry>>,
    next_seq: u64,
}

struct HeapEntry(Event);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.0.key() == other.0.key()
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.key().cmp(&other.0.key())
    }
}

impl EventQueue {
    fn push(&mut self, time: Time, node: NodeId, kind: EventKind, payload: EventPayload) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(HeapEntry(Event {
            time,
            node,
            kind,
            payload,
            seq,
        })));
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(HeapEntry(ev))| ev)
    }
}

/// One training iteration: a primary exchange plus follower attempts.
#[derive(Debug, Clone)]
pub struct Episode {
    pub index: u64,
    pub initiator: NodeId,
    pub followers: Vec<NodeId>,
    pub start: Time,
}

/// How an attempt's NAV was chosen, as recorded in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptBranch {
    Random,
    Greedy,
    /// Fixed worst-case NAV (baseline policy evaluation).
    Fixed,
    /// Brute-force minimum NAV (oracle policy evaluation).
    Oracle,
}

impl From<SelectionBranch> for AttemptBranch {
    fn from(b: SelectionBranch) -> Self {
        match b {
            SelectionBranch::Random => AttemptBranch::Random,
            SelectionBranch::Greedy => AttemptBranch::Greedy,
        }
    }
}

impl std::fmt::Display for AttemptBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttemptBranch::Random => "random",
            AttemptBranch::Greedy => "greedy",
            AttemptBranch::Fixed => "fixed",
            AttemptBranch::Oracle => "oracle",
        })
    }
}

/// Per-attempt record: which row acted, what it chose, when the channel
/// freed (RET) and when the attempt's first bit reached the sink (LET).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangeTrace {
    pub episode: u64,
    pub follower: NodeId,
    pub peer: NodeId,
    /// NAV tick index; `None` when the wait was a fixed duration off the
    /// tick grid.
    pub nav_index: Option<usize>,
    pub branch: AttemptBranch,
    pub ret: Time,
    pub let_time: Time,
    pub success: bool,
}

/// Success verdict for one follower attempt.
///
/// The attempt succeeds iff the follower was free to transmit when its NAV
/// expired, its RTS starts arriving at the sink no earlier than the sink's
/// busy period ends (a first bit landing exactly at busy-end succeeds), and
/// no other node's transmission overlaps its arrival window at the sink.
pub fn failure_rule(
    follower_rts_arrival: Interval,
    sink_busy: Interval,
    follower_local_busy: bool,
    other_arrivals: &[Interval],
) -> bool {
    !follower_local_busy
        && follower_rts_arrival.start >= sink_busy.end
        && !other_arrivals
            .iter()
            .any(|o| o.overlaps(&follower_rts_arrival))
}

fn sink_busy_interval(schedule: &ExchangeSchedule) -> Interval {
    let first = schedule
        .frame(FrameKind::Rts)
        .reception_at(NodeId::SINK)
        .expect("the sink hears the initiator by precondition");
    Interval::new(first.start, schedule.channel_busy_end_at_sink)
}

/// Mutable training state: one reward table per non-sink node plus the
/// policy's random stream (separate from the episode stream so every policy
/// sees the same initiator sequence for a given seed).
pub struct TrainingState {
    pub tables: BTreeMap<NodeId, QTable>,
    pub epsilon: EpsilonSchedule,
    pub policy_rng: SeededStream,
}

impl TrainingState {
    pub fn new(cfg: &ScenarioConfig) -> TrainingState {
        let tables = cfg
            .non_sink_nodes()
            .into_iter()
            .map(|id| (id, QTable::for_scenario(id, cfg)))
            .collect();
        TrainingState {
            tables,
            epsilon: EpsilonSchedule::from_config(cfg),
            policy_rng: SeededStream::new(cfg.seed ^ POLICY_STREAM_TAG),
        }
    }
}

struct PendingAttempt {
    follower: NodeId,
    peer: NodeId,
    decision: NavDecision,
    tx_start: Time,
}

/// Runs one episode: plays the primary exchange through the event queue,
/// lets followers arm NAVs as they overhear control frames, evaluates every
/// attempt once the episode's events drain, applies rewards, and returns the
/// traces in (follower, peer) order.
pub fn run_episode(
    ep: &Episode,
    state: &mut TrainingState,
    cfg: &ScenarioConfig,
    mode: FollowerMode,
) -> Result<Vec<ExchangeTrace>> {
    let schedule = build_exchange(ep.initiator, ep.start, cfg)?;
    let sink_busy = sink_busy_interval(&schedule);

    let mut queue = EventQueue::default();
    for sf in &schedule.frames {
        let f = sf.frame;
        queue.push(f.tx_start, f.src, EventKind::TxStart, EventPayload::Frame(f));
        queue.push(f.tx_end, f.src, EventKind::TxEnd, EventPayload::Frame(f));
        for r in &sf.receptions {
            queue.push(r.interval.start, r.listener, EventKind::RxStart, EventPayload::Frame(f));
            queue.push(r.interval.end, r.listener, EventKind::RxEnd, EventPayload::Frame(f));
        }
    }

    let mut attempts: Vec<PendingAttempt> = Vec::new();
    let mut committed: Vec<NodeId> = Vec::new();
    let mut last_time = ep.start;

    while let Some(ev) = queue.pop() {
        last_time = last_time.max(ev.time);
        match ev.kind {
            EventKind::RxEnd => {
                let EventPayload::Frame(f) = ev.payload else {
                    continue;
                };
                let overheard = matches!(f.kind, FrameKind::Rts | FrameKind::Cts)
                    && ev.node != f.src
                    && ev.node != f.dst
                    && ep.followers.contains(&ev.node);
                if !overheard {
                    continue;
                }
                let table = state
                    .tables
                    .get_mut(&ev.node)
                    .expect("every follower owns a table");
                if mode == FollowerMode::Contending && committed.contains(&ev.node) {
                    // already waiting on an earlier NAV this exchange; the
                    // reception still advances the exploration schedule
                    table.note_reception();
                    continue;
                }
                let decision = table.on_overheard_frame(f.src, &state.epsilon, &mut state.policy_rng);
                committed.push(ev.node);
                queue.push(
                    ev.time + decision.nav_duration,
                    ev.node,
                    EventKind::NavExpiry,
                    EventPayload::Nav {
                        peer: f.src,
                        decision,
                    },
                );
            }
            EventKind::NavExpiry => {
                let EventPayload::Nav { peer, decision } = ev.payload else {
                    continue;
                };
                attempts.push(PendingAttempt {
                    follower: ev.node,
                    peer,
                    decision,
                    tx_start: ev.time,
                });
            }
            _ => {}
        }
    }
    // close the episode explicitly; everything from here is evaluation
    let _episode_end = Event {
        time: last_time,
        node: NodeId::SINK,
        kind: EventKind::EpisodeEnd,
        payload: EventPayload::None,
        seq: u64::MAX,
    };

    // Evaluation happens after all attempts are known (collisions need the
    // full set) in canonical row order; within an episode each row acts at
    // most once, so deferring rewards to this point changes nothing.
    attempts.sort_by_key(|a| (a.follower, a.peer));

    let ctrl = cfg.control_frame_duration;
    let arrivals: Vec<(NodeId, Interval, Interval)> = attempts
        .iter()
        .map(|a| {
            let tx = Interval::new(a.tx_start, a.tx_start + ctrl);
            let at_sink = tx.shifted(cfg.delay_between(a.follower, NodeId::SINK)?);
            Ok((a.follower, tx, at_sink))
        })
        .collect::<Result<_>>()?;

    let mut traces = Vec::with_capacity(attempts.len());
    for (i, a) in attempts.iter().enumerate() {
        let (_, _, arrival) = arrivals[i];
        let (local_busy, others) = match mode {
            FollowerMode::Isolated => (false, Vec::new()),
            FollowerMode::Contending => {
                let mut local_busy = false;
                let mut others = Vec::new();
                for (j, &(other, other_tx, other_arrival)) in arrivals.iter().enumerate() {
                    if j == i || other == a.follower {
                        continue;
                    }
                    others.push(other_arrival);
                    if cfg.in_range(other, a.follower)? {
                        let at_me = other_tx.shifted(cfg.delay_between(other, a.follower)?);
                        if at_me.contains(a.tx_start) {
                            local_busy = true;
                        }
                    }
                }
                (local_busy, others)
            }
        };
        let success = failure_rule(arrival, sink_busy, local_busy, &others);
        state
            .tables
            .get_mut(&a.follower)
            .expect("attempting follower owns a table")
            .reward_update(a.peer, a.decision.nav_index, success);
        traces.push(ExchangeTrace {
            episode: ep.index,
            follower: a.follower,
            peer: a.peer,
            nav_index: Some(a.decision.nav_index),
            branch: a.decision.branch.into(),
            ret: schedule.channel_busy_end_at_sink,
            let_time: arrival.start,
            success,
        });
    }
    Ok(traces)
}

/// Everything a training run produces.
pub struct TrainingOutcome {
    pub tables: BTreeMap<NodeId, QTable>,
    pub traces: Vec<ExchangeTrace>,
    /// Initiator of each episode, in order (not part of the trace schema but
    /// needed to audit sink-row attempts).
    pub episode_initiators: Vec<NodeId>,
}

/// Runs `cfg.episodes` episodes. Each episode draws its initiator uniformly
/// (seeded) among non-sink nodes; every other non-sink node is a follower
/// with pending data.
pub fn run_training(cfg: &ScenarioConfig, mode: FollowerMode) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let non_sink = cfg.non_sink_nodes();
    let mut state = TrainingState::new(cfg);
    let mut episode_rng = SeededStream::new(cfg.seed);
    let mut traces = Vec::new();
    let mut episode_initiators = Vec::new();

    if !non_sink.is_empty() {
        for index in 0..cfg.episodes {
            let initiator = non_sink[episode_rng.next_index(non_sink.len())];
            let followers = non_sink.iter().copied().filter(|&f| f != initiator).collect();
            let ep = Episode {
                index,
                initiator,
                followers,
                start: Time::ZERO,
            };
            traces.extend(run_episode(&ep, &mut state, cfg, mode)?);
            episode_initiators.push(initiator);
        }
    }

    Ok(TrainingOutcome {
        tables: state.tables,
        traces,
        episode_initiators,
    })
}

/// Outcome of replaying one follower attempt against one exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairEvaluation {
    pub ret: Time,
    pub let_time: Time,
    pub success: bool,
    pub expiry: Time,
}

fn check_pair(follower: NodeId, initiator: NodeId) -> Result<()> {
    if follower == initiator {
        return Err(Error::InvalidScenario(
            "follower and initiator must differ".into(),
        ));
    }
    if follower.is_sink() || initiator.is_sink() {
        return Err(Error::InvalidScenario(
            "the sink neither initiates nor follows".into(),
        ));
    }
    Ok(())
}

fn evaluate_expiry(
    follower: NodeId,
    schedule: &ExchangeSchedule,
    expiry: Time,
    cfg: &ScenarioConfig,
) -> Result<PairEvaluation> {
    let tx = Interval::new(expiry, expiry + cfg.control_frame_duration);
    let arrival = tx.shifted(cfg.delay_between(follower, NodeId::SINK)?);
    let sink_busy = sink_busy_interval(schedule);
    Ok(PairEvaluation {
        ret: schedule.channel_busy_end_at_sink,
        let_time: arrival.start,
        success: failure_rule(arrival, sink_busy, false, &[]),
        expiry,
    })
}

/// Replays a single isolated exchange with `follower` waiting `nav` after
/// the initiator's RTS finished arriving at it, then applies the failure
/// rule.
pub fn evaluate_pair(
    follower: NodeId,
    initiator: NodeId,
    nav: Time,
    cfg: &ScenarioConfig,
) -> Result<PairEvaluation> {
    cfg.validate()?;
    check_pair(follower, initiator)?;
    let schedule = build_exchange(initiator, Time::ZERO, cfg)?;
    let rx = schedule
        .frame(FrameKind::Rts)
        .reception_at(follower)
        .ok_or_else(|| {
            Error::InvalidScenario(format!("follower {follower} cannot hear initiator {initiator}"))
        })?;
    evaluate_expiry(follower, &schedule, rx.end + nav, cfg)
}

/// Same replay, but the NAV counts from the sink's CTS instead of the
/// initiator's RTS (the trigger that feeds sink-keyed rows).
pub fn evaluate_pair_cts(
    follower: NodeId,
    initiator: NodeId,
    nav: Time,
    cfg: &ScenarioConfig,
) -> Result<PairEvaluation> {
    cfg.validate()?;
    check_pair(follower, initiator)?;
    let schedule = build_exchange(initiator, Time::ZERO, cfg)?;
    let rx = schedule
        .frame(FrameKind::Cts)
        .reception_at(follower)
        .ok_or_else(|| {
            Error::InvalidScenario(format!("follower {follower} cannot hear the sink"))
        })?;
    evaluate_expiry(follower, &schedule, rx.end + nav, cfg)
}

/// Brute-force ground truth: the smallest NAV index whose RTS-triggered
/// attempt succeeds, or `None` when no index in the table works (a scenario
/// pathology).
pub fn oracle_min_nav(
    follower: NodeId,
    initiator: NodeId,
    cfg: &ScenarioConfig,
) -> Result<Option<usize>> {
    cfg.validate()?;
    check_pair(follower, initiator)?;
    for index in 0..cfg.nav_index_count {
        if evaluate_pair(follower, initiator, Time::from_ticks(index as u64), cfg)?.success {
            return Ok(Some(index));
        }
    }
    Ok(None)
}

/// CTS-triggered variant of the oracle, used to audit sink-keyed rows.
pub fn oracle_min_nav_cts(
    follower: NodeId,
    initiator: NodeId,
    cfg: &ScenarioConfig,
) -> Result<Option<usize>> {
    cfg.validate()?;
    check_pair(follower, initiator)?;
    for index in 0..cfg.nav_index_count {
        if evaluate_pair_cts(follower, initiator, Time::from_ticks(index as u64), cfg)?.success {
            return Ok(Some(index));
        }
    }
    Ok(None)
}
