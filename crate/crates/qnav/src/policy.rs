//! The learned NAV policy: per-peer integer reward rows, an ε exploration
//! schedule driven by how many control frames a node has overheard, greedy
//! selection of the lowest positive-reward index, and ±1 reward updates.
//!
//! Rewards are plain cumulative counters. An index that keeps failing sinks
//! below zero, an index that keeps succeeding climbs, and the greedy rule
//! picks the smallest index that has proven itself positive, so the policy
//! converges on the shortest NAV that still clears the ongoing exchange.

use std::fmt;

use crate::rng::SeededStream;
use crate::scenario::{NodeId, ScenarioConfig};
use crate::time::Time;

/// Exploration schedule: ε stays at 1 until `threshold` receptions, then
/// decays geometrically per reception down to `floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub threshold: u64,
    pub decay: f64,
    pub floor: f64,
}

impl EpsilonSchedule {
    pub fn from_config(cfg: &ScenarioConfig) -> EpsilonSchedule {
        EpsilonSchedule {
            threshold: cfg.epsilon_threshold,
            decay: cfg.epsilon_decay,
            floor: cfg.epsilon_floor,
        }
    }

    /// ε after `receive_count` overheard control frames. Deterministic: the
    /// power is computed by explicit square-and-multiply so the result is a
    /// fixed sequence of IEEE multiplications on every platform.
    pub fn epsilon(&self, receive_count: u64) -> f64 {
        if receive_count <= self.threshold {
            1.0
        } else {
            pow_u64(self.decay, receive_count - self.threshold).max(self.floor)
        }
    }
}

fn pow_u64(base: f64, mut exp: u64) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= b;
        }
        b *= b;
        exp >>= 1;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionBranch {
    Random,
    Greedy,
}

impl fmt::Display for SelectionBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionBranch::Random => "random",
            SelectionBranch::Greedy => "greedy",
        })
    }
}

/// One NAV choice: the tick index, how it was chosen, and the wait it maps
/// to. The index space bounds the wait at the system maximum by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NavDecision {
    pub nav_index: usize,
    pub branch: SelectionBranch,
    pub nav_duration: Time,
}

impl NavDecision {
    fn at(nav_index: usize, branch: SelectionBranch) -> NavDecision {
        NavDecision {
            nav_index,
            branch,
            nav_duration: Time::from_ticks(nav_index as u64),
        }
    }
}

/// ε-greedy selection over one peer's reward row.
///
/// With probability `e` (and always when `e >= 1`, without consuming a
/// branch draw) the index is the next raw draw modulo the row length.
/// Otherwise the smallest index with a strictly positive reward is chosen;
/// a row with no positive entry falls back to a random index, recorded as
/// the random branch.
pub fn select_nav(row: &[i64], e: f64, rng: &mut SeededStream) -> NavDecision {
    assert!(!row.is_empty(), "reward row must not be empty");
    let explore = e >= 1.0 || rng.next_f64() < e;
    if !explore {
        if let Some(idx) = lowest_positive_index(row) {
            return NavDecision::at(idx, SelectionBranch::Greedy);
        }
    }
    NavDecision::at(rng.next_index(row.len()), SelectionBranch::Random)
}

fn lowest_positive_index(row: &[i64]) -> Option<usize> {
    row.iter().position(|&r| r > 0)
}

/// One node's reward store: a dense (peer × NAV index) table of cumulative
/// ±1 rewards plus the node's count of overheard control frames.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    learner: NodeId,
    peers: Vec<NodeId>,
    nav_index_count: usize,
    rewards: Vec<i64>,
    receive_count: u64,
}

impl QTable {
    /// Rows for an explicit peer set (sorted and deduplicated here).
    pub fn new(learner: NodeId, mut peers: Vec<NodeId>, nav_index_count: usize) -> QTable {
        assert!(nav_index_count > 0);
        peers.sort();
        peers.dedup();
        peers.retain(|&p| p != learner);
        let rewards = vec![0i64; peers.len() * nav_index_count];
        QTable {
            learner,
            peers,
            nav_index_count,
            rewards,
            receive_count: 0,
        }
    }

    /// Rows for every transmitter the learner could overhear in `cfg`:
    /// all other nodes, the sink included (the sink's row is the one CTS
    /// overhearings land in).
    pub fn for_scenario(learner: NodeId, cfg: &ScenarioConfig) -> QTable {
        let peers = cfg
            .node_positions
            .keys()
            .copied()
            .filter(|&p| p != learner)
            .collect();
        QTable::new(learner, peers, cfg.nav_index_count)
    }

    pub fn learner(&self) -> NodeId {
        self.learner
    }

    pub fn peers(&self) -> &[NodeId] {
        &self.peers
    }

    pub fn nav_index_count(&self) -> usize {
        self.nav_index_count
    }

    pub fn receive_count(&self) -> u64 {
        self.receive_count
    }

    fn row_offset(&self, peer: NodeId) -> usize {
        let pos = self
            .peers
            .iter()
            .position(|&p| p == peer)
            .unwrap_or_else(|| panic!("node {} has no reward row for peer {peer}", self.learner));
        pos * self.nav_index_count
    }

    pub fn row(&self, peer: NodeId) -> &[i64] {
        let off = self.row_offset(peer);
        &self.rewards[off..off + self.nav_index_count]
    }

    pub fn reward(&self, peer: NodeId, nav_index: usize) -> i64 {
        self.row(peer)[nav_index]
    }

    /// ±1 on exactly one entry. An out-of-range index is a policy bug and
    /// panics.
    pub fn reward_update(&mut self, peer: NodeId, nav_index: usize, success: bool) {
        assert!(
            nav_index < self.nav_index_count,
            "nav index {nav_index} outside table depth {}",
            self.nav_index_count
        );
        let off = self.row_offset(peer) + nav_index;
        self.rewards[off] += if success { 1 } else { -1 };
    }

    /// Reaction to an overheard RTS or CTS from `peer`: counts the
    /// reception, refreshes ε, and picks a NAV from the peer's row. The
    /// caller arms the NAV to expire `nav_duration` after the overheard
    /// frame finished arriving.
    pub fn on_overheard_frame(
        &mut self,
        peer: NodeId,
        schedule: &EpsilonSchedule,
        rng: &mut SeededStream,
    ) -> NavDecision {
        self.receive_count += 1;
        let e = schedule.epsilon(self.receive_count);
        let off = self.row_offset(peer);
        let row = &self.rewards[off..off + self.nav_index_count];
        select_nav(row, e, rng)
    }

    /// Counts a reception without making a decision (used when a node in
    /// contending mode already committed to an earlier NAV this exchange).
    pub fn note_reception(&mut self) {
        self.receive_count += 1;
    }

    /// The index greedy selection would pick right now, if any row entry is
    /// positive. Evaluation uses this without touching counters or RNG.
    pub fn greedy_index(&self, peer: NodeId) -> Option<usize> {
        lowest_positive_index(self.row(peer))
    }

    /// All (peer, nav_index, reward) entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (NodeId, usize, i64)> + '_ {
        self.peers.iter().enumerate().flat_map(move |(pi, &peer)| {
            let off = pi * self.nav_index_count;
            self.rewards[off..off + self.nav_index_count]
                .iter()
                .enumerate()
                .map(move |(idx, &r)| (peer, idx, r))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_core::{RngCore, SeedableRng};

    fn n(id: u16) -> NodeId {
        NodeId(id)
    }

    fn sched(threshold: u64, decay: f64, floor: f64) -> EpsilonSchedule {
        EpsilonSchedule {
            threshold,
            decay,
            floor,
        }
    }

    #[test]
    fn epsilon_is_one_below_threshold() {
        let s = sched(100, 0.999, 0.05);
        assert_eq!(s.epsilon(0), 1.0);
        assert_eq!(s.epsilon(50), 1.0);
        assert_eq!(s.epsilon(100), 1.0);
    }

    #[test]
    fn epsilon_reaches_the_floor() {
        // 0.999^3000 ≈ 0.0497 < 0.05, so the floor takes over
        let s = sched(100, 0.999, 0.05);
        assert_eq!(s.epsilon(3100), 0.05);
        assert!(s.epsilon(101) < 1.0);
        assert!(s.epsilon(101) > 0.99);
    }

    #[test]
    fn epsilon_floor_of_one_pins_pure_random() {
        let s = sched(0, 0.5, 1.0);
        for count in [0, 1, 10, 1_000_000] {
            assert_eq!(s.epsilon(count), 1.0);
        }
    }

    #[test]
    fn epsilon_is_non_increasing_and_clamped() {
        let s = sched(37, 0.9, 0.03);
        let mut prev = f64::INFINITY;
        for count in 0..5000 {
            let e = s.epsilon(count);
            assert!(e <= prev);
            assert!((s.floor..=1.0).contains(&e));
            prev = e;
        }
    }

    #[test]
    fn greedy_picks_lowest_positive_index() {
        let mut rng = SeededStream::new(1);
        let row = [-2, -1, 3, 1, 0, 0];
        let d = select_nav(&row, 0.0, &mut rng);
        assert_eq!(d.nav_index, 2);
        assert_eq!(d.branch, SelectionBranch::Greedy);
        assert_eq!(d.nav_duration, Time::from_millis(200));
    }

    #[test]
    fn all_zero_row_falls_back_to_random() {
        let mut rng = SeededStream::new(1);
        let row = [0i64; 390];
        let d = select_nav(&row, 0.0, &mut rng);
        assert_eq!(d.branch, SelectionBranch::Random);
        assert!(d.nav_index < 390);
    }

    #[test]
    fn exploration_uses_first_draw_modulo_row_length() {
        // oracle straight from the underlying generator
        let mut raw = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let expected = (raw.next_u64() % 390) as usize;

        let mut rng = SeededStream::new(99);
        let row = [0i64; 390];
        let d = select_nav(&row, 1.0, &mut rng);
        assert_eq!(d.nav_index, expected);
        assert_eq!(d.branch, SelectionBranch::Random);
    }

    #[test]
    fn single_positive_entry_makes_greedy_constant() {
        let mut row = [0i64; 390];
        row[42] = 1;
        let mut rng = SeededStream::new(3);
        for _ in 0..100 {
            let d = select_nav(&row, 0.0, &mut rng);
            assert_eq!(d.nav_index, 42);
            assert_eq!(d.branch, SelectionBranch::Greedy);
        }
    }

    #[test]
    fn greedy_choice_is_scale_invariant() {
        let row: Vec<i64> = vec![-4, 0, -1, 2, 7, -3, 5];
        let scaled: Vec<i64> = row.iter().map(|r| r * 10).collect();
        assert_eq!(lowest_positive_index(&row), lowest_positive_index(&scaled));
    }

    #[test]
    fn reward_update_touches_exactly_one_entry() {
        let cfg = ScenarioConfig::reference();
        let mut table = QTable::for_scenario(n(2), &cfg);
        let before: Vec<(NodeId, usize, i64)> = table.entries().collect();
        table.reward_update(n(1), 7, true);
        for (peer, idx, reward) in table.entries() {
            let prior = before
                .iter()
                .find(|(p, i, _)| *p == peer && *i == idx)
                .unwrap()
                .2;
            if peer == n(1) && idx == 7 {
                assert_eq!(reward, prior + 1);
            } else {
                assert_eq!(reward, prior);
            }
        }
    }

    #[test]
    fn rewards_accumulate_by_ones() {
        let mut table = QTable::new(n(2), vec![n(1)], 10);
        table.reward_update(n(1), 0, true);
        assert_eq!(table.reward(n(1), 0), 1);
        let mut table = QTable::new(n(2), vec![n(1)], 10);
        table.reward_update(n(1), 0, false);
        assert_eq!(table.reward(n(1), 0), -1);

        let mut table = QTable::new(n(2), vec![n(1)], 10);
        for _ in 0..5 {
            table.reward_update(n(1), 3, true);
        }
        for _ in 0..2 {
            table.reward_update(n(1), 3, false);
        }
        assert_eq!(table.reward(n(1), 3), 3);
    }

    #[test]
    #[should_panic(expected = "outside table depth")]
    fn out_of_range_index_is_a_policy_bug() {
        let mut table = QTable::new(n(2), vec![n(1)], 10);
        table.reward_update(n(1), 10, true);
    }

    #[test]
    fn table_shape_matches_scenario() {
        let cfg = ScenarioConfig::reference();
        // each of the three learners keeps rows for the other two nodes and
        // the sink: 3 × 390 per learner
        for learner in cfg.non_sink_nodes() {
            let table = QTable::for_scenario(learner, &cfg);
            assert_eq!(table.peers().len(), 3);
            assert_eq!(table.entries().count(), 3 * 390);
            assert!(table.entries().all(|(_, _, r)| r == 0));
            assert!(table.peers().contains(&NodeId::SINK));
        }
    }

    #[test]
    fn first_reception_always_explores() {
        let cfg = ScenarioConfig::reference();
        let s = EpsilonSchedule::from_config(&cfg);
        let mut rng = SeededStream::new(5);
        let mut table = QTable::for_scenario(n(2), &cfg);
        let d = table.on_overheard_frame(n(1), &s, &mut rng);
        assert_eq!(d.branch, SelectionBranch::Random);
        assert_eq!(table.receive_count(), 1);
    }

    #[test]
    fn cts_overhearings_land_in_the_sink_row() {
        let cfg = ScenarioConfig::reference();
        let s = sched(1000, 0.9, 0.02);
        let mut rng = SeededStream::new(5);
        let mut table = QTable::for_scenario(n(2), &cfg);
        let d = table.on_overheard_frame(NodeId::SINK, &s, &mut rng);
        table.reward_update(NodeId::SINK, d.nav_index, true);
        assert_eq!(table.reward(NodeId::SINK, d.nav_index), 1);
        assert!(table.row(n(1)).iter().all(|&r| r == 0));
        assert!(table.row(n(3)).iter().all(|&r| r == 0));
    }
}
