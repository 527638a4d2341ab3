//! Discrete-event simulation of channel reservation in a long-delay
//! acoustic star network.
//!
//! Nodes reserve the channel toward a central sink with an
//! RTS/CTS/DATA/ACK handshake. A node that overhears a reservation must set
//! a NAV (a countdown during which it treats the channel as busy), but
//! without knowing pair distances the conventional rule charges every
//! listener the worst-case propagation delay, wasting time and
//! disadvantaging far nodes. This crate simulates that baseline against a
//! learned alternative: each listener keeps a per-transmitter reward table,
//! tries NAV durations, scores them ±1 by whether its transmission after
//! NAV expiry found the channel free at the sink, and greedily settles on
//! the shortest duration with a positive record.
//!
//! The workhorse pieces:
//!
//! - [`scenario`]: node geometry, channel constants, and the flat
//!   `key = value` config format.
//! - [`frames`]: the four-way handshake schedule with propagation-exact
//!   arrival windows, and the fixed worst-case NAV formulas.
//! - [`policy`]: reward tables, the ε exploration schedule, and
//!   lowest-positive-index NAV selection.
//! - [`engine`]: the deterministic event loop, episode training, the
//!   success/failure rule, and the brute-force oracle.
//! - [`report`]: experiment drivers, per-pair metrics, and CSV emitters.
//!
//! ```
//! use qnav::{run_experiment, FollowerMode, PolicyChoice, ScenarioConfig};
//!
//! let mut cfg = ScenarioConfig::reference();
//! cfg.episodes = 2000;
//! let report = run_experiment(&cfg, PolicyChoice::Oracle, FollowerMode::Isolated).unwrap();
//! assert_eq!(report.pairs.len(), 6);
//! ```
//!
//! Every run is a pure function of (config, seed): reruns produce
//! byte-identical CSVs. The `examples/` directory has one runnable program
//! per capability; `src/main.rs` is a thin CLI over the same calls.

pub mod engine;
pub mod frames;
pub mod policy;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod time;

pub use engine::{
    evaluate_pair, evaluate_pair_cts, failure_rule, oracle_min_nav, oracle_min_nav_cts,
    run_episode, run_training, AttemptBranch, Episode, EventKind, ExchangeTrace, FollowerMode,
    PairEvaluation, TrainingOutcome, TrainingState,
};
pub use frames::{
    baseline_nav_cts, baseline_nav_rts, baseline_navs, build_exchange, ExchangeSchedule, Frame,
    FrameKind, Interval,
};
pub use policy::{select_nav, EpsilonSchedule, NavDecision, QTable, SelectionBranch};
pub use report::{
    format_compare_table, format_summary_table, load_rewards_csv, node_pairs, run_compare,
    run_experiment, write_compare_csv, write_curve_csv, write_rewards_csv, write_summary_csv,
    write_trace_csv, CompareReport, PairReport, PolicyChoice, RunReport,
};
pub use rng::SeededStream;
pub use scenario::{pair_distance, propagation_delay, NodeId, ScenarioConfig};
pub use time::{Time, MILLIS_PER_TICK};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A config file line that failed to parse.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    /// A scenario that violates an invariant, or an operation asked of an
    /// impossible node pair.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    /// A reward-curve request for a row the dump does not contain.
    #[error("unknown (learner, peer) pair ({learner}, {peer}); available pairs: {available}")]
    UnknownPair {
        learner: String,
        peer: String,
        available: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
