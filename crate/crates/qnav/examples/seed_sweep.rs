//! Trains the reference scenario across a range of seeds in parallel and
//! reports, per seed, whether every initiator-keyed row converged to the
//! brute-force minimum NAV and how dominant the boundary reward ended up.
//!
//!     cargo run --release -p qnav --example seed_sweep -- 1 40

use std::collections::BTreeMap;
use std::thread;

use qnav::{oracle_min_nav, run_training, FollowerMode, NodeId, ScenarioConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let first: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let last: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(first + 9);

    let base = ScenarioConfig::reference();
    let mut oracle: BTreeMap<(NodeId, NodeId), usize> = BTreeMap::new();
    for follower in base.non_sink_nodes() {
        for initiator in base.non_sink_nodes() {
            if follower != initiator {
                let idx = oracle_min_nav(follower, initiator, &base)
                    .unwrap()
                    .expect("reference pairs are reachable");
                oracle.insert((follower, initiator), idx);
            }
        }
    }

    // each seed owns its full state; only results cross threads
    let handles: Vec<_> = (first..=last)
        .map(|seed| {
            let mut cfg = base.clone();
            let oracle = oracle.clone();
            cfg.seed = seed;
            thread::spawn(move || {
                let out = run_training(&cfg, FollowerMode::Isolated).unwrap();
                let mut converged = 0usize;
                let mut misses = Vec::new();
                let mut min_dominance = f64::INFINITY;
                for (&(follower, initiator), &boundary) in &oracle {
                    let table = &out.tables[&follower];
                    let greedy = table.greedy_index(initiator);
                    if greedy == Some(boundary) {
                        converged += 1;
                    } else {
                        misses.push(format!("({follower},{initiator}): greedy {greedy:?} vs oracle {boundary}"));
                    }
                    let row = table.row(initiator);
                    let boundary_reward = row[boundary];
                    let runner_up = row
                        .iter()
                        .enumerate()
                        .filter(|&(i, &r)| i != boundary && r > 0)
                        .map(|(_, &r)| r)
                        .max()
                        .unwrap_or(0);
                    if runner_up > 0 {
                        min_dominance = min_dominance.min(boundary_reward as f64 / runner_up as f64);
                    }
                }
                (seed, converged, oracle.len(), misses, min_dominance)
            })
        })
        .collect();

    let mut all_good = Vec::new();
    for h in handles {
        let (seed, converged, total, misses, dominance) = h.join().unwrap();
        let status = if converged == total { "ok " } else { "MISS" };
        println!(
            "seed {seed:>3}: {status} {converged}/{total} rows converged, min boundary dominance {dominance:.1}x"
        );
        for m in misses {
            println!("          {m}");
        }
        if converged == total {
            all_good.push(seed);
        }
    }
    println!("fully converged seeds: {all_good:?}");
}
