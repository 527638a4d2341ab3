//! Thin CLI over the library: `run`, `reward-curve` and `compare`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use qnav::{
    format_compare_table, format_summary_table, load_rewards_csv, run_compare, run_experiment,
    write_compare_csv, write_curve_csv, write_rewards_csv, write_summary_csv, write_trace_csv,
    FollowerMode, NodeId, PolicyChoice, Result, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "qnav",
    version,
    about = "NAV-timing simulator for long-delay acoustic star networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy over a scenario; writes rewards.csv, trace.csv and
    /// summary.csv and prints the per-pair summary table.
    Run {
        /// Scenario config file (defaults to the bundled reference scenario).
        #[arg(long)]
        config: Option<PathBuf>,
        /// baseline, qnav or oracle.
        #[arg(long, default_value = "qnav")]
        policy: String,
        /// Override the config's episode count.
        #[arg(long)]
        episodes: Option<u64>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the CSV artifacts.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Let follower attempts collide with each other instead of scoring
        /// each one against the primary exchange alone.
        #[arg(long)]
        contending_followers: bool,
        /// Dump zero reward entries too.
        #[arg(long)]
        dump_full_qtable: bool,
    },
    /// Extract one (learner, peer) reward series from a rewards.csv dump.
    RewardCurve {
        /// rewards.csv written by `run`.
        #[arg(long)]
        rewards: PathBuf,
        /// Learner node id.
        #[arg(long)]
        learner: u16,
        /// Peer (row key) node id; 0 is the sink.
        #[arg(long)]
        peer: u16,
        /// Series length (the table depth the dump was produced with).
        #[arg(long, default_value_t = 390)]
        nav_index_count: usize,
        /// Write the series here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run baseline and learned policies on identical episode streams and
    /// write the per-pair comparison.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        contending_followers: bool,
    },
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

fn load_config(
    path: &Option<PathBuf>,
    episodes: Option<u64>,
    seed: Option<u64>,
) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::reference(),
    };
    if let Some(e) = episodes {
        cfg.episodes = e;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn mode(contending: bool) -> FollowerMode {
    if contending {
        FollowerMode::Contending
    } else {
        FollowerMode::Isolated
    }
}

fn create(out_dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(out_dir)?;
    Ok(BufWriter::new(File::create(out_dir.join(name))?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            policy,
            episodes,
            seed,
            out,
            contending_followers,
            dump_full_qtable,
        } => {
            let cfg = load_config(&config, episodes, seed)?;
            let policy: PolicyChoice = policy.parse()?;
            let report = run_experiment(&cfg, policy, mode(contending_followers))?;

            write_rewards_csv(&report.tables, dump_full_qtable, create(&out, "rewards.csv")?)?;
            write_trace_csv(&report.traces, create(&out, "trace.csv")?)?;
            write_summary_csv(&report, &cfg, create(&out, "summary.csv")?)?;
            print!("{}", format_summary_table(&report));
            Ok(())
        }
        Command::RewardCurve {
            rewards,
            learner,
            peer,
            nav_index_count,
            out,
        } => {
            let dump = load_rewards_csv(&rewards)?;
            let curve = dump.curve(NodeId(learner), NodeId(peer), nav_index_count)?;
            match out {
                Some(path) => {
                    if let Some(dir) = path.parent() {
                        if !dir.as_os_str().is_empty() {
                            std::fs::create_dir_all(dir)?;
                        }
                    }
                    write_curve_csv(&curve, BufWriter::new(File::create(path)?))?;
                }
                None => {
                    let stdout = std::io::stdout();
                    write_curve_csv(&curve, stdout.lock())?;
                }
            }
            Ok(())
        }
        Command::Compare {
            config,
            episodes,
            seed,
            out,
            contending_followers,
        } => {
            let cfg = load_config(&config, episodes, seed)?;
            let report = run_compare(&cfg, mode(contending_followers))?;
            let mut w = create(&out, "compare.csv")?;
            write_compare_csv(&report, &mut w)?;
            w.flush()?;
            print!("{}", format_compare_table(&report));
            Ok(())
        }
    }
}
