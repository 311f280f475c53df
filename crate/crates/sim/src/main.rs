use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use diamond_core::oracle::brute_force_optimum;
use diamond_core::topology::TopologyFile;
use diamond_core::{InterferenceParams, Scenario, UtilityKind};
use diamond_sim::experiment::{compare, run_experiment, train_policy};
use diamond_sim::topology::{random_flows, random_topology, LinkAttributeRanges};
use diamond_sim::ExperimentConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "diamond", version, about = "Multi-flow routing in wireless interference networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random connected topology as JSON.
    GenTopology {
        /// Number of nodes.
        #[arg(long)]
        v: usize,
        /// Number of bidirectional node pairs.
        #[arg(long)]
        e: usize,
        /// Side of the square deployment area in meters.
        #[arg(long, default_value_t = 500.0)]
        area: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random demands to include.
        #[arg(long, default_value_t = 0)]
        flows: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a policy on instances drawn from the config and save a checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Training metrics CSV (default: next to the checkpoint).
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Evaluate the configured methods with a trained checkpoint.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train in-process, then evaluate every configured method.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive optimum for a topology file with flows; writes the full profile table.
    Oracle {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long, default_value_t = diamond_core::paths::DEFAULT_K)]
        k: usize,
        #[arg(long, value_parser = parse_utility, default_value = "rate")]
        utility: UtilityKind,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_utility(s: &str) -> Result<UtilityKind, String> {
    match s {
        "rate" => Ok(UtilityKind::Rate),
        "log_rate" => Ok(UtilityKind::LogRate),
        other => Err(format!("unknown utility {other:?} (rate or log_rate)")),
    }
}

fn output_dir(cli: Option<PathBuf>, cfg: &ExperimentConfig) -> Result<PathBuf> {
    cli.or_else(|| cfg.output_dir.clone())
        .context("no output directory: pass --out or set output_dir in the config")
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::GenTopology {
            v,
            e,
            area,
            seed,
            flows,
            out,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let graph = random_topology(v, e, area, &LinkAttributeRanges::default(), &mut rng)?;
            let demands = random_flows(&graph, flows, [1.0, 100.0], &mut rng)?;
            TopologyFile::from_parts(&graph, &demands, InterferenceParams::default()).save(&out)?;
            println!("wrote {} nodes, {} links to {}", graph.num_nodes(), graph.num_links(), out.display());
        }
        Command::Train {
            config,
            out,
            metrics,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (params, log) = train_policy(&cfg)?;
            diamond_grrl::checkpoint::save(&params, &out)?;
            let metrics = metrics.unwrap_or_else(|| out.with_extension("metrics.csv"));
            diamond_grrl::train::write_metrics(&metrics, &log)?;
            println!("wrote {} and {}", out.display(), metrics.display());
        }
        Command::Run {
            config,
            checkpoint,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let params = match checkpoint {
                Some(p) => Some(diamond_grrl::checkpoint::load(&p).with_context(|| format!("loading {}", p.display()))?),
                None if cfg.needs_policy() => bail!("the configured methods need --checkpoint"),
                None => None,
            };
            let dir = output_dir(out, &cfg)?;
            run_experiment(&cfg, params.as_ref(), Some(&dir))?;
            println!("results in {}", dir.display());
        }
        Command::Compare { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = output_dir(out, &cfg)?;
            compare(&cfg, &dir)?;
            println!("results in {}", dir.display());
        }
        Command::Oracle {
            topology,
            k,
            utility,
            out,
        } => {
            let (graph, flows, params) = TopologyFile::load(&topology)?.to_parts()?;
            if flows.is_empty() {
                bail!("{} has no flows", topology.display());
            }
            let scenario = Scenario::new(graph, flows, params, k)?;
            let cfg = scenario.utility(utility);
            let res = brute_force_optimum(&scenario.model(), &scenario.spaces, &cfg, true)?;
            let mut w = csv::Writer::from_path(&out)?;
            w.write_record(["profile_indices", "utility"])?;
            for (profile, u) in res.table.as_deref().unwrap_or_default() {
                let joined = profile.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("-");
                w.write_record([joined, u.to_string()])?;
            }
            w.flush()?;
            let best = res.best.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("-");
            println!("best profile {best} with utility {}", res.best_utility);
        }
    }
    Ok(())
}
