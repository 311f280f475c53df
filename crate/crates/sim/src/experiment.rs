//! Experiment configuration, per-seed evaluation of every method, and CSV output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use diamond_core::nb3r::{nb3r_run, TraceRecord, UpdateSchedule};
use diamond_core::oracle::{
    brute_force_optimum, ospf_allocate, random_baseline_allocate, DEFAULT_RANDOM_TRIALS,
};
use diamond_core::topology::TopologyFile;
use diamond_core::{InterferenceParams, PathAllocation, Scenario, UtilityConfig, UtilityKind};
use diamond_grrl::episode::{rollout, ActionRule};
use diamond_grrl::train::{train_epoch, Adam, MetricsRecord, TrainConfig};
use diamond_grrl::{GraphContext, PolicyParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::delivery::simulate_delivery;
use crate::error::SimError;
use crate::topology::{load_preset, random_flows, random_topology, LinkAttributeRanges, Preset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySource {
    Random {
        v: usize,
        e: usize,
        #[serde(default = "default_area")]
        area_m: f64,
    },
    File {
        path: PathBuf,
    },
    Preset {
        name: Preset,
    },
}

fn default_area() -> f64 {
    500.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Diamond,
    GrrlOnly,
    Nb3rOnly,
    Ospf,
    Rb,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Diamond,
        Method::GrrlOnly,
        Method::Nb3rOnly,
        Method::Ospf,
        Method::Rb,
        Method::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Diamond => "diamond",
            Method::GrrlOnly => "grrl_only",
            Method::Nb3rOnly => "nb3r_only",
            Method::Ospf => "ospf",
            Method::Rb => "rb",
            Method::Oracle => "oracle",
        }
    }

    pub fn needs_policy(self) -> bool {
        matches!(self, Method::Diamond | Method::GrrlOnly)
    }

    /// Random stream used by the method's own sampling.
    fn stream(self) -> u64 {
        match self {
            Method::Diamond => 2,
            Method::GrrlOnly => 3,
            Method::Nb3rOnly => 4,
            Method::Ospf => 5,
            Method::Rb => 6,
            Method::Oracle => 7,
        }
    }
}

/// Random stream shared by the policy rollouts of `diamond` and `grrl_only`.
const GRRL_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub topology: TopologySource,
    pub attributes: LinkAttributeRanges,
    pub interference: InterferenceParams,
    pub flows: usize,
    pub k: usize,
    pub payload_mbit: [f64; 2],
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub utility: UtilityKind,
    pub schedule: UpdateSchedule,
    pub random_trials: usize,
    pub train: TrainConfig,
    pub train_seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: TopologySource::Random {
                v: 10,
                e: 15,
                area_m: default_area(),
            },
            attributes: LinkAttributeRanges::default(),
            interference: InterferenceParams::default(),
            flows: 10,
            k: diamond_core::paths::DEFAULT_K,
            payload_mbit: [1.0, 100.0],
            seeds: (0..10).collect(),
            methods: vec![
                Method::Diamond,
                Method::GrrlOnly,
                Method::Nb3rOnly,
                Method::Ospf,
                Method::Rb,
            ],
            utility: UtilityKind::Rate,
            schedule: UpdateSchedule::default(),
            random_trials: DEFAULT_RANDOM_TRIALS,
            train: TrainConfig::default(),
            train_seed: 1_000_003,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.attributes.validate()?;
        self.schedule.validate()?;
        self.train.validate()?;
        if self.k == 0 {
            return Err(SimError::Config("k must be >= 1".into()));
        }
        if self.random_trials == 0 {
            return Err(SimError::Config("random_trials must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(SimError::Config("no methods selected".into()));
        }
        Ok(())
    }

    pub fn needs_policy(&self) -> bool {
        self.methods.iter().any(|m| m.needs_policy())
    }
}

/// Draws one instance (topology, attributes, demands) from the configured source.
pub fn build_scenario(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Scenario, SimError> {
    let (graph, flows, params) = match &cfg.topology {
        TopologySource::Random { v, e, area_m } => {
            let g = random_topology(*v, *e, *area_m, &cfg.attributes, rng)?;
            let f = random_flows(&g, cfg.flows, cfg.payload_mbit, rng)?;
            (g, f, cfg.interference)
        }
        TopologySource::Preset { name } => {
            let g = load_preset(*name, &cfg.attributes, rng)?;
            let f = random_flows(&g, cfg.flows, cfg.payload_mbit, rng)?;
            (g, f, cfg.interference)
        }
        TopologySource::File { path } => {
            let (g, mut f, p) = TopologyFile::load(path)?.to_parts()?;
            if f.is_empty() {
                f = random_flows(&g, cfg.flows, cfg.payload_mbit, rng)?;
            }
            (g, f, p)
        }
    };
    Ok(Scenario::new(graph, flows, params, cfg.k)?)
}

fn instance_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Argmax policy allocation, flows placed in a random order.
pub fn grrl_allocate(
    scenario: &Scenario,
    params: &PolicyParams,
    ucfg: &UtilityConfig,
    alpha: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PathAllocation, SimError> {
    let ctx = GraphContext::new(&scenario.graph);
    let (_, alloc) = rollout(scenario, &ctx, params, ucfg, alpha, ActionRule::Greedy, rng)?;
    Ok(alloc)
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub allocation: PathAllocation,
    pub nb3r_rounds: usize,
    pub trace: Option<Vec<TraceRecord>>,
}

pub fn run_method(
    method: Method,
    scenario: &Scenario,
    cfg: &ExperimentConfig,
    params: Option<&PolicyParams>,
    seed: u64,
) -> Result<MethodOutcome, SimError> {
    let model = scenario.model();
    let ucfg = scenario.utility(cfg.utility);
    let mut rng = stream_rng(seed, method.stream());
    let policy = || {
        params.ok_or_else(|| SimError::Config(format!("method {} needs a policy checkpoint", method.name())))
    };
    let plain = |allocation| MethodOutcome {
        allocation,
        nb3r_rounds: 0,
        trace: None,
    };
    let refine = |init: PathAllocation, rng: &mut ChaCha8Rng| -> Result<MethodOutcome, SimError> {
        let out = nb3r_run(model, init, ucfg, cfg.schedule, rng)?;
        Ok(MethodOutcome {
            allocation: out.best,
            nb3r_rounds: out.rounds,
            trace: Some(out.trace),
        })
    };
    match method {
        Method::Ospf => Ok(plain(ospf_allocate(&scenario.graph, &scenario.flows, scenario.spaces.clone())?)),
        Method::Rb => Ok(plain(random_baseline_allocate(
            &model,
            scenario.spaces.clone(),
            cfg.random_trials,
            &ucfg,
            &mut rng,
        )?)),
        Method::Oracle => {
            let res = brute_force_optimum(&model, &scenario.spaces, &ucfg, false)?;
            Ok(plain(scenario.allocation(res.best)?))
        }
        Method::GrrlOnly => {
            let mut g = stream_rng(seed, GRRL_STREAM);
            Ok(plain(grrl_allocate(scenario, policy()?, &ucfg, cfg.train.alpha, &mut g)?))
        }
        Method::Diamond => {
            let mut g = stream_rng(seed, GRRL_STREAM);
            let init = grrl_allocate(scenario, policy()?, &ucfg, cfg.train.alpha, &mut g)?;
            refine(init, &mut rng)
        }
        Method::Nb3rOnly => {
            let init = ospf_allocate(&scenario.graph, &scenario.flows, scenario.spaces.clone())?;
            refine(init, &mut rng)
        }
    }
}

/// One (seed, method) row of the per-seed table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub method: String,
    pub avg_flow_rate_mbps: f64,
    pub max_delay_steps: u64,
    pub network_utility: f64,
    pub capped_flows: usize,
    pub nb3r_rounds: usize,
    pub wall_ms: f64,
}

/// Per-method means over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub method: String,
    pub avg_flow_rate_mbps: f64,
    pub max_delay_steps: f64,
    pub network_utility: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub per_seed: Vec<SeedRecord>,
    pub summary: Vec<SummaryRecord>,
}

pub fn evaluate(
    method: Method,
    scenario: &Scenario,
    cfg: &ExperimentConfig,
    params: Option<&PolicyParams>,
    seed: u64,
) -> Result<(SeedRecord, MethodOutcome), SimError> {
    let start = Instant::now();
    let outcome = run_method(method, scenario, cfg, params, seed)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let model = scenario.model();
    let ucfg = scenario.utility(cfg.utility);
    let alloc = &outcome.allocation;
    let n = alloc.num_flows();
    let rates: Vec<f64> = (0..n)
        .map(|f| model.flow_rate(alloc, f))
        .collect::<Result<_, _>>()?;
    let payloads: Vec<f64> = scenario.flows.iter().map(|f| f.payload).collect();
    let delivery = simulate_delivery(&model, alloc, &payloads);
    let record = SeedRecord {
        seed,
        method: method.name().to_string(),
        avg_flow_rate_mbps: if n == 0 { 0.0 } else { rates.iter().sum::<f64>() / n as f64 },
        max_delay_steps: delivery.max_delay,
        network_utility: model.network_utility(alloc, &ucfg)?,
        capped_flows: delivery.capped.iter().filter(|&&c| c).count(),
        nb3r_rounds: outcome.nb3r_rounds,
        wall_ms,
    };
    Ok((record, outcome))
}

pub fn summarize(methods: &[Method], rows: &[SeedRecord]) -> Vec<SummaryRecord> {
    methods
        .iter()
        .map(|m| {
            let mine: Vec<&SeedRecord> = rows.iter().filter(|r| r.method == m.name()).collect();
            let k = mine.len().max(1) as f64;
            SummaryRecord {
                method: m.name().to_string(),
                avg_flow_rate_mbps: mine.iter().map(|r| r.avg_flow_rate_mbps).sum::<f64>() / k,
                max_delay_steps: mine.iter().map(|r| r.max_delay_steps as f64).sum::<f64>() / k,
                network_utility: mine.iter().map(|r| r.network_utility).sum::<f64>() / k,
                seeds: mine.len(),
            }
        })
        .collect()
}

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in trace {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, summary: &[SummaryRecord]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in summary {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Evaluates every method on every seed. With an output directory, per-seed
/// rows are flushed as they complete, NB3R traces are written per seed, and
/// `summary.csv` is written at the end.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    params: Option<&PolicyParams>,
    out_dir: Option<&Path>,
) -> Result<RunMetrics, SimError> {
    cfg.validate()?;
    if cfg.needs_policy() && params.is_none() {
        return Err(SimError::Config("the selected methods need a policy checkpoint".into()));
    }
    let mut seed_writer = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Some(csv::Writer::from_path(dir.join("per_seed.csv"))?)
        }
        None => None,
    };
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let scenario = build_scenario(cfg, &mut instance_rng(seed))?;
        for &m in &cfg.methods {
            let (row, outcome) = evaluate(m, &scenario, cfg, params, seed)?;
            log::info!(
                "seed {seed} {}: avg rate {:.3} Mbps, utility {:.3}, max delay {}",
                row.method,
                row.avg_flow_rate_mbps,
                row.network_utility,
                row.max_delay_steps
            );
            if let (Some(dir), Some(trace)) = (out_dir, &outcome.trace) {
                write_trace(&dir.join(format!("trace_{}_seed{seed}.csv", m.name())), trace)?;
            }
            if let Some(w) = seed_writer.as_mut() {
                w.serialize(&row)?;
            }
            rows.push(row);
        }
        if let Some(w) = seed_writer.as_mut() {
            w.flush()?;
        }
    }
    let summary = summarize(&cfg.methods, &rows);
    if let Some(dir) = out_dir {
        write_summary(&dir.join("summary.csv"), &summary)?;
    }
    Ok(RunMetrics {
        per_seed: rows,
        summary,
    })
}

/// Trains a policy on instances drawn from the configured source with `train_seed`.
pub fn train_policy(cfg: &ExperimentConfig) -> Result<(PolicyParams, Vec<MetricsRecord>), SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train_seed);
    let mut params = PolicyParams::init(cfg.train.embedding, cfg.train.depth, &mut rng)?;
    let mut adam = Adam::new(params.num_params(), cfg.train.learning_rate);
    let mut log = Vec::with_capacity(cfg.train.epochs);
    for epoch in 0..cfg.train.epochs {
        let scenario = build_scenario(cfg, &mut rng)?;
        log.push(train_epoch(&scenario, &mut params, &mut adam, &cfg.train, epoch, &mut rng)?);
    }
    Ok((params, log))
}

/// Trains in-process, then runs the experiment; the checkpoint and training
/// metrics are written next to the results.
pub fn compare(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunMetrics, SimError> {
    fs::create_dir_all(out_dir)?;
    let params = if cfg.needs_policy() {
        let (params, metrics) = train_policy(cfg)?;
        diamond_grrl::checkpoint::save(&params, out_dir.join("policy.grrl"))?;
        diamond_grrl::train::write_metrics(out_dir.join("training.csv"), &metrics)?;
        Some(params)
    } else {
        None
    };
    run_experiment(cfg, params.as_ref(), Some(out_dir))
}
