//! REINFORCE with a best-of-random baseline and Adam ascent on the return.

use std::path::Path;

use diamond_core::{Scenario, UtilityKind};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::episode::{policy_for, random_baseline_return, rollout, ActionRule, Episode};
use crate::error::GrrlError;
use crate::gnn::{backward, GraphContext};
use crate::params::{PolicyParams, DEFAULT_DEPTH, DEFAULT_EMBEDDING};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub embedding: usize,
    pub depth: usize,
    /// Weight of utility against interference in the shaped return.
    pub alpha: f64,
    /// Random profiles drawn for the baseline.
    pub baseline_trials: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Episodes averaged into each update.
    pub episodes_per_epoch: usize,
    pub utility: UtilityKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embedding: DEFAULT_EMBEDDING,
            depth: DEFAULT_DEPTH,
            alpha: 0.5,
            baseline_trials: 16,
            learning_rate: 1e-3,
            epochs: 200,
            episodes_per_epoch: 1,
            utility: UtilityKind::Rate,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GrrlError> {
        let bad = |m: &str| Err(GrrlError::InvalidParameter(m.into()));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.baseline_trials == 0 {
            return bad("baseline_trials must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if self.episodes_per_epoch == 0 {
            return bad("episodes_per_epoch must be >= 1");
        }
        PolicyParams::zeros(self.embedding, self.depth).map(|_| ())
    }
}

/// Adam in the ascent direction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// `theta += lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn ascend(&mut self, params: &mut PolicyParams, grad: &PolicyParams) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut i = 0;
        for (p, g) in params.tensors_mut().into_iter().zip(grad.tensors()) {
            for (x, &gi) in p.iter_mut().zip(g) {
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * gi;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * gi * gi;
                *x += self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
                i += 1;
            }
        }
    }
}

/// `(sum over steps of grad log p(action)) * (return - baseline)`.
pub fn policy_gradient(
    scenario: &Scenario,
    ctx: &GraphContext,
    params: &PolicyParams,
    episode: &Episode,
    baseline: f64,
) -> PolicyParams {
    let mut grad = PolicyParams::zeros(params.d(), params.depth()).expect("shape of a valid policy");
    let advantage = episode.ret - baseline;
    if advantage == 0.0 {
        return grad;
    }
    for step in &episode.steps {
        let out = policy_for(params, ctx, scenario, &step.features, step.flow);
        let dscores: Vec<f64> = out
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| advantage * if i == step.action { 1.0 - p } else { -p })
            .collect();
        backward(params, ctx, &out, &dscores, &mut grad);
    }
    grad
}

/// One optimizer step from a batch of episodes; returns the gradient norm.
pub fn reinforce_update(
    scenario: &Scenario,
    ctx: &GraphContext,
    params: &mut PolicyParams,
    adam: &mut Adam,
    episodes: &[Episode],
    baseline: f64,
) -> Result<f64, GrrlError> {
    let mut grad = PolicyParams::zeros(params.d(), params.depth())?;
    for ep in episodes {
        grad.add_scaled(&policy_gradient(scenario, ctx, params, ep, baseline), 1.0 / episodes.len() as f64);
    }
    let norm = grad.norm();
    if !norm.is_finite() || !baseline.is_finite() {
        let ret = episodes.iter().map(|e| e.ret).sum::<f64>() / episodes.len() as f64;
        return Err(GrrlError::NonFiniteGradient {
            update: adam.steps() as usize + 1,
            ret,
            baseline,
        });
    }
    adam.ascend(params, &grad);
    Ok(norm)
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub mean_return: f64,
    pub baseline: f64,
    pub grad_norm: f64,
}

/// Rollouts, baseline and update for one epoch on `scenario`.
pub fn train_epoch<R: Rng + ?Sized>(
    scenario: &Scenario,
    params: &mut PolicyParams,
    adam: &mut Adam,
    cfg: &TrainConfig,
    epoch: usize,
    rng: &mut R,
) -> Result<MetricsRecord, GrrlError> {
    let ctx = GraphContext::new(&scenario.graph);
    let ucfg = scenario.utility(cfg.utility);
    let mut episodes = Vec::with_capacity(cfg.episodes_per_epoch);
    for _ in 0..cfg.episodes_per_epoch {
        let (ep, _) = rollout(scenario, &ctx, params, &ucfg, cfg.alpha, ActionRule::Sample, rng)?;
        episodes.push(ep);
    }
    let baseline = random_baseline_return(scenario, cfg.baseline_trials, &ucfg, cfg.alpha, rng)?;
    let grad_norm = reinforce_update(scenario, &ctx, params, adam, &episodes, baseline)?;
    let mean_return = episodes.iter().map(|e| e.ret).sum::<f64>() / episodes.len() as f64;
    log::debug!("epoch {epoch}: return {mean_return:.4}, baseline {baseline:.4}, |g| {grad_norm:.3e}");
    Ok(MetricsRecord {
        epoch,
        mean_return,
        baseline,
        grad_norm,
    })
}

/// Trains for `cfg.epochs` epochs, asking `instances` for the scenario of each epoch.
pub fn train<R, F>(
    cfg: &TrainConfig,
    mut params: PolicyParams,
    mut instances: F,
    rng: &mut R,
) -> Result<(PolicyParams, Vec<MetricsRecord>), GrrlError>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &mut R) -> Result<Scenario, GrrlError>,
{
    cfg.validate()?;
    let mut adam = Adam::new(params.num_params(), cfg.learning_rate);
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let scenario = instances(epoch, rng)?;
        log.push(train_epoch(&scenario, &mut params, &mut adam, cfg, epoch, rng)?);
    }
    Ok((params, log))
}

/// [`train`] on one fixed scenario.
pub fn train_on<R: Rng + ?Sized>(
    cfg: &TrainConfig,
    mut params: PolicyParams,
    scenario: &Scenario,
    rng: &mut R,
) -> Result<(PolicyParams, Vec<MetricsRecord>), GrrlError> {
    cfg.validate()?;
    let mut adam = Adam::new(params.num_params(), cfg.learning_rate);
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        log.push(train_epoch(scenario, &mut params, &mut adam, cfg, epoch, rng)?);
    }
    Ok((params, log))
}

pub fn write_metrics(path: impl AsRef<Path>, records: &[MetricsRecord]) -> Result<(), GrrlError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
