//! Sequential allocation episodes and their shaped returns.
//!
//! Flows are placed one at a time in a random order. After `n` placements the
//! partial return is
//! `r_n = alpha * sum of allocated utilities - (1 - alpha) * sum over links on
//! allocated paths of I / noise`, and the step reward is `r_n - r_{n-1}`.

use std::collections::BTreeSet;

use diamond_core::oracle::best_of_random;
use diamond_core::{FlowId, LinkActivity, PathAllocation, RateModel, Scenario, UtilityConfig};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::GrrlError;
use crate::features::edge_features;
use crate::gnn::{demand_input, forward, GraphContext, PolicyOutput};
use crate::params::PolicyParams;

/// How a path is picked from the policy distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionRule {
    Sample,
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub flow: FlowId,
    /// Edge features the policy saw.
    pub features: Array2<f64>,
    pub action: usize,
    pub log_prob: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub order: Vec<FlowId>,
    pub steps: Vec<StepRecord>,
    /// `r_N`, the shaped value of the final allocation.
    pub ret: f64,
}

/// Partial return of the flows with `chosen[f] = Some(index)`.
///
/// Flows are visited in id order and links in id order, so the value for a
/// complete allocation does not depend on the order flows were placed in.
pub fn partial_return(
    model: &RateModel<'_>,
    scenario: &Scenario,
    chosen: &[Option<usize>],
    act: &LinkActivity,
    cfg: &UtilityConfig,
    alpha: f64,
) -> f64 {
    let mut utility = 0.0;
    let mut links = BTreeSet::new();
    for (f, c) in chosen.iter().enumerate() {
        if let Some(i) = *c {
            let path = scenario.spaces[f].path(i);
            utility += cfg.utility(model.path_rate(path, act));
            links.extend(path.iter().copied());
        }
    }
    let interference: f64 = links
        .into_iter()
        .map(|l| {
            model.interference(l, act).expect("link on a candidate path")
                / model.graph.links()[l].noise_psd
        })
        .sum();
    alpha * utility - (1.0 - alpha) * interference
}

/// `R(sigma)` for a complete allocation.
pub fn episode_return(
    model: &RateModel<'_>,
    scenario: &Scenario,
    alloc: &PathAllocation,
    cfg: &UtilityConfig,
    alpha: f64,
) -> f64 {
    let act = LinkActivity::from_allocation(alloc, model.graph.num_links());
    let chosen: Vec<Option<usize>> = alloc.chosen.iter().map(|&c| Some(c)).collect();
    partial_return(model, scenario, &chosen, &act, cfg, alpha)
}

/// Step rewards `r_n - r_{n-1}` with `r_0 = 0`.
pub fn step_rewards(partial: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    partial
        .iter()
        .map(|&r| {
            let d = r - prev;
            prev = r;
            d
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<(), GrrlError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(GrrlError::InvalidParameter(format!("alpha {alpha} outside [0, 1]")))
    }
}

/// Policy distribution for `flow` given the features of the current state.
pub fn policy_for(
    params: &PolicyParams,
    ctx: &GraphContext,
    scenario: &Scenario,
    features: &Array2<f64>,
    flow: FlowId,
) -> PolicyOutput {
    let demand = demand_input(&scenario.flows[flow], ctx.num_nodes, scenario.max_payload());
    let paths: Vec<&[usize]> = scenario.spaces[flow].paths().iter().map(|p| p.as_slice()).collect();
    forward(params, ctx, features, demand, &paths)
}

/// Places every flow in `order`, picking paths by `rule`.
#[allow(clippy::too_many_arguments)]
pub fn rollout_in_order<R: Rng + ?Sized>(
    scenario: &Scenario,
    ctx: &GraphContext,
    params: &PolicyParams,
    cfg: &UtilityConfig,
    alpha: f64,
    order: Vec<FlowId>,
    rule: ActionRule,
    rng: &mut R,
) -> Result<(Episode, PathAllocation), GrrlError> {
    check_alpha(alpha)?;
    let n = scenario.num_flows();
    let mut sorted = order.clone();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(GrrlError::InvalidParameter("flow order is not a permutation".into()));
    }
    let model = scenario.model();
    let mut act = LinkActivity::new(scenario.graph.num_links());
    let mut chosen: Vec<Option<usize>> = vec![None; n];
    let mut last: Option<&[usize]> = None;
    let mut steps = Vec::with_capacity(n);
    let mut prev = 0.0;
    for &flow in &order {
        let features = edge_features(&model, &act, last);
        let out = policy_for(params, ctx, scenario, &features, flow);
        let action = match rule {
            ActionRule::Sample => diamond_core::nb3r::sample_index(&out.probs, rng),
            ActionRule::Greedy => out.argmax(),
        };
        let path = scenario.spaces[flow].path(action);
        act.add_path(flow, path);
        chosen[flow] = Some(action);
        last = Some(path);
        let r = partial_return(&model, scenario, &chosen, &act, cfg, alpha);
        steps.push(StepRecord {
            flow,
            features,
            action,
            log_prob: out.log_prob(action),
            reward: r - prev,
        });
        prev = r;
    }
    let alloc = scenario.allocation(chosen.into_iter().map(|c| c.expect("every flow placed")).collect())?;
    Ok((
        Episode {
            order,
            steps,
            ret: prev,
        },
        alloc,
    ))
}

/// One episode in a uniformly shuffled flow order.
pub fn rollout<R: Rng + ?Sized>(
    scenario: &Scenario,
    ctx: &GraphContext,
    params: &PolicyParams,
    cfg: &UtilityConfig,
    alpha: f64,
    rule: ActionRule,
    rng: &mut R,
) -> Result<(Episode, PathAllocation), GrrlError> {
    let mut order: Vec<FlowId> = (0..scenario.num_flows()).collect();
    order.shuffle(rng);
    rollout_in_order(scenario, ctx, params, cfg, alpha, order, rule, rng)
}

/// Best network utility over `trials` uniform profiles.
pub fn random_baseline_value<R: Rng + ?Sized>(
    scenario: &Scenario,
    trials: usize,
    cfg: &UtilityConfig,
    rng: &mut R,
) -> Result<f64, GrrlError> {
    best_random(scenario, trials, rng, |model, alloc| {
        model.network_utility(alloc, cfg).expect("valid allocation")
    })
}

/// Best shaped return `R(sigma)` over `trials` uniform profiles; the same
/// draws as [`random_baseline_value`], scored like an episode.
pub fn random_baseline_return<R: Rng + ?Sized>(
    scenario: &Scenario,
    trials: usize,
    cfg: &UtilityConfig,
    alpha: f64,
    rng: &mut R,
) -> Result<f64, GrrlError> {
    check_alpha(alpha)?;
    best_random(scenario, trials, rng, |model, alloc| {
        episode_return(model, scenario, alloc, cfg, alpha)
    })
}

fn best_random<R, F>(scenario: &Scenario, trials: usize, rng: &mut R, score: F) -> Result<f64, GrrlError>
where
    R: Rng + ?Sized,
    F: Fn(&RateModel<'_>, &PathAllocation) -> f64,
{
    if trials == 0 {
        return Err(GrrlError::InvalidParameter("baseline needs at least one trial".into()));
    }
    let model = scenario.model();
    let mut alloc = PathAllocation::first_choices(scenario.spaces.clone());
    let (_, best) = best_of_random(
        &scenario.spaces,
        trials,
        |p| {
            alloc.chosen.copy_from_slice(p);
            score(&model, &alloc)
        },
        rng,
    );
    Ok(best)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Exact expected return of the sampling policy, enumerating every flow order
/// and every action sequence. Exponential; meant for tiny instances.
pub fn expected_return(
    scenario: &Scenario,
    ctx: &GraphContext,
    params: &PolicyParams,
    cfg: &UtilityConfig,
    alpha: f64,
) -> Result<f64, GrrlError> {
    check_alpha(alpha)?;
    let model = scenario.model();
    let orders = permutations(scenario.num_flows());
    let mut total = 0.0;
    for order in &orders {
        let mut act = LinkActivity::new(scenario.graph.num_links());
        let mut chosen = vec![None; scenario.num_flows()];
        total += expected_from(scenario, ctx, params, cfg, alpha, &model, order, 0, &mut act, &mut chosen, None);
    }
    Ok(total / orders.len() as f64)
}

#[allow(clippy::too_many_arguments)]
fn expected_from(
    scenario: &Scenario,
    ctx: &GraphContext,
    params: &PolicyParams,
    cfg: &UtilityConfig,
    alpha: f64,
    model: &RateModel<'_>,
    order: &[FlowId],
    depth: usize,
    act: &mut LinkActivity,
    chosen: &mut Vec<Option<usize>>,
    last: Option<&[usize]>,
) -> f64 {
    if depth == order.len() {
        return partial_return(model, scenario, chosen, act, cfg, alpha);
    }
    let flow = order[depth];
    let features = edge_features(model, act, last);
    let out = policy_for(params, ctx, scenario, &features, flow);
    let mut value = 0.0;
    for (i, &p) in out.probs.iter().enumerate() {
        let path = scenario.spaces[flow].path(i);
        act.add_path(flow, path);
        chosen[flow] = Some(i);
        value += p * expected_from(scenario, ctx, params, cfg, alpha, model, order, depth + 1, act, chosen, Some(path));
        chosen[flow] = None;
        act.remove_path(flow, path);
    }
    value
}

/// Mean return of the argmax policy over every flow order.
pub fn greedy_return(
    scenario: &Scenario,
    ctx: &GraphContext,
    params: &PolicyParams,
    cfg: &UtilityConfig,
    alpha: f64,
) -> Result<f64, GrrlError> {
    let orders = permutations(scenario.num_flows());
    let mut total = 0.0;
    // greedy rollouts never touch the generator
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    for order in &orders {
        let (ep, _) = rollout_in_order(scenario, ctx, params, cfg, alpha, order.clone(), ActionRule::Greedy, &mut rng)?;
        total += ep.ret;
    }
    Ok(total / orders.len() as f64)
}
