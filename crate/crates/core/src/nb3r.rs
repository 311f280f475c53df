//! Distributed noisy best-response refinement.
//!
//! Each updating round a set of optimizing flows is selected (no two of them
//! interfere), every selected flow evaluates its collaborative utility for each
//! candidate path with all other flows frozen, and resamples its path from the
//! Boltzmann distribution `exp(nu * U_n)`. Because the sum of utilities is an
//! exact potential for the collaborative utilities, the chain with fixed `nu`
//! and one updater per round is stationary at `exp(nu * phi)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alloc::{LinkActivity, PathAllocation};
use crate::error::NetError;
use crate::graph::FlowId;
use crate::interference::InterferenceMap;
use crate::rate::{RateModel, UtilityConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Random backoff timers; a flow updates when it beats all its neighbors.
    #[default]
    Backoff,
    /// Exactly one uniformly chosen flow per round.
    SingleUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuMode {
    Fixed(f64),
    /// `nu(t) = ln(t) / delta`; `None` uses `N * span(u)`.
    Cooling { delta: Option<f64> },
}

impl Default for NuMode {
    fn default() -> Self {
        NuMode::Cooling { delta: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UpdateSchedule {
    pub mode: UpdateMode,
    /// Backoff timers are drawn from `U[0, backoff_horizon]` seconds.
    pub backoff_horizon: f64,
    pub max_rounds: usize,
    /// Stop after this many consecutive rounds without a path change.
    pub stall_window: usize,
    pub nu: NuMode,
}

impl Default for UpdateSchedule {
    fn default() -> Self {
        UpdateSchedule {
            mode: UpdateMode::Backoff,
            backoff_horizon: 1.0,
            max_rounds: 1000,
            stall_window: 20,
            nu: NuMode::default(),
        }
    }
}

impl UpdateSchedule {
    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |m: &str| Err(NetError::InvalidParameter(m.into()));
        if !(self.backoff_horizon > 0.0 && self.backoff_horizon.is_finite()) {
            return bad("backoff horizon must be > 0");
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be >= 1");
        }
        if self.stall_window == 0 {
            return bad("stall_window must be >= 1");
        }
        match self.nu {
            NuMode::Fixed(nu) if !(nu >= 0.0 && nu.is_finite()) => bad("nu must be >= 0"),
            NuMode::Cooling { delta: Some(d) } if !(d > 0.0 && d.is_finite()) => {
                bad("cooling delta must be > 0")
            }
            _ => Ok(()),
        }
    }
}

/// Cooling schedule `ln(t) / delta` for round `t >= 1`.
pub fn cooling_nu(t: f64, delta: f64) -> f64 {
    debug_assert!(t >= 1.0 && delta > 0.0);
    t.ln() / delta
}

/// `exp(nu * v_i) / sum_j exp(nu * v_j)`, computed with max subtraction.
pub fn boltzmann(values: &[f64], nu: f64) -> Vec<f64> {
    let max = values
        .iter()
        .map(|&v| nu * v)
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = values.iter().map(|&v| (nu * v - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left a sliver at the top; return the last positive entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Picks the flows allowed to update this round.
///
/// In backoff mode a flow is selected iff its timer is strictly smaller than
/// every neighbor's (equal timers go to the lower id), so the result is an
/// independent set of the flow-interference graph.
pub fn select_optimizing_flows<R: Rng + ?Sized>(
    num_flows: usize,
    map: &InterferenceMap,
    schedule: &UpdateSchedule,
    rng: &mut R,
) -> Vec<FlowId> {
    if num_flows == 0 {
        return Vec::new();
    }
    match schedule.mode {
        UpdateMode::SingleUniform => vec![rng.gen_range(0..num_flows)],
        UpdateMode::Backoff => {
            let timers: Vec<f64> = (0..num_flows)
                .map(|_| rng.gen::<f64>() * schedule.backoff_horizon)
                .collect();
            (0..num_flows)
                .filter(|&n| {
                    map.flow_neighbors(n)
                        .iter()
                        .all(|&m| (timers[n], n) < (timers[m], m))
                })
                .collect()
        }
    }
}

/// `U_n = u_n + sum over m in N_n of u_m`, evaluated for `alloc` with a matching activity.
fn collaborative_with(
    model: &RateModel<'_>,
    alloc: &PathAllocation,
    act: &LinkActivity,
    flow: FlowId,
    cfg: &UtilityConfig,
) -> f64 {
    let own = cfg.utility(model.path_rate(alloc.path(flow), act));
    model
        .map
        .flow_neighbors(flow)
        .iter()
        .fold(own, |acc, &m| acc + cfg.utility(model.path_rate(alloc.path(m), act)))
}

fn require_neighbors(model: &RateModel<'_>, alloc: &PathAllocation) -> Result<(), NetError> {
    if alloc.num_flows() > 1 && !model.map.has_flow_neighbors() {
        return Err(NetError::InvalidParameter(
            "flow neighbors have not been derived from the action spaces".into(),
        ));
    }
    Ok(())
}

/// Collaborative utility of `flow` under `alloc`.
pub fn collaborative_utility(
    model: &RateModel<'_>,
    alloc: &PathAllocation,
    flow: FlowId,
    cfg: &UtilityConfig,
) -> Result<f64, NetError> {
    require_neighbors(model, alloc)?;
    let act = model.activity(alloc)?;
    if flow >= alloc.num_flows() {
        return Err(NetError::AllocationMismatch(format!("unknown flow {flow}")));
    }
    Ok(collaborative_with(model, alloc, &act, flow, cfg))
}

/// Collaborative utility of `flow` for each of its candidates, others frozen.
/// `act` is restored before returning.
fn candidate_values(
    model: &RateModel<'_>,
    alloc: &mut PathAllocation,
    act: &mut LinkActivity,
    flow: FlowId,
    cfg: &UtilityConfig,
) -> Vec<f64> {
    let current = alloc.chosen[flow];
    let k = alloc.action_spaces[flow].len();
    let mut values = Vec::with_capacity(k);
    for i in 0..k {
        if i != current {
            let space = &alloc.action_spaces[flow];
            act.switch_path(flow, space.path(alloc.chosen[flow]), space.path(i));
            alloc.chosen[flow] = i;
        }
        values.push(collaborative_with(model, alloc, act, flow, cfg));
        if i != current {
            let space = &alloc.action_spaces[flow];
            act.switch_path(flow, space.path(i), space.path(current));
            alloc.chosen[flow] = current;
        }
    }
    values
}

/// Noisy best-response pmf of `flow` over its action space.
pub fn nbr_distribution(
    model: &RateModel<'_>,
    alloc: &PathAllocation,
    flow: FlowId,
    cfg: &UtilityConfig,
    nu: f64,
) -> Result<Vec<f64>, NetError> {
    require_neighbors(model, alloc)?;
    if flow >= alloc.num_flows() {
        return Err(NetError::AllocationMismatch(format!("unknown flow {flow}")));
    }
    let mut act = model.activity(alloc)?;
    let mut scratch = alloc.clone();
    let values = candidate_values(model, &mut scratch, &mut act, flow, cfg);
    Ok(boltzmann(&values, nu))
}

/// One row of the refinement trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: usize,
    pub nu: f64,
    pub network_utility: f64,
    pub num_switches: usize,
}

/// The refinement Markov chain, advanced one updating round at a time.
pub struct Nb3rChain<'a> {
    model: RateModel<'a>,
    cfg: UtilityConfig,
    schedule: UpdateSchedule,
    delta: f64,
    alloc: PathAllocation,
    act: LinkActivity,
    round: usize,
}

impl<'a> Nb3rChain<'a> {
    pub fn new(
        model: RateModel<'a>,
        initial: PathAllocation,
        cfg: UtilityConfig,
        schedule: UpdateSchedule,
    ) -> Result<Self, NetError> {
        schedule.validate()?;
        require_neighbors(&model, &initial)?;
        let act = model.activity(&initial)?;
        let delta = match schedule.nu {
            NuMode::Cooling { delta: Some(d) } => d,
            _ => (initial.num_flows() as f64 * cfg.span()).max(f64::MIN_POSITIVE),
        };
        Ok(Nb3rChain {
            model,
            cfg,
            schedule,
            delta,
            alloc: initial,
            act,
            round: 0,
        })
    }

    pub fn allocation(&self) -> &PathAllocation {
        &self.alloc
    }

    pub fn profile(&self) -> &[usize] {
        &self.alloc.chosen
    }

    pub fn rounds(&self) -> usize {
        self.round
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn network_utility(&self) -> f64 {
        self.model
            .network_utility_with(&self.alloc, &self.act, &self.cfg)
    }

    /// `nu` for round `t` (1-based).
    pub fn nu_at(&self, t: usize) -> f64 {
        match self.schedule.nu {
            NuMode::Fixed(nu) => nu,
            NuMode::Cooling { .. } => cooling_nu(t as f64, self.delta),
        }
    }

    /// Runs one updating round and returns `(nu, number of path changes)`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (f64, usize) {
        self.round += 1;
        let nu = self.nu_at(self.round);
        let updaters =
            select_optimizing_flows(self.alloc.num_flows(), self.model.map, &self.schedule, rng);
        let mut switches = 0;
        for n in updaters {
            let values =
                candidate_values(&self.model, &mut self.alloc, &mut self.act, n, &self.cfg);
            let pick = sample_index(&boltzmann(&values, nu), rng);
            let current = self.alloc.chosen[n];
            if pick != current {
                let space = &self.alloc.action_spaces[n];
                if space.path(pick) != space.path(current) {
                    switches += 1;
                }
                self.act.switch_path(n, space.path(current), space.path(pick));
                self.alloc.chosen[n] = pick;
            }
        }
        (nu, switches)
    }
}

/// Result of a refinement run.
#[derive(Debug, Clone, PartialEq)]
pub struct Nb3rOutcome {
    /// Highest-utility profile visited (the initial one included).
    pub best: PathAllocation,
    pub best_utility: f64,
    /// Profile held when the run stopped.
    pub last: PathAllocation,
    pub initial_utility: f64,
    pub trace: Vec<TraceRecord>,
    pub rounds: usize,
    /// True if the run stopped on the stall window rather than the round cap.
    pub converged: bool,
}

/// Refines `initial` until no flow changes path for `stall_window` rounds or
/// `max_rounds` is reached.
pub fn nb3r_run<R: Rng + ?Sized>(
    model: RateModel<'_>,
    initial: PathAllocation,
    cfg: UtilityConfig,
    schedule: UpdateSchedule,
    rng: &mut R,
) -> Result<Nb3rOutcome, NetError> {
    let mut chain = Nb3rChain::new(model, initial, cfg, schedule)?;
    let initial_utility = chain.network_utility();
    let mut best = chain.profile().to_vec();
    let mut best_utility = initial_utility;
    let mut trace = Vec::new();
    let mut stall = 0;
    let mut converged = false;
    while chain.rounds() < schedule.max_rounds {
        let (nu, switches) = chain.step(rng);
        let phi = chain.network_utility();
        trace.push(TraceRecord {
            round: chain.rounds(),
            nu,
            network_utility: phi,
            num_switches: switches,
        });
        if phi > best_utility {
            best_utility = phi;
            best.copy_from_slice(chain.profile());
        }
        stall = if switches == 0 { stall + 1 } else { 0 };
        if stall >= schedule.stall_window {
            converged = true;
            break;
        }
    }
    let last = chain.allocation().clone();
    let best = PathAllocation {
        action_spaces: last.action_spaces.clone(),
        chosen: best,
    };
    Ok(Nb3rOutcome {
        best,
        best_utility,
        last,
        initial_utility,
        trace,
        rounds: chain.rounds(),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nu_zero_is_uniform() {
        assert_eq!(boltzmann(&[3.0, -1.0, 7.0, 0.5], 0.0), vec![0.25; 4]);
    }

    #[test]
    fn boltzmann_arithmetic() {
        let p = boltzmann(&[0.0, 2f64.ln()], 1.0);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn large_nu_concentrates_on_best_response() {
        let p = boltzmann(&[1.0, 2.0, 5.0], 100.0);
        // others carry exp(-300) + exp(-400) of the mass
        assert_eq!(p[2], 1.0);
        assert!(p[1] > 0.0 && p[1] < 1e-130);
        assert!(p[0] < p[1]);
    }

    #[test]
    fn cooling_values() {
        assert_eq!(cooling_nu(1.0, 30.0), 0.0);
        assert!((cooling_nu(std::f64::consts::E, 30.0) - 1.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_validation() {
        let mut s = UpdateSchedule::default();
        s.validate().unwrap();
        s.stall_window = 0;
        assert!(s.validate().is_err());
        let s = UpdateSchedule {
            nu: NuMode::Fixed(-1.0),
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let s = UpdateSchedule {
            nu: NuMode::Cooling { delta: Some(0.0) },
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn isolated_flows_all_update() {
        let inst = isolated_pair();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = UpdateSchedule::default();
        for _ in 0..20 {
            assert_eq!(select_optimizing_flows(2, &inst.map, &s, &mut rng), vec![0, 1]);
        }
    }

    #[test]
    fn interfering_pair_selects_exactly_one() {
        let inst = crossing_pair();
        assert_eq!(inst.map.flow_neighbors(0), &[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = UpdateSchedule::default();
        for _ in 0..100 {
            assert_eq!(select_optimizing_flows(2, &inst.map, &s, &mut rng).len(), 1);
        }
    }

    #[test]
    fn single_uniform_selects_one() {
        let inst = crossing_pair();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = UpdateSchedule {
            mode: UpdateMode::SingleUniform,
            ..Default::default()
        };
        let mut seen = [0; 2];
        for _ in 0..1000 {
            let f = select_optimizing_flows(2, &inst.map, &s, &mut rng);
            assert_eq!(f.len(), 1);
            seen[f[0]] += 1;
        }
        assert!(seen[0] > 400 && seen[1] > 400);
    }

    #[test]
    fn backoff_selection_is_an_independent_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inst = random_instance(&mut rng, 8, 5, 3);
        let s = UpdateSchedule::default();
        for _ in 0..10_000 {
            let f = select_optimizing_flows(5, &inst.map, &s, &mut rng);
            for &a in &f {
                for &b in &f {
                    assert!(!inst.map.flow_neighbors(a).contains(&b));
                }
            }
        }
    }

    #[test]
    fn collaborative_utility_sums_exactly_the_neighbors() {
        let inst = crossing_pair();
        let model = inst.model();
        let cfg = inst.utility();
        let alloc = inst.alloc(vec![0, 0]);
        let u0 = model.flow_utility(&alloc, 0, &cfg).unwrap();
        let u1 = model.flow_utility(&alloc, 1, &cfg).unwrap();
        let c0 = collaborative_utility(&model, &alloc, 0, &cfg).unwrap();
        let c1 = collaborative_utility(&model, &alloc, 1, &cfg).unwrap();
        assert_eq!(c0, u0 + u1);
        assert_eq!(c1, u1 + u0);

        let inst = isolated_pair();
        let model = inst.model();
        let alloc = inst.alloc(vec![0, 0]);
        assert_eq!(
            collaborative_utility(&model, &alloc, 0, &cfg).unwrap(),
            model.flow_utility(&alloc, 0, &cfg).unwrap()
        );
    }

    #[test]
    fn chain_collaborative_utility() {
        let inst = chain_of_three();
        let (m, map) = (inst.model(), &inst.map);
        assert_eq!(map.flow_neighbors(0), &[1]);
        assert_eq!(map.flow_neighbors(1), &[0, 2]);
        assert_eq!(map.flow_neighbors(2), &[1]);
        let cfg = inst.utility();
        let a = inst.alloc(vec![0, 0, 0]);
        let u: Vec<f64> = (0..3).map(|n| m.flow_utility(&a, n, &cfg).unwrap()).collect();
        assert_eq!(collaborative_utility(&m, &a, 1, &cfg).unwrap(), u[1] + u[0] + u[2]);
        assert_eq!(collaborative_utility(&m, &a, 0, &cfg).unwrap(), u[0] + u[1]);
    }

    #[test]
    fn single_flow_single_path_stalls_out() {
        let inst = single_path_flow();
        let s = UpdateSchedule::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = nb3r_run(inst.model(), inst.alloc(vec![0]), inst.utility(), s, &mut rng).unwrap();
        assert!(out.converged);
        assert_eq!(out.rounds, s.stall_window);
        assert_eq!(out.last.chosen, vec![0]);
        assert_eq!(out.best.chosen, vec![0]);
    }

    #[test]
    fn utility_trace_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let inst = random_instance(&mut rng, 7, 4, 3);
        let cfg = inst.utility();
        let s = UpdateSchedule {
            max_rounds: 200,
            ..Default::default()
        };
        let out = nb3r_run(inst.model(), inst.alloc(vec![0; 4]), cfg, s, &mut rng).unwrap();
        let bound = 4.0 * cfg.u_max;
        assert!(out.trace.iter().all(|r| r.network_utility <= bound + 1e-9));
        assert!(out.best_utility >= out.initial_utility);
    }

    #[test]
    fn runs_are_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inst = random_instance(&mut rng, 7, 4, 3);
        let run = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            nb3r_run(inst.model(), inst.alloc(vec![0; 4]), inst.utility(), Default::default(), &mut r)
                .unwrap()
        };
        assert_eq!(run(1), run(1));
    }
}
