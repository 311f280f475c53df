//! Comparison allocations (hop-count shortest path, best random profile) and
//! exact references (exhaustive optimum, Gibbs distribution over profiles).

use rand::Rng;

use crate::alloc::{ActionSpace, LinkActivity, PathAllocation};
use crate::error::NetError;
use crate::graph::{FlowDemand, NetworkGraph};
use crate::nb3r::boltzmann;
use crate::paths::{shortest_path, LinkWeights};
use crate::rate::{RateModel, UtilityConfig};

/// Largest profile space [`brute_force_optimum`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// Default number of trials for the random baseline.
pub const DEFAULT_RANDOM_TRIALS: usize = 100;

/// Every flow on its hop-count shortest path, located inside its action space.
pub fn ospf_allocate(
    graph: &NetworkGraph,
    flows: &[FlowDemand],
    action_spaces: Vec<ActionSpace>,
) -> Result<PathAllocation, NetError> {
    if flows.len() != action_spaces.len() {
        return Err(NetError::AllocationMismatch(format!(
            "{} flows but {} action spaces",
            flows.len(),
            action_spaces.len()
        )));
    }
    let unit = LinkWeights::unit(graph.num_links());
    let chosen = flows
        .iter()
        .zip(&action_spaces)
        .map(|(f, space)| {
            let p = shortest_path(graph, f.src, f.dst, &unit)?;
            space.paths().iter().position(|q| *q == p).ok_or_else(|| {
                NetError::AllocationMismatch(format!(
                    "flow {}: shortest path missing from its action space",
                    f.id
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    PathAllocation::new(action_spaces, chosen)
}

/// A uniformly random profile.
pub fn random_profile<R: Rng + ?Sized>(spaces: &[ActionSpace], rng: &mut R) -> Vec<usize> {
    spaces.iter().map(|s| rng.gen_range(0..s.len())).collect()
}

/// Best of `trials` uniform profiles under `score`; equal scores keep the
/// lexicographically smaller profile.
pub fn best_of_random<R, F>(
    spaces: &[ActionSpace],
    trials: usize,
    mut score: F,
    rng: &mut R,
) -> (Vec<usize>, f64)
where
    R: Rng + ?Sized,
    F: FnMut(&[usize]) -> f64,
{
    assert!(trials >= 1, "at least one trial is required");
    let mut best = random_profile(spaces, rng);
    let mut best_score = score(&best);
    for _ in 1..trials {
        let p = random_profile(spaces, rng);
        let s = score(&p);
        if s > best_score || (s == best_score && p < best) {
            best = p;
            best_score = s;
        }
    }
    (best, best_score)
}

/// Best of `trials` uniform profiles by network utility.
pub fn random_baseline_allocate<R: Rng + ?Sized>(
    model: &RateModel<'_>,
    action_spaces: Vec<ActionSpace>,
    trials: usize,
    cfg: &UtilityConfig,
    rng: &mut R,
) -> Result<PathAllocation, NetError> {
    if trials == 0 {
        return Err(NetError::InvalidParameter("trials must be >= 1".into()));
    }
    let mut scratch = PathAllocation::first_choices(action_spaces);
    model.activity(&scratch)?;
    let (chosen, _) = best_of_random(
        &scratch.action_spaces.clone(),
        trials,
        |p| {
            scratch.chosen.copy_from_slice(p);
            let act = LinkActivity::from_allocation(&scratch, model.graph.num_links());
            model.network_utility_with(&scratch, &act, cfg)
        },
        rng,
    );
    scratch.chosen = chosen;
    Ok(scratch)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best: Vec<usize>,
    pub best_utility: f64,
    /// Every enumerated profile with its utility, in lexicographic order.
    pub table: Option<Vec<(Vec<usize>, f64)>>,
}

/// Exhaustive search for the utility-maximizing profile.
///
/// Without a table only the first occurrence of each distinct path is
/// enumerated (padded duplicates add nothing); with a table every index
/// profile is listed. Ties keep the lexicographically smallest profile.
pub fn brute_force_optimum(
    model: &RateModel<'_>,
    action_spaces: &[ActionSpace],
    cfg: &UtilityConfig,
    with_table: bool,
) -> Result<OracleResult, NetError> {
    let choices: Vec<Vec<usize>> = action_spaces
        .iter()
        .map(|s| {
            if with_table {
                (0..s.len()).collect()
            } else {
                s.distinct_indices()
            }
        })
        .collect();
    let size = choices.iter().map(|c| c.len() as u128).product::<u128>();
    if size > BRUTE_FORCE_LIMIT {
        return Err(NetError::SearchSpaceTooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let n = action_spaces.len();
    let mut digits = vec![0usize; n];
    let mut alloc = PathAllocation::first_choices(action_spaces.to_vec());
    for (f, c) in choices.iter().enumerate() {
        alloc.chosen[f] = c[0];
    }
    let mut act = model.activity(&alloc)?;
    let mut table = with_table.then(Vec::new);
    let mut best = alloc.chosen.clone();
    let mut best_utility = f64::NEG_INFINITY;
    loop {
        let u = model.network_utility_with(&alloc, &act, cfg);
        if u > best_utility {
            best_utility = u;
            best.copy_from_slice(&alloc.chosen);
        }
        if let Some(t) = table.as_mut() {
            t.push((alloc.chosen.clone(), u));
        }
        // odometer: the last flow varies fastest
        let mut f = n;
        loop {
            if f == 0 {
                return Ok(OracleResult {
                    best,
                    best_utility,
                    table,
                });
            }
            f -= 1;
            let old = alloc.chosen[f];
            digits[f] = (digits[f] + 1) % choices[f].len();
            let new = choices[f][digits[f]];
            if old != new {
                let space = &alloc.action_spaces[f];
                act.switch_path(f, space.path(old), space.path(new));
                alloc.chosen[f] = new;
            }
            if digits[f] != 0 {
                break;
            }
        }
    }
}

/// `P(s) = exp(nu * phi(s)) / sum exp(nu * phi)` over a complete profile table.
pub fn gibbs_distribution(utilities: &[f64], nu: f64) -> Vec<f64> {
    boltzmann(utilities, nu)
}
