//! Per-link input features: normalized interference, normalized capacity and
//! a flag marking the path allocated by the previous step.

use diamond_core::{LinkActivity, LinkId, RateModel};
use ndarray::Array2;

use crate::params::EDGE_FEATURES;

/// `E x 3` feature matrix for the current allocation state.
pub fn edge_features(
    model: &RateModel<'_>,
    act: &LinkActivity,
    last_path: Option<&[LinkId]>,
) -> Array2<f64> {
    let graph = model.graph;
    let e = graph.num_links();
    let interference: Vec<f64> = (0..e)
        .map(|l| model.interference(l, act).expect("link ids come from the graph"))
        .collect();
    let max_i = interference.iter().copied().fold(0.0, f64::max);
    let scale_i = if max_i > 0.0 { max_i } else { 1.0 };
    let max_bw = graph.max_bandwidth();
    let mut f = Array2::zeros((e, EDGE_FEATURES));
    for l in 0..e {
        f[[l, 0]] = interference[l] / scale_i;
        f[[l, 1]] = graph.links()[l].bandwidth / max_bw;
    }
    if let Some(p) = last_path {
        for &l in p {
            f[[l, 2]] = 1.0;
        }
    }
    f
}
