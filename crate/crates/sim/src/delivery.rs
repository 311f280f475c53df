//! Discrete-time payload delivery over a fixed allocation.
//!
//! Every 1 s step each unfinished flow moves `rate * 1 s` of its payload; rates
//! are recomputed from the flows still transmitting, so finishing flows free
//! capacity and stop interfering.

use diamond_core::{LinkActivity, PathAllocation, RateModel};

/// Delay assigned to flows that can never finish.
pub const DELAY_CAP_STEPS: u64 = 10_000;

const FINISH_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryReport {
    /// Step at which each flow's cumulative delivery reached its payload.
    pub delays: Vec<u64>,
    pub max_delay: u64,
    /// Flows that hit the cap.
    pub capped: Vec<bool>,
}

pub fn simulate_delivery(
    model: &RateModel<'_>,
    alloc: &PathAllocation,
    payloads: &[f64],
) -> DeliveryReport {
    let n = alloc.num_flows();
    assert_eq!(payloads.len(), n, "one payload per flow");
    let mut delays = vec![0u64; n];
    let mut capped = vec![false; n];
    let mut delivered = vec![0.0; n];
    let mut act = LinkActivity::from_allocation(alloc, model.graph.num_links());
    let mut active: Vec<usize> = (0..n).filter(|&f| payloads[f] > 0.0).collect();
    let mut step = 0u64;
    while !active.is_empty() {
        step += 1;
        let rates: Vec<f64> = active
            .iter()
            .map(|&f| model.path_rate(alloc.path(f), &act))
            .collect();
        if step > DELAY_CAP_STEPS || rates.iter().all(|&r| r <= 0.0) {
            for &f in &active {
                delays[f] = DELAY_CAP_STEPS;
                capped[f] = true;
            }
            break;
        }
        let mut still = Vec::with_capacity(active.len());
        for (&f, &r) in active.iter().zip(&rates) {
            delivered[f] += r;
            if delivered[f] >= payloads[f] * (1.0 - FINISH_TOLERANCE) {
                delays[f] = step;
            } else {
                still.push(f);
            }
        }
        for &f in &active {
            if delays[f] == step {
                act.remove_path(f, alloc.path(f));
            }
        }
        active = still;
    }
    let max_delay = delays.iter().copied().max().unwrap_or(0);
    DeliveryReport {
        delays,
        max_delay,
        capped,
    }
}
