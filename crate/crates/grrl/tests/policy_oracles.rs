//! The policy network against independent loop-based recomputations and
//! central finite differences.

use diamond_core::{FlowDemand, Link, LinkId, NetworkGraph, Node};
use diamond_grrl::gnn::{
    demand_input, encode, forward, log_prob_grad, message_passing_step, softmax, GraphContext,
};
use diamond_grrl::params::Gru;
use diamond_grrl::PolicyParams;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(n: usize, pairs: &[(usize, usize)]) -> NetworkGraph {
    let nodes = (0..n)
        .map(|id| Node {
            id,
            x: 10.0 * id as f64,
            y: (id % 2) as f64 * 7.0,
        })
        .collect();
    let links = pairs
        .iter()
        .enumerate()
        .map(|(id, &(tx, rx))| Link {
            id,
            tx,
            rx,
            bandwidth: 1.0 + id as f64,
            tx_power: 10.0,
            noise_psd: 1.0,
        })
        .collect();
    NetworkGraph::new(nodes, links).unwrap()
}

/// Directed triangle: three links, each with one incoming and one outgoing neighbor.
fn triangle() -> NetworkGraph {
    graph(3, &[(0, 1), (1, 2), (2, 0)])
}

/// Four nodes, eight links.
fn square() -> NetworkGraph {
    graph(
        4,
        &[(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2), (3, 0), (0, 3)],
    )
}

fn random_feats(rng: &mut ChaCha8Rng, e: usize) -> Array2<f64> {
    Array2::from_shape_fn((e, 3), |(_, j)| {
        if j == 2 {
            f64::from(rng.gen_bool(0.5) as u8)
        } else {
            rng.gen_range(0.0..1.0)
        }
    })
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `sum_i v[i] * m[i][j]`.
fn vecmat(v: &[f64], m: &Array2<f64>, j: usize) -> f64 {
    (0..v.len()).map(|i| v[i] * m[[i, j]]).sum()
}

fn gru_ref(g: &Gru, x: &[f64], h: &[f64]) -> Vec<f64> {
    let d = h.len();
    let z: Vec<f64> = (0..d)
        .map(|j| sig(vecmat(x, &g.wz, j) + vecmat(h, &g.uz, j) + g.bz[j]))
        .collect();
    let r: Vec<f64> = (0..d)
        .map(|j| sig(vecmat(x, &g.wr, j) + vecmat(h, &g.ur, j) + g.br[j]))
        .collect();
    let rh: Vec<f64> = (0..d).map(|j| r[j] * h[j]).collect();
    (0..d)
        .map(|j| {
            let c = (vecmat(x, &g.wc, j) + vecmat(&rh, &g.uc, j) + g.bc[j]).tanh();
            (1.0 - z[j]) * h[j] + z[j] * c
        })
        .collect()
}

fn step_ref(p: &PolicyParams, g: &NetworkGraph, h: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = p.d();
    (0..g.num_links())
        .map(|l| {
            let link = &g.links()[l];
            let mut sin = vec![0.0; d];
            let mut sout = vec![0.0; d];
            for e in g.links() {
                if e.rx == link.tx {
                    for j in 0..d {
                        sin[j] += h[e.id][j];
                    }
                }
                if e.tx == link.rx {
                    for j in 0..d {
                        sout[j] += h[e.id][j];
                    }
                }
            }
            let m: Vec<f64> = (0..d)
                .map(|j| {
                    (vecmat(&h[l], &p.w1, j) + vecmat(&sin, &p.w2, j) + vecmat(&sout, &p.w3, j))
                        .tanh()
                })
                .collect();
            gru_ref(&p.update, &m, &h[l])
        })
        .collect()
}

fn initial_ref(feats: &Array2<f64>, d: usize) -> Vec<Vec<f64>> {
    (0..feats.nrows())
        .map(|l| {
            let mut h = vec![0.0; d];
            for j in 0..3 {
                h[j % d] += feats[[l, j]];
            }
            h
        })
        .collect()
}

fn scores_ref(
    p: &PolicyParams,
    g: &NetworkGraph,
    feats: &Array2<f64>,
    demand: [f64; 3],
    paths: &[&[LinkId]],
) -> Vec<f64> {
    let d = p.d();
    let mut h = initial_ref(feats, d);
    for _ in 0..p.depth() {
        h = step_ref(p, g, &h);
    }
    let hg: Vec<f64> = (0..d)
        .map(|j| h.iter().map(|r| r[j]).sum::<f64>() / h.len() as f64)
        .collect();
    let dem: Vec<f64> = (0..d).map(|j| vecmat(&demand, &p.demand, j)).collect();
    paths
        .iter()
        .map(|path| {
            let xs: Vec<Vec<f64>> = path
                .iter()
                .map(|&l| (0..d).map(|j| h[l][j] + dem[j]).collect())
                .collect();
            let mut hf = hg.clone();
            for x in &xs {
                hf = gru_ref(&p.path_fwd, x, &hf);
            }
            let mut hb = hg.clone();
            for x in xs.iter().rev() {
                hb = gru_ref(&p.path_bwd, x, &hb);
            }
            (0..d)
                .map(|j| p.score[j] * hf[j] + p.score[d + j] * hb[j])
                .sum()
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn message_step_matches_loop_reference_on_a_three_link_cycle() {
    let g = triangle();
    let ctx = GraphContext::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = PolicyParams::init(2, 1, &mut rng).unwrap();
    let h = Array2::from_shape_fn((3, 2), |_| rng.gen_range(-1.0..1.0));
    let got = message_passing_step(&p, &ctx, &h);
    let rows: Vec<Vec<f64>> = h.rows().into_iter().map(|r| r.to_vec()).collect();
    let want = step_ref(&p, &g, &rows);
    for l in 0..3 {
        for j in 0..2 {
            assert!(close(got[[l, j]], want[l][j], 1e-14));
        }
    }
}

#[test]
fn encoder_matches_unrolled_reference() {
    let g = square();
    let ctx = GraphContext::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = PolicyParams::init(5, 2, &mut rng).unwrap();
    let feats = random_feats(&mut rng, 8);
    let enc = encode(&p, &ctx, &feats);
    let mut h = initial_ref(&feats, 5);
    for _ in 0..2 {
        h = step_ref(&p, &g, &h);
    }
    for (l, row) in h.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            assert!(close(enc.links[[l, j]], x, 1e-13));
        }
    }
    let mean: f64 = (0..8).map(|l| h[l][1]).sum::<f64>() / 8.0;
    assert!(close(enc.global[1], mean, 1e-13));
}

#[test]
fn scores_match_reference_including_folded_features() {
    let g = square();
    let ctx = GraphContext::new(&g);
    let paths: [&[LinkId]; 3] = [&[0, 2], &[7, 5], &[0, 2, 4]];
    for d in [2, 3, 6] {
        let mut rng = ChaCha8Rng::seed_from_u64(10 + d as u64);
        let p = PolicyParams::init(d, 2, &mut rng).unwrap();
        let feats = random_feats(&mut rng, 8);
        let demand = [0.0, 2.0 / 3.0, 0.5];
        let out = forward(&p, &ctx, &feats, demand, &paths);
        let want = scores_ref(&p, &g, &feats, demand, &paths);
        for (a, b) in out.scores.iter().zip(&want) {
            assert!(close(*a, *b, 1e-13), "d = {d}: {a} vs {b}");
        }
        assert!((out.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn zero_weights_keep_zero_embeddings() {
    let g = square();
    let ctx = GraphContext::new(&g);
    let p = PolicyParams::zeros(4, 3).unwrap();
    let enc = encode(&p, &ctx, &Array2::zeros((8, 3)));
    assert!(enc.global.iter().all(|&x| x == 0.0));
    // an isolated link with W1 = 0 gets a zero message
    let h = Array2::from_elem((8, 4), 0.3);
    let out = message_passing_step(&p, &ctx, &h);
    // z = 1/2, candidate tanh(0) = 0: halfway to zero
    assert!(out.iter().all(|&x| (x - 0.15).abs() < 1e-15));
}

#[test]
fn softmax_cases() {
    let p = softmax(&[0.0, 2f64.ln()]);
    assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(softmax(&[4.2]), vec![1.0]);
    let big = softmax(&[1000.0, 1000.0]);
    assert_eq!(big, vec![0.5, 0.5]);
}

#[test]
fn duplicate_paths_score_identically() {
    let g = square();
    let ctx = GraphContext::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = PolicyParams::init(4, 2, &mut rng).unwrap();
    let feats = random_feats(&mut rng, 8);
    let paths: [&[LinkId]; 3] = [&[0, 2], &[0, 2], &[0, 2]];
    let out = forward(&p, &ctx, &feats, [0.1, 0.2, 0.3], &paths);
    for q in &out.probs {
        assert!((q - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn demand_triple_normalization() {
    let f = FlowDemand {
        id: 0,
        src: 2,
        dst: 4,
        payload: 5.0,
    };
    assert_eq!(demand_input(&f, 5, 10.0), [0.5, 1.0, 0.5]);
}

/// Central differences of `log p(action)` for every parameter.
fn check_gradient(seed: u64, d: usize, t: usize, g: &NetworkGraph, paths: &[&[LinkId]]) {
    let ctx = GraphContext::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = PolicyParams::init(d, t, &mut rng).unwrap();
    let feats = random_feats(&mut rng, g.num_links());
    let demand = [0.2, 0.9, 0.7];
    let action = rng.gen_range(0..paths.len());
    let (_, grad) = log_prob_grad(&p, &ctx, &feats, demand, paths, action);
    let analytic = grad.to_flat();
    let base = p.to_flat();
    let h = 1e-5;
    let mut probe = p.clone();
    let mut eval = |flat: &[f64]| {
        probe.set_flat(flat).unwrap();
        forward(&probe, &ctx, &feats, demand, paths).log_prob(action)
    };
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += h;
        let mut minus = base.clone();
        minus[i] -= h;
        let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
        let a = analytic[i];
        let err = (a - fd).abs();
        assert!(
            err <= 1e-4 * a.abs().max(fd.abs()) || err <= 1e-8,
            "param {i}: analytic {a}, finite difference {fd}"
        );
    }
}

#[test]
fn gradients_match_finite_differences() {
    let g = square();
    let paths: [&[LinkId]; 3] = [&[0, 2], &[7, 5], &[0, 2, 4]];
    check_gradient(1, 4, 2, &g, &paths);
    check_gradient(2, 2, 1, &g, &paths);
    check_gradient(3, 3, 2, &triangle(), &[&[0, 1], &[0]]);
}

#[test]
fn single_candidate_has_zero_gradient() {
    let g = square();
    let ctx = GraphContext::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = PolicyParams::init(4, 2, &mut rng).unwrap();
    let feats = random_feats(&mut rng, 8);
    let (lp, grad) = log_prob_grad(&p, &ctx, &feats, [0.0, 1.0, 1.0], &[&[0, 2]], 0);
    assert_eq!(lp, 0.0);
    assert_eq!(grad.norm(), 0.0);
}
