//! Forward and reverse-mode passes of the policy network.
//!
//! Link embeddings start from the edge features, go through `T` rounds of
//! message passing with a GRU update, and are averaged into a graph embedding.
//! Each candidate path is read by a forward and a backward GRU started from the
//! graph embedding; a linear head turns the two final states into a score.

use diamond_core::{FlowDemand, LinkId, NetworkGraph};
use ndarray::{s, Array1, Array2, Axis};

use crate::params::{Gru, PolicyParams, DEMAND_FEATURES};

/// Incoming and outgoing link sets of every link.
#[derive(Debug, Clone)]
pub struct GraphContext {
    /// Links entering the transmitter of each link.
    pub incoming: Vec<Vec<LinkId>>,
    /// Links leaving the receiver of each link.
    pub outgoing: Vec<Vec<LinkId>>,
    pub num_nodes: usize,
}

impl GraphContext {
    pub fn new(graph: &NetworkGraph) -> Self {
        let incoming = graph
            .links()
            .iter()
            .map(|l| graph.incoming(l.tx).to_vec())
            .collect();
        let outgoing = graph
            .links()
            .iter()
            .map(|l| graph.outgoing(l.rx).to_vec())
            .collect();
        GraphContext {
            incoming,
            outgoing,
            num_nodes: graph.num_nodes(),
        }
    }

    pub fn num_links(&self) -> usize {
        self.incoming.len()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone)]
struct GruCache {
    x: Array2<f64>,
    h: Array2<f64>,
    z: Array2<f64>,
    r: Array2<f64>,
    c: Array2<f64>,
}

fn gru_forward(g: &Gru, x: &Array2<f64>, h: &Array2<f64>) -> (Array2<f64>, GruCache) {
    let z = (x.dot(&g.wz) + h.dot(&g.uz) + &g.bz).mapv(sigmoid);
    let r = (x.dot(&g.wr) + h.dot(&g.ur) + &g.br).mapv(sigmoid);
    let c = (x.dot(&g.wc) + (&r * h).dot(&g.uc) + &g.bc).mapv(f64::tanh);
    let out = (1.0 - &z) * h + &z * &c;
    let cache = GruCache {
        x: x.clone(),
        h: h.clone(),
        z,
        r,
        c,
    };
    (out, cache)
}

/// Accumulates parameter gradients into `grad`, returns `(dx, dh)`.
fn gru_backward(
    g: &Gru,
    cache: &GruCache,
    dout: &Array2<f64>,
    grad: &mut Gru,
) -> (Array2<f64>, Array2<f64>) {
    let GruCache { x, h, z, r, c } = cache;
    let dz = dout * &(c - h);
    let dc = dout * z;
    let mut dh = dout * &(1.0 - z);

    let dac = dc * &(1.0 - c * c);
    let rh = r * h;
    grad.wc += &x.t().dot(&dac);
    grad.uc += &rh.t().dot(&dac);
    grad.bc += &dac.sum_axis(Axis(0));
    let drh = dac.dot(&g.uc.t());
    let dr = &drh * h;
    dh += &(&drh * r);
    let mut dx = dac.dot(&g.wc.t());

    let daz = dz * &(z * &(1.0 - z));
    grad.wz += &x.t().dot(&daz);
    grad.uz += &h.t().dot(&daz);
    grad.bz += &daz.sum_axis(Axis(0));
    dx += &daz.dot(&g.wz.t());
    dh += &daz.dot(&g.uz.t());

    let dar = dr * &(r * &(1.0 - r));
    grad.wr += &x.t().dot(&dar);
    grad.ur += &h.t().dot(&dar);
    grad.br += &dar.sum_axis(Axis(0));
    dx += &dar.dot(&g.wr.t());
    dh += &dar.dot(&g.ur.t());
    (dx, dh)
}

/// Row `l` of the result is the sum of rows `lists[l]` of `h`.
fn gather_sum(h: &Array2<f64>, lists: &[Vec<LinkId>]) -> Array2<f64> {
    let mut out = Array2::zeros(h.raw_dim());
    for (l, list) in lists.iter().enumerate() {
        let mut row = out.row_mut(l);
        for &e in list {
            row += &h.row(e);
        }
    }
    out
}

/// Transpose of [`gather_sum`].
fn scatter_sum(dy: &Array2<f64>, lists: &[Vec<LinkId>], into: &mut Array2<f64>) {
    for (l, list) in lists.iter().enumerate() {
        for &e in list {
            let mut row = into.row_mut(e);
            row += &dy.row(l);
        }
    }
}

/// Edge features folded into `d` dims: feature `j` lands in column `j mod d`.
/// For `d >= 3` this is plain zero padding.
pub fn initial_embedding(feats: &Array2<f64>, d: usize) -> Array2<f64> {
    let mut h = Array2::zeros((feats.nrows(), d));
    for ((l, j), &v) in feats.indexed_iter() {
        h[[l, j % d]] += v;
    }
    h
}

#[derive(Debug, Clone)]
struct StepCache {
    h: Array2<f64>,
    sum_in: Array2<f64>,
    sum_out: Array2<f64>,
    m: Array2<f64>,
    gru: GruCache,
}

/// Link and graph embeddings with what the reverse pass needs.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub links: Array2<f64>,
    pub global: Array1<f64>,
    steps: Vec<StepCache>,
}

/// One message-passing round: messages from self, incoming and outgoing links,
/// then a GRU update with the message as input.
pub fn message_passing_step(
    params: &PolicyParams,
    ctx: &GraphContext,
    h: &Array2<f64>,
) -> Array2<f64> {
    step_forward(params, ctx, h).0
}

fn step_forward(params: &PolicyParams, ctx: &GraphContext, h: &Array2<f64>) -> (Array2<f64>, StepCache) {
    let sum_in = gather_sum(h, &ctx.incoming);
    let sum_out = gather_sum(h, &ctx.outgoing);
    let m = (h.dot(&params.w1) + sum_in.dot(&params.w2) + sum_out.dot(&params.w3)).mapv(f64::tanh);
    let (next, gru) = gru_forward(&params.update, &m, h);
    let cache = StepCache {
        h: h.clone(),
        sum_in,
        sum_out,
        m,
        gru,
    };
    (next, cache)
}

pub fn encode(params: &PolicyParams, ctx: &GraphContext, feats: &Array2<f64>) -> Encoding {
    assert_eq!(feats.nrows(), ctx.num_links(), "one feature row per link");
    let mut h = initial_embedding(feats, params.d());
    let mut steps = Vec::with_capacity(params.depth());
    for _ in 0..params.depth() {
        let (next, cache) = step_forward(params, ctx, &h);
        steps.push(cache);
        h = next;
    }
    let global = h.mean_axis(Axis(0)).expect("graph has links");
    Encoding {
        links: h,
        global,
        steps,
    }
}

/// `[src / (V-1), dst / (V-1), payload / max_payload]`.
pub fn demand_input(flow: &FlowDemand, num_nodes: usize, max_payload: f64) -> [f64; DEMAND_FEATURES] {
    let span = (num_nodes.max(2) - 1) as f64;
    [
        flow.src as f64 / span,
        flow.dst as f64 / span,
        flow.payload / max_payload,
    ]
}

/// `exp(s_i) / sum_j exp(s_j)` with max subtraction.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

#[derive(Debug, Clone)]
struct PathCache {
    links: Vec<LinkId>,
    fwd: Vec<GruCache>,
    bwd: Vec<GruCache>,
    state: Array1<f64>,
}

/// Scores and probabilities over an action space, with the forward caches.
#[derive(Debug, Clone)]
pub struct PolicyOutput {
    pub scores: Vec<f64>,
    pub probs: Vec<f64>,
    pub encoding: Encoding,
    demand_in: Array1<f64>,
    paths: Vec<PathCache>,
}

impl PolicyOutput {
    pub fn log_prob(&self, action: usize) -> f64 {
        let max = self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + self.scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        self.scores[action] - lse
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

fn run_gru(g: &Gru, xs: &[Array2<f64>], h0: &Array2<f64>) -> (Array2<f64>, Vec<GruCache>) {
    let mut h = h0.clone();
    let mut caches = Vec::with_capacity(xs.len());
    for x in xs {
        let (next, cache) = gru_forward(g, x, &h);
        caches.push(cache);
        h = next;
    }
    (h, caches)
}

pub fn forward(
    params: &PolicyParams,
    ctx: &GraphContext,
    feats: &Array2<f64>,
    demand: [f64; DEMAND_FEATURES],
    paths: &[&[LinkId]],
) -> PolicyOutput {
    assert!(!paths.is_empty(), "action space is empty");
    let d = params.d();
    let encoding = encode(params, ctx, feats);
    let demand_in = Array1::from(demand.to_vec());
    let dem = demand_in.dot(&params.demand);
    let h0 = encoding.global.clone().insert_axis(Axis(0));
    let mut scores = Vec::with_capacity(paths.len());
    let mut caches = Vec::with_capacity(paths.len());
    for path in paths {
        assert!(!path.is_empty(), "empty path");
        let xs: Vec<Array2<f64>> = path
            .iter()
            .map(|&l| (&encoding.links.row(l) + &dem).insert_axis(Axis(0)))
            .collect();
        let (hf, fwd) = run_gru(&params.path_fwd, &xs, &h0);
        let rev: Vec<Array2<f64>> = xs.iter().rev().cloned().collect();
        let (hb, bwd) = run_gru(&params.path_bwd, &rev, &h0);
        let mut state = Array1::zeros(2 * d);
        state.slice_mut(s![..d]).assign(&hf.row(0));
        state.slice_mut(s![d..]).assign(&hb.row(0));
        scores.push(state.dot(&params.score));
        caches.push(PathCache {
            links: path.to_vec(),
            fwd,
            bwd,
            state,
        });
    }
    let probs = softmax(&scores);
    PolicyOutput {
        scores,
        probs,
        encoding,
        demand_in,
        paths: caches,
    }
}

/// Adds `sum_i dscores[i] * d(score_i)/d(theta)` into `grads`.
pub fn backward(
    params: &PolicyParams,
    ctx: &GraphContext,
    out: &PolicyOutput,
    dscores: &[f64],
    grads: &mut PolicyParams,
) {
    assert_eq!(dscores.len(), out.scores.len());
    let d = params.d();
    let e = ctx.num_links();
    let mut dlinks = Array2::<f64>::zeros((e, d));
    let mut dglobal = Array2::<f64>::zeros((1, d));
    let mut ddem = Array1::<f64>::zeros(d);

    for (cache, &g) in out.paths.iter().zip(dscores) {
        if g == 0.0 {
            continue;
        }
        grads.score.scaled_add(g, &cache.state);
        let dstate = &params.score * g;
        let len = cache.links.len();
        let mut dxs = vec![Array2::<f64>::zeros((1, d)); len];

        let mut dh = dstate.slice(s![..d]).to_owned().insert_axis(Axis(0));
        for s_ in (0..len).rev() {
            let (dx, dprev) = gru_backward(&params.path_fwd, &cache.fwd[s_], &dh, &mut grads.path_fwd);
            dxs[s_] += &dx;
            dh = dprev;
        }
        dglobal += &dh;

        let mut dh = dstate.slice(s![d..]).to_owned().insert_axis(Axis(0));
        for step in (0..len).rev() {
            let (dx, dprev) = gru_backward(&params.path_bwd, &cache.bwd[step], &dh, &mut grads.path_bwd);
            // backward reader visits position len - 1 - step at its `step`-th update
            dxs[len - 1 - step] += &dx;
            dh = dprev;
        }
        dglobal += &dh;

        for (pos, &l) in cache.links.iter().enumerate() {
            let row = dxs[pos].row(0);
            let mut target = dlinks.row_mut(l);
            target += &row;
            ddem += &row;
        }
    }

    for (i, &x) in out.demand_in.iter().enumerate() {
        grads.demand.row_mut(i).scaled_add(x, &ddem);
    }

    let share = dglobal.row(0).to_owned() / e as f64;
    for mut row in dlinks.rows_mut() {
        row += &share;
    }

    let mut dh = dlinks;
    for step in out.encoding.steps.iter().rev() {
        let (dm, mut dprev) = gru_backward(&params.update, &step.gru, &dh, &mut grads.update);
        let dpre = dm * &(1.0 - &step.m * &step.m);
        grads.w1 += &step.h.t().dot(&dpre);
        grads.w2 += &step.sum_in.t().dot(&dpre);
        grads.w3 += &step.sum_out.t().dot(&dpre);
        dprev += &dpre.dot(&params.w1.t());
        scatter_sum(&dpre.dot(&params.w2.t()), &ctx.incoming, &mut dprev);
        scatter_sum(&dpre.dot(&params.w3.t()), &ctx.outgoing, &mut dprev);
        dh = dprev;
    }
}

/// `log p(action)` and its gradient with respect to every parameter.
pub fn log_prob_grad(
    params: &PolicyParams,
    ctx: &GraphContext,
    feats: &Array2<f64>,
    demand: [f64; DEMAND_FEATURES],
    paths: &[&[LinkId]],
    action: usize,
) -> (f64, PolicyParams) {
    let out = forward(params, ctx, feats, demand, paths);
    let dscores: Vec<f64> = out
        .probs
        .iter()
        .enumerate()
        .map(|(i, p)| if i == action { 1.0 - p } else { -p })
        .collect();
    let mut grads = PolicyParams::zeros(params.d(), params.depth()).expect("shape of a valid policy");
    backward(params, ctx, &out, &dscores, &mut grads);
    (out.log_prob(action), grads)
}
