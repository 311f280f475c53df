//! Policy parameters. Every tensor is stored row-major and inputs are row
//! vectors, so a layer computes `x W`.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::GrrlError;

/// Number of edge features per link.
pub const EDGE_FEATURES: usize = 3;
/// Number of entries in the demand triple.
pub const DEMAND_FEATURES: usize = 3;

pub const DEFAULT_EMBEDDING: usize = 16;
pub const DEFAULT_DEPTH: usize = 3;

/// Gated recurrent unit with input and hidden size `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gru {
    pub wz: Array2<f64>,
    pub uz: Array2<f64>,
    pub bz: Array1<f64>,
    pub wr: Array2<f64>,
    pub ur: Array2<f64>,
    pub br: Array1<f64>,
    pub wc: Array2<f64>,
    pub uc: Array2<f64>,
    pub bc: Array1<f64>,
}

impl Gru {
    pub fn zeros(d: usize) -> Self {
        let m = || Array2::zeros((d, d));
        let v = || Array1::zeros(d);
        Gru {
            wz: m(),
            uz: m(),
            bz: v(),
            wr: m(),
            ur: m(),
            br: v(),
            wc: m(),
            uc: m(),
            bc: v(),
        }
    }

    fn slices(&self) -> [&[f64]; 9] {
        [
            self.wz.as_slice().unwrap(),
            self.uz.as_slice().unwrap(),
            self.bz.as_slice().unwrap(),
            self.wr.as_slice().unwrap(),
            self.ur.as_slice().unwrap(),
            self.br.as_slice().unwrap(),
            self.wc.as_slice().unwrap(),
            self.uc.as_slice().unwrap(),
            self.bc.as_slice().unwrap(),
        ]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 9] {
        [
            self.wz.as_slice_mut().unwrap(),
            self.uz.as_slice_mut().unwrap(),
            self.bz.as_slice_mut().unwrap(),
            self.wr.as_slice_mut().unwrap(),
            self.ur.as_slice_mut().unwrap(),
            self.br.as_slice_mut().unwrap(),
            self.wc.as_slice_mut().unwrap(),
            self.uc.as_slice_mut().unwrap(),
            self.bc.as_slice_mut().unwrap(),
        ]
    }
}

/// All learned tensors plus the embedding size `d` and message-passing depth `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    d: usize,
    t: usize,
    /// Self term of a message.
    pub w1: Array2<f64>,
    /// Sum over incoming links.
    pub w2: Array2<f64>,
    /// Sum over outgoing links.
    pub w3: Array2<f64>,
    pub update: Gru,
    /// Maps the demand triple to `d` dims (`3 x d`).
    pub demand: Array2<f64>,
    pub path_fwd: Gru,
    pub path_bwd: Gru,
    /// Linear score head over `[h_fwd; h_bwd]`.
    pub score: Array1<f64>,
}

impl PolicyParams {
    pub fn zeros(d: usize, t: usize) -> Result<Self, GrrlError> {
        if d < 2 {
            return Err(GrrlError::InvalidShape(format!("embedding size {d} < 2")));
        }
        if t < 1 {
            return Err(GrrlError::InvalidShape("depth must be >= 1".into()));
        }
        let m = || Array2::zeros((d, d));
        Ok(PolicyParams {
            d,
            t,
            w1: m(),
            w2: m(),
            w3: m(),
            update: Gru::zeros(d),
            demand: Array2::zeros((DEMAND_FEATURES, d)),
            path_fwd: Gru::zeros(d),
            path_bwd: Gru::zeros(d),
            score: Array1::zeros(2 * d),
        })
    }

    /// Every entry drawn from `U(-1/sqrt(d), 1/sqrt(d))`.
    pub fn init<R: Rng + ?Sized>(d: usize, t: usize, rng: &mut R) -> Result<Self, GrrlError> {
        let mut p = Self::zeros(d, t)?;
        let a = 1.0 / (d as f64).sqrt();
        for s in p.tensors_mut() {
            for x in s.iter_mut() {
                *x = rng.gen_range(-a..a);
            }
        }
        Ok(p)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.t
    }

    /// Parameter count for embedding size `d`; it does not depend on the graph.
    pub fn count_for(d: usize) -> usize {
        3 * d * d + 3 * (6 * d * d + 3 * d) + DEMAND_FEATURES * d + 2 * d
    }

    pub fn num_params(&self) -> usize {
        Self::count_for(self.d)
    }

    /// Tensors in declaration order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v = vec![
            self.w1.as_slice().unwrap(),
            self.w2.as_slice().unwrap(),
            self.w3.as_slice().unwrap(),
        ];
        v.extend(self.update.slices());
        v.push(self.demand.as_slice().unwrap());
        v.extend(self.path_fwd.slices());
        v.extend(self.path_bwd.slices());
        v.push(self.score.as_slice().unwrap());
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = vec![
            self.w1.as_slice_mut().unwrap(),
            self.w2.as_slice_mut().unwrap(),
            self.w3.as_slice_mut().unwrap(),
        ];
        v.extend(self.update.slices_mut());
        v.push(self.demand.as_slice_mut().unwrap());
        v.extend(self.path_fwd.slices_mut());
        v.extend(self.path_bwd.slices_mut());
        v.push(self.score.as_slice_mut().unwrap());
        v
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<(), GrrlError> {
        if flat.len() != self.num_params() {
            return Err(GrrlError::InvalidShape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut at = 0;
        for s in self.tensors_mut() {
            s.copy_from_slice(&flat[at..at + s.len()]);
            at += s.len();
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &PolicyParams, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|s| s.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}
