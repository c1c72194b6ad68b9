//! Closed-form smooth and prox terms: the matrix-completion benchmark terms
//! plus small generic ones used by tests and diagnostics.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use super::scalar::{mcp_penalty, prox_scalar_mcp, soft_threshold};
use crate::error::{input, Error, Result};
use crate::problem::{ProxTerm, SmoothTerm};
use crate::vector::{RealVector, Shape};

/// The zero function viewed as a smooth term with a caller-chosen modulus.
#[derive(Debug, Clone)]
pub struct ZeroSmooth {
    lipschitz: f64,
}

impl ZeroSmooth {
    pub fn new(lipschitz: f64) -> Self {
        Self { lipschitz }
    }
}

impl SmoothTerm for ZeroSmooth {
    fn value(&self, _x: &RealVector) -> f64 {
        0.0
    }
    fn gradient(&self, x: &RealVector) -> RealVector {
        RealVector::zeros(x.shape())
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn prox(&self, _gamma: f64, x: &RealVector) -> Option<RealVector> {
        Some(x.clone())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroProx;

impl ProxTerm for ZeroProx {
    fn value(&self, _x: &RealVector) -> f64 {
        0.0
    }
    fn prox(&self, _gamma: f64, x: &RealVector) -> Result<RealVector> {
        Ok(x.clone())
    }
}

/// Indicator of the nonnegative orthant.
#[derive(Debug, Clone, Copy)]
pub struct NonnegIndicator;

impl ProxTerm for NonnegIndicator {
    fn value(&self, x: &RealVector) -> f64 {
        if x.as_slice().iter().all(|&v| v >= 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, _gamma: f64, x: &RealVector) -> Result<RealVector> {
        Ok(x.map(|v| v.max(0.0)))
    }
}

/// `sum_i w_i (x_i - c_i)^2 / 2` with nonnegative weights.
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic {
    weights: Vec<f64>,
    center: Vec<f64>,
}

impl DiagonalQuadratic {
    pub fn new(weights: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if weights.len() != center.len() {
            return input("weights and center lengths differ");
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return input("quadratic weights must be finite and nonnegative");
        }
        Ok(Self { weights, center })
    }

    /// `(w/2) |x|^2`
    pub fn isotropic(d: usize, w: f64) -> Self {
        Self {
            weights: vec![w; d],
            center: vec![0.0; d],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

impl SmoothTerm for DiagonalQuadratic {
    fn value(&self, x: &RealVector) -> f64 {
        x.as_slice()
            .iter()
            .zip(self.weights.iter().zip(&self.center))
            .map(|(&xi, (&w, &c))| 0.5 * w * (xi - c) * (xi - c))
            .sum()
    }
    fn gradient(&self, x: &RealVector) -> RealVector {
        let data = x
            .as_slice()
            .iter()
            .zip(self.weights.iter().zip(&self.center))
            .map(|(&xi, (&w, &c))| w * (xi - c))
            .collect();
        RealVector::from_parts(data, x.shape())
    }
    fn lipschitz(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }
    fn prox(&self, gamma: f64, x: &RealVector) -> Option<RealVector> {
        let data = x
            .as_slice()
            .iter()
            .zip(self.weights.iter().zip(&self.center))
            .map(|(&xi, (&w, &c))| (xi + gamma * w * c) / (1.0 + gamma * w))
            .collect();
        Some(RealVector::from_parts(data, x.shape()))
    }
}

/// `x' A x / 2 + b' x` with `A` symmetric positive semidefinite (row-major).
#[derive(Debug, Clone)]
pub struct DenseQuadratic {
    a: Mat<f64>,
    b: Vec<f64>,
    lipschitz: f64,
}

impl DenseQuadratic {
    pub fn new(dim: usize, a_row_major: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a_row_major.len() != dim * dim || b.len() != dim {
            return input("dense quadratic: inconsistent dimensions");
        }
        let a = Mat::from_fn(dim, dim, |i, j| a_row_major[i * dim + j]);
        for i in 0..dim {
            for j in 0..i {
                let (u, v) = (a[(i, j)], a[(j, i)]);
                if (u - v).abs() > 1e-12 * (1.0 + u.abs().max(v.abs())) {
                    return input("dense quadratic: matrix is not symmetric");
                }
            }
        }
        let eig = a
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigenvalues: {e:?}")))?;
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        if lo < -1e-10 * (1.0 + hi) {
            return input(format!("dense quadratic: matrix is indefinite (min eigenvalue {lo})"));
        }
        Ok(Self { a, b, lipschitz: hi })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.a[(i, j)] * x[j]).sum::<f64>())
            .collect()
    }
}

impl SmoothTerm for DenseQuadratic {
    fn value(&self, x: &RealVector) -> f64 {
        let ax = self.apply(x.as_slice());
        x.as_slice()
            .iter()
            .zip(ax.iter().zip(&self.b))
            .map(|(&xi, (&axi, &bi))| 0.5 * xi * axi + bi * xi)
            .sum()
    }
    fn gradient(&self, x: &RealVector) -> RealVector {
        let ax = self.apply(x.as_slice());
        let data = ax.iter().zip(&self.b).map(|(a, b)| a + b).collect();
        RealVector::from_parts(data, x.shape())
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn prox(&self, gamma: f64, x: &RealVector) -> Option<RealVector> {
        // (I + gamma A) p = x - gamma b
        let n = self.dim();
        let m = Mat::from_fn(n, n, |i, j| {
            gamma * self.a[(i, j)] + if i == j { 1.0 } else { 0.0 }
        });
        let rhs = Mat::from_fn(n, 1, |i, _| x.as_slice()[i] - gamma * self.b[i]);
        let llt = m.llt(Side::Lower).ok()?;
        let sol = llt.solve(&rhs);
        Some(RealVector::from_parts(
            (0..n).map(|i| sol[(i, 0)]).collect(),
            x.shape(),
        ))
    }
}

/// `w |x|_1`
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub weight: f64,
}

impl ProxTerm for L1Norm {
    fn value(&self, x: &RealVector) -> f64 {
        self.weight * x.as_slice().iter().map(|v| v.abs()).sum::<f64>()
    }
    fn prox(&self, gamma: f64, x: &RealVector) -> Result<RealVector> {
        let k = gamma * self.weight;
        Ok(x.map(|v| soft_threshold(v, k)))
    }
}

/// `w sum_i mcp(x_i; tau)`, the entrywise minimax-concave penalty.
#[derive(Debug, Clone, Copy)]
pub struct SeparableMcp {
    pub weight: f64,
    pub tau: f64,
}

impl ProxTerm for SeparableMcp {
    fn value(&self, x: &RealVector) -> f64 {
        self.weight
            * x.as_slice()
                .iter()
                .map(|&v| mcp_penalty(v, self.tau))
                .sum::<f64>()
    }
    fn prox(&self, gamma: f64, x: &RealVector) -> Result<RealVector> {
        Ok(x.map(|v| prox_scalar_mcp(self.weight, self.tau, gamma, v)))
    }
}

/// `(lambda1/2) dist(X, R_+)^2 = (lambda1/2) |min(X, 0)|^2`.
#[derive(Debug, Clone, Copy)]
pub struct NonnegDistance {
    pub lambda1: f64,
}

impl NonnegDistance {
    pub fn new(lambda1: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda1.is_finite()) {
            return input(format!("lambda1 must be nonnegative, got {lambda1}"));
        }
        Ok(Self { lambda1 })
    }
}

/// Componentwise prox of `(lambda1/2) min(t, 0)^2`.
pub fn prox_nonneg_distance(t: &NonnegDistance, gamma: f64, x: &RealVector) -> RealVector {
    let shrink = 1.0 / (1.0 + gamma * t.lambda1);
    x.map(|v| if v >= 0.0 { v } else { v * shrink })
}

impl SmoothTerm for NonnegDistance {
    fn value(&self, x: &RealVector) -> f64 {
        0.5 * self.lambda1
            * x.as_slice()
                .iter()
                .map(|&v| if v < 0.0 { v * v } else { 0.0 })
                .sum::<f64>()
    }
    fn gradient(&self, x: &RealVector) -> RealVector {
        x.map(|v| self.lambda1 * v.min(0.0))
    }
    fn lipschitz(&self) -> f64 {
        self.lambda1
    }
    fn prox(&self, gamma: f64, x: &RealVector) -> Option<RealVector> {
        Some(prox_nonneg_distance(self, gamma, x))
    }
}

/// `|P_Omega(X - M)|_F^2 / 2` for an observed index set `Omega` (row-major
/// linear indices).
#[derive(Debug, Clone)]
pub struct MaskedQuadratic {
    target: RealVector,
    observed: Vec<usize>,
}

impl MaskedQuadratic {
    pub fn new(target: RealVector, mut observed: Vec<usize>) -> Result<Self> {
        if target.shape().matrix_dims().is_none() {
            return input("masked quadratic target must be matrix-shaped");
        }
        observed.sort_unstable();
        observed.dedup();
        if observed.last().is_some_and(|&i| i >= target.len()) {
            return input("observed index out of range");
        }
        Ok(Self { target, observed })
    }

    pub fn target(&self) -> &RealVector {
        &self.target
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn shape(&self) -> Shape {
        self.target.shape()
    }
}

/// `X - gamma/(1+gamma) P_Omega(X - M)`
pub fn prox_masked_quadratic(
    t: &MaskedQuadratic,
    gamma: f64,
    x: &RealVector,
) -> Result<RealVector> {
    x.ensure_shape(t.shape())?;
    let c = gamma / (1.0 + gamma);
    let mut out = x.clone();
    let m = t.target.as_slice();
    let o = out.as_mut_slice();
    for &i in &t.observed {
        o[i] -= c * (o[i] - m[i]);
    }
    Ok(out)
}

impl SmoothTerm for MaskedQuadratic {
    fn value(&self, x: &RealVector) -> f64 {
        let (xs, m) = (x.as_slice(), self.target.as_slice());
        0.5 * self
            .observed
            .iter()
            .map(|&i| (xs[i] - m[i]) * (xs[i] - m[i]))
            .sum::<f64>()
    }
    fn gradient(&self, x: &RealVector) -> RealVector {
        let mut g = vec![0.0; x.len()];
        let (xs, m) = (x.as_slice(), self.target.as_slice());
        for &i in &self.observed {
            g[i] = xs[i] - m[i];
        }
        RealVector::from_parts(g, x.shape())
    }
    fn lipschitz(&self) -> f64 {
        1.0
    }
    fn prox(&self, gamma: f64, x: &RealVector) -> Option<RealVector> {
        prox_masked_quadratic(self, gamma, x).ok()
    }
}
