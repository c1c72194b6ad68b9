//! Spectral minimax-concave penalty and its SVD-based prox.

use faer::{Mat, Side};

use super::scalar::{mcp_penalty, prox_scalar_mcp};
use crate::error::{input, Error, Result};
use crate::problem::ProxTerm;
use crate::vector::RealVector;

/// `lambda2 * sum_i mcp(sigma_i(X); tau)`
#[derive(Debug, Clone, Copy)]
pub struct SpectralMcp {
    pub lambda2: f64,
    pub tau: f64,
}

impl SpectralMcp {
    pub fn new(lambda2: f64, tau: f64) -> Result<Self> {
        if !(lambda2 >= 0.0 && lambda2.is_finite()) {
            return input(format!("lambda2 must be nonnegative, got {lambda2}"));
        }
        if !(tau > 0.0) {
            return input(format!("tau must be positive, got {tau}"));
        }
        Ok(Self { lambda2, tau })
    }

    fn penalty(&self, sigma: &[f64]) -> f64 {
        self.lambda2 * sigma.iter().map(|&s| mcp_penalty(s, self.tau)).sum::<f64>()
    }
}

fn dims(x: &RealVector) -> Result<(usize, usize)> {
    x.shape()
        .matrix_dims()
        .ok_or_else(|| Error::Input(format!("spectral term needs a matrix, got {}", x.shape())))
}

fn as_faer(x: &RealVector, rows: usize, cols: usize) -> Mat<f64> {
    let d = x.as_slice();
    Mat::from_fn(rows, cols, |i, j| d[i * cols + j])
}

/// Singular values of a matrix-shaped vector, nonincreasing.
pub fn singular_values(x: &RealVector) -> Result<Vec<f64>> {
    let (rows, cols) = dims(x)?;
    if !x.is_finite() {
        return Err(Error::Numerical("singular values of a non-finite matrix".into()));
    }
    as_faer(x, rows, cols)
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD of {rows}x{cols} matrix failed: {e:?}")))
}

/// Smallest kept singular value, relative to the largest, for which the
/// Gram-matrix route is trusted. Squaring costs accuracy only in the small
/// singular values: a kept `s >= r * s_max` comes back with error about
/// `eps * s_max / r`, so the result is good to ~`eps / r` relative to `|X|`.
const GRAM_MIN_KEPT_RATIO: f64 = 1e-5;

/// Applies `shrink` to every singular value and reassembles `U diag(s') V'`.
/// Returns the matrix and the new singular values.
pub fn spectral_map(x: &RealVector, shrink: impl Fn(f64) -> f64) -> Result<(RealVector, Vec<f64>)> {
    spectral_map_above(x, 0.0, shrink)
}

/// [`spectral_map`] for a `shrink` that vanishes on `[0, floor]`.
///
/// Only the triplets with `shrink(s) != 0` enter the result. When `floor` is
/// not small against `|X|_F` (an upper bound on the largest singular value)
/// it suffices to diagonalize the smaller Gram matrix: with
/// `X'X = V diag(s^2) V'`, the map is `X V_k diag(s'/s) V_k'`.
fn spectral_map_above(
    x: &RealVector,
    floor: f64,
    shrink: impl Fn(f64) -> f64,
) -> Result<(RealVector, Vec<f64>)> {
    let (rows, cols) = dims(x)?;
    if !x.is_finite() {
        return Err(Error::Numerical("SVD of a non-finite matrix".into()));
    }
    let a = as_faer(x, rows, cols);
    if floor > 0.0 && floor >= GRAM_MIN_KEPT_RATIO * x.norm() {
        if let Some((m, new_sigma)) = gram_map(&a, &shrink) {
            return Ok((to_vector(&m, x), new_sigma));
        }
    }
    let (m, new_sigma) = svd_map(&a, &shrink)?;
    Ok((to_vector(&m, x), new_sigma))
}

fn svd_map(a: &Mat<f64>, shrink: &impl Fn(f64) -> f64) -> Result<(Mat<f64>, Vec<f64>)> {
    let (rows, cols) = (a.nrows(), a.ncols());
    let svd = a.thin_svd().map_err(|e| {
        Error::Numerical(format!(
            "SVD of {rows}x{cols} matrix failed: {e:?} (max |entry| {:e})",
            a.norm_max()
        ))
    })?;
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    let new_sigma: Vec<f64> = (0..s.nrows()).map(|k| shrink(s[k])).collect();
    let kept: Vec<usize> = (0..new_sigma.len()).filter(|&k| new_sigma[k] != 0.0).collect();
    if kept.is_empty() {
        return Ok((Mat::zeros(rows, cols), new_sigma));
    }
    let us = Mat::from_fn(rows, kept.len(), |i, c| u[(i, kept[c])] * new_sigma[kept[c]]);
    let vk = Mat::from_fn(cols, kept.len(), |j, c| v[(j, kept[c])]);
    Ok((&us * vk.transpose(), new_sigma))
}

fn to_vector(m: &Mat<f64>, like: &RealVector) -> RealVector {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut data = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            data[i * cols + j] = m[(i, j)];
        }
    }
    RealVector::from_parts(data, like.shape())
}

fn gram_map(a: &Mat<f64>, shrink: &impl Fn(f64) -> f64) -> Option<(Mat<f64>, Vec<f64>)> {
    let wide = a.ncols() > a.nrows();
    let g = if wide { a * a.transpose() } else { a.transpose() * a };
    let eig = g.self_adjoint_eigen(Side::Lower).ok()?;
    let (w, lam) = (eig.U(), eig.S().column_vector());
    let k = lam.nrows();
    // eigenvalues come ascending; singular values are reported descending
    let sigma: Vec<f64> = (0..k).rev().map(|i| lam[i].max(0.0).sqrt()).collect();
    let new_sigma: Vec<f64> = sigma.iter().map(|&s| shrink(s)).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let kept: Vec<usize> = (0..k).filter(|&c| new_sigma[c] != 0.0).collect();
    if kept.iter().any(|&c| !(sigma[c] > GRAM_MIN_KEPT_RATIO * smax)) {
        return None;
    }
    let vk = Mat::from_fn(k, kept.len(), |i, c| w[(i, k - 1 - kept[c])]);
    let scaled = Mat::from_fn(k, kept.len(), |i, c| vk[(i, c)] * new_sigma[kept[c]] / sigma[kept[c]]);
    let out = if kept.is_empty() {
        Mat::zeros(a.nrows(), a.ncols())
    } else if wide {
        &scaled * (vk.transpose() * a)
    } else {
        (a * &vk) * scaled.transpose()
    };
    Some((out, new_sigma))
}

/// SVD-based prox: the scalar MCP prox applied to each singular value.
pub fn prox_spectral_mcp(t: &SpectralMcp, gamma: f64, x: &RealVector) -> Result<RealVector> {
    prox_with_sigma(t, gamma, x).map(|(p, _)| p)
}

fn prox_with_sigma(t: &SpectralMcp, gamma: f64, x: &RealVector) -> Result<(RealVector, Vec<f64>)> {
    if !(gamma > 0.0) {
        return input(format!("prox stepsize must be positive, got {gamma}"));
    }
    let kappa = gamma * t.lambda2;
    // the firm threshold zeroes everything up to kappa
    let floor = if kappa < t.tau { kappa } else { 0.0 };
    spectral_map_above(x, floor, |s| prox_scalar_mcp(t.lambda2, t.tau, gamma, s))
}

impl ProxTerm for SpectralMcp {
    fn value(&self, x: &RealVector) -> f64 {
        match singular_values(x) {
            Ok(s) => self.penalty(&s),
            Err(_) => f64::NAN,
        }
    }

    fn prox(&self, gamma: f64, x: &RealVector) -> Result<RealVector> {
        prox_spectral_mcp(self, gamma, x)
    }

    fn prox_with_value(&self, gamma: f64, x: &RealVector) -> Result<(RealVector, f64)> {
        let (p, sigma) = prox_with_sigma(self, gamma, x)?;
        let v = self.penalty(&sigma);
        Ok((p, v))
    }
}
