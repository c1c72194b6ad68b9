//! The relaxed Ryu three-operator splitting iteration and its merit functions.
//!
//! Given governing variables `(z1, z2)` the shadow points are
//!
//! ```text
//! x1 = prox_{g f1}(z1)
//! x2 = prox_{(g/a) f2}(z2/a + x1)
//! x3 in prox_{g f3}(x1 - z1 + x2 - z2)
//! ```
//!
//! and one step moves `z_i <- z_i + lambda (x3 - x_i)`. With `alpha = 1` this
//! is the original Ryu scheme.

mod descent;
mod envelope;
mod run;
mod trace;

pub use descent::{descent_constants, identity_check, DescentConstants, IdentityCheck};
pub use envelope::{
    envelope_at, envelope_moreau_form, lagrangian_value, lagrangian_multipliers, ryu_envelope,
    sandwich_bounds, Sandwich,
};
pub use run::{
    composite_residual, run_ryu, run_ryu_with, EnvelopeTracing, RunOptions, RyuRun, StoppingRule,
    AUTO_ENVELOPE_MAX_DIM,
};
pub(crate) use run::envelope_monotone;
pub use trace::{read_trace_csv, write_trace_csv, write_trace_json, IterRecord};

use crate::error::{input, Error, Result};
use crate::problem::{smooth_prox, CompositeProblem};
use crate::vector::RealVector;

/// Stepsize `gamma` and relaxation parameters `lambda`, `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationParams {
    gamma: f64,
    lambda: f64,
    alpha: f64,
}

impl RelaxationParams {
    pub fn new(gamma: f64, lambda: f64, alpha: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return input(format!("gamma must be positive, got {gamma}"));
        }
        if !(lambda > 0.0 && lambda <= 2.0) {
            return input(format!("lambda must lie in (0, 2], got {lambda}"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return input(format!("alpha must lie in (0, 1], got {alpha}"));
        }
        Ok(Self {
            gamma,
            lambda,
            alpha,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `gamma / alpha`
    pub fn gamma1(&self) -> f64 {
        self.gamma / self.alpha
    }

    /// `gamma / (1 - alpha)`, infinite at `alpha = 1`.
    pub fn gamma2(&self) -> f64 {
        if self.alpha == 1.0 {
            f64::INFINITY
        } else {
            self.gamma / (1.0 - self.alpha)
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(gamma, self.lambda, self.alpha)
    }
}

/// Governing variables and the shadow points they determine.
#[derive(Debug, Clone)]
pub struct SplitState {
    pub z1: RealVector,
    pub z2: RealVector,
    pub x1: RealVector,
    pub x2: RealVector,
    pub x3: RealVector,
    /// `f3(x3)`, as reported by the prox oracle.
    pub f3_x3: f64,
    pub k: usize,
}

fn finite(v: &RealVector, quantity: &'static str, k: usize) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence {
            quantity,
            k,
            last_good: None,
        })
    }
}

impl SplitState {
    /// Computes the shadow points of `(z1, z2)`.
    pub fn initialize(
        p: &CompositeProblem,
        params: &RelaxationParams,
        z1: RealVector,
        z2: RealVector,
    ) -> Result<Self> {
        Self::at_iteration(p, params, z1, z2, 0)
    }

    pub(crate) fn at_iteration(
        p: &CompositeProblem,
        params: &RelaxationParams,
        z1: RealVector,
        z2: RealVector,
        k: usize,
    ) -> Result<Self> {
        z1.ensure_shape(p.shape())?;
        z2.ensure_shape(p.shape())?;
        let (gamma, alpha) = (params.gamma, params.alpha);
        let x1 = smooth_prox(p.f1.as_ref(), gamma, &z1);
        finite(&x1, "x1", k)?;
        let x2 = smooth_prox(p.f2.as_ref(), gamma / alpha, &x1.axpy(1.0 / alpha, &z2));
        finite(&x2, "x2", k)?;
        let anchor = x1.sub(&z1).add(&x2.sub(&z2));
        finite(&anchor, "x3 prox anchor", k)?;
        let (x3, f3_x3) = p.f3.prox_with_value(gamma, &anchor)?;
        finite(&x3, "x3", k)?;
        Ok(Self {
            z1,
            z2,
            x1,
            x2,
            x3,
            f3_x3,
            k,
        })
    }

    pub fn zeros(p: &CompositeProblem, params: &RelaxationParams) -> Result<Self> {
        let z = RealVector::zeros(p.shape());
        Self::initialize(p, params, z.clone(), z)
    }
}

/// One relaxed Ryu step; the returned state carries the shadow points of the
/// updated governing variables.
pub fn ryu_step(
    p: &CompositeProblem,
    params: &RelaxationParams,
    s: &SplitState,
) -> Result<SplitState> {
    let lambda = params.lambda;
    let z1 = s.z1.axpy(lambda, &s.x3.sub(&s.x1));
    let z2 = s.z2.axpy(lambda, &s.x3.sub(&s.x2));
    finite(&z1, "z1", s.k + 1)?;
    finite(&z2, "z2", s.k + 1)?;
    SplitState::at_iteration(p, params, z1, z2, s.k + 1)
}
