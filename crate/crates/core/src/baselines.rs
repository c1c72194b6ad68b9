//! Davis–Yin three-operator splitting, used as the comparison baseline.
//!
//! ```text
//! x_f = prox_{g f}(z)
//! x_g = prox_{g g}(2 x_f - z - g grad h(x_f))
//! z  <- z + lambda (x_g - x_f)
//! ```

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::problem::{smooth_prox, CompositeProblem};
use crate::splitting::{composite_residual, IterRecord, StoppingRule};
use crate::vector::RealVector;

/// One of the three terms of a [`CompositeProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermSlot {
    F1,
    F2,
    F3,
}

/// Which term goes through which DYS operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DysRoles {
    pub f: TermSlot,
    pub g: TermSlot,
    /// Gradient slot; must be smooth.
    pub h: TermSlot,
}

impl Default for DysRoles {
    fn default() -> Self {
        Self {
            f: TermSlot::F2,
            g: TermSlot::F3,
            h: TermSlot::F1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DysParams {
    gamma: f64,
    lambda: f64,
    roles: DysRoles,
}

fn lipschitz_of(p: &CompositeProblem, slot: TermSlot) -> Option<f64> {
    match slot {
        TermSlot::F1 => Some(p.l1()),
        TermSlot::F2 => Some(p.l2()),
        TermSlot::F3 => None,
    }
}

impl DysParams {
    /// Validates `gamma < 1/L_h` and that the roles are a permutation with a
    /// smooth gradient slot.
    pub fn new(p: &CompositeProblem, gamma: f64, lambda: f64, roles: DysRoles) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return input(format!("gamma must be positive, got {gamma}"));
        }
        if !(lambda > 0.0 && lambda <= 2.0) {
            return input(format!("lambda must lie in (0, 2], got {lambda}"));
        }
        let DysRoles { f, g, h } = roles;
        if f == g || g == h || f == h {
            return input("DYS roles must assign each term exactly once");
        }
        let Some(lh) = lipschitz_of(p, h) else {
            return input("the gradient slot needs a smooth term");
        };
        if gamma >= 1.0 / lh {
            return input(format!("DYS needs gamma < 1/L_h = {}, got {gamma}", 1.0 / lh));
        }
        Ok(Self {
            gamma,
            lambda,
            roles,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn roles(&self) -> DysRoles {
        self.roles
    }
}

/// `(prox point, f3 at it if the slot is f3)`
fn prox_slot(
    p: &CompositeProblem,
    slot: TermSlot,
    gamma: f64,
    x: &RealVector,
) -> Result<(RealVector, Option<f64>)> {
    Ok(match slot {
        TermSlot::F1 => (smooth_prox(p.f1.as_ref(), gamma, x), None),
        TermSlot::F2 => (smooth_prox(p.f2.as_ref(), gamma, x), None),
        TermSlot::F3 => {
            let (y, v) = p.f3.prox_with_value(gamma, x)?;
            (y, Some(v))
        }
    })
}

fn gradient_slot(p: &CompositeProblem, slot: TermSlot, x: &RealVector) -> RealVector {
    match slot {
        TermSlot::F1 => p.f1.gradient(x),
        TermSlot::F2 => p.f2.gradient(x),
        TermSlot::F3 => unreachable!("validated by DysParams::new"),
    }
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

#[derive(Debug, Clone)]
pub struct DysState {
    pub z: RealVector,
    pub x_f: RealVector,
    pub x_g: RealVector,
    /// `f3(x_g)` when known from the prox.
    f3_xg: Option<f64>,
    pub k: usize,
}

impl DysState {
    fn at(p: &CompositeProblem, params: &DysParams, z: RealVector, k: usize) -> Result<Self> {
        z.ensure_shape(p.shape())?;
        let gamma = params.gamma;
        let DysRoles { f, g, h } = params.roles;
        let (x_f, _) = prox_slot(p, f, gamma, &z)?;
        finite(&x_f, "x_f", k)?;
        let reflected = x_f.scale(2.0).sub(&z).axpy(-gamma, &gradient_slot(p, h, &x_f));
        finite(&reflected, "x_g prox anchor", k)?;
        let (x_g, f3_xg) = prox_slot(p, g, gamma, &reflected)?;
        finite(&x_g, "x_g", k)?;
        Ok(Self {
            z,
            x_f,
            x_g,
            f3_xg,
            k,
        })
    }

    pub fn initialize(p: &CompositeProblem, params: &DysParams, z: RealVector) -> Result<Self> {
        Self::at(p, params, z, 0)
    }

    fn next(&self, p: &CompositeProblem, params: &DysParams) -> Result<Self> {
        let z = self.z.axpy(params.lambda, &self.x_g.sub(&self.x_f));
        finite(&z, "z", self.k + 1)?;
        Self::at(p, params, z, self.k + 1)
    }

    fn objective(&self, p: &CompositeProblem) -> f64 {
        let f3 = self.f3_xg.unwrap_or_else(|| p.f3.value(&self.x_g));
        p.f1.value(&self.x_g) + p.f2.value(&self.x_g) + f3
    }
}

/// `(z+, x_f, x_g)` where `x_f`, `x_g` are the shadow points of `z`.
pub fn dys_step(
    p: &CompositeProblem,
    params: &DysParams,
    z: &RealVector,
) -> Result<(RealVector, RealVector, RealVector)> {
    let s = DysState::initialize(p, params, z.clone())?;
    let z_next = s.z.axpy(params.lambda, &s.x_g.sub(&s.x_f));
    finite(&z_next, "z", 1)?;
    Ok((z_next, s.x_f, s.x_g))
}

#[derive(Debug, Clone)]
pub struct DysRun {
    pub state: DysState,
    pub trace: Vec<IterRecord>,
    pub converged: bool,
    pub residual: f64,
}

impl DysRun {
    pub fn iterations(&self) -> usize {
        self.state.k
    }
}

/// Runs DYS with the residual and objective measured at `x_g`.
pub fn run_dys(
    p: &CompositeProblem,
    params: &DysParams,
    z0: RealVector,
    stop: &StoppingRule,
) -> Result<DysRun> {
    stop.validate()?;
    let start = Instant::now();
    let mut trace: Vec<IterRecord> = Vec::new();
    let with_last = |e: Error, trace: &[IterRecord]| match e {
        Error::Divergence { quantity, k, .. } => Error::Divergence {
            quantity,
            k,
            last_good: trace.last().cloned().map(Box::new),
        },
        other => other,
    };
    let mut state = DysState::initialize(p, params, z0)?;
    let mut prev: Option<DysState> = None;
    let mut converged = false;
    let mut residual;
    loop {
        residual = composite_residual(p, stop.prox_gamma, &state.x_g)?;
        let objective = state.objective(p);
        if !(residual.is_finite() && objective.is_finite()) {
            return Err(Error::Divergence {
                quantity: if residual.is_finite() { "objective" } else { "residual" },
                k: state.k,
                last_good: trace.last().cloned().map(Box::new),
            });
        }
        let (dz, dxf, dxg) = match &prev {
            Some(q) => (state.z.dist(&q.z), state.x_f.dist(&q.x_f), state.x_g.dist(&q.x_g)),
            None => (0.0, 0.0, 0.0),
        };
        trace.push(IterRecord {
            k: state.k,
            gamma: params.gamma,
            envelope: None,
            objective,
            residual,
            dz1: dz,
            dz2: None,
            dx1: dxf,
            dx2: dxg,
            gap31: state.x_g.dist(&state.x_f),
            gap32: None,
            time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if residual < stop.tol {
            converged = true;
            break;
        }
        if state.k >= stop.max_iter {
            break;
        }
        let next = state.next(p, params).map_err(|e| with_last(e, &trace))?;
        prev = Some(std::mem::replace(&mut state, next));
    }
    Ok(DysRun {
        state,
        trace,
        converged,
        residual,
    })
}
