//! The iteration driver: stopping rule, tracing, optional adaptive stepsize.

use std::time::Instant;

use super::{envelope_at, ryu_step, IterRecord, RelaxationParams, SplitState};
use crate::error::{input, Error, Result};
use crate::planner::AdaptiveController;
use crate::problem::CompositeProblem;
use crate::vector::RealVector;

/// Stop once the composite residual at the prox point drops below `tol`, or
/// after `max_iter` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    /// Stepsize of the gradient-prox map used by the residual.
    pub prox_gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            prox_gamma: 5e-3,
            tol: 1e-3,
            max_iter: 20_000,
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.prox_gamma > 0.0) {
            return input(format!("residual stepsize must be positive, got {}", self.prox_gamma));
        }
        if !(self.tol > 0.0) {
            return input(format!("tolerance must be positive, got {}", self.tol));
        }
        Ok(())
    }
}

/// `| x - prox_{g f3}(x - g (grad f1(x) + grad f2(x))) |`
pub fn composite_residual(p: &CompositeProblem, prox_gamma: f64, x: &RealVector) -> Result<f64> {
    let forward = x.axpy(-prox_gamma, &p.smooth_gradient(x));
    let back = p.f3.prox(prox_gamma, &forward)?;
    Ok(x.dist(&back))
}

/// When the envelope is evaluated along a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnvelopeTracing {
    /// Evaluate when `alpha < 1`, `gamma < 1/(L1+L2)` and `d <= 10^4`.
    #[default]
    Auto,
    /// Evaluate whenever `alpha < 1`, with no stepsize threshold.
    Always,
    Never,
}

pub const AUTO_ENVELOPE_MAX_DIM: usize = 10_000;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub envelope: EnvelopeTracing,
    /// Adaptive stepsize; `None` keeps `gamma` fixed.
    pub controller: Option<AdaptiveController>,
}

#[derive(Debug, Clone)]
pub struct RyuRun {
    pub state: SplitState,
    pub trace: Vec<IterRecord>,
    pub converged: bool,
    pub residual: f64,
    /// Stepsize in force at termination.
    pub gamma: f64,
    pub warnings: Vec<String>,
}

impl RyuRun {
    pub fn iterations(&self) -> usize {
        self.state.k
    }

    /// Whether the traced envelope never increases by more than
    /// `slack * (1 + |env|)`. `None` when the envelope was not traced.
    pub fn envelope_monotone(&self, slack: f64) -> Option<bool> {
        envelope_monotone(&self.trace, slack)
    }
}

pub(crate) fn envelope_monotone(trace: &[IterRecord], slack: f64) -> Option<bool> {
    let env: Vec<f64> = trace.iter().filter_map(|r| r.envelope).collect();
    if env.len() < 2 {
        return None;
    }
    Some(env.windows(2).all(|w| w[1] <= w[0] + slack * (1.0 + w[0].abs())))
}

pub fn run_ryu(
    p: &CompositeProblem,
    params: RelaxationParams,
    z1: RealVector,
    z2: RealVector,
    stop: &StoppingRule,
) -> Result<RyuRun> {
    run_ryu_with(p, params, z1, z2, stop, RunOptions::default())
}

fn attach_last_good(e: Error, trace: &[IterRecord]) -> Error {
    match e {
        Error::Divergence { quantity, k, .. } => Error::Divergence {
            quantity,
            k,
            last_good: trace.last().cloned().map(Box::new),
        },
        other => other,
    }
}

pub fn run_ryu_with(
    p: &CompositeProblem,
    mut params: RelaxationParams,
    z1: RealVector,
    z2: RealVector,
    stop: &StoppingRule,
    mut opts: RunOptions,
) -> Result<RyuRun> {
    stop.validate()?;
    let start = Instant::now();
    let threshold = 1.0 / (p.l1() + p.l2());
    let mut warnings = Vec::new();
    let thm2_cap = if params.alpha() < 1.0 {
        (params.alpha() / p.l1()).min((1.0 - params.alpha()) / p.l2())
    } else {
        0.0
    };
    let gamma_max = opts
        .controller
        .as_ref()
        .map_or(params.gamma(), |c| c.gamma().max(params.gamma()));
    if gamma_max >= threshold {
        warnings.push(format!(
            "gamma = {gamma_max} is not below 1/(L1+L2) = {threshold}; no descent guarantee"
        ));
    } else if params.alpha() < 1.0 && gamma_max > thm2_cap {
        warnings.push(format!(
            "gamma = {gamma_max} exceeds min(alpha/L1, (1-alpha)/L2) = {thm2_cap}; \
             subsequential convergence is not covered"
        ));
    }
    if let Some(c) = opts.controller.as_ref() {
        params = params.with_gamma(c.gamma())?;
    }
    let trace_envelope = |params: &RelaxationParams| match opts.envelope {
        EnvelopeTracing::Never => false,
        EnvelopeTracing::Always => params.alpha() < 1.0,
        EnvelopeTracing::Auto => {
            params.alpha() < 1.0 && params.gamma() < threshold && p.dim() <= AUTO_ENVELOPE_MAX_DIM
        }
    };

    let mut trace: Vec<IterRecord> = Vec::new();
    let mut state = SplitState::initialize(p, &params, z1, z2)?;
    let mut prev: Option<SplitState> = None;
    let mut converged = false;
    let mut residual;
    loop {
        residual = composite_residual(p, stop.prox_gamma, &state.x3)?;
        let objective = p.f1.value(&state.x3) + p.f2.value(&state.x3) + state.f3_x3;
        let envelope = if trace_envelope(&params) {
            Some(envelope_at(p, &params, &state)?)
        } else {
            None
        };
        let (dz1, dz2, dx1, dx2) = match &prev {
            Some(q) => (
                state.z1.dist(&q.z1),
                state.z2.dist(&q.z2),
                state.x1.dist(&q.x1),
                state.x2.dist(&q.x2),
            ),
            None => (0.0, 0.0, 0.0, 0.0),
        };
        let record = IterRecord {
            k: state.k,
            gamma: params.gamma(),
            envelope,
            objective,
            residual,
            dz1,
            dz2: Some(dz2),
            dx1,
            dx2,
            gap31: state.x3.dist(&state.x1),
            gap32: Some(state.x3.dist(&state.x2)),
            time_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        if !(residual.is_finite() && objective.is_finite()) {
            return Err(Error::Divergence {
                quantity: if residual.is_finite() { "objective" } else { "residual" },
                k: state.k,
                last_good: trace.last().cloned().map(Box::new),
            });
        }
        trace.push(record);
        if residual < stop.tol {
            converged = true;
            break;
        }
        if state.k >= stop.max_iter {
            break;
        }
        let mut next = ryu_step(p, &params, &state).map_err(|e| attach_last_good(e, &trace))?;
        if let Some(ctrl) = opts.controller.as_mut() {
            let before = ctrl.gamma();
            let after = ctrl.update(
                next.k,
                next.x1.dist(&state.x1),
                next.x2.dist(&state.x2),
                next.x1.norm(),
                next.x2.norm(),
            );
            if after != before {
                params = params.with_gamma(after)?;
                let k = next.k;
                next = SplitState::at_iteration(p, &params, next.z1, next.z2, k)
                    .map_err(|e| attach_last_good(e, &trace))?;
            }
        }
        prev = Some(std::mem::replace(&mut state, next));
    }
    Ok(RyuRun {
        state,
        trace,
        converged,
        residual,
        gamma: params.gamma(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{DiagonalQuadratic, L1Norm, ZeroProx, ZeroSmooth};
    use crate::vector::Shape;
    use std::sync::Arc;

    fn convex_1d() -> CompositeProblem {
        CompositeProblem::new(
            Arc::new(DiagonalQuadratic::isotropic(1, 1.0)),
            Arc::new(DiagonalQuadratic::isotropic(1, 1.0)),
            Arc::new(L1Norm { weight: 1.0 }),
            Shape::Flat(1),
        )
        .unwrap()
    }

    #[test]
    fn residual_vanishes_at_stationary_point() {
        let p = CompositeProblem::new(
            Arc::new(DiagonalQuadratic::new(vec![1.0], vec![2.0]).unwrap()),
            Arc::new(DiagonalQuadratic::new(vec![3.0], vec![-2.0]).unwrap()),
            Arc::new(ZeroProx),
            Shape::Flat(1),
        )
        .unwrap();
        // 1*(x-2) + 3*(x+2) = 0 at x = -1
        let x = RealVector::flat(vec![-1.0]).unwrap();
        assert!(composite_residual(&p, 5e-3, &x).unwrap() < 1e-15);
    }

    #[test]
    fn residual_vanishes_at_prox_fixed_point() {
        let p = CompositeProblem::new(
            Arc::new(ZeroSmooth::new(1.0)),
            Arc::new(ZeroSmooth::new(1.0)),
            Arc::new(L1Norm { weight: 2.0 }),
            Shape::Flat(2),
        )
        .unwrap();
        let x = RealVector::zeros(Shape::Flat(2));
        assert_eq!(composite_residual(&p, 0.1, &x).unwrap(), 0.0);
    }

    #[test]
    fn fixed_point_start_terminates_immediately() {
        let p = convex_1d();
        let params = RelaxationParams::new(0.05, 1.0, 0.9).unwrap();
        let z = RealVector::zeros(Shape::Flat(1));
        let run = run_ryu(&p, params, z.clone(), z, &StoppingRule::default()).unwrap();
        assert!(run.converged);
        assert_eq!(run.iterations(), 0);
        assert_eq!(run.trace.len(), 1);
        assert_eq!(run.residual, 0.0);
    }

    #[test]
    fn convex_1d_converges_to_zero() {
        let p = convex_1d();
        let params = RelaxationParams::new(0.2, 1.0, 0.5).unwrap();
        let z1 = RealVector::flat(vec![3.0]).unwrap();
        let z2 = RealVector::flat(vec![-1.0]).unwrap();
        let stop = StoppingRule {
            tol: 1e-10,
            ..StoppingRule::default()
        };
        let run = run_ryu(&p, params, z1, z2, &stop).unwrap();
        assert!(run.converged);
        assert!(run.state.x3.as_slice()[0].abs() < 1e-8);
        assert_eq!(run.envelope_monotone(1e-10), Some(true));
        let ks: Vec<usize> = run.trace.iter().map(|r| r.k).collect();
        assert!(ks.windows(2).all(|w| w[1] == w[0] + 1));
    }

    #[test]
    fn envelope_tracing_modes() {
        let p = convex_1d();
        let z1 = RealVector::flat(vec![3.0]).unwrap();
        let z2 = RealVector::flat(vec![1.0]).unwrap();
        let stop = StoppingRule {
            max_iter: 5,
            tol: 1e-14,
            ..StoppingRule::default()
        };
        // gamma above 1/(L1+L2) = 0.5: Auto skips the envelope, Always computes it
        let big = RelaxationParams::new(0.6, 1.0, 0.5).unwrap();
        let auto = run_ryu(&p, big, z1.clone(), z2.clone(), &stop).unwrap();
        assert!(auto.trace.iter().all(|r| r.envelope.is_none()));
        assert!(!auto.warnings.is_empty());
        let opts = RunOptions {
            envelope: EnvelopeTracing::Always,
            controller: None,
        };
        let always = run_ryu_with(&p, big, z1.clone(), z2.clone(), &stop, opts).unwrap();
        assert!(always.trace.iter().all(|r| r.envelope.is_some()));
        // alpha = 1 never traces
        let one = RelaxationParams::new(0.1, 1.0, 1.0).unwrap();
        let run = run_ryu(&p, one, z1, z2, &stop).unwrap();
        assert!(run.trace.iter().all(|r| r.envelope.is_none()));
        assert_eq!(run.iterations(), 5);
    }

    #[test]
    fn divergence_reports_last_good_record() {
        // overflow: the first z-update leaves the doubles
        let p = convex_1d();
        let params = RelaxationParams::new(0.2, 1.0, 0.5).unwrap();
        let z1 = RealVector::flat(vec![1.7e308]).unwrap();
        let z2 = RealVector::flat(vec![-1.7e308]).unwrap();
        match run_ryu(&p, params, z1, z2, &StoppingRule::default()) {
            Err(Error::Divergence { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
