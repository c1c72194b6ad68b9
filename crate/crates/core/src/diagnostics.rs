//! Invariant and oracle checks on small seeded instances, as run by the
//! `check` command.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bench::generate_instance;
use crate::error::Result;
use crate::planner::{alpha_lower_bound, plan};
use crate::problem::{gaussian_vector, gradient_check, lipschitz_probe, CompositeProblem, ProxTerm, SmoothTerm};
use crate::prox::{
    brute_force_prox_1d, mcp_penalty, oracle_bounds, prox_masked_quadratic, prox_nonneg_distance,
    prox_scalar_mcp, DenseQuadratic, L1Norm, MaskedQuadratic, NonnegDistance, SeparableMcp,
};
use crate::splitting::{
    descent_constants, envelope_at, envelope_moreau_form, identity_check, lagrangian_multipliers,
    lagrangian_value, ryu_step, sandwich_bounds, RelaxationParams, SplitState,
};
use crate::vector::{RealVector, Shape};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity, against `limit`.
    pub worst: f64,
    pub limit: f64,
}

impl CheckOutcome {
    fn at_most(name: &str, worst: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: worst <= limit,
            worst,
            limit,
        }
    }
}

/// Random convex quadratic `x'Ax/2 + b'x` in `d` dimensions whose Hessian has
/// largest eigenvalue `l`.
pub fn random_quadratic(rng: &mut impl Rng, d: usize, l: f64) -> Result<DenseQuadratic> {
    let g = gaussian_vector(rng, Shape::Flat(d * d), 1.0).into_vec();
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let v: f64 = (0..d).map(|k| g[i * d + k] * g[j * d + k]).sum();
            a[i * d + j] = v;
            a[j * d + i] = v;
        }
    }
    let b = gaussian_vector(rng, Shape::Flat(d), 1.0).into_vec();
    let top = DenseQuadratic::new(d, a.clone(), b.clone())?.lipschitz();
    let scaled = a.iter().map(|v| v * l / top).collect();
    DenseQuadratic::new(d, scaled, b)
}

/// Test instance family: two random quadratics with moduli in `[0.5, 10]`
/// and either a scaled l1 norm (even seeds) or a separable MCP (odd seeds).
pub fn random_test_problem(seed: u64, d: usize) -> Result<CompositeProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l1 = rng.random_range(0.5..10.0);
    let l2 = rng.random_range(0.5..10.0);
    let f1 = random_quadratic(&mut rng, d, l1)?;
    let f2 = random_quadratic(&mut rng, d, l2)?;
    let weight = rng.random_range(0.1..2.0);
    let f3: Arc<dyn ProxTerm> = if seed % 2 == 0 {
        Arc::new(L1Norm { weight })
    } else {
        Arc::new(SeparableMcp {
            weight,
            tau: rng.random_range(0.5..5.0),
        })
    };
    CompositeProblem::new(Arc::new(f1), Arc::new(f2), f3, Shape::Flat(d))
}

/// Worst per-step violations along a run at the planned stepsize with
/// `alpha = (alpha_bar + 1)/2`.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct DescentAudit {
    pub steps: usize,
    /// `max (M |dz|^2 - decrease) / (1 + |env|)`; nonpositive when descent holds.
    pub descent: f64,
    /// `max` relative identity residual.
    pub identity: f64,
    /// `max` relative violation of either sandwich inequality.
    pub sandwich: f64,
    /// `max |env - lagrangian| / (1 + |env|)`.
    pub lagrangian: f64,
    pub m: f64,
}

pub fn audit_descent(p: &CompositeProblem, lambda: f64, steps: usize, seed: u64) -> Result<DescentAudit> {
    let alpha = 0.5 * (alpha_lower_bound(lambda)? + 1.0);
    let pl = plan(p.l1(), p.l2(), lambda, alpha)?;
    let params = RelaxationParams::new(pl.gamma_ryu, lambda, alpha)?;
    let m = descent_constants(p.l1(), p.l2(), &params, pl.eps1, pl.eps2).m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z1 = gaussian_vector(&mut rng, p.shape(), 3.0);
    let z2 = gaussian_vector(&mut rng, p.shape(), 3.0);
    let mut s = SplitState::initialize(p, &params, z1, z2)?;
    let mut env = envelope_at(p, &params, &s)?;
    let mut audit = DescentAudit {
        m,
        ..DescentAudit::default()
    };
    let rel = |excess: f64, scale: f64| excess / (1.0 + scale.abs());
    for _ in 0..steps {
        let sw = sandwich_bounds(p, &params, &s)?;
        audit.sandwich = audit
            .sandwich
            .max(rel(env - sw.upper, env))
            .max(rel(sw.lower - env, env));
        let (mu1, mu2) = lagrangian_multipliers(&params, &s);
        let lag = lagrangian_value(
            p,
            1.0 / params.gamma1(),
            1.0 / params.gamma2(),
            &s.x1,
            &s.x2,
            &s.x3,
            &mu1,
            &mu2,
        );
        audit.lagrangian = audit.lagrangian.max(rel((env - lag).abs(), env));
        let next = ryu_step(p, &params, &s)?;
        audit.identity = audit.identity.max(identity_check(p, &params, &s, &next).relative_residual());
        let env_next = envelope_at(p, &params, &next)?;
        let dz = next.z1.dist(&s.z1).powi(2) + next.z2.dist(&s.z2).powi(2);
        audit.descent = audit.descent.max(rel(m * dz - (env - env_next), env));
        audit.steps += 1;
        s = next;
        env = env_next;
    }
    Ok(audit)
}

/// Largest `|min-form - Moreau-form| / (1 + |env|)` over random probes.
pub fn audit_envelope_forms(p: &CompositeProblem, params: &RelaxationParams, probes: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let z1 = gaussian_vector(&mut rng, p.shape(), 3.0);
        let z2 = gaussian_vector(&mut rng, p.shape(), 3.0);
        let s = SplitState::initialize(p, params, z1.clone(), z2.clone())?;
        let a = envelope_at(p, params, &s)?;
        let b = envelope_moreau_form(p, params, &z1, &z2)?;
        worst = worst.max((a - b).abs() / (1.0 + a.abs()));
    }
    Ok(worst)
}

/// Largest componentwise gap to the brute-force oracle over random scalar
/// probes, for the three per-entry proxes of the benchmark.
pub fn audit_scalar_proxes(probes: usize, seed: u64) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 3];
    for _ in 0..probes {
        let v: f64 = rng.random_range(-20.0..20.0);
        let gamma: f64 = rng.random_range(0.01..2.0);

        let (w, tau) = (rng.random_range(0.1..5.0), rng.random_range(0.5..10.0));
        let kappa = gamma * w;
        let (lo, hi) = oracle_bounds(v, kappa);
        let obj = |t: f64| kappa * mcp_penalty(t, tau) + 0.5 * (t - v) * (t - v);
        let oracle = brute_force_prox_1d(obj, lo, hi, 20_000);
        let fast = prox_scalar_mcp(w, tau, gamma, v);
        // on exact ties both minimizers are valid; compare objective then
        let gap = if (obj(fast) - obj(oracle)).abs() <= 1e-12 * (1.0 + obj(oracle).abs()) {
            (fast - oracle).abs().min(1e-7)
        } else {
            (fast - oracle).abs()
        };
        worst[0] = worst[0].max(gap);

        let l1 = rng.random_range(0.1..20.0);
        let t = NonnegDistance::new(l1).expect("positive");
        let x = RealVector::flat(vec![v]).expect("finite");
        let fast = prox_nonneg_distance(&t, gamma, &x).as_slice()[0];
        // the prox lies between v and 0
        let (lo, hi) = (v.min(0.0) - 1.0, v.max(0.0) + 1.0);
        let obj = |u: f64| 0.5 * l1 * u.min(0.0).powi(2) + (u - v).powi(2) / (2.0 * gamma);
        worst[1] = worst[1].max((fast - brute_force_prox_1d(obj, lo, hi, 20_000)).abs());

        let target: f64 = rng.random_range(-5.0..5.0);
        let observed = rng.random_bool(0.5);
        let q = MaskedQuadratic::new(
            RealVector::matrix(1, 1, vec![target]).expect("finite"),
            if observed { vec![0] } else { vec![] },
        )
        .expect("valid mask");
        let xm = RealVector::matrix(1, 1, vec![v]).expect("finite");
        let fast = prox_masked_quadratic(&q, gamma, &xm).expect("shape").as_slice()[0];
        let obj = |u: f64| {
            let fit = if observed { 0.5 * (u - target).powi(2) } else { 0.0 };
            fit + (u - v).powi(2) / (2.0 * gamma)
        };
        let (lo, hi) = (v.min(target) - 1.0, v.max(target) + 1.0);
        worst[2] = worst[2].max((fast - brute_force_prox_1d(obj, lo, hi, 20_000)).abs());
    }
    worst
}

/// The benchmark smooth terms on a small seeded instance; gradient checks at
/// the instance size would be dominated by difference rounding.
pub fn benchmark_smooth_terms(seed: u64) -> Result<(Vec<(&'static str, Arc<dyn SmoothTerm>)>, Shape)> {
    let inst = generate_instance(12, 12, 3, 60, seed, 10.0, 5.0, 100.0)?;
    let p = inst.problem()?;
    Ok((vec![("f1", p.f1.clone()), ("f2", p.f2.clone())], inst.shape()))
}

/// The full check suite, in a fixed order.
pub fn run_checks() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    let (terms, shape) = benchmark_smooth_terms(11)?;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (name, t) in &terms {
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let x = gaussian_vector(&mut rng, shape, 3.0);
            worst = worst.max(gradient_check(t.as_ref(), &x, 1e-6));
        }
        out.push(CheckOutcome::at_most(&format!("gradient {name}"), worst, 1e-6));
        let l = t.lipschitz();
        let ratio = lipschitz_probe(t.as_ref(), shape, 2000, 23);
        out.push(CheckOutcome::at_most(&format!("lipschitz {name}"), ratio, l * (1.0 + 1e-12)));
    }

    let [mcp, nonneg, masked] = audit_scalar_proxes(300, 5);
    out.push(CheckOutcome::at_most("prox scalar mcp vs oracle", mcp, 1e-6));
    out.push(CheckOutcome::at_most("prox nonneg distance vs oracle", nonneg, 1e-6));
    out.push(CheckOutcome::at_most("prox masked quadratic vs oracle", masked, 1e-6));

    let mut descent = 0.0f64;
    let mut identity = 0.0f64;
    let mut sandwich = 0.0f64;
    let mut lagrangian = 0.0f64;
    let mut forms = 0.0f64;
    for (i, lambda) in [0.5, 1.0, 1.5].into_iter().enumerate() {
        let seed = 100 + i as u64;
        let p = random_test_problem(seed, 10)?;
        let a = audit_descent(&p, lambda, 200, seed)?;
        descent = descent.max(a.descent);
        identity = identity.max(a.identity);
        sandwich = sandwich.max(a.sandwich);
        lagrangian = lagrangian.max(a.lagrangian);
        let alpha = 0.5 * (alpha_lower_bound(lambda)? + 1.0);
        let gamma = plan(p.l1(), p.l2(), lambda, alpha)?.gamma_ryu;
        let params = RelaxationParams::new(gamma, lambda, alpha)?;
        forms = forms.max(audit_envelope_forms(&p, &params, 20, seed)?);
    }
    out.push(CheckOutcome::at_most("sufficient descent", descent, 1e-9));
    out.push(CheckOutcome::at_most("step identities", identity, 1e-10));
    out.push(CheckOutcome::at_most("sandwich bounds", sandwich, 1e-9));
    out.push(CheckOutcome::at_most("envelope = lagrangian", lagrangian, 1e-10));
    out.push(CheckOutcome::at_most("min form = moreau form", forms, 1e-8));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_quadratic_has_requested_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_quadratic(&mut rng, 6, 3.5).unwrap();
        assert!((q.lipschitz() - 3.5).abs() < 1e-10);
        let probe = lipschitz_probe(&q, Shape::Flat(6), 500, 2);
        assert!(probe <= 3.5 * (1.0 + 1e-12));
    }

    #[test]
    fn small_audit_passes() {
        let p = random_test_problem(3, 5).unwrap();
        let a = audit_descent(&p, 1.0, 50, 3).unwrap();
        assert_eq!(a.steps, 50);
        assert!(a.m > 0.0);
        assert!(a.descent <= 1e-9, "{a:?}");
        assert!(a.identity <= 1e-10, "{a:?}");
    }

    #[test]
    fn full_suite_passes() {
        let outcomes = run_checks().unwrap();
        for o in &outcomes {
            assert!(o.passed, "{o:?}");
        }
    }
}
