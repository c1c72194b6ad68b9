//! Envelope merit function, its Moreau-envelope form, and the augmented
//! Lagrangian of the variable-splitting reformulation.

use super::{RelaxationParams, SplitState};
use crate::error::{input, Error, Result};
use crate::problem::CompositeProblem;
use crate::vector::RealVector;

fn require_alpha_below_one(params: &RelaxationParams) -> Result<()> {
    if params.alpha() < 1.0 {
        Ok(())
    } else {
        Err(Error::EnvelopeUndefined)
    }
}

/// Envelope value at the governing variables of `s`, reusing its shadow
/// points (no extra prox evaluations). `x3` attains the inner minimum.
///
/// Only `alpha < 1` is checked here; the stepsize threshold
/// `gamma < 1/(L1+L2)` is the caller's business.
pub fn envelope_at(p: &CompositeProblem, params: &RelaxationParams, s: &SplitState) -> Result<f64> {
    require_alpha_below_one(params)?;
    let (inv1, inv2) = (1.0 / params.gamma1(), 1.0 / params.gamma2());
    let mut value = s.f3_x3;
    for (f, x, inv) in [(&p.f1, &s.x1, inv1), (&p.f2, &s.x2, inv2)] {
        let d = s.x3.sub(x);
        value += f.value(x) + d.dot(&f.gradient(x)) + 0.5 * inv * d.norm_sq();
    }
    Ok(value)
}

/// Envelope value at `(z1, z2)` and the minimizer `x3`.
pub fn ryu_envelope(
    p: &CompositeProblem,
    params: &RelaxationParams,
    z1: &RealVector,
    z2: &RealVector,
) -> Result<(f64, RealVector)> {
    require_alpha_below_one(params)?;
    let threshold = 1.0 / (p.l1() + p.l2());
    if params.gamma() >= threshold {
        return input(format!(
            "envelope needs gamma < 1/(L1+L2) = {threshold}, got {}",
            params.gamma()
        ));
    }
    let s = SplitState::initialize(p, params, z1.clone(), z2.clone())?;
    let v = envelope_at(p, params, &s)?;
    Ok((v, s.x3))
}

/// The same envelope written through the Moreau envelope of `gamma f3`:
///
/// ```text
/// env = M_{g f3}(w) - |w|^2/(2g) + sum_i [ f_i(x_i) - <x_i, grad f_i(x_i)> + |x_i|^2/(2 g_i) ]
/// w   = alpha (x1 - g1 grad f1(x1)) + (1 - alpha) (x2 - g2 grad f2(x2))
/// ```
///
/// `w` is assembled from gradients rather than from `z`, so this route is
/// independent of the prox anchor used by the iteration.
pub fn envelope_moreau_form(
    p: &CompositeProblem,
    params: &RelaxationParams,
    z1: &RealVector,
    z2: &RealVector,
) -> Result<f64> {
    require_alpha_below_one(params)?;
    let s = SplitState::initialize(p, params, z1.clone(), z2.clone())?;
    let (gamma, alpha) = (params.gamma(), params.alpha());
    let (g1, g2) = (params.gamma1(), params.gamma2());
    let grad1 = p.f1.gradient(&s.x1);
    let grad2 = p.f2.gradient(&s.x2);
    let w = s
        .x1
        .axpy(-g1, &grad1)
        .scale(alpha)
        .add(&s.x2.axpy(-g2, &grad2).scale(1.0 - alpha));
    let (prox_w, f3_prox_w) = p.f3.prox_with_value(gamma, &w)?;
    let moreau = f3_prox_w + prox_w.sub(&w).norm_sq() / (2.0 * gamma);
    let mut value = moreau - w.norm_sq() / (2.0 * gamma);
    for (f, x, g, gi) in [(&p.f1, &s.x1, &grad1, g1), (&p.f2, &s.x2, &grad2, g2)] {
        value += f.value(x) - x.dot(g) + x.norm_sq() / (2.0 * gi);
    }
    Ok(value)
}

/// `f3(x3) + sum_i [ f_i(x_i) + <mu_i, x_i - x3> + (beta_i/2) |x_i - x3|^2 ]`
#[allow(clippy::too_many_arguments)]
pub fn lagrangian_value(
    p: &CompositeProblem,
    beta1: f64,
    beta2: f64,
    x1: &RealVector,
    x2: &RealVector,
    x3: &RealVector,
    mu1: &RealVector,
    mu2: &RealVector,
) -> f64 {
    let mut value = p.f3.value(x3);
    for (f, x, mu, beta) in [(&p.f1, x1, mu1, beta1), (&p.f2, x2, mu2, beta2)] {
        let d = x.sub(x3);
        value += f.value(x) + mu.dot(&d) + 0.5 * beta * d.norm_sq();
    }
    value
}

/// Multipliers `mu1 = (x1 - z1)/g` and `mu2 = (alpha (x2 - x1) - z2)/g` under
/// which the Lagrangian with `beta_i = 1/g_i` reproduces the envelope.
pub fn lagrangian_multipliers(params: &RelaxationParams, s: &SplitState) -> (RealVector, RealVector) {
    let inv = 1.0 / params.gamma();
    let mu1 = s.x1.sub(&s.z1).scale(inv);
    let mu2 = s.x2.sub(&s.x1).scale(params.alpha()).sub(&s.z2).scale(inv);
    (mu1, mu2)
}

/// Two-sided bounds on the envelope at the shadow points of `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    /// `min{phi(x1) + (L2 + 1/g2)/2 |x1-x2|^2, phi(x2) + (L1 + 1/g1)/2 |x1-x2|^2}`
    pub upper: f64,
    /// `phi(x3) + (alpha - g L1)/(2g) |x3-x1|^2 + ((1-alpha) - g L2)/(2g) |x3-x2|^2`
    pub lower: f64,
}

pub fn sandwich_bounds(
    p: &CompositeProblem,
    params: &RelaxationParams,
    s: &SplitState,
) -> Result<Sandwich> {
    require_alpha_below_one(params)?;
    let (gamma, alpha) = (params.gamma(), params.alpha());
    let (l1, l2) = (p.l1(), p.l2());
    let phi = |x: &RealVector| p.f1.value(x) + p.f2.value(x) + p.f3.value(x);
    let d12 = s.x1.dist(&s.x2).powi(2);
    let upper = (phi(&s.x1) + 0.5 * (l2 + 1.0 / params.gamma2()) * d12)
        .min(phi(&s.x2) + 0.5 * (l1 + 1.0 / params.gamma1()) * d12);
    let phi3 = p.f1.value(&s.x3) + p.f2.value(&s.x3) + s.f3_x3;
    let lower = phi3
        + (alpha - gamma * l1) / (2.0 * gamma) * s.x3.dist(&s.x1).powi(2)
        + ((1.0 - alpha) - gamma * l2) / (2.0 * gamma) * s.x3.dist(&s.x2).powi(2);
    Ok(Sandwich { upper, lower })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{ZeroProx, ZeroSmooth};
    use crate::vector::Shape;
    use std::sync::Arc;

    fn zero_problem(d: usize) -> CompositeProblem {
        CompositeProblem::new(
            Arc::new(ZeroSmooth::new(1.0)),
            Arc::new(ZeroSmooth::new(1.0)),
            Arc::new(ZeroProx),
            Shape::Flat(d),
        )
        .unwrap()
    }

    #[test]
    fn zero_terms_at_origin() {
        let p = zero_problem(3);
        let params = RelaxationParams::new(0.1, 1.0, 0.7).unwrap();
        let z = RealVector::zeros(Shape::Flat(3));
        let (v, x3) = ryu_envelope(&p, &params, &z, &z).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(x3, z);
    }

    #[test]
    fn zero_terms_two_point_quadratic() {
        // f1 = f2 = f3 = 0: x1 = z1, x2 = z2/a + z1, and the envelope is
        // min_y |y-x1|^2 a/(2g) + |y-x2|^2 (1-a)/(2g) = a(1-a)|x1-x2|^2/(2g)
        let p = zero_problem(2);
        let (g, a) = (0.05, 0.7);
        let params = RelaxationParams::new(g, 1.0, a).unwrap();
        let z1 = RealVector::flat(vec![1.0, -3.0]).unwrap();
        let z2 = RealVector::flat(vec![0.4, 2.0]).unwrap();
        let x1 = z1.clone();
        let x2 = z2.scale(1.0 / a).add(&z1);
        let ystar = x1.scale(a).add(&x2.scale(1.0 - a));
        let expected = a * (1.0 - a) * x1.dist(&x2).powi(2) / (2.0 * g);
        let (v, x3) = ryu_envelope(&p, &params, &z1, &z2).unwrap();
        assert!((v - expected).abs() <= 1e-12 * expected);
        assert!(x3.dist(&ystar) < 1e-12);
        let m = envelope_moreau_form(&p, &params, &z1, &z2).unwrap();
        assert!((m - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn alpha_one_is_rejected() {
        let p = zero_problem(2);
        let params = RelaxationParams::new(0.1, 1.0, 1.0).unwrap();
        let z = RealVector::zeros(Shape::Flat(2));
        assert!(matches!(
            ryu_envelope(&p, &params, &z, &z),
            Err(Error::EnvelopeUndefined)
        ));
    }

    #[test]
    fn stepsize_threshold_is_enforced() {
        let p = zero_problem(2);
        let params = RelaxationParams::new(0.5, 1.0, 0.9).unwrap();
        let z = RealVector::zeros(Shape::Flat(2));
        assert!(matches!(ryu_envelope(&p, &params, &z, &z), Err(Error::Input(_))));
    }

    #[test]
    fn lagrangian_trivial_cases() {
        use crate::prox::{DiagonalQuadratic, L1Norm};
        let p = CompositeProblem::new(
            Arc::new(DiagonalQuadratic::isotropic(2, 1.0)),
            Arc::new(DiagonalQuadratic::isotropic(2, 3.0)),
            Arc::new(L1Norm { weight: 0.5 }),
            Shape::Flat(2),
        )
        .unwrap();
        let x = RealVector::flat(vec![1.0, -2.0]).unwrap();
        let mu = RealVector::flat(vec![7.0, 9.0]).unwrap();
        let l = lagrangian_value(&p, 3.0, 4.0, &x, &x, &x, &mu, &mu);
        assert!((l - p.objective(&x).unwrap()).abs() < 1e-14);

        let y = RealVector::flat(vec![0.0, 1.0]).unwrap();
        let w = RealVector::flat(vec![2.0, 2.0]).unwrap();
        let z = RealVector::zeros(Shape::Flat(2));
        let l = lagrangian_value(&p, 0.0, 0.0, &x, &y, &w, &z, &z);
        let plain = p.f1.value(&x) + p.f2.value(&y) + p.f3.value(&w);
        assert!((l - plain).abs() < 1e-14);
    }
}
