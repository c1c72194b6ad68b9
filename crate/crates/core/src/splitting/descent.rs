//! Sufficient-descent constants and the per-step algebraic identities.

use serde::Serialize;

use super::{RelaxationParams, SplitState};
use crate::problem::CompositeProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    /// Descent modulus `C4 / C5`.
    pub m: f64,
}

/// Constants of the sufficient-descent bound for the given moduli, parameters
/// and Young's-inequality weights `eps1`, `eps2`. Signs are reported as
/// computed; nothing is enforced.
pub fn descent_constants(
    l1: f64,
    l2: f64,
    params: &RelaxationParams,
    eps1: f64,
    eps2: f64,
) -> DescentConstants {
    let (g, lam, a) = (params.gamma(), params.lambda(), params.alpha());
    let c0 = 1.0 / (2.0 * l1) - g / lam;
    let c1 = 1.0 / (2.0 * l2) - g / lam - a / (2.0 * lam * eps2);
    let c2 = a / (g * lam) - a / (2.0 * g) + (a - 1.0) * l1 / lam
        - (1.0 - a) * a * eps1 / (2.0 * g * lam)
        - a * eps2 / (2.0 * lam);
    let c3 = a * (1.0 - a) / (g * lam)
        - (1.0 - a) / (2.0 * g)
        - a * l2 / lam
        - (1.0 - a) * a / (2.0 * g * lam * eps1);
    let c4 = c2.min(c3);
    let c5 = (2.0 * a * a + (1.0 + l1 * g).powi(2)).max(2.0 * (a + l2 * g).powi(2));
    DescentConstants {
        c0,
        c1,
        c2,
        c3,
        c4,
        c5,
        m: c4 / c5,
    }
}

/// Both sides of the two squared-distance identities linking consecutive
/// iterates:
///
/// ```text
/// |x3 - x1|^2 - |x3 - x1+|^2 = (2/l - 1)|dx1|^2 + (2g/l)<dx1, dg1>
/// |x3 - x2|^2 - |x3 - x2+|^2 = (2a/l - 1)|dx2|^2 + (2g/l)<dx2, dg2> - (2a/l)<dx2, dx1>
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs_x1: f64,
    pub rhs_x1: f64,
    pub lhs_x2: f64,
    pub rhs_x2: f64,
}

impl IdentityCheck {
    /// Worst `|lhs - rhs| / (1 + |lhs|)` of the two identities.
    pub fn relative_residual(&self) -> f64 {
        let r1 = (self.lhs_x1 - self.rhs_x1).abs() / (1.0 + self.lhs_x1.abs());
        let r2 = (self.lhs_x2 - self.rhs_x2).abs() / (1.0 + self.lhs_x2.abs());
        r1.max(r2)
    }
}

/// Evaluates [`IdentityCheck`] for `after = ryu_step(before)`.
pub fn identity_check(
    p: &CompositeProblem,
    params: &RelaxationParams,
    before: &SplitState,
    after: &SplitState,
) -> IdentityCheck {
    let (g, lam, a) = (params.gamma(), params.lambda(), params.alpha());
    let x3 = &before.x3;
    let dx1 = after.x1.sub(&before.x1);
    let dx2 = after.x2.sub(&before.x2);
    let dg1 = p.f1.gradient(&after.x1).sub(&p.f1.gradient(&before.x1));
    let dg2 = p.f2.gradient(&after.x2).sub(&p.f2.gradient(&before.x2));

    let lhs_x1 = x3.sub(&before.x1).norm_sq() - x3.sub(&after.x1).norm_sq();
    let rhs_x1 = (2.0 / lam - 1.0) * dx1.norm_sq() + (2.0 * g / lam) * dx1.dot(&dg1);
    let lhs_x2 = x3.sub(&before.x2).norm_sq() - x3.sub(&after.x2).norm_sq();
    let rhs_x2 = (2.0 * a / lam - 1.0) * dx2.norm_sq() + (2.0 * g / lam) * dx2.dot(&dg2)
        - (2.0 * a / lam) * dx2.dot(&dx1);
    IdentityCheck {
        lhs_x1,
        rhs_x1,
        lhs_x2,
        rhs_x2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{DiagonalQuadratic, L1Norm};
    use crate::splitting::ryu_step;
    use crate::vector::{RealVector, Shape};
    use std::sync::Arc;

    #[test]
    fn c0_limit_as_gamma_vanishes() {
        let params = RelaxationParams::new(1e-14, 1.0, 0.9).unwrap();
        let c = descent_constants(4.0, 1.0, &params, 2.0, 3.0);
        assert!((c.c0 - 0.125).abs() < 1e-12);
        assert_eq!(c.c4, c.c2.min(c.c3));
        assert_eq!(c.m, c.c4 / c.c5);
    }

    #[test]
    fn c5_formula() {
        let params = RelaxationParams::new(0.1, 1.0, 0.5).unwrap();
        let c = descent_constants(10.0, 1.0, &params, 2.0, 3.0);
        // max{2*0.25 + 2^2, 2*(0.6)^2}
        assert!((c.c5 - 4.5).abs() < 1e-14);
    }

    fn identities_after_one_step(lambda: f64, alpha: f64) -> IdentityCheck {
        let d = 4;
        let f1 = DiagonalQuadratic::new(vec![0.5, 2.0, 3.0, 1.0], vec![1.0, -1.0, 0.0, 2.0]).unwrap();
        let f2 = DiagonalQuadratic::new(vec![1.5, 0.2, 4.0, 0.0], vec![0.0, 3.0, -2.0, 1.0]).unwrap();
        let p = crate::problem::CompositeProblem::new(
            Arc::new(f1),
            Arc::new(f2),
            Arc::new(L1Norm { weight: 0.3 }),
            Shape::Flat(d),
        )
        .unwrap();
        let params = RelaxationParams::new(0.05, lambda, alpha).unwrap();
        let z1 = RealVector::flat(vec![0.3, -1.2, 2.0, 0.7]).unwrap();
        let z2 = RealVector::flat(vec![-0.4, 0.9, 0.0, 1.1]).unwrap();
        let s0 = crate::splitting::SplitState::initialize(&p, &params, z1, z2).unwrap();
        let s1 = ryu_step(&p, &params, &s0).unwrap();
        identity_check(&p, &params, &s0, &s1)
    }

    #[test]
    fn identities_hold_for_one_step() {
        let c = identities_after_one_step(1.0, 0.8);
        assert!(c.relative_residual() <= 1e-10, "{c:?}");
        // purely algebraic: the extreme relaxation lambda = 2 is no exception
        let c = identities_after_one_step(2.0, 0.3);
        assert!(c.relative_residual() <= 1e-10, "{c:?}");
    }
}
