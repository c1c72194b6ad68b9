//! Function-term contracts and the composite problem `f1 + f2 + f3`.

use std::fmt::Debug;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{input, Result};
use crate::vector::{RealVector, Shape};

/// A differentiable term with an `L`-Lipschitz gradient.
pub trait SmoothTerm: Send + Sync + Debug {
    fn value(&self, x: &RealVector) -> f64;

    fn gradient(&self, x: &RealVector) -> RealVector;

    /// Any valid upper bound on the gradient's Lipschitz modulus.
    fn lipschitz(&self) -> f64;

    fn is_convex(&self) -> bool {
        true
    }

    /// Closed-form `prox_{gamma f}(x)`, if the term has one. Terms returning
    /// `None` are handled by [`smooth_prox`]'s inner solver.
    fn prox(&self, _gamma: f64, _x: &RealVector) -> Option<RealVector> {
        None
    }
}

/// A proper lsc term accessed through its (possibly set-valued) prox.
pub trait ProxTerm: Send + Sync + Debug {
    /// Value in the extended reals; `+inf` outside the domain.
    fn value(&self, x: &RealVector) -> f64;

    /// One minimizer of `f(y) + |y - x|^2 / (2 gamma)`.
    fn prox(&self, gamma: f64, x: &RealVector) -> Result<RealVector>;

    /// The prox point together with `f` evaluated there. Terms whose value is
    /// a by-product of the prox (spectral penalties) override this.
    fn prox_with_value(&self, gamma: f64, x: &RealVector) -> Result<(RealVector, f64)> {
        let p = self.prox(gamma, x)?;
        let v = self.value(&p);
        Ok((p, v))
    }
}

const INNER_TOL: f64 = 1e-12;
const INNER_MAX_ITER: usize = 10_000;

/// `prox_{gamma f}(x)` for a convex smooth term. Uses the term's closed form
/// when present, otherwise fixed-step gradient descent on the strongly convex
/// subproblem with step `1 / (1/gamma + L)`.
pub fn smooth_prox(term: &dyn SmoothTerm, gamma: f64, x: &RealVector) -> RealVector {
    if let Some(p) = term.prox(gamma, x) {
        return p;
    }
    let step = 1.0 / (1.0 / gamma + term.lipschitz());
    let mut u = x.clone();
    for _ in 0..INNER_MAX_ITER {
        let g = term.gradient(&u);
        let grad = g.zip_map(&u.sub(x), |gi, di| gi + di / gamma);
        let next = u.axpy(-step, &grad);
        let moved = next.dist(&u);
        u = next;
        if moved <= INNER_TOL * (1.0 + u.norm()) {
            break;
        }
    }
    u
}

#[derive(Debug, Clone)]
pub struct CompositeProblem {
    pub f1: Arc<dyn SmoothTerm>,
    pub f2: Arc<dyn SmoothTerm>,
    pub f3: Arc<dyn ProxTerm>,
    shape: Shape,
}

impl CompositeProblem {
    pub fn new(
        f1: Arc<dyn SmoothTerm>,
        f2: Arc<dyn SmoothTerm>,
        f3: Arc<dyn ProxTerm>,
        shape: Shape,
    ) -> Result<Self> {
        for (name, t) in [("f1", &f1), ("f2", &f2)] {
            let l = t.lipschitz();
            if !(l > 0.0 && l.is_finite()) {
                return input(format!("{name}: Lipschitz modulus must be positive, got {l}"));
            }
            if !t.is_convex() {
                return input(format!("{name} must be convex"));
            }
        }
        Ok(Self { f1, f2, f3, shape })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn l1(&self) -> f64 {
        self.f1.lipschitz()
    }

    pub fn l2(&self) -> f64 {
        self.f2.lipschitz()
    }

    /// `f1(x) + f2(x) + f3(x)`; `+inf` exactly when `f3(x)` is.
    pub fn objective(&self, x: &RealVector) -> Result<f64> {
        x.ensure_shape(self.shape)?;
        let v3 = self.f3.value(x);
        if v3 == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        Ok(self.f1.value(x) + self.f2.value(x) + v3)
    }

    pub fn smooth_gradient(&self, x: &RealVector) -> RealVector {
        self.f1.gradient(x).add(&self.f2.gradient(x))
    }
}

/// Largest coordinatewise `|central difference - gradient| / (1 + |gradient|)`.
pub fn gradient_check(t: &dyn SmoothTerm, x: &RealVector, h: f64) -> f64 {
    let g = t.gradient(x);
    let mut probe = x.clone();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let xi = x.as_slice()[i];
        probe.as_mut_slice()[i] = xi + h;
        let fp = t.value(&probe);
        probe.as_mut_slice()[i] = xi - h;
        let fm = t.value(&probe);
        probe.as_mut_slice()[i] = xi;
        let fd = (fp - fm) / (2.0 * h);
        let gi = g.as_slice()[i];
        worst = worst.max((fd - gi).abs() / (1.0 + gi.abs()));
    }
    worst
}

pub(crate) fn gaussian_vector(rng: &mut impl Rng, shape: Shape, scale: f64) -> RealVector {
    let data = (0..shape.len())
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    RealVector::from_parts(data, shape)
}

/// Largest observed `|grad f(x) - grad f(y)| / |x - y|` over random pairs.
/// Pairs mix far-apart draws with nearby perturbations at several scales.
pub fn lipschitz_probe(t: &dyn SmoothTerm, shape: Shape, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for trial in 0..trials.max(1) {
        let x = gaussian_vector(&mut rng, shape, 3.0);
        let spread = 10f64.powf(rng.random_range(-3.0..1.0));
        let y = if trial % 2 == 0 {
            x.add(&gaussian_vector(&mut rng, shape, spread))
        } else {
            gaussian_vector(&mut rng, shape, 3.0)
        };
        let dx = x.dist(&y);
        if dx == 0.0 {
            continue;
        }
        let dg = t.gradient(&x).dist(&t.gradient(&y));
        worst = worst.max(dg / dx);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{DiagonalQuadratic, ZeroProx, ZeroSmooth};

    fn half_norm_sq(d: usize) -> Arc<dyn SmoothTerm> {
        Arc::new(DiagonalQuadratic::isotropic(d, 1.0))
    }

    #[test]
    fn objective_of_zero_terms_is_zero() {
        let shape = Shape::Flat(3);
        let p = CompositeProblem::new(
            Arc::new(ZeroSmooth::new(1.0)),
            Arc::new(ZeroSmooth::new(1.0)),
            Arc::new(ZeroProx),
            shape,
        )
        .unwrap();
        let x = RealVector::flat(vec![1.0, -2.0, 5.0]).unwrap();
        assert_eq!(p.objective(&x).unwrap(), 0.0);
    }

    #[test]
    fn objective_of_half_norm_sq() {
        let p = CompositeProblem::new(
            half_norm_sq(2),
            Arc::new(ZeroSmooth::new(1.0)),
            Arc::new(ZeroProx),
            Shape::Flat(2),
        )
        .unwrap();
        let x = RealVector::flat(vec![3.0, 4.0]).unwrap();
        assert_eq!(p.objective(&x).unwrap(), 12.5);
        let wrong = RealVector::flat(vec![1.0; 3]).unwrap();
        assert!(p.objective(&wrong).is_err());
    }

    #[test]
    fn objective_is_infinite_only_through_f3() {
        use crate::prox::NonnegIndicator;
        let p = CompositeProblem::new(
            half_norm_sq(2),
            half_norm_sq(2),
            Arc::new(NonnegIndicator),
            Shape::Flat(2),
        )
        .unwrap();
        let inside = RealVector::flat(vec![1.0, 0.0]).unwrap();
        let outside = RealVector::flat(vec![1.0, -1e-3]).unwrap();
        assert!(p.objective(&inside).unwrap().is_finite());
        assert_eq!(p.objective(&outside).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rejects_non_positive_lipschitz() {
        let r = CompositeProblem::new(
            Arc::new(ZeroSmooth::new(0.0)),
            half_norm_sq(2),
            Arc::new(ZeroProx),
            Shape::Flat(2),
        );
        assert!(r.is_err());
    }

    #[test]
    fn gradient_check_quadratic() {
        let t = DiagonalQuadratic::isotropic(5, 1.0);
        let x = RealVector::flat(vec![0.3, -1.0, 2.0, 7.5, -0.01]).unwrap();
        assert!(gradient_check(&t, &x, 1e-6) <= 1e-8);
    }

    #[test]
    fn lipschitz_probe_identity_gradient_is_exactly_one() {
        let t = DiagonalQuadratic::isotropic(4, 1.0);
        let r = lipschitz_probe(&t, Shape::Flat(4), 50, 7);
        assert!((r - 1.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn inner_solver_matches_closed_form() {
        #[derive(Debug)]
        struct NoProx(DiagonalQuadratic);
        impl SmoothTerm for NoProx {
            fn value(&self, x: &RealVector) -> f64 {
                self.0.value(x)
            }
            fn gradient(&self, x: &RealVector) -> RealVector {
                self.0.gradient(x)
            }
            fn lipschitz(&self) -> f64 {
                self.0.lipschitz()
            }
        }
        let q = DiagonalQuadratic::new(vec![0.5, 2.0, 9.0], vec![1.0, -1.0, 0.25]).unwrap();
        let x = RealVector::flat(vec![4.0, 0.0, -3.0]).unwrap();
        let exact = q.prox(0.3, &x).unwrap();
        let inner = smooth_prox(&NoProx(q), 0.3, &x);
        assert!(exact.dist(&inner) < 1e-10);
    }
}
