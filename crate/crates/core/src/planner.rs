//! Admissible stepsizes for the envelope descent bound, the epsilon
//! optimization that maximizes them, and the adaptive stepsize controller.

use serde::Serialize;

use crate::error::{input, Error, Result};

/// Lower bound on `alpha`: `(2 lambda - 3 + sqrt(9 - 4 lambda)) / 2`, defined
/// for `lambda` in the open interval `(0, 2)`.
pub fn alpha_lower_bound(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 2.0) {
        return input(format!("lambda must lie in (0, 2), got {lambda}"));
    }
    Ok((2.0 * lambda - 3.0 + (9.0 - 4.0 * lambda).sqrt()) / 2.0)
}

/// The four stepsize caps of the descent bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaBounds {
    pub gbar0: f64,
    pub gbar1: f64,
    pub gbar2: f64,
    pub gbar3: f64,
}

impl GammaBounds {
    /// `min{gbar1, gbar2, gbar3}`, the quantity the epsilons maximize.
    pub fn eps_objective(&self) -> f64 {
        self.gbar1.min(self.gbar2).min(self.gbar3)
    }
}

pub fn gamma_bounds(l1: f64, l2: f64, lambda: f64, alpha: f64, eps1: f64, eps2: f64) -> GammaBounds {
    GammaBounds {
        gbar0: lambda / (2.0 * l1),
        gbar1: lambda / (2.0 * l2) - alpha / (2.0 * eps2),
        gbar2: alpha * (2.0 - lambda - (1.0 - alpha) * eps1)
            / (alpha * eps2 + 2.0 * (1.0 - alpha) * l1),
        gbar3: (1.0 - alpha) * (eps1 * (2.0 * alpha - lambda) - alpha) / (2.0 * alpha * l2 * eps1),
    }
}

/// Open interval `I1 = (alpha/(2 alpha - lambda), (2 - lambda)/(1 - alpha))`.
pub fn eps1_interval(lambda: f64, alpha: f64) -> (f64, f64) {
    (alpha / (2.0 * alpha - lambda), (2.0 - lambda) / (1.0 - alpha))
}

/// Left end of `I2 = (alpha L2 / lambda, inf)`.
pub fn eps2_lower(l2: f64, lambda: f64, alpha: f64) -> f64 {
    alpha * l2 / lambda
}

fn validate(l1: f64, l2: f64, lambda: f64, alpha: f64) -> Result<f64> {
    if !(l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite()) {
        return input(format!("Lipschitz moduli must be positive, got L1={l1}, L2={l2}"));
    }
    let alpha_bar = alpha_lower_bound(lambda)?;
    if !(alpha > alpha_bar && alpha < 1.0) {
        return input(format!("alpha must lie in ({alpha_bar}, 1), got {alpha}"));
    }
    Ok(alpha_bar)
}

/// Roots of `gbar1(eps2) = gbar2(eps1, eps2)` inside `I2`, i.e. of
/// `2 a alpha e^2 + (2 a B - alpha^2 - 2 A) e - alpha B = 0` with
/// `a = lambda/(2 L2)`, `A = alpha (2 - lambda - (1-alpha) eps1)`, `B = 2 (1-alpha) L1`.
fn crossing_roots(l1: f64, l2: f64, lambda: f64, alpha: f64, eps1: f64) -> Vec<f64> {
    let a = lambda / (2.0 * l2);
    let big_a = alpha * (2.0 - lambda - (1.0 - alpha) * eps1);
    let big_b = 2.0 * (1.0 - alpha) * l1;
    let qa = 2.0 * a * alpha;
    let qb = 2.0 * a * big_b - alpha * alpha - 2.0 * big_a;
    let qc = -alpha * big_b;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // cancellation-free pair
    let q = -0.5 * (qb + qb.signum() * sq);
    let mut roots = Vec::with_capacity(2);
    if q != 0.0 {
        roots.push(q / qa);
        roots.push(qc / q);
    } else {
        roots.push(0.0);
    }
    let lower = eps2_lower(l2, lambda, alpha);
    roots.retain(|r| r.is_finite() && *r > lower);
    roots
}

/// `eps2*(eps1)`: the crossing root in `I2`; if several qualify, the one with
/// the larger `min{gbar1, gbar2, gbar3}`.
pub fn eps2_star(l1: f64, l2: f64, lambda: f64, alpha: f64, eps1: f64) -> Option<f64> {
    crossing_roots(l1, l2, lambda, alpha, eps1)
        .into_iter()
        .map(|e2| (e2, gamma_bounds(l1, l2, lambda, alpha, eps1, e2).eps_objective()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(e2, _)| e2)
}

const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;
const ENDPOINT_INSET: f64 = 1e-6;

/// Chooses `(eps1, eps2)` maximizing `min{gbar1, gbar2, gbar3}`: `eps2`
/// balances `gbar1 = gbar2` for each `eps1`, and `eps1` balances the result
/// against `gbar3` by bisection over `I1`. Without a sign change the better
/// inset endpoint of `I1` is used.
pub fn optimize_epsilons(l1: f64, l2: f64, lambda: f64, alpha: f64) -> Result<(f64, f64)> {
    validate(l1, l2, lambda, alpha)?;
    let (lo, hi) = eps1_interval(lambda, alpha);
    let width = hi - lo;
    let (a, b) = (lo + ENDPOINT_INSET * width, hi - ENDPOINT_INSET * width);
    let infeasible = || Error::Infeasible { lambda, alpha };
    let gap = |e1: f64| -> Option<(f64, f64)> {
        let e2 = eps2_star(l1, l2, lambda, alpha, e1)?;
        let g = gamma_bounds(l1, l2, lambda, alpha, e1, e2);
        Some((g.gbar1 - g.gbar3, e2))
    };
    let (ga, ea) = gap(a).ok_or_else(infeasible)?;
    let (gb, eb) = gap(b).ok_or_else(infeasible)?;
    if ga.signum() == gb.signum() || ga == 0.0 || gb == 0.0 {
        if ga == 0.0 {
            return Ok((a, ea));
        }
        if gb == 0.0 {
            return Ok((b, eb));
        }
        let va = gamma_bounds(l1, l2, lambda, alpha, a, ea).eps_objective();
        let vb = gamma_bounds(l1, l2, lambda, alpha, b, eb).eps_objective();
        return Ok(if va >= vb { (a, ea) } else { (b, eb) });
    }
    let (mut left, mut right, mut g_left) = (a, b, ga);
    for _ in 0..BISECTION_MAX_ITER {
        if right - left <= BISECTION_TOL * right.abs() {
            break;
        }
        let mid = 0.5 * (left + right);
        let (gm, _) = gap(mid).ok_or_else(infeasible)?;
        if gm == 0.0 {
            left = mid;
            right = mid;
            break;
        }
        if gm.signum() == g_left.signum() {
            left = mid;
            g_left = gm;
        } else {
            right = mid;
        }
    }
    let e1 = 0.5 * (left + right);
    let (_, e2) = gap(e1).ok_or_else(infeasible)?;
    Ok((e1, e2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepsizePlan {
    pub l1: f64,
    pub l2: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub alpha_bar: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub gbar0: f64,
    pub gbar1: f64,
    pub gbar2: f64,
    pub gbar3: f64,
    /// Right end of the admissible interval.
    pub gamma_upper: f64,
    pub gamma_ryu: f64,
    /// `min{alpha/L1, (1-alpha)/L2}`
    pub thm2_cap: f64,
    pub gamma_in_thm2_cap: bool,
}

/// Safety factor applied to the smallest cap.
pub const GAMMA_RYU_FACTOR: f64 = 0.99;

impl StepsizePlan {
    pub fn bounds(&self) -> GammaBounds {
        GammaBounds {
            gbar0: self.gbar0,
            gbar1: self.gbar1,
            gbar2: self.gbar2,
            gbar3: self.gbar3,
        }
    }

    /// Membership in `(0, min{g0, g1}] & (0, min{g2, g3, 1/(L1+L2)})`.
    pub fn admits(&self, gamma: f64) -> bool {
        gamma > 0.0
            && gamma <= self.gbar0.min(self.gbar1)
            && gamma < self.gbar2.min(self.gbar3).min(1.0 / (self.l1 + self.l2))
    }

    pub fn to_text(&self) -> String {
        let rows: [(&str, String); 15] = [
            ("L1", self.l1.to_string()),
            ("L2", self.l2.to_string()),
            ("lambda", self.lambda.to_string()),
            ("alpha", self.alpha.to_string()),
            ("alpha_bar", format!("{:.12}", self.alpha_bar)),
            ("eps1", format!("{:.12}", self.eps1)),
            ("eps2", format!("{:.12}", self.eps2)),
            ("gbar0", format!("{:.12e}", self.gbar0)),
            ("gbar1", format!("{:.12e}", self.gbar1)),
            ("gbar2", format!("{:.12e}", self.gbar2)),
            ("gbar3", format!("{:.12e}", self.gbar3)),
            ("gamma_upper", format!("{:.12e}", self.gamma_upper)),
            ("gamma_ryu", format!("{:.12e}", self.gamma_ryu)),
            ("thm2_cap", format!("{:.12e}", self.thm2_cap)),
            ("gamma_in_thm2_cap", self.gamma_in_thm2_cap.to_string()),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter()
            .map(|(k, v)| format!("{k:<width$}  {v}\n"))
            .collect()
    }
}

pub fn plan(l1: f64, l2: f64, lambda: f64, alpha: f64) -> Result<StepsizePlan> {
    let alpha_bar = validate(l1, l2, lambda, alpha)?;
    let (eps1, eps2) = optimize_epsilons(l1, l2, lambda, alpha)?;
    let g = gamma_bounds(l1, l2, lambda, alpha, eps1, eps2);
    let smooth_cap = 1.0 / (l1 + l2);
    let gamma_upper = g.gbar0.min(g.gbar1).min(g.gbar2.min(g.gbar3).min(smooth_cap));
    let gamma_ryu = GAMMA_RYU_FACTOR * g.gbar0.min(g.gbar1).min(g.gbar2).min(g.gbar3).min(smooth_cap);
    let thm2_cap = (alpha / l1).min((1.0 - alpha) / l2);
    Ok(StepsizePlan {
        l1,
        l2,
        lambda,
        alpha,
        alpha_bar,
        eps1,
        eps2,
        gbar0: g.gbar0,
        gbar1: g.gbar1,
        gbar2: g.gbar2,
        gbar3: g.gbar3,
        gamma_upper,
        gamma_ryu,
        thm2_cap,
        gamma_in_thm2_cap: gamma_ryu <= thm2_cap,
    })
}

/// Adaptive stepsize: start large, halve whenever the shadow points move or
/// grow too fast, never dropping below `0.99 * gamma_ryu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveController {
    gamma: f64,
    gamma_ryu: f64,
    pub c0: f64,
    pub c1: f64,
    pub shrink: f64,
}

impl AdaptiveController {
    pub const DEFAULT_C0: f64 = 1e3;
    pub const DEFAULT_C1: f64 = 1e10;
    pub const DEFAULT_SHRINK: f64 = 0.5;

    pub fn new(gamma0: f64, gamma_ryu: f64) -> Result<Self> {
        if !(gamma_ryu > 0.0) {
            return input(format!("gamma_ryu must be positive, got {gamma_ryu}"));
        }
        let floor = GAMMA_RYU_FACTOR * gamma_ryu;
        if !(gamma0 >= floor && gamma0.is_finite()) {
            return input(format!("initial gamma {gamma0} is below the floor {floor}"));
        }
        Ok(Self {
            gamma: gamma0,
            gamma_ryu,
            c0: Self::DEFAULT_C0,
            c1: Self::DEFAULT_C1,
            shrink: Self::DEFAULT_SHRINK,
        })
    }

    pub fn with_thresholds(mut self, c0: f64, c1: f64, shrink: f64) -> Result<Self> {
        if !(c0 > 0.0 && c1 > 0.0 && shrink > 0.0 && shrink < 1.0) {
            return input("controller needs c0, c1 > 0 and shrink in (0, 1)");
        }
        self.c0 = c0;
        self.c1 = c1;
        self.shrink = shrink;
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_ryu(&self) -> f64 {
        self.gamma_ryu
    }

    pub fn floor(&self) -> f64 {
        GAMMA_RYU_FACTOR * self.gamma_ryu
    }

    /// Applies the reduction test at iteration `k >= 1` and returns the
    /// stepsize in force afterwards.
    pub fn update(&mut self, k: usize, dx1: f64, dx2: f64, x1_norm: f64, x2_norm: f64) -> f64 {
        let k = k.max(1) as f64;
        let moving = dx1.min(dx2) > self.c0 / k;
        let growing = x1_norm.min(x2_norm) > self.c1;
        if self.gamma > self.gamma_ryu && (moving || growing) {
            self.gamma = (self.gamma * self.shrink).max(self.floor());
        }
        self.gamma
    }
}

pub fn adaptive_update(
    ctrl: &mut AdaptiveController,
    k: usize,
    dx1: f64,
    dx2: f64,
    x1_norm: f64,
    x2_norm: f64,
) -> f64 {
    ctrl.update(k, dx1, dx2, x1_norm, x2_norm)
}
