//! Scalar penalties, their proxes, and a brute-force 1-D minimizer used as an oracle.

/// Minimax-concave penalty `|t| - t^2/(2 tau)` for `|t| <= tau`, `tau/2` beyond.
pub fn mcp_penalty(t: f64, tau: f64) -> f64 {
    let a = t.abs();
    if a <= tau {
        a - a * a / (2.0 * tau)
    } else {
        0.5 * tau
    }
}

pub fn soft_threshold(v: f64, kappa: f64) -> f64 {
    v.signum() * (v.abs() - kappa).max(0.0)
}

/// Minimizer of `gamma*w*mcp(t; tau) + (t - v)^2 / 2`.
///
/// Below the concavity threshold (`gamma*w < tau`) the objective is strongly
/// convex and the answer is the firm threshold. Otherwise the global minimizer
/// is picked among the stationary candidates; ties go to the candidate of
/// smallest magnitude.
pub fn prox_scalar_mcp(w: f64, tau: f64, gamma: f64, v: f64) -> f64 {
    let kappa = gamma * w;
    if kappa == 0.0 {
        return v;
    }
    let a = v.abs();
    let magnitude = if kappa < tau {
        if a <= kappa {
            0.0
        } else if a <= tau {
            (a - kappa) / (1.0 - kappa / tau)
        } else {
            a
        }
    } else {
        let objective = |t: f64| kappa * mcp_penalty(t, tau) + 0.5 * (t - a) * (t - a);
        // increasing magnitude order so that strict improvement implements the tie-break
        let mut candidates = [0.0, tau, a.max(tau)];
        candidates.sort_by(f64::total_cmp);
        let mut best = candidates[0];
        let mut best_val = objective(best);
        for &c in &candidates[1..] {
            let val = objective(c);
            if val < best_val {
                best = c;
                best_val = val;
            }
        }
        best
    };
    if v < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Grid minimization of `objective` over `[lo, hi]` with `steps` cells,
/// followed by golden-section refinement around the best grid point down to
/// a bracket width of `1e-10`.
///
/// Panics unless `lo < hi` and `steps >= 1000`.
pub fn brute_force_prox_1d(objective: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    assert!(lo < hi, "empty search interval [{lo}, {hi}]");
    assert!(steps >= 1000, "grid needs at least 1000 cells, got {steps}");
    let h = (hi - lo) / steps as f64;
    let mut best_i = 0;
    let mut best_val = f64::INFINITY;
    for i in 0..=steps {
        let val = objective(lo + h * i as f64);
        if val < best_val {
            best_val = val;
            best_i = i;
        }
    }
    let center = lo + h * best_i as f64;
    let (mut a, mut b) = ((center - h).max(lo), (center + h).min(hi));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > 1e-10 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = objective(d);
        }
    }
    let refined = 0.5 * (a + b);
    // the refinement never returns something worse than the grid point
    if objective(refined) <= best_val {
        refined
    } else {
        center
    }
}

/// Default search window for grid oracles on a prox objective with weight `kappa`.
pub fn oracle_bounds(v: f64, kappa: f64) -> (f64, f64) {
    (v - 5.0 * kappa - 1.0, v + 5.0 * kappa + 1.0)
}
