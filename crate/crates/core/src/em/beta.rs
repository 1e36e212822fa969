//! Edge-removal probability update.
//!
//! With the other parameters fixed, the bound depends on `beta` through
//! `C1 ln(beta) + C3 ln(1 - beta) - beta C2`, whose stationary point solves
//! `C1 - beta C2 - beta / (1 - beta) C3 = 0`. The left side is strictly
//! decreasing on `(0, 1)`, positive at `0+` when `C1 > 0`, and tends to
//! `-inf` at `1-` when `C3 > 0`, so bisection always brackets the root.

/// Sufficient statistics for the `beta` root equation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BetaConstants {
    /// New plus removed edges over transition steps.
    pub c1: f64,
    /// Total appearance rate `sum (lambda + eta A_rec)` over transition terms.
    pub c2: f64,
    /// Persisting edges.
    pub c3: f64,
}

impl BetaConstants {
    pub fn residual(&self, beta: f64) -> f64 {
        self.c1 - beta * self.c2 - beta / (1.0 - beta) * self.c3
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSolution {
    pub beta: f64,
    /// No transition events: `beta` was set to the floor.
    pub floored: bool,
}

/// Value used when the data carry no information that pushes `beta` above 0.
pub const BETA_FLOOR: f64 = f64::EPSILON;

const MAX_BISECTIONS: usize = 200;

pub fn solve_beta(c: BetaConstants) -> BetaSolution {
    if !(c.c1 > 0.0) {
        return BetaSolution {
            beta: BETA_FLOOR,
            floored: true,
        };
    }
    if c.c3 <= 0.0 {
        let beta = if c.c2 > 0.0 { (c.c1 / c.c2).min(1.0) } else { 1.0 };
        return BetaSolution {
            beta: beta.max(BETA_FLOOR),
            floored: false,
        };
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut mid = 0.5;
    for _ in 0..MAX_BISECTIONS {
        mid = 0.5 * (lo + hi);
        let f = c.residual(mid);
        if f.abs() < 1e-10 || hi - lo < 1e-12 {
            break;
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    BetaSolution {
        beta: mid.max(BETA_FLOOR),
        floored: false,
    }
}
