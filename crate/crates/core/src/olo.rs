//! FreeGrad: a scale-free, gradient-adaptive, parameter-free learner for
//! static unconstrained online linear optimization.
//!
//! The learner keeps the running gradient sum `s` and a variance counter `v`
//! (initialized to `G^2`), and predicts
//!
//! ```text
//! x = -eps * s * (2v + G|s|) G^2 / (2 (v + G|s|)^2 sqrt(v)) * exp(|s|^2 / (2v + 2G|s|))
//! ```
//!
//! For vector gradients `v` accumulates squared Euclidean norms, so there is
//! a single variance counter per learner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::norm;

/// Relative slack when checking `|g| <= G`.
pub const LIPSCHITZ_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeGrad {
    grad_sum: Vec<f64>,
    variance: f64,
    lipschitz: f64,
    epsilon: f64,
    rounds_seen: u64,
}

impl FreeGrad {
    pub fn new(dim: usize, lipschitz: f64, epsilon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid(format!(
                "lipschitz must be positive and finite, got {lipschitz}"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        Ok(FreeGrad {
            grad_sum: vec![0.0; dim],
            variance: lipschitz * lipschitz,
            lipschitz,
            epsilon,
            rounds_seen: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.grad_sum.len()
    }

    pub fn grad_sum(&self) -> &[f64] {
        &self.grad_sum
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rounds_seen(&self) -> u64 {
        self.rounds_seen
    }

    /// The signed factor `c` with `prediction = c * s`.
    ///
    /// The exponential is combined with the rational part in log space and
    /// the resulting magnitude saturates at `f64::MAX`.
    pub fn prediction_factor(&self) -> f64 {
        let s = norm(&self.grad_sum);
        if s == 0.0 {
            return 0.0;
        }
        let (v, g) = (self.variance, self.lipschitz);
        let gs = g * s;
        let log_magnitude = self.epsilon.ln() + (2.0 * v + gs).ln() + 2.0 * g.ln()
            - std::f64::consts::LN_2
            - 2.0 * (v + gs).ln()
            - 0.5 * v.ln()
            + s * s / (2.0 * v + 2.0 * gs)
            + s.ln();
        // |x| = exp(log_magnitude); divide by |s| afterwards so a saturated
        // magnitude still yields a finite factor along the direction of s.
        let magnitude = saturating_exp(log_magnitude);
        -(magnitude / s)
    }

    pub fn predict(&self) -> Vec<f64> {
        let factor = self.prediction_factor();
        if factor == 0.0 {
            return vec![0.0; self.dim()];
        }
        self.grad_sum.iter().map(|si| factor * si).collect()
    }

    pub fn update(&mut self, gradient: &[f64]) -> Result<()> {
        if gradient.len() != self.dim() {
            return Err(Error::shape(self.dim(), gradient.len()));
        }
        let g_norm = norm(gradient);
        check_lipschitz(g_norm, self.lipschitz)?;
        for (s, g) in self.grad_sum.iter_mut().zip(gradient) {
            *s += g;
        }
        self.variance += g_norm * g_norm;
        self.rounds_seen += 1;
        Ok(())
    }
}

pub(crate) fn check_lipschitz(norm: f64, bound: f64) -> Result<()> {
    if !norm.is_finite() || norm > bound * (1.0 + LIPSCHITZ_TOLERANCE) {
        return Err(Error::LipschitzViolation { norm, bound });
    }
    Ok(())
}

fn saturating_exp(x: f64) -> f64 {
    if x >= f64::MAX.ln() {
        f64::MAX
    } else {
        x.exp()
    }
}

/// Static regret guarantee of FreeGrad against a fixed comparator.
///
/// `eps*G + max(2|u| sqrt(V log+(2|u|V / (eps G^2))), 4|u| G log(4|u| sqrt(V) / (eps G)))`,
/// where the second branch counts as zero when its log argument is at most one.
pub fn freegrad_regret_bound(comparator: &[f64], variance_final: f64, lipschitz: f64, epsilon: f64) -> f64 {
    freegrad_regret_bound_norm(norm(comparator), variance_final, lipschitz, epsilon)
}

/// [`freegrad_regret_bound`] expressed through the comparator norm alone.
pub fn freegrad_regret_bound_norm(comparator_norm: f64, variance_final: f64, lipschitz: f64, epsilon: f64) -> f64 {
    let (u, v, g) = (comparator_norm, variance_final, lipschitz);
    let base = epsilon * g;
    if u == 0.0 {
        return base;
    }
    let log_plus = (2.0 * u * v / (epsilon * g * g)).ln().max(0.0);
    let first = 2.0 * u * (v * log_plus).sqrt();
    let arg = 4.0 * u * v.sqrt() / (epsilon * g);
    let second = if arg > 1.0 { 4.0 * u * g * arg.ln() } else { 0.0 };
    base + first.max(second)
}
