//! Comparator statistics, sparsity measures and closed-form regret bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::olo::freegrad_regret_bound_norm;
use crate::signal::{distance, norm, Signal};

/// Regularity statistics of a comparator sequence, all in Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorStats {
    pub horizon: usize,
    /// `M = max_t |u_t|`
    pub max_range: f64,
    /// `u_bar`
    pub average: Vec<f64>,
    /// `P = sum |u_{t+1} - u_t|`
    pub path_length: f64,
    /// `S = sum |u_t|`
    pub norm_sum: f64,
    /// `S_bar = sum |u_t - u_bar|`
    pub first_variability: f64,
    /// `E = sum |u_t|^2`
    pub energy: f64,
    /// `E_bar = sum |u_t - u_bar|^2`
    pub second_variability: f64,
    /// `K = #{t : u_{t+1} != u_t}`, exact comparison.
    pub switches: usize,
}

pub fn comparator_stats(signal: &Signal) -> Result<ComparatorStats> {
    let horizon = signal.horizon();
    if horizon == 0 {
        return Err(Error::invalid("statistics need at least one round"));
    }
    let dim = signal.dim();
    let mut average = vec![0.0; dim];
    for row in signal.rows() {
        for (a, v) in average.iter_mut().zip(row) {
            *a += v;
        }
    }
    for a in &mut average {
        *a /= horizon as f64;
    }

    let mut stats = ComparatorStats {
        horizon,
        max_range: 0.0,
        average,
        path_length: 0.0,
        norm_sum: 0.0,
        first_variability: 0.0,
        energy: 0.0,
        second_variability: 0.0,
        switches: 0,
    };
    let mut prev: Option<&[f64]> = None;
    for row in signal.rows() {
        let n = norm(row);
        stats.max_range = stats.max_range.max(n);
        stats.norm_sum += n;
        stats.energy += n * n;
        let c = distance(row, &stats.average);
        stats.first_variability += c;
        stats.second_variability += c * c;
        if let Some(p) = prev {
            stats.path_length += distance(row, p);
            if row != p {
                stats.switches += 1;
            }
        }
        prev = Some(row);
    }
    Ok(stats)
}

/// Squared L1/L2 ratio of component norms; 1 when every norm is zero.
pub fn sparsity_measure(component_norms: &[f64]) -> f64 {
    let l1: f64 = component_norms.iter().map(|x| x.abs()).sum();
    let l2sq: f64 = component_norms.iter().map(|x| x * x).sum();
    if l2sq == 0.0 {
        1.0
    } else {
        l1 * l1 / l2sq
    }
}

/// [`sparsity_measure`] over explicit signal components `z^(n)`.
pub fn sparsity_of_components(components: &[Signal]) -> f64 {
    let norms: Vec<f64> = components.iter().map(|z| norm(z.as_flat())).collect();
    sparsity_measure(&norms)
}

/// Per-feature inputs to [`sizen_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureBound {
    /// Magnitude of the static comparator the feature's learner faces:
    /// `|z^(n)| / |h_{1:T,n}|` for the component `z^(n)` along feature `n`.
    pub coefficient_norm: f64,
    /// Final variance counter `V_T` of the feature's learner.
    pub variance: f64,
}

/// Explicit dynamic regret bound of the sparse coder for one decomposition
/// of the comparator: the per-feature static bounds at budget `eps / N`
/// summed over all `N` features, plus `G * sum_t |z^(0)_t|` for the
/// reconstruction error `z^(0)`.
pub fn sizen_bound(features: &[FeatureBound], residual: &Signal, lipschitz: f64, epsilon: f64) -> f64 {
    let residual_term: f64 = lipschitz * residual.rows().map(norm).sum::<f64>();
    if features.is_empty() {
        return epsilon * lipschitz + residual_term;
    }
    let budget = epsilon / features.len() as f64;
    let coding: f64 = features
        .iter()
        .map(|f| freegrad_regret_bound_norm(f.coefficient_norm, f.variance, lipschitz, budget))
        .sum();
    coding + residual_term
}

/// `(sum n^-a)^2 / sum n^-2a` for `n = 1..=T`.
pub fn power_law_sparsity(alpha: f64, horizon: usize) -> f64 {
    let (mut l1, mut l2) = (0.0, 0.0);
    for n in 1..=horizon {
        let c = (n as f64).powf(-alpha);
        l1 += c;
        l2 += c * c;
    }
    if l2 == 0.0 {
        1.0
    } else {
        l1 * l1 / l2
    }
}
