//! Orthonormal Haar analysis and synthesis of `d`-dimensional signals.
//!
//! Coefficients use the normalized features: the all-one coefficient of a
//! signal is `sum_t u_t / sqrt(T)`, and the wavelet coefficient at `(j, l)`
//! is `2^(-j/2)` times the difference between the sums over the first and
//! second halves of the support.

use serde::{Deserialize, Serialize};

use crate::dictionaries::HaarIndex;
use crate::error::{Error, Result};
use crate::signal::{distance, norm, Signal};

/// `Some(m)` when `horizon == 2^m` with `m >= 1`.
pub fn dyadic_levels(horizon: usize) -> Option<u32> {
    (horizon >= 2 && horizon.is_power_of_two()).then(|| horizon.trailing_zeros())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformCoefficients {
    levels: u32,
    dim: usize,
    allone: Vec<f64>,
    // T - 1 wavelet coefficients, each of length dim, in dictionary column
    // order (column c stored at (c - 1) * dim).
    wavelets: Vec<f64>,
}

impl TransformCoefficients {
    pub fn zeros(levels: u32, dim: usize) -> Self {
        let horizon = 1usize << levels;
        TransformCoefficients {
            levels,
            dim,
            allone: vec![0.0; dim],
            wavelets: vec![0.0; (horizon - 1) * dim],
        }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn horizon(&self) -> usize {
        1usize << self.levels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn allone(&self) -> &[f64] {
        &self.allone
    }

    pub fn get(&self, index: HaarIndex) -> Result<&[f64]> {
        index.validate(self.levels)?;
        Ok(match index {
            HaarIndex::AllOne => &self.allone,
            HaarIndex::Wavelet { .. } => {
                let c = index.column(self.levels);
                &self.wavelets[(c - 1) * self.dim..c * self.dim]
            }
        })
    }

    pub fn get_mut(&mut self, index: HaarIndex) -> Result<&mut [f64]> {
        index.validate(self.levels)?;
        Ok(match index {
            HaarIndex::AllOne => &mut self.allone,
            HaarIndex::Wavelet { .. } => {
                let c = index.column(self.levels);
                &mut self.wavelets[(c - 1) * self.dim..c * self.dim]
            }
        })
    }

    /// All coefficients in column order (all-one first).
    pub fn iter(&self) -> impl Iterator<Item = (HaarIndex, &[f64])> + '_ {
        let levels = self.levels;
        std::iter::once((HaarIndex::AllOne, self.allone.as_slice())).chain(
            self.wavelets
                .chunks_exact(self.dim)
                .enumerate()
                .map(move |(i, w)| (HaarIndex::from_column(levels, i + 1).expect("valid column"), w)),
        )
    }

    /// Wavelet coefficients at one scale, by location ascending.
    pub fn scale(&self, scale: u32) -> Result<&[f64]> {
        if scale == 0 || scale > self.levels {
            return Err(Error::invalid(format!("scale {scale} outside [1, {}]", self.levels)));
        }
        let first = 1usize << (self.levels - scale);
        let count = first;
        Ok(&self.wavelets[(first - 1) * self.dim..(first - 1 + count) * self.dim])
    }

    /// Number of coefficients whose norm exceeds `threshold`.
    pub fn count_nonzero(&self, threshold: f64, include_allone: bool) -> usize {
        self.iter()
            .filter(|(idx, c)| (include_allone || *idx != HaarIndex::AllOne) && norm(c) > threshold)
            .count()
    }

    /// `sum ||u_hat||^2` over every coefficient.
    pub fn energy(&self) -> f64 {
        self.allone.iter().chain(&self.wavelets).map(|x| x * x).sum()
    }

    /// `sum ||u_hat^(j,l)||^2`, the energy of the centered signal.
    pub fn wavelet_energy(&self) -> f64 {
        self.wavelets.iter().map(|x| x * x).sum()
    }
}

/// Default cutoff below which a coefficient counts as zero:
/// `1e-12 * sqrt(signal energy)`.
pub fn zero_threshold(signal: &Signal) -> f64 {
    1e-12 * signal.as_flat().iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Pyramid Haar analysis, `O(d T log T)`.
pub fn haar_analyze(signal: &Signal) -> Result<TransformCoefficients> {
    let horizon = signal.horizon();
    let levels = dyadic_levels(horizon).ok_or_else(|| {
        Error::invalid(format!(
            "Haar analysis needs a power-of-two horizon >= 2, got {horizon}"
        ))
    })?;
    let dim = signal.dim();
    let mut coeffs = TransformCoefficients::zeros(levels, dim);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut approx = signal.as_flat().to_vec();
    for j in 1..=levels {
        let pairs = approx.len() / (2 * dim);
        let mut next = vec![0.0; pairs * dim];
        let first_col = 1usize << (levels - j);
        for l in 0..pairs {
            let a = &approx[2 * l * dim..(2 * l + 1) * dim];
            let b = &approx[(2 * l + 1) * dim..(2 * l + 2) * dim];
            let c = first_col + l;
            let detail = &mut coeffs.wavelets[(c - 1) * dim..c * dim];
            for i in 0..dim {
                next[l * dim + i] = (a[i] + b[i]) * scale;
                detail[i] = (a[i] - b[i]) * scale;
            }
        }
        approx = next;
    }
    coeffs.allone = approx;
    Ok(coeffs)
}

/// Inverse of [`haar_analyze`].
pub fn haar_synthesize(coeffs: &TransformCoefficients) -> Signal {
    let dim = coeffs.dim;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut approx = coeffs.allone.clone();
    for j in (1..=coeffs.levels).rev() {
        let pairs = approx.len() / dim;
        let first_col = 1usize << (coeffs.levels - j);
        let mut next = vec![0.0; 2 * pairs * dim];
        for l in 0..pairs {
            let c = first_col + l;
            let detail = &coeffs.wavelets[(c - 1) * dim..c * dim];
            for i in 0..dim {
                let a = approx[l * dim + i];
                next[2 * l * dim + i] = (a + detail[i]) * scale;
                next[(2 * l + 1) * dim + i] = (a - detail[i]) * scale;
            }
        }
        approx = next;
    }
    Signal::from_flat(dim, approx).expect("dimension is positive")
}

/// Reconstruction `z^(j)` using only the scale-`j` coefficients.
pub fn detail_sequence(coeffs: &TransformCoefficients, scale: u32) -> Result<Signal> {
    let dim = coeffs.dim;
    let level = coeffs.scale(scale)?;
    let mut out = Signal::zeros(coeffs.horizon(), dim);
    let width = 1usize << scale;
    let amp = 2f64.powf(-(scale as f64) / 2.0);
    for (l, w) in level.chunks_exact(dim).enumerate() {
        for k in 0..width {
            let sign = if k < width / 2 { amp } else { -amp };
            let row = out.row_mut(l * width + k);
            for i in 0..dim {
                row[i] = sign * w[i];
            }
        }
    }
    Ok(out)
}

/// Detail `z^(j,l)` along a single feature, `z^*` for the all-one index.
pub fn feature_detail(coeffs: &TransformCoefficients, index: HaarIndex) -> Result<Signal> {
    let w = coeffs.get(index)?.to_vec();
    let dim = coeffs.dim;
    let horizon = coeffs.horizon();
    let mut out = Signal::zeros(horizon, dim);
    match index {
        HaarIndex::AllOne => {
            let amp = 1.0 / (horizon as f64).sqrt();
            for t in 0..horizon {
                for (r, wi) in out.row_mut(t).iter_mut().zip(&w) {
                    *r = amp * wi;
                }
            }
        }
        HaarIndex::Wavelet { scale, .. } => {
            let (lo, hi) = index.support(coeffs.levels);
            let amp = 2f64.powf(-(scale as f64) / 2.0);
            let mid = lo + (hi - lo).div_ceil(2);
            for t in lo..=hi {
                let sign = if t < mid { amp } else { -amp };
                for (r, wi) in out.row_mut(t - 1).iter_mut().zip(&w) {
                    *r = sign * wi;
                }
            }
        }
    }
    Ok(out)
}

/// `(P^(j,l), S_bar^(j,l))`: within-support path length and norm sum of
/// the single-feature detail.
pub fn location_regularity(coeffs: &TransformCoefficients, index: HaarIndex) -> Result<(f64, f64)> {
    if index == HaarIndex::AllOne {
        return Err(Error::invalid("regularity is defined for wavelet features only"));
    }
    let z = feature_detail(coeffs, index)?;
    let (lo, hi) = index.support(coeffs.levels);
    let path: f64 = (lo..hi).map(|t| distance(z.row(t), z.row(t - 1))).sum();
    let sbar: f64 = (lo..=hi).map(|t| norm(z.row(t - 1))).sum();
    Ok((path, sbar))
}

/// `(P_j, S_bar_j)` for the scale-`j` detail. Path length is only counted
/// inside each support `I^(j,l)`.
pub fn scale_regularity(coeffs: &TransformCoefficients, scale: u32) -> Result<(f64, f64)> {
    let z = detail_sequence(coeffs, scale)?;
    let width = 1usize << scale;
    let mut path = 0.0;
    for t in 0..z.horizon().saturating_sub(1) {
        // t and t+1 in the same support iff t+1 is not a multiple of the width
        if (t + 1) % width != 0 {
            path += distance(z.row(t + 1), z.row(t));
        }
    }
    let sbar = z.rows().map(norm).sum();
    Ok((path, sbar))
}

/// Replaces entries `start..start + length` (0-based) by their mean.
pub fn local_average(signal: &Signal, start: usize, length: usize) -> Result<Signal> {
    if length == 0 || start + length > signal.horizon() {
        return Err(Error::invalid(format!(
            "averaging window [{start}, {}) outside horizon {}",
            start + length,
            signal.horizon()
        )));
    }
    let dim = signal.dim();
    let mut mean = vec![0.0; dim];
    for t in start..start + length {
        for (m, v) in mean.iter_mut().zip(signal.row(t)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= length as f64;
    }
    let mut out = signal.clone();
    for t in start..start + length {
        out.row_mut(t).copy_from_slice(&mean);
    }
    Ok(out)
}
