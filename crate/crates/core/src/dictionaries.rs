//! Streaming temporal dictionaries.
//!
//! A dictionary reveals, at every round `t` (1-based), the features that are
//! nonzero at that round. Column ordering for the Haar dictionary is fixed:
//! the all-one column first, then wavelet columns by scale descending and
//! location ascending. With `T = 2^m`, wavelet `(j, l)` lands in column
//! `2^(m-j) + l - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::norm;

/// Largest `m` for which [`haar_matrix`] will materialize `2^m x 2^m` entries.
pub const MAX_MATERIALIZED_LEVELS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HaarIndex {
    AllOne,
    Wavelet { scale: u32, location: usize },
}

impl HaarIndex {
    /// Support `[2^j (l-1) + 1, 2^j l]` as 1-based inclusive rounds.
    pub fn support(&self, levels: u32) -> (usize, usize) {
        match *self {
            HaarIndex::AllOne => (1, 1usize << levels),
            HaarIndex::Wavelet { scale, location } => {
                let width = 1usize << scale;
                (width * (location - 1) + 1, width * location)
            }
        }
    }

    pub fn column(&self, levels: u32) -> usize {
        match *self {
            HaarIndex::AllOne => 0,
            HaarIndex::Wavelet { scale, location } => (1usize << (levels - scale)) + location - 1,
        }
    }

    pub fn from_column(levels: u32, column: usize) -> Result<Self> {
        let horizon = 1usize << levels;
        if column >= horizon {
            return Err(Error::invalid(format!(
                "column {column} out of range for a Haar dictionary of size {horizon}"
            )));
        }
        if column == 0 {
            return Ok(HaarIndex::AllOne);
        }
        // columns [2^k, 2^(k+1)) belong to scale m - k
        let k = usize::BITS - 1 - column.leading_zeros();
        Ok(HaarIndex::Wavelet {
            scale: levels - k,
            location: column - (1usize << k) + 1,
        })
    }

    /// Checks `1 <= j <= m` and `1 <= l <= 2^(m-j)`.
    pub fn validate(&self, levels: u32) -> Result<()> {
        if let HaarIndex::Wavelet { scale, location } = *self {
            if scale == 0 || scale > levels {
                return Err(Error::invalid(format!("scale {scale} outside [1, {levels}]")));
            }
            let count = 1usize << (levels - scale);
            if location == 0 || location > count {
                return Err(Error::invalid(format!(
                    "location {location} outside [1, {count}] at scale {scale}"
                )));
            }
        }
        Ok(())
    }
}

/// Value of one feature at one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureValue {
    /// A scalar feature shared by all coordinates; paired with a
    /// `d`-dimensional learner fed `h * g`.
    Scalar(f64),
    /// A `d`-dimensional block; paired with a one-dimensional learner fed
    /// `<g, h>`.
    Vector(Vec<f64>),
}

impl FeatureValue {
    pub fn norm(&self) -> f64 {
        match self {
            FeatureValue::Scalar(h) => h.abs(),
            FeatureValue::Vector(h) => norm(h),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FeatureValue::Scalar(h) => *h == 0.0,
            FeatureValue::Vector(h) => h.iter().all(|x| *x == 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveFeature {
    pub column: usize,
    pub value: FeatureValue,
}

/// A dictionary revealed online, one row per round.
pub trait Dictionary {
    /// Number of columns `N`.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of rounds the dictionary is defined for, if finite.
    fn horizon(&self) -> Option<usize>;

    /// Appends the round-`t` features (1-based `t`) to `out`. Columns absent
    /// from `out` are zero at round `t`.
    fn active_features(&self, t: usize, out: &mut Vec<ActiveFeature>) -> Result<()>;
}

/// Unnormalized Haar wavelet dictionary over `T = 2^levels` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarDictionary {
    levels: u32,
}

impl HaarDictionary {
    pub fn new(levels: u32) -> Result<Self> {
        if levels == 0 || levels >= usize::BITS - 1 {
            return Err(Error::invalid(format!("unsupported Haar level count {levels}")));
        }
        Ok(HaarDictionary { levels })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }
}

impl Dictionary for HaarDictionary {
    fn len(&self) -> usize {
        1usize << self.levels
    }

    fn horizon(&self) -> Option<usize> {
        Some(1usize << self.levels)
    }

    fn active_features(&self, t: usize, out: &mut Vec<ActiveFeature>) -> Result<()> {
        for (index, value) in haar_active_indices(self.levels, t)? {
            out.push(ActiveFeature {
                column: index.column(self.levels),
                value: FeatureValue::Scalar(value),
            });
        }
        Ok(())
    }
}

/// The `m + 1` nonzero Haar features at round `t` with their `+-1` values,
/// all-one first and then scales from coarse to fine.
pub fn haar_active_indices(levels: u32, t: usize) -> Result<Vec<(HaarIndex, f64)>> {
    if levels == 0 {
        return Err(Error::invalid("levels must be positive"));
    }
    let horizon = 1usize << levels;
    if t == 0 || t > horizon {
        return Err(Error::invalid(format!("round {t} outside [1, {horizon}]")));
    }
    let offset = t - 1;
    let mut active = Vec::with_capacity(levels as usize + 1);
    active.push((HaarIndex::AllOne, 1.0));
    for scale in (1..=levels).rev() {
        let location = (offset >> scale) + 1;
        // bit (scale - 1) of the offset selects the half of the support
        let value = if (offset >> (scale - 1)) & 1 == 0 { 1.0 } else { -1.0 };
        active.push((HaarIndex::Wavelet { scale, location }, value));
    }
    Ok(active)
}

/// Active features of `Haar_m` at round `t`, tagged by column.
pub fn haar_active_features(levels: u32, t: usize) -> Result<Vec<ActiveFeature>> {
    let mut out = Vec::with_capacity(levels as usize + 1);
    HaarDictionary::new(levels)?.active_features(t, &mut out)?;
    Ok(out)
}

/// Dense `T x T` unnormalized Haar matrix, rows are rounds.
pub fn haar_matrix(levels: u32) -> Result<Vec<Vec<f64>>> {
    if levels > MAX_MATERIALIZED_LEVELS {
        return Err(Error::ResourceLimit(format!(
            "refusing to materialize Haar_{levels}; at most {MAX_MATERIALIZED_LEVELS} levels"
        )));
    }
    let dict = HaarDictionary::new(levels)?;
    let horizon = dict.len();
    let mut rows = vec![vec![0.0; horizon]; horizon];
    let mut active = Vec::new();
    for (i, row) in rows.iter_mut().enumerate() {
        active.clear();
        dict.active_features(i + 1, &mut active)?;
        for f in &active {
            if let FeatureValue::Scalar(v) = f.value {
                row[f.column] = v;
            }
        }
    }
    Ok(rows)
}

/// Harmonic features `[1, cos(w t), sin(w t), ..., cos(K w t), sin(K w t)]`.
pub fn fourier_features(base_frequency: f64, max_order: usize, t: usize) -> Result<Vec<f64>> {
    if !(base_frequency > 0.0 && base_frequency.is_finite()) {
        return Err(Error::invalid(format!(
            "base frequency must be positive, got {base_frequency}"
        )));
    }
    let mut out = Vec::with_capacity(2 * max_order + 1);
    out.push(1.0);
    for k in 1..=max_order {
        let phase = k as f64 * base_frequency * t as f64;
        out.push(phase.cos());
        out.push(phase.sin());
    }
    Ok(out)
}

/// Fourier harmonic dictionary; `include_constant` prepends the all-one
/// column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierDictionary {
    base_frequency: f64,
    max_order: usize,
    include_constant: bool,
}

impl FourierDictionary {
    pub fn new(base_frequency: f64, max_order: usize, include_constant: bool) -> Result<Self> {
        if !(base_frequency > 0.0 && base_frequency.is_finite()) {
            return Err(Error::invalid(format!(
                "base frequency must be positive, got {base_frequency}"
            )));
        }
        Ok(FourierDictionary {
            base_frequency,
            max_order,
            include_constant,
        })
    }
}

impl Dictionary for FourierDictionary {
    fn len(&self) -> usize {
        2 * self.max_order + usize::from(self.include_constant)
    }

    fn horizon(&self) -> Option<usize> {
        None
    }

    fn active_features(&self, t: usize, out: &mut Vec<ActiveFeature>) -> Result<()> {
        let values = fourier_features(self.base_frequency, self.max_order, t)?;
        let skip = usize::from(!self.include_constant);
        for (column, v) in values.into_iter().skip(skip).enumerate() {
            if v != 0.0 {
                out.push(ActiveFeature {
                    column,
                    value: FeatureValue::Scalar(v),
                });
            }
        }
        Ok(())
    }
}

/// `H_t = I_d`: column `n` is the `n`-th standard basis vector every round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityDictionary {
    dim: usize,
}

impl IdentityDictionary {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(IdentityDictionary { dim })
    }
}

impl Dictionary for IdentityDictionary {
    fn len(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> Option<usize> {
        None
    }

    fn active_features(&self, t: usize, out: &mut Vec<ActiveFeature>) -> Result<()> {
        if t == 0 {
            return Err(Error::invalid("rounds are 1-based"));
        }
        out.extend(identity_dictionary(self.dim));
        Ok(())
    }
}

/// The `d` identity features (they do not depend on the round).
pub fn identity_dictionary(dim: usize) -> Vec<ActiveFeature> {
    (0..dim)
        .map(|n| {
            let mut e = vec![0.0; dim];
            e[n] = 1.0;
            ActiveFeature {
                column: n,
                value: FeatureValue::Vector(e),
            }
        })
        .collect()
}

/// Explicit `dT x N` dictionary. With `dim == 1` features are scalars;
/// otherwise each round yields `d`-dimensional blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDictionary {
    dim: usize,
    horizon: usize,
    columns: usize,
    // entry (t, i, n) at ((t * dim) + i) * columns + n
    entries: Vec<f64>,
}

impl MatrixDictionary {
    /// `columns[n]` is the flattened length-`dT` feature vector `h_{1:T,n}`.
    pub fn from_columns(dim: usize, columns: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let first = columns
            .first()
            .ok_or_else(|| Error::invalid("dictionary needs at least one column"))?;
        if first.len() % dim != 0 || first.is_empty() {
            return Err(Error::shape(format!("a positive multiple of {dim}"), first.len()));
        }
        let horizon = first.len() / dim;
        let n = columns.len();
        let mut entries = vec![0.0; horizon * dim * n];
        for (c, col) in columns.iter().enumerate() {
            if col.len() != horizon * dim {
                return Err(Error::shape(horizon * dim, col.len()));
            }
            for (r, v) in col.iter().enumerate() {
                entries[r * n + c] = *v;
            }
        }
        let dict = MatrixDictionary {
            dim,
            horizon,
            columns: n,
            entries,
        };
        dict.check_protocol()?;
        Ok(dict)
    }

    /// Per-round blocks must satisfy `|h_{t,n}| <= 1` and every column must
    /// carry at least unit energy.
    #[allow(clippy::needless_range_loop)]
    fn check_protocol(&self) -> Result<()> {
        let mut energy = vec![0.0; self.columns];
        for t in 0..self.horizon {
            for n in 0..self.columns {
                let block = self.block(t, n);
                let sq: f64 = block.iter().map(|x| x * x).sum();
                if sq.sqrt() > 1.0 + 1e-12 {
                    return Err(Error::invalid(format!(
                        "feature {n} has norm {} > 1 at round {}",
                        sq.sqrt(),
                        t + 1
                    )));
                }
                energy[n] += sq;
            }
        }
        if let Some((n, e)) = energy.iter().enumerate().find(|(_, e)| **e < 1.0 - 1e-12) {
            return Err(Error::invalid(format!("feature {n} has total energy {e} < 1")));
        }
        Ok(())
    }

    fn block(&self, t: usize, n: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.entries[(t * self.dim + i) * self.columns + n])
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Flattened column `n`.
    pub fn column(&self, n: usize) -> Vec<f64> {
        (0..self.horizon * self.dim)
            .map(|r| self.entries[r * self.columns + n])
            .collect()
    }
}

impl Dictionary for MatrixDictionary {
    fn len(&self) -> usize {
        self.columns
    }

    fn horizon(&self) -> Option<usize> {
        Some(self.horizon)
    }

    fn active_features(&self, t: usize, out: &mut Vec<ActiveFeature>) -> Result<()> {
        if t == 0 || t > self.horizon {
            return Err(Error::invalid(format!("round {t} outside [1, {}]", self.horizon)));
        }
        for n in 0..self.columns {
            let block = self.block(t - 1, n);
            if block.iter().all(|x| *x == 0.0) {
                continue;
            }
            let value = if self.dim == 1 {
                FeatureValue::Scalar(block[0])
            } else {
                FeatureValue::Vector(block)
            };
            out.push(ActiveFeature { column: n, value });
        }
        Ok(())
    }
}
