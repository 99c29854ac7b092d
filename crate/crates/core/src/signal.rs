//! Length-`T` sequences of `d`-dimensional vectors.
//!
//! Comparators, gradients, predictions and time series all share this
//! representation. Storage is row-major: round `t` (0-based) occupies
//! `values[t * dim..(t + 1) * dim]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    dim: usize,
    values: Vec<f64>,
}

impl Signal {
    pub fn zeros(horizon: usize, dim: usize) -> Self {
        Signal {
            dim,
            values: vec![0.0; horizon * dim],
        }
    }

    /// Builds a signal from flat row-major storage.
    pub fn from_flat(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("signal dimension must be positive"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::shape(format!("a multiple of {dim} values"), values.len()));
        }
        Ok(Signal { dim, values })
    }

    /// One-dimensional signal from a scalar series.
    pub fn from_scalars(values: impl Into<Vec<f64>>) -> Self {
        Signal {
            dim: 1,
            values: values.into(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::invalid("cannot infer dimension from zero rows"))?;
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::shape(dim, row.len()));
            }
            values.extend_from_slice(row);
        }
        Signal::from_flat(dim, values)
    }

    pub fn horizon(&self) -> usize {
        self.values.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    /// Coordinate sequence `i` (all rounds, one coordinate).
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::shape(self.dim, row.len()));
        }
        self.values.extend_from_slice(row);
        Ok(())
    }

    /// Element-wise `self - other`.
    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        self.check_same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Signal { dim: self.dim, values })
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.check_same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Signal { dim: self.dim, values })
    }

    pub(crate) fn check_same_shape(&self, other: &Signal) -> Result<()> {
        if self.dim != other.dim || self.values.len() != other.values.len() {
            return Err(Error::shape(
                format!("{}x{}", self.horizon(), self.dim),
                format!("{}x{}", other.horizon(), other.dim),
            ));
        }
        Ok(())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
