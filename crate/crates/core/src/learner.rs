//! Composite online learners built from per-feature FreeGrad copies.
//!
//! Every learner follows the same two-step round: [`OnlineLearner::predict`]
//! returns `x_t`, then [`OnlineLearner::update`] consumes `g_t`.

use serde::{Deserialize, Serialize};

use crate::dictionaries::{ActiveFeature, Dictionary, FeatureValue, HaarDictionary};
use crate::error::{Error, Result};
use crate::olo::{check_lipschitz, FreeGrad};
use crate::signal::{dot, norm};

pub trait OnlineLearner {
    fn dim(&self) -> usize;

    /// Prediction for the current round. Calling it twice in one round
    /// returns the same vector.
    fn predict(&mut self) -> Result<Vec<f64>>;

    /// Consumes the gradient at the last prediction and advances the round.
    fn update(&mut self, gradient: &[f64]) -> Result<()>;
}

impl<L: OnlineLearner + ?Sized> OnlineLearner for Box<L> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn predict(&mut self) -> Result<Vec<f64>> {
        (**self).predict()
    }
    fn update(&mut self, gradient: &[f64]) -> Result<()> {
        (**self).update(gradient)
    }
}

impl OnlineLearner for FreeGrad {
    fn dim(&self) -> usize {
        FreeGrad::dim(self)
    }
    fn predict(&mut self) -> Result<Vec<f64>> {
        Ok(FreeGrad::predict(self))
    }
    fn update(&mut self, gradient: &[f64]) -> Result<()> {
        FreeGrad::update(self, gradient)
    }
}

/// Always predicts zero; the empty dictionary.
#[derive(Debug, Clone, Copy)]
pub struct ZeroLearner {
    dim: usize,
}

impl ZeroLearner {
    pub fn new(dim: usize) -> Self {
        ZeroLearner { dim }
    }
}

impl OnlineLearner for ZeroLearner {
    fn dim(&self) -> usize {
        self.dim
    }
    fn predict(&mut self) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.dim])
    }
    fn update(&mut self, gradient: &[f64]) -> Result<()> {
        if gradient.len() != self.dim {
            return Err(Error::shape(self.dim, gradient.len()));
        }
        Ok(())
    }
}

/// One dictionary column paired with a static learner.
///
/// Scalar features drive a `d`-dimensional learner with surrogate gradient
/// `h * g` and contribution `h * x_hat`. Vector features drive a
/// one-dimensional learner with surrogate `<g, h>` and contribution
/// `x_hat * h`. Rounds with a zero feature leave the learner untouched and
/// contribute zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLearner {
    inner: FreeGrad,
    vector_feature: bool,
    output_dim: usize,
}

impl FeatureLearner {
    /// Learner for scalar features (inner dimension `dim`).
    pub fn scalar(dim: usize, lipschitz: f64, epsilon: f64) -> Result<Self> {
        Ok(FeatureLearner {
            inner: FreeGrad::new(dim, lipschitz, epsilon)?,
            vector_feature: false,
            output_dim: dim,
        })
    }

    /// Learner for `dim`-dimensional vector features (inner dimension 1).
    pub fn vector(dim: usize, lipschitz: f64, epsilon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(FeatureLearner {
            inner: FreeGrad::new(1, lipschitz, epsilon)?,
            vector_feature: true,
            output_dim: dim,
        })
    }

    fn for_value(value: &FeatureValue, dim: usize, lipschitz: f64, epsilon: f64) -> Result<Self> {
        match value {
            FeatureValue::Scalar(_) => FeatureLearner::scalar(dim, lipschitz, epsilon),
            FeatureValue::Vector(_) => FeatureLearner::vector(dim, lipschitz, epsilon),
        }
    }

    pub fn inner(&self) -> &FreeGrad {
        &self.inner
    }

    fn check_feature(&self, h: &FeatureValue) -> Result<()> {
        match (h, self.vector_feature) {
            (FeatureValue::Scalar(_), false) => {}
            (FeatureValue::Vector(v), true) if v.len() == self.output_dim => {}
            (FeatureValue::Vector(v), true) => return Err(Error::shape(self.output_dim, v.len())),
            _ => return Err(Error::invalid("feature kind changed between rounds")),
        }
        let n = h.norm();
        if n.is_nan() || n > 1.0 + 1e-12 {
            return Err(Error::invalid(format!("feature norm {n} exceeds 1")));
        }
        Ok(())
    }

    /// Contribution `w_t` for the feature value `h`.
    pub fn predict(&self, h: &FeatureValue) -> Result<Vec<f64>> {
        self.check_feature(h)?;
        if h.is_zero() {
            return Ok(vec![0.0; self.output_dim]);
        }
        let x_hat = self.inner.predict();
        Ok(match h {
            FeatureValue::Scalar(s) => x_hat.iter().map(|x| s * x).collect(),
            FeatureValue::Vector(v) => v.iter().map(|hi| x_hat[0] * hi).collect(),
        })
    }

    /// Surrogate gradient fed to the inner learner.
    pub fn surrogate(&self, h: &FeatureValue, gradient: &[f64]) -> Vec<f64> {
        match h {
            FeatureValue::Scalar(s) => gradient.iter().map(|g| s * g).collect(),
            FeatureValue::Vector(v) => vec![dot(gradient, v)],
        }
    }

    pub fn update(&mut self, h: &FeatureValue, gradient: &[f64]) -> Result<()> {
        self.check_feature(h)?;
        if gradient.len() != self.output_dim {
            return Err(Error::shape(self.output_dim, gradient.len()));
        }
        if h.is_zero() {
            return Ok(());
        }
        let surrogate = self.surrogate(h, gradient);
        self.inner.update(&surrogate)
    }

    /// One full round: contribution first, then the update with `gradient`.
    pub fn step(&mut self, h: &FeatureValue, gradient: &[f64]) -> Result<Vec<f64>> {
        let w = self.predict(h)?;
        self.update(h, gradient)?;
        Ok(w)
    }
}

/// Sparse coding over a general dictionary: one [`FeatureLearner`] per
/// column with budget `eps / N`, prediction equal to the sum of active
/// contributions. Learners are allocated on first activation.
#[derive(Debug, Clone)]
pub struct SparseCoder<D> {
    dictionary: D,
    dim: usize,
    lipschitz: f64,
    epsilon: f64,
    learners: Vec<Option<FeatureLearner>>,
    round: usize,
    active: Vec<ActiveFeature>,
    prediction: Option<Vec<f64>>,
    last_active_count: usize,
}

impl<D: Dictionary> SparseCoder<D> {
    pub fn new(dictionary: D, dim: usize, lipschitz: f64, epsilon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        // validates lipschitz and epsilon
        FreeGrad::new(1, lipschitz, epsilon)?;
        let n = dictionary.len();
        Ok(SparseCoder {
            dictionary,
            dim,
            lipschitz,
            epsilon,
            learners: vec![None; n],
            round: 0,
            active: Vec::new(),
            prediction: None,
            last_active_count: 0,
        })
    }

    pub fn dictionary(&self) -> &D {
        &self.dictionary
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Rounds completed so far.
    pub fn rounds(&self) -> usize {
        self.round
    }

    /// Confidence budget of each feature learner.
    pub fn feature_epsilon(&self) -> f64 {
        self.epsilon / self.learners.len().max(1) as f64
    }

    pub fn learner(&self, column: usize) -> Option<&FeatureLearner> {
        self.learners.get(column).and_then(Option::as_ref)
    }

    /// Number of features with a nonzero value in the most recent predicted
    /// round.
    pub fn last_active_count(&self) -> usize {
        self.last_active_count
    }

    /// Final variance counter of every column's learner, `G^2` for columns
    /// never activated.
    pub fn feature_variances(&self) -> Vec<f64> {
        self.learners
            .iter()
            .map(|l| {
                l.as_ref()
                    .map_or(self.lipschitz * self.lipschitz, |l| l.inner.variance())
            })
            .collect()
    }

    fn prepare_round(&mut self) -> Result<()> {
        let t = self.round + 1;
        if let Some(h) = self.dictionary.horizon() {
            if t > h {
                return Err(Error::invalid(format!("dictionary horizon {h} exhausted")));
            }
        }
        self.active.clear();
        self.dictionary.active_features(t, &mut self.active)?;
        let budget = self.feature_epsilon();
        let mut x = vec![0.0; self.dim];
        let mut count = 0;
        for f in &self.active {
            if f.column >= self.learners.len() {
                return Err(Error::invalid(format!("column {} out of range", f.column)));
            }
            if f.value.is_zero() {
                continue;
            }
            count += 1;
            let slot = &mut self.learners[f.column];
            if slot.is_none() {
                *slot = Some(FeatureLearner::for_value(&f.value, self.dim, self.lipschitz, budget)?);
            }
            let w = slot.as_ref().expect("allocated above").predict(&f.value)?;
            for (xi, wi) in x.iter_mut().zip(&w) {
                *xi += wi;
            }
        }
        self.last_active_count = count;
        self.prediction = Some(x);
        Ok(())
    }
}

impl<D: Dictionary> OnlineLearner for SparseCoder<D> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&mut self) -> Result<Vec<f64>> {
        if self.prediction.is_none() {
            self.prepare_round()?;
        }
        Ok(self.prediction.clone().expect("prepared"))
    }

    fn update(&mut self, gradient: &[f64]) -> Result<()> {
        if self.prediction.is_none() {
            return Err(Error::Protocol("update called before predict".into()));
        }
        if gradient.len() != self.dim {
            return Err(Error::shape(self.dim, gradient.len()));
        }
        check_lipschitz(norm(gradient), self.lipschitz)?;
        for f in &self.active {
            if f.value.is_zero() {
                continue;
            }
            if let Some(learner) = self.learners[f.column].as_mut() {
                learner.update(&f.value, gradient)?;
            }
        }
        self.prediction = None;
        self.round += 1;
        Ok(())
    }
}

/// Fixed-horizon Haar OLR over `T = 2^levels` rounds.
pub fn haar_olr(levels: u32, dim: usize, lipschitz: f64, epsilon: f64) -> Result<SparseCoder<HaarDictionary>> {
    SparseCoder::new(HaarDictionary::new(levels)?, dim, lipschitz, epsilon)
}

/// Haar OLR restarted on blocks of length `2, 4, 8, ...`, each block with a
/// fresh learner over `Haar_m` and confidence `epsilon` (1 by default).
#[derive(Debug, Clone)]
pub struct AnytimeHaar {
    dim: usize,
    lipschitz: f64,
    epsilon: f64,
    block_index: u32,
    rounds_in_block: usize,
    inner: SparseCoder<HaarDictionary>,
}

impl AnytimeHaar {
    pub fn new(dim: usize, lipschitz: f64) -> Result<Self> {
        AnytimeHaar::with_epsilon(dim, lipschitz, 1.0)
    }

    pub fn with_epsilon(dim: usize, lipschitz: f64, epsilon: f64) -> Result<Self> {
        Ok(AnytimeHaar {
            dim,
            lipschitz,
            epsilon,
            block_index: 1,
            rounds_in_block: 0,
            inner: haar_olr(1, dim, lipschitz, epsilon)?,
        })
    }

    /// Current block `m`; the block lasts `2^m` rounds.
    pub fn block_index(&self) -> u32 {
        self.block_index
    }

    pub fn rounds_in_block(&self) -> usize {
        self.rounds_in_block
    }

    pub fn inner(&self) -> &SparseCoder<HaarDictionary> {
        &self.inner
    }

    pub fn last_active_count(&self) -> usize {
        self.inner.last_active_count()
    }
}

impl OnlineLearner for AnytimeHaar {
    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&mut self) -> Result<Vec<f64>> {
        if self.rounds_in_block == 1usize << self.block_index {
            let next = self.block_index + 1;
            self.inner = haar_olr(next, self.dim, self.lipschitz, self.epsilon)?;
            self.block_index = next;
            self.rounds_in_block = 0;
        }
        self.inner.predict()
    }

    fn update(&mut self, gradient: &[f64]) -> Result<()> {
        self.inner.update(gradient)?;
        self.rounds_in_block += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionaries::{identity_dictionary, IdentityDictionary, MatrixDictionary};

    #[test]
    fn zero_feature_never_touches_learner() {
        let mut fl = FeatureLearner::scalar(2, 1.0, 1.0).unwrap();
        let before = fl.clone();
        for _ in 0..10 {
            let w = fl.step(&FeatureValue::Scalar(0.0), &[0.5, -0.5]).unwrap();
            assert_eq!(w, vec![0.0, 0.0]);
        }
        assert_eq!(fl, before);
    }

    #[test]
    fn all_one_feature_reduces_to_freegrad() {
        let mut fl = FeatureLearner::scalar(1, 1.0, 0.5).unwrap();
        let mut fg = FreeGrad::new(1, 1.0, 0.5).unwrap();
        for k in 0..50 {
            let g = [((k * 7) % 5) as f64 / 4.0 - 0.5];
            let w = fl.step(&FeatureValue::Scalar(1.0), &g).unwrap();
            assert_eq!(w, fg.predict());
            fg.update(&g).unwrap();
        }
    }

    #[test]
    fn first_contribution_is_zero() {
        let fl = FeatureLearner::vector(3, 1.0, 1.0).unwrap();
        assert_eq!(
            fl.predict(&FeatureValue::Vector(vec![0.6, 0.0, 0.8])).unwrap(),
            vec![0.0; 3]
        );
        let fl = FeatureLearner::scalar(3, 1.0, 1.0).unwrap();
        assert_eq!(fl.predict(&FeatureValue::Scalar(-1.0)).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn feature_norm_violation() {
        let fl = FeatureLearner::scalar(1, 1.0, 1.0).unwrap();
        assert!(matches!(
            fl.predict(&FeatureValue::Scalar(1.5)),
            Err(Error::InvalidParameter(_))
        ));
        let fl = FeatureLearner::vector(2, 1.0, 1.0).unwrap();
        assert!(fl.predict(&FeatureValue::Vector(vec![1.0, 1.0])).is_err());
        assert!(fl.predict(&FeatureValue::Scalar(1.0)).is_err());
    }

    #[test]
    fn zero_gradients_keep_predictions_zero() {
        let mut coder = haar_olr(3, 2, 1.0, 1.0).unwrap();
        for _ in 0..8 {
            assert_eq!(coder.predict().unwrap(), vec![0.0, 0.0]);
            coder.update(&[0.0, 0.0]).unwrap();
        }
        assert!(coder.predict().is_err(), "horizon exhausted");
    }

    #[test]
    fn single_gradient_mutates_only_active_learners() {
        let mut coder = haar_olr(2, 1, 1.0, 1.0).unwrap();
        coder.predict().unwrap();
        coder.update(&[1.0]).unwrap();
        let mut touched: Vec<usize> = (0..4)
            .filter(|c| coder.learner(*c).is_some_and(|l| l.inner().rounds_seen() > 0))
            .collect();
        touched.sort();
        // round 1 activates h*, h^(2,1), h^(1,1): columns 0, 1, 2
        assert_eq!(touched, vec![0, 1, 2]);
        for _ in 0..3 {
            coder.predict().unwrap();
            coder.update(&[0.0]).unwrap();
        }
        assert_eq!(coder.learner(3).unwrap().inner().grad_sum(), &[0.0]);
    }

    #[test]
    fn lipschitz_violation_leaves_state_unchanged() {
        let mut coder = haar_olr(2, 1, 1.0, 1.0).unwrap();
        coder.predict().unwrap();
        coder.update(&[0.5]).unwrap();
        coder.predict().unwrap();
        let before: Vec<_> = (0..4).map(|c| coder.learner(c).cloned()).collect();
        assert!(matches!(coder.update(&[2.0]), Err(Error::LipschitzViolation { .. })));
        let after: Vec<_> = (0..4).map(|c| coder.learner(c).cloned()).collect();
        assert_eq!(before, after);
        assert_eq!(coder.rounds(), 1);
    }

    #[test]
    fn update_before_predict_is_protocol_error() {
        let mut coder = haar_olr(2, 1, 1.0, 1.0).unwrap();
        assert!(matches!(coder.update(&[0.0]), Err(Error::Protocol(_))));
    }

    #[test]
    fn identity_dictionary_is_coordinatewise_freegrad() {
        let d = 3;
        let mut coder = SparseCoder::new(IdentityDictionary::new(d).unwrap(), d, 1.0, 1.0).unwrap();
        let mut singles: Vec<FreeGrad> = (0..d).map(|_| FreeGrad::new(1, 1.0, 1.0 / d as f64).unwrap()).collect();
        for k in 0..64 {
            let g = [
                if k % 3 == 0 { 0.5 } else { -0.5 },
                0.3,
                if k % 7 < 3 { -0.4 } else { 0.2 },
            ];
            let x = coder.predict().unwrap();
            for i in 0..d {
                assert_eq!(x[i], singles[i].predict()[0]);
                singles[i].update(&[g[i]]).unwrap();
            }
            coder.update(&g).unwrap();
        }
        assert_eq!(identity_dictionary(d).len(), coder.last_active_count());
    }

    #[test]
    fn anytime_block_boundaries() {
        let mut a = AnytimeHaar::new(1, 1.0).unwrap();
        let mut boundaries = Vec::new();
        let mut last_block = a.block_index();
        for t in 1..=62usize {
            let x = a.predict().unwrap();
            if a.block_index() != last_block {
                boundaries.push(t - 1);
                last_block = a.block_index();
            }
            if a.rounds_in_block() == 0 {
                assert_eq!(x, vec![0.0], "fresh block predicts zero");
            }
            assert_eq!(a.last_active_count(), a.block_index() as usize + 1);
            a.update(&[if t % 2 == 0 { 1.0 } else { -0.3 }]).unwrap();
        }
        assert_eq!(boundaries, vec![2, 6, 14, 30]);
    }

    #[test]
    fn anytime_resets_state() {
        let run = |prefix: f64| {
            let mut a = AnytimeHaar::new(1, 1.0).unwrap();
            let mut out = Vec::new();
            for t in 1..=14 {
                let x = a.predict().unwrap();
                if t >= 7 {
                    out.push(x[0]);
                }
                let g = if t <= 6 { prefix } else { 0.7 };
                a.update(&[g]).unwrap();
            }
            out
        };
        assert_eq!(run(1.0), run(-0.25));
    }

    #[test]
    fn matrix_dictionary_with_vector_blocks() {
        // Two orthonormal columns in R^{2*2}.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let cols = vec![vec![s, 0.0, 0.0, s], vec![0.0, s, s, 0.0]];
        let dict = MatrixDictionary::from_columns(2, &cols).unwrap();
        let mut coder = SparseCoder::new(dict, 2, 1.0, 1.0).unwrap();
        coder.predict().unwrap();
        coder.update(&[1.0, 0.0]).unwrap();
        let x = coder.predict().unwrap();
        assert_eq!(x.len(), 2);
        // column 0 saw <g,h> = s, column 1 saw 0 → only column 0 moves
        assert!(x[0] != 0.0 || x[1] != 0.0);
    }
}
