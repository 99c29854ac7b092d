//! Environments, the game loop, regret accounting, comparator generators and
//! the forecaster fine-tuning reduction.

use std::io::BufRead;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::OnlineLearner;
use crate::olo::check_lipschitz;
use crate::signal::{distance, dot, norm, Signal};

/// A convex per-round loss revealed by the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConvexLoss {
    /// `<g, x>`
    Linear { gradient: Vec<f64> },
    /// `scale * |x - target|_2`; the absolute loss when `d = 1`.
    Distance { target: Vec<f64>, scale: f64 },
}

impl ConvexLoss {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ConvexLoss::Linear { gradient } => dot(gradient, x),
            ConvexLoss::Distance { target, scale } => scale * distance(x, target),
        }
    }

    /// A subgradient at `x`. At the kink of the distance loss this is the
    /// zero vector.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexLoss::Linear { gradient } => gradient.clone(),
            ConvexLoss::Distance { target, scale } => {
                let r = distance(x, target);
                if r == 0.0 {
                    vec![0.0; x.len()]
                } else {
                    x.iter().zip(target).map(|(a, b)| scale * (a - b) / r).collect()
                }
            }
        }
    }
}

pub trait Environment {
    fn dim(&self) -> usize;

    fn lipschitz(&self) -> f64;

    /// Loss for round `t` (1-based); may depend on the prediction.
    fn loss_at(&mut self, t: usize, prediction: &[f64]) -> Result<ConvexLoss>;
}

/// Absolute (distance) loss against a known target series.
#[derive(Debug, Clone)]
pub struct TrackingEnvironment {
    targets: Signal,
    scale: f64,
}

impl TrackingEnvironment {
    pub fn new(targets: Signal) -> Self {
        TrackingEnvironment { targets, scale: 1.0 }
    }

    pub fn with_scale(targets: Signal, scale: f64) -> Self {
        TrackingEnvironment { targets, scale }
    }

    pub fn targets(&self) -> &Signal {
        &self.targets
    }
}

impl Environment for TrackingEnvironment {
    fn dim(&self) -> usize {
        self.targets.dim()
    }

    fn lipschitz(&self) -> f64 {
        self.scale
    }

    fn loss_at(&mut self, t: usize, _prediction: &[f64]) -> Result<ConvexLoss> {
        if t == 0 || t > self.targets.horizon() {
            return Err(Error::invalid(format!("no target for round {t}")));
        }
        Ok(ConvexLoss::Distance {
            target: self.targets.row(t - 1).to_vec(),
            scale: self.scale,
        })
    }
}

/// Oblivious linear losses with a fixed gradient sequence.
#[derive(Debug, Clone)]
pub struct LinearEnvironment {
    gradients: Signal,
    lipschitz: f64,
}

impl LinearEnvironment {
    pub fn new(gradients: Signal, lipschitz: f64) -> Self {
        LinearEnvironment { gradients, lipschitz }
    }

    pub fn zero(horizon: usize, dim: usize) -> Self {
        LinearEnvironment::new(Signal::zeros(horizon, dim), 1.0)
    }
}

impl Environment for LinearEnvironment {
    fn dim(&self) -> usize {
        self.gradients.dim()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn loss_at(&mut self, t: usize, _prediction: &[f64]) -> Result<ConvexLoss> {
        if t == 0 || t > self.gradients.horizon() {
            return Err(Error::invalid(format!("no gradient for round {t}")));
        }
        Ok(ConvexLoss::Linear {
            gradient: self.gradients.row(t - 1).to_vec(),
        })
    }
}

/// Adaptive one-dimensional adversary: `g_t = G * sign(x_t)`, and `-G` when
/// `x_t = 0`.
#[derive(Debug, Clone, Copy)]
pub struct SignAdversary {
    lipschitz: f64,
}

impl SignAdversary {
    pub fn new(lipschitz: f64) -> Self {
        SignAdversary { lipschitz }
    }
}

impl Environment for SignAdversary {
    fn dim(&self) -> usize {
        1
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn loss_at(&mut self, _t: usize, prediction: &[f64]) -> Result<ConvexLoss> {
        let g = if prediction[0] > 0.0 {
            self.lipschitz
        } else {
            -self.lipschitz
        };
        Ok(ConvexLoss::Linear { gradient: vec![g] })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTrace {
    pub predictions: Signal,
    pub gradients: Signal,
    pub losses: Vec<ConvexLoss>,
    pub player_losses: Vec<f64>,
}

impl GameTrace {
    fn new(dim: usize) -> Self {
        GameTrace {
            predictions: Signal::zeros(0, dim),
            gradients: Signal::zeros(0, dim),
            losses: Vec::new(),
            player_losses: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.player_losses.len()
    }

    pub fn total_loss(&self) -> f64 {
        self.player_losses.iter().sum()
    }

    /// Prefix-by-prefix `(loss regret, linearized regret)` against a
    /// comparator sequence.
    pub fn cumulative_regret(&self, comparator: &Signal) -> Result<Vec<Regret>> {
        self.check_comparator(comparator)?;
        let mut acc = Regret::default();
        let mut out = Vec::with_capacity(self.horizon());
        for t in 0..self.horizon() {
            let u = comparator.row(t);
            acc.loss += self.player_losses[t] - self.losses[t].value(u);
            let g = self.gradients.row(t);
            acc.linearized += dot(g, self.predictions.row(t)) - dot(g, u);
            out.push(acc);
        }
        Ok(out)
    }

    fn check_comparator(&self, comparator: &Signal) -> Result<()> {
        if comparator.horizon() != self.horizon() || comparator.dim() != self.predictions.dim() {
            return Err(Error::shape(
                format!("{}x{}", self.horizon(), self.predictions.dim()),
                format!("{}x{}", comparator.horizon(), comparator.dim()),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Regret {
    /// `sum l_t(x_t) - sum l_t(u_t)`
    pub loss: f64,
    /// `sum <g_t, x_t - u_t>`
    pub linearized: f64,
}

/// Plays `horizon` rounds; the learner sees exactly one gradient per round.
pub fn run_game<E, L>(env: &mut E, learner: &mut L, horizon: usize) -> Result<GameTrace>
where
    E: Environment + ?Sized,
    L: OnlineLearner + ?Sized,
{
    let dim = env.dim();
    if learner.dim() != dim {
        return Err(Error::shape(dim, learner.dim()));
    }
    let mut trace = GameTrace::new(dim);
    for t in 1..=horizon {
        let x = learner.predict()?;
        let loss = env.loss_at(t, &x)?;
        let g = loss.subgradient(&x);
        check_lipschitz(norm(&g), env.lipschitz())?;
        learner.update(&g)?;
        trace.player_losses.push(loss.value(&x));
        trace.predictions.push_row(&x)?;
        trace.gradients.push_row(&g)?;
        trace.losses.push(loss);
    }
    Ok(trace)
}

/// Total dynamic regret against `comparator`.
pub fn dynamic_regret(trace: &GameTrace, comparator: &Signal) -> Result<Regret> {
    Ok(trace.cumulative_regret(comparator)?.last().copied().unwrap_or_default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparatorKind {
    /// Ones, except `k` consecutive entries equal to `sqrt(T)`.
    Outlier,
    /// `1 + a_t / sqrt(T)` with `a_t` in `{+1, -1}` switching sign `k` times.
    Oscillation,
}

pub fn example_comparator(kind: ComparatorKind, horizon: usize, k: usize) -> Result<Signal> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    let root = (horizon as f64).sqrt();
    match kind {
        ComparatorKind::Outlier => {
            if (k as f64) > root {
                return Err(Error::invalid(format!("outlier width {k} exceeds sqrt(T) = {root}")));
            }
            let mut u = vec![1.0; horizon];
            let start = (horizon - k) / 2;
            for v in &mut u[start..start + k] {
                *v = root;
            }
            Ok(Signal::from_scalars(u))
        }
        ComparatorKind::Oscillation => {
            if k >= horizon {
                return Err(Error::invalid(format!("{k} switches impossible in {horizon} rounds")));
            }
            // k + 1 segments; the first (T mod (k+1)) get one extra round
            let segments = k + 1;
            let (base, extra) = (horizon / segments, horizon % segments);
            let mut u = Vec::with_capacity(horizon);
            let mut sign = 1.0;
            for s in 0..segments {
                let len = base + usize::from(s < extra);
                u.extend(std::iter::repeat_n(1.0 + sign / root, len));
                sign = -sign;
            }
            Ok(Signal::from_scalars(u))
        }
    }
}

/// `z_t = beta_t z_{t-1} + zeta_t` with `z_0 = 1`, `beta_t = -1` w.p. `p`
/// and `zeta_t ~ U(-q, q)`.
///
/// Draw order per step is fixed: one uniform for `beta_t`, then one for
/// `zeta_t`, both from a ChaCha8 stream seeded with `seed`.
pub fn gen_switching_series(horizon: usize, p: f64, q: f64, seed: u64) -> Result<Signal> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("switch probability {p} outside [0, 1]")));
    }
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::invalid(format!("noise half-width {q} must be nonnegative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = 1.0;
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let beta = if rng.gen::<f64>() < p { -1.0 } else { 1.0 };
        let zeta = q * (2.0 * rng.gen::<f64>() - 1.0);
        z = z * beta + zeta;
        out.push(z);
    }
    Ok(Signal::from_scalars(out))
}

/// Black-box forecaster producing `a_t` from the history `z_{1:t-1}`.
pub trait BaseForecaster {
    fn forecast(&mut self, t: usize, history: &Signal) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroForecaster {
    pub dim: usize,
}

impl BaseForecaster for ZeroForecaster {
    fn forecast(&mut self, _t: usize, _history: &Signal) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.dim])
    }
}

/// `a_t = z_{t-1}`, with `a_1 = initial`.
#[derive(Debug, Clone)]
pub struct ZeroOrderHold {
    initial: Vec<f64>,
}

impl ZeroOrderHold {
    pub fn new(initial: Vec<f64>) -> Self {
        ZeroOrderHold { initial }
    }
}

impl BaseForecaster for ZeroOrderHold {
    fn forecast(&mut self, _t: usize, history: &Signal) -> Result<Vec<f64>> {
        Ok(match history.horizon() {
            0 => self.initial.clone(),
            n => history.row(n - 1).to_vec(),
        })
    }
}

/// Replays a precomputed forecast sequence (e.g. a file column, or the
/// truth itself for a perfect forecaster).
#[derive(Debug, Clone)]
pub struct ProvidedForecast {
    values: Signal,
}

impl ProvidedForecast {
    pub fn new(values: Signal) -> Self {
        ProvidedForecast { values }
    }
}

impl BaseForecaster for ProvidedForecast {
    fn forecast(&mut self, t: usize, _history: &Signal) -> Result<Vec<f64>> {
        if t == 0 || t > self.values.horizon() {
            return Err(Error::invalid(format!("no provided forecast for round {t}")));
        }
        Ok(self.values.row(t - 1).to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineTuneTrace {
    pub game: GameTrace,
    pub base_forecasts: Signal,
    /// `z_{1:T} - a_{1:T}`, the comparator whose regret bounds the total loss.
    pub implied_comparator: Signal,
    /// Total loss of following the base forecaster alone.
    pub base_loss: f64,
}

/// Predicts `x_t = a_t + delta_t` with `delta_t` from `learner`, under the
/// loss `scale * |x - z_t|`.
pub fn fine_tune<F, L>(base: &mut F, learner: &mut L, truth: &Signal, scale: f64) -> Result<FineTuneTrace>
where
    F: BaseForecaster + ?Sized,
    L: OnlineLearner + ?Sized,
{
    let dim = truth.dim();
    if learner.dim() != dim {
        return Err(Error::shape(dim, learner.dim()));
    }
    let mut game = GameTrace::new(dim);
    let mut history = Signal::zeros(0, dim);
    let mut base_forecasts = Signal::zeros(0, dim);
    let mut implied = Signal::zeros(0, dim);
    let mut base_loss = 0.0;
    for t in 1..=truth.horizon() {
        let a = base.forecast(t, &history)?;
        if a.len() != dim {
            return Err(Error::shape(dim, a.len()));
        }
        let delta = learner.predict()?;
        let x: Vec<f64> = a.iter().zip(&delta).map(|(a, d)| a + d).collect();
        let z = truth.row(t - 1);
        let loss = ConvexLoss::Distance {
            target: z.to_vec(),
            scale,
        };
        let g = loss.subgradient(&x);
        check_lipschitz(norm(&g), scale)?;
        learner.update(&g)?;
        base_loss += loss.value(&a);
        game.player_losses.push(loss.value(&x));
        game.predictions.push_row(&x)?;
        game.gradients.push_row(&g)?;
        game.losses.push(loss);
        let err: Vec<f64> = z.iter().zip(&a).map(|(z, a)| z - a).collect();
        implied.push_row(&err)?;
        base_forecasts.push_row(&a)?;
        history.push_row(z)?;
    }
    Ok(FineTuneTrace {
        game,
        base_forecasts,
        implied_comparator: implied,
        base_loss,
    })
}

/// Reads a `timestamp,value` series. A first line whose leading token is not
/// numeric is treated as a header. Blank lines are skipped. Only the value
/// column is returned; the timestamp is opaque.
pub fn read_series<R: BufRead>(reader: R) -> Result<Signal> {
    read_series_column(reader, 1)
}

/// Like [`read_series`], returning column `column` (0-based) as the value.
pub fn read_series_column<R: BufRead>(reader: R, column: usize) -> Result<Signal> {
    let mut values = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if i == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        let field = fields.get(column).ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected at least {} columns, found {}", column + 1, fields.len()),
        })?;
        let v = field.parse::<f64>().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("invalid value {field:?}: {e}"),
        })?;
        values.push(v);
    }
    Ok(Signal::from_scalars(values))
}

pub fn read_series_file(path: &Path, column: usize) -> Result<Signal> {
    let file = std::fs::File::open(path)?;
    read_series_column(std::io::BufReader::new(file), column)
}
