//! A one-hidden-layer network `x ↦ W2 σ(W1 x + b1) + b2` with ReLU or
//! degree-(3,2) rational activations, trained full batch with Adam or Adamax.
//!
//! Parameters are handled as one flat vector laid out as
//! `[W1 (H), b1 (H), W2 (H), b2, numerator (4), denominator (3)]`; the
//! activation coefficients are present only for rational activations.

use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{BoxDomain, DegreeSpec, RationalApprox, POLE_THRESHOLD};
use crate::data::SampleSet;
use crate::diffcorr::fit_relu_rational;
use crate::error::{Error, Result};

/// Interval on which a rational activation's denominator must stay clear of zero.
pub const ACTIVATION_WINDOW: (f64, f64) = (-10.0, 10.0);

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationKind {
    Relu,
    #[serde(rename = "rat-fixed")]
    FixedRational,
    #[serde(rename = "rat-learn")]
    LearnableRational,
}

impl ActivationKind {
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::FixedRational => "rat-fixed",
            ActivationKind::LearnableRational => "rat-learn",
        }
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Self::Relu),
            "rat-fixed" => Ok(Self::FixedRational),
            "rat-learn" => Ok(Self::LearnableRational),
            other => Err(Error::InvalidArgument(format!("unknown activation '{other}'"))),
        }
    }
}

/// `P(s) / Q(s)` with `P` cubic and `Q` quadratic, in monomial coefficients
/// ordered by ascending power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalActivation {
    pub num: [f64; 4],
    pub den: [f64; 3],
}

impl RationalActivation {
    pub fn new(num: [f64; 4], den: [f64; 3]) -> Result<Self> {
        let r = Self { num, den };
        if num.iter().chain(&den).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("activation coefficients must be finite".into()));
        }
        if let Some(root) = r.denominator_root_in(ACTIVATION_WINDOW.0, ACTIVATION_WINDOW.1) {
            return Err(Error::InvalidArgument(format!(
                "activation denominator vanishes at {root} inside [{}, {}]",
                ACTIVATION_WINDOW.0, ACTIVATION_WINDOW.1
            )));
        }
        Ok(r)
    }

    /// Converts a univariate degree-(3,2) Chebyshev-basis approximant.
    pub fn from_approx(r: &RationalApprox) -> Result<Self> {
        let spec = r.spec();
        if spec.dim() != 1 || spec.num_degree[0] > 3 || spec.den_degree[0] > 2 {
            return Err(Error::Dimension(format!(
                "activation needs a univariate rational of degree at most (3,2), got {}",
                spec.label()
            )));
        }
        let lo = r.domain().lower()[0];
        let hi = r.domain().upper()[0];
        // x̂ = αx + β maps the fit interval onto [-1, 1].
        let alpha = 2.0 / (hi - lo);
        let beta = -(hi + lo) / (hi - lo);
        let mut num = chebyshev_to_monomial(r.num_coeffs(), alpha, beta);
        let mut den = chebyshev_to_monomial(r.den_coeffs(), alpha, beta);
        num.resize(4, 0.0);
        den.resize(3, 0.0);
        let scale = den.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self::new(
            [num[0] / scale, num[1] / scale, num[2] / scale, num[3] / scale],
            [den[0] / scale, den[1] / scale, den[2] / scale],
        )
    }

    /// The best uniform degree-(3,2) approximation of ReLU on `[-1, 1]`.
    pub fn relu_fit(n_points: usize) -> Result<(Self, f64)> {
        let (r, report) = fit_relu_rational(
            &DegreeSpec::univariate(3, 2),
            &BoxDomain::interval(-1.0, 1.0)?,
            n_points,
        )?;
        Ok((Self::from_approx(&r)?, report.error))
    }

    pub fn numerator(&self, s: f64) -> f64 {
        ((self.num[3] * s + self.num[2]) * s + self.num[1]) * s + self.num[0]
    }

    pub fn denominator(&self, s: f64) -> f64 {
        (self.den[2] * s + self.den[1]) * s + self.den[0]
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        let q = self.denominator(s);
        if q.abs() < POLE_THRESHOLD {
            return Err(Error::Pole {
                point: vec![s],
                denominator: q,
            });
        }
        Ok(self.numerator(s) / q)
    }

    /// Value and derivative in `s`.
    fn value_and_slope(&self, s: f64) -> Result<(f64, f64, f64, f64)> {
        let p = self.numerator(s);
        let q = self.denominator(s);
        if q.abs() < POLE_THRESHOLD {
            return Err(Error::Pole {
                point: vec![s],
                denominator: q,
            });
        }
        let dp = (3.0 * self.num[3] * s + 2.0 * self.num[2]) * s + self.num[1];
        let dq = 2.0 * self.den[2] * s + self.den[1];
        Ok((p / q, (dp * q - p * dq) / (q * q), p, q))
    }

    /// A real root of the denominator inside `[lo, hi]`, if any.
    pub fn denominator_root_in(&self, lo: f64, hi: f64) -> Option<f64> {
        let [c, b, a] = self.den;
        let inside = |r: f64| (lo..=hi).contains(&r).then_some(r);
        if a == 0.0 {
            if b == 0.0 {
                return (c == 0.0).then_some(lo);
            }
            return inside(-c / b);
        }
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // numerically stable pair of roots
        let t = -0.5 * (b + b.signum() * sq);
        let roots = if t == 0.0 { [0.0, 0.0] } else { [t / a, c / t] };
        roots.into_iter().find_map(inside)
    }
}

/// Monomial coefficients in `x` of `Σ c_k T_k(αx + β)`.
fn chebyshev_to_monomial(cheb: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    let len = cheb.len().max(1);
    // Monomial coefficients in x̂ of T_0..T_{len-1}.
    let mut t_prev = vec![0.0; len];
    let mut t_cur = vec![0.0; len];
    let mut in_hat = vec![0.0; len];
    t_prev[0] = 1.0;
    if let Some(&c) = cheb.first() {
        in_hat[0] += c;
    }
    if len > 1 {
        t_cur[1] = 1.0;
        in_hat[1] += cheb[1];
    }
    for &c in cheb.iter().skip(2) {
        let mut next = vec![0.0; len];
        for k in 0..len - 1 {
            next[k + 1] += 2.0 * t_cur[k];
        }
        for k in 0..len {
            next[k] -= t_prev[k];
        }
        for k in 0..len {
            in_hat[k] += c * next[k];
        }
        t_prev = std::mem::replace(&mut t_cur, next);
    }
    // Substitute x̂ = αx + β.
    let mut out = vec![0.0; len];
    let mut power = vec![0.0; len];
    power[0] = 1.0;
    for &coef in &in_hat {
        for k in 0..len {
            out[k] += coef * power[k];
        }
        let mut next = vec![0.0; len];
        for k in 0..len {
            next[k] += beta * power[k];
            if k + 1 < len {
                next[k + 1] += alpha * power[k];
            }
        }
        power = next;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub rational: Option<RationalActivation>,
}

impl ActivationSpec {
    pub fn relu() -> Self {
        Self {
            kind: ActivationKind::Relu,
            rational: None,
        }
    }

    pub fn rational(kind: ActivationKind, coeffs: RationalActivation) -> Result<Self> {
        if kind == ActivationKind::Relu {
            return Err(Error::InvalidArgument("ReLU takes no rational coefficients".into()));
        }
        let checked = RationalActivation::new(coeffs.num, coeffs.den)?;
        Ok(Self {
            kind,
            rational: Some(checked),
        })
    }

    /// ReLU, or a rational activation started from the best degree-(3,2)
    /// fit of ReLU on `[-1, 1]` over `n_points` samples.
    pub fn for_kind(kind: ActivationKind, n_points: usize) -> Result<Self> {
        match kind {
            ActivationKind::Relu => Ok(Self::relu()),
            _ => Self::rational(kind, RationalActivation::relu_fit(n_points)?.0),
        }
    }

    fn apply(&self, s: f64) -> Result<f64> {
        match &self.rational {
            None => Ok(s.max(0.0)),
            Some(r) => r.eval(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub activation: ActivationSpec,
}

impl MlpParams {
    pub fn new(w1: Vec<f64>, b1: Vec<f64>, w2: Vec<f64>, b2: f64, activation: ActivationSpec) -> Result<Self> {
        let h = w1.len();
        if h == 0 || b1.len() != h || w2.len() != h {
            return Err(Error::Dimension(format!(
                "hidden layer sizes disagree: W1 {}, b1 {}, W2 {}",
                w1.len(),
                b1.len(),
                w2.len()
            )));
        }
        if w1.iter().chain(&b1).chain(&w2).chain([&b2]).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("network parameters must be finite".into()));
        }
        if activation.kind != ActivationKind::Relu && activation.rational.is_none() {
            return Err(Error::InvalidArgument("rational activation needs coefficients".into()));
        }
        Ok(Self {
            w1,
            b1,
            w2,
            b2,
            activation,
        })
    }

    /// Uniform `[−1/√fan_in, 1/√fan_in]` draws for each layer's weights and biases.
    pub fn init(hidden: usize, activation: ActivationSpec, seed: u64) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidArgument("hidden layer needs at least one unit".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |bound: f64, n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-bound..=bound)).collect() };
        let w1 = draw(1.0, hidden);
        let b1 = draw(1.0, hidden);
        let bound2 = 1.0 / (hidden as f64).sqrt();
        let w2 = draw(bound2, hidden);
        let b2 = draw(bound2, 1)[0];
        Self::new(w1, b1, w2, b2, activation)
    }

    pub fn hidden(&self) -> usize {
        self.w1.len()
    }

    pub fn num_flat(&self) -> usize {
        3 * self.hidden() + 1 + if self.activation.rational.is_some() { 7 } else { 0 }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_flat());
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        if let Some(r) = &self.activation.rational {
            v.extend(r.num);
            v.extend(r.den);
        }
        v
    }

    /// Overwrites all parameters from a flat vector. Activation coefficients
    /// are not re-validated so that training can pass through a window root
    /// and still be caught by the pole check at evaluation.
    pub fn set_flat(&mut self, v: &[f64]) {
        let h = self.hidden();
        self.w1.copy_from_slice(&v[..h]);
        self.b1.copy_from_slice(&v[h..2 * h]);
        self.w2.copy_from_slice(&v[2 * h..3 * h]);
        self.b2 = v[3 * h];
        if let Some(r) = &mut self.activation.rational {
            let o = 3 * h + 1;
            r.num.copy_from_slice(&v[o..o + 4]);
            r.den.copy_from_slice(&v[o + 4..o + 7]);
        }
    }

    /// Flat index ranges of the three training blocks: `(W1, b1)`, `(W2, b2)`
    /// and the activation coefficients.
    pub fn blocks(&self) -> [std::ops::Range<usize>; 3] {
        let h = self.hidden();
        [0..2 * h, 2 * h..3 * h + 1, 3 * h + 1..self.num_flat()]
    }
}

pub fn forward(params: &MlpParams, x: f64) -> Result<f64> {
    let mut y = params.b2;
    for h in 0..params.hidden() {
        let s = params.w1[h] * x + params.b1[h];
        y += params.w2[h] * params.activation.apply(s)?;
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mse,
    Uniform,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Uniform => "uniform",
        }
    }

    pub fn default_optimizer(self) -> OptimizerKind {
        match self {
            LossKind::Mse => OptimizerKind::Adam,
            LossKind::Uniform => OptimizerKind::Adamax,
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(Self::Mse),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::InvalidArgument(format!("unknown loss '{other}'"))),
        }
    }
}

fn residuals(params: &MlpParams, samples: &SampleSet) -> Result<Vec<f64>> {
    samples
        .xs()
        .iter()
        .zip(samples.values())
        .map(|(&x, &f)| Ok(forward(params, x)? - f))
        .collect()
}

fn reduce(res: &[f64], kind: LossKind) -> f64 {
    match kind {
        LossKind::Mse => res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64,
        LossKind::Uniform => res.iter().fold(0.0f64, |m, r| m.max(r.abs())),
    }
}

pub fn loss(params: &MlpParams, samples: &SampleSet, kind: LossKind) -> Result<f64> {
    check_univariate(samples)?;
    Ok(reduce(&residuals(params, samples)?, kind))
}

fn check_univariate(samples: &SampleSet) -> Result<()> {
    if samples.dim() != 1 {
        return Err(Error::Dimension("the network takes a single input".into()));
    }
    Ok(())
}

/// Gradient of the loss in the flat parameter layout. For the uniform loss
/// this is the gradient of `|residual|` at the first sample attaining the
/// maximum. Coefficients of a fixed rational activation get zero gradient.
pub fn backward(params: &MlpParams, samples: &SampleSet, kind: LossKind) -> Result<Vec<f64>> {
    Ok(loss_and_gradient(params, samples, kind)?.1)
}

pub fn loss_and_gradient(params: &MlpParams, samples: &SampleSet, kind: LossKind) -> Result<(f64, Vec<f64>)> {
    check_univariate(samples)?;
    let res = residuals(params, samples)?;
    let value = reduce(&res, kind);
    let xs = samples.xs();
    let mut grad = vec![0.0; params.num_flat()];
    match kind {
        LossKind::Mse => {
            let scale = 2.0 / res.len() as f64;
            for (&x, &r) in xs.iter().zip(&res) {
                accumulate(params, x, scale * r, &mut grad)?;
            }
        }
        LossKind::Uniform => {
            let mut worst = 0;
            for (i, r) in res.iter().enumerate() {
                if r.abs() > res[worst].abs() {
                    worst = i;
                }
            }
            let r = res[worst];
            let sign = if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            };
            accumulate(params, xs[worst], sign, &mut grad)?;
        }
    }
    if params.activation.kind == ActivationKind::FixedRational {
        let start = 3 * params.hidden() + 1;
        grad[start..].iter_mut().for_each(|g| *g = 0.0);
    }
    Ok((value, grad))
}

/// Adds `weight · ∂y(x)/∂θ` to `grad`.
fn accumulate(params: &MlpParams, x: f64, weight: f64, grad: &mut [f64]) -> Result<()> {
    let h_count = params.hidden();
    let rat_offset = 3 * h_count + 1;
    for h in 0..h_count {
        let s = params.w1[h] * x + params.b1[h];
        let w2 = params.w2[h];
        let (act, slope) = match &params.activation.rational {
            None => (s.max(0.0), if s > 0.0 { 1.0 } else { 0.0 }),
            Some(r) => {
                let (value, slope, p, q) = r.value_and_slope(s)?;
                let mut power = 1.0;
                for k in 0..4 {
                    grad[rat_offset + k] += weight * w2 * power / q;
                    if k < 3 {
                        grad[rat_offset + 4 + k] -= weight * w2 * p * power / (q * q);
                    }
                    power *= s;
                }
                (value, slope)
            }
        };
        let ds = weight * w2 * slope;
        grad[h] += ds * x;
        grad[h_count + h] += ds;
        grad[2 * h_count + h] += weight * act;
    }
    grad[3 * h_count] += weight;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Adamax,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(Self::Adam),
            "adamax" => Ok(Self::Adamax),
            other => Err(Error::InvalidArgument(format!("unknown optimizer '{other}'"))),
        }
    }
}

/// First and second moment estimates for one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl Moments {
    pub fn zeros(n: usize) -> Self {
        Self {
            first: vec![0.0; n],
            second: vec![0.0; n],
        }
    }
}

/// Bias-corrected Adam update at step `t ≥ 1`.
pub fn adam_step(state: &mut Moments, params: &mut [f64], grad: &[f64], lr: f64, t: u32) {
    let c1 = 1.0 - BETA1.powi(t as i32);
    let c2 = 1.0 - BETA2.powi(t as i32);
    for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut state.first).zip(&mut state.second) {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPSILON);
    }
}

/// Adamax update at step `t ≥ 1`: the second moment is an exponentially
/// weighted infinity norm.
pub fn adamax_step(state: &mut Moments, params: &mut [f64], grad: &[f64], lr: f64, t: u32) {
    let c1 = 1.0 - BETA1.powi(t as i32);
    for (((p, &g), m), u) in params.iter_mut().zip(grad).zip(&mut state.first).zip(&mut state.second) {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *u = (BETA2 * *u).max(g.abs());
        *p -= (lr / c1) * *m / (*u + EPSILON);
    }
}

fn optimizer_step(kind: OptimizerKind, state: &mut Moments, params: &mut [f64], grad: &[f64], lr: f64, t: u32) {
    match kind {
        OptimizerKind::Adam => adam_step(state, params, grad, lr, t),
        OptimizerKind::Adamax => adamax_step(state, params, grad, lr, t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Standard,
    Split,
}

impl FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "split" => Ok(Self::Split),
            other => Err(Error::InvalidArgument(format!("unknown training mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub mode: TrainMode,
    /// Split mode only: learning rates for the `(W1, b1)`, `(W2, b2)` and
    /// activation blocks; each defaults to `learning_rate`.
    pub block_learning_rates: Option<[f64; 3]>,
}

impl TrainConfig {
    pub fn new(loss: LossKind, epochs: usize, seed: u64) -> Self {
        Self {
            loss,
            optimizer: loss.default_optimizer(),
            epochs,
            learning_rate: 1e-2,
            seed,
            mode: TrainMode::Standard,
            block_learning_rates: None,
        }
    }

    pub fn split(mut self) -> Self {
        self.mode = TrainMode::Split;
        self
    }

    fn validate(&self) -> Result<()> {
        let rates = self.block_learning_rates.unwrap_or([self.learning_rate; 3]);
        if !(self.learning_rate >= 0.0) || rates.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::InvalidArgument("learning rates must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_loss: f64,
    pub min_loss: f64,
    /// 1-based epoch attaining `min_loss`; 0 when no epoch ran.
    pub min_loss_epoch: usize,
    /// Loss after each completed epoch.
    pub per_epoch_loss: Vec<f64>,
    pub wall_time_per_epoch: f64,
    /// Epoch (1-based) aborted by a pole in the activation, if any.
    pub aborted_at: Option<usize>,
}

/// Trains in place according to `config.mode`.
pub fn train(params: &mut MlpParams, samples: &SampleSet, config: &TrainConfig) -> Result<TrainReport> {
    match config.mode {
        TrainMode::Standard => run(params, samples, config, false),
        TrainMode::Split => train_split(params, samples, config),
    }
}

/// Block-coordinate training: each epoch updates `(W1, b1)`, then `(W2, b2)`,
/// then the activation coefficients, each block with its own optimizer state.
pub fn train_split(params: &mut MlpParams, samples: &SampleSet, config: &TrainConfig) -> Result<TrainReport> {
    if params.activation.kind != ActivationKind::LearnableRational {
        return Err(Error::InvalidArgument(
            "split training needs a learnable rational activation".into(),
        ));
    }
    run(params, samples, config, true)
}

fn run(params: &mut MlpParams, samples: &SampleSet, config: &TrainConfig, split: bool) -> Result<TrainReport> {
    config.validate()?;
    check_univariate(samples)?;
    let start = Instant::now();
    let initial = loss(params, samples, config.loss)?;
    let mut flat = params.to_flat();
    let blocks: Vec<(std::ops::Range<usize>, f64)> = if split {
        let rates = config.block_learning_rates.unwrap_or([config.learning_rate; 3]);
        params.blocks().into_iter().zip(rates).collect()
    } else {
        vec![(0..flat.len(), config.learning_rate)]
    };
    let mut states: Vec<Moments> = blocks.iter().map(|(r, _)| Moments::zeros(r.len())).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut aborted_at = None;

    'epochs: for epoch in 1..=config.epochs {
        let saved = flat.clone();
        for ((range, lr), state) in blocks.iter().zip(&mut states) {
            let grad = match loss_and_gradient(params, samples, config.loss) {
                Ok((_, g)) => g,
                Err(Error::Pole { .. }) => {
                    aborted_at = Some(epoch);
                    flat = saved;
                    params.set_flat(&flat);
                    break 'epochs;
                }
                Err(e) => return Err(e),
            };
            optimizer_step(
                config.optimizer,
                state,
                &mut flat[range.clone()],
                &grad[range.clone()],
                *lr,
                epoch as u32,
            );
            params.set_flat(&flat);
        }
        match loss(params, samples, config.loss) {
            Ok(l) => history.push(l),
            Err(Error::Pole { .. }) => {
                aborted_at = Some(epoch);
                flat = saved;
                params.set_flat(&flat);
                break;
            }
            Err(e) => return Err(e),
        }
    }

    // earliest epoch wins ties
    let (min_loss, min_loss_epoch) = history
        .iter()
        .enumerate()
        .fold(None, |best: Option<(f64, usize)>, (i, &l)| match best {
            Some((b, _)) if b <= l => best,
            _ => Some((l, i + 1)),
        })
        .unwrap_or((initial, 0));
    let final_loss = history.last().copied().unwrap_or(initial);
    let epochs_run = history.len().max(1);
    Ok(TrainReport {
        final_loss,
        min_loss,
        min_loss_epoch,
        per_epoch_loss: history,
        wall_time_per_epoch: start.elapsed().as_secs_f64() / epochs_run as f64,
        aborted_at,
    })
}
