//! Variational Monte Carlo training and inference.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::{ClampMode, Geometry, StepStats};
use crate::geometry::{linalg::euclid_norm, poincare};
use crate::grad::{ParamVector, SegmentGeometry, SegmentRole, Tape};
use crate::hamiltonian::{local_energy_with, EnergyEstimate, HamiltonianError, HeisenbergSpec};
use crate::oracle::TableModel;
use crate::wavefunction::{Amplitude, Sample, WavefunctionModel};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Consecutive epochs with non-finite energies or gradients before a run
/// is abandoned.
pub const MAX_BAD_EPOCHS: usize = 25;

#[derive(Debug, Error)]
pub enum VmcError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("observer failed: {0}")]
    Observer(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Upper bound on training epochs.
    pub epochs: usize,
    pub batch: usize,
    pub lr_euclidean: f64,
    /// Learning rate of the bias segments of hyperbolic cells.
    pub lr_hyperbolic: f64,
    /// Both learning rates are divided by this on a plateau.
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub early_stop_patience: usize,
    /// Global gradient-norm bound.
    pub grad_clip_norm: f64,
    /// Largest batch variance at which a checkpoint may be saved;
    /// `None` means `2N`.
    pub variance_tolerance: Option<f64>,
    /// Minimal decrease of the mean energy that counts as improvement.
    pub min_improvement: f64,
    pub seed: u64,
    pub eval_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch: 80,
            lr_euclidean: 5e-3,
            lr_hyperbolic: 5e-3,
            plateau_factor: 2.0,
            plateau_patience: 40,
            early_stop_patience: 200,
            grad_clip_norm: 1.0,
            variance_tolerance: None,
            min_improvement: 1e-6,
            seed: 0,
            eval_samples: 10_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), VmcError> {
        let positive = [
            ("lr_euclidean", self.lr_euclidean),
            ("lr_hyperbolic", self.lr_hyperbolic),
            ("grad_clip_norm", self.grad_clip_norm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(VmcError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.plateau_factor > 1.0) {
            return Err(VmcError::Config(format!(
                "plateau_factor must exceed 1, got {}",
                self.plateau_factor
            )));
        }
        if let Some(t) = self.variance_tolerance {
            if !(t > 0.0) {
                return Err(VmcError::Config(format!("variance_tolerance must be positive, got {t}")));
            }
        }
        if !(self.min_improvement >= 0.0) {
            return Err(VmcError::Config("min_improvement must be non-negative".into()));
        }
        for (name, v) in [
            ("epochs", self.epochs),
            ("batch", self.batch),
            ("plateau_patience", self.plateau_patience),
            ("early_stop_patience", self.early_stop_patience),
            ("eval_samples", self.eval_samples),
        ] {
            if v == 0 {
                return Err(VmcError::Config(format!("{name} must be positive")));
            }
        }
        if self.batch < 2 {
            return Err(VmcError::Config("batch needs at least 2 samples for a variance".into()));
        }
        Ok(())
    }

    pub fn variance_tolerance_for(&self, n: usize) -> f64 {
        self.variance_tolerance.unwrap_or(2.0 * n as f64)
    }
}

/// A model that can draw exact samples from its own `|ψ|²`.
pub trait Sampler: Amplitude {
    fn draw(&self, count: usize, seed: u64) -> Vec<Sample>;
}

impl Sampler for WavefunctionModel {
    fn draw(&self, count: usize, seed: u64) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(count, &mut rng, &mut StepStats::default())
    }
}

impl Sampler for TableModel {
    fn draw(&self, count: usize, seed: u64) -> Vec<Sample> {
        self.sample(count, seed)
    }
}

/// Local energies of samples whose `ψ` values are already known.
pub fn local_energies<A: Amplitude + ?Sized>(
    spec: &HeisenbergSpec,
    model: &A,
    samples: &[Sample],
) -> Result<Vec<Complex64>, HamiltonianError> {
    samples
        .iter()
        .map(|s| local_energy_with(spec, model, &s.config, s.psi))
        .collect()
}

/// `g = (2/B) Σ Re[conj(E_loc - Ē) ∂ log ψ]`, with
/// `∂ log ψ = ∂ log|ψ| + i ∂φ`.
pub fn gradient_estimate(model: &WavefunctionModel, samples: &[Sample], eloc: &[Complex64]) -> Vec<f64> {
    let mut grad = vec![0.0; model.params.len()];
    if samples.is_empty() {
        return grad;
    }
    let b = samples.len() as f64;
    let mean = eloc.iter().sum::<Complex64>() / b;
    let mut tape = Tape::with_capacity(1 << 16);
    for (s, e) in samples.iter().zip(eloc) {
        let d = e - mean;
        if d.re == 0.0 && d.im == 0.0 {
            continue;
        }
        tape.clear();
        let (la, ph) = model.record(&tape, &s.config);
        let out = la * d.re + ph * d.im;
        tape.accumulate_grad(out, 2.0 / b, &mut grad)
            .expect("output recorded on this tape");
    }
    grad
}

/// Scales `grad` to norm `max_norm` when it is longer; returns the norm
/// before clipping.
pub fn clip_global_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = euclid_norm(grad);
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Adam on Euclidean segments and Lorentz biases, Riemannian SGD on
/// Poincaré-ball biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimizer {
    pub lr_euclidean: f64,
    pub lr_hyperbolic: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(len: usize, lr_euclidean: f64, lr_hyperbolic: f64) -> Self {
        Self {
            lr_euclidean,
            lr_hyperbolic,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut ParamVector, grad: &[f64], c: f64) {
        assert_eq!(grad.len(), params.len());
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t);
        let segments = params.layout().segments.clone();
        let values = params.values_mut();
        for seg in &segments {
            let range = seg.range();
            if seg.is_manifold_point() {
                let b = &values[range.clone()];
                let g = &grad[range.clone()];
                let shrink = (1.0 - c * b.iter().map(|x| x * x).sum::<f64>()).powi(2) / 4.0;
                let step: Vec<f64> = g.iter().map(|gi| -self.lr_hyperbolic * shrink * gi).collect();
                let moved = poincare::project(&poincare::exp_x(b, &step, c), c);
                values[range].copy_from_slice(&moved);
                continue;
            }
            let lr = if seg.role == SegmentRole::Bias && seg.geometry == SegmentGeometry::Lorentz {
                self.lr_hyperbolic
            } else {
                self.lr_euclidean
            };
            for i in range {
                let g = grad[i];
                self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
                self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
                let mh = self.m[i] / bc1;
                let vh = self.v[i] / bc2;
                values[i] -= lr * mh / (vh.sqrt() + ADAM_EPS);
            }
        }
    }

    pub fn decay(&mut self, factor: f64) {
        self.lr_euclidean /= factor;
        self.lr_hyperbolic /= factor;
    }
}

/// Checks finiteness and, for Poincaré biases, ball membership.
pub fn params_valid(params: &ParamVector, c: f64) -> bool {
    params.is_finite()
        && params
            .layout()
            .segments
            .iter()
            .filter(|s| s.is_manifold_point())
            .all(|s| euclid_norm(params.segment_values(s)) < 1.0 / c.sqrt())
}

/// Serializes non-finite floats as `null` and reads `null` back as NaN,
/// keeping every log line valid JSON.
pub mod float_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(with = "float_or_null")]
    pub energy: f64,
    #[serde(with = "float_or_null")]
    pub variance: f64,
    #[serde(with = "float_or_null")]
    pub std_error: f64,
    /// Best mean energy registered so far.
    #[serde(with = "float_or_null")]
    pub best_energy: f64,
    pub lr_euclidean: f64,
    pub lr_hyperbolic: f64,
    /// Global gradient norm before clipping; null when no step was taken.
    #[serde(with = "float_or_null")]
    pub grad_norm: f64,
    pub skipped: bool,
    pub saved: bool,
    pub clamp_hits: u64,
    #[serde(with = "float_or_null")]
    pub max_hidden_norm: f64,
    #[serde(with = "float_or_null")]
    pub max_hidden_norm_raw: f64,
    #[serde(with = "float_or_null")]
    pub max_hyperboloid_violation: f64,
    /// Parameters finite, ball biases inside the ball and hidden states
    /// on their manifold.
    pub invariants_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestCheckpoint {
    pub epoch: usize,
    pub energy: f64,
    pub variance: f64,
    pub params: ParamVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub best: Option<BestCheckpoint>,
    pub last: ParamVector,
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub lr_decays: usize,
}

/// Notifications emitted while training.
pub enum Event<'a> {
    Epoch(&'a EpochRecord),
    NewBest(&'a BestCheckpoint),
}

/// Reduce-on-plateau and early-stopping bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub best: f64,
    pub best_epoch: usize,
    pub plateau_count: usize,
    pub decays: usize,
}

impl Schedule {
    pub fn new() -> Self {
        Self {
            best: f64::INFINITY,
            best_epoch: 0,
            plateau_count: 0,
            decays: 0,
        }
    }

    /// Registers the epoch's energy. Returns `(improved, decay_now)`.
    pub fn observe(&mut self, epoch: usize, energy: f64, cfg: &TrainConfig) -> (bool, bool) {
        let improved = energy.is_finite()
            && (self.best == f64::INFINITY || energy < self.best - cfg.min_improvement);
        if improved {
            self.best = energy;
            self.best_epoch = epoch;
            self.plateau_count = 0;
            return (true, false);
        }
        self.plateau_count += 1;
        if self.plateau_count >= cfg.plateau_patience {
            self.plateau_count = 0;
            self.decays += 1;
            return (false, true);
        }
        (false, false)
    }

    pub fn should_stop(&self, epoch: usize, cfg: &TrainConfig) -> bool {
        epoch >= self.best_epoch + cfg.early_stop_patience
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Self::new()
    }
}

fn hidden_ok(model: &WavefunctionModel, stats: &StepStats) -> bool {
    let cell = &model.cell;
    match cell.variant.geometry() {
        Geometry::Euclidean => stats.max_norm.is_finite(),
        Geometry::Poincare => {
            stats.max_norm < 1.0 / cell.c.sqrt() && stats.max_norm <= cell.radius() + 1e-12
        }
        Geometry::Lorentz => {
            let bounded = match (cell.l_max, cell.clamp_mode) {
                (Some(l), ClampMode::Double) => stats.max_norm <= l + 1e-12,
                _ => stats.max_norm.is_finite(),
            };
            stats.max_violation < 1e-8 && bounded
        }
    }
}

/// Trains `model` in place on `spec`; the model ends holding the last
/// parameters, the best checkpoint is returned separately.
pub fn train(
    spec: &HeisenbergSpec,
    model: &mut WavefunctionModel,
    cfg: &TrainConfig,
    mut observer: impl FnMut(Event<'_>) -> Result<(), String>,
) -> Result<TrainOutcome, VmcError> {
    cfg.validate()?;
    spec.validate()?;
    if spec.n != model.n {
        return Err(VmcError::Config(format!(
            "model has {} sites, Hamiltonian {}",
            model.n, spec.n
        )));
    }
    let c = model.cell.c;
    let tolerance = cfg.variance_tolerance_for(spec.n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Optimizer::new(model.params.len(), cfg.lr_euclidean, cfg.lr_hyperbolic);
    let mut schedule = Schedule::new();
    let mut best: Option<BestCheckpoint> = None;
    let mut history = Vec::new();
    let mut bad_run = 0;
    let mut stopped_early = false;
    let mut epochs_run = 0;

    for epoch in 1..=cfg.epochs {
        epochs_run = epoch;
        let mut stats = StepStats::default();
        let samples = model.sample_with(cfg.batch, &mut rng, &mut stats);
        let eloc = local_energies(spec, model, &samples)?;
        let est = EnergyEstimate::from_local(&eloc)?;
        let finite = est.mean.is_finite() && est.variance.is_finite();

        let mut saved = false;
        let beats_best = best.as_ref().map_or(true, |b| est.mean < b.energy);
        if finite && beats_best && est.variance <= tolerance {
            let ckpt = BestCheckpoint {
                epoch,
                energy: est.mean,
                variance: est.variance,
                params: model.params.clone(),
            };
            observer(Event::NewBest(&ckpt)).map_err(VmcError::Observer)?;
            best = Some(ckpt);
            saved = true;
        }

        let (mut grad_norm, mut skipped) = (f64::NAN, true);
        if finite {
            let mut grad = gradient_estimate(model, &samples, &eloc);
            if grad.iter().all(|g| g.is_finite()) {
                grad_norm = clip_global_norm(&mut grad, cfg.grad_clip_norm);
                let before = model.params.clone();
                opt.step(&mut model.params, &grad, c);
                if params_valid(&model.params, c) {
                    skipped = false;
                } else {
                    model.params = before;
                }
            }
        }
        bad_run = if skipped { bad_run + 1 } else { 0 };

        let lr = (opt.lr_euclidean, opt.lr_hyperbolic);
        let (_, decay) = schedule.observe(epoch, est.mean, cfg);
        if decay {
            opt.decay(cfg.plateau_factor);
        }
        let record = EpochRecord {
            epoch,
            energy: est.mean,
            variance: est.variance,
            std_error: est.std_error,
            best_energy: schedule.best,
            lr_euclidean: lr.0,
            lr_hyperbolic: lr.1,
            grad_norm,
            skipped,
            saved,
            clamp_hits: stats.clamp_hits,
            max_hidden_norm: stats.max_norm,
            max_hidden_norm_raw: stats.max_norm_raw,
            max_hyperboloid_violation: stats.max_violation,
            invariants_ok: params_valid(&model.params, c) && hidden_ok(model, &stats),
        };
        observer(Event::Epoch(&record)).map_err(VmcError::Observer)?;
        history.push(record);

        if bad_run >= MAX_BAD_EPOCHS {
            return Err(VmcError::Numerical(format!(
                "{bad_run} consecutive epochs without a finite update (epoch {epoch})"
            )));
        }
        if schedule.should_stop(epoch, cfg) {
            stopped_early = epoch < cfg.epochs;
            break;
        }
    }

    Ok(TrainOutcome {
        history,
        best,
        last: model.params.clone(),
        epochs_run,
        stopped_early,
        lr_decays: schedule.decays,
    })
}

/// Mean and standard error of `E_loc` over `count` fresh samples.
pub fn infer<S: Sampler + ?Sized>(
    spec: &HeisenbergSpec,
    model: &S,
    count: usize,
    seed: u64,
) -> Result<EnergyEstimate, VmcError> {
    if count == 0 {
        return Err(VmcError::Config("sample count must be positive".into()));
    }
    let samples = model.draw(count, seed);
    let eloc = local_energies(spec, model, &samples)?;
    Ok(EnergyEstimate::from_local(&eloc)?)
}
