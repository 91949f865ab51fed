//! Autoregressive complex wavefunction `ψ(σ) = e^{iφ(σ)} √P(σ)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::{
    amp_log_probs, features, phase_outputs, step_raw, CellConfig, CellError, StepStats,
};
use crate::grad::{ParamVector, Real, Tape, Var};

/// Largest chain that [`WavefunctionModel::enumerate`] will expand.
pub const MAX_ENUMERATE_SITES: usize = 20;

/// A basis configuration `σ ∈ {0,1}^N`.
pub type SpinConfig = Vec<u8>;

#[derive(Debug, Error, PartialEq)]
pub enum WavefunctionError {
    #[error("configuration has {got} sites, model has {expected}")]
    Length { expected: usize, got: usize },
    #[error("spin value {0} is not 0 or 1")]
    NotBinary(u8),
    #[error("{n} sites exceeds the enumeration limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("parameter layout does not match the cell configuration")]
    Layout,
    #[error("sample count must be positive")]
    EmptyBatch,
    #[error(transparent)]
    Cell(#[from] CellError),
}

pub fn check_config(sigma: &[u8], n: usize) -> Result<(), WavefunctionError> {
    if sigma.len() != n {
        return Err(WavefunctionError::Length {
            expected: n,
            got: sigma.len(),
        });
    }
    match sigma.iter().find(|&&s| s > 1) {
        Some(&s) => Err(WavefunctionError::NotBinary(s)),
        None => Ok(()),
    }
}

/// Sites whose spins enter the Marshall sign.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sublattice {
    /// Sites 0, 2, 4, …
    #[default]
    Even,
    /// Sites 1, 3, 5, …
    Odd,
}

impl Sublattice {
    /// `M_A(σ) = Σ_{k ∈ A} σ_k`.
    pub fn count(self, sigma: &[u8]) -> u32 {
        let start = match self {
            Sublattice::Even => 0,
            Sublattice::Odd => 1,
        };
        sigma.iter().skip(start).step_by(2).map(|&s| s as u32).sum()
    }
}

/// `log|ψ(σ)| = ½ log P(σ)` and the phase `φ(σ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiValue {
    pub log_amp: f64,
    pub phase: f64,
}

impl PsiValue {
    pub fn prob(&self) -> f64 {
        (2.0 * self.log_amp).exp()
    }
}

/// Anything that can be evaluated as a wavefunction on basis states.
pub trait Amplitude {
    fn n_sites(&self) -> usize;

    fn psi(&self, sigma: &[u8]) -> PsiValue;

    /// Values on configurations connected to `base`; implementations may
    /// reuse work shared with `base`.
    fn psi_connected(&self, base: &[u8], targets: &[SpinConfig]) -> Vec<PsiValue> {
        let _ = base;
        targets.iter().map(|t| self.psi(t)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub config: SpinConfig,
    pub psi: PsiValue,
}

/// Recurrent wavefunction: cell, parameters and phase conventions.
#[derive(Clone, Debug, PartialEq)]
pub struct WavefunctionModel {
    pub cell: CellConfig,
    pub params: ParamVector,
    pub n: usize,
    /// Multiply the summed softsign phase by `π`.
    pub phase_pi_scaling: bool,
    pub marshall: Sublattice,
}

/// Hidden states and running sums along one configuration, used to resume
/// evaluation of configurations that share a prefix.
struct Trajectory {
    /// `pre[i]` is the state fed into step `i`.
    pre: Vec<Vec<f64>>,
    logp: Vec<f64>,
    phase: Vec<f64>,
}

impl WavefunctionModel {
    pub fn new(cell: CellConfig, n: usize, params: ParamVector) -> Result<Self, WavefunctionError> {
        cell.validate()?;
        if params.layout() != &cell.layout() {
            return Err(WavefunctionError::Layout);
        }
        if n == 0 {
            return Err(WavefunctionError::Length { expected: 1, got: 0 });
        }
        Ok(Self {
            cell,
            params,
            n,
            phase_pi_scaling: false,
            marshall: Sublattice::Even,
        })
    }

    /// Glorot-uniform weights and zero biases from a seeded generator.
    pub fn random(cell: CellConfig, n: usize, seed: u64) -> Result<Self, WavefunctionError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ParamVector::glorot(cell.layout(), &mut rng);
        Self::new(cell, n, params)
    }

    fn phase_total(&self, raw: f64, sigma: &[u8]) -> f64 {
        let scaled = if self.phase_pi_scaling { raw * PI } else { raw };
        scaled + PI * self.marshall.count(sigma) as f64
    }

    /// Runs the recurrence over `sigma` with parameters `p`, returning the
    /// summed log-probability and summed raw phase.
    fn forward<T: Real>(&self, p: &[T], sigma: &[u8], stats: &mut StepStats) -> (T, T) {
        let layout = self.params.layout();
        let proto = p[0];
        let mut h = self.cell.initial_state(proto);
        let mut lp = proto.zero_like();
        let mut ph = proto.zero_like();
        let mut input = None;
        for &s in sigma {
            h = step_raw(&self.cell, layout, p, &h, input, stats);
            let feat = features(&self.cell, &h);
            lp = lp + amp_log_probs(layout, p, &feat)[s as usize];
            ph = ph + phase_outputs(layout, p, &feat)[s as usize];
            input = Some(s);
        }
        (lp, ph)
    }

    /// Unchecked evaluation; `sigma` must have `n` binary entries.
    fn eval(&self, sigma: &[u8], stats: &mut StepStats) -> PsiValue {
        let (lp, ph) = self.forward(self.params.values(), sigma, stats);
        PsiValue {
            log_amp: 0.5 * lp,
            phase: self.phase_total(ph, sigma),
        }
    }

    pub fn evaluate(&self, sigma: &[u8]) -> Result<PsiValue, WavefunctionError> {
        check_config(sigma, self.n)?;
        Ok(self.eval(sigma, &mut StepStats::default()))
    }

    /// Per-site conditionals along `sigma`: `(p(σᵢ=0), p(σᵢ=1), φᵢ)`.
    pub fn conditionals(&self, sigma: &[u8]) -> Result<Vec<(f64, f64, f64)>, WavefunctionError> {
        check_config(sigma, self.n)?;
        let layout = self.params.layout();
        let p = self.params.values();
        let mut h = self.cell.initial_state(0.0);
        let mut input = None;
        let mut stats = StepStats::default();
        let mut out = Vec::with_capacity(self.n);
        for &s in sigma {
            h = step_raw(&self.cell, layout, p, &h, input, &mut stats);
            let feat = features(&self.cell, &h);
            let lp = amp_log_probs(layout, p, &feat);
            let ph = phase_outputs(layout, p, &feat);
            out.push((lp[0].exp(), lp[1].exp(), ph[s as usize]));
            input = Some(s);
        }
        Ok(out)
    }

    fn trajectory(&self, sigma: &[u8]) -> Trajectory {
        let layout = self.params.layout();
        let p = self.params.values();
        let mut stats = StepStats::default();
        let mut t = Trajectory {
            pre: Vec::with_capacity(self.n + 1),
            logp: Vec::with_capacity(self.n + 1),
            phase: Vec::with_capacity(self.n + 1),
        };
        let mut h = self.cell.initial_state(0.0);
        let (mut lp, mut ph) = (0.0, 0.0);
        let mut input = None;
        for &s in sigma {
            t.pre.push(h.clone());
            t.logp.push(lp);
            t.phase.push(ph);
            h = step_raw(&self.cell, layout, p, &h, input, &mut stats);
            let feat = features(&self.cell, &h);
            lp += amp_log_probs(layout, p, &feat)[s as usize];
            ph += phase_outputs(layout, p, &feat)[s as usize];
            input = Some(s);
        }
        t
    }

    fn resume(&self, t: &Trajectory, base: &[u8], target: &[u8]) -> PsiValue {
        let Some(k) = base.iter().zip(target).position(|(a, b)| a != b) else {
            return self.eval(target, &mut StepStats::default());
        };
        let layout = self.params.layout();
        let p = self.params.values();
        let mut stats = StepStats::default();
        let mut h = t.pre[k].clone();
        let (mut lp, mut ph) = (t.logp[k], t.phase[k]);
        let mut input = if k == 0 { None } else { Some(target[k - 1]) };
        for &s in &target[k..] {
            h = step_raw(&self.cell, layout, p, &h, input, &mut stats);
            let feat = features(&self.cell, &h);
            lp += amp_log_probs(layout, p, &feat)[s as usize];
            ph += phase_outputs(layout, p, &feat)[s as usize];
            input = Some(s);
        }
        PsiValue {
            log_amp: 0.5 * lp,
            phase: self.phase_total(ph, target),
        }
    }

    /// Draws `count` exact, independent samples from `|ψ|²`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Sample>, WavefunctionError> {
        if count == 0 {
            return Err(WavefunctionError::EmptyBatch);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(self.sample_with(count, &mut rng, &mut StepStats::default()))
    }

    /// Sampling from a caller-owned generator, accumulating cell statistics.
    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        count: usize,
        rng: &mut R,
        stats: &mut StepStats,
    ) -> Vec<Sample> {
        let layout = self.params.layout();
        let p = self.params.values();
        (0..count)
            .map(|_| {
                let mut h = self.cell.initial_state(0.0);
                let (mut lp, mut ph) = (0.0, 0.0);
                let mut input = None;
                let mut sigma = Vec::with_capacity(self.n);
                for _ in 0..self.n {
                    h = step_raw(&self.cell, layout, p, &h, input, stats);
                    let feat = features(&self.cell, &h);
                    let lps = amp_log_probs(layout, p, &feat);
                    let s = u8::from(rng.gen::<f64>() < lps[1].exp());
                    lp += lps[s as usize];
                    ph += phase_outputs(layout, p, &feat)[s as usize];
                    sigma.push(s);
                    input = Some(s);
                }
                let psi = PsiValue {
                    log_amp: 0.5 * lp,
                    phase: self.phase_total(ph, &sigma),
                };
                Sample { config: sigma, psi }
            })
            .collect()
    }

    /// Records `log|ψ(σ)|` and `φ(σ)` on `tape`, with every parameter
    /// registered as an input in layout order.
    pub fn record<'t>(&self, tape: &'t Tape, sigma: &[u8]) -> (Var<'t>, Var<'t>) {
        let p = tape.vars(self.params.values());
        let (lp, ph) = self.forward(&p, sigma, &mut StepStats::default());
        let ph = if self.phase_pi_scaling { ph * PI } else { ph };
        let shift = PI * self.marshall.count(sigma) as f64;
        (lp * 0.5, ph + shift)
    }

    /// Every configuration with its probability `|ψ(σ)|²`, in basis-index
    /// order (bit `i` of the index is `σᵢ`).
    pub fn enumerate(&self) -> Result<Vec<(SpinConfig, PsiValue)>, WavefunctionError> {
        if self.n > MAX_ENUMERATE_SITES {
            return Err(WavefunctionError::TooLarge {
                n: self.n,
                max: MAX_ENUMERATE_SITES,
            });
        }
        let mut out = Vec::with_capacity(1 << self.n);
        let mut sigma = Vec::with_capacity(self.n);
        self.walk(&self.cell.initial_state(0.0), None, 0.0, 0.0, &mut sigma, &mut out);
        out.sort_by_key(|(s, _)| crate::hamiltonian::config_to_index(s));
        Ok(out)
    }

    fn walk(
        &self,
        h: &[f64],
        input: Option<u8>,
        lp: f64,
        ph: f64,
        sigma: &mut Vec<u8>,
        out: &mut Vec<(SpinConfig, PsiValue)>,
    ) {
        if sigma.len() == self.n {
            let psi = PsiValue {
                log_amp: 0.5 * lp,
                phase: self.phase_total(ph, sigma),
            };
            out.push((sigma.clone(), psi));
            return;
        }
        let layout = self.params.layout();
        let p = self.params.values();
        let next = step_raw(&self.cell, layout, p, h, input, &mut StepStats::default());
        let feat = features(&self.cell, &next);
        let lps = amp_log_probs(layout, p, &feat);
        let phs = phase_outputs(layout, p, &feat);
        for s in 0..2u8 {
            sigma.push(s);
            self.walk(&next, Some(s), lp + lps[s as usize], ph + phs[s as usize], sigma, out);
            sigma.pop();
        }
    }
}

impl Amplitude for WavefunctionModel {
    fn n_sites(&self) -> usize {
        self.n
    }

    fn psi(&self, sigma: &[u8]) -> PsiValue {
        self.eval(sigma, &mut StepStats::default())
    }

    fn psi_connected(&self, base: &[u8], targets: &[SpinConfig]) -> Vec<PsiValue> {
        let t = self.trajectory(base);
        targets.iter().map(|s| self.resume(&t, base, s)).collect()
    }
}
