//! The six recurrent cells and the two dense output heads.
//!
//! Hidden states are plain coordinate vectors: `h` values for the Euclidean
//! and Poincaré cells, `h + 1` ambient values (time component first) for the
//! Lorentz cells. Every kernel is generic over [`Real`] so the same code runs
//! on `f64` and on the gradient tape.

mod heads;
mod steps;

pub use heads::{amp_log_probs, features, head_softmax, head_softsign, phase_outputs, softsign};
pub use steps::step_raw;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{lorentz, GeometryError, LorentzVector, PoincareVector};
use crate::grad::{ParamLayout, ParamVector, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellVariant {
    EuclideanRnn,
    PoincareRnn,
    LorentzRnn,
    EuclideanGru,
    PoincareGru,
    LorentzGru,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    Euclidean,
    Poincare,
    Lorentz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Architecture {
    Rnn,
    Gru,
}

impl CellVariant {
    pub const ALL: [CellVariant; 6] = [
        CellVariant::EuclideanRnn,
        CellVariant::PoincareRnn,
        CellVariant::LorentzRnn,
        CellVariant::EuclideanGru,
        CellVariant::PoincareGru,
        CellVariant::LorentzGru,
    ];

    pub fn geometry(self) -> Geometry {
        match self {
            CellVariant::EuclideanRnn | CellVariant::EuclideanGru => Geometry::Euclidean,
            CellVariant::PoincareRnn | CellVariant::PoincareGru => Geometry::Poincare,
            CellVariant::LorentzRnn | CellVariant::LorentzGru => Geometry::Lorentz,
        }
    }

    pub fn architecture(self) -> Architecture {
        match self {
            CellVariant::EuclideanRnn | CellVariant::PoincareRnn | CellVariant::LorentzRnn => {
                Architecture::Rnn
            }
            _ => Architecture::Gru,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellVariant::EuclideanRnn => "euclidean_rnn",
            CellVariant::PoincareRnn => "poincare_rnn",
            CellVariant::LorentzRnn => "lorentz_rnn",
            CellVariant::EuclideanGru => "euclidean_gru",
            CellVariant::PoincareGru => "poincare_gru",
            CellVariant::LorentzGru => "lorentz_gru",
        }
    }

    /// Length of the stored hidden-state vector.
    pub fn state_len(self, hidden: usize) -> usize {
        match self.geometry() {
            Geometry::Lorentz => hidden + 1,
            _ => hidden,
        }
    }
}

impl std::fmt::Display for CellVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CellVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CellVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown cell variant `{s}`"))
    }
}

/// Where the Lorentz spatial clamp is applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampMode {
    /// Clamp `h_{i-1}` on entry to the step.
    #[default]
    Single,
    /// Clamp on entry and again on the step's result.
    Double,
}

#[derive(Debug, Error, PartialEq)]
pub enum CellError {
    #[error("hidden state has length {got}, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("parameter vector has length {got}, expected {expected}")]
    Params { expected: usize, got: usize },
    #[error("input spin must be 0 or 1, got {0}")]
    Input(u8),
    #[error("invalid cell configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Static description of one cell: variant, size and geometry settings.
#[derive(Clone, Debug, PartialEq)]
pub struct CellConfig {
    pub variant: CellVariant,
    pub hidden: usize,
    /// Poincaré curvature magnitude.
    pub c: f64,
    /// Maximal Poincaré radius; `1.0` leaves interior points untouched.
    pub r_max: f64,
    /// Maximal Lorentz spatial norm; `None` disables the clamp.
    pub l_max: Option<f64>,
    pub clamp_mode: ClampMode,
    /// Also clamp the GRU candidate state `h̃` before the final update.
    pub clamp_candidate: bool,
}

impl CellConfig {
    pub fn new(variant: CellVariant, hidden: usize) -> Self {
        Self {
            variant,
            hidden,
            c: 1.0,
            r_max: 1.0,
            l_max: None,
            clamp_mode: ClampMode::Single,
            clamp_candidate: false,
        }
    }

    pub fn validate(&self) -> Result<(), CellError> {
        if self.hidden == 0 {
            return Err(CellError::Config("hidden size must be positive".into()));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(CellError::Config(format!("curvature {} must be positive", self.c)));
        }
        if !(self.r_max > 0.0 && self.r_max <= 1.0) {
            return Err(CellError::Config(format!("r_max {} must lie in (0, 1]", self.r_max)));
        }
        if let Some(l) = self.l_max {
            if !(l > 0.0) {
                return Err(CellError::Config(format!("l_max {l} must be positive")));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(self.variant, self.hidden)
    }

    pub fn state_len(&self) -> usize {
        self.variant.state_len(self.hidden)
    }

    /// Effective Poincaré radius bound: `r_max / √c`.
    pub(crate) fn radius(&self) -> f64 {
        self.r_max / self.c.sqrt()
    }

    /// `h₀`: zero vector, ball origin or hyperboloid origin.
    pub fn initial_state<T: Real>(&self, proto: T) -> Vec<T> {
        match self.variant.geometry() {
            Geometry::Lorentz => lorentz::origin(proto, self.hidden),
            _ => vec![proto.zero_like(); self.hidden],
        }
    }
}

/// Diagnostics gathered while stepping a cell.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub steps: u64,
    /// Number of times a spatial clamp fired.
    pub clamp_hits: u64,
    /// Largest hidden norm seen before clamping (ball radius or Lorentz
    /// spatial norm; Euclidean norm for Euclidean cells).
    pub max_norm_raw: f64,
    /// Largest hidden norm of the states actually passed on.
    pub max_norm: f64,
    /// Largest `|⟨h,h⟩_L + 1|` of a Lorentz state.
    pub max_violation: f64,
}

impl StepStats {
    pub fn merge(&mut self, other: &StepStats) {
        self.steps += other.steps;
        self.clamp_hits += other.clamp_hits;
        self.max_norm_raw = self.max_norm_raw.max(other.max_norm_raw);
        self.max_norm = self.max_norm.max(other.max_norm);
        self.max_violation = self.max_violation.max(other.max_violation);
    }

    pub(crate) fn raw(&mut self, n: f64) {
        self.max_norm_raw = self.max_norm_raw.max(n);
    }

    pub(crate) fn hit(&mut self, fired: bool) {
        if fired {
            self.clamp_hits += 1;
        }
    }
}

/// A hidden state tagged with its geometry.
#[derive(Clone, Debug, PartialEq)]
pub enum HiddenState {
    Euclidean(Vec<f64>),
    Poincare(PoincareVector),
    Lorentz(LorentzVector),
}

impl HiddenState {
    pub fn initial(cfg: &CellConfig) -> Self {
        Self::from_coords(cfg, cfg.initial_state(0.0)).expect("origin is a valid state")
    }

    /// Wraps raw coordinates, checking the geometry's membership invariant.
    pub fn from_coords(cfg: &CellConfig, coords: Vec<f64>) -> Result<Self, CellError> {
        if coords.len() != cfg.state_len() {
            return Err(CellError::Shape {
                expected: cfg.state_len(),
                got: coords.len(),
            });
        }
        Ok(match cfg.variant.geometry() {
            Geometry::Euclidean => HiddenState::Euclidean(coords),
            Geometry::Poincare => HiddenState::Poincare(PoincareVector::new(coords, cfg.c)?),
            Geometry::Lorentz => HiddenState::Lorentz(LorentzVector::new(coords)?),
        })
    }

    pub fn coords(&self) -> &[f64] {
        match self {
            HiddenState::Euclidean(v) => v,
            HiddenState::Poincare(p) => p.coords(),
            HiddenState::Lorentz(l) => l.coords(),
        }
    }
}

/// One step of the configured cell on checked `f64` values.
pub fn step(
    cfg: &CellConfig,
    params: &ParamVector,
    h_prev: &HiddenState,
    input: Option<u8>,
) -> Result<(HiddenState, StepStats), CellError> {
    cfg.validate()?;
    let layout = params.layout();
    if layout.variant != cfg.variant || layout.hidden != cfg.hidden {
        return Err(CellError::Params {
            expected: cfg.layout().len(),
            got: params.len(),
        });
    }
    if let Some(s) = input {
        if s > 1 {
            return Err(CellError::Input(s));
        }
    }
    let mut stats = StepStats::default();
    let next = step_raw(cfg, layout, params.values(), h_prev.coords(), input, &mut stats);
    Ok((HiddenState::from_coords(cfg, next)?, stats))
}
