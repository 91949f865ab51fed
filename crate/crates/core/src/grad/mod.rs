//! Scalar reverse-mode differentiation and the flat parameter layout.

mod params;
mod real;
mod tape;

pub use params::{
    param_count, Block, GateLayout, ParamLayout, ParamVector, Segment, SegmentGeometry,
    SegmentRole, HEAD_UNITS, ONE_HOT_DIM,
};
pub use real::Real;
pub use tape::{Op, Tape, Var};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GradError {
    #[error("output variable was not recorded on this tape")]
    ForeignOutput,
    #[error("gradient buffer has length {got}, tape has {expected} inputs")]
    LengthMismatch { expected: usize, got: usize },
}

/// Central finite differences of `f` at `x` with step `h`.
pub fn finite_difference<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}
