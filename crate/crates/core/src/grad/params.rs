use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cells::{Architecture, CellVariant, Geometry};

/// Size of the one-hot spin encoding fed to every cell.
pub const ONE_HOT_DIM: usize = 2;

/// Number of units in each dense output head.
pub const HEAD_UNITS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentRole {
    Weight,
    Bias,
}

/// Where a segment lives: plain Euclidean parameters, Poincaré-ball points
/// (updated with Riemannian SGD), or Lorentz tangent vectors at the origin
/// (lifted with the exponential map at use).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentGeometry {
    Euclidean,
    Poincare,
    Lorentz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub role: SegmentRole,
    pub geometry: SegmentGeometry,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    /// Segments whose values are points on the Poincaré ball.
    pub fn is_manifold_point(&self) -> bool {
        self.geometry == SegmentGeometry::Poincare && self.role == SegmentRole::Bias
    }
}

/// Row-major matrix block inside the flat parameter array.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice<'a, T>(&self, data: &'a [T]) -> &'a [T] {
        &data[self.offset..self.offset + self.len()]
    }
}

/// `W` (hidden × hidden), `U` (hidden × input) and `b` (hidden) of one gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateLayout {
    pub w: Block,
    pub u: Block,
    pub b: Block,
}

/// Named-segment index over the flat parameter array of one cell + heads.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamLayout {
    pub variant: CellVariant,
    pub hidden: usize,
    /// RNN: `[h]`. GRU: `[r, z, h]`.
    pub gates: Vec<GateLayout>,
    pub amp_w: Block,
    pub amp_b: Block,
    pub phase_w: Block,
    pub phase_b: Block,
    pub segments: Vec<Segment>,
    len: usize,
}

impl ParamLayout {
    pub fn new(variant: CellVariant, hidden: usize) -> Self {
        assert!(hidden >= 1, "hidden size must be positive");
        let bias_geometry = match variant.geometry() {
            Geometry::Euclidean => SegmentGeometry::Euclidean,
            Geometry::Poincare => SegmentGeometry::Poincare,
            Geometry::Lorentz => SegmentGeometry::Lorentz,
        };
        let gate_names: &[&str] = match variant.architecture() {
            Architecture::Rnn => &["h"],
            Architecture::Gru => &["r", "z", "h"],
        };

        let mut segments = Vec::new();
        let mut offset = 0;
        let mut add = |name: String, rows: usize, cols: usize, role, geometry| {
            let block = Block { offset, rows, cols };
            segments.push(Segment {
                name,
                offset,
                rows,
                cols,
                role,
                geometry,
            });
            offset += rows * cols;
            block
        };

        let mut gates = Vec::with_capacity(gate_names.len());
        for g in gate_names {
            let w = add(
                format!("w_{g}"),
                hidden,
                hidden,
                SegmentRole::Weight,
                SegmentGeometry::Euclidean,
            );
            let u = add(
                format!("u_{g}"),
                hidden,
                ONE_HOT_DIM,
                SegmentRole::Weight,
                SegmentGeometry::Euclidean,
            );
            let b = add(format!("b_{g}"), hidden, 1, SegmentRole::Bias, bias_geometry);
            gates.push(GateLayout { w, u, b });
        }
        let amp_w = add(
            "amp_w".into(),
            HEAD_UNITS,
            hidden,
            SegmentRole::Weight,
            SegmentGeometry::Euclidean,
        );
        let amp_b = add(
            "amp_b".into(),
            HEAD_UNITS,
            1,
            SegmentRole::Bias,
            SegmentGeometry::Euclidean,
        );
        let phase_w = add(
            "phase_w".into(),
            HEAD_UNITS,
            hidden,
            SegmentRole::Weight,
            SegmentGeometry::Euclidean,
        );
        let phase_b = add(
            "phase_b".into(),
            HEAD_UNITS,
            1,
            SegmentRole::Bias,
            SegmentGeometry::Euclidean,
        );

        Self {
            variant,
            hidden,
            gates,
            amp_w,
            amp_b,
            phase_w,
            phase_b,
            segments,
            len: offset,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }
}

/// Closed-form parameter count of a cell plus the amplitude and phase heads.
pub fn param_count(variant: CellVariant, hidden: usize, input_dim: usize) -> usize {
    let per_gate = hidden * hidden + hidden * input_dim + hidden;
    let heads = 2 * (HEAD_UNITS * hidden + HEAD_UNITS);
    match variant.architecture() {
        Architecture::Rnn => per_gate + heads,
        Architecture::Gru => 3 * per_gate + heads,
    }
}

/// Flat parameter array together with its segment index.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    layout: ParamLayout,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(layout: ParamLayout) -> Self {
        let values = vec![0.0; layout.len()];
        Self { layout, values }
    }

    pub fn from_values(layout: ParamLayout, values: Vec<f64>) -> Option<Self> {
        (values.len() == layout.len()).then_some(Self { layout, values })
    }

    /// Glorot-uniform weights, zero biases (the origin for ball-valued
    /// biases, the zero tangent vector for Lorentz ones).
    pub fn glorot<R: Rng + ?Sized>(layout: ParamLayout, rng: &mut R) -> Self {
        let mut p = Self::zeros(layout);
        for seg in p.layout.segments.clone() {
            if seg.role != SegmentRole::Weight {
                continue;
            }
            let limit = (6.0 / (seg.rows + seg.cols) as f64).sqrt();
            for v in &mut p.values[seg.range()] {
                *v = rng.gen_range(-limit..limit);
            }
        }
        p
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn segment_values(&self, seg: &Segment) -> &[f64] {
        &self.values[seg.range()]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_parameter_counts() {
        assert_eq!(param_count(CellVariant::EuclideanRnn, 70, 2), 5394);
        assert_eq!(param_count(CellVariant::EuclideanGru, 70, 2), 15614);
        assert_eq!(param_count(CellVariant::EuclideanRnn, 80, 2), 6964);
    }

    #[test]
    fn layout_matches_closed_form_for_every_variant() {
        for v in CellVariant::ALL {
            for h in [1, 4, 16, 70] {
                let layout = ParamLayout::new(v, h);
                assert_eq!(layout.len(), param_count(v, h, ONE_HOT_DIM), "{v:?} h={h}");
            }
        }
    }

    #[test]
    fn segments_are_disjoint_and_cover() {
        for v in CellVariant::ALL {
            let layout = ParamLayout::new(v, 5);
            let mut next = 0;
            for s in &layout.segments {
                assert_eq!(s.offset, next);
                next += s.len();
            }
            assert_eq!(next, layout.len());
        }
    }

    #[test]
    fn bias_geometry_follows_variant() {
        let p = ParamLayout::new(CellVariant::PoincareGru, 3);
        assert!(p.segment("b_z").unwrap().is_manifold_point());
        assert!(!p.segment("amp_b").unwrap().is_manifold_point());
        let l = ParamLayout::new(CellVariant::LorentzRnn, 3);
        assert_eq!(l.segment("b_h").unwrap().geometry, SegmentGeometry::Lorentz);
        assert!(!l.segment("b_h").unwrap().is_manifold_point());
    }
}
