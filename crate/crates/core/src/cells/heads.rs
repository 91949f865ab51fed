use super::{CellConfig, CellError, Geometry, HiddenState};
use crate::geometry::linalg::matvec;
use crate::geometry::{lorentz, poincare};
use crate::grad::{ParamLayout, ParamVector, Real, HEAD_UNITS};

/// `x / (1 + |x|)`.
pub fn softsign<T: Real>(x: T) -> T {
    x / (x.abs() + 1.0)
}

/// Euclidean features read by the dense heads: the state itself, or its
/// logarithm at the origin (spatial part only for Lorentz states).
pub fn features<T: Real>(cfg: &CellConfig, h: &[T]) -> Vec<T> {
    match cfg.variant.geometry() {
        Geometry::Euclidean => h.to_vec(),
        Geometry::Poincare => poincare::log0(h, cfg.c),
        Geometry::Lorentz => lorentz::log0_spatial(h),
    }
}

fn dense<T: Real>(layout: &ParamLayout, w: crate::grad::Block, b: crate::grad::Block, p: &[T], feat: &[T]) -> Vec<T> {
    let wx = matvec(w.slice(p), HEAD_UNITS, layout.hidden, feat);
    wx.iter().zip(b.slice(p)).map(|(&a, &b)| a + b).collect()
}

/// Log-softmax of the two amplitude logits, `log p(σᵢ = 0), log p(σᵢ = 1)`.
pub fn amp_log_probs<T: Real>(layout: &ParamLayout, p: &[T], feat: &[T]) -> [T; 2] {
    let l = dense(layout, layout.amp_w, layout.amp_b, p, feat);
    let d = l[1] - l[0];
    [-d.softplus(), -(-d).softplus()]
}

/// Softsign of the two phase logits.
pub fn phase_outputs<T: Real>(layout: &ParamLayout, p: &[T], feat: &[T]) -> [T; 2] {
    let l = dense(layout, layout.phase_w, layout.phase_b, p, feat);
    [softsign(l[0]), softsign(l[1])]
}

fn check(cfg: &CellConfig, params: &ParamVector, h: &HiddenState) -> Result<(), CellError> {
    if params.layout().variant != cfg.variant || params.layout().hidden != cfg.hidden {
        return Err(CellError::Params {
            expected: cfg.layout().len(),
            got: params.len(),
        });
    }
    if h.coords().len() != cfg.state_len() {
        return Err(CellError::Shape {
            expected: cfg.state_len(),
            got: h.coords().len(),
        });
    }
    Ok(())
}

/// Conditional probabilities `(p₀, p₁)` of the next spin.
pub fn head_softmax(
    cfg: &CellConfig,
    params: &ParamVector,
    h: &HiddenState,
) -> Result<[f64; 2], CellError> {
    check(cfg, params, h)?;
    let feat = features(cfg, h.coords());
    let lp = amp_log_probs(params.layout(), params.values(), &feat);
    Ok([lp[0].exp(), lp[1].exp()])
}

/// Per-spin phase contributions, each in `(-1, 1)`.
pub fn head_softsign(
    cfg: &CellConfig,
    params: &ParamVector,
    h: &HiddenState,
) -> Result<[f64; 2], CellError> {
    check(cfg, params, h)?;
    let feat = features(cfg, h.coords());
    Ok(phase_outputs(params.layout(), params.values(), &feat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::CellVariant;

    #[test]
    fn zero_logits_are_uniform() {
        let cfg = CellConfig::new(CellVariant::LorentzGru, 3);
        let p = ParamVector::zeros(cfg.layout());
        let h = HiddenState::initial(&cfg);
        assert_eq!(head_softmax(&cfg, &p, &h).unwrap(), [0.5, 0.5]);
        assert_eq!(head_softsign(&cfg, &p, &h).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn softsign_limits() {
        assert_eq!(softsign(0.0), 0.0);
        assert!(softsign(1e12) > 0.999_999);
        assert!(softsign(-1e12) < -0.999_999);
    }

    #[test]
    fn softmax_sums_to_one() {
        let cfg = CellConfig::new(CellVariant::EuclideanRnn, 2);
        let mut p = ParamVector::zeros(cfg.layout());
        for (i, v) in p.values_mut().iter_mut().enumerate() {
            *v = ((i * 7919) % 13) as f64 / 3.0 - 2.0;
        }
        let h = HiddenState::Euclidean(vec![0.3, -0.8]);
        let pr = head_softmax(&cfg, &p, &h).unwrap();
        assert!((pr[0] + pr[1] - 1.0).abs() < 1e-12);
        assert!(pr.iter().all(|x| *x > 0.0 && *x < 1.0));
    }
}
