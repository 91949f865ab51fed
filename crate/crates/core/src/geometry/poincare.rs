//! Gyrovector operations on the Poincaré ball of curvature `-c`.
//!
//! All kernels take raw coordinate slices and are generic over [`Real`];
//! membership checks live on [`super::PoincareVector`].

use super::linalg::{
    dot, hadamard, matvec as euclid_matvec, neg, norm_sq, scale, SERIES_NORM_SQ,
};
use super::CLAMP_SHRINK;
use crate::grad::Real;

/// Points are kept at least this far (relative) inside the boundary.
pub const BALL_EPS: f64 = 1e-5;

/// Conformal factor `2 / (1 - c‖x‖²)`.
pub fn conformal_factor<T: Real>(x: &[T], c: f64) -> T {
    let one_minus = -(norm_sq(x) * c) + 1.0;
    one_minus.constant(2.0) / one_minus
}

/// Möbius addition `x ⊕_c y`.
pub fn mobius_add<T: Real>(x: &[T], y: &[T], c: f64) -> Vec<T> {
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let coef_x = xy * (2.0 * c) + y2 * c + 1.0;
    let coef_y = -(x2 * c) + 1.0;
    let denom = xy * (2.0 * c) + x2 * y2 * (c * c) + 1.0;
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| (coef_x * xi + coef_y * yi) / denom)
        .collect()
}

/// `tanh(√c‖v‖) v / (√c‖v‖)`.
pub fn exp0<T: Real>(v: &[T], c: f64) -> Vec<T> {
    let n2 = norm_sq(v);
    let factor = if n2.value() * c < SERIES_NORM_SQ {
        -(n2 * (c / 3.0)) + 1.0
    } else {
        let s = (n2 * c).sqrt();
        s.tanh() / s
    };
    scale(v, factor)
}

/// `artanh(√c‖y‖) y / (√c‖y‖)`.
pub fn log0<T: Real>(y: &[T], c: f64) -> Vec<T> {
    let n2 = norm_sq(y);
    let factor = if n2.value() * c < SERIES_NORM_SQ {
        n2 * (c / 3.0) + 1.0
    } else {
        let s = (n2 * c).sqrt();
        s.atanh() / s
    };
    scale(y, factor)
}

/// Exponential map at base `x`.
pub fn exp_x<T: Real>(x: &[T], v: &[T], c: f64) -> Vec<T> {
    let n2 = norm_sq(v);
    let half_lambda = conformal_factor(x, c) * 0.5;
    let sc = c.sqrt();
    let factor = if n2.value() * c < SERIES_NORM_SQ {
        // tanh(a s)/s ≈ a (1 - a² s² / 3) with s = √c‖v‖
        half_lambda * (-(half_lambda * half_lambda * n2 * (c / 3.0)) + 1.0)
    } else {
        let n = n2.sqrt();
        (half_lambda * n * sc).tanh() / (n * sc)
    };
    mobius_add(x, &scale(v, factor), c)
}

/// Logarithmic map at base `x`; `log_x(x)` is the zero vector.
pub fn log_x<T: Real>(x: &[T], y: &[T], c: f64) -> Vec<T> {
    let w = mobius_add(&neg(x), y, c);
    let n2 = norm_sq(&w);
    let lambda = conformal_factor(x, c);
    let sc = c.sqrt();
    let ratio = if n2.value() * c < SERIES_NORM_SQ {
        n2 * (c / 3.0) + 1.0
    } else {
        let s = n2.sqrt() * sc;
        s.atanh() / s
    };
    // 2/(√c λ) artanh(√c‖w‖) w/‖w‖ = (2/λ) · artanh(s)/s · w
    scale(&w, ratio * 2.0 / lambda)
}

/// Parallel transport of `v ∈ T_0` to `T_x`.
///
/// `log_x(x ⊕ exp_0(v))` collapses, by left cancellation, to the
/// conformal rescaling `(λ_0 / λ_x) v = (1 - c‖x‖²) v`.
pub fn transport_from_origin<T: Real>(v: &[T], x: &[T], c: f64) -> Vec<T> {
    let factor = -(norm_sq(x) * c) + 1.0;
    scale(v, factor)
}

/// Möbius matrix-vector product `M ⊗_c x` for a row-major `rows × cols`
/// matrix. `M ⊗ 0 = 0` and `M ⊗ x = 0` whenever `Mx = 0`.
pub fn matvec<T: Real>(m: &[T], rows: usize, cols: usize, x: &[T], c: f64) -> Vec<T> {
    let mx = euclid_matvec(m, rows, cols, x);
    rescale_image(x, mx, c)
}

/// Pointwise product `r ⊙_c x`, read as `diag(r) ⊗_c x`.
pub fn pointwise<T: Real>(r: &[T], x: &[T], c: f64) -> Vec<T> {
    rescale_image(x, hadamard(r, x), c)
}

/// Shared tail of the Möbius matvec: given `x` and its Euclidean image
/// `mx`, returns `tanh(‖mx‖/‖x‖ artanh(√c‖x‖)) mx / (√c‖mx‖)`.
///
/// Written as `tanh(u)/u · artanh(a)/a · mx` with `a = √c‖x‖` and
/// `u² = c‖mx‖² (artanh(a)/a)²`, which needs no division by `‖x‖` or
/// `‖mx‖` and keeps the derivative at `x = 0` or `mx = 0`.
fn rescale_image<T: Real>(x: &[T], mx: Vec<T>, c: f64) -> Vec<T> {
    let a2 = norm_sq(x) * c;
    let at = if a2.value() < SERIES_NORM_SQ {
        a2 / 3.0 + 1.0
    } else {
        let a = a2.sqrt();
        a.atanh() / a
    };
    let u2 = norm_sq(&mx) * c * at * at;
    let g = if u2.value() < SERIES_NORM_SQ {
        -(u2 / 3.0) + 1.0
    } else {
        let u = u2.sqrt();
        u.tanh() / u
    };
    scale(&mx, g * at)
}

/// Rescales `x` onto the sphere of radius `r_max` when it lies outside.
/// Returns the new coordinates and whether the clamp fired.
pub fn clamp<T: Real>(x: &[T], r_max: f64) -> (Vec<T>, bool) {
    let n2 = norm_sq(x);
    if n2.value() > r_max * r_max {
        let n = n2.sqrt();
        (scale(x, n.constant(r_max * CLAMP_SHRINK) / n), true)
    } else {
        (x.to_vec(), false)
    }
}

/// Keeps `x` strictly inside the ball, at most `(1 - BALL_EPS)/√c` from
/// the origin.
pub fn project<T: Real>(x: &[T], c: f64) -> Vec<T> {
    clamp(x, (1.0 - BALL_EPS) / c.sqrt()).0
}

/// Möbius negation followed by addition, `-x ⊕ y`.
pub fn mobius_sub<T: Real>(x: &[T], y: &[T], c: f64) -> Vec<T> {
    mobius_add(&neg(x), y, c)
}

/// Lifts a one-hot input (or the all-zero start token) onto the ball.
pub fn lift_euclidean<T: Real>(v: &[T], c: f64) -> Vec<T> {
    exp0(v, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn half_plus_half_is_point_eight() {
        let r = mobius_add(&[0.5, 0.0], &[0.5, 0.0], 1.0);
        assert!(close(&r, &[0.8, 0.0], 1e-15));
    }

    #[test]
    fn origin_is_left_identity_and_inverse() {
        let y = [0.1, -0.4, 0.2];
        assert!(close(&mobius_add(&[0.0; 3], &y, 1.0), &y, 0.0));
        let x = [0.3, 0.2, -0.1];
        let z = mobius_add(&x, &neg(&x), 1.0);
        assert!(close(&z, &[0.0; 3], 1e-16));
    }

    #[test]
    fn exp0_of_unit_axis() {
        let p = exp0(&[1.0, 0.0], 1.0);
        assert!(close(&p, &[1f64.tanh(), 0.0], 1e-15));
        assert!((p[0] - 0.76159).abs() < 1e-5);
    }

    #[test]
    fn zero_maps() {
        assert_eq!(exp0(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
        assert_eq!(log0(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
        assert_eq!(matvec(&[1.0, 2.0, 3.0, 4.0], 2, 2, &[0.0, 0.0], 1.0), vec![0.0, 0.0]);
        assert_eq!(log_x(&[0.2, 0.1], &[0.2, 0.1], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn clamp_examples() {
        let (x, hit) = clamp(&[0.3, 0.0], 0.618);
        assert_eq!(x, vec![0.3, 0.0]);
        assert!(!hit);
        let (x, hit) = clamp(&[0.9999, 0.0], 0.618);
        assert!(hit);
        assert!(close(&x, &[0.618, 0.0], 1e-13));
        assert!(x[0] <= 0.618);
        let (x, hit) = clamp(&[0.6, -0.7], 1.0);
        assert_eq!(x, vec![0.6, -0.7]);
        assert!(!hit);
    }

    #[test]
    fn pointwise_scalar_case() {
        let x = [0.2, -0.1, 0.3];
        let r = 2.0;
        let got = pointwise(&[r; 3], &x, 1.0);
        // r ⊙ x = tanh(|r| artanh‖x‖) sign(r) x/‖x‖
        let n = (0.04f64 + 0.01 + 0.09).sqrt();
        let want: Vec<f64> = x.iter().map(|xi| (r * n.atanh()).tanh() * xi / n).collect();
        assert!(close(&got, &want, 1e-12));
        assert_eq!(pointwise(&[0.0; 3], &x, 1.0), vec![0.0; 3]);
        assert!(close(&pointwise(&[1.0; 3], &x, 1.0), &x, 1e-15));
    }
}
