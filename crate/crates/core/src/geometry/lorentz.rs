//! Operations on the Lorentz hyperboloid `⟨x,x⟩_L = -1, x₀ > 0`.
//!
//! Coordinates are ambient `(x₀, x₁, …, xₙ)` with the time component first.
//! Tangent vectors at the origin `(1, 0, …, 0)` have a zero time component;
//! the `*_spatial` helpers work on their `n` spatial coordinates directly.

use super::linalg::{dot, hadamard, matvec as euclid_matvec, norm_sq, scale, SERIES_NORM_SQ};
use super::CLAMP_SHRINK;
use crate::grad::Real;

/// Drift tolerance on `⟨x,x⟩_L + 1` before the time component is rebuilt.
pub const DRIFT_TOL: f64 = 1e-8;

/// Minkowski product `-x₀y₀ + Σ xᵢyᵢ`.
pub fn inner<T: Real>(x: &[T], y: &[T]) -> T {
    dot(&x[1..], &y[1..]) - x[0] * y[0]
}

/// Geodesic distance `arcosh(-⟨x,y⟩_L)`.
///
/// Evaluated through the equivalent `2 asinh(‖x - y‖_L / 2)`, which is exact
/// at `x = y` and does not lose digits for nearby points.
pub fn dist<T: Real>(x: &[T], y: &[T]) -> T {
    let d: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a - b).collect();
    let n2 = inner(&d, &d);
    if n2.value() <= 0.0 {
        n2.constant(0.0)
    } else {
        (n2.sqrt() * 0.5).asinh() * 2.0
    }
}

/// `√⟨v,v⟩_L`, clamped at zero for slightly timelike round-off.
pub fn norm<T: Real>(v: &[T]) -> T {
    let n2 = inner(v, v);
    if n2.value() <= 0.0 {
        n2.constant(0.0)
    } else {
        n2.sqrt()
    }
}

pub fn origin<T: Real>(proto: T, n: usize) -> Vec<T> {
    let mut o = vec![proto.zero_like(); n + 1];
    o[0] = proto.constant(1.0);
    o
}

/// Rebuilds `x₀ = √(1 + ‖x⃗‖²)` from the spatial part.
pub fn from_spatial<T: Real>(spatial: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(spatial.len() + 1);
    out.push((norm_sq(spatial) + 1.0).sqrt());
    out.extend_from_slice(spatial);
    out
}

/// Re-projects onto the hyperboloid when `|⟨x,x⟩_L + 1|` exceeds
/// [`DRIFT_TOL`].
pub fn reproject<T: Real>(x: Vec<T>) -> Vec<T> {
    let drift = inner(&x, &x).value() + 1.0;
    if drift.abs() > DRIFT_TOL || x[0].value() <= 0.0 {
        from_spatial(&x[1..])
    } else {
        x
    }
}

/// `cosh(‖v‖_L) x + sinh(‖v‖_L) v / ‖v‖_L`.
pub fn exp_x<T: Real>(x: &[T], v: &[T]) -> Vec<T> {
    let n2 = inner(v, v);
    let (ch, sh_over) = if n2.value() < SERIES_NORM_SQ {
        (n2 * 0.5 + 1.0, n2 / 6.0 + 1.0)
    } else {
        let n = n2.sqrt();
        (n.cosh(), n.sinh() / n)
    };
    let out = x
        .iter()
        .zip(v)
        .map(|(&xi, &vi)| ch * xi + sh_over * vi)
        .collect();
    reproject(out)
}

/// Logarithmic map at `x`.
///
/// With `u = y + ⟨x,y⟩_L x` one has `‖u‖_L = sinh d(x,y)`, so the distance
/// factor `d / ‖u‖_L` is evaluated as `asinh(‖u‖_L)/‖u‖_L`, which stays
/// accurate when `y` is close to `x`.
pub fn log_x<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let xy = inner(x, y);
    let u: Vec<T> = y.iter().zip(x).map(|(&yi, &xi)| yi + xy * xi).collect();
    let n2 = inner(&u, &u);
    let factor = if n2.value() < SERIES_NORM_SQ {
        -(n2 / 6.0) + 1.0
    } else {
        let n = n2.sqrt();
        n.asinh() / n
    };
    scale(&u, factor)
}

/// Parallel transport `z + ⟨y,z⟩_L / (1 - ⟨x,y⟩_L) (x + y)` from `T_x` to
/// `T_y`.
pub fn transport<T: Real>(z: &[T], x: &[T], y: &[T]) -> Vec<T> {
    let coef = inner(y, z) / (-inner(x, y) + 1.0);
    z.iter()
        .zip(x.iter().zip(y))
        .map(|(&zi, (&xi, &yi))| zi + coef * (xi + yi))
        .collect()
}

/// Transport from the origin. With `⟨0,y⟩ = -y₀` the general formula
/// reduces to `z + ⟨y,z⟩_L / (1 + y₀) (0 + y)`.
pub fn transport_from_origin<T: Real>(z: &[T], y: &[T]) -> Vec<T> {
    let coef = inner(y, z) / (y[0] + 1.0);
    let mut out: Vec<T> = z.iter().zip(y).map(|(&zi, &yi)| zi + coef * yi).collect();
    out[0] = out[0] + coef;
    out
}

/// Exponential map at the origin of a spatial tangent vector.
pub fn exp0_spatial<T: Real>(v: &[T]) -> Vec<T> {
    let n2 = norm_sq(v);
    let (ch, sh_over) = if n2.value() < SERIES_NORM_SQ {
        (n2 * 0.5 + 1.0, n2 / 6.0 + 1.0)
    } else {
        let n = n2.sqrt();
        (n.cosh(), n.sinh() / n)
    };
    let mut out = Vec::with_capacity(v.len() + 1);
    out.push(ch);
    out.extend(v.iter().map(|&vi| sh_over * vi));
    reproject(out)
}

/// Logarithmic map at the origin, returning only the spatial coordinates
/// (the time component of a tangent vector at the origin is zero).
pub fn log0_spatial<T: Real>(y: &[T]) -> Vec<T> {
    let s = &y[1..];
    let n2 = norm_sq(s);
    let factor = if n2.value() < SERIES_NORM_SQ {
        -(n2 / 6.0) + 1.0
    } else {
        let n = n2.sqrt();
        n.asinh() / n
    };
    scale(s, factor)
}

/// Exponential map at the origin for an ambient tangent vector.
pub fn exp0<T: Real>(v: &[T]) -> Vec<T> {
    exp0_spatial(&v[1..])
}

/// Logarithmic map at the origin as an ambient tangent vector.
pub fn log0<T: Real>(y: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(y.len());
    out.push(y[0].zero_like());
    out.extend(log0_spatial(y));
    out
}

/// `x ⊕_L y = exp_x(P_{0→x}(log_0(y)))`.
pub fn add_points<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let v = log0(y);
    let moved = transport_from_origin(&v, x);
    exp_x(x, &moved)
}

/// `r ⊙_L x = exp_0(r log_0(x))`.
pub fn scalar_mul<T: Real>(r: T, x: &[T]) -> Vec<T> {
    exp0_spatial(&scale(&log0_spatial(x), r))
}

/// Gate-wise product `exp_0(r ∘ log_0(x))`.
pub fn pointwise<T: Real>(r: &[T], x: &[T]) -> Vec<T> {
    exp0_spatial(&hadamard(r, &log0_spatial(x)))
}

/// `M ⊗_L x = exp_0(M log_0(x))`, with `M` acting on spatial coordinates.
pub fn matvec<T: Real>(m: &[T], rows: usize, cols: usize, x: &[T]) -> Vec<T> {
    exp0_spatial(&euclid_matvec(m, rows, cols, &log0_spatial(x)))
}

/// `-x = (x₀, -x⃗)`, the point with `x ⊕_L (-x) = 0_L`.
pub fn neg<T: Real>(x: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len());
    out.push(x[0]);
    out.extend(x[1..].iter().map(|&v| -v));
    out
}

/// Caps the spatial norm at `l_max` and rebuilds the time component.
/// Returns the new point and whether the clamp fired.
pub fn clamp<T: Real>(x: &[T], l_max: f64) -> (Vec<T>, bool) {
    let s = &x[1..];
    let n2 = norm_sq(s);
    if n2.value() > l_max * l_max {
        let n = n2.sqrt();
        let scaled = scale(s, n.constant(l_max * CLAMP_SHRINK) / n);
        (from_spatial(&scaled), true)
    } else {
        (x.to_vec(), false)
    }
}

/// Euclidean norm of the spatial part.
pub fn spatial_norm(x: &[f64]) -> f64 {
    x[1..].iter().map(|v| v * v).sum::<f64>().sqrt()
}
