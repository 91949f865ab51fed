//! Small dense helpers shared by the geometry and cell kernels.

use crate::grad::Real;

/// Below this squared norm the `f(s)/s` factors switch to their Taylor
/// expansions so values and derivatives stay finite at the origin.
pub(crate) const SERIES_NORM_SQ: f64 = 1e-14;

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = a[0] * b[0];
    for i in 1..a.len() {
        acc = acc + a[i] * b[i];
    }
    acc
}

pub fn norm_sq<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

pub fn scale<T: Real>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

pub fn scale_f<T: Real>(a: &[T], s: f64) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn hadamard<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x * y).collect()
}

pub fn neg<T: Real>(a: &[T]) -> Vec<T> {
    a.iter().map(|&x| -x).collect()
}

pub fn zeros_like<T: Real>(proto: T, n: usize) -> Vec<T> {
    vec![proto.zero_like(); n]
}

/// Row-major `rows × cols` matrix times vector.
pub fn matvec<T: Real>(m: &[T], rows: usize, cols: usize, x: &[T]) -> Vec<T> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    (0..rows).map(|r| dot(&m[r * cols..(r + 1) * cols], x)).collect()
}

/// Column `k` of a row-major matrix (matrix times a basis vector).
pub fn column<T: Real>(m: &[T], rows: usize, cols: usize, k: usize) -> Vec<T> {
    (0..rows).map(|r| m[r * cols + k]).collect()
}

pub fn is_zero<T: Real>(a: &[T]) -> bool {
    a.iter().all(|x| x.value() == 0.0)
}

pub fn values<T: Real>(a: &[T]) -> Vec<f64> {
    a.iter().map(|x| x.value()).collect()
}

pub fn euclid_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
