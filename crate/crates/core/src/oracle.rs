//! Exact ground states of small chains by dense diagonalization or Lanczos.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::{config_to_index, index_to_config, HamiltonianError, HeisenbergSpec};
use crate::wavefunction::{check_config, Amplitude, PsiValue, Sample, SpinConfig};

/// Largest chain handled by the dense solver.
pub const MAX_DENSE_SITES: usize = 12;
/// Largest chain handled at all.
pub const MAX_SITES: usize = 20;
/// Above this size [`Method::Auto`] switches from dense to Lanczos.
pub const AUTO_DENSE_SITES: usize = 10;
/// Required `‖Hv - Ev‖`.
pub const RESIDUAL_TOL: f64 = 1e-8;

const LANCZOS_SEED: u64 = 0x5eed_1a2c;
const MAX_RESTARTS: usize = 500;
/// Krylov vectors kept between restarts are bounded by this many `f64`s.
const KRYLOV_BUDGET: usize = 1 << 25;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{n} sites exceeds the {method} limit of {max}")]
    TooLarge {
        n: usize,
        max: usize,
        method: &'static str,
    },
    #[error("Lanczos did not converge: residual {residual:e} after {restarts} restarts")]
    NoConvergence { residual: f64, restarts: usize },
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdResult {
    pub spec: HeisenbergSpec,
    pub energy: f64,
    /// Normalized ground vector indexed by [`config_to_index`]; the gauge
    /// makes its largest-magnitude entry positive.
    pub ground_vector: Vec<f64>,
    pub residual: f64,
    pub method: Method,
}

/// `y = H x` over the full `2^N` basis.
pub fn apply(spec: &HeisenbergSpec, x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        spec.for_each_element(i, |t, e| y[t] += e * xi);
    }
}

pub fn dense_matrix(spec: &HeisenbergSpec) -> DMatrix<f64> {
    let dim = 1usize << spec.n;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        spec.for_each_element(i, |t, e| h[(t, i)] += e);
    }
    h
}

fn residual(spec: &HeisenbergSpec, v: &[f64], e: f64) -> f64 {
    let mut hv = vec![0.0; v.len()];
    apply(spec, v, &mut hv);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - e * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn fix_gauge(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    let s = if pivot < 0.0 { -1.0 / norm } else { 1.0 / norm };
    v.iter_mut().for_each(|x| *x *= s);
}

fn lowest(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> usize {
    eig.eigenvalues
        .iter()
        .enumerate()
        .fold(0, |best, (i, &e)| if e < eig.eigenvalues[best] { i } else { best })
}

fn dense(spec: &HeisenbergSpec) -> Result<EdResult, OracleError> {
    if spec.n > MAX_DENSE_SITES {
        return Err(OracleError::TooLarge {
            n: spec.n,
            max: MAX_DENSE_SITES,
            method: "dense",
        });
    }
    let eig = SymmetricEigen::new(dense_matrix(spec));
    let k = lowest(&eig);
    let energy = eig.eigenvalues[k];
    let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    fix_gauge(&mut v);
    Ok(EdResult {
        spec: *spec,
        energy,
        residual: residual(spec, &v, energy),
        ground_vector: v,
        method: Method::Dense,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lanczos(spec: &HeisenbergSpec) -> Result<EdResult, OracleError> {
    let dim = 1usize << spec.n;
    let m = (KRYLOV_BUDGET / dim).clamp(4, 80).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    fix_gauge(&mut start);

    let mut w = vec![0.0; dim];
    let mut last = f64::INFINITY;
    for _ in 0..MAX_RESTARTS {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        for j in 0..m {
            apply(spec, &basis[j], &mut w);
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            // two passes of full reorthogonalization
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w, q);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = dot(&w, &w).sqrt();
            if j + 1 == m || b < 1e-12 {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let i = lowest(&eig);
        let mut x = vec![0.0; dim];
        for (q, &y) in basis.iter().zip(eig.eigenvectors.column(i).iter()) {
            x.iter_mut().zip(q).for_each(|(a, b)| *a += y * b);
        }
        fix_gauge(&mut x);
        apply(spec, &x, &mut w);
        let energy = dot(&x, &w);
        last = residual(spec, &x, energy);
        if last < RESIDUAL_TOL * 1e-2 || (k < m && last < RESIDUAL_TOL) {
            return Ok(EdResult {
                spec: *spec,
                energy,
                ground_vector: x,
                residual: last,
                method: Method::Lanczos,
            });
        }
        start = x;
    }
    Err(OracleError::NoConvergence {
        residual: last,
        restarts: MAX_RESTARTS,
    })
}

/// Ground energy and vector of `spec`.
pub fn ed_ground_with(spec: &HeisenbergSpec, method: Method) -> Result<EdResult, OracleError> {
    spec.validate()?;
    if spec.n > MAX_SITES {
        return Err(OracleError::TooLarge {
            n: spec.n,
            max: MAX_SITES,
            method: "exact diagonalization",
        });
    }
    match method {
        Method::Dense => dense(spec),
        Method::Lanczos => lanczos(spec),
        Method::Auto if spec.n <= AUTO_DENSE_SITES => dense(spec),
        Method::Auto => lanczos(spec),
    }
}

pub fn ed_ground(spec: &HeisenbergSpec) -> Result<EdResult, OracleError> {
    ed_ground_with(spec, Method::Auto)
}

/// A wavefunction backed by an explicit amplitude table; the exact ground
/// state loaded this way has constant local energy.
#[derive(Clone, Debug, PartialEq)]
pub struct TableModel {
    pub n: usize,
    pub amplitudes: Vec<f64>,
}

impl TableModel {
    pub fn from_vector(n: usize, amplitudes: Vec<f64>) -> Result<Self, OracleError> {
        if n > MAX_SITES {
            return Err(OracleError::TooLarge {
                n,
                max: MAX_SITES,
                method: "table model",
            });
        }
        assert_eq!(amplitudes.len(), 1 << n, "table length must be 2^n");
        Ok(Self { n, amplitudes })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a * a).collect()
    }

    /// Independent draws from `|ψ|²` by inverting the cumulative table.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Sample> {
        let mut cdf = Vec::with_capacity(self.amplitudes.len());
        let mut acc = 0.0;
        for p in self.probabilities() {
            acc += p;
            cdf.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                let config = index_to_config(idx, self.n);
                let psi = self.psi(&config);
                Sample { config, psi }
            })
            .collect()
    }
}

pub fn table_model(ed: &EdResult) -> Result<TableModel, OracleError> {
    TableModel::from_vector(ed.spec.n, ed.ground_vector.clone())
}

impl Amplitude for TableModel {
    fn n_sites(&self) -> usize {
        self.n
    }

    fn psi(&self, sigma: &[u8]) -> PsiValue {
        debug_assert!(check_config(sigma, self.n).is_ok());
        let a = self.amplitudes[config_to_index(sigma)];
        PsiValue {
            log_amp: a.abs().ln(),
            phase: if a < 0.0 { std::f64::consts::PI } else { 0.0 },
        }
    }
}

/// All basis states with their table values, in index order.
pub fn enumerate_table(model: &TableModel) -> Vec<(SpinConfig, PsiValue)> {
    (0..1usize << model.n)
        .map(|i| {
            let s = index_to_config(i, model.n);
            let psi = model.psi(&s);
            (s, psi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, j2: f64) -> HeisenbergSpec {
        HeisenbergSpec::new(n, 1.0, j2, 0.0).unwrap()
    }

    #[test]
    fn two_site_singlet() {
        let r = ed_ground(&spec(2, 0.0)).unwrap();
        assert!((r.energy + 0.75).abs() < 1e-12);
        assert!(r.residual < RESIDUAL_TOL);
    }

    #[test]
    fn dense_matrix_is_symmetric() {
        let h = dense_matrix(&HeisenbergSpec::new(6, 1.0, 0.3, 0.7).unwrap());
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn lanczos_matches_dense_small() {
        let s = HeisenbergSpec::new(8, 1.0, 0.2, 0.5).unwrap();
        let d = ed_ground_with(&s, Method::Dense).unwrap();
        let l = ed_ground_with(&s, Method::Lanczos).unwrap();
        assert!((d.energy - l.energy).abs() < 1e-10);
        assert!(l.residual < RESIDUAL_TOL);
    }

    #[test]
    fn size_guards() {
        assert!(matches!(
            ed_ground(&spec(25, 0.0)),
            Err(OracleError::TooLarge { .. })
        ));
        assert!(matches!(
            ed_ground_with(&spec(13, 0.0), Method::Dense),
            Err(OracleError::TooLarge { .. })
        ));
    }
}
