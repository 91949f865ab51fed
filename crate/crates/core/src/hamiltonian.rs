//! Open-boundary Heisenberg chains with couplings up to third neighbours.
//!
//! Spins are spin-½ operators: a parallel pair `(i, i+d)` contributes
//! `+J_d/4` to the diagonal, an antiparallel one `-J_d/4` plus an exchange
//! element `J_d/2` to the configuration with both spins flipped.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wavefunction::{check_config, Amplitude, PsiValue, SpinConfig, WavefunctionError};

#[derive(Debug, Error, PartialEq)]
pub enum HamiltonianError {
    #[error("a chain needs at least 2 sites, got {0}")]
    TooShort(usize),
    #[error("coupling {0} is not finite")]
    Coupling(f64),
    #[error("sample set is empty")]
    NoSamples,
    #[error(transparent)]
    Config(#[from] WavefunctionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergSpec {
    pub n: usize,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
}

/// A nonzero matrix element `⟨σ|H|σ'⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    pub target: SpinConfig,
    pub element: f64,
}

/// Bit `i` of the index is `σᵢ`.
pub fn config_to_index(sigma: &[u8]) -> usize {
    sigma
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &s)| acc | ((s as usize) << i))
}

pub fn index_to_config(index: usize, n: usize) -> SpinConfig {
    (0..n).map(|i| ((index >> i) & 1) as u8).collect()
}

impl HeisenbergSpec {
    pub fn new(n: usize, j1: f64, j2: f64, j3: f64) -> Result<Self, HamiltonianError> {
        let spec = Self { n, j1, j2, j3 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HamiltonianError> {
        if self.n < 2 {
            return Err(HamiltonianError::TooShort(self.n));
        }
        for j in [self.j1, self.j2, self.j3] {
            if !j.is_finite() {
                return Err(HamiltonianError::Coupling(j));
            }
        }
        Ok(())
    }

    /// Nonzero `(d, J_d)` pairs.
    pub fn couplings(&self) -> Vec<(usize, f64)> {
        [(1, self.j1), (2, self.j2), (3, self.j3)]
            .into_iter()
            .filter(|&(_, j)| j != 0.0)
            .collect()
    }

    /// Bonds `(i, i+d)` with `i + d < N`.
    pub fn pairs(&self, d: usize) -> Vec<(usize, usize)> {
        (0..self.n.saturating_sub(d)).map(|i| (i, i + d)).collect()
    }

    /// Calls `f(target_index, element)` for the diagonal (first, if
    /// nonzero) and every exchange element of basis state `index`.
    pub fn for_each_element(&self, index: usize, mut f: impl FnMut(usize, f64)) {
        let couplings = self.couplings();
        let mut diag = 0.0;
        for &(d, j) in &couplings {
            for i in 0..self.n.saturating_sub(d) {
                let same = ((index >> i) & 1) == ((index >> (i + d)) & 1);
                diag += if same { 0.25 * j } else { -0.25 * j };
            }
        }
        if diag != 0.0 {
            f(index, diag);
        }
        for &(d, j) in &couplings {
            for i in 0..self.n.saturating_sub(d) {
                if ((index >> i) & 1) != ((index >> (i + d)) & 1) {
                    f(index ^ (1 << i) ^ (1 << (i + d)), 0.5 * j);
                }
            }
        }
    }

    pub fn diagonal(&self, sigma: &[u8]) -> f64 {
        let mut diag = 0.0;
        for (d, j) in self.couplings() {
            for (a, b) in self.pairs(d) {
                diag += if sigma[a] == sigma[b] { 0.25 * j } else { -0.25 * j };
            }
        }
        diag
    }

    /// Nonzero elements of row `σ`, diagonal first.
    pub fn connections(&self, sigma: &[u8]) -> Result<Vec<Connection>, HamiltonianError> {
        check_config(sigma, self.n)?;
        let mut out = Vec::new();
        let diag = self.diagonal(sigma);
        if diag != 0.0 {
            out.push(Connection {
                target: sigma.to_vec(),
                element: diag,
            });
        }
        for (d, j) in self.couplings() {
            for (a, b) in self.pairs(d) {
                if sigma[a] != sigma[b] {
                    let mut t = sigma.to_vec();
                    t.swap(a, b);
                    out.push(Connection {
                        target: t,
                        element: 0.5 * j,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// `E_loc(σ) = Σ_σ' H_σσ' ψ(σ')/ψ(σ)` with `ψ(σ)` already known.
pub fn local_energy_with<A: Amplitude + ?Sized>(
    spec: &HeisenbergSpec,
    model: &A,
    sigma: &[u8],
    psi: PsiValue,
) -> Result<Complex64, HamiltonianError> {
    let conns = spec.connections(sigma)?;
    let (diag, off): (Vec<_>, Vec<_>) = conns.into_iter().partition(|c| c.target == sigma);
    let mut e = Complex64::new(diag.iter().map(|c| c.element).sum(), 0.0);
    let targets: Vec<SpinConfig> = off.iter().map(|c| c.target.clone()).collect();
    let values = model.psi_connected(sigma, &targets);
    for (c, v) in off.iter().zip(values) {
        let ratio = Complex64::new(v.log_amp - psi.log_amp, v.phase - psi.phase).exp();
        e += ratio * c.element;
    }
    Ok(e)
}

pub fn local_energy<A: Amplitude + ?Sized>(
    spec: &HeisenbergSpec,
    model: &A,
    sigma: &[u8],
) -> Result<Complex64, HamiltonianError> {
    check_config(sigma, spec.n)?;
    local_energy_with(spec, model, sigma, model.psi(sigma))
}

/// Mean, spread and standard error of a set of local energies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub mean: f64,
    /// Unbiased sample variance of `Re E_loc`.
    pub variance: f64,
    pub std_error: f64,
    pub count: usize,
}

impl EnergyEstimate {
    pub fn from_local(eloc: &[Complex64]) -> Result<Self, HamiltonianError> {
        if eloc.is_empty() {
            return Err(HamiltonianError::NoSamples);
        }
        let n = eloc.len() as f64;
        let mean = eloc.iter().map(|e| e.re).sum::<f64>() / n;
        let variance = if eloc.len() > 1 {
            eloc.iter().map(|e| (e.re - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(Self {
            mean,
            variance,
            std_error: (variance / n).sqrt(),
            count: eloc.len(),
        })
    }
}

/// Monte Carlo energy over samples drawn from `|ψ|²`.
pub fn energy_estimate<A: Amplitude + ?Sized>(
    spec: &HeisenbergSpec,
    model: &A,
    samples: &[SpinConfig],
) -> Result<EnergyEstimate, HamiltonianError> {
    let eloc = samples
        .iter()
        .map(|s| local_energy(spec, model, s))
        .collect::<Result<Vec<_>, _>>()?;
    EnergyEstimate::from_local(&eloc)
}

/// `Σ_σ |ψ(σ)|² Re E_loc(σ)` over a full enumeration.
pub fn exact_energy<A: Amplitude + ?Sized>(
    spec: &HeisenbergSpec,
    model: &A,
    table: &[(SpinConfig, PsiValue)],
) -> Result<f64, HamiltonianError> {
    let mut e = 0.0;
    for (s, psi) in table {
        e += psi.prob() * local_energy_with(spec, model, s, *psi)?.re;
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_row() {
        let spec = HeisenbergSpec::new(2, 1.0, 0.0, 0.0).unwrap();
        let c = spec.connections(&[0, 1]).unwrap();
        assert_eq!(
            c,
            vec![
                Connection { target: vec![0, 1], element: -0.25 },
                Connection { target: vec![1, 0], element: 0.5 },
            ]
        );
    }

    #[test]
    fn all_up_is_diagonal() {
        let spec = HeisenbergSpec::new(6, 1.0, 0.4, 0.3).unwrap();
        let c = spec.connections(&[1; 6]).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].element - (5.0 + 0.4 * 4.0 + 0.3 * 3.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn open_boundary_pairs() {
        let spec = HeisenbergSpec::new(4, 1.0, 0.5, 0.0).unwrap();
        assert_eq!(spec.pairs(1), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(spec.pairs(2), vec![(0, 2), (1, 3)]);
        assert_eq!(spec.couplings(), vec![(1, 1.0), (2, 0.5)]);
    }

    #[test]
    fn index_round_trip_and_element_visitor() {
        let spec = HeisenbergSpec::new(5, 1.0, 0.3, 0.2).unwrap();
        for idx in 0..32 {
            let s = index_to_config(idx, 5);
            assert_eq!(config_to_index(&s), idx);
            let mut by_index = Vec::new();
            spec.for_each_element(idx, |t, e| by_index.push((t, e)));
            let by_config: Vec<_> = spec
                .connections(&s)
                .unwrap()
                .into_iter()
                .map(|c| (config_to_index(&c.target), c.element))
                .collect();
            assert_eq!(by_index, by_config);
        }
    }

    #[test]
    fn rejects_short_chain_and_empty_batch() {
        assert_eq!(HeisenbergSpec::new(1, 1.0, 0.0, 0.0), Err(HamiltonianError::TooShort(1)));
        assert_eq!(EnergyEstimate::from_local(&[]), Err(HamiltonianError::NoSamples));
        let e = EnergyEstimate::from_local(&[Complex64::new(-1.5, 0.0); 4]).unwrap();
        assert_eq!((e.mean, e.std_error), (-1.5, 0.0));
    }
}
