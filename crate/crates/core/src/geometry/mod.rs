//! Poincaré-ball and Lorentz-hyperboloid geometry.
//!
//! The [`poincare`] and [`lorentz`] submodules hold the raw kernels used by
//! the recurrent cells (generic over [`crate::grad::Real`] so they can be
//! differentiated). The types here wrap them with membership checks.

pub mod linalg;
pub mod lorentz;
pub mod poincare;

use thiserror::Error;

use linalg::euclid_norm;

/// Tolerance on `|⟨x,x⟩_L + 1|` for hyperboloid membership.
pub const HYPERBOLOID_TOL: f64 = 1e-8;

/// Clamps rescale to this fraction of the bound, so that rounding in the
/// rescale can never leave a point outside it.
pub const CLAMP_SHRINK: f64 = 1.0 - 1e-14;

/// Tolerance for the arcosh argument falling below 1.
pub const ARCOSH_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("point with norm {norm} lies outside the Poincaré ball of radius {radius}")]
    OutsideBall { norm: f64, radius: f64 },
    #[error("point is off the hyperboloid: <x,x>_L + 1 = {drift:e}, x0 = {x0}")]
    OffHyperboloid { drift: f64, x0: f64 },
    #[error("vector is not tangent at its base: <v,x>_L = {residual:e}")]
    NotTangent { residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("curvature must be positive and finite, got {0}")]
    Curvature(f64),
    #[error("clamp bound must lie in {range}, got {value}")]
    ClampBound { value: f64, range: &'static str },
    #[error("arcosh argument {0} is below 1")]
    ArcoshDomain(f64),
    #[error("non-finite coordinate")]
    NonFinite,
}

fn check_dim(expected: usize, got: usize) -> Result<(), GeometryError> {
    if expected == got {
        Ok(())
    } else {
        Err(GeometryError::Dimension { expected, got })
    }
}

fn check_finite(coords: &[f64]) -> Result<(), GeometryError> {
    if coords.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GeometryError::NonFinite)
    }
}

/// Base point of a tangent vector.
#[derive(Clone, Debug, PartialEq)]
pub enum BasePoint {
    Origin,
    At(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub coords: Vec<f64>,
    pub base: BasePoint,
}

impl TangentVector {
    pub fn at_origin(coords: Vec<f64>) -> Self {
        Self {
            coords,
            base: BasePoint::Origin,
        }
    }

    pub fn at(coords: Vec<f64>, base: &[f64]) -> Self {
        Self {
            coords,
            base: BasePoint::At(base.to_vec()),
        }
    }
}

/// A point of the open ball `‖x‖ < 1/√c`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoincareVector {
    coords: Vec<f64>,
    c: f64,
}

impl PoincareVector {
    pub fn new(coords: Vec<f64>, c: f64) -> Result<Self, GeometryError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(GeometryError::Curvature(c));
        }
        check_finite(&coords)?;
        let norm = euclid_norm(&coords);
        let radius = 1.0 / c.sqrt();
        if norm >= radius {
            return Err(GeometryError::OutsideBall { norm, radius });
        }
        Ok(Self { coords, c })
    }

    pub fn origin(dim: usize, c: f64) -> Self {
        Self {
            coords: vec![0.0; dim],
            c,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn curvature(&self) -> f64 {
        self.c
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        euclid_norm(&self.coords)
    }

    pub fn conformal_factor(&self) -> f64 {
        poincare::conformal_factor(&self.coords, self.c)
    }

    fn wrap(&self, coords: Vec<f64>) -> Result<Self, GeometryError> {
        Self::new(coords, self.c)
    }

    /// Componentwise negation, the Möbius inverse.
    pub fn negate(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|v| -v).collect(),
            c: self.c,
        }
    }

    pub fn mobius_add(&self, other: &Self) -> Result<Self, GeometryError> {
        check_dim(self.dim(), other.dim())?;
        self.wrap(poincare::mobius_add(&self.coords, &other.coords, self.c))
    }

    /// `M ⊗_c x` for a row-major `rows × dim` matrix.
    pub fn matvec(&self, m: &[f64], rows: usize) -> Result<Self, GeometryError> {
        check_dim(rows * self.dim(), m.len())?;
        self.wrap(poincare::matvec(m, rows, self.dim(), &self.coords, self.c))
    }

    pub fn pointwise(&self, r: &[f64]) -> Result<Self, GeometryError> {
        check_dim(self.dim(), r.len())?;
        self.wrap(poincare::pointwise(r, &self.coords, self.c))
    }

    pub fn exp0(v: &TangentVector, c: f64) -> Result<Self, GeometryError> {
        check_finite(&v.coords)?;
        Self::new(poincare::project(&poincare::exp0(&v.coords, c), c), c)
    }

    pub fn log0(&self) -> TangentVector {
        TangentVector::at_origin(poincare::log0(&self.coords, self.c))
    }

    pub fn exp_at(&self, v: &[f64]) -> Result<Self, GeometryError> {
        check_dim(self.dim(), v.len())?;
        check_finite(v)?;
        self.wrap(poincare::exp_x(&self.coords, v, self.c))
    }

    /// `log_x(y)` with `self` as the base `x`.
    pub fn log_at(&self, y: &Self) -> Result<TangentVector, GeometryError> {
        check_dim(self.dim(), y.dim())?;
        Ok(TangentVector::at(
            poincare::log_x(&self.coords, &y.coords, self.c),
            &self.coords,
        ))
    }

    /// Transports `v ∈ T_0` to the tangent space at `self`.
    pub fn transport_from_origin(&self, v: &TangentVector) -> Result<TangentVector, GeometryError> {
        check_dim(self.dim(), v.coords.len())?;
        if v.base != BasePoint::Origin {
            return Err(GeometryError::NotTangent { residual: f64::NAN });
        }
        Ok(TangentVector::at(
            poincare::transport_from_origin(&v.coords, &self.coords, self.c),
            &self.coords,
        ))
    }

    pub fn clamp(&self, r_max: f64) -> Result<Self, GeometryError> {
        if !(r_max > 0.0 && r_max <= 1.0) {
            return Err(GeometryError::ClampBound {
                value: r_max,
                range: "(0, 1]",
            });
        }
        let (coords, _) = poincare::clamp(&self.coords, r_max);
        Ok(Self { coords, c: self.c })
    }
}

/// A point of the upper sheet of the hyperboloid.
#[derive(Clone, Debug, PartialEq)]
pub struct LorentzVector {
    coords: Vec<f64>,
}

impl LorentzVector {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.len() < 2 {
            return Err(GeometryError::Dimension {
                expected: 2,
                got: coords.len(),
            });
        }
        check_finite(&coords)?;
        let drift = lorentz::inner(&coords, &coords) + 1.0;
        if drift.abs() > HYPERBOLOID_TOL || coords[0] <= 0.0 {
            return Err(GeometryError::OffHyperboloid {
                drift,
                x0: coords[0],
            });
        }
        Ok(Self { coords })
    }

    /// The point with the given spatial part; `x₀` is rebuilt exactly.
    pub fn from_spatial(spatial: &[f64]) -> Result<Self, GeometryError> {
        check_finite(spatial)?;
        Ok(Self {
            coords: lorentz::from_spatial(spatial),
        })
    }

    pub fn origin(n: usize) -> Self {
        Self {
            coords: lorentz::origin(0.0, n),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }

    /// Spatial dimension `n`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    fn wrap(coords: Vec<f64>) -> Result<Self, GeometryError> {
        Self::new(lorentz::reproject(coords))
    }

    pub fn inner(&self, other: &Self) -> f64 {
        lorentz::inner(&self.coords, &other.coords)
    }

    pub fn dist(&self, other: &Self) -> Result<f64, GeometryError> {
        check_dim(self.coords.len(), other.coords.len())?;
        let arg = -self.inner(other);
        if arg < 1.0 - ARCOSH_TOL {
            return Err(GeometryError::ArcoshDomain(arg));
        }
        Ok(lorentz::dist(&self.coords, &other.coords))
    }

    pub fn add(&self, other: &Self) -> Result<Self, GeometryError> {
        check_dim(self.coords.len(), other.coords.len())?;
        Self::wrap(lorentz::add_points(&self.coords, &other.coords))
    }

    pub fn scalar_mul(&self, r: f64) -> Result<Self, GeometryError> {
        Self::wrap(lorentz::scalar_mul(r, &self.coords))
    }

    /// `M ⊗_L x` for a row-major `rows × n` matrix on spatial coordinates.
    pub fn matvec(&self, m: &[f64], rows: usize) -> Result<Self, GeometryError> {
        check_dim(rows * self.dim(), m.len())?;
        Self::wrap(lorentz::matvec(m, rows, self.dim(), &self.coords))
    }

    pub fn negate(&self) -> Self {
        Self {
            coords: lorentz::neg(&self.coords),
        }
    }

    pub fn exp0(v: &TangentVector) -> Result<Self, GeometryError> {
        if v.base != BasePoint::Origin {
            return Err(GeometryError::NotTangent { residual: f64::NAN });
        }
        if v.coords.first().copied().unwrap_or(0.0).abs() > HYPERBOLOID_TOL {
            return Err(GeometryError::NotTangent {
                residual: v.coords[0],
            });
        }
        check_finite(&v.coords)?;
        Self::wrap(lorentz::exp0(&v.coords))
    }

    pub fn log0(&self) -> TangentVector {
        TangentVector::at_origin(lorentz::log0(&self.coords))
    }

    fn check_tangent(&self, v: &[f64]) -> Result<(), GeometryError> {
        check_dim(self.coords.len(), v.len())?;
        let residual = lorentz::inner(v, &self.coords);
        let scale = 1.0 + linalg::euclid_norm(v) * linalg::euclid_norm(&self.coords);
        if residual.abs() > HYPERBOLOID_TOL * scale {
            return Err(GeometryError::NotTangent { residual });
        }
        Ok(())
    }

    pub fn exp_at(&self, v: &[f64]) -> Result<Self, GeometryError> {
        self.check_tangent(v)?;
        Self::wrap(lorentz::exp_x(&self.coords, v))
    }

    pub fn log_at(&self, y: &Self) -> Result<TangentVector, GeometryError> {
        check_dim(self.coords.len(), y.coords.len())?;
        Ok(TangentVector::at(
            lorentz::log_x(&self.coords, &y.coords),
            &self.coords,
        ))
    }

    /// Transports `z ∈ T_self` to `T_target`.
    pub fn transport(&self, z: &[f64], target: &Self) -> Result<TangentVector, GeometryError> {
        self.check_tangent(z)?;
        check_dim(self.coords.len(), target.coords.len())?;
        Ok(TangentVector::at(
            lorentz::transport(z, &self.coords, &target.coords),
            &target.coords,
        ))
    }

    pub fn clamp(&self, l_max: f64) -> Result<Self, GeometryError> {
        if !(l_max > 0.0) {
            return Err(GeometryError::ClampBound {
                value: l_max,
                range: "(0, inf)",
            });
        }
        let (coords, _) = lorentz::clamp(&self.coords, l_max);
        Ok(Self { coords })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_membership_enforced() {
        assert!(PoincareVector::new(vec![0.6, 0.8], 1.0).is_err());
        assert!(PoincareVector::new(vec![0.6, 0.79], 1.0).is_ok());
        assert!(PoincareVector::new(vec![0.6, 0.0], 4.0).is_err());
        assert!(PoincareVector::new(vec![0.1], 0.0).is_err());
    }

    #[test]
    fn hyperboloid_membership_enforced() {
        assert!(LorentzVector::new(vec![1.0, 0.5]).is_err());
        assert!(LorentzVector::new(vec![-1.0, 0.0]).is_err());
        let x = LorentzVector::from_spatial(&[0.3, 0.4]).unwrap();
        assert!(LorentzVector::new(x.coords().to_vec()).is_ok());
    }

    #[test]
    fn clamp_bounds_validated() {
        let x = PoincareVector::new(vec![0.1, 0.2], 1.0).unwrap();
        assert!(x.clamp(0.0).is_err());
        assert!(x.clamp(1.5).is_err());
        assert_eq!(x.clamp(1.0).unwrap(), x);
        let l = LorentzVector::origin(2);
        assert!(l.clamp(-1.0).is_err());
    }

    #[test]
    fn transport_to_same_point_is_identity() {
        let x = LorentzVector::from_spatial(&[0.3, -0.7]).unwrap();
        let v = x.log_at(&LorentzVector::from_spatial(&[1.0, 0.2]).unwrap()).unwrap();
        let moved = x.transport(&v.coords, &x).unwrap();
        for (a, b) in moved.coords.iter().zip(&v.coords) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lorentz_norm_of_tangent() {
        let v = [0.0, 3.0, 4.0];
        assert!((lorentz::norm(&v) - 5.0).abs() < 1e-15);
    }
}
