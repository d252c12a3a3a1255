//! Isotropic linear elasticity: admissible Lamé moduli, the constitutive law
//! `ℂE = λ tr(E) I + 2μ E`, tractions, and the auxiliary linear field
//! `ū(x) = p/(3λ+2μ) · x` whose traction on any surface is exactly `p·n`.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Absolute tolerance for the symmetry precondition on strain input.
pub const STRAIN_SYMMETRY_TOL: f64 = 1e-12;
/// Absolute tolerance for the unit-length precondition on normals.
pub const UNIT_NORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum ElasticityError {
    #[error("inadmissible Lamé parameters: require mu > 0 and 3*lambda + 2*mu > 0 (got lambda = {lambda}, mu = {mu})")]
    InadmissibleModuli { lambda: f64, mu: f64 },
    #[error("pressure must be strictly positive (got {0})")]
    NonPositivePressure(f64),
    #[error("strain tensor is not symmetric within {STRAIN_SYMMETRY_TOL:e} (max asymmetry {0:e})")]
    AsymmetricStrain(f64),
    #[error("normal vector is not unit length within {UNIT_NORMAL_TOL:e} (|n| = {0})")]
    NonUnitNormal(f64),
}

/// Lamé parameters of a homogeneous isotropic medium together with the
/// derived constants used by the half-space kernels.
///
/// Admissibility (`mu > 0`, `3λ + 2μ > 0`) is enforced at construction so the
/// kernel evaluations stay branch-free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticModuli {
    lambda: f64,
    mu: f64,
    nu: f64,
    xi0: f64,
    kelvin_const: f64,
    c_nu: f64,
}

impl ElasticModuli {
    pub fn new(lambda: f64, mu: f64) -> Result<Self, ElasticityError> {
        if !(mu > 0.0 && 3.0 * lambda + 2.0 * mu > 0.0)
            || !lambda.is_finite()
            || !mu.is_finite()
        {
            return Err(ElasticityError::InadmissibleModuli { lambda, mu });
        }
        let nu = lambda / (2.0 * (lambda + mu));
        Ok(Self {
            lambda,
            mu,
            nu,
            xi0: (2.0 * mu).min(2.0 * mu + 3.0 * lambda),
            kelvin_const: 1.0 / (16.0 * std::f64::consts::PI * mu * (1.0 - nu)),
            c_nu: 4.0 * (1.0 - nu) * (1.0 - 2.0 * nu),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Poisson ratio `ν = λ / (2(λ+μ))`; strictly below 1/2 for admissible moduli.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Strong-convexity constant `ξ0 = min{2μ, 2μ+3λ}` of the elastic tensor.
    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    /// `C_{μ,ν} = 1/(16πμ(1−ν))`, the prefactor of the Kelvin matrix.
    pub fn kelvin_const(&self) -> f64 {
        self.kelvin_const
    }

    /// `c_ν = 4(1−ν)(1−2ν)`, appearing in the half-space image terms.
    pub fn c_nu(&self) -> f64 {
        self.c_nu
    }

    /// Bulk-like combination `3λ + 2μ` (trace response of ℂ).
    pub fn trace_modulus(&self) -> f64 {
        3.0 * self.lambda + 2.0 * self.mu
    }
}

/// Uniform cavity pressure, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pressure(f64);

impl Pressure {
    pub fn new(p: f64) -> Result<Self, ElasticityError> {
        if p > 0.0 && p.is_finite() {
            Ok(Self(p))
        } else {
            Err(ElasticityError::NonPositivePressure(p))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Applies the isotropic elastic tensor: `ℂE = λ tr(E) I + 2μ E`.
///
/// The input must be symmetric within [`STRAIN_SYMMETRY_TOL`].
pub fn isotropic_stress(
    moduli: &ElasticModuli,
    strain: &Matrix3<f64>,
) -> Result<Matrix3<f64>, ElasticityError> {
    let asym = (strain - strain.transpose()).abs().max();
    if asym > STRAIN_SYMMETRY_TOL {
        return Err(ElasticityError::AsymmetricStrain(asym));
    }
    Ok(isotropic_stress_unchecked(moduli, strain))
}

/// Constitutive law without the symmetry check, for hot loops that construct
/// the strain symmetrically by hand.
#[inline]
pub(crate) fn isotropic_stress_unchecked(
    moduli: &ElasticModuli,
    strain: &Matrix3<f64>,
) -> Matrix3<f64> {
    let tr = strain.trace();
    let mut out = strain * (2.0 * moduli.mu);
    out[(0, 0)] += moduli.lambda * tr;
    out[(1, 1)] += moduli.lambda * tr;
    out[(2, 2)] += moduli.lambda * tr;
    out
}

/// Traction vector `stress · n` for a unit normal `n`.
pub fn traction(
    stress: &Matrix3<f64>,
    normal: &Vector3<f64>,
) -> Result<Vector3<f64>, ElasticityError> {
    let norm = normal.norm();
    if (norm - 1.0).abs() > UNIT_NORMAL_TOL {
        return Err(ElasticityError::NonUnitNormal(norm));
    }
    Ok(stress * normal)
}

/// The auxiliary field `ū(x) = p/(3λ+2μ) x`.
///
/// Its strain is the constant isotropic tensor `p/(3λ+2μ) I`, so its traction
/// against any unit normal is exactly `p·n`; subtracting a multiple of it
/// homogenizes the cavity boundary condition.
pub fn ubar(moduli: &ElasticModuli, p: Pressure, x: &Vector3<f64>) -> Vector3<f64> {
    x * (p.value() / moduli.trace_modulus())
}

/// Strain of [`ubar`]: the constant tensor `p/(3λ+2μ) I`.
pub fn ubar_strain(moduli: &ElasticModuli, p: Pressure) -> Matrix3<f64> {
    Matrix3::identity() * (p.value() / moduli.trace_modulus())
}
