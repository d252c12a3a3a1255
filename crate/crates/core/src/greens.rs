//! Fundamental solutions for the Lamé operator: the full-space Kelvin matrix
//! and the half-space Neumann function with a traction-free surface plane.
//!
//! With `C = 1/(16πμ(1−ν))` the Kelvin matrix used here is
//!
//! ```text
//! Γ_ij(x) = -C { (3-4ν) δ_ij / |x| + x_i x_j / |x|^3 }
//! ```
//!
//! and the half-space kernel decomposes into Kelvin plus image corrections,
//!
//! ```text
//! N(x, y) = Γ(x-y) + R¹(x-ỹ) + y₃ R²(x-ỹ) + y₃² R³(x-ỹ),   ỹ = (y₁, y₂, -y₃),
//! ```
//!
//! built from `f̃(η) = 1/|η|` and `g̃(η) = 1/(|η| - η₃)` with
//! `c_ν = 4(1-ν)(1-2ν)`:
//!
//! ```text
//! R¹_ij = C { -(f̃ + c_ν g̃) δ_ij - (3-4ν) η_i η_j f̃³
//!             + c_ν [δ_i3 η_j - δ_j3 (1-δ_i3) η_i] f̃ g̃
//!             + c_ν (1-δ_i3)(1-δ_j3) η_i η_j f̃ g̃² }
//! R²_ij = 2C { (3-4ν) [δ_i3 (1-δ_j3) η_j + δ_j3 (1-δ_i3) η_i] f̃³
//!              - (1-2δ_j3) δ_ij η₃ f̃³ + 3 (1-2δ_j3) η_i η_j η₃ f̃⁵ }
//! R³_ij = 2C (1-2δ_j3) { δ_ij f̃³ - 3 η_i η_j f̃⁵ }
//! ```
//!
//! `g̃` blows up only where `η₃ = |η| ≥ 0`; for cavity points (`x₃ ≤ 0`) and
//! sources strictly below the surface (`y₃ < 0`) the image argument has
//! `η₃ = x₃ + y₃ < 0`, so the bad set is unreachable and enforced as a
//! precondition rather than handled.
//!
//! Gradients are evaluated analytically (differentiating the expressions
//! above term by term); an independent Richardson finite-difference path is
//! kept for cross-checks, and the test suite pins both against a high-order
//! finite-difference oracle.

use crate::elasticity::ElasticModuli;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GreensError {
    #[error("Kelvin matrix is singular at x = 0")]
    ZeroArgument,
    #[error("image-term argument must satisfy eta_3 < 0 strictly (got {0})")]
    ImageArgumentNotBelow(f64),
    #[error("target point must satisfy x_3 <= 0 (got {0})")]
    TargetAboveSurface(f64),
    #[error("source point must lie strictly below the surface, y_3 < 0 (got {0})")]
    SourceNotBelowSurface(f64),
    #[error("coincident evaluation and source points")]
    CoincidentPoints,
    #[error("normal vector is not unit length (|n| = {0})")]
    NonUnitNormal(f64),
}

/// 3×3 displacement kernel (length per unit force), all entries finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMatrix {
    pub entries: Matrix3<f64>,
}

/// Transposed traction kernel, as applied to a boundary density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TractionKernelMatrix {
    pub entries: Matrix3<f64>,
}

/// Gradient of a kernel: `components[k][(i, j)] = ∂ N_ij / ∂ x_k`.
pub type KernelGradient = [Matrix3<f64>; 3];

// ---------------------------------------------------------------------------
// Raw kernels on the open admissible set. No precondition checks; callers in
// this crate guarantee |x - y| > 0 and x3 + y3 < 0.
// ---------------------------------------------------------------------------

#[inline]
pub(crate) fn kelvin_raw(m: &ElasticModuli, d: &Vector3<f64>) -> Matrix3<f64> {
    let c = m.kelvin_const();
    let k = 3.0 - 4.0 * m.nu();
    let r2 = d.norm_squared();
    let f = 1.0 / r2.sqrt();
    let f3 = f / r2;
    let diag = c * k * f;
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let mut v = -c * d[i] * d[j] * f3;
            if i == j {
                v -= diag;
            }
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

#[inline]
pub(crate) fn grad_kelvin_raw(m: &ElasticModuli, d: &Vector3<f64>) -> KernelGradient {
    let c = m.kelvin_const();
    let k = 3.0 - 4.0 * m.nu();
    let r2 = d.norm_squared();
    let f = 1.0 / r2.sqrt();
    let f3 = f / r2;
    let f5 = f3 / r2;
    let mut out = [Matrix3::zeros(); 3];
    for kk in 0..3 {
        for i in 0..3 {
            for j in i..3 {
                let mut v = 3.0 * c * d[i] * d[j] * d[kk] * f5;
                if i == j {
                    v += c * k * d[kk] * f3;
                }
                if i == kk {
                    v -= c * d[j] * f3;
                }
                if j == kk {
                    v -= c * d[i] * f3;
                }
                out[kk][(i, j)] = v;
                out[kk][(j, i)] = v;
            }
        }
    }
    out
}

#[inline]
fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn image_r1_raw(m: &ElasticModuli, e: &Vector3<f64>) -> Matrix3<f64> {
    let c = m.kelvin_const();
    let cn = m.c_nu();
    let k = 3.0 - 4.0 * m.nu();
    let r = e.norm();
    let f = 1.0 / r;
    let f3 = f * f * f;
    let g = 1.0 / (r - e.z);
    let g2 = g * g;
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        let di3 = delta(i, 2);
        for j in 0..3 {
            let dj3 = delta(j, 2);
            let a = di3 * e[j] - dj3 * (1.0 - di3) * e[i];
            let b = (1.0 - di3) * (1.0 - dj3) * e[i] * e[j];
            out[(i, j)] = c
                * (-(f + cn * g) * delta(i, j) - k * e[i] * e[j] * f3
                    + cn * a * f * g
                    + cn * b * f * g2);
        }
    }
    out
}

#[inline]
pub(crate) fn image_r2_raw(m: &ElasticModuli, e: &Vector3<f64>) -> Matrix3<f64> {
    let c2 = 2.0 * m.kelvin_const();
    let k = 3.0 - 4.0 * m.nu();
    let r2 = e.norm_squared();
    let f = 1.0 / r2.sqrt();
    let f3 = f / r2;
    let f5 = f3 / r2;
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        let di3 = delta(i, 2);
        for j in 0..3 {
            let dj3 = delta(j, 2);
            let sj = 1.0 - 2.0 * dj3;
            let p = di3 * (1.0 - dj3) * e[j] + dj3 * (1.0 - di3) * e[i];
            out[(i, j)] = c2
                * (k * p * f3 - sj * delta(i, j) * e.z * f3 + 3.0 * sj * e[i] * e[j] * e.z * f5);
        }
    }
    out
}

#[inline]
pub(crate) fn image_r3_raw(m: &ElasticModuli, e: &Vector3<f64>) -> Matrix3<f64> {
    let c2 = 2.0 * m.kelvin_const();
    let r2 = e.norm_squared();
    let f = 1.0 / r2.sqrt();
    let f3 = f / r2;
    let f5 = f3 / r2;
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let sj = 1.0 - 2.0 * delta(j, 2);
            out[(i, j)] = c2 * sj * (delta(i, j) * f3 - 3.0 * e[i] * e[j] * f5);
        }
    }
    out
}

pub(crate) fn grad_image_r1_raw(m: &ElasticModuli, e: &Vector3<f64>) -> KernelGradient {
    let c = m.kelvin_const();
    let cn = m.c_nu();
    let kc = 3.0 - 4.0 * m.nu();
    let r = e.norm();
    let f = 1.0 / r;
    let f3 = f * f * f;
    let f5 = f3 * f * f;
    let g = 1.0 / (r - e.z);
    let g2 = g * g;
    let mut out = [Matrix3::zeros(); 3];
    for k in 0..3 {
        let dfk = -e[k] * f3;
        let dgk = (delta(k, 2) - e[k] * f) * g2;
        let dfg = dfk * g + f * dgk;
        let dfg2 = dfk * g2 + 2.0 * f * g * dgk;
        for i in 0..3 {
            let di3 = delta(i, 2);
            for j in 0..3 {
                let dj3 = delta(j, 2);
                let a = di3 * e[j] - dj3 * (1.0 - di3) * e[i];
                let da = di3 * delta(j, k) - dj3 * (1.0 - di3) * delta(i, k);
                let b = (1.0 - di3) * (1.0 - dj3) * e[i] * e[j];
                let db = (1.0 - di3) * (1.0 - dj3) * (delta(i, k) * e[j] + delta(j, k) * e[i]);
                out[k][(i, j)] = c
                    * (-(dfk + cn * dgk) * delta(i, j)
                        - kc * ((delta(i, k) * e[j] + delta(j, k) * e[i]) * f3
                            - 3.0 * e[i] * e[j] * e[k] * f5)
                        + cn * (da * f * g + a * dfg)
                        + cn * (db * f * g2 + b * dfg2));
            }
        }
    }
    out
}

pub(crate) fn grad_image_r2_raw(m: &ElasticModuli, e: &Vector3<f64>) -> KernelGradient {
    let c2 = 2.0 * m.kelvin_const();
    let kc = 3.0 - 4.0 * m.nu();
    let r2 = e.norm_squared();
    let f = 1.0 / r2.sqrt();
    let f3 = f / r2;
    let f5 = f3 / r2;
    let f7 = f5 / r2;
    let mut out = [Matrix3::zeros(); 3];
    for k in 0..3 {
        let de3f3 = delta(k, 2) * f3 - 3.0 * e.z * e[k] * f5;
        for i in 0..3 {
            let di3 = delta(i, 2);
            for j in 0..3 {
                let dj3 = delta(j, 2);
                let sj = 1.0 - 2.0 * dj3;
                let p = di3 * (1.0 - dj3) * e[j] + dj3 * (1.0 - di3) * e[i];
                let dp = di3 * (1.0 - dj3) * delta(j, k) + dj3 * (1.0 - di3) * delta(i, k);
                let dejf5 = (delta(i, k) * e[j] * e.z
                    + delta(j, k) * e[i] * e.z
                    + delta(k, 2) * e[i] * e[j])
                    * f5
                    - 5.0 * e[i] * e[j] * e.z * e[k] * f7;
                out[k][(i, j)] = c2
                    * (kc * (dp * f3 - 3.0 * p * e[k] * f5) - sj * delta(i, j) * de3f3
                        + 3.0 * sj * dejf5);
            }
        }
    }
    out
}

pub(crate) fn grad_image_r3_raw(m: &ElasticModuli, e: &Vector3<f64>) -> KernelGradient {
    let c2 = 2.0 * m.kelvin_const();
    let r2 = e.norm_squared();
    let f = 1.0 / r2.sqrt();
    let f5 = f / (r2 * r2);
    let f7 = f5 / r2;
    let mut out = [Matrix3::zeros(); 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let sj = 1.0 - 2.0 * delta(j, 2);
                out[k][(i, j)] = c2
                    * sj
                    * (-3.0 * delta(i, j) * e[k] * f5
                        - 3.0 * (delta(i, k) * e[j] + delta(j, k) * e[i]) * f5
                        + 15.0 * e[i] * e[j] * e[k] * f7);
            }
        }
    }
    out
}

/// Sum of the three image terms of `N(x, y)` with their depth factors.
#[inline]
pub(crate) fn image_sum_raw(m: &ElasticModuli, x: &Vector3<f64>, y: &Vector3<f64>) -> Matrix3<f64> {
    let e = Vector3::new(x.x - y.x, x.y - y.y, x.z + y.z);
    image_r1_raw(m, &e) + image_r2_raw(m, &e) * y.z + image_r3_raw(m, &e) * (y.z * y.z)
}

#[inline]
pub(crate) fn grad_image_sum_raw(
    m: &ElasticModuli,
    x: &Vector3<f64>,
    y: &Vector3<f64>,
) -> KernelGradient {
    let e = Vector3::new(x.x - y.x, x.y - y.y, x.z + y.z);
    let g1 = grad_image_r1_raw(m, &e);
    let g2 = grad_image_r2_raw(m, &e);
    let g3 = grad_image_r3_raw(m, &e);
    let (y3, y32) = (y.z, y.z * y.z);
    std::array::from_fn(|k| g1[k] + g2[k] * y3 + g3[k] * y32)
}

/// `N(x, y)`, valid on the open set `x != y`, `x3 + y3 < 0`.
#[inline]
pub(crate) fn neumann_raw(m: &ElasticModuli, x: &Vector3<f64>, y: &Vector3<f64>) -> Matrix3<f64> {
    kelvin_raw(m, &(x - y)) + image_sum_raw(m, x, y)
}

#[inline]
pub(crate) fn grad_neumann_raw(
    m: &ElasticModuli,
    x: &Vector3<f64>,
    y: &Vector3<f64>,
) -> KernelGradient {
    let gk = grad_kelvin_raw(m, &(x - y));
    let gi = grad_image_sum_raw(m, x, y);
    std::array::from_fn(|k| gk[k] + gi[k])
}

/// Folds a kernel gradient into the transposed traction kernel
/// `K_{βi} = [(ℂ ∇̂_x N) n]_{iβ}`: strain of each kernel column, constitutive
/// law, contraction with the normal, transpose.
#[inline]
pub(crate) fn traction_transposed_from_grad(
    m: &ElasticModuli,
    grad: &KernelGradient,
    n: &Vector3<f64>,
) -> Matrix3<f64> {
    let (lambda, mu) = (m.lambda(), m.mu());
    let mut out = Matrix3::zeros();
    for beta in 0..3 {
        let div = grad[0][(0, beta)] + grad[1][(1, beta)] + grad[2][(2, beta)];
        let ltr = lambda * div;
        for i in 0..3 {
            // t_i = Σ_k S_ik n_k with S = λ div I + 2μ E, E_ik = ½(∂_k N_iβ + ∂_i N_kβ)
            let mut t = ltr * n[i];
            for k in 0..3 {
                t += mu * (grad[k][(i, beta)] + grad[i][(k, beta)]) * n[k];
            }
            out[(beta, i)] = t;
        }
    }
    out
}

/// One fused evaluation for boundary-integral assembly: the full and
/// Kelvin-only transposed traction kernels plus the single-layer column
/// `Nᵀ(x, y) n(x)`.
pub(crate) struct LayerEval {
    pub k_full: Matrix3<f64>,
    pub k_kelvin: Matrix3<f64>,
    pub single: Vector3<f64>,
}

#[inline]
pub(crate) fn layer_eval(
    m: &ElasticModuli,
    x: &Vector3<f64>,
    y: &Vector3<f64>,
    n: &Vector3<f64>,
) -> LayerEval {
    let gk = grad_kelvin_raw(m, &(x - y));
    let gi = grad_image_sum_raw(m, x, y);
    let gfull: KernelGradient = std::array::from_fn(|k| gk[k] + gi[k]);
    let k_kelvin = traction_transposed_from_grad(m, &gk, n);
    let k_full = traction_transposed_from_grad(m, &gfull, n);
    let nmat = neumann_raw(m, x, y);
    LayerEval {
        k_full,
        k_kelvin,
        single: nmat.transpose() * n,
    }
}

// ---------------------------------------------------------------------------
// Public, precondition-checked operations.
// ---------------------------------------------------------------------------

/// Kelvin fundamental solution `Γ(x)`.
pub fn kelvin(m: &ElasticModuli, x: &Vector3<f64>) -> Result<KernelMatrix, GreensError> {
    if x.norm_squared() == 0.0 {
        return Err(GreensError::ZeroArgument);
    }
    Ok(KernelMatrix {
        entries: kelvin_raw(m, x),
    })
}

fn check_image_arg(eta: &Vector3<f64>) -> Result<(), GreensError> {
    if eta.z < 0.0 {
        Ok(())
    } else {
        Err(GreensError::ImageArgumentNotBelow(eta.z))
    }
}

/// First image tensor `R¹(η)`; requires `η₃ < 0` strictly.
pub fn image_r1(m: &ElasticModuli, eta: &Vector3<f64>) -> Result<KernelMatrix, GreensError> {
    check_image_arg(eta)?;
    Ok(KernelMatrix {
        entries: image_r1_raw(m, eta),
    })
}

/// Second image tensor `R²(η)`; requires `η₃ < 0` strictly.
pub fn image_r2(m: &ElasticModuli, eta: &Vector3<f64>) -> Result<KernelMatrix, GreensError> {
    check_image_arg(eta)?;
    Ok(KernelMatrix {
        entries: image_r2_raw(m, eta),
    })
}

/// Third image tensor `R³(η)`; requires `η₃ < 0` strictly.
pub fn image_r3(m: &ElasticModuli, eta: &Vector3<f64>) -> Result<KernelMatrix, GreensError> {
    check_image_arg(eta)?;
    Ok(KernelMatrix {
        entries: image_r3_raw(m, eta),
    })
}

fn check_pair(x: &Vector3<f64>, y: &Vector3<f64>) -> Result<(), GreensError> {
    if x.z > 0.0 {
        return Err(GreensError::TargetAboveSurface(x.z));
    }
    if y.z >= 0.0 {
        return Err(GreensError::SourceNotBelowSurface(y.z));
    }
    if x == y {
        return Err(GreensError::CoincidentPoints);
    }
    Ok(())
}

/// Half-space Neumann function `N(x, y)` for `x₃ ≤ 0`, `y₃ < 0`, `x ≠ y`.
///
/// The image argument `x - ỹ` has third component `x₃ + y₃ < 0`, so the image
/// terms are regular everywhere on the admissible set.
pub fn neumann(
    m: &ElasticModuli,
    x: &Vector3<f64>,
    y: &Vector3<f64>,
) -> Result<KernelMatrix, GreensError> {
    check_pair(x, y)?;
    Ok(KernelMatrix {
        entries: neumann_raw(m, x, y),
    })
}

/// Analytic gradient `∂/∂x_k N_ij(x, y)`; same preconditions as [`neumann`].
pub fn grad_neumann(
    m: &ElasticModuli,
    x: &Vector3<f64>,
    y: &Vector3<f64>,
) -> Result<KernelGradient, GreensError> {
    check_pair(x, y)?;
    Ok(grad_neumann_raw(m, x, y))
}

/// Gradient of the image part by Richardson-extrapolated central differences
/// with step `1e-4 · dist(x, {y, ỹ})`, plus the analytic Kelvin gradient.
///
/// Kept as an implementation-independent cross-check of the analytic path.
pub fn grad_neumann_richardson(
    m: &ElasticModuli,
    x: &Vector3<f64>,
    y: &Vector3<f64>,
) -> Result<KernelGradient, GreensError> {
    check_pair(x, y)?;
    let ytilde = Vector3::new(y.x, y.y, -y.z);
    let h = 1e-4 * (x - y).norm().min((x - ytilde).norm());
    let img = |x: Vector3<f64>| image_sum_raw(m, &x, y);
    let mut out = grad_kelvin_raw(m, &(x - y));
    for k in 0..3 {
        let mut step = Vector3::zeros();
        step[k] = h;
        let d1 = (img(x + step) - img(x - step)) / (2.0 * h);
        let half = step * 0.5;
        let d2 = (img(x + half) - img(x - half)) / h;
        out[k] += (d2 * 4.0 - d1) / 3.0;
    }
    Ok(out)
}

/// Traction kernel `[(ℂ ∇̂_x N(x, y)) n(x)]ᵀ`; preconditions as [`neumann`]
/// plus `|n| = 1`.
pub fn traction_kernel(
    m: &ElasticModuli,
    x: &Vector3<f64>,
    y: &Vector3<f64>,
    n: &Vector3<f64>,
) -> Result<TractionKernelMatrix, GreensError> {
    check_pair(x, y)?;
    let norm = n.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(GreensError::NonUnitNormal(norm));
    }
    let grad = grad_neumann_raw(m, x, y);
    Ok(TractionKernelMatrix {
        entries: traction_transposed_from_grad(m, &grad, n),
    })
}

// ---------------------------------------------------------------------------
// Verification suite.
// ---------------------------------------------------------------------------

/// Sampling plan for [`verify_kernel_suite`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyPlan {
    /// Random surface points for the traction-free check.
    pub surface_samples: usize,
    /// Horizontal extent of surface sampling.
    pub surface_extent: f64,
    /// Source depth range (negative numbers, shallow to deep).
    pub source_depth: (f64, f64),
    /// Off-source points for the finite-difference PDE residual.
    pub pde_points: usize,
    /// Coarse step for the PDE stencil; the fine step is half of it.
    pub pde_step: f64,
    /// Points per ray for the decay-slope fits.
    pub decay_points: usize,
    /// Start and end radius for decay sampling.
    pub decay_range: (f64, f64),
    pub seed: u64,
}

impl Default for VerifyPlan {
    fn default() -> Self {
        Self {
            surface_samples: 200,
            surface_extent: 50.0,
            source_depth: (-1.0, -8.0),
            pde_points: 20,
            pde_step: 1e-2,
            decay_points: 12,
            decay_range: (10.0, 1000.0),
            seed: 7,
        }
    }
}

/// Diagnostics from [`verify_kernel_suite`].
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    /// Max over samples of |traction of N at the surface| relative to
    /// |N| / dist at the same pair.
    pub max_surface_traction_rel: f64,
    /// PDE residual with the coarse step.
    pub pde_residual_coarse: f64,
    /// PDE residual with the halved step.
    pub pde_residual_fine: f64,
    /// coarse / fine; ≈ 4 for a second-order consistent stencil.
    pub pde_convergence_ratio: f64,
    /// Fitted decay slope of |N| along rays (expected ≈ -1).
    pub decay_slope_kernel: f64,
    /// Fitted decay slope of |∇N| along rays (expected ≈ -2).
    pub decay_slope_gradient: f64,
}

/// Second-order finite-difference residual of `div(ℂ ∇̂ N(·, y))` at `x`,
/// Frobenius over components and columns.
pub fn pde_residual(m: &ElasticModuli, x: &Vector3<f64>, y: &Vector3<f64>, h: f64) -> f64 {
    let nf = |x: Vector3<f64>| neumann_raw(m, &x, y);
    let at = |k: usize, s: f64| {
        let mut p = *x;
        p[k] += s;
        p
    };
    let base = nf(*x);
    let mut acc = 0.0;
    for beta in 0..3 {
        for i in 0..3 {
            // μ Δ N_iβ
            let mut lap = 0.0;
            for k in 0..3 {
                lap += (nf(at(k, h))[(i, beta)] - 2.0 * base[(i, beta)] + nf(at(k, -h))[(i, beta)])
                    / (h * h);
            }
            // (λ+μ) ∂_i Σ_k ∂_k N_kβ by crossed central differences
            let mut graddiv = 0.0;
            for k in 0..3 {
                let mut pp = *x;
                pp[i] += h;
                pp[k] += h;
                let mut pm = *x;
                pm[i] += h;
                pm[k] -= h;
                let mut mp = *x;
                mp[i] -= h;
                mp[k] += h;
                let mut mm = *x;
                mm[i] -= h;
                mm[k] -= h;
                graddiv += (nf(pp)[(k, beta)] - nf(pm)[(k, beta)] - nf(mp)[(k, beta)]
                    + nf(mm)[(k, beta)])
                    / (4.0 * h * h);
            }
            let r = m.mu() * lap + (m.lambda() + m.mu()) * graddiv;
            acc += r * r;
        }
    }
    acc.sqrt()
}

fn frob_grad(g: &KernelGradient) -> f64 {
    g.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Runs the kernel diagnostics: surface traction-free residual, PDE residual
/// convergence under step halving, and far-field decay-slope fits for |N|
/// (≈ -1) and |∇N| (≈ -2). Always produces a report.
pub fn verify_kernel_suite(m: &ElasticModuli, plan: &VerifyPlan) -> VerifyReport {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(plan.seed);

    // (a) traction of the kernel columns against e3 at the surface plane.
    let mut max_rel: f64 = 0.0;
    let e3 = Vector3::z();
    for _ in 0..plan.surface_samples {
        let x = Vector3::new(
            rng.random_range(-plan.surface_extent..plan.surface_extent),
            rng.random_range(-plan.surface_extent..plan.surface_extent),
            0.0,
        );
        let y = Vector3::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(plan.source_depth.1..plan.source_depth.0),
        );
        let grad = grad_neumann_raw(m, &x, &y);
        let t = traction_transposed_from_grad(m, &grad, &e3);
        let scale = neumann_raw(m, &x, &y).norm() / (x - y).norm();
        max_rel = max_rel.max(t.norm() / scale);
    }

    // (b) PDE residual at off-source points, two steps.
    let y = Vector3::new(0.0, 0.0, -4.0);
    let mut coarse = 0.0;
    let mut fine = 0.0;
    for _ in 0..plan.pde_points {
        let x = loop {
            let cand = Vector3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-7.0..-1.0),
            );
            if (cand - y).norm() > 1.0 {
                break cand;
            }
        };
        coarse += pde_residual(m, &x, &y, plan.pde_step);
        fine += pde_residual(m, &x, &y, plan.pde_step * 0.5);
    }

    // (c) decay fits along rays.
    let mut lx = Vec::new();
    let mut ln = Vec::new();
    let mut lg = Vec::new();
    let yy = Vector3::new(0.3, -0.2, -2.0);
    let dirs = [
        Vector3::new(1.0, 0.4, -0.6).normalize(),
        Vector3::new(-0.5, 1.0, -0.3).normalize(),
    ];
    let (r0, r1) = plan.decay_range;
    for dir in dirs {
        for t in 0..plan.decay_points {
            let s = r0 * (r1 / r0).powf(t as f64 / (plan.decay_points - 1) as f64);
            let x = dir * s;
            lx.push(x.norm().ln());
            ln.push(neumann_raw(m, &x, &yy).norm().ln());
            lg.push(frob_grad(&grad_neumann_raw(m, &x, &yy)).ln());
        }
    }

    VerifyReport {
        max_surface_traction_rel: max_rel,
        pde_residual_coarse: coarse / plan.pde_points as f64,
        pde_residual_fine: fine / plan.pde_points as f64,
        pde_convergence_ratio: coarse / fine,
        decay_slope_kernel: fit_slope(&lx, &ln),
        decay_slope_gradient: fit_slope(&lx, &lg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::ElasticModuli;
    use std::f64::consts::PI;

    fn quarter() -> ElasticModuli {
        // λ = μ = 1 gives ν = 1/4 and C = 1/(12π)
        ElasticModuli::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn kelvin_hand_value() {
        let m = quarter();
        let g = kelvin(&m, &Vector3::x()).unwrap().entries;
        // Γ11 = -C(2 + 1) = -1/(4π)
        assert!((g[(0, 0)] + 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((g[(1, 1)] + 2.0 / (12.0 * PI)).abs() < 1e-15);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn kelvin_is_even_and_homogeneous() {
        let m = quarter();
        let x = Vector3::new(0.3, -1.2, 0.7);
        let a = kelvin(&m, &x).unwrap().entries;
        let b = kelvin(&m, &(-x)).unwrap().entries;
        assert_eq!(a, b);
        let c = kelvin(&m, &(x * 2.0)).unwrap().entries;
        assert!((c * 2.0 - a).abs().max() < 1e-15);
    }

    #[test]
    fn kelvin_rejects_origin() {
        let m = quarter();
        assert_eq!(
            kelvin(&m, &Vector3::zeros()),
            Err(GreensError::ZeroArgument)
        );
    }

    #[test]
    fn r3_hand_values() {
        let m = quarter();
        let e = Vector3::new(0.0, 0.0, -1.0);
        let r = image_r3(&m, &e).unwrap().entries;
        assert!((r[(0, 0)] - 1.0 / (6.0 * PI)).abs() < 1e-15);
        assert!((r[(2, 2)] - 1.0 / (3.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn image_homogeneity() {
        let m = quarter();
        let e = Vector3::new(0.4, -0.9, -1.3);
        let r3a = image_r3(&m, &e).unwrap().entries;
        let r3b = image_r3(&m, &(e * 2.0)).unwrap().entries;
        assert!((r3b * 8.0 - r3a).abs().max() < 1e-14 * r3a.abs().max());
        let r2a = image_r2(&m, &e).unwrap().entries;
        let r2b = image_r2(&m, &(e * 2.0)).unwrap().entries;
        assert!((r2b * 4.0 - r2a).abs().max() < 1e-14 * r2a.abs().max());
    }

    #[test]
    fn image_terms_reject_nonnegative_eta3() {
        let m = quarter();
        for bad in [0.0, 0.5] {
            let e = Vector3::new(1.0, 0.0, bad);
            assert!(image_r1(&m, &e).is_err());
            assert!(image_r2(&m, &e).is_err());
            assert!(image_r3(&m, &e).is_err());
        }
    }

    #[test]
    fn neumann_preconditions() {
        let m = quarter();
        let below = Vector3::new(0.0, 0.0, -2.0);
        assert!(neumann(&m, &Vector3::new(0.0, 0.0, 0.1), &below).is_err());
        assert!(neumann(&m, &below, &Vector3::new(1.0, 0.0, 0.0)).is_err());
        assert!(neumann(&m, &below, &below).is_err());
        // x on the surface plane with y at depth is fine and finite
        let n = neumann(&m, &Vector3::new(3.0, 1.0, 0.0), &below)
            .unwrap()
            .entries;
        assert!(n.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn decomposition_exactness() {
        let m = quarter();
        let x = Vector3::new(0.7, -0.2, -1.5);
        let y = Vector3::new(-0.4, 0.9, -3.0);
        let ytilde = Vector3::new(y.x, y.y, -y.z);
        let e = x - ytilde;
        let total = neumann(&m, &x, &y).unwrap().entries;
        let sum = kelvin(&m, &(x - y)).unwrap().entries
            + image_r1(&m, &e).unwrap().entries
            + image_r2(&m, &e).unwrap().entries * y.z
            + image_r3(&m, &e).unwrap().entries * (y.z * y.z);
        // identical terms, summation order differs: at most a couple of ulps
        assert!((total - sum).abs().max() <= 1e-15 * total.abs().max());
    }

    #[test]
    fn neumann_approaches_kelvin_at_depth() {
        let m = quarter();
        let sep = Vector3::new(0.8, 0.3, 0.4);
        let mut rel = Vec::new();
        for depth in [10.0, 100.0, 1000.0] {
            let y = Vector3::new(0.0, 0.0, -depth);
            let x = y + sep;
            let n = neumann(&m, &x, &y).unwrap().entries;
            let g = kelvin(&m, &sep).unwrap().entries;
            rel.push((n - g).norm() / g.norm());
        }
        // O(1/depth) convergence: each decade gains at least 5x
        assert!(rel[1] < rel[0] / 5.0, "{rel:?}");
        assert!(rel[2] < rel[1] / 5.0, "{rel:?}");
    }

    #[test]
    fn kelvin_gradient_homogeneity_and_antisymmetry() {
        let m = quarter();
        let x = Vector3::new(0.5, -0.3, 0.9);
        let ga = grad_kelvin_raw(&m, &x);
        let gb = grad_kelvin_raw(&m, &(x * 2.0));
        let gneg = grad_kelvin_raw(&m, &(-x));
        for k in 0..3 {
            assert!((gb[k] * 4.0 - ga[k]).abs().max() < 1e-14);
            assert!((gneg[k] + ga[k]).abs().max() < 1e-14);
        }
    }

    /// 6th-order central finite differences, the independent gradient oracle.
    fn grad_fd6(m: &ElasticModuli, x: &Vector3<f64>, y: &Vector3<f64>, h: f64) -> KernelGradient {
        let w = [-1.0, 9.0, -45.0, 45.0, -9.0, 1.0];
        let o = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
        std::array::from_fn(|k| {
            let mut acc = Matrix3::zeros();
            for t in 0..6 {
                let mut p = *x;
                p[k] += o[t] * h;
                acc += neumann_raw(m, &p, y) * w[t];
            }
            acc / (60.0 * h)
        })
    }

    #[test]
    fn analytic_gradient_matches_fd_oracle() {
        use rand::{RngExt, SeedableRng};
        let m = ElasticModuli::new(2.0, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = Vector3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-8.0..-0.5),
            );
            let y = Vector3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-8.0..-0.5),
            );
            if (x - y).norm() < 0.3 {
                continue;
            }
            let ga = grad_neumann(&m, &x, &y).unwrap();
            let gf = grad_fd6(&m, &x, &y, 1e-3 * (x - y).norm());
            let scale: f64 = gf.iter().map(|v| v.abs().max()).fold(0.0, f64::max);
            for k in 0..3 {
                assert!(
                    (ga[k] - gf[k]).abs().max() <= 1e-7 * scale,
                    "k={k} x={x:?} y={y:?}"
                );
            }
        }
    }

    #[test]
    fn richardson_gradient_agrees_with_analytic() {
        let m = quarter();
        let x = Vector3::new(1.1, 0.2, -2.4);
        let y = Vector3::new(-0.3, 0.8, -4.0);
        let ga = grad_neumann(&m, &x, &y).unwrap();
        let gr = grad_neumann_richardson(&m, &x, &y).unwrap();
        let scale: f64 = ga.iter().map(|v| v.abs().max()).fold(0.0, f64::max);
        for k in 0..3 {
            assert!((ga[k] - gr[k]).abs().max() <= 1e-8 * scale);
        }
    }

    #[test]
    fn traction_kernel_vanishes_on_surface() {
        let m = quarter();
        let x = Vector3::new(4.0, -7.0, 0.0);
        let y = Vector3::new(0.5, 0.3, -2.0);
        let t = traction_kernel(&m, &x, &y, &Vector3::z()).unwrap().entries;
        let scale = neumann_raw(&m, &x, &y).norm() / (x - y).norm();
        assert!(t.norm() <= 1e-12 * scale, "traction {:.3e}", t.norm());
    }

    #[test]
    fn traction_kernel_kelvin_homogeneity() {
        // The Kelvin contribution scales with degree -2.
        let m = quarter();
        let n = Vector3::new(0.0, 0.6, 0.8);
        let d = Vector3::new(0.4, 0.1, -0.8);
        let a = traction_transposed_from_grad(&m, &grad_kelvin_raw(&m, &d), &n);
        let b = traction_transposed_from_grad(&m, &grad_kelvin_raw(&m, &(d * 2.0)), &n);
        assert!((b * 4.0 - a).abs().max() < 1e-13 * a.abs().max());
    }

    #[test]
    fn traction_kernel_matches_fd_on_random_pairs() {
        use rand::{RngExt, SeedableRng};
        let m = ElasticModuli::new(1.5, 0.8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = Vector3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-6.0..-0.5),
            );
            let y = Vector3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-6.0..-0.5),
            );
            if (x - y).norm() < 0.5 {
                continue;
            }
            let n = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let t = traction_kernel(&m, &x, &y, &n).unwrap().entries;
            let gf = grad_fd6(&m, &x, &y, 1e-3 * (x - y).norm());
            let tf = traction_transposed_from_grad(&m, &gf, &n);
            assert!((t - tf).abs().max() <= 1e-6 * tf.abs().max());
        }
    }

    #[test]
    fn reciprocity_on_random_pairs() {
        use rand::{RngExt, SeedableRng};
        let m = ElasticModuli::new(2.0, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = Vector3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-9.0..-0.1),
            );
            let y = Vector3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-9.0..-0.1),
            );
            if (x - y).norm() < 1e-3 {
                continue;
            }
            let a = neumann(&m, &x, &y).unwrap().entries;
            let b = neumann(&m, &y, &x).unwrap().entries.transpose();
            assert!((a - b).norm() <= 1e-10 * a.norm());
        }
    }

    #[test]
    fn verify_suite_defaults_pass() {
        let m = quarter();
        let plan = VerifyPlan {
            surface_samples: 50,
            pde_points: 5,
            ..VerifyPlan::default()
        };
        let rep = verify_kernel_suite(&m, &plan);
        assert!(rep.max_surface_traction_rel < 1e-10);
        assert!((rep.decay_slope_kernel + 1.0).abs() < 0.1);
        assert!((rep.decay_slope_gradient + 2.0).abs() < 0.1);
        assert!(rep.pde_convergence_ratio > 3.0 && rep.pde_convergence_ratio < 5.0);
    }
}
