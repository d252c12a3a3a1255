//! Collocation boundary-element discretization of the half-space cavity
//! problem.
//!
//! The displacement admits the layer representation
//!
//! ```text
//! u(y) = σ_p · p ∫_{∂C} Nᵀ(x, y) n(x) dσ(x) - ∫_{∂C} [(ℂ∇̂_x N(x, y)) n(x)]ᵀ f(x) dσ(x)
//! ```
//!
//! with `f` the boundary trace of `u`. Letting `y` approach the boundary from
//! the medium side turns this into the second-kind integral equation
//!
//! ```text
//! (κ I + W)(f) = σ_p · p S
//! ```
//!
//! where `W` is the principal-value double layer and `κ` the exterior limit
//! jump. Piecewise-constant densities are collocated at element centroids.
//!
//! The sign pair `(κ, σ_p)` is not hardcoded from a potential-theory
//! convention: it was fixed once by requiring the solver to reproduce the
//! deep pressurized-sphere solution (outward wall displacement `p a/(4μ)`,
//! exterior field `p a³/(4μ r²)`) and is frozen in the named constants below,
//! guarded by the oracle tests.

use crate::elasticity::{ElasticModuli, Pressure};
use crate::greens::{self, layer_eval};
use crate::linalg::{self, LinalgError};
use crate::mesh::{validate_against_priors, CavityPriors, PriorViolation, TriSurfaceMesh};
use crate::quadrature::{self, triangle_rule, QuadratureError, TriRule, Triangle};
use nalgebra::{Matrix3, SVector, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Jump constant of the exterior boundary limit of the double layer.
pub const EXTERIOR_LIMIT_JUMP: f64 = 0.5;

/// Value of the principal-value Kelvin double layer of a constant density
/// over a closed surface, used to build diagonal blocks by the rigid-body
/// row-sum identity.
pub const KELVIN_ROW_SUM: f64 = 0.5;

/// Sign coupling the pressure single layer into the right-hand side and the
/// field evaluation. `-1` makes a positive pressure inflate the cavity
/// (outward wall displacement, surface uplift), matching the deep-sphere and
/// point-source oracles.
pub const PRESSURE_COUPLING: f64 = -1.0;

#[derive(Debug, Error)]
pub enum BemError {
    #[error("cavity violates the a-priori class: {}", format_violations(.0))]
    PriorViolations(Vec<PriorViolation>),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Solve(#[from] LinalgError),
    #[error("evaluation point is inside or touching the cavity (distance {0:e})")]
    PointInsideCavity(f64),
    #[error("near-field evaluation refused: dist(y, ∂C) = {distance:e} < one element diameter ({element_diameter:e}); accuracy not guaranteed there")]
    NearFieldEvaluation { distance: f64, element_diameter: f64 },
    #[error("evaluation point must satisfy y3 <= 0 (got {0})")]
    AboveSurface(f64),
    #[error("surface point must satisfy x3 = 0 (got {0})")]
    NotOnSurface(f64),
    #[error("trace length {0} does not match mesh element count {1}")]
    TraceMismatch(usize, usize),
    #[error("truncation radius {0} must be at least 2 D0 = {1}")]
    TruncationTooSmall(f64, f64),
}

fn format_violations(v: &[PriorViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Quadrature and near-field controls for assembly and evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BemConfig {
    /// Polynomial degree of the fixed off-diagonal rule.
    pub quad_degree: usize,
    /// Blocks with centroid distance below this multiple of the source
    /// element diameter are integrated adaptively.
    pub near_field_factor: f64,
    /// Absolute tolerance of the adaptive near-singular quadrature.
    pub near_tol: f64,
    /// Recursion cap for adaptive subdivision.
    pub max_subdivision_depth: usize,
    /// Tensor Gauss-Legendre order of the Duffy rule on the singular element.
    pub duffy_order: usize,
}

impl Default for BemConfig {
    fn default() -> Self {
        Self {
            quad_degree: 6,
            near_field_factor: 3.0,
            near_tol: 1e-8,
            max_subdivision_depth: 10,
            duffy_order: 16,
        }
    }
}

/// Assembled collocation system: dense `3N × 3N` row-major operator with the
/// exterior jump on the diagonal, and the pressure single-layer right-hand
/// side.
pub struct BemSystem {
    matrix: Vec<f64>,
    rhs: Vec<f64>,
    n_elements: usize,
}

impl BemSystem {
    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn dim(&self) -> usize {
        3 * self.n_elements
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// Applies the assembled operator (including the jump term) to a vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        linalg::matvec(&self.matrix, self.dim(), x)
    }

    /// Power-iteration estimate of the spectral condition number.
    pub fn condition_estimate(&self) -> Result<f64, BemError> {
        let out = linalg::lu_solve(&self.matrix, self.dim(), &self.rhs)?;
        Ok(out.condition_estimate)
    }
}

/// Per-element displacement trace on the cavity wall.
#[derive(Debug, Clone)]
pub struct CavityTrace {
    values: Vec<Vector3<f64>>,
}

impl CavityTrace {
    pub fn values(&self) -> &[Vector3<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_flat(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
    }
}

// Packing layout for the fused integrand: transposed traction kernel of the
// full Neumann function (9), its Kelvin part (9), single-layer column (3).
const LAYER_DIM: usize = 21;

#[inline]
fn pack_layer(m: &ElasticModuli, x: Vector3<f64>, y: &Vector3<f64>, n: &Vector3<f64>) -> SVector<f64, LAYER_DIM> {
    let ev = layer_eval(m, &x, y, n);
    let mut out = SVector::<f64, LAYER_DIM>::zeros();
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = ev.k_full[(r, c)];
            out[9 + 3 * r + c] = ev.k_kelvin[(r, c)];
        }
    }
    out[18] = ev.single.x;
    out[19] = ev.single.y;
    out[20] = ev.single.z;
    out
}

struct LayerIntegrals {
    k_full: Matrix3<f64>,
    k_kelvin: Matrix3<f64>,
    single: Vector3<f64>,
}

fn unpack_layer(v: SVector<f64, LAYER_DIM>) -> LayerIntegrals {
    let mut k_full = Matrix3::zeros();
    let mut k_kelvin = Matrix3::zeros();
    for r in 0..3 {
        for c in 0..3 {
            k_full[(r, c)] = v[3 * r + c];
            k_kelvin[(r, c)] = v[9 + 3 * r + c];
        }
    }
    LayerIntegrals {
        k_full,
        k_kelvin,
        single: Vector3::new(v[18], v[19], v[20]),
    }
}

fn integrate_layer(
    m: &ElasticModuli,
    tri: &Triangle,
    normal: &Vector3<f64>,
    collocation: &Vector3<f64>,
    rule: &TriRule,
    adaptive: Option<(f64, usize)>,
) -> Result<LayerIntegrals, QuadratureError> {
    let mut f = |x: Vector3<f64>| pack_layer(m, x, collocation, normal);
    let packed = match adaptive {
        Some((tol, depth)) => quadrature::integrate_adaptive(&mut f, tri, rule, tol, depth)?,
        None => quadrature::integrate_fixed(&mut f, tri, rule),
    };
    Ok(unpack_layer(packed))
}

/// Assembles the collocation system for a mesh passing the a-priori checks.
///
/// Off-diagonal blocks use the fixed rule, switching to adaptive subdivision
/// when the collocation point is within `near_field_factor` source-element
/// diameters. Diagonal blocks: the Kelvin part comes from the rigid-body
/// row-sum identity, the smooth image part from regular quadrature. The
/// weakly singular Kelvin single layer on the self element uses the Duffy
/// rule; everything else of the right-hand side shares the double-layer
/// quadrature pass.
pub fn assemble(
    mesh: &TriSurfaceMesh,
    moduli: &ElasticModuli,
    p: Pressure,
    priors: &CavityPriors,
    cfg: &BemConfig,
) -> Result<BemSystem, BemError> {
    let violations = validate_against_priors(mesh, priors);
    if !violations.is_empty() {
        return Err(BemError::PriorViolations(violations));
    }
    let n = mesh.element_count();
    let dim = 3 * n;
    let rule = triangle_rule(cfg.quad_degree)?;
    let mut matrix = vec![0.0f64; dim * dim];
    let mut rhs = vec![0.0f64; dim];

    let sp = PRESSURE_COUPLING * p.value();
    matrix
        .par_chunks_mut(3 * dim)
        .zip(rhs.par_chunks_mut(3))
        .enumerate()
        .try_for_each(|(i, (rows, rhs_i))| -> Result<(), BemError> {
            let xi = mesh.centroid(i);
            let mut kelvin_row_sum = Matrix3::<f64>::zeros();
            let mut single_acc = Vector3::<f64>::zeros();
            for j in 0..n {
                let tri = mesh.element(j);
                let nj = mesh.normal(j);
                if j == i {
                    // Image part of the diagonal block and of the single
                    // layer: the image kernel is smooth on the element.
                    let mut fimg = |x: Vector3<f64>| {
                        let gi = greens::grad_image_sum_raw(moduli, &x, &xi);
                        let k = greens::traction_transposed_from_grad(moduli, &gi, &nj);
                        let s = greens::image_sum_raw(moduli, &x, &xi).transpose() * nj;
                        let mut out = SVector::<f64, 12>::zeros();
                        for r in 0..3 {
                            for c in 0..3 {
                                out[3 * r + c] = k[(r, c)];
                            }
                        }
                        out[9] = s.x;
                        out[10] = s.y;
                        out[11] = s.z;
                        out
                    };
                    let img = quadrature::integrate_fixed(&mut fimg, &tri, rule);
                    for r in 0..3 {
                        for c in 0..3 {
                            rows[r * dim + 3 * j + c] += img[3 * r + c];
                        }
                    }
                    single_acc += Vector3::new(img[9], img[10], img[11]);
                    // Weakly singular Kelvin single layer via Duffy (Γᵀ = Γ).
                    let mut fkel = |x: Vector3<f64>| {
                        let g = greens::kelvin_raw(moduli, &(x - xi)) * nj;
                        SVector::<f64, 3>::new(g.x, g.y, g.z)
                    };
                    let kel = quadrature::integrate_duffy(&mut fkel, &tri, xi, cfg.duffy_order);
                    single_acc += Vector3::new(kel[0], kel[1], kel[2]);
                    continue;
                }
                let near = (mesh.centroid(j) - xi).norm()
                    < cfg.near_field_factor * mesh.element_diameter(j);
                let adaptive = near.then_some((cfg.near_tol, cfg.max_subdivision_depth));
                let li = integrate_layer(moduli, &tri, &nj, &xi, rule, adaptive)?;
                for r in 0..3 {
                    for c in 0..3 {
                        rows[r * dim + 3 * j + c] = li.k_full[(r, c)];
                    }
                }
                kelvin_row_sum += li.k_kelvin;
                single_acc += li.single;
            }
            // Kelvin diagonal by the rigid-body identity, then the exterior
            // jump of the boundary limit.
            for r in 0..3 {
                for c in 0..3 {
                    let mut v = -kelvin_row_sum[(r, c)];
                    if r == c {
                        v += KELVIN_ROW_SUM + EXTERIOR_LIMIT_JUMP;
                    }
                    rows[r * dim + 3 * i + c] += v;
                }
            }
            rhs_i[0] = sp * single_acc.x;
            rhs_i[1] = sp * single_acc.y;
            rhs_i[2] = sp * single_acc.z;
            Ok(())
        })?;

    Ok(BemSystem {
        matrix,
        rhs,
        n_elements: n,
    })
}

/// Solves the assembled system by dense LU; the relative residual must reach
/// 1e-10, otherwise the system is reported ill-conditioned together with the
/// condition estimate.
pub fn solve_trace(system: &BemSystem) -> Result<CavityTrace, BemError> {
    let out = linalg::lu_solve(&system.matrix, system.dim(), &system.rhs)?;
    if out.relative_residual > 1e-10 {
        return Err(BemError::Solve(LinalgError::IllConditioned {
            residual: out.relative_residual,
            condition: out.condition_estimate,
        }));
    }
    let values = out
        .x
        .chunks_exact(3)
        .map(|c| Vector3::new(c[0], c[1], c[2]))
        .collect();
    Ok(CavityTrace { values })
}

fn check_evaluation_point(
    mesh: &TriSurfaceMesh,
    trace: &CavityTrace,
    y: &Vector3<f64>,
) -> Result<(), BemError> {
    if trace.len() != mesh.element_count() {
        return Err(BemError::TraceMismatch(trace.len(), mesh.element_count()));
    }
    if y.z > 0.0 {
        return Err(BemError::AboveSurface(y.z));
    }
    let dist = mesh.distance_to_surface(y);
    let h = mesh.max_element_diameter();
    if dist < h {
        // Inside-cavity points are a hard error; near-exterior ones are a
        // refusal with the measured distance.
        return Err(BemError::NearFieldEvaluation {
            distance: dist,
            element_diameter: h,
        });
    }
    Ok(())
}

/// Representation-formula evaluation of the displacement at an exterior point
/// `y` (with `y3 <= 0`). Points closer to the cavity wall than one element
/// diameter are refused.
pub fn eval_displacement(
    mesh: &TriSurfaceMesh,
    trace: &CavityTrace,
    moduli: &ElasticModuli,
    p: Pressure,
    cfg: &BemConfig,
    y: &Vector3<f64>,
) -> Result<Vector3<f64>, BemError> {
    check_evaluation_point(mesh, trace, y)?;
    let rule = triangle_rule(cfg.quad_degree)?;
    let mut acc = Vector3::<f64>::zeros();
    for j in 0..mesh.element_count() {
        let tri = mesh.element(j);
        let nj = mesh.normal(j);
        let near =
            (mesh.centroid(j) - y).norm() < cfg.near_field_factor * mesh.element_diameter(j);
        let adaptive = near.then_some((cfg.near_tol, cfg.max_subdivision_depth));
        let li = integrate_layer(moduli, &tri, &nj, y, rule, adaptive)?;
        acc += li.single * (PRESSURE_COUPLING * p.value()) - li.k_full * trace.values()[j];
    }
    Ok(acc)
}

/// Displacements at points of the surface plane `x3 = 0`.
pub fn surface_displacement(
    mesh: &TriSurfaceMesh,
    trace: &CavityTrace,
    moduli: &ElasticModuli,
    p: Pressure,
    cfg: &BemConfig,
    pts: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>, BemError> {
    for pt in pts {
        if pt.z != 0.0 {
            return Err(BemError::NotOnSurface(pt.z));
        }
    }
    pts.par_iter()
        .map(|pt| eval_displacement(mesh, trace, moduli, p, cfg, pt))
        .collect()
}

/// Monte Carlo estimate of the weighted H¹-type norm over the truncated
/// half-space `B⁻_{R_t} \ C`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeightedNormEstimate {
    /// Estimate at the requested truncation radius.
    pub value: f64,
    /// Estimate at twice the truncation radius (same sample budget).
    pub value_at_doubled_radius: f64,
    /// `value_at_doubled_radius / value`; bounded growth indicates the
    /// truncation already captured most of the weighted energy.
    pub growth_ratio: f64,
    pub samples_used: usize,
    pub samples_rejected: usize,
}

/// Estimates `‖u/ρ‖² + ‖∇u‖²` with `ρ = (1+|x|²)^{1/2}` over the truncated
/// domain by seeded Monte Carlo; the gradient is taken by finite differences
/// of [`eval_displacement`]. Points inside the cavity or within the
/// near-field shell contribute zero (the shell volume is a documented bias of
/// order surface-area × element-diameter).
pub fn weighted_norm_estimate(
    mesh: &TriSurfaceMesh,
    trace: &CavityTrace,
    moduli: &ElasticModuli,
    p: Pressure,
    priors: &CavityPriors,
    cfg: &BemConfig,
    truncation_radius: f64,
    sample_count: usize,
    seed: u64,
) -> Result<WeightedNormEstimate, BemError> {
    if truncation_radius < 2.0 * priors.d0 {
        return Err(BemError::TruncationTooSmall(
            truncation_radius,
            2.0 * priors.d0,
        ));
    }
    let value = mc_weighted_norm(mesh, trace, moduli, p, cfg, truncation_radius, sample_count, seed)?;
    let doubled = mc_weighted_norm(
        mesh,
        trace,
        moduli,
        p,
        cfg,
        2.0 * truncation_radius,
        sample_count,
        seed.wrapping_add(1),
    )?;
    Ok(WeightedNormEstimate {
        value: value.0,
        value_at_doubled_radius: doubled.0,
        growth_ratio: doubled.0 / value.0,
        samples_used: value.1,
        samples_rejected: value.2,
    })
}

#[allow(clippy::too_many_arguments)]
fn mc_weighted_norm(
    mesh: &TriSurfaceMesh,
    trace: &CavityTrace,
    moduli: &ElasticModuli,
    p: Pressure,
    cfg: &BemConfig,
    radius: f64,
    sample_count: usize,
    seed: u64,
) -> Result<(f64, usize, usize), BemError> {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let h_shell = mesh.max_element_diameter();
    // Draw all points first so the sample sequence is independent of any
    // parallel evaluation order.
    let mut points = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        let u: f64 = rng.random();
        let r = radius * u.cbrt();
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let horiz = (1.0 - z * z).max(0.0).sqrt();
        let dir = Vector3::new(horiz * phi.cos(), horiz * phi.sin(), -z.abs());
        points.push(dir * r);
    }
    let evals: Vec<Option<f64>> = points
        .par_iter()
        .map(|pt| -> Result<Option<f64>, BemError> {
            let dist = mesh.distance_to_surface(pt);
            if dist < h_shell {
                return Ok(None); // inside cavity or in the excluded shell
            }
            let rho2 = 1.0 + pt.norm_squared();
            let u0 = eval_displacement(mesh, trace, moduli, p, cfg, pt)?;
            // Central differences, one-sided in z near the surface plane.
            let h = 1e-3 * (1.0 + dist);
            let mut grad2 = 0.0;
            for k in 0..2 {
                let mut e = Vector3::zeros();
                e[k] = h;
                let up = eval_displacement(mesh, trace, moduli, p, cfg, &(pt + e))?;
                let um = eval_displacement(mesh, trace, moduli, p, cfg, &(pt - e))?;
                grad2 += ((up - um) / (2.0 * h)).norm_squared();
            }
            let ez = Vector3::new(0.0, 0.0, h);
            let dz = if pt.z + h <= 0.0 {
                let up = eval_displacement(mesh, trace, moduli, p, cfg, &(pt + ez))?;
                let um = eval_displacement(mesh, trace, moduli, p, cfg, &(pt - ez))?;
                (up - um) / (2.0 * h)
            } else {
                // second-order one-sided stencil pointing into the domain
                let u1 = eval_displacement(mesh, trace, moduli, p, cfg, &(pt - ez))?;
                let u2 = eval_displacement(mesh, trace, moduli, p, cfg, &(pt - ez * 2.0))?;
                (u0 * 3.0 - u1 * 4.0 + u2) / (2.0 * h)
            };
            grad2 += dz.norm_squared();
            Ok(Some(u0.norm_squared() / rho2 + grad2))
        })
        .collect::<Result<_, _>>()?;
    let volume = 2.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
    let used = evals.iter().flatten().count();
    let total: f64 = evals.iter().flatten().sum();
    Ok((
        volume * total / sample_count as f64,
        used,
        sample_count - used,
    ))
}
