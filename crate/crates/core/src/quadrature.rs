//! Quadrature over planar triangles: fixed symmetric Gauss rules, adaptive
//! 4-way subdivision for near-singular integrands, and a Duffy-transformed
//! rule for weakly singular (1/r) integrands with the singularity inside the
//! triangle.

use nalgebra::{SVector, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("unsupported triangle rule degree {0} (available: 1, 2, 3, 6)")]
    UnsupportedDegree(usize),
    #[error("adaptive quadrature did not converge to {tol:e} within depth {max_depth} (last change {last_change:e})")]
    NotConverged {
        tol: f64,
        max_depth: usize,
        last_change: f64,
    },
}

/// A symmetric quadrature rule in barycentric coordinates. Weights sum to 1
/// and are multiplied by the triangle area on use.
#[derive(Debug, Clone)]
pub struct TriRule {
    pub barycentric: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriRule {
    fn from_groups(groups: &[(f64, [f64; 3], bool)]) -> Self {
        let mut barycentric = Vec::new();
        let mut weights = Vec::new();
        for &(w, [a, b, c], all_perms) in groups {
            let perms: &[[f64; 3]] = if all_perms {
                &[
                    [a, b, c],
                    [a, c, b],
                    [b, a, c],
                    [b, c, a],
                    [c, a, b],
                    [c, b, a],
                ]
            } else if (a - b).abs() < 1e-15 && (b - c).abs() < 1e-15 {
                &[[a, b, c]]
            } else {
                &[[a, b, c], [b, c, a], [c, a, b]]
            };
            for p in perms {
                barycentric.push(*p);
                weights.push(w);
            }
        }
        Self {
            barycentric,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn centroid_rule() -> TriRule {
    TriRule::from_groups(&[(1.0, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], false)])
}

fn midpoint_rule() -> TriRule {
    TriRule::from_groups(&[(1.0 / 3.0, [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], false)])
}

fn degree3_rule() -> TriRule {
    TriRule::from_groups(&[
        (-27.0 / 48.0, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], false),
        (25.0 / 48.0, [0.6, 0.2, 0.2], false),
    ])
}

/// 12-point degree-6 symmetric rule (Dunavant).
fn degree6_rule() -> TriRule {
    TriRule::from_groups(&[
        (
            0.050_844_906_370_207,
            [
                0.873_821_971_016_996,
                0.063_089_014_491_502,
                0.063_089_014_491_502,
            ],
            false,
        ),
        (
            0.116_786_275_726_379,
            [
                0.501_426_509_658_179,
                0.249_286_745_170_910,
                0.249_286_745_170_910,
            ],
            false,
        ),
        (
            0.082_851_075_618_374,
            [
                0.053_145_049_844_817,
                0.310_352_451_033_784,
                0.636_502_499_121_399,
            ],
            true,
        ),
    ])
}

/// Returns the symmetric rule exact for polynomials of the given degree.
pub fn triangle_rule(degree: usize) -> Result<&'static TriRule, QuadratureError> {
    use std::sync::OnceLock;
    static R1: OnceLock<TriRule> = OnceLock::new();
    static R2: OnceLock<TriRule> = OnceLock::new();
    static R3: OnceLock<TriRule> = OnceLock::new();
    static R6: OnceLock<TriRule> = OnceLock::new();
    match degree {
        0 | 1 => Ok(R1.get_or_init(centroid_rule)),
        2 => Ok(R2.get_or_init(midpoint_rule)),
        3 => Ok(R3.get_or_init(degree3_rule)),
        4..=6 => Ok(R6.get_or_init(degree6_rule)),
        d => Err(QuadratureError::UnsupportedDegree(d)),
    }
}

/// A triangle given by its corner points, with area precomputed.
#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    pub corners: [Vector3<f64>; 3],
    pub area: f64,
}

impl Triangle {
    pub fn new(a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>) -> Self {
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        Self {
            corners: [a, b, c],
            area,
        }
    }

    pub fn point(&self, bary: [f64; 3]) -> Vector3<f64> {
        self.corners[0] * bary[0] + self.corners[1] * bary[1] + self.corners[2] * bary[2]
    }

    pub fn split4(&self) -> [Triangle; 4] {
        let [a, b, c] = self.corners;
        let ab = (a + b) * 0.5;
        let bc = (b + c) * 0.5;
        let ca = (c + a) * 0.5;
        [
            Triangle::new(a, ab, ca),
            Triangle::new(b, bc, ab),
            Triangle::new(c, ca, bc),
            Triangle::new(ab, bc, ca),
        ]
    }
}

/// Applies a fixed rule to a vector-valued integrand over one triangle.
pub fn integrate_fixed<const N: usize>(
    f: &mut impl FnMut(Vector3<f64>) -> SVector<f64, N>,
    tri: &Triangle,
    rule: &TriRule,
) -> SVector<f64, N> {
    let mut acc = SVector::<f64, N>::zeros();
    for (bary, w) in rule.barycentric.iter().zip(&rule.weights) {
        acc += f(tri.point(*bary)) * (w * tri.area);
    }
    acc
}

/// Adaptive 4-way subdivision: refine each triangle until the rule applied to
/// its children agrees with the parent estimate to the tolerance (distributed
/// by area among children).
pub fn integrate_adaptive<const N: usize>(
    f: &mut impl FnMut(Vector3<f64>) -> SVector<f64, N>,
    tri: &Triangle,
    rule: &TriRule,
    tol: f64,
    max_depth: usize,
) -> Result<SVector<f64, N>, QuadratureError> {
    fn recurse<const N: usize>(
        f: &mut impl FnMut(Vector3<f64>) -> SVector<f64, N>,
        tri: &Triangle,
        coarse: SVector<f64, N>,
        rule: &TriRule,
        tol: f64,
        depth: usize,
        max_depth: usize,
    ) -> Result<SVector<f64, N>, QuadratureError> {
        let children = tri.split4();
        let fine: [SVector<f64, N>; 4] =
            std::array::from_fn(|k| integrate_fixed(f, &children[k], rule));
        let sum = fine[0] + fine[1] + fine[2] + fine[3];
        let change = (sum - coarse).amax();
        if change <= tol {
            return Ok(sum);
        }
        if depth >= max_depth {
            return Err(QuadratureError::NotConverged {
                tol,
                max_depth,
                last_change: change,
            });
        }
        let mut acc = SVector::<f64, N>::zeros();
        for k in 0..4 {
            acc += recurse(f, &children[k], fine[k], rule, tol * 0.25, depth + 1, max_depth)?;
        }
        Ok(acc)
    }
    let coarse = integrate_fixed(f, tri, rule);
    recurse(f, tri, coarse, rule, tol, 0, max_depth)
}

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on Legendre polynomials over [-1, 1], then remapped.
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = 0.5 * (1.0 - x); // descending cos -> ascending node order
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrates a weakly singular integrand (|f| ~ 1/r near `singularity`) over
/// a triangle containing the singular point.
///
/// The triangle is split into three sub-triangles sharing the singular vertex;
/// on each, the parametrization `x(u,v) = s + u[(1-v)(p1-s) + v(p2-s)]` has
/// surface element proportional to `u`, which cancels the 1/r blow-up. Tensor
/// Gauss-Legendre of the given order is then accurate for smooth remainders.
pub fn integrate_duffy<const N: usize>(
    f: &mut impl FnMut(Vector3<f64>) -> SVector<f64, N>,
    tri: &Triangle,
    singularity: Vector3<f64>,
    order: usize,
) -> SVector<f64, N> {
    let (nodes, weights) = gauss_legendre_unit(order);
    let [a, b, c] = tri.corners;
    let mut acc = SVector::<f64, N>::zeros();
    for (p1, p2) in [(a, b), (b, c), (c, a)] {
        let e1 = p1 - singularity;
        let e2 = p2 - singularity;
        // Area Jacobian of (u, v) -> s + u((1-v)e1 + v e2) is u |e1 x (e2-e1)|.
        let jac0 = e1.cross(&(e2 - e1)).norm();
        if jac0 == 0.0 {
            continue;
        }
        for (u, wu) in nodes.iter().zip(&weights) {
            for (v, wv) in nodes.iter().zip(&weights) {
                let x = singularity + (e1 * (1.0 - v) + e2 * *v) * *u;
                acc += f(x) * (wu * wv * u * jac0);
            }
        }
    }
    acc
}
