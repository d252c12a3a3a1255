//! Discrete cavity boundaries: closed triangulated surfaces with cached
//! per-element data, parametric sphere/ellipsoid meshing, validators for the
//! a-priori geometry class (depth, diameter, inclusion), the Hausdorff metric
//! between surfaces, and a minimal ASCII interchange format.

use crate::quadrature::{triangle_rule, Triangle};
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, Write};
use thiserror::Error;

/// Largest admissible triangle aspect ratio (longest edge over twice the
/// inradius); equilateral triangles score √3.
pub const MAX_ASPECT_RATIO: f64 = 20.0;

/// Largest supported icosphere subdivision level.
pub const MAX_SUBDIVISION_LEVEL: usize = 7;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("subdivision level {0} out of range 0..={MAX_SUBDIVISION_LEVEL}")]
    LevelOutOfRange(usize),
    #[error("radius must be positive (got {0})")]
    NonPositiveRadius(f64),
    #[error("degenerate ellipsoid radii {0:?}: all must be positive and aspect bounded")]
    DegenerateRadii(Vec<f64>),
    #[error("cavity parameters invalid: {0}")]
    InvalidParams(String),
    #[error("triangle {0} references vertex {1} out of bounds ({2} vertices)")]
    IndexOutOfBounds(usize, usize, usize),
    #[error("surface is not closed: edge ({0}, {1}) is shared by {2} triangles, expected 2")]
    NotClosed(usize, usize, usize),
    #[error("surface is not consistently oriented: directed edge ({0}, {1}) repeats")]
    NotOrientable(usize, usize),
    #[error("Euler characteristic is {0}, expected 2 (sphere topology)")]
    WrongTopology(i64),
    #[error("triangle {0} is degenerate (area {1:e})")]
    DegenerateTriangle(usize, f64),
    #[error("triangle {0} has aspect ratio {1:.2} > {MAX_ASPECT_RATIO}")]
    BadAspectRatio(usize, f64),
    #[error("signed enclosed volume {0:e} is not positive; triangles must wind outward")]
    NotOutwardOriented(f64),
    #[error("mesh i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("mesh format error at line {line}: {message}")]
    Format { line: usize, message: String },
}

/// A closed, outward-oriented triangulated surface with per-element centroid,
/// area, unit normal and longest edge cached for assembly loops.
///
/// Immutable after construction; all queries are pure.
#[derive(Debug, Clone)]
pub struct TriSurfaceMesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[usize; 3]>,
    centroids: Vec<Vector3<f64>>,
    areas: Vec<f64>,
    normals: Vec<Vector3<f64>>,
    diameters: Vec<f64>,
    /// Max distance from centroid to a corner, for distance-query pruning.
    circumspans: Vec<f64>,
}

impl TriSurfaceMesh {
    /// Validates closedness, orientability, sphere topology, element quality
    /// and outward orientation, then caches element data.
    pub fn new(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(MeshError::IndexOutOfBounds(t, v, nv));
                }
            }
        }

        // Each undirected edge must appear in exactly two triangles, and each
        // directed edge exactly once (consistent winding).
        let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                *directed.entry((a, b)).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count > 1 {
                return Err(MeshError::NotOrientable(a, b));
            }
        }
        for (&(a, b), &count) in &undirected {
            if count != 2 {
                return Err(MeshError::NotClosed(a, b, count));
            }
        }
        let euler = nv as i64 - undirected.len() as i64 + triangles.len() as i64;
        if euler != 2 {
            return Err(MeshError::WrongTopology(euler));
        }

        let mut centroids = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut normals = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        let mut circumspans = Vec::with_capacity(triangles.len());
        let mut signed_volume = 0.0;
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            if !(area > 0.0) {
                return Err(MeshError::DegenerateTriangle(t, area));
            }
            let e = [(b - a).norm(), (c - b).norm(), (a - c).norm()];
            let longest = e[0].max(e[1]).max(e[2]);
            let perimeter = e[0] + e[1] + e[2];
            let aspect = longest * perimeter / (4.0 * area);
            if aspect > MAX_ASPECT_RATIO {
                return Err(MeshError::BadAspectRatio(t, aspect));
            }
            signed_volume += a.dot(&b.cross(&c)) / 6.0;
            let centroid = (a + b + c) / 3.0;
            circumspans.push(
                (a - centroid)
                    .norm()
                    .max((b - centroid).norm())
                    .max((c - centroid).norm()),
            );
            centroids.push(centroid);
            areas.push(area);
            normals.push(cross / (2.0 * area));
            diameters.push(longest);
        }
        if signed_volume <= 0.0 {
            return Err(MeshError::NotOutwardOriented(signed_volume));
        }

        Ok(Self {
            vertices,
            triangles,
            centroids,
            areas,
            normals,
            diameters,
            circumspans,
        })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn element_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn centroid(&self, t: usize) -> Vector3<f64> {
        self.centroids[t]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    /// Outward unit normal of element `t`.
    pub fn normal(&self, t: usize) -> Vector3<f64> {
        self.normals[t]
    }

    /// Longest edge of element `t`.
    pub fn element_diameter(&self, t: usize) -> f64 {
        self.diameters[t]
    }

    pub fn max_element_diameter(&self) -> f64 {
        self.diameters.iter().cloned().fold(0.0, f64::max)
    }

    pub fn element(&self, t: usize) -> Triangle {
        let [a, b, c] = self.triangles[t];
        Triangle::new(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = [
                    self.vertices[t[0]],
                    self.vertices[t[1]],
                    self.vertices[t[2]],
                ];
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Exact distance from a point to the closed surface.
    ///
    /// Brute force over triangles with a centroid-ball lower bound to skip
    /// elements that cannot improve the running minimum.
    pub fn distance_to_surface(&self, p: &Vector3<f64>) -> f64 {
        let mut best = f64::INFINITY;
        for t in 0..self.element_count() {
            let lb = (p - self.centroids[t]).norm() - self.circumspans[t];
            if lb >= best {
                continue;
            }
            let [a, b, c] = self.triangles[t];
            let d =
                point_triangle_distance(p, &self.vertices[a], &self.vertices[b], &self.vertices[c]);
            best = best.min(d);
        }
        best
    }
}

// ---------------------------------------------------------------------------
// Parametric cavities.
// ---------------------------------------------------------------------------

/// A-priori constants of the admissible cavity class: depth/size scale `D0`,
/// measurement disk radius `s0 < D0`, and the declared boundary-regularity
/// constants `r0`, `E0`.
///
/// `r0` and `E0` classify admissible shapes analytically but are not
/// computable from a mesh in a canonical way; they are carried as metadata
/// while the validator enforces the metric constraints.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityPriors {
    pub d0: f64,
    pub r0: f64,
    pub e0: f64,
    pub s0: f64,
}

impl CavityPriors {
    pub fn new(d0: f64, r0: f64, e0: f64, s0: f64) -> Result<Self, MeshError> {
        if !(d0 > 1.0) {
            return Err(MeshError::InvalidParams(format!("D0 must exceed 1 (got {d0})")));
        }
        if !(s0 > 0.0 && s0 < d0) {
            return Err(MeshError::InvalidParams(format!(
                "s0 must satisfy 0 < s0 < D0 (got s0 = {s0}, D0 = {d0})"
            )));
        }
        if !(r0 > 0.0 && e0 > 0.0) {
            return Err(MeshError::InvalidParams(format!(
                "r0 and E0 must be positive (got r0 = {r0}, E0 = {e0})"
            )));
        }
        Ok(Self { d0, r0, e0, s0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CavityKind {
    Sphere,
    Ellipsoid,
}

/// Low-dimensional cavity parametrization used by the inverse solver.
///
/// `radii` holds one entry for a sphere and three semi-axes for an
/// ellipsoid; `orientation` is the Z-Y-X Euler angles in radians (ellipsoids
/// only, ignored for spheres).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityParams {
    pub kind: CavityKind,
    pub center: [f64; 3],
    pub radii: Vec<f64>,
    #[serde(default)]
    pub orientation: [f64; 3],
}

impl CavityParams {
    pub fn sphere(center: [f64; 3], radius: f64) -> Self {
        Self {
            kind: CavityKind::Sphere,
            center,
            radii: vec![radius],
            orientation: [0.0; 3],
        }
    }

    pub fn ellipsoid(center: [f64; 3], radii: [f64; 3], orientation: [f64; 3]) -> Self {
        Self {
            kind: CavityKind::Ellipsoid,
            center,
            radii: radii.to_vec(),
            orientation,
        }
    }

    pub fn center_vec(&self) -> Vector3<f64> {
        Vector3::from(self.center)
    }

    pub fn check_shape(&self) -> Result<(), MeshError> {
        let expect = match self.kind {
            CavityKind::Sphere => 1,
            CavityKind::Ellipsoid => 3,
        };
        if self.radii.len() != expect {
            return Err(MeshError::InvalidParams(format!(
                "{:?} expects {} radius value(s), got {}",
                self.kind,
                expect,
                self.radii.len()
            )));
        }
        if self.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(MeshError::DegenerateRadii(self.radii.clone()));
        }
        if !(self.center[2] < 0.0) {
            return Err(MeshError::InvalidParams(format!(
                "cavity center must lie strictly below the surface (center_3 = {})",
                self.center[2]
            )));
        }
        Ok(())
    }

    /// Triangulates the parametric surface at the given subdivision level.
    pub fn mesh(&self, level: usize) -> Result<TriSurfaceMesh, MeshError> {
        self.check_shape()?;
        match self.kind {
            CavityKind::Sphere => make_sphere_mesh(self.center, self.radii[0], level),
            CavityKind::Ellipsoid => make_ellipsoid_mesh(self, level),
        }
    }

    /// Largest diameter of the implied surface (2 max radius).
    pub fn diameter(&self) -> f64 {
        2.0 * self.radii.iter().cloned().fold(0.0, f64::max)
    }
}

fn icosahedron() -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let s = 1.0 / (1.0 + phi * phi).sqrt();
    let v = |a: f64, b: f64, c: f64| Vector3::new(a, b, c) * s;
    let vertices = vec![
        v(-1.0, phi, 0.0),
        v(1.0, phi, 0.0),
        v(-1.0, -phi, 0.0),
        v(1.0, -phi, 0.0),
        v(0.0, -1.0, phi),
        v(0.0, 1.0, phi),
        v(0.0, -1.0, -phi),
        v(0.0, 1.0, -phi),
        v(phi, 0.0, -1.0),
        v(phi, 0.0, 1.0),
        v(-phi, 0.0, -1.0),
        v(-phi, 0.0, 1.0),
    ];
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (vertices, triangles)
}

/// Unit icosphere: icosahedron subdivided `level` times with midpoints
/// projected back onto the sphere. 20·4^level triangles.
fn unit_icosphere(level: usize) -> Result<(Vec<Vector3<f64>>, Vec<[usize; 3]>), MeshError> {
    if level > MAX_SUBDIVISION_LEVEL {
        return Err(MeshError::LevelOutOfRange(level));
    }
    let (mut vertices, mut triangles) = icosahedron();
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for tri in &triangles {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let m = (vertices[a] + vertices[b]).normalize();
                    vertices.push(m);
                    vertices.len() - 1
                });
            }
            let [a, b, c] = *tri;
            let [ab, bc, ca] = mid;
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }
    Ok((vertices, triangles))
}

/// Icosphere of the given center and radius; `level` in `0..=7`.
pub fn make_sphere_mesh(
    center: [f64; 3],
    radius: f64,
    level: usize,
) -> Result<TriSurfaceMesh, MeshError> {
    if !(radius > 0.0) {
        return Err(MeshError::NonPositiveRadius(radius));
    }
    let (unit, triangles) = unit_icosphere(level)?;
    let c = Vector3::from(center);
    let vertices = unit.into_iter().map(|v| c + v * radius).collect();
    TriSurfaceMesh::new(vertices, triangles)
}

fn rotation_zyx(angles: [f64; 3]) -> Matrix3<f64> {
    let (cz, sz) = (angles[0].cos(), angles[0].sin());
    let (cy, sy) = (angles[1].cos(), angles[1].sin());
    let (cx, sx) = (angles[2].cos(), angles[2].sin());
    let rz = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
    let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
    rz * ry * rx
}

/// Ellipsoid mesh: the unit icosphere scaled by the semi-axes, rotated and
/// translated. Normals are recomputed from the mapped geometry, not mapped.
pub fn make_ellipsoid_mesh(params: &CavityParams, level: usize) -> Result<TriSurfaceMesh, MeshError> {
    if params.kind != CavityKind::Ellipsoid {
        return Err(MeshError::InvalidParams(
            "make_ellipsoid_mesh requires ellipsoid parameters".into(),
        ));
    }
    params.check_shape()?;
    let r = &params.radii;
    let (rmin, rmax) = (
        r.iter().cloned().fold(f64::INFINITY, f64::min),
        r.iter().cloned().fold(0.0, f64::max),
    );
    // Very elongated ellipsoids produce slivers past the aspect cap.
    if rmax / rmin > MAX_ASPECT_RATIO {
        return Err(MeshError::DegenerateRadii(r.clone()));
    }
    let (unit, triangles) = unit_icosphere(level)?;
    let rot = rotation_zyx(params.orientation);
    let c = params.center_vec();
    let vertices = unit
        .into_iter()
        .map(|v| c + rot * Vector3::new(v.x * r[0], v.y * r[1], v.z * r[2]))
        .collect();
    TriSurfaceMesh::new(vertices, triangles)
}

// ---------------------------------------------------------------------------
// A-priori validation.
// ---------------------------------------------------------------------------

/// One violated constraint of the a-priori class, with the measured values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PriorViolation {
    /// `d(C, {x3 = 0}) >= D0` failed.
    Depth { required: f64, actual: f64 },
    /// `diam(C) < D0` failed (strict inequality).
    Diameter { bound: f64, actual: f64 },
    /// Containment in the hemisphere of radius `2 D0` failed.
    Inclusion { bound: f64, actual: f64 },
}

impl std::fmt::Display for PriorViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PriorViolation::Depth { required, actual } => write!(
                f,
                "depth violation: d(C, surface plane) = {actual} < D0 = {required}"
            ),
            PriorViolation::Diameter { bound, actual } => {
                write!(f, "diameter violation: diam(C) = {actual} >= D0 = {bound}")
            }
            PriorViolation::Inclusion { bound, actual } => write!(
                f,
                "inclusion violation: max |x| over C = {actual} > 2 D0 = {bound}"
            ),
        }
    }
}

/// Checks the metric constraints of the a-priori class: depth `>= D0`,
/// diameter strictly `< D0`, containment in the hemisphere of radius `2 D0`.
/// Violations are reported, not thrown.
pub fn validate_against_priors(mesh: &TriSurfaceMesh, priors: &CavityPriors) -> Vec<PriorViolation> {
    let mut violations = Vec::new();
    let depth = -mesh
        .vertices()
        .iter()
        .map(|v| v.z)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(depth >= priors.d0) {
        violations.push(PriorViolation::Depth {
            required: priors.d0,
            actual: depth,
        });
    }
    let diameter = mesh_diameter(mesh);
    if !(diameter < priors.d0) {
        violations.push(PriorViolation::Diameter {
            bound: priors.d0,
            actual: diameter,
        });
    }
    let reach = mesh
        .vertices()
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if reach > 2.0 * priors.d0 {
        violations.push(PriorViolation::Inclusion {
            bound: 2.0 * priors.d0,
            actual: reach,
        });
    }
    violations
}

fn mesh_diameter(mesh: &TriSurfaceMesh) -> f64 {
    let v = mesh.vertices();
    (0..v.len())
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for j in (i + 1)..v.len() {
                best = best.max((v[i] - v[j]).norm_squared());
            }
            best
        })
        .reduce(|| 0.0, f64::max)
        .sqrt()
}

/// Polyhedral volume/area, vertex diameter, and depth below the surface plane.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeometryReport {
    pub signed_volume: f64,
    pub area: f64,
    pub diameter: f64,
    pub depth: f64,
}

pub fn geometry_report(mesh: &TriSurfaceMesh) -> GeometryReport {
    GeometryReport {
        signed_volume: mesh.signed_volume(),
        area: mesh.total_area(),
        diameter: mesh_diameter(mesh),
        depth: -mesh
            .vertices()
            .iter()
            .map(|v| v.z)
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

// ---------------------------------------------------------------------------
// Hausdorff distance.
// ---------------------------------------------------------------------------

/// Sampling density for [`hausdorff_distance_with`]: each triangle is split
/// `extra_subdivisions` times before placing quadrature-node samples.
#[derive(Debug, Clone, Copy)]
pub struct HausdorffConfig {
    pub extra_subdivisions: usize,
}

impl Default for HausdorffConfig {
    fn default() -> Self {
        Self {
            extra_subdivisions: 0,
        }
    }
}

/// Closest distance from `p` to the triangle `(a, b, c)`.
pub fn point_triangle_distance(
    p: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> f64 {
    // Ericson, Real-Time Collision Detection: closest point on triangle.
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - ab * v).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - (c - b) * w).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - ab * v - ac * w).norm()
}

fn surface_samples(mesh: &TriSurfaceMesh, cfg: &HausdorffConfig) -> Vec<Vector3<f64>> {
    let rule = triangle_rule(6).expect("degree 6 rule");
    let mut samples: Vec<Vector3<f64>> = mesh.vertices().to_vec();
    for t in 0..mesh.element_count() {
        let mut stack = vec![(mesh.element(t), 0usize)];
        while let Some((tri, depth)) = stack.pop() {
            if depth < cfg.extra_subdivisions {
                for child in tri.split4() {
                    stack.push((child, depth + 1));
                }
            } else {
                for bary in &rule.barycentric {
                    samples.push(tri.point(*bary));
                }
            }
        }
    }
    samples
}

fn directed_hausdorff(samples: &[Vector3<f64>], target: &TriSurfaceMesh) -> f64 {
    samples
        .par_iter()
        .map(|p| target.distance_to_surface(p))
        .reduce(|| 0.0, f64::max)
}

/// Symmetric Hausdorff distance between two closed surfaces.
///
/// The supremum side ranges over dense surface samples (vertices plus
/// per-triangle quadrature nodes); the infimum side is the exact distance to
/// the target triangulation. The result converges to the metric between the
/// two polyhedral surfaces as the sample density grows; the density knob is
/// [`HausdorffConfig::extra_subdivisions`].
pub fn hausdorff_distance(a: &TriSurfaceMesh, b: &TriSurfaceMesh) -> f64 {
    hausdorff_distance_with(a, b, &HausdorffConfig::default())
}

pub fn hausdorff_distance_with(
    a: &TriSurfaceMesh,
    b: &TriSurfaceMesh,
    cfg: &HausdorffConfig,
) -> f64 {
    let sa = surface_samples(a, cfg);
    let sb = surface_samples(b, cfg);
    directed_hausdorff(&sa, b).max(directed_hausdorff(&sb, a))
}

// ---------------------------------------------------------------------------
// ASCII mesh format.
// ---------------------------------------------------------------------------

/// Writes the mesh in the ASCII triangle format:
///
/// ```text
/// <vertex-count> <triangle-count>\n
/// <x> <y> <z>\n          (vertex-count lines, 17 significant digits)
/// <i> <j> <k>\n          (triangle-count lines, zero-based indices)
/// ```
pub fn write_mesh_ascii(mesh: &TriSurfaceMesh, w: &mut impl Write) -> Result<(), MeshError> {
    writeln!(w, "{} {}", mesh.vertices().len(), mesh.element_count())?;
    for v in mesh.vertices() {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z)?;
    }
    for t in mesh.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

/// Reads the format written by [`write_mesh_ascii`], re-running full
/// construction validation.
pub fn read_mesh_ascii(r: &mut impl BufRead) -> Result<TriSurfaceMesh, MeshError> {
    let mut lines = r.lines().enumerate();
    let mut next_line = || -> Result<(usize, String), MeshError> {
        loop {
            match lines.next() {
                Some((idx, Ok(line))) => {
                    if !line.trim().is_empty() {
                        return Ok((idx + 1, line));
                    }
                }
                Some((_, Err(e))) => return Err(MeshError::Io(e)),
                None => {
                    return Err(MeshError::Format {
                        line: 0,
                        message: "unexpected end of file".into(),
                    })
                }
            }
        }
    };

    let (lineno, header) = next_line()?;
    let mut parts = header.split_whitespace();
    let parse_count = |s: Option<&str>, lineno: usize| -> Result<usize, MeshError> {
        s.ok_or(MeshError::Format {
            line: lineno,
            message: "expected '<vertex-count> <triangle-count>'".into(),
        })?
        .parse()
        .map_err(|e| MeshError::Format {
            line: lineno,
            message: format!("bad count: {e}"),
        })
    };
    let nv = parse_count(parts.next(), lineno)?;
    let nt = parse_count(parts.next(), lineno)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (lineno, line) = next_line()?;
        let mut it = line.split_whitespace();
        let mut coord = [0.0f64; 3];
        for c in &mut coord {
            *c = it
                .next()
                .ok_or(MeshError::Format {
                    line: lineno,
                    message: "expected three coordinates".into(),
                })?
                .parse()
                .map_err(|e| MeshError::Format {
                    line: lineno,
                    message: format!("bad coordinate: {e}"),
                })?;
        }
        vertices.push(Vector3::from(coord));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (lineno, line) = next_line()?;
        let mut it = line.split_whitespace();
        let mut idx = [0usize; 3];
        for v in &mut idx {
            *v = it
                .next()
                .ok_or(MeshError::Format {
                    line: lineno,
                    message: "expected three vertex indices".into(),
                })?
                .parse()
                .map_err(|e| MeshError::Format {
                    line: lineno,
                    message: format!("bad index: {e}"),
                })?;
        }
        triangles.push(idx);
    }
    TriSurfaceMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn icosahedron_counts() {
        let m = make_sphere_mesh([0.0, 0.0, -5.0], 1.0, 0).unwrap();
        assert_eq!(m.element_count(), 20);
        assert_eq!(m.vertices().len(), 12);
    }

    #[test]
    fn subdivision_counts() {
        let m = make_sphere_mesh([0.0, 0.0, -5.0], 1.0, 3).unwrap();
        assert_eq!(m.element_count(), 20 * 4usize.pow(3));
        assert_eq!(m.vertices().len(), 10 * 4usize.pow(3) + 2);
    }

    #[test]
    fn level_out_of_range() {
        assert!(matches!(
            make_sphere_mesh([0.0, 0.0, -5.0], 1.0, 8),
            Err(MeshError::LevelOutOfRange(8))
        ));
    }

    #[test]
    fn sphere_volume_and_area_converge() {
        let r = 1.3;
        let m = make_sphere_mesh([0.0, 0.0, -5.0], r, 4).unwrap();
        let vol = m.signed_volume();
        let exact_vol = 4.0 / 3.0 * PI * r.powi(3);
        assert!((vol - exact_vol).abs() / exact_vol < 5e-3, "vol {vol}");
        let area = m.total_area();
        let exact_area = 4.0 * PI * r * r;
        assert!((area - exact_area).abs() / exact_area < 5e-3);
    }

    #[test]
    fn refinement_is_second_order() {
        let exact = 4.0 / 3.0 * PI;
        let err = |level| {
            let m = make_sphere_mesh([0.0, 0.0, -5.0], 1.0, level).unwrap();
            (m.signed_volume() - exact).abs()
        };
        let (e2, e3, e4) = (err(2), err(3), err(4));
        let r23 = e2 / e3;
        let r34 = e3 / e4;
        assert!((3.0..5.0).contains(&r23), "volume error ratio {r23}");
        assert!((3.0..5.0).contains(&r34), "volume error ratio {r34}");
    }

    #[test]
    fn normals_are_unit_and_outward() {
        let c = Vector3::new(0.0, 0.0, -5.0);
        let m = make_sphere_mesh([0.0, 0.0, -5.0], 2.0, 2).unwrap();
        for t in 0..m.element_count() {
            assert!((m.normal(t).norm() - 1.0).abs() < 1e-12);
            assert!(m.normal(t).dot(&(m.centroid(t) - c)) > 0.0);
        }
    }

    #[test]
    fn ellipsoid_matches_sphere_for_equal_radii() {
        let p = CavityParams::ellipsoid([1.0, -2.0, -6.0], [0.7, 0.7, 0.7], [0.0; 3]);
        let e = make_ellipsoid_mesh(&p, 2).unwrap();
        let s = make_sphere_mesh([1.0, -2.0, -6.0], 0.7, 2).unwrap();
        for (a, b) in e.vertices().iter().zip(s.vertices()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn ellipsoid_volume() {
        let (a, b, c) = (1.0, 0.6, 0.4);
        let p = CavityParams::ellipsoid([0.0, 0.0, -9.0], [a, b, c], [0.3, -0.2, 0.5]);
        let m = make_ellipsoid_mesh(&p, 4).unwrap();
        let exact = 4.0 / 3.0 * PI * a * b * c;
        assert!((m.signed_volume() - exact).abs() / exact < 5e-3);
    }

    #[test]
    fn ellipsoid_rejects_degenerate_radii() {
        let p = CavityParams::ellipsoid([0.0, 0.0, -9.0], [1.0, 0.0, 0.5], [0.0; 3]);
        assert!(make_ellipsoid_mesh(&p, 2).is_err());
        let sliver = CavityParams::ellipsoid([0.0, 0.0, -9.0], [1.0, 0.01, 1.0], [0.0; 3]);
        assert!(make_ellipsoid_mesh(&sliver, 2).is_err());
    }

    #[test]
    fn priors_validation_cases() {
        let priors = CavityPriors::new(4.0, 0.5, 1.0, 3.0).unwrap();
        // depth 4.5 >= 4, diam 1 < 4, reach 5.5 <= 8
        let good = make_sphere_mesh([0.0, 0.0, -5.0], 0.5, 2).unwrap();
        assert!(validate_against_priors(&good, &priors).is_empty());
        // depth 1.5 < 4
        let shallow = make_sphere_mesh([0.0, 0.0, -2.0], 0.5, 2).unwrap();
        let v = validate_against_priors(&shallow, &priors);
        assert!(matches!(v.as_slice(), [PriorViolation::Depth { .. }]));
    }

    #[test]
    fn diameter_bound_is_strict() {
        // Construct a sphere, then set D0 equal to its measured diameter: the
        // strict inequality diam < D0 must flag it.
        let m = make_sphere_mesh([0.0, 0.0, -50.0], 2.0, 2).unwrap();
        let d = geometry_report(&m).diameter;
        let priors = CavityPriors::new(d, 0.5, 1.0, 1.0).unwrap();
        let v = validate_against_priors(&m, &priors);
        assert!(
            v.iter()
                .any(|x| matches!(x, PriorViolation::Diameter { .. })),
            "{v:?}"
        );
    }

    #[test]
    fn shrinking_preserves_diameter_and_inclusion() {
        let priors = CavityPriors::new(4.0, 0.5, 1.0, 3.0).unwrap();
        for scale in [0.9, 0.5, 0.2] {
            let m = make_sphere_mesh([0.4, -0.3, -5.0], 0.5 * scale, 2).unwrap();
            let v = validate_against_priors(&m, &priors);
            assert!(!v
                .iter()
                .any(|x| !matches!(x, PriorViolation::Depth { .. })));
        }
    }

    #[test]
    fn geometry_report_values() {
        let m = make_sphere_mesh([0.0, 0.0, -5.0], 1.0, 5).unwrap();
        let rep = geometry_report(&m);
        let exact = 4.0 / 3.0 * PI;
        assert!((rep.signed_volume - exact).abs() / exact < 2e-3);
        assert!((rep.depth - 4.0).abs() < 2e-3);
        assert!((rep.diameter - 2.0).abs() / 2.0 < 1e-2);
    }

    #[test]
    fn hausdorff_identical_meshes() {
        let m = make_sphere_mesh([0.0, 0.0, -5.0], 1.0, 2).unwrap();
        assert!(hausdorff_distance(&m, &m) <= 1e-12);
    }

    #[test]
    fn hausdorff_concentric_spheres() {
        let a = make_sphere_mesh([0.0, 0.0, -5.0], 1.0, 4).unwrap();
        let b = make_sphere_mesh([0.0, 0.0, -5.0], 2.0, 4).unwrap();
        let d = hausdorff_distance(&a, &b);
        assert!((d - 1.0).abs() < 1e-2, "d = {d}");
    }

    #[test]
    fn hausdorff_translated_spheres() {
        let a = make_sphere_mesh([0.0, 0.0, -5.0], 1.0, 4).unwrap();
        let b = make_sphere_mesh([0.5, 0.0, -5.0], 1.0, 4).unwrap();
        let d = hausdorff_distance(&a, &b);
        assert!((d - 0.5).abs() / 0.5 < 1e-2, "d = {d}");
    }

    #[test]
    fn hausdorff_symmetry_and_triangle_inequality() {
        let meshes = [
            make_sphere_mesh([0.0, 0.0, -5.0], 1.0, 2).unwrap(),
            make_sphere_mesh([0.6, 0.2, -5.5], 0.8, 2).unwrap(),
            make_ellipsoid_mesh(
                &CavityParams::ellipsoid([-0.3, 0.4, -4.6], [1.1, 0.7, 0.9], [0.4, 0.1, -0.3]),
                2,
            )
            .unwrap(),
        ];
        let d = |i: usize, j: usize| hausdorff_distance(&meshes[i], &meshes[j]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((d(i, j) - d(j, i)).abs() < 1e-12);
            }
        }
        // sampled sets: triangle inequality with a small sampling slack
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            assert!(d(i, j) <= d(i, k) + d(k, j) + 1e-9);
        }
    }

    #[test]
    fn hausdorff_density_self_test() {
        let a = make_sphere_mesh([0.0, 0.0, -5.0], 1.0, 3).unwrap();
        let b = make_sphere_mesh([0.3, 0.0, -5.0], 1.0, 3).unwrap();
        let d0 = hausdorff_distance_with(&a, &b, &HausdorffConfig { extra_subdivisions: 0 });
        let d1 = hausdorff_distance_with(&a, &b, &HausdorffConfig { extra_subdivisions: 1 });
        assert!((d0 - d1).abs() < 5e-3 * d1.max(1e-30), "{d0} vs {d1}");
    }

    #[test]
    fn point_triangle_distance_cases() {
        let a = Vector3::new(0.0, 0.0, 0.0);
        let b = Vector3::new(1.0, 0.0, 0.0);
        let c = Vector3::new(0.0, 1.0, 0.0);
        // above interior
        assert!(
            (point_triangle_distance(&Vector3::new(0.25, 0.25, 2.0), &a, &b, &c) - 2.0).abs()
                < 1e-14
        );
        // closest to vertex
        assert!(
            (point_triangle_distance(&Vector3::new(-3.0, -4.0, 0.0), &a, &b, &c) - 5.0).abs()
                < 1e-14
        );
        // closest to edge ab
        assert!(
            (point_triangle_distance(&Vector3::new(0.5, -2.0, 0.0), &a, &b, &c) - 2.0).abs()
                < 1e-14
        );
    }

    #[test]
    fn mesh_roundtrip_ascii() {
        let m = make_sphere_mesh([0.2, -0.1, -5.0], 0.9, 2).unwrap();
        let mut buf = Vec::new();
        write_mesh_ascii(&m, &mut buf).unwrap();
        let back = read_mesh_ascii(&mut buf.as_slice()).unwrap();
        assert_eq!(m.vertices().len(), back.vertices().len());
        assert_eq!(m.triangles(), back.triangles());
        for (a, b) in m.vertices().iter().zip(back.vertices()) {
            assert_eq!(a, b, "17 significant digits round-trip exactly");
        }
    }

    #[test]
    fn mesh_read_rejects_garbage() {
        let text = "3 1\n0 0 0\n1 0 0\nnot-a-number 1 0\n0 1 2\n";
        let err = read_mesh_ascii(&mut text.as_bytes()).unwrap_err();
        assert!(matches!(err, MeshError::Format { line: 4, .. }), "{err:?}");
    }

    #[test]
    fn open_surface_rejected() {
        // single triangle: every edge has count 1
        let v = vec![
            Vector3::new(0.0, 0.0, -1.0),
            Vector3::new(1.0, 0.0, -1.0),
            Vector3::new(0.0, 1.0, -1.0),
        ];
        assert!(matches!(
            TriSurfaceMesh::new(v, vec![[0, 1, 2]]),
            Err(MeshError::NotClosed(..))
        ));
    }

    #[test]
    fn inconsistent_winding_rejected() {
        // tetrahedron with one face flipped
        let v = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ];
        let bad = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 2, 3]];
        assert!(matches!(
            TriSurfaceMesh::new(v, bad),
            Err(MeshError::NotOrientable(..))
        ));
    }

    #[test]
    fn inward_orientation_rejected() {
        // consistently wound tetrahedron, but inward (negative volume)
        let v = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ];
        let inward = vec![[0, 1, 2], [0, 3, 1], [1, 3, 2], [0, 2, 3]];
        assert!(matches!(
            TriSurfaceMesh::new(v, inward),
            Err(MeshError::NotOutwardOriented(_))
        ));
    }
}
