//! Reference manifolds with totally geodesic boundary and the initial
//! parametrizations built from them.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::{NodalField, Point, SurfaceMesh};

/// Absolute tolerance of the membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Points farther than this from the manifold are rejected by
/// [`ReferenceManifold::tangent_projection`].
pub const PROJECTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceManifold {
    /// `{ |x| = 1, x₁ ≥ 0 }`, boundary at `x₁ = 0`.
    HalfSphere,
    /// `{ x₂² + x₃² = 1, -1 ≤ x₁ ≤ 1 }`, boundaries at `x₁ = ±1`.
    Cylinder,
}

impl ReferenceManifold {
    /// Distance-like defect of `x` with respect to the manifold.
    pub fn defect(&self, x: &Point) -> f64 {
        match self {
            ReferenceManifold::HalfSphere => (x.norm() - 1.0).abs().max(-x.x),
            ReferenceManifold::Cylinder => {
                let r = x.y.hypot(x.z);
                (r - 1.0).abs().max(x.x.abs() - 1.0)
            }
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.defect(x) <= MEMBERSHIP_TOL
    }

    pub fn on_boundary(&self, x: &Point) -> bool {
        self.contains(x)
            && match self {
                ReferenceManifold::HalfSphere => x.x.abs() <= MEMBERSHIP_TOL,
                ReferenceManifold::Cylinder => (x.x.abs() - 1.0).abs() <= MEMBERSHIP_TOL,
            }
    }

    /// Outward unit co-normal at a boundary point. Constant on each boundary
    /// component: `(1,0,0)` on the half-sphere, `(±1,0,0)` on the cylinder.
    pub fn conormal(&self, q: &Point) -> Result<Vector3<f64>> {
        if !self.on_boundary(q) {
            return Err(Error::NotOnManifoldBoundary { x: q.x, y: q.y, z: q.z });
        }
        Ok(match self {
            ReferenceManifold::HalfSphere => Vector3::x(),
            ReferenceManifold::Cylinder => Vector3::new(q.x.signum(), 0.0, 0.0),
        })
    }

    /// Unit normal of the smooth manifold at `q`.
    fn normal(&self, q: &Point) -> Result<Vector3<f64>> {
        let n = match self {
            ReferenceManifold::HalfSphere => *q,
            ReferenceManifold::Cylinder => Vector3::new(0.0, q.y, q.z),
        };
        let norm = n.norm();
        if norm == 0.0 {
            return Err(Error::UndefinedDirection);
        }
        Ok(n / norm)
    }

    /// Orthogonal projection onto the tangent plane at `q`.
    pub fn tangent_projection(&self, q: &Point) -> Result<Matrix3<f64>> {
        let distance = self.defect(q);
        if distance > PROJECTION_TOL {
            return Err(Error::OffManifold {
                x: q.x,
                y: q.y,
                z: q.z,
                distance,
            });
        }
        let n = self.normal(q)?;
        Ok(Matrix3::identity() - n * n.transpose())
    }

    /// Closest-point style rescaling onto the manifold.
    pub fn project(&self, x: &Point) -> Result<Point> {
        match self {
            ReferenceManifold::HalfSphere => {
                let norm = x.norm();
                if norm == 0.0 {
                    return Err(Error::UndefinedDirection);
                }
                let mut y = x / norm;
                if y.x <= 0.0 {
                    let r = y.y.hypot(y.z);
                    if r == 0.0 {
                        return Err(Error::UndefinedDirection);
                    }
                    y = Point::new(0.0, y.y / r, y.z / r);
                }
                Ok(y)
            }
            ReferenceManifold::Cylinder => {
                let r = x.y.hypot(x.z);
                if r == 0.0 {
                    return Err(Error::UndefinedDirection);
                }
                Ok(Point::new(x.x.clamp(-1.0, 1.0), x.y / r, x.z / r))
            }
        }
    }
}

/// Per-vertex images `ŷ(p_j)` of the current surface on the reference
/// manifold. Time stepping never changes these values; only refinement and
/// coarsening do.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMap {
    pub manifold: ReferenceManifold,
    points: NodalField<Point>,
}

impl ReferenceMap {
    pub fn new(manifold: ReferenceManifold, mesh: &SurfaceMesh, points: Vec<Point>) -> Result<Self> {
        Ok(ReferenceMap {
            manifold,
            points: NodalField::new(mesh, points)?,
        })
    }

    pub fn points(&self) -> &[Point] {
        self.points.values()
    }

    pub fn field(&self) -> &NodalField<Point> {
        &self.points
    }

    pub fn check(&self, mesh: &SurfaceMesh) -> Result<()> {
        self.points.check(mesh)
    }

    /// Largest membership defect over all points, and over boundary
    /// vertices of `mesh` the largest distance from the manifold boundary.
    pub fn validity_defect(&self, mesh: &SurfaceMesh) -> (f64, f64) {
        let mut interior = 0.0f64;
        let mut boundary = 0.0f64;
        for (v, y) in self.points().iter().enumerate() {
            interior = interior.max(self.manifold.defect(y));
            if mesh.is_boundary_vertex(v) {
                let d = match self.manifold {
                    ReferenceManifold::HalfSphere => y.x.abs(),
                    ReferenceManifold::Cylinder => (y.x.abs() - 1.0).abs(),
                };
                boundary = boundary.max(d);
            }
        }
        (interior, boundary)
    }
}

/// Half-sphere approximation by `levels` global quadrisections of the
/// half-octahedron, with new vertices rescaled to unit length.
pub fn build_half_sphere(levels: usize) -> Result<SurfaceMesh> {
    let mut vertices = vec![
        Point::new(1.0, 0.0, 0.0),
        Point::new(0.0, 1.0, 0.0),
        Point::new(0.0, 0.0, 1.0),
        Point::new(0.0, -1.0, 0.0),
        Point::new(0.0, 0.0, -1.0),
    ];
    let mut triangles = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]];
    for _ in 0..levels {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = (vertices[a] + vertices[b]) * 0.5;
                let mut m = m / m.norm();
                if vertices[a].x == 0.0 && vertices[b].x == 0.0 {
                    m.x = 0.0;
                }
                vertices.push(m);
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(4 * triangles.len());
        for &[a, b, c] in &triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([ab, b, bc]);
            next.push([ca, bc, c]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }
    SurfaceMesh::new(vertices, triangles)
}

/// Structured cylinder mesh with `axial` segments along `x₁ ∈ [-1, 1]` and
/// `angular` segments around the axis; every quad is split along a diagonal.
pub fn build_cylinder(axial: usize, angular: usize) -> Result<SurfaceMesh> {
    if axial < 1 || angular < 3 {
        return Err(Error::Config(format!(
            "cylinder needs at least 1 axial and 3 angular segments, got {axial} and {angular}"
        )));
    }
    let mut vertices = Vec::with_capacity((axial + 1) * angular);
    for i in 0..=axial {
        let x1 = -1.0 + 2.0 * i as f64 / axial as f64;
        for j in 0..angular {
            let theta = 2.0 * PI * j as f64 / angular as f64;
            vertices.push(Point::new(x1, theta.cos(), theta.sin()));
        }
    }
    let id = |i: usize, j: usize| i * angular + (j % angular);
    let mut triangles = Vec::with_capacity(2 * axial * angular);
    for i in 0..axial {
        for j in 0..angular {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

/// Like [`build_cylinder`] but every quad is split into four triangles
/// around a centre vertex, which makes the mesh mirror-symmetric about each
/// vertex's meridian.
pub fn build_cylinder_crossed(axial: usize, angular: usize) -> Result<SurfaceMesh> {
    let grid = build_cylinder(axial, angular)?;
    let mut vertices = grid.vertices().to_vec();
    let id = |i: usize, j: usize| i * angular + (j % angular);
    let mut triangles = Vec::with_capacity(4 * axial * angular);
    for i in 0..axial {
        let x1 = -1.0 + (2.0 * i as f64 + 1.0) / axial as f64;
        for j in 0..angular {
            let theta = PI * (2.0 * j as f64 + 1.0) / angular as f64;
            vertices.push(Point::new(x1, theta.cos(), theta.sin()));
            let c = vertices.len() - 1;
            let (a, b, d, e) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.extend([[a, b, c], [b, d, c], [d, e, c], [e, a, c]]);
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

/// Stereographic projection from `(-1, 0, 0)` of the half-sphere onto the
/// unit disk in the plane `x₃ = 0`.
pub fn stereographic(x: &Point) -> Point {
    let d = 1.0 + x.x;
    Point::new(x.y / d, x.z / d, 0.0)
}

/// Inverse of [`stereographic`].
pub fn inverse_stereographic(w: &Point) -> Point {
    let s = w.x * w.x + w.y * w.y;
    Point::new((1.0 - s) / (1.0 + s), 2.0 * w.x / (1.0 + s), 2.0 * w.y / (1.0 + s))
}

/// Flat disk mesh with the half-sphere mesh as reference map.
pub fn stereographic_disk(half_sphere: &SurfaceMesh) -> Result<(SurfaceMesh, ReferenceMap)> {
    let disk: Vec<Point> = half_sphere.vertices().iter().map(stereographic).collect();
    let mesh = SurfaceMesh::new(disk, half_sphere.triangles().to_vec())?;
    let ymap = ReferenceMap::new(ReferenceManifold::HalfSphere, &mesh, half_sphere.vertices().to_vec())?;
    Ok((mesh, ymap))
}

/// Radius assigned to axial coordinate `x₁` by the exponential profile
/// `r₂ (r₁/r₂)^((x₁+1)/2)`.
pub fn annulus_radius(x1: f64, inner: f64, outer: f64) -> f64 {
    inner * (outer / inner).powf(0.5 * (x1 + 1.0))
}

/// Planar annulus `r₂ ≤ |x| ≤ r₁` with the cylinder mesh as reference map;
/// the `x₁ = -1` loop becomes the inner circle.
pub fn annulus_from_cylinder(cylinder: &SurfaceMesh, inner: f64, outer: f64) -> Result<(SurfaceMesh, ReferenceMap)> {
    if !(inner > 0.0 && inner < outer && outer.is_finite()) {
        return Err(Error::InvalidRadii { inner, outer });
    }
    let points: Vec<Point> = cylinder
        .vertices()
        .iter()
        .map(|y| {
            let r = annulus_radius(y.x, inner, outer);
            let len = y.y.hypot(y.z);
            Point::new(r * y.y / len, r * y.z / len, 0.0)
        })
        .collect();
    let mesh = SurfaceMesh::new(points, cylinder.triangles().to_vec())?;
    let ymap = ReferenceMap::new(ReferenceManifold::Cylinder, &mesh, cylinder.vertices().to_vec())?;
    Ok((mesh, ymap))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn half_octahedron_counts() {
        let m0 = build_half_sphere(0).unwrap();
        assert_eq!(
            (m0.triangle_count(), m0.vertex_count(), m0.boundary_edges().len()),
            (4, 5, 4)
        );
        let m1 = build_half_sphere(1).unwrap();
        assert_eq!(m1.triangle_count(), 16);
        for x in m1.vertices() {
            assert!((x.norm() - 1.0).abs() <= 1e-15);
        }
        let m2 = build_half_sphere(2).unwrap();
        assert_eq!(m2.triangle_count(), 64);
        let boundary: Vec<_> = (0..m2.vertex_count()).filter(|&v| m2.is_boundary_vertex(v)).collect();
        assert_eq!(boundary.len(), 16);
        assert!(boundary.iter().all(|&v| m2.vertex(v).x == 0.0));
        // outward orientation
        for t in 0..m2.triangle_count() {
            let [a, b, c] = m2.triangle_points(t);
            assert!(m2.triangle_cross(t).dot(&(a + b + c)) > 0.0);
        }
    }

    #[test]
    fn cylinder_counts() {
        let c = build_cylinder(1, 3).unwrap();
        assert_eq!((c.vertex_count(), c.triangle_count()), (6, 6));
        assert_eq!(c.boundary_loops().len(), 2);
        assert!(c.boundary_loops().iter().all(|l| l.len() == 3));
        let c = build_cylinder(2, 4).unwrap();
        assert_eq!((c.vertex_count(), c.triangle_count()), (12, 16));
        for x in c.vertices() {
            assert!(ReferenceManifold::Cylinder.defect(x) <= 1e-15);
        }
        assert!(build_cylinder(0, 4).is_err());
        assert!(build_cylinder(2, 2).is_err());
        let x = build_cylinder_crossed(2, 4).unwrap();
        assert_eq!((x.vertex_count(), x.triangle_count()), (20, 32));
        assert_eq!(x.boundary_loops().len(), 2);
    }

    #[test]
    fn conormals() {
        let hs = ReferenceManifold::HalfSphere;
        let cyl = ReferenceManifold::Cylinder;
        assert_eq!(hs.conormal(&Point::new(0., 1., 0.)).unwrap(), Vector3::new(1., 0., 0.));
        assert_eq!(cyl.conormal(&Point::new(1., 0., 1.)).unwrap(), Vector3::new(1., 0., 0.));
        assert_eq!(
            cyl.conormal(&Point::new(-1., 1., 0.)).unwrap(),
            Vector3::new(-1., 0., 0.)
        );
        assert!(hs.conormal(&Point::new(1., 0., 0.)).is_err());
        assert!(cyl.conormal(&Point::new(0., 1., 0.)).is_err());
    }

    #[test]
    fn tangent_projections() {
        let hs = ReferenceManifold::HalfSphere;
        let cyl = ReferenceManifold::Cylinder;
        let diag = |a, b, c| Matrix3::from_diagonal(&Vector3::new(a, b, c));
        assert_relative_eq!(
            hs.tangent_projection(&Point::new(0., 0., 1.)).unwrap(),
            diag(1., 1., 0.)
        );
        assert_relative_eq!(
            cyl.tangent_projection(&Point::new(0.5, 1., 0.)).unwrap(),
            diag(1., 0., 1.)
        );
        assert_relative_eq!(
            hs.tangent_projection(&Point::new(1., 0., 0.)).unwrap(),
            diag(0., 1., 1.)
        );
        assert!(hs.tangent_projection(&Point::new(0., 0., 2.)).is_err());
    }

    #[test]
    fn projections() {
        let hs = ReferenceManifold::HalfSphere;
        let cyl = ReferenceManifold::Cylinder;
        assert_eq!(hs.project(&Point::new(0., 0., 2.)).unwrap(), Point::new(0., 0., 1.));
        assert_eq!(cyl.project(&Point::new(0.3, 0., 2.)).unwrap(), Point::new(0.3, 0., 1.));
        assert_eq!(cyl.project(&Point::new(1.4, 1., 0.)).unwrap(), Point::new(1., 1., 0.));
        let snapped = hs.project(&Point::new(-1e-17, 0.6, 0.8)).unwrap();
        assert_eq!(snapped.x, 0.0);
        assert!(hs.on_boundary(&snapped));
        assert!(matches!(hs.project(&Point::zeros()), Err(Error::UndefinedDirection)));
        assert!(matches!(
            cyl.project(&Point::new(3., 0., 0.)),
            Err(Error::UndefinedDirection)
        ));
    }

    #[test]
    fn stereographic_special_points() {
        assert_eq!(stereographic(&Point::new(1., 0., 0.)), Point::zeros());
        assert_eq!(stereographic(&Point::new(0., 1., 0.)), Point::new(1., 0., 0.));
        let x = Point::new(0.5, 0.5, 0.5f64.sqrt()).normalize();
        let w = stereographic(&x);
        assert!(w.norm() < 1.0);
        assert_relative_eq!(inverse_stereographic(&w), x, epsilon = 1e-15);
    }

    #[test]
    fn stereographic_disk_keeps_orientation() {
        let hs = build_half_sphere(2).unwrap();
        let (disk, ymap) = stereographic_disk(&hs).unwrap();
        for t in 0..disk.triangle_count() {
            assert!(disk.triangle_cross(t).z > 0.0);
        }
        assert_eq!(ymap.points(), hs.vertices());
        for v in 0..disk.vertex_count() {
            if disk.is_boundary_vertex(v) {
                assert_relative_eq!(disk.vertex(v).norm(), 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn annulus_radii() {
        let cyl = build_cylinder(2, 8).unwrap();
        let (ann, ymap) = annulus_from_cylinder(&cyl, 0.25, 2.25).unwrap();
        for (x, y) in ann.vertices().iter().zip(ymap.points()) {
            let r = x.norm();
            if y.x == -1.0 {
                assert_relative_eq!(r, 0.25, epsilon = 1e-15);
            } else if y.x == 1.0 {
                assert_relative_eq!(r, 2.25, epsilon = 1e-15);
            } else if y.x == 0.0 {
                assert_relative_eq!(r, 0.75, epsilon = 1e-15);
            }
        }
        for t in 0..ann.triangle_count() {
            assert!(ann.triangle_cross(t).z > 0.0);
        }
        assert!(annulus_from_cylinder(&cyl, 2.0, 1.0).is_err());
        assert!(annulus_from_cylinder(&cyl, 0.0, 1.0).is_err());
    }
}
