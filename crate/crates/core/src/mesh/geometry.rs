use nalgebra::{Matrix3, Vector3};

use super::{Point, SurfaceMesh};
use crate::error::{Error, Result};

/// Summary of mesh shape quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    /// Largest ratio of diameter to inradius over all triangles.
    pub sigma_max: f64,
    /// Triangle attaining `sigma_max`.
    pub worst_triangle: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub area_min: f64,
    pub area_max: f64,
    pub total_area: f64,
    pub triangle_count: usize,
    pub vertex_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshMetrics {
    /// Smallest triangle diameter.
    pub h_min: f64,
    pub total_area: f64,
    pub areas: Vec<f64>,
}

/// `area <= ratio * h^2`, also true for NaN areas.
fn is_degenerate(area: f64, diameter: f64, ratio: f64) -> bool {
    !(area > ratio * diameter * diameter)
}

impl SurfaceMesh {
    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Non-normalized normal `(x1 - x0) × (x2 - x0)`; its length is twice the area.
    pub fn triangle_cross(&self, t: usize) -> Vector3<f64> {
        let [x0, x1, x2] = self.triangle_points(t);
        (x1 - x0).cross(&(x2 - x0))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.triangle_cross(t).norm()
    }

    /// Longest edge length.
    pub fn triangle_diameter(&self, t: usize) -> f64 {
        let [x0, x1, x2] = self.triangle_points(t);
        (x1 - x0).norm().max((x2 - x1).norm()).max((x0 - x2).norm())
    }

    pub(crate) fn check_triangle(&self, t: usize, ratio: f64) -> Result<f64> {
        let area = self.triangle_area(t);
        let diameter = self.triangle_diameter(t);
        if is_degenerate(area, diameter, ratio) {
            return Err(Error::DegenerateTriangle {
                triangle: t,
                area,
                diameter,
            });
        }
        Ok(area)
    }

    pub fn triangle_normal(&self, t: usize) -> Result<Vector3<f64>> {
        self.check_triangle(t, super::DEGENERATE_AREA_RATIO)?;
        Ok(self.triangle_cross(t).normalize())
    }

    /// Ratio of diameter to inradius, `h(S) / ρ(S)` with `ρ = area / semi-perimeter`.
    pub fn triangle_quality(&self, t: usize) -> Result<f64> {
        let [x0, x1, x2] = self.triangle_points(t);
        let (a, b, c) = ((x1 - x0).norm(), (x2 - x1).norm(), (x0 - x2).norm());
        let area = self.check_triangle(t, super::DEGENERATE_AREA_RATIO)?;
        let semi = 0.5 * (a + b + c);
        Ok(a.max(b).max(c) * semi / area)
    }

    pub fn quality(&self) -> Result<QualityReport> {
        if self.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mut report = QualityReport {
            sigma_max: 0.0,
            worst_triangle: 0,
            h_min: f64::INFINITY,
            h_max: 0.0,
            area_min: f64::INFINITY,
            area_max: 0.0,
            total_area: 0.0,
            triangle_count: self.triangle_count(),
            vertex_count: self.vertex_count(),
        };
        for t in 0..self.triangle_count() {
            let q = self.triangle_quality(t)?;
            if q > report.sigma_max {
                report.sigma_max = q;
                report.worst_triangle = t;
            }
            let h = self.triangle_diameter(t);
            let area = self.triangle_area(t);
            report.h_min = report.h_min.min(h);
            report.h_max = report.h_max.max(h);
            report.area_min = report.area_min.min(area);
            report.area_max = report.area_max.max(area);
            report.total_area += area;
        }
        Ok(report)
    }

    pub fn sigma_max(&self) -> Result<f64> {
        self.quality().map(|q| q.sigma_max)
    }

    pub fn metrics(&self) -> MeshMetrics {
        let areas: Vec<f64> = (0..self.triangle_count()).map(|t| self.triangle_area(t)).collect();
        let h_min = (0..self.triangle_count())
            .map(|t| self.triangle_diameter(t))
            .fold(f64::INFINITY, f64::min);
        MeshMetrics {
            h_min,
            total_area: areas.iter().sum(),
            areas,
        }
    }

    pub fn h_min(&self) -> f64 {
        (0..self.triangle_count())
            .map(|t| self.triangle_diameter(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangle_count()).map(|t| self.triangle_area(t)).sum()
    }

    /// `I - n ⊗ n` for the unit normal of triangle `t`.
    pub fn tangential_projection(&self, t: usize) -> Result<Matrix3<f64>> {
        let n = self.triangle_normal(t)?;
        Ok(Matrix3::identity() - n * n.transpose())
    }

    /// Gradients of the three barycentric hat functions; they lie in the
    /// plane of the triangle.
    pub fn basis_gradients(&self, t: usize) -> Result<[Vector3<f64>; 3]> {
        self.check_triangle(t, super::DEGENERATE_AREA_RATIO)?;
        Ok(self.basis_gradients_unchecked(t))
    }

    pub(crate) fn basis_gradients_unchecked(&self, t: usize) -> [Vector3<f64>; 3] {
        let [x0, x1, x2] = self.triangle_points(t);
        let e1 = x1 - x0;
        let e2 = x2 - x0;
        let g11 = e1.dot(&e1);
        let g12 = e1.dot(&e2);
        let g22 = e2.dot(&e2);
        let det = g11 * g22 - g12 * g12;
        let d1 = (e1 * g22 - e2 * g12) / det;
        let d2 = (e2 * g11 - e1 * g12) / det;
        [-(d1 + d2), d1, d2]
    }

    /// Constant tangential gradient of the affine interpolant of `values`
    /// (given at the triangle's vertices in storage order).
    pub fn tangential_gradient(&self, t: usize, values: [f64; 3]) -> Result<Vector3<f64>> {
        let g = self.basis_gradients(t)?;
        Ok(g[0] * values[0] + g[1] * values[1] + g[2] * values[2])
    }

    /// Outward in-plane unit co-normal of boundary edge `e` within its triangle.
    pub fn boundary_edge_conormal(&self, e: usize) -> Vector3<f64> {
        let [a, b] = self.boundary_edges[e];
        let t = self.boundary_edge_triangle[e];
        let tri = self.triangles[t];
        let c = tri
            .iter()
            .copied()
            .find(|&v| v != a && v != b)
            .expect("triangle has 3 vertices");
        let (xa, xb, xc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let edge = (xb - xa).normalize();
        let out = (xa + xb) * 0.5 - xc;
        (out - edge * edge.dot(&out)).normalize()
    }

    /// Normalized sum of the outward co-normals of the two boundary edges at
    /// boundary vertex `v`.
    pub fn vertex_conormal(&self, v: usize) -> Result<Vector3<f64>> {
        let (prev, _) = self
            .boundary_neighbors(v)
            .ok_or(Error::NotBoundaryVertex { vertex: v })?;
        let mut sum = Vector3::zeros();
        for u in [prev, v] {
            let e = self.boundary_out_edge[u].ok_or(Error::NotBoundaryVertex { vertex: u })?;
            sum += self.boundary_edge_conormal(e);
        }
        let norm = sum.norm();
        if norm < 1e-12 {
            return Err(Error::ZeroConormalSum { vertex: v });
        }
        Ok(sum / norm)
    }

    /// Unit tangent of the discrete boundary at `v`: the normalized sum of
    /// the two edge tangents, oriented so that their dot product is
    /// non-negative.
    pub fn boundary_tangent(&self, v: usize) -> Result<Vector3<f64>> {
        let (prev, next) = self
            .boundary_neighbors(v)
            .ok_or(Error::NotBoundaryVertex { vertex: v })?;
        let incoming = self.vertices[v] - self.vertices[prev];
        let outgoing = self.vertices[next] - self.vertices[v];
        let (li, lo) = (incoming.norm(), outgoing.norm());
        if li == 0.0 || lo == 0.0 {
            return Err(Error::ZeroTangentSum { vertex: v });
        }
        let t1 = incoming / li;
        let mut t2 = outgoing / lo;
        if t1.dot(&t2) < 0.0 {
            t2 = -t2;
        }
        let sum = t1 + t2;
        let norm = sum.norm();
        if norm < 1e-12 {
            return Err(Error::ZeroTangentSum { vertex: v });
        }
        Ok(sum / norm)
    }

    /// Rank-one projection `t ⊗ t` onto the discrete boundary tangent at `v`.
    pub fn boundary_tangent_projection(&self, v: usize) -> Result<Matrix3<f64>> {
        let t = self.boundary_tangent(v)?;
        Ok(t * t.transpose())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::SQRT_2;

    use approx::assert_relative_eq;

    use super::*;

    fn p(x: f64, y: f64, z: f64) -> Point {
        Point::new(x, y, z)
    }

    fn equilateral_strip(n: usize) -> SurfaceMesh {
        // n x 1 strip of equilateral triangles
        let h = 3f64.sqrt() / 2.0;
        let mut verts = Vec::new();
        for i in 0..=n {
            verts.push(p(i as f64, 0.0, 0.0));
        }
        for i in 0..=n {
            verts.push(p(i as f64 + 0.5, h, 0.0));
        }
        let top = n + 1;
        let mut tris = Vec::new();
        for i in 0..n {
            tris.push([i, i + 1, top + i]);
            tris.push([i + 1, top + i + 1, top + i]);
        }
        SurfaceMesh::new(verts, tris).unwrap()
    }

    #[test]
    fn quality_of_reference_triangles() {
        let h = 3f64.sqrt() / 2.0;
        let eq = SurfaceMesh::new(vec![p(0., 0., 0.), p(1., 0., 0.), p(0.5, h, 0.)], vec![[0, 1, 2]]).unwrap();
        // rho = (sqrt(3)/4) / (3/2)
        let rho = (3f64.sqrt() / 4.0) / 1.5;
        assert_relative_eq!(eq.triangle_quality(0).unwrap(), 1.0 / rho, epsilon = 1e-14);
        assert_relative_eq!(eq.triangle_quality(0).unwrap(), 2.0 * 3f64.sqrt(), epsilon = 1e-14);

        let right = SurfaceMesh::new(vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.)], vec![[0, 1, 2]]).unwrap();
        let rho = 0.5 / ((2.0 + SQRT_2) / 2.0);
        assert_relative_eq!(rho, (2.0 - SQRT_2) / 2.0, epsilon = 1e-15);
        assert_relative_eq!(right.triangle_quality(0).unwrap(), SQRT_2 / rho, epsilon = 1e-13);
        assert_relative_eq!(
            right.triangle_quality(0).unwrap(),
            2.0 + 2.0 * std::f64::consts::SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sigma_max_takes_the_worst_triangle() {
        let strip = equilateral_strip(3);
        assert_relative_eq!(strip.sigma_max().unwrap(), 2.0 * 3f64.sqrt(), epsilon = 1e-12);

        let h = 3f64.sqrt() / 2.0;
        let mixed = SurfaceMesh::new(
            vec![p(0., 0., 0.), p(1., 0., 0.), p(0.5, h, 0.), p(1., -1., 0.)],
            vec![[0, 1, 2], [0, 3, 1]],
        )
        .unwrap();
        // the second triangle is right isoceles with legs 1
        assert_relative_eq!(
            mixed.sigma_max().unwrap(),
            2.0 + 2.0 * std::f64::consts::SQRT_2,
            epsilon = 1e-12
        );

        let empty = SurfaceMesh::new(vec![], vec![]).unwrap();
        assert!(matches!(empty.quality(), Err(Error::EmptyMesh)));
    }

    #[test]
    fn projection_of_axis_aligned_and_tilted_planes() {
        let flat = SurfaceMesh::new(vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.)], vec![[0, 1, 2]]).unwrap();
        let proj = flat.tangential_projection(0).unwrap();
        assert_relative_eq!(proj, Matrix3::from_diagonal(&Vector3::new(1., 1., 0.)), epsilon = 1e-15);

        // plane x1 = x3
        let tilted = SurfaceMesh::new(vec![p(0., 0., 0.), p(1., 0., 1.), p(0., 1., 0.)], vec![[0, 1, 2]]).unwrap();
        let proj = tilted.tangential_projection(0).unwrap();
        let expected = Matrix3::new(0.5, 0.0, 0.5, 0.0, 1.0, 0.0, 0.5, 0.0, 0.5);
        assert_relative_eq!(proj, expected, epsilon = 1e-15);
        let [x0, x1, x2] = tilted.triangle_points(0);
        for e in [x1 - x0, x2 - x1, x0 - x2] {
            assert_relative_eq!(proj * e, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn gradients_of_simple_functions() {
        let mesh = SurfaceMesh::new(vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.)], vec![[0, 1, 2]]).unwrap();
        // values follow storage order, which starts at the longest edge
        let values_of = |f: &dyn Fn(Point) -> f64| {
            let [a, b, c] = mesh.triangle_points(0);
            [f(a), f(b), f(c)]
        };
        let g = mesh.tangential_gradient(0, values_of(&|x| x.x)).unwrap();
        assert_relative_eq!(g, Vector3::new(1., 0., 0.), epsilon = 1e-15);
        let g = mesh.tangential_gradient(0, [2.5; 3]).unwrap();
        assert_relative_eq!(g, Vector3::zeros(), epsilon = 1e-15);
        let g = mesh.tangential_gradient(0, values_of(&|x| x.y)).unwrap();
        assert_relative_eq!(g, Vector3::new(0., 1., 0.), epsilon = 1e-15);
    }

    #[test]
    fn conormals_on_straight_and_corner_boundaries() {
        // unit square with the diagonal (0,2): straight bottom edge through vertex 4
        let mesh = SurfaceMesh::new(
            vec![
                p(0., 0., 0.),
                p(2., 0., 0.),
                p(2., 1., 0.),
                p(0., 1., 0.),
                p(1., 0., 0.),
            ],
            vec![[0, 4, 3], [4, 1, 2], [4, 2, 3]],
        )
        .unwrap();
        assert_relative_eq!(
            mesh.vertex_conormal(4).unwrap(),
            Vector3::new(0., -1., 0.),
            epsilon = 1e-15
        );
        let corner = mesh.vertex_conormal(0).unwrap();
        assert_relative_eq!(corner, Vector3::new(-1., -1., 0.) / SQRT_2, epsilon = 1e-15);

        let interior = SurfaceMesh::new(
            vec![
                p(0., 0., 0.),
                p(1., 0., 0.),
                p(0., 1., 0.),
                p(-1., 0., 0.),
                p(0., -1., 0.),
            ],
            vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]],
        )
        .unwrap();
        assert!(matches!(
            interior.vertex_conormal(0),
            Err(Error::NotBoundaryVertex { .. })
        ));
    }

    #[test]
    fn boundary_tangent_projections() {
        let mesh = SurfaceMesh::new(
            vec![
                p(0., 0., 0.),
                p(2., 0., 0.),
                p(2., 1., 0.),
                p(0., 1., 0.),
                p(1., 0., 0.),
            ],
            vec![[0, 4, 3], [4, 1, 2], [4, 2, 3]],
        )
        .unwrap();
        let t = mesh.boundary_tangent_projection(4).unwrap();
        assert_relative_eq!(t, Matrix3::from_diagonal(&Vector3::new(1., 0., 0.)), epsilon = 1e-15);
        // corner at vertex 1: incoming (1,0,0), outgoing (0,1,0)
        let t = mesh.boundary_tangent_projection(1).unwrap();
        let expected = Matrix3::new(1., 1., 0., 1., 1., 0., 0., 0., 0.) * 0.5;
        assert_relative_eq!(t, expected, epsilon = 1e-15);
        assert_relative_eq!(t * t, t, epsilon = 1e-15);
    }

    #[test]
    fn metrics_of_simple_meshes() {
        let right = SurfaceMesh::new(vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.)], vec![[0, 1, 2]]).unwrap();
        let m = right.metrics();
        assert_relative_eq!(m.total_area, 0.5);
        assert_relative_eq!(m.h_min, SQRT_2, epsilon = 1e-15);

        let h = 3f64.sqrt() / 2.0;
        let two = SurfaceMesh::new(
            vec![
                p(0., 0., 0.),
                p(1., 0., 0.),
                p(0.5, h, 0.),
                p(5., 0., 0.),
                p(6., 0., 0.),
                p(5.5, h, 0.),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        assert_relative_eq!(two.total_area(), 2.0 * 3f64.sqrt() / 4.0, epsilon = 1e-15);

        let scaled = SurfaceMesh::new(right.vertices().iter().map(|x| x * 2.0).collect(), vec![[0, 1, 2]]).unwrap();
        let ms = scaled.metrics();
        assert_relative_eq!(ms.areas[0], 4.0 * m.areas[0], epsilon = 1e-15);
        assert_relative_eq!(ms.h_min, 2.0 * m.h_min, epsilon = 1e-15);
    }
}
