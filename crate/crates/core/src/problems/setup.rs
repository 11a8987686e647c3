//! Initial surfaces and reference maps of the experiments.

use crate::error::Result;
use crate::mesh::{Point, SurfaceMesh};
use crate::reference::{
    annulus_from_cylinder, build_cylinder_crossed, build_half_sphere, stereographic_disk, ReferenceMap,
};

pub const ANNULUS_INNER: f64 = 0.25;
pub const ANNULUS_OUTER: f64 = 2.25;

/// Unit disk centred at `center` in the `x₃ = 0` plane, triangulated by the
/// stereographic image of the `levels`-times refined half-sphere.
pub fn disk(levels: usize, center: Point) -> Result<(SurfaceMesh, ReferenceMap)> {
    let hs = build_half_sphere(levels)?;
    let (mut mesh, ymap) = stereographic_disk(&hs)?;
    let moved = mesh.vertices().iter().map(|p| p + center).collect();
    mesh.set_vertices(moved)?;
    Ok((mesh, ymap))
}

/// Maps the stereographic disk through `f(r, φ)`; the reference map stays on
/// the half-sphere.
pub fn disk_graph(levels: usize, f: impl Fn(f64, f64) -> Point) -> Result<(SurfaceMesh, ReferenceMap)> {
    let (mut mesh, ymap) = disk(levels, Point::zeros())?;
    let moved = mesh
        .vertices()
        .iter()
        .map(|p| f(p.x.hypot(p.y), p.y.atan2(p.x)))
        .collect();
    mesh.set_vertices(moved)?;
    Ok((mesh, ymap))
}

/// Axial and angular segment counts of the annulus at level `n`: `2^n`
/// angular segments and as many axial ones as keep the log-polar cells square.
/// Each cell is split into four triangles, so level `n` resolves the circles
/// with `2^(n+1)` vertices.
pub fn annulus_segments(n: usize) -> (usize, usize) {
    let angular = 1usize << n;
    let ratio = (ANNULUS_OUTER / ANNULUS_INNER).ln() / (2.0 * std::f64::consts::PI);
    let axial = ((angular as f64 * ratio).round() as usize).max(1);
    (axial, angular)
}

/// Annulus `0.25 ≤ |x| ≤ 2.25` with the cylinder as reference manifold.
pub fn annulus(n: usize) -> Result<(SurfaceMesh, ReferenceMap)> {
    let (axial, angular) = annulus_segments(n);
    let cylinder = build_cylinder_crossed(axial, angular)?;
    annulus_from_cylinder(&cylinder, ANNULUS_INNER, ANNULUS_OUTER)
}

/// The wavy graph `X(r, φ)` used as initial surface for mean curvature flow.
pub fn example32_point(r: f64, phi: f64) -> Point {
    let s4 = (4.0 * phi).sin();
    let w = r * (1.0 + 0.25 * s4);
    Point::new(w * phi.cos(), w * phi.sin(), 0.25 * r * r * s4 + 0.75 * (1.0 - r * r))
}

pub fn mcf_example32_initial(levels: usize) -> Result<(SurfaceMesh, ReferenceMap)> {
    disk_graph(levels, example32_point)
}

/// Cone of the given height over the unit circle.
pub fn tent(levels: usize, height: f64) -> Result<(SurfaceMesh, ReferenceMap)> {
    disk_graph(levels, |r, phi| {
        Point::new(r * phi.cos(), r * phi.sin(), height * (1.0 - r))
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn example32_parametrization() {
        assert_abs_diff_eq!(example32_point(0.0, 1.3), Point::new(0.0, 0.0, 0.75), epsilon = 1e-16);
        assert_abs_diff_eq!(example32_point(1.0, 0.0), Point::new(1.0, 0.0, 0.0), epsilon = 1e-16);
        let a = PI / 8.0;
        let expect = Point::new(1.25 * a.cos(), 1.25 * a.sin(), 0.25);
        assert_abs_diff_eq!(example32_point(1.0, a), expect, epsilon = 1e-15);
    }

    #[test]
    fn initial_surfaces_are_valid() {
        let (mesh, ymap) = mcf_example32_initial(2).unwrap();
        ymap.check(&mesh).unwrap();
        assert!(mesh.sigma_max().unwrap().is_finite());
        let (mesh, _) = disk(2, Point::new(0.0, -0.5, 0.0)).unwrap();
        let c = mesh.vertices().iter().fold(Point::zeros(), |a, p| a + p) / mesh.vertex_count() as f64;
        assert_abs_diff_eq!(c.y, -0.5, epsilon = 1e-12);
        let (mesh, _) = annulus(3).unwrap();
        assert_eq!(annulus_segments(3), (3, 8));
        assert_eq!(annulus_segments(5), (11, 32));
        assert_eq!(mesh.boundary_loops().len(), 2);
        let sigma = mesh.sigma_max().unwrap();
        assert!(sigma < 8.0, "{sigma}");
        let (mesh, _) = tent(2, 0.5).unwrap();
        let top = mesh.vertices().iter().map(|p| p.z).fold(0.0, f64::max);
        assert_abs_diff_eq!(top, 0.5, epsilon = 1e-15);
    }
}
