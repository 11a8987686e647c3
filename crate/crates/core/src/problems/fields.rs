//! Closed-form velocity, forcing and exact-solution fields of the
//! experiments.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::mesh::Point;

/// Polar angle in `[0, 2π)`.
fn angle(x: &Point) -> f64 {
    let phi = x.y.atan2(x.x);
    if phi < 0.0 {
        phi + 2.0 * PI
    } else {
        phi
    }
}

/// `v = (0, −x₂(1 − x₁²)² + 0.2x₁, 0)`.
pub fn velocity_example21(x: &Point, _t: f64) -> Vector3<f64> {
    let s = 1.0 - x.x * x.x;
    Vector3::new(0.0, -x.y * s * s + 0.2 * x.x, 0.0)
}

/// `v = (1.5x₁x₃, 0.5x₂x₃, r² sin(4φ) cos(πt/2))`.
pub fn velocity_example31(x: &Point, t: f64) -> Vector3<f64> {
    let r2 = x.x * x.x + x.y * x.y;
    let phi = angle(x);
    Vector3::new(
        1.5 * x.x * x.z,
        0.5 * x.y * x.z,
        r2 * (4.0 * phi).sin() * (PI * t / 2.0).cos(),
    )
}

/// Star-shaped radial modulation `v = a sin(kφ) r^(p−1) x` applied before
/// the redistribution starts. The field is zero from `t = 0` on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1Deformation {
    pub amplitude: f64,
    pub frequency: u32,
    /// Radial exponent `p`; larger values confine the distortion to the rim.
    pub power: f64,
    /// The deformation acts on `[-duration, 0)`.
    pub duration: f64,
}

impl Default for Example1Deformation {
    fn default() -> Self {
        Example1Deformation {
            amplitude: 8.0,
            frequency: 5,
            power: 1.0,
            duration: 0.02,
        }
    }
}

impl Example1Deformation {
    pub fn velocity(&self, x: &Point, t: f64) -> Vector3<f64> {
        if t >= 0.0 || t < -self.duration {
            return Vector3::zeros();
        }
        let r = x.x.hypot(x.y);
        if r == 0.0 {
            return Vector3::zeros();
        }
        let s = self.amplitude * (self.frequency as f64 * angle(x)).sin() * r.powf(self.power - 1.0);
        Vector3::new(s * x.x, s * x.y, 0.0)
    }
}

/// Medium velocity of the advection-diffusion experiment,
/// `7(1 − 16|x|²/81)(−sin 2πt, cos 2πt, 0)`.
pub fn ale_velocity(x: &Point, t: f64) -> Vector3<f64> {
    let w = 7.0 * (1.0 - 16.0 / 81.0 * (x.x * x.x + x.y * x.y));
    let (s, c) = (2.0 * PI * t).sin_cos();
    Vector3::new(-w * s, w * c, 0.0)
}

/// `p(x, t) = cos(2πt) exp(−|x|²)`.
pub fn ale_exact(x: &Point, t: f64) -> f64 {
    (2.0 * PI * t).cos() * (-x.norm_squared()).exp()
}

/// Ambient gradient of [`ale_exact`].
pub fn ale_exact_gradient(x: &Point, t: f64) -> Vector3<f64> {
    x * (-2.0 * ale_exact(x, t))
}

/// Source term for which [`ale_exact`] solves the advection-diffusion
/// equation with medium velocity [`ale_velocity`] and diffusivity `d`.
pub fn ale_forcing(x: &Point, t: f64, d: f64) -> f64 {
    let (s, c) = (2.0 * PI * t).sin_cos();
    let k = 112.0 / 81.0;
    let v0 = Vector3::new(k * s, -k * c, 0.0);
    let v = ale_velocity(x, t);
    let r2 = x.norm_squared();
    (c * (2.0 * v0.dot(x) - 2.0 * v.dot(x) + 4.0 * d * (1.0 - r2)) - 2.0 * PI * s) * (-r2).exp()
}
