//! Analytic moving surfaces given as zero level sets of `phi(x, t)`.
//!
//! Every surface also carries an exact parametric motion: radial scaling for
//! spheres and an angle-preserving map for tori. Nodes moved by
//! [`LevelSetSurface::move_node`] stay on the zero set for all time, so the
//! discrete surfaces never drift.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Tolerance on `|phi|` used by the Newton projection.
pub const PROJECTION_TOL: f64 = 1e-12;
/// Iteration cap for the Newton projection.
pub const PROJECTION_MAX_ITER: usize = 50;
/// A point whose `|phi|` exceeds this is not treated as a surface point.
pub const OFF_SURFACE_TOL: f64 = 1e-8;

const GRADIENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelSetSurface {
    /// `|x|^2 - radius^2`.
    StaticSphere { radius: f64 },
    /// `|x|^2 - mean - amplitude * cos(omega * t)`.
    OscillatingSphere { mean: f64, amplitude: f64, omega: f64 },
    /// Torus with `R(t) = major * (1 + rate t)` and `r(t) = minor / (1 + rate t)`,
    /// so that `R r` and therefore the area is constant.
    ConstantAreaTorus { major: f64, minor: f64, rate: f64 },
    /// Torus with fixed `R = major` and `r(t) = minor + amplitude * sin(omega * t)`.
    PeriodicTorus {
        major: f64,
        minor: f64,
        amplitude: f64,
        omega: f64,
    },
}

impl LevelSetSurface {
    pub fn unit_sphere() -> Self {
        LevelSetSurface::StaticSphere { radius: 1.0 }
    }

    /// `x^2 + y^2 + z^2 - 0.9 - 0.1 cos(20 pi t)`.
    pub fn oscillating_sphere() -> Self {
        LevelSetSurface::OscillatingSphere {
            mean: 0.9,
            amplitude: 0.1,
            omega: 20.0 * PI,
        }
    }

    /// `(sqrt(x^2 + y^2) - 0.75 (1 + 4t/3))^2 + z^2 - (0.25 / (1 + 4t/3))^2`.
    pub fn constant_area_torus() -> Self {
        LevelSetSurface::ConstantAreaTorus {
            major: 0.75,
            minor: 0.25,
            rate: 4.0 / 3.0,
        }
    }

    /// `(sqrt(x^2 + y^2) - 0.75)^2 + z^2 - (0.25 + 0.1 sin(20 pi t))^2`.
    pub fn periodic_torus() -> Self {
        LevelSetSurface::PeriodicTorus {
            major: 0.75,
            minor: 0.25,
            amplitude: 0.1,
            omega: 20.0 * PI,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LevelSetSurface::StaticSphere { .. } => "static_sphere",
            LevelSetSurface::OscillatingSphere { .. } => "oscillating_sphere",
            LevelSetSurface::ConstantAreaTorus { .. } => "constant_area_torus",
            LevelSetSurface::PeriodicTorus { .. } => "periodic_torus",
        }
    }

    /// The builtin surface with this [`name`](Self::name).
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "static_sphere" => Some(LevelSetSurface::unit_sphere()),
            "oscillating_sphere" => Some(LevelSetSurface::oscillating_sphere()),
            "constant_area_torus" => Some(LevelSetSurface::constant_area_torus()),
            "periodic_torus" => Some(LevelSetSurface::periodic_torus()),
            _ => None,
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(
            self,
            LevelSetSurface::StaticSphere { .. } | LevelSetSurface::OscillatingSphere { .. }
        )
    }

    pub fn is_torus(&self) -> bool {
        !self.is_sphere()
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self, LevelSetSurface::StaticSphere { .. })
    }

    /// Sphere radius and its time derivative.
    fn sphere_radius(&self, t: f64) -> Option<(f64, f64)> {
        match *self {
            LevelSetSurface::StaticSphere { radius } => Some((radius, 0.0)),
            LevelSetSurface::OscillatingSphere {
                mean,
                amplitude,
                omega,
            } => {
                let r = (mean + amplitude * (omega * t).cos()).sqrt();
                let dr = -amplitude * omega * (omega * t).sin() / (2.0 * r);
                Some((r, dr))
            }
            _ => None,
        }
    }

    /// Torus radii `(R, r)` and their derivatives `(R', r')`.
    fn torus_radii(&self, t: f64) -> Option<((f64, f64), (f64, f64))> {
        match *self {
            LevelSetSurface::ConstantAreaTorus { major, minor, rate } => {
                let s = 1.0 + rate * t;
                Some((
                    (major * s, minor / s),
                    (major * rate, -minor * rate / (s * s)),
                ))
            }
            LevelSetSurface::PeriodicTorus {
                major,
                minor,
                amplitude,
                omega,
            } => Some((
                (major, minor + amplitude * (omega * t).sin()),
                (0.0, amplitude * omega * (omega * t).cos()),
            )),
            _ => None,
        }
    }

    /// Exact area of `Gamma(t)`.
    pub fn exact_area(&self, t: f64) -> f64 {
        if let Some((r, _)) = self.sphere_radius(t) {
            4.0 * PI * r * r
        } else {
            let ((big, small), _) = self.torus_radii(t).unwrap();
            4.0 * PI * PI * big * small
        }
    }

    pub fn level_set_value(&self, x: Vec3, t: f64) -> f64 {
        match *self {
            LevelSetSurface::StaticSphere { radius } => x.norm_squared() - radius * radius,
            LevelSetSurface::OscillatingSphere {
                mean,
                amplitude,
                omega,
            } => x.norm_squared() - mean - amplitude * (omega * t).cos(),
            _ => {
                let ((big, small), _) = self.torus_radii(t).unwrap();
                let rho = x.x.hypot(x.y);
                (rho - big).powi(2) + x.z * x.z - small * small
            }
        }
    }

    pub fn level_set_gradient(&self, x: Vec3, t: f64) -> Result<Vec3> {
        let g = if self.is_sphere() {
            2.0 * x
        } else {
            let ((big, _), _) = self.torus_radii(t).unwrap();
            let rho = x.x.hypot(x.y);
            if rho < GRADIENT_EPS {
                return Err(singular(x));
            }
            let radial = 2.0 * (rho - big) / rho;
            Vec3::new(radial * x.x, radial * x.y, 2.0 * x.z)
        };
        if g.norm() < GRADIENT_EPS {
            return Err(singular(x));
        }
        Ok(g)
    }

    /// Closest-point style projection by damped Newton along `grad phi`.
    pub fn project_to_surface(&self, x: Vec3, t: f64) -> Result<Vec3> {
        let mut p = x;
        let mut value = self.level_set_value(p, t);
        let mut iterations = 0;
        while value.abs() > PROJECTION_TOL {
            if iterations == PROJECTION_MAX_ITER {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: value.abs(),
                });
            }
            iterations += 1;
            let g = self.level_set_gradient(p, t)?;
            let step = g * (value / g.norm_squared());
            let mut damping = 1.0;
            loop {
                let candidate = p - step * damping;
                let candidate_value = self.level_set_value(candidate, t);
                if candidate_value.abs() < value.abs() || damping < 1e-4 {
                    p = candidate;
                    value = candidate_value;
                    break;
                }
                damping *= 0.5;
            }
        }
        // a few more Newton steps, kept only while they still reduce |phi|
        for _ in 0..3 {
            if value == 0.0 {
                break;
            }
            let g = self.level_set_gradient(p, t)?;
            let candidate = p - g * (value / g.norm_squared());
            let candidate_value = self.level_set_value(candidate, t);
            if candidate_value.abs() >= value.abs() {
                break;
            }
            p = candidate;
            value = candidate_value;
        }
        Ok(p)
    }

    fn check_on_surface(&self, x: Vec3, t: f64) -> Result<()> {
        let residual = self.level_set_value(x, t).abs();
        if residual > OFF_SURFACE_TOL || !residual.is_finite() {
            return Err(Error::OffSurface { time: t, residual });
        }
        Ok(())
    }

    /// Transports a surface point from `t0` to `t1` along the parametric flow.
    pub fn move_node(&self, x0: Vec3, t0: f64, t1: f64) -> Result<Vec3> {
        self.check_on_surface(x0, t0)?;
        if t0 == t1 {
            return Ok(x0);
        }
        if let Some((r0, _)) = self.sphere_radius(t0) {
            let (r1, _) = self.sphere_radius(t1).unwrap();
            return Ok(x0 * (r1 / r0));
        }
        let (azimuth, poloidal) = self.torus_angles(x0, t0)?;
        let ((big, small), _) = self.torus_radii(t1).unwrap();
        Ok(torus_point(big, small, azimuth, poloidal))
    }

    /// Velocity of the parametric flow at a surface point.
    pub fn node_velocity(&self, x: Vec3, t: f64) -> Result<Vec3> {
        self.check_on_surface(x, t)?;
        if let Some((r, dr)) = self.sphere_radius(t) {
            return Ok(x * (dr / r));
        }
        let (azimuth, poloidal) = self.torus_angles(x, t)?;
        let (_, (dbig, dsmall)) = self.torus_radii(t).unwrap();
        let radial = dbig + dsmall * poloidal.cos();
        Ok(Vec3::new(
            radial * azimuth.cos(),
            radial * azimuth.sin(),
            dsmall * poloidal.sin(),
        ))
    }

    fn torus_angles(&self, x: Vec3, t: f64) -> Result<(f64, f64)> {
        let ((big, _), _) = self.torus_radii(t).unwrap();
        let rho = x.x.hypot(x.y);
        if rho < GRADIENT_EPS {
            return Err(singular(x));
        }
        Ok((x.y.atan2(x.x), x.z.atan2(rho - big)))
    }

    /// Point with the given azimuthal and poloidal angles on a torus surface at
    /// time `t`. Returns `None` for spheres.
    pub fn torus_parametrisation(&self, azimuth: f64, poloidal: f64, t: f64) -> Option<Vec3> {
        let ((big, small), _) = self.torus_radii(t)?;
        Some(torus_point(big, small, azimuth, poloidal))
    }
}

fn torus_point(big: f64, small: f64, azimuth: f64, poloidal: f64) -> Vec3 {
    let rho = big + small * poloidal.cos();
    Vec3::new(rho * azimuth.cos(), rho * azimuth.sin(), small * poloidal.sin())
}

fn singular(x: Vec3) -> Error {
    Error::SingularPoint {
        x: x.x,
        y: x.y,
        z: x.z,
    }
}
