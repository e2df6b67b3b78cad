//! Cameras, rays, azimuths and farthest-point camera rigs.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)] // inherent f64 methods take over when std is linked
use num_traits::Float;
use rand::Rng;

use crate::rng::seeded;
use crate::vec3::{Mat3, Vec3};
use crate::{Error, Result};

/// Pinhole camera. `rotation` maps camera-frame directions to world frame;
/// the camera looks down its local −z axis with +y up and +x right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub center: Vec3,
    pub rotation: Mat3,
    pub focal: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraPose {
    pub fn new(center: Vec3, rotation: Mat3, focal: f64, width: u32, height: u32) -> Result<Self> {
        let pose = CameraPose {
            center,
            rotation,
            focal,
            width,
            height,
        };
        pose.validate()?;
        Ok(pose)
    }

    /// Camera at `center` looking at `target`.
    pub fn looking_at(center: Vec3, target: Vec3, up: Vec3, focal: f64, width: u32, height: u32) -> Result<Self> {
        CameraPose::new(center, look_at_pose(center, target, up)?, focal, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::Invalid("camera center is not finite".into()));
        }
        if self.rotation.orthonormality_error() > 1e-9 || (self.rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("camera rotation is not a proper rotation".into()));
        }
        if !(self.focal > 0.0) {
            return Err(Error::Invalid("focal length must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Invalid("image size must be at least 1x1".into()));
        }
        Ok(())
    }

    /// World-space viewing direction (the camera's −z axis).
    pub fn view_axis(&self) -> Vec3 {
        -self.rotation.column(2)
    }

    /// Row-major 4×4 camera-to-world matrix.
    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation.rows;
        let c = self.center;
        [
            [r[0][0], r[0][1], r[0][2], c.x],
            [r[1][0], r[1][1], r[1][2], c.y],
            [r[2][0], r[2][1], r[2][2], c.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn from_matrix(m: &[[f64; 4]; 4], focal: f64, width: u32, height: u32) -> Result<Self> {
        let rotation = Mat3 {
            rows: [
                [m[0][0], m[0][1], m[0][2]],
                [m[1][0], m[1][1], m[1][2]],
                [m[2][0], m[2][1], m[2][2]],
            ],
        };
        CameraPose::new(Vec3::new(m[0][3], m[1][3], m[2][3]), rotation, focal, width, height)
    }

    /// Projects a world point to continuous pixel coordinates. `None` when the
    /// point is behind the camera.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        let local = self.rotation.transpose().mul_vec(p - self.center);
        if local.z >= 0.0 {
            return None;
        }
        let depth = -local.z;
        let u = self.focal * local.x / depth + 0.5 * self.width as f64;
        let v = -self.focal * local.y / depth + 0.5 * self.height as f64;
        Some((u, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub near: f64,
    pub far: f64,
}

impl Ray {
    /// Ray with a normalized direction and unbounded extent.
    pub fn new(origin: Vec3, direction: Vec3) -> Ray {
        Ray {
            origin,
            direction: direction.normalized(),
            near: 0.0,
            far: f64::INFINITY,
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Planar polar angle of `center` about the vertical axis, `atan2(y, x)`
/// wrapped to `[0, 2π)`.
pub fn azimuth(center: Vec3) -> Result<f64> {
    if center.x == 0.0 && center.y == 0.0 {
        return Err(Error::DegenerateAzimuth);
    }
    Ok(wrap_angle(center.y.atan2(center.x)))
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = num_traits::Euclid::rem_euclid(&a, &TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Unsigned angular distance between two azimuths, in `[0, π]`.
pub fn azimuth_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// Lowest and highest camera elevations used for hemisphere rigs.
pub const MIN_ELEVATION_DEG: f64 = 5.0;
pub const MAX_ELEVATION_DEG: f64 = 85.0;

/// `n` points of a Fibonacci lattice on the upper hemisphere of `radius`
/// around `origin`, restricted to elevations in
/// [[`MIN_ELEVATION_DEG`], [`MAX_ELEVATION_DEG`]]. Points are equal-area
/// spaced: heights are uniform in `z` over the band.
pub fn fibonacci_hemisphere(n: usize, radius: f64, origin: Vec3) -> Vec<Vec3> {
    fibonacci_hemisphere_rotated(n, radius, origin, 0.0)
}

/// As [`fibonacci_hemisphere`] with every azimuth offset by `phase` radians.
pub fn fibonacci_hemisphere_rotated(n: usize, radius: f64, origin: Vec3, phase: f64) -> Vec<Vec3> {
    let z_lo = (MIN_ELEVATION_DEG * PI / 180.0).sin();
    let z_hi = (MAX_ELEVATION_DEG * PI / 180.0).sin();
    let golden = PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let z = z_lo + (z_hi - z_lo) * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = phase + golden * i as f64;
            let (s, c) = phi.sin_cos();
            origin + Vec3::new(rho * c, rho * s, z) * radius
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    Euclidean,
    /// Angle subtended at the coordinate origin; cameras share one sphere.
    #[default]
    GreatCircle,
}

impl DistanceMetric {
    pub fn distance(self, a: Vec3, b: Vec3) -> f64 {
        match self {
            DistanceMetric::Euclidean => a.distance(b),
            DistanceMetric::GreatCircle => a.angle_to(b),
        }
    }
}

/// Farthest point sampling with the first index drawn from `seed`.
pub fn fps_select(candidates: &[Vec3], k: usize, seed: u64, metric: DistanceMetric) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Err(Error::NotEnoughCandidates {
            requested: k,
            available: 0,
        });
    }
    let start = seeded(seed, crate::rng::streams::FPS_TRAIN).gen_range(0..candidates.len());
    fps_select_from(candidates, k, start, metric)
}

/// Farthest point sampling from a fixed starting index. Each subsequent pick
/// maximizes the minimum distance to everything already selected; ties go
/// to the lowest index.
pub fn fps_select_from(candidates: &[Vec3], k: usize, start: usize, metric: DistanceMetric) -> Result<Vec<usize>> {
    if k > candidates.len() || candidates.is_empty() {
        return Err(Error::NotEnoughCandidates {
            requested: k,
            available: candidates.len(),
        });
    }
    if start >= candidates.len() {
        return Err(Error::Invalid("fps start index out of range".into()));
    }
    let mut selected = Vec::with_capacity(k);
    if k == 0 {
        return Ok(selected);
    }
    let mut min_dist = vec![f64::INFINITY; candidates.len()];
    let mut taken = vec![false; candidates.len()];
    let mut current = start;
    loop {
        selected.push(current);
        taken[current] = true;
        if selected.len() == k {
            return Ok(selected);
        }
        let anchor = candidates[current];
        let mut best = None;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &c) in candidates.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let d = metric.distance(anchor, c);
            if d < min_dist[i] {
                min_dist[i] = d;
            }
            if min_dist[i] > best_d {
                best_d = min_dist[i];
                best = Some(i);
            }
        }
        current = best.expect("k <= candidates guarantees a remaining point");
    }
}

/// Camera-to-world rotation whose −z axis points from `center` to `target`.
pub fn look_at_pose(center: Vec3, target: Vec3, up: Vec3) -> Result<Mat3> {
    let forward = target - center;
    if forward.norm() == 0.0 {
        return Err(Error::CoincidentTarget);
    }
    let forward = forward.normalized();
    let right = forward.cross(up);
    if right.norm() < 1e-12 * up.norm().max(1.0) {
        return Err(Error::ParallelUp);
    }
    let right = right.normalized();
    let cam_up = right.cross(forward);
    Ok(Mat3::from_columns(right, cam_up, -forward))
}

/// Ray through the center of integer pixel `(px, py)`.
pub fn pixel_ray(pose: &CameraPose, px: u32, py: u32) -> Result<Ray> {
    if px >= pose.width || py >= pose.height {
        return Err(Error::PixelOutOfBounds {
            px,
            py,
            width: pose.width,
            height: pose.height,
        });
    }
    Ok(pixel_ray_at(pose, px as f64 + 0.5, py as f64 + 0.5))
}

/// Ray through continuous image coordinates `(u, v)`; `(0, 0)` is the
/// top-left corner of the image.
pub fn pixel_ray_at(pose: &CameraPose, u: f64, v: f64) -> Ray {
    let x = (u - 0.5 * pose.width as f64) / pose.focal;
    let y = -(v - 0.5 * pose.height as f64) / pose.focal;
    let dir = pose.rotation.mul_vec(Vec3::new(x, y, -1.0));
    Ray::new(pose.center, dir)
}

/// Ray–sphere entry/exit distances, if the ray hits.
pub fn ray_sphere(ray: &Ray, center: Vec3, radius: f64) -> Option<(f64, f64)> {
    let oc = ray.origin - center;
    let b = oc.dot(ray.direction);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

/// Spherical linear interpolation between two vectors, also interpolating
/// their lengths.
pub fn slerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    let (na, nb) = (a.norm(), b.norm());
    let (ua, ub) = (a / na, b / nb);
    let omega = ua.angle_to(ub);
    let len = na + (nb - na) * t;
    if omega < 1e-9 {
        return (ua + (ub - ua) * t).normalized() * len;
    }
    let so = omega.sin();
    let dir = ua * (((1.0 - t) * omega).sin() / so) + ub * ((t * omega).sin() / so);
    dir.normalized() * len
}
