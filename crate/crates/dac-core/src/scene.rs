//! Analytic volumetric scenes with a ground-truth quadrature renderer.
//!
//! These stand in for captured datasets: every image, surface sample and
//! co-visibility count downstream is derived from a [`Scene`].

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)] // inherent f64 methods take over when std is linked
use num_traits::Float;
use rand::Rng;

use crate::geometry::{pixel_ray, CameraPose, Ray};
use crate::image::Image;
use crate::rng::{seeded, streams};
use crate::vec3::{Aabb, Vec3};
use crate::{Error, Result};

/// Samples per ray used for ground-truth images.
pub const GROUND_TRUTH_SAMPLES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Box { min: Vec3, max: Vec3 },
}

impl Shape {
    pub fn contains(&self, p: Vec3) -> bool {
        match *self {
            Shape::Sphere { center, radius } => (p - center).norm_squared() <= radius * radius,
            Shape::Box { min, max } => Aabb::new(min, max).contains(p),
        }
    }

    pub fn center(&self) -> Vec3 {
        match *self {
            Shape::Sphere { center, .. } => center,
            Shape::Box { min, max } => (min + max) * 0.5,
        }
    }

    pub fn bounds(&self) -> Aabb {
        match *self {
            Shape::Sphere { center, radius } => {
                let r = Vec3::new(radius, radius, radius);
                Aabb::new(center - r, center + r)
            }
            Shape::Box { min, max } => Aabb::new(min, max),
        }
    }

    pub fn surface_area(&self) -> f64 {
        match *self {
            Shape::Sphere { radius, .. } => 4.0 * PI * radius * radius,
            Shape::Box { min, max } => {
                let e = max - min;
                2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
            }
        }
    }

    /// Area-uniform point on the surface.
    pub fn sample_surface(&self, rng: &mut impl Rng) -> Vec3 {
        match *self {
            Shape::Sphere { center, radius } => {
                let z: f64 = rng.gen_range(-1.0..=1.0);
                let phi: f64 = rng.gen_range(0.0..TAU);
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let (s, c) = phi.sin_cos();
                center + Vec3::new(rho * c, rho * s, z) * radius
            }
            Shape::Box { min, max } => {
                let e = max - min;
                // faces normal to x, y, z (each appearing twice)
                let areas = [e.y * e.z, e.z * e.x, e.x * e.y];
                let total: f64 = areas.iter().sum();
                let mut pick = rng.gen_range(0.0..total);
                let mut axis = 2;
                for (a, &area) in areas.iter().enumerate() {
                    if pick < area {
                        axis = a;
                        break;
                    }
                    pick -= area;
                }
                let far_side = rng.gen_bool(0.5);
                let mut p = [0.0; 3];
                for (a, slot) in p.iter_mut().enumerate() {
                    *slot = if a == axis {
                        if far_side {
                            max[a]
                        } else {
                            min[a]
                        }
                    } else {
                        min[a] + rng.gen_range(0.0..1.0) * e[a]
                    };
                }
                Vec3::from_array(p)
            }
        }
    }
}

/// Color split across a plane through the primitive's center: points with
/// `normal · (p − center) ≥ 0` take `front`, the rest take `back`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTone {
    pub normal: Vec3,
    pub front: [f64; 3],
    pub back: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub density: f64,
    pub color: [f64; 3],
    pub two_tone: Option<TwoTone>,
}

impl Primitive {
    pub fn new(shape: Shape, density: f64, color: [f64; 3]) -> Primitive {
        Primitive {
            shape,
            density,
            color,
            two_tone: None,
        }
    }

    pub fn color_at(&self, p: Vec3) -> [f64; 3] {
        match self.two_tone {
            Some(tt) if tt.normal.dot(p - self.shape.center()) >= 0.0 => tt.front,
            Some(tt) => tt.back,
            None => self.color,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub name: String,
    pub primitives: Vec<Primitive>,
    pub background: [f64; 3],
    pub bounds: Aabb,
}

/// Density and color of the oracle at a point. Outside every primitive the
/// color is black and carries no meaning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radiance {
    pub sigma: f64,
    pub color: [f64; 3],
}

impl Scene {
    pub fn new(name: &str, primitives: Vec<Primitive>, background: [f64; 3], bounds: Aabb) -> Result<Scene> {
        let valid_color = |c: &[f64; 3]| c.iter().all(|v| (0.0..=1.0).contains(v));
        for p in &primitives {
            if !(p.density >= 0.0) {
                return Err(Error::Invalid("primitive density must be non-negative".into()));
            }
            let tones_ok = p
                .two_tone
                .map_or(true, |t| valid_color(&t.front) && valid_color(&t.back));
            if !valid_color(&p.color) || !tones_ok {
                return Err(Error::Invalid("primitive colors must lie in [0, 1]".into()));
            }
            if !bounds.contains_box(&p.shape.bounds()) {
                return Err(Error::Invalid("scene bounds must contain every primitive".into()));
            }
        }
        if !valid_color(&background) {
            return Err(Error::Invalid("background color must lie in [0, 1]".into()));
        }
        Ok(Scene {
            name: name.into(),
            primitives,
            background,
            bounds,
        })
    }

    /// Reference scene: a sphere whose color flips across the x = 0 plane
    /// plus two off-center boxes, so opposite azimuth ranges see different
    /// content.
    pub fn twotone() -> Scene {
        let sphere = Primitive {
            shape: Shape::Sphere {
                center: Vec3::new(0.0, 0.0, 0.0),
                radius: 0.55,
            },
            density: 8.0,
            color: [0.85, 0.2, 0.15],
            two_tone: Some(TwoTone {
                normal: Vec3::X,
                front: [0.85, 0.2, 0.15],
                back: [0.15, 0.3, 0.85],
            }),
        };
        let green = Primitive::new(
            Shape::Box {
                min: Vec3::new(0.4, 0.35, -0.6),
                max: Vec3::new(0.85, 0.8, 0.15),
            },
            6.0,
            [0.2, 0.75, 0.25],
        );
        let yellow = Primitive::new(
            Shape::Box {
                min: Vec3::new(-0.85, -0.8, -0.6),
                max: Vec3::new(-0.45, -0.35, 0.4),
            },
            6.0,
            [0.95, 0.8, 0.2],
        );
        Scene::new(
            "twotone",
            alloc::vec![sphere, green, yellow],
            [1.0, 1.0, 1.0],
            Aabb::cube(1.0),
        )
        .expect("reference scene is valid")
    }

    /// A single opaque sphere, handy for occlusion checks.
    pub fn sphere(radius: f64, density: f64, color: [f64; 3]) -> Scene {
        Scene::new(
            "sphere",
            alloc::vec![Primitive::new(
                Shape::Sphere {
                    center: Vec3::ZERO,
                    radius
                },
                density,
                color
            )],
            [1.0, 1.0, 1.0],
            Aabb::cube(radius.max(1.0)),
        )
        .expect("sphere scene is valid")
    }

    pub fn by_name(name: &str) -> Option<Scene> {
        match name {
            "twotone" => Some(Scene::twotone()),
            "sphere" => Some(Scene::sphere(0.6, 40.0, [0.9, 0.1, 0.1])),
            _ => None,
        }
    }
}

/// Max-density rule: the densest containing primitive wins and supplies the
/// color.
pub fn oracle_radiance(scene: &Scene, point: Vec3) -> Radiance {
    let mut best = Radiance {
        sigma: 0.0,
        color: [0.0; 3],
    };
    let mut found = false;
    for prim in &scene.primitives {
        if prim.shape.contains(point) && (!found || prim.density > best.sigma) {
            found = true;
            best = Radiance {
                sigma: prim.density,
                color: prim.color_at(point),
            };
        }
    }
    best
}

/// Result of integrating the oracle along one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSample {
    pub color: [f64; 3],
    /// Transmittance left after the last sample.
    pub transmittance: f64,
    /// `Σ wᵢ` over all quadrature samples.
    pub weight_sum: f64,
}

/// Emission–absorption quadrature with `samples` uniform midpoint samples
/// over `[t0, t1]`.
pub fn oracle_integrate(scene: &Scene, ray: &Ray, t0: f64, t1: f64, samples: usize) -> OracleSample {
    let mut color = [0.0; 3];
    let mut trans = 1.0;
    let mut weight_sum = 0.0;
    if t1 > t0 && samples > 0 {
        let delta = (t1 - t0) / samples as f64;
        for i in 0..samples {
            let t = t0 + (i as f64 + 0.5) * delta;
            let rad = oracle_radiance(scene, ray.at(t));
            if rad.sigma == 0.0 {
                continue;
            }
            let alpha = 1.0 - (-rad.sigma * delta).exp();
            let w = trans * alpha;
            for c in 0..3 {
                color[c] += w * rad.color[c];
            }
            weight_sum += w;
            trans *= 1.0 - alpha;
        }
    }
    OracleSample {
        color,
        transmittance: trans,
        weight_sum,
    }
}

/// Ground-truth color along a ray, composited over the scene background.
pub fn oracle_ray_color(scene: &Scene, ray: &Ray, samples: usize) -> OracleSample {
    let mut s = match scene.bounds.intersect(ray.origin, ray.direction) {
        Some((t0, t1)) => oracle_integrate(scene, ray, t0.max(ray.near).max(0.0), t1.min(ray.far), samples),
        None => OracleSample {
            color: [0.0; 3],
            transmittance: 1.0,
            weight_sum: 0.0,
        },
    };
    for c in 0..3 {
        s.color[c] = (s.color[c] + (1.0 - s.weight_sum) * scene.background[c]).clamp(0.0, 1.0);
    }
    s
}

/// Transmittance of the straight segment from `from` to `to`.
pub fn oracle_transmittance(scene: &Scene, from: Vec3, to: Vec3, samples: usize) -> f64 {
    let len = from.distance(to);
    if len == 0.0 {
        return 1.0;
    }
    let ray = Ray::new(from, to - from);
    match scene.bounds.intersect(ray.origin, ray.direction) {
        Some((t0, t1)) => oracle_integrate(scene, &ray, t0.max(0.0), t1.min(len), samples).transmittance,
        None => 1.0,
    }
}

/// Renders one pixel row; images are assembled row by row so callers can
/// parallelize over rows.
pub fn oracle_render_row(scene: &Scene, pose: &CameraPose, y: u32, samples: usize) -> Vec<[f64; 3]> {
    (0..pose.width)
        .map(|x| {
            let ray = pixel_ray(pose, x, y).expect("pixel inside image");
            oracle_ray_color(scene, &ray, samples).color
        })
        .collect()
}

pub fn oracle_render(scene: &Scene, pose: &CameraPose, samples_per_ray: usize) -> Result<Image> {
    if samples_per_ray < 64 {
        return Err(Error::Invalid(
            "oracle rendering needs at least 64 samples per ray".into(),
        ));
    }
    let mut img = Image::new(pose.width as usize, pose.height as usize);
    for y in 0..pose.height {
        for (x, rgb) in oracle_render_row(scene, pose, y, samples_per_ray)
            .into_iter()
            .enumerate()
        {
            img.set_pixel(x, y as usize, rgb);
        }
    }
    Ok(img)
}

/// Area-weighted points on primitive surfaces.
pub fn covis_surface_samples(scene: &Scene, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    if scene.primitives.is_empty() {
        return Err(Error::EmptyScene);
    }
    let areas: Vec<f64> = scene.primitives.iter().map(|p| p.shape.surface_area()).collect();
    let total: f64 = areas.iter().sum();
    let mut rng = seeded(seed, streams::SURFACE);
    Ok((0..n)
        .map(|_| {
            let mut pick = rng.gen_range(0.0..total);
            let mut which = areas.len() - 1;
            for (i, &a) in areas.iter().enumerate() {
                if pick < a {
                    which = i;
                    break;
                }
                pick -= a;
            }
            scene.primitives[which].shape.sample_surface(&mut rng)
        })
        .collect())
}
