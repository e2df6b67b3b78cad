//! Conquer: distill frozen expert fields into one student field, then
//! fine-tune the student on the ground-truth images.
//!
//! Every distillation ray is owned by exactly one expert, inherited from the
//! camera that produced it. The teacher renders the ray without a tape; the
//! student is queried at the teacher's fine points (opacity and color terms),
//! its proposal histogram is aligned with the teacher's fine histogram, and
//! its own regularizers are added.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::divide::PartitionSet;
use crate::field::{
    alpha_from_sigma, backprop_proposal_alpha, render_ray, FieldModel, Gradients, GridKind, ProposalPass, RenderOutput,
    Tape,
};
use crate::geometry::{azimuth, azimuth_distance, pixel_ray, slerp, CameraPose, Ray};
use crate::histogram::hist_loss_with_grad;
use crate::rng::{seeded, streams, DetRng};
use crate::train::{
    lr_at, own_histogram_ray, train_baseline, tv_touched, AdamConfig, LossWeights, OptimizerState, TrainConfig,
    TrainLog, TrainView,
};
use crate::vec3::Vec3;
use crate::{Error, Result};

/// Weights of the distillation terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistillWeights {
    pub color: f64,
    pub alpha: f64,
    pub hist: f64,
}

impl Default for DistillWeights {
    fn default() -> Self {
        DistillWeights {
            color: 0.4,
            alpha: 0.3,
            hist: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistillConfig {
    pub distill_iterations: usize,
    pub finetune_iterations: usize,
    pub weights: DistillWeights,
    /// Weights of the student's native regularizers.
    pub orig: LossWeights,
    /// Probability that a ray comes from an interpolated virtual camera.
    pub fraction: f64,
    pub seed: u64,
    pub rays_per_batch: usize,
    pub lr0: f64,
    pub warmup: usize,
    pub adam: AdamConfig,
    pub log_every: usize,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            distill_iterations: 30_000,
            finetune_iterations: 30_000,
            weights: DistillWeights::default(),
            orig: LossWeights::default(),
            fraction: 0.5,
            seed: 0,
            rays_per_batch: 1024,
            lr0: 0.01,
            warmup: 512,
            adam: AdamConfig::default(),
            log_every: 500,
        }
    }
}

impl DistillConfig {
    /// Desk-scale budgets: 5000 distillation and 5000 fine-tuning steps.
    pub fn desk() -> DistillConfig {
        DistillConfig {
            distill_iterations: 5000,
            finetune_iterations: 5000,
            ..DistillConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weights;
        for (name, v) in [("color", w.color), ("alpha", w.alpha), ("hist", w.hist)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "distill weight `{name}` must be finite and non-negative"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::InvalidConfig("interpolation fraction must lie in [0, 1]".into()));
        }
        self.schedule().validate()?;
        if self.finetune_iterations > 0 {
            self.finetune_config().validate()?;
        }
        Ok(())
    }

    /// Schedule and optimizer settings of the distillation phase.
    pub fn schedule(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.distill_iterations,
            lr0: self.lr0,
            warmup: self.warmup,
            rays_per_batch: self.rays_per_batch,
            seed: self.seed,
            weights: self.orig,
            adam: self.adam,
            log_every: self.log_every,
        }
    }

    /// Photometric training settings of the fine-tuning phase.
    pub fn finetune_config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.finetune_iterations,
            ..self.schedule()
        }
    }
}

/// Where a ray came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RaySource {
    /// A training camera.
    View(usize),
    /// A virtual camera interpolated from training camera `from` towards
    /// `to` (same partition) at parameter `t`.
    Interpolated { from: usize, to: usize, t: f64 },
    /// Any other camera, by its center.
    Free(Vec3),
}

/// Trained experts with the partition that produced them.
#[derive(Debug, Clone)]
pub struct ExpertRegistry {
    experts: Vec<FieldModel>,
    partitions: PartitionSet,
    cameras: Vec<CameraPose>,
    target: Vec3,
}

impl ExpertRegistry {
    /// Expert `ℓ` must have been trained on `partitions.parts[ℓ]`. A single
    /// expert is accepted, which turns distillation into self-distillation.
    pub fn new(experts: Vec<FieldModel>, partitions: PartitionSet, cameras: Vec<CameraPose>) -> Result<ExpertRegistry> {
        if experts.is_empty() {
            return Err(Error::Invalid("registry needs at least one expert".into()));
        }
        if experts.len() != partitions.k() {
            return Err(Error::Invalid(format!(
                "{} experts for {} partitions",
                experts.len(),
                partitions.k()
            )));
        }
        partitions.validate(cameras.len())?;
        Ok(ExpertRegistry {
            experts,
            partitions,
            cameras,
            target: Vec3::ZERO,
        })
    }

    pub fn k(&self) -> usize {
        self.experts.len()
    }

    pub fn expert(&self, l: usize) -> &FieldModel {
        &self.experts[l]
    }

    pub fn experts(&self) -> &[FieldModel] {
        &self.experts
    }

    pub fn partitions(&self) -> &PartitionSet {
        &self.partitions
    }

    pub fn cameras(&self) -> &[CameraPose] {
        &self.cameras
    }

    /// Expert owning rays from `source`. Views go to their lowest-index
    /// partition, interpolated cameras to the partition of their start view,
    /// and free cameras to the partition of the nearest training camera
    /// (azimuth distance for angular partitions, euclidean otherwise; ties
    /// to the lowest view index).
    pub fn indicator(&self, source: RaySource) -> Result<usize> {
        match source {
            RaySource::View(v) | RaySource::Interpolated { from: v, .. } => {
                if v >= self.cameras.len() {
                    return Err(Error::ViewOutOfRange {
                        record: 0,
                        view: v,
                        count: self.cameras.len(),
                    });
                }
                self.partitions.owner(v).ok_or(Error::Unassigned(v))
            }
            RaySource::Free(center) => {
                let nearest = self.nearest_camera(center);
                self.partitions.owner(nearest).ok_or(Error::Unassigned(nearest))
            }
        }
    }

    fn nearest_camera(&self, center: Vec3) -> usize {
        let angular = match azimuth(center - self.target) {
            Ok(a) if self.partitions.method.is_angular() => Some(a),
            _ => None,
        };
        let dist = |pose: &CameraPose| match angular {
            Some(a) => azimuth(pose.center - self.target).map_or(f64::INFINITY, |b| azimuth_distance(a, b)),
            None => pose.center.distance(center),
        };
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, pose) in self.cameras.iter().enumerate() {
            let d = dist(pose);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Camera between training views `from` and `to`: the center follows
    /// the spherical interpolation about the scene center and the camera is
    /// re-aimed at it. Intrinsics come from `from`.
    pub fn virtual_camera(&self, from: usize, to: usize, t: f64) -> Result<CameraPose> {
        let (a, b) = (&self.cameras[from], &self.cameras[to]);
        let center = self.target + slerp(a.center - self.target, b.center - self.target, t);
        CameraPose::looking_at(center, self.target, Vec3::Z, a.focal, a.width, a.height)
    }
}

/// One distillation ray and the expert it is routed to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistillRay {
    pub ray: Ray,
    pub source: RaySource,
    pub expert: usize,
}

fn sample_ray(registry: &ExpertRegistry, fraction: f64, rng: &mut DetRng) -> Result<DistillRay> {
    let n = registry.cameras.len();
    let v = rng.gen_range(0..n);
    let (pose, source) = if rng.gen::<f64>() < fraction {
        let part = &registry.partitions.parts[registry.indicator(RaySource::View(v))?];
        let to = part[rng.gen_range(0..part.len())];
        let t = rng.gen::<f64>();
        (
            registry.virtual_camera(v, to, t)?,
            RaySource::Interpolated { from: v, to, t },
        )
    } else {
        (registry.cameras[v], RaySource::View(v))
    };
    let px = rng.gen_range(0..pose.width);
    let py = rng.gen_range(0..pose.height);
    Ok(DistillRay {
        ray: pixel_ray(&pose, px, py)?,
        source,
        expert: registry.indicator(source)?,
    })
}

/// A batch of `count` routed rays. With probability `fraction` a ray comes
/// from a virtual camera between two training cameras of one partition,
/// otherwise from a training camera; pixels are uniform.
pub fn sample_distill_rays(
    registry: &ExpertRegistry,
    count: usize,
    fraction: f64,
    seed: u64,
) -> Result<Vec<DistillRay>> {
    if count < 1 {
        return Err(Error::Invalid("batch size must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Invalid("interpolation fraction must lie in [0, 1]".into()));
    }
    let mut rng = seeded(seed, streams::DISTILL);
    (0..count).map(|_| sample_ray(registry, fraction, &mut rng)).collect()
}

/// Point-wise opacity and color distillation for one ray. The student is
/// evaluated at the teacher's fine points with the teacher's segment
/// lengths. Returns `(L_α, L_c)`: squared opacity error averaged over the
/// points, and squared color error averaged over points and channels.
/// Deposits `alpha_scale · ∂L_α + color_scale · ∂L_c` on the tape.
pub fn distill_points(
    student: &FieldModel,
    teacher: &RenderOutput,
    alpha_scale: f64,
    color_scale: f64,
    tape: &mut Tape,
) -> (f64, f64) {
    let n = teacher.points.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let inv = 1.0 / n as f64;
    let (mut la, mut lc) = (0.0, 0.0);
    for p in &teacher.points {
        let (sigma, sh) = tape.sigma(&student.density, GridKind::Density, p.position);
        let alpha = alpha_from_sigma(sigma, p.delta);
        let d = alpha - p.alpha;
        la += d * d * inv;
        if alpha_scale != 0.0 {
            tape.add_sigma_adjoint(sh, alpha_scale * 2.0 * d * inv * p.delta * (1.0 - alpha));
        }
        let (rgb, ch) = tape.rgb(&student.color, p.position);
        let mut g = [0.0; 3];
        for k in 0..3 {
            let d = rgb[k] - p.color[k];
            lc += d * d * inv / 3.0;
            g[k] = color_scale * 2.0 * d * inv / 3.0;
        }
        if color_scale != 0.0 {
            tape.add_color_adjoint(ch, g);
        }
    }
    (la, lc)
}

/// Histogram loss of the student's proposal bins against the teacher's fine
/// histogram; the teacher side is constant. Deposits `scale · ∂/∂params`.
pub fn distill_hist(student: &ProposalPass, teacher: &RenderOutput, scale: f64, tape: &mut Tape) -> f64 {
    let (loss, grad) = hist_loss_with_grad(&student.histogram, &teacher.fine);
    if scale != 0.0 {
        backprop_proposal_alpha(student, &grad, scale, tape);
    }
    loss
}

/// Batch-mean loss terms of one distillation step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DistillLosses {
    pub color: f64,
    pub alpha: f64,
    pub hist: f64,
    /// Student regularizers, without any reconstruction term.
    pub orig: f64,
}

/// `w_c·L_c + w_α·L_α + w_hist·L_P + L_orig`, or the first non-finite term.
pub fn total_distill_loss(l: &DistillLosses, w: DistillWeights) -> Result<f64> {
    for (name, v) in [
        ("d-c", l.color),
        ("d-alpha", l.alpha),
        ("d-P", l.hist),
        ("orig", l.orig),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss(name));
        }
    }
    Ok(w.color * l.color + w.alpha * l.alpha + w.hist * l.hist + l.orig)
}

/// Per-ray distillation terms with gradients. Teacher and student sample
/// with the same jitter, so a student identical to its teacher reproduces
/// the teacher's samples exactly.
pub fn distill_ray(
    student: &FieldModel,
    teacher: &FieldModel,
    ray: &Ray,
    rng: &mut DetRng,
    config: &DistillConfig,
    grad_scale: f64,
    tape: &mut Tape,
) -> DistillLosses {
    let mut student_rng = rng.clone();
    let t_out = render_ray(teacher, ray, rng, true, &mut Tape::disabled());
    let s_out = render_ray(student, ray, &mut student_rng, true, tape);
    let w = config.weights;
    let (alpha, color) = distill_points(student, &t_out, w.alpha * grad_scale, w.color * grad_scale, tape);
    let hist = distill_hist(&s_out.proposal, &t_out, w.hist * grad_scale, tape);
    let own = own_histogram_ray(&s_out, config.orig.prop * grad_scale, tape);
    DistillLosses {
        color,
        alpha,
        hist,
        orig: config.orig.prop * own,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistillLogEntry {
    pub step: usize,
    pub loss: f64,
    pub terms: DistillLosses,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistillLog {
    pub entries: Vec<DistillLogEntry>,
}

/// Step-at-a-time distillation of a registry into one student.
pub struct Distiller<'a> {
    registry: &'a ExpertRegistry,
    student: FieldModel,
    config: DistillConfig,
    schedule: TrainConfig,
    opt: OptimizerState,
    grads: Gradients,
    tape: Tape,
    rng: DetRng,
    step: usize,
    log: DistillLog,
}

impl<'a> Distiller<'a> {
    pub fn new(registry: &'a ExpertRegistry, student: FieldModel, config: DistillConfig) -> Result<Self> {
        config.validate()?;
        Ok(Distiller {
            registry,
            opt: OptimizerState::new(&student, config.adam),
            grads: Gradients::for_field(&student),
            student,
            schedule: config.schedule(),
            config,
            tape: Tape::new(),
            rng: seeded(config.seed, streams::DISTILL),
            step: 0,
            log: DistillLog::default(),
        })
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn student(&self) -> &FieldModel {
        &self.student
    }

    pub fn log(&self) -> &DistillLog {
        &self.log
    }

    /// One optimizer step; returns the batch-mean loss terms.
    pub fn step(&mut self) -> Result<DistillLosses> {
        let lr = lr_at(self.step, &self.schedule)?;
        let batch = self.config.rays_per_batch;
        let scale = 1.0 / batch as f64;
        // gradients of the per-ray sum, as in photometric training
        let grad_scale = 1.0;
        self.tape.clear();
        self.grads.clear();
        let mut sum = DistillLosses::default();
        for _ in 0..batch {
            let r = sample_ray(self.registry, self.config.fraction, &mut self.rng)?;
            let teacher = self.registry.expert(r.expert);
            let l = distill_ray(
                &self.student,
                teacher,
                &r.ray,
                &mut self.rng,
                &self.config,
                grad_scale,
                &mut self.tape,
            );
            sum.color += l.color;
            sum.alpha += l.alpha;
            sum.hist += l.hist;
            sum.orig += l.orig;
        }
        self.tape.backward(&mut self.grads)?;
        let tv = tv_touched(&self.student, &mut self.grads, self.config.orig.tv * batch as f64) * scale;
        let terms = DistillLosses {
            color: sum.color * scale,
            alpha: sum.alpha * scale,
            hist: sum.hist * scale,
            orig: sum.orig * scale + tv,
        };
        let loss = total_distill_loss(&terms, self.config.weights)?;
        self.opt.apply(&mut self.student, &self.grads, lr);
        self.step += 1;
        if self.step % self.config.log_every.max(1) == 0 || self.step == self.config.distill_iterations {
            self.log.entries.push(DistillLogEntry {
                step: self.step,
                loss,
                terms,
            });
        }
        Ok(terms)
    }

    pub fn run_until(&mut self, target: usize) -> Result<()> {
        while self.step < target.min(self.config.distill_iterations) {
            self.step()?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(FieldModel, DistillLog)> {
        self.run_until(self.config.distill_iterations)?;
        Ok((self.student, self.log))
    }
}

/// Distills every expert of `registry` into `student`.
pub fn distill(
    registry: &ExpertRegistry,
    student: FieldModel,
    config: DistillConfig,
) -> Result<(FieldModel, DistillLog)> {
    Distiller::new(registry, student, config)?.finish()
}

/// Photometric fine-tuning of a distilled student on all training views.
/// Zero fine-tuning iterations return the student unchanged.
pub fn finetune(student: FieldModel, views: &[TrainView], config: &DistillConfig) -> Result<(FieldModel, TrainLog)> {
    if config.finetune_iterations == 0 {
        return Ok((student, TrainLog::default()));
    }
    train_baseline(student, views, config.finetune_config())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divide::{azimuth_partition, PartitionMethod};
    use crate::field::{Resolutions, SamplingConfig};
    use crate::vec3::Aabb;
    use core::f64::consts::TAU;

    fn ring(n: usize) -> Vec<CameraPose> {
        (0..n)
            .map(|i| {
                let a = TAU * (i as f64 + 0.5) / n as f64;
                let c = Vec3::new(3.0 * a.cos(), 3.0 * a.sin(), 1.0);
                CameraPose::looking_at(c, Vec3::ZERO, Vec3::Z, 10.0, 8, 8).unwrap()
            })
            .collect()
    }

    fn field(seed: u64) -> FieldModel {
        let mut f = FieldModel::new(
            Resolutions {
                proposal: 6,
                density: 8,
                color: 8,
            },
            Aabb::cube(1.0),
            SamplingConfig::for_rig(3.2, 1.8, [1.0; 3]),
        )
        .unwrap();
        let mut rng = seeded(seed, 0);
        for p in f.proposal.params_mut().iter_mut().chain(f.density.params_mut()) {
            *p = rng.gen_range(-2.0..2.0);
        }
        for p in f.color.params_mut() {
            *p = rng.gen_range(-2.0..2.0);
        }
        f
    }

    fn registry(k: usize) -> ExpertRegistry {
        let cams = ring(16);
        let parts = azimuth_partition(&cams, k, 0.0).unwrap();
        ExpertRegistry::new((0..k).map(|i| field(i as u64)).collect(), parts, cams).unwrap()
    }

    #[test]
    fn indicator_follows_partitions() {
        let reg = registry(4);
        for v in 0..16 {
            assert_eq!(reg.indicator(RaySource::View(v)).unwrap(), v / 4);
        }
        // sector 2 spans [180°, 270°)
        let a = 225f64.to_radians();
        let c = Vec3::new(2.0 * a.cos(), 2.0 * a.sin(), 0.3);
        assert_eq!(reg.indicator(RaySource::Free(c)).unwrap(), 2);
        assert!(reg.indicator(RaySource::View(16)).is_err());
    }

    #[test]
    fn overlap_views_go_to_the_lowest_partition() {
        let cams = ring(8);
        let parts = azimuth_partition(&cams, 4, 60.0).unwrap();
        let shared = (0..8)
            .find(|&v| parts.parts.iter().filter(|p| p.contains(&v)).count() > 1)
            .unwrap();
        let lowest = parts.parts.iter().position(|p| p.contains(&shared)).unwrap();
        let reg = ExpertRegistry::new((0..4).map(field).collect(), parts, cams).unwrap();
        assert_eq!(reg.indicator(RaySource::View(shared)).unwrap(), lowest);
    }

    #[test]
    fn ray_sampling_respects_the_fraction() {
        let reg = registry(4);
        let real = sample_distill_rays(&reg, 200, 0.0, 3).unwrap();
        assert!(real.iter().all(|r| matches!(r.source, RaySource::View(_))));
        let virt = sample_distill_rays(&reg, 200, 1.0, 3).unwrap();
        for r in &virt {
            let RaySource::Interpolated { from, to, .. } = r.source else {
                panic!("expected a virtual ray");
            };
            assert_eq!(reg.partitions().owner(from), reg.partitions().owner(to));
            assert_eq!(r.expert, reg.partitions().owner(from).unwrap());
        }
        assert_eq!(
            sample_distill_rays(&reg, 50, 0.5, 9).unwrap(),
            sample_distill_rays(&reg, 50, 0.5, 9).unwrap()
        );
        assert!(sample_distill_rays(&reg, 0, 0.5, 9).is_err());
    }

    #[test]
    fn virtual_camera_endpoint() {
        let reg = registry(4);
        let cam = reg.virtual_camera(1, 2, 0.0).unwrap();
        assert!((cam.center - reg.cameras()[1].center).norm() < 1e-9);
        let end = reg.virtual_camera(1, 2, 1.0).unwrap();
        assert!((end.center - reg.cameras()[2].center).norm() < 1e-9);
    }

    #[test]
    fn distill_point_closed_forms() {
        let ray = Ray::new(Vec3::new(3.0, 0.1, 0.0), -Vec3::X);
        let mut teacher = FieldModel::new(
            Resolutions {
                proposal: 4,
                density: 4,
                color: 4,
            },
            Aabb::cube(6.0),
            SamplingConfig::for_rig(3.2, 1.8, [1.0; 3]),
        )
        .unwrap();
        teacher.density.params_mut().fill(crate::field::softplus_inverse(2.0));
        teacher.color.params_mut().fill(0.0);
        let mut t_out = render_ray(&teacher, &ray, &mut seeded(0, 0), false, &mut Tape::disabled());
        let n = t_out.points.len();
        for p in &mut t_out.points {
            p.alpha = 0.5;
            p.color = [1.0, 0.0, 0.0];
        }
        let mut student = teacher.clone();
        student.density.params_mut().fill(-800.0);
        let (la, lc) = distill_points(&student, &t_out, 0.0, 0.0, &mut Tape::disabled());
        assert!(n > 0);
        assert!((la - 0.25).abs() < 1e-12, "{la}");
        assert!((lc - 0.25).abs() < 1e-12, "{lc}");
    }

    #[test]
    fn total_loss_weights_and_errors() {
        let w = DistillWeights::default();
        assert_eq!(total_distill_loss(&DistillLosses::default(), w).unwrap(), 0.0);
        let ones = DistillLosses {
            color: 1.0,
            alpha: 1.0,
            hist: 1.0,
            orig: 0.0,
        };
        assert!((total_distill_loss(&ones, w).unwrap() - 1.0).abs() < 1e-15);
        let bad = DistillLosses { hist: f64::NAN, ..ones };
        assert_eq!(total_distill_loss(&bad, w), Err(Error::NonFiniteLoss("d-P")));
        let cfg = DistillConfig {
            weights: DistillWeights { color: -0.1, ..w },
            ..DistillConfig::desk()
        };
        assert!(cfg.validate().is_err());
        assert!(DistillConfig {
            fraction: 1.5,
            ..DistillConfig::desk()
        }
        .validate()
        .is_err());
        assert!(DistillConfig::desk().validate().is_ok());
    }

    #[test]
    fn copied_student_has_zero_point_terms() {
        let reg = registry(2);
        let teacher = reg.expert(1);
        let student = teacher.clone();
        let cfg = DistillConfig::desk();
        let mut rng = seeded(5, 1);
        for r in sample_distill_rays(&reg, 20, 0.5, 1).unwrap() {
            let l = distill_ray(&student, teacher, &r.ray, &mut rng, &cfg, 1.0, &mut Tape::disabled());
            assert_eq!((l.alpha, l.color), (0.0, 0.0));
            // identical samples: the cross histogram term equals the own one
            assert_eq!(l.hist * cfg.orig.prop, l.orig);
        }
    }

    #[test]
    fn distillation_keeps_teachers_frozen_and_is_deterministic() {
        let reg = registry(2);
        let before: Vec<FieldModel> = reg.experts().to_vec();
        let cfg = DistillConfig {
            distill_iterations: 6,
            finetune_iterations: 0,
            rays_per_batch: 16,
            warmup: 2,
            ..DistillConfig::default()
        };
        let init = FieldModel::new(
            Resolutions {
                proposal: 6,
                density: 8,
                color: 8,
            },
            Aabb::cube(1.0),
            SamplingConfig::for_rig(3.2, 1.8, [1.0; 3]),
        )
        .unwrap();
        let (a, log) = distill(&reg, init.clone(), cfg).unwrap();
        let (b, _) = distill(&reg, init.clone(), cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init);
        assert_eq!(log.entries.last().unwrap().step, 6);
        assert_eq!(reg.experts(), &before[..]);
        let (same, _) = finetune(a.clone(), &[], &cfg).unwrap();
        assert_eq!(same, a);
    }

    #[test]
    fn single_expert_registry() {
        let cams = ring(6);
        let parts = PartitionSet::new(PartitionMethod::Percentile, alloc::vec![(0..6).collect()]);
        let reg = ExpertRegistry::new(alloc::vec![field(0)], parts, cams).unwrap();
        assert_eq!(reg.indicator(RaySource::Free(Vec3::new(0.0, -2.0, 1.0))).unwrap(), 0);
        let parts = PartitionSet::new(PartitionMethod::Percentile, alloc::vec![(0..5).collect()]);
        assert!(ExpertRegistry::new(alloc::vec![field(0)], parts, ring(6)).is_err());
    }
}
