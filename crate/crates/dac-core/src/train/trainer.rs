use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::adam::{AdamConfig, OptimizerState};
use super::loss::{own_histogram_ray, photometric_ray, tv_touched, LossWeights};
use super::schedule::lr_at;
use crate::field::{render_ray, FieldModel, Gradients, Tape};
use crate::geometry::{pixel_ray, CameraPose};
use crate::image::Image;
use crate::metrics::psnr_from_mse;
use crate::rng::{seeded, streams, DetRng};
use crate::{Error, Result};

/// A posed ground-truth image.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainView {
    pub pose: CameraPose,
    pub image: Image,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub lr0: f64,
    pub warmup: usize,
    pub rays_per_batch: usize,
    pub seed: u64,
    pub weights: LossWeights,
    pub adam: AdamConfig,
    /// Record a log entry every this many steps (and at the last step).
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 30_000,
            lr0: 0.01,
            warmup: 512,
            rays_per_batch: 1024,
            seed: 0,
            weights: LossWeights::default(),
            adam: AdamConfig::default(),
            log_every: 500,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.warmup >= self.iterations {
            return Err(Error::InvalidConfig(format!(
                "warm-up ({}) must be shorter than the run ({})",
                self.warmup, self.iterations
            )));
        }
        if !(self.lr0 > 0.0) {
            return Err(Error::InvalidConfig("lr0 must be positive".into()));
        }
        if self.rays_per_batch < 1 {
            return Err(Error::InvalidConfig("rays per batch must be at least 1".into()));
        }
        if !(self.weights.tv >= 0.0 && self.weights.prop >= 0.0) {
            return Err(Error::InvalidConfig("regularizer weights must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub step: usize,
    pub lr: f64,
    /// Mean squared color error of the batch.
    pub mse: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub step: usize,
    pub loss: f64,
    /// PSNR of the training batch at this step.
    pub psnr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub entries: Vec<LogEntry>,
}

/// Step-at-a-time photometric optimizer for one field.
pub struct PhotometricTrainer<'a> {
    field: FieldModel,
    views: &'a [TrainView],
    config: TrainConfig,
    opt: OptimizerState,
    grads: Gradients,
    tape: Tape,
    rng: DetRng,
    step: usize,
    log: TrainLog,
}

impl<'a> PhotometricTrainer<'a> {
    pub fn new(field: FieldModel, views: &'a [TrainView], config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if views.is_empty() {
            return Err(Error::Invalid("cannot train on an empty view set".into()));
        }
        let opt = OptimizerState::new(&field, config.adam);
        let grads = Gradients::for_field(&field);
        Ok(PhotometricTrainer {
            field,
            views,
            config,
            opt,
            grads,
            tape: Tape::new(),
            rng: seeded(config.seed, streams::TRAIN),
            step: 0,
            log: TrainLog::default(),
        })
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.config.iterations
    }

    pub fn field(&self) -> &FieldModel {
        &self.field
    }

    pub fn log(&self) -> &TrainLog {
        &self.log
    }

    pub fn step(&mut self) -> Result<StepStats> {
        let lr = lr_at(self.step, &self.config)?;
        let batch = self.config.rays_per_batch;
        let scale = 1.0 / batch as f64;
        // gradients are taken of the per-ray sum so their size stays well
        // above Adam's epsilon on sparse grids
        let grad_scale = batch as f64 * scale;
        let weights = self.config.weights;
        let background = self.field.sampling.background;
        self.tape.clear();
        self.grads.clear();
        let (mut mse, mut hist) = (0.0, 0.0);
        for _ in 0..batch {
            let view = &self.views[self.rng.gen_range(0..self.views.len())];
            let px = self.rng.gen_range(0..view.pose.width);
            let py = self.rng.gen_range(0..view.pose.height);
            let ray = pixel_ray(&view.pose, px, py)?;
            let target = view.image.pixel(px as usize, py as usize);
            let out = render_ray(&self.field, &ray, &mut self.rng, true, &mut self.tape);
            mse += photometric_ray(&out, background, target, grad_scale, &mut self.tape);
            hist += own_histogram_ray(&out, weights.prop * grad_scale, &mut self.tape);
        }
        mse *= scale;
        hist *= scale;
        self.tape.backward(&mut self.grads)?;
        let tv = tv_touched(&self.field, &mut self.grads, weights.tv * batch as f64) * scale;
        let loss = mse + weights.prop * hist + tv;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss("photometric"));
        }
        self.opt.apply(&mut self.field, &self.grads, lr);
        self.step += 1;
        if self.step % self.config.log_every.max(1) == 0 || self.step == self.config.iterations {
            self.log.entries.push(LogEntry {
                step: self.step,
                loss,
                psnr: psnr_from_mse(mse),
            });
        }
        Ok(StepStats {
            step: self.step,
            lr,
            mse,
            loss,
        })
    }

    /// Runs until `target` steps are done (capped at the configured total).
    pub fn run_until(&mut self, target: usize) -> Result<()> {
        while self.step < target.min(self.config.iterations) {
            self.step()?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(FieldModel, TrainLog)> {
        self.run_until(self.config.iterations)?;
        Ok((self.field, self.log))
    }
}

/// Trains an expert on the views of one partition.
pub fn train_expert(
    init: FieldModel,
    partition_views: &[TrainView],
    config: TrainConfig,
) -> Result<(FieldModel, TrainLog)> {
    if partition_views.is_empty() {
        return Err(Error::Invalid("expert partition is empty".into()));
    }
    PhotometricTrainer::new(init, partition_views, config)?.finish()
}

/// Trains a single field on the full view set.
pub fn train_baseline(init: FieldModel, views: &[TrainView], config: TrainConfig) -> Result<(FieldModel, TrainLog)> {
    PhotometricTrainer::new(init, views, config)?.finish()
}
