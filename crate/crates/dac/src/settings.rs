//! JSON configuration files for training, distillation and full pipeline
//! runs. Every field has a default, so a config only lists what it changes.

use std::path::PathBuf;

use anyhow::{ensure, Result};
use dac_core::conquer::{DistillConfig, DistillWeights};
use dac_core::field::{FieldModel, Resolutions, SamplingConfig};
use dac_core::scene::Scene;
use dac_core::train::{AdamConfig, LossWeights, TrainConfig};
use serde::{Deserialize, Serialize};

/// Grid sizes and ray sampling of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSettings {
    pub proposal: usize,
    pub density: usize,
    pub color: usize,
    pub n_coarse: usize,
    pub n_fine: usize,
    pub uniform_mix: f64,
}

impl Default for FieldSettings {
    fn default() -> Self {
        let r = Resolutions::default();
        FieldSettings {
            proposal: r.proposal,
            density: r.density,
            color: r.color,
            n_coarse: 64,
            n_fine: 32,
            uniform_mix: 0.1,
        }
    }
}

impl FieldSettings {
    /// Fresh field covering `scene`, sampled over the bounding sphere as
    /// seen from cameras at `camera_radius`.
    pub fn init_field(&self, scene: &Scene, camera_radius: f64) -> Result<FieldModel> {
        let mut sampling = SamplingConfig::for_rig(camera_radius, scene.bounds.bounding_radius(), scene.background);
        sampling.n_coarse = self.n_coarse;
        sampling.n_fine = self.n_fine;
        sampling.uniform_mix = self.uniform_mix;
        let res = Resolutions {
            proposal: self.proposal,
            density: self.density,
            color: self.color,
        };
        Ok(FieldModel::new(res, scene.bounds, sampling)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub iterations: usize,
    pub lr0: f64,
    pub warmup: usize,
    pub rays_per_batch: usize,
    pub seed: u64,
    pub tv: f64,
    pub prop: f64,
    pub log_every: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings::from(TrainConfig::default())
    }
}

impl From<TrainConfig> for TrainSettings {
    fn from(c: TrainConfig) -> Self {
        TrainSettings {
            iterations: c.iterations,
            lr0: c.lr0,
            warmup: c.warmup,
            rays_per_batch: c.rays_per_batch,
            seed: c.seed,
            tv: c.weights.tv,
            prop: c.weights.prop,
            log_every: c.log_every,
        }
    }
}

impl TrainSettings {
    pub fn config(&self) -> Result<TrainConfig> {
        let c = TrainConfig {
            iterations: self.iterations,
            lr0: self.lr0,
            warmup: self.warmup,
            rays_per_batch: self.rays_per_batch,
            seed: self.seed,
            weights: LossWeights {
                tv: self.tv,
                prop: self.prop,
            },
            adam: AdamConfig::default(),
            log_every: self.log_every,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillSettings {
    pub distill_iterations: usize,
    pub finetune_iterations: usize,
    pub w_color: f64,
    pub w_alpha: f64,
    pub w_hist: f64,
    pub fraction: f64,
    pub seed: u64,
    pub rays_per_batch: usize,
    pub lr0: f64,
    pub warmup: usize,
    pub tv: f64,
    pub prop: f64,
    pub log_every: usize,
    /// Start the student from the expert of the largest partition instead
    /// of a fresh field.
    pub warm_start: bool,
}

impl Default for DistillSettings {
    fn default() -> Self {
        let c = DistillConfig::desk();
        DistillSettings {
            distill_iterations: c.distill_iterations,
            finetune_iterations: c.finetune_iterations,
            w_color: c.weights.color,
            w_alpha: c.weights.alpha,
            w_hist: c.weights.hist,
            fraction: c.fraction,
            seed: c.seed,
            rays_per_batch: c.rays_per_batch,
            lr0: c.lr0,
            warmup: c.warmup,
            tv: c.orig.tv,
            prop: c.orig.prop,
            log_every: c.log_every,
            warm_start: false,
        }
    }
}

impl DistillSettings {
    pub fn config(&self) -> Result<DistillConfig> {
        let c = DistillConfig {
            distill_iterations: self.distill_iterations,
            finetune_iterations: self.finetune_iterations,
            weights: DistillWeights {
                color: self.w_color,
                alpha: self.w_alpha,
                hist: self.w_hist,
            },
            orig: LossWeights {
                tv: self.tv,
                prop: self.prop,
            },
            fraction: self.fraction,
            seed: self.seed,
            rays_per_batch: self.rays_per_batch,
            lr0: self.lr0,
            warmup: self.warmup,
            adam: AdamConfig::default(),
            log_every: self.log_every,
        };
        c.validate()?;
        Ok(c)
    }
}

/// Full comparison run: divide, experts, distill, fine-tune and the two
/// baseline arms, all at a per-model budget `budget`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: PathBuf,
    pub out: PathBuf,
    pub k: usize,
    /// `azimuth`, `percentile`, `louvain`, `spectral` or `auto`.
    pub method: String,
    pub overlap_deg: f64,
    /// Co-visibility adjacency file for graph methods; without it the
    /// oracle surrogate is computed from the scene.
    pub adjacency: Option<PathBuf>,
    pub field: FieldSettings,
    /// Iterations per expert, for distillation, for fine-tuning and for the
    /// short baseline; the long baseline gets twice this.
    pub budget: usize,
    pub rays_per_batch: usize,
    pub lr0: f64,
    pub warmup: usize,
    pub seed: u64,
    pub fraction: f64,
    pub warm_start: bool,
    /// Evaluation points per curve.
    pub eval_points: usize,
    /// Evaluate on the first this-many test views only.
    pub test_limit: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data: PathBuf::from("data"),
            out: PathBuf::from("run"),
            k: 4,
            method: "azimuth".into(),
            overlap_deg: 0.0,
            adjacency: None,
            field: FieldSettings::default(),
            budget: 5000,
            rays_per_batch: 1024,
            lr0: 0.01,
            warmup: 512,
            seed: 0,
            fraction: 0.5,
            warm_start: false,
            eval_points: 4,
            test_limit: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.k >= 2, "k must be at least 2");
        ensure!(self.eval_points >= 1, "eval_points must be at least 1");
        ensure!(
            self.budget >= self.eval_points,
            "budget must cover every evaluation point"
        );
        self.train_config(self.budget, self.seed).validate()?;
        self.distill_config().validate()?;
        Ok(())
    }

    pub fn train_config(&self, iterations: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            iterations,
            lr0: self.lr0,
            warmup: self.warmup,
            rays_per_batch: self.rays_per_batch,
            seed,
            ..TrainConfig::default()
        }
    }

    pub fn distill_config(&self) -> DistillConfig {
        DistillConfig {
            distill_iterations: self.budget,
            finetune_iterations: self.budget,
            fraction: self.fraction,
            seed: self.seed,
            rays_per_batch: self.rays_per_batch,
            lr0: self.lr0,
            warmup: self.warmup,
            ..DistillConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let t = TrainSettings::default();
        assert_eq!(t.config().unwrap(), TrainConfig::default());
        let d = DistillSettings::default();
        assert_eq!(d.config().unwrap(), DistillConfig::desk());
        let p: PipelineConfig = serde_json::from_str(r#"{"budget": 800, "warmup": 100}"#).unwrap();
        p.validate().unwrap();
        assert_eq!(p.k, 4);
    }

    #[test]
    fn rejects_bad_values() {
        let d = DistillSettings {
            w_alpha: -1.0,
            ..DistillSettings::default()
        };
        assert!(d.config().is_err());
        assert!(serde_json::from_str::<TrainSettings>(r#"{"iters": 3}"#).is_err());
        let t = TrainSettings {
            iterations: 0,
            ..TrainSettings::default()
        };
        assert!(t.config().is_err());
    }
}
