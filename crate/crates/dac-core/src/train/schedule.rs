use core::f64::consts::PI;

#[allow(unused_imports)] // inherent f64 methods take over when std is linked
use num_traits::Float;

use super::TrainConfig;
use crate::{Error, Result};

/// Linear warm-up to `lr0` over the first `warmup` steps, then cosine decay
/// towards zero at the last step.
pub fn lr_at(step: usize, config: &TrainConfig) -> Result<f64> {
    let (s, w) = (config.iterations, config.warmup);
    if step >= s {
        return Err(Error::StepOutOfRange { step, iterations: s });
    }
    if step < w {
        return Ok(config.lr0 * (step + 1) as f64 / w as f64);
    }
    let progress = (step - w) as f64 / (s - w) as f64;
    Ok(config.lr0 * 0.5 * (1.0 + (PI * progress).cos()))
}
