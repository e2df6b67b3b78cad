//! Rendering and image-quality evaluation of field checkpoints.

use anyhow::Result;
use dac_core::field::{render_ray, FieldModel, Tape};
use dac_core::geometry::{pixel_ray, CameraPose};
use dac_core::metrics::{ms_ssim, psnr, ssim};
use dac_core::rng::seeded;
use dac_core::train::TrainView;
use dac_core::Image;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Deterministic render: midpoint samples, no stratification.
pub fn render_image(field: &FieldModel, pose: &CameraPose) -> Image {
    let mut img = Image::new(pose.width as usize, pose.height as usize);
    // never drawn from without stratification
    let mut rng = seeded(0, 0);
    let mut tape = Tape::disabled();
    for y in 0..pose.height {
        for x in 0..pose.width {
            let ray = pixel_ray(pose, x, y).expect("pixel inside image");
            let out = render_ray(field, &ray, &mut rng, false, &mut tape);
            img.set_pixel(x as usize, y as usize, out.color.map(|c| c.clamp(0.0, 1.0)));
        }
    }
    img
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub psnr: f64,
    pub ssim: f64,
    pub ms_ssim: f64,
}

/// Means over images plus the per-image values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub psnr: f64,
    pub ssim: f64,
    pub ms_ssim: f64,
    pub per_image: Vec<ImageMetrics>,
}

pub fn image_metrics(rendered: &Image, truth: &Image) -> Result<ImageMetrics> {
    Ok(ImageMetrics {
        psnr: psnr(rendered, truth)?,
        ssim: ssim(rendered, truth)?,
        ms_ssim: ms_ssim(rendered, truth)?,
    })
}

pub fn aggregate(per_image: Vec<ImageMetrics>) -> Metrics {
    let n = per_image.len().max(1) as f64;
    let mean = |f: fn(&ImageMetrics) -> f64| per_image.iter().map(f).sum::<f64>() / n;
    Metrics {
        psnr: mean(|m| m.psnr),
        ssim: mean(|m| m.ssim),
        ms_ssim: mean(|m| m.ms_ssim),
        per_image,
    }
}

/// Renders every view's pose and scores it against the view's image.
pub fn evaluate(field: &FieldModel, views: &[TrainView]) -> Result<Metrics> {
    let per_image = views
        .par_iter()
        .map(|v| image_metrics(&render_image(field, &v.pose), &v.image))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(per_image))
}
