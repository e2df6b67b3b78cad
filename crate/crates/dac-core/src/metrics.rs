//! PSNR, SSIM and MS-SSIM on `[0, 1]` images.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods take over when std is linked
use num_traits::Float;

use crate::image::Image;
use crate::{Error, Result};

/// Reported for identical images instead of infinity.
pub const PSNR_CAP: f64 = 99.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP
    } else {
        (-10.0 * mse.log10()).min(PSNR_CAP)
    }
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    let n = a.data().len() as f64;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Separable "valid" Gaussian filtering of a single-channel plane.
fn filter(plane: &[f64], width: usize, height: usize, win: &[f64; SSIM_WINDOW]) -> (Vec<f64>, usize, usize) {
    let ow = width - SSIM_WINDOW + 1;
    let oh = height - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; ow * height];
    for y in 0..height {
        for x in 0..ow {
            horiz[y * ow + x] = (0..SSIM_WINDOW).map(|k| win[k] * plane[y * width + x + k]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|k| win[k] * horiz[(y + k) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

/// Mean luminance·contrast·structure map and mean contrast·structure map of
/// one channel.
fn ssim_channel(a: &[f64], b: &[f64], width: usize, height: usize) -> (f64, f64) {
    let win = gaussian_window();
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> { a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect() };
    let (mu_a, _, _) = filter(a, width, height, &win);
    let (mu_b, _, _) = filter(b, width, height, &win);
    let (aa, _, _) = filter(&prod(&|x, _| x * x), width, height, &win);
    let (bb, _, _) = filter(&prod(&|_, y| y * y), width, height, &win);
    let (ab, _, _) = filter(&prod(&|x, y| x * y), width, height, &win);
    let n = mu_a.len() as f64;
    let (mut ssim_sum, mut cs_sum) = (0.0, 0.0);
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        let cs = (2.0 * cov + SSIM_C2) / (va + vb + SSIM_C2);
        let l = (2.0 * ma * mb + SSIM_C1) / (ma * ma + mb * mb + SSIM_C1);
        ssim_sum += l * cs;
        cs_sum += cs;
    }
    (ssim_sum / n, cs_sum / n)
}

fn check_size(a: &Image) -> Result<()> {
    if a.width().min(a.height()) < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            width: a.width(),
            height: a.height(),
            window: SSIM_WINDOW,
        });
    }
    Ok(())
}

/// Mean SSIM over valid 11×11 Gaussian windows, averaged over channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    check_size(a)?;
    let total: f64 = (0..3)
        .map(|c| ssim_channel(&a.channel(c), &b.channel(c), a.width(), a.height()).0)
        .sum();
    Ok(total / 3.0)
}

/// Number of dyadic scales an image supports, at most 5.
pub fn ms_ssim_scales(width: usize, height: usize) -> usize {
    let mut side = width.min(height);
    let mut scales = 0;
    while scales < MS_SSIM_WEIGHTS.len() && side >= SSIM_WINDOW {
        scales += 1;
        side /= 2;
    }
    scales
}

/// 2× average pooling of a plane (odd trailing rows/columns dropped).
fn downsample(plane: &[f64], width: usize, height: usize) -> (Vec<f64>, usize, usize) {
    let (w2, h2) = (width / 2, height / 2);
    let mut out = vec![0.0; w2 * h2];
    for y in 0..h2 {
        for x in 0..w2 {
            let i = 2 * y * width + 2 * x;
            out[y * w2 + x] = 0.25 * (plane[i] + plane[i + 1] + plane[i + width] + plane[i + width + 1]);
        }
    }
    (out, w2, h2)
}

/// Multi-scale SSIM with the standard five weights, truncated and
/// renormalized to the number of scales the image supports. Per-scale
/// factors are clamped at zero before exponentiation.
pub fn ms_ssim(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    check_size(a)?;
    let scales = ms_ssim_scales(a.width(), a.height());
    let wsum: f64 = MS_SSIM_WEIGHTS[..scales].iter().sum();
    let weights: Vec<f64> = MS_SSIM_WEIGHTS[..scales].iter().map(|w| w / wsum).collect();
    let mut total = 0.0;
    for c in 0..3 {
        let (mut pa, mut pb) = (a.channel(c), b.channel(c));
        let (mut w, mut h) = (a.width(), a.height());
        let mut value = 1.0;
        for (s, &weight) in weights.iter().enumerate() {
            let (full, cs) = ssim_channel(&pa, &pb, w, h);
            let factor = if s + 1 == scales { full } else { cs };
            value *= factor.max(0.0).powf(weight);
            if s + 1 < scales {
                let (da, w2, h2) = downsample(&pa, w, h);
                let (db, _, _) = downsample(&pb, w, h);
                pa = da;
                pb = db;
                w = w2;
                h = h2;
            }
        }
        total += value;
    }
    Ok(total / 3.0)
}
