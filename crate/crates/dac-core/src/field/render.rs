use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods take over when std is linked
use num_traits::Float;
use rand::Rng;

use super::tape::{ColorHandle, DensityHandle, GridKind, Tape};
use super::FieldModel;
use crate::geometry::Ray;
use crate::histogram::SampleHistogram;
use crate::vec3::Vec3;

/// Opacity of a segment of length `delta` with constant density `sigma`.
pub fn alpha_from_sigma(sigma: f64, delta: f64) -> f64 {
    -(-sigma * delta).exp_m1()
}

/// Front-to-back alpha compositing. Returns the pixel color and the sample
/// weights `wᵢ = αᵢ ∏_{j<i}(1 − αⱼ)`.
pub fn composite(alphas: &[f64], colors: &[[f64; 3]], background: [f64; 3]) -> ([f64; 3], Vec<f64>) {
    let mut out = [0.0; 3];
    let mut weights = Vec::with_capacity(alphas.len());
    let mut trans = 1.0;
    let mut total = 0.0;
    for (&a, c) in alphas.iter().zip(colors) {
        let w = trans * a;
        for k in 0..3 {
            out[k] += w * c[k];
        }
        weights.push(w);
        total += w;
        trans *= 1.0 - a;
    }
    for k in 0..3 {
        out[k] += (1.0 - total) * background[k];
    }
    (out, weights)
}

/// Coarse pass of two-stage sampling.
#[derive(Debug, Clone)]
pub struct ProposalPass {
    /// Uniform coarse bins with their proposal opacities.
    pub histogram: SampleHistogram,
    /// Fine sample distances drawn from the proposal, strictly increasing.
    pub fine_t: Vec<f64>,
    pub(crate) handles: Vec<Option<DensityHandle>>,
}

impl ProposalPass {
    /// Bin edges for the fine samples: midpoints between neighbors, closed
    /// by the interval ends.
    pub fn fine_edges(&self) -> Vec<f64> {
        let e = self.histogram.edges();
        let (t0, t1) = (e[0], e[e.len() - 1]);
        let mut edges = Vec::with_capacity(self.fine_t.len() + 1);
        edges.push(t0);
        for w in self.fine_t.windows(2) {
            edges.push(0.5 * (w[0] + w[1]));
        }
        edges.push(t1);
        edges
    }
}

/// Evaluates the proposal grid on `n_coarse` uniform bins of the ray and
/// draws `n_fine` distances by inverse-transform sampling of the normalized
/// proposal weights mixed with uniform mass. With `stratified` the coarse
/// positions and fine quantiles are jittered from `rng`; otherwise bin
/// midpoints are used and `rng` is not touched.
pub fn proposal_sample<R: Rng>(
    field: &FieldModel,
    ray: &Ray,
    rng: &mut R,
    stratified: bool,
    tape: &mut Tape,
) -> ProposalPass {
    let cfg = &field.sampling;
    let (t0, t1) = cfg.interval(ray);
    let n = cfg.n_coarse;
    let width = (t1 - t0) / n as f64;
    let mut edges = Vec::with_capacity(n + 1);
    for i in 0..=n {
        edges.push(if i == n { t1 } else { t0 + width * i as f64 });
    }
    let mut alpha = Vec::with_capacity(n);
    let mut handles = Vec::with_capacity(n);
    for i in 0..n {
        let jitter = if stratified { rng.gen::<f64>() } else { 0.5 };
        let t = edges[i] + jitter * (edges[i + 1] - edges[i]);
        let (sigma, h) = tape.sigma(&field.proposal, GridKind::Proposal, ray.at(t));
        alpha.push(alpha_from_sigma(sigma, edges[i + 1] - edges[i]));
        handles.push(h);
    }

    // importance distribution over the coarse bins
    let mut pdf = Vec::with_capacity(n);
    let mut trans = 1.0;
    let mut total = 0.0;
    for &a in &alpha {
        let w = trans * a;
        pdf.push(w);
        total += w;
        trans *= 1.0 - a;
    }
    let mix = cfg.uniform_mix;
    for p in &mut pdf {
        *p = if total > 0.0 {
            (1.0 - mix) * *p / total + mix / n as f64
        } else {
            1.0 / n as f64
        };
    }
    let mut cdf = Vec::with_capacity(n + 1);
    cdf.push(0.0);
    let mut acc = 0.0;
    for &p in &pdf {
        acc += p;
        cdf.push(acc);
    }
    let norm = acc;

    let m = cfg.n_fine;
    let tiny = 1e-9 * (t1 - t0);
    let mut fine_t: Vec<f64> = Vec::with_capacity(m);
    for j in 0..m {
        let jitter = if stratified { rng.gen::<f64>() } else { 0.5 };
        let u = (j as f64 + jitter) / m as f64 * norm;
        let bin = (cdf[1..].partition_point(|&c| c <= u)).min(n - 1);
        let frac = if pdf[bin] > 0.0 {
            ((u - cdf[bin]) / pdf[bin]).clamp(0.0, 1.0)
        } else {
            0.5
        };
        let mut t = edges[bin] + frac * (edges[bin + 1] - edges[bin]);
        if let Some(&prev) = fine_t.last() {
            t = t.max(prev + tiny);
        }
        fine_t.push(t.min(t1 - tiny * (m - j) as f64));
    }

    ProposalPass {
        histogram: SampleHistogram::from_parts(edges, alpha),
        fine_t,
        handles,
    }
}

/// A fine sample with its renderer outputs.
#[derive(Debug, Clone, Copy)]
pub struct FinePoint {
    pub position: Vec3,
    pub t: f64,
    pub delta: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub color: [f64; 3],
    pub(crate) sigma_handle: Option<DensityHandle>,
    pub(crate) color_handle: Option<ColorHandle>,
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub color: [f64; 3],
    pub weights: Vec<f64>,
    pub points: Vec<FinePoint>,
    /// Fine samples as a histogram: one bin per point.
    pub fine: SampleHistogram,
    pub proposal: ProposalPass,
}

/// Full two-stage render of one ray.
pub fn render_ray<R: Rng>(
    field: &FieldModel,
    ray: &Ray,
    rng: &mut R,
    stratified: bool,
    tape: &mut Tape,
) -> RenderOutput {
    let proposal = proposal_sample(field, ray, rng, stratified, tape);
    let edges = proposal.fine_edges();
    let mut points = Vec::with_capacity(proposal.fine_t.len());
    let mut alphas = Vec::with_capacity(proposal.fine_t.len());
    let mut colors = Vec::with_capacity(proposal.fine_t.len());
    for (j, &t) in proposal.fine_t.iter().enumerate() {
        let x = ray.at(t);
        let delta = edges[j + 1] - edges[j];
        let (sigma, sigma_handle) = tape.sigma(&field.density, GridKind::Density, x);
        let (color, color_handle) = if sigma > 0.0 || tape.is_enabled() {
            tape.rgb(&field.color, x)
        } else {
            ([0.0; 3], None)
        };
        let alpha = alpha_from_sigma(sigma, delta);
        alphas.push(alpha);
        colors.push(color);
        points.push(FinePoint {
            position: x,
            t,
            delta,
            sigma,
            alpha,
            color,
            sigma_handle,
            color_handle,
        });
    }
    let (color, weights) = composite(&alphas, &colors, field.sampling.background);
    RenderOutput {
        color,
        weights,
        points,
        fine: SampleHistogram::from_parts(edges, alphas),
        proposal,
    }
}

/// Pushes `∂L/∂color` back onto the fine lookups of `out`.
pub fn backprop_color(out: &RenderOutput, background: [f64; 3], g: [f64; 3], tape: &mut Tape) {
    // suffix[i]: color seen entering sample i with unit transmittance
    let n = out.points.len();
    let mut suffix = background;
    let mut trans: Vec<f64> = Vec::with_capacity(n);
    let mut t = 1.0;
    for p in &out.points {
        trans.push(t);
        t *= 1.0 - p.alpha;
    }
    for i in (0..n).rev() {
        let p = &out.points[i];
        let ti = trans[i];
        let w = ti * p.alpha;
        let mut d_alpha = 0.0;
        for k in 0..3 {
            d_alpha += g[k] * ti * (p.color[k] - suffix[k]);
        }
        tape.add_color_adjoint(p.color_handle, [g[0] * w, g[1] * w, g[2] * w]);
        // dα/dσ = δ (1 − α)
        tape.add_sigma_adjoint(p.sigma_handle, d_alpha * p.delta * (1.0 - p.alpha));
        for k in 0..3 {
            suffix[k] = p.alpha * p.color[k] + (1.0 - p.alpha) * suffix[k];
        }
    }
}

/// Pushes `∂L/∂αᵢ` on the proposal bins back onto the proposal lookups.
pub fn backprop_proposal_alpha(pass: &ProposalPass, g_alpha: &[f64], scale: f64, tape: &mut Tape) {
    let edges = pass.histogram.edges();
    for (i, (&g, &a)) in g_alpha.iter().zip(pass.histogram.alpha()).enumerate() {
        if g != 0.0 {
            let delta = edges[i + 1] - edges[i];
            tape.add_sigma_adjoint(pass.handles[i], scale * g * delta * (1.0 - a));
        }
    }
}
