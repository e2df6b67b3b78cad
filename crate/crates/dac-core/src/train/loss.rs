use crate::field::{
    backprop_color, backprop_proposal_alpha, FieldModel, Gradients, Grid, RenderOutput, SparseGrad, Tape,
};
use crate::histogram::hist_loss_with_grad;

/// Weights of the field's native regularizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Total-variation smoothness of the raw grids.
    pub tv: f64,
    /// Histogram consistency between the field's own proposal and fine
    /// samples.
    pub prop: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { tv: 1e-4, prop: 1.0 }
    }
}

/// Squared color error of one ray averaged over channels. Deposits
/// `scale · ∂/∂params` on the tape.
pub fn photometric_ray(out: &RenderOutput, background: [f64; 3], target: [f64; 3], scale: f64, tape: &mut Tape) -> f64 {
    let mut loss = 0.0;
    let mut g = [0.0; 3];
    for k in 0..3 {
        let d = out.color[k] - target[k];
        loss += d * d / 3.0;
        g[k] = scale * 2.0 * d / 3.0;
    }
    if tape.is_enabled() && scale != 0.0 {
        backprop_color(out, background, g, tape);
    }
    loss
}

/// Histogram loss of the ray's proposal bins against its own fine samples,
/// with the fine side held constant.
pub fn own_histogram_ray(out: &RenderOutput, scale: f64, tape: &mut Tape) -> f64 {
    let (loss, grad) = hist_loss_with_grad(&out.proposal.histogram, &out.fine);
    if tape.is_enabled() && scale != 0.0 {
        backprop_proposal_alpha(&out.proposal, &grad, scale, tape);
    }
    loss
}

fn tv_grid<const C: usize>(grid: &Grid<C>, grad: &mut SparseGrad<C>, weight: f64) -> f64 {
    let weight = weight / grid.vertex_count() as f64;
    // neighbors pulled in by the TV stencil are appended but not visited
    let n = grad.touched().len();
    let mut total = 0.0;
    for idx in 0..n {
        let v = grad.touched()[idx] as usize;
        total += grid.tv_grad_at(v, weight, grad);
    }
    weight * total
}

/// Per-vertex total variation restricted to the vertices already holding a
/// gradient this step (the batch's interpolation stencils). Adds its
/// gradient and returns the weighted value.
pub fn tv_touched(field: &FieldModel, grads: &mut Gradients, weight: f64) -> f64 {
    if weight == 0.0 {
        return 0.0;
    }
    tv_grid(&field.proposal, &mut grads.proposal, weight)
        + tv_grid(&field.density, &mut grads.density, weight)
        + tv_grid(&field.color, &mut grads.color, weight)
}

/// Native regularizer of a field over a set of rendered rays: per-vertex
/// total variation of each grid plus the mean own-histogram loss. Contains
/// no reconstruction term.
pub fn l_orig(field: &FieldModel, outputs: &[RenderOutput], weights: LossWeights) -> f64 {
    let tv = field.proposal.mean_total_variation()
        + field.density.mean_total_variation()
        + field.color.mean_total_variation();
    let mut hist = 0.0;
    let mut tape = Tape::disabled();
    for out in outputs {
        hist += own_histogram_ray(out, 0.0, &mut tape);
    }
    if !outputs.is_empty() {
        hist /= outputs.len() as f64;
    }
    weights.tv * tv + weights.prop * hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{render_ray, Resolutions, SamplingConfig};
    use crate::geometry::Ray;
    use crate::rng::seeded;
    use crate::vec3::{Aabb, Vec3};

    #[test]
    fn constant_grids_and_consistent_histograms_cost_nothing() {
        let field = FieldModel::new(
            Resolutions {
                proposal: 4,
                density: 6,
                color: 6,
            },
            Aabb::cube(5.0),
            SamplingConfig::for_rig(3.0, 1.0, [1.0; 3]),
        )
        .unwrap();
        assert_eq!(field.density.total_variation(), 0.0);
        // constant density along the whole sampled interval: the proposal bins
        // overlapping any fine bin carry at least its opacity
        let ray = Ray::new(Vec3::new(3.0, 0.2, 0.1), Vec3::new(-1.0, 0.0, 0.0));
        let out = render_ray(&field, &ray, &mut seeded(0, 0), true, &mut Tape::disabled());
        assert_eq!(l_orig(&field, &[out], LossWeights::default()), 0.0);
    }
}
