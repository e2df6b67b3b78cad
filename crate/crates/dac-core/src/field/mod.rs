//! Trainable grid radiance field: a coarse proposal density grid that drives
//! importance sampling, and fine density/color grids that are rendered.
//!
//! Gradients are analytic. A forward pass records every grid lookup on a
//! [`Tape`]; losses deposit adjoints on the recorded lookups and
//! [`Tape::backward`] scatters them through the activations and trilinear
//! weights into [`Gradients`].

mod grid;
mod render;
mod tape;

pub use grid::{sigmoid, softplus, softplus_inverse, ColorGrid, DensityGrid, Grid, Stencil};
pub use render::{
    alpha_from_sigma, backprop_color, backprop_proposal_alpha, composite, proposal_sample, render_ray, FinePoint,
    ProposalPass, RenderOutput,
};
pub use tape::{ColorHandle, DensityHandle, Gradients, GridKind, SparseGrad, Tape};

use crate::geometry::Ray;
use crate::vec3::{Aabb, Vec3};
use crate::{Error, Result};

/// Initial fine and proposal density: near-transparent.
pub const INITIAL_DENSITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub near: f64,
    pub far: f64,
    pub background: [f64; 3],
    /// Fraction of uniform mass mixed into the importance distribution.
    pub uniform_mix: f64,
}

impl SamplingConfig {
    /// Sampling interval covering a bounding sphere seen from cameras at
    /// distance `camera_radius` from its center.
    pub fn for_rig(camera_radius: f64, scene_radius: f64, background: [f64; 3]) -> SamplingConfig {
        SamplingConfig {
            n_coarse: 64,
            n_fine: 32,
            near: (camera_radius - scene_radius).max(1e-3),
            far: camera_radius + scene_radius,
            background,
            uniform_mix: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_coarse < 1 || self.n_fine < 1 {
            return Err(Error::InvalidConfig("sample counts must be positive".into()));
        }
        if !(self.near >= 0.0 && self.near < self.far && self.far.is_finite()) {
            return Err(Error::InvalidConfig("need 0 <= near < far".into()));
        }
        if !(0.0..=1.0).contains(&self.uniform_mix) {
            return Err(Error::InvalidConfig("uniform mix must lie in [0, 1]".into()));
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidConfig("background must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Sampling interval of `ray` after clipping to `[near, far]`.
    pub fn interval(&self, ray: &Ray) -> (f64, f64) {
        (self.near.max(ray.near), self.far.min(ray.far))
    }
}

/// Grid sizes of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolutions {
    pub proposal: usize,
    pub density: usize,
    pub color: usize,
}

impl Default for Resolutions {
    fn default() -> Self {
        Resolutions {
            proposal: 32,
            density: 128,
            color: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    pub proposal: DensityGrid,
    pub density: DensityGrid,
    pub color: ColorGrid,
    pub sampling: SamplingConfig,
}

impl FieldModel {
    /// Fresh field: densities at [`INITIAL_DENSITY`], colors mid-gray.
    pub fn new(res: Resolutions, bounds: Aabb, sampling: SamplingConfig) -> Result<FieldModel> {
        let raw = softplus_inverse(INITIAL_DENSITY);
        FieldModel::from_grids(
            DensityGrid::new(res.proposal, bounds, raw)?,
            DensityGrid::new(res.density, bounds, raw)?,
            ColorGrid::new(res.color, bounds, 0.0)?,
            sampling,
        )
    }

    pub fn from_grids(
        proposal: DensityGrid,
        density: DensityGrid,
        color: ColorGrid,
        sampling: SamplingConfig,
    ) -> Result<FieldModel> {
        sampling.validate()?;
        if proposal.res() > density.res() {
            return Err(Error::InvalidConfig("proposal grid finer than the fine grid".into()));
        }
        if proposal.bounds() != density.bounds() || color.bounds() != density.bounds() {
            return Err(Error::InvalidConfig("grids must share one bounding box".into()));
        }
        Ok(FieldModel {
            proposal,
            density,
            color,
            sampling,
        })
    }

    pub fn resolutions(&self) -> Resolutions {
        Resolutions {
            proposal: self.proposal.res(),
            density: self.density.res(),
            color: self.color.res(),
        }
    }

    pub fn bounds(&self) -> Aabb {
        self.density.bounds()
    }

    /// Fine density and color at a point; zero density outside the bounds.
    pub fn query(&self, x: Vec3) -> (f64, [f64; 3]) {
        (self.density.sigma(x), self.color.rgb(x))
    }

    pub fn parameter_count(&self) -> usize {
        self.proposal.params().len() + self.density.params().len() + self.color.params().len()
    }
}
