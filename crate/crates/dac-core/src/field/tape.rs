use alloc::vec;
use alloc::vec::Vec;

use super::grid::{sigmoid, softplus, ColorGrid, DensityGrid, Stencil};
use super::FieldModel;
use crate::vec3::Vec3;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Proposal,
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityHandle(u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColorHandle(u32);

#[derive(Debug, Clone)]
struct DensityRecord {
    kind: GridKind,
    stencil: Stencil,
    pre: f64,
    adjoint: f64,
}

#[derive(Debug, Clone)]
struct ColorRecord {
    stencil: Stencil,
    pre: [f64; 3],
    adjoint: [f64; 3],
}

/// Record of grid lookups made during a forward pass.
///
/// A disabled tape evaluates lookups without recording them, so the same
/// forward code serves inference and training.
#[derive(Debug, Clone)]
pub struct Tape {
    enabled: bool,
    forward_seen: bool,
    density: Vec<DensityRecord>,
    color: Vec<ColorRecord>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape {
            enabled: true,
            forward_seen: false,
            density: Vec::new(),
            color: Vec::new(),
        }
    }

    pub fn disabled() -> Tape {
        Tape {
            enabled: false,
            ..Tape::new()
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn clear(&mut self) {
        self.density.clear();
        self.color.clear();
        self.forward_seen = false;
    }

    pub fn sigma(&mut self, grid: &DensityGrid, kind: GridKind, p: Vec3) -> (f64, Option<DensityHandle>) {
        self.forward_seen = true;
        let Some(stencil) = grid.stencil(p) else {
            return (0.0, None);
        };
        let pre = grid.interpolate(&stencil)[0];
        let sigma = softplus(pre);
        if !self.enabled {
            return (sigma, None);
        }
        self.density.push(DensityRecord {
            kind,
            stencil,
            pre,
            adjoint: 0.0,
        });
        (sigma, Some(DensityHandle(self.density.len() as u32 - 1)))
    }

    pub fn rgb(&mut self, grid: &ColorGrid, p: Vec3) -> ([f64; 3], Option<ColorHandle>) {
        self.forward_seen = true;
        let Some(stencil) = grid.stencil(p) else {
            return ([0.0; 3], None);
        };
        let pre = grid.interpolate(&stencil);
        let rgb = pre.map(sigmoid);
        if !self.enabled {
            return (rgb, None);
        }
        self.color.push(ColorRecord {
            stencil,
            pre,
            adjoint: [0.0; 3],
        });
        (rgb, Some(ColorHandle(self.color.len() as u32 - 1)))
    }

    /// Adds `∂L/∂σ` for a recorded density lookup.
    pub fn add_sigma_adjoint(&mut self, h: Option<DensityHandle>, g: f64) {
        if let Some(DensityHandle(i)) = h {
            self.density[i as usize].adjoint += g;
        }
    }

    /// Adds `∂L/∂c` for a recorded color lookup.
    pub fn add_color_adjoint(&mut self, h: Option<ColorHandle>, g: [f64; 3]) {
        if let Some(ColorHandle(i)) = h {
            let a = &mut self.color[i as usize].adjoint;
            for c in 0..3 {
                a[c] += g[c];
            }
        }
    }

    /// Scatters the accumulated adjoints into `grads`, in recording order.
    pub fn backward(&self, grads: &mut Gradients) -> Result<()> {
        if !self.forward_seen {
            return Err(Error::NoForward);
        }
        for r in &self.density {
            if r.adjoint == 0.0 {
                continue;
            }
            let g_pre = r.adjoint * sigmoid(r.pre);
            let target = match r.kind {
                GridKind::Proposal => &mut grads.proposal,
                GridKind::Density => &mut grads.density,
            };
            for (&v, &w) in r.stencil.index.iter().zip(&r.stencil.weight) {
                target.add(v as usize, [w * g_pre]);
            }
        }
        for r in &self.color {
            if r.adjoint == [0.0; 3] {
                continue;
            }
            let mut g_pre = [0.0; 3];
            for c in 0..3 {
                let s = sigmoid(r.pre[c]);
                g_pre[c] = r.adjoint[c] * s * (1.0 - s);
            }
            for (&v, &w) in r.stencil.index.iter().zip(&r.stencil.weight) {
                grads.color.add(v as usize, g_pre.map(|g| g * w));
            }
        }
        Ok(())
    }
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

/// Dense gradient buffer that remembers which vertices were written, in
/// first-write order, so clearing and sparse updates cost only the touched
/// set.
#[derive(Debug, Clone)]
pub struct SparseGrad<const C: usize> {
    values: Vec<f64>,
    stamp: Vec<u32>,
    touched: Vec<u32>,
    epoch: u32,
}

impl<const C: usize> SparseGrad<C> {
    pub fn new(vertices: usize) -> Self {
        SparseGrad {
            values: vec![0.0; vertices * C],
            stamp: vec![0; vertices],
            touched: Vec::new(),
            epoch: 1,
        }
    }

    #[inline]
    pub fn add(&mut self, vertex: usize, g: [f64; C]) {
        if self.stamp[vertex] != self.epoch {
            self.stamp[vertex] = self.epoch;
            self.touched.push(vertex as u32);
        }
        let base = vertex * C;
        for c in 0..C {
            self.values[base + c] += g[c];
        }
    }

    /// Touched vertices in first-write order.
    pub fn touched(&self) -> &[u32] {
        &self.touched
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, vertex: usize) -> [f64; C] {
        let mut out = [0.0; C];
        out.copy_from_slice(&self.values[vertex * C..vertex * C + C]);
        out
    }

    pub fn clear(&mut self) {
        for &v in &self.touched {
            let base = v as usize * C;
            self.values[base..base + C].fill(0.0);
        }
        self.touched.clear();
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
    }
}

/// Gradients for every grid of a [`FieldModel`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub proposal: SparseGrad<1>,
    pub density: SparseGrad<1>,
    pub color: SparseGrad<3>,
}

impl Gradients {
    pub fn for_field(field: &FieldModel) -> Gradients {
        Gradients {
            proposal: SparseGrad::new(field.proposal.vertex_count()),
            density: SparseGrad::new(field.density.vertex_count()),
            color: SparseGrad::new(field.color.vertex_count()),
        }
    }

    pub fn clear(&mut self) {
        self.proposal.clear();
        self.density.clear();
        self.color.clear();
    }

    pub fn is_zero(&self) -> bool {
        self.proposal.values().iter().all(|&g| g == 0.0)
            && self.density.values().iter().all(|&g| g == 0.0)
            && self.color.values().iter().all(|&g| g == 0.0)
    }
}
