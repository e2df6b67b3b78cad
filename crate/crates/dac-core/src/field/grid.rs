use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods take over when std is linked
use num_traits::Float;

use crate::vec3::{Aabb, Vec3};
use crate::{Error, Result};

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub fn softplus_inverse(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Eight lattice vertices surrounding a point and their trilinear weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub index: [u32; 8],
    pub weight: [f64; 8],
}

/// Cubic lattice of `res³` vertices spanning `bounds`, with `C` raw values
/// per vertex. Vertex `(i, j, k)` lives at flat index `i + res·(j + res·k)`;
/// its channels are stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<const C: usize> {
    res: usize,
    bounds: Aabb,
    params: Vec<f64>,
}

/// One raw density per vertex, activated with softplus.
pub type DensityGrid = Grid<1>;
/// Three raw color values per vertex, activated with a sigmoid.
pub type ColorGrid = Grid<3>;

impl<const C: usize> Grid<C> {
    pub fn new(res: usize, bounds: Aabb, init: f64) -> Result<Self> {
        if res < 2 {
            return Err(Error::InvalidConfig("grid resolution must be at least 2".into()));
        }
        if res > 1024 {
            return Err(Error::InvalidConfig(
                "grid resolution above 1024 is not supported".into(),
            ));
        }
        let e = bounds.extent();
        if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0) {
            return Err(Error::InvalidConfig("grid bounds must have positive extent".into()));
        }
        Ok(Grid {
            res,
            bounds,
            params: vec![init; res * res * res * C],
        })
    }

    pub fn from_params(res: usize, bounds: Aabb, params: Vec<f64>) -> Result<Self> {
        let mut g = Grid::new(res, bounds, 0.0)?;
        if params.len() != g.params.len() {
            return Err(Error::Invalid("parameter count does not match grid size".into()));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid("grid parameters must be finite".into()));
        }
        g.params = params;
        Ok(g)
    }

    pub fn res(&self) -> usize {
        self.res
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn vertex_count(&self) -> usize {
        self.res * self.res * self.res
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn vertex_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.res * (j + self.res * k)
    }

    pub fn vertex_coords(&self, v: usize) -> (usize, usize, usize) {
        (v % self.res, (v / self.res) % self.res, v / (self.res * self.res))
    }

    pub fn vertex_position(&self, v: usize) -> Vec3 {
        let (i, j, k) = self.vertex_coords(v);
        let s = 1.0 / (self.res - 1) as f64;
        let e = self.bounds.extent();
        self.bounds.min + Vec3::new(i as f64 * s * e.x, j as f64 * s * e.y, k as f64 * s * e.z)
    }

    /// Trilinear stencil, or `None` outside the bounds.
    pub fn stencil(&self, p: Vec3) -> Option<Stencil> {
        if !self.bounds.contains(p) {
            return None;
        }
        let cells = (self.res - 1) as f64;
        let e = self.bounds.extent();
        let rel = p - self.bounds.min;
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let u = (rel[a] / e[a] * cells).clamp(0.0, cells);
            // truncation is floor for non-negative u
            let i = (u as usize).min(self.res - 2);
            base[a] = i;
            frac[a] = u - i as f64;
        }
        let mut st = Stencil {
            index: [0; 8],
            weight: [0.0; 8],
        };
        for corner in 0..8 {
            let (dx, dy, dz) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
            let wx = if dx == 1 { frac[0] } else { 1.0 - frac[0] };
            let wy = if dy == 1 { frac[1] } else { 1.0 - frac[1] };
            let wz = if dz == 1 { frac[2] } else { 1.0 - frac[2] };
            st.index[corner] = self.vertex_index(base[0] + dx, base[1] + dy, base[2] + dz) as u32;
            st.weight[corner] = wx * wy * wz;
        }
        Some(st)
    }

    /// Interpolated raw values under a stencil.
    pub fn interpolate(&self, st: &Stencil) -> [f64; C] {
        let mut out = [0.0; C];
        for (&v, &w) in st.index.iter().zip(&st.weight) {
            let base = v as usize * C;
            for (c, o) in out.iter_mut().enumerate() {
                *o += w * self.params[base + c];
            }
        }
        out
    }

    /// Sum of squared differences between every vertex and its +x, +y, +z
    /// neighbors, over all channels.
    pub fn total_variation(&self) -> f64 {
        (0..self.vertex_count()).map(|v| self.tv_at(v)).sum()
    }

    /// Total variation divided by the vertex count, so the regularizer
    /// weight does not depend on resolution.
    pub fn mean_total_variation(&self) -> f64 {
        self.total_variation() / self.vertex_count() as f64
    }

    /// Forward-difference contribution of one vertex to the total variation.
    pub fn tv_at(&self, v: usize) -> f64 {
        let (i, j, k) = self.vertex_coords(v);
        let mut acc = 0.0;
        for (step, coord) in [(1, i), (self.res, j), (self.res * self.res, k)] {
            if coord + 1 < self.res {
                let n = v + step;
                for c in 0..C {
                    let d = self.params[n * C + c] - self.params[v * C + c];
                    acc += d * d;
                }
            }
        }
        acc
    }

    /// Adds `weight · ∂tv_at(v)/∂params` into `grad` and returns `tv_at(v)`.
    pub fn tv_grad_at(&self, v: usize, weight: f64, grad: &mut super::SparseGrad<C>) -> f64 {
        let (i, j, k) = self.vertex_coords(v);
        let mut acc = 0.0;
        for (step, coord) in [(1, i), (self.res, j), (self.res * self.res, k)] {
            if coord + 1 < self.res {
                let n = v + step;
                let mut d = [0.0; C];
                for (c, dc) in d.iter_mut().enumerate() {
                    let diff = self.params[n * C + c] - self.params[v * C + c];
                    acc += diff * diff;
                    *dc = 2.0 * weight * diff;
                }
                grad.add(n, d);
                for dc in &mut d {
                    *dc = -*dc;
                }
                grad.add(v, d);
            }
        }
        acc
    }
}

impl DensityGrid {
    pub fn sigma(&self, p: Vec3) -> f64 {
        self.stencil(p).map_or(0.0, |st| softplus(self.interpolate(&st)[0]))
    }
}

impl ColorGrid {
    pub fn rgb(&self, p: Vec3) -> [f64; 3] {
        match self.stencil(p) {
            Some(st) => self.interpolate(&st).map(sigmoid),
            None => [0.0; 3],
        }
    }
}
