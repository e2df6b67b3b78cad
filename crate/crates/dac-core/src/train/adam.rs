use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods take over when std is linked
use num_traits::Float;

use crate::field::{FieldModel, Gradients, Grid, SparseGrad};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Moments {
    fn new(n: usize) -> Moments {
        Moments {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// Adam moments for every grid of one field.
///
/// Updates are sparse: only parameters with a non-zero gradient in the
/// current step move, and their moments decay only when they are updated.
/// Bias correction uses the global step count.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub config: AdamConfig,
    step: u64,
    proposal: Moments,
    density: Moments,
    color: Moments,
}

impl OptimizerState {
    pub fn new(field: &FieldModel, config: AdamConfig) -> OptimizerState {
        OptimizerState {
            config,
            step: 0,
            proposal: Moments::new(field.proposal.params().len()),
            density: Moments::new(field.density.params().len()),
            color: Moments::new(field.color.params().len()),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn apply(&mut self, field: &mut FieldModel, grads: &Gradients, lr: f64) {
        self.step += 1;
        let cfg = self.config;
        let bc1 = 1.0 - cfg.beta1.powi(self.step.min(i32::MAX as u64) as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.step.min(i32::MAX as u64) as i32);
        update(
            &mut field.proposal,
            &mut self.proposal,
            &grads.proposal,
            cfg,
            lr,
            bc1,
            bc2,
        );
        update(&mut field.density, &mut self.density, &grads.density, cfg, lr, bc1, bc2);
        update(&mut field.color, &mut self.color, &grads.color, cfg, lr, bc1, bc2);
    }
}

fn update<const C: usize>(
    grid: &mut Grid<C>,
    mom: &mut Moments,
    grad: &SparseGrad<C>,
    cfg: AdamConfig,
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    let params = grid.params_mut();
    let values = grad.values();
    for &v in grad.touched() {
        let base = v as usize * C;
        for i in base..base + C {
            let g = values[i];
            if g == 0.0 {
                continue;
            }
            mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g;
            mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = mom.m[i] / bc1;
            let v_hat = mom.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}
