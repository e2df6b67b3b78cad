//! Ray-distance histograms and the bound-based histogram loss used to align
//! a proposal sampler with a (possibly foreign) fine renderer.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Guard added to the teacher opacity in the `1/α` weight.
pub const HIST_EPS: f64 = 1e-7;

/// Bins `[tⱼ, tⱼ₊₁]` along a ray with one opacity per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleHistogram {
    edges: Vec<f64>,
    alpha: Vec<f64>,
}

impl SampleHistogram {
    pub fn new(edges: Vec<f64>, alpha: Vec<f64>) -> Result<SampleHistogram> {
        if edges.len() != alpha.len() + 1 || alpha.is_empty() {
            return Err(Error::Invalid("histogram needs one more edge than bins".into()));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Invalid(
                "histogram edges must be finite and strictly increasing".into(),
            ));
        }
        if alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::Invalid("histogram opacities must lie in [0, 1]".into()));
        }
        Ok(SampleHistogram { edges, alpha })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts(edges: Vec<f64>, alpha: Vec<f64>) -> SampleHistogram {
        debug_assert!(edges.len() == alpha.len() + 1);
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        SampleHistogram { edges, alpha }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Index range of bins touching `[a, b]`, endpoints inclusive.
    pub fn overlapping(&self, a: f64, b: f64) -> core::ops::Range<usize> {
        let n = self.alpha.len();
        // first bin whose right edge reaches a
        let first = self.edges[1..].partition_point(|&e| e < a);
        // one past the last bin whose left edge is at most b
        let end = self.edges[..n].partition_point(|&e| e <= b);
        first..end.max(first)
    }
}

/// Sum of the opacities of every bin of `hist` that intersects `[a, b]`.
pub fn bound(hist: &SampleHistogram, a: f64, b: f64) -> f64 {
    hist.alpha[hist.overlapping(a, b)].iter().sum()
}

/// `Σᵢ max(0, αᵢ − bound(student, Tᵢ)) / (αᵢ + ε)` over the teacher bins `Tᵢ`.
/// Zero whenever every teacher bin is covered by the student's mass.
pub fn hist_loss(student: &SampleHistogram, teacher: &SampleHistogram) -> f64 {
    hist_loss_with_grad(student, teacher).0
}

/// Loss and its gradient with respect to the student opacities. The teacher
/// side is treated as a constant.
pub fn hist_loss_with_grad(student: &SampleHistogram, teacher: &SampleHistogram) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; student.len()];
    let mut loss = 0.0;
    for (i, &target) in teacher.alpha.iter().enumerate() {
        let range = student.overlapping(teacher.edges[i], teacher.edges[i + 1]);
        let covered = if range.is_empty() {
            0.0
        } else {
            // summed directly so equal histograms give an exact zero
            student.alpha[range.clone()].iter().sum()
        };
        let excess = target - covered;
        if excess > 0.0 {
            let scale = 1.0 / (target + HIST_EPS);
            loss += scale * excess;
            for g in &mut grad[range] {
                *g -= scale;
            }
        }
    }
    (loss, grad)
}
