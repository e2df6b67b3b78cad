use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods take over when std is linked
use num_traits::Float;
use rand::Rng;

use super::{AdjacencyMatrix, PartitionMethod, PartitionSet};
use crate::rng::{seeded, streams};
use crate::{Error, Result};

const JACOBI_MAX_SWEEPS: usize = 100;
pub const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITERS: usize = 300;

/// Eigen-decomposition of a symmetric `n × n` row-major matrix by cyclic
/// Jacobi rotations. Returns eigenvalues in descending order (ties by
/// index) and the matching eigenvectors as columns of a row-major matrix.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].total_cmp(&a[x * n + x]).then(x.cmp(&y)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = v[row * n + src];
        }
    }
    (values, vectors)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One k-means++ seeded Lloyd run. Returns labels and inertia.
fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> (Vec<usize>, f64) {
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centers.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, centers.last().unwrap()));
        }
    }
    let mut labels = vec![0usize; n];
    for iter in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed && iter > 0 {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed an empty cluster at the point farthest from its center
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(&points[a], &centers[labels[a]]);
                        let db = sq_dist(&points[b], &centers[labels[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap();
                centers[c] = points[far].clone();
                labels[far] = c;
            } else {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
    (labels, inertia)
}

/// k-means with k-means++ seeding; the lowest-inertia run of `restarts`
/// wins (earliest on ties).
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || points.len() < k {
        return Err(Error::NotEnoughCandidates {
            requested: k,
            available: points.len(),
        });
    }
    let mut rng = seeded(seed, streams::KMEANS);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..restarts.max(1) {
        let (labels, inertia) = kmeans_once(points, k, &mut rng);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    Ok(best.unwrap().0)
}

/// Normalized spectral clustering: top-`k` eigenvectors of
/// `D^{-1/2} A D^{-1/2}`, rows scaled to unit length, then k-means.
pub fn spectral_cluster(adj: &AdjacencyMatrix, k: usize, seed: u64) -> Result<PartitionSet> {
    if k < 2 {
        return Err(Error::TooFewPartitions(k));
    }
    let n = adj.len();
    if n < k {
        return Err(Error::NotEnoughCandidates {
            requested: k,
            available: n,
        });
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| match adj.degree(i) {
            0 => Err(Error::IsolatedNode(i)),
            d => Ok(1.0 / (d as f64).sqrt()),
        })
        .collect::<Result<_>>()?;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = inv_sqrt[i] * adj.get(i, j) as f64 * inv_sqrt[j];
        }
    }
    let (_, vectors) = jacobi_eigen(&m, n);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row: Vec<f64> = vectors[i * n..i * n + k].to_vec();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|x| x / norm).collect()
            } else {
                row
            }
        })
        .collect();
    let labels = kmeans(&rows, k, KMEANS_RESTARTS, seed)?;
    let mut set = PartitionSet::from_labels(PartitionMethod::Spectral, &labels);
    set.seed = Some(seed);
    Ok(set)
}
