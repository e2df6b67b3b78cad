use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{CommunityConfig, PartitionMethod, PartitionSet};
use crate::geometry::CameraPose;
use crate::rng::{seeded, streams};
use crate::scene::{covis_surface_samples, oracle_transmittance, Scene};
use crate::vec3::Vec3;
use crate::{Error, Result};

/// Symmetric co-visibility counts between views, zero on the diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    weights: Vec<u64>,
}

impl AdjacencyMatrix {
    /// Row-major `n × n` weights.
    pub fn new(n: usize, weights: Vec<u64>) -> Result<AdjacencyMatrix> {
        if weights.len() != n * n {
            return Err(Error::Invalid(alloc::format!(
                "expected {} weights, got {}",
                n * n,
                weights.len()
            )));
        }
        for i in 0..n {
            if weights[i * n + i] != 0 {
                return Err(Error::Invalid(alloc::format!("nonzero diagonal at node {i}")));
            }
            for j in i + 1..n {
                if weights[i * n + j] != weights[j * n + i] {
                    return Err(Error::Invalid(alloc::format!("asymmetric weight between {i} and {j}")));
                }
            }
        }
        Ok(AdjacencyMatrix { n, weights })
    }

    pub fn zeros(n: usize) -> AdjacencyMatrix {
        AdjacencyMatrix {
            n,
            weights: vec![0; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.weights[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    fn add_pair(&mut self, i: usize, j: usize, w: u64) {
        self.weights[i * self.n + j] += w;
        self.weights[j * self.n + i] += w;
    }

    pub fn degree(&self, i: usize) -> u64 {
        self.row(i).iter().sum()
    }

    /// Sum over ordered pairs, i.e. twice the total edge weight.
    pub fn double_total(&self) -> u64 {
        self.weights.iter().sum()
    }

    fn as_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|&w| w as f64).collect()
    }
}

/// A triangulated point and the views observing it.
#[derive(Debug, Clone, PartialEq)]
pub struct SfmPoint {
    pub position: Vec3,
    pub views: Vec<usize>,
}

/// Counts, for every pair of views, the points both observe.
pub fn covis_from_sfm(points: &[SfmPoint], n_views: usize) -> Result<AdjacencyMatrix> {
    let mut adj = AdjacencyMatrix::zeros(n_views);
    for (record, p) in points.iter().enumerate() {
        let mut views = p.views.clone();
        views.sort_unstable();
        views.dedup();
        if let Some(&view) = views.iter().find(|&&v| v >= n_views) {
            return Err(Error::ViewOutOfRange {
                record,
                view,
                count: n_views,
            });
        }
        for (a, &i) in views.iter().enumerate() {
            for &j in &views[a + 1..] {
                adj.add_pair(i, j, 1);
            }
        }
    }
    Ok(adj)
}

/// Samples used along each camera-to-point segment by the occlusion test.
pub const OCCLUSION_SAMPLES: usize = 256;

/// Co-visibility from oracle geometry: surface samples stand in for
/// triangulated points, and a view observes a point when it projects into
/// the image and more than half the light reaches the camera.
pub fn covis_from_oracle(scene: &Scene, poses: &[CameraPose], n_samples: usize, seed: u64) -> Result<AdjacencyMatrix> {
    let points = covis_surface_samples(scene, n_samples, seed)?;
    let records: Vec<SfmPoint> = points
        .into_iter()
        .map(|x| SfmPoint {
            position: x,
            views: visible_views(scene, poses, x),
        })
        .collect();
    covis_from_sfm(&records, poses.len())
}

/// Views that see `x` unoccluded.
pub fn visible_views(scene: &Scene, poses: &[CameraPose], x: Vec3) -> Vec<usize> {
    poses
        .iter()
        .enumerate()
        .filter(|(_, pose)| {
            let inside = pose
                .project(x)
                .is_some_and(|(u, v)| u >= 0.0 && v >= 0.0 && u < pose.width as f64 && v < pose.height as f64);
            inside && oracle_transmittance(scene, pose.center, x, OCCLUSION_SAMPLES) > 0.5
        })
        .map(|(i, _)| i)
        .collect()
}

/// Newman modularity with resolution `gamma` of a per-node labelling.
pub fn modularity_of_labels(adj: &AdjacencyMatrix, labels: &[usize], gamma: f64) -> Result<f64> {
    let two_m = adj.double_total() as f64;
    if two_m == 0.0 {
        return Err(Error::EmptyGraph);
    }
    let n = adj.len();
    let k: Vec<f64> = (0..n).map(|i| adj.degree(i) as f64).collect();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += adj.get(i, j) as f64 - gamma * k[i] * k[j] / two_m;
            }
        }
    }
    Ok(q / two_m)
}

/// Modularity of a disjoint partition covering every node.
pub fn modularity(adj: &AdjacencyMatrix, partition: &PartitionSet, gamma: f64) -> Result<f64> {
    let labels = partition.labels(adj.len())?;
    if partition.sizes().iter().sum::<usize>() != adj.len() {
        return Err(Error::Invalid("modularity needs a disjoint partition".into()));
    }
    modularity_of_labels(adj, &labels, gamma)
}

/// Greedy local moves on a weighted graph given as a dense matrix
/// (self-loops allowed), starting from the community ids in `comm`.
/// Returns whether any node moved.
fn local_moves(g: &[f64], n: usize, comm: &mut [usize], two_m: f64, gamma: f64, rng: &mut impl rand::Rng) -> bool {
    let k: Vec<f64> = (0..n).map(|i| g[i * n..(i + 1) * n].iter().sum()).collect();
    let mut tot = vec![0.0; n];
    for i in 0..n {
        tot[comm[i]] += k[i];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut links = vec![0.0; n];
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for &i in &order {
            let old = comm[i];
            tot[old] -= k[i];
            links.iter_mut().for_each(|l| *l = 0.0);
            for j in 0..n {
                if j != i {
                    links[comm[j]] += g[i * n + j];
                }
            }
            // exact modularity change of joining c: k_in/m − γ·Σ_tot·k_i/(2m²)
            let gain = |c: usize| 2.0 * links[c] / two_m - 2.0 * gamma * tot[c] * k[i] / (two_m * two_m);
            let mut best = old;
            let mut best_gain = gain(old);
            for c in 0..n {
                if c != old && links[c] > 0.0 {
                    let gc = gain(c);
                    if gc > best_gain {
                        best = c;
                        best_gain = gc;
                    }
                }
            }
            tot[best] += k[i];
            if best != old {
                comm[i] = best;
                moved = true;
                moved_any = true;
            }
        }
        if !moved {
            break;
        }
    }
    moved_any
}

/// Renumbers ids densely in first-seen order; returns the community count.
fn renumber(ids: &mut [usize]) -> usize {
    let mut map = vec![usize::MAX; ids.iter().max().map_or(0, |m| m + 1)];
    let mut next = 0;
    for c in ids.iter_mut() {
        if map[*c] == usize::MAX {
            map[*c] = next;
            next += 1;
        }
        *c = map[*c];
    }
    next
}

/// Collapses nodes with equal (dense) labels into super nodes.
fn aggregate(g: &[f64], n: usize, labels: &[usize], count: usize) -> Vec<f64> {
    let mut agg = vec![0.0; count * count];
    for i in 0..n {
        for j in 0..n {
            agg[labels[i] * count + labels[j]] += g[i * n + j];
        }
    }
    agg
}

/// Multi-level phase from a starting labelling of the original nodes,
/// followed by single-node refinement on the original graph; repeats while
/// refinement moves anything.
fn multilevel(
    g0: &[f64],
    n0: usize,
    mut membership: Vec<usize>,
    two_m: f64,
    gamma: f64,
    rng: &mut impl rand::Rng,
) -> Vec<usize> {
    loop {
        let mut n = renumber(&mut membership);
        let mut g = aggregate(g0, n0, &membership, n);
        loop {
            let mut comm: Vec<usize> = (0..n).collect();
            if !local_moves(&g, n, &mut comm, two_m, gamma, rng) {
                break;
            }
            let next = renumber(&mut comm);
            g = aggregate(&g, n, &comm, next);
            for m in &mut membership {
                *m = comm[*m];
            }
            n = next;
        }
        if !local_moves(g0, n0, &mut membership, two_m, gamma, rng) {
            break;
        }
    }
    renumber(&mut membership);
    membership
}

fn dense_modularity(g: &[f64], n: usize, labels: &[usize], two_m: f64, gamma: f64) -> f64 {
    let mut inside = vec![0.0; n];
    let mut tot = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            tot[labels[i]] += g[i * n + j];
            if labels[i] == labels[j] {
                inside[labels[i]] += g[i * n + j];
            }
        }
    }
    (0..n)
        .map(|c| inside[c] / two_m - gamma * (tot[c] / two_m) * (tot[c] / two_m))
        .sum()
}

/// One Louvain run. Once it converges, each community and each pair of
/// communities in turn is dissolved into singletons and the multi-level
/// phase rerun from there; the result is kept when modularity rises. Merges
/// made early can be undone this way.
fn louvain_once(g0: &[f64], n0: usize, two_m: f64, gamma: f64, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut best = multilevel(g0, n0, (0..n0).collect(), two_m, gamma, rng);
    let mut q = dense_modularity(g0, n0, &best, two_m, gamma);
    'outer: loop {
        let count = best.iter().max().map_or(0, |m| m + 1);
        for a in 0..count {
            for b in a..count {
                let split = best
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| if l == a || l == b { n0 + i } else { l })
                    .collect();
                let cand = multilevel(g0, n0, split, two_m, gamma, rng);
                let qc = dense_modularity(g0, n0, &cand, two_m, gamma);
                if qc > q + 1e-12 {
                    best = cand;
                    q = qc;
                    continue 'outer;
                }
            }
        }
        return best;
    }
}

/// Number of seeded Louvain runs; the highest-modularity one wins.
pub const LOUVAIN_RESTARTS: usize = 10;

/// Louvain community detection: greedy local moves by modularity gain,
/// then aggregation of communities into super nodes, until a level makes no
/// move. Visit order is a seeded shuffle per level. The final communities
/// are refined by single-node moves on the original graph; if any node
/// moves, the multi-level phase restarts from the refined partition. After
/// that, single communities and pairs are dissolved and re-solved while that
/// raises modularity. Several runs share one seeded stream and the best modularity is kept
/// (earliest on ties).
pub fn louvain(adj: &AdjacencyMatrix, config: CommunityConfig) -> Result<PartitionSet> {
    config.validate()?;
    let two_m = adj.double_total() as f64;
    if two_m == 0.0 {
        return Err(Error::EmptyGraph);
    }
    let mut rng = seeded(config.seed, streams::LOUVAIN);
    let g0 = adj.as_f64();
    let n0 = adj.len();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..LOUVAIN_RESTARTS {
        let labels = louvain_once(&g0, n0, two_m, config.gamma, &mut rng);
        let q = modularity_of_labels(adj, &labels, config.gamma)?;
        if best.as_ref().is_none_or(|(_, b)| q > *b + 1e-12) {
            best = Some((labels, q));
        }
    }
    let mut set = PartitionSet::from_labels(PartitionMethod::Louvain, &best.unwrap().0);
    set.gamma = Some(config.gamma);
    set.seed = Some(config.seed);
    Ok(set)
}
