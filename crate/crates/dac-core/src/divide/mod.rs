//! View partitioning: azimuth sectors for object-centric rigs, a percentile
//! split that always balances, and community detection over a
//! co-visibility graph for unstructured captures.

mod graph;
mod spectral;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

pub use graph::{
    covis_from_oracle, covis_from_sfm, louvain, modularity, modularity_of_labels, AdjacencyMatrix, SfmPoint,
};
pub use spectral::{jacobi_eigen, kmeans, spectral_cluster};

use crate::geometry::{azimuth, CameraPose};
use crate::{Error, Result};

/// How a partition set was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartitionMethod {
    Azimuth,
    Percentile,
    Louvain,
    Spectral,
}

impl PartitionMethod {
    pub fn tag(self) -> &'static str {
        match self {
            PartitionMethod::Azimuth => "azimuth",
            PartitionMethod::Percentile => "percentile",
            PartitionMethod::Louvain => "louvain",
            PartitionMethod::Spectral => "spectral",
        }
    }

    pub fn from_tag(tag: &str) -> Option<PartitionMethod> {
        match tag {
            "azimuth" => Some(PartitionMethod::Azimuth),
            "percentile" => Some(PartitionMethod::Percentile),
            "louvain" => Some(PartitionMethod::Louvain),
            "spectral" => Some(PartitionMethod::Spectral),
            _ => None,
        }
    }

    /// Whether the partition was derived from camera azimuths rather than a
    /// graph.
    pub fn is_angular(self) -> bool {
        matches!(self, PartitionMethod::Azimuth | PartitionMethod::Percentile)
    }
}

/// K lists of view indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    pub method: PartitionMethod,
    pub parts: Vec<Vec<usize>>,
    /// Azimuth of every view, when the method used them.
    pub azimuths: Option<Vec<f64>>,
    /// Resolution of the accepted community detection run.
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub overlap_deg: f64,
}

impl PartitionSet {
    pub fn new(method: PartitionMethod, parts: Vec<Vec<usize>>) -> PartitionSet {
        PartitionSet {
            method,
            parts,
            azimuths: None,
            gamma: None,
            seed: None,
            overlap_deg: 0.0,
        }
    }

    /// Groups `labels[v]` into parts ordered by their smallest member.
    pub fn from_labels(method: PartitionMethod, labels: &[usize]) -> PartitionSet {
        let mut order: Vec<usize> = Vec::new();
        let mut parts: Vec<Vec<usize>> = Vec::new();
        for (v, &l) in labels.iter().enumerate() {
            match order.iter().position(|&o| o == l) {
                Some(p) => parts[p].push(v),
                None => {
                    order.push(l);
                    parts.push(vec![v]);
                }
            }
        }
        PartitionSet::new(method, parts)
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.parts.iter().map(Vec::len).collect()
    }

    /// Lowest-index partition containing `view`.
    pub fn owner(&self, view: usize) -> Option<usize> {
        self.parts.iter().position(|p| p.binary_search(&view).is_ok())
    }

    /// Per-view owner, for disjoint covers of `0..n`.
    pub fn labels(&self, n: usize) -> Result<Vec<usize>> {
        (0..n).map(|v| self.owner(v).ok_or(Error::Unassigned(v))).collect()
    }

    /// Checks the cover of `0..n`: every part non-empty and sorted, every
    /// view assigned, and parts disjoint unless overlap was requested.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut count = vec![0usize; n];
        for (l, part) in self.parts.iter().enumerate() {
            if part.is_empty() {
                return Err(Error::EmptyPartition(l));
            }
            if part.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(alloc::format!("partition {l} is not sorted and unique")));
            }
            for &v in part {
                if v >= n {
                    return Err(Error::ViewOutOfRange {
                        record: l,
                        view: v,
                        count: n,
                    });
                }
                count[v] += 1;
            }
        }
        if let Some(v) = count.iter().position(|&c| c == 0) {
            return Err(Error::Unassigned(v));
        }
        if self.overlap_deg == 0.0 {
            if let Some(v) = count.iter().position(|&c| c > 1) {
                return Err(Error::Invalid(alloc::format!(
                    "view {v} appears in more than one partition"
                )));
            }
        }
        Ok(())
    }

    /// Largest over smallest part size.
    pub fn balance_ratio(&self) -> f64 {
        let sizes = self.sizes();
        let max = sizes.iter().copied().max().unwrap_or(0);
        let min = sizes.iter().copied().min().unwrap_or(0);
        if min == 0 {
            f64::INFINITY
        } else {
            max as f64 / min as f64
        }
    }
}

fn pose_azimuths(poses: &[CameraPose]) -> Result<Vec<f64>> {
    poses.iter().map(|p| azimuth(p.center)).collect()
}

/// Equal azimuth sectors `[2πℓ/K, 2π(ℓ+1)/K)`. With `overlap_deg > 0`
/// each sector is widened by half the overlap on both sides, so views near
/// a boundary may belong to two partitions.
pub fn azimuth_partition(poses: &[CameraPose], k: usize, overlap_deg: f64) -> Result<PartitionSet> {
    if k < 2 {
        return Err(Error::TooFewPartitions(k));
    }
    if !(overlap_deg >= 0.0 && overlap_deg.is_finite()) {
        return Err(Error::InvalidConfig("overlap must be a non-negative angle".into()));
    }
    let az = pose_azimuths(poses)?;
    let sector = TAU / k as f64;
    let overlap = overlap_deg.to_radians();
    let mut parts = vec![Vec::new(); k];
    for (v, &phi) in az.iter().enumerate() {
        if overlap == 0.0 {
            let l = ((phi / sector) as usize).min(k - 1);
            parts[l].push(v);
        } else {
            for (l, part) in parts.iter_mut().enumerate() {
                let lo = l as f64 * sector - 0.5 * overlap;
                if crate::geometry::wrap_angle(phi - lo) < sector + overlap {
                    part.push(v);
                }
            }
        }
    }
    if let Some(l) = parts.iter().position(Vec::is_empty) {
        return Err(Error::EmptyPartition(l));
    }
    let mut set = PartitionSet::new(PartitionMethod::Azimuth, parts);
    set.azimuths = Some(az);
    set.overlap_deg = overlap_deg;
    Ok(set)
}

/// Splits views sorted by azimuth (ties by index) at the `jN/K` order
/// statistics, so sizes differ by at most one.
pub fn percentile_partition(poses: &[CameraPose], k: usize) -> Result<PartitionSet> {
    let az = pose_azimuths(poses)?;
    let mut set = percentile_from_azimuths(&az, k)?;
    set.azimuths = Some(az);
    Ok(set)
}

fn percentile_from_azimuths(az: &[f64], k: usize) -> Result<PartitionSet> {
    if k < 2 {
        return Err(Error::TooFewPartitions(k));
    }
    let n = az.len();
    if n < k {
        return Err(Error::EmptyPartition(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| az[a].total_cmp(&az[b]).then(a.cmp(&b)));
    let parts = (0..k)
        .map(|j| {
            let mut p = order[j * n / k..(j + 1) * n / k].to_vec();
            p.sort_unstable();
            p
        })
        .collect();
    Ok(PartitionSet::new(PartitionMethod::Percentile, parts))
}

/// Settings for graph-based partitioning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommunityConfig {
    /// Resolution for a single Louvain run.
    pub gamma: f64,
    pub seed: u64,
    /// Number of points on the resolution ladder tried by
    /// [`partition_realworld`].
    pub sweep_steps: usize,
    /// Largest accepted ratio between the biggest and smallest community.
    pub balance: f64,
}

impl Default for CommunityConfig {
    fn default() -> Self {
        CommunityConfig {
            gamma: 1.0,
            seed: 0,
            sweep_steps: 12,
            balance: 2.0,
        }
    }
}

impl CommunityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig("resolution must be positive".into()));
        }
        if !(self.balance >= 1.0) {
            return Err(Error::InvalidConfig("balance threshold must be at least 1".into()));
        }
        if self.sweep_steps == 0 {
            return Err(Error::InvalidConfig("resolution sweep needs at least one step".into()));
        }
        Ok(())
    }
}

pub const GAMMA_LADDER_MIN: f64 = 0.5;
pub const GAMMA_LADDER_MAX: f64 = 4.0;

/// Geometric ladder of resolutions from [`GAMMA_LADDER_MIN`] to
/// [`GAMMA_LADDER_MAX`].
pub fn gamma_ladder(steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![GAMMA_LADDER_MIN];
    }
    let ratio = GAMMA_LADDER_MAX / GAMMA_LADDER_MIN;
    (0..steps)
        .map(|i| GAMMA_LADDER_MIN * ratio.powf(i as f64 / (steps - 1) as f64))
        .collect()
}

/// Graph partitioning with fallbacks: the first Louvain run on the
/// resolution ladder that yields exactly `k` balanced communities, else a
/// balanced spectral clustering with positive modularity, else the
/// percentile split of the camera azimuths.
pub fn partition_realworld(
    adj: &AdjacencyMatrix,
    poses: &[CameraPose],
    k: usize,
    config: CommunityConfig,
) -> Result<PartitionSet> {
    if k < 2 {
        return Err(Error::TooFewPartitions(k));
    }
    config.validate()?;
    if adj.len() != poses.len() {
        return Err(Error::Invalid(alloc::format!(
            "adjacency has {} nodes for {} poses",
            adj.len(),
            poses.len()
        )));
    }
    for gamma in gamma_ladder(config.sweep_steps) {
        let cfg = CommunityConfig { gamma, ..config };
        let set = louvain(adj, cfg)?;
        if set.k() == k && set.balance_ratio() <= config.balance {
            return Ok(set);
        }
    }
    if let Ok(set) = spectral_cluster(adj, k, config.seed) {
        if set.k() == k && set.balance_ratio() <= config.balance && modularity(adj, &set, 1.0)? > 0.0 {
            return Ok(set);
        }
    }
    let mut set = percentile_partition(poses, k)?;
    set.seed = Some(config.seed);
    Ok(set)
}
