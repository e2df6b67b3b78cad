//! Text and JSON interchange formats: adjacency matrices, SfM point lists,
//! partition manifests and field checkpoints on disk.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use dac_core::checkpoint;
use dac_core::divide::{AdjacencyMatrix, PartitionMethod, PartitionSet, SfmPoint};
use dac_core::field::FieldModel;
use dac_core::vec3::Vec3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Parses `N` followed by `N` rows of `N` non-negative integers.
pub fn parse_adjacency(text: &str) -> Result<AdjacencyMatrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let n: usize = lines
        .next()
        .context("adjacency file is empty")?
        .parse()
        .context("first line must be the node count")?;
    let mut weights = Vec::with_capacity(n * n);
    for row in 0..n {
        let line = lines.next().with_context(|| format!("missing adjacency row {row}"))?;
        let before = weights.len();
        for tok in line.split_whitespace() {
            let w: u64 = tok
                .parse()
                .with_context(|| format!("row {row}: `{tok}` is not a non-negative integer"))?;
            weights.push(w);
        }
        ensure!(
            weights.len() - before == n,
            "row {row} has {} entries, expected {n}",
            weights.len() - before
        );
    }
    if let Some(extra) = lines.next() {
        bail!("unexpected content after {n} rows: `{extra}`");
    }
    Ok(AdjacencyMatrix::new(n, weights)?)
}

pub fn format_adjacency(adj: &AdjacencyMatrix) -> String {
    let n = adj.len();
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = adj.row(i).iter().map(u64::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses one `x y z k v₁ … v_k` record per line.
pub fn parse_sfm_points(text: &str) -> Result<Vec<SfmPoint>> {
    let mut points = Vec::new();
    for (record, line) in text.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = |what: &str| anyhow!("record {record}: {what}");
        ensure!(toks.len() >= 4, bad("needs x y z k"));
        let mut xyz = [0.0; 3];
        for (i, x) in xyz.iter_mut().enumerate() {
            *x = toks[i].parse().map_err(|_| bad("coordinates must be numbers"))?;
        }
        let k: usize = toks[3].parse().map_err(|_| bad("view count must be an integer"))?;
        ensure!(
            toks.len() == 4 + k,
            bad(&format!("declares {k} views but lists {}", toks.len() - 4))
        );
        let views = toks[4..]
            .iter()
            .map(|t| t.parse::<usize>().map_err(|_| bad("view indices must be integers")))
            .collect::<Result<Vec<_>>>()?;
        points.push(SfmPoint {
            position: Vec3::new(xyz[0], xyz[1], xyz[2]),
            views,
        });
    }
    Ok(points)
}

/// JSON form of a [`PartitionSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub method: String,
    pub k: usize,
    pub n_views: usize,
    pub parts: Vec<Vec<usize>>,
    pub overlap_deg: f64,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    /// How the method was chosen, for graph-based runs.
    pub policy: Option<String>,
}

impl PartitionManifest {
    pub fn from_set(set: &PartitionSet, n_views: usize, policy: Option<String>) -> PartitionManifest {
        PartitionManifest {
            method: set.method.tag().to_string(),
            k: set.k(),
            n_views,
            parts: set.parts.clone(),
            overlap_deg: set.overlap_deg,
            gamma: set.gamma,
            seed: set.seed,
            policy,
        }
    }

    pub fn to_set(&self) -> Result<PartitionSet> {
        let method =
            PartitionMethod::from_tag(&self.method).with_context(|| format!("unknown method `{}`", self.method))?;
        ensure!(
            self.k == self.parts.len(),
            "manifest declares k = {} but lists {} parts",
            self.k,
            self.parts.len()
        );
        let mut set = PartitionSet::new(method, self.parts.clone());
        set.overlap_deg = self.overlap_deg;
        set.gamma = self.gamma;
        set.seed = self.seed;
        set.validate(self.n_views)?;
        Ok(set)
    }
}

pub fn save_checkpoint(path: &Path, field: &FieldModel) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, checkpoint::encode(field)).with_context(|| format!("writing {}", path.display()))
}

pub fn load_checkpoint(path: &Path) -> Result<FieldModel> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    checkpoint::decode(&bytes).with_context(|| format!("decoding {}", path.display()))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex_digest(&bytes))
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
