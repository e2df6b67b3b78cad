//! The pipeline stages as reusable functions; the CLI subcommands and the
//! full pipeline both go through these.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use dac_core::conquer::{distill, finetune, DistillConfig, DistillLog, ExpertRegistry};
use dac_core::divide::{
    azimuth_partition, covis_from_oracle, louvain, partition_realworld, percentile_partition, spectral_cluster,
    AdjacencyMatrix, CommunityConfig, PartitionSet,
};
use dac_core::field::FieldModel;
use dac_core::train::{train_expert, TrainConfig, TrainLog};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{read_json, write_json, Dataset, Split};
use crate::formats::{load_checkpoint, parse_adjacency, save_checkpoint, PartitionManifest};
use crate::settings::{FieldSettings, TrainSettings};

pub const REGISTRY_FILE: &str = "registry.json";
pub const PARTITIONS_FILE: &str = "partitions.json";
/// Surface samples for the oracle co-visibility surrogate.
pub const ORACLE_COVIS_SAMPLES: usize = 2000;

/// Recorded in every training manifest: what stands in for the baseline's
/// native losses.
pub const ORIG_LOSS_NOTE: &str =
    "native loss realized as per-vertex grid total variation plus proposal-vs-fine histogram consistency";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivideMethod {
    Azimuth,
    Percentile,
    Louvain,
    Spectral,
    /// Louvain over a resolution sweep, then spectral, then percentile.
    Auto,
}

impl std::str::FromStr for DivideMethod {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "azimuth" => DivideMethod::Azimuth,
            "percentile" => DivideMethod::Percentile,
            "louvain" => DivideMethod::Louvain,
            "spectral" => DivideMethod::Spectral,
            "auto" => DivideMethod::Auto,
            _ => bail!("unknown partition method `{s}`"),
        })
    }
}

fn adjacency_for(data: &Dataset, adjacency: Option<&Path>, seed: u64) -> Result<AdjacencyMatrix> {
    match adjacency {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_adjacency(&text).with_context(|| format!("parsing {}", path.display()))
        }
        None => Ok(covis_from_oracle(
            &data.scene()?,
            &data.poses(Split::Train)?,
            ORACLE_COVIS_SAMPLES,
            seed,
        )?),
    }
}

/// Partitions the training views of `data`.
pub fn divide_views(
    data: &Dataset,
    k: usize,
    method: DivideMethod,
    overlap_deg: f64,
    adjacency: Option<&Path>,
    seed: u64,
) -> Result<PartitionManifest> {
    let poses = data.poses(Split::Train)?;
    let community = CommunityConfig {
        seed,
        ..CommunityConfig::default()
    };
    let (set, policy): (PartitionSet, Option<String>) = match method {
        DivideMethod::Azimuth => (azimuth_partition(&poses, k, overlap_deg)?, None),
        DivideMethod::Percentile => (percentile_partition(&poses, k)?, None),
        DivideMethod::Louvain => (
            louvain(&adjacency_for(data, adjacency, seed)?, community)?,
            Some("single louvain run".into()),
        ),
        DivideMethod::Spectral => (spectral_cluster(&adjacency_for(data, adjacency, seed)?, k, seed)?, None),
        DivideMethod::Auto => {
            let adj = adjacency_for(data, adjacency, seed)?;
            let set = partition_realworld(&adj, &poses, k, community)?;
            let policy = format!(
                "resolution sweep {}..{} over {} steps accepting exactly k balanced communities (max/min <= {}), then spectral, then percentile",
                dac_core::divide::GAMMA_LADDER_MIN,
                dac_core::divide::GAMMA_LADDER_MAX,
                community.sweep_steps,
                community.balance
            );
            (set, Some(policy))
        }
    };
    Ok(PartitionManifest::from_set(&set, poses.len(), policy))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub loss: f64,
    /// Training-batch PSNR.
    pub psnr: f64,
}

pub fn train_curve(log: &TrainLog) -> Vec<CurvePoint> {
    log.entries
        .iter()
        .map(|e| CurvePoint {
            step: e.step,
            loss: e.loss,
            psnr: e.psnr,
        })
        .collect()
}

pub fn distill_curve(log: &DistillLog) -> Vec<CurvePoint> {
    log.entries
        .iter()
        .map(|e| CurvePoint {
            step: e.step,
            loss: e.loss,
            psnr: dac_core::metrics::psnr_from_mse(e.terms.color),
        })
        .collect()
}

/// Written next to every trained checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainManifest {
    pub stage: String,
    pub checkpoint: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub views: Vec<usize>,
    pub native_loss: String,
    pub curve: Vec<CurvePoint>,
    pub wall_clock_s: f64,
}

fn manifest_path(ckpt: &Path) -> PathBuf {
    let mut s = ckpt.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_train_manifest(
    ckpt: &Path,
    stage: &str,
    config: serde_json::Value,
    seed: u64,
    views: Vec<usize>,
    curve: Vec<CurvePoint>,
    secs: f64,
) -> Result<()> {
    let m = TrainManifest {
        stage: stage.into(),
        checkpoint: ckpt
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        config,
        seed,
        views,
        native_loss: ORIG_LOSS_NOTE.into(),
        curve,
        wall_clock_s: secs,
    };
    write_json(&manifest_path(ckpt), &m)
}

/// Experts trained by `train-experts`, on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryManifest {
    /// Dataset the experts were trained on.
    pub data: PathBuf,
    pub partitions: String,
    pub experts: Vec<String>,
    pub train: TrainSettings,
}

/// Seed of expert `l`, so experts do not share ray streams.
pub fn expert_seed(seed: u64, l: usize) -> u64 {
    seed.wrapping_add(l as u64)
}

/// Trains one expert per partition (in parallel) and writes the registry
/// under `out`. Each expert reads only the images of its own partition.
pub fn train_experts(
    data: &Dataset,
    partitions: &PartitionManifest,
    field: &FieldSettings,
    config: TrainConfig,
    out: &Path,
) -> Result<RegistryManifest> {
    let set = partitions.to_set()?;
    set.validate(data.len(Split::Train))?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let scene = data.scene()?;
    let radius = data.manifest().radius;
    let files: Vec<String> = (0..set.k()).map(|l| format!("expert_{l}.dacf")).collect();
    set.parts
        .par_iter()
        .enumerate()
        .try_for_each(|(l, part)| -> Result<()> {
            let views = data.load_views(Split::Train, part)?;
            let cfg = TrainConfig {
                seed: expert_seed(config.seed, l),
                ..config
            };
            let start = Instant::now();
            let (expert, log) = train_expert(field.init_field(&scene, radius)?, &views, cfg)
                .with_context(|| format!("training expert {l}"))?;
            let path = out.join(&files[l]);
            save_checkpoint(&path, &expert)?;
            let settings = serde_json::to_value(TrainSettings::from(cfg))?;
            write_train_manifest(
                &path,
                "expert",
                settings,
                cfg.seed,
                part.clone(),
                train_curve(&log),
                start.elapsed().as_secs_f64(),
            )
        })?;
    write_json(&out.join(PARTITIONS_FILE), partitions)?;
    let manifest = RegistryManifest {
        data: fs::canonicalize(data.root()).unwrap_or_else(|_| data.root().to_path_buf()),
        partitions: PARTITIONS_FILE.into(),
        experts: files,
        train: TrainSettings::from(config),
    };
    write_json(&out.join(REGISTRY_FILE), &manifest)?;
    Ok(manifest)
}

/// Loads the experts of a `train-experts` output directory with the
/// training cameras of their dataset (no images are read).
pub fn load_registry(dir: &Path) -> Result<(ExpertRegistry, RegistryManifest)> {
    let manifest: RegistryManifest = read_json(&dir.join(REGISTRY_FILE))?;
    let partitions: PartitionManifest = read_json(&dir.join(&manifest.partitions))?;
    let data = Dataset::open(&manifest.data)?;
    let experts = manifest
        .experts
        .iter()
        .map(|f| load_checkpoint(&dir.join(f)))
        .collect::<Result<Vec<_>>>()?;
    let registry = ExpertRegistry::new(experts, partitions.to_set()?, data.poses(Split::Train)?)?;
    Ok((registry, manifest))
}

/// Fresh student shaped like the first expert, or a copy of the expert with
/// the largest partition (lowest index on ties).
pub fn student_init(registry: &ExpertRegistry, warm_start: bool) -> Result<FieldModel> {
    if warm_start {
        let sizes = registry.partitions().sizes();
        let best = (0..sizes.len())
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        return Ok(registry.expert(best).clone());
    }
    let e = registry.expert(0);
    Ok(FieldModel::new(e.resolutions(), e.bounds(), e.sampling)?)
}

pub fn distill_to(
    registry: &ExpertRegistry,
    student: FieldModel,
    config: DistillConfig,
    out: &Path,
) -> Result<FieldModel> {
    let start = Instant::now();
    let (student, log) = distill(registry, student, config)?;
    save_checkpoint(out, &student)?;
    let settings = serde_json::json!({
        "distill_iterations": config.distill_iterations,
        "weights": { "color": config.weights.color, "alpha": config.weights.alpha, "hist": config.weights.hist },
        "fraction": config.fraction,
        "rays_per_batch": config.rays_per_batch,
        "lr0": config.lr0,
        "warmup": config.warmup,
        "tv": config.orig.tv,
        "prop": config.orig.prop,
    });
    write_train_manifest(
        out,
        "distill",
        settings,
        config.seed,
        Vec::new(),
        distill_curve(&log),
        start.elapsed().as_secs_f64(),
    )?;
    Ok(student)
}

pub fn finetune_to(student: FieldModel, data: &Dataset, config: DistillConfig, out: &Path) -> Result<FieldModel> {
    let views = data.load_split(Split::Train)?;
    let start = Instant::now();
    let (field, log) = finetune(student, &views, &config)?;
    save_checkpoint(out, &field)?;
    let settings = serde_json::to_value(TrainSettings::from(config.finetune_config()))?;
    write_train_manifest(
        out,
        "finetune",
        settings,
        config.seed,
        (0..views.len()).collect(),
        train_curve(&log),
        start.elapsed().as_secs_f64(),
    )?;
    Ok(field)
}

pub fn train_baseline_to(data: &Dataset, field: &FieldSettings, config: TrainConfig, out: &Path) -> Result<FieldModel> {
    let views = data.load_split(Split::Train)?;
    let start = Instant::now();
    let init = field.init_field(&data.scene()?, data.manifest().radius)?;
    let (trained, log) = dac_core::train::train_baseline(init, &views, config)?;
    save_checkpoint(out, &trained)?;
    let settings = serde_json::to_value(TrainSettings::from(config))?;
    write_train_manifest(
        out,
        "baseline",
        settings,
        config.seed,
        (0..views.len()).collect(),
        train_curve(&log),
        start.elapsed().as_secs_f64(),
    )?;
    Ok(trained)
}
