//! Full comparison run: divide, experts, distill and fine-tune, against a
//! baseline at the per-expert budget and one at twice it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use dac_core::checkpoint;
use dac_core::conquer::Distiller;
use dac_core::field::FieldModel;
use dac_core::train::{PhotometricTrainer, TrainView};
use serde::{Deserialize, Serialize};

use crate::dataset::{write_json, Dataset, Split, CAMERAS_FILE};
use crate::eval::{evaluate, Metrics};
use crate::formats::{hex_digest, save_checkpoint, sha256_file};
use crate::settings::PipelineConfig;
use crate::stages::{
    divide_views, expert_seed, load_registry, student_init, train_experts, DivideMethod, PARTITIONS_FILE,
};

pub const REPORT_FILE: &str = "report.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRIC_NOTE: &str = "metrics are means over test images; psnr is capped at 99 dB for identical images";

/// A pipeline stage failed; `completed` lists the stages that finished.
#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}` failed after completing [{}]: {source:#}", completed.join(", "))]
pub struct StageError {
    pub stage: String,
    pub completed: Vec<String>,
    pub source: anyhow::Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub step: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub ms_ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub name: String,
    pub checkpoint: String,
    /// Steps are iterations of the arm's final model; for the DaC arm they
    /// count distillation then fine-tuning.
    pub curve: Vec<EvalPoint>,
    pub final_metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run_id: String,
    pub metric_note: String,
    pub stages: Vec<String>,
    pub config: PipelineConfig,
    pub partitions: String,
    pub arms: Vec<Arm>,
    /// Final test PSNR of DaC minus that of baseline@2B.
    pub delta_psnr_vs_2b: f64,
}

impl Report {
    pub fn arm(&self, name: &str) -> Option<&Arm> {
        self.arms.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub seed: u64,
    pub expert_seeds: Vec<u64>,
    pub crate_version: String,
    pub checkpoint_version: u32,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub stages: Vec<StageTiming>,
}

/// Iterations at which curves spanning `[budget, 2 budget]` are evaluated.
pub fn eval_steps(budget: usize, points: usize) -> Vec<usize> {
    if points <= 1 {
        return vec![2 * budget];
    }
    (0..points).map(|j| budget + j * budget / (points - 1)).collect()
}

/// Evaluates what a saved-and-reloaded checkpoint of `field` would score.
fn eval_stored(field: &FieldModel, views: &[TrainView]) -> Result<Metrics> {
    let mut f = field.clone();
    checkpoint::quantize(&mut f);
    evaluate(&f, views)
}

fn point(step: usize, m: &Metrics) -> EvalPoint {
    EvalPoint {
        step,
        psnr: m.psnr,
        ssim: m.ssim,
        ms_ssim: m.ms_ssim,
    }
}

/// Config as recorded in the report: the output directory is left out so
/// reruns elsewhere produce identical reports.
fn config_snapshot(config: &PipelineConfig) -> PipelineConfig {
    PipelineConfig {
        out: PathBuf::new(),
        ..config.clone()
    }
}

fn run_id(config: &PipelineConfig, cameras_sha: &str) -> Result<String> {
    let mut bytes = serde_json::to_vec(&config_snapshot(config))?;
    bytes.extend_from_slice(cameras_sha.as_bytes());
    Ok(hex_digest(&bytes)[..16].to_string())
}

fn rel(out: &Path, p: &Path) -> String {
    p.strip_prefix(out).unwrap_or(p).to_string_lossy().into_owned()
}

pub fn curves_csv(report: &Report) -> String {
    let mut s = String::from("arm,step,psnr,ssim,ms_ssim\n");
    for arm in &report.arms {
        for p in &arm.curve {
            let _ = writeln!(
                s,
                "{},{},{:.6},{:.6},{:.6}",
                arm.name, p.step, p.psnr, p.ssim, p.ms_ssim
            );
        }
    }
    s
}

struct Tracker {
    completed: Vec<String>,
    timings: Vec<StageTiming>,
}

impl Tracker {
    fn run<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T, StageError> {
        let start = Instant::now();
        match f() {
            Ok(v) => {
                self.completed.push(stage.to_string());
                self.timings.push(StageTiming {
                    stage: stage.to_string(),
                    wall_clock_s: start.elapsed().as_secs_f64(),
                });
                Ok(v)
            }
            Err(source) => Err(StageError {
                stage: stage.to_string(),
                completed: self.completed.clone(),
                source,
            }),
        }
    }
}

/// Trains `init` for `iterations` and evaluates it at each of `steps`
/// (those within the run).
fn train_with_curve(
    init: FieldModel,
    train: &[TrainView],
    test: &[TrainView],
    config: &PipelineConfig,
    iterations: usize,
    steps: &[usize],
    offset: usize,
) -> Result<(FieldModel, Vec<EvalPoint>)> {
    let mut trainer = PhotometricTrainer::new(init, train, config.train_config(iterations, config.seed))?;
    let mut curve = Vec::new();
    for &s in steps.iter().filter(|&&s| s >= offset && s - offset <= iterations) {
        trainer.run_until(s - offset)?;
        curve.push(point(s, &eval_stored(trainer.field(), test)?));
    }
    let (field, _) = trainer.finish()?;
    Ok((field, curve))
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<Report, StageError> {
    let mut t = Tracker {
        completed: Vec::new(),
        timings: Vec::new(),
    };
    let out = config.out.clone();
    let b = config.budget;
    let steps = eval_steps(b, config.eval_points);

    let (data, train, test, cameras_sha) = t.run("load", || {
        config.validate()?;
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        let data = Dataset::open(&config.data)?;
        let train = data.load_split(Split::Train)?;
        let n_test = config.test_limit.unwrap_or(usize::MAX).min(data.len(Split::Test));
        let test = data.load_views(Split::Test, &(0..n_test).collect::<Vec<_>>())?;
        let sha = sha256_file(&config.data.join(CAMERAS_FILE))?;
        Ok((data, train, test, sha))
    })?;
    let id = run_id(config, &cameras_sha).map_err(|source| StageError {
        stage: "load".into(),
        completed: t.completed.clone(),
        source,
    })?;

    let partitions = t.run("divide", || {
        let method: DivideMethod = config.method.parse()?;
        let m = divide_views(
            &data,
            config.k,
            method,
            config.overlap_deg,
            config.adjacency.as_deref(),
            config.seed,
        )?;
        write_json(&out.join(PARTITIONS_FILE), &m)?;
        Ok(m)
    })?;

    let experts_dir = out.join("experts");
    t.run("train-experts", || {
        train_experts(
            &data,
            &partitions,
            &config.field,
            config.train_config(b, config.seed),
            &experts_dir,
        )
    })?;

    let dcfg = config.distill_config();
    let student = t.run("distill", || {
        let (registry, _) = load_registry(&experts_dir)?;
        let init = student_init(&registry, config.warm_start)?;
        let mut d = Distiller::new(&registry, init, dcfg)?;
        d.run_until(b)?;
        let (mut student, _) = d.finish()?;
        // fine-tune from what the checkpoint holds
        checkpoint::quantize(&mut student);
        save_checkpoint(&out.join("distilled.dacf"), &student)?;
        Ok(student)
    })?;

    let dac = t.run("finetune", || {
        let mut curve = vec![point(b, &eval_stored(&student, &test)?)];
        let mut ft = PhotometricTrainer::new(student.clone(), &train, dcfg.finetune_config())?;
        for &s in steps.iter().filter(|&&s| s > b) {
            ft.run_until(s - b)?;
            curve.push(point(s, &eval_stored(ft.field(), &test)?));
        }
        let (field, _) = ft.finish()?;
        let path = out.join("dac.dacf");
        save_checkpoint(&path, &field)?;
        Ok(Arm {
            name: "dac".into(),
            checkpoint: rel(&out, &path),
            final_metrics: eval_stored(&field, &test)?,
            curve,
        })
    })?;

    let scene_init = || config.field.init_field(&data.scene()?, data.manifest().radius);
    let base_b = t.run("baseline@B", || {
        let (field, curve) = train_with_curve(scene_init()?, &train, &test, config, b, &[b], 0)?;
        let path = out.join("baseline_b.dacf");
        save_checkpoint(&path, &field)?;
        Ok(Arm {
            name: "baseline@B".into(),
            checkpoint: rel(&out, &path),
            final_metrics: eval_stored(&field, &test)?,
            curve,
        })
    })?;
    let base_2b = t.run("baseline@2B", || {
        let (field, curve) = train_with_curve(scene_init()?, &train, &test, config, 2 * b, &steps, 0)?;
        let path = out.join("baseline_2b.dacf");
        save_checkpoint(&path, &field)?;
        Ok(Arm {
            name: "baseline@2B".into(),
            checkpoint: rel(&out, &path),
            final_metrics: eval_stored(&field, &test)?,
            curve,
        })
    })?;

    let report = Report {
        run_id: id.clone(),
        metric_note: METRIC_NOTE.into(),
        stages: t.completed.clone(),
        config: config_snapshot(config),
        partitions: PARTITIONS_FILE.into(),
        delta_psnr_vs_2b: dac.final_metrics.psnr - base_2b.final_metrics.psnr,
        arms: vec![dac, base_b, base_2b],
    };
    let timings = t.timings.clone();
    t.run("report", || {
        write_json(&out.join(REPORT_FILE), &report)?;
        fs::write(out.join(CURVES_FILE), curves_csv(&report))?;
        let mut inputs = vec![FileHash {
            path: config.data.join(CAMERAS_FILE).to_string_lossy().into_owned(),
            sha256: cameras_sha.clone(),
        }];
        if let Some(adj) = &config.adjacency {
            inputs.push(FileHash {
                path: adj.to_string_lossy().into_owned(),
                sha256: sha256_file(adj)?,
            });
        }
        let mut outputs = Vec::new();
        let mut files: Vec<PathBuf> = vec![out.join(PARTITIONS_FILE), out.join("distilled.dacf")];
        for e in fs::read_dir(&experts_dir)? {
            files.push(e?.path());
        }
        files.sort();
        for arm in &report.arms {
            files.push(out.join(&arm.checkpoint));
        }
        files.push(out.join(REPORT_FILE));
        files.push(out.join(CURVES_FILE));
        for f in files {
            outputs.push(FileHash {
                path: rel(&out, &f),
                sha256: sha256_file(&f)?,
            });
        }
        let manifest = RunManifest {
            run_id: id.clone(),
            seed: config.seed,
            expert_seeds: (0..config.k).map(|l| expert_seed(config.seed, l)).collect(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            checkpoint_version: checkpoint::VERSION,
            inputs,
            outputs,
            stages: timings,
        };
        write_json(&out.join(MANIFEST_FILE), &manifest)
    })?;
    Ok(report)
}
