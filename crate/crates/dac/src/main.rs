use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dac_core::geometry::CameraPose;
use dac_core::scene::Scene;
use serde::Deserialize;

use dac::dataset::{gen_dataset, read_json, save_png, write_json, Dataset, GenOptions, Split};
use dac::eval::{evaluate, render_image};
use dac::formats::load_checkpoint;
use dac::pipeline::run_pipeline;
use dac::settings::{DistillSettings, FieldSettings, PipelineConfig, TrainSettings};
use dac::stages::{
    distill_to, divide_views, finetune_to, load_registry, student_init, train_baseline_to, train_experts, DivideMethod,
};

#[derive(Parser)]
#[command(name = "dac", version, about = "Divide-and-conquer radiance field training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct TrainFlags {
    #[arg(long, default_value_t = 5000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1024)]
    rays: usize,
    #[arg(long, default_value_t = 0.01)]
    lr0: f64,
    #[arg(long, default_value_t = 512)]
    warmup: usize,
}

impl TrainFlags {
    fn settings(&self) -> TrainSettings {
        TrainSettings {
            iterations: self.iters,
            seed: self.seed,
            rays_per_batch: self.rays,
            lr0: self.lr0,
            warmup: self.warmup,
            ..TrainSettings::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic dataset with the scene oracle.
    Gen {
        #[arg(long)]
        scene: String,
        #[arg(long, default_value_t = 180)]
        train: usize,
        #[arg(long, default_value_t = 200)]
        test: usize,
        #[arg(long, default_value_t = 64)]
        res: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = dac::dataset::DEFAULT_RADIUS)]
        radius: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition the training views.
    Divide {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value = "azimuth")]
        method: String,
        #[arg(long, default_value_t = 0.0)]
        overlap_deg: f64,
        #[arg(long)]
        adjacency: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one expert per partition.
    TrainExperts {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        partitions: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
        /// Grid and sampling settings (JSON).
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a single field on all training views.
    TrainBaseline {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distill a `train-experts` directory into one student.
    Distill {
        #[arg(long)]
        experts: PathBuf,
        #[arg(long, default_value_t = 5000)]
        iters: usize,
        /// Full distillation settings (JSON); flags given explicitly win.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        rays: Option<usize>,
        #[arg(long)]
        lr0: Option<f64>,
        #[arg(long)]
        warmup: Option<usize>,
        #[arg(long)]
        warm_start: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Photometric fine-tuning of a checkpoint on all training views.
    Finetune {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a checkpoint on a split; writes metrics JSON.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        /// Evaluate the first this-many views only.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render one view of a checkpoint to PNG.
    Render {
        #[arg(long)]
        ckpt: PathBuf,
        /// View index into `--data`, or a JSON pose file.
        #[arg(long)]
        pose: String,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full comparison run from a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Gen { .. } => "gen",
            Command::Divide { .. } => "divide",
            Command::TrainExperts { .. } => "train-experts",
            Command::TrainBaseline { .. } => "train-baseline",
            Command::Distill { .. } => "distill",
            Command::Finetune { .. } => "finetune",
            Command::Eval { .. } => "eval",
            Command::Render { .. } => "render",
            Command::Pipeline { .. } => "pipeline",
        }
    }
}

/// Camera given as a JSON file.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseFile {
    matrix: [[f64; 4]; 4],
    focal: f64,
    width: u32,
    height: u32,
}

fn field_settings(path: Option<&Path>) -> Result<FieldSettings> {
    path.map_or_else(|| Ok(FieldSettings::default()), read_json)
}

fn resolve_pose(pose: &str, data: Option<&Path>, split: Split) -> Result<CameraPose> {
    if let Ok(index) = pose.parse::<usize>() {
        let Some(data) = data else {
            bail!("a view index needs --data");
        };
        let poses = Dataset::open(data)?.poses(split)?;
        return poses
            .get(index)
            .cloned()
            .with_context(|| format!("{} view {index} does not exist", split.dir()));
    }
    let p: PoseFile = read_json(Path::new(pose))?;
    Ok(CameraPose::from_matrix(&p.matrix, p.focal, p.width, p.height)?)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen {
            scene,
            train,
            test,
            res,
            seed,
            radius,
            out,
        } => {
            let scene = Scene::by_name(&scene).with_context(|| format!("unknown scene `{scene}`"))?;
            let opts = GenOptions {
                n_train: train,
                n_test: test,
                radius,
                resolution: res,
                seed,
            };
            let m = gen_dataset(&scene, &opts, &out)?;
            println!("wrote {} views to {}", m.frames.len(), out.display());
        }
        Command::Divide {
            data,
            k,
            method,
            overlap_deg,
            adjacency,
            seed,
            out,
        } => {
            let method: DivideMethod = method.parse()?;
            let m = divide_views(
                &Dataset::open(&data)?,
                k,
                method,
                overlap_deg,
                adjacency.as_deref(),
                seed,
            )?;
            write_json(&out, &m)?;
            let sizes: Vec<usize> = m.parts.iter().map(Vec::len).collect();
            println!("{} partition into sizes {sizes:?}", m.method);
        }
        Command::TrainExperts {
            data,
            partitions,
            train,
            field,
            out,
        } => {
            let data = Dataset::open(&data)?;
            let m = train_experts(
                &data,
                &read_json(&partitions)?,
                &field_settings(field.as_deref())?,
                train.settings().config()?,
                &out,
            )?;
            println!("trained {} experts into {}", m.experts.len(), out.display());
        }
        Command::TrainBaseline {
            data,
            train,
            field,
            out,
        } => {
            let data = Dataset::open(&data)?;
            train_baseline_to(
                &data,
                &field_settings(field.as_deref())?,
                train.settings().config()?,
                &out,
            )?;
            println!("wrote {}", out.display());
        }
        Command::Distill {
            experts,
            iters,
            config,
            seed,
            fraction,
            rays,
            lr0,
            warmup,
            warm_start,
            out,
        } => {
            let mut s: DistillSettings = config
                .as_deref()
                .map_or_else(|| Ok(DistillSettings::default()), read_json)?;
            s.distill_iterations = iters;
            s.seed = seed.unwrap_or(s.seed);
            s.fraction = fraction.unwrap_or(s.fraction);
            s.rays_per_batch = rays.unwrap_or(s.rays_per_batch);
            s.lr0 = lr0.unwrap_or(s.lr0);
            s.warmup = warmup.unwrap_or(s.warmup);
            s.warm_start |= warm_start;
            let cfg = s.config()?;
            let (registry, _) = load_registry(&experts)?;
            let student = student_init(&registry, s.warm_start)?;
            distill_to(&registry, student, cfg, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Finetune { ckpt, data, train, out } => {
            let t = train.settings();
            let s = DistillSettings {
                finetune_iterations: t.iterations,
                seed: t.seed,
                rays_per_batch: t.rays_per_batch,
                lr0: t.lr0,
                warmup: t.warmup,
                ..DistillSettings::default()
            };
            finetune_to(load_checkpoint(&ckpt)?, &Dataset::open(&data)?, s.config()?, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Eval {
            ckpt,
            data,
            split,
            limit,
            out,
        } => {
            let data = Dataset::open(&data)?;
            let n = limit.unwrap_or(usize::MAX).min(data.len(split));
            let views = data.load_views(split, &(0..n).collect::<Vec<_>>())?;
            let m = evaluate(&load_checkpoint(&ckpt)?, &views)?;
            write_json(&out, &m)?;
            println!(
                "psnr {:.3} ssim {:.4} ms-ssim {:.4} over {n} views",
                m.psnr, m.ssim, m.ms_ssim
            );
        }
        Command::Render {
            ckpt,
            pose,
            data,
            split,
            out,
        } => {
            let pose = resolve_pose(&pose, data.as_deref(), split)?;
            save_png(&out, &render_image(&load_checkpoint(&ckpt)?, &pose))?;
            println!("wrote {}", out.display());
        }
        Command::Pipeline { config } => {
            let cfg: PipelineConfig = read_json(&config)?;
            let report = run_pipeline(&cfg).map_err(|e| {
                let stage = e.stage.clone();
                anyhow::Error::new(e).context(format!("pipeline stage {stage}"))
            })?;
            for arm in &report.arms {
                println!("{:<12} psnr {:.3}", arm.name, arm.final_metrics.psnr);
            }
            println!("delta vs baseline@2B {:+.3} dB", report.delta_psnr_vs_2b);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = cli.command.stage();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{stage}]: {e:#}");
            ExitCode::FAILURE
        }
    }
}
