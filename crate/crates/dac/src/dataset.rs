//! Posed image datasets on disk: `cameras.json` plus `train/*.png` and
//! `test/*.png`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, ensure, Context, Result};
use dac_core::geometry::{
    fibonacci_hemisphere, fibonacci_hemisphere_rotated, fps_select_from, CameraPose, DistanceMetric,
};
use dac_core::rng::{seeded, streams};
use dac_core::scene::{oracle_render, Scene, GROUND_TRUTH_SAMPLES};
use dac_core::train::TrainView;
use dac_core::vec3::Vec3;
use dac_core::Image;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const CAMERAS_FILE: &str = "cameras.json";

/// Candidate lattice points per requested camera.
const CANDIDATES_PER_VIEW: usize = 4;
/// Horizontal field of view of generated cameras, in degrees.
pub const FIELD_OF_VIEW_DEG: f64 = 45.0;
pub const DEFAULT_RADIUS: f64 = 3.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn dir(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => bail!("unknown split `{s}` (expected train or test)"),
        }
    }
}

/// One posed image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub split: Split,
    /// Row-major camera-to-world matrix.
    pub matrix: [[f64; 4]; 4],
    pub focal: f64,
    pub width: u32,
    pub height: u32,
    /// Image path relative to the dataset root.
    pub file: String,
}

impl CameraRecord {
    pub fn pose(&self) -> Result<CameraPose> {
        Ok(CameraPose::from_matrix(
            &self.matrix,
            self.focal,
            self.width,
            self.height,
        )?)
    }

    pub fn from_pose(pose: &CameraPose, split: Split, file: String) -> CameraRecord {
        CameraRecord {
            split,
            matrix: pose.to_matrix(),
            focal: pose.focal,
            width: pose.width,
            height: pose.height,
            file,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamerasManifest {
    pub scene: String,
    pub seed: u64,
    pub radius: f64,
    pub frames: Vec<CameraRecord>,
}

impl CamerasManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &CameraRecord> {
        self.frames.iter().filter(move |f| f.split == split)
    }

    pub fn poses(&self, split: Split) -> Result<Vec<CameraPose>> {
        self.split(split).map(CameraRecord::pose).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions {
    pub n_train: usize,
    pub n_test: usize,
    pub radius: f64,
    pub resolution: u32,
    pub seed: u64,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            n_train: 180,
            n_test: 200,
            radius: DEFAULT_RADIUS,
            resolution: 64,
            seed: 0,
        }
    }
}

pub fn focal_for(resolution: u32) -> f64 {
    0.5 * resolution as f64 / (0.5 * FIELD_OF_VIEW_DEG.to_radians()).tan()
}

/// Camera rigs of a dataset. Training cameras are farthest-point samples of
/// a Fibonacci hemisphere lattice; test cameras come from a second lattice
/// rotated by a seeded phase, with their own seeded start, so they never
/// coincide with training cameras by construction.
pub fn camera_rigs(opts: &GenOptions) -> Result<(Vec<CameraPose>, Vec<CameraPose>)> {
    ensure!(opts.n_train >= 1, "at least one training view is required");
    ensure!(opts.radius > 0.0, "camera radius must be positive");
    ensure!(opts.resolution >= 1, "resolution must be at least 1");
    let focal = focal_for(opts.resolution);
    let pose = |c: Vec3| CameraPose::looking_at(c, Vec3::ZERO, Vec3::Z, focal, opts.resolution, opts.resolution);

    let train_cands = fibonacci_hemisphere(CANDIDATES_PER_VIEW * opts.n_train, opts.radius, Vec3::ZERO);
    let start = seeded(opts.seed, streams::FPS_TRAIN).gen_range(0..train_cands.len());
    let train = fps_select_from(&train_cands, opts.n_train, start, DistanceMetric::GreatCircle)?;

    let mut test = Vec::new();
    if opts.n_test > 0 {
        let phase = seeded(opts.seed, streams::TEST_LATTICE).gen_range(0.0..std::f64::consts::TAU);
        let cands = fibonacci_hemisphere_rotated(CANDIDATES_PER_VIEW * opts.n_test, opts.radius, Vec3::ZERO, phase);
        let start = seeded(opts.seed, streams::FPS_TEST).gen_range(0..cands.len());
        test = fps_select_from(&cands, opts.n_test, start, DistanceMetric::GreatCircle)?
            .into_iter()
            .map(|i| pose(cands[i]))
            .collect::<Result<_, _>>()?;
    }
    let train = train
        .into_iter()
        .map(|i| pose(train_cands[i]))
        .collect::<Result<_, _>>()?;
    Ok((train, test))
}

pub fn save_png(path: &Path, img: &Image) -> Result<()> {
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.to_rgb8())
        .context("image buffer size mismatch")?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .with_context(|| format!("writing {}", path.display()))
}

pub fn load_png(path: &Path) -> Result<Image> {
    let img = image::open(path)
        .with_context(|| format!("reading {}", path.display()))?
        .to_rgb8();
    Ok(Image::from_rgb8(
        img.width() as usize,
        img.height() as usize,
        img.as_raw(),
    )?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Renders a dataset with the oracle and writes it under `out`.
pub fn gen_dataset(scene: &Scene, opts: &GenOptions, out: &Path) -> Result<CamerasManifest> {
    let (train, test) = camera_rigs(opts)?;
    let mut frames = Vec::new();
    for (split, poses) in [(Split::Train, &train), (Split::Test, &test)] {
        let dir = out.join(split.dir());
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, pose) in poses.iter().enumerate() {
            frames.push(CameraRecord::from_pose(
                pose,
                split,
                format!("{}/{i:03}.png", split.dir()),
            ));
        }
    }
    frames.par_iter().try_for_each(|f| -> Result<()> {
        let img = oracle_render(scene, &f.pose()?, GROUND_TRUTH_SAMPLES)?;
        save_png(&out.join(&f.file), &img)
    })?;
    let manifest = CamerasManifest {
        scene: scene.name.clone(),
        seed: opts.seed,
        radius: opts.radius,
        frames,
    };
    write_json(&out.join(CAMERAS_FILE), &manifest)?;
    Ok(manifest)
}

/// Read access to a dataset directory. Every image file opened is recorded
/// so tests can audit which views a stage consumed.
#[derive(Debug)]
pub struct Dataset {
    root: PathBuf,
    manifest: CamerasManifest,
    opened: Mutex<Vec<PathBuf>>,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Dataset> {
        let manifest: CamerasManifest = read_json(&root.join(CAMERAS_FILE))?;
        Ok(Dataset {
            root: root.to_path_buf(),
            manifest,
            opened: Mutex::new(Vec::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &CamerasManifest {
        &self.manifest
    }

    pub fn scene(&self) -> Result<Scene> {
        Scene::by_name(&self.manifest.scene).with_context(|| format!("unknown scene `{}`", self.manifest.scene))
    }

    pub fn len(&self, split: Split) -> usize {
        self.manifest.split(split).count()
    }

    pub fn is_empty(&self, split: Split) -> bool {
        self.len(split) == 0
    }

    pub fn poses(&self, split: Split) -> Result<Vec<CameraPose>> {
        self.manifest.poses(split)
    }

    fn record(&self, split: Split, index: usize) -> Result<&CameraRecord> {
        self.manifest
            .split(split)
            .nth(index)
            .with_context(|| format!("{} view {index} does not exist", split.dir()))
    }

    pub fn image_path(&self, split: Split, index: usize) -> Result<PathBuf> {
        Ok(self.root.join(&self.record(split, index)?.file))
    }

    /// Loads the listed views of one split, in the given order.
    pub fn load_views(&self, split: Split, indices: &[usize]) -> Result<Vec<TrainView>> {
        indices
            .par_iter()
            .map(|&i| {
                let rec = self.record(split, i)?;
                let path = self.root.join(&rec.file);
                self.opened.lock().unwrap().push(path.clone());
                let image = load_png(&path)?;
                let pose = rec.pose()?;
                ensure!(
                    image.width() == pose.width as usize && image.height() == pose.height as usize,
                    "{} is {}x{} but its camera is {}x{}",
                    path.display(),
                    image.width(),
                    image.height(),
                    pose.width,
                    pose.height
                );
                Ok(TrainView { pose, image })
            })
            .collect()
    }

    pub fn load_split(&self, split: Split) -> Result<Vec<TrainView>> {
        self.load_views(split, &(0..self.len(split)).collect::<Vec<_>>())
    }

    /// Image files opened so far, sorted.
    pub fn opened_files(&self) -> Vec<PathBuf> {
        let mut v = self.opened.lock().unwrap().clone();
        v.sort();
        v.dedup();
        v
    }
}
