use std::fs;
use std::path::Path;

use dac::dataset::{gen_dataset, read_json, CamerasManifest, Dataset, GenOptions, Split, CAMERAS_FILE};
use dac::formats::{parse_adjacency, parse_sfm_points, PartitionManifest};
use dac::settings::FieldSettings;
use dac::stages::{train_experts, TrainManifest};
use dac_core::divide::{covis_from_sfm, PartitionMethod, PartitionSet};
use dac_core::scene::Scene;
use dac_core::train::TrainConfig;

fn tiny(out: &Path, res: u32) -> CamerasManifest {
    let opts = GenOptions {
        n_train: 4,
        n_test: 2,
        resolution: res,
        ..GenOptions::default()
    };
    gen_dataset(&Scene::twotone(), &opts, out).unwrap()
}

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for split in ["train", "test"] {
        for e in fs::read_dir(root.join(split)).unwrap() {
            let p = e.unwrap().path();
            out.push((
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            ));
        }
    }
    out.push((CAMERAS_FILE.into(), fs::read(root.join(CAMERAS_FILE)).unwrap()));
    out.sort();
    out
}

#[test]
fn generation_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m = tiny(a.path(), 8);
    tiny(b.path(), 8);
    assert_eq!(files(a.path()), files(b.path()));
    assert_eq!(m.split(Split::Train).count(), 4);
    assert_eq!(m.split(Split::Test).count(), 2);

    let data = Dataset::open(a.path()).unwrap();
    let views = data.load_split(Split::Train).unwrap();
    assert_eq!(views.len(), 4);
    assert!(views.iter().all(|v| v.image.width() == 8 && v.image.height() == 8));
    let manifest: CamerasManifest = read_json(&a.path().join(CAMERAS_FILE)).unwrap();
    assert_eq!(manifest, m);
}

#[test]
fn test_cameras_differ_from_training_cameras() {
    let dir = tempfile::tempdir().unwrap();
    tiny(dir.path(), 8);
    let data = Dataset::open(dir.path()).unwrap();
    let train = data.poses(Split::Train).unwrap();
    for t in data.poses(Split::Test).unwrap() {
        assert!(train.iter().all(|p| (p.center - t.center).norm() > 1e-6));
    }
}

#[test]
fn missing_view_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    tiny(dir.path(), 8);
    fs::remove_file(dir.path().join("train/002.png")).unwrap();
    let data = Dataset::open(dir.path()).unwrap();
    let err = data.load_split(Split::Train).unwrap_err();
    assert!(format!("{err:#}").contains("002.png"), "{err:#}");
    assert!(data.load_views(Split::Test, &[7]).is_err());
}

#[test]
fn experts_read_only_training_views() {
    let dir = tempfile::tempdir().unwrap();
    tiny(dir.path(), 8);
    let data = Dataset::open(dir.path()).unwrap();
    let set = PartitionSet::new(PartitionMethod::Percentile, vec![vec![0, 2], vec![1, 3]]);
    let manifest = PartitionManifest::from_set(&set, 4, None);
    let field = FieldSettings {
        proposal: 4,
        density: 8,
        color: 8,
        n_coarse: 8,
        n_fine: 8,
        ..FieldSettings::default()
    };
    let cfg = TrainConfig {
        iterations: 4,
        warmup: 1,
        rays_per_batch: 8,
        ..TrainConfig::default()
    };
    let out = dir.path().join("experts");
    let reg = train_experts(&data, &manifest, &field, cfg, &out).unwrap();
    assert_eq!(reg.experts.len(), 2);

    let opened = data.opened_files();
    assert_eq!(opened.len(), 4);
    assert!(opened.iter().all(|p| p.starts_with(dir.path().join("train"))));
    for (l, part) in set.parts.iter().enumerate() {
        let m: TrainManifest = read_json(&out.join(format!("expert_{l}.dacf.json"))).unwrap();
        assert_eq!(&m.views, part);
        assert_eq!(m.stage, "expert");
    }
}

#[test]
fn adjacency_and_sfm_files() {
    let adj = parse_adjacency("3\n0 4 1\n4 0 0\n1 0 0\n").unwrap();
    assert_eq!(adj.get(1, 0), 4);
    assert!(parse_adjacency("2\n0 1\n2 0\n").is_err());

    let pts = parse_sfm_points("0 0 0 3 0 1 2\n0.5 1 1 2 0 1\n").unwrap();
    let a = covis_from_sfm(&pts, 3).unwrap();
    assert_eq!((a.get(0, 1), a.get(0, 2), a.get(1, 2)), (2, 1, 1));
    let err = parse_sfm_points("0 0 0 1 0\n0 0 0 x 0\n").unwrap_err();
    assert!(err.to_string().contains("record 1"), "{err}");
}
