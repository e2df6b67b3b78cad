//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. `ACCEPTANCE_ONLY=1,2,9` runs a subset.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dac::dataset::{camera_rigs, gen_dataset, Dataset, GenOptions, Split};
use dac::eval::render_image;
use dac::pipeline::{run_pipeline, Report, REPORT_FILE};
use dac::settings::{FieldSettings, PipelineConfig};
use dac_core::conquer::{distill, distill_hist, distill_points, DistillConfig, ExpertRegistry};
use dac_core::divide::{
    azimuth_partition, louvain, percentile_partition, spectral_cluster, AdjacencyMatrix, CommunityConfig,
    PartitionMethod, PartitionSet,
};
use dac_core::field::{
    proposal_sample, render_ray, FieldModel, Gradients, RenderOutput, Resolutions, SamplingConfig, Tape,
};
use dac_core::geometry::{CameraPose, Ray};
use dac_core::histogram::{bound, hist_loss, SampleHistogram};
use dac_core::metrics::{ms_ssim, psnr, psnr_from_mse, ssim};
use dac_core::rng::seeded;
use dac_core::scene::{oracle_ray_color, Primitive, Scene, Shape, GROUND_TRUTH_SAMPLES};
use dac_core::train::{lr_at, photometric_ray, train_expert, TrainConfig};
use dac_core::vec3::{Aabb, Vec3};
use dac_core::Image;
use rand::Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn ring_pose(azimuth: f64) -> CameraPose {
    let c = Vec3::new(3.0 * azimuth.cos(), 3.0 * azimuth.sin(), 1.0);
    CameraPose::looking_at(c, Vec3::ZERO, Vec3::Z, 10.0, 8, 8).unwrap()
}

// ---------------------------------------------------------------- 1

fn partitions() -> Check {
    use std::f64::consts::{PI, TAU};
    let poses: Vec<CameraPose> = (0..8).map(|i| ring_pose(i as f64 * PI / 4.0)).collect();
    let set = ok(azimuth_partition(&poses, 4, 0.0))?;
    // membership by direct evaluation of the sector inequality
    for (l, part) in set.parts.iter().enumerate() {
        let expect: Vec<usize> = (0..8)
            .filter(|&k| {
                let phi = k as f64 * PI / 4.0;
                TAU * l as f64 / 4.0 <= phi && phi < TAU * (l + 1) as f64 / 4.0
            })
            .collect();
        ensure!(*part == expect, "partition {l} is {part:?}, expected {expect:?}");
    }
    ensure!(
        set.parts.iter().filter(|p| p.contains(&0)).count() == 1,
        "view at azimuth 0 is not in exactly one sector"
    );

    let mut rng = seeded(2024, 1);
    for case in 0..100 {
        let n = rng.gen_range(2..200);
        let k = rng.gen_range(2..=n.min(16));
        let poses: Vec<CameraPose> = (0..n).map(|_| ring_pose(rng.gen_range(0.0..TAU))).collect();
        let sizes = ok(percentile_partition(&poses, k))?.sizes();
        let (max, min) = (*sizes.iter().max().unwrap(), *sizes.iter().min().unwrap());
        ensure!(
            sizes.iter().sum::<usize>() == n && max - min <= 1,
            "case {case} (N={n}, K={k}): sizes {sizes:?}"
        );
    }

    let (train, _) = ok(camera_rigs(&GenOptions {
        n_test: 0,
        ..GenOptions::default()
    }))?;
    let sizes = ok(azimuth_partition(&train, 4, 0.0))?.sizes();
    ensure!(
        train.len() == 180 && sizes.iter().all(|s| (40..=50).contains(s)),
        "FPS rig sizes {sizes:?}"
    );
    Ok(format!(
        "8-view fixture exact, 100 percentile cases balanced, FPS rig sizes {sizes:?}"
    ))
}

// ---------------------------------------------------------------- 2

fn random_hist(rng: &mut impl Rng) -> SampleHistogram {
    let n = rng.gen_range(1..24);
    let mut edges = vec![rng.gen_range(-2.0..2.0)];
    for _ in 0..n {
        let w = rng.gen_range(1e-3..1.0);
        edges.push(edges.last().unwrap() + w);
    }
    let alpha = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
    SampleHistogram::new(edges, alpha).unwrap()
}

fn histograms() -> Check {
    let mut rng = seeded(77, 2);
    for i in 0..1000 {
        let h = random_hist(&mut rng);
        let l = hist_loss(&h, &h);
        ensure!(l == 0.0, "histogram {i}: self loss {l:e}");
    }
    for i in 0..1000 {
        let h = random_hist(&mut rng);
        let e = h.edges();
        let (lo, hi) = (e[0] - 0.5, e[e.len() - 1] + 0.5);
        let a = rng.gen_range(lo..hi);
        let b = rng.gen_range(a..hi);
        let (a2, b2) = (rng.gen_range(lo - 1.0..=a), rng.gen_range(b..=hi + 1.0));
        let (inner, outer) = (bound(&h, a, b), bound(&h, a2, b2));
        ensure!(
            inner <= outer,
            "case {i}: bound over [{a}, {b}] is {inner} > {outer} over [{a2}, {b2}]"
        );
    }
    let h = |e: &[f64], a: &[f64]| SampleHistogram::new(e.to_vec(), a.to_vec()).unwrap();
    let eps = 1e-7;
    let cases = [
        (
            "bound over [0.5, 1.5]",
            bound(&h(&[0.0, 1.0, 2.0, 3.0], &[0.1, 0.2, 0.3]), 0.5, 1.5),
            0.1 + 0.2,
        ),
        (
            "saturated bound",
            hist_loss(&h(&[0.0, 2.0], &[0.5]), &h(&[0.0, 1.0], &[0.5])),
            0.0,
        ),
        (
            "single-bin shortfall",
            hist_loss(&h(&[0.0, 1.0], &[0.1]), &h(&[0.0, 1.0], &[0.4])),
            (0.4 - 0.1) / (0.4 + eps),
        ),
    ];
    for (name, got, want) in cases {
        ensure!((got - want).abs() < 1e-9, "{name}: {got} vs {want}");
    }
    Ok("1000 self-identities, 1000 enlargements, 3 closed forms".into())
}

// ---------------------------------------------------------------- 3

fn grad_field(seed: u64) -> FieldModel {
    let res = Resolutions {
        proposal: 16,
        density: 16,
        color: 16,
    };
    let mut f = FieldModel::new(res, Aabb::cube(1.0), SamplingConfig::for_rig(3.0, 1.8, [1.0; 3])).unwrap();
    let mut rng = seeded(seed, 3);
    for p in f.proposal.params_mut() {
        *p = rng.gen_range(-1.0..3.0);
    }
    for p in f.density.params_mut() {
        *p = rng.gen_range(-1.0..3.0);
    }
    for p in f.color.params_mut() {
        *p = rng.gen_range(-2.0..2.0);
    }
    f
}

fn grad_rays() -> Vec<(Ray, [f64; 3])> {
    let mut rng = seeded(9, 3);
    (0..16)
        .map(|_| {
            let o = Vec3::new(3.0, rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            let d = Vec3::new(-1.0, rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
            (Ray::new(o, d), [rng.gen(), rng.gen(), rng.gen()])
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Param {
    Proposal(usize),
    Density(usize),
    Color(usize, usize),
}

fn param_mut(f: &mut FieldModel, p: Param) -> &mut f64 {
    match p {
        Param::Proposal(v) => &mut f.proposal.params_mut()[v],
        Param::Density(v) => &mut f.density.params_mut()[v],
        Param::Color(v, c) => &mut f.color.params_mut()[3 * v + c],
    }
}

fn analytic(g: &Gradients, p: Param) -> f64 {
    match p {
        Param::Proposal(v) => g.proposal.get(v)[0],
        Param::Density(v) => g.density.get(v)[0],
        Param::Color(v, c) => g.color.get(v)[c],
    }
}

/// Picks 100 distinct parameters among the touched vertices of `kinds`.
fn pick_params(g: &Gradients, kinds: &[u8], seed: u64) -> Vec<Param> {
    let mut pool = Vec::new();
    for &k in kinds {
        match k {
            b'p' => pool.extend(g.proposal.touched().iter().map(|&v| Param::Proposal(v as usize))),
            b'd' => pool.extend(g.density.touched().iter().map(|&v| Param::Density(v as usize))),
            _ => pool.extend(
                g.color
                    .touched()
                    .iter()
                    .flat_map(|&v| (0..3).map(move |c| Param::Color(v as usize, c))),
            ),
        }
    }
    let mut rng = seeded(seed, 3);
    let mut picked = Vec::new();
    while picked.len() < 100.min(pool.len()) {
        let p = pool.swap_remove(rng.gen_range(0..pool.len()));
        picked.push(p);
    }
    picked
}

struct FdResult {
    worst: f64,
    checked: usize,
    skipped: usize,
}

/// Central differences against the analytic gradient. With `skip_kinks`,
/// parameters whose one-sided slopes disagree (the step crosses a kink of a
/// piecewise-linear loss) are replaced by fresh ones.
fn fd_check(
    field: &FieldModel,
    loss: &dyn Fn(&FieldModel, &mut Tape) -> f64,
    kinds: &[u8],
    skip_kinks: bool,
) -> FdResult {
    let eps = 1e-4;
    let mut tape = Tape::new();
    let mut grads = Gradients::for_field(field);
    let base = loss(field, &mut tape);
    tape.backward(&mut grads).unwrap();
    let candidates = pick_params(&grads, kinds, 5);
    let mut extra = pick_params(&grads, kinds, 6)
        .into_iter()
        .filter(|p| !candidates.contains(p));
    let mut queue: Vec<Param> = candidates.clone();
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    while let Some(p) = queue.pop() {
        let mut f = field.clone();
        *param_mut(&mut f, p) += eps;
        let up = loss(&f, &mut Tape::disabled());
        *param_mut(&mut f, p) -= 2.0 * eps;
        let down = loss(&f, &mut Tape::disabled());
        if skip_kinks {
            let (right, left) = ((up - base) / eps, (base - down) / eps);
            if (right - left).abs() > 1e-6 * (1.0 + right.abs()) {
                skipped += 1;
                queue.extend(extra.next());
                continue;
            }
        }
        let fd = (up - down) / (2.0 * eps);
        let an = analytic(&grads, p);
        worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6));
        checked += 1;
    }
    FdResult {
        worst,
        checked,
        skipped,
    }
}

fn gradients() -> Check {
    let student = grad_field(1);
    let teacher = grad_field(2);
    let bg = student.sampling.background;
    let rays = grad_rays();
    let t_out: Vec<RenderOutput> = rays
        .iter()
        .map(|(r, _)| render_ray(&teacher, r, &mut seeded(0, 0), false, &mut Tape::disabled()))
        .collect();
    let photometric = |f: &FieldModel, tape: &mut Tape| {
        rays.iter()
            .map(|(r, target)| {
                let out = render_ray(f, r, &mut seeded(0, 0), false, tape);
                photometric_ray(&out, bg, *target, 1.0, tape)
            })
            .sum::<f64>()
    };
    let d_alpha = |f: &FieldModel, tape: &mut Tape| {
        t_out
            .iter()
            .map(|t| distill_points(f, t, 1.0, 0.0, tape).0)
            .sum::<f64>()
    };
    let d_color = |f: &FieldModel, tape: &mut Tape| {
        t_out
            .iter()
            .map(|t| distill_points(f, t, 0.0, 1.0, tape).1)
            .sum::<f64>()
    };
    let d_hist = |f: &FieldModel, tape: &mut Tape| {
        rays.iter()
            .zip(&t_out)
            .map(|((r, _), t)| {
                let pass = proposal_sample(f, r, &mut seeded(0, 0), false, tape);
                distill_hist(&pass, t, 1.0, tape)
            })
            .sum::<f64>()
    };
    let runs = [
        ("photometric", fd_check(&student, &photometric, b"dc", false)),
        ("d-alpha", fd_check(&student, &d_alpha, b"d", false)),
        ("d-c", fd_check(&student, &d_color, b"c", false)),
        ("d-P", fd_check(&student, &d_hist, b"p", true)),
    ];
    let mut detail = Vec::new();
    for (name, r) in &runs {
        ensure!(
            r.checked == 100,
            "{name}: only {} parameters checked ({} skipped at kinks)",
            r.checked,
            r.skipped
        );
        ensure!(r.worst < 1e-3, "{name}: worst relative error {:.2e}", r.worst);
        detail.push(format!("{name} {:.1e}", r.worst));
    }
    let skipped = runs[3].1.skipped;
    Ok(format!(
        "worst relative errors: {}; d-P kink-crossing params replaced: {skipped}",
        detail.join(", ")
    ))
}

// ---------------------------------------------------------------- 4

fn conservation() -> Check {
    let mut rng = seeded(4, 4);
    let mut worst_sum = 0.0f64;
    let mut rays = 0;
    for field_index in 0..100 {
        let res = Resolutions {
            proposal: 8,
            density: 16,
            color: 8,
        };
        let mut f = ok(FieldModel::new(
            res,
            Aabb::cube(1.0),
            SamplingConfig::for_rig(3.0, 1.8, [0.0; 3]),
        ))?;
        let scale = rng.gen_range(0.0..12.0);
        for p in f.proposal.params_mut().iter_mut().chain(f.density.params_mut()) {
            *p = rng.gen_range(-6.0..scale);
        }
        for _ in 0..1000 {
            let o = random_unit(&mut rng) * 3.0;
            let target = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let out = render_ray(&f, &Ray::new(o, target - o), &mut rng, true, &mut Tape::disabled());
            let sum: f64 = out.weights.iter().sum();
            ensure!(
                out.weights.iter().all(|&w| w >= 0.0) && (0.0..=1.0).contains(&sum),
                "field {field_index}: weight sum {sum}"
            );
            worst_sum = worst_sum.max(sum);
            rays += 1;
        }
    }
    let (sigma, thick) = (3.7, 0.63);
    let slab = Primitive::new(
        Shape::Box {
            min: Vec3::new(-0.4, -1.0, -1.0),
            max: Vec3::new(-0.4 + thick, 1.0, 1.0),
        },
        sigma,
        [0.5; 3],
    );
    let scene = ok(Scene::new("slab", vec![slab], [0.0; 3], Aabb::cube(1.0)))?;
    let t = oracle_ray_color(
        &scene,
        &Ray::new(Vec3::new(-3.0, 0.1, 0.05), Vec3::X),
        GROUND_TRUTH_SAMPLES,
    )
    .transmittance;
    let err = (t - (-sigma * thick).exp()).abs();
    ensure!(err < 1e-3, "slab transmittance {t} off by {err:e}");
    Ok(format!(
        "{rays} rays, max weight sum {worst_sum:.6}; slab error {err:.1e}"
    ))
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}

// ---------------------------------------------------------------- 5

fn oracle_modularity(adj: &AdjacencyMatrix, labels: &[usize]) -> f64 {
    let n = adj.len();
    let k: Vec<f64> = (0..n).map(|i| (0..n).map(|j| adj.get(i, j) as f64).sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += adj.get(i, j) as f64 - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

fn set_partitions(n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == n {
        out.push(prefix.clone());
        return;
    }
    let next = prefix.iter().max().map_or(0, |m| m + 1);
    for l in 0..=next {
        prefix.push(l);
        set_partitions(n, prefix, out);
        prefix.pop();
    }
}

fn graph(n: usize, edges: impl IntoIterator<Item = (usize, usize, u64)>) -> AdjacencyMatrix {
    let mut w = vec![0u64; n * n];
    for (i, j, x) in edges {
        w[i * n + j] = x;
        w[j * n + i] = x;
    }
    AdjacencyMatrix::new(n, w).unwrap()
}

fn labels_of(set: &PartitionSet, n: usize) -> Vec<usize> {
    let mut labels = vec![usize::MAX; n];
    for (l, part) in set.parts.iter().enumerate() {
        for &v in part {
            labels[v] = l;
        }
    }
    labels
}

fn clustering() -> Check {
    let mut all = Vec::new();
    set_partitions(8, &mut Vec::new(), &mut all);
    ensure!(all.len() == 4140, "enumerated {} partitions of 8 nodes", all.len());
    let mut rng = seeded(55, 5);
    let mut worst = f64::INFINITY;
    for g in 0..50 {
        let mut edges = Vec::new();
        for i in 0..8 {
            for j in i + 1..8 {
                if rng.gen_bool(0.5) {
                    edges.push((i, j, rng.gen_range(1..10)));
                }
            }
        }
        if edges.is_empty() {
            edges.push((0, 1, 1));
        }
        let adj = graph(8, edges);
        let best = all
            .iter()
            .map(|l| oracle_modularity(&adj, l))
            .fold(f64::NEG_INFINITY, f64::max);
        let set = ok(louvain(
            &adj,
            CommunityConfig {
                seed: g,
                ..CommunityConfig::default()
            },
        ))?;
        let q = oracle_modularity(&adj, &labels_of(&set, 8));
        ensure!(
            q >= 0.95 * best - 1e-12,
            "graph {g}: louvain {q:.4} vs optimum {best:.4}"
        );
        if best > 0.0 {
            worst = worst.min(q / best);
        }
    }

    let mut edges = Vec::new();
    for base in [0, 4] {
        for i in 0..4 {
            for j in i + 1..4 {
                edges.push((base + i, base + j, 1));
            }
        }
    }
    edges.push((3, 4, 1));
    let cliques = ok(louvain(&graph(8, edges), CommunityConfig::default()))?;
    ensure!(
        cliques.parts == vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]],
        "joined cliques split as {:?}",
        cliques.parts
    );

    let blocks = graph(
        16,
        (0..16).flat_map(|i| (i + 1..16).map(move |j| (i, j, if i / 8 == j / 8 { 10 } else { 1 }))),
    );
    let set = ok(spectral_cluster(&blocks, 2, 0))?;
    let labels = labels_of(&set, 16);
    ensure!(
        (0..16).all(|i| (labels[i] == labels[0]) == (i < 8)),
        "planted blocks recovered as {:?}",
        set.parts
    );
    Ok(format!(
        "worst louvain/optimum ratio {worst:.4} over 50 graphs; cliques and planted blocks exact"
    ))
}

// ---------------------------------------------------------------- 9

fn noisy(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = seeded(seed, 9);
    let data = (0..w * h * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
    Image::from_raw(w, h, data).unwrap()
}

fn metric_fixtures() -> Check {
    ensure!(
        psnr_from_mse(0.01) == 20.0,
        "psnr at mse 0.01 is {}",
        psnr_from_mse(0.01)
    );
    let a = noisy(32, 24, 1);
    let s = ok(ssim(&a, &a))?;
    ensure!(s == 1.0, "ssim of identical images is {s}");
    let c1 = 0.01f64 * 0.01;
    let s = ok(ssim(&Image::filled(16, 16, [0.0; 3]), &Image::filled(16, 16, [1.0; 3])))?;
    ensure!((s - c1 / (1.0 + c1)).abs() < 1e-9, "ssim of constants 0 and 1 is {s}");
    for (i, (w, h)) in [(12, 15), (11, 11), (21, 30)].into_iter().enumerate() {
        let x = noisy(w, h, 10 + i as u64);
        let n = noisy(w, h, 20 + i as u64);
        let blend = |t: f64| {
            let data = x
                .data()
                .iter()
                .zip(n.data())
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect();
            Image::from_raw(w, h, data).unwrap()
        };
        let y = blend(0.3);
        let (m, s) = (ok(ms_ssim(&x, &y))?, ok(ssim(&x, &y))?);
        ensure!(s > 0.0 && (m - s).abs() < 1e-12, "{w}x{h}: ms-ssim {m} vs ssim {s}");
        // uncorrelated pair: per-channel ssim may be negative and ms-ssim clamps it
        let gray = |img: &Image, c: usize| {
            let data = img.data().chunks(3).flat_map(|p| [p[c]; 3]).collect();
            Image::from_raw(w, h, data).unwrap()
        };
        let mut clamped = 0.0;
        for c in 0..3 {
            clamped += ok(ssim(&gray(&x, c), &gray(&n, c)))?.max(0.0) / 3.0;
        }
        let m = ok(ms_ssim(&x, &n))?;
        ensure!(
            (m - clamped).abs() < 1e-12,
            "{w}x{h} uncorrelated: ms-ssim {m} vs clamped {clamped}"
        );
    }
    let gray = Image::filled(16, 16, [0.5; 3]);
    let p = ok(psnr(&gray, &Image::filled(16, 16, [0.6; 3])))?;
    ensure!((p - 20.0).abs() < 1e-9, "psnr of images 0.1 apart is {p}");
    Ok("psnr, ssim and single-scale ms-ssim fixtures".into())
}

// ---------------------------------------------------------------- 10

fn schedule() -> Check {
    let cfg = TrainConfig::default();
    let lr = |s| lr_at(s, &cfg).map_err(|e| e.to_string());
    ensure!(lr(511)? == 0.01, "lr at 511 is {}", lr(511)?);
    let mid = cfg.warmup + (cfg.iterations - cfg.warmup) / 2;
    ensure!((lr(mid)? - 0.005).abs() < 1e-12, "cosine midpoint {}", lr(mid)?);
    let last = lr(cfg.iterations - 1)?;
    ensure!(last < 1e-6 * cfg.lr0, "final lr {last:e}");
    let jump = (lr(cfg.warmup)? - lr(cfg.warmup - 1)?).abs();
    ensure!(jump < 1e-12, "warm-up boundary jump {jump:e}");
    Ok(format!("final lr {last:.2e}, boundary jump {jump:.1e}"))
}

// ---------------------------------------------------------------- 6

/// Grids used by the desk-scale runs.
fn desk_field() -> FieldSettings {
    FieldSettings {
        proposal: 32,
        density: 64,
        color: 64,
        ..FieldSettings::default()
    }
}

fn self_distillation(data: &Dataset) -> Check {
    let scene = ok(data.scene())?;
    let views = ok(data.load_split(Split::Train))?;
    let init = ok(desk_field().init_field(&scene, data.manifest().radius))?;
    let cfg = TrainConfig {
        iterations: 2000,
        ..TrainConfig::default()
    };
    let (teacher, _) = ok(train_expert(init.clone(), &views, cfg))?;
    let cameras: Vec<CameraPose> = views.iter().map(|v| v.pose).collect();
    let parts = PartitionSet::new(PartitionMethod::Percentile, vec![(0..cameras.len()).collect()]);
    let registry = ok(ExpertRegistry::new(vec![teacher.clone()], parts, cameras))?;
    let (student, _) = ok(distill(&registry, init, DistillConfig::desk()))?;

    let held_out = ok(data.load_views(Split::Test, &(0..16).collect::<Vec<_>>()))?;
    let (mut vs_teacher, mut teacher_vs_truth) = (0.0, 0.0);
    for v in &held_out {
        let t = render_image(&teacher, &v.pose);
        vs_teacher += ok(psnr(&render_image(&student, &v.pose), &t))? / 16.0;
        teacher_vs_truth += ok(psnr(&t, &v.image))? / 16.0;
    }
    ensure!(
        vs_teacher >= 30.0,
        "student vs teacher {vs_teacher:.2} dB (teacher vs truth {teacher_vs_truth:.2} dB)"
    );
    Ok(format!(
        "student vs teacher {vs_teacher:.2} dB on 16 held-out poses (teacher vs truth {teacher_vs_truth:.2} dB)"
    ))
}

// ---------------------------------------------------------------- 7

/// Per-model budget of the comparison run.
const BUDGET: usize = 2000;

fn comparison_config(data: &Path, out: &Path, budget: usize) -> PipelineConfig {
    PipelineConfig {
        data: data.to_path_buf(),
        out: out.to_path_buf(),
        k: 4,
        method: "azimuth".into(),
        field: desk_field(),
        budget,
        ..PipelineConfig::default()
    }
}

fn end_to_end(data: &Path, work: &Path) -> Result<(String, Report), String> {
    let report = run_pipeline(&comparison_config(data, &work.join("c7"), BUDGET)).map_err(|e| e.to_string())?;
    let arms: Vec<String> = report
        .arms
        .iter()
        .map(|a| format!("{} {:.2}", a.name, a.final_metrics.psnr))
        .collect();
    let delta = report.delta_psnr_vs_2b;
    let detail = format!(
        "B={BUDGET}, test psnr: {}; delta vs baseline@2B {delta:+.3} dB",
        arms.join(", ")
    );
    ensure!(delta >= -0.1, "{detail}");
    Ok((detail, report))
}

// ---------------------------------------------------------------- 8

fn tree_bytes(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Files that record wall-clock time.
fn timed(p: &Path) -> bool {
    let name = p.file_name().unwrap().to_string_lossy();
    name == "manifest.json" || name.ends_with(".dacf.json")
}

fn determinism(work: &Path) -> Check {
    let mut compared = 0;
    let gens: Vec<PathBuf> = (0..2).map(|i| work.join(format!("c8-gen-{i}"))).collect();
    let opts = GenOptions {
        n_train: 24,
        n_test: 16,
        ..GenOptions::default()
    };
    for g in &gens {
        ok(gen_dataset(&Scene::twotone(), &opts, g))?;
    }
    let (a, b) = (tree_bytes(&gens[0]), tree_bytes(&gens[1]));
    ensure!(a == b, "gen reruns differ");
    compared += a.len();

    let runs: Vec<PathBuf> = (0..2).map(|i| work.join(format!("c8-run-{i}"))).collect();
    for r in &runs {
        let cfg = PipelineConfig {
            warmup: 50,
            eval_points: 2,
            ..comparison_config(&gens[0], r, 300)
        };
        run_pipeline(&cfg).map_err(|e| e.to_string())?;
    }
    let (a, b) = (tree_bytes(&runs[0]), tree_bytes(&runs[1]));
    ensure!(a.len() == b.len(), "reruns wrote {} and {} files", a.len(), b.len());
    for ((pa, ba), (pb, bb)) in a.iter().zip(&b) {
        ensure!(pa == pb, "reruns wrote {} and {}", pa.display(), pb.display());
        if !timed(pa) {
            ensure!(ba == bb, "{} differs between reruns", pa.display());
            compared += 1;
        }
    }
    ensure!(runs.iter().all(|r| r.join(REPORT_FILE).exists()), "missing report");
    Ok(format!(
        "{compared} files byte-identical across gen and full pipeline reruns"
    ))
}

// ----------------------------------------------------------------

struct Runner {
    only: Option<BTreeSet<usize>>,
    failed: Vec<usize>,
}

impl Runner {
    fn wants(&self, n: usize) -> bool {
        self.only.as_ref().is_none_or(|s| s.contains(&n))
    }

    fn record(&mut self, n: usize, name: &str, limit: Duration, elapsed: Duration, result: Check) {
        let secs = elapsed.as_secs_f64();
        let result = result.and_then(|d| {
            if elapsed <= limit {
                Ok(d)
            } else {
                Err(format!("{d}; runtime {secs:.1} s exceeds {} s", limit.as_secs()))
            }
        });
        match result {
            Ok(d) => println!("criterion {n:>2} PASS  {name}: {d} ({secs:.1} s)"),
            Err(d) => {
                println!("criterion {n:>2} FAIL  {name}: {d} ({secs:.1} s)");
                self.failed.push(n);
            }
        }
    }

    fn run(&mut self, n: usize, name: &str, limit: Duration, f: impl FnOnce() -> Check) {
        if self.wants(n) {
            let start = Instant::now();
            let r = f();
            self.record(n, name, limit, start.elapsed(), r);
        }
    }
}

fn main() -> ExitCode {
    let only = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut r = Runner {
        only,
        failed: Vec::new(),
    };
    let secs = Duration::from_secs;
    r.run(1, "partition correctness", secs(10), partitions);
    r.run(2, "histogram-loss identity", secs(10), histograms);
    r.run(3, "gradient oracle", secs(120), gradients);
    r.run(4, "rendering conservation", secs(60), conservation);
    r.run(5, "graph-clustering oracles", secs(120), clustering);
    r.run(9, "metric fixtures", secs(5), metric_fixtures);
    r.run(10, "schedule fixture", secs(1), schedule);

    if [6, 7, 8].iter().any(|&n| r.wants(n)) {
        let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
        let _ = fs::remove_dir_all(&work);
        fs::create_dir_all(&work).unwrap();
        let data_dir = work.join("twotone");
        let start = Instant::now();
        let opts = GenOptions {
            n_train: 180,
            n_test: 64,
            resolution: 64,
            ..GenOptions::default()
        };
        let gen = gen_dataset(&Scene::twotone(), &opts, &data_dir).map(|_| ());
        let gen_time = start.elapsed();
        match gen.and_then(|_| Dataset::open(&data_dir)) {
            Err(e) => {
                for n in [6, 7, 8] {
                    r.record(
                        n,
                        "dataset",
                        secs(0),
                        gen_time,
                        Err(format!("generating the twotone set failed: {e:#}")),
                    );
                }
            }
            Ok(data) => {
                r.run(6, "self-distillation fidelity", secs(600), || self_distillation(&data));
                if r.wants(7) {
                    let start = Instant::now();
                    let res = end_to_end(&data_dir, &work);
                    let elapsed = start.elapsed() + gen_time;
                    if let Ok((_, report)) = &res {
                        println!("             report: {}", work.join("c7").join(REPORT_FILE).display());
                        for arm in &report.arms {
                            let curve: Vec<String> =
                                arm.curve.iter().map(|p| format!("{}:{:.2}", p.step, p.psnr)).collect();
                            println!("             {:<12} {}", arm.name, curve.join(" "));
                        }
                    }
                    r.record(7, "end-to-end trend", secs(1800), elapsed, res.map(|(d, _)| d));
                }
                r.run(8, "determinism", Duration::MAX, || determinism(&work));
            }
        }
    }

    if r.failed.is_empty() {
        println!("acceptance: all selected criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {:?}", r.failed);
        ExitCode::FAILURE
    }
}
