//! Acceptance criteria 1-9, one line each.
//!
//! Runs as a plain binary (`harness = false`) so the verdicts are printed
//! even when `cargo test` captures output. Criteria restating exact
//! properties of the implementation abort the run when they fail; the
//! empirical ones (convergence speedup, topology of trained layers, pruning
//! trade-off, accuracy parity) are reported as FAIL without aborting,
//! together with their measurements.
//!
//! `TOPONET_ACCEPTANCE=1,3,7` restricts the run to some criteria;
//! `TOPONET_FASHION_MNIST_DIR` points at the Fashion-MNIST IDX files.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use ndarray::{s, Array2};
use rand::Rng;
use toponet::datasets::synthetic::{
    gaussian_blobs, gen_nine_rings, gen_nine_spheres, sample_circle, sample_sphere, CLASS_QUANTILE, GREEN,
};
use toponet::datasets::{load_idx, LabeledCloud, SampleShape, Split};
use toponet::experiments::{convergence_benchmark, layerwise_betti, middle_layers, ActivationChoice, BenchmarkConfig};
use toponet::nn::{mlp_9x25, small_cnn, train, ActivationKind, LayerSpec, Network, NetworkSpec, OutputHead, TrainConfig};
use toponet::pointcloud::{pairwise_distances, PointCloud};
use toponet::pruning::{filter_betti_scores, percentile_threshold, prune_filters, remove_filters, ScoreConfig};
use toponet::topology::*;

#[derive(Clone, Copy, PartialEq)]
enum Gate {
    /// Failure aborts the run.
    Exact,
    /// Failure is reported with its measurements.
    Empirical,
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let only: Option<BTreeSet<u32>> = std::env::var("TOPONET_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|t| t.trim().parse().ok()).collect());

    let fashion = RefCell::new(FashionRuns::default());
    type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;
    let checks: Vec<(u32, Gate, &str, Check)> = vec![
        (1, Gate::Exact, "homology oracle equivalence", Box::new(criterion_1)),
        (2, Gate::Exact, "known-manifold Betti numbers", Box::new(criterion_2)),
        (3, Gate::Exact, "activation closed form, knots, gradients", Box::new(criterion_3)),
        (4, Gate::Empirical, "stacked-sine convergence speedup", Box::new(criterion_4)),
        (5, Gate::Empirical, "topological simplification on nine-rings", Box::new(criterion_5)),
        (6, Gate::Empirical, "Betti pruning at the 90th percentile", Box::new(|| criterion_6(&mut fashion.borrow_mut()))),
        (7, Gate::Exact, "structural removal equivalence", Box::new(criterion_7)),
        (8, Gate::Exact, "CLI determinism from manifests", Box::new(criterion_8)),
        (9, Gate::Empirical, "stacked-sine vs relu test accuracy", Box::new(|| criterion_9(&mut fashion.borrow_mut()))),
    ];
    let mut results = Vec::new();
    for (id, gate, title, check) in &checks {
        if only.as_ref().is_some_and(|o| !o.contains(id)) {
            continue;
        }
        results.push(report(*id, *gate, title, check));
    }

    let failed_exact: Vec<u32> = results.iter().filter(|r| !r.1 && r.2 == Gate::Exact).map(|r| r.0).collect();
    let failed_empirical: Vec<u32> = results.iter().filter(|r| !r.1 && r.2 == Gate::Empirical).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria pass; exact failures {:?}, empirical failures {:?}",
        results.iter().filter(|r| r.1).count(),
        results.len(),
        failed_exact,
        failed_empirical
    );
    if !failed_exact.is_empty() {
        std::process::exit(1);
    }
}

fn report(id: u32, gate: Gate, title: &str, check: &dyn Fn() -> Verdict) -> (u32, bool, Gate) {
    let start = Instant::now();
    let v = check();
    let tag = if v.pass { "PASS" } else { "FAIL" };
    println!("criterion {id} {tag}  {title}: {} [{:.1} s]", v.detail, start.elapsed().as_secs_f64());
    (id, v.pass, gate)
}

fn criterion_1() -> Verdict {
    let mut mismatches = Vec::new();
    for seed in 0..200u64 {
        let mut rng = toponet::rng::stream(seed, "acceptance/oracle");
        let n = rng.gen_range(3..=20);
        let d = rng.gen_range(1..=4);
        let x = Array2::from_shape_simple_fn((n, d), || rng.gen_range(-1.0..1.0));
        let dm = pairwise_distances(&PointCloud::new(x).unwrap());
        let diameter = dm.upper_triangle().into_iter().fold(0.0, f64::max);
        let eps = rng.gen_range(0.0..1.0) * diameter;
        let f = build_vr_filtration(&dm, eps, 3).unwrap();
        let got = betti_at_scale(&reduce_boundary_matrix(&f).unwrap(), eps, 2);
        let want = brute_force_betti(&dm, eps, 2).unwrap();
        if got.betti != want.betti {
            mismatches.push((seed, got.betti, want.betti));
        }
    }
    verdict(mismatches.is_empty(), format!("{} of 200 clouds agree exactly; mismatches {:?}", 200 - mismatches.len(), mismatches))
}

fn criterion_2() -> Verdict {
    let default = BettiConfig::default();
    let class = BettiConfig { quantile: CLASS_QUANTILE, ..Default::default() };
    let (rings, _) = gen_nine_rings(16_000, 18, 0).unwrap();
    let (spheres, _) = gen_nine_spheres(16_000, 27, 0).unwrap();
    let cases: Vec<(&str, PointCloud, &BettiConfig, Vec<usize>)> = vec![
        ("circle", sample_circle(200, 1.0, 0.01, 1).unwrap(), &default, vec![1, 1, 0]),
        ("sphere", sample_sphere(200, 1.0, 0.01, 1).unwrap(), &default, vec![1, 0, 1]),
        ("two blobs", gaussian_blobs(100, &[vec![0.0, 0.0], vec![10.0, 0.0]], 1).unwrap(), &default, vec![2, 0, 0]),
        ("nine-rings green", rings.class_cloud(GREEN).unwrap(), &class, vec![9, 9, 0]),
        ("nine-spheres green", spheres.class_cloud(GREEN).unwrap(), &class, vec![9, 0, 9]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, cloud, cfg, want) in cases {
        let got = betti_profile(&cloud, cfg).unwrap().betti.betti;
        // the blob criterion constrains b0 only
        let ok = if name == "two blobs" { got[0] == 2 } else { got == want };
        pass &= ok;
        parts.push(format!("{name} {got:?}{}", if ok { "" } else { " (wrong)" }));
    }
    verdict(pass, format!("m=300; q=0.15 for fixtures, q={CLASS_QUANTILE} per class: {}", parts.join(", ")))
}

/// Closed form evaluated by walking whole segments instead of dividing.
fn stacked_sine_by_segments(x: f64, c: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let (mut y, mut rest) = (0.0, x);
    while rest >= c {
        y += c.sin();
        rest -= c;
    }
    y + rest.sin()
}

fn criterion_3() -> Verdict {
    let act = ActivationKind::stacked_sine();
    let c = 3.0 * std::f64::consts::PI / 4.0;
    let mut closed = 0.0f64;
    for i in 0..10_000 {
        let x = -10.0 + 30.0 * i as f64 / 9_999.0;
        closed = closed.max((act.eval(x) - stacked_sine_by_segments(x, c)).abs());
    }
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let anchors = [(-1.0, 0.0), (0.0, 0.0), (std::f64::consts::FRAC_PI_2, 1.0), (c, half), (c + std::f64::consts::FRAC_PI_2, half + 1.0)];
    let anchors_ok = anchors.iter().all(|&(x, y)| (act.eval(x) - y).abs() <= 1e-12);

    let mut knot_gap = 0.0f64;
    for k in 1..=27 {
        let knot = k as f64 * c;
        knot_gap = knot_gap.max((act.eval(knot - 1e-9) - act.eval(knot)).abs());
    }

    let spec = NetworkSpec {
        input: SampleShape::Flat(3),
        layers: vec![
            LayerSpec::Dense { input: 3, output: 4, activation: act },
            LayerSpec::Dense { input: 4, output: 3, activation: act },
            LayerSpec::Output { classes: 2, head: OutputHead::Softmax },
        ],
        init_seed: 11,
    };
    let net = Network::new(spec).unwrap();
    let params = net.param_count();
    let x = Array2::from_shape_fn((6, 3), |(i, j)| ((i * 7 + j * 3) as f64 * 0.61).sin() * 1.7 + 0.4);
    let labels = [0, 1, 1, 0, 1, 0];
    let (_, grads, _) = net.loss_and_grad(x.view(), &labels).unwrap();
    let h = 1e-5;
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (a, g) in grads.iter().enumerate() {
        for i in 0..g.len() {
            let orig = probe.param_slices()[a][i];
            probe.param_slices_mut()[a][i] = orig + h;
            let up = probe.loss(x.view(), &labels).unwrap();
            probe.param_slices_mut()[a][i] = orig - h;
            let down = probe.loss(x.view(), &labels).unwrap();
            probe.param_slices_mut()[a][i] = orig;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6));
        }
    }
    let pass = closed <= 1e-12 && anchors_ok && knot_gap <= 1e-8 && params <= 50 && worst <= 1e-4;
    verdict(
        pass,
        format!(
            "closed form max |diff| {closed:.1e} over 10000 points, anchors {anchors_ok}, knot jump {knot_gap:.1e}, \
             gradient max relative error {worst:.1e} on {params} parameters"
        ),
    )
}

fn criterion_4() -> Verdict {
    let cfg = BenchmarkConfig::default();
    let choices = [
        ActivationChoice::everywhere(ActivationKind::Relu),
        ActivationChoice { kind: ActivationKind::stacked_sine(), layers: Some(middle_layers(9)) },
    ];
    let mut parts = Vec::new();
    let mut best = 0.0f64;
    for (name, (train_data, test_data)) in
        [("nine-rings", gen_nine_rings(16_000, 2_000, 0).unwrap()), ("nine-spheres", gen_nine_spheres(16_000, 2_000, 0).unwrap())]
    {
        let spec = mlp_9x25(3, 2, ActivationKind::Relu, 0);
        let report = convergence_benchmark(&spec, &choices, &train_data, &test_data, &cfg).unwrap();
        let s = &report.speedups[0];
        best = best.max(s.median_ratio);
        let med: Vec<String> = report.summaries.iter().map(|m| format!("{} {} ({} censored)", m.activation, m.median, m.censored)).collect();
        parts.push(format!("{name}: medians {}, speedup {:.2}", med.join(" vs "), s.median_ratio));
    }
    verdict(best >= 1.2, format!("{}; needs >= 1.2 on one dataset", parts.join("; ")))
}

fn criterion_5() -> Verdict {
    let (train_data, test_data) = gen_nine_rings(16_000, 2_000, 0).unwrap();
    let cfg = TrainConfig { epochs: 300, stop_at_threshold: true, ..Default::default() };
    let mut pass = true;
    let mut parts = Vec::new();
    let relu = mlp_9x25(3, 2, ActivationKind::Relu, 0);
    let sine = relu.with_activation_at(ActivationKind::stacked_sine(), &middle_layers(9));
    for (name, spec) in [("relu", relu), ("stacked-sine", sine)] {
        let (net, log) = train(&Network::new(spec).unwrap(), &train_data, &test_data, &cfg).unwrap();
        let acc = log.records.last().unwrap().train_acc;
        if log.epochs_to_threshold.is_none() {
            parts.push(format!("{name} stopped at train accuracy {acc:.4} (not measured)"));
            continue;
        }
        for class in 0..2 {
            let prog = layerwise_betti(&net, &train_data, class, &BettiConfig::default()).unwrap();
            let last = prog.final_hidden().unwrap();
            let b = last.betti.as_ref().map(|b| b.betti.clone());
            let ok = b.as_ref().is_some_and(|b| b[0] <= 3 && b[1] == 0 && b[2] == 0);
            pass &= ok;
            parts.push(format!("{name} class {class} {} {:?}", last.name, b));
        }
    }
    verdict(pass, format!("final hidden layer at q=0.15: {}", parts.join(", ")))
}

#[derive(Default)]
struct FashionRuns {
    data: Option<(LabeledCloud, LabeledCloud)>,
    relu: Option<(Network, f64)>,
    missing: Option<String>,
}

fn fashion_dir() -> PathBuf {
    std::env::var_os("TOPONET_FASHION_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fashion-mnist"))
}

fn fashion_cfg() -> TrainConfig {
    TrainConfig { epochs: 5, ..Default::default() }
}

impl FashionRuns {
    fn data(&mut self) -> Option<&(LabeledCloud, LabeledCloud)> {
        if self.data.is_none() && self.missing.is_none() {
            let d = fashion_dir();
            let train = load_idx(d.join("train-images-idx3-ubyte"), d.join("train-labels-idx1-ubyte"), Split::Train);
            let test = load_idx(d.join("t10k-images-idx3-ubyte"), d.join("t10k-labels-idx1-ubyte"), Split::Test);
            match (train, test) {
                (Ok(train), Ok(test)) => self.data = Some((train.head(10_000), test)),
                (Err(e), _) | (_, Err(e)) => self.missing = Some(format!("Fashion-MNIST not readable in {}: {e}", d.display())),
            }
        }
        self.data.as_ref()
    }

    fn relu(&mut self) -> Option<(Network, f64)> {
        if self.relu.is_none() {
            let (train_data, test_data) = self.data()?.clone();
            let spec = small_cnn(train_data.shape, 10, ActivationKind::Relu, 0);
            let (net, log) = train(&Network::new(spec).unwrap(), &train_data, &test_data, &fashion_cfg()).unwrap();
            self.relu = Some((net, log.records.last().unwrap().test_acc));
        }
        self.relu.clone()
    }
}

fn criterion_6(f: &mut FashionRuns) -> Verdict {
    let Some((net, acc)) = f.relu() else {
        return verdict(false, f.missing.clone().unwrap_or_default());
    };
    let (train_data, test_data) = f.data().unwrap().clone();
    if acc < 0.85 {
        return verdict(false, format!("CNN reached only {acc:.4} test accuracy"));
    }
    let scores = filter_betti_scores(&net, &train_data, &ScoreConfig::default()).unwrap();
    let threshold = percentile_threshold(&scores, 90.0).unwrap();
    let (_, r) = prune_filters(&net, &scores, threshold, ScoreConfig::default().sample_n, &test_data).unwrap();
    let reduction = 1.0 - r.params_after as f64 / r.params_before as f64;
    let drop = r.accuracy_before - r.accuracy_after;
    let (lb, la) = (r.latency_before.unwrap(), r.latency_after.unwrap());
    let pass = reduction >= 0.10 && drop <= 0.02 && la <= lb;
    verdict(
        pass,
        format!(
            "test acc {acc:.4}; threshold {threshold} removed {} of {} filters {:?}; params {} -> {} ({:.1}% fewer, needs >= 10%); \
             accuracy {:.4} -> {:.4} (drop {:.2} points, limit 2); latency {:.4} -> {:.4} s per 1000",
            r.removed.len(),
            scores.len(),
            r.removed,
            r.params_before,
            r.params_after,
            100.0 * reduction,
            r.accuracy_before,
            r.accuracy_after,
            100.0 * drop,
            lb,
            la
        ),
    )
}

fn criterion_9(f: &mut FashionRuns) -> Verdict {
    let Some((_, relu_acc)) = f.relu() else {
        return verdict(false, f.missing.clone().unwrap_or_default());
    };
    let (train_data, test_data) = f.data().unwrap().clone();
    let spec = small_cnn(train_data.shape, 10, ActivationKind::stacked_sine(), 0);
    let (_, log) = train(&Network::new(spec).unwrap(), &train_data, &test_data, &fashion_cfg()).unwrap();
    let sine_acc = log.records.last().unwrap().test_acc;
    let gap = (sine_acc - relu_acc).abs();
    verdict(gap <= 0.02, format!("relu {relu_acc:.4}, stacked-sine {sine_acc:.4}, gap {:.2} points (limit 2)", 100.0 * gap))
}

fn criterion_7() -> Verdict {
    let spec = small_cnn(SampleShape::Image { channels: 1, height: 28, width: 28 }, 10, ActivationKind::Relu, 5);
    let net = Network::new(spec).unwrap();
    let mut rng = toponet::rng::stream(5, "acceptance/images");
    let x = Array2::from_shape_simple_fn((64, 784), || rng.gen_range(0.0..1.0));

    let same = remove_filters(&net, &BTreeMap::new()).unwrap();
    let a = net.forward(x.view()).unwrap().probabilities;
    let b = same.forward(x.view()).unwrap().probabilities;
    let identical = a.iter().zip(b.iter()).all(|(p, q)| p.to_bits() == q.to_bits());

    // conv1 is spec layer 0, conv2 layer 2; conv2 leaves 5x5 positions per channel
    let pairs = [(0usize, 1usize), (0, 9), (2, 0), (2, 17), (2, 31)];
    let mut removal: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &(l, f) in &pairs {
        removal.entry(l).or_default().insert(f);
    }
    let pruned = remove_filters(&net, &removal).unwrap();
    let mut arrays = net.param_arrays();
    for &(layer, f) in &pairs {
        if layer == 0 {
            arrays[2].slice_mut(s![.., f, .., ..]).fill(0.0);
        } else {
            arrays[4].slice_mut(s![f * 25..(f + 1) * 25, ..]).fill(0.0);
        }
    }
    let zeroed = Network::from_param_arrays(net.spec().clone(), arrays).unwrap();
    let p = pruned.forward(x.view()).unwrap().probabilities;
    let z = zeroed.forward(x.view()).unwrap().probabilities;
    let diff = p.iter().zip(z.iter()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    verdict(
        identical && diff <= 1e-6,
        format!("empty removal bit-identical: {identical}; {} filters removed vs zeroed, max |diff| {diff:.1e}", pairs.len()),
    )
}

fn toponet_cli(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_toponet")).args(args).current_dir(cwd).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

/// Hashes of every tracked output as found on disk.
fn disk_hashes(dir: &Path) -> Result<BTreeMap<String, String>, String> {
    let m = toponet::cli::Manifest::read(&dir.join("manifest.json")).map_err(|e| e.to_string())?;
    let mut out = BTreeMap::new();
    for name in m.outputs.keys() {
        let bytes = std::fs::read(dir.join(name)).map_err(|e| e.to_string())?;
        out.insert(name.clone(), toponet::cli::manifest::sha256_hex(&bytes));
    }
    if out != m.outputs {
        return Err(format!("{} does not match its manifest", dir.display()));
    }
    Ok(out)
}

fn criterion_8() -> Verdict {
    let tmp = tempfile::TempDir::new().unwrap();
    let d = tmp.path();
    let tiny_rings = ["--dataset", "nine-rings", "--n-train", "600", "--n-test", "100"];
    std::fs::create_dir(d.join("images")).unwrap();
    for (split, n, seed) in [("train", 80, 1), ("test", 40, 2)] {
        let mut rng = toponet::rng::stream(seed, "acceptance/tensors");
        let images = toponet::tensor::Tensor::from_f64(vec![n, 12, 12], (0..n * 144).map(|_| rng.gen_range(0.0..255.0))).unwrap();
        let labels = toponet::tensor::Tensor::from_f64(vec![n], (0..n).map(|i| (i % 3) as f64)).unwrap();
        let mut buf = Vec::new();
        images.write(&mut buf).unwrap();
        std::fs::write(d.join(format!("images/{split}_images.tnnt")), &buf).unwrap();
        buf.clear();
        labels.write(&mut buf).unwrap();
        std::fs::write(d.join(format!("images/{split}_labels.tnnt")), &buf).unwrap();
    }
    let images = ["--dataset", "tensors", "--data-dir", "images"];
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("gen-data", vec!["gen-data", "nine-spheres", "--seed", "3", "--n-train", "600", "--n-test", "90"]),
        ("betti", vec!["betti", "gen-data/train.csv", "--label", "0", "--subsample", "120", "--quantile", "0.04"]),
        ("train", [&["train", "--depth", "4", "--width", "10", "--epochs", "4", "--activation", "stacked-sine"][..], &tiny_rings].concat()),
        ("benchmark", [&["benchmark", "--depth", "3", "--width", "8", "--max-epochs", "3", "--seeds", "3"][..], &tiny_rings].concat()),
        ("layer-betti", [&["layer-betti", "--model", "train/model", "--subsample", "80"][..], &tiny_rings].concat()),
        ("evaluate", [&["evaluate", "--model", "train/model"][..], &tiny_rings].concat()),
        ("cnn", [&["train", "--arch", "cnn", "--epochs", "1"][..], &images].concat()),
        ("prune", [&["prune", "--model", "cnn/model", "--percentile", "90", "--sample-n", "30", "--subsample", "30"][..], &images].concat()),
    ];
    let mut problems = Vec::new();
    let mut files = 0;
    for (name, args) in &runs {
        let first = [&args[..], &["--out", name]].concat();
        let manifest = format!("{name}/manifest.json");
        let again_dir = format!("{name}-again");
        let again = [args[0], "--config", &manifest, "--out", &again_dir];
        let res = toponet_cli(&first, d)
            .and_then(|_| toponet_cli(&again, d))
            .and_then(|_| Ok((disk_hashes(&d.join(name))?, disk_hashes(&d.join(&again_dir))?)));
        match res {
            Ok((a, b)) if a == b && !a.is_empty() => files += a.len(),
            Ok(_) => problems.push(format!("{name}: output hashes differ")),
            Err(e) => problems.push(e),
        }
    }
    verdict(
        problems.is_empty(),
        format!("{} commands rerun from their manifests, {files} output files identical; problems {problems:?}", runs.len()),
    )
}
