//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured quantity and the wall time against the criterion's budget.
//!
//! Runs criteria sequentially so timings are not distorted by sibling tests.
//! Pass criterion numbers as arguments to run a subset: `cargo test --test
//! acceptance -- 2 5`.
//!
//! Criterion 9 trains on a generated 10-class IDX glyph set unless
//! `SATACT_MNIST_DIR` names a directory with the four standard MNIST files;
//! `SATACT_CIFAR10_DIR` adds the CIFAR-10 subset run.

mod common;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satact::activations::{self, eval, eval_derivative, find_minimum, pass_rate};
use satact::data::{
    encode_cifar_records, load_idx, parse_cifar_records, write_idx, CifarVariant, Dataset,
};
use satact::nn::{Model, Tensor};
use satact::{ActivationKind, ActivationSpec};
use satact_oracle::{self as oracle, Gate};

use common::*;

type Check = Result<String, String>;

/// Number, title, time budget in seconds, body.
type Criterion = (u32, &'static str, u64, fn() -> Check);

const SATURATED: [ActivationKind; 3] =
    [ActivationKind::Sgelu, ActivationKind::Ssilu, ActivationKind::Smish];

fn spec(kind: ActivationKind) -> ActivationSpec {
    ActivationSpec::new(kind)
}

/// 10^5 uniform grid points plus 10^4 uniform random points on [-50, 50].
fn sweep_points() -> Vec<f64> {
    let n = 100_000;
    let mut xs: Vec<f64> = (0..n).map(|i| -50.0 + 100.0 * i as f64 / (n - 1) as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    xs.extend((0..10_000).map(|_| rng.random_range(-50.0..=50.0)));
    xs
}

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }
}

fn criterion_1() -> Check {
    Ok("full-size CIFAR-100 comparison (large nets, >=160 epochs) is out of desk scale; \
        criteria 2-11 substitute"
        .into())
}

fn criterion_2() -> Check {
    let xs = sweep_points();
    // Oracle pairs for the three gated bases; every other kind derives from these.
    let gates = [Gate::Gaussian, Gate::Logistic, Gate::TanhSoftplus];
    let refs: Vec<[(f64, f64); 3]> = xs
        .iter()
        .map(|&x| gates.map(|g| oracle::gated_pair(g, x)))
        .collect();
    let mut worst = Vec::new();
    let mut failed = Vec::new();
    for kind in ActivationKind::ALL {
        let s = spec(kind);
        let (mut max_rel, mut max_abs) = (0.0f64, 0.0f64);
        for (&x, r) in xs.iter().zip(&refs) {
            let gated = |k: ActivationKind| match k {
                ActivationKind::Gelu => r[0],
                ActivationKind::Silu | ActivationKind::Swish => r[1],
                ActivationKind::Mish => r[2],
                _ => unreachable!(),
            };
            let (want_f, want_d) = match kind {
                ActivationKind::Relu => {
                    if x >= 0.0 { (x, 1.0) } else { (0.0, 0.0) }
                }
                ActivationKind::LeakyRelu | ActivationKind::Prelu => {
                    let slope = s.negative_slope;
                    (oracle::leaky(slope, x), if x >= 0.0 { 1.0 } else { slope })
                }
                k if k.is_saturated() => {
                    if x >= 0.0 { (x, 1.0) } else { gated(k.base().unwrap()) }
                }
                k => gated(k),
            };
            max_rel = max_rel.max(rel_err(eval(&s, x), want_f));
            max_abs = max_abs.max((eval_derivative(&s, x) - want_d).abs());
        }
        worst.push(format!("{kind} {max_rel:.1e}/{max_abs:.1e}"));
        if !(max_rel <= 1e-13 && max_abs <= 1e-12) {
            failed.push(kind.to_string());
        }
    }
    let detail = format!(
        "{} points x 10 kinds vs 128-bit MPFR, worst rel f / abs f': {}",
        xs.len(),
        worst.join(", ")
    );
    if failed.is_empty() {
        Ok(detail)
    } else {
        Err(format!("outside 1e-13 / 1e-12 for {}; {detail}", failed.join(", ")))
    }
}

fn criterion_3() -> Check {
    let xs = sweep_points();
    let mut worst = 0.0f64;
    for kind in SATURATED {
        let (s, b) = (spec(kind), spec(kind.base().unwrap()));
        for &x in &xs {
            let piecewise = eval(&s, x);
            let max_form = eval(&b, x).max(x);
            if x >= 0.0 && piecewise.to_bits() != max_form.to_bits() {
                return Err(format!("{kind}({x}): {piecewise} != max form {max_form}"));
            }
            worst = worst.max(rel_err(piecewise, max_form));
        }
    }
    if worst <= 1e-13 {
        Ok(format!("{} points x 3 kinds, bit-exact for x >= 0, worst rel {worst:.1e} for x < 0", xs.len()))
    } else {
        Err(format!("max-form disagreement {worst:.2e} > 1e-13"))
    }
}

fn criterion_4() -> Check {
    let xs = sweep_points();
    let mut worst = 0.0f64;
    let mut kinds = 0;
    for kind in ActivationKind::ALL {
        let s = spec(kind);
        if pass_rate(&s, 0.5).is_err() {
            continue;
        }
        kinds += 1;
        for &x in &xs {
            let rate = pass_rate(&s, x).map_err(|e| e.to_string())?;
            if !(0.0..=1.0).contains(&rate) {
                return Err(format!("{kind}: F({x}) = {rate} outside [0, 1]"));
            }
            if kind.is_saturated() && x >= 0.0 && rate != 1.0 {
                return Err(format!("{kind}: F({x}) = {rate}, expected exactly 1"));
            }
            worst = worst.max(rel_err(x * rate, eval(&s, x)));
        }
    }
    if worst <= 1e-12 {
        Ok(format!("{kinds} kinds x {} points, worst rel |x F(x) - f(x)| {worst:.1e}; F = 1 exactly on x >= 0 for S-variants", xs.len()))
    } else {
        Err(format!("pass-rate identity off by {worst:.2e} > 1e-12"))
    }
}

const FD_H: f64 = 1e-5;
const FD_FLOOR: f64 = 1e-3;

fn fd_error(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, x: f64) -> f64 {
    let numeric = (f(x + FD_H) - f(x - FD_H)) / (2.0 * FD_H);
    let analytic = df(x);
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = std::iter::repeat_with(|| rng.random_range(-50.0..50.0))
        .filter(|x: &f64| x.abs() >= 1e-3)
        .take(10_000)
        .collect();
    let mut worst = Vec::new();
    let mut overall = 0.0f64;
    for kind in ActivationKind::ALL {
        let s = spec(kind);
        let e = xs
            .iter()
            .map(|&x| fd_error(|v| eval(&s, v), |v| eval_derivative(&s, v), x))
            .fold(0.0, f64::max);
        overall = overall.max(e);
        worst.push(format!("{kind} {e:.1e}"));
    }
    // The literal x/(2 pi) coefficient on the SGELU negative branch must fail the same check.
    let sgelu = spec(ActivationKind::Sgelu);
    let literal = |x: f64| {
        if x < 0.0 {
            x / (2.0 * std::f64::consts::PI) * (-x * x / 2.0).exp() + activations::normal_cdf(x)
        } else {
            1.0
        }
    };
    let literal_err = xs
        .iter()
        .map(|&x| fd_error(|v| eval(&sgelu, v), literal, x))
        .fold(0.0, f64::max);
    let detail = format!(
        "10^4 points on [-50, 50] minus |x| < 1e-3, h = 1e-5, err = |a - n| / max(|a|, |n|, 1e-3): {}; \
         literal x/(2 pi) SGELU coefficient gives {literal_err:.1e}",
        worst.join(", ")
    );
    if overall <= 1e-6 && literal_err > 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Check {
    let out = satact(&["gradcheck", "--model", "all", "--activation", "all", "--precision", "f64", "--h", "1e-5"]);
    let log = stderr(&out);
    let ok_lines = log.lines().filter(|l| l.starts_with("ok")).count();
    let worst = stdout(&out)
        .lines()
        .skip(1)
        .filter_map(|l| l.rsplit(',').next()?.parse::<f64>().ok())
        .fold(0.0, f64::max);
    if out.status.code() != Some(0) || ok_lines != 20 {
        return Err(format!("gradcheck exit {:?}, {ok_lines}/20 ok\n{log}", out.status.code()));
    }
    let control = satact(&["gradcheck", "--model", "mlp", "--activation", "sgelu", "--corrupt-derivative"]);
    if control.status.code() != Some(1) {
        return Err(format!("corrupted derivative exit {:?}, expected 1", control.status.code()));
    }
    Ok(format!("MLP + SmokeCNN x 10 activations, seed 7, worst {worst:.1e} <= 1e-6; corrupted-derivative control exits 1"))
}

fn criterion_7() -> Check {
    let mut parts = Vec::new();
    for kind in ActivationKind::NON_MONOTONIC {
        let m = find_minimum(&spec(kind)).map_err(|e| e.to_string())?;
        if !(m.x > -2.0 && m.x < 0.0 && m.value > -0.35 && m.value < 0.0) {
            return Err(format!("{kind}: minimum {m:?} outside (-2, 0) x (-0.35, 0)"));
        }
        if let Some(base) = kind.base() {
            let b = find_minimum(&spec(base)).map_err(|e| e.to_string())?;
            if b != m {
                return Err(format!("{kind} minimum {m:?} differs from {base} {b:?}"));
            }
        }
        parts.push(format!("{kind} ({:.4}, {:.4})", m.x, m.value));
    }
    Ok(format!("{}; S-variants equal their bases exactly", parts.join(", ")))
}

fn nonnegative(mut model: Model<f32>) -> Model<f32> {
    for t in model.params_mut().iter_mut().flatten() {
        t.data_mut().iter_mut().for_each(|v| *v = v.abs());
    }
    model
}

fn criterion_8() -> Check {
    let kinds = [ActivationKind::Relu, ActivationKind::Sgelu, ActivationKind::Ssilu, ActivationKind::Smish];
    let relu = spec(ActivationKind::Relu);
    let cases = [
        (
            nonnegative(Model::mlp(vec![20], &[64, 64], 10, relu, 8).map_err(|e| e.to_string())?),
            Tensor::from_fn(vec![32, 20], |i| ((i * 7919) % 1000) as f32 / 1000.0),
        ),
        (
            nonnegative(Model::smoke_cnn(3, 16, 16, 10, relu, 8).map_err(|e| e.to_string())?),
            Tensor::from_fn(vec![8, 3, 16, 16], |i| ((i * 104729) % 977) as f32 / 977.0),
        ),
    ];
    let mut compared = 0;
    for (model, x) in cases {
        let bits = |m: &Model<f32>| -> Result<Vec<u32>, String> {
            let y = m.predict(&x).map_err(|e| e.to_string())?;
            Ok(y.data().iter().map(|v| v.to_bits()).collect())
        };
        let reference = bits(&model)?;
        for kind in kinds {
            let mut swapped = model.clone();
            swapped.replace_activations(spec(kind)).map_err(|e| e.to_string())?;
            if bits(&swapped)? != reference {
                return Err(format!("{kind} output differs from relu"));
            }
            compared += reference.len();
        }
    }
    Ok(format!("MLP and SmokeCNN with non-negative weights/inputs: {compared} logits bit-identical across relu/sgelu/ssilu/smish"))
}

fn train_run(dir: &Path, name: &str, lines: Vec<String>) -> Result<(f64, String), String> {
    let cfg = write_config(dir, &format!("{name}.cfg"), &lines);
    let out = satact(&["train", "--config", cfg.to_str().unwrap()]);
    let out_dir = dir.join(name);
    let csv = fs::read_to_string(out_dir.join("metrics.csv")).unwrap_or_default();
    if out.status.code() != Some(0) {
        return Err(format!("{name}: exit {:?}: {}", out.status.code(), stderr(&out).trim()));
    }
    let last = csv.lines().last().unwrap_or("");
    let acc = last
        .split(',')
        .nth(3)
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| format!("{name}: no metrics rows"))?;
    Ok((acc, csv))
}

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mnist = std::env::var_os("SATACT_MNIST_DIR").and_then(|d| mnist_paths(Path::new(&d)));
    let (source, idx) = match mnist {
        Some(p) => ("MNIST", p),
        None => ("generated 10-class IDX glyphs (6000/1000)", write_glyph_idx(dir.path(), 6000, 1000)),
    };
    let kinds = ["relu", "gelu", "sgelu", "ssilu", "smish"];
    let mut results = Vec::new();
    let mut failed = false;
    for act in kinds {
        let mut lines = idx.config_lines();
        lines.extend([
            "model = smokecnn".to_string(),
            format!("activation = {act}"),
            "train.epochs = 3".into(),
            "train.batch_size = 128".into(),
            format!("output_dir = {}", dir.path().join(act).display()),
        ]);
        match train_run(dir.path(), act, lines) {
            Ok((acc, _)) => {
                failed |= acc < 0.90;
                results.push(format!("{act} {acc}"));
            }
            Err(e) => {
                failed = true;
                results.push(e);
            }
        }
    }
    if let Some(cifar) = std::env::var_os("SATACT_CIFAR10_DIR") {
        for act in kinds {
            let lines = vec![
                format!("dataset.cifar10 = {}", Path::new(&cifar).display()),
                "dataset.train_subset = 5000".into(),
                "model = smokecnn".into(),
                format!("activation = {act}"),
                "train.epochs = 3".into(),
                format!("output_dir = {}", dir.path().join(format!("cifar-{act}")).display()),
            ];
            match train_run(dir.path(), &format!("cifar-{act}"), lines) {
                Ok((acc, _)) => {
                    failed |= acc < 0.45;
                    results.push(format!("cifar {act} {acc}"));
                }
                Err(e) => {
                    failed = true;
                    results.push(e);
                }
            }
        }
    }
    let detail = format!("SmokeCNN, 3 epochs, {source}: test acc {} (bar 0.90 IDX / 0.45 CIFAR)", results.join(", "));
    if failed {
        Err(detail)
    } else {
        Ok(detail)
    }
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let idx = write_glyph_idx(dir.path(), 600, 200);
    let base = |out: &str| {
        let mut lines = idx.config_lines();
        lines.extend([
            "model = smokecnn".to_string(),
            "activation = sgelu".into(),
            "train.epochs = 2".into(),
            "train.batch_size = 64".into(),
            "train.seed = 3".into(),
            format!("output_dir = {}", dir.path().join(out).display()),
        ]);
        lines
    };
    let (_, a) = train_run(dir.path(), "run-a", base("run-a"))?;
    let (_, b) = train_run(dir.path(), "run-b", base("run-b"))?;
    if without_wall_clock(&a) != without_wall_clock(&b) {
        return Err(format!("train metrics differ:\n{a}\n{b}"));
    }

    let blobs = |out: &str| {
        vec![
            "dataset.synthetic.classes = 4".to_string(),
            "dataset.synthetic.dims = 6".into(),
            "dataset.synthetic.separation = 3".into(),
            "model = mlp".into(),
            "model.hidden = 16".into(),
            "train.epochs = 4".into(),
            "train.batch_size = 32".into(),
            format!("output_dir = {}", dir.path().join(out).display()),
        ]
    };
    let acts = "relu,gelu,sgelu,smish,swish";
    let mut tables = Vec::new();
    for name in ["cmp-a", "cmp-b"] {
        let cfg = write_config(dir.path(), &format!("{name}.cfg"), &blobs(name));
        let out = satact(&["compare", "--config", cfg.to_str().unwrap(), "--activations", acts]);
        if out.status.code() != Some(0) {
            return Err(format!("compare exit {:?}: {}", out.status.code(), stderr(&out)));
        }
        let root = dir.path().join(name);
        let mut files = vec![fs::read_to_string(root.join("comparison.csv")).unwrap()];
        for act in acts.split(',') {
            files.push(without_wall_clock(&fs::read_to_string(root.join(act).join("metrics.csv")).unwrap()));
        }
        tables.push(files);
    }
    if tables[0] != tables[1] {
        return Err("compare outputs differ between identical runs".into());
    }
    Ok(format!(
        "2x train (SmokeCNN) and 2x compare (5 activations) byte-identical modulo wall_seconds; {} comparison rows",
        tables[0][0].lines().count() - 1
    ))
}

fn criterion_11() -> Check {
    // CIFAR-10: two records with known bytes.
    let mut bytes = Vec::new();
    for (label, seed) in [(6u8, 0usize), (2, 1)] {
        bytes.push(label);
        bytes.extend((0..3072).map(|i| ((i * 7 + seed * 101) % 256) as u8));
    }
    let ds = parse_cifar_records(&bytes, CifarVariant::Cifar10, Path::new("fixture"))
        .map_err(|e| e.to_string())?;
    if ds.labels() != [6, 2] || ds.image(1)[5] != (5 * 7 + 101) as f32 / 255.0 {
        return Err("CIFAR-10 fixture parsed to unexpected values".into());
    }
    for (i, &v) in ds.images().data().iter().enumerate() {
        let (rec, k) = (i / 3072, i % 3072);
        if v != ((k * 7 + rec * 101) % 256) as f32 / 255.0 {
            return Err(format!("CIFAR-10 pixel {i} = {v}"));
        }
    }
    if encode_cifar_records(&ds, CifarVariant::Cifar10).map_err(|e| e.to_string())? != bytes {
        return Err("CIFAR-10 re-serialization differs".into());
    }
    // CIFAR-100: coarse + fine labels.
    let mut b100 = vec![19u8, 99];
    b100.extend((0..3072).map(|i| (255 - i % 256) as u8));
    let ds100 = parse_cifar_records(&b100, CifarVariant::Cifar100, Path::new("fixture"))
        .map_err(|e| e.to_string())?;
    if ds100.labels() != [99] || ds100.coarse_labels() != Some(&[19][..]) || ds100.image(0)[0] != 1.0 {
        return Err("CIFAR-100 fixture parsed to unexpected values".into());
    }
    if encode_cifar_records(&ds100, CifarVariant::Cifar100).map_err(|e| e.to_string())? != b100 {
        return Err("CIFAR-100 re-serialization differs".into());
    }
    // IDX: 1x1 image of byte 255, then a 3-image 2x2 set.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
    let img_bytes = [0u8, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 255];
    let lab_bytes = [0u8, 0, 8, 1, 0, 0, 0, 1, 7];
    fs::write(&img, img_bytes).unwrap();
    fs::write(&lab, lab_bytes).unwrap();
    let one = load_idx(&img, &lab).map_err(|e| e.to_string())?;
    if one.images().data() != [1.0] || one.labels() != [7] || one.images().shape() != [1, 1, 1, 1] {
        return Err("IDX single-pixel fixture parsed to unexpected values".into());
    }
    let (img2, lab2) = (dir.path().join("img2"), dir.path().join("lab2"));
    write_idx(&one, &img2, &lab2).map_err(|e| e.to_string())?;
    if fs::read(&img2).unwrap() != img_bytes || fs::read(&lab2).unwrap() != lab_bytes {
        return Err("IDX re-serialization differs".into());
    }
    let small = Dataset::new(
        Tensor::from_fn(vec![3, 1, 2, 2], |i| (i * 20) as f32 / 255.0),
        vec![0, 1, 2],
        3,
    )
    .map_err(|e| e.to_string())?;
    write_idx(&small, &img, &lab).map_err(|e| e.to_string())?;
    let back = load_idx(&img, &lab).map_err(|e| e.to_string())?;
    if back != small {
        return Err("IDX 3-image round trip differs".into());
    }
    Ok("CIFAR-10 (2 records), CIFAR-100 (1 record), IDX (1x1 and 3x2x2) parse exactly and re-serialize bit-identically".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "desk-scale substitution", 1, criterion_1),
        (2, "scalar values and derivatives vs high-precision oracle", 10, criterion_2),
        (3, "max form equals piecewise form", 5, criterion_3),
        (4, "pass-rate identity and saturation", 5, criterion_4),
        (5, "derivatives vs central differences", 10, criterion_5),
        (6, "network gradient check", 120, criterion_6),
        (7, "non-monotonic minima", 5, criterion_7),
        (8, "positive-branch equivalence", 10, criterion_8),
        (9, "smoke training", 900, criterion_9),
        (10, "determinism", 300, criterion_10),
        (11, "format round trips", 1, criterion_11),
    ];
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failures = 0;
    for (n, title, budget, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let budget = Duration::from_secs(budget);
        let (ok, detail) = match result {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d} [over time budget]")),
            Err(d) => (false, d),
        };
        failures += usize::from(!ok);
        println!(
            "criterion {n:>2} {} {title} ({:.2}s / {}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
