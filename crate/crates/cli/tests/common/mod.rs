#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satact::data::{write_idx, Dataset};
use satact::nn::Tensor;

pub fn satact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satact"))
        .args(args)
        .output()
        .expect("spawn satact")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_config(dir: &Path, name: &str, lines: &[String]) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

/// Drops the trailing `wall_seconds` column from a metrics CSV.
pub fn without_wall_clock(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

// Seven-segment layout on a unit box: (x0, y0, x1, y1), y pointing down.
const SEGMENTS: [(f64, f64, f64, f64); 7] = [
    (0.0, 0.0, 1.0, 0.0), // a: top
    (1.0, 0.0, 1.0, 0.5), // b: upper right
    (1.0, 0.5, 1.0, 1.0), // c: lower right
    (0.0, 1.0, 1.0, 1.0), // d: bottom
    (0.0, 0.5, 0.0, 1.0), // e: lower left
    (0.0, 0.0, 0.0, 0.5), // f: upper left
    (0.0, 0.5, 1.0, 0.5), // g: middle
];

const DIGITS: [&str; 10] = [
    "abcdef", "bc", "abged", "abgcd", "fgbc", "afgcd", "afgedc", "abc", "abcdefg", "abcdfg",
];

fn segment_distance(px: f64, py: f64, (x0, y0, x1, y1): (f64, f64, f64, f64)) -> f64 {
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len2 = dx * dx + dy * dy;
    let t = (((px - x0) * dx + (py - y0) * dy) / len2).clamp(0.0, 1.0);
    ((px - x0 - t * dx).powi(2) + (py - y0 - t * dy).powi(2)).sqrt()
}

/// One 28x28 glyph for `digit` with random placement, size, slant, stroke
/// width, per-segment jitter and pixel noise.
fn glyph(digit: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let w = rng.random_range(9.0..14.0);
    let h = rng.random_range(15.0..20.0);
    let x0 = rng.random_range(4.0..(24.0 - w));
    let y0 = rng.random_range(3.0..(25.0 - h));
    let slant = rng.random_range(-0.25..0.25);
    let stroke = rng.random_range(1.0..2.2);
    let ink = rng.random_range(0.7..1.0);
    let segs: Vec<(f64, f64, f64, f64)> = DIGITS[digit]
        .bytes()
        .map(|s| {
            let (a, b, c, d) = SEGMENTS[(s - b'a') as usize];
            let mut j = || rng.random_range(-0.08..0.08);
            let (a, b, c, d) = (a + j(), b + j(), c + j(), d + j());
            let place = |u: f64, v: f64| (x0 + u * w + slant * (v - 0.5) * h, y0 + v * h);
            let (p0, p1) = (place(a, b), place(c, d));
            (p0.0, p0.1, p1.0, p1.1)
        })
        .collect();
    let mut img = Vec::with_capacity(28 * 28);
    for y in 0..28 {
        for x in 0..28 {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let d = segs
                .iter()
                .map(|&s| segment_distance(px, py, s))
                .fold(f64::INFINITY, f64::min);
            let v = ink * (stroke + 0.5 - d).clamp(0.0, 1.0) + rng.random_range(-0.15..0.15);
            img.push((v.clamp(0.0, 1.0) * 255.0).round() as f32 / 255.0);
        }
    }
    img
}

/// Balanced 10-class glyph dataset, labels interleaved.
pub fn glyph_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * 784);
    let labels: Vec<usize> = (0..n).map(|i| i % 10).collect();
    for &l in &labels {
        data.extend(glyph(l, &mut rng));
    }
    Dataset::new(Tensor::new(vec![n, 1, 28, 28], data).unwrap(), labels, 10).unwrap()
}

pub struct IdxPaths {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

impl IdxPaths {
    pub fn config_lines(&self) -> Vec<String> {
        vec![
            format!("dataset.idx.train_images = {}", self.train_images.display()),
            format!("dataset.idx.train_labels = {}", self.train_labels.display()),
            format!("dataset.idx.test_images = {}", self.test_images.display()),
            format!("dataset.idx.test_labels = {}", self.test_labels.display()),
        ]
    }
}

/// Writes a glyph train/test IDX pair into `dir`.
pub fn write_glyph_idx(dir: &Path, n_train: usize, n_test: usize) -> IdxPaths {
    let paths = IdxPaths {
        train_images: dir.join("train-images-idx3-ubyte"),
        train_labels: dir.join("train-labels-idx1-ubyte"),
        test_images: dir.join("t10k-images-idx3-ubyte"),
        test_labels: dir.join("t10k-labels-idx1-ubyte"),
    };
    write_idx(&glyph_dataset(n_train, 1), &paths.train_images, &paths.train_labels).unwrap();
    write_idx(&glyph_dataset(n_test, 2), &paths.test_images, &paths.test_labels).unwrap();
    paths
}

/// Real MNIST files in `dir`, when all four standard names exist.
pub fn mnist_paths(dir: &Path) -> Option<IdxPaths> {
    let paths = IdxPaths {
        train_images: dir.join("train-images-idx3-ubyte"),
        train_labels: dir.join("train-labels-idx1-ubyte"),
        test_images: dir.join("t10k-images-idx3-ubyte"),
        test_labels: dir.join("t10k-labels-idx1-ubyte"),
    };
    [&paths.train_images, &paths.train_labels, &paths.test_images, &paths.test_labels]
        .iter()
        .all(|p| p.is_file())
        .then_some(paths)
}
