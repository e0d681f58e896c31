use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satact::activations::{eval, eval_derivative};
use satact::ActivationSpec;

use super::parse_activations;
use crate::{CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Activation name, comma list, or `all`.
    #[arg(long, default_value = "all")]
    pub activation: String,
    /// Inputs per pass.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 7)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Median nanoseconds per element for forward and derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub spec: ActivationSpec,
    pub n: usize,
    pub forward_ns: f64,
    pub backward_ns: f64,
}

/// `n` inputs, the first half uniform in [-8, 0), the rest in [0, 8).
pub fn bench_inputs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            if i < n / 2 {
                rng.random_range(-8.0..0.0)
            } else {
                rng.random_range(0.0..8.0)
            }
        })
        .collect()
}

fn median_ns(xs: &[f64], repeats: usize, f: impl Fn(f64) -> f64) -> f64 {
    // Warmup pass, not timed.
    black_box(xs.iter().map(|&x| f(black_box(x))).sum::<f64>());
    let mut times: Vec<f64> = (0..repeats)
        .map(|_| {
            let start = Instant::now();
            let mut acc = 0.0;
            for &x in xs {
                acc += f(black_box(x));
            }
            black_box(acc);
            start.elapsed().as_nanos() as f64 / xs.len() as f64
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    let median = if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    };
    // Clock granularity can round a tiny run to 0.
    median.max(f64::MIN_POSITIVE)
}

pub fn bench(spec: ActivationSpec, xs: &[f64], repeats: usize) -> BenchRow {
    BenchRow {
        spec,
        n: xs.len(),
        forward_ns: median_ns(xs, repeats, |x| eval(&spec, x)),
        backward_ns: median_ns(xs, repeats, |x| eval_derivative(&spec, x)),
    }
}

pub fn run(args: Args) -> CliResult {
    if args.n == 0 || args.repeats == 0 {
        return Err(CliError::Usage("--n and --repeats must be >= 1".into()));
    }
    let specs = parse_activations(&args.activation)?;
    let xs = bench_inputs(args.n, args.seed);
    println!("activation,n,repeats,forward_ns,backward_ns");
    eprintln!("{:<12} {:>12} {:>12}", "activation", "fwd ns/elem", "bwd ns/elem");
    for spec in specs {
        let row = bench(spec, &xs, args.repeats);
        println!(
            "{},{},{},{:.4},{:.4}",
            row.spec, row.n, args.repeats, row.forward_ns, row.backward_ns
        );
        eprintln!("{:<12} {:>12.3} {:>12.3}", row.spec.to_string(), row.forward_ns, row.backward_ns);
    }
    Ok(())
}
