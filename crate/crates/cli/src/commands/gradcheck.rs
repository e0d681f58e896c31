use satact::activations::{self, ActivationSpec};
use satact::nn::{GradCheckFixture, GradCheckOptions, GradCheckReport, Scalar};

use super::parse_activations;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelChoice {
    Mlp,
    Smokecnn,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_enum, default_value_t = ModelChoice::All)]
    pub model: ModelChoice,
    /// Activation name, comma list, or `all`.
    #[arg(long, default_value = "all")]
    pub activation: String,
    #[arg(long, default_value_t = 1e-5)]
    pub h: f64,
    /// Numeric width of the analytic pass; defaults to $SATACT_PRECISION, else f64.
    #[arg(long, value_enum)]
    pub precision: Option<Precision>,
    /// Seed for weights, inputs and parameter sampling.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Parameters compared per model.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Denominator floor of the relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub floor: f64,
    /// Scale every activation derivative by 1.1 (negative control).
    #[arg(long, hide = true)]
    pub corrupt_derivative: bool,
}

fn corrupted(spec: &ActivationSpec, x: f64) -> f64 {
    1.1 * activations::eval_derivative(spec, x)
}

pub fn resolve_precision(flag: Option<Precision>) -> CliResult<Precision> {
    if let Some(p) = flag {
        return Ok(p);
    }
    match std::env::var("SATACT_PRECISION") {
        Err(_) => Ok(Precision::F64),
        Ok(v) => match v.as_str() {
            "f64" => Ok(Precision::F64),
            "f32" => Ok(Precision::F32),
            other => Err(CliError::Usage(format!(
                "SATACT_PRECISION={other}: expected f32 or f64"
            ))),
        },
    }
}

pub fn run(args: Args) -> CliResult {
    let specs = parse_activations(&args.activation)?;
    let precision = resolve_precision(args.precision)?;
    let threshold = match precision {
        Precision::F64 => 1e-6,
        Precision::F32 => 1e-3,
    };
    let opts = GradCheckOptions {
        h: args.h,
        min_samples: args.samples,
        floor: args.floor,
        seed: args.seed,
    };
    let models: &[&str] = match args.model {
        ModelChoice::Mlp => &["mlp"],
        ModelChoice::Smokecnn => &["smokecnn"],
        ModelChoice::All => &["mlp", "smokecnn"],
    };
    println!("model,activation,layer,tensor,checked,skipped,max_rel_error");
    let mut failures = Vec::new();
    for &model in models {
        for spec in &specs {
            let report = match precision {
                Precision::F64 => check::<f64>(model, *spec, &opts, args.corrupt_derivative, args.seed),
                Precision::F32 => check::<f32>(model, *spec, &opts, args.corrupt_derivative, args.seed),
            }?;
            for t in &report.tensors {
                println!(
                    "{model},{spec},{},{},{},{},{:.3e}",
                    t.layer, t.name, t.checked, t.skipped, t.max_rel_error
                );
            }
            let worst = report.max_rel_error();
            let verdict = if worst <= threshold { "ok" } else { "FAIL" };
            eprintln!("{verdict:4} {model:8} {spec:12} max rel error {worst:.3e} (threshold {threshold:e})");
            if worst > threshold {
                failures.push(format!("{model}/{spec}"));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "gradient check above {threshold:e} for {}",
            failures.join(", ")
        )))
    }
}

fn check<T: Scalar>(
    model: &str,
    spec: ActivationSpec,
    opts: &GradCheckOptions,
    corrupt: bool,
    seed: u64,
) -> CliResult<GradCheckReport> {
    let fixture = match model {
        "mlp" => GradCheckFixture::<T>::mlp(spec, seed)?,
        _ => GradCheckFixture::<T>::smoke_cnn(spec, seed)?,
    };
    let report = if corrupt {
        fixture.report(opts, &corrupted)
    } else {
        fixture.report(opts, &activations::eval_derivative)
    };
    report.map_err(|e| CliError::Usage(e.to_string()))
}
