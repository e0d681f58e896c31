use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use satact::nn::{checkpoint, Metrics, Model};
use satact::ActivationSpec;

use super::parse_activations;
use super::train::train_into;
use crate::config::RunConfig;
use crate::format::metric_number;
use crate::{CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated activation names (at least two), or `all`.
    #[arg(long)]
    pub activations: String,
}

/// One line of `comparison.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub spec: ActivationSpec,
    /// `(final_test_acc, best_test_acc, epochs_to_best)`; `None` after divergence.
    pub result: Option<(f64, f64, usize)>,
}

impl Outcome {
    fn from_history(spec: ActivationSpec, history: &[Metrics]) -> Self {
        let result = history.last().map(|last| {
            let best = history
                .iter()
                .fold(&history[0], |b, m| if m.test_acc > b.test_acc { m } else { b });
            (last.test_acc, best.test_acc, best.epoch + 1)
        });
        Outcome { spec, result }
    }

    pub fn csv_row(&self, diverged: bool) -> String {
        match (self.result, diverged) {
            (Some((last, best, epochs)), false) => format!(
                "{},{},{},{},false",
                self.spec,
                metric_number(last),
                metric_number(best),
                epochs
            ),
            _ => format!("{},-,-,-,{}", self.spec, diverged),
        }
    }
}

/// Directory-safe key for an activation.
pub fn run_key(spec: &ActivationSpec) -> String {
    spec.to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect::<String>()
        .trim_end_matches('_')
        .to_string()
}

pub fn run(args: Args) -> CliResult {
    let config = RunConfig::load(&args.config)?;
    let specs = parse_activations(&args.activations)?;
    if specs.len() < 2 {
        return Err(CliError::Usage("compare needs at least two activations".into()));
    }
    let mut keys: Vec<String> = specs.iter().map(run_key).collect();
    keys.sort();
    if keys.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Usage("duplicate activation in --activations".into()));
    }
    let (train, test) = config.load_datasets()?;
    fs::create_dir_all(&config.output_dir)?;
    // Shared initial weights for every run.
    let initial = config.build_model(&train)?;
    let initial_path = config.output_dir.join("initial.sact");
    checkpoint::save(&initial, &initial_path)?;

    let mut csv = BufWriter::new(File::create(config.output_dir.join("comparison.csv"))?);
    writeln!(csv, "activation,final_test_acc,best_test_acc,epochs_to_best,diverged")?;
    for spec in specs {
        let mut model: Model<f32> = checkpoint::load(&initial_path)?;
        model.replace_activations(spec)?;
        let dir = config.output_dir.join(run_key(&spec));
        let row = match train_into(&mut model, &train, &test, &config.train, &dir) {
            Ok(history) => Outcome::from_history(spec, &history).csv_row(false),
            Err(CliError::Failure(msg)) => {
                eprintln!("{spec}: diverged ({msg})");
                Outcome { spec, result: None }.csv_row(true)
            }
            Err(e) => return Err(e),
        };
        println!("{row}");
        writeln!(csv, "{row}")?;
        csv.flush()?;
    }
    Ok(())
}
