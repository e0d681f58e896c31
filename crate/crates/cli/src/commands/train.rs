use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use satact::data::Dataset;
use satact::nn::{checkpoint, train_with, Metrics, Model, TrainConfig};

use crate::config::RunConfig;
use crate::format::metric_number;
use crate::{CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// key=value run configuration.
    #[arg(long)]
    pub config: PathBuf,
}

pub fn metrics_row(m: &Metrics) -> String {
    format!(
        "{},{},{},{},{},{}",
        m.epoch,
        metric_number(m.train_loss),
        metric_number(m.train_acc),
        metric_number(m.test_acc),
        metric_number(m.lr),
        metric_number(m.wall_seconds)
    )
}

/// Trains `model`, streaming `metrics.csv` into `dir` and writing `model.sact`
/// on success. Rows for completed epochs survive a divergence.
pub fn train_into(
    model: &mut Model<f32>,
    train: &Dataset,
    test: &Dataset,
    config: &TrainConfig,
    dir: &Path,
) -> CliResult<Vec<Metrics>> {
    fs::create_dir_all(dir)?;
    let mut csv = BufWriter::new(File::create(dir.join("metrics.csv"))?);
    writeln!(csv, "{}", Metrics::CSV_HEADER)?;
    csv.flush()?;
    let mut io_error = None;
    let result = train_with(model, train, test, config, |m| {
        if io_error.is_none() {
            io_error = writeln!(csv, "{}", metrics_row(m))
                .and_then(|_| csv.flush())
                .err();
        }
    });
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let history = result?;
    checkpoint::save(model, &dir.join("model.sact"))?;
    Ok(history)
}

pub fn run(args: Args) -> CliResult {
    let config = RunConfig::load(&args.config)?;
    let (train, test) = config.load_datasets()?;
    let mut model = config.build_model(&train)?;
    let history = train_into(&mut model, &train, &test, &config.train, &config.output_dir)
        .map_err(|e| match e {
            CliError::Failure(m) => CliError::Failure(format!("training diverged: {m}")),
            other => other,
        })?;
    match history.last() {
        Some(m) => println!("final test accuracy: {}", metric_number(m.test_acc)),
        None => println!("final test accuracy: - (0 epochs)"),
    }
    Ok(())
}
