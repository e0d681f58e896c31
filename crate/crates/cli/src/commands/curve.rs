use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use satact::activations::emit_curve;
use satact::ActivationSpec;

use crate::format::curve_number;
use crate::{CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Activation name, e.g. sgelu.
    pub activation: String,
    #[arg(long, allow_hyphen_values = true, default_value_t = -6.0)]
    pub lo: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 6.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 601)]
    pub n: usize,
    /// Swish temperature.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Negative slope for leaky_relu / prelu.
    #[arg(long, allow_hyphen_values = true)]
    pub slope: Option<f64>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: Args) -> CliResult {
    let mut spec: ActivationSpec = args.activation.parse().map_err(usage)?;
    if let Some(beta) = args.beta {
        spec = spec.with_beta(beta).map_err(usage)?;
    }
    if let Some(slope) = args.slope {
        spec = spec.with_negative_slope(slope).map_err(usage)?;
    }
    let table = emit_curve(&spec, args.lo, args.hi, args.n).map_err(usage)?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(out, "x,f,df,passrate")?;
    for row in table.rows() {
        let cells: Vec<String> = row.iter().map(|&v| curve_number(v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn usage(e: satact::Error) -> CliError {
    CliError::Usage(e.to_string())
}
