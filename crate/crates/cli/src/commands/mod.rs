pub mod bench;
pub mod compare;
pub mod curve;
pub mod gradcheck;
pub mod train;

use satact::{ActivationKind, ActivationSpec};

use crate::{CliError, CliResult};

/// `all` or a comma-separated list of catalog names.
pub fn parse_activations(list: &str) -> CliResult<Vec<ActivationSpec>> {
    if list.trim() == "all" {
        return Ok(ActivationKind::ALL.into_iter().map(ActivationSpec::new).collect());
    }
    let specs = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<ActivationSpec>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    if specs.is_empty() {
        return Err(CliError::Usage("no activation given".into()));
    }
    Ok(specs)
}
