use super::{eval, eval_derivative, pass_rate, ActivationSpec};
use crate::error::{Error, Result};

/// Sampled function, derivative and pass-rate columns for plotting.
///
/// `passrate` holds NaN for kinds without a pass-rate function.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub passrate: Vec<f64>,
}

impl CurveTable {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        (0..self.len()).map(|i| [self.x[i], self.f[i], self.df[i], self.passrate[i]])
    }
}

/// Samples `n` uniformly spaced points on `[lo, hi]`, both ends included.
pub fn emit_curve(spec: &ActivationSpec, lo: f64, hi: f64, n: usize) -> Result<CurveTable> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "curve range must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "curve needs at least 2 samples, got {n}"
        )));
    }
    let has_rate = pass_rate(spec, 0.0).is_ok();
    let span = hi - lo;
    let last = (n - 1) as f64;
    let x: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + span * (i as f64 / last) })
        .collect();
    let f = x.iter().map(|&v| eval(spec, v)).collect();
    let df = x.iter().map(|&v| eval_derivative(spec, v)).collect();
    let passrate = x
        .iter()
        .map(|&v| {
            if has_rate {
                pass_rate(spec, v).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(CurveTable { x, f, df, passrate })
}
