//! Scalar activation catalog.
//!
//! Every non-monotonic baseline here has the gated form `f(x) = x * s(x)` with a
//! gate `s` valued in `[0, 1]`. The saturated variants keep the gated branch for
//! `x < 0` and pass `x >= 0` through untouched, which is the same as
//! `max(f(x), x)` because the gate never exceeds one.
//!
//! All functions are `f64` and pure.

mod curve;
mod special;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

pub use curve::{emit_curve, CurveTable};
pub use special::{erf, erfc, normal_cdf, normal_pdf, sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Relu,
    LeakyRelu,
    Prelu,
    Gelu,
    Silu,
    Swish,
    Mish,
    Sgelu,
    Ssilu,
    Smish,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 10] = [
        ActivationKind::Relu,
        ActivationKind::LeakyRelu,
        ActivationKind::Prelu,
        ActivationKind::Gelu,
        ActivationKind::Silu,
        ActivationKind::Swish,
        ActivationKind::Mish,
        ActivationKind::Sgelu,
        ActivationKind::Ssilu,
        ActivationKind::Smish,
    ];

    /// Kinds whose negative branch dips below zero.
    pub const NON_MONOTONIC: [ActivationKind; 6] = [
        ActivationKind::Gelu,
        ActivationKind::Silu,
        ActivationKind::Mish,
        ActivationKind::Sgelu,
        ActivationKind::Ssilu,
        ActivationKind::Smish,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::LeakyRelu => "leaky_relu",
            ActivationKind::Prelu => "prelu",
            ActivationKind::Gelu => "gelu",
            ActivationKind::Silu => "silu",
            ActivationKind::Swish => "swish",
            ActivationKind::Mish => "mish",
            ActivationKind::Sgelu => "sgelu",
            ActivationKind::Ssilu => "ssilu",
            ActivationKind::Smish => "smish",
        }
    }

    pub fn is_saturated(self) -> bool {
        matches!(
            self,
            ActivationKind::Sgelu | ActivationKind::Ssilu | ActivationKind::Smish
        )
    }

    /// Continuously differentiable everywhere (no kink at 0).
    pub fn is_smooth(self) -> bool {
        matches!(
            self,
            ActivationKind::Gelu | ActivationKind::Silu | ActivationKind::Swish | ActivationKind::Mish
        )
    }

    /// The non-monotonic base of a saturated kind.
    pub fn base(self) -> Option<ActivationKind> {
        match self {
            ActivationKind::Sgelu => Some(ActivationKind::Gelu),
            ActivationKind::Ssilu => Some(ActivationKind::Silu),
            ActivationKind::Smish => Some(ActivationKind::Mish),
            _ => None,
        }
    }

    /// Stable numeric tag used by the checkpoint format.
    pub fn tag(self) -> u32 {
        ActivationKind::ALL.iter().position(|&k| k == self).unwrap() as u32
    }

    pub fn from_tag(tag: u32) -> Option<ActivationKind> {
        ActivationKind::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let kind = match lower.as_str() {
            "lrelu" | "leakyrelu" | "leaky-relu" => ActivationKind::LeakyRelu,
            other => ActivationKind::ALL
                .into_iter()
                .find(|k| k.name() == other)
                .ok_or_else(|| {
                    let names: Vec<_> = ActivationKind::ALL.iter().map(|k| k.name()).collect();
                    Error::InvalidParameter(format!(
                        "unknown activation `{s}` (expected one of: {})",
                        names.join(", ")
                    ))
                })?,
        };
        Ok(kind)
    }
}

/// An activation together with its parameters.
///
/// `beta` is the gate scale and only Swish may set it away from 1.
/// `negative_slope` is read by LeakyReLU and PReLU and ignored elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub beta: f64,
    pub negative_slope: f64,
}

pub const LEAKY_RELU_DEFAULT_SLOPE: f64 = 0.01;
pub const PRELU_DEFAULT_SLOPE: f64 = 0.25;

impl ActivationSpec {
    pub fn new(kind: ActivationKind) -> Self {
        let negative_slope = match kind {
            ActivationKind::LeakyRelu => LEAKY_RELU_DEFAULT_SLOPE,
            ActivationKind::Prelu => PRELU_DEFAULT_SLOPE,
            _ => 0.0,
        };
        ActivationSpec {
            kind,
            beta: 1.0,
            negative_slope,
        }
    }

    pub fn with_beta(self, beta: f64) -> Result<Self> {
        let spec = ActivationSpec { beta, ..self };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_negative_slope(self, negative_slope: f64) -> Result<Self> {
        let spec = ActivationSpec {
            negative_slope,
            ..self
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and > 0, got {}",
                self.beta
            )));
        }
        if self.beta != 1.0 && self.kind != ActivationKind::Swish {
            return Err(Error::InvalidParameter(format!(
                "beta is fixed at 1 for {}",
                self.kind
            )));
        }
        if !self.negative_slope.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "negative_slope must be finite, got {}",
                self.negative_slope
            )));
        }
        Ok(())
    }

    pub fn is_saturated(&self) -> bool {
        self.kind.is_saturated()
    }
}

impl From<ActivationKind> for ActivationSpec {
    fn from(kind: ActivationKind) -> Self {
        ActivationSpec::new(kind)
    }
}

impl fmt::Display for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ActivationKind::Swish if self.beta != 1.0 => write!(f, "swish(beta={})", self.beta),
            ActivationKind::LeakyRelu | ActivationKind::Prelu => {
                write!(f, "{}(slope={})", self.kind, self.negative_slope)
            }
            kind => write!(f, "{kind}"),
        }
    }
}

impl FromStr for ActivationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<ActivationKind>().map(ActivationSpec::new)
    }
}

// Negative-branch shared code paths. The saturated kinds call exactly these,
// so they agree bit for bit with their bases on x < 0.

#[inline]
fn gelu(x: f64) -> f64 {
    x * normal_cdf(x)
}

#[inline]
fn gelu_derivative(x: f64) -> f64 {
    normal_cdf(x) + x * normal_pdf(x)
}

#[inline]
fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn silu_derivative(x: f64) -> f64 {
    if x < 0.0 {
        // (1 + e^{-x} + x e^{-x}) / (1 + e^{-x})^2, scaled by e^{2x} so nothing overflows.
        let e = x.exp();
        let d = 1.0 + e;
        e * (e + 1.0 + x) / (d * d)
    } else {
        let s = sigmoid(x);
        s * (1.0 + x * (1.0 - s))
    }
}

#[inline]
fn mish_gate(x: f64) -> f64 {
    softplus(x).tanh()
}

#[inline]
fn mish(x: f64) -> f64 {
    x * mish_gate(x)
}

#[inline]
fn mish_derivative(x: f64) -> f64 {
    if x < 0.0 {
        // e^x (4(x+1) + 4e^{2x} + e^{3x} + e^x (4x+6)) / (2e^x + e^{2x} + 2)^2
        let e = x.exp();
        let e2 = e * e;
        let omega = 4.0 * (x + 1.0) + 4.0 * e2 + e2 * e + e * (4.0 * x + 6.0);
        let delta = 2.0 * e + e2 + 2.0;
        e * omega / (delta * delta)
    } else {
        let t = mish_gate(x);
        x.mul_add((1.0 - t * t) * sigmoid(x), t)
    }
}

/// Forward value `f(x)`.
///
/// Saturated kinds return `x` itself for `x >= 0`; no arithmetic touches it.
pub fn eval(spec: &ActivationSpec, x: f64) -> f64 {
    match spec.kind {
        ActivationKind::Relu => {
            if x >= 0.0 {
                x
            } else {
                0.0
            }
        }
        ActivationKind::LeakyRelu | ActivationKind::Prelu => {
            if x >= 0.0 {
                x
            } else {
                spec.negative_slope * x
            }
        }
        ActivationKind::Gelu => gelu(x),
        ActivationKind::Silu => silu(x),
        ActivationKind::Swish => x * sigmoid(spec.beta * x),
        ActivationKind::Mish => mish(x),
        ActivationKind::Sgelu => saturated(x, gelu),
        ActivationKind::Ssilu => saturated(x, silu),
        ActivationKind::Smish => saturated(x, mish),
    }
}

#[inline]
fn saturated(x: f64, negative_branch: fn(f64) -> f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        negative_branch(x)
    }
}

/// Analytic derivative `f'(x)`.
///
/// At a kink (`x == 0` for ReLU, LeakyReLU, PReLU and the saturated kinds) the
/// right-hand branch is returned.
pub fn eval_derivative(spec: &ActivationSpec, x: f64) -> f64 {
    match spec.kind {
        ActivationKind::Relu => {
            if x >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        ActivationKind::LeakyRelu | ActivationKind::Prelu => {
            if x >= 0.0 {
                1.0
            } else {
                spec.negative_slope
            }
        }
        ActivationKind::Gelu => gelu_derivative(x),
        ActivationKind::Silu => silu_derivative(x),
        ActivationKind::Swish => silu_derivative(spec.beta * x),
        ActivationKind::Mish => mish_derivative(x),
        ActivationKind::Sgelu => saturated_derivative(x, gelu_derivative),
        ActivationKind::Ssilu => saturated_derivative(x, silu_derivative),
        ActivationKind::Smish => saturated_derivative(x, mish_derivative),
    }
}

#[inline]
fn saturated_derivative(x: f64, negative_branch: fn(f64) -> f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        negative_branch(x)
    }
}

/// Probability `F(x)` that a Bernoulli mask lets `x` through, with
/// `eval(spec, x) == x * pass_rate(spec, x)`.
///
/// Defined for ReLU, GELU, SiLU, Mish, their saturated variants, and Swish at
/// `beta = 1` (where it coincides with SiLU).
pub fn pass_rate(spec: &ActivationSpec, x: f64) -> Result<f64> {
    let rate = match spec.kind {
        ActivationKind::Relu => {
            if x >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        ActivationKind::Gelu => normal_cdf(x),
        ActivationKind::Silu => sigmoid(x),
        ActivationKind::Swish if spec.beta == 1.0 => sigmoid(x),
        ActivationKind::Mish => mish_gate(x),
        ActivationKind::Sgelu => saturated_rate(x, normal_cdf),
        ActivationKind::Ssilu => saturated_rate(x, sigmoid),
        ActivationKind::Smish => saturated_rate(x, mish_gate),
        ActivationKind::LeakyRelu | ActivationKind::Prelu | ActivationKind::Swish => {
            return Err(Error::UnsupportedKind(spec.kind))
        }
    };
    Ok(rate)
}

#[inline]
fn saturated_rate(x: f64, gate: fn(f64) -> f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        gate(x)
    }
}

/// Draws the Bernoulli mask `m ~ Bernoulli(F(x))`.
pub fn sample_mask<R: Rng + ?Sized>(spec: &ActivationSpec, x: f64, rng: &mut R) -> Result<bool> {
    let p = pass_rate(spec, x)?;
    Ok(rng.random::<f64>() < p)
}

/// Maps GELU, SiLU and Mish to their saturated counterparts.
pub fn saturate(base: ActivationKind) -> Result<ActivationSpec> {
    let kind = match base {
        ActivationKind::Gelu => ActivationKind::Sgelu,
        ActivationKind::Silu => ActivationKind::Ssilu,
        ActivationKind::Mish => ActivationKind::Smish,
        other => return Err(Error::UnsupportedKind(other)),
    };
    Ok(ActivationSpec::new(kind))
}

/// Location and value of the negative-branch minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

const MIN_SCAN_LO: f64 = -20.0;
const MIN_SCAN_STEP: f64 = 1e-3;
const MIN_SCAN_POINTS: usize = 20_000;
const MIN_BISECTIONS: usize = 200;

/// Finds the global minimum on `[-20, 0]`.
///
/// Scans the derivative at step 1e-3 for `- -> +` sign changes, bisects each
/// bracket, and keeps the lowest value.
pub fn find_minimum(spec: &ActivationSpec) -> Result<Minimum> {
    let at = |i: usize| MIN_SCAN_LO + i as f64 * MIN_SCAN_STEP;
    let mut best: Option<Minimum> = None;
    let mut prev = eval_derivative(spec, at(0));
    for i in 1..=MIN_SCAN_POINTS {
        let d = eval_derivative(spec, at(i));
        if prev < 0.0 && d >= 0.0 {
            let (mut lo, mut hi) = (at(i - 1), at(i));
            for _ in 0..MIN_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if eval_derivative(spec, mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let x = if eval_derivative(spec, hi).abs() < eval_derivative(spec, lo).abs() {
                hi
            } else {
                lo
            };
            let candidate = Minimum {
                x,
                value: eval(spec, x),
            };
            if best.is_none_or(|b| candidate.value < b.value) {
                best = Some(candidate);
            }
        }
        prev = d;
    }
    match best {
        Some(m) if m.x < 0.0 => Ok(m),
        _ => Err(Error::NoInteriorMinimum(spec.kind)),
    }
}
