//! High-precision reference values for the satact test suites.
//!
//! Everything is evaluated in MPFR at [`PREC`] bits (about 38 decimal digits)
//! and rounded to the nearest `f64` once, at the end. Nothing here calls into
//! `satact`; the formulas are written out independently from the definitions.

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

// Selects the system GMP/MPFR build; nothing is called through it directly.
use gmp_mpfr_sys as _;

pub const PREC: u32 = 128;

fn big(x: f64) -> Float {
    Float::with_val(PREC, x)
}

fn round(v: Float) -> f64 {
    v.to_f64()
}

thread_local! {
    static SQRT_2: Float = Float::with_val(PREC, 2).sqrt();
    static SQRT_2PI: Float = {
        let two_pi: Float = Float::with_val(PREC, Constant::Pi) * 2i32;
        two_pi.sqrt()
    };
}

/// Below this argument `erfc` goes to MPFR, above it to the continued fraction.
const CF_MIN: f64 = 3.0;

/// `erfc(z)` for `z >= 3` from the Laplace continued fraction
/// `e^(-z^2) / sqrt(pi) / (z + (1/2) / (z + (2/2) / (z + (3/2) / ...)))`,
/// evaluated bottom-up. MPFR's own erfc is correct but slow in [5, 20].
fn erfc_cf(z: &Float) -> Float {
    let zf = z.to_f64();
    debug_assert!(zf >= CF_MIN);
    // Truncation error decays like exp(-2 z sqrt(2n)) for moderate z; solve for
    // PREC bits with a 2x margin. Large z behaves like the asymptotic series,
    // where n!/(2z^2)^n needs a few dozen terms regardless.
    let nats = (PREC as f64 + 16.0) * std::f64::consts::LN_2;
    let terms = (2 * ((nats / (2.0 * zf)).powi(2) / 2.0).ceil() as u32 + 8).max(64);
    let mut tail = Float::with_val(PREC, 0);
    for k in (1..=terms).rev() {
        let denom = Float::with_val(PREC, z + &tail);
        tail = Float::with_val(PREC, k) / 2i32 / denom;
    }
    let frac = Float::with_val(PREC, 1) / Float::with_val(PREC, z + &tail);
    let e = (-Float::with_val(PREC, z * z)).exp();
    let sqrt_pi = Float::with_val(PREC, Constant::Pi).sqrt();
    e / sqrt_pi * frac
}

fn erfc_big(z: Float) -> Float {
    let zf = z.to_f64();
    if zf >= CF_MIN {
        erfc_cf(&z)
    } else if zf <= -CF_MIN {
        2i32 - erfc_cf(&Float::with_val(PREC, -&z))
    } else {
        z.erfc()
    }
}

/// Standard normal CDF via `erfc(-x / sqrt 2) / 2`, relative-accurate in the tail.
fn phi(x: &Float) -> Float {
    let z = SQRT_2.with(|r| Float::with_val(PREC, -x) / r);
    erfc_big(z) / 2
}

fn pdf(x: &Float) -> Float {
    let e: Float = Float::with_val(PREC, x * x) / -2i32;
    SQRT_2PI.with(|r| e.exp() / r)
}

fn logistic(x: &Float) -> Float {
    let e = Float::with_val(PREC, -x).exp();
    Float::with_val(PREC, 1) / (e + 1)
}

fn softplus_big(x: &Float) -> Float {
    x.clone().exp().ln_1p()
}

/// The gates `s(x)` with `f(x) = x * s(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Gaussian,
    Logistic,
    /// Logistic evaluated at `beta * x`.
    ScaledLogistic(f64),
    TanhSoftplus,
}

impl Gate {
    fn value(self, x: &Float) -> Float {
        match self {
            Gate::Gaussian => phi(x),
            Gate::Logistic => logistic(x),
            Gate::ScaledLogistic(beta) => logistic(&Float::with_val(PREC, x * big(beta))),
            Gate::TanhSoftplus => softplus_big(x).tanh(),
        }
    }

    /// `d/dx [x * s(x)]`.
    fn product_derivative(self, x: &Float) -> Float {
        match self {
            Gate::Gaussian => phi(x) + Float::with_val(PREC, x * pdf(x)),
            Gate::Logistic => {
                let s = logistic(x);
                let one_minus = Float::with_val(PREC, 1 - &s);
                let t = Float::with_val(PREC, x * &s) * one_minus;
                s + t
            }
            Gate::ScaledLogistic(beta) => {
                let b = big(beta);
                let bx = Float::with_val(PREC, x * &b);
                let s = logistic(&bx);
                let one_minus = Float::with_val(PREC, 1 - &s);
                let t = Float::with_val(PREC, &bx * &s) * one_minus;
                s + t
            }
            Gate::TanhSoftplus => {
                let t = softplus_big(x).tanh();
                let sech2 = Float::with_val(PREC, 1 - Float::with_val(PREC, &t * &t));
                let tail = Float::with_val(PREC, x * sech2) * logistic(x);
                t + tail
            }
        }
    }

    /// `(x * s(x), d/dx [x * s(x)])`, sharing the gate evaluation.
    fn product_and_derivative(self, x: &Float) -> (Float, Float) {
        let s = self.value(x);
        let f = Float::with_val(PREC, x * &s);
        let d = match self {
            Gate::Gaussian => s + Float::with_val(PREC, x * pdf(x)),
            Gate::Logistic => {
                let one_minus = Float::with_val(PREC, 1 - &s);
                let t = Float::with_val(PREC, x * &s) * one_minus;
                s + t
            }
            Gate::TanhSoftplus => {
                let sech2 = Float::with_val(PREC, 1 - Float::with_val(PREC, &s * &s));
                let tail = Float::with_val(PREC, x * sech2) * logistic(x);
                s + tail
            }
            Gate::ScaledLogistic(_) => self.product_derivative(x),
        };
        (f, d)
    }
}

/// `(f(x), f'(x))` for the gated product, both rounded to `f64`.
pub fn gated_pair(gate: Gate, x: f64) -> (f64, f64) {
    let (f, d) = gate.product_and_derivative(&big(x));
    (round(f), round(d))
}

/// `x * s(x)` rounded to `f64`.
pub fn gated(gate: Gate, x: f64) -> f64 {
    let bx = big(x);
    let s = gate.value(&bx);
    round(bx * s)
}

pub fn gated_derivative(gate: Gate, x: f64) -> f64 {
    round(gate.product_derivative(&big(x)))
}

pub fn gate(gate: Gate, x: f64) -> f64 {
    round(gate.value(&big(x)))
}

/// `x` for `x >= 0`, the gated product otherwise.
pub fn saturated(gate: Gate, x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        gated(gate, x)
    }
}

pub fn saturated_derivative(gate: Gate, x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        gated_derivative(gate, x)
    }
}

/// Piecewise linear `x` / `slope * x`, computed exactly and rounded once.
pub fn leaky(slope: f64, x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        round(big(slope) * big(x))
    }
}

pub fn erf(x: f64) -> f64 {
    round(big(x).erf())
}

pub fn erfc(x: f64) -> f64 {
    round(big(x).erfc())
}

/// `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    round(softplus_big(&big(x)))
}

/// erf from its Maclaurin series
/// `2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1))`.
///
/// Terms peak near `e^(x^2)`, so the working precision grows with `x^2` to
/// keep 30+ significant digits after the alternating cancellation.
pub fn erf_taylor(x: f64) -> f64 {
    let x2f = x * x;
    let prec = 160 + (x2f * std::f64::consts::LOG2_E).ceil() as u32;
    let xb = Float::with_val(prec, x);
    let x2 = Float::with_val(prec, &xb * &xb);
    let mut power = xb.clone(); // x^(2n+1) / n! * (-1)^n
    let mut sum = xb.clone();
    let tolerance = Float::with_val(prec, 2).pow(-(prec as i32));
    let mut n: u32 = 0;
    loop {
        n += 1;
        power *= &x2;
        power /= n;
        power = -power;
        let term = Float::with_val(prec, &power / (2 * n + 1));
        sum += &term;
        if term.abs() < tolerance && n as f64 > x2f {
            break;
        }
    }
    let pi = Float::with_val(prec, Constant::Pi);
    round(sum * 2 / pi.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continued_fraction_matches_mpfr_erfc() {
        for i in 0..=400 {
            let z = big(CF_MIN + 0.0825 * i as f64);
            let cf = erfc_cf(&z);
            let reference = z.clone().erfc();
            let rel = Float::with_val(PREC, &cf - &reference).abs() / &reference;
            assert!(rel < 1e-33, "z = {z}: rel diff {rel}");
            let neg = Float::with_val(PREC, -&z);
            let diff = Float::with_val(PREC, erfc_big(neg.clone()) - neg.erfc()).abs();
            assert!(diff < 1e-36, "z = -{z}: abs diff {diff}");
        }
    }

    #[test]
    fn taylor_agrees_with_mpfr() {
        for i in -60..=60 {
            let x = i as f64 * 0.1;
            assert_eq!(erf_taylor(x), erf(x), "x = {x}");
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 2e-16 * b.abs()
    }

    #[test]
    fn pair_matches_separate_calls() {
        for gate in [Gate::Gaussian, Gate::Logistic, Gate::TanhSoftplus] {
            for x in [-30.0, -2.5, -0.1, 0.0, 0.7, 12.0] {
                assert_eq!(gated_pair(gate, x), (gated(gate, x), gated_derivative(gate, x)));
            }
        }
    }

    #[test]
    fn known_values() {
        assert_eq!(erf(1.0), 0.8427007929497149);
        assert!(close(softplus(-1.0), 0.31326168751822286));
        assert!(close(gated(Gate::Logistic, -1.0), -0.2689414213699951));
        assert!(close(gated(Gate::Gaussian, -1.0), -0.15865525393145705));
        assert!(close(gated(Gate::TanhSoftplus, -1.0), -0.30340146137410895));
        assert!(close(gated_derivative(Gate::Logistic, -2.0), -0.09078424878489548));
        assert!(close(gated_derivative(Gate::TanhSoftplus, -2.0), -0.10835509242039394));
    }
}
