//! Special functions used by the activation catalog.
//!
//! `erf`/`erfc` follow the rational approximations of the Sun/FreeBSD libm
//! (`s_erf.c`), which are accurate to below one ulp. The comments there still
//! hold; the short version:
//!
//! * `|x| < 0.84375`: `erf(x) = x + x*R(x^2)` with `R` a rational of degree 8/10.
//! * `0.84375 <= |x| < 1.25`: `erf(1+s) = c + P(s)/Q(s)` with `c = 0.845062911510467529297`.
//! * `1.25 <= |x| < 28`: `erfc(x) = exp(-x^2 - 0.5625 + R(1/x^2)/S(1/x^2)) / x`,
//!   with `-x^2` evaluated exactly through a 32-bit split of `x`.

// Coefficients are kept digit-for-digit as published.
#![allow(clippy::excessive_precision)]

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI};

const ERX: f64 = 8.45062911510467529297e-01;

// erf on [0, 0.84375]
const EFX: f64 = 1.28379167095512586316e-01;
const EFX8: f64 = 1.02703333676410069053e+00;
const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;

// erf on [0.84375, 1.25]
const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;

// erfc on [1.25, 1/0.35]
const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;

// erfc on [1/0.35, 28]
const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;

const VERY_TINY: f64 = 2.848094538889218e-306;
const SMALL: f64 = 1.0 / (1u64 << 28) as f64;
const TINY: f64 = 1.0 / (1u64 << 56) as f64;

/// Low half of `1/sqrt(2)` in double-double form: `FRAC_1_SQRT_2 + INV_SQRT2_LO`
/// agrees with `1/sqrt(2)` to about 32 digits.
const INV_SQRT2_LO: f64 = -4.833646656726457e-17;

/// `1 / sqrt(2 pi)`, the peak of the standard normal density.
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
fn small_ratio(z: f64) -> f64 {
    let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
    let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
    r / s
}

#[inline]
fn near_one_ratio(s: f64) -> f64 {
    let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
    let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
    p / q
}

/// `erfc(x)` for `1.25 <= x < 28`.
#[inline]
fn erfc_tail(x: f64) -> f64 {
    let s = 1.0 / (x * x);
    let (r, q) = if x < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2 + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    // z keeps the top 20 mantissa bits so z*z is exact.
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    (-z * z - 0.5625).exp() * ((z - x) * (z + x) + r / q).exp() / x
}

/// Gauss error function. Odd by construction: the magnitude is computed from
/// `|x|` and the sign reattached, so `erf(-x) == -erf(x)` bit for bit.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let magnitude = if a < 0.84375 {
        if a < SMALL {
            if a < VERY_TINY {
                0.125 * (8.0 * a + EFX8 * a)
            } else {
                a + EFX * a
            }
        } else {
            a + a * small_ratio(a * a)
        }
    } else if a < 1.25 {
        ERX + near_one_ratio(a - 1.0)
    } else if a >= 6.0 {
        1.0
    } else {
        1.0 - erfc_tail(a)
    };
    magnitude.copysign(x)
}

/// Complementary error function `1 - erf(x)`, accurate in relative terms for
/// large positive `x` where `1 - erf(x)` would cancel.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let negative = x < 0.0;
    let a = x.abs();
    if a < 0.84375 {
        let t = if a < TINY {
            a
        } else {
            let y = small_ratio(a * a);
            if a < 0.25 {
                a + a * y
            } else {
                0.5 + (a * y + (a - 0.5))
            }
        };
        return if negative { 1.0 + t } else { 1.0 - t };
    }
    if a < 1.25 {
        let t = ERX + near_one_ratio(a - 1.0);
        return if negative { 1.0 + t } else { 1.0 - t };
    }
    if a < 28.0 {
        if negative && a >= 6.0 {
            return 2.0;
        }
        let r = erfc_tail(a);
        return if negative { 2.0 - r } else { r };
    }
    if negative {
        2.0
    } else {
        0.0
    }
}

/// `ln(1 + e^x)` without overflow: `max(x, 0) + ln1p(e^{-|x|})`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function, branch-wise so that `e^x` is only formed for `x < 0`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF `(1 + erf(x/sqrt 2)) / 2`.
///
/// For `x < 0` this goes through `erfc(-x/sqrt 2) / 2`. The quotient `x/sqrt 2`
/// is carried as a double-double and the low half folded in to first order,
/// since erfc amplifies a relative argument error by roughly `2 z^2`.
pub fn normal_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        return 0.5 * (1.0 + erf(x * FRAC_1_SQRT_2));
    }
    let a = -x;
    let z_hi = a * FRAC_1_SQRT_2;
    let z_lo = a.mul_add(FRAC_1_SQRT_2, -z_hi) + a * INV_SQRT2_LO;
    let tail = erfc(z_hi);
    if tail == 0.0 {
        return 0.0;
    }
    let slope = FRAC_2_SQRT_PI * (-z_hi * z_hi).exp();
    0.5 * (tail - slope * z_lo)
}
