//! Locale-independent number formatting for CSV output.

/// C-style `%.{sig}g`: `sig` significant digits, trailing zeros removed,
/// scientific notation when the exponent is below -4 or at least `sig`.
pub fn fmt_g(v: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", sig - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn curve_number(v: f64) -> String {
    fmt_g(v, 17)
}

/// 6 significant digits for metrics tables.
pub fn metric_number(v: f64) -> String {
    fmt_g(v, 6)
}
