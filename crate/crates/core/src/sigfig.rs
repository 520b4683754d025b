//! One-significant-figure comparison of computed values against quoted
//! ones.

/// `x` rounded to one significant figure as `(digit, exponent)`, so that
/// `x ~ digit * 10^exponent` with `1 <= digit <= 9`.
pub fn one_significant_figure(x: f64) -> Option<(u32, i32)> {
    if !(x.is_finite() && x > 0.0) {
        return None;
    }
    let mut e = x.log10().floor() as i32;
    let mut m = (x / 10f64.powi(e)).round();
    // log10 can land one below for values just under a power of ten
    if m >= 10.0 {
        m = 1.0;
        e += 1;
    }
    Some((m as u32, e))
}

/// True when `computed` rounds to the same one-figure value as `quoted`.
pub fn rounds_to(computed: f64, quoted: f64) -> bool {
    match (one_significant_figure(computed), one_significant_figure(quoted)) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    }
}

/// `computed` written at one significant figure, e.g. `6e-3`.
pub fn format_one_figure(x: f64) -> String {
    match one_significant_figure(x) {
        Some((m, e)) => format!("{m}e{e}"),
        None => format!("{x}"),
    }
}
