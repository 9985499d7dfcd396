//! Exact rationals for reporting and for oracle values.

use num_rational::Ratio;

pub type Fraction = Ratio<i64>;

/// Largest denominator tried when recognising a probability as a fraction.
pub const MAX_DENOMINATOR: i64 = 1000;

pub fn to_f64(q: Fraction) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// The fraction with the smallest denominator within `tol` of `x`, if any.
pub fn recognize(x: f64, tol: f64) -> Option<Fraction> {
    if !x.is_finite() {
        return None;
    }
    (1..=MAX_DENOMINATOR).find_map(|d| {
        let n = (x * d as f64).round();
        ((x - n / d as f64).abs() <= tol).then(|| Fraction::new(n as i64, d))
    })
}

/// `x` with twelve significant digits.
pub fn format_sig(x: f64) -> String {
    const SIG: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIG - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// `"1/12"`, `"0"`, `"1"`; integer fractions print without a denominator.
pub fn format_fraction(q: Fraction) -> String {
    if *q.denom() == 1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}
