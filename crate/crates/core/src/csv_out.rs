//! Number formatting for CSV output.

use crate::scalar::Real;

/// Significant digits written for every real-valued column.
pub const SIGNIFICANT_DIGITS: i32 = 12;

/// Fixed-point decimal with [`SIGNIFICANT_DIGITS`] significant digits.
pub fn fmt_num<T: Real>(x: T) -> String {
    fmt_f64(x.to_f64().unwrap_or(f64::NAN))
}

pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT_DIGITS - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_f64(0.5), "0.500000000000");
        assert_eq!(fmt_f64(0.1875), "0.187500000000");
        assert_eq!(fmt_f64(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_f64(123.456), "123.456000000");
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(2.5e-5), "0.0000250000000000");
        assert_eq!(fmt_f64(1e12), "1000000000000");
    }
}
