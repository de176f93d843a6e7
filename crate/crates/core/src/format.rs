//! Fixed-precision number formatting for files and reports.

use serde::Serializer;

/// Significant digits used for every emitted float.
pub const SIG_DIGITS: usize = 12;

/// Formats `v` with `digits` significant digits, dropping trailing zeros.
/// Plain notation for `1e-5 ≤ |v| < 1e15`, scientific otherwise.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let figures: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();

    let body = if (-5..15).contains(&exp) {
        let point = exp + 1;
        let s = if point <= 0 {
            format!("0.{}{}", "0".repeat((-point) as usize), figures)
        } else if point as usize >= figures.len() {
            format!("{}{}", figures, "0".repeat(point as usize - figures.len()))
        } else {
            let (int, frac) = figures.split_at(point as usize);
            format!("{int}.{frac}")
        };
        trim_fraction(&s)
    } else {
        let (first, rest) = figures.split_at(1);
        let m = trim_fraction(&format!("{first}.{rest}"));
        format!("{m}e{exp}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// `v` rounded to [`SIG_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    fmt_sig(v, SIG_DIGITS).parse().unwrap_or(v)
}

/// Serde helper: writes the float rounded to [`SIG_DIGITS`] digits.
pub fn serialize_sig<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*v))
}

pub fn serialize_sig_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_some(&round_sig(*x)),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plain_values() {
        assert_eq!(fmt_sig(0.0, 12), "0");
        assert_eq!(fmt_sig(0.5, 12), "0.5");
        assert_eq!(fmt_sig(1.0, 12), "1");
        assert_eq!(fmt_sig(-2.25, 12), "-2.25");
        assert_eq!(fmt_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(fmt_sig(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(fmt_sig(15.068, 12), "15.068");
        assert_eq!(fmt_sig(123456.0, 3), "123000");
        assert_eq!(fmt_sig(0.00012345678901234, 12), "0.000123456789012");
    }

    #[test]
    fn scientific_values() {
        assert_eq!(fmt_sig(1.5e-9, 12), "1.5e-9");
        assert_eq!(fmt_sig(-1.0 / 3.0 * 1e-7, 12), "-3.33333333333e-8");
        assert_eq!(fmt_sig(2e20, 12), "2e20");
    }

    proptest! {
        #[test]
        fn round_trip_within_precision(v in -1e6f64..1e6) {
            let back: f64 = fmt_sig(v, 12).parse().unwrap();
            prop_assert!((back - v).abs() <= 1e-11 * v.abs().max(1e-300));
        }
    }
}
