//! Number formatting shared by the text and CSV exporters.

/// `%g`-style rendering with `digits` significant digits and trailing zeros trimmed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    debug_assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // Round first so the exponent reflects the rounded value (9.9999 -> 10).
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

/// Round to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    format!("{:.*e}", digits - 1, x).parse().expect("round trip")
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_format() {
        assert_eq!(fmt_sig(1.0, 9), "1");
        assert_eq!(fmt_sig(0.5, 9), "0.5");
        assert_eq!(fmt_sig(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(fmt_sig(2.0 / 3.0, 9), "0.666666667");
        assert_eq!(fmt_sig(123.456, 4), "123.5");
        assert_eq!(fmt_sig(9.99999999999, 9), "10");
        assert_eq!(fmt_sig(1.5e-7, 9), "1.5e-7");
        assert_eq!(fmt_sig(-0.25, 9), "-0.25");
        assert_eq!(fmt_sig(std::f64::consts::PI, 12), "3.14159265359");
    }

    #[test]
    fn rounding_is_stable_under_reformatting() {
        for &x in &[1.234567890123456, 4.999999999999999, 0.1 + 0.2, std::f64::consts::E] {
            let r = round_sig(x, 12);
            let s = fmt_sig(r, 12);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, r);
            assert_eq!(fmt_sig(back, 12), s);
        }
    }
}
