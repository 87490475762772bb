/// Formats like C's `%.{digits}g`: `digits` significant digits, trailing
/// zeros removed, scientific notation for very large or small magnitudes.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Twelve significant digits, the precision used in trace files.
pub fn fmt12(x: f64) -> String {
    format_significant(x, 12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(0.5), "0.5");
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(-2.25), "-2.25");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(2f64.ln()), "0.69314718056");
        assert_eq!(fmt12(123456.0), "123456");
        assert_eq!(fmt12(1e-5), "1e-05");
        assert_eq!(fmt12(1.5e-7), "1.5e-07");
        assert_eq!(fmt12(0.0001234), "0.0001234");
        assert_eq!(fmt12(1e12), "1e+12");
        assert_eq!(fmt12(999999999999.4), "999999999999");
        assert_eq!(fmt12(9.99999999999951e-5), "0.0001");
        assert_eq!(format_significant(2.71828, 3), "2.72");
    }
}
