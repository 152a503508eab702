use std::io::Write;

/// Significant digits in CSV output.
pub const SIG_DIGITS: usize = 9;

/// `%.9g`-style formatting: 9 significant digits, trailing zeros removed,
/// scientific notation outside `1e-5 ≤ |x| < 1e9`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A CSV cell; `None` becomes an empty field.
pub fn cell(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite()).map(sig9).unwrap_or_default()
}

pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(12.222222222222221), "12.2222222");
        assert_eq!(sig9(0.81515151515), "0.815151515");
        assert_eq!(sig9(4.0), "4");
        assert_eq!(sig9(-0.5), "-0.5");
        assert_eq!(sig9(1.5e-7), "1.5e-7");
        assert_eq!(sig9(123456789012.0), "1.23456789e11");
        assert_eq!(sig9(0.0001), "0.0001");
        assert_eq!(sig9(99999999.95), "100000000");
    }

    #[test]
    fn parse_back_within_precision() {
        for x in [std::f64::consts::PI, 1.0 / 3.0, 2.5e-9, 7.0e12, 13.287584848313111] {
            let y: f64 = sig9(x).parse().unwrap();
            assert!((x - y).abs() <= 5e-9 * x.abs(), "{x} -> {y}");
        }
    }

    #[test]
    fn missing_values_are_empty() {
        assert_eq!(cell(None), "");
        assert_eq!(cell(Some(f64::NAN)), "");
        assert_eq!(cell(Some(f64::INFINITY)), "");
        assert_eq!(cell(Some(2.0)), "2");
    }
}
