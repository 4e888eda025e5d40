//! Exact text encoding of `f64` as C99 hexadecimal floating literals.

use crate::error::{Error, Result};

/// Formats a finite `f64` as `[-]0x1.<hex>p<exp>` (subnormals as `0x0.<hex>p-1022`).
pub fn format(x: f64) -> String {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    if exp == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let mut digits = format!("{mantissa:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let frac = if digits.is_empty() { String::new() } else { format!(".{digits}") };
    format!("{sign}0x{lead}{frac}p{e:+}")
}

pub fn parse(text: &str) -> Result<f64> {
    hexf_parse::parse_hexf64(text.trim(), false)
        .map_err(|e| Error::Parse(format!("bad hexadecimal float {text:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_encodings() {
        assert_eq!(format(1.0), "0x1p+0");
        assert_eq!(format(-0.0), "-0x0p+0");
        assert_eq!(format(0.5), "0x1p-1");
        assert_eq!(format(std::f64::consts::PI), "0x1.921fb54442d18p+1");
        assert_eq!(parse("0x1.8p+1").unwrap(), 3.0);
        assert!(parse("1.5").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back = parse(&format(x)).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
