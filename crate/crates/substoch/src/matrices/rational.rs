use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::MatrixError;

/// Exact arbitrary-precision fraction. Always stored canonically: positive
/// denominator, numerator and denominator coprime.
pub type Rational = num_rational::BigRational;

/// Parses `[-]?digits[.digits]` or `[-]?digits/digits` into an exact value.
///
/// Decimal text is read as an exact power-of-ten fraction, so `"0.1"` is
/// exactly 1/10, never a binary float.
pub fn rational_from_text(text: &str) -> Result<Rational, MatrixError> {
    let trimmed = text.trim();
    let malformed = || MatrixError::MalformedNumber {
        text: text.to_string(),
    };
    let (negative, body) = match trimmed.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, trimmed),
    };
    if body.is_empty() {
        return Err(malformed());
    }

    let value = if let Some((numer, denom)) = body.split_once('/') {
        let numer = parse_digits(numer).ok_or_else(malformed)?;
        let denom = parse_digits(denom).ok_or_else(malformed)?;
        if denom.is_zero() {
            return Err(MatrixError::ZeroDenominator {
                text: text.to_string(),
            });
        }
        Rational::new(numer, denom)
    } else if let Some((int_part, frac_part)) = body.split_once('.') {
        let int_part = parse_digits(int_part).ok_or_else(malformed)?;
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        let frac = parse_digits(frac_part).ok_or_else(malformed)?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        Rational::new(int_part * &scale + frac, scale)
    } else {
        Rational::from_integer(parse_digits(body).ok_or_else(malformed)?)
    };

    Ok(if negative { -value } else { value })
}

/// Canonical text form: `"p/q"`, or just `"p"` for integers. Round-trips
/// through [`rational_from_text`].
pub fn rational_to_text(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

fn parse_digits(text: &str) -> Option<BigInt> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

/// Shorthand for an integer rational.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for the fraction n/d. Panics on d = 0.
pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub(crate) fn is_one(value: &Rational) -> bool {
    value.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exact_decimals() {
        assert_eq!(rational_from_text("0.1").unwrap(), frac(1, 10));
        assert_eq!(rational_from_text("1.25").unwrap(), frac(5, 4));
        assert_eq!(rational_from_text("-0.5").unwrap(), frac(-1, 2));
        assert_eq!(rational_from_text("2").unwrap(), rat(2));
    }

    #[test]
    fn parses_fractions() {
        assert_eq!(rational_from_text("7/12").unwrap(), frac(7, 12));
        assert_eq!(rational_from_text("-3/9").unwrap(), frac(-1, 3));
    }

    #[test]
    fn rejects_malformed_text() {
        for bad in ["", "1.", ".5", "1/", "/2", "a", "1.2.3", "1/2/3", "+1", "1 / 2"] {
            assert!(
                matches!(rational_from_text(bad), Err(MatrixError::MalformedNumber { .. })),
                "accepted {bad:?}"
            );
        }
        assert!(matches!(
            rational_from_text("1/0"),
            Err(MatrixError::ZeroDenominator { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        for text in ["7/12", "0", "-5/4", "3"] {
            let value = rational_from_text(text).unwrap();
            assert_eq!(rational_from_text(&rational_to_text(&value)).unwrap(), value);
        }
        // Decimal input normalizes to fraction output but keeps the value.
        assert_eq!(rational_to_text(&rational_from_text("0.6").unwrap()), "3/5");
    }

    #[test]
    fn construction_paths_agree() {
        let a = rational_from_text("0.2").unwrap() + rational_from_text("0.1").unwrap();
        let b = rational_from_text("3/10").unwrap();
        assert_eq!(a, b);
    }
}
