use std::path::Path;

use num_rational::Rational64;
use serde::Deserialize;

use super::game::PayoffMatrix2x2;
use super::GameError;

/// Before/after payoff tables given directly instead of simulated.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffFixture {
    pub before: MatrixFixture,
    pub after: MatrixFixture,
}

/// Each entry is (row player, column player).
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFixture {
    pub cc: [f64; 2],
    pub cd: [f64; 2],
    pub dc: [f64; 2],
    pub dd: [f64; 2],
}

impl MatrixFixture {
    pub fn to_f64(&self) -> PayoffMatrix2x2<f64> {
        let p = |v: [f64; 2]| (v[0], v[1]);
        PayoffMatrix2x2::new(p(self.cc), p(self.cd), p(self.dc), p(self.dd))
    }

    /// Exact rationals of the decimals as written in the file.
    pub fn to_exact(&self) -> Result<PayoffMatrix2x2<Rational64>, GameError> {
        let p = |v: [f64; 2]| -> Result<_, GameError> {
            Ok((exact(v[0])?, exact(v[1])?))
        };
        Ok(PayoffMatrix2x2::new(p(self.cc)?, p(self.cd)?, p(self.dc)?, p(self.dd)?))
    }
}

/// The shortest round-trip decimal of `v` is what the file contained.
fn exact(v: f64) -> Result<Rational64, GameError> {
    if !v.is_finite() {
        return Err(GameError::Fixture(format!("non-finite payoff {v}")));
    }
    parse_decimal(&format!("{v}"))
}

/// Parses `[-]digits[.digits]` exactly.
pub fn parse_decimal(s: &str) -> Result<Rational64, GameError> {
    let bad = || GameError::Fixture(format!("not a plain decimal: {s:?}"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        || frac.len() > 18
    {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let numer: i64 = digits.parse().map_err(|_| bad())?;
    let denom = 10i64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
    let r = Rational64::new(numer, denom);
    Ok(if neg { -r } else { r })
}

pub fn load_fixture(path: &Path) -> Result<PayoffFixture, GameError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GameError::Fixture(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| GameError::Fixture(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_decimal("728.1").unwrap(), Rational64::new(7281, 10));
        assert_eq!(parse_decimal("-0.25").unwrap(), Rational64::new(-1, 4));
        assert_eq!(parse_decimal("12").unwrap(), Rational64::from_integer(12));
        assert!(parse_decimal("1e3").is_err());
        assert!(parse_decimal("").is_err());
        assert_eq!(exact(935.0).unwrap(), Rational64::from_integer(935));
        assert_eq!(exact(677.4).unwrap(), Rational64::new(6774, 10));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[before]\ncc=[1,1]\ncd=[1,1]\ndc=[1,1]\ndd=[1,1]\nxx=[0,0]\n[after]\ncc=[1,1]\ncd=[1,1]\ndc=[1,1]\ndd=[1,1]\n";
        assert!(toml::from_str::<PayoffFixture>(text).is_err());
    }
}
