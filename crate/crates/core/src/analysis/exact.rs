//! Exact decimal arithmetic for threshold inequalities.
//!
//! Thresholds and splitting ratios are entered as short decimals (`0.95`,
//! `400`). Each `f64` is read back as the rational number its shortest
//! round-trip decimal denotes, so `0.95` becomes exactly `19/20` and
//! `t / (1 - t)` evaluates to exactly `19`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

pub fn decimal(x: f64) -> BigRational {
    assert!(x.is_finite(), "decimal() needs a finite value, got {x}");
    // Display for f64 prints the shortest round-trip digits without an exponent
    let s = format!("{x}");
    let (neg, s) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.as_str()),
    };
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{int}{frac}").parse().expect("decimal digits");
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(digits, denom);
    if neg {
        -r
    } else {
        r
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_shortest_decimal() {
        assert_eq!(decimal(0.95), BigRational::new(19.into(), 20.into()));
        assert_eq!(decimal(-1.5), BigRational::new((-3).into(), 2.into()));
        assert_eq!(decimal(400.0), BigRational::from_integer(400.into()));
        assert_eq!(decimal(1e-7), BigRational::new(1.into(), 10_000_000.into()));
    }

    #[test]
    fn ratio_is_exact() {
        let one = BigRational::from_integer(1.into());
        let t = decimal(0.95);
        let r = &t / (&one - &t);
        assert_eq!(to_f64(&(r * decimal(500.0))), 9500.0);
    }
}
