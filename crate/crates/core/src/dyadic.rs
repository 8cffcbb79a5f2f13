//! Non-negative dyadic rationals `k / 2^n` held in canonical form.
//!
//! The canonical form has an odd numerator, or is `0/2^0`, so every value in
//! the index set has exactly one key. Noise draws are keyed on this form.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Largest level a [`Dyadic`] may carry after canonicalisation.
pub const MAX_DYADIC_LEVEL: u32 = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: u64,
    level: u32,
}

/// Returns the unique canonical dyadic equal to `k / 2^n`.
///
/// Panics if the reduced level exceeds [`MAX_DYADIC_LEVEL`].
pub fn canonicalize(k: u64, n: u32) -> Dyadic {
    if k == 0 {
        return Dyadic::ZERO;
    }
    let shift = k.trailing_zeros().min(n);
    let level = n - shift;
    assert!(
        level <= MAX_DYADIC_LEVEL,
        "dyadic level {level} exceeds {MAX_DYADIC_LEVEL}"
    );
    Dyadic {
        numerator: k >> shift,
        level,
    }
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic {
        numerator: 0,
        level: 0,
    };

    pub fn new(k: u64, n: u32) -> Self {
        canonicalize(k, n)
    }

    pub fn integer(k: u64) -> Self {
        Dyadic {
            numerator: k,
            level: 0,
        }
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Nearest double; exact whenever the numerator has at most 53 bits.
    pub fn value(&self) -> f64 {
        self.numerator as f64 * (-(self.level as f64)).exp2()
    }

    /// Membership in `D_n = {k / 2^n : k >= 0}`.
    pub fn is_on_level(&self, n: u32) -> bool {
        self.level <= n
    }

    /// Index of this point on the level-`n` grid, i.e. `k` with `self = k / 2^n`.
    pub fn grid_index(&self, n: u32) -> Option<u64> {
        if self.level > n {
            return None;
        }
        let shift = n - self.level;
        if self.numerator == 0 {
            return Some(0);
        }
        if shift >= 64 {
            return None;
        }
        u64::try_from((self.numerator as u128) << shift).ok()
    }

    fn scaled(&self, to: u32) -> u128 {
        (self.numerator as u128) << (to - self.level)
    }

    pub fn checked_sub(&self, other: &Dyadic) -> Option<Dyadic> {
        let top = self.level.max(other.level);
        let diff = self.scaled(top).checked_sub(other.scaled(top))?;
        let diff = u64::try_from(diff).ok()?;
        Some(canonicalize(diff, top))
    }

    pub fn checked_add(&self, other: &Dyadic) -> Option<Dyadic> {
        let top = self.level.max(other.level);
        let sum = self.scaled(top) + other.scaled(top);
        let sum = u64::try_from(sum).ok()?;
        Some(canonicalize(sum, top))
    }

    /// Exact decimal expansion; dyadics always have a finite one.
    pub fn to_decimal(&self) -> String {
        let whole = self.numerator >> self.level;
        let mask = (1u128 << self.level) - 1;
        let mut frac = self.numerator as u128 & mask;
        if frac == 0 {
            return whole.to_string();
        }
        let mut out = format!("{whole}.");
        while frac != 0 {
            frac *= 10;
            let digit = (frac >> self.level) as u8;
            out.push((b'0' + digit) as char);
            frac &= mask;
        }
        out
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::ZERO
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let top = self.level.max(other.level);
        self.scaled(top).cmp(&other.scaled(top))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/{}", self.numerator, 1u128 << self.level)
        }
    }
}

fn pow2_exponent(d: u128) -> Option<u32> {
    (d != 0 && d.is_power_of_two()).then(|| d.trailing_zeros())
}

/// Accepts `k`, `k/m` with `m` a power of two, `k/2^n`, or a finite decimal
/// such as `0.375`.
impl FromStr for Dyadic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::ParseDyadic(s.to_string());
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let k: u64 = num.trim().parse().map_err(|_| bad())?;
            let den = den.trim();
            let n = if let Some(exp) = den.strip_prefix("2^") {
                exp.parse::<u32>().map_err(|_| bad())?
            } else {
                let d: u128 = den.parse().map_err(|_| bad())?;
                pow2_exponent(d).ok_or_else(bad)?
            };
            if n > 127 {
                return Err(bad());
            }
            let reduced = if k == 0 { 0 } else { k.trailing_zeros().min(n) };
            if n - reduced > MAX_DYADIC_LEVEL {
                return Err(bad());
            }
            return Ok(canonicalize(k, n));
        }
        if let Some((whole, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 30 {
                return Err(bad());
            }
            let whole: u64 = if whole.is_empty() {
                0
            } else {
                whole.parse().map_err(|_| bad())?
            };
            let digits = frac.len() as u32;
            let mut num: u128 = frac.parse().map_err(|_| bad())?;
            // frac / 10^d = frac / (2^d 5^d); it is dyadic iff 5^d divides frac.
            for _ in 0..digits {
                if !num.is_multiple_of(5) {
                    return Err(bad());
                }
                num /= 5;
            }
            let num = u64::try_from(num).map_err(|_| bad())?;
            let whole_part = Dyadic::integer(whole);
            if digits > MAX_DYADIC_LEVEL {
                return Err(bad());
            }
            return whole_part
                .checked_add(&canonicalize(num, digits))
                .ok_or_else(bad);
        }
        s.parse::<u64>().map(Dyadic::integer).map_err(|_| bad())
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_examples() {
        let d = canonicalize(6, 3);
        assert_eq!((d.numerator(), d.level()), (3, 2));
        assert_eq!(canonicalize(0, 5), Dyadic::ZERO);
        assert_eq!(Dyadic::ZERO.level(), 0);
        let d = canonicalize(7, 4);
        assert_eq!((d.numerator(), d.level()), (7, 4));
        assert_eq!(canonicalize(8, 0), Dyadic::integer(8));
        assert_eq!(canonicalize(8, 2), Dyadic::integer(2));
    }

    #[test]
    fn grid_membership() {
        let r = canonicalize(3, 2);
        assert!(!r.is_on_level(1));
        assert!(r.is_on_level(2));
        assert_eq!(r.grid_index(1), None);
        assert_eq!(r.grid_index(2), Some(3));
        assert_eq!(r.grid_index(5), Some(24));
        assert_eq!(Dyadic::ZERO.grid_index(0), Some(0));
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(canonicalize(1, 1).to_decimal(), "0.5");
        assert_eq!(canonicalize(5, 3).to_decimal(), "0.625");
        assert_eq!(Dyadic::integer(3).to_decimal(), "3");
        assert_eq!(canonicalize(7, 2).to_decimal(), "1.75");
        assert_eq!(canonicalize(1, 20).to_decimal(), "0.00000095367431640625");
    }

    #[test]
    fn parsing() {
        assert_eq!("3/4".parse::<Dyadic>().unwrap(), canonicalize(3, 2));
        assert_eq!("6/8".parse::<Dyadic>().unwrap(), canonicalize(3, 2));
        assert_eq!("5/2^3".parse::<Dyadic>().unwrap(), canonicalize(5, 3));
        assert_eq!("1.5".parse::<Dyadic>().unwrap(), canonicalize(3, 1));
        assert_eq!("0.25".parse::<Dyadic>().unwrap(), canonicalize(1, 2));
        assert_eq!("2".parse::<Dyadic>().unwrap(), Dyadic::integer(2));
        assert!("1/3".parse::<Dyadic>().is_err());
        assert!("0.1".parse::<Dyadic>().is_err());
        assert!("-1".parse::<Dyadic>().is_err());
    }

    #[test]
    fn arithmetic() {
        let a = canonicalize(3, 2);
        let b = canonicalize(1, 1);
        assert_eq!(a.checked_sub(&b), Some(canonicalize(1, 2)));
        assert_eq!(b.checked_sub(&a), None);
        assert_eq!(a.checked_add(&b), Some(canonicalize(5, 2)));
        assert!(b < a);
    }

    proptest! {
        #[test]
        fn canonical_form_is_unique(k in 0u64..1 << 40, n in 0u32..20, extra in 0u32..20) {
            let d = canonicalize(k, n);
            prop_assert!(d.numerator() % 2 == 1 || d.level() == 0);
            prop_assert_eq!(canonicalize(k << extra, n + extra), d);
            prop_assert_eq!(d.value(), k as f64 / (n as f64).exp2());
            prop_assert_eq!(d.to_string().parse::<Dyadic>().unwrap(), d);
            prop_assert_eq!(d.to_decimal().parse::<Dyadic>().unwrap(), d);
        }
    }
}
