//! Closed-form tail bounds for the modulus statistics.
//!
//! Per interval, Etemadi's inequality and the fourth-moment Markov bound give
//! `P(M_{k,n} >= 3a) <= 36 a^-4 2^-2n`. Summing over the intervals and taking
//! `a = 1/(3n)` gives the series term `2916 (n+1) n^4 2^-n`, whose
//! summability drives the Borel–Cantelli step.

use crate::error::{Error, Result};
use crate::stats::modulus::interval_count;

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}

/// `36 a^-4 2^-2n`, the bound on `P(M_{k,n} >= 3a)`.
pub fn interval_tail_bound(n: u32, alpha: f64) -> Result<f64> {
    let alpha = positive("alpha", alpha)?;
    Ok(36.0 * alpha.powi(-4) * (-2.0 * n as f64).exp2())
}

/// Union of [`interval_tail_bound`] over the `(n+1) 2^n + 1` intervals that
/// make up `M_n`.
pub fn union_tail_bound(n: u32, alpha: f64) -> Result<f64> {
    Ok(interval_count(n) as f64 * interval_tail_bound(n, alpha)?)
}

/// `2916 (n+1) n^4 2^-n`, the bound on `P(M_n >= 1/n)`.
pub fn modulus_tail_term(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "modulus tail term needs n >= 1".into(),
        ));
    }
    let nf = n as f64;
    Ok(2916.0 * (nf + 1.0) * nf.powi(4) * (-nf).exp2())
}

/// Partial sums of [`modulus_tail_term`] over `1..=n_max` and a bound on the
/// remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSummary {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// First `n` from which the terms decrease.
    pub decreasing_from: u32,
    /// `term(n_max + 1) / term(n_max)`.
    pub final_ratio: f64,
    /// Upper bound on `sum_{n > n_max} term(n)`.
    pub remainder_bound: f64,
}

impl SeriesSummary {
    pub fn n_max(&self) -> u32 {
        self.terms.len() as u32
    }

    pub fn total(&self) -> f64 {
        *self.partial_sums.last().unwrap_or(&0.0)
    }

    /// The remainder is negligible relative to the partial sum.
    pub fn converged(&self, relative: f64) -> bool {
        self.final_ratio < 1.0 && self.remainder_bound <= relative * self.total()
    }
}

/// The ratio `term(n+1) / term(n) = (n+2)/(n+1) * ((n+1)/n)^4 / 2` decreases
/// in `n`, so once it is below one the remainder is dominated by a geometric
/// series.
pub fn summarize_modulus_series(n_max: u32) -> Result<SeriesSummary> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("need n_max >= 1".into()));
    }
    let terms = (1..=n_max)
        .map(modulus_tail_term)
        .collect::<Result<Vec<_>>>()?;
    let partial_sums = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let decreasing_from = (1..=n_max)
        .find(|&n| modulus_tail_term(n + 1).unwrap() < modulus_tail_term(n).unwrap())
        .unwrap_or(n_max);
    let last = modulus_tail_term(n_max)?;
    let final_ratio = modulus_tail_term(n_max + 1)? / last;
    let remainder_bound = if final_ratio < 1.0 {
        last * final_ratio / (1.0 - final_ratio)
    } else {
        f64::INFINITY
    };
    Ok(SeriesSummary {
        terms,
        partial_sums,
        decreasing_from,
        final_ratio,
        remainder_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_bound_values() {
        assert_eq!(interval_tail_bound(4, 1.0).unwrap(), 0.140625);
        assert!((interval_tail_bound(2, 0.75).unwrap() - 36.0 / 0.31640625 / 16.0).abs() < 1e-12);
        assert!(interval_tail_bound(1, 0.0).is_err());
        assert!(interval_tail_bound(1, -1.0).is_err());
    }

    #[test]
    fn interval_bound_decreases_to_zero_in_alpha() {
        let mut prev = f64::INFINITY;
        for a in [0.1, 0.5, 1.0, 2.0, 10.0, 100.0, 1e4] {
            let b = interval_tail_bound(3, a).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-15);
    }

    #[test]
    fn series_term_values() {
        assert_eq!(modulus_tail_term(10).unwrap(), 313242.1875);
        assert!(modulus_tail_term(0).is_err());
        // 2916 = 36 * 3^4: the union bound at alpha = 1/(3n) over (n+1) 2^n intervals.
        for n in 1..20u32 {
            let a = 1.0 / (3.0 * n as f64);
            let via = 36.0 * (n as f64 + 1.0) * a.powi(-4) * (-(n as f64)).exp2();
            assert!((modulus_tail_term(n).unwrap() - via).abs() <= 1e-9 * via);
        }
    }

    #[test]
    fn ratio_tends_to_one_half() {
        let r = |n| modulus_tail_term(n + 1).unwrap() / modulus_tail_term(n).unwrap();
        assert!((r(1000) - 0.5).abs() < 0.01);
        assert!(r(200) < r(100));
    }

    #[test]
    fn series_converges_by_two_hundred() {
        let s = summarize_modulus_series(200).unwrap();
        assert!(s.decreasing_from <= 10);
        assert!(s.final_ratio < 0.53);
        assert!(s.converged(1e-12));
        let (a, b) = (s.partial_sums[149], s.partial_sums[199]);
        assert!((b - a) / b < 1e-12);
    }
}
