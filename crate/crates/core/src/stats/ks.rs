//! Kolmogorov–Smirnov tests with asymptotic critical values.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    /// `n` for one-sample tests, `n m / (n + m)` for two-sample tests.
    pub effective_size: f64,
    pub p_value: f64,
}

impl KsOutcome {
    pub fn rejects(&self, significance: f64) -> bool {
        self.p_value < significance
    }

    /// Largest statistic not rejected at `significance`.
    pub fn critical_statistic(&self, significance: f64) -> f64 {
        kolmogorov_quantile(significance) / self.effective_size.sqrt()
    }
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // Jacobi-theta form, fast for small x.
        let mut cdf = 0.0;
        for k in 1..=50 {
            let j = (2 * k - 1) as f64;
            let term = (-(j * j) * PI * PI / (8.0 * x * x)).exp();
            cdf += term;
            if term < 1e-17 * cdf {
                break;
            }
        }
        (1.0 - cdf * (2.0 * PI).sqrt() / x).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * x * x).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// `x` with `P(K > x) = significance`, by bisection.
pub fn kolmogorov_quantile(significance: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_survival(mid) > significance {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample test of `sample` against a continuous `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> KsOutcome {
    let xs = sorted(sample);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    KsOutcome {
        statistic: d,
        effective_size: n,
        p_value: kolmogorov_survival(n.sqrt() * d),
    }
}

/// Two-sample test; tied values are stepped over together.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsOutcome {
    let (xs, ys) = (sorted(a), sorted(b));
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = n * m / (n + m);
    KsOutcome {
        statistic: d,
        effective_size: ne,
        p_value: kolmogorov_survival(ne.sqrt() * d),
    }
}
