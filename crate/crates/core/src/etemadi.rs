//! Etemadi's maximal inequality for partial sums of independent steps,
//!
//! ```text
//! P(max_{k<=n} |S_k| >= 3a) <= 3 max_{k<=n} P(|S_k| >= a),
//! ```
//!
//! evaluated exactly by enumerating every outcome sequence of a finite-support
//! step law, or estimated by Monte Carlo. Also holds the Gaussian
//! fourth-moment Markov bound used on each modulus interval.

use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::noise::keyed_stream;
use crate::stats::ensemble::par_seed_blocks;

/// Largest number of outcome sequences [`etemadi_exact`] will enumerate.
pub const MAX_ENUMERATION: u64 = 10_000_000;

/// Fewest trials [`etemadi_mc`] accepts.
pub const MIN_TRIALS: u64 = 1000;

const DOMAIN_ETEMADI: u32 = 0x6574_6d31;

/// `x >= 3a`, decided exactly: the fused `x - 3a` is rounded once, which
/// never changes its sign, so ties at the threshold count as reached.
pub(crate) fn reaches_triple(x: f64, alpha: f64) -> bool {
    (-3.0f64).mul_add(alpha, x) >= 0.0
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Finite(Vec<(f64, f64)>),
    Normal { sd: f64 },
}

/// Law of a single step `X_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution(Kind);

impl StepDistribution {
    /// Finite support of `(value, probability)` pairs; probabilities must be
    /// non-negative and sum to one within `1e-12`.
    pub fn finite(support: Vec<(f64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if let Some(&(v, p)) = support
            .iter()
            .find(|(v, p)| !v.is_finite() || !p.is_finite() || *p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!("bad atom ({v}, {p})")));
        }
        let mass: f64 = support.iter().map(|(_, p)| p).sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "total mass {mass} != 1"
            )));
        }
        Ok(Self(Kind::Finite(support)))
    }

    /// `+1` or `-1` with probability one half each.
    pub fn rademacher() -> Self {
        Self(Kind::Finite(vec![(-1.0, 0.5), (1.0, 0.5)]))
    }

    pub fn normal(sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "standard deviation {sd} must be > 0"
            )));
        }
        Ok(Self(Kind::Normal { sd }))
    }

    pub fn support(&self) -> Option<&[(f64, f64)]> {
        match &self.0 {
            Kind::Finite(s) => Some(s),
            Kind::Normal { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.0 {
            Kind::Finite(s) if *self == Self::rademacher() => {
                debug_assert_eq!(s.len(), 2);
                "rademacher".to_string()
            }
            Kind::Finite(s) => format!("finite({} atoms)", s.len()),
            Kind::Normal { sd } => format!("normal(sd={sd})"),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.0 {
            Kind::Finite(s) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(v, p) in s {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                s.last().unwrap().0
            }
            Kind::Normal { sd } => {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Exact {
        outcomes: u64,
        /// Summed probability of all enumerated sequences.
        total_mass: f64,
    },
    MonteCarlo {
        trials: u64,
        seed: u64,
        lhs_stderr: f64,
        rhs_stderr: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtemadiResult {
    pub alpha: f64,
    pub steps: u32,
    /// `P(max_k |S_k| >= 3a)`.
    pub lhs: f64,
    /// `max_k P(|S_k| >= a)`.
    pub rhs_factor: f64,
    /// `P(|S_k| >= a)` for `k = 1..=steps`.
    pub step_tails: Vec<f64>,
    pub method: Method,
}

impl EtemadiResult {
    /// Monte Carlo slack allowed on top of `3 rhs_factor`, in standard errors.
    pub const MC_SIGMAS: f64 = 4.0;

    /// Standard error of `lhs - 3 rhs_factor`, zero for exact results.
    pub fn combined_stderr(&self) -> f64 {
        match self.method {
            Method::Exact { .. } => 0.0,
            Method::MonteCarlo {
                lhs_stderr,
                rhs_stderr,
                ..
            } => (lhs_stderr * lhs_stderr + 9.0 * rhs_stderr * rhs_stderr).sqrt(),
        }
    }

    /// The inequality, with no tolerance when exact and within
    /// [`MC_SIGMAS`](Self::MC_SIGMAS) combined standard errors otherwise.
    pub fn holds(&self) -> bool {
        self.lhs <= 3.0 * self.rhs_factor + Self::MC_SIGMAS * self.combined_stderr()
    }
}

fn check_inputs(steps: u32, alpha: f64) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )));
    }
    Ok(())
}

struct Enumeration<'a> {
    support: &'a [(f64, f64)],
    steps: usize,
    alpha: f64,
    lhs: f64,
    total: f64,
    tails: Vec<f64>,
}

impl Enumeration<'_> {
    fn walk(&mut self, depth: usize, sum: f64, prob: f64, reached: bool) {
        if depth == self.steps {
            self.total += prob;
            if reached {
                self.lhs += prob;
            }
            return;
        }
        for &(v, p) in self.support {
            let s = sum + v;
            let q = prob * p;
            if s.abs() >= self.alpha {
                self.tails[depth] += q;
            }
            self.walk(
                depth + 1,
                s,
                q,
                reached || reaches_triple(s.abs(), self.alpha),
            );
        }
    }
}

/// Both sides of the inequality by summing over all `s^n` step sequences.
///
/// With dyadic probabilities and integer-valued steps every product and sum
/// is exact in double precision.
pub fn etemadi_exact(dist: &StepDistribution, steps: u32, alpha: f64) -> Result<EtemadiResult> {
    check_inputs(steps, alpha)?;
    let support = dist.support().ok_or_else(|| {
        Error::InvalidDistribution("exact enumeration needs a finite support".into())
    })?;
    let outcomes = (support.len() as u64)
        .checked_pow(steps)
        .filter(|&o| o <= MAX_ENUMERATION)
        .ok_or(Error::EnumerationTooLarge {
            support: support.len(),
            steps,
            limit: MAX_ENUMERATION,
        })?;
    let mut e = Enumeration {
        support,
        steps: steps as usize,
        alpha,
        lhs: 0.0,
        total: 0.0,
        tails: vec![0.0; steps as usize],
    };
    e.walk(0, 0.0, 1.0, false);
    let rhs_factor = e.tails.iter().copied().fold(0.0, f64::max);
    Ok(EtemadiResult {
        alpha,
        steps,
        lhs: e.lhs,
        rhs_factor,
        step_tails: e.tails,
        method: Method::Exact {
            outcomes,
            total_mass: e.total,
        },
    })
}

/// Both sides estimated from the same `trials` random walks. Trial `i` draws
/// its steps from its own counter-keyed stream, so the estimate does not
/// depend on how trials are split across threads.
pub fn etemadi_mc(
    dist: &StepDistribution,
    steps: u32,
    alpha: f64,
    trials: u64,
    seed: u64,
) -> Result<EtemadiResult> {
    check_inputs(steps, alpha)?;
    if trials < MIN_TRIALS {
        return Err(Error::TooFew {
            what: "Monte Carlo trials",
            min: MIN_TRIALS,
            got: trials,
        });
    }
    let n = steps as usize;
    let blocks = par_seed_blocks(0, trials, |range| {
        let mut lhs = 0u64;
        let mut tails = vec![0u64; n];
        for trial in range {
            let mut rng = keyed_stream(seed, DOMAIN_ETEMADI, 0, trial);
            let mut sum = 0.0;
            let mut reached = false;
            for tail in tails.iter_mut() {
                sum += dist.sample(&mut rng);
                let a = sum.abs();
                *tail += (a >= alpha) as u64;
                reached |= reaches_triple(a, alpha);
            }
            lhs += reached as u64;
        }
        (lhs, tails)
    });
    let mut lhs_hits = 0u64;
    let mut tail_hits = vec![0u64; n];
    for (l, t) in blocks {
        lhs_hits += l;
        for (a, b) in tail_hits.iter_mut().zip(t) {
            *a += b;
        }
    }
    let t = trials as f64;
    let se = |p: f64| (p * (1.0 - p) / t).sqrt();
    let step_tails: Vec<f64> = tail_hits.iter().map(|&c| c as f64 / t).collect();
    let (argmax, rhs_factor) =
        step_tails
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, 0.0),
                |best, (k, p)| if p > best.1 { (k, p) } else { best },
            );
    let lhs = lhs_hits as f64 / t;
    Ok(EtemadiResult {
        alpha,
        steps,
        lhs,
        rhs_factor,
        method: Method::MonteCarlo {
            trials,
            seed,
            lhs_stderr: se(lhs),
            rhs_stderr: se(step_tails[argmax]),
        },
        step_tails,
    })
}

/// `P(|N(0,1)| >= c)`.
pub fn normal_two_sided_tail(c: f64) -> f64 {
    erfc(c / SQRT_2)
}

/// Markov's inequality on the fourth power: `P(|N(0,1)| >= c) <= E[N^4] / c^4 = 3 / c^4`.
pub fn markov_fourth_moment_tail(c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::NonPositive {
            name: "c",
            value: c,
        });
    }
    Ok(3.0 / c.powi(4))
}

/// `9 a^-4 delta^2`: three times the Markov bound on
/// `P(|B(r) - B(s)| >= a)` for an increment of length `delta`.
pub fn gaussian_fourth_moment_bound(alpha: f64, delta: f64) -> Result<f64> {
    for (name, value) in [("alpha", alpha), ("delta", delta)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositive { name, value });
        }
    }
    Ok(9.0 * alpha.powi(-4) * delta * delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force over sign vectors encoded as bits, independent of the
    /// recursive walk.
    fn rademacher_by_bits(n: u32, alpha: f64) -> (f64, Vec<f64>) {
        let total = 1u64 << n;
        let mut lhs = 0u64;
        let mut tails = vec![0u64; n as usize];
        for bits in 0..total {
            let mut s = 0i64;
            let mut max = 0i64;
            for k in 0..n {
                s += if bits >> k & 1 == 1 { 1 } else { -1 };
                max = max.max(s.abs());
                if s.abs() as f64 >= alpha {
                    tails[k as usize] += 1;
                }
            }
            if max as f64 >= 3.0 * alpha {
                lhs += 1;
            }
        }
        let p = |c: u64| c as f64 / total as f64;
        (p(lhs), tails.into_iter().map(p).collect())
    }

    #[test]
    fn rademacher_three_steps() {
        let r = etemadi_exact(&StepDistribution::rademacher(), 3, 2.0 / 3.0).unwrap();
        assert_eq!(r.lhs, 0.5);
        assert_eq!(r.rhs_factor, 1.0);
        assert!(r.holds());
        let r = etemadi_exact(&StepDistribution::rademacher(), 3, 4.0).unwrap();
        assert_eq!((r.lhs, r.rhs_factor), (0.0, 0.0));
        assert!(r.holds());
    }

    #[test]
    fn enumeration_matches_bit_brute_force() {
        for n in 1..=10 {
            for alpha in [0.25, 0.5, 1.0, 1.5, 2.0, 3.0] {
                let r = etemadi_exact(&StepDistribution::rademacher(), n, alpha).unwrap();
                let (lhs, tails) = rademacher_by_bits(n, alpha);
                assert_eq!(r.lhs, lhs, "n={n} alpha={alpha}");
                assert_eq!(r.step_tails, tails);
                match r.method {
                    Method::Exact {
                        total_mass,
                        outcomes,
                    } => {
                        assert_eq!(total_mass, 1.0);
                        assert_eq!(outcomes, 1 << n);
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    #[test]
    fn single_step_is_trivial() {
        let d = StepDistribution::finite(vec![(-2.0, 0.25), (0.5, 0.5), (3.0, 0.25)]).unwrap();
        for alpha in [0.0, 0.3, 0.5, 0.9, 1.0, 2.0] {
            let r = etemadi_exact(&d, 1, alpha).unwrap();
            assert!(r.lhs <= r.rhs_factor);
            assert!(r.holds());
        }
    }

    #[test]
    fn ties_at_threshold_count() {
        // |S_1| = 3 exactly reaches 3a with a = 1.
        let d = StepDistribution::finite(vec![(3.0, 1.0)]).unwrap();
        assert_eq!(etemadi_exact(&d, 1, 1.0).unwrap().lhs, 1.0);
        assert!(reaches_triple(1.0, 1.0 / 3.0));
        assert!(reaches_triple(2.0, 2.0 / 3.0));
        assert!(!reaches_triple(2.0, 0.6666666666666667));
    }

    #[test]
    fn tails_monotone_in_alpha() {
        let d = StepDistribution::rademacher();
        let mut prev: Option<EtemadiResult> = None;
        for i in 0..40 {
            let r = etemadi_exact(&d, 8, i as f64 * 0.25).unwrap();
            if let Some(p) = prev {
                assert!(r.lhs <= p.lhs);
                assert!(r.rhs_factor <= p.rhs_factor);
            }
            prev = Some(r);
        }
    }

    #[test]
    fn rejections() {
        let big =
            StepDistribution::finite(vec![(0.0, 0.25), (1.0, 0.25), (2.0, 0.25), (3.0, 0.25)])
                .unwrap();
        assert!(matches!(
            etemadi_exact(&big, 12, 1.0),
            Err(Error::EnumerationTooLarge { .. })
        ));
        assert!(etemadi_exact(&big, 11, 1.0).is_ok());
        let normal = StepDistribution::normal(1.0).unwrap();
        assert!(matches!(
            etemadi_exact(&normal, 3, 1.0),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            etemadi_mc(&normal, 3, 1.0, 999, 0),
            Err(Error::TooFew { .. })
        ));
        assert!(StepDistribution::finite(vec![(1.0, 0.6), (2.0, 0.5)]).is_err());
        assert!(StepDistribution::finite(vec![(1.0, -0.5), (2.0, 1.5)]).is_err());
        assert!(StepDistribution::normal(0.0).is_err());
        assert!(etemadi_exact(&StepDistribution::rademacher(), 3, -1.0).is_err());
    }

    #[test]
    fn zero_alpha_monte_carlo() {
        let r = etemadi_mc(&StepDistribution::normal(1.0).unwrap(), 5, 0.0, 1000, 3).unwrap();
        assert_eq!((r.lhs, r.rhs_factor), (1.0, 1.0));
        assert!(r.holds());
    }

    #[test]
    fn fourth_moment_bounds() {
        assert_eq!(gaussian_fourth_moment_bound(1.0, 1.0).unwrap(), 9.0);
        assert!(gaussian_fourth_moment_bound(0.0, 1.0).is_err());
        assert!(gaussian_fourth_moment_bound(1.0, -1.0).is_err());
        let exact = normal_two_sided_tail(2.0);
        assert!((exact - 0.04550026389635842).abs() < 1e-10);
        assert_eq!(markov_fourth_moment_tail(2.0).unwrap(), 0.1875);
        assert!(exact <= markov_fourth_moment_tail(2.0).unwrap());
    }

    #[test]
    fn fourth_moment_bound_dominates_normal_tail() {
        for &alpha in &[0.05, 0.1, 0.3, 0.5, 1.0, 2.0, 5.0] {
            for &delta in &[1e-4f64, 1e-2, 0.125, 0.5, 1.0, 4.0] {
                let c = alpha / delta.sqrt();
                let chain = 3.0 * normal_two_sided_tail(c);
                assert!(chain <= gaussian_fourth_moment_bound(alpha, delta).unwrap());
            }
        }
    }

    #[test]
    fn short_intervals_meet_the_interval_bound() {
        use crate::stats::bounds::interval_tail_bound;
        for n in 0..12u32 {
            for &alpha in &[0.1, 0.5, 1.0, 3.0] {
                let delta = 2.0 * (-(n as f64)).exp2();
                let lhs = gaussian_fourth_moment_bound(alpha, delta).unwrap();
                let rhs = interval_tail_bound(n, alpha).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs);
                let shorter = gaussian_fourth_moment_bound(alpha, delta * 0.75).unwrap();
                assert!(shorter <= rhs);
            }
        }
    }
}
