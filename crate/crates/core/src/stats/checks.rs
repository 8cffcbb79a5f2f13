//! Law checks on an [`Ensemble`]: moments, the `min(s, t)` covariance,
//! independence and stationarity of increments, and Gaussian marginals.

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::stats::ensemble::Ensemble;
use crate::stats::ks::{ks_one_sample, ks_two_sample, standard_normal_cdf, KsOutcome};
use crate::stats::report::{CheckRecord, Relation};

/// Width of every moment band, in standard errors.
pub const BAND_SIGMAS: f64 = 4.0;

/// Significance level of every KS test.
pub const KS_SIGNIFICANCE: f64 = 0.01;

/// Smallest sample for which the asymptotic KS distribution is used.
pub const MIN_KS_SAMPLES: u64 = 1000;

fn size(ens: &Ensemble) -> f64 {
    ens.moments().count() as f64
}

fn seeds(ens: &Ensemble) -> String {
    ens.config().seed_range()
}

/// Sample mean of `B(r)` against 0; band `4 sqrt(r / N)`.
pub fn check_mean(ens: &Ensemble, r: Dyadic) -> Result<CheckRecord> {
    let i = ens.probe(r)?;
    let m = ens.moments();
    let band = BAND_SIGMAS * (r.value() / size(ens)).sqrt();
    Ok(CheckRecord::compare(
        "mean",
        format!("E[B({r})]"),
        Relation::Within,
        0.0,
        m.mean(i),
        Some(m.mean_stderr(i)?),
        band,
    )
    .with_samples(m.count())
    .with_seeds(seeds(ens)))
}

/// Sample variance of `B(r)` against `r`; band `4 r sqrt(2 / N)` from the
/// variance of a normal sample variance.
pub fn check_variance(ens: &Ensemble, r: Dyadic) -> Result<CheckRecord> {
    let i = ens.probe(r)?;
    let m = ens.moments();
    let target = r.value();
    let stderr = target * (2.0 / size(ens)).sqrt();
    Ok(CheckRecord::compare(
        "variance",
        format!("Var(B({r}))"),
        Relation::Within,
        target,
        m.variance(i)?,
        Some(stderr),
        BAND_SIGMAS * stderr,
    )
    .with_samples(m.count())
    .with_seeds(seeds(ens)))
}

/// Sample covariance of `B(s)` and `B(t)` against `min(s, t)`, within four
/// empirical standard errors.
pub fn check_covariance(ens: &Ensemble, s: Dyadic, t: Dyadic) -> Result<CheckRecord> {
    let (i, j) = (ens.probe(s)?, ens.probe(t)?);
    let m = ens.moments();
    let stderr = m.covariance_stderr(i, j)?;
    Ok(CheckRecord::compare(
        "covariance",
        format!("Cov(B({s}),B({t}))"),
        Relation::Within,
        s.min(t).value(),
        m.covariance(i, j)?,
        Some(stderr),
        BAND_SIGMAS * stderr,
    )
    .with_samples(m.count())
    .with_seeds(seeds(ens)))
}

/// `Cov(B(r2) - B(r1), B(r4) - B(r3))` by bilinear expansion of `min`.
pub fn increment_covariance_oracle(r1: Dyadic, r2: Dyadic, r3: Dyadic, r4: Dyadic) -> f64 {
    let c = |a: Dyadic, b: Dyadic| a.min(b).value();
    c(r2, r4) - c(r2, r3) - c(r1, r4) + c(r1, r3)
}

/// Correlation of the increments over `[r1, r2]` and `[r3, r4]` against 0,
/// band `4 / sqrt(N)`. Requires `r1 < r2 <= r3 < r4`.
pub fn check_increment_independence(
    ens: &Ensemble,
    r1: Dyadic,
    r2: Dyadic,
    r3: Dyadic,
    r4: Dyadic,
) -> Result<CheckRecord> {
    if !(r1 < r2 && r2 <= r3 && r3 < r4) {
        return Err(Error::Ordering(format!(
            "need r1 < r2 <= r3 < r4, got {r1}, {r2}, {r3}, {r4}"
        )));
    }
    let [a, b, c, d] = [r1, r2, r3, r4].map(|r| ens.probe(r));
    let (a, b, c, d) = (a?, b?, c?, d?);
    let m = ens.moments();
    let cov = |i, j| m.covariance(i, j);
    let cross = cov(b, d)? - cov(b, c)? - cov(a, d)? + cov(a, c)?;
    let var_left = cov(b, b)? + cov(a, a)? - 2.0 * cov(a, b)?;
    let var_right = cov(d, d)? + cov(c, c)? - 2.0 * cov(c, d)?;
    let corr = cross / (var_left * var_right).sqrt();
    let stderr = 1.0 / size(ens).sqrt();
    Ok(CheckRecord::compare(
        "increment_independence",
        format!("Corr(B({r2})-B({r1}),B({r4})-B({r3}))"),
        Relation::Within,
        increment_covariance_oracle(r1, r2, r3, r4),
        corr,
        Some(stderr),
        BAND_SIGMAS * stderr,
    )
    .with_samples(m.count())
    .with_seeds(seeds(ens)))
}

fn ks_record(check: &str, quantity: String, outcome: KsOutcome, samples: u64) -> CheckRecord {
    let mut rec = CheckRecord::compare(
        check,
        quantity,
        Relation::Within,
        0.0,
        outcome.statistic,
        None,
        outcome.critical_statistic(KS_SIGNIFICANCE),
    );
    rec.pass = !outcome.rejects(KS_SIGNIFICANCE);
    rec.p_value = Some(outcome.p_value);
    rec.with_samples(samples)
}

fn need_ks_samples(n: usize) -> Result<()> {
    if (n as u64) < MIN_KS_SAMPLES {
        return Err(Error::TooFew {
            what: "retained samples for a KS test",
            min: MIN_KS_SAMPLES,
            got: n as u64,
        });
    }
    Ok(())
}

/// Two-sample KS between `B(r2) - B(r1)` and `B(r2 - r1)` over the retained
/// samples. Passes unless rejected at [`KS_SIGNIFICANCE`].
pub fn check_stationarity(ens: &Ensemble, r1: Dyadic, r2: Dyadic) -> Result<CheckRecord> {
    let lag = r2
        .checked_sub(&r1)
        .filter(|_| r1 < r2)
        .ok_or_else(|| Error::Ordering(format!("need r1 < r2, got {r1}, {r2}")))?;
    let (left, right) = (ens.samples(r1)?, ens.samples(r2)?);
    let lagged = ens.samples(lag)?;
    need_ks_samples(left.len())?;
    let increments: Vec<f64> = right.iter().zip(left).map(|(b, a)| b - a).collect();
    let outcome = ks_two_sample(&increments, lagged);
    Ok(ks_record(
        "stationarity",
        format!("B({r2})-B({r1}) vs B({lag})"),
        outcome,
        increments.len() as u64,
    )
    .with_seeds(seeds(ens)))
}

/// Sample variance of `B(r2) - B(r1)` against `r2 - r1`; band as for
/// [`check_variance`].
pub fn check_increment_variance(ens: &Ensemble, r1: Dyadic, r2: Dyadic) -> Result<CheckRecord> {
    let lag = r2
        .checked_sub(&r1)
        .filter(|_| r1 < r2)
        .ok_or_else(|| Error::Ordering(format!("need r1 < r2, got {r1}, {r2}")))?;
    let (i, j) = (ens.probe(r1)?, ens.probe(r2)?);
    let m = ens.moments();
    let var = m.covariance(j, j)? + m.covariance(i, i)? - 2.0 * m.covariance(i, j)?;
    let target = lag.value();
    let stderr = target * (2.0 / size(ens)).sqrt();
    Ok(CheckRecord::compare(
        "increment_variance",
        format!("Var(B({r2})-B({r1}))"),
        Relation::Within,
        target,
        var,
        Some(stderr),
        BAND_SIGMAS * stderr,
    )
    .with_samples(m.count())
    .with_seeds(seeds(ens)))
}

/// One-sample KS of `B(r) / sqrt(r)` against the standard normal.
pub fn check_marginal_normal(ens: &Ensemble, r: Dyadic) -> Result<CheckRecord> {
    if r == Dyadic::ZERO {
        return Err(Error::InvalidArgument("B(0) is degenerate".into()));
    }
    let samples = ens.samples(r)?;
    need_ks_samples(samples.len())?;
    let scale = r.value().sqrt();
    let scaled: Vec<f64> = samples.iter().map(|x| x / scale).collect();
    let outcome = ks_one_sample(&scaled, standard_normal_cdf);
    Ok(ks_record(
        "marginal_normal",
        format!("B({r})/sqrt({r}) vs N(0,1)"),
        outcome,
        scaled.len() as u64,
    )
    .with_seeds(seeds(ens)))
}
