//! The registered verification suites.
//!
//! Parameters live in `defaults.toml`, compiled into the crate so that a
//! passing run is a fixed claim rather than a tunable one.

use std::io::{self, Write};

use serde::{Deserialize, Deserializer};
use serde_json::{json, Value};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::etemadi::{etemadi_exact, etemadi_mc, EtemadiResult, Method, StepDistribution};
use crate::noise::{CounterNoise, NoiseSource};
use crate::stats::bounds::{
    interval_tail_bound, modulus_tail_term, summarize_modulus_series, union_tail_bound,
};
use crate::stats::checks::{self, BAND_SIGMAS, KS_SIGNIFICANCE};
use crate::stats::ensemble::{Ensemble, EnsembleConfig};
use crate::stats::modulus::{estimate_modulus_tails, required_horizon};
use crate::stats::report::{CheckRecord, Relation, StatReport};

pub const DEFAULTS_TOML: &str = include_str!("../defaults.toml");

/// Fewest paths the law suite accepts.
pub const MIN_LAW_PATHS: u64 = 1000;

/// Relative size below which the series remainder counts as converged.
pub const SERIES_TOLERANCE: f64 = 1e-12;

/// Parses `p/q`, or anything `f64` parses.
pub fn parse_real(s: &str) -> Result<f64> {
    let bad = || Error::InvalidArgument(format!("cannot parse {s:?} as a number"));
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            p / q
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn reals<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| parse_real(s).map_err(serde::de::Error::custom))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Defaults {
    pub version: u32,
    pub law: LawSuite,
    pub modulus: ModulusSuite,
    pub etemadi: EtemadiSuite,
}

impl Defaults {
    pub fn registered() -> Self {
        Self::parse(DEFAULTS_TOML).expect("shipped defaults parse")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Defaults(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LawSuite {
    pub base_seed: u64,
    pub paths: u64,
    pub horizon: u64,
    pub level: u32,
    /// KS tests use the first `ks_paths` seeds; moment checks use all of them.
    pub ks_paths: u64,
    pub covariance_points: Vec<Dyadic>,
    pub marginal_points: Vec<Dyadic>,
    pub increment_quadruples: Vec<[Dyadic; 4]>,
}

impl LawSuite {
    /// Every time any check in the suite reads.
    pub fn probes(&self) -> Result<Vec<Dyadic>> {
        let mut probes = vec![Dyadic::ZERO];
        probes.extend(&self.covariance_points);
        probes.extend(&self.marginal_points);
        for q in &self.increment_quadruples {
            probes.extend(q);
            let lag = q[3]
                .checked_sub(&q[2])
                .ok_or_else(|| Error::Ordering(format!("{} > {}", q[2], q[3])))?;
            probes.push(lag);
        }
        probes.sort();
        probes.dedup();
        Ok(probes)
    }

    pub fn config(&self) -> EnsembleConfig {
        EnsembleConfig::new(self.horizon, self.level, self.paths, self.base_seed)
    }

    pub fn ks_config(&self) -> EnsembleConfig {
        EnsembleConfig::new(
            self.horizon,
            self.level,
            self.paths.min(self.ks_paths),
            self.base_seed,
        )
    }

    pub fn run(&self) -> Result<StatReport> {
        self.run_with(CounterNoise::new)
    }

    pub fn run_with<S, F>(&self, noise: F) -> Result<StatReport>
    where
        S: NoiseSource,
        F: Fn(u64) -> S + Sync,
    {
        if self.paths < MIN_LAW_PATHS {
            return Err(Error::TooFew {
                what: "paths for the law suite",
                min: MIN_LAW_PATHS,
                got: self.paths,
            });
        }
        if self.ks_paths < MIN_LAW_PATHS {
            return Err(Error::TooFew {
                what: "KS paths for the law suite",
                min: MIN_LAW_PATHS,
                got: self.ks_paths,
            });
        }
        let probes = self.probes()?;
        let ens = Ensemble::generate_with(self.config(), &probes, false, &noise)?;
        let ks = Ensemble::generate_with(self.ks_config(), &probes, true, &noise)?;
        let mut report = StatReport::new("law");
        report
            .echo("base_seed", self.base_seed)
            .echo("paths", self.paths)
            .echo("seeds", ens.config().seed_range())
            .echo("horizon", self.horizon)
            .echo("level", self.level)
            .echo("generator", ens.generator_id())
            .echo("band_sigmas", BAND_SIGMAS)
            .echo("ks_significance", KS_SIGNIFICANCE)
            .echo("ks_paths", ks.config().paths)
            .echo("ks_seeds", ks.config().seed_range())
            .echo("covariance_points", json!(self.covariance_points))
            .echo("marginal_points", json!(self.marginal_points))
            .echo("increment_quadruples", json!(self.increment_quadruples));

        for &s in &self.covariance_points {
            for &t in &self.covariance_points {
                report.push(checks::check_covariance(&ens, s, t)?);
            }
        }
        for &r in &self.marginal_points {
            report.push(checks::check_mean(&ens, r)?);
            report.push(checks::check_variance(&ens, r)?);
            report.push(checks::check_marginal_normal(&ks, r)?);
        }
        for &[r1, r2, r3, r4] in &self.increment_quadruples {
            report.push(checks::check_increment_independence(&ens, r1, r2, r3, r4)?);
            report.push(checks::check_stationarity(&ks, r3, r4)?);
            report.push(checks::check_increment_variance(&ens, r3, r4)?);
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ModulusSuite {
    pub base_seed: u64,
    pub paths: u64,
    pub levels: Vec<u32>,
    pub measurement_level: u32,
    #[serde(default)]
    pub horizon: Option<u64>,
    #[serde(deserialize_with = "reals")]
    pub alphas: Vec<f64>,
    pub series_max: u32,
}

impl ModulusSuite {
    /// The explicit horizon, or the smallest one every level needs.
    pub fn horizon(&self) -> u64 {
        self.horizon.unwrap_or_else(|| {
            self.levels
                .iter()
                .map(|&n| required_horizon(n))
                .max()
                .unwrap_or(1)
        })
    }

    pub fn run(&self) -> Result<StatReport> {
        self.run_with(CounterNoise::new)
    }

    pub fn run_with<S, F>(&self, noise: F) -> Result<StatReport>
    where
        S: NoiseSource,
        F: Fn(u64) -> S + Sync,
    {
        if self.alphas.is_empty() || self.levels.is_empty() {
            return Err(Error::InvalidArgument(
                "modulus suite needs levels and alphas".into(),
            ));
        }
        if let Some(&a) = self.alphas.iter().find(|&&a| !a.is_finite() || a <= 0.0) {
            return Err(Error::NonPositive {
                name: "alpha",
                value: a,
            });
        }
        let horizon = self.horizon();
        let config =
            EnsembleConfig::new(horizon, self.measurement_level, self.paths, self.base_seed);
        let generator = noise(self.base_seed).generator_id().to_string();
        let mut report = StatReport::new("modulus");
        report
            .echo("base_seed", self.base_seed)
            .echo("paths", self.paths)
            .echo("seeds", config.seed_range())
            .echo("horizon", horizon)
            .echo("levels", json!(self.levels))
            .echo("measurement_level", self.measurement_level)
            .echo("alphas", json!(self.alphas))
            .echo("series_max", self.series_max)
            .echo("generator", generator);

        let note = format!(
            "suprema over the level-{} grid; the true statistic is at least the estimate",
            self.measurement_level
        );
        for &n in &self.levels {
            for est in estimate_modulus_tails(config, n, &self.alphas, &noise)? {
                let a = est.alpha;
                let samples = est.paths;
                report.push(
                    CheckRecord::compare(
                        "interval_tail",
                        format!("max_k P(M_k,{n} >= 3*{a})"),
                        Relation::AtMost,
                        interval_tail_bound(n, a)?,
                        est.max_interval_probability(),
                        None,
                        0.0,
                    )
                    .with_samples(samples)
                    .with_seeds(config.seed_range())
                    .with_note(note.clone()),
                );
                report.push(
                    CheckRecord::compare(
                        "modulus_tail",
                        format!("P(M_{n} >= 3*{a})"),
                        Relation::AtMost,
                        union_tail_bound(n, a)?,
                        est.aggregate_probability(),
                        None,
                        0.0,
                    )
                    .with_samples(samples)
                    .with_seeds(config.seed_range())
                    .with_note(note.clone()),
                );
                report.push(
                    CheckRecord::compare(
                        "union_consistency",
                        format!("P(M_{n} >= 3*{a}) vs sum_k P(M_k,{n} >= 3*{a})"),
                        Relation::AtMost,
                        est.interval_probability_sum(),
                        est.aggregate_probability(),
                        None,
                        0.0,
                    )
                    .with_samples(samples)
                    .with_seeds(config.seed_range()),
                );
            }
        }
        report.push(series_record(self.series_max)?);
        Ok(report)
    }
}

fn series_record(n_max: u32) -> Result<CheckRecord> {
    let s = summarize_modulus_series(n_max)?;
    let relative = s.remainder_bound / s.total();
    let mut rec = CheckRecord::compare(
        "series_convergence",
        format!("remainder / partial sum of 2916(n+1)n^4 2^-n, n <= {n_max}"),
        Relation::AtMost,
        SERIES_TOLERANCE,
        relative,
        None,
        0.0,
    )
    .with_note(format!(
        "partial sum {:e}; terms decrease from n = {}; final ratio {:.6}",
        s.total(),
        s.decreasing_from,
        s.final_ratio
    ));
    rec.pass = rec.pass && s.converged(SERIES_TOLERANCE);
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EtemadiSuite {
    pub base_seed: u64,
    #[serde(deserialize_with = "reals")]
    pub alphas: Vec<f64>,
    pub exact_max_steps: u32,
    pub gaussian_steps: Vec<u32>,
    pub trials: u64,
    pub crosscheck_steps: u32,
}

fn etemadi_record(label: &str, r: &EtemadiResult) -> CheckRecord {
    let se = r.combined_stderr();
    let mut rec = CheckRecord::compare(
        label,
        format!("n={} alpha={}", r.steps, r.alpha),
        Relation::AtMost,
        3.0 * r.rhs_factor,
        r.lhs,
        Some(se),
        EtemadiResult::MC_SIGMAS * se,
    );
    rec.pass = r.holds();
    if let Method::MonteCarlo { trials, .. } = r.method {
        rec = rec.with_samples(trials);
    }
    rec
}

impl EtemadiSuite {
    pub fn run(&self) -> Result<StatReport> {
        if self.alphas.is_empty() {
            return Err(Error::InvalidArgument("empty alpha grid".into()));
        }
        let mut report = StatReport::new("etemadi");
        report
            .echo("base_seed", self.base_seed)
            .echo("alphas", json!(self.alphas))
            .echo("exact_max_steps", self.exact_max_steps)
            .echo("gaussian_steps", json!(self.gaussian_steps))
            .echo("trials", self.trials)
            .echo("crosscheck_steps", self.crosscheck_steps)
            .echo("mc_sigmas", EtemadiResult::MC_SIGMAS);

        let rademacher = StepDistribution::rademacher();
        for n in 1..=self.exact_max_steps {
            for &a in &self.alphas {
                let r = etemadi_exact(&rademacher, n, a)?;
                report.push(etemadi_record("etemadi_exact_rademacher", &r));
            }
        }
        let normal = StepDistribution::normal(1.0)?;
        for &n in &self.gaussian_steps {
            for &a in &self.alphas {
                let r = etemadi_mc(&normal, n, a, self.trials, self.base_seed)?;
                report.push(
                    etemadi_record("etemadi_mc_gaussian", &r)
                        .with_seeds(format!("stream seed {}", self.base_seed)),
                );
            }
        }
        if self.crosscheck_steps > 0 {
            for &a in &self.alphas {
                for rec in mc_crosscheck(self.crosscheck_steps, a, self.trials, self.base_seed)? {
                    report.push(rec);
                }
            }
        }
        Ok(report)
    }
}

/// Monte Carlo estimates of both sides for Rademacher steps against the
/// enumerated values, each within four standard errors.
pub fn mc_crosscheck(steps: u32, alpha: f64, trials: u64, seed: u64) -> Result<[CheckRecord; 2]> {
    let dist = StepDistribution::rademacher();
    let exact = etemadi_exact(&dist, steps, alpha)?;
    let mc = etemadi_mc(&dist, steps, alpha, trials, seed)?;
    let Method::MonteCarlo {
        lhs_stderr,
        rhs_stderr,
        ..
    } = mc.method
    else {
        unreachable!("etemadi_mc returns Monte Carlo results")
    };
    let rec = |side: &str, target: f64, estimate: f64, se: f64| {
        CheckRecord::compare(
            "etemadi_mc_vs_exact",
            format!("{side} rademacher n={steps} alpha={alpha}"),
            Relation::Within,
            target,
            estimate,
            Some(se),
            BAND_SIGMAS * se,
        )
        .with_samples(trials)
    };
    Ok([
        rec("lhs", exact.lhs, mc.lhs, lhs_stderr),
        rec("rhs_factor", exact.rhs_factor, mc.rhs_factor, rhs_stderr),
    ])
}

/// Evaluated bound terms for `n` in a range.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsTable {
    pub alphas: Vec<f64>,
    pub rows: Vec<BoundsRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub n: u32,
    pub modulus_tail_term: f64,
    /// Sum of the series terms from 1 to `n`.
    pub partial_sum: f64,
    pub interval_tail_bounds: Vec<f64>,
}

pub fn bounds_table(n_min: u32, n_max: u32, alphas: &[f64]) -> Result<BoundsTable> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n_min <= n_max, got {n_min}..={n_max}"
        )));
    }
    let mut partial = 0.0;
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let term = modulus_tail_term(n)?;
        partial += term;
        if n >= n_min {
            rows.push(BoundsRow {
                n,
                modulus_tail_term: term,
                partial_sum: partial,
                interval_tail_bounds: alphas
                    .iter()
                    .map(|&a| interval_tail_bound(n, a))
                    .collect::<Result<_>>()?,
            });
        }
    }
    Ok(BoundsTable {
        alphas: alphas.to_vec(),
        rows,
    })
}

impl BoundsTable {
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> io::Result<()> {
        for line in comments {
            writeln!(w, "# {line}")?;
        }
        write!(w, "n,modulus_tail_term,partial_sum")?;
        for a in &self.alphas {
            write!(w, ",interval_tail_bound@{a}")?;
        }
        writeln!(w)?;
        for row in &self.rows {
            write!(
                w,
                "{},{:.16e},{:.16e}",
                row.n, row.modulus_tail_term, row.partial_sum
            )?;
            for b in &row.interval_tail_bounds {
                write!(w, ",{b:.16e}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "alphas": self.alphas,
            "rows": self.rows.iter().map(|r| json!({
                "n": r.n,
                "modulus_tail_term": r.modulus_tail_term,
                "partial_sum": r.partial_sum,
                "interval_tail_bounds": r.interval_tail_bounds,
            })).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registered_defaults_parse() {
        let d = Defaults::registered();
        assert_eq!(d.version, 2);
        assert_eq!((d.law.paths, d.law.horizon, d.law.level), (100_000, 2, 6));
        assert_eq!(d.law.increment_quadruples.len(), 6);
        for q in &d.law.increment_quadruples {
            assert!(q[0] < q[1] && q[1] <= q[2] && q[2] < q[3]);
        }
        assert_eq!(d.modulus.alphas, vec![0.5, 0.75, 1.0]);
        assert_eq!(d.modulus.horizon(), 4);
        assert_eq!(d.etemadi.alphas[0], 1.0 / 3.0);
    }

    #[test]
    fn parse_reals() {
        assert_eq!(parse_real("3/4").unwrap(), 0.75);
        assert_eq!(parse_real(" 2 ").unwrap(), 2.0);
        assert!(parse_real("x").is_err());
        assert!(parse_real("1/0").is_err());
    }

    #[test]
    fn small_law_suite_runs() {
        let mut suite = Defaults::registered().law;
        suite.paths = 2000;
        let report = suite.run().unwrap();
        assert_eq!(report.records.len(), 9 + 4 * 3 + 6 * 3);
        suite.paths = 999;
        assert!(matches!(suite.run(), Err(Error::TooFew { .. })));
        suite.paths = 2000;
        suite.ks_paths = 999;
        assert!(matches!(suite.run(), Err(Error::TooFew { .. })));
    }

    #[test]
    fn bounds_table_rows() {
        let t = bounds_table(1, 30, &[1.0]).unwrap();
        assert_eq!(t.rows.len(), 30);
        assert_eq!(t.rows[9].modulus_tail_term, 313242.1875);
        assert_eq!(t.rows[3].interval_tail_bounds[0], 0.140625);
        assert!(bounds_table(0, 3, &[]).is_err());
        let mut buf = Vec::new();
        bounds_table(2, 3, &[0.5, 1.0])
            .unwrap()
            .write_csv(&mut buf, &[])
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "n,modulus_tail_term,partial_sum,interval_tail_bound@0.5,interval_tail_bound@1\n2,"
        ));
    }
}
