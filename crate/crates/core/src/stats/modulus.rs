//! The local oscillation statistics
//! `M_{k,n} = sup |B(r) - B(k/2^n)|` over dyadic `r` in `[k/2^n, (k+2)/2^n]`
//! and `M_n = max_{k <= (n+1) 2^n} M_{k,n}`.
//!
//! The supremum is taken over the grid points of the measured path, so a path
//! at level `m` gives a lower bound on the true value that can only grow as
//! `m` increases.

use crate::error::{Error, Result};
use crate::etemadi::reaches_triple;
use crate::noise::NoiseSource;
use crate::path::DyadicPath;
use crate::stats::ensemble::{par_seed_blocks, EnsembleConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusStat {
    pub n: u32,
    /// Level of the grid the suprema were taken over.
    pub measurement_level: u32,
    /// `M_{k,n}` for `k = 0..=(n+1) 2^n`.
    pub per_interval: Vec<f64>,
    pub aggregate: f64,
}

impl ModulusStat {
    /// Always true: a finite grid never exceeds the supremum over all dyadics.
    pub fn is_lower_bound(&self) -> bool {
        true
    }
}

/// Number of intervals entering `M_n`.
pub fn interval_count(n: u32) -> u64 {
    ((n as u64 + 1) << n) + 1
}

/// Smallest horizon containing every `I_{k,n}` with `k <= (n+1) 2^n`.
pub fn required_horizon(n: u32) -> u64 {
    (((n as u64 + 1) << n) + 2).div_ceil(1 << n)
}

fn validate(path: &DyadicPath, n: u32) -> Result<()> {
    if n > 24 {
        return Err(Error::InvalidArgument(format!(
            "modulus level {n} is too fine"
        )));
    }
    if path.level() < n {
        return Err(Error::InsufficientLevel {
            n,
            level: path.level(),
        });
    }
    let required = required_horizon(n);
    if path.horizon() < required {
        return Err(Error::InsufficientHorizon {
            n,
            required,
            horizon: path.horizon(),
        });
    }
    Ok(())
}

pub fn compute_modulus(path: &DyadicPath, n: u32) -> Result<ModulusStat> {
    validate(path, n)?;
    let stride = 1usize << (path.level() - n);
    let values = path.values();
    let per_interval: Vec<f64> = (0..interval_count(n) as usize)
        .map(|k| {
            let start = k * stride;
            let base = values[start];
            values[start..=start + 2 * stride]
                .iter()
                .fold(0.0f64, |acc, v| acc.max((v - base).abs()))
        })
        .collect();
    let aggregate = per_interval.iter().copied().fold(0.0, f64::max);
    Ok(ModulusStat {
        n,
        measurement_level: path.level(),
        per_interval,
        aggregate,
    })
}

/// Exceedance counts of `M_{k,n} >= 3a` and `M_n >= 3a` across an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusTailEstimate {
    pub n: u32,
    pub alpha: f64,
    pub measurement_level: u32,
    pub paths: u64,
    pub interval_exceedances: Vec<u64>,
    pub aggregate_exceedances: u64,
}

impl ModulusTailEstimate {
    pub fn interval_probability(&self, k: usize) -> f64 {
        self.interval_exceedances[k] as f64 / self.paths as f64
    }

    pub fn max_interval_probability(&self) -> f64 {
        (0..self.interval_exceedances.len())
            .map(|k| self.interval_probability(k))
            .fold(0.0, f64::max)
    }

    /// Sum over `k` of the estimated `P(M_{k,n} >= 3a)`.
    pub fn interval_probability_sum(&self) -> f64 {
        self.interval_exceedances.iter().sum::<u64>() as f64 / self.paths as f64
    }

    pub fn aggregate_probability(&self) -> f64 {
        self.aggregate_exceedances as f64 / self.paths as f64
    }
}

/// Measures `M_{k,n}` on `config.paths` paths at level `config.level` and
/// counts exceedances for every `alpha`.
pub fn estimate_modulus_tails<S, F>(
    config: EnsembleConfig,
    n: u32,
    alphas: &[f64],
    noise: F,
) -> Result<Vec<ModulusTailEstimate>>
where
    S: NoiseSource,
    F: Fn(u64) -> S + Sync,
{
    config.validate()?;
    if let Some(&a) = alphas.iter().find(|a| !a.is_finite() || **a < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be finite and >= 0, got {a}"
        )));
    }
    if n > 24 {
        return Err(Error::InvalidArgument(format!(
            "modulus level {n} is too fine"
        )));
    }
    if config.level < n {
        return Err(Error::InsufficientLevel {
            n,
            level: config.level,
        });
    }
    let required = required_horizon(n);
    if config.horizon < required {
        return Err(Error::InsufficientHorizon {
            n,
            required,
            horizon: config.horizon,
        });
    }
    crate::path::grid_len(config.horizon, config.level)?;

    let intervals = interval_count(n) as usize;
    let blocks = par_seed_blocks(config.base_seed, config.paths, |seeds| {
        let mut per = vec![vec![0u64; intervals]; alphas.len()];
        let mut agg = vec![0u64; alphas.len()];
        for seed in seeds {
            let path = DyadicPath::build(config.horizon, config.level, &noise(seed))?;
            let stat = compute_modulus(&path, n)?;
            for (a, &alpha) in alphas.iter().enumerate() {
                for (k, &m) in stat.per_interval.iter().enumerate() {
                    per[a][k] += reaches_triple(m, alpha) as u64;
                }
                agg[a] += reaches_triple(stat.aggregate, alpha) as u64;
            }
        }
        Ok::<_, Error>((per, agg))
    });

    let mut out: Vec<ModulusTailEstimate> = alphas
        .iter()
        .map(|&alpha| ModulusTailEstimate {
            n,
            alpha,
            measurement_level: config.level,
            paths: config.paths,
            interval_exceedances: vec![0; intervals],
            aggregate_exceedances: 0,
        })
        .collect();
    for block in blocks {
        let (per, agg) = block?;
        for (est, (p, g)) in out.iter_mut().zip(per.into_iter().zip(agg)) {
            for (total, c) in est.interval_exceedances.iter_mut().zip(p) {
                *total += c;
            }
            est.aggregate_exceedances += g;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{zero_noise, CounterNoise};

    #[test]
    fn required_horizons() {
        assert_eq!(required_horizon(0), 3);
        assert_eq!(required_horizon(1), 3);
        assert_eq!(required_horizon(2), 4);
        assert_eq!(required_horizon(5), 7);
        assert_eq!(interval_count(2), 13);
    }

    #[test]
    fn four_point_example() {
        let path = DyadicPath::from_values(3, 0, 0, vec![0.0, 1.0, 0.0, 2.0]).unwrap();
        let stat = compute_modulus(&path, 0).unwrap();
        assert_eq!(stat.per_interval, vec![1.0, 1.0]);
        assert_eq!(stat.aggregate, 1.0);
        assert_eq!(stat.measurement_level, 0);
    }

    #[test]
    fn zero_path_has_zero_modulus() {
        let path = DyadicPath::build(4, 6, &zero_noise(0)).unwrap();
        let stat = compute_modulus(&path, 2).unwrap();
        assert!(stat.per_interval.iter().all(|&m| m == 0.0));
        assert_eq!(stat.aggregate, 0.0);
    }

    #[test]
    fn rejects_short_or_coarse_paths() {
        let coarse = DyadicPath::build(4, 1, &CounterNoise::new(0)).unwrap();
        assert!(matches!(
            compute_modulus(&coarse, 2),
            Err(Error::InsufficientLevel { .. })
        ));
        let short = DyadicPath::build(3, 4, &CounterNoise::new(0)).unwrap();
        assert_eq!(
            compute_modulus(&short, 2),
            Err(Error::InsufficientHorizon {
                n: 2,
                required: 4,
                horizon: 3
            })
        );
    }

    #[test]
    fn finer_measurement_never_decreases() {
        let src = CounterNoise::new(31);
        let fine = DyadicPath::build(4, 9, &src).unwrap();
        let mut prev: Option<ModulusStat> = None;
        for m in 2..=9 {
            let stat = compute_modulus(&fine.downsample(m).unwrap(), 2).unwrap();
            if let Some(p) = prev {
                for (a, b) in p.per_interval.iter().zip(&stat.per_interval) {
                    assert!(b >= a);
                }
            }
            prev = Some(stat);
        }
    }

    #[test]
    fn union_bound_holds_for_counts() {
        let est = estimate_modulus_tails(
            EnsembleConfig::new(4, 6, 600, 0),
            2,
            &[0.1, 0.3, 0.5],
            CounterNoise::new,
        )
        .unwrap();
        for e in &est {
            assert!(e.aggregate_probability() <= e.interval_probability_sum());
            assert!(e.aggregate_probability() >= e.max_interval_probability());
        }
        // Larger alpha, fewer exceedances.
        assert!(est[0].aggregate_exceedances >= est[1].aggregate_exceedances);
        assert!(est[1].aggregate_exceedances >= est[2].aggregate_exceedances);
    }

    #[test]
    fn zero_noise_never_exceeds() {
        let est = estimate_modulus_tails(EnsembleConfig::new(4, 5, 50, 0), 2, &[0.5], zero_noise)
            .unwrap();
        assert_eq!(est[0].aggregate_exceedances, 0);
        assert!(est[0].interval_exceedances.iter().all(|&c| c == 0));
    }
}
