//! Many independent paths, one per seed, summarised at a set of probe times.
//!
//! Seeds are processed in fixed-size blocks. Blocks may run on any thread,
//! but their partial results are merged in seed order, so the accumulators
//! do not depend on the number of workers.

use rayon::prelude::*;

use crate::dyadic::{canonicalize, Dyadic};
use crate::error::{Error, Result};
use crate::noise::{CounterNoise, NoiseSource};
use crate::path::DyadicPath;
use crate::stats::accumulator::CrossMoments;

/// Seeds per work unit.
pub const BLOCK_SIZE: u64 = 512;

/// Retained samples per probe before deterministic subsampling kicks in.
pub const RETAIN_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub horizon: u64,
    pub level: u32,
    pub paths: u64,
    pub base_seed: u64,
}

impl EnsembleConfig {
    pub fn new(horizon: u64, level: u32, paths: u64, base_seed: u64) -> Self {
        Self {
            horizon,
            level,
            paths,
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::EmptyHorizon);
        }
        if self.paths == 0 {
            return Err(Error::TooFew {
                what: "paths",
                min: 1,
                got: 0,
            });
        }
        self.base_seed
            .checked_add(self.paths - 1)
            .ok_or(Error::SeedOverflow {
                base: self.base_seed,
                count: self.paths,
            })?;
        Ok(())
    }

    /// `base..base+N` in the form echoed into reports.
    pub fn seed_range(&self) -> String {
        format!(
            "{}..{}",
            self.base_seed,
            self.base_seed as u128 + self.paths as u128
        )
    }
}

/// Runs `work` over consecutive seed blocks and returns the results in seed
/// order.
pub fn par_seed_blocks<T, F>(base_seed: u64, count: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync,
{
    let blocks = count.div_ceil(BLOCK_SIZE);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_SIZE;
            let end = (start + BLOCK_SIZE).min(count);
            work(base_seed + start..base_seed + end)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    config: EnsembleConfig,
    probes: Vec<Dyadic>,
    indices: Vec<usize>,
    moments: CrossMoments,
    retained: Option<Vec<Vec<f64>>>,
    retain_stride: u64,
    generator_id: String,
}

struct Partial {
    moments: CrossMoments,
    retained: Vec<Vec<f64>>,
    generator_id: String,
}

/// Realises `N` paths from seeds `base_seed..base_seed+N` with default probes.
///
/// The default probes are the level-`min(n, 3)` grid over `[0, T]`.
pub fn generate_ensemble(horizon: u64, level: u32, paths: u64, base_seed: u64) -> Result<Ensemble> {
    let probe_level = level.min(3);
    let probes: Vec<Dyadic> = (0..=horizon << probe_level)
        .map(|k| canonicalize(k, probe_level))
        .collect();
    Ensemble::generate(
        EnsembleConfig::new(horizon, level, paths, base_seed),
        &probes,
        true,
    )
}

impl Ensemble {
    pub fn generate(config: EnsembleConfig, probes: &[Dyadic], retain: bool) -> Result<Self> {
        Self::generate_with(config, probes, retain, CounterNoise::new)
    }

    /// As [`generate`](Self::generate), with the noise for each seed built by
    /// `noise`.
    pub fn generate_with<S, F>(
        config: EnsembleConfig,
        probes: &[Dyadic],
        retain: bool,
        noise: F,
    ) -> Result<Self>
    where
        S: NoiseSource,
        F: Fn(u64) -> S + Sync,
    {
        config.validate()?;
        let mut probes = probes.to_vec();
        probes.sort();
        probes.dedup();
        let limit = config.horizon << config.level;
        let indices = probes
            .iter()
            .map(|p| {
                p.grid_index(config.level)
                    .filter(|&k| k <= limit)
                    .map(|k| k as usize)
                    .ok_or(Error::OffGrid {
                        point: *p,
                        level: config.level,
                        horizon: config.horizon,
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        crate::path::grid_len(config.horizon, config.level)?;
        let retain_stride = config.paths.div_ceil(RETAIN_CAP).max(1);

        let partials = par_seed_blocks(config.base_seed, config.paths, |seeds| {
            let mut moments = CrossMoments::new(indices.len());
            let mut retained = vec![Vec::new(); if retain { indices.len() } else { 0 }];
            let mut row = vec![0.0; indices.len()];
            let mut generator_id = String::new();
            for seed in seeds {
                let src = noise(seed);
                if generator_id.is_empty() {
                    generator_id = src.generator_id().to_string();
                }
                let path = DyadicPath::build(config.horizon, config.level, &src)?;
                for (slot, &k) in row.iter_mut().zip(&indices) {
                    *slot = path.values()[k];
                }
                moments.push(&row);
                if retain && (seed - config.base_seed).is_multiple_of(retain_stride) {
                    for (sample, &x) in retained.iter_mut().zip(&row) {
                        sample.push(x);
                    }
                }
            }
            Ok(Partial {
                moments,
                retained,
                generator_id,
            })
        });

        let mut moments = CrossMoments::new(indices.len());
        let mut retained = vec![Vec::new(); if retain { indices.len() } else { 0 }];
        let mut generator_id = String::new();
        for part in partials {
            let part: Partial = part?;
            moments.merge(&part.moments)?;
            for (all, block) in retained.iter_mut().zip(part.retained) {
                all.extend(block);
            }
            if generator_id.is_empty() {
                generator_id = part.generator_id;
            }
        }
        Ok(Self {
            config,
            probes,
            indices,
            moments,
            retained: retain.then_some(retained),
            retain_stride,
            generator_id,
        })
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    pub fn probes(&self) -> &[Dyadic] {
        &self.probes
    }

    pub fn moments(&self) -> &CrossMoments {
        &self.moments
    }

    pub fn generator_id(&self) -> &str {
        &self.generator_id
    }

    pub fn retain_stride(&self) -> u64 {
        self.retain_stride
    }

    /// Grid index of each probe at the ensemble level.
    pub fn probe_grid_indices(&self) -> &[usize] {
        &self.indices
    }

    /// Position of `r` among the probes; off-grid and unprobed points fail.
    pub fn probe(&self, r: Dyadic) -> Result<usize> {
        let on_grid = r
            .grid_index(self.config.level)
            .is_some_and(|k| k <= self.config.horizon << self.config.level);
        if !on_grid {
            return Err(Error::OffGrid {
                point: r,
                level: self.config.level,
                horizon: self.config.horizon,
            });
        }
        self.probes
            .binary_search(&r)
            .map_err(|_| Error::InvalidArgument(format!("{r} is not a probe of this ensemble")))
    }

    /// Retained samples of `B(r)`, in seed order.
    pub fn samples(&self, r: Dyadic) -> Result<&[f64]> {
        let i = self.probe(r)?;
        self.retained
            .as_ref()
            .map(|s| s[i].as_slice())
            .ok_or(Error::NotRetained(r))
    }

    /// Combines ensembles over adjacent seed ranges, `self` first.
    pub fn merge(&self, other: &Ensemble) -> Result<Ensemble> {
        let a = &self.config;
        let b = &other.config;
        let adjacent = a.base_seed.checked_add(a.paths) == Some(b.base_seed);
        if a.horizon != b.horizon || a.level != b.level || self.probes != other.probes || !adjacent
        {
            return Err(Error::IncompatibleMerge);
        }
        let config = EnsembleConfig::new(a.horizon, a.level, a.paths + b.paths, a.base_seed);
        let mut moments = self.moments.clone();
        moments.merge(&other.moments)?;
        let retain_stride = config.paths.div_ceil(RETAIN_CAP).max(1);
        let retained = match (&self.retained, &other.retained) {
            (Some(x), Some(y))
                if self.retain_stride == 1 && other.retain_stride == 1 && retain_stride == 1 =>
            {
                Some(
                    x.iter()
                        .zip(y)
                        .map(|(p, q)| [p.as_slice(), q].concat())
                        .collect(),
                )
            }
            _ => None,
        };
        Ok(Ensemble {
            config,
            probes: self.probes.clone(),
            indices: self.indices.clone(),
            moments,
            retained,
            retain_stride,
            generator_id: self.generator_id.clone(),
        })
    }
}
