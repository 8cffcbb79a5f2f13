//! Sequential construction of Brownian paths on dyadic grids.
//!
//! Level 0 holds the partial sums `B(k) = X_1 + ... + X_k`. Each refinement
//! keeps every existing value and fills the midpoint of each grid interval:
//!
//! ```text
//! B((2l+1) / 2^(n+1)) = (B(l / 2^n) + B((l+1) / 2^n)) / 2 + X_{(2l+1)/2^(n+1)} / sqrt(2^(n+2))
//! ```

use std::io::{self, Write};

use crate::dyadic::{canonicalize, Dyadic};
use crate::error::{Error, Result};
use crate::noise::NoiseSource;

/// Upper limit on stored grid points per path.
pub const MAX_GRID_POINTS: u64 = 1 << 31;

/// One realisation of `B` on `{k / 2^level : 0 <= k <= horizon * 2^level}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicPath {
    horizon: u64,
    level: u32,
    seed: u64,
    values: Vec<f64>,
}

pub(crate) fn grid_len(horizon: u64, level: u32) -> Result<usize> {
    if horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    let too_large = Error::GridTooLarge { horizon, level };
    if level >= 32 {
        return Err(too_large);
    }
    let points = horizon
        .checked_mul(1 << level)
        .and_then(|p| p.checked_add(1))
        .ok_or(too_large.clone())?;
    if points > MAX_GRID_POINTS {
        return Err(too_large);
    }
    Ok(points as usize)
}

/// Standard deviation of the midpoint displacement added at level `level`.
pub fn displacement_scale(level: u32) -> f64 {
    debug_assert!(level >= 1);
    (-(level as f64 + 1.0) / 2.0).exp2()
}

/// Builds the level-0 path on `[0, horizon]` from the integer-indexed draws.
pub fn construct_level0<N: NoiseSource + ?Sized>(horizon: u64, src: &N) -> Result<DyadicPath> {
    let len = grid_len(horizon, 0)?;
    let mut values = Vec::with_capacity(len);
    values.push(0.0);
    let mut sum = 0.0;
    for k in 1..len as u64 {
        sum += src.draw(Dyadic::integer(k));
        values.push(sum);
    }
    Ok(DyadicPath {
        horizon,
        level: 0,
        seed: src.seed(),
        values,
    })
}

/// Passes from level `n` to level `n + 1`.
pub fn refine<N: NoiseSource + ?Sized>(path: &DyadicPath, src: &N) -> Result<DyadicPath> {
    if src.seed() != path.seed {
        return Err(Error::SeedMismatch {
            path_seed: path.seed,
            source_seed: src.seed(),
        });
    }
    let level = path.level + 1;
    let len = grid_len(path.horizon, level)?;
    let scale = displacement_scale(level);
    let mut values = Vec::with_capacity(len);
    for (l, pair) in path.values.windows(2).enumerate() {
        values.push(pair[0]);
        let midpoint = (pair[0] + pair[1]) / 2.0;
        let x = src.draw(canonicalize(2 * l as u64 + 1, level));
        values.push(midpoint + x * scale);
    }
    values.push(*path.values.last().expect("paths are never empty"));
    debug_assert_eq!(values.len(), len);
    Ok(DyadicPath {
        horizon: path.horizon,
        level,
        seed: path.seed,
        values,
    })
}

/// Refines repeatedly until `target_level` is reached.
pub fn refine_to<N: NoiseSource + ?Sized>(
    path: &DyadicPath,
    target_level: u32,
    src: &N,
) -> Result<DyadicPath> {
    if target_level < path.level {
        return Err(Error::TargetBelowLevel {
            current: path.level,
            target: target_level,
        });
    }
    if src.seed() != path.seed {
        return Err(Error::SeedMismatch {
            path_seed: path.seed,
            source_seed: src.seed(),
        });
    }
    grid_len(path.horizon, target_level)?;
    let mut current = path.clone();
    while current.level < target_level {
        current = refine(&current, src)?;
    }
    Ok(current)
}

impl DyadicPath {
    /// Level-0 construction followed by refinement to `level`.
    pub fn build<N: NoiseSource + ?Sized>(horizon: u64, level: u32, src: &N) -> Result<Self> {
        grid_len(horizon, level)?;
        refine_to(&construct_level0(horizon, src)?, level, src)
    }

    /// Wraps raw grid values. The first value must be zero and the length
    /// must match the grid.
    pub fn from_values(horizon: u64, level: u32, seed: u64, values: Vec<f64>) -> Result<Self> {
        let len = grid_len(horizon, level)?;
        if values.len() != len {
            return Err(Error::InvalidArgument(format!(
                "expected {len} values, got {}",
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidArgument("path must start at zero".into()));
        }
        Ok(Self {
            horizon,
            level,
            seed,
            values,
        })
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid time of index `k` as a canonical dyadic.
    pub fn time(&self, k: usize) -> Dyadic {
        canonicalize(k as u64, self.level)
    }

    /// Stored value at an on-grid dyadic time.
    pub fn value_at(&self, r: Dyadic) -> Result<f64> {
        self.index_of(r).map(|k| self.values[k])
    }

    pub fn index_of(&self, r: Dyadic) -> Result<usize> {
        r.grid_index(self.level)
            .filter(|&k| k < self.values.len() as u64)
            .map(|k| k as usize)
            .ok_or(Error::OffGrid {
                point: r,
                level: self.level,
                horizon: self.horizon,
            })
    }

    /// Value at real time `t`: the stored value on the grid, linear
    /// interpolation between neighbouring grid points elsewhere.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon as f64).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        // Scaling by a power of two is exact.
        let x = t * (self.level as f64).exp2();
        let k = x.floor();
        let i = k as usize;
        if x == k {
            return Ok(self.values[i]);
        }
        let w = x - k;
        let (a, b) = (self.values[i], self.values[i + 1]);
        Ok(a + w * (b - a))
    }

    /// The level-`m` path contained in this one (every `2^(level-m)`-th value).
    pub fn downsample(&self, m: u32) -> Result<DyadicPath> {
        if m > self.level {
            return Err(Error::InvalidArgument(format!(
                "cannot downsample level {} to finer level {m}",
                self.level
            )));
        }
        let stride = 1usize << (self.level - m);
        Ok(DyadicPath {
            horizon: self.horizon,
            level: m,
            seed: self.seed,
            values: self.values.iter().step_by(stride).copied().collect(),
        })
    }

    /// Writes `t,value` rows. Each `comments` line is emitted first, prefixed
    /// with `# `. Times are exact decimals, values carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> io::Result<()> {
        for line in comments {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "t,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{:.16e}", self.time(k).to_decimal(), v)?;
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{zero_noise, CounterNoise, FnNoise};

    fn forced(values: &'static [f64]) -> impl NoiseSource {
        FnNoise::new(0, move |r: Dyadic| {
            if r.level() == 0 {
                values[r.numerator() as usize - 1]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn level0_partial_sums() {
        let p = construct_level0(2, &forced(&[1.0, -1.0])).unwrap();
        assert_eq!(p.values(), &[0.0, 1.0, 0.0]);
        let p = construct_level0(1, &CounterNoise::new(9)).unwrap();
        assert_eq!(p.values()[0], 0.0);
        assert_eq!(
            construct_level0(0, &CounterNoise::new(9)),
            Err(Error::EmptyHorizon)
        );
    }

    #[test]
    fn level0_recurrence_is_exact() {
        let src = CounterNoise::new(3);
        let p = construct_level0(16, &src).unwrap();
        for k in 1..=16usize {
            let x = src.draw(Dyadic::integer(k as u64));
            assert_eq!(p.values()[k], p.values()[k - 1] + x);
        }
    }

    #[test]
    fn zero_noise_gives_midpoint_averages() {
        let src = FnNoise::new(0, |r: Dyadic| {
            if r.level() == 0 {
                r.numerator() as f64
            } else {
                0.0
            }
        });
        let p = DyadicPath::build(3, 3, &src).unwrap();
        let v = p.values();
        for k in (1..v.len() - 1).step_by(2) {
            assert_eq!(v[k], (v[k - 1] + v[k + 1]) / 2.0);
        }
        let z = DyadicPath::build(2, 4, &zero_noise(0)).unwrap();
        assert!(z.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn refine_keeps_even_entries_and_adds_scaled_noise() {
        let src = CounterNoise::new(11);
        let p = DyadicPath::build(2, 3, &src).unwrap();
        let q = refine(&p, &src).unwrap();
        assert_eq!(q.level(), 4);
        assert_eq!(q.len(), 2 * 16 + 1);
        for (l, &v) in p.values().iter().enumerate() {
            assert_eq!(q.values()[2 * l].to_bits(), v.to_bits());
        }
        for l in 0..p.len() - 1 {
            let x = src.draw(canonicalize(2 * l as u64 + 1, 4));
            let expect = (p.values()[l] + p.values()[l + 1]) / 2.0 + x / 32f64.sqrt();
            assert!((q.values()[2 * l + 1] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn displacement_variance_is_two_to_minus_n_plus_two() {
        // variance of the noise term added at level n + 1 is 2^-(n+2)
        for n in 0..10 {
            let s = displacement_scale(n + 1);
            let want = (-(n as f64 + 2.0)).exp2();
            assert!((s * s - want).abs() <= 4.0 * f64::EPSILON * want);
        }
    }

    #[test]
    fn refine_rejects_foreign_seed() {
        let p = DyadicPath::build(1, 2, &CounterNoise::new(1)).unwrap();
        let err = refine(&p, &CounterNoise::new(2)).unwrap_err();
        assert_eq!(
            err,
            Error::SeedMismatch {
                path_seed: 1,
                source_seed: 2
            }
        );
    }

    #[test]
    fn refine_to_composition_and_identity() {
        let src = CounterNoise::new(5);
        let p0 = construct_level0(2, &src).unwrap();
        assert_eq!(refine_to(&p0, 0, &src).unwrap(), p0);
        let twice = refine(&refine(&p0, &src).unwrap(), &src).unwrap();
        assert_eq!(refine_to(&p0, 2, &src).unwrap(), twice);
        let p3 = refine_to(&p0, 3, &src).unwrap();
        assert_eq!(
            refine_to(&p3, 1, &src),
            Err(Error::TargetBelowLevel {
                current: 3,
                target: 1
            })
        );
    }

    #[test]
    fn deep_refinement_is_deterministic() {
        let a = DyadicPath::build(1, 10, &CounterNoise::new(77)).unwrap();
        let b = DyadicPath::build(1, 10, &CounterNoise::new(77)).unwrap();
        assert!(a
            .values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn evaluate_on_and_off_grid() {
        let p = construct_level0(1, &forced(&[2.0])).unwrap();
        assert_eq!(p.evaluate(0.25).unwrap(), 0.5);
        assert_eq!(p.evaluate(0.0).unwrap(), 0.0);
        assert_eq!(p.evaluate(1.0).unwrap(), 2.0);
        let q = DyadicPath::build(2, 5, &CounterNoise::new(1)).unwrap();
        assert_eq!(q.evaluate(0.0).unwrap(), 0.0);
        for k in 0..q.len() {
            let t = k as f64 / 32.0;
            assert_eq!(q.evaluate(t).unwrap().to_bits(), q.values()[k].to_bits());
        }
        assert!(matches!(q.evaluate(2.5), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(
            q.evaluate(-0.1),
            Err(Error::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn downsampling_matches_direct_construction() {
        let src = CounterNoise::new(123);
        let fine = DyadicPath::build(2, 7, &src).unwrap();
        for m in 0..=7 {
            assert_eq!(
                fine.downsample(m).unwrap(),
                DyadicPath::build(2, m, &src).unwrap()
            );
        }
    }

    #[test]
    fn value_lookup() {
        let p = DyadicPath::build(2, 3, &CounterNoise::new(4)).unwrap();
        assert_eq!(p.value_at(canonicalize(3, 2)).unwrap(), p.values()[6]);
        assert!(p.value_at(canonicalize(1, 4)).is_err());
        assert!(p.value_at(Dyadic::integer(3)).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = construct_level0(1, &forced(&[2.0])).unwrap();
        let p = refine(
            &p,
            &FnNoise::new(0, |r: Dyadic| if r.level() == 0 { 2.0 } else { 0.0 }),
        )
        .unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf, &["seed=0".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# seed=0\nt,value\n0,0.0000000000000000e0\n0.5,1.0000000000000000e0\n1,2.0000000000000000e0\n"
        );
    }
}
