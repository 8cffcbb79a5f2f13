//! Standard Brownian motion built by dyadic midpoint displacement, plus the
//! machinery to check its law empirically.
//!
//! * [`dyadic`] and [`noise`]: the index set and the normal family on it.
//! * [`path`]: level-0 partial sums and refinement.
//! * [`stats`]: ensembles, covariance / increment / KS checks, modulus
//!   statistics and their tail bounds.
//! * [`etemadi`]: the maximal inequality, exactly and by Monte Carlo.
//! * [`suite`]: the registered verification suites and their defaults.

pub mod dyadic;
pub mod error;
pub mod etemadi;
pub mod noise;
pub mod path;
pub mod stats;
pub mod suite;

pub use dyadic::{canonicalize, Dyadic};
pub use error::{Error, Result};
pub use noise::{noise_at, CounterNoise, NoiseSource};
pub use path::{construct_level0, refine, refine_to, DyadicPath};
