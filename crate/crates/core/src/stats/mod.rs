pub mod accumulator;
pub mod bounds;
pub mod checks;
pub mod ensemble;
pub mod ks;
pub mod modulus;
pub mod report;

pub use accumulator::CrossMoments;
pub use bounds::{
    interval_tail_bound, modulus_tail_term, summarize_modulus_series, union_tail_bound,
};
pub use checks::{
    check_covariance, check_increment_independence, check_increment_variance,
    check_marginal_normal, check_mean, check_stationarity, check_variance,
};
pub use ensemble::{generate_ensemble, Ensemble, EnsembleConfig};
pub use modulus::{compute_modulus, estimate_modulus_tails, required_horizon, ModulusStat};
pub use report::{CheckRecord, Relation, StatReport};
