//! Weighted Cramér-von Mises tests of mutual independence built on the
//! empirical copula process.
//!
//! The pipeline is: raw [`Sample`] → [`pseudo_observations`] → the closed-form
//! weighted statistic ([`compute_statistic`]) for a [`WeightFamily`] →
//! a permutation test ([`permutation_test`]) or a comparison with simulated
//! asymptotic critical values ([`tabulate_critical_values`]). The
//! [`copulas`] and [`power`] modules provide the alternatives and the
//! harness for power studies.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod cli;
pub mod copulas;
pub mod error;
pub mod nulldist;
pub mod oracle;
pub mod permtest;
pub mod power;
pub mod quad;
pub mod ranks;
pub mod rng;
mod special;
pub mod statistic;
pub mod weights;

pub use copulas::{copula_cdf, sample_copula, tail_dependence, CopulaModel};
pub use error::{Error, Result};
pub use nulldist::{tabulate_critical_values, CriticalValueTable};
pub use oracle::{oracle_statistic, OracleConfig, OracleMode};
pub use permtest::{permutation_test, reject, TestResult};
pub use power::{power_summary, run_power_study, PowerCurve, PowerStudyConfig};
pub use ranks::{pseudo_observations, PseudoObservations, RankScale, Sample};
pub use statistic::{compute_statistic, StatisticValue};
pub use weights::{mu1, mu2, mu3, weight_value, WeightFamily, WeightKind};
