//! Bias-corrected fixed-k nearest-neighbor estimators for density functionals
//! (Shannon entropy, the Rényi-α functional, KL divergence, the α-divergence
//! functional) together with a Monte Carlo harness for checking k-NN distance
//! concentration, the Erlang limit of normalized distances, moment bounds, and
//! bias/variance/MSE convergence rates.
//!
//! All samples live in the unit cube `[0,1]^D` and distances are induced by an
//! r-norm, `1 <= r <= inf`.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod metric;
pub mod neighbors;
pub mod quadrature;
pub mod rng;
pub mod selftest;
pub mod special;
pub mod theory;

pub use distributions::{BetaComponent, DistributionSpec, GroundTruthMethod, GroundTruthValue};
pub use error::{Error, Result};
pub use estimators::{Estimate, FunctionalKind, FunctionalSpec, PlugInMap};
pub use harness::{fit_loglog_slope, run_sweep, SweepConfig, SweepResult};
pub use metric::{MetricConfig, Norm};
pub use neighbors::{NeighborDistances, SampleSet};
