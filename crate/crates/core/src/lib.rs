//! Frequency polygon density estimation for stationary, non-anticipative
//! time series.
//!
//! The crate is organised around five pieces:
//!
//! - estimators: [`binning`], [`histogram`], [`ecdf`], [`operators`],
//!   [`bandwidth`], [`kde`] and [`estimate`]. The frequency polygon is
//!   evaluated both in operator form `B_n F_n` ([`operators::fp_eval`]) and
//!   in the classical interpolation form ([`operators::fp_eval_classic`]).
//! - process models: [`noise`], [`models`], [`simulate`] and [`marginal`]
//!   (exact or numerically computed stationary marginal densities).
//! - [`dependence`]: coupled trajectories and physical dependence measures.
//! - [`diagnostics`]: sup-norm errors, the empirical process, its exact
//!   modulus of continuity and the convergence-rate experiment.

pub mod bandwidth;
pub mod binning;
pub mod dependence;
pub mod diagnostics;
pub mod ecdf;
pub mod error;
pub mod estimate;
pub mod histogram;
pub mod kde;
pub mod models;
pub mod noise;
pub mod marginal;
pub mod operators;
pub mod simulate;

pub use bandwidth::stone_bandwidth;
pub use binning::BinningScheme;
pub use ecdf::EmpiricalCdf;
pub use error::{Error, Result};
pub use estimate::{Density, DensityEstimate, EstimateKind};
pub use histogram::{BinDensity, HistogramBuilder, SparseHistogram};
pub use kde::kde_eval_naive;
pub use models::{ArmaModel, LinearProcess, ModelSpec, NlarModel, TarModel, TimeSeriesModel};
pub use noise::NoiseSpec;
pub use operators::{apply_an, fp_eval, fp_eval_classic, u_weight};
