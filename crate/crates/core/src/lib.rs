//! Multivariate autoregressive modelling and power contribution analysis.
//!
//! The crate fits vector autoregressive (VAR) models to multichannel series,
//! evaluates their cross-spectrum, and decomposes each channel's power
//! spectrum into the share driven by each noise source. Two decompositions
//! are offered:
//!
//! - the classical relative power contribution, which treats the noise
//!   covariance as diagonal, and
//! - the extended decomposition, which keeps every off-diagonal covariance
//!   and adds one signed term per correlated noise pair. Pair terms can be
//!   negative: correlated noise may *reduce* a channel's power.
//!
//! A simulation layer replays the fitted recursion with selected residual
//! channels and runs seeded Monte Carlo ensembles under alternative noise
//! covariances, with a Lyapunov-equation oracle for stationary variances.
//!
//! Channels, lags and targets are 0-based in the Rust API. The public
//! labelling of contribution terms (and [`contribution::pair_index`]) is
//! 1-based, matching how the terms are numbered in reports.

pub mod contribution;
pub mod error;
pub mod io;
mod linalg;
pub mod series;
pub mod simulation;
pub mod spectral;
pub mod synthetic;
pub mod var;

pub use contribution::{
    akaike_absolute, akaike_relative, cumulative_stack, extended_absolute, extended_relative,
    pair_index, ContributionDecomposition, Mode, PairIndexMap, StackKind,
};
pub use error::{Error, Result};
pub use series::{demean, load_csv, make_grid, FrequencyGrid, MultivariateSeries};
pub use simulation::{
    monte_carlo, replay, replay_channel, simulate, stationary_covariance, NoiseScenario,
    PairCovariance, SimulationSummary,
};
pub use spectral::{ar_fourier, cross_spectrum, transfer_matrix, CrossSpectrum, TransferMatrix};
pub use var::{
    fit_least_squares, fit_yule_walker, noise_correlation, residuals, sample_autocovariance,
    select_order_aic, AicTable, NoiseCorrelation, ResidualSeries, VarModel,
};
