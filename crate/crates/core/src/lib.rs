//! Semiclassical (discrete truncated Wigner) and exact dynamics of the
//! random-field Heisenberg chain quenched from the Néel state, with the
//! localization diagnostics used to compare them.
//!
//! - [`model`]: the chain, disorder sampling, Néel state and time grid.
//! - [`dtwa`]: phase-point sampling, the mean-field flow and trajectory ensembles.
//! - [`ed`]: sector-resolved exact propagation, moments and entanglement.
//! - [`observables`]: imbalance, quantum Fisher information, two-site Rényi entropy.
//! - [`metrics`]: mean squared error and CVRMSD between exact and DTWA series.
//! - [`series`]: one disorder realization run through either backend.

pub mod dtwa;
pub mod ed;
pub mod error;
pub mod metrics;
pub mod model;
pub mod moments;
pub mod observables;
pub mod rng;
pub mod series;

pub use error::{Error, Result};
pub use metrics::{compare_series, cvrmsd, mse, ComparisonReport, ComparisonRow, CvrmsdConvention};
pub use model::{
    make_time_grid, sample_disorder, ModelSpec, NeelSpec, Spacing, TimeGrid, DEFAULT_DISORDER_SWEEP,
};
pub use moments::MomentTable;
pub use observables::{
    disorder_average, imbalance, qfi, renyi2_average, renyi2_pair, ErrorMode, Estimate, Method,
    Observable, ObservableSeries, PairFilter,
};
pub use rng::StreamId;
pub use series::{dtwa_series, exact_series};
