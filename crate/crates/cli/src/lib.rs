//! Orchestration for the `mblw` binary: run configs, disorder sweeps,
//! manifests, results files and exact-vs-DTWA comparisons.

pub mod compare;
pub mod config;
pub mod manifest;
pub mod sweep;
pub mod table;

use anyhow::Result;
use mblw_core::dtwa::{enumerate_phase_space, Tolerances};
use mblw_core::{Method, ModelSpec, NeelSpec, ObservableSeries, PairFilter, TimeGrid};

pub use compare::compare_runs;
pub use config::{GridSpec, RunConfig, RunTolerances};
pub use manifest::{RunManifest, RunStatus};
pub use sweep::{run_sweep, SweepOutcome};

/// The infinite-sample DTWA limit for one realization, by summing over all
/// `4^N` discrete phase points.
pub fn enumerate_series(
    spec: &ModelSpec,
    grid: &TimeGrid,
    tol: Tolerances,
    filter: PairFilter,
) -> Result<ObservableSeries> {
    anyhow::ensure!(
        spec.n_sites <= 3,
        "enumerate is limited to N <= 3, got {}",
        spec.n_sites
    );
    let acc = enumerate_phase_space(spec, &NeelSpec::new(spec.n_sites)?, grid, tol)?;
    Ok(ObservableSeries::from_tables(
        Method::Dtwa,
        spec.disorder_strength,
        grid,
        &acc.tables(),
        filter,
    )?)
}
