//! One disorder realization, start to finish, for either backend.

use std::sync::Arc;

use crate::dtwa::{run_dtwa_batches, EnsembleOptions};
use crate::ed::{
    build_hamiltonian, exact_moments, half_chain_entropy, Propagator, QuantumState, SectorBasis,
};
use crate::error::Result;
use crate::model::{ModelSpec, NeelSpec, TimeGrid};
use crate::observables::{ErrorMode, Estimate, Method, ObservableSeries, PairFilter};
use crate::rng::StreamId;

/// Exact Néel quench on `grid`, with the half-chain entropy at the central cut.
pub fn exact_series(
    spec: &ModelSpec,
    grid: &TimeGrid,
    filter: PairFilter,
    krylov_tol: f64,
) -> Result<ObservableSeries> {
    let neel = NeelSpec::new(spec.n_sites)?;
    let basis = Arc::new(SectorBasis::neel_sector(&neel)?);
    let h = build_hamiltonian(spec, &basis)?;
    let prop = Propagator::new(&h, krylov_tol)?;
    let states = prop.evolve_on_grid(&QuantumState::neel(basis)?, grid)?;
    let tables: Vec<_> = states.iter().map(exact_moments).collect();
    let mut series =
        ObservableSeries::from_tables(Method::Ed, spec.disorder_strength, grid, &tables, filter)?;
    let cut = spec.n_sites / 2;
    series.s1_halfchain = Some(
        states
            .iter()
            .map(|s| half_chain_entropy(s, cut).map(Estimate::exact))
            .collect::<Result<_>>()?,
    );
    Ok(series)
}

/// DTWA estimate of the same quench from `n_traj` trajectories drawn from
/// `stream`, with batch-based error bars.
pub fn dtwa_series(
    spec: &ModelSpec,
    grid: &TimeGrid,
    n_traj: usize,
    stream: StreamId,
    opts: &EnsembleOptions,
    filter: PairFilter,
    mode: ErrorMode,
) -> Result<ObservableSeries> {
    let neel = NeelSpec::new(spec.n_sites)?;
    let batches = run_dtwa_batches(spec, &neel, grid, n_traj, stream, opts)?;
    ObservableSeries::from_batches(spec.disorder_strength, grid, &batches, filter, mode)
}
