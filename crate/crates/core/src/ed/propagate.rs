//! Time evolution `|ψ(t + dt)⟩ = exp(-i H dt) |ψ(t)⟩`.
//!
//! Small sectors are diagonalized once and evolved spectrally to any time.
//! Larger ones use a Lanczos basis with full reorthogonalization and an
//! a-posteriori error estimate that chooses the substep length.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::hamiltonian::SparseHamiltonian;
use super::state::QuantumState;
use crate::error::{Error, Result};
use crate::model::TimeGrid;

/// Dimensions up to this use full spectral decomposition.
pub const SPECTRAL_MAX_DIM: usize = 1000;

/// Default per-substep Krylov error tolerance.
pub const DEFAULT_KRYLOV_TOL: f64 = 1e-12;

const KRYLOV_MAX_DIM: usize = 40;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub enum Propagator<'h> {
    Spectral {
        energies: Vec<f64>,
        /// Eigenvectors as columns.
        vectors: DMatrix<f64>,
    },
    Krylov {
        hamiltonian: &'h SparseHamiltonian,
        tol: f64,
    },
}

impl<'h> Propagator<'h> {
    /// Spectral for `dim <= SPECTRAL_MAX_DIM`, Krylov otherwise.
    pub fn new(h: &'h SparseHamiltonian, tol: f64) -> Result<Self> {
        if h.dim() <= SPECTRAL_MAX_DIM {
            Ok(Self::spectral(h))
        } else {
            Self::krylov(h, tol)
        }
    }

    pub fn spectral(h: &SparseHamiltonian) -> Self {
        let eig = h.to_dense().symmetric_eigen();
        Propagator::Spectral {
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    pub fn krylov(h: &'h SparseHamiltonian, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidTolerance(format!(
                "Krylov tolerance must be positive, got {tol}"
            )));
        }
        Ok(Propagator::Krylov {
            hamiltonian: h,
            tol,
        })
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self, Propagator::Spectral { .. })
    }

    pub fn evolve(&self, state: &QuantumState, dt: f64) -> Result<QuantumState> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "time step must be non-negative, got {dt}"
            )));
        }
        let amplitudes = if dt == 0.0 {
            state.amplitudes.clone()
        } else {
            match self {
                Propagator::Spectral { energies, vectors } => {
                    let coeffs = project(vectors, &state.amplitudes);
                    let phased: Vec<Complex64> = coeffs
                        .iter()
                        .zip(energies)
                        .map(|(c, e)| c * Complex64::from_polar(1.0, -e * dt))
                        .collect();
                    expand(vectors, &phased)
                }
                Propagator::Krylov { hamiltonian, tol } => {
                    krylov_evolve(hamiltonian, &state.amplitudes, dt, *tol)?
                }
            }
        };
        Ok(QuantumState {
            basis: state.basis.clone(),
            amplitudes,
            time: state.time + dt,
        })
    }

    /// States at every grid time, starting from `initial` at `grid[0]`.
    ///
    /// Spectral propagation jumps straight from the initial state to each
    /// time; Krylov propagation steps between consecutive grid points.
    pub fn evolve_on_grid(
        &self,
        initial: &QuantumState,
        grid: &TimeGrid,
    ) -> Result<Vec<QuantumState>> {
        let t0 = grid.points()[0];
        let mut out = Vec::with_capacity(grid.len());
        match self {
            Propagator::Spectral { energies, vectors } => {
                let coeffs = project(vectors, &initial.amplitudes);
                for &t in grid.points() {
                    let dt = t - t0;
                    let phased: Vec<Complex64> = coeffs
                        .iter()
                        .zip(energies)
                        .map(|(c, e)| c * Complex64::from_polar(1.0, -e * dt))
                        .collect();
                    out.push(QuantumState {
                        basis: initial.basis.clone(),
                        amplitudes: if dt == 0.0 {
                            initial.amplitudes.clone()
                        } else {
                            expand(vectors, &phased)
                        },
                        time: initial.time + dt,
                    });
                }
            }
            Propagator::Krylov { .. } => {
                let mut current = initial.clone();
                let mut prev = t0;
                for &t in grid.points() {
                    current = self.evolve(&current, t - prev)?;
                    prev = t;
                    out.push(current.clone());
                }
            }
        }
        Ok(out)
    }
}

/// `exp(-i H dt) |ψ⟩`, spectral for small dimensions and Krylov otherwise.
pub fn evolve_state(
    state: &QuantumState,
    h: &SparseHamiltonian,
    dt: f64,
    tol: f64,
) -> Result<QuantumState> {
    Propagator::new(h, tol)?.evolve(state, dt)
}

/// `Vᵀ ψ` for real orthogonal `V`.
fn project(vectors: &DMatrix<f64>, psi: &[Complex64]) -> Vec<Complex64> {
    let n = vectors.nrows();
    (0..vectors.ncols())
        .map(|k| {
            let col = vectors.column(k);
            let mut acc = ZERO;
            for r in 0..n {
                acc += psi[r] * col[r];
            }
            acc
        })
        .collect()
}

/// `V c`.
fn expand(vectors: &DMatrix<f64>, coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = vectors.nrows();
    let mut out = vec![ZERO; n];
    for (k, c) in coeffs.iter().enumerate() {
        let col = vectors.column(k);
        for r in 0..n {
            out[r] += c * col[r];
        }
    }
    out
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Norm of the residual after the last vector; zero on an invariant subspace.
    residual: f64,
}

fn lanczos(h: &SparseHamiltonian, start: &[Complex64], max_dim: usize) -> Lanczos {
    let beta0 = norm(start);
    let mut basis = vec![start.iter().map(|x| x / beta0).collect::<Vec<_>>()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![ZERO; start.len()];
    let breakdown = 1e-13 * h.norm_bound().max(1.0);
    loop {
        let j = basis.len() - 1;
        h.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Two passes of classical Gram–Schmidt against the whole basis.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let b = norm(&w);
        if b < breakdown || basis.len() == max_dim {
            return Lanczos {
                basis,
                alpha,
                beta,
                residual: if b < breakdown { 0.0 } else { b },
            };
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

/// Coefficients `exp(-i T dt) e_1` in the Lanczos basis.
fn small_exponential(energies: &DVector<f64>, vectors: &DMatrix<f64>, dt: f64) -> Vec<Complex64> {
    let m = energies.len();
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    Complex64::from_polar(vectors[(r, k)] * vectors[(0, k)], -energies[k] * dt)
                })
                .sum()
        })
        .collect()
}

fn krylov_evolve(
    h: &SparseHamiltonian,
    psi: &[Complex64],
    dt: f64,
    tol: f64,
) -> Result<Vec<Complex64>> {
    let mut current = psi.to_vec();
    let mut remaining = dt;
    let max_dim = KRYLOV_MAX_DIM.min(h.dim());
    let min_step = dt * 1e-12;
    while remaining > 0.0 {
        let scale = norm(&current);
        if scale == 0.0 {
            return Ok(current);
        }
        let lz = lanczos(h, &current, max_dim);
        let m = lz.alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for k in 0..m {
            t[(k, k)] = lz.alpha[k];
            if k + 1 < m {
                t[(k, k + 1)] = lz.beta[k];
                t[(k + 1, k)] = lz.beta[k];
            }
        }
        let eig = t.symmetric_eigen();
        let mut step = remaining;
        let coeffs = loop {
            let c = small_exponential(&eig.eigenvalues, &eig.eigenvectors, step);
            let err = lz.residual * c[m - 1].norm();
            if err <= tol {
                break c;
            }
            step *= 0.5;
            if step < min_step {
                return Err(Error::KrylovNonConvergence {
                    tol,
                    dt,
                    reached: err,
                });
            }
        };
        let mut next = vec![ZERO; current.len()];
        for (c, v) in coeffs.iter().zip(&lz.basis) {
            let c = c * scale;
            for (n, vi) in next.iter_mut().zip(v) {
                *n += c * vi;
            }
        }
        current = next;
        remaining -= step;
        if remaining < min_step {
            remaining = 0.0;
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::{build_hamiltonian, exact_moments, SectorBasis};
    use crate::model::{make_time_grid, ModelSpec, Spacing};
    use crate::rng::StreamId;
    use std::sync::Arc;

    fn setup(n: usize, h: f64, seed: u64) -> (SparseHamiltonian, QuantumState) {
        let spec = ModelSpec::sample(n, 1.0, h, &StreamId::disorder(seed, 0)).unwrap();
        let basis = Arc::new(SectorBasis::new(n, n.div_ceil(2)).unwrap());
        let ham = build_hamiltonian(&spec, &basis).unwrap();
        (ham, QuantumState::neel(basis).unwrap())
    }

    #[test]
    fn zero_step_is_identity() {
        let (h, psi) = setup(6, 2.0, 1);
        for prop in [
            Propagator::spectral(&h),
            Propagator::krylov(&h, 1e-12).unwrap(),
        ] {
            assert_eq!(prop.evolve(&psi, 0.0).unwrap().amplitudes, psi.amplitudes);
        }
    }

    #[test]
    fn eigenvector_picks_up_phase() {
        let (h, psi) = setup(8, 3.0, 2);
        let eig = h.to_dense().symmetric_eigen();
        let k = 17;
        let e = eig.eigenvalues[k];
        let mut v = psi.clone();
        for (a, x) in v
            .amplitudes
            .iter_mut()
            .zip(eig.eigenvectors.column(k).iter())
        {
            *a = Complex64::new(*x, 0.0);
        }
        for prop in [
            Propagator::spectral(&h),
            Propagator::krylov(&h, 1e-12).unwrap(),
        ] {
            let out = prop.evolve(&v, 2.5).unwrap();
            let ov = v.overlap(&out);
            assert!((ov.norm() - 1.0).abs() < 1e-10);
            assert!((ov - Complex64::from_polar(1.0, -e * 2.5)).norm() < 1e-9);
        }
    }

    #[test]
    fn two_spin_rabi() {
        let spec = ModelSpec::clean(2, 1.0).unwrap();
        let basis = Arc::new(SectorBasis::new(2, 1).unwrap());
        let h = build_hamiltonian(&spec, &basis).unwrap();
        let psi = QuantumState::neel(basis).unwrap();
        let grid = make_time_grid(10.0, 51, Spacing::Linear).unwrap();
        let states = Propagator::spectral(&h)
            .evolve_on_grid(&psi, &grid)
            .unwrap();
        for (t, st) in grid.points().iter().zip(&states) {
            assert!((exact_moments(st).z(0) - t.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn krylov_matches_spectral() {
        let (h, psi) = setup(10, 4.0, 3);
        let grid = make_time_grid(50.0, 30, Spacing::LogPlusZero).unwrap();
        let a = Propagator::spectral(&h)
            .evolve_on_grid(&psi, &grid)
            .unwrap();
        let b = Propagator::krylov(&h, 1e-12)
            .unwrap()
            .evolve_on_grid(&psi, &grid)
            .unwrap();
        for (x, y) in a.iter().zip(&b) {
            let diff = x
                .amplitudes
                .iter()
                .zip(&y.amplitudes)
                .map(|(p, q)| (p - q).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-9, "t = {}: {diff}", x.time);
            assert!((y.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn selects_method_by_dimension() {
        let (small, _) = setup(12, 1.0, 4);
        assert!(Propagator::new(&small, 1e-12).unwrap().is_spectral());
        let (big, _) = setup(14, 1.0, 4);
        assert_eq!(big.dim(), 3432);
        assert!(!Propagator::new(&big, 1e-12).unwrap().is_spectral());
    }

    #[test]
    fn krylov_rejects_bad_tolerance() {
        let (h, psi) = setup(4, 1.0, 5);
        assert!(Propagator::krylov(&h, 0.0).is_err());
        assert!(Propagator::spectral(&h).evolve(&psi, -1.0).is_err());
    }
}
