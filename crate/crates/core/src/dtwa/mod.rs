//! Discrete truncated Wigner approximation.
//!
//! Each trajectory starts from a discrete phase point of the Néel state and
//! follows the classical mean-field flow `dr_i/dt = B_i × r_i`. Ensemble
//! averages of the Weyl symbols `r_i^α` and their products estimate the one-
//! and two-site Pauli moments.

mod ensemble;
mod integrator;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, NeelSpec, TimeGrid};

pub use ensemble::{
    ensemble_total, enumerate_phase_space, run_dtwa_batches, run_dtwa_ensemble, EnsembleOptions,
    MomentAccumulator, MAX_ENUMERATION_SITES,
};
pub use integrator::{Dopri5, StepStats, Tolerances, MIN_REL_TOL};

pub type Bloch = [f64; 3];

/// Classical spin configuration of one trajectory, Pauli-normalized so that
/// the Weyl symbol of `σ_i^α` is `vectors[i][α]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochConfig {
    pub vectors: Vec<Bloch>,
    pub time: f64,
}

impl BlochConfig {
    pub fn n_sites(&self) -> usize {
        self.vectors.len()
    }

    pub fn magnetization_z(&self) -> f64 {
        self.vectors.iter().map(|r| r[2]).sum()
    }
}

/// Draws one discrete phase point of the Néel state: `r^z` fixed to the
/// site's σ^z eigenvalue, `r^x` and `r^y` independent fair ±1 coins.
pub fn sample_neel_phase_point<R: Rng + ?Sized>(neel: &NeelSpec, rng: &mut R) -> BlochConfig {
    let vectors = (0..neel.n_sites)
        .map(|i| {
            let x = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            [x, y, neel.z(i)]
        })
        .collect();
    BlochConfig { vectors, time: 0.0 }
}

/// The `index`-th of the `4^N` equally weighted Néel phase points. Bits
/// `2i` and `2i + 1` select the signs of `r_i^x` and `r_i^y`.
pub fn neel_phase_point(neel: &NeelSpec, index: u64) -> BlochConfig {
    let sign = |bit: u32| if (index >> bit) & 1 == 0 { 1.0 } else { -1.0 };
    let vectors = (0..neel.n_sites)
        .map(|i| [sign(2 * i as u32), sign(2 * i as u32 + 1), neel.z(i)])
        .collect();
    BlochConfig { vectors, time: 0.0 }
}

/// Writes `dr_i/dt = B_i × r_i` with
/// `B_i = (J/2)(r_{i-1} + r_{i+1}) + h_i J e_z`; missing neighbours at the
/// open ends contribute nothing.
pub(crate) fn rhs_into(r: &[Bloch], coupling: f64, field_energy: &[f64], out: &mut [Bloch]) {
    let n = r.len();
    let half_j = 0.5 * coupling;
    for i in 0..n {
        let mut b = [0.0, 0.0, field_energy[i]];
        if i > 0 {
            for a in 0..3 {
                b[a] += half_j * r[i - 1][a];
            }
        }
        if i + 1 < n {
            for a in 0..3 {
                b[a] += half_j * r[i + 1][a];
            }
        }
        out[i] = cross(&b, &r[i]);
    }
}

pub fn mean_field_rhs(config: &BlochConfig, spec: &ModelSpec) -> Result<Vec<Bloch>> {
    check_size(config, spec)?;
    let fields = field_energies(spec);
    let mut out = vec![[0.0; 3]; config.n_sites()];
    rhs_into(&config.vectors, spec.coupling, &fields, &mut out);
    Ok(out)
}

/// `E_cl = (J/4) Σ r_i · r_{i+1} + (1/2) Σ h_i J r_i^z`, conserved by the flow.
pub fn classical_energy(config: &BlochConfig, spec: &ModelSpec) -> f64 {
    let r = &config.vectors;
    let bonds: f64 = spec.bonds().map(|(i, j)| dot(&r[i], &r[j])).sum();
    let zeeman: f64 = (0..spec.n_sites)
        .map(|i| spec.field_energy(i) * r[i][2])
        .sum();
    0.25 * spec.coupling * bonds + 0.5 * zeeman
}

/// Integrates one trajectory and returns the configuration at every grid
/// time. Bloch vectors are never renormalized.
pub fn integrate_trajectory(
    initial: &BlochConfig,
    spec: &ModelSpec,
    grid: &TimeGrid,
    tol: Tolerances,
) -> Result<Vec<BlochConfig>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut solver = TrajectorySolver::new(spec, tol)?;
    solver.run(initial, grid, |k, r| {
        out.push(BlochConfig {
            vectors: r.to_vec(),
            time: grid.points()[k],
        })
    })?;
    Ok(out)
}

/// Reusable per-thread integration workspace for one model.
pub(crate) struct TrajectorySolver {
    coupling: f64,
    fields: Vec<f64>,
    solver: Dopri5,
    state: Vec<Bloch>,
}

impl TrajectorySolver {
    pub(crate) fn new(spec: &ModelSpec, tol: Tolerances) -> Result<Self> {
        Ok(TrajectorySolver {
            coupling: spec.coupling,
            fields: field_energies(spec),
            solver: Dopri5::new(3 * spec.n_sites, tol)?,
            state: vec![[0.0; 3]; spec.n_sites],
        })
    }

    pub(crate) fn run<O>(
        &mut self,
        initial: &BlochConfig,
        grid: &TimeGrid,
        mut observe: O,
    ) -> Result<()>
    where
        O: FnMut(usize, &[Bloch]),
    {
        if initial.n_sites() != self.fields.len() {
            return Err(Error::SizeMismatch {
                expected: self.fields.len(),
                found: initial.n_sites(),
            });
        }
        self.state.copy_from_slice(&initial.vectors);
        let (coupling, fields) = (self.coupling, &self.fields);
        self.solver.integrate(
            |y, dy| rhs_into(as_bloch(y), coupling, fields, as_bloch_mut(dy)),
            initial.time,
            self.state.as_flattened_mut(),
            grid.points(),
            |k, y| observe(k, as_bloch(y)),
        )
    }

    #[allow(dead_code)]
    pub(crate) fn stats(&self) -> StepStats {
        self.solver.stats
    }
}

fn field_energies(spec: &ModelSpec) -> Vec<f64> {
    (0..spec.n_sites).map(|i| spec.field_energy(i)).collect()
}

fn check_size(config: &BlochConfig, spec: &ModelSpec) -> Result<()> {
    if config.n_sites() != spec.n_sites {
        return Err(Error::SizeMismatch {
            expected: spec.n_sites,
            found: config.n_sites(),
        });
    }
    Ok(())
}

fn as_bloch(y: &[f64]) -> &[Bloch] {
    let (chunks, rest) = y.as_chunks::<3>();
    debug_assert!(rest.is_empty());
    chunks
}

fn as_bloch_mut(y: &mut [f64]) -> &mut [Bloch] {
    let (chunks, rest) = y.as_chunks_mut::<3>();
    debug_assert!(rest.is_empty());
    chunks
}

#[inline]
fn cross(a: &Bloch, b: &Bloch) -> Bloch {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn dot(a: &Bloch, b: &Bloch) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_time_grid, Spacing};
    use crate::rng::StreamId;
    use std::collections::HashMap;

    fn spec(fields: Vec<f64>, coupling: f64) -> ModelSpec {
        let h = fields.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        ModelSpec::new(fields.len(), coupling, h, fields).unwrap()
    }

    #[test]
    fn neel_z_components_are_deterministic() {
        let neel = NeelSpec::new(2).unwrap();
        for k in 0..50 {
            let p = sample_neel_phase_point(&neel, &mut StreamId::trajectory(1, 0, k).rng());
            assert_eq!(p.vectors[0][2], 1.0);
            assert_eq!(p.vectors[1][2], -1.0);
            assert!(p.vectors.iter().flatten().all(|c| c.abs() == 1.0));
        }
    }

    #[test]
    fn single_spin_phase_point_moments() {
        let neel = NeelSpec::new(2).unwrap();
        let points: Vec<_> = (0..4).map(|k| neel_phase_point(&neel, k)).collect();
        let mean_x: f64 = points.iter().map(|p| p.vectors[0][0]).sum::<f64>() / 4.0;
        let mean_x2: f64 = points.iter().map(|p| p.vectors[0][0].powi(2)).sum::<f64>() / 4.0;
        assert_eq!(mean_x, 0.0);
        assert_eq!(mean_x2, 1.0);
    }

    #[test]
    fn phase_points_uniform_over_256() {
        let neel = NeelSpec::new(4).unwrap();
        let draws = 100_000;
        let mut rng = StreamId::trajectory(9, 0, 0).rng();
        let mut counts: HashMap<Vec<i8>, usize> = HashMap::new();
        for _ in 0..draws {
            let p = sample_neel_phase_point(&neel, &mut rng);
            let key = p
                .vectors
                .iter()
                .flat_map(|r| [r[0] as i8, r[1] as i8])
                .collect();
            *counts.entry(key).or_default() += 1;
        }
        assert_eq!(counts.len(), 256);
        let p = 1.0 / 256.0;
        let expected = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!(counts
            .values()
            .all(|&c| (c as f64 - expected).abs() < 5.0 * sd));
        // the enumeration covers the same 256 points
        let enumerated: std::collections::HashSet<Vec<i8>> = (0..256)
            .map(|k| {
                neel_phase_point(&neel, k)
                    .vectors
                    .iter()
                    .flat_map(|r| [r[0] as i8, r[1] as i8])
                    .collect()
            })
            .collect();
        assert_eq!(enumerated.len(), 256);
        assert!(counts.keys().all(|k| enumerated.contains(k)));
    }

    #[test]
    fn aligned_z_is_a_fixed_point() {
        let s = spec(vec![0.3, -1.2, 2.0], 1.0);
        let c = BlochConfig {
            vectors: vec![[0.0, 0.0, 1.0]; 3],
            time: 0.0,
        };
        assert!(mean_field_rhs(&c, &s)
            .unwrap()
            .iter()
            .flatten()
            .all(|&d| d == 0.0));
    }

    #[test]
    fn no_coupling_keeps_z() {
        let s = spec(vec![0.7, -1.1, 0.2], 0.0);
        let c = BlochConfig {
            vectors: vec![[1.0, -1.0, 1.0], [-1.0, 1.0, -1.0], [1.0, 1.0, 1.0]],
            time: 0.0,
        };
        assert!(mean_field_rhs(&c, &s).unwrap().iter().all(|d| d[2] == 0.0));
    }

    #[test]
    fn two_site_derivative() {
        let s = spec(vec![0.0, 0.0], 1.0);
        let c = BlochConfig {
            vectors: vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            time: 0.0,
        };
        let d = mean_field_rhs(&c, &s).unwrap();
        assert_eq!(d[0], [0.0, 0.5, 0.0]);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn rhs_matches_finite_difference_of_integrator() {
        let s = spec(vec![0.4, -0.9, 1.3, 0.1], 1.0);
        let neel = NeelSpec::new(4).unwrap();
        let c = neel_phase_point(&neel, 0b1011_0110);
        let d = mean_field_rhs(&c, &s).unwrap();
        let dt = 1e-5;
        let grid = TimeGrid::from_points(vec![0.0, dt]).unwrap();
        let tol = Tolerances {
            rel: 1e-13,
            abs: 1e-14,
            ..Default::default()
        };
        let fwd = integrate_trajectory(&c, &s, &grid, tol).unwrap();
        for i in 0..4 {
            for a in 0..3 {
                let fd = (fwd[1].vectors[i][a] - c.vectors[i][a]) / dt;
                assert!(
                    (fd - d[i][a]).abs() < 1e-4,
                    "site {i} comp {a}: {fd} vs {}",
                    d[i][a]
                );
            }
        }
    }

    #[test]
    fn rhs_size_mismatch() {
        let s = spec(vec![0.0, 0.0, 0.0], 1.0);
        let c = BlochConfig {
            vectors: vec![[0.0, 0.0, 1.0]; 2],
            time: 0.0,
        };
        assert!(matches!(
            mean_field_rhs(&c, &s),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn free_precession_closed_form() {
        // A zero Bloch vector on site 2 is a fixed point and exerts no field,
        // leaving site 1 to precess about h_1 J e_z.
        let h0 = 1.7;
        let s = spec(vec![h0, -0.4], 1.0);
        let grid = make_time_grid(20.0, 41, Spacing::Linear).unwrap();
        let tol = Tolerances::default();
        for (x0, y0) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let c = BlochConfig {
                vectors: vec![[x0, y0, 1.0], [0.0, 0.0, 0.0]],
                time: 0.0,
            };
            let traj = integrate_trajectory(&c, &s, &grid, tol).unwrap();
            for (t, r) in grid.points().iter().zip(&traj) {
                let w = h0 * t;
                let x = w.cos() * x0 - w.sin() * y0;
                let y = w.sin() * x0 + w.cos() * y0;
                assert!((r.vectors[0][0] - x).abs() < 10.0 * tol.rel, "t={t}");
                assert!((r.vectors[0][1] - y).abs() < 10.0 * tol.rel, "t={t}");
                assert_eq!(r.vectors[0][2], 1.0);
                assert_eq!(r.vectors[1], [0.0; 3]);
            }
        }
    }

    #[test]
    fn conservation_over_long_run() {
        let neel = NeelSpec::new(8).unwrap();
        let grid = make_time_grid(120.0, 60, Spacing::LogPlusZero).unwrap();
        for (k, h) in [1.0, 4.0, 8.0].into_iter().enumerate() {
            let s = ModelSpec::sample(8, 1.0, h, &StreamId::disorder(5, k as u32)).unwrap();
            let c = sample_neel_phase_point(&neel, &mut StreamId::trajectory(5, k as u32, 0).rng());
            let e0 = classical_energy(&c, &s);
            let m0 = c.magnetization_z();
            for snap in integrate_trajectory(&c, &s, &grid, Tolerances::default()).unwrap() {
                for r in &snap.vectors {
                    assert!((dot(r, r) - 3.0).abs() <= 1e-6);
                }
                assert!((classical_energy(&snap, &s) - e0).abs() <= 1e-6);
                assert!((snap.magnetization_z() - m0).abs() <= 1e-6);
            }
        }
    }
}
