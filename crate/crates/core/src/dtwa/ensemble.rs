use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{neel_phase_point, sample_neel_phase_point, Bloch, Tolerances, TrajectorySolver};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, NeelSpec, TimeGrid};
use crate::moments::MomentTable;
use crate::rng::StreamId;

/// Exhaustive enumeration visits `4^N` phase points.
pub const MAX_ENUMERATION_SITES: usize = 8;

/// Running Weyl-symbol sums over trajectories, one block per grid time.
///
/// Pair sums are packed over `i < j`. `xy` holds `r_i^x r_j^y` and `yx`
/// holds `r_i^y r_j^x`, which together with `xx` and `yy` give
/// `g_pm[i,j] = (xx + yy + i (yx - xy)) / 4n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    n_sites: usize,
    n_times: usize,
    n_samples: u64,
    z: Vec<f64>,
    zz: Vec<f64>,
    xx: Vec<f64>,
    yy: Vec<f64>,
    xy: Vec<f64>,
    yx: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(n_sites: usize, n_times: usize) -> Self {
        let n_pairs = n_sites * n_sites.saturating_sub(1) / 2;
        let pair_block = || vec![0.0; n_times * n_pairs];
        MomentAccumulator {
            n_sites,
            n_times,
            n_samples: 0,
            z: vec![0.0; n_times * n_sites],
            zz: pair_block(),
            xx: pair_block(),
            yy: pair_block(),
            xy: pair_block(),
            yx: pair_block(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    fn n_pairs(&self) -> usize {
        self.n_sites * (self.n_sites - 1) / 2
    }

    /// Adds one trajectory's configuration at grid index `k`. Call
    /// [`Self::finish_sample`] once the trajectory has visited every time.
    pub fn record(&mut self, k: usize, r: &[Bloch]) {
        let n = self.n_sites;
        debug_assert_eq!(r.len(), n);
        let z = &mut self.z[k * n..(k + 1) * n];
        for (acc, ri) in z.iter_mut().zip(r) {
            *acc += ri[2];
        }
        let base = k * self.n_pairs();
        let mut p = base;
        for i in 0..n {
            let [xi, yi, zi] = r[i];
            for rj in &r[i + 1..] {
                let [xj, yj, zj] = *rj;
                self.zz[p] += zi * zj;
                self.xx[p] += xi * xj;
                self.yy[p] += yi * yj;
                self.xy[p] += xi * yj;
                self.yx[p] += yi * xj;
                p += 1;
            }
        }
    }

    pub fn finish_sample(&mut self) {
        self.n_samples += 1;
    }

    /// Elementwise sum of two accumulators over the same grid.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        assert_eq!(
            (self.n_sites, self.n_times),
            (other.n_sites, other.n_times),
            "merging accumulators of different shape"
        );
        self.n_samples += other.n_samples;
        for (a, b) in [
            (&mut self.z, &other.z),
            (&mut self.zz, &other.zz),
            (&mut self.xx, &other.xx),
            (&mut self.yy, &other.yy),
            (&mut self.xy, &other.xy),
            (&mut self.yx, &other.yx),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn sum_z(&self, k: usize, i: usize) -> f64 {
        self.z[k * self.n_sites + i]
    }

    pub fn sum_zz(&self, k: usize, i: usize, j: usize) -> f64 {
        self.zz[k * self.n_pairs() + self.pair_index(i, j)]
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        debug_assert!(i != j && j < self.n_sites);
        i * (2 * self.n_sites - i - 1) / 2 + (j - i - 1)
    }

    /// Sample-mean moment table at grid index `k`.
    pub fn table(&self, k: usize) -> MomentTable {
        assert!(self.n_samples > 0, "no samples accumulated");
        let n = self.n_sites;
        let inv = 1.0 / self.n_samples as f64;
        let mut t = MomentTable::zeros(n);
        for i in 0..n {
            t.set_z(i, self.z[k * n + i] * inv);
        }
        let mut p = k * self.n_pairs();
        for i in 0..n {
            for j in i + 1..n {
                t.set_zz(i, j, self.zz[p] * inv);
                let re = 0.25 * (self.xx[p] + self.yy[p]) * inv;
                let im = 0.25 * (self.yx[p] - self.xy[p]) * inv;
                t.set_pm(i, j, Complex64::new(re, im));
                p += 1;
            }
        }
        t
    }

    pub fn tables(&self) -> Vec<MomentTable> {
        (0..self.n_times).map(|k| self.table(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub tol: Tolerances,
    /// Fixed trajectory batches; also the batch-means error estimate's groups.
    pub n_batches: usize,
    /// Size of a dedicated thread pool; `None` runs on the ambient rayon pool.
    pub workers: Option<usize>,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions {
            tol: Tolerances::default(),
            n_batches: 20,
            workers: None,
        }
    }
}

/// Runs `n_traj` trajectories and returns one accumulator per batch.
///
/// Trajectory `k` draws its phase point from `stream.with_trajectory(k)`.
/// Batches are fixed contiguous ranges of trajectory indices, each summed in
/// order, so the result does not depend on the thread count.
pub fn run_dtwa_batches(
    spec: &ModelSpec,
    neel: &NeelSpec,
    grid: &TimeGrid,
    n_traj: usize,
    stream: StreamId,
    opts: &EnsembleOptions,
) -> Result<Vec<MomentAccumulator>> {
    if n_traj < 2 {
        return Err(Error::InvalidEnsemble(format!(
            "need at least 2 trajectories, got {n_traj}"
        )));
    }
    if n_traj > u32::MAX as usize {
        return Err(Error::InvalidEnsemble(format!(
            "too many trajectories: {n_traj}"
        )));
    }
    if opts.n_batches == 0 {
        return Err(Error::InvalidEnsemble("need at least one batch".into()));
    }
    spec.validate()?;
    neel.matches(spec)?;
    opts.tol.validate()?;

    let n_batches = opts.n_batches.min(n_traj);
    let run = || {
        (0..n_batches)
            .into_par_iter()
            .map(|b| {
                let lo = b * n_traj / n_batches;
                let hi = (b + 1) * n_traj / n_batches;
                run_range(spec, grid, opts.tol, lo..hi, |k| {
                    let id = stream.with_trajectory(k as u32);
                    (id, sample_neel_phase_point(neel, &mut id.rng()))
                })
            })
            .collect::<Vec<Result<_>>>()
            // Sequential collect so the reported failure is the lowest batch.
            .into_iter()
            .collect::<Result<Vec<_>>>()
    };
    match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("thread pool")
            .install(run),
        None => run(),
    }
}

/// All batches of [`run_dtwa_batches`], merged in batch order.
pub fn run_dtwa_ensemble(
    spec: &ModelSpec,
    neel: &NeelSpec,
    grid: &TimeGrid,
    n_traj: usize,
    stream: StreamId,
    opts: &EnsembleOptions,
) -> Result<MomentAccumulator> {
    let batches = run_dtwa_batches(spec, neel, grid, n_traj, stream, opts)?;
    Ok(ensemble_total(&batches))
}

/// Sums over every one of the `4^N` discrete Néel phase points: the
/// infinite-sample limit of the Monte-Carlo ensemble.
pub fn enumerate_phase_space(
    spec: &ModelSpec,
    neel: &NeelSpec,
    grid: &TimeGrid,
    tol: Tolerances,
) -> Result<MomentAccumulator> {
    spec.validate()?;
    neel.matches(spec)?;
    if spec.n_sites > MAX_ENUMERATION_SITES {
        return Err(Error::InvalidEnsemble(format!(
            "exhaustive enumeration limited to {MAX_ENUMERATION_SITES} sites, got {}",
            spec.n_sites
        )));
    }
    let count = 1usize << (2 * spec.n_sites);
    // Enumeration has no random stream; errors carry the phase-point index.
    run_range(spec, grid, tol, 0..count, |k| {
        (
            StreamId::trajectory(0, u32::MAX, k as u32),
            neel_phase_point(neel, k as u64),
        )
    })
}

fn run_range<F>(
    spec: &ModelSpec,
    grid: &TimeGrid,
    tol: Tolerances,
    range: std::ops::Range<usize>,
    mut initial: F,
) -> Result<MomentAccumulator>
where
    F: FnMut(usize) -> (StreamId, super::BlochConfig),
{
    let mut acc = MomentAccumulator::new(spec.n_sites, grid.len());
    let mut solver = TrajectorySolver::new(spec, tol)?;
    for k in range {
        let (id, start) = initial(k);
        solver
            .run(&start, grid, |t, r| acc.record(t, r))
            .map_err(|e| Error::Trajectory {
                stream: id,
                source: Box::new(e),
            })?;
        acc.finish_sample();
    }
    Ok(acc)
}

/// Merges batches in order.
pub fn ensemble_total(batches: &[MomentAccumulator]) -> MomentAccumulator {
    let mut total = batches[0].clone();
    for b in &batches[1..] {
        total.merge(b);
    }
    total
}
