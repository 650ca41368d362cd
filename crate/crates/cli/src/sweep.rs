//! Disorder sweeps: every (h, realization) pair through every backend,
//! resumable through per-realization fragment files.

use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use mblw_core::dtwa::EnsembleOptions;
use mblw_core::{
    disorder_average, dtwa_series, exact_series, ErrorMode, Method, ModelSpec, ObservableSeries,
    StreamId, TimeGrid,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::manifest::{
    FailureRecord, RealizationRecord, RunManifest, RunStatus, Timings, ARTIFACT_VERSION,
    FRAGMENT_DIR, MANIFEST_FILE, RESULTS_FILE,
};
use crate::table::{series_rows, write_atomic, write_results, ResultRow, AVERAGE};

/// A run fails outright when more than this fraction of realizations fail.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

/// Everything one realization produced, one series per backend in config order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub h: f64,
    pub realization: u32,
    pub series: Vec<ObservableSeries>,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub manifest: RunManifest,
    /// Disorder averages, h-major then backend order.
    pub averages: Vec<ObservableSeries>,
    pub results_path: PathBuf,
}

struct Job {
    h_index: usize,
    realization: u32,
    spec: ModelSpec,
}

enum JobResult {
    Done {
        fragment: Fragment,
        ed: f64,
        dtwa: f64,
        resumed: bool,
    },
    Failed(Vec<FailureRecord>),
}

/// Runs `config` into `config.output_dir`. Finished realizations found there
/// from an earlier run with the same config are reused, not recomputed.
pub fn run_sweep(config: &RunConfig) -> Result<SweepOutcome> {
    let started = Instant::now();
    config.validate()?;
    let grid = config.grid.build()?;
    let out = &config.output_dir;
    let frag_dir = out.join(FRAGMENT_DIR);
    std::fs::create_dir_all(&frag_dir)
        .with_context(|| format!("creating {}", frag_dir.display()))?;
    let manifest_path = out.join(MANIFEST_FILE);
    if manifest_path.exists() {
        let previous = RunManifest::load(&manifest_path)?;
        if !same_run(&previous.config, config) {
            bail!(
                "{} holds a run with a different configuration; use a fresh output directory",
                out.display()
            );
        }
    }

    let mut jobs = Vec::new();
    let mut records = Vec::new();
    for (h_index, &h) in config.disorder_strengths.iter().enumerate() {
        for r in 0..config.n_realizations as u32 {
            let stream = StreamId::disorder(config.master_seed, r);
            let spec = ModelSpec::sample(config.n_sites, config.coupling, h, &stream)?;
            records.push(RealizationRecord {
                h,
                realization: r,
                disorder_stream: stream,
                trajectory_stream: config
                    .backends
                    .contains(&Method::Dtwa)
                    .then(|| StreamId::trajectory(config.master_seed, r, 0)),
                fields: spec.fields.clone(),
            });
            jobs.push(Job {
                h_index,
                realization: r,
                spec,
            });
        }
    }
    let mut manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        status: RunStatus::Running,
        config: config.clone(),
        realizations: records,
        failures: Vec::new(),
        timings: Timings::default(),
    };
    manifest.save(&manifest_path)?;

    let workers = config.workers.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?;
    let results = run_jobs(config, &grid, &jobs, &frag_dir, &pool)?;

    let output_started = Instant::now();
    let mut fragments: Vec<Vec<Fragment>> = vec![Vec::new(); config.disorder_strengths.len()];
    for (job, res) in jobs.iter().zip(results) {
        match res {
            JobResult::Done {
                fragment,
                ed,
                dtwa,
                resumed,
            } => {
                manifest.timings.ed_seconds += ed;
                manifest.timings.dtwa_seconds += dtwa;
                manifest.timings.resumed += usize::from(resumed);
                fragments[job.h_index].push(fragment);
            }
            JobResult::Failed(f) => manifest.failures.extend(f),
        }
    }

    let failed: std::collections::BTreeSet<(u64, u32)> = manifest
        .failures
        .iter()
        .map(|f| (f.h.to_bits(), f.realization))
        .collect();
    let total = jobs.len();
    if failed.len() as f64 > MAX_FAILURE_FRACTION * total as f64 {
        manifest.status = RunStatus::Failed;
        manifest.timings.wall_seconds = started.elapsed().as_secs_f64();
        manifest.save(&manifest_path)?;
        let first = &manifest.failures[0];
        bail!(
            "{} of {total} realizations failed (limit {:.0}%); first: h = {}, realization {}, {}: {}",
            failed.len(),
            MAX_FAILURE_FRACTION * 100.0,
            first.h,
            first.realization,
            first.method,
            first.error
        );
    }

    let mut averages = Vec::new();
    let mut rows: Vec<ResultRow> = Vec::new();
    for (h_index, frags) in fragments.iter().enumerate() {
        let h = config.disorder_strengths[h_index];
        if frags.is_empty() {
            bail!("every realization at h = {h} failed");
        }
        for (b, _) in config.backends.iter().enumerate() {
            let per: Vec<ObservableSeries> = frags.iter().map(|f| f.series[b].clone()).collect();
            let avg = disorder_average(&per)?;
            rows.extend(series_rows(&avg, AVERAGE));
            if config.keep_realizations {
                for f in frags {
                    rows.extend(series_rows(&f.series[b], i64::from(f.realization)));
                }
            }
            averages.push(avg);
        }
    }
    let results_path = out.join(RESULTS_FILE);
    write_results(&results_path, &rows)?;

    manifest.status = RunStatus::Complete;
    manifest.timings.output_seconds = output_started.elapsed().as_secs_f64();
    manifest.timings.wall_seconds = started.elapsed().as_secs_f64();
    manifest.save(&manifest_path)?;
    Ok(SweepOutcome {
        manifest,
        averages,
        results_path,
    })
}

/// Settings that cannot change the numbers are free to differ on resume.
fn same_run(a: &RunConfig, b: &RunConfig) -> bool {
    let norm = |c: &RunConfig| RunConfig {
        workers: None,
        output_dir: PathBuf::new(),
        ..c.clone()
    };
    norm(a) == norm(b)
}

fn fragment_path(dir: &Path, h_index: usize, realization: u32) -> PathBuf {
    dir.join(format!("h{h_index:03}_r{realization:06}.json"))
}

fn run_jobs(
    config: &RunConfig,
    grid: &TimeGrid,
    jobs: &[Job],
    frag_dir: &Path,
    pool: &rayon::ThreadPool,
) -> Result<Vec<JobResult>> {
    // Workers only compute; one thread owns every write.
    let (tx, rx) = mpsc::channel::<(PathBuf, Vec<u8>)>();
    std::thread::scope(|scope| {
        let writer = scope.spawn(move || -> Result<()> {
            for (path, bytes) in rx {
                write_atomic(&path, &bytes)?;
            }
            Ok(())
        });
        let results = pool.install(|| {
            jobs.par_iter()
                .map_with(tx, |tx, job| run_job(config, grid, job, frag_dir, tx))
                .collect::<Result<Vec<_>>>()
        });
        writer
            .join()
            .map_err(|_| anyhow!("fragment writer panicked"))??;
        results
    })
}

fn run_job(
    config: &RunConfig,
    grid: &TimeGrid,
    job: &Job,
    frag_dir: &Path,
    tx: &mpsc::Sender<(PathBuf, Vec<u8>)>,
) -> Result<JobResult> {
    let path = fragment_path(frag_dir, job.h_index, job.realization);
    if path.exists() {
        let text = std::fs::read_to_string(&path)?;
        let fragment: Fragment = serde_json::from_str(&text)
            .with_context(|| format!("parsing fragment {}", path.display()))?;
        return Ok(JobResult::Done {
            fragment,
            ed: 0.0,
            dtwa: 0.0,
            resumed: true,
        });
    }
    let (mut ed_time, mut dtwa_time) = (0.0, 0.0);
    let mut series = Vec::new();
    let mut failures = Vec::new();
    for &method in &config.backends {
        let t0 = Instant::now();
        let res = match method {
            Method::Ed => exact_series(
                &job.spec,
                grid,
                config.pair_filter,
                config.tolerances.krylov,
            ),
            Method::Dtwa => dtwa_series(
                &job.spec,
                grid,
                config.n_traj,
                StreamId::trajectory(config.master_seed, job.realization, 0),
                &EnsembleOptions {
                    tol: config.tolerances.dtwa,
                    ..Default::default()
                },
                config.pair_filter,
                ErrorMode::BatchMeans,
            ),
        };
        let dt = t0.elapsed().as_secs_f64();
        match method {
            Method::Ed => ed_time += dt,
            Method::Dtwa => dtwa_time += dt,
        }
        match res {
            Ok(s) => series.push(s),
            Err(e) => failures.push(FailureRecord {
                h: job.spec.disorder_strength,
                realization: job.realization,
                method,
                error: e.to_string(),
            }),
        }
    }
    if !failures.is_empty() {
        // Both backends are dropped so the comparison stays paired.
        return Ok(JobResult::Failed(failures));
    }
    let fragment = Fragment {
        h: job.spec.disorder_strength,
        realization: job.realization,
        series,
    };
    tx.send((path, serde_json::to_vec(&fragment)?))
        .map_err(|_| anyhow!("fragment writer stopped"))?;
    Ok(JobResult::Done {
        fragment,
        ed: ed_time,
        dtwa: dtwa_time,
        resumed: false,
    })
}
