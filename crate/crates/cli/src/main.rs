use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mblw_cli::table::{series_rows, write_comparison, write_results};
use mblw_cli::{compare_runs, enumerate_series, run_sweep, RunConfig, RunManifest};
use mblw_core::dtwa::Tolerances;
use mblw_core::{
    make_time_grid, CvrmsdConvention, Method, ModelSpec, PairFilter, Spacing, StreamId,
};

#[derive(Parser)]
#[command(
    name = "mblw",
    version,
    about = "DTWA and exact dynamics of the disordered Heisenberg chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a disorder sweep and write results.csv and manifest.json.
    Run(RunArgs),
    /// Compare averaged exact and DTWA curves from two run directories.
    Compare(CompareArgs),
    /// Exhaustive DTWA over all 4^N phase points (N <= 3).
    Enumerate(EnumerateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run config; inline flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_sites: Option<usize>,
    #[arg(long)]
    coupling: Option<f64>,
    /// Disorder strengths, comma separated.
    #[arg(long = "h", value_delimiter = ',')]
    h: Option<Vec<f64>>,
    #[arg(long)]
    n_realizations: Option<usize>,
    #[arg(long)]
    n_traj: Option<usize>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// linear or log-plus-zero.
    #[arg(long)]
    spacing: Option<Spacing>,
    /// dtwa and/or ed, comma separated.
    #[arg(long = "backend", value_delimiter = ',')]
    backends: Option<Vec<Method>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "MBLW_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// all or nearest.
    #[arg(long)]
    pair_filter: Option<PairFilter>,
    /// mean or sum.
    #[arg(long)]
    cvrmsd_convention: Option<CvrmsdConvention>,
    /// Also write per-realization rows.
    #[arg(long)]
    keep_realizations: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    exact: PathBuf,
    #[arg(long)]
    dtwa: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "ed")]
    exact_method: Method,
    #[arg(long, default_value = "dtwa")]
    dtwa_method: Method,
    /// Defaults to the exact run's configured convention.
    #[arg(long)]
    cvrmsd_convention: Option<CvrmsdConvention>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    n_sites: usize,
    #[arg(long, default_value_t = 1.0)]
    coupling: f64,
    #[arg(long = "h", default_value_t = 0.0)]
    h: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Disorder realization index.
    #[arg(long, default_value_t = 0)]
    realization: u32,
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    #[arg(long, default_value_t = 101)]
    grid_points: usize,
    #[arg(long, default_value = "linear")]
    spacing: Spacing,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
        Command::Enumerate(args) => enumerate(args),
    }
}

fn run(a: RunArgs) -> Result<()> {
    let mut c = match (&a.config, a.n_sites) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(n)) => RunConfig::new(n),
        (None, None) => anyhow::bail!("either --config or --n-sites is required"),
    };
    if let Some(v) = a.n_sites {
        c.n_sites = v;
    }
    if let Some(v) = a.coupling {
        c.coupling = v;
    }
    if let Some(v) = a.h {
        c.disorder_strengths = v;
    }
    if let Some(v) = a.n_realizations {
        c.n_realizations = v;
    }
    if let Some(v) = a.n_traj {
        c.n_traj = v;
    }
    if let Some(v) = a.t_max {
        c.grid.t_max = v;
    }
    if let Some(v) = a.grid_points {
        c.grid.points = v;
    }
    if let Some(v) = a.spacing {
        c.grid.spacing = v;
    }
    if let Some(v) = a.backends {
        c.backends = v;
    }
    if let Some(v) = a.seed {
        c.master_seed = v;
    }
    if let Some(v) = a.workers {
        c.workers = Some(v);
    }
    if let Some(v) = a.out {
        c.output_dir = v;
    }
    if let Some(v) = a.pair_filter {
        c.pair_filter = v;
    }
    if let Some(v) = a.cvrmsd_convention {
        c.cvrmsd_convention = v;
    }
    if a.keep_realizations {
        c.keep_realizations = true;
    }

    let outcome = run_sweep(&c)?;
    let t = &outcome.manifest.timings;
    println!(
        "wrote {} ({} realizations, {} failed, {} resumed) in {:.1}s",
        outcome.results_path.display(),
        outcome.manifest.realizations.len(),
        outcome.manifest.failures.len(),
        t.resumed,
        t.wall_seconds
    );
    for s in &outcome.averages {
        let k = s.grid.len() - 1;
        println!(
            "  {:<4} h = {:<5} I/N(t_max) = {:.4} ± {:.4}",
            s.method.to_string(),
            s.disorder_strength,
            s.imbalance[k].value / s.n_sites as f64,
            s.imbalance[k].stderr / s.n_sites as f64
        );
    }
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let convention = match a.cvrmsd_convention {
        Some(c) => c,
        None => {
            let path = a.exact.join(mblw_cli::manifest::MANIFEST_FILE);
            RunManifest::load(&path)
                .map(|m| m.config.cvrmsd_convention)
                .unwrap_or_default()
        }
    };
    let report = compare_runs(&a.exact, &a.dtwa, a.exact_method, a.dtwa_method, convention)?;
    write_comparison(&a.out, &report.rows)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "{:<16} {:>6} {:>12} {:>10}",
        "observable", "h", "mse", "cvrmsd"
    );
    for r in &report.rows {
        let cv = r.cvrmsd.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<16} {:>6} {:>12.5e} {:>10}",
            r.observable.name(),
            r.disorder_strength,
            r.mse,
            cv
        );
    }
    Ok(())
}

fn enumerate(a: EnumerateArgs) -> Result<()> {
    let spec = ModelSpec::sample(
        a.n_sites,
        a.coupling,
        a.h,
        &StreamId::disorder(a.seed, a.realization),
    )?;
    let grid = make_time_grid(a.t_max, a.grid_points, a.spacing)?;
    let series = enumerate_series(&spec, &grid, Tolerances::default(), PairFilter::All)?;
    write_results(&a.out, &series_rows(&series, i64::from(a.realization)))?;
    println!(
        "wrote {} ({} phase points)",
        a.out.display(),
        1u64 << (2 * a.n_sites)
    );
    Ok(())
}
