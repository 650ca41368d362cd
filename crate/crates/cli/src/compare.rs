//! Exact-vs-DTWA agreement from two results files.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Result};
use mblw_core::{
    cvrmsd, mse, ComparisonReport, ComparisonRow, CvrmsdConvention, Error, Method, Observable,
};

use crate::manifest::RESULTS_FILE;
use crate::table::{read_results, ResultRow, AVERAGE};

/// Averaged curves of one method, keyed by `(observable, h bits)`, in file order.
struct Curves {
    n_sites: usize,
    h_values: Vec<f64>,
    curves: BTreeMap<(Observable, u64), (Vec<f64>, Vec<f64>)>,
}

fn load_curves(dir: &Path, method: Method) -> Result<Curves> {
    let rows = read_results(&dir.join(RESULTS_FILE))?;
    let rows: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.method == method && r.realization == AVERAGE)
        .collect();
    if rows.is_empty() {
        bail!("{} has no disorder-averaged {method} rows", dir.display());
    }
    let n_sites = rows[0].n_sites;
    if rows.iter().any(|r| r.n_sites != n_sites) {
        bail!("{} mixes chain sizes", dir.display());
    }
    let mut h_values = Vec::new();
    let mut curves: BTreeMap<(Observable, u64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        if !h_values.contains(&r.h) {
            h_values.push(r.h);
        }
        let c = curves.entry((r.observable, r.h.to_bits())).or_default();
        c.0.push(r.t);
        c.1.push(r.value);
    }
    Ok(Curves {
        n_sites,
        h_values,
        curves,
    })
}

/// MSE and CVRMSD of `dtwa_method` against `exact_method` for every
/// observable both carry, observable-major, h in the exact run's order.
pub fn compare_runs(
    exact_dir: &Path,
    dtwa_dir: &Path,
    exact_method: Method,
    dtwa_method: Method,
    convention: CvrmsdConvention,
) -> Result<ComparisonReport> {
    let exact = load_curves(exact_dir, exact_method)?;
    let approx = load_curves(dtwa_dir, dtwa_method)?;
    if exact.n_sites != approx.n_sites {
        bail!(
            "chain sizes differ: {} vs {}",
            exact.n_sites,
            approx.n_sites
        );
    }
    let mut a = exact.h_values.clone();
    let mut b = approx.h_values.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    if a != b {
        bail!(
            "disorder sweeps differ: {:?} vs {:?}",
            exact.h_values,
            approx.h_values
        );
    }

    let mut report = ComparisonReport::default();
    for obs in Observable::ALL {
        for &h in &exact.h_values {
            let key = (obs, h.to_bits());
            let (Some((tf, f)), Some((tg, g))) = (exact.curves.get(&key), approx.curves.get(&key))
            else {
                continue;
            };
            if tf != tg {
                bail!("time grids differ for {} at h = {h}", obs.name());
            }
            report.rows.push(ComparisonRow {
                observable: obs,
                disorder_strength: h,
                mse: mse(f, g)?,
                cvrmsd: match cvrmsd(f, g, convention) {
                    Ok(v) => Some(v),
                    Err(Error::UndefinedCvrmsd) => None,
                    Err(e) => return Err(e.into()),
                },
                m_points: f.len(),
            });
        }
    }
    if report.rows.is_empty() {
        bail!("the two runs share no observable");
    }
    Ok(report)
}
