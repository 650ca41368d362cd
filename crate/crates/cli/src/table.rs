//! The long-format results CSV and the comparison CSV.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use mblw_core::{ComparisonRow, Method, Observable, ObservableSeries};
use serde::{Deserialize, Serialize};

/// Realization index of a disorder-averaged row.
pub const AVERAGE: i64 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub h: f64,
    pub realization: i64,
    pub t: f64,
    pub observable: Observable,
    pub value: f64,
    pub stderr: f64,
}

/// Rows of one series: observable-major, then time.
pub fn series_rows(series: &ObservableSeries, realization: i64) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for obs in series.observables() {
        let est = series.estimates(obs).expect("listed observable");
        for (t, e) in series.grid.points().iter().zip(est) {
            rows.push(ResultRow {
                method: series.method,
                n_sites: series.n_sites,
                h: series.disorder_strength,
                realization,
                t: *t,
                observable: obs,
                value: e.value,
                stderr: e.stderr,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ComparisonRecord {
    observable: Observable,
    h: f64,
    mse: f64,
    cvrmsd: Option<f64>,
    m_points: usize,
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    read_csv(path)
}

pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let records: Vec<ComparisonRecord> = rows
        .iter()
        .map(|r| ComparisonRecord {
            observable: r.observable,
            h: r.disorder_strength,
            mse: r.mse,
            cvrmsd: r.cvrmsd,
            m_points: r.m_points,
        })
        .collect();
    write_csv(path, &records)
}

pub fn read_comparison(path: &Path) -> Result<Vec<ComparisonRow>> {
    let records: Vec<ComparisonRecord> = read_csv(path)?;
    Ok(records
        .into_iter()
        .map(|r| ComparisonRow {
            observable: r.observable,
            disorder_strength: r.h,
            mse: r.mse,
            cvrmsd: r.cvrmsd,
            m_points: r.m_points,
        })
        .collect())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().context("flushing csv")?;
    write_atomic(path, &bytes)
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    let mut f = fs::File::create(tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mblw_core::{make_time_grid, Estimate, Spacing};

    fn series() -> ObservableSeries {
        let grid = make_time_grid(1.0, 3, Spacing::Linear).unwrap();
        let e = |v: f64| Estimate {
            value: v,
            stderr: 0.1 * v.abs(),
        };
        ObservableSeries {
            method: Method::Ed,
            n_sites: 4,
            disorder_strength: 2.5,
            realizations: 1,
            grid,
            imbalance: vec![e(4.0), e(1.0 / 3.0), e(-0.2)],
            qfi: vec![e(0.0), e(2.0), e(3.0)],
            renyi2: vec![e(0.0), e(0.1), e(0.7)],
            s1_halfchain: Some(vec![e(0.0), e(0.3), e(0.9)]),
        }
    }

    #[test]
    fn header_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = series_rows(&series(), AVERAGE);
        assert_eq!(rows.len(), 6 * 3);
        write_results(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,N,h,realization,t,observable,value,stderr"
        );
        assert_eq!(lines.next().unwrap(), "ed,4,2.5,-1,0.0,imbalance,4.0,0.4");
        assert_eq!(read_results(&path).unwrap(), rows);
    }

    #[test]
    fn undefined_cvrmsd_is_blank() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let rows = vec![ComparisonRow {
            observable: Observable::Qfi,
            disorder_strength: 1.0,
            mse: 0.25,
            cvrmsd: None,
            m_points: 3,
        }];
        write_comparison(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "observable,h,mse,cvrmsd,m_points\nqfi,1.0,0.25,,3\n");
        assert_eq!(read_comparison(&path).unwrap(), rows);
    }
}
