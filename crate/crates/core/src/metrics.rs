//! Agreement between an exact series `f` and a DTWA series `g`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{Observable, ObservableSeries};

/// `MSE = Σ (f_i - g_i)² / M`.
pub fn mse(f: &[f64], g: &[f64]) -> Result<f64> {
    check_lengths(f, g)?;
    Ok(f.iter().zip(g).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / f.len() as f64)
}

/// Normalization of the root-mean-square deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvrmsdConvention {
    /// `√MSE / mean(f)`.
    #[default]
    Mean,
    /// `√MSE / Σ f`, the unnormalized sum.
    Sum,
}

impl FromStr for CvrmsdConvention {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mean" => Ok(CvrmsdConvention::Mean),
            "sum" => Ok(CvrmsdConvention::Sum),
            other => Err(format!("unknown CVRMSD convention `{other}`")),
        }
    }
}

/// `ε = √MSE / f̄`. Undefined when the reference has zero mean.
pub fn cvrmsd(f: &[f64], g: &[f64], convention: CvrmsdConvention) -> Result<f64> {
    let m = mse(f, g)?;
    let total: f64 = f.iter().sum();
    let norm = match convention {
        CvrmsdConvention::Mean => total / f.len() as f64,
        CvrmsdConvention::Sum => total,
    };
    if norm == 0.0 {
        return Err(Error::UndefinedCvrmsd);
    }
    Ok(m.sqrt() / norm)
}

fn check_lengths(f: &[f64], g: &[f64]) -> Result<()> {
    if f.is_empty() {
        return Err(Error::SeriesMismatch("empty series".into()));
    }
    if f.len() != g.len() {
        return Err(Error::SeriesMismatch(format!(
            "series lengths differ: {} vs {}",
            f.len(),
            g.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub observable: Observable,
    pub disorder_strength: f64,
    pub mse: f64,
    /// `None` when undefined.
    pub cvrmsd: Option<f64>,
    pub m_points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    /// Rows for one observable, in insertion (disorder-strength) order.
    pub fn for_observable(&self, obs: Observable) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(move |r| r.observable == obs)
    }
}

/// Compares every observable the two series share. Grids must be identical;
/// there is no interpolation.
pub fn compare_series(
    exact: &ObservableSeries,
    approx: &ObservableSeries,
    convention: CvrmsdConvention,
) -> Result<Vec<ComparisonRow>> {
    if exact.grid != approx.grid {
        return Err(Error::SeriesMismatch("time grids differ".into()));
    }
    if exact.n_sites != approx.n_sites {
        return Err(Error::SeriesMismatch(format!(
            "sizes differ: {} vs {}",
            exact.n_sites, approx.n_sites
        )));
    }
    if exact.disorder_strength != approx.disorder_strength {
        return Err(Error::SeriesMismatch(format!(
            "disorder strengths differ: {} vs {}",
            exact.disorder_strength, approx.disorder_strength
        )));
    }
    let mut rows = Vec::new();
    for obs in exact.observables() {
        let (Some(f), Some(g)) = (exact.values(obs), approx.values(obs)) else {
            continue;
        };
        rows.push(ComparisonRow {
            observable: obs,
            disorder_strength: exact.disorder_strength,
            mse: mse(&f, &g)?,
            cvrmsd: match cvrmsd(&f, &g, convention) {
                Ok(v) => Some(v),
                Err(Error::UndefinedCvrmsd) => None,
                Err(e) => return Err(e),
            },
            m_points: f.len(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(mse(&[3.0, -1.0, 0.5], &[2.5, -1.5, 0.0]).unwrap(), 0.25);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn cvrmsd_examples() {
        let c = CvrmsdConvention::Mean;
        assert_eq!(cvrmsd(&[1.0, 2.0], &[1.0, 2.0], c).unwrap(), 0.0);
        assert_eq!(cvrmsd(&[2.0, 2.0], &[1.0, 1.0], c).unwrap(), 0.5);
        let v = cvrmsd(&[1.0, 3.0], &[1.0, 1.0], c).unwrap();
        assert!((v - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(matches!(
            cvrmsd(&[1.0, -1.0], &[0.0, 0.0], c),
            Err(Error::UndefinedCvrmsd)
        ));
        assert_eq!(
            cvrmsd(&[2.0, 2.0], &[1.0, 1.0], CvrmsdConvention::Sum).unwrap(),
            0.25
        );
    }

    proptest! {
        #[test]
        fn mse_symmetric_and_permutation_invariant(
            pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..50),
            rot in 0usize..50,
        ) {
            let f: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let g: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let a = mse(&f, &g).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert_eq!(a, mse(&g, &f).unwrap());
            let k = rot % f.len();
            let (mut fr, mut gr) = (f.clone(), g.clone());
            fr.rotate_left(k);
            gr.rotate_left(k);
            prop_assert!((a - mse(&fr, &gr).unwrap()).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn constant_offset(d in -5.0f64..5.0, m in 1usize..40) {
            let f = vec![1.0; m];
            let g: Vec<f64> = f.iter().map(|x| x + d).collect();
            prop_assert!((mse(&f, &g).unwrap() - d * d).abs() < 1e-12);
        }
    }
}
