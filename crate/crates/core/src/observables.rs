//! Imbalance, quantum Fisher information and two-site Rényi entropy from
//! moment tables, plus time series with error bars for either backend.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dtwa::MomentAccumulator;
use crate::error::{Error, Result};
use crate::model::{staggered_sign, TimeGrid};
use crate::moments::MomentTable;

/// `I = Σ_i (-1)^{i+1} ⟨σ_i^z⟩` (one-based sites).
pub fn imbalance(m: &MomentTable) -> f64 {
    (0..m.n_sites()).map(|i| staggered_sign(i) * m.z(i)).sum()
}

/// `F = 4 Var(I) = 4 [Σ_{i≠j} (-1)^{i+j} g_zz[i,j] + N - I²]`.
///
/// The `+N` is the diagonal `(σ_i^z)² = 1`, whose Weyl symbol is also 1, so
/// the same expression serves both backends.
pub fn qfi(m: &MomentTable) -> f64 {
    let n = m.n_sites();
    let off: f64 = m
        .pairs()
        .map(|(i, j)| staggered_sign(i) * staggered_sign(j) * m.zz(i, j))
        .sum();
    let i = imbalance(m);
    4.0 * (2.0 * off + n as f64 - i * i)
}

/// `S₂(ρ_ij) = -log₂ ¼[1 + g_z0² + g_0z² + g_zz² + 8|g_pm|²]`.
///
/// Exact for states with conserved total `S^z`; evaluated on DTWA symbol
/// averages as-is, never clamped.
pub fn renyi2_pair(m: &MomentTable, i: usize, j: usize) -> f64 {
    debug_assert_ne!(i, j);
    let purity = 0.25
        * (1.0
            + m.z(i).powi(2)
            + m.z(j).powi(2)
            + m.zz(i, j).powi(2)
            + 8.0 * m.pm(i, j).norm_sqr());
    -purity.log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFilter {
    #[default]
    All,
    Nearest,
}

impl FromStr for PairFilter {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "all" => Ok(PairFilter::All),
            "nearest" => Ok(PairFilter::Nearest),
            other => Err(format!("unknown pair filter `{other}`")),
        }
    }
}

/// Mean of [`renyi2_pair`] over the selected pairs `i < j`.
pub fn renyi2_average(m: &MomentTable, filter: PairFilter) -> Result<f64> {
    let pairs: Vec<(usize, usize)> = match filter {
        PairFilter::All => m.pairs().collect(),
        PairFilter::Nearest => (0..m.n_sites().saturating_sub(1))
            .map(|i| (i, i + 1))
            .collect(),
    };
    if pairs.is_empty() {
        return Err(Error::EmptyPairSet);
    }
    Ok(pairs
        .iter()
        .map(|&(i, j)| renyi2_pair(m, i, j))
        .sum::<f64>()
        / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dtwa,
    Ed,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Dtwa => "dtwa",
            Method::Ed => "ed",
        })
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dtwa" => Ok(Method::Dtwa),
            "ed" => Ok(Method::Ed),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Imbalance,
    ImbalancePerN,
    Qfi,
    QfiPerN,
    Renyi2Avg,
    S1Halfchain,
}

impl Observable {
    pub const ALL: [Observable; 6] = [
        Observable::Imbalance,
        Observable::ImbalancePerN,
        Observable::Qfi,
        Observable::QfiPerN,
        Observable::Renyi2Avg,
        Observable::S1Halfchain,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Observable::Imbalance => "imbalance",
            Observable::ImbalancePerN => "imbalance_per_n",
            Observable::Qfi => "qfi",
            Observable::QfiPerN => "qfi_per_n",
            Observable::Renyi2Avg => "renyi2_avg",
            Observable::S1Halfchain => "s1_halfchain",
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Observable::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown observable `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }
}

/// How DTWA error bars are estimated from trajectory batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    #[default]
    BatchMeans,
    Jackknife,
}

/// Observables on a time grid for one method, disorder strength and size.
/// `realizations` is 1 for a single realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub method: Method,
    pub n_sites: usize,
    pub disorder_strength: f64,
    pub realizations: usize,
    pub grid: TimeGrid,
    pub imbalance: Vec<Estimate>,
    pub qfi: Vec<Estimate>,
    pub renyi2: Vec<Estimate>,
    /// Half-chain von Neumann entropy; exact backend only.
    pub s1_halfchain: Option<Vec<Estimate>>,
}

impl ObservableSeries {
    /// Exact series from one moment table per grid time.
    pub fn from_tables(
        method: Method,
        disorder_strength: f64,
        grid: &TimeGrid,
        tables: &[MomentTable],
        filter: PairFilter,
    ) -> Result<Self> {
        if tables.len() != grid.len() {
            return Err(Error::SeriesMismatch(format!(
                "{} tables for {} grid points",
                tables.len(),
                grid.len()
            )));
        }
        let n_sites = tables.first().map(|t| t.n_sites()).unwrap_or(0);
        let mut renyi2 = Vec::with_capacity(tables.len());
        for t in tables {
            renyi2.push(Estimate::exact(renyi2_average(t, filter)?));
        }
        Ok(ObservableSeries {
            method,
            n_sites,
            disorder_strength,
            realizations: 1,
            grid: grid.clone(),
            imbalance: tables
                .iter()
                .map(|t| Estimate::exact(imbalance(t)))
                .collect(),
            qfi: tables.iter().map(|t| Estimate::exact(qfi(t))).collect(),
            renyi2,
            s1_halfchain: None,
        })
    }

    /// DTWA series: plug-in point estimates from all batches pooled, error
    /// bars from the spread between batches.
    pub fn from_batches(
        disorder_strength: f64,
        grid: &TimeGrid,
        batches: &[MomentAccumulator],
        filter: PairFilter,
        mode: ErrorMode,
    ) -> Result<Self> {
        if batches.is_empty() {
            return Err(Error::InvalidEnsemble("no trajectory batches".into()));
        }
        if batches.iter().any(|b| b.n_times() != grid.len()) {
            return Err(Error::SeriesMismatch(
                "batch grid differs from series grid".into(),
            ));
        }
        let total = crate::dtwa::ensemble_total(batches);
        let n_sites = total.n_sites();
        let b = batches.len();
        let mut imb = Vec::with_capacity(grid.len());
        let mut fis = Vec::with_capacity(grid.len());
        let mut ren = Vec::with_capacity(grid.len());

        let leave_one_out: Vec<MomentAccumulator> = match mode {
            ErrorMode::BatchMeans => Vec::new(),
            ErrorMode::Jackknife => (0..b)
                .map(|skip| {
                    let mut acc = MomentAccumulator::new(n_sites, grid.len());
                    for (k, batch) in batches.iter().enumerate() {
                        if k != skip {
                            acc.merge(batch);
                        }
                    }
                    acc
                })
                .collect(),
        };

        for k in 0..grid.len() {
            let point = observe(&total.table(k), filter)?;
            let spread = |f: &dyn Fn(&[f64; 3]) -> f64, samples: &[[f64; 3]]| -> f64 {
                let vals: Vec<f64> = samples.iter().map(f).collect();
                match mode {
                    ErrorMode::BatchMeans => standard_error(&vals),
                    ErrorMode::Jackknife => jackknife_error(&vals),
                }
            };
            let samples: Vec<[f64; 3]> = if b < 2 {
                Vec::new()
            } else {
                let source = match mode {
                    ErrorMode::BatchMeans => batches,
                    ErrorMode::Jackknife => &leave_one_out[..],
                };
                source
                    .iter()
                    .filter(|a| a.n_samples() > 0)
                    .map(|a| observe(&a.table(k), filter))
                    .collect::<Result<_>>()?
            };
            imb.push(Estimate {
                value: point[0],
                stderr: spread(&|s| s[0], &samples),
            });
            fis.push(Estimate {
                value: point[1],
                stderr: spread(&|s| s[1], &samples),
            });
            ren.push(Estimate {
                value: point[2],
                stderr: spread(&|s| s[2], &samples),
            });
        }
        Ok(ObservableSeries {
            method: Method::Dtwa,
            n_sites,
            disorder_strength,
            realizations: 1,
            grid: grid.clone(),
            imbalance: imb,
            qfi: fis,
            renyi2: ren,
            s1_halfchain: None,
        })
    }

    /// The per-time estimates of `obs`, or `None` if this series lacks it.
    pub fn estimates(&self, obs: Observable) -> Option<Vec<Estimate>> {
        let n = self.n_sites as f64;
        let scaled = |v: &[Estimate]| {
            v.iter()
                .map(|e| Estimate {
                    value: e.value / n,
                    stderr: e.stderr / n,
                })
                .collect()
        };
        match obs {
            Observable::Imbalance => Some(self.imbalance.clone()),
            Observable::ImbalancePerN => Some(scaled(&self.imbalance)),
            Observable::Qfi => Some(self.qfi.clone()),
            Observable::QfiPerN => Some(scaled(&self.qfi)),
            Observable::Renyi2Avg => Some(self.renyi2.clone()),
            Observable::S1Halfchain => self.s1_halfchain.clone(),
        }
    }

    pub fn values(&self, obs: Observable) -> Option<Vec<f64>> {
        self.estimates(obs)
            .map(|v| v.iter().map(|e| e.value).collect())
    }

    /// Observables this series carries, in output order.
    pub fn observables(&self) -> Vec<Observable> {
        Observable::ALL
            .into_iter()
            .filter(|o| *o != Observable::S1Halfchain || self.s1_halfchain.is_some())
            .collect()
    }

    /// `F/N > 1` at grid index `k`: multipartite entanglement witnessed.
    pub fn entanglement_witnessed(&self, k: usize) -> bool {
        self.qfi[k].value / self.n_sites as f64 > 1.0
    }

    /// DTWA QFI below zero by more than five standard errors.
    pub fn qfi_suspicious(&self, k: usize) -> bool {
        let e = self.qfi[k];
        e.value < -5.0 * e.stderr
    }
}

fn observe(m: &MomentTable, filter: PairFilter) -> Result<[f64; 3]> {
    Ok([imbalance(m), qfi(m), renyi2_average(m, filter)?])
}

/// Standard error of the mean of `values` (zero for fewer than two values).
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

fn jackknife_error(leave_one_out: &[f64]) -> f64 {
    let n = leave_one_out.len();
    if n < 2 {
        return 0.0;
    }
    let mean = leave_one_out.iter().sum::<f64>() / n as f64;
    let ss = leave_one_out
        .iter()
        .map(|v| (v - mean).powi(2))
        .sum::<f64>();
    ((n - 1) as f64 / n as f64 * ss).sqrt()
}

/// Average over disorder realizations with cross-realization standard
/// errors. A single realization keeps its own error bars.
pub fn disorder_average(series: &[ObservableSeries]) -> Result<ObservableSeries> {
    let first = series
        .first()
        .ok_or_else(|| Error::SeriesMismatch("no realizations to average".into()))?;
    for s in series {
        if s.grid != first.grid || s.n_sites != first.n_sites || s.method != first.method {
            return Err(Error::SeriesMismatch(
                "realizations differ in grid, size or method".into(),
            ));
        }
        if s.disorder_strength != first.disorder_strength {
            return Err(Error::SeriesMismatch(
                "realizations differ in disorder strength".into(),
            ));
        }
    }
    if series.len() == 1 {
        return Ok(first.clone());
    }
    let r = series.len();
    let avg = |pick: &dyn Fn(&ObservableSeries) -> &Vec<Estimate>| -> Vec<Estimate> {
        (0..first.grid.len())
            .map(|k| {
                let vals: Vec<f64> = series.iter().map(|s| pick(s)[k].value).collect();
                Estimate {
                    value: vals.iter().sum::<f64>() / r as f64,
                    stderr: standard_error(&vals),
                }
            })
            .collect()
    };
    let s1 = if series.iter().all(|s| s.s1_halfchain.is_some()) {
        Some(avg(&|s| s.s1_halfchain.as_ref().unwrap()))
    } else {
        None
    };
    Ok(ObservableSeries {
        method: first.method,
        n_sites: first.n_sites,
        disorder_strength: first.disorder_strength,
        realizations: r,
        grid: first.grid.clone(),
        imbalance: avg(&|s| &s.imbalance),
        qfi: avg(&|s| &s.qfi),
        renyi2: avg(&|s| &s.renyi2),
        s1_halfchain: s1,
    })
}
