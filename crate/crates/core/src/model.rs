//! The random-field Heisenberg chain, its disorder, the Néel initial state and
//! the shared time grid.
//!
//! ```text
//! H = J Σ_{i=1}^{N-1} s_i · s_{i+1} + Σ_i h_i J s_i^z ,   h_i ~ U[-h, h]
//! ```
//!
//! Random fields are stored in units of `J`; [`ModelSpec::field_energy`] is the
//! single place where they become absolute energies.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamId;

/// Disorder strengths swept by default. Brackets the reference transition
/// value h_c ≈ 3.5 with points deep in both phases.
pub const DEFAULT_DISORDER_SWEEP: [f64; 7] = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0];

/// Earliest non-zero time of the logarithmic grid, in units of 1/J.
pub const LOG_GRID_T_MIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
}

/// One disorder realization of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n_sites: usize,
    pub coupling: f64,
    pub disorder_strength: f64,
    /// Random fields h_i in units of `coupling`.
    pub fields: Vec<f64>,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelSpec {
    pub fn new(
        n_sites: usize,
        coupling: f64,
        disorder_strength: f64,
        fields: Vec<f64>,
    ) -> Result<Self> {
        let spec = ModelSpec {
            n_sites,
            coupling,
            disorder_strength,
            fields,
            boundary: Boundary::Open,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Disorder-free chain.
    pub fn clean(n_sites: usize, coupling: f64) -> Result<Self> {
        Self::new(n_sites, coupling, 0.0, vec![0.0; n_sites])
    }

    /// Draws a fresh realization from `stream`.
    pub fn sample(
        n_sites: usize,
        coupling: f64,
        disorder_strength: f64,
        stream: &StreamId,
    ) -> Result<Self> {
        let fields = sample_disorder(disorder_strength, n_sites, stream)?;
        Self::new(n_sites, coupling, disorder_strength, fields)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 sites, got {}",
                self.n_sites
            )));
        }
        if !self.coupling.is_finite() {
            return Err(Error::InvalidModel("coupling must be finite".into()));
        }
        if !(self.disorder_strength >= 0.0 && self.disorder_strength.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "disorder strength must be finite and non-negative, got {}",
                self.disorder_strength
            )));
        }
        if self.fields.len() != self.n_sites {
            return Err(Error::SizeMismatch {
                expected: self.n_sites,
                found: self.fields.len(),
            });
        }
        if let Some((i, h)) = self
            .fields
            .iter()
            .enumerate()
            .find(|(_, h)| h.is_nan() || h.abs() > self.disorder_strength)
        {
            return Err(Error::InvalidModel(format!(
                "field h_{i} = {h} outside [-{0}, {0}]",
                self.disorder_strength
            )));
        }
        Ok(())
    }

    /// Absolute Zeeman energy scale `h_i J` on site `i`.
    #[inline]
    pub fn field_energy(&self, i: usize) -> f64 {
        self.fields[i] * self.coupling
    }

    /// Nearest-neighbour bonds `(i, i + 1)` of the open chain.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize)> {
        (0..self.n_sites - 1).map(|i| (i, i + 1))
    }
}

/// Draws `n_sites` independent fields uniformly from `[-h, h]`.
///
/// The fields are `h * (2u - 1)` for uniform `u`, so the same stream at two
/// different strengths yields proportional realizations.
pub fn sample_disorder(h: f64, n_sites: usize, stream: &StreamId) -> Result<Vec<f64>> {
    if n_sites == 0 {
        return Err(Error::InvalidModel(
            "number of sites must be positive".into(),
        ));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "disorder strength must be finite and non-negative, got {h}"
        )));
    }
    let mut rng = stream.rng();
    Ok((0..n_sites)
        .map(|_| h * (2.0 * rng.random::<f64>() - 1.0))
        .collect())
}

/// The Néel product state |↑↓↑↓…⟩, up on the first site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeelSpec {
    pub n_sites: usize,
}

impl NeelSpec {
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 sites, got {n_sites}"
            )));
        }
        Ok(NeelSpec { n_sites })
    }

    /// σ^z eigenvalue of (zero-based) site `i`; also the staggering sign
    /// `(-1)^{i+1}` of the one-based imbalance convention.
    #[inline]
    pub fn z(&self, i: usize) -> f64 {
        staggered_sign(i)
    }

    pub fn is_up(&self, i: usize) -> bool {
        i.is_multiple_of(2)
    }

    pub fn n_up(&self) -> usize {
        self.n_sites.div_ceil(2)
    }

    /// Total S^z in spin units.
    pub fn total_sz(&self) -> f64 {
        0.5 * (0..self.n_sites).map(|i| self.z(i)).sum::<f64>()
    }

    pub fn matches(&self, spec: &ModelSpec) -> Result<()> {
        if self.n_sites != spec.n_sites {
            return Err(Error::SizeMismatch {
                expected: spec.n_sites,
                found: self.n_sites,
            });
        }
        Ok(())
    }
}

/// `+1` on even zero-based sites, `-1` on odd ones.
#[inline]
pub fn staggered_sign(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    #[default]
    LogPlusZero,
}

impl std::str::FromStr for Spacing {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Spacing::Linear),
            "log-plus-zero" | "log" => Ok(Spacing::LogPlusZero),
            other => Err(format!("unknown grid spacing `{other}`")),
        }
    }
}

/// Strictly increasing sample times starting at `t = 0`, in units of 1/J.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "first point must be 0, got {}",
                points[0]
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite time".into()));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(TimeGrid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.points.last().expect("grid is never empty")
    }

    /// Index of the grid point closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        self.points
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .expect("grid is never empty")
    }
}

/// Builds a grid on `[0, t_max]` with `m_points` points.
///
/// `LogPlusZero` gives `{0}` followed by `m_points - 1` logarithmically spaced
/// times from [`LOG_GRID_T_MIN`] to `t_max`; both endpoints are exact.
pub fn make_time_grid(t_max: f64, m_points: usize, spacing: Spacing) -> Result<TimeGrid> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    if m_points < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 points, got {m_points}"
        )));
    }
    let last = m_points - 1;
    let points = match spacing {
        Spacing::Linear => (0..m_points)
            .map(|k| {
                if k == last {
                    t_max
                } else {
                    t_max * k as f64 / last as f64
                }
            })
            .collect(),
        Spacing::LogPlusZero if m_points == 2 => vec![0.0, t_max],
        Spacing::LogPlusZero => {
            if t_max <= LOG_GRID_T_MIN {
                return Err(Error::InvalidGrid(format!(
                    "logarithmic grid needs t_max > {LOG_GRID_T_MIN}, got {t_max}"
                )));
            }
            let (lo, hi) = (LOG_GRID_T_MIN.ln(), t_max.ln());
            let n_log = m_points - 1;
            std::iter::once(0.0)
                .chain((0..n_log).map(|k| match k {
                    0 => LOG_GRID_T_MIN,
                    k if k == n_log - 1 => t_max,
                    k => (lo + (hi - lo) * k as f64 / (n_log - 1) as f64).exp(),
                }))
                .collect()
        }
    };
    TimeGrid::from_points(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_disorder_is_all_zero() {
        let f = sample_disorder(0.0, 9, &StreamId::disorder(1, 0)).unwrap();
        assert!(f.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn disorder_bounded_and_reproducible() {
        let s = StreamId::disorder(42, 5);
        let a = sample_disorder(2.0, 12, &s).unwrap();
        let b = sample_disorder(2.0, 12, &s).unwrap();
        assert_eq!(a.len(), 12);
        assert!(a.iter().all(|h| h.abs() <= 2.0));
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn disorder_mean_within_standard_error() {
        let n = 1000;
        let f = sample_disorder(4.0, n, &StreamId::disorder(3, 1)).unwrap();
        let mean = f.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 5.0 * 4.0 / (3.0 * n as f64).sqrt());
    }

    #[test]
    fn disorder_histogram_is_flat() {
        let (h, n, bins) = (3.0, 100_000, 10);
        let f = sample_disorder(h, n, &StreamId::disorder(11, 2)).unwrap();
        let mut counts = vec![0usize; bins];
        for x in f {
            let b = (((x + h) / (2.0 * h)) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        let p = 1.0 / bins as f64;
        let expected = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 5.0 * sd, "bin count {c}");
        }
    }

    #[test]
    fn disorder_rejects_zero_sites() {
        assert!(sample_disorder(1.0, 0, &StreamId::disorder(0, 0)).is_err());
        assert!(sample_disorder(-1.0, 4, &StreamId::disorder(0, 0)).is_err());
    }

    #[test]
    fn model_rejects_out_of_range_field() {
        assert!(ModelSpec::new(2, 1.0, 1.0, vec![0.5, 1.5]).is_err());
        assert!(ModelSpec::new(3, 1.0, 1.0, vec![0.5, 0.5]).is_err());
        assert!(ModelSpec::new(2, 1.0, 1.0, vec![0.5, -1.0]).is_ok());
    }

    #[test]
    fn neel_magnetization() {
        assert_eq!(NeelSpec::new(6).unwrap().total_sz(), 0.0);
        assert_eq!(NeelSpec::new(7).unwrap().total_sz(), 0.5);
        assert_eq!(NeelSpec::new(7).unwrap().n_up(), 4);
    }

    #[test]
    fn linear_grids() {
        assert_eq!(
            make_time_grid(120.0, 2, Spacing::Linear).unwrap().points(),
            &[0.0, 120.0]
        );
        assert_eq!(
            make_time_grid(1.0, 5, Spacing::Linear).unwrap().points(),
            &[0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn log_grid_endpoints() {
        let g = make_time_grid(120.0, 201, Spacing::LogPlusZero).unwrap();
        assert_eq!(g.len(), 201);
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(g.points()[1], 0.1);
        assert_eq!(g.t_max(), 120.0);
    }

    #[test]
    fn bad_grids() {
        assert!(make_time_grid(0.0, 5, Spacing::Linear).is_err());
        assert!(make_time_grid(1.0, 1, Spacing::Linear).is_err());
        assert!(make_time_grid(0.05, 5, Spacing::LogPlusZero).is_err());
        assert!(TimeGrid::from_points(vec![]).is_err());
        assert!(TimeGrid::from_points(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeGrid::from_points(vec![0.5, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn model_spec_round_trips_through_json(
            n in 2usize..20,
            j in 0.1f64..3.0,
            h in 0.0f64..10.0,
            seed in any::<u64>(),
        ) {
            let spec = ModelSpec::sample(n, j, h, &StreamId::disorder(seed, 0)).unwrap();
            let text = serde_json::to_string(&spec).unwrap();
            let back: ModelSpec = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, spec);
        }

        #[test]
        fn grids_strictly_increasing(t_max in 0.2f64..500.0, m in 2usize..400, log in any::<bool>()) {
            let spacing = if log { Spacing::LogPlusZero } else { Spacing::Linear };
            let g = make_time_grid(t_max, m, spacing).unwrap();
            prop_assert_eq!(g.len(), m);
            prop_assert_eq!(g.t_max(), t_max);
            prop_assert!(g.points().windows(2).all(|w| w[1] > w[0]));
        }
    }
}
