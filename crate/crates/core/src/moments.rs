//! One- and two-site Pauli moments at a single time: the common currency
//! between the DTWA ensemble and the exact propagator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `g_z0[i] = ⟨σ_i^z⟩`, `g_zz[i,j] = ⟨σ_i^z σ_j^z⟩`, `g_pm[i,j] = ⟨σ_i^+ σ_j^-⟩`.
///
/// Pair entries are stored as dense `N × N` row-major matrices. The diagonal
/// of `zz` is 1 (`(σ^z)² = 1`) and the diagonal of `pm` is unused (zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    n_sites: usize,
    z: Vec<f64>,
    zz: Vec<f64>,
    pm: Vec<Complex64>,
}

impl MomentTable {
    /// Table with every moment zero except the trivial `zz` diagonal.
    pub fn zeros(n_sites: usize) -> Self {
        let mut zz = vec![0.0; n_sites * n_sites];
        for i in 0..n_sites {
            zz[i * n_sites + i] = 1.0;
        }
        MomentTable {
            n_sites,
            z: vec![0.0; n_sites],
            zz,
            pm: vec![Complex64::new(0.0, 0.0); n_sites * n_sites],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    pub fn z(&self, i: usize) -> f64 {
        self.z[i]
    }

    #[inline]
    pub fn zz(&self, i: usize, j: usize) -> f64 {
        self.zz[i * self.n_sites + j]
    }

    #[inline]
    pub fn pm(&self, i: usize, j: usize) -> Complex64 {
        self.pm[i * self.n_sites + j]
    }

    pub fn set_z(&mut self, i: usize, value: f64) {
        self.z[i] = value;
    }

    /// Sets `g_zz` for the unordered pair `{i, j}`, `i != j`.
    pub fn set_zz(&mut self, i: usize, j: usize, value: f64) {
        debug_assert_ne!(i, j);
        let n = self.n_sites;
        self.zz[i * n + j] = value;
        self.zz[j * n + i] = value;
    }

    /// Sets `g_pm[i,j]` and its Hermitian partner `g_pm[j,i] = conj(g_pm[i,j])`.
    pub fn set_pm(&mut self, i: usize, j: usize, value: Complex64) {
        debug_assert_ne!(i, j);
        let n = self.n_sites;
        self.pm[i * n + j] = value;
        self.pm[j * n + i] = value.conj();
    }

    /// Unordered pairs `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_sites;
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }

    /// Largest absolute difference over every stored entry.
    pub fn max_abs_diff(&self, other: &MomentTable) -> f64 {
        assert_eq!(self.n_sites, other.n_sites);
        let a = self.z.iter().zip(&other.z).map(|(x, y)| (x - y).abs());
        let b = self.zz.iter().zip(&other.zz).map(|(x, y)| (x - y).abs());
        let c = self.pm.iter().zip(&other.pm).map(|(x, y)| (x - y).norm());
        a.chain(b).chain(c).fold(0.0, f64::max)
    }
}
