use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::{neel_config, SectorBasis};
use crate::error::{Error, Result};
use crate::moments::MomentTable;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub basis: Arc<SectorBasis>,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl QuantumState {
    /// Basis configuration `config` with unit amplitude.
    pub fn product(basis: Arc<SectorBasis>, config: u32) -> Result<Self> {
        let k = basis.index_of(config).ok_or_else(|| {
            Error::BasisMismatch(format!("configuration {config:#b} not in basis"))
        })?;
        let mut amplitudes = vec![ZERO; basis.dim()];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(QuantumState {
            basis,
            amplitudes,
            time: 0.0,
        })
    }

    pub fn neel(basis: Arc<SectorBasis>) -> Result<Self> {
        let config = neel_config(basis.n_sites());
        Self::product(basis, config)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨S^z⟩` in spin units.
    pub fn magnetization(&self) -> f64 {
        let n = self.basis.n_sites() as f64;
        self.basis
            .states()
            .iter()
            .zip(&self.amplitudes)
            .map(|(s, a)| a.norm_sqr() * (s.count_ones() as f64 - 0.5 * n))
            .sum()
    }

    pub fn overlap(&self, other: &QuantumState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

#[inline]
fn z(s: u32, i: usize) -> f64 {
    if s >> i & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Pauli moments by direct evaluation in the bit basis.
pub fn exact_moments(state: &QuantumState) -> MomentTable {
    let n = state.basis.n_sites();
    let basis = &*state.basis;
    let mut z1 = vec![0.0; n];
    let mut zz = vec![0.0; n * n];
    let mut pm = vec![ZERO; n * n];
    for (k, &s) in basis.states().iter().enumerate() {
        let amp = state.amplitudes[k];
        let p = amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for i in 0..n {
            let zi = z(s, i);
            z1[i] += p * zi;
            for j in i + 1..n {
                zz[i * n + j] += p * zi * z(s, j);
                // σ_i^+ σ_j^- maps |..i↓..j↑..⟩ to |..i↑..j↓..⟩
                if s >> i & 1 == 0 && s >> j & 1 == 1 {
                    let target = s ^ (1 << i) ^ (1 << j);
                    if let Some(t) = basis.index_of(target) {
                        pm[i * n + j] += state.amplitudes[t].conj() * amp;
                    }
                }
            }
        }
    }
    let mut table = MomentTable::zeros(n);
    for i in 0..n {
        table.set_z(i, z1[i]);
        for j in i + 1..n {
            table.set_zz(i, j, zz[i * n + j]);
            table.set_pm(i, j, pm[i * n + j]);
        }
    }
    table
}

/// Von Neumann entropy (bits) of sites `0..cut` from the Schmidt values of
/// the amplitude matrix, one block per number of up spins on the left.
pub fn half_chain_entropy(state: &QuantumState, cut: usize) -> Result<f64> {
    let n = state.basis.n_sites();
    if cut == 0 || cut >= n {
        return Err(Error::InvalidCut { cut, n_sites: n });
    }
    let mask = (1u32 << cut) - 1;
    // left popcount -> (left config -> row, right config -> col, entries)
    type Block = (
        HashMap<u32, usize>,
        HashMap<u32, usize>,
        Vec<(usize, usize, Complex64)>,
    );
    // Ordered so the entropy sum is reproducible.
    let mut blocks: BTreeMap<u32, Block> = BTreeMap::new();
    for (k, &s) in state.basis.states().iter().enumerate() {
        let amp = state.amplitudes[k];
        let (left, right) = (s & mask, s >> cut);
        let (rows, cols, entries) = blocks.entry(left.count_ones()).or_default();
        let nr = rows.len();
        let r = *rows.entry(left).or_insert(nr);
        let nc = cols.len();
        let c = *cols.entry(right).or_insert(nc);
        entries.push((r, c, amp));
    }
    let mut entropy = 0.0;
    for (rows, cols, entries) in blocks.into_values() {
        let mut m = DMatrix::<Complex64>::zeros(rows.len(), cols.len());
        for (r, c, a) in entries {
            m[(r, c)] = a;
        }
        for sv in m.singular_values().iter() {
            let p = sv * sv;
            if p > 0.0 {
                entropy -= p * p.log2();
            }
        }
    }
    Ok(entropy)
}

/// Reduced density matrix of sites `i` and `j` in the basis
/// `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩` (first label is site `i`), by explicit partial
/// trace over all other sites.
pub fn two_site_rdm(state: &QuantumState, i: usize, j: usize) -> Result<[[Complex64; 4]; 4]> {
    let n = state.basis.n_sites();
    if i == j || i >= n || j >= n {
        return Err(Error::BasisMismatch(format!(
            "invalid site pair ({i}, {j}) for {n} sites"
        )));
    }
    let label = |s: u32| -> usize {
        let a = if s >> i & 1 == 1 { 0 } else { 1 };
        let b = if s >> j & 1 == 1 { 0 } else { 1 };
        2 * a + b
    };
    let with_label = |rest: u32, l: usize| -> u32 {
        let a = if l / 2 == 0 { 1 << i } else { 0 };
        let b = if l.is_multiple_of(2) { 1 << j } else { 0 };
        rest | a | b
    };
    let clear = !((1u32 << i) | (1u32 << j));
    let mut rho = [[ZERO; 4]; 4];
    for (k, &s) in state.basis.states().iter().enumerate() {
        let amp = state.amplitudes[k];
        if amp == ZERO {
            continue;
        }
        let row = label(s);
        let rest = s & clear;
        for (col, entry) in rho[row].iter_mut().enumerate() {
            if let Some(t) = state.basis.index_of(with_label(rest, col)) {
                *entry += amp * state.amplitudes[t].conj();
            }
        }
    }
    Ok(rho)
}

/// `-log₂ tr ρ²` of a density matrix.
pub fn renyi2_of_rdm(rho: &[[Complex64; 4]; 4]) -> f64 {
    let purity: f64 = rho.iter().flatten().map(|e| e.norm_sqr()).sum();
    -purity.log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singlet() -> QuantumState {
        let basis = Arc::new(SectorBasis::new(2, 1).unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut st = QuantumState::neel(basis.clone()).unwrap();
        // |↑↓⟩ is config 0b01 (site 0 up); |↓↑⟩ is 0b10
        st.amplitudes[basis.index_of(0b01).unwrap()] = Complex64::new(s, 0.0);
        st.amplitudes[basis.index_of(0b10).unwrap()] = Complex64::new(-s, 0.0);
        st
    }

    #[test]
    fn neel_moments() {
        let basis = Arc::new(SectorBasis::new(6, 3).unwrap());
        let st = QuantumState::neel(basis).unwrap();
        let m = exact_moments(&st);
        for i in 0..6 {
            let zi = if i % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(m.z(i), zi);
            for j in i + 1..6 {
                let zj = if j % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(m.zz(i, j), zi * zj);
                assert_eq!(m.pm(i, j), ZERO);
                assert_eq!(m.pm(j, i), ZERO);
            }
        }
    }

    #[test]
    fn singlet_moments() {
        let m = exact_moments(&singlet());
        assert!(m.z(0).abs() < 1e-15 && m.z(1).abs() < 1e-15);
        assert!((m.zz(0, 1) + 1.0).abs() < 1e-15);
        assert!((m.pm(0, 1) - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singlet_moments_match_explicit_pauli_matrices() {
        // ⟨ψ|A⊗B|ψ⟩ with explicit 4×4 Kronecker products; site 0 is the left factor.
        let sz = [[1.0, 0.0], [0.0, -1.0]];
        let sp = [[0.0, 1.0], [0.0, 0.0]]; // |↑⟩⟨↓| with ↑ = index 0
        let sm = [[0.0, 0.0], [1.0, 0.0]];
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [0.0, s, -s, 0.0]; // ↑↑, ↑↓, ↓↑, ↓↓
        let expect = |a: [[f64; 2]; 2], b: [[f64; 2]; 2]| {
            let mut acc = 0.0;
            for r in 0..4 {
                for c in 0..4 {
                    acc += psi[r] * a[r / 2][c / 2] * b[r % 2][c % 2] * psi[c];
                }
            }
            acc
        };
        let m = exact_moments(&singlet());
        assert!((m.zz(0, 1) - expect(sz, sz)).abs() < 1e-15);
        assert!((m.z(0) - expect(sz, id)).abs() < 1e-15);
        assert!((m.pm(0, 1).re - expect(sp, sm)).abs() < 1e-15);
    }

    #[test]
    fn zz_is_bounded() {
        let basis = Arc::new(SectorBasis::new(5, 3).unwrap());
        let mut st = QuantumState::neel(basis.clone()).unwrap();
        for (k, a) in st.amplitudes.iter_mut().enumerate() {
            *a = Complex64::new((k as f64).sin(), (k as f64 * 0.7).cos());
        }
        let norm = st.norm_sqr().sqrt();
        st.amplitudes.iter_mut().for_each(|a| *a /= norm);
        let m = exact_moments(&st);
        for (i, j) in m.pairs().collect::<Vec<_>>() {
            assert!(m.zz(i, j).abs() <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn entropy_of_product_and_singlet() {
        let basis = Arc::new(SectorBasis::new(8, 4).unwrap());
        let st = QuantumState::neel(basis).unwrap();
        for cut in 1..8 {
            assert_eq!(half_chain_entropy(&st, cut).unwrap(), 0.0);
        }
        assert!((half_chain_entropy(&singlet(), 1).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(
            half_chain_entropy(&singlet(), 0),
            Err(Error::InvalidCut { .. })
        ));
        assert!(matches!(
            half_chain_entropy(&singlet(), 2),
            Err(Error::InvalidCut { .. })
        ));
    }

    #[test]
    fn singlet_rdm_is_pure() {
        let rho = two_site_rdm(&singlet(), 0, 1).unwrap();
        assert!(renyi2_of_rdm(&rho).abs() < 1e-14);
        assert!((rho[1][1].re - 0.5).abs() < 1e-15);
        assert!((rho[1][2].re + 0.5).abs() < 1e-15);
    }
}
