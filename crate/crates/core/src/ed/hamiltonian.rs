use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Real symmetric Hamiltonian in compressed-row form: a dense diagonal plus
/// the off-diagonal nearest-neighbour exchange entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    dim: usize,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Matrix of `H = J Σ s_i·s_{i+1} + Σ h_i J s_i^z` in `basis`.
///
/// Diagonal: `(J/4) Σ_bonds z_i z_{i+1} + (1/2) Σ_i h_i J z_i` with `z = ±1`.
/// Off-diagonal: `J/2` between configurations related by swapping one
/// antiparallel nearest-neighbour pair.
pub fn build_hamiltonian(spec: &ModelSpec, basis: &SectorBasis) -> Result<SparseHamiltonian> {
    spec.validate()?;
    if spec.n_sites != basis.n_sites() {
        return Err(Error::BasisMismatch(format!(
            "model has {} sites, basis {}",
            spec.n_sites,
            basis.n_sites()
        )));
    }
    let j = spec.coupling;
    let fields: Vec<f64> = (0..spec.n_sites).map(|i| spec.field_energy(i)).collect();
    let z = |s: u32, i: usize| if s >> i & 1 == 1 { 1.0 } else { -1.0 };

    let dim = basis.dim();
    let mut diag = Vec::with_capacity(dim);
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for &s in basis.states() {
        let mut d = 0.0;
        for (a, b) in spec.bonds() {
            d += 0.25 * j * z(s, a) * z(s, b);
        }
        for (i, f) in fields.iter().enumerate() {
            d += 0.5 * f * z(s, i);
        }
        diag.push(d);

        let mut row: Vec<(usize, f64)> = Vec::new();
        for (a, b) in spec.bonds() {
            if z(s, a) != z(s, b) && j != 0.0 {
                let flipped = s ^ (1 << a) ^ (1 << b);
                let col = basis.index_of(flipped).ok_or_else(|| {
                    Error::BasisMismatch(format!("exchange leaves the basis at {s:#b}"))
                })?;
                row.push((col, 0.5 * j));
            }
        }
        row.sort_by_key(|e| e.0);
        for (c, v) in row {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(SparseHamiltonian {
        dim,
        diag,
        row_ptr,
        cols,
        vals,
    })
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.dim + self.vals.len()
    }

    /// `out = H x`.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        for r in 0..self.dim {
            let mut acc = x[r] * self.diag[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            out[r] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            m[(r, r)] = self.diag[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        m
    }

    /// `⟨x|H|x⟩` (real for Hermitian `H`).
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut hx = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply(x, &mut hx);
        x.iter().zip(&hx).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                self.diag[r].abs()
                    + self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                        .iter()
                        .map(|v| v.abs())
                        .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}
