use crate::error::{Error, Result};
use crate::model::NeelSpec;

/// Largest chain the bit-basis supports (lookup table of `2^N` entries).
pub const MAX_ED_SITES: usize = 20;

const ABSENT: u32 = u32::MAX;

/// Computational basis states of `N` spins, optionally restricted to a fixed
/// number of up spins. Bit `i` of a configuration is set when site `i` is up.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasis {
    n_sites: usize,
    n_up: Option<usize>,
    states: Vec<u32>,
    index: Vec<u32>,
}

impl SectorBasis {
    /// All configurations with exactly `n_up` set bits, in increasing order.
    pub fn new(n_sites: usize, n_up: usize) -> Result<Self> {
        check_size(n_sites)?;
        if n_up > n_sites {
            return Err(Error::BasisMismatch(format!(
                "{n_up} up spins on {n_sites} sites"
            )));
        }
        let states = (0u32..1 << n_sites)
            .filter(|s| s.count_ones() as usize == n_up)
            .collect();
        Ok(Self::from_states(n_sites, Some(n_up), states))
    }

    /// The full `2^N`-dimensional space.
    pub fn full(n_sites: usize) -> Result<Self> {
        check_size(n_sites)?;
        Ok(Self::from_states(
            n_sites,
            None,
            (0u32..1 << n_sites).collect(),
        ))
    }

    /// The sector containing the Néel state.
    pub fn neel_sector(neel: &NeelSpec) -> Result<Self> {
        Self::new(neel.n_sites, neel.n_up())
    }

    fn from_states(n_sites: usize, n_up: Option<usize>, states: Vec<u32>) -> Self {
        let mut index = vec![ABSENT; 1 << n_sites];
        for (k, &s) in states.iter().enumerate() {
            index[s as usize] = k as u32;
        }
        SectorBasis {
            n_sites,
            n_up,
            states,
            index,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_up(&self) -> Option<usize> {
        self.n_up
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    #[inline]
    pub fn state(&self, k: usize) -> u32 {
        self.states[k]
    }

    #[inline]
    pub fn index_of(&self, config: u32) -> Option<usize> {
        match self.index.get(config as usize) {
            Some(&k) if k != ABSENT => Some(k as usize),
            _ => None,
        }
    }
}

/// Néel configuration: up on even (zero-based) sites.
pub fn neel_config(n_sites: usize) -> u32 {
    (0..n_sites).step_by(2).fold(0, |acc, i| acc | 1 << i)
}

fn check_size(n_sites: usize) -> Result<()> {
    if n_sites == 0 || n_sites > MAX_ED_SITES {
        return Err(Error::BasisMismatch(format!(
            "exact basis supports 1..={MAX_ED_SITES} sites, got {n_sites}"
        )));
    }
    Ok(())
}
