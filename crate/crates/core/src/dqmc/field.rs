use rand::Rng;
use serde::{Deserialize, Serialize};

/// HS coupling `lambda` with `cosh(lambda) = exp(delta_tau * U / 2)`.
pub fn hs_coupling(u: f64, delta_tau: f64) -> f64 {
    (0.5 * delta_tau * u).exp().acosh()
}

/// Auxiliary Ising field `s(i, l)`, stored slice-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HsField {
    n_sites: usize,
    n_slices: usize,
    spins: Vec<i8>,
}

impl HsField {
    pub fn uniform(n_sites: usize, n_slices: usize) -> Self {
        HsField {
            n_sites,
            n_slices,
            spins: vec![1; n_sites * n_slices],
        }
    }

    pub fn random<R: Rng>(n_sites: usize, n_slices: usize, rng: &mut R) -> Self {
        let spins = (0..n_sites * n_slices)
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        HsField {
            n_sites,
            n_slices,
            spins,
        }
    }

    /// Field whose bit `slice * n_sites + site` of `code` is set where the
    /// spin is `-1`.
    pub fn from_code(n_sites: usize, n_slices: usize, code: u64) -> Self {
        let spins = (0..n_sites * n_slices)
            .map(|b| if code >> b & 1 == 1 { -1 } else { 1 })
            .collect();
        HsField {
            n_sites,
            n_slices,
            spins,
        }
    }

    /// Inverse of [`HsField::from_code`]; valid for up to 64 spins.
    pub fn code(&self) -> u64 {
        debug_assert!(self.spins.len() <= 64);
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0, |acc, (b, _)| acc | 1 << b)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_slices(&self) -> usize {
        self.n_slices
    }

    #[inline]
    pub fn get(&self, site: usize, slice: usize) -> i8 {
        self.spins[slice * self.n_sites + site]
    }

    #[inline]
    pub fn flip(&mut self, site: usize, slice: usize) {
        let s = &mut self.spins[slice * self.n_sites + site];
        *s = -*s;
    }

    pub fn slice(&self, slice: usize) -> &[i8] {
        &self.spins[slice * self.n_sites..(slice + 1) * self.n_sites]
    }
}
