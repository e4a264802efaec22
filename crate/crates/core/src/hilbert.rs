//! Bit-coded occupation bases for fixed `(n_up, n_dn)` sectors.
//!
//! Bit `i` of a mask is the occupation of site `i` for one spin species.
//! Operators of one species are ordered by site index; up and down
//! operators are taken to commute, which only changes a sector-wide sign
//! because the Hubbard Hamiltonian conserves each species separately.

use crate::error::{Error, Result};

/// Occupation bit mask for one spin species.
pub type Mask = u32;

/// Largest cluster accepted by the exact-diagonalization path.
pub const MAX_ED_SITES: usize = 16;

/// Basis of one particle-number sector, as a product of up and down masks.
///
/// Full-space index `k = up_index * n_dn_states + dn_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
    n_up: usize,
    n_dn: usize,
    up_states: Vec<Mask>,
    dn_states: Vec<Mask>,
}

impl SectorBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn n_dn(&self) -> usize {
        self.n_dn
    }

    pub fn up_states(&self) -> &[Mask] {
        &self.up_states
    }

    pub fn dn_states(&self) -> &[Mask] {
        &self.dn_states
    }

    pub fn dimension(&self) -> usize {
        self.up_states.len() * self.dn_states.len()
    }

    /// `(up_mask, dn_mask)` of full-space index `k`.
    pub fn state(&self, k: usize) -> (Mask, Mask) {
        let nd = self.dn_states.len();
        (self.up_states[k / nd], self.dn_states[k % nd])
    }

    pub fn index_of(&self, up: Mask, dn: Mask) -> Option<usize> {
        let iu = self.up_states.binary_search(&up).ok()?;
        let id = self.dn_states.binary_search(&dn).ok()?;
        Some(iu * self.dn_states.len() + id)
    }

    pub fn up_index(&self, up: Mask) -> Option<usize> {
        self.up_states.binary_search(&up).ok()
    }

    pub fn dn_index(&self, dn: Mask) -> Option<usize> {
        self.dn_states.binary_search(&dn).ok()
    }

    /// Iterate over `(k, up_mask, dn_mask)` in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Mask, Mask)> + '_ {
        let nd = self.dn_states.len();
        self.up_states.iter().enumerate().flat_map(move |(iu, &up)| {
            self.dn_states
                .iter()
                .enumerate()
                .map(move |(id, &dn)| (iu * nd + id, up, dn))
        })
    }
}

/// Enumerate the sector basis with canonical (increasing) mask order.
pub fn enumerate_sector(n_sites: usize, n_up: usize, n_dn: usize) -> Result<SectorBasis> {
    let invalid = |reason: &str| Error::InvalidSector {
        n_sites,
        n_up,
        n_dn,
        reason: reason.to_string(),
    };
    if n_sites > MAX_ED_SITES {
        return Err(invalid("exact diagonalization is limited to 16 sites"));
    }
    if n_up > n_sites || n_dn > n_sites {
        return Err(invalid("occupation exceeds the number of sites"));
    }
    Ok(SectorBasis {
        n_sites,
        n_up,
        n_dn,
        up_states: fixed_popcount_masks(n_sites, n_up),
        dn_states: fixed_popcount_masks(n_sites, n_dn),
    })
}

/// All `n_sites`-bit masks with `count` bits set, in increasing order.
pub fn fixed_popcount_masks(n_sites: usize, count: usize) -> Vec<Mask> {
    if count == 0 {
        return vec![0];
    }
    if count > n_sites {
        return Vec::new();
    }
    let limit: u64 = 1 << n_sites;
    let mut out = Vec::with_capacity(binomial(n_sites, count));
    let mut v: u64 = (1 << count) - 1;
    while v < limit {
        out.push(v as Mask);
        // Gosper's hack: next integer with the same popcount.
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[inline]
pub fn occupied(mask: Mask, site: usize) -> bool {
    mask >> site & 1 == 1
}

/// Apply `c†_i c_j` (move a particle from `j` to `i`) to a single-species mask.
///
/// Returns `None` when site `j` is empty or site `i` is already occupied.
/// The sign is the parity of occupied sites strictly between `i` and `j`.
#[inline]
pub fn apply_hop(mask: Mask, i: usize, j: usize) -> Option<(Mask, f64)> {
    debug_assert_ne!(i, j);
    if !occupied(mask, j) || occupied(mask, i) {
        return None;
    }
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let between = if hi - lo > 1 {
        mask & (((1 as Mask) << hi) - 1) & !(((1 as Mask) << (lo + 1)) - 1)
    } else {
        0
    };
    let sign = if between.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((mask ^ (1 << j) ^ (1 << i), sign))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn sector_dimensions() {
        assert_eq!(enumerate_sector(2, 1, 1).unwrap().dimension(), 4);
        assert_eq!(enumerate_sector(4, 2, 2).unwrap().dimension(), 36);
        assert_eq!(enumerate_sector(6, 3, 3).unwrap().dimension(), 400);
        assert_eq!(enumerate_sector(5, 0, 5).unwrap().dimension(), 1);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(enumerate_sector(4, 5, 0).is_err());
        assert!(enumerate_sector(17, 1, 1).is_err());
    }

    #[test]
    fn masks_are_increasing_with_fixed_popcount() {
        for n in 0..=10 {
            for k in 0..=n {
                let masks = fixed_popcount_masks(n, k);
                assert_eq!(masks.len(), binomial(n, k));
                assert!(masks.windows(2).all(|w| w[0] < w[1]));
                assert!(masks.iter().all(|m| m.count_ones() as usize == k && *m < 1 << n));
            }
        }
    }

    #[test]
    fn index_bijection() {
        let basis = enumerate_sector(5, 2, 3).unwrap();
        for (k, up, dn) in basis.iter() {
            assert_eq!(basis.state(k), (up, dn));
            assert_eq!(basis.index_of(up, dn), Some(k));
        }
        assert_eq!(basis.iter().count(), binomial(5, 2) * binomial(5, 3));
    }

    #[test]
    fn hop_examples() {
        assert_eq!(apply_hop(0b0010, 0, 1), Some((0b0001, 1.0)));
        assert_eq!(apply_hop(0b0111, 3, 0), Some((0b1110, 1.0)));
        assert_eq!(apply_hop(0b0101, 1, 0), Some((0b0110, 1.0)));
        assert_eq!(apply_hop(0b0101, 3, 0), Some((0b1100, -1.0)));
        assert_eq!(apply_hop(0b0001, 0, 1), None);
        assert_eq!(apply_hop(0b0011, 1, 0), None);
    }

    /// Jordan-Wigner annihilation operator `c_site` on the full 2^n Fock space,
    /// built as a Kronecker product with an explicit parity string.
    fn jw_annihilator(n: usize, site: usize) -> DMatrix<f64> {
        let id = DMatrix::<f64>::identity(2, 2);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        // |0> = e0, |1> = e1; lowering maps e1 -> e0.
        let lower = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        // Kronecker order: highest site is the leftmost factor, so that the
        // basis index equals the mask.
        let mut op = DMatrix::<f64>::identity(1, 1);
        for s in (0..n).rev() {
            let factor = match s.cmp(&site) {
                std::cmp::Ordering::Less => &z,
                std::cmp::Ordering::Equal => &lower,
                std::cmp::Ordering::Greater => &id,
            };
            op = op.kronecker(factor);
        }
        op
    }

    #[test]
    fn hop_signs_match_jordan_wigner_operators() {
        for n in 2..=4 {
            let ops: Vec<_> = (0..n).map(|s| jw_annihilator(n, s)).collect();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let hop = ops[i].transpose() * &ops[j];
                    for mask in 0..(1u32 << n) {
                        let column = hop.column(mask as usize);
                        match apply_hop(mask, i, j) {
                            None => assert!(column.iter().all(|&x| x == 0.0)),
                            Some((new, sign)) => {
                                assert_eq!(column[new as usize], sign, "n={n} {i}<-{j} {mask:b}");
                                assert_eq!(column.iter().filter(|&&x| x != 0.0).count(), 1);
                            }
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn hop_reversal_is_sign_consistent(mask in 0u32..(1 << 12), i in 0usize..12, j in 0usize..12) {
            prop_assume!(i != j);
            if let Some((m1, s1)) = apply_hop(mask, i, j) {
                let (m2, s2) = apply_hop(m1, j, i).unwrap();
                prop_assert_eq!(m2, mask);
                prop_assert_eq!(s1, s2);
                prop_assert_eq!(m1.count_ones(), mask.count_ones());
            }
        }
    }
}
