//! Exact diagonalization of the Hubbard model, one `(n_up, n_dn)` sector
//! at a time.
//!
//! Each sector Hamiltonian is assembled densely and fully diagonalized.
//! Eigenvectors are not kept: a [`Spectrum`] stores the energies plus the
//! occupation-diagonal expectation values every thermal average needs.
//! Degenerate eigenvectors come back in no particular basis, which is
//! harmless because only traces are taken downstream.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{apply_hop, enumerate_sector, occupied, SectorBasis};
use crate::lattice::ClusterGeometry;
use crate::par;

/// Largest sector accepted for dense assembly.
pub const MAX_DENSE_DIMENSION: usize = 20_000;

/// Hopping `t`, on-site repulsion `u` and chemical potential `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    pub t: f64,
    pub u: f64,
    pub mu: f64,
}

impl HubbardParams {
    /// Half-filling parameters: `mu = u / 2`.
    pub fn half_filled(t: f64, u: f64) -> Result<Self> {
        Self::with_mu(t, u, u / 2.0)
    }

    pub fn with_mu(t: f64, u: f64, mu: f64) -> Result<Self> {
        let p = HubbardParams { t, u, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {}", self.t)));
        }
        if !(self.u >= 0.0 && self.u.is_finite()) {
            return Err(Error::InvalidParameter(format!("U must be >= 0, got {}", self.u)));
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be finite, got {}", self.mu)));
        }
        Ok(())
    }
}

/// Energies and occupation observables of every eigenstate in one sector.
///
/// Site-resolved arrays are row-major: entry `n * n_sites + i` belongs to
/// eigenstate `n` and site `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub n_sites: usize,
    pub n_up: usize,
    pub n_dn: usize,
    pub energies: Vec<f64>,
    pub density_up: Vec<f64>,
    pub density_dn: Vec<f64>,
    pub double_occupancy: Vec<f64>,
}

impl Spectrum {
    pub fn sector(&self) -> (usize, usize) {
        (self.n_up, self.n_dn)
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Total `S^z = (n_up - n_dn) / 2`, shared by every state in the sector.
    pub fn sz(&self) -> f64 {
        (self.n_up as f64 - self.n_dn as f64) / 2.0
    }

    pub fn n_electrons(&self) -> usize {
        self.n_up + self.n_dn
    }

    fn row<'a>(&self, data: &'a [f64], state: usize) -> &'a [f64] {
        &data[state * self.n_sites..(state + 1) * self.n_sites]
    }

    pub fn density_up_of(&self, state: usize) -> &[f64] {
        self.row(&self.density_up, state)
    }

    pub fn density_dn_of(&self, state: usize) -> &[f64] {
        self.row(&self.density_dn, state)
    }

    pub fn double_occupancy_of(&self, state: usize) -> &[f64] {
        self.row(&self.double_occupancy, state)
    }

    /// `sum_i <n_i,up + n_i,dn - 2 n_i,up n_i,dn>` for one eigenstate, i.e.
    /// four times the summed `<(S_i^z)^2>`.
    pub fn local_moment_sum(&self, state: usize) -> f64 {
        let d: f64 = self.double_occupancy_of(state).iter().sum();
        self.n_electrons() as f64 - 2.0 * d
    }

    /// The `(n_dn, n_up)` sector, obtained by exchanging spin species.
    pub fn spin_flipped(&self) -> Spectrum {
        Spectrum {
            n_sites: self.n_sites,
            n_up: self.n_dn,
            n_dn: self.n_up,
            energies: self.energies.clone(),
            density_up: self.density_dn.clone(),
            density_dn: self.density_up.clone(),
            double_occupancy: self.double_occupancy.clone(),
        }
    }
}

/// Dense Hamiltonian of one sector.
///
/// Diagonal: `U` times the number of doubly occupied sites. Off-diagonal:
/// `-t` times the fermionic sign, for `c†_i c_j` and `c†_j c_i` on every
/// stored bond and both spin species.
pub fn build_sector_hamiltonian(
    geom: &ClusterGeometry,
    params: &HubbardParams,
    basis: &SectorBasis,
) -> Result<DMatrix<f64>> {
    if basis.n_sites() != geom.n_sites() {
        return Err(Error::InvalidSector {
            n_sites: basis.n_sites(),
            n_up: basis.n_up(),
            n_dn: basis.n_dn(),
            reason: format!("basis does not match the {}-site geometry", geom.n_sites()),
        });
    }
    let dim = basis.dimension();
    if dim > MAX_DENSE_DIMENSION {
        return Err(Error::DimensionTooLarge {
            dimension: dim,
            limit: MAX_DENSE_DIMENSION,
        });
    }

    let nd = basis.dn_states().len();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (k, up, dn) in basis.iter() {
        h[(k, k)] = params.u * (up & dn).count_ones() as f64;
        let (iu, id) = (k / nd, k % nd);
        for &(a, b) in geom.bonds() {
            for (i, j) in [(a, b), (b, a)] {
                if let Some((new_up, sign)) = apply_hop(up, i, j) {
                    let ku = basis.up_index(new_up).expect("hop preserves popcount");
                    h[(ku * nd + id, k)] -= params.t * sign;
                }
                if let Some((new_dn, sign)) = apply_hop(dn, i, j) {
                    let kd = basis.dn_index(new_dn).expect("hop preserves popcount");
                    h[(iu * nd + kd, k)] -= params.t * sign;
                }
            }
        }
    }
    Ok(h)
}

/// Full eigendecomposition of a real symmetric matrix.
///
/// Returns ascending eigenvalues and the matching orthonormal eigenvectors
/// as columns.
pub fn symmetric_eigen(h: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::InvalidParameter(format!(
            "matrix is {}x{}, expected square",
            h.nrows(),
            h.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let scale = h.amax().max(f64::MIN_POSITIVE);
    let mut deviation = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            deviation = deviation.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    if deviation > 1e-12 * scale {
        return Err(Error::NotSymmetric { deviation });
    }

    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| h[(i, j)]);
    let evd = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::NoConvergence { size: n })?;
    let values = evd.S().column_vector();
    let vectors = evd.U();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok((eigenvalues, eigenvectors))
}

/// Diagonalize a sector Hamiltonian and reduce the eigenvectors to the
/// per-eigenstate densities and double occupancies.
pub fn diagonalize(h: &DMatrix<f64>, basis: &SectorBasis) -> Result<Spectrum> {
    if h.nrows() != basis.dimension() {
        return Err(Error::InvalidParameter(format!(
            "matrix dimension {} does not match sector dimension {}",
            h.nrows(),
            basis.dimension()
        )));
    }
    let (energies, vectors) = symmetric_eigen(h)?;
    let n_sites = basis.n_sites();
    let dim = basis.dimension();

    let mut density_up = vec![0.0; dim * n_sites];
    let mut density_dn = vec![0.0; dim * n_sites];
    let mut double_occupancy = vec![0.0; dim * n_sites];
    let states: Vec<_> = basis.iter().collect();
    for n in 0..dim {
        let column = vectors.column(n);
        let row = n * n_sites..(n + 1) * n_sites;
        let (up_row, dn_row, d_row) = (
            &mut density_up[row.clone()],
            &mut density_dn[row.clone()],
            &mut double_occupancy[row],
        );
        for &(k, up, dn) in &states {
            let w = column[k] * column[k];
            if w == 0.0 {
                continue;
            }
            for site in 0..n_sites {
                let (u, d) = (occupied(up, site), occupied(dn, site));
                if u {
                    up_row[site] += w;
                }
                if d {
                    dn_row[site] += w;
                }
                if u && d {
                    d_row[site] += w;
                }
            }
        }
    }

    Ok(Spectrum {
        n_sites,
        n_up: basis.n_up(),
        n_dn: basis.n_dn(),
        energies,
        density_up,
        density_dn,
        double_occupancy,
    })
}

/// Build and diagonalize one sector.
pub fn solve_sector(
    geom: &ClusterGeometry,
    params: &HubbardParams,
    n_up: usize,
    n_dn: usize,
) -> Result<Spectrum> {
    let basis = enumerate_sector(geom.n_sites(), n_up, n_dn)?;
    let h = build_sector_hamiltonian(geom, params, &basis)?;
    diagonalize(&h, &basis)
}

/// Which sectors a cluster solve covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorSet {
    /// All sectors with `n_up + n_dn = n_sites`.
    HalfFilled,
    /// Every `(n_up, n_dn)`.
    All,
}

impl SectorSet {
    pub fn sectors(self, n_sites: usize) -> Vec<(usize, usize)> {
        match self {
            SectorSet::HalfFilled => (0..=n_sites).map(|a| (a, n_sites - a)).collect(),
            SectorSet::All => (0..=n_sites)
                .flat_map(|a| (0..=n_sites).map(move |b| (a, b)))
                .collect(),
        }
    }
}

/// Spectra of every sector a thermal average needs, for one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpectra {
    pub geometry: ClusterGeometry,
    pub params: HubbardParams,
    pub set: SectorSet,
    pub sectors: Vec<Spectrum>,
}

impl ClusterSpectra {
    pub fn n_sites(&self) -> usize {
        self.geometry.n_sites()
    }

    pub fn n_states(&self) -> usize {
        self.sectors.iter().map(Spectrum::len).sum()
    }

    pub fn sector(&self, n_up: usize, n_dn: usize) -> Option<&Spectrum> {
        self.sectors.iter().find(|s| s.sector() == (n_up, n_dn))
    }
}

/// Solve every sector in `set`, in parallel over sectors.
///
/// Only sectors with `n_up <= n_dn` are diagonalized; their mirrors come
/// from [`Spectrum::spin_flipped`]. The result is ordered like
/// [`SectorSet::sectors`].
pub fn solve_cluster(
    geom: &ClusterGeometry,
    params: &HubbardParams,
    set: SectorSet,
) -> Result<ClusterSpectra> {
    params.validate()?;
    let sectors = set.sectors(geom.n_sites());
    let unique: Vec<(usize, usize)> = sectors.iter().copied().filter(|&(a, b)| a <= b).collect();
    let solved = par::map(&unique, |&(a, b)| solve_sector(geom, params, a, b));
    let solved: Vec<Spectrum> = solved.into_iter().collect::<Result<_>>()?;

    let spectra = sectors
        .iter()
        .map(|&(a, b)| {
            if a <= b {
                solved.iter().find(|s| s.sector() == (a, b)).cloned()
            } else {
                solved.iter().find(|s| s.sector() == (b, a)).map(Spectrum::spin_flipped)
            }
            .expect("every sector has a solved representative")
        })
        .collect();

    Ok(ClusterSpectra {
        geometry: geom.clone(),
        params: *params,
        set,
        sectors: spectra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(t: f64, u: f64) -> HubbardParams {
        HubbardParams::half_filled(t, u).unwrap()
    }

    /// Eigenvalues of the 2-site (1,1) sector, from the closed form.
    fn dimer_oracle(t: f64, u: f64) -> Vec<f64> {
        let r = (u * u + 16.0 * t * t).sqrt();
        let mut e = vec![0.0, u, (u - r) / 2.0, (u + r) / 2.0];
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn dimer_sector_matrix() {
        let geom = ClusterGeometry::chain(2).unwrap();
        let basis = enumerate_sector(2, 1, 1).unwrap();
        let h = build_sector_hamiltonian(&geom, &params(1.0, 4.0), &basis).unwrap();
        // Basis order: (up,dn) masks (01,01) (01,10) (10,01) (10,10).
        // Doubly occupied states are k = 0 and k = 3.
        let diag: Vec<f64> = (0..4).map(|k| h[(k, k)]).collect();
        assert_eq!(diag, vec![4.0, 0.0, 0.0, 4.0]);
        for k in [1, 2] {
            for d in [0, 3] {
                assert_eq!(h[(k, d)].abs(), 1.0);
            }
        }
        assert_eq!(h[(1, 2)], 0.0);
        assert_eq!(h[(0, 3)], 0.0);
    }

    #[test]
    fn dimer_spectrum_matches_closed_form() {
        let geom = ClusterGeometry::chain(2).unwrap();
        for (t, u) in [(1.0, 0.0), (1.0, 4.0), (1.0, 8.0), (0.7, 3.3)] {
            let s = solve_sector(&geom, &params(t, u), 1, 1).unwrap();
            for (a, b) in s.energies.iter().zip(dimer_oracle(t, u)) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
        }
        let s = solve_sector(&geom, &params(1.0, 0.0), 1, 1).unwrap();
        assert_eq!(s.energies.len(), 4);
        for (a, b) in s.energies.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_particle_open_chain() {
        let geom = ClusterGeometry::chain(4).unwrap();
        let basis = enumerate_sector(4, 1, 0).unwrap();
        let h = build_sector_hamiltonian(&geom, &params(1.0, 6.0), &basis).unwrap();
        for i in 0..4usize {
            for j in 0..4usize {
                let expected = if i.abs_diff(j) == 1 { -1.0 } else { 0.0 };
                assert_eq!(h[(i, j)], expected);
            }
        }
        let s = diagonalize(&h, &basis).unwrap();
        let mut oracle: Vec<f64> = (1..=4)
            .map(|k| -2.0 * (k as f64 * std::f64::consts::PI / 5.0).cos())
            .collect();
        oracle.sort_by(f64::total_cmp);
        for (a, b) in s.energies.iter().zip(oracle) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_u_has_zero_diagonal() {
        let geom = ClusterGeometry::chain(4).unwrap();
        let basis = enumerate_sector(4, 2, 2).unwrap();
        let h = build_sector_hamiltonian(&geom, &params(1.3, 0.0), &basis).unwrap();
        assert!((0..h.nrows()).all(|k| h[(k, k)] == 0.0));
    }

    #[test]
    fn rejects_mismatched_basis() {
        let geom = ClusterGeometry::chain(3).unwrap();
        let basis = enumerate_sector(4, 2, 2).unwrap();
        assert!(build_sector_hamiltonian(&geom, &params(1.0, 1.0), &basis).is_err());
    }

    #[test]
    fn identity_spectrum() {
        let (values, vectors) = symmetric_eigen(&DMatrix::identity(5, 5)).unwrap();
        assert!(values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let gram = vectors.transpose() * &vectors;
        assert!((gram - DMatrix::<f64>::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn reconstruction_of_random_symmetric_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = DMatrix::<f64>::from_fn(50, 50, |_, _| rng.gen_range(-1.0..1.0));
        let h = &a + a.transpose();
        let (values, v) = symmetric_eigen(&h).unwrap();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let rebuilt = &v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(values.clone())) * v.transpose();
        let max_e = values.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        assert!((rebuilt - &h).amax() < 1e-9 * max_e);
        for j in 0..50 {
            assert!((v.column(j).norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_asymmetric_matrix() {
        let mut h = DMatrix::<f64>::identity(3, 3);
        h[(0, 1)] = 1.0;
        assert!(matches!(symmetric_eigen(&h), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn trace_and_observable_bounds() {
        let geom = ClusterGeometry::ring(4).unwrap();
        let p = params(1.0, 3.0);
        for (a, b) in [(2, 2), (1, 3), (3, 2)] {
            let basis = enumerate_sector(4, a, b).unwrap();
            let h = build_sector_hamiltonian(&geom, &p, &basis).unwrap();
            let s = diagonalize(&h, &basis).unwrap();
            assert_eq!(s.len(), basis.dimension());
            let max_e = s.energies.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            let sum: f64 = s.energies.iter().sum();
            assert!((sum - h.trace()).abs() <= 1e-8 * basis.dimension() as f64 * max_e);
            for n in 0..s.len() {
                let up = s.density_up_of(n);
                let dn = s.density_dn_of(n);
                let d = s.double_occupancy_of(n);
                for i in 0..4 {
                    assert!(d[i] >= -1e-12);
                    assert!(d[i] <= up[i].min(dn[i]) + 1e-12);
                    assert!(up[i] <= 1.0 + 1e-12 && dn[i] <= 1.0 + 1e-12);
                }
                assert_abs_diff_eq!(up.iter().sum::<f64>(), a as f64, epsilon = 1e-10);
                assert_abs_diff_eq!(dn.iter().sum::<f64>(), b as f64, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn particle_hole_symmetry_on_bipartite_clusters() {
        for geom in [
            ClusterGeometry::chain(2).unwrap(),
            ClusterGeometry::chain(3).unwrap(),
            ClusterGeometry::chain(4).unwrap(),
            ClusterGeometry::ring(4).unwrap(),
            ClusterGeometry::square(2, 2).unwrap(),
        ] {
            let n = geom.n_sites();
            let p = params(1.0, 2.5);
            for a in 0..=n {
                for b in 0..=n {
                    let s = solve_sector(&geom, &p, a, b).unwrap();
                    let mirror = solve_sector(&geom, &p, n - a, n - b).unwrap();
                    let shift = p.u * (n as f64 - (a + b) as f64);
                    for (x, y) in s.energies.iter().zip(&mirror.energies) {
                        assert!((x + shift - y).abs() < 1e-8, "{geom} ({a},{b})");
                    }
                }
            }
        }
    }

    #[test]
    fn spin_flip_symmetry() {
        let geom = ClusterGeometry::chain(4).unwrap();
        let p = params(1.0, 5.0);
        let direct = solve_sector(&geom, &p, 3, 1).unwrap();
        let mirrored = solve_sector(&geom, &p, 1, 3).unwrap().spin_flipped();
        assert_eq!(direct.sector(), mirrored.sector());
        for (x, y) in direct.energies.iter().zip(&mirrored.energies) {
            assert!((x - y).abs() < 1e-10);
        }
        let dsum = |s: &Spectrum| -> f64 { s.density_up.iter().sum() };
        assert_abs_diff_eq!(dsum(&direct), dsum(&mirrored), epsilon = 1e-9);
    }

    #[test]
    fn cluster_solve_covers_sector_sets() {
        let geom = ClusterGeometry::chain(3).unwrap();
        let p = params(1.0, 4.0);
        let half = solve_cluster(&geom, &p, SectorSet::HalfFilled).unwrap();
        assert_eq!(half.sectors.len(), 4);
        assert!(half.sectors.iter().all(|s| s.n_electrons() == 3));
        let all = solve_cluster(&geom, &p, SectorSet::All).unwrap();
        assert_eq!(all.sectors.len(), 16);
        assert_eq!(all.n_states(), 64);
    }
}
