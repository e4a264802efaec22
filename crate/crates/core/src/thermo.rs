//! Thermal averages over sector spectra and the entanglement witness.
//!
//! Units: `k_B = 1`, `mu_B = 1`; energies in units of the hopping when
//! `t = 1`. Only the z channel is evaluated; the isotropic total
//! susceptibility is `3 chi_z`.
//!
//! The witness is
//!
//! ```text
//! E = chi_z - (<L0^z> - 1/12) / T
//! ```
//!
//! with `chi_z = (<M_z^2> - <M_z>^2) / (N T)` and
//! `<L0^z> = (1/N) sum_i <(S_i^z)^2>`. `E < 0` certifies entanglement.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ed::{symmetric_eigen, ClusterSpectra};
use crate::error::{Error, Result};
use crate::lattice::ClusterGeometry;

/// `s_max^2 / 3` for spin-1/2 sites: the separable bound on `<L0^z>`.
pub const SEPARABLE_OFFSET: f64 = 1.0 / 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// Fixed `n_up + n_dn = N`, all `S^z` resolutions.
    CanonicalHalfFilled,
    /// All sectors, fugacity `exp(beta mu (n_up + n_dn))` with `mu` taken
    /// from the Hubbard parameters (`U/2` at half filling).
    GrandCanonical,
}

impl Ensemble {
    pub fn name(self) -> &'static str {
        match self {
            Ensemble::CanonicalHalfFilled => "canonical",
            Ensemble::GrandCanonical => "grand_canonical",
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "canonical" | "canonical_half_filled" | "c" => Ok(Ensemble::CanonicalHalfFilled),
            "grand_canonical" | "grandcanonical" | "gc" => Ok(Ensemble::GrandCanonical),
            other => Err(Error::InvalidParameter(format!(
                "unknown ensemble `{other}` (expected canonical or grand_canonical)"
            ))),
        }
    }
}

/// Thermal observables at one temperature. Intensive quantities are per site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalObservables {
    pub temperature: f64,
    pub chi_z: f64,
    pub l0_z: f64,
    pub witness_e: f64,
    pub mean_filling: f64,
    pub mean_energy: f64,
}

impl ThermalObservables {
    pub fn from_parts(temperature: f64, chi_z: f64, l0_z: f64, mean_filling: f64, mean_energy: f64) -> Self {
        ThermalObservables {
            temperature,
            chi_z,
            l0_z,
            witness_e: witness(chi_z, l0_z, temperature),
            mean_filling,
            mean_energy,
        }
    }

    /// Isotropic total susceptibility `chi_x + chi_y + chi_z`.
    pub fn chi_total(&self) -> f64 {
        3.0 * self.chi_z
    }

    pub fn is_entangled(&self) -> bool {
        self.witness_e < 0.0
    }
}

/// `E = chi_z - (l0_z - 1/12) / T`.
#[inline]
pub fn witness(chi_z: f64, l0_z: f64, temperature: f64) -> f64 {
    chi_z - (l0_z - SEPARABLE_OFFSET) / temperature
}

fn check_temperature(temperature: f64) -> Result<f64> {
    if temperature > 0.0 && temperature.is_finite() {
        Ok(1.0 / temperature)
    } else {
        Err(Error::InvalidParameter(format!(
            "temperature must be positive and finite, got {temperature}"
        )))
    }
}

/// Check that `spectra` holds exactly the sectors `ens` needs and return
/// their indices.
pub fn ensemble_sectors(spectra: &ClusterSpectra, ens: Ensemble) -> Result<Vec<usize>> {
    let n = spectra.n_sites();
    let wanted = |a: usize, b: usize| match ens {
        Ensemble::CanonicalHalfFilled => a + b == n,
        Ensemble::GrandCanonical => true,
    };
    let expected = match ens {
        Ensemble::CanonicalHalfFilled => n + 1,
        Ensemble::GrandCanonical => (n + 1) * (n + 1),
    };
    let mut seen = vec![false; (n + 1) * (n + 1)];
    let mut picked = Vec::with_capacity(expected);
    for (idx, s) in spectra.sectors.iter().enumerate() {
        let (a, b) = s.sector();
        if !wanted(a, b) {
            continue;
        }
        let slot = &mut seen[a * (n + 1) + b];
        if *slot {
            return Err(Error::SectorMismatch(format!("sector ({a}, {b}) appears twice")));
        }
        *slot = true;
        picked.push(idx);
    }
    if picked.len() != expected {
        return Err(Error::SectorMismatch(format!(
            "{ens} ensemble on {n} sites needs {expected} sectors, found {}",
            picked.len()
        )));
    }
    Ok(picked)
}

/// Canonical or grand-canonical averages from exact spectra.
///
/// Boltzmann weights are shifted by the smallest `E_n - mu n_e` over all
/// included states, so low temperatures do not underflow.
pub fn thermal_observables(
    spectra: &ClusterSpectra,
    ens: Ensemble,
    temperature: f64,
) -> Result<ThermalObservables> {
    let beta = check_temperature(temperature)?;
    let picked = ensemble_sectors(spectra, ens)?;
    let n = spectra.n_sites() as f64;
    let mu = match ens {
        Ensemble::CanonicalHalfFilled => 0.0,
        Ensemble::GrandCanonical => spectra.params.mu,
    };

    let shifted = |e: f64, ne: usize| e - mu * ne as f64;
    let floor = picked
        .iter()
        .map(|&i| {
            let s = &spectra.sectors[i];
            s.energies
                .first()
                .map_or(f64::INFINITY, |&e| shifted(e, s.n_electrons()))
        })
        .fold(f64::INFINITY, f64::min);

    let (mut z, mut m1, mut m2, mut ne, mut energy, mut moment) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &i in &picked {
        let s = &spectra.sectors[i];
        let sz = s.sz();
        let n_e = s.n_electrons();
        let (mut zs, mut es, mut ls) = (0.0, 0.0, 0.0);
        for (state, &e) in s.energies.iter().enumerate() {
            let w = (-beta * (shifted(e, n_e) - floor)).exp();
            if w == 0.0 {
                continue;
            }
            zs += w;
            es += w * e;
            ls += w * s.local_moment_sum(state);
        }
        z += zs;
        m1 += zs * sz;
        m2 += zs * sz * sz;
        ne += zs * n_e as f64;
        energy += es;
        moment += ls;
    }

    let (m1, m2) = (m1 / z, m2 / z);
    let chi_z = (beta * (m2 - m1 * m1) / n).max(0.0);
    let l0_z = moment / z / (4.0 * n);
    Ok(ThermalObservables::from_parts(
        temperature,
        chi_z,
        l0_z,
        ne / z / n,
        energy / z / n,
    ))
}

/// Exact `U = 0` observables from the one-body problem.
///
/// The hopping matrix `-t K` is diagonalized, the thermal propagator
/// `g_ij = <c†_i c_j>` is built from Fermi occupations, and spin
/// correlations follow from the same-spin Wick contraction
/// `<n_i n_j> = g_ii g_jj + g_ij (delta_ij - g_ji)`; opposite spins are
/// uncorrelated.
pub fn free_fermion_reference(
    geom: &ClusterGeometry,
    t: f64,
    mu: f64,
    temperature: f64,
) -> Result<ThermalObservables> {
    let beta = check_temperature(temperature)?;
    let n = geom.n_sites();
    let hop = geom.adjacency() * (-t);
    let (levels, phi) = symmetric_eigen(&hop)?;
    let occupation: Vec<f64> = levels
        .iter()
        .map(|&e| fermi(beta * (e - mu)))
        .collect();

    let g = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| phi[(i, k)] * phi[(j, k)] * occupation[k]).sum::<f64>()
    });

    let mut connected = 0.0;
    let mut moment = 0.0;
    let mut filling = 0.0;
    for i in 0..n {
        let gii = g[(i, i)];
        filling += 2.0 * gii;
        moment += 2.0 * (gii - gii * gii);
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            // <S_i S_j> = (1/4) * 2 * g_ij (delta_ij - g_ji), <S_i> = 0.
            connected += 0.5 * g[(i, j)] * (delta - g[(j, i)]);
        }
    }
    let energy = 2.0 * hop.component_mul(&g.transpose()).sum();
    let nf = n as f64;
    Ok(ThermalObservables::from_parts(
        temperature,
        (beta * connected / nf).max(0.0),
        moment / (4.0 * nf),
        filling / nf,
        energy / nf,
    ))
}

/// `1 / (1 + e^x)` without overflow.
#[inline]
pub fn fermi(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::{solve_cluster, HubbardParams, SectorSet};
    use approx::assert_abs_diff_eq;

    fn gc_spectra(geom: &ClusterGeometry, t: f64, u: f64, mu: f64) -> ClusterSpectra {
        let p = HubbardParams::with_mu(t, u, mu).unwrap();
        solve_cluster(geom, &p, SectorSet::All).unwrap()
    }

    #[test]
    fn atomic_limit_closed_form() {
        let geom = ClusterGeometry::chain(1).unwrap();
        let spectra = gc_spectra(&geom, 1.0, 0.0, 0.0);
        for temperature in [0.1, 1.0, 10.0] {
            let beta = 1.0 / temperature;
            let obs = thermal_observables(&spectra, Ensemble::GrandCanonical, temperature).unwrap();
            assert_abs_diff_eq!(obs.chi_z, beta / 8.0, epsilon = 1e-12);
            assert_abs_diff_eq!(obs.l0_z, 1.0 / 8.0, epsilon = 1e-12);
            assert_abs_diff_eq!(obs.witness_e, beta / 12.0, epsilon = 1e-12);
            assert_abs_diff_eq!(obs.mean_filling, 1.0, epsilon = 1e-12);

            let ff = free_fermion_reference(&geom, 1.0, 0.0, temperature).unwrap();
            assert_abs_diff_eq!(ff.chi_z, beta / 8.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ff.l0_z, 1.0 / 8.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ff.witness_e, beta / 12.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_temperature() {
        let geom = ClusterGeometry::chain(2).unwrap();
        let spectra = gc_spectra(&geom, 1.0, 2.0, 1.0);
        assert!(thermal_observables(&spectra, Ensemble::GrandCanonical, 0.0).is_err());
        assert!(thermal_observables(&spectra, Ensemble::GrandCanonical, -1.0).is_err());
        assert!(free_fermion_reference(&geom, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn grand_canonical_needs_all_sectors() {
        let geom = ClusterGeometry::chain(2).unwrap();
        let p = HubbardParams::half_filled(1.0, 2.0).unwrap();
        let half = solve_cluster(&geom, &p, SectorSet::HalfFilled).unwrap();
        assert!(matches!(
            thermal_observables(&half, Ensemble::GrandCanonical, 1.0),
            Err(Error::SectorMismatch(_))
        ));
        assert!(thermal_observables(&half, Ensemble::CanonicalHalfFilled, 1.0).is_ok());
    }

    #[test]
    fn matches_free_fermions_at_zero_u() {
        let geoms = [
            ClusterGeometry::chain(2).unwrap(),
            ClusterGeometry::chain(3).unwrap(),
            ClusterGeometry::chain(4).unwrap(),
            ClusterGeometry::ring(3).unwrap(),
            ClusterGeometry::ring(4).unwrap(),
            ClusterGeometry::square(2, 2).unwrap(),
            ClusterGeometry::ring(6).unwrap(),
            ClusterGeometry::chain(6).unwrap(),
            ClusterGeometry::square(2, 3).unwrap(),
        ];
        for geom in &geoms {
            for mu in [0.0, 0.3] {
                let spectra = gc_spectra(geom, 1.0, 0.0, mu);
                for temperature in [0.2, 0.5, 1.0, 2.0, 5.0] {
                    let ed = thermal_observables(&spectra, Ensemble::GrandCanonical, temperature).unwrap();
                    let ff = free_fermion_reference(geom, 1.0, mu, temperature).unwrap();
                    assert!((ed.chi_z - ff.chi_z).abs() < 1e-8, "{geom} T={temperature}");
                    assert!((ed.l0_z - ff.l0_z).abs() < 1e-8, "{geom} T={temperature}");
                    assert!((ed.mean_filling - ff.mean_filling).abs() < 1e-8);
                    assert!((ed.mean_energy - ff.mean_energy).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn half_filling_and_bounds_on_bipartite_clusters() {
        for geom in [ClusterGeometry::chain(4).unwrap(), ClusterGeometry::ring(4).unwrap()] {
            for u in [0.0, 4.0, 8.0] {
                let spectra = gc_spectra(&geom, 1.0, u, u / 2.0);
                for temperature in [0.05, 0.3, 1.0, 10.0] {
                    let obs = thermal_observables(&spectra, Ensemble::GrandCanonical, temperature).unwrap();
                    assert_abs_diff_eq!(obs.mean_filling, 1.0, epsilon = 1e-10);
                    assert!(obs.chi_z >= 0.0);
                    assert!((0.0..=0.25).contains(&obs.l0_z));
                    assert_eq!(obs.witness_e, witness(obs.chi_z, obs.l0_z, temperature));
                }
            }
        }
    }

    #[test]
    fn high_temperature_law() {
        for geom in [ClusterGeometry::chain(4).unwrap(), ClusterGeometry::ring(5).unwrap()] {
            for u in [0.0, 4.0, 8.0] {
                let spectra = gc_spectra(&geom, 1.0, u, u / 2.0);
                let obs = thermal_observables(&spectra, Ensemble::GrandCanonical, 100.0).unwrap();
                assert!((100.0 * obs.witness_e - SEPARABLE_OFFSET).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn atomic_limit_reduces_to_fixed_spin_condition() {
        // t -> 0, U >> T: every site carries exactly one spin-1/2.
        let geom = ClusterGeometry::chain(2).unwrap();
        let spectra = gc_spectra(&geom, 1e-6, 50.0, 25.0);
        let temperature = 0.5;
        let obs = thermal_observables(&spectra, Ensemble::GrandCanonical, temperature).unwrap();
        assert_abs_diff_eq!(obs.l0_z, 0.25, epsilon = 1e-9);
        // Fixed-length witness: chi_total < s / T with s = 1/2, i.e.
        // 3 chi_z < 1 / (2T).
        let fixed_spin = obs.chi_total() - 0.5 / temperature;
        assert_abs_diff_eq!(3.0 * obs.witness_e, fixed_spin, epsilon = 1e-8);
        // Free spins are separable.
        assert!(obs.witness_e > 0.0);
    }

    #[test]
    fn fermi_function_is_stable() {
        assert_eq!(fermi(0.0), 0.5);
        assert!(fermi(1e4) >= 0.0 && fermi(1e4) < 1e-300);
        assert_eq!(fermi(-1e4), 1.0);
    }
}
