//! Equal-time measurements from the Green functions of one configuration.
//!
//! Measurements use `e^{dtau t K/2} G e^{-dtau t K/2}`, which places the
//! operator symmetrically between hopping half-steps and keeps the Trotter
//! error of equal-time observables at `O(dtau^2)`.

use nalgebra::DMatrix;

use super::state::QmcState;

/// Primary per-configuration quantities. Derived observables (`chi_z`,
/// `l0_z`, `E`) are nonlinear in these and are formed only after averaging.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sample {
    /// `<M_z>` for this configuration.
    pub m1: f64,
    /// `<M_z^2>` for this configuration.
    pub m2: f64,
    /// `(1/N) sum_i <n_i,up + n_i,dn - 2 n_i,up n_i,dn>`.
    pub local_moment: f64,
    /// Electrons per site.
    pub filling: f64,
    /// `<H>` per site.
    pub energy: f64,
    /// `(1/N) sum_i <n_i,up n_i,dn>`.
    pub double_occupancy: f64,
}

impl Sample {
    pub const WIDTH: usize = 6;

    pub fn to_array(&self) -> [f64; Self::WIDTH] {
        [
            self.m1,
            self.m2,
            self.local_moment,
            self.filling,
            self.energy,
            self.double_occupancy,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Sample {
            m1: v[0],
            m2: v[1],
            local_moment: v[2],
            filling: v[3],
            energy: v[4],
            double_occupancy: v[5],
        }
    }

    pub fn accumulate(&mut self, other: &Sample, weight: f64) {
        self.m1 += weight * other.m1;
        self.m2 += weight * other.m2;
        self.local_moment += weight * other.local_moment;
        self.filling += weight * other.filling;
        self.energy += weight * other.energy;
        self.double_occupancy += weight * other.double_occupancy;
    }
}

/// Wick-factorized measurement from a pair of equal-time Green functions
/// `G_s,ij = <c_i c†_j>`.
///
/// Same spin: `<n_i n_j> = (1 - G_ii)(1 - G_jj) + (delta_ij - G_ji) G_ij`.
/// Opposite spins factorize.
pub fn measure_green(
    green: &[DMatrix<f64>; 2],
    bonds: &[(usize, usize)],
    t: f64,
    u: f64,
) -> Sample {
    let n = green[0].nrows();
    let nf = n as f64;
    let mut m1 = 0.0;
    let mut fluct = 0.0;
    let mut moment = 0.0;
    let mut filling = 0.0;
    let mut double = 0.0;
    for i in 0..n {
        let up = 1.0 - green[0][(i, i)];
        let dn = 1.0 - green[1][(i, i)];
        m1 += 0.5 * (up - dn);
        filling += up + dn;
        double += up * dn;
        moment += up + dn - 2.0 * up * dn;
    }
    for g in green {
        // sum_ij (delta_ij - G_ji) G_ij = Tr G - Tr G^2
        let mut tr = 0.0;
        for i in 0..n {
            tr += g[(i, i)];
            for j in 0..n {
                tr -= g[(j, i)] * g[(i, j)];
            }
        }
        fluct += tr;
    }
    let mut kinetic = 0.0;
    for &(i, j) in bonds {
        for g in green {
            // <c†_i c_j> + <c†_j c_i> = -G_ji - G_ij for i != j.
            kinetic += t * (g[(j, i)] + g[(i, j)]);
        }
    }
    Sample {
        m1,
        m2: m1 * m1 + 0.25 * fluct,
        local_moment: moment / nf,
        filling: filling / nf,
        energy: (kinetic + u * double) / nf,
        double_occupancy: double / nf,
    }
}

/// Measure the current configuration of a chain.
pub fn measure(state: &QmcState, bonds: &[(usize, usize)], t: f64, u: f64) -> Sample {
    let sym = [
        &state.exp_k_half * &state.green[0] * &state.exp_k_half_inv,
        &state.exp_k_half * &state.green[1] * &state.exp_k_half_inv,
    ];
    measure_green(&sym, bonds, t, u)
}
