//! Markov-chain state: HS field, propagators and equal-time Green functions.
//!
//! Slice propagators are `B_s(l) = diag(exp(s lambda h(., l))) exp(dtau t K)`
//! with `s = +1` for up and `-1` for down electrons. With the potential
//! factor leftmost, the equal-time Green function at slice `l`,
//!
//! ```text
//! G_s(l) = (1 + B_s(l) B_s(l-1) ... B_s(0) B_s(L-1) ... B_s(l+1))^-1,
//! ```
//!
//! changes by a rank-one update when a spin of slice `l` flips. The
//! chemical-potential term `exp(dtau (mu - U/2))` is identically 1 at half
//! filling and is omitted.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::{hs_coupling, HsField};
use super::QmcConfig;
use crate::error::Result;

/// Wrapped and recomputed Green functions differing by more than this
/// trigger a stability warning.
pub const STABILITY_WARNING: f64 = 1e-4;

/// Species sign on the HS coupling.
pub const SPINS: [f64; 2] = [1.0, -1.0];

/// `exp(c A)` for a real symmetric `A`, via its eigendecomposition.
pub fn symmetric_exp(a: &DMatrix<f64>, c: f64) -> DMatrix<f64> {
    let eig = a.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| (c * x).exp()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Counters accumulated over the lifetime of a chain.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    pub proposed: u64,
    pub accepted: u64,
    /// Proposals whose weight ratio was negative (never expected at half filling).
    pub negative_ratios: u64,
    /// Largest wrapped-vs-recomputed Green deviation seen.
    pub max_deviation: f64,
    pub stability_warnings: u64,
    pub recomputations: u64,
}

impl Diagnostics {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct QmcState {
    pub(crate) n_sites: usize,
    pub(crate) n_slices: usize,
    pub(crate) lambda: f64,
    pub(crate) stabilization: usize,
    pub(crate) field: HsField,
    pub(crate) exp_k: DMatrix<f64>,
    pub(crate) exp_k_inv: DMatrix<f64>,
    pub(crate) exp_k_half: DMatrix<f64>,
    pub(crate) exp_k_half_inv: DMatrix<f64>,
    /// Green functions for up and down at `slice`.
    pub(crate) green: [DMatrix<f64>; 2],
    pub(crate) slice: usize,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) diagnostics: Diagnostics,
}

/// `U D T` factorization of a long matrix product.
struct Udt {
    u: DMatrix<f64>,
    d: DVector<f64>,
    t: DMatrix<f64>,
}

impl QmcState {
    /// Random initial field from the seeded generator and Green functions
    /// computed from scratch at the last slice.
    pub fn new(cfg: &QmcConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let n = cfg.geometry.n_sites();
        let l = cfg.n_slices();
        let field = HsField::random(n, l, &mut rng);
        Ok(Self::with_field(cfg, field, rng))
    }

    /// State with a prescribed field.
    pub fn with_field(cfg: &QmcConfig, field: HsField, rng: ChaCha8Rng) -> Self {
        let n = cfg.geometry.n_sites();
        let l = cfg.n_slices();
        assert_eq!((field.n_sites(), field.n_slices()), (n, l), "field shape mismatch");
        let k = cfg.geometry.adjacency();
        let dtt = cfg.delta_tau * cfg.t;
        let mut state = QmcState {
            n_sites: n,
            n_slices: l,
            lambda: hs_coupling(cfg.u, cfg.delta_tau),
            stabilization: cfg.stabilization_interval,
            field,
            exp_k: symmetric_exp(&k, dtt),
            exp_k_inv: symmetric_exp(&k, -dtt),
            exp_k_half: symmetric_exp(&k, 0.5 * dtt),
            exp_k_half_inv: symmetric_exp(&k, -0.5 * dtt),
            green: [DMatrix::zeros(n, n), DMatrix::zeros(n, n)],
            slice: l - 1,
            rng,
            diagnostics: Diagnostics::default(),
        };
        state.green = [state.green_from_scratch(l - 1, 0), state.green_from_scratch(l - 1, 1)];
        state
    }

    pub fn field(&self) -> &HsField {
        &self.field
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_slices(&self) -> usize {
        self.n_slices
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Slice the current Green functions belong to.
    pub fn slice(&self) -> usize {
        self.slice
    }

    pub fn green(&self, spin: usize) -> &DMatrix<f64> {
        &self.green[spin]
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    #[inline]
    fn potential(&self, slice: usize, spin: usize, site: usize) -> f64 {
        (SPINS[spin] * self.lambda * self.field.get(site, slice) as f64).exp()
    }

    /// `B_spin(slice) * x`.
    fn apply_b(&self, slice: usize, spin: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = &self.exp_k * x;
        for i in 0..self.n_sites {
            let v = self.potential(slice, spin, i);
            y.row_mut(i).scale_mut(v);
        }
        y
    }

    /// Dense `B_spin(slice)`.
    pub fn slice_matrix(&self, slice: usize, spin: usize) -> DMatrix<f64> {
        self.apply_b(slice, spin, &DMatrix::identity(self.n_sites, self.n_sites))
    }

    /// Stable `U D T` form of `B(l) B(l-1) ... B(l+1)` (all `L` factors),
    /// re-orthogonalized every `stabilization` factors.
    fn chain_product(&self, slice: usize, spin: usize) -> Udt {
        let n = self.n_sites;
        let l = self.n_slices;
        let mut acc = Udt {
            u: DMatrix::identity(n, n),
            d: DVector::from_element(n, 1.0),
            t: DMatrix::identity(n, n),
        };
        let order: Vec<usize> = (1..=l).map(|m| (slice + m) % l).collect();
        for chunk in order.chunks(self.stabilization.max(1)) {
            let mut x = acc.u.clone();
            for &m in chunk {
                x = self.apply_b(m, spin, &x);
            }
            for (j, mut col) in x.column_iter_mut().enumerate() {
                col.scale_mut(acc.d[j]);
            }
            let qr = x.col_piv_qr();
            let q = qr.q();
            let mut r = qr.r();
            let p = qr.p();
            let d = DVector::from_iterator(
                n,
                (0..n).map(|i| {
                    let v = r[(i, i)].abs();
                    if v > 0.0 {
                        v
                    } else {
                        f64::MIN_POSITIVE
                    }
                }),
            );
            for i in 0..n {
                let inv = 1.0 / d[i];
                r.row_mut(i).scale_mut(inv);
            }
            // x D P = Q R  =>  x D = Q R P^-1.
            p.inv_permute_columns(&mut r);
            acc = Udt {
                u: q,
                d,
                t: r * &acc.t,
            };
        }
        acc
    }

    /// `(1 + U D T)^-1`, splitting `D` into large and small parts so no
    /// ill-conditioned matrix is inverted.
    fn green_from_scratch(&self, slice: usize, spin: usize) -> DMatrix<f64> {
        let Udt { u, d, t } = self.chain_product(slice, spin);
        let n = self.n_sites;
        let big_inv = d.map(|x| if x > 1.0 { 1.0 / x } else { 1.0 });
        let small = d.map(|x| if x > 1.0 { 1.0 } else { x });
        let mut left = u.transpose();
        for i in 0..n {
            left.row_mut(i).scale_mut(big_inv[i]);
        }
        let mut m = t;
        for i in 0..n {
            m.row_mut(i).scale_mut(small[i]);
        }
        m += &left;
        m.lu().solve(&left).expect("stabilized Green matrix is nonsingular")
    }

    /// Recompute both Green functions at the current slice and return the
    /// largest deviation from the values carried so far.
    pub fn recompute(&mut self) -> f64 {
        let fresh = [
            self.green_from_scratch(self.slice, 0),
            self.green_from_scratch(self.slice, 1),
        ];
        let dev = fresh
            .iter()
            .zip(&self.green)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max);
        self.green = fresh;
        self.diagnostics.recomputations += 1;
        self.diagnostics.max_deviation = self.diagnostics.max_deviation.max(dev);
        if dev > STABILITY_WARNING {
            self.diagnostics.stability_warnings += 1;
            warn!("Green function drift {dev:e} at slice {} exceeds {STABILITY_WARNING:e}", self.slice);
        }
        dev
    }

    /// Advance the Green functions to the next slice: `G <- B G B^-1`.
    pub fn wrap(&mut self) {
        let next = (self.slice + 1) % self.n_slices;
        for spin in 0..2 {
            let mut g = &self.exp_k * &self.green[spin] * &self.exp_k_inv;
            for i in 0..self.n_sites {
                let v = self.potential(next, spin, i);
                g.row_mut(i).scale_mut(v);
                g.column_mut(i).scale_mut(1.0 / v);
            }
            self.green[spin] = g;
        }
        self.slice = next;
    }

    /// Ratio `R_spin = 1 + (1 - G_ii) (exp(-2 s lambda h) - 1)` for flipping
    /// `h(site, slice)` at the current slice, with the update factors.
    fn flip_ratio(&self, site: usize) -> ([f64; 2], [f64; 2]) {
        let h = self.field.get(site, self.slice) as f64;
        let mut delta = [0.0; 2];
        let mut ratio = [0.0; 2];
        for spin in 0..2 {
            delta[spin] = (-2.0 * SPINS[spin] * self.lambda * h).exp() - 1.0;
            ratio[spin] = 1.0 + (1.0 - self.green[spin][(site, site)]) * delta[spin];
        }
        (ratio, delta)
    }

    /// Weight ratio of flipping `h(site, current slice)`.
    pub fn proposal_ratio(&self, site: usize) -> f64 {
        let (r, _) = self.flip_ratio(site);
        r[0] * r[1]
    }

    /// Flip a spin of the current slice unconditionally and apply the
    /// rank-one Green update `G' = G - (delta/R) G e_i (e_i^T - G_i.)`.
    pub fn flip(&mut self, site: usize) {
        let (ratio, delta) = self.flip_ratio(site);
        let n = self.n_sites;
        for spin in 0..2 {
            let g = &mut self.green[spin];
            let coef = delta[spin] / ratio[spin];
            let col: Vec<f64> = (0..n).map(|j| g[(j, site)]).collect();
            let mut row: Vec<f64> = (0..n).map(|k| -g[(site, k)]).collect();
            row[site] += 1.0;
            for k in 0..n {
                let rk = coef * row[k];
                if rk == 0.0 {
                    continue;
                }
                for j in 0..n {
                    g[(j, k)] -= col[j] * rk;
                }
            }
        }
        self.field.flip(site, self.slice);
    }

    /// Metropolis pass over the sites of the current slice.
    pub fn update_slice(&mut self) {
        for site in 0..self.n_sites {
            let r = self.proposal_ratio(site);
            self.diagnostics.proposed += 1;
            if r < 0.0 {
                self.diagnostics.negative_ratios += 1;
            }
            if r >= 1.0 || self.rng.gen::<f64>() < r {
                self.flip(site);
                self.diagnostics.accepted += 1;
            }
        }
    }

    /// Advance to the next slice: recompute from scratch at stabilization
    /// points, wrap otherwise. The last slice is always a stabilization
    /// point, so chains shorter than the interval still get refreshed.
    pub fn advance(&mut self) {
        self.wrap();
        let next = self.slice + 1;
        if next.is_multiple_of(self.stabilization.max(1)) || next == self.n_slices {
            self.recompute();
        }
    }

    /// One sweep over all slices; `visit` sees the state after each slice
    /// has been updated.
    pub fn sweep_with<F: FnMut(&QmcState)>(&mut self, mut visit: F) {
        for _ in 0..self.n_slices {
            self.advance();
            self.update_slice();
            visit(self);
        }
    }

    pub fn sweep(&mut self) {
        self.sweep_with(|_| {});
    }

    /// Green function of one spin at `slice` computed directly from the
    /// dense product, without stabilization. For tests on short chains.
    pub fn naive_green(&self, slice: usize, spin: usize) -> DMatrix<f64> {
        let n = self.n_sites;
        let mut p = DMatrix::identity(n, n);
        for m in 1..=self.n_slices {
            p = self.slice_matrix((slice + m) % self.n_slices, spin) * p;
        }
        (DMatrix::identity(n, n) + p).try_inverse().expect("invertible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ClusterGeometry;

    fn config(geom: ClusterGeometry, u: f64, beta: f64) -> QmcConfig {
        let mut cfg = QmcConfig::new(geom, 1.0, u, beta);
        cfg.rng_seed = 42;
        cfg
    }

    #[test]
    fn stabilized_green_matches_direct_inverse() {
        let cfg = config(ClusterGeometry::ring(4).unwrap(), 4.0, 2.0);
        let state = QmcState::new(&cfg).unwrap();
        for spin in 0..2 {
            for slice in [0, 5, 15] {
                let a = state.green_from_scratch(slice, spin);
                let b = state.naive_green(slice, spin);
                assert!((a - b).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn wrapping_matches_recomputation() {
        let cfg = config(ClusterGeometry::ring(6).unwrap(), 4.0, 2.0);
        let mut state = QmcState::new(&cfg).unwrap();
        for _ in 0..5 {
            state.wrap();
            for spin in 0..2 {
                let fresh = state.green_from_scratch(state.slice, spin);
                assert!((&fresh - &state.green[spin]).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn rank_one_update_matches_recomputation() {
        let cfg = config(ClusterGeometry::chain(3).unwrap(), 6.0, 1.0);
        let mut state = QmcState::new(&cfg).unwrap();
        state.wrap();
        let before = state.naive_green(state.slice, 0);
        let ratio = state.proposal_ratio(1);
        // Direct determinant ratio.
        let det = |s: &QmcState, spin: usize| -> f64 {
            let n = s.n_sites;
            let mut p = DMatrix::identity(n, n);
            for m in 0..s.n_slices {
                p = s.slice_matrix(m, spin) * p;
            }
            (DMatrix::identity(n, n) + p).determinant()
        };
        let w0 = det(&state, 0) * det(&state, 1);
        state.flip(1);
        let w1 = det(&state, 0) * det(&state, 1);
        assert!((w1 / w0 - ratio).abs() < 1e-10 * ratio.abs().max(1.0));
        for spin in 0..2 {
            let direct = state.naive_green(state.slice, spin);
            assert!((&direct - &state.green[spin]).amax() < 1e-10);
        }
        assert!((&before - &state.naive_green(state.slice, 0)).amax() > 1e-6);
    }

    #[test]
    fn flip_and_flip_back_restores_green() {
        let cfg = config(ClusterGeometry::chain(2).unwrap(), 4.0, 0.5);
        assert_eq!(cfg.n_slices(), 4);
        let mut state = QmcState::new(&cfg).unwrap();
        state.wrap();
        let g0 = state.green.clone();
        let f0 = state.field.clone();
        state.flip(0);
        state.flip(0);
        assert_eq!(state.field, f0);
        for (g, g_before) in state.green.iter().zip(&g0) {
            assert!((g - g_before).amax() < 1e-9);
        }
    }

    #[test]
    fn zero_u_accepts_everything() {
        let cfg = config(ClusterGeometry::ring(4).unwrap(), 0.0, 1.0);
        let mut state = QmcState::new(&cfg).unwrap();
        assert_eq!(state.lambda(), 0.0);
        for _ in 0..3 {
            state.sweep();
        }
        let d = state.diagnostics();
        assert_eq!(d.accepted, d.proposed);
        assert_eq!(d.acceptance_rate(), 1.0);
    }

    #[test]
    fn single_free_level_is_half_occupied() {
        let cfg = config(ClusterGeometry::chain(1).unwrap(), 0.0, 1.0);
        let state = QmcState::new(&cfg).unwrap();
        for spin in 0..2 {
            assert!((state.green(spin)[(0, 0)] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn stability_diagnostic_is_small() {
        let cfg = config(ClusterGeometry::ring(8).unwrap(), 4.0, 4.0);
        let mut state = QmcState::new(&cfg).unwrap();
        for _ in 0..10 {
            state.sweep();
        }
        assert!(state.diagnostics().max_deviation < 1e-6, "{:e}", state.diagnostics().max_deviation);
        assert_eq!(state.diagnostics().negative_ratios, 0);
    }

    #[test]
    fn chains_shorter_than_interval_stay_accurate() {
        // 4 slices with an interval of 8: only the end-of-sweep refresh runs.
        let cfg = config(ClusterGeometry::chain(2).unwrap(), 4.0, 0.5);
        let mut state = QmcState::new(&cfg).unwrap();
        for _ in 0..200 {
            state.sweep();
        }
        assert!(state.diagnostics().recomputations >= 200);
        for spin in 0..2 {
            let direct = state.naive_green(state.slice, spin);
            assert!((&direct - &state.green[spin]).amax() < 1e-10);
        }
    }
}
