//! Finite-temperature determinant quantum Monte Carlo at half filling.
//!
//! The partition function is Trotter-split into `L = beta / dtau` slices and
//! the on-site repulsion is decoupled with a discrete Ising
//! Hubbard-Stratonovich field coupling to the local magnetization. At
//! `mu = U/2` on a bipartite lattice the up and down determinants have the
//! same sign, so the weight is never negative.
//!
//! `chi_z` is measured from equal-time `<M_z^2>`: `M_z` commutes with the
//! Hamiltonian and with every slice propagator, so no imaginary-time
//! integration is needed.
//!
//! A chain is strictly sequential; independent chains (temperatures,
//! seeds, couplings) are run in parallel by [`run_many`].

pub mod field;
pub mod measure;
pub mod state;

use log::warn;
use serde::{Deserialize, Serialize};

pub use field::{hs_coupling, HsField};
pub use measure::{measure, measure_green, Sample};
pub use state::{Diagnostics, QmcState};

use crate::error::{Error, Result};
use crate::lattice::ClusterGeometry;
use crate::par;
use crate::stats::{bin_means, jackknife, Estimate};
use crate::thermo::SEPARABLE_OFFSET;

pub const DEFAULT_DELTA_TAU: f64 = 0.125;
pub const DEFAULT_WARMUP: usize = 500;
pub const DEFAULT_MEASURE: usize = 2000;
pub const DEFAULT_BIN_SIZE: usize = 50;
pub const DEFAULT_STABILIZATION: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmcConfig {
    pub geometry: ClusterGeometry,
    pub t: f64,
    pub u: f64,
    /// Requested inverse temperature; the simulated value is
    /// [`QmcConfig::effective_beta`].
    pub beta: f64,
    pub delta_tau: f64,
    pub warmup_sweeps: usize,
    pub measure_sweeps: usize,
    pub bin_size: usize,
    pub stabilization_interval: usize,
    pub rng_seed: u64,
}

impl QmcConfig {
    pub fn new(geometry: ClusterGeometry, t: f64, u: f64, beta: f64) -> Self {
        QmcConfig {
            geometry,
            t,
            u,
            beta,
            delta_tau: DEFAULT_DELTA_TAU,
            warmup_sweeps: DEFAULT_WARMUP,
            measure_sweeps: DEFAULT_MEASURE,
            bin_size: DEFAULT_BIN_SIZE,
            stabilization_interval: DEFAULT_STABILIZATION,
            rng_seed: 0,
        }
    }

    /// `round(beta / delta_tau)`.
    pub fn n_slices(&self) -> usize {
        (self.beta / self.delta_tau).round().max(0.0) as usize
    }

    /// `n_slices * delta_tau`, the inverse temperature actually simulated.
    pub fn effective_beta(&self) -> f64 {
        self.n_slices() as f64 * self.delta_tau
    }

    pub fn n_bins(&self) -> usize {
        self.measure_sweeps / self.bin_size.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad(format!("t must be positive, got {}", self.t));
        }
        if !(self.u >= 0.0 && self.u.is_finite()) {
            return bad(format!("U must be >= 0, got {}", self.u));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.delta_tau > 0.0 && self.delta_tau.is_finite()) {
            return bad(format!("delta_tau must be positive, got {}", self.delta_tau));
        }
        if self.n_slices() < 2 {
            return bad(format!(
                "beta / delta_tau = {} gives fewer than 2 slices",
                self.beta / self.delta_tau
            ));
        }
        if self.bin_size == 0 || self.stabilization_interval == 0 {
            return bad("bin_size and stabilization_interval must be positive".into());
        }
        if self.n_bins() < 2 {
            return bad(format!(
                "measure_sweeps = {} with bin_size = {} leaves fewer than 2 bins",
                self.measure_sweeps, self.bin_size
            ));
        }
        Ok(())
    }

    /// Regimes where the simulation is known to be unreliable.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.u > 12.0 && self.beta > 8.0 {
            out.push(format!(
                "U = {} with beta = {} is beyond the stable regime; expect large errors",
                self.u, self.beta
            ));
        }
        if !self.geometry.is_bipartite() {
            out.push(format!(
                "{} is not bipartite; mu = U/2 does not pin half filling",
                self.geometry.tag()
            ));
        }
        if (self.effective_beta() - self.beta).abs() > 1e-12 {
            out.push(format!(
                "beta adjusted from {} to {} (integer number of slices)",
                self.beta,
                self.effective_beta()
            ));
        }
        out
    }
}

/// Monte Carlo estimates with jackknife errors over bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmcEstimate {
    pub geometry: String,
    pub u: f64,
    pub beta: f64,
    pub temperature: f64,
    pub delta_tau: f64,
    pub n_slices: usize,
    pub rng_seed: u64,
    pub chi_z: Estimate,
    pub l0_z: Estimate,
    pub witness_e: Estimate,
    pub filling: Estimate,
    pub energy: Estimate,
    pub double_occupancy: Estimate,
    pub n_bins: usize,
    /// Bin means of the primary quantities, in [`Sample::to_array`] order.
    pub bins: Vec<[f64; Sample::WIDTH]>,
    pub acceptance_rate: f64,
    pub max_deviation: f64,
    pub stability_warnings: u64,
    pub negative_weights: u64,
    pub warnings: Vec<String>,
}

impl QmcEstimate {
    /// Whether the witness sign is resolved at `sigmas` standard errors.
    pub fn witness_sign(&self, sigmas: f64) -> Option<bool> {
        let e = self.witness_e;
        if e.mean + sigmas * e.error < 0.0 {
            Some(true)
        } else if e.mean - sigmas * e.error > 0.0 {
            Some(false)
        } else {
            None
        }
    }
}

/// Chain ready to sweep.
pub fn init_qmc(cfg: &QmcConfig) -> Result<QmcState> {
    QmcState::new(cfg)
}

/// Derived observables from primary means `[m1, m2, moment, filling, energy, docc]`.
fn derived(beta: f64, n: f64) -> impl Fn(&[f64]) -> [f64; 3] {
    move |m: &[f64]| {
        let chi = beta * (m[1] - m[0] * m[0]) / n;
        let l0 = m[2] / 4.0;
        [chi, l0, chi - (l0 - SEPARABLE_OFFSET) * beta]
    }
}

/// Warm up, then measure every slice of every sweep, bin the per-sweep
/// averages and attach jackknife errors.
pub fn run_qmc(cfg: &QmcConfig) -> Result<QmcEstimate> {
    cfg.validate()?;
    let warnings = cfg.warnings();
    for w in &warnings {
        warn!("{w}");
    }
    let mut state = QmcState::new(cfg)?;
    for _ in 0..cfg.warmup_sweeps {
        state.sweep();
    }

    let bonds = cfg.geometry.bonds().to_vec();
    let l = state.n_slices() as f64;
    let mut series: Vec<[f64; Sample::WIDTH]> = Vec::with_capacity(cfg.measure_sweeps);
    for _ in 0..cfg.measure_sweeps {
        let mut acc = Sample::default();
        state.sweep_with(|s| acc.accumulate(&measure(s, &bonds, cfg.t, cfg.u), 1.0 / l));
        series.push(acc.to_array());
    }

    let n_bins = cfg.n_bins();
    let bins: Vec<[f64; Sample::WIDTH]> = (0..n_bins)
        .map(|b| {
            let chunk = &series[b * cfg.bin_size..(b + 1) * cfg.bin_size];
            let mut out = [0.0; Sample::WIDTH];
            for (k, o) in out.iter_mut().enumerate() {
                let column: Vec<f64> = chunk.iter().map(|s| s[k]).collect();
                *o = bin_means(&column, cfg.bin_size)[0];
            }
            out
        })
        .collect();
    let rows: Vec<Vec<f64>> = bins.iter().map(|b| b.to_vec()).collect();

    let beta = cfg.effective_beta();
    let n = cfg.geometry.n_sites() as f64;
    let f = derived(beta, n);
    let diag = *state.diagnostics();
    if diag.negative_ratios > 0 {
        warn!("{} negative weight ratios encountered", diag.negative_ratios);
    }
    Ok(QmcEstimate {
        geometry: cfg.geometry.tag(),
        u: cfg.u,
        beta,
        temperature: 1.0 / beta,
        delta_tau: cfg.delta_tau,
        n_slices: cfg.n_slices(),
        rng_seed: cfg.rng_seed,
        chi_z: jackknife(&rows, |m| f(m)[0]),
        l0_z: jackknife(&rows, |m| f(m)[1]),
        witness_e: jackknife(&rows, |m| f(m)[2]),
        filling: jackknife(&rows, |m| m[3]),
        energy: jackknife(&rows, |m| m[4]),
        double_occupancy: jackknife(&rows, |m| m[5]),
        n_bins,
        bins,
        acceptance_rate: diag.acceptance_rate(),
        max_deviation: diag.max_deviation,
        stability_warnings: diag.stability_warnings,
        negative_weights: diag.negative_ratios,
        warnings,
    })
}

/// Run independent chains in parallel; results follow input order.
pub fn run_many(configs: &[QmcConfig]) -> Vec<Result<QmcEstimate>> {
    par::map(configs, run_qmc)
}

/// Temperatures where the QMC witness changes sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QmcBracket {
    pub t_low: f64,
    pub t_high: f64,
    /// Linear interpolation of the zero of `E(T)` inside the bracket.
    pub tc: Estimate,
    /// Both endpoints resolved at the requested number of standard errors.
    pub significant: bool,
}

/// Topmost adjacent pair of temperatures with `E < 0` below and `E > 0`
/// above. `sigmas` sets the significance demanded of both signs.
pub fn tc_bracket(estimates: &[QmcEstimate], sigmas: f64) -> Option<QmcBracket> {
    let mut sorted: Vec<&QmcEstimate> = estimates.iter().collect();
    sorted.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
    sorted.windows(2).rev().find_map(|w| {
        let (lo, hi) = (w[0], w[1]);
        let (e1, e2) = (lo.witness_e, hi.witness_e);
        if !(e1.mean < 0.0 && e2.mean > 0.0) {
            return None;
        }
        let (t1, t2) = (lo.temperature, hi.temperature);
        let span = e2.mean - e1.mean;
        let tc = t1 + (t2 - t1) * (-e1.mean) / span;
        // d tc / d e1 = -(t2 - t1) e2 / span^2, d tc / d e2 = (t2 - t1) e1 / span^2
        let d1 = (t2 - t1) * e2.mean / (span * span);
        let d2 = (t2 - t1) * e1.mean / (span * span);
        let err = ((d1 * e1.error).powi(2) + (d2 * e2.error).powi(2)).sqrt();
        Some(QmcBracket {
            t_low: t1,
            t_high: t2,
            tc: Estimate::new(tc, err),
            significant: lo.witness_sign(sigmas) == Some(true) && hi.witness_sign(sigmas) == Some(false),
        })
    })
}
