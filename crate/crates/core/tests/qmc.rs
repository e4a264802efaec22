//! DQMC runs against exact references and the driver's bookkeeping.

use std::f64::consts::PI;

use hubbard_witness::dqmc::{run_many, run_qmc, tc_bracket, QmcConfig};
use hubbard_witness::stats::{bin_means, jackknife_mean};
use hubbard_witness::ClusterGeometry;

/// Free square lattice with periodic boundaries at mu = 0.
fn free_square(l: usize, beta: f64) -> (f64, f64) {
    let mut var = 0.0;
    let mut energy = 0.0;
    for kx in 0..l {
        for ky in 0..l {
            let e = -2.0 * ((2.0 * PI * kx as f64 / l as f64).cos() + (2.0 * PI * ky as f64 / l as f64).cos());
            let f = 1.0 / (1.0 + (beta * e).exp());
            var += f * (1.0 - f);
            energy += 2.0 * e * f;
        }
    }
    let n = (l * l) as f64;
    (beta * var / (2.0 * n), energy / n)
}

#[test]
fn free_square_lattice_is_exact() {
    let mut cfg = QmcConfig::new(ClusterGeometry::square(4, 4).unwrap(), 1.0, 0.0, 3.0);
    cfg.warmup_sweeps = 5;
    cfg.measure_sweeps = 40;
    cfg.bin_size = 10;
    let est = run_qmc(&cfg).unwrap();
    let (chi, energy) = free_square(4, 3.0);
    assert!((est.chi_z.mean - chi).abs() < 1e-9, "{} vs {chi}", est.chi_z.mean);
    assert!((est.energy.mean - energy).abs() < 1e-9, "{} vs {energy}", est.energy.mean);
    assert!((est.l0_z.mean - 0.125).abs() < 1e-9);
    assert!((est.filling.mean - 1.0).abs() < 1e-12);
    assert_eq!(est.negative_weights, 0);
}

#[test]
fn seeded_runs_are_reproducible_in_any_order() {
    let configs: Vec<QmcConfig> = [1.0, 2.0, 3.0]
        .iter()
        .enumerate()
        .map(|(k, &beta)| {
            let mut c = QmcConfig::new(ClusterGeometry::ring(6).unwrap(), 1.0, 4.0, beta);
            c.warmup_sweeps = 50;
            c.measure_sweeps = 200;
            c.bin_size = 20;
            c.rng_seed = 11 + k as u64;
            c
        })
        .collect();
    let batch: Vec<_> = run_many(&configs).into_iter().map(Result::unwrap).collect();
    for (c, b) in configs.iter().zip(&batch).rev() {
        assert_eq!(&run_qmc(c).unwrap(), b);
    }
    let mut other = configs[0].clone();
    other.rng_seed = 99;
    assert_ne!(run_qmc(&other).unwrap().witness_e, batch[0].witness_e);
}

#[test]
fn beta_snaps_to_whole_slices() {
    let mut cfg = QmcConfig::new(ClusterGeometry::ring(4).unwrap(), 1.0, 2.0, 1.03);
    cfg.delta_tau = 0.125;
    assert_eq!(cfg.n_slices(), 8);
    assert_eq!(cfg.effective_beta(), 1.0);
    assert!(cfg.warnings().iter().any(|w| w.contains("beta adjusted")));
    cfg.measure_sweeps = 100;
    cfg.warmup_sweeps = 10;
    cfg.bin_size = 10;
    let est = run_qmc(&cfg).unwrap();
    assert_eq!(est.beta, 1.0);
    assert_eq!(est.n_slices, 8);
    assert_eq!(est.n_bins, 10);
    assert_eq!(est.bins.len(), 10);
}

#[test]
fn invalid_configurations_are_rejected() {
    let base = QmcConfig::new(ClusterGeometry::ring(4).unwrap(), 1.0, 4.0, 2.0);
    let mut bad = base.clone();
    bad.beta = -1.0;
    assert!(run_qmc(&bad).is_err());
    let mut bad = base.clone();
    bad.delta_tau = 1.5;
    assert!(bad.validate().is_err(), "one slice");
    let mut bad = base.clone();
    bad.bin_size = bad.measure_sweeps;
    assert!(bad.validate().is_err(), "one bin");
    let mut bad = base;
    bad.u = f64::NAN;
    assert!(bad.validate().is_err());
}

#[test]
fn non_bipartite_lattices_carry_a_warning() {
    let cfg = QmcConfig::new(ClusterGeometry::ring(5).unwrap(), 1.0, 4.0, 2.0);
    assert!(cfg.warnings().iter().any(|w| w.contains("not bipartite")));
}

#[test]
fn jackknife_of_a_mean_is_the_standard_error() {
    let x: Vec<f64> = (0..40).map(|k| ((k * 37) % 11) as f64 - 3.0).collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let est = jackknife_mean(&x);
    assert!((est.mean - mean).abs() < 1e-12);
    assert!((est.error - (var / n).sqrt()).abs() < 1e-12);
    assert_eq!(bin_means(&x, 10).len(), 4);
    assert_eq!(bin_means(&x, 10)[0], x[..10].iter().sum::<f64>() / 10.0);
}

#[test]
fn bracket_from_a_temperature_scan() {
    // Four-site ring at U = 4: hot runs are separable, cold runs entangled.
    let configs: Vec<QmcConfig> = [0.5, 3.0]
        .iter()
        .enumerate()
        .map(|(k, &beta)| {
            let mut c = QmcConfig::new(ClusterGeometry::ring(4).unwrap(), 1.0, 4.0, beta);
            c.measure_sweeps = 4000;
            c.bin_size = 100;
            c.rng_seed = 40 + k as u64;
            c
        })
        .collect();
    let runs: Vec<_> = run_many(&configs).into_iter().map(Result::unwrap).collect();
    assert_eq!(runs[0].witness_sign(3.0), Some(false));
    assert_eq!(runs[1].witness_sign(3.0), Some(true));
    let b = tc_bracket(&runs, 2.0).unwrap();
    assert_eq!((b.t_low, b.t_high), (1.0 / 3.0, 2.0));
    assert!(b.tc.mean > b.t_low && b.tc.mean < b.t_high);
    assert!(b.significant);
}
