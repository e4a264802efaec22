//! Critical temperatures of the witness, their `U` dependence and the
//! finite-size extrapolation of chain results.
//!
//! `T_c` is the highest temperature below which `E < 0`. It is located by
//! scanning a geometric temperature grid (the witness varies fastest at low
//! `T`) and bisecting the topmost negative-to-positive sign change.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ed::{solve_cluster, ClusterSpectra, HubbardParams, SectorSet};
use crate::error::{Error, Result};
use crate::lattice::ClusterGeometry;
use crate::par;
use crate::thermo::{thermal_observables, Ensemble};

/// Temperatures in the coarse scan.
pub const SCAN_POINTS: usize = 64;
/// Guaranteed bracket width of a located crossing.
pub const TC_TOLERANCE: f64 = 1e-6;
/// Width below which the golden-section search over `U` stops.
pub const U_TOLERANCE: f64 = 1e-2;

/// Outcome of a `T_c` search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TcStatus {
    /// A negative-to-positive crossing was found.
    Ok,
    /// `E >= 0` on the whole window: no entanglement detected.
    None,
    /// `E < 0` at the top of the window: `T_c` lies above it.
    Unbracketed,
    /// The point could not be evaluated.
    Failed,
}

impl TcStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TcStatus::Ok => "ok",
            TcStatus::None => "none",
            TcStatus::Unbracketed => "unbracketed",
            TcStatus::Failed => "failed",
        }
    }
}

impl fmt::Display for TcStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of locating the topmost sign change of a witness curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub tc: Option<f64>,
    pub status: TcStatus,
    /// Scan cell that contained the crossing, or the full window.
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcPoint {
    pub u: f64,
    pub tc: Option<f64>,
    pub status: TcStatus,
    pub bracket: (f64, f64),
    pub ensemble: Ensemble,
    pub geometry: String,
    pub message: Option<String>,
}

/// `n` temperatures spaced geometrically over `[t_min, t_max]`, endpoints included.
pub fn geometric_grid(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t_min];
    }
    let ratio = (t_max / t_min).ln() / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|k| t_min * (ratio * k as f64).exp()).collect();
    grid[n - 1] = t_max;
    grid
}

fn check_window(t_min: f64, t_max: f64) -> Result<()> {
    if t_min > 0.0 && t_max > t_min && t_max.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "temperature window must satisfy 0 < t_min < t_max, got [{t_min}, {t_max}]"
        )))
    }
}

/// Find the largest `T` in `[t_min, t_max]` where `witness` changes sign
/// from negative (below) to non-negative (above).
///
/// The crossing is bisected until the bracket is far narrower than
/// [`TC_TOLERANCE`], so the returned `T_c` also has `|E(T_c)|` at the level
/// of floating-point noise times the local slope.
pub fn locate_crossing<F>(witness: F, t_min: f64, t_max: f64) -> Result<Crossing>
where
    F: Fn(f64) -> Result<f64>,
{
    check_window(t_min, t_max)?;
    let grid = geometric_grid(t_min, t_max, SCAN_POINTS);
    let values = grid.iter().map(|&t| witness(t)).collect::<Result<Vec<f64>>>()?;

    if values[SCAN_POINTS - 1] < 0.0 {
        return Ok(Crossing {
            tc: None,
            status: TcStatus::Unbracketed,
            bracket: (t_min, t_max),
        });
    }
    let Some(cell) = (0..SCAN_POINTS - 1)
        .rev()
        .find(|&k| values[k] < 0.0 && values[k + 1] >= 0.0)
    else {
        return Ok(Crossing {
            tc: None,
            status: TcStatus::None,
            bracket: (t_min, t_max),
        });
    };

    let (mut lo, mut hi) = (grid[cell], grid[cell + 1]);
    let (mut e_lo, mut e_hi) = (values[cell], values[cell + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let e_mid = witness(mid)?;
        if e_mid < 0.0 {
            lo = mid;
            e_lo = e_mid;
        } else {
            hi = mid;
            e_hi = e_mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    debug_assert!(hi - lo < TC_TOLERANCE);
    let tc = if e_lo.abs() < e_hi.abs() { lo } else { hi };
    Ok(Crossing {
        tc: Some(tc),
        status: TcStatus::Ok,
        bracket: (grid[cell], grid[cell + 1]),
    })
}

/// Solve the sectors an ensemble needs.
pub fn cluster_for(geom: &ClusterGeometry, params: &HubbardParams, ens: Ensemble) -> Result<ClusterSpectra> {
    let set = match ens {
        Ensemble::CanonicalHalfFilled => SectorSet::HalfFilled,
        Ensemble::GrandCanonical => SectorSet::All,
    };
    solve_cluster(geom, params, set)
}

/// `T_c` from already solved spectra.
pub fn find_tc_in(spectra: &ClusterSpectra, ens: Ensemble, t_min: f64, t_max: f64) -> Result<TcPoint> {
    let crossing = locate_crossing(
        |t| thermal_observables(spectra, ens, t).map(|o| o.witness_e),
        t_min,
        t_max,
    )?;
    Ok(TcPoint {
        u: spectra.params.u,
        tc: crossing.tc,
        status: crossing.status,
        bracket: crossing.bracket,
        ensemble: ens,
        geometry: spectra.geometry.tag(),
        message: None,
    })
}

/// Exact-diagonalization `T_c` of one cluster.
pub fn find_tc(
    geom: &ClusterGeometry,
    params: &HubbardParams,
    ens: Ensemble,
    t_min: f64,
    t_max: f64,
) -> Result<TcPoint> {
    check_window(t_min, t_max)?;
    let spectra = cluster_for(geom, params, ens)?;
    find_tc_in(&spectra, ens, t_min, t_max)
}

/// Location of the maximum of `T_c(U)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcPeak {
    pub u_max: f64,
    pub tc_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcCurve {
    pub geometry: String,
    pub ensemble: Ensemble,
    pub t: f64,
    pub window: (f64, f64),
    pub points: Vec<TcPoint>,
    pub peak: Option<TcPeak>,
}

impl TcCurve {
    /// `(U, T_c)` pairs of the points with a located crossing.
    pub fn located(&self) -> Vec<(f64, f64)> {
        self.points.iter().filter_map(|p| p.tc.map(|tc| (p.u, tc))).collect()
    }
}

fn check_u_grid(u_grid: &[f64]) -> Result<()> {
    if u_grid.is_empty() {
        return Err(Error::InvalidParameter("U grid is empty".into()));
    }
    if u_grid.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
        return Err(Error::InvalidParameter("U grid values must be finite and >= 0".into()));
    }
    if u_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("U grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
///
/// `f` returning `None` counts as minus infinity. Returns the best
/// evaluated point.
pub fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<(f64, f64)>
where
    F: Fn(f64) -> Option<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let value = |x: f64| f(x).unwrap_or(f64::NEG_INFINITY);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (value(a), value(b));
    while hi - lo > tol {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = value(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = value(b);
        }
    }
    let (x, fx) = if fa >= fb { (a, fa) } else { (b, fb) };
    fx.is_finite().then_some((x, fx))
}

/// Refine the grid-wise maximum of `(u, tc)` samples with golden-section
/// search on the neighbouring grid cells.
pub fn refine_peak<F>(samples: &[(f64, Option<f64>)], tc_of: F) -> Option<TcPeak>
where
    F: Fn(f64) -> Option<f64>,
{
    let (k, u_best, tc_best) = samples
        .iter()
        .enumerate()
        .filter_map(|(k, &(u, tc))| tc.map(|tc| (k, u, tc)))
        .max_by(|a, b| a.2.total_cmp(&b.2))?;
    let lo = if k > 0 { samples[k - 1].0 } else { u_best };
    let hi = if k + 1 < samples.len() { samples[k + 1].0 } else { u_best };
    let mut peak = TcPeak {
        u_max: u_best,
        tc_max: tc_best,
    };
    if hi - lo > U_TOLERANCE {
        if let Some((u, tc)) = golden_section_max(&tc_of, lo, hi, U_TOLERANCE) {
            if tc > peak.tc_max {
                peak = TcPeak { u_max: u, tc_max: tc };
            }
        }
    }
    Some(peak)
}

/// `T_c` for every `U` of the grid (in parallel), plus the refined maximum.
///
/// Failures at individual points are recorded with [`TcStatus::Failed`]
/// and do not abort the sweep.
pub fn tc_vs_u_sweep(
    geom: &ClusterGeometry,
    ens: Ensemble,
    u_grid: &[f64],
    window: (f64, f64),
    t: f64,
) -> Result<TcCurve> {
    check_u_grid(u_grid)?;
    check_window(window.0, window.1)?;
    let evaluate = |u: f64| -> TcPoint {
        let result = HubbardParams::half_filled(t, u)
            .and_then(|p| find_tc(geom, &p, ens, window.0, window.1));
        match result {
            Ok(point) => point,
            Err(err) => TcPoint {
                u,
                tc: None,
                status: TcStatus::Failed,
                bracket: window,
                ensemble: ens,
                geometry: geom.tag(),
                message: Some(err.to_string()),
            },
        }
    };
    let points = par::map(u_grid, |&u| evaluate(u));
    let samples: Vec<(f64, Option<f64>)> = points.iter().map(|p| (p.u, p.tc)).collect();
    let peak = refine_peak(&samples, |u| evaluate(u).tc);
    Ok(TcCurve {
        geometry: geom.tag(),
        ensemble: ens,
        t,
        window,
        points,
        peak,
    })
}

/// Fit `T_c(N) = a_0 + a_1/N + ... + a_order/N^order` by least squares
/// (exact when the point count is `order + 1`) and return `a_0`.
pub fn extrapolate_thermodynamic(points: &[(usize, f64)], order: usize) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Extrapolation(format!(
            "need at least 3 cluster sizes, got {}",
            points.len()
        )));
    }
    if points.len() < order + 1 {
        return Err(Error::Extrapolation(format!(
            "order {order} needs at least {} cluster sizes, got {}",
            order + 1,
            points.len()
        )));
    }
    let mut sizes: Vec<usize> = points.iter().map(|p| p.0).collect();
    sizes.sort_unstable();
    if sizes.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Extrapolation("cluster sizes must be distinct".into()));
    }
    if sizes[0] == 0 || points.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Extrapolation("sizes must be positive and values finite".into()));
    }
    let design = DMatrix::from_fn(points.len(), order + 1, |r, c| {
        (1.0 / points[r].0 as f64).powi(c as i32)
    });
    let rhs = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let coeffs = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Extrapolation(e.to_string()))?;
    Ok(coeffs[0])
}

/// `eta = T_c / J` with `J = 4 t^2 / U` (normalization constant fixed to 1).
pub fn eta(u: f64, tc: f64, t: f64) -> f64 {
    tc * u / (4.0 * t * t)
}

/// Finite-size extrapolation of `T_c` over a family of clusters of one kind.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeExtrapolation {
    pub clusters: Vec<ClusterGeometry>,
    pub ensemble: Ensemble,
    pub t: f64,
    pub window: (f64, f64),
    pub order: usize,
}

/// Extrapolated `T_c` at one `U`, with the per-size inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedPoint {
    pub u: f64,
    pub per_size: Vec<(usize, Option<f64>)>,
    pub tc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaLimit {
    /// Intercept of the linear fit of `eta` against `1/U`.
    pub eta_infinity: f64,
    pub slope: f64,
    pub samples: [Option<(f64, f64)>; 3],
}

impl SizeExtrapolation {
    pub fn new(clusters: Vec<ClusterGeometry>, ensemble: Ensemble, t: f64, window: (f64, f64), order: usize) -> Result<Self> {
        check_window(window.0, window.1)?;
        if clusters.len() < 3 {
            return Err(Error::Extrapolation(format!(
                "need at least 3 cluster sizes, got {}",
                clusters.len()
            )));
        }
        Ok(SizeExtrapolation {
            clusters,
            ensemble,
            t,
            window,
            order,
        })
    }

    pub fn at(&self, u: f64) -> Result<ExtrapolatedPoint> {
        let params = HubbardParams::half_filled(self.t, u)?;
        let per_size = self
            .clusters
            .iter()
            .map(|g| {
                find_tc(g, &params, self.ensemble, self.window.0, self.window.1)
                    .map(|p| (g.n_sites(), p.tc))
            })
            .collect::<Result<Vec<_>>>()?;
        let tc = if per_size.iter().all(|p| p.1.is_some()) {
            let pts: Vec<(usize, f64)> = per_size.iter().map(|&(n, tc)| (n, tc.unwrap())).collect();
            Some(extrapolate_thermodynamic(&pts, self.order)?)
        } else {
            None
        };
        Ok(ExtrapolatedPoint { u, per_size, tc })
    }

    /// Extrapolated curve over a `U` grid, in parallel.
    pub fn curve(&self, u_grid: &[f64]) -> Result<Vec<ExtrapolatedPoint>> {
        check_u_grid(u_grid)?;
        par::map(u_grid, |&u| self.at(u)).into_iter().collect()
    }

    /// Maximum of the extrapolated `T_c(U)`: grid scan refined by
    /// golden-section search.
    pub fn peak(&self, u_grid: &[f64]) -> Result<Option<TcPeak>> {
        let curve = self.curve(u_grid)?;
        let samples: Vec<(f64, Option<f64>)> = curve.iter().map(|p| (p.u, p.tc)).collect();
        Ok(refine_peak(&samples, |u| self.at(u).ok().and_then(|p| p.tc)))
    }

    /// Large-`U` limit of `eta`: evaluate at three couplings and fit
    /// linearly in `1/U`.
    pub fn eta_limit(&self, couplings: [f64; 3]) -> Result<EtaLimit> {
        let points = par::map(&couplings, |&u| self.at(u));
        let mut samples = [None; 3];
        for (slot, p) in samples.iter_mut().zip(points) {
            let p = p?;
            *slot = p.tc.map(|tc| (p.u, eta(p.u, tc, self.t)));
        }
        let located: Vec<(f64, f64)> = samples.iter().flatten().copied().collect();
        if located.len() < 2 {
            return Err(Error::Extrapolation(
                "fewer than two couplings have an extrapolated T_c".into(),
            ));
        }
        let (intercept, slope) = linear_fit(
            &located.iter().map(|p| 1.0 / p.0).collect::<Vec<_>>(),
            &located.iter().map(|p| p.1).collect::<Vec<_>>(),
        );
        Ok(EtaLimit {
            eta_infinity: intercept,
            slope,
            samples,
        })
    }
}

/// Ordinary least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}
