//! Subcommand implementations. Each builds a [`Document`] in grid order and
//! writes it once the whole grid is done.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use hubbard_witness::cache::SpectrumCache;
use hubbard_witness::dqmc::{run_many, tc_bracket, QmcEstimate, Sample};
use hubbard_witness::ed::SectorSet;
use hubbard_witness::par;
use hubbard_witness::witness::{
    cluster_for, eta, extrapolate_thermodynamic, linear_fit, tc_vs_u_sweep, SizeExtrapolation, TcStatus,
};
use hubbard_witness::{thermal_observables, ClusterGeometry, Ensemble};
use log::warn;
use toml::{Table, Value};

use crate::config::{Command, Method, RunConfig};
use crate::output::{self, num, opt_num, Document};

/// Literature values the extrapolation report is compared against.
const TARGET_TC_MAX: f64 = 0.712;
const TARGET_U_MAX: f64 = 4.1;
const TARGET_ETA: f64 = 1.568;

/// Outcome of a command: whether every requested point was computed.
pub struct Outcome {
    pub complete: bool,
}

fn meta(cfg: &RunConfig, command: Command, geometry: Option<&ClusterGeometry>) -> Table {
    let mut m = Table::new();
    m.insert("program".into(), Value::String("hubbard-witness".into()));
    m.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    m.insert("command".into(), Value::String(command.name().into()));
    if let Some(g) = geometry {
        m.insert("geometry".into(), Value::String(g.tag()));
        m.insert("n_sites".into(), Value::Integer(g.n_sites() as i64));
    }
    if command != Command::TcVsU && command != Command::Extrapolate {
        m.insert("u".into(), Value::Float(cfg.u));
    }
    m.insert("ensemble".into(), Value::String(cfg.ensemble.name().into()));
    let method = if command == Command::QmcRun { Method::Qmc } else { cfg.method };
    m.insert("method".into(), Value::String(method.name().into()));
    m.insert("seed".into(), Value::Integer(cfg.seed as i64));
    m
}

pub fn witness_scan(cfg: &RunConfig) -> Result<Outcome> {
    let geom = cfg.geometry().map_err(anyhow::Error::msg)?;
    let temps = cfg.temperature.grid();
    match cfg.method {
        Method::Ed => {
            let params = cfg.params().map_err(anyhow::Error::msg)?;
            let spectra = match &cfg.cache_dir {
                Some(dir) => {
                    let set = match cfg.ensemble {
                        Ensemble::CanonicalHalfFilled => SectorSet::HalfFilled,
                        Ensemble::GrandCanonical => SectorSet::All,
                    };
                    SpectrumCache::new(dir)?.get_or_solve(&geom, &params, set)?
                }
                None => cluster_for(&geom, &params, cfg.ensemble)?,
            };
            let rows = par::map(&temps, |&t| thermal_observables(&spectra, cfg.ensemble, t));
            let mut doc = Document::new(
                meta(cfg, Command::WitnessScan, Some(&geom)),
                cfg.to_table(),
                &["T", "chi_z", "l0_z", "witness_e"],
            );
            for o in rows {
                let o = o?;
                doc.rows.push(vec![num(o.temperature), num(o.chi_z), num(o.l0_z), num(o.witness_e)]);
            }
            doc.save(cfg.output.as_deref())?;
        }
        Method::Qmc => {
            let estimates = run_qmc_grid(cfg, &geom, &temps)?;
            let mut doc = Document::new(
                meta(cfg, Command::WitnessScan, Some(&geom)),
                cfg.to_table(),
                &["T", "chi_z", "l0_z", "witness_e", "err_chi_z", "err_l0_z", "err_witness_e"],
            );
            for e in &estimates {
                doc.rows.push(vec![
                    num(e.temperature),
                    num(e.chi_z.mean),
                    num(e.l0_z.mean),
                    num(e.witness_e.mean),
                    num(e.chi_z.error),
                    num(e.l0_z.error),
                    num(e.witness_e.error),
                ]);
            }
            doc.save(cfg.output.as_deref())?;
        }
    }
    Ok(Outcome { complete: true })
}

pub fn tc_vs_u(cfg: &RunConfig) -> Result<Outcome> {
    let geom = cfg.geometry().map_err(anyhow::Error::msg)?;
    let curve = tc_vs_u_sweep(&geom, cfg.ensemble, &cfg.u_grid.grid(), cfg.window(), cfg.t)?;
    let mut doc = Document::new(meta(cfg, Command::TcVsU, Some(&geom)), cfg.to_table(), &["U", "Tc", "status"]);
    let mut complete = true;
    for p in &curve.points {
        if p.status == TcStatus::Failed {
            complete = false;
            warn!("U = {}: {}", p.u, p.message.as_deref().unwrap_or("failed"));
        }
        doc.rows.push(vec![num(p.u), opt_num(p.tc), p.status.as_str().into()]);
    }
    if let Some(peak) = curve.peak {
        doc.result.insert("u_max".into(), Value::Float(peak.u_max));
        doc.result.insert("tc_max".into(), Value::Float(peak.tc_max));
        eprintln!("{}: T_c^max = {} at U^max = {}", geom.tag(), peak.tc_max, peak.u_max);
    }
    doc.save(cfg.output.as_deref())?;
    Ok(Outcome { complete })
}

/// Extrapolated `T_c` per `U`, the per-size inputs and the sizes used.
struct Extrapolated {
    sizes: Vec<usize>,
    rows: Vec<(f64, Vec<Option<f64>>, Option<f64>)>,
    peak: Option<(f64, f64)>,
    /// Whether the peak was refined by golden-section search.
    refined: bool,
    eta: Option<(f64, Vec<(f64, f64)>)>,
}

fn extrapolate_solved(cfg: &RunConfig) -> Result<Extrapolated> {
    let clusters = cfg
        .extrapolation_sizes
        .iter()
        .map(|&n| ClusterGeometry::new(cfg.extrapolation_kind, &[n]))
        .collect::<hubbard_witness::Result<Vec<_>>>()?;
    let ex = SizeExtrapolation::new(clusters, cfg.ensemble, cfg.t, cfg.window(), cfg.extrapolation_order)?;
    let grid = cfg.u_grid.grid();
    let curve = ex.curve(&grid)?;
    let peak = ex.peak(&grid)?.map(|p| (p.u_max, p.tc_max));
    let couplings = [cfg.eta_couplings[0], cfg.eta_couplings[1], cfg.eta_couplings[2]];
    let eta = ex
        .eta_limit(couplings)
        .ok()
        .map(|l| (l.eta_infinity, l.samples.iter().flatten().copied().collect()));
    Ok(Extrapolated {
        sizes: cfg.extrapolation_sizes.clone(),
        rows: curve
            .into_iter()
            .map(|p| (p.u, p.per_size.iter().map(|s| s.1).collect(), p.tc))
            .collect(),
        peak,
        refined: true,
        eta,
    })
}

/// Extrapolate tabulated `tc-vs-u` files that share one `U` grid.
fn extrapolate_inputs(cfg: &RunConfig) -> Result<Extrapolated> {
    let mut tables = Vec::new();
    for path in &cfg.extrapolation_inputs {
        let parsed = output::read(path)?;
        let n = parsed
            .meta("n_sites")
            .and_then(Value::as_integer)
            .with_context(|| format!("{}: preamble lacks meta.n_sites", path.display()))?;
        let u: Vec<f64> = parsed.floats("U")?.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect();
        let tc = parsed.floats("Tc")?;
        tables.push((n as usize, u, tc));
    }
    tables.sort_by_key(|t| t.0);
    if tables.windows(2).any(|w| w[0].0 == w[1].0) {
        bail!("input files must come from distinct cluster sizes");
    }
    let u_grid = tables[0].1.clone();
    for (n, u, _) in &tables {
        if u.len() != u_grid.len() || u.iter().zip(&u_grid).any(|(a, b)| a.to_bits() != b.to_bits()) {
            bail!("the {n}-site input uses a different U grid");
        }
    }
    let mut rows = Vec::new();
    for (k, &u) in u_grid.iter().enumerate() {
        let per: Vec<Option<f64>> = tables.iter().map(|t| t.2[k]).collect();
        let tc = if per.iter().all(Option::is_some) {
            let pts: Vec<(usize, f64)> = tables.iter().zip(&per).map(|(t, p)| (t.0, p.unwrap())).collect();
            Some(extrapolate_thermodynamic(&pts, cfg.extrapolation_order)?)
        } else {
            None
        };
        rows.push((u, per, tc));
    }
    let peak = rows
        .iter()
        .filter_map(|r| r.2.map(|tc| (r.0, tc)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let samples: Vec<(f64, f64)> = cfg
        .eta_couplings
        .iter()
        .filter_map(|&u| rows.iter().find(|r| r.0 == u).and_then(|r| r.2).map(|tc| (u, eta(u, tc, cfg.t))))
        .collect();
    let eta = (samples.len() >= 2).then(|| {
        let x: Vec<f64> = samples.iter().map(|s| 1.0 / s.0).collect();
        let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
        (linear_fit(&x, &y).0, samples.clone())
    });
    Ok(Extrapolated {
        sizes: tables.iter().map(|t| t.0).collect(),
        rows,
        peak,
        refined: false,
        eta,
    })
}

pub fn extrapolate(cfg: &RunConfig) -> Result<Outcome> {
    let ex = if cfg.extrapolation_inputs.is_empty() {
        extrapolate_solved(cfg)?
    } else {
        extrapolate_inputs(cfg)?
    };

    let mut header: Vec<String> = vec!["U".into(), "Tc".into(), "eta".into()];
    header.extend(ex.sizes.iter().map(|n| format!("Tc_N{n}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut doc = Document::new(meta(cfg, Command::Extrapolate, None), cfg.to_table(), &header_refs);
    for (u, per, tc) in &ex.rows {
        let mut row = vec![num(*u), opt_num(*tc), opt_num(tc.filter(|_| *u > 0.0).map(|tc| eta(*u, tc, cfg.t)))];
        row.extend(per.iter().map(|x| opt_num(*x)));
        doc.rows.push(row);
    }

    let mut report = String::new();
    let sizes: Vec<String> = ex.sizes.iter().map(|n| n.to_string()).collect();
    writeln!(
        report,
        "Finite-size extrapolation over {} sizes {} ({}), polynomial order {} in 1/N",
        cfg.extrapolation_kind,
        sizes.join(", "),
        cfg.ensemble,
        cfg.extrapolation_order
    )?;
    match ex.peak {
        Some((u_max, tc_max)) => {
            let how = if ex.refined { "golden-section refined" } else { "grid maximum" };
            writeln!(report, "  T_c^max = {tc_max} (target {TARGET_TC_MAX}, deviation {:+.4})", tc_max - TARGET_TC_MAX)?;
            writeln!(report, "  U^max   = {u_max} (target {TARGET_U_MAX}, deviation {:+.4}; {how})", u_max - TARGET_U_MAX)?;
            doc.result.insert("u_max".into(), Value::Float(u_max));
            doc.result.insert("tc_max".into(), Value::Float(tc_max));
        }
        None => writeln!(report, "  no extrapolated maximum on the U grid")?,
    }
    match &ex.eta {
        Some((eta_inf, samples)) => {
            for (u, e) in samples {
                writeln!(report, "  eta(inf, U = {u}) = {e}")?;
            }
            writeln!(
                report,
                "  eta(inf, inf) = {eta_inf} (target {TARGET_ETA}, deviation {:+.4}; Heisenberg 1.6)",
                eta_inf - TARGET_ETA
            )?;
            doc.result.insert("eta_infinity".into(), Value::Float(*eta_inf));
        }
        None => writeln!(report, "  eta limit unavailable: fewer than two eta couplings have an extrapolated T_c")?,
    }
    print!("{report}");
    if let Some(path) = &cfg.report {
        std::fs::write(path, &report).with_context(|| format!("writing {}", path.display()))?;
    }
    match &cfg.output {
        Some(p) => doc.save(Some(p))?,
        None => eprintln!("(no output.path set; CSV not written)"),
    }
    Ok(Outcome {
        complete: ex.rows.iter().all(|r| r.2.is_some()),
    })
}

fn run_qmc_grid(cfg: &RunConfig, geom: &ClusterGeometry, temps: &[f64]) -> Result<Vec<QmcEstimate>> {
    let configs: Vec<_> = temps
        .iter()
        .enumerate()
        .map(|(k, &t)| cfg.qmc_config(geom, 1.0 / t, k))
        .collect();
    let mut out = Vec::with_capacity(configs.len());
    for est in run_many(&configs) {
        let est = est?;
        for w in &est.warnings {
            warn!("T = {}: {w}", est.temperature);
        }
        if est.stability_warnings > 0 {
            warn!(
                "T = {}: {} stability warnings (max deviation {:e})",
                est.temperature, est.stability_warnings, est.max_deviation
            );
        }
        out.push(est);
    }
    Ok(out)
}

const QMC_COLUMNS: [&str; 19] = [
    "T",
    "beta",
    "n_slices",
    "chi_z",
    "err_chi_z",
    "l0_z",
    "err_l0_z",
    "witness_e",
    "err_witness_e",
    "filling",
    "err_filling",
    "energy",
    "err_energy",
    "double_occupancy",
    "err_double_occupancy",
    "acceptance_rate",
    "max_deviation",
    "stability_warnings",
    "negative_weights",
];

pub fn qmc_run(cfg: &RunConfig) -> Result<Outcome> {
    let geom = cfg.geometry().map_err(anyhow::Error::msg)?;
    let estimates = run_qmc_grid(cfg, &geom, &cfg.temperature.grid())?;
    let mut doc = Document::new(meta(cfg, Command::QmcRun, Some(&geom)), cfg.to_table(), &QMC_COLUMNS);
    for e in &estimates {
        let mut row = vec![num(e.temperature), num(e.beta), e.n_slices.to_string()];
        for x in [e.chi_z, e.l0_z, e.witness_e, e.filling, e.energy, e.double_occupancy] {
            row.push(num(x.mean));
            row.push(num(x.error));
        }
        row.push(num(e.acceptance_rate));
        row.push(num(e.max_deviation));
        row.push(e.stability_warnings.to_string());
        row.push(e.negative_weights.to_string());
        doc.rows.push(row);
    }
    if let Some(b) = tc_bracket(&estimates, cfg.significance) {
        doc.result.insert("tc_bracket_low".into(), Value::Float(b.t_low));
        doc.result.insert("tc_bracket_high".into(), Value::Float(b.t_high));
        doc.result.insert("tc".into(), Value::Float(b.tc.mean));
        doc.result.insert("tc_error".into(), Value::Float(b.tc.error));
        doc.result.insert("tc_significant".into(), Value::Boolean(b.significant));
        eprintln!(
            "{}: E changes sign in [{}, {}], T_c = {} +/- {} ({} at {} sigma)",
            geom.tag(),
            b.t_low,
            b.t_high,
            b.tc.mean,
            b.tc.error,
            if b.significant { "resolved" } else { "not resolved" },
            cfg.significance
        );
    }
    doc.save(cfg.output.as_deref())?;

    if let Some(path) = &cfg.bin_log {
        let mut header = vec!["T", "bin"];
        header.extend(BIN_COLUMNS);
        let rows: Vec<Vec<String>> = estimates
            .iter()
            .flat_map(|e| {
                e.bins.iter().enumerate().map(move |(k, b)| {
                    let mut row = vec![num(e.temperature), k.to_string()];
                    row.extend(b.iter().map(|&x| num(x)));
                    row
                })
            })
            .collect();
        output::append_log(path, &doc.preamble(), &header, &rows)?;
    }
    Ok(Outcome { complete: true })
}

/// Bin-log columns after `T, bin`, in [`Sample::to_array`] order.
pub const BIN_COLUMNS: [&str; Sample::WIDTH] = ["m1", "m2", "local_moment", "filling", "energy", "double_occupancy"];
