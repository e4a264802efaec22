//! Run configuration: TOML sections, command-line overrides and validation.
//!
//! Every key has a default, so an empty file is a valid configuration.
//! Reading never stops at the first problem: type errors, unknown keys and
//! semantic violations are all collected and reported together.

use std::collections::BTreeSet;
use std::path::PathBuf;

use hubbard_witness::dqmc::{QmcConfig, DEFAULT_BIN_SIZE, DEFAULT_DELTA_TAU, DEFAULT_MEASURE, DEFAULT_STABILIZATION, DEFAULT_WARMUP};
use hubbard_witness::ed::MAX_DENSE_DIMENSION;
use hubbard_witness::hilbert::binomial;
use hubbard_witness::witness::geometric_grid;
use hubbard_witness::{ClusterGeometry, Ensemble, HubbardParams, LatticeKind};
use serde::de::DeserializeOwned;
use toml::{Table, Value};

/// Sections that carry output metadata rather than configuration. They are
/// skipped on load, so a CSV preamble can be fed back in as a config file.
const IGNORED_SECTIONS: [&str; 2] = ["meta", "result"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ed,
    Qmc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ed => "ed",
            Method::Qmc => "qmc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Geometric,
}

impl Spacing {
    fn name(self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Geometric => "geometric",
        }
    }
}

/// A grid given either by explicit `values` or by `min`, `max`, `points`
/// and `spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub values: Option<Vec<f64>>,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn grid(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        match (self.points, self.spacing) {
            (0, _) => Vec::new(),
            (1, _) => vec![self.min],
            (n, Spacing::Geometric) => geometric_grid(self.min, self.max, n),
            (n, Spacing::Linear) => (0..n)
                .map(|k| self.min + (self.max - self.min) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    fn check(&self, name: &str, strictly_positive: bool, errors: &mut Vec<String>) {
        let grid = self.grid();
        if grid.is_empty() {
            errors.push(format!("{name}: grid is empty"));
            return;
        }
        if self.values.is_none() && self.points > 1 && self.min.partial_cmp(&self.max) != Some(std::cmp::Ordering::Less) {
            errors.push(format!("{name}: min ({}) must be below max ({})", self.min, self.max));
        }
        if self.values.is_none() && self.spacing == Spacing::Geometric && self.min <= 0.0 {
            errors.push(format!("{name}: geometric spacing needs min > 0"));
        }
        if grid.iter().any(|x| !x.is_finite() || *x < 0.0 || (strictly_positive && *x == 0.0)) {
            let bound = if strictly_positive { "> 0" } else { ">= 0" };
            errors.push(format!("{name}: values must be finite and {bound}"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            errors.push(format!("{name}: values must be strictly increasing"));
        }
    }

    fn to_table(&self) -> Table {
        let mut t = Table::new();
        if let Some(v) = &self.values {
            t.insert("values".into(), floats(v));
        }
        t.insert("min".into(), Value::Float(self.min));
        t.insert("max".into(), Value::Float(self.max));
        t.insert("points".into(), Value::Integer(self.points as i64));
        t.insert("spacing".into(), Value::String(self.spacing.name().into()));
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: LatticeKind,
    pub dims: Vec<usize>,
    pub t: f64,
    pub u: f64,
    /// Chemical potential; `None` means `U/2`.
    pub mu: Option<f64>,
    pub ensemble: Ensemble,
    pub method: Method,
    pub threads: Option<usize>,
    pub temperature: GridSpec,
    pub u_grid: GridSpec,
    pub tc_min: f64,
    pub tc_max: f64,
    pub extrapolation_kind: LatticeKind,
    pub extrapolation_sizes: Vec<usize>,
    pub extrapolation_order: usize,
    pub eta_couplings: Vec<f64>,
    /// Tabulated `tc-vs-u` outputs to extrapolate instead of solving.
    pub extrapolation_inputs: Vec<PathBuf>,
    pub delta_tau: f64,
    pub warmup_sweeps: usize,
    pub measure_sweeps: usize,
    pub bin_size: usize,
    pub stabilization_interval: usize,
    pub seed: u64,
    /// Standard errors demanded on both sides of a QMC `T_c` bracket.
    pub significance: f64,
    pub output: Option<PathBuf>,
    pub bin_log: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kind: LatticeKind::Chain,
            dims: vec![4],
            t: 1.0,
            u: 4.0,
            mu: None,
            ensemble: Ensemble::GrandCanonical,
            method: Method::Ed,
            threads: None,
            temperature: GridSpec {
                values: None,
                min: 0.05,
                max: 10.0,
                points: 100,
                spacing: Spacing::Geometric,
            },
            u_grid: GridSpec {
                values: None,
                min: 0.5,
                max: 64.0,
                points: 29,
                spacing: Spacing::Geometric,
            },
            tc_min: 0.005,
            tc_max: 20.0,
            extrapolation_kind: LatticeKind::Chain,
            extrapolation_sizes: vec![2, 4, 6],
            extrapolation_order: 2,
            eta_couplings: vec![16.0, 32.0, 64.0],
            extrapolation_inputs: Vec::new(),
            delta_tau: DEFAULT_DELTA_TAU,
            warmup_sweeps: DEFAULT_WARMUP,
            measure_sweeps: DEFAULT_MEASURE,
            bin_size: DEFAULT_BIN_SIZE,
            stabilization_interval: DEFAULT_STABILIZATION,
            seed: 1,
            significance: 2.0,
            output: None,
            bin_log: None,
            report: None,
            cache_dir: None,
        }
    }
}

/// Which command a configuration is validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    WitnessScan,
    TcVsU,
    Extrapolate,
    QmcRun,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::WitnessScan => "witness-scan",
            Command::TcVsU => "tc-vs-u",
            Command::Extrapolate => "extrapolate",
            Command::QmcRun => "qmc-run",
        }
    }
}

/// All problems found in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Parse `section.key=value` and store it in `table`. Values are read as
/// TOML (`4`, `[1, 2]`, `"x"`); anything that does not parse is taken as a
/// bare string.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), String> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("override `{spec}` is not of the form section.key=value"))?;
    let (section, field) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| format!("override key `{}` must be section.key", key.trim()))?;
    let value = toml::from_str::<Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(field.to_string(), value);
            Ok(())
        }
        _ => Err(format!("`{section}` is not a section")),
    }
}

/// Typed access to a parsed table that records every failure.
struct Fields<'a> {
    table: &'a Table,
    errors: Vec<String>,
    seen: BTreeSet<String>,
}

impl<'a> Fields<'a> {
    fn raw(&mut self, section: &str, key: &str) -> Option<&'a Value> {
        self.seen.insert(format!("{section}.{key}"));
        self.table.get(section)?.as_table()?.get(key)
    }

    fn get<T: DeserializeOwned>(&mut self, section: &str, key: &str, default: T) -> T {
        match self.raw(section, key) {
            None => default,
            Some(v) => match v.clone().try_into::<T>() {
                Ok(x) => x,
                Err(e) => {
                    self.errors.push(format!("{section}.{key}: {}", e.to_string().trim()));
                    default
                }
            },
        }
    }

    fn optional<T: DeserializeOwned>(&mut self, section: &str, key: &str) -> Option<T> {
        match self.raw(section, key) {
            None => None,
            Some(v) => match v.clone().try_into::<T>() {
                Ok(x) => Some(x),
                Err(e) => {
                    self.errors.push(format!("{section}.{key}: {}", e.to_string().trim()));
                    None
                }
            },
        }
    }

    fn parsed<T>(&mut self, section: &str, key: &str, default: T, parse: impl Fn(&str) -> Result<T, String>) -> T {
        let Some(s) = self.optional::<String>(section, key) else {
            return default;
        };
        parse(&s).unwrap_or_else(|e| {
            self.errors.push(format!("{section}.{key}: {e}"));
            default
        })
    }

    fn grid(&mut self, section: &str, default: &GridSpec) -> GridSpec {
        GridSpec {
            values: self.optional(section, "values").or_else(|| default.values.clone()),
            min: self.get(section, "min", default.min),
            max: self.get(section, "max", default.max),
            points: self.get(section, "points", default.points),
            spacing: self.parsed(section, "spacing", default.spacing, |s| match s {
                "linear" => Ok(Spacing::Linear),
                "geometric" => Ok(Spacing::Geometric),
                other => Err(format!("unknown spacing `{other}` (expected linear or geometric)")),
            }),
        }
    }

    fn unknown_keys(&mut self) {
        for (section, body) in self.table {
            if IGNORED_SECTIONS.contains(&section.as_str()) {
                continue;
            }
            match body.as_table() {
                Some(t) => {
                    for key in t.keys() {
                        let full = format!("{section}.{key}");
                        if !self.seen.contains(&full) {
                            self.errors.push(format!("unknown key `{full}`"));
                        }
                    }
                }
                None => self.errors.push(format!("unknown top-level key `{section}`")),
            }
        }
    }
}

impl RunConfig {
    /// Read a configuration from a parsed table. Collects all type errors
    /// and unknown keys; semantic checks are in [`RunConfig::validate`].
    #[cfg(test)]
    pub fn from_table(table: &Table) -> Result<Self, ConfigErrors> {
        let (cfg, errors) = Self::read_lenient(table);
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigErrors(errors))
        }
    }

    /// Read and validate for `command`, reporting type errors, unknown keys
    /// and semantic problems together. Fields that fail to parse take their
    /// defaults for the semantic pass.
    pub fn load(table: &Table, command: Command) -> Result<Self, ConfigErrors> {
        let (cfg, mut errors) = Self::read_lenient(table);
        if let Err(ConfigErrors(more)) = cfg.validate(command) {
            errors.extend(more);
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigErrors(errors))
        }
    }

    fn read_lenient(table: &Table) -> (Self, Vec<String>) {
        let d = RunConfig::default();
        let mut f = Fields {
            table,
            errors: Vec::new(),
            seen: BTreeSet::new(),
        };
        let cfg = RunConfig {
            kind: f.parsed("geometry", "kind", d.kind, |s| s.parse().map_err(|e| format!("{e}"))),
            dims: f.get("geometry", "dims", d.dims.clone()),
            t: f.get("model", "t", d.t),
            u: f.get("model", "u", d.u),
            mu: f.optional("model", "mu"),
            ensemble: f.parsed("model", "ensemble", d.ensemble, |s| s.parse().map_err(|e| format!("{e}"))),
            method: f.parsed("run", "method", d.method, |s| match s {
                "ed" => Ok(Method::Ed),
                "qmc" => Ok(Method::Qmc),
                other => Err(format!("unknown method `{other}` (expected ed or qmc)")),
            }),
            threads: f.optional("run", "threads"),
            temperature: f.grid("temperature", &d.temperature),
            u_grid: f.grid("u_grid", &d.u_grid),
            tc_min: f.get("tc", "t_min", d.tc_min),
            tc_max: f.get("tc", "t_max", d.tc_max),
            extrapolation_kind: f.parsed("extrapolation", "kind", d.extrapolation_kind, |s| {
                s.parse().map_err(|e| format!("{e}"))
            }),
            extrapolation_sizes: f.get("extrapolation", "sizes", d.extrapolation_sizes.clone()),
            extrapolation_order: f.get("extrapolation", "order", d.extrapolation_order),
            eta_couplings: f.get("extrapolation", "eta_couplings", d.eta_couplings.clone()),
            extrapolation_inputs: f.get("extrapolation", "inputs", Vec::new()),
            delta_tau: f.get("qmc", "delta_tau", d.delta_tau),
            warmup_sweeps: f.get("qmc", "warmup_sweeps", d.warmup_sweeps),
            measure_sweeps: f.get("qmc", "measure_sweeps", d.measure_sweeps),
            bin_size: f.get("qmc", "bin_size", d.bin_size),
            stabilization_interval: f.get("qmc", "stabilization_interval", d.stabilization_interval),
            seed: f.get("qmc", "seed", d.seed),
            significance: f.get("qmc", "significance", d.significance),
            output: f.optional("output", "path"),
            bin_log: f.optional("output", "bin_log"),
            report: f.optional("output", "report"),
            cache_dir: f.optional("output", "cache_dir"),
        };
        f.unknown_keys();
        (cfg, f.errors)
    }

    pub fn geometry(&self) -> Result<ClusterGeometry, String> {
        ClusterGeometry::new(self.kind, &self.dims).map_err(|e| e.to_string())
    }

    pub fn params(&self) -> Result<HubbardParams, String> {
        let mu = self.mu.unwrap_or(self.u / 2.0);
        HubbardParams::with_mu(self.t, self.u, mu).map_err(|e| e.to_string())
    }

    pub fn window(&self) -> (f64, f64) {
        (self.tc_min, self.tc_max)
    }

    /// QMC configuration at one inverse temperature.
    pub fn qmc_config(&self, geometry: &ClusterGeometry, beta: f64, index: usize) -> QmcConfig {
        let mut cfg = QmcConfig::new(geometry.clone(), self.t, self.u, beta);
        cfg.delta_tau = self.delta_tau;
        cfg.warmup_sweeps = self.warmup_sweeps;
        cfg.measure_sweeps = self.measure_sweeps;
        cfg.bin_size = self.bin_size;
        cfg.stabilization_interval = self.stabilization_interval;
        cfg.rng_seed = self.seed.wrapping_add(index as u64);
        cfg
    }

    /// Semantic checks for `command`, all at once.
    pub fn validate(&self, command: Command) -> Result<(), ConfigErrors> {
        let mut errors = Vec::new();
        if !(self.t > 0.0 && self.t.is_finite()) {
            errors.push(format!("model.t must be positive, got {}", self.t));
        }
        if let Some(0) = self.threads {
            errors.push("run.threads must be at least 1 (omit it for the default)".into());
        }
        if self.seed > i64::MAX as u64 {
            errors.push(format!("qmc.seed must be at most {}, got {}", i64::MAX, self.seed));
        }
        if !(self.significance > 0.0 && self.significance.is_finite()) {
            errors.push(format!("qmc.significance must be positive, got {}", self.significance));
        }

        let uses_geometry = matches!(command, Command::WitnessScan | Command::TcVsU | Command::QmcRun);
        let method = if command == Command::QmcRun { Method::Qmc } else { self.method };
        let geometry = if uses_geometry {
            match self.geometry() {
                Ok(g) => Some(g),
                Err(e) => {
                    errors.push(format!("geometry: {e}"));
                    None
                }
            }
        } else {
            None
        };
        if uses_geometry && command != Command::TcVsU {
            if !(self.u >= 0.0 && self.u.is_finite()) {
                errors.push(format!("model.u must be finite and >= 0, got {}", self.u));
            } else if let (true, Err(e)) = (self.t > 0.0, self.params()) {
                errors.push(format!("model: {e}"));
            }
            self.temperature.check("temperature", true, &mut errors);
        }
        if command == Command::TcVsU || (command == Command::Extrapolate && self.extrapolation_inputs.is_empty()) {
            self.u_grid.check("u_grid", false, &mut errors);
            if !(self.tc_min > 0.0 && self.tc_min < self.tc_max && self.tc_max.is_finite()) {
                errors.push(format!(
                    "tc: need 0 < t_min < t_max, got t_min = {}, t_max = {}",
                    self.tc_min, self.tc_max
                ));
            }
            if command == Command::TcVsU && self.method == Method::Qmc {
                errors.push("tc-vs-u runs on exact diagonalization only; use qmc-run for QMC brackets".into());
            }
        }

        if let Some(g) = &geometry {
            match method {
                Method::Ed if command != Command::QmcRun => ed_size(g, &mut errors),
                Method::Qmc => {
                    if self.ensemble != Ensemble::GrandCanonical {
                        errors.push("QMC samples the grand-canonical ensemble; set model.ensemble = \"grand_canonical\"".into());
                    }
                    if self.mu.is_some_and(|mu| (mu - self.u / 2.0).abs() > 1e-12) {
                        errors.push("QMC runs at half filling: model.mu must be U/2 or unset".into());
                    }
                    // The highest temperature has the fewest slices.
                    if let Some(&hottest) = self.temperature.grid().last() {
                        if hottest > 0.0 {
                            if let Err(e) = self.qmc_config(g, 1.0 / hottest, 0).validate() {
                                errors.push(format!("qmc at T = {hottest}: {e}"));
                            }
                        }
                    }
                }
                Method::Ed => {}
            }
        }

        if command == Command::Extrapolate {
            self.validate_extrapolation(&mut errors);
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(errors))
        }
    }

    fn validate_extrapolation(&self, errors: &mut Vec<String>) {
        if self.eta_couplings.len() != 3 {
            errors.push(format!(
                "extrapolation.eta_couplings needs exactly 3 values, got {}",
                self.eta_couplings.len()
            ));
        }
        if self.eta_couplings.iter().any(|u| !(*u > 0.0 && u.is_finite())) {
            errors.push("extrapolation.eta_couplings must be positive".into());
        }
        let count = if self.extrapolation_inputs.is_empty() {
            let mut sizes = self.extrapolation_sizes.clone();
            sizes.sort_unstable();
            sizes.dedup();
            if sizes.len() != self.extrapolation_sizes.len() {
                errors.push("extrapolation.sizes must be distinct".into());
            }
            for &n in &sizes {
                match ClusterGeometry::new(self.extrapolation_kind, &[n]) {
                    Ok(g) => ed_size(&g, errors),
                    Err(e) => errors.push(format!("extrapolation.sizes: {e}")),
                }
            }
            if self.extrapolation_kind.rank() != 1 {
                errors.push("extrapolation.kind must be chain or ring".into());
            }
            sizes.len()
        } else {
            self.extrapolation_inputs.len()
        };
        if count < 3 {
            errors.push(format!("extrapolation needs at least 3 cluster sizes, got {count}"));
        }
        if self.extrapolation_order + 1 > count.max(3) {
            errors.push(format!(
                "extrapolation.order = {} needs at least {} sizes",
                self.extrapolation_order,
                self.extrapolation_order + 1
            ));
        }
    }

    /// Fully resolved configuration in the same layout as the input file.
    pub fn to_table(&self) -> Table {
        let s = |x: &str| Some(Value::String(x.into()));
        let fl = |x: f64| Some(Value::Float(x));
        let int = |x: usize| Some(Value::Integer(x as i64));
        let ints = |v: &[usize]| Some(Value::Array(v.iter().map(|&x| Value::Integer(x as i64)).collect()));
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| Value::String(p.display().to_string()));

        let mut root = Table::new();
        section(&mut root, "geometry", [("kind", s(self.kind.name())), ("dims", ints(&self.dims))]);
        section(
            &mut root,
            "model",
            [
                ("t", fl(self.t)),
                ("u", fl(self.u)),
                ("mu", fl(self.mu.unwrap_or(self.u / 2.0))),
                ("ensemble", s(self.ensemble.name())),
            ],
        );
        section(
            &mut root,
            "run",
            [("method", s(self.method.name())), ("threads", self.threads.and_then(int))],
        );
        root.insert("temperature".into(), Value::Table(self.temperature.to_table()));
        root.insert("u_grid".into(), Value::Table(self.u_grid.to_table()));
        section(&mut root, "tc", [("t_min", fl(self.tc_min)), ("t_max", fl(self.tc_max))]);
        let inputs = self
            .extrapolation_inputs
            .iter()
            .map(|p| Value::String(p.display().to_string()))
            .collect();
        section(
            &mut root,
            "extrapolation",
            [
                ("kind", s(self.extrapolation_kind.name())),
                ("sizes", ints(&self.extrapolation_sizes)),
                ("order", int(self.extrapolation_order)),
                ("eta_couplings", Some(floats(&self.eta_couplings))),
                ("inputs", Some(Value::Array(inputs))),
            ],
        );
        section(
            &mut root,
            "qmc",
            [
                ("delta_tau", fl(self.delta_tau)),
                ("warmup_sweeps", int(self.warmup_sweeps)),
                ("measure_sweeps", int(self.measure_sweeps)),
                ("bin_size", int(self.bin_size)),
                ("stabilization_interval", int(self.stabilization_interval)),
                // TOML integers are signed; validation caps the seed at i64::MAX.
                ("seed", Some(Value::Integer(self.seed as i64))),
                ("significance", fl(self.significance)),
            ],
        );
        section(
            &mut root,
            "output",
            [
                ("path", path(&self.output)),
                ("bin_log", path(&self.bin_log)),
                ("report", path(&self.report)),
                ("cache_dir", path(&self.cache_dir)),
            ],
        );
        root
    }
}

fn section<const N: usize>(root: &mut Table, name: &str, entries: [(&str, Option<Value>); N]) {
    let t: Table = entries
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect();
    root.insert(name.into(), Value::Table(t));
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

/// Reject clusters whose largest exact-diagonalization block is too big.
fn ed_size(g: &ClusterGeometry, errors: &mut Vec<String>) {
    let n = g.n_sites();
    let largest = binomial(n, n / 2).saturating_mul(binomial(n, n - n / 2));
    if largest > MAX_DENSE_DIMENSION {
        errors.push(format!(
            "{} is too large for exact diagonalization (largest sector dimension {largest} > {MAX_DENSE_DIMENSION}); use method = \"qmc\"",
            g.tag()
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Table {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_table(&Table::new()).unwrap(), RunConfig::default());
    }

    #[test]
    fn integers_are_accepted_for_floats() {
        let cfg = RunConfig::from_table(&table("[model]\nu = 8\n")).unwrap();
        assert_eq!(cfg.u, 8.0);
    }

    #[test]
    fn all_type_errors_and_unknown_keys_are_reported() {
        let err = RunConfig::from_table(&table(
            "[model]\nu = \"big\"\nt = [1]\nfoo = 1\n[geometry]\nkind = \"hexagon\"\n",
        ))
        .unwrap_err();
        assert_eq!(err.0.len(), 4, "{err}");
        assert!(err.0.iter().any(|e| e.contains("model.foo")));
        assert!(err.0.iter().any(|e| e.contains("hexagon")));
    }

    #[test]
    fn overrides_parse_toml_values() {
        let mut t = Table::new();
        apply_override(&mut t, "model.u=6.5").unwrap();
        apply_override(&mut t, "geometry.dims=[3, 3]").unwrap();
        apply_override(&mut t, "geometry.kind=square").unwrap();
        let cfg = RunConfig::from_table(&t).unwrap();
        assert_eq!(cfg.u, 6.5);
        assert_eq!(cfg.dims, vec![3, 3]);
        assert_eq!(cfg.kind, LatticeKind::Square);
        assert!(apply_override(&mut t, "nodot=1").is_err());
        assert!(apply_override(&mut t, "model.u").is_err());
    }

    #[test]
    fn semantic_errors_are_collected() {
        let mut cfg = RunConfig {
            t: -1.0,
            dims: vec![0],
            ..Default::default()
        };
        cfg.temperature.values = Some(vec![]);
        let err = cfg.validate(Command::WitnessScan).unwrap_err();
        assert!(err.0.len() >= 3, "{err}");
    }

    #[test]
    fn resolved_table_reloads_to_the_same_config() {
        let mut cfg = RunConfig {
            u: 3.25,
            output: Some("x.csv".into()),
            ..Default::default()
        };
        cfg.temperature.values = Some(vec![0.5, 1.0]);
        let back = RunConfig::from_table(&cfg.to_table()).unwrap();
        assert_eq!(back.u, cfg.u);
        assert_eq!(back.output, cfg.output);
        assert_eq!(back.temperature, cfg.temperature);
        assert_eq!(back.mu, Some(1.625));
    }

    #[test]
    fn qmc_requires_grand_canonical() {
        let cfg = RunConfig {
            method: Method::Qmc,
            ensemble: Ensemble::CanonicalHalfFilled,
            ..Default::default()
        };
        assert!(cfg.validate(Command::WitnessScan).is_err());
    }

    #[test]
    fn extrapolation_needs_three_sizes() {
        let cfg = RunConfig {
            extrapolation_sizes: vec![2, 4],
            ..Default::default()
        };
        let err = cfg.validate(Command::Extrapolate).unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("at least 3")), "{err}");
    }
}
