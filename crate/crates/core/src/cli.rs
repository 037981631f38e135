//! Command-line driver: config ingestion, one scenario per invocation, and
//! deterministic CSV/JSON emitters.
//!
//! Every float written to CSV uses 17 significant digits, so a value read back
//! with `str::parse::<f64>` is bit-identical to the one written.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::angular::{css_eval, delta_from_spread, CssParams};
use crate::classical::{classical_period, classical_period_seconds, inner_apsis, planar_energy};
use crate::error::Error;
use crate::ess::{
    build_residuals, ess_build, ess_expectations, expand, observables_vs_time, r_out, reconstruct, runge_lenz_analytic,
    runge_lenz_diagnostics, z_surface, EssParams, GridField, PhysicalSpec, SpectralState, ZMethod,
};
use crate::quad::periodic_grid;
use crate::radial::rss_expectations;
use crate::sqdt::{
    sqdt_build, sqdt_expand, sqdt_hamiltonian_expectation, sqdt_outer_apsis, EnergyTarget, QuantumDefectTable,
};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "KEPLERWAVE_THREADS";

const DEFAULT_TOL: f64 = 1e-8;
const DEFAULT_N_R: usize = 240;
const DEFAULT_N_PHI: usize = 360;
const DEFAULT_N_POINTS: usize = 720;
const DEFAULT_BETA: i64 = 30;
const DEFAULT_DL_LIST: [f64; 3] = [0.5, 1.5, 2.5];
const DEFAULT_A_RANGE: [f64; 2] = [500.0, 4000.0];
const DEFAULT_E_RANGE: [f64; 2] = [0.1, 0.9];
const DEFAULT_N_AE: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Angular density `|χ(φ)|²` for several spreads.
    CssProfile,
    /// Packet parameters from `(n̄, l̄, ΔL)`.
    Build,
    /// Expansion coefficients at each requested time.
    Evolve,
    /// Polar-grid density, one file per time.
    Grid,
    /// `⟨r⟩`, `⟨cosφ⟩`, `⟨sinφ⟩` and autocorrelation against time.
    Observables,
    /// Runge–Lenz uncertainties by both routes.
    Rl,
    /// `Z` over a grid of orbit shapes.
    ZSurface,
    /// Packet parameters with quantum defects.
    SqdtBuild,
    /// Polar-grid density of the defect packet, one file per time.
    SqdtEvolve,
}

impl Scenario {
    fn name(self) -> &'static str {
        match self {
            Scenario::CssProfile => "css-profile",
            Scenario::Build => "build",
            Scenario::Evolve => "evolve",
            Scenario::Grid => "grid",
            Scenario::Observables => "observables",
            Scenario::Rl => "rl",
            Scenario::ZSurface => "z-surface",
            Scenario::SqdtBuild => "sqdt-build",
            Scenario::SqdtEvolve => "sqdt-evolve",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// A time in atomic units, or a string such as `"0.5T"` or `"1/3T"` in units of `T_cl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Au(f64),
    Text(String),
}

impl TimeSpec {
    fn parse(s: &str) -> TimeSpec {
        match s.trim().parse::<f64>() {
            Ok(v) => TimeSpec::Au(v),
            Err(_) => TimeSpec::Text(s.trim().to_string()),
        }
    }

    /// Value in atomic units given the classical period.
    pub fn to_au(&self, t_cl: f64) -> Result<f64, CliError> {
        let v = match self {
            TimeSpec::Au(v) => *v,
            TimeSpec::Text(s) => match s.strip_suffix('T').or_else(|| s.strip_suffix('t')) {
                Some(frac) => parse_fraction(frac)? * t_cl,
                None => parse_fraction(s)?,
            },
        };
        if !v.is_finite() {
            return Err(CliError::Config(format!("time {self:?} is not finite")));
        }
        Ok(v)
    }
}

fn parse_fraction(s: &str) -> Result<f64, CliError> {
    let bad = || CliError::Config(format!("cannot parse time value {s:?}"));
    let s = s.trim();
    if s.is_empty() {
        return Ok(1.0);
    }
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            Ok(p / q)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// Run configuration as read from JSON; every field may also come from a flag.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub n_bar: Option<f64>,
    #[serde(default)]
    pub l_bar: Option<i64>,
    #[serde(default)]
    pub dl: Option<f64>,
    /// Spreads for `css-profile`.
    #[serde(default)]
    pub dl_list: Option<Vec<f64>>,
    /// Mean angular momentum for `css-profile`.
    #[serde(default)]
    pub beta: Option<i64>,
    #[serde(default)]
    pub times: Option<Vec<TimeSpec>>,
    /// Output directory.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    /// Path to a defect table in JSON.
    #[serde(default)]
    pub defects: Option<PathBuf>,
    #[serde(default)]
    pub energy_target: Option<EnergyTarget>,
    /// Tail-mass tolerance of the eigenstate expansion.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub n_r: Option<usize>,
    #[serde(default)]
    pub n_phi: Option<usize>,
    #[serde(default)]
    pub r_max: Option<f64>,
    /// Points in `φ` for `css-profile`.
    #[serde(default)]
    pub n_points: Option<usize>,
    #[serde(default)]
    pub a_range: Option<[f64; 2]>,
    #[serde(default)]
    pub e_range: Option<[f64; 2]>,
    #[serde(default)]
    pub n_a: Option<usize>,
    #[serde(default)]
    pub n_e: Option<usize>,
    /// Radial width for `z-surface`; defaults to that of the built packet.
    #[serde(default)]
    pub dr: Option<f64>,
    /// Orbit orientation for `z-surface`.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub z_method: Option<ZMethod>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    /// Copies every field set in `other` over `self`.
    pub fn overlay(&mut self, other: RunConfig) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            scenario,
            n_bar,
            l_bar,
            dl,
            dl_list,
            beta,
            times,
            out,
            format,
            defects,
            energy_target,
            tol,
            n_r,
            n_phi,
            r_max,
            n_points,
            a_range,
            e_range,
            n_a,
            n_e,
            dr,
            eta,
            z_method
        );
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 1 for configuration, 2 for solver, 3 for accuracy, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Library(e) => e.exit_code(),
            CliError::Io { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Library(e) => e.kind(),
            CliError::Io { .. } => "io",
        }
    }

    /// Single line `error kind=<kind> code=<code> message=<json string>`.
    pub fn report_line(&self) -> String {
        let msg = serde_json::to_string(&self.to_string()).unwrap_or_else(|_| "\"\"".into());
        format!("error kind={} code={} message={}", self.kind(), self.exit_code(), msg)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Parser)]
#[command(name = "keplerwave", version, about = "Elliptical squeezed states of the planar Coulomb problem")]
struct Args {
    #[arg(value_enum)]
    scenario: Scenario,
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_bar: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    l_bar: Option<i64>,
    #[arg(long)]
    dl: Option<f64>,
    /// Comma-separated spreads.
    #[arg(long, value_delimiter = ',')]
    dl_list: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<i64>,
    /// Comma-separated times: plain numbers are atomic units, `0.5T` or `1/3T` are periods.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    times: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    defects: Option<PathBuf>,
    /// `expansion` or `hydrogenic`.
    #[arg(long)]
    energy_target: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    n_phi: Option<usize>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    n_points: Option<usize>,
    /// `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    a_range: Option<Vec<f64>>,
    /// `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    e_range: Option<Vec<f64>>,
    #[arg(long)]
    n_a: Option<usize>,
    #[arg(long)]
    n_e: Option<usize>,
    #[arg(long)]
    dr: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    /// `analytic` or `quadrature`.
    #[arg(long)]
    z_method: Option<String>,
}

fn parse_keyword<T: DeserializeOwned>(flag: &str, s: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| CliError::Config(format!("invalid value {s:?} for --{flag}")))
}

fn pair(flag: &str, v: Option<Vec<f64>>) -> Result<Option<[f64; 2]>, CliError> {
    v.map(|v| <[f64; 2]>::try_from(v).map_err(|_| CliError::Config(format!("--{flag} takes exactly two values"))))
        .transpose()
}

impl Args {
    fn into_config(self) -> Result<(Option<PathBuf>, RunConfig), CliError> {
        let cfg = RunConfig {
            scenario: Some(self.scenario),
            n_bar: self.n_bar,
            l_bar: self.l_bar,
            dl: self.dl,
            dl_list: self.dl_list,
            beta: self.beta,
            times: self.times.map(|v| v.iter().map(|s| TimeSpec::parse(s)).collect()),
            out: self.out,
            format: self.format,
            defects: self.defects,
            energy_target: self.energy_target.map(|s| parse_keyword("energy-target", &s)).transpose()?,
            tol: self.tol,
            n_r: self.n_r,
            n_phi: self.n_phi,
            r_max: self.r_max,
            n_points: self.n_points,
            a_range: pair("a-range", self.a_range)?,
            e_range: pair("e-range", self.e_range)?,
            n_a: self.n_a,
            n_e: self.n_e,
            dr: self.dr,
            eta: self.eta,
            z_method: self.z_method.map(|s| parse_keyword("z-method", &s)).transpose()?,
        };
        Ok((self.config, cfg))
    }
}

/// Parses `argv`, runs the scenario and returns the process exit status.
/// Failures print one [`CliError::report_line`] to stderr.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = CliError::Config(e.kind().to_string() + ": " + e.to_string().lines().next().unwrap_or(""));
            eprintln!("{}", err.report_line());
            return err.exit_code();
        }
    };
    match load_config(args).and_then(|cfg| run(&cfg)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.report_line());
            e.exit_code()
        }
    }
}

fn load_config(args: Args) -> Result<RunConfig, CliError> {
    let (path, flags) = args.into_config()?;
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    cfg.overlay(flags);
    Ok(cfg)
}

/// Configures the global worker pool from [`THREADS_ENV`], if set.
fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // A pool built earlier in this process (e.g. by a previous run) is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Fully resolved inputs of one run; written into every JSON output.
#[derive(Clone, Debug, Serialize)]
struct Resolved {
    #[serde(flatten)]
    config: RunConfig,
    times_au: Vec<f64>,
    t_cl: Option<f64>,
}

/// Runs one scenario and returns the files written, in order.
///
/// Every required field is checked before any computation or file creation.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    init_threads()?;
    let resolved = resolve(config)?;
    let cfg = &resolved.config;
    let scenario = cfg.scenario.expect("checked in resolve");
    let defects = match (&cfg.defects, needs_defects(scenario)) {
        (Some(p), true) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            Some(QuantumDefectTable::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?)
        }
        _ => None,
    };
    let outputs = compute(&resolved, defects.as_ref())?;
    let out = cfg.out.clone().expect("defaulted in resolve");
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    let format = cfg.format.unwrap_or_default();
    let value = serde_json::to_value(&resolved).map_err(|e| CliError::Config(e.to_string()))?;
    let mut written = Vec::new();
    for o in outputs {
        let path = out.join(format!("{}.{}", o.stem(), format.extension()));
        match o {
            Output::Table(_, t) => emit_table(&t, &path, format, &value)?,
            Output::Grid(_, g) => emit_grid(&g, &path, format, &value)?,
        }
        written.push(path);
    }
    Ok(written)
}

fn needs_defects(s: Scenario) -> bool {
    matches!(s, Scenario::SqdtBuild | Scenario::SqdtEvolve)
}

fn needs_spec(s: Scenario) -> bool {
    !matches!(s, Scenario::CssProfile)
}

fn needs_times(s: Scenario) -> bool {
    matches!(s, Scenario::Evolve | Scenario::Grid | Scenario::Observables | Scenario::SqdtEvolve)
}

fn resolve(config: &RunConfig) -> Result<Resolved, CliError> {
    let mut c = config.clone();
    let scenario = c.scenario.ok_or_else(|| CliError::Config("missing field: scenario".into()))?;
    let missing = |f: &str| CliError::Config(format!("scenario {} requires field {f}", scenario.name()));
    if needs_spec(scenario) && scenario != Scenario::ZSurface {
        c.n_bar.ok_or_else(|| missing("n_bar"))?;
        c.l_bar.ok_or_else(|| missing("l_bar"))?;
    }
    if needs_spec(scenario) {
        c.dl.ok_or_else(|| missing("dl"))?;
    }
    if scenario == Scenario::ZSurface && c.dr.is_none() && (c.n_bar.is_none() || c.l_bar.is_none()) {
        return Err(missing("dr (or n_bar and l_bar)"));
    }
    if needs_times(scenario) && c.times.as_ref().map_or(true, |t| t.is_empty()) {
        return Err(missing("times"));
    }
    if needs_defects(scenario) && c.defects.is_none() {
        return Err(missing("defects"));
    }
    if let (Some(n), Some(l), Some(dl)) = (c.n_bar, c.l_bar, c.dl) {
        PhysicalSpec::new(n, l, dl).map_err(|e| CliError::Config(e.to_string()))?;
    }
    c.out.get_or_insert_with(|| PathBuf::from("out"));
    c.format.get_or_insert(Format::Csv);
    let tol = *c.tol.get_or_insert(DEFAULT_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::Config(format!("tol must lie in (0, 1), got {tol}")));
    }
    match scenario {
        Scenario::CssProfile => {
            c.dl_list.get_or_insert_with(|| DEFAULT_DL_LIST.to_vec());
            c.beta.get_or_insert(DEFAULT_BETA);
            positive(*c.n_points.get_or_insert(DEFAULT_N_POINTS), "n_points")?;
            if c.dl_list.as_ref().is_some_and(|v| v.is_empty()) {
                return Err(CliError::Config("dl_list must not be empty".into()));
            }
        }
        Scenario::Grid | Scenario::SqdtEvolve => {
            positive(*c.n_r.get_or_insert(DEFAULT_N_R), "n_r")?;
            positive(*c.n_phi.get_or_insert(DEFAULT_N_PHI), "n_phi")?;
            if let Some(r) = c.r_max {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(CliError::Config(format!("r_max must be > 0, got {r}")));
                }
            }
        }
        Scenario::SqdtBuild => {}
        Scenario::ZSurface => {
            let a = *c.a_range.get_or_insert(DEFAULT_A_RANGE);
            let e = *c.e_range.get_or_insert(DEFAULT_E_RANGE);
            if !(a[0] > 0.0 && a[1] >= a[0]) || !(e[0] >= 0.0 && e[1] >= e[0] && e[1] < 1.0) {
                return Err(CliError::Config(format!("invalid a_range {a:?} or e_range {e:?}")));
            }
            positive(*c.n_a.get_or_insert(DEFAULT_N_AE), "n_a")?;
            positive(*c.n_e.get_or_insert(DEFAULT_N_AE), "n_e")?;
            c.eta.get_or_insert(0.0);
            c.z_method.get_or_insert(ZMethod::Analytic);
        }
        _ => {}
    }
    if needs_defects(scenario) {
        c.energy_target.get_or_insert(EnergyTarget::Expansion);
    }
    let t_cl = c.n_bar.map(classical_period);
    let times_au = match &c.times {
        Some(ts) if needs_times(scenario) => {
            ts.iter().map(|t| t.to_au(t_cl.expect("n_bar checked above"))).collect::<Result<Vec<_>, _>>()?
        }
        _ => Vec::new(),
    };
    Ok(Resolved { config: c, times_au, t_cl })
}

fn positive(n: usize, name: &str) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Config(format!("{name} must be > 0")));
    }
    Ok(())
}

/// Column-oriented table with a documented header.
#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub description: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl Table {
    fn new(description: &[&str], columns: &[&str]) -> Table {
        Table {
            description: description.iter().map(|s| s.to_string()).collect(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut s = String::new();
        for d in &self.description {
            let _ = writeln!(s, "# {d}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
        }
        s
    }
}

enum Output {
    Table(String, Table),
    Grid(String, GridField),
}

impl Output {
    fn stem(&self) -> &str {
        match self {
            Output::Table(s, _) | Output::Grid(s, _) => s,
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

fn json_text<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn emit_table(t: &Table, path: &Path, format: Format, config: &serde_json::Value) -> Result<(), CliError> {
    match format {
        Format::Csv => write_file(path, &t.to_csv()),
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                config: &'a serde_json::Value,
                #[serde(flatten)]
                table: &'a Table,
            }
            write_file(path, &json_text(&Doc { config, table: t })?)
        }
    }
}

/// Writes `field` to `path`.
///
/// CSV layout: comment lines, then rows `t,<t>`, `r,<r_grid...>`, `phi,<phi_grid...>`,
/// then one row of `r|Ψ|²` per radius. JSON carries the same arrays next to `config`.
pub fn emit_grid(field: &GridField, path: &Path, format: Format, config: &serde_json::Value) -> Result<(), CliError> {
    let (nr, nphi) = (field.r_grid.len(), field.phi_grid.len());
    if nr == 0 || nphi == 0 || field.values.len() != nr * nphi {
        return Err(CliError::Config(format!(
            "grid field must be non-empty with n_r * n_phi values (n_r = {nr}, n_phi = {nphi}, values = {})",
            field.values.len()
        )));
    }
    match format {
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "# density r|psi|^2 on a polar grid, atomic units");
            let _ = writeln!(s, "# rows: t, r grid ({nr}), phi grid ({nphi}), then {nr} rows of {nphi} values");
            let row = |label: &str, v: &[f64]| {
                let mut line = label.to_string();
                for x in v {
                    line.push(',');
                    line.push_str(&fmt_float(*x));
                }
                line
            };
            let _ = writeln!(s, "{}", row("t", &[field.t]));
            let _ = writeln!(s, "{}", row("r", &field.r_grid));
            let _ = writeln!(s, "{}", row("phi", &field.phi_grid));
            for i in 0..nr {
                let _ = writeln!(
                    s,
                    "{}",
                    field.values[i * nphi..(i + 1) * nphi].iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(",")
                );
            }
            write_file(path, &s)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                config: &'a serde_json::Value,
                n_r: usize,
                n_phi: usize,
                #[serde(flatten)]
                field: &'a GridField,
            }
            write_file(path, &json_text(&Doc { config, n_r: nr, n_phi: nphi, field })?)
        }
    }
}

/// Parses a grid written by [`emit_grid`] in CSV format.
pub fn read_grid_csv(text: &str) -> Result<GridField, CliError> {
    let bad = |m: &str| CliError::Config(format!("malformed grid file: {m}"));
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let mut labelled = |label: &str| -> Result<Vec<f64>, CliError> {
        let line = lines.next().ok_or_else(|| bad("truncated header"))?;
        let mut parts = line.split(',');
        if parts.next() != Some(label) {
            return Err(bad(&format!("expected a {label} row")));
        }
        parts.map(|p| p.parse::<f64>().map_err(|_| bad(p))).collect()
    };
    let t = labelled("t")?;
    let r_grid = labelled("r")?;
    let phi_grid = labelled("phi")?;
    let mut values = Vec::with_capacity(r_grid.len() * phi_grid.len());
    for line in lines {
        let row: Vec<f64> = line.split(',').map(|p| p.parse::<f64>().map_err(|_| bad(p))).collect::<Result<_, _>>()?;
        if row.len() != phi_grid.len() {
            return Err(bad("row length differs from the phi grid"));
        }
        values.extend(row);
    }
    if t.len() != 1 || values.len() != r_grid.len() * phi_grid.len() || values.is_empty() {
        return Err(bad("inconsistent dimensions"));
    }
    Ok(GridField { r_grid, phi_grid, values, t: t[0] })
}

fn spec_of(c: &RunConfig) -> Result<PhysicalSpec, CliError> {
    Ok(PhysicalSpec::new(c.n_bar.expect("checked"), c.l_bar.expect("checked"), c.dl.expect("checked"))?)
}

fn compute(res: &Resolved, defects: Option<&QuantumDefectTable>) -> Result<Vec<Output>, CliError> {
    let c = &res.config;
    match c.scenario.expect("checked") {
        Scenario::CssProfile => css_profile(c),
        Scenario::Build => {
            let spec = spec_of(c)?;
            let p = ess_build(&spec)?;
            Ok(vec![Output::Table("build".into(), build_table(&spec, &p)?)])
        }
        Scenario::Evolve => {
            let spec = spec_of(c)?;
            let s = expand(&ess_build(&spec)?, c.tol.expect("defaulted"))?;
            Ok(vec![Output::Table("evolve".into(), coefficient_table(&s, &res.times_au, res.t_cl.expect("spec")))])
        }
        Scenario::Grid => {
            let spec = spec_of(c)?;
            let p = ess_build(&spec)?;
            let s = expand(&p, c.tol.expect("defaulted"))?;
            grids(c, &p, &s, &res.times_au, "grid")
        }
        Scenario::Observables => {
            let spec = spec_of(c)?;
            let s = expand(&ess_build(&spec)?, c.tol.expect("defaulted"))?;
            let t_cl = res.t_cl.expect("spec");
            let mut t = Table::new(
                &[
                    "expectations of the evolving packet, atomic units",
                    "t_over_t_cl uses the classical period 2 pi (n_bar - 1/2)^3",
                    "autocorrelation = |<psi(0)|psi(t)>|^2",
                ],
                &["t", "t_over_t_cl", "r", "cos_phi", "sin_phi", "autocorrelation"],
            );
            for o in observables_vs_time(&s, &res.times_au)? {
                t.push(vec![
                    o.t.into(),
                    (o.t / t_cl).into(),
                    o.r.into(),
                    o.cos.into(),
                    o.sin.into(),
                    o.autocorrelation.into(),
                ]);
            }
            Ok(vec![Output::Table("observables".into(), t)])
        }
        Scenario::Rl => {
            let p = ess_build(&spec_of(c)?)?;
            let mut t = Table::new(
                &[
                    "Runge-Lenz uncertainties at t = 0",
                    "analytic: closed-form mode algebra; quadrature: polar grid with doubling check (error column)",
                    "z = (d_ax d_ay - |<HL>|) / |<HL>|",
                ],
                &["route", "mean_ax", "mean_ay", "d_ax", "d_ay", "product", "hl", "abs_hl", "z", "error"],
            );
            for (route, rl) in [("analytic", runge_lenz_analytic(&p)?), ("quadrature", runge_lenz_diagnostics(&p)?)] {
                t.push(vec![
                    route.into(),
                    rl.mean_ax.into(),
                    rl.mean_ay.into(),
                    rl.d_ax.into(),
                    rl.d_ay.into(),
                    rl.product.into(),
                    rl.hl.into(),
                    rl.abs_hl.into(),
                    rl.z.into(),
                    rl.error.into(),
                ]);
            }
            Ok(vec![Output::Table("rl".into(), t)])
        }
        Scenario::ZSurface => z_table(c),
        Scenario::SqdtBuild => {
            let spec = spec_of(c)?;
            let table = defects.expect("loaded");
            let p = sqdt_build(&spec, table, c.energy_target.expect("defaulted"))?;
            let s = sqdt_expand(&p, table, c.tol.expect("defaulted"))?;
            let h = sqdt_hamiltonian_expectation(&s, table)? / s.norm();
            let la = spec.l_bar.unsigned_abs() as u32;
            let e_star = planar_energy(spec.n_bar - table.defect(la));
            let mut t = params_table(&p);
            t.description = vec!["defect packet parameters and checks, atomic units".into()];
            let r_star = sqdt_outer_apsis(&spec, table)?;
            let mean_r = rss_expectations(&p.radial())?.r;
            for (k, v) in [
                ("r_out_star", r_star),
                ("r_mean", mean_r),
                ("e_n_bar_star", e_star),
                ("h_expansion", h),
                ("energy_residual", h / e_star - 1.0),
                ("expansion_norm", s.norm()),
            ] {
                t.push(vec![k.into(), v.into()]);
            }
            Ok(vec![Output::Table("sqdt_build".into(), t)])
        }
        Scenario::SqdtEvolve => {
            let spec = spec_of(c)?;
            let table = defects.expect("loaded");
            let p = sqdt_build(&spec, table, c.energy_target.expect("defaulted"))?;
            let s = sqdt_expand(&p, table, c.tol.expect("defaulted"))?;
            grids(c, &p, &s, &res.times_au, "sqdt_grid")
        }
    }
}

fn css_profile(c: &RunConfig) -> Result<Vec<Output>, CliError> {
    let beta = c.beta.expect("defaulted");
    let dls = c.dl_list.as_ref().expect("defaulted");
    let phis: Vec<f64> = periodic_grid(c.n_points.expect("defaulted"));
    let params = dls
        .iter()
        .map(|&dl| Ok(CssParams::new(delta_from_spread(dl)?, beta, 0.0)?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut columns = vec!["phi".to_string()];
    let mut description = vec![format!("angular density |chi(phi)|^2, beta = {beta}, phi in [-pi, pi)")];
    for (dl, p) in dls.iter().zip(&params) {
        columns.push(format!("density_dl_{dl}"));
        description.push(format!("dl = {dl}: delta = {}", fmt_float(p.delta())));
    }
    let mut t = Table { description, columns, rows: Vec::new() };
    for &phi in &phis {
        let mut row = vec![Cell::Float(phi)];
        for p in &params {
            row.push(css_eval(p, phi)?.norm_sqr().into());
        }
        t.push(row);
    }
    Ok(vec![Output::Table("css_profile".into(), t)])
}

fn params_table(p: &EssParams) -> Table {
    let mut t = Table::new(&[], &["quantity", "value"]);
    for (k, v) in [("alpha", p.alpha()), ("gamma0", p.gamma0()), ("gamma1", p.gamma1()), ("delta", p.delta())] {
        t.push(vec![k.into(), v.into()]);
    }
    t.push(vec!["beta".into(), p.beta().into()]);
    t
}

fn build_table(spec: &PhysicalSpec, p: &EssParams) -> Result<Table, CliError> {
    let mut t = params_table(p);
    t.description = vec![
        "packet parameters, expectations and defining-condition residuals, atomic units".into(),
        "t_cl_seconds converts with 1 a.u. of time = 2.418884e-17 s".into(),
    ];
    let ex = ess_expectations(p)?;
    let (res_r, res_h) = build_residuals(p, spec)?;
    let l = spec.l_bar as f64;
    for (k, v) in [
        ("r_out", r_out(spec.n_bar, l)?),
        ("r_in", inner_apsis(spec.n_bar, l)?),
        ("t_cl", classical_period(spec.n_bar)),
        ("t_cl_seconds", classical_period_seconds(spec.n_bar)),
        ("energy", spec.energy()),
        ("r_mean", ex.r),
        ("h_mean", ex.h),
        ("l_mean", ex.l),
        ("l2_mean", ex.l2),
        ("cos_mean", ex.cos),
        ("dr_dpr", ex.dr_dpr),
        ("dsin_dl", ex.dsin_dl),
        ("residual_r", res_r),
        ("residual_h", res_h),
    ] {
        t.push(vec![k.into(), v.into()]);
    }
    Ok(t)
}

fn coefficient_table(s: &SpectralState, times: &[f64], t_cl: f64) -> Table {
    let mut t = Table::new(
        &[
            "expansion coefficients c_nl(t) = c_nl(0) exp(-i E_n t), atomic units",
            "columns re, im are the real and imaginary parts; energy is E_n",
        ],
        &["t", "t_over_t_cl", "n", "l", "re", "im", "abs2", "energy"],
    );
    t.description.push(format!("retained norm = {}, tail mass = {}", fmt_float(s.norm()), fmt_float(s.tail_mass())));
    for &time in times {
        let st = s.evolve(time - s.t());
        for c in st.coefficients() {
            t.push(vec![
                time.into(),
                (time / t_cl).into(),
                c.n.into(),
                c.l.into(),
                c.c.re.into(),
                c.c.im.into(),
                c.c.norm_sqr().into(),
                c.energy.into(),
            ]);
        }
    }
    t
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn grids(c: &RunConfig, p: &EssParams, s: &SpectralState, times: &[f64], stem: &str) -> Result<Vec<Output>, CliError> {
    let ex = rss_expectations(&p.radial())?;
    let r_max = c.r_max.unwrap_or(ex.r + 6.0 * ex.dr);
    let n_r = c.n_r.expect("defaulted");
    let r_grid: Vec<f64> = linspace(0.0, r_max, n_r + 1).into_iter().skip(1).collect();
    let phi_grid = periodic_grid(c.n_phi.expect("defaulted"));
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let g = reconstruct(&s.evolve(t - s.t()), &r_grid, &phi_grid)?;
            Ok(Output::Grid(format!("{stem}_{i:02}"), g))
        })
        .collect()
}

fn z_table(c: &RunConfig) -> Result<Vec<Output>, CliError> {
    let dl = c.dl.expect("checked");
    let dr = match c.dr {
        Some(dr) => dr,
        None => rss_expectations(&ess_build(&spec_of(c)?)?.radial())?.dr,
    };
    let [a0, a1] = c.a_range.expect("defaulted");
    let [e0, e1] = c.e_range.expect("defaulted");
    let a_grid = linspace(a0, a1, c.n_a.expect("defaulted"));
    let e_grid = linspace(e0, e1, c.n_e.expect("defaulted"));
    let method = c.z_method.expect("defaulted");
    let pts = z_surface(&a_grid, &e_grid, dr, dl, c.eta.expect("defaulted"), method)?;
    let mut t = Table::new(
        &[
            "Runge-Lenz measure Z over orbit shapes, row-major in a",
            "z = (d_ax d_ay - |<HL>|) / |<HL>|; beta rounded to the nearest integer",
        ],
        &["a", "e", "alpha", "beta", "gamma0", "gamma1", "product", "abs_hl", "z"],
    );
    t.description.push(format!("dr = {}, dl = {}", fmt_float(dr), fmt_float(dl)));
    for z in pts {
        t.push(vec![
            z.a.into(),
            z.e.into(),
            z.alpha.into(),
            z.beta.into(),
            z.gamma0.into(),
            z.gamma1.into(),
            z.product.into(),
            z.abs_hl.into(),
            z.z.into(),
        ]);
    }
    Ok(vec![Output::Table("z_surface".into(), t)])
}
