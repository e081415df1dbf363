//! Command-line front end.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::bench::{self, BenchRecord, FixedContourConfig};
use crate::evans::{evaluate_d, Coordinates, MethodId};
use crate::integrator::{Tolerance, ADAPTIVE_PAIR};
use crate::model::{solve_profile_x, Convention, IgnitionKind, ModelParams, Profile};
use crate::stability::{self, Contour, SweepConfig};

/// Environment variable naming the directory for relative output paths.
pub const OUT_DIR_ENV: &str = "MAJDA_ZND_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Compute(String),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Compute(_) => "compute",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn config<E: ToString>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn compute<E: ToString>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "majda-znd", version, about = "Evans-function stability analysis of ZND detonations of Majda's model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output file; relative paths are resolved against $MAJDA_ZND_OUT_DIR if set.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads for contour and sweep evaluation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the traveling-wave profile.
    Profile(ProfileCmd),
    /// Evaluate D(λ) at one point.
    Eval(EvalCmd),
    /// Adaptive winding number on an indented semicircle.
    Contour(ContourCmd),
    /// High-frequency fit radius and the sampled rigorous bound.
    Radius(RadiusCmd),
    /// Stability over a grid of (E, q).
    Sweep(SweepCmd),
    /// Scheme timing and convergence benchmarks.
    Bench(BenchCmd),
    /// Compare the μ(x) scheme with the closed form for φ ≡ 1.
    Verify(VerifyCmd),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.3)]
    pub q: f64,
    /// Activation energy.
    #[arg(long = "E", visible_alias = "energy", default_value_t = 0.0)]
    pub energy: f64,
    /// constant, arrhenius or modified.
    #[arg(long, default_value = "arrhenius")]
    pub ignition: String,
    /// half-reaction, power-ten, exp-half or a number; defaults to exp-half
    /// for arrhenius and power-ten for modified.
    #[arg(long)]
    pub convention: Option<String>,
}

impl ModelArgs {
    fn kind(&self) -> Result<IgnitionKind, CliError> {
        self.ignition.parse().map_err(config)
    }

    fn convention(&self) -> Result<Convention, CliError> {
        match &self.convention {
            Some(c) => c.parse().map_err(config),
            None => Ok(match self.kind()? {
                IgnitionKind::ModifiedArrhenius => Convention::PowerTenRule,
                _ => Convention::ExpHalfRule,
            }),
        }
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let kind = self.kind()?;
        let conv = self.convention()?;
        // Validate before any root finding on the prefactor.
        ModelParams::new(kind, self.q, self.energy, 1.0).map_err(config)?;
        ModelParams::with_convention(kind, self.q, self.energy, conv).map_err(compute)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value = "mu-x")]
    pub method: String,
    /// x or z.
    #[arg(long, default_value = "z")]
    pub coords: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_abs: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_rel: f64,
    /// Left-end reactant value z₀; default sizes the domain by the burned end state.
    #[arg(long)]
    pub z_start: Option<f64>,
}

impl SolverArgs {
    fn method(&self) -> Result<MethodId, CliError> {
        self.method.parse().map_err(config)
    }
    fn coords(&self) -> Result<Coordinates, CliError> {
        self.coords.parse().map_err(|_| CliError::Config(format!("unknown coordinates '{}'", self.coords)))
    }
    fn tol(&self) -> Result<Tolerance, CliError> {
        Tolerance::new(self.tol_abs, self.tol_rel).map_err(config)
    }

    /// Profile with an x-table whenever the scheme or coordinates need one.
    fn profile(&self, params: ModelParams) -> Result<Profile, CliError> {
        let base = match self.z_start {
            Some(z) => Profile::from_z_start(params, z).map_err(config)?,
            None => stability::standard_profile(params).map_err(compute)?,
        };
        let needs_table = self.coords()? == Coordinates::X
            || matches!(self.method()?, MethodId::ErpenbeckInhomogeneous | MethodId::LeeStewartFixed(_));
        if needs_table {
            solve_profile_x(params, base.truncation(), self.tol()?).map_err(compute)
        } else {
            Ok(base)
        }
    }
}

#[derive(Debug, Args)]
pub struct ProfileCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Truncation length M; default sizes the domain by the burned end state.
    #[arg(long = "M", visible_alias = "truncation")]
    pub truncation: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct EvalCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// λ as "re,im" or a real number.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
}

#[derive(Debug, Args)]
pub struct ContourCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long = "R", visible_alias = "radius", default_value_t = 10.0)]
    pub radius: f64,
    #[arg(long, default_value_t = stability::DEFAULT_INNER_RADIUS)]
    pub r_inner: f64,
    #[arg(long, default_value_t = stability::DEFAULT_INITIAL_POINTS)]
    pub points: usize,
    /// Count the argument of D itself instead of D/λ.
    #[arg(long)]
    pub unreduced: bool,
}

#[derive(Debug, Args)]
pub struct RadiusCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 1.0)]
    pub start: f64,
    /// Skip the sampled rigorous bound.
    #[arg(long)]
    pub no_bound: bool,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    /// Grid as "E=start:stop:step,q=start:stop:step".
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value = "arrhenius")]
    pub ignition: String,
    #[arg(long)]
    pub convention: Option<String>,
    #[arg(long, default_value = "mu-x")]
    pub method: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_abs: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_rel: f64,
    #[arg(long, default_value_t = stability::DEFAULT_INITIAL_POINTS)]
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchMode {
    /// Timing on the fixed 55-point contour.
    Fixed,
    /// Tolerance needed for 1e-6 convergence at each λ.
    Convergence,
    /// One scheme in x- versus z-coordinates.
    Coordinates,
}

#[derive(Debug, Args)]
pub struct BenchCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = BenchMode::Fixed)]
    pub mode: BenchMode,
    /// Comma-separated methods; default is the fifteen-scheme comparison set.
    #[arg(long)]
    pub methods: Option<String>,
    /// Semicolon-separated λ list for convergence mode ("re,im;re,im").
    #[arg(long, default_value = "1,0;0,1;10,0;0,10", allow_hyphen_values = true)]
    pub lambdas: String,
    #[arg(long, default_value_t = 55)]
    pub points: usize,
    #[arg(long = "R", visible_alias = "radius", default_value_t = 10.0)]
    pub radius: f64,
    #[arg(long)]
    pub z_start: Option<f64>,
    /// Also write the aligned text table to this file.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyCmd {
    #[arg(long, default_value_t = 0.3)]
    pub q: f64,
    #[arg(long = "R", visible_alias = "radius", default_value_t = 10.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 55)]
    pub points: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub z_start: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

/// Parses "re,im" or "re".
pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| CliError::Config(format!("bad number '{t}' in '{s}'")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(CliError::Config(format!("expected 're,im', got '{s}'"))),
    }
}

/// Values start, start+step, … up to stop inclusive (with rounding slack).
pub fn parse_range(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad range '{s}'"))))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [v] => Ok(vec![*v]),
        [start, stop, step] if *step > 0.0 && stop >= start => {
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).map(|v| (v * 1e12).round() / 1e12).collect())
        }
        _ => Err(CliError::Config(format!("bad range '{s}' (want start:stop:step)"))),
    }
}

/// Parses "E=…,q=…" into the (E, q) product grid, E-major.
pub fn parse_grid(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut energies = None;
    let mut qs = None;
    for part in s.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("grid entry '{part}' lacks '='")))?;
        match key.trim() {
            "E" | "e" => energies = Some(parse_range(value)?),
            "q" => qs = Some(parse_range(value)?),
            k => return Err(CliError::Config(format!("unknown grid key '{k}'"))),
        }
    }
    let energies = energies.ok_or_else(|| CliError::Config("grid needs E=…".into()))?;
    let qs = qs.ok_or_else(|| CliError::Config("grid needs q=…".into()))?;
    Ok(energies.iter().flat_map(|&e| qs.iter().map(move |&q| (e, q))).collect())
}

fn methods_list(s: &str) -> Result<Vec<MethodId>, CliError> {
    s.split(',').map(|m| m.parse().map_err(config)).collect()
}

/// Resolves the output path against [`OUT_DIR_ENV`].
pub fn output_path(out: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if out.is_relative() => PathBuf::from(dir).join(out),
        _ => out.to_path_buf(),
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// A rectangular result: header plus rows of already formatted cells.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(compute)?;
        for r in &self.rows {
            w.write_record(r).map_err(compute)?;
        }
        let bytes = w.into_inner().map_err(compute)?;
        String::from_utf8(bytes).map_err(compute)
    }

    fn to_json(&self, provenance: serde_json::Value) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(h, v)| {
                        let val = v.parse::<f64>().map(|x| json!(x)).unwrap_or_else(|_| json!(v));
                        (h.clone(), val)
                    })
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        json!({ "provenance": provenance, "rows": rows })
    }
}

/// Outcome of one command.
pub struct Outcome {
    pub summary: String,
    pub table: Table,
    pub provenance: serde_json::Value,
}

fn provenance(command: &str, extra: serde_json::Value) -> serde_json::Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "integrator": ADAPTIVE_PAIR,
        "settings": extra,
    })
}

fn run_profile(cmd: &ProfileCmd) -> Result<Outcome, CliError> {
    let params = cmd.model.params()?;
    let tol = Tolerance::uniform(cmd.tol).map_err(config)?;
    let m = match cmd.truncation {
        Some(m) => m,
        None => stability::standard_profile(params).map_err(compute)?.truncation(),
    };
    let profile = solve_profile_x(params, m, tol).map_err(compute)?;
    let table = profile.table().ok_or_else(|| CliError::Compute("profile table missing".into()))?;
    let mut out = Table::new(&["x", "z", "u", "du_dz", "phi"]);
    let (xs, zs) = table.knots();
    for (&x, &z) in xs.iter().zip(zs) {
        let p = profile.point_at_z(z);
        out.rows.push(vec![num(x), num(z), num(p.u), num(p.du_dz), num(p.phi)]);
    }
    let z_at_2 = if m >= 2.0 { profile.z_at_x(-2.0).ok() } else { None };
    let summary = format!(
        "profile M={} z0={:e} points={} z(-2)={} C={}",
        m,
        profile.z_start(),
        out.rows.len(),
        z_at_2.map(num).unwrap_or_else(|| "-".into()),
        params.prefactor()
    );
    Ok(Outcome {
        summary,
        table: out,
        provenance: provenance("profile", json!({ "params": params, "truncation": m, "tol": cmd.tol })),
    })
}

fn sample_header() -> Vec<&'static str> {
    vec!["lambda_re", "lambda_im", "value_re", "value_im", "method", "rhs_evaluations", "accepted_steps", "wall_time"]
}

fn run_eval(cmd: &EvalCmd) -> Result<Outcome, CliError> {
    let params = cmd.model.params()?;
    let method = cmd.solver.method()?;
    let coords = cmd.solver.coords()?;
    let tol = cmd.solver.tol()?;
    let lambda = parse_complex(&cmd.lambda)?;
    let profile = cmd.solver.profile(params)?;
    let s = evaluate_d(method, lambda, &profile, tol, coords).map_err(compute)?;
    let mut table = Table::new(&sample_header());
    table.rows.push(vec![
        num(lambda.re),
        num(lambda.im),
        num(s.value.re),
        num(s.value.im),
        method.name(),
        s.stats.rhs_evaluations.to_string(),
        s.stats.accepted_steps.to_string(),
        num(s.stats.wall_time),
    ]);
    Ok(Outcome {
        summary: format!("D={} method={} steps={} time={:.3}s", s.value, method, s.stats.accepted_steps, s.stats.wall_time),
        table,
        provenance: provenance(
            "eval",
            json!({ "params": params, "method": method, "tol": tol, "coords": coords, "z_start": profile.z_start() }),
        ),
    })
}

fn run_contour(cmd: &ContourCmd) -> Result<Outcome, CliError> {
    let params = cmd.model.params()?;
    let method = cmd.solver.method()?;
    let coords = cmd.solver.coords()?;
    let tol = cmd.solver.tol()?;
    let contour = Contour::new(cmd.radius, cmd.r_inner).map_err(config)?.with_points(cmd.points).map_err(config)?;
    let profile = cmd.solver.profile(params)?;
    let start = Instant::now();
    let w = stability::winding_number(method, &contour, &profile, tol, coords, !cmd.unreduced).map_err(compute)?;
    let time = start.elapsed().as_secs_f64();
    let mut table = Table::new(&["s", "lambda_re", "lambda_im", "value_re", "value_im", "accepted_steps"]);
    for p in &w.samples {
        table.rows.push(vec![
            num(p.s),
            num(p.lambda.re),
            num(p.lambda.im),
            num(p.value.re),
            num(p.value.im),
            p.stats.accepted_steps.to_string(),
        ]);
    }
    Ok(Outcome {
        summary: format!("winding={} R={} points={} time={:.1}s", w.winding, cmd.radius, w.points(), time),
        table,
        provenance: provenance(
            "contour",
            json!({
                "params": params, "method": method, "tol": tol, "coords": coords, "contour": contour,
                "reduced": !cmd.unreduced, "refinements": w.refinements,
                "max_step_arg_change": w.max_step_arg_change, "z_start": profile.z_start(),
            }),
        ),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "not practical".into())
}

fn run_radius(cmd: &RadiusCmd) -> Result<Outcome, CliError> {
    let params = cmd.model.params()?;
    let method = cmd.solver.method()?;
    let coords = cmd.solver.coords()?;
    let tol = cmd.solver.tol()?;
    let profile = cmd.solver.profile(params)?;
    let fit = stability::determine_radius_fit(method, &profile, cmd.start, tol, coords).map_err(compute)?;
    let sweep_radius = fit.radius.max(2.0 * params.activation_energy());
    let mut header = vec!["fit_radius", "sweep_radius", "k0", "k1", "k2", "fit_rel_error"];
    let mut row = vec![num(fit.radius), num(sweep_radius), num(fit.k0), num(fit.k1), num(fit.k2), num(fit.rel_error)];
    let mut summary = format!("fit_radius={} sweep_radius={} rel_error={:e}", fit.radius, sweep_radius, fit.rel_error);
    if !cmd.no_bound {
        let b = stability::rigorous_radius_bound(&params);
        header.extend(["gamma", "bound_radius", "bound_radius_without_growth", "re_lambda_threshold", "conservative"]);
        row.extend([
            num(b.gamma),
            opt(b.radius),
            opt(b.radius_without_growth),
            num(b.re_lambda_threshold),
            b.conservative.to_string(),
        ]);
        summary.push_str(&format!(" bound={} (sampled)", opt(b.radius)));
    }
    let mut table = Table::new(&header);
    table.rows.push(row);
    Ok(Outcome {
        summary,
        table,
        provenance: provenance("radius", json!({ "params": params, "method": method, "tol": tol, "coords": coords })),
    })
}

fn run_sweep(cmd: &SweepCmd) -> Result<Outcome, CliError> {
    let grid = parse_grid(&cmd.grid)?;
    let model = ModelArgs { q: 0.0, energy: 0.0, ignition: cmd.ignition.clone(), convention: cmd.convention.clone() };
    for &(e, q) in &grid {
        ModelParams::new(model.kind()?, q, e, 1.0).map_err(config)?;
    }
    let mut sc = SweepConfig::new(model.kind()?, model.convention()?, cmd.method.parse().map_err(config)?);
    sc.tol = Tolerance::new(cmd.tol_abs, cmd.tol_rel).map_err(config)?;
    sc.initial_points = cmd.points;
    let start = Instant::now();
    let rows = stability::stability_sweep(&grid, &sc);
    let time = start.elapsed().as_secs_f64();
    let mut table =
        Table::new(&["E", "q", "R", "winding", "mesh_points", "max_rel_step", "time", "error"]);
    for r in &rows {
        table.rows.push(vec![
            num(r.activation_energy),
            num(r.heat_release),
            num(r.radius),
            r.winding.map(|w| w.to_string()).unwrap_or_default(),
            r.mesh_points.to_string(),
            num(r.max_relative_step),
            num(r.time),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    let failures = rows.iter().filter(|r| r.winding.is_none()).count();
    let unstable = rows.iter().filter(|r| r.winding.is_some_and(|w| w != 0)).count();
    Ok(Outcome {
        summary: format!("rows={} nonzero_winding={} failures={} time={:.1}s", rows.len(), unstable, failures, time),
        table,
        provenance: provenance("sweep", json!({ "grid": grid, "config": sc })),
    })
}

fn record_row(r: &BenchRecord) -> Vec<String> {
    vec![
        r.method.name(),
        r.method.label().to_string(),
        r.descriptor.clone(),
        r.achieved_tol.map(num).unwrap_or_default(),
        num(r.wall_time),
        r.points.to_string(),
        r.rhs_evaluations.to_string(),
        r.converged.to_string(),
        r.note.clone().unwrap_or_default(),
    ]
}

fn run_bench(cmd: &BenchCmd, table_path: Option<PathBuf>) -> Result<Outcome, CliError> {
    let params = cmd.model.params()?;
    let methods = match &cmd.methods {
        Some(m) => methods_list(m)?,
        None => MethodId::COMPARISON.to_vec(),
    };
    let base = match cmd.z_start {
        Some(z) => Profile::from_z_start(params, z).map_err(config)?,
        None => stability::standard_profile(params).map_err(compute)?,
    };
    let tol = Tolerance { abs: 1e-12, rel: 1e-12 };
    let profile = solve_profile_x(params, base.truncation(), tol).map_err(compute)?;
    let lambdas: Vec<Complex64> = cmd.lambdas.split(';').map(parse_complex).collect::<Result<_, _>>()?;
    let start = Instant::now();
    let (records, text) = match cmd.mode {
        BenchMode::Fixed => {
            let cfg = FixedContourConfig { radius: cmd.radius, points: cmd.points, ..FixedContourConfig::default() };
            let recs = bench::bench_fixed_contour(&methods, &profile, &cfg).map_err(compute)?;
            let text = bench::fixed_contour_table(&recs);
            (recs, text)
        }
        BenchMode::Convergence => {
            let mut grid = Vec::new();
            let mut flat = Vec::new();
            for &m in &methods {
                let mut row = Vec::new();
                for &l in &lambdas {
                    let r = bench::bench_convergence(m, l, &profile, Coordinates::Z).map_err(compute)?;
                    flat.push(r.clone());
                    row.push(r);
                }
                grid.push((m, row));
            }
            (flat, bench::convergence_table(&lambdas, &grid))
        }
        BenchMode::Coordinates => {
            let m = *methods.first().ok_or_else(|| CliError::Config("no method given".into()))?;
            let contour = Contour::new(cmd.radius, stability::DEFAULT_INNER_RADIUS)
                .map_err(config)?
                .with_points(cmd.points)
                .map_err(config)?;
            let recs = bench::bench_coordinate_cost(m, &contour.points(), &profile, tol).map_err(compute)?;
            let text = bench::fixed_contour_table(&recs);
            (recs.to_vec(), text)
        }
    };
    let time = start.elapsed().as_secs_f64();
    if let Some(path) = table_path {
        fs::write(path, &text)?;
    }
    let mut table = Table::new(&[
        "method",
        "label",
        "descriptor",
        "achieved_tol",
        "wall_time",
        "points",
        "rhs_evaluations",
        "converged",
        "note",
    ]);
    table.rows = records.iter().map(record_row).collect();
    let failed = records.iter().filter(|r| !r.converged).count();
    Ok(Outcome {
        summary: format!("records={} not_converged={} time={:.1}s", records.len(), failed, time),
        table,
        provenance: provenance(
            "bench",
            json!({ "params": params, "mode": format!("{:?}", cmd.mode), "z_start": profile.z_start() }),
        ),
    })
}

fn run_verify(cmd: &VerifyCmd) -> Result<Outcome, CliError> {
    let params = ModelParams::constant(cmd.q).map_err(config)?;
    let tol = Tolerance::uniform(cmd.tol).map_err(config)?;
    let contour = Contour::new(cmd.radius, stability::DEFAULT_INNER_RADIUS)
        .map_err(config)?
        .with_points(cmd.points)
        .map_err(config)?;
    let profile = Profile::from_z_start(params, cmd.z_start).map_err(config)?;
    let mut table = Table::new(&["lambda_re", "lambda_im", "exact_re", "exact_im", "numeric_re", "numeric_im", "rel_error"]);
    let mut worst = 0.0f64;
    for l in contour.points() {
        let exact = stability::exact_d(l, cmd.q, crate::model::RATE).map_err(compute)?;
        let numeric = evaluate_d(MethodId::MuX, l, &profile, tol, Coordinates::Z).map_err(compute)?.value;
        let err = (numeric - exact).norm() / exact.norm();
        worst = worst.max(err);
        table.rows.push(vec![num(l.re), num(l.im), num(exact.re), num(exact.im), num(numeric.re), num(numeric.im), num(err)]);
    }
    Ok(Outcome {
        summary: format!("max_rel_error={worst:e} points={} R={}", table.rows.len(), cmd.radius),
        table,
        provenance: provenance("verify", json!({ "q": cmd.q, "contour": contour, "tol": tol, "z_start": cmd.z_start })),
    })
}

/// Runs one command and writes its artifact.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // Only the first configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = cli.out.as_deref().map(output_path);
    let outcome = match &cli.command {
        Command::Profile(c) => run_profile(c)?,
        Command::Eval(c) => run_eval(c)?,
        Command::Contour(c) => run_contour(c)?,
        Command::Radius(c) => run_radius(c)?,
        Command::Sweep(c) => run_sweep(c)?,
        Command::Bench(c) => run_bench(c, c.table.as_deref().map(output_path))?,
        Command::Verify(c) => run_verify(c)?,
    };
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let body = match cli.format {
            Format::Csv => outcome.table.to_csv()?,
            Format::Json => {
                let v = outcome.table.to_json(outcome.provenance.clone());
                serde_json::to_string_pretty(&v).map_err(compute)?
            }
        };
        fs::write(&path, body)?;
    }
    Ok(outcome.summary)
}

/// Parses arguments, runs, prints the summary and maps errors to exit codes.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}
