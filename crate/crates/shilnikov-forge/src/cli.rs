//! Command-line front end: argument parsing, presets, artifact export and the
//! run manifest. [`dispatch`] is the whole program; the binary only forwards
//! its exit code.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::ForgeError;
use crate::homoclinic::{
    continue_curve, epsilon_path, homoclinic_angle, koper_intersection, residual_for,
    solve_homoclinic, ContinuationCurve, ContinuationOptions, NewtonOptions, ShootOptions,
};
use crate::integrator::{EventSpec, Tolerances, Trajectory};
use crate::manifolds::{
    canard_bisection, canard_height_map, canard_spiral, log_offsets, parameter_sweep,
    stable_backward, unstable_trajectory, AngleParam, CanardOptions, HeightGrid, HeightStops,
    ManifoldOptions, Model, SweepOptions,
};
use crate::models::{shnf_to_koper_params, ParamsDoc, ShnfParams, ShnfParamsByEq};
use crate::returns::{
    return_jacobian, return_map_1d, strip_at_stable_point, GlobalMapOptions, ReturnOptions,
};
use crate::singular::{folded_singularities, singular_cycles, CycleOptions, Segment};
use crate::spectral::summary;

/// Environment variable that overrides `--out`.
pub const OUT_ENV: &str = "SHILNIKOV_FORGE_OUT";

/// Angles scanned when `--theta auto` locates the homoclinic direction.
const THETA_SCAN: usize = 720;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    AlphaTilde,
    Beta,
}

impl Preset {
    pub fn params(self) -> ShnfParamsByEq {
        match self {
            Preset::AlphaTilde => ShnfParamsByEq::alpha_tilde(),
            Preset::Beta => ShnfParamsByEq::beta(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Unstable-manifold angle on the command line: a raw angle in radians, or
/// `auto` for the angle whose trajectory comes closest to the stable manifold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThetaArg {
    Auto,
    Raw(f64),
}

fn parse_theta(s: &str) -> Result<ThetaArg, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(ThetaArg::Auto);
    }
    s.parse::<f64>()
        .map(ThetaArg::Raw)
        .map_err(|_| format!("expected `auto` or a number, got `{s}`"))
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected K=V, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("value of `{k}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Parser, Debug)]
#[command(
    name = "shilnikov-forge",
    version,
    about = "Homoclinic orbits, canards and return maps of a singular Hopf normal form",
    arg_required_else_help = true
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Preset parameter set to start from.
    #[arg(long, global = true, value_enum, default_value_t = Preset::Beta)]
    preset: Preset,
    /// Override one of eps, x_eq, a, b, c, r0 (repeatable).
    #[arg(long = "param", global = true, value_name = "K=V", value_parser = parse_kv)]
    params: Vec<(String, f64)>,
    /// Relative integration tolerance for every task.
    #[arg(long, global = true)]
    tol_rel: Option<f64>,
    /// Absolute integration tolerance for every task.
    #[arg(long, global = true)]
    tol_abs: Option<f64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Format of tabular artifacts. Reports and the manifest are always JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GridKind {
    Angles,
    Plane,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectrum of the saddle-focus and folded singularity data.
    Eigs,
    /// Singular cycle candidates at nu = 0, one per jump point.
    SingularCycle {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
              default_values_t = [-0.2, -0.4, -0.6])]
        jump: Vec<f64>,
    },
    /// Canard heights over unstable-manifold angles or a planar grid.
    HeightMap {
        #[arg(long, value_enum, default_value_t = GridKind::Angles)]
        grid: GridKind,
        /// Samples per axis.
        #[arg(long)]
        n: Option<usize>,
        /// Half-width of the angle window around the canard.
        #[arg(long, default_value_t = 0.2)]
        width: f64,
        #[arg(long, default_value_t = -0.05, allow_hyphen_values = true)]
        x_section: f64,
        #[arg(long, default_value_t = -0.025, allow_hyphen_values = true)]
        z_section: f64,
        #[arg(long, num_args = 2, allow_hyphen_values = true,
              default_values_t = [-0.025453, -0.025452])]
        x_range: Vec<f64>,
        #[arg(long, num_args = 2, allow_hyphen_values = true,
              default_values_t = [5.6083e-4, 5.6088e-4])]
        y_range: Vec<f64>,
        #[arg(long, default_value_t = 0.004)]
        band: f64,
    },
    /// Transversality sweep in `a` and the repelling-sheet spiral.
    Sweep {
        #[arg(long, default_value_t = 3e-5)]
        half_width: f64,
        #[arg(long, default_value_t = 7)]
        samples: usize,
        /// Skip the spiral, which needs a canard search.
        #[arg(long)]
        no_spiral: bool,
    },
    /// Evaluate the shooting residual.
    Shoot {
        #[arg(long, default_value = "auto", value_parser = parse_theta, allow_hyphen_values = true)]
        theta: ThetaArg,
    },
    /// Newton refinement of (a, b) to a homoclinic orbit.
    Solve {
        #[arg(long, default_value = "auto", value_parser = parse_theta, allow_hyphen_values = true)]
        theta: ThetaArg,
        #[arg(long, default_value_t = 25)]
        max_iter: usize,
        /// Stop once the residual norm is below this.
        #[arg(long, default_value_t = 1e-7)]
        newton_tol: f64,
    },
    /// Continue the homoclinic curve in (a, b, c) at fixed theta.
    Continue {
        #[arg(long, default_value = "auto", value_parser = parse_theta, allow_hyphen_values = true)]
        theta: ThetaArg,
        /// +1 follows increasing c at the start, -1 decreasing.
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        direction: f64,
        #[arg(long, default_value_t = 5000)]
        max_steps: usize,
        #[arg(long, allow_hyphen_values = true)]
        c_limit: Option<f64>,
        /// Keep going past the Koper constraint surface.
        #[arg(long)]
        through: bool,
    },
    /// Continue to the Koper constraint surface and refine the crossing.
    KoperCross {
        #[arg(long, default_value = "auto", value_parser = parse_theta, allow_hyphen_values = true)]
        theta: ThetaArg,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        direction: f64,
        #[arg(long, default_value_t = 5000)]
        max_steps: usize,
        #[arg(long, default_value_t = 1e-10)]
        g_tol: f64,
    },
    /// Follow the homoclinic orbit as eps decreases with nu / eps fixed.
    EpsPath {
        #[arg(long, default_value = "auto", value_parser = parse_theta, allow_hyphen_values = true)]
        theta: ThetaArg,
        #[arg(long, value_delimiter = ',', default_values_t = [0.009, 0.008, 0.007])]
        schedule: Vec<f64>,
        /// Residual target at every step. The residual moves by about 1e-4
        /// per unit change in (a, b), so looser targets leave (a, b) unmoved.
        #[arg(long, default_value_t = 1e-11)]
        newton_tol: f64,
    },
    /// One-dimensional return map on a strip through the stable manifold.
    ReturnMap {
        #[arg(long, default_value = "auto", value_parser = parse_theta, allow_hyphen_values = true)]
        theta: ThetaArg,
        #[arg(long, default_value_t = 1e-6)]
        half_width: f64,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        /// Skip the Jacobian of the return along the homoclinic orbit.
        #[arg(long)]
        no_jacobian: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eigs => "eigs",
            Command::SingularCycle { .. } => "singular-cycle",
            Command::HeightMap { .. } => "height-map",
            Command::Sweep { .. } => "sweep",
            Command::Shoot { .. } => "shoot",
            Command::Solve { .. } => "solve",
            Command::Continue { .. } => "continue",
            Command::KoperCross { .. } => "koper-cross",
            Command::EpsPath { .. } => "eps-path",
            Command::ReturnMap { .. } => "return-map",
        }
    }
}

/// Every effective value of a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub preset: Preset,
    pub params: ParamsDoc,
    /// The same parameters in the Koper chart, when they map there.
    pub koper: Option<ParamsDoc>,
    pub r0: f64,
    /// Tolerances for slow-manifold, canard and return computations.
    pub tol_manifold: Tolerances,
    /// Tolerances for shooting, continuation and Jacobians.
    pub tol_shooting: Tolerances,
    pub out: PathBuf,
    pub workers: usize,
    pub format: Format,
    /// Subcommand options, including any resolved angle.
    pub options: Value,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(ForgeError),
}

impl From<ForgeError> for Failure {
    fn from(e: ForgeError) -> Self {
        match e {
            ForgeError::InvalidArgument(m) => Failure::Usage(m),
            other => Failure::Numerical(other),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Writes tabular artifacts in the chosen format and remembers their names.
struct Sink {
    dir: PathBuf,
    format: Format,
    artifacts: Vec<String>,
}

impl Sink {
    fn table(&mut self, stem: &str, header: &[&str], rows: &[Vec<Value>]) -> Outcome<()> {
        let name = match self.format {
            Format::Csv => format!("{stem}.csv"),
            Format::Json => format!("{stem}.json"),
        };
        let path = self.dir.join(&name);
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_path(&path).map_err(ForgeError::from)?;
                w.write_record(header).map_err(ForgeError::from)?;
                for r in rows {
                    w.write_record(r.iter().map(cell)).map_err(ForgeError::from)?;
                }
                w.flush().map_err(ForgeError::from)?;
            }
            Format::Json => {
                let objs: Vec<Value> = rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            header
                                .iter()
                                .zip(r)
                                .map(|(h, v)| (h.to_string(), v.clone()))
                                .collect(),
                        )
                    })
                    .collect();
                write_json(&path, &Value::Array(objs))?;
            }
        }
        self.artifacts.push(name);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Outcome<()> {
        write_json(&self.dir.join(name), v)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Outcome<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(ForgeError::from)?;
    s.push('\n');
    fs::write(path, s).map_err(ForgeError::from)?;
    Ok(())
}

fn num(x: f64) -> Value {
    json!(x)
}

fn traj_rows(tag: &str, tr: &Trajectory) -> Vec<Vec<Value>> {
    tr.t
        .iter()
        .zip(&tr.y)
        .map(|(t, s)| vec![json!(tag), num(*t), num(s[0]), num(s[1]), num(s[2])])
        .collect()
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the exit code: 0 on success, 1 on usage errors, 2 on numerical
/// failures.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            eprintln!("run with --help for usage");
            1
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            2
        }
    }
}

fn resolve_params(g: &GlobalArgs) -> Outcome<(ShnfParamsByEq, f64)> {
    let mut q = g.preset.params();
    let mut r0 = ManifoldOptions::default().r0;
    for (k, v) in &g.params {
        match k.as_str() {
            "eps" => q.eps = *v,
            "x_eq" => q.x_eq = *v,
            "a" => q.a = *v,
            "b" => q.b = *v,
            "c" => q.c = *v,
            "r0" => r0 = *v,
            other => {
                return Err(Failure::Usage(format!(
                    "unknown parameter `{other}` (expected eps, x_eq, a, b, c or r0)"
                )))
            }
        }
    }
    if !(r0 > 0.0) {
        return Err(Failure::Usage("r0 must be positive".into()));
    }
    q.to_params()?;
    Ok((q, r0))
}

fn with_tol(t: Tolerances, g: &GlobalArgs) -> Outcome<Tolerances> {
    let t = Tolerances::new(g.tol_rel.unwrap_or(t.rel), g.tol_abs.unwrap_or(t.abs));
    if !(t.rel > 0.0 && t.abs > 0.0) {
        return Err(Failure::Usage("tolerances must be positive".into()));
    }
    Ok(t)
}

fn run(cli: Cli) -> Outcome<()> {
    let g = &cli.global;
    let (q, r0) = resolve_params(g)?;
    let mut mopts = ManifoldOptions {
        r0,
        ..ManifoldOptions::default()
    };
    mopts.tol = with_tol(mopts.tol, g)?;
    let mut sopts = ShootOptions::default().with_r0(r0);
    sopts.manifold.tol = with_tol(sopts.manifold.tol, g)?;
    let workers = match g.workers {
        Some(0) => return Err(Failure::Usage("--workers must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let out = match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => g.out.clone(),
    };
    fs::create_dir_all(&out).map_err(ForgeError::from)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {workers} workers: {e}")))?;

    let mut cfg = RunConfig {
        command: cli.command.name().to_string(),
        preset: g.preset,
        params: ParamsDoc::from(&q),
        koper: q
            .to_params()
            .and_then(|p| shnf_to_koper_params(&p))
            .ok()
            .map(|k| ParamsDoc::from(&k)),
        r0,
        tol_manifold: mopts.tol,
        tol_shooting: sopts.manifold.tol,
        out: out.clone(),
        workers,
        format: g.format,
        options: Value::Null,
    };
    let mut sink = Sink {
        dir: out.clone(),
        format: g.format,
        artifacts: Vec::new(),
    };
    let ctx = Ctx {
        q,
        mopts,
        sopts,
    };
    let result = pool.install(|| execute(&cli.command, &ctx, &mut cfg, &mut sink));
    let (status, error, report) = match &result {
        Ok(r) => ("ok", Value::Null, r.clone()),
        Err(Failure::Usage(m)) => ("usage-error", json!(m), Value::Null),
        Err(Failure::Numerical(e)) => ("numerical-failure", json!(e.to_string()), Value::Null),
    };
    if !report.is_null() {
        sink.json("report.json", &report)?;
        println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(ForgeError::from)?
        );
    }
    let manifest = json!({
        "tool": "shilnikov-forge",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "status": status,
        "error": error,
        "artifacts": sink.artifacts,
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    result.map(|_| ())
}

struct Ctx {
    q: ShnfParamsByEq,
    mopts: ManifoldOptions,
    sopts: ShootOptions,
}

impl Ctx {
    fn model(&self) -> Outcome<Model> {
        Ok(Model::from_eq(&self.q)?)
    }

    fn theta(&self, m: &Model, t: ThetaArg) -> Outcome<f64> {
        Ok(match t {
            ThetaArg::Raw(v) => v,
            ThetaArg::Auto => homoclinic_angle(m, THETA_SCAN, &self.sopts)?.0,
        })
    }
}

fn theta_json(t: ThetaArg, resolved: f64) -> Value {
    json!({
        "requested": match t { ThetaArg::Auto => json!("auto"), ThetaArg::Raw(v) => json!(v) },
        "raw": resolved,
    })
}

fn curve_rows(c: &ContinuationCurve) -> Vec<Vec<Value>> {
    c.points
        .iter()
        .enumerate()
        .map(|(j, p)| {
            vec![
                json!(j),
                num(p.abc[0]),
                num(p.abc[1]),
                num(p.abc[2]),
                num(p.psi_norm),
                num(p.g),
            ]
        })
        .collect()
}

const CURVE_HEADER: [&str; 6] = ["j", "a", "b", "c", "psi_norm", "g"];

fn execute(cmd: &Command, ctx: &Ctx, cfg: &mut RunConfig, sink: &mut Sink) -> Outcome<Value> {
    match cmd {
        Command::Eigs => {
            let m = ctx.model()?;
            let s = summary(&m.saddle.eig)?;
            let folded = folded_singularities(&m.params);
            cfg.options = json!({});
            sink.table(
                "eigs",
                &["rho", "omega", "lambda", "ratio", "shilnikov"],
                &[vec![
                    num(s.rho),
                    num(s.omega),
                    num(s.lambda),
                    num(s.ratio),
                    json!(s.shilnikov),
                ]],
            )?;
            Ok(json!({
                "equilibrium": m.saddle.point,
                "rho": s.rho,
                "omega": s.omega,
                "lambda": s.lambda,
                "ratio": s.ratio,
                "shilnikov": s.shilnikov,
                "folded": folded,
            }))
        }
        Command::SingularCycle { jump } => {
            let p = ShnfParams::new(ctx.q.eps, 0.0, ctx.q.a, ctx.q.b, ctx.q.c)?;
            let copts = CycleOptions {
                tol: ctx.mopts.tol,
                ..CycleOptions::default()
            };
            cfg.options = json!({ "jump": jump, "nu": 0.0 });
            let cycles = singular_cycles(&p, jump, &copts);
            let mut summaries = Vec::new();
            for (i, (x, c)) in jump.iter().zip(cycles).enumerate() {
                let c = c?;
                let mut rows = Vec::new();
                for (sid, seg) in c.segments.iter().enumerate() {
                    let (kind, samples): (&str, Vec<(f64, [f64; 3])>) = match seg {
                        Segment::Slow { samples, .. } => ("slow", samples.clone()),
                        Segment::Jump { from, to, .. } => ("jump", vec![(0.0, *from), (1.0, *to)]),
                    };
                    for (t, s) in samples {
                        rows.push(vec![
                            json!(sid),
                            json!(kind),
                            num(t),
                            num(s[0]),
                            num(s[1]),
                            num(s[2]),
                        ]);
                    }
                }
                sink.table(
                    &format!("singular_cycle_{i}"),
                    &["segment", "kind", "t", "x", "y", "z"],
                    &rows,
                )?;
                summaries.push(json!({
                    "jump_x": x,
                    "segments": c.segments.len(),
                    "closed": c.closed,
                }));
            }
            Ok(json!({ "cycles": summaries }))
        }
        Command::HeightMap {
            grid,
            n,
            width,
            x_section,
            z_section,
            x_range,
            y_range,
            band,
        } => {
            let m = ctx.model()?;
            let stops = HeightStops { band: *band };
            let (cells, extra) = match grid {
                GridKind::Angles => {
                    let n = n.unwrap_or(400).max(1);
                    let canard = canard_bisection(&m, &CanardOptions::default(), &ctx.mopts)?;
                    let rel: Vec<f64> = (0..n)
                        .map(|i| {
                            if n == 1 {
                                0.0
                            } else {
                                -width + 2.0 * width * i as f64 / (n - 1) as f64
                            }
                        })
                        .collect();
                    let thetas: Vec<f64> = rel.iter().map(|r| canard.theta + r).collect();
                    cfg.options = json!({
                        "grid": "angles", "n": n, "width": width,
                        "x_section": x_section, "band": band,
                    });
                    let cells = canard_height_map(
                        &m,
                        &HeightGrid::Angles {
                            thetas,
                            x_section: *x_section,
                        },
                        &stops,
                        &ctx.mopts,
                    );
                    let rows: Vec<Vec<Value>> = cells
                        .iter()
                        .zip(&rel)
                        .map(|(c, r)| {
                            vec![
                                json!(c.col),
                                num(*r),
                                num(c.x),
                                num(c.y),
                                num(c.height),
                                json!(c.terminated),
                            ]
                        })
                        .collect();
                    sink.table(
                        "height_angles",
                        &["col", "theta", "theta_raw", "y_section", "height", "terminated"],
                        &rows,
                    )?;
                    (
                        cells,
                        json!({ "gamma": canard.theta, "gamma_exit_height": canard.exit_height }),
                    )
                }
                GridKind::Plane => {
                    let n = n.unwrap_or(100).max(1);
                    cfg.options = json!({
                        "grid": "plane", "n": n, "z_section": z_section,
                        "x_range": x_range, "y_range": y_range, "band": band,
                    });
                    let cells = canard_height_map(
                        &m,
                        &HeightGrid::Plane {
                            z_section: *z_section,
                            x: (x_range[0], x_range[1], n),
                            y: (y_range[0], y_range[1], n),
                        },
                        &stops,
                        &ctx.mopts,
                    );
                    let rows: Vec<Vec<Value>> = cells
                        .iter()
                        .map(|c| {
                            vec![json!(c.row), json!(c.col), num(c.x), num(c.y), num(c.height)]
                        })
                        .collect();
                    sink.table("height_plane", &["row", "col", "x", "y", "height"], &rows)?;
                    (cells, json!({}))
                }
            };
            let hs = cells.iter().map(|c| c.height);
            let (lo, hi) = hs.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                (l.min(v), h.max(v))
            });
            Ok(json!({
                "cells": cells.len(),
                "unterminated": cells.iter().filter(|c| !c.terminated).count(),
                "height_min": lo,
                "height_max": hi,
                "extra": extra,
            }))
        }
        Command::Sweep {
            half_width,
            samples,
            no_spiral,
        } => {
            let sw = SweepOptions {
                half_width: *half_width,
                samples: *samples,
                ..SweepOptions::default()
            };
            cfg.options = json!({
                "half_width": half_width, "samples": samples, "spiral": !no_spiral,
                "seeds": sw.seeds, "seed_height": sw.seed_height,
            });
            let r = parameter_sweep(&ctx.q, &sw, &ctx.mopts)?;
            let mut rows = Vec::new();
            for (a, c) in r.a_values.iter().zip(&r.c_points) {
                rows.push(vec![num(*a), json!("C"), num(c[0]), num(c[1])]);
            }
            for curve in &r.sheet_curves {
                let a = curve.param.unwrap_or(f64::NAN);
                for p in &curve.points {
                    rows.push(vec![num(a), json!("S"), num(p[0]), num(p[1])]);
                }
            }
            sink.table("sweep_curves", &["a", "kind", "x", "y"], &rows)?;
            let mut report = json!({
                "a_values": r.a_values,
                "eta": r.eta,
                "n": r.n,
                "witness": r.witness,
                "sign_changes": r.sign_changes,
            });
            if !no_spiral {
                let m = ctx.model()?;
                let canard = canard_bisection(&m, &CanardOptions::default(), &ctx.mopts)?;
                let sp = canard_spiral(&m, &canard, &log_offsets(1e-2, 11.0, 600), &ctx.mopts)?;
                let rows: Vec<Vec<Value>> =
                    sp.points.iter().map(|p| vec![num(p[0]), num(p[1])]).collect();
                sink.table("spiral", &["x", "y"], &rows)?;
                report["spiral"] = json!({
                    "center": sp.center,
                    "points": sp.points.len(),
                    "turns": sp.turns,
                    "gamma": canard.theta,
                });
            }
            Ok(report)
        }
        Command::Shoot { theta } => {
            let m = ctx.model()?;
            let t = ctx.theta(&m, *theta)?;
            cfg.options = json!({ "theta": theta_json(*theta, t) });
            let r = residual_for(&m, AngleParam::raw(t), &ctx.sopts)?;
            Ok(json!({
                "theta": t,
                "psi": r.psi,
                "psi_norm": r.norm(),
                "s_point": r.s_point,
                "u_point": r.u_point,
                "branch": r.branch,
                "t_s": r.t_s,
                "t_u": r.t_u,
                "u_height": r.u_height,
            }))
        }
        Command::Solve {
            theta,
            max_iter,
            newton_tol,
        } => {
            let m = ctx.model()?;
            let t = ctx.theta(&m, *theta)?;
            let nopts = NewtonOptions {
                tol: *newton_tol,
                max_iter: *max_iter,
            };
            cfg.options = json!({
                "theta": theta_json(*theta, t), "max_iter": max_iter, "newton_tol": nopts.tol,
            });
            let sol = solve_homoclinic(&ctx.q, AngleParam::raw(t), &nopts, &ctx.sopts)?;
            let ms = Model::new(sol.params, sol.x_eq)?;
            let ev = [EventSpec::plane(2, 0.0).falling().terminal()];
            let u = unstable_trajectory(&ms, AngleParam::raw(t), &ctx.sopts.manifold, &ev);
            let ev = [EventSpec::plane(2, 0.0).terminal()];
            let s = stable_backward(&ms, sol.residual.branch, &ctx.sopts.manifold, &ev);
            let mut rows = traj_rows("unstable", &u);
            rows.extend(traj_rows("stable", &s));
            sink.table("orbit", &["leg", "t", "x", "y", "z"], &rows)?;
            Ok(serde_json::to_value(&sol).map_err(ForgeError::from)?)
        }
        Command::Continue {
            theta,
            direction,
            max_steps,
            c_limit,
            through,
        } => {
            let m = ctx.model()?;
            let t = ctx.theta(&m, *theta)?;
            let copts = ContinuationOptions {
                direction: *direction,
                max_steps: *max_steps,
                c_limit: *c_limit,
                stop_on_koper: !through,
                ..ContinuationOptions::default()
            };
            cfg.options = json!({
                "theta": theta_json(*theta, t), "direction": direction,
                "max_steps": max_steps, "c_limit": c_limit, "stop_on_koper": !through,
                "h0": copts.h0, "h_min": copts.h_min, "h_max": copts.h_max, "delta": copts.delta,
            });
            let start = start_on_curve(ctx, t)?;
            let res = continue_curve(&start, AngleParam::raw(t), &copts, &ctx.sopts);
            let (curve, err) = match res {
                Ok(c) => (c, None),
                Err((c, e)) => (c, Some(e)),
            };
            sink.table("continuation", &CURVE_HEADER, &curve_rows(&curve))?;
            if let Some(e) = err {
                return Err(Failure::Numerical(e));
            }
            Ok(curve_summary(&curve))
        }
        Command::KoperCross {
            theta,
            direction,
            max_steps,
            g_tol,
        } => {
            let m = ctx.model()?;
            let t = ctx.theta(&m, *theta)?;
            let copts = ContinuationOptions {
                direction: *direction,
                max_steps: *max_steps,
                ..ContinuationOptions::default()
            };
            cfg.options = json!({
                "theta": theta_json(*theta, t), "direction": direction,
                "max_steps": max_steps, "g_tol": g_tol,
            });
            let start = start_on_curve(ctx, t)?;
            let res = continue_curve(&start, AngleParam::raw(t), &copts, &ctx.sopts);
            let (curve, err) = match res {
                Ok(c) => (c, None),
                Err((c, e)) => (c, Some(e)),
            };
            sink.table("continuation", &CURVE_HEADER, &curve_rows(&curve))?;
            if let Some(e) = err {
                return Err(Failure::Numerical(e));
            }
            let k = koper_intersection(&curve, &NewtonOptions::default(), &ctx.sopts, *g_tol)?;
            Ok(json!({
                "abc": k.abc,
                "g": k.g,
                "koper": k.koper,
                "iterations": k.iterations,
                "slope": k.slope,
                "psi_norm": k.solution.residual.norm(),
                "curve": curve_summary(&curve),
            }))
        }
        Command::EpsPath {
            theta,
            schedule,
            newton_tol,
        } => {
            let m = ctx.model()?;
            let t = ctx.theta(&m, *theta)?;
            let nopts = NewtonOptions {
                tol: *newton_tol,
                ..NewtonOptions::default()
            };
            cfg.options = json!({
                "theta": theta_json(*theta, t), "schedule": schedule,
                "newton_tol": nopts.tol, "max_iter": nopts.max_iter,
            });
            let start = solve_homoclinic(&ctx.q, AngleParam::raw(t), &nopts, &ctx.sopts)?;
            let path = epsilon_path(&start, schedule, &nopts, &ctx.sopts);
            let mut rows = vec![eps_row(
                start.params.eps,
                start.params.nu,
                path.nu_bar,
                start.x_eq,
                &start.params,
                start.residual.norm(),
            )];
            for p in &path.points {
                rows.push(eps_row(
                    p.eps,
                    p.nu,
                    p.nu_bar,
                    p.x_eq,
                    &p.solution.params,
                    p.solution.residual.norm(),
                ));
            }
            sink.table(
                "eps_path",
                &["eps", "nu", "nu_bar", "x_eq", "a", "b", "c", "psi_norm"],
                &rows,
            )?;
            let report = json!({
                "nu_bar": path.nu_bar,
                "completed": path.points.len(),
                "requested": schedule.len(),
                "failure": path.failure.as_ref().map(|(e, m)| json!({ "eps": e, "reason": m })),
            });
            if let Some((eps, reason)) = path.failure {
                sink.json("report.json", &report)?;
                return Err(Failure::Numerical(ForgeError::PathStopped { eps, reason }));
            }
            Ok(report)
        }
        Command::ReturnMap {
            theta,
            half_width,
            samples,
            no_jacobian,
        } => {
            let m = ctx.model()?;
            let ropts = ReturnOptions {
                half_width: *half_width,
                samples_per_side: *samples,
                ..ReturnOptions::default()
            };
            let strip = strip_at_stable_point(&m, ropts.half_width, &ctx.mopts)?;
            let rm = return_map_1d(&m, strip, &ropts, &ctx.mopts);
            let rows: Vec<Vec<Value>> = rm
                .samples
                .iter()
                .filter(|s| s.returned)
                .map(|s| {
                    vec![
                        num(s.x_in),
                        num(s.x_out),
                        num(s.time),
                        json!(s.turns),
                        json!(s.canard as u8),
                    ]
                })
                .collect();
            sink.table("return_map", &["x", "R(x)", "time", "turns", "canard_flag"], &rows)?;
            sink.json("fixed_points.json", &rm.fixed_points)?;
            let mut report = json!({
                "strip": rm.strip,
                "samples": rm.samples.len(),
                "returned": rows.len(),
                "fixed_points": rm.fixed_points.len(),
                "validated": rm.validated().count(),
            });
            let mut opts_json = json!({
                "half_width": half_width, "samples_per_side": samples,
                "min_offset": ropts.min_offset, "capture": ropts.capture,
                "closure_tol": ropts.closure_tol, "jacobian": !no_jacobian,
            });
            if !no_jacobian {
                let t = ctx.theta(&m, *theta)?;
                opts_json["theta"] = theta_json(*theta, t);
                let gopts = GlobalMapOptions::default();
                opts_json["section_height"] = json!(gopts.d);
                opts_json["fd_step"] = json!(gopts.step);
                let j = return_jacobian(&m, AngleParam::raw(t), &gopts, &ctx.sopts.manifold)?;
                sink.json("return_jacobian.json", &j)?;
                report["jacobian"] = json!({
                    "global_singular_values": j.global.singular_values,
                    "turns": j.local_data.m,
                    "composed_eigen_magnitudes": j.composed.eigen_magnitudes,
                });
            }
            cfg.options = opts_json;
            Ok(report)
        }
    }
}

/// The start of a continuation: the preset itself when it already solves the
/// shooting problem at `theta`, otherwise its Newton refinement.
fn start_on_curve(ctx: &Ctx, theta: f64) -> Outcome<ShnfParamsByEq> {
    let delta = ContinuationOptions::default().delta;
    let r = residual_for(&ctx.model()?, AngleParam::raw(theta), &ctx.sopts)?;
    if r.norm() <= delta {
        return Ok(ctx.q);
    }
    let sol = solve_homoclinic(
        &ctx.q,
        AngleParam::raw(theta),
        &NewtonOptions::default(),
        &ctx.sopts,
    )?;
    Ok(ctx.q.with_abc(sol.params.a, sol.params.b, sol.params.c))
}

fn curve_summary(c: &ContinuationCurve) -> Value {
    let last = c.points.last();
    json!({
        "points": c.points.len(),
        "first": c.points.first().map(|p| p.abc),
        "last": last.map(|p| p.abc),
        "last_g": last.map(|p| p.g),
        "max_psi_norm": c.points.iter().map(|p| p.psi_norm).fold(0.0, f64::max),
    })
}

fn eps_row(eps: f64, nu: f64, nu_bar: f64, x_eq: f64, p: &ShnfParams, psi: f64) -> Vec<Value> {
    vec![
        num(eps),
        num(nu),
        num(nu_bar),
        num(x_eq),
        num(p.a),
        num(p.b),
        num(p.c),
        num(psi),
    ]
}
