//! `iode`: singularity analysis for first-order implicit ODEs on the plane.
//!
//! Subcommands: `classify`, `clairaut`, `portrait`, `trace`, `validate`.
//! Exit codes: 0 success, 2 usage or input validation error, 3 numeric
//! failure.

mod config;
mod report;
mod validate;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iode_core::clairaut::{
    classify_family, dara_condition, is_clairaut_type, is_reduced, GeneratingFamily,
};
use iode_core::classify::{
    classify_equilibrium, classify_implicit_point, find_folded_equilibria, find_plane_equilibria,
    SingularKind, SingularPointReport,
};
use iode_core::expr::{Expression, VarSet};
use iode_core::flow::{detect_events, integrate, FlowConfig};
use iode_core::jet::multi_indices;
use iode_core::portrait::{
    render, render_family, PortraitOptions, PortraitSource, PortraitSpec, SeedStrategy, Style,
    Viewport,
};
use iode_core::surface::{parametric_pullback, Box3, EquationSurface};
use iode_core::umbrella::{reduce_and_integrate, UmbrellaError, UmbrellaInput};

use config::Config;
use report::*;

#[derive(Parser)]
#[command(
    name = "iode",
    version,
    about = "Detects and classifies singular points of implicit first-order ODEs G(x, y, y') = 0, \
             tests Clairaut-type structure, integrates phase curves, and renders phase portraits."
)]
struct Cli {
    /// Configuration file (line-based key=value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. --set tol_zero=1e-8 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a singular point of an equation, plane field, or umbrella chart.
    Classify(ClassifyArgs),
    /// Clairaut-type tests for an equation or a generating family F(t, x).
    Clairaut(ClairautArgs),
    /// Render an SVG phase portrait.
    Portrait(PortraitArgs),
    /// Integrate one phase curve and export it as CSV.
    Trace(TraceArgs),
    /// Run the built-in normal-form acceptance suite.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    /// Implicit equation G over {x, y, p}, p = dy/dx.
    #[arg(long)]
    equation: Option<String>,
    /// Explicit plane field "f1,f2" over {x, y}.
    #[arg(long)]
    field: Option<String>,
    /// Parametric umbrella chart "x,y,p" over {u, v}; must be of the shape
    /// (v^2, u, h(u,v)).
    #[arg(long)]
    parametric: Option<String>,
    /// Point to classify: "x,y,p" / "x,y" / "u,v" depending on the input.
    #[arg(long, allow_hyphen_values = true)]
    at: Option<String>,
    /// Scan the working box for singular points instead of a single point.
    #[arg(long)]
    scan: bool,
    /// Working box "x_min,x_max,y_min,y_max,p_min,p_max".
    #[arg(long = "box", value_name = "BOX", allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Also write the report to this file.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ClairautArgs {
    /// Generating family F over {t, x}.
    #[arg(long)]
    family: Option<String>,
    /// Implicit equation G over {x, y, p}.
    #[arg(long)]
    equation: Option<String>,
    /// Working box for the criminant sampling.
    #[arg(long = "box", value_name = "BOX", allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Base point of the ideal-membership germ test (default origin).
    #[arg(long, allow_hyphen_values = true)]
    at: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PortraitArgs {
    #[arg(long)]
    equation: Option<String>,
    /// Explicit plane field "f1,f2".
    #[arg(long)]
    field: Option<String>,
    /// Generating family F(t, x): draws the solution family and envelope.
    #[arg(long)]
    family: Option<String>,
    /// Parameter range "t_min,t_max" for --family.
    #[arg(long = "t-range", allow_hyphen_values = true)]
    t_range: Option<String>,
    /// Box "x_min,x_max,y_min,y_max" with optional ",p_min,p_max".
    #[arg(long = "box", value_name = "BOX", allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Seeds per axis (or family members for --family).
    #[arg(long)]
    grid: Option<usize>,
    /// Add separatrix seeds along folded-saddle eigendirections.
    #[arg(long)]
    separatrices: bool,
    /// Output size in pixels, "WxH".
    #[arg(long, default_value = "640x480")]
    size: String,
    /// Output SVG path.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    equation: String,
    /// Seed point "x,y,p" (projected onto the surface).
    #[arg(long, allow_hyphen_values = true)]
    seed: String,
    /// Direction along the characteristic field: 1 or -1.
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    dir: i8,
    #[arg(long = "box", value_name = "BOX", allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Arclength budget (default: 4 box diameters).
    #[arg(long = "max-arclength")]
    max_arclength: Option<f64>,
    /// Step-size upper bound.
    #[arg(long = "max-step")]
    max_step: Option<f64>,
    /// Output CSV path.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Errors carrying the process exit code.
enum CliError {
    Usage(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // the only environment variable honored is the config-path override,
    // and an explicit --config wins over it
    let config_path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os("IODE_CONFIG").map(PathBuf::from));
    let mut config = match &config_path {
        Some(path) => match Config::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("iode: {}", e);
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    for pair in &cli.overrides {
        let applied = pair
            .split_once('=')
            .ok_or_else(|| config::ConfigError("--set expects KEY=VALUE".into()))
            .and_then(|(k, v)| config.set(k.trim(), v.trim()));
        if let Err(e) = applied.and_then(|_| config.validate()) {
            eprintln!("iode: {}", e);
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Classify(args) => cmd_classify(&args, &config),
        Command::Clairaut(args) => cmd_clairaut(&args, &config),
        Command::Portrait(args) => cmd_portrait(&args, &config),
        Command::Trace(args) => cmd_trace(&args, &config),
        Command::Validate(args) => cmd_validate(&args, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iode: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn parse_floats(src: &str, what: &str) -> Result<Vec<f64>, CliError> {
    src.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{}: cannot parse '{}' as a number", what, part)))
        })
        .collect()
}

fn parse_point(src: &str, dim: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let values = parse_floats(src, what)?;
    if values.len() != dim {
        return Err(usage(format!(
            "{}: expected {} comma-separated numbers, got {}",
            what,
            dim,
            values.len()
        )));
    }
    Ok(values)
}

fn parse_box(src: Option<&String>, default: [f64; 6]) -> Result<Box3<f64>, CliError> {
    let values = match src {
        Some(s) => {
            let v = parse_floats(s, "--box")?;
            match v.len() {
                6 => [v[0], v[1], v[2], v[3], v[4], v[5]],
                4 => [v[0], v[1], v[2], v[3], default[4], default[5]],
                n => {
                    return Err(usage(format!(
                        "--box: expected 4 or 6 comma-separated numbers, got {}",
                        n
                    )))
                }
            }
        }
        None => default,
    };
    if values[0] >= values[1] || values[2] >= values[3] || values[4] >= values[5] {
        return Err(usage("--box: each min must be below its max"));
    }
    Ok(Box3::from_f64(values))
}

fn parse_exprs(
    src: &str,
    vars: &VarSet,
    count: usize,
    what: &str,
) -> Result<Vec<Expression>, CliError> {
    let parts: Vec<&str> = src.split(',').collect();
    if parts.len() != count {
        return Err(usage(format!(
            "{}: expected {} comma-separated expressions, got {}",
            what,
            count,
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| Expression::parse(p, vars).map_err(usage))
        .collect()
}

fn emit_json<T: serde::Serialize>(value: &T, output: Option<&PathBuf>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(numeric)?;
    println!("{}", text);
    if let Some(path) = output {
        std::fs::write(path, format!("{}\n", text))
            .map_err(|e| numeric(format!("cannot write {}: {}", path.display(), e)))?;
    }
    Ok(())
}

fn default_box() -> [f64; 6] {
    [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0]
}

fn cmd_classify(args: &ClassifyArgs, config: &Config) -> Result<(), CliError> {
    let chosen = [&args.equation, &args.field, &args.parametric]
        .iter()
        .filter(|o| o.is_some())
        .count();
    if chosen != 1 {
        return Err(usage(
            "classify: exactly one of --equation, --field, --parametric is required",
        ));
    }
    let digest = config.digest();
    let cfg = config.classify_config();

    if let Some(src) = &args.equation {
        let g = Expression::parse(src, &VarSet::new(["x", "y", "p"])).map_err(usage)?;
        if args.scan {
            let bounds = parse_box(args.bounds.as_ref(), default_box())?;
            let points =
                find_folded_equilibria(&g, &bounds, config.equilibria_grid, config.newton_tol);
            let mut reports = Vec::new();
            for q in points {
                let report = classify_implicit_point(&g, q, &cfg).map_err(numeric)?;
                reports.push(ClassifyJson::from_report(src, &report, &digest));
            }
            return emit_json(&reports, args.output.as_ref());
        }
        let at = args
            .at
            .as_ref()
            .ok_or_else(|| usage("classify --equation needs --at x,y,p (or --scan)"))?;
        let q = parse_point(at, 3, "--at")?;
        let report = classify_implicit_point(&g, [q[0], q[1], q[2]], &cfg).map_err(numeric)?;
        return emit_json(
            &ClassifyJson::from_report(src, &report, &digest),
            args.output.as_ref(),
        );
    }

    if let Some(src) = &args.field {
        let vars = VarSet::new(["x", "y"]);
        let exprs = parse_exprs(src, &vars, 2, "--field")?;
        if args.scan {
            let b = parse_box(args.bounds.as_ref(), default_box())?;
            let points = find_plane_equilibria(
                &exprs[0],
                &exprs[1],
                [b.x_min, b.x_max, b.y_min, b.y_max],
                config.equilibria_grid,
                config.newton_tol,
            );
            let reports: Vec<ClassifyJson> = points
                .into_iter()
                .map(|q| {
                    let report = classify_equilibrium(&exprs[0], &exprs[1], q, &cfg);
                    ClassifyJson::from_report(src, &report, &digest)
                })
                .collect();
            return emit_json(&reports, args.output.as_ref());
        }
        let at = args
            .at
            .as_ref()
            .ok_or_else(|| usage("classify --field needs --at x,y (or --scan)"))?;
        let q = parse_point(at, 2, "--at")?;
        let report = classify_equilibrium(&exprs[0], &exprs[1], [q[0], q[1]], &cfg);
        return emit_json(
            &ClassifyJson::from_report(src, &report, &digest),
            args.output.as_ref(),
        );
    }

    let src = args.parametric.as_ref().unwrap();
    if let Some(at) = &args.at {
        let q = parse_point(at, 2, "--at")?;
        if q[0] != 0.0 || q[1] != 0.0 {
            return Err(usage(
                "classify --parametric analyzes the origin of the (u, v) chart; --at must be 0,0",
            ));
        }
    }
    let report = classify_umbrella_chart(src, config)?;
    emit_json(
        &ClassifyJson::from_report(src, &report, &digest),
        args.output.as_ref(),
    )
}

/// Runs the umbrella pipeline on a parametric chart "x,y,p" over (u, v).
/// The chart must be of the shape (v^2, u, h(u, v)).
fn classify_umbrella_chart(
    src: &str,
    config: &Config,
) -> Result<SingularPointReport<f64>, CliError> {
    let vars = VarSet::new(["u", "v"]);
    let exprs = parse_exprs(src, &vars, 3, "--parametric")?;
    let bounds: Box3<f64> = Box3::from_f64(default_box());
    let surface =
        EquationSurface::parametric(exprs[0].clone(), exprs[1].clone(), exprs[2].clone(), bounds);
    let [jx, jy, jp] = parametric_pullback(&surface, config.jet_order).map_err(numeric)?;

    // chart shape: x = v^2, y = u exactly (within tol_zero)
    let tol = config.tol_zero;
    let mut x_ok = true;
    let mut y_ok = true;
    for e in multi_indices(2, config.jet_order) {
        let want_x: f64 = if e == [0, 2, 0] { 1.0 } else { 0.0 };
        let want_y: f64 = if e == [1, 0, 0] { 1.0 } else { 0.0 };
        if (jx.coeff(e) - want_x).abs() > tol {
            x_ok = false;
        }
        if (jy.coeff(e) - want_y).abs() > tol {
            y_ok = false;
        }
    }
    if !x_ok || !y_ok {
        return Err(usage(
            "classify --parametric requires the chart (v^2, u, h(u,v)); \
             rewrite the parametrization in these coordinates",
        ));
    }

    let input = UmbrellaInput::from_jet(jp, tol).map_err(|e| match e {
        UmbrellaError::NotCentered { value } => usage(format!(
            "umbrella chart must satisfy h(0,0) = 0 (got {:.3e})",
            value
        )),
        other => numeric(other),
    })?;
    let mut report = SingularPointReport::new(vec![0.0, 0.0], SingularKind::NonsingularPoint);
    match reduce_and_integrate(&input, tol) {
        Ok(cert) => {
            report.kind = cert.kind.clone();
            report.invariants.insert("a0".into(), cert.a0);
            report.invariants.insert("a0_prime".into(), cert.a0_prime);
            report.invariants.insert("b0".into(), cert.b0);
            report.invariants.insert("x0".into(), cert.handle.value());
            report.invariants.insert("h_v".into(), cert.detection.0);
            report.invariants.insert("h_uv".into(), cert.detection.1);
            report.invariants.insert(
                "chart_flipped".into(),
                if cert.chart_flipped { 1.0 } else { 0.0 },
            );
            for (name, value) in &cert.residuals {
                report.residuals.insert(name.clone(), *value);
            }
        }
        Err(UmbrellaError::NotAnUmbrella(reason)) => {
            report.kind = SingularKind::NonGeneric(reason);
        }
        Err(UmbrellaError::NoHandle) => {
            report.kind = SingularKind::NonGeneric("handle curve degenerate".into());
        }
        Err(UmbrellaError::DegenerateH) => {
            report.kind = SingularKind::NonGeneric("H(0,0) vanishes in the factorization".into());
        }
        Err(e) => return Err(numeric(e)),
    }
    Ok(report)
}

fn cmd_clairaut(args: &ClairautArgs, config: &Config) -> Result<(), CliError> {
    let digest = config.digest();
    match (&args.family, &args.equation) {
        (Some(src), None) => {
            let e = Expression::parse(src, &VarSet::new(["t", "x"])).map_err(usage)?;
            let base = match &args.at {
                Some(at) => {
                    let q = parse_point(at, 2, "--at")?;
                    [q[0], q[1]]
                }
                None => [0.0, 0.0],
            };
            let fam = GeneratingFamily::new(e, base, config.tol_zero).map_err(usage)?;
            let report = classify_family(&fam, config.tol_zero);
            let json = ClairautFamilyJson {
                input: src.clone(),
                kind: report.kind.label(),
                diagram: report.diagram,
                values: FamilyValuesJson {
                    f_t: report.values.ft,
                    f_tt: report.values.ftt,
                    f_tx: report.values.ftx,
                    f_ttt: report.values.fttt,
                    f_txx: report.values.ftxx,
                },
                config_digest: digest,
            };
            emit_json(&json, args.output.as_ref())
        }
        (None, Some(src)) => {
            let g = Expression::parse(src, &VarSet::new(["x", "y", "p"])).map_err(usage)?;
            let bounds = parse_box(args.bounds.as_ref(), default_box())?;
            let base = match &args.at {
                Some(at) => {
                    let q = parse_point(at, 3, "--at")?;
                    [q[0], q[1], q[2]]
                }
                None => [0.0, 0.0, 0.0],
            };
            // off the surface G is a unit and the ideal-membership test is
            // vacuously true, so the germ base point must lie on {G = 0}
            let residual: f64 = g.eval(&base);
            if residual.abs() > config.tol_on_surface {
                return Err(usage(format!(
                    "clairaut --equation: the base point must lie on the surface \
                     (|G| = {:.3e}); pass --at with an on-surface point",
                    residual.abs()
                )));
            }
            let opts = config.trace_options();
            let verdict = is_clairaut_type(
                &g,
                &bounds,
                config.criminant_samples,
                config.tol_clairaut,
                &opts,
            )
            .map_err(numeric)?;
            let reduced = is_reduced(
                &g,
                &bounds,
                config.criminant_samples,
                config.tol_reduced,
                &opts,
            )
            .map_err(numeric)?;
            let dara = dara_condition(&g, base, config.dara_order).map_err(numeric)?;
            let json = ClairautEquationJson {
                input: src.clone(),
                clairaut_type: verdict.is_clairaut,
                reduced: reduced.is_reduced,
                dara: DaraJson {
                    order: dara.order,
                    holds: dara.holds,
                    residual: dara.residual,
                },
                worst_contact_residual: verdict.worst.map(|(_, r)| r),
                criminant_samples: verdict.samples,
                config_digest: digest,
            };
            emit_json(&json, args.output.as_ref())
        }
        _ => Err(usage(
            "clairaut: exactly one of --family, --equation is required",
        )),
    }
}

fn parse_size(src: &str) -> Result<(u32, u32), CliError> {
    let (w, h) = src
        .split_once('x')
        .ok_or_else(|| usage("--size expects WxH, e.g. 640x480"))?;
    let w = w.parse().map_err(|_| usage("--size: bad width"))?;
    let h = h.parse().map_err(|_| usage("--size: bad height"))?;
    if w == 0 || h == 0 {
        return Err(usage("--size must be positive"));
    }
    Ok((w, h))
}

fn cmd_portrait(args: &PortraitArgs, config: &Config) -> Result<(), CliError> {
    let chosen = [&args.equation, &args.field, &args.family]
        .iter()
        .filter(|o| o.is_some())
        .count();
    if chosen != 1 {
        return Err(usage(
            "portrait: exactly one of --equation, --field, --family is required",
        ));
    }
    let digest = config.digest();
    let size = parse_size(&args.size)?;
    let bounds = parse_box(args.bounds.as_ref(), default_box())?;
    let viewport = Viewport::new(bounds.x_min, bounds.x_max, bounds.y_min, bounds.y_max);
    let style = Style::default();

    let rendered = if let Some(src) = &args.family {
        let e = Expression::parse(src, &VarSet::new(["t", "x"])).map_err(usage)?;
        let fam = GeneratingFamily::at_origin(e, config.tol_zero).map_err(usage)?;
        // the envelope drawing presumes a fold, cusp or cross-cap family
        let kind = classify_family(&fam, config.tol_zero).kind;
        if !matches!(
            kind,
            iode_core::clairaut::ClairautKind::ClairautFold
                | iode_core::clairaut::ClairautKind::ClairautCusp
                | iode_core::clairaut::ClairautKind::ClairautCrossCap
        ) {
            return Err(usage(format!(
                "portrait --family requires a fold, cusp or cross-cap family; this one classifies as {}",
                kind.label()
            )));
        }
        let t_range = match &args.t_range {
            Some(tr) => {
                let v = parse_point(tr, 2, "--t-range")?;
                (v[0], v[1])
            }
            None => (-1.0, 1.0),
        };
        render_family(
            &fam,
            t_range,
            args.grid.unwrap_or(12),
            viewport,
            size,
            &style,
            config.tol_zero,
        )
    } else {
        let source = if let Some(src) = &args.equation {
            PortraitSource::Surface(
                Expression::parse(src, &VarSet::new(["x", "y", "p"])).map_err(usage)?,
            )
        } else {
            let exprs = parse_exprs(
                args.field.as_ref().unwrap(),
                &VarSet::new(["x", "y"]),
                2,
                "--field",
            )?;
            PortraitSource::PlaneField(exprs[0].clone(), exprs[1].clone())
        };
        let grid = args.grid.unwrap_or(config.seed_grid);
        let spec = PortraitSpec {
            source,
            viewport,
            p_range: (bounds.p_min, bounds.p_max),
            seeds: if args.separatrices {
                SeedStrategy::GridWithSeparatrices(grid)
            } else {
                SeedStrategy::Grid(grid)
            },
            size,
            style,
        };
        let opts = PortraitOptions {
            classify: config.classify_config(),
            trace: config.trace_options(),
            equilibria_grid: config.equilibria_grid,
            newton_tol: config.newton_tol,
            ..PortraitOptions::default()
        };
        render(&spec, &opts).map_err(numeric)?
    };

    std::fs::write(&args.output, rendered.svg.as_bytes()).map_err(|e| {
        let _ = std::fs::remove_file(&args.output);
        numeric(format!("cannot write {}: {}", args.output.display(), e))
    })?;

    let summary = PortraitJson {
        output: args.output.display().to_string(),
        seed_count: rendered.summary.seed_count,
        curve_count: rendered.summary.curve_count,
        equilibrium_seeds: rendered.summary.equilibrium_seeds,
        events: rendered.summary.events.clone(),
        singular_points: rendered
            .summary
            .singular_points
            .iter()
            .map(|(kind, lambda, at)| SingularPointSummary {
                kind: kind.clone(),
                lambda: *lambda,
                x: at[0],
                y: at[1],
            })
            .collect(),
        config_digest: digest,
    };
    emit_json(&summary, None)
}

fn cmd_trace(args: &TraceArgs, config: &Config) -> Result<(), CliError> {
    let digest = config.digest();
    let g = Expression::parse(&args.equation, &VarSet::new(["x", "y", "p"])).map_err(usage)?;
    let seed = parse_point(&args.seed, 3, "--seed")?;
    if args.dir != 1 && args.dir != -1 {
        return Err(usage("--dir must be 1 or -1"));
    }
    let bounds = parse_box(args.bounds.as_ref(), [-2.0, 2.0, -2.0, 2.0, -2.0, 2.0])?;
    let mut flow_cfg = FlowConfig::new(bounds);
    flow_cfg.min_step = config.min_step;
    flow_cfg.max_step = config.max_step;
    flow_cfg.newton_tol = config.newton_tol;
    flow_cfg.max_arclength = args
        .max_arclength
        .unwrap_or(bounds.diameter() * config.max_arclength_factor);
    if let Some(h) = args.max_step {
        flow_cfg.max_step = h;
    }
    let curve = integrate(&g, [seed[0], seed[1], seed[2]], args.dir, &flow_cfg).map_err(numeric)?;
    let annotated = detect_events(&curve, &g, &flow_cfg);

    std::fs::write(&args.output, annotated.to_csv()).map_err(|e| {
        let _ = std::fs::remove_file(&args.output);
        numeric(format!("cannot write {}: {}", args.output.display(), e))
    })?;

    let mut events: BTreeMap<String, usize> = BTreeMap::new();
    for (_, kind) in &annotated.events {
        *events.entry(kind.label().to_string()).or_insert(0) += 1;
    }
    let summary = TraceJson {
        output: args.output.display().to_string(),
        samples: annotated.samples.len(),
        arclength: annotated.arclength(),
        events,
        config_digest: digest,
    };
    emit_json(&summary, None)
}

fn cmd_validate(args: &ValidateArgs, config: &Config) -> Result<(), CliError> {
    let checks = validate::run_suite(config);
    let passed = checks.iter().filter(|c| c.pass).count();
    let failed = checks.len() - passed;
    let json = ValidateJson {
        checks,
        passed,
        failed,
        config_digest: config.digest(),
    };
    emit_json(&json, args.output.as_ref())?;
    if failed > 0 {
        return Err(numeric(format!("{} validation check(s) failed", failed)));
    }
    Ok(())
}
