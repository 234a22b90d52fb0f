//! Command-line front end for the systolab pipelines.
//!
//! Exit codes: 0 pass, 1 verdict failure or numerical error, 2 usage or
//! parse error, 3 refusal because a hypothesis does not hold.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use systolab_core::birkhoff::{summarize, BirkhoffGrid, Section};
use systolab_core::geodesic::{clairaut_invariant, integrate_geodesic, GeodesicState};
use systolab_core::report::{grid_csv, to_json, trajectory_csv};
use systolab_core::strip::synthetic::{sample_generating, sine_generating, RandomGenerating};
use systolab_core::strip::{build_from_generating, generating_from_map, strip_report, StripGrid};
use systolab_core::systolic::{
    audit, jacobi_window, symmetric_candidates, two_gon_perimeter_check, LIFT_PINCHING,
};
use systolab_core::{Error, MetricModel, OutputFormat, RunConfig, Tolerance};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "systolab",
    version,
    about = "Birkhoff sections, strip maps and systolic checks on Riemannian two-spheres"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Metric as inline JSON or a path to a JSON file; defaults to the unit round sphere.
    #[arg(long, global = true)]
    metric: Option<String>,
    #[arg(long, global = true, default_value_t = 96)]
    nx: usize,
    #[arg(long, global = true, default_value_t = 96)]
    ny: usize,
    /// Relative tolerance of the geodesic integrator.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol_int: f64,
    /// Threshold for identity residuals.
    #[arg(long, global = true, default_value_t = 1e-5)]
    tol_id: f64,
    /// Inequality margins are this fraction of the area.
    #[arg(long, global = true, default_value_t = 1e-4)]
    tol_verdict: f64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Geodesic {
    Shortest,
    Longest,
    Equator,
    Meridian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StripSource {
    /// Zero-flux lift of the return map of `--metric`.
    Lift,
    /// `W ≡ 0`.
    Zero,
    /// `W = −ε sin²Y`.
    Sin2,
    /// `W = (ε sin(2πx/L) − bias) sin²Y`.
    Sine,
    /// Seeded random admissible `W`.
    Random,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Area, curvature extremes, pinching and injectivity radius bound.
    MetricInfo,
    /// Integrate one geodesic and report its chart trajectory.
    Trace {
        #[arg(long, default_value_t = PI / 2.0)]
        theta: f64,
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        /// Angle of the initial direction from the θ-direction towards the φ-direction.
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0 * PI)]
        length: f64,
    },
    /// First-return map of the Birkhoff annulus over a closed geodesic.
    ReturnMap {
        #[arg(long, value_enum, default_value_t = Geodesic::Shortest)]
        geodesic: Geodesic,
    },
    /// Flux, Calabi invariant and signed fixed points of a strip map.
    StripReport {
        #[arg(long, value_enum, default_value_t = StripSource::Random)]
        source: StripSource,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        bias: f64,
        /// Strip period for synthetic sources.
        #[arg(long, default_value_t = 2.0 * PI)]
        period: f64,
    },
    /// Audit of ℓ_min² ≤ π·Area ≤ ℓ_max².
    SystolicVerify,
    /// Whether the return map is the identity, as for Zoll metrics.
    ZollCheck,
    /// Two-gon perimeter bound and Jacobi angle window on the return arcs.
    PolygonCheck,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn error(e: &Error) -> Self {
        Self {
            code: exit_code(e),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::ModelInvalid(_) | Error::Domain(_) => EXIT_USAGE,
        Error::Refused(_) | Error::PinchingViolation(_) | Error::Precondition(_) => EXIT_REFUSED,
        _ => EXIT_FAIL,
    }
}

struct Emit {
    main: String,
    summary: Option<String>,
    pass: bool,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let cfg = RunConfig {
        metric: cli.common.metric.clone(),
        nx: cli.common.nx,
        ny: cli.common.ny,
        tol_int: cli.common.tol_int,
        tol_id: cli.common.tol_id,
        tol_verdict: cli.common.tol_verdict,
        out: cli.common.out.clone(),
        format: match cli.common.format {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        },
        seed: cli.common.seed,
        strict: cli.common.strict,
    };
    if let Err(e) = cfg.validate() {
        return Outcome::error(&e);
    }
    match dispatch(&cli.command, &cfg) {
        Ok(emit) => finish(&cfg, emit),
        Err(e) => Outcome::error(&e),
    }
}

fn finish(cfg: &RunConfig, emit: Emit) -> Outcome {
    let code = if emit.pass { EXIT_PASS } else { EXIT_FAIL };
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &emit.main) {
                return Outcome::error(&Error::Parse(format!(
                    "cannot write {}: {e}",
                    path.display()
                )));
            }
            Outcome {
                code,
                stdout: emit.summary.unwrap_or_default(),
                stderr: String::new(),
            }
        }
        None => Outcome {
            code,
            stdout: emit.main,
            stderr: String::new(),
        },
    }
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> systolab_core::Result<Emit> {
    match cmd {
        Command::MetricInfo => metric_info(cfg),
        Command::Trace {
            theta,
            phi,
            alpha,
            length,
        } => trace(cfg, *theta, *phi, *alpha, *length),
        Command::ReturnMap { geodesic } => return_map(cfg, *geodesic),
        Command::StripReport {
            source,
            eps,
            bias,
            period,
        } => strip(cfg, *source, *eps, *bias, *period),
        Command::SystolicVerify => systolic_verify(cfg),
        Command::ZollCheck => zoll_check(cfg),
        Command::PolygonCheck => polygon_check(cfg),
    }
}

fn json_emit(v: &Value, pass: bool) -> systolab_core::Result<Emit> {
    let text = to_json(v)?;
    Ok(Emit {
        main: text.clone(),
        summary: Some(text),
        pass,
    })
}

fn metric_info(cfg: &RunConfig) -> systolab_core::Result<Emit> {
    let m = cfg.load_metric()?;
    let ext = m.extremes();
    json_emit(
        &json!({
            "metric": m.descriptor(),
            "area": m.area(128)?,
            "k_min": ext.k_min,
            "k_max": ext.k_max,
            "theta_at_k_min": ext.theta_at_min,
            "theta_at_k_max": ext.theta_at_max,
            "delta": ext.pinching(),
            "injectivity_radius_lower_bound": m.injectivity_radius_lower_bound(),
        }),
        true,
    )
}

fn trace(
    cfg: &RunConfig,
    theta: f64,
    phi: f64,
    alpha: f64,
    length: f64,
) -> systolab_core::Result<Emit> {
    let m = cfg.load_metric()?;
    let s0 = GeodesicState::from_chart(&m, theta, phi, alpha)?;
    let tol = Tolerance::new(cfg.tol_int, 1e-2 * cfg.tol_int);
    let traj = integrate_geodesic(&m, &s0, length, tol)?;
    let c0 = clairaut_invariant(&m, &s0);
    let drift = traj
        .states
        .iter()
        .map(|s| (clairaut_invariant(&m, s) - c0).abs())
        .fold(0.0, f64::max);
    let speed = traj
        .states
        .iter()
        .map(|s| s.speed_defect(&m))
        .fold(0.0, f64::max);
    let summary = json!({
        "metric": m.descriptor(),
        "length": length,
        "steps": traj.states.len() - 1,
        "clairaut_drift": drift,
        "speed_defect": speed,
    });
    match cfg.format {
        OutputFormat::Csv => Ok(Emit {
            main: trajectory_csv(&m, &traj)?,
            summary: Some(to_json(&summary)?),
            pass: true,
        }),
        OutputFormat::Json => {
            let rows: Vec<Value> = traj
                .chart_rows(&m)
                .iter()
                .map(|r| json!({"t": r[0], "theta": r[1], "phi": r[2], "dir1": r[3], "dir2": r[4]}))
                .collect();
            let mut v = summary;
            v["rows"] = Value::Array(rows);
            json_emit(&v, true)
        }
    }
}

fn require_lift_pinching(m: &MetricModel) -> systolab_core::Result<()> {
    let delta = m.extremes().pinching();
    if delta.is_nan() || delta <= LIFT_PINCHING {
        return Err(Error::Refused(format!("pinching δ = {delta:.6} ≤ 1/4")));
    }
    Ok(())
}

fn section(m: &MetricModel, which: Geodesic, cfg: &RunConfig) -> systolab_core::Result<Section> {
    use systolab_core::systolic::CandidateSource;
    let cands = symmetric_candidates(m)?;
    let usable: Vec<_> = cands
        .iter()
        .filter(|c| c.simple && c.orbit.planarity_defect() < 1e-8)
        .collect();
    let pick = match which {
        Geodesic::Shortest => usable
            .iter()
            .min_by(|a, b| a.length().total_cmp(&b.length())),
        Geodesic::Longest => usable
            .iter()
            .max_by(|a, b| a.length().total_cmp(&b.length())),
        Geodesic::Equator => usable.iter().find(|c| c.source == CandidateSource::Equator),
        Geodesic::Meridian => usable
            .iter()
            .find(|c| c.source == CandidateSource::Meridian),
    }
    .ok_or_else(|| Error::SectionInvalid("requested closed geodesic is not available".into()))?;
    Section::new(m, &pick.orbit)?.with_tolerance(Tolerance::new(cfg.tol_int, 1e-2 * cfg.tol_int))
}

fn build_grid(
    m: &MetricModel,
    which: Geodesic,
    cfg: &RunConfig,
) -> systolab_core::Result<BirkhoffGrid> {
    require_lift_pinching(m)?;
    let s = section(m, which, cfg)?;
    let mut g = BirkhoffGrid::build(&s, cfg.nx, cfg.ny)?;
    g.check_arcs(8)?;
    Ok(g)
}

fn return_map(cfg: &RunConfig, which: Geodesic) -> systolab_core::Result<Emit> {
    let m = cfg.load_metric()?;
    let g = build_grid(&m, which, cfg)?;
    let area = m.area(128)?;
    let (_, _, summary) = summarize(&g, area)?;
    let r = &summary.residuals;
    let pass = summary.flux.abs() < 1e-6
        && r.tau_action < cfg.tol_id
        && r.area_identity < 1e-4
        && r.contact_volume < 1e-4
        && r.area_preservation < 1e-5
        && summary.flagged_nodes == 0;
    let summary_text = to_json(&summary)?;
    Ok(match cfg.format {
        OutputFormat::Csv => Emit {
            main: grid_csv(&g)?,
            summary: Some(summary_text),
            pass,
        },
        OutputFormat::Json => Emit {
            main: summary_text.clone(),
            summary: Some(summary_text),
            pass,
        },
    })
}

fn strip(
    cfg: &RunConfig,
    source: StripSource,
    eps: f64,
    bias: f64,
    period: f64,
) -> systolab_core::Result<Emit> {
    let (map, gen, label) = match source {
        StripSource::Lift => {
            let m = cfg.load_metric()?;
            let g = build_grid(&m, Geodesic::Shortest, cfg)?;
            let lift = g.zero_flux_lift()?;
            let gen = generating_from_map(&lift)?;
            (lift, gen, json!({"kind": "lift", "metric": m.descriptor()}))
        }
        _ => {
            let grid = StripGrid::new(period, cfg.nx, cfg.ny)?;
            let (gen, label) = match source {
                StripSource::Zero => (sample_generating(grid, |_, _| 0.0), json!({"kind": "zero"})),
                StripSource::Sin2 => (
                    sample_generating(grid, move |_, y| -eps * y.sin().powi(2)),
                    json!({"kind": "sin2", "eps": eps}),
                ),
                StripSource::Sine => (
                    sine_generating(grid, eps, bias),
                    json!({"kind": "sine", "eps": eps, "bias": bias}),
                ),
                _ => {
                    let r = RandomGenerating::random(cfg.seed, period, false);
                    (r.sample(grid), json!({"kind": "random", "seed": cfg.seed}))
                }
            };
            (build_from_generating(&gen)?, gen, label)
        }
    };
    let report = strip_report(&map, &gen)?;
    let mut v =
        serde_json::to_value(&report).map_err(|e| Error::InternalConsistency(e.to_string()))?;
    v["source"] = label;
    v["nx"] = json!(cfg.nx);
    v["ny"] = json!(cfg.ny);
    json_emit(&v, report.fixed_point_signs_ok)
}

fn systolic_verify(cfg: &RunConfig) -> systolab_core::Result<Emit> {
    let m = cfg.load_metric()?;
    let r = audit(&m, &cfg.audit_options())?;
    let pass = r.verdicts.pass;
    let v = serde_json::to_value(&r).map_err(|e| Error::InternalConsistency(e.to_string()))?;
    json_emit(&v, pass)
}

fn zoll_check(cfg: &RunConfig) -> systolab_core::Result<Emit> {
    let m = cfg.load_metric()?;
    let g = build_grid(&m, Geodesic::Shortest, cfg)?;
    let area = m.area(128)?;
    let lift = g.zero_flux_lift()?;
    let distance = lift.distance_to_identity();
    let l = g.length();
    let tau_dev = g
        .nodes
        .iter()
        .map(|d| (d.tau - l).abs())
        .fold(0.0, f64::max);
    let zoll = distance < systolab_core::systolic::ZOLL_TOL;
    json_emit(
        &json!({
            "metric": m.descriptor(),
            "L": l,
            "area": area,
            "identity_distance": distance,
            "tau_minus_L_max": tau_dev,
            "contact_volume": g.contact_volume(),
            "contact_volume_residual": g.contact_volume_residual(area),
            "zoll_flag": zoll,
        }),
        zoll,
    )
}

fn polygon_check(cfg: &RunConfig) -> systolab_core::Result<Emit> {
    let m = cfg.load_metric()?;
    let g = build_grid(&m, Geodesic::Shortest, cfg)?;
    let two_gon = two_gon_perimeter_check(&g);
    let normalized = m.normalized()?;
    let gn = build_grid(&normalized, Geodesic::Shortest, cfg)?;
    let window = jacobi_window(&gn);
    json_emit(
        &json!({
            "metric": m.descriptor(),
            "two_gon": two_gon,
            "jacobi_window": window,
        }),
        two_gon.pass,
    )
}
