//! Command-line front end: `check`, `portrait`, `classify` and `build`.
//!
//! Exit codes: 0 success, 1 parse or usage error, 2 inadmissible `H`,
//! 3 classification mismatch, 4 numeric failure.

pub mod csv;
pub mod mesh;
pub mod portrait;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};

use crate::delaunay::{
    build_cylinder, build_nodoid, build_sphere, build_torus, build_unduloid, check_closed_necessary,
    check_sphere_necessary, classify_initial, ClassificationReport, DelaunayError, SurfaceProfile,
    Verdict,
};
use crate::geomk::{Kappa, Model, Sign};
use crate::hfunc::{class_membership, ClassReport, HFunction};
use crate::orbit::IntegratorConfig;
use crate::phaseplane::{equilibria, gamma_asymptotes, linearization, PlaneSpec};

use self::mesh::revolve;
use self::portrait::build_portrait;
use self::report::{Node, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INADMISSIBLE: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "hdelaunay", version, about = "Rotational prescribed mean curvature surfaces in H2xR and S2xR")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Obj,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Disk,
    Stereo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuildKind {
    Sphere,
    Cylinder,
    Unduloid,
    Nodoid,
    Torus,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Curvature of the base surface, -1 or 1.
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: i64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Machine-readable JSON instead of the text report.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Admissibility and necessary conditions for an expression H(y).
    Check {
        expr: String,
        #[command(flatten)]
        common: Common,
    },
    /// Phase portrait of one plane as SVG or CSV.
    Portrait {
        expr: String,
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1)]
        eps: i64,
        /// Number of orbits through the axis y = 0.
        #[arg(long, default_value_t = 8)]
        orbits: usize,
    },
    /// Classify the surface through the meridian point (xi, 0).
    Classify {
        expr: String,
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        xi: f64,
    },
    /// Build a surface: profile CSV and mesh OBJ.
    Build {
        #[arg(value_enum)]
        kind: BuildKind,
        expr: String,
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        xi: Option<f64>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1)]
        eps: i64,
        #[arg(long, default_value_t = 1)]
        periods: usize,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        #[arg(long, default_value_t = 48, value_parser = clap::value_parser!(u32).range(8..))]
        theta_samples: u32,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Inadmissible(String),
    Mismatch(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Inadmissible(_) => EXIT_INADMISSIBLE,
            CliError::Mismatch(_) => EXIT_MISMATCH,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Inadmissible(m) | CliError::Mismatch(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<DelaunayError> for CliError {
    fn from(e: DelaunayError) -> Self {
        match e {
            DelaunayError::Inadmissible(_) => CliError::Inadmissible(e.to_string()),
            DelaunayError::Mismatch { .. } => CliError::Mismatch(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("DELAUNAY_LOG", "error");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parse arguments, run one subcommand and return its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Check { expr, common } => cmd_check(&expr, &common),
        Cmd::Portrait { expr, common, eps, orbits } => cmd_portrait(&expr, &common, eps, orbits),
        Cmd::Classify { expr, common, xi } => cmd_classify(&expr, &common, xi),
        Cmd::Build { kind, expr, common, xi, eps, periods, model, theta_samples } => {
            cmd_build(kind, &expr, &common, xi, eps, periods, model, theta_samples as usize)
        }
    }
}

fn parse_h(expr: &str) -> Result<Arc<HFunction>, CliError> {
    HFunction::parse(expr).map(Arc::new).map_err(|e| CliError::Usage(e.to_string()))
}

fn kappa_of(c: &Common) -> Result<Kappa, CliError> {
    Kappa::from_int(c.kappa).map_err(|e| CliError::Usage(e.to_string()))
}

fn sign_of(v: i64) -> Result<Sign, CliError> {
    Sign::from_int(v).map_err(|e| CliError::Usage(e.to_string()))
}

fn config(c: &Common) -> Result<IntegratorConfig, CliError> {
    let mut cfg = IntegratorConfig::default();
    if let Some(r) = c.rtol {
        cfg.rtol = r;
    }
    if let Some(a) = c.atol {
        cfg.atol = a;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn check_xi(xi: f64, kappa: Kappa) -> Result<f64, CliError> {
    if xi > 0.0 && xi < kappa.x_max() {
        Ok(xi)
    } else {
        Err(CliError::Usage(format!("--xi {xi} is outside the phase strip (0, {})", kappa.x_max())))
    }
}

fn allow_formats(c: &Common, allowed: &[Format]) -> Result<(), CliError> {
    match c.format {
        Some(f) if !allowed.contains(&f) => Err(CliError::Usage(format!(
            "--format {} is not available for this command",
            f.to_possible_value().unwrap().get_name()
        ))),
        _ => Ok(()),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?;
            info!("wrote {}", p.display());
            Ok(())
        }
        None => to_stdout(text),
    }
}

/// A closed pipe on stdout ends output quietly.
fn to_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Usage(format!("cannot write to standard output: {e}")))
        }
        _ => Ok(()),
    }
}

fn render(r: &Report, json: bool) -> String {
    if json {
        r.to_json()
    } else {
        r.to_text()
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::PassAsSlice => "pass_as_slice",
        Verdict::Fail => "fail",
    }
}

fn class_node(r: &ClassReport) -> Node {
    let admissible_for: Vec<Node> = r.admissible_for.iter().map(|k| Node::Num(k.value())).collect();
    Report::new()
        .put("is_even", r.is_even)
        .put(
            "inequality",
            Report::new()
                .put("satisfied", r.satisfies_h2r_inequality)
                .put("witness_y", r.inequality_witness)
                .put("margin", r.inequality_margin),
        )
        .put("zero_multiplicity_sum", r.zero_multiplicity_sum)
        .put("admissible_for", Node::List(admissible_for))
        .node()
}

/// Full condition report for `check` and for inadmissible inputs elsewhere.
pub fn check_report(expr: &str, f: &HFunction, kappa: Kappa) -> (Report, bool) {
    let class = class_membership(f, kappa);
    let mut r = Report::new()
        .put("expression", expr)
        .put("kappa", kappa.value())
        .put("admissible", class.admissible())
        .put("class", class_node(&class));

    let zeros = match f.zeros() {
        Ok(z) => Node::List(
            z.iter()
                .map(|z| {
                    Report::new()
                        .put("y", z.y)
                        .put("multiplicity", z.multiplicity)
                        .put("sign_change", z.sign_change)
                        .node()
                })
                .collect(),
        ),
        Err(e) => Node::Text(format!("unresolved: {e}")),
    };
    r.push("zeros", zeros);

    let closed = check_closed_necessary(f, kappa);
    r.push(
        "closed_condition",
        Report::new()
            .put("verdict", verdict_name(closed.verdict))
            .put("h_minus", closed.h_minus)
            .put("h_plus", closed.h_plus)
            .put("product", closed.product),
    );
    let sphere = match check_sphere_necessary(f, kappa) {
        Ok(s) => Report::new()
            .put("verdict", verdict_name(s.verdict))
            .put("witness_y", s.witness)
            .put("margin", s.margin)
            .put("multiplicity_sum", s.multiplicity_sum)
            .node(),
        Err(e) => Node::Text(format!("unresolved: {e}")),
    };
    r.push("sphere_condition", sphere);

    let f_arc = Arc::new(f.clone());
    let mut eq_list = Vec::new();
    let mut asym = Report::new();
    for eps in [Sign::Plus, Sign::Minus] {
        let spec = PlaneSpec::new(kappa, eps, f_arc.clone());
        for e in equilibria(&spec) {
            let lin = linearization(&spec, &e).ok();
            eq_list.push(
                Report::new()
                    .put("eps", eps.value())
                    .put("x0", e.x0)
                    .put("center_candidate", e.center_candidate)
                    .put("linear_period", lin.and_then(|l| l.period()))
                    .node(),
            );
        }
        if kappa == Kappa::Hyperbolic {
            let ys = match gamma_asymptotes(&spec) {
                Ok(v) => Node::List(v.into_iter().map(Node::Num).collect()),
                Err(e) => Node::Text(format!("unresolved: {e}")),
            };
            asym.push(if eps == Sign::Plus { "eps_plus" } else { "eps_minus" }, ys);
        }
    }
    r.push("equilibria", Node::List(eq_list));
    if kappa == Kappa::Hyperbolic {
        r.push("gamma_asymptotes", asym);
    }
    (r, class.admissible())
}

fn cmd_check(expr: &str, c: &Common) -> Result<i32, CliError> {
    allow_formats(c, &[Format::Report])?;
    let f = parse_h(expr)?;
    let kappa = kappa_of(c)?;
    let (r, ok) = check_report(expr, &f, kappa);
    write_out(c.out.as_deref(), &render(&r, c.json))?;
    Ok(if ok { EXIT_OK } else { EXIT_INADMISSIBLE })
}

fn cmd_portrait(expr: &str, c: &Common, eps: i64, orbits: usize) -> Result<i32, CliError> {
    allow_formats(c, &[Format::Svg, Format::Csv])?;
    let f = parse_h(expr)?;
    let kappa = kappa_of(c)?;
    let eps = sign_of(eps)?;
    let cfg = config(c)?;
    let spec = PlaneSpec::new(kappa, eps, f);
    let p = build_portrait(&spec, orbits, &cfg);
    debug!("portrait with {} orbits and {} gamma pieces", p.orbits.len(), p.gamma.len());
    let text = match c.format.unwrap_or(Format::Svg) {
        Format::Csv => p.to_csv(),
        _ => p.to_svg(),
    };
    write_out(c.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn opt(v: Option<f64>) -> Node {
    v.into()
}

pub fn classification_node(r: &ClassificationReport) -> Report {
    let mut diag = Vec::new();
    for d in &r.diagnostics {
        diag.push(Node::Text(d.clone()));
    }
    Report::new()
        .put("kind", r.kind.to_string())
        .put("kappa", r.kappa.value())
        .put("eps", r.eps.value())
        .put("xi", opt(r.xi))
        .put("e0", opt(r.e0))
        .put("x0", opt(r.x0))
        .put("x1", opt(r.x1))
        .put("period", opt(r.period))
        .put("pitch", opt(r.pitch))
        .put("torus_xi", opt(r.torus_xi))
        .put("condition", class_node(&r.condition))
        .put("diagnostics", Node::List(diag))
}

fn inadmissible(expr: &str, f: &HFunction, kappa: Kappa, json: bool) -> CliError {
    let (r, _) = check_report(expr, f, kappa);
    let _ = to_stdout(&render(&r, json));
    CliError::Inadmissible(format!("H(y) = {expr} is not admissible for kappa = {kappa}"))
}

fn cmd_classify(expr: &str, c: &Common, xi: f64) -> Result<i32, CliError> {
    allow_formats(c, &[Format::Report])?;
    let f = parse_h(expr)?;
    let kappa = kappa_of(c)?;
    let xi = check_xi(xi, kappa)?;
    let cfg = config(c)?;
    let r = match classify_initial(&f, kappa, xi, &cfg) {
        Ok(r) => r,
        Err(DelaunayError::Inadmissible(_)) => return Err(inadmissible(expr, &f, kappa, c.json)),
        Err(e) => return Err(e.into()),
    };
    let rep = Report::new().put("expression", expr).put("classification", classification_node(&r));
    write_out(c.out.as_deref(), &render(&rep, c.json))?;
    Ok(EXIT_OK)
}

fn with_ext(p: &Path, ext: &str) -> PathBuf {
    p.with_extension(ext)
}

#[allow(clippy::too_many_arguments)]
fn cmd_build(
    kind: BuildKind,
    expr: &str,
    c: &Common,
    xi: Option<f64>,
    eps: i64,
    periods: usize,
    model: Option<ModelArg>,
    theta_samples: usize,
) -> Result<i32, CliError> {
    allow_formats(c, &[Format::Csv, Format::Obj, Format::Report])?;
    let f = parse_h(expr)?;
    let kappa = kappa_of(c)?;
    let eps = sign_of(eps)?;
    let cfg = config(c)?;
    let model = match model {
        None => Model::for_kappa(kappa),
        Some(ModelArg::Disk) if kappa == Kappa::Hyperbolic => Model::PoincareDisk,
        Some(ModelArg::Stereo) if kappa == Kappa::Spherical => Model::Stereographic,
        Some(m) => {
            return Err(CliError::Usage(format!(
                "model {} does not apply to kappa = {kappa}",
                m.to_possible_value().unwrap().get_name()
            )))
        }
    };
    let class = class_membership(&f, kappa);
    if !class.admissible() {
        return Err(inadmissible(expr, &f, kappa, c.json));
    }
    let need_xi = || match xi {
        Some(v) => check_xi(v, kappa),
        None => Err(CliError::Usage("--xi is required for this surface".into())),
    };

    let mut rep = Report::new().put("expression", expr).put("kind", format!("{kind:?}").to_lowercase());
    let profile: SurfaceProfile = match kind {
        BuildKind::Sphere => {
            let s = build_sphere(&f, kappa, &cfg)?;
            rep.push("x0", s.x0);
            rep.push("closure_defect", s.closure_defect);
            rep.push("height", s.height);
            rep.push("monotone_ok", s.monotone_ok);
            s.profile
        }
        BuildKind::Cylinder => {
            let cyl = build_cylinder(&f, kappa, eps)?;
            rep.push("radius", cyl.radius);
            rep.push("mean_curvature", cyl.mean_curvature);
            let length = 2.0 * std::f64::consts::PI * periods.max(1) as f64;
            cyl.profile(kappa, length, 64 * periods.max(1))
        }
        BuildKind::Unduloid => {
            let u = build_unduloid(&f, kappa, need_xi()?, periods, &cfg)?;
            rep.push("period", u.period);
            rep.push("pitch", u.pitch);
            rep.push("x_min", u.x_range.0);
            rep.push("x_max", u.x_range.1);
            rep.push("period_deviation", u.period_deviation);
            u.profile
        }
        BuildKind::Nodoid => {
            let n = build_nodoid(&f, kappa, need_xi()?, periods, &cfg)?;
            rep.push("x1", n.x1);
            rep.push("r", n.r);
            rep.push("h1", n.h1);
            rep.push("h2", n.h2);
            rep.push("translation", n.translation);
            rep.push("torus_like", n.torus_like);
            n.profile
        }
        BuildKind::Torus => {
            if kappa != Kappa::Spherical {
                return Err(CliError::Mismatch("tori exist only for kappa = 1".into()));
            }
            let t = build_torus(&f, &cfg)?;
            rep.push("xi_star", t.xi_star);
            rep.push("x1", t.x1);
            rep.push("closure_defect", t.closure_defect);
            rep.push("mirror_defect", t.mirror_defect);
            t.profile
        }
    };
    rep.push("mean_residual", profile.mean_residual(&f));

    let csv_text = || csv::write_profile(&csv::profile_rows(&profile));
    let obj_text = || -> Result<String, CliError> {
        let m = revolve(&profile, model, theta_samples).map_err(|e| CliError::Numeric(e.to_string()))?;
        Ok(m.to_obj())
    };
    match (c.format, c.out.as_deref()) {
        (Some(Format::Csv), out) => write_out(out, &csv_text())?,
        (Some(Format::Obj), out) => write_out(out, &obj_text()?)?,
        (Some(Format::Report), out) => write_out(out, &render(&rep, c.json))?,
        (_, Some(out)) => {
            write_out(Some(&with_ext(out, "csv")), &csv_text())?;
            write_out(Some(&with_ext(out, "obj")), &obj_text()?)?;
            write_out(None, &render(&rep, c.json))?;
        }
        (_, None) => write_out(None, &render(&rep, c.json))?,
    }
    Ok(EXIT_OK)
}
