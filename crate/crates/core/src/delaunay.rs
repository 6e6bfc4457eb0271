//! Necessary conditions for closed rotational H-surfaces and the
//! constructive classification: spheres, cylinders, unduloids, nodoids and
//! tori.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::geomk::{mean_residual, Kappa, ProfileSample, Sign};
use crate::hfunc::{class_membership, ClassReport, HError, HFunction};
use crate::orbit::{
    detect_closed, integrate, integrate_crossings, integrate_dir, seed_pole, seed_turning, Closure, Direction,
    Event, EventKind, IntegratorConfig, Orbit, OrbitError, PathPoint, State,
};
use crate::phaseplane::{equilibria, gamma_asymptotes, PlaneSpec};
use crate::roots::bisect;

/// Absolute tolerance on `ξ` for the cylinder and sphere verdicts.
pub const VERDICT_TOL: f64 = 1e-7;
/// Tolerance on `x₁ − π/2` for the torus verdict.
pub const TORUS_TOL: f64 = 1e-6;
/// Largest mismatch between the two halves of a sphere.
pub const SPHERE_MATCH_TOL: f64 = 1e-6;
/// Largest mismatch of turning radii between glued arcs.
pub const GLUE_TOL: f64 = 1e-6;
/// `|h₁ − h₂|` below this is flagged as torus-like closure.
pub const TORUS_LIKE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SurfaceKind {
    Sphere,
    Cylinder,
    Unduloid,
    Nodoid,
    Torus,
    MinimalSlice,
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::Cylinder => "cylinder",
            SurfaceKind::Unduloid => "unduloid",
            SurfaceKind::Nodoid => "nodoid",
            SurfaceKind::Torus => "torus",
            SurfaceKind::MinimalSlice => "minimal_slice",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DelaunayError {
    #[error("H is not admissible for kappa = {}", .0.kappa)]
    Inadmissible(Box<ClassReport>),
    #[error("no equilibrium on this branch")]
    NoEquilibrium,
    #[error("no sphere: {obstruction}")]
    NoSphere { obstruction: String, terminal: Option<Event> },
    #[error("H(1) = H(-1) = 0: the closed surface is a horizontal slice")]
    Slice,
    #[error("requested {requested} but the initial condition gives {found}")]
    Mismatch { requested: SurfaceKind, found: SurfaceKind },
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("turning radii of consecutive arcs differ by {0}")]
    Gluing(f64),
    #[error("x1(xi) - pi/2 has no sign change on the scanned bracket")]
    NoTorusCrossing { table: Vec<(f64, f64)> },
    #[error("no classification for this initial condition; orbit ended with {:?}", .terminal.kind)]
    Unclassified { terminal: Event },
    #[error("this construction needs kappa = 1")]
    NotSpherical,
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    H(#[from] HError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    PassAsSlice,
    Fail,
}

/// Outcome of the `H(−1)H(1) > 0` test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedCheck {
    pub verdict: Verdict,
    pub h_minus: f64,
    pub h_plus: f64,
    pub product: f64,
}

pub fn check_closed_necessary(f: &HFunction, kappa: Kappa) -> ClosedCheck {
    let h_minus = f.h(-1.0);
    let h_plus = f.h(1.0);
    let product = h_minus * h_plus;
    let verdict = if product > 0.0 {
        Verdict::Pass
    } else if kappa == Kappa::Spherical && h_minus == 0.0 && h_plus == 0.0 {
        Verdict::PassAsSlice
    } else {
        Verdict::Fail
    };
    ClosedCheck { verdict, h_minus, h_plus, product }
}

/// Outcome of the sphere test: the strict inequality for κ = −1, the parity
/// of the zero multiplicities for κ = +1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereCheck {
    pub verdict: Verdict,
    pub witness: Option<f64>,
    pub margin: Option<f64>,
    pub multiplicity_sum: Option<u32>,
}

pub fn check_sphere_necessary(f: &HFunction, kappa: Kappa) -> Result<SphereCheck, HError> {
    match kappa {
        Kappa::Hyperbolic => {
            let r = class_membership(f, kappa);
            Ok(SphereCheck {
                verdict: if r.satisfies_h2r_inequality { Verdict::Pass } else { Verdict::Fail },
                witness: r.inequality_witness,
                margin: Some(r.inequality_margin),
                multiplicity_sum: None,
            })
        }
        Kappa::Spherical => {
            let sum = f.zero_multiplicity_sum()?;
            Ok(SphereCheck {
                verdict: if sum % 2 == 0 { Verdict::Pass } else { Verdict::Fail },
                witness: None,
                margin: None,
                multiplicity_sum: Some(sum),
            })
        }
    }
}

/// One ε-labelled piece of a profile curve. Arc length runs on continuously
/// from the previous arc.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileArc {
    pub eps: Sign,
    pub points: Vec<PathPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceProfile {
    pub kappa: Kappa,
    pub arcs: Vec<ProfileArc>,
    pub closed: bool,
}

impl SurfaceProfile {
    pub fn residual_samples(&self) -> Vec<(ProfileSample, f64)> {
        self.arcs
            .iter()
            .flat_map(|a| {
                a.points.iter().map(move |p| {
                    (
                        ProfileSample { s: p.s, x: p.x, y: p.y, z: p.z, eps: a.eps },
                        p.yp,
                    )
                })
            })
            .collect()
    }

    /// `max |κ₁ + κ₂ − 2H|` outside the guard band.
    pub fn mean_residual(&self, f: &HFunction) -> f64 {
        mean_residual(&self.residual_samples(), f, self.kappa)
    }

    /// Mismatch in `(x, |y|, z)` at each junction between consecutive arcs.
    pub fn junction_defects(&self) -> Vec<f64> {
        self.arcs
            .windows(2)
            .map(|w| {
                let a = w[0].points.last().unwrap();
                let b = w[1].points.first().unwrap();
                (a.x - b.x).abs().max((a.y.abs() - b.y.abs()).abs()).max((a.z - b.z).abs())
            })
            .collect()
    }

    pub fn point_count(&self) -> usize {
        self.arcs.iter().map(|a| a.points.len()).sum()
    }

    fn end(&self) -> Option<&PathPoint> {
        self.arcs.last().and_then(|a| a.points.last())
    }
}

fn shifted(points: &[PathPoint], ds: f64, dz: f64) -> Vec<PathPoint> {
    points
        .iter()
        .map(|p| PathPoint { s: p.s + ds, z: p.z + dz, ..*p })
        .collect()
}

/// Refined points of an orbit that starts at a seed, with the exact
/// boundary point `(s_b, x_b, y_b)` prepended and arc length re-based to 0
/// there.
fn seeded_points(orbit: &Orbit, boundary: PathPoint, seed_z: f64) -> Vec<PathPoint> {
    let mut pts = vec![boundary];
    pts.extend(orbit.path_points(seed_z));
    let s0 = boundary.s;
    for p in &mut pts {
        p.s -= s0;
    }
    pts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereData {
    /// Equator radius.
    pub x0: f64,
    pub eps: Sign,
    /// `|x₀⁺ − x₀⁻|` between the halves shot from the two poles.
    pub closure_defect: f64,
    /// Height of the far pole.
    pub height: f64,
    pub monotone_ok: bool,
    pub profile: SurfaceProfile,
}

fn sphere_plane(f: &Arc<HFunction>, kappa: Kappa) -> Result<PlaneSpec, DelaunayError> {
    let h1 = f.h(1.0);
    if h1 == 0.0 {
        if kappa == Kappa::Spherical && f.h(-1.0) == 0.0 {
            return Err(DelaunayError::Slice);
        }
        return Err(DelaunayError::NoSphere {
            obstruction: "H(1) = 0, no orbit leaves the axis".into(),
            terminal: None,
        });
    }
    let eps = if h1 > 0.0 { Sign::Plus } else { Sign::Minus };
    Ok(PlaneSpec::new(kappa, eps, f.clone()))
}

fn diagnose(spec: &PlaneSpec, north: State, cfg: &IntegratorConfig) -> Result<DelaunayError, DelaunayError> {
    let o = integrate(spec, north, cfg, &[EventKind::EquilibriumApproach])?;
    let t = o.terminal;
    let msg = match t.kind {
        EventKind::EquilibriumApproach => format!("orbit from the pole converges to the equilibrium x = {:.12}", t.location.x),
        EventKind::Turning => format!("orbit from the pole reaches a turning circle at x = {:.12}", t.location.x),
        EventKind::ForbiddenAxis => "orbit from the pole returns to the axis at a forbidden point".into(),
        EventKind::ArcLengthBudget => {
            let tail = &o.samples[o.samples.len().saturating_sub(10)..];
            let y_end = t.location.y;
            let spread = tail.iter().map(|p| (p.y - y_end).abs()).fold(0.0, f64::max);
            let near = match spec.kappa {
                Kappa::Hyperbolic => gamma_asymptotes(spec)
                    .unwrap_or_default()
                    .into_iter()
                    .min_by(|a, b| (a - y_end).abs().partial_cmp(&(b - y_end).abs()).unwrap()),
                Kappa::Spherical => None,
            };
            match near {
                Some(y0) => format!(
                    "orbit from the pole runs off to x = {:.6} approaching the asymptote y = {:.12} (y = {:.12}, tail spread {:.3e})",
                    t.location.x, y0, y_end, spread
                ),
                None if !equilibria(spec).is_empty() && o.crossings.len() > 2 => {
                    "orbit from the pole winds around the equilibrium without returning to the axis".into()
                }
                None => format!("orbit from the pole does not close within the arc-length budget (y = {y_end:.12})"),
            }
        }
        EventKind::PoleReached => "orbit returns to the axis but the two halves disagree".into(),
        _ => format!("orbit from the pole ends with {:?}", t.kind),
    };
    Ok(DelaunayError::NoSphere { obstruction: msg, terminal: Some(t) })
}

/// Shoot from both poles to the section `y = 0` and glue.
pub fn build_sphere(f: &Arc<HFunction>, kappa: Kappa, cfg: &IntegratorConfig) -> Result<SphereData, DelaunayError> {
    let spec = sphere_plane(f, kappa)?;
    let s0 = cfg.seed_offset;
    let stops = [EventKind::MeridianCross, EventKind::EquilibriumApproach];
    let north = seed_pole(&spec, Sign::Plus, s0)?;
    let south = match seed_pole(&spec, Sign::Minus, s0) {
        Ok(s) => s,
        Err(OrbitError::SignRule { value, .. }) => {
            return Err(DelaunayError::NoSphere {
                obstruction: format!("eps*H(-1) = {value} has the wrong sign; no orbit reaches the second pole"),
                terminal: None,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let on = integrate(&spec, north, cfg, &stops)?;
    let os = integrate_dir(&spec, south, cfg, &stops, Direction::Backward)?;
    let both = on.terminal.kind == EventKind::MeridianCross && os.terminal.kind == EventKind::MeridianCross;
    let defect = (on.terminal.location.x - os.terminal.location.x).abs();
    if !both || defect > SPHERE_MATCH_TOL {
        return Err(diagnose(&spec, north, cfg)?);
    }

    let e = spec.eps.value();
    let hn = f.h(1.0);
    let hs = f.h(-1.0);
    let top = PathPoint { s: 0.0, x: 0.0, y: 1.0, yp: 0.0, z: 0.0 };
    let north_pts = seeded_points(&on, top, e * hn.abs() * s0 * s0 / 2.0);
    let z_eq = north_pts.last().unwrap().z;
    let s_eq = north_pts.last().unwrap().s;

    // The south half is integrated backward from its pole; walk it in
    // profile order and rebuild heights from the equator.
    let mut south_pts = os.path_points(0.0);
    south_pts.reverse();
    let z_shift = z_eq - south_pts[0].z;
    let s_shift = s_eq - south_pts[0].s;
    let mut south_pts = shifted(&south_pts, s_shift, z_shift);
    let last = *south_pts.last().unwrap();
    let pole_z = last.z + e * hs.abs() * s0 * s0 / 2.0;
    south_pts.push(PathPoint { s: last.s + s0, x: 0.0, y: -1.0, yp: 0.0, z: pole_z });
    // The equator appears at the end of the north half already.
    south_pts[0].x = north_pts.last().unwrap().x;

    let monotone_ok = on.samples.iter().chain(os.samples.iter()).all(|p| p.yp < 0.0)
        && north_pts.iter().chain(south_pts.iter()).filter(|p| p.y.abs() < 1.0).all(|p| p.yp < 0.0);
    let profile = SurfaceProfile {
        kappa,
        arcs: vec![
            ProfileArc { eps: spec.eps, points: north_pts },
            ProfileArc { eps: spec.eps, points: south_pts },
        ],
        closed: true,
    };
    Ok(SphereData {
        x0: on.terminal.location.x,
        eps: spec.eps,
        closure_defect: defect,
        height: pole_z,
        monotone_ok,
        profile,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderData {
    pub radius: f64,
    pub eps: Sign,
    /// Mean curvature `εH(0)` of the cylinder.
    pub mean_curvature: f64,
}

impl CylinderData {
    /// The vertical segment `x ≡ e₀` of the given length.
    pub fn profile(&self, kappa: Kappa, length: f64, n: usize) -> SurfaceProfile {
        let e = self.eps.value();
        let points = (0..=n)
            .map(|i| {
                let s = length * i as f64 / n as f64;
                PathPoint { s, x: self.radius, y: 0.0, yp: 0.0, z: e * s }
            })
            .collect();
        SurfaceProfile {
            kappa,
            arcs: vec![ProfileArc { eps: self.eps, points }],
            closed: false,
        }
    }
}

pub fn build_cylinder(f: &Arc<HFunction>, kappa: Kappa, eps: Sign) -> Result<CylinderData, DelaunayError> {
    let spec = PlaneSpec::new(kappa, eps, f.clone());
    let e = equilibria(&spec).into_iter().next().ok_or(DelaunayError::NoEquilibrium)?;
    Ok(CylinderData {
        radius: e.x0,
        eps,
        mean_curvature: eps.value() * f.h(0.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub kind: SurfaceKind,
    pub kappa: Kappa,
    pub eps: Sign,
    pub xi: Option<f64>,
    pub e0: Option<f64>,
    pub x0: Option<f64>,
    pub x1: Option<f64>,
    pub period: Option<f64>,
    pub pitch: Option<f64>,
    pub torus_xi: Option<f64>,
    pub condition: ClassReport,
    pub diagnostics: Vec<String>,
}

impl ClassificationReport {
    fn new(kind: SurfaceKind, kappa: Kappa, eps: Sign, condition: ClassReport) -> Self {
        Self {
            kind,
            kappa,
            eps,
            xi: None,
            e0: None,
            x0: None,
            x1: None,
            period: None,
            pitch: None,
            torus_xi: None,
            condition,
            diagnostics: Vec::new(),
        }
    }
}

fn admissible(f: &HFunction, kappa: Kappa) -> Result<ClassReport, DelaunayError> {
    let r = class_membership(f, kappa);
    if r.admissible() {
        Ok(r)
    } else {
        Err(DelaunayError::Inadmissible(Box::new(r)))
    }
}

/// The orbit through `(ξ, 0)` run forward to its turning circle.
fn turning_orbit(spec: &PlaneSpec, xi: f64, cfg: &IntegratorConfig) -> Result<Orbit, DelaunayError> {
    Ok(integrate(spec, State { s: 0.0, x: xi, y: 0.0 }, cfg, &[])?)
}

/// Turning radius `x₁(ξ)` when the forward orbit ends on a turning circle.
pub fn turning_radius(spec: &PlaneSpec, xi: f64, cfg: &IntegratorConfig) -> Result<Result<f64, Event>, DelaunayError> {
    let o = turning_orbit(spec, xi, cfg)?;
    Ok(match o.terminal.kind {
        EventKind::Turning if o.terminal.location.x > cfg.pole_tol => Ok(o.terminal.location.x),
        _ => Err(o.terminal),
    })
}

pub fn classify_initial(
    f: &Arc<HFunction>,
    kappa: Kappa,
    xi: f64,
    cfg: &IntegratorConfig,
) -> Result<ClassificationReport, DelaunayError> {
    let condition = admissible(f, kappa)?;
    if kappa == Kappa::Spherical && f.h(1.0) == 0.0 && f.h(-1.0) == 0.0 {
        let mut r = ClassificationReport::new(SurfaceKind::MinimalSlice, kappa, Sign::Plus, condition);
        r.diagnostics.push("H vanishes at both poles; the closed surface is a horizontal slice".into());
        return Ok(r);
    }
    if !(xi > 0.0 && xi < kappa.x_max()) {
        return Err(OrbitError::StartOutside { x: xi, y: 0.0 }.into());
    }
    let sphere = build_sphere(f, kappa, cfg)?;
    let spec = PlaneSpec::new(kappa, sphere.eps, f.clone());
    let e0 = equilibria(&spec).first().map(|e| e.x0);
    let x0 = sphere.x0;
    let mut r = ClassificationReport::new(SurfaceKind::Sphere, kappa, sphere.eps, condition);
    r.xi = Some(xi);
    r.e0 = e0;
    r.x0 = Some(x0);

    if let Some(e) = e0.filter(|e| (xi - e).abs() <= VERDICT_TOL) {
        r.kind = SurfaceKind::Cylinder;
        r.diagnostics.push(format!("xi is the equilibrium {e:.12}"));
        return Ok(r);
    }
    if (xi - x0).abs() <= VERDICT_TOL {
        r.kind = SurfaceKind::Sphere;
        return Ok(r);
    }
    if xi < x0 {
        return match detect_closed(&spec, xi, cfg)? {
            Closure::Closed { period, pitch, .. } => {
                r.kind = SurfaceKind::Unduloid;
                r.period = Some(period);
                r.pitch = Some(pitch);
                Ok(r)
            }
            Closure::NotClosed { terminal, .. } => Err(DelaunayError::Inconsistent(format!(
                "xi = {xi} lies inside the sphere orbit but its orbit does not close ({:?})",
                terminal.kind
            ))),
        };
    }
    match turning_radius(&spec, xi, cfg)? {
        Ok(x1) => {
            r.x1 = Some(x1);
            r.kind = if kappa == Kappa::Spherical && (x1 - FRAC_PI_2).abs() <= TORUS_TOL {
                SurfaceKind::Torus
            } else {
                SurfaceKind::Nodoid
            };
            Ok(r)
        }
        Err(terminal) => Err(DelaunayError::Unclassified { terminal }),
    }
}

fn require(
    f: &Arc<HFunction>,
    kappa: Kappa,
    xi: f64,
    kind: SurfaceKind,
    cfg: &IntegratorConfig,
) -> Result<ClassificationReport, DelaunayError> {
    let r = classify_initial(f, kappa, xi, cfg)?;
    if r.kind != kind {
        return Err(DelaunayError::Mismatch { requested: kind, found: r.kind });
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnduloidData {
    pub xi: f64,
    pub period: f64,
    pub pitch: f64,
    pub x_range: (f64, f64),
    /// Largest `(x, y)` deviation between one period and the next, after
    /// shifting by the period.
    pub period_deviation: f64,
    pub profile: SurfaceProfile,
}

pub fn build_unduloid(
    f: &Arc<HFunction>,
    kappa: Kappa,
    xi: f64,
    n_periods: usize,
    cfg: &IntegratorConfig,
) -> Result<UnduloidData, DelaunayError> {
    let r = require(f, kappa, xi, SurfaceKind::Unduloid, cfg)?;
    let (period, pitch) = (r.period.unwrap(), r.pitch.unwrap());
    let n = n_periods.max(1);
    let spec = PlaneSpec::new(kappa, r.eps, f.clone());
    let budget = IntegratorConfig { s_budget: cfg.s_budget.max(period * (n as f64 + 1.0)), ..*cfg };
    let o = integrate_crossings(&spec, State { s: 0.0, x: xi, y: 0.0 }, &budget, 2 * n, Direction::Forward)?;
    if o.terminal.kind != EventKind::MeridianCross {
        return Err(DelaunayError::Inconsistent(format!(
            "closed orbit ended with {:?} before {n} periods",
            o.terminal.kind
        )));
    }
    let points = o.path_points(0.0);
    let mut deviation: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in &points {
        lo = lo.min(p.x);
        hi = hi.max(p.x);
        if p.s + period <= o.last().s {
            if let Some((x2, y2)) = o.interpolate(p.s + period) {
                deviation = deviation.max((x2 - p.x).abs()).max((y2 - p.y).abs());
            }
        }
    }
    Ok(UnduloidData {
        xi,
        period,
        pitch,
        x_range: (lo, hi),
        period_deviation: deviation,
        profile: SurfaceProfile {
            kappa,
            arcs: vec![ProfileArc { eps: r.eps, points }],
            closed: false,
        },
    })
}

/// One ε = +1 arc from the turning circle at the top through `(ξ, 0)` down
/// to `(x₁, −1)`, and the ε = −1 arc that continues from there.
struct DoubleArc {
    plus: Vec<PathPoint>,
    minus: Vec<PathPoint>,
    x_top: f64,
    x1: f64,
    x2: f64,
    r: f64,
    h1: f64,
    h2: f64,
}

fn double_arc(f: &Arc<HFunction>, kappa: Kappa, xi: f64, cfg: &IntegratorConfig) -> Result<DoubleArc, DelaunayError> {
    let plus = PlaneSpec::new(kappa, Sign::Plus, f.clone());
    let minus = PlaneSpec::new(kappa, Sign::Minus, f.clone());
    let s0 = cfg.seed_offset;
    let top = integrate_dir(&plus, State { s: 0.0, x: xi, y: 0.0 }, cfg, &[], Direction::Backward)?;
    if top.terminal.kind != EventKind::Turning || top.terminal.location.y != 1.0 {
        return Err(DelaunayError::Unclassified { terminal: top.terminal });
    }
    let x_top = top.terminal.location.x;

    let h_top = f.h(1.0);
    let a = integrate(&plus, seed_turning(&plus, x_top, Sign::Plus, s0)?, cfg, &[])?;
    if a.terminal.kind != EventKind::Turning || a.terminal.location.y != -1.0 {
        return Err(DelaunayError::Unclassified { terminal: a.terminal });
    }
    let x1 = a.terminal.location.x;
    let start = PathPoint { s: 0.0, x: x_top, y: 1.0, yp: 0.0, z: 0.0 };
    let plus_pts = seeded_points(&a, start, h_top.abs() * s0 * s0);
    let h1 = plus_pts.last().unwrap().z;

    let h_bot = f.h(-1.0);
    let b = integrate(&minus, seed_turning(&minus, x1, Sign::Minus, s0)?, cfg, &[])?;
    if b.terminal.kind != EventKind::Turning || b.terminal.location.y != 1.0 {
        return Err(DelaunayError::Unclassified { terminal: b.terminal });
    }
    let r = b.crossings.first().map(|c| c.x).unwrap_or(f64::NAN);
    let x2 = b.terminal.location.x;
    let s_end = plus_pts.last().unwrap().s;
    let join = PathPoint { s: 0.0, x: x1, y: -1.0, yp: 0.0, z: 0.0 };
    let minus_pts = seeded_points(&b, join, -h_bot.abs() * s0 * s0);
    let h2 = -minus_pts.last().unwrap().z;
    let minus_pts = shifted(&minus_pts, s_end, h1);
    Ok(DoubleArc {
        plus: plus_pts,
        minus: minus_pts,
        x_top,
        x1,
        x2,
        r,
        h1,
        h2,
    })
}

fn repeat(d: &DoubleArc, kappa: Kappa, n: usize, closed: bool) -> SurfaceProfile {
    let s_period = d.minus.last().unwrap().s;
    let dz = d.h1 - d.h2;
    let mut arcs = Vec::with_capacity(2 * n);
    for k in 0..n {
        let (ds, z) = (k as f64 * s_period, k as f64 * dz);
        arcs.push(ProfileArc { eps: Sign::Plus, points: shifted(&d.plus, ds, z) });
        arcs.push(ProfileArc { eps: Sign::Minus, points: shifted(&d.minus, ds, z) });
    }
    SurfaceProfile { kappa, arcs, closed }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodoidData {
    pub xi: f64,
    pub x1: f64,
    pub r: f64,
    pub h1: f64,
    pub h2: f64,
    pub translation: f64,
    pub torus_like: bool,
    pub profile: SurfaceProfile,
}

pub fn build_nodoid(
    f: &Arc<HFunction>,
    kappa: Kappa,
    xi: f64,
    n_periods: usize,
    cfg: &IntegratorConfig,
) -> Result<NodoidData, DelaunayError> {
    require(f, kappa, xi, SurfaceKind::Nodoid, cfg)?;
    let d = double_arc(f, kappa, xi, cfg)?;
    let mismatch = (d.x2 - d.x_top).abs().max((d.x1 - d.x_top).abs());
    if mismatch > GLUE_TOL {
        return Err(DelaunayError::Gluing(mismatch));
    }
    let translation = (d.h1 - d.h2).abs();
    Ok(NodoidData {
        xi,
        x1: d.x1,
        r: d.r,
        h1: d.h1,
        h2: d.h2,
        translation,
        torus_like: translation < TORUS_LIKE_TOL,
        profile: repeat(&d, kappa, n_periods.max(1), false),
    })
}

/// Bisect `x₁(ξ) = π/2` over `ξ ∈ (x₀, π)` (κ = +1).
pub fn find_torus_parameter(f: &Arc<HFunction>, cfg: &IntegratorConfig) -> Result<f64, DelaunayError> {
    let kappa = Kappa::Spherical;
    admissible(f, kappa)?;
    let sphere = build_sphere(f, kappa, cfg)?;
    let spec = PlaneSpec::new(kappa, sphere.eps, f.clone());
    let g = |xi: f64| -> f64 {
        match turning_radius(&spec, xi, cfg) {
            Ok(Ok(x1)) => x1 - FRAC_PI_2,
            _ => f64::NAN,
        }
    };
    let (lo, hi) = (sphere.x0 + 1e-3, PI - 1e-3);
    let n = 48;
    let table: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let xi = lo + (hi - lo) * i as f64 / n as f64;
            (xi, g(xi))
        })
        .collect();
    for w in table.windows(2) {
        let ((a, ga), (b, gb)) = (w[0], w[1]);
        if ga.is_finite() && gb.is_finite() && ga * gb <= 0.0 {
            if ga == 0.0 {
                return Ok(a);
            }
            return Ok(bisect(&g, a, b, 1e-10));
        }
    }
    Err(DelaunayError::NoTorusCrossing { table })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusData {
    pub xi_star: f64,
    pub x1: f64,
    pub r: f64,
    pub h1: f64,
    pub h2: f64,
    /// Distance in `(x, y, z)` between the end of the double arc and its start.
    pub closure_defect: f64,
    /// Deviation of the ε = −1 arc from the reflection `x ↦ π − x` of the
    /// ε = +1 arc.
    pub mirror_defect: f64,
    pub profile: SurfaceProfile,
}

pub fn build_torus(f: &Arc<HFunction>, cfg: &IntegratorConfig) -> Result<TorusData, DelaunayError> {
    let kappa = Kappa::Spherical;
    let xi = find_torus_parameter(f, cfg)?;
    require(f, kappa, xi, SurfaceKind::Torus, cfg)?;
    let d = double_arc(f, kappa, xi, cfg)?;
    let start = d.plus[0];
    let end = d.minus.last().unwrap();
    let closure_defect = (end.x - start.x)
        .abs()
        .max((end.y - start.y).abs())
        .max((end.z - start.z).abs());

    // Compare the ε = −1 arc against the reflected ε = +1 arc at equal
    // arc length from their turning circles.
    let s_mid = d.plus.last().unwrap().s;
    let mut mirror_defect: f64 = 0.0;
    for q in &d.minus {
        let t = q.s - s_mid;
        if let Some((x, y)) = interp(&d.plus, t) {
            mirror_defect = mirror_defect.max((q.x - (PI - x)).abs()).max((q.y + y).abs());
        }
    }
    Ok(TorusData {
        xi_star: xi,
        x1: d.x1,
        r: d.r,
        h1: d.h1,
        h2: d.h2,
        closure_defect,
        mirror_defect,
        profile: repeat(&d, kappa, 1, true),
    })
}

/// Cubic Hermite interpolation of `(x, y)` along refined points, using
/// `x′ = y` and `y′ = yp`.
fn interp(pts: &[PathPoint], s: f64) -> Option<(f64, f64)> {
    if pts.is_empty() || s < pts[0].s || s > pts[pts.len() - 1].s {
        return None;
    }
    let k = pts.partition_point(|p| p.s <= s).clamp(1, pts.len() - 1);
    let (a, b) = (&pts[k - 1], &pts[k]);
    let h = b.s - a.s;
    if h == 0.0 {
        return Some((a.x, a.y));
    }
    let t = (s - a.s) / h;
    let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
    let h10 = t * (1.0 - t) * (1.0 - t);
    let h01 = t * t * (3.0 - 2.0 * t);
    let h11 = t * t * (t - 1.0);
    let x = h00 * a.x + h10 * h * a.y + h01 * b.x + h11 * h * b.y;
    let y = h00 * a.y + h10 * h * a.yp + h01 * b.y + h11 * h * b.yp;
    Some((x, y))
}

impl SurfaceProfile {
    /// Distance between the first and last point in `(x, y, z)`.
    pub fn closure_defect(&self) -> f64 {
        match (self.arcs.first().and_then(|a| a.points.first()), self.end()) {
            (Some(a), Some(b)) => (a.x - b.x).abs().max((a.y - b.y).abs()).max((a.z - b.z).abs()),
            _ => f64::NAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(src: &str) -> Arc<HFunction> {
        Arc::new(HFunction::parse(src).unwrap())
    }

    #[test]
    fn necessary_checks() {
        assert_eq!(check_closed_necessary(&h("1+y^2"), Kappa::Hyperbolic).product, 4.0);
        assert_eq!(check_closed_necessary(&h("1+y^2"), Kappa::Hyperbolic).verdict, Verdict::Pass);
        assert_eq!(check_closed_necessary(&h("y"), Kappa::Hyperbolic).verdict, Verdict::Fail);
        assert_eq!(check_closed_necessary(&h("1-y^2"), Kappa::Spherical).verdict, Verdict::PassAsSlice);
        assert_eq!(check_sphere_necessary(&h("1"), Kappa::Hyperbolic).unwrap().verdict, Verdict::Pass);
        let c = check_sphere_necessary(&h("0.5"), Kappa::Hyperbolic).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert!(c.witness.unwrap().abs() < 1e-6);
        let c = check_sphere_necessary(&h("y^2 - 0.25"), Kappa::Spherical).unwrap();
        assert_eq!((c.verdict, c.multiplicity_sum), (Verdict::Pass, Some(2)));
    }

    #[test]
    fn spheres() {
        let cfg = IntegratorConfig::default();
        let s = build_sphere(&h("1"), Kappa::Hyperbolic, &cfg).unwrap();
        assert!((s.x0 - 3f64.ln()).abs() < 1e-7);
        assert!(s.closure_defect <= 1e-6);
        assert!(s.monotone_ok);
        let s = build_sphere(&h("1"), Kappa::Spherical, &cfg).unwrap();
        assert!((s.x0 - 2.0 * 0.5f64.atan()).abs() < 1e-7);
        let s = build_sphere(&h("1+y^2"), Kappa::Hyperbolic, &cfg).unwrap();
        assert!(s.monotone_ok);
        assert!(s.profile.junction_defects().iter().all(|d| *d < 1e-8));
        assert!(s.profile.mean_residual(&h("1+y^2")) < 1e-7);
        for bad in ["0.4", "0.5"] {
            match build_sphere(&h(bad), Kappa::Hyperbolic, &cfg) {
                Err(DelaunayError::NoSphere { .. }) => {}
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn cylinders() {
        let c = build_cylinder(&h("1"), Kappa::Hyperbolic, Sign::Plus).unwrap();
        assert!((c.radius - 0.5f64.atanh()).abs() < 1e-15);
        assert_eq!(c.mean_curvature, 1.0);
        let a = build_cylinder(&h("1"), Kappa::Spherical, Sign::Plus).unwrap();
        let b = build_cylinder(&h("1"), Kappa::Spherical, Sign::Minus).unwrap();
        assert!((a.radius - 0.5f64.atan()).abs() < 1e-15);
        assert!((b.radius - (PI - 0.5f64.atan())).abs() < 1e-15);
        assert_eq!(build_cylinder(&h("0.4"), Kappa::Hyperbolic, Sign::Plus), Err(DelaunayError::NoEquilibrium));
    }

    #[test]
    fn classification() {
        let cfg = IntegratorConfig::default();
        let one = h("1");
        assert_eq!(classify_initial(&one, Kappa::Hyperbolic, 0.8, &cfg).unwrap().kind, SurfaceKind::Unduloid);
        let r = classify_initial(&one, Kappa::Hyperbolic, 1.5, &cfg).unwrap();
        assert_eq!(r.kind, SurfaceKind::Nodoid);
        let x1_oracle = 1.287770f64.acosh();
        assert!((r.x1.unwrap() - x1_oracle).abs() < 1e-5);
        let r = classify_initial(&one, Kappa::Hyperbolic, 0.5493061, &cfg).unwrap();
        assert_eq!(r.kind, SurfaceKind::Cylinder);
        let xi = PI - 2f64.atan();
        assert_eq!(classify_initial(&one, Kappa::Spherical, xi, &cfg).unwrap().kind, SurfaceKind::Torus);
        assert_eq!(
            classify_initial(&h("1-y^2"), Kappa::Spherical, 1.0, &cfg).unwrap().kind,
            SurfaceKind::MinimalSlice
        );
    }

    #[test]
    fn torus_and_nodoid() {
        let cfg = IntegratorConfig::default();
        let t = build_torus(&h("1"), &cfg).unwrap();
        assert!((t.xi_star - (PI - 2f64.atan())).abs() < 1e-6);
        assert!(t.closure_defect < 1e-6);
        assert!(t.mirror_defect < 1e-7, "{}", t.mirror_defect);
        let n = build_nodoid(&h("1+y^2"), Kappa::Hyperbolic, 1.5, 2, &cfg).unwrap();
        assert!(n.r < n.x1 && n.x1 < n.xi);
        let jd = n.profile.junction_defects();
        assert!(jd.iter().all(|d| *d < 1e-8), "{jd:?} {} {}", n.h1, n.h2);
        assert!(n.translation > 0.0);
    }
}
