//! Event-driven integration of the profile system.
//!
//! Internally the state is `(x, θ)` with `y = cos θ`, `θ ∈ [0, π]`:
//!
//! ```text
//! x′ = cos θ
//! θ′ = 2εH(cos θ) − sin θ · cot_κ x
//! ```
//!
//! which is the same flow as `(x, y)` but smooth across `|y| = 1`, so turning
//! circles are ordinary zero crossings of `θ` or `π − θ`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;
use thiserror::Error;

use crate::geomk::{cot_k, Kappa, Sign};
use crate::phaseplane::{equilibria, PlaneSpec};

/// `|F|` below which a point counts as the equilibrium.
pub const EQ_FIELD_TOL: f64 = 1e-10;
/// Distance to `(e₀, 0)` below which a point counts as the equilibrium.
pub const EQ_DIST_TOL: f64 = 1e-5;
/// `sin θ` at the axis below which the endpoint is a regular pole.
pub const POLE_ANGLE_TOL: f64 = 1e-3;
/// Return distance on the section `y = 0` that counts as closed.
pub const CLOSE_TOL: f64 = 1e-8;

const MAX_STEPS: usize = 2_000_000;
/// Local error is controlled per unit step, down to this step length, so the
/// dense-output derivative tracks the field to about `rtol`.
const EPUS_FLOOR: f64 = 1e-6;
/// Share of `10·rtol` allowed for the dense-output defect at a step midpoint.
const DEFECT_SHARE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub s: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EventKind {
    PoleReached,
    ForbiddenAxis,
    Turning,
    MeridianCross,
    AntipodalPole,
    EquilibriumApproach,
    ArcLengthBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub location: State,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub s_budget: f64,
    pub pole_tol: f64,
    pub event_tol: f64,
    pub seed_offset: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.05,
            s_budget: 200.0,
            pole_tol: 1e-9,
            event_tol: 1e-12,
            seed_offset: 1e-4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), OrbitError> {
        let all = [
            self.rtol,
            self.atol,
            self.max_step,
            self.s_budget,
            self.pole_tol,
            self.event_tol,
            self.seed_offset,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(OrbitError::BadConfig)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn value(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error("integrator settings must be positive and finite")]
    BadConfig,
    #[error("no orbit leaves ({x}, {delta}) in this plane: eps*H({delta}) = {value} has the wrong sign")]
    SignRule { x: f64, delta: f64, value: f64 },
    #[error("H({0}) = 0: degenerate axis or turning point")]
    DegenerateH(f64),
    #[error("start ({x}, {y}) is outside the phase strip")]
    StartOutside { x: f64, y: f64 },
    #[error("step size underflow at s = {s}, (x, y) = ({x}, {y})")]
    StepUnderflow { s: f64, x: f64, y: f64 },
    #[error("step limit reached at s = {0}")]
    TooManySteps(f64),
    #[error("arc-length budget exhausted before the section was reached twice")]
    Budget,
    #[error("start ({0}, 0) is an equilibrium")]
    AtEquilibrium(f64),
}

/// One accepted point of an orbit; `yp` is `y′` from the field and `theta`
/// is the tangent angle with `y = cos θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitSample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub yp: f64,
    pub theta: f64,
}

/// Dense output of one accepted step (Hairer's continuous extension).
#[derive(Debug, Clone, Copy)]
struct Segment {
    t0: f64,
    h: f64,
    r: [[f64; 2]; 5],
}

impl Segment {
    fn eval(&self, t: f64) -> [f64; 2] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.r;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }

    fn deriv(&self, t: f64) -> [f64; 2] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.r;
        let mut out = [0.0; 2];
        for i in 0..2 {
            let q = r[2][i] + th * (r[3][i] + th1 * r[4][i]);
            let dq = r[3][i] + (1.0 - 2.0 * th) * r[4][i];
            let rr = r[1][i] + th1 * q;
            let drr = -q + th1 * dq;
            out[i] = (rr + th * drr) / self.h;
        }
        out
    }
}

/// An integrated orbit. Samples are ordered in the direction of integration,
/// so `s` decreases along a backward orbit.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub spec: PlaneSpec,
    pub direction: Direction,
    pub samples: Vec<OrbitSample>,
    pub terminal: Event,
    /// Section crossings passed on the way, in order.
    pub crossings: Vec<State>,
    pub z: Option<Vec<f64>>,
    segments: Vec<Segment>,
}

impl Orbit {
    pub fn first(&self) -> &OrbitSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &OrbitSample {
        self.samples.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        (self.last().s - self.first().s).abs()
    }

    /// `(x, y)` at arc length `s` from the dense output.
    pub fn interpolate(&self, s: f64) -> Option<(f64, f64)> {
        let seg = self.segment_at(s)?;
        let u = seg.eval(s);
        Some((u[0], u[1].cos()))
    }

    fn segment_at(&self, s: f64) -> Option<&Segment> {
        if self.segments.is_empty() {
            return None;
        }
        let d = self.direction.value();
        let a = self.first().s;
        let b = self.last().s;
        if d * (s - a) < -1e-15 || d * (s - b) > 1e-15 {
            return None;
        }
        // Segment k spans samples k .. k+1.
        let idx = self.samples.partition_point(|p| d * (p.s - s) <= 0.0);
        let k = idx.saturating_sub(1).min(self.segments.len() - 1);
        Some(&self.segments[k])
    }

    /// Largest deviation of the dense-output derivative from the field at
    /// step midpoints, scaled by `1 + |state|`.
    pub fn midpoint_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, seg) in self.segments.iter().enumerate() {
            let a = self.samples[k].s;
            let b = self.samples[k + 1].s;
            let m = 0.5 * (a + b);
            let u = seg.eval(m);
            let du = seg.deriv(m);
            let f = angle_field(&self.spec, u);
            let scale = 1.0 + u[0].abs() + u[1].abs();
            let r = ((du[0] - f[0]).abs()).max((du[1] - f[1]).abs()) / scale;
            worst = worst.max(r);
        }
        worst
    }

    /// `y′` at each step midpoint from the dense output, paired with the
    /// interpolated state, for curvature checks off the mesh nodes.
    pub fn midpoint_states(&self) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.segments.len());
        for (k, seg) in self.segments.iter().enumerate() {
            let m = 0.5 * (self.samples[k].s + self.samples[k + 1].s);
            let u = seg.eval(m);
            let du = seg.deriv(m);
            out.push((m, u[0], u[1].cos(), -u[1].sin() * du[1]));
        }
        out
    }
}

/// A point of a refined orbit: `yp` comes from the dense-output derivative,
/// which at step midpoints is an independent check on the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub yp: f64,
    pub z: f64,
}

impl Orbit {
    /// Nodes and step midpoints in order, with heights integrated from
    /// `z_start` by Simpson's rule on each half step.
    pub fn path_points(&self, z_start: f64) -> Vec<PathPoint> {
        let e = self.spec.eps.value();
        let first = self.first();
        let mut out = Vec::with_capacity(2 * self.samples.len());
        out.push(PathPoint { s: first.s, x: first.x, y: first.y, yp: first.yp, z: z_start });
        let mut z = z_start;
        for (k, seg) in self.segments.iter().enumerate() {
            let a = self.samples[k];
            let b = self.samples[k + 1];
            let m = 0.5 * (a.s + b.s);
            let q1 = seg.eval(0.5 * (a.s + m))[1].sin();
            let q3 = seg.eval(0.5 * (m + b.s))[1].sin();
            let um = seg.eval(m);
            let dm = seg.deriv(m);
            let half = 0.5 * (b.s - a.s);
            z += e * half / 6.0 * (a.theta.sin() + 4.0 * q1 + um[1].sin());
            out.push(PathPoint { s: m, x: um[0], y: um[1].cos(), yp: -um[1].sin() * dm[1], z });
            z += e * half / 6.0 * (um[1].sin() + 4.0 * q3 + b.theta.sin());
            out.push(PathPoint { s: b.s, x: b.x, y: b.y, yp: b.yp, z });
        }
        out
    }
}

#[inline]
fn angle_field(spec: &PlaneSpec, u: [f64; 2]) -> [f64; 2] {
    let (st, ct) = u[1].sin_cos();
    [ct, spec.two_eps_h(ct) - st * cot_k(spec.kappa, u[0])]
}

fn theta_of(y: f64) -> f64 {
    let y = y.clamp(-1.0, 1.0);
    if y == 0.0 {
        FRAC_PI_2
    } else if y > 0.0 {
        2.0 * ((1.0 - y) / 2.0).sqrt().asin()
    } else {
        PI - 2.0 * ((1.0 + y) / 2.0).sqrt().asin()
    }
}

fn sample(spec: &PlaneSpec, s: f64, u: [f64; 2]) -> OrbitSample {
    let f = angle_field(spec, u);
    OrbitSample {
        s,
        x: u[0],
        y: u[1].cos(),
        yp: -u[1].sin() * f[1],
        theta: u[1],
    }
}

/// Start near the axis point `(0, δ)`, at arc length `δ·s₀` measured from
/// the pole. For `δ = −1` the orbit arrives at the pole, so it is integrated
/// backward from the seed.
pub fn seed_pole(spec: &PlaneSpec, delta: Sign, s0: f64) -> Result<State, OrbitError> {
    let d = delta.value();
    let h = spec.f.h(d);
    if h == 0.0 {
        return Err(OrbitError::DegenerateH(d));
    }
    let value = spec.eps.value() * h;
    if value <= 0.0 {
        return Err(OrbitError::SignRule { x: 0.0, delta: d, value });
    }
    Ok(State {
        s: d * s0,
        x: s0,
        y: d * (1.0 - h * h * s0 * s0 / 2.0),
    })
}

/// Start just off the turning circle `(x₁, δ)`. A positive `s₀` leaves the
/// circle forward and needs `δ·εH(δ) > 0`; a negative one leaves it backward.
pub fn seed_turning(spec: &PlaneSpec, x1: f64, delta: Sign, s0: f64) -> Result<State, OrbitError> {
    let d = delta.value();
    let h = spec.f.h(d);
    if h == 0.0 {
        return Err(OrbitError::DegenerateH(d));
    }
    let value = spec.eps.value() * h;
    if d * value * s0.signum() <= 0.0 {
        return Err(OrbitError::SignRule { x: x1, delta: d, value });
    }
    // Tangent angle off the circle: φ = δ·a·s − a·cot_κ(x₁)·s²/2 with
    // a = 2εH(δ), so that y = δ cos φ = δ(1 − 2H²s²) + O(s³).
    let a = 2.0 * value;
    let phi = d * a * s0 - 0.5 * a * cot_k(spec.kappa, x1) * s0 * s0;
    Ok(State {
        s: s0,
        x: x1 + d * s0,
        y: d * phi.cos(),
    })
}

pub fn integrate(spec: &PlaneSpec, start: State, cfg: &IntegratorConfig, stops: &[EventKind]) -> Result<Orbit, OrbitError> {
    run(spec, start, cfg, stops, Direction::Forward, None)
}

pub fn integrate_dir(
    spec: &PlaneSpec,
    start: State,
    cfg: &IntegratorConfig,
    stops: &[EventKind],
    dir: Direction,
) -> Result<Orbit, OrbitError> {
    run(spec, start, cfg, stops, dir, None)
}

/// Integrate until the `n`-th crossing of `y = 0` (or an earlier boundary).
pub fn integrate_crossings(
    spec: &PlaneSpec,
    start: State,
    cfg: &IntegratorConfig,
    n: usize,
    dir: Direction,
) -> Result<Orbit, OrbitError> {
    run(spec, start, cfg, &[], dir, Some(n))
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct Trial {
    u1: [f64; 2],
    du: [f64; 2],
    k: [[f64; 2]; 7],
    err: f64,
}

fn dp_step(spec: &PlaneSpec, u: [f64; 2], k1: [f64; 2], h: f64, cfg: &IntegratorConfig) -> Trial {
    let mut k = [[0.0; 2]; 7];
    k[0] = k1;
    for i in 1..7 {
        let mut ui = u;
        for (j, kj) in k.iter().enumerate().take(i) {
            let a = A[i][j];
            if a != 0.0 {
                ui[0] += h * a * kj[0];
                ui[1] += h * a * kj[1];
            }
        }
        k[i] = angle_field(spec, ui);
    }
    let mut du = [0.0; 2];
    for (j, kj) in k.iter().enumerate().take(6) {
        du[0] += h * A[6][j] * kj[0];
        du[1] += h * A[6][j] * kj[1];
    }
    let u1 = [u[0] + du[0], u[1] + du[1]];
    let mut acc = 0.0;
    for c in 0..2 {
        let e: f64 = (0..7).map(|j| E[j] * k[j][c]).sum::<f64>() * h;
        let sc = (cfg.atol + cfg.rtol * u[c].abs().max(u1[c].abs())) * h.abs().max(EPUS_FLOOR);
        acc += (e / sc).powi(2);
    }
    let err = (acc / 2.0).sqrt();
    Trial { u1, du, k, err }
}

/// Midpoint mismatch between the interpolant's derivative and the field,
/// relative to its allowance.
fn defect(spec: &PlaneSpec, seg: &Segment, cfg: &IntegratorConfig) -> f64 {
    let m = seg.t0 + 0.5 * seg.h;
    let u = seg.eval(m);
    let du = seg.deriv(m);
    let f = angle_field(spec, u);
    let r = (du[0] - f[0]).abs().max((du[1] - f[1]).abs());
    r / (DEFECT_SHARE * 10.0 * cfg.rtol * (1.0 + u[0].abs() + u[1].abs()))
}

fn dense(u0: [f64; 2], t: &Trial, t0: f64, h: f64) -> Segment {
    let mut r = [[0.0; 2]; 5];
    for c in 0..2 {
        // The increment is kept apart from the state so short steps keep
        // the derivative free of cancellation.
        let ydiff = t.du[c];
        let bspl = h * t.k[0][c] - ydiff;
        r[0][c] = u0[c];
        r[1][c] = ydiff;
        r[2][c] = bspl;
        r[3][c] = ydiff - h * t.k[6][c] - bspl;
        r[4][c] = h * (0..7).map(|j| D[j] * t.k[j][c]).sum::<f64>();
    }
    Segment { t0, h, r }
}

/// Smallest step fraction in `(0, 1]` where `g` crosses from its sign at 0.
fn locate(seg: &Segment, h: f64, g: impl Fn([f64; 2]) -> f64, tol: f64) -> f64 {
    let g0 = g(seg.eval(seg.t0));
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        if (hi - lo) * h.abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(seg.eval(seg.t0 + mid * h));
        if (gm > 0.0) == (g0 > 0.0) && gm != 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn run(
    spec: &PlaneSpec,
    start: State,
    cfg: &IntegratorConfig,
    stops: &[EventKind],
    dir: Direction,
    max_crossings: Option<usize>,
) -> Result<Orbit, OrbitError> {
    cfg.validate()?;
    let x_max = spec.x_max();
    if !(start.x > 0.0 && start.x < x_max && start.y.abs() <= 1.0) {
        return Err(OrbitError::StartOutside { x: start.x, y: start.y });
    }
    let d = dir.value();
    let want = |k: EventKind| stops.contains(&k);
    let eq_x: Vec<f64> = equilibria(spec).iter().map(|e| e.x0).collect();
    let near_eq = |u: [f64; 2]| {
        let f = angle_field(spec, u);
        let y = u[1].cos();
        let fnorm = y.hypot(-u[1].sin() * f[1]);
        fnorm < EQ_FIELD_TOL && eq_x.iter().any(|&e| (u[0] - e).hypot(y) < EQ_DIST_TOL)
    };

    let mut u = [start.x, theta_of(start.y)];
    let mut t = start.s;
    let mut samples = vec![sample(spec, t, u)];
    let mut segments: Vec<Segment> = Vec::new();
    let mut crossings: Vec<State> = Vec::new();

    let finish = |samples: Vec<OrbitSample>, segments, crossings, kind, loc: State| Orbit {
        spec: spec.clone(),
        direction: dir,
        samples,
        terminal: Event { kind, location: loc },
        crossings,
        z: None,
        segments,
    };

    if want(EventKind::EquilibriumApproach) && near_eq(u) {
        return Ok(finish(samples, segments, crossings, EventKind::EquilibriumApproach, start));
    }

    let mut k1 = angle_field(spec, u);
    let mut h = d * cfg.max_step.min(0.01 * start.x.min(1.0)).max(1e-12);
    let mut facold: f64 = 1e-4;
    let mut steps = 0usize;
    let anti = spec.kappa == Kappa::Spherical;

    loop {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(OrbitError::TooManySteps(t));
        }
        let used = (t - start.s).abs();
        let remaining = cfg.s_budget - used;
        let mut habs = h.abs().min(cfg.max_step);
        let mut budget_hit = false;
        if habs >= remaining {
            habs = remaining;
            budget_hit = true;
        }
        if habs < 1e-14 * t.abs().max(1.0) {
            if budget_hit {
                let loc = State { s: t, x: u[0], y: u[1].cos() };
                return Ok(finish(samples, segments, crossings, EventKind::ArcLengthBudget, loc));
            }
            return Err(OrbitError::StepUnderflow { s: t, x: u[0], y: u[1].cos() });
        }
        let hs = d * habs;
        let trial = dp_step(spec, u, k1, hs, cfg);
        let seg = dense(u, &trial, t, hs);
        let err = trial.err.max(defect(spec, &seg, cfg));
        if !err.is_finite() || err > 1.0 {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
            h = hs * fac;
            continue;
        }

        let u1 = trial.u1;

        // Events triggered in this step, as (fraction, kind).
        let mut found: Vec<(f64, EventKind)> = Vec::new();
        let g_mer = |v: [f64; 2]| FRAC_PI_2 - v[1];
        let (m0, m1) = (g_mer(u), g_mer(u1));
        if (m0 != 0.0 && m0 * m1 < 0.0) || (m0 != 0.0 && m1 == 0.0) {
            found.push((locate(&seg, hs, g_mer, cfg.event_tol), EventKind::MeridianCross));
        }
        let g_top = |v: [f64; 2]| v[1];
        let g_bot = |v: [f64; 2]| PI - v[1];
        for g in [&g_top as &dyn Fn([f64; 2]) -> f64, &g_bot] {
            let (a, b) = (g(u), g(u1));
            if (a > 0.0 && b <= 0.0) || (a == 0.0 && b < 0.0) {
                let f = if a == 0.0 { 0.0 } else { locate(&seg, hs, g, cfg.event_tol) };
                found.push((f, EventKind::Turning));
            }
        }
        let g_pole = |v: [f64; 2]| v[0] - cfg.pole_tol;
        if g_pole(u1) <= 0.0 {
            found.push((locate(&seg, hs, g_pole, cfg.event_tol), EventKind::PoleReached));
        }
        if anti {
            let g_anti = |v: [f64; 2]| (PI - cfg.pole_tol) - v[0];
            if g_anti(u1) <= 0.0 {
                found.push((locate(&seg, hs, g_anti, cfg.event_tol), EventKind::AntipodalPole));
            }
        }
        found.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut terminal: Option<(f64, EventKind)> = None;
        for &(frac, kind) in &found {
            if kind == EventKind::MeridianCross {
                let te = t + frac * hs;
                let v = seg.eval(te);
                crossings.push(State { s: te, x: v[0], y: v[1].cos() });
                let enough = max_crossings.is_some_and(|n| crossings.len() >= n);
                if want(kind) || enough {
                    terminal = Some((frac, kind));
                    break;
                }
                continue;
            }
            terminal = Some((frac, kind));
            break;
        }

        if let Some((frac, mut kind)) = terminal {
            let te = t + frac * hs;
            let mut v = seg.eval(te);
            let mut loc_y = v[1].cos();
            match kind {
                EventKind::Turning => {
                    if v[1] < FRAC_PI_2 {
                        v[1] = 0.0;
                        loc_y = 1.0;
                    } else {
                        v[1] = PI;
                        loc_y = -1.0;
                    }
                    if v[0] <= cfg.pole_tol {
                        kind = EventKind::PoleReached;
                    }
                }
                EventKind::PoleReached => {
                    if v[1].sin() > POLE_ANGLE_TOL {
                        kind = EventKind::ForbiddenAxis;
                    }
                }
                EventKind::MeridianCross => loc_y = 0.0,
                _ => {}
            }
            let mut last = sample(spec, te, v);
            last.y = loc_y;
            if frac > 0.0 {
                samples.push(last);
                segments.push(seg);
            } else {
                *samples.last_mut().unwrap() = last;
            }
            let loc = State { s: te, x: v[0], y: loc_y };
            return Ok(finish(samples, segments, crossings, kind, loc));
        }

        t += hs;
        u = u1;
        k1 = trial.k[6];
        samples.push(sample(spec, t, u));
        segments.push(seg);

        if want(EventKind::EquilibriumApproach) && near_eq(u) {
            let loc = State { s: t, x: u[0], y: u[1].cos() };
            return Ok(finish(samples, segments, crossings, EventKind::EquilibriumApproach, loc));
        }
        if budget_hit {
            let loc = State { s: t, x: u[0], y: u[1].cos() };
            return Ok(finish(samples, segments, crossings, EventKind::ArcLengthBudget, loc));
        }

        // PI step-size control.
        let e = err.max(1e-10);
        let fac11 = e.powf(0.17);
        let fac = (fac11 / facold.powf(0.04) / 0.9).clamp(0.1, 5.0);
        facold = err.max(1e-4);
        h = hs / fac;
    }
}

/// Heights along the orbit: cumulative `∫ ε sin θ ds` by Simpson's rule on
/// each step, with the midpoint taken from the dense output.
pub fn z_quadrature(orbit: &mut Orbit, z_start: f64) -> &[f64] {
    let e = orbit.spec.eps.value();
    let mut z = Vec::with_capacity(orbit.samples.len());
    z.push(z_start);
    let mut acc = z_start;
    for (k, seg) in orbit.segments.iter().enumerate() {
        let a = &orbit.samples[k];
        let b = &orbit.samples[k + 1];
        let m = seg.eval(0.5 * (a.s + b.s));
        let ds = b.s - a.s;
        acc += e * ds / 6.0 * (a.theta.sin() + 4.0 * m[1].sin() + b.theta.sin());
        z.push(acc);
    }
    orbit.z = Some(z);
    orbit.z.as_deref().unwrap()
}

#[derive(Debug, Clone)]
pub enum Closure {
    Closed { period: f64, pitch: f64, return_x: f64, orbit: Orbit },
    NotClosed { terminal: Event, orbit: Orbit },
}

impl Closure {
    pub fn is_closed(&self) -> bool {
        matches!(self, Closure::Closed { .. })
    }

    pub fn orbit(&self) -> &Orbit {
        match self {
            Closure::Closed { orbit, .. } | Closure::NotClosed { orbit, .. } => orbit,
        }
    }
}

/// Poincaré return to `y = 0` for the orbit through `(ξ, 0)`.
pub fn detect_closed(spec: &PlaneSpec, xi: f64, cfg: &IntegratorConfig) -> Result<Closure, OrbitError> {
    let start = State { s: 0.0, x: xi, y: 0.0 };
    if let Some((_, dy)) = crate::phaseplane::vector_field(spec, xi, 0.0).ok() {
        if dy.abs() < EQ_FIELD_TOL && equilibria(spec).iter().any(|e| (e.x0 - xi).abs() < EQ_DIST_TOL) {
            return Err(OrbitError::AtEquilibrium(xi));
        }
    }
    let mut orbit = integrate_crossings(spec, start, cfg, 2, Direction::Forward)?;
    match orbit.terminal.kind {
        EventKind::MeridianCross => {
            let loc = orbit.terminal.location;
            let pitch = *z_quadrature(&mut orbit, 0.0).last().unwrap();
            if (loc.x - xi).abs() <= CLOSE_TOL {
                Ok(Closure::Closed {
                    period: loc.s,
                    pitch,
                    return_x: loc.x,
                    orbit,
                })
            } else {
                Ok(Closure::NotClosed {
                    terminal: orbit.terminal,
                    orbit,
                })
            }
        }
        EventKind::ArcLengthBudget => Err(OrbitError::Budget),
        _ => Ok(Closure::NotClosed {
            terminal: orbit.terminal,
            orbit,
        }),
    }
}

/// Conserved quantity of the constant-`H₀` system on the `ε = +1` branch.
pub fn first_integral_cmc(kappa: Kappa, h0: f64, x: f64, y: f64) -> f64 {
    let w = (1.0 - y * y).max(0.0).sqrt();
    match kappa {
        Kappa::Hyperbolic => w * x.sinh() - 2.0 * h0 * (x.cosh() - 1.0),
        Kappa::Spherical => w * x.sin() + 2.0 * h0 * x.cos(),
    }
}
