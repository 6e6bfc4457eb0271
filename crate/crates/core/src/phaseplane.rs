//! Static structure of the phase plane `Θ_ε^κ = (0, x_max) × (−1, 1)` of the
//! first-order profile system
//!
//! ```text
//! x′ = y
//! y′ = (1 − y²) / tan_κ x − 2 ε H(y) √(1 − y²)
//! ```

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::geomk::{cot_k, Kappa, Sign};
use crate::hfunc::{HError, HFunction};
use crate::roots::{scan_roots, ScanSettings};

/// `|H′(0)|` above this rules out the center linearization.
pub const EVEN_AT_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlaneError {
    #[error("x = {x} is outside the phase strip (0, {x_max})")]
    OutsideStrip { x: f64, x_max: f64 },
    #[error("|y| = {0} exceeds 1")]
    AngleOutOfRange(f64),
    #[error("point ({x}, {y}) lies on the curve y' = 0")]
    OnGamma { x: f64, y: f64 },
    #[error("point ({x}, 0) lies on the axis y = 0 where orbits cross orthogonally")]
    OnAxis { x: f64 },
    #[error("asymptotes of the y' = 0 curve only occur for kappa = -1")]
    NotHyperbolic,
    #[error("H'(0) = {0} is not zero; the center linearization requires an even H")]
    NotEvenAtZero(f64),
    #[error("({x}, 0) is not an equilibrium (|F| = {residual})")]
    NotEquilibrium { x: f64, residual: f64 },
    #[error("root scan failed near {0:?}")]
    Unresolved(Vec<f64>),
    #[error(transparent)]
    H(#[from] HError),
}

/// One phase plane `Θ_ε^κ` for a prescribed function.
#[derive(Debug, Clone)]
pub struct PlaneSpec {
    pub kappa: Kappa,
    pub eps: Sign,
    pub f: Arc<HFunction>,
}

impl PlaneSpec {
    pub fn new(kappa: Kappa, eps: Sign, f: Arc<HFunction>) -> Self {
        Self { kappa, eps, f }
    }

    /// The same function on the opposite branch.
    pub fn flipped(&self) -> PlaneSpec {
        PlaneSpec::new(self.kappa, self.eps.flip(), self.f.clone())
    }

    pub fn x_max(&self) -> f64 {
        self.kappa.x_max()
    }

    pub fn in_strip(&self, x: f64) -> bool {
        x > 0.0 && x < self.x_max()
    }

    /// `2εH(y)`.
    #[inline]
    pub fn two_eps_h(&self, y: f64) -> f64 {
        2.0 * self.eps.value() * self.f.h(y)
    }

    /// Vector field without domain checks; `1 − y²` is clamped at zero.
    #[inline]
    pub fn field(&self, x: f64, y: f64) -> (f64, f64) {
        let w2 = (1.0 - y * y).max(0.0);
        (y, w2 * cot_k(self.kappa, x) - self.two_eps_h(y) * w2.sqrt())
    }
}

pub fn vector_field(spec: &PlaneSpec, x: f64, y: f64) -> Result<(f64, f64), PlaneError> {
    if !spec.in_strip(x) {
        return Err(PlaneError::OutsideStrip { x, x_max: spec.x_max() });
    }
    if !(y.abs() <= 1.0) {
        return Err(PlaneError::AngleOutOfRange(y));
    }
    if y.abs() == 1.0 {
        return Ok((y, 0.0));
    }
    Ok(spec.field(x, y))
}

/// x-coordinate of the curve `y′ = 0` at height `y`.
///
/// For κ = −1 this is `artanh(√(1−y²) / 2εH(y))` and is absent wherever the
/// argument leaves `(0, 1)`. For κ = +1 the value is lifted continuously
/// into `(0, π)` through the zeros of `H`: the two-argument arctangent
/// `atan2(√(1−y²), 2εH(y))` adds `π` to the principal branch exactly where
/// `εH` is negative, which is the branch bookkeeping at sign-changing zeros.
pub fn gamma_x(spec: &PlaneSpec, y: f64) -> Option<f64> {
    if !(y.abs() <= 1.0) {
        return None;
    }
    let w = (1.0 - y * y).sqrt();
    let h2 = spec.two_eps_h(y);
    match spec.kappa {
        Kappa::Hyperbolic => {
            if h2 <= 0.0 {
                return None;
            }
            let arg = w / h2;
            (arg < 1.0).then(|| arg.atanh())
        }
        Kappa::Spherical => Some(w.atan2(h2)),
    }
}

/// A y-interval on which `Γ` is defined and continuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaBranch {
    pub y_lo: f64,
    pub y_hi: f64,
}

/// Zero of `H` crossed by `Γ` (κ = +1); `shifted` records a π-shift of the
/// principal arctangent branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaJunction {
    pub y: f64,
    pub multiplicity: u32,
    pub shifted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaCurve {
    pub branches: Vec<GammaBranch>,
    pub asymptote_ys: Vec<f64>,
    pub junctions: Vec<GammaJunction>,
}

impl GammaCurve {
    /// Polylines `(x, y)` through each branch, clipped to `x <= x_clip`.
    pub fn polylines(&self, spec: &PlaneSpec, per_branch: usize, x_clip: f64) -> Vec<Vec<(f64, f64)>> {
        let mut out = Vec::new();
        for b in &self.branches {
            let mut cur: Vec<(f64, f64)> = Vec::new();
            for i in 0..=per_branch {
                let t = i as f64 / per_branch as f64;
                // Cosine spacing clusters points near asymptotes and endpoints.
                let u = 0.5 - 0.5 * (PI * t).cos();
                let y = b.y_lo + (b.y_hi - b.y_lo) * u;
                match gamma_x(spec, y) {
                    Some(x) if x.is_finite() && x <= x_clip => cur.push((x, y)),
                    _ => {
                        if cur.len() > 1 {
                            out.push(std::mem::take(&mut cur));
                        } else {
                            cur.clear();
                        }
                    }
                }
            }
            if cur.len() > 1 {
                out.push(cur);
            }
        }
        out
    }
}

pub fn gamma_curve(spec: &PlaneSpec) -> Result<GammaCurve, PlaneError> {
    match spec.kappa {
        Kappa::Spherical => {
            let junctions = spec
                .f
                .zeros()?
                .iter()
                .filter(|z| z.y.abs() < 1.0)
                .map(|z| GammaJunction {
                    y: z.y,
                    multiplicity: z.multiplicity,
                    shifted: z.sign_change,
                })
                .collect();
            Ok(GammaCurve {
                branches: vec![GammaBranch { y_lo: -1.0, y_hi: 1.0 }],
                asymptote_ys: Vec::new(),
                junctions,
            })
        }
        Kappa::Hyperbolic => {
            let asymptote_ys = gamma_asymptotes(spec)?;
            let zero_ys: Vec<f64> = spec.f.zeros()?.iter().map(|z| z.y).collect();
            let mut cuts: Vec<f64> = vec![-1.0, 1.0];
            cuts.extend(&asymptote_ys);
            cuts.extend(zero_ys);
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cuts.dedup();
            let branches = cuts
                .windows(2)
                .filter(|w| w[1] > w[0])
                .filter(|w| gamma_x(spec, 0.5 * (w[0] + w[1])).is_some())
                .map(|w| GammaBranch { y_lo: w[0], y_hi: w[1] })
                .collect();
            Ok(GammaCurve {
                branches,
                asymptote_ys,
                junctions: Vec::new(),
            })
        }
    }
}

/// Heights `y₀ ∈ (−1, 1)` with `√(1 − y₀²) = 2εH(y₀)` (κ = −1 only).
pub fn gamma_asymptotes(spec: &PlaneSpec) -> Result<Vec<f64>, PlaneError> {
    if spec.kappa != Kappa::Hyperbolic {
        return Err(PlaneError::NotHyperbolic);
    }
    let e = spec.eps.value();
    let f = &spec.f;
    let d = |y: f64| (1.0 - y * y).max(0.0).sqrt() - 2.0 * e * f.h(y);
    let dd = |y: f64| -y / (1.0 - y * y).max(0.0).sqrt() - 2.0 * e * f.dh(y);
    let settings = ScanSettings {
        grid: 4096,
        xtol: 1e-12,
        touch_tol: 1e-10,
        separation: 1e-6,
    };
    let roots = scan_roots(d, dd, -1.0, 1.0, &settings).map_err(|c| PlaneError::Unresolved(c.locations))?;
    Ok(roots.into_iter().filter(|y| y.abs() < 1.0 - 1e-12).collect())
}

/// A fixed point `(x₀, 0)` of the system, i.e. a vertical CMC cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumPoint {
    pub x0: f64,
    pub eps: Sign,
    /// `κ + 4H(0)² > 0`: the linearization has purely imaginary eigenvalues.
    pub center_candidate: bool,
    /// κ = +1 with `H(0) = 0`: the equilibria of both branches sit at `π/2`.
    pub coincident: bool,
}

pub fn equilibria(spec: &PlaneSpec) -> Vec<EquilibriumPoint> {
    let h0 = spec.f.h(0.0);
    let center_candidate = spec.kappa.value() + 4.0 * h0 * h0 > 0.0;
    let x0 = match spec.kappa {
        Kappa::Hyperbolic => {
            let h = spec.eps.value() * h0;
            if h <= 0.0 {
                return Vec::new();
            }
            let arg = 1.0 / (2.0 * h);
            if arg >= 1.0 {
                return Vec::new();
            }
            arg.atanh()
        }
        // e₀ for ε = −1 is the π-complement of the ε = +1 value.
        Kappa::Spherical => 1f64.atan2(spec.two_eps_h(0.0)),
    };
    vec![EquilibriumPoint {
        x0,
        eps: spec.eps,
        center_candidate,
        coincident: spec.kappa == Kappa::Spherical && h0 == 0.0,
    }]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Linearization {
    pub matrix: [[f64; 2]; 2],
    /// Eigenvalues as `(re, im)` pairs.
    pub eigenvalues: [(f64, f64); 2],
    pub center_candidate: bool,
}

impl Linearization {
    /// Period `2π / ω` of the linear rotation, when it is a center.
    pub fn period(&self) -> Option<f64> {
        self.center_candidate.then(|| 2.0 * PI / self.eigenvalues[0].1)
    }
}

/// Linearized system `[[0, 1], [−κ − 4H(0)², 0]]` at an equilibrium.
pub fn linearization(spec: &PlaneSpec, e: &EquilibriumPoint) -> Result<Linearization, PlaneError> {
    let (dx, dy) = vector_field(spec, e.x0, 0.0)?;
    let residual = dx.hypot(dy);
    if residual > 1e-9 {
        return Err(PlaneError::NotEquilibrium { x: e.x0, residual });
    }
    let dh0 = spec.f.dh(0.0);
    if dh0.abs() > EVEN_AT_ZERO_TOL {
        return Err(PlaneError::NotEvenAtZero(dh0));
    }
    let h0 = spec.f.h(0.0);
    let c = spec.kappa.value() + 4.0 * h0 * h0;
    let eigenvalues = if c > 0.0 {
        [(0.0, c.sqrt()), (0.0, -c.sqrt())]
    } else {
        [((-c).sqrt(), 0.0), (-(-c).sqrt(), 0.0)]
    };
    Ok(Linearization {
        matrix: [[0.0, 1.0], [-c, 0.0]],
        eigenvalues,
        center_candidate: c > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    /// `y > 0`, right of `Γ`.
    Lambda1,
    /// `y < 0`, right of `Γ`.
    Lambda2,
    /// `y < 0`, left of `Γ`.
    Lambda3,
    /// `y > 0`, left of `Γ`.
    Lambda4,
}

/// Monotonicity region of a point and the predicted motion of the orbit
/// through it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegionTag {
    pub region: Region,
    /// Sign of `x′(s)`, which is the sign of `y`.
    pub x_increasing: bool,
    /// Sign of `y′(s)`.
    pub y_increasing: bool,
    /// Monotonicity of the local graph `y(x)`.
    pub y_of_x_increasing: bool,
}

pub fn monotonicity(spec: &PlaneSpec, x: f64, y: f64) -> Result<RegionTag, PlaneError> {
    if !spec.in_strip(x) {
        return Err(PlaneError::OutsideStrip { x, x_max: spec.x_max() });
    }
    if !(y.abs() < 1.0) {
        return Err(PlaneError::AngleOutOfRange(y));
    }
    if y == 0.0 {
        return Err(PlaneError::OnAxis { x });
    }
    // y′ is decreasing in x and vanishes on Γ; with no Γ at this height
    // (κ = −1) it is positive everywhere.
    let right_of_gamma = match gamma_x(spec, y) {
        Some(g) => {
            if (x - g).abs() <= 1e-12 * g.max(1.0) {
                return Err(PlaneError::OnGamma { x, y });
            }
            x > g
        }
        None => false,
    };
    let up = y > 0.0;
    let region = match (up, right_of_gamma) {
        (true, true) => Region::Lambda1,
        (false, true) => Region::Lambda2,
        (false, false) => Region::Lambda3,
        (true, false) => Region::Lambda4,
    };
    let y_increasing = !right_of_gamma;
    Ok(RegionTag {
        region,
        x_increasing: up,
        y_increasing,
        y_of_x_increasing: y_increasing == up,
    })
}
