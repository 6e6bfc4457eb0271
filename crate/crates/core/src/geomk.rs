//! Geometry of `M²(κ) × ℝ`: κ-trigonometry, the quadric model, rotational
//! parametrization, principal curvatures and the plotting projections.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::hfunc::HFunction;

/// Curvature of the base surface: the hyperbolic plane (−1) or the round
/// sphere (+1). The flat case is not modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Kappa {
    #[serde(rename = "-1")]
    Hyperbolic,
    #[serde(rename = "1")]
    Spherical,
}

impl Kappa {
    pub fn value(self) -> f64 {
        match self {
            Kappa::Hyperbolic => -1.0,
            Kappa::Spherical => 1.0,
        }
    }

    pub fn from_int(k: i64) -> Result<Kappa, GeomError> {
        match k {
            -1 => Ok(Kappa::Hyperbolic),
            1 => Ok(Kappa::Spherical),
            other => Err(GeomError::InvalidKappa(other)),
        }
    }

    /// Upper end of the distance-to-axis range (`∞` for κ = −1, `π` for κ = +1).
    pub fn x_max(self) -> f64 {
        match self {
            Kappa::Hyperbolic => f64::INFINITY,
            Kappa::Spherical => PI,
        }
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Hyperbolic => write!(f, "-1"),
            Kappa::Spherical => write!(f, "1"),
        }
    }
}

/// A sign in {−1, +1}; used for the branch ε = sign(z′) and for the pole
/// selector δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Sign {
    #[serde(rename = "-1")]
    Minus,
    #[serde(rename = "1")]
    Plus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }

    pub fn from_int(v: i64) -> Result<Sign, GeomError> {
        match v {
            -1 => Ok(Sign::Minus),
            1 => Ok(Sign::Plus),
            other => Err(GeomError::InvalidSign(other)),
        }
    }

    /// Sign of a nonzero real; `None` for zero or NaN.
    pub fn of(v: f64) -> Option<Sign> {
        if v > 0.0 {
            Some(Sign::Plus)
        } else if v < 0.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Minus => write!(f, "-1"),
            Sign::Plus => write!(f, "1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("kappa must be -1 or 1, got {0}")]
    InvalidKappa(i64),
    #[error("sign must be -1 or 1, got {0}")]
    InvalidSign(i64),
    #[error("{func}_k is asymptotic at {arg}")]
    Asymptote { func: &'static str, arg: f64 },
    #[error("{arg} is outside the domain of {func}_k: {reason}")]
    Domain {
        func: &'static str,
        arg: f64,
        reason: &'static str,
    },
    #[error("projection pole hit: the antipodal axis point has no stereographic image")]
    ProjectionPole,
    #[error("{model:?} projection requires kappa = {required}")]
    ModelMismatch { model: Model, required: Kappa },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigKind {
    Sin,
    Cos,
    Tan,
    Cot,
    Arctan,
}

/// `sin_κ`: `sin` for κ = +1, `sinh` for κ = −1.
pub fn sin_k(kappa: Kappa, t: f64) -> f64 {
    match kappa {
        Kappa::Spherical => t.sin(),
        Kappa::Hyperbolic => t.sinh(),
    }
}

pub fn cos_k(kappa: Kappa, t: f64) -> f64 {
    match kappa {
        Kappa::Spherical => t.cos(),
        Kappa::Hyperbolic => t.cosh(),
    }
}

pub fn tan_k(kappa: Kappa, t: f64) -> f64 {
    match kappa {
        Kappa::Spherical => t.tan(),
        Kappa::Hyperbolic => t.tanh(),
    }
}

pub fn cot_k(kappa: Kappa, t: f64) -> f64 {
    match kappa {
        Kappa::Spherical => t.cos() / t.sin(),
        Kappa::Hyperbolic => 1.0 / t.tanh(),
    }
}

/// Checked κ-trigonometry.
pub fn ktrig(kind: TrigKind, kappa: Kappa, t: f64) -> Result<f64, GeomError> {
    if !t.is_finite() {
        return Err(GeomError::Domain {
            func: "trig",
            arg: t,
            reason: "argument is not finite",
        });
    }
    match kind {
        TrigKind::Sin => Ok(sin_k(kappa, t)),
        TrigKind::Cos => Ok(cos_k(kappa, t)),
        TrigKind::Tan => {
            if kappa == Kappa::Spherical && t.cos() == 0.0 {
                return Err(GeomError::Asymptote { func: "tan", arg: t });
            }
            Ok(tan_k(kappa, t))
        }
        TrigKind::Cot => {
            if t == 0.0 || (kappa == Kappa::Spherical && t.sin() == 0.0) {
                return Err(GeomError::Asymptote { func: "cot", arg: t });
            }
            Ok(cot_k(kappa, t))
        }
        TrigKind::Arctan => match kappa {
            Kappa::Spherical => Ok(t.atan()),
            Kappa::Hyperbolic => {
                if t.abs() == 1.0 {
                    Err(GeomError::Asymptote { func: "arctan", arg: t })
                } else if t.abs() > 1.0 {
                    Err(GeomError::Domain {
                        func: "arctan",
                        arg: t,
                        reason: "artanh requires |t| < 1",
                    })
                } else {
                    Ok(t.atanh())
                }
            }
        },
    }
}

/// A point of `ℝ³_κ × ℝ` on the quadric `x₁² + x₂² + κ x₃² = κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmbientPoint(pub [f64; 4]);

impl AmbientPoint {
    /// Quadric residual, relative to the magnitude of the terms involved
    /// (for κ = −1 the terms grow like `cosh² x`).
    pub fn quadric_residual(&self, kappa: Kappa) -> f64 {
        let [a, b, c, _] = self.0;
        let k = kappa.value();
        let scale = 1.0 + a * a + b * b + c * c;
        (a * a + b * b + k * c * c - k).abs() / scale
    }
}

fn check_x(x: f64, kappa: Kappa) -> Result<(), GeomError> {
    if !(x >= 0.0) {
        return Err(GeomError::Domain {
            func: "profile",
            arg: x,
            reason: "distance to the axis must be non-negative",
        });
    }
    if kappa == Kappa::Spherical && x > PI {
        return Err(GeomError::Domain {
            func: "profile",
            arg: x,
            reason: "distance to the axis cannot exceed pi on the sphere",
        });
    }
    Ok(())
}

/// The profile point `(sin_κ x, 0, cos_κ x, z)`.
pub fn embed_profile(x: f64, z: f64, kappa: Kappa) -> Result<AmbientPoint, GeomError> {
    check_x(x, kappa)?;
    Ok(AmbientPoint([sin_k(kappa, x), 0.0, cos_k(kappa, x), z]))
}

/// The profile point rotated by `theta` about the vertical axis through `(0,0,1)`.
pub fn surface_point(x: f64, z: f64, theta: f64, kappa: Kappa) -> Result<AmbientPoint, GeomError> {
    check_x(x, kappa)?;
    let r = sin_k(kappa, x);
    Ok(AmbientPoint([r * theta.cos(), r * theta.sin(), cos_k(kappa, x), z]))
}

/// One point of a profile curve in phase variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub s: f64,
    /// Distance to the rotation axis.
    pub x: f64,
    /// Angle function, equal to `x′(s)`.
    pub y: f64,
    pub z: f64,
    pub eps: Sign,
}

impl ProfileSample {
    /// `z′ = ε √(1 − y²)`.
    pub fn z_prime(&self) -> f64 {
        self.eps.value() * (1.0 - self.y * self.y).max(0.0).sqrt()
    }
}

/// Principal curvatures `(κ₁, κ₂)` in phase variables:
/// `κ₁ = −ε y′ / √(1−y²)` and `κ₂ = ε √(1−y²) cot_κ x`.
pub fn principal_curvatures(p: &ProfileSample, yprime: f64, kappa: Kappa) -> Result<(f64, f64), GeomError> {
    if p.y.abs() >= 1.0 {
        return Err(GeomError::Domain {
            func: "curvature",
            arg: p.y,
            reason: "the phase-variable formula degenerates at |y| = 1",
        });
    }
    let cot = ktrig(TrigKind::Cot, kappa, p.x)?;
    let w = (1.0 - p.y * p.y).sqrt();
    let e = p.eps.value();
    Ok((-e * yprime / w, e * w * cot))
}

/// Samples with `|y|` beyond this are skipped by [`mean_residual`].
pub const CURVATURE_GUARD: f64 = 1.0 - 1e-6;

/// `max |κ₁ + κ₂ − 2H(y)|` over the samples outside the `|y|` guard band.
pub fn mean_residual(samples: &[(ProfileSample, f64)], f: &HFunction, kappa: Kappa) -> f64 {
    samples
        .iter()
        .filter(|(p, _)| p.y.abs() < CURVATURE_GUARD && p.x > 0.0)
        .filter_map(|(p, yp)| {
            let (k1, k2) = principal_curvatures(p, *yp, kappa).ok()?;
            Some((k1 + k2 - 2.0 * f.h(p.y)).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    PoincareDisk,
    Stereographic,
}

impl Model {
    pub fn for_kappa(kappa: Kappa) -> Model {
        match kappa {
            Kappa::Hyperbolic => Model::PoincareDisk,
            Kappa::Spherical => Model::Stereographic,
        }
    }
}

/// Planar chart of the base, height passed through.
///
/// Both models send `(x₁, x₂, x₃)` to `(x₁, x₂) / (1 + x₃)`; for κ = −1 this
/// is the Poincaré disk, for κ = +1 the stereographic projection from
/// `(0, 0, −1)`, so the rotation axis maps to the origin.
pub fn project_model(p: &AmbientPoint, model: Model, kappa: Kappa) -> Result<[f64; 3], GeomError> {
    let required = match model {
        Model::PoincareDisk => Kappa::Hyperbolic,
        Model::Stereographic => Kappa::Spherical,
    };
    if kappa != required {
        return Err(GeomError::ModelMismatch { model, required });
    }
    let [a, b, c, z] = p.0;
    let denom = 1.0 + c;
    if model == Model::Stereographic && denom.abs() <= 1e-15 {
        return Err(GeomError::ProjectionPole);
    }
    Ok([a / denom, b / denom, z])
}
