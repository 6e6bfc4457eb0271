//! The prescribed function `H: [−1, 1] → ℝ`: parsing, exact derivatives,
//! zeros with multiplicity, evenness and class membership.

mod expr;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

pub use expr::{parse, Expr, Func, ParseError};

use crate::geomk::Kappa;
use crate::roots::{golden_min, scan_roots, ScanSettings};

/// Grid used to certify finiteness of `H` and `H′` at construction.
const FINITE_GRID: usize = 4097;
/// Highest derivative order inspected when computing multiplicities.
pub const MAX_MULTIPLICITY: usize = 6;
/// `|H^(k)(y₀)|` below this counts as vanishing.
pub const VANISH_TOL: f64 = 1e-8;
/// Accepted `|H(y₀)|` at a reported zero.
pub const ROOT_TOL: f64 = 1e-9;
const EVEN_GRID: usize = 1024;
pub const EVEN_TOL: f64 = 1e-10;
const CLASS_GRID: usize = 4097;
/// `min 4H² − (1 − y²)` must exceed this to certify the strict inequality.
pub const CLASS_MARGIN: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("H is not finite at y = {y} ({what} = {value})")]
    NonFinite { y: f64, what: &'static str, value: f64 },
    #[error("y = {0} is outside [-1, 1]")]
    OutOfDomain(f64),
    #[error("derivative order {0} is not supported (use 0 or 1)")]
    BadOrder(u8),
    #[error("zeros of H closer than the resolution threshold near {locations:?}")]
    UnresolvedRoots { locations: Vec<f64> },
    #[error("zero of H at y = {y} has multiplicity > {MAX_MULTIPLICITY}, unresolved")]
    MultiplicityUnresolved { y: f64 },
}

/// A zero of `H` in `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroRecord {
    pub y: f64,
    pub multiplicity: u32,
    pub sign_change: bool,
}

/// Parsed prescribed function with its exact derivative.
#[derive(Debug, Clone)]
pub struct HFunction {
    source: String,
    ast: Expr,
    d_ast: Expr,
    higher: OnceLock<Vec<Expr>>,
    zeros: OnceLock<Result<Vec<ZeroRecord>, HError>>,
}

impl HFunction {
    pub fn parse(source: &str) -> Result<HFunction, HError> {
        let ast = parse(source)?;
        HFunction::from_ast(source, ast)
    }

    pub fn from_ast(source: &str, ast: Expr) -> Result<HFunction, HError> {
        let d_ast = ast.derivative();
        for i in 0..FINITE_GRID {
            let y = -1.0 + 2.0 * i as f64 / (FINITE_GRID - 1) as f64;
            let v = ast.eval(y);
            if !v.is_finite() {
                return Err(HError::NonFinite { y, what: "H", value: v });
            }
            let d = d_ast.eval(y);
            if !d.is_finite() {
                return Err(HError::NonFinite { y, what: "H'", value: d });
            }
        }
        Ok(HFunction {
            source: source.to_string(),
            ast,
            d_ast,
            higher: OnceLock::new(),
            zeros: OnceLock::new(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn derivative_ast(&self) -> &Expr {
        &self.d_ast
    }

    /// `H(y)` without the domain check.
    #[inline]
    pub fn h(&self, y: f64) -> f64 {
        self.ast.eval(y)
    }

    /// `H′(y)` without the domain check.
    #[inline]
    pub fn dh(&self, y: f64) -> f64 {
        self.d_ast.eval(y)
    }

    /// `H` (order 0) or `H′` (order 1) at `y ∈ [−1, 1]`.
    pub fn eval(&self, y: f64, order: u8) -> Result<f64, HError> {
        if !(-1.0..=1.0).contains(&y) {
            return Err(HError::OutOfDomain(y));
        }
        match order {
            0 => Ok(self.h(y)),
            1 => Ok(self.dh(y)),
            o => Err(HError::BadOrder(o)),
        }
    }

    /// `k`-th derivative, `0 ≤ k ≤ MAX_MULTIPLICITY`.
    pub fn nth_derivative(&self, k: usize, y: f64) -> f64 {
        match k {
            0 => self.h(y),
            1 => self.dh(y),
            _ => {
                let higher = self.higher.get_or_init(|| {
                    let mut out = Vec::with_capacity(MAX_MULTIPLICITY - 1);
                    let mut cur = self.d_ast.derivative();
                    for _ in 2..=MAX_MULTIPLICITY {
                        let next = cur.derivative();
                        out.push(cur);
                        cur = next;
                    }
                    out
                });
                higher[k - 2].eval(y)
            }
        }
    }

    /// All zeros in `[−1, 1]`, ascending, with multiplicities.
    pub fn zeros(&self) -> Result<&[ZeroRecord], HError> {
        self.zeros
            .get_or_init(|| compute_zeros(self))
            .as_ref()
            .map(|v| v.as_slice())
            .map_err(Clone::clone)
    }

    pub fn zero_multiplicity_sum(&self) -> Result<u32, HError> {
        Ok(self.zeros()?.iter().map(|z| z.multiplicity).sum())
    }

    /// Evenness certified numerically on a symmetric grid.
    pub fn is_even(&self) -> bool {
        (0..EVEN_GRID).all(|i| {
            let y = -1.0 + 2.0 * i as f64 / (EVEN_GRID - 1) as f64;
            let (a, b) = (self.h(y), self.h(-y));
            (a - b).abs() <= EVEN_TOL * a.abs().max(1.0)
        })
    }
}

impl fmt::Display for HFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn compute_zeros(f: &HFunction) -> Result<Vec<ZeroRecord>, HError> {
    let settings = ScanSettings {
        grid: 4096,
        xtol: 1e-12,
        touch_tol: ROOT_TOL,
        separation: 1e-6,
    };
    let roots = scan_roots(|y| f.h(y), |y| f.dh(y), -1.0, 1.0, &settings)
        .map_err(|c| HError::UnresolvedRoots { locations: c.locations })?;
    roots
        .into_iter()
        .filter(|&y| f.h(y).abs() <= ROOT_TOL)
        .map(|y| {
            let m = (1..=MAX_MULTIPLICITY)
                .find(|&k| f.nth_derivative(k, y).abs() > VANISH_TOL)
                .ok_or(HError::MultiplicityUnresolved { y })? as u32;
            Ok(ZeroRecord {
                y,
                multiplicity: m,
                sign_change: m % 2 == 1,
            })
        })
        .collect()
}

/// Free-function form of [`HFunction::parse`].
pub fn parse_h(source: &str) -> Result<HFunction, HError> {
    HFunction::parse(source)
}

pub fn eval_h(f: &HFunction, y: f64, order: u8) -> Result<f64, HError> {
    f.eval(y, order)
}

pub fn find_zeros(f: &HFunction) -> Result<Vec<ZeroRecord>, HError> {
    f.zeros().map(|z| z.to_vec())
}

pub fn is_even(f: &HFunction) -> bool {
    f.is_even()
}

/// Result of testing `H` against the admissible class for each κ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub kappa: Kappa,
    pub is_even: bool,
    pub satisfies_h2r_inequality: bool,
    /// Minimizer of `4H(y)² − (1 − y²)` over `[−1, 1]`.
    pub inequality_witness: Option<f64>,
    /// `2|H| − √(1 − y²)` at the witness.
    pub inequality_margin: f64,
    /// `None` when the zero structure could not be resolved.
    pub zero_multiplicity_sum: Option<u32>,
    pub admissible_for: BTreeSet<Kappa>,
}

impl ClassReport {
    pub fn admissible(&self) -> bool {
        self.admissible_for.contains(&self.kappa)
    }
}

/// Global minimum of `g(y) = 4H(y)² − (1 − y²)` on `[−1, 1]`: grid scan
/// followed by golden-section refinement around the best node.
pub fn critical_minimum(f: &HFunction) -> (f64, f64) {
    let g = |y: f64| 4.0 * f.h(y).powi(2) - (1.0 - y * y);
    let n = CLASS_GRID;
    let ys: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let (imin, gmin) = ys
        .iter()
        .map(|&y| g(y))
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let lo = ys[imin.saturating_sub(1)];
    let hi = ys[(imin + 1).min(n - 1)];
    let yr = golden_min(g, lo, hi, 1e-13);
    let gr = g(yr);
    if gr < gmin {
        (yr, gr)
    } else {
        (ys[imin], gmin)
    }
}

pub fn class_membership(f: &HFunction, kappa: Kappa) -> ClassReport {
    let even = f.is_even();
    let (w, gmin) = critical_minimum(f);
    let satisfies = gmin > CLASS_MARGIN;
    let mut admissible_for = BTreeSet::new();
    if even {
        admissible_for.insert(Kappa::Spherical);
        if satisfies {
            admissible_for.insert(Kappa::Hyperbolic);
        }
    }
    ClassReport {
        kappa,
        is_even: even,
        satisfies_h2r_inequality: satisfies,
        inequality_witness: Some(w),
        inequality_margin: 2.0 * f.h(w).abs() - (1.0 - w * w).max(0.0).sqrt(),
        zero_multiplicity_sum: f.zero_multiplicity_sum().ok(),
        admissible_for,
    }
}
