//! Phase portraits: Γ, asymptotes, equilibria and a fan of orbits, rendered
//! as SVG or tabulated as CSV.

use std::fmt::Write as _;

use crate::delaunay::build_sphere;
use crate::geomk::{Kappa, Sign};
use crate::orbit::{integrate_crossings, integrate_dir, seed_pole, Direction, EventKind, IntegratorConfig, State};
use crate::phaseplane::{equilibria, gamma_asymptotes, gamma_curve, PlaneSpec};

use super::csv::write_portrait;

/// Right edge of the plotted strip for κ = −1.
pub const HYPERBOLIC_X_PLOT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitRole {
    /// The two halves of the sphere orbit.
    Separatrix,
    /// An orbit leaving the axis that does not close up.
    Axis,
    Fan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortraitOrbit {
    pub id: usize,
    pub role: OrbitRole,
    /// `(s, x, y)` in order along the orbit.
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Portrait {
    pub kappa: Kappa,
    pub eps: Sign,
    pub title: String,
    pub x_plot: f64,
    pub gamma: Vec<Vec<(f64, f64)>>,
    pub asymptotes: Vec<f64>,
    pub equilibria: Vec<f64>,
    pub orbits: Vec<PortraitOrbit>,
}

pub fn build_portrait(spec: &PlaneSpec, n_fan: usize, cfg: &IntegratorConfig) -> Portrait {
    let x_plot = match spec.kappa {
        Kappa::Spherical => std::f64::consts::PI,
        Kappa::Hyperbolic => HYPERBOLIC_X_PLOT,
    };
    let gamma = gamma_curve(spec)
        .map(|g| g.polylines(spec, 400, x_plot))
        .unwrap_or_default();
    let asymptotes = match spec.kappa {
        Kappa::Hyperbolic => gamma_asymptotes(spec).unwrap_or_default(),
        Kappa::Spherical => Vec::new(),
    };
    let eq: Vec<f64> = equilibria(spec).iter().map(|e| e.x0).collect();
    let plot_cfg = IntegratorConfig { s_budget: cfg.s_budget.min(4.0 * x_plot), ..*cfg };

    let mut orbits = Vec::new();
    let mut next_id = 0;
    let mut add = |role, points: Vec<(f64, f64, f64)>, orbits: &mut Vec<PortraitOrbit>| {
        if points.len() > 1 {
            orbits.push(PortraitOrbit { id: next_id, role, points });
            next_id += 1;
        }
    };

    match build_sphere(&spec.f, spec.kappa, cfg) {
        Ok(sp) if sp.eps == spec.eps => {
            for arc in &sp.profile.arcs {
                add(OrbitRole::Separatrix, arc.points.iter().map(|p| (p.s, p.x, p.y)).collect(), &mut orbits);
            }
        }
        _ => {
            for (delta, dir) in [(Sign::Plus, Direction::Forward), (Sign::Minus, Direction::Backward)] {
                if let Ok(seed) = seed_pole(spec, delta, cfg.seed_offset) {
                    if let Ok(o) = integrate_dir(spec, seed, &plot_cfg, &[EventKind::EquilibriumApproach], dir) {
                        let mut pts: Vec<_> = o.samples.iter().map(|p| (p.s, p.x, p.y)).collect();
                        if dir == Direction::Backward {
                            pts.reverse();
                        }
                        add(OrbitRole::Axis, pts, &mut orbits);
                    }
                }
            }
        }
    }

    for k in 1..=n_fan {
        let xi = x_plot * k as f64 / (n_fan + 1) as f64;
        if eq.iter().any(|e| (e - xi).abs() < 1e-6) {
            continue;
        }
        let start = State { s: 0.0, x: xi, y: 0.0 };
        let Ok(fwd) = integrate_crossings(spec, start, &plot_cfg, 2, Direction::Forward) else {
            continue;
        };
        let closed = fwd.terminal.kind == EventKind::MeridianCross && (fwd.terminal.location.x - xi).abs() < 1e-6;
        let mut pts: Vec<(f64, f64, f64)> = Vec::new();
        if !closed {
            if let Ok(bwd) = integrate_crossings(spec, start, &plot_cfg, 1, Direction::Backward) {
                pts.extend(bwd.samples.iter().rev().map(|p| (p.s, p.x, p.y)));
                pts.pop();
            }
        }
        pts.extend(fwd.samples.iter().map(|p| (p.s, p.x, p.y)));
        add(OrbitRole::Fan, pts, &mut orbits);
    }

    Portrait {
        kappa: spec.kappa,
        eps: spec.eps,
        title: format!("kappa={} eps={} H(y)={}", spec.kappa, spec.eps, spec.f.source()),
        x_plot,
        gamma,
        asymptotes,
        equilibria: eq,
        orbits,
    }
}

impl Portrait {
    pub fn to_csv(&self) -> String {
        let rows: Vec<(usize, Vec<(f64, f64, f64)>)> = self.orbits.iter().map(|o| (o.id, o.points.clone())).collect();
        write_portrait(&rows)
    }

    pub fn to_svg(&self) -> String {
        const W: f64 = 720.0;
        const H: f64 = 400.0;
        const M: f64 = 48.0;
        let px = |x: f64| M + x / self.x_plot * (W - 2.0 * M);
        let py = |y: f64| M + (1.0 - y) / 2.0 * (H - 2.0 * M);
        let n = |v: f64| {
            let s = format!("{v:.2}");
            if s == "-0.00" {
                "0.00".to_string()
            } else {
                s
            }
        };

        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
        );
        out.push_str(
            "<style>\n\
             .frame{fill:none;stroke:#000;stroke-width:1}\n\
             .axis{stroke:#888;stroke-width:0.5}\n\
             .tick{font:11px sans-serif;fill:#000}\n\
             .gamma{fill:none;stroke:#1a9850;stroke-width:1.5}\n\
             .asymptote{stroke:#1a9850;stroke-width:1;stroke-dasharray:4 3}\n\
             .separatrix{fill:none;stroke:#d73027;stroke-width:1.5}\n\
             .axis-orbit{fill:none;stroke:#fc8d59;stroke-width:1}\n\
             .orbit{fill:none;stroke:#4575b4;stroke-width:0.8}\n\
             .equilibrium{fill:#000}\n\
             </style>\n",
        );
        let _ = writeln!(out, "<text class=\"tick\" x=\"{}\" y=\"20\">{}</text>", n(M), xml_escape(&self.title));
        let _ = writeln!(
            out,
            "<rect class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>",
            n(M),
            n(M),
            n(W - 2.0 * M),
            n(H - 2.0 * M)
        );
        let _ = writeln!(out, "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", n(px(0.0)), n(py(0.0)), n(px(self.x_plot)), n(py(0.0)));
        let nx = 6;
        for i in 0..=nx {
            let x = self.x_plot * i as f64 / nx as f64;
            let _ = writeln!(
                out,
                "<text class=\"tick\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                n(px(x)),
                n(H - M + 16.0),
                format_args!("{x:.3}")
            );
        }
        for y in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let _ = writeln!(
                out,
                "<text class=\"tick\" x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
                n(M - 6.0),
                n(py(y) + 4.0),
                format_args!("{y:.1}")
            );
        }
        for &y0 in &self.asymptotes {
            let _ = writeln!(
                out,
                "<line class=\"asymptote\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                n(px(0.0)),
                n(py(y0)),
                n(px(self.x_plot)),
                n(py(y0))
            );
        }
        for line in &self.gamma {
            polyline(&mut out, "gamma", line.iter().map(|&(x, y)| (px(x), py(y))), &n);
        }
        for o in &self.orbits {
            let class = match o.role {
                OrbitRole::Separatrix => "separatrix",
                OrbitRole::Axis => "axis-orbit",
                OrbitRole::Fan => "orbit",
            };
            // Split where the orbit leaves the plotted window.
            let mut piece: Vec<(f64, f64)> = Vec::new();
            for &(_, x, y) in &o.points {
                if x <= self.x_plot && x >= 0.0 {
                    piece.push((px(x), py(y)));
                } else if !piece.is_empty() {
                    polyline(&mut out, class, piece.drain(..), &n);
                }
            }
            polyline(&mut out, class, piece.into_iter(), &n);
        }
        for &e in &self.equilibria {
            let _ = writeln!(out, "<circle class=\"equilibrium\" cx=\"{}\" cy=\"{}\" r=\"3\"/>", n(px(e)), n(py(0.0)));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn polyline(out: &mut String, class: &str, pts: impl Iterator<Item = (f64, f64)>, n: &dyn Fn(f64) -> String) {
    let mut kept: Vec<(f64, f64)> = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    let mut pending: Option<(f64, f64)> = None;
    for p in pts {
        match last {
            Some(q) if (p.0 - q.0).hypot(p.1 - q.1) < 0.5 => pending = Some(p),
            _ => {
                kept.push(p);
                last = Some(p);
                pending = None;
            }
        }
    }
    if let Some(p) = pending {
        kept.push(p);
    }
    if kept.len() < 2 {
        return;
    }
    let coords: Vec<String> = kept.iter().map(|&(x, y)| format!("{},{}", n(x), n(y))).collect();
    let _ = writeln!(out, "<polyline class=\"{class}\" points=\"{}\"/>", coords.join(" "));
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
