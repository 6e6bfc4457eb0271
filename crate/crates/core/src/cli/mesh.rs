//! Surfaces of revolution as triangle meshes in a 3D model of `M²(κ) × ℝ`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::delaunay::SurfaceProfile;
use crate::geomk::{project_model, surface_point, GeomError, Model};

use super::report::fmt_num;

/// Profile rows kept per mesh; longer profiles are thinned evenly.
pub const MAX_ROWS: usize = 800;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices.
    pub faces: Vec<[usize; 3]>,
}

pub fn revolve(profile: &SurfaceProfile, model: Model, theta_samples: usize) -> Result<Mesh, GeomError> {
    let kappa = profile.kappa;
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for arc in &profile.arcs {
        for p in &arc.points {
            if let Some(&(x, z)) = rows.last() {
                if (p.x - x).abs() + (p.z - z).abs() < 1e-7 {
                    continue;
                }
            }
            rows.push((p.x, p.z));
        }
    }
    if rows.len() > MAX_ROWS {
        let step = rows.len().div_ceil(MAX_ROWS);
        let last = *rows.last().unwrap();
        let mut thin: Vec<(f64, f64)> = rows.iter().step_by(step).copied().collect();
        if *thin.last().unwrap() != last {
            thin.push(last);
        }
        rows = thin;
    }
    let wrap = profile.closed && rows.len() > 2 && {
        let (a, b) = (rows[0], rows[rows.len() - 1]);
        (a.0 - b.0).abs() + (a.1 - b.1).abs() < 1e-5
    };
    if wrap {
        rows.pop();
    }

    let pole = |x: f64| x.abs() < 1e-12;
    let mut mesh = Mesh::default();
    let mut starts = Vec::with_capacity(rows.len());
    for &(x, z) in &rows {
        starts.push(mesh.vertices.len());
        if pole(x) {
            mesh.vertices.push(project_model(&surface_point(0.0, z, 0.0, kappa)?, model, kappa)?);
        } else {
            for j in 0..theta_samples {
                let t = 2.0 * PI * j as f64 / theta_samples as f64;
                mesh.vertices.push(project_model(&surface_point(x, z, t, kappa)?, model, kappa)?);
            }
        }
    }
    let n = theta_samples;
    let pairs = rows.len() - 1 + usize::from(wrap);
    for i in 0..pairs {
        let k = (i + 1) % rows.len();
        let (pa, pb) = (pole(rows[i].0), pole(rows[k].0));
        let (a, b) = (starts[i], starts[k]);
        for j in 0..n {
            let j1 = (j + 1) % n;
            match (pa, pb) {
                (false, false) => {
                    mesh.faces.push([a + j, a + j1, b + j1]);
                    mesh.faces.push([a + j, b + j1, b + j]);
                }
                (true, false) => mesh.faces.push([a, b + j1, b + j]),
                (false, true) => mesh.faces.push([a + j, a + j1, b]),
                (true, true) => {}
            }
        }
    }
    Ok(mesh)
}

impl Mesh {
    pub fn to_obj(&self) -> String {
        let mut out = String::with_capacity(48 * (self.vertices.len() + self.faces.len()));
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", fmt_num(v[0]), fmt_num(v[1]), fmt_num(v[2]));
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }

    pub fn from_obj(text: &str) -> Result<Mesh, String> {
        let mut m = Mesh::default();
        for (i, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let c: Vec<f64> = it.map(|t| t.parse::<f64>()).collect::<Result<_, _>>().map_err(|e| format!("line {}: {e}", i + 1))?;
                    if c.len() != 3 {
                        return Err(format!("line {}: expected 3 coordinates", i + 1));
                    }
                    m.vertices.push([c[0], c[1], c[2]]);
                }
                Some("f") => {
                    let c: Vec<usize> = it.map(|t| t.parse::<usize>()).collect::<Result<_, _>>().map_err(|e| format!("line {}: {e}", i + 1))?;
                    if c.len() != 3 || c.iter().any(|&k| k == 0 || k > m.vertices.len()) {
                        return Err(format!("line {}: bad face", i + 1));
                    }
                    m.faces.push([c[0] - 1, c[1] - 1, c[2] - 1]);
                }
                None => {}
                Some(other) => return Err(format!("line {}: unsupported record {other:?}", i + 1)),
            }
        }
        Ok(m)
    }

    /// Number of faces on each undirected edge.
    pub fn edge_use(&self) -> HashMap<(usize, usize), usize> {
        let mut e = HashMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *e.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        e
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_use().len() as i64 + self.faces.len() as i64
    }

    /// Every edge borders two faces.
    pub fn is_closed_manifold(&self) -> bool {
        self.edge_use().values().all(|&c| c == 2)
    }
}
