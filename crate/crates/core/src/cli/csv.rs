//! Profile and portrait tables as RFC 4180 CSV (header row, CRLF line ends).

use std::fmt::Write as _;

use crate::delaunay::SurfaceProfile;
use crate::geomk::Sign;

use super::report::fmt_num;

pub const PROFILE_HEADER: &str = "arc_id,eps,s,x,y,z";
pub const PORTRAIT_HEADER: &str = "orbit_id,s,x,y";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub arc_id: usize,
    pub eps: i8,
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub fn profile_rows(p: &SurfaceProfile) -> Vec<ProfileRow> {
    p.arcs
        .iter()
        .enumerate()
        .flat_map(|(i, a)| {
            let eps = if a.eps == Sign::Plus { 1 } else { -1 };
            a.points.iter().map(move |q| ProfileRow { arc_id: i, eps, s: q.s, x: q.x, y: q.y, z: q.z })
        })
        .collect()
}

pub fn write_profile(rows: &[ProfileRow]) -> String {
    let mut out = String::with_capacity(64 * rows.len());
    out.push_str(PROFILE_HEADER);
    out.push_str("\r\n");
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{}\r\n",
            r.arc_id,
            r.eps,
            fmt_num(r.s),
            fmt_num(r.x),
            fmt_num(r.y),
            fmt_num(r.z)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for CsvError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for CsvError {}

pub fn read_profile(text: &str) -> Result<Vec<ProfileRow>, CsvError> {
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    let header = lines.next().unwrap_or("");
    if header != PROFILE_HEADER {
        return Err(CsvError { line: 1, message: format!("expected header {PROFILE_HEADER:?}") });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| CsvError { line: i + 2, message: m.to_string() };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(err("expected 6 fields"));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| err(&format!("bad number {:?}", f[k])));
        rows.push(ProfileRow {
            arc_id: f[0].parse().map_err(|_| err("bad arc_id"))?,
            eps: f[1].parse().map_err(|_| err("bad eps"))?,
            s: num(2)?,
            x: num(3)?,
            y: num(4)?,
            z: num(5)?,
        });
    }
    Ok(rows)
}

pub fn write_portrait(orbits: &[(usize, Vec<(f64, f64, f64)>)]) -> String {
    let mut out = String::new();
    out.push_str(PORTRAIT_HEADER);
    out.push_str("\r\n");
    for (id, pts) in orbits {
        for &(s, x, y) in pts {
            let _ = write!(out, "{},{},{},{}\r\n", id, fmt_num(s), fmt_num(x), fmt_num(y));
        }
    }
    out
}
