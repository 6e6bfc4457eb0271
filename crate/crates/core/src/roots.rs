//! Scalar root scanning on a bounded interval.
//!
//! Roots are located by a uniform grid scan followed by bisection. Sign
//! changes of the function catch odd-multiplicity roots; sign changes of the
//! derivative whose refined location has a near-zero function value catch
//! touching (even-multiplicity) roots.

/// Grid and tolerance settings for [`scan_roots`].
#[derive(Debug, Clone, Copy)]
pub struct ScanSettings {
    /// Number of grid points (including both endpoints).
    pub grid: usize,
    /// Bisection stops once the bracket is narrower than this.
    pub xtol: f64,
    /// A derivative critical point is a root when `|f| <= touch_tol` there.
    pub touch_tol: f64,
    /// Distinct roots closer than this cannot be resolved.
    pub separation: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            grid: 4096,
            xtol: 1e-12,
            touch_tol: 1e-9,
            separation: 1e-6,
        }
    }
}

/// Two or more candidate roots closer than the separation threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct UnresolvedCluster {
    pub locations: Vec<f64>,
}

/// Bisection on a sign-changing bracket `[a, b]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    if f(b) == 0.0 {
        return b;
    }
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// All roots of `f` on `[lo, hi]`, sorted ascending.
pub fn scan_roots(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    settings: &ScanSettings,
) -> Result<Vec<f64>, UnresolvedCluster> {
    let n = settings.grid.max(2);
    let ys: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let vals: Vec<f64> = ys.iter().map(|&y| f(y)).collect();
    let dvals: Vec<f64> = ys.iter().map(|&y| df(y)).collect();

    let mut cands: Vec<f64> = Vec::new();
    for i in 0..n {
        if vals[i] == 0.0 || (dvals[i] == 0.0 && vals[i].abs() <= settings.touch_tol) {
            cands.push(ys[i]);
        }
    }
    if vals[0].abs() <= settings.touch_tol {
        cands.push(lo);
    }
    if vals[n - 1].abs() <= settings.touch_tol {
        cands.push(hi);
    }
    for i in 0..n - 1 {
        let (a, b) = (ys[i], ys[i + 1]);
        if vals[i] * vals[i + 1] < 0.0 {
            cands.push(bisect(&f, a, b, settings.xtol));
        }
        if dvals[i] * dvals[i + 1] < 0.0 {
            let c = bisect(&df, a, b, settings.xtol);
            if f(c).abs() <= settings.touch_tol {
                cands.push(c);
            }
        }
    }

    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // The same root is often reached through both routes.
    let merge_tol = 1e3 * settings.xtol;
    let mut roots: Vec<f64> = Vec::new();
    for c in cands {
        match roots.last_mut() {
            Some(last) if (c - *last).abs() <= merge_tol => {
                if f(c).abs() < f(*last).abs() {
                    *last = c;
                }
            }
            _ => roots.push(c),
        }
    }
    let clustered: Vec<f64> = roots
        .windows(2)
        .filter(|w| w[1] - w[0] < settings.separation)
        .flat_map(|w| [w[0], w[1]])
        .collect();
    if !clustered.is_empty() {
        let mut locations = clustered;
        locations.dedup();
        return Err(UnresolvedCluster { locations });
    }
    Ok(roots)
}
