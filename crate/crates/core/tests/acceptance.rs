//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any of them fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use hdelaunay::cli::portrait::{build_portrait, OrbitRole};
use hdelaunay::delaunay::{
    build_nodoid, build_sphere, build_torus, build_unduloid, check_sphere_necessary, find_torus_parameter,
    DelaunayError, SurfaceProfile, Verdict,
};
use hdelaunay::geomk::{Kappa, Sign};
use hdelaunay::hfunc::{parse_h, HFunction};
use hdelaunay::orbit::{detect_closed, integrate_crossings, Closure, Direction, IntegratorConfig, State};
use hdelaunay::phaseplane::{equilibria, gamma_curve, gamma_x, PlaneSpec};

type Outcome = Result<String, String>;

fn h(src: &str) -> Arc<HFunction> {
    Arc::new(parse_h(src).expect("corpus expression parses"))
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Residual of the constant-mean-curvature first integral on the ε = +1 branch.
fn cmc_integral(kappa: Kappa, h0: f64, x: f64, y: f64) -> f64 {
    let w = (1.0 - y * y).max(0.0).sqrt();
    match kappa {
        Kappa::Hyperbolic => w * x.sinh() - 2.0 * h0 * (x.cosh() - 1.0),
        Kappa::Spherical => w * x.sin() + 2.0 * h0 * x.cos(),
    }
}

/// `max |κ₁ + κ₂ − 2H(y)|` recomputed from the profile points.
fn curvature_residual(p: &SurfaceProfile, f: &HFunction) -> f64 {
    let mut worst: f64 = 0.0;
    for arc in &p.arcs {
        let e = arc.eps.value();
        for q in &arc.points {
            if q.y.abs() >= 1.0 - 1e-6 || q.x <= 0.0 {
                continue;
            }
            let w = (1.0 - q.y * q.y).sqrt();
            let cot = match p.kappa {
                Kappa::Hyperbolic => 1.0 / q.x.tanh(),
                Kappa::Spherical => 1.0 / q.x.tan(),
            };
            let k1 = -e * q.yp / w;
            let k2 = e * w * cot;
            worst = worst.max((k1 + k2 - 2.0 * f.h(q.y)).abs());
        }
    }
    worst
}

fn timed(limit: Duration, run: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let r = run()?;
    let dt = t.elapsed();
    ensure(dt < limit, format!("took {dt:?}, limit {limit:?}"))?;
    Ok(format!("{r}, {:.0} ms", dt.as_secs_f64() * 1e3))
}

fn sphere_h1(kappa: Kappa, x0_exact: f64, level: f64) -> Outcome {
    let f = h("1");
    let s = build_sphere(&f, kappa, &cfg()).map_err(|e| e.to_string())?;
    let dx = (s.x0 - x0_exact).abs();
    ensure(dx <= 1e-6, format!("x0 = {} off by {dx:e}", s.x0))?;
    ensure(s.closure_defect <= 1e-6, format!("closure defect {:e}", s.closure_defect))?;
    let mut worst: f64 = 0.0;
    for arc in &s.profile.arcs {
        for p in &arc.points {
            worst = worst.max((cmc_integral(kappa, 1.0, p.x, p.y) - level).abs());
        }
    }
    ensure(worst <= 1e-7, format!("first integral drifts by {worst:e}"))?;
    Ok(format!("x0 = {:.10}, |dx0| = {dx:.1e}, closure {:.1e}, integral drift {worst:.1e}", s.x0, s.closure_defect))
}

fn criterion_1() -> Outcome {
    timed(Duration::from_secs(1), || sphere_h1(Kappa::Hyperbolic, 3f64.ln(), 0.0))
}

fn criterion_2() -> Outcome {
    timed(Duration::from_secs(1), || sphere_h1(Kappa::Spherical, 2.0 * 0.5f64.atan(), 2.0))
}

fn criterion_3() -> Outcome {
    let f = h("1");
    let exact = PI - 2f64.atan();
    let xi = find_torus_parameter(&f, &cfg()).map_err(|e| e.to_string())?;
    ensure((xi - exact).abs() <= 1e-4, format!("xi* = {xi}, expected {exact}"))?;
    let t = build_torus(&f, &cfg()).map_err(|e| e.to_string())?;
    let p = &t.profile;
    let a = p.arcs.first().and_then(|a| a.points.first()).ok_or("empty torus profile")?;
    let b = p.arcs.last().and_then(|a| a.points.last()).ok_or("empty torus profile")?;
    let gap = (a.x - b.x).abs().max((a.y - b.y).abs()).max((a.z - b.z).abs());
    ensure(gap <= 1e-6, format!("torus does not close: gap {gap:e}"))?;
    ensure((t.x1 - FRAC_PI_2).abs() <= 1e-6, format!("x1 = {}", t.x1))?;
    Ok(format!("xi* = {xi:.10}, |dxi*| = {:.1e}, closure {gap:.1e}", (xi - exact).abs()))
}

fn period_at(kappa: Kappa, amp: f64) -> Result<f64, String> {
    let spec = PlaneSpec::new(kappa, Sign::Plus, h("1"));
    let e0 = equilibria(&spec).first().ok_or("no equilibrium")?.x0;
    match detect_closed(&spec, e0 + amp, &cfg()).map_err(|e| e.to_string())? {
        Closure::Closed { period, .. } => Ok(period),
        Closure::NotClosed { terminal, .. } => Err(format!("orbit at amplitude {amp} not closed: {terminal:?}")),
    }
}

fn criterion_4() -> Outcome {
    let mut out = Vec::new();
    for (kappa, c) in [(Kappa::Hyperbolic, 3.0), (Kappa::Spherical, 5.0)] {
        let exact = 2.0 * PI / f64::sqrt(c);
        for (amp, tol) in [(1e-2, 1e-2), (1e-3, 1e-3)] {
            let t = period_at(kappa, amp)?;
            let rel = (t - exact).abs() / exact;
            ensure(rel <= tol, format!("kappa = {kappa}, amplitude {amp}: T = {t}, relative error {rel:e}"))?;
            out.push(format!("{rel:.1e}"));
        }
    }
    Ok(format!("relative period errors {}", out.join(" ")))
}

fn criterion_5() -> Outcome {
    let f = h("1+y^2");
    let mut worst: f64 = 0.0;
    let mut built = 0;
    for kappa in [Kappa::Hyperbolic, Kappa::Spherical] {
        let s = build_sphere(&f, kappa, &cfg()).map_err(|e| e.to_string())?;
        let spec = PlaneSpec::new(kappa, s.eps, f.clone());
        let e0 = equilibria(&spec)[0].x0;
        let mut profiles = vec![s.profile.clone()];
        let u = build_unduloid(&f, kappa, 0.5 * (e0 + s.x0), 2, &cfg()).map_err(|e| e.to_string())?;
        profiles.push(u.profile);
        let xi_n = match kappa {
            Kappa::Hyperbolic => 1.5,
            Kappa::Spherical => s.x0 + 0.3,
        };
        let n = build_nodoid(&f, kappa, xi_n, 2, &cfg()).map_err(|e| e.to_string())?;
        profiles.push(n.profile);
        for p in &profiles {
            worst = worst.max(curvature_residual(p, &f));
            built += 1;
        }
    }
    ensure(worst <= 1e-7, format!("max |k1 + k2 - 2H| = {worst:e}"))?;
    Ok(format!("{built} profiles, max residual {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    for src in ["0.4", "0.5"] {
        let f = h(src);
        let c = check_sphere_necessary(&f, Kappa::Hyperbolic).map_err(|e| e.to_string())?;
        ensure(c.verdict == Verdict::Fail, format!("H = {src}: necessary check passed"))?;
        ensure(c.witness == Some(0.0), format!("H = {src}: witness {:?}", c.witness))?;
        match build_sphere(&f, Kappa::Hyperbolic, &cfg()) {
            Ok(s) => return Err(format!("H = {src}: spurious sphere with x0 = {}", s.x0)),
            Err(DelaunayError::NoSphere { obstruction, .. }) => {
                ensure(
                    obstruction.contains("asymptote") || obstruction.contains("equilibrium"),
                    format!("H = {src}: unexpected obstruction '{obstruction}'"),
                )?;
                let what = if obstruction.contains("asymptote") { "asymptote" } else { "equilibrium" };
                notes.push(format!("H = {src}: no sphere ({what} obstruction)"));
            }
            Err(e) => return Err(format!("H = {src}: {e}")),
        }
    }
    Ok(notes.join("; "))
}

fn criterion_7() -> Outcome {
    let pass = check_sphere_necessary(&h("y^2-0.25"), Kappa::Spherical).map_err(|e| e.to_string())?;
    ensure(pass.verdict == Verdict::Pass, format!("y^2-0.25: {:?}", pass.verdict))?;
    ensure(pass.multiplicity_sum == Some(2), format!("y^2-0.25: sum {:?}", pass.multiplicity_sum))?;
    let fail = check_sphere_necessary(&h("y+0.5"), Kappa::Spherical).map_err(|e| e.to_string())?;
    ensure(fail.verdict == Verdict::Fail, format!("y+0.5: {:?}", fail.verdict))?;
    ensure(fail.multiplicity_sum == Some(1), format!("y+0.5: sum {:?}", fail.multiplicity_sum))?;
    Ok("y^2-0.25 passes with sum 2, y+0.5 fails with sum 1".into())
}

fn criterion_8() -> Outcome {
    let corpus = [
        (Kappa::Hyperbolic, &["1", "1+y^2", "2*cos(y)", "0.6", "cosh(y)", "1+0.5*y^4"][..]),
        (Kappa::Spherical, &["1", "1+y^2", "2*cos(y)", "0.3", "y^2-0.25", "cosh(y)"][..]),
    ];
    let mut count = 0;
    for (kappa, list) in corpus {
        for src in list {
            let f = h(src);
            let s = build_sphere(&f, kappa, &cfg()).map_err(|e| format!("kappa = {kappa}, H = {src}: {e}"))?;
            let mut prev = f64::INFINITY;
            for arc in &s.profile.arcs {
                for (i, p) in arc.points.iter().enumerate() {
                    // The equator is repeated at the start of the second half.
                    let repeat = i == 0 && p.y == prev;
                    ensure(
                        p.y < prev || repeat,
                        format!("kappa = {kappa}, H = {src}: y increases at s = {}", p.s),
                    )?;
                    if p.y.abs() < 1.0 {
                        ensure(p.yp < 0.0, format!("kappa = {kappa}, H = {src}: y' = {} at s = {}", p.yp, p.s))?;
                    }
                    prev = p.y;
                }
            }
            count += 1;
        }
    }
    Ok(format!("{count} spheres with strictly decreasing angle"))
}

fn criterion_9() -> Outcome {
    // Even-H orbit symmetry about y = 0.
    let mut sym: f64 = 0.0;
    for (kappa, xi) in [(Kappa::Hyperbolic, 0.8), (Kappa::Hyperbolic, 1.5), (Kappa::Spherical, 0.6)] {
        let spec = PlaneSpec::new(kappa, Sign::Plus, h("1+y^2"));
        let start = State { s: 0.0, x: xi, y: 0.0 };
        let fw = integrate_crossings(&spec, start, &cfg(), 1, Direction::Forward).map_err(|e| e.to_string())?;
        let bw = integrate_crossings(&spec, start, &cfg(), 1, Direction::Backward).map_err(|e| e.to_string())?;
        let len = fw.length().min(bw.length());
        for i in 1..200 {
            let s = len * i as f64 / 200.0;
            let (a, b) = (fw.interpolate(s).ok_or("forward gap")?, bw.interpolate(-s).ok_or("backward gap")?);
            sym = sym.max((a.0 - b.0).abs()).max((a.1 + b.1).abs());
        }
    }
    ensure(sym <= 1e-8, format!("orbit symmetry defect {sym:e}"))?;

    // Γ mirror for κ = +1.
    let mut mirror: f64 = 0.0;
    for src in ["1+y^2", "1", "y^2-0.25", "2*cos(y)+y"] {
        let plus = PlaneSpec::new(Kappa::Spherical, Sign::Plus, h(src));
        let minus = plus.flipped();
        for i in 0..=400 {
            let y = -1.0 + 2.0 * i as f64 / 400.0;
            if let (Some(a), Some(b)) = (gamma_x(&plus, y), gamma_x(&minus, y)) {
                mirror = mirror.max((a + b - PI).abs());
            }
        }
    }
    ensure(mirror <= 1e-12, format!("gamma mirror defect {mirror:e}"))?;

    // Torus arcs mirror each other across x = π/2; for constant H the
    // reflected ε = −1 arc must lie on the ε = +1 level set of the first
    // integral.
    let t = build_torus(&h("1"), &cfg()).map_err(|e| e.to_string())?;
    ensure(t.mirror_defect <= 1e-7, format!("torus mirror defect {:e}", t.mirror_defect))?;
    let plus = t.profile.arcs.iter().find(|a| a.eps == Sign::Plus).ok_or("no eps = 1 arc")?;
    let minus = t.profile.arcs.iter().find(|a| a.eps == Sign::Minus).ok_or("no eps = -1 arc")?;
    let level = cmc_integral(Kappa::Spherical, 1.0, plus.points[0].x, plus.points[0].y);
    let mut off: f64 = 0.0;
    for q in &minus.points {
        off = off.max((cmc_integral(Kappa::Spherical, 1.0, PI - q.x, -q.y) - level).abs());
    }
    ensure(off <= 1e-7, format!("reflected torus arc leaves the level set by {off:e}"))?;
    Ok(format!("orbit {sym:.1e}, gamma {mirror:.1e}, torus {:.1e} / level {off:.1e}", t.mirror_defect))
}

fn criterion_10() -> Outcome {
    let corpus = [
        "1", "y", "1+y^2", "y^2-0.25", "y+0.5", "2*cos(y)", "sin(y)", "cosh(y)", "exp(y)", "tanh(y)",
        "sqrt(2+y)", "1/(2+y)", "(1+y)^3", "y^5-y", "3*y^4-2*y^2+1", "sinh(2*y)", "tan(y/2)", "exp(-y^2)",
        "cos(y)^2+sin(y)", "1+y*exp(y)", "(y-0.3)^2*(y+0.7)", "sqrt(1+y^2)", "2-y/3", "0.5*y^3+y",
        "cosh(y)-sinh(y)", "1/(1+y^2)", "exp(sin(y))", "cos(y*y)", "-(y^2)+2", "y*(y-1)*(y+1)+1.5",
        "tanh(3*y)+2", "sqrt(cosh(y))",
    ];
    let mut worst: f64 = 0.0;
    for src in corpus {
        let f = parse_h(src).map_err(|e| format!("{src}: {e}"))?;
        let again = parse_h(&f.ast().to_string()).map_err(|e| format!("{src} reprint: {e}"))?;
        ensure(again.ast() == f.ast(), format!("{src} does not round-trip"))?;
        for i in 0..=40 {
            let y = -0.95 + 1.9 * i as f64 / 40.0;
            let d = 1e-5;
            let fd = (f.h(y + d) - f.h(y - d)) / (2.0 * d);
            let rel = (f.dh(y) - fd).abs() / f.dh(y).abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    ensure(worst <= 1e-6, format!("derivative mismatch {worst:e}"))?;
    Ok(format!("{} expressions round-trip, derivative error {worst:.1e}", corpus.len()))
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn criterion_11() -> Outcome {
    let f = h("1+y^2");
    let spec = PlaneSpec::new(Kappa::Hyperbolic, Sign::Plus, f.clone());
    let g = gamma_curve(&spec).map_err(|e| e.to_string())?;
    ensure(g.branches.len() == 1 && g.asymptote_ys.is_empty(), "gamma is not a single compact arc")?;
    for y in [-1.0, 1.0] {
        let x = gamma_x(&spec, y).ok_or("gamma missing at an endpoint")?;
        ensure(x.abs() < 1e-12, format!("gamma endpoint ({x}, {y})"))?;
    }
    let p = build_portrait(&spec, 8, &cfg());
    ensure(p.orbits.iter().any(|o| o.role == OrbitRole::Separatrix), "portrait lacks the sphere separatrix")?;
    ensure(p.gamma.len() == 1, format!("portrait draws gamma in {} pieces", p.gamma.len()))?;

    let n = build_nodoid(&f, Kappa::Hyperbolic, 1.5, 3, &cfg()).map_err(|e| e.to_string())?;
    for arc in n.profile.arcs.iter().filter(|a| a.eps == Sign::Minus) {
        for w in arc.points.windows(2) {
            ensure(w[1].z < w[0].z, format!("eps = -1 arc has z increasing at s = {}", w[1].s))?;
        }
    }

    let cases = [
        (Kappa::Hyperbolic, Sign::Plus, "portrait_h2_eps_plus.svg"),
        (Kappa::Hyperbolic, Sign::Minus, "portrait_h2_eps_minus.svg"),
        (Kappa::Spherical, Sign::Plus, "portrait_s2_eps_plus.svg"),
    ];
    for (kappa, eps, name) in cases {
        let spec = PlaneSpec::new(kappa, eps, f.clone());
        let a = build_portrait(&spec, 8, &cfg()).to_svg();
        let b = build_portrait(&spec, 8, &cfg()).to_svg();
        ensure(a == b, format!("{name}: two runs differ"))?;
        let stored = std::fs::read_to_string(golden(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(stored == a, format!("{name}: differs from the stored golden"))?;
    }
    Ok("gamma arc, separatrix, descending eps = -1 arcs, 3 goldens stable".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("hyperbolic CMC sphere", criterion_1),
        ("spherical CMC sphere", criterion_2),
        ("torus parameter and closure", criterion_3),
        ("center period limit", criterion_4),
        ("defining-equation residual", criterion_5),
        ("necessary-condition soundness", criterion_6),
        ("parity condition", criterion_7),
        ("monotone angle", criterion_8),
        ("symmetry suite", criterion_9),
        ("expression language", criterion_10),
        ("figure reproduction", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
