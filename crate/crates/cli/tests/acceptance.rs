//! End-to-end acceptance checks. Runs every criterion, prints one line each,
//! and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fastescape::builtins::{band_limited, const_field, rotation, vn_field, zigzag, Wavy};
use fastescape::expr::{field_from_stream_function, parse, Var};
use fastescape::field::{numeric_divergence, perpendicular, DEFAULT_BOUNDS_SAMPLES};
use fastescape::flow::escape_length;
use fastescape::planner::{plan_escape, PlanMode};
use fastescape::stream::{coarea_check, compute_stream_function, gradient_check};
use fastescape::verify::{verify_theorem2, verify_theorem3, Theorem2Options, Verdict};
use fastescape::zigzag::ZigzagPotential;
use fastescape::{Disk, PlanarField, Point2, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn unit_disk() -> Disk {
    Disk::new(Point2::ORIGIN, 1.0).unwrap()
}

fn incompressible_suite() -> Vec<PlanarField> {
    let mut out = vec![const_field(1.0, 0.0)];
    out.extend((4..=64).map(|n| vn_field(n as f64)));
    out.extend([4.0, 8.0, 16.0].map(|n| zigzag(n, ZigzagPotential::default_eps(n))));
    out.extend((0..20).map(|seed| band_limited(seed, 4, 6.0).unwrap()));
    out
}

fn label(f: &PlanarField) -> String {
    let params: Vec<String> = f.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{}({})", f.name(), params.join(","))
}

fn vn_lower_bound() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for n in [8.0, 16.0, 32.0, 64.0] {
        let r = escape_length(&vn_field(n), Point2::ORIGIN, 1.0, 1e4).unwrap();
        pass &= r.escaped() && r.escape_length >= n / 8.0;
        lines.push(format!("N={n}: {:.4} >= {}", r.escape_length, n / 8.0));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    outcome(pass, format!("{}; {:.2?} < 10s", lines.join(", "), elapsed))
}

fn theorem1_suite() -> Outcome {
    let start = Instant::now();
    let suite = incompressible_suite();
    let mut worst = (0.0_f64, String::new());
    let mut failures = Vec::new();
    for f in &suite {
        match plan_escape(f, Point2::ORIGIN, PlanMode::Unsigned) {
            Ok(plan) => {
                let ratio = plan.total_length / plan.bound;
                if ratio > worst.0 {
                    worst = (ratio, label(f));
                }
                if plan.total_length > plan.bound * 1.05 {
                    failures.push(format!("{}: {} > 1.05·{}", label(f), plan.total_length, plan.bound));
                }
            }
            Err(e) => failures.push(format!("{}: {e}", label(f))),
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "{} fields, worst length/bound {:.4} ({}); {:.2?} < 60s{}",
            suite.len(),
            worst.0,
            worst.1,
            elapsed,
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
    )
}

fn theorem3_suite() -> Outcome {
    let start = Instant::now();
    let mut suite = incompressible_suite();
    let compressible: Vec<PlanarField> = (0..10).map(|s| Wavy::random(s).field()).collect();
    // The compressible members must really be compressible.
    let mut min_div = f64::INFINITY;
    for f in &compressible {
        let div = [Point2::new(0.3, -0.2), Point2::new(-0.5, 0.4), Point2::new(0.1, 0.7)]
            .iter()
            .map(|&p| numeric_divergence(f, p, 1e-5).unwrap().abs())
            .fold(0.0, f64::max);
        min_div = min_div.min(div);
    }
    suite.extend(compressible);
    let mut worst = (0.0_f64, String::new());
    let mut failures = Vec::new();
    for f in &suite {
        match verify_theorem3(f, Point2::ORIGIN, 1.0, DEFAULT_BOUNDS_SAMPLES) {
            Ok(r) => {
                let ratio = r.value() / r.bound;
                if ratio > worst.0 {
                    worst = (ratio, label(f));
                }
                if r.verdict != Verdict::Pass {
                    failures.push(format!("{}: {} vs {}", label(f), r.value(), r.bound));
                }
            }
            Err(e) => failures.push(format!("{}: {e}", label(f))),
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && min_div > 1e-3 && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "{} fields (10 compressible, min sampled |div| {:.3}), worst length/bound {:.4} ({}); {:.2?} < 60s{}",
            suite.len(),
            min_div,
            worst.0,
            worst.1,
            elapsed,
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
    )
}

fn coarea() -> Outcome {
    let d = unit_disk();
    let g = compute_stream_function(&const_field(1.0, 0.0), &d, 1.0 / 256.0, Point2::ORIGIN).unwrap();
    let c = coarea_check(&g, &d, 256).unwrap();
    let lhs_err = (c.lhs - PI).abs() / PI;
    let rhs_err = (c.rhs - PI).abs() / PI;
    let g4 = compute_stream_function(&vn_field(4.0), &d, 1.0 / 512.0, Point2::ORIGIN).unwrap();
    let c4 = coarea_check(&g4, &d, 256).unwrap();
    let pass = lhs_err <= 0.02 && rhs_err <= 0.02 && c4.rel_err <= 0.03;
    outcome(
        pass,
        format!(
            "const: lhs {:.6} ({:.3}%), rhs {:.6} ({:.3}%) vs pi; vn N=4 h=1/512: rel_err {:.3}% <= 3%",
            c.lhs,
            100.0 * lhs_err,
            c.rhs,
            100.0 * rhs_err,
            100.0 * c4.rel_err
        ),
    )
}

fn stream_function() -> Outcome {
    let d = unit_disk();
    let f = vn_field(8.0);
    let exact = |p: Point2| p.y - 0.5 * (8.0 * p.x).sin();
    let fine = compute_stream_function(&f, &d, 1.0 / 512.0, Point2::ORIGIN).unwrap();
    let mut max_err = 0.0_f64;
    for j in 0..fine.ny() {
        for i in 0..fine.nx() {
            max_err = max_err.max((fine.value(i, j) - exact(fine.node(i, j))).abs());
        }
    }
    let coarse = compute_stream_function(&f, &d, 1.0 / 256.0, Point2::ORIGIN).unwrap();
    let gc = gradient_check(&coarse, &f, &d);
    let gf = gradient_check(&fine, &f, &d);
    // The constant measured on the coarse grid must bound the fine-grid error.
    let h = fine.spacing();
    let pass = max_err <= 1e-6 && gf.max_error <= 1.1 * gc.constant * h * h;
    outcome(
        pass,
        format!(
            "max node error {max_err:.2e} <= 1e-6; gradient error {:.3e} at h=1/512 vs C·h² = {:.3e} with C = {:.4} (C at 1/512: {:.4})",
            gf.max_error,
            gc.constant * h * h,
            gc.constant,
            gf.constant
        ),
    )
}

fn trivial_cases() -> Outcome {
    let c = escape_length(&const_field(1.0, 0.0), Point2::ORIGIN, 1.0, 100.0).unwrap();
    let r = escape_length(&rotation(), Point2::new(0.5, 0.0), 1.0, 100.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let base = PlanarField::new("samples", |p| Vec2::new(p.x * p.x - p.y, (3.0 * p.x).sin() + p.y));
    let perp = perpendicular(&base);
    let mut exact = 0;
    for _ in 0..10_000 {
        let p = Point2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let (v, w) = (base.eval(p), perp.eval(p));
        let raw = Vec2::new(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let q = raw.perp();
        if v.dot(w) == 0.0 && v.norm() == w.norm() && raw.dot(q) == 0.0 && raw.norm() == q.norm() {
            exact += 1;
        }
    }
    let pass = c.escaped() && (c.escape_length - 1.0).abs() <= 1e-6 && r.escaped() && (r.escape_length - PI / 2.0).abs() <= 1e-4 && exact == 10_000;
    outcome(
        pass,
        format!(
            "const {:.10} (1 ± 1e-6); rotation {:.8} (pi/2 ± 1e-4); perpendicularity and norm exact on {exact}/10000",
            c.escape_length, r.escape_length
        ),
    )
}

fn theorem2() -> Outcome {
    let opts = Theorem2Options { grid_n: 17, ..Theorem2Options::default() };
    let v = verify_theorem2(&vn_field(16.0), Point2::ORIGIN, &opts).unwrap();
    let z = verify_theorem2(&zigzag(8.0, ZigzagPotential::default_eps(8.0)), Point2::ORIGIN, &opts).unwrap();
    let zl = z.measured["sampled_uniform_escape"];
    let pass = v.verdict != Verdict::Fail && z.verdict != Verdict::Fail && z.value() <= 3.0 && zl >= 8.0 / 8.0;
    outcome(
        pass,
        format!(
            "vn N=16: {:?} (perp {:.4} vs bound {:.4}, sampled L {:.4}); zigzag N=8: {:?} (perp {:.4} <= 3, sampled L {:.4} >= 1, bound {:.4})",
            v.verdict,
            v.value(),
            v.bound,
            v.measured["sampled_uniform_escape"],
            z.verdict,
            z.value(),
            zl,
            z.bound
        ),
    )
}

/// One sample per grammar production.
const PRODUCTIONS: &[&str] = &[
    "x + y", "x - y", "x * y", "x / y", "x ^ 3", "x ^ -1.5", "2.5e-3", ".5", "x", "y", "k", "sin(x)", "cos(y)", "exp(x)", "sqrt(y)", "abs(x)",
    "(x + y)", "-x", "- -y", "-(x*y)^2",
];

const DIFFERENTIABLE: &[&str] = &[
    "x + y",
    "x - y",
    "x * y",
    "x / (2 + y)",
    "x ^ 3",
    "(2 + x) ^ -1.5",
    "sin(x)",
    "cos(y)",
    "exp(x)",
    "sqrt(2 + y)",
    "-x",
    "-(x*y)^2",
    "k*x - y",
    "y - 0.5*sin(8*x)",
    "exp(-x^2 - y^2) * cos(3*x - 2*y)",
];

fn parser() -> Outcome {
    let mut failures = Vec::new();
    for text in PRODUCTIONS {
        let e = parse(text).unwrap();
        if parse(&e.to_string()).ok().as_ref() != Some(&e) {
            failures.push(format!("round trip {text}"));
        }
    }
    let params: BTreeMap<String, f64> = [("k".to_string(), 1.7)].into();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0_f64;
    let h = 1e-5;
    for text in DIFFERENTIABLE {
        let e = parse(text).unwrap().bind(&params).unwrap();
        let (dx, dy) = (e.differentiate(Var::X).unwrap(), e.differentiate(Var::Y).unwrap());
        for _ in 0..100 {
            let p = Point2::new(rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9));
            let fx = (e.eval(Point2::new(p.x + h, p.y)) - e.eval(Point2::new(p.x - h, p.y))) / (2.0 * h);
            let fy = (e.eval(Point2::new(p.x, p.y + h)) - e.eval(Point2::new(p.x, p.y - h))) / (2.0 * h);
            for (sym, fd) in [(dx.eval(p), fx), (dy.eval(p), fy)] {
                let rel = (sym - fd).abs() / sym.abs().max(1.0);
                worst = worst.max(rel);
            }
        }
    }
    if worst > 1e-6 {
        failures.push(format!("derivative error {worst:e}"));
    }
    let n8: BTreeMap<String, f64> = [("N".to_string(), 8.0)].into();
    let from_text = field_from_stream_function(&parse("y - 0.5*sin(N*x)").unwrap(), &n8).unwrap();
    let builtin = vn_field(8.0);
    let mut field_err = 0.0_f64;
    for _ in 0..100 {
        let p = Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (a, b) = (from_text.eval(p), builtin.eval(p));
        field_err = field_err.max((a.u - b.u).abs()).max((a.v - b.v).abs());
    }
    if field_err > 1e-12 {
        failures.push(format!("stream-function field error {field_err:e}"));
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} productions round-trip; worst derivative rel error {worst:.2e} over {} expressions x 100 points; vn(8) from text max error {field_err:.1e}{}",
            PRODUCTIONS.len(),
            DIFFERENTIABLE.len(),
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
    )
}

fn run_sweep(dir: &Path, tag: &str) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    let csv = dir.join(format!("{tag}.csv"));
    let json = dir.join(format!("{tag}.json"));
    let out = Command::new(env!("CARGO_BIN_EXE_fastescape"))
        .args(["sweep", "--field", "vn", "--N", "4,8,16,32,64", "--out"])
        .arg(&csv)
        .arg("--json")
        .arg(&json)
        .output()
        .expect("run fastescape");
    assert!(out.status.success(), "sweep failed: {}", String::from_utf8_lossy(&out.stderr));
    (out.stdout, std::fs::read(csv).unwrap(), std::fs::read(json).unwrap())
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("fastescape-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let a = run_sweep(&dir, "a");
    let b = run_sweep(&dir, "b");
    let _ = std::fs::remove_dir_all(&dir);
    let header_ok = a.1.starts_with(b"N,c2,ell_direct,ell_perp,plan_length,thm1_bound\n");
    let pass = a == b && header_ok && !a.1.is_empty() && !a.2.is_empty();
    outcome(pass, format!("two sweeps: stdout {} B, CSV {} B, JSON {} B, identical: {}", a.0.len(), a.1.len(), a.2.len(), a == b))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("vn lower bound N/8", vn_lower_bound),
        ("two-leg bound on the incompressible suite", theorem1_suite),
        ("curl bound on the full suite", theorem3_suite),
        ("coarea identity", coarea),
        ("stream function accuracy", stream_function),
        ("exact trivial cases", trivial_cases),
        ("perpendicular escape consistency", theorem2),
        ("expression parser", parser),
        ("sweep determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} [{name}] ({:.2?}) {}",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            start.elapsed(),
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
