//! Built-in fields and the name registry used by the command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{field_from_stream_function, parse};
use crate::field::PlanarField;
use crate::geometry::Vec2;
use crate::zigzag::ZigzagPotential;

/// Constant field (u, v).
pub fn const_field(u: f64, v: f64) -> PlanarField {
    let speed = Vec2::new(u, v).norm();
    PlanarField::new("const", move |_| Vec2::new(u, v))
        .with_param("u", u)
        .with_param("v", v)
        .with_curl(|_| 0.0)
        .with_div(|_| 0.0)
        .with_speed_bounds(speed, speed)
}

/// Rigid rotation (−y, x). Vanishes at the origin.
pub fn rotation() -> PlanarField {
    PlanarField::new("rotation", |p| Vec2::new(-p.y, p.x))
        .with_curl(|_| 2.0)
        .with_div(|_| 0.0)
}

/// `v_N(x, y) = (1, (N/2)·cos(N x))`, incompressible with `1 ≤ ‖v‖ ≤ √(N²/4 + 1)`.
/// Its stream function is `y − ½ sin(N x)`.
pub fn vn_field(n: f64) -> PlanarField {
    let half = 0.5 * n;
    PlanarField::new("vn", move |p| Vec2::new(1.0, half * (n * p.x).cos()))
        .with_param("N", n)
        .with_div(|_| 0.0)
        .with_curl(move |p| -half * n * (n * p.x).sin())
        .with_speed_bounds(1.0, (0.25 * n * n + 1.0).sqrt())
}

/// Gradient of the smoothed zigzag potential. Irrotational, not incompressible.
pub fn zigzag_gradient(n: f64, eps: f64) -> PlanarField {
    let z = ZigzagPotential::new(n, eps);
    PlanarField::new("zigzag_grad", move |p| z.gradient(p))
        .with_param("N", n)
        .with_param("eps", eps)
        .with_curl(|_| 0.0)
}

/// Incompressible field whose quarter turn is [`zigzag_gradient`]:
/// `v = (∂A/∂y, −∂A/∂x)` for the smoothed zigzag potential `A`.
pub fn zigzag(n: f64, eps: f64) -> PlanarField {
    let z = ZigzagPotential::new(n, eps);
    PlanarField::new("zigzag", move |p| {
        let g = z.gradient(p);
        Vec2::new(g.v, -g.u)
    })
    .with_param("N", n)
    .with_param("eps", eps)
    .with_div(|_| 0.0)
}

/// Stream function of a random band-limited perturbation of the shear flow `A = y`:
/// `y + Σ a_j sin(k_j·(x, y) + φ_j)` with `|k_j| ≤ kmax` and `Σ a_j |k_j| = 0.6`,
/// so `0.4 ≤ ‖∇A‖ ≤ 1.6`.
pub fn band_limited_stream_function(seed: u64, modes: usize, kmax: f64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<(f64, f64, f64, f64)> = (0..modes)
        .map(|_| {
            let k = rng.random_range(1.0..kmax);
            let dir = rng.random_range(0.0..std::f64::consts::TAU);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let weight = rng.random_range(0.2..1.0);
            (weight, k * dir.cos(), k * dir.sin(), phase)
        })
        .collect();
    let total: f64 = raw.iter().map(|&(w, kx, ky, _)| w * kx.hypot(ky)).sum();
    let mut s = String::from("y");
    for &(w, kx, ky, phase) in &raw {
        let a = 0.6 * w / total;
        let _ = write!(s, " + {a:.6}*sin({kx:.6}*x + {ky:.6}*y + {phase:.6})");
    }
    s.replace("+ -", "- ")
}

/// Incompressible band-limited field built from [`band_limited_stream_function`].
pub fn band_limited(seed: u64, modes: usize, kmax: f64) -> Result<PlanarField> {
    let text = band_limited_stream_function(seed, modes, kmax);
    let ast = parse(&text)?;
    let mut params = BTreeMap::new();
    params.insert("seed".to_string(), seed as f64);
    params.insert("modes".to_string(), modes as f64);
    params.insert("kmax".to_string(), kmax);
    let f = field_from_stream_function(&ast, &BTreeMap::new())?;
    Ok(rename(f, "band", &params))
}

fn rename(f: PlanarField, name: &str, params: &BTreeMap<String, f64>) -> PlanarField {
    let inner = f.clone();
    let mut out = PlanarField::new(name, move |p| inner.eval(p)).with_params(params);
    if f.has_analytic_div() {
        let inner = f.clone();
        out = out.with_div(move |p| inner.analytic_div(p).unwrap_or(f64::NAN));
    }
    if f.has_analytic_curl() {
        let inner = f;
        out = out.with_curl(move |p| inner.analytic_curl(p).unwrap_or(f64::NAN));
    }
    out
}

/// Parameters of the (generally compressible) field
/// `(1 + a·sin(k1·x + k2·y + φ1), c·cos(k3·x + k4·y + φ2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavy {
    pub a: f64,
    pub k1: f64,
    pub k2: f64,
    pub phi1: f64,
    pub c: f64,
    pub k3: f64,
    pub k4: f64,
    pub phi2: f64,
}

impl Default for Wavy {
    /// `(1 + 0.2·sin(y), 0.2·cos(x))`.
    fn default() -> Self {
        Wavy { a: 0.2, k1: 0.0, k2: 1.0, phi1: 0.0, c: 0.2, k3: 1.0, k4: 0.0, phi2: 0.0 }
    }
}

impl Wavy {
    /// Random member with `a + c ≤ 0.6` and nonzero divergence.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_3a11);
        let a = rng.random_range(0.05..0.3);
        let c = rng.random_range(0.05..0.3);
        Wavy {
            a,
            k1: rng.random_range(1.0..6.0),
            k2: rng.random_range(-3.0..3.0),
            phi1: rng.random_range(0.0..std::f64::consts::TAU),
            c,
            k3: rng.random_range(-3.0..3.0),
            k4: rng.random_range(1.0..6.0),
            phi2: rng.random_range(0.0..std::f64::consts::TAU),
        }
    }

    pub fn field(self) -> PlanarField {
        let w = self;
        PlanarField::new("wavy", move |p| {
            Vec2::new(
                1.0 + w.a * (w.k1 * p.x + w.k2 * p.y + w.phi1).sin(),
                w.c * (w.k3 * p.x + w.k4 * p.y + w.phi2).cos(),
            )
        })
        .with_param("a", w.a)
        .with_param("k1", w.k1)
        .with_param("k2", w.k2)
        .with_param("phi1", w.phi1)
        .with_param("c", w.c)
        .with_param("k3", w.k3)
        .with_param("k4", w.k4)
        .with_param("phi2", w.phi2)
        .with_curl(move |p| {
            -w.c * w.k3 * (w.k3 * p.x + w.k4 * p.y + w.phi2).sin()
                - w.a * w.k2 * (w.k1 * p.x + w.k2 * p.y + w.phi1).cos()
        })
        .with_div(move |p| {
            w.a * w.k1 * (w.k1 * p.x + w.k2 * p.y + w.phi1).cos()
                - w.c * w.k4 * (w.k3 * p.x + w.k4 * p.y + w.phi2).sin()
        })
    }
}

/// Registry entry for `list-fields`.
#[derive(Debug, Clone, Copy)]
pub struct FieldInfo {
    pub name: &'static str,
    pub params: &'static str,
    pub incompressible: bool,
    pub description: &'static str,
}

pub const REGISTRY: &[FieldInfo] = &[
    FieldInfo { name: "const", params: "u=1 v=0", incompressible: true, description: "constant field (u, v)" },
    FieldInfo { name: "rotation", params: "", incompressible: true, description: "rigid rotation (-y, x); vanishes at the origin" },
    FieldInfo { name: "vn", params: "N=8", incompressible: true, description: "(1, N/2 cos(N x)), stream function y - sin(N x)/2" },
    FieldInfo {
        name: "zigzag",
        params: "N=8 eps=0.01/N",
        incompressible: true,
        description: "level-set flow of the smoothed zigzag potential N y - 2N dist((x,y), (sin(N t), t))",
    },
    FieldInfo { name: "zigzag-grad", params: "N=8 eps=0.01/N", incompressible: false, description: "gradient of the smoothed zigzag potential" },
    FieldInfo { name: "band", params: "modes=4 kmax=6 (uses --seed)", incompressible: true, description: "random band-limited perturbation of the shear flow (1, 0)" },
    FieldInfo {
        name: "wavy",
        params: "a=0.2 k1=0 k2=1 phi1=0 c=0.2 k3=1 k4=0 phi2=0",
        incompressible: false,
        description: "(1 + a sin(k1 x + k2 y + phi1), c cos(k3 x + k4 y + phi2))",
    },
];

struct ParamReader<'a> {
    field: &'a str,
    params: &'a BTreeMap<String, f64>,
    allowed: &'static [&'static str],
}

impl ParamReader<'_> {
    fn check(&self) -> Result<()> {
        for key in self.params.keys() {
            if !self.allowed.contains(&key.as_str()) {
                return Err(Error::invalid(format!(
                    "field `{}` has no parameter `{key}` (expected one of: {})",
                    self.field,
                    self.allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

/// Resolves a registry name with parameters. `seed` is used by randomized fields.
pub fn builtin(name: &str, params: &BTreeMap<String, f64>, seed: u64) -> Result<PlanarField> {
    let reader = |allowed: &'static [&'static str]| {
        let r = ParamReader { field: name, params, allowed };
        r.check().map(|_| r)
    };
    match name {
        "const" => {
            let r = reader(&["u", "v"])?;
            Ok(const_field(r.get("u", 1.0), r.get("v", 0.0)))
        }
        "rotation" => {
            reader(&[])?;
            Ok(rotation())
        }
        "vn" => {
            let r = reader(&["N"])?;
            Ok(vn_field(r.get("N", 8.0)))
        }
        "zigzag" | "zigzag-grad" => {
            let r = reader(&["N", "eps"])?;
            let n = r.get("N", 8.0);
            if !(n > 0.0) {
                return Err(Error::invalid("zigzag needs N > 0"));
            }
            let eps = r.get("eps", ZigzagPotential::default_eps(n));
            Ok(if name == "zigzag" { zigzag(n, eps) } else { zigzag_gradient(n, eps) })
        }
        "band" => {
            let r = reader(&["modes", "kmax"])?;
            let modes = r.get("modes", 4.0);
            let kmax = r.get("kmax", 6.0);
            if !(modes >= 1.0 && kmax > 1.0) {
                return Err(Error::invalid("band needs modes ≥ 1 and kmax > 1"));
            }
            band_limited(seed, modes as usize, kmax)
        }
        "wavy" => {
            let r = reader(&["a", "k1", "k2", "phi1", "c", "k3", "k4", "phi2"])?;
            let d = Wavy::default();
            Ok(Wavy {
                a: r.get("a", d.a),
                k1: r.get("k1", d.k1),
                k2: r.get("k2", d.k2),
                phi1: r.get("phi1", d.phi1),
                c: r.get("c", d.c),
                k3: r.get("k3", d.k3),
                k4: r.get("k4", d.k4),
                phi2: r.get("phi2", d.phi2),
            }
            .field())
        }
        other => Err(Error::invalid(format!(
            "unknown field `{other}` (known: {})",
            REGISTRY.iter().map(|f| f.name).collect::<Vec<_>>().join(", ")
        ))),
    }
}

/// Closed-form stream function of a built-in incompressible field, when it has one.
pub fn stream_function_text(name: &str) -> Option<&'static str> {
    match name {
        "vn" => Some("y - 0.5*sin(N*x)"),
        "rotation" => Some("-(x^2 + y^2)/2"),
        _ => None,
    }
}
