use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fastescape::builtins::builtin;
use fastescape::expr::{field_from_stream_function, gradient_field, parse};
use fastescape::{Error, PlanarField, Point2, Result};

#[derive(Debug, Parser)]
#[command(name = "fastescape", version, about = "Escape lengths of planar flows: trace, plan, verify, sweep, render")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace the flow from a start point until it leaves the disk.
    Escape(EscapeArgs),
    /// Two-leg escape: along the quarter-turned field to a short level, then along that level.
    Plan(PlanArgs),
    /// Check one of the escape-length bounds and print a report.
    Verify(VerifyArgs),
    /// Compare direct, perpendicular and planned escapes across N.
    Sweep(SweepArgs),
    /// Draw stream-function level sets and flow curves as SVG.
    Render(RenderArgs),
    /// List the built-in fields.
    ListFields,
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected K=V, got `{s}`"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(format!("empty parameter name in `{s}`"));
    }
    let v: f64 = v.trim().parse().map_err(|_| format!("parameter `{k}` needs a number, got `{v}`"))?;
    if !v.is_finite() {
        return Err(format!("parameter `{k}` must be finite"));
    }
    Ok((k.to_string(), v))
}

fn parse_point(s: &str) -> std::result::Result<Point2, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got `{s}`"))?;
    let x: f64 = x.trim().parse().map_err(|_| format!("bad x coordinate `{x}`"))?;
    let y: f64 = y.trim().parse().map_err(|_| format!("bad y coordinate `{y}`"))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err("start point must be finite".into());
    }
    Ok(Point2::new(x, y))
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

/// Grid spacing, given as a number or as `1/K`.
fn parse_spacing(s: &str) -> std::result::Result<f64, String> {
    match s.split_once('/') {
        Some((a, b)) => Ok(parse_positive(a)? / parse_positive(b)?),
        None => parse_positive(s),
    }
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// Built-in field name (see `list-fields`).
    #[arg(long, conflicts_with = "expr")]
    pub field: Option<String>,
    /// Stream function A(x, y); the field is (∂A/∂y, −∂A/∂x).
    #[arg(long)]
    pub expr: Option<String>,
    /// Field or expression parameter, repeatable.
    #[arg(long = "param", value_name = "K=V", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Seed for randomized fields and sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl FieldArgs {
    pub fn param_map(&self) -> BTreeMap<String, f64> {
        self.params.iter().cloned().collect()
    }

    pub fn label(&self) -> String {
        match (&self.field, &self.expr) {
            (Some(f), _) => f.clone(),
            (None, Some(e)) => format!("expr `{e}`"),
            _ => "none".into(),
        }
    }

    pub fn resolve_with(&self, params: &BTreeMap<String, f64>) -> Result<PlanarField> {
        match (&self.field, &self.expr) {
            (Some(name), None) => builtin(name, params, self.seed),
            (None, Some(text)) => field_from_stream_function(&parse(text)?, params),
            _ => Err(Error::InvalidInput("give exactly one of --field or --expr".into())),
        }
    }

    pub fn resolve(&self) -> Result<PlanarField> {
        self.resolve_with(&self.param_map())
    }

    /// Like [`resolve`](Self::resolve), but `--expr` names a potential whose gradient is the field.
    pub fn resolve_gradient(&self) -> Result<PlanarField> {
        match (&self.field, &self.expr) {
            (None, Some(text)) => gradient_field(&parse(text)?, &self.param_map()),
            _ => self.resolve(),
        }
    }

    /// Wavenumber parameter, when the field has one.
    pub fn wavenumber(&self) -> Option<f64> {
        self.params.iter().rev().find(|(k, _)| k == "N").map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    #[arg(long, value_name = "X,Y", value_parser = parse_point, default_value = "0,0", allow_hyphen_values = true)]
    pub start: Point2,
    /// Disk radius.
    #[arg(long, value_parser = parse_positive, default_value = "1")]
    pub radius: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Stream-function grid spacing, a number or `1/K`.
    #[arg(long, value_parser = parse_spacing, default_value = "1/256")]
    pub h: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Also write the JSON (CSV for `sweep`) to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write an SVG figure to this path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EscapeArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Arclength budget; defaults to 100·c2/c1, or 1e4 without bounds.
    #[arg(long, value_parser = parse_positive)]
    pub max_length: Option<f64>,
    /// Shorter of the forward and backward escapes.
    #[arg(long)]
    pub bidirectional: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Allow negative levels and both directions along the level.
    #[arg(long)]
    pub signed: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Thm1,
    Thm2,
    Thm3,
    Irrot,
    Coarea,
    VnScaling,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub check: Check,
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Side of the start-point lattice for thm2.
    #[arg(long = "grid", default_value_t = 17)]
    pub lattice: usize,
    /// thm2 with forward-time escapes only (reported without a verdict).
    #[arg(long)]
    pub forward_only: bool,
    /// Number of levels for the coarea check.
    #[arg(long, default_value_t = 256)]
    pub levels: usize,
    /// Wavenumbers for vn-scaling.
    #[arg(long = "N", value_delimiter = ',', default_value = "8,16,32,64")]
    pub ns: Vec<f64>,
    /// Also write the report as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Values of the parameter N, comma-separated.
    #[arg(long = "N", value_delimiter = ',', required = true)]
    pub ns: Vec<f64>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Write the CSV table here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the full JSON rows here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Number of evenly spaced stream-function levels to draw.
    #[arg(long, default_value_t = 16)]
    pub levels: usize,
    #[arg(long, value_parser = parse_positive)]
    pub max_length: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_parsers() {
        assert_eq!(parse_param("N=8").unwrap(), ("N".to_string(), 8.0));
        assert!(parse_param("N").is_err());
        assert!(parse_param("=3").is_err());
        assert_eq!(parse_point("-0.5, 0.25").unwrap(), Point2::new(-0.5, 0.25));
        assert!(parse_point("1").is_err());
        assert_eq!(parse_spacing("1/512").unwrap(), 1.0 / 512.0);
        assert!(parse_spacing("0").is_err());
    }

    #[test]
    fn command_line_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from(["fastescape", "sweep", "--field", "vn", "--N", "4,8"]).unwrap();
        match cli.command {
            Command::Sweep(s) => assert_eq!(s.ns, vec![4.0, 8.0]),
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from(["fastescape", "sweep", "--field", "vn"]).is_err());
        assert!(Cli::try_parse_from(["fastescape", "escape", "--field", "vn", "--expr", "y"]).is_err());
    }
}
