//! Job configuration: TOML ingestion with position-annotated errors and a
//! canonical serialised form.

use std::collections::HashMap;
use std::ops::Range;
use std::path::PathBuf;

use geoball::expr::{parse_metric_expr, parse_warping_expr};
use geoball::model::ModelSpace;
use geoball::surface::{Direction, PolarMetric2D, DEFAULT_HYPOTHESIS_GRID};
use geoball::verify::Tolerances;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Model,
    Surface,
    Verify,
    Symmetrize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSize {
    pub n_r: usize,
    pub n_theta: usize,
}

impl GridSize {
    pub fn square(n: usize) -> Self {
        Self { n_r: n, n_theta: n }
    }
}

/// A fully specified job. Every field has a value, so the serialised form
/// is canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub dim: usize,
    pub radius: f64,
    pub k_max: usize,
    /// Radial samples for profile outputs.
    pub intervals: usize,
    pub require_balanced: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force_direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub grid: GridSize,
    pub hypothesis_grid: GridSize,
    pub tolerances: Tolerances,
}

pub const DEFAULT_GRID: usize = 128;
pub const DEFAULT_INTERVALS: usize = 256;
pub const DEFAULT_MODEL_K_MAX: usize = 40;
pub const DEFAULT_VERIFY_K_MAX: usize = 5;

impl JobConfig {
    pub fn new(command: CommandKind, radius: f64) -> Self {
        Self {
            command,
            metric: None,
            model: None,
            dim: 2,
            radius,
            k_max: match command {
                CommandKind::Model => DEFAULT_MODEL_K_MAX,
                _ => DEFAULT_VERIFY_K_MAX,
            },
            intervals: DEFAULT_INTERVALS,
            require_balanced: false,
            force_direction: None,
            out_dir: None,
            grid: GridSize::square(DEFAULT_GRID),
            hypothesis_grid: GridSize::square(DEFAULT_HYPOTHESIS_GRID),
            tolerances: Tolerances::default(),
        }
    }

    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("job configs always serialise")
    }

    /// Parses a TOML job; `origin` names the source in error messages.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, CliError> {
        let at = |span: Option<Range<usize>>, message: String| {
            let offset = span.map_or(0, |s| s.start);
            let (line, column) = line_column(text, offset);
            CliError::Config {
                origin: origin.to_string(),
                line,
                column,
                message,
            }
        };
        let raw: RawJob = toml::from_str(text).map_err(|e| at(e.span(), e.message().trim().to_string()))?;
        let (config, spans) = raw.into_config();
        match config.validate() {
            Ok(_) => Ok(config),
            Err(e) => {
                let span = spans.get(e.field).cloned();
                // expression offsets are relative to the string contents, after the opening quote
                let span = match (span, e.offset) {
                    (Some(s), Some(o)) => Some(s.start + 1 + o..s.end),
                    (s, _) => s,
                };
                Err(at(span, format!("{}: {}", e.field, e.message)))
            }
        }
    }

    /// Checks every field and builds the geometry the command needs.
    pub fn validate(&self) -> Result<ResolvedJob, FieldError> {
        let needs_metric = self.command != CommandKind::Model;
        let needs_model = self.command != CommandKind::Surface;
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(FieldError::new(
                "radius",
                format!("must be positive, got {}", self.radius),
            ));
        }
        if self.dim < 2 {
            return Err(FieldError::new("dim", format!("must be at least 2, got {}", self.dim)));
        }
        if needs_metric && self.dim != 2 {
            return Err(FieldError::new(
                "dim",
                format!("polar metrics are 2-dimensional, got {}", self.dim),
            ));
        }
        if self.k_max < 1 {
            return Err(FieldError::new("k_max", "must be at least 1"));
        }
        if self.intervals < geoball::radial::MIN_RADIAL_POINTS {
            return Err(FieldError::new(
                "intervals",
                format!("must be at least {}", geoball::radial::MIN_RADIAL_POINTS),
            ));
        }
        for (name, g) in [("grid", self.grid), ("hypothesis_grid", self.hypothesis_grid)] {
            if g.n_r < 2 {
                return Err(FieldError::new(
                    if name == "grid" {
                        "grid.n_r"
                    } else {
                        "hypothesis_grid.n_r"
                    },
                    format!("must be at least 2, got {}", g.n_r),
                ));
            }
            if g.n_theta < 4 || g.n_theta % 2 != 0 {
                return Err(FieldError::new(
                    if name == "grid" {
                        "grid.n_theta"
                    } else {
                        "hypothesis_grid.n_theta"
                    },
                    format!("must be even and at least 4, got {}", g.n_theta),
                ));
            }
        }
        let t = self.tolerances;
        for (name, v) in [
            ("tolerances.inequality", t.inequality),
            ("tolerances.equality", t.equality),
            ("tolerances.quadrature_equality", t.quadrature_equality),
            ("tolerances.symmetrization", t.symmetrization),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(FieldError::new(name, format!("must be a nonnegative number, got {v}")));
            }
        }
        if self.force_direction == Some(Direction::Mixed) {
            return Err(FieldError::new("force_direction", "cannot force a mixed direction"));
        }

        let metric = match (&self.metric, needs_metric) {
            (Some(text), _) => {
                let m = parse_metric_expr(text).map_err(|e| FieldError::from_core("metric", e))?;
                if self.radius > m.r_valid() {
                    return Err(FieldError::new(
                        "radius",
                        format!(
                            "{} exceeds the validity radius {} of {}",
                            self.radius,
                            m.r_valid(),
                            m.label()
                        ),
                    ));
                }
                Some(m)
            }
            (None, true) => return Err(FieldError::new("metric", "required for this command")),
            (None, false) => None,
        };
        let model = match (&self.model, needs_model) {
            (Some(text), _) => {
                let w = parse_warping_expr(text, self.radius).map_err(|e| FieldError::from_core("model", e))?;
                Some(ModelSpace::new(w, self.dim).map_err(|e| FieldError::new("model", e.to_string()))?)
            }
            (None, true) => return Err(FieldError::new("model", "required for this command")),
            (None, false) => None,
        };
        Ok(ResolvedJob { metric, model })
    }

    /// Output directory: explicit setting, then `GEOBALL_OUT_DIR`, then `.`.
    pub fn output_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

pub const OUT_DIR_ENV: &str = "GEOBALL_OUT_DIR";

/// Geometry built from a validated job.
#[derive(Debug, Clone)]
pub struct ResolvedJob {
    pub metric: Option<PolarMetric2D>,
    pub model: Option<ModelSpace>,
}

/// A validation failure on one field; `offset` is a byte position inside
/// an expression string.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: &'static str,
    pub offset: Option<usize>,
    pub message: String,
}

impl FieldError {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            offset: None,
            message: message.into(),
        }
    }

    fn from_core(field: &'static str, e: geoball::Error) -> Self {
        match e {
            geoball::Error::Parse { offset, message } => Self {
                field,
                offset: Some(offset),
                message: format!("{message} (byte {offset})"),
            },
            other => Self::new(field, other.to_string()),
        }
    }
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |p| offset - p - 1) + 1;
    (line, column)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n_r: Option<Spanned<usize>>,
    n_theta: Option<Spanned<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    inequality: Option<Spanned<f64>>,
    equality: Option<Spanned<f64>>,
    quadrature_equality: Option<Spanned<f64>>,
    symmetrization: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJob {
    command: Spanned<CommandKind>,
    metric: Option<Spanned<String>>,
    model: Option<Spanned<String>>,
    dim: Option<Spanned<usize>>,
    radius: Spanned<f64>,
    k_max: Option<Spanned<usize>>,
    intervals: Option<Spanned<usize>>,
    require_balanced: Option<bool>,
    force_direction: Option<Spanned<Direction>>,
    out_dir: Option<PathBuf>,
    grid: Option<RawGrid>,
    hypothesis_grid: Option<RawGrid>,
    tolerances: Option<RawTolerances>,
}

type Spans = HashMap<&'static str, Range<usize>>;

fn take<T>(spans: &mut Spans, name: &'static str, v: Option<Spanned<T>>, slot: &mut T) {
    if let Some(v) = v {
        spans.insert(name, v.span());
        *slot = v.into_inner();
    }
}

impl RawJob {
    fn into_config(self) -> (JobConfig, Spans) {
        let mut spans = Spans::new();
        spans.insert("command", self.command.span());
        let mut c = JobConfig::new(*self.command.get_ref(), *self.radius.get_ref());
        spans.insert("radius", self.radius.span());
        // missing required fields are reported at the command line
        spans.insert("metric", self.command.span());
        spans.insert("model", self.command.span());
        if let Some(m) = self.metric {
            spans.insert("metric", m.span());
            c.metric = Some(m.into_inner());
        }
        if let Some(m) = self.model {
            spans.insert("model", m.span());
            c.model = Some(m.into_inner());
        }
        take(&mut spans, "dim", self.dim, &mut c.dim);
        take(&mut spans, "k_max", self.k_max, &mut c.k_max);
        take(&mut spans, "intervals", self.intervals, &mut c.intervals);
        if let Some(d) = self.force_direction {
            spans.insert("force_direction", d.span());
            c.force_direction = Some(d.into_inner());
        }
        c.require_balanced = self.require_balanced.unwrap_or(false);
        c.out_dir = self.out_dir;
        if let Some(g) = self.grid {
            take(&mut spans, "grid.n_r", g.n_r, &mut c.grid.n_r);
            take(&mut spans, "grid.n_theta", g.n_theta, &mut c.grid.n_theta);
        }
        if let Some(g) = self.hypothesis_grid {
            take(&mut spans, "hypothesis_grid.n_r", g.n_r, &mut c.hypothesis_grid.n_r);
            take(
                &mut spans,
                "hypothesis_grid.n_theta",
                g.n_theta,
                &mut c.hypothesis_grid.n_theta,
            );
        }
        if let Some(t) = self.tolerances {
            take(
                &mut spans,
                "tolerances.inequality",
                t.inequality,
                &mut c.tolerances.inequality,
            );
            take(
                &mut spans,
                "tolerances.equality",
                t.equality,
                &mut c.tolerances.equality,
            );
            take(
                &mut spans,
                "tolerances.quadrature_equality",
                t.quadrature_equality,
                &mut c.tolerances.quadrature_equality,
            );
            take(
                &mut spans,
                "tolerances.symmetrization",
                t.symmetrization,
                &mut c.tolerances.symmetrization,
            );
        }
        (c, spans)
    }
}
