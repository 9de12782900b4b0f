//! The four computations behind the subcommands.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use geoball::hierarchy::{lambda1_from_moments, lambda1_shooting, mean_exit_profile, moment_spectrum};
use geoball::model::ModelSpace;
use geoball::pde::{solve_hierarchy_grid, PolarGrid};
use geoball::surface::{hypothesis_report, PolarMetric2D};
use geoball::symmetrize::{check_equimeasurable, integral_identity_check, symmetrize_field};
use geoball::verify::{verify, VerificationReport, VerifyConfig};

use crate::config::{CommandKind, JobConfig};
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, write_csv, write_json, write_summary, Cell};

/// Level samples for the equimeasurability check.
pub const LEVEL_SAMPLES: usize = 2048;

/// What a command produced and whether its checks held.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
    /// Name and detail of the first failing check.
    pub failure: Option<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

pub fn run_job(job: &JobConfig, out_dir: &Path) -> Result<Outcome> {
    let resolved = job.validate().map_err(|e| CliError::Arguments(e.to_string()))?;
    ensure_dir(out_dir)?;
    let metric = resolved.metric.as_ref();
    let model = resolved.model.as_ref();
    match job.command {
        CommandKind::Model => run_model(job, model.expect("validated"), out_dir),
        CommandKind::Surface => run_surface(job, metric.expect("validated"), model, out_dir),
        CommandKind::Verify => run_verify(job, metric.expect("validated"), model.expect("validated"), out_dir),
        CommandKind::Symmetrize => run_symmetrize(job, metric.expect("validated"), model.expect("validated"), out_dir),
    }
}

fn nodes(radius: f64, intervals: usize) -> impl Iterator<Item = f64> {
    (0..=intervals).map(move |i| radius * i as f64 / intervals as f64)
}

fn run_model(job: &JobConfig, model: &ModelSpace, out: &Path) -> Result<Outcome> {
    let radius = job.radius;
    let exit = mean_exit_profile(model, radius, job.intervals)?;
    let mut rows = Vec::with_capacity(job.intervals + 1);
    for (i, r) in nodes(radius, job.intervals).enumerate() {
        let w = model.warping().eval(r);
        let (eta, q, sphere) = if i == 0 {
            (None, 0.0, 0.0)
        } else {
            (
                Some(model.mean_curvature(r)?),
                model.isoperimetric_quotient(r)?,
                model.sphere_volume(r)?,
            )
        };
        rows.push(vec![
            r.into(),
            w.value.into(),
            eta.into(),
            q.into(),
            model.ball_volume(r)?.into(),
            sphere.into(),
            exit.values()[i].into(),
        ]);
    }
    let mut files = vec![write_csv(
        out,
        "model_profile.csv",
        &["r", "omega", "eta", "q", "ball_volume", "sphere_volume", "mean_exit"],
        &rows,
    )?];

    let spectrum = moment_spectrum(model, radius, job.k_max)?;
    let ratios = spectrum.ratios();
    let boundary = spectrum.boundary_estimates.clone().unwrap_or_default();
    let mut rows = Vec::with_capacity(job.k_max + 1);
    for k in 0..=job.k_max {
        rows.push(vec![
            k.into(),
            spectrum.moment(k)?.into(),
            spectrum.normalized(k)?.into(),
            spectrum.averaged_moment(k)?.into(),
            boundary.get(k).copied().into(),
            k.checked_sub(1).map(|j| ratios[j]).into(),
        ]);
    }
    files.push(write_csv(
        out,
        "model_moments.csv",
        &["k", "moment", "normalized", "averaged", "boundary_estimate", "ratio"],
        &rows,
    )?);

    let balance = model.balance_check(radius, job.intervals)?;
    let from_moments = if job.k_max >= 4 {
        Some(lambda1_from_moments(&spectrum)?.value)
    } else {
        None
    };
    let shooting = lambda1_shooting(model, radius)?;
    let gap = from_moments.map(|m| (m - shooting).abs() / shooting);
    files.push(write_summary(
        out,
        "model_summary.csv",
        vec![
            ("model", model.warping().label().into()),
            ("dim", model.dim().into()),
            ("radius", radius.into()),
            ("ball_volume", model.ball_volume(radius)?.into()),
            ("sphere_volume", model.sphere_volume(radius)?.into()),
            ("mean_exit_center", exit.values()[0].into()),
            ("balanced", balance.balanced.into()),
            ("balance_margin", balance.min_margin.into()),
            ("balance_argmin", balance.argmin.into()),
            ("balance_disagreement", balance.max_disagreement.into()),
            ("balance_scope", balance.scope.clone().into()),
            ("lambda1_moments", from_moments.into()),
            ("lambda1_shooting", shooting.into()),
            ("lambda1_relative_gap", gap.into()),
        ],
    )?);

    let mut summary = vec![
        format!("model {} (n = {}) on [0, {radius}]", model.warping(), model.dim()),
        format!("  E(0) = {:.12}", exit.values()[0]),
        format!(
            "  balanced on (0, {radius}]: {} (min margin {:.6e} at r = {:.6})",
            balance.balanced, balance.min_margin, balance.argmin
        ),
        format!("  lambda1: shooting {shooting:.10}"),
    ];
    if let Some(m) = from_moments {
        summary.push(format!("  lambda1: moment ratios {m:.10} (k_max = {})", job.k_max));
    }
    let failure = (job.require_balanced && !balance.balanced).then(|| {
        format!(
            "balance: q*eta <= 1/(n-1) fails at r = {} (margin {:e})",
            balance.argmin, balance.min_margin
        )
    });
    Ok(Outcome {
        summary,
        files,
        failure,
    })
}

fn run_surface(job: &JobConfig, metric: &PolarMetric2D, model: Option<&ModelSpace>, out: &Path) -> Result<Outcome> {
    let radius = job.radius;
    let (n_r, n_theta) = (job.grid.n_r, job.grid.n_theta);
    let mut header = vec!["r", "theta", "omega", "mean_curvature", "gauss_curvature"];
    if model.is_some() {
        header.extend(["model_mean_curvature", "curvature_gap"]);
    }
    let mut rows = Vec::with_capacity(n_r * n_theta);
    for i in 1..=n_r {
        let r = radius * i as f64 / n_r as f64;
        let eta = model.map(|m| m.mean_curvature(r)).transpose()?;
        for j in 0..n_theta {
            let theta = 2.0 * PI * j as f64 / n_theta as f64;
            let h = metric.sphere_mean_curvature(r, theta)?;
            let mut row = vec![
                r.into(),
                theta.into(),
                metric.w(r, theta).into(),
                h.into(),
                metric.gauss_curvature(r, theta)?.into(),
            ];
            if let Some(eta) = eta {
                row.extend([eta.into(), (h - eta).into()]);
            }
            rows.push(row);
        }
    }
    let mut files = vec![write_csv(out, "surface_grid.csv", &header, &rows)?];

    let mut rows = Vec::with_capacity(job.intervals + 1);
    for (i, r) in nodes(radius, job.intervals).enumerate() {
        let length = if i == 0 { 0.0 } else { metric.sphere_length(r)? };
        let area = if i == 0 { 0.0 } else { metric.ball_area(r)? };
        rows.push(vec![r.into(), length.into(), area.into()]);
    }
    files.push(write_csv(
        out,
        "surface_radial.csv",
        &["r", "sphere_length", "ball_area"],
        &rows,
    )?);

    let mut summary = vec![format!(
        "surface {} on B_{radius}: area {:.12}",
        metric.label(),
        metric.ball_area(radius)?
    )];
    if let Some(model) = model {
        let h = hypothesis_report(
            metric,
            model,
            radius,
            job.hypothesis_grid.n_r,
            job.hypothesis_grid.n_theta,
        )?;
        summary.push(format!(
            "  against {}: direction {} (min margin {:.6e} at t = {:.6}, theta = {:.6})",
            model.warping(),
            h.direction,
            h.min_margin,
            h.argmin.0,
            h.argmin.1
        ));
        files.push(write_json(out, "surface_hypothesis.json", &h)?);
    }
    Ok(Outcome {
        summary,
        files,
        failure: None,
    })
}

pub fn verify_config(job: &JobConfig) -> VerifyConfig {
    let mut config = VerifyConfig::new(job.radius).with_grid(job.grid.n_r, job.grid.n_theta);
    config.k_max = job.k_max;
    config.hypothesis_grid = (job.hypothesis_grid.n_r, job.hypothesis_grid.n_theta);
    config.force_direction = job.force_direction;
    config.tolerances = job.tolerances;
    config
}

/// Human-readable table of a report.
pub fn report_summary(report: &VerificationReport) -> Vec<String> {
    let p = &report.provenance;
    let h = &report.hypothesis;
    let mut lines = vec![
        format!(
            "verify {} against {} on B_{} (grid {}x{}, k_max {})",
            p.metric, p.model, p.radius, p.n_r, p.n_theta, p.k_max
        ),
        format!(
            "  direction {} (observed {}, min margin {:.6e}){}",
            h.direction,
            h.observed,
            h.min_margin,
            if h.forced { ", forced" } else { "" }
        ),
    ];
    let width = report.entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
    for e in &report.entries {
        lines.push(format!(
            "  {} {:width$}  margin {:+.6e}  tol {:.1e}",
            if e.pass { "PASS" } else { "FAIL" },
            e.name,
            e.margin,
            e.tol
        ));
    }
    let passed = report.entries.iter().filter(|e| e.pass).count();
    lines.push(format!("  {passed}/{} entries pass", report.entries.len()));
    lines
}

fn run_verify(job: &JobConfig, metric: &PolarMetric2D, model: &ModelSpace, out: &Path) -> Result<Outcome> {
    let report = verify(metric, model, verify_config(job))?;
    let files = vec![write_json(out, "report.json", &report)?];
    let failure = report
        .first_failure()
        .map(|e| format!("{}: {} (margin {:e}, tol {:e})", e.name, e.inequality, e.margin, e.tol));
    Ok(Outcome {
        summary: report_summary(&report),
        files,
        failure,
    })
}

fn run_symmetrize(job: &JobConfig, metric: &PolarMetric2D, model: &ModelSpace, out: &Path) -> Result<Outcome> {
    let grid = PolarGrid::new(metric, job.radius, job.grid.n_r, job.grid.n_theta)?;
    let hierarchy = solve_hierarchy_grid(&grid, 1)?;
    let field = hierarchy.member(1)?;
    let fstar = symmetrize_field(field, &grid, model)?;
    let s = fstar.radius;
    let eq = check_equimeasurable(field, &grid, &fstar, model, LEVEL_SAMPLES)?;
    let identity = integral_identity_check(&grid, model)?;
    let model_exit = mean_exit_profile(model, s, job.intervals)?;

    let rows: Vec<Vec<Cell>> = nodes(s, job.intervals)
        .enumerate()
        .map(|(i, rho)| {
            vec![
                rho.into(),
                fstar.step_value(rho).into(),
                fstar.smooth_value(rho).into(),
                model_exit.values()[i].into(),
            ]
        })
        .collect();
    let mut files = vec![write_csv(
        out,
        "symmetrize.csv",
        &["rho", "step_value", "smooth_value", "model_mean_exit"],
        &rows,
    )?];
    let tol = job.tolerances.symmetrization;
    files.push(write_summary(
        out,
        "symmetrize_summary.csv",
        vec![
            ("metric", metric.label().into()),
            ("model", model.warping().label().into()),
            ("radius", job.radius.into()),
            ("ball_area", grid.total_area().into()),
            ("symmetrized_radius", s.into()),
            ("levels", fstar.steps.len().into()),
            ("equimeasurability_step", eq.step_deviation.into()),
            ("equimeasurability_smooth", eq.smooth_deviation.into()),
            ("integral_manifold", identity.manifold.into()),
            ("integral_model", identity.model.into()),
            ("integral_relative_gap", identity.relative_gap().into()),
            ("tolerance", tol.into()),
        ],
    )?);

    let summary = vec![
        format!(
            "symmetrize mean exit time of {} on B_{} into {}",
            metric.label(),
            job.radius,
            model.warping()
        ),
        format!("  s(R) = {s:.12}, sup f* = {:.12}", fstar.step_value(0.0)),
        format!(
            "  equimeasurability deviation {:.6e} (step form {:.6e})",
            eq.smooth_deviation, eq.step_deviation
        ),
        format!("  integral identity gap {:.6e}", identity.relative_gap()),
    ];
    let failure = if !(eq.smooth_deviation <= tol) {
        Some(format!(
            "equimeasurability: deviation {:e} exceeds {tol:e}",
            eq.smooth_deviation
        ))
    } else if !(identity.relative_gap() <= tol) {
        Some(format!(
            "integral_identity: relative gap {:e} exceeds {tol:e}",
            identity.relative_gap()
        ))
    } else {
        None
    };
    Ok(Outcome {
        summary,
        files,
        failure,
    })
}
