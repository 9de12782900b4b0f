//! Acceptance criteria 1–9, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are always printed; the
//! process exits nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use geoball::hierarchy::{
    hierarchy_sequence, lambda1_from_moments, lambda1_shooting, mean_exit_profile, moment_spectrum,
};
use geoball::model::{ModelSpace, WarpingProfile, BALANCE_TOL};
use geoball::pde::{apply_laplacian, solve_hierarchy_grid, GridField, PolarGrid};
use geoball::surface::{hypothesis_report, Direction, PolarMetric2D};
use geoball::symmetrize::{check_equimeasurable, integral_identity_check, symmetrize_field, transplant_exit_time};
use geoball::verify::{verify, Pipeline, VerificationReport, VerifyConfig, EQUALITY_TOL, SYMMETRIZATION_TOL};
use geoball::Result;

use common::{central_derivatives, example_h, example_k, j0_first_zero};

/// Relative tolerance for the closed-form quadrature oracles.
const CLOSED_FORM_RTOL: f64 = 1e-6;
/// Ratio-route eigenvalue tolerance.
const RATIO_ROUTE_RTOL: f64 = 1e-2;
/// Shooting eigenvalue tolerance.
const SHOOTING_RTOL: f64 = 1e-6;
/// Agreement required between the three balance criteria.
const BALANCE_AGREEMENT: f64 = 1e-9;
/// Analytic evaluators vs the closed forms.
const ANALYTIC_TOL: f64 = 1e-10;
/// Analytic evaluators vs finite differences.
const FD_TOL: f64 = 1e-6;
/// Location of the sign change of K(t, 0).
const SIGN_CHANGE_TOL: f64 = 1e-3;
/// Grid hierarchy vs quadrature profiles, max norm.
const RADIAL_CONSISTENCY_TOL: f64 = 1e-3;
/// Observed order of the discrete Laplacian.
const MIN_LAPLACIAN_ORDER: f64 = 1.8;
/// Sphere length oracle.
const SPHERE_LENGTH_TOL: f64 = 1e-4;
/// Symmetrized radius in the self case.
const SELF_RADIUS_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn flat() -> ModelSpace {
    ModelSpace::space_form(0.0, 2).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn criterion_1() -> Result<Outcome> {
    let (out, t) = timed(|| -> Result<_> {
        let m = flat();
        let spectrum = moment_spectrum(&m, 1.0, 2)?;
        Ok((
            m.isoperimetric_quotient(1.0)?,
            mean_exit_profile(&m, 1.0, 256)?.values()[0],
            spectrum.moment(1)?,
            spectrum.moment(2)?,
        ))
    });
    let (q, e0, a1, a2) = out?;
    let errs = [rel(q, 0.5), rel(e0, 0.25), rel(a1, PI / 8.0), rel(a2, PI / 24.0)];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    Ok(Outcome::new(
        worst <= CLOSED_FORM_RTOL && t < Duration::from_secs(1),
        format!("q(1)={q:.10} E(0)={e0:.10} A1={a1:.10} A2={a2:.10} worst rel err {worst:.2e}, {t:.2?}"),
    ))
}

fn criterion_2() -> Result<Outcome> {
    let j = j0_first_zero();
    let bessel = j * j;
    let (out, t) = timed(|| -> Result<_> {
        let m2 = flat();
        let ratio = lambda1_from_moments(&moment_spectrum(&m2, 1.0, 40)?)?.value;
        let shoot2 = lambda1_shooting(&m2, 1.0)?;
        let shoot3 = lambda1_shooting(&ModelSpace::space_form(0.0, 3)?, 1.0)?;
        Ok((ratio, shoot2, shoot3))
    });
    let (ratio, shoot2, shoot3) = out?;
    let errs = (rel(ratio, bessel), rel(shoot2, bessel), rel(shoot3, PI * PI));
    Ok(Outcome::new(
        errs.0 <= RATIO_ROUTE_RTOL && errs.1 <= SHOOTING_RTOL && errs.2 <= SHOOTING_RTOL && t < Duration::from_secs(5),
        format!(
            "ratio {ratio:.6} ({:.1e}), shooting {shoot2:.9} ({:.1e}) vs j01^2={bessel:.9}, 3-ball {shoot3:.9} ({:.1e}), {t:.2?}",
            errs.0, errs.1, errs.2
        ),
    ))
}

fn criterion_3() -> Result<Outcome> {
    let spectrum = moment_spectrum(&flat(), 1.0, 2)?;
    let rho = spectrum.ratios();
    let a0 = spectrum.moment(0)?;
    Ok(Outcome::new(
        (rho[0] - 8.0).abs() <= 1e-6 && (rho[1] - 6.0).abs() <= 1e-6 && rel(a0, PI) <= CLOSED_FORM_RTOL,
        format!("A0={a0:.10} rho1={:.10} rho2={:.10}", rho[0], rho[1]),
    ))
}

fn criterion_4() -> Result<Outcome> {
    let cases = [
        (WarpingProfile::euclidean(), 2.0),
        (WarpingProfile::space_form(-1.0), 2.0),
        (WarpingProfile::space_form(1.0), PI / 4.0),
        (WarpingProfile::odd_polynomial(vec![1.0])?, 2.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (w, r) in cases {
        let label = w.label();
        let report = ModelSpace::new(w, 2)?.balance_check(r, 400)?;
        pass &= report.balanced && report.min_margin >= -BALANCE_TOL && report.max_disagreement <= BALANCE_AGREEMENT;
        parts.push(format!(
            "{label}@{r:.4}: balanced={} margin={:.2e} disagreement={:.1e}",
            report.balanced, report.min_margin, report.max_disagreement
        ));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn criterion_5() -> Result<Outcome> {
    let m = PolarMetric2D::example();
    let values = [
        ("H(1,pi/2)", m.sphere_mean_curvature(1.0, PI / 2.0)?, 2.0),
        ("H(1,0)", m.sphere_mean_curvature(1.0, 0.0)?, 4.0 / 3.0),
        ("K(1,0)", m.gauss_curvature(1.0, 0.0)?, -1.0 / 3.0),
        ("K(2,0)", m.gauss_curvature(2.0, 0.0)?, 2.0 / 225.0),
    ];
    let mut worst_closed: f64 = 0.0;
    for (_, got, want) in &values {
        worst_closed = worst_closed.max((got - want).abs());
    }
    // analytic evaluators vs the closed forms and vs finite differences on a sample
    let mut worst_formula: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for i in 1..=40 {
        let t = 0.075 * i as f64;
        for j in 0..16 {
            let th = j as f64 * PI / 8.0 + 0.1;
            let h = m.sphere_mean_curvature(t, th)?;
            let k = m.gauss_curvature(t, th)?;
            worst_formula = worst_formula
                .max((h - example_h(t, th)).abs())
                .max((k - example_k(t, th)).abs());
            let w = m.w(t, th);
            let (d1, d2) = central_derivatives(|s| m.w(s, th), t, 1e-4);
            worst_fd = worst_fd.max((h - d1 / w).abs()).max((k + d2 / w).abs());
        }
    }
    // single sign change of K(t, 0) on (0, 3]
    let n = 30_000;
    let mut changes = Vec::new();
    let mut prev = m.gauss_curvature(3.0 / n as f64, 0.0)?;
    for i in 2..=n {
        let t = 3.0 * i as f64 / n as f64;
        let k = m.gauss_curvature(t, 0.0)?;
        if k.signum() != prev.signum() {
            changes.push(t);
        }
        prev = k;
    }
    let sign_ok = changes.len() == 1 && (changes[0] - 3f64.sqrt()).abs() <= SIGN_CHANGE_TOL;
    let hyp = hypothesis_report(&m, &flat(), 2.0, 256, 256)?;
    let pass = worst_closed <= ANALYTIC_TOL
        && worst_formula <= ANALYTIC_TOL
        && worst_fd <= FD_TOL
        && sign_ok
        && hyp.direction == Direction::ModelLeM
        && hyp.min_margin > 0.0;
    Ok(Outcome::new(
        pass,
        format!(
            "closed forms {worst_closed:.1e}, formulas {worst_formula:.1e}, finite differences {worst_fd:.1e}, K sign changes at {changes:?}, H-1/t min {:.3e} on 256x256 to R=2",
            hyp.min_margin
        ),
    ))
}

fn radial_consistency(b: f64) -> Result<f64> {
    let model = ModelSpace::space_form(b, 2)?;
    let metric = PolarMetric2D::radial(WarpingProfile::space_form(b))?;
    let grid = PolarGrid::new(&metric, 1.0, 128, 128)?;
    let h = solve_hierarchy_grid(&grid, 2)?;
    let exact = hierarchy_sequence(&model, 1.0, 2, 1024)?;
    let mut worst: f64 = 0.0;
    for k in 1..=2 {
        let v = h.member(k)?;
        let p = exact.member(k)?;
        worst = worst.max((v.center() - p.eval(0.0)).abs());
        for i in 1..=grid.n_r() {
            for j in 0..grid.n_theta() {
                worst = worst.max((v.get(i, j) - p.eval(grid.r(i))).abs());
            }
        }
    }
    Ok(worst)
}

/// Max-norm error of the discrete Laplacian on f = r²(1 + r²)cos 2θ for a
/// radial wrapper of curvature b.
fn laplacian_error(b: f64, n: usize) -> Result<f64> {
    let w = WarpingProfile::space_form(b);
    let metric = PolarMetric2D::radial(w.clone())?;
    let grid = PolarGrid::new(&metric, 1.0, n, n)?;
    let h = |r: f64| r * r * (1.0 + r * r);
    let h1 = |r: f64| 2.0 * r + 4.0 * r.powi(3);
    let h2 = |r: f64| 2.0 + 12.0 * r * r;
    let f = GridField::from_fn(&grid, |r, t| h(r) * (2.0 * t).cos());
    let lap = apply_laplacian(&grid, &f);
    let mut worst = lap.center().abs();
    for i in 1..grid.n_r() {
        let r = grid.r(i);
        let s = w.eval(r);
        let exact = h2(r) + s.d1 / s.value * h1(r) - 4.0 * h(r) / (s.value * s.value);
        for j in 0..grid.n_theta() {
            worst = worst.max((lap.get(i, j) - exact * (2.0 * grid.theta(j)).cos()).abs());
        }
    }
    Ok(worst)
}

fn criterion_6() -> Result<Outcome> {
    let flat_err = radial_consistency(0.0)?;
    let hyp_err = radial_consistency(-1.0)?;
    let mut orders = Vec::new();
    for b in [0.0, -1.0] {
        let coarse = laplacian_error(b, 32)?;
        let fine = laplacian_error(b, 64)?;
        orders.push((coarse / fine).log2());
    }
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome::new(
        flat_err <= RADIAL_CONSISTENCY_TOL && hyp_err <= RADIAL_CONSISTENCY_TOL && min_order >= MIN_LAPLACIAN_ORDER,
        format!(
            "v1,v2 max error flat {flat_err:.2e} hyperbolic {hyp_err:.2e} at 128x128; Laplacian order {orders:.3?}"
        ),
    ))
}

fn theorem_entry(name: &str) -> bool {
    ["mean_exit", "isoperimetric/", "moments/", "torsional/", "eigenvalue/"]
        .iter()
        .any(|p| name.starts_with(p))
}

fn run_example(radius: f64, n: usize) -> Result<(VerificationReport, Duration)> {
    let config = VerifyConfig::new(radius).with_grid(n, n);
    let (report, t) = timed(|| verify(&PolarMetric2D::example(), &flat(), config));
    Ok((report?, t))
}

fn criterion_7() -> Result<Outcome> {
    let metric = PolarMetric2D::example();
    let length = metric.sphere_length(1.0)?;
    let oracle = 2.0 * PI * (1.0 + 1.0 / 2f64.sqrt());
    let mut pass = (length - oracle).abs() <= SPHERE_LENGTH_TOL;
    let mut parts = vec![format!("Vol(S_1)={length:.8} vs {oracle:.8}")];
    for radius in [0.5, 1.0] {
        let (coarse, _) = run_example(radius, 128)?;
        let (fine, t) = run_example(radius, 256)?;
        let mut count = 0;
        let mut min_margin = f64::INFINITY;
        let mut max_shift: f64 = 0.0;
        let mut unstable = Vec::new();
        for e in fine.entries.iter().filter(|e| theorem_entry(&e.name)) {
            count += 1;
            let c = coarse.entry(&e.name).expect("entry present at both resolutions");
            min_margin = min_margin.min(e.margin).min(c.margin);
            let shift = (e.margin - c.margin).abs();
            max_shift = max_shift.max(shift / e.margin.abs());
            if !(e.pass && c.pass && e.margin > 0.0 && c.margin > 0.0 && shift < e.margin.abs()) {
                unstable.push(e.name.clone());
            }
        }
        pass &= unstable.is_empty() && count >= 15 && t < Duration::from_secs(60);
        parts.push(format!(
            "R={radius}: {count} entries, min margin {min_margin:.3e}, max relative shift 128->256 {max_shift:.2e}, failing {unstable:?}, {t:.1?} at 256x256"
        ));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn equimeasurability_deviation(n: usize) -> Result<f64> {
    let model = flat();
    let grid = PolarGrid::new(&PolarMetric2D::example(), 1.0, n, n)?;
    let field = transplant_exit_time(&model, &grid)?;
    let h = solve_hierarchy_grid(&grid, 1)?;
    let mut worst: f64 = 0.0;
    for f in [&field, h.member(1)?] {
        let fstar = symmetrize_field(f, &grid, &model)?;
        worst = worst.max(check_equimeasurable(f, &grid, &fstar, &model, 200)?.smooth_deviation);
    }
    Ok(worst)
}

/// Entries held to the symmetrization tolerance rather than the equality one.
const EQUIMEASURE_ENTRIES: [&str; 2] = ["symmetrization/equimeasurability", "symmetrization/integral_identity"];

fn criterion_8() -> Result<Outcome> {
    let d128 = equimeasurability_deviation(128)?;
    let d256 = equimeasurability_deviation(256)?;
    let grid = PolarGrid::new(&PolarMetric2D::example(), 1.0, 128, 128)?;
    let identity = integral_identity_check(&grid, &flat())?;
    let gap = identity.relative_gap();

    let metric = PolarMetric2D::radial(WarpingProfile::euclidean())?;
    let pipeline = Pipeline::new(&metric, &flat(), VerifyConfig::new(1.0))?;
    let s = pipeline.symmetrized_radius();
    let report = pipeline.run()?;
    let worst_equality = report
        .entries
        .iter()
        .filter(|e| e.inequality.contains("==") && !EQUIMEASURE_ENTRIES.contains(&e.name.as_str()))
        .map(|e| e.margin.abs())
        .fold(0.0, f64::max);
    let pass = d128 <= SYMMETRIZATION_TOL
        && d256 <= 0.5 * d128
        && gap <= SYMMETRIZATION_TOL
        && (s - 1.0).abs() <= SELF_RADIUS_TOL
        && worst_equality <= EQUALITY_TOL
        && report.hypothesis.direction == Direction::Equal;
    Ok(Outcome::new(
        pass,
        format!(
            "equimeasurability {d128:.3e} at 128, {d256:.3e} at 256 (ratio {:.2}); integral identity gap {gap:.1e}; self case s-R={:.1e}, worst equality margin {worst_equality:.2e}",
            d128 / d256,
            s - 1.0
        ),
    ))
}

fn criterion_9() -> Result<Outcome> {
    let mut config = VerifyConfig::new(1.0);
    config.force_direction = Some(Direction::ModelGeM);
    let report = verify(&PolarMetric2D::example(), &flat(), config)?;
    let theorem: Vec<_> = report.entries.iter().filter(|e| theorem_entry(&e.name)).collect();
    let failing = theorem.iter().filter(|e| !e.pass && e.margin < 0.0).count();
    let first = report.first_failure().map(|e| e.name.clone()).unwrap_or_default();
    let pass = !report.all_pass()
        && report.hypothesis.observed == Direction::ModelLeM
        && report.entry("mean_exit").is_some_and(|e| !e.pass && e.margin < 0.0)
        && report
            .entry("eigenvalue/inverse_iteration")
            .is_some_and(|e| !e.pass && e.margin < 0.0)
        && report
            .entry("torsional/symmetrized")
            .is_some_and(|e| !e.pass && e.margin < 0.0);
    Ok(Outcome::new(
        pass,
        format!(
            "forced model>=M: {failing}/{} theorem entries fail with negative margin, first failure {first}",
            theorem.len()
        ),
    ))
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("closed-form model oracle", criterion_1),
        ("eigenvalue reproduction", criterion_2),
        ("ratio trace", criterion_3),
        ("balance suite", criterion_4),
        ("example metric closed forms", criterion_5),
        ("grid vs quadrature consistency", criterion_6),
        ("theorem harness on example1", criterion_7),
        ("symmetrization suite", criterion_8),
        ("negative control", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {}: {} ({name}) {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "acceptance: {}/{} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
