//! Runs the comparison pipeline for a (metric, model, R) triple and records
//! a signed margin for every inequality it checks.
//!
//! Every entry compares two quantities `lhs` and `rhs` that the hypothesis
//! direction orders. For η_ω ≤ H_M the entry asserts lhs ≥ rhs, for the
//! reversed direction lhs ≤ rhs, and for a radial self-comparison lhs = rhs.
//! Margins are differences normalised by the magnitude of the compared
//! quantities, so they are comparable across entries and resolutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{
    hierarchy_sequence, lambda1_shooting, mean_exit_profile, moment_spectrum, Hierarchy, MomentSpectrum,
};
use crate::model::ModelSpace;
use crate::pde::{lambda1_grid_with, moments_grid, GridField, GridHierarchy, GridSolver, PolarGrid, GRID_MOMENT_K_MAX};
use crate::surface::{hypothesis_report, Direction, HypothesisReport, PolarMetric2D, DEFAULT_HYPOTHESIS_GRID};
use crate::symmetrize::{
    check_equimeasurable, integral_identity_check, symmetrize_field, symmetrized_profile_comparison,
    symmetrized_radius, transplant_radial,
};

/// Pass threshold for strict inequalities, on normalised margins.
pub const INEQUALITY_TOL: f64 = 1e-6;
/// Pass threshold for grid-limited equality cases.
pub const EQUALITY_TOL: f64 = 1e-3;
/// Pass threshold for equalities that only involve quadrature.
pub const QUADRATURE_EQUALITY_TOL: f64 = 1e-6;
/// Pass threshold for the integral identity and equimeasurability.
pub const SYMMETRIZATION_TOL: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Entry {
    fn new(name: impl Into<String>, inequality: String, lhs: f64, rhs: f64, margin: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            inequality,
            lhs,
            rhs,
            margin,
            tol,
            pass: margin >= -tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    /// Direction used for the entries.
    pub direction: Direction,
    /// Direction found on the hypothesis grid.
    pub observed: Direction,
    pub min_margin: f64,
    pub argmin: (f64, f64),
    pub forced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub metric: String,
    pub model: String,
    pub dim: usize,
    pub radius: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub k_max: usize,
    pub hypothesis_grid: (usize, usize),
    pub tolerances: Tolerances,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub hypothesis: HypothesisRecord,
    pub entries: Vec<Entry>,
    pub provenance: Provenance,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn first_failure(&self) -> Option<&Entry> {
        self.entries.iter().find(|e| !e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub radius: f64,
    pub n_r: usize,
    pub n_theta: usize,
    /// Highest hierarchy index compared.
    pub k_max: usize,
    /// Radii, as fractions of R, for the isoperimetric entries.
    pub r_fractions: Vec<f64>,
    pub hypothesis_grid: (usize, usize),
    /// Asserts this direction instead of the observed one.
    pub force_direction: Option<Direction>,
    pub tolerances: Tolerances,
}

/// Pass thresholds on normalised margins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub inequality: f64,
    pub equality: f64,
    pub quadrature_equality: f64,
    pub symmetrization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            inequality: INEQUALITY_TOL,
            equality: EQUALITY_TOL,
            quadrature_equality: QUADRATURE_EQUALITY_TOL,
            symmetrization: SYMMETRIZATION_TOL,
        }
    }
}

impl VerifyConfig {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            n_r: 128,
            n_theta: 128,
            k_max: 5,
            r_fractions: vec![0.25, 0.5, 1.0],
            hypothesis_grid: (DEFAULT_HYPOTHESIS_GRID, DEFAULT_HYPOTHESIS_GRID),
            force_direction: None,
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_grid(mut self, n_r: usize, n_theta: usize) -> Self {
        self.n_r = n_r;
        self.n_theta = n_theta;
        self
    }
}

/// The shared computations behind every entry.
pub struct Pipeline {
    metric: PolarMetric2D,
    model: ModelSpace,
    config: VerifyConfig,
    hypothesis: HypothesisReport,
    direction: Direction,
    grid: PolarGrid,
    solver: GridSolver,
    grid_hierarchy: GridHierarchy,
    model_hierarchy: Hierarchy,
    model_spectrum: MomentSpectrum,
    grid_spectrum: MomentSpectrum,
    symmetrized_radius: f64,
}

fn op(direction: Direction) -> &'static str {
    match direction {
        Direction::ModelLeM => ">=",
        Direction::ModelGeM => "<=",
        _ => "==",
    }
}

/// Scalar comparison: under model<=M asserts lhs ≥ rhs.
#[allow(clippy::too_many_arguments)]
fn scalar_entry(
    name: &str,
    lhs_name: &str,
    rhs_name: &str,
    lhs: f64,
    rhs: f64,
    direction: Direction,
    inequality_tol: f64,
    equality_tol: f64,
) -> Entry {
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    let inequality = format!("{lhs_name} {} {rhs_name}", op(direction));
    match direction.sign() {
        Some(s) if s != 0.0 => Entry::new(name, inequality, lhs, rhs, s * (lhs - rhs) / scale, inequality_tol),
        _ => Entry::new(name, inequality, lhs, rhs, -(lhs - rhs).abs() / scale, equality_tol),
    }
}

/// Pointwise comparison over the pole and interior rings, each node's
/// difference divided by the larger of the two values there.
#[allow(clippy::too_many_arguments)]
fn field_entry(
    name: &str,
    lhs_name: &str,
    rhs_name: &str,
    lhs: &GridField,
    rhs: &GridField,
    grid: &PolarGrid,
    direction: Direction,
    tolerances: &Tolerances,
) -> Entry {
    let floor = 1e-14 * lhs.max_abs().max(rhs.max_abs());
    let sign = direction.sign().unwrap_or(0.0);
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    let mut consider = |a: f64, b: f64| {
        let scale = a.abs().max(b.abs());
        if scale <= floor {
            return;
        }
        let m = if sign == 0.0 {
            -(a - b).abs() / scale
        } else {
            sign * (a - b) / scale
        };
        if m < worst.0 {
            worst = (m, a, b);
        }
    };
    consider(lhs.center(), rhs.center());
    for i in 1..grid.n_r() {
        for j in 0..grid.n_theta() {
            consider(lhs.get(i, j), rhs.get(i, j));
        }
    }
    let tol = if sign == 0.0 {
        tolerances.equality
    } else {
        tolerances.inequality
    };
    Entry::new(
        name,
        format!("{lhs_name} {} {rhs_name} at every node", op(direction)),
        worst.1,
        worst.2,
        worst.0,
        tol,
    )
}

impl Pipeline {
    pub fn new(metric: &PolarMetric2D, model: &ModelSpace, config: VerifyConfig) -> Result<Self> {
        if model.dim() != 2 {
            return Err(Error::Precondition(format!(
                "surface verification needs a 2-dimensional model, got n = {}",
                model.dim()
            )));
        }
        if config.k_max < 1 {
            return Err(Error::InvalidArgument("k_max must be at least 1".into()));
        }
        let r = config.radius;
        let (hr, ht) = config.hypothesis_grid;
        let hypothesis = hypothesis_report(metric, model, r, hr, ht)?;
        let direction = config.force_direction.unwrap_or(hypothesis.direction);
        if direction == Direction::Mixed {
            return Err(Error::Precondition(format!(
                "mean curvatures of {} and {} are not ordered on B_{r} (margin {} at {:?})",
                metric.label(),
                model.warping(),
                hypothesis.min_margin,
                hypothesis.argmin
            )));
        }
        let grid = PolarGrid::new(metric, r, config.n_r, config.n_theta)?;
        let solver = GridSolver::new(&grid)?;
        let grid_hierarchy = solver.hierarchy(config.k_max.max(GRID_MOMENT_K_MAX))?;
        let model_hierarchy = hierarchy_sequence(model, r, config.k_max, config.n_r.max(16))?;
        let model_spectrum = moment_spectrum(model, r, config.k_max)?;
        let grid_spectrum = moments_grid(&grid, &grid_hierarchy)?;
        let symmetrized_radius = symmetrized_radius(metric.ball_area(r)?, model)?;
        Ok(Self {
            metric: metric.clone(),
            model: model.clone(),
            config,
            hypothesis,
            direction,
            grid,
            solver,
            grid_hierarchy,
            model_hierarchy,
            model_spectrum,
            grid_spectrum,
            symmetrized_radius,
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn hypothesis(&self) -> &HypothesisReport {
        &self.hypothesis
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn symmetrized_radius(&self) -> f64 {
        self.symmetrized_radius
    }

    fn radius(&self) -> f64 {
        self.config.radius
    }

    fn require_balance(&self) -> Result<()> {
        let top = self.radius().max(self.symmetrized_radius);
        if top >= self.model.r_max() {
            return Err(Error::Precondition(format!(
                "symmetrized radius {top} leaves the model domain"
            )));
        }
        let balance = self.model.balance_check(top, 200)?;
        if balance.balanced {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "model {} is not balanced from above on (0, {top}] (margin {} at r = {})",
                self.model.warping(),
                balance.min_margin,
                balance.argmin
            )))
        }
    }

    /// 𝔼_R^ω ≥ E_R^M at every node.
    pub fn verify_mean_exit(&self) -> Result<Entry> {
        let transplanted = transplant_radial(self.model_hierarchy.member(1)?, &self.grid);
        Ok(field_entry(
            "mean_exit",
            "E_R^omega(transplanted)",
            "E_R^M",
            &transplanted,
            self.grid_hierarchy.member(1)?,
            &self.grid,
            self.direction,
            &self.config.tolerances,
        ))
    }

    /// q_ω(r) ≥ Vol(B_r^M)/Vol(S_r^M), Vol(B_r^M) ≥ Vol(B_r^ω) and
    /// Vol(S_r^M) ≥ Vol(S_r^ω) at r = fraction·R.
    pub fn verify_isoperimetric_volumes(&self) -> Result<Vec<Entry>> {
        let mut out = Vec::new();
        for f in &self.config.r_fractions {
            let r = f * self.radius();
            let ball_m = self.metric.ball_area(r)?;
            let sphere_m = self.metric.sphere_length(r)?;
            out.push(scalar_entry(
                &format!("isoperimetric/quotient@{r}"),
                "q_omega(r)",
                "Vol(B_r^M)/Vol(S_r^M)",
                self.model.isoperimetric_quotient(r)?,
                ball_m / sphere_m,
                self.direction,
                self.config.tolerances.inequality,
                self.config.tolerances.quadrature_equality,
            ));
            out.push(scalar_entry(
                &format!("isoperimetric/ball@{r}"),
                "Vol(B_r^M)",
                "Vol(B_r^omega)",
                ball_m,
                self.model.ball_volume(r)?,
                self.direction,
                self.config.tolerances.inequality,
                self.config.tolerances.quadrature_equality,
            ));
            out.push(scalar_entry(
                &format!("isoperimetric/sphere@{r}"),
                "Vol(S_r^M)",
                "Vol(S_r^omega)",
                sphere_m,
                self.model.sphere_volume(r)?,
                self.direction,
                self.config.tolerances.inequality,
                self.config.tolerances.quadrature_equality,
            ));
        }
        Ok(out)
    }

    /// Transplanted v_k^ω ≥ v_k^M pointwise and averaged moments
    /// A_k(B^ω)/Vol(S^ω) ≥ A_k(B^M)/Vol(S^M), k = 1..=k_max.
    pub fn verify_moment_spectrum(&self) -> Result<Vec<Entry>> {
        let mut out = Vec::new();
        for k in 1..=self.config.k_max {
            let transplanted = transplant_radial(self.model_hierarchy.member(k)?, &self.grid);
            out.push(field_entry(
                &format!("moments/hierarchy_k{k}"),
                &format!("v_{k}^omega(transplanted)"),
                &format!("v_{k}^M"),
                &transplanted,
                self.grid_hierarchy.member(k)?,
                &self.grid,
                self.direction,
                &self.config.tolerances,
            ));
        }
        for k in 1..=self.config.k_max {
            out.push(scalar_entry(
                &format!("moments/averaged_k{k}"),
                &format!("A_{k}(B^omega)/Vol(S^omega)"),
                &format!("A_{k}(B^M)/Vol(S^M)"),
                self.model_spectrum.averaged_moment(k)?,
                self.grid_spectrum.averaged_moment(k)?,
                self.direction,
                self.config.tolerances.inequality,
                self.config.tolerances.equality,
            ));
        }
        Ok(out)
    }

    /// A_1(B_{s(R)}^ω) ≥ A_1(B_R^M) and A_1(B_R^M) ≤ E_{s(R)}^ω(0)·Vol(B_R^M).
    pub fn verify_torsional(&self) -> Result<Vec<Entry>> {
        self.require_balance()?;
        let s = self.symmetrized_radius;
        let a1_model = moment_spectrum(&self.model, s, 1)?.moment(1)?;
        let a1_grid = self.grid_spectrum.moment(1)?;
        let mut out = vec![scalar_entry(
            "torsional/symmetrized",
            "A_1(B_s(R)^omega)",
            "A_1(B_R^M)",
            a1_model,
            a1_grid,
            self.direction,
            self.config.tolerances.inequality,
            self.config.tolerances.equality,
        )];
        if self.direction != Direction::ModelGeM {
            let e0 = mean_exit_profile(&self.model, s, 64)?.values()[0];
            let bound = e0 * self.metric.ball_area(self.radius())?;
            out.push(scalar_entry(
                "torsional/coarse_bound",
                "E_s(R)^omega(0)*Vol(B_R^M)",
                "A_1(B_R^M)",
                bound,
                a1_grid,
                Direction::ModelLeM,
                self.config.tolerances.inequality,
                self.config.tolerances.equality,
            ));
        }
        if self.direction == Direction::Equal {
            out.push(scalar_entry(
                "torsional/symmetrized_radius",
                "s(R)",
                "R",
                s,
                self.radius(),
                Direction::Equal,
                self.config.tolerances.inequality,
                self.config.tolerances.quadrature_equality,
            ));
        }
        Ok(out)
    }

    /// λ₁(B_R^M) ≥ λ₁(B_R^ω), by both grid routes against shooting. In the
    /// equality case also the equalities of moments and hierarchies.
    pub fn verify_eigenvalue(&self) -> Result<Vec<Entry>> {
        let shooting = lambda1_shooting(&self.model, self.radius())?;
        let grid = lambda1_grid_with(&self.solver, &self.grid_hierarchy)?;
        let mut out = vec![
            scalar_entry(
                "eigenvalue/inverse_iteration",
                "lambda_1(B_R^M)",
                "lambda_1(B_R^omega)",
                grid.power_value,
                shooting,
                self.direction,
                self.config.tolerances.inequality,
                self.config.tolerances.equality,
            ),
            scalar_entry(
                "eigenvalue/moment_ratio",
                "lambda_1(B_R^M)[moments]",
                "lambda_1(B_R^omega)",
                grid.moment_value,
                shooting,
                self.direction,
                self.config.tolerances.inequality,
                self.config.tolerances.equality,
            ),
        ];
        if self.direction == Direction::Equal {
            let mut worst = (0.0f64, 0.0, 0.0);
            for k in 1..=self.config.k_max {
                let a = self.model_spectrum.normalized(k)?;
                let b = self.grid_spectrum.normalized(k)?;
                let dev = (a - b).abs() / a.abs().max(b.abs());
                if dev >= worst.0 {
                    worst = (dev, a, b);
                }
            }
            out.push(Entry::new(
                "eigenvalue/equal_moments",
                "A_k(B^omega) == A_k(B^M) for all k".into(),
                worst.1,
                worst.2,
                -worst.0,
                self.config.tolerances.equality,
            ));
            let mut hier = (0.0f64, 0.0, 0.0);
            for k in 1..=self.config.k_max {
                let transplanted = transplant_radial(self.model_hierarchy.member(k)?, &self.grid);
                let e = field_entry(
                    "",
                    "",
                    "",
                    &transplanted,
                    self.grid_hierarchy.member(k)?,
                    &self.grid,
                    Direction::Equal,
                    &self.config.tolerances,
                );
                if -e.margin >= hier.0 {
                    hier = (-e.margin, e.lhs, e.rhs);
                }
            }
            out.push(Entry::new(
                "eigenvalue/equal_hierarchy",
                "v_k^omega == v_k^M for all k".into(),
                hier.1,
                hier.2,
                -hier.0,
                self.config.tolerances.equality,
            ));
        }
        Ok(out)
    }

    /// Integral identity, equimeasurability and the symmetrized profile bound.
    pub fn verify_symmetrization(&self) -> Result<Vec<Entry>> {
        self.require_balance()?;
        let identity = integral_identity_check(&self.grid, &self.model)?;
        let mut out = vec![Entry::new(
            "symmetrization/integral_identity",
            "int_{B_R^M} E^omega == int_{B_s^omega} (E^omega)*".into(),
            identity.manifold,
            identity.model,
            -identity.relative_gap(),
            self.config.tolerances.symmetrization,
        )];
        let field = self.grid_hierarchy.member(1)?;
        let fstar = symmetrize_field(field, &self.grid, &self.model)?;
        let eq = check_equimeasurable(field, &self.grid, &fstar, &self.model, 2048)?;
        out.push(Entry::new(
            "symmetrization/equimeasurability",
            "Vol_M{E^M >= t} == Vol_omega{(E^M)* >= t}".into(),
            eq.smooth_deviation,
            0.0,
            -eq.smooth_deviation,
            self.config.tolerances.symmetrization,
        ));
        let cmp = symmetrized_profile_comparison(&self.grid, &self.model, self.direction)?;
        let (margin, tol) = if self.direction == Direction::Equal {
            (-cmp.max_deviation, self.config.tolerances.equality)
        } else {
            (cmp.min_margin, self.config.tolerances.inequality)
        };
        out.push(Entry::new(
            "symmetrization/profile",
            format!(
                "E_s(R)^omega(rho) {} (E_R^omega)*(rho) on [0, s(R))",
                op(self.direction)
            ),
            cmp.model_value,
            cmp.symmetrized_value,
            margin,
            tol,
        ));
        Ok(out)
    }

    pub fn run(&self) -> Result<VerificationReport> {
        let mut entries = vec![self.verify_mean_exit()?];
        entries.extend(self.verify_isoperimetric_volumes()?);
        entries.extend(self.verify_moment_spectrum()?);
        entries.extend(self.verify_torsional()?);
        entries.extend(self.verify_eigenvalue()?);
        entries.extend(self.verify_symmetrization()?);
        Ok(VerificationReport {
            hypothesis: HypothesisRecord {
                direction: self.direction,
                observed: self.hypothesis.direction,
                min_margin: self.hypothesis.min_margin,
                argmin: self.hypothesis.argmin,
                forced: self.config.force_direction.is_some(),
            },
            entries,
            provenance: Provenance {
                metric: self.metric.label().to_string(),
                model: self.model.warping().label(),
                dim: self.model.dim(),
                radius: self.radius(),
                n_r: self.config.n_r,
                n_theta: self.config.n_theta,
                k_max: self.config.k_max,
                hypothesis_grid: self.config.hypothesis_grid,
                tolerances: self.config.tolerances,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        })
    }
}

/// Builds the pipeline and runs every entry.
pub fn verify(metric: &PolarMetric2D, model: &ModelSpace, config: VerifyConfig) -> Result<VerificationReport> {
    Pipeline::new(metric, model, config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WarpingProfile;

    #[test]
    fn scalar_entries_follow_direction() {
        let e = scalar_entry("x", "a", "b", 2.0, 1.0, Direction::ModelLeM, 1e-6, 1e-3);
        assert!(e.pass && e.margin > 0.0);
        assert_eq!(e.inequality, "a >= b");
        let e = scalar_entry("x", "a", "b", 2.0, 1.0, Direction::ModelGeM, 1e-6, 1e-3);
        assert!(!e.pass);
        let e = scalar_entry("x", "a", "b", 1.0, 1.0 + 1e-5, Direction::Equal, 1e-6, 1e-3);
        assert!(e.pass && e.margin <= 0.0);
    }

    #[test]
    fn flat_self_case_is_degenerate() {
        let metric = PolarMetric2D::radial(WarpingProfile::euclidean()).unwrap();
        let model = ModelSpace::space_form(0.0, 2).unwrap();
        let mut config = VerifyConfig::new(1.0).with_grid(128, 128);
        config.hypothesis_grid = (32, 32);
        let report = verify(&metric, &model, config).unwrap();
        assert_eq!(report.hypothesis.direction, Direction::Equal);
        for e in &report.entries {
            assert!(e.pass, "{e:?}");
        }
    }

    #[test]
    fn mixed_hypothesis_is_a_precondition_error() {
        let metric = PolarMetric2D::example();
        let model = ModelSpace::space_form(-4.0, 2).unwrap();
        let mut config = VerifyConfig::new(2.0).with_grid(16, 16);
        config.hypothesis_grid = (32, 32);
        assert!(matches!(verify(&metric, &model, config), Err(Error::Precondition(_))));
    }
}
