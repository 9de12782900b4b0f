//! Schwarz symmetrization of grid fields into model spaces.
//!
//! A nonnegative field f on a grid ball is replaced by the radial
//! non-increasing function f* on a model ball whose superlevel sets
//! {f* ≥ t} are model balls of the same volume as {f ≥ t}. Level sets are
//! measured exactly for the discrete cell measure by sorting cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::mean_exit_profile;
use crate::model::{ModelSpace, VolumeInverter};
use crate::pde::{GridField, PolarGrid};
use crate::radial::RadialFunction;
use crate::surface::Direction;

/// Radius s with Vol(B_s^ω) = V.
pub fn symmetrized_radius(volume: f64, model: &ModelSpace) -> Result<f64> {
    if !(volume > 0.0) {
        return Err(crate::error::domain("symmetrized volume", volume, "(0, total volume]"));
    }
    model.ball_radius_from_volume(volume)
}

/// Distribution of a nonnegative grid field: the values t_1 > t_2 > … it
/// takes and μ(t_m) = Vol{f ≥ t_m}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetProfile {
    /// (t_m, V_m) with t_m strictly decreasing and V_m strictly increasing.
    pub levels: Vec<(f64, f64)>,
    pub total: f64,
    pub sup: f64,
}

impl LevelSetProfile {
    /// μ(t) = Vol{f ≥ t}.
    pub fn volume_at_least(&self, t: f64) -> f64 {
        let k = self.levels.partition_point(|(v, _)| *v >= t);
        if k == 0 {
            0.0
        } else {
            self.levels[k - 1].1
        }
    }

    /// ∫ f = ∫_0^T μ(t) dt, evaluated on the step distribution.
    pub fn layer_cake_integral(&self) -> f64 {
        let mut prev = 0.0;
        let mut sum = 0.0;
        for (t, v) in &self.levels {
            sum += t * (v - prev);
            prev = *v;
        }
        sum
    }
}

/// Sorts the cells of `f` by value and accumulates their areas. Cells with
/// exactly equal values form one level.
pub fn level_profile(f: &GridField, grid: &PolarGrid) -> Result<LevelSetProfile> {
    let mut cells: Vec<(f64, f64)> = f.cells(grid).collect();
    if let Some((v, _)) = cells.iter().find(|(v, _)| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "symmetrization needs a nonnegative field, found value {v}"
        )));
    }
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut levels: Vec<(f64, f64)> = Vec::new();
    let mut acc = 0.0;
    for (v, a) in cells {
        acc += a;
        match levels.last_mut() {
            Some(last) if last.0 == v => last.1 = acc,
            _ => levels.push((v, acc)),
        }
    }
    Ok(LevelSetProfile {
        sup: levels[0].0,
        total: acc,
        levels,
    })
}

/// One step of f*: value t_m on the model annulus r̃_{m-1} < ρ ≤ r̃_m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizedStep {
    pub value: f64,
    pub volume: f64,
    pub radius: f64,
}

/// The ω-symmetrization f* of a grid field.
///
/// `steps` is the exact step form, left-continuous in ρ: f*(ρ) is the
/// largest t_m with r̃(t_m) ≥ ρ, so at a plateau boundary f* takes the
/// upper value. `profile` is a monotone piecewise linear realization through
/// the knots (mid-volume radius of each step, t_m); the zero level of a
/// Dirichlet field is pinned at s so that f*(s) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizedField {
    pub steps: Vec<SymmetrizedStep>,
    /// s = r̃ of the total volume.
    pub radius: f64,
    pub total_volume: f64,
    knots: Vec<(f64, f64)>,
}

impl SymmetrizedField {
    /// f*(ρ) from the step form.
    pub fn step_value(&self, rho: f64) -> f64 {
        let k = self.steps.partition_point(|s| s.radius < rho);
        self.steps.get(k).map_or(0.0, |s| s.value)
    }

    /// f*(ρ) from the piecewise linear realization.
    pub fn smooth_value(&self, rho: f64) -> f64 {
        let k = &self.knots;
        if rho <= k[0].0 {
            return k[0].1;
        }
        if rho >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|(r, _)| *r <= rho);
        let (r0, t0) = k[i - 1];
        let (r1, t1) = k[i];
        if r1 == r0 {
            t1
        } else {
            t0 + (t1 - t0) * (rho - r0) / (r1 - r0)
        }
    }

    /// sup{ρ : smooth f*(ρ) ≥ t}.
    fn smooth_radius_at_least(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t > k[0].1 {
            return 0.0;
        }
        if t <= k[k.len() - 1].1 {
            return self.radius;
        }
        let i = k.partition_point(|(_, v)| *v >= t);
        let (r0, t0) = k[i - 1];
        let (r1, t1) = k[i];
        if t0 == t1 {
            r0
        } else {
            r0 + (r1 - r0) * (t0 - t) / (t0 - t1)
        }
    }

    /// Samples the linear realization on `intervals` uniform steps of [0, s].
    pub fn profile(&self, intervals: usize) -> Result<RadialFunction> {
        RadialFunction::from_fn(self.radius, intervals, |r| self.smooth_value(r))
    }

    /// ∫ f* over B_s^ω for the step form, with exact model volumes.
    pub fn integral(&self, model: &ModelSpace) -> Result<f64> {
        let mut prev = 0.0;
        let mut sum = 0.0;
        for s in &self.steps {
            let v = model.ball_volume(s.radius.min(model.r_max() * (1.0 - 1e-15)))?;
            sum += s.value * (v - prev);
            prev = v;
        }
        Ok(sum)
    }
}

/// Builds f* from the level sets of f.
pub fn symmetrize_field(f: &GridField, grid: &PolarGrid, model: &ModelSpace) -> Result<SymmetrizedField> {
    let profile = level_profile(f, grid)?;
    symmetrize_profile(&profile, model)
}

pub fn symmetrize_profile(profile: &LevelSetProfile, model: &ModelSpace) -> Result<SymmetrizedField> {
    let inverter = VolumeInverter::new(model, profile.total)?;
    let mut steps = Vec::with_capacity(profile.levels.len());
    let mut knots = Vec::with_capacity(profile.levels.len());
    let mut prev = 0.0;
    for (t, v) in &profile.levels {
        let radius = inverter.radius(*v)?;
        steps.push(SymmetrizedStep {
            value: *t,
            volume: *v,
            radius,
        });
        let knot = if *t == 0.0 {
            radius
        } else {
            inverter.radius(0.5 * (prev + v))?
        };
        knots.push((knot, *t));
        prev = *v;
    }
    Ok(SymmetrizedField {
        radius: steps.last().unwrap().radius,
        total_volume: profile.total,
        steps,
        knots,
    })
}

/// Largest |Vol_M{f ≥ t} - Vol_ω{f* ≥ t}| / V_total over sampled t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equimeasurability {
    /// Using the step form of f*, measured with model ball volumes.
    pub step_deviation: f64,
    /// Using the piecewise linear realization of f*.
    pub smooth_deviation: f64,
    pub samples: usize,
}

pub fn check_equimeasurable(
    f: &GridField,
    grid: &PolarGrid,
    fstar: &SymmetrizedField,
    model: &ModelSpace,
    t_samples: usize,
) -> Result<Equimeasurability> {
    if t_samples == 0 {
        return Err(Error::InvalidArgument("need at least one level sample".into()));
    }
    let profile = level_profile(f, grid)?;
    let total = profile.total;
    let cap = model.r_max() * (1.0 - 1e-15);
    let mut step_dev: f64 = 0.0;
    let mut smooth_dev: f64 = 0.0;
    for k in 1..=t_samples {
        let t = profile.sup * k as f64 / t_samples as f64;
        let mu = profile.volume_at_least(t);
        let idx = fstar.steps.partition_point(|s| s.value >= t);
        let step_radius = if idx == 0 { 0.0 } else { fstar.steps[idx - 1].radius };
        let step_vol = model.ball_volume(step_radius.min(cap))?;
        let smooth_vol = model.ball_volume(fstar.smooth_radius_at_least(t).min(cap))?;
        step_dev = step_dev.max((mu - step_vol).abs() / total);
        smooth_dev = smooth_dev.max((mu - smooth_vol).abs() / total);
    }
    Ok(Equimeasurability {
        step_deviation: step_dev,
        smooth_deviation: smooth_dev,
        samples: t_samples,
    })
}

/// Places a radial profile on the grid: value(r_i, θ_j) = p(r_i).
pub fn transplant_radial(profile: &RadialFunction, grid: &PolarGrid) -> GridField {
    let mut f = GridField::from_fn(grid, |r, _| profile.eval(r));
    for j in 0..grid.n_theta() {
        f.set(grid.n_r(), j, 0.0);
    }
    f
}

/// The model mean exit time E_R^ω transplanted to the grid ball by distance.
pub fn transplant_exit_time(model: &ModelSpace, grid: &PolarGrid) -> Result<GridField> {
    let profile = mean_exit_profile(model, grid.radius(), grid.n_r().max(16))?;
    Ok(transplant_radial(&profile, grid))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralIdentity {
    /// ∫_{B_R^M} 𝔼_R^ω.
    pub manifold: f64,
    /// ∫_{B_s^ω} (𝔼_R^ω)*.
    pub model: f64,
    pub symmetrized_radius: f64,
}

impl IntegralIdentity {
    pub fn relative_gap(&self) -> f64 {
        (self.manifold - self.model).abs() / self.manifold.abs().max(f64::MIN_POSITIVE)
    }
}

/// Integrates the transplanted mean exit time on the grid ball and its
/// symmetrization on the model ball B_{s(R)}^ω.
pub fn integral_identity_check(grid: &PolarGrid, model: &ModelSpace) -> Result<IntegralIdentity> {
    let field = transplant_exit_time(model, grid)?;
    let fstar = symmetrize_field(&field, grid, model)?;
    Ok(IntegralIdentity {
        manifold: field.integral(grid),
        model: fstar.integral(model)?,
        symmetrized_radius: fstar.radius,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileComparison {
    pub direction: Direction,
    /// Smallest E_s(ρ) - 𝔼*(ρ) (reversed for model>=M), divided by E_s(0).
    pub min_margin: f64,
    pub argmin: f64,
    /// 𝔼*(argmin) and E_s(argmin).
    pub symmetrized_value: f64,
    pub model_value: f64,
    /// Largest |E_s - 𝔼*| / E_s(0).
    pub max_deviation: f64,
    pub symmetrized_radius: f64,
}

/// Samples used along [0, s] for the profile comparison.
pub const PROFILE_SAMPLES: usize = 256;

/// Compares the symmetrized transplanted exit time 𝔼* with E_{s(R)}^ω on
/// [0, s(R)). Needs a balanced model and a uniform hypothesis direction.
pub fn symmetrized_profile_comparison(
    grid: &PolarGrid,
    model: &ModelSpace,
    direction: Direction,
) -> Result<ProfileComparison> {
    if direction == Direction::Mixed {
        return Err(Error::Precondition(
            "mean curvature comparison has mixed sign; profile comparison undefined".into(),
        ));
    }
    let field = transplant_exit_time(model, grid)?;
    let fstar = symmetrize_field(&field, grid, model)?;
    let s = fstar.radius;
    let balance = model.balance_check(s.max(grid.radius()), 200)?;
    if !balance.balanced {
        return Err(Error::Precondition(format!(
            "model is not balanced from above on (0, {}] (margin {})",
            balance.radius, balance.min_margin
        )));
    }
    let exit = mean_exit_profile(model, s, PROFILE_SAMPLES)?;
    let scale = exit.values()[0];
    let sign = match direction {
        Direction::ModelGeM => -1.0,
        _ => 1.0,
    };
    let mut min_margin = f64::INFINITY;
    let mut argmin = (0.0, 0.0, 0.0);
    let mut max_deviation: f64 = 0.0;
    for (rho, e) in exit.nodes().take(PROFILE_SAMPLES) {
        let star = fstar.smooth_value(rho);
        let diff = (e - star) / scale;
        max_deviation = max_deviation.max(diff.abs());
        if sign * diff < min_margin {
            min_margin = sign * diff;
            argmin = (rho, star, e);
        }
    }
    Ok(ProfileComparison {
        direction,
        min_margin,
        argmin: argmin.0,
        symmetrized_value: argmin.1,
        model_value: argmin.2,
        max_deviation,
        symmetrized_radius: s,
    })
}
