//! Rotationally symmetric model spaces `[0, r_max) ×_ω S^{n-1}`.
//!
//! A model is fixed by its warping function ω, with ω(0) = 0 and ω'(0) = 1,
//! and its dimension. Everything radial about its geodesic balls (sphere and
//! ball volumes, mean curvature of distance spheres, the isoperimetric
//! quotient, the balance condition) follows from ω alone.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad;

/// Value and first two derivatives of a warping function at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpSample {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warping {
    /// Constant sectional curvature `b`.
    SpaceForm { curvature: f64 },
    /// ω(r) = r + Σ_j c_j r^{2j+1}, j ≥ 1.
    OddPolynomial { coefficients: Vec<f64> },
}

/// A warping function ω together with the end of its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpingProfile {
    warping: Warping,
    r_max: f64,
}

impl WarpingProfile {
    pub fn euclidean() -> Self {
        Self::space_form(0.0)
    }

    /// Space form of curvature `b`: sin, identity or sinh warping.
    pub fn space_form(curvature: f64) -> Self {
        let r_max = if curvature > 0.0 {
            PI / curvature.sqrt()
        } else {
            f64::INFINITY
        };
        Self {
            warping: Warping::SpaceForm { curvature },
            r_max,
        }
    }

    /// ω(r) = r + Σ c_j r^{2j+1}. The domain ends at the first positive zero
    /// of ω, if there is one.
    pub fn odd_polynomial(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "polynomial warping coefficients must be finite".into(),
            ));
        }
        let mut coefficients = coefficients;
        while coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        let r_max = first_positive_root(&coefficients).map_or(f64::INFINITY, f64::sqrt);
        Ok(Self {
            warping: Warping::OddPolynomial { coefficients },
            r_max,
        })
    }

    pub fn warping(&self) -> &Warping {
        &self.warping
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Curvature of a space form, `None` for other warpings.
    pub fn curvature(&self) -> Option<f64> {
        match self.warping {
            Warping::SpaceForm { curvature } => Some(curvature),
            Warping::OddPolynomial { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    #[inline]
    pub fn eval(&self, r: f64) -> WarpSample {
        match &self.warping {
            Warping::SpaceForm { curvature } => {
                let b = *curvature;
                if b > 0.0 {
                    let k = b.sqrt();
                    let s = (k * r).sin() / k;
                    WarpSample {
                        value: s,
                        d1: (k * r).cos(),
                        d2: -b * s,
                    }
                } else if b < 0.0 {
                    let k = (-b).sqrt();
                    let s = (k * r).sinh() / k;
                    WarpSample {
                        value: s,
                        d1: (k * r).cosh(),
                        d2: -b * s,
                    }
                } else {
                    WarpSample {
                        value: r,
                        d1: 1.0,
                        d2: 0.0,
                    }
                }
            }
            Warping::OddPolynomial { coefficients } => {
                let r2 = r * r;
                let (mut value, mut d1, mut d2) = (r, 1.0, 0.0);
                let mut pow = r; // r^{p-2} for p = 2j + 1
                for (j, c) in coefficients.iter().enumerate() {
                    let p = (2 * j + 3) as f64;
                    d2 += c * p * (p - 1.0) * pow;
                    d1 += c * p * pow * r;
                    value += c * pow * r2;
                    pow *= r2;
                }
                WarpSample { value, d1, d2 }
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).value
    }

    /// Coefficient of r³ in the Taylor expansion of ω at the origin.
    pub fn cubic_coefficient(&self) -> f64 {
        match &self.warping {
            Warping::SpaceForm { curvature } => -curvature / 6.0,
            Warping::OddPolynomial { coefficients } => coefficients.first().copied().unwrap_or(0.0),
        }
    }
}

impl fmt::Display for WarpingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.warping {
            Warping::SpaceForm { curvature } if *curvature == 0.0 => write!(f, "euclidean"),
            Warping::SpaceForm { curvature } if *curvature > 0.0 => write!(f, "sphere({curvature})"),
            Warping::SpaceForm { curvature } => write!(f, "hyperbolic({})", -curvature),
            Warping::OddPolynomial { coefficients } if coefficients.is_empty() => write!(f, "poly(0)"),
            Warping::OddPolynomial { coefficients } => {
                write!(f, "poly(")?;
                for (i, c) in coefficients.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// First positive root of p(x) = 1 + Σ c_j x^j, if any.
fn first_positive_root(coefficients: &[f64]) -> Option<f64> {
    if coefficients.iter().all(|c| *c >= 0.0) {
        return None;
    }
    let p = |x: f64| coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c) * x + 1.0;
    let lead = coefficients.last()?.abs();
    let bound = 1.0 + coefficients.iter().map(|c| c.abs()).fold(1.0, f64::max) / lead;
    let steps = 200_000;
    let dx = bound / steps as f64;
    let mut lo = 0.0;
    for i in 1..=steps {
        let x = i as f64 * dx;
        if p(x) <= 0.0 {
            let mut hi = x;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        lo = x;
    }
    None
}

/// Quadrature resolution used for radial integrals of ω^{n-1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub points_per_unit: usize,
    pub rtol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            points_per_unit: 2048,
            rtol: 1e-10,
        }
    }
}

/// Volume of the unit (m)-sphere S^m ⊂ R^{m+1}.
pub fn unit_sphere_volume(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * unit_sphere_volume(m - 2),
    }
}

/// An ω-model space of dimension n ≥ 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpace {
    warping: WarpingProfile,
    dim: usize,
    sphere_constant: f64,
    quadrature: QuadratureConfig,
}

/// Outcome of the balance-from-above check on a sampled interval (0, R].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub balanced: bool,
    /// min over samples of 1/(n-1) - q(r)η(r).
    pub min_margin: f64,
    pub argmin: f64,
    /// Largest pairwise disagreement between the three equivalent criteria,
    /// each normalised to the scale of 1/(n-1) - qη.
    pub max_disagreement: f64,
    pub samples: usize,
    pub radius: f64,
    /// The condition is certified on (0, radius] only, not for all r ≥ 0.
    pub scope: String,
}

pub const BALANCE_TOL: f64 = 1e-9;

impl ModelSpace {
    pub fn new(warping: WarpingProfile, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "model dimension must be at least 2, got {dim}"
            )));
        }
        Ok(Self {
            warping,
            dim,
            sphere_constant: unit_sphere_volume(dim - 1),
            quadrature: QuadratureConfig::default(),
        })
    }

    /// Space form of constant curvature `b` in dimension `dim`.
    pub fn space_form(b: f64, dim: usize) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::InvalidArgument(format!("curvature must be finite, got {b}")));
        }
        Self::new(WarpingProfile::space_form(b), dim)
    }

    pub fn with_quadrature(mut self, quadrature: QuadratureConfig) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn warping(&self) -> &WarpingProfile {
        &self.warping
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vol(S^{n-1}_1).
    pub fn sphere_constant(&self) -> f64 {
        self.sphere_constant
    }

    pub fn r_max(&self) -> f64 {
        self.warping.r_max()
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        self.quadrature
    }

    fn check_open(&self, what: &'static str, r: f64) -> Result<()> {
        if r > 0.0 && r < self.r_max() {
            Ok(())
        } else {
            Err(domain(what, r, format!("(0, {})", self.r_max())))
        }
    }

    fn check_half_open(&self, what: &'static str, r: f64) -> Result<()> {
        if r >= 0.0 && r < self.r_max() {
            Ok(())
        } else {
            Err(domain(what, r, format!("[0, {})", self.r_max())))
        }
    }

    /// η_ω(r) = ω'(r)/ω(r), the inward mean curvature of the distance sphere.
    pub fn mean_curvature(&self, r: f64) -> Result<f64> {
        self.check_open("mean curvature", r)?;
        let s = self.warping.eval(r);
        Ok(s.d1 / s.value)
    }

    /// K_ω(r) = -ω''(r)/ω(r).
    pub fn radial_curvature(&self, r: f64) -> Result<f64> {
        self.check_open("radial curvature", r)?;
        let s = self.warping.eval(r);
        Ok(-s.d2 / s.value)
    }

    #[inline]
    pub(crate) fn density(&self, r: f64) -> f64 {
        self.warping.value(r).powi(self.dim as i32 - 1)
    }

    /// ∫_a^b ω^{n-1}, without the sphere constant.
    pub(crate) fn density_integral(&self, a: f64, b: f64) -> Result<f64> {
        let n0 = ((b - a).abs() * self.quadrature.points_per_unit as f64).ceil() as usize;
        quad::simpson_richardson(|t| self.density(t), a, b, n0.max(16), self.quadrature.rtol)
    }

    pub fn sphere_volume(&self, r: f64) -> Result<f64> {
        self.check_half_open("sphere volume", r)?;
        Ok(self.sphere_constant * self.density(r))
    }

    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        self.check_half_open("ball volume", r)?;
        Ok(self.sphere_constant * self.density_integral(0.0, r)?)
    }

    /// Volume of the whole model; finite only for compact (spherical) models.
    pub fn total_volume(&self) -> Result<f64> {
        if self.r_max().is_finite() {
            Ok(self.sphere_constant * self.density_integral(0.0, self.r_max())?)
        } else {
            Ok(f64::INFINITY)
        }
    }

    /// q_ω(r) = ∫_0^r ω^{n-1} / ω^{n-1}(r).
    pub fn isoperimetric_quotient(&self, r: f64) -> Result<f64> {
        self.check_open("isoperimetric quotient", r)?;
        Ok(self.density_integral(0.0, r)? / self.density(r))
    }

    /// Checks q_ω η_ω ≤ 1/(n-1) on `samples` uniform radii in (0, R], and
    /// cross-checks it against q_ω' ≥ 0 (finite differences) and
    /// ω^n ≥ (n-1) ω' ∫ω^{n-1}.
    pub fn balance_check(&self, radius: f64, samples: usize) -> Result<BalanceReport> {
        self.check_open("balance radius", radius)?;
        if samples < 2 {
            return Err(Error::InvalidArgument("balance check needs at least 2 samples".into()));
        }
        let n1 = self.dim as f64 - 1.0;
        let mut min_margin = f64::INFINITY;
        let mut argmin = radius;
        let mut max_disagreement: f64 = 0.0;
        let mut prev_r = 0.0;
        let mut integral = 0.0;
        for i in 1..=samples {
            let r = radius * i as f64 / samples as f64;
            integral += self.density_integral(prev_r, r)?;
            prev_r = r;
            let s = self.warping.eval(r);
            let density = self.density(r);
            let q = integral / density;
            let eta = s.d1 / s.value;

            let direct = 1.0 / n1 - q * eta;
            let derivative = self.quotient_derivative(r, integral)? / n1;
            let cross = (s.value.powi(self.dim as i32) - n1 * s.d1 * integral) / (n1 * s.value.powi(self.dim as i32));

            let disagreement = (direct - derivative).abs().max((direct - cross).abs());
            max_disagreement = max_disagreement.max(disagreement);
            if direct < min_margin {
                min_margin = direct;
                argmin = r;
            }
        }
        if max_disagreement > BALANCE_TOL {
            return Err(Error::Inconsistent(format!(
                "balance criteria disagree by {max_disagreement:e} for {}",
                self.warping
            )));
        }
        Ok(BalanceReport {
            balanced: min_margin >= -BALANCE_TOL,
            min_margin,
            argmin,
            max_disagreement,
            samples,
            radius,
            scope: format!("(0, {radius}]"),
        })
    }

    /// Richardson-extrapolated fourth-order central difference of q_ω at r, given ∫_0^r ω^{n-1}.
    /// The offsets are integrated separately so the shared integral cancels.
    fn quotient_derivative(&self, r: f64, integral: f64) -> Result<f64> {
        let h = (1e-3 * r.max(1e-3)).min(0.25 * r).min(0.25 * (self.r_max() - r));
        let q_at = |x: f64| {
            let extra = if x >= r {
                quad::gauss5(|t| self.density(t), r, x)
            } else {
                -quad::gauss5(|t| self.density(t), x, r)
            };
            (integral + extra) / self.density(x)
        };
        let d = |h: f64| (-q_at(r + 2.0 * h) + 8.0 * q_at(r + h) - 8.0 * q_at(r - h) + q_at(r - 2.0 * h)) / (12.0 * h);
        Ok((16.0 * d(0.5 * h) - d(h)) / 15.0)
    }

    /// Radius r with Vol(B_r) = V, by bisection on the increasing volume map.
    pub fn ball_radius_from_volume(&self, volume: f64) -> Result<f64> {
        if !(volume >= 0.0) {
            return Err(domain("ball volume", volume, "[0, total volume]"));
        }
        if volume == 0.0 {
            return Ok(0.0);
        }
        let vol = |r: f64| -> Result<f64> { Ok(self.sphere_constant * self.density_integral(0.0, r)?) };
        let (mut lo, mut hi) = (0.0, 1.0);
        if self.r_max().is_finite() {
            let total = self.total_volume()?;
            if volume > total * (1.0 + 1e-12) {
                return Err(Error::OutOfRange {
                    value: volume,
                    max: total,
                });
            }
            hi = self.r_max();
        } else {
            while vol(hi)? < volume {
                lo = hi;
                hi *= 2.0;
                if hi > 1e6 {
                    return Err(Error::OutOfRange {
                        value: volume,
                        max: vol(hi)?,
                    });
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if vol(mid)? < volume {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Precomputed cumulative volume table for inverting Vol(B_r) many times.
///
/// Used by the symmetrization, which needs one radius per level set.
#[derive(Debug, Clone)]
pub struct VolumeInverter<'a> {
    model: &'a ModelSpace,
    step: f64,
    cumulative: Vec<f64>,
}

impl<'a> VolumeInverter<'a> {
    /// Table covering volumes up to at least `max_volume`.
    pub fn new(model: &'a ModelSpace, max_volume: f64) -> Result<Self> {
        let r_top = model.ball_radius_from_volume(max_volume)?;
        let mut r_hi = (r_top * (1.0 + 1e-6) + 1e-9).max(1e-6);
        if r_hi >= model.r_max() {
            r_hi = model.r_max();
        }
        let n = ((r_hi * 4096.0).ceil() as usize).max(64);
        let step = r_hi / n as f64;
        let samples: Vec<f64> = (0..=n).map(|i| model.density(i as f64 * step)).collect();
        let cumulative = quad::cumulative(&samples, step)
            .into_iter()
            .map(|v| v * model.sphere_constant)
            .collect();
        Ok(Self {
            model,
            step,
            cumulative,
        })
    }

    pub fn radius(&self, volume: f64) -> Result<f64> {
        let max = *self.cumulative.last().unwrap();
        if volume <= 0.0 {
            return Ok(0.0);
        }
        if volume > max * (1.0 + 1e-12) {
            return Err(Error::OutOfRange { value: volume, max });
        }
        let k = match self.cumulative.binary_search_by(|v| v.partial_cmp(&volume).unwrap()) {
            Ok(k) => return Ok(k as f64 * self.step),
            Err(k) => k.saturating_sub(1).min(self.cumulative.len() - 2),
        };
        let r0 = k as f64 * self.step;
        let base = self.cumulative[k];
        let c = self.model.sphere_constant;
        let (mut lo, mut hi) = (r0, r0 + self.step);
        let mut r = r0 + 0.5 * self.step;
        for _ in 0..60 {
            let f = base + c * quad::gauss5(|t| self.model.density(t), r0, r) - volume;
            if f > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let slope = c * self.model.density(r);
            let mut next = r - f / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - r).abs() <= 1e-15 * r.max(1.0) {
                return Ok(next);
            }
            r = next;
        }
        Ok(r)
    }
}
