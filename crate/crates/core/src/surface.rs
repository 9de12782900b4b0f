//! Two-dimensional polar metrics g = dr² + ω(r,θ)² dθ² around a pole.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{ModelSpace, WarpingProfile};
use crate::quad;

/// ω and its partials ω_r, ω_rr, ω_θ at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub w: f64,
    pub w_r: f64,
    pub w_rr: f64,
    pub w_theta: f64,
}

/// Evaluator for the angular coefficient ω(r, θ) of a polar metric.
pub trait MetricEvaluator: Send + Sync + fmt::Debug {
    fn eval(&self, r: f64, theta: f64) -> MetricSample;

    fn label(&self) -> String;
}

/// ω = r(1 + ε r² / (1 + r² cos²(mθ))).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbed {
    pub eps: f64,
    pub mode: u32,
}

impl MetricEvaluator for Perturbed {
    fn eval(&self, r: f64, theta: f64) -> MetricSample {
        let m = self.mode as f64;
        let (s, c) = (m * theta).sin_cos();
        let cc = c * c;
        let r2 = r * r;
        let d = 1.0 + r2 * cc;
        let d2 = d * d;
        let eps = self.eps;
        MetricSample {
            w: r * (1.0 + eps * r2 / d),
            w_r: 1.0 + eps * (r2 / d + 2.0 * r2 / d2),
            w_rr: eps * (6.0 * r / d2 - 8.0 * r2 * r * cc / (d2 * d)),
            w_theta: eps * m * r2 * r2 * r * (2.0 * s * c) / d2,
        }
    }

    fn label(&self) -> String {
        if self.eps == 1.0 && self.mode == 1 {
            "example1".into()
        } else {
            format!("perturbed({},{})", self.eps, self.mode)
        }
    }
}

/// θ-independent metric ω(r, θ) = ω(r) of a model warping.
#[derive(Debug, Clone, PartialEq)]
pub struct Radial(pub WarpingProfile);

impl MetricEvaluator for Radial {
    fn eval(&self, r: f64, _theta: f64) -> MetricSample {
        let s = self.0.eval(r);
        MetricSample {
            w: s.value,
            w_r: s.d1,
            w_rr: s.d2,
            w_theta: 0.0,
        }
    }

    fn label(&self) -> String {
        format!("radial({})", self.0)
    }
}

/// A validated polar metric on the disk r ≤ r_valid around its pole.
#[derive(Debug, Clone)]
pub struct PolarMetric2D {
    evaluator: Arc<dyn MetricEvaluator>,
    r_valid: f64,
    label: String,
}

impl PolarMetric2D {
    /// Wraps an evaluator after auditing its partials, pole and periodicity.
    pub fn new(evaluator: Arc<dyn MetricEvaluator>, r_valid: f64) -> Result<Self> {
        if !(r_valid > 0.0) {
            return Err(Error::Validation(format!(
                "validity radius must be positive, got {r_valid}"
            )));
        }
        let label = evaluator.label();
        let metric = Self {
            evaluator,
            r_valid,
            label,
        };
        metric.audit()?;
        Ok(metric)
    }

    pub fn example() -> Self {
        Self::perturbed(1.0, 1).expect("built-in example metric passes its audit")
    }

    pub fn perturbed(eps: f64, mode: u32) -> Result<Self> {
        if !eps.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "perturbation size must be finite, got {eps}"
            )));
        }
        if mode == 0 {
            return Err(Error::InvalidArgument("perturbation mode must be at least 1".into()));
        }
        // 1 + ε r²/D ≥ 1 + ε r² when ε < 0, since D ≥ 1
        let r_valid = if eps < 0.0 {
            (-1.0 / eps).sqrt() * (1.0 - 1e-9)
        } else {
            f64::INFINITY
        };
        Self::new(Arc::new(Perturbed { eps, mode }), r_valid)
    }

    pub fn radial(profile: WarpingProfile) -> Result<Self> {
        let r_valid = if profile.r_max().is_finite() {
            profile.r_max() * (1.0 - 1e-12)
        } else {
            f64::INFINITY
        };
        Self::new(Arc::new(Radial(profile)), r_valid)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn r_valid(&self) -> f64 {
        self.r_valid
    }

    #[inline]
    pub fn eval(&self, r: f64, theta: f64) -> MetricSample {
        self.evaluator.eval(r, theta)
    }

    #[inline]
    pub fn w(&self, r: f64, theta: f64) -> f64 {
        self.evaluator.eval(r, theta).w
    }

    fn check(&self, what: &'static str, t: f64) -> Result<()> {
        if t > 0.0 && t <= self.r_valid {
            Ok(())
        } else {
            Err(domain(what, t, format!("(0, {}]", self.r_valid)))
        }
    }

    fn audit(&self) -> Result<()> {
        let top = self.r_valid.min(4.0);
        let pole = 1e-4;
        for j in 0..16 {
            let theta = 2.0 * PI * (j as f64 + 0.37) / 16.0;
            let ratio = self.w(pole, theta) / pole;
            if !((ratio - 1.0).abs() <= 1e-3) {
                return Err(Error::Validation(format!(
                    "{}: ω(r,θ)/r = {ratio} at r = {pole}, θ = {theta}; the pole is not smooth",
                    self.label
                )));
            }
        }
        for i in 1..=20 {
            let r = top * i as f64 / 20.0;
            let a = self.w(r, 0.0);
            let b = self.w(r, 2.0 * PI);
            if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(Error::Validation(format!(
                    "{}: ω(r,0) = {a} but ω(r,2π) = {b} at r = {r}",
                    self.label
                )));
            }
            for j in 0..16 {
                let theta = 2.0 * PI * (j as f64 + 0.37) / 16.0;
                let s = self.eval(r, theta);
                if !(s.w > 0.0) {
                    return Err(Error::Validation(format!(
                        "{}: ω({r}, {theta}) = {} is not positive",
                        self.label, s.w
                    )));
                }
                let h = 1e-5 * r.max(1.0);
                let hr = h.min(0.5 * r);
                let fd_r = (self.w(r + hr, theta) - self.w(r - hr, theta)) / (2.0 * hr);
                let fd_rr = (self.eval(r + hr, theta).w_r - self.eval(r - hr, theta).w_r) / (2.0 * hr);
                let fd_t = (self.w(r, theta + h) - self.w(r, theta - h)) / (2.0 * h);
                let scale = s.w.abs().max(1.0) + s.w_r.abs() + s.w_rr.abs();
                for (name, analytic, numeric) in
                    [("ω_r", s.w_r, fd_r), ("ω_rr", s.w_rr, fd_rr), ("ω_θ", s.w_theta, fd_t)]
                {
                    if (analytic - numeric).abs() > 1e-6 * scale {
                        return Err(Error::Validation(format!(
                            "{}: {name} = {analytic} disagrees with finite difference {numeric} at ({r}, {theta})",
                            self.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// H(t,θ) = ω_r/ω, the inward geodesic curvature of the distance circle.
    pub fn sphere_mean_curvature(&self, t: f64, theta: f64) -> Result<f64> {
        self.check("sphere mean curvature", t)?;
        let s = self.eval(t, theta);
        Ok(s.w_r / s.w)
    }

    /// K(t,θ) = -ω_rr/ω.
    pub fn gauss_curvature(&self, t: f64, theta: f64) -> Result<f64> {
        self.check("Gauss curvature", t)?;
        let s = self.eval(t, theta);
        Ok(-s.w_rr / s.w)
    }

    /// Vol(S_r) = ∫_0^{2π} ω(r,θ) dθ.
    pub fn sphere_length(&self, r: f64) -> Result<f64> {
        self.check("sphere length", r)?;
        quad::periodic_trapezoid(|theta| self.w(r, theta), 2.0 * PI, 64, 1e-13)
    }

    /// Vol(B_r) = ∫_0^r Vol(S_t) dt.
    pub fn ball_area(&self, r: f64) -> Result<f64> {
        self.check("ball area", r)?;
        let n0 = ((64.0 * r).ceil() as usize).max(16);
        let length = |t: f64| {
            if t == 0.0 {
                0.0
            } else {
                quad::periodic_trapezoid(|theta| self.w(t, theta), 2.0 * PI, 64, 1e-13).unwrap_or(f64::NAN)
            }
        };
        let v = quad::simpson_richardson(length, 0.0, r, n0, 1e-11)?;
        if v.is_nan() {
            return Err(Error::Quadrature {
                tolerance: 1e-13,
                change: f64::NAN,
            });
        }
        Ok(v)
    }
}

/// Sign pattern of H_M - η_ω over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// η_ω ≤ H_M everywhere.
    #[serde(rename = "model<=M")]
    ModelLeM,
    /// η_ω ≥ H_M everywhere.
    #[serde(rename = "model>=M")]
    ModelGeM,
    /// η_ω = H_M to rounding.
    #[serde(rename = "equal")]
    Equal,
    #[serde(rename = "mixed")]
    Mixed,
}

impl Direction {
    /// +1 when the model curvature lies below, -1 above, 0 for equality.
    pub fn sign(self) -> Option<f64> {
        match self {
            Direction::ModelLeM => Some(1.0),
            Direction::ModelGeM => Some(-1.0),
            Direction::Equal => Some(0.0),
            Direction::Mixed => None,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::ModelLeM => Direction::ModelGeM,
            Direction::ModelGeM => Direction::ModelLeM,
            d => d,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::ModelLeM => "model<=M",
            Direction::ModelGeM => "model>=M",
            Direction::Equal => "equal",
            Direction::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub direction: Direction,
    /// Smallest H_M - η_ω (for model>=M: smallest η_ω - H_M) over the grid.
    pub min_margin: f64,
    /// (t, θ) of the minimum.
    pub argmin: (f64, f64),
    /// Largest |H_M - η_ω| over the grid.
    pub max_deviation: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub radius: f64,
}

pub const DEFAULT_HYPOTHESIS_GRID: usize = 256;

/// Compares H_M(t,θ) with η_ω(t) on t_i = iR/N_r (i = 1..N_r) and
/// θ_j = 2πj/N_θ.
pub fn hypothesis_report(
    metric: &PolarMetric2D,
    model: &ModelSpace,
    radius: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<HypothesisReport> {
    if model.dim() != 2 {
        return Err(Error::Precondition(format!(
            "surface comparison needs a 2-dimensional model, got n = {}",
            model.dim()
        )));
    }
    if !(radius > 0.0 && radius <= metric.r_valid() && radius < model.r_max()) {
        return Err(domain(
            "hypothesis radius",
            radius,
            format!("(0, {}]", metric.r_valid().min(model.r_max())),
        ));
    }
    if n_r == 0 || n_theta == 0 {
        return Err(Error::InvalidArgument("hypothesis grid must be non-empty".into()));
    }
    let mut lo = (f64::INFINITY, (0.0, 0.0));
    let mut hi = (f64::NEG_INFINITY, (0.0, 0.0));
    let (mut below, mut above) = (false, false);
    let mut max_deviation: f64 = 0.0;
    for i in 1..=n_r {
        let t = radius * i as f64 / n_r as f64;
        let eta = model.mean_curvature(t)?;
        for j in 0..n_theta {
            let theta = 2.0 * PI * j as f64 / n_theta as f64;
            let h = metric.sphere_mean_curvature(t, theta)?;
            let diff = h - eta;
            let tol = 1e-10 * h.abs().max(eta.abs()).max(1.0);
            below |= diff < -tol;
            above |= diff > tol;
            max_deviation = max_deviation.max(diff.abs());
            if diff < lo.0 {
                lo = (diff, (t, theta));
            }
            if diff > hi.0 {
                hi = (diff, (t, theta));
            }
        }
    }
    let (direction, min_margin, argmin) = match (below, above) {
        (false, false) => (Direction::Equal, lo.0, lo.1),
        (false, true) => (Direction::ModelLeM, lo.0, lo.1),
        (true, false) => (Direction::ModelGeM, -hi.0, hi.1),
        (true, true) => (Direction::Mixed, lo.0, lo.1),
    };
    Ok(HypothesisReport {
        direction,
        min_margin,
        argmin,
        max_deviation,
        n_r,
        n_theta,
        radius,
    })
}
