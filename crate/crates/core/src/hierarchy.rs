//! Radial Poisson hierarchy, L¹-moment spectrum and first Dirichlet
//! eigenvalue on geodesic balls of a model space.
//!
//! The hierarchy Δu_k = -k u_{k-1}, u_k = 0 on ∂B_R, u_0 = 1 is handled in
//! normalised form v_k = u_k / k!, so Δv_k = -v_{k-1}. For a radial ball the
//! solution is the nested integral
//!
//! v_k(r) = ∫_r^R ω^{1-n}(t) ∫_0^t v_{k-1}(s) ω^{n-1}(s) ds dt.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpace;
use crate::quad;
use crate::radial::{RadialFunction, MIN_RADIAL_POINTS};

/// Internal grid density for the nested quadratures, in points per unit radius.
const FINE_POINTS_PER_UNIT: f64 = 2048.0;
const UNDERFLOW: f64 = 1e-300;
pub const MOMENT_CROSS_CHECK_TOL: f64 = 1e-6;

/// Normalised hierarchy v_1, …, v_K on a common radial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hierarchy {
    members: Vec<RadialFunction>,
    /// Set when the recursion stopped early because v_k underflowed.
    pub truncated: bool,
}

impl Hierarchy {
    /// v_k for 1 ≤ k ≤ len().
    pub fn member(&self, k: usize) -> Result<&RadialFunction> {
        if k == 0 || k > self.members.len() {
            return Err(Error::Index {
                index: k,
                max: self.members.len(),
            });
        }
        Ok(&self.members[k - 1])
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[RadialFunction] {
        &self.members
    }
}

struct FineGrid {
    step: f64,
    density: Vec<f64>,
}

impl FineGrid {
    fn new(model: &ModelSpace, radius: f64, intervals: usize) -> Self {
        let step = radius / intervals as f64;
        let density = (0..=intervals).map(|i| model.density(i as f64 * step)).collect();
        Self { step, density }
    }

    /// One level of the nested integral: returns v with Δv = -prev, v(R) = 0.
    fn level(&self, prev: &[f64]) -> Vec<f64> {
        let weighted: Vec<f64> = prev.iter().zip(&self.density).map(|(p, d)| p * d).collect();
        let inner = quad::cumulative(&weighted, self.step);
        let slope: Vec<f64> = inner
            .iter()
            .zip(&self.density)
            .enumerate()
            .map(|(i, (j, d))| if i == 0 { 0.0 } else { j / d })
            .collect();
        let outer = quad::cumulative(&slope, self.step);
        let total = *outer.last().unwrap();
        outer.iter().map(|g| total - g).collect()
    }

    fn integral(&self, values: &[f64]) -> f64 {
        let weighted: Vec<f64> = values.iter().zip(&self.density).map(|(v, d)| v * d).collect();
        quad::simpson_samples(&weighted, self.step)
    }
}

fn check_ball(model: &ModelSpace, radius: f64) -> Result<()> {
    if radius > 0.0 && radius < model.r_max() {
        Ok(())
    } else {
        Err(crate::error::domain(
            "ball radius",
            radius,
            format!("(0, {})", model.r_max()),
        ))
    }
}

/// Smallest multiple of `intervals` reaching the internal quadrature density.
fn refinement(radius: f64, intervals: usize) -> usize {
    let target = (FINE_POINTS_PER_UNIT * radius).max(64.0);
    ((target / intervals as f64).ceil() as usize).max(1)
}

fn fine_hierarchy(model: &ModelSpace, radius: f64, k_max: usize, intervals: usize) -> (FineGrid, Vec<Vec<f64>>, bool) {
    let grid = FineGrid::new(model, radius, intervals);
    let mut levels = vec![vec![1.0; intervals + 1]];
    let mut truncated = false;
    for _ in 0..k_max {
        let next = grid.level(levels.last().unwrap());
        if next.iter().fold(0.0f64, |m, v| m.max(v.abs())) < UNDERFLOW {
            truncated = true;
            break;
        }
        levels.push(next);
    }
    (grid, levels, truncated)
}

/// E_R(r) = ∫_r^R q_ω(t) dt on the grid r_i = iR/N.
pub fn mean_exit_profile(model: &ModelSpace, radius: f64, intervals: usize) -> Result<RadialFunction> {
    check_ball(model, radius)?;
    if intervals < MIN_RADIAL_POINTS {
        return Err(Error::InvalidArgument(format!(
            "radial grid needs at least {MIN_RADIAL_POINTS} intervals"
        )));
    }
    let m = refinement(radius, intervals);
    let grid = FineGrid::new(model, radius, intervals * m);
    let fine = grid.level(&vec![1.0; intervals * m + 1]);
    RadialFunction::new(radius, fine.into_iter().step_by(m).collect())
}

/// v_1, …, v_{k_max} on the grid r_i = iR/N.
pub fn hierarchy_sequence(model: &ModelSpace, radius: f64, k_max: usize, intervals: usize) -> Result<Hierarchy> {
    check_ball(model, radius)?;
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    if intervals < MIN_RADIAL_POINTS {
        return Err(Error::InvalidArgument(format!(
            "radial grid needs at least {MIN_RADIAL_POINTS} intervals"
        )));
    }
    let m = refinement(radius, intervals);
    let (_, levels, truncated) = fine_hierarchy(model, radius, k_max, intervals * m);
    let members = levels
        .into_iter()
        .skip(1)
        .map(|v| RadialFunction::new(radius, v.into_iter().step_by(m).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Hierarchy { members, truncated })
}

/// Normalised moments Ã_k = A_k / k! of a ball, k = 0..=k_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSpectrum {
    pub radius: f64,
    pub dim: usize,
    /// Vol(S_R), used to form averaged moments.
    pub boundary_volume: f64,
    pub normalized: Vec<f64>,
    /// Ã_k recomputed from the boundary flux of v_{k+1}, when available.
    pub boundary_estimates: Option<Vec<f64>>,
}

impl MomentSpectrum {
    pub fn k_max(&self) -> usize {
        self.normalized.len() - 1
    }

    pub fn normalized(&self, k: usize) -> Result<f64> {
        self.normalized.get(k).copied().ok_or(Error::Index {
            index: k,
            max: self.k_max(),
        })
    }

    /// A_k = k!·Ã_k.
    pub fn moment(&self, k: usize) -> Result<f64> {
        Ok(self.normalized(k)? * factorial(k))
    }

    /// A_k / Vol(S_R).
    pub fn averaged_moment(&self, k: usize) -> Result<f64> {
        Ok(self.moment(k)? / self.boundary_volume)
    }

    /// ρ_k = k A_{k-1}/A_k = Ã_{k-1}/Ã_k for k = 1..=k_max.
    pub fn ratios(&self) -> Vec<f64> {
        self.normalized.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

/// Moment spectrum of B_R^ω, with the bulk integrals cross-checked against
/// the boundary flux identity Ã_k = -v_{k+1}'(R)·Vol(S_R).
pub fn moment_spectrum(model: &ModelSpace, radius: f64, k_max: usize) -> Result<MomentSpectrum> {
    check_ball(model, radius)?;
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let intervals = refinement(radius, 1);
    let (grid, levels, truncated) = fine_hierarchy(model, radius, k_max + 1, intervals);
    if truncated {
        return Err(Error::Resolution(format!(
            "hierarchy underflowed before k = {}",
            k_max + 1
        )));
    }
    let c = model.sphere_constant();
    let boundary_volume = model.sphere_volume(radius)?;
    let h = grid.step;
    let mut normalized = Vec::with_capacity(k_max + 1);
    let mut boundary = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let bulk = c * grid.integral(&levels[k]);
        let v = &levels[k + 1];
        let n = v.len() - 1;
        let slope = (25.0 * v[n] - 48.0 * v[n - 1] + 36.0 * v[n - 2] - 16.0 * v[n - 3] + 3.0 * v[n - 4]) / (12.0 * h);
        let flux = -slope * boundary_volume;
        let rel = (bulk - flux).abs() / bulk.abs();
        if !(rel <= MOMENT_CROSS_CHECK_TOL) {
            return Err(Error::Resolution(format!(
                "moment {k}: bulk {bulk:e} and boundary {flux:e} disagree by {rel:e}"
            )));
        }
        normalized.push(bulk);
        boundary.push(flux);
    }
    Ok(MomentSpectrum {
        radius,
        dim: model.dim(),
        boundary_volume,
        normalized,
        boundary_estimates: Some(boundary),
    })
}

/// λ₁ extracted from the ratio sequence ρ_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda1Estimate {
    pub value: f64,
    /// ρ_1, …, ρ_K.
    pub trace: Vec<f64>,
    /// Aitken Δ² extrapolants of consecutive triples of the trace.
    pub extrapolants: Vec<f64>,
    pub warning: Option<String>,
}

fn aitken(a: f64, b: f64, c: f64) -> f64 {
    let denom = c - 2.0 * b + a;
    if denom.abs() <= 1e-14 * c.abs() {
        c
    } else {
        c - (c - b) * (c - b) / denom
    }
}

/// λ₁ ≈ lim ρ_k, accelerated by Aitken Δ² on the tail of the trace.
pub fn lambda1_from_moments(spectrum: &MomentSpectrum) -> Result<Lambda1Estimate> {
    if spectrum.k_max() < 4 {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue extraction needs k_max >= 4, got {}",
            spectrum.k_max()
        )));
    }
    let trace = spectrum.ratios();
    if trace.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Inconsistent("moment ratios must be positive".into()));
    }
    let extrapolants: Vec<f64> = trace.windows(3).map(|w| aitken(w[0], w[1], w[2])).collect();
    let value = *extrapolants.last().unwrap();

    let mut warning = None;
    let tail = &trace[trace.len().saturating_sub(6)..];
    let diffs: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = value.abs().max(f64::MIN_POSITIVE);
    let noise = 1e-12 * scale;
    let ups = diffs.iter().filter(|d| **d > noise).count();
    let downs = diffs.iter().filter(|d| **d < -noise).count();
    if ups > 0 && downs > 0 {
        warning = Some("ratio trace oscillates in its tail".into());
    } else if extrapolants.len() >= 2 {
        let prev = extrapolants[extrapolants.len() - 2];
        if (value - prev).abs() > 1e-3 * scale {
            warning = Some(format!(
                "extrapolation not settled: last two estimates {prev} and {value}"
            ));
        }
    }
    Ok(Lambda1Estimate {
        value,
        trace,
        extrapolants,
        warning,
    })
}

/// Steps used by the shooting integrator across [0, R].
const SHOOTING_STEPS: usize = 4000;
const SHOOTING_CAP: f64 = 1e8;

/// Number of sign changes of φ on (0, R] for the radial problem
/// φ'' + (n-1)η φ' + λφ = 0, φ(0) = 1, φ'(0) = 0. A zero exactly at R counts.
fn shooting_zero_count(model: &ModelSpace, radius: f64, lambda: f64) -> usize {
    let n = model.dim() as f64;
    let h = radius / SHOOTING_STEPS as f64;
    let start = model.dim().max(4);
    let r0 = start as f64 * h;
    let a3 = model.warping().cubic_coefficient();
    let c2 = -lambda / (2.0 * n);
    let c4 = -c2 * (lambda + 4.0 * (n - 1.0) * a3) / (4.0 * (n + 2.0));
    let r2 = r0 * r0;
    let mut y = [1.0 + c2 * r2 + c4 * r2 * r2, 2.0 * c2 * r0 + 4.0 * c4 * r2 * r0];
    let rhs = |r: f64, y: [f64; 2]| {
        let w = model.warping().eval(r);
        [y[1], -(n - 1.0) * w.d1 / w.value * y[1] - lambda * y[0]]
    };
    let mut zeros = 0;
    let mut sign = y[0] > 0.0;
    for i in start..SHOOTING_STEPS {
        let r = i as f64 * h;
        let k1 = rhs(r, y);
        let k2 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        let s = y[0] > 0.0;
        if s != sign {
            zeros += 1;
            sign = s;
        }
    }
    if y[0] == 0.0 && sign {
        zeros += 1;
    }
    zeros
}

/// λ₁(B_R^ω) by shooting on the radial eigenvalue problem, bracketing the
/// first zero crossing of φ(R; λ) by Sturm zero counting.
pub fn lambda1_shooting(model: &ModelSpace, radius: f64) -> Result<f64> {
    check_ball(model, radius)?;
    let cap = SHOOTING_CAP / (radius * radius);
    let mut lo = 1.0 / (radius * radius);
    while shooting_zero_count(model, radius, lo) > 0 {
        lo /= 1.2;
        if lo < 1e-12 {
            return Err(Error::BracketFailure { cap: lo });
        }
    }
    let mut hi = lo * 1.2;
    while shooting_zero_count(model, radius, hi) == 0 {
        lo = hi;
        hi *= 1.2;
        if hi > cap {
            return Err(Error::BracketFailure { cap });
        }
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if shooting_zero_count(model, radius, mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Second-order finite-difference model Laplacian f'' + (n-1)η f' of a
/// radial function; at r = 0 it uses Δf(0) = n f''(0).
pub fn apply_model_laplacian(model: &ModelSpace, f: &RadialFunction) -> Result<RadialFunction> {
    let v = f.values();
    let h = f.step();
    let n = v.len() - 1;
    let dim = model.dim() as f64;
    let mut out = Vec::with_capacity(n + 1);
    out.push(dim * 2.0 * (v[1] - v[0]) / (h * h));
    for i in 1..=n {
        let r = i as f64 * h;
        let (d1, d2) = if i < n {
            (
                (v[i + 1] - v[i - 1]) / (2.0 * h),
                (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h),
            )
        } else {
            (
                (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h),
                (2.0 * v[n] - 5.0 * v[n - 1] + 4.0 * v[n - 2] - v[n - 3]) / (h * h),
            )
        };
        let eta = model.mean_curvature(r)?;
        out.push(d2 + (dim - 1.0) * eta * d1);
    }
    RadialFunction::new(f.radius(), out)
}
