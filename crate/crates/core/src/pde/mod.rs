//! Poisson hierarchy, moments and λ₁ on geodesic balls of a polar metric.
//!
//! The Laplacian is discretised in divergence form
//! Δf = (1/ω)[∂_r(ω f_r) + ∂_θ(ω⁻¹ f_θ)] by finite volumes, so the stiffness
//! matrix A = -diag(a)·L is symmetric positive definite for the Dirichlet
//! problem. Unknowns are ordered pole first, then ring by ring, which gives a
//! half bandwidth of N_θ.

mod banded;
mod grid;

pub use banded::{BandCholesky, SymmetricBand};
pub use grid::{GridField, PolarGrid};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{lambda1_from_moments, Lambda1Estimate, MomentSpectrum};

/// Δf at the pole and on rings 1..N_r-1 in divergence form. The boundary
/// ring of the result is set to zero.
pub fn apply_laplacian(grid: &PolarGrid, f: &GridField) -> GridField {
    let (n_r, n_t) = (grid.n_r(), grid.n_theta());
    let mut out = GridField::zeros(grid);
    let c = f.center();
    let flux: f64 = (0..n_t).map(|j| grid.center_link(j) * (f.get(1, j) - c)).sum();
    out.set_center(flux / grid.center_area());
    for i in 1..n_r {
        for j in 0..n_t {
            let v = f.get(i, j);
            let jm = (j + n_t - 1) % n_t;
            let jp = (j + 1) % n_t;
            let inward = if i == 1 {
                grid.center_link(j) * (c - v)
            } else {
                grid.radial_link(i - 1, j) * (f.get(i - 1, j) - v)
            };
            let outward = grid.radial_link(i, j) * (f.get(i + 1, j) - v);
            let around = grid.angular_link(i, j) * (f.get(i, jp) - v) + grid.angular_link(i, jm) * (f.get(i, jm) - v);
            out.set(i, j, (inward + outward + around) / grid.area(i, j));
        }
    }
    out
}

/// Δf in the expanded coordinate form
/// f_rr + (ω_r/ω) f_r + f_θθ/ω² - (ω_θ/ω³) f_θ with central differences.
/// Used to audit the divergence form; the pole uses the same closure.
pub fn apply_laplacian_expanded(grid: &PolarGrid, f: &GridField) -> GridField {
    let (n_r, n_t) = (grid.n_r(), grid.n_theta());
    let (dr, dt) = (grid.dr(), grid.dtheta());
    let mut out = apply_laplacian(grid, f);
    for i in 1..n_r {
        let r = grid.r(i);
        for j in 0..n_t {
            let s = grid.metric().eval(r, grid.theta(j));
            let jm = (j + n_t - 1) % n_t;
            let jp = (j + 1) % n_t;
            let (fm, f0, fp) = (f.get(i - 1, j), f.get(i, j), f.get(i + 1, j));
            let f_r = (fp - fm) / (2.0 * dr);
            let f_rr = (fp - 2.0 * f0 + fm) / (dr * dr);
            let f_t = (f.get(i, jp) - f.get(i, jm)) / (2.0 * dt);
            let f_tt = (f.get(i, jp) - 2.0 * f0 + f.get(i, jm)) / (dt * dt);
            let w = s.w;
            out.set(
                i,
                j,
                f_rr + s.w_r / w * f_r + f_tt / (w * w) - s.w_theta / (w * w * w) * f_t,
            );
        }
    }
    out
}

/// Dirichlet stiffness matrix A = -diag(a) L over the pole and interior rings.
pub fn stiffness_matrix(grid: &PolarGrid) -> SymmetricBand {
    let (n_r, n_t) = (grid.n_r(), grid.n_theta());
    let mut a = SymmetricBand::zeros(grid.unknowns(), n_t);
    let link = |a: &mut SymmetricBand, p: Option<usize>, q: Option<usize>, w: f64| {
        if let Some(p) = p {
            a.add(p, p, w);
        }
        if let Some(q) = q {
            a.add(q, q, w);
        }
        if let (Some(p), Some(q)) = (p, q) {
            a.add(p, q, -w);
        }
    };
    let node = |i: usize, j: usize| if i < n_r { Some(grid.index(i, j)) } else { None };
    for j in 0..n_t {
        link(&mut a, Some(0), node(1, j), grid.center_link(j));
    }
    for i in 1..n_r {
        for j in 0..n_t {
            link(&mut a, node(i, j), node(i + 1, j), grid.radial_link(i, j));
            link(&mut a, node(i, j), node(i, (j + 1) % n_t), grid.angular_link(i, j));
        }
    }
    a
}

fn unknown_areas(grid: &PolarGrid) -> Vec<f64> {
    let mut a = Vec::with_capacity(grid.unknowns());
    a.push(grid.center_area());
    for i in 1..grid.n_r() {
        for j in 0..grid.n_theta() {
            a.push(grid.area(i, j));
        }
    }
    a
}

/// Factorised Dirichlet problem on one grid, reused across right-hand sides.
#[derive(Debug, Clone)]
pub struct GridSolver {
    grid: PolarGrid,
    stiffness: SymmetricBand,
    factor: BandCholesky,
    areas: Vec<f64>,
}

/// Bound on the componentwise backward error of each Poisson solve.
pub const HIERARCHY_RESIDUAL_TOL: f64 = 1e-10;
pub const LARGE_K_MAX: usize = 64;

impl GridSolver {
    pub fn new(grid: &PolarGrid) -> Result<Self> {
        let stiffness = stiffness_matrix(grid);
        let factor = stiffness.cholesky()?;
        Ok(Self {
            grid: grid.clone(),
            stiffness,
            factor,
            areas: unknown_areas(grid),
        })
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    /// max_p |A v - a f|_p / (|A||v| + a|f|)_p.
    ///
    /// The plain residual |L v + f| cannot be driven below roughly
    /// ε·|L|·|v|, which near the pole exceeds 1e-10·|f| once the grid is
    /// fine, so solves are judged by their componentwise backward error.
    fn backward_error(&self, v: &[f64], rhs: &[f64]) -> f64 {
        let av = self.stiffness.mul(v);
        let scale = self.stiffness.abs_mul(v);
        av.iter().zip(rhs).zip(&scale).fold(0.0, |m, ((av, b), s)| {
            let denom = s + b.abs();
            if denom > 0.0 {
                m.max((av - b).abs() / denom)
            } else {
                m
            }
        })
    }

    /// Solves L v = -f with v = 0 on the boundary ring.
    pub fn solve_poisson(&self, f: &GridField) -> Result<GridField> {
        let f = f.to_unknowns();
        let rhs: Vec<f64> = f.iter().zip(&self.areas).map(|(f, a)| f * a).collect();
        let mut v = self.factor.solve(&rhs);
        if self.backward_error(&v, &rhs) > HIERARCHY_RESIDUAL_TOL {
            let av = self.stiffness.mul(&v);
            let defect: Vec<f64> = rhs.iter().zip(&av).map(|(b, av)| b - av).collect();
            let dv = self.factor.solve(&defect);
            for (v, d) in v.iter_mut().zip(dv) {
                *v += d;
            }
            let err = self.backward_error(&v, &rhs);
            if err > HIERARCHY_RESIDUAL_TOL {
                return Err(Error::Resolution(format!(
                    "Poisson solve backward error {err:e} exceeds {HIERARCHY_RESIDUAL_TOL:e}"
                )));
            }
        }
        Ok(GridField::from_unknowns(&self.grid, &v))
    }

    /// v_1, …, v_{k_max} with L v_k = -v_{k-1}, v_0 = 1.
    pub fn hierarchy(&self, k_max: usize) -> Result<GridHierarchy> {
        if k_max < 1 {
            return Err(Error::InvalidArgument("k_max must be at least 1".into()));
        }
        let mut prev = GridField::dirichlet_from_fn(&self.grid, |_, _| 1.0);
        let mut fields = Vec::with_capacity(k_max);
        for _ in 0..k_max {
            let v = self.solve_poisson(&prev)?;
            fields.push(v.clone());
            prev = v;
        }
        let warning = (k_max > LARGE_K_MAX)
            .then(|| format!("k_max = {k_max} exceeds {LARGE_K_MAX}; high moments are resolution-limited"));
        Ok(GridHierarchy { fields, warning })
    }
}

/// Normalised grid hierarchy v_1, …, v_K.
#[derive(Debug, Clone)]
pub struct GridHierarchy {
    pub fields: Vec<GridField>,
    pub warning: Option<String>,
}

impl GridHierarchy {
    pub fn member(&self, k: usize) -> Result<&GridField> {
        if k == 0 || k > self.fields.len() {
            return Err(Error::Index {
                index: k,
                max: self.fields.len(),
            });
        }
        Ok(&self.fields[k - 1])
    }
}

/// Factorises the grid's Dirichlet problem and solves the hierarchy.
pub fn solve_hierarchy_grid(grid: &PolarGrid, k_max: usize) -> Result<GridHierarchy> {
    GridSolver::new(grid)?.hierarchy(k_max)
}

/// Ã_k = Σ v_k·a over all cells; Ã_0 is the total cell area.
pub fn moments_grid(grid: &PolarGrid, hierarchy: &GridHierarchy) -> Result<MomentSpectrum> {
    let mut normalized = Vec::with_capacity(hierarchy.fields.len() + 1);
    normalized.push(grid.total_area());
    normalized.extend(hierarchy.fields.iter().map(|f| f.integral(grid)));
    Ok(MomentSpectrum {
        radius: grid.radius(),
        dim: 2,
        boundary_volume: grid.metric().sphere_length(grid.radius())?,
        normalized,
        boundary_estimates: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridLambda1 {
    /// Ratio-limit estimate from the grid moments.
    pub moment_value: f64,
    /// Smallest eigenvalue of the discrete operator by inverse iteration.
    pub power_value: f64,
    pub moments: Lambda1Estimate,
    pub iterations: usize,
}

/// Hierarchy depth used by the grid moment route.
pub const GRID_MOMENT_K_MAX: usize = 40;
pub const EIGEN_ROUTE_TOLERANCE: f64 = 0.05;

/// λ₁ of the grid ball by the moment-ratio route and by inverse iteration.
pub fn lambda1_grid(grid: &PolarGrid) -> Result<GridLambda1> {
    let solver = GridSolver::new(grid)?;
    let hierarchy = solver.hierarchy(GRID_MOMENT_K_MAX)?;
    lambda1_grid_with(&solver, &hierarchy)
}

/// As `lambda1_grid`, reusing an existing factorisation and hierarchy.
pub fn lambda1_grid_with(solver: &GridSolver, hierarchy: &GridHierarchy) -> Result<GridLambda1> {
    let grid = solver.grid();
    let spectrum = moments_grid(grid, hierarchy)?;
    let moments = lambda1_from_moments(&spectrum)?;
    let (power_value, iterations) = inverse_iteration(solver, hierarchy.fields.last().unwrap())?;
    let moment_value = moments.value;
    let gap = (moment_value - power_value).abs() / power_value;
    if gap > EIGEN_ROUTE_TOLERANCE {
        return Err(Error::Resolution(format!(
            "eigenvalue routes disagree: moments {moment_value}, inverse iteration {power_value}"
        )));
    }
    Ok(GridLambda1 {
        moment_value,
        power_value,
        moments,
        iterations,
    })
}

/// Smallest λ of A x = λ diag(a) x by unshifted inverse iteration with
/// Rayleigh quotients, to 1e-8 relative change or better.
fn inverse_iteration(solver: &GridSolver, start: &GridField) -> Result<(f64, usize)> {
    let a = &solver.areas;
    let mut x = start.to_unknowns();
    let norm = |x: &[f64]| x.iter().zip(a).map(|(x, a)| x * x * a).sum::<f64>().sqrt();
    let n0 = norm(&x);
    if !(n0 > 0.0) {
        return Err(Error::Inconsistent("inverse iteration start vector vanishes".into()));
    }
    x.iter_mut().for_each(|v| *v /= n0);
    let mut lambda = f64::INFINITY;
    for it in 1..=500 {
        let dx: Vec<f64> = x.iter().zip(a).map(|(x, a)| x * a).collect();
        let y = solver.factor.solve(&dx);
        let ydy: f64 = y.iter().zip(a).map(|(y, a)| y * y * a).sum();
        let ydx: f64 = y.iter().zip(&dx).map(|(y, d)| y * d).sum();
        let next = ydx / ydy;
        let s = ydy.sqrt();
        x = y.into_iter().map(|v| v / s).collect();
        if (next - lambda).abs() <= 1e-12 * next {
            return Ok((next, it));
        }
        lambda = next;
    }
    Ok((lambda, 500))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WarpingProfile;
    use crate::surface::PolarMetric2D;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn flat() -> PolarMetric2D {
        PolarMetric2D::radial(WarpingProfile::euclidean()).unwrap()
    }

    #[test]
    fn laplacian_of_r_squared_is_four() {
        let g = PolarGrid::new(&flat(), 1.0, 16, 16).unwrap();
        let f = GridField::from_fn(&g, |r, _| r * r);
        let lap = apply_laplacian(&g, &f);
        assert_relative_eq!(lap.center(), 4.0, epsilon = 1e-12);
        for i in 1..16 {
            for j in 0..16 {
                assert_relative_eq!(lap.get(i, j), 4.0, epsilon = 1e-10);
            }
        }
        assert_eq!(lap.get(16, 3), 0.0);
    }

    #[test]
    fn harmonic_polynomial_is_nearly_harmonic() {
        let g = PolarGrid::new(&flat(), 1.0, 64, 64).unwrap();
        let f = GridField::from_fn(&g, |r, t| r * r * (2.0 * t).cos());
        let lap = apply_laplacian(&g, &f);
        assert!(lap.max_abs() < 2e-2, "{}", lap.max_abs());
    }

    #[test]
    fn stiffness_is_symmetric_and_matches_operator() {
        let m = PolarMetric2D::example();
        let g = PolarGrid::new(&m, 1.0, 6, 8).unwrap();
        let a = stiffness_matrix(&g);
        let f = GridField::dirichlet_from_fn(&g, |r, t| (1.0 - r) * (1.0 + 0.3 * t.sin()));
        let af = a.mul(&f.to_unknowns());
        let lap = apply_laplacian(&g, &f).to_unknowns();
        let areas = unknown_areas(&g);
        for p in 0..g.unknowns() {
            assert_relative_eq!(af[p], -areas[p] * lap[p], epsilon = 1e-12);
        }
    }

    #[test]
    fn unit_disk_hierarchy() {
        let g = PolarGrid::new(&flat(), 1.0, 64, 64).unwrap();
        let h = solve_hierarchy_grid(&g, 2).unwrap();
        assert!((h.member(1).unwrap().center() - 0.25).abs() < 1e-3);
        assert!((h.member(2).unwrap().center() - 0.046875).abs() < 1e-3);
        assert!(h.fields.iter().all(|f| f.min() >= 0.0));
        let s = moments_grid(&g, &h).unwrap();
        assert!((s.normalized[0] - PI).abs() < 1e-3 * PI);
        assert!((s.normalized[1] - PI / 8.0).abs() < 1e-3 * PI / 8.0);
    }

    #[test]
    fn eigenvalue_routes_agree() {
        let j01sq = 2.404_825_557_695_773_f64.powi(2);
        let g = PolarGrid::new(&flat(), 1.0, 48, 48).unwrap();
        let est = lambda1_grid(&g).unwrap();
        assert!((est.power_value - j01sq).abs() < 0.02 * j01sq);
        assert!((est.moment_value - est.power_value).abs() < 1e-6 * est.power_value);
    }
}
