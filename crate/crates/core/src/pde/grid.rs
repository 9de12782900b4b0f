use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::surface::PolarMetric2D;

/// Finite-volume polar grid over the geodesic ball B_R of a polar metric.
///
/// Rings sit at r_i = iΔr, i = 1..=N_r, with r_{N_r} = R carrying the
/// Dirichlet data; angles θ_j = jΔθ, j = 0..N_θ-1, are periodic. The pole is a
/// single node whose cell is the disk r < Δr/2. Interior ring cells span
/// [r_i - Δr/2, r_i + Δr/2]; boundary cells are the half-cells [R - Δr/2, R].
#[derive(Debug, Clone)]
pub struct PolarGrid {
    metric: PolarMetric2D,
    radius: f64,
    n_r: usize,
    n_theta: usize,
    dr: f64,
    dtheta: f64,
    center_area: f64,
    areas: Vec<f64>,
    center_links: Vec<f64>,
    radial_links: Vec<f64>,
    angular_links: Vec<f64>,
}

impl PolarGrid {
    pub fn new(metric: &PolarMetric2D, radius: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(radius > 0.0 && radius <= metric.r_valid()) {
            return Err(domain("grid radius", radius, format!("(0, {}]", metric.r_valid())));
        }
        if n_r < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 rings, got {n_r}")));
        }
        if n_theta < 4 || !n_theta.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "angular resolution must be even and at least 4, got {n_theta}"
            )));
        }
        let dr = radius / n_r as f64;
        let dtheta = 2.0 * PI / n_theta as f64;
        let theta = |j: f64| j * dtheta;
        let w = |r: f64, t: f64| metric.w(r, t);

        let mut center_area = 0.0;
        let mut center_links = Vec::with_capacity(n_theta);
        for j in 0..n_theta {
            let t = theta(j as f64);
            // Simpson on [0, Δr/2] with ω(0) = 0
            center_area += dtheta * (0.5 * dr) / 6.0 * (4.0 * w(0.25 * dr, t) + w(0.5 * dr, t));
            center_links.push(w(0.5 * dr, t) * dtheta / dr);
        }

        let mut areas = Vec::with_capacity(n_r * n_theta);
        for i in 1..=n_r {
            for j in 0..n_theta {
                let t = theta(j as f64);
                areas.push(if i < n_r {
                    w(i as f64 * dr, t) * dr * dtheta
                } else {
                    w(radius - 0.25 * dr, t) * 0.5 * dr * dtheta
                });
            }
        }

        let mut radial_links = Vec::with_capacity((n_r - 1) * n_theta);
        let mut angular_links = Vec::with_capacity((n_r - 1) * n_theta);
        for i in 1..n_r {
            let r = i as f64 * dr;
            for j in 0..n_theta {
                radial_links.push(w(r + 0.5 * dr, theta(j as f64)) * dtheta / dr);
                angular_links.push(dr / (dtheta * w(r, theta(j as f64 + 0.5))));
            }
        }

        Ok(Self {
            metric: metric.clone(),
            radius,
            n_r,
            n_theta,
            dr,
            dtheta,
            center_area,
            areas,
            center_links,
            radial_links,
            angular_links,
        })
    }

    pub fn metric(&self) -> &PolarMetric2D {
        &self.metric
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta
    }

    pub fn center_area(&self) -> f64 {
        self.center_area
    }

    /// Area of cell (i, j), 1 ≤ i ≤ N_r.
    pub fn area(&self, i: usize, j: usize) -> f64 {
        self.areas[(i - 1) * self.n_theta + j]
    }

    /// Sum of all cell areas, boundary half-cells included.
    pub fn total_area(&self) -> f64 {
        self.center_area + self.areas.iter().sum::<f64>()
    }

    pub(crate) fn center_link(&self, j: usize) -> f64 {
        self.center_links[j]
    }

    /// Coupling between (i, j) and (i + 1, j), 1 ≤ i < N_r.
    pub(crate) fn radial_link(&self, i: usize, j: usize) -> f64 {
        self.radial_links[(i - 1) * self.n_theta + j]
    }

    /// Coupling between (i, j) and (i, j + 1), 1 ≤ i < N_r.
    pub(crate) fn angular_link(&self, i: usize, j: usize) -> f64 {
        self.angular_links[(i - 1) * self.n_theta + j]
    }

    /// Number of unknowns of a Dirichlet problem: the pole plus the interior rings.
    pub fn unknowns(&self) -> usize {
        1 + (self.n_r - 1) * self.n_theta
    }

    /// Position of interior node (i, j) in the unknown vector; the pole is 0.
    pub fn index(&self, i: usize, j: usize) -> usize {
        1 + (i - 1) * self.n_theta + j
    }
}

/// Values on a polar grid: one pole value and N_r × N_θ ring values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n_r: usize,
    n_theta: usize,
    center: f64,
    rings: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: &PolarGrid) -> Self {
        Self {
            n_r: grid.n_r,
            n_theta: grid.n_theta,
            center: 0.0,
            rings: vec![0.0; grid.n_r * grid.n_theta],
        }
    }

    /// Samples f(r, θ); the pole takes f(0, 0).
    pub fn from_fn(grid: &PolarGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        out.center = f(0.0, 0.0);
        for i in 1..=grid.n_r {
            for j in 0..grid.n_theta {
                out.set(i, j, f(grid.r(i), grid.theta(j)));
            }
        }
        out
    }

    /// Same as `from_fn` but with the boundary ring forced to zero.
    pub fn dirichlet_from_fn(grid: &PolarGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::from_fn(grid, f);
        for j in 0..grid.n_theta {
            out.set(grid.n_r, j, 0.0);
        }
        out
    }

    pub(crate) fn from_unknowns(grid: &PolarGrid, x: &[f64]) -> Self {
        let mut out = Self::zeros(grid);
        out.center = x[0];
        let interior = (grid.n_r - 1) * grid.n_theta;
        out.rings[..interior].copy_from_slice(&x[1..]);
        out
    }

    pub(crate) fn to_unknowns(&self) -> Vec<f64> {
        let interior = (self.n_r - 1) * self.n_theta;
        let mut x = Vec::with_capacity(interior + 1);
        x.push(self.center);
        x.extend_from_slice(&self.rings[..interior]);
        x
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn set_center(&mut self, v: f64) {
        self.center = v;
    }

    /// Value at ring i (1 ≤ i ≤ N_r), angle j; i = 0 returns the pole value.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == 0 {
            self.center
        } else {
            self.rings[(i - 1) * self.n_theta + j % self.n_theta]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if i == 0 {
            self.center = v;
        } else {
            self.rings[(i - 1) * self.n_theta + j] = v;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.rings.iter().fold(self.center.abs(), |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.rings.iter().copied().fold(self.center, f64::min)
    }

    /// (value, cell area) for every cell, pole first, boundary half-cells last.
    pub fn cells<'a>(&'a self, grid: &'a PolarGrid) -> impl Iterator<Item = (f64, f64)> + 'a {
        std::iter::once((self.center, grid.center_area))
            .chain(self.rings.iter().copied().zip(grid.areas.iter().copied()))
    }

    /// ∫ f over the ball with the cell areas as quadrature weights.
    pub fn integral(&self, grid: &PolarGrid) -> f64 {
        self.cells(grid).map(|(v, a)| v * a).sum()
    }

    /// Area-weighted inner product over the pole and interior rings.
    pub fn inner(&self, other: &GridField, grid: &PolarGrid) -> f64 {
        let interior = (self.n_r - 1) * self.n_theta;
        self.center * other.center * grid.center_area
            + (0..interior)
                .map(|p| self.rings[p] * other.rings[p] * grid.areas[p])
                .sum::<f64>()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n_r: self.n_r,
            n_theta: self.n_theta,
            center: f(self.center),
            rings: self.rings.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Largest |self - other| over all nodes.
    pub fn max_diff(&self, other: &GridField) -> f64 {
        self.rings
            .iter()
            .zip(&other.rings)
            .fold((self.center - other.center).abs(), |m, (a, b)| m.max((a - b).abs()))
    }
}
