#![allow(dead_code)]

use std::f64::consts::PI;

/// J_0(x) by its power series, adequate for |x| ≤ 10.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..80 {
        term *= q / (m as f64 * m as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// First positive zero of J_0 by bisection on [2, 3].
pub fn j0_first_zero() -> f64 {
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if bessel_j0(a) * bessel_j0(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Example metric ω(t, θ) = t(1 + t²/(1 + t²cos²θ)).
pub fn example_w(t: f64, theta: f64) -> f64 {
    let c2 = theta.cos().powi(2);
    t * (1.0 + t * t / (1.0 + t * t * c2))
}

/// Closed form of ∂_t ω / ω for the example metric.
pub fn example_h(t: f64, theta: f64) -> f64 {
    let d = 1.0 + t * t * theta.cos().powi(2);
    1.0 / t + 2.0 * t / ((1.0 + t * t / d) * d * d)
}

/// Closed form of -∂_t² ω / ω for the example metric.
pub fn example_k(t: f64, theta: f64) -> f64 {
    let a = t * t * theta.cos().powi(2);
    2.0 * (a - 3.0) / ((1.0 + a).powi(2) * (1.0 + t * t + a))
}

/// Area of a geodesic disk of radius r in the constant curvature b plane.
pub fn space_form_disk_area(b: f64, r: f64) -> f64 {
    if b > 0.0 {
        2.0 * PI * (1.0 - (b.sqrt() * r).cos()) / b
    } else if b < 0.0 {
        2.0 * PI * ((-b).sqrt() * r).cosh() / -b - 2.0 * PI / -b
    } else {
        PI * r * r
    }
}

/// Central second-order derivative estimates (f', f'').
pub fn central_derivatives(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
    let (fp, fm, f0) = (f(x + h), f(x - h), f(x));
    ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
}
