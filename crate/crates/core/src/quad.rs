//! Quadrature on uniform grids.
//!
//! Everything here is deterministic: fixed grids, fixed doubling schedule,
//! no adaptivity that depends on floating-point accidents beyond the stopping
//! test.

use crate::error::{Error, Result};

/// Composite Simpson rule with `n` panels (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let x = a + i as f64 * h;
        if i % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b))
}

/// Simpson with Richardson doubling: the panel count doubles until two
/// successive estimates agree to `rtol`, then the extrapolated value is
/// returned.
pub fn simpson_richardson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n0: usize, rtol: f64) -> Result<f64> {
    const MAX_DOUBLINGS: usize = 10;
    if a == b {
        return Ok(0.0);
    }
    let mut n = (n0.max(2) + 1) & !1;
    let mut coarse = simpson(&f, a, b, n);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        n *= 2;
        let fine = simpson(&f, a, b, n);
        change = (fine - coarse).abs();
        let scale = fine.abs().max(f64::MIN_POSITIVE);
        if change <= rtol * scale || change <= 1e-300 {
            return Ok(fine + (fine - coarse) / 15.0);
        }
        coarse = fine;
    }
    Err(Error::Quadrature {
        tolerance: rtol,
        change: change / coarse.abs().max(f64::MIN_POSITIVE),
    })
}

/// Trapezoid rule over one period of a smooth periodic integrand. Doubling
/// stops once successive estimates agree to `rtol`; convergence is spectral.
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(f: F, period: f64, n0: usize, rtol: f64) -> Result<f64> {
    let mut n = n0.max(4);
    let estimate = |n: usize| {
        let h = period / n as f64;
        (0..n).map(|j| f(j as f64 * h)).sum::<f64>() * h
    };
    let mut coarse = estimate(n);
    let mut change = f64::INFINITY;
    for _ in 0..14 {
        n *= 2;
        let fine = estimate(n);
        change = (fine - coarse).abs();
        if change <= rtol * fine.abs() {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::Quadrature {
        tolerance: rtol,
        change: change / coarse.abs().max(f64::MIN_POSITIVE),
    })
}

/// Composite Simpson on uniformly spaced samples. An odd panel count is
/// closed with Simpson's 3/8 rule on the last three panels.
pub fn simpson_samples(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    match n {
        0 => 0.0,
        1 => 0.5 * h * (values[0] + values[1]),
        2 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        3 => 3.0 * h / 8.0 * (values[0] + 3.0 * values[1] + 3.0 * values[2] + values[3]),
        _ if n.is_multiple_of(2) => {
            let mut s = values[0] + values[n];
            for (i, v) in values.iter().enumerate().take(n).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            s * h / 3.0
        }
        _ => {
            let head = simpson_samples(&values[..n - 2], h);
            let t = &values[n - 3..];
            head + 3.0 * h / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3])
        }
    }
}

/// Running integral `out[i] = ∫_{x_0}^{x_i} f` of uniformly spaced samples,
/// fourth order. Each panel uses the cubic through the four nearest samples.
pub fn cumulative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 4, "cumulative quadrature needs at least four samples");
    let f = values;
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    let mut acc = 0.0;
    for i in 0..n - 1 {
        let panel = if i == 0 {
            9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
        } else if i == n - 2 {
            f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1]
        } else {
            -f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]
        };
        acc += panel * h / 24.0;
        out.push(acc);
    }
    out
}

/// Five-point Gauss-Legendre on `[a, b]`; used for short sub-intervals where
/// a full composite rule would be wasteful.
pub fn gauss5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    X.iter().zip(W.iter()).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}
