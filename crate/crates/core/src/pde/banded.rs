use crate::error::{Error, Result};

/// Symmetric positive definite matrix in lower band storage.
///
/// Row `i` keeps the entries of columns `i - b ..= i` (with `b` the half
/// bandwidth), so the inner products of the Cholesky recurrence run over
/// contiguous memory.
#[derive(Debug, Clone)]
pub struct SymmetricBand {
    n: usize,
    b: usize,
    data: Vec<f64>,
}

impl SymmetricBand {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        Self {
            n,
            b: half_bandwidth,
            data: vec![0.0; n * (half_bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.b
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.b);
        i * (self.b + 1) + (j + self.b - i)
    }

    /// Adds `v` to entry (i, j) and, by symmetry, (j, i).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        assert!(hi - lo <= self.b, "entry ({i}, {j}) outside the band");
        let s = self.slot(hi, lo);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.b {
            0.0
        } else {
            self.data[self.slot(hi, lo)]
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.mul_with(x, |a| a)
    }

    /// |A|·|x|, the scale against which rounding in A·x is measured.
    pub fn abs_mul(&self, x: &[f64]) -> Vec<f64> {
        let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        self.mul_with(&ax, f64::abs)
    }

    fn mul_with(&self, x: &[f64], entry: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let first = i.saturating_sub(self.b);
            let row = &self.data[i * (self.b + 1)..(i + 1) * (self.b + 1)];
            let off = first + self.b - i;
            let mut acc = 0.0;
            for (k, j) in (first..=i).enumerate() {
                let a = entry(row[off + k]);
                acc += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
            y[i] += acc;
        }
        y
    }

    /// Cholesky factorisation A = L Lᵀ; L keeps the band of A.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let (n, b) = (self.n, self.b);
        let w = b + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let first = i.saturating_sub(b);
            for j in first..=i {
                // columns max(i, j) - b .. j - 1 are shared by rows i and j
                let k0 = first.max(j.saturating_sub(b));
                let len = j - k0;
                let ri = i * w + (k0 + b - i);
                let rj = j * w + (k0 + b - j);
                let (row_i, row_j) = (&l[ri..ri + len], &l[rj..rj + len]);
                let dot: f64 = row_i.iter().zip(row_j).map(|(a, c)| a * c).sum();
                let s = i * w + (j + b - i);
                let v = l[s] - dot;
                if i == j {
                    if !(v > 0.0) {
                        return Err(Error::SingularSystem { row: i, pivot: v });
                    }
                    l[s] = v.sqrt();
                } else {
                    l[s] = v / l[j * w + b];
                }
            }
        }
        Ok(BandCholesky { n, b, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    b: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves A x = rhs.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, b) = (self.n, self.b);
        let w = b + 1;
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let first = i.saturating_sub(b);
            let row = &self.l[i * w + (first + b - i)..i * w + b];
            let dot: f64 = row.iter().zip(&y[first..i]).map(|(a, c)| a * c).sum();
            y[i] = (y[i] - dot) / self.l[i * w + b];
        }
        for i in (0..n).rev() {
            y[i] /= self.l[i * w + b];
            let yi = y[i];
            let first = i.saturating_sub(b);
            let row = &self.l[i * w + (first + b - i)..i * w + b];
            for (a, t) in row.iter().zip(&mut y[first..i]) {
                *t -= a * yi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[allow(clippy::needless_range_loop)]
    fn random_spd(n: usize, b: usize, seed: u64) -> (SymmetricBand, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SymmetricBand::zeros(n, b);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(b)..i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m.add(i, j, v);
                dense[i][j] += v;
                dense[j][i] += v;
            }
        }
        for i in 0..n {
            let d = 2.0 * b as f64 + 1.0 + rng.gen_range(0.0..1.0);
            m.add(i, i, d);
            dense[i][i] += d;
        }
        (m, dense)
    }

    #[test]
    fn multiply_matches_dense() {
        let (m, dense) = random_spd(30, 4, 7);
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let y = m.mul(&x);
        for i in 0..30 {
            let expected: f64 = (0..30).map(|j| dense[i][j] * x[j]).sum();
            assert!((y[i] - expected).abs() < 1e-12);
        }
        assert_eq!(m.get(0, 29), 0.0);
    }

    #[test]
    fn solve_recovers_solution() {
        for (n, b) in [(1, 0), (5, 1), (40, 6), (200, 17)] {
            let (m, _) = random_spd(n, b, n as u64);
            let x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.3).cos()).collect();
            let rhs = m.mul(&x);
            let sol = m.cholesky().unwrap().solve(&rhs);
            for (a, c) in sol.iter().zip(&x) {
                assert!((a - c).abs() < 1e-11, "n={n} b={b}: {a} vs {c}");
            }
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut m = SymmetricBand::zeros(2, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, 1.0);
        m.add(1, 0, 2.0);
        assert!(matches!(m.cholesky(), Err(Error::SingularSystem { row: 1, .. })));
    }
}
