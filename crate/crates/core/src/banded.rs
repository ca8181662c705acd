//! Square banded matrices and their LU factorization.
//!
//! Storage is row-major over the band plus `kl` extra super-diagonals for
//! pivoting fill-in, so factor and solve are `O(n·kl·(kl + ku))`.

use nalgebra::Matrix3;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn identity(n: usize, kl: usize, ku: usize) -> Self {
        let mut m = Self::zeros(n, kl, ku);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += value;
    }

    /// Add a 3×3 block at block position `(bi, bj)`.
    pub fn add_block(&mut self, bi: usize, bj: usize, block: &Matrix3<f64>, scale: f64) {
        for a in 0..3 {
            for b in 0..3 {
                self.add(3 * bi + a, 3 * bj + b, scale * block[(a, b)]);
            }
        }
    }

    /// Multiply every row `i` by `d[i]` (left multiplication by `diag(d)`).
    pub fn scale_rows(&mut self, d: &[f64]) {
        assert_eq!(d.len(), self.n);
        for (row, s) in self.data.chunks_mut(self.width).zip(d) {
            row.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n.saturating_sub(1));
            for j in lo..=hi {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// LU factorization with partial pivoting.
    pub fn factor(&self) -> Result<BandedLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.ku + kl;
        let mut a = self.clone();
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.data[a.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = a.data[a.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularSystem(k));
            }
            pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (sk, sp) = (a.slot(k, j), a.slot(p, j));
                    a.data.swap(sk, sp);
                }
            }
            let pivot = a.data[a.slot(k, k)];
            for i in k + 1..=last_row {
                let sik = a.slot(i, k);
                let m = a.data[sik] / pivot;
                a.data[sik] = m;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        let (sij, skj) = (a.slot(i, j), a.slot(k, j));
                        a.data[sij] -= m * a.data[skj];
                    }
                }
            }
        }
        Ok(BandedLu { lu: a, pivots })
    }
}

/// Factorization produced by [`BandedMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let a = &self.lu;
        let n = a.n;
        if b.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                actual: b.len(),
            });
        }
        // Replay the row swaps and eliminations in factorization order.
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + a.kl).min(n - 1) {
                b[i] -= a.data[a.slot(i, k)] * bk;
            }
        }
        let reach = a.ku + a.kl;
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= a.data[a.slot(k, j)] * b[j];
            }
            b[k] = s / a.data[a.slot(k, k)];
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// Direct solve of `matrix · x = rhs`.
pub fn banded_solve(matrix: &BandedMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != matrix.dim() {
        return Err(invalid(format!(
            "right-hand side has {} entries for a {}×{} system",
            rhs.len(),
            matrix.dim(),
            matrix.dim()
        )));
    }
    matrix.factor()?.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    /// Gaussian elimination with partial pivoting on a dense copy.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x][k].abs().partial_cmp(&a[y][k].abs()).unwrap())
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= m * a[k][j];
                }
                b[i] -= m * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
            x[k] = (b[k] - s) / a[k][k];
        }
        x
    }

    fn random_banded(n: usize, kl: usize, ku: usize, dominant: bool, seed: u64) -> BandedMatrix {
        let mut rng = RngStream::new(seed, 0);
        let mut m = BandedMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                m.set(i, j, rng.uniform(-1.0, 1.0));
            }
            if dominant {
                m.add(i, i, 2.0 * (kl + ku + 1) as f64);
            }
        }
        m
    }

    fn rel_err(x: &[f64], y: &[f64]) -> f64 {
        let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = y.iter().map(|b| b * b).sum::<f64>().sqrt();
        num / den
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let m = BandedMatrix::identity(7, 2, 2);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0, 9.0, -1.0];
        assert_eq!(banded_solve(&m, &b).unwrap(), b);
    }

    #[test]
    fn pentadiagonal_matches_dense_oracle() {
        for seed in 0..5 {
            let m = random_banded(40, 2, 2, true, seed);
            let mut rng = RngStream::new(seed, 1);
            let b: Vec<f64> = (0..40).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let x = banded_solve(&m, &b).unwrap();
            let oracle = dense_solve(m.to_dense(), b.clone());
            assert!(rel_err(&x, &oracle) < 1e-10);
            let r = m.matvec(&x);
            assert!(rel_err(&r, &b) < 1e-10);
        }
    }

    #[test]
    fn pivoting_handles_non_dominant_matrices() {
        // Zero leading diagonal forces a row swap.
        for seed in 10..15 {
            let mut m = random_banded(30, 8, 8, false, seed);
            m.set(0, 0, 0.0);
            let mut rng = RngStream::new(seed, 2);
            let b: Vec<f64> = (0..30).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let x = banded_solve(&m, &b).unwrap();
            let oracle = dense_solve(m.to_dense(), b.clone());
            assert!(rel_err(&x, &oracle) < 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = BandedMatrix::zeros(5, 1, 1);
        assert!(matches!(banded_solve(&m, &[1.0; 5]), Err(Error::SingularSystem(0))));
    }

    #[test]
    fn transpose_and_row_scaling() {
        let m = random_banded(9, 1, 2, false, 3);
        let t = m.transpose();
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(m.get(i, j), t.get(j, i));
            }
        }
        let mut s = m.clone();
        let d: Vec<f64> = (0..9).map(|i| i as f64 + 1.0).collect();
        s.scale_rows(&d);
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(s.get(i, j), d[i] * m.get(i, j));
            }
        }
    }
}
