//! Banded LU factorization with partial pivoting for complex matrices.
//!
//! Rows are stored as fixed-width windows covering columns
//! `[i - kl, i + ku + kl]`, which leaves room for the fill produced by row
//! interchanges. The lower factor is kept as the sequence of elementary
//! eliminations (LAPACK `gbtrf` style), so both `A x = b` and
//! `A^T x = b` / `A^H x = b` are solved from the same factors.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![Complex64::new(0.0, 0.0); n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.kl >= row && col <= row + self.ku + self.kl);
        row * self.width + (col + self.kl - row)
    }

    /// Adds `v` to entry `(row, col)`; the entry must lie inside the declared band.
    pub fn add(&mut self, row: usize, col: usize, v: Complex64) {
        assert!(
            col + self.kl >= row && col <= row + self.ku,
            "entry ({row}, {col}) outside band"
        );
        let s = self.slot(row, col);
        self.data[s] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        if col + self.kl < row || col > row + self.ku + self.kl {
            return Complex64::new(0.0, 0.0);
        }
        self.data[self.slot(row, col)]
    }

    /// Factorizes in place. `omega` is carried into the error for diagnostics only.
    pub fn factorize(mut self, omega: f64) -> Result<BandLu> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        let reach = kl + ku;
        let mut pivots = vec![0usize; n];
        let mut multipliers = vec![Complex64::new(0.0, 0.0); n * kl.max(1)];

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);

            let mut p = k;
            let mut best = -1.0;
            for r in k..=last_row {
                let v = self.data[r * w + (k + kl - r)].norm_sqr();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::Factorization { omega, column: k });
            }
            pivots[k] = p;
            if p != k {
                for c in k..=last_col {
                    let (a, b) = (k * w + (c + kl - k), p * w + (c + kl - p));
                    self.data.swap(a, b);
                }
            }

            let inv_pivot = 1.0 / self.data[k * w + kl];
            let (head, tail) = self.data.split_at_mut((k + 1) * w);
            let pivot_row = &head[k * w + kl + 1..k * w + kl + 1 + (last_col - k)];
            for r in k + 1..=last_row {
                let row = &mut tail[(r - k - 1) * w..(r - k) * w];
                let lead = k + kl - r;
                let l = row[lead] * inv_pivot;
                row[lead] = Complex64::new(0.0, 0.0);
                multipliers[k * kl + (r - k - 1)] = l;
                if l.re == 0.0 && l.im == 0.0 {
                    continue;
                }
                let dst = &mut row[lead + 1..lead + 1 + (last_col - k)];
                for (d, &u) in dst.iter_mut().zip(pivot_row) {
                    *d -= l * u;
                }
            }
        }

        Ok(BandLu { n, kl, ku, width: w, upper: self.data, multipliers, pivots })
    }
}

/// Reusable factors of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    upper: Vec<Complex64>,
    multipliers: Vec<Complex64>,
    pivots: Vec<usize>,
}

/// Which operator a solve applies the inverse of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Normal,
    Transpose,
    ConjTranspose,
}

impl BandLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn u(&self, row: usize, col: usize) -> Complex64 {
        self.upper[row * self.width + (col + self.kl - row)]
    }

    pub fn solve_in_place(&self, b: &mut [Complex64], op: Op) {
        assert_eq!(b.len(), self.n);
        match op {
            Op::Normal => self.solve_normal(b),
            Op::Transpose => self.solve_transposed(b, false),
            Op::ConjTranspose => self.solve_transposed(b, true),
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn solve_normal(&self, b: &mut [Complex64]) {
        let (n, kl) = (self.n, self.kl);
        let reach = self.kl + self.ku;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            let last = (k + kl).min(n - 1);
            for r in k + 1..=last {
                b[r] -= self.multipliers[k * kl + (r - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let last = (k + reach).min(n - 1);
            let row = &self.upper[k * self.width + kl..k * self.width + kl + 1 + (last - k)];
            let mut acc = b[k];
            for (u, x) in row[1..].iter().zip(&b[k + 1..=last]) {
                acc -= u * x;
            }
            b[k] = acc / row[0];
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn solve_transposed(&self, b: &mut [Complex64], conjugate: bool) {
        let (n, kl) = (self.n, self.kl);
        let reach = self.kl + self.ku;
        let c = |z: Complex64| if conjugate { z.conj() } else { z };
        // U^T y = b
        for k in 0..n {
            let yk = b[k] / c(self.u(k, k));
            b[k] = yk;
            let last = (k + reach).min(n - 1);
            for col in k + 1..=last {
                b[col] -= c(self.u(k, col)) * yk;
            }
        }
        // x = M_0^T ... M_{n-1}^T y
        for k in (0..n).rev() {
            let last = (k + kl).min(n - 1);
            let mut acc = b[k];
            for r in k + 1..=last {
                acc -= c(self.multipliers[k * kl + (r - k - 1)]) * b[r];
            }
            b[k] = acc;
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }
}
