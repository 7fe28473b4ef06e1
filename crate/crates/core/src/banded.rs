//! Symmetric positive-definite banded matrices and their Cholesky factor.

use crate::scalar::Real;

/// Lower band of a symmetric matrix: `band[i * (bw + 1) + d]` holds `M[i][i - d]`.
#[derive(Debug, Clone)]
pub struct SymBanded<T> {
    n: usize,
    bw: usize,
    band: Vec<T>,
}

impl<T: Real> SymBanded<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            band: vec![T::zero(); n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `v` to `M[i][j]` (and its mirror). Requires `|i - j| <= bw`.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        let slot = &mut self.band[hi * (self.bw + 1) + d];
        *slot = *slot + v;
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.band {
            *v = *v * s;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bw {
            T::zero()
        } else {
            self.band[hi * (self.bw + 1) + d]
        }
    }

    /// Adds `scale * c c^T` where `c` has nonzeros `coeffs` starting at column `first`.
    pub fn add_outer(&mut self, first: usize, coeffs: &[T], scale: T) {
        for (a, &ca) in coeffs.iter().enumerate() {
            for (b, &cb) in coeffs.iter().enumerate().take(a + 1) {
                self.add(first + a, first + b, scale * ca * cb);
            }
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            out[i] = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
        out
    }

    /// Cholesky factorisation `M = L L^T`; `None` if `M` is not positive definite.
    pub fn cholesky(&self) -> Option<BandedCholesky<T>> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = vec![T::zero(); n * w];
        for i in 0..n {
            let j_lo = i.saturating_sub(bw);
            for j in j_lo..=i {
                let mut acc = self.band[i * w + (i - j)];
                let k_lo = i.saturating_sub(bw).max(j.saturating_sub(bw));
                for k in k_lo..j {
                    acc = acc - l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(acc > T::zero()) || !acc.is_finite() {
                        return None;
                    }
                    l[i * w] = acc.sqrt();
                } else {
                    l[i * w + (i - j)] = acc / l[j * w];
                }
            }
        }
        Some(BandedCholesky { n, bw, l })
    }
}

/// Lower-triangular banded Cholesky factor.
#[derive(Debug, Clone)]
pub struct BandedCholesky<T> {
    n: usize,
    bw: usize,
    l: Vec<T>,
}

impl<T: Real> BandedCholesky<T> {
    /// Solves `L L^T x = rhs` in place, O(n * bw).
    pub fn solve_in_place(&self, x: &mut [T]) {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        assert_eq!(x.len(), n);
        for i in 0..n {
            let mut acc = x[i];
            for k in i.saturating_sub(bw)..i {
                acc = acc - self.l[i * w + (i - k)] * x[k];
            }
            x[i] = acc / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in i + 1..(i + w).min(n) {
                acc = acc - self.l[k * w + (k - i)] * x[k];
            }
            x[i] = acc / self.l[i * w];
        }
    }
}
