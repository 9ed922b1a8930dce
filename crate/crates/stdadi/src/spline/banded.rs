//! Banded LU factorization with partial pivoting.
//!
//! LAPACK-style band storage: an `n x n` matrix with `kl` subdiagonals
//! and `ku` superdiagonals is stored column-major with `2*kl + ku + 1`
//! rows so row interchanges have room for fill-in.

use crate::scalar::Real;

pub(crate) struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    stride: usize,
    data: Vec<T>,
}

impl<T: Real> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let stride = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            stride,
            data: vec![T::zero(); stride * n],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        let band_row = self.kl + self.ku + i - j;
        j * self.stride + band_row
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let at = self.idx(i, j);
        self.data[at] = v;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> T {
        self.data[self.idx(i, j)]
    }

    /// In-place LU with partial pivoting. The effective upper bandwidth
    /// grows to `kl + ku` from row swaps.
    #[allow(clippy::needless_range_loop)]
    pub fn factor(mut self) -> Option<BandedLu<T>> {
        let n = self.n;
        let kl = self.kl;
        let kuw = self.kl + self.ku;
        let mut piv = vec![0usize; n];
        for j in 0..n {
            let row_max = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.get(j, j).abs();
            for i in (j + 1)..=row_max {
                let v = self.get(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[j] = p;
            if best == T::zero() {
                return None;
            }
            if p != j {
                let col_max = (j + kuw).min(n - 1);
                for c in j..=col_max {
                    let a = self.idx(j, c);
                    let b = self.idx(p, c);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(j, j);
            for i in (j + 1)..=row_max {
                let m = self.get(i, j) / pivot;
                self.set(i, j, m);
                let col_max = (j + kuw).min(n - 1);
                for c in (j + 1)..=col_max {
                    let upd = self.get(i, c) - m * self.get(j, c);
                    self.set(i, c, upd);
                }
            }
        }
        Some(BandedLu { mat: self, piv })
    }
}

pub(crate) struct BandedLu<T> {
    mat: BandedMatrix<T>,
    piv: Vec<usize>,
}

impl<T: Real> BandedLu<T> {
    pub fn solve_in_place(&self, rhs: &mut [T]) {
        let n = self.mat.n;
        debug_assert_eq!(rhs.len(), n);
        let kl = self.mat.kl;
        let kuw = self.mat.kl + self.mat.ku;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                rhs.swap(j, p);
            }
            let row_max = (j + kl).min(n - 1);
            for i in (j + 1)..=row_max {
                let m = self.mat.get(i, j);
                rhs[i] = rhs[i] - m * rhs[j];
            }
        }
        for j in (0..n).rev() {
            rhs[j] = rhs[j] / self.mat.get(j, j);
            let i_min = j.saturating_sub(kuw);
            for i in i_min..j {
                let u = self.mat.get(i, j);
                rhs[i] = rhs[i] - u * rhs[j];
            }
        }
    }
}
