//! B-spline basis evaluation with derivatives (Cox-de Boor recursion,
//! derivative form after Piegl & Tiller, alg. A2.3).

use crate::scalar::Real;

/// Knot span index `s` with `knots[s] <= x < knots[s+1]`, clamped to the
/// valid range `[degree, n_basis - 1]` so the right endpoint evaluates.
pub(crate) fn find_span<T: Real>(x: T, degree: usize, n_basis: usize, knots: &[T]) -> usize {
    if x >= knots[n_basis] {
        return n_basis - 1;
    }
    if x <= knots[degree] {
        return degree;
    }
    let mut lo = degree;
    let mut hi = n_basis;
    let mut mid = (lo + hi) / 2;
    while x < knots[mid] || x >= knots[mid + 1] {
        if x < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
        mid = (lo + hi) / 2;
    }
    mid
}

/// Nonzero basis functions and derivatives at `x`.
///
/// Returns `ders` with `ders[k][r]` = k-th derivative of basis function
/// `span - degree + r`, for `k` in `0..=n_ders` and `r` in `0..=degree`.
pub(crate) fn ders_basis_funs<T: Real>(
    span: usize,
    x: T,
    degree: usize,
    n_ders: usize,
    knots: &[T],
) -> Vec<Vec<T>> {
    let p = degree;
    let mut ndu = vec![vec![T::zero(); p + 1]; p + 1];
    let mut left = vec![T::zero(); p + 1];
    let mut right = vec![T::zero(); p + 1];
    ndu[0][0] = T::one();
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = T::zero();
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = vec![vec![T::zero(); p + 1]; n_ders + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }

    let mut a = [vec![T::zero(); p + 1], vec![T::zero(); p + 1]];
    for r in 0..=p {
        a[0].iter_mut().for_each(|v| *v = T::zero());
        a[1].iter_mut().for_each(|v| *v = T::zero());
        a[0][0] = T::one();
        let mut s1 = 0usize;
        let mut s2 = 1usize;
        for k in 1..=n_ders {
            let mut d = T::zero();
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                let v = a[s1][0] / ndu[pk + 1][rk as usize];
                a[s2][0] = v;
                d = v * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize {
                k - 1
            } else {
                p - r
            };
            for j in j1..=j2 {
                let v = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][(rk + j as isize) as usize];
                a[s2][j] = v;
                d = d + v * ndu[(rk + j as isize) as usize][pk];
            }
            if r as isize <= pk as isize {
                let v = -a[s1][k - 1] / ndu[pk + 1][r];
                a[s2][k] = v;
                d = d + v * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }

    // Multiply by degree!/(degree-k)!.
    let mut factor = T::from_usize(p).unwrap();
    for (k, row) in ders.iter_mut().enumerate().skip(1) {
        for d in row.iter_mut() {
            *d = *d * factor;
        }
        factor = factor * T::from_usize(p - k).unwrap();
    }
    ders
}
