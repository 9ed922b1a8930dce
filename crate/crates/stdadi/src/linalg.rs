//! Minimal fixed-size linear algebra over generic scalars.

use crate::scalar::{Real, Scalar};

/// 3-vector. Plain array so exact scalar types work too.
pub type Vec3<T> = [T; 3];

pub fn add3<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[0].clone() + b[0].clone(),
        a[1].clone() + b[1].clone(),
        a[2].clone() + b[2].clone(),
    ]
}

pub fn sub3<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[0].clone() - b[0].clone(),
        a[1].clone() - b[1].clone(),
        a[2].clone() - b[2].clone(),
    ]
}

pub fn scale3<T: Scalar>(a: &Vec3<T>, s: &T) -> Vec3<T> {
    [
        a[0].clone() * s.clone(),
        a[1].clone() * s.clone(),
        a[2].clone() * s.clone(),
    ]
}

pub fn dot3<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0].clone() * b[0].clone() + a[1].clone() * b[1].clone() + a[2].clone() * b[2].clone()
}

pub fn norm3<T: Real>(a: &Vec3<T>) -> T {
    dot3(a, a).sqrt()
}

/// Determinant of the 3x3 matrix with the given columns, by cofactor
/// expansion along the first row.
pub fn det3_cols<T: Scalar>(c0: &Vec3<T>, c1: &Vec3<T>, c2: &Vec3<T>) -> T {
    c0[0].clone() * (c1[1].clone() * c2[2].clone() - c1[2].clone() * c2[1].clone())
        - c1[0].clone() * (c0[1].clone() * c2[2].clone() - c0[2].clone() * c2[1].clone())
        + c2[0].clone() * (c0[1].clone() * c1[2].clone() - c0[2].clone() * c1[1].clone())
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Scalar> Mat3<T> {
    pub fn identity() -> Self {
        let o = T::one;
        let z = T::zero;
        Mat3([[o(), z(), z()], [z(), o(), z()], [z(), z(), o()]])
    }

    pub fn from_rows(r0: Vec3<T>, r1: Vec3<T>, r2: Vec3<T>) -> Self {
        Mat3([r0, r1, r2])
    }

    pub fn mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        [
            dot3(&self.0[0], v),
            dot3(&self.0[1], v),
            dot3(&self.0[2], v),
        ]
    }

    pub fn mul_mat(&self, other: &Mat3<T>) -> Mat3<T> {
        let mut out = Mat3::identity();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = T::zero();
                for (k, other_row) in other.0.iter().enumerate() {
                    acc = acc + self.0[i][k].clone() * other_row[j].clone();
                }
                out.0[i][j] = acc;
            }
        }
        out
    }

    pub fn scale(&self, s: &T) -> Mat3<T> {
        let mut out = self.clone();
        for row in out.0.iter_mut() {
            for e in row.iter_mut() {
                *e = e.clone() * s.clone();
            }
        }
        out
    }

    pub fn det(&self) -> T {
        let c0 = [
            self.0[0][0].clone(),
            self.0[1][0].clone(),
            self.0[2][0].clone(),
        ];
        let c1 = [
            self.0[0][1].clone(),
            self.0[1][1].clone(),
            self.0[2][1].clone(),
        ];
        let c2 = [
            self.0[0][2].clone(),
            self.0[1][2].clone(),
            self.0[2][2].clone(),
        ];
        det3_cols(&c0, &c1, &c2)
    }
}
