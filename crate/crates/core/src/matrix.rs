//! Small dense vectors and matrices in dimensions 2 and 3.
//!
//! Everything the lab needs is closed form at this size: determinants and
//! inverses via adjugates, operator norms via the exact largest singular
//! value (2x2) and via the symmetric eigenvalues of `m^T m` (3x3).
//! Matrices serialize as flat row-major float arrays.

use serde::de::{Error as DeError, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2(pub [f64; 2]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2([x, y])
    }

    pub fn dot(self, rhs: Vec2) -> f64 {
        self.0[0] * rhs.0[0] + self.0[1] * rhs.0[1]
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2([self.0[0] / n, self.0[1] / n])
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2([self.0[0] * s, self.0[1] * s])
    }

    /// 2D cross product (the z-component of the wedge).
    pub fn cross(self, rhs: Vec2) -> f64 {
        self.0[0] * rhs.0[1] - self.0[1] * rhs.0[0]
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1]])
    }
}

impl Vec3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn x(self) -> f64 {
        self.0[0]
    }

    pub fn y(self) -> f64 {
        self.0[1]
    }

    pub fn z(self) -> f64 {
        self.0[2]
    }

    pub fn dot(self, rhs: Vec3) -> f64 {
        self.0[0] * rhs.0[0] + self.0[1] * rhs.0[1] + self.0[2] * rhs.0[2]
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        Vec3([self.0[0] / n, self.0[1] / n, self.0[2] / n])
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn cross(self, rhs: Vec3) -> Vec3 {
        Vec3([
            self.0[1] * rhs.0[2] - self.0[2] * rhs.0[1],
            self.0[2] * rhs.0[0] - self.0[0] * rhs.0[2],
            self.0[0] * rhs.0[1] - self.0[1] * rhs.0[0],
        ])
    }

    pub fn basis(k: usize) -> Vec3 {
        let mut v = [0.0; 3];
        v[k] = 1.0;
        Vec3(v)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
        ])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
        ])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self.scale(-1.0)
    }
}

impl Mat2 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        Mat2([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2([[a, 0.0], [0.0, d]])
    }

    /// Counterclockwise rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2([[c, -s], [s, c]])
    }

    pub fn det(self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn transpose(self) -> Mat2 {
        Mat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    pub fn inverse(self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2([
            [self.0[1][1] / d, -self.0[0][1] / d],
            [-self.0[1][0] / d, self.0[0][0] / d],
        ]))
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2([
            self.0[0][0] * v.0[0] + self.0[0][1] * v.0[1],
            self.0[1][0] * v.0[0] + self.0[1][1] * v.0[1],
        ])
    }

    pub fn row(self, i: usize) -> Vec2 {
        Vec2(self.0[i])
    }

    pub fn col(self, j: usize) -> Vec2 {
        Vec2([self.0[0][j], self.0[1][j]])
    }

    /// Exact largest singular value.
    pub fn op_norm(self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        let s1 = ((a + d) * (a + d) + (b - c) * (b - c)).sqrt();
        let s2 = ((a - d) * (a - d) + (b + c) * (b + c)).sqrt();
        (s1 + s2) / 2.0
    }

    pub fn frobenius(self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_entry(self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Orthogonal matrix sending `e1` to the unit vector `v` (a Householder
    /// reflection, or the identity when `v` is already `e1`).
    pub fn householder_to(v: Vec2) -> Mat2 {
        let w = Vec2([v.0[0] - 1.0, v.0[1]]);
        let n2 = w.dot(w);
        if n2 < 1e-30 {
            return Mat2::identity();
        }
        let k = 2.0 / n2;
        Mat2([
            [1.0 - k * w.0[0] * w.0[0], -k * w.0[0] * w.0[1]],
            [-k * w.0[1] * w.0[0], 1.0 - k * w.0[1] * w.0[1]],
        ])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        Mat2(out)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.0[i][j] - rhs.0[i][j];
            }
        }
        Mat2(out)
    }
}

impl Mat3 {
    pub fn from_rows(r0: [f64; 3], r1: [f64; 3], r2: [f64; 3]) -> Self {
        Mat3([r0, r1, r2])
    }

    pub fn identity() -> Self {
        Mat3::diag(1.0, 1.0, 1.0)
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn det(self) -> f64 {
        let m = self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn trace(self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Sum of the principal 2x2 minors (second invariant of the
    /// characteristic polynomial).
    pub fn second_invariant(self) -> f64 {
        let m = self.0;
        (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
            + (m[0][0] * m[1][1] - m[0][1] * m[1][0])
    }

    pub fn transpose(self) -> Mat3 {
        let m = self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn inverse(self) -> Option<Mat3> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = self.0;
        let cof = |r1: usize, r2: usize, c1: usize, c2: usize| {
            m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
        };
        // adjugate / det
        Some(Mat3([
            [
                cof(1, 2, 1, 2) / d,
                -cof(0, 2, 1, 2) / d,
                cof(0, 1, 1, 2) / d,
            ],
            [
                -cof(1, 2, 0, 2) / d,
                cof(0, 2, 0, 2) / d,
                -cof(0, 1, 0, 2) / d,
            ],
            [
                cof(1, 2, 0, 1) / d,
                -cof(0, 2, 0, 1) / d,
                cof(0, 1, 0, 1) / d,
            ],
        ]))
    }

    pub fn apply(self, v: Vec3) -> Vec3 {
        let m = self.0;
        Vec3([
            m[0][0] * v.0[0] + m[0][1] * v.0[1] + m[0][2] * v.0[2],
            m[1][0] * v.0[0] + m[1][1] * v.0[1] + m[1][2] * v.0[2],
            m[2][0] * v.0[0] + m[2][1] * v.0[1] + m[2][2] * v.0[2],
        ])
    }

    pub fn col(self, j: usize) -> Vec3 {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    /// Largest singular value, as the root of the top eigenvalue of `m^T m`.
    pub fn op_norm(self) -> f64 {
        let g = self.transpose() * self;
        let eigs = sym3_eigenvalues(g);
        eigs[2].max(0.0).sqrt()
    }

    pub fn frobenius(self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_entry(self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn row_max_abs(self, i: usize) -> f64 {
        self.0[i].iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.0[i][0] * rhs.0[0][j]
                    + self.0[i][1] * rhs.0[1][j]
                    + self.0[i][2] * rhs.0[2][j];
            }
        }
        Mat3(out)
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.0[i][j] - rhs.0[i][j];
            }
        }
        Mat3(out)
    }
}

/// Eigenvalues of a symmetric 3x3 matrix in ascending order, by the
/// trigonometric closed form (Kopp's analytic method).
pub fn sym3_eigenvalues(m: Mat3) -> [f64; 3] {
    let a = m.0;
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if p1 == 0.0 {
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let q = m.trace() / 3.0;
    let p2 = (a[0][0] - q) * (a[0][0] - q)
        + (a[1][1] - q) * (a[1][1] - q)
        + (a[2][2] - q) * (a[2][2] - q)
        + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let r = (Mat3(b).det() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let mid = 3.0 * q - hi - lo;
    [lo, mid, hi]
}

// Flat row-major serialization keeps matrix JSON compact: a 2x2 matrix is
// [a, b, c, d] and a 3x3 matrix is its nine entries row by row.
macro_rules! flat_serde {
    ($ty:ident, $dim:expr, $len:expr) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut seq = serializer.serialize_seq(Some($len))?;
                for row in &self.0 {
                    for x in row {
                        seq.serialize_element(x)?;
                    }
                }
                seq.end()
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                struct V;
                impl<'de> Visitor<'de> for V {
                    type Value = $ty;
                    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                        write!(f, "a flat row-major array of {} floats", $len)
                    }
                    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<$ty, A::Error> {
                        let mut out = [[0.0; $dim]; $dim];
                        for i in 0..$dim {
                            for j in 0..$dim {
                                out[i][j] = seq
                                    .next_element::<f64>()?
                                    .ok_or_else(|| A::Error::invalid_length(i * $dim + j, &self))?;
                            }
                        }
                        if seq.next_element::<f64>()?.is_some() {
                            return Err(A::Error::custom(concat!(
                                "too many entries for ",
                                stringify!($ty)
                            )));
                        }
                        Ok($ty(out))
                    }
                }
                deserializer.deserialize_seq(V)
            }
        }
    };
}

flat_serde!(Mat2, 2, 4);
flat_serde!(Mat3, 3, 9);
