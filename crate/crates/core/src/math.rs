//! Fixed-size 3D linear algebra: vectors, 3×3 matrices, quaternion rotations,
//! polar decomposition and symmetric eigen-decomposition.
//!
//! Everything is generic over [`Real`] so the solver can run in single or
//! double precision while oracles and metrics stay in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Index, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{Float, FloatConst};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floating-point scalar used by the solver (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    fn of(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("degenerate configuration: det = {det:e} is below the tolerance")]
    Degenerate { det: f64 },
    #[error("rank-deficient matrix: eigenvalue {eigenvalue:e} along axis ({:.6}, {:.6}, {:.6})", axis[0], axis[1], axis[2])]
    RankDeficient { axis: [f64; 3], eigenvalue: f64 },
}

/// Determinant threshold (relative to the cube of the mean singular-value
/// scale) below which polar decomposition is refused.
pub const DEGENERATE_DET: f64 = 1e-12;
/// Smallest admissible eigenvalue of an SPD matrix relative to its trace.
pub const SPD_RELATIVE_EIGEN: f64 = 1e-10;
const POLAR_TOL: f64 = 1e-9;
const POLAR_MAX_ITERS: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    /// Unit vector in the same direction, or `None` for a zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(
            U::of(self.x.as_f64()),
            U::of(self.y.as_f64()),
            U::of(self.z.as_f64()),
        )
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn component_min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn component_max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn min_element(self) -> T {
        self.x.min(self.y).min(self.z)
    }
}

impl<T: Real> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl<T: Real> MulAssign<T> for Vec3<T> {
    #[inline]
    fn mul_assign(&mut self, s: T) {
        self.x *= s;
        self.y *= s;
        self.z *= s;
    }
}

impl<T: Real> DivAssign<T> for Vec3<T> {
    #[inline]
    fn div_assign(&mut self, s: T) {
        self.x /= s;
        self.y /= s;
        self.z /= s;
    }
}

impl<T: Real> Sum for Vec3<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    pub fn from_rows(m: [[T; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn zero() -> Self {
        Self {
            m: [[T::zero(); 3]; 3],
        }
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one(), T::one())
    }

    pub fn diag(a: T, b: T, c: T) -> Self {
        let z = T::zero();
        Self {
            m: [[a, z, z], [z, b, z], [z, z, c]],
        }
    }

    pub fn from_cols(c0: Vec3<T>, c1: Vec3<T>, c2: Vec3<T>) -> Self {
        Self {
            m: [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]],
        }
    }

    /// `a bᵀ`
    #[inline]
    pub fn outer(a: Vec3<T>, b: Vec3<T>) -> Self {
        Self {
            m: [
                [a.x * b.x, a.x * b.y, a.x * b.z],
                [a.y * b.x, a.y * b.y, a.y * b.z],
                [a.z * b.x, a.z * b.y, a.z * b.z],
            ],
        }
    }

    pub fn col(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn row(&self, i: usize) -> Vec3<T> {
        Vec3::from_array(self.m[i])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn det(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn frobenius(&self) -> T {
        self.m
            .iter()
            .flat_map(|r| r.iter())
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }

    /// Transposed cofactor matrix; `A · adj(A) = det(A) I`.
    pub fn adjugate(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [
                    m[1][1] * m[2][2] - m[1][2] * m[2][1],
                    m[0][2] * m[2][1] - m[0][1] * m[2][2],
                    m[0][1] * m[1][2] - m[0][2] * m[1][1],
                ],
                [
                    m[1][2] * m[2][0] - m[1][0] * m[2][2],
                    m[0][0] * m[2][2] - m[0][2] * m[2][0],
                    m[0][2] * m[1][0] - m[0][0] * m[1][2],
                ],
                [
                    m[1][0] * m[2][1] - m[1][1] * m[2][0],
                    m[0][1] * m[2][0] - m[0][0] * m[2][1],
                    m[0][0] * m[1][1] - m[0][1] * m[1][0],
                ],
            ],
        }
    }

    /// General inverse via the adjugate; `None` when the determinant is zero.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        Some(self.adjugate() * (T::one() / d))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, o: &Self) -> T {
        let mut d = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        d
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (self.m[0][1] - self.m[1][0]).abs() <= tol
            && (self.m[0][2] - self.m[2][0]).abs() <= tol
            && (self.m[1][2] - self.m[2][1]).abs() <= tol
    }

    /// True when symmetric and no eigenvalue is below `-tol · trace`.
    pub fn is_psd(&self, tol: T) -> bool {
        if !self.is_symmetric(tol.max(T::epsilon()) * self.frobenius().max(T::one())) {
            return false;
        }
        let (vals, _) = sym_eigen(self);
        let floor = -tol * self.trace().abs().max(T::min_positive_value());
        vals.iter().all(|&l| l >= floor)
    }

    pub fn symmetrized(&self) -> Self {
        (*self + self.transpose()) * T::of(0.5)
    }

    pub fn cast<U: Real>(&self) -> Mat3<U> {
        let mut out = Mat3::<U>::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = U::of(self.m[i][j].as_f64());
            }
        }
        out
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] += o.m[i][j];
            }
        }
        r
    }
}

impl<T: Real> AddAssign for Mat3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += o.m[i][j];
            }
        }
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] -= o.m[i][j];
            }
        }
        r
    }
}

impl<T: Real> Mul<T> for Mat3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        let mut r = self;
        for row in r.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        r
    }
}

impl<T: Real> Mul<Vec3<T>> for Mat3<T> {
    type Output = Vec3<T>;
    #[inline]
    fn mul(self, v: Vec3<T>) -> Vec3<T> {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut r = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] =
                    self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j] + self.m[i][2] * o.m[2][j];
            }
        }
        r
    }
}

/// Unit quaternion `(w, x, y, z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Default for Rotation<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        Self {
            w: T::one(),
            x: T::zero(),
            y: T::zero(),
            z: T::zero(),
        }
    }

    /// Builds from raw components and normalizes.
    pub fn from_wxyz(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }.normalized()
    }

    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let a = axis.normalized().unwrap_or_else(Vec3::unit_z);
        let h = angle * T::of(0.5);
        let s = h.sin();
        Self {
            w: h.cos(),
            x: a.x * s,
            y: a.y * s,
            z: a.z * s,
        }
    }

    pub fn from_rotation_z(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_z(), angle)
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Self {
                w: self.w / n,
                x: self.x / n,
                y: self.y / n,
                z: self.z / n,
            }
        } else {
            Self::identity()
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn vector(&self) -> Vec3<T> {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        let q = self.vector();
        let t = q.cross(v) * T::of(2.0);
        v + t * self.w + q.cross(t)
    }

    pub fn to_matrix(&self) -> Mat3<T> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let one = T::one();
        let two = T::of(2.0);
        Mat3::from_rows([
            [
                one - two * (y * y + z * z),
                two * (x * y - w * z),
                two * (x * z + w * y),
            ],
            [
                two * (x * y + w * z),
                one - two * (x * x + z * z),
                two * (y * z - w * x),
            ],
            [
                two * (x * z - w * y),
                two * (y * z + w * x),
                one - two * (x * x + y * y),
            ],
        ])
    }

    /// Shepperd's method; `r` must be a proper rotation matrix.
    pub fn from_matrix(r: &Mat3<T>) -> Self {
        let m = &r.m;
        let one = T::one();
        let quarter = T::of(0.25);
        let tr = r.trace();
        let q = if tr > T::zero() {
            let s = (tr + one).sqrt() * T::of(2.0);
            Self {
                w: quarter * s,
                x: (m[2][1] - m[1][2]) / s,
                y: (m[0][2] - m[2][0]) / s,
                z: (m[1][0] - m[0][1]) / s,
            }
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (one + m[0][0] - m[1][1] - m[2][2]).sqrt() * T::of(2.0);
            Self {
                w: (m[2][1] - m[1][2]) / s,
                x: quarter * s,
                y: (m[0][1] + m[1][0]) / s,
                z: (m[0][2] + m[2][0]) / s,
            }
        } else if m[1][1] > m[2][2] {
            let s = (one + m[1][1] - m[0][0] - m[2][2]).sqrt() * T::of(2.0);
            Self {
                w: (m[0][2] - m[2][0]) / s,
                x: (m[0][1] + m[1][0]) / s,
                y: quarter * s,
                z: (m[1][2] + m[2][1]) / s,
            }
        } else {
            let s = (one + m[2][2] - m[0][0] - m[1][1]).sqrt() * T::of(2.0);
            Self {
                w: (m[1][0] - m[0][1]) / s,
                x: (m[0][2] + m[2][0]) / s,
                y: (m[1][2] + m[2][1]) / s,
                z: quarter * s,
            }
        };
        q.normalized()
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn angle(&self) -> T {
        let v = self.vector().norm();
        T::of(2.0) * v.atan2(self.w.abs())
    }

    /// Signed angle of the twist component about `axis` (swing–twist split),
    /// in `(-π, π]`.
    pub fn twist_angle(&self, axis: Vec3<T>) -> T {
        let a = axis.normalized().unwrap_or_else(Vec3::unit_z);
        let p = self.vector().dot(a);
        let mut angle = T::of(2.0) * p.atan2(self.w);
        let pi = T::PI();
        if angle > pi {
            angle -= T::of(2.0) * pi;
        } else if angle <= -pi {
            angle += T::of(2.0) * pi;
        }
        angle
    }

    pub fn cast<U: Real>(&self) -> Rotation<U> {
        Rotation {
            w: U::of(self.w.as_f64()),
            x: U::of(self.x.as_f64()),
            y: U::of(self.y.as_f64()),
            z: U::of(self.z.as_f64()),
        }
    }
}

impl<T: Real> Mul for Rotation<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }
}

fn polar_tolerance<T: Real>() -> T {
    T::of(POLAR_TOL).max(T::epsilon() * T::of(16.0))
}

/// Rotation factor of the polar decomposition `A = R S`, as a matrix.
///
/// Scaled Newton iteration `X ← ½(γX + (γX)⁻ᵀ)` with Frobenius-norm scaling,
/// switched off once the iterate is close to orthogonal.
pub fn polar_rotation<T: Real>(a: &Mat3<T>) -> Result<Mat3<T>, MathError> {
    let scale = a.frobenius() / T::of(3.0).sqrt();
    let det = a.det();
    if !(scale > T::zero()) || !det.is_finite() {
        return Err(MathError::Degenerate { det: det.as_f64() });
    }
    let rel_det = det / (scale * scale * scale);
    if rel_det.as_f64() <= DEGENERATE_DET {
        return Err(MathError::Degenerate { det: det.as_f64() });
    }

    let tol = polar_tolerance::<T>();
    let half = T::of(0.5);
    let mut x = *a * (T::one() / scale);
    let mut scaling = true;
    for _ in 0..POLAR_MAX_ITERS {
        let d = x.det();
        if !(d > T::zero()) {
            return Err(MathError::Degenerate { det: det.as_f64() });
        }
        // (X⁻¹)ᵀ = adj(X)ᵀ / det
        let inv_t = x.adjugate().transpose() * (T::one() / d);
        let gamma = if scaling {
            (inv_t.frobenius() / x.frobenius()).sqrt()
        } else {
            T::one()
        };
        let next = (x * gamma + inv_t * (T::one() / gamma)) * half;
        let change = (next - x).frobenius();
        x = next;
        if change <= T::of(1e-2) {
            scaling = false;
        }
        if change <= tol * x.frobenius() {
            break;
        }
    }
    Ok(x)
}

/// Polar decomposition `A = R·S` with `R` a proper rotation and `S` symmetric
/// positive definite. Requires `det(A) > 0`.
pub fn polar_decompose<T: Real>(a: &Mat3<T>) -> Result<(Rotation<T>, Mat3<T>), MathError> {
    let r = polar_rotation(a)?;
    let s = (r.transpose() * *a).symmetrized();
    Ok((Rotation::from_matrix(&r), s))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order and the eigenvectors as matrix
/// columns in the same order.
pub fn sym_eigen<T: Real>(m: &Mat3<T>) -> ([T; 3], Mat3<T>) {
    let mut a = m.symmetrized().m;
    let mut v = Mat3::<T>::identity().m;
    let scale = m.frobenius().max(T::min_positive_value());
    for _sweep in 0..50 {
        let off = (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]).sqrt();
        if off <= T::epsilon() * scale * T::of(0.1) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (T::of(2.0) * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vkp = row[p];
                let vkq = row[q];
                row[p] = c * vkp - s * vkq;
                row[q] = s * vkp + c * vkq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| {
        a[i][i]
            .partial_cmp(&a[j][j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = [
        a[order[0]][order[0]],
        a[order[1]][order[1]],
        a[order[2]][order[2]],
    ];
    let vm = Mat3 { m: v };
    let vecs = Mat3::from_cols(vm.col(order[0]), vm.col(order[1]), vm.col(order[2]));
    (vals, vecs)
}

/// Inverse of a symmetric positive-definite matrix.
///
/// Fails with [`MathError::RankDeficient`] when the smallest eigenvalue is
/// below `1e-10 · trace(M)`, reporting the corresponding eigenvector.
pub fn invert_spd<T: Real>(m: &Mat3<T>) -> Result<Mat3<T>, MathError> {
    let (vals, vecs) = sym_eigen(m);
    let floor = T::of(SPD_RELATIVE_EIGEN) * m.trace();
    if !(vals[0] > floor) || !(vals[0] > T::zero()) {
        let axis = vecs.col(0);
        return Err(MathError::RankDeficient {
            axis: [axis.x.as_f64(), axis.y.as_f64(), axis.z.as_f64()],
            eigenvalue: vals[0].as_f64(),
        });
    }
    let mut inv = Mat3::zero();
    for k in 0..3 {
        let e = vecs.col(k);
        inv += Mat3::outer(e, e) * (T::one() / vals[k]);
    }
    Ok(inv)
}

/// Geodesic angle between two orientations in degrees, in `[0, 180]`.
pub fn geodesic_angle<T: Real>(r1: &Rotation<T>, r2: &Rotation<T>) -> f64 {
    let rel = r1.inverse() * *r2;
    rel.cast::<f64>().normalized().angle().to_degrees()
}

/// Accumulates the twist angle about a fixed axis across a sequence of
/// orientations, unwrapping jumps across ±180°. Successive samples must differ
/// by less than half a revolution about the axis.
#[derive(Debug, Clone)]
pub struct AngleTracker {
    axis: Vec3<f64>,
    last_wrapped: Option<f64>,
    total: f64,
}

impl AngleTracker {
    pub fn new(axis: Vec3<f64>) -> Self {
        Self {
            axis,
            last_wrapped: None,
            total: 0.0,
        }
    }

    /// Feeds the next orientation and returns the accumulated angle (radians).
    pub fn update<T: Real>(&mut self, r: &Rotation<T>) -> f64 {
        let wrapped = r.cast::<f64>().twist_angle(self.axis);
        self.push_wrapped(wrapped)
    }

    /// Feeds a wrapped angle in radians and returns the accumulated angle.
    pub fn push_wrapped(&mut self, wrapped: f64) -> f64 {
        match self.last_wrapped {
            None => self.total = wrapped,
            Some(prev) => {
                let mut d = wrapped - prev;
                let tau = std::f64::consts::TAU;
                d -= tau * (d / tau).round();
                self.total += d;
            }
        }
        self.last_wrapped = Some(wrapped);
        self.total
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

/// Absolute difference of two accumulated (unwrapped) angles in degrees.
pub fn unwrapped_angle_deg(accumulated_a: f64, accumulated_b: f64) -> f64 {
    (accumulated_b - accumulated_a).abs().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rz(deg: f64) -> Rotation<f64> {
        Rotation::from_rotation_z(deg.to_radians())
    }

    fn mat_close(a: &Mat3<f64>, b: &Mat3<f64>, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn polar_identity_and_scaling() {
        let (r, s) = polar_decompose(&Mat3::<f64>::identity()).unwrap();
        assert!(mat_close(&r.to_matrix(), &Mat3::identity(), 1e-12));
        assert!(mat_close(&s, &Mat3::identity(), 1e-12));

        let (r, s) = polar_decompose(&(Mat3::<f64>::identity() * 2.0)).unwrap();
        assert!(mat_close(&r.to_matrix(), &Mat3::identity(), 1e-12));
        assert!(mat_close(&s, &(Mat3::identity() * 2.0), 1e-12));
    }

    #[test]
    fn polar_recovers_known_rotation() {
        let r0 = rz(30.0).to_matrix();
        let a = r0 * Mat3::diag(2.0, 1.0, 1.0);
        let (r, s) = polar_decompose(&a).unwrap();
        assert!(mat_close(&r.to_matrix(), &r0, 1e-9));
        assert!(mat_close(&s, &Mat3::diag(2.0, 1.0, 1.0), 1e-9));
    }

    #[test]
    fn polar_rejects_reflection_and_singular() {
        assert!(matches!(
            polar_decompose(&Mat3::<f64>::diag(1.0, 1.0, -1.0)),
            Err(MathError::Degenerate { .. })
        ));
        assert!(matches!(
            polar_decompose(&Mat3::<f64>::diag(1.0, 1.0, 0.0)),
            Err(MathError::Degenerate { .. })
        ));
        assert!(polar_decompose(&Mat3::<f64>::zero()).is_err());
    }

    #[test]
    fn polar_single_precision() {
        let r0 = Rotation::<f32>::from_axis_angle(Vec3::new(1.0, 2.0, 0.5), 1.1);
        let a = r0.to_matrix() * Mat3::diag(0.003, 0.002, 0.004);
        let r = polar_rotation(&a).unwrap();
        assert!(r.max_abs_diff(&r0.to_matrix()) < 1e-5);
    }

    #[test]
    fn invert_spd_examples() {
        let inv = invert_spd(&Mat3::<f64>::diag(2.0, 4.0, 8.0)).unwrap();
        assert!(mat_close(&inv, &Mat3::diag(0.5, 0.25, 0.125), 1e-12));
        let inv = invert_spd(&Mat3::<f64>::identity()).unwrap();
        assert!(mat_close(&inv, &Mat3::identity(), 1e-12));
    }

    #[test]
    fn invert_spd_collinear_pair_is_rank_deficient_on_x() {
        // Σ m(|r|²I − rrᵀ) for unit masses at ±x
        let mut m = Mat3::<f64>::zero();
        for r in [Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)] {
            m += Mat3::identity() * r.norm_sq() - Mat3::outer(r, r);
        }
        assert!(mat_close(&m, &Mat3::diag(0.0, 2.0, 2.0), 0.0));
        match invert_spd(&m) {
            Err(MathError::RankDeficient { axis, eigenvalue }) => {
                assert!(axis[0].abs() > 1.0 - 1e-12, "axis {axis:?}");
                assert_eq!(eigenvalue, 0.0);
            }
            other => panic!("expected rank-deficient error, got {other:?}"),
        }
    }

    #[test]
    fn geodesic_examples() {
        let id = Rotation::<f64>::identity();
        assert!(geodesic_angle(&id, &id).abs() < 1e-12);
        assert!((geodesic_angle(&id, &rz(90.0)) - 90.0).abs() < 1e-9);
        assert!(geodesic_angle(&rz(10.0), &rz(370.0)) < 1e-6);
        assert!((geodesic_angle(&id, &rz(180.0)) - 180.0).abs() < 1e-9);
    }

    #[test]
    fn tracker_unwraps_full_revolution() {
        let mut a = AngleTracker::new(Vec3::unit_z());
        a.update(&rz(10.0));
        let mut b = AngleTracker::new(Vec3::unit_z());
        let mut acc = 0.0;
        for k in 0..=36 {
            acc = b.update(&rz(10.0 + 10.0 * k as f64));
        }
        assert!((acc.to_degrees() - 370.0).abs() < 1e-9);
        assert!((unwrapped_angle_deg(a.total(), acc) - 360.0).abs() < 1e-9);
    }

    #[test]
    fn sym_eigen_reconstructs() {
        let m = Mat3::from_rows([[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]]);
        let (vals, vecs) = sym_eigen(&m);
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
        let mut rec = Mat3::zero();
        for k in 0..3 {
            rec += Mat3::outer(vecs.col(k), vecs.col(k)) * vals[k];
        }
        assert!(mat_close(&rec, &m, 1e-12));
    }

    fn arb_rotation() -> impl Strategy<Value = Rotation<f64>> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("non-zero", |(w, x, y, z)| {
                w * w + x * x + y * y + z * z > 1e-3
            })
            .prop_map(|(w, x, y, z)| Rotation::from_wxyz(w, x, y, z))
    }

    proptest! {
        #[test]
        fn polar_reconstruction(q in arb_rotation(),
                                s in prop::array::uniform6(-0.3..0.3f64),
                                d in prop::array::uniform3(0.5..3.0f64)) {
            // well-conditioned SPD factor: diag + small symmetric perturbation
            let sym = Mat3::from_rows([
                [d[0] + s[0], s[3], s[4]],
                [s[3], d[1] + s[1], s[5]],
                [s[4], s[5], d[2] + s[2]],
            ]);
            prop_assume!(sym.is_psd(0.0) && sym_eigen(&sym).0[0] > 0.1);
            let a = q.to_matrix() * sym;
            let (r, sf) = polar_decompose(&a).unwrap();
            let rm = r.to_matrix();
            prop_assert!((a - rm * sf).frobenius() <= 1e-5 * a.frobenius());
            prop_assert!((rm.transpose() * rm).max_abs_diff(&Mat3::identity()) <= 1e-6);
            prop_assert!(rm.max_abs_diff(&q.to_matrix()) <= 1e-6);
        }

        #[test]
        fn spd_inverse(q in arb_rotation(), logs in prop::array::uniform3(-3.0..3.0f64)) {
            // condition number ≤ 1e6
            let d = Mat3::diag(10f64.powf(logs[0]), 10f64.powf(logs[1]), 10f64.powf(logs[2]));
            let r = q.to_matrix();
            let m = r * d * r.transpose();
            let inv = invert_spd(&m).unwrap();
            prop_assert!((m * inv).max_abs_diff(&Mat3::identity()) <= 1e-5);
        }

        #[test]
        fn quaternion_matrix_round_trip(q in arb_rotation()) {
            let back = Rotation::from_matrix(&q.to_matrix());
            prop_assert!(geodesic_angle(&q, &back) <= 1e-6_f64.to_degrees());
            prop_assert!((back.to_matrix().det() - 1.0).abs() <= 1e-5);
            prop_assert!((back.norm() - 1.0).abs() <= 1e-6);
        }
    }
}
