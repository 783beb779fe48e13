//! Minimal fixed-size linear algebra for the planar setting.
//!
//! Everything in the control path is 2-dimensional, so a hand-rolled
//! `Vec2`/`Mat2` keeps the hot loops allocation-free and the results
//! bit-for-bit reproducible across runs.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::real::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self {
            x: T::zero(),
            y: T::zero(),
        }
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    /// Sum of absolute components.
    #[inline]
    pub fn norm_l1(self) -> T {
        self.x.abs() + self.y.abs()
    }

    /// Largest absolute component.
    #[inline]
    pub fn norm_inf(self) -> T {
        self.x.abs().max(self.y.abs())
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn to_array(self) -> [T; 2] {
        [self.x, self.y]
    }

    #[inline]
    pub fn from_array(a: [T; 2]) -> Self {
        Self { x: a[0], y: a[1] }
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Real> AddAssign for Vec2<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Real> Div<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s)
    }
}

/// 2x2 matrix, row major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Real> Mat2<T> {
    #[inline]
    pub fn new(m00: T, m01: T, m10: T, m11: T) -> Self {
        Self {
            m: [[m00, m01], [m10, m11]],
        }
    }

    #[inline]
    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    /// Counter-clockwise rotation by `angle`.
    #[inline]
    pub fn rotation(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, -s, s, c)
    }

    #[inline]
    pub fn diagonal(d0: T, d1: T) -> Self {
        Self::new(d0, T::zero(), T::zero(), d1)
    }

    #[inline]
    pub fn det(self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    #[inline]
    pub fn mul_vec(self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    /// `self^T * v`, i.e. the row vector `v^T * self` as a column.
    #[inline]
    pub fn tr_mul_vec(self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.m[0][0] * v.x + self.m[1][0] * v.y,
            self.m[0][1] * v.x + self.m[1][1] * v.y,
        )
    }

    #[inline]
    pub fn mul_mat(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] * o.m[0][0] + self.m[0][1] * o.m[1][0],
            self.m[0][0] * o.m[0][1] + self.m[0][1] * o.m[1][1],
            self.m[1][0] * o.m[0][0] + self.m[1][1] * o.m[1][0],
            self.m[1][0] * o.m[0][1] + self.m[1][1] * o.m[1][1],
        )
    }

    /// Inverse via the adjugate; `None` when the determinant vanishes.
    #[inline]
    pub fn try_inverse(self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        Some(Self::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }
}
