//! Small fixed-size vector types and 2D segment predicates.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::{wrap_angle, Real};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
#[serde(bound = "T: Real")]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
#[serde(bound = "T: Real")]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 2]> for Vec2<T> {
    fn from([x, y]: [T; 2]) -> Self {
        Self { x, y }
    }
}

impl<T> From<Vec2<T>> for [T; 2] {
    fn from(v: Vec2<T>) -> Self {
        [v.x, v.y]
    }
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Self { x, y, z }
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Real> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    pub fn perp_dot(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > T::zero() && n.is_finite()).then(|| self / n)
    }

    /// Counterclockwise rotation by `angle` radians.
    pub fn rotated(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Polar angle in `(-π, π]`.
    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y))
    }

    pub fn max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y))
    }
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
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

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > T::zero() && n.is_finite()).then(|| self / n)
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component of `self` orthogonal to the unit vector `axis`.
    pub fn reject(self, axis: Self) -> Self {
        self - axis * self.dot(axis)
    }

    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }
}

macro_rules! impl_vec_ops {
    ($v:ident { $($f:ident),+ }) => {
        impl<T: Real> Add for $v<T> {
            type Output = Self;
            fn add(self, o: Self) -> Self {
                Self { $($f: self.$f + o.$f),+ }
            }
        }

        impl<T: Real> AddAssign for $v<T> {
            fn add_assign(&mut self, o: Self) {
                $(self.$f = self.$f + o.$f;)+
            }
        }

        impl<T: Real> Sub for $v<T> {
            type Output = Self;
            fn sub(self, o: Self) -> Self {
                Self { $($f: self.$f - o.$f),+ }
            }
        }

        impl<T: Real> Mul<T> for $v<T> {
            type Output = Self;
            fn mul(self, s: T) -> Self {
                Self { $($f: self.$f * s),+ }
            }
        }

        impl<T: Real> Div<T> for $v<T> {
            type Output = Self;
            fn div(self, s: T) -> Self {
                Self { $($f: self.$f / s),+ }
            }
        }

        impl<T: Real> Neg for $v<T> {
            type Output = Self;
            fn neg(self) -> Self {
                Self { $($f: -self.$f),+ }
            }
        }
    };
}

impl_vec_ops!(Vec2 { x, y });
impl_vec_ops!(Vec3 { x, y, z });

/// Counterclockwise angle in `[0, 2π)` that takes direction `from` onto
/// direction `to`. Returns `None` if either vector is (near) zero.
pub fn ccw_angle<T: Real>(from: Vec2<T>, to: Vec2<T>, eps: T) -> Option<T> {
    if from.norm() <= eps || to.norm() <= eps {
        return None;
    }
    let a = from.perp_dot(to).atan2(from.dot(to));
    Some(wrap_angle(a))
}

/// Unsigned angle in `[0, π]` between two 3D directions.
pub fn angle_between<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Option<T> {
    let an = a.normalized()?;
    let bn = b.normalized()?;
    Some(an.cross(bn).norm().atan2(an.dot(bn)))
}

fn orient<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> T {
    (b - a).perp_dot(c - a)
}

fn on_segment<T: Real>(a: Vec2<T>, b: Vec2<T>, p: Vec2<T>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// True if closed segments `ab` and `cd` share at least one point.
pub fn segments_intersect<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, d: Vec2<T>) -> bool {
    let z = T::zero();
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    (d1 == z && on_segment(c, d, a))
        || (d2 == z && on_segment(c, d, b))
        || (d3 == z && on_segment(a, b, c))
        || (d4 == z && on_segment(a, b, d))
}

/// Distance from `p` to the closed segment `ab`.
pub fn point_segment_distance<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == T::zero() {
        return (p - a).norm();
    }
    let t = ((p - a).dot(ab) / len_sq).max(T::zero()).min(T::one());
    (p - (a + ab * t)).norm()
}

/// Minimum distance between closed segments `ab` and `cd`.
pub fn segment_distance<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, d: Vec2<T>) -> T {
    if segments_intersect(a, b, c, d) {
        return T::zero();
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn v(x: f64, y: f64) -> Vec2<f64> {
        Vec2::new(x, y)
    }

    #[test]
    fn ccw_angle_quadrants() {
        let e = 1e-12;
        assert!((ccw_angle(v(1.0, 0.0), v(0.0, 1.0), e).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((ccw_angle(v(1.0, 0.0), v(0.0, -1.0), e).unwrap() - 3.0 * FRAC_PI_2).abs() < 1e-15);
        assert!((ccw_angle(v(1.0, 0.0), v(-1.0, 0.0), e).unwrap() - PI).abs() < 1e-15);
        assert_eq!(ccw_angle(v(0.0, 0.0), v(1.0, 0.0), e), None);
    }

    #[test]
    fn crossing_and_touching_segments() {
        assert!(segments_intersect(v(0.0, 0.0), v(2.0, 2.0), v(0.0, 2.0), v(2.0, 0.0)));
        assert!(segments_intersect(v(0.0, 0.0), v(2.0, 0.0), v(1.0, 0.0), v(1.0, 3.0)));
        assert!(!segments_intersect(v(0.0, 0.0), v(1.0, 0.0), v(2.0, 0.0), v(3.0, 0.0)));
        assert!(segments_intersect(v(0.0, 0.0), v(2.0, 0.0), v(1.0, 0.0), v(3.0, 0.0)));
    }

    #[test]
    fn distances() {
        assert_eq!(segment_distance(v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0), v(1.0, 1.0)), 1.0);
        assert_eq!(segment_distance(v(0.0, 0.0), v(2.0, 2.0), v(0.0, 2.0), v(2.0, 0.0)), 0.0);
        let d = segment_distance(v(0.0, 0.0), v(1.0, 0.0), v(2.0, 1.0), v(3.0, 1.0));
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn serde_as_arrays() {
        let s = serde_json::to_string(&Vec3::new(1.0, 2.0, 3.5)).unwrap();
        assert_eq!(s, "[1.0,2.0,3.5]");
        let p: Vec2<f32> = serde_json::from_str("[0.5, -1]").unwrap();
        assert_eq!(p, Vec2::new(0.5, -1.0));
    }
}
