//! Points and axis-aligned boxes in the building frame.
//!
//! The building occupies `[0, x_b] x [0, y_b] x [0, z_b]`; the UAV is served
//! from the `x >= x_b` side, so the wall at `x = x_b` faces the UAV.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn distance_squared(self, other: Point3) -> f64 {
        let d = self - other;
        d.x * d.x + d.y * d.y + d.z * d.z
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::from_array(a)
    }
}

impl From<(f64, f64, f64)> for Point3 {
    fn from((x, y, z): (f64, f64, f64)) -> Self {
        Point3::new(x, y, z)
    }
}

/// Closed interval `[min, max]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min > max {
            return Err(Error::invalid(
                "interval",
                format!("[{min}, {max}] is not an ordered finite interval"),
            ));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;
    fn try_from([min, max]: [f64; 2]) -> Result<Self> {
        Interval::new(min, max)
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.min, i.max]
    }
}

/// Box bounds on a 3D decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds3 {
    pub x: Interval,
    pub y: Interval,
    pub z: Interval,
}

impl Bounds3 {
    pub fn new(x: (f64, f64), y: (f64, f64), z: (f64, f64)) -> Result<Self> {
        Ok(Self {
            x: Interval::new(x.0, x.1)?,
            y: Interval::new(y.0, y.1)?,
            z: Interval::new(z.0, z.1)?,
        })
    }

    pub fn point(p: Point3) -> Self {
        let i = |v: f64| Interval { min: v, max: v };
        Self {
            x: i(p.x),
            y: i(p.y),
            z: i(p.z),
        }
    }

    pub fn axes(&self) -> [Interval; 3] {
        [self.x, self.y, self.z]
    }

    pub fn contains(&self, p: Point3) -> bool {
        self.x.contains(p.x) && self.y.contains(p.y) && self.z.contains(p.z)
    }

    pub fn clamp(&self, p: Point3) -> Point3 {
        Point3::new(self.x.clamp(p.x), self.y.clamp(p.y), self.z.clamp(p.z))
    }

    /// Same bounds with the x lower limit raised to at least `x_min`.
    pub fn with_x_floor(mut self, x_min: f64) -> Self {
        if self.x.min < x_min {
            self.x.min = x_min;
            if self.x.max < x_min {
                self.x.max = x_min;
            }
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_checks() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(0.0, f64::NAN).is_err());
        let i = Interval::new(2.0, 2.0).unwrap();
        assert_eq!(i.width(), 0.0);
        assert_eq!(i.clamp(5.0), 2.0);
    }

    #[test]
    fn bounds_clamp_and_floor() {
        let b = Bounds3::new((0.0, 10.0), (0.0, 5.0), (1.0, 2.0)).unwrap();
        assert_eq!(b.clamp(Point3::new(-1.0, 6.0, 1.5)), Point3::new(0.0, 5.0, 1.5));
        let f = b.with_x_floor(20.0);
        assert_eq!((f.x.min, f.x.max), (20.0, 20.0));
        assert!(f.contains(Point3::new(20.0, 1.0, 1.0)));
    }

    #[test]
    fn point_arithmetic() {
        let a = Point3::new(1.0, 2.0, 2.0);
        assert_eq!(a.norm(), 3.0);
        assert_eq!((a - a).norm(), 0.0);
        assert_eq!(a.distance_squared(Point3::default()), 9.0);
    }
}
