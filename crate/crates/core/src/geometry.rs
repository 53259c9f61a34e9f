//! Small vector and axis-aligned box helpers shared by the simulator and renderer.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or direction in world units. `y` is up.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const UP: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn length(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn component(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn lerp(self, other: Vec3, t: f64) -> Vec3 {
        self + (other - self) * t
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned box given by its min and max corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn centroid(&self) -> Vec3 {
        self.min.lerp(self.max, 0.5)
    }

    /// Index of the first axis on which `min < max` does not hold.
    pub fn first_inverted_axis(&self) -> Option<usize> {
        (0..3).find(|&a| self.min.component(a).partial_cmp(&self.max.component(a)) != Some(std::cmp::Ordering::Less))
    }

    /// Closed containment test.
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| {
            let v = p.component(a);
            v >= self.min.component(a) && v <= self.max.component(a)
        })
    }

    /// Open containment test (strictly inside on every axis).
    pub fn contains_strict(&self, p: Vec3) -> bool {
        (0..3).all(|a| {
            let v = p.component(a);
            v > self.min.component(a) && v < self.max.component(a)
        })
    }

    /// Grows the box by `amount` on every side (shrinks for negative amounts).
    pub fn expanded(&self, amount: f64) -> Aabb {
        let d = Vec3::new(amount, amount, amount);
        Aabb::new(self.min - d, self.max + d)
    }

    /// Horizontal (x/z) distance from `p` to the box footprint; zero when above or inside it.
    pub fn footprint_distance(&self, p: Vec3) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dz = (self.min.z - p.z).max(0.0).max(p.z - self.max.z);
        (dx * dx + dz * dz).sqrt()
    }

    /// Slab intersection of the ray `origin + t * dir` with the box.
    ///
    /// Returns `(t_enter, t_exit)` when the infinite line crosses the box. Axes on which
    /// `dir` is zero only pass when the origin is strictly inside that slab, so rays that
    /// graze a face without entering the box are not reported.
    pub fn ray_interval(&self, origin: Vec3, dir: Vec3) -> Option<(f64, f64)> {
        let mut t_enter = f64::NEG_INFINITY;
        let mut t_exit = f64::INFINITY;
        for axis in 0..3 {
            let o = origin.component(axis);
            let d = dir.component(axis);
            let lo = self.min.component(axis);
            let hi = self.max.component(axis);
            if d.abs() < 1e-12 {
                if o <= lo || o >= hi {
                    return None;
                }
                continue;
            }
            let mut t0 = (lo - o) / d;
            let mut t1 = (hi - o) / d;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_enter = t_enter.max(t0);
            t_exit = t_exit.min(t1);
            if t_enter >= t_exit {
                return None;
            }
        }
        Some((t_enter, t_exit))
    }

    /// The eight corners, ordered by the bit pattern `(x, y, z)` of `index` (bit set = max).
    pub fn corners(&self) -> [Vec3; 8] {
        let mut out = [Vec3::ZERO; 8];
        for (i, c) in out.iter_mut().enumerate() {
            *c = Vec3::new(
                if i & 4 != 0 { self.max.x } else { self.min.x },
                if i & 2 != 0 { self.max.y } else { self.min.y },
                if i & 1 != 0 { self.max.z } else { self.min.z },
            );
        }
        out
    }
}
