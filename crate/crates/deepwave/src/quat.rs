//! Quaternion arithmetic.
//!
//! Elements are written q = q0 + q1 i + q2 j + q3 k with Hamilton's relations
//! i^2 = j^2 = k^2 = ijk = -1.  Two identifications are used throughout the
//! crate: 1,j-valued quaternions model complex scalars (C = R + Rj), and pure
//! imaginary quaternions model vectors in R^3.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

impl Quaternion {
    pub const fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Quaternion { q0, q1, q2, q3 }
    }

    pub const fn zero() -> Self {
        Quaternion::new(0.0, 0.0, 0.0, 0.0)
    }

    pub const fn real(r: f64) -> Self {
        Quaternion::new(r, 0.0, 0.0, 0.0)
    }

    /// Build from the complex channel pair q = u + v i, where u and v are
    /// 1,j-valued (re = scalar part, im = j part).
    pub fn from_channels(u: Complex64, v: Complex64) -> Self {
        // v i = (v0 + v2 j) i = v0 i - v2 k
        Quaternion::new(u.re, v.re, u.im, -v.im)
    }

    /// Split into the channel pair (u, v) with q = u + v i.
    pub fn channels(self) -> (Complex64, Complex64) {
        (
            Complex64::new(self.q0, self.q2),
            Complex64::new(self.q1, -self.q3),
        )
    }

    /// Embed a 1,j-valued complex scalar.
    pub fn from_complex(c: Complex64) -> Self {
        Quaternion::new(c.re, 0.0, c.im, 0.0)
    }

    /// The 1,j part as a complex number (valid projection for any q).
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.q0, self.q2)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.q0, -self.q1, -self.q2, -self.q3)
    }

    /// Scalar part Re(q) = (q + conj(q))/2.
    pub fn re(self) -> f64 {
        self.q0
    }

    /// Vector part V(q) = (q - conj(q))/2.
    pub fn vect(self) -> Self {
        Quaternion::new(0.0, self.q1, self.q2, self.q3)
    }

    /// q^dagger = k q k: negates the scalar and k components.
    pub fn dagger(self) -> Self {
        Quaternion::new(-self.q0, self.q1, self.q2, -self.q3)
    }

    pub fn norm_sq(self) -> f64 {
        self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Euclidean inner product p . q = sum p_i q_i.
    pub fn dot(self, other: Self) -> f64 {
        self.q0 * other.q0 + self.q1 * other.q1 + self.q2 * other.q2 + self.q3 * other.q3
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.q0 * s, self.q1 * s, self.q2 * s, self.q3 * s)
    }

    pub fn is_finite(self) -> bool {
        self.q0.is_finite() && self.q1.is_finite() && self.q2.is_finite() && self.q3.is_finite()
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.q0 + o.q0, self.q1 + o.q1, self.q2 + o.q2, self.q3 + o.q3)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.q0 - o.q0, self.q1 - o.q1, self.q2 - o.q2, self.q3 - o.q3)
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        qmul(self, o)
    }
}

/// Hamilton product.
pub fn qmul(p: Quaternion, q: Quaternion) -> Quaternion {
    Quaternion::new(
        p.q0 * q.q0 - p.q1 * q.q1 - p.q2 * q.q2 - p.q3 * q.q3,
        p.q0 * q.q1 + p.q1 * q.q0 + p.q2 * q.q3 - p.q3 * q.q2,
        p.q0 * q.q2 - p.q1 * q.q3 + p.q2 * q.q0 + p.q3 * q.q1,
        p.q0 * q.q3 + p.q1 * q.q2 - p.q2 * q.q1 + p.q3 * q.q0,
    )
}

/// e^{j theta} = cos(theta) + j sin(theta).
pub fn exp_j(theta: f64) -> Quaternion {
    Quaternion::new(theta.cos(), 0.0, theta.sin(), 0.0)
}

/// Cross product of the vector parts, as a vector-valued quaternion.
pub fn cross(p: Quaternion, q: Quaternion) -> Quaternion {
    Quaternion::new(
        0.0,
        p.q2 * q.q3 - p.q3 * q.q2,
        p.q3 * q.q1 - p.q1 * q.q3,
        p.q1 * q.q2 - p.q2 * q.q1,
    )
}

/// The pair (f.(vg), g.(vf)) from the skewed triple product identity; the two
/// entries sum to zero whenever v is vector-valued.
pub fn triple_product_pair(f: Quaternion, g: Quaternion, v: Quaternion) -> Result<(f64, f64)> {
    if v.re().abs() > 1e-12 {
        return Err(Error::invalid(
            "v",
            format!("must be vector-valued, got scalar part {}", v.re()),
        ));
    }
    Ok((f.dot(qmul(v, g)), g.dot(qmul(v, f))))
}
