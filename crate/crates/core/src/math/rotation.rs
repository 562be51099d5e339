//! Rotations of the Bloch sphere.
//!
//! A [`Rotation3`] is stored as a unit quaternion `(cos a/2, sin a/2 n)`. The
//! quaternion is also the SU(2) element `exp(-i a n.S)` of a spin-1/2, so the
//! classical sensor propagator is a product of these.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub const AXIS_NORM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Quat {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, r: Quat) -> Quat {
        Quat {
            w: self.w * r.w - self.x * r.x - self.y * r.y - self.z * r.z,
            x: self.w * r.x + self.x * r.w + self.y * r.z - self.z * r.y,
            y: self.w * r.y - self.x * r.z + self.y * r.w + self.z * r.x,
            z: self.w * r.z + self.x * r.y - self.y * r.x + self.z * r.w,
        }
    }
}

impl Quat {
    fn conj(self) -> Quat {
        Quat {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Right-handed rotation of R^3 by `angle` about a unit `axis`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation3 {
    q: Quat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle {
    pub axis: Vec3,
    pub angle: f64,
}

fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl Rotation3 {
    pub const IDENTITY: Rotation3 = Rotation3 {
        q: Quat {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        },
    };

    /// Rotation about `axis`, which must have unit length.
    pub fn new(axis: Vec3, angle: f64) -> Result<Self> {
        let n = norm3(axis);
        if (n - 1.0).abs() > AXIS_NORM_TOL {
            return Err(Error::InvalidAxis { norm: n });
        }
        Ok(Self::about_unchecked(axis, angle))
    }

    /// Rotation about `axis / |axis|`; the zero vector maps to the identity.
    pub fn about(axis: Vec3, angle: f64) -> Self {
        let n = norm3(axis);
        if n == 0.0 {
            return Self::IDENTITY;
        }
        Self::about_unchecked([axis[0] / n, axis[1] / n, axis[2] / n], angle)
    }

    fn about_unchecked(axis: Vec3, angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Rotation3 {
            q: Quat {
                w: c,
                x: s * axis[0],
                y: s * axis[1],
                z: s * axis[2],
            },
        }
    }

    pub fn about_x(angle: f64) -> Self {
        Self::about_unchecked([1.0, 0.0, 0.0], angle)
    }

    pub fn about_y(angle: f64) -> Self {
        Self::about_unchecked([0.0, 1.0, 0.0], angle)
    }

    pub fn about_z(angle: f64) -> Self {
        Self::about_unchecked([0.0, 0.0, 1.0], angle)
    }

    /// Rotation by `|v|` about `v / |v|`.
    pub fn from_rotation_vector(v: Vec3) -> Self {
        let a = norm3(v);
        if a == 0.0 {
            return Self::IDENTITY;
        }
        Self::about_unchecked([v[0] / a, v[1] / a, v[2] / a], a)
    }

    /// Rotation generated by the field `h` (rad/s) acting for `dt` seconds,
    /// i.e. `exp(-i dt h.S)` for a spin-1/2.
    #[inline]
    pub fn precession(h: Vec3, dt: f64) -> Self {
        let w = norm3(h);
        if w == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * w * dt).sin_cos();
        let k = s / w;
        Rotation3 {
            q: Quat {
                w: c,
                x: k * h[0],
                y: k * h[1],
                z: k * h[2],
            },
        }
    }

    /// Unit quaternion `[w, x, y, z]`; the SU(2) element is `w - i(x σx + y σy + z σz)`.
    pub fn quaternion(&self) -> [f64; 4] {
        [self.q.w, self.q.x, self.q.y, self.q.z]
    }

    /// `next ∘ self`: apply `self` first, then `next`.
    #[inline]
    pub fn then(&self, next: &Rotation3) -> Rotation3 {
        Rotation3 { q: next.q * self.q }
    }

    pub fn inverse(&self) -> Rotation3 {
        Rotation3 { q: self.q.conj() }
    }

    /// Re-normalizes the quaternion against accumulated rounding.
    pub fn renormalized(&self) -> Rotation3 {
        let n = self.q.norm();
        Rotation3 {
            q: Quat {
                w: self.q.w / n,
                x: self.q.x / n,
                y: self.q.y / n,
                z: self.q.z / n,
            },
        }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let p = Quat {
            w: 0.0,
            x: v[0],
            y: v[1],
            z: v[2],
        };
        let r = self.q * p * self.q.conj();
        [r.x, r.y, r.z]
    }

    /// Rotation vector `angle * axis` with `angle` in `[0, pi]`.
    pub fn rotation_vector(&self) -> Vec3 {
        let mut q = self.q;
        if q.w < 0.0 {
            q = Quat {
                w: -q.w,
                x: -q.x,
                y: -q.y,
                z: -q.z,
            };
        }
        let s = (q.x * q.x + q.y * q.y + q.z * q.z).sqrt();
        if s == 0.0 {
            return [0.0; 3];
        }
        let angle = 2.0 * s.atan2(q.w);
        [angle * q.x / s, angle * q.y / s, angle * q.z / s]
    }

    pub fn axis_angle(&self) -> AxisAngle {
        let v = self.rotation_vector();
        let angle = norm3(v);
        if angle == 0.0 {
            return AxisAngle {
                axis: [1.0, 0.0, 0.0],
                angle: 0.0,
            };
        }
        AxisAngle {
            axis: [v[0] / angle, v[1] / angle, v[2] / angle],
            angle,
        }
    }

    pub fn angle(&self) -> f64 {
        self.axis_angle().angle
    }

    /// 3x3 orthogonal matrix, row-major.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let Quat { w, x, y, z } = self.q;
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    /// Inverse of [`Rotation3::matrix`] for proper orthogonal input.
    pub fn from_matrix(m: &[[f64; 3]; 3]) -> Self {
        let tr = m[0][0] + m[1][1] + m[2][2];
        let q = if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            Quat {
                w: 0.25 * s,
                x: (m[2][1] - m[1][2]) / s,
                y: (m[0][2] - m[2][0]) / s,
                z: (m[1][0] - m[0][1]) / s,
            }
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            Quat {
                w: (m[2][1] - m[1][2]) / s,
                x: 0.25 * s,
                y: (m[0][1] + m[1][0]) / s,
                z: (m[0][2] + m[2][0]) / s,
            }
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            Quat {
                w: (m[0][2] - m[2][0]) / s,
                x: (m[0][1] + m[1][0]) / s,
                y: 0.25 * s,
                z: (m[1][2] + m[2][1]) / s,
            }
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            Quat {
                w: (m[1][0] - m[0][1]) / s,
                x: (m[0][2] + m[2][0]) / s,
                y: (m[1][2] + m[2][1]) / s,
                z: 0.25 * s,
            }
        };
        Rotation3 { q }.renormalized()
    }

    /// Largest entry-wise difference between the two rotation matrices.
    pub fn matrix_distance(&self, other: &Rotation3) -> f64 {
        let (a, b) = (self.matrix(), other.matrix());
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((a[i][j] - b[i][j]).abs());
            }
        }
        d
    }
}

/// Net rotation of an ordered list; the first element acts first.
pub fn compose_rotations(rs: &[Rotation3]) -> Rotation3 {
    rs.iter().fold(Rotation3::IDENTITY, |acc, r| acc.then(r))
}
