//! Masses, triangle shapes and the scalar shape functions.
//!
//! A shape is stored as the three squared mutual distances
//! `a = d23²`, `b = d13²`, `c = d12²`. Side `i` is the one opposite body `i`,
//! so relabelling bodies permutes sides the same way it permutes masses.
//! The gravitational constant is 1 throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Three positive masses.
///
/// The symmetric functions `M`, `M₂`, `M₃` are recomputed on every call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassTriple {
    m: [f64; 3],
}

impl MassTriple {
    pub fn new(m1: f64, m2: f64, m3: f64) -> Result<Self> {
        for m in [m1, m2, m3] {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidMass(m));
            }
        }
        Ok(Self { m: [m1, m2, m3] })
    }

    pub fn from_array(m: [f64; 3]) -> Result<Self> {
        Self::new(m[0], m[1], m[2])
    }

    /// Equal masses `m` on all three bodies.
    pub fn equal(m: f64) -> Result<Self> {
        Self::new(m, m, m)
    }

    pub fn masses(&self) -> [f64; 3] {
        self.m
    }

    pub fn get(&self, i: usize) -> f64 {
        self.m[i]
    }

    /// `M = m1 + m2 + m3`.
    pub fn total(&self) -> f64 {
        self.m[0] + self.m[1] + self.m[2]
    }

    /// `M₂ = m1m2 + m2m3 + m3m1`.
    pub fn pair_sum(&self) -> f64 {
        let [m1, m2, m3] = self.m;
        m1 * m2 + m2 * m3 + m3 * m1
    }

    /// `M₃ = m1m2m3`.
    pub fn product(&self) -> f64 {
        let [m1, m2, m3] = self.m;
        m1 * m2 * m3
    }

    /// Rescaled so that `M = 1`.
    pub fn normalized(&self) -> Self {
        let t = self.total();
        Self { m: self.m.map(|m| m / t) }
    }

    /// Relabelled masses: body `i` of the result is body `perm[i]` of `self`.
    pub fn permuted(&self, perm: [usize; 3]) -> Self {
        Self { m: perm.map(|p| self.m[p]) }
    }

    /// Permutation that sorts the masses in non-increasing order.
    pub fn descending_order(&self) -> [usize; 3] {
        let mut idx = [0usize, 1, 2];
        // Stable so that equal masses keep their relative order.
        idx.sort_by(|&i, &j| self.m[j].total_cmp(&self.m[i]));
        idx
    }
}

/// Builds a [`MassTriple`]; fails on non-positive or non-finite input.
pub fn symmetric_mass_functions(m1: f64, m2: f64, m3: f64) -> Result<MassTriple> {
    MassTriple::new(m1, m2, m3)
}

/// Squared mutual distances of a triangle (possibly non-physical).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    a: f64,
    b: f64,
    c: f64,
}

/// Position of a shape relative to the ellipse of flat triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapeKind {
    Triangle,
    Collinear,
    NonPhysical,
}

impl Shape {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for s in [a, b, c] {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Singular(s));
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn from_sides(s: [f64; 3]) -> Result<Self> {
        Self::new(s[0], s[1], s[2])
    }

    /// From mutual distances `(d23, d13, d12)`.
    pub fn from_distances(d23: f64, d13: f64, d12: f64) -> Result<Self> {
        Self::new(d23 * d23, d13 * d13, d12 * d12)
    }

    /// Equilateral shape with side length `r`.
    pub fn equilateral(r: f64) -> Result<Self> {
        Self::new(r * r, r * r, r * r)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sides(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    /// Mutual distances `(d23, d13, d12)`.
    pub fn distances(&self) -> [f64; 3] {
        self.sides().map(f64::sqrt)
    }

    /// Multiplies every squared distance by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            a: self.a * factor,
            b: self.b * factor,
            c: self.c * factor,
        }
    }

    /// Rescaled so that `c = 1`.
    pub fn normalized_c(&self) -> Self {
        self.scaled(1.0 / self.c)
    }

    /// Side `i` of the result is side `perm[i]` of `self`; pairs with
    /// [`MassTriple::permuted`].
    pub fn permuted(&self, perm: [usize; 3]) -> Self {
        let s = self.sides();
        Self {
            a: s[perm[0]],
            b: s[perm[1]],
            c: s[perm[2]],
        }
    }

    /// Tolerance below which a negative `A²` is treated as roundoff.
    pub fn collinear_tolerance(&self) -> f64 {
        let sum = self.a + self.b + self.c;
        1e-14 * sum * sum
    }

    pub fn kind(&self) -> ShapeKind {
        let a2 = squared_area(self);
        if a2 > 0.0 {
            ShapeKind::Triangle
        } else if a2 >= -self.collinear_tolerance() {
            ShapeKind::Collinear
        } else {
            ShapeKind::NonPhysical
        }
    }

    pub fn is_physical(&self) -> bool {
        self.kind() != ShapeKind::NonPhysical
    }

    /// True when every angle is below a right angle.
    pub fn is_acute(&self) -> bool {
        let [a, b, c] = self.sides();
        a < b + c && b < a + c && c < a + b
    }
}

/// `I = (m1m2·c + m2m3·a + m3m1·b) / M`.
pub fn moment_of_inertia(m: &MassTriple, s: &Shape) -> f64 {
    let [m1, m2, m3] = m.masses();
    (m1 * m2 * s.c + m2 * m3 * s.a + m3 * m1 * s.b) / m.total()
}

/// Heron's formula for the squared area, `(2ab + 2bc + 2ca − a² − b² − c²)/16`.
///
/// Evaluated in the factored form on distances, which keeps the sign and the
/// relative accuracy near flat triangles. Negative outside the ellipse of
/// flat triangles.
pub fn squared_area(s: &Shape) -> f64 {
    let [x, y, z] = s.distances();
    (x + y + z) * (-x + y + z) * (x - y + z) * (x + y - z) / 16.0
}

/// `V = −m1m2/d12 − m2m3/d23 − m3m1/d13`.
pub fn potential(m: &MassTriple, s: &Shape) -> f64 {
    let [m1, m2, m3] = m.masses();
    let [d23, d13, d12] = s.distances();
    -(m1 * m2 / d12 + m2 * m3 / d23 + m3 * m1 / d13)
}

/// A triangle in its principal axes of inertia, centre of mass at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarConfig {
    pub x: [f64; 3],
    pub y: [f64; 3],
    /// `Σ m x²`, the larger principal moment.
    pub theta1: f64,
    /// `Σ m y²`; zero for a collinear shape.
    pub theta2: f64,
    /// Angle of the first principal axis in the reference frame that puts
    /// body 1 at the origin, body 2 on the positive x-axis and body 3 in the
    /// upper half plane.
    pub axis_angle: f64,
    pub collinear: bool,
}

impl PlanarConfig {
    pub fn inertia(&self) -> f64 {
        self.theta1 + self.theta2
    }

    pub fn positions(&self) -> [[f64; 2]; 3] {
        [0, 1, 2].map(|i| [self.x[i], self.y[i]])
    }

    /// Same configuration with the two axes exchanged (`x ↔ y`).
    pub fn swapped(&self) -> Self {
        Self {
            x: self.y,
            y: self.x,
            theta1: self.theta2,
            theta2: self.theta1,
            axis_angle: self.axis_angle + std::f64::consts::FRAC_PI_2,
            collinear: self.collinear,
        }
    }
}

/// Realizes a shape in principal-axes coordinates with `Θ1 ≥ Θ2`.
///
/// For a round inertia tensor the reference axes are kept.
pub fn planar_coordinates(m: &MassTriple, s: &Shape) -> Result<PlanarConfig> {
    let kind = s.kind();
    if kind == ShapeKind::NonPhysical {
        return Err(Error::NonPhysicalShape(squared_area(s)));
    }
    let area2 = if kind == ShapeKind::Collinear {
        0.0
    } else {
        squared_area(s)
    };
    let mass = m.masses();
    let d12 = s.c.sqrt();
    let x3 = (s.c + s.b - s.a) / (2.0 * d12);
    let y3 = 2.0 * area2.sqrt() / d12;

    let px = [0.0, d12, x3];
    let py = [0.0, 0.0, y3];
    let total = m.total();
    let cx = (mass[1] * d12 + mass[2] * x3) / total;
    let cy = mass[2] * y3 / total;
    let px = px.map(|v| v - cx);
    let py = py.map(|v| v - cy);

    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for i in 0..3 {
        sxx += mass[i] * px[i] * px[i];
        syy += mass[i] * py[i] * py[i];
        sxy += mass[i] * px[i] * py[i];
    }
    let scale = sxx + syy;
    let round = (sxx - syy).abs() <= 1e-13 * scale && sxy.abs() <= 1e-13 * scale;
    let phi = if round || kind == ShapeKind::Collinear {
        0.0
    } else {
        0.5 * (2.0 * sxy).atan2(sxx - syy)
    };
    let (sn, cs) = phi.sin_cos();
    let mut x = [0.0; 3];
    let mut y = [0.0; 3];
    for i in 0..3 {
        x[i] = px[i] * cs + py[i] * sn;
        y[i] = -px[i] * sn + py[i] * cs;
    }
    if kind == ShapeKind::Collinear {
        y = [0.0; 3];
    }
    let theta1: f64 = (0..3).map(|i| mass[i] * x[i] * x[i]).sum();
    let theta2: f64 = (0..3).map(|i| mass[i] * y[i] * y[i]).sum();
    Ok(PlanarConfig {
        x,
        y,
        theta1,
        theta2,
        axis_angle: phi,
        collinear: kind == ShapeKind::Collinear,
    })
}
