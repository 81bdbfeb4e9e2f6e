//! Relative equilibria in ℝ² ⊕ ℝ² built from balanced shapes.
//!
//! A balanced triangle, placed in its principal axes, rotates uniformly in
//! the first plane with `ω1` about one axis and in the second plane with `ω2`
//! about the other. Angular momentum eigenvalues are `μ_i = Θ_i ω_i`.

mod family;

pub use family::{
    analyze_masses, lift_family, Differences, TrackedAxes,
    darboux_frequency_check, detect_cusps, detect_k_quarter, lift_families, slope_dk_dh, conjecture_counts, ConjectureCounts,
    Cusp, CuspKind, DarbouxReport, FamilyAnalysis, KQuarter, LiftedFamily, LiftedSample, StencilConfig,
};

use serde::{Deserialize, Serialize};

use crate::dynamics::{JacobiDecomposition, PhaseState};
use crate::error::{Error, Result};
use crate::shape::{planar_coordinates, potential, MassTriple, PlanarConfig, Shape};

/// Planar accelerations of the three bodies at the given coordinates.
fn planar_accelerations(m: &[f64; 3], x: &[f64; 3], y: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let mut ax = [0.0; 3];
    let mut ay = [0.0; 3];
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let dx = x[j] - x[i];
        let dy = y[j] - y[i];
        let d2 = dx * dx + dy * dy;
        let inv3 = 1.0 / (d2 * d2.sqrt());
        ax[i] += m[j] * dx * inv3;
        ay[i] += m[j] * dy * inv3;
        ax[j] -= m[i] * dx * inv3;
        ay[j] -= m[i] * dy * inv3;
    }
    (ax, ay)
}

/// `Σ m_i r_i ⊗ r̈_i` as `(xx, yy, xy)`, summed pair by pair as
/// `−Σ m_i m_j r_ij ⊗ r_ij / d_ij³`. A close pair contributes its huge mutual
/// force only along its own direction, so rounding in that direction enters
/// squared rather than linearly.
fn force_tensor(m: &[f64; 3], x: &[f64; 3], y: &[f64; 3]) -> (f64, f64, f64) {
    let (mut fxx, mut fyy, mut fxy) = (0.0, 0.0, 0.0);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let dx = x[j] - x[i];
        let dy = y[j] - y[i];
        let d2 = dx * dx + dy * dy;
        let w = m[i] * m[j] / (d2 * d2.sqrt());
        fxx -= w * dx * dx;
        fyy -= w * dy * dy;
        fxy -= w * dx * dy;
    }
    (fxx, fyy, fxy)
}

fn rotate(p: &PlanarConfig, m: &[f64; 3], angle: f64) -> PlanarConfig {
    let (sn, cs) = angle.sin_cos();
    let mut x = [0.0; 3];
    let mut y = [0.0; 3];
    for i in 0..3 {
        x[i] = p.x[i] * cs + p.y[i] * sn;
        y[i] = -p.x[i] * sn + p.y[i] * cs;
    }
    PlanarConfig {
        x,
        y,
        theta1: (0..3).map(|i| m[i] * x[i] * x[i]).sum(),
        theta2: (0..3).map(|i| m[i] * y[i] * y[i]).sum(),
        axis_angle: p.axis_angle + angle,
        collinear: p.collinear,
    }
}

/// Principal axes of a balanced shape.
///
/// For a balanced shape the inertia tensor and the force tensor
/// `Σ m_i r_i ⊗ r̈_i` are diagonal in the same frame. Whichever of the two is
/// further from round fixes the axes, so the frame stays well defined at the
/// round-inertia point.
pub fn principal_frame(m: &MassTriple, s: &Shape) -> Result<PlanarConfig> {
    let p = planar_coordinates(m, s)?;
    if p.collinear {
        return Ok(p);
    }
    let mass = m.masses();
    let (fxx, fyy, fxy) = force_tensor(&mass, &p.x, &p.y);
    let inertia_spread = (p.theta1 - p.theta2).abs() / p.inertia();
    let force_spread = (fxx - fyy).hypot(2.0 * fxy) / (fxx + fyy).abs();
    if force_spread <= inertia_spread {
        return Ok(p);
    }
    let q = rotate(&p, &mass, 0.5 * (2.0 * fxy).atan2(fxx - fyy));
    Ok(if q.theta1 >= q.theta2 { q } else { q.swapped() })
}

/// Squared angular velocities of the two rotation planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequencies {
    /// About the first axis (`x`).
    pub omega1_sq: f64,
    /// About the second axis (`y`).
    pub omega2_sq: f64,
    /// Largest defect of `r̈_j = −ω² r_j` over bodies and axes, relative to
    /// the largest acceleration.
    pub residual: f64,
}

/// Solves `ẍ_j = −ω1² x_j`, `ÿ_j = −ω2² y_j` from the body with the largest
/// coordinate on each axis and reports the others as residual.
///
/// For a collinear shape the second frequency is the remaining eigenvalue of
/// the force operator, from `ω1² + ω2² = Σ_{i<j} (m_i + m_j)/d_ij³`.
pub fn frequencies(m: &MassTriple, planar: &PlanarConfig) -> Result<Frequencies> {
    let mass = m.masses();
    let (ax, ay) = planar_accelerations(&mass, &planar.x, &planar.y);
    let theta1: f64 = (0..3).map(|i| mass[i] * planar.x[i] * planar.x[i]).sum();
    if theta1 == 0.0 {
        return Err(Error::DegenerateAxis);
    }
    let (fxx, fyy, _) = force_tensor(&mass, &planar.x, &planar.y);
    let omega1_sq = -fxx / theta1;

    let mut trace = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let d2 = (planar.x[j] - planar.x[i]).powi(2) + (planar.y[j] - planar.y[i]).powi(2);
        trace += (mass[i] + mass[j]) / (d2 * d2.sqrt());
    }
    let flat = planar.collinear || planar.y.iter().all(|&v| v == 0.0);
    let omega2_sq = if flat {
        trace - omega1_sq
    } else {
        let theta2: f64 = (0..3).map(|i| mass[i] * planar.y[i] * planar.y[i]).sum();
        -fyy / theta2
    };
    for w in [omega1_sq, omega2_sq] {
        if w < -1e-12 * trace {
            return Err(Error::NotBalanced(format!("negative squared frequency {w:e}")));
        }
    }
    let force_scale = (0..3).map(|i| ax[i].hypot(ay[i])).fold(0.0, f64::max);
    let residual = (0..3)
        .map(|i| (ax[i] + omega1_sq * planar.x[i]).abs().max((ay[i] + omega2_sq * planar.y[i]).abs()))
        .fold(0.0, f64::max)
        / force_scale;
    Ok(Frequencies { omega1_sq: omega1_sq.max(0.0), omega2_sq: omega2_sq.max(0.0), residual })
}

/// A balanced shape lifted to a relative equilibrium.
///
/// The planar axes are ordered so that the first carries the larger angular
/// momentum, `μ1 ≥ μ2`; this need not be the axis with the larger moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalancedEquilibrium {
    pub masses: MassTriple,
    /// The realized shape, after scaling.
    pub shape: Shape,
    pub planar: PlanarConfig,
    pub theta1: f64,
    pub theta2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// Length factor applied to the input shape.
    pub scale: f64,
    /// Relative residual of the rotating-frame equations.
    pub residual: f64,
}

impl BalancedEquilibrium {
    /// Assembles an equilibrium from per-axis data, ordering axes by `μ`.
    pub fn from_axes(
        masses: MassTriple,
        shape: Shape,
        planar: PlanarConfig,
        omega: [f64; 2],
        scale: f64,
        residual: f64,
    ) -> Self {
        let mu = [planar.theta1 * omega[0], planar.theta2 * omega[1]];
        let (planar, omega, mu) = if mu[0] >= mu[1] {
            (planar, omega, mu)
        } else {
            (planar.swapped(), [omega[1], omega[0]], [mu[1], mu[0]])
        };
        Self {
            masses,
            shape,
            planar,
            theta1: planar.theta1,
            theta2: planar.theta2,
            omega1: omega[0],
            omega2: omega[1],
            mu1: mu[0],
            mu2: mu[1],
            scale,
            residual,
        }
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * (self.theta1 * self.omega1 * self.omega1 + self.theta2 * self.omega2 * self.omega2)
    }

    pub fn potential_energy(&self) -> f64 {
        potential(&self.masses, &self.shape)
    }

    pub fn energy(&self) -> f64 {
        self.kinetic_energy() + self.potential_energy()
    }

    /// `|2T + V| / |V|`.
    pub fn virial_defect(&self) -> f64 {
        let v = self.potential_energy();
        (2.0 * self.kinetic_energy() + v).abs() / v.abs()
    }

    /// 4 for a genuinely four-dimensional motion, 2 for a planar one.
    pub fn rank(&self) -> u8 {
        if self.mu2 > 0.0 {
            4
        } else {
            2
        }
    }

    /// Rotation period of the faster plane.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega1.max(self.omega2)
    }
}

/// Lifts a balanced shape, scaled in length by `scale`, to a relative
/// equilibrium.
pub fn lift(m: &MassTriple, s: &Shape, scale: f64) -> Result<BalancedEquilibrium> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Domain(format!("length scale must be positive, got {scale}")));
    }
    let shape = s.scaled(scale * scale);
    let planar = principal_frame(m, &shape)?;
    let f = frequencies(m, &planar)?;
    if f.residual > 1e-8 {
        return Err(Error::NotBalanced(format!("rotating-frame residual {:e}", f.residual)));
    }
    let mut eq = BalancedEquilibrium::from_axes(*m, shape, planar, [f.omega1_sq.sqrt(), f.omega2_sq.sqrt()], scale, f.residual);
    if planar.collinear {
        // The flat axis carries no moment, hence no momentum.
        eq.mu2 = 0.0;
        eq.theta2 = 0.0;
    }
    Ok(eq)
}

/// Places the equilibrium in ℝ⁴ with its axes at angles `θ1` (first plane)
/// and `θ2` (second plane); momenta follow the counterclockwise rotation.
pub fn embed_r4(eq: &BalancedEquilibrium, theta1: f64, theta2: f64) -> PhaseState {
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    let mass = eq.masses.masses();
    let mut state = PhaseState::new([[0.0; 4]; 3], [[0.0; 4]; 3]);
    for i in 0..3 {
        let (x, y) = (eq.planar.x[i], eq.planar.y[i]);
        state.q[i] = [x * c1, x * s1, y * c2, y * s2];
        state.p[i] = [
            -mass[i] * eq.omega1 * x * s1,
            mass[i] * eq.omega1 * x * c1,
            -mass[i] * eq.omega2 * y * s2,
            mass[i] * eq.omega2 * y * c2,
        ];
    }
    state
}

/// A 4×4 antisymmetric angular momentum matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularMomentum4 {
    matrix: [[f64; 4]; 4],
}

/// Index pairs of the six independent entries.
pub const MOMENTUM_ENTRIES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

impl AngularMomentum4 {
    pub fn from_matrix(matrix: [[f64; 4]; 4]) -> Result<Self> {
        let size = matrix.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        let mut defect: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                defect = defect.max((matrix[r][c] + matrix[c][r]).abs());
            }
        }
        if defect > 1e-12 * size {
            return Err(Error::NotAntisymmetric(defect));
        }
        Ok(Self { matrix })
    }

    /// From `[L12, L13, L14, L23, L24, L34]`.
    pub fn from_entries(e: [f64; 6]) -> Self {
        let mut matrix = [[0.0; 4]; 4];
        for (&(r, c), &v) in MOMENTUM_ENTRIES.iter().zip(&e) {
            matrix[r][c] = v;
            matrix[c][r] = -v;
        }
        Self { matrix }
    }

    pub fn matrix(&self) -> [[f64; 4]; 4] {
        self.matrix
    }

    pub fn entries(&self) -> [f64; 6] {
        MOMENTUM_ENTRIES.map(|(r, c)| self.matrix[r][c])
    }

    /// `ℓ² = ½ Tr(L Lᵀ)`.
    pub fn norm_sq(&self) -> f64 {
        self.entries().iter().map(|v| v * v).sum()
    }

    /// `L12 L34 − L13 L24 + L14 L23`.
    pub fn pfaffian(&self) -> f64 {
        let [l12, l13, l14, l23, l24, l34] = self.entries();
        l12 * l34 - l13 * l24 + l14 * l23
    }

    pub fn invariants(&self) -> MomentumInvariants {
        momentum_invariants(self)
    }
}

/// Conjugacy invariants of an angular momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumInvariants {
    pub norm_sq: f64,
    pub pfaffian: f64,
    /// Eigenvalues are `±iμ1, ±iμ2` with `μ1 ≥ μ2 ≥ 0`.
    pub mu1: f64,
    pub mu2: f64,
    pub rank: u8,
    /// `min(μ1, μ2)`, the bound in the no-collision estimate.
    pub d_l: f64,
}

impl MomentumInvariants {
    /// `μ1μ2 / (μ1 + μ2)²`.
    pub fn k(&self) -> f64 {
        let s = self.mu1 + self.mu2;
        if s == 0.0 {
            0.0
        } else {
            self.mu1 * self.mu2 / (s * s)
        }
    }
}

/// `μ1 + μ2 = √(ℓ² + 2|Pf|)` and `μ1 μ2 = |Pf|`.
pub fn momentum_invariants(l: &AngularMomentum4) -> MomentumInvariants {
    let norm_sq = l.norm_sq();
    let pfaffian = l.pfaffian();
    let pf = pfaffian.abs();
    let sum = (norm_sq + 2.0 * pf).sqrt();
    let diff = (norm_sq - 2.0 * pf).max(0.0).sqrt();
    let mu1 = 0.5 * (sum + diff);
    // μ2 from the product keeps its relative accuracy when it is tiny.
    let mu2 = if mu1 > 0.0 { pf / mu1 } else { 0.0 };
    let rank = if mu1 == 0.0 {
        0
    } else if mu2 <= 1e-12 * mu1 {
        2
    } else {
        4
    };
    MomentumInvariants { norm_sq, pfaffian, mu1, mu2, rank, d_l: mu2 }
}

/// Angular momentum of a state from its Jacobi vectors.
pub fn angular_momentum(m: &MassTriple, state: &PhaseState) -> AngularMomentum4 {
    let l = JacobiDecomposition::new(m, state).angular_momentum_matrix();
    // The wedge sums are antisymmetric by construction.
    AngularMomentum4 { matrix: l }
}

/// Derivatives along a family parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmDerivative {
    pub h_prime: f64,
    pub k_prime: f64,
    /// `μ1′μ2 − μ2′μ1`.
    pub c: f64,
}

/// Scale-free energy and momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EMPoint {
    /// `H (μ1 + μ2)²`.
    pub h: f64,
    /// `μ1 μ2 / (μ1 + μ2)²`.
    pub k: f64,
    pub derivative: Option<EmDerivative>,
}

pub fn em_point(energy: f64, mu1: f64, mu2: f64) -> Result<EMPoint> {
    let s = mu1 + mu2;
    if !(s > 0.0) {
        return Err(Error::ZeroMomentum);
    }
    Ok(EMPoint { h: energy * s * s, k: mu1 * mu2 / (s * s), derivative: None })
}

pub fn scaled_energy_momentum(eq: &BalancedEquilibrium) -> Result<EMPoint> {
    em_point(eq.energy(), eq.mu1, eq.mu2)
}

/// `(h, k)` of an arbitrary state.
pub fn state_energy_momentum(m: &MassTriple, state: &PhaseState) -> Result<EMPoint> {
    let inv = angular_momentum(m, state).invariants();
    em_point(crate::dynamics::hamiltonian(m, state)?, inv.mu1, inv.mu2)
}
