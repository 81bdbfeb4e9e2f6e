//! Families known in closed form: the equilateral (Lagrange) family for any
//! masses, and the isosceles family for masses `(m, m, μm)`.
//!
//! In the isosceles family the equal bodies 1 and 2 sit at distance `ρs`
//! from each other and `s` from body 3, with `ρ ∈ (0, 2)`; `ρ = 1` is the
//! equilateral triangle and `ρ → 2` the collinear limit.

use serde::{Deserialize, Serialize};

use crate::dynamics::PhaseState;
use crate::equilibrium::{frequencies, BalancedEquilibrium, EMPoint};
use crate::error::{Error, Result};
use crate::shape::{planar_coordinates, MassTriple, PlanarConfig, Shape};

/// `h_L` and the range of `k` on the equilateral family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilateralFamily {
    /// `−½ M₂³ / M`, the same for every member.
    pub h: f64,
    pub k_min: f64,
    /// `¾ M₃ M / M₂²`.
    pub k_max: f64,
}

pub fn equilateral_family(m: &MassTriple) -> EquilateralFamily {
    let (total, pair, prod) = (m.total(), m.pair_sum(), m.product());
    EquilateralFamily { h: -0.5 * pair.powi(3) / total, k_min: 0.0, k_max: 0.75 * prod * total / (pair * pair) }
}

/// A unit vector `(u1, u2, u3)` selecting a complex structure `J` on ℝ⁴.
///
/// The defining constraint is the quadratic norm `u1² + u2² + u3² = 1`,
/// which is what `J² = −I` requires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexStructure {
    u: [f64; 3],
}

impl ComplexStructure {
    pub fn new(u1: f64, u2: f64, u3: f64) -> Result<Self> {
        let n = u1 * u1 + u2 * u2 + u3 * u3;
        if !((n - 1.0).abs() <= 1e-14) {
            return Err(Error::Domain(format!("complex structure needs a unit vector, |u|² = {n}")));
        }
        Ok(Self { u: [u1, u2, u3] })
    }

    /// Normalizes any non-zero vector.
    pub fn from_direction(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain("direction must be non-zero".into()));
        }
        let u = v.map(|x| x / n);
        // Renormalize once more so the norm check holds to the last bit.
        let n2 = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        Self::new(u[0] / n2, u[1] / n2, u[2] / n2)
    }

    pub fn u(&self) -> [f64; 3] {
        self.u
    }

    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let [u1, u2, u3] = self.u;
        [
            [0.0, -u1, -u2, -u3],
            [u1, 0.0, u3, -u2],
            [u2, -u3, 0.0, u1],
            [u3, u2, -u1, 0.0],
        ]
    }
}

/// Equilateral triangle of side `r` in the plane of the first two
/// coordinates, rotating with `Ω = ωJ`, `ω² = M/r³`.
pub fn equilateral_embedding(m: &MassTriple, r: f64, u: &ComplexStructure) -> Result<PhaseState> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("side length must be positive, got {r}")));
    }
    let planar = planar_coordinates(m, &Shape::equilateral(r)?)?;
    let omega = (m.total() / r.powi(3)).sqrt();
    let j = u.matrix();
    let mass = m.masses();
    let mut state = PhaseState::new([[0.0; 4]; 3], [[0.0; 4]; 3]);
    for i in 0..3 {
        let xi = [planar.x[i], planar.y[i], 0.0, 0.0];
        state.q[i] = xi;
        for r in 0..4 {
            state.p[i][r] = mass[i] * omega * (0..4).map(|c| j[r][c] * xi[c]).sum::<f64>();
        }
    }
    Ok(state)
}

/// Parameters of the isosceles family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoscelesParams {
    /// Base over leg, in `(0, 2)`.
    pub rho: f64,
    /// Mass of the apex body over the equal masses.
    pub mu: f64,
    /// Equal mass.
    pub m: f64,
    /// Leg length.
    pub s: f64,
}

impl IsoscelesParams {
    pub fn new(rho: f64, mu: f64, m: f64, s: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 2.0) {
            return Err(Error::Domain(format!("ρ = {rho} outside (0, 2)")));
        }
        for (name, v) in [("μ", mu), ("m", m), ("s", s)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { rho, mu, m, s })
    }

    /// Masses `(m, m, μm)`.
    pub fn masses(&self) -> MassTriple {
        MassTriple::new(self.m, self.m, self.mu * self.m).expect("validated")
    }

    /// Squared distances `(s², s², ρ²s²)`.
    pub fn shape(&self) -> Shape {
        let s2 = self.s * self.s;
        Shape::new(s2, s2, self.rho * self.rho * s2).expect("validated")
    }
}

/// `χ(ρ) = (4 − ρ²) μ / √(ρ (2 + μ)(2 + ρ³μ))`, the ratio of the momentum
/// about the symmetry axis to the one about the base.
pub fn isosceles_chi(p: &IsoscelesParams) -> Result<f64> {
    let IsoscelesParams { rho, mu, .. } = IsoscelesParams::new(p.rho, p.mu, p.m, p.s)?;
    let r3 = rho * rho * rho;
    if rho < 1e-6 {
        let log = (4.0 - rho * rho).ln() + mu.ln() - 0.5 * (rho.ln() + (2.0 + mu).ln() + (2.0 + r3 * mu).ln());
        return Ok(log.exp());
    }
    Ok((4.0 - rho * rho) * mu / (rho * (2.0 + mu) * (2.0 + r3 * mu)).sqrt())
}

/// `h = −⅛ m⁵ (1 + 2ρμ)(2 + ρ³μ)(1 + χ)²`, `k = 1/(2 + χ + 1/χ)`.
pub fn isosceles_hk(p: &IsoscelesParams) -> Result<EMPoint> {
    let chi = isosceles_chi(p)?;
    let IsoscelesParams { rho, mu, m, .. } = *p;
    let h = -0.125 * m.powi(5) * (1.0 + 2.0 * rho * mu) * (2.0 + rho.powi(3) * mu) * (1.0 + chi).powi(2);
    let k = 1.0 / (2.0 + chi + 1.0 / chi);
    Ok(EMPoint { h, k, derivative: None })
}

/// `γ = √(4ρ⁻² − 1) / (2(1 + 2/μ))`.
pub fn isosceles_gamma(p: &IsoscelesParams) -> f64 {
    (4.0 / (p.rho * p.rho) - 1.0).sqrt() / (2.0 * (1.0 + 2.0 / p.mu))
}

/// The isosceles relative equilibrium and its phase state
/// `ξ1 = (0, −γ, 0, −½)ρs`, `ξ2 = (0, −γ, 0, ½)ρs`, `ξ3 = (0, 2γ/μ, 0, 0)ρs`.
pub fn isosceles_embedding(p: &IsoscelesParams) -> Result<(BalancedEquilibrium, PhaseState)> {
    let p = IsoscelesParams::new(p.rho, p.mu, p.m, p.s)?;
    let IsoscelesParams { rho, mu, m, s } = p;
    let gamma = isosceles_gamma(&p);
    let masses = p.masses();
    let x = [-gamma, -gamma, 2.0 * gamma / mu].map(|v| v * rho * s);
    let y = [-0.5, 0.5, 0.0].map(|v| v * rho * s);
    let theta_sym = m * s * s * mu * (4.0 - rho * rho) / (2.0 * (2.0 + mu));
    let theta_base = 0.5 * m * s * s * rho * rho;
    let planar = PlanarConfig {
        x,
        y,
        theta1: theta_sym,
        theta2: theta_base,
        axis_angle: std::f64::consts::FRAC_PI_2,
        collinear: false,
    };
    let w_sym = (m * (mu + 2.0) / s.powi(3)).sqrt();
    let w_base = (m * (mu + 2.0 / rho.powi(3)) / s.powi(3)).sqrt();
    let residual = frequencies(&masses, &planar)?.residual;
    let eq = BalancedEquilibrium::from_axes(masses, p.shape(), planar, [w_sym, w_base], 1.0, residual);

    let mass = masses.masses();
    let mut state = PhaseState::new([[0.0; 4]; 3], [[0.0; 4]; 3]);
    for i in 0..3 {
        state.q[i] = [0.0, x[i], 0.0, y[i]];
        // Ω = blockdiag(ω_sym J₂, ω_base J₂) applied to ξ.
        state.p[i] = [-mass[i] * w_sym * x[i], 0.0, -mass[i] * w_base * y[i], 0.0];
    }
    Ok((eq, state))
}

/// Where the isosceles family meets the equilateral one:
/// `k = 3μ(2+μ)/(4(1+2μ)²)`, `h = −m⁵(1+2μ)³/(2(2+μ))`.
pub fn lagrange_junction(mu: f64, m: f64) -> Result<EMPoint> {
    if !(mu > 0.0 && m > 0.0) {
        return Err(Error::Domain("μ and m must be positive".into()));
    }
    let k = 3.0 * mu * (2.0 + mu) / (4.0 * (1.0 + 2.0 * mu).powi(2));
    let h = -m.powi(5) * (1.0 + 2.0 * mu).powi(3) / (2.0 * (2.0 + mu));
    Ok(EMPoint { h, k, derivative: None })
}

/// One row of an isosceles table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoscelesPoint {
    pub rho: f64,
    pub chi: f64,
    pub h: f64,
    pub k: f64,
}

/// The isosceles curve on `n` equally spaced interior points of `(0, 2)`.
pub fn isosceles_curve(mu: f64, m: f64, n: usize) -> Result<Vec<IsoscelesPoint>> {
    (1..=n)
        .map(|i| {
            let rho = 2.0 * i as f64 / (n + 1) as f64;
            let p = IsoscelesParams::new(rho, mu, m, 1.0)?;
            let em = isosceles_hk(&p)?;
            Ok(IsoscelesPoint { rho, chi: isosceles_chi(&p)?, h: em.h, k: em.k })
        })
        .collect()
}
