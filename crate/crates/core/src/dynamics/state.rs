use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::{MassTriple, Shape};

pub type Vec4 = [f64; 4];

fn sub(a: &Vec4, b: &Vec4) -> Vec4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn dot(a: &Vec4, b: &Vec4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn norm2(a: &Vec4) -> f64 {
    dot(a, a)
}

/// `x yᵀ − y xᵀ`, accumulated into `out`.
fn add_wedge(out: &mut [[f64; 4]; 4], x: &Vec4, y: &Vec4) {
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] += x[r] * y[c] - y[r] * x[c];
        }
    }
}

/// Positions and momenta of the three bodies in ℝ⁴.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub q: [Vec4; 3],
    pub p: [Vec4; 3],
}

impl PhaseState {
    pub fn new(q: [Vec4; 3], p: [Vec4; 3]) -> Self {
        Self { q, p }
    }

    /// Shifts positions to put the centre of mass at the origin and removes
    /// the total momentum equally weighted by mass.
    pub fn centered(&self, m: &MassTriple) -> Self {
        let mass = m.masses();
        let total = m.total();
        let mut out = *self;
        for d in 0..4 {
            let com = (0..3).map(|i| mass[i] * self.q[i][d]).sum::<f64>() / total;
            let ptot: f64 = (0..3).map(|i| self.p[i][d]).sum();
            for i in 0..3 {
                out.q[i][d] -= com;
                out.p[i][d] -= mass[i] / total * ptot;
            }
        }
        out
    }

    pub fn total_momentum(&self) -> Vec4 {
        let mut s = [0.0; 4];
        for p in &self.p {
            for d in 0..4 {
                s[d] += p[d];
            }
        }
        s
    }

    pub fn centre_of_mass(&self, m: &MassTriple) -> Vec4 {
        let mass = m.masses();
        let mut s = [0.0; 4];
        for i in 0..3 {
            for d in 0..4 {
                s[d] += mass[i] * self.q[i][d] / m.total();
            }
        }
        s
    }

    /// Mutual distances `(d23, d13, d12)`.
    pub fn distances(&self) -> [f64; 3] {
        let d = |i: usize, j: usize| norm2(&sub(&self.q[i], &self.q[j])).sqrt();
        [d(1, 2), d(0, 2), d(0, 1)]
    }

    /// Current shape as squared distances.
    pub fn shape(&self) -> Result<Shape> {
        let [d23, d13, d12] = self.distances();
        Shape::from_distances(d23, d13, d12)
    }

    /// Angular momentum `Σ q_i p_iᵀ − p_i q_iᵀ`.
    pub fn angular_momentum_matrix(&self) -> [[f64; 4]; 4] {
        let mut l = [[0.0; 4]; 4];
        for i in 0..3 {
            add_wedge(&mut l, &self.q[i], &self.p[i]);
        }
        l
    }

    /// Flattened as `[q1, q2, q3, p1, p2, p3]`.
    pub fn to_vector(&self) -> [f64; 24] {
        let mut y = [0.0; 24];
        for i in 0..3 {
            y[4 * i..4 * i + 4].copy_from_slice(&self.q[i]);
            y[12 + 4 * i..12 + 4 * i + 4].copy_from_slice(&self.p[i]);
        }
        y
    }

    pub fn from_vector(y: &[f64; 24]) -> Self {
        let mut s = Self { q: [[0.0; 4]; 3], p: [[0.0; 4]; 3] };
        for i in 0..3 {
            s.q[i].copy_from_slice(&y[4 * i..4 * i + 4]);
            s.p[i].copy_from_slice(&y[12 + 4 * i..12 + 4 * i + 4]);
        }
        s
    }
}

/// Jacobi vectors for the pairing `(i, j)` with third body `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiDecomposition {
    /// `q_j − q_i`.
    pub q: Vec4,
    /// Third body relative to the centre of mass of the pair.
    pub big_q: Vec4,
    pub p: Vec4,
    pub big_p: Vec4,
    /// `m_i m_j / (m_i + m_j)`.
    pub reduced_pair: f64,
    /// `m_k (m_i + m_j) / M`.
    pub reduced_third: f64,
}

impl JacobiDecomposition {
    /// Standard numbering: pair (1, 2), third body 3.
    pub fn new(m: &MassTriple, state: &PhaseState) -> Self {
        Self::for_pair(m, state, 0, 1)
    }

    /// Jacobi vectors with `q = q_j − q_i` and the remaining body as third.
    pub fn for_pair(m: &MassTriple, state: &PhaseState, i: usize, j: usize) -> Self {
        let k = 3 - i - j;
        let mass = m.masses();
        let (mi, mj, mk) = (mass[i], mass[j], mass[k]);
        let pair = mi + mj;
        let mut q = [0.0; 4];
        let mut big_q = [0.0; 4];
        let mut p = [0.0; 4];
        let mut big_p = [0.0; 4];
        let reduced_pair = mi * mj / pair;
        let reduced_third = mk * pair / m.total();
        for d in 0..4 {
            q[d] = state.q[j][d] - state.q[i][d];
            big_q[d] = state.q[k][d] - (mi * state.q[i][d] + mj * state.q[j][d]) / pair;
            p[d] = reduced_pair * (state.p[j][d] / mj - state.p[i][d] / mi);
            big_p[d] = reduced_third * (state.p[k][d] / mk - (state.p[i][d] + state.p[j][d]) / pair);
        }
        Self { q, big_q, p, big_p, reduced_pair, reduced_third }
    }

    /// `2T = |p|²/μ + |P|²/ν`.
    pub fn twice_kinetic(&self) -> f64 {
        norm2(&self.p) / self.reduced_pair + norm2(&self.big_p) / self.reduced_third
    }

    /// `L = q pᵀ − p qᵀ + Q Pᵀ − P Qᵀ`.
    pub fn angular_momentum_matrix(&self) -> [[f64; 4]; 4] {
        let mut l = [[0.0; 4]; 4];
        add_wedge(&mut l, &self.q, &self.p);
        add_wedge(&mut l, &self.big_q, &self.big_p);
        l
    }

    /// `|q ∧ Q|² = |q|²|Q|² − ⟨q, Q⟩²`; four times the squared area.
    pub fn wedge_norm2(&self) -> f64 {
        let v = norm2(&self.q) * norm2(&self.big_q) - dot(&self.q, &self.big_q).powi(2);
        v.max(0.0)
    }

    /// `|p| · |q|` for the pair.
    pub fn pair_momentum_distance(&self) -> f64 {
        norm2(&self.p).sqrt() * norm2(&self.q).sqrt()
    }
}

fn check_separated(state: &PhaseState) -> Result<[f64; 3]> {
    let d = state.distances();
    for &x in &d {
        if !(x > 0.0) {
            return Err(Error::Singular(x));
        }
    }
    Ok(d)
}

pub fn kinetic_energy(m: &MassTriple, state: &PhaseState) -> f64 {
    let mass = m.masses();
    (0..3).map(|i| norm2(&state.p[i]) / (2.0 * mass[i])).sum()
}

/// Newtonian potential of the current positions.
pub fn potential_energy(m: &MassTriple, state: &PhaseState) -> Result<f64> {
    let [d23, d13, d12] = check_separated(state)?;
    let [m1, m2, m3] = m.masses();
    Ok(-(m1 * m2 / d12 + m2 * m3 / d23 + m3 * m1 / d13))
}

/// `H = T + V`.
pub fn hamiltonian(m: &MassTriple, state: &PhaseState) -> Result<f64> {
    Ok(kinetic_energy(m, state) + potential_energy(m, state)?)
}

/// Accelerations `q̈_i = Σ_j m_j (q_j − q_i)/|q_j − q_i|³`.
pub fn forces(m: &MassTriple, state: &PhaseState) -> Result<[Vec4; 3]> {
    check_separated(state)?;
    Ok(accelerations(&m.masses(), &state.q))
}

pub(crate) fn accelerations(mass: &[f64; 3], q: &[Vec4; 3]) -> [Vec4; 3] {
    let mut acc = [[0.0; 4]; 3];
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let r = sub(&q[j], &q[i]);
        let d2 = norm2(&r);
        let inv3 = 1.0 / (d2 * d2.sqrt());
        for d in 0..4 {
            acc[i][d] += mass[j] * r[d] * inv3;
            acc[j][d] -= mass[i] * r[d] * inv3;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, m: &MassTriple) -> PhaseState {
        let mut s = PhaseState::new([[0.0; 4]; 3], [[0.0; 4]; 3]);
        for i in 0..3 {
            for d in 0..4 {
                s.q[i][d] = rng.random_range(-2.0..2.0);
                s.p[i][d] = rng.random_range(-1.0..1.0);
            }
        }
        s.centered(m)
    }

    #[test]
    fn equilateral_at_rest() {
        let m = MassTriple::equal(0.7).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let s = PhaseState::new(
            [[0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.5, h, 0.0, 0.0]],
            [[0.0; 4]; 3],
        );
        assert_relative_eq!(hamiltonian(&m, &s).unwrap(), -3.0 * 0.49, epsilon = 1e-15);
        let s = s.centered(&m);
        let acc = forces(&m, &s).unwrap();
        for i in 0..3 {
            // Pointing at the centroid, magnitude √3·m/r².
            let r = norm2(&s.q[i]).sqrt();
            let a = norm2(&acc[i]).sqrt();
            assert_relative_eq!(a, 3f64.sqrt() * 0.7, epsilon = 1e-14);
            assert_relative_eq!(dot(&acc[i], &s.q[i]), -a * r, epsilon = 1e-14);
        }
    }

    #[test]
    fn jacobi_matches_body_sums() {
        let m = MassTriple::new(0.5, 0.3, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let s = random_state(&mut rng, &m);
            let body_l = s.angular_momentum_matrix();
            let body_t = kinetic_energy(&m, &s);
            let scale: f64 = body_l.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let jac = JacobiDecomposition::for_pair(&m, &s, i, j);
                assert_relative_eq!(0.5 * jac.twice_kinetic(), body_t, max_relative = 1e-12);
                let jl = jac.angular_momentum_matrix();
                for r in 0..4 {
                    for c in 0..4 {
                        assert!((jl[r][c] - body_l[r][c]).abs() <= 1e-12 * scale);
                    }
                }
                let area2 = crate::shape::squared_area(&s.shape().unwrap());
                let sc = s.distances().iter().map(|d| d * d).sum::<f64>().powi(2);
                assert!((jac.wedge_norm2() / 4.0 - area2).abs() <= 1e-12 * sc);
            }
        }
    }

    #[test]
    fn forces_are_gradient_of_potential() {
        let m = MassTriple::new(0.5, 0.3, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = random_state(&mut rng, &m);
            let acc = forces(&m, &s).unwrap();
            let mass = m.masses();
            for i in 0..3 {
                for d in 0..4 {
                    let h = 1e-5;
                    let mut sp = s;
                    let mut sm = s;
                    sp.q[i][d] += h;
                    sm.q[i][d] -= h;
                    let fd = -(potential_energy(&m, &sp).unwrap() - potential_energy(&m, &sm).unwrap()) / (2.0 * h);
                    let scale = norm2(&acc[i]).sqrt() * mass[i];
                    assert!((mass[i] * acc[i][d] - fd).abs() <= 1e-7 * scale.max(1e-3));
                }
            }
            let mut total = [0.0; 4];
            for i in 0..3 {
                for d in 0..4 {
                    total[d] += mass[i] * acc[i][d];
                }
            }
            assert!(total.iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn translation_leaves_accelerations() {
        let m = MassTriple::new(0.5, 0.3, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = random_state(&mut rng, &m);
        let mut t = s;
        for q in &mut t.q {
            q[2] += 3.0;
        }
        let a = forces(&m, &s).unwrap();
        let b = forces(&m, &t).unwrap();
        for i in 0..3 {
            for d in 0..4 {
                assert_relative_eq!(a[i][d], b[i][d], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn collision_is_an_error() {
        let m = MassTriple::equal(1.0).unwrap();
        let s = PhaseState::new([[0.0; 4], [0.0; 4], [1.0, 0.0, 0.0, 0.0]], [[0.0; 4]; 3]);
        assert!(hamiltonian(&m, &s).is_err());
        assert!(forces(&m, &s).is_err());
    }
}
