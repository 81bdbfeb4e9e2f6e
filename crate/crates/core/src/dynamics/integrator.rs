//! Gragg–Bulirsch–Stoer extrapolation of the modified midpoint rule.
//!
//! Eight rows of the step-number sequence `2, 4, …, 16` give order 16 on
//! the diagonal; the difference to the sub-diagonal drives the step size.
//! Output times are hit exactly by shortening the step, so no interpolant is
//! needed.

use serde::{Deserialize, Serialize};

use super::state::{accelerations, hamiltonian, JacobiDecomposition, PhaseState};
use crate::equilibrium::{angular_momentum, AngularMomentum4, MomentumInvariants};
use crate::error::{Error, Result};
use crate::shape::{squared_area, MassTriple, Shape};

const STEPS: [usize; 8] = [2, 4, 6, 8, 10, 12, 14, 16];
const DIM: usize = 24;
type Vector = [f64; DIM];

fn rhs(mass: &[f64; 3], y: &Vector) -> Vector {
    let s = PhaseState::from_vector(y);
    let acc = accelerations(mass, &s.q);
    let mut f = [0.0; DIM];
    for i in 0..3 {
        for d in 0..4 {
            f[4 * i + d] = s.p[i][d] / mass[i];
            f[12 + 4 * i + d] = mass[i] * acc[i][d];
        }
    }
    f
}

fn midpoint(mass: &[f64; 3], y0: &Vector, f0: &Vector, big_h: f64, n: usize) -> Vector {
    let h = big_h / n as f64;
    let mut prev = *y0;
    let mut cur = [0.0; DIM];
    for k in 0..DIM {
        cur[k] = y0[k] + h * f0[k];
    }
    for _ in 1..n {
        let f = rhs(mass, &cur);
        let mut next = [0.0; DIM];
        for k in 0..DIM {
            next[k] = prev[k] + 2.0 * h * f[k];
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Options for [`integrate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    /// Relative local error tolerance, in `[1e-14, 1e-6]`.
    pub tol: f64,
    /// Number of equally spaced output samples after the initial one.
    pub samples: usize,
    /// Time unit used for the step-underflow abort; estimated from the
    /// state when `None`.
    pub period: Option<f64>,
}

impl IntegrateOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, samples: 1000, period: None }
    }
}

/// One output sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: PhaseState,
}

/// Conservation and geometry along a computed trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub masses: MassTriple,
    pub samples: Vec<TrajectorySample>,
    pub initial_energy: f64,
    pub initial_momentum: AngularMomentum4,
    pub initial_invariants: MomentumInvariants,
    /// `max |H − H₀| / |H₀|`.
    pub energy_drift: f64,
    /// `max |L_jk − L_jk(0)| / ℓ₀` for the six independent entries.
    pub momentum_drift: [f64; 6],
    /// `max |ℓ² − ℓ²₀| / ℓ²₀`.
    pub norm_sq_drift: f64,
    /// `max ||Pf| − |Pf₀|| / ℓ²₀`.
    pub pfaffian_drift: f64,
    /// Smallest `(d23, d13, d12)` seen.
    pub min_distance: [f64; 3],
    pub min_area2: f64,
    /// Smallest `|q ∧ Q|²` of the standard Jacobi vectors.
    pub min_wedge: f64,
    /// Smallest `|p|·|q|` for the pairs `(1,2)`, `(1,3)`, `(2,3)`.
    pub min_pair_momentum: [f64; 3],
    pub steps: usize,
    pub rejected: usize,
    /// Set when the run stopped early near a collision.
    pub aborted: Option<String>,
}

impl TrajectoryReport {
    pub fn completed(&self) -> bool {
        self.aborted.is_none()
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn max_momentum_drift(&self) -> f64 {
        self.momentum_drift.iter().copied().fold(0.0, f64::max)
    }

    fn record(&mut self, t: f64, state: PhaseState) {
        let m = self.masses;
        if let Ok(h) = hamiltonian(&m, &state) {
            self.energy_drift = self.energy_drift.max((h - self.initial_energy).abs() / self.initial_energy.abs());
        }
        let l = angular_momentum(&m, &state);
        let inv = l.invariants();
        let l0 = self.initial_momentum.entries();
        let ell0 = self.initial_invariants.norm_sq;
        let unit = if ell0 > 0.0 { ell0.sqrt() } else { 1.0 };
        let unit2 = if ell0 > 0.0 { ell0 } else { 1.0 };
        for (k, v) in l.entries().iter().enumerate() {
            self.momentum_drift[k] = self.momentum_drift[k].max((v - l0[k]).abs() / unit);
        }
        self.norm_sq_drift = self.norm_sq_drift.max((inv.norm_sq - ell0).abs() / unit2);
        self.pfaffian_drift =
            self.pfaffian_drift.max((inv.pfaffian.abs() - self.initial_invariants.pfaffian.abs()).abs() / unit2);
        let d = state.distances();
        for k in 0..3 {
            self.min_distance[k] = self.min_distance[k].min(d[k]);
        }
        if let Ok(shape) = Shape::from_distances(d[0], d[1], d[2]) {
            self.min_area2 = self.min_area2.min(squared_area(&shape).max(0.0));
        }
        self.min_wedge = self.min_wedge.min(JacobiDecomposition::new(&m, &state).wedge_norm2());
        for (k, (i, j)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
            let jac = JacobiDecomposition::for_pair(&m, &state, i, j);
            self.min_pair_momentum[k] = self.min_pair_momentum[k].min(jac.pair_momentum_distance());
        }
        self.samples.push(TrajectorySample { t, state });
    }
}

/// Rough orbital time scale `2π √(r³/M)` with `r` the largest distance.
pub fn natural_period(m: &MassTriple, state: &PhaseState) -> f64 {
    let r = state.distances().into_iter().fold(0.0, f64::max);
    std::f64::consts::TAU * (r.powi(3) / m.total()).sqrt()
}

/// Integrates with 1000 equally spaced output samples.
pub fn integrate(m: &MassTriple, state: &PhaseState, t_end: f64, tol: f64) -> Result<TrajectoryReport> {
    integrate_with(m, state, t_end, &IntegrateOptions::new(tol))
}

/// Adaptive high-order integration from `t = 0` to `t_end`.
///
/// Returns an error only for invalid input; a run that approaches a
/// collision stops early with [`TrajectoryReport::aborted`] set.
pub fn integrate_with(m: &MassTriple, state: &PhaseState, t_end: f64, opts: &IntegrateOptions) -> Result<TrajectoryReport> {
    if !(1e-14..=1e-6).contains(&opts.tol) {
        return Err(Error::Domain(format!("tolerance {} outside [1e-14, 1e-6]", opts.tol)));
    }
    if !(t_end.is_finite() && t_end >= 0.0) || opts.samples == 0 {
        return Err(Error::Domain("end time must be finite and non-negative with at least one sample".into()));
    }
    let energy = hamiltonian(m, state)?;
    let l0 = angular_momentum(m, state);
    let mass = m.masses();
    let period = opts.period.unwrap_or_else(|| natural_period(m, state));
    let initial_scale = state.distances().into_iter().fold(0.0, f64::max);

    let mut report = TrajectoryReport {
        masses: *m,
        samples: Vec::with_capacity(opts.samples + 1),
        initial_energy: energy,
        initial_momentum: l0,
        initial_invariants: l0.invariants(),
        energy_drift: 0.0,
        momentum_drift: [0.0; 6],
        norm_sq_drift: 0.0,
        pfaffian_drift: 0.0,
        min_distance: [f64::INFINITY; 3],
        min_area2: f64::INFINITY,
        min_wedge: f64::INFINITY,
        min_pair_momentum: [f64::INFINITY; 3],
        steps: 0,
        rejected: 0,
        aborted: None,
    };
    report.record(0.0, *state);

    // Absolute error floors per component group.
    let q_scale = state.q.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let p_max = state.p.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let p_scale = if p_max > 0.0 { p_max } else { m.total() * (m.total() / q_scale).sqrt() };
    let tol = opts.tol;
    let mut y = state.to_vector();
    let mut t = 0.0;
    let mut h = period / 20.0;
    let min_step = 1e-15 * period;

    for k in 1..=opts.samples {
        let t_out = t_end * k as f64 / opts.samples as f64;
        while t < t_out {
            let last = t_out - t <= h * (1.0 + 1e-12);
            let step = if last { t_out - t } else { h };
            if step < min_step && !last {
                report.aborted = Some(format!("step size underflow at t = {t:e}"));
                return Ok(report);
            }
            let (y_new, err) = gbs_step(&mass, &y, step, tol, q_scale, p_scale);
            report.steps += 1;
            let ok = err.is_finite() && err <= 1.0;
            let factor = if err.is_finite() {
                (0.94 * (0.65 / err.max(1e-30)).powf(1.0 / (2.0 * STEPS.len() as f64 - 1.0))).clamp(0.2, 4.0)
            } else {
                0.2
            };
            if ok {
                y = y_new;
                t = if last { t_out } else { t + step };
                let d = PhaseState::from_vector(&y).distances();
                if d.iter().any(|&x| x < 1e-8 * initial_scale) {
                    report.aborted = Some(format!("close approach at t = {t:e}"));
                    report.record(t, PhaseState::from_vector(&y));
                    return Ok(report);
                }
                // A step shortened to land on an output time says little
                // about the next one.
                if !last {
                    h = step * factor;
                } else {
                    h = h.max(step * factor);
                }
            } else {
                report.rejected += 1;
                h = step * factor.min(0.7);
                if h < min_step {
                    report.aborted = Some(format!("step size underflow at t = {t:e}"));
                    return Ok(report);
                }
            }
        }
        report.record(t, PhaseState::from_vector(&y));
    }
    Ok(report)
}

fn gbs_step(mass: &[f64; 3], y: &Vector, big_h: f64, tol: f64, q_scale: f64, p_scale: f64) -> (Vector, f64) {
    let f0 = rhs(mass, y);
    let mut table: Vec<Vector> = Vec::with_capacity(STEPS.len());
    let mut prev_diag = [0.0; DIM];
    for (j, &n) in STEPS.iter().enumerate() {
        let mut row = vec![midpoint(mass, y, &f0, big_h, n)];
        for l in 1..=j {
            let ratio = (n as f64 / STEPS[j - l] as f64).powi(2) - 1.0;
            let mut v = [0.0; DIM];
            for k in 0..DIM {
                v[k] = row[l - 1][k] + (row[l - 1][k] - table[l - 1][k]) / ratio;
            }
            row.push(v);
        }
        if j + 1 == STEPS.len() {
            prev_diag = row[j - 1];
        }
        table = row;
    }
    let best = table[STEPS.len() - 1];
    let mut sum = 0.0;
    for k in 0..DIM {
        let floor = if k < 12 { q_scale } else { p_scale };
        let sc = tol * (floor + y[k].abs().max(best[k].abs()));
        sum += ((best[k] - prev_diag[k]) / sc).powi(2);
    }
    (best, (sum / DIM as f64).sqrt())
}
