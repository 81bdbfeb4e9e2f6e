//! Random perturbations of a relative equilibrium at fixed angular momentum,
//! integrated to test whether the shape stays close.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::integrator::{integrate_with, IntegrateOptions};
use super::state::{hamiltonian, PhaseState};
use crate::equilibrium::{embed_r4, AngularMomentum4, BalancedEquilibrium, MOMENTUM_ENTRIES};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::shape::MassTriple;

/// Settings for [`stability_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Relative size of the perturbation.
    pub eps: f64,
    /// Integration length in rotation periods of the faster plane.
    pub periods: f64,
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    pub samples_per_period: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { eps: 1e-4, periods: 50.0, trials: 20, tol: 1e-11, seed: 0x5eed, samples_per_period: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub index: usize,
    /// `max_t max_i |s_i(t) − s_i*| / max_i s_i*` over squared distances.
    pub max_shape_deviation: f64,
    /// `max_t |H(t) − H*| / |H*|` against the equilibrium energy.
    pub max_energy_excursion: f64,
    /// `‖L − L*‖ / ℓ*` after the momentum correction.
    pub momentum_mismatch: f64,
    pub min_area2: f64,
    pub min_wedge: f64,
    /// Smallest `|p|·d_pair − min(μ1, μ2)` over samples and pairings.
    pub min_collision_slack: f64,
    pub energy_drift: f64,
    pub momentum_drift: f64,
    /// Every distance stayed within `[½, 2]` of its equilibrium value.
    pub bounded: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub config: ProbeConfig,
    pub period: f64,
    pub trials: Vec<TrialOutcome>,
    pub max_shape_deviation: f64,
    pub max_energy_excursion: f64,
    pub bounded: bool,
}

fn momentum_residual(m: &MassTriple, state: &PhaseState, target: &AngularMomentum4) -> DVector<f64> {
    let l = state.angular_momentum_matrix();
    let t = target.matrix();
    let ptot = state.total_momentum();
    let com = state.centre_of_mass(m);
    let mut r = DVector::zeros(14);
    for (k, &(a, b)) in MOMENTUM_ENTRIES.iter().enumerate() {
        r[k] = t[a][b] - l[a][b];
    }
    for d in 0..4 {
        r[6 + d] = -ptot[d];
        r[10 + d] = -com[d];
    }
    r
}

/// Smallest change of positions and momenta, in units of their typical
/// sizes, that restores the angular momentum `target` with the centre of
/// mass at rest at the origin.
///
/// Momenta alone cannot do it: three bodies span a plane and the momentum
/// they carry has no component on the orthogonal plane, so the positions
/// must follow. Gauss-Newton with minimum-norm steps.
pub fn project_momentum(m: &MassTriple, state: &PhaseState, target: &AngularMomentum4) -> Result<PhaseState> {
    let mass = m.masses();
    let q_scale = state.q.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let p_scale = state.p.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let size = target.norm_sq().sqrt().max(q_scale * p_scale);
    let scaled = |r: &DVector<f64>| {
        let mut n: f64 = 0.0;
        for k in 0..14 {
            let unit = if k < 6 { size } else if k < 10 { p_scale } else { q_scale };
            n = n.max(r[k].abs() / unit);
        }
        n
    };
    let mut out = *state;
    for _ in 0..20 {
        let r = momentum_residual(m, &out, target);
        if scaled(&r) <= 1e-15 {
            return Ok(out);
        }
        // Columns 0..12 move q (times q_scale), 12..24 move p (times p_scale).
        let mut a = DMatrix::<f64>::zeros(14, 24);
        for (k, &(rw, c)) in MOMENTUM_ENTRIES.iter().enumerate() {
            for i in 0..3 {
                a[(k, 4 * i + rw)] += out.p[i][c] * q_scale;
                a[(k, 4 * i + c)] -= out.p[i][rw] * q_scale;
                a[(k, 12 + 4 * i + c)] += out.q[i][rw] * p_scale;
                a[(k, 12 + 4 * i + rw)] -= out.q[i][c] * p_scale;
            }
        }
        for d in 0..4 {
            for i in 0..3 {
                a[(6 + d, 12 + 4 * i + d)] = p_scale;
                a[(10 + d, 4 * i + d)] = mass[i] * q_scale / m.total();
            }
        }
        let step = a.svd(true, true).solve(&r, 1e-13).map_err(|e| Error::Domain(e.to_string()))?;
        for i in 0..3 {
            for d in 0..4 {
                out.q[i][d] += step[4 * i + d] * q_scale;
                out.p[i][d] += step[12 + 4 * i + d] * p_scale;
            }
        }
    }
    let r = momentum_residual(m, &out, target);
    if scaled(&r) <= 1e-13 {
        Ok(out)
    } else {
        Err(Error::Domain(format!("momentum projection did not converge, residual {:e}", scaled(&r))))
    }
}

/// Gaussian perturbation of relative size `eps` on positions and momenta,
/// recentred and then projected back to the momentum of `state`.
pub fn perturb_fixed_momentum(m: &MassTriple, state: &PhaseState, eps: f64, rng: &mut ChaCha8Rng) -> Result<PhaseState> {
    let target = AngularMomentum4::from_matrix(state.angular_momentum_matrix())?;
    let q_scale = state.q.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let p_scale = state.p.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = *state;
    for i in 0..3 {
        for d in 0..4 {
            let zq: f64 = StandardNormal.sample(rng);
            let zp: f64 = StandardNormal.sample(rng);
            out.q[i][d] += eps * q_scale * zq;
            out.p[i][d] += eps * p_scale * zp;
        }
    }
    project_momentum(m, &out.centered(m), &target)
}

fn run_trial(m: &MassTriple, eq: &BalancedEquilibrium, cfg: &ProbeConfig, period: f64, index: usize) -> TrialOutcome {
    let mut outcome = TrialOutcome {
        index,
        max_shape_deviation: f64::NAN,
        max_energy_excursion: f64::NAN,
        momentum_mismatch: f64::NAN,
        min_area2: f64::NAN,
        min_wedge: f64::NAN,
        min_collision_slack: f64::NAN,
        energy_drift: f64::NAN,
        momentum_drift: f64::NAN,
        bounded: false,
        failure: None,
    };
    let base = embed_r4(eq, 0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let start = match perturb_fixed_momentum(m, &base, cfg.eps, &mut rng) {
        Ok(s) => s,
        Err(e) => {
            outcome.failure = Some(e.to_string());
            return outcome;
        }
    };
    let target = AngularMomentum4::from_entries(
        MOMENTUM_ENTRIES.map(|(r, c)| base.angular_momentum_matrix()[r][c]),
    );
    let l_start = start.angular_momentum_matrix();
    let mismatch = MOMENTUM_ENTRIES
        .iter()
        .map(|&(r, c)| (l_start[r][c] - target.matrix()[r][c]).powi(2))
        .sum::<f64>()
        .sqrt();
    outcome.momentum_mismatch = mismatch / target.norm_sq().sqrt();

    let samples = ((cfg.periods * cfg.samples_per_period as f64).ceil() as usize).max(1);
    let opts = IntegrateOptions { tol: cfg.tol, samples, period: Some(period) };
    let report = match integrate_with(m, &start, cfg.periods * period, &opts) {
        Ok(r) => r,
        Err(e) => {
            outcome.failure = Some(e.to_string());
            return outcome;
        }
    };
    let eq_sides = eq.shape.sides();
    let eq_dist = eq.shape.distances();
    let size = eq_sides.iter().copied().fold(0.0, f64::max);
    let h_eq = eq.energy();
    let d_l = eq.mu1.min(eq.mu2);
    let mut dev: f64 = 0.0;
    let mut excursion: f64 = 0.0;
    let mut bounded = report.completed();
    for s in &report.samples {
        let d = s.state.distances();
        for i in 0..3 {
            dev = dev.max((d[i] * d[i] - eq_sides[i]).abs() / size);
            if !(0.5 * eq_dist[i]..=2.0 * eq_dist[i]).contains(&d[i]) {
                bounded = false;
            }
        }
        if let Ok(h) = hamiltonian(m, &s.state) {
            excursion = excursion.max((h - h_eq).abs() / h_eq.abs());
        }
    }
    outcome.max_shape_deviation = dev;
    outcome.max_energy_excursion = excursion;
    outcome.min_area2 = report.min_area2;
    outcome.min_wedge = report.min_wedge;
    outcome.min_collision_slack = report.min_pair_momentum.iter().copied().fold(f64::INFINITY, f64::min) - d_l;
    outcome.energy_drift = report.energy_drift;
    outcome.momentum_drift = report.max_momentum_drift();
    outcome.bounded = bounded;
    outcome.failure = report.aborted.clone();
    outcome
}

/// Integrates `trials` perturbations of the equilibrium (placed at zero
/// phase) for `periods` rotation periods each.
///
/// Trials are independent and seeded by `(seed, trial index)`, so the report
/// does not depend on the execution mode.
pub fn stability_probe(m: &MassTriple, eq: &BalancedEquilibrium, cfg: &ProbeConfig, exec: Execution) -> Result<StabilityReport> {
    if !(cfg.eps >= 0.0 && cfg.eps <= 1e-2) {
        return Err(Error::Domain(format!("perturbation size {} outside [0, 1e-2]", cfg.eps)));
    }
    if !(cfg.periods > 0.0) || cfg.samples_per_period == 0 {
        return Err(Error::Domain("probe needs a positive duration and sampling".into()));
    }
    let period = eq.period();
    let trials = par::map_range(exec, cfg.trials, |i| run_trial(m, eq, cfg, period, i));
    let max_shape_deviation = trials.iter().map(|t| t.max_shape_deviation).fold(0.0, f64::max);
    let max_energy_excursion = trials.iter().map(|t| t.max_energy_excursion).fold(0.0, f64::max);
    let bounded = trials.iter().all(|t| t.bounded);
    Ok(StabilityReport { config: *cfg, period, trials, max_shape_deviation, max_energy_excursion, bounded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::lift;
    use crate::shape::Shape;

    fn seed_state() -> (MassTriple, PhaseState) {
        let m = MassTriple::equal(1.0).unwrap();
        let eq = lift(&m, &Shape::new(1.0, 1.0, 0.64).unwrap(), 1.0).unwrap();
        (m, embed_r4(&eq, 0.3, 0.1))
    }

    #[test]
    fn projection_restores_momentum() {
        let (m, st) = seed_state();
        let target = AngularMomentum4::from_matrix(st.angular_momentum_matrix()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = perturb_fixed_momentum(&m, &st, 1e-3, &mut rng).unwrap();
            let r = momentum_residual(&m, &p, &target);
            assert!(r.rows(0, 10).amax() <= 1e-13 * target.norm_sq().sqrt(), "{}", r.amax());
            assert!(p.centre_of_mass(&m).iter().all(|v| v.abs() < 1e-14));
            let moved: f64 = (0..3).flat_map(|i| (0..4).map(move |d| (i, d))).map(|(i, d)| (p.q[i][d] - st.q[i][d]).abs()).sum();
            assert!(moved > 0.0);
        }
    }

    #[test]
    fn trials_do_not_depend_on_execution() {
        let m = MassTriple::equal(1.0).unwrap();
        let eq = lift(&m, &Shape::new(1.0, 1.0, 0.64).unwrap(), 1.0).unwrap();
        let cfg = ProbeConfig { periods: 2.0, trials: 3, tol: 1e-10, ..ProbeConfig::default() };
        let a = stability_probe(&m, &eq, &cfg, Execution::Sequential).unwrap();
        let b = stability_probe(&m, &eq, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.bounded);
        assert!(stability_probe(&m, &eq, &ProbeConfig { eps: 0.5, ..cfg }, Execution::Sequential).is_err());
    }
}
