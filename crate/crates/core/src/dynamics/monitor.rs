use serde::{Deserialize, Serialize};

use super::integrator::TrajectoryReport;
use super::state::JacobiDecomposition;
use crate::equilibrium::AngularMomentum4;
use crate::shape::{squared_area, Shape};

/// Closest approach to a collinear configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyzygyReport {
    pub min_area2: f64,
    /// `min |q ∧ Q|²` over samples.
    pub min_wedge: f64,
}

pub fn syzygy_monitor(report: &TrajectoryReport) -> SyzygyReport {
    let mut min_area2 = f64::INFINITY;
    let mut min_wedge = f64::INFINITY;
    for s in &report.samples {
        let d = s.state.distances();
        if let Ok(shape) = Shape::from_distances(d[0], d[1], d[2]) {
            min_area2 = min_area2.min(squared_area(&shape).max(0.0));
        } else {
            min_area2 = 0.0;
        }
        min_wedge = min_wedge.min(JacobiDecomposition::new(&report.masses, &s.state).wedge_norm2());
    }
    SyzygyReport { min_area2, min_wedge }
}

/// Margin in the estimate `|p|·d_pair ≥ d_L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionBound {
    /// `min(μ1, μ2)` of the angular momentum.
    pub d_l: f64,
    /// `min (|p|·d_pair − d_L)` over samples and the three pairings.
    pub min_slack: f64,
    /// `d_L = 0`: the bound says nothing.
    pub vacuous: bool,
}

pub fn collision_bound_check(report: &TrajectoryReport, l: &AngularMomentum4) -> CollisionBound {
    let d_l = l.invariants().d_l;
    let mut min_slack = f64::INFINITY;
    for s in &report.samples {
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let jac = JacobiDecomposition::for_pair(&report.masses, &s.state, i, j);
            min_slack = min_slack.min(jac.pair_momentum_distance() - d_l);
        }
    }
    CollisionBound { d_l, min_slack, vacuous: l.invariants().rank < 4 }
}
