//! Direct integration of the three-body problem in ℝ⁴ with conservation and
//! geometry monitoring.

mod integrator;
mod monitor;
mod probe;
mod state;

pub use integrator::{integrate, integrate_with, natural_period, IntegrateOptions, TrajectoryReport, TrajectorySample};
pub use monitor::{collision_bound_check, syzygy_monitor, CollisionBound, SyzygyReport};
pub use probe::{perturb_fixed_momentum, project_momentum, stability_probe, ProbeConfig, StabilityReport, TrialOutcome};
pub use state::{forces, hamiltonian, kinetic_energy, potential_energy, JacobiDecomposition, PhaseState, Vec4};
