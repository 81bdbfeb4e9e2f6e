//! Balanced configurations and relative equilibria of the Newtonian
//! three-body problem in ℝ⁴.
//!
//! - [`shape`]: masses, triangle shapes, inertia, area and potential.
//! - [`balance`]: the balance determinant, its roots and the three families.
//! - [`equilibrium`]: lifting to relative equilibria, `(h, k)` diagrams,
//!   cusps and tangencies.
//! - [`closed_forms`]: the equilateral and isosceles families.
//! - [`dynamics`]: integration, conservation monitoring, stability probes.
//!
//! The gravitational constant is 1.

pub mod balance;
pub mod closed_forms;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod par;
pub mod shape;

pub use error::{Error, Result};
pub use par::Execution;
