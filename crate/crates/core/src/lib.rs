//! Finite-element machinery for stabilizing the 2D viscous Burgers equation
//! to a steady state with nonlinear Neumann boundary feedback.
//!
//! The crate is organized bottom-up:
//!
//! - [`mesh`]: structured triangulations of the unit square (and imported
//!   convex polygons) with tagged boundary edges and O(1) point location.
//! - [`linalg`]: CSR sparse operators, a banded direct LU and BiCGStab.
//! - [`assembly`]: P1 mass/stiffness/drift and boundary operators, loads,
//!   and the H¹ projection of initial data.
//! - [`transport`]: the semi-Lagrangian characteristics step that moves the
//!   nonlinear advection term to the right-hand side.
//! - [`stepper`]: the semi-implicit characteristic-Galerkin time step and
//!   full runs under the selectable control modes.
//! - [`observables`]: norms, Lyapunov energy, control traces, decay-rate
//!   fits and cross-mesh error measurement.
//! - [`harness`]: canned experiments and mesh-refinement convergence studies
//!   with CSV / report output.

pub mod assembly;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod observables;
pub mod stepper;
pub mod transport;

pub use assembly::{Field, PhysicsParams, ProjectionConfig};
pub use error::{Error, Result};
pub use linalg::{SolverConfig, SolverMethod, SparseOperator};
pub use mesh::{BoundaryTag, Mesh, Side};
pub use observables::{StabilityBounds, TimeSeries};
pub use stepper::{ControlMode, ForcedProblem, InitialField, RunConfig};
