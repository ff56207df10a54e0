//! Solvers for coupled unsaturated flow and reactive solute transport in
//! porous media, with play-type hysteresis and dynamic capillarity in the
//! pressure-saturation relation.
//!
//! The flow pair (pressure head, water content) and the transport equation
//! are discretized by backward Euler in time and cell-centered two-point
//! flux approximation on uniform grids of the unit square. The nonlinear
//! systems of each time step can be solved monolithically or by splitting
//! (nonlinear or alternate linearized), each linearized by Newton or the
//! L-scheme, optionally wrapped in Anderson acceleration.
//!
//! Modules:
//! - [`grid`]: uniform cell-centered meshes and face connectivity
//! - [`constitutive`]: model functions and the regularized sign graph
//! - [`assembly`]: residuals and per-scheme linear systems
//! - [`linalg`]: sparse direct solves and L1 condition numbers
//! - [`anderson`]: Anderson acceleration of fixed-point loops
//! - [`solvers`]: time stepping, scheme orchestration, reporting
//! - [`mms`]: manufactured solutions, error norms, the physical test case

pub mod anderson;
pub mod assembly;
pub mod constitutive;
pub mod grid;
pub mod linalg;
pub mod mms;
pub mod solvers;

pub use anderson::AndersonState;
pub use assembly::{
    assemble_flow_subsystem, assemble_ls_mono, assemble_newton_mono,
    assemble_transport_subsystem, residual_flow, residual_transport, BoundarySpec, DiscreteState,
    LParams, LinearSystem, Linearization, Problem, SideCondition, SourceSpec,
};
pub use constitutive::{ConstitutiveSet, TauKind, VanGenuchtenParams, VgPcapForm};
pub use grid::{build_grid, Side, StructuredGrid};
pub use linalg::{cond1, solve_direct, CondStats, SparseMatrix};
pub use mms::{eoc, error_norms, ManufacturedCase, PhysicalCase};
pub use solvers::{
    check_stop, ord_per_iteration, run_simulation, Coupling, FailureCause, LinKind, RunReport,
    SchemeConfig,
};
