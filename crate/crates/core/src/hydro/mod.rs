//! Staggered-grid Lagrangian hydrodynamics.
//!
//! Thermodynamic quantities live at cell centers, positions and velocities
//! at vertices. Forces are the compatible corner forces `P_c ∇_v V_c`, with
//! `P = max(p, 0) + q`, and the internal energy change of a cell is minus the
//! work its corner forces do on the time-centered vertex velocities. Total
//! energy (internal plus vertex kinetic) is therefore conserved to round-off.
//!
//! No hourglass control is applied.

mod lagrange;
mod state;

pub use lagrange::{
    advance_kinematics, apply_boundary, apply_velocity_bc, compute_dt, compute_forces,
    compute_viscosity, finish_dt, lagrangian_cycle, local_dt, refresh_eos, strength_diagnostics,
    update_thermo, viscosity_from_jump,
};
pub(crate) use state::gather_plan;
pub use state::{
    tags, BoundarySpec, ExchangeMode, FaceCondition, HydroParams, Rezone, SimulationState,
    MAX_MATERIALS,
};
