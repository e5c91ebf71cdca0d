//! Reference solutions and audits: exact Riemann solver, Sedov similarity
//! solution, planar Noh solution, conservation totals and the scaling
//! efficiency formula.

mod audit;
mod efficiency;
mod noh;
mod riemann;
mod sedov;

pub use audit::{combine_partials, conservation_audit, local_partials, AuditPartials, ConservationTotals};
pub use efficiency::{efficiency, ScalingMode, ScalingRecord};
pub use noh::{noh_exact, noh_rh_residual, noh_shock_position};
pub use riemann::{riemann_exact, riemann_solve, rh_residual, Primitive, RiemannSolution, Wave};
pub use sedov::{sedov_profile, sedov_shock_radius, sedov_xi0, SedovPoint};
