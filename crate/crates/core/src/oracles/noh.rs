use super::riemann::{rh_residual, Primitive};

/// Position of the planar Noh shock for unit inflow speed.
pub fn noh_shock_position(gamma: f64, t: f64) -> f64 {
    0.5 * (gamma - 1.0) * t
}

/// Planar Noh solution with unit inflow toward a wall at `x = 0`. The
/// upstream gas is cold (`p = 0`).
pub fn noh_exact(rho0: f64, gamma: f64, t: f64, x: f64) -> Primitive {
    if x < noh_shock_position(gamma, t) {
        Primitive { rho: rho0 * (gamma + 1.0) / (gamma - 1.0), u: 0.0, p: 0.5 * rho0 * (gamma + 1.0) }
    } else {
        Primitive { rho: rho0, u: -1.0, p: 0.0 }
    }
}

/// Rankine-Hugoniot residual across the Noh shock: the solution's
/// built-in self-check.
pub fn noh_rh_residual(rho0: f64, gamma: f64) -> f64 {
    let post = noh_exact(rho0, gamma, 1.0, 0.0);
    let pre = noh_exact(rho0, gamma, 1.0, f64::INFINITY);
    rh_residual(pre, post, 0.5 * (gamma - 1.0), gamma)
}
