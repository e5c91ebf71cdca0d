//! Self-similar Sedov-Taylor solution for a point blast in a uniform gas,
//! spherical geometry.
//!
//! With `λ = r/R(t)`, `ρ = ρ0·g`, `u = Ṙ·v`, `p = ρ0·Ṙ²·h`, the Euler
//! equations reduce to three ODEs in `λ`. They are integrated inward from
//! the strong-shock state at `λ = 1` with classical RK4, and the energy
//! integral fixes the constant in `R = ξ0·(E·t²/ρ0)^(1/5)`.

use std::sync::{Mutex, OnceLock};

use crate::error::{Result, SaleError};

/// Similarity profile sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SedovPoint {
    pub lambda: f64,
    pub g: f64,
    pub v: f64,
    pub h: f64,
}

/// Hard floor for the inward integration.
const LAMBDA_MIN: f64 = 1e-6;

fn rhs(lambda: f64, y: [f64; 3], gamma: f64) -> [f64; 3] {
    let [g, v, h] = y;
    let w = v - lambda;
    let b = (1.5 * v - (h / g) * (3.0 - 2.0 * gamma * v / lambda) / w) / (w - gamma * h / (g * w));
    let a = (-2.0 * g * v / lambda - g * b) / w;
    let c = h * (3.0 / w + gamma * a / g);
    [a, b, c]
}

fn shock_state(gamma: f64) -> [f64; 3] {
    [(gamma + 1.0) / (gamma - 1.0), 2.0 / (gamma + 1.0), 2.0 / (gamma + 1.0)]
}

/// Integrate from `λ = 1` inward in `steps` uniform steps of `ln λ`,
/// returning the profile and the energy integral
/// `∫ (g·v²/2 + h/(γ−1))·λ² dλ`. The energy integral rides along as a
/// fourth RK4 component.
///
/// The inward integration is unstable once `g` is negligible (the central
/// region is a hot, nearly empty core at uniform pressure), so it stops at
/// `g < 1e-12·g_shock` and the core adds `h·λ³/(3(γ−1))`.
fn integrate(gamma: f64, steps: usize) -> (Vec<SedovPoint>, f64) {
    let s_end = LAMBDA_MIN.ln();
    let ds = s_end / steps as f64;
    // d/ds = λ·d/dλ
    let f = |s: f64, y: [f64; 4]| {
        let l = s.exp();
        let d = rhs(l, [y[0], y[1], y[2]], gamma);
        let e = (0.5 * y[0] * y[1] * y[1] + y[2] / (gamma - 1.0)) * l * l * l;
        [l * d[0], l * d[1], l * d[2], -e]
    };
    let [g0, v0, h0] = shock_state(gamma);
    let mut y = [g0, v0, h0, 0.0];
    let mut s = 0.0;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(SedovPoint { lambda: 1.0, g: y[0], v: y[1], h: y[2] });
    for _ in 0..steps {
        let k1 = f(s, y);
        let y2 = std::array::from_fn(|i| y[i] + 0.5 * ds * k1[i]);
        let k2 = f(s + 0.5 * ds, y2);
        let y3 = std::array::from_fn(|i| y[i] + 0.5 * ds * k2[i]);
        let k3 = f(s + 0.5 * ds, y3);
        let y4 = std::array::from_fn(|i| y[i] + ds * k3[i]);
        let k4 = f(s + ds, y4);
        y = std::array::from_fn(|i| y[i] + ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        s += ds;
        out.push(SedovPoint { lambda: s.exp(), g: y[0], v: y[1], h: y[2] });
        if y[0] < 1e-12 * g0 {
            break;
        }
    }
    let l = s.exp();
    let core = y[2] * l * l * l / (3.0 * (gamma - 1.0));
    (out, y[3] + core)
}

fn compute_xi0(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(SaleError::Contract(format!("Sedov oracle needs gamma > 1, got {gamma}")));
    }
    let xi = |steps| {
        let (_, i) = integrate(gamma, steps);
        (16.0 * std::f64::consts::PI / 25.0 * i).powf(-0.2)
    };
    let (coarse, fine) = (xi(4000), xi(8000));
    if !(fine.is_finite() && coarse.is_finite()) || (fine - coarse).abs() > 1e-7 * fine {
        return Err(SaleError::NonConvergence(format!(
            "Sedov constant for gamma {gamma}: {coarse} vs {fine}"
        )));
    }
    Ok(fine)
}

/// Dimensionless shock-radius constant `ξ0(γ)`, integrated once per `γ`.
pub fn sedov_xi0(gamma: f64) -> Result<f64> {
    static CACHE: OnceLock<Mutex<Vec<(u64, f64)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let key = gamma.to_bits();
    if let Some((_, v)) = cache.lock().expect("cache").iter().find(|(k, _)| *k == key) {
        return Ok(*v);
    }
    let v = compute_xi0(gamma)?;
    cache.lock().expect("cache").push((key, v));
    Ok(v)
}

/// Shock radius of a spherical blast of energy `e0` at time `t`.
pub fn sedov_shock_radius(e0: f64, rho0: f64, gamma: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && e0 > 0.0 && rho0 > 0.0) {
        return Err(SaleError::Contract("Sedov radius needs positive t, E0, rho0".into()));
    }
    Ok(sedov_xi0(gamma)? * (e0 * t * t / rho0).powf(0.2))
}

/// Similarity profile from the shock (`λ = 1`) inward.
pub fn sedov_profile(gamma: f64, steps: usize) -> Vec<SedovPoint> {
    integrate(gamma, steps).0
}
