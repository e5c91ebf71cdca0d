//! Exact solution of the one-dimensional Riemann problem for an ideal gas.
//!
//! The star pressure is the root of the usual pressure function
//! `f_L(p) + f_R(p) + (u_R − u_L)`, found by safeguarded Newton iteration;
//! the solution is then sampled along `ξ = x/t`.

use crate::error::{Result, SaleError};

/// Density, velocity, pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    Shock,
    Rarefaction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannSolution {
    pub left: Primitive,
    pub right: Primitive,
    pub gamma: f64,
    pub p_star: f64,
    pub u_star: f64,
    pub left_wave: Wave,
    pub right_wave: Wave,
}

fn sound(s: &Primitive, g: f64) -> f64 {
    (g * s.p / s.rho).sqrt()
}

/// Pressure function of one side and its derivative.
fn side_function(p: f64, s: &Primitive, g: f64) -> (f64, f64) {
    if p > s.p {
        let a = 2.0 / ((g + 1.0) * s.rho);
        let b = (g - 1.0) / (g + 1.0) * s.p;
        let q = (a / (p + b)).sqrt();
        ((p - s.p) * q, q * (1.0 - 0.5 * (p - s.p) / (b + p)))
    } else {
        let c = sound(s, g);
        let r = (p / s.p).powf((g - 1.0) / (2.0 * g));
        (2.0 * c / (g - 1.0) * (r - 1.0), (p / s.p).powf(-(g + 1.0) / (2.0 * g)) / (s.rho * c))
    }
}

/// Solve for the star state.
pub fn riemann_solve(left: Primitive, right: Primitive, gamma: f64) -> Result<RiemannSolution> {
    let g = gamma;
    for s in [&left, &right] {
        if !(s.rho > 0.0 && s.p > 0.0) || !(g > 1.0) {
            return Err(SaleError::Contract(format!("Riemann state {s:?} with gamma {g}")));
        }
    }
    let (cl, cr) = (sound(&left, g), sound(&right, g));
    let du = right.u - left.u;
    if 2.0 / (g - 1.0) * (cl + cr) <= du {
        return Err(SaleError::Vacuum);
    }
    let f = |p: f64| {
        let (fl, dl) = side_function(p, &left, g);
        let (fr, dr) = side_function(p, &right, g);
        (fl + fr + du, dl + dr)
    };
    // two-rarefaction guess, always positive
    let z = (g - 1.0) / (2.0 * g);
    let guess = ((cl + cr - 0.5 * (g - 1.0) * du) / (cl / left.p.powf(z) + cr / right.p.powf(z))).powf(1.0 / z);
    let scale = left.p.max(right.p);
    // bracket: f is increasing in p
    let mut lo = 0.0;
    let mut hi = guess.max(scale);
    while f(hi).0 < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(SaleError::NonConvergence("Riemann pressure bracket".into()));
        }
    }
    let mut p = guess.clamp(1e-300, hi);
    for _ in 0..200 {
        let (fp, dp) = f(p);
        if fp == 0.0 {
            break;
        }
        if fp < 0.0 {
            lo = p;
        } else {
            hi = p;
        }
        let mut next = p - fp / dp;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - p).abs() <= 1e-15 * p;
        p = next;
        if done {
            break;
        }
    }
    let (fp, _) = f(p);
    if !(fp.abs() <= 1e-12 * (1.0 + cl + cr + du.abs())) {
        return Err(SaleError::NonConvergence(format!("Riemann residual {fp:e} at p* = {p}")));
    }
    let (fl, _) = side_function(p, &left, g);
    let (fr, _) = side_function(p, &right, g);
    Ok(RiemannSolution {
        left,
        right,
        gamma,
        p_star: p,
        u_star: 0.5 * (left.u + right.u) + 0.5 * (fr - fl),
        left_wave: if p > left.p { Wave::Shock } else { Wave::Rarefaction },
        right_wave: if p > right.p { Wave::Shock } else { Wave::Rarefaction },
    })
}

impl RiemannSolution {
    /// Residual of the pressure function at the star pressure.
    pub fn residual(&self) -> f64 {
        let (fl, _) = side_function(self.p_star, &self.left, self.gamma);
        let (fr, _) = side_function(self.p_star, &self.right, self.gamma);
        fl + fr + self.right.u - self.left.u
    }

    /// Star-region density on the left (`side = 0`) or right (`side = 1`).
    pub fn star_density(&self, side: usize) -> f64 {
        let g = self.gamma;
        let (s, wave) = if side == 0 { (&self.left, self.left_wave) } else { (&self.right, self.right_wave) };
        let ratio = self.p_star / s.p;
        match wave {
            Wave::Shock => {
                let k = (g - 1.0) / (g + 1.0);
                s.rho * (ratio + k) / (k * ratio + 1.0)
            }
            Wave::Rarefaction => s.rho * ratio.powf(1.0 / g),
        }
    }

    /// Shock speed on `side`, if that wave is a shock.
    pub fn shock_speed(&self, side: usize) -> Option<f64> {
        let g = self.gamma;
        let (s, wave, sign) = if side == 0 {
            (&self.left, self.left_wave, -1.0)
        } else {
            (&self.right, self.right_wave, 1.0)
        };
        (wave == Wave::Shock).then(|| {
            let c = sound(s, g);
            let m = ((g + 1.0) / (2.0 * g) * self.p_star / s.p + (g - 1.0) / (2.0 * g)).sqrt();
            s.u + sign * c * m
        })
    }

    /// State at similarity coordinate `ξ = x/t`.
    pub fn sample(&self, xi: f64) -> Primitive {
        let g = self.gamma;
        if xi <= self.u_star {
            let s = &self.left;
            let c = sound(s, g);
            match self.left_wave {
                Wave::Shock => {
                    if xi <= self.shock_speed(0).expect("shock") {
                        *s
                    } else {
                        Primitive { rho: self.star_density(0), u: self.u_star, p: self.p_star }
                    }
                }
                Wave::Rarefaction => {
                    let c_star = c * (self.p_star / s.p).powf((g - 1.0) / (2.0 * g));
                    if xi <= s.u - c {
                        *s
                    } else if xi >= self.u_star - c_star {
                        Primitive { rho: self.star_density(0), u: self.u_star, p: self.p_star }
                    } else {
                        let k = 2.0 / (g + 1.0) + (g - 1.0) / ((g + 1.0) * c) * (s.u - xi);
                        Primitive {
                            rho: s.rho * k.powf(2.0 / (g - 1.0)),
                            u: 2.0 / (g + 1.0) * (c + 0.5 * (g - 1.0) * s.u + xi),
                            p: s.p * k.powf(2.0 * g / (g - 1.0)),
                        }
                    }
                }
            }
        } else {
            let s = &self.right;
            let c = sound(s, g);
            match self.right_wave {
                Wave::Shock => {
                    if xi >= self.shock_speed(1).expect("shock") {
                        *s
                    } else {
                        Primitive { rho: self.star_density(1), u: self.u_star, p: self.p_star }
                    }
                }
                Wave::Rarefaction => {
                    let c_star = c * (self.p_star / s.p).powf((g - 1.0) / (2.0 * g));
                    if xi >= s.u + c {
                        *s
                    } else if xi <= self.u_star + c_star {
                        Primitive { rho: self.star_density(1), u: self.u_star, p: self.p_star }
                    } else {
                        let k = 2.0 / (g + 1.0) - (g - 1.0) / ((g + 1.0) * c) * (s.u - xi);
                        Primitive {
                            rho: s.rho * k.powf(2.0 / (g - 1.0)),
                            u: 2.0 / (g + 1.0) * (-c + 0.5 * (g - 1.0) * s.u + xi),
                            p: s.p * k.powf(2.0 * g / (g - 1.0)),
                        }
                    }
                }
            }
        }
    }
}

/// Solve and sample in one call.
pub fn riemann_exact(left: Primitive, right: Primitive, gamma: f64, xi: f64) -> Result<Primitive> {
    Ok(riemann_solve(left, right, gamma)?.sample(xi))
}

/// Largest relative violation of the mass, momentum and energy jump
/// conditions across a discontinuity moving at `speed`.
pub fn rh_residual(a: Primitive, b: Primitive, speed: f64, gamma: f64) -> f64 {
    let flux = |s: &Primitive| {
        let w = s.u - speed;
        let e = s.p / ((gamma - 1.0) * s.rho);
        let h = e + s.p / s.rho + 0.5 * w * w;
        [s.rho * w, s.rho * w * w + s.p, s.rho * w * h]
    };
    let (fa, fb) = (flux(&a), flux(&b));
    (0..3)
        .map(|i| (fa[i] - fb[i]).abs() / (fa[i].abs().max(fb[i].abs()).max(1e-300)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOD_L: Primitive = Primitive { rho: 1.0, u: 0.0, p: 1.0 };
    const SOD_R: Primitive = Primitive { rho: 0.125, u: 0.0, p: 0.1 };

    #[test]
    fn sod_star_state() {
        let s = riemann_solve(SOD_L, SOD_R, 1.4).unwrap();
        assert!((s.p_star - 0.30313).abs() < 5e-6, "{}", s.p_star);
        assert!((s.u_star - 0.92745).abs() < 5e-6, "{}", s.u_star);
        assert!(s.residual().abs() <= 1e-12);
        assert_eq!((s.left_wave, s.right_wave), (Wave::Rarefaction, Wave::Shock));
    }

    #[test]
    fn equal_states_are_constant() {
        let st = Primitive { rho: 0.7, u: 0.3, p: 2.0 };
        for xi in [-5.0, -0.1, 0.0, 0.3, 4.0] {
            let q = riemann_exact(st, st, 1.4, xi).unwrap();
            assert!((q.rho - 0.7).abs() < 1e-12 && (q.u - 0.3).abs() < 1e-12 && (q.p - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn colliding_mirror_flows_stop() {
        let l = Primitive { rho: 1.0, u: 1.0, p: 1.0 };
        let r = Primitive { rho: 1.0, u: -1.0, p: 1.0 };
        let s = riemann_solve(l, r, 1.4).unwrap();
        assert!(s.u_star.abs() < 1e-14);
        assert_eq!((s.left_wave, s.right_wave), (Wave::Shock, Wave::Shock));
    }

    #[test]
    fn vacuum_is_rejected() {
        let l = Primitive { rho: 1.0, u: -20.0, p: 0.1 };
        let r = Primitive { rho: 1.0, u: 20.0, p: 0.1 };
        assert!(matches!(riemann_solve(l, r, 1.4), Err(SaleError::Vacuum)));
    }

    #[test]
    fn sod_shock_satisfies_jump_conditions() {
        let s = riemann_solve(SOD_L, SOD_R, 1.4).unwrap();
        let star = Primitive { rho: s.star_density(1), u: s.u_star, p: s.p_star };
        assert!(rh_residual(SOD_R, star, s.shock_speed(1).unwrap(), 1.4) < 1e-10);
    }
}
