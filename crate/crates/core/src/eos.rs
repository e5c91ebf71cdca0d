//! Equations of state and the Steinberg strength formulas.
//!
//! Each material carries an ideal-gas γ and, optionally, Steinberg shear and
//! yield constants. Mixed cells close with a volume-fraction weighted
//! pressure, each material evaluated on its own density and energy.
//!
//! In [`steinberg_shear`] the compression ratio is `η = ρ0/ρ`, not the
//! textbook `ρ/ρ0`; this matches the reference implementation of the model.

use crate::error::{Result, SaleError};

/// Specific heat used for the temperature diagnostic, `T = e / cv`.
pub const SPECIFIC_HEAT: f64 = 1.0;

/// Steinberg shear-modulus and yield constants of one material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Steinberg {
    pub g0: f64,
    pub gp: f64,
    pub gt: f64,
    pub y0: f64,
    pub beta: f64,
    pub n: f64,
    pub ymax: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub gamma: f64,
    /// Reference density.
    pub rho0: f64,
    pub strength: Option<Steinberg>,
}

impl Material {
    pub fn ideal_gas(name: &str, gamma: f64, rho0: f64) -> Self {
        Self { name: name.to_string(), gamma, rho0, strength: None }
    }
}

/// The materials of a problem, indexed by position.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialSet {
    materials: Vec<Material>,
}

impl MaterialSet {
    pub fn new(materials: Vec<Material>) -> Result<Self> {
        if materials.is_empty() {
            return Err(SaleError::ZeroMaterials);
        }
        for m in &materials {
            if !(m.gamma > 1.0) {
                return Err(SaleError::DegenerateState(format!(
                    "material '{}': gamma must exceed 1, got {}",
                    m.name, m.gamma
                )));
            }
            if !(m.rho0 > 0.0) {
                return Err(SaleError::DegenerateState(format!(
                    "material '{}': reference density must be positive",
                    m.name
                )));
            }
            if let Some(s) = &m.strength {
                if !(s.ymax >= s.y0 && s.y0 >= 0.0 && s.g0 > 0.0) {
                    return Err(SaleError::DegenerateState(format!(
                        "material '{}': Steinberg constants need ymax >= y0 >= 0 and g0 > 0",
                        m.name
                    )));
                }
            }
        }
        Ok(Self { materials })
    }

    pub fn single(gamma: f64) -> Self {
        Self::new(vec![Material::ideal_gas("gas", gamma, 1.0)]).expect("valid gamma")
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn get(&self, m: usize) -> &Material {
        &self.materials[m]
    }

    pub fn gamma(&self, m: usize) -> f64 {
        self.materials[m].gamma
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.iter()
    }
}

/// Thermodynamic state of one cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellThermo {
    pub fraction: Vec<f64>,
    pub density: Vec<f64>,
    pub energy: Vec<f64>,
    pub mass: Vec<f64>,
    pub pressure: f64,
    pub sound_speed: f64,
    pub temperature: f64,
    pub init_temperature: f64,
    pub plastic_strain: f64,
}

/// Ideal-gas pressure `(γ − 1) ρ e`.
#[inline(always)]
pub fn eos_pressure(rho: f64, e: f64, gamma: f64) -> f64 {
    (gamma - 1.0) * rho * e
}

/// Specific internal energy for a given pressure.
pub fn eos_energy(rho: f64, p: f64, gamma: f64) -> Result<f64> {
    if rho == 0.0 {
        return Err(SaleError::DegenerateState("eos_energy at zero density".into()));
    }
    Ok(p / ((gamma - 1.0) * rho))
}

/// Adiabatic sound speed, zero for non-positive pressure.
pub fn sound_speed(rho: f64, p: f64, gamma: f64) -> Result<f64> {
    if rho == 0.0 {
        return Err(SaleError::DegenerateState("sound speed at zero density".into()));
    }
    Ok((gamma * p.max(0.0) / rho).sqrt())
}

/// `G0 + GP·p·η^(1/3) + GT·(T − T_init)` with `η = ρ0/ρ`.
pub fn steinberg_shear(s: &Steinberg, p: f64, rho: f64, rho0: f64, t: f64, t_init: f64) -> f64 {
    let eta = rho0 / rho;
    s.g0 + s.gp * p * eta.cbrt() + s.gt * (t - t_init)
}

/// `min(Y0·(1 + β·ε_p)^N, Ymax) · shear/G0`.
pub fn steinberg_yield(s: &Steinberg, plastic_strain: f64, shear: f64) -> f64 {
    let hardened = s.y0 * (1.0 + s.beta * plastic_strain).powf(s.n);
    hardened.min(s.ymax) * (shear / s.g0)
}

/// Volume-fraction weighted pressure and sound speed of a cell from
/// per-material `(f_m, ρ_m, e_m)`. Materials with zero fraction are skipped,
/// so a pure cell reproduces its material's pressure exactly.
#[inline]
pub fn mixed_state(
    set: &MaterialSet,
    fraction: &[f64],
    density: &[f64],
    energy: &[f64],
) -> Result<(f64, f64)> {
    let mut p = 0.0;
    let mut c2 = 0.0;
    let mut any = false;
    for m in 0..set.len() {
        let f = fraction[m];
        if f <= 0.0 {
            continue;
        }
        any = true;
        let g = set.gamma(m);
        let rho = density[m];
        if !(rho > 0.0) {
            return Err(SaleError::DegenerateState(format!(
                "material {m} has volume fraction {f} but density {rho}"
            )));
        }
        let pm = eos_pressure(rho, energy[m], g);
        if f == 1.0 {
            p = pm;
        } else {
            p += f * pm;
        }
        c2 += f * g * pm.max(0.0) / rho;
    }
    if !any {
        return Err(SaleError::EmptyCell { cell: [0; 3] });
    }
    Ok((p, c2.sqrt()))
}

/// Cell pressure under the volume-fraction closure.
pub fn mixed_cell_pressure(cell: &CellThermo, set: &MaterialSet) -> Result<f64> {
    mixed_state(set, &cell.fraction, &cell.density, &cell.energy).map(|(p, _)| p)
}

/// Fill `cell.pressure`, `cell.sound_speed` and `cell.temperature`.
pub fn refresh_cell(cell: &mut CellThermo, set: &MaterialSet) -> Result<()> {
    let (p, c) = mixed_state(set, &cell.fraction, &cell.density, &cell.energy)?;
    cell.pressure = p;
    cell.sound_speed = c;
    let mass: f64 = cell.mass.iter().sum();
    cell.temperature = if mass > 0.0 {
        cell.mass.iter().zip(&cell.energy).map(|(m, e)| m * e).sum::<f64>() / (mass * SPECIFIC_HEAT)
    } else {
        0.0
    };
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn ideal_gas_examples() {
        assert_eq!(eos_pressure(1.0, 0.0, 1.4), 0.0);
        assert!(close(eos_pressure(1.0, 2.5, 1.4), 1.0, 1e-15));
        assert!(close(eos_pressure(0.125, 2.0, 1.4), 0.1, 1e-15));
        assert_eq!(eos_energy(1.0, 0.0, 1.4).unwrap(), 0.0);
        assert!(close(eos_energy(1.0, 1.0, 1.4).unwrap(), 2.5, 1e-15));
        let p = eos_pressure(0.7, 1.3, 1.4);
        assert!(close(eos_energy(0.7, p, 1.4).unwrap(), 1.3, 1e-14));
        assert!(matches!(eos_energy(0.0, 1.0, 1.4), Err(SaleError::DegenerateState(_))));
    }

    #[test]
    fn sound_speed_examples() {
        assert_eq!(sound_speed(1.0, 0.0, 1.4).unwrap(), 0.0);
        assert_eq!(sound_speed(1.0, -1.0, 1.4).unwrap(), 0.0);
        assert!(close(sound_speed(1.0, 1.0, 1.4).unwrap(), 1.4f64.sqrt(), 1e-15));
        assert!(close(sound_speed(1.0, 5.0 / 3.0, 5.0 / 3.0).unwrap(), 5.0 / 3.0, 1e-15));
        assert!(sound_speed(0.0, 1.0, 1.4).is_err());
    }

    fn st(g0: f64, gp: f64, gt: f64, y0: f64, beta: f64, n: f64, ymax: f64) -> Steinberg {
        Steinberg { g0, gp, gt, y0, beta, n, ymax }
    }

    #[test]
    fn steinberg_examples() {
        let s = st(3.0, 2.0, 0.5, 1.0, 1.0, 2.0, 10.0);
        assert_eq!(steinberg_shear(&s, 0.0, 1.0, 1.0, 4.0, 4.0), 3.0);
        let s = st(1.0, 2.0, 0.0, 1.0, 1.0, 2.0, 10.0);
        assert!(close(steinberg_shear(&s, 1.0, 1.0, 8.0, 0.0, 0.0), 5.0, 1e-15));
        let s = st(1.0, 0.0, 0.5, 1.0, 1.0, 2.0, 10.0);
        assert_eq!(steinberg_shear(&s, 7.0, 2.0, 1.0, 3.0, 1.0), 2.0);

        let s = st(1.0, 0.0, 0.0, 1.0, 1.0, 2.0, 10.0);
        assert_eq!(steinberg_yield(&s, 0.0, 1.0), 1.0);
        assert_eq!(steinberg_yield(&s, 1.0, 1.0), 4.0);
        assert_eq!(steinberg_yield(&s, 9.0, 1.0), 10.0);
    }

    #[test]
    fn mixed_cell_examples() {
        let two = MaterialSet::new(vec![
            Material::ideal_gas("a", 1.4, 1.0),
            Material::ideal_gas("b", 1.4, 1.0),
        ])
        .unwrap();
        let pure = CellThermo {
            fraction: vec![1.0, 0.0],
            density: vec![0.3, 0.0],
            energy: vec![2.2, 0.0],
            ..Default::default()
        };
        assert_eq!(mixed_cell_pressure(&pure, &two).unwrap(), eos_pressure(0.3, 2.2, 1.4));

        let half = CellThermo {
            fraction: vec![0.5, 0.5],
            density: vec![0.3, 0.3],
            energy: vec![2.2, 2.2],
            ..Default::default()
        };
        assert!(close(mixed_cell_pressure(&half, &two).unwrap(), eos_pressure(0.3, 2.2, 1.4), 1e-15));

        // p_0 = 4 from ρ = 1, e = 10; p_1 = 0
        let split = CellThermo {
            fraction: vec![0.25, 0.75],
            density: vec![1.0, 1.0],
            energy: vec![10.0, 0.0],
            ..Default::default()
        };
        assert!(close(mixed_cell_pressure(&split, &two).unwrap(), 1.0, 1e-15));

        let empty = CellThermo {
            fraction: vec![0.0, 0.0],
            density: vec![1.0, 1.0],
            energy: vec![1.0, 1.0],
            ..Default::default()
        };
        assert!(matches!(mixed_cell_pressure(&empty, &two), Err(SaleError::EmptyCell { .. })));
    }

    #[test]
    fn refresh_sets_temperature_from_energy() {
        let set = MaterialSet::single(1.4);
        let mut c = CellThermo {
            fraction: vec![1.0],
            density: vec![2.0],
            energy: vec![3.0],
            mass: vec![0.5],
            ..Default::default()
        };
        refresh_cell(&mut c, &set).unwrap();
        assert!(close(c.pressure, 2.4, 1e-15));
        assert!(close(c.sound_speed, (1.4f64 * 2.4 / 2.0).sqrt(), 1e-15));
        assert_eq!(c.temperature, 3.0);
    }

    #[test]
    fn invalid_materials_rejected() {
        assert!(matches!(MaterialSet::new(vec![]), Err(SaleError::ZeroMaterials)));
        assert!(MaterialSet::new(vec![Material::ideal_gas("x", 1.0, 1.0)]).is_err());
        let mut m = Material::ideal_gas("s", 1.4, 1.0);
        m.strength = Some(st(1.0, 0.0, 0.0, 2.0, 0.0, 1.0, 1.0));
        assert!(MaterialSet::new(vec![m]).is_err());
    }
}
