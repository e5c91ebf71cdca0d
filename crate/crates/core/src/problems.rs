//! Initial states for the verification problems: Sedov blast, Sod shock
//! tube and Noh implosion.
//!
//! Every initializer evaluates cell and vertex values from global indices,
//! so each rank fills its own block and ghosts without communicating.

use std::str::FromStr;

use crate::eos::{eos_energy, Material, MaterialSet};
use crate::error::{Result, SaleError};
use crate::grid::BlockLayout;
use crate::hydro::{BoundarySpec, FaceCondition, HydroParams, SimulationState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Sedov,
    Sod,
    Noh,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sedov => "sedov",
            Self::Sod => "sod",
            Self::Noh => "noh",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "sedov" => Ok(Self::Sedov),
            "sod" => Ok(Self::Sod),
            "noh" => Ok(Self::Noh),
            other => Err(format!("unknown problem '{other}' (expected sedov|sod|noh)")),
        }
    }
}

/// A (density, pressure) pair for a gas at rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasState {
    pub rho: f64,
    pub p: f64,
}

/// Everything needed to set up one verification problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub gamma: f64,
    /// Sedov: energy deposited in the origin cell (octant share).
    pub e0: f64,
    /// Sedov and Noh: ambient density.
    pub rho0: f64,
    pub sod_left: GasState,
    pub sod_right: GasState,
    /// Fraction of the x-extent where the Sod left state ends.
    pub sod_split: f64,
    /// Put the Sod left and right states in two distinct materials.
    pub sod_two_material: bool,
    /// Noh inflow speed.
    pub noh_speed: f64,
    pub t_end: f64,
    pub boundary: BoundarySpec,
}

impl ProblemSpec {
    /// Standard setup for `kind` with γ = 1.4 (5/3 for Noh).
    pub fn new(kind: ProblemKind) -> Self {
        let (gamma, t_end, boundary) = match kind {
            ProblemKind::Sedov => (1.4, 0.05, BoundarySpec::octant()),
            ProblemKind::Sod => (1.4, 0.2, BoundarySpec::uniform(FaceCondition::SlipWall)),
            ProblemKind::Noh => (5.0 / 3.0, 0.6, BoundarySpec::octant()),
        };
        Self {
            kind,
            gamma,
            e0: 1.0,
            rho0: 1.0,
            sod_left: GasState { rho: 1.0, p: 1.0 },
            sod_right: GasState { rho: 0.125, p: 0.1 },
            sod_split: 0.5,
            sod_two_material: false,
            noh_speed: 1.0,
            t_end,
            boundary,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(SaleError::Contract(format!("{} problem: {what}", self.kind.name())));
        if !(self.t_end > 0.0) {
            return bad("t_end must be positive");
        }
        if !(self.gamma > 1.0) {
            return bad("gamma must exceed 1");
        }
        match self.kind {
            ProblemKind::Sedov if !(self.e0 > 0.0 && self.rho0 > 0.0) => bad("E0 and rho0 must be positive"),
            ProblemKind::Noh if !(self.rho0 > 0.0 && self.noh_speed >= 0.0) => {
                bad("rho0 must be positive and the inflow speed non-negative")
            }
            ProblemKind::Sod
                if !(self.sod_left.rho > 0.0
                    && self.sod_left.p > 0.0
                    && self.sod_right.rho > 0.0
                    && self.sod_right.p > 0.0
                    && (0.0..=1.0).contains(&self.sod_split)) =>
            {
                bad("states need positive density and pressure, split in [0, 1]")
            }
            _ => Ok(()),
        }
    }

    /// Materials the problem uses.
    pub fn materials(&self) -> Result<MaterialSet> {
        match self.kind {
            ProblemKind::Sod if self.sod_two_material => MaterialSet::new(vec![
                Material::ideal_gas("left", self.gamma, self.sod_left.rho),
                Material::ideal_gas("right", self.gamma, self.sod_right.rho),
            ]),
            ProblemKind::Sod => MaterialSet::new(vec![Material::ideal_gas("gas", self.gamma, self.sod_left.rho)]),
            _ => MaterialSet::new(vec![Material::ideal_gas("gas", self.gamma, self.rho0)]),
        }
    }
}

/// Background specific energy of the Sedov problem: total background
/// internal energy is `1e-10·E0`.
pub fn sedov_background_energy(e0: f64, rho0: f64, domain_volume: f64) -> f64 {
    1e-10 * e0 / (rho0 * domain_volume)
}

/// Sedov octant: uniform density, background energy everywhere, and `E0`
/// added to the cell at the origin corner.
pub fn init_sedov(
    layout: &BlockLayout,
    rank: usize,
    spec: &ProblemSpec,
    params: HydroParams,
) -> Result<SimulationState> {
    if layout.grid().dimensionality() < 2 {
        return Err(SaleError::Contract("the Sedov problem needs a 2D or 3D grid".into()));
    }
    let grid = layout.grid().clone();
    let mut s = SimulationState::new(layout, rank, spec.materials()?, spec.boundary, params)?;
    let e_bg = sedov_background_energy(spec.e0, spec.rho0, grid.domain_volume());
    // use the stored volume so the deposited energy is exact in the audit
    let origin = [-(s.block.start[0] as isize), -(s.block.start[1] as isize), -(s.block.start[2] as isize)];
    let origin_volume = if s.domain_cells(true).contains(&origin) {
        s.volume.get(0, origin[0], origin[1], origin[2])
    } else {
        (0..3).map(|d| grid.cell_width(d)).product()
    };
    let e_origin = spec.e0 / (spec.rho0 * origin_volume);
    let rho0 = spec.rho0;
    s.initialize(
        |g, _, f, rho, e| {
            f[0] = 1.0;
            rho[0] = rho0;
            e[0] = if g == [0, 0, 0] { e_bg + e_origin } else { e_bg };
        },
        |_, _| [0.0; 3],
    )?;
    Ok(s)
}

/// Sod shock tube along x: left state below `split · extent_x`, right
/// state above, gas at rest.
pub fn init_sod(
    layout: &BlockLayout,
    rank: usize,
    spec: &ProblemSpec,
    params: HydroParams,
) -> Result<SimulationState> {
    let grid = layout.grid().clone();
    let mut s = SimulationState::new(layout, rank, spec.materials()?, spec.boundary, params)?;
    let x_split = spec.sod_split * grid.extent()[0];
    let (l, r) = (spec.sod_left, spec.sod_right);
    let e_l = eos_energy(l.rho, l.p, spec.gamma)?;
    let e_r = eos_energy(r.rho, r.p, spec.gamma)?;
    let two = spec.sod_two_material;
    s.initialize(
        |_, center, f, rho, e| {
            let left = center[0] < x_split;
            let m = if two && !left { 1 } else { 0 };
            f[m] = 1.0;
            rho[m] = if left { l.rho } else { r.rho };
            e[m] = if left { e_l } else { e_r };
        },
        |_, _| [0.0; 3],
    )?;
    Ok(s)
}

/// Noh implosion: cold gas streaming toward the origin at `noh_speed`.
/// Planar on a 1D grid, radial otherwise.
pub fn init_noh(
    layout: &BlockLayout,
    rank: usize,
    spec: &ProblemSpec,
    params: HydroParams,
) -> Result<SimulationState> {
    let grid = layout.grid().clone();
    let active = grid.active_axes();
    let mut s = SimulationState::new(layout, rank, spec.materials()?, spec.boundary, params)?;
    let rho0 = spec.rho0;
    let speed = spec.noh_speed;
    // pressure floor: 1e-6 of the dynamic pressure scale
    let p_floor = 1e-6 * rho0 * speed.max(1.0) * speed.max(1.0);
    let e_floor = eos_energy(rho0, p_floor, spec.gamma)?;
    s.initialize(
        |_, _, f, rho, e| {
            f[0] = 1.0;
            rho[0] = rho0;
            e[0] = e_floor;
        },
        |_, pos| {
            let r2: f64 = (0..3).filter(|d| active[*d]).map(|d| pos[d] * pos[d]).sum();
            if r2 == 0.0 {
                return [0.0; 3];
            }
            let r = r2.sqrt();
            std::array::from_fn(|d| if active[d] { -speed * pos[d] / r } else { 0.0 })
        },
    )?;
    Ok(s)
}

/// Dispatch on the problem kind.
pub fn init_problem(
    layout: &BlockLayout,
    rank: usize,
    spec: &ProblemSpec,
    mut params: HydroParams,
) -> Result<SimulationState> {
    spec.validate()?;
    params.t_end = spec.t_end;
    match spec.kind {
        ProblemKind::Sedov => init_sedov(layout, rank, spec, params),
        ProblemKind::Sod => init_sod(layout, rank, spec, params),
        ProblemKind::Noh => init_noh(layout, rank, spec, params),
    }
}
