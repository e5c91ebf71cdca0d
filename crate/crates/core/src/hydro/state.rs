use std::str::FromStr;

use crate::eos::MaterialSet;
use crate::error::{Result, SaleError};
use crate::geometry::{hex_corners, hex_volume};
use crate::grid::{allocate_field, Block, BlockLayout, Centering, Field};
use crate::halo::{
    build_schedule, build_topology, exchange_blocking, exchange_finish, exchange_start,
    CommSchedule, Communicator, FieldShape, NeighborTopology,
};

/// Upper bound on materials per problem (per-cell scratch lives on the stack).
pub const MAX_MATERIALS: usize = 8;

/// Exchange tags of the state's fields.
pub mod tags {
    pub const X: u32 = 1;
    pub const U: u32 = 2;
    pub const MAT_MASS: u32 = 3;
    pub const MAT_ENERGY: u32 = 4;
    pub const MAT_FRACTION: u32 = 5;
    pub const PRESSURE: u32 = 6;
    pub const VISCOSITY: u32 = 7;
    pub const CELL_MASS: u32 = 8;
    pub const MOMENTUM_FLUX: u32 = 9;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceCondition {
    SlipWall,
    FreeSurface,
}

impl FromStr for FaceCondition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "slip_wall" | "slip" => Ok(Self::SlipWall),
            "free_surface" | "free" => Ok(Self::FreeSurface),
            other => Err(format!("unknown boundary condition '{other}'")),
        }
    }
}

/// Condition on each domain face, indexed `[axis][0 = low, 1 = high]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundarySpec {
    pub faces: [[FaceCondition; 2]; 3],
}

impl BoundarySpec {
    pub fn uniform(c: FaceCondition) -> Self {
        Self { faces: [[c; 2]; 3] }
    }

    /// Slip walls on the low faces, free surfaces on the high faces.
    pub fn octant() -> Self {
        Self { faces: [[FaceCondition::SlipWall, FaceCondition::FreeSurface]; 3] }
    }

    pub fn with(mut self, axis: usize, side: usize, c: FaceCondition) -> Self {
        self.faces[axis][side] = c;
        self
    }

    pub fn get(&self, axis: usize, side: usize) -> FaceCondition {
        self.faces[axis][side]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rezone {
    Lagrange,
    Euler,
}

impl Rezone {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lagrange => "lagrange",
            Self::Euler => "euler",
        }
    }
}

impl FromStr for Rezone {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "lagrange" => Ok(Self::Lagrange),
            "euler" => Ok(Self::Euler),
            other => Err(format!("unknown rezone mode '{other}' (expected lagrange|euler)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExchangeMode {
    Blocking,
    NonBlocking,
}

impl FromStr for ExchangeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "blocking" => Ok(Self::Blocking),
            "nonblocking" => Ok(Self::NonBlocking),
            other => Err(format!("unknown exchange mode '{other}' (expected blocking|nonblocking)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroParams {
    pub cfl: f64,
    /// Quadratic viscosity coefficient.
    pub c_quad: f64,
    /// Linear viscosity coefficient.
    pub c_lin: f64,
    pub t_end: f64,
    pub rezone: Rezone,
    pub exchange_mode: ExchangeMode,
    /// Maximum ratio between consecutive time steps.
    pub dt_growth: f64,
    /// First time step; derived from the initial state when unset.
    pub dt_initial: Option<f64>,
}

impl Default for HydroParams {
    fn default() -> Self {
        Self {
            cfl: 0.25,
            c_quad: 2.0,
            c_lin: 0.25,
            t_end: 1.0,
            rezone: Rezone::Lagrange,
            exchange_mode: ExchangeMode::Blocking,
            dt_growth: 1.1,
            dt_initial: None,
        }
    }
}

/// Everything one rank knows about the simulation.
pub struct SimulationState {
    pub layout: BlockLayout,
    pub block: Block,
    pub materials: MaterialSet,
    pub boundary: BoundarySpec,
    pub params: HydroParams,
    pub topology: NeighborTopology,
    pub cell_schedule: CommSchedule,
    pub vertex_schedule: CommSchedule,

    /// Vertex positions, velocities and lumped masses.
    pub x: Field,
    pub u: Field,
    pub vertex_mass: Field,
    /// Fixed mesh the Eulerian remap returns to.
    pub x_target: Field,
    /// Gathered vertex forces of the current cycle.
    pub force: Field,
    pub(crate) u_prev: Field,

    pub volume: Field,
    pub volume_target: Field,
    pub cell_mass: Field,
    pub pressure: Field,
    pub viscosity: Field,
    pub sound_speed: Field,
    /// Per-material partial mass, density, specific energy, volume fraction.
    pub mat_mass: Field,
    pub mat_density: Field,
    pub mat_energy: Field,
    pub mat_fraction: Field,
    /// Temperature at initialization, for the strength model.
    pub init_temperature: Field,

    pub t: f64,
    pub dt: f64,
    pub cycle: u64,
    pub(crate) dt_prev: Option<f64>,
    /// Corner forces, 24 values (8 corners × 3) per cell storage offset.
    pub(crate) corner_force: Vec<f64>,
}

impl SimulationState {
    /// Allocate a state on `rank`'s block with the undeformed mesh, zero
    /// velocity and empty cells. Fill it with [`SimulationState::initialize`].
    pub fn new(
        layout: &BlockLayout,
        rank: usize,
        materials: MaterialSet,
        boundary: BoundarySpec,
        params: HydroParams,
    ) -> Result<Self> {
        if materials.len() > MAX_MATERIALS {
            return Err(SaleError::Contract(format!(
                "at most {MAX_MATERIALS} materials are supported, got {}",
                materials.len()
            )));
        }
        if !(params.cfl > 0.0 && params.cfl < 1.0) {
            return Err(SaleError::Contract(format!("cfl must lie in (0, 1), got {}", params.cfl)));
        }
        if !(params.t_end > 0.0) {
            return Err(SaleError::Contract("t_end must be positive".into()));
        }
        let block = layout.block(rank)?;
        let nm = materials.len();
        let cell = |comps: usize, tag: u32| -> Result<Field> {
            Ok(allocate_field(layout, rank, Centering::Cell, Some(comps))?.with_tag(tag))
        };
        let vertex = |comps: usize, tag: u32| -> Result<Field> {
            Ok(allocate_field(layout, rank, Centering::Vertex, Some(comps))?.with_tag(tag))
        };
        let mut x = vertex(3, tags::X)?;
        let grid = layout.grid();
        let active = grid.active_axes();
        let [gx, gy, gz] = x.ghost();
        let [dx, dy, dz] = x.dims();
        for k in -(gz as isize)..(dz - gz) as isize {
            for j in -(gy as isize)..(dy - gy) as isize {
                for i in -(gx as isize)..(dx - gx) as isize {
                    let local = [i, j, k];
                    let p: [f64; 3] = std::array::from_fn(|d| {
                        if active[d] {
                            grid.vertex_coord(d, block.start[d] as isize + local[d])
                        } else {
                            0.0
                        }
                    });
                    let at = x.offset(i, j, k);
                    x.set_vec3_at(at, p);
                }
            }
        }
        let topology = build_topology(layout, rank, None)?;
        let cell_proto = cell(1, 0)?;
        let cell_schedule = build_schedule(&topology, FieldShape::of(&cell_proto));
        let vertex_schedule = build_schedule(&topology, FieldShape::of(&x));
        let plane = cell_proto.plane();
        let mut s = Self {
            layout: layout.clone(),
            block,
            boundary,
            params,
            topology,
            cell_schedule,
            vertex_schedule,
            x_target: x.clone().with_tag(0),
            x,
            u: vertex(3, tags::U)?,
            vertex_mass: vertex(1, 0)?,
            force: vertex(3, 0)?,
            u_prev: vertex(3, 0)?,
            volume: cell(1, 0)?,
            volume_target: cell(1, 0)?,
            cell_mass: cell(1, tags::CELL_MASS)?,
            pressure: cell(1, tags::PRESSURE)?,
            viscosity: cell(1, tags::VISCOSITY)?,
            sound_speed: cell(1, 0)?,
            mat_mass: cell(nm, tags::MAT_MASS)?,
            mat_density: cell(nm, 0)?,
            mat_energy: cell(nm, tags::MAT_ENERGY)?,
            mat_fraction: cell(nm, tags::MAT_FRACTION)?,
            init_temperature: cell(1, 0)?,
            materials,
            t: 0.0,
            dt: 0.0,
            cycle: 0,
            dt_prev: None,
            corner_force: vec![0.0; 24 * plane],
        };
        s.compute_target_volumes()?;
        Ok(s)
    }

    fn compute_target_volumes(&mut self) -> Result<()> {
        let active = self.active();
        for [i, j, k] in self.domain_cells(true) {
            let v = hex_volume(&hex_corners(&self.x_target, active, i, j, k));
            if !(v > 0.0) {
                return Err(SaleError::TangledMesh { cell: self.global_cell(i, j, k), volume: v });
            }
            self.volume_target.set(0, i, j, k, v);
        }
        self.volume = self.volume_target.clone();
        Ok(())
    }

    pub fn active(&self) -> [bool; 3] {
        self.layout.grid().active_axes()
    }

    pub fn dimensionality(&self) -> usize {
        self.layout.grid().dimensionality()
    }

    pub fn material_count(&self) -> usize {
        self.materials.len()
    }

    /// Global index of local cell `(i, j, k)` (may be out of the domain).
    pub fn global_cell(&self, i: isize, j: isize, k: isize) -> [usize; 3] {
        let l = [i, j, k];
        std::array::from_fn(|d| (self.block.start[d] as isize + l[d]).max(0) as usize)
    }

    /// Whether local cell `(i, j, k)` lies inside the global domain.
    #[inline]
    pub fn cell_in_domain(&self, i: isize, j: isize, k: isize) -> bool {
        let l = [i, j, k];
        let cells = self.layout.grid().cells();
        (0..3).all(|d| {
            let g = self.block.start[d] as isize + l[d];
            g >= 0 && g < cells[d] as isize
        })
    }

    /// Local indices of interior cells, or with `ghosts` of every in-domain
    /// cell in storage (interior plus neighbor ghosts).
    pub fn domain_cells(&self, ghosts: bool) -> Vec<[isize; 3]> {
        let n = self.block.len;
        let active = self.active();
        let range = |d: usize| -> (isize, isize) {
            if !active[d] {
                (0, 1)
            } else if ghosts {
                (-1, n[d] as isize + 1)
            } else {
                (0, n[d] as isize)
            }
        };
        let (r0, r1, r2) = (range(0), range(1), range(2));
        let mut out = Vec::new();
        for k in r2.0..r2.1 {
            for j in r1.0..r1.1 {
                for i in r0.0..r0.1 {
                    if self.cell_in_domain(i, j, k) {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }

    /// Per-axis local vertex index range `lo..hi` of the vertices this rank
    /// updates (interior plus replicated interface planes).
    pub fn vertex_range(&self) -> [(isize, isize); 3] {
        let n = self.block.len;
        let active = self.active();
        std::array::from_fn(|d| if active[d] { (0, n[d] as isize + 1) } else { (0, 1) })
    }

    /// Whether local vertex `(i, j, k)` is owned by this rank for global sums.
    pub fn owns_vertex(&self, i: isize, j: isize, k: isize) -> bool {
        let l = [i, j, k];
        let grid = self.layout.grid();
        (0..3).all(|d| {
            !grid.is_active(d)
                || l[d] < self.block.len[d] as isize
                || self.block.at_high_boundary(d, grid)
        })
    }

    /// Fill the state. `cells` receives a global cell index and its center
    /// and writes per-material volume fraction, density and specific energy;
    /// `velocity` maps a global vertex index and position to a velocity.
    /// Values are evaluated from global indices on every in-domain cell the
    /// rank stores, so ghosts are consistent without communication.
    pub fn initialize<C, V>(&mut self, cells: C, velocity: V) -> Result<()>
    where
        C: Fn([usize; 3], [f64; 3], &mut [f64], &mut [f64], &mut [f64]),
        V: Fn([usize; 3], [f64; 3]) -> [f64; 3],
    {
        let nm = self.material_count();
        let grid = self.layout.grid().clone();
        let active = self.active();
        let mut f = [0.0; MAX_MATERIALS];
        let mut rho = [0.0; MAX_MATERIALS];
        let mut e = [0.0; MAX_MATERIALS];
        for [i, j, k] in self.domain_cells(true) {
            let g = self.global_cell(i, j, k);
            let center: [f64; 3] = std::array::from_fn(|d| {
                if active[d] {
                    (g[d] as f64 + 0.5) * grid.cell_width(d)
                } else {
                    0.5
                }
            });
            f[..nm].fill(0.0);
            rho[..nm].fill(0.0);
            e[..nm].fill(0.0);
            cells(g, center, &mut f[..nm], &mut rho[..nm], &mut e[..nm]);
            let sum: f64 = f[..nm].iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(SaleError::DegenerateState(format!(
                    "volume fractions of cell {g:?} sum to {sum}"
                )));
            }
            let vol = self.volume.get(0, i, j, k);
            let mut total = 0.0;
            for m in 0..nm {
                let mm = if f[m] > 0.0 { rho[m] * f[m] * vol } else { 0.0 };
                self.mat_fraction.set(m, i, j, k, f[m]);
                self.mat_density.set(m, i, j, k, if f[m] > 0.0 { rho[m] } else { 0.0 });
                self.mat_energy.set(m, i, j, k, e[m]);
                self.mat_mass.set(m, i, j, k, mm);
                total += mm;
            }
            if !(total > 0.0) {
                return Err(SaleError::DegenerateState(format!("cell {g:?} has no mass")));
            }
            self.cell_mass.set(0, i, j, k, total);
            let temp = (0..nm).map(|m| self.mat_mass.get(m, i, j, k) * e[m]).sum::<f64>()
                / (total * crate::eos::SPECIFIC_HEAT);
            self.init_temperature.set(0, i, j, k, temp);
        }
        let [gx, gy, gz] = self.u.ghost();
        let [dx, dy, dz] = self.u.dims();
        for k in -(gz as isize)..(dz - gz) as isize {
            for j in -(gy as isize)..(dy - gy) as isize {
                for i in -(gx as isize)..(dx - gx) as isize {
                    let at = self.x.offset(i, j, k);
                    let l = [i, j, k];
                    let gv: [usize; 3] =
                        std::array::from_fn(|d| (self.block.start[d] as isize + l[d]).max(0) as usize);
                    let mut v = velocity(gv, self.x.vec3_at(at));
                    for d in 0..3 {
                        if !active[d] {
                            v[d] = 0.0;
                        }
                    }
                    self.u.set_vec3_at(at, v);
                }
            }
        }
        self.update_vertex_mass()?;
        super::lagrange::refresh_eos(self)?;
        super::lagrange::apply_boundary(self);
        super::lagrange::apply_velocity_bc(self);
        self.t = 0.0;
        self.cycle = 0;
        self.dt = 0.0;
        self.dt_prev = None;
        Ok(())
    }

    /// Lumped vertex masses from the current cell masses.
    pub fn update_vertex_mass(&mut self) -> Result<()> {
        let plan = gather_plan(self.active());
        let share = 1.0 / (1u32 << self.dimensionality()) as f64;
        let [(i0, i1), (j0, j1), (k0, k1)] = self.vertex_range();
        for k in k0..k1 {
            for j in j0..j1 {
                for i in i0..i1 {
                    let mut m = 0.0;
                    for entry in &plan {
                        let c = [i + entry.cell[0], j + entry.cell[1], k + entry.cell[2]];
                        if self.cell_in_domain(c[0], c[1], c[2]) {
                            m += self.cell_mass.get(0, c[0], c[1], c[2]) * share;
                        }
                    }
                    if !(m > 0.0) {
                        return Err(SaleError::DegenerateState(format!(
                            "vertex {:?} has no mass",
                            self.global_cell(i, j, k)
                        )));
                    }
                    self.vertex_mass.set(0, i, j, k, m);
                }
            }
        }
        Ok(())
    }

    /// Initial time step: `1e-6 · extent / c_scale`, with `c_scale` the
    /// global maximum of sound speed plus vertex speed. One reduction.
    pub fn prime_timestep(&mut self, comm: &mut Communicator) -> Result<()> {
        let mut local: f64 = 0.0;
        for [i, j, k] in self.domain_cells(false) {
            local = local.max(self.sound_speed.get(0, i, j, k));
        }
        let [(i0, i1), (j0, j1), (k0, k1)] = self.vertex_range();
        for k in k0..k1 {
            for j in j0..j1 {
                for i in i0..i1 {
                    let v = self.u.vec3_at(self.u.offset(i, j, k));
                    local = local.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
                }
            }
        }
        let c_scale = comm.all_max(local)?;
        let grid = self.layout.grid();
        let extent = (0..3)
            .filter(|d| grid.is_active(*d))
            .map(|d| grid.extent()[d])
            .fold(0.0, f64::max);
        if self.params.dt_initial.is_none() {
            let c = if c_scale > 0.0 { c_scale } else { 1.0 };
            self.params.dt_initial = Some(1e-6 * extent / c);
        }
        Ok(())
    }

    /// Exchange a set of fields, blocking or as overlapped start/finish
    /// pairs depending on the configured mode.
    pub(crate) fn exchange(&mut self, comm: &mut Communicator, which: &[u32]) -> Result<()> {
        match self.params.exchange_mode {
            ExchangeMode::Blocking => {
                for tag in which {
                    let (field, schedule) = self.field_and_schedule(*tag);
                    exchange_blocking(field, schedule, comm)?;
                }
            }
            ExchangeMode::NonBlocking => {
                let mut handles = Vec::with_capacity(which.len());
                for tag in which {
                    let (field, schedule) = self.field_and_schedule(*tag);
                    handles.push(exchange_start(field, schedule, comm)?);
                }
                for (tag, h) in which.iter().zip(handles.iter_mut()) {
                    let (field, schedule) = self.field_and_schedule(*tag);
                    exchange_finish(h, field, schedule, comm)?;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn field_and_schedule(&mut self, tag: u32) -> (&mut Field, &CommSchedule) {
        let field = match tag {
            tags::X => &mut self.x,
            tags::U => &mut self.u,
            tags::MAT_MASS => &mut self.mat_mass,
            tags::MAT_ENERGY => &mut self.mat_energy,
            tags::MAT_FRACTION => &mut self.mat_fraction,
            tags::PRESSURE => &mut self.pressure,
            tags::VISCOSITY => &mut self.viscosity,
            tags::CELL_MASS => &mut self.cell_mass,
            other => panic!("no exchangeable field with tag {other}"),
        };
        let schedule = match field.centering() {
            Centering::Cell => &self.cell_schedule,
            Centering::Vertex => &self.vertex_schedule,
        };
        (field, schedule)
    }
}

/// One adjacent cell of a vertex and the corners of that cell that land on
/// the vertex.
#[derive(Debug, Clone)]
pub(crate) struct GatherEntry {
    pub cell: [isize; 3],
    pub corners: Vec<usize>,
}

/// Fixed-order list of the cells around a vertex. Inert axes collapse the
/// corners that differ only along them onto the same vertex.
pub(crate) fn gather_plan(active: [bool; 3]) -> Vec<GatherEntry> {
    let choices = |d: usize| -> Vec<isize> { if active[d] { vec![-1, 0] } else { vec![0] } };
    let mut plan = Vec::new();
    for &ck in &choices(2) {
        for &cj in &choices(1) {
            for &ci in &choices(0) {
                let cell = [ci, cj, ck];
                let corners = (0..8)
                    .filter(|n| {
                        (0..3).all(|d| !active[d] || ((n >> d) & 1) as isize == -cell[d])
                    })
                    .collect();
                plan.push(GatherEntry { cell, corners });
            }
        }
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gather_plan_covers_every_corner_once() {
        for active in [[true, true, true], [true, true, false], [true, false, false]] {
            let plan = gather_plan(active);
            let dim = active.iter().filter(|a| **a).count();
            assert_eq!(plan.len(), 1 << dim);
            let total: usize = plan.iter().map(|e| e.corners.len()).sum();
            assert_eq!(total, 8);
        }
    }
}
