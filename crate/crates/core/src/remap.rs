//! Eulerian rezoning: first-order donor-cell remap from the Lagrangian
//! mesh back to the fixed target mesh.
//!
//! Each face sweeps a signed volume between its deformed and target
//! positions. Mass, material volume and internal energy move through the
//! face with the upwind (donor) cell's per-volume values. Momentum moves as
//! mass flux times the donor cell's mean vertex velocity and is handed back
//! to the vertices in equal shares; kinetic energy is advected the same way
//! and any mismatch with the kinetic energy of the remapped velocities goes
//! into internal energy, so total energy is conserved.
//!
//! Faces on the domain boundary never carry flux.

use crate::error::{Result, SaleError};
use crate::geometry::{corner_offsets, hex_corners, hex_volume, swept_face_volume, Vec3, HEX_FACES};
use crate::grid::{Block, Centering, Field, GlobalGrid};
use crate::halo::Communicator;
use crate::hydro::{
    apply_velocity_bc, gather_plan, lagrangian_cycle, tags, ExchangeMode, SimulationState,
    MAX_MATERIALS,
};
use crate::halo::{exchange_blocking, exchange_finish, exchange_start};

/// Signed swept volumes of every face a block's interior cells touch.
///
/// `volume[d]` is indexed by the cell-field storage offset of the cell on
/// the high side of the face. A positive value moves volume from the low
/// cell to the high cell, so the low cell is the donor.
#[derive(Debug, Clone, PartialEq)]
pub struct RemapFluxes {
    pub volume: [Vec<f64>; 3],
    shape: Field,
}

impl RemapFluxes {
    /// Swept volume through the low face of local cell `(i, j, k)` along `axis`.
    pub fn low_face(&self, axis: usize, i: isize, j: isize, k: isize) -> f64 {
        self.volume[axis][self.shape.offset(i, j, k)]
    }

    /// Swept volume through the high face of local cell `(i, j, k)` along `axis`.
    pub fn high_face(&self, axis: usize, i: isize, j: isize, k: isize) -> f64 {
        let mut l = [i, j, k];
        l[axis] += 1;
        self.volume[axis][self.shape.offset(l[0], l[1], l[2])]
    }

    /// Donor of the low face of local cell `(i, j, k)` along `axis`: the
    /// low neighbor for positive swept volume, the cell itself otherwise.
    pub fn low_face_donor(&self, axis: usize, i: isize, j: isize, k: isize) -> [isize; 3] {
        let mut c = [i, j, k];
        if self.low_face(axis, i, j, k) > 0.0 {
            c[axis] -= 1;
        }
        c
    }

    /// True when every face flux is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.volume.iter().all(|v| v.iter().all(|x| *x == 0.0))
    }
}

/// Swept volumes for all faces of `block`'s interior cells, from the
/// deformed vertex positions to the target ones.
pub fn compute_fluxes(
    grid: &GlobalGrid,
    block: &Block,
    deformed: &Field,
    target: &Field,
) -> Result<RemapFluxes> {
    let active = grid.active_axes();
    let cells = grid.cells();
    let n = block.len;
    // overrun check on every vertex this block updates
    let vr: [(isize, isize); 3] =
        std::array::from_fn(|d| if active[d] { (0, n[d] as isize + 1) } else { (0, 1) });
    for k in vr[2].0..vr[2].1 {
        for j in vr[1].0..vr[1].1 {
            for i in vr[0].0..vr[0].1 {
                let at = deformed.offset(i, j, k);
                let a = deformed.vec3_at(at);
                let b = target.vec3_at(at);
                for d in 0..3 {
                    if !active[d] {
                        continue;
                    }
                    let limit = 0.5 * grid.cell_width(d);
                    let disp = (a[d] - b[d]).abs();
                    if !(disp < limit) {
                        let l = [i, j, k];
                        return Err(SaleError::RemapOverrun {
                            vertex: std::array::from_fn(|e| (block.start[e] as isize + l[e]) as usize),
                            displacement: disp,
                            limit,
                        });
                    }
                }
            }
        }
    }
    let shape = Field::new(n, active, 1, Centering::Cell, 1)?;
    let plane = shape.plane();
    let mut volume = [vec![0.0; plane], vec![0.0; plane], vec![0.0; plane]];
    for d in 0..3 {
        if !active[d] {
            continue;
        }
        let range: [(isize, isize); 3] = std::array::from_fn(|a| {
            if !active[a] {
                (0, 1)
            } else if a == d {
                (0, n[a] as isize + 1)
            } else {
                (0, n[a] as isize)
            }
        });
        let face = HEX_FACES[2 * d + 1];
        for k in range[2].0..range[2].1 {
            for j in range[1].0..range[1].1 {
                for i in range[0].0..range[0].1 {
                    let l = [i, j, k];
                    let g = block.start[d] as isize + l[d];
                    if g == 0 || g == cells[d] as isize {
                        continue;
                    }
                    let mut low = l;
                    low[d] -= 1;
                    let dc = hex_corners(deformed, active, low[0], low[1], low[2]);
                    let tc = hex_corners(target, active, low[0], low[1], low[2]);
                    let dq: [Vec3; 4] = std::array::from_fn(|r| dc[face[r]]);
                    let tq: [Vec3; 4] = std::array::from_fn(|r| tc[face[r]]);
                    volume[d][shape.offset(i, j, k)] = swept_face_volume(&dq, &tq);
                }
            }
        }
    }
    Ok(RemapFluxes { volume, shape })
}

/// Per-cell donor data for the remap, indexed by cell storage offset.
struct Donors {
    volume: Vec<f64>,
    /// Mean vertex velocity of the cell.
    velocity: Vec<[f64; 3]>,
    /// Mean specific kinetic energy of the cell's vertices.
    kinetic: Vec<f64>,
}

fn donor_data(s: &SimulationState) -> Donors {
    let active = s.active();
    let plane = s.volume.plane();
    let mut volume = vec![0.0; plane];
    let mut velocity = vec![[0.0; 3]; plane];
    let mut kinetic = vec![0.0; plane];
    let pu = s.u.plane();
    let u = s.u.data();
    for [i, j, k] in s.domain_cells(true) {
        let at = s.volume.offset(i, j, k);
        volume[at] = hex_volume(&hex_corners(&s.x, active, i, j, k));
        let offs = corner_offsets(&s.u, active, i, j, k);
        let mut ub = [0.0; 3];
        let mut ke = 0.0;
        for off in &offs {
            let v = [u[*off], u[pu + off], u[2 * pu + off]];
            for d in 0..3 {
                ub[d] += v[d];
            }
            ke += 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        }
        velocity[at] = [ub[0] * 0.125, ub[1] * 0.125, ub[2] * 0.125];
        kinetic[at] = ke * 0.125;
    }
    Donors { volume, velocity, kinetic }
}

/// Transported quantities handed from [`advect_cells`] to
/// [`advect_momentum`].
pub struct CellTransport {
    /// Net momentum gained by each cell, 3 components.
    pub momentum: Field,
    /// Advected kinetic energy of each interior cell.
    pub kinetic: Field,
}

/// Donor-cell remap of material mass, volume and energy on interior cells.
/// Updates `mat_mass`, `mat_fraction`, `mat_energy`, `mat_density` and
/// `cell_mass`; volumes are set to the target volumes.
pub fn advect_cells(s: &mut SimulationState, fluxes: &RemapFluxes) -> Result<CellTransport> {
    let active = s.active();
    let nm = s.material_count();
    let donors = donor_data(s);
    let mut momentum = Field::new(s.block.len, active, 1, Centering::Cell, 3)?
        .with_tag(tags::MOMENTUM_FLUX);
    let mut kinetic = Field::new(s.block.len, active, 1, Centering::Cell, 1)?;
    let cells = s.domain_cells(false);
    let mut updates = Vec::with_capacity(cells.len());
    for &[i, j, k] in &cells {
        let at = s.volume.offset(i, j, k);
        let vdef = donors.volume[at];
        let mut mass = [0.0; MAX_MATERIALS];
        let mut vol = [0.0; MAX_MATERIALS];
        let mut energy = [0.0; MAX_MATERIALS];
        for m in 0..nm {
            mass[m] = s.mat_mass.get(m, i, j, k);
            vol[m] = s.mat_fraction.get(m, i, j, k) * vdef;
            energy[m] = mass[m] * s.mat_energy.get(m, i, j, k);
        }
        let mut dp = [0.0; 3];
        let mut ke = s.cell_mass.get(0, i, j, k) * donors.kinetic[at];
        let mut touched = false;
        for d in 0..3 {
            if !active[d] {
                continue;
            }
            for side in 0..2 {
                let (dv, sign) = if side == 0 {
                    (fluxes.low_face(d, i, j, k), 1.0)
                } else {
                    (fluxes.high_face(d, i, j, k), -1.0)
                };
                if dv == 0.0 {
                    continue;
                }
                touched = true;
                // donor: low cell for positive flux, high cell otherwise
                let mut donor = [i, j, k];
                let low_is_donor = dv > 0.0;
                if side == 0 && low_is_donor {
                    donor[d] -= 1;
                } else if side == 1 && !low_is_donor {
                    donor[d] += 1;
                }
                let dat = s.volume.offset(donor[0], donor[1], donor[2]);
                let dvol = donors.volume[dat];
                let mut mflux_total = 0.0;
                for m in 0..nm {
                    let fm = s.mat_fraction.get(m, donor[0], donor[1], donor[2]);
                    let mm = s.mat_mass.get(m, donor[0], donor[1], donor[2]);
                    let em = s.mat_energy.get(m, donor[0], donor[1], donor[2]);
                    let mflux = dv * (mm / dvol);
                    mass[m] += sign * mflux;
                    vol[m] += sign * dv * fm;
                    energy[m] += sign * mflux * em;
                    mflux_total += mflux;
                }
                let ub = donors.velocity[dat];
                for e in 0..3 {
                    dp[e] += sign * mflux_total * ub[e];
                }
                ke += sign * mflux_total * donors.kinetic[dat];
            }
        }
        updates.push((touched, mass, vol, energy, dp, ke));
    }
    for (&[i, j, k], (touched, mass, vol, energy, dp, ke)) in cells.iter().zip(updates) {
        kinetic.set(0, i, j, k, ke);
        if !touched {
            // no transport: keep the cell bitwise
            continue;
        }
        let mut total_vol = 0.0;
        let mut total_mass = 0.0;
        for m in 0..nm {
            if mass[m] < 0.0 {
                return Err(SaleError::NegativeMass {
                    cell: s.global_cell(i, j, k),
                    material: m,
                    mass: mass[m],
                });
            }
            total_vol += vol[m].max(0.0);
            total_mass += mass[m];
        }
        let vt = s.volume_target.get(0, i, j, k);
        for m in 0..nm {
            let f = vol[m].max(0.0) / total_vol;
            if f == 0.0 && mass[m] > 0.0 {
                return Err(SaleError::DegenerateState(format!(
                    "material {m} kept mass {:e} but no volume in cell {:?}",
                    mass[m],
                    s.global_cell(i, j, k)
                )));
            }
            s.mat_mass.set(m, i, j, k, mass[m]);
            s.mat_fraction.set(m, i, j, k, f);
            s.mat_energy.set(m, i, j, k, if mass[m] > 0.0 { energy[m] / mass[m] } else { 0.0 });
            s.mat_density.set(m, i, j, k, if f > 0.0 { mass[m] / (f * vt) } else { 0.0 });
        }
        s.cell_mass.set(0, i, j, k, total_mass);
        for e in 0..3 {
            momentum.set(e, i, j, k, dp[e]);
        }
    }
    s.volume.data_mut().copy_from_slice(s.volume_target.data());
    Ok(CellTransport { momentum, kinetic })
}

/// Hand each cell's momentum change to its vertices in equal shares,
/// rebuild vertex masses from the remapped cell masses, then move kinetic
/// energy mismatch into internal energy. Needs current ghost values of
/// `cell_mass` and of the transported momentum.
pub fn advect_momentum(s: &mut SimulationState, transport: &CellTransport) -> Result<()> {
    let active = s.active();
    let share = 1.0 / (1u32 << s.dimensionality()) as f64;
    let plan = gather_plan(active);
    let [(i0, i1), (j0, j1), (k0, k1)] = s.vertex_range();
    for k in k0..k1 {
        for j in j0..j1 {
            for i in i0..i1 {
                let mut m_new = 0.0;
                let mut dp = [0.0; 3];
                for entry in &plan {
                    let c = [i + entry.cell[0], j + entry.cell[1], k + entry.cell[2]];
                    if !s.cell_in_domain(c[0], c[1], c[2]) {
                        continue;
                    }
                    m_new += s.cell_mass.get(0, c[0], c[1], c[2]) * share;
                    for e in 0..3 {
                        dp[e] += transport.momentum.get(e, c[0], c[1], c[2]) * share;
                    }
                }
                if !(m_new > 0.0) {
                    return Err(SaleError::DegenerateState(format!(
                        "vertex {:?} lost all mass in the remap",
                        s.global_cell(i, j, k)
                    )));
                }
                let at = s.u.offset(i, j, k);
                let m_old = s.vertex_mass.get(0, i, j, k);
                let u = s.u.vec3_at(at);
                // (m_old·u + dp)/m_new, arranged so zero transport is exact
                let v: [f64; 3] = std::array::from_fn(|e| u[e] + (dp[e] + (m_old - m_new) * u[e]) / m_new);
                s.u.set_vec3_at(at, v);
                s.vertex_mass.set(0, i, j, k, m_new);
            }
        }
    }
    apply_velocity_bc(s);
    // kinetic energy fix
    let nm = s.material_count();
    let pu = s.u.plane();
    for [i, j, k] in s.domain_cells(false) {
        let offs = corner_offsets(&s.u, active, i, j, k);
        let u = s.u.data();
        let mut ke = 0.0;
        for off in &offs {
            let v = [u[*off], u[pu + off], u[2 * pu + off]];
            ke += 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        }
        let mc = s.cell_mass.get(0, i, j, k);
        let k_new = mc * ke * 0.125;
        let de = (transport.kinetic.get(0, i, j, k) - k_new) / mc;
        if de == 0.0 {
            continue;
        }
        for m in 0..nm {
            if s.mat_mass.get(m, i, j, k) > 0.0 {
                let e = s.mat_energy.get(m, i, j, k) + de;
                s.mat_energy.set(m, i, j, k, e);
            }
        }
    }
    Ok(())
}

/// One Eulerian cycle: a Lagrangian cycle, then the remap back to the
/// target mesh.
///
/// Adds four exchanges to the Lagrangian eight: post-step material energy,
/// remapped cell mass, transported momentum, and the remapped velocities.
pub fn eulerian_cycle(s: &mut SimulationState, comm: &mut Communicator) -> Result<()> {
    lagrangian_cycle(s, comm)?;
    s.exchange(comm, &[tags::MAT_ENERGY])?;
    let fluxes = compute_fluxes(s.layout.grid(), &s.block, &s.x, &s.x_target)?;
    let mut transport = advect_cells(s, &fluxes)?;
    match s.params.exchange_mode {
        ExchangeMode::Blocking => {
            s.exchange(comm, &[tags::CELL_MASS])?;
            exchange_blocking(&mut transport.momentum, &s.cell_schedule, comm)?;
        }
        ExchangeMode::NonBlocking => {
            let (field, schedule) = s.field_and_schedule(tags::CELL_MASS);
            let mut hm = exchange_start(field, schedule, comm)?;
            let mut hp = exchange_start(&mut transport.momentum, &s.cell_schedule, comm)?;
            let (field, schedule) = s.field_and_schedule(tags::CELL_MASS);
            exchange_finish(&mut hm, field, schedule, comm)?;
            exchange_finish(&mut hp, &mut transport.momentum, &s.cell_schedule, comm)?;
        }
    }
    advect_momentum(s, &transport)?;
    s.x.data_mut().copy_from_slice(s.x_target.data());
    s.exchange(comm, &[tags::U])?;
    Ok(())
}
