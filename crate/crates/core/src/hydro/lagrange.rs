use super::state::{gather_plan, tags, FaceCondition, Rezone, SimulationState, MAX_MATERIALS};
use crate::eos::{mixed_state, steinberg_shear, steinberg_yield, SPECIFIC_HEAT};
use crate::error::{Result, SaleError};
use crate::geometry::{corner_offsets, hex_corners, hex_volume, hex_volume_gradient};
use crate::grid::Field;
use crate::halo::Communicator;

/// Guards the time-step quotient against a vanishing signal speed.
const SPEED_FLOOR: f64 = 1e-30;

/// Recompute material densities from mass, fraction and volume, then the
/// cell pressure and sound speed, on interior cells.
pub fn refresh_eos(s: &mut SimulationState) -> Result<()> {
    let nm = s.material_count();
    let mut f = [0.0; MAX_MATERIALS];
    let mut rho = [0.0; MAX_MATERIALS];
    let mut e = [0.0; MAX_MATERIALS];
    for [i, j, k] in s.domain_cells(false) {
        let vol = s.volume.get(0, i, j, k);
        for m in 0..nm {
            f[m] = s.mat_fraction.get(m, i, j, k);
            let mass = s.mat_mass.get(m, i, j, k);
            rho[m] = if f[m] > 0.0 { mass / (f[m] * vol) } else { 0.0 };
            e[m] = s.mat_energy.get(m, i, j, k);
            s.mat_density.set(m, i, j, k, rho[m]);
        }
        let (p, c) = mixed_state(&s.materials, &f[..nm], &rho[..nm], &e[..nm]).map_err(|err| {
            match err {
                SaleError::EmptyCell { .. } => SaleError::EmptyCell { cell: s.global_cell(i, j, k) },
                other => other,
            }
        })?;
        if !p.is_finite() {
            return Err(SaleError::DegenerateState(format!(
                "non-finite pressure in cell {:?}",
                s.global_cell(i, j, k)
            )));
        }
        s.pressure.set(0, i, j, k, p);
        s.sound_speed.set(0, i, j, k, c);
    }
    Ok(())
}

/// Artificial viscosity for a velocity jump `du` across a cell.
#[inline]
pub fn viscosity_from_jump(rho: f64, c: f64, du: f64, c_quad: f64, c_lin: f64) -> f64 {
    if du < 0.0 {
        rho * (c_quad * du * du + c_lin * c * du.abs())
    } else {
        0.0
    }
}

/// Per-axis velocity jump across a cell: mean of the axis velocity on the
/// high face minus the mean on the low face.
#[inline]
fn velocity_jumps(u: &Field, offs: &[usize; 8], active: [bool; 3]) -> [f64; 3] {
    let p = u.plane();
    let data = u.data();
    std::array::from_fn(|d| {
        if !active[d] {
            return 0.0;
        }
        let mut hi = 0.0;
        let mut lo = 0.0;
        for (n, off) in offs.iter().enumerate() {
            let v = data[d * p + off];
            if (n >> d) & 1 == 1 {
                hi += v;
            } else {
                lo += v;
            }
        }
        (hi - lo) * 0.25
    })
}

/// Compression jump of a cell: the most negative per-axis jump.
#[inline]
fn compression_jump(jumps: &[f64; 3], active: [bool; 3]) -> f64 {
    let mut du = f64::INFINITY;
    for d in 0..3 {
        if active[d] {
            du = du.min(jumps[d]);
        }
    }
    du
}

/// Viscosity `q` on interior cells.
pub fn compute_viscosity(s: &mut SimulationState) {
    let active = s.active();
    let (c_quad, c_lin) = (s.params.c_quad, s.params.c_lin);
    for [i, j, k] in s.domain_cells(false) {
        let offs = corner_offsets(&s.u, active, i, j, k);
        let du = compression_jump(&velocity_jumps(&s.u, &offs, active), active);
        let rho = s.cell_mass.get(0, i, j, k) / s.volume.get(0, i, j, k);
        let c = s.sound_speed.get(0, i, j, k);
        s.viscosity.set(0, i, j, k, viscosity_from_jump(rho, c, du, c_quad, c_lin));
    }
}

/// Fill ghost cells on physical domain faces: slip walls mirror the
/// adjacent interior cell, free surfaces get zero pressure and viscosity.
pub fn apply_boundary(s: &mut SimulationState) {
    let grid = s.layout.grid().clone();
    let active = s.active();
    let n = s.block.len;
    let dims = s.pressure.dims();
    let ghost = s.pressure.ghost();
    for d in 0..3 {
        if !active[d] {
            continue;
        }
        for side in 0..2 {
            let on_boundary =
                if side == 0 { s.block.at_low_boundary(d) } else { s.block.at_high_boundary(d, &grid) };
            if !on_boundary {
                continue;
            }
            let (ghost_l, src_l) = if side == 0 { (-1, 0) } else { (n[d] as isize, n[d] as isize - 1) };
            let cond = s.boundary.get(d, side);
            let ranges: [(isize, isize); 3] =
                std::array::from_fn(|a| (-(ghost[a] as isize), (dims[a] - ghost[a]) as isize));
            for k in ranges[2].0..ranges[2].1 {
                for j in ranges[1].0..ranges[1].1 {
                    for i in ranges[0].0..ranges[0].1 {
                        let idx = [i, j, k];
                        if idx[d] != ghost_l {
                            continue;
                        }
                        let mut src = idx;
                        src[d] = src_l;
                        match cond {
                            FaceCondition::SlipWall => mirror_cell(s, idx, src),
                            FaceCondition::FreeSurface => {
                                s.pressure.set(0, i, j, k, 0.0);
                                s.viscosity.set(0, i, j, k, 0.0);
                            }
                        }
                    }
                }
            }
        }
    }
}

fn mirror_cell(s: &mut SimulationState, to: [isize; 3], from: [isize; 3]) {
    let copy = |f: &mut Field| {
        for c in 0..f.components() {
            let v = f.get(c, from[0], from[1], from[2]);
            f.set(c, to[0], to[1], to[2], v);
        }
    };
    copy(&mut s.pressure);
    copy(&mut s.viscosity);
    copy(&mut s.sound_speed);
    copy(&mut s.cell_mass);
    copy(&mut s.volume);
    copy(&mut s.mat_mass);
    copy(&mut s.mat_density);
    copy(&mut s.mat_energy);
    copy(&mut s.mat_fraction);
}

/// Zero the normal velocity of vertices on slip walls and every velocity
/// component along inert axes.
pub fn apply_velocity_bc(s: &mut SimulationState) {
    let grid = s.layout.grid().clone();
    let cells = grid.cells();
    let active = s.active();
    let [(i0, i1), (j0, j1), (k0, k1)] = s.vertex_range();
    let plane = s.u.plane();
    for k in k0..k1 {
        for j in j0..j1 {
            for i in i0..i1 {
                let at = s.u.offset(i, j, k);
                let l = [i, j, k];
                for d in 0..3 {
                    let zero = if !active[d] {
                        true
                    } else {
                        let g = s.block.start[d] as isize + l[d];
                        (g == 0 && s.boundary.get(d, 0) == FaceCondition::SlipWall)
                            || (g == cells[d] as isize
                                && s.boundary.get(d, 1) == FaceCondition::SlipWall)
                    };
                    if zero {
                        s.u.data_mut()[d * plane + at] = 0.0;
                    }
                }
            }
        }
    }
}

/// Stable local time step over interior cells: `cfl · L / S` with `L` the
/// shortest active edge and `S = c + c_quad·max|Δu|`, plus the largest
/// corner speed in Eulerian mode.
pub fn local_dt(s: &SimulationState) -> f64 {
    let active = s.active();
    let euler = s.params.rezone == Rezone::Euler;
    let mut dt = f64::INFINITY;
    let pu = s.u.plane();
    let udata = s.u.data();
    for [i, j, k] in s.domain_cells(false) {
        let corners = hex_corners(&s.x, active, i, j, k);
        let mut l2 = f64::INFINITY;
        for d in 0..3 {
            if !active[d] {
                continue;
            }
            for n in 0..8 {
                if (n >> d) & 1 == 0 {
                    let m = n | (1 << d);
                    let e = [
                        corners[m][0] - corners[n][0],
                        corners[m][1] - corners[n][1],
                        corners[m][2] - corners[n][2],
                    ];
                    l2 = l2.min(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
                }
            }
        }
        let offs = corner_offsets(&s.u, active, i, j, k);
        let jumps = velocity_jumps(&s.u, &offs, active);
        let jump = jumps.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut speed = s.sound_speed.get(0, i, j, k) + s.params.c_quad * jump;
        if euler {
            let mut umax: f64 = 0.0;
            for off in &offs {
                let v = [udata[*off], udata[pu + off], udata[2 * pu + off]];
                umax = umax.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
            }
            speed += umax;
        }
        dt = dt.min(s.params.cfl * l2.sqrt() / speed.max(SPEED_FLOOR));
    }
    dt
}

/// Combine a local stable step into the global step: minimum over ranks,
/// growth cap, clipping to the end time. Stores and returns the step.
pub fn finish_dt(s: &mut SimulationState, global_min: f64) -> Result<f64> {
    let cap = match s.dt_prev {
        Some(prev) => s.params.dt_growth * prev,
        None => s.params.dt_initial.unwrap_or(f64::INFINITY),
    };
    let dt = global_min.min(cap);
    if !(dt >= 1e-14 * s.params.t_end) {
        return Err(SaleError::TimestepCollapse { cycle: s.cycle, dt });
    }
    s.dt_prev = Some(dt);
    let remaining = s.params.t_end - s.t;
    s.dt = if dt > remaining { remaining } else { dt };
    Ok(s.dt)
}

/// Global time step via one min-reduction.
pub fn compute_dt(s: &mut SimulationState, comm: &mut Communicator) -> Result<f64> {
    let local = local_dt(s);
    let global = comm.all_min(local)?;
    finish_dt(s, global)
}

/// Corner forces of every in-domain cell around this rank's vertices,
/// gathered per vertex in a fixed order.
pub fn compute_forces(s: &mut SimulationState) {
    let active = s.active();
    let cells = s.domain_cells(true);
    for &[i, j, k] in &cells {
        let p = s.pressure.get(0, i, j, k).max(0.0) + s.viscosity.get(0, i, j, k);
        let base = 24 * s.pressure.offset(i, j, k);
        let out = &mut s.corner_force[base..base + 24];
        if p == 0.0 {
            out.fill(0.0);
            continue;
        }
        let g = hex_volume_gradient(&hex_corners(&s.x, active, i, j, k));
        for n in 0..8 {
            for d in 0..3 {
                out[3 * n + d] = p * g[n][d];
            }
        }
    }
    let plan = gather_plan(active);
    let [(i0, i1), (j0, j1), (k0, k1)] = s.vertex_range();
    for k in k0..k1 {
        for j in j0..j1 {
            for i in i0..i1 {
                let mut f = [0.0; 3];
                for entry in &plan {
                    let c = [i + entry.cell[0], j + entry.cell[1], k + entry.cell[2]];
                    if !s.cell_in_domain(c[0], c[1], c[2]) {
                        continue;
                    }
                    let base = 24 * s.pressure.offset(c[0], c[1], c[2]);
                    for &n in &entry.corners {
                        for d in 0..3 {
                            f[d] += s.corner_force[base + 3 * n + d];
                        }
                    }
                }
                for d in 0..3 {
                    if !active[d] {
                        f[d] = 0.0;
                    }
                }
                let at = s.force.offset(i, j, k);
                s.force.set_vec3_at(at, f);
            }
        }
    }
}

/// `u += F/m·dt`, velocity boundary conditions, then `x += u·dt`; finally
/// the new cell volumes, reporting tangled cells.
pub fn advance_kinematics(s: &mut SimulationState, dt: f64) -> Result<()> {
    s.u_prev.data_mut().copy_from_slice(s.u.data());
    let [(i0, i1), (j0, j1), (k0, k1)] = s.vertex_range();
    for k in k0..k1 {
        for j in j0..j1 {
            for i in i0..i1 {
                let at = s.u.offset(i, j, k);
                let m = s.vertex_mass.get(0, i, j, k);
                let f = s.force.vec3_at(at);
                let mut v = s.u.vec3_at(at);
                for d in 0..3 {
                    v[d] += f[d] / m * dt;
                }
                s.u.set_vec3_at(at, v);
            }
        }
    }
    apply_velocity_bc(s);
    for k in k0..k1 {
        for j in j0..j1 {
            for i in i0..i1 {
                let at = s.x.offset(i, j, k);
                let v = s.u.vec3_at(at);
                let mut p = s.x.vec3_at(at);
                for d in 0..3 {
                    p[d] += v[d] * dt;
                }
                s.x.set_vec3_at(at, p);
            }
        }
    }
    let active = s.active();
    for [i, j, k] in s.domain_cells(false) {
        let v = hex_volume(&hex_corners(&s.x, active, i, j, k));
        if !(v > 0.0) {
            return Err(SaleError::TangledMesh { cell: s.global_cell(i, j, k), volume: v });
        }
        s.volume.set(0, i, j, k, v);
    }
    Ok(())
}

/// Internal energy update from the work of each cell's corner forces on
/// the time-centered vertex velocities, shared among materials by volume
/// fraction; then densities and the EoS are refreshed.
pub fn update_thermo(s: &mut SimulationState, dt: f64) -> Result<()> {
    let active = s.active();
    let nm = s.material_count();
    let pu = s.u.plane();
    for [i, j, k] in s.domain_cells(false) {
        let offs = corner_offsets(&s.u, active, i, j, k);
        let base = 24 * s.pressure.offset(i, j, k);
        let mut work = 0.0;
        {
            let u = s.u.data();
            let u0 = s.u_prev.data();
            let cf = &s.corner_force[base..base + 24];
            for (n, off) in offs.iter().enumerate() {
                for d in 0..3 {
                    let ubar = 0.5 * (u[d * pu + off] + u0[d * pu + off]);
                    work += cf[3 * n + d] * ubar;
                }
            }
        }
        let du = -work * dt;
        if du == 0.0 {
            continue;
        }
        for m in 0..nm {
            let mass = s.mat_mass.get(m, i, j, k);
            if mass > 0.0 {
                let f = s.mat_fraction.get(m, i, j, k);
                let e = s.mat_energy.get(m, i, j, k) + du * f / mass;
                s.mat_energy.set(m, i, j, k, e);
            }
        }
    }
    refresh_eos(s)
}

/// One Lagrangian cycle.
///
/// Exchanges, in order: material mass, energy and volume fraction; pressure
/// and viscosity; the time-step reduction; positions and velocities. That is
/// eight communication calls per cycle.
pub fn lagrangian_cycle(s: &mut SimulationState, comm: &mut Communicator) -> Result<()> {
    s.exchange(comm, &[tags::MAT_MASS, tags::MAT_ENERGY, tags::MAT_FRACTION])?;
    refresh_eos(s)?;
    compute_viscosity(s);
    let local = match s.params.exchange_mode {
        super::ExchangeMode::Blocking => {
            s.exchange(comm, &[tags::PRESSURE, tags::VISCOSITY])?;
            local_dt(s)
        }
        super::ExchangeMode::NonBlocking => {
            // the local step only reads interior data, so it overlaps the halo
            let (field, schedule) = s.field_and_schedule(tags::PRESSURE);
            let mut hp = crate::halo::exchange_start(field, schedule, comm)?;
            let (field, schedule) = s.field_and_schedule(tags::VISCOSITY);
            let mut hq = crate::halo::exchange_start(field, schedule, comm)?;
            let local = local_dt(s);
            let (field, schedule) = s.field_and_schedule(tags::PRESSURE);
            crate::halo::exchange_finish(&mut hp, field, schedule, comm)?;
            let (field, schedule) = s.field_and_schedule(tags::VISCOSITY);
            crate::halo::exchange_finish(&mut hq, field, schedule, comm)?;
            local
        }
    };
    apply_boundary(s);
    let global = comm.all_min(local)?;
    let dt = finish_dt(s, global)?;
    compute_forces(s);
    advance_kinematics(s, dt)?;
    update_thermo(s, dt)?;
    s.exchange(comm, &[tags::X, tags::U])?;
    s.t += dt;
    s.cycle += 1;
    Ok(())
}

/// Steinberg shear modulus and yield stress per interior cell, for the
/// first material with strength constants. Diagnostic only: the deviatoric
/// stress does not feed back into the momentum equation.
pub fn strength_diagnostics(s: &SimulationState) -> Option<(Field, Field)> {
    let m = (0..s.material_count()).find(|m| s.materials.get(*m).strength.is_some())?;
    let mat = s.materials.get(m);
    let st = mat.strength.expect("checked above");
    let mut shear = s.pressure.clone().with_tag(0);
    let mut yield_stress = s.pressure.clone().with_tag(0);
    shear.fill(0.0);
    yield_stress.fill(0.0);
    for [i, j, k] in s.domain_cells(false) {
        let rho = s.mat_density.get(m, i, j, k);
        if !(rho > 0.0) {
            continue;
        }
        let temp = s.mat_energy.get(m, i, j, k) / SPECIFIC_HEAT;
        let g = steinberg_shear(
            &st,
            s.pressure.get(0, i, j, k),
            rho,
            mat.rho0,
            temp,
            s.init_temperature.get(0, i, j, k),
        );
        shear.set(0, i, j, k, g);
        yield_stress.set(0, i, j, k, steinberg_yield(&st, 0.0, g));
    }
    Some((shear, yield_stress))
}
