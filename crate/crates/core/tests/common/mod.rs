#![allow(dead_code)]

use sale_core::grid::{decompose_domain, GlobalGrid};
use sale_core::halo::{run_in_process, Communicator};
use sale_core::hydro::{lagrangian_cycle, HydroParams, Rezone, SimulationState};
use sale_core::problems::{init_problem, ProblemSpec};
use sale_core::remap::eulerian_cycle;
use sale_core::Result;

/// Global cell and owned-vertex values gathered from every rank, sorted
/// by global index.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub cycle: u64,
    /// (global cell, [volume, mass, per-material energy..., pressure])
    pub cells: Vec<([usize; 3], Vec<f64>)>,
    /// (global vertex, [x, y, z, u, v, w])
    pub vertices: Vec<([usize; 3], [f64; 6])>,
}

pub fn snapshot(s: &SimulationState) -> Snapshot {
    let nm = s.material_count();
    let mut cells = Vec::new();
    for [i, j, k] in s.domain_cells(false) {
        let mut v = vec![s.volume.get(0, i, j, k), s.cell_mass.get(0, i, j, k)];
        for m in 0..nm {
            v.push(s.mat_energy.get(m, i, j, k));
        }
        v.push(s.pressure.get(0, i, j, k));
        cells.push((s.global_cell(i, j, k), v));
    }
    let mut vertices = Vec::new();
    let [(i0, i1), (j0, j1), (k0, k1)] = s.vertex_range();
    for k in k0..k1 {
        for j in j0..j1 {
            for i in i0..i1 {
                if !s.owns_vertex(i, j, k) {
                    continue;
                }
                let at = s.x.offset(i, j, k);
                let x = s.x.vec3_at(at);
                let u = s.u.vec3_at(at);
                vertices.push((s.global_cell(i, j, k), [x[0], x[1], x[2], u[0], u[1], u[2]]));
            }
        }
    }
    Snapshot { t: s.t, cycle: s.cycle, cells, vertices }
}

pub fn merge(parts: Vec<Snapshot>) -> Snapshot {
    let mut out = Snapshot { t: parts[0].t, cycle: parts[0].cycle, cells: vec![], vertices: vec![] };
    for p in parts {
        assert_eq!(p.t, out.t);
        out.cells.extend(p.cells);
        out.vertices.extend(p.vertices);
    }
    out.cells.sort_by_key(|c| [c.0[2], c.0[1], c.0[0]]);
    out.vertices.sort_by_key(|c| [c.0[2], c.0[1], c.0[0]]);
    out
}

/// Largest elementwise difference relative to the value scale of each
/// quantity.
pub fn max_rel_diff(a: &Snapshot, b: &Snapshot) -> f64 {
    assert_eq!(a.cells.len(), b.cells.len());
    assert_eq!(a.vertices.len(), b.vertices.len());
    let mut worst: f64 = 0.0;
    let mut cmp = |x: f64, y: f64, scale: f64| {
        worst = worst.max((x - y).abs() / scale.max(1e-300));
    };
    let ncell = a.cells[0].1.len();
    for q in 0..ncell {
        let scale = a.cells.iter().map(|c| c.1[q].abs()).fold(0.0, f64::max);
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            assert_eq!(ca.0, cb.0);
            cmp(ca.1[q], cb.1[q], scale);
        }
    }
    for q in 0..6 {
        let scale = a.vertices.iter().map(|c| c.1[q].abs()).fold(0.0, f64::max);
        for (va, vb) in a.vertices.iter().zip(&b.vertices) {
            assert_eq!(va.0, vb.0);
            cmp(va.1[q], vb.1[q], scale.max(1e-12));
        }
    }
    worst
}

pub fn cycle(s: &mut SimulationState, comm: &mut Communicator) -> Result<()> {
    match s.params.rezone {
        Rezone::Lagrange => lagrangian_cycle(s, comm),
        Rezone::Euler => eulerian_cycle(s, comm),
    }
}

/// Run `cycles` cycles of `spec` on `ranks` in-process workers and return
/// the merged final snapshot.
pub fn run_problem(
    spec: &ProblemSpec,
    cells: [usize; 3],
    extent: [f64; 3],
    ranks: [usize; 3],
    params: HydroParams,
    cycles: usize,
) -> Snapshot {
    let grid = GlobalGrid::new(cells, extent).unwrap();
    let layout = decompose_domain(&grid, ranks).unwrap();
    let parts = run_in_process(layout.size(), |rank, mut comm| {
        let mut s = init_problem(&layout, rank, spec, params).unwrap();
        s.prime_timestep(&mut comm).unwrap();
        for _ in 0..cycles {
            if s.t >= s.params.t_end {
                break;
            }
            cycle(&mut s, &mut comm).unwrap();
        }
        snapshot(&s)
    });
    merge(parts)
}
