//! Conservation totals with a fixed summation order: each rank sums its
//! interior cells and owned vertices in storage order, and ranks are
//! combined in rank order. Sums are compensated, so the totals agree
//! across rank splits to a few ulps rather than drifting with N·eps.

use crate::error::Result;
use crate::halo::Communicator;
use crate::hydro::SimulationState;

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationTotals {
    pub mass: Vec<f64>,
    pub momentum: [f64; 3],
    pub internal: f64,
    pub kinetic: f64,
}

impl ConservationTotals {
    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.internal + self.kinetic
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.c
    }
}

/// One rank's contribution, flattened as
/// `[mass per material..., px, py, pz, internal, kinetic]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditPartials(pub Vec<f64>);

pub fn local_partials(s: &SimulationState) -> AuditPartials {
    let nm = s.material_count();
    let mut out = vec![Kahan::default(); nm + 5];
    for [i, j, k] in s.domain_cells(false) {
        for m in 0..nm {
            let mass = s.mat_mass.get(m, i, j, k);
            out[m].add(mass);
            out[nm + 3].add(mass * s.mat_energy.get(m, i, j, k));
        }
    }
    let [(i0, i1), (j0, j1), (k0, k1)] = s.vertex_range();
    for k in k0..k1 {
        for j in j0..j1 {
            for i in i0..i1 {
                if !s.owns_vertex(i, j, k) {
                    continue;
                }
                let m = s.vertex_mass.get(0, i, j, k);
                let u = s.u.vec3_at(s.u.offset(i, j, k));
                for d in 0..3 {
                    out[nm + d].add(m * u[d]);
                }
                out[nm + 4].add(0.5 * m * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]));
            }
        }
    }
    AuditPartials(out.into_iter().map(Kahan::value).collect())
}

/// Combine per-rank partials, given in rank order.
pub fn combine_partials(parts: &[AuditPartials]) -> ConservationTotals {
    let len = parts.first().map_or(5, |p| p.0.len());
    let nm = len - 5;
    let mut acc = vec![Kahan::default(); len];
    for p in parts {
        for (a, b) in acc.iter_mut().zip(&p.0) {
            a.add(*b);
        }
    }
    let sum: Vec<f64> = acc.into_iter().map(Kahan::value).collect();
    ConservationTotals {
        mass: sum[..nm].to_vec(),
        momentum: [sum[nm], sum[nm + 1], sum[nm + 2]],
        internal: sum[nm + 3],
        kinetic: sum[nm + 4],
    }
}

/// Global totals; one gather.
pub fn conservation_audit(s: &SimulationState, comm: &mut Communicator) -> Result<ConservationTotals> {
    let local = local_partials(s);
    let all = comm.all_gather(&local.0)?;
    Ok(combine_partials(&all.into_iter().map(AuditPartials).collect::<Vec<_>>()))
}
