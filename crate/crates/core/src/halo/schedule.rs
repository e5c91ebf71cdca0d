//! Per-neighbor send and receive regions for one field shape.

use super::topology::{NeighborClass, NeighborTopology};
use crate::grid::{Centering, Field};

/// Half-open box of local indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub lo: [isize; 3],
    pub hi: [isize; 3],
}

impl Region {
    pub fn count(&self) -> usize {
        (0..3).map(|d| (self.hi[d] - self.lo[d]).max(0) as usize).product()
    }

    pub fn extent(&self) -> [usize; 3] {
        std::array::from_fn(|d| (self.hi[d] - self.lo[d]).max(0) as usize)
    }

    pub fn for_each(&self, mut f: impl FnMut(isize, isize, isize)) {
        for k in self.lo[2]..self.hi[2] {
            for j in self.lo[1]..self.hi[1] {
                for i in self.lo[0]..self.hi[0] {
                    f(i, j, k);
                }
            }
        }
    }
}

/// What a schedule needs to know about a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldShape {
    pub centering: Centering,
    pub interior: [usize; 3],
    pub ghost: [usize; 3],
}

impl FieldShape {
    pub fn of(field: &Field) -> Self {
        Self { centering: field.centering(), interior: field.interior_extent(), ghost: field.ghost() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborMessage {
    pub rank: usize,
    pub offset: [i8; 3],
    pub class: NeighborClass,
    pub send: Region,
    pub recv: Region,
}

impl NeighborMessage {
    /// Elements per component.
    pub fn elements(&self) -> usize {
        self.send.count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommSchedule {
    pub rank: usize,
    pub shape: FieldShape,
    pub messages: Vec<NeighborMessage>,
}

impl CommSchedule {
    /// Per-component element count sent to one neighbor of `class`, if any.
    pub fn elements_for(&self, class: NeighborClass) -> Option<usize> {
        self.messages.iter().find(|m| m.class == class).map(|m| m.elements())
    }
}

/// Local index range along one axis sent to the neighbor at offset `o`.
/// Vertex fields skip the replicated interface plane and send the plane
/// behind it.
fn send_range(o: i8, n: isize, active: bool, vertex: bool) -> (isize, isize) {
    if !active {
        return (0, 1);
    }
    let skip = isize::from(vertex);
    match o {
        1 => (n - 1 - skip, n - skip),
        -1 => (skip, skip + 1),
        _ => (0, n),
    }
}

fn recv_range(o: i8, n: isize, active: bool, ghost: isize) -> (isize, isize) {
    if !active {
        return (0, 1);
    }
    match o {
        1 => (n, n + ghost),
        -1 => (-ghost, 0),
        _ => (0, n),
    }
}

/// Message regions for every neighbor of `topology` for fields of `shape`.
pub fn build_schedule(topology: &NeighborTopology, shape: FieldShape) -> CommSchedule {
    let vertex = shape.centering == Centering::Vertex;
    let messages = topology
        .neighbors
        .iter()
        .map(|nb| {
            let mut send = Region { lo: [0; 3], hi: [1; 3] };
            let mut recv = send;
            for d in 0..3 {
                let active = shape.ghost[d] > 0;
                let n = shape.interior[d] as isize;
                let (slo, shi) = send_range(nb.offset[d], n, active, vertex);
                let (rlo, rhi) = recv_range(nb.offset[d], n, active, shape.ghost[d] as isize);
                send.lo[d] = slo;
                send.hi[d] = shi;
                recv.lo[d] = rlo;
                recv.hi[d] = rhi;
            }
            NeighborMessage { rank: nb.rank, offset: nb.offset, class: nb.class, send, recv }
        })
        .collect();
    CommSchedule { rank: topology.rank, shape, messages }
}
