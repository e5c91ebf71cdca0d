//! Rank neighbor graph over the 27-slot neighborhood.

use crate::error::Result;
use crate::grid::BlockLayout;

/// Adjacency class of a neighbor block, by the number of nonzero offset
/// components (one, two or three).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NeighborClass {
    Face,
    Edge,
    Corner,
}

impl NeighborClass {
    pub fn from_offset(offset: [i8; 3]) -> Option<Self> {
        match offset.iter().filter(|o| **o != 0).count() {
            1 => Some(Self::Face),
            2 => Some(Self::Edge),
            3 => Some(Self::Corner),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Self::Face => 0,
            Self::Edge => 1,
            Self::Corner => 2,
        }
    }

    pub const ALL: [NeighborClass; 3] = [Self::Face, Self::Edge, Self::Corner];
}

/// Communication weight hints per neighbor class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassWeights {
    pub face: u64,
    pub edge: u64,
    pub corner: u64,
}

impl ClassWeights {
    /// `N², N, 1` for block side `N`.
    pub fn for_block_side(side: usize) -> Self {
        let n = side.max(1) as u64;
        Self { face: n * n, edge: n, corner: 1 }
    }

    pub fn weight(&self, class: NeighborClass) -> u64 {
        match class {
            NeighborClass::Face => self.face,
            NeighborClass::Edge => self.edge,
            NeighborClass::Corner => self.corner,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub rank: usize,
    pub offset: [i8; 3],
    pub class: NeighborClass,
    pub weight: u64,
}

impl Neighbor {
    /// Slot in the 3×3×3 neighborhood, `13` being the rank itself.
    pub fn slot(&self) -> usize {
        let o = self.offset;
        (o[0] + 1) as usize + 3 * (o[1] + 1) as usize + 9 * (o[2] + 1) as usize
    }
}

/// A rank's neighbors, self excluded, in slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTopology {
    pub rank: usize,
    pub neighbors: Vec<Neighbor>,
}

impl NeighborTopology {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn count(&self, class: NeighborClass) -> usize {
        self.neighbors.iter().filter(|n| n.class == class).count()
    }

    /// `(neighbor rank, weight)` pairs, the form a graph-topology placement
    /// call consumes.
    pub fn weighted_edges(&self) -> Vec<(usize, u64)> {
        self.neighbors.iter().map(|n| (n.rank, n.weight)).collect()
    }
}

/// Build the neighbor graph of `rank`. Without explicit weights, face, edge
/// and corner neighbors are weighted `N², N, 1` for the largest block side.
pub fn build_topology(
    layout: &BlockLayout,
    rank: usize,
    weights: Option<ClassWeights>,
) -> Result<NeighborTopology> {
    let block = layout.block(rank)?;
    let ranks = layout.ranks_per_axis();
    let weights = weights.unwrap_or_else(|| {
        ClassWeights::for_block_side(block.len.iter().copied().max().unwrap_or(1))
    });
    let mut neighbors = Vec::new();
    for dz in -1i8..=1 {
        for dy in -1i8..=1 {
            for dx in -1i8..=1 {
                let offset = [dx, dy, dz];
                let Some(class) = NeighborClass::from_offset(offset) else {
                    continue;
                };
                let mut coords = [0usize; 3];
                let mut inside = true;
                for d in 0..3 {
                    let c = block.coords[d] as isize + offset[d] as isize;
                    if c < 0 || c >= ranks[d] as isize {
                        inside = false;
                        break;
                    }
                    coords[d] = c as usize;
                }
                if inside {
                    neighbors.push(Neighbor {
                        rank: layout.rank_of(coords),
                        offset,
                        class,
                        weight: weights.weight(class),
                    });
                }
            }
        }
    }
    Ok(NeighborTopology { rank, neighbors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{decompose_domain, GlobalGrid};

    fn layout(cells: [usize; 3], ranks: [usize; 3]) -> BlockLayout {
        decompose_domain(&GlobalGrid::unit(cells).unwrap(), ranks).unwrap()
    }

    #[test]
    fn center_of_three_cubed_has_26_neighbors() {
        let l = layout([6, 6, 6], [3, 3, 3]);
        let t = build_topology(&l, 13, None).unwrap();
        assert_eq!(t.len(), 26);
        assert_eq!(t.count(NeighborClass::Face), 6);
        assert_eq!(t.count(NeighborClass::Edge), 12);
        assert_eq!(t.count(NeighborClass::Corner), 8);
        assert!(t.neighbors.iter().all(|n| n.slot() != 13 && n.rank != 13));
    }

    #[test]
    fn corner_rank_has_seven_neighbors() {
        let l = layout([6, 6, 6], [3, 3, 3]);
        let t = build_topology(&l, 0, None).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.count(NeighborClass::Face), 3);
        assert_eq!(t.count(NeighborClass::Edge), 3);
        assert_eq!(t.count(NeighborClass::Corner), 1);
    }

    #[test]
    fn one_dimensional_middle_rank() {
        let l = layout([6, 1, 1], [3, 1, 1]);
        let t = build_topology(&l, 1, None).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.neighbors.iter().all(|n| n.class == NeighborClass::Face));
        assert_eq!(t.neighbors[0].rank, 0);
        assert_eq!(t.neighbors[1].rank, 2);
    }

    #[test]
    fn two_dimensional_center_has_eight() {
        let l = layout([6, 6, 1], [3, 3, 1]);
        let t = build_topology(&l, 4, None).unwrap();
        assert_eq!(t.len(), 8);
    }

    #[test]
    fn default_weights_order_face_edge_corner() {
        let l = layout([48, 48, 48], [3, 3, 3]);
        let t = build_topology(&l, 13, None).unwrap();
        for n in &t.neighbors {
            let expect = match n.class {
                NeighborClass::Face => 256,
                NeighborClass::Edge => 16,
                NeighborClass::Corner => 1,
            };
            assert_eq!(n.weight, expect);
        }
        let explicit = ClassWeights { face: 9, edge: 3, corner: 2 };
        let t = build_topology(&l, 13, Some(explicit)).unwrap();
        assert!(t.neighbors.iter().any(|n| n.weight == 2));
    }

    #[test]
    fn offsets_are_unique_and_classified() {
        let l = layout([8, 8, 8], [2, 2, 2]);
        for r in 0..8 {
            let t = build_topology(&l, r, None).unwrap();
            let mut slots: Vec<_> = t.neighbors.iter().map(|n| n.slot()).collect();
            slots.dedup();
            assert_eq!(slots.len(), 7);
            for n in &t.neighbors {
                assert_eq!(Some(n.class), NeighborClass::from_offset(n.offset));
            }
        }
    }
}
