//! Global grid, block decomposition and ghost-framed block-local fields.
//!
//! A [`Field`] is the block-local storage of one physical quantity. It is
//! either cell- or vertex-centered and may carry a leading component axis
//! (materials, or vector components). Indices passed to the accessors are
//! *local interior* indices: `0..n` addresses the interior, `-g..0` and
//! `n..n+g` the ghost frame. Axes with a single global cell are inert: they
//! carry no ghosts and vertex fields keep a single entry along them.

use crate::error::{Result, SaleError};

/// Ghost frame width used by every field. All stencils are nearest-neighbor.
pub const GHOST_WIDTH: usize = 1;

/// Global Cartesian cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalGrid {
    cells: [usize; 3],
    extent: [f64; 3],
}

impl GlobalGrid {
    pub fn new(cells: [usize; 3], extent: [f64; 3]) -> Result<Self> {
        for d in 0..3 {
            if cells[d] == 0 {
                return Err(SaleError::InvalidGrid(format!("axis {d} has zero cells")));
            }
            if !(extent[d] > 0.0) || !extent[d].is_finite() {
                return Err(SaleError::InvalidGrid(format!(
                    "axis {d} has non-positive extent {}",
                    extent[d]
                )));
            }
        }
        Ok(Self { cells, extent })
    }

    /// Unit-extent grid.
    pub fn unit(cells: [usize; 3]) -> Result<Self> {
        Self::new(cells, [1.0; 3])
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn extent(&self) -> [f64; 3] {
        self.extent
    }

    pub fn is_active(&self, axis: usize) -> bool {
        self.cells[axis] > 1
    }

    pub fn active_axes(&self) -> [bool; 3] {
        [self.is_active(0), self.is_active(1), self.is_active(2)]
    }

    pub fn dimensionality(&self) -> usize {
        self.active_axes().iter().filter(|a| **a).count()
    }

    pub fn total_cells(&self) -> usize {
        self.cells.iter().product()
    }

    /// Cell width along `axis`. Inert axes have unit thickness.
    pub fn cell_width(&self, axis: usize) -> f64 {
        if self.is_active(axis) {
            self.extent[axis] / self.cells[axis] as f64
        } else {
            1.0
        }
    }

    /// Coordinate of global vertex plane `index` along an active axis.
    /// Signed so that ghost planes outside the domain are addressable.
    pub fn vertex_coord(&self, axis: usize, index: isize) -> f64 {
        if self.is_active(axis) {
            index as f64 * self.cell_width(axis)
        } else {
            0.0
        }
    }

    /// Product of the domain extents along active axes (inert axes count 1).
    pub fn domain_volume(&self) -> f64 {
        (0..3)
            .map(|d| if self.is_active(d) { self.extent[d] } else { 1.0 })
            .product()
    }
}

/// Partition of a [`GlobalGrid`] into one block per rank.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    grid: GlobalGrid,
    ranks: [usize; 3],
    /// Per axis, block start offsets followed by the total cell count.
    offsets: [Vec<usize>; 3],
    ghost_width: usize,
}

/// One rank's block: its position in the rank grid and its global cell range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub rank: usize,
    pub coords: [usize; 3],
    pub start: [usize; 3],
    pub len: [usize; 3],
}

impl Block {
    /// Whether the low face along `axis` lies on the domain boundary.
    pub fn at_low_boundary(&self, axis: usize) -> bool {
        self.start[axis] == 0
    }

    pub fn at_high_boundary(&self, axis: usize, grid: &GlobalGrid) -> bool {
        self.start[axis] + self.len[axis] == grid.cells()[axis]
    }

    pub fn cell_count(&self) -> usize {
        self.len.iter().product()
    }
}

/// Split `cells` into `parts` contiguous ranges, sizes differing by at most
/// one, with the remainder given to the lowest-index parts.
fn split_axis(cells: usize, parts: usize) -> Vec<usize> {
    let base = cells / parts;
    let extra = cells % parts;
    let mut offsets = Vec::with_capacity(parts + 1);
    let mut at = 0;
    for p in 0..parts {
        offsets.push(at);
        at += base + usize::from(p < extra);
    }
    offsets.push(at);
    offsets
}

/// Partition `grid` into `ranks_per_axis` blocks.
pub fn decompose_domain(grid: &GlobalGrid, ranks_per_axis: [usize; 3]) -> Result<BlockLayout> {
    let cells = grid.cells();
    for d in 0..3 {
        let r = ranks_per_axis[d];
        if r == 0 {
            return Err(SaleError::InvalidGrid(format!("axis {d} has zero ranks")));
        }
        if grid.is_active(d) {
            if cells[d] < 2 * r {
                return Err(SaleError::OverDecomposition { axis: d, cells: cells[d], ranks: r });
            }
        } else if r != 1 {
            return Err(SaleError::OverDecomposition { axis: d, cells: cells[d], ranks: r });
        }
    }
    let offsets = [
        split_axis(cells[0], ranks_per_axis[0]),
        split_axis(cells[1], ranks_per_axis[1]),
        split_axis(cells[2], ranks_per_axis[2]),
    ];
    Ok(BlockLayout { grid: grid.clone(), ranks: ranks_per_axis, offsets, ghost_width: GHOST_WIDTH })
}

impl BlockLayout {
    pub fn grid(&self) -> &GlobalGrid {
        &self.grid
    }

    pub fn ranks_per_axis(&self) -> [usize; 3] {
        self.ranks
    }

    pub fn size(&self) -> usize {
        self.ranks.iter().product()
    }

    pub fn ghost_width(&self) -> usize {
        self.ghost_width
    }

    pub fn rank_of(&self, coords: [usize; 3]) -> usize {
        coords[0] + self.ranks[0] * (coords[1] + self.ranks[1] * coords[2])
    }

    pub fn coords_of(&self, rank: usize) -> [usize; 3] {
        [
            rank % self.ranks[0],
            (rank / self.ranks[0]) % self.ranks[1],
            rank / (self.ranks[0] * self.ranks[1]),
        ]
    }

    pub fn block(&self, rank: usize) -> Result<Block> {
        let size = self.size();
        if rank >= size {
            return Err(SaleError::InvalidRank { rank, size });
        }
        let coords = self.coords_of(rank);
        let mut start = [0; 3];
        let mut len = [0; 3];
        for d in 0..3 {
            let o = &self.offsets[d];
            start[d] = o[coords[d]];
            len[d] = o[coords[d] + 1] - o[coords[d]];
        }
        Ok(Block { rank, coords, start, len })
    }

    pub fn blocks(&self) -> impl Iterator<Item = Block> + '_ {
        (0..self.size()).map(move |r| self.block(r).expect("rank in range"))
    }

    /// Rank owning global cell `cell`.
    pub fn owner_of_cell(&self, cell: [usize; 3]) -> usize {
        let mut coords = [0; 3];
        for d in 0..3 {
            let o = &self.offsets[d];
            // partition_point gives the first offset strictly above the cell
            coords[d] = o.partition_point(|&s| s <= cell[d]) - 1;
        }
        self.rank_of(coords)
    }

    /// Rank owning global vertex `vertex` for reductions. Vertices on block
    /// interfaces are replicated; the block holding the cell at the same
    /// index (clamped to the last cell) owns them.
    pub fn owner_of_vertex(&self, vertex: [usize; 3]) -> usize {
        let cells = self.grid.cells();
        let cell = [
            vertex[0].min(cells[0] - 1),
            vertex[1].min(cells[1] - 1),
            vertex[2].min(cells[2] - 1),
        ];
        self.owner_of_cell(cell)
    }
}

/// Where a field's values live on the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Centering {
    Cell,
    Vertex,
}

/// Block-local, ghost-framed array of 64-bit reals with an optional leading
/// component axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    centering: Centering,
    components: usize,
    interior: [usize; 3],
    ghost: [usize; 3],
    dims: [usize; 3],
    data: Vec<f64>,
    tag: u32,
    pub(crate) sequence: u32,
    pub(crate) exchanges: u64,
    pub(crate) pending: bool,
}

impl Field {
    /// Field over a block of `block_len` cells. `active` marks axes that carry
    /// ghosts and (for vertex fields) the extra vertex entry.
    pub fn new(
        block_len: [usize; 3],
        active: [bool; 3],
        ghost_width: usize,
        centering: Centering,
        components: usize,
    ) -> Result<Self> {
        if components == 0 {
            return Err(SaleError::ZeroMaterials);
        }
        let mut interior = [1; 3];
        let mut ghost = [0; 3];
        let mut dims = [1; 3];
        for d in 0..3 {
            if active[d] {
                interior[d] = block_len[d] + usize::from(centering == Centering::Vertex);
                ghost[d] = ghost_width;
                dims[d] = interior[d] + 2 * ghost_width;
            }
        }
        let len = components * dims.iter().product::<usize>();
        Ok(Self {
            centering,
            components,
            interior,
            ghost,
            dims,
            data: vec![0.0; len],
            tag: 0,
            sequence: 0,
            exchanges: 0,
            pending: false,
        })
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Interior entry count per axis.
    pub fn interior_extent(&self) -> [usize; 3] {
        self.interior
    }

    /// Ghost width per axis (zero on inert axes).
    pub fn ghost(&self) -> [usize; 3] {
        self.ghost
    }

    /// Spatial storage extents per axis.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Full storage shape with the component axis first when present.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(4);
        if self.components > 1 {
            s.push(self.components);
        }
        s.extend(self.dims.iter().rev());
        s
    }

    /// Number of spatial entries (storage stride of the component axis).
    #[inline]
    pub fn plane(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn tag(&self) -> u32 {
        self.tag
    }

    pub fn set_tag(&mut self, tag: u32) {
        self.tag = tag;
    }

    pub fn with_tag(mut self, tag: u32) -> Self {
        self.tag = tag;
        self
    }

    /// Completed exchange rounds on this field.
    pub fn exchange_count(&self) -> u64 {
        self.exchanges
    }

    /// Whether a non-blocking exchange is in flight.
    pub fn has_pending_exchange(&self) -> bool {
        self.pending
    }

    /// Spatial storage offset of local index `(i, j, k)`.
    #[inline(always)]
    pub fn offset(&self, i: isize, j: isize, k: isize) -> usize {
        let [gx, gy, gz] = self.ghost;
        let [dx, dy, _] = self.dims;
        let ii = (i + gx as isize) as usize;
        let jj = (j + gy as isize) as usize;
        let kk = (k + gz as isize) as usize;
        debug_assert!(ii < self.dims[0] && jj < self.dims[1] && kk < self.dims[2]);
        (kk * dy + jj) * dx + ii
    }

    #[inline(always)]
    pub fn get(&self, c: usize, i: isize, j: isize, k: isize) -> f64 {
        self.data[c * self.plane() + self.offset(i, j, k)]
    }

    #[inline(always)]
    pub fn set(&mut self, c: usize, i: isize, j: isize, k: isize, v: f64) {
        let at = c * self.plane() + self.offset(i, j, k);
        self.data[at] = v;
    }

    /// Three-component read at a spatial offset.
    #[inline(always)]
    pub fn vec3_at(&self, at: usize) -> [f64; 3] {
        let p = self.plane();
        [self.data[at], self.data[p + at], self.data[2 * p + at]]
    }

    #[inline(always)]
    pub fn set_vec3_at(&mut self, at: usize, v: [f64; 3]) {
        let p = self.plane();
        self.data[at] = v[0];
        self.data[p + at] = v[1];
        self.data[2 * p + at] = v[2];
    }

    /// Direct access to the whole storage, ghosts included.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// True when local index `(i, j, k)` lies in the ghost frame.
    pub fn is_ghost(&self, i: isize, j: isize, k: isize) -> bool {
        let idx = [i, j, k];
        (0..3).any(|d| idx[d] < 0 || idx[d] >= self.interior[d] as isize)
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn interior_view(&self) -> InteriorView<'_> {
        InteriorView { field: self }
    }

    pub fn interior_view_mut(&mut self) -> InteriorViewMut<'_> {
        InteriorViewMut { field: self }
    }

    /// Iterate all interior local indices in storage order.
    pub fn interior_indices(&self) -> impl Iterator<Item = [usize; 3]> {
        let [nx, ny, nz] = self.interior;
        (0..nz).flat_map(move |k| (0..ny).flat_map(move |j| (0..nx).map(move |i| [i, j, k])))
    }
}

/// Allocate a zeroed field for `rank`'s block.
pub fn allocate_field(
    layout: &BlockLayout,
    rank: usize,
    centering: Centering,
    material_count: Option<usize>,
) -> Result<Field> {
    let block = layout.block(rank)?;
    Field::new(
        block.len,
        layout.grid().active_axes(),
        layout.ghost_width(),
        centering,
        material_count.unwrap_or(1),
    )
}

/// Read-only handle over the interior region of a field.
pub struct InteriorView<'a> {
    field: &'a Field,
}

impl InteriorView<'_> {
    pub fn extent(&self) -> [usize; 3] {
        self.field.interior
    }

    pub fn len(&self) -> usize {
        self.field.components * self.field.interior.iter().product::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, c: usize, idx: [usize; 3]) -> f64 {
        self.field.get(c, idx[0] as isize, idx[1] as isize, idx[2] as isize)
    }

    /// Interior values of component `c` in storage order.
    pub fn values(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.field.interior_indices().map(move |idx| self.get(c, idx))
    }
}

/// Mutable handle over the interior region; writes alias field storage.
pub struct InteriorViewMut<'a> {
    field: &'a mut Field,
}

impl InteriorViewMut<'_> {
    pub fn extent(&self) -> [usize; 3] {
        self.field.interior
    }

    pub fn len(&self) -> usize {
        self.field.components * self.field.interior.iter().product::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, c: usize, idx: [usize; 3]) -> f64 {
        self.field.get(c, idx[0] as isize, idx[1] as isize, idx[2] as isize)
    }

    pub fn set(&mut self, c: usize, idx: [usize; 3], v: f64) {
        self.field.set(c, idx[0] as isize, idx[1] as isize, idx[2] as isize, v);
    }

    /// Fill every interior entry of every component.
    pub fn fill(&mut self, v: f64) {
        let indices: Vec<_> = self.field.interior_indices().collect();
        for c in 0..self.field.components {
            for idx in &indices {
                self.set(c, *idx, v);
            }
        }
    }
}
