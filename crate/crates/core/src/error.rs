use thiserror::Error;

/// Errors raised by the kernel and the physics application layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SaleError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("over-decomposition on axis {axis}: {cells} cells cannot give {ranks} blocks of at least 2 cells")]
    OverDecomposition { axis: usize, cells: usize, ranks: usize },

    #[error("rank {rank} out of range for a layout of {size} ranks")]
    InvalidRank { rank: usize, size: usize },

    #[error("material count must be positive")]
    ZeroMaterials,

    #[error("tangled mesh: cell {cell:?} has volume {volume:e}")]
    TangledMesh { cell: [usize; 3], volume: f64 },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("empty cell {cell:?}: all volume fractions are zero")]
    EmptyCell { cell: [usize; 3] },

    #[error("timestep collapse at cycle {cycle}: dt = {dt:e}")]
    TimestepCollapse { cycle: u64, dt: f64 },

    #[error("remap overrun at vertex {vertex:?}: displacement {displacement:e} exceeds {limit:e}")]
    RemapOverrun { vertex: [usize; 3], displacement: f64, limit: f64 },

    #[error("negative remapped mass {mass:e} for material {material} in cell {cell:?}")]
    NegativeMass { cell: [usize; 3], material: usize, mass: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("transport failure with rank {neighbor}: {reason}")]
    Transport { neighbor: usize, reason: String },

    #[error("vacuum generated by Riemann data")]
    Vacuum,

    #[error("oracle failed to converge: {0}")]
    NonConvergence(String),

    #[error("no baseline record with one core")]
    MissingBaseline,
}

pub type Result<T> = std::result::Result<T, SaleError>;
