use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice dimensions must be positive (got {nx}x{ny})")]
    EmptyLattice { nx: usize, ny: usize },

    #[error("lattice has {sites} sites; configurations are limited to 64 sites")]
    TooManySites { sites: usize },

    #[error("shell {requested} does not exist on this lattice (largest shell is {max})")]
    ShellOutOfRange { requested: usize, max: usize },

    #[error("invalid shell perturbation: {0}")]
    InvalidShell(String),

    #[error("sector C({n_sites}, {n_down}) is too large to index")]
    SectorTooLarge { n_sites: usize, n_down: usize },

    #[error("configuration {mask:#x} has {found} down spins, sector requires {expected}")]
    NotInSector { mask: u64, found: usize, expected: usize },

    #[error("state lives in sector ({found_sites}, {found_down}) but basis is ({sites}, {down})")]
    BasisMismatch {
        sites: usize,
        down: usize,
        found_sites: usize,
        found_down: usize,
    },

    #[error("dense problem of dimension {dim} exceeds cap {cap}; use the Krylov routines instead")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("operation requires a two-leg ladder (ny = 2), got ny = {ny}")]
    NotALadder { ny: usize },

    #[error("spectrum report was built without eigenvectors")]
    MissingEigenvectors,

    #[error("energy {energy} is outside the attainable thermal range ({min}, {max})")]
    EnergyOutOfRange { energy: f64, min: f64, max: f64 },

    #[error("fit window too short: {0}")]
    FitWindow(String),

    #[error("Krylov stepper could not reach tolerance {tol:e}: {detail}")]
    StepperTolerance { tol: f64, detail: String },

    #[error("storing {steps} Krylov vectors of dimension {dim} needs {bytes} bytes (budget {budget}); use the storage-free mode")]
    MemoryBudget {
        steps: usize,
        dim: usize,
        bytes: usize,
        budget: usize,
    },

    #[error("pattern enumeration produced more than {cap} initial states")]
    PatternCap { cap: usize },

    #[error("diagonal Lanczos coefficient {value:e} at step {step} is not zero; chain zero mode undefined")]
    NonChiralChain { step: usize, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
