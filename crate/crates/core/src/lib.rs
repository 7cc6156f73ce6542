//! Exact numerics for spin-1/2 XX and XXZ models on `nx x ny` lattices
//! with open boundaries.
//!
//! The crate is built around fixed-magnetization sectors. A configuration
//! is a `u64` bitmask (bit set = spin up) and its index is the colex rank,
//! so the Hamiltonian is applied matrix-free and deterministically. On top
//! of that sit dense diagonalization split by lattice symmetries, Lanczos
//! chains with zero-mode analysis, real-time evolution, exact scar states,
//! sublattice and chiral trace identities, and a free-fermion reference.
//!
//! ```
//! use spinkrylov::basis::SectorBasis;
//! use spinkrylov::lattice::{Couplings, LatticeSpec};
//! use spinkrylov::operator::Hamiltonian;
//! use spinkrylov::spectral::{diagonalize, zero_mode_count, DiagonalizeOptions};
//!
//! let lattice = LatticeSpec::new(4, 2, Couplings::xx(1.0, 1.0))?;
//! let basis = SectorBasis::zero_magnetization(lattice.n_sites())?;
//! let h = Hamiltonian::new(&lattice);
//! let report = diagonalize(&h, &basis, &DiagonalizeOptions::default())?;
//! assert_eq!(report.dim(), 70);
//! assert!(zero_mode_count(&report).count >= 16);
//! # Ok::<(), spinkrylov::Error>(())
//! ```

pub mod basis;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod fermion;
pub mod krylov;
pub mod lattice;
pub mod operator;
pub mod scars;
pub mod spectral;
pub mod symmetry;
pub mod witten;

pub use basis::SectorBasis;
pub use error::{Error, Result};
pub use lattice::{Couplings, LatticeSpec};
pub use operator::{Hamiltonian, StateVector};

/// Size the global worker pool shared by the matvec, the block
/// eigensolvers and the time loops. `0` means one thread per core, `1`
/// runs everything serially. Must be called before the first parallel
/// routine.
pub fn init_threads(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("cannot size the thread pool: {e}")))?;
    faer::set_global_parallelism(if threads == 1 { faer::Par::Seq } else { faer::Par::rayon(threads) });
    Ok(())
}

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattices.md")]
    mod lattices {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/lanczos.md")]
    mod lanczos {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/scars.md")]
    mod scars {}
    #[doc = include_str!("../../../book/src/fermions.md")]
    mod fermions {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
