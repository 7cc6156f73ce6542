//! Traces of the sublattice and chiral operators, in closed form and by
//! direct summation.
//!
//! Both operators anticommute with the XX Hamiltonian, so the absolute
//! value of their trace over a sector bounds the number of zero modes in
//! it from below. The closed forms follow from expanding
//! `(1 - z)^E (1 + z)^O` over the even and odd sublattices.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::basis::{binomial, SectorBasis};
use crate::error::{Error, Result};
use crate::lattice::{Couplings, LatticeSpec};
use crate::operator::{sublattice_sign, Symmetry, SymmetryAction};

/// Largest sector the brute-force trace will walk.
pub const BRUTE_FORCE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceOperator {
    /// `S = (-1)^(down spins on even sites)`.
    Sublattice,
    /// `C = X I S`: spin flip times inversion times `S`.
    Chiral,
}

impl TraceOperator {
    pub fn name(self) -> &'static str {
        match self {
            TraceOperator::Sublattice => "sublattice",
            TraceOperator::Chiral => "chiral",
        }
    }
}

/// Exact `C(n, k)`.
pub fn big_binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn sign(odd: bool) -> BigInt {
    if odd {
        -BigInt::one()
    } else {
        BigInt::one()
    }
}

/// `tr S` over the sector with `n_down` down spins.
pub fn tr_sublattice_formula(nx: usize, ny: usize, n_down: usize) -> BigInt {
    let n = (nx * ny) as u64;
    let d = n_down as u64;
    if d > n {
        return BigInt::zero();
    }
    if n % 2 == 0 {
        if d % 2 == 0 {
            sign((d / 2) % 2 == 1) * big_binomial(n / 2, d / 2)
        } else {
            BigInt::zero()
        }
    } else {
        let m = (n - 1) / 2;
        if d % 2 == 0 {
            sign((d / 2) % 2 == 1) * big_binomial(m, d / 2)
        } else {
            sign(((d + 1) / 2) % 2 == 1) * big_binomial(m, (d - 1) / 2)
        }
    }
}

/// `tr C` over the `S^z = 0` sector: `(-1)^(N/4) 2^(N/2)` when both
/// dimensions are even, zero otherwise.
pub fn tr_chiral_formula(nx: usize, ny: usize) -> BigInt {
    if nx % 2 != 0 || ny % 2 != 0 {
        return BigInt::zero();
    }
    let n = nx * ny;
    sign((n / 4) % 2 == 1) * (BigInt::one() << (n / 2))
}

/// Trace of `op` over the `n_down` sector by enumeration. The chiral
/// operator maps `n_down` to `N - n_down`, so its trace vanishes off
/// `S^z = 0`.
pub fn brute_force_trace(op: TraceOperator, nx: usize, ny: usize, n_down: usize) -> Result<BigInt> {
    let lattice = LatticeSpec::new(nx, ny, Couplings::default())?;
    let n = lattice.n_sites();
    if n_down > n {
        return Err(Error::InvalidInput(format!(
            "n_down = {n_down} exceeds {n} sites"
        )));
    }
    let dim = binomial(n, n_down);
    if dim > BRUTE_FORCE_CAP as u64 {
        return Err(Error::DenseCapExceeded {
            dim: dim as usize,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let basis = SectorBasis::new(n, n_down)?;
    let even = lattice.even_mask();
    let total: i64 = match op {
        TraceOperator::Sublattice => basis
            .configs()
            .par_chunks(1 << 14)
            .map(|c| c.iter().map(|&m| sublattice_sign(m, even) as i64).sum::<i64>())
            .sum(),
        TraceOperator::Chiral => {
            if 2 * n_down != n {
                0
            } else {
                let action = SymmetryAction::new(&lattice, Symmetry::Chiral);
                basis
                    .configs()
                    .par_chunks(1 << 14)
                    .map(|c| {
                        c.iter()
                            .map(|&m| {
                                let (image, s) = action.map(m);
                                if image == m {
                                    s as i64
                                } else {
                                    0
                                }
                            })
                            .sum::<i64>()
                    })
                    .sum()
            }
        }
    };
    Ok(BigInt::from(total))
}

/// Dimensions `(N_+, N_-)` of the `+1` and `-1` eigenspaces of an
/// involution with the given trace on a space of dimension `dim`.
pub fn eigenspace_split(trace: &BigInt, dim: &BigInt) -> (BigInt, BigInt) {
    ((dim + trace) / 2, (dim - trace) / 2)
}

/// Lower bound on the zero-mode count of the `n_down` sector.
pub fn zero_mode_lower_bound(nx: usize, ny: usize, n_down: usize) -> BigInt {
    let s = tr_sublattice_formula(nx, ny, n_down).abs();
    if 2 * n_down == nx * ny {
        s.max(tr_chiral_formula(nx, ny).abs())
    } else {
        s
    }
}
