//! Exact zero-energy scar states of the two-leg ladder.
//!
//! The rung-ferromagnetic tower `RF(n)` puts `n` rungs in `|up up>` on an
//! all-down background with sign `(-1)^x` per flipped rung; the
//! alternating phase cancels every leg hop and the aligned rungs never
//! hop. The two rung-antiferromagnetic states `RA_e`, `RA_o` are the
//! analogous sums of rung flips `|down up> -> |up down>` from the state
//! with leg 0 down and leg 1 up, split by the parity of the number of
//! flips. Both families are built by enumerating rung subsets directly.

use num_complex::Complex64;

use crate::basis::{binomial, FixedPopcount, SectorBasis};
use crate::entanglement::{entropy_from_spectrum, Bipartition};
use crate::error::{Error, Result};
use crate::operator::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScarKind {
    /// Rung-ferromagnetic state with `n` up rungs.
    Rf(usize),
    RaEven,
    RaOdd,
}

#[derive(Debug, Clone)]
pub struct ScarState {
    pub kind: ScarKind,
    pub nx: usize,
    pub basis: SectorBasis,
    pub state: StateVector,
}

impl ScarState {
    pub fn amplitudes(&self) -> &[Complex64] {
        self.state.amplitudes()
    }

    /// Cut through the middle of the ladder.
    pub fn half_cut(&self) -> Bipartition {
        Bipartition::half(self.nx, 2)
    }
}

fn rung_bits(x: usize) -> u64 {
    0b11 << (2 * x)
}

fn alternating(subset: u64) -> f64 {
    let mut s = 0u32;
    let mut b = subset;
    while b != 0 {
        s += b.trailing_zeros();
        b &= b - 1;
    }
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_nx(nx: usize) -> Result<()> {
    if nx == 0 || 2 * nx > crate::lattice::MAX_SITES {
        return Err(Error::InvalidInput(format!(
            "ladder length must lie in 1..={}, got {nx}",
            crate::lattice::MAX_SITES / 2
        )));
    }
    Ok(())
}

/// `RF(n)` on an `nx x 2` ladder, in the sector with `N - 2n` down spins.
pub fn rf_state(nx: usize, n: usize) -> Result<ScarState> {
    check_nx(nx)?;
    if n > nx {
        return Err(Error::InvalidInput(format!("RF(n) needs n <= nx = {nx}, got {n}")));
    }
    let n_sites = 2 * nx;
    let basis = SectorBasis::new(n_sites, n_sites - 2 * n)?;
    let amp = 1.0 / (binomial(nx, n) as f64).sqrt();
    let mut psi = vec![Complex64::ZERO; basis.len()];
    for subset in FixedPopcount::new(nx, n) {
        let mut mask = 0u64;
        let mut b = subset;
        while b != 0 {
            mask |= rung_bits(b.trailing_zeros() as usize);
            b &= b - 1;
        }
        psi[basis.rank(mask)?] = Complex64::new(alternating(subset) * amp, 0.0);
    }
    let state = StateVector::from_amplitudes(&basis, psi)?;
    Ok(ScarState {
        kind: ScarKind::Rf(n),
        nx,
        basis,
        state,
    })
}

/// [`rf_state`] with an explicit lattice check.
pub fn rf_state_on(nx: usize, ny: usize, n: usize) -> Result<ScarState> {
    if ny != 2 {
        return Err(Error::NotALadder { ny });
    }
    rf_state(nx, n)
}

/// `(RA_e, RA_o)` in the `S^z = 0` sector. Only even `nx` gives
/// eigenstates: the rung hops of a subset sum cancel through
/// `sum_x (-1)^x`, which vanishes only then.
pub fn ra_states(nx: usize) -> Result<(ScarState, ScarState)> {
    check_nx(nx)?;
    if nx % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "rung-antiferromagnetic scars need even nx, got {nx}"
        )));
    }
    let n_sites = 2 * nx;
    let basis = SectorBasis::zero_magnetization(n_sites)?;
    // leg 1 up everywhere; flipping rung x moves its up spin to leg 0
    let reference: u64 = (0..nx).map(|x| 1u64 << (2 * x + 1)).sum();
    let amp = 1.0 / ((1u64 << (nx - 1)) as f64).sqrt();
    let mut even = vec![Complex64::ZERO; basis.len()];
    let mut odd = vec![Complex64::ZERO; basis.len()];
    for subset in 0u64..(1u64 << nx) {
        let mut mask = reference;
        let mut b = subset;
        while b != 0 {
            mask ^= rung_bits(b.trailing_zeros() as usize);
            b &= b - 1;
        }
        let target = if subset.count_ones() % 2 == 0 { &mut even } else { &mut odd };
        target[basis.rank(mask)?] = Complex64::new(alternating(subset) * amp, 0.0);
    }
    let make = |kind, amps| -> Result<ScarState> {
        Ok(ScarState {
            kind,
            nx,
            state: StateVector::from_amplitudes(&basis, amps)?,
            basis: basis.clone(),
        })
    };
    Ok((make(ScarKind::RaEven, even)?, make(ScarKind::RaOdd, odd)?))
}

/// Analytic half-ladder Schmidt spectrum of `RF(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RfSchmidt {
    /// `lambda_l` for `l = 0..=n` up rungs on the left (zeros included).
    pub lambdas: Vec<f64>,
    pub entropy: f64,
    /// Large-`nx` form of the entropy at `n = nx/2`.
    pub asymptote: f64,
}

/// `lambda_l = C(nx/2, l) C(nx/2, n - l) / C(nx, n)`.
pub fn rf_schmidt(nx: usize, n: usize) -> Result<RfSchmidt> {
    check_nx(nx)?;
    if n > nx {
        return Err(Error::InvalidInput(format!("RF(n) needs n <= nx = {nx}, got {n}")));
    }
    let left = nx / 2;
    let right = nx - left;
    let total = binomial(nx, n) as f64;
    let lambdas: Vec<f64> = (0..=n)
        .map(|l| {
            if l > left || n - l > right {
                0.0
            } else {
                binomial(left, l) as f64 * binomial(right, n - l) as f64 / total
            }
        })
        .collect();
    let entropy = entropy_from_spectrum(&lambdas);
    let x = nx as f64;
    let asymptote = 0.5 * (std::f64::consts::PI * x).ln() - 1.5 * std::f64::consts::LN_2
        + 0.5 * x / (x - 1.0);
    Ok(RfSchmidt {
        lambdas,
        entropy,
        asymptote,
    })
}

/// `Q_n psi = <all down|psi> [sum_x (-1)^x S+_(x,0) S+_(x,1)]^n |all down>`.
///
/// `basis` is the sector of `psi`; the result lives `2n` down spins lower
/// and is returned together with its basis.
pub fn q_operator_apply(
    nx: usize,
    n: usize,
    basis: &SectorBasis,
    psi: &StateVector,
) -> Result<(SectorBasis, StateVector)> {
    check_nx(nx)?;
    psi.check_basis(basis)?;
    if basis.n_sites() != 2 * nx {
        return Err(Error::InvalidInput(format!(
            "state on {} sites, ladder has {}",
            basis.n_sites(),
            2 * nx
        )));
    }
    if 2 * n > basis.n_down() || n > nx {
        return Err(Error::InvalidInput(format!(
            "Q_{n} lowers n_down by {}, sector has {}",
            2 * n,
            basis.n_down()
        )));
    }
    let out_basis = SectorBasis::new(basis.n_sites(), basis.n_down() - 2 * n)?;
    let mut out = StateVector::zeros(&out_basis);
    if basis.n_down() != basis.n_sites() {
        return Ok((out_basis, out));
    }
    let overlap = psi.amplitudes()[0];
    // the n-th power produces every subset n! times
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let rf = rf_state(nx, n)?;
    let scale = overlap * factorial * (binomial(nx, n) as f64).sqrt();
    for (o, &a) in out.amplitudes_mut().iter_mut().zip(rf.amplitudes()) {
        *o = a * scale;
    }
    Ok((out_basis, out))
}
