//! Bipartite entanglement across a vertical cut of the lattice.
//!
//! With the site order `i = x * ny + y`, the columns left of the cut are
//! the lowest `cut * ny` bits of a mask. A fixed-magnetization state is
//! block diagonal in the number of up spins on the left, so the Schmidt
//! decomposition is a set of small SVDs, one per left filling.

use faer::Mat;
use num_complex::Complex64;

use crate::basis::{binomial, colex_rank, SectorBasis};
use crate::error::{Error, Result};
use crate::lattice::full_mask;
use crate::operator::Amplitude;

/// Scalars the Schmidt decomposition accepts.
pub trait SchmidtScalar: Amplitude {
    #[doc(hidden)]
    fn singular_values(rows: usize, cols: usize, data: &[Self]) -> Result<Vec<f64>>;
}

macro_rules! schmidt_impl {
    ($t:ty) => {
        impl SchmidtScalar for $t {
            fn singular_values(rows: usize, cols: usize, data: &[Self]) -> Result<Vec<f64>> {
                let m = Mat::<$t>::from_fn(rows, cols, |i, j| data[i * cols + j]);
                m.singular_values()
                    .map_err(|e| Error::Linalg(format!("SVD failed: {e:?}")))
            }
        }
    };
}

schmidt_impl!(f64);
schmidt_impl!(Complex64);

/// Where to cut: columns `x < cut` form the left half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bipartition {
    pub cut: usize,
    pub ny: usize,
}

impl Bipartition {
    pub fn new(nx: usize, ny: usize, cut: usize) -> Result<Self> {
        if cut > nx {
            return Err(Error::InvalidInput(format!(
                "cut column {cut} outside the lattice (nx = {nx})"
            )));
        }
        Ok(Self { cut, ny })
    }

    /// Cut through the middle, left half `x < nx/2`.
    pub fn half(nx: usize, ny: usize) -> Self {
        Self { cut: nx / 2, ny }
    }

    pub fn left_sites(&self) -> usize {
        self.cut * self.ny
    }
}

/// Squared Schmidt coefficients, sorted descending.
pub fn schmidt_spectrum<T: SchmidtScalar>(
    basis: &SectorBasis,
    psi: &[T],
    part: Bipartition,
) -> Result<Vec<f64>> {
    if psi.len() != basis.len() {
        return Err(Error::InvalidInput(format!(
            "{} amplitudes for a sector of dimension {}",
            psi.len(),
            basis.len()
        )));
    }
    let nl = part.left_sites();
    if nl > basis.n_sites() {
        return Err(Error::InvalidInput("cut beyond the last site".into()));
    }
    let nr = basis.n_sites() - nl;
    let up = basis.n_up();
    let low = full_mask(nl);
    let fillings: Vec<usize> = (0..=up.min(nl)).filter(|&k| up - k <= nr).collect();
    let mut blocks: Vec<Vec<T>> = fillings
        .iter()
        .map(|&k| vec![T::ZERO; (binomial(nl, k) * binomial(nr, up - k)) as usize])
        .collect();
    let first = fillings.first().copied().unwrap_or(0);
    for (&mask, &a) in basis.configs().iter().zip(psi) {
        let left = mask & low;
        let right = mask >> nl;
        let k = left.count_ones() as usize;
        let cols = binomial(nr, up - k) as usize;
        blocks[k - first][colex_rank(left) * cols + colex_rank(right)] = a;
    }
    let mut lambdas = Vec::new();
    for (&k, data) in fillings.iter().zip(&blocks) {
        let rows = binomial(nl, k) as usize;
        let cols = binomial(nr, up - k) as usize;
        if data.iter().all(|a| *a == T::ZERO) {
            continue;
        }
        lambdas.extend(T::singular_values(rows, cols, data)?.into_iter().map(|s| s * s));
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok(lambdas)
}

/// `-sum p ln p` over the positive entries (nats).
pub fn entropy_from_spectrum(lambdas: &[f64]) -> f64 {
    -lambdas
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Von Neumann entropy of the left half's reduced density matrix (nats).
pub fn entanglement_entropy<T: SchmidtScalar>(
    basis: &SectorBasis,
    psi: &[T],
    part: Bipartition,
) -> Result<f64> {
    Ok(entropy_from_spectrum(&schmidt_spectrum(basis, psi, part)?))
}

/// Average entanglement of a random pure state of `n_sites` qubits cut in
/// half, `(N ln 2 - 1) / 2`.
pub fn page_value(n_sites: usize) -> f64 {
    (n_sites as f64 * std::f64::consts::LN_2 - 1.0) / 2.0
}
