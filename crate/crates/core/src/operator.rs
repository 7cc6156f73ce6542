//! Matrix-free Hamiltonian and the discrete symmetry operators.
//!
//! The Hamiltonian is stored as two flat term lists: hopping terms (an XX
//! bond flips an anti-aligned pair with amplitude `J/2`) and Ising terms
//! (diagonal `Delta * J * s_i * s_j`). Application is a *gather*: each
//! output amplitude is computed from its own in-neighbours in a fixed
//! order, so the serial and the parallel paths produce bit-identical
//! results.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{colex_rank, SectorBasis};
use crate::error::{Error, Result};
use crate::lattice::{BondKind, LatticeSpec};

/// Default ceiling on the dimension of a dense matrix.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

const PAR_CHUNK: usize = 4096;

/// Scalar type of a state vector: `f64` or `Complex64`.
pub trait Amplitude:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Default
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + SubAssign
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
    + Sum
    + 'static
{
    const ZERO: Self;
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn abs_sqr(self) -> f64;
    fn real(self) -> f64;
}

impl Amplitude for f64 {
    const ZERO: Self = 0.0;
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn abs_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn real(self) -> f64 {
        self
    }
}

impl Amplitude for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn abs_sqr(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn real(self) -> f64 {
        self.re
    }
}

/// `<a|b>`, conjugating the left argument.
pub fn dot<T: Amplitude>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x.conj() * y).sum()
}

pub fn norm<T: Amplitude>(a: &[T]) -> f64 {
    a.iter().map(|x| x.abs_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy)]
struct Hop {
    pair: u64,
    amp: f64,
}

#[derive(Debug, Clone, Copy)]
struct Ising {
    a: u32,
    b: u32,
    coeff: f64,
}

/// Matrix-free XX/XXZ Hamiltonian acting on fixed-magnetization sectors.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    lattice: LatticeSpec,
    n_sites: usize,
    hops: Vec<Hop>,
    ising: Vec<Ising>,
    parallel: bool,
}

impl Hamiltonian {
    /// Full Hamiltonian: XX terms, Ising terms and shell perturbations.
    pub fn new(lattice: &LatticeSpec) -> Self {
        Self::with_terms(lattice, true, true)
    }

    /// Select which parts of the Hamiltonian to include. Shell terms are
    /// XX couplings and follow `include_xx`.
    pub fn with_terms(lattice: &LatticeSpec, include_xx: bool, include_zz: bool) -> Self {
        let c = lattice.couplings();
        let mut hops = Vec::new();
        let mut ising = Vec::new();
        let nn = lattice
            .parallel_bonds()
            .iter()
            .map(|b| (b, c.j_par, c.delta_par))
            .chain(lattice.perp_bonds().iter().map(|b| (b, c.j_perp, c.delta_perp)));
        for (b, j, delta) in nn {
            if include_xx && j != 0.0 {
                hops.push(Hop {
                    pair: 1 << b.site_a | 1 << b.site_b,
                    amp: j / 2.0,
                });
            }
            if include_zz && delta * j != 0.0 {
                ising.push(Ising {
                    a: b.site_a as u32,
                    b: b.site_b as u32,
                    coeff: delta * j,
                });
            }
        }
        if include_xx {
            for (p, bonds) in lattice.shell_bonds() {
                if p.strength == 0.0 {
                    continue;
                }
                for b in bonds {
                    debug_assert!(matches!(b.kind, BondKind::Shell(_)));
                    hops.push(Hop {
                        pair: 1 << b.site_a | 1 << b.site_b,
                        amp: p.strength / 2.0,
                    });
                }
            }
        }
        Self {
            lattice: lattice.clone(),
            n_sites: lattice.n_sites(),
            hops,
            ising,
            parallel: false,
        }
    }

    /// Enable the rayon gather path. Results are identical to the serial path.
    pub fn parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    pub fn is_parallel(&self) -> bool {
        self.parallel
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn has_ising(&self) -> bool {
        !self.ising.is_empty()
    }

    /// Upper bound on the operator norm: `sum |J|/2 + sum |Delta J|/4`.
    pub fn norm_bound(&self) -> f64 {
        self.hops.iter().map(|h| h.amp.abs()).sum::<f64>()
            + self.ising.iter().map(|t| t.coeff.abs() / 4.0).sum::<f64>()
    }

    /// Diagonal matrix element `<mask|H|mask>`.
    #[inline]
    pub fn diagonal(&self, mask: u64) -> f64 {
        let mut e = 0.0;
        for t in &self.ising {
            let anti = (mask >> t.a ^ mask >> t.b) & 1;
            e += if anti == 0 { 0.25 * t.coeff } else { -0.25 * t.coeff };
        }
        e
    }

    /// Calls `f(target, amplitude)` for every off-diagonal element
    /// `<target|H|mask>`, in term order.
    #[inline]
    pub fn for_each_offdiag(&self, mask: u64, mut f: impl FnMut(u64, f64)) {
        for h in &self.hops {
            let t = mask & h.pair;
            if t != 0 && t != h.pair {
                f(mask ^ h.pair, h.amp);
            }
        }
    }

    #[inline]
    fn row<T: Amplitude>(&self, basis: &SectorBasis, mask: u64, k: usize, x: &[T]) -> T {
        let mut acc = if self.ising.is_empty() {
            T::ZERO
        } else {
            x[k] * self.diagonal(mask)
        };
        for h in &self.hops {
            let t = mask & h.pair;
            if t != 0 && t != h.pair {
                acc += x[basis.rank_unchecked(mask ^ h.pair)] * h.amp;
            }
        }
        acc
    }

    fn check_basis(&self, basis: &SectorBasis) -> Result<()> {
        if basis.n_sites() != self.n_sites {
            return Err(Error::InvalidInput(format!(
                "Hamiltonian acts on {} sites, basis has {}",
                self.n_sites,
                basis.n_sites()
            )));
        }
        Ok(())
    }

    /// `y = H x` on the serial reference path.
    pub fn apply_serial_into<T: Amplitude>(&self, basis: &SectorBasis, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), basis.len());
        assert_eq!(y.len(), basis.len());
        for (k, (out, &m)) in y.iter_mut().zip(basis.configs()).enumerate() {
            *out = self.row(basis, m, k, x);
        }
    }

    /// `y = H x` split over rayon workers by output chunk.
    pub fn apply_parallel_into<T: Amplitude>(&self, basis: &SectorBasis, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), basis.len());
        assert_eq!(y.len(), basis.len());
        let configs = basis.configs();
        y.par_chunks_mut(PAR_CHUNK)
            .enumerate()
            .for_each(|(ci, chunk)| {
                let base = ci * PAR_CHUNK;
                for (off, out) in chunk.iter_mut().enumerate() {
                    let k = base + off;
                    *out = self.row(basis, configs[k], k, x);
                }
            });
    }

    /// `y = H x`, dispatching on the parallel flag.
    pub fn apply_into<T: Amplitude>(&self, basis: &SectorBasis, x: &[T], y: &mut [T]) {
        if self.parallel && basis.len() > PAR_CHUNK {
            self.apply_parallel_into(basis, x, y)
        } else {
            self.apply_serial_into(basis, x, y)
        }
    }

    pub fn apply<T: Amplitude>(&self, basis: &SectorBasis, x: &[T]) -> Vec<T> {
        let mut y = vec![T::ZERO; x.len()];
        self.apply_into(basis, x, &mut y);
        y
    }
}

/// Complex amplitudes over one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    n_down: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(basis: &SectorBasis) -> Self {
        Self {
            n_sites: basis.n_sites(),
            n_down: basis.n_down(),
            amps: vec![Complex64::ZERO; basis.len()],
        }
    }

    pub fn from_amplitudes(basis: &SectorBasis, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.len() {
            return Err(Error::InvalidInput(format!(
                "{} amplitudes for a sector of dimension {}",
                amps.len(),
                basis.len()
            )));
        }
        Ok(Self {
            n_sites: basis.n_sites(),
            n_down: basis.n_down(),
            amps,
        })
    }

    pub fn from_real(basis: &SectorBasis, amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(basis, amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// `(n_sites, n_down)` of the sector this vector lives in.
    pub fn sector(&self) -> (usize, usize) {
        (self.n_sites, self.n_down)
    }

    pub fn check_basis(&self, basis: &SectorBasis) -> Result<()> {
        if basis.same_sector(self.n_sites, self.n_down) {
            Ok(())
        } else {
            Err(Error::BasisMismatch {
                sites: basis.n_sites(),
                down: basis.n_down(),
                found_sites: self.n_sites,
                found_down: self.n_down,
            })
        }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// Scale to unit norm; a zero vector is left untouched.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
        n
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        dot(&self.amps, &other.amps)
    }

    /// Real parts, if every imaginary part vanishes to `tol`.
    pub fn to_real(&self, tol: f64) -> Option<Vec<f64>> {
        self.amps
            .iter()
            .map(|a| (a.im.abs() <= tol).then_some(a.re))
            .collect()
    }
}

/// `H v` with sector validation.
pub fn apply_hamiltonian(h: &Hamiltonian, basis: &SectorBasis, v: &StateVector) -> Result<StateVector> {
    h.check_basis(basis)?;
    v.check_basis(basis)?;
    let amps = h.apply(basis, v.amplitudes());
    StateVector::from_amplitudes(basis, amps)
}

/// Dense real symmetric matrix of `H` in the sector.
pub fn assemble_dense(h: &Hamiltonian, basis: &SectorBasis, cap: usize) -> Result<Mat<f64>> {
    h.check_basis(basis)?;
    let dim = basis.len();
    if dim > cap {
        return Err(Error::DenseCapExceeded { dim, cap });
    }
    let mut m = Mat::<f64>::zeros(dim, dim);
    for (j, &mask) in basis.configs().iter().enumerate() {
        m[(j, j)] = h.diagonal(mask);
        h.for_each_offdiag(mask, |target, amp| {
            m[(colex_rank(target), j)] += amp;
        });
    }
    Ok(m)
}

/// Single site spin in a product-state pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn flip(self) -> Self {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

/// Mask of a per-site pattern; `pattern[i]` is the spin at site `i`.
pub fn pattern_mask(pattern: &[Spin]) -> Result<u64> {
    if pattern.len() > 64 {
        return Err(Error::TooManySites {
            sites: pattern.len(),
        });
    }
    Ok(pattern
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == Spin::Up)
        .fold(0u64, |m, (i, _)| m | 1 << i))
}

/// Parse `u`/`d` (also `1`/`0`, `↑`/`↓`) into a pattern; whitespace,
/// `|` and `,` are ignored.
pub fn parse_pattern(text: &str) -> Result<Vec<Spin>> {
    text.chars()
        .filter(|c| !c.is_whitespace() && *c != '|' && *c != ',')
        .map(|c| match c {
            'u' | 'U' | '1' | '↑' => Ok(Spin::Up),
            'd' | 'D' | '0' | '↓' => Ok(Spin::Down),
            other => Err(Error::InvalidInput(format!(
                "unknown spin symbol {other:?} (use u/d)"
            ))),
        })
        .collect()
}

/// Normalized basis state `|mask>`.
pub fn product_state(basis: &SectorBasis, mask: u64) -> Result<StateVector> {
    let k = basis.rank(mask)?;
    let mut v = StateVector::zeros(basis);
    v.amps[k] = Complex64::new(1.0, 0.0);
    Ok(v)
}

pub fn build_product_state(basis: &SectorBasis, pattern: &[Spin]) -> Result<StateVector> {
    if pattern.len() != basis.n_sites() {
        return Err(Error::InvalidInput(format!(
            "pattern has {} spins, lattice has {} sites",
            pattern.len(),
            basis.n_sites()
        )));
    }
    product_state(basis, pattern_mask(pattern)?)
}

/// The discrete symmetries of the XX model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    /// `(-1)^(number of down spins on even sites)`.
    Sublattice,
    /// Global spin flip.
    SpinFlip,
    /// Point inversion `(x, y) -> (nx-1-x, ny-1-y)`.
    Inversion,
    /// `X I S`.
    Chiral,
}

/// Relabelling of sites applied to configuration masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SitePermutation {
    map: Vec<usize>,
}

impl SitePermutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &t in &map {
            if t >= map.len() || std::mem::replace(&mut seen[t], true) {
                return Err(Error::InvalidInput("site map is not a permutation".into()));
            }
        }
        Ok(Self { map })
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &t)| i == t)
    }

    /// Image of a configuration: bit `i` moves to bit `map[i]`.
    #[inline]
    pub fn apply(&self, mut mask: u64) -> u64 {
        let mut out = 0u64;
        while mask != 0 {
            let i = mask.trailing_zeros() as usize;
            out |= 1 << self.map[i];
            mask &= mask - 1;
        }
        out
    }
}

/// `(-1)^(down spins on the even sublattice)`.
#[inline]
pub fn sublattice_sign(mask: u64, even_mask: u64) -> f64 {
    if (!mask & even_mask).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Per-configuration action of one symmetry: target mask and sign.
#[derive(Debug, Clone)]
pub struct SymmetryAction {
    which: Symmetry,
    full: u64,
    even: u64,
    inversion: SitePermutation,
}

impl SymmetryAction {
    pub fn new(lattice: &LatticeSpec, which: Symmetry) -> Self {
        Self {
            which,
            full: lattice.full_mask(),
            even: lattice.even_mask(),
            inversion: SitePermutation {
                map: lattice.inversion_map(),
            },
        }
    }

    #[inline]
    pub fn map(&self, mask: u64) -> (u64, f64) {
        match self.which {
            Symmetry::Sublattice => (mask, sublattice_sign(mask, self.even)),
            Symmetry::SpinFlip => (!mask & self.full, 1.0),
            Symmetry::Inversion => (self.inversion.apply(mask), 1.0),
            Symmetry::Chiral => (
                !self.inversion.apply(mask) & self.full,
                sublattice_sign(mask, self.even),
            ),
        }
    }

    /// Down-spin count of the image sector.
    pub fn image_down(&self, n_sites: usize, n_down: usize) -> usize {
        match self.which {
            Symmetry::Sublattice | Symmetry::Inversion => n_down,
            Symmetry::SpinFlip | Symmetry::Chiral => n_sites - n_down,
        }
    }
}

/// Apply a symmetry operator. Spin flip and the chiral operator map the
/// `n_down` sector onto `N - n_down`; the result lives in that image sector.
pub fn apply_symmetry(
    lattice: &LatticeSpec,
    which: Symmetry,
    basis: &SectorBasis,
    v: &StateVector,
) -> Result<StateVector> {
    v.check_basis(basis)?;
    if basis.n_sites() != lattice.n_sites() {
        return Err(Error::InvalidInput(format!(
            "lattice has {} sites, basis has {}",
            lattice.n_sites(),
            basis.n_sites()
        )));
    }
    let act = SymmetryAction::new(lattice, which);
    let mut out = vec![Complex64::ZERO; basis.len()];
    for (&mask, &a) in basis.configs().iter().zip(v.amplitudes()) {
        let (target, sign) = act.map(mask);
        out[colex_rank(target)] += a * sign;
    }
    Ok(StateVector {
        n_sites: basis.n_sites(),
        n_down: act.image_down(basis.n_sites(), basis.n_down()),
        amps: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Couplings;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn two_site_hop() {
        let lat = LatticeSpec::new(2, 1, Couplings::xx(1.0, 0.0)).unwrap();
        let h = Hamiltonian::new(&lat);
        let basis = SectorBasis::new(2, 1).unwrap();
        // |up down> = site 0 up = mask 0b01
        let v = product_state(&basis, 0b01).unwrap();
        let w = apply_hamiltonian(&h, &basis, &v).unwrap();
        assert_eq!(w.amplitudes()[basis.rank(0b10).unwrap()], c(0.5));
        assert_eq!(w.amplitudes()[basis.rank(0b01).unwrap()], c(0.0));
    }

    #[test]
    fn domain_wall_norm_on_plaquette() {
        let lat = LatticeSpec::new(2, 2, Couplings::xx(1.0, 1.0)).unwrap();
        let h = Hamiltonian::new(&lat);
        let basis = SectorBasis::new(4, 2).unwrap();
        // left column up: sites 0, 1
        let v = product_state(&basis, 0b0011).unwrap();
        let w = apply_hamiltonian(&h, &basis, &v).unwrap();
        assert!((w.norm().powi(2) - 2.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_couplings_give_zero_matrix() {
        let lat = LatticeSpec::new(3, 2, Couplings::xx(0.0, 0.0).with_anisotropy(1.0, 1.0)).unwrap();
        let h = Hamiltonian::new(&lat);
        let basis = SectorBasis::new(6, 3).unwrap();
        let m = assemble_dense(&h, &basis, DEFAULT_DENSE_CAP).unwrap();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                assert_eq!(m[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn dense_cap_is_enforced() {
        let lat = LatticeSpec::new(4, 2, Couplings::default()).unwrap();
        let basis = SectorBasis::new(8, 4).unwrap();
        let err = assemble_dense(&Hamiltonian::new(&lat), &basis, 10).unwrap_err();
        assert!(matches!(err, Error::DenseCapExceeded { dim: 70, cap: 10 }));
    }

    #[test]
    fn ising_diagonal() {
        let lat = LatticeSpec::new(2, 1, Couplings::xx(2.0, 0.0).with_anisotropy(0.5, 0.0)).unwrap();
        let h = Hamiltonian::new(&lat);
        assert_eq!(h.diagonal(0b11), 0.25);
        assert_eq!(h.diagonal(0b01), -0.25);
    }

    #[test]
    fn basis_mismatch_is_reported() {
        let lat = LatticeSpec::new(2, 2, Couplings::default()).unwrap();
        let h = Hamiltonian::new(&lat);
        let b2 = SectorBasis::new(4, 2).unwrap();
        let b1 = SectorBasis::new(4, 1).unwrap();
        let v = StateVector::zeros(&b1);
        assert!(matches!(
            apply_hamiltonian(&h, &b2, &v),
            Err(Error::BasisMismatch { .. })
        ));
    }

    #[test]
    fn product_state_from_pattern() {
        let basis = SectorBasis::new(8, 4).unwrap();
        let p = parse_pattern("uu uu dd dd").unwrap();
        let v = build_product_state(&basis, &p).unwrap();
        assert_eq!(v.amplitudes()[basis.rank(0b0000_1111).unwrap()], c(1.0));
        assert_eq!(v.norm(), 1.0);
        assert!(parse_pattern("udx").is_err());
    }

    #[test]
    fn chiral_maps_sector() {
        let lat = LatticeSpec::new(2, 2, Couplings::default()).unwrap();
        let basis = SectorBasis::new(4, 1).unwrap();
        let v = product_state(&basis, 0b0111).unwrap();
        let w = apply_symmetry(&lat, Symmetry::Chiral, &basis, &v).unwrap();
        assert_eq!(w.sector(), (4, 3));
    }

    #[test]
    fn serial_and_parallel_agree_bitwise() {
        let lat = LatticeSpec::new(5, 2, Couplings::xx(1.0, 0.7).with_anisotropy(0.3, 0.9)).unwrap();
        let h = Hamiltonian::new(&lat);
        let basis = SectorBasis::new(10, 5).unwrap();
        let x: Vec<f64> = (0..basis.len()).map(|k| ((k * 37 % 101) as f64).sin()).collect();
        let mut a = vec![0.0; x.len()];
        let mut b = vec![0.0; x.len()];
        h.apply_serial_into(&basis, &x, &mut a);
        h.apply_parallel_into(&basis, &x, &mut b);
        assert_eq!(a, b);
    }
}
