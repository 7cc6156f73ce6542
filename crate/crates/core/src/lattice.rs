//! Rectangular hard-wall lattices.
//!
//! Sites are labelled by `(x, y)` with `x` running over the `nx` columns
//! (rungs) and `y` over the `ny` legs. The linear index is `i = x * ny + y`,
//! so every column occupies a contiguous block of bits in a configuration
//! mask and a left/right cut between columns is a plain low-bit/high-bit
//! split.

use crate::error::{Error, Result};

/// Largest lattice supported: one spin per bit of a `u64`.
pub const MAX_SITES: usize = 64;

/// Long-range XX perturbation on the `shell`-th neighbour shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellPerturbation {
    pub shell: usize,
    pub strength: f64,
}

/// Exchange constants of the XX/XXZ Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings {
    pub j_par: f64,
    pub j_perp: f64,
    pub delta_par: f64,
    pub delta_perp: f64,
    pub shells: Vec<ShellPerturbation>,
}

impl Default for Couplings {
    fn default() -> Self {
        Self::xx(1.0, 1.0)
    }
}

impl Couplings {
    /// Pure XX couplings (no Ising part, no shells).
    pub fn xx(j_par: f64, j_perp: f64) -> Self {
        Self {
            j_par,
            j_perp,
            delta_par: 0.0,
            delta_perp: 0.0,
            shells: Vec::new(),
        }
    }

    pub fn with_anisotropy(mut self, delta_par: f64, delta_perp: f64) -> Self {
        self.delta_par = delta_par;
        self.delta_perp = delta_perp;
        self
    }

    pub fn with_shell(mut self, shell: usize, strength: f64) -> Self {
        self.shells.push(ShellPerturbation { shell, strength });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondKind {
    /// Nearest neighbour along x (coupling `J_par`).
    Parallel,
    /// Nearest neighbour along y (coupling `J_perp`).
    Perp,
    /// Member of the n-th neighbour shell, n >= 2.
    Shell(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub site_a: usize,
    pub site_b: usize,
    pub kind: BondKind,
    /// Both endpoints on the same checkerboard sublattice.
    pub same_sublattice: bool,
}

/// Geometry plus couplings, with all bond lists precomputed.
#[derive(Debug, Clone)]
pub struct LatticeSpec {
    nx: usize,
    ny: usize,
    couplings: Couplings,
    parallel: Vec<Bond>,
    perp: Vec<Bond>,
    shell_bonds: Vec<(ShellPerturbation, Vec<Bond>)>,
    distances: Vec<usize>,
}

impl LatticeSpec {
    pub fn new(nx: usize, ny: usize, couplings: Couplings) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::EmptyLattice { nx, ny });
        }
        let sites = nx * ny;
        if sites > MAX_SITES {
            return Err(Error::TooManySites { sites });
        }
        let mut lattice = Self {
            nx,
            ny,
            couplings: couplings.clone(),
            parallel: Vec::new(),
            perp: Vec::new(),
            shell_bonds: Vec::new(),
            distances: realized_square_distances(nx, ny),
        };
        for x in 0..nx {
            for y in 0..ny {
                if x + 1 < nx {
                    lattice.parallel.push(lattice.bond(x, y, x + 1, y, BondKind::Parallel));
                }
                if y + 1 < ny {
                    lattice.perp.push(lattice.bond(x, y, x, y + 1, BondKind::Perp));
                }
            }
        }
        for p in &couplings.shells {
            if p.shell < 2 {
                return Err(Error::InvalidShell(format!(
                    "shell index must be >= 2, got {}",
                    p.shell
                )));
            }
            let bonds = lattice.neighbor_shell(p.shell)?;
            lattice.shell_bonds.push((*p, bonds));
        }
        Ok(lattice)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n_sites(&self) -> usize {
        self.nx * self.ny
    }

    pub fn couplings(&self) -> &Couplings {
        &self.couplings
    }

    #[inline]
    pub fn site(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny);
        x * self.ny + y
    }

    #[inline]
    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.ny, site % self.ny)
    }

    /// `(x + y)` even.
    #[inline]
    pub fn is_even_site(&self, site: usize) -> bool {
        let (x, y) = self.coords(site);
        (x + y) % 2 == 0
    }

    /// Bit mask of the even sublattice.
    pub fn even_mask(&self) -> u64 {
        (0..self.n_sites())
            .filter(|&i| self.is_even_site(i))
            .fold(0, |m, i| m | (1u64 << i))
    }

    /// Bit mask of all sites in column `x`.
    pub fn column_mask(&self, x: usize) -> u64 {
        (0..self.ny).fold(0, |m, y| m | (1u64 << self.site(x, y)))
    }

    pub fn full_mask(&self) -> u64 {
        full_mask(self.n_sites())
    }

    pub fn parallel_bonds(&self) -> &[Bond] {
        &self.parallel
    }

    pub fn perp_bonds(&self) -> &[Bond] {
        &self.perp
    }

    /// Shell perturbations together with their bond lists.
    pub fn shell_bonds(&self) -> &[(ShellPerturbation, Vec<Bond>)] {
        &self.shell_bonds
    }

    /// Distinct squared distances realized on this finite lattice, ascending.
    pub fn shell_distances(&self) -> &[usize] {
        &self.distances
    }

    pub fn max_shell(&self) -> usize {
        self.distances.len()
    }

    /// All site pairs at the `n`-th smallest distance realized on the lattice.
    ///
    /// Shell 1 is the nearest-neighbour shell and reports its bonds with the
    /// `Parallel`/`Perp` kinds; higher shells carry `BondKind::Shell(n)`.
    pub fn neighbor_shell(&self, n: usize) -> Result<Vec<Bond>> {
        if n == 0 || n > self.distances.len() {
            return Err(Error::ShellOutOfRange {
                requested: n,
                max: self.distances.len(),
            });
        }
        let target = self.distances[n - 1];
        let mut bonds = Vec::new();
        for a in 0..self.n_sites() {
            let (xa, ya) = self.coords(a);
            for b in a + 1..self.n_sites() {
                let (xb, yb) = self.coords(b);
                let dx = xa.abs_diff(xb);
                let dy = ya.abs_diff(yb);
                if dx * dx + dy * dy != target {
                    continue;
                }
                let kind = match (n, dy) {
                    (1, 0) => BondKind::Parallel,
                    (1, _) => BondKind::Perp,
                    _ => BondKind::Shell(n),
                };
                bonds.push(self.bond(xa, ya, xb, yb, kind));
            }
        }
        Ok(bonds)
    }

    /// Point inversion through the lattice centre: `(x, y) -> (nx-1-x, ny-1-y)`.
    pub fn inversion_map(&self) -> Vec<usize> {
        self.site_map(|x, y| (self.nx - 1 - x, self.ny - 1 - y))
    }

    /// Mirror along x: `(x, y) -> (nx-1-x, y)`.
    pub fn reflection_x_map(&self) -> Vec<usize> {
        self.site_map(|x, y| (self.nx - 1 - x, y))
    }

    /// Mirror along y (leg exchange on a ladder): `(x, y) -> (x, ny-1-y)`.
    pub fn reflection_y_map(&self) -> Vec<usize> {
        self.site_map(|x, y| (x, self.ny - 1 - y))
    }

    fn site_map(&self, f: impl Fn(usize, usize) -> (usize, usize)) -> Vec<usize> {
        (0..self.n_sites())
            .map(|i| {
                let (x, y) = self.coords(i);
                let (u, v) = f(x, y);
                self.site(u, v)
            })
            .collect()
    }

    fn bond(&self, xa: usize, ya: usize, xb: usize, yb: usize, kind: BondKind) -> Bond {
        let a = self.site(xa, ya);
        let b = self.site(xb, yb);
        Bond {
            site_a: a.min(b),
            site_b: a.max(b),
            kind,
            same_sublattice: (xa + ya + xb + yb) % 2 == 0,
        }
    }
}

pub(crate) fn full_mask(n_sites: usize) -> u64 {
    if n_sites >= 64 {
        u64::MAX
    } else {
        (1u64 << n_sites) - 1
    }
}

fn realized_square_distances(nx: usize, ny: usize) -> Vec<usize> {
    let mut d: Vec<usize> = (0..nx)
        .flat_map(|dx| (0..ny).map(move |dy| dx * dx + dy * dy))
        .filter(|&d| d > 0)
        .collect();
    d.sort_unstable();
    d.dedup();
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn lat(nx: usize, ny: usize) -> LatticeSpec {
        LatticeSpec::new(nx, ny, Couplings::default()).unwrap()
    }

    #[test]
    fn nearest_neighbour_bond_counts() {
        for (nx, ny, par, perp) in [(2, 2, 2, 2), (8, 2, 14, 8), (4, 4, 12, 12), (5, 1, 4, 0)] {
            let l = lat(nx, ny);
            assert_eq!(l.parallel_bonds().len(), par, "{nx}x{ny}");
            assert_eq!(l.perp_bonds().len(), perp, "{nx}x{ny}");
        }
    }

    #[test]
    fn rejects_oversized_and_empty() {
        assert!(matches!(
            LatticeSpec::new(33, 2, Couplings::default()),
            Err(Error::TooManySites { sites: 66 })
        ));
        assert!(LatticeSpec::new(32, 2, Couplings::default()).is_ok());
        assert!(matches!(
            LatticeSpec::new(0, 2, Couplings::default()),
            Err(Error::EmptyLattice { .. })
        ));
    }

    #[test]
    fn site_index_is_bijective() {
        let l = lat(5, 3);
        let mut seen = HashSet::new();
        for x in 0..5 {
            for y in 0..3 {
                let i = l.site(x, y);
                assert_eq!(l.coords(i), (x, y));
                assert!(seen.insert(i));
            }
        }
        assert_eq!(seen.len(), 15);
    }

    fn displacements(l: &LatticeSpec, bonds: &[Bond]) -> HashSet<(usize, usize)> {
        bonds
            .iter()
            .map(|b| {
                let (xa, ya) = l.coords(b.site_a);
                let (xb, yb) = l.coords(b.site_b);
                (xa.abs_diff(xb), ya.abs_diff(yb))
            })
            .collect()
    }

    #[test]
    fn ladder_shells_match_sublattice_classification() {
        let l = lat(8, 2);
        let s2 = l.neighbor_shell(2).unwrap();
        assert_eq!(displacements(&l, &s2), HashSet::from([(1, 1)]));
        assert!(s2.iter().all(|b| b.same_sublattice));
        let s3 = l.neighbor_shell(3).unwrap();
        assert_eq!(displacements(&l, &s3), HashSet::from([(2, 0)]));
        assert!(s3.iter().all(|b| b.same_sublattice));
        let s4 = l.neighbor_shell(4).unwrap();
        assert_eq!(displacements(&l, &s4), HashSet::from([(2, 1)]));
        assert!(s4.iter().all(|b| !b.same_sublattice));
        let s5 = l.neighbor_shell(5).unwrap();
        assert_eq!(displacements(&l, &s5), HashSet::from([(3, 0)]));
        assert!(s5.iter().all(|b| !b.same_sublattice));
        // (1,1) appears twice per plaquette
        assert_eq!(s2.len(), 2 * 7);
    }

    #[test]
    fn shell_one_is_nearest_neighbours() {
        let l = lat(4, 3);
        let s1 = l.neighbor_shell(1).unwrap();
        assert_eq!(s1.len(), l.parallel_bonds().len() + l.perp_bonds().len());
    }

    #[test]
    fn shells_are_disjoint_and_increasing() {
        let l = lat(6, 3);
        let d = l.shell_distances();
        assert!(d.windows(2).all(|w| w[0] < w[1]));
        let mut all = HashSet::new();
        for n in 1..=l.max_shell() {
            for b in l.neighbor_shell(n).unwrap() {
                assert!(all.insert((b.site_a, b.site_b)), "pair repeated in shell {n}");
                let (xa, ya) = l.coords(b.site_a);
                let (xb, yb) = l.coords(b.site_b);
                assert_eq!(b.same_sublattice, (xa + ya + xb + yb) % 2 == 0);
            }
        }
        assert_eq!(all.len(), 18 * 17 / 2);
    }

    #[test]
    fn missing_shell_names_the_maximum() {
        let l = lat(2, 1);
        match l.neighbor_shell(2) {
            Err(Error::ShellOutOfRange { requested: 2, max: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shell_perturbation_needs_index_two_or_more() {
        let c = Couplings::default().with_shell(1, 0.1);
        assert!(matches!(
            LatticeSpec::new(4, 2, c),
            Err(Error::InvalidShell(_))
        ));
    }

    #[test]
    fn inversion_examples() {
        let l = lat(2, 2);
        let p = l.inversion_map();
        assert_eq!(p[l.site(0, 0)], l.site(1, 1));
        assert_eq!(p[l.site(0, 1)], l.site(1, 0));

        let l = lat(3, 1);
        assert_eq!(l.inversion_map()[l.site(1, 0)], l.site(1, 0));

        let l = lat(4, 2);
        let p = l.inversion_map();
        assert!((0..8).all(|i| p[i] != i));
    }

    #[test]
    fn inversion_is_involution_and_sublattice_rule() {
        for (nx, ny) in [(2, 2), (3, 2), (4, 2), (3, 3), (4, 4), (5, 2), (6, 3)] {
            let l = lat(nx, ny);
            let p = l.inversion_map();
            assert!((0..l.n_sites()).all(|i| p[p[i]] == i));
            let keeps = (0..l.n_sites()).all(|i| l.is_even_site(i) == l.is_even_site(p[i]));
            // both odd also preserves parity, but then the centre site is fixed
            assert_eq!(keeps, (nx + ny) % 2 == 0, "{nx}x{ny}");
            if nx % 2 == 1 && ny % 2 == 1 {
                assert!((0..l.n_sites()).any(|i| p[i] == i));
            }
        }
    }
}
