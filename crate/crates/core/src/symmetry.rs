//! Block decomposition of a sector under the lattice reflections and,
//! at zero magnetization, the global spin flip.
//!
//! All generators commute with each other and with the Hamiltonian, and
//! every group element is an involution, so the irreducible
//! representations are the `2^k` sign characters `chi_s(g) =
//! (-1)^popcount(s & g)`. The symmetric basis state of a representative
//! `r` in block `s` is
//!
//! ```text
//! |r, s> = |O_r|^(-1/2) * sum_{c in O_r} chi_s(g_c) |c>,   g_c r = c,
//! ```
//!
//! which is well defined whenever `chi_s` is trivial on the stabilizer of
//! `r`. Blocks are only an acceleration device: every block eigenvector is
//! expanded back to the plain sector basis before anything physical is
//! computed from it.

use faer::Mat;

use crate::basis::{colex_rank, SectorBasis};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::operator::{Amplitude, Hamiltonian, SitePermutation};

/// One element of the symmetry group: a site permutation, optionally
/// followed by a global spin flip.
#[derive(Debug, Clone)]
struct Element {
    perm: SitePermutation,
    flip: bool,
}

impl Element {
    #[inline]
    fn apply(&self, mask: u64, full: u64) -> u64 {
        let m = self.perm.apply(mask);
        if self.flip {
            !m & full
        } else {
            m
        }
    }
}

/// Lattice symmetries selected for the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryGroup {
    pub reflect_x: bool,
    pub reflect_y: bool,
    pub spin_flip: bool,
}

impl SymmetryGroup {
    /// No reduction at all: a single block equal to the sector.
    pub const TRIVIAL: Self = Self {
        reflect_x: false,
        reflect_y: false,
        spin_flip: false,
    };

    /// Every generator that is non-trivial on this lattice and sector.
    pub fn full(lattice: &LatticeSpec, n_down: usize) -> Self {
        Self {
            reflect_x: lattice.nx() > 1,
            reflect_y: lattice.ny() > 1,
            spin_flip: 2 * n_down == lattice.n_sites() && n_down > 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct OrbitEntry {
    rep: u32,
    element: u8,
}

/// Orbit structure of a sector and the resulting symmetry blocks.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    n_sites: usize,
    n_down: usize,
    order: usize,
    /// Representative masks, ascending.
    reps: Vec<u64>,
    orbit_size: Vec<u32>,
    /// For each sector index: its representative and an element mapping
    /// the representative onto it.
    lookup: Vec<OrbitEntry>,
    /// Per character: representative ids belonging to the block.
    blocks: Vec<Vec<u32>>,
    /// Per character: position of each representative in the block, or `u32::MAX`.
    position: Vec<Vec<u32>>,
}

impl BlockDecomposition {
    pub fn new(lattice: &LatticeSpec, basis: &SectorBasis, group: SymmetryGroup) -> Result<Self> {
        if basis.n_sites() != lattice.n_sites() {
            return Err(Error::InvalidInput(format!(
                "lattice has {} sites, basis has {}",
                lattice.n_sites(),
                basis.n_sites()
            )));
        }
        let full = lattice.full_mask();
        let mut gens: Vec<Element> = Vec::new();
        if group.reflect_x {
            gens.push(Element {
                perm: SitePermutation::new(lattice.reflection_x_map())?,
                flip: false,
            });
        }
        if group.reflect_y {
            gens.push(Element {
                perm: SitePermutation::new(lattice.reflection_y_map())?,
                flip: false,
            });
        }
        if group.spin_flip {
            if 2 * basis.n_down() != basis.n_sites() {
                return Err(Error::InvalidInput(
                    "spin flip is only a symmetry of the S^z = 0 sector".into(),
                ));
            }
            gens.push(Element {
                perm: SitePermutation::new((0..lattice.n_sites()).collect())?,
                flip: true,
            });
        }
        gens.retain(|g| g.flip || !g.perm.is_identity());
        let k = gens.len();
        let order = 1usize << k;
        let elements: Vec<Element> = (0..order)
            .map(|bits| {
                let mut map: Vec<usize> = (0..lattice.n_sites()).collect();
                let mut flip = false;
                for (gi, g) in gens.iter().enumerate() {
                    if bits >> gi & 1 == 1 {
                        // compose: site i -> g(map(i))
                        for t in map.iter_mut() {
                            *t = g.perm.apply(1 << *t).trailing_zeros() as usize;
                        }
                        flip ^= g.flip;
                    }
                }
                Element {
                    perm: SitePermutation::new(map).expect("composition of permutations"),
                    flip,
                }
            })
            .collect();

        let dim = basis.len();
        let unset = OrbitEntry {
            rep: u32::MAX,
            element: 0,
        };
        let mut lookup = vec![unset; dim];
        let mut reps = Vec::new();
        let mut orbit_size = Vec::new();
        let mut stabilizers: Vec<u32> = Vec::new();
        for (idx, &mask) in basis.configs().iter().enumerate() {
            if lookup[idx].rep != u32::MAX {
                continue;
            }
            let rid = reps.len() as u32;
            let mut stab = 0u32;
            let mut size = 0u32;
            for (gi, g) in elements.iter().enumerate() {
                let image = g.apply(mask, full);
                if image == mask {
                    stab |= 1 << gi;
                }
                let slot = &mut lookup[colex_rank(image)];
                if slot.rep == u32::MAX {
                    *slot = OrbitEntry {
                        rep: rid,
                        element: gi as u8,
                    };
                    size += 1;
                }
            }
            reps.push(mask);
            orbit_size.push(size);
            stabilizers.push(stab);
        }

        let mut blocks = vec![Vec::new(); order];
        let mut position = vec![vec![u32::MAX; reps.len()]; order];
        for s in 0..order {
            for (rid, &stab) in stabilizers.iter().enumerate() {
                let trivial = (0..order)
                    .filter(|g| stab >> g & 1 == 1)
                    .all(|g| (s & g).count_ones() % 2 == 0);
                if trivial {
                    position[s][rid] = blocks[s].len() as u32;
                    blocks[s].push(rid as u32);
                }
            }
        }
        debug_assert_eq!(blocks.iter().map(Vec::len).sum::<usize>(), dim);

        Ok(Self {
            n_sites: basis.n_sites(),
            n_down: basis.n_down(),
            order,
            reps,
            orbit_size,
            lookup,
            blocks,
            position,
        })
    }

    pub fn group_order(&self) -> usize {
        self.order
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn max_block_dim(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn sector_dim(&self) -> usize {
        self.lookup.len()
    }

    #[inline]
    fn chi(s: usize, g: u8) -> f64 {
        if (s & g as usize).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn check(&self, basis: &SectorBasis) -> Result<()> {
        if !basis.same_sector(self.n_sites, self.n_down) {
            return Err(Error::BasisMismatch {
                sites: self.n_sites,
                down: self.n_down,
                found_sites: basis.n_sites(),
                found_down: basis.n_down(),
            });
        }
        Ok(())
    }

    /// Dense matrix of `H` restricted to block `s`.
    pub fn block_matrix(&self, h: &Hamiltonian, s: usize) -> Mat<f64> {
        let reps = &self.blocks[s];
        let pos = &self.position[s];
        let d = reps.len();
        let mut m = Mat::<f64>::zeros(d, d);
        for (j, &rid) in reps.iter().enumerate() {
            let r = self.reps[rid as usize];
            let size_r = self.orbit_size[rid as usize] as f64;
            m[(j, j)] = h.diagonal(r);
            h.for_each_offdiag(r, |target, amp| {
                let e = self.lookup[colex_rank(target)];
                let i = pos[e.rep as usize];
                if i != u32::MAX {
                    let size_t = self.orbit_size[e.rep as usize] as f64;
                    m[(i as usize, j)] += (size_r / size_t).sqrt() * Self::chi(s, e.element) * amp;
                }
            });
        }
        // restore exact symmetry lost to the square-root weights
        for j in 0..d {
            for i in 0..j {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        m
    }

    /// Components of a sector vector in block `s`.
    pub fn project<T: Amplitude>(&self, basis: &SectorBasis, s: usize, psi: &[T]) -> Result<Vec<T>> {
        self.check(basis)?;
        let pos = &self.position[s];
        let mut out = vec![T::ZERO; self.blocks[s].len()];
        for (c, &a) in psi.iter().enumerate() {
            let e = self.lookup[c];
            let i = pos[e.rep as usize];
            if i != u32::MAX {
                let w = Self::chi(s, e.element) / (self.orbit_size[e.rep as usize] as f64).sqrt();
                out[i as usize] += a * w;
            }
        }
        Ok(out)
    }

    /// Add `scale * (block-`s` vector `coeffs`)` to a sector vector.
    pub fn expand_into<T: Amplitude>(&self, s: usize, coeffs: &[T], scale: T, out: &mut [T]) {
        let pos = &self.position[s];
        for (c, slot) in out.iter_mut().enumerate() {
            let e = self.lookup[c];
            let i = pos[e.rep as usize];
            if i != u32::MAX {
                let w = Self::chi(s, e.element) / (self.orbit_size[e.rep as usize] as f64).sqrt();
                *slot += scale * coeffs[i as usize] * w;
            }
        }
    }

    /// A block vector written out in the sector basis.
    pub fn expand<T: Amplitude>(&self, s: usize, coeffs: &[T]) -> Vec<T> {
        let mut out = vec![T::ZERO; self.sector_dim()];
        self.expand_into(s, coeffs, T::from_real(1.0), &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Couplings;
    use crate::operator::assemble_dense;

    fn spectrum(m: &Mat<f64>) -> Vec<f64> {
        m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap()
    }

    #[test]
    fn blocks_reproduce_full_spectrum() {
        for (nx, ny, delta) in [(4, 2, 0.0), (3, 2, 0.4), (3, 3, 0.0), (2, 2, 1.0)] {
            let lat = LatticeSpec::new(nx, ny, Couplings::xx(1.0, 0.8).with_anisotropy(delta, 0.5 * delta))
                .unwrap();
            let n = lat.n_sites();
            let h = Hamiltonian::new(&lat);
            for n_down in 0..=n {
                let basis = SectorBasis::new(n, n_down).unwrap();
                let dec = BlockDecomposition::new(&lat, &basis, SymmetryGroup::full(&lat, n_down)).unwrap();
                let mut from_blocks: Vec<f64> = (0..dec.n_blocks())
                    .flat_map(|s| spectrum(&dec.block_matrix(&h, s)))
                    .collect();
                from_blocks.sort_by(f64::total_cmp);
                let direct = spectrum(&assemble_dense(&h, &basis, 10_000).unwrap());
                assert_eq!(from_blocks.len(), direct.len());
                for (a, b) in from_blocks.iter().zip(&direct) {
                    assert!((a - b).abs() < 1e-12, "{nx}x{ny} n_down={n_down}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn project_then_expand_is_identity() {
        let lat = LatticeSpec::new(4, 2, Couplings::default()).unwrap();
        let basis = SectorBasis::new(8, 4).unwrap();
        let dec = BlockDecomposition::new(&lat, &basis, SymmetryGroup::full(&lat, 4)).unwrap();
        assert_eq!(dec.group_order(), 8);
        let psi: Vec<f64> = (0..basis.len()).map(|k| (k as f64 * 0.37).cos()).collect();
        let mut back = vec![0.0; psi.len()];
        for s in 0..dec.n_blocks() {
            let a = dec.project(&basis, s, &psi).unwrap();
            dec.expand_into(s, &a, 1.0, &mut back);
        }
        for (x, y) in psi.iter().zip(&back) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn trivial_group_is_one_block() {
        let lat = LatticeSpec::new(3, 2, Couplings::default()).unwrap();
        let basis = SectorBasis::new(6, 3).unwrap();
        let dec = BlockDecomposition::new(&lat, &basis, SymmetryGroup::TRIVIAL).unwrap();
        assert_eq!(dec.block_dims(), vec![20]);
    }
}
