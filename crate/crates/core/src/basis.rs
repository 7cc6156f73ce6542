//! Fixed-magnetization sectors of the spin-1/2 Hilbert space.
//!
//! A configuration is a `u64` with bit `i` set when site `i` carries spin up.
//! Inside a sector the configurations are enumerated in ascending numeric
//! order, which for fixed popcount coincides with the colexicographic order
//! of the set-bit positions. The index of a configuration is therefore its
//! combinatorial-number-system rank, computed in `O(N)` without a search.

use crate::error::{Error, Result};
use crate::lattice::{full_mask, MAX_SITES};

const BINOM_ROWS: usize = MAX_SITES + 1;

const fn binomial_table() -> [[u64; BINOM_ROWS]; BINOM_ROWS] {
    let mut t = [[0u64; BINOM_ROWS]; BINOM_ROWS];
    let mut n = 0;
    while n < BINOM_ROWS {
        t[n][0] = 1;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            k += 1;
        }
        n += 1;
    }
    t
}

static BINOM: [[u64; BINOM_ROWS]; BINOM_ROWS] = binomial_table();

/// `C(n, k)` for `n <= 64`; zero when `k > n`.
#[inline]
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n || n > MAX_SITES {
        0
    } else {
        BINOM[n][k]
    }
}

/// Colex rank of `mask` among all masks with the same popcount.
#[inline]
pub fn colex_rank(mut mask: u64) -> usize {
    let mut rank = 0u64;
    let mut k = 1;
    while mask != 0 {
        let p = mask.trailing_zeros() as usize;
        rank += BINOM[p][k];
        k += 1;
        mask &= mask - 1;
    }
    rank as usize
}

/// Inverse of [`colex_rank`] for masks with `ones` set bits.
pub fn colex_unrank(mut rank: u64, ones: usize) -> u64 {
    let mut mask = 0u64;
    for k in (1..=ones).rev() {
        // largest p with C(p, k) <= rank
        let mut p = k - 1;
        while p + 1 < BINOM_ROWS && BINOM[p + 1][k] <= rank {
            p += 1;
        }
        rank -= BINOM[p][k];
        mask |= 1u64 << p;
    }
    mask
}

/// A computational-basis configuration, bit `i` set = spin up at site `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpinConfig(pub u64);

impl SpinConfig {
    pub fn n_up(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_up(self, site: usize) -> bool {
        self.0 >> site & 1 == 1
    }

    /// `S^z_i` eigenvalue: `+1/2` for spin up, `-1/2` for spin down.
    pub fn sz(self, site: usize) -> f64 {
        if self.is_up(site) {
            0.5
        } else {
            -0.5
        }
    }
}

/// All configurations of `n_sites` spins with exactly `n_down` spins down.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_sites: usize,
    n_down: usize,
    configs: Vec<u64>,
    ranks: RankTable,
}

/// Colex rank split into byte lookups: entry `[byte][ones below][value]`
/// holds the contribution of that byte given the set bits below it.
#[derive(Debug, Clone, PartialEq, Eq)]
struct RankTable {
    stride: usize,
    bytes: usize,
    table: Vec<u64>,
}

impl RankTable {
    fn new(n_sites: usize, n_up: usize) -> Self {
        let bytes = n_sites.div_ceil(8);
        let stride = n_up + 1;
        let mut table = vec![0u64; bytes * stride * 256];
        for b in 0..bytes {
            for below in 0..stride {
                for v in 0..256usize {
                    let mut r = 0u64;
                    let mut k = below + 1;
                    let mut bits = v;
                    while bits != 0 && k < BINOM_ROWS {
                        let p = 8 * b + bits.trailing_zeros() as usize;
                        if p < BINOM_ROWS {
                            r += BINOM[p][k];
                        }
                        k += 1;
                        bits &= bits - 1;
                    }
                    table[(b * stride + below) * 256 + v] = r;
                }
            }
        }
        Self {
            stride,
            bytes,
            table,
        }
    }

    #[inline]
    fn rank(&self, mask: u64) -> usize {
        let mut r = 0u64;
        let mut below = 0usize;
        for b in 0..self.bytes {
            let v = (mask >> (8 * b)) as usize & 0xff;
            debug_assert!(below < self.stride);
            r += self.table[(b * self.stride + below) * 256 + v];
            below += v.count_ones() as usize;
        }
        r as usize
    }
}

impl SectorBasis {
    pub fn new(n_sites: usize, n_down: usize) -> Result<Self> {
        if n_sites > MAX_SITES || n_down > n_sites {
            return Err(Error::InvalidInput(format!(
                "sector requires 0 <= n_down <= n_sites <= {MAX_SITES}, got n_sites = {n_sites}, n_down = {n_down}"
            )));
        }
        let size = binomial(n_sites, n_down);
        // u32-addressable keeps per-config side tables compact
        if size > u32::MAX as u64 {
            return Err(Error::SectorTooLarge { n_sites, n_down });
        }
        let n_up = n_sites - n_down;
        let mut configs = Vec::with_capacity(size as usize);
        configs.extend(FixedPopcount::new(n_sites, n_up));
        debug_assert_eq!(configs.len() as u64, size);
        Ok(Self {
            n_sites,
            n_down,
            configs,
            ranks: RankTable::new(n_sites, n_up),
        })
    }

    /// Sector with total `S^z` of zero; `n_sites` must be even.
    pub fn zero_magnetization(n_sites: usize) -> Result<Self> {
        if n_sites % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "S^z = 0 needs an even number of sites, got {n_sites}"
            )));
        }
        Self::new(n_sites, n_sites / 2)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_down(&self) -> usize {
        self.n_down
    }

    pub fn n_up(&self) -> usize {
        self.n_sites - self.n_down
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Total `S^z` of every state in the sector.
    pub fn sz_total(&self) -> f64 {
        (self.n_up() as f64 - self.n_down as f64) / 2.0
    }

    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    #[inline]
    pub fn config(&self, index: usize) -> SpinConfig {
        SpinConfig(self.configs[index])
    }

    pub fn contains(&self, mask: u64) -> bool {
        mask & !full_mask(self.n_sites) == 0 && mask.count_ones() as usize == self.n_up()
    }

    /// Position of `mask` in the ascending enumeration.
    pub fn rank(&self, mask: u64) -> Result<usize> {
        if mask & !full_mask(self.n_sites) != 0 {
            return Err(Error::InvalidInput(format!(
                "configuration {mask:#x} has bits beyond site {}",
                self.n_sites
            )));
        }
        let up = mask.count_ones() as usize;
        if up != self.n_up() {
            return Err(Error::NotInSector {
                mask,
                found: self.n_sites - up,
                expected: self.n_down,
            });
        }
        Ok(self.ranks.rank(mask))
    }

    /// [`rank`](Self::rank) without validation, for hot loops.
    #[inline]
    pub fn rank_unchecked(&self, mask: u64) -> usize {
        self.ranks.rank(mask)
    }

    pub fn unrank(&self, index: usize) -> SpinConfig {
        self.config(index)
    }

    /// Whether this basis is the `(n_sites, n_down)` sector.
    pub fn same_sector(&self, n_sites: usize, n_down: usize) -> bool {
        self.n_sites == n_sites && self.n_down == n_down
    }
}

/// Ascending iterator over `n`-bit words with exactly `k` bits set
/// (Gosper's hack).
#[derive(Debug, Clone)]
pub struct FixedPopcount {
    next: Option<u64>,
    limit: u64,
}

impl FixedPopcount {
    pub fn new(n: usize, k: usize) -> Self {
        let next = if k > n {
            None
        } else {
            Some(full_mask(k))
        };
        Self {
            next,
            limit: full_mask(n),
        }
    }
}

impl Iterator for FixedPopcount {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let (r, overflow) = cur.overflowing_add(c);
            if overflow || r == 0 {
                None
            } else {
                let nxt = (((r ^ cur) >> 2) / c) | r;
                (nxt <= self.limit).then_some(nxt)
            }
        };
        Some(cur)
    }
}
