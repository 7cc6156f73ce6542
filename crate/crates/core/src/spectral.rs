//! Dense diagonalization of a sector and the analytics built on it.
//!
//! The sector is split into symmetry blocks first (see
//! [`crate::symmetry`]); each block is diagonalized densely and the
//! eigenvalues are merged into one ascending list. Eigenvectors stay in
//! block form and are expanded to the plain sector basis on demand.

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::SectorBasis;
use crate::entanglement::{entanglement_entropy, Bipartition};
use crate::error::{Error, Result};
use crate::operator::{Hamiltonian, StateVector, DEFAULT_DENSE_CAP};
use crate::symmetry::{BlockDecomposition, SymmetryGroup};

pub use crate::entanglement::page_value;

/// Default relative zero-energy tolerance, in units of `max |E|`.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;
/// Default relative tolerance for grouping degenerate levels.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;
/// Gap ratio below which a zero-mode count is flagged as ambiguous.
pub const GAP_RATIO_WARN: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct DiagonalizeOptions {
    pub want_vectors: bool,
    /// Split into reflection / spin-flip blocks before diagonalizing.
    pub use_symmetry: bool,
    /// Largest block dimension that may be diagonalized densely.
    pub dense_cap: usize,
    /// Zero-energy tolerance relative to `max |E|`.
    pub zero_tol: f64,
}

impl Default for DiagonalizeOptions {
    fn default() -> Self {
        Self {
            want_vectors: false,
            use_symmetry: true,
            dense_cap: DEFAULT_DENSE_CAP,
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }
}

impl DiagonalizeOptions {
    pub fn with_vectors(mut self) -> Self {
        self.want_vectors = true;
        self
    }
}

/// Full spectrum of one sector.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    n_sites: usize,
    n_down: usize,
    eigenvalues: Vec<f64>,
    labels: Vec<(u32, u32)>,
    zero_tol: f64,
    zero_count: usize,
    max_abs: f64,
    blocks: BlockDecomposition,
    block_values: Vec<Vec<f64>>,
    block_vectors: Option<Vec<Mat<f64>>>,
}

pub fn diagonalize(h: &Hamiltonian, basis: &SectorBasis, opts: &DiagonalizeOptions) -> Result<SpectrumReport> {
    let group = if opts.use_symmetry {
        SymmetryGroup::full(h.lattice(), basis.n_down())
    } else {
        SymmetryGroup::TRIVIAL
    };
    let blocks = BlockDecomposition::new(h.lattice(), basis, group)?;
    let largest = blocks.max_block_dim();
    if largest > opts.dense_cap {
        return Err(Error::DenseCapExceeded {
            dim: largest,
            cap: opts.dense_cap,
        });
    }
    let mut block_values = Vec::with_capacity(blocks.n_blocks());
    let mut block_vectors = opts.want_vectors.then(Vec::new);
    for s in 0..blocks.n_blocks() {
        let m = blocks.block_matrix(h, s);
        if m.nrows() == 0 {
            block_values.push(Vec::new());
            if let Some(v) = block_vectors.as_mut() {
                v.push(Mat::zeros(0, 0));
            }
            continue;
        }
        log::debug!("diagonalizing block {s} of dimension {}", m.nrows());
        if let Some(v) = block_vectors.as_mut() {
            let evd = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Linalg(format!("eigensolver failed: {e:?}")))?;
            block_values.push(evd.S().column_vector().iter().copied().collect());
            v.push(evd.U().to_owned());
        } else {
            block_values.push(
                m.self_adjoint_eigenvalues(Side::Lower)
                    .map_err(|e| Error::Linalg(format!("eigensolver failed: {e:?}")))?,
            );
        }
    }
    let mut labels: Vec<(u32, u32)> = block_values
        .iter()
        .enumerate()
        .flat_map(|(s, vals)| (0..vals.len()).map(move |j| (s as u32, j as u32)))
        .collect();
    let value = |&(s, j): &(u32, u32)| block_values[s as usize][j as usize];
    labels.sort_by(|a, b| value(a).total_cmp(&value(b)).then(a.cmp(b)));
    let eigenvalues: Vec<f64> = labels.iter().map(value).collect();
    let max_abs = eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let zero_tol = opts.zero_tol * max_abs;
    let zero_count = eigenvalues.iter().filter(|e| e.abs() <= zero_tol).count();
    Ok(SpectrumReport {
        n_sites: basis.n_sites(),
        n_down: basis.n_down(),
        eigenvalues,
        labels,
        zero_tol,
        zero_count,
        max_abs,
        blocks,
        block_values,
        block_vectors,
    })
}

impl SpectrumReport {
    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn sector(&self) -> (usize, usize) {
        (self.n_sites, self.n_down)
    }

    /// Absolute zero-energy tolerance.
    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    pub fn zero_count(&self) -> usize {
        self.zero_count
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    pub fn has_vectors(&self) -> bool {
        self.block_vectors.is_some()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.block_dims()
    }

    /// Symmetry block `s` and position inside it of the `k`-th eigenvalue.
    pub fn label(&self, k: usize) -> (usize, usize) {
        let (s, j) = self.labels[k];
        (s as usize, j as usize)
    }

    fn vectors(&self) -> Result<&[Mat<f64>]> {
        self.block_vectors.as_deref().ok_or(Error::MissingEigenvectors)
    }

    fn check(&self, basis: &SectorBasis) -> Result<()> {
        if basis.same_sector(self.n_sites, self.n_down) {
            Ok(())
        } else {
            Err(Error::BasisMismatch {
                sites: self.n_sites,
                down: self.n_down,
                found_sites: basis.n_sites(),
                found_down: basis.n_down(),
            })
        }
    }

    /// The `k`-th eigenvector in the sector basis.
    pub fn eigenvector(&self, k: usize) -> Result<Vec<f64>> {
        let vecs = self.vectors()?;
        let (s, j) = self.label(k);
        let col: Vec<f64> = vecs[s].col(j).iter().copied().collect();
        Ok(self.blocks.expand(s, &col))
    }

    /// Overlaps `<n|psi>` grouped by block, in each block's own order.
    pub fn block_overlaps(&self, basis: &SectorBasis, psi: &[Complex64]) -> Result<Vec<Vec<Complex64>>> {
        self.check(basis)?;
        let vecs = self.vectors()?;
        (0..self.blocks.n_blocks())
            .map(|s| {
                let a = self.blocks.project(basis, s, psi)?;
                let u = &vecs[s];
                Ok((0..u.ncols())
                    .map(|j| {
                        u.col(j)
                            .iter()
                            .zip(&a)
                            .map(|(&x, &y)| y * x)
                            .sum::<Complex64>()
                    })
                    .collect())
            })
            .collect()
    }

    /// `<n|psi>` for every eigenvector, in ascending-energy order.
    pub fn overlaps(&self, basis: &SectorBasis, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let by_block = self.block_overlaps(basis, psi)?;
        Ok(self
            .labels
            .iter()
            .map(|&(s, j)| by_block[s as usize][j as usize])
            .collect())
    }

    /// `sum_n weight(n) * c_n |n>` written out in the sector basis, with
    /// `c` in block form as returned by [`block_overlaps`](Self::block_overlaps).
    pub fn synthesize(
        &self,
        coeffs: &[Vec<Complex64>],
        mut weight: impl FnMut(f64) -> Option<Complex64>,
    ) -> Result<Vec<Complex64>> {
        let vecs = self.vectors()?;
        let mut out = vec![Complex64::ZERO; self.blocks.sector_dim()];
        for (s, u) in vecs.iter().enumerate() {
            let d = u.nrows();
            let mut b = vec![Complex64::ZERO; d];
            let mut any = false;
            for (j, &c) in coeffs[s].iter().enumerate() {
                let Some(w) = weight(self.block_values[s][j]) else {
                    continue;
                };
                let f = c * w;
                if f == Complex64::ZERO {
                    continue;
                }
                any = true;
                for (bi, &x) in b.iter_mut().zip(u.col(j).iter()) {
                    *bi += f * x;
                }
            }
            if any {
                self.blocks.expand_into(s, &b, Complex64::new(1.0, 0.0), &mut out);
            }
        }
        Ok(out)
    }

    /// Eigenvalue sum rule check: `sum E` over the sector equals `tr H`.
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Zero-mode count with the gap that separates it from the rest of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroModeCount {
    pub count: usize,
    pub tol: f64,
    /// Largest `|E|` counted as zero (0 when none).
    pub largest_zero: f64,
    /// Smallest `|E|` above the tolerance (infinite when none).
    pub smallest_nonzero: f64,
    /// `smallest_nonzero / max(largest_zero, eps * max|E|)`.
    pub gap_ratio: f64,
}

impl ZeroModeCount {
    pub fn is_certified(&self) -> bool {
        self.gap_ratio >= GAP_RATIO_WARN
    }
}

pub fn zero_mode_count(report: &SpectrumReport) -> ZeroModeCount {
    let tol = report.zero_tol;
    let mut largest_zero = 0.0f64;
    let mut smallest_nonzero = f64::INFINITY;
    for e in report.eigenvalues.iter().map(|e| e.abs()) {
        if e <= tol {
            largest_zero = largest_zero.max(e);
        } else {
            smallest_nonzero = smallest_nonzero.min(e);
        }
    }
    let floor = f64::EPSILON * report.max_abs.max(f64::MIN_POSITIVE);
    let gap_ratio = smallest_nonzero / largest_zero.max(floor);
    let out = ZeroModeCount {
        count: report.zero_count,
        tol,
        largest_zero,
        smallest_nonzero,
        gap_ratio,
    };
    if !out.is_certified() {
        log::warn!(
            "zero-mode count {} is ambiguous: largest |E| inside {largest_zero:e}, smallest outside {smallest_nonzero:e}",
            out.count
        );
    }
    out
}

/// Entanglement entropy of every eigenstate, in ascending-energy order.
#[derive(Debug, Clone)]
pub struct EntanglementReport {
    pub cut: usize,
    pub entropies: Vec<f64>,
}

pub fn eigenstate_entropies(
    report: &SpectrumReport,
    basis: &SectorBasis,
    part: Bipartition,
) -> Result<EntanglementReport> {
    report.check(basis)?;
    report.vectors()?;
    let entropies = (0..report.dim())
        .into_par_iter()
        .map(|k| {
            let v = report.eigenvector(k)?;
            entanglement_entropy(basis, &v, part)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EntanglementReport {
        cut: part.cut,
        entropies,
    })
}

/// Canonical ensemble quantities at one inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalPoint {
    pub beta: f64,
    pub energy: f64,
    pub entropy: f64,
}

/// `<H>_beta` and `S_th = beta <H> + ln Z` over the given spectrum.
pub fn thermal_at(eigenvalues: &[f64], beta: f64) -> ThermalPoint {
    let (lo, hi) = min_max(eigenvalues);
    let shift = if beta >= 0.0 { lo } else { hi };
    let mut z = 0.0;
    let mut ez = 0.0;
    for &e in eigenvalues {
        let w = (-beta * (e - shift)).exp();
        z += w;
        ez += e * w;
    }
    let energy = ez / z;
    let ln_z = -beta * shift + z.ln();
    ThermalPoint {
        beta,
        energy,
        entropy: beta * energy + ln_z,
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| (a.min(e), b.max(e)))
}

/// Solve `<H>_beta = energy` for `beta` and return the thermal entropy there.
pub fn thermal_entropy(report: &SpectrumReport, energy: f64) -> Result<ThermalPoint> {
    thermal_entropy_of(&report.eigenvalues, energy)
}

pub fn thermal_entropy_of(eigenvalues: &[f64], energy: f64) -> Result<ThermalPoint> {
    let (lo, hi) = min_max(eigenvalues);
    let at_zero = thermal_at(eigenvalues, 0.0);
    let scale = (hi - lo).max(f64::MIN_POSITIVE);
    if (energy - at_zero.energy).abs() <= 1e-14 * scale {
        return Ok(at_zero);
    }
    if !(energy > lo && energy < hi) {
        return Err(Error::EnergyOutOfRange {
            energy,
            min: lo,
            max: hi,
        });
    }
    // <H>_beta decreases with beta: positive beta below the mean
    let sign = if energy < at_zero.energy { 1.0 } else { -1.0 };
    let mut b_lo = 0.0;
    let mut b_hi = sign / scale;
    let max_beta = 1e8 / scale;
    while (thermal_at(eigenvalues, b_hi).energy - energy) * sign > 0.0 {
        b_lo = b_hi;
        b_hi *= 2.0;
        if b_hi.abs() > max_beta {
            return Err(Error::EnergyOutOfRange {
                energy,
                min: lo,
                max: hi,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (b_lo + b_hi);
        if mid == b_lo || mid == b_hi {
            break;
        }
        if (thermal_at(eigenvalues, mid).energy - energy) * sign > 0.0 {
            b_lo = mid;
        } else {
            b_hi = mid;
        }
    }
    Ok(thermal_at(eigenvalues, 0.5 * (b_lo + b_hi)))
}

/// `S_th(beta_E)` on `n` energies spread evenly over the open spectral range.
pub fn thermal_curve(report: &SpectrumReport, n: usize) -> Result<Vec<ThermalPoint>> {
    let (lo, hi) = min_max(&report.eigenvalues);
    (1..=n)
        .map(|k| {
            let e = lo + (hi - lo) * k as f64 / (n + 1) as f64;
            thermal_entropy(report, e)
        })
        .collect()
}

/// Long-time averages obtained from the eigenbasis expansion of a state.
#[derive(Debug, Clone)]
pub struct ZeroModeProjection {
    /// `||P_0 psi||^2`.
    pub c_p_sq: f64,
    /// `P_0 psi` (unnormalized).
    pub projected: StateVector,
    /// Long-time `<S^z_i>` per site: `zero_term + second_term`.
    pub sz_average: Vec<f64>,
    /// `<P_0 psi| S^z_i |P_0 psi>`.
    pub zero_term: Vec<f64>,
    /// Contribution of the degenerate levels with `E != 0`.
    pub second_term: Vec<f64>,
    /// Number of degenerate groups with `E != 0` that were summed.
    pub n_groups: usize,
}

impl ZeroModeProjection {
    pub fn max_second_term(&self) -> f64 {
        self.second_term.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Long-time average of the diagonal `S^z_i` from the spectral
/// decomposition: `sum_G <psi_G|S^z_i|psi_G>` over degenerate groups `G`,
/// `psi_G` being the projection onto the group. The `E = 0` group is
/// reported separately. Groups chain levels whose spacing is at most
/// `degeneracy_tol * max|E|`.
pub fn zero_mode_projection(
    report: &SpectrumReport,
    basis: &SectorBasis,
    psi0: &StateVector,
    degeneracy_tol: f64,
) -> Result<ZeroModeProjection> {
    report.check(basis)?;
    psi0.check_basis(basis)?;
    let c = report.block_overlaps(basis, psi0.amplitudes())?;
    let zero_tol = report.zero_tol;
    let projected = report.synthesize(&c, |e| (e.abs() <= zero_tol).then_some(Complex64::new(1.0, 0.0)))?;

    let mut groups: Vec<(usize, usize)> = Vec::new();
    let gap = degeneracy_tol * report.max_abs;
    let ev = &report.eigenvalues;
    let mut k = 0;
    while k < ev.len() {
        if ev[k].abs() <= zero_tol {
            k += 1;
            continue;
        }
        let start = k;
        k += 1;
        while k < ev.len() && ev[k].abs() > zero_tol && ev[k] - ev[k - 1] <= gap {
            k += 1;
        }
        groups.push((start, k));
    }

    let vecs = report.vectors()?;
    let mut density = vec![0.0; basis.len()];
    let mut group_vec = vec![Complex64::ZERO; basis.len()];
    let mut touched = vec![false; report.blocks.n_blocks()];
    for &(a, b) in &groups {
        group_vec.iter_mut().for_each(|x| *x = Complex64::ZERO);
        touched.iter_mut().for_each(|t| *t = false);
        let mut by_block: Vec<Vec<Complex64>> = vecs.iter().map(|u| vec![Complex64::ZERO; u.nrows()]).collect();
        for k in a..b {
            let (s, j) = report.label(k);
            let cj = c[s][j];
            if cj == Complex64::ZERO {
                continue;
            }
            touched[s] = true;
            for (bi, &x) in by_block[s].iter_mut().zip(vecs[s].col(j).iter()) {
                *bi += cj * x;
            }
        }
        if !touched.iter().any(|&t| t) {
            continue;
        }
        for (s, coeffs) in by_block.iter().enumerate() {
            if touched[s] {
                report
                    .blocks
                    .expand_into(s, coeffs, Complex64::new(1.0, 0.0), &mut group_vec);
            }
        }
        for (d, g) in density.iter_mut().zip(&group_vec) {
            *d += g.norm_sqr();
        }
    }

    let sz = |weights: &mut dyn Iterator<Item = f64>| -> Vec<f64> {
        let mut out = vec![0.0; basis.n_sites()];
        for (w, &mask) in weights.zip(basis.configs()) {
            if w == 0.0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += if mask >> i & 1 == 1 { 0.5 * w } else { -0.5 * w };
            }
        }
        out
    };
    let zero_term = sz(&mut projected.iter().map(|a| a.norm_sqr()));
    let second_term = sz(&mut density.iter().copied());
    let sz_average = zero_term.iter().zip(&second_term).map(|(a, b)| a + b).collect();
    let c_p_sq = projected.iter().map(|a| a.norm_sqr()).sum();
    Ok(ZeroModeProjection {
        c_p_sq,
        projected: StateVector::from_amplitudes(basis, projected)?,
        sz_average,
        zero_term,
        second_term,
        n_groups: groups.len(),
    })
}
