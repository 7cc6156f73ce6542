//! Real-time evolution and the observables recorded along it.
//!
//! Two propagators are available. The spectral one expands the initial
//! state in the eigenbasis of a dense sector diagonalization and is exact
//! at every requested time. The Krylov stepper builds a small Lanczos basis
//! around the current state, exponentiates the projected tridiagonal
//! matrix and adapts the step so the standard a-posteriori error estimate
//! `beta_{m+1} |[exp(-i T tau) e_1]_m|` stays below tolerance.

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::SectorBasis;
use crate::entanglement::{entanglement_entropy, Bipartition};
use crate::error::{Error, Result};
use crate::lattice::{Couplings, LatticeSpec};
use crate::operator::{dot, norm, pattern_mask, product_state, Hamiltonian, Spin, StateVector};
use crate::spectral::{diagonalize, zero_mode_projection, DiagonalizeOptions, SpectrumReport, DEFAULT_DEGENERACY_TOL};

const SPECTRAL_CHUNK: usize = 64;

/// Settings of the adaptive Krylov propagator.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovStepperOptions {
    /// Krylov subspace dimension per step.
    pub subspace: usize,
    /// Bound on the local error estimate of every step.
    pub tol: f64,
    /// Smallest step before giving up.
    pub min_step: f64,
}

impl Default for KrylovStepperOptions {
    fn default() -> Self {
        Self {
            subspace: 30,
            tol: 1e-9,
            min_step: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvolutionMethod {
    Spectral,
    KrylovStepper(KrylovStepperOptions),
}

impl EvolutionMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            EvolutionMethod::Spectral => "spectral",
            EvolutionMethod::KrylovStepper(_) => "krylov_stepper",
        }
    }
}

/// What to measure at each time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recording {
    /// Record the half-system entanglement entropy (costs one Schmidt
    /// decomposition per time).
    pub entropy: Option<Bipartition>,
    pub energy: bool,
}

impl Default for Recording {
    fn default() -> Self {
        Self {
            entropy: None,
            energy: true,
        }
    }
}

/// Observables of one trajectory, one entry per requested time.
#[derive(Debug, Clone)]
pub struct EvolutionRun {
    pub method: &'static str,
    pub times: Vec<f64>,
    /// `m^z(x, t)`, indexed `[t][x]`.
    pub magnetization: Vec<Vec<f64>>,
    pub entropy: Option<Vec<f64>>,
    pub energy: Option<Vec<f64>>,
    pub norm: Vec<f64>,
    /// Krylov sub-steps taken (0 for the spectral method).
    pub substeps: usize,
    pub final_state: StateVector,
}

impl EvolutionRun {
    pub fn max_norm_drift(&self) -> f64 {
        self.norm.iter().fold(0.0f64, |m, n| m.max((n - 1.0).abs()))
    }

    pub fn max_energy_drift(&self) -> Option<f64> {
        let e = self.energy.as_ref()?;
        let e0 = *e.first()?;
        Some(e.iter().fold(0.0f64, |m, x| m.max((x - e0).abs())))
    }
}

/// `t0, t0 + dt, ...` up to and including `t1` (within rounding).
pub fn uniform_times(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || t1 < t0 {
        return Err(Error::InvalidInput(format!(
            "time grid needs dt > 0 and t1 >= t0, got t0 = {t0}, t1 = {t1}, dt = {dt}"
        )));
    }
    let n = ((t1 - t0) / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| t0 + k as f64 * dt).collect())
}

/// `m^z(x) = sum_y <S^z_(x,y)>`.
pub fn rung_magnetization(lattice: &LatticeSpec, basis: &SectorBasis, psi: &[Complex64]) -> Vec<f64> {
    let ny = lattice.ny();
    let mut counts = vec![0.0; lattice.nx()];
    let col = crate::lattice::full_mask(ny);
    for (&mask, a) in basis.configs().iter().zip(psi) {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for (x, c) in counts.iter_mut().enumerate() {
            *c += w * (mask >> (x * ny) & col).count_ones() as f64;
        }
    }
    let total: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    counts
        .into_iter()
        .map(|up| up - 0.5 * ny as f64 * total)
        .collect()
}

/// Rung correlator per column. On the ladder this is
/// `C_ZZ(x) = 4 <S^z_(x,0) S^z_(x,1)>`; for `ny > 2` it is the same
/// quantity averaged over all leg pairs, so a fully aligned column still
/// gives `+1`.
pub fn rung_zz_correlator(lattice: &LatticeSpec, basis: &SectorBasis, psi: &[Complex64]) -> Result<Vec<f64>> {
    let ny = lattice.ny();
    if ny < 2 {
        return Err(Error::NotALadder { ny });
    }
    let pairs = (ny * (ny - 1) / 2) as f64;
    let mut out = vec![0.0; lattice.nx()];
    for (&mask, a) in basis.configs().iter().zip(psi) {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for (x, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for y in 0..ny {
                for y2 in y + 1..ny {
                    let b1 = mask >> lattice.site(x, y) & 1;
                    let b2 = mask >> lattice.site(x, y2) & 1;
                    s += if b1 == b2 { 1.0 } else { -1.0 };
                }
            }
            *o += w * s / pairs;
        }
    }
    Ok(out)
}

struct Recorder<'a> {
    h: &'a Hamiltonian,
    basis: &'a SectorBasis,
    rec: Recording,
    magnetization: Vec<Vec<f64>>,
    entropy: Vec<f64>,
    energy: Vec<f64>,
    norm: Vec<f64>,
}

impl<'a> Recorder<'a> {
    fn new(h: &'a Hamiltonian, basis: &'a SectorBasis, rec: Recording) -> Self {
        Self {
            h,
            basis,
            rec,
            magnetization: Vec::new(),
            entropy: Vec::new(),
            energy: Vec::new(),
            norm: Vec::new(),
        }
    }

    fn sample(&mut self, psi: &[Complex64]) -> Result<()> {
        self.magnetization
            .push(rung_magnetization(self.h.lattice(), self.basis, psi));
        self.norm.push(norm(psi));
        if let Some(part) = self.rec.entropy {
            self.entropy.push(entanglement_entropy(self.basis, psi, part)?);
        }
        if self.rec.energy {
            let hpsi = self.h.apply(self.basis, psi);
            self.energy.push(dot(psi, &hpsi).re);
        }
        Ok(())
    }

    fn finish(self, method: &'static str, times: &[f64], substeps: usize, last: Vec<Complex64>) -> Result<EvolutionRun> {
        let entropy = self.rec.entropy.map(|_| self.entropy);
        let energy = self.rec.energy.then_some(self.energy);
        Ok(EvolutionRun {
            method,
            times: times.to_vec(),
            magnetization: self.magnetization,
            entropy,
            energy,
            norm: self.norm,
            substeps,
            final_state: StateVector::from_amplitudes(self.basis, last)?,
        })
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput(
            "times must be non-negative and non-decreasing".into(),
        ));
    }
    Ok(())
}

/// `|psi(t)> = exp(-iHt)|psi0>` sampled on `times`.
pub fn evolve(
    h: &Hamiltonian,
    basis: &SectorBasis,
    psi0: &StateVector,
    times: &[f64],
    method: &EvolutionMethod,
    rec: Recording,
) -> Result<EvolutionRun> {
    match method {
        EvolutionMethod::Spectral => {
            let report = diagonalize(h, basis, &DiagonalizeOptions::default().with_vectors())?;
            evolve_spectral(h, &report, basis, psi0, times, rec)
        }
        EvolutionMethod::KrylovStepper(opts) => evolve_krylov(h, basis, psi0, times, opts, rec),
    }
}

/// Spectral propagation with a precomputed eigendecomposition.
pub fn evolve_spectral(
    h: &Hamiltonian,
    report: &SpectrumReport,
    basis: &SectorBasis,
    psi0: &StateVector,
    times: &[f64],
    rec: Recording,
) -> Result<EvolutionRun> {
    check_times(times)?;
    psi0.check_basis(basis)?;
    let c = report.block_overlaps(basis, psi0.amplitudes())?;
    let mut recorder = Recorder::new(h, basis, rec);
    let mut last = Vec::new();
    for chunk in times.chunks(SPECTRAL_CHUNK) {
        let states: Vec<Vec<Complex64>> = chunk
            .par_iter()
            .map(|&t| report.synthesize(&c, |e| Some(Complex64::from_polar(1.0, -e * t))))
            .collect::<Result<_>>()?;
        for psi in &states {
            recorder.sample(psi)?;
        }
        last = states.into_iter().last().unwrap_or_default();
    }
    recorder.finish("spectral", times, 0, last)
}

/// One Krylov basis around `v` (unit norm): vectors, `alpha`, `beta`, and
/// the residual norm `beta_{m+1}`.
struct KrylovSpace {
    vectors: Vec<Vec<Complex64>>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    residual: f64,
}

fn krylov_space(h: &Hamiltonian, basis: &SectorBasis, v: &[Complex64], m: usize) -> KrylovSpace {
    let threshold = 1e-12 * h.norm_bound().max(f64::MIN_POSITIVE);
    let m = m.min(basis.len()).max(1);
    let mut vectors: Vec<Vec<Complex64>> = vec![v.to_vec()];
    let mut alphas = Vec::with_capacity(m);
    let mut betas = Vec::with_capacity(m);
    let mut w = vec![Complex64::ZERO; v.len()];
    let mut residual = 0.0;
    for j in 0..m {
        h.apply_into(basis, &vectors[j], &mut w);
        alphas.push(dot(&vectors[j], &w).re);
        for _ in 0..2 {
            for k in &vectors {
                let c = dot(k, &w);
                for (wi, &ki) in w.iter_mut().zip(k) {
                    *wi -= c * ki;
                }
            }
        }
        residual = norm(&w);
        if residual < threshold {
            residual = 0.0;
            break;
        }
        if j + 1 == m {
            break;
        }
        betas.push(residual);
        let inv = 1.0 / residual;
        vectors.push(w.iter().map(|&x| x * inv).collect());
    }
    KrylovSpace {
        vectors,
        alphas,
        betas,
        residual,
    }
}

/// Eigendecomposition of the projected tridiagonal matrix.
struct SmallEig {
    values: Vec<f64>,
    vectors: Mat<f64>,
}

impl SmallEig {
    fn new(alphas: &[f64], betas: &[f64]) -> Result<Self> {
        let n = alphas.len();
        let mut t = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            t[(i, i)] = alphas[i];
            if i + 1 < n {
                t[(i + 1, i)] = betas[i];
                t[(i, i + 1)] = betas[i];
            }
        }
        let evd = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Linalg(format!("tridiagonal eigensolver failed: {e:?}")))?;
        Ok(Self {
            values: evd.S().column_vector().iter().copied().collect(),
            vectors: evd.U().to_owned(),
        })
    }

    /// `exp(-i T tau) e_1`.
    fn propagate(&self, tau: f64) -> Vec<Complex64> {
        let n = self.values.len();
        let weights: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(self.vectors[(0, k)], -self.values[k] * tau))
            .collect();
        (0..n)
            .map(|i| (0..n).map(|k| weights[k] * self.vectors[(i, k)]).sum())
            .collect()
    }
}

/// Krylov-stepper propagation.
pub fn evolve_krylov(
    h: &Hamiltonian,
    basis: &SectorBasis,
    psi0: &StateVector,
    times: &[f64],
    opts: &KrylovStepperOptions,
    rec: Recording,
) -> Result<EvolutionRun> {
    check_times(times)?;
    psi0.check_basis(basis)?;
    if opts.subspace < 2 {
        return Err(Error::InvalidInput("Krylov subspace must hold at least 2 vectors".into()));
    }
    let mut recorder = Recorder::new(h, basis, rec);
    let mut psi = psi0.amplitudes().to_vec();
    let mut t = 0.0;
    let mut substeps = 0;
    let scale = h.norm_bound().max(f64::MIN_POSITIVE);
    let mut tau_guess = 1.0 / scale;
    for &target in times {
        while target - t > 1e-14 * target.max(1.0) {
            let nrm = norm(&psi);
            let v: Vec<Complex64> = psi.iter().map(|&a| a / nrm).collect();
            let space = krylov_space(h, basis, &v, opts.subspace);
            let eig = SmallEig::new(&space.alphas, &space.betas)?;
            let remaining = target - t;
            let mut tau = tau_guess.min(remaining);
            let y = loop {
                let y = eig.propagate(tau);
                let err = space.residual * y.last().map_or(0.0, |c| c.norm());
                if err <= opts.tol {
                    break y;
                }
                tau *= 0.5;
                if tau < opts.min_step {
                    return Err(Error::StepperTolerance {
                        tol: opts.tol,
                        detail: format!(
                            "step fell below {:e} at t = {t} with subspace {} (error estimate {err:e})",
                            opts.min_step, opts.subspace
                        ),
                    });
                }
            };
            let mut next = vec![Complex64::ZERO; psi.len()];
            for (k, c) in space.vectors.iter().zip(&y) {
                let f = c * nrm;
                for (n, &kk) in next.iter_mut().zip(k) {
                    *n += f * kk;
                }
            }
            psi = next;
            t += tau;
            substeps += 1;
            // reuse the accepted step as the next guess, with modest growth
            if tau < remaining {
                tau_guess = tau * 1.25;
            } else {
                tau_guess = tau_guess.max(tau);
            }
        }
        t = target;
        recorder.sample(&psi)?;
    }
    recorder.finish("krylov_stepper", times, substeps, psi)
}

/// Trapezoidal average of the recorded observables over `[t_min, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowAverage {
    pub t_min: f64,
    pub t_max: f64,
    pub magnetization: Vec<f64>,
    pub entropy: Option<f64>,
    pub samples: usize,
}

pub fn window_average(run: &EvolutionRun, t_min: f64, t_max: f64) -> Result<WindowAverage> {
    if !(t_max > t_min) {
        return Err(Error::InvalidInput(format!(
            "window needs t_max > t_min, got [{t_min}, {t_max}]"
        )));
    }
    let idx: Vec<usize> = (0..run.times.len())
        .filter(|&k| run.times[k] >= t_min - 1e-12 && run.times[k] <= t_max + 1e-12)
        .collect();
    if idx.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "window [{t_min}, {t_max}] holds {} samples, need at least 2",
            idx.len()
        )));
    }
    let trap = |f: &dyn Fn(usize) -> f64| -> f64 {
        let mut acc = 0.0;
        for w in idx.windows(2) {
            let (a, b) = (w[0], w[1]);
            acc += 0.5 * (f(a) + f(b)) * (run.times[b] - run.times[a]);
        }
        acc / (run.times[idx[idx.len() - 1]] - run.times[idx[0]])
    };
    let nx = run.magnetization.first().map_or(0, Vec::len);
    let magnetization = (0..nx)
        .map(|x| trap(&|k| run.magnetization[k][x]))
        .collect();
    let entropy = run.entropy.as_ref().map(|s| trap(&|k| s[k]));
    Ok(WindowAverage {
        t_min: run.times[idx[0]],
        t_max: run.times[idx[idx.len() - 1]],
        magnetization,
        entropy,
        samples: idx.len(),
    })
}

/// Per-site pattern with every rung uniformly up or down.
pub fn rung_pattern(ny: usize, rungs: &[bool]) -> Vec<Spin> {
    rungs
        .iter()
        .flat_map(|&up| std::iter::repeat(if up { Spin::Up } else { Spin::Down }).take(ny))
        .collect()
}

/// Left half of the rungs up, right half down.
pub fn domain_wall_pattern(nx: usize, ny: usize) -> Vec<Spin> {
    let rungs: Vec<bool> = (0..nx).map(|x| x < nx / 2).collect();
    rung_pattern(ny, &rungs)
}

/// Rung-ferromagnetic patterns with `nx/2` up rungs whose first up domain
/// starts at `x = 0`, has length exactly `longest`, and is at least as long
/// as every other up domain.
pub fn sweep_patterns(nx: usize, longest: usize, cap: usize) -> Result<Vec<Vec<bool>>> {
    if nx % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "S^z = 0 rung patterns need even nx, got {nx}"
        )));
    }
    let up = nx / 2;
    if longest == 0 || longest > up {
        return Err(Error::InvalidInput(format!(
            "longest domain must lie in 1..={up}, got {longest}"
        )));
    }
    let mut out = Vec::new();
    for bits in 0u64..(1u64 << nx) {
        if bits.count_ones() as usize != up {
            continue;
        }
        let rungs: Vec<bool> = (0..nx).map(|x| bits >> x & 1 == 1).collect();
        let mut domains = Vec::new();
        let mut x = 0;
        while x < nx {
            if rungs[x] {
                let s = x;
                while x < nx && rungs[x] {
                    x += 1;
                }
                domains.push((s, x - s));
            } else {
                x += 1;
            }
        }
        let ok = domains.first() == Some(&(0, longest)) && domains.iter().all(|&(_, l)| l <= longest);
        if ok {
            if out.len() == cap {
                return Err(Error::PatternCap { cap });
            }
            out.push(rungs);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub longest: usize,
    pub patterns: Vec<Vec<bool>>,
    /// Long-time `m^z(x = 0)` of each pattern.
    pub edge_values: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over patterns.
    pub std: f64,
}

/// Average long-time edge magnetization over all sweep patterns, using the
/// infinite-time limit from the spectral decomposition.
pub fn domain_sweep(
    nx: usize,
    ny: usize,
    longest: usize,
    couplings: &Couplings,
    pattern_cap: usize,
) -> Result<SweepResult> {
    let lattice = LatticeSpec::new(nx, ny, couplings.clone())?;
    let basis = SectorBasis::zero_magnetization(lattice.n_sites())?;
    let h = Hamiltonian::new(&lattice);
    let report = diagonalize(&h, &basis, &DiagonalizeOptions::default().with_vectors())?;
    domain_sweep_with(&lattice, &report, &basis, longest, pattern_cap)
}

/// [`domain_sweep`] reusing a diagonalization of the `S^z = 0` sector.
pub fn domain_sweep_with(
    lattice: &LatticeSpec,
    report: &SpectrumReport,
    basis: &SectorBasis,
    longest: usize,
    pattern_cap: usize,
) -> Result<SweepResult> {
    let patterns = sweep_patterns(lattice.nx(), longest, pattern_cap)?;
    let ny = lattice.ny();
    let edge_values = patterns
        .iter()
        .map(|rungs| {
            let psi = product_state(basis, pattern_mask(&rung_pattern(ny, rungs))?)?;
            let p = zero_mode_projection(report, basis, &psi, DEFAULT_DEGENERACY_TOL)?;
            Ok((0..ny).map(|y| p.sz_average[lattice.site(0, y)]).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize_sweep(longest, patterns, edge_values))
}

/// [`domain_sweep`] with each pattern evolved by the Krylov stepper and
/// averaged over a finite window, for sectors beyond the dense cap.
pub fn domain_sweep_window(
    h: &Hamiltonian,
    basis: &SectorBasis,
    longest: usize,
    pattern_cap: usize,
    window: (f64, f64, f64),
    opts: &KrylovStepperOptions,
) -> Result<SweepResult> {
    let lattice = h.lattice();
    let patterns = sweep_patterns(lattice.nx(), longest, pattern_cap)?;
    let (t_min, t_max, dt) = window;
    let times = uniform_times(t_min, t_max, dt)?;
    let rec = Recording {
        entropy: None,
        energy: false,
    };
    let edge_values = patterns
        .iter()
        .map(|rungs| {
            let psi = product_state(basis, pattern_mask(&rung_pattern(lattice.ny(), rungs))?)?;
            let run = evolve_krylov(h, basis, &psi, &times, opts, rec)?;
            Ok(window_average(&run, t_min, t_max)?.magnetization[0])
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize_sweep(longest, patterns, edge_values))
}

fn summarize_sweep(longest: usize, patterns: Vec<Vec<bool>>, edge_values: Vec<f64>) -> SweepResult {
    let n = edge_values.len() as f64;
    let mean = edge_values.iter().sum::<f64>() / n;
    let std = (edge_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    SweepResult {
        longest,
        patterns,
        edge_values,
        mean,
        std,
    }
}
