//! Lanczos tridiagonalization and the zero mode of the resulting chain.
//!
//! Starting from `|K_1>`, the recursion
//!
//! ```text
//! beta_{j+1} |K_{j+1}> = H |K_j> - alpha_j |K_j> - beta_j |K_{j-1}>
//! ```
//!
//! maps `H` onto a tight-binding chain with on-site energies `alpha_j` and
//! hoppings `beta_j`. Indices are one-based throughout, so `betas[0]` is
//! `beta_2`. When `H` anticommutes with a diagonal sign operator and the
//! start is one of its eigenstates, every `alpha_j` vanishes and the chain
//! has a zero mode supported on odd sites only.

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::operator::{dot, norm, Amplitude, Hamiltonian};

/// Default budget for stored Krylov vectors: 2 GiB.
pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;
/// Relative breakdown threshold: stop when `beta < 1e-12 * ||H||`.
pub const DEFAULT_BREAKDOWN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orthogonalization {
    /// Store every Krylov vector and reorthogonalize against all of them
    /// twice (classical Gram-Schmidt, two passes) at each step.
    Full,
    /// Plain three-term recurrence keeping three vectors; orthogonality is
    /// lost gradually.
    None,
}

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Number of Krylov vectors `n`; yields `alpha_1..alpha_n` and `beta_2..beta_n`.
    pub max_steps: usize,
    pub orthogonalization: Orthogonalization,
    /// Bytes allowed for stored Krylov vectors in [`Orthogonalization::Full`].
    pub memory_budget: usize,
    pub breakdown: f64,
    /// Return the Krylov vectors (requires full orthogonalization).
    pub keep_vectors: bool,
}

impl LanczosOptions {
    pub fn new(max_steps: usize) -> Self {
        Self {
            max_steps,
            orthogonalization: Orthogonalization::Full,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            breakdown: DEFAULT_BREAKDOWN,
            keep_vectors: false,
        }
    }

    pub fn storage_free(mut self) -> Self {
        self.orthogonalization = Orthogonalization::None;
        self
    }

    pub fn keep_vectors(mut self) -> Self {
        self.keep_vectors = true;
        self
    }
}

/// Lanczos coefficients of one run.
#[derive(Debug, Clone)]
pub struct TridiagonalData<T = f64> {
    /// `alpha_1..alpha_n`.
    pub alphas: Vec<f64>,
    /// `beta_2..beta_n`.
    pub betas: Vec<f64>,
    pub n_steps: usize,
    /// The recursion stopped early on an invariant subspace.
    pub breakdown: bool,
    pub reorthogonalized: bool,
    /// The operator-norm bound used for the thresholds.
    pub norm_estimate: f64,
    pub vectors: Option<Vec<Vec<T>>>,
}

impl<T> TridiagonalData<T> {
    /// `beta_j` for `2 <= j <= n`.
    pub fn beta(&self, j: usize) -> f64 {
        self.betas[j - 2]
    }

    /// `(j, beta_j^2)` for every retained `j`.
    pub fn beta_sq(&self) -> Vec<(usize, f64)> {
        self.betas.iter().enumerate().map(|(i, b)| (i + 2, b * b)).collect()
    }

    pub fn max_abs_alpha(&self) -> f64 {
        self.alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }
}

fn axpy<T: Amplitude>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn gram_schmidt_pass<T: Amplitude>(w: &mut [T], basis: &[Vec<T>]) {
    let coeffs: Vec<T> = basis.iter().map(|k| dot(k, w)).collect();
    for (k, c) in basis.iter().zip(coeffs) {
        axpy(w, -c, k);
    }
}

/// Run the Lanczos recursion from a unit-norm `start`.
pub fn lanczos_tridiagonalize<T: Amplitude>(
    h: &Hamiltonian,
    basis: &SectorBasis,
    start: &[T],
    opts: &LanczosOptions,
) -> Result<TridiagonalData<T>> {
    let dim = basis.len();
    if start.len() != dim {
        return Err(Error::InvalidInput(format!(
            "start vector has {} entries, sector has {dim}",
            start.len()
        )));
    }
    if opts.max_steps == 0 || opts.max_steps > dim {
        return Err(Error::InvalidInput(format!(
            "max_steps must lie in 1..={dim}, got {}",
            opts.max_steps
        )));
    }
    let n0 = norm(start);
    if (n0 - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("start vector has norm {n0}, expected 1")));
    }
    let full = opts.orthogonalization == Orthogonalization::Full;
    if opts.keep_vectors && !full {
        return Err(Error::InvalidInput(
            "Krylov vectors are only kept with full orthogonalization".into(),
        ));
    }
    if full {
        let bytes = opts
            .max_steps
            .saturating_mul(dim)
            .saturating_mul(std::mem::size_of::<T>());
        if bytes > opts.memory_budget {
            return Err(Error::MemoryBudget {
                steps: opts.max_steps,
                dim,
                bytes,
                budget: opts.memory_budget,
            });
        }
    }
    let norm_estimate = h.norm_bound();
    let threshold = opts.breakdown * norm_estimate.max(f64::MIN_POSITIVE);

    let mut alphas = Vec::with_capacity(opts.max_steps);
    let mut betas = Vec::with_capacity(opts.max_steps);
    let mut stored: Vec<Vec<T>> = Vec::new();
    let mut prev: Vec<T> = Vec::new();
    let mut cur: Vec<T> = start.to_vec();
    let mut w = vec![T::ZERO; dim];
    let mut breakdown = false;
    let mut beta = 0.0;

    for j in 1..=opts.max_steps {
        h.apply_into(basis, &cur, &mut w);
        let alpha = dot(&cur, &w).real();
        alphas.push(alpha);
        if j == opts.max_steps {
            if full {
                stored.push(cur);
            }
            break;
        }
        axpy(&mut w, T::from_real(-alpha), &cur);
        if j > 1 {
            let p = if full { &stored[j - 2] } else { &prev };
            axpy(&mut w, T::from_real(-beta), p);
        }
        if full {
            stored.push(std::mem::take(&mut cur));
            gram_schmidt_pass(&mut w, &stored);
            gram_schmidt_pass(&mut w, &stored);
        }
        beta = norm(&w);
        if beta < threshold {
            breakdown = true;
            log::info!("Lanczos breakdown at step {j}: beta = {beta:e}");
            break;
        }
        betas.push(beta);
        let inv = 1.0 / beta;
        let next: Vec<T> = w.iter().map(|&x| x * inv).collect();
        if full {
            cur = next;
        } else {
            prev = std::mem::replace(&mut cur, next);
        }
        log::trace!("Lanczos step {j}: alpha = {alpha:e}, beta = {beta}");
    }

    Ok(TridiagonalData {
        n_steps: alphas.len(),
        alphas,
        betas,
        breakdown,
        reorthogonalized: full,
        norm_estimate,
        vectors: if opts.keep_vectors { Some(stored) } else { None },
    })
}

/// Zero-energy eigenvector of the Lanczos chain, `c_j` for `j = 1..n`.
#[derive(Debug, Clone)]
pub struct ChainZeroMode {
    pub coefficients: Vec<f64>,
    /// A vanishing `beta` cut the recurrence short.
    pub truncated: bool,
}

impl ChainZeroMode {
    /// `c_j` (one-based).
    pub fn c(&self, j: usize) -> f64 {
        self.coefficients[j - 1]
    }

    /// `(j, |c_j|^2)` over the odd indices.
    pub fn odd_weights(&self) -> Vec<(usize, f64)> {
        self.coefficients
            .iter()
            .enumerate()
            .step_by(2)
            .map(|(i, c)| (i + 1, c * c))
            .collect()
    }
}

/// `c_1 = 1`, `c_{2n+1} = -c_{2n-1} beta_{2n} / beta_{2n+1}`, even `c_j = 0`,
/// normalized over the computed range. Requires `|alpha_j| <= 1e-10 ||H||`.
pub fn chain_zero_mode<T>(tri: &TridiagonalData<T>) -> Result<ChainZeroMode> {
    let tol = 1e-10 * tri.norm_estimate;
    if let Some((i, &a)) = tri.alphas.iter().enumerate().find(|(_, a)| a.abs() > tol) {
        return Err(Error::NonChiralChain { step: i + 1, value: a });
    }
    chain_zero_mode_from_betas(&tri.betas)
}

/// As [`chain_zero_mode`], from `beta_2..beta_n` alone.
pub fn chain_zero_mode_from_betas(betas: &[f64]) -> Result<ChainZeroMode> {
    let n = betas.len() + 1;
    let beta = |j: usize| betas[j - 2];
    let mut c = vec![0.0; n];
    c[0] = 1.0;
    let mut truncated = false;
    let mut j = 3;
    while j <= n {
        let (b_even, b_odd) = (beta(j - 1), beta(j));
        if b_odd == 0.0 || b_even == 0.0 {
            truncated = true;
            c.truncate(j - 1);
            break;
        }
        c[j - 1] = -c[j - 3] * b_even / b_odd;
        j += 2;
    }
    let s = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    c.iter_mut().for_each(|x| *x /= s);
    Ok(ChainZeroMode {
        coefficients: c,
        truncated,
    })
}

/// Inclusive range of Lanczos indices `j` used by a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitWindow {
    pub j_min: usize,
    pub j_max: usize,
}

impl FitWindow {
    pub fn new(j_min: usize, j_max: usize) -> Self {
        Self { j_min, j_max }
    }

    pub fn contains(&self, j: usize) -> bool {
        j >= self.j_min && j <= self.j_max
    }
}

/// `beta_j^2 = a j + b_odd` (odd `j`), `a j + b_even` (even `j`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleLinearFit {
    pub a: f64,
    pub b_odd: f64,
    pub b_even: f64,
    /// `(1 + (b_odd - b_even) / a) / 2`.
    pub gamma: f64,
    pub window: FitWindow,
}

/// Shared-slope least squares on `(j, beta_j^2)` points, separate
/// intercepts for odd and even `j`.
pub fn double_linear_fit(points: &[(usize, f64)], window: FitWindow) -> Result<DoubleLinearFit> {
    let pick = |parity: usize| -> Vec<(f64, f64)> {
        points
            .iter()
            .filter(|(j, _)| window.contains(*j) && j % 2 == parity)
            .map(|&(j, y)| (j as f64, y))
            .collect()
    };
    let odd = pick(1);
    let even = pick(0);
    if odd.len() < 6 || even.len() < 6 {
        return Err(Error::FitWindow(format!(
            "window {}..={} holds {} odd and {} even points, need 6 of each",
            window.j_min,
            window.j_max,
            odd.len(),
            even.len()
        )));
    }
    let mean = |v: &[(f64, f64)]| {
        let n = v.len() as f64;
        (
            v.iter().map(|p| p.0).sum::<f64>() / n,
            v.iter().map(|p| p.1).sum::<f64>() / n,
        )
    };
    let (jo, yo) = mean(&odd);
    let (je, ye) = mean(&even);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (set, (jm, ym)) in [(&odd, (jo, yo)), (&even, (je, ye))] {
        for &(j, y) in set.iter() {
            sxy += (j - jm) * (y - ym);
            sxx += (j - jm) * (j - jm);
        }
    }
    let a = sxy / sxx;
    let b_odd = yo - a * jo;
    let b_even = ye - a * je;
    Ok(DoubleLinearFit {
        a,
        b_odd,
        b_even,
        gamma: (1.0 + (b_odd - b_even) / a) / 2.0,
        window,
    })
}

/// Decay exponent `p` of `|c_j|^2 ~ j^(-p)`: minus the least-squares slope
/// of `ln |c_j|^2` against `ln j` over odd `j` in the window.
pub fn power_law_fit(coefficients: &[f64], window: FitWindow) -> Result<f64> {
    let pts: Vec<(f64, f64)> = coefficients
        .iter()
        .enumerate()
        .map(|(i, &c)| (i + 1, c))
        .filter(|(j, _)| j % 2 == 1 && window.contains(*j))
        .map(|(j, c)| {
            if c == 0.0 {
                Err(Error::FitWindow(format!("c_{j} vanishes inside the window")))
            } else {
                Ok(((j as f64).ln(), (c * c).ln()))
            }
        })
        .collect::<Result<_>>()?;
    if pts.len() < 2 {
        return Err(Error::FitWindow(format!(
            "window {}..={} holds {} odd coefficients, need at least 2",
            window.j_min,
            window.j_max,
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

/// First Lanczos index of the default fit window.
pub const DEFAULT_FIT_START: usize = 10;
/// Relative departure from the linear `beta^2` trend that ends the window.
pub const DEFAULT_TREND_TOL: f64 = 0.2;

/// `[DEFAULT_FIT_START, end of the linear beta^2 regime]`, limited by the
/// number of computed steps.
pub fn default_fit_window<T: Amplitude>(tri: &TridiagonalData<T>) -> FitWindow {
    let end = linear_regime_end(&tri.beta_sq(), DEFAULT_FIT_START, DEFAULT_TREND_TOL);
    FitWindow::new(DEFAULT_FIT_START, end.min(tri.n_steps))
}

/// Last `j` before the `beta_j^2` staircase bends away from its linear
/// trend by more than `rel_tol`, starting the comparison at `j_start`.
///
/// The trend is a shared-slope line through the points `j_start..=j`
/// fitted incrementally; a point farther than `rel_tol * trend` from the
/// extrapolation ends the window. Returns the last accepted `j`.
pub fn linear_regime_end(points: &[(usize, f64)], j_start: usize, rel_tol: f64) -> usize {
    let mut last = j_start;
    let mut accepted: Vec<(usize, f64)> = Vec::new();
    for &(j, y) in points.iter().filter(|(j, _)| *j >= j_start) {
        let odd = accepted.iter().filter(|(k, _)| k % 2 == 1).count();
        let even = accepted.len() - odd;
        if odd >= 2 && even >= 2 {
            let fit = fit_shared_slope(&accepted);
            let b = if j % 2 == 1 { fit.1 } else { fit.2 };
            let pred = fit.0 * j as f64 + b;
            if (y - pred).abs() > rel_tol * pred.abs() {
                break;
            }
        }
        accepted.push((j, y));
        last = j;
    }
    last
}

fn fit_shared_slope(points: &[(usize, f64)]) -> (f64, f64, f64) {
    let mut sums = [[0.0f64; 3]; 2];
    for &(j, y) in points {
        let p = j % 2;
        sums[p][0] += 1.0;
        sums[p][1] += j as f64;
        sums[p][2] += y;
    }
    let means: Vec<(f64, f64)> = sums.iter().map(|s| (s[1] / s[0], s[2] / s[0])).collect();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(j, y) in points {
        let (jm, ym) = means[j % 2];
        sxy += (j as f64 - jm) * (y - ym);
        sxx += (j as f64 - jm).powi(2);
    }
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (a, means[1].1 - a * means[1].0, means[0].1 - a * means[0].0)
}
