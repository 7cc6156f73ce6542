//! Free fermions on the same lattice, as a contrast oracle.
//!
//! A single chain of XX spins is a free-fermion model after a
//! Jordan-Wigner transformation; on coupled chains it is not. The
//! tight-binding model here keeps the hopping amplitudes `J/2` of the
//! spin model and evolves Gaussian states through their correlation
//! matrix `C_ij = <f_i^dag f_j>`.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{Couplings, LatticeSpec};

/// Tight-binding Hamiltonian with open boundaries and its eigenbasis.
#[derive(Debug, Clone)]
pub struct SingleParticleSystem {
    nx: usize,
    ny: usize,
    h: Mat<f64>,
    energies: Vec<f64>,
    modes: Mat<f64>,
}

impl SingleParticleSystem {
    pub fn new(nx: usize, ny: usize, j_par: f64, j_perp: f64) -> Result<Self> {
        let lattice = LatticeSpec::new(nx, ny, Couplings::xx(j_par, j_perp))?;
        let n = lattice.n_sites();
        let mut h = Mat::<f64>::zeros(n, n);
        for (bonds, j) in [(lattice.parallel_bonds(), j_par), (lattice.perp_bonds(), j_perp)] {
            for b in bonds {
                h[(b.site_a, b.site_b)] += 0.5 * j;
                h[(b.site_b, b.site_a)] += 0.5 * j;
            }
        }
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Linalg(format!("hopping eigensolver failed: {e:?}")))?;
        let energies = evd.S().column_vector().iter().copied().collect();
        let modes = evd.U().to_owned();
        Ok(Self {
            nx,
            ny,
            h,
            energies,
            modes,
        })
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

    pub fn hopping(&self) -> &Mat<f64> {
        &self.h
    }

    /// Single-particle energies, ascending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `U = exp(-i h t)`.
    pub fn propagator(&self, t: f64) -> Mat<Complex64> {
        let n = self.n_sites();
        let phases: Vec<Complex64> = self
            .energies
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * t))
            .collect();
        Mat::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| phases[k] * (self.modes[(i, k)] * self.modes[(j, k)]))
                .sum()
        })
    }
}

/// Eigenvalues of the hopping matrix, ascending.
pub fn dispersion_spectrum(nx: usize, ny: usize, j_par: f64, j_perp: f64) -> Result<Vec<f64>> {
    Ok(SingleParticleSystem::new(nx, ny, j_par, j_perp)?.energies)
}

/// `J_par cos(kx) + J_perp cos(ky)` on the open-boundary grid
/// `k = n pi / (L + 1)`, ascending.
pub fn dispersion_formula(nx: usize, ny: usize, j_par: f64, j_perp: f64) -> Vec<f64> {
    let k = |n: usize, l: usize| n as f64 * std::f64::consts::PI / (l as f64 + 1.0);
    let mut out: Vec<f64> = (1..=nx)
        .flat_map(|a| (1..=ny).map(move |b| j_par * k(a, nx).cos() + j_perp * k(b, ny).cos()))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// `C_ij = <f_i^dag f_j>` of a Gaussian state.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub c: Mat<Complex64>,
}

impl CorrelationMatrix {
    pub fn n_sites(&self) -> usize {
        self.c.nrows()
    }

    /// Site occupations `n_i = C_ii`.
    pub fn densities(&self) -> Vec<f64> {
        (0..self.n_sites()).map(|i| self.c[(i, i)].re).collect()
    }

    pub fn particle_number(&self) -> f64 {
        self.densities().iter().sum()
    }

    /// Spin language, particle = up: `<S^z_i> = n_i - 1/2`.
    pub fn spin_profile(&self) -> Vec<f64> {
        self.densities().into_iter().map(|n| n - 0.5).collect()
    }

    /// `sum_y <S^z_(x,y)>` per column.
    pub fn rung_magnetization(&self, ny: usize) -> Vec<f64> {
        self.spin_profile()
            .chunks(ny)
            .map(|c| c.iter().sum())
            .collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.n_sites();
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                err = err.max((self.c[(i, j)] - self.c[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// Eigenvalues, ascending; a valid Gaussian state keeps them in `[0, 1]`.
    pub fn occupations(&self) -> Result<Vec<f64>> {
        let v = self
            .c
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Linalg(format!("correlation eigensolver failed: {e:?}")))?;
        Ok(v)
    }
}

/// Occupied product state filling every site of the listed columns.
pub fn column_filled_initial(nx: usize, ny: usize, columns: &[usize]) -> Result<CorrelationMatrix> {
    let n = nx * ny;
    let mut c = Mat::<Complex64>::zeros(n, n);
    for &x in columns {
        if x >= nx {
            return Err(Error::InvalidInput(format!(
                "column {x} outside the lattice (nx = {nx})"
            )));
        }
        for y in 0..ny {
            let i = x * ny + y;
            c[(i, i)] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(CorrelationMatrix { c })
}

/// Product state with the given sites occupied.
pub fn occupied_initial(n_sites: usize, sites: &[usize]) -> Result<CorrelationMatrix> {
    let mut c = Mat::<Complex64>::zeros(n_sites, n_sites);
    for &i in sites {
        if i >= n_sites {
            return Err(Error::InvalidInput(format!(
                "site {i} outside the lattice ({n_sites} sites)"
            )));
        }
        c[(i, i)] = Complex64::new(1.0, 0.0);
    }
    Ok(CorrelationMatrix { c })
}

/// `C(t) = U^dag C0 U`. The hopping matrix is real symmetric, so `U` is
/// symmetric and this equals `conj(U) C0 U^T`, the Heisenberg evolution
/// of `<f_i^dag f_j>`.
pub fn correlation_evolve(
    system: &SingleParticleSystem,
    c0: &CorrelationMatrix,
    t: f64,
) -> Result<CorrelationMatrix> {
    if c0.n_sites() != system.n_sites() {
        return Err(Error::InvalidInput(format!(
            "correlation matrix on {} sites, system has {}",
            c0.n_sites(),
            system.n_sites()
        )));
    }
    let u = system.propagator(t);
    let c = u.adjoint() * &c0.c * &u;
    Ok(CorrelationMatrix { c })
}
