//! Acceptance suite: one line per criterion.
//!
//! `cargo test --release -p spinkrylov --test acceptance [-- 1 4 7]` runs
//! all criteria or the listed ones. Failures are reported but only turn
//! into a nonzero exit status when `SPINKRYLOV_ACCEPTANCE_STRICT` is set.

use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinkrylov::basis::SectorBasis;
use spinkrylov::dynamics::{
    domain_wall_pattern, evolve, evolve_krylov, rung_magnetization, evolve_spectral, uniform_times, window_average, EvolutionMethod,
    KrylovStepperOptions, Recording,
};
use spinkrylov::entanglement::schmidt_spectrum;
use spinkrylov::fermion::{
    column_filled_initial, correlation_evolve, dispersion_formula, dispersion_spectrum, SingleParticleSystem,
};
use spinkrylov::krylov::{
    chain_zero_mode, default_fit_window, lanczos_tridiagonalize, power_law_fit, LanczosOptions,
};
use spinkrylov::lattice::{Couplings, LatticeSpec};
use spinkrylov::operator::{
    apply_hamiltonian, apply_symmetry, build_product_state, norm, product_state, Hamiltonian, StateVector, Symmetry,
};
use spinkrylov::scars::{ra_states, rf_schmidt, rf_state};
use spinkrylov::spectral::{diagonalize, zero_mode_count, zero_mode_projection, DiagonalizeOptions, DEFAULT_DEGENERACY_TOL};
use spinkrylov::witten::{brute_force_trace, tr_chiral_formula, tr_sublattice_formula, TraceOperator};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn xx(nx: usize, ny: usize, jq: f64) -> (LatticeSpec, Hamiltonian) {
    let lattice = LatticeSpec::new(nx, ny, Couplings::xx(1.0, jq)).unwrap();
    let h = Hamiltonian::new(&lattice);
    (lattice, h)
}

fn zero_count(h: &Hamiltonian, n_down: usize) -> usize {
    let basis = SectorBasis::new(h.n_sites(), n_down).unwrap();
    let report = diagonalize(h, &basis, &DiagonalizeOptions::default()).unwrap();
    zero_mode_count(&report).count
}

fn zero_mode_counts() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (nx, ny, expect) in [(8, 2, 294), (4, 4, 306), (6, 3, 0)] {
        let (_, h) = xx(nx, ny, 1.0);
        let c = zero_count(&h, nx * ny / 2);
        pass &= c == expect;
        parts.push(format!("{nx}x{ny}: {c} (want {expect})"));
    }
    outcome(pass, parts.join(", "))
}

fn witten_identities() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for nx in 1..=16 {
        for ny in 1..=16 / nx {
            let n = nx * ny;
            for n_down in 0..=n {
                let s = brute_force_trace(TraceOperator::Sublattice, nx, ny, n_down).unwrap();
                if s != tr_sublattice_formula(nx, ny, n_down) {
                    bad.push(format!("S {nx}x{ny}/{n_down}"));
                }
                let c = brute_force_trace(TraceOperator::Chiral, nx, ny, n_down).unwrap();
                let expect = if 2 * n_down == n { tr_chiral_formula(nx, ny) } else { BigInt::zero() };
                if c != expect {
                    bad.push(format!("C {nx}x{ny}/{n_down}"));
                }
                checked += 2;
            }
        }
    }
    let values = [
        (tr_sublattice_formula(8, 2, 8), 70),
        (tr_chiral_formula(8, 2), 256),
        (tr_chiral_formula(3, 2), 0),
        (tr_chiral_formula(4, 4), 256),
    ];
    let values_ok = values.iter().all(|(a, b)| *a == BigInt::from(*b));
    outcome(
        bad.is_empty() && values_ok,
        format!(
            "{checked} traces, {} mismatches; trS(8,2,8)={} trC(8,2)={} trC(3,2)={} trC(4,4)={}",
            bad.len(),
            values[0].0,
            values[1].0,
            values[2].0,
            values[3].0
        ),
    )
}

fn bound_chain() -> Outcome {
    let mut sectors = 0;
    let mut bad = Vec::new();
    let lattices = [(2, 2), (3, 2), (4, 2), (5, 2), (6, 2), (3, 3), (4, 3), (2, 4), (2, 6), (7, 2), (8, 2)];
    for (nx, ny) in lattices {
        let (_, h) = xx(nx, ny, 1.0);
        let n = nx * ny;
        for n_down in 0..=n {
            // the big 8x2 sectors are covered at S^z = 0 and its neighbours
            if n == 16 && n_down.abs_diff(8) > 1 {
                continue;
            }
            let count = BigInt::from(zero_count(&h, n_down));
            let mut ok = count >= tr_sublattice_formula(nx, ny, n_down).abs();
            if 2 * n_down == n && nx % 2 == 0 && ny % 2 == 0 {
                ok &= count >= BigInt::from(1u64 << (n / 2));
            }
            if !ok {
                bad.push(format!("{nx}x{ny}/{n_down}"));
            }
            sectors += 1;
        }
    }
    outcome(bad.is_empty(), format!("{sectors} sectors, violations {bad:?}"))
}

fn exact_lanczos_law() -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (nx, ny) in [(12, 2), (14, 1)] {
        let (_, h) = xx(nx, ny, 0.0);
        let basis = SectorBasis::zero_magnetization(nx * ny).unwrap();
        let start = build_product_state(&basis, &domain_wall_pattern(nx, ny)).unwrap().to_real(0.0).unwrap();
        let j_max = nx / 2 + 1;
        let tri = lanczos_tridiagonalize(&h, &basis, &start, &LanczosOptions::new(j_max)).unwrap();
        for (j, b2) in tri.beta_sq() {
            let law = (ny * (j - 1)) as f64;
            worst = worst.max((4.0 * b2 - law).abs() / law);
        }
        parts.push(format!("{nx}x{ny} j<={j_max}"));
    }
    outcome(worst <= 1e-8, format!("{}, max rel error {worst:.2e}", parts.join(", ")))
}

fn vanishing_alpha() -> Outcome {
    let (lattice, h) = xx(8, 2, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n_down = rng.gen_range(1..lattice.n_sites());
        let basis = SectorBasis::new(lattice.n_sites(), n_down).unwrap();
        let k = rng.gen_range(0..basis.len());
        let start = product_state(&basis, basis.config(k).0).unwrap().to_real(0.0).unwrap();
        let steps = 80.min(basis.len() - 1);
        let tri = lanczos_tridiagonalize(&h, &basis, &start, &LanczosOptions::new(steps)).unwrap();
        worst = worst.max(tri.max_abs_alpha() / h.norm_bound());
    }
    outcome(worst <= 1e-10, format!("10 random starts on 8x2, max |alpha|/||H|| = {worst:.2e}"))
}

fn localization_crossover() -> Outcome {
    let exponent = |jq: f64| {
        let (_, h) = xx(12, 2, jq);
        let basis = SectorBasis::zero_magnetization(24).unwrap();
        let start = build_product_state(&basis, &domain_wall_pattern(12, 2)).unwrap().to_real(0.0).unwrap();
        let tri = lanczos_tridiagonalize(&h, &basis, &start, &LanczosOptions::new(64)).unwrap();
        let z = chain_zero_mode(&tri).unwrap();
        let w = default_fit_window(&tri);
        (power_law_fit(&z.coefficients, w).unwrap(), w)
    };
    let (weak, ww) = exponent(0.25);
    let (strong, ws) = exponent(1.0);
    outcome(
        weak < 1.0 && strong > 1.0 && (strong - 1.63).abs() <= 0.15,
        format!(
            "12x2, 64 steps: p(0.25) = {weak:.3} on j in [{}, {}], p(1) = {strong:.3} on j in [{}, {}]",
            ww.j_min, ww.j_max, ws.j_min, ws.j_max
        ),
    )
}

fn residual(h: &Hamiltonian, basis: &SectorBasis, psi: &[Complex64], e: f64) -> f64 {
    let hp = h.apply(basis, psi);
    norm(&hp.iter().zip(psi).map(|(a, b)| a - b * e).collect::<Vec<_>>())
}

fn scar_exactness() -> Outcome {
    let mut xx_res = 0.0f64;
    for nx in 1..=10 {
        let (_, h) = xx(nx, 2, 1.0);
        for n in 0..=nx {
            let rf = rf_state(nx, n).unwrap();
            xx_res = xx_res.max(residual(&h, &rf.basis, rf.amplitudes(), 0.0));
        }
    }
    let (jq, dq) = (1.0, 0.7);
    let mut zz_res = 0.0f64;
    for nx in [2, 4, 6, 8] {
        let lattice = LatticeSpec::new(nx, 2, Couplings::xx(1.0, jq).with_anisotropy(0.0, dq)).unwrap();
        let h = Hamiltonian::new(&lattice);
        let e = nx as f64 * dq * jq / 4.0;
        for n in 0..=nx {
            let rf = rf_state(nx, n).unwrap();
            zz_res = zz_res.max(residual(&h, &rf.basis, rf.amplitudes(), e));
        }
        let (even, odd) = ra_states(nx).unwrap();
        for ra in [even, odd] {
            zz_res = zz_res.max(residual(&h, &ra.basis, ra.amplitudes(), -e));
        }
    }
    let mut h2_res = 0.0f64;
    let lattice = LatticeSpec::new(8, 2, Couplings::xx(1.0, 1.0).with_shell(2, 0.1)).unwrap();
    let h2 = Hamiltonian::new(&lattice);
    for n in 0..=8 {
        let rf = rf_state(8, n).unwrap();
        h2_res = h2_res.max(residual(&h2, &rf.basis, rf.amplitudes(), 0.0));
    }
    let lattice = LatticeSpec::new(8, 2, Couplings::xx(1.0, 1.0).with_anisotropy(0.3, 0.7)).unwrap();
    let hd = Hamiltonian::new(&lattice);
    let rf = rf_state(8, 4).unwrap();
    let psi = rf.amplitudes();
    let e: f64 = psi.iter().zip(hd.apply(&rf.basis, psi)).map(|(a, b)| (a.conj() * b).re).sum();
    let leg_res = residual(&hd, &rf.basis, psi, e);
    outcome(
        xx_res <= 1e-12 && zz_res <= 1e-12 && h2_res <= 1e-12 && leg_res > 1e-6,
        format!("XX {xx_res:.1e}, rung ZZ {zz_res:.1e}, with H2 {h2_res:.1e}, with leg ZZ {leg_res:.3} (must be > 0)"),
    )
}

fn scar_entropy() -> Outcome {
    let mut svd_err = 0.0f64;
    for nx in [4, 6, 8, 10, 12] {
        for n in 0..=nx {
            let rf = rf_state(nx, n).unwrap();
            let numeric: Vec<f64> = schmidt_spectrum(&rf.basis, rf.amplitudes(), rf.half_cut())
                .unwrap()
                .into_iter()
                .filter(|&l| l > 1e-14)
                .collect();
            let mut exact: Vec<f64> = rf_schmidt(nx, n).unwrap().lambdas.into_iter().filter(|&l| l > 0.0).collect();
            exact.sort_by(|a, b| b.total_cmp(a));
            if numeric.len() != exact.len() {
                svd_err = f64::INFINITY;
            }
            for (a, b) in numeric.iter().zip(&exact) {
                svd_err = svd_err.max((a - b).abs());
            }
        }
    }
    let gaps: Vec<(usize, f64)> = (6..=12)
        .step_by(2)
        .map(|nx| {
            let s = rf_schmidt(nx, nx / 2).unwrap();
            (nx, (s.entropy - s.asymptote).abs())
        })
        .collect();
    let pass = svd_err <= 1e-12 && gaps.iter().all(|&(_, g)| g < 0.005);
    let gap_text: Vec<String> = gaps.iter().map(|(nx, g)| format!("{nx}: {g:.4}")).collect();
    outcome(pass, format!("lambda vs SVD {svd_err:.1e}; |S - asymptote| {}", gap_text.join(", ")))
}

fn dynamics_consistency() -> Outcome {
    let (lattice, h) = xx(6, 2, 1.0);
    let basis = SectorBasis::zero_magnetization(12).unwrap();
    let psi = build_product_state(&basis, &domain_wall_pattern(6, 2)).unwrap();
    let report = diagonalize(&h, &basis, &DiagonalizeOptions::default().with_vectors()).unwrap();
    let rec = Recording { entropy: None, energy: false };
    let times = uniform_times(0.0, 40.0, 0.5).unwrap();
    let a = evolve_spectral(&h, &report, &basis, &psi, &times, rec).unwrap();
    let b = evolve_krylov(&h, &basis, &psi, &times, &KrylovStepperOptions::default(), rec).unwrap();
    let mut method_diff = 0.0f64;
    for (ra, rb) in a.magnetization.iter().zip(&b.magnetization) {
        for (x, y) in ra.iter().zip(rb) {
            method_diff = method_diff.max((x - y).abs());
        }
    }
    let proj = zero_mode_projection(&report, &basis, &psi, DEFAULT_DEGENERACY_TOL).unwrap();
    let long = uniform_times(100.0, 1000.0, 1.0).unwrap();
    let run = evolve_spectral(&h, &report, &basis, &psi, &long, rec).unwrap();
    let w = window_average(&run, 100.0, 1000.0).unwrap();
    let mut proj_diff = 0.0f64;
    for x in 0..6 {
        let p: f64 = (0..2).map(|y| proj.sz_average[lattice.site(x, y)]).sum();
        proj_diff = proj_diff.max((w.magnetization[x] - p).abs());
    }
    let (_, h0) = xx(6, 2, 0.0);
    let free = uniform_times(50.0, 500.0, 1.0).unwrap();
    let run0 = evolve(&h0, &basis, &psi, &free, &EvolutionMethod::Spectral, rec).unwrap();
    let w0 = window_average(&run0, 50.0, 500.0).unwrap();
    let decoupled = w0.magnetization.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    outcome(
        method_diff <= 1e-8 && proj_diff <= 1e-2 && decoupled <= 0.02,
        format!(
            "6x2: spectral vs Krylov {method_diff:.1e}, window vs projection {proj_diff:.4}, J_perp=0 window max |m| {decoupled:.4}"
        ),
    )
}

fn domain_wall_plateau() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for nx in [6, 8] {
        let (lattice, h) = xx(nx, 2, 1.0);
        let basis = SectorBasis::zero_magnetization(2 * nx).unwrap();
        let psi = build_product_state(&basis, &domain_wall_pattern(nx, 2)).unwrap();
        let report = diagonalize(&h, &basis, &DiagonalizeOptions::default().with_vectors()).unwrap();
        let proj = zero_mode_projection(&report, &basis, &psi, DEFAULT_DEGENERACY_TOL).unwrap();
        let times = uniform_times(100.0, 1000.0, 1.0).unwrap();
        let rec = Recording { entropy: None, energy: false };
        let run = evolve_spectral(&h, &report, &basis, &psi, &times, rec).unwrap();
        let m0 = window_average(&run, 100.0, 1000.0).unwrap().magnetization[0];
        let initial = rung_magnetization(&lattice, &basis, psi.amplitudes())[0];
        if nx == 8 {
            pass = (proj.c_p_sq - 0.54).abs() <= 0.05 && (m0 - proj.c_p_sq * initial).abs() <= 0.1;
        }
        notes.push(format!("{nx}x2: |c_P|^2 = {:.4}, window m(0) = {m0:.4}", proj.c_p_sq));
    }
    outcome(pass, notes.join("; "))
}

fn anticommutes(lattice: &LatticeSpec, h: &Hamiltonian, rng: &mut ChaCha8Rng) -> bool {
    let basis = SectorBasis::zero_magnetization(lattice.n_sites()).unwrap();
    let amps: Vec<Complex64> = (0..basis.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut v = StateVector::from_amplitudes(&basis, amps).unwrap();
    v.normalize();
    let hv = apply_hamiltonian(h, &basis, &v).unwrap();
    let chv = apply_symmetry(lattice, Symmetry::Chiral, &basis, &hv).unwrap();
    let cv = apply_symmetry(lattice, Symmetry::Chiral, &basis, &v).unwrap();
    let hcv = apply_hamiltonian(h, &basis, &cv).unwrap();
    let r: f64 = chv.amplitudes().iter().zip(hcv.amplitudes()).map(|(a, b)| (a + b).norm_sqr()).sum();
    r.sqrt() < 1e-12
}

fn chiral_dichotomy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pass = true;
    let mut notes = Vec::new();
    for shell in [2, 3, 4, 5] {
        let lattice = LatticeSpec::new(8, 2, Couplings::xx(1.0, 1.0).with_shell(shell, 0.1)).unwrap();
        let h = Hamiltonian::new(&lattice);
        let anti = anticommutes(&lattice, &h, &mut rng);
        let count = zero_count(&h, 8);
        let preserving = shell >= 4;
        pass &= anti == preserving && (count >= 256) == preserving;
        notes.push(format!("shell {shell}: anticommutes {anti}, zero modes {count}"));
    }
    outcome(pass, notes.join(", "))
}

fn free_fermion_oracle() -> Outcome {
    let mut disp = 0.0f64;
    for (nx, ny, jq) in [(8, 2, 1.0), (6, 3, 0.5), (4, 4, 1.3), (10, 1, 0.0)] {
        let a = dispersion_spectrum(nx, ny, 1.0, jq).unwrap();
        let b = dispersion_formula(nx, ny, 1.0, jq);
        disp = a.iter().zip(&b).fold(disp, |m, (x, y)| m.max((x - y).abs()));
    }
    let (nx, ny) = (8, 3);
    let s0 = SingleParticleSystem::new(nx, ny, 1.0, 0.0).unwrap();
    let s1 = SingleParticleSystem::new(nx, ny, 1.0, 2.0).unwrap();
    let c0 = column_filled_initial(nx, ny, &[0, 1, 2, 5]).unwrap();
    let mut indep = 0.0f64;
    for t in [0.5, 2.0, 7.5, 20.0] {
        let a = correlation_evolve(&s0, &c0, t).unwrap().densities();
        let b = correlation_evolve(&s1, &c0, t).unwrap().densities();
        indep = a.iter().zip(&b).fold(indep, |m, (x, y)| m.max((x - y).abs()));
    }
    let (_, h) = xx(8, 1, 0.0);
    let basis = SectorBasis::zero_magnetization(8).unwrap();
    let psi = build_product_state(&basis, &domain_wall_pattern(8, 1)).unwrap();
    let times = uniform_times(0.0, 10.0, 0.25).unwrap();
    let rec = Recording { entropy: None, energy: false };
    let run = evolve(&h, &basis, &psi, &times, &EvolutionMethod::Spectral, rec).unwrap();
    let sys = SingleParticleSystem::new(8, 1, 1.0, 0.0).unwrap();
    let c0 = column_filled_initial(8, 1, &[0, 1, 2, 3]).unwrap();
    let mut chain = 0.0f64;
    for (t, m) in times.iter().zip(&run.magnetization) {
        let n = correlation_evolve(&sys, &c0, *t).unwrap().densities();
        chain = n.iter().zip(m).fold(chain, |acc, (d, mz)| acc.max((d - (mz + 0.5)).abs()));
    }
    outcome(
        disp <= 1e-12 && indep <= 1e-12 && chain <= 1e-8,
        format!("dispersion {disp:.1e}, J_perp independence {indep:.1e}, 8x1 fermions vs spins {chain:.1e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("zero-mode counts", zero_mode_counts),
        ("Witten identities", witten_identities),
        ("bound chain", bound_chain),
        ("exact Lanczos law", exact_lanczos_law),
        ("vanishing diagonal", vanishing_alpha),
        ("localization crossover", localization_crossover),
        ("scar exactness", scar_exactness),
        ("scar entropy", scar_entropy),
        ("dynamics consistency", dynamics_consistency),
        ("domain-wall plateau", domain_wall_plateau),
        ("chiral perturbation dichotomy", chiral_dichotomy),
        ("free-fermion oracle", free_fermion_oracle),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let out = run();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:2} {verdict} {name} ({:.1} s): {}", t0.elapsed().as_secs_f64(), out.detail);
        if !out.pass {
            failed.push(id);
        }
    }
    println!("acceptance: {} failed {failed:?}", failed.len());
    if !failed.is_empty() && std::env::var_os("SPINKRYLOV_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
