use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinkrylov::basis::SectorBasis;
use spinkrylov::lattice::{Couplings, LatticeSpec};
use spinkrylov::operator::{
    apply_hamiltonian, apply_symmetry, assemble_dense, build_product_state, norm, parse_pattern,
    Hamiltonian, StateVector, Symmetry,
};

fn random_state(basis: &SectorBasis, rng: &mut ChaCha8Rng) -> StateVector {
    let amps: Vec<Complex64> = (0..basis.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut v = StateVector::from_amplitudes(basis, amps).unwrap();
    v.normalize();
    v
}

fn lattice_strategy() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just((2, 2)), Just((3, 2)), Just((4, 2)), Just((5, 2)), Just((3, 3)), Just((6, 1)), Just((2, 4))]
}

/// `|| S H v + H S v ||` for an operator mapping the sector to `image`.
fn anticommutator(h: &Hamiltonian, lattice: &LatticeSpec, which: Symmetry, basis: &SectorBasis, v: &StateVector) -> f64 {
    let hv = apply_hamiltonian(h, basis, v).unwrap();
    let shv = apply_symmetry(lattice, which, basis, &hv).unwrap();
    let sv = apply_symmetry(lattice, which, basis, v).unwrap();
    let (n, d) = sv.sector();
    let image = SectorBasis::new(n, d).unwrap();
    let hsv = apply_hamiltonian(h, &image, &sv).unwrap();
    shv.amplitudes()
        .iter()
        .zip(hsv.amplitudes())
        .map(|(a, b)| (a + b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn commutator(h: &Hamiltonian, lattice: &LatticeSpec, which: Symmetry, basis: &SectorBasis, v: &StateVector) -> f64 {
    let hv = apply_hamiltonian(h, basis, v).unwrap();
    let shv = apply_symmetry(lattice, which, basis, &hv).unwrap();
    let sv = apply_symmetry(lattice, which, basis, v).unwrap();
    let (n, d) = sv.sector();
    let image = SectorBasis::new(n, d).unwrap();
    let hsv = apply_hamiltonian(h, &image, &sv).unwrap();
    shv.amplitudes()
        .iter()
        .zip(hsv.amplitudes())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hermitian_and_sector_preserving(
        (nx, ny) in lattice_strategy(),
        jp in -2.0..2.0f64, jq in -2.0..2.0f64, dp in -1.0..1.0f64, dq in -1.0..1.0f64,
        seed in any::<u64>(),
    ) {
        let lattice = LatticeSpec::new(nx, ny, Couplings::xx(jp, jq).with_anisotropy(dp, dq)).unwrap();
        let h = Hamiltonian::new(&lattice);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_down = rng.gen_range(0..=lattice.n_sites());
        let basis = SectorBasis::new(lattice.n_sites(), n_down).unwrap();
        let u = random_state(&basis, &mut rng);
        let v = random_state(&basis, &mut rng);
        let hu = apply_hamiltonian(&h, &basis, &u).unwrap();
        let hv = apply_hamiltonian(&h, &basis, &v).unwrap();
        prop_assert_eq!(hv.sector(), (lattice.n_sites(), n_down));
        let lhs = u.inner(&hv);
        let rhs = v.inner(&hu).conj();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn dense_matrix_matches_matvec((nx, ny) in lattice_strategy(), seed in any::<u64>()) {
        let mut c = Couplings::xx(1.0, 0.6).with_anisotropy(0.3, -0.2);
        if LatticeSpec::new(nx, ny, c.clone()).unwrap().neighbor_shell(4).is_ok() {
            c = c.with_shell(4, 0.1);
        }
        let lattice = LatticeSpec::new(nx, ny, c).unwrap();
        let h = Hamiltonian::new(&lattice);
        let basis = SectorBasis::new(lattice.n_sites(), lattice.n_sites() / 2).unwrap();
        let m = assemble_dense(&h, &basis, 20_000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = h.apply(&basis, &x);
        let scale = norm(&y).max(1.0);
        for i in 0..basis.len() {
            let yi: f64 = (0..basis.len()).map(|j| m[(i, j)] * x[j]).sum();
            prop_assert!((yi - y[i]).abs() <= 1e-13 * scale);
            for j in 0..i {
                prop_assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }

    #[test]
    fn chiral_and_sublattice_anticommute_with_xx(
        (nx, ny) in lattice_strategy(),
        jp in -2.0..2.0f64, jq in -2.0..2.0f64,
        shell in prop::sample::select(vec![0usize, 4, 5]),
        seed in any::<u64>(),
    ) {
        let mut c = Couplings::xx(jp, jq);
        let base = LatticeSpec::new(nx, ny, c.clone()).unwrap();
        if shell > 0 && base.neighbor_shell(shell).map(|b| !b.is_empty()).unwrap_or(false) {
            c = c.with_shell(shell, 0.1);
        }
        let lattice = LatticeSpec::new(nx, ny, c).unwrap();
        prop_assume!(lattice.shell_bonds().iter().all(|(_, bonds)| bonds.iter().all(|b| !b.same_sublattice)));
        let h = Hamiltonian::new(&lattice);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = SectorBasis::new(lattice.n_sites(), rng.gen_range(0..=lattice.n_sites())).unwrap();
        let v = random_state(&basis, &mut rng);
        prop_assert!(anticommutator(&h, &lattice, Symmetry::Sublattice, &basis, &v) < 1e-12);
        prop_assert!(anticommutator(&h, &lattice, Symmetry::Chiral, &basis, &v) < 1e-12);
    }

    #[test]
    fn spin_flip_and_inversion_commute(
        (nx, ny) in lattice_strategy(),
        jp in -2.0..2.0f64, jq in -2.0..2.0f64, dp in -1.0..1.0f64, dq in -1.0..1.0f64,
        shell in 2usize..=5,
        seed in any::<u64>(),
    ) {
        let mut c = Couplings::xx(jp, jq).with_anisotropy(dp, dq);
        let base = LatticeSpec::new(nx, ny, c.clone()).unwrap();
        if base.neighbor_shell(shell).map(|b| !b.is_empty()).unwrap_or(false) {
            c = c.with_shell(shell, 0.3);
        }
        let lattice = LatticeSpec::new(nx, ny, c).unwrap();
        let h = Hamiltonian::new(&lattice);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = SectorBasis::new(lattice.n_sites(), rng.gen_range(0..=lattice.n_sites())).unwrap();
        let v = random_state(&basis, &mut rng);
        prop_assert!(commutator(&h, &lattice, Symmetry::SpinFlip, &basis, &v) < 1e-12);
        prop_assert!(commutator(&h, &lattice, Symmetry::Inversion, &basis, &v) < 1e-12);
    }

    #[test]
    fn parallel_matvec_is_bitwise_serial(seed in any::<u64>()) {
        let lattice = LatticeSpec::new(7, 2, Couplings::xx(1.0, 0.8).with_anisotropy(0.2, 0.5)).unwrap();
        let h = Hamiltonian::new(&lattice);
        let basis = SectorBasis::zero_magnetization(14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_state(&basis, &mut rng);
        let mut a = vec![Complex64::ZERO; basis.len()];
        let mut b = vec![Complex64::ZERO; basis.len()];
        h.apply_serial_into(&basis, v.amplitudes(), &mut a);
        h.apply_parallel_into(&basis, v.amplitudes(), &mut b);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn same_sublattice_shells_break_the_chiral_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for shell in [2, 3] {
        let lattice = LatticeSpec::new(4, 2, Couplings::xx(1.0, 1.0).with_shell(shell, 0.1)).unwrap();
        assert!(lattice.shell_bonds()[0].1.iter().all(|b| b.same_sublattice));
        let h = Hamiltonian::new(&lattice);
        let basis = SectorBasis::zero_magnetization(8).unwrap();
        for _ in 0..5 {
            let v = random_state(&basis, &mut rng);
            assert!(anticommutator(&h, &lattice, Symmetry::Chiral, &basis, &v) > 1e-3, "shell {shell}");
            assert!(anticommutator(&h, &lattice, Symmetry::Sublattice, &basis, &v) > 1e-3, "shell {shell}");
        }
    }
}

#[test]
fn xx_spectrum_is_symmetric() {
    for (nx, ny, jq) in [(4, 2, 1.0), (3, 3, 0.7), (5, 2, 2.0), (2, 4, 0.4)] {
        let lattice = LatticeSpec::new(nx, ny, Couplings::xx(1.0, jq)).unwrap();
        let h = Hamiltonian::new(&lattice);
        for n_down in 0..=lattice.n_sites() {
            let basis = SectorBasis::new(lattice.n_sites(), n_down).unwrap();
            let m = assemble_dense(&h, &basis, 20_000).unwrap();
            let ev = m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
            let n = ev.len();
            for k in 0..n {
                assert!((ev[k] + ev[n - 1 - k]).abs() < 1e-10, "{nx}x{ny} n_down={n_down}");
            }
        }
    }
}

#[test]
fn domain_wall_plaquette_norm() {
    let lattice = LatticeSpec::new(2, 2, Couplings::xx(1.0, 1.0)).unwrap();
    let h = Hamiltonian::new(&lattice);
    let basis = SectorBasis::new(4, 2).unwrap();
    let v = build_product_state(&basis, &parse_pattern("uu dd").unwrap()).unwrap();
    let hv = apply_hamiltonian(&h, &basis, &v).unwrap();
    assert!((hv.norm().powi(2) - 0.5).abs() < 1e-15);
}

#[test]
fn sublattice_eigenvalue_of_product_states() {
    let lattice = LatticeSpec::new(8, 2, Couplings::default()).unwrap();
    let basis = SectorBasis::zero_magnetization(16).unwrap();
    let v = build_product_state(&basis, &parse_pattern("uuuuuuuu dddddddd").unwrap()).unwrap();
    let s = apply_symmetry(&lattice, Symmetry::Sublattice, &basis, &v).unwrap();
    // four down spins on even sites
    assert_eq!(s.amplitudes(), v.amplitudes());
}
