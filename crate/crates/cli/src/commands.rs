//! One function per subcommand. Each returns its tables and results; the
//! caller writes them.

use num_complex::Complex64;
use serde_json::{json, Value};

use spinkrylov::basis::{binomial, SectorBasis};
use spinkrylov::dynamics::{
    domain_sweep_window, domain_sweep_with, domain_wall_pattern, evolve_krylov, evolve_spectral, rung_magnetization,
    uniform_times, window_average, KrylovStepperOptions, Recording, SweepResult,
};
use spinkrylov::entanglement::{entanglement_entropy, page_value, Bipartition};
use spinkrylov::fermion::{
    column_filled_initial, correlation_evolve, dispersion_formula, dispersion_spectrum, SingleParticleSystem,
};
use spinkrylov::krylov::{
    chain_zero_mode, default_fit_window, double_linear_fit, lanczos_tridiagonalize, power_law_fit, FitWindow,
    LanczosOptions,
};
use spinkrylov::operator::{build_product_state, parse_pattern, Hamiltonian, Spin};
use spinkrylov::scars::{ra_states, rf_schmidt, rf_state};
use spinkrylov::spectral::{
    diagonalize, eigenstate_entropies, thermal_curve, zero_mode_count, zero_mode_projection, DiagonalizeOptions,
    SpectrumReport,
};
use spinkrylov::witten::{
    brute_force_trace, eigenspace_split, tr_chiral_formula, tr_sublattice_formula, zero_mode_lower_bound,
    TraceOperator, BRUTE_FORCE_CAP,
};

use crate::config::{Estimator, Method, RunConfig};
use crate::output::{int, num, RunOutput, Table};
use crate::CliError;

const FERMION_TOL: f64 = 1e-10;
const NORM_DRIFT_TOL: f64 = 1e-8;

fn big(v: &impl ToString) -> Value {
    let s = v.to_string();
    s.parse::<i64>().map(Value::from).unwrap_or(Value::String(s))
}

fn diag_options(cfg: &RunConfig, vectors: bool) -> DiagonalizeOptions {
    DiagonalizeOptions {
        want_vectors: vectors,
        use_symmetry: true,
        dense_cap: cfg.tolerances.dense_cap,
        zero_tol: cfg.tolerances.zero,
    }
}

fn stepper(cfg: &RunConfig) -> KrylovStepperOptions {
    KrylovStepperOptions {
        subspace: cfg.tolerances.krylov_subspace,
        tol: cfg.tolerances.krylov,
        ..Default::default()
    }
}

fn initial_pattern(cfg: &RunConfig) -> Result<Vec<Spin>, CliError> {
    let p = &cfg.initial.pattern;
    let pattern = if p == "domain_wall" {
        domain_wall_pattern(cfg.lattice.nx, cfg.lattice.ny)
    } else {
        parse_pattern(p)?
    };
    if pattern.len() != cfg.lattice.n_sites() {
        return Err(CliError::Config(format!(
            "initial.pattern has {} spins, lattice has {} sites",
            pattern.len(),
            cfg.lattice.n_sites()
        )));
    }
    let downs = pattern.iter().filter(|&&s| s == Spin::Down).count();
    if let Some(n) = cfg.sector.n_down {
        if n != downs {
            return Err(CliError::Config(format!(
                "initial.pattern has {downs} down spins but sector.n_down = {n}"
            )));
        }
    }
    Ok(pattern)
}

fn pattern_sector(cfg: &RunConfig) -> Result<(Vec<Spin>, SectorBasis), CliError> {
    let pattern = initial_pattern(cfg)?;
    let downs = pattern.iter().filter(|&&s| s == Spin::Down).count();
    let basis = SectorBasis::new(cfg.lattice.n_sites(), downs)?;
    Ok((pattern, basis))
}

fn sector(cfg: &RunConfig) -> Result<SectorBasis, CliError> {
    let n = cfg.lattice.n_sites();
    Ok(SectorBasis::new(n, cfg.sector.n_down.unwrap_or(n / 2))?)
}

pub fn spectrum(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let lattice = cfg.lattice.build()?;
    let h = Hamiltonian::new(&lattice);
    let basis = sector(cfg)?;
    let report = diagonalize(&h, &basis, &diag_options(cfg, cfg.spectrum.entropies))?;
    let z = zero_mode_count(&report);
    let (nx, ny, n_down) = (lattice.nx(), lattice.ny(), basis.n_down());

    let mut out = RunOutput::new(Some("Fig. 4"));
    let entropies = if cfg.spectrum.entropies {
        Some(eigenstate_entropies(&report, &basis, Bipartition::half(nx, ny))?.entropies)
    } else {
        None
    };
    let mut cols = vec![("k", "index"), ("energy", "J_par")];
    if entropies.is_some() {
        cols.push(("s_vn", "nats"));
    }
    let mut eig = Table::new("eigenvalues.csv", &cols);
    for (k, e) in report.eigenvalues().iter().enumerate() {
        let mut row = vec![int(k), num(*e)];
        if let Some(s) = &entropies {
            row.push(num(s[k]));
        }
        eig.push(row);
    }
    out.tables.push(eig);

    if cfg.spectrum.thermal_points >= 2 {
        let mut th = Table::new("thermal.csv", &[("beta", "1/J_par"), ("energy", "J_par"), ("s_th", "nats")]);
        for p in thermal_curve(&report, cfg.spectrum.thermal_points)? {
            th.push(vec![num(p.beta), num(p.energy), num(p.entropy)]);
        }
        out.tables.push(th);
    }

    let tr_s = tr_sublattice_formula(nx, ny, n_down);
    let bound = zero_mode_lower_bound(nx, ny, n_down);
    out.set("dim", basis.len());
    out.set("n_down", n_down);
    out.set("blocks", report.block_dims());
    out.set("zero_count", z.count);
    out.set("zero_tol", z.tol);
    out.set("largest_zero", z.largest_zero);
    out.set("smallest_nonzero", if z.smallest_nonzero.is_finite() { json!(z.smallest_nonzero) } else { Value::Null });
    out.set("gap_ratio", if z.gap_ratio.is_finite() { json!(z.gap_ratio) } else { Value::Null });
    out.set("certified", z.is_certified());
    out.set("max_abs_energy", report.max_abs());
    out.set("tr_sublattice", big(&tr_s));
    if 2 * n_down == lattice.n_sites() {
        out.set("tr_chiral", big(&tr_chiral_formula(nx, ny)));
    }
    out.set("zero_mode_lower_bound", big(&bound));
    out.set("page_value", page_value(lattice.n_sites()));
    // bounds beyond u128 exceed any sector we can diagonalize
    if bound.to_string().parse::<u128>().map_or(true, |b| (z.count as u128) < b) {
        out.failure = Some(format!("zero_count {} is below the trace bound {bound}", z.count));
    }
    Ok(out)
}

pub fn evolve(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let lattice = cfg.lattice.build()?;
    let h = Hamiltonian::new(&lattice);
    let (pattern, basis) = pattern_sector(cfg)?;
    let psi = build_product_state(&basis, &pattern)?;
    let times = uniform_times(cfg.time.t0, cfg.time.t1, cfg.time.dt)?;
    let (nx, ny) = (lattice.nx(), lattice.ny());
    let rec = Recording {
        entropy: cfg.evolve.entropy.then(|| Bipartition::half(nx, ny)),
        energy: true,
    };
    let mut out = RunOutput::new(Some("Fig. 1, Fig. 2"));
    let (run, report) = match cfg.evolve.method {
        Method::Spectral => {
            let report = diagonalize(&h, &basis, &diag_options(cfg, true))?;
            (evolve_spectral(&h, &report, &basis, &psi, &times, rec)?, Some(report))
        }
        Method::Krylov => (evolve_krylov(&h, &basis, &psi, &times, &stepper(cfg), rec)?, None),
    };

    let mut names: Vec<String> = vec!["t".into()];
    names.extend((0..nx).map(|x| format!("mz_{x}")));
    let mut units = vec!["1/J_par"];
    units.extend(std::iter::repeat("hbar").take(nx));
    if rec.entropy.is_some() {
        names.push("s_vn".into());
        units.push("nats");
    }
    names.extend(["energy".into(), "norm".into()]);
    units.extend(["J_par", "1"]);
    let cols: Vec<(&str, &str)> = names.iter().map(String::as_str).zip(units.iter().copied()).collect();
    let mut table = Table::new("evolve.csv", &cols);
    for (k, t) in run.times.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(run.magnetization[k].iter().map(|m| num(*m)));
        if let Some(s) = &run.entropy {
            row.push(num(s[k]));
        }
        row.push(num(run.energy.as_ref().expect("energy is recorded")[k]));
        row.push(num(run.norm[k]));
        table.push(row);
    }
    out.tables.push(table);

    let projection = match &report {
        Some(r) => Some(zero_mode_projection(r, &basis, &psi, cfg.tolerances.degeneracy)?),
        None => None,
    };
    if let Some([t_min, t_max]) = cfg.time.window {
        let w = window_average(&run, t_min, t_max)?;
        let mut cols = vec![("x", "index"), ("mz_window", "hbar")];
        if projection.is_some() {
            cols.push(("mz_projection", "hbar"));
        }
        let mut wt = Table::new("window.csv", &cols);
        for x in 0..nx {
            let mut row = vec![int(x), num(w.magnetization[x])];
            if let Some(p) = &projection {
                row.push(num((0..ny).map(|y| p.sz_average[lattice.site(x, y)]).sum()));
            }
            wt.push(row);
        }
        out.tables.push(wt);
        out.set(
            "window",
            json!({ "t_min": w.t_min, "t_max": w.t_max, "samples": w.samples, "s_vn": w.entropy }),
        );
    }
    out.set("method", run.method);
    out.set("n_down", basis.n_down());
    out.set("initial_mz", rung_magnetization(&lattice, &basis, psi.amplitudes()));
    out.set("substeps", run.substeps);
    out.set("max_norm_drift", run.max_norm_drift());
    out.set("max_energy_drift", run.max_energy_drift());
    out.set("page_value", page_value(lattice.n_sites()));
    if let Some(p) = &projection {
        out.set("c_p_sq", p.c_p_sq);
        out.set("max_second_term", p.max_second_term());
    }
    if run.max_norm_drift() > NORM_DRIFT_TOL {
        out.failure = Some(format!("norm drift {:e} exceeds {NORM_DRIFT_TOL:e}", run.max_norm_drift()));
    }
    Ok(out)
}

pub fn lanczos(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let lattice = cfg.lattice.build()?;
    let j_par = lattice.couplings().j_par;
    if j_par == 0.0 {
        return Err(CliError::Config("lanczos reports beta in units of J_par/2; lattice.j_par must be nonzero".into()));
    }
    let h = Hamiltonian::new(&lattice);
    let (pattern, basis) = pattern_sector(cfg)?;
    let start = build_product_state(&basis, &pattern)?.to_real(0.0).expect("product states are real");
    let mut opts = LanczosOptions::new(cfg.lanczos.steps);
    if !cfg.lanczos.reorthogonalize {
        opts = opts.storage_free();
    }
    let tri = lanczos_tridiagonalize(&h, &basis, &start, &opts)?;
    let zero = chain_zero_mode(&tri)?;
    let scale = (2.0 / j_par).powi(2);

    let mut table = Table::new(
        "lanczos.csv",
        &[("j", "index"), ("beta_sq", "(J_par/2)^2"), ("alpha", "J_par"), ("c_sq", "1")],
    );
    for j in 1..=tri.n_steps {
        let b2 = if j == 1 { 0.0 } else { tri.beta(j).powi(2) * scale };
        let c = zero.coefficients.get(j - 1).copied().unwrap_or(0.0);
        table.push(vec![int(j), num(b2), num(tri.alphas[j - 1] / j_par), num(c * c)]);
    }
    let mut out = RunOutput::new(Some("Fig. 3"));
    out.tables.push(table);

    let auto = default_fit_window(&tri);
    let window = FitWindow::new(
        cfg.lanczos.fit_start.unwrap_or(auto.j_min),
        cfg.lanczos.fit_end.unwrap_or(auto.j_max),
    );
    let scaled: Vec<(usize, f64)> = tri.beta_sq().into_iter().map(|(j, b)| (j, b * scale)).collect();
    let fit = match double_linear_fit(&scaled, window) {
        Ok(f) => json!({ "a": f.a, "b_odd": f.b_odd, "b_even": f.b_even, "gamma": f.gamma, "units": "(J_par/2)^2" }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let exponent = match power_law_fit(&zero.coefficients, window) {
        Ok(p) => json!(p),
        Err(e) => json!({ "error": e.to_string() }),
    };
    out.set("n_steps", tri.n_steps);
    out.set("breakdown", tri.breakdown);
    out.set("reorthogonalized", tri.reorthogonalized);
    out.set("max_abs_alpha", tri.max_abs_alpha());
    out.set("norm_estimate", tri.norm_estimate);
    out.set("zero_mode_truncated", zero.truncated);
    out.set("fit_window", json!({ "j_min": window.j_min, "j_max": window.j_max }));
    out.set("double_linear_fit", fit);
    out.set("power_law_exponent", exponent);
    if lattice.couplings().j_perp == 0.0 && cfg.initial.pattern == "domain_wall" {
        let j_max = (lattice.nx() / 2 + 1).min(tri.n_steps);
        let worst = scaled
            .iter()
            .filter(|(j, _)| *j <= j_max)
            .map(|&(j, b)| {
                let law = (lattice.ny() * (j - 1)) as f64;
                (b - law).abs() / law
            })
            .fold(0.0f64, f64::max);
        out.set("exact_law", json!({ "j_max": j_max, "max_rel_error": worst }));
    }
    Ok(out)
}

pub fn witten(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let (nx, ny) = (cfg.lattice.nx, cfg.lattice.ny);
    cfg.lattice.build()?;
    let n = nx * ny;
    let sectors: Vec<usize> = cfg.witten.n_down.clone().unwrap_or_else(|| (0..=n).collect());
    let mut table = Table::new(
        "witten.csv",
        &[
            ("nx", "sites"),
            ("ny", "sites"),
            ("n_down", "spins"),
            ("operator", "label"),
            ("dim", "states"),
            ("formula", "1"),
            ("brute_force", "1"),
            ("match", "bool"),
            ("n_plus", "states"),
            ("n_minus", "states"),
        ],
    );
    let mut mismatches = Vec::new();
    let mut max_bound = Value::Null;
    for &d in &sectors {
        if d > n {
            return Err(CliError::Config(format!("witten.n_down entry {d} exceeds {n} sites")));
        }
        let dim = binomial(n, d);
        let mut ops = vec![(TraceOperator::Sublattice, tr_sublattice_formula(nx, ny, d))];
        if 2 * d == n {
            ops.push((TraceOperator::Chiral, tr_chiral_formula(nx, ny)));
        }
        for (op, formula) in ops {
            let brute = if cfg.witten.brute_force && dim <= BRUTE_FORCE_CAP as u64 {
                Some(brute_force_trace(op, nx, ny, d)?)
            } else {
                None
            };
            let matched = brute.as_ref().map(|b| *b == formula);
            if matched == Some(false) {
                mismatches.push(format!("{} n_down={d}", op.name()));
            }
            let (plus, minus) = eigenspace_split(&formula, &dim.into());
            table.push(vec![
                int(nx),
                int(ny),
                int(d),
                op.name().to_string(),
                int(dim),
                formula.to_string(),
                brute.map(|b| b.to_string()).unwrap_or_default(),
                matched.map(|m| m.to_string()).unwrap_or_default(),
                plus.to_string(),
                minus.to_string(),
            ]);
        }
        if 2 * d == n || sectors.len() == 1 {
            max_bound = big(&zero_mode_lower_bound(nx, ny, d));
        }
    }
    let mut out = RunOutput::new(None);
    out.tables.push(table);
    out.set("sectors", sectors.len());
    out.set("all_match", mismatches.is_empty());
    out.set("zero_mode_lower_bound", max_bound);
    if !mismatches.is_empty() {
        out.failure = Some(format!("formula and enumeration differ: {}", mismatches.join(", ")));
    }
    Ok(out)
}

pub fn scars(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let lattice = cfg.lattice.build()?;
    if lattice.ny() != 2 {
        return Err(spinkrylov::Error::NotALadder { ny: lattice.ny() }.into());
    }
    let nx = lattice.nx();
    let c = lattice.couplings();
    let h = Hamiltonian::new(&lattice);
    let shift = nx as f64 * c.delta_perp * c.j_perp / 4.0;
    let mut table = Table::new(
        "scars.csv",
        &[
            ("state", "label"),
            ("n_down", "spins"),
            ("energy_expected", "J_par"),
            ("energy", "J_par"),
            ("residual", "J_par"),
            ("s_vn", "nats"),
        ],
    );
    let mut schmidt = Table::new("schmidt.csv", &[("n", "rungs"), ("l", "rungs"), ("lambda", "1")]);
    let mut worst = 0.0f64;
    let mut row = |label: String, basis: &SectorBasis, psi: &[Complex64], e: f64, s: f64| {
        let hp = h.apply(basis, psi);
        let energy: f64 = psi.iter().zip(&hp).map(|(a, b)| (a.conj() * b).re).sum();
        let r = hp.iter().zip(psi).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(r);
        table.push(vec![label, int(basis.n_down()), num(e), num(energy), num(r), num(s)]);
    };
    for n in 0..=nx {
        let rf = rf_state(nx, n)?;
        let sch = rf_schmidt(nx, n)?;
        row(format!("RF({n})"), &rf.basis, rf.amplitudes(), shift, sch.entropy);
        for (l, lam) in sch.lambdas.iter().enumerate() {
            schmidt.push(vec![int(n), int(l), num(*lam)]);
        }
    }
    if nx % 2 == 0 {
        let (even, odd) = ra_states(nx)?;
        for (label, ra) in [("RA_even", even), ("RA_odd", odd)] {
            let s = entanglement_entropy(&ra.basis, ra.amplitudes(), ra.half_cut())?;
            row(label.to_string(), &ra.basis, ra.amplitudes(), -shift, s);
        }
    }
    let mut out = RunOutput::new(None);
    out.tables.push(table);
    out.tables.push(schmidt);
    out.set("rung_ising_shift", shift);
    out.set("max_residual", worst);
    out.set("eigenstates", worst <= cfg.tolerances.residual);
    if nx % 2 == 0 {
        let s = rf_schmidt(nx, nx / 2)?;
        out.set(
            "half_filling_entropy",
            json!({ "s_vn": s.entropy, "asymptote": s.asymptote, "gap": s.asymptote - s.entropy }),
        );
    }
    // only the bare XX(Z) ladder without leg Ising terms guarantees exact scars
    let protected = c.delta_par == 0.0 && c.shells.is_empty();
    if protected && worst > cfg.tolerances.residual {
        out.failure = Some(format!("scar residual {worst:e} exceeds {:e}", cfg.tolerances.residual));
    }
    Ok(out)
}

pub fn fermion(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let l = &cfg.lattice;
    if l.delta_par != 0.0 || l.delta_perp != 0.0 || !l.shells.is_empty() {
        return Err(CliError::Config(
            "fermion maps only the nearest-neighbour XX model; set delta_par = delta_perp = 0 and no shells".into(),
        ));
    }
    let (nx, ny) = (l.nx, l.ny);
    let coupled = SingleParticleSystem::new(nx, ny, l.j_par, l.j_perp)?;
    let decoupled = SingleParticleSystem::new(nx, ny, l.j_par, 0.0)?;
    let columns = cfg.fermion.columns.clone().unwrap_or_else(|| (0..nx / 2).collect());
    let c0 = column_filled_initial(nx, ny, &columns)?;
    let times = uniform_times(cfg.time.t0, cfg.time.t1, cfg.time.dt)?;

    let numeric = dispersion_spectrum(nx, ny, l.j_par, l.j_perp)?;
    let formula = dispersion_formula(nx, ny, l.j_par, l.j_perp);
    let mut disp = Table::new("dispersion.csv", &[("k", "index"), ("energy", "J_par"), ("energy_formula", "J_par")]);
    let mut disp_err = 0.0f64;
    for (k, (a, b)) in numeric.iter().zip(&formula).enumerate() {
        disp_err = disp_err.max((a - b).abs());
        disp.push(vec![int(k), num(*a), num(*b)]);
    }

    let mut dens = Table::new(
        "fermion.csv",
        &[("t", "1/J_par"), ("x", "index"), ("y", "index"), ("density", "1"), ("density_decoupled", "1")],
    );
    let mut deviation = 0.0f64;
    let mut number_drift = 0.0f64;
    let n0 = c0.particle_number();
    for &t in &times {
        let a = correlation_evolve(&coupled, &c0, t)?;
        let b = correlation_evolve(&decoupled, &c0, t)?.densities();
        number_drift = number_drift.max((a.particle_number() - n0).abs());
        for (i, (x, y)) in a.densities().iter().zip(&b).enumerate() {
            deviation = deviation.max((x - y).abs());
            dens.push(vec![num(t), int(i / ny), int(i % ny), num(*x), num(*y)]);
        }
    }
    let mut out = RunOutput::new(None);
    out.tables.push(dens);
    out.tables.push(disp);
    out.set("columns", columns);
    out.set("particle_number", n0);
    out.set("max_particle_drift", number_drift);
    out.set("max_dispersion_error", disp_err);
    out.set("max_j_perp_deviation", deviation);
    if disp_err > FERMION_TOL || deviation > FERMION_TOL {
        out.failure = Some(format!(
            "dispersion error {disp_err:e} or J_perp deviation {deviation:e} exceeds {FERMION_TOL:e}"
        ));
    }
    Ok(out)
}

pub fn sweep(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let lattice = cfg.lattice.build()?;
    let nx = lattice.nx();
    let h = Hamiltonian::new(&lattice);
    let basis = SectorBasis::zero_magnetization(lattice.n_sites())?;
    let lengths = cfg.sweep.longest.clone().unwrap_or_else(|| (1..=nx / 2).collect());
    let report: Option<SpectrumReport> = match cfg.sweep.estimator {
        Estimator::Projection => Some(diagonalize(&h, &basis, &diag_options(cfg, true))?),
        Estimator::Window => None,
    };
    let mut results: Vec<SweepResult> = Vec::new();
    for &len in &lengths {
        let r = match &report {
            Some(rep) => domain_sweep_with(&lattice, rep, &basis, len, cfg.sweep.pattern_cap)?,
            None => {
                let [t_min, t_max] = cfg
                    .time
                    .window
                    .ok_or_else(|| CliError::Config("the window estimator needs time.window".into()))?;
                domain_sweep_window(&h, &basis, len, cfg.sweep.pattern_cap, (t_min, t_max, cfg.time.dt), &stepper(cfg))?
            }
        };
        results.push(r);
    }
    let mut each = Table::new("sweep.csv", &[("longest", "rungs"), ("pattern", "rungs"), ("edge_mz", "hbar")]);
    let mut summary = Table::new(
        "sweep_summary.csv",
        &[("longest", "rungs"), ("patterns", "count"), ("mean", "hbar"), ("std", "hbar")],
    );
    for r in &results {
        for (p, v) in r.patterns.iter().zip(&r.edge_values) {
            let text: String = p.iter().map(|&up| if up { 'u' } else { 'd' }).collect();
            each.push(vec![int(r.longest), text, num(*v)]);
        }
        summary.push(vec![int(r.longest), int(r.patterns.len()), num(r.mean), num(r.std)]);
    }
    let means: Vec<f64> = results.iter().map(|r| r.mean).collect();
    let mut out = RunOutput::new(Some("Fig. 2(d)"));
    out.tables.push(each);
    out.tables.push(summary);
    out.set(
        "estimator",
        match cfg.sweep.estimator {
            Estimator::Projection => "projection",
            Estimator::Window => "window",
        },
    );
    out.set("means", means.clone());
    out.set("monotone", means.windows(2).all(|w| w[0] < w[1]));
    Ok(out)
}
