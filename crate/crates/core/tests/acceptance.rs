//! Acceptance suite. Each test prints one `acceptance N [PASS|FAIL]` line to
//! stderr (uncaptured) and then asserts its criterion.
//!
//! Run alone with `cargo test --release -p periodic-rhf --test acceptance`.

use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use periodic_rhf::bloch::{
    eigensolve_lowest, fermi_and_gap, kgrid, solve_grid, solve_lowest, EigenMethod, EigenOptions,
    FiberHamiltonian, PotentialCoupling,
};
use periodic_rhf::cli::{cmd_rate_bound, cmd_riemann, cmd_study, system, Preset, RunConfig};
use periodic_rhf::convergence::StudyRow;
use periodic_rhf::lattice::{Lattice, ReciprocalLattice};
use periodic_rhf::pseudopotential::{cohen_bergstresser, rhf_pseudopotential, FormFactorTable};
use periodic_rhf::pwbasis::{build_basis, PeriodicFunction, PlaneWaveBasis};
use periodic_rhf::rhf::{coulomb_energy, hartree, scf, uniform_density, Model, SCFConfig};
use periodic_rhf::units::ev_to_hartree;

const A: f64 = 10.245;

fn report(n: u32, title: &str, pass: bool, detail: &str, started: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "acceptance {n} [{verdict}] {title}: {detail} ({:.1} s)",
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

fn silicon(ecut_ev: f64) -> (Lattice, PlaneWaveBasis, PeriodicFunction) {
    let lat = Lattice::fcc(A).unwrap();
    let basis = build_basis(&lat.reciprocal().unwrap(), ev_to_hartree(ecut_ev)).unwrap();
    let v = cohen_bergstresser(&lat, A, 11.0, &FormFactorTable::silicon()).unwrap();
    (lat, basis, v)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

#[test]
fn criterion_1_basis_size() {
    let t = Instant::now();
    let rlat = Lattice::fcc(A).unwrap().reciprocal().unwrap();
    let n = build_basis(&rlat, ev_to_hartree(736.0)).unwrap().len();
    report(
        1,
        "basis size at 736 eV",
        n == 749,
        &format!("|X| = {n}, expected 749"),
        t,
    );
}

#[test]
fn criterion_2_insulator_at_full_cutoff() {
    let t = Instant::now();
    let (_, basis, v) = silicon(736.0);
    let grid = kgrid(basis.rlat(), 8).unwrap();
    let coupling = PotentialCoupling::new(&v, &basis);
    let sols = solve_grid(&grid, &basis, &coupling, 5, None, &EigenOptions::default()).unwrap();
    let detail;
    let pass = match fermi_and_gap(&sols, 4, 0.0) {
        Ok(g) => {
            detail = format!(
                "|X| = {}, L = 8, gap {:.6} Ha between bands 4 and 5 (homo {:.6}, lumo {:.6})",
                basis.len(),
                g.gap,
                g.homo,
                g.lumo
            );
            g.gap > 0.0
        }
        Err(e) => {
            detail = e.to_string();
            false
        }
    };
    report(2, "insulator at full cutoff", pass, &detail, t);
}

/// Independent closed form of the quadrature error: `kappa (coth^3(beta L / 2) - 1)`.
fn coth_closed_form(kappa: f64, beta: f64, l: usize) -> f64 {
    let eps = 2.0 / (beta * l as f64).exp_m1();
    kappa * (3.0 * eps + 3.0 * eps * eps + eps * eps * eps)
}

#[test]
fn criterion_3_riemann_identity() {
    let t = Instant::now();
    let cfg = RunConfig::preset(Preset::SiFccDesk);
    assert_eq!(cfg.riemann.grids, (1..=10).collect::<Vec<_>>());
    let mut out = Vec::new();
    let rep = cmd_riemann(&cfg, &mut out).unwrap();
    let oracle_gap = rep
        .checks
        .iter()
        .map(|c| (c.lhs.re - coth_closed_form(1.0, 0.5, c.l)).abs())
        .fold(0.0, f64::max);
    let identity = rep.max_discrepancy < 1e-12 && oracle_gap < 1e-12;
    let fit = rep.fit.expect("fit of the quadrature error");
    let deviation = (fit.alpha_obs - 0.5).abs() / 0.5;
    let rate = deviation < 0.05;
    report(
        3,
        "Riemann aliasing identity",
        identity && rate,
        &format!(
            "max |lhs - rhs| = {:.2e}, max |lhs - closed form| = {:.2e} (identity {}); \
             fitted rate {:.4} vs beta 0.5, deviation {:.1}% (rate {})",
            rep.max_discrepancy,
            oracle_gap,
            if identity { "ok" } else { "off" },
            fit.alpha_obs,
            100.0 * deviation,
            if rate { "ok" } else { "off" }
        ),
        t,
    );
}

fn fit_summary(rows: &[StudyRow], report: &periodic_rhf::cli::StudyReport) -> String {
    let e = report.energy_fit.as_ref().unwrap();
    let d = report.density_fit.as_ref().unwrap();
    let errs: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "L={}: {:.2e}/{:.2e}",
                r.l, r.energy_error, r.density_error_inf
            )
        })
        .collect();
    format!(
        "{}; energy alpha {:.3} r2 {:.4}; density alpha {:.3} r2 {:.4}",
        errs.join(", "),
        e.alpha_obs,
        e.r_squared,
        d.alpha_obs,
        d.r_squared
    )
}

fn study_criteria(
    rows: &[StudyRow],
    report: &periodic_rhf::cli::StudyReport,
    alpha_theory: f64,
) -> bool {
    let energy: Vec<f64> = rows.iter().map(|r| r.energy_error).collect();
    let density: Vec<f64> = rows.iter().map(|r| r.density_error_inf).collect();
    let fits_ok = [&report.energy_fit, &report.density_fit].iter().all(|f| {
        f.as_ref().is_some_and(|f| {
            f.r_squared >= 0.95 && f.alpha_obs > 0.0 && f.alpha_obs >= alpha_theory
        })
    });
    strictly_decreasing(&energy) && strictly_decreasing(&density) && fits_ok
}

#[test]
fn criterion_4_linear_convergence() {
    let t = Instant::now();
    let mut cfg = RunConfig::preset(Preset::SiFccDesk);
    cfg.scf.model = Model::Linear;
    let bound = cmd_rate_bound(&cfg, &mut Vec::new()).unwrap();
    let rep = cmd_study(&cfg, &mut Vec::new(), None).unwrap();
    let rows = &rep.study.rows;
    let pass =
        rows.iter().map(|r| r.l).eq([4, 6, 8, 10, 12]) && study_criteria(rows, &rep, bound.alpha);
    report(
        4,
        "linear exponential convergence (180 eV, L_ref 24)",
        pass,
        &format!(
            "{}; alpha_theory {:.3e}",
            fit_summary(rows, &rep),
            bound.alpha
        ),
        t,
    );
}

#[test]
fn criterion_5_rhf_convergence() {
    let t = Instant::now();
    let mut cfg = RunConfig::preset(Preset::SiFccDesk);
    cfg.scf.model = Model::Rhf;
    let bound = {
        let mut linear = cfg.clone();
        linear.scf.model = Model::Linear;
        cmd_rate_bound(&linear, &mut Vec::new()).unwrap()
    };
    let rep = cmd_study(&cfg, &mut Vec::new(), None).unwrap();
    let rows = &rep.study.rows;
    let residuals_ok =
        rows.iter().all(|r| r.scf_residual < 1e-7) && rep.study.reference.residual < 1e-7;
    let pass = rows.iter().map(|r| r.l).eq([4, 6, 8, 10, 12])
        && study_criteria(rows, &rep, bound.alpha)
        && residuals_ok;
    let iters: Vec<String> = rows
        .iter()
        .map(|r| format!("{}", r.scf_iterations))
        .collect();
    report(
        5,
        "rHF exponential convergence (180 eV, L_ref 24)",
        pass,
        &format!(
            "{}; SCF iterations [{}], max residual {:.2e}",
            fit_summary(rows, &rep),
            iters.join(" "),
            rows.iter().map(|r| r.scf_residual).fold(0.0, f64::max)
        ),
        t,
    );
}

#[test]
fn criterion_6_fixed_point() {
    let t = Instant::now();
    let (_, basis, vlin) = silicon(180.0);
    let grid = kgrid(basis.rlat(), 4).unwrap();
    let linear_cfg = SCFConfig {
        model: Model::Linear,
        ..SCFConfig::default()
    };
    let uniform = uniform_density(&basis, 4);
    let linear = scf(&basis, &grid, &vlin, &linear_cfg, &uniform).unwrap();
    let v_hf = rhf_pseudopotential(&vlin, &linear.density).unwrap();
    let cfg = SCFConfig::default();
    // Start away from the fixed point so the loop has work to do.
    let run = scf(&basis, &grid, &v_hf, &cfg, &uniform).unwrap();
    let dev = run.density.sub(&linear.density).sup_norm_refined();
    report(
        6,
        "rHF fixed point of its own pseudopotential",
        run.converged && dev <= 10.0 * cfg.tol_density,
        &format!(
            "L = 4, {} iterations from the uniform density, |rho - rho_lin|_inf = {dev:.2e} (limit {:.0e})",
            run.iterations,
            10.0 * cfg.tol_density
        ),
        t,
    );
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
fn jacobi_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    let n = h.nrows();
    let mut a = h.clone();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = a[(p, r)];
                if apr.norm() < 1e-300 {
                    continue;
                }
                let phase = apr / apr.norm();
                let theta = 0.5 * (2.0 * apr.norm()).atan2(a[(r, r)].re - a[(p, p)].re);
                let (s, c) = theta.sin_cos();
                for k in 0..n {
                    let (akp, akr) = (a[(k, p)], a[(k, r)]);
                    a[(k, p)] = akp * c - akr * phase.conj() * s;
                    a[(k, r)] = akp * phase * s + akr * c;
                }
                for k in 0..n {
                    let (apk, ark) = (a[(p, k)], a[(r, k)]);
                    a[(p, k)] = apk * c - ark * phase * s;
                    a[(r, k)] = apk * phase.conj() * s + ark * c;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

fn random_neutral(rlat: &ReciprocalLattice, rng: &mut ChaCha8Rng, reach: i32) -> PeriodicFunction {
    let mut coeffs = Vec::new();
    for m1 in 0..=reach {
        for m2 in -reach..=reach {
            for m3 in -reach..=reach {
                let m = [m1, m2, m3];
                if m <= [0, 0, 0] || rng.random_bool(0.5) {
                    continue;
                }
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                coeffs.push((m, c));
                coeffs.push(([-m1, -m2, -m3], c.conj()));
            }
        }
    }
    PeriodicFunction::real_from_coeffs(rlat, coeffs).unwrap()
}

#[test]
fn criterion_7_oracle_equivalences() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rlat = Lattice::fcc(A).unwrap().reciprocal().unwrap();
    let volume = rlat.cell_volume();

    // Coulomb energy against trapezoidal quadrature of (f * G_1) g, exact for
    // trigonometric polynomials once the grid exceeds twice the largest index.
    let mut coulomb_rel: f64 = 0.0;
    for _ in 0..5 {
        let f = random_neutral(&rlat, &mut rng, 2);
        let g = random_neutral(&rlat, &mut rng, 2);
        let n = 9;
        let u = hartree(&f).unwrap().eval_on_grid(n);
        let gv = g.eval_on_grid(n);
        let quad: f64 = u
            .iter()
            .zip(&gv)
            .map(|(a, b)| (a * b.conj()).re)
            .sum::<f64>()
            * volume
            / (n * n * n) as f64;
        let d1 = coulomb_energy(&f, &g).unwrap();
        coulomb_rel = coulomb_rel.max((d1 - quad).abs() / quad.abs().max(d1.abs()));
    }

    // Autocorrelation against |u|^2 with u summed point by point.
    let basis = build_basis(&rlat, ev_to_hartree(60.0)).unwrap();
    let c: Vec<Complex64> = {
        let raw: Vec<Complex64> = (0..basis.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        raw.into_iter().map(|z| z / norm).collect()
    };
    let rho = basis.autocorrelate(&c);
    let n = 2 * rho.max_index().into_iter().max().unwrap() as usize + 1;
    let grid_vals = rho.eval_on_grid(n);
    let mut auto_err: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for j1 in 0..n {
        for j2 in 0..n {
            for j3 in 0..n {
                let mut u = Complex64::new(0.0, 0.0);
                for (m, cg) in basis.millers().iter().zip(&c) {
                    let t = (m[0] as f64 * j1 as f64
                        + m[1] as f64 * j2 as f64
                        + m[2] as f64 * j3 as f64)
                        / n as f64;
                    u += cg * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t);
                }
                let dens = u.norm_sqr() / volume;
                peak = peak.max(dens);
                auto_err = auto_err.max((grid_vals[(j1 * n + j2) * n + j3] - dens).norm());
            }
        }
    }
    let auto_rel = auto_err / peak;

    // Dense and iterative eigensolvers against Jacobi on a random Hermitian matrix.
    let m = DMatrix::from_fn(50, 50, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let oracle = jacobi_eigenvalues(&h);
    let dense = eigensolve_lowest(&h, 49).unwrap();
    let mut eig_err = dense
        .eigenvalues
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let iterative_opts = EigenOptions {
        method: EigenMethod::Iterative,
        tolerance: 1e-12,
        ..EigenOptions::default()
    };
    let iterative = solve_lowest(&h, 8, None, Default::default(), &iterative_opts).unwrap();
    eig_err = iterative
        .eigenvalues
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(eig_err, f64::max);

    // Free electrons: eigenvalues are the sorted kinetic energies.
    let zero = PeriodicFunction::zero(&rlat);
    let coupling = PotentialCoupling::new(&zero, &basis);
    let b = rlat.vectors();
    let mut free_err: f64 = 0.0;
    for f in [[0.0, 0.0, 0.0], [0.25, -0.125, 0.5], [0.5, 0.5, 0.5]] {
        let q = b[0] * f[0] + b[1] * f[1] + b[2] * f[2];
        let hq = FiberHamiltonian::new(q, &basis, &coupling);
        let sol = solve_lowest(&hq, 10, None, q, &EigenOptions::default()).unwrap();
        let mut kin: Vec<f64> = basis
            .gvecs()
            .iter()
            .map(|g| 0.5 * (g + q).norm_squared())
            .collect();
        kin.sort_by(f64::total_cmp);
        for (a, e) in sol.eigenvalues.iter().zip(&kin) {
            free_err = free_err.max((a - e).abs());
        }
    }

    let pass = coulomb_rel <= 1e-8 && auto_rel <= 1e-10 && eig_err <= 1e-10 && free_err <= 1e-12;
    report(
        7,
        "oracle equivalences",
        pass,
        &format!(
            "Coulomb rel {coulomb_rel:.1e}, autocorrelation rel {auto_rel:.1e}, \
             eigenvalues {eig_err:.1e}, free electrons {free_err:.1e}"
        ),
        t,
    );
}

#[test]
fn criterion_8_conservation() {
    let t = Instant::now();
    let (_, basis, vlin) = silicon(60.0);
    let rlat = basis.rlat().clone();
    let nocc = 4;

    // Neutrality of every SCF iterate, from a start away from the fixed point.
    let grid1 = kgrid(&rlat, 1).unwrap();
    let linear_cfg = SCFConfig {
        model: Model::Linear,
        ..SCFConfig::default()
    };
    let uniform = uniform_density(&basis, nocc);
    let lin1 = scf(&basis, &grid1, &vlin, &linear_cfg, &uniform).unwrap();
    let v_hf = rhf_pseudopotential(&vlin, &lin1.density).unwrap();
    let grid2 = kgrid(&rlat, 2).unwrap();
    let rhf_cfg = SCFConfig::default();
    let run = scf(&basis, &grid2, &v_hf, &rhf_cfg, &uniform).unwrap();
    let charge_err = run
        .log
        .iter()
        .map(|r| (r.charge - nocc as f64).abs())
        .chain(std::iter::once(
            (run.density.c0().re * rlat.cell_volume() - nocc as f64).abs(),
        ))
        .fold(0.0, f64::max);

    // D1(f, f) >= 0 on random neutral functions.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut min_d1 = f64::INFINITY;
    for _ in 0..100 {
        let f = random_neutral(&rlat, &mut rng, 2);
        min_d1 = min_d1.min(coulomb_energy(&f, &f).unwrap());
    }

    // A constant added to the potential shifts the energy by v nocc and leaves
    // the density alone, in both models.
    let shift = 0.3;
    let mut gauge_energy: f64 = 0.0;
    let mut gauge_density: f64 = 0.0;
    for (model, v) in [(Model::Linear, &vlin), (Model::Rhf, &v_hf)] {
        let cfg = SCFConfig {
            model,
            ..SCFConfig::default()
        };
        let base = scf(&basis, &grid2, v, &cfg, &uniform).unwrap();
        let moved = scf(&basis, &grid2, &v.shifted(shift), &cfg, &uniform).unwrap();
        gauge_energy = gauge_energy
            .max((moved.energy_per_cell - base.energy_per_cell - shift * nocc as f64).abs());
        gauge_density = gauge_density.max(moved.density.sub(&base.density).sup_norm_refined());
    }

    let pass =
        charge_err <= 1e-10 && min_d1 >= 0.0 && gauge_energy <= 1e-10 && gauge_density <= 1e-10;
    report(
        8,
        "conservation",
        pass,
        &format!(
            "{} SCF iterates, max |charge - nocc| {charge_err:.1e}; min D1(f, f) over 100 draws {min_d1:.3e}; \
             gauge shift {shift}: energy {gauge_energy:.1e}, density {gauge_density:.1e}",
            run.log.len()
        ),
        t,
    );
}

#[test]
fn desk_preset_system_builds() {
    let sys = system(&RunConfig::preset(Preset::SiFccDesk)).unwrap();
    assert_eq!(sys.basis.len(), 229);
}
