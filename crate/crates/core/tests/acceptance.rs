//! Acceptance criteria. Each test prints one `criterion N [PASS|FAIL]` line
//! with the measured quantity and wall time, then asserts.

use bibee::bem::{
    assemble_dstar, bibee_surface_charge, coulomb_field_rhs, estimate_spectrum,
    exact_surface_charge, reaction_energy, PanelSurface, SolverOptions,
};
use bibee::experiments::{
    random_sphere_config, run_comparison, write_rows_csv, write_summary_csv, ExperimentConfig,
};
use bibee::harmonics::{source_moments, CoefficientKind, MultipoleCoefficients};
use bibee::sphere::{
    bibee_reaction_coefficients, bibee_reaction_coefficients_per_mode, gb_epsilon_energy,
    kirkwood_reaction_coefficients, pair_interaction_kirkwood, sphere_gb_parameters, BibeeVariant,
    SphereSolver,
};
use bibee::{Charge, ChargeDistribution, DielectricPair, Method, SphereModel, COULOMB_CONSTANT};
use num_complex::Complex64;
use std::time::{Duration, Instant};

fn verdict(id: u32, title: &str, start: Instant, limit_s: u64, pass: bool, detail: String) {
    let elapsed = start.elapsed();
    let in_time = elapsed <= Duration::from_secs(limit_s);
    let ok = pass && in_time;
    println!(
        "criterion {id} [{}] {title}: {detail} ({:.2} s, limit {limit_s} s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded {limit_s} s: {elapsed:?}");
}

fn eps(a: f64, b: f64) -> DielectricPair {
    DielectricPair::new(a, b).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

const ANALYTIC: [Method; 5] = [
    Method::Kirkwood,
    Method::Cfa,
    Method::P,
    Method::Lambda(-0.2),
    Method::M(-0.2),
];

fn reaction(
    e: &MultipoleCoefficients,
    model: &SphereModel,
    method: Method,
) -> MultipoleCoefficients {
    match method {
        Method::Kirkwood => kirkwood_reaction_coefficients(e, model).unwrap(),
        m => bibee_reaction_coefficients(e, model, BibeeVariant::from_method(m).unwrap()).unwrap(),
    }
}

#[test]
fn criterion_01_born_exactness() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for b in [0.5, 2.0, 5.0, 20.0] {
        for (e1, e2) in [(1.0, 80.0), (4.0, 80.0), (2.0, 2.5), (80.0, 1.0)] {
            for q in [1.0, -0.7] {
                let d = ChargeDistribution::new(vec![Charge::at(0.0, 0.0, 0.0, q)], "ion").unwrap();
                let model = SphereModel::new(b, eps(e1, e2), 25).unwrap();
                let born = -0.5 * COULOMB_CONSTANT * (1.0 / e1 - 1.0 / e2) * q * q / b;
                let solver = SphereSolver::new(&d, model).unwrap();
                for m in [Method::Kirkwood, Method::Cfa] {
                    worst = worst.max(rel(solver.energy(m).unwrap().value, born));
                }
            }
        }
    }
    verdict(
        1,
        "Born exactness",
        start,
        1,
        worst <= 1e-12,
        format!("max relative error {worst:.2e} (tol 1e-12)"),
    );
}

#[test]
fn criterion_02_equal_dielectric_identity() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let surface = PanelSurface::icosphere(cfg.sphere_radius, 2).unwrap();
    let mut nonzero = 0;
    let mut checked = 0;
    for e in [1.0, 4.0, 80.0] {
        let pair = eps(e, e);
        for index in 0..5 {
            let d = random_sphere_config(2, index, &cfg).unwrap();
            let model = SphereModel::new(cfg.sphere_radius, pair, 25).unwrap();
            let solver = SphereSolver::new(&d, model).unwrap();
            for m in ANALYTIC.into_iter().chain([Method::Gb, Method::GbEps]) {
                checked += 1;
                if solver.energy(m).unwrap().value != 0.0 {
                    nonzero += 1;
                }
            }
            let rhs = coulomb_field_rhs(&d, &surface, pair).unwrap();
            checked += rhs.len();
            nonzero += rhs.values().iter().filter(|v| **v != 0.0).count();
        }
    }
    verdict(
        2,
        "equal-dielectric identity",
        start,
        1,
        nonzero == 0,
        format!("{nonzero} nonzero of {checked} energies and surface-field values"),
    );
}

#[test]
fn criterion_03_bound_ordering() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        seed: 2024,
        num_configs: 1000,
        methods: vec![Method::Cfa, Method::P, Method::M(0.0)],
        ..Default::default()
    };
    let report = run_comparison(&cfg).unwrap();
    let mut violations = 0;
    let mut net_charged = 0;
    for (index, rows) in report.rows.chunks(4).enumerate() {
        let [k, cfa, p, m] = [0, 1, 2, 3].map(|i| rows[i].energy_kcal_mol);
        let slack = 1e-10 * k.abs();
        let mut ok = cfa >= k - slack && k >= p - slack;
        let d = random_sphere_config(cfg.seed, index, &cfg).unwrap();
        if d.net_charge().abs() > 1e-12 {
            net_charged += 1;
            ok &= p <= m + slack && m <= k + slack;
        }
        violations += usize::from(!ok);
    }
    verdict(
        3,
        "bound ordering",
        start,
        30,
        violations == 0 && report.bound_violations == 0,
        format!("{violations} violations over 1000 configs ({net_charged} net-charged)"),
    );
}

#[test]
fn criterion_04_eigenfunction_preservation() {
    let start = Instant::now();
    let n_max = 8;
    let model = SphereModel::new(5.0, eps(4.0, 80.0), n_max).unwrap();
    let mut worst: f64 = 0.0;
    for n in 0..=6usize {
        for m in -(n as i64)..=n as i64 {
            let e = MultipoleCoefficients::single_mode(
                n_max,
                n,
                m,
                Complex64::new(0.7, -0.3),
                CoefficientKind::SourceE,
            )
            .unwrap();
            for method in ANALYTIC {
                let b = reaction(&e, &model, method);
                let on = b.get(n, m).unwrap().norm();
                assert!(on > 0.0);
                let off = b
                    .iter()
                    .filter(|&((nn, mm), _)| (nn, mm) != (n, m))
                    .map(|(_, c)| c.norm())
                    .fold(0.0, f64::max);
                worst = worst.max(off / on);
            }
        }
    }
    verdict(
        4,
        "eigenfunction preservation",
        start,
        5,
        worst <= 1e-12,
        format!("max off-mode/on-mode ratio {worst:.2e} (tol 1e-12)"),
    );
}

#[test]
fn criterion_05_asymptotic_ratios() {
    let start = Instant::now();
    let n_max = 10;
    let model = SphereModel::new(5.0, eps(1.0, 1e8), n_max).unwrap();
    let mut worst: f64 = 0.0;
    for n in 0..=n_max {
        let e = MultipoleCoefficients::single_mode(
            n_max,
            n,
            0,
            Complex64::new(1.0, 0.0),
            CoefficientKind::SourceE,
        )
        .unwrap();
        let k = reaction(&e, &model, Method::Kirkwood).get(n, 0).unwrap().re;
        let nf = n as f64;
        for (method, expected) in [
            (Method::Cfa, (nf + 1.0) / (2.0 * nf + 1.0)),
            (Method::P, (nf + 1.0) / (nf + 0.5)),
        ] {
            let ratio = reaction(&e, &model, method).get(n, 0).unwrap().re / k;
            worst = worst.max(rel(ratio, expected));
        }
    }
    verdict(
        5,
        "asymptotic ratios",
        start,
        1,
        worst <= 1e-6,
        format!("max relative deviation {worst:.2e} (tol 1e-6)"),
    );
}

#[test]
fn criterion_06_per_mode_exact_recovery() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let mut worst: f64 = 0.0;
    for (e1, e2) in [(1.0, 80.0), (4.0, 80.0), (80.0, 2.0)] {
        let model = SphereModel::new(cfg.sphere_radius, eps(e1, e2), 30).unwrap();
        for index in 0..3 {
            let d = random_sphere_config(6, index, &cfg).unwrap();
            let e = source_moments(&d, 30).unwrap();
            let kirk = kirkwood_reaction_coefficients(&e, &model).unwrap();
            let per_mode = bibee_reaction_coefficients_per_mode(&e, &model, |n| {
                -1.0 / (2.0 * (2 * n + 1) as f64)
            })
            .unwrap();
            for ((_, a), (_, b)) in per_mode.iter().zip(kirk.iter()) {
                if b.norm() > 0.0 {
                    worst = worst.max((a - b).norm() / b.norm());
                }
            }
        }
    }
    verdict(
        6,
        "per-mode exact recovery",
        start,
        1,
        worst <= 1e-13,
        format!("max relative coefficient error {worst:.2e} (tol 1e-13)"),
    );
}

#[test]
fn criterion_07_pairwise_consistency() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let model = SphereModel::new(cfg.sphere_radius, eps(4.0, 80.0), 60).unwrap();
    let mut worst: f64 = 0.0;
    for index in 0..100 {
        let d = random_sphere_config(7, index, &cfg).unwrap();
        let q = d.charges();
        let mut pairs = Vec::with_capacity(q.len() * q.len());
        for a in q {
            for b in q {
                pairs.push(pair_interaction_kirkwood(a, b, &model).unwrap());
            }
        }
        pairs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        let pair_total = 0.5 * pairs.iter().sum::<f64>();
        let direct = SphereSolver::new(&d, model)
            .unwrap()
            .energy(Method::Kirkwood)
            .unwrap()
            .value;
        worst = worst.max(rel(pair_total, direct));
    }
    verdict(
        7,
        "pairwise consistency",
        start,
        30,
        worst <= 1e-10,
        format!("max relative difference {worst:.2e} over 100 configs (tol 1e-10)"),
    );
}

#[test]
fn criterion_08_bem_convergence() {
    let start = Instant::now();
    let b = 5.0;
    let pair = eps(4.0, 80.0);
    let d = ChargeDistribution::new(vec![Charge::at(1.2, -0.8, 2.0, 1.0)], "off-centre").unwrap();
    let model = SphereModel::new(b, pair, 25).unwrap();
    let analytic = SphereSolver::escalated(&d, model).unwrap();
    let reference = analytic.energy(Method::Kirkwood).unwrap().value;
    let variants = [BibeeVariant::Cfa, BibeeVariant::P, BibeeVariant::M(0.0)];
    let mut exact_errors = Vec::new();
    let mut variant_errors = Vec::new();
    for level in [2, 3, 4] {
        let s = PanelSurface::icosphere(b, level).unwrap();
        let rhs = coulomb_field_rhs(&d, &s, pair).unwrap();
        let k = assemble_dstar(&s);
        let sigma = exact_surface_charge(&rhs, &k, pair, &SolverOptions::default()).unwrap();
        let e = reaction_energy(&sigma, &s, &d).unwrap().value;
        exact_errors.push(rel(e, reference));
        let worst = variants
            .iter()
            .map(|&v| {
                let sigma = bibee_surface_charge(&rhs, &s, pair, v).unwrap();
                let bem = reaction_energy(&sigma, &s, &d).unwrap().value;
                rel(bem, analytic.energy(v.method()).unwrap().value)
            })
            .fold(0.0, f64::max);
        variant_errors.push(worst);
    }
    let monotone = exact_errors.windows(2).all(|w| w[1] < w[0]);
    let pass = monotone && exact_errors[2] < 0.02 && variant_errors[2] < 0.02;
    verdict(
        8,
        "BEM convergence",
        start,
        120,
        pass,
        format!(
            "exact rel. errors 320/1280/5120 = {:.2e}/{:.2e}/{:.2e}; BIBEE variants {:.2e}/{:.2e}/{:.2e}",
            exact_errors[0], exact_errors[1], exact_errors[2], variant_errors[0], variant_errors[1], variant_errors[2]
        ),
    );
}

#[test]
fn criterion_09_discrete_spectrum() {
    let start = Instant::now();
    let s = PanelSurface::icosphere(5.0, 4).unwrap();
    assert_eq!(s.len(), 5120);
    let k = assemble_dstar(&s);
    let est = estimate_spectrum(&s, &k, 100);
    let pass = (est.lowest + 0.5).abs() <= 0.02
        && est.highest.abs() <= 0.02
        && (est.dipole + 1.0 / 6.0).abs() <= 0.02;
    verdict(
        9,
        "discrete operator spectrum",
        start,
        120,
        pass,
        format!(
            "lowest {:.4} (target -0.5), highest {:.4} (target 0), dipole {:.4} (target -0.1667)",
            est.lowest, est.highest, est.dipole
        ),
    );
}

#[test]
fn criterion_10_gbeps_alpha() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        seed: 42,
        charges_per_config: 2,
        eps_in: 1.0,
        eps_out: 80.0,
        ..Default::default()
    };
    let model = SphereModel::new(cfg.sphere_radius, eps(1.0, 80.0), 150).unwrap();
    let alphas = [0.57, 0.0, 1.0];
    let mut errors = [0.0; 3];
    for index in 0..100 {
        let d = random_sphere_config(cfg.seed, index, &cfg).unwrap();
        let q = d.charges();
        let reference: f64 = 0.5
            * q.iter()
                .flat_map(|a| q.iter().map(move |b| (a, b)))
                .map(|(a, b)| pair_interaction_kirkwood(a, b, &model).unwrap())
                .sum::<f64>();
        let params = sphere_gb_parameters(&d, &model).unwrap();
        for (err, alpha) in errors.iter_mut().zip(alphas) {
            let gb = gb_epsilon_energy(&d, &params.with_alpha(alpha).unwrap(), model.dielectrics())
                .unwrap()
                .value;
            *err += rel(gb, reference) / 100.0;
        }
    }
    verdict(
        10,
        "GBε α = 0.57 beats α = 0 and α = 1",
        start,
        10,
        errors[0] < errors[1] && errors[0] < errors[2],
        format!(
            "mean relative error α=0.57: {:.4}, α=0: {:.4}, α=1: {:.4}",
            errors[0], errors[1], errors[2]
        ),
    );
}

#[test]
fn criterion_11_determinism() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        seed: 11,
        num_configs: 50,
        methods: vec![Method::Cfa, Method::P, Method::M(-0.2), Method::GbEps],
        ..Default::default()
    };
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let report = run_comparison(&cfg).unwrap();
            let mut rows = Vec::new();
            write_rows_csv(&report, &mut rows).unwrap();
            write_summary_csv(&report.summary, &mut rows).unwrap();
            rows
        })
    };
    let first = render(1);
    let identical = [1, 3].iter().all(|&t| render(t) == first);
    verdict(
        11,
        "determinism",
        start,
        10,
        identical,
        format!(
            "{} CSV bytes, identical across 3 runs with 1 and 3 threads: {identical}",
            first.len()
        ),
    );
}
