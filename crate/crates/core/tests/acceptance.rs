//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Runs at desk scale; see the CLI `--full-scale` flag for the larger runs.

use std::process::ExitCode;
use std::time::Instant;

use ogcs_core::bounds::{group_bound, lasso_bound, noisy_bound};
use ogcs_core::experiments::{run_noisy_trials, run_phase_sweep, run_scenario_suite, success_rate};
use ogcs_core::geometry_lab::{ball_bound_suite, chisq_suite, width_suite};
use ogcs_core::group_model::{make_scenario, sample_signal};
use ogcs_core::norms::{atomic_norm, dual_atomic_norm};
use ogcs_core::rng::rng_from_seed;
use ogcs_core::sensing::{gaussian_matrix, measure};
use ogcs_core::solver::{admm_oracle, block_soft_threshold, solve_group_lasso};
use ogcs_core::wavelet::{blocks_experiment, haar_forward, haar_inverse};
use ogcs_core::{ActiveSet, ExperimentConfig, Method, ScenarioKind, ScenarioParams, SolverConfig, ValueLaw, Vector};
use rand::Rng;
use rand_distr::StandardNormal;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn c1_bound_values() -> Outcome {
    let checks = [
        ("group(100,5,20)", group_bound(100, 5, 20).unwrap().raw, 379.5, 381.5),
        ("group(100,5,40)", group_bound(100, 5, 40).unwrap().raw, 620.0, 640.0),
        ("group(16382,47,2)", group_bound(16382, 47, 2).unwrap().raw, 1680.0, 1695.0),
        ("lasso(200,4000)", lasso_bound(200, 4000).unwrap().raw, 3300.0, 3310.0),
        ("lasso(44,139)", lasso_bound(44, 139).unwrap().raw, 400.0, 410.0),
    ];
    let pass = checks.iter().all(|&(_, v, lo, hi)| within(v, lo, hi));
    let detail = checks.iter().map(|(name, v, _, _)| format!("{name}={v:.2}")).collect::<Vec<_>>().join(" ");
    outcome(pass, detail)
}

fn c2_chisq() -> Outcome {
    let rows = chisq_suite(&[1, 2, 10, 95, 1000], &[1, 2, 20, 40], 10_000, 2).unwrap();
    let failed = rows.iter().filter(|r| !r.pass).count();
    let worst = rows.iter().map(|r| r.empirical / r.bound).fold(0.0, f64::max);
    outcome(
        failed == 0 && rows.len() == 20,
        format!("{} (L,d) pairs, {failed} failed, max empirical/bound = {worst:.4}", rows.len()),
    )
}

fn c3_ball_bound() -> Outcome {
    let rows = ball_bound_suite(20, 8, 10_000, 3).unwrap();
    let violations: usize = rows
        .iter()
        .map(|r| r.parameters.rsplit("violations=").next().and_then(|v| v.parse::<usize>().ok()).unwrap_or(usize::MAX))
        .sum();
    let worst = rows.iter().map(|r| r.empirical).fold(0.0, f64::max);
    outcome(
        violations == 0 && rows.iter().all(|r| r.pass) && rows.len() == 5,
        format!("5 scenarios x 10000 vectors, {violations} violations, worst ratio {worst:.4}"),
    )
}

fn c4_width() -> Outcome {
    let rows = width_suite(&[(20, 2, 10), (100, 5, 20)], 2000, 4).unwrap();
    let detail = rows
        .iter()
        .map(|r| format!("[{}] width^2={:.2} bound={:.2}", r.parameters, r.empirical, r.bound))
        .collect::<Vec<_>>()
        .join(" ");
    outcome(rows.iter().all(|r| r.pass), detail)
}

fn c5_solver_oracles() -> Outcome {
    let cfg = SolverConfig {
        max_iter: 200_000,
        rel_tol: 1e-13,
        admm_tol: 1e-12,
        admm_max_iter: 2_000_000,
        ..Default::default()
    };
    let overlapping: Vec<_> = ScenarioKind::ALL.into_iter().filter(|&k| k != ScenarioKind::Disjoint).collect();
    let mut worst: f64 = 0.0;
    let mut shapes_ok = true;
    let mut nonzero = 0;
    for inst in 0..20u64 {
        let kind = overlapping[inst as usize % overlapping.len()];
        let m = 4 + (inst as usize % 5);
        let b = 3 + (inst as usize % 3);
        let g = make_scenario(kind, m, b, ScenarioParams { overlap: 1 + inst as usize % 2, seed: inst }).unwrap();
        let p = g.p();
        let n = p.div_ceil(2) + (inst as usize % 4);
        shapes_ok &= p <= 40 && g.num_groups() <= 8 && 2 * n >= p && !g.is_disjoint();
        let e = gaussian_matrix(n, p, 500 + inst).unwrap();
        let a = ActiveSet::random(&g, 2, inst).unwrap();
        let x = sample_signal(&a, ValueLaw::UniformSymmetric, inst).x;
        let y = measure(&e, &x, 0.02 * (e.matrix() * &x).norm(), inst).unwrap();
        let lmax = dual_atomic_norm(&e.matrix().tr_mul(&y.y), &g).unwrap();
        let lambda = 0.05 * lmax;
        let s = solve_group_lasso(&e, &y, &g, lambda, &cfg).unwrap();
        let o = admm_oracle(&e, &y, &g, lambda, &cfg).unwrap();
        worst = worst.max((s.objective - o.objective).abs() / o.objective.abs());
        if s.x_hat.norm() > 0.0 {
            nonzero += 1;
        }
    }
    outcome(
        shapes_ok && nonzero == 20 && worst <= 1e-6,
        format!("20 overlapping instances ({nonzero} with nonzero solution), max relative objective gap {worst:.2e}"),
    )
}

fn c6_phase_transition() -> Outcome {
    let mut cfg = ExperimentConfig::desk_lasso_comparison();
    let n = cfg.group_bound_measurements().unwrap();
    cfg.n_grid = vec![n];
    let recs = run_phase_sweep(&cfg).unwrap();
    let group = success_rate(&recs, Method::Group, n).unwrap();
    let lasso = success_rate(&recs, Method::Lasso, n).unwrap();
    outcome(
        n == 82 && group >= 0.9 && group > lasso,
        format!("n={n}, {} paired trials: group {group:.2}, lasso {lasso:.2}", cfg.trials),
    )
}

fn c7_universality() -> Outcome {
    let configs: Vec<_> = ScenarioKind::ALL.iter().map(|&k| ExperimentConfig::desk_scenario(k)).collect();
    let recs = run_scenario_suite(&configs).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for cfg in &configs {
        let n = cfg.group_bound_measurements().unwrap();
        let tag = cfg.scenario.tag();
        let rs: Vec<_> = recs.iter().filter(|r| r.scenario == tag).collect();
        let rate = rs.iter().filter(|r| r.success).count() as f64 / rs.len() as f64;
        pass &= rate >= 0.9;
        parts.push(format!("{tag}@{n}={rate:.2}"));
    }
    outcome(pass, parts.join(" "))
}

fn c8_wavelet() -> Outcome {
    let report = blocks_experiment(1024, 8, &SolverConfig::default()).unwrap();
    outcome(
        report.m == 1022 && report.relative_error <= 1e-3,
        format!(
            "p=1024 M={} k={} n={} rel_error={:.2e}",
            report.m, report.groups.cover, report.n, report.relative_error
        ),
    )
}

fn c9_hygiene() -> Outcome {
    let mut rng = rng_from_seed(9);
    let mut normal = |len: usize| Vector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal));

    let mut haar_worst: f64 = 0.0;
    for p in [4usize, 64, 1024] {
        let x = normal(p);
        let c = haar_forward(&x, p.trailing_zeros() as usize).unwrap();
        haar_worst = haar_worst.max((haar_inverse(&c) - &x).norm() / x.norm());
        haar_worst = haar_worst.max((c.as_vector().norm_squared() - x.norm_squared()).abs() / x.norm_squared());
    }

    let part = make_scenario(ScenarioKind::Disjoint, 6, 5, ScenarioParams::default()).unwrap();
    let mut partition_worst: f64 = 0.0;
    for _ in 0..20 {
        let x = normal(part.p());
        let expected: f64 = (0..part.num_groups()).map(|g| part.group_norm(&x, g)).sum();
        let (value, _) = atomic_norm(&x, &part, 1e-12).unwrap();
        partition_worst = partition_worst.max((value - expected).abs() / expected);
    }

    let chain = make_scenario(ScenarioKind::Chain, 5, 4, ScenarioParams { overlap: 2, seed: 0 }).unwrap();
    let mut duality_violations = 0usize;
    for i in 0..10_000 {
        let g = if i % 2 == 0 { &chain } else { &part };
        let x = normal(g.p());
        let u = normal(g.p());
        let (norm, _) = atomic_norm(&x, g, 1e-8).unwrap();
        if x.dot(&u) > norm * dual_atomic_norm(&u, g).unwrap() * (1.0 + 1e-9) {
            duality_violations += 1;
        }
    }

    let mut bst_worst: f64 = 0.0;
    let mut taus = rng_from_seed(10);
    for _ in 0..1000 {
        let v = normal(7);
        let tau = taus.random_range(0.0..3.0);
        let got = block_soft_threshold(&v, tau);
        let norm = v.norm();
        let expected = if norm <= tau { Vector::zeros(7) } else { &v * ((norm - tau) / norm) };
        bst_worst = bst_worst.max((got - expected).amax() / norm.max(1.0));
    }

    let pass =
        haar_worst <= 1e-10 && partition_worst <= 1e-8 && duality_violations == 0 && bst_worst <= 4.0 * f64::EPSILON;
    outcome(
        pass,
        format!(
            "haar {haar_worst:.1e}, partition norm {partition_worst:.1e}, duality violations {duality_violations}/10000, soft threshold {bst_worst:.1e}"
        ),
    )
}

fn c10_noisy() -> Outcome {
    let cfg = ExperimentConfig::desk_lasso_comparison();
    let recs = run_noisy_trials(&cfg, 0.5, 0.01).unwrap();
    let within = recs.iter().filter(|r| r.within).count();
    let worst = recs.iter().map(|r| r.error / r.guarantee).fold(0.0, f64::max);
    let rate = within as f64 / recs.len() as f64;
    outcome(
        recs.len() == 50 && rate >= 0.9,
        format!(
            "n={} ({} trials): {within} within 2δ/ε, worst error/guarantee {worst:.3}",
            noisy_bound(cfg.m, cfg.k, cfg.b, 0.5).unwrap().measurements,
            recs.len()
        ),
    )
}

fn main() -> ExitCode {
    // The harness passes filter and flag arguments; a `--list` request gets an empty list.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [Criterion; 10] = [
        ("bound values", c1_bound_values),
        ("chi-square maximum", c2_chisq),
        ("ball bound", c3_ball_bound),
        ("width chain", c4_width),
        ("solver oracle equivalence", c5_solver_oracles),
        ("desk phase transition", c6_phase_transition),
        ("overlap universality", c7_universality),
        ("wavelet end-to-end", c8_wavelet),
        ("numerical hygiene", c9_hygiene),
        ("noisy recovery", c10_noisy),
    ];

    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<28} {} ({:.1}s) {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
