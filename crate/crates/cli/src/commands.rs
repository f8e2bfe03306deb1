use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ogcs_core::bounds::{chisq_max_report, group_bound, lasso_bound, noisy_bound, BoundInputs, BoundKind, BoundReport};
use ogcs_core::experiments::{
    emit_csv, emit_svg_plot, lemmas_to_csv, run_phase_sweep, run_scenario_suite, success_rate, summaries_to_csv,
    summarize, BoundMarker,
};
use ogcs_core::geometry_lab::{ball_bound_suite, chisq_suite, width_suite};
use ogcs_core::group_model::{make_scenario, sample_signal};
use ogcs_core::rng::{derive_seed, label};
use ogcs_core::sensing::{gaussian_matrix, measure};
use ogcs_core::solver::{lasso_recover, recover as recover_signal};
use ogcs_core::wavelet::blocks_experiment;
use ogcs_core::{
    ActiveSet, Error, ExperimentConfig, GroupStructure, Method, RecoveryMode, Result, ScenarioKind, ScenarioParams,
    SolverConfig,
};
use serde::{Deserialize, Serialize};

use crate::{BoundArgs, Common, RecoverArgs, WaveletArgs};

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn solver_config(common: &Common) -> Result<SolverConfig> {
    let cfg = match &common.config {
        Some(path) => read_json(path)?,
        None => SolverConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Deserialize)]
struct BoundRequest {
    kind: BoundKind,
    #[serde(flatten)]
    inputs: BoundInputs,
}

fn missing(name: &str) -> Error {
    Error::InvalidParameter(format!("--{name} is required for this bound"))
}

fn evaluate(kind: BoundKind, i: &BoundInputs) -> Result<BoundReport> {
    let m = || i.m.ok_or_else(|| missing("groups"));
    let k = || i.k.ok_or_else(|| missing("k"));
    let b = || i.b.ok_or_else(|| missing("group-size"));
    match kind {
        BoundKind::Group => group_bound(m()?, k()?, b()?),
        BoundKind::Noisy => noisy_bound(m()?, k()?, b()?, i.epsilon.ok_or_else(|| missing("epsilon"))?),
        BoundKind::Lasso => lasso_bound(i.s.ok_or_else(|| missing("s"))?, i.p.ok_or_else(|| missing("p"))?),
        BoundKind::ChisqMax => chisq_max_report(i.l.ok_or_else(|| missing("count"))?, i.d.ok_or_else(|| missing("d"))?),
    }
}

/// Reference values the bound formulas must reproduce.
fn reference_bounds() -> Result<Vec<(BoundReport, f64, f64)>> {
    Ok(vec![
        (group_bound(100, 5, 20)?, 379.5, 381.5),
        (group_bound(100, 5, 40)?, 620.0, 640.0),
        (group_bound(16382, 47, 2)?, 1680.0, 1695.0),
        (lasso_bound(200, 4000)?, 3300.0, 3310.0),
        (lasso_bound(44, 139)?, 400.0, 410.0),
    ])
}

pub fn bound(common: &Common, args: &BoundArgs) -> Result<bool> {
    let requests: Vec<BoundRequest> = match (&common.config, args.kind) {
        (Some(path), _) => read_json(path)?,
        (None, Some(kind)) => vec![BoundRequest {
            kind,
            inputs: BoundInputs {
                m: args.m,
                k: args.k,
                b: args.b,
                s: args.s,
                p: args.p,
                epsilon: args.epsilon,
                l: args.l,
                d: args.d,
            },
        }],
        (None, None) if common.check => Vec::new(),
        (None, None) => return Err(Error::InvalidParameter("--kind or --config is required".into())),
    };
    let reports = requests.iter().map(|r| evaluate(r.kind, &r.inputs)).collect::<Result<Vec<_>>>()?;
    if reports.len() == 1 {
        print_json(&reports[0])?;
    } else if !reports.is_empty() {
        print_json(&reports)?;
    }
    if !common.check {
        return Ok(true);
    }
    let mut pass = true;
    for (report, lo, hi) in reference_bounds()? {
        let ok = (lo..=hi).contains(&report.raw);
        pass &= ok;
        println!(
            "{:?} {} = {:.2} in [{lo}, {hi}]: {}",
            report.kind,
            serde_json::to_string(&report.inputs)?,
            report.raw,
            if ok { "pass" } else { "FAIL" }
        );
    }
    Ok(pass)
}

#[derive(Debug, Serialize)]
struct RecoverSummary {
    p: usize,
    groups: usize,
    k: usize,
    n: usize,
    group_bound: f64,
    noise_delta: f64,
    group_rel_error: f64,
    group_converged: bool,
    group_feasible: bool,
    group_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    lasso_rel_error: Option<f64>,
}

pub fn recover(common: &Common, args: &RecoverArgs) -> Result<bool> {
    let solver = solver_config(common)?;
    let seed = common.seed.unwrap_or(1);
    let structure = match &args.structure {
        Some(path) => GroupStructure::load(path)?,
        None => make_scenario(args.scenario, args.m, args.b, ScenarioParams { overlap: args.overlap, seed })?,
    };
    for w in structure.validation_warnings() {
        eprintln!("warning: {w}");
    }
    let bound = group_bound(structure.num_groups(), args.k, structure.max_group_size())?;
    let n = args.n.unwrap_or(bound.measurements as usize);
    let active = ActiveSet::random(&structure, args.k, derive_seed(seed, &[label("active")]))?;
    let x_star = sample_signal(&active, args.law, derive_seed(seed, &[label("signal")])).x;
    let ensemble = gaussian_matrix(n, structure.p(), derive_seed(seed, &[label("matrix")]))?;
    let delta = args.noise * (ensemble.matrix() * &x_star).norm();
    let obs = measure(&ensemble, &x_star, delta, derive_seed(seed, &[label("noise")]))?;
    let mode = if delta > 0.0 { RecoveryMode::Noisy { delta } } else { RecoveryMode::Exact };
    let group = recover_signal(&ensemble, &obs, &structure, &solver, mode)?.with_truth(&x_star);
    let lasso =
        if args.lasso { Some(lasso_recover(&ensemble, &obs, &solver, mode)?.with_truth(&x_star)) } else { None };

    let mut csv =
        String::from(if lasso.is_some() { "index,x_star,x_group,x_lasso\n" } else { "index,x_star,x_group\n" });
    for i in 0..structure.p() {
        let _ = write!(csv, "{i},{:.12e},{:.12e}", x_star[i], group.x_hat[i]);
        if let Some(l) = &lasso {
            let _ = write!(csv, ",{:.12e}", l.x_hat[i]);
        }
        csv.push('\n');
    }
    write_file(&common.out_dir(), "recover.csv", &csv)?;

    let summary = RecoverSummary {
        p: structure.p(),
        groups: structure.num_groups(),
        k: args.k,
        n,
        group_bound: bound.raw,
        noise_delta: delta,
        group_rel_error: group.relative_error.unwrap_or(f64::NAN),
        group_converged: group.converged,
        group_feasible: group.feasible,
        group_iterations: group.iterations,
        lasso_rel_error: lasso.as_ref().and_then(|l| l.relative_error),
    };
    print_json(&summary)?;
    Ok(!common.check
        || match mode {
            RecoveryMode::Exact => group.is_exact(solver.exact_recovery_threshold),
            RecoveryMode::Noisy { .. } => group.feasible,
        })
}

fn experiment_config(common: &Common, desk: ExperimentConfig, full: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => read_json(path)?,
        None if common.full_scale => full,
        None => desk,
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    if common.out.is_some() || cfg.output_dir.is_none() {
        cfg.output_dir = Some(common.out_dir());
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, common: &Common) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| common.out_dir())
}

pub fn phase(common: &Common) -> Result<bool> {
    let mut cfg = experiment_config(
        common,
        ExperimentConfig::desk_lasso_comparison(),
        ExperimentConfig::full_lasso_comparison(),
    )?;
    let n_bound = cfg.group_bound_measurements()?;
    if common.check && !cfg.n_grid.contains(&n_bound) {
        cfg.n_grid.push(n_bound);
        cfg.n_grid.sort_unstable();
    }
    cfg.validate()?;
    let dir = out_dir(&cfg, common);
    let records = run_phase_sweep(&cfg)?;
    let rows = summarize(&records);

    let structure = cfg.structure()?;
    let mut markers =
        vec![BoundMarker { n: group_bound(cfg.m, cfg.k, cfg.b)?.raw, label: format!("group bound {n_bound}") }];
    let s = cfg.k * cfg.b;
    if s < structure.p() {
        let lasso = lasso_bound(s, structure.p())?;
        markers.push(BoundMarker { n: lasso.raw, label: format!("lasso bound {}", lasso.measurements) });
    }
    emit_csv(&records, &dir.join("phase.csv"))?;
    emit_svg_plot(&records, &markers, &dir.join("phase.svg"))?;
    let summary = summaries_to_csv(&rows);
    write_file(&dir, "phase_summary.csv", &summary)?;
    write_file(&dir, "phase_config.json", &cfg.to_json()?)?;
    print!("{summary}");

    if !common.check {
        return Ok(true);
    }
    let group = success_rate(&records, Method::Group, n_bound);
    let lasso = success_rate(&records, Method::Lasso, n_bound);
    let pass = match (group, lasso) {
        (Some(g), Some(l)) => g >= 0.9 && g > l,
        (Some(g), None) => g >= 0.9,
        _ => false,
    };
    println!(
        "check at n = {n_bound}: group {} lasso {}: {}",
        group.map_or("n/a".into(), |r| format!("{r:.2}")),
        lasso.map_or("n/a".into(), |r| format!("{r:.2}")),
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}

pub fn scenarios(common: &Common) -> Result<bool> {
    let base = experiment_config(
        common,
        ExperimentConfig::desk_scenario(ScenarioKind::Disjoint),
        ExperimentConfig::full_scenario(ScenarioKind::Disjoint),
    )?;
    let configs: Vec<ExperimentConfig> =
        ScenarioKind::ALL.iter().map(|&kind| ExperimentConfig { scenario: kind, ..base.clone() }).collect();
    for cfg in &configs {
        cfg.structure()?;
    }
    let dir = out_dir(&base, common);
    let records = run_scenario_suite(&configs)?;
    let rows = summarize(&records);
    let mut markers: Vec<BoundMarker> = Vec::new();
    for cfg in &configs {
        let raw = group_bound(cfg.m, cfg.k, cfg.b)?.raw;
        if !markers.iter().any(|m| m.n == raw) {
            markers.push(BoundMarker { n: raw, label: format!("group bound {}", raw.ceil()) });
        }
    }
    emit_csv(&records, &dir.join("scenarios.csv"))?;
    emit_svg_plot(&records, &markers, &dir.join("scenarios.svg"))?;
    let summary = summaries_to_csv(&rows);
    write_file(&dir, "scenarios_summary.csv", &summary)?;
    print!("{summary}");
    let pass = rows.iter().filter(|r| r.method == Method::Group).all(|r| r.success_rate >= 0.9);
    if common.check {
        println!("check: every scenario >= 0.90 at its bound: {}", if pass { "pass" } else { "FAIL" });
    }
    Ok(!common.check || pass)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct LemmaConfig {
    chisq_l: Vec<usize>,
    chisq_d: Vec<usize>,
    chisq_trials: usize,
    ball_groups: usize,
    ball_group_size: usize,
    ball_vectors: usize,
    /// `(M, k, B)` triples on disjoint structures.
    width_configs: Vec<(usize, usize, usize)>,
    width_trials: usize,
    seed: u64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        LemmaConfig {
            chisq_l: vec![1, 2, 10, 95, 1000],
            chisq_d: vec![1, 2, 20, 40],
            chisq_trials: 10_000,
            ball_groups: 20,
            ball_group_size: 8,
            ball_vectors: 10_000,
            width_configs: vec![(20, 2, 10), (100, 5, 20)],
            width_trials: 2000,
            seed: 2,
        }
    }
}

pub fn lemmas(common: &Common) -> Result<bool> {
    let mut cfg: LemmaConfig = match &common.config {
        Some(path) => read_json(path)?,
        None if common.full_scale => LemmaConfig { ball_groups: 100, ball_group_size: 40, ..Default::default() },
        None => LemmaConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.chisq_trials = trials;
        cfg.ball_vectors = trials;
        cfg.width_trials = trials;
    }
    let mut records = chisq_suite(&cfg.chisq_l, &cfg.chisq_d, cfg.chisq_trials, cfg.seed)?;
    records.extend(ball_bound_suite(cfg.ball_groups, cfg.ball_group_size, cfg.ball_vectors, cfg.seed)?);
    records.extend(width_suite(&cfg.width_configs, cfg.width_trials, cfg.seed)?);
    let csv = lemmas_to_csv(&records);
    write_file(&common.out_dir(), "lemmas.csv", &csv)?;
    print!("{csv}");
    Ok(!common.check || records.iter().all(|r| r.pass))
}

#[derive(Debug, Serialize)]
struct WaveletSummary {
    p: usize,
    groups: usize,
    k_cover: usize,
    k_intersecting: usize,
    support: usize,
    n: usize,
    bound: f64,
    relative_error: f64,
    converged: bool,
}

pub fn wavelet_demo(common: &Common, args: &WaveletArgs) -> Result<bool> {
    let solver = solver_config(common)?;
    let p = args.p.unwrap_or(if common.full_scale { 16384 } else { 1024 });
    let report = blocks_experiment(p, common.seed.unwrap_or(8), &solver)?;
    let mut csv = String::from("index,original,reconstruction\n");
    for i in 0..p {
        let _ = writeln!(csv, "{i},{:.12e},{:.12e}", report.signal[i], report.reconstruction[i]);
    }
    write_file(&common.out_dir(), "wavelet.csv", &csv)?;
    print_json(&WaveletSummary {
        p,
        groups: report.m,
        k_cover: report.groups.cover,
        k_intersecting: report.groups.intersecting,
        support: report.groups.support,
        n: report.n,
        bound: report.bound_raw,
        relative_error: report.relative_error,
        converged: report.converged,
    })?;
    Ok(!common.check || report.relative_error <= 1e-3)
}
