use ogcs_core::experiments::{emit_csv, records_to_csv, run_phase_sweep, summarize, CSV_HEADER};
use ogcs_core::{ExperimentConfig, Method};

#[test]
fn single_trial_csv_is_byte_identical() {
    let mut cfg = ExperimentConfig::desk_lasso_comparison();
    cfg.trials = 1;
    cfg.n_grid = vec![40, 82];
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    emit_csv(&run_phase_sweep(&cfg).unwrap(), &a).unwrap();
    emit_csv(&run_phase_sweep(&cfg).unwrap(), &b).unwrap();
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines.iter().all(|l| l.split(',').count() == 8));
}

#[test]
fn one_record_gives_two_lines() {
    let mut cfg = ExperimentConfig::desk_lasso_comparison();
    cfg.trials = 1;
    cfg.n_grid = vec![30];
    cfg.methods = vec![Method::Group];
    let csv = records_to_csv(&run_phase_sweep(&cfg).unwrap());
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn desk_success_rate_is_monotone_in_n() {
    let cfg = ExperimentConfig::desk_lasso_comparison();
    let rows = summarize(&run_phase_sweep(&cfg).unwrap());
    for method in [Method::Group, Method::Lasso] {
        let series: Vec<_> = rows.iter().filter(|r| r.method == method).collect();
        assert_eq!(series.len(), cfg.n_grid.len());
        for w in series.windows(2) {
            let slack = w[0].success_std_error.max(w[1].success_std_error);
            assert!(
                w[1].success_rate + slack >= w[0].success_rate,
                "{method}: n={} rate {} then n={} rate {}",
                w[0].n,
                w[0].success_rate,
                w[1].n,
                w[1].success_rate
            );
        }
        assert_eq!(series.first().unwrap().success_rate, 0.0);
        assert_eq!(series.last().unwrap().success_rate, 1.0);
    }
}
