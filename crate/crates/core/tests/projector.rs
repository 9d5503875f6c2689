use textspread_core::lasso::LassoConfig;
use textspread_core::pipeline::published_run;
use textspread_core::projector::{backward_project, expanding_project, fit_diagnostics, ProjectionMode};
use textspread_core::syndata::{gen_attention, SynthAttention, SynthConfig};
use textspread_core::{Month, TimeSeries, Window};

fn small(seed: u64) -> (SynthConfig, SynthAttention) {
    let cfg = SynthConfig {
        seed,
        months: 110,
        history_months: 30,
        topics: 40,
        sparsity: 5,
        ..Default::default()
    };
    let att = gen_attention(&cfg).unwrap();
    (cfg, att)
}

fn training(cfg: &SynthConfig) -> Window {
    Window::new(cfg.start, cfg.start.offset(69)).unwrap()
}

/// Adds a shift to every target value dated on or after `from`.
fn perturb(target: &TimeSeries, from: Month) -> TimeSeries {
    let obs = target
        .observations()
        .iter()
        .map(|&(m, v)| if m >= from { (m, v + 3.0 + 0.1 * m.ordinal() as f64 % 1.7) } else { (m, v) })
        .collect();
    TimeSeries::monthly(target.name.clone(), obs).unwrap()
}

fn values_through(run: &textspread_core::projector::ProjectionRun, to: Month) -> Vec<(Month, f64)> {
    run.series.points.iter().filter(|p| p.date <= to).map(|p| (p.date, p.value)).collect()
}

#[test]
fn oos_predictions_ignore_current_and_future_targets() {
    let lasso = LassoConfig::default();
    for seed in 0..20 {
        let (cfg, att) = small(seed);
        let tr = training(&cfg);
        let base = expanding_project(&att.attention, &att.target, tr, ProjectionMode::Oos, &lasso).unwrap();
        for k in [1, 7, 25] {
            let t = tr.end.offset(k);
            let moved = perturb(&att.target, t);
            let run = expanding_project(&att.attention, &moved, tr, ProjectionMode::Oos, &lasso).unwrap();
            assert_eq!(values_through(&run, t), values_through(&base, t), "seed {seed}, t {t}");
            assert!(run.series.points.iter().filter(|p| p.date > tr.end).all(|p| p.window_end < p.date));
        }
    }
}

#[test]
fn backward_predictions_ignore_targets_after_training() {
    let lasso = LassoConfig::default();
    for seed in 0..20 {
        let (cfg, att) = small(seed);
        let tr = training(&cfg);
        let base = backward_project(&att.attention, &att.target, tr, &lasso).unwrap();
        let moved = perturb(&att.target, tr.end.succ());
        let run = backward_project(&att.attention, &moved, tr, &lasso).unwrap();
        assert_eq!(run.series.points, base.series.points, "seed {seed}");
        assert_eq!(run.series.points.len(), cfg.history_months);
        assert!(run.series.points.iter().all(|p| p.date < tr.start));
    }
}

#[test]
fn training_months_share_one_fit() {
    let (cfg, att) = small(3);
    let tr = training(&cfg);
    for mode in [ProjectionMode::Is, ProjectionMode::Oos] {
        let run = expanding_project(&att.attention, &att.target, tr, mode, &LassoConfig::default()).unwrap();
        assert!(run.series.points.iter().filter(|p| p.date <= tr.end).all(|p| p.window_end == tr.end));
        let first = run.series.points.iter().find(|p| p.date > tr.end).unwrap();
        match mode {
            ProjectionMode::Is => assert_eq!(first.window_end, first.date),
            _ => assert_eq!(first.window_end, tr.end),
        }
    }
}

#[test]
fn published_oos_starts_after_training() {
    let (cfg, att) = small(4);
    let tr = training(&cfg);
    let run = published_run(&att.attention, &att.target, tr, ProjectionMode::Oos, None, &LassoConfig::default()).unwrap();
    assert_eq!(run.series.points[0].date, tr.end.succ());
    assert_eq!(run.series.points.last().unwrap().date, att.target.last_month().unwrap());
}

#[test]
fn in_sample_tracks_the_signal() {
    let (cfg, att) = small(5);
    let run = expanding_project(&att.attention, &att.target, training(&cfg), ProjectionMode::Is, &LassoConfig::default()).unwrap();
    let d = fit_diagnostics(&att.target_signal(), &run.series.to_series()).unwrap();
    assert!(d.r2 > 0.6, "{d:?}");
    assert_eq!(d.t, cfg.months);
}
