use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textspread_core::attribution::{
    enumerate_shapley, explained_variance, metatopic_series, normalized_importance, shap_linear, shap_regression, LinearModel,
    Link,
};
use textspread_core::econometrics::{run_forecast_battery, BatteryData, ForecastSpec};
use textspread_core::lasso::LassoConfig;
use textspread_core::projector::{expanding_project, ProjectionMode};
use textspread_core::syndata::{gen_attention, gen_macro, gen_metatopics, SynthConfig};
use textspread_core::{TimeSeries, Window};

#[test]
fn enumeration_equals_linear_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=8 {
        let rows = 12;
        let x: Vec<f64> = (0..rows * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let s = shap_linear(&x, n, &w).unwrap();
        for i in 0..rows {
            let xi = &x[i * n..(i + 1) * n];
            let f = |mask: &[bool]| {
                (0..n)
                    .map(|j| w[j] * if mask[j] { xi[j] } else { s.means[j] })
                    .sum::<f64>()
            };
            let brute = enumerate_shapley(n, f).unwrap();
            for (a, b) in brute.iter().zip(s.row(i)) {
                assert!((a - b).abs() < 1e-12, "n={n} row {i}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn importance_sums_to_one_hundred() {
    let imp = normalized_importance(&[0.3, 1e-9, 7.1, 2.0]).unwrap();
    assert!((imp.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    assert!(normalized_importance(&[0.0, 0.0]).is_err());
}

#[test]
fn probit_attributions_add_up() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x: Vec<f64> = (0..40 * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let m = LinearModel {
        intercept: 0.3,
        weights: vec![1.2, -0.4, 2.0],
        link: Link::Probit,
    };
    let s = shap_regression(&m, &x, 3).unwrap();
    for (i, row) in x.chunks(3).enumerate() {
        assert!((s.row(i).iter().sum::<f64>() - (m.predict(row) - s.base)).abs() < 1e-10);
    }
}

struct Setup {
    attention: textspread_core::FeatureFrame,
    target: TimeSeries,
    projection: textspread_core::projector::ProjectionRun,
    macro_series: Vec<TimeSeries>,
    partition: Vec<(String, Vec<usize>)>,
}

fn setup() -> Setup {
    let cfg = SynthConfig {
        seed: 9,
        months: 160,
        topics: 36,
        sparsity: 6,
        metatopics: 4,
        ..Default::default()
    };
    let att = gen_attention(&cfg).unwrap();
    let training = Window::new(cfg.start, cfg.start.offset(95)).unwrap();
    let mut projection =
        expanding_project(&att.attention, &att.target, training, ProjectionMode::Oos, &LassoConfig::default()).unwrap();
    projection.series.points.retain(|p| p.date > training.end);
    let partition = gen_metatopics(&cfg).unwrap().partition(att.attention.names()).unwrap();
    Setup {
        attention: att.attention.clone(),
        target: att.target.clone(),
        macro_series: gen_macro(&cfg, &att).unwrap(),
        projection,
        partition,
    }
}

#[test]
fn battery_attributions_add_up() {
    let s = setup();
    let mut data = BatteryData::default();
    for m in &s.macro_series {
        data.insert(m.clone());
    }
    let hat = s.projection.series.to_series().with_name("EBP_hat");
    let res = TimeSeries::monthly(
        "EBP_hat-RES",
        hat.observations().iter().map(|&(m, v)| (m, s.target.get(m).unwrap() - v)).collect(),
    )
    .unwrap();
    data.insert(hat);
    data.insert(res);
    data.groups.insert("controls".into(), vec!["TS".into(), "RFF".into()]);
    let regs = ["EBP_hat", "GZF", "EBP_hat-RES", "controls"];
    let specs = vec![
        ForecastSpec::ols("emp_h3", "EMP", 3, &regs),
        ForecastSpec::ols("uer_h12", "UER", 12, &regs),
        ForecastSpec::ols("gdp_h1", "GDP", 1, &regs),
        ForecastSpec::probit("rec_h12", "NBER", 12, &["EBP_hat", "TS"]),
    ];
    let outcomes = run_forecast_battery(&specs, &data);
    for o in outcomes {
        let fit = o.result.unwrap_or_else(|e| panic!("{}: {e}", o.spec));
        let model = fit.linear_model();
        let shap = fit.shap_values().unwrap();
        let feats = fit.features();
        for (i, row) in feats.chunks(shap.n_features).enumerate() {
            let total: f64 = shap.row(i).iter().sum();
            assert!((total - (model.predict(row) - shap.base)).abs() < 1e-10, "{} row {i}", fit.spec);
        }
        let pct: f64 = fit.shap.iter().map(|p| p.1).sum();
        assert!((pct - 100.0).abs() < 1e-9, "{}: {pct}", fit.spec);
    }
}

#[test]
fn decomposition_identities() {
    let s = setup();
    let stale = s.projection.stale_weights();
    let dec = metatopic_series(&s.attention, &stale, &s.partition).unwrap();
    assert_eq!(dec.months.len(), s.projection.series.points.len());
    for (i, p) in s.projection.series.points.iter().enumerate() {
        let sw = &stale[&p.date];
        let row = s.attention.row_at(p.date).unwrap();
        let scale = sw.intercept.abs() + sw.weights.iter().zip(row).map(|(w, v)| (w * v).abs()).sum::<f64>();
        let sum = sw.intercept + dec.row(i).iter().sum::<f64>();
        assert!((sum - p.value).abs() <= 8.0 * f64::EPSILON * scale, "{}: {sum} vs {}", p.date, p.value);
    }

    let last = &s.projection.log.last().unwrap().fit.weights;
    let h = explained_variance(&s.attention, last, &s.partition).unwrap();
    assert!((h.iter().map(|x| x.1).sum::<f64>() - 100.0).abs() < 1e-9);

    let by_month: BTreeMap<_, _> = s.projection.series.to_series().to_map();
    let gzf = s.macro_series.iter().find(|m| m.name == "GZF").unwrap();
    for (m, hat) in by_month {
        let y = s.target.get(m).unwrap();
        let res = y - hat;
        let g = gzf.get(m).unwrap();
        let lhs = g + hat + res;
        assert!((lhs - (g + y)).abs() <= 4.0 * f64::EPSILON * (g.abs() + hat.abs() + res.abs()), "{m}");
    }
}
