use discharge_core::dataset::{build_corpus, NoiseConfig, Split, TripRecord};
use discharge_core::domain::{DischargeSession, DrivingMode};
use discharge_core::eval::baselines::design_row;
use discharge_core::eval::{
    ablation_study, compute_metrics, consumption_stats, error_rows, evaluate_on, fit_linear_baseline, rate_rows,
    stratified_report, BaselinePredictor, Stratification,
};
use discharge_core::hybrid::{predict, NoClock};
use discharge_core::nn::{train, FeatureSet, TrainConfig};
use discharge_core::{NoiseComponents, SeededRng, Simulator};
use proptest::prelude::*;
use rand::Rng;

fn record(trip_id: usize, mode: DrivingMode, distance: f64, velocity: f64, temp: f64, truth: f64) -> TripRecord {
    TripRecord {
        trip_id,
        session: DischargeSession::new(0.8, distance, velocity, mode).with_ambient_temp(temp),
        max_velocity: velocity,
        physics_energy: truth,
        true_energy: truth,
        residual: 0.0,
        noise: NoiseComponents::default(),
        split: Split::Train,
    }
}

fn varied_records(n: usize, seed: u64, target: impl Fn(&DischargeSession) -> f64) -> Vec<TripRecord> {
    let mut rng = SeededRng::new(seed);
    (0..n)
        .map(|i| {
            let mode = DrivingMode::ALL[i % 3];
            let d = rng.random_range(20.0..200.0);
            let v = [40.0, 60.0, 80.0, 100.0, 120.0][rng.random_range(0..5)];
            let t = [20.0, -5.0, 32.0][rng.random_range(0..3)];
            let mut r = record(i, mode, d, v, t, 1.0);
            r.true_energy = target(&r.session);
            r
        })
        .collect()
}

#[test]
fn ols_recovers_exact_linear_target() {
    let records = varied_records(80, 1, |s| 0.2 * s.distance);
    let BaselinePredictor::Linear { coefficients } = fit_linear_baseline(&records).unwrap() else { panic!() };
    assert!((coefficients[1] - 0.2).abs() < 1e-6, "{coefficients:?}");
    for (i, c) in coefficients.iter().enumerate() {
        if i != 1 {
            assert!(c.abs() < 1e-5, "{coefficients:?}");
        }
    }
}

#[test]
fn ols_constant_target() {
    let records = varied_records(50, 2, |_| 7.5);
    let BaselinePredictor::Linear { coefficients } = fit_linear_baseline(&records).unwrap() else { panic!() };
    assert!((coefficients[0] - 7.5).abs() < 1e-6);
    assert!(coefficients[1..].iter().all(|c| c.abs() < 1e-6));
}

#[test]
fn ols_residuals_are_orthogonal_to_design() {
    let mut rng = SeededRng::new(3);
    let mut records = varied_records(200, 3, |s| 0.15 * s.distance + 0.01 * s.mean_velocity);
    for r in &mut records {
        r.true_energy += rng.random_range(-2.0..2.0);
    }
    let fit = fit_linear_baseline(&records).unwrap();
    let n = records.len() as f64;
    let mut xtr = [0.0; 6];
    for r in &records {
        let resid = r.true_energy - fit.predict(r).unwrap();
        for (acc, x) in xtr.iter_mut().zip(design_row(&r.session)) {
            *acc += x * resid;
        }
    }
    assert!(xtr.iter().all(|v| v.abs() / n < 1e-6), "{xtr:?}");
}

#[test]
fn single_mode_design_is_rank_deficient() {
    let records: Vec<_> = varied_records(60, 4, |s| s.distance).into_iter().filter(|r| r.session.mode == DrivingMode::Eco).collect();
    assert_eq!(fit_linear_baseline(&records), Err(discharge_core::Error::RankDeficient));
}

#[test]
fn strata_identities() {
    let records = varied_records(90, 5, |s| 0.2 * s.distance);
    let refs: Vec<&TripRecord> = records.iter().collect();
    let mut rng = SeededRng::new(5);
    let preds: Vec<f64> = records.iter().map(|r| r.true_energy * rng.random_range(0.8..1.2)).collect();
    for by in [Stratification::Mode, Stratification::VelocityBand] {
        let report = stratified_report(&preds, &refs, by).unwrap();
        let strata = report.strata.as_ref().unwrap();
        assert_eq!(strata.iter().map(|s| s.n).sum::<usize>(), report.n);
        let weighted: f64 = strata.iter().filter_map(|s| s.metrics.as_ref().map(|m| m.mae * s.n as f64)).sum();
        assert!((weighted / report.n as f64 - report.mae).abs() < 1e-9);
    }
}

#[test]
fn single_stratum_equals_overall_and_empty_strata_have_no_metrics() {
    let records: Vec<_> = (0..5).map(|i| record(i, DrivingMode::Normal, 50.0, 60.0, 20.0, 10.0 + i as f64)).collect();
    let refs: Vec<&TripRecord> = records.iter().collect();
    let preds: Vec<f64> = records.iter().map(|r| r.true_energy + 0.5).collect();
    let report = stratified_report(&preds, &refs, Stratification::Mode).unwrap();
    let strata = report.strata.clone().unwrap();
    let normal = strata.iter().find(|s| s.label == "normal").unwrap();
    let mut overall = report.clone();
    overall.strata = None;
    assert_eq!(normal.metrics.as_ref(), Some(&overall));
    assert!(strata.iter().filter(|s| s.label != "normal").all(|s| s.n == 0 && s.metrics.is_none()));
}

#[test]
fn velocity_band_edges() {
    let records: Vec<_> = [40.0, 59.999, 60.0, 120.0].iter().enumerate().map(|(i, &v)| record(i, DrivingMode::Eco, 10.0, v, 20.0, 1.0)).collect();
    let refs: Vec<&TripRecord> = records.iter().collect();
    let report = stratified_report(&[1.0; 4], &refs, Stratification::VelocityBand).unwrap();
    let ns: Vec<usize> = report.strata.unwrap().iter().map(|s| s.n).collect();
    assert_eq!(ns, [2, 1, 0, 1]);
    let out = record(9, DrivingMode::Eco, 10.0, 130.0, 20.0, 1.0);
    assert_eq!(
        stratified_report(&[1.0], &[&out], Stratification::VelocityBand),
        Err(discharge_core::Error::Unstratified { trip_id: 9 })
    );
}

#[test]
fn consumption_stats_by_hand() {
    let records = vec![
        record(0, DrivingMode::Eco, 100.0, 60.0, 20.0, 10.0),
        record(1, DrivingMode::Eco, 100.0, 60.0, 20.0, 20.0),
        record(2, DrivingMode::Normal, 50.0, 60.0, 20.0, 10.0),
        record(3, DrivingMode::Normal, 50.0, 60.0, 20.0, 10.0),
        record(4, DrivingMode::Aggressive, 10.0, 60.0, 20.0, 3.0),
        record(5, DrivingMode::Aggressive, 20.0, 60.0, 20.0, 4.0),
    ];
    let stats = consumption_stats(&records).unwrap();
    let close = |a: Option<f64>, b: f64| (a.unwrap() - b).abs() < 1e-12;
    assert!(close(stats[0].mean, 0.15) && close(stats[0].std, 0.05));
    assert_eq!((stats[0].min, stats[0].max), (Some(0.1), Some(0.2)));
    assert_eq!((stats[1].mean, stats[1].std), (Some(0.2), Some(0.0)));
    assert!((stats[2].mean.unwrap() - 0.25).abs() < 1e-12 && (stats[2].std.unwrap() - 0.05).abs() < 1e-12);
    let single = consumption_stats(&records[..1]).unwrap();
    assert_eq!((single[0].mean, single[0].min, single[0].max, single[0].std), (Some(0.1), Some(0.1), Some(0.1), Some(0.0)));
    assert_eq!(single[1].n, 0);
}

#[test]
fn generated_corpus_orders_modes_by_consumption() {
    let corpus = build_corpus(&Simulator::default(), &NoiseConfig::default(), 300, 8).unwrap();
    let stats = consumption_stats(&corpus).unwrap();
    assert!(stats[0].mean < stats[1].mean && stats[1].mean < stats[2].mean);
}

#[test]
fn figure_rows_cover_the_corpus() {
    let corpus = build_corpus(&Simulator::default(), &NoiseConfig::default(), 60, 9).unwrap();
    let rows = error_rows(&corpus, &BaselinePredictor::default(), None, None).unwrap();
    assert_eq!(rows.len(), corpus.len());
    let rates = rate_rows(&corpus, 1);
    assert_eq!(rates.len(), corpus.len());
    assert!(rates.iter().all(|r| r.rate == r.rolling_mean));
}

proptest! {
    #[test]
    fn mae_never_exceeds_rmse(pairs in prop::collection::vec((0.0f64..100.0, 0.1f64..100.0), 1..50)) {
        let (p, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = compute_metrics(&p, &y).unwrap();
        prop_assert!(m.mae <= m.rmse + 1e-12);
        prop_assert!(m.mae >= 0.0 && m.mape >= 0.0);
    }

    #[test]
    fn hybrid_soc_stays_within_bounds(seed in any::<u64>(), soc in 0.05f64..1.0, d in 5.0f64..150.0) {
        let mut sim = Simulator::default();
        sim.synthesis.n_steps = 200;
        let s = DischargeSession::new(soc, d, 80.0, DrivingMode::Normal);
        let p = predict(&sim, &s, None, seed, &NoClock).unwrap();
        let (_, r) = sim.run(&s, &mut SeededRng::new(seed)).unwrap();
        prop_assert_eq!(p.hybrid_energy.to_bits(), r.total_energy.to_bits());
        prop_assert!(p.final_soc >= 0.0 && p.final_soc <= soc);
        prop_assert!((p.hybrid_energy - (p.physics_energy + p.residual)).abs() < 1e-9);
    }
}

fn structured_corpus() -> Vec<TripRecord> {
    build_corpus(&Simulator::default(), &NoiseConfig::default(), 1500, 42).unwrap()
}

#[test]
fn hybrid_beats_physics_on_structured_corpus() {
    let corpus = structured_corpus();
    let (model, _) = train(&corpus, &FeatureSet::all(), &TrainConfig { seed: 42, ..Default::default() }).unwrap();
    let physics = evaluate_on(&BaselinePredictor::PhysicsOnly, &corpus, Split::Test).unwrap();
    let hybrid = evaluate_on(&BaselinePredictor::Hybrid { model }, &corpus, Split::Test).unwrap();
    assert!(hybrid.mape <= physics.mape, "{} vs {}", hybrid.mape, physics.mape);
}

#[test]
fn constant_rate_loses_to_hybrid_on_eco_trips() {
    let corpus = structured_corpus();
    let (model, _) = train(&corpus, &FeatureSet::all(), &TrainConfig { seed: 42, ..Default::default() }).unwrap();
    let mut eco: Vec<TripRecord> = corpus.into_iter().filter(|r| r.session.mode == DrivingMode::Eco).collect();
    for r in &mut eco {
        r.split = Split::Test;
    }
    let constant = evaluate_on(&BaselinePredictor::default(), &eco, Split::Test).unwrap();
    let hybrid = evaluate_on(&BaselinePredictor::Hybrid { model }, &eco, Split::Test).unwrap();
    assert!(constant.mape > hybrid.mape);
}

#[test]
fn full_model_not_worse_than_any_ablation() {
    let corpus = structured_corpus();
    let groups = ["physics_prediction", "driving_behavior", "velocity", "environmental", "battery_state"];
    let rows = ablation_study(&corpus, &TrainConfig { seed: 42, ..Default::default() }, &FeatureSet::all(), &groups).unwrap();
    assert_eq!(rows.first().unwrap().label, "full_model");
    assert_eq!(rows.last().unwrap().label, "physics_only");
    let physics = evaluate_on(&BaselinePredictor::PhysicsOnly, &corpus, Split::Test).unwrap();
    assert_eq!(rows.last().unwrap().metrics.as_ref(), Some(&physics));
    let full = rows[0].mape().unwrap();
    for row in &rows[1..] {
        assert!(full <= row.mape().unwrap(), "full {full} vs {} {}", row.label, row.mape().unwrap());
    }
}
