//! Command bodies that do not touch argument parsing.

use std::collections::BTreeMap;

use discharge_core::dataset::{finalize_corpus, generate_record, Split, TripRecord, MIN_CORPUS_TRIPS};
use discharge_core::eval::{
    ablation_plan, ablation_row, consumption_stats, error_rows, evaluate_on, fit_linear_baseline, rate_rows,
    soc_depletion_rows, stratified_report, AblationRow, BaselinePredictor, ErrorRow, MetricsReport, ModeConsumption,
    RateRow, SocCurve, SocDepletionRow, Stratification, OLS_TERM_NAMES,
};
use discharge_core::eval::figures::ROLLING_WINDOW;
use discharge_core::hybrid::{batch_item_seed, predict, predict_batch, Clock};
use discharge_core::nn::{FeatureGroup, FeatureSet};
use discharge_core::{DischargeSession, NoiseConfig, ResidualNet, Simulator, TrainConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))
}

/// Builds the corpus with trips simulated in parallel; output is identical
/// for any worker count.
pub fn generate_corpus(
    simulator: &Simulator,
    noise: &NoiseConfig,
    n_trips: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<Vec<TripRecord>> {
    if n_trips < MIN_CORPUS_TRIPS {
        return Err(Error::usage(format!("invalid --n-trips: need at least {MIN_CORPUS_TRIPS} trips, got {n_trips}")));
    }
    simulator.validate().map_err(crate::config::usage_from_core)?;
    noise.validate().map_err(crate::config::usage_from_core)?;
    let outcomes = pool(jobs)?
        .install(|| (0..n_trips).into_par_iter().map(|i| generate_record(simulator, noise, seed, i)).collect());
    finalize_corpus(outcomes, seed).map_err(Error::Simulation)
}

pub fn split_counts(corpus: &[TripRecord]) -> BTreeMap<String, BTreeMap<String, usize>> {
    let mut out: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for r in corpus {
        *out.entry(r.split.to_string()).or_default().entry(r.session.mode.to_string()).or_default() += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorRow {
    pub name: String,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub split: Split,
    pub predictors: Vec<PredictorRow>,
    pub linear_coefficients: Option<BTreeMap<String, f64>>,
    /// Strata of the best available learned predictor (hybrid, else physics).
    pub strata_model: String,
    pub by_mode: MetricsReport,
    pub by_velocity: MetricsReport,
    pub consumption: Vec<ModeConsumption>,
    pub ablation: Option<Vec<AblationRow>>,
    pub notices: Vec<String>,
}

impl EvaluationReport {
    pub fn predictor(&self, name: &str) -> Option<&MetricsReport> {
        self.predictors.iter().find(|p| p.name == name).map(|p| &p.metrics)
    }
}

pub struct FigureData {
    pub soc_depletion: Vec<SocDepletionRow>,
    pub error_hist: Vec<ErrorRow>,
    pub rate_vs_distance: Vec<RateRow>,
}

pub struct EvaluationInputs<'a> {
    pub simulator: &'a Simulator,
    pub corpus: &'a [TripRecord],
    pub model: Option<&'a ResidualNet>,
    pub ablation: Option<&'a TrainConfig>,
    pub seed: u64,
    pub jobs: Option<usize>,
}

/// Scores every predictor on the test split and prepares the figure rows.
pub fn evaluate(inputs: &EvaluationInputs) -> Result<(EvaluationReport, FigureData)> {
    let corpus = inputs.corpus;
    let test: Vec<&TripRecord> = corpus.iter().filter(|r| r.split == Split::Test).collect();
    if test.is_empty() {
        return Err(Error::usage("corpus has no test split"));
    }
    let mut notices = Vec::new();

    let constant = BaselinePredictor::default();
    let linear = match fit_linear_baseline(corpus.iter().filter(|r| r.split == Split::Train)) {
        Ok(l) => Some(l),
        Err(e) => {
            notices.push(format!("linear baseline omitted: {e}"));
            None
        }
    };
    let hybrid = inputs.model.map(|m| BaselinePredictor::Hybrid { model: m.clone() });
    if hybrid.is_none() {
        notices.push("no model given: hybrid rows omitted".to_string());
    }

    let predictors: Vec<&BaselinePredictor> =
        [Some(&constant), linear.as_ref(), Some(&BaselinePredictor::PhysicsOnly), hybrid.as_ref()].into_iter().flatten().collect();
    let rows = predictors
        .iter()
        .map(|p| Ok(PredictorRow { name: p.name().to_string(), metrics: evaluate_on(p, corpus, Split::Test)? }))
        .collect::<Result<Vec<_>>>()?;

    let strata_predictor = hybrid.as_ref().unwrap_or(&BaselinePredictor::PhysicsOnly);
    let strata_predictions = strata_predictor.predict_all(test.iter().copied())?;
    let by_mode = stratified_report(&strata_predictions, &test, Stratification::Mode)?;
    let by_velocity = stratified_report(&strata_predictions, &test, Stratification::VelocityBand)?;

    let ablation = match inputs.ablation {
        Some(cfg) => {
            let groups: Vec<&str> = FeatureGroup::ALL.iter().map(|g| g.name()).collect();
            let base = inputs.model.map(|m| m.features.clone()).unwrap_or_else(FeatureSet::all);
            let present: Vec<&str> = groups
                .into_iter()
                .filter(|g| g.parse::<FeatureGroup>().map(|g| base.contains_group(g)).unwrap_or(false))
                .collect();
            let plan = ablation_plan(&base, &present)?;
            let cfg = cfg.clone();
            Some(pool(inputs.jobs)?.install(|| plan.par_iter().map(|case| ablation_row(corpus, &cfg, case)).collect()))
        }
        None => None,
    };

    let linear_coefficients = match &linear {
        Some(BaselinePredictor::Linear { coefficients }) => {
            Some(OLS_TERM_NAMES.iter().map(|n| n.to_string()).zip(coefficients.iter().copied()).collect())
        }
        _ => None,
    };

    let curve = SocCurve { seed: inputs.seed, ..Default::default() };
    let figures = FigureData {
        soc_depletion: soc_depletion_rows(inputs.simulator, &curve, corpus, &constant, linear.as_ref(), inputs.model)
            .map_err(Error::Simulation)?,
        error_hist: error_rows(corpus, &constant, linear.as_ref(), hybrid.as_ref())?,
        rate_vs_distance: rate_rows(corpus, ROLLING_WINDOW),
    };

    let report = EvaluationReport {
        split: Split::Test,
        predictors: rows,
        linear_coefficients,
        strata_model: strata_predictor.name().to_string(),
        by_mode,
        by_velocity,
        consumption: consumption_stats(corpus)?,
        ablation,
        notices,
    };
    Ok((report, figures))
}

fn metrics_line(name: &str, m: &MetricsReport) -> String {
    format!("{name:<22}{:>10.3}{:>10.2}{:>10.3}{:>8}\n", m.mae, m.mape, m.rmse, m.n)
}

fn strata_block(title: &str, report: &MetricsReport) -> String {
    let mut out = format!("\n{title}\n{:<22}{:>10}{:>10}{:>10}{:>8}\n", "stratum", "MAE kWh", "MAPE %", "RMSE kWh", "n");
    for s in report.strata.iter().flatten() {
        match &s.metrics {
            Some(m) => out += &metrics_line(&s.label, m),
            None => out += &format!("{:<22}{:>10}{:>10}{:>10}{:>8}\n", s.label, "-", "-", "-", 0),
        }
    }
    out + &metrics_line("overall", report)
}

/// Human-readable rendering of the report.
pub fn render_report(report: &EvaluationReport) -> String {
    let mut out = format!("Predictor comparison ({} split)\n", report.split);
    out += &format!("{:<22}{:>10}{:>10}{:>10}{:>8}\n", "predictor", "MAE kWh", "MAPE %", "RMSE kWh", "n");
    for p in &report.predictors {
        out += &metrics_line(&p.name, &p.metrics);
    }
    if let Some(rows) = &report.ablation {
        out += "\nFeature ablation (test MAPE %)\n";
        for r in rows {
            match (r.mape(), &r.error) {
                (Some(m), _) => out += &format!("{:<30}{:>10.2}\n", r.label, m),
                (None, Some(e)) => out += &format!("{:<30}  failed: {e}\n", r.label),
                (None, None) => {}
            }
        }
    }
    out += &strata_block(&format!("By driving mode ({})", report.strata_model), &report.by_mode);
    out += &strata_block(&format!("By velocity band, km/h ({})", report.strata_model), &report.by_velocity);
    out += &format!("\nConsumption rate, kWh/km\n{:<12}{:>8}{:>10}{:>10}{:>10}{:>10}\n", "mode", "n", "mean", "std", "min", "max");
    for c in &report.consumption {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        out += &format!("{:<12}{:>8}{:>10}{:>10}{:>10}{:>10}\n", c.mode.as_str(), c.n, f(c.mean), f(c.std), f(c.min), f(c.max));
    }
    for n in &report.notices {
        out += &format!("\nnote: {n}");
    }
    if !report.notices.is_empty() {
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub mean_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(samples: &mut [f64]) -> Self {
        samples.sort_by(f64::total_cmp);
        let pick = |q: f64| samples[((samples.len() - 1) as f64 * q).round() as usize];
        LatencyStats {
            p50_ms: pick(0.5),
            p95_ms: pick(0.95),
            mean_ms: samples.iter().sum::<f64>() / samples.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchLatency {
    pub batch_size: usize,
    pub batches: usize,
    pub per_trip: LatencyStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub trips: usize,
    pub n_steps: usize,
    pub physics: LatencyStats,
    pub ml: LatencyStats,
    pub hybrid: LatencyStats,
    pub batches: Vec<BatchLatency>,
}

/// Wall-clock latency of the physics, network and combined stages.
pub fn bench<C: Clock>(
    simulator: &Simulator,
    model: &ResidualNet,
    sessions: &[DischargeSession],
    batch_sizes: &[usize],
    seed: u64,
    clock: &C,
) -> Result<BenchReport> {
    if sessions.is_empty() {
        return Err(Error::usage("no trips to benchmark"));
    }
    let (mut physics, mut ml, mut total) = (Vec::new(), Vec::new(), Vec::new());
    for (i, s) in sessions.iter().enumerate() {
        let p = predict(simulator, s, Some(model), batch_item_seed(seed, i), clock).map_err(Error::Simulation)?;
        physics.push(p.physics_latency_ms);
        ml.push(p.ml_latency_ms);
        total.push(p.total_latency_ms);
    }
    let mut batches = Vec::new();
    for &size in batch_sizes {
        if size == 0 {
            return Err(Error::usage("invalid --batch-sizes: sizes must be positive"));
        }
        let mut per_trip: Vec<f64> = sessions
            .chunks(size)
            .map(|chunk| predict_batch(simulator, chunk, Some(model), seed, clock).mean_latency_ms())
            .collect();
        batches.push(BatchLatency { batch_size: size, batches: per_trip.len(), per_trip: LatencyStats::from_samples(&mut per_trip) });
    }
    Ok(BenchReport {
        trips: sessions.len(),
        n_steps: simulator.synthesis.n_steps,
        physics: LatencyStats::from_samples(&mut physics),
        ml: LatencyStats::from_samples(&mut ml),
        hybrid: LatencyStats::from_samples(&mut total),
        batches,
    })
}

pub fn render_bench(report: &BenchReport) -> String {
    let mut out = format!("{} trips, {} steps each\n{:<18}{:>12}{:>12}{:>12}\n", report.trips, report.n_steps, "stage", "p50 ms", "p95 ms", "mean ms");
    for (name, s) in [("physics", &report.physics), ("network", &report.ml), ("hybrid", &report.hybrid)] {
        out += &format!("{name:<18}{:>12.4}{:>12.4}{:>12.4}\n", s.p50_ms, s.p95_ms, s.mean_ms);
    }
    for b in &report.batches {
        let s = &b.per_trip;
        out += &format!("{:<18}{:>12.4}{:>12.4}{:>12.4}\n", format!("batch {} /trip", b.batch_size), s.p50_ms, s.p95_ms, s.mean_ms);
    }
    out
}
