//! Argument parsing and command dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use discharge_core::dataset::Split;
use discharge_core::hybrid::predict;
use discharge_core::nn::{train, FeatureGroup, FeatureSet};
use discharge_core::physics::EnergyBreakdown;
use discharge_core::{DischargeSession, DrivingMode, PhaseLayout, SeededRng};
use serde::Serialize;

use crate::clock::WallClock;
use crate::config::{usage_from_core, RunConfig};
use crate::error::{Error, Result};
use crate::formats::{
    read_corpus, sidecar_path, write_corpus, write_csv, write_json, write_text, write_training_log, CorpusSidecar,
    ModelFile, TrainingSummary, GENERATOR_VERSION, MODEL_FORMAT_VERSION,
};
use crate::pipeline::{self, EvaluationInputs};

#[derive(Debug, Parser)]
#[command(name = "discharge", version, about = "EV trip energy: physics simulation, residual learning, evaluation")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print machine-readable JSON instead of text where applicable.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trip with the physics model.
    Simulate(SimulateArgs),
    /// Generate a synthetic trip corpus.
    Generate(GenerateArgs),
    /// Train the residual network on a corpus.
    Train(TrainArgs),
    /// Predict one trip with the physics model and an optional residual model.
    Predict(PredictArgs),
    /// Score baselines and the hybrid model; write reports and figure data.
    Evaluate(EvaluateArgs),
    /// Measure per-trip latency of each stage.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_steps: Option<usize>,
    /// Velocity perturbation, fraction of mean velocity.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// `contiguous` or `cycles:K`.
    #[arg(long, value_parser = parse_layout)]
    pub layout: Option<PhaseLayout>,
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    /// Trip length, km.
    #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
    pub distance: f64,
    /// Mean velocity, km/h.
    #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
    pub velocity: f64,
    #[arg(long, default_value = "normal")]
    pub mode: DrivingMode,
    /// Initial state of charge, fraction.
    #[arg(long, default_value_t = 0.8, allow_negative_numbers = true)]
    pub soc: f64,
    /// Ambient temperature, °C.
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    pub temp: f64,
    /// Time of day, hours.
    #[arg(long, default_value_t = 12.0)]
    pub time: f64,
    /// Road grade, radians.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub grade: f64,
}

impl SessionArgs {
    fn session(&self) -> Result<DischargeSession> {
        let s = DischargeSession::new(self.soc, self.distance, self.velocity, self.mode)
            .with_ambient_temp(self.temp)
            .with_time_of_day(self.time)
            .with_grade(self.grade);
        s.validate().map_err(|e| match e {
            discharge_core::Error::InvalidArgument { name, reason } => {
                Error::usage(format!("invalid --{}: {reason}", session_flag(name)))
            }
            other => Error::Core(other),
        })?;
        Ok(s)
    }
}

fn session_flag(field: &str) -> &str {
    match field {
        "initial_soc" | "target_final_soc" => "soc",
        "mean_velocity" => "velocity",
        "ambient_temp" => "temp",
        "time_of_day" => "time",
        "grade_angle" => "grade",
        other => other,
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub session: SessionArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Write the per-step SoC trajectory here.
    #[arg(long)]
    pub soc_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, short = 'n', default_value_t = 1500)]
    pub n_trips: usize,
    /// Corpus CSV; the sidecar goes next to it with a `.json` extension.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub structured_fraction: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Model output file.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// Training log CSV (default: next to the model, `.log.csv`).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Feature groups to leave out.
    #[arg(long = "drop-group", value_name = "GROUP")]
    pub drop_groups: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub session: SessionArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Directory for the report and figure CSVs.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// Retrain once per feature group (slow).
    #[arg(long)]
    pub ablation: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,20")]
    pub batch_sizes: Vec<usize>,
    #[command(flatten)]
    pub sim: SimArgs,
}

const MIN_BENCH_TRIPS: usize = 100;

fn parse_layout(s: &str) -> std::result::Result<PhaseLayout, String> {
    match s.split_once(':') {
        None if s == "contiguous" => Ok(PhaseLayout::Contiguous),
        Some(("cycles", k)) => k.parse().map(PhaseLayout::Cycles).map_err(|e| format!("bad cycle count: {e}")),
        _ => Err("expected `contiguous` or `cycles:K`".into()),
    }
}

impl SimArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        if let Some(n) = self.n_steps {
            cfg.synthesis.n_steps = n;
        }
        if let Some(k) = self.kappa {
            cfg.synthesis.kappa = k;
        }
        if let Some(layout) = self.layout {
            cfg.synthesis.layout = layout;
        }
    }
}

fn required(path: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    path.ok_or_else(|| Error::usage(format!("--{flag} is required (or `paths.{flag}` in the config file)")))
}

/// Runs one command, writing its human or JSON output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(args) => simulate(args, &mut cfg, out),
        Command::Generate(args) => generate(args, &mut cfg, cli.json, out),
        Command::Train(args) => train_cmd(args, &mut cfg, cli.json, out),
        Command::Predict(args) => predict_cmd(args, &mut cfg, out),
        Command::Evaluate(args) => evaluate(args, &mut cfg, cli.json, out),
        Command::Bench(args) => bench(args, &mut cfg, cli.json, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    emit(out, &(text + "\n"))
}

#[derive(Serialize)]
struct SimulationSummary {
    session: DischargeSession,
    seed: u64,
    n_steps: usize,
    total_energy_kwh: f64,
    final_soc: f64,
    consumption_rate_kwh_per_km: f64,
    energy_breakdown: EnergyBreakdown,
    braking_event_count: usize,
    depleted: bool,
    max_velocity_kmh: f64,
}

fn simulate(args: SimulateArgs, cfg: &mut RunConfig, out: &mut dyn Write) -> Result<()> {
    args.sim.apply(cfg);
    cfg.validate()?;
    let session = args.session.session()?;
    let seed = cfg.seed.unwrap_or(0);
    let (trajectory, result) =
        cfg.simulator().run(&session, &mut SeededRng::new(seed)).map_err(Error::Simulation)?;
    if let Some(path) = &args.soc_csv {
        write_csv(path, &result.soc_trajectory)?;
    }
    emit_json(
        out,
        &SimulationSummary {
            session,
            seed,
            n_steps: trajectory.n_steps(),
            total_energy_kwh: result.total_energy,
            final_soc: result.final_soc,
            consumption_rate_kwh_per_km: result.consumption_rate,
            energy_breakdown: result.energy_breakdown,
            braking_event_count: result.braking_event_count,
            depleted: result.depleted,
            max_velocity_kmh: trajectory.max_velocity_kmh(),
        },
    )
}

fn generate(args: GenerateArgs, cfg: &mut RunConfig, json: bool, out: &mut dyn Write) -> Result<()> {
    args.sim.apply(cfg);
    if let Some(f) = args.structured_fraction {
        cfg.noise.structured_fraction = f;
    }
    if let Some(path) = args.out {
        cfg.paths.corpus = Some(path);
    }
    cfg.validate()?;
    let seed = cfg.require_seed()?;
    let path = required(cfg.paths.corpus.clone(), "corpus")?;
    let corpus = pipeline::generate_corpus(&cfg.simulator(), &cfg.noise, args.n_trips, seed, args.jobs)?;
    write_corpus(&path, &corpus)?;
    let sidecar = CorpusSidecar {
        generator_version: GENERATOR_VERSION.to_string(),
        seed,
        n_trips: corpus.len(),
        noise: cfg.noise,
        config_hash: cfg.hash(),
        config: cfg.clone(),
    };
    write_json(&sidecar_path(&path), &sidecar)?;

    let counts = pipeline::split_counts(&corpus);
    if json {
        return emit_json(out, &counts);
    }
    let mut text = format!("wrote {} trips to {}\n", corpus.len(), path.display());
    for (split, modes) in &counts {
        let total: usize = modes.values().sum();
        let detail: Vec<String> = modes.iter().map(|(m, n)| format!("{m} {n}")).collect();
        text += &format!("  {split:<6}{total:>6}  ({})\n", detail.join(", "));
    }
    emit(out, &text)
}

fn train_cmd(args: TrainArgs, cfg: &mut RunConfig, json: bool, out: &mut dyn Write) -> Result<()> {
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    let t = &mut cfg.train;
    args.epochs.inspect(|&v| t.max_epochs = v);
    args.patience.inspect(|&v| t.patience = v);
    args.lr.inspect(|&v| t.learning_rate = v);
    args.batch_size.inspect(|&v| t.batch_size = v);
    args.weight_decay.inspect(|&v| t.weight_decay = v);
    if let Some(p) = args.corpus {
        cfg.paths.corpus = Some(p);
    }
    if let Some(p) = args.out {
        cfg.paths.model = Some(p);
    }
    cfg.train.seed = cfg.require_seed()?;
    cfg.validate()?;
    let corpus_path = required(cfg.paths.corpus.clone(), "corpus")?;
    let model_path = required(cfg.paths.model.clone(), "model")?;
    let log_path = args.log.unwrap_or_else(|| model_path.with_extension("log.csv"));

    let mut features = FeatureSet::all();
    for g in &args.drop_groups {
        let group: FeatureGroup = g.parse().map_err(usage_from_core)?;
        features = features.without(group).map_err(|e| Error::usage(format!("invalid --drop-group: {e}")))?;
    }

    let corpus = read_corpus(&corpus_path)?;
    for split in [Split::Train, Split::Val, Split::Test] {
        if !corpus.iter().any(|r| r.split == split) {
            return Err(Error::usage(format!("corpus has no {split} split")));
        }
    }
    let (net, log) = train(&corpus, &features, &cfg.train)?;
    let model = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        config_hash: cfg.hash(),
        train_config: cfg.train.clone(),
        training: TrainingSummary::from(&log),
        net,
    };
    write_json(&model_path, &model)?;
    write_training_log(&log_path, &log)?;

    if json {
        return emit_json(out, &model.training);
    }
    let last = log.epochs.last().expect("at least one epoch");
    emit(
        out,
        &format!(
            "trained {} epochs ({}); best epoch {} val MSE {:.6}\nfinal train loss {:.6} val loss {:.6}\nwrote {} and {}\n",
            log.epochs_run(),
            if log.stopped_early { "early stop" } else { "epoch budget" },
            log.best_epoch,
            log.best_val_loss,
            last.train_loss,
            last.val_loss,
            model_path.display(),
            log_path.display()
        ),
    )
}

fn load_model(path: Option<&Path>) -> Result<Option<ModelFile>> {
    path.map(ModelFile::load).transpose()
}

fn predict_cmd(args: PredictArgs, cfg: &mut RunConfig, out: &mut dyn Write) -> Result<()> {
    args.sim.apply(cfg);
    cfg.validate()?;
    let session = args.session.session()?;
    let model = load_model(args.model.as_deref().or(cfg.paths.model.as_deref()))?;
    let prediction = predict(&cfg.simulator(), &session, model.as_ref().map(|m| &m.net), cfg.seed.unwrap_or(0), &WallClock::new())
        .map_err(|e| match e {
            discharge_core::Error::DimensionMismatch { .. } => Error::Core(e),
            other => Error::Simulation(other),
        })?;
    emit_json(out, &prediction)
}

fn evaluate(args: EvaluateArgs, cfg: &mut RunConfig, json: bool, out: &mut dyn Write) -> Result<()> {
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(p) = args.corpus {
        cfg.paths.corpus = Some(p);
    }
    if let Some(p) = args.model {
        cfg.paths.model = Some(p);
    }
    if let Some(p) = args.out {
        cfg.paths.report_dir = Some(p);
    }
    cfg.validate()?;
    let corpus = read_corpus(&required(cfg.paths.corpus.clone(), "corpus")?)?;
    let dir = required(cfg.paths.report_dir.clone(), "report_dir")?;
    let model = load_model(cfg.paths.model.as_deref())?;
    let ablation_cfg = model.as_ref().map_or_else(|| cfg.train.clone(), |m| m.train_config.clone());

    let (report, figures) = pipeline::evaluate(&EvaluationInputs {
        simulator: &cfg.simulator(),
        corpus: &corpus,
        model: model.as_ref().map(|m| &m.net),
        ablation: args.ablation.then_some(&ablation_cfg),
        seed: cfg.seed.unwrap_or(0),
        jobs: args.jobs,
    })?;

    #[derive(Serialize)]
    struct ReportFile<'a> {
        config_hash: String,
        config: &'a RunConfig,
        model_config_hash: Option<&'a str>,
        #[serde(flatten)]
        report: &'a pipeline::EvaluationReport,
    }
    write_json(
        &dir.join("report.json"),
        &ReportFile {
            config_hash: cfg.hash(),
            config: cfg,
            model_config_hash: model.as_ref().map(|m| m.config_hash.as_str()),
            report: &report,
        },
    )?;
    let text = pipeline::render_report(&report);
    write_text(&dir.join("report.txt"), &text)?;
    write_csv(&dir.join("soc_depletion.csv"), &figures.soc_depletion)?;
    write_csv(&dir.join("error_hist.csv"), &figures.error_hist)?;
    write_csv(&dir.join("rate_vs_distance.csv"), &figures.rate_vs_distance)?;

    if json {
        emit_json(out, &report)
    } else {
        emit(out, &text)
    }
}

fn bench(args: BenchArgs, cfg: &mut RunConfig, json: bool, out: &mut dyn Write) -> Result<()> {
    args.sim.apply(cfg);
    if let Some(p) = args.corpus {
        cfg.paths.corpus = Some(p);
    }
    if let Some(p) = args.model {
        cfg.paths.model = Some(p);
    }
    cfg.validate()?;
    let corpus = read_corpus(&required(cfg.paths.corpus.clone(), "corpus")?)?;
    let model = load_model(Some(&required(cfg.paths.model.clone(), "model")?))?.expect("path given");
    let sessions: Vec<DischargeSession> =
        corpus.iter().filter(|r| r.split == Split::Test).map(|r| r.session).collect();
    if sessions.len() < MIN_BENCH_TRIPS {
        return Err(Error::usage(format!(
            "bench needs at least {MIN_BENCH_TRIPS} test trips, corpus has {}",
            sessions.len()
        )));
    }
    let report = pipeline::bench(
        &cfg.simulator(),
        &model.net,
        &sessions,
        &args.batch_sizes,
        cfg.seed.unwrap_or(0),
        &WallClock::new(),
    )?;
    if json {
        emit_json(out, &report)
    } else {
        emit(out, &pipeline::render_bench(&report))
    }
}
