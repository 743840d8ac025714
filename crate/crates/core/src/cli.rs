//! The `prf` command line.
//!
//! ```text
//! prf train    --data D.csv --schema S.json [--trees K --m M --k-top T --max-depth D --seed N] --out DIR
//! prf predict  --model DIR/model.json --data X.csv [--schema S.json] [--regression-mode MODE] --out DIR
//! prf simulate --model DIR/model.json --cluster C.json --out DIR
//! prf report   --model DIR/model.json [--data D.csv] --out DIR
//! ```
//!
//! Exit codes: 0 success, 1 any other failure (including bad flags),
//! 2 missing or unreadable input file, 3 schema mismatch between model and
//! input, 4 cluster capacity shortfall.
//!
//! Every file written carries `config_digest` and `seed`: JSON files as
//! top-level keys, JSON-lines files in a first header line and CSV files in
//! a leading `# config_digest=...,seed=...` comment. The digest hashes the
//! command, the resolved parameters and the contents (not paths) of the
//! input files. Set `PRF_LOG` (e.g. `PRF_LOG=info`) for progress logs.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cluster_sim::{self, data_volume, ClusterSpec, Strategy};
use crate::dataset::{load_csv, load_samples, Schema};
use crate::error::{Error, Result};
use crate::forest::{oob_error, train_with_dsi, Forest, RegressionMode};
use crate::sampling::build_dsi;
use crate::seed::digest_hex;
use crate::tree::Hyperparams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_INPUT,
        Error::SchemaMismatch(_) | Error::HeaderMismatch { .. } => EXIT_SCHEMA,
        Error::InsufficientCapacity { .. } => EXIT_CAPACITY,
        _ => EXIT_FAILURE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "prf", version, about = "Random forest with OOB-weighted voting and a cluster cost simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a forest; writes model.json and metrics.json.
    Train(TrainArgs),
    /// Predict samples with a trained forest; writes predictions.csv.
    Predict(PredictArgs),
    /// Replay training on a simulated cluster; writes schedule.jsonl,
    /// ledger.json, volume.csv and speedup.csv.
    Simulate(SimulateArgs),
    /// Summarise a trained forest; writes report.json.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Number of trees.
    #[arg(long)]
    pub trees: Option<usize>,
    /// Features kept per tree.
    #[arg(long)]
    pub m: Option<usize>,
    /// Features kept by importance rank; the rest of the m are random.
    #[arg(long = "k-top")]
    pub k_top: Option<usize>,
    #[arg(long = "max-depth")]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Optional; must describe the same columns as the model's schema.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long = "regression-mode", default_value = "normalized")]
    pub regression_mode: RegressionMode,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub cluster: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Training data; adds the OOB error to the report.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    #[default]
    Train,
    Predict,
    Simulate,
    Report,
}

/// Everything one invocation needs, whichever subcommand it came from.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    pub command: CommandKind,
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub cluster: Option<PathBuf>,
    pub out: PathBuf,
    pub trees: Option<usize>,
    pub m: Option<usize>,
    pub k_top: Option<usize>,
    pub max_depth: Option<usize>,
    pub seed: u64,
    pub regression_mode: RegressionMode,
}

impl From<Command> for RunConfig {
    fn from(c: Command) -> Self {
        match c {
            Command::Train(a) => RunConfig {
                command: CommandKind::Train,
                data: Some(a.data),
                schema: Some(a.schema),
                out: a.out,
                trees: a.trees,
                m: a.m,
                k_top: a.k_top,
                max_depth: a.max_depth,
                seed: a.seed,
                ..RunConfig::default()
            },
            Command::Predict(a) => RunConfig {
                command: CommandKind::Predict,
                model: Some(a.model),
                data: Some(a.data),
                schema: a.schema,
                out: a.out,
                regression_mode: a.regression_mode,
                ..RunConfig::default()
            },
            Command::Simulate(a) => RunConfig {
                command: CommandKind::Simulate,
                model: Some(a.model),
                cluster: Some(a.cluster),
                out: a.out,
                ..RunConfig::default()
            },
            Command::Report(a) => RunConfig {
                command: CommandKind::Report,
                model: Some(a.model),
                data: a.data,
                out: a.out,
                ..RunConfig::default()
            },
        }
    }
}

impl RunConfig {
    pub fn hyperparams(&self) -> Hyperparams {
        let d = Hyperparams::default();
        Hyperparams {
            k_trees: self.trees.unwrap_or(d.k_trees),
            m_selected: self.m,
            k_top: self.k_top,
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            seed: self.seed,
            ..d
        }
    }

    fn required<'a>(&self, p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        p.as_deref()
            .ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")))
    }

    /// SHA-256 over the command, resolved parameters and input contents.
    pub fn digest(&self) -> Result<String> {
        let mut inputs = serde_json::Map::new();
        for (role, path) in [
            ("data", &self.data),
            ("schema", &self.schema),
            ("model", &self.model),
            ("cluster", &self.cluster),
        ] {
            if let Some(p) = path {
                let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
                inputs.insert(role.into(), json!(digest_hex(&bytes)));
            }
        }
        let mut doc = json!({ "command": self.command, "inputs": inputs, "seed": self.seed });
        match self.command {
            CommandKind::Train => doc["hyperparams"] = serde_json::to_value(self.hyperparams())?,
            CommandKind::Predict => doc["regression_mode"] = serde_json::to_value(self.regression_mode)?,
            _ => {}
        }
        Ok(digest_hex(serde_json::to_string(&doc)?.as_bytes()))
    }
}

/// Reproducibility stamp written into every output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_digest: String,
    pub seed: u64,
}

impl Provenance {
    fn csv_comment(&self) -> String {
        format!("# config_digest={},seed={}\n", self.config_digest, self.seed)
    }
}

/// On-disk model: the forest plus the stamp of the run that trained it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub config_digest: String,
    pub seed: u64,
    #[serde(flatten)]
    pub forest: Forest,
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let model: ModelFile = serde_json::from_str(&text)?;
    // run the forest's own checks
    Forest::from_json(&serde_json::to_string(&model.forest)?)?;
    Ok(model)
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub struct TrainOutputs {
    pub model: PathBuf,
    pub metrics: PathBuf,
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutputs> {
    let schema_path = cfg.required(&cfg.schema, "schema")?;
    let data_path = cfg.required(&cfg.data, "data")?;
    let schema = Schema::load(schema_path)?;
    let data = load_csv(data_path, &schema)?;
    let stamp = Provenance {
        config_digest: cfg.digest()?,
        seed: cfg.seed,
    };
    let h = cfg.hyperparams();
    log::info!(
        "training {} trees on {} rows x {} features",
        h.k_trees,
        data.n_rows(),
        schema.n_features()
    );

    let started = Instant::now();
    let trained = train_with_dsi(&data, &h)?;
    let wall = started.elapsed().as_secs_f64();
    let oob = match oob_error(&trained.forest, &data, &trained.dsi) {
        Ok(o) => Some(o),
        Err(Error::UndefinedOobError) => None,
        Err(e) => return Err(e),
    };
    log::info!("trained in {wall:.3}s, oob error {:?}", oob.as_ref().map(|o| o.rate));

    let forest = trained.forest;
    let metrics = json!({
        "config_digest": stamp.config_digest,
        "seed": stamp.seed,
        "oob_error": oob.as_ref().map(|o| o.rate),
        "oob_rows_scored": oob.as_ref().map_or(0, |o| o.rows_scored),
        "trees": forest.trees.iter().map(|t| json!({
            "tree_index": t.tree_index,
            "ca": t.oob_accuracy,
            "oob_size": t.oob_size,
            "selected_features": t.selected_features,
            "depth": t.depth(),
            "internal_nodes": t.internal_count(),
        })).collect::<Vec<_>>(),
        "importance": importance_table(&forest),
        "wall_time_secs": wall,
    });

    create_dir(&cfg.out)?;
    let outputs = TrainOutputs {
        model: cfg.out.join("model.json"),
        metrics: cfg.out.join("metrics.json"),
    };
    let model = ModelFile {
        config_digest: stamp.config_digest,
        seed: stamp.seed,
        forest,
    };
    write_json(&outputs.model, &model)?;
    write_json(&outputs.metrics, &metrics)?;
    Ok(outputs)
}

fn importance_table(forest: &Forest) -> Vec<serde_json::Value> {
    forest
        .schema
        .features
        .iter()
        .zip(forest.importance())
        .map(|(f, vi)| json!({ "feature": f.name, "vi": vi }))
        .collect()
}

pub fn cmd_predict(cfg: &RunConfig) -> Result<PathBuf> {
    let model = load_model(cfg.required(&cfg.model, "model")?)?;
    if let Some(p) = &cfg.schema {
        let schema = Schema::load(p)?;
        if !schema.same_layout(&model.forest.schema) {
            return Err(Error::SchemaMismatch(format!(
                "{} does not describe the model's columns",
                p.display()
            )));
        }
    }
    let set = load_samples(cfg.required(&cfg.data, "data")?, &model.forest.schema)?;
    let stamp = Provenance {
        config_digest: cfg.digest()?,
        seed: model.seed,
    };
    let report = model.forest.predict(&set.samples, cfg.regression_mode)?;
    log::info!("predicted {} samples", report.outputs.len());

    let mut buf = stamp.csv_comment().into_bytes();
    report.write_csv(&mut buf, &model.forest.schema)?;
    create_dir(&cfg.out)?;
    let path = cfg.out.join("predictions.csv");
    write_file(&path, &buf)?;
    Ok(path)
}

pub struct SimulateOutputs {
    pub schedule: PathBuf,
    pub ledger: PathBuf,
    pub volume: PathBuf,
    pub speedup: PathBuf,
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateOutputs> {
    let model = load_model(cfg.required(&cfg.model, "model")?)?;
    let spec = ClusterSpec::load(cfg.required(&cfg.cluster, "cluster")?)?;
    let stamp = Provenance {
        config_digest: cfg.digest()?,
        seed: model.seed,
    };
    let forest = &model.forest;
    let traces = cluster_sim::forest_traces(forest);
    let rows = forest.n_rows as u64;
    let footprints = cluster_sim::schema_footprints(&forest.schema, rows);
    let sim = cluster_sim::simulate(&traces, &footprints, spec.slave_nodes(), &spec.cost)?;
    log::info!(
        "simulated {} tasks on {} nodes, makespan {:.6}s",
        sim.ledger.tasks_run,
        sim.nodes.len(),
        sim.ledger.makespan
    );

    let counts: Vec<usize> = if spec.node_counts.is_empty() {
        (1..=spec.nodes.len()).collect()
    } else {
        spec.node_counts.clone()
    };
    let scaling = cluster_sim::scaling_table(&traces, &footprints, &spec.cost, &counts)?;

    create_dir(&cfg.out)?;
    let out = SimulateOutputs {
        schedule: cfg.out.join("schedule.jsonl"),
        ledger: cfg.out.join("ledger.json"),
        volume: cfg.out.join("volume.csv"),
        speedup: cfg.out.join("speedup.csv"),
    };

    let mut buf = serde_json::to_vec(&stamp)?;
    buf.push(b'\n');
    sim.trace.write_jsonl(&mut buf)?;
    write_file(&out.schedule, &buf)?;

    let plan: Vec<_> = sim
        .plan
        .entries
        .iter()
        .map(|e| json!({ "subset": e.subset, "scenario": e.scenario, "bytes": e.size_bytes, "nodes": e.node_ids() }))
        .collect();
    write_json(
        &out.ledger,
        &json!({
            "config_digest": stamp.config_digest,
            "seed": stamp.seed,
            "ledger": sim.ledger,
            "allocation": plan,
            "dag": {
                "trees": sim.dags.len(),
                "gain_ratio_tasks": sim.dags.iter().map(|d| d.gain_ratio_count()).sum::<usize>(),
                "node_split_tasks": sim.dags.iter().map(|d| d.node_split_count()).sum::<usize>(),
                "max_stages": sim.dags.iter().map(|d| d.stages.len()).max().unwrap_or(0),
            },
        }),
    )?;

    let m = forest.schema.n_columns() as u64;
    let mut ks = vec![1, 10, 100, forest.k() as u64];
    ks.sort_unstable();
    ks.dedup();
    let mut vol = stamp.csv_comment().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut vol);
        w.write_record(["strategy", "n", "m", "k", "data_cells", "index_cells", "total_cells"])?;
        for (name, strategy) in [("horizontal-copy", Strategy::HorizontalCopy), ("prf-multiplex", Strategy::PrfMultiplex)] {
            for &k in &ks {
                let v = data_volume(rows, m, k, strategy);
                w.write_record([
                    name.to_string(),
                    rows.to_string(),
                    m.to_string(),
                    k.to_string(),
                    v.data_cells.to_string(),
                    v.index_cells.to_string(),
                    v.total().to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(&out.volume, e))?;
    }
    write_file(&out.volume, &vol)?;

    let mut sp = stamp.csv_comment().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut sp);
        w.write_record(["nodes", "makespan_secs", "normalized_time", "speedup"])?;
        for (n, row) in counts.iter().zip(&scaling) {
            w.write_record([
                n.to_string(),
                row.makespan.to_string(),
                row.normalized_time.to_string(),
                row.speedup.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&out.speedup, e))?;
    }
    write_file(&out.speedup, &sp)?;
    Ok(out)
}

pub fn cmd_report(cfg: &RunConfig) -> Result<PathBuf> {
    let model = load_model(cfg.required(&cfg.model, "model")?)?;
    let stamp = Provenance {
        config_digest: cfg.digest()?,
        seed: model.seed,
    };
    let forest = &model.forest;
    let weights = forest.weights();
    let k = forest.k().max(1) as f64;
    let depths: Vec<usize> = forest.trees.iter().map(|t| t.depth()).collect();

    let oob = match &cfg.data {
        Some(p) => {
            let data = load_csv(p, &forest.schema)?;
            let h = &forest.hyperparams;
            let dsi = build_dsi(data.n_rows(), h.k_trees, h.seed)?;
            match oob_error(forest, &data, &dsi) {
                Ok(o) => Some(o.rate),
                Err(Error::UndefinedOobError) => None,
                Err(e) => return Err(e),
            }
        }
        None => None,
    };

    let mut ranking = importance_table(forest);
    ranking.sort_by(|a, b| b["vi"].as_f64().partial_cmp(&a["vi"].as_f64()).unwrap_or(std::cmp::Ordering::Equal));

    create_dir(&cfg.out)?;
    let path = cfg.out.join("report.json");
    write_json(
        &path,
        &json!({
            "config_digest": stamp.config_digest,
            "seed": stamp.seed,
            "task": if forest.is_classification() { "classification" } else { "regression" },
            "trees": forest.k(),
            "training_rows": forest.n_rows,
            "hyperparams": forest.hyperparams,
            "importance_ranking": ranking,
            "weights": {
                "min": weights.iter().copied().fold(f64::INFINITY, f64::min),
                "mean": weights.iter().sum::<f64>() / k,
                "max": weights.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            },
            "depth": {
                "mean": depths.iter().sum::<usize>() as f64 / k,
                "max": depths.iter().copied().max().unwrap_or(0),
            },
            "oob_error": oob,
        }),
    )?;
    Ok(path)
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    match cfg.command {
        CommandKind::Train => cmd_train(cfg).map(|_| ()),
        CommandKind::Predict => cmd_predict(cfg).map(|_| ()),
        CommandKind::Simulate => cmd_simulate(cfg).map(|_| ()),
        CommandKind::Report => cmd_report(cfg).map(|_| ()),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter("PRF_LOG")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
        }
    };
    let cfg = RunConfig::from(cli.command);
    match run(&cfg) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "prf: error: {e}");
            exit_code(&e)
        }
    }
}
