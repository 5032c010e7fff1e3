//! Command-line front end.
//!
//! Every command writes a run manifest before any other artifact, and every
//! text artifact starts with `#gvnn-kit v1 manifest=<sha256>` (JSON artifacts
//! carry a `manifest_sha256` field instead). Settings resolve as flags, then
//! a `--config` file of `key=value` lines, then defaults.
//!
//! Exit codes: 0 success, 2 configuration, 3 data, 4 numeric, 5 verification.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::bench::{run_benchmark, BenchConfig, Method, Temporal};
use crate::data::{load_csv_signal, make_windows, signal_to_csv, MapConfig, MapKind, Split, WindowedDataset};
use crate::gvft::{gvft, write_coefficients_csv, write_heatmap_svg};
use crate::gvnn::{GvnnModel, ModelSpec, DEFAULT_HIDDEN};
use crate::gvsa::{build_support_correlation, default_rank, MultivariateSignal, NodeFunction, SupportMatrix};
use crate::linalg::{Matrix, Rng};
use crate::theory::{reports_to_json, run_theory_suite};
use crate::train::{
    evaluate_mse, normalized_split, persistence_mse, train_forecaster, Checkpoint, TrainConfig, TrainReport,
};
use crate::{Error, Result, FORMAT_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) => EXIT_CONFIG,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::RaggedRows { .. }
        | Error::TooShort { .. }
        | Error::Checkpoint(_)
        | Error::Json(_)
        | Error::ZeroVariance(_)
        | Error::DimMismatch(_) => EXIT_DATA,
        Error::Verification(_) => EXIT_VERIFICATION,
        Error::NotSquare { .. }
        | Error::NonConvergence { .. }
        | Error::MemoryBudgetExceeded { .. }
        | Error::NonFinite(_)
        | Error::CacheMismatch(_)
        | Error::NegativeSupport { .. }
        | Error::HypothesisViolated(_)
        | Error::Divergence { .. } => EXIT_NUMERIC,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gvnn-kit",
    version,
    about = "Graph-variate signal analysis and neural networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a chaotic map and write it as CSV plus a JSON sidecar.
    Generate(GenerateArgs),
    /// Train a forecaster and write report, curve and checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Write graph-variate Fourier coefficients.
    Gvft(GvftArgs),
    /// Run the spectral property suite; exit 5 if any claim fails.
    Verify(VerifyArgs),
    /// Time the explicit kernel against batched convolution.
    Bench(BenchArgs),
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Signal CSV (rows are nodes unless --transpose).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub transpose: bool,
    /// Generate the signal instead: lorenz, hopfield or macarthur.
    #[arg(long, conflicts_with = "data")]
    pub map: Option<String>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// ic, ic-nodiag, lde, combo:a,b
    #[arg(long)]
    pub node_fn: Option<String>,
    /// abs-corr, corr or file
    #[arg(long)]
    pub support: Option<String>,
    #[arg(long)]
    pub support_file: Option<PathBuf>,
    /// fixed, dense, lora[:r] or hira[:r]
    #[arg(long)]
    pub support_param: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub renorm: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub zave: Option<bool>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// Comma-separated readout hidden widths.
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub clip: Option<f64>,
    /// Fix the support path coefficient `b` at zero.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub freeze_b: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Seed for a generated signal.
    #[arg(long)]
    pub seed: Option<u64>,
    /// train, val, test or all
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GvftArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub node_fn: Option<String>,
    #[arg(long)]
    pub support: Option<String>,
    #[arg(long)]
    pub support_file: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long = "B", alias = "batch")]
    pub batch: Option<usize>,
    #[arg(long = "N", alias = "nodes")]
    pub nodes: Option<usize>,
    /// Comma-separated sample counts.
    #[arg(long = "T-list", alias = "t-list")]
    pub t_list: Option<String>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// identity or path
    #[arg(long)]
    pub temporal: Option<String>,
    /// naive, batched or both
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub node_fn: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

/// Values from a `key=value` config file; keys are flag names without `--`.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("config line {}: expected key=value", k + 1)))?;
            values.insert(key.trim().replace('_', "-"), value.trim().to_string());
        }
        Ok(Self {
            values,
            used: Default::default(),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::parse(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        }
    }

    fn raw(&self, key: &str) -> Option<&String> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key)
    }

    /// Flag value, else config value, else `None`.
    pub fn opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        if let Some(v) = flag {
            self.used.borrow_mut().insert(key.to_string());
            return Ok(Some(v));
        }
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| Error::InvalidConfig(format!("config `{key}` = `{s}`: {e}"))),
        }
    }

    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    /// Rejects keys that no setting of the command looked at.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.values.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(Error::InvalidConfig(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Csv { path: PathBuf, transpose: bool },
    Map(MapConfig),
}

impl DataSource {
    fn resolve(args: &DataArgs, cfg: &ConfigFile, seed: u64) -> Result<Self> {
        let data: Option<PathBuf> = cfg.opt(args.data.clone(), "data")?;
        let map: Option<String> = cfg.opt(args.map.clone(), "map")?;
        let transpose = cfg.get(args.transpose.then_some(true), "transpose", false)?;
        let nodes: Option<usize> = cfg.opt(args.nodes, "nodes")?;
        let length: Option<usize> = cfg.opt(args.length, "length")?;
        match (data, map) {
            (Some(_), Some(_)) => Err(Error::InvalidConfig("give either data or map, not both".into())),
            (Some(path), None) => Ok(DataSource::Csv { path, transpose }),
            (None, Some(name)) => Ok(DataSource::Map(map_config(&name, nodes, length, seed)?)),
            (None, None) => Err(Error::InvalidConfig("no input: pass --data or --map".into())),
        }
    }

    pub fn load(&self) -> Result<MultivariateSignal> {
        match self {
            DataSource::Csv { path, transpose } => load_csv_signal(path, *transpose),
            DataSource::Map(cfg) => cfg.simulate(),
        }
    }

    fn input_paths(&self) -> Vec<PathBuf> {
        match self {
            DataSource::Csv { path, .. } => vec![path.clone()],
            DataSource::Map(_) => Vec::new(),
        }
    }
}

fn map_config(name: &str, nodes: Option<usize>, length: Option<usize>, seed: u64) -> Result<MapConfig> {
    let mut cfg = MapConfig::new(name.parse::<MapKind>()?, seed);
    if let Some(n) = nodes {
        cfg.nodes = n;
    }
    if let Some(l) = length {
        cfg.length = l;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportSource {
    AbsCorr,
    Corr,
    File(PathBuf),
}

impl SupportSource {
    fn resolve(name: Option<String>, file: Option<PathBuf>) -> Result<Self> {
        match (name.as_deref(), file) {
            (None | Some("abs-corr"), None) => Ok(SupportSource::AbsCorr),
            (Some("corr"), None) => Ok(SupportSource::Corr),
            (None | Some("file"), Some(p)) => Ok(SupportSource::File(p)),
            (Some("file"), None) => Err(Error::InvalidConfig("--support file needs --support-file".into())),
            (Some(other), _) => Err(Error::InvalidConfig(format!("unknown support `{other}`"))),
        }
    }

    /// Base support from `x`, or from the file.
    pub fn build(&self, x: &MultivariateSignal) -> Result<Matrix> {
        match self {
            SupportSource::AbsCorr => Ok(build_support_correlation(x, true)?.base),
            SupportSource::Corr => Ok(build_support_correlation(x, false)?.base),
            SupportSource::File(p) => {
                let m = load_csv_signal(p, false)?.into_values();
                if m.shape() != (x.node_count(), x.node_count()) {
                    return Err(Error::dims(format!(
                        "support file is {:?}, signal has {} nodes",
                        m.shape(),
                        x.node_count()
                    )));
                }
                Ok(m)
            }
        }
    }

    fn input_paths(&self) -> Vec<PathBuf> {
        match self {
            SupportSource::File(p) => vec![p.clone()],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SupportParam {
    Fixed,
    Dense,
    /// Additive low rank `sym(W + AB)`; `None` uses the default rank.
    Lora {
        rank: Option<usize>,
    },
    /// Multiplicative low rank `sym(W ∘ AB)`.
    Hira {
        rank: Option<usize>,
    },
}

impl FromStr for SupportParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rank) = match s.split_once(':') {
            Some((h, r)) => match r.parse::<usize>() {
                Ok(r) if r > 0 => (h, Some(r)),
                _ => return Err(Error::InvalidConfig(format!("bad rank in `{s}`"))),
            },
            None => (s, None),
        };
        match (head, rank) {
            ("fixed", None) => Ok(SupportParam::Fixed),
            ("dense", None) => Ok(SupportParam::Dense),
            ("lora", _) => Ok(SupportParam::Lora { rank }),
            ("hira", _) => Ok(SupportParam::Hira { rank }),
            _ => Err(Error::InvalidConfig(format!("unknown support parameterization `{s}`"))),
        }
    }
}

impl SupportParam {
    pub fn build(self, base: Matrix, rng: &mut Rng) -> Result<SupportMatrix> {
        let rank = |r: Option<usize>| r.unwrap_or_else(|| default_rank(base.rows()));
        match self {
            SupportParam::Fixed => SupportMatrix::fixed(base),
            SupportParam::Dense => SupportMatrix::dense(base),
            SupportParam::Lora { rank: r } => {
                let r = rank(r);
                SupportMatrix::additive_low_rank(base, r, rng)
            }
            SupportParam::Hira { rank: r } => {
                let r = rank(r);
                SupportMatrix::hadamard_low_rank(base, r, rng)
            }
        }
    }
}

/// Fully resolved training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub data: DataSource,
    pub node_fn: NodeFunction,
    pub support: SupportSource,
    pub support_param: SupportParam,
    pub renormalize: bool,
    pub zave: bool,
    pub layers: usize,
    pub hidden: Vec<usize>,
    pub freeze_b: bool,
    pub train: TrainConfig,
}

impl TrainOptions {
    /// Library defaults for a generated map.
    pub fn for_map(kind: MapKind, seed: u64) -> Self {
        Self {
            data: DataSource::Map(MapConfig::new(kind, seed)),
            node_fn: NodeFunction::ic(),
            support: SupportSource::AbsCorr,
            support_param: SupportParam::Dense,
            renormalize: true,
            zave: true,
            layers: 1,
            hidden: vec![DEFAULT_HIDDEN],
            freeze_b: false,
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
        }
    }
}

pub struct TrainOutcome {
    pub report: TrainReport,
    pub model: GvnnModel,
    pub dataset: WindowedDataset,
}

/// Windows the signal, builds the support from the training span only, then
/// initializes and trains the model.
pub fn run_training(opts: &TrainOptions) -> Result<TrainOutcome> {
    let signal = opts.data.load()?;
    run_training_on(&signal, opts)
}

pub fn run_training_on(signal: &MultivariateSignal, opts: &TrainOptions) -> Result<TrainOutcome> {
    let t = &opts.train;
    t.validate()?;
    let dataset = make_windows(signal, t.window, t.horizon, t.stride)?;
    let end = dataset
        .last_column(Split::Train)
        .ok_or_else(|| Error::InvalidConfig("no training windows".into()))?;
    let base = opts.support.build(&signal.window(0, end + 1))?;
    let support = opts.support_param.build(base, &mut Rng::derived(t.seed, "support"))?;
    let mut spec = ModelSpec::new(signal.node_count(), t.window, support);
    spec.layers = opts.layers;
    spec.kind = opts.node_fn;
    spec.renormalize = opts.renormalize;
    spec.zave = opts.zave;
    spec.hidden = opts.hidden.clone();
    let mut model = GvnnModel::init(&spec, &mut Rng::derived(t.seed, "model"))?;
    if opts.freeze_b {
        model.freeze_support_path(true);
    }
    let report = train_forecaster(&dataset, &mut model, t)?;
    Ok(TrainOutcome { report, model, dataset })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl RunManifest {
    fn new(command: &str, config: serde_json::Value, seed: Option<u64>, inputs: &[PathBuf]) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
                Ok(InputDigest {
                    path: p.clone(),
                    sha256: sha256_hex(&bytes),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            command: command.into(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            inputs,
            outputs: Vec::new(),
        })
    }

    /// Writes the manifest and returns its digest.
    fn write(&self, path: &Path) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, &text).map_err(|e| Error::io(path, e))?;
        Ok(sha256_hex(text.as_bytes()))
    }
}

fn header(digest: &str) -> String {
    format!("{FORMAT_HEADER} manifest={digest}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Gvft(a) => cmd_gvft(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn config_inputs(config: &Option<PathBuf>) -> Vec<PathBuf> {
    config.iter().cloned().collect()
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<i32> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let seed = cfg.get(a.seed, "seed", 0)?;
    let name: String = cfg.get(a.map.clone(), "map", "hopfield".to_string())?;
    let nodes = cfg.opt(a.nodes, "nodes")?;
    let length = cfg.opt(a.length, "length")?;
    cfg.finish()?;
    let map = map_config(&name, nodes, length, seed)?;

    ensure_parent(&a.out)?;
    let sidecar_path = sidecar(&a.out, ".json");
    let mut manifest = RunManifest::new(
        "generate",
        serde_json::to_value(&map)?,
        Some(seed),
        &config_inputs(&a.config),
    )?;
    manifest.outputs = vec![a.out.clone(), sidecar_path.clone()];
    let digest = manifest.write(&sidecar(&a.out, ".manifest.json"))?;

    let signal = map.simulate()?;
    write_text(&a.out, &signal_to_csv(signal.values(), &header(&digest)))?;
    write_json(&sidecar_path, &json!({"manifest_sha256": digest, "map_config": map}))?;
    println!(
        "wrote {} ({} nodes x {} samples)",
        a.out.display(),
        signal.node_count(),
        signal.len()
    );
    Ok(EXIT_OK)
}

fn resolve_train(a: &TrainArgs, cfg: &ConfigFile) -> Result<TrainOptions> {
    let seed = cfg.get(a.seed, "seed", 0)?;
    let data = DataSource::resolve(&a.data, cfg, seed)?;
    let d = TrainConfig::default();
    let train = TrainConfig {
        lr: cfg.get(a.lr, "lr", d.lr)?,
        epochs: cfg.get(a.epochs, "epochs", d.epochs)?,
        batch: cfg.get(a.batch, "batch", d.batch)?,
        seed,
        weight_decay: cfg.get(a.weight_decay, "weight-decay", d.weight_decay)?,
        window: cfg.get(a.window, "window", d.window)?,
        horizon: cfg.get(a.horizon, "horizon", d.horizon)?,
        stride: cfg.get(a.stride, "stride", d.stride)?,
        clip: cfg.opt(a.clip, "clip")?,
    };
    let node_fn: NodeFunction = cfg.get(a.node_fn.clone(), "node-fn", "ic".into())?.parse()?;
    let support = SupportSource::resolve(
        cfg.opt(a.support.clone(), "support")?,
        cfg.opt(a.support_file.clone(), "support-file")?,
    )?;
    let support_param: SupportParam = cfg
        .get(a.support_param.clone(), "support-param", "dense".into())?
        .parse()?;
    let hidden_text: String = cfg.get(a.hidden.clone(), "hidden", DEFAULT_HIDDEN.to_string())?;
    let hidden = hidden_text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad hidden width `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let opts = TrainOptions {
        data,
        node_fn,
        support,
        support_param,
        renormalize: cfg.get(a.renorm, "renorm", true)?,
        zave: cfg.get(a.zave, "zave", true)?,
        layers: cfg.get(a.layers, "layers", 1)?,
        hidden,
        freeze_b: cfg.get(a.freeze_b, "freeze-b", false)?,
        train,
    };
    cfg.finish()?;
    Ok(opts)
}

pub fn cmd_train(a: &TrainArgs) -> Result<i32> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let opts = resolve_train(a, &cfg)?;

    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let files = ["report.json", "curve.csv", "checkpoint.json", "timing.json"].map(|f| a.out.join(f));
    let mut inputs = opts.data.input_paths();
    inputs.extend(opts.support.input_paths());
    inputs.extend(config_inputs(&a.config));
    let mut manifest = RunManifest::new("train", serde_json::to_value(&opts)?, Some(opts.train.seed), &inputs)?;
    manifest.outputs = files.to_vec();
    let digest = manifest.write(&a.out.join("manifest.json"))?;

    let outcome = run_training(&opts)?;
    let r = &outcome.report;
    write_json(&files[0], &json!({"manifest_sha256": digest, "report": r}))?;
    write_text(&files[1], &r.curve_csv(&header(&digest)))?;
    let mut ck = Checkpoint::new(outcome.model, opts.train.clone());
    ck.manifest_sha256 = Some(digest.clone());
    write_text(&files[2], &ck.to_json()?)?;
    write_json(
        &files[3],
        &json!({"manifest_sha256": digest, "wall_seconds": r.wall_seconds}),
    )?;
    println!(
        "best epoch {} val {:.6e}  test {:.6e}  persistence {:.6e}",
        r.best_epoch, r.best_val_loss, r.test_mse, r.persistence_test_mse
    );
    Ok(EXIT_OK)
}

pub fn cmd_eval(a: &EvalArgs) -> Result<i32> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let ck = Checkpoint::load(&a.checkpoint)?;
    let seed = cfg.get(a.seed, "seed", ck.seed)?;
    let source = DataSource::resolve(&a.data, &cfg, seed)?;
    cfg.finish()?;
    let splits: Vec<Split> = match a.split.as_str() {
        "train" => vec![Split::Train],
        "val" => vec![Split::Val],
        "test" => vec![Split::Test],
        "all" => vec![Split::Train, Split::Val, Split::Test],
        other => return Err(Error::InvalidConfig(format!("unknown split `{other}`"))),
    };

    ensure_parent(&a.out)?;
    let mut inputs = vec![a.checkpoint.clone()];
    inputs.extend(source.input_paths());
    inputs.extend(config_inputs(&a.config));
    let config = json!({"checkpoint": a.checkpoint, "data": source, "split": a.split});
    let mut manifest = RunManifest::new("eval", config, Some(seed), &inputs)?;
    manifest.outputs = vec![a.out.clone()];
    let digest = manifest.write(&sidecar(&a.out, ".manifest.json"))?;

    let signal = source.load()?;
    if signal.node_count() != ck.model.nodes() {
        return Err(Error::dims(format!(
            "checkpoint expects {} nodes, data has {}",
            ck.model.nodes(),
            signal.node_count()
        )));
    }
    let ds = make_windows(&signal, ck.config.window, ck.config.horizon, ck.config.stride)?;
    let samples: Vec<_> = splits.iter().flat_map(|&s| normalized_split(&ds, s)).collect();
    let mse = evaluate_mse(&samples, &ck.model)?;
    let persistence = persistence_mse(&samples)?;
    write_json(
        &a.out,
        &json!({
            "manifest_sha256": digest,
            "split": a.split,
            "windows": samples.len(),
            "mse": mse,
            "persistence_mse": persistence,
            "normalization": ck.normalization,
        }),
    )?;
    println!(
        "{} windows  mse {mse:.6e}  persistence {persistence:.6e}",
        samples.len()
    );
    Ok(EXIT_OK)
}

pub fn cmd_gvft(a: &GvftArgs) -> Result<i32> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let seed = cfg.get(a.seed, "seed", 0)?;
    let source = DataSource::resolve(&a.data, &cfg, seed)?;
    let node_fn: NodeFunction = cfg.get(a.node_fn.clone(), "node-fn", "ic".into())?.parse()?;
    let support = SupportSource::resolve(
        cfg.opt(a.support.clone(), "support")?,
        cfg.opt(a.support_file.clone(), "support-file")?,
    )?;
    cfg.finish()?;

    ensure_parent(&a.out)?;
    let mut inputs = source.input_paths();
    inputs.extend(support.input_paths());
    inputs.extend(config_inputs(&a.config));
    let config = json!({"data": source, "node_fn": node_fn.to_string(), "support": support});
    let mut manifest = RunManifest::new("gvft", config, Some(seed), &inputs)?;
    manifest.outputs = std::iter::once(a.out.clone()).chain(a.svg.clone()).collect();
    let digest = manifest.write(&sidecar(&a.out, ".manifest.json"))?;

    let signal = source.load()?;
    // A constant or all-zero node has no correlation; fall back to identity.
    let base = match support.build(&signal) {
        Err(Error::ZeroVariance(_)) => Matrix::identity(signal.node_count()),
        other => other?,
    };
    let result = gvft(&signal, &SupportMatrix::fixed(base)?, node_fn)?;
    write_coefficients_csv(&a.out, &result.coefficients, &header(&digest))?;
    if let Some(svg) = &a.svg {
        write_heatmap_svg(svg, &result.coefficients)?;
    }
    println!("wrote {} ({} x {})", a.out.display(), signal.node_count(), signal.len());
    Ok(EXIT_OK)
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let seed = cfg.get(a.seed, "seed", 0)?;
    let trials = cfg.get(a.trials, "trials", 100)?;
    cfg.finish()?;

    ensure_parent(&a.out)?;
    let mut manifest = RunManifest::new(
        "verify",
        json!({"trials": trials}),
        Some(seed),
        &config_inputs(&a.config),
    )?;
    manifest.outputs = vec![a.out.clone()];
    let digest = manifest.write(&sidecar(&a.out, ".manifest.json"))?;

    let reports = run_theory_suite(seed, trials);
    let failed = reports.iter().filter(|r| !r.passed).count();
    let body: serde_json::Value = serde_json::from_str(&reports_to_json(&reports)?)?;
    write_json(
        &a.out,
        &json!({"manifest_sha256": digest, "total": reports.len(), "failed": failed, "reports": body}),
    )?;
    println!("{} claims checked, {failed} failed", reports.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_VERIFICATION })
}

fn parse_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad list entry `{s}`")))
        })
        .collect()
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let t_list = parse_list(&cfg.get(a.t_list.clone(), "T-list", "64,128,256,512".into())?)?;
    let mut bench = BenchConfig::new(cfg.get(a.batch, "B", 8)?, cfg.get(a.nodes, "N", 16)?, t_list);
    bench.repeats = cfg.get(a.repeats, "repeats", bench.repeats)?;
    bench.seed = cfg.get(a.seed, "seed", 0)?;
    bench.kind = cfg.get(a.node_fn.clone(), "node-fn", "ic".into())?.parse()?;
    bench.parallel = cfg.get(a.parallel.then_some(true), "parallel", false)?;
    bench.temporal = match cfg.get(a.temporal.clone(), "temporal", "identity".into())?.as_str() {
        "identity" => Temporal::Identity,
        "path" => Temporal::Path,
        other => return Err(Error::InvalidConfig(format!("unknown temporal operator `{other}`"))),
    };
    bench.methods = match cfg.get(a.methods.clone(), "methods", "both".into())?.as_str() {
        "both" => Vec::new(),
        "naive" => vec![Method::NaiveKron],
        "batched" => vec![Method::BatchedLowRank],
        other => return Err(Error::InvalidConfig(format!("unknown method set `{other}`"))),
    };
    cfg.finish()?;

    ensure_parent(&a.out)?;
    let mut manifest = RunManifest::new(
        "bench",
        serde_json::to_value(&bench)?,
        Some(bench.seed),
        &config_inputs(&a.config),
    )?;
    manifest.outputs = std::iter::once(a.out.clone()).chain(a.svg.clone()).collect();
    let digest = manifest.write(&sidecar(&a.out, ".manifest.json"))?;

    let summary = run_benchmark(&bench)?;
    summary.write_csv(&a.out, &header(&digest))?;
    if let Some(svg) = &a.svg {
        write_text(svg, &summary.to_svg())?;
    }
    for (m, e) in &summary.exponents {
        println!("{m}: time ~ T^{e:.3}");
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_precedence() {
        let cfg = ConfigFile::parse("# c\nlr = 0.5\nepochs=3\n").unwrap();
        assert_eq!(cfg.get(Some(0.1), "lr", 1.0).unwrap(), 0.1);
        assert_eq!(cfg.get(None::<usize>, "epochs", 9).unwrap(), 3);
        assert_eq!(cfg.get(None::<usize>, "batch", 9).unwrap(), 9);
        cfg.finish().unwrap();
        let extra = ConfigFile::parse("bogus=1").unwrap();
        assert!(matches!(extra.finish(), Err(Error::InvalidConfig(_))));
        assert!(ConfigFile::parse("novalue").is_err());
        let bad = ConfigFile::parse("lr=abc").unwrap();
        assert!(matches!(bad.get(None::<f64>, "lr", 1.0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn support_param_parsing() {
        assert_eq!("dense".parse::<SupportParam>().unwrap(), SupportParam::Dense);
        assert_eq!(
            "lora".parse::<SupportParam>().unwrap(),
            SupportParam::Lora { rank: None }
        );
        assert_eq!(
            "hira:3".parse::<SupportParam>().unwrap(),
            SupportParam::Hira { rank: Some(3) }
        );
        assert!("lora:0".parse::<SupportParam>().is_err());
        assert!("dense:2".parse::<SupportParam>().is_err());
        assert!("other".parse::<SupportParam>().is_err());
        let s = SupportParam::Lora { rank: None }
            .build(Matrix::identity(16), &mut Rng::new(0))
            .unwrap();
        assert_eq!(s.rank(), Some(2));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InvalidConfig(String::new())), 2);
        assert_eq!(exit_code(&Error::Checkpoint(String::new())), 3);
        assert_eq!(exit_code(&Error::Divergence { step: 1 }), 4);
        assert_eq!(exit_code(&Error::Verification(String::new())), 5);
        assert_eq!(run(["gvnn-kit", "nonsense"]), 2);
    }
}
