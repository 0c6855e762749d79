//! The `ariadne` command line.
//!
//! Every setting has a key in a flat `key = value` config file (`--config`);
//! command-line flags are applied after the file and win. `profile` resets the
//! sampler fields, so it is always applied before the other keys.

use std::fmt;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::eval::{self, Axis};
use crate::grpo::{self, Optimizer, TrainConfig};
use crate::policy;
use crate::reward::{self, RewardConfig};
use crate::sampler::{self, Profile, SamplerConfig, StepMode};
use crate::trace::MoveSequence;

pub const THREADS_ENV: &str = "ARIADNE_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub rollouts: usize,
    pub temperature: f64,
    pub axis: Axis,
    pub collapse_threshold: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            rollouts: eval::DEFAULT_ROLLOUTS,
            temperature: 1.0,
            axis: Axis::Moves,
            collapse_threshold: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: Profile,
    pub sampler: SamplerConfig,
    pub train: TrainConfig,
    pub eval: EvalSettings,
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub ckpt: Option<PathBuf>,
    pub log: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: Profile::Train,
            sampler: SamplerConfig::train(),
            train: TrainConfig::default(),
            eval: EvalSettings::default(),
            count: 2000,
            width: crate::maze::DEFAULT_WIDTH,
            height: crate::maze::DEFAULT_HEIGHT,
            seed: 0,
            data: None,
            out: None,
            ckpt: None,
            log: None,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "profile",
    "mode",
    "mu",
    "sigma",
    "steps",
    "turns",
    "count",
    "width",
    "height",
    "seed",
    "group_size",
    "clip_epsilon",
    "learning_rate",
    "warmup_ratio",
    "grad_accum",
    "temperature",
    "total_updates",
    "hidden_dim",
    "kl_coef",
    "inner_epochs",
    "optimizer",
    "turn_floor",
    "rollouts",
    "eval_temperature",
    "axis",
    "collapse_threshold",
    "data",
    "out",
    "ckpt",
    "log",
];

/// Where a setting came from: a config file line, or the command line (0).
fn origin(line: usize) -> String {
    if line == 0 {
        "command line".to_string()
    } else {
        format!("line {line}")
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("{}: unknown key {key:?}", origin(*line))]
    UnknownKey { key: String, line: usize },
    #[error("{}: {key}: {message}", origin(*line))]
    InvalidValue {
        key: String,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits config text into entries. Blank lines and `#` comments are skipped.
pub fn parse_entries(text: &str) -> Result<Vec<ConfigEntry>, ConfigError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        entries.push(ConfigEntry {
            line,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

fn parse_value<T: std::str::FromStr>(value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("{value:?}: {e}"))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("expected true or false, got {other:?}")),
    }
}

/// `"3"` or `"1-3"`, inclusive.
fn parse_range(value: &str) -> Result<(usize, usize), String> {
    match value.split_once('-') {
        Some((lo, hi)) => Ok((parse_value(lo.trim())?, parse_value(hi.trim())?)),
        None => {
            let v = parse_value(value)?;
            Ok((v, v))
        }
    }
}

fn positive(v: usize) -> Result<usize, String> {
    if v == 0 {
        Err("must be at least 1".into())
    } else {
        Ok(v)
    }
}

impl RunConfig {
    /// Applies one setting, checking what can be checked without the rest.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "profile" => {
                self.profile = parse_value(value)?;
                self.sampler = SamplerConfig::profile(self.profile);
            }
            "mode" => self.sampler.mode = parse_value::<StepMode>(value)?,
            "mu" => self.sampler.mu = parse_value(value)?,
            "sigma" => self.sampler.sigma = parse_value(value)?,
            "steps" => self.sampler.step_range = parse_range(value)?,
            "turns" => self.sampler.turn_range = parse_range(value)?,
            "count" => self.count = positive(parse_value(value)?)?,
            "width" => self.width = positive(parse_value(value)?)?,
            "height" => self.height = positive(parse_value(value)?)?,
            "seed" => {
                self.seed = parse_value(value)?;
                self.train.seed = self.seed;
            }
            "group_size" => self.train.group_size = parse_value(value)?,
            "clip_epsilon" => self.train.clip_epsilon = parse_value(value)?,
            "learning_rate" => self.train.learning_rate = parse_value(value)?,
            "warmup_ratio" => self.train.warmup_ratio = parse_value(value)?,
            "grad_accum" => self.train.grad_accum = parse_value(value)?,
            "temperature" => self.train.temperature = parse_value(value)?,
            "total_updates" => self.train.total_updates = parse_value(value)?,
            "hidden_dim" => self.train.hidden_dim = parse_value(value)?,
            "kl_coef" => self.train.kl_coef = parse_value(value)?,
            "inner_epochs" => self.train.inner_epochs = parse_value(value)?,
            "optimizer" => self.train.optimizer = parse_value::<Optimizer>(value)?,
            "turn_floor" => self.train.reward.turn_floor = parse_bool(value)?,
            "rollouts" => self.eval.rollouts = positive(parse_value(value)?)?,
            "eval_temperature" => {
                let t: f64 = parse_value(value)?;
                if !(t > 0.0 && t.is_finite()) {
                    return Err(format!("must be positive, got {t}"));
                }
                self.eval.temperature = t;
            }
            "axis" => self.eval.axis = parse_value::<Axis>(value)?,
            "collapse_threshold" => {
                let t: f64 = parse_value(value)?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(format!("must be in [0, 1], got {t}"));
                }
                self.eval.collapse_threshold = t;
            }
            "data" => self.data = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "ckpt" => self.ckpt = Some(PathBuf::from(value)),
            "log" => self.log = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key {key:?}")),
        }
        // Train fields are independent of each other, so a failure here is
        // always caused by the key just applied.
        self.train.validate().map_err(|e| e.to_string())
    }

    pub fn from_entries(entries: &[ConfigEntry]) -> Result<RunConfig, ConfigError> {
        let mut config = RunConfig::default();
        let (profile, rest): (Vec<_>, Vec<_>) = entries.iter().partition(|e| e.key == "profile");
        for entry in profile.into_iter().chain(rest) {
            if !CONFIG_KEYS.contains(&entry.key.as_str()) {
                return Err(ConfigError::UnknownKey {
                    key: entry.key.clone(),
                    line: entry.line,
                });
            }
            config
                .set(&entry.key, &entry.value)
                .map_err(|message| ConfigError::InvalidValue {
                    key: entry.key.clone(),
                    line: entry.line,
                    message,
                })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sampler
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RunConfig::from_entries(&parse_entries(text)?)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

#[derive(Debug, Parser)]
#[command(
    name = "ariadne",
    version,
    about = "Maze RLVR laboratory: generate, reward, train, evaluate"
)]
struct Cli {
    /// Flat `key = value` settings file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (falls back to ARIADNE_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a maze dataset.
    Gen(GenArgs),
    /// Score one completion against an answer.
    Reward(RewardArgs),
    /// Train a policy with GRPO.
    Train(TrainArgs),
    /// Success curve of a checkpoint along one axis.
    Eval(EvalArgs),
    /// Success curves on both axes with collapse points.
    Probe(ProbeArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    profile: Option<Profile>,
    #[arg(long)]
    mode: Option<StepMode>,
    /// Step range such as `1-3`.
    #[arg(long)]
    steps: Option<String>,
    /// Turn range such as `1-2`.
    #[arg(long)]
    turns: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Print each maze as ASCII.
    #[arg(long)]
    show: bool,
}

#[derive(Debug, Args)]
struct RewardArgs {
    #[arg(long)]
    completion: String,
    #[arg(long)]
    answer: String,
    #[arg(long)]
    turn_floor: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    updates: Option<usize>,
    #[arg(long)]
    group_size: Option<usize>,
    /// Clip epsilon; `inf` disables clipping.
    #[arg(long, allow_negative_numbers = true)]
    clip: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lr: Option<f64>,
    #[arg(long)]
    warmup: Option<f64>,
    #[arg(long)]
    accum: Option<usize>,
    #[arg(long)]
    temp: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training log CSV path.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    kl: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    optimizer: Option<Optimizer>,
    #[arg(long)]
    turn_floor: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    rollouts: Option<usize>,
    #[arg(long)]
    temp: Option<f64>,
    #[arg(long)]
    axis: Option<Axis>,
    #[arg(long)]
    seed: Option<u64>,
    /// Curve CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    rollouts: Option<usize>,
    #[arg(long)]
    temp: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Print both curves, not just the collapse points.
    #[arg(long)]
    report: bool,
}

/// Flag values as config entries, so they pass through the same checks.
#[derive(Default)]
struct Overrides(Vec<ConfigEntry>);

impl Overrides {
    fn put<T: fmt::Display>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.0.push(ConfigEntry {
                line: 0,
                key: key.to_string(),
                value: v.to_string(),
            });
        }
    }

    fn path(&mut self, key: &str, value: &Option<PathBuf>) {
        self.put(key, value.as_ref().map(|p| p.display().to_string()));
    }

    fn flag(&mut self, key: &str, set: bool) {
        self.put(key, set.then_some("true"));
    }
}

impl Command {
    fn overrides(&self) -> Overrides {
        let mut o = Overrides::default();
        match self {
            Command::Gen(a) => {
                o.put("count", a.count);
                o.put("profile", a.profile);
                o.put("mode", a.mode);
                o.put("steps", a.steps.as_ref());
                o.put("turns", a.turns.as_ref());
                o.put("seed", a.seed);
                o.path("out", &a.out);
                o.put("width", a.width);
                o.put("height", a.height);
            }
            Command::Train(a) => {
                o.path("data", &a.data);
                o.put("total_updates", a.updates);
                o.put("group_size", a.group_size);
                o.put("clip_epsilon", a.clip);
                o.put("learning_rate", a.lr);
                o.put("warmup_ratio", a.warmup);
                o.put("grad_accum", a.accum);
                o.put("temperature", a.temp);
                o.put("seed", a.seed);
                o.path("out", &a.out);
                o.path("log", &a.log);
                o.put("hidden_dim", a.hidden);
                o.put("kl_coef", a.kl);
                o.put("inner_epochs", a.epochs);
                o.put("optimizer", a.optimizer);
                o.flag("turn_floor", a.turn_floor);
            }
            Command::Eval(a) => {
                o.path("ckpt", &a.ckpt);
                o.path("data", &a.data);
                o.put("rollouts", a.rollouts);
                o.put("eval_temperature", a.temp);
                o.put("axis", a.axis);
                o.put("seed", a.seed);
                o.path("out", &a.out);
            }
            Command::Probe(a) => {
                o.path("ckpt", &a.ckpt);
                o.path("data", &a.data);
                o.put("rollouts", a.rollouts);
                o.put("eval_temperature", a.temp);
                o.put("seed", a.seed);
                o.put("collapse_threshold", a.threshold);
            }
            Command::Reward(_) | Command::Version => {}
        }
        o
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn runtime(e: impl fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    value
        .as_deref()
        .ok_or_else(|| Failure::Usage(format!("missing --{flag}")))
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code: 0 on success, 1 on usage errors, 2 on runtime errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `ariadne --help` for usage");
            1
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let mut entries = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            parse_entries(&text)?
        }
        None => Vec::new(),
    };
    entries.extend(cli.command.overrides().0);
    let config = RunConfig::from_entries(&entries)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(Failure::Usage("thread count must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(runtime)?;
    pool.install(|| dispatch(&cli.command, &config))
}

fn dispatch(command: &Command, config: &RunConfig) -> Result<(), Failure> {
    match command {
        Command::Gen(args) => gen(config, args.show),
        Command::Reward(args) => reward_cmd(args),
        Command::Train(_) => train_cmd(config),
        Command::Eval(_) => eval_cmd(config),
        Command::Probe(args) => probe_cmd(config, args.report),
        Command::Version => {
            println!("ariadne {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn gen(config: &RunConfig, show: bool) -> Result<(), Failure> {
    let records = sampler::build_dataset(
        &config.sampler,
        config.count,
        config.width,
        config.height,
        config.seed,
    )
    .map_err(runtime)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &config.out {
        Some(path) => sampler::write_records(&records, path).map_err(runtime)?,
        None => {
            for r in &records {
                writeln!(out, "{}", sampler::format_record(r)).map_err(runtime)?;
            }
        }
    }
    if show {
        for r in &records {
            writeln!(out, "# {} {} {}", r.id, r.spec, r.solution).map_err(runtime)?;
            write!(out, "{}", r.maze.render_ascii()).map_err(runtime)?;
        }
    }
    Ok(())
}

fn reward_cmd(args: &RewardArgs) -> Result<(), Failure> {
    let answer = MoveSequence::from_tokens(&args.answer);
    let cfg = RewardConfig {
        turn_floor: args.turn_floor,
    };
    let breakdown = reward::score(&args.completion, &answer, cfg);
    println!("correctness,answer_format,reasoning_format,total");
    println!("{}", breakdown.to_csv());
    Ok(())
}

fn train_cmd(config: &RunConfig) -> Result<(), Failure> {
    let data = sampler::read_records(required(&config.data, "data")?).map_err(runtime)?;
    let out = required(&config.out, "out")?;
    let (params, log) = grpo::train(&data, &config.train, |_, _, _| {}).map_err(runtime)?;
    policy::save_checkpoint(&params, out).map_err(runtime)?;
    if let Some(path) = &config.log {
        log.write_csv(path).map_err(runtime)?;
    }
    if let Some((first, last)) = log.reward_trend(0.1) {
        eprintln!(
            "{} updates, mean reward {first:.4} (first 10%) -> {last:.4} (last 10%)",
            log.rows.len()
        );
    }
    Ok(())
}

fn load_inputs(
    config: &RunConfig,
) -> Result<(policy::PolicyParams, Vec<sampler::DatasetRecord>), Failure> {
    let params = policy::load_checkpoint(required(&config.ckpt, "ckpt")?).map_err(runtime)?;
    let data = sampler::read_records(required(&config.data, "data")?).map_err(runtime)?;
    Ok((params, data))
}

fn eval_cmd(config: &RunConfig) -> Result<(), Failure> {
    let (params, data) = load_inputs(config)?;
    let e = &config.eval;
    let curve = eval::evaluate_policy(
        &params,
        &data,
        e.rollouts,
        e.temperature,
        e.axis,
        config.seed,
    )
    .map_err(runtime)?;
    match &config.out {
        Some(path) => eval::write_curve_csv(&curve, path).map_err(runtime),
        None => {
            print!("{}", curve.to_csv());
            Ok(())
        }
    }
}

fn probe_cmd(config: &RunConfig, report: bool) -> Result<(), Failure> {
    let (params, data) = load_inputs(config)?;
    let e = &config.eval;
    let agent = eval::PolicyAgent {
        params: &params,
        temperature: e.temperature,
    };
    let outcomes =
        eval::evaluate_records(&agent, &data, e.rollouts, config.seed).map_err(runtime)?;
    let moves = eval::aggregate(&data, &outcomes, Axis::Moves);
    let turns = eval::aggregate(&data, &outcomes, Axis::Turns);
    if report {
        print!(
            "{}",
            eval::probe_report(&moves, &turns, e.collapse_threshold)
        );
    } else {
        for curve in [&moves, &turns] {
            let point = eval::detect_collapse(curve, e.collapse_threshold)
                .map_or("none".to_string(), |b| b.to_string());
            println!("{}_collapse={point}", curve.axis);
        }
    }
    Ok(())
}
