//! Difficulty sampling and dataset construction.
//!
//! Step counts follow either the fixed empirical training distribution
//! (21/18/16/18/21 % over 1–5 moves, renormalized since those add up to 94),
//! the inverted-Gaussian weighting `1 - exp(-(s - mu)^2 / (2 sigma^2))`, or a
//! uniform distribution (the test profile). Turns are drawn uniformly from whatever the step count allows.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::maze::{self, Cell, Maze, MazeError};
use crate::rng;
use crate::trace::{count_turns, MoveSequence};

/// Training-set step frequencies for 1–5 moves, in percent.
pub const EMPIRICAL_PERCENT: [f64; 5] = [21.0, 18.0, 16.0, 18.0, 21.0];

pub const MAX_STEPS: usize = 10;
pub const MAX_TURNS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DifficultySpec {
    pub steps: usize,
    pub turns: usize,
}

impl DifficultySpec {
    pub const fn new(steps: usize, turns: usize) -> Self {
        Self { steps, turns }
    }

    pub fn is_valid(&self) -> bool {
        self.steps >= 1 && self.turns < self.steps
    }

    pub fn of(solution: &MoveSequence) -> Self {
        Self::new(solution.len(), solution.turns())
    }
}

impl fmt::Display for DifficultySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(steps={}, turns={})", self.steps, self.turns)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    Empirical,
    Formula,
    Uniform,
}

impl FromStr for StepMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "empirical" => Ok(StepMode::Empirical),
            "formula" => Ok(StepMode::Formula),
            "uniform" => Ok(StepMode::Uniform),
            other => Err(format!(
                "unknown step mode {other:?} (empirical|formula|uniform)"
            )),
        }
    }
}

impl fmt::Display for StepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepMode::Empirical => "empirical",
            StepMode::Formula => "formula",
            StepMode::Uniform => "uniform",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Train,
    Test,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Profile::Train),
            "test" => Ok(Profile::Test),
            other => Err(format!("unknown profile {other:?} (train|test)")),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Train => "train",
            Profile::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub mu: f64,
    pub sigma: f64,
    /// Inclusive.
    pub step_range: (usize, usize),
    /// Inclusive.
    pub turn_range: (usize, usize),
    pub mode: StepMode,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self::train()
    }
}

impl SamplerConfig {
    /// 1–5 moves, 0–2 turns, empirical step frequencies.
    pub fn train() -> Self {
        Self {
            mu: 3.0,
            sigma: 2.0,
            step_range: (1, 5),
            turn_range: (0, 2),
            mode: StepMode::Empirical,
        }
    }

    /// 1–10 moves, 0–4 turns, uniform over moves.
    pub fn test() -> Self {
        Self {
            mu: 3.0,
            sigma: 2.0,
            step_range: (1, 10),
            turn_range: (0, 4),
            mode: StepMode::Uniform,
        }
    }

    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Train => Self::train(),
            Profile::Test => Self::test(),
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let invalid = |msg: String| Err(SamplerError::InvalidConfig(msg));
        let (s_lo, s_hi) = self.step_range;
        let (t_lo, t_hi) = self.turn_range;
        if s_lo < 1 || s_lo > s_hi || s_hi > MAX_STEPS {
            return invalid(format!(
                "step range {s_lo}..={s_hi} must lie within 1..={MAX_STEPS}"
            ));
        }
        if t_lo > t_hi || t_hi > MAX_TURNS {
            return invalid(format!(
                "turn range {t_lo}..={t_hi} must lie within 0..={MAX_TURNS}"
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return invalid(format!("sigma must be positive, got {}", self.sigma));
        }
        if !self.mu.is_finite() {
            return invalid(format!("mu must be finite, got {}", self.mu));
        }
        if self.mode == StepMode::Empirical && s_hi > EMPIRICAL_PERCENT.len() {
            return invalid(format!(
                "empirical mode covers 1..={} moves, step range ends at {s_hi}",
                EMPIRICAL_PERCENT.len()
            ));
        }
        Ok(())
    }

    fn steps(&self) -> impl Iterator<Item = usize> {
        self.step_range.0..=self.step_range.1
    }
}

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),
    #[error("no turn count in {lo}..={hi} is possible with {steps} steps")]
    Infeasible { steps: usize, lo: usize, hi: usize },
    #[error(transparent)]
    Maze(#[from] MazeError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Probability of each step count in `config.step_range`, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    pub first_step: usize,
    pub probabilities: Vec<f64>,
}

impl StepDistribution {
    pub fn probability(&self, steps: usize) -> f64 {
        steps
            .checked_sub(self.first_step)
            .and_then(|i| self.probabilities.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

pub fn step_distribution(config: &SamplerConfig) -> Result<StepDistribution, SamplerError> {
    config.validate()?;
    let weights: Vec<f64> = match config.mode {
        StepMode::Empirical => config.steps().map(|s| EMPIRICAL_PERCENT[s - 1]).collect(),
        StepMode::Formula => config
            .steps()
            .map(|s| {
                let d = s as f64 - config.mu;
                1.0 - (-(d * d) / (2.0 * config.sigma * config.sigma)).exp()
            })
            .collect(),
        StepMode::Uniform => config.steps().map(|_| 1.0).collect(),
    };
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(SamplerError::InvalidConfig(
            "every step weight is zero".into(),
        ));
    }
    Ok(StepDistribution {
        first_step: config.step_range.0,
        probabilities: weights.iter().map(|w| w / total).collect(),
    })
}

fn turn_options(config: &SamplerConfig, steps: usize) -> Result<(usize, usize), SamplerError> {
    let (lo, hi) = config.turn_range;
    let hi_feasible = hi.min(steps - 1);
    if lo > hi_feasible {
        return Err(SamplerError::Infeasible { steps, lo, hi });
    }
    Ok((lo, hi_feasible))
}

/// Draws steps from [`step_distribution`] and turns uniformly from the turn
/// range clipped to `0..=steps-1`.
pub fn sample_spec(
    config: &SamplerConfig,
    rng: &mut rng::Rng,
) -> Result<DifficultySpec, SamplerError> {
    let dist = step_distribution(config)?;
    let index = WeightedIndex::new(&dist.probabilities)
        .expect("normalized weights")
        .sample(rng);
    let steps = dist.first_step + index;
    let (lo, hi) = turn_options(config, steps)?;
    Ok(DifficultySpec::new(steps, rng.random_range(lo..=hi)))
}

/// Samples specs that can actually be carved on a `width x height` grid.
///
/// The step distribution is conditioned on the existence of at least one
/// feasible turn count, and turns are drawn uniformly among the feasible
/// ones. On grids large enough for every spec in range this is identical to
/// [`sample_spec`].
#[derive(Debug, Clone)]
pub struct GridSpecSampler {
    steps: Vec<usize>,
    step_index: WeightedIndex<f64>,
    turns: HashMap<usize, Vec<usize>>,
}

impl GridSpecSampler {
    pub fn new(config: &SamplerConfig, width: usize, height: usize) -> Result<Self, SamplerError> {
        let dist = step_distribution(config)?;
        let mut steps = Vec::new();
        let mut weights = Vec::new();
        let mut turns = HashMap::new();
        for (i, &p) in dist.probabilities.iter().enumerate() {
            let s = dist.first_step + i;
            let Ok((lo, hi)) = turn_options(config, s) else {
                continue;
            };
            let options: Vec<usize> = (lo..=hi)
                .filter(|&t| maze::is_feasible(DifficultySpec::new(s, t), width, height))
                .collect();
            if p > 0.0 && !options.is_empty() {
                steps.push(s);
                weights.push(p);
                turns.insert(s, options);
            }
        }
        let step_index = WeightedIndex::new(&weights).map_err(|_| {
            SamplerError::InvalidConfig(format!(
                "no spec in the configured ranges fits a {width}x{height} grid"
            ))
        })?;
        Ok(Self {
            steps,
            step_index,
            turns,
        })
    }

    pub fn sample(&self, rng: &mut rng::Rng) -> DifficultySpec {
        let steps = self.steps[self.step_index.sample(rng)];
        let options = &self.turns[&steps];
        DifficultySpec::new(steps, options[rng.random_range(0..options.len())])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRecord {
    pub id: u64,
    pub maze: Maze,
    pub solution: MoveSequence,
    pub spec: DifficultySpec,
}

impl DatasetRecord {
    pub fn new(id: u64, maze: Maze) -> Result<Self, MazeError> {
        let solution = maze.solve()?;
        let spec = DifficultySpec::of(&solution);
        Ok(Self {
            id,
            maze,
            solution,
            spec,
        })
    }

    /// Re-derives the solution and spec from the maze.
    pub fn verify(&self) -> Result<(), String> {
        let solved = self.maze.solve().map_err(|e| e.to_string())?;
        if solved != self.solution {
            return Err(format!(
                "solution {} differs from BFS path {}",
                self.solution, solved
            ));
        }
        if DifficultySpec::of(&solved) != self.spec {
            return Err(format!(
                "spec {} does not match solution {}",
                self.spec,
                DifficultySpec::of(&solved)
            ));
        }
        Ok(())
    }
}

/// Builds `count` records. Record `i` draws from its own stream derived from
/// `(seed, i)`, so output is independent of thread count.
pub fn build_dataset(
    config: &SamplerConfig,
    count: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Vec<DatasetRecord>, SamplerError> {
    if count == 0 {
        return Err(SamplerError::InvalidConfig(
            "record count must be at least 1".into(),
        ));
    }
    let sampler = GridSpecSampler::new(config, width, height)?;
    (0..count as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = rng::stream(seed, &[id]);
            let spec = sampler.sample(&mut rng);
            let maze = maze::generate(spec, width, height, rng.random())?;
            let record = DatasetRecord::new(id, maze)?;
            debug_assert_eq!(record.spec, spec);
            Ok(record)
        })
        .collect()
}

pub const DATASET_HEADER: &str =
    "# id\twidth\theight\tgrid_hex\tstart\ttarget\tsolution\tsteps\tturns";

pub fn format_record(record: &DatasetRecord) -> String {
    let m = &record.maze;
    format!(
        "{}\t{}\t{}\t{}\t{},{}\t{},{}\t{}\t{}\t{}",
        record.id,
        m.width(),
        m.height(),
        m.walls_hex(),
        m.start().row,
        m.start().col,
        m.target().row,
        m.target().col,
        record.solution.to_tokens(),
        record.spec.steps,
        record.spec.turns
    )
}

pub fn write_records(
    records: &[DatasetRecord],
    path: impl AsRef<Path>,
) -> Result<(), SamplerError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for record in records {
        writeln!(out, "{}", format_record(record))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<DatasetRecord>, SamplerError> {
    parse_records(&fs::read_to_string(path)?)
}

/// Parses dataset text. `#` lines and blank lines are skipped; every record
/// is re-verified against the BFS oracle.
pub fn parse_records(text: &str) -> Result<Vec<DatasetRecord>, SamplerError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty())
        .map(|(i, l)| {
            parse_line(l).map_err(|message| SamplerError::Parse {
                line: i + 1,
                message,
            })
        })
        .collect()
}

fn parse_line(line: &str) -> Result<DatasetRecord, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 9 {
        return Err(format!(
            "expected 9 tab-separated fields, found {}",
            fields.len()
        ));
    }
    let num = |name: &str, s: &str| s.parse::<usize>().map_err(|_| format!("bad {name} {s:?}"));
    let cell = |name: &str, s: &str| -> Result<Cell, String> {
        let (r, c) = s
            .split_once(',')
            .ok_or_else(|| format!("bad {name} {s:?}"))?;
        Ok(Cell::new(num(name, r)?, num(name, c)?))
    };
    let id = fields[0]
        .parse::<u64>()
        .map_err(|_| format!("bad id {:?}", fields[0]))?;
    let width = num("width", fields[1])?;
    let height = num("height", fields[2])?;
    let walls = fields[3]
        .chars()
        .map(|ch| match ch.to_digit(16) {
            Some(d) if !ch.is_ascii_uppercase() => Ok(d as u8),
            _ => Err(format!("bad hex digit {ch:?} in grid")),
        })
        .collect::<Result<Vec<u8>, String>>()?;
    let start = cell("start", fields[4])?;
    let target = cell("target", fields[5])?;
    let (moves, _) = count_turns(fields[6]);
    let solution = MoveSequence::new(moves);
    if solution.to_tokens() != fields[6] {
        return Err(format!("bad solution tokens {:?}", fields[6]));
    }
    let spec = DifficultySpec::new(num("steps", fields[7])?, num("turns", fields[8])?);
    let maze = Maze::new(width, height, walls, start, target).map_err(|e| e.to_string())?;
    let record = DatasetRecord {
        id,
        maze,
        solution,
        spec,
    };
    record.verify()?;
    Ok(record)
}
