//! Boundary probing: success rate and completion length per difficulty
//! bucket, collapse-point detection, and the route-efficiency ratio.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::policy::{self, PolicyParams};
use crate::rng;
use crate::sampler::DatasetRecord;
use crate::trace::{extract_format, token_length};

pub const DEFAULT_ROLLOUTS: usize = 8;
pub const CURVE_HEADER: &str = "bucket,success_rate,mean_tokens,n";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("test set is empty")]
    EmptyTestset,
    #[error("rollouts must be at least 1")]
    NoRollouts,
    #[error("curve has no buckets")]
    EmptyCurve,
    #[error("path lengths must be positive (got {model} / {shortest})")]
    InvalidLength { model: f64, shortest: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Policy(#[from] policy::PolicyError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Moves,
    Turns,
}

impl Axis {
    pub fn bucket(self, record: &DatasetRecord) -> usize {
        match self {
            Axis::Moves => record.spec.steps,
            Axis::Turns => record.spec.turns,
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "moves" => Ok(Axis::Moves),
            "turns" => Ok(Axis::Turns),
            other => Err(format!("unknown axis {other:?} (moves|turns)")),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Moves => "moves",
            Axis::Turns => "turns",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketStats {
    pub success_rate: f64,
    pub mean_token_length: f64,
    /// Test records in the bucket (not rollouts).
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessCurve {
    pub axis: Axis,
    pub buckets: BTreeMap<usize, BucketStats>,
}

impl SuccessCurve {
    pub fn rate(&self, bucket: usize) -> Option<f64> {
        self.buckets.get(&bucket).map(|b| b.success_rate)
    }

    pub fn total_samples(&self) -> usize {
        self.buckets.values().map(|b| b.n_samples).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CURVE_HEADER}\n");
        for (b, s) in &self.buckets {
            writeln!(
                out,
                "{b},{},{},{}",
                s.success_rate, s.mean_token_length, s.n_samples
            )
            .unwrap();
        }
        out
    }

    pub fn from_csv(text: &str, axis: Axis) -> Result<SuccessCurve, EvalError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == CURVE_HEADER => {}
            _ => {
                return Err(EvalError::Parse {
                    line: 1,
                    message: format!("expected header {CURVE_HEADER:?}"),
                })
            }
        }
        let mut buckets = BTreeMap::new();
        for (i, line) in lines {
            let err = |message: String| EvalError::Parse {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split(',').collect();
            let [b, rate, tokens, n] = fields[..] else {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            };
            let bucket = b.parse().map_err(|_| err(format!("bad bucket {b:?}")))?;
            let stats = BucketStats {
                success_rate: rate
                    .parse()
                    .map_err(|_| err(format!("bad success rate {rate:?}")))?,
                mean_token_length: tokens
                    .parse()
                    .map_err(|_| err(format!("bad mean tokens {tokens:?}")))?,
                n_samples: n.parse().map_err(|_| err(format!("bad count {n:?}")))?,
            };
            buckets.insert(bucket, stats);
        }
        Ok(SuccessCurve { axis, buckets })
    }
}

pub fn write_curve_csv(curve: &SuccessCurve, path: impl AsRef<Path>) -> Result<(), EvalError> {
    if curve.buckets.is_empty() {
        return Err(EvalError::EmptyCurve);
    }
    fs::write(path, curve.to_csv())?;
    Ok(())
}

pub fn read_curve_csv(path: impl AsRef<Path>, axis: Axis) -> Result<SuccessCurve, EvalError> {
    SuccessCurve::from_csv(&fs::read_to_string(path)?, axis)
}

/// Anything that answers a maze prompt with completion text.
pub trait Agent: Sync {
    fn complete(
        &self,
        record: &DatasetRecord,
        rollout: usize,
        rng: &mut rng::Rng,
    ) -> Result<String, EvalError>;
}

/// Samples completions from a policy at a fixed temperature.
pub struct PolicyAgent<'a> {
    pub params: &'a PolicyParams,
    pub temperature: f64,
}

impl Agent for PolicyAgent<'_> {
    fn complete(
        &self,
        record: &DatasetRecord,
        _rollout: usize,
        rng: &mut rng::Rng,
    ) -> Result<String, EvalError> {
        let features = record.maze.encode_features();
        let r = policy::sample_rollout(self.params, self.params, &features, self.temperature, rng)?;
        Ok(r.completion_text)
    }
}

/// Always answers with the BFS solution.
pub struct OracleAgent;

impl Agent for OracleAgent {
    fn complete(
        &self,
        record: &DatasetRecord,
        _rollout: usize,
        _rng: &mut rng::Rng,
    ) -> Result<String, EvalError> {
        let path = record.maze.solve().map_err(|e| EvalError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        Ok(format!(
            "<think>follow the corridor</think>{}",
            path.to_tokens()
        ))
    }
}

/// Outcome of all rollouts on one test record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordOutcome {
    pub successes: usize,
    pub rollouts: usize,
    pub total_tokens: usize,
}

impl RecordOutcome {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.rollouts as f64
    }
}

/// Runs `rollouts` completions per record. A rollout succeeds when its
/// extracted moves equal the ground-truth solution exactly. Rollout `j` of
/// record `i` uses the stream derived from `(seed, i, j)`.
pub fn evaluate_records<A: Agent>(
    agent: &A,
    testset: &[DatasetRecord],
    rollouts: usize,
    seed: u64,
) -> Result<Vec<RecordOutcome>, EvalError> {
    if testset.is_empty() {
        return Err(EvalError::EmptyTestset);
    }
    if rollouts == 0 {
        return Err(EvalError::NoRollouts);
    }
    testset
        .par_iter()
        .enumerate()
        .map(|(i, record)| {
            let mut outcome = RecordOutcome {
                successes: 0,
                rollouts,
                total_tokens: 0,
            };
            for j in 0..rollouts {
                let mut rng = rng::stream(seed, &[i as u64, j as u64]);
                let text = agent.complete(record, j, &mut rng)?;
                if extract_format(&text).moves == record.solution {
                    outcome.successes += 1;
                }
                outcome.total_tokens += token_length(&text);
            }
            Ok(outcome)
        })
        .collect()
}

pub fn aggregate(
    testset: &[DatasetRecord],
    outcomes: &[RecordOutcome],
    axis: Axis,
) -> SuccessCurve {
    let mut sums: BTreeMap<usize, (usize, usize, usize, usize)> = BTreeMap::new();
    for (record, o) in testset.iter().zip(outcomes) {
        let e = sums.entry(axis.bucket(record)).or_default();
        e.0 += o.successes;
        e.1 += o.rollouts;
        e.2 += o.total_tokens;
        e.3 += 1;
    }
    let buckets = sums
        .into_iter()
        .map(|(b, (succ, rolls, tokens, n))| {
            let stats = BucketStats {
                success_rate: succ as f64 / rolls as f64,
                mean_token_length: tokens as f64 / rolls as f64,
                n_samples: n,
            };
            (b, stats)
        })
        .collect();
    SuccessCurve { axis, buckets }
}

pub fn evaluate<A: Agent>(
    agent: &A,
    testset: &[DatasetRecord],
    rollouts: usize,
    axis: Axis,
    seed: u64,
) -> Result<SuccessCurve, EvalError> {
    let outcomes = evaluate_records(agent, testset, rollouts, seed)?;
    Ok(aggregate(testset, &outcomes, axis))
}

pub fn evaluate_policy(
    params: &PolicyParams,
    testset: &[DatasetRecord],
    rollouts: usize,
    temperature: f64,
    axis: Axis,
    seed: u64,
) -> Result<SuccessCurve, EvalError> {
    evaluate(
        &PolicyAgent {
            params,
            temperature,
        },
        testset,
        rollouts,
        axis,
        seed,
    )
}

/// Overall success rate across every rollout of every record.
pub fn overall_success(outcomes: &[RecordOutcome]) -> f64 {
    let succ: usize = outcomes.iter().map(|o| o.successes).sum();
    let total: usize = outcomes.iter().map(|o| o.rollouts).sum();
    succ as f64 / total as f64
}

/// Smallest bucket whose success rate, and that of every larger bucket, is at
/// most `threshold`.
pub fn detect_collapse(curve: &SuccessCurve, threshold: f64) -> Option<usize> {
    let mut collapse = None;
    for (&b, stats) in curve.buckets.iter().rev() {
        if stats.success_rate <= threshold {
            collapse = Some(b);
        } else {
            break;
        }
    }
    collapse
}

/// Generated path length over shortest path length.
pub fn path_efficiency(
    model_path_length: f64,
    shortest_path_length: f64,
) -> Result<f64, EvalError> {
    let valid = |x: f64| x > 0.0 && x.is_finite();
    if !valid(model_path_length) || !valid(shortest_path_length) {
        return Err(EvalError::InvalidLength {
            model: model_path_length,
            shortest: shortest_path_length,
        });
    }
    Ok(model_path_length / shortest_path_length)
}

/// Both axes plus collapse points, as printed by `ariadne probe --report`.
pub fn probe_report(moves: &SuccessCurve, turns: &SuccessCurve, threshold: f64) -> String {
    let mut out = String::new();
    for curve in [moves, turns] {
        writeln!(out, "axis={}", curve.axis).unwrap();
        out.push_str(&curve.to_csv());
        match detect_collapse(curve, threshold) {
            Some(b) => writeln!(out, "collapse={b}").unwrap(),
            None => writeln!(out, "collapse=none").unwrap(),
        }
    }
    out
}
