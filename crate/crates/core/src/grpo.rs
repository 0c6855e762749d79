//! Group Relative Policy Optimization.
//!
//! For each prompt, G completions are sampled from a frozen snapshot of the
//! policy and scored. Rewards are standardized within the group (population
//! standard deviation) to give advantages `A_i`, and the policy ascends
//!
//! ```text
//! J(θ) = 1/G Σ_i min(ρ_i A_i, clip(ρ_i, 1-ε, 1+ε) A_i) - β · KL_i
//! ```
//!
//! with the sequence-level ratio `ρ_i = π_θ(o_i|q) / π_old(o_i|q)`. The KL
//! term uses the snapshot as reference and is off by default (β = 0).

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use thiserror::Error;

use crate::policy::{self, PolicyError, PolicyParams, Rollout};
use crate::reward::{score_group, RewardConfig};
use crate::rng;
use crate::sampler::DatasetRecord;

/// Below this population std a group is treated as degenerate.
pub const DEGENERATE_STD: f64 = 1e-8;

// Stream tags for seed derivation.
const TAG_INIT: u64 = 1;
const TAG_ORDER: u64 = 2;
const TAG_ROLLOUT: u64 = 3;

#[derive(Debug, Error)]
pub enum GrpoError {
    #[error("group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset mixes maze sizes ({0}x{1} and {2}x{3})")]
    MixedMazeSizes(usize, usize, usize, usize),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Plain gradient ascent.
    Sgd,
    /// Adam with β1 = 0.9, β2 = 0.999, ε = 1e-8.
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(format!("unknown optimizer {other:?} (sgd|adam)")),
        }
    }
}

impl std::fmt::Display for Optimizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub group_size: usize,
    /// `f64::INFINITY` disables clipping.
    pub clip_epsilon: f64,
    pub learning_rate: f64,
    pub warmup_ratio: f64,
    pub grad_accum: usize,
    pub temperature: f64,
    pub total_updates: usize,
    pub seed: u64,
    pub hidden_dim: usize,
    pub kl_coef: f64,
    /// Optimizer steps per sampled batch. With 1 the snapshot equals the
    /// current policy whenever gradients are taken, so clipping never fires.
    pub inner_epochs: usize,
    pub optimizer: Optimizer,
    pub reward: RewardConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            group_size: 8,
            clip_epsilon: 0.2,
            learning_rate: 1e-6,
            warmup_ratio: 0.05,
            grad_accum: 16,
            temperature: 1.0,
            total_updates: 100,
            seed: 0,
            hidden_dim: policy::DEFAULT_HIDDEN,
            kl_coef: 0.0,
            inner_epochs: 1,
            optimizer: Optimizer::Sgd,
            reward: RewardConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        let bad = |m: String| Err(GrpoError::InvalidConfig(m));
        if self.group_size < 2 {
            return bad(format!("group_size must be >= 2, got {}", self.group_size));
        }
        let eps = self.clip_epsilon;
        if !(eps == f64::INFINITY || (eps > 0.0 && eps < 1.0)) {
            return bad(format!("clip_epsilon must be in (0, 1), got {eps}"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            ));
        }
        if !(0.0..1.0).contains(&self.warmup_ratio) {
            return bad(format!(
                "warmup_ratio must be in [0, 1), got {}",
                self.warmup_ratio
            ));
        }
        if self.grad_accum == 0 {
            return bad("grad_accum must be >= 1".into());
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad(format!(
                "temperature must be positive, got {}",
                self.temperature
            ));
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be >= 1".into());
        }
        if !(self.kl_coef >= 0.0 && self.kl_coef.is_finite()) {
            return bad(format!(
                "kl_coef must be non-negative, got {}",
                self.kl_coef
            ));
        }
        if self.inner_epochs == 0 {
            return bad("inner_epochs must be >= 1".into());
        }
        Ok(())
    }

    pub fn warmup_updates(&self) -> usize {
        (self.warmup_ratio * self.total_updates as f64).ceil() as usize
    }

    /// Linear ramp to `learning_rate` over the warmup updates, constant after.
    pub fn lr_at(&self, update: usize) -> f64 {
        let warmup = self.warmup_updates();
        if update < warmup {
            self.learning_rate * (update + 1) as f64 / warmup as f64
        } else {
            self.learning_rate
        }
    }
}

/// Standardized rewards with population std; all zeros for degenerate groups.
pub fn compute_advantages(rewards: &[f64]) -> Result<Vec<f64>, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < DEGENERATE_STD {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

pub fn clip_ratio(ratio: f64, epsilon: f64) -> f64 {
    ratio.clamp(1.0 - epsilon, 1.0 + epsilon)
}

/// `min(ρA, clip(ρ, 1-ε, 1+ε)A)`.
pub fn clipped_term(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    (ratio * advantage).min(clip_ratio(ratio, epsilon) * advantage)
}

/// One prompt's sampled completions with their rewards and advantages.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    pub prompt_id: u64,
    pub features: Vec<f64>,
    pub rollouts: Vec<Rollout>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupObjective {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Rollouts whose clipped branch was active (zero gradient).
    pub clipped: usize,
}

pub fn group_objective_and_grad(
    current: &PolicyParams,
    group: &GroupSample,
    config: &TrainConfig,
) -> Result<GroupObjective, GrpoError> {
    let g = group.rollouts.len();
    if g < 2 || group.advantages.len() != g {
        return Err(GrpoError::GroupTooSmall(g.min(group.advantages.len())));
    }
    let eps = config.clip_epsilon;
    let beta = config.kl_coef;
    let mut value = 0.0;
    let mut grad = vec![0.0; current.len()];
    let mut clipped = 0;
    for (rollout, &adv) in group.rollouts.iter().zip(&group.advantages) {
        let (logp, logp_grad) =
            policy::sequence_logprob_and_grad(current, &rollout.tokens, &group.features)?;
        let log_ratio = logp - rollout.logprob_old;
        let ratio = log_ratio.exp();
        let unclipped = ratio * adv;
        let clipped_value = clip_ratio(ratio, eps) * adv;
        value += unclipped.min(clipped_value);

        // d/dθ of ρA is ρA ∇log π; the clipped branch is constant in θ
        // unless ρ sits inside the clip interval, where both coincide.
        let mut coeff = if unclipped <= clipped_value || clip_ratio(ratio, eps) == ratio {
            unclipped
        } else {
            clipped += 1;
            0.0
        };
        if beta > 0.0 {
            // k3 estimator: r - 1 - ln r with r = π_old / π_θ.
            let r = (-log_ratio).exp();
            value -= beta * (r - 1.0 + log_ratio);
            coeff -= beta * (1.0 - r);
        }
        if coeff != 0.0 {
            for (acc, dg) in grad.iter_mut().zip(&logp_grad) {
                *acc += coeff * dg;
            }
        }
    }
    let inv = 1.0 / g as f64;
    grad.iter_mut().for_each(|x| *x *= inv);
    Ok(GroupObjective {
        value: value * inv,
        grad,
        clipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRow {
    pub update: usize,
    pub mean_reward: f64,
    pub mean_abs_advantage: f64,
    pub clip_fraction: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<TrainLogRow>,
}

pub const TRAIN_LOG_HEADER: &str = "update,mean_reward,mean_abs_advantage,clip_fraction,lr";

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{TRAIN_LOG_HEADER}\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.update, r.mean_reward, r.mean_abs_advantage, r.clip_fraction, r.lr
            )
            .unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), GrpoError> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Mean of `mean_reward` over the first and last `fraction` of updates,
    /// or `None` for an empty log.
    pub fn reward_trend(&self, fraction: f64) -> Option<(f64, f64)> {
        let n = self.rows.len();
        if n == 0 {
            return None;
        }
        let k = ((n as f64 * fraction).round() as usize).clamp(1, n);
        let mean = |rows: &[TrainLogRow]| {
            rows.iter().map(|r| r.mean_reward).sum::<f64>() / rows.len() as f64
        };
        Some((mean(&self.rows[..k]), mean(&self.rows[n - k..])))
    }
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamState {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn ascend(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let step = (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
            theta[i] += lr * step;
        }
    }
}

/// Samples and scores one group for `record` from the snapshot `old`.
pub fn sample_group(
    old: &PolicyParams,
    record: &DatasetRecord,
    draw: u64,
    config: &TrainConfig,
) -> Result<GroupSample, GrpoError> {
    let features = record.maze.encode_features();
    let rollouts = (0..config.group_size as u64)
        .map(|i| {
            let mut rng = rng::stream(config.seed, &[TAG_ROLLOUT, draw, i]);
            policy::sample_rollout(old, old, &features, config.temperature, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let texts: Vec<&str> = rollouts
        .iter()
        .map(|r| r.completion_text.as_str())
        .collect();
    let rewards: Vec<f64> = score_group(&texts, &record.solution, config.reward)
        .iter()
        .map(|b| b.total)
        .collect();
    let advantages = compute_advantages(&rewards)?;
    Ok(GroupSample {
        prompt_id: record.id,
        features,
        rollouts,
        rewards,
        advantages,
    })
}

/// Seed-determined initial parameters for a dataset's maze size.
pub fn initial_params(
    dataset: &[DatasetRecord],
    config: &TrainConfig,
) -> Result<PolicyParams, GrpoError> {
    let first = dataset.first().ok_or(GrpoError::EmptyDataset)?;
    let feature_len = first.maze.encode_features().len();
    Ok(PolicyParams::for_features(
        feature_len,
        config.hidden_dim,
        rng::derive_seed(config.seed, &[TAG_INIT]),
    ))
}

pub fn train<F>(
    dataset: &[DatasetRecord],
    config: &TrainConfig,
    eval_hook: F,
) -> Result<(PolicyParams, TrainLog), GrpoError>
where
    F: FnMut(usize, &PolicyParams, &TrainLogRow),
{
    let init = initial_params(dataset, config)?;
    train_from(init, dataset, config, eval_hook)
}

/// Runs `config.total_updates` updates starting from `params`.
///
/// Each update snapshots the policy, samples `grad_accum` prompts (walking
/// the dataset in a fresh seeded permutation per pass) with `group_size`
/// rollouts each, averages the group gradients in prompt order, and takes
/// `inner_epochs` ascent steps. Results do not depend on the rayon pool size.
pub fn train_from<F>(
    mut params: PolicyParams,
    dataset: &[DatasetRecord],
    config: &TrainConfig,
    mut eval_hook: F,
) -> Result<(PolicyParams, TrainLog), GrpoError>
where
    F: FnMut(usize, &PolicyParams, &TrainLogRow),
{
    config.validate()?;
    let first = dataset.first().ok_or(GrpoError::EmptyDataset)?;
    let (w, h) = (first.maze.width(), first.maze.height());
    if let Some(r) = dataset
        .iter()
        .find(|r| (r.maze.width(), r.maze.height()) != (w, h))
    {
        return Err(GrpoError::MixedMazeSizes(
            w,
            h,
            r.maze.width(),
            r.maze.height(),
        ));
    }
    let feature_len = first.maze.encode_features().len();
    if params.feature_len() != feature_len {
        return Err(PolicyError::DimensionMismatch {
            expected: feature_len,
            actual: params.feature_len(),
        }
        .into());
    }

    let n = dataset.len();
    let mut order: Vec<usize> = Vec::new();
    let mut order_pass = usize::MAX;
    let mut adam = AdamState::new(params.len());
    let mut log = TrainLog::default();

    for update in 0..config.total_updates {
        let old = params.clone();
        let draws: Vec<(u64, usize)> = (0..config.grad_accum)
            .map(|j| {
                let draw = update * config.grad_accum + j;
                let pass = draw / n;
                if pass != order_pass {
                    order = (0..n).collect();
                    order.shuffle(&mut rng::stream(config.seed, &[TAG_ORDER, pass as u64]));
                    order_pass = pass;
                }
                (draw as u64, order[draw % n])
            })
            .collect();
        let groups = draws
            .par_iter()
            .map(|&(draw, idx)| sample_group(&old, &dataset[idx], draw, config))
            .collect::<Result<Vec<_>, _>>()?;

        let lr = config.lr_at(update);
        let mut clipped = 0;
        for _ in 0..config.inner_epochs {
            let objectives = groups
                .par_iter()
                .map(|g| group_objective_and_grad(&params, g, config))
                .collect::<Result<Vec<_>, _>>()?;
            let mut grad = vec![0.0; params.len()];
            for obj in &objectives {
                clipped += obj.clipped;
                for (acc, x) in grad.iter_mut().zip(&obj.grad) {
                    *acc += x;
                }
            }
            let scale = 1.0 / groups.len() as f64;
            grad.iter_mut().for_each(|x| *x *= scale);
            match config.optimizer {
                Optimizer::Sgd => {
                    for (t, g) in params.theta.iter_mut().zip(&grad) {
                        *t += lr * g;
                    }
                }
                Optimizer::Adam => {
                    if grad.iter().any(|&x| x != 0.0) {
                        adam.ascend(&mut params.theta, &grad, lr);
                    }
                }
            }
        }

        let samples = (groups.len() * config.group_size) as f64;
        let row = TrainLogRow {
            update,
            mean_reward: groups.iter().flat_map(|g| &g.rewards).sum::<f64>() / samples,
            mean_abs_advantage: groups
                .iter()
                .flat_map(|g| &g.advantages)
                .map(|a| a.abs())
                .sum::<f64>()
                / samples,
            clip_fraction: clipped as f64 / (samples * config.inner_epochs as f64),
            lr,
        };
        eval_hook(update, &params, &row);
        log.rows.push(row);
    }
    Ok((params, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advantage_examples() {
        assert_eq!(compute_advantages(&[1.0, 1.0, 1.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(compute_advantages(&[0.0, 1.0]).unwrap(), vec![-1.0, 1.0]);
        let a = compute_advantages(&[0.2, 0.4, 0.6, 0.8]).unwrap();
        for (x, e) in a.iter().zip([-1.3416, -0.4472, 0.4472, 1.3416]) {
            assert!((x - e).abs() < 1e-3, "{x} vs {e}");
        }
        assert!(matches!(
            compute_advantages(&[1.0]),
            Err(GrpoError::GroupTooSmall(1))
        ));
    }

    #[test]
    fn clipped_term_examples() {
        assert_eq!(clipped_term(1.0, 2.0, 0.2), 2.0);
        assert_eq!(clipped_term(1.5, 1.0, 0.2), 1.2);
        assert_eq!(clipped_term(0.5, -1.0, 0.2), -0.8);
        assert_eq!(clipped_term(1.7, 3.0, f64::INFINITY), 1.7 * 3.0);
    }

    #[test]
    fn warmup_schedule() {
        let cfg = TrainConfig {
            learning_rate: 1.0,
            warmup_ratio: 0.05,
            total_updates: 100,
            ..Default::default()
        };
        assert_eq!(cfg.warmup_updates(), 5);
        assert_eq!(cfg.lr_at(0), 0.2);
        assert_eq!(cfg.lr_at(4), 1.0);
        assert_eq!(cfg.lr_at(50), 1.0);
        let none = TrainConfig {
            warmup_ratio: 0.0,
            ..cfg
        };
        assert_eq!(none.lr_at(0), 1.0);
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig {
                group_size: 1,
                ..ok.clone()
            },
            TrainConfig {
                clip_epsilon: -1.0,
                ..ok.clone()
            },
            TrainConfig {
                clip_epsilon: 1.0,
                ..ok.clone()
            },
            TrainConfig {
                warmup_ratio: 1.0,
                ..ok.clone()
            },
            TrainConfig {
                grad_accum: 0,
                ..ok.clone()
            },
            TrainConfig {
                temperature: 0.0,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert!(TrainConfig {
            clip_epsilon: f64::INFINITY,
            ..ok
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn reward_trend_windows() {
        let log = TrainLog {
            rows: (0..10)
                .map(|u| TrainLogRow {
                    update: u,
                    mean_reward: u as f64,
                    mean_abs_advantage: 0.0,
                    clip_fraction: 0.0,
                    lr: 0.0,
                })
                .collect(),
        };
        assert_eq!(log.reward_trend(0.1), Some((0.0, 9.0)));
        assert_eq!(log.reward_trend(0.2), Some((0.5, 8.5)));
        assert_eq!(TrainLog::default().reward_trend(0.1), None);
    }
}
