//! Verifiable reward: turn-scaled prefix correctness plus two format bonuses.
//!
//! Correctness for a predicted move list `R` against the answer `A`:
//!
//! * `R == A`: `0.2 * len(A) * turns(A)`
//! * otherwise, with `k` the longest common prefix: `0.1 * k * turns(A[..k])`
//!
//! A fully correct straight answer therefore scores zero unless
//! [`RewardConfig::turn_floor`] is set.

use rayon::prelude::*;

use crate::trace::{extract_format, turns_of, Move, MoveSequence, ParsedCompletion};

pub const ANSWER_FORMAT_WEIGHT: f64 = 0.5;
pub const REASONING_FORMAT_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RewardConfig {
    /// Use `max(turns, 1)` as the turn multiplier.
    pub turn_floor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub correctness: f64,
    pub answer_format: f64,
    pub reasoning_format: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{}",
            self.correctness, self.answer_format, self.reasoning_format, self.total
        )
    }
}

pub fn common_prefix_len(a: &[Move], b: &[Move]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Correctness term. Computed as an integer number of tenths and divided
/// once, so hand-checked values like 0.6 come out exact.
pub fn correctness_reward(
    completion: &ParsedCompletion,
    answer: &MoveSequence,
    config: RewardConfig,
) -> f64 {
    correctness_of_moves(completion.moves.moves(), answer, config)
}

pub fn correctness_of_moves(
    predicted: &[Move],
    answer: &MoveSequence,
    config: RewardConfig,
) -> f64 {
    let multiplier = |turns: usize| {
        if config.turn_floor {
            turns.max(1)
        } else {
            turns
        }
    };
    let answer_moves = answer.moves();
    let tenths = if predicted == answer_moves {
        2 * answer_moves.len() * multiplier(answer.turns())
    } else {
        let k = common_prefix_len(predicted, answer_moves);
        if k == 0 {
            0
        } else {
            k * multiplier(turns_of(&answer_moves[..k]))
        }
    };
    tenths as f64 / 10.0
}

pub fn format_rewards(completion: &ParsedCompletion) -> (f64, f64) {
    let answer = if completion.format_ok_answer {
        ANSWER_FORMAT_WEIGHT
    } else {
        0.0
    };
    let reasoning = if completion.format_ok_reasoning {
        REASONING_FORMAT_WEIGHT
    } else {
        0.0
    };
    (answer, reasoning)
}

pub fn score(completion: &str, answer: &MoveSequence, config: RewardConfig) -> RewardBreakdown {
    let parsed = extract_format(completion);
    let correctness = correctness_reward(&parsed, answer, config);
    let (answer_format, reasoning_format) = format_rewards(&parsed);
    RewardBreakdown {
        correctness,
        answer_format,
        reasoning_format,
        total: correctness + answer_format + reasoning_format,
    }
}

/// Scores every completion in a group against one answer, preserving order.
pub fn score_group<S: AsRef<str> + Sync>(
    completions: &[S],
    answer: &MoveSequence,
    config: RewardConfig,
) -> Vec<RewardBreakdown> {
    completions
        .par_iter()
        .map(|c| score(c.as_ref(), answer, config))
        .collect()
}
