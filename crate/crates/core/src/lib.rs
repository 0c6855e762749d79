//! Ariadne: a desk-scale lab for reinforcement learning with verifiable
//! rewards on maze path-finding.
//!
//! The pipeline is
//!
//! 1. [`sampler`] draws (steps, turns) difficulty specs and [`maze`] carves a
//!    maze whose unique shortest path has exactly that difficulty;
//! 2. a small autoregressive [`policy`] answers with move tokens, which
//!    [`trace`] parses and [`reward`] scores with the turn-scaled prefix reward;
//! 3. [`grpo`] trains the policy with group-normalized advantages and the
//!    clipped surrogate objective;
//! 4. [`eval`] measures success per move or turn bucket and locates the
//!    collapse point.
//!
//! The [`cli`] module backs the `ariadne` binary.

pub mod cli;
pub mod eval;
pub mod grpo;
pub mod maze;
pub mod policy;
pub mod reward;
pub mod rng;
pub mod sampler;
pub mod trace;

pub use eval::{detect_collapse, path_efficiency, Axis, SuccessCurve};
pub use grpo::{clipped_term, compute_advantages, train, TrainConfig, TrainLog};
pub use maze::{generate, Cell, Maze, MazeError};
pub use policy::{PolicyParams, PolicyToken, Rollout};
pub use reward::{correctness_reward, score_group, RewardBreakdown, RewardConfig};
pub use sampler::{build_dataset, DatasetRecord, DifficultySpec, SamplerConfig, StepMode};
pub use trace::{count_turns, extract_format, token_length, Move, MoveSequence, ParsedCompletion};
