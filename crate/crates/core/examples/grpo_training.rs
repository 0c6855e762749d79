//! Train the toy policy with GRPO and watch the reward move.
//!
//! cargo run --release --example grpo_training -- 300

use ariadne::grpo::{self, clipped_term, compute_advantages, Optimizer, TrainConfig};
use ariadne::sampler::{build_dataset, SamplerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let updates: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(300);

    let rewards = [1.6, 1.0, 1.0, 0.5];
    let adv = compute_advantages(&rewards)?;
    println!(
        "rewards {rewards:?} -> advantages {:?}",
        adv.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>()
    );
    println!(
        "clipped_term(1.5, 1, 0.2) = {}",
        clipped_term(1.5, 1.0, 0.2)
    );

    let config = SamplerConfig {
        step_range: (1, 3),
        turn_range: (1, 2),
        ..SamplerConfig::train()
    };
    let data = build_dataset(&config, 2000, 5, 5, 1)?;
    let train = TrainConfig {
        total_updates: updates,
        grad_accum: 4,
        learning_rate: 0.01,
        optimizer: Optimizer::Adam,
        ..TrainConfig::default()
    };
    let (_params, log) = grpo::train(&data, &train, |u, _, row| {
        if u % (updates / 10).max(1) == 0 {
            println!(
                "update {u:>4}  reward {:.3}  |A| {:.3}  clipped {:.3}  lr {:.4}",
                row.mean_reward, row.mean_abs_advantage, row.clip_fraction, row.lr
            );
        }
    })?;
    if let Some((first, last)) = log.reward_trend(0.1) {
        println!("mean reward: first 10% {first:.3}, last 10% {last:.3}");
    }
    Ok(())
}
