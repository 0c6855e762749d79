//! Difficulty sampling and dataset files.
//!
//! cargo run --release --example dataset_sampling

use std::collections::BTreeMap;

use ariadne::sampler::{self, step_distribution, Profile, SamplerConfig, StepMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for mode in [StepMode::Empirical, StepMode::Formula] {
        let config = SamplerConfig {
            mode,
            ..SamplerConfig::train()
        };
        let dist = step_distribution(&config)?;
        let probs: Vec<String> = dist
            .probabilities
            .iter()
            .map(|p| format!("{p:.4}"))
            .collect();
        println!("{mode:<9} P(steps=1..5) = {}", probs.join(" "));
    }

    for profile in [Profile::Train, Profile::Test] {
        let config = SamplerConfig::profile(profile);
        let records = sampler::build_dataset(&config, 1000, 5, 5, 11)?;
        let mut by_spec: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for r in &records {
            *by_spec.entry((r.spec.steps, r.spec.turns)).or_default() += 1;
        }
        println!("{profile} profile, 1000 records:");
        for ((steps, turns), n) in by_spec {
            println!("  steps={steps:<2} turns={turns}  {n}");
        }
    }

    let records = sampler::build_dataset(&SamplerConfig::train(), 3, 5, 5, 1)?;
    let dir = std::env::temp_dir().join("ariadne-dataset-example.tsv");
    sampler::write_records(&records, &dir)?;
    let back = sampler::read_records(&dir)?;
    assert_eq!(back, records);
    for r in &back {
        println!("{}", sampler::format_record(r));
    }
    Ok(())
}
