//! Sample from the toy policy and check its analytic gradient against
//! central differences.
//!
//! cargo run --release --example policy_rollout

use ariadne::maze;
use ariadne::policy::{self, PolicyParams};
use ariadne::{rng, DifficultySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = maze::generate(DifficultySpec::new(3, 1), 5, 5, 4)?;
    let features = m.encode_features();
    let params = PolicyParams::for_features(features.len(), 16, 0);
    println!(
        "{} parameters, input width {}",
        params.len(),
        params.input_dim
    );

    let mut r = rng::from_seed(1);
    for temperature in [1.0, 0.5, policy::GREEDY_TEMPERATURE] {
        let rollout = policy::sample_rollout(&params, &params, &features, temperature, &mut r)?;
        println!(
            "T={temperature}: logp {:.4}  {}",
            rollout.logprob_old, rollout.completion_text
        );
    }

    let rollout = policy::sample_rollout(&params, &params, &features, 1.0, &mut r)?;
    let (logp, grad) = policy::sequence_logprob_and_grad(&params, &rollout.tokens, &features)?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in (0..params.len()).step_by(97) {
        let mut plus = params.clone();
        plus.theta[i] += h;
        let mut minus = params.clone();
        minus.theta[i] -= h;
        let fd = (policy::sequence_logprob(&plus, &rollout.tokens, &features)?
            - policy::sequence_logprob(&minus, &rollout.tokens, &features)?)
            / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-8));
    }
    println!("logp {logp:.6}, worst relative gradient error {worst:.2e}");

    let text = policy::checkpoint_to_string(&params);
    assert_eq!(policy::parse_checkpoint(&text)?, params);
    println!("checkpoint: {} lines", text.lines().count());
    Ok(())
}
