//! Success rate as a function of moves and turns, with collapse points.
//!
//! cargo run --release --example boundary_probe

use ariadne::eval::{self, Axis, OracleAgent, PolicyAgent};
use ariadne::policy::PolicyParams;
use ariadne::sampler::{build_dataset, SamplerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let testset = build_dataset(&SamplerConfig::test(), 400, 5, 5, 3)?;

    let oracle = eval::evaluate_records(&OracleAgent, &testset, 2, 0)?;
    let moves = eval::aggregate(&testset, &oracle, Axis::Moves);
    let turns = eval::aggregate(&testset, &oracle, Axis::Turns);
    println!(
        "scripted oracle\n{}",
        eval::probe_report(&moves, &turns, 0.0)
    );

    let params = PolicyParams::for_features(testset[0].maze.encode_features().len(), 64, 0);
    let agent = PolicyAgent {
        params: &params,
        temperature: 1.0,
    };
    let outcomes = eval::evaluate_records(&agent, &testset, 8, 0)?;
    let moves = eval::aggregate(&testset, &outcomes, Axis::Moves);
    let turns = eval::aggregate(&testset, &outcomes, Axis::Turns);
    println!(
        "untrained policy\n{}",
        eval::probe_report(&moves, &turns, 0.0)
    );
    println!("overall success {:.4}", eval::overall_success(&outcomes));

    println!("path efficiency 6/4 = {}", eval::path_efficiency(6.0, 4.0)?);
    Ok(())
}
