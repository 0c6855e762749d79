//! Generate mazes with a controlled number of moves and turns.
//!
//! cargo run --example maze_generation -- 4 2 7

use ariadne::maze::{self, Maze};
use ariadne::DifficultySpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let steps = args.first().copied().unwrap_or(4);
    let turns = args.get(1).copied().unwrap_or(2);
    let seed = args.get(2).copied().unwrap_or(7) as u64;

    let spec = DifficultySpec::new(steps, turns);
    let maze = maze::generate(spec, 5, 5, seed)?;
    let path = maze.solve()?;
    println!("spec {spec}, seed {seed}");
    print!("{}", maze.render_ascii());
    println!(
        "shortest path {path} ({} moves, {} turns)",
        path.len(),
        path.turns()
    );
    println!("shortest paths: {}", maze.count_shortest_paths()?);
    println!("walls {}", maze.walls_hex());
    println!("feature vector length {}", maze.encode_features().len());

    let reparsed = Maze::parse_ascii(&maze.render_ascii())?;
    assert_eq!(reparsed, maze);

    for spec in [DifficultySpec::new(1, 1), DifficultySpec::new(10, 4)] {
        println!("{spec} feasible on 5x5: {}", maze::is_feasible(spec, 5, 5));
    }
    Ok(())
}
