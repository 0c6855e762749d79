//! Score completions with the turn-scaled correctness reward and the two
//! format bonuses.
//!
//! cargo run --example reward_inspection

use ariadne::reward::{score, RewardConfig};
use ariadne::{count_turns, extract_format, MoveSequence};

fn main() {
    let answer = MoveSequence::from_tokens("<|up|><|up|><|right|>");
    let completions = [
        "<think>go up twice, then right</think><|up|><|up|><|right|>",
        "<|up|><|up|><|right|>",
        "<think>guess</think><|up|><|right|><|right|>",
        "<think>guess</think><|right|>",
        "<think>a</think><think>b</think><|up|><|up|><|right|>",
        "up up right",
    ];
    println!("answer {answer} ({} turns)", answer.turns());
    println!("correctness,answer_format,reasoning_format,total  completion");
    for text in completions {
        let b = score(text, &answer, RewardConfig::default());
        println!("{}  {text}", b.to_csv());
    }

    let straight = MoveSequence::from_tokens("<|right|><|right|>");
    for turn_floor in [false, true] {
        let b = score(
            "<think>x</think><|right|><|right|>",
            &straight,
            RewardConfig { turn_floor },
        );
        println!(
            "straight answer, turn_floor={turn_floor}: correctness {}",
            b.correctness
        );
    }

    let parsed = extract_format("<think>plan</think><|left|> <|down|>");
    println!(
        "parsed moves {} answer-ok {} reasoning-ok {}",
        parsed.moves, parsed.format_ok_answer, parsed.format_ok_reasoning
    );
    let (moves, turns) = count_turns("<|left|><|down|><|down|><|right|>");
    println!("{} moves, {turns} turns", moves.len());
}
