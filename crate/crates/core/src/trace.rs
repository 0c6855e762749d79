//! Move-token parsing.
//!
//! Completions carry their answer as a run of direction tokens
//! (`<|up|>`, `<|down|>`, `<|left|>`, `<|right|>`), optionally preceded by a
//! single `<think>…</think>` reasoning block. This module extracts the move
//! list, counts turns, and checks both format contracts.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;

pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";

static MOVE_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"<\|up\|>|<\|down\|>|<\|left\|>|<\|right\|>").unwrap());

static ANY_SPECIAL_TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<\|[^|]+?\|>").unwrap());

/// One cardinal move. Variant order is the BFS tie-break priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    Up,
    Down,
    Left,
    Right,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    pub fn token(self) -> &'static str {
        match self {
            Move::Up => "<|up|>",
            Move::Down => "<|down|>",
            Move::Left => "<|left|>",
            Move::Right => "<|right|>",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Move::Up => "up",
            Move::Down => "down",
            Move::Left => "left",
            Move::Right => "right",
        }
    }

    /// (row delta, col delta)
    pub fn delta(self) -> (isize, isize) {
        match self {
            Move::Up => (-1, 0),
            Move::Down => (1, 0),
            Move::Left => (0, -1),
            Move::Right => (0, 1),
        }
    }

    pub fn opposite(self) -> Move {
        match self {
            Move::Up => Move::Down,
            Move::Down => Move::Up,
            Move::Left => Move::Right,
            Move::Right => Move::Left,
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Move::Up | Move::Down)
    }

    fn from_token(token: &str) -> Option<Move> {
        match token {
            "<|up|>" => Some(Move::Up),
            "<|down|>" => Some(Move::Down),
            "<|left|>" => Some(Move::Left),
            "<|right|>" => Some(Move::Right),
            _ => None,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered list of moves. The turn count is derived, never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MoveSequence {
    moves: Vec<Move>,
}

impl MoveSequence {
    pub fn new(moves: Vec<Move>) -> Self {
        Self { moves }
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn turns(&self) -> usize {
        turns_of(&self.moves)
    }

    pub fn prefix(&self, k: usize) -> MoveSequence {
        MoveSequence::new(self.moves[..k.min(self.moves.len())].to_vec())
    }

    /// Concatenated token form, e.g. `<|up|><|right|>`.
    pub fn to_tokens(&self) -> String {
        self.moves.iter().map(|m| m.token()).collect()
    }

    /// Parses a token string. Non-token text is ignored, as in [`count_turns`].
    pub fn from_tokens(text: &str) -> MoveSequence {
        MoveSequence::new(count_turns(text).0)
    }
}

impl From<Vec<Move>> for MoveSequence {
    fn from(moves: Vec<Move>) -> Self {
        Self::new(moves)
    }
}

impl FromStr for MoveSequence {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(MoveSequence::from_tokens(s))
    }
}

impl fmt::Display for MoveSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_tokens())
    }
}

/// Number of adjacent positions holding different moves.
pub fn turns_of(moves: &[Move]) -> usize {
    moves.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Extracts every direction token left to right and counts the turns between them.
pub fn count_turns(text: &str) -> (Vec<Move>, usize) {
    let moves: Vec<Move> = MOVE_TOKEN
        .find_iter(text)
        .filter_map(|m| Move::from_token(m.as_str()))
        .collect();
    let turns = turns_of(&moves);
    (moves, turns)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCompletion {
    pub raw_text: String,
    pub think_block: Option<String>,
    pub answer_text: String,
    pub moves: MoveSequence,
    pub format_ok_answer: bool,
    pub format_ok_reasoning: bool,
}

/// Splits a completion into reasoning and answer and checks both formats.
///
/// A reasoning block is well formed when the text holds exactly one `<think>`
/// and one `</think>`, in that order, with only whitespace before the opening
/// tag. Anything else leaves `think_block` empty and the whole text is treated
/// as the answer. The answer format holds when the answer is one or more
/// direction tokens separated by nothing but whitespace.
pub fn extract_format(completion: &str) -> ParsedCompletion {
    let think = well_formed_think(completion);
    let (think_block, answer_text) = match think {
        Some((inner, answer)) => (Some(inner.to_string()), answer.to_string()),
        None => (None, completion.to_string()),
    };
    let (moves, _) = count_turns(&answer_text);
    let residue = MOVE_TOKEN.replace_all(&answer_text, "");
    let format_ok_answer = !moves.is_empty() && residue.trim().is_empty();

    ParsedCompletion {
        raw_text: completion.to_string(),
        format_ok_reasoning: think_block.is_some(),
        think_block,
        answer_text,
        moves: MoveSequence::new(moves),
        format_ok_answer,
    }
}

fn well_formed_think(text: &str) -> Option<(&str, &str)> {
    if text.matches(THINK_OPEN).count() != 1 || text.matches(THINK_CLOSE).count() != 1 {
        return None;
    }
    let open = text.find(THINK_OPEN)?;
    let close = text.find(THINK_CLOSE)?;
    if close < open || !text[..open].trim().is_empty() {
        return None;
    }
    let inner = &text[open + THINK_OPEN.len()..close];
    let answer = &text[close + THINK_CLOSE.len()..];
    Some((inner, answer))
}

/// Length proxy: each whitespace-delimited word counts as the number of
/// pieces it splits into, where every `<|…|>` token is its own piece and
/// the text runs between tokens are one piece each.
pub fn token_length(text: &str) -> usize {
    text.split_whitespace().map(word_pieces).sum()
}

fn word_pieces(word: &str) -> usize {
    let mut pieces = 0;
    let mut last = 0;
    for m in ANY_SPECIAL_TOKEN.find_iter(word) {
        if m.start() > last {
            pieces += 1;
        }
        pieces += 1;
        last = m.end();
    }
    if last < word.len() {
        pieces += 1;
    }
    pieces
}
