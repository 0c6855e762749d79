//! Reference implementations written straight from the definitions, sharing
//! no code with the library.

#![allow(dead_code)]

use std::collections::VecDeque;

use ariadne::{Maze, Move};

/// Direction codes: 0 up, 1 down, 2 left, 3 right.
pub const DR: [isize; 4] = [-1, 1, 0, 0];
pub const DC: [isize; 4] = [0, 0, -1, 1];
/// Wall bit that blocks leaving a cell in each direction (N, S, W, E).
pub const BLOCK: [u8; 4] = [1, 4, 8, 2];

pub fn code_of(m: Move) -> u8 {
    match m {
        Move::Up => 0,
        Move::Down => 1,
        Move::Left => 2,
        Move::Right => 3,
    }
}

pub fn move_of(code: u8) -> Move {
    [Move::Up, Move::Down, Move::Left, Move::Right][code as usize]
}

pub fn codes(moves: &[Move]) -> Vec<u8> {
    moves.iter().map(|&m| code_of(m)).collect()
}

/// Number of direction changes between consecutive moves.
pub fn turns(path: &[u8]) -> usize {
    let mut n = 0;
    for i in 1..path.len() {
        if path[i] != path[i - 1] {
            n += 1;
        }
    }
    n
}

/// Correctness reward in tenths, Algorithm 1 by brute force.
pub fn reward_tenths(predicted: &[u8], answer: &[u8]) -> usize {
    if predicted == answer {
        return 2 * answer.len() * turns(answer);
    }
    let mut k = 0;
    for j in 0..=predicted.len().min(answer.len()) {
        if predicted[..j] == answer[..j] {
            k = j;
        }
    }
    k * turns(&answer[..k])
}

/// Every move sequence over 4 directions with length `len`.
pub fn all_sequences(len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..4u8).map(move |d| {
                    let mut t = s.clone();
                    t.push(d);
                    t
                })
            })
            .collect();
    }
    out
}

pub struct BfsResult {
    pub distance: usize,
    pub shortest_paths: u64,
    /// Every shortest path as direction codes.
    pub paths: Vec<Vec<u8>>,
}

/// Plain BFS on raw wall bits, counting and listing all shortest paths.
pub fn bfs(
    width: usize,
    height: usize,
    walls: &[u8],
    start: (usize, usize),
    target: (usize, usize),
) -> Option<BfsResult> {
    let idx = |r: usize, c: usize| r * width + c;
    let mut dist = vec![usize::MAX; width * height];
    let mut count = vec![0u64; width * height];
    let mut queue = VecDeque::new();
    dist[idx(start.0, start.1)] = 0;
    count[idx(start.0, start.1)] = 1;
    queue.push_back(start);
    while let Some((r, c)) = queue.pop_front() {
        for d in 0..4 {
            if walls[idx(r, c)] & BLOCK[d] != 0 {
                continue;
            }
            let (nr, nc) = (r as isize + DR[d], c as isize + DC[d]);
            if nr < 0 || nc < 0 || nr >= height as isize || nc >= width as isize {
                continue;
            }
            let (nr, nc) = (nr as usize, nc as usize);
            let here = dist[idx(r, c)];
            if dist[idx(nr, nc)] == usize::MAX {
                dist[idx(nr, nc)] = here + 1;
                queue.push_back((nr, nc));
            }
            if dist[idx(nr, nc)] == here + 1 {
                count[idx(nr, nc)] += count[idx(r, c)];
            }
        }
    }
    let t = idx(target.0, target.1);
    if dist[t] == usize::MAX {
        return None;
    }
    let mut paths = Vec::new();
    let mut current = Vec::new();
    collect_paths(
        width,
        height,
        walls,
        &dist,
        start,
        target,
        &mut current,
        &mut paths,
    );
    Some(BfsResult {
        distance: dist[t],
        shortest_paths: count[t],
        paths,
    })
}

#[allow(clippy::too_many_arguments)]
fn collect_paths(
    width: usize,
    height: usize,
    walls: &[u8],
    dist: &[usize],
    at: (usize, usize),
    target: (usize, usize),
    current: &mut Vec<u8>,
    out: &mut Vec<Vec<u8>>,
) {
    if at == target {
        out.push(current.clone());
        return;
    }
    if out.len() > 64 {
        return;
    }
    let (r, c) = at;
    for d in 0..4u8 {
        if walls[r * width + c] & BLOCK[d as usize] != 0 {
            continue;
        }
        let (nr, nc) = (r as isize + DR[d as usize], c as isize + DC[d as usize]);
        if nr < 0 || nc < 0 || nr >= height as isize || nc >= width as isize {
            continue;
        }
        let next = (nr as usize, nc as usize);
        if dist[next.0 * width + next.1] == dist[r * width + c] + 1
            && dist[next.0 * width + next.1] <= dist[target.0 * width + target.1]
        {
            current.push(d);
            collect_paths(width, height, walls, dist, next, target, current, out);
            current.pop();
        }
    }
}

pub fn bfs_maze(maze: &Maze) -> Option<BfsResult> {
    bfs(
        maze.width(),
        maze.height(),
        maze.walls(),
        (maze.start().row, maze.start().col),
        (maze.target().row, maze.target().col),
    )
}

/// Wall bits for a grid where `open[(r, c, d)]` removes the wall between a
/// cell and its neighbour in direction `d` (only right and down are used).
pub fn walls_from_openings(width: usize, height: usize, right: &[bool], down: &[bool]) -> Vec<u8> {
    let mut walls = vec![15u8; width * height];
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            if c + 1 < width && right[i] {
                walls[i] &= !2;
                walls[i + 1] &= !8;
            }
            if r + 1 < height && down[i] {
                walls[i] &= !4;
                walls[i + width] &= !1;
            }
        }
    }
    walls
}

/// Probability that a uniform policy over six tokens (four moves, end,
/// filler) with a 16-token cap emits exactly one given move and no other,
/// computed by dynamic programming over (position, moves emitted so far).
pub fn uniform_single_move_success() -> f64 {
    let p = 1.0 / 6.0;
    // state: 0 = no move yet, 1 = exactly the right move, dead paths dropped
    let mut alive = [1.0, 0.0];
    let mut success = 0.0;
    for _ in 0..16 {
        let mut next = [0.0, 0.0];
        // end token
        success += alive[1] * p;
        // filler keeps the state
        next[0] += alive[0] * p;
        next[1] += alive[1] * p;
        // the right move
        next[1] += alive[0] * p;
        alive = next;
    }
    success + alive[1]
}

/// Central differences of `f` at every parameter, compared with `grad`.
/// Returns the largest relative error, with magnitudes below `floor` treated
/// as `floor`.
pub fn max_relative_error(
    theta: &[f64],
    grad: &[f64],
    h: f64,
    floor: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut probe = theta.to_vec();
    for i in 0..theta.len() {
        probe[i] = theta[i] + h;
        let up = f(&probe);
        probe[i] = theta[i] - h;
        let down = f(&probe);
        probe[i] = theta[i];
        let fd = (up - down) / (2.0 * h);
        let scale = fd.abs().max(grad[i].abs()).max(floor);
        worst = worst.max((fd - grad[i]).abs() / scale);
    }
    worst
}

/// Random 0/1 feature vector.
pub fn random_features(len: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    (0..len)
        .map(|_| if rng.random_bool(0.3) { 1.0 } else { 0.0 })
        .collect()
}
