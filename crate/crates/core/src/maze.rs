//! Rectangular mazes: representation, generation to an exact (steps, turns)
//! difficulty, the BFS shortest-path oracle, and text renderings.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use thiserror::Error;

use crate::rng;
use crate::sampler::DifficultySpec;
use crate::trace::{Move, MoveSequence};

pub const WALL_N: u8 = 1;
pub const WALL_E: u8 = 2;
pub const WALL_S: u8 = 4;
pub const WALL_W: u8 = 8;
pub const ALL_WALLS: u8 = WALL_N | WALL_E | WALL_S | WALL_W;

/// Per-cell feature count in [`Maze::encode_features`].
pub const FEATURES_PER_CELL: usize = 6;

pub const DEFAULT_WIDTH: usize = 5;
pub const DEFAULT_HEIGHT: usize = 5;

fn wall_bit(m: Move) -> u8 {
    match m {
        Move::Up => WALL_N,
        Move::Right => WALL_E,
        Move::Down => WALL_S,
        Move::Left => WALL_W,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MazeError {
    #[error("grid dimensions must be at least 1x1 (got {width}x{height})")]
    EmptyGrid { width: usize, height: usize },
    #[error("expected {expected} wall cells, got {actual}")]
    WallCount { expected: usize, actual: usize },
    #[error("cell {0} has wall bits outside the low nibble")]
    BadWallBits(Cell),
    #[error("boundary wall missing at {0}")]
    OpenBoundary(Cell),
    #[error("walls disagree between {0} and its neighbour to the {1}")]
    InconsistentWalls(Cell, Move),
    #[error("{0} lies outside the grid")]
    OutOfBounds(Cell),
    #[error("start and target coincide at {0}")]
    StartIsTarget(Cell),
    #[error("target is unreachable from start")]
    Unreachable,
    #[error("difficulty {spec} is infeasible on a {width}x{height} grid")]
    Infeasible {
        spec: DifficultySpec,
        width: usize,
        height: usize,
    },
    #[error("ascii line {line}: {message}")]
    Ascii { line: usize, message: String },
    #[error("move {index} ({mv}) crosses a wall or leaves the grid")]
    BlockedMove { index: usize, mv: Move },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// A validated maze. Construction through [`Maze::new`] (or the parsers)
/// guarantees closed outer walls, consistent shared walls, distinct in-bounds
/// endpoints and a start→target path.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Maze {
    width: usize,
    height: usize,
    walls: Vec<u8>,
    start: Cell,
    target: Cell,
}

impl Maze {
    pub fn new(
        width: usize,
        height: usize,
        walls: Vec<u8>,
        start: Cell,
        target: Cell,
    ) -> Result<Self, MazeError> {
        if width == 0 || height == 0 {
            return Err(MazeError::EmptyGrid { width, height });
        }
        if walls.len() != width * height {
            return Err(MazeError::WallCount {
                expected: width * height,
                actual: walls.len(),
            });
        }
        let maze = Maze {
            width,
            height,
            walls,
            start,
            target,
        };
        maze.check_structure()?;
        if maze.bfs_distances()[maze.index(target)].is_none() {
            return Err(MazeError::Unreachable);
        }
        Ok(maze)
    }

    fn check_structure(&self) -> Result<(), MazeError> {
        for cell in self.cells() {
            let bits = self.walls[self.index(cell)];
            if bits & !ALL_WALLS != 0 {
                return Err(MazeError::BadWallBits(cell));
            }
            for m in Move::ALL {
                match self.neighbour(cell, m) {
                    None if bits & wall_bit(m) == 0 => return Err(MazeError::OpenBoundary(cell)),
                    None => {}
                    Some(next) => {
                        let back = self.walls[self.index(next)] & wall_bit(m.opposite()) != 0;
                        if (bits & wall_bit(m) != 0) != back {
                            return Err(MazeError::InconsistentWalls(cell, m));
                        }
                    }
                }
            }
        }
        for endpoint in [self.start, self.target] {
            if !self.contains(endpoint) {
                return Err(MazeError::OutOfBounds(endpoint));
            }
        }
        if self.start == self.target {
            return Err(MazeError::StartIsTarget(self.start));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn target(&self) -> Cell {
        self.target
    }

    pub fn walls(&self) -> &[u8] {
        &self.walls
    }

    pub fn cell_walls(&self, cell: Cell) -> u8 {
        self.walls[self.index(cell)]
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    fn index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.width, index % self.width)
    }

    fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.width * self.height).map(|i| self.cell_at(i))
    }

    /// Grid neighbour in direction `m`, ignoring walls.
    pub fn neighbour(&self, cell: Cell, m: Move) -> Option<Cell> {
        let (dr, dc) = m.delta();
        let row = cell.row.checked_add_signed(dr)?;
        let col = cell.col.checked_add_signed(dc)?;
        let next = Cell::new(row, col);
        self.contains(next).then_some(next)
    }

    pub fn is_open(&self, cell: Cell, m: Move) -> bool {
        self.walls[self.index(cell)] & wall_bit(m) == 0
    }

    /// Neighbour reachable through an open wall.
    pub fn step(&self, cell: Cell, m: Move) -> Option<Cell> {
        if self.is_open(cell, m) {
            self.neighbour(cell, m)
        } else {
            None
        }
    }

    /// Executes `moves` from the start cell and returns the final cell.
    pub fn walk(&self, moves: &[Move]) -> Result<Cell, MazeError> {
        moves
            .iter()
            .enumerate()
            .try_fold(self.start, |cell, (index, &mv)| {
                self.step(cell, mv)
                    .ok_or(MazeError::BlockedMove { index, mv })
            })
    }

    fn set_open(&mut self, cell: Cell, m: Move, open: bool) {
        let next = self.neighbour(cell, m).expect("interior wall");
        let (a, b) = (self.index(cell), self.index(next));
        if open {
            self.walls[a] &= !wall_bit(m);
            self.walls[b] &= !wall_bit(m.opposite());
        } else {
            self.walls[a] |= wall_bit(m);
            self.walls[b] |= wall_bit(m.opposite());
        }
    }

    fn bfs_distances(&self) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.width * self.height];
        let mut queue = VecDeque::from([self.start]);
        dist[self.index(self.start)] = Some(0);
        while let Some(cell) = queue.pop_front() {
            let d = dist[self.index(cell)].unwrap();
            for m in Move::ALL {
                if let Some(next) = self.step(cell, m) {
                    let slot = &mut dist[self.index(next)];
                    if slot.is_none() {
                        *slot = Some(d + 1);
                        queue.push_back(next);
                    }
                }
            }
        }
        dist
    }

    /// Shortest start→target path. BFS expands neighbours in the order
    /// up, down, left, right and keeps the first parent found, which fixes the
    /// answer when several shortest paths exist.
    pub fn solve(&self) -> Result<MoveSequence, MazeError> {
        let mut parent: Vec<Option<(Cell, Move)>> = vec![None; self.width * self.height];
        let mut seen = vec![false; self.width * self.height];
        let mut queue = VecDeque::from([self.start]);
        seen[self.index(self.start)] = true;
        while let Some(cell) = queue.pop_front() {
            if cell == self.target {
                break;
            }
            for m in Move::ALL {
                if let Some(next) = self.step(cell, m) {
                    let i = self.index(next);
                    if !seen[i] {
                        seen[i] = true;
                        parent[i] = Some((cell, m));
                        queue.push_back(next);
                    }
                }
            }
        }
        if !seen[self.index(self.target)] {
            return Err(MazeError::Unreachable);
        }
        let mut moves = Vec::new();
        let mut cell = self.target;
        while let Some((prev, m)) = parent[self.index(cell)] {
            moves.push(m);
            cell = prev;
        }
        moves.reverse();
        Ok(MoveSequence::new(moves))
    }

    /// Number of distinct shortest start→target paths, by BFS layer counting.
    pub fn count_shortest_paths(&self) -> Result<u64, MazeError> {
        let dist = self.bfs_distances();
        let target_dist = dist[self.index(self.target)].ok_or(MazeError::Unreachable)?;
        let mut order: Vec<usize> = (0..dist.len()).filter(|&i| dist[i].is_some()).collect();
        order.sort_by_key(|&i| dist[i]);
        let mut ways = vec![0u64; dist.len()];
        ways[self.index(self.start)] = 1;
        for i in order {
            let d = dist[i].unwrap();
            if d >= target_dist {
                continue;
            }
            let cell = self.cell_at(i);
            for m in Move::ALL {
                if let Some(next) = self.step(cell, m) {
                    let j = self.index(next);
                    if dist[j] == Some(d + 1) {
                        ways[j] = ways[j].saturating_add(ways[i]);
                    }
                }
            }
        }
        Ok(ways[self.index(self.target)])
    }

    /// `(2h+1) x (2w+1)` character grid with `#` walls, `O` start and `T` target.
    /// Every line ends with `\n`.
    pub fn render_ascii(&self) -> String {
        let rows = 2 * self.height + 1;
        let cols = 2 * self.width + 1;
        let mut grid = vec![vec!['#'; cols]; rows];
        for cell in self.cells() {
            let (r, c) = (2 * cell.row + 1, 2 * cell.col + 1);
            grid[r][c] = if cell == self.start {
                'O'
            } else if cell == self.target {
                'T'
            } else {
                ' '
            };
            if self.is_open(cell, Move::Right) {
                grid[r][c + 1] = ' ';
            }
            if self.is_open(cell, Move::Down) {
                grid[r + 1][c] = ' ';
            }
        }
        let mut out = String::with_capacity(rows * (cols + 1));
        for line in grid {
            out.extend(line);
            out.push('\n');
        }
        out
    }

    /// Inverse of [`Maze::render_ascii`].
    pub fn parse_ascii(text: &str) -> Result<Maze, MazeError> {
        let lines: Vec<Vec<char>> = text.lines().map(|l| l.chars().collect()).collect();
        let err = |line: usize, message: &str| MazeError::Ascii {
            line,
            message: message.into(),
        };
        if lines.len() < 3 || lines.len().is_multiple_of(2) {
            return Err(err(
                lines.len(),
                "expected an odd number of lines, at least 3",
            ));
        }
        let cols = lines[0].len();
        if cols < 3 || cols.is_multiple_of(2) {
            return Err(err(1, "expected an odd line width, at least 3"));
        }
        let (height, width) = ((lines.len() - 1) / 2, (cols - 1) / 2);
        let mut walls = vec![0u8; width * height];
        let (mut start, mut target) = (None, None);
        for (r, line) in lines.iter().enumerate() {
            if line.len() != cols {
                return Err(err(r + 1, "ragged line width"));
            }
            for (c, &ch) in line.iter().enumerate() {
                let valid = match (r % 2, c % 2) {
                    (1, 1) => matches!(ch, ' ' | 'O' | 'T'),
                    (0, 0) => ch == '#',
                    _ => matches!(ch, ' ' | '#'),
                };
                if !valid {
                    return Err(err(
                        r + 1,
                        &format!("unexpected {ch:?} at column {}", c + 1),
                    ));
                }
            }
        }
        for row in 0..height {
            for col in 0..width {
                let (r, c) = (2 * row + 1, 2 * col + 1);
                let cell = Cell::new(row, col);
                let mut bits = 0;
                if lines[r - 1][c] == '#' {
                    bits |= WALL_N;
                }
                if lines[r][c + 1] == '#' {
                    bits |= WALL_E;
                }
                if lines[r + 1][c] == '#' {
                    bits |= WALL_S;
                }
                if lines[r][c - 1] == '#' {
                    bits |= WALL_W;
                }
                walls[row * width + col] = bits;
                let slot = match lines[r][c] {
                    'O' => &mut start,
                    'T' => &mut target,
                    _ => continue,
                };
                if slot.replace(cell).is_some() {
                    return Err(err(r + 1, "duplicate start or target marker"));
                }
            }
        }
        let start = start.ok_or_else(|| err(lines.len(), "missing start marker 'O'"))?;
        let target = target.ok_or_else(|| err(lines.len(), "missing target marker 'T'"))?;
        Maze::new(width, height, walls, start, target)
    }

    /// Row-major per-cell features: N, E, S, W wall bits, is-start, is-target.
    pub fn encode_features(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width * self.height * FEATURES_PER_CELL);
        for cell in self.cells() {
            let bits = self.cell_walls(cell);
            for bit in [WALL_N, WALL_E, WALL_S, WALL_W] {
                out.push(if bits & bit != 0 { 1.0 } else { 0.0 });
            }
            out.push(if cell == self.start { 1.0 } else { 0.0 });
            out.push(if cell == self.target { 1.0 } else { 0.0 });
        }
        out
    }

    /// One lowercase hex digit per cell, row-major.
    pub fn walls_hex(&self) -> String {
        self.walls
            .iter()
            .map(|&b| char::from_digit(b as u32, 16).unwrap())
            .collect()
    }
}

impl fmt::Display for Maze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_ascii())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    /// Random shape draws before giving up, used when the shape space is too
    /// large to enumerate.
    pub max_attempts: usize,
    /// Probability that an interior wall off the solution path is considered
    /// for removal.
    pub distractor_density: f64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            max_attempts: 10_000,
            distractor_density: 0.5,
        }
    }
}

// Upper bound on C(steps-1, turns) * 4 * 2^turns for exhaustive shape listing.
const ENUMERATION_LIMIT: u128 = 1 << 16;

/// Builds a maze whose unique shortest path has exactly `spec.steps` moves and
/// `spec.turns` turns, using [`GenerateOptions::default`].
pub fn generate(
    spec: DifficultySpec,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Maze, MazeError> {
    generate_with(spec, width, height, seed, &GenerateOptions::default())
}

pub fn generate_with(
    spec: DifficultySpec,
    width: usize,
    height: usize,
    seed: u64,
    options: &GenerateOptions,
) -> Result<Maze, MazeError> {
    let infeasible = MazeError::Infeasible {
        spec,
        width,
        height,
    };
    if width == 0 || height == 0 {
        return Err(MazeError::EmptyGrid { width, height });
    }
    if !spec.is_valid() || spec.steps >= width * height {
        return Err(infeasible);
    }
    let mut rng = rng::from_seed(seed);

    let shape = if shape_space_size(spec) <= ENUMERATION_LIMIT {
        let mut shapes = Vec::new();
        enumerate_shapes(spec, width, height, &mut |s| {
            shapes.push(s.to_vec());
            true
        });
        shapes
            .get(rng.random_range(0..shapes.len().max(1)))
            .cloned()
    } else {
        (0..options.max_attempts).find_map(|_| random_shape(spec, width, height, &mut rng))
    };
    let shape = shape.ok_or(infeasible)?;

    let (rows, cols) = shape_extent(&shape);
    let origin = Cell::new(
        rng.random_range(rows.0 as i64..=(height as isize - 1 - rows.1) as i64) as usize,
        rng.random_range(cols.0 as i64..=(width as isize - 1 - cols.1) as i64) as usize,
    );

    let mut maze = Maze {
        width,
        height,
        walls: vec![ALL_WALLS; width * height],
        start: origin,
        target: origin,
    };
    let mut on_path = vec![false; width * height];
    on_path[maze.index(origin)] = true;
    let mut cell = origin;
    for &m in &shape {
        maze.set_open(cell, m, true);
        cell = maze.neighbour(cell, m).expect("shape fits the grid");
        on_path[maze.index(cell)] = true;
    }
    maze.target = cell;

    // Distractor corridors: open random interior walls as long as the carved
    // path stays the one and only shortest route.
    let mut candidates: Vec<(Cell, Move)> = maze
        .cells()
        .flat_map(|c| [(c, Move::Right), (c, Move::Down)])
        .filter(|&(c, m)| maze.neighbour(c, m).is_some() && !maze.is_open(c, m))
        .collect();
    candidates.shuffle(&mut rng);
    for (c, m) in candidates {
        if rng.random::<f64>() >= options.distractor_density {
            continue;
        }
        maze.set_open(c, m, true);
        let keeps_path = maze.bfs_distances()[maze.index(maze.target)] == Some(spec.steps)
            && maze.count_shortest_paths() == Ok(1);
        if !keeps_path {
            maze.set_open(c, m, false);
        }
    }

    debug_assert_eq!(maze.solve().map(|s| s.moves().to_vec()), Ok(shape));
    Ok(maze)
}

/// True when some self-avoiding walk with exactly `spec.steps` moves and
/// `spec.turns` turns fits on a `width x height` grid.
pub fn is_feasible(spec: DifficultySpec, width: usize, height: usize) -> bool {
    if width == 0 || height == 0 || !spec.is_valid() || spec.steps >= width * height {
        return false;
    }
    let mut found = false;
    enumerate_shapes(spec, width, height, &mut |_| {
        found = true;
        false
    });
    found
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn shape_space_size(spec: DifficultySpec) -> u128 {
    let turns = spec.turns as u128;
    binomial(spec.steps as u128 - 1, turns)
        .saturating_mul(4)
        .saturating_mul(1u128.checked_shl(turns as u32).unwrap_or(u128::MAX))
}

/// (min, max) row and column offsets visited by `shape` starting from (0, 0),
/// returned negated-min first so the valid origin range is `min..=dim-1-max`.
fn shape_extent(shape: &[Move]) -> ((isize, isize), (isize, isize)) {
    let (mut r, mut c) = (0isize, 0isize);
    let (mut r_lo, mut r_hi, mut c_lo, mut c_hi) = (0, 0, 0, 0);
    for m in shape {
        let (dr, dc) = m.delta();
        r += dr;
        c += dc;
        r_lo = r_lo.min(r);
        r_hi = r_hi.max(r);
        c_lo = c_lo.min(c);
        c_hi = c_hi.max(c);
    }
    ((-r_lo, r_hi), (-c_lo, c_hi))
}

fn perpendicular(m: Move) -> [Move; 2] {
    if m.is_vertical() {
        [Move::Left, Move::Right]
    } else {
        [Move::Up, Move::Down]
    }
}

struct ShapeSearch<'a> {
    spec: DifficultySpec,
    width: isize,
    height: isize,
    moves: Vec<Move>,
    visited: Vec<(isize, isize)>,
    visit: &'a mut dyn FnMut(&[Move]) -> bool,
}

impl ShapeSearch<'_> {
    fn fits(&self) -> bool {
        let rows = self.visited.iter().map(|p| p.0);
        let cols = self.visited.iter().map(|p| p.1);
        let row_span = rows.clone().max().unwrap() - rows.min().unwrap();
        let col_span = cols.clone().max().unwrap() - cols.min().unwrap();
        row_span < self.height && col_span < self.width
    }

    /// Extends the walk by one whole segment in direction `m`. Returns false
    /// once the visitor asks to stop.
    fn segment(&mut self, m: Move, turns_left: usize) -> bool {
        let remaining = self.spec.steps - self.moves.len();
        let max_len = remaining - turns_left;
        let (dr, dc) = m.delta();
        let mut keep_going = true;
        let mut pushed = 0;
        for len in 1..=max_len {
            let &(r, c) = self.visited.last().unwrap();
            let next = (r + dr, c + dc);
            if self.visited.contains(&next) {
                break;
            }
            self.visited.push(next);
            self.moves.push(m);
            pushed += 1;
            if !self.fits() {
                break;
            }
            if turns_left == 0 {
                if len == max_len {
                    keep_going = (self.visit)(&self.moves);
                }
            } else {
                for next_dir in perpendicular(m) {
                    if !self.segment(next_dir, turns_left - 1) {
                        keep_going = false;
                        break;
                    }
                }
            }
            if !keep_going {
                break;
            }
        }
        for _ in 0..pushed {
            self.visited.pop();
            self.moves.pop();
        }
        keep_going
    }
}

fn enumerate_shapes(
    spec: DifficultySpec,
    width: usize,
    height: usize,
    visit: &mut dyn FnMut(&[Move]) -> bool,
) {
    let mut search = ShapeSearch {
        spec,
        width: width as isize,
        height: height as isize,
        moves: Vec::with_capacity(spec.steps),
        visited: vec![(0, 0)],
        visit,
    };
    for m in Move::ALL {
        if !search.segment(m, spec.turns) {
            return;
        }
    }
}

fn random_shape(
    spec: DifficultySpec,
    width: usize,
    height: usize,
    rng: &mut rng::Rng,
) -> Option<Vec<Move>> {
    // Random composition of `steps` into `turns + 1` positive segment lengths.
    let mut cuts: Vec<usize> = (1..spec.steps).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(spec.turns).collect();
    cuts.sort_unstable();
    cuts.push(spec.steps);

    let mut dir = Move::ALL[rng.random_range(0..4)];
    let mut moves = Vec::with_capacity(spec.steps);
    let mut visited = vec![(0isize, 0isize)];
    let mut last = 0;
    for (i, &cut) in cuts.iter().enumerate() {
        if i > 0 {
            dir = perpendicular(dir)[rng.random_range(0..2)];
        }
        for _ in last..cut {
            let &(r, c) = visited.last().unwrap();
            let (dr, dc) = dir.delta();
            let next = (r + dr, c + dc);
            if visited.contains(&next) {
                return None;
            }
            visited.push(next);
            moves.push(dir);
        }
        last = cut;
    }
    let (rows, cols) = shape_extent(&moves);
    let fits = (rows.0 + rows.1) < height as isize && (cols.0 + cols.1) < width as isize;
    fits.then_some(moves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::turns_of;
    use Move::*;

    fn open_grid(width: usize, height: usize, start: Cell, target: Cell) -> Maze {
        let mut maze = Maze {
            width,
            height,
            walls: vec![ALL_WALLS; width * height],
            start,
            target,
        };
        for r in 0..height {
            for c in 0..width {
                if c + 1 < width {
                    maze.set_open(Cell::new(r, c), Right, true);
                }
                if r + 1 < height {
                    maze.set_open(Cell::new(r, c), Down, true);
                }
            }
        }
        maze
    }

    #[test]
    fn corridor_solves_right_right() {
        let maze = open_grid(3, 1, Cell::new(0, 0), Cell::new(0, 2));
        assert_eq!(maze.solve().unwrap().moves(), &[Right, Right]);
        assert_eq!(maze.count_shortest_paths().unwrap(), 1);
    }

    #[test]
    fn adjacent_cells_solve_down() {
        let maze = open_grid(1, 2, Cell::new(0, 0), Cell::new(1, 0));
        assert_eq!(maze.solve().unwrap().moves(), &[Down]);
    }

    #[test]
    fn open_square_has_two_shortest_paths_and_prefers_down_first() {
        let maze = open_grid(2, 2, Cell::new(0, 0), Cell::new(1, 1));
        assert_eq!(maze.count_shortest_paths().unwrap(), 2);
        assert_eq!(maze.solve().unwrap().moves(), &[Down, Right]);
    }

    #[test]
    fn l_shaped_corridor() {
        // Only corridor: (0,0) right to (0,4), then down to (4,4).
        let mut maze = Maze {
            width: 5,
            height: 5,
            walls: vec![ALL_WALLS; 25],
            start: Cell::new(0, 0),
            target: Cell::new(4, 4),
        };
        for c in 0..4 {
            maze.set_open(Cell::new(0, c), Right, true);
        }
        for r in 0..4 {
            maze.set_open(Cell::new(r, 4), Down, true);
        }
        let path = maze.solve().unwrap();
        assert_eq!(path.len(), 8);
        assert_eq!(path.turns(), 1);
        assert_eq!(maze.walk(path.moves()).unwrap(), maze.target());
    }

    #[test]
    fn validation_rejects_broken_mazes() {
        let good = open_grid(2, 1, Cell::new(0, 0), Cell::new(0, 1));
        let mut walls = good.walls.clone();
        walls[0] &= !WALL_N;
        assert_eq!(
            Maze::new(2, 1, walls, good.start, good.target),
            Err(MazeError::OpenBoundary(Cell::new(0, 0)))
        );
        let mut walls = good.walls.clone();
        walls[0] |= WALL_E;
        assert!(matches!(
            Maze::new(2, 1, walls, good.start, good.target),
            Err(MazeError::InconsistentWalls(..))
        ));
        assert_eq!(
            Maze::new(2, 1, vec![ALL_WALLS; 2], good.start, good.target),
            Err(MazeError::Unreachable)
        );
        assert_eq!(
            Maze::new(2, 1, good.walls.clone(), good.start, good.start),
            Err(MazeError::StartIsTarget(good.start))
        );
        assert!(matches!(
            Maze::new(2, 1, good.walls.clone(), good.start, Cell::new(3, 0)),
            Err(MazeError::OutOfBounds(_))
        ));
        assert!(Maze::new(2, 1, good.walls.clone(), good.start, good.target).is_ok());
    }

    #[test]
    fn smallest_render_is_three_by_five() {
        let maze = open_grid(2, 1, Cell::new(0, 0), Cell::new(0, 1));
        assert_eq!(maze.render_ascii(), "#####\n#O T#\n#####\n");
        assert_eq!(Maze::parse_ascii(&maze.render_ascii()).unwrap(), maze);
    }

    #[test]
    fn parse_rejects_bad_ascii() {
        assert!(matches!(
            Maze::parse_ascii("###\n#O#\n###\n"),
            Err(MazeError::Ascii { .. })
        ));
        assert!(matches!(
            Maze::parse_ascii("#####\n#OxT#\n#####\n"),
            Err(MazeError::Ascii { line: 2, .. })
        ));
        assert_eq!(
            Maze::parse_ascii("#####\n#O T \n#####\n"),
            Err(MazeError::OpenBoundary(Cell::new(0, 1)))
        );
    }

    #[test]
    fn features_of_open_pair() {
        let maze = open_grid(2, 1, Cell::new(0, 0), Cell::new(0, 1));
        let f = maze.encode_features();
        assert_eq!(f.len(), 12);
        assert_eq!(f, vec![1., 0., 1., 1., 1., 0., 1., 1., 1., 0., 0., 1.]);
        assert_eq!(f, maze.encode_features());
    }

    #[test]
    fn closed_cell_features_are_all_walls() {
        let mut maze = open_grid(3, 1, Cell::new(0, 0), Cell::new(0, 1));
        maze.set_open(Cell::new(0, 1), Right, false);
        let f = maze.encode_features();
        assert_eq!(&f[12..16], &[1., 1., 1., 1.]);
    }

    #[test]
    fn generate_minimal_and_turning_specs() {
        let maze = generate(DifficultySpec::new(1, 0), 5, 5, 3).unwrap();
        assert_eq!(maze.solve().unwrap().len(), 1);

        let maze = generate(DifficultySpec::new(3, 1), 5, 5, 9).unwrap();
        let path = maze.solve().unwrap();
        assert_eq!((path.len(), turns_of(path.moves())), (3, 1));
        assert_eq!(maze.count_shortest_paths().unwrap(), 1);
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = DifficultySpec::new(5, 2);
        assert_eq!(
            generate(spec, 5, 5, 42).unwrap(),
            generate(spec, 5, 5, 42).unwrap()
        );
    }

    #[test]
    fn infeasible_specs_are_reported() {
        assert!(!is_feasible(DifficultySpec::new(6, 0), 5, 5));
        assert!(matches!(
            generate(DifficultySpec::new(6, 0), 5, 5, 1),
            Err(MazeError::Infeasible { .. })
        ));
        assert!(matches!(
            generate(DifficultySpec::new(2, 2), 5, 5, 1),
            Err(MazeError::Infeasible { .. })
        ));
        assert!(is_feasible(DifficultySpec::new(10, 2), 5, 5));
        assert!(!is_feasible(DifficultySpec::new(10, 1), 5, 5));
    }

    #[test]
    fn random_shape_fallback_is_used_for_large_specs() {
        let spec = DifficultySpec::new(30, 12);
        assert!(shape_space_size(spec) > ENUMERATION_LIMIT);
        let maze = generate(spec, 12, 12, 5).unwrap();
        let path = maze.solve().unwrap();
        assert_eq!((path.len(), path.turns()), (30, 12));
        assert_eq!(maze.count_shortest_paths().unwrap(), 1);
    }
}
