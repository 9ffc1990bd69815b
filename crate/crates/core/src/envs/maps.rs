//! Line-oriented map files. Coordinates are `(row, col)` with origin
//! `(1,1)`; `e` increases the column, `s` increases the row. `%` starts a
//! comment. Walls block movement in both directions.

use std::collections::HashSet;

use super::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    E,
    S,
    W,
    N,
}

impl Dir {
    pub fn parse(s: &str) -> Option<Dir> {
        match s {
            "e" => Some(Dir::E),
            "s" => Some(Dir::S),
            "w" => Some(Dir::W),
            "n" => Some(Dir::N),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dir::E => "e",
            Dir::S => "s",
            Dir::W => "w",
            Dir::N => "n",
        }
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::E => (0, 1),
            Dir::S => (1, 0),
            Dir::W => (0, -1),
            Dir::N => (-1, 0),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::E => Dir::W,
            Dir::S => Dir::N,
            Dir::W => Dir::E,
            Dir::N => Dir::S,
        }
    }
}

pub type Cell = (u8, u8);

#[derive(Debug, Clone, Default, PartialEq)]
struct Walls {
    rows: u8,
    cols: u8,
    blocked: HashSet<(Cell, Dir)>,
}

impl Walls {
    fn add(&mut self, c: Cell, d: Dir) {
        self.blocked.insert((c, d));
        if let Some(o) = self.neighbour(c, d) {
            self.blocked.insert((o, d.opposite()));
        }
    }

    fn neighbour(&self, (r, c): Cell, d: Dir) -> Option<Cell> {
        let (dr, dc) = d.delta();
        let (nr, nc) = (r as i32 + dr, c as i32 + dc);
        if nr < 1 || nc < 1 || nr > self.rows as i32 || nc > self.cols as i32 {
            None
        } else {
            Some((nr as u8, nc as u8))
        }
    }

    /// Destination of a move, or `None` if a wall or the boundary blocks it.
    fn step(&self, c: Cell, d: Dir) -> Option<Cell> {
        if self.blocked.contains(&(c, d)) {
            None
        } else {
            self.neighbour(c, d)
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> EnvError {
    EnvError::Map {
        line,
        msg: msg.into(),
    }
}

/// Yields `(line number, keyword, arguments)` for non-blank lines.
fn records(text: &str) -> impl Iterator<Item = (usize, &str, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('%').next().unwrap_or("");
        let mut words = line.split_whitespace();
        let kw = words.next()?;
        Some((i + 1, kw, words.collect()))
    })
}

fn cell(line: usize, args: &[&str], rows: u8, cols: u8) -> Result<Cell, EnvError> {
    let num = |s: &str| s.parse::<u8>().map_err(|_| err(line, format!("bad number `{}`", s)));
    if args.len() < 2 {
        return Err(err(line, "expected a row and a column"));
    }
    let (r, c) = (num(args[0])?, num(args[1])?);
    if r < 1 || c < 1 || r > rows || c > cols {
        return Err(err(line, format!("cell ({},{}) outside the {}x{} grid", r, c, rows, cols)));
    }
    Ok((r, c))
}

fn dir(line: usize, args: &[&str]) -> Result<Dir, EnvError> {
    args.get(2)
        .and_then(|d| Dir::parse(d))
        .ok_or_else(|| err(line, "expected a direction e|s|w|n"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaxiMap {
    pub rows: u8,
    pub cols: u8,
    /// `(cell, depot name)` in file order.
    pub depots: Vec<(Cell, String)>,
    pub bonus: Option<Cell>,
    walls: Walls,
}

impl TaxiMap {
    pub fn standard() -> TaxiMap {
        parse_taxi_map(include_str!("../../data/taxi.map")).expect("bundled taxi map")
    }

    pub fn step(&self, c: Cell, d: Dir) -> Option<Cell> {
        self.walls.step(c, d)
    }

    pub fn depot_at(&self, c: Cell) -> Option<usize> {
        self.depots.iter().position(|(d, _)| *d == c)
    }
}

pub fn parse_taxi_map(text: &str) -> Result<TaxiMap, EnvError> {
    let (rows, cols) = (5, 5);
    let mut m = TaxiMap {
        rows,
        cols,
        depots: Vec::new(),
        bonus: None,
        walls: Walls {
            rows,
            cols,
            ..Walls::default()
        },
    };
    for (line, kw, args) in records(text) {
        match kw {
            "DEPOT" => {
                let c = cell(line, &args, rows, cols)?;
                let name = args.get(2).ok_or_else(|| err(line, "expected a depot name"))?;
                m.depots.push((c, name.to_string()));
            }
            "WALL" => {
                let c = cell(line, &args, rows, cols)?;
                m.walls.add(c, dir(line, &args)?);
            }
            "BONUS" => m.bonus = Some(cell(line, &args, rows, cols)?),
            other => return Err(err(line, format!("unknown record `{}`", other))),
        }
    }
    if m.depots.len() < 2 {
        return Err(err(0, "need at least two depots"));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub rows: u8,
    pub cols: u8,
    pub starts: Vec<Cell>,
    pub goal: Cell,
    /// Door on side `dir` of `cell`; passable only once open.
    pub door: (Cell, Dir),
    pub red: HashSet<Cell>,
    pub yellow: HashSet<Cell>,
    walls: Walls,
}

impl GridMap {
    pub fn standard() -> GridMap {
        parse_grid_map(include_str!("../../data/gridworld.map")).expect("bundled gridworld map")
    }

    /// Destination of a move ignoring the door.
    pub fn step(&self, c: Cell, d: Dir) -> Option<Cell> {
        self.walls.step(c, d)
    }

    /// Whether moving from `c` towards `d` crosses the door.
    pub fn crosses_door(&self, c: Cell, d: Dir) -> bool {
        let (dc, dd) = self.door;
        (c == dc && d == dd) || (self.walls.neighbour(dc, dd) == Some(c) && d == dd.opposite())
    }

    pub fn penalty(&self, c: Cell) -> f64 {
        if self.red.contains(&c) {
            -30.0
        } else if self.yellow.contains(&c) {
            -15.0
        } else {
            -1.0
        }
    }
}

pub fn parse_grid_map(text: &str) -> Result<GridMap, EnvError> {
    let mut size = None;
    let mut starts = Vec::new();
    let mut goal = None;
    let mut door = None;
    let mut walls = Vec::new();
    let mut red = HashSet::new();
    let mut yellow = HashSet::new();
    for (line, kw, args) in records(text) {
        if kw == "SIZE" {
            let n = |i: usize| {
                args.get(i)
                    .and_then(|s| s.parse::<u8>().ok())
                    .filter(|&v| v > 0)
                    .ok_or_else(|| err(line, "SIZE needs two positive numbers"))
            };
            size = Some((n(0)?, n(1)?));
            continue;
        }
        let (rows, cols) = size.ok_or_else(|| err(line, "SIZE must come first"))?;
        match kw {
            "START" => starts.push(cell(line, &args, rows, cols)?),
            "GOAL" => goal = Some(cell(line, &args, rows, cols)?),
            "DOOR" => door = Some((cell(line, &args, rows, cols)?, dir(line, &args)?)),
            "WALL" => walls.push((cell(line, &args, rows, cols)?, dir(line, &args)?)),
            "RED" => {
                red.insert(cell(line, &args, rows, cols)?);
            }
            "YELLOW" => {
                yellow.insert(cell(line, &args, rows, cols)?);
            }
            other => return Err(err(line, format!("unknown record `{}`", other))),
        }
    }
    let (rows, cols) = size.ok_or_else(|| err(0, "missing SIZE"))?;
    let mut w = Walls {
        rows,
        cols,
        ..Walls::default()
    };
    for (c, d) in walls {
        w.add(c, d);
    }
    if starts.is_empty() {
        return Err(err(0, "missing START"));
    }
    Ok(GridMap {
        rows,
        cols,
        starts,
        goal: goal.ok_or_else(|| err(0, "missing GOAL"))?,
        door: door.ok_or_else(|| err(0, "missing DOOR"))?,
        red,
        yellow,
        walls: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taxi_walls_block_both_ways() {
        let m = TaxiMap::standard();
        assert_eq!(m.step((1, 2), Dir::E), None);
        assert_eq!(m.step((1, 3), Dir::W), None);
        assert_eq!(m.step((1, 3), Dir::E), Some((1, 4)));
        assert_eq!(m.step((1, 1), Dir::N), None);
        assert_eq!(m.depots.len(), 4);
        assert_eq!(m.bonus, Some((5, 5)));
    }

    #[test]
    fn grid_map_records() {
        let m = GridMap::standard();
        assert_eq!((m.rows, m.cols), (20, 20));
        assert!(m.starts.iter().all(|&(_, c)| c == 1));
        assert_eq!(m.goal, (9, 10));
        assert!(m.crosses_door((9, 9), Dir::E));
        assert!(m.crosses_door((9, 10), Dir::W));
        assert_eq!(m.step((9, 10), Dir::N), None);
        assert_eq!(m.step((8, 10), Dir::S), None);
    }

    #[test]
    fn bad_records_report_lines() {
        let e = parse_grid_map("SIZE 3 3\nSTART 4 1\n").unwrap_err();
        assert!(matches!(e, EnvError::Map { line: 2, .. }));
        let e = parse_taxi_map("DEPOT 1 1 r\nFOO\n").unwrap_err();
        assert!(matches!(e, EnvError::Map { line: 2, .. }));
    }
}
