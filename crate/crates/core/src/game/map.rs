//! Grid maps and the plain-text map format.
//!
//! ```text
//! size 6 6
//! ......
//! .##.#.
//! ......
//! human 1,5
//! alien 1,0
//! corridor 0,5
//! ```
//!
//! Coordinates are zero-based, `x` is the column and `y` the row with row 0
//! at the top. `human`/`alien` lines are repeatable start positions and
//! `corridor` lines form the ordered corridor route.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::los;
use super::Side;

/// A cell coordinate on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub x: u8,
    pub y: u8,
}

impl Coord {
    pub const fn new(x: u8, y: u8) -> Self {
        Coord { x, y }
    }

    /// Row-major ordering key.
    pub fn row_major(self) -> (u8, u8) {
        (self.y, self.x)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

impl FromStr for Coord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
        let x = x.trim().parse::<u8>().map_err(|e| format!("bad x `{x}`: {e}"))?;
        let y = y.trim().parse::<u8>().map_err(|e| format!("bad y `{y}`: {e}"))?;
        Ok(Coord { x, y })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: dimension mismatch: {msg}")]
    Dimension { line: usize, msg: String },
    #[error("line {line}: start on wall at {at}")]
    StartOnWall { line: usize, at: Coord },
    #[error("line {line}: corridor waypoint on wall at {at}")]
    CorridorOnWall { line: usize, at: Coord },
    #[error("line {line}: coordinate {at} outside the {width}x{height} grid")]
    OutOfBounds {
        line: usize,
        at: Coord,
        width: u8,
        height: u8,
    },
    #[error("line {line}: duplicate start position {at}")]
    DuplicateStart { line: usize, at: Coord },
    #[error("map has no {0} start positions")]
    MissingStarts(Side),
    #[error("grid must be at least 2x2, got {0}x{1}")]
    TooSmall(usize, usize),
    #[error("grid is larger than 255 cells per side")]
    TooLarge,
}

/// Static board: walls, start positions and the corridor route.
///
/// Line-of-sight for every cell pair is computed once at construction
/// since walls never change during a game.
#[derive(Clone, PartialEq, Eq)]
pub struct GridMap {
    width: u8,
    height: u8,
    walls: Vec<bool>,
    corridor: Vec<Coord>,
    starts: [Vec<Coord>; 2],
    sight: Vec<bool>,
    masks: BitMasks,
}

/// Precomputed bitboards for maps of at most 128 cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct BitMasks {
    pub open: u128,
    pub left_col: u128,
    pub right_col: u128,
}

impl fmt::Debug for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridMap")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("walls", &self.walls())
            .field("corridor", &self.corridor)
            .field("starts", &self.starts)
            .finish()
    }
}

impl GridMap {
    /// Builds and validates a map. `walls` is row-major, `width * height` long.
    pub fn new(
        width: usize,
        height: usize,
        walls: Vec<bool>,
        corridor: Vec<Coord>,
        human_starts: Vec<Coord>,
        alien_starts: Vec<Coord>,
    ) -> Result<Self, MapError> {
        if width < 2 || height < 2 {
            return Err(MapError::TooSmall(width, height));
        }
        if width > u8::MAX as usize || height > u8::MAX as usize {
            return Err(MapError::TooLarge);
        }
        assert_eq!(walls.len(), width * height, "wall vector must be row-major W*H");
        let mut map = GridMap {
            width: width as u8,
            height: height as u8,
            walls,
            corridor: Vec::new(),
            starts: [Vec::new(), Vec::new()],
            sight: Vec::new(),
            masks: BitMasks::default(),
        };
        let mut seen = HashSet::new();
        for (side, list) in [(Side::Human, human_starts), (Side::Alien, alien_starts)] {
            if list.is_empty() {
                return Err(MapError::MissingStarts(side));
            }
            for at in list {
                map.check_bounds(0, at)?;
                if map.is_wall(at) {
                    return Err(MapError::StartOnWall { line: 0, at });
                }
                if !seen.insert(at) {
                    return Err(MapError::DuplicateStart { line: 0, at });
                }
                map.starts[side.index()].push(at);
            }
        }
        for at in corridor {
            map.check_bounds(0, at)?;
            if map.is_wall(at) {
                return Err(MapError::CorridorOnWall { line: 0, at });
            }
            map.corridor.push(at);
        }
        map.sight = los::sight_table(&map);
        if map.cell_count() <= 128 {
            let w = map.width();
            for i in 0..map.cell_count() {
                if !map.walls[i] {
                    map.masks.open |= 1 << i;
                }
                if i % w == 0 {
                    map.masks.left_col |= 1 << i;
                }
                if i % w == w - 1 {
                    map.masks.right_col |= 1 << i;
                }
            }
        }
        Ok(map)
    }

    fn check_bounds(&self, line: usize, at: Coord) -> Result<(), MapError> {
        if self.contains(at) {
            Ok(())
        } else {
            Err(MapError::OutOfBounds {
                line,
                at,
                width: self.width,
                height: self.height,
            })
        }
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn height(&self) -> usize {
        self.height as usize
    }

    pub fn cell_count(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, at: Coord) -> bool {
        at.x < self.width && at.y < self.height
    }

    /// Row-major index of a cell.
    #[inline]
    pub fn index(&self, at: Coord) -> usize {
        at.y as usize * self.width() + at.x as usize
    }

    #[inline]
    pub fn coord(&self, index: usize) -> Coord {
        Coord::new((index % self.width()) as u8, (index / self.width()) as u8)
    }

    #[inline]
    pub fn is_wall(&self, at: Coord) -> bool {
        self.walls[self.index(at)]
    }

    #[inline]
    pub(crate) fn is_wall_index(&self, index: usize) -> bool {
        self.walls[index]
    }

    #[inline]
    pub(crate) fn masks(&self) -> &BitMasks {
        &self.masks
    }

    /// Wall cells in row-major order.
    pub fn walls(&self) -> Vec<Coord> {
        (0..self.cell_count())
            .filter(|&i| self.walls[i])
            .map(|i| self.coord(i))
            .collect()
    }

    pub fn corridor(&self) -> &[Coord] {
        &self.corridor
    }

    pub fn start_positions(&self, side: Side) -> &[Coord] {
        &self.starts[side.index()]
    }

    /// Precomputed line-of-sight between two cells.
    #[inline]
    pub fn has_sight(&self, a: Coord, b: Coord) -> bool {
        self.has_sight_index(self.index(a), self.index(b))
    }

    #[inline]
    pub(crate) fn has_sight_index(&self, a: usize, b: usize) -> bool {
        if self.sight.is_empty() {
            los::line_of_sight(self, self.coord(a), self.coord(b))
        } else {
            self.sight[a * self.cell_count() + b]
        }
    }

    /// 4-neighbourhood of a cell that lies inside the grid.
    pub fn neighbors(&self, at: Coord) -> impl Iterator<Item = Coord> + '_ {
        const STEPS: [(i16, i16); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        STEPS.iter().filter_map(move |&(dx, dy)| {
            let x = at.x as i16 + dx;
            let y = at.y as i16 + dy;
            (x >= 0 && y >= 0 && x < self.width as i16 && y < self.height as i16)
                .then(|| Coord::new(x as u8, y as u8))
        })
    }

    /// Serializes back to the map-file format.
    pub fn to_map_text(&self) -> String {
        let mut out = format!("size {} {}\n", self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.is_wall(Coord::new(x, y)) { '#' } else { '.' });
            }
            out.push('\n');
        }
        for side in Side::ALL {
            for at in self.start_positions(side) {
                out.push_str(&format!("{} {}\n", side.keyword(), at));
            }
        }
        for at in &self.corridor {
            out.push_str(&format!("corridor {at}\n"));
        }
        out
    }
}

impl FromStr for GridMap {
    type Err = MapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_map(s)
    }
}

/// Parses a map file, reporting the offending line number on error.
pub fn parse_map(text: &str) -> Result<GridMap, MapError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.trim().is_empty());

    let (size_line, header) = lines.next().ok_or(MapError::Syntax {
        line: 1,
        msg: "empty map file".into(),
    })?;
    let mut words = header.split_whitespace();
    if words.next() != Some("size") {
        return Err(MapError::Syntax {
            line: size_line,
            msg: "expected header `size W H`".into(),
        });
    }
    let mut dim = || -> Result<usize, MapError> {
        words
            .next()
            .and_then(|w| w.parse::<usize>().ok())
            .ok_or(MapError::Syntax {
                line: size_line,
                msg: "expected header `size W H`".into(),
            })
    };
    let (width, height) = (dim()?, dim()?);
    if width < 2 || height < 2 {
        return Err(MapError::TooSmall(width, height));
    }
    if width > u8::MAX as usize || height > u8::MAX as usize {
        return Err(MapError::TooLarge);
    }

    let mut walls = Vec::with_capacity(width * height);
    for row in 0..height {
        let (line, body) = lines.next().ok_or(MapError::Dimension {
            line: size_line,
            msg: format!("expected {height} body rows, found {row}"),
        })?;
        let body = body.trim();
        if body.chars().count() != width {
            return Err(MapError::Dimension {
                line,
                msg: format!("row has {} cells, expected {width}", body.chars().count()),
            });
        }
        for ch in body.chars() {
            match ch {
                '.' => walls.push(false),
                '#' => walls.push(true),
                other => {
                    return Err(MapError::Syntax {
                        line,
                        msg: format!("unexpected cell glyph `{other}`"),
                    })
                }
            }
        }
    }

    let mut human = Vec::new();
    let mut alien = Vec::new();
    let mut corridor = Vec::new();
    let mut taken = HashSet::new();
    for (line, text) in lines {
        let mut words = text.split_whitespace();
        let key = words.next().unwrap_or_default();
        if key.chars().all(|c| c == '.' || c == '#') {
            return Err(MapError::Dimension {
                line,
                msg: "body has more rows than the header declares".into(),
            });
        }
        let value = words.next().ok_or_else(|| MapError::Syntax {
            line,
            msg: format!("`{key}` needs a coordinate"),
        })?;
        if let Some(extra) = words.next() {
            return Err(MapError::Syntax {
                line,
                msg: format!("trailing token `{extra}`"),
            });
        }
        let at: Coord = value.parse().map_err(|msg| MapError::Syntax { line, msg })?;
        if at.x as usize >= width || at.y as usize >= height {
            return Err(MapError::OutOfBounds {
                line,
                at,
                width: width as u8,
                height: height as u8,
            });
        }
        let wall = walls[at.y as usize * width + at.x as usize];
        match key {
            "human" | "alien" => {
                if wall {
                    return Err(MapError::StartOnWall { line, at });
                }
                if !taken.insert(at) {
                    return Err(MapError::DuplicateStart { line, at });
                }
                if key == "human" {
                    human.push(at);
                } else {
                    alien.push(at);
                }
            }
            "corridor" => {
                if wall {
                    return Err(MapError::CorridorOnWall { line, at });
                }
                corridor.push(at);
            }
            other => {
                return Err(MapError::Syntax {
                    line,
                    msg: format!("unknown metadata key `{other}`"),
                })
            }
        }
    }

    GridMap::new(width, height, walls, corridor, human, alien)
}

/// The default experiment map: a 6x6 grid mirrored top-to-bottom with a
/// wall block that splits off a left corridor along column 0.
pub const DEFAULT_MAP: &str = include_str!("../../maps/default.map");

pub fn default_map() -> GridMap {
    parse_map(DEFAULT_MAP).expect("bundled default map is valid")
}
