//! The miniXCOM rules: board, movement, line-of-sight, shooting and turn order.

mod los;
pub mod map;
mod state;

use std::fmt;
use std::str::FromStr;

pub use los::line_of_sight;
pub use map::{default_map, parse_map, Coord, GridMap, MapError, DEFAULT_MAP};
pub use state::{
    apply_action, legal_actions, outcome, reachable_cells, Action, GameError, GameState,
    Outcome, Rules, Unit, UnitId,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Human,
    Alien,
}

impl Side {
    pub const ALL: [Side; 2] = [Side::Human, Side::Alien];

    pub fn other(self) -> Side {
        match self {
            Side::Human => Side::Alien,
            Side::Alien => Side::Human,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Side::Human => "human",
            Side::Alien => "alien",
        }
    }

    /// Board glyph for units of this side.
    pub fn glyph(self) -> char {
        match self {
            Side::Human => 'H',
            Side::Alien => 'A',
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(Side::Human),
            "alien" => Ok(Side::Alien),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}
