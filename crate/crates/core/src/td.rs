//! Tabular TD(0) over a 3x3 local view of the board.
//!
//! The state key is the window centred on the unit commanded by the most
//! recent action (either side), coded relative to the learning side. Each
//! observed transition updates
//!
//! ```text
//! U(s_t) <- U(s_t) + alpha * (r + gamma * U(s_next) - U(s_t))
//! ```
//!
//! with `r = +10` when the action killed an enemy of the learner and `-10`
//! when it killed one of the learner's units.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::game::{Action, Coord, GameState, Side};
use crate::search::ValueGuide;

pub const KILL_REWARD: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum TdError {
    #[error("no unit has acted yet")]
    NoLastActed,
    #[error("learning rate must be in (0, 1], got {0}")]
    BadAlpha(f64),
    #[error("discount must be in [0, 1], got {0}")]
    BadGamma(f64),
    #[error("bad abstract-state key `{0}`")]
    BadKey(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellCode {
    Wall,
    Empty,
    Friend,
    Enemy,
    OutOfBounds,
    SelfCenter,
}

impl CellCode {
    pub fn letter(self) -> char {
        match self {
            CellCode::Wall => '#',
            CellCode::Empty => '.',
            CellCode::Friend => 'F',
            CellCode::Enemy => 'E',
            CellCode::OutOfBounds => 'X',
            CellCode::SelfCenter => 'S',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        Some(match c {
            '#' => CellCode::Wall,
            '.' => CellCode::Empty,
            'F' => CellCode::Friend,
            'E' => CellCode::Enemy,
            'X' => CellCode::OutOfBounds,
            'S' => CellCode::SelfCenter,
            _ => return None,
        })
    }
}

/// Row-major 3x3 window; index 4 is the centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractState {
    cells: [CellCode; 9],
}

impl AbstractState {
    pub fn from_cells(cells: [CellCode; 9]) -> Self {
        AbstractState { cells }
    }

    pub fn cells(&self) -> &[CellCode; 9] {
        &self.cells
    }

    /// Nine-letter row-major code string.
    pub fn key(&self) -> String {
        self.cells.iter().map(|c| c.letter()).collect()
    }
}

impl fmt::Display for AbstractState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl FromStr for AbstractState {
    type Err = TdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let codes: Vec<CellCode> = s
            .chars()
            .map(CellCode::from_letter)
            .collect::<Option<_>>()
            .ok_or_else(|| TdError::BadKey(s.to_string()))?;
        let cells: [CellCode; 9] = codes.try_into().map_err(|_| TdError::BadKey(s.to_string()))?;
        Ok(AbstractState { cells })
    }
}

/// The 3x3 window around the last-acted unit, coded for `learner`.
pub fn abstract_state(state: &GameState, learner: Side) -> Result<AbstractState, TdError> {
    let id = state.last_acted().ok_or(TdError::NoLastActed)?;
    let centre = state.unit(id).ok_or(TdError::NoLastActed)?.position;
    let map = state.map();
    let mut cells = [CellCode::OutOfBounds; 9];
    for dy in -1i16..=1 {
        for dx in -1i16..=1 {
            let slot = ((dy + 1) * 3 + (dx + 1)) as usize;
            if dx == 0 && dy == 0 {
                cells[slot] = CellCode::SelfCenter;
                continue;
            }
            let x = centre.x as i16 + dx;
            let y = centre.y as i16 + dy;
            if x < 0 || y < 0 || x >= map.width() as i16 || y >= map.height() as i16 {
                continue;
            }
            let at = Coord::new(x as u8, y as u8);
            cells[slot] = if map.is_wall(at) {
                CellCode::Wall
            } else {
                match state.unit_at(at) {
                    Some(u) if u.side == learner => CellCode::Friend,
                    Some(_) => CellCode::Enemy,
                    None => CellCode::Empty,
                }
            };
        }
    }
    Ok(AbstractState { cells })
}

/// +10 if the action killed an enemy of `learner`, -10 if it killed one of
/// the learner's units, 0 otherwise.
pub fn compute_reward(prev: &GameState, _action: &Action, next: &GameState, learner: Side) -> f64 {
    let enemy_losses = prev.alive_count(learner.other()) - next.alive_count(learner.other());
    let own_losses = prev.alive_count(learner) - next.alive_count(learner);
    KILL_REWARD * (enemy_losses as f64 - own_losses as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdTransition {
    pub s_t: AbstractState,
    pub s_next: AbstractState,
    pub reward: f64,
}

/// Learned utilities; unseen states read as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityTable {
    entries: HashMap<AbstractState, f64>,
    alpha: f64,
    gamma: f64,
    literal_update: bool,
}

impl UtilityTable {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self, TdError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(TdError::BadAlpha(alpha));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(TdError::BadGamma(gamma));
        }
        Ok(UtilityTable {
            entries: HashMap::new(),
            alpha,
            gamma,
            literal_update: false,
        })
    }

    /// Skip the TD step the first time a state is seen (only insert it).
    pub fn with_literal_update(mut self, literal: bool) -> Self {
        self.literal_update = literal;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn get(&self, s: &AbstractState) -> f64 {
        self.entries.get(s).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, s: &AbstractState) -> bool {
        self.entries.contains_key(s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Sets a utility directly. Useful for seeding tests and tools.
    pub fn set(&mut self, s: AbstractState, value: f64) {
        self.entries.insert(s, value);
    }

    pub fn update(&mut self, t: &TdTransition) {
        if self.literal_update && !self.entries.contains_key(&t.s_t) {
            self.entries.insert(t.s_t, 0.0);
            return;
        }
        let next = *self.entries.entry(t.s_next).or_insert(0.0);
        let current = self.entries.entry(t.s_t).or_insert(0.0);
        *current += self.alpha * (t.reward + self.gamma * next - *current);
    }

    /// One `<key> <utility>` line per entry, sorted by key.
    pub fn dump(&self) -> String {
        let mut rows: Vec<(String, f64)> = self.entries.iter().map(|(k, v)| (k.key(), *v)).collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        rows.iter().map(|(k, v)| format!("{k} {v:.6}\n")).collect()
    }
}

/// Learned utility of a game position for `learner`; 0 before anyone acted.
pub fn utility(table: &UtilityTable, state: &GameState, learner: Side) -> f64 {
    match abstract_state(state, learner) {
        Ok(s) => table.get(&s),
        Err(_) => 0.0,
    }
}

/// Exposes a utility table to search. The opponent sees negated utilities.
#[derive(Debug, Clone, Copy)]
pub struct TdGuide<'a> {
    pub table: &'a UtilityTable,
    pub learner: Side,
}

impl ValueGuide for TdGuide<'_> {
    fn value(&self, state: &GameState, perspective: Side) -> f64 {
        let u = utility(self.table, state, self.learner);
        if perspective == self.learner {
            u
        } else {
            -u
        }
    }
}

/// Online learner: keeps the last observed abstract state and turns every
/// observed action (own or opponent) into one table update.
#[derive(Debug, Clone)]
pub struct TdLearner {
    table: UtilityTable,
    side: Side,
    previous: Option<AbstractState>,
    updates: u64,
}

impl TdLearner {
    pub fn new(table: UtilityTable, side: Side) -> Self {
        TdLearner {
            table,
            side,
            previous: None,
            updates: 0,
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn table(&self) -> &UtilityTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut UtilityTable {
        &mut self.table
    }

    /// The abstract state captured after the most recent observed action.
    pub fn previous_state(&self) -> Option<&AbstractState> {
        self.previous.as_ref()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn guide(&self) -> TdGuide<'_> {
        TdGuide {
            table: &self.table,
            learner: self.side,
        }
    }

    /// Returns the transition that was applied, if any.
    pub fn observe(&mut self, prev: &GameState, action: &Action, next: &GameState) -> Option<TdTransition> {
        let s_next = abstract_state(next, self.side).ok()?;
        let reward = compute_reward(prev, action, next, self.side);
        let applied = self.previous.map(|s_t| {
            let t = TdTransition { s_t, s_next, reward };
            self.table.update(&t);
            self.updates += 1;
            t
        });
        self.previous = Some(s_next);
        applied
    }

    /// Forget the pending state between rounds; utilities persist.
    pub fn reset_round(&mut self) {
        self.previous = None;
    }

    /// Clear everything learned.
    pub fn reset_run(&mut self) {
        self.previous = None;
        self.table.clear();
        self.updates = 0;
    }
}
