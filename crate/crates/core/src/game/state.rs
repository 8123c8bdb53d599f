use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::map::{Coord, GridMap};
use super::Side;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitId(pub u8);

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Unit {
    pub id: UnitId,
    pub side: Side,
    pub position: Coord,
    pub alive: bool,
}

/// Game parameters that stay fixed for a whole round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rules {
    /// Maximum 4-directional steps per move.
    pub move_range: u8,
    /// Moves per side after which an undecided round is a draw.
    pub draw_limit: u32,
}

impl Default for Rules {
    fn default() -> Self {
        Rules {
            move_range: 3,
            draw_limit: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Move { unit: UnitId, to: Coord },
    Shoot { unit: UnitId, target: UnitId },
    MoveShoot { unit: UnitId, to: Coord, target: UnitId },
    Pass,
}

impl Action {
    /// The commanded unit, `None` for `Pass`.
    pub fn unit(&self) -> Option<UnitId> {
        match *self {
            Action::Move { unit, .. } | Action::Shoot { unit, .. } | Action::MoveShoot { unit, .. } => {
                Some(unit)
            }
            Action::Pass => None,
        }
    }

    pub fn target(&self) -> Option<UnitId> {
        match *self {
            Action::Shoot { target, .. } | Action::MoveShoot { target, .. } => Some(target),
            _ => None,
        }
    }

    pub fn destination(&self) -> Option<Coord> {
        match *self {
            Action::Move { to, .. } | Action::MoveShoot { to, .. } => Some(to),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Move { unit, to } => write!(f, "move {unit} {to}"),
            Action::Shoot { unit, target } => write!(f, "shoot {unit} {target}"),
            Action::MoveShoot { unit, to, target } => write!(f, "moveshoot {unit} {to} {target}"),
            Action::Pass => f.write_str("pass"),
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let unit = |w: &str| w.parse::<u8>().map(UnitId).map_err(|e| format!("bad unit id `{w}`: {e}"));
        match words.as_slice() {
            ["pass"] => Ok(Action::Pass),
            ["move", u, to] => Ok(Action::Move {
                unit: unit(u)?,
                to: to.parse()?,
            }),
            ["shoot", u, t] => Ok(Action::Shoot {
                unit: unit(u)?,
                target: unit(t)?,
            }),
            ["moveshoot", u, to, t] => Ok(Action::MoveShoot {
                unit: unit(u)?,
                to: to.parse()?,
                target: unit(t)?,
            }),
            _ => Err(format!("unrecognized action `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Ongoing,
    Win(Side),
    Draw,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        self != Outcome::Ongoing
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Ongoing => f.write_str("ongoing"),
            Outcome::Win(side) => write!(f, "win {side}"),
            Outcome::Draw => f.write_str("draw"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("unknown unit {0}")]
    UnknownUnit(UnitId),
    #[error("unit {0} is dead")]
    DeadUnit(UnitId),
    #[error("game is already over ({0})")]
    Terminal(Outcome),
    #[error("illegal action `{action}`: {reason}")]
    IllegalAction { action: Action, reason: &'static str },
    #[error("invalid state: {0}")]
    InvalidState(&'static str),
}

/// A full game position. Cloning is cheap: the map is shared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameState {
    map: Arc<GridMap>,
    rules: Rules,
    units: Vec<Unit>,
    side_to_move: Side,
    moves_made: [u32; 2],
    last_acted: Option<UnitId>,
}

impl GameState {
    /// Initial position: one unit per start cell, humans numbered first.
    pub fn new(map: Arc<GridMap>, rules: Rules, first: Side) -> Self {
        let mut units = Vec::new();
        for side in Side::ALL {
            for &position in map.start_positions(side) {
                units.push(Unit {
                    id: UnitId(units.len() as u8),
                    side,
                    position,
                    alive: true,
                });
            }
        }
        GameState {
            map,
            rules,
            units,
            side_to_move: first,
            moves_made: [0, 0],
            last_acted: None,
        }
    }

    /// Custom position with the given living units (ids follow list order).
    pub fn with_units(
        map: Arc<GridMap>,
        rules: Rules,
        units: &[(Side, Coord)],
        side_to_move: Side,
    ) -> Result<Self, GameError> {
        let units: Vec<Unit> = units
            .iter()
            .enumerate()
            .map(|(i, &(side, position))| Unit {
                id: UnitId(i as u8),
                side,
                position,
                alive: true,
            })
            .collect();
        let state = GameState {
            map,
            rules,
            units,
            side_to_move,
            moves_made: [0, 0],
            last_acted: None,
        };
        state.validate()?;
        Ok(state)
    }

    /// Overrides the per-side move counters (e.g. to set up near-draw positions).
    pub fn with_moves_made(mut self, human: u32, alien: u32) -> Result<Self, GameError> {
        self.moves_made = [human, alien];
        self.validate()?;
        Ok(self)
    }

    pub fn with_last_acted(mut self, unit: Option<UnitId>) -> Result<Self, GameError> {
        self.last_acted = unit;
        self.validate()?;
        Ok(self)
    }

    /// Marks a unit dead without a shot being fired. Test setup helper.
    pub fn with_unit_removed(mut self, unit: UnitId) -> Result<Self, GameError> {
        let idx = self.unit_index(unit)?;
        self.units[idx].alive = false;
        Ok(self)
    }

    /// Checks every structural invariant of the position.
    pub fn validate(&self) -> Result<(), GameError> {
        let diff = self.moves_made[0].abs_diff(self.moves_made[1]);
        if diff > 1 {
            return Err(GameError::InvalidState("move counters differ by more than one"));
        }
        if let Some(id) = self.last_acted {
            if id.0 as usize >= self.units.len() {
                return Err(GameError::InvalidState("last_acted names no unit"));
            }
        }
        let mut occupied = vec![false; self.map.cell_count()];
        for (i, unit) in self.units.iter().enumerate() {
            if unit.id.0 as usize != i {
                return Err(GameError::InvalidState("unit ids must match their index"));
            }
            if !unit.alive {
                continue;
            }
            if !self.map.contains(unit.position) {
                return Err(GameError::InvalidState("unit outside the grid"));
            }
            if self.map.is_wall(unit.position) {
                return Err(GameError::InvalidState("unit on a wall"));
            }
            let cell = self.map.index(unit.position);
            if occupied[cell] {
                return Err(GameError::InvalidState("two units share a cell"));
            }
            occupied[cell] = true;
        }
        Ok(())
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn shared_map(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn rules(&self) -> Rules {
        self.rules
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit(&self, id: UnitId) -> Option<&Unit> {
        self.units.get(id.0 as usize)
    }

    pub fn side_to_move(&self) -> Side {
        self.side_to_move
    }

    pub fn moves_made(&self, side: Side) -> u32 {
        self.moves_made[side.index()]
    }

    pub fn last_acted(&self) -> Option<UnitId> {
        self.last_acted
    }

    /// Plies played so far.
    pub fn ply(&self) -> u32 {
        self.moves_made[0] + self.moves_made[1]
    }

    pub fn alive_count(&self, side: Side) -> usize {
        self.units.iter().filter(|u| u.alive && u.side == side).count()
    }

    pub fn living_units(&self) -> impl Iterator<Item = &Unit> {
        self.units.iter().filter(|u| u.alive)
    }

    pub fn unit_at(&self, at: Coord) -> Option<&Unit> {
        self.units.iter().find(|u| u.alive && u.position == at)
    }

    pub fn outcome(&self) -> Outcome {
        outcome(self, self.rules.draw_limit)
    }

    fn unit_index(&self, id: UnitId) -> Result<usize, GameError> {
        let idx = id.0 as usize;
        if idx >= self.units.len() {
            return Err(GameError::UnknownUnit(id));
        }
        Ok(idx)
    }

    fn living_unit_index(&self, id: UnitId) -> Result<usize, GameError> {
        let idx = self.unit_index(id)?;
        if !self.units[idx].alive {
            return Err(GameError::DeadUnit(id));
        }
        Ok(idx)
    }

    /// Living-unit occupancy as a bitboard (maps up to 128 cells).
    #[inline]
    fn occupancy_bits(&self) -> u128 {
        self.units
            .iter()
            .filter(|u| u.alive)
            .fold(0u128, |acc, u| acc | 1u128 << self.map.index(u.position))
    }

    /// Cells reachable from unit `idx` in at most `steps` moves, as a
    /// bitboard or a row-major index list depending on map size.
    fn reachable_indices(&self, idx: usize, steps: u8, out: &mut Vec<usize>) {
        out.clear();
        let map = &*self.map;
        let start = map.index(self.units[idx].position);
        if map.cell_count() <= 128 {
            let mut bits = reach_bits(map, self.occupancy_bits(), start, steps);
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                out.push(i);
                bits &= bits - 1;
            }
            return;
        }
        let mut blocked = vec![false; map.cell_count()];
        for u in self.units.iter().filter(|u| u.alive) {
            blocked[map.index(u.position)] = true;
        }
        let mut dist = vec![u8::MAX; map.cell_count()];
        let mut queue = std::collections::VecDeque::new();
        dist[start] = 0;
        queue.push_back(start);
        while let Some(cell) = queue.pop_front() {
            if dist[cell] == steps {
                continue;
            }
            for next in map.neighbors(map.coord(cell)) {
                let n = map.index(next);
                if dist[n] == u8::MAX && !blocked[n] && !map.is_wall_index(n) {
                    dist[n] = dist[cell] + 1;
                    queue.push_back(n);
                }
            }
        }
        out.extend((0..map.cell_count()).filter(|&i| i != start && dist[i] != u8::MAX));
    }

    /// Appends every legal action to `out` (cleared first).
    pub fn legal_actions_into(&self, out: &mut Vec<Action>) {
        out.clear();
        let map = &*self.map;
        let side = self.side_to_move;
        let mut reach = Vec::with_capacity(map.cell_count());
        for (idx, unit) in self.units.iter().enumerate() {
            if !unit.alive || unit.side != side {
                continue;
            }
            self.reachable_indices(idx, self.rules.move_range, &mut reach);
            let here = map.index(unit.position);
            for &cell in &reach {
                out.push(Action::Move {
                    unit: unit.id,
                    to: map.coord(cell),
                });
            }
            for enemy in self.units.iter().filter(|e| e.alive && e.side != side) {
                if map.has_sight_index(here, map.index(enemy.position)) {
                    out.push(Action::Shoot {
                        unit: unit.id,
                        target: enemy.id,
                    });
                }
            }
            for &cell in &reach {
                for enemy in self.units.iter().filter(|e| e.alive && e.side != side) {
                    if map.has_sight_index(cell, map.index(enemy.position)) {
                        out.push(Action::MoveShoot {
                            unit: unit.id,
                            to: map.coord(cell),
                            target: enemy.id,
                        });
                    }
                }
            }
        }
        if out.is_empty() {
            out.push(Action::Pass);
        }
    }

    /// Applies an action known to be legal, mutating in place.
    ///
    /// Used on hot paths (rollouts) where the action was just drawn from
    /// [`GameState::legal_actions_into`]. Use [`apply_action`] for untrusted input.
    pub fn apply_in_place(&mut self, action: &Action) {
        match *action {
            Action::Move { unit, to } => {
                self.units[unit.0 as usize].position = to;
            }
            Action::Shoot { target, .. } => {
                self.units[target.0 as usize].alive = false;
            }
            Action::MoveShoot { unit, to, target } => {
                self.units[unit.0 as usize].position = to;
                self.units[target.0 as usize].alive = false;
            }
            Action::Pass => {}
        }
        if let Some(unit) = action.unit() {
            self.last_acted = Some(unit);
        }
        self.moves_made[self.side_to_move.index()] += 1;
        self.side_to_move = self.side_to_move.other();
    }

    /// Checks legality without enumerating every action.
    pub fn check_action(&self, action: &Action) -> Result<(), GameError> {
        let state_outcome = self.outcome();
        if state_outcome.is_terminal() {
            return Err(GameError::Terminal(state_outcome));
        }
        let illegal = |reason| GameError::IllegalAction {
            action: *action,
            reason,
        };
        let Some(unit_id) = action.unit() else {
            let mut all = Vec::new();
            self.legal_actions_into(&mut all);
            return if all == [Action::Pass] {
                Ok(())
            } else {
                Err(illegal("pass is only legal when nothing else is"))
            };
        };
        let idx = self.unit_index(unit_id).map_err(|_| illegal("unknown unit"))?;
        let unit = self.units[idx];
        if !unit.alive {
            return Err(illegal("commanded unit is dead"));
        }
        if unit.side != self.side_to_move {
            return Err(illegal("unit belongs to the side not on move"));
        }
        let mut from = unit.position;
        if let Some(to) = action.destination() {
            if !self.map.contains(to) {
                return Err(illegal("destination outside the grid"));
            }
            let mut reach = Vec::new();
            self.reachable_indices(idx, self.rules.move_range, &mut reach);
            if !reach.contains(&self.map.index(to)) {
                return Err(illegal("destination not reachable"));
            }
            from = to;
        }
        if let Some(target) = action.target() {
            let t = self.unit_index(target).map_err(|_| illegal("unknown target"))?;
            let target = self.units[t];
            if !target.alive {
                return Err(illegal("target is dead"));
            }
            if target.side == unit.side {
                return Err(illegal("target is not an enemy"));
            }
            if !self.map.has_sight(from, target.position) {
                return Err(illegal("no line of sight to target"));
            }
        }
        Ok(())
    }

    /// Stable digest of the position (units, turn, counters, outcome).
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_text().as_bytes());
        hex::encode(&hasher.finalize()[..8])
    }

    fn canonical_text(&self) -> String {
        let mut s = format!(
            "{}x{};to_move={};moves={},{};last={:?};",
            self.map.width(),
            self.map.height(),
            self.side_to_move,
            self.moves_made[0],
            self.moves_made[1],
            self.last_acted.map(|u| u.0)
        );
        for u in &self.units {
            s.push_str(&format!("{}:{}:{}:{};", u.id, u.side, u.position, u.alive as u8));
        }
        s.push_str(&self.outcome().to_string());
        s
    }

    /// ASCII board: `#` wall, `.` floor, `H`/`A` living units.
    pub fn render(&self) -> String {
        let map = &*self.map;
        let mut out = String::with_capacity((map.width() + 1) * map.height());
        for y in 0..map.height() as u8 {
            for x in 0..map.width() as u8 {
                let at = Coord::new(x, y);
                let glyph = if map.is_wall(at) {
                    '#'
                } else if let Some(u) = self.unit_at(at) {
                    u.side.glyph()
                } else {
                    '.'
                };
                out.push(glyph);
            }
            out.push('\n');
        }
        out
    }
}

/// Bitboard flood fill limited to `steps` moves; excludes `start`.
#[inline]
fn reach_bits(map: &GridMap, occupied: u128, start: usize, steps: u8) -> u128 {
    let w = map.width();
    let masks = map.masks();
    let free = masks.open & !occupied;
    let mut reached: u128 = 1 << start;
    let mut frontier = reached;
    for _ in 0..steps {
        let spread = ((frontier & !masks.right_col) << 1)
            | ((frontier & !masks.left_col) >> 1)
            | (frontier << w)
            | (frontier >> w);
        let next = spread & free & !reached;
        if next == 0 {
            break;
        }
        reached |= next;
        frontier = next;
    }
    reached & !(1u128 << start)
}

/// Cells the unit can end a move on, in row-major order.
pub fn reachable_cells(state: &GameState, unit: UnitId, max_steps: u8) -> Result<Vec<Coord>, GameError> {
    let idx = state.living_unit_index(unit)?;
    let mut cells = Vec::new();
    state.reachable_indices(idx, max_steps, &mut cells);
    Ok(cells.into_iter().map(|i| state.map.coord(i)).collect())
}

/// Every legal action for the side to move, in deterministic order:
/// unit id, then Move / Shoot / MoveShoot, then row-major destination,
/// then target id. Exactly `[Pass]` when nothing else is possible.
pub fn legal_actions(state: &GameState) -> Result<Vec<Action>, GameError> {
    let current = state.outcome();
    if current.is_terminal() {
        return Err(GameError::Terminal(current));
    }
    let mut out = Vec::new();
    state.legal_actions_into(&mut out);
    Ok(out)
}

/// Pure transition: returns the successor and leaves `state` untouched.
pub fn apply_action(state: &GameState, action: &Action) -> Result<GameState, GameError> {
    state.check_action(action)?;
    let mut next = state.clone();
    next.apply_in_place(action);
    Ok(next)
}

/// Win takes precedence over the draw limit.
pub fn outcome(state: &GameState, draw_limit: u32) -> Outcome {
    let humans = state.alive_count(Side::Human);
    let aliens = state.alive_count(Side::Alien);
    if aliens == 0 && humans > 0 {
        return Outcome::Win(Side::Human);
    }
    if humans == 0 && aliens > 0 {
        return Outcome::Win(Side::Alien);
    }
    if humans == 0 && aliens == 0 {
        return Outcome::Draw;
    }
    if state.moves_made[0] >= draw_limit && state.moves_made[1] >= draw_limit {
        return Outcome::Draw;
    }
    Outcome::Ongoing
}
