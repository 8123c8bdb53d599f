//! RB1: a fixed rule cascade that always attacks through the left corridor.
//!
//! 1. If some unit sees an enemy, shoot (random target among those visible
//!    to the first such unit).
//! 2. Else, if some unit can move somewhere with sight and shoot, do that
//!    (first such unit, random among its move-and-shoot options).
//! 3. Else move the left-most unit along the corridor route; once the route
//!    is finished, toward the nearest enemy.
//! 4. Else pass.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;

use super::{Agent, AgentError};
use crate::game::{Action, Coord, GameState, GridMap, Side, Unit};
use crate::search::GameRng;

/// Corridor route oriented for one side, plus per-round progress.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rb1State {
    route: Vec<Coord>,
    next: usize,
}

impl Rb1State {
    /// Orients the map's corridor so it starts at the end nearer to `side`'s
    /// start positions.
    pub fn new(map: &GridMap, side: Side) -> Self {
        let mut route = map.corridor().to_vec();
        if let (Some(&first), Some(&last)) = (route.first(), route.last()) {
            let spread = |target: Coord| -> u32 {
                map.start_positions(side)
                    .iter()
                    .map(|s| s.x.abs_diff(target.x) as u32 + s.y.abs_diff(target.y) as u32)
                    .sum()
            };
            if spread(last) < spread(first) {
                route.reverse();
            }
        }
        Rb1State { route, next: 0 }
    }

    pub fn route(&self) -> &[Coord] {
        &self.route
    }

    /// Index of the next waypoint still ahead.
    pub fn next_waypoint(&self) -> usize {
        self.next
    }

    fn reset(&mut self) {
        self.next = 0;
    }

    fn step_toward(&mut self, state: &GameState, unit: &Unit, moves: &[Coord]) -> Coord {
        if let Some(k) = self.route.iter().position(|&c| c == unit.position) {
            self.next = self.next.max(k + 1);
        }
        let target = if self.next < self.route.len() {
            if let Some(k) = (self.next..self.route.len()).rev().find(|&k| moves.contains(&self.route[k])) {
                self.next = k + 1;
                return self.route[k];
            }
            Some(self.route[self.next])
        } else {
            let from_unit = wall_distances(state.map(), unit.position);
            state
                .living_units()
                .filter(|e| e.side != unit.side)
                .min_by_key(|e| (from_unit[state.map().index(e.position)], e.id))
                .map(|e| e.position)
        };
        let Some(target) = target else {
            return moves[0];
        };
        let dist = wall_distances(state.map(), target);
        *moves
            .iter()
            .min_by_key(|c| dist[state.map().index(**c)])
            .expect("caller passes at least one move")
    }
}

/// BFS step counts from `from` through non-wall cells; `u32::MAX` if cut off.
fn wall_distances(map: &GridMap, from: Coord) -> Vec<u32> {
    let mut dist = vec![u32::MAX; map.cell_count()];
    let mut queue = VecDeque::new();
    dist[map.index(from)] = 0;
    queue.push_back(from);
    while let Some(cell) = queue.pop_front() {
        let d = dist[map.index(cell)];
        for next in map.neighbors(cell) {
            let i = map.index(next);
            if dist[i] == u32::MAX && !map.is_wall(next) {
                dist[i] = d + 1;
                queue.push_back(next);
            }
        }
    }
    dist
}

/// Runs the RB1 cascade for the side to move.
pub fn rb1_choose(state: &GameState, progress: &mut Rb1State, rng: &mut GameRng) -> Action {
    let mut actions = Vec::new();
    state.legal_actions_into(&mut actions);
    let side = state.side_to_move();
    let own: Vec<Unit> = state.living_units().filter(|u| u.side == side).copied().collect();

    let pick = |rng: &mut GameRng, options: Vec<Action>| options[rng.gen_range(0..options.len())];

    for unit in &own {
        let shots: Vec<Action> = actions
            .iter()
            .filter(|a| matches!(a, Action::Shoot { unit: u, .. } if *u == unit.id))
            .copied()
            .collect();
        if !shots.is_empty() {
            return pick(rng, shots);
        }
    }
    for unit in &own {
        let combos: Vec<Action> = actions
            .iter()
            .filter(|a| matches!(a, Action::MoveShoot { unit: u, .. } if *u == unit.id))
            .copied()
            .collect();
        if !combos.is_empty() {
            return pick(rng, combos);
        }
    }

    let mut by_left = own;
    by_left.sort_by_key(|u| (u.position.x, u.position.y));
    for unit in &by_left {
        let moves: Vec<Coord> = actions
            .iter()
            .filter_map(|a| match a {
                Action::Move { unit: u, to } if *u == unit.id => Some(*to),
                _ => None,
            })
            .collect();
        if !moves.is_empty() {
            let to = progress.step_toward(state, unit, &moves);
            return Action::Move { unit: unit.id, to };
        }
    }
    Action::Pass
}

#[derive(Debug, Clone)]
pub struct Rb1Agent {
    side: Side,
    progress: Rb1State,
}

impl Rb1Agent {
    pub fn new(side: Side, map: &Arc<GridMap>) -> Self {
        Rb1Agent {
            side,
            progress: Rb1State::new(map, side),
        }
    }

    pub fn progress(&self) -> &Rb1State {
        &self.progress
    }
}

impl Agent for Rb1Agent {
    fn name(&self) -> &'static str {
        "rb1"
    }

    fn side(&self) -> Side {
        self.side
    }

    fn choose_action(&mut self, state: &GameState, rng: &mut GameRng) -> Result<Action, AgentError> {
        Ok(rb1_choose(state, &mut self.progress, rng))
    }

    fn reset_round(&mut self) {
        self.progress.reset();
    }

    fn reset_run(&mut self) {
        self.progress.reset();
    }
}
