//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use minixcom::game::{Coord, GameState, GridMap, Outcome, Rules, Side, UnitId};
use rand::seq::SliceRandom;
use rand::Rng;

/// Sight by sampling the open segment at `n - 1` interior points, with exact
/// integer arithmetic on doubled coordinates. Crossings through a wall
/// interior on a small grid are long enough that `n = 4096` never misses one.
pub fn dense_sight(map: &GridMap, a: Coord, b: Coord) -> bool {
    const N: i64 = 4096;
    if a == b {
        return true;
    }
    let p = [2 * a.x as i64 + 1, 2 * a.y as i64 + 1];
    let d = [2 * (b.x as i64 - a.x as i64), 2 * (b.y as i64 - a.y as i64)];
    for k in 1..N {
        // Point (p + d * k / N), scaled by N.
        let x = p[0] * N + d[0] * k;
        let y = p[1] * N + d[1] * k;
        for w in map.walls() {
            let (wx, wy) = (2 * w.x as i64 * N, 2 * w.y as i64 * N);
            if wx < x && x < wx + 2 * N && wy < y && y < wy + 2 * N {
                return false;
            }
        }
    }
    true
}

/// Cells reachable in 1..=`steps` orthogonal steps by enumerating every path,
/// never entering walls or occupied cells. Sorted row-major.
pub fn paths_reach(state: &GameState, unit: UnitId, steps: u8) -> Vec<Coord> {
    let map = state.map();
    let start = state.unit(unit).unwrap().position;
    let blocked = |c: Coord| map.is_wall(c) || state.unit_at(c).is_some();
    let mut found = Vec::new();
    fn walk(at: Coord, left: u8, map: &GridMap, blocked: &dyn Fn(Coord) -> bool, found: &mut Vec<Coord>) {
        if left == 0 {
            return;
        }
        for (dx, dy) in [(1i16, 0i16), (-1, 0), (0, 1), (0, -1)] {
            let (x, y) = (at.x as i16 + dx, at.y as i16 + dy);
            if x < 0 || y < 0 || x >= map.width() as i16 || y >= map.height() as i16 {
                continue;
            }
            let next = Coord::new(x as u8, y as u8);
            if blocked(next) {
                continue;
            }
            found.push(next);
            walk(next, left - 1, map, blocked, found);
        }
    }
    walk(start, steps, map, &blocked, &mut found);
    found.retain(|&c| c != start);
    found.sort_by_key(|c| (c.y, c.x));
    found.dedup();
    found
}

/// Random `w x h` map with the given wall density and at least two free cells.
pub fn random_map<R: Rng>(rng: &mut R, w: usize, h: usize, density: f64) -> Arc<GridMap> {
    loop {
        let walls: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(density)).collect();
        let free: Vec<usize> = (0..w * h).filter(|&i| !walls[i]).collect();
        if free.len() < 2 {
            continue;
        }
        let c = |i: usize| Coord::new((i % w) as u8, (i / w) as u8);
        let map = GridMap::new(w, h, walls, vec![], vec![c(free[0])], vec![c(free[free.len() - 1])]).unwrap();
        return Arc::new(map);
    }
}

/// Places 1..=2 units per side on distinct free cells.
pub fn random_units<R: Rng>(rng: &mut R, map: &Arc<GridMap>) -> Option<GameState> {
    let mut free: Vec<Coord> = (0..map.cell_count()).map(|i| map.coord(i)).filter(|&c| !map.is_wall(c)).collect();
    if free.len() < 2 {
        return None;
    }
    free.shuffle(rng);
    let per_side = if free.len() >= 4 { rng.gen_range(1..=2) } else { 1 };
    let mut placed = Vec::new();
    for i in 0..per_side {
        placed.push((Side::Human, free[2 * i]));
        placed.push((Side::Alien, free[2 * i + 1]));
    }
    let first = if rng.gen_bool(0.5) { Side::Human } else { Side::Alien };
    GameState::with_units(map.clone(), Rules::default(), &placed, first).ok()
}

/// Negamax value for the side to move: +1 forced win, -1 forced loss, 0 draw.
pub fn negamax(state: &GameState) -> i32 {
    match state.outcome() {
        Outcome::Win(side) => return if side == state.side_to_move() { 1 } else { -1 },
        Outcome::Draw => return 0,
        Outcome::Ongoing => {}
    }
    let mut best = -1;
    for a in minixcom::game::legal_actions(state).unwrap() {
        let next = minixcom::game::apply_action(state, &a).unwrap();
        let v = match next.outcome() {
            Outcome::Win(side) => {
                if side == state.side_to_move() {
                    1
                } else {
                    -1
                }
            }
            Outcome::Draw => 0,
            Outcome::Ongoing => {
                if next.side_to_move() == state.side_to_move() {
                    negamax(&next)
                } else {
                    -negamax(&next)
                }
            }
        };
        if v > best {
            best = v;
            if best == 1 {
                break;
            }
        }
    }
    best
}
