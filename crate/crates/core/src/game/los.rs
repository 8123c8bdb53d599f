//! Exact line-of-sight on the grid.
//!
//! Sight runs along the open segment between two cell centres and is
//! blocked only when that segment passes through the interior of a wall
//! cell. Touching a wall edge or corner does not block. All arithmetic is
//! done on doubled integer coordinates so corner grazes are decided exactly.

use super::map::{Coord, GridMap};

/// Largest map for which the full pairwise sight table is materialized.
pub(crate) const SIGHT_TABLE_MAX_CELLS: usize = 1024;

/// Exact rational `num / den` with `den > 0`.
#[derive(Clone, Copy)]
struct Frac {
    num: i64,
    den: i64,
}

impl Frac {
    fn new(num: i64, den: i64) -> Self {
        if den < 0 {
            Frac { num: -num, den: -den }
        } else {
            Frac { num, den }
        }
    }

    fn lt(self, other: Frac) -> bool {
        self.num * other.den < other.num * self.den
    }
}

/// Whether the open segment between the centres of `a` and `b` meets the
/// open square of `wall`.
fn segment_hits_cell(a: Coord, b: Coord, wall: Coord) -> bool {
    let p = [2 * a.x as i64 + 1, 2 * a.y as i64 + 1];
    let q = [2 * b.x as i64 + 1, 2 * b.y as i64 + 1];
    let lo_box = [2 * wall.x as i64, 2 * wall.y as i64];

    let mut lower = Frac::new(0, 1);
    let mut upper = Frac::new(1, 1);
    for axis in 0..2 {
        let (lo, hi) = (lo_box[axis], lo_box[axis] + 2);
        let d = q[axis] - p[axis];
        if d == 0 {
            if !(lo < p[axis] && p[axis] < hi) {
                return false;
            }
            continue;
        }
        let (enter, exit) = if d > 0 {
            (Frac::new(lo - p[axis], d), Frac::new(hi - p[axis], d))
        } else {
            (Frac::new(hi - p[axis], d), Frac::new(lo - p[axis], d))
        };
        if lower.lt(enter) {
            lower = enter;
        }
        if exit.lt(upper) {
            upper = exit;
        }
    }
    lower.lt(upper)
}

/// Geometric line-of-sight test, independent of the cached table.
pub fn line_of_sight(map: &GridMap, a: Coord, b: Coord) -> bool {
    if a == b {
        return true;
    }
    let (x0, x1) = (a.x.min(b.x), a.x.max(b.x));
    let (y0, y1) = (a.y.min(b.y), a.y.max(b.y));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let cell = Coord::new(x, y);
            if map.is_wall(cell) && segment_hits_cell(a, b, cell) {
                return false;
            }
        }
    }
    true
}

pub(crate) fn sight_table(map: &GridMap) -> Vec<bool> {
    let n = map.cell_count();
    if n > SIGHT_TABLE_MAX_CELLS {
        return Vec::new();
    }
    let mut table = vec![false; n * n];
    for i in 0..n {
        table[i * n + i] = true;
        for j in (i + 1)..n {
            let s = line_of_sight(map, map.coord(i), map.coord(j));
            table[i * n + j] = s;
            table[j * n + i] = s;
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::map::parse_map;

    fn map_with_walls(w: usize, h: usize, walls: &[(u8, u8)]) -> GridMap {
        let mut cells = vec![false; w * h];
        for &(x, y) in walls {
            cells[y as usize * w + x as usize] = true;
        }
        let free: Vec<Coord> = (0..w * h)
            .filter(|i| !cells[*i])
            .map(|i| Coord::new((i % w) as u8, (i / w) as u8))
            .collect();
        GridMap::new(w, h, cells, vec![], vec![free[0]], vec![free[1]]).unwrap()
    }

    #[test]
    fn same_cell_sees_itself() {
        let map = map_with_walls(6, 6, &[]);
        assert!(line_of_sight(&map, Coord::new(3, 3), Coord::new(3, 3)));
    }

    #[test]
    fn adjacent_cells_see_each_other() {
        let map = map_with_walls(6, 6, &[]);
        assert!(line_of_sight(&map, Coord::new(1, 1), Coord::new(2, 1)));
    }

    #[test]
    fn wall_in_between_blocks() {
        let map = map_with_walls(6, 6, &[(2, 0)]);
        assert!(!line_of_sight(&map, Coord::new(0, 0), Coord::new(4, 0)));
        assert!(!map.has_sight(Coord::new(4, 0), Coord::new(0, 0)));
    }

    #[test]
    fn corner_graze_does_not_block() {
        // Diagonal (0,0)->(2,2) passes exactly through the shared corner of
        // walls at (1,0) and (0,1).
        let map = map_with_walls(3, 3, &[(1, 0), (0, 1)]);
        assert!(line_of_sight(&map, Coord::new(0, 0), Coord::new(2, 2)));
        // A wall on the diagonal itself blocks.
        let map = map_with_walls(3, 3, &[(1, 1)]);
        assert!(!line_of_sight(&map, Coord::new(0, 0), Coord::new(2, 2)));
    }

    #[test]
    fn table_matches_geometry_on_default_map() {
        let map = parse_map(crate::game::map::DEFAULT_MAP).unwrap();
        for i in 0..map.cell_count() {
            for j in 0..map.cell_count() {
                let (a, b) = (map.coord(i), map.coord(j));
                assert_eq!(map.has_sight(a, b), line_of_sight(&map, a, b));
            }
        }
    }
}
