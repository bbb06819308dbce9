use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::agp::PlannedPath;
use crate::error::{Error, Result};
use crate::geom::{polyline_length, Circle, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct WaStarParams {
    pub weight: f64,
    pub cell: f64,
}

impl WaStarParams {
    /// Heuristic weight 1.5 on 10 px cells.
    pub fn benchmark() -> Self {
        WaStarParams { weight: 1.5, cell: 10.0 }
    }
}

/// Occupancy grid; cell `(c, r)` has its center at `((c + ½)·cell, (r + ½)·cell)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub cols: usize,
    pub rows: usize,
    pub cell: f64,
    free: Vec<bool>,
}

impl Grid {
    pub fn new(cols: usize, rows: usize, cell: f64, free: Vec<bool>) -> Result<Self> {
        if cols == 0 || rows == 0 || free.len() != cols * rows || !(cell > 0.0) {
            return Err(Error::InvalidArgument(format!("grid {cols}x{rows} with {} cells", free.len())));
        }
        Ok(Grid { cols, rows, cell, free })
    }

    /// A cell is traversable iff its center lies strictly outside every zone.
    pub fn from_zones(width: f64, height: f64, cell: f64, zones: &[Circle]) -> Result<Self> {
        if !(cell > 0.0) {
            return Err(Error::InvalidArgument(format!("cell size must be > 0, got {cell}")));
        }
        let cols = (width / cell).ceil() as usize;
        let rows = (height / cell).ceil() as usize;
        let mut free = vec![true; cols * rows];
        for z in zones {
            let r2 = z.radius * z.radius;
            let span = |lo: f64, hi: f64, n: usize| {
                let a = ((lo / cell - 0.5).floor().max(0.0) as usize).min(n);
                let b = ((hi / cell - 0.5).ceil().max(-1.0) + 1.0).clamp(0.0, n as f64) as usize;
                a..b
            };
            for r in span(z.center.y - z.radius, z.center.y + z.radius, rows) {
                for c in span(z.center.x - z.radius, z.center.x + z.radius, cols) {
                    let dx = (c as f64 + 0.5) * cell - z.center.x;
                    let dy = (r as f64 + 0.5) * cell - z.center.y;
                    if dx * dx + dy * dy <= r2 {
                        free[r * cols + c] = false;
                    }
                }
            }
        }
        Grid::new(cols, rows, cell, free)
    }

    pub fn is_free(&self, c: usize, r: usize) -> bool {
        self.free[r * self.cols + c]
    }

    pub fn center(&self, c: usize, r: usize) -> Vec2 {
        Vec2::new((c as f64 + 0.5) * self.cell, (r as f64 + 0.5) * self.cell)
    }

    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let c = (p.x / self.cell).floor();
        let r = (p.y / self.cell).floor();
        (c >= 0.0 && r >= 0.0 && (c as usize) < self.cols && (r as usize) < self.rows).then(|| (c as usize, r as usize))
    }
}

/// Move cost kept as counts of straight and diagonal steps, so equal costs
/// compare exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl StepCost {
    pub fn value(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * SQRT_2
    }

    fn add(self, diagonal: bool) -> StepCost {
        if diagonal {
            StepCost { diagonal: self.diagonal + 1, ..self }
        } else {
            StepCost { straight: self.straight + 1, ..self }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<(usize, usize)>,
    pub cost: StepCost,
    pub expanded: usize,
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    h: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, o: &Self) -> Ordering {
        // BinaryHeap is a max-heap: reverse for lowest f, then h, then index
        o.f.total_cmp(&self.f).then(o.h.total_cmp(&self.h)).then(o.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

const MOVES: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Weighted A* over 8-connected cells with unit/√2 moves and a Euclidean
/// heuristic in cell units; `f = g + w·h`. Nodes reopen when a cheaper route
/// turns up, so `w = 1` returns an optimal route.
pub fn grid_search(grid: &Grid, start: (usize, usize), goal: (usize, usize), weight: f64) -> Option<GridPath> {
    assert!(weight >= 1.0, "heuristic weight must be >= 1");
    let n = grid.cols * grid.rows;
    let idx = |c: usize, r: usize| r * grid.cols + c;
    if !grid.is_free(start.0, start.1) || !grid.is_free(goal.0, goal.1) {
        return None;
    }
    let h = |i: usize| {
        let (c, r) = (i % grid.cols, i / grid.cols);
        ((c as f64 - goal.0 as f64).powi(2) + (r as f64 - goal.1 as f64).powi(2)).sqrt()
    };
    let mut g: Vec<Option<StepCost>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    let s = idx(start.0, start.1);
    let t = idx(goal.0, goal.1);
    g[s] = Some(StepCost::default());
    heap.push(Open { f: weight * h(s), h: h(s), idx: s });
    let mut expanded = 0;
    while let Some(Open { f, idx: i, .. }) = heap.pop() {
        let gi = g[i].expect("queued nodes have a cost");
        if closed[i] || f > gi.value() + weight * h(i) {
            continue;
        }
        closed[i] = true;
        expanded += 1;
        if i == t {
            let mut cells = vec![goal];
            let mut cur = t;
            while cur != s {
                cur = parent[cur];
                cells.push((cur % grid.cols, cur / grid.cols));
            }
            cells.reverse();
            return Some(GridPath { cells, cost: gi, expanded });
        }
        let (c, r) = ((i % grid.cols) as i64, (i / grid.cols) as i64);
        for (dc, dr) in MOVES {
            let (nc, nr) = (c + dc, r + dr);
            if nc < 0 || nr < 0 || nc >= grid.cols as i64 || nr >= grid.rows as i64 {
                continue;
            }
            let (nc, nr) = (nc as usize, nr as usize);
            if !grid.is_free(nc, nr) {
                continue;
            }
            let j = idx(nc, nr);
            let cand = gi.add(dc != 0 && dr != 0);
            if g[j].is_none_or(|old| cand.value() < old.value()) {
                g[j] = Some(cand);
                parent[j] = i;
                closed[j] = false;
                let hj = h(j);
                heap.push(Open { f: cand.value() + weight * hj, h: hj, idx: j });
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaStarResult {
    pub path: PlannedPath,
    pub cost: StepCost,
    pub expanded: usize,
}

/// Grid search between the cells holding `start` and `end`; the returned
/// polyline runs start → intermediate cell centers → end.
pub fn wastar_plan(zones: &[Circle], width: f64, height: f64, start: Vec2, end: Vec2, params: &WaStarParams) -> Result<WaStarResult> {
    if !(params.weight >= 1.0) {
        return Err(Error::InvalidArgument(format!("heuristic weight must be >= 1, got {}", params.weight)));
    }
    let grid = Grid::from_zones(width, height, params.cell, zones)?;
    let locate = |p: Vec2, which: &str| {
        let cell = grid.cell_of(p).ok_or_else(|| Error::InvalidArgument(format!("{which} point lies outside the grid")))?;
        if grid.is_free(cell.0, cell.1) {
            Ok(cell)
        } else {
            Err(Error::InvalidArgument(format!("{which} cell is not traversable")))
        }
    };
    let (a, b) = (locate(start, "start")?, locate(end, "end")?);
    let found = grid_search(&grid, a, b, params.weight)
        .ok_or_else(|| Error::PlanFailed { reason: "no route on the grid".into(), nodes: vec![start] })?;
    let mut nodes = vec![start];
    if found.cells.len() > 2 {
        nodes.extend(found.cells[1..found.cells.len() - 1].iter().map(|&(c, r)| grid.center(c, r)));
    }
    nodes.push(end);
    nodes.dedup();
    let length = polyline_length(&nodes);
    Ok(WaStarResult {
        path: PlannedPath { waypoints: nodes.clone(), nodes, length },
        cost: found.cost,
        expanded: found.expanded,
    })
}

/// f-value of a node.
pub fn f_value(g: f64, h: f64, weight: f64) -> f64 {
    g + weight * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_example() {
        assert_eq!(f_value(10.0, 5.0, 1.5), 17.5);
    }

    #[test]
    fn straight_corridor() {
        let grid = Grid::new(10, 1, 1.0, vec![true; 10]).unwrap();
        let p = grid_search(&grid, (0, 0), (9, 0), 1.0).unwrap();
        assert_eq!(p.cost, StepCost { straight: 9, diagonal: 0 });
        assert_eq!(p.cells.len(), 10);
    }

    #[test]
    fn traversability_uses_strict_inequality() {
        // center of cell (0,0) is (5,5); a zone of radius exactly 5 centered at (10,5) touches it
        let g = Grid::from_zones(30.0, 10.0, 10.0, &[Circle::new(Vec2::new(10.0, 5.0), 5.0)]).unwrap();
        assert!(!g.is_free(0, 0));
        assert!(!g.is_free(1, 0));
        assert!(g.is_free(2, 0));
    }

    #[test]
    fn blocked_route_fails() {
        let zones = [Circle::new(Vec2::new(50.0, 50.0), 200.0)];
        let r = wastar_plan(&zones, 1000.0, 1000.0, Vec2::new(500.0, 500.0), Vec2::new(900.0, 900.0), &WaStarParams::benchmark());
        assert!(r.is_ok());
        let wall: Vec<Circle> = (0..20).map(|i| Circle::new(Vec2::new(500.0, i as f64 * 50.0 + 25.0), 40.0)).collect();
        let r = wastar_plan(&wall, 1000.0, 1000.0, Vec2::new(100.0, 500.0), Vec2::new(900.0, 500.0), &WaStarParams::benchmark());
        assert!(matches!(r, Err(Error::PlanFailed { .. })));
    }
}
