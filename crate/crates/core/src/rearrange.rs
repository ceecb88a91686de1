//! Placement of the surface-code cell and movement of entangled qubits
//! onto its data sites.
//!
//! Both nodes run this on the same pattern and therefore obtain the same
//! plan; every function here is a pure function of its inputs.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::assignment::min_cost_assignment;
use crate::code::{cell_width, choose_code_distance, CodeLayout, DEFAULT_MIN_DISTANCE};
use crate::error::{Error, Result};
use crate::lattice::{EntanglementPattern, GridSpec, Site};

/// Edge weight between an entangled qubit and a data site.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteWeight {
    #[default]
    SquaredManhattan,
    Manhattan,
}

impl RouteWeight {
    pub fn weight(self, a: Site, b: Site) -> u64 {
        let m = a.manhattan(b) as u64;
        match self {
            RouteWeight::SquaredManhattan => m * m,
            RouteWeight::Manhattan => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementOptions {
    pub min_distance: usize,
    pub route_weight: RouteWeight,
}

impl Default for PlacementOptions {
    fn default() -> Self {
        PlacementOptions {
            min_distance: DEFAULT_MIN_DISTANCE,
            route_weight: RouteWeight::default(),
        }
    }
}

/// Source-to-target mapping. `pairs[q]` is `(source, target)` of qubit `q`;
/// targets follow the order they were given in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub pairs: Vec<(Site, Site)>,
    pub total_weight: u64,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RearrangementPlan {
    pub assignment: Assignment,
    /// Adjacent-site SWAPs in execution order.
    pub swaps: Vec<(Site, Site)>,
    /// SWAP participations of each matched qubit, indexed like `assignment.pairs`.
    pub swap_counts: Vec<u32>,
}

impl RearrangementPlan {
    pub fn total_swaps(&self) -> usize {
        self.swaps.len()
    }
}

/// Lattice sites nearest and second-nearest (Euclidean) to the mean
/// position of the occupied sites, each group in row-major order.
pub fn candidate_centers(pattern: &EntanglementPattern) -> Result<Vec<Site>> {
    if pattern.is_empty() {
        return Err(Error::EmptyPattern);
    }
    let m = pattern.count() as i64;
    let (sum_r, sum_c) = pattern
        .sites()
        .fold((0i64, 0i64), |(r, c), s| (r + s.row as i64, c + s.col as i64));
    // squared distance to the mean scaled by m², exact in integers
    let scaled = |s: Site| {
        let dr = m * s.row as i64 - sum_r;
        let dc = m * s.col as i64 - sum_c;
        dr * dr + dc * dc
    };
    let grid = pattern.grid();
    let mut distances: Vec<i64> = grid.sites().map(scaled).collect();
    distances.sort_unstable();
    distances.dedup();
    let keep = &distances[..distances.len().min(2)];
    Ok(keep
        .iter()
        .flat_map(|&d| grid.sites().filter(move |&s| scaled(s) == d))
        .collect())
}

/// Shifts a cell center so that the distance-`d` cell around it fits.
pub fn clamp_center(center: Site, d: usize, grid: GridSpec) -> Site {
    let lo = d - 1;
    let hi = grid.size() - d;
    Site::new(center.row.clamp(lo, hi), center.col.clamp(lo, hi))
}

/// Top-left corner of the cell centred at `center`.
pub fn cell_origin(center: Site, d: usize) -> Site {
    Site::new(center.row - (d - 1), center.col - (d - 1))
}

/// Minimum-weight assignment of a subset of `sources` onto all `targets`.
pub fn assign_to_targets(sources: &[Site], targets: &[Site], weight: RouteWeight) -> Result<Assignment> {
    if sources.len() < targets.len() {
        return Err(Error::InsufficientQubits {
            required: targets.len(),
            available: sources.len(),
        });
    }
    let cost: Vec<i64> = targets
        .iter()
        .flat_map(|&t| sources.iter().map(move |&s| weight.weight(s, t) as i64))
        .collect();
    let cols = sources.len();
    let chosen = min_cost_assignment(targets.len(), cols, |r, c| cost[r * cols + c]);
    let pairs: Vec<(Site, Site)> = chosen.iter().zip(targets).map(|(&c, &t)| (sources[c], t)).collect();
    let total_weight = pairs.iter().map(|&(s, t)| weight.weight(s, t)).sum();
    Ok(Assignment { pairs, total_weight })
}

pub fn assign_qubits(pattern: &EntanglementPattern, layout: &CodeLayout, weight: RouteWeight) -> Result<Assignment> {
    let sources: Vec<Site> = pattern.sites().collect();
    assign_to_targets(&sources, &layout.global_data_sites(), weight)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Occupant {
    Empty,
    Spare,
    Matched(usize),
}

// Route cost, compared lexicographically through the packing:
// finalized sites crossed, then steps, then matched qubits displaced.
const CROSS_COST: u64 = 1 << 40;
const STEP_COST: u64 = 1 << 20;
const DISPLACE_COST: u64 = 1;

struct Router {
    grid: GridSpec,
    dist: Vec<u64>,
    prev: Vec<usize>,
    heap: BinaryHeap<Reverse<(u64, usize)>>,
}

impl Router {
    fn new(grid: GridSpec) -> Self {
        let n = grid.num_sites();
        Router {
            grid,
            dist: vec![u64::MAX; n],
            prev: vec![usize::MAX; n],
            heap: BinaryHeap::new(),
        }
    }

    /// Shortest path `from -> to` (both inclusive) as site indices.
    fn route(
        &mut self,
        from: usize,
        to: usize,
        board: &[Occupant],
        finalized: &[bool],
        allow_finalized: bool,
    ) -> Option<Vec<usize>> {
        self.dist.fill(u64::MAX);
        self.prev.fill(usize::MAX);
        self.heap.clear();
        self.dist[from] = 0;
        self.heap.push(Reverse((0, from)));
        while let Some(Reverse((d, u))) = self.heap.pop() {
            if d > self.dist[u] {
                continue;
            }
            if u == to {
                break;
            }
            for nb in self.grid.neighbors(self.grid.site(u)) {
                let v = self.grid.index(nb);
                let mut step = STEP_COST;
                if finalized[v] {
                    if !allow_finalized {
                        continue;
                    }
                    step += CROSS_COST;
                } else if matches!(board[v], Occupant::Matched(_)) {
                    step += DISPLACE_COST;
                }
                let nd = d + step;
                if nd < self.dist[v] {
                    self.dist[v] = nd;
                    self.prev[v] = u;
                    self.heap.push(Reverse((nd, v)));
                }
            }
        }
        if self.dist[to] == u64::MAX {
            return None;
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = self.prev[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

/// Builds the SWAP schedule that moves every matched qubit to its target.
///
/// Targets are finalized in row-major order. Each qubit follows a shortest
/// grid path that avoids finalized sites (preferring paths that displace
/// fewer matched qubits); a qubit standing on the path is swapped one step
/// back. If no such path exists, the path may cross finalized sites; the
/// displaced qubits lose their finalized status and are routed again. More
/// than `2 × len` re-routes fails with [`Error::RoutingBlocked`].
pub fn plan_schedule(assignment: &Assignment, pattern: &EntanglementPattern) -> Result<RearrangementPlan> {
    let grid = pattern.grid();
    let n = assignment.len();
    let mut board = vec![Occupant::Empty; grid.num_sites()];
    for s in pattern.sites() {
        board[grid.index(s)] = Occupant::Spare;
    }
    let mut pos = Vec::with_capacity(n);
    let mut target = Vec::with_capacity(n);
    for (q, &(src, dst)) in assignment.pairs.iter().enumerate() {
        let i = grid.index(src);
        if board[i] != Occupant::Spare || !grid.contains(dst) {
            return Err(Error::InvalidParameter {
                name: "assignment",
                reason: format!("source {src} is not a distinct occupied site"),
            });
        }
        board[i] = Occupant::Matched(q);
        pos.push(i);
        target.push(grid.index(dst));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&q| target[q]);
    let mut queue: VecDeque<usize> = order.into();
    let limit = 2 * n;
    let mut reroutes = 0usize;

    let mut finalized = vec![false; grid.num_sites()];
    let mut swaps = Vec::new();
    let mut counts = vec![0u32; n];
    let mut router = Router::new(grid);

    while let Some(q) = queue.pop_front() {
        let to = target[q];
        if pos[q] != to {
            let path = match router.route(pos[q], to, &board, &finalized, false) {
                Some(p) => p,
                None => router
                    .route(pos[q], to, &board, &finalized, true)
                    .ok_or(Error::RoutingBlocked { limit })?,
            };
            for step in path.windows(2) {
                let (a, b) = (step[0], step[1]);
                counts[q] += 1;
                match board[b] {
                    Occupant::Matched(other) => {
                        counts[other] += 1;
                        pos[other] = a;
                        if finalized[b] {
                            finalized[b] = false;
                            queue.push_back(other);
                            reroutes += 1;
                            if reroutes > limit {
                                return Err(Error::RoutingBlocked { limit });
                            }
                        }
                    }
                    Occupant::Spare | Occupant::Empty => {}
                }
                board.swap(a, b);
                pos[q] = b;
                swaps.push((grid.site(a), grid.site(b)));
            }
        }
        finalized[to] = true;
    }

    Ok(RearrangementPlan {
        assignment: assignment.clone(),
        swaps,
        swap_counts: counts,
    })
}

/// Result of replaying a plan's SWAPs on a symbolic board.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleReplay {
    pub final_positions: Vec<Site>,
    pub participations: Vec<u32>,
}

/// Executes the SWAP list from the initial pattern, checking adjacency.
pub fn replay_schedule(plan: &RearrangementPlan, pattern: &EntanglementPattern) -> Result<ScheduleReplay> {
    let grid = pattern.grid();
    let mut board: Vec<Option<usize>> = vec![None; grid.num_sites()];
    for (q, &(src, _)) in plan.assignment.pairs.iter().enumerate() {
        board[grid.index(src)] = Some(q);
    }
    let mut participations = vec![0u32; plan.assignment.len()];
    for &(a, b) in &plan.swaps {
        if !a.is_adjacent(b) || !grid.contains(a) || !grid.contains(b) {
            return Err(Error::InvalidParameter {
                name: "swap",
                reason: format!("{a} and {b} are not adjacent grid sites"),
            });
        }
        let (ia, ib) = (grid.index(a), grid.index(b));
        for q in [board[ia], board[ib]].into_iter().flatten() {
            participations[q] += 1;
        }
        board.swap(ia, ib);
    }
    let mut final_positions = vec![Site::new(usize::MAX, usize::MAX); plan.assignment.len()];
    for (i, occ) in board.iter().enumerate() {
        if let Some(q) = occ {
            final_positions[*q] = grid.site(i);
        }
    }
    Ok(ScheduleReplay {
        final_positions,
        participations,
    })
}

/// Chosen code, cell and movement plan for one pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub distance: usize,
    pub center: Site,
    pub layout: CodeLayout,
    pub plan: RearrangementPlan,
}

/// Picks the code distance, then evaluates every candidate center and keeps
/// the one with the fewest SWAPs (earlier candidate on ties).
pub fn select_placement(pattern: &EntanglementPattern, options: &PlacementOptions) -> Result<Placement> {
    let grid = pattern.grid();
    let d = choose_code_distance(pattern.count(), Some(grid), options.min_distance)?;
    debug_assert!(cell_width(d) <= grid.size());
    let mut centers: Vec<Site> = Vec::new();
    for c in candidate_centers(pattern)? {
        let c = clamp_center(c, d, grid);
        if !centers.contains(&c) {
            centers.push(c);
        }
    }

    let mut best: Option<Placement> = None;
    let mut last_err = None;
    for center in centers {
        let layout = CodeLayout::new(d, cell_origin(center, d), grid)?;
        let assignment = assign_qubits(pattern, &layout, options.route_weight)?;
        match plan_schedule(&assignment, pattern) {
            Ok(plan) => {
                if best.as_ref().is_none_or(|b| plan.total_swaps() < b.plan.total_swaps()) {
                    best = Some(Placement {
                        distance: d,
                        center,
                        layout,
                        plan,
                    });
                }
            }
            Err(e @ Error::RoutingBlocked { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::EmptyPattern))
}
