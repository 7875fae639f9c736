//! Randomized incremental construction of the trapezoidal map (vertical
//! visibility diagram) of line segments, with intersections allowed.
//!
//! Segments are inserted one at a time. Each insертion walks the trapezoids
//! the segment crosses, destroys them, and re-decomposes their union into new
//! trapezoids; vertical walls rise and fall from endpoints and from crossing
//! points, stopping at the first segment hit. The map is kept canonical:
//! horizontally adjacent trapezoids with the same top and bottom are always
//! merged, so a trapezoid is exactly a maximal run between two wall events
//! and the final map is independent of insertion order.
//!
//! Degenerate x-coordinates are resolved by the shear order: event points
//! compare lexicographically by (x, y), which is equivalent to an
//! infinitesimal tilt of the vertical direction. Truly vertical segments have
//! no orientation under the shear and are rejected.
//!
//! Two maintenance modes:
//!
//! * conflict-graph: every live trapezoid σ keeps its conflict list ℓ(σ) of
//!   uninserted segments meeting its interior, and the reverse index locates
//!   the next segment for free. The per-step work is the number of conflict
//!   edges created (destroyed edges are charged to their creation).
//! * list-free: only the trapezoids plus a history DAG for point location
//!   are kept. Per-step work is trapezoids created plus point-location
//!   traversal steps (containment tests along the DAG descent).
//!
//! Both modes produce the identical trapezoid set.

pub mod generate;
pub mod oracle;

use crate::geom::{
    orient_rat, seg_intersect, GeomError, Point, RatPoint, SegIntersection, Segment,
};
use crate::rng::InsertionOrder;
use crate::trace::WorkTrace;
use std::cmp::Ordering;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrapError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("segment {0} is vertical; the shear order cannot orient it")]
    VerticalSegment(u32),
    #[error("segments {0} and {1} are identical")]
    DuplicateSegment(u32, u32),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("query point is degenerate: {0}")]
    DegenerateQuery(String),
}

/// Upper or lower boundary of a trapezoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Boundary {
    BoxBottom,
    BoxTop,
    Seg(u32),
}

/// A vertical-wall event: the x-position where trapezoids open or close.
/// `Cross(i, j)` stores `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventId {
    BoxLeft,
    SegLeft(u32),
    SegRight(u32),
    Cross(u32, u32),
    BoxRight,
}

impl EventId {
    pub fn cross(i: u32, j: u32) -> Self {
        EventId::Cross(i.min(j), i.max(j))
    }

    /// Segments defining this event (none for box walls).
    pub fn segments(&self) -> impl Iterator<Item = u32> {
        let (a, b) = match *self {
            EventId::SegLeft(i) | EventId::SegRight(i) => (Some(i), None),
            EventId::Cross(i, j) => (Some(i), Some(j)),
            _ => (None, None),
        };
        a.into_iter().chain(b)
    }
}

/// Canonical identity of a trapezoid in the final map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrapKey {
    pub bottom: Boundary,
    pub top: Boundary,
    pub left: EventId,
    pub right: EventId,
}

impl TrapKey {
    /// Defining set d(σ): at most 6 segment ids.
    pub fn defining(&self) -> Vec<u32> {
        let mut d = Vec::with_capacity(6);
        for b in [self.bottom, self.top] {
            if let Boundary::Seg(i) = b {
                d.push(i);
            }
        }
        d.extend(self.left.segments());
        d.extend(self.right.segments());
        d.sort_unstable();
        d.dedup();
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    ConflictGraph,
    ListFree,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub mode: Mode,
    /// Record (step, max ℓ, mean ℓ) over live trapezoids every this many
    /// steps; 0 disables. Conflict-graph mode only.
    pub conflict_audit_every: usize,
    /// Track how often the trapezoid containing this query point changes.
    pub track_query: Option<Point>,
    /// Recompute every conflict list by brute force after every step
    /// (exactness audit for small inputs).
    pub verify_conflicts_each_step: bool,
}

impl BuildOptions {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            conflict_audit_every: 0,
            track_query: None,
            verify_conflicts_each_step: false,
        }
    }
}

/// Everything a build produces: the final map, the per-step work trace under
/// the chosen mode's accounting, and the structural statistics.
#[derive(Debug, Clone)]
pub struct BuildResult {
    /// Final trapezoid set, sorted by key.
    pub traps: Vec<TrapKey>,
    /// Per-step work: conflict edges created (graph mode) or trapezoids
    /// created plus point-location steps (list-free mode).
    pub work: WorkTrace,
    /// Total crossings discovered (equals the arrangement's m at the end).
    pub m: usize,
    /// Crossings among the first k inserted segments, k = 1..n.
    pub m_k: Vec<usize>,
    /// |T_i| per segment on the final map (trapezoids with s_i in d(σ)).
    pub zone_sizes: Vec<usize>,
    pub created_per_step: Vec<usize>,
    pub destroyed_per_step: Vec<usize>,
    pub edges_per_step: Vec<usize>,
    pub pl_steps_per_step: Vec<usize>,
    pub created_total: usize,
    pub final_count: usize,
    /// Number of steps at which the query's trapezoid was destroyed.
    pub query_changes: Option<usize>,
    /// (step, max ℓ, mean ℓ) snapshots when requested.
    pub conflict_audit: Vec<(usize, usize, f64)>,
}

/// Builds the trapezoidal map of `segs` inserted in `order`.
pub fn build_trapmap(
    segs: &[Segment],
    order: &InsertionOrder,
    opts: &BuildOptions,
) -> Result<BuildResult, TrapError> {
    Builder::new(segs, opts)?.run(order)
}

/// Number of times the trapezoid containing `query` changes over a full
/// insertion sequence (Lemma-2 style point-location cost).
pub fn point_location_changes(
    segs: &[Segment],
    order: &InsertionOrder,
    query: Point,
) -> Result<usize, TrapError> {
    let mut opts = BuildOptions::new(Mode::ListFree);
    opts.track_query = Some(query);
    Ok(build_trapmap(segs, order, &opts)?
        .query_changes
        .expect("query tracking was enabled"))
}

/// Zone sizes on the full map, from the order-independent oracle
/// decomposition: T_i is the set of trapezoids with s_i among their defining
/// segments. Returns (per-segment sizes, Σ|T_i|, Σ|T_i|²).
pub fn zone_audit(segs: &[Segment]) -> Result<(Vec<usize>, usize, usize), TrapError> {
    let traps = oracle::brute_decomposition(segs)?;
    let mut sizes = vec![0usize; segs.len()];
    for t in &traps {
        for id in t.defining() {
            sizes[id as usize] += 1;
        }
    }
    let sum: usize = sizes.iter().sum();
    let sum_sq: usize = sizes.iter().map(|&z| z * z).sum();
    Ok((sizes, sum, sum_sq))
}

// ---------------------------------------------------------------------------
// Exact shear-order helpers shared with the oracle.
// ---------------------------------------------------------------------------

/// Numerator of the height of `s` at rational x, over denominator dx·x.den
/// (both positive). `s` must span x and must not be vertical.
fn seg_y_num(s: &Segment, x: &RatPoint) -> i128 {
    let dx = (s.b.x - s.a.x) as i128;
    let dy = (s.b.y - s.a.y) as i128;
    s.a.y as i128 * dx * x.den + (x.xn - s.a.x as i128 * x.den) * dy
}

/// Orders the heights of `s` and `t` at x, breaking exact ties (a common
/// point at x) by slope so the result is the order just right of x.
pub(crate) fn cmp_segs_right_of(s: &Segment, t: &Segment, x: &RatPoint) -> Ordering {
    let dxs = (s.b.x - s.a.x) as i128;
    let dxt = (t.b.x - t.a.x) as i128;
    let lhs = seg_y_num(s, x) * dxt;
    let rhs = seg_y_num(t, x) * dxs;
    lhs.cmp(&rhs).then_with(|| {
        let dys = (s.b.y - s.a.y) as i128;
        let dyt = (t.b.y - t.a.y) as i128;
        (dys * dxt).cmp(&(dyt * dxs))
    })
}

/// As [`cmp_segs_right_of`] but tie-breaking for the order just left of x.
pub(crate) fn cmp_segs_left_of(s: &Segment, t: &Segment, x: &RatPoint) -> Ordering {
    let dxs = (s.b.x - s.a.x) as i128;
    let dxt = (t.b.x - t.a.x) as i128;
    let lhs = seg_y_num(s, x) * dxt;
    let rhs = seg_y_num(t, x) * dxs;
    lhs.cmp(&rhs).then_with(|| {
        let dys = (s.b.y - s.a.y) as i128;
        let dyt = (t.b.y - t.a.y) as i128;
        (dyt * dxs).cmp(&(dys * dxt))
    })
}

// ---------------------------------------------------------------------------
// Builder internals.
// ---------------------------------------------------------------------------

const NONE_STEP: u32 = u32::MAX;

#[derive(Debug)]
struct TrapNode {
    key: TrapKey,
    live: bool,
    /// Step index (0-based) at which this trapezoid died.
    died_at: u32,
    conflicts: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
enum Exit {
    /// Segment ends inside this trapezoid.
    Ends,
    /// Through the right wall.
    Wall,
    /// Through the top/bottom boundary segment at a crossing event.
    Cross { other: u32, upward: bool, at: RatPoint },
}

struct Builder<'a> {
    segs: &'a [Segment],
    mode: Mode,
    opts: BuildOptions,
    box_left: RatPoint,
    box_right: RatPoint,
    nodes: Vec<TrapNode>,
    starts_at: HashMap<EventId, Vec<u32>>,
    /// Live trapezoids whose bottom / top is the given segment.
    zone_above: Vec<Vec<u32>>,
    zone_below: Vec<Vec<u32>>,
    /// Reverse conflict index (graph mode): trapezoids conflicting with each
    /// uninserted segment; lazily filtered for liveness.
    seg_conflicts: Vec<Vec<u32>>,
    inserted: Vec<bool>,
    cross_pos: HashMap<(u32, u32), RatPoint>,
    /// New trapezoids created at each step, for the history DAG.
    step_children: Vec<Vec<u32>>,
    /// Dedup stamps for conflict candidate gathering.
    stamp: Vec<u32>,
    stamp_epoch: u32,
    query: Option<QueryTrack>,
    // Accounting.
    m: usize,
    m_k: Vec<usize>,
    created_per_step: Vec<usize>,
    destroyed_per_step: Vec<usize>,
    edges_per_step: Vec<usize>,
    pl_steps_per_step: Vec<usize>,
    created_total: usize,
    conflict_audit: Vec<(usize, usize, f64)>,
}

struct QueryTrack {
    pos: RatPoint,
    current: u32,
    changes: usize,
}

impl<'a> Builder<'a> {
    fn new(segs: &'a [Segment], opts: &BuildOptions) -> Result<Self, TrapError> {
        let n = segs.len();
        let mut seen: HashMap<(Point, Point), u32> = HashMap::new();
        for s in segs {
            if s.is_vertical() {
                return Err(TrapError::VerticalSegment(s.id));
            }
            if let Some(&other) = seen.get(&(s.a, s.b)) {
                return Err(TrapError::DuplicateSegment(other, s.id));
            }
            seen.insert((s.a, s.b), s.id);
        }
        let root = TrapNode {
            key: TrapKey {
                bottom: Boundary::BoxBottom,
                top: Boundary::BoxTop,
                left: EventId::BoxLeft,
                right: EventId::BoxRight,
            },
            live: true,
            died_at: NONE_STEP,
            conflicts: match opts.mode {
                Mode::ConflictGraph => (0..n as u32).collect(),
                Mode::ListFree => Vec::new(),
            },
        };
        let mut starts_at: HashMap<EventId, Vec<u32>> = HashMap::new();
        starts_at.insert(EventId::BoxLeft, vec![0]);
        let seg_conflicts = match opts.mode {
            Mode::ConflictGraph => vec![vec![0u32]; n],
            Mode::ListFree => vec![Vec::new(); n],
        };
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for s in segs {
            lo = lo.min(s.a.x);
            hi = hi.max(s.b.x);
        }
        if segs.is_empty() {
            lo = 0;
            hi = 0;
        }
        Ok(Self {
            segs,
            mode: opts.mode,
            opts: opts.clone(),
            box_left: RatPoint::from_point(Point::new(lo - 1, 0)),
            box_right: RatPoint::from_point(Point::new(hi + 1, 0)),
            nodes: vec![root],
            starts_at,
            zone_above: vec![Vec::new(); n],
            zone_below: vec![Vec::new(); n],
            seg_conflicts,
            inserted: vec![false; n],
            cross_pos: HashMap::new(),
            step_children: Vec::new(),
            stamp: vec![0; n],
            stamp_epoch: 0,
            query: None,
            m: 0,
            m_k: Vec::new(),
            created_per_step: Vec::new(),
            destroyed_per_step: Vec::new(),
            edges_per_step: Vec::new(),
            pl_steps_per_step: Vec::new(),
            created_total: 1,
            conflict_audit: Vec::new(),
        })
    }

    fn event_pos(&self, ev: EventId) -> RatPoint {
        match ev {
            EventId::BoxLeft => self.box_left,
            EventId::BoxRight => self.box_right,
            EventId::SegLeft(i) => RatPoint::from_point(self.segs[i as usize].a),
            EventId::SegRight(i) => RatPoint::from_point(self.segs[i as usize].b),
            EventId::Cross(i, j) => self.cross_pos[&(i, j)],
        }
    }

    /// Is `q` above the boundary (strictly)? `None` when q sits exactly on a
    /// boundary segment.
    fn above_boundary(&self, q: &RatPoint, b: Boundary) -> Option<bool> {
        match b {
            Boundary::BoxBottom => Some(true),
            Boundary::BoxTop => Some(false),
            Boundary::Seg(i) => {
                let s = &self.segs[i as usize];
                match orient_rat(s.a, s.b, q) {
                    0 => None,
                    v => Some(v > 0),
                }
            }
        }
    }

    /// Strict interior test; `None` when q is degenerate on a boundary.
    fn contains(&self, trap: u32, q: &RatPoint) -> Option<bool> {
        let key = &self.nodes[trap as usize].key;
        if self.event_pos(key.left).cmp_xy(q) != Ordering::Less
            || q.cmp_xy(&self.event_pos(key.right)) != Ordering::Less
        {
            return Some(false);
        }
        let above_bot = self.above_boundary(q, key.bottom)?;
        if !above_bot {
            return Some(false);
        }
        let above_top = self.above_boundary(q, key.top)?;
        Some(!above_top)
    }

    /// Height order of segment `s` against a boundary just right of `x`:
    /// `Less` means s is below the boundary there.
    fn seg_vs_boundary_right_of(&self, s: &Segment, b: Boundary, x: &RatPoint) -> Ordering {
        match b {
            Boundary::BoxBottom => Ordering::Greater,
            Boundary::BoxTop => Ordering::Less,
            Boundary::Seg(i) => cmp_segs_right_of(s, &self.segs[i as usize], x),
        }
    }

    /// Does segment `u` meet the open interior of `trap`? Exact.
    fn seg_conflicts_trap(&self, u: &Segment, trap: u32) -> bool {
        let key = &self.nodes[trap as usize].key;
        let tl = self.event_pos(key.left);
        let tr = self.event_pos(key.right);
        let ul = RatPoint::from_point(u.a);
        let ur = RatPoint::from_point(u.b);
        let l = if ul.cmp_xy(&tl) == Ordering::Greater { ul } else { tl };
        let r = if ur.cmp_xy(&tr) == Ordering::Less { ur } else { tr };
        if l.cmp_xy(&r) != Ordering::Less {
            return false;
        }
        // Strictly inside just right of the window start?
        if self.seg_vs_boundary_right_of(u, key.bottom, &l) == Ordering::Greater
            && self.seg_vs_boundary_right_of(u, key.top, &l) == Ordering::Less
        {
            return true;
        }
        // Otherwise u must cross the top or bottom inside the open window.
        for b in [key.top, key.bottom] {
            if let Boundary::Seg(i) = b {
                if let Some(SegIntersection::Proper(p)) =
                    seg_intersect(u, &self.segs[i as usize])
                {
                    if l.cmp_xy(&p) == Ordering::Less && p.cmp_xy(&r) == Ordering::Less {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Locates the live trapezoid containing q via the history DAG, counting
    /// containment tests into `steps`.
    fn dag_locate(&self, q: &RatPoint, steps: &mut usize) -> Result<u32, TrapError> {
        let mut cur = 0u32;
        *steps += 1;
        if self.contains(cur, q) != Some(true) {
            return Err(TrapError::DegenerateQuery(format!(
                "point {q} not strictly inside the bounding box"
            )));
        }
        while !self.nodes[cur as usize].live {
            let children = &self.step_children[self.nodes[cur as usize].died_at as usize];
            let mut found = None;
            for &c in children {
                *steps += 1;
                match self.contains(c, q) {
                    Some(true) => {
                        found = Some(c);
                        break;
                    }
                    Some(false) => {}
                    None => {
                        return Err(TrapError::DegenerateQuery(format!(
                            "point {q} lies on a boundary"
                        )))
                    }
                }
            }
            cur = found.ok_or_else(|| {
                TrapError::Degenerate("history descent lost the query point".into())
            })?;
        }
        Ok(cur)
    }

    /// Successor trapezoid when `s` exits through the right wall of `trap`.
    fn successor_through_wall(&self, s: &Segment, trap: u32) -> Result<u32, TrapError> {
        let wall = self.nodes[trap as usize].key.right;
        let wpos = self.event_pos(wall);
        let cands = self
            .starts_at
            .get(&wall)
            .ok_or_else(|| TrapError::Degenerate("no trapezoid beyond wall".into()))?;
        for &c in cands {
            if !self.nodes[c as usize].live {
                continue;
            }
            let key = &self.nodes[c as usize].key;
            if self.seg_vs_boundary_right_of(s, key.bottom, &wpos) == Ordering::Greater
                && self.seg_vs_boundary_right_of(s, key.top, &wpos) == Ordering::Less
            {
                return Ok(c);
            }
        }
        Err(TrapError::Degenerate(
            "walk found no successor through wall".into(),
        ))
    }

    /// Successor when `s` crosses boundary segment `other` at `p` (moving up
    /// if `upward`): the live trapezoid on the other side of `other` at p.
    fn successor_through_cross(
        &mut self,
        other: u32,
        upward: bool,
        p: &RatPoint,
    ) -> Result<u32, TrapError> {
        // Compact lazily: drop dead entries before scanning.
        {
            let nodes = &self.nodes;
            let zone = if upward {
                &mut self.zone_above[other as usize]
            } else {
                &mut self.zone_below[other as usize]
            };
            zone.retain(|&t| nodes[t as usize].live);
        }
        let zone = if upward {
            &self.zone_above[other as usize]
        } else {
            &self.zone_below[other as usize]
        };
        for &c in zone {
            let key = &self.nodes[c as usize].key;
            if self.event_pos(key.left).cmp_xy(p) == Ordering::Less
                && p.cmp_xy(&self.event_pos(key.right)) == Ordering::Less
            {
                return Ok(c);
            }
        }
        Err(TrapError::Degenerate(
            "walk found no trapezoid across a crossing".into(),
        ))
    }

    fn run(mut self, order: &InsertionOrder) -> Result<BuildResult, TrapError> {
        assert_eq!(order.n(), self.segs.len(), "order must permute the segments");
        if let Some(q) = self.opts.track_query {
            let pos = RatPoint::from_point(q);
            let mut steps = 0usize;
            let current = self.dag_locate(&pos, &mut steps)?;
            // Reject queries sitting on any input segment, inserted or not.
            for s in self.segs {
                let on_line = orient_rat(s.a, s.b, &pos) == 0;
                if on_line
                    && RatPoint::from_point(s.a).cmp_xy(&pos) != Ordering::Greater
                    && pos.cmp_xy(&RatPoint::from_point(s.b)) != Ordering::Greater
                {
                    return Err(TrapError::DegenerateQuery(
                        "query lies on an input segment".into(),
                    ));
                }
            }
            self.query = Some(QueryTrack {
                pos,
                current,
                changes: 0,
            });
        }

        for (step, &seg_idx) in order.items().iter().enumerate() {
            self.insert(step, seg_idx as u32)?;
            if self.opts.verify_conflicts_each_step {
                self.verify_conflicts(step)?;
            }
            if self.opts.conflict_audit_every > 0
                && (step + 1) % self.opts.conflict_audit_every == 0
            {
                self.record_conflict_audit(step + 1);
            }
        }

        self.finish()
    }

    fn insert(&mut self, step: usize, s_id: u32) -> Result<(), TrapError> {
        let segs = self.segs;
        let s = &segs[s_id as usize];
        let lpos = RatPoint::from_point(s.a);
        let mut pl_steps = 0usize;

        // Locate the trapezoid containing the left endpoint.
        let start = match self.mode {
            Mode::ConflictGraph => {
                let nodes = &self.nodes;
                self.seg_conflicts[s_id as usize].retain(|&t| nodes[t as usize].live);
                let mut found = None;
                for &t in &self.seg_conflicts[s_id as usize] {
                    if self.contains(t, &lpos) == Some(true) {
                        found = Some(t);
                        break;
                    }
                }
                found.ok_or_else(|| {
                    TrapError::Degenerate(format!(
                        "left endpoint of segment {s_id} not inside any conflicting trapezoid"
                    ))
                })?
            }
            Mode::ListFree => self.dag_locate(&lpos, &mut pl_steps)?,
        };

        // Walk the crossed trapezoids left to right along s.
        let mut visited: Vec<(u32, Exit)> = Vec::new();
        let mut crossings = 0usize;
        let mut cur = start;
        loop {
            let exit = self.exit_of(s, cur)?;
            visited.push((cur, exit));
            match exit {
                Exit::Ends => break,
                Exit::Wall => {
                    cur = self.successor_through_wall(s, cur)?;
                }
                Exit::Cross { other, upward, at } => {
                    let key = (s_id.min(other), s_id.max(other));
                    self.cross_pos.insert(key, at);
                    crossings += 1;
                    cur = self.successor_through_cross(other, upward, &at)?;
                }
            }
        }
        self.m += crossings;
        self.m_k.push(self.m);

        // Assemble the replacement pieces.
        let pieces = self.make_pieces(s_id, &visited);

        // Destroy the old, create the new.
        let mut destroyed_conflict_lists: Vec<(u32, Vec<u32>)> = Vec::new();
        for &(t, _) in &visited {
            let node = &mut self.nodes[t as usize];
            node.live = false;
            node.died_at = step as u32;
            let old = std::mem::take(&mut node.conflicts);
            destroyed_conflict_lists.push((t, old));
        }
        for &(t, _) in &visited {
            let key = self.nodes[t as usize].key;
            if let Some(v) = self.starts_at.get_mut(&key.left) {
                v.retain(|&x| x != t);
            }
        }

        let mut new_ids = Vec::with_capacity(pieces.len());
        for piece in &pieces {
            let id = self.nodes.len() as u32;
            self.nodes.push(TrapNode {
                key: piece.key,
                live: true,
                died_at: NONE_STEP,
                conflicts: Vec::new(),
            });
            self.starts_at.entry(piece.key.left).or_default().push(id);
            if let Boundary::Seg(i) = piece.key.bottom {
                self.zone_above[i as usize].push(id);
            }
            if let Boundary::Seg(i) = piece.key.top {
                self.zone_below[i as usize].push(id);
            }
            new_ids.push(id);
        }
        self.created_total += new_ids.len();
        self.step_children.push(new_ids.clone());
        self.created_per_step.push(new_ids.len());
        self.destroyed_per_step.push(visited.len());
        self.inserted[s_id as usize] = true;

        // Conflict redistribution (graph mode).
        let mut edges = 0usize;
        if self.mode == Mode::ConflictGraph {
            let by_trap: HashMap<u32, &Vec<u32>> = destroyed_conflict_lists
                .iter()
                .map(|(t, l)| (*t, l))
                .collect();
            for (piece, &pid) in pieces.iter().zip(&new_ids) {
                self.stamp_epoch += 1;
                let epoch = self.stamp_epoch;
                let mut list = Vec::new();
                for &src in &piece.sources {
                    for &cand in by_trap[&src] {
                        if cand == s_id
                            || self.inserted[cand as usize]
                            || self.stamp[cand as usize] == epoch
                        {
                            continue;
                        }
                        self.stamp[cand as usize] = epoch;
                        if self.seg_conflicts_trap(&self.segs[cand as usize], pid) {
                            list.push(cand);
                        }
                    }
                }
                edges += list.len();
                for &c in &list {
                    self.seg_conflicts[c as usize].push(pid);
                }
                self.nodes[pid as usize].conflicts = list;
            }
        }
        self.edges_per_step.push(edges);
        self.pl_steps_per_step.push(pl_steps);

        // Query tracking: if its trapezoid died, find the replacement.
        let needs_move = self
            .query
            .as_ref()
            .is_some_and(|t| !self.nodes[t.current as usize].live);
        if needs_move {
            let pos = self.query.as_ref().unwrap().pos;
            let mut found = None;
            for &c in &new_ids {
                match self.contains(c, &pos) {
                    Some(true) => {
                        found = Some(c);
                        break;
                    }
                    Some(false) => {}
                    None => {
                        return Err(TrapError::DegenerateQuery(
                            "query lies on a wall of the updated map".into(),
                        ))
                    }
                }
            }
            let c = found.ok_or_else(|| {
                TrapError::Degenerate("query escaped the destroyed region".into())
            })?;
            let track = self.query.as_mut().unwrap();
            track.changes += 1;
            track.current = c;
        }
        Ok(())
    }

    /// Where does `s` leave `trap`, given that it runs through its interior?
    fn exit_of(&self, s: &Segment, trap: u32) -> Result<Exit, TrapError> {
        let key = &self.nodes[trap as usize].key;
        let rpos = self.event_pos(key.right);
        let send = RatPoint::from_point(s.b);
        let lpos = self.event_pos(key.left);

        let mut best: Option<(RatPoint, u32, bool)> = None;
        for (b, upward) in [(key.top, true), (key.bottom, false)] {
            if let Boundary::Seg(i) = b {
                if let Some(SegIntersection::Proper(p)) = seg_intersect(s, &self.segs[i as usize])
                {
                    // Crossing counts only strictly inside the trapezoid's
                    // x-window (a crossing at or before the left wall belongs
                    // to an earlier trapezoid).
                    if lpos.cmp_xy(&p) == Ordering::Less && p.cmp_xy(&rpos) == Ordering::Less {
                        let better = match &best {
                            None => true,
                            Some((q, _, _)) => p.cmp_xy(q) == Ordering::Less,
                        };
                        if better {
                            best = Some((p, i, upward));
                        }
                    }
                }
            }
        }
        if let Some((p, other, upward)) = best {
            if send.cmp_xy(&p) == Ordering::Less {
                return Ok(Exit::Ends);
            }
            if send.cmp_xy(&p) == Ordering::Equal {
                return Err(TrapError::Degenerate(format!(
                    "endpoint of segment {} lies on segment {}",
                    s.id, other
                )));
            }
            return Ok(Exit::Cross {
                other,
                upward,
                at: p,
            });
        }
        match send.cmp_xy(&rpos) {
            Ordering::Less => Ok(Exit::Ends),
            Ordering::Equal => Err(TrapError::Degenerate(format!(
                "endpoint of segment {} coincides with a wall event",
                s.id
            ))),
            Ordering::Greater => Ok(Exit::Wall),
        }
    }

    /// Cuts the visited trapezoids along `s` into the canonical replacement
    /// pieces: merged runs above and below s, plus untouched stubs.
    fn make_pieces(&self, s_id: u32, visited: &[(u32, Exit)]) -> Vec<PieceBuild> {
        let s = &self.segs[s_id as usize];
        let lev = EventId::SegLeft(s_id);
        let rev = EventId::SegRight(s_id);
        let mut pieces: Vec<PieceBuild> = Vec::new();

        let first = visited[0].0;
        let last = visited[visited.len() - 1].0;
        let first_key = self.nodes[first as usize].key;
        let last_key = self.nodes[last as usize].key;

        // Left stub: the part of the first trapezoid left of s's left wall.
        pieces.push(PieceBuild::new(
            first_key.bottom,
            first_key.top,
            first_key.left,
            lev,
            first,
        ));

        let mut above: Option<PieceBuild> = None;
        let mut below: Option<PieceBuild> = None;
        let mut enter_ev = lev;
        let mut entered_via_cross = false;
        for &(t, exit) in visited {
            let key = self.nodes[t as usize].key;
            let exit_ev = match exit {
                Exit::Ends => rev,
                Exit::Wall => key.right,
                Exit::Cross { other, .. } => EventId::cross(s_id, other),
            };
            // Entering through a crossing leaves the left part of this
            // trapezoid untouched by s.
            if entered_via_cross {
                pieces.push(PieceBuild::new(key.bottom, key.top, key.left, enter_ev, t));
            }
            // Above-side run: top = key.top, bottom = s.
            match &mut above {
                Some(run) if run.key.top == key.top => {
                    run.key.right = exit_ev;
                    run.sources.push(t);
                }
                _ => {
                    if let Some(done) = above.take() {
                        pieces.push(done);
                    }
                    above = Some(PieceBuild::new(
                        Boundary::Seg(s_id),
                        key.top,
                        enter_ev,
                        exit_ev,
                        t,
                    ));
                }
            }
            // Below-side run: bottom = key.bottom, top = s.
            match &mut below {
                Some(run) if run.key.bottom == key.bottom => {
                    run.key.right = exit_ev;
                    run.sources.push(t);
                }
                _ => {
                    if let Some(done) = below.take() {
                        pieces.push(done);
                    }
                    below = Some(PieceBuild::new(
                        key.bottom,
                        Boundary::Seg(s_id),
                        enter_ev,
                        exit_ev,
                        t,
                    ));
                }
            }
            // Stub beyond a crossing exit: the rest of t, untouched by s.
            if let Exit::Cross { .. } = exit {
                pieces.push(PieceBuild::new(key.bottom, key.top, exit_ev, key.right, t));
            }
            enter_ev = exit_ev;
            entered_via_cross = matches!(exit, Exit::Cross { .. });
        }
        if let Some(run) = above.take() {
            pieces.push(run);
        }
        if let Some(run) = below.take() {
            pieces.push(run);
        }

        // Right stub of the last trapezoid.
        pieces.push(PieceBuild::new(
            last_key.bottom,
            last_key.top,
            rev,
            last_key.right,
            last,
        ));

        pieces
    }

    /// Brute-force conflict-list audit over all live trapezoids.
    fn verify_conflicts(&self, step: usize) -> Result<(), TrapError> {
        if self.mode != Mode::ConflictGraph {
            return Ok(());
        }
        for (id, node) in self.nodes.iter().enumerate() {
            if !node.live {
                continue;
            }
            let mut want: Vec<u32> = (0..self.segs.len() as u32)
                .filter(|&u| {
                    !self.inserted[u as usize]
                        && self.seg_conflicts_trap(&self.segs[u as usize], id as u32)
                })
                .collect();
            let mut got = node.conflicts.clone();
            want.sort_unstable();
            got.sort_unstable();
            if want != got {
                return Err(TrapError::Degenerate(format!(
                    "conflict list mismatch after step {step} on trapezoid {id}: \
                     stored {got:?}, brute force {want:?}"
                )));
            }
        }
        Ok(())
    }

    fn record_conflict_audit(&mut self, step: usize) {
        let mut max = 0usize;
        let mut sum = 0usize;
        let mut count = 0usize;
        for node in &self.nodes {
            if node.live {
                max = max.max(node.conflicts.len());
                sum += node.conflicts.len();
                count += 1;
            }
        }
        self.conflict_audit
            .push((step, max, sum as f64 / count.max(1) as f64));
    }

    fn finish(self) -> Result<BuildResult, TrapError> {
        let n = self.segs.len();
        let mut traps: Vec<TrapKey> = self
            .nodes
            .iter()
            .filter(|t| t.live)
            .map(|t| t.key)
            .collect();
        traps.sort_unstable();
        let mut zone_sizes = vec![0usize; n];
        for t in &traps {
            for id in t.defining() {
                zone_sizes[id as usize] += 1;
            }
        }
        let work = match self.mode {
            Mode::ConflictGraph => {
                WorkTrace::new(self.edges_per_step.iter().map(|&e| e as f64).collect())
            }
            Mode::ListFree => WorkTrace::new(
                self.created_per_step
                    .iter()
                    .zip(&self.pl_steps_per_step)
                    .map(|(&c, &p)| (c + p) as f64)
                    .collect(),
            ),
        };
        let final_count = traps.len();
        Ok(BuildResult {
            traps,
            work,
            m: self.m,
            m_k: self.m_k,
            zone_sizes,
            created_per_step: self.created_per_step,
            destroyed_per_step: self.destroyed_per_step,
            edges_per_step: self.edges_per_step,
            pl_steps_per_step: self.pl_steps_per_step,
            created_total: self.created_total,
            final_count,
            query_changes: self.query.map(|q| q.changes),
            conflict_audit: self.conflict_audit,
        })
    }
}

#[derive(Debug, Clone)]
struct PieceBuild {
    key: TrapKey,
    sources: Vec<u32>,
}

impl PieceBuild {
    fn new(bottom: Boundary, top: Boundary, left: EventId, right: EventId, src: u32) -> Self {
        Self {
            key: TrapKey {
                bottom,
                top,
                left,
                right,
            },
            sources: vec![src],
        }
    }
}

#[cfg(test)]
mod tests;
