//! Renormalisation-group decoder for point defects with Z2 charge.
//!
//! Level `p` clusters the remaining defects into `2^p`-connected components
//! (ℓ∞ metric) and neutralises each neutral one: even clusters, and clusters
//! with a member within `2^p` of an absorbing boundary. Levels run from 0 to
//! `m = ceil(log2(extent))`; anything left after that is a failure.

use std::collections::BTreeSet;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::chunks::{bounding_box, connected_components};
use crate::error::{Error, Result};
use crate::lattice::{Axis, BlockFace, BoundaryType, Coord3, EdgeId, FaceId, LatticeGeometry};

/// Geometry of the space in which defects live and strings are drawn.
pub trait DefectSpace {
    type Elem: Copy + Ord + Debug + Serialize;

    /// Largest extent, which fixes the number of levels.
    fn extent(&self) -> i32;

    /// Elements of a string joining two defects.
    fn path(&self, a: Coord3, b: Coord3) -> Vec<Self::Elem>;

    /// Distance to the nearest absorbing boundary and the string reaching it.
    fn boundary(&self, a: Coord3) -> Option<(i64, Vec<Self::Elem>)>;

    fn boundary_distance(&self, a: Coord3) -> Option<i64> {
        self.boundary(a).map(|(d, _)| d)
    }
}

fn xor_into<E: Ord + Copy>(set: &mut BTreeSet<E>, elems: impl IntoIterator<Item = E>) {
    for e in elems {
        if !set.remove(&e) {
            set.insert(e);
        }
    }
}

/// Vertices of a cubic lattice whose stars detect errors on edges. The two
/// faces normal to `rough` absorb strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StarSpace {
    ext: [i32; 3],
    rough: Axis,
}

impl StarSpace {
    pub fn new(ext: [i32; 3], rough: Axis) -> Self {
        StarSpace { ext, rough }
    }

    pub fn for_geometry(geom: &LatticeGeometry) -> Self {
        StarSpace {
            ext: [geom.extent(Axis::X), geom.extent(Axis::Y), geom.extent(Axis::Z)],
            rough: geom.rough_axis(),
        }
    }

    pub fn rough_axis(&self) -> Axis {
        self.rough
    }

    pub fn ext(&self, a: Axis) -> i32 {
        self.ext[a.index()]
    }

    pub fn is_star(&self, v: Coord3) -> bool {
        Axis::ALL.iter().all(|&a| v[a] >= 0 && v[a] <= self.ext(a))
            && v[self.rough] > 0
            && v[self.rough] < self.ext(self.rough)
    }

    /// Whether the edge is a qubit of this space (in-plane edges of a rough face are absent).
    pub fn has_edge(&self, e: EdgeId) -> bool {
        let [p, q] = e.endpoints();
        let inside = |v: Coord3| Axis::ALL.iter().all(|&a| v[a] >= 0 && v[a] <= self.ext(a));
        if !inside(p) || !inside(q) {
            return false;
        }
        e.axis == self.rough || (p[self.rough] > 0 && p[self.rough] < self.ext(self.rough))
    }

    /// Stars with odd overlap with `edges`.
    pub fn syndrome<'a>(&self, edges: impl IntoIterator<Item = &'a EdgeId>) -> Vec<Coord3> {
        let mut odd = BTreeSet::new();
        for e in edges {
            for v in e.endpoints() {
                if self.is_star(v) && !odd.remove(&v) {
                    odd.insert(v);
                }
            }
        }
        odd.into_iter().collect()
    }

    /// Parity of crossings of the cut between the first two rough-axis planes.
    pub fn logical_parity<'a>(&self, edges: impl IntoIterator<Item = &'a EdgeId>) -> bool {
        edges
            .into_iter()
            .filter(|e| e.axis == self.rough && e.anchor[self.rough] == 0)
            .count()
            % 2
            == 1
    }

    fn walk(&self, from: Coord3, axis: Axis, to: i32, out: &mut Vec<EdgeId>) -> Coord3 {
        let (lo, hi) = (from[axis].min(to), from[axis].max(to));
        for k in lo..hi {
            let mut a = from;
            a[axis] = k;
            out.push(EdgeId::new(a, axis));
        }
        let mut end = from;
        end[axis] = to;
        end
    }
}

impl DefectSpace for StarSpace {
    type Elem = EdgeId;

    fn extent(&self) -> i32 {
        *self.ext.iter().max().unwrap_or(&1)
    }

    fn path(&self, a: Coord3, b: Coord3) -> Vec<EdgeId> {
        let mut out = Vec::new();
        let mut cur = a;
        for axis in Axis::ALL {
            cur = self.walk(cur, axis, b[axis], &mut out);
        }
        out
    }

    fn boundary(&self, a: Coord3) -> Option<(i64, Vec<EdgeId>)> {
        let r = self.rough;
        let lower = a[r] as i64;
        let upper = (self.ext(r) - a[r]) as i64;
        let mut out = Vec::new();
        if lower <= upper {
            self.walk(a, r, 0, &mut out);
            Some((lower, out))
        } else {
            self.walk(a, r, self.ext(r), &mut out);
            Some((upper, out))
        }
    }
}

/// Unit cubes of a cubic lattice joined through faces; strings are sets of
/// faces. `absorbing` lists the block faces where strings may end, in
/// tie-break order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSpace {
    ext: [i32; 3],
    absorbing: Vec<BlockFace>,
}

impl CellSpace {
    pub fn new(ext: [i32; 3], absorbing: Vec<BlockFace>) -> Self {
        CellSpace { ext, absorbing }
    }

    /// Absorbing faces `order` of a geometry; each must be smooth.
    pub fn for_geometry(geom: &LatticeGeometry, order: &[BlockFace]) -> Result<Self> {
        for f in order {
            if geom.boundary().get(*f) != BoundaryType::Smooth {
                return Err(Error::InvalidBoundary(format!("{f:?} is not smooth")));
            }
        }
        Ok(CellSpace {
            ext: [geom.extent(Axis::X), geom.extent(Axis::Y), geom.extent(Axis::Z)],
            absorbing: order.to_vec(),
        })
    }

    pub fn ext(&self, a: Axis) -> i32 {
        self.ext[a.index()]
    }

    pub fn absorbing(&self) -> &[BlockFace] {
        &self.absorbing
    }

    /// Faces crossed moving from cell `c` to `to` along `axis`.
    fn walk(&self, c: Coord3, axis: Axis, to: i32, out: &mut Vec<FaceId>) -> Coord3 {
        let mut cur = c;
        while cur[axis] != to {
            let step = if to > cur[axis] { 1 } else { 0 };
            let mut anchor = cur;
            anchor[axis] += step;
            out.push(FaceId::new(anchor, axis));
            cur[axis] += if step == 1 { 1 } else { -1 };
        }
        cur
    }

    /// Distance from cell `c` through face `f` out of the block.
    pub fn face_distance(&self, c: Coord3, f: BlockFace) -> i64 {
        if f.upper {
            (self.ext(f.axis) - c[f.axis]) as i64
        } else {
            c[f.axis] as i64 + 1
        }
    }

    /// String from cell `c` out through block face `f`.
    pub fn face_path(&self, c: Coord3, f: BlockFace) -> Vec<FaceId> {
        let mut out = Vec::new();
        let a = f.axis;
        if f.upper {
            for k in c[a] + 1..=self.ext(a) {
                let mut anchor = c;
                anchor[a] = k;
                out.push(FaceId::new(anchor, a));
            }
        } else {
            for k in (0..=c[a]).rev() {
                let mut anchor = c;
                anchor[a] = k;
                out.push(FaceId::new(anchor, a));
            }
        }
        out
    }

    /// Nearest absorbing face, ties resolved by the configured order.
    pub fn nearest_face(&self, c: Coord3) -> Option<(i64, BlockFace)> {
        let mut best: Option<(i64, BlockFace)> = None;
        for &f in &self.absorbing {
            let d = self.face_distance(c, f);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, f));
            }
        }
        best
    }
}

impl DefectSpace for CellSpace {
    type Elem = FaceId;

    fn extent(&self) -> i32 {
        *self.ext.iter().max().unwrap_or(&1)
    }

    fn path(&self, a: Coord3, b: Coord3) -> Vec<FaceId> {
        let mut out = Vec::new();
        let mut cur = a;
        for axis in Axis::ALL {
            cur = self.walk(cur, axis, b[axis], &mut out);
        }
        out
    }

    fn boundary(&self, a: Coord3) -> Option<(i64, Vec<FaceId>)> {
        let (d, f) = self.nearest_face(a)?;
        Some((d, self.face_path(a, f)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Neutralisation {
    Pair(Coord3, Coord3),
    Boundary(Coord3),
}

/// Work done on one cluster at one level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRecord<E> {
    pub level: u32,
    pub defects: Vec<Coord3>,
    pub matches: Vec<Neutralisation>,
    pub elems: Vec<E>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction<E: Ord> {
    pub elems: BTreeSet<E>,
    pub clusters: Vec<ClusterRecord<E>>,
    /// Defects still present after the last level.
    pub residual: Vec<Coord3>,
    pub levels: u32,
}

impl<E: Ord> Correction<E> {
    pub fn succeeded(&self) -> bool {
        self.residual.is_empty()
    }
}

impl<E: Ord + Serialize> Correction<E> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Number of the last level for a space.
pub fn max_level<S: DefectSpace>(space: &S) -> u32 {
    let e = space.extent().max(1) as u32;
    e.next_power_of_two().trailing_zeros()
}

pub struct LevelResult<E> {
    pub clusters: Vec<ClusterRecord<E>>,
    pub residual: Vec<Coord3>,
}

/// Largest boundary distance a defect may be routed over at level `p`: half
/// the pairing scale, since a boundary string is not shared with a partner.
pub fn boundary_reach(p: u32) -> i64 {
    if p == 0 {
        0
    } else {
        1i64 << (p - 1).min(40)
    }
}

/// Neutralises every neutral `2^p`-connected cluster of `defects`.
pub fn error_correct_level<S: DefectSpace>(space: &S, defects: &[Coord3], p: u32) -> LevelResult<S::Elem> {
    let scale = 1i64 << p.min(40);
    let reach = boundary_reach(p);
    let mut clusters = Vec::new();
    let mut residual = Vec::new();
    for comp in connected_components(defects, scale as u128) {
        let bd: Vec<Option<i64>> = comp.iter().map(|d| space.boundary_distance(*d)).collect();
        let reachable = bd.iter().any(|d| d.is_some_and(|d| d <= reach));
        if comp.len() % 2 == 0 || reachable {
            clusters.push(neutralise(space, comp, &bd, reach, p));
        } else {
            residual.extend(comp);
        }
    }
    residual.sort();
    LevelResult { clusters, residual }
}

fn l1(a: Coord3, b: Coord3) -> i64 {
    ((a.x - b.x).abs() + (a.y - b.y).abs() + (a.z - b.z).abs()) as i64
}

/// Clusters up to this size are neutralised by an exact minimum-weight search.
pub const EXACT_CLUSTER_LIMIT: usize = 16;

/// Minimum total string length pairing up `n` defects, each optionally sent
/// to the boundary when `bcost[i]` is set. Returns the partner of every defect
/// (itself for a boundary), or `None` when no neutralisation exists.
fn exact_matching(pos: &[Coord3], bcost: &[Option<i64>]) -> Option<Vec<usize>> {
    let n = pos.len();
    let full = (1usize << n) - 1;
    const INF: i64 = i64::MAX / 4;
    // best[mask] = cheapest neutralisation of the defects not in mask.
    let mut best = vec![INF; 1 << n];
    let mut choice = vec![usize::MAX; 1 << n];
    best[full] = 0;
    for mask in (0..full).rev() {
        let i = (!mask).trailing_zeros() as usize;
        let m1 = mask | 1 << i;
        if let Some(b) = bcost[i] {
            if best[m1] < INF && b + best[m1] < best[mask] {
                best[mask] = b + best[m1];
                choice[mask] = i;
            }
        }
        for j in i + 1..n {
            if mask >> j & 1 == 1 {
                continue;
            }
            let m2 = m1 | 1 << j;
            if best[m2] < INF {
                let c = l1(pos[i], pos[j]) + best[m2];
                if c < best[mask] {
                    best[mask] = c;
                    choice[mask] = j;
                }
            }
        }
    }
    if best[0] >= INF {
        return None;
    }
    let mut partner = vec![usize::MAX; n];
    let mut mask = 0usize;
    while mask != full {
        let i = (!mask).trailing_zeros() as usize;
        let j = choice[mask];
        partner[i] = j;
        partner[j] = i;
        mask |= 1 << i | 1 << j;
    }
    Some(partner)
}

fn neutralise<S: DefectSpace>(space: &S, comp: Vec<Coord3>, bd: &[Option<i64>], limit: i64, p: u32) -> ClusterRecord<S::Elem> {
    let n = comp.len();
    let reach = |i: usize| bd[i].is_some_and(|d| d <= limit);
    if n <= EXACT_CLUSTER_LIMIT {
        let bcost: Vec<Option<i64>> = (0..n).map(|i| if reach(i) { bd[i] } else { None }).collect();
        if let Some(partner) = exact_matching(&comp, &bcost) {
            let mut matches = Vec::new();
            for (i, &j) in partner.iter().enumerate() {
                if j == i {
                    matches.push(Neutralisation::Boundary(comp[i]));
                } else if j > i {
                    matches.push(Neutralisation::Pair(comp[i], comp[j]));
                }
            }
            return record(space, comp, matches, p);
        }
    }
    // Candidates ranked by string length: (length, 0 for pairs and 1 for boundaries, i, j).
    let mut cands: Vec<(i64, u8, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            cands.push((l1(comp[i], comp[j]), 0, i, j));
        }
        if reach(i) {
            cands.push((bd[i].unwrap_or(i64::MAX), 1, i, i));
        }
    }
    cands.sort();
    let mut partner: Vec<Option<usize>> = vec![None; n];
    for &(_, _, i, j) in &cands {
        if partner[i].is_none() && partner[j].is_none() {
            partner[i] = Some(j);
            partner[j] = Some(i);
        }
    }
    let mut left: Vec<usize> = (0..n).filter(|&i| partner[i].is_none()).collect();
    if left.len() % 2 == 1 {
        // Give the boundary to the closest reachable defect, keeping the string
        // inside the fattened cluster box.
        let u = (0..n)
            .filter(|&i| reach(i))
            .min_by_key(|&i| (bd[i], i))
            .expect("odd leftovers only occur in reachable clusters");
        match partner[u] {
            None => {
                left.retain(|&i| i != u);
                partner[u] = Some(u);
            }
            Some(v) if v == u => {
                partner[u] = None;
                left.push(u);
            }
            Some(v) => {
                partner[v] = None;
                left.push(v);
                partner[u] = Some(u);
            }
        }
    }
    left.sort_unstable();
    while let Some(i) = left.first().copied() {
        let (k, _) = left
            .iter()
            .enumerate()
            .skip(1)
            .min_by_key(|(_, &j)| (l1(comp[i], comp[j]), j))
            .expect("even leftover");
        let j = left.remove(k);
        left.remove(0);
        partner[i] = Some(j);
        partner[j] = Some(i);
    }
    let mut matches = Vec::new();
    for i in 0..n {
        match partner[i] {
            Some(j) if j == i => matches.push(Neutralisation::Boundary(comp[i])),
            Some(j) if j > i => matches.push(Neutralisation::Pair(comp[i], comp[j])),
            Some(_) => {}
            None => unreachable!("every defect of a neutral cluster is matched"),
        }
    }
    record(space, comp, matches, p)
}

fn record<S: DefectSpace>(space: &S, comp: Vec<Coord3>, matches: Vec<Neutralisation>, p: u32) -> ClusterRecord<S::Elem> {
    let mut set = BTreeSet::new();
    for m in &matches {
        match *m {
            Neutralisation::Pair(a, b) => xor_into(&mut set, space.path(a, b)),
            Neutralisation::Boundary(a) => {
                if let Some((_, path)) = space.boundary(a) {
                    xor_into(&mut set, path);
                }
            }
        }
    }
    ClusterRecord {
        level: p,
        defects: comp,
        matches,
        elems: set.into_iter().collect(),
    }
}

/// Runs all levels on the syndrome `defects`.
pub fn decode<S: DefectSpace>(space: &S, defects: &[Coord3]) -> Correction<S::Elem> {
    let m = max_level(space);
    let mut remaining: Vec<Coord3> = defects.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut elems = BTreeSet::new();
    let mut clusters = Vec::new();
    for p in 0..=m {
        if remaining.is_empty() {
            break;
        }
        let level = error_correct_level(space, &remaining, p);
        for c in level.clusters {
            xor_into(&mut elems, c.elems.iter().copied());
            clusters.push(c);
        }
        remaining = level.residual;
    }
    Correction {
        elems,
        clusters,
        residual: remaining,
        levels: m + 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    LogicalFailure,
}

/// Decides whether `correction` undoes `true_error` up to stabilizers.
pub fn check_success(space: &StarSpace, true_error: &BTreeSet<EdgeId>, correction: &BTreeSet<EdgeId>) -> Result<Outcome> {
    let combined: Vec<EdgeId> = true_error.symmetric_difference(correction).copied().collect();
    let syndrome = space.syndrome(&combined);
    if !syndrome.is_empty() {
        return Err(Error::UnneutralisedSyndrome(syndrome.len()));
    }
    Ok(if space.logical_parity(&combined) {
        Outcome::LogicalFailure
    } else {
        Outcome::Success
    })
}

/// Decodes the star syndrome of `error` and checks the result.
pub fn decode_edges(space: &StarSpace, error: &BTreeSet<EdgeId>) -> Result<Outcome> {
    let c = decode(space, &space.syndrome(error));
    if !c.succeeded() {
        return Ok(Outcome::LogicalFailure);
    }
    check_success(space, error, &c.elems)
}

/// Bounding box of a cluster grown by `grow` on every side.
pub fn fattened_box(points: &[Coord3], grow: i32) -> Option<(Coord3, Coord3)> {
    let (lo, hi) = bounding_box(points)?;
    let g = Coord3::new(grow, grow, grow);
    Some((lo - g, hi + g))
}
