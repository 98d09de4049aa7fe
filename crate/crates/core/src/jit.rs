//! Time-sliced just-in-time decoding of the gauge-fixing defects.
//!
//! Defects are cube cells of the cubic lattice; the time axis of the geometry
//! orders the stream. A defect born at `u_t` that is still unmatched at time `t`
//! has been deferred for `t - u_t`, its string extended through the faces
//! between its spatial position at consecutive times. Two defects may be paired
//! once both have been deferred for at least their spacetime ℓ∞ separation, and
//! a defect may be sent to a smooth side boundary once its deferral reaches its
//! distance from it. Survivors at the end of the stream are flushed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chunks::{qpow, ChunkDecomposition, DecoderParams};
use crate::error::{Error, Result};
use crate::lattice::{Axis, BlockFace, Coord3, EdgeId, FaceId, LatticeGeometry, LatticeKind, PlaquetteSite};
use crate::noise::{plaquette_anchor, ErrorSet, MeasFlip};
use crate::syndrome::{fill_local, odd_cells, DefectSet, GaugeOutcome};

/// Axes and extents of the decoded volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JitFrame {
    pub ext: [i32; 3],
    pub time: Axis,
    /// In-slice axis whose two faces are smooth.
    pub smooth: Axis,
    /// In-slice axis whose two faces are rough.
    pub rough: Axis,
}

impl JitFrame {
    pub fn for_geometry(geom: &LatticeGeometry) -> Result<Self> {
        if geom.kind() != LatticeKind::Cubic {
            return Err(Error::UnsupportedGeometry);
        }
        Ok(JitFrame {
            ext: [geom.extent(Axis::X), geom.extent(Axis::Y), geom.extent(Axis::Z)],
            time: geom.time_axis(),
            smooth: geom.smooth_space_axis(),
            rough: geom.rough_axis(),
        })
    }

    pub fn ext(&self, a: Axis) -> i32 {
        self.ext[a.index()]
    }

    /// Nearest smooth side boundary of a cell: distance and face, lower face on ties.
    pub fn side_boundary(&self, c: Coord3) -> (i64, BlockFace) {
        let s = self.smooth;
        let lower = c[s] as i64 + 1;
        let upper = (self.ext(s) - c[s]) as i64;
        if lower <= upper {
            (lower, BlockFace { axis: s, upper: false })
        } else {
            (upper, BlockFace { axis: s, upper: true })
        }
    }

    /// Faces crossed by deferring a defect at cell `c` up to time `t`.
    pub fn deferral(&self, c: Coord3, t: i32) -> Vec<FaceId> {
        (c[self.time] + 1..=t)
            .map(|k| {
                let mut a = c;
                a[self.time] = k;
                FaceId::new(a, self.time)
            })
            .collect()
    }

    fn walk(&self, from: Coord3, axis: Axis, to: i32, out: &mut Vec<FaceId>) -> Coord3 {
        let mut cur = from;
        while cur[axis] != to {
            let up = to > cur[axis];
            let mut a = cur;
            if up {
                a[axis] += 1;
            }
            out.push(FaceId::new(a, axis));
            cur[axis] += if up { 1 } else { -1 };
        }
        cur
    }

    /// In-slice string between two cells at the same time: smooth axis, then rough axis.
    pub fn slice_path(&self, a: Coord3, b: Coord3) -> Vec<FaceId> {
        let mut out = Vec::new();
        let cur = self.walk(a, self.smooth, b[self.smooth], &mut out);
        self.walk(cur, self.rough, b[self.rough], &mut out);
        out
    }

    /// In-slice string from a cell out through a smooth side face.
    pub fn side_path(&self, c: Coord3, face: BlockFace) -> Vec<FaceId> {
        let mut out = Vec::new();
        let target = if face.upper { self.ext(face.axis) } else { -1 };
        let s = face.axis;
        let mut cur = c;
        while cur[s] != target {
            let up = target > cur[s];
            let mut a = cur;
            if up {
                a[s] += 1;
            }
            out.push(FaceId::new(a, s));
            cur[s] += if up { 1 } else { -1 };
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveDefect {
    pub id: usize,
    /// Cell of the defect; its time coordinate is the birth time.
    pub pos: Coord3,
    pub birth: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionKind {
    PairDefects,
    PairToBoundary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchDecision {
    pub kind: DecisionKind,
    pub participants: Vec<ActiveDefect>,
    pub time: i32,
    /// Separation that licensed the decision: ℓ∞ distance or boundary distance.
    pub separation: i64,
    pub boundary: Option<BlockFace>,
    /// True for decisions forced at the end of the stream.
    pub flushed: bool,
    pub path: Vec<FaceId>,
}

impl MatchDecision {
    /// Deferral of each participant at decision time.
    pub fn lifetimes(&self) -> Vec<i64> {
        self.participants.iter().map(|d| (self.time - d.birth) as i64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JitState {
    frame: JitFrame,
    active: Vec<ActiveDefect>,
    last_t: Option<i32>,
    next_id: usize,
}

impl JitState {
    pub fn new(frame: JitFrame) -> Self {
        JitState {
            frame,
            active: Vec::new(),
            last_t: None,
            next_id: 0,
        }
    }

    pub fn active(&self) -> &[ActiveDefect] {
        &self.active
    }

    pub fn frame(&self) -> &JitFrame {
        &self.frame
    }
}

/// Separation, kind, ordering key, and the two active indices.
type Candidate = (i64, u8, (Coord3, Coord3, usize, usize), usize, usize);

/// Advances the decoder to time `t`, registering `new_defects` born at `t`, and
/// emits every pairing that is permissible at `t`.
pub fn step(state: &mut JitState, new_defects: &[Coord3], t: i32) -> Result<Vec<MatchDecision>> {
    if let Some(last) = state.last_t {
        if t <= last {
            return Err(Error::OutOfOrderTime { last: last as i64, got: t as i64 });
        }
    }
    let f = state.frame;
    for &d in new_defects {
        if d[f.time] != t {
            return Err(Error::BirthTimeMismatch { birth: d[f.time] as i64, time: t as i64 });
        }
    }
    state.last_t = Some(t);
    for &d in new_defects {
        state.active.push(ActiveDefect { id: state.next_id, pos: d, birth: t });
        state.next_id += 1;
    }
    let act = &state.active;
    // j == i for a boundary.
    let mut cands: Vec<Candidate> = Vec::new();
    for i in 0..act.len() {
        let di = (t - act[i].birth) as i64;
        for j in i + 1..act.len() {
            let dj = (t - act[j].birth) as i64;
            let sep = act[i].pos.linf(act[j].pos) as i64;
            if di.min(dj) >= sep {
                let (a, b) = if (act[i].pos, act[i].id) <= (act[j].pos, act[j].id) { (i, j) } else { (j, i) };
                cands.push((sep, 0, (act[a].pos, act[b].pos, act[a].id, act[b].id), a, b));
            }
        }
        let (bd, _) = f.side_boundary(act[i].pos);
        if di >= bd {
            cands.push((bd, 1, (act[i].pos, act[i].pos, act[i].id, act[i].id), i, i));
        }
    }
    cands.sort();
    let mut used = vec![false; act.len()];
    let mut out = Vec::new();
    for (sep, kind, _, i, j) in cands {
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        out.push(if kind == 0 {
            pair_decision(&f, act[i], act[j], t, sep)
        } else {
            boundary_decision(&f, act[i], t, false)
        });
    }
    state.active = act.iter().zip(&used).filter(|(_, &u)| !u).map(|(a, _)| *a).collect();
    Ok(out)
}

fn pair_decision(f: &JitFrame, u: ActiveDefect, v: ActiveDefect, t: i32, sep: i64) -> MatchDecision {
    let mut path = f.deferral(u.pos, t);
    path.extend(f.deferral(v.pos, t));
    let mut a = u.pos;
    let mut b = v.pos;
    a[f.time] = t;
    b[f.time] = t;
    path.extend(f.slice_path(a, b));
    MatchDecision {
        kind: DecisionKind::PairDefects,
        participants: vec![u, v],
        time: t,
        separation: sep,
        boundary: None,
        flushed: false,
        path,
    }
}

fn boundary_decision(f: &JitFrame, u: ActiveDefect, t: i32, flushed: bool) -> MatchDecision {
    let (bd, face) = f.side_boundary(u.pos);
    let mut path = f.deferral(u.pos, t);
    let mut a = u.pos;
    a[f.time] = t;
    path.extend(f.side_path(a, face));
    MatchDecision {
        kind: DecisionKind::PairToBoundary,
        participants: vec![u],
        time: t,
        separation: bd,
        boundary: Some(face),
        flushed,
        path,
    }
}

/// Routes every survivor to the nearest of the smooth sides and the terminal face.
pub fn flush(state: &mut JitState) -> Vec<MatchDecision> {
    let f = state.frame;
    let end = f.ext(f.time);
    let last = end - 1;
    let mut out = Vec::new();
    for u in std::mem::take(&mut state.active) {
        let (bd, _) = f.side_boundary(u.pos);
        let terminal = (end - u.birth) as i64;
        if terminal <= bd {
            out.push(MatchDecision {
                kind: DecisionKind::PairToBoundary,
                participants: vec![u],
                time: end,
                separation: terminal,
                boundary: Some(BlockFace { axis: f.time, upper: true }),
                flushed: true,
                path: f.deferral(u.pos, end),
            });
        } else {
            out.push(boundary_decision(&f, u, last.max(u.birth), true));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JitRun {
    pub decisions: Vec<MatchDecision>,
    /// Faces whose outcomes the decoder flips.
    pub correction: BTreeSet<FaceId>,
    pub max_lifetime: i64,
}

impl JitRun {
    pub fn write_log<W: Write>(&self, mut out: W) -> Result<()> {
        for d in &self.decisions {
            serde_json::to_writer(&mut out, d)?;
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn correction_outcome(&self, geom: &LatticeGeometry) -> Result<GaugeOutcome> {
        GaugeOutcome::from_sites(geom, self.correction.iter().map(|f| PlaquetteSite::Face(*f)))
    }
}

/// Decodes a whole defect history slice by slice, then flushes.
pub fn run(frame: JitFrame, defects: &[Coord3]) -> Result<JitRun> {
    let mut by_t: BTreeMap<i32, Vec<Coord3>> = BTreeMap::new();
    for d in defects {
        by_t.entry(d[frame.time]).or_default().push(*d);
    }
    let mut state = JitState::new(frame);
    let mut decisions = Vec::new();
    let end = frame.ext(frame.time);
    if let Some((&first, _)) = by_t.iter().next() {
        if first < 0 || by_t.keys().any(|&t| t >= end) {
            return Err(Error::Internal("defect outside the time range".into()));
        }
    }
    for t in 0..end {
        let new = by_t.remove(&t).unwrap_or_default();
        decisions.extend(step(&mut state, &new, t)?);
    }
    decisions.extend(flush(&mut state));
    let mut correction = BTreeSet::new();
    let mut max_lifetime = 0;
    for d in &decisions {
        for face in &d.path {
            if !correction.remove(face) {
                correction.insert(*face);
            }
        }
        max_lifetime = max_lifetime.max(d.lifetimes().into_iter().max().unwrap_or(0));
    }
    Ok(JitRun { decisions, correction, max_lifetime })
}

/// Cell anchors of a cube-cell defect set.
pub fn defect_cells(defects: &DefectSet) -> Vec<Coord3> {
    defects.iter().map(|d| d.anchor()).collect()
}

/// Axis-aligned inclusive box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Coord3,
    pub hi: Coord3,
}

impl Region {
    pub fn around(points: &[Coord3]) -> Option<Self> {
        crate::chunks::bounding_box(points).map(|(lo, hi)| Region { lo, hi })
    }

    pub fn grow(&self, g: i32) -> Region {
        let d = Coord3::new(g, g, g);
        Region { lo: self.lo - d, hi: self.hi + d }
    }

    pub fn contains(&self, p: Coord3) -> bool {
        Axis::ALL.iter().all(|&a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    pub fn diameter(&self) -> i64 {
        Axis::ALL
            .iter()
            .map(|&a| (self.hi[a] - self.lo[a]) as i64)
            .max()
            .unwrap_or(0)
    }

    /// Smallest symmetric growth that makes the region contain `p`.
    pub fn growth_to_cover(&self, p: Coord3) -> i32 {
        Axis::ALL
            .iter()
            .map(|&a| (self.lo[a] - p[a]).max(p[a] - self.hi[a]).max(0))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpread {
    pub level: u32,
    pub sites: usize,
    pub regime: Regime,
    /// Diameter of the raw box: the component's bounding box grown by one.
    pub box_diameter: i64,
    /// Growth of the raw box needed to cover every correction face of the component.
    pub reach: i64,
    pub container_diameter: i64,
    pub s_emp: f64,
    pub max_lifetime: i64,
}

impl ComponentSpread {
    /// Lifetime and reach bounds for isolated components; `None` outside both regimes.
    pub fn bounds(&self, q: u64) -> Option<(i64, i64)> {
        let qj = qpow(q, self.level).min(i64::MAX as u128 / 4) as i64;
        match self.regime {
            Regime::Bulk => Some((2 * (qj + 2), qj + 1)),
            Regime::Boundary => Some((3 * (qj + 2), 3 * (qj + 2))),
            Regime::TimeBoundary => None,
        }
    }

    pub fn within_bounds(&self, q: u64) -> bool {
        self.bounds(q)
            .is_none_or(|(life, reach)| self.max_lifetime <= life && self.reach <= reach)
    }
}

/// Position of a raw box relative to the boundaries of the volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Farther than 2(Qʲ+2) from both smooth sides and clear of the time boundaries.
    Bulk,
    /// Within 2(Qʲ+2) of a smooth side and clear of the time boundaries.
    Boundary,
    /// Touches the initial face or comes within 3(Qʲ+2) of the terminal face.
    TimeBoundary,
}

fn classify(geom: &LatticeGeometry, b: &Region, qj: u128) -> Regime {
    let margin = 2 * (qj.min(1 << 40) as i64 + 2);
    let t = geom.time_axis();
    let s = geom.smooth_space_axis();
    let end = geom.extent(t) as i64;
    if b.lo[t] < 1 || b.hi[t] as i64 + margin * 3 / 2 >= end {
        return Regime::TimeBoundary;
    }
    let side = (b.lo[s] as i64 + 1).min(geom.extent(s) as i64 - b.hi[s] as i64);
    if side > margin {
        Regime::Bulk
    } else {
        Regime::Boundary
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpreadReport {
    pub components: Vec<ComponentSpread>,
    pub max_lifetime: i64,
    pub max_s_emp: f64,
    /// Pair decisions whose participants belong to different boxes.
    pub cross_box_pairs: usize,
}

/// Attributes defects, decisions and residual strings to the `Qʲ`-components
/// of the chunk decomposition of the error sites (site side 1) and measures the
/// symmetric container around each component that covers them.
pub fn measure_spread(
    geom: &LatticeGeometry,
    errors: &ErrorSet,
    run: &JitRun,
    decomp: &ChunkDecomposition,
    params: &DecoderParams,
) -> Result<SpreadReport> {
    let comps = decomp.components();
    if comps.is_empty() {
        return Ok(SpreadReport::default());
    }
    let boxes: Vec<Region> = comps
        .iter()
        .map(|(_, c)| Region::around(c).expect("non-empty").grow(1))
        .collect();
    let site_owner: HashMap<Coord3, usize> = comps
        .iter()
        .enumerate()
        .flat_map(|(k, (_, c))| c.iter().map(move |p| (*p, k)))
        .collect();
    let owner_of = |p: Coord3| -> usize {
        let mut best = (i64::MAX, 0);
        for (k, (_, c)) in comps.iter().enumerate() {
            if boxes[k].contains(p) {
                let d = c.iter().map(|q| q.linf(p) as i64).min().unwrap_or(i64::MAX);
                best = best.min((d, k));
            }
        }
        if best.0 == i64::MAX {
            for (k, (_, c)) in comps.iter().enumerate() {
                let d = c.iter().map(|q| q.linf(p) as i64).min().unwrap_or(i64::MAX);
                best = best.min((d, k));
            }
        }
        best.1
    };
    let n = comps.len();
    let mut meas: Vec<Vec<usize>> = vec![Vec::new(); n];
    for m in &errors.meas_flips {
        let site = plaquette_anchor(m.0);
        let k = site_owner.get(&site).copied().unwrap_or_else(|| owner_of(site));
        let pi = geom
            .plaquette_index(m.0)
            .ok_or_else(|| Error::NotAPlaquetteSite(m.0.to_string()))?;
        meas[k].push(pi);
    }
    let mut paths: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut points: Vec<Vec<Coord3>> = vec![Vec::new(); n];
    let mut reach = vec![0i32; n];
    let mut lifetimes = vec![0i64; n];
    let mut cross = 0;
    for d in &run.decisions {
        let owners: Vec<usize> = d.participants.iter().map(|p| owner_of(p.pos)).collect();
        if owners.len() == 2 && owners[0] != owners[1] {
            cross += 1;
        }
        let k = owners[0];
        for p in &d.participants {
            points[k].push(p.pos);
        }
        lifetimes[k] = lifetimes[k].max(d.lifetimes().into_iter().max().unwrap_or(0));
        for f in &d.path {
            let pi = geom
                .face_index(*f)
                .ok_or_else(|| Error::NotAPlaquetteSite(format!("{f:?}")))?;
            paths[k].push(pi);
            reach[k] = reach[k].max(boxes[k].growth_to_cover(f.anchor));
        }
    }
    let mut report = SpreadReport {
        cross_box_pairs: cross,
        ..Default::default()
    };
    for (k, (level, sites)) in comps.iter().enumerate() {
        let strings = GaugeOutcome::from_indices(geom, meas[k].iter().chain(&paths[k]).copied());
        let mut pts = points[k].clone();
        if odd_cells(geom, &strings).is_empty() {
            for e in fill_local(geom, &strings)? {
                pts.push(e.anchor);
            }
        } else {
            // Open strings: cross-box pairings leave no closed residual, so the
            // strings themselves are covered.
            for &pi in &paths[k] {
                pts.push(plaquette_anchor(geom.plaquettes()[pi].site));
            }
        }
        let core = Region::around(sites).expect("non-empty component");
        let grow = pts.iter().map(|p| core.growth_to_cover(*p)).max().unwrap_or(0);
        let container = core.diameter() + 2 * grow as i64;
        let qj = qpow(params.q, *level) as f64;
        let s_emp = (container as f64).max(qj) / qj;
        report.max_lifetime = report.max_lifetime.max(lifetimes[k]);
        report.max_s_emp = report.max_s_emp.max(s_emp);
        report.components.push(ComponentSpread {
            level: *level,
            sites: sites.len(),
            regime: classify(geom, &boxes[k], qpow(params.q, *level)),
            box_diameter: boxes[k].diameter(),
            reach: reach[k] as i64,
            container_diameter: container,
            s_emp,
            max_lifetime: lifetimes[k],
        });
    }
    Ok(report)
}

/// Random non-empty error supported on one site: measurement flips of the
/// faces anchored at `anchor` and data flips of its edges.
pub fn planted_site<R: rand::Rng>(geom: &LatticeGeometry, anchor: Coord3, rng: &mut R) -> ErrorSet {
    let faces: Vec<FaceId> = Axis::ALL
        .iter()
        .map(|&n| FaceId::new(anchor, n))
        .filter(|f| geom.face_index(*f).is_some())
        .collect();
    let edges: Vec<EdgeId> = Axis::ALL
        .iter()
        .map(|&a| EdgeId::new(anchor, a))
        .filter(|e| geom.has_edge(*e) && !crate::noise::in_initial_plane(geom, *e))
        .collect();
    loop {
        let mut e = ErrorSet::default();
        for f in &faces {
            if rng.random_bool(0.5) {
                let site = PlaquetteSite::Face(*f);
                e.meas_flips.insert(MeasFlip(site, crate::noise::plaquette_time(geom, site)));
            }
        }
        for d in &edges {
            if rng.random_bool(0.25) {
                e.data_flips.insert(*d);
            }
        }
        if !e.meas_flips.is_empty() || (faces.is_empty() && !e.is_empty()) || (faces.is_empty() && edges.is_empty()) {
            return e;
        }
    }
}

/// Decodes an error with the JIT decoder from the trivial gauge and audits it
/// against the decomposition of its sites at scale `params.q`.
pub fn audit_error(geom: &LatticeGeometry, errors: &ErrorSet, params: &DecoderParams) -> Result<(JitRun, SpreadReport)> {
    let frame = JitFrame::for_geometry(geom)?;
    let out = crate::syndrome::apply_errors(geom, &GaugeOutcome::trivial(geom), errors)?;
    let defects = defect_cells(&crate::syndrome::extract_defects(geom, &out));
    let r = run(frame, &defects)?;
    let sites: Vec<Coord3> = crate::noise::to_sites(errors, &crate::noise::SiteGrid::new(geom, 1))
        .into_iter()
        .collect();
    let decomp = crate::chunks::decompose(&sites, params.q)?;
    let spread = measure_spread(geom, errors, &r, &decomp, params)?;
    Ok((r, spread))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, BoundarySpec};
    use crate::syndrome::{apply_errors, extract_defects};
    use proptest::prelude::*;

    fn geom(l: i32) -> LatticeGeometry {
        build_lattice(LatticeKind::Cubic, l, BoundarySpec::rough_along(Axis::Z)).unwrap()
    }

    fn frame(l: i32) -> JitFrame {
        JitFrame::for_geometry(&geom(l)).unwrap()
    }

    fn c(x: i32, y: i32, z: i32) -> Coord3 {
        Coord3::new(x, y, z)
    }

    #[test]
    fn deferred_pair_decided_when_both_waited() {
        let mut st = JitState::new(frame(16));
        assert!(step(&mut st, &[c(0, 8, 8)], 0).unwrap().is_empty());
        assert!(step(&mut st, &[], 1).unwrap().is_empty());
        assert!(step(&mut st, &[c(2, 8, 8)], 2).unwrap().is_empty());
        assert!(step(&mut st, &[], 3).unwrap().is_empty());
        let d = step(&mut st, &[], 4).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DecisionKind::PairDefects);
        assert_eq!(d[0].separation, 2);
        assert_eq!(d[0].lifetimes(), vec![4, 2]);
    }

    #[test]
    fn lone_defect_goes_to_boundary() {
        let mut st = JitState::new(frame(16));
        step(&mut st, &[c(0, 2, 8)], 0).unwrap();
        for t in 1..3 {
            assert!(step(&mut st, &[], t).unwrap().is_empty());
        }
        let d = step(&mut st, &[], 3).unwrap();
        assert_eq!(d[0].kind, DecisionKind::PairToBoundary);
        assert_eq!(d[0].lifetimes(), vec![3]);
        assert_eq!(d[0].path.len(), 6);
    }

    #[test]
    fn empty_stream() {
        let r = run(frame(4), &[]).unwrap();
        assert!(r.decisions.is_empty() && r.correction.is_empty());
    }

    #[test]
    fn rejects_bad_steps() {
        let mut st = JitState::new(frame(4));
        step(&mut st, &[], 2).unwrap();
        assert_eq!(step(&mut st, &[], 2).unwrap_err(), Error::OutOfOrderTime { last: 2, got: 2 });
        assert_eq!(
            step(&mut st, &[c(1, 1, 1)], 3).unwrap_err(),
            Error::BirthTimeMismatch { birth: 1, time: 3 }
        );
    }

    #[test]
    fn log_is_json_lines() {
        let r = run(frame(8), &[c(1, 4, 4), c(1, 5, 4)]).unwrap();
        let mut buf = Vec::new();
        r.write_log(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        let d: MatchDecision = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(d.kind, DecisionKind::PairDefects);
    }

    fn arb_meas(l: i32) -> impl Strategy<Value = ErrorSet> {
        let g = geom(l);
        let sites: Vec<PlaquetteSite> = g.plaquettes().iter().map(|p| p.site).collect();
        prop::collection::btree_set(0..sites.len(), 0..8).prop_map(move |ix| {
            let mut e = ErrorSet::default();
            for i in ix {
                let s = sites[i];
                e.meas_flips.insert(crate::noise::MeasFlip(s, crate::noise::plaquette_time(&g, s)));
            }
            e
        })
    }

    proptest! {
        #[test]
        fn decisions_are_permissible_and_complete(errors in arb_meas(6)) {
            let g = geom(6);
            let f = JitFrame::for_geometry(&g).unwrap();
            let out = apply_errors(&g, &GaugeOutcome::trivial(&g), &errors).unwrap();
            let defects = defect_cells(&extract_defects(&g, &out));
            let r = run(f, &defects).unwrap();
            let mut seen = BTreeSet::new();
            for d in &r.decisions {
                for p in &d.participants {
                    prop_assert!(seen.insert(p.id));
                    // Causality.
                    prop_assert!(p.birth <= d.time);
                }
                if !d.flushed {
                    match d.kind {
                        DecisionKind::PairDefects => {
                            let sep = d.participants[0].pos.linf(d.participants[1].pos) as i64;
                            prop_assert!(d.lifetimes().iter().all(|&l| l >= sep));
                        }
                        DecisionKind::PairToBoundary => {
                            let (bd, _) = f.side_boundary(d.participants[0].pos);
                            prop_assert!(d.lifetimes()[0] >= bd);
                        }
                    }
                }
            }
            prop_assert_eq!(seen.len(), defects.len());
            let fixed = out.xor(&r.correction_outcome(&g).unwrap());
            prop_assert!(extract_defects(&g, &fixed).is_empty());
        }
    }

    #[test]
    fn planted_sites_respect_fact_bounds() {
        use rand::{Rng, SeedableRng};
        let g = geom(16);
        let params = DecoderParams { q: 33, ..DecoderParams::default() };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut regimes = [0usize; 3];
        for _ in 0..300 {
            let a = c(rng.random_range(1..12), rng.random_range(0..17), rng.random_range(0..17));
            let e = planted_site(&g, a, &mut rng);
            let (_, rep) = audit_error(&g, &e, &params).unwrap();
            for comp in &rep.components {
                regimes[comp.regime as usize] += 1;
                assert!(comp.within_bounds(params.q), "{a:?} {e:?} {comp:?}");
                assert!(comp.s_emp <= 8.0 && comp.s_emp >= 1.0, "{comp:?}");
                if comp.regime == Regime::Bulk {
                    assert!(comp.s_emp <= 3.0, "{comp:?}");
                }
            }
        }
        assert!(regimes[0] > 0 && regimes[1] > 0, "{regimes:?}");
    }
}
