//! Plaquette outcomes under a random gauge, their defects, and correction
//! membranes that restore the all-+1 gauge.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Axis, ConstraintCell, Coord3, EdgeId, LatticeGeometry, LatticeKind, PlaquetteSite};
use crate::noise::{in_initial_plane, plaquette_anchor, trial_rng, ErrorSet, Stream};

/// Support of an X correction.
pub type Membrane = BTreeSet<EdgeId>;

/// Outcome of every plaquette of a geometry; `true` marks a −1 outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaugeOutcome {
    minus: Vec<bool>,
}

impl GaugeOutcome {
    pub fn trivial(geom: &LatticeGeometry) -> Self {
        GaugeOutcome {
            minus: vec![false; geom.plaquettes().len()],
        }
    }

    pub fn from_indices(geom: &LatticeGeometry, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut g = Self::trivial(geom);
        for i in idx {
            g.minus[i] ^= true;
        }
        g
    }

    pub fn from_sites(geom: &LatticeGeometry, sites: impl IntoIterator<Item = PlaquetteSite>) -> Result<Self> {
        let mut g = Self::trivial(geom);
        for s in sites {
            let i = geom
                .plaquette_index(s)
                .ok_or_else(|| Error::NotAPlaquetteSite(s.to_string()))?;
            g.minus[i] ^= true;
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minus.is_empty()
    }

    pub fn is_minus(&self, i: usize) -> bool {
        self.minus[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.minus[i] ^= true;
    }

    pub fn is_trivial(&self) -> bool {
        !self.minus.iter().any(|&b| b)
    }

    pub fn minus_indices(&self) -> Vec<usize> {
        self.minus
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn minus_sites(&self, geom: &LatticeGeometry) -> Vec<PlaquetteSite> {
        self.minus_indices()
            .into_iter()
            .map(|i| geom.plaquettes()[i].site)
            .collect()
    }

    pub fn xor_with(&mut self, other: &GaugeOutcome) {
        for (a, b) in self.minus.iter_mut().zip(&other.minus) {
            *a ^= *b;
        }
    }

    pub fn xor(&self, other: &GaugeOutcome) -> GaugeOutcome {
        let mut out = self.clone();
        out.xor_with(other);
        out
    }
}

/// Plaquettes flipped by an X frame on `edges`. Edges missing from the geometry are ignored.
pub fn plaquette_pattern<'a>(geom: &LatticeGeometry, edges: impl IntoIterator<Item = &'a EdgeId>) -> GaugeOutcome {
    let mut g = GaugeOutcome::trivial(geom);
    for e in edges {
        if let Some(ei) = geom.edge_index(*e) {
            for &p in geom.edge_plaquette_indices(ei) {
                g.minus[p as usize] ^= true;
            }
        }
    }
    g
}

/// Edges carrying the random frame: the incoming layer of the cubic lattice is
/// already in a fixed gauge.
pub fn gauge_edges(geom: &LatticeGeometry) -> impl Iterator<Item = EdgeId> + '_ {
    geom.edges()
        .iter()
        .copied()
        .filter(move |e| !in_initial_plane(geom, *e))
}

pub fn sample_random_gauge(geom: &LatticeGeometry, seed: u64, trial: u64) -> (GaugeOutcome, Membrane) {
    sample_random_gauge_with(geom, &mut trial_rng(seed, trial, Stream::Gauge))
}

/// Uniform X frame on the gauge edges and the outcomes it induces.
pub fn sample_random_gauge_with<R: Rng>(geom: &LatticeGeometry, rng: &mut R) -> (GaugeOutcome, Membrane) {
    let frame: Membrane = gauge_edges(geom).filter(|_| rng.random_bool(0.5)).collect();
    (plaquette_pattern(geom, &frame), frame)
}

/// Flips outcomes for every measurement flip and every data flip in their support.
pub fn apply_errors(geom: &LatticeGeometry, gauge: &GaugeOutcome, errors: &ErrorSet) -> Result<GaugeOutcome> {
    let mut out = gauge.xor(&plaquette_pattern(geom, &errors.data_flips));
    for m in &errors.meas_flips {
        let i = geom
            .plaquette_index(m.0)
            .ok_or_else(|| Error::NotAPlaquetteSite(m.0.to_string()))?;
        out.flip(i);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Defect {
    pub t: i32,
    pub cell: ConstraintCell,
}

impl Defect {
    /// Anchor of the cell: cube corner or vertex.
    pub fn anchor(&self) -> Coord3 {
        match self.cell {
            ConstraintCell::Cube(c) => c.0,
            ConstraintCell::Vertex(v) => v.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectSet(pub BTreeSet<Defect>);

impl DefectSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Defect> {
        self.0.iter()
    }

    /// CSV with the two spatial coordinates, then time, then the cell species.
    pub fn write_csv<W: Write>(&self, geom: &LatticeGeometry, mut out: W) -> std::io::Result<()> {
        let t = geom.time_axis();
        let [a, b] = t.others();
        writeln!(out, "cell_x,cell_y,cell_t,kind")?;
        for d in &self.0 {
            let p = d.anchor();
            writeln!(out, "{},{},{},{}", p[a], p[b], p[t], d.cell.kind_label())?;
        }
        Ok(())
    }
}

/// Index of every constraint cell carrying an odd number of −1 outcomes.
pub fn odd_cells(geom: &LatticeGeometry, gauge: &GaugeOutcome) -> Vec<usize> {
    (0..geom.constraint_cells().len())
        .filter(|&ci| {
            geom.cell_plaquette_indices(ci)
                .iter()
                .filter(|&&p| gauge.is_minus(p as usize))
                .count()
                % 2
                == 1
        })
        .collect()
}

pub fn extract_defects(geom: &LatticeGeometry, gauge: &GaugeOutcome) -> DefectSet {
    let t = geom.time_axis();
    DefectSet(
        odd_cells(geom, gauge)
            .into_iter()
            .map(|ci| {
                let cell = geom.constraint_cells()[ci];
                let d = Defect { t: 0, cell };
                Defect { t: d.anchor()[t], cell }
            })
            .collect(),
    )
}

/// Membrane whose plaquette pattern equals `strings`.
///
/// On the cubic lattice the −1 plaquettes of the initial layer are first pushed
/// to the nearer smooth side by chains inside the layer, then each slab is
/// cleared by flipping the upper edge of every −1 side face, which moves the
/// loops toward the terminal face. Other lattices solve the linear system.
pub fn fix_gauge(geom: &LatticeGeometry, strings: &GaugeOutcome) -> Result<Membrane> {
    let open = odd_cells(geom, strings).len();
    if open > 0 {
        return Err(Error::OpenStrings(open));
    }
    match geom.kind() {
        LatticeKind::Cubic => sweep(geom, strings),
        LatticeKind::Alternative => {
            let target = strings.minus_indices();
            solve_pattern(geom, &target, geom.edges().iter().copied(), &HashSet::new())
                .ok_or(Error::OpenStrings(0))
        }
    }
}

fn sweep(geom: &LatticeGeometry, strings: &GaugeOutcome) -> Result<Membrane> {
    let t = geom.time_axis();
    let r = geom.rough_axis();
    let s = geom.smooth_space_axis();
    let ls = geom.extent(s);
    let mut work = strings.clone();
    let mut membrane = Membrane::new();
    let mut flip = |e: EdgeId, work: &mut GaugeOutcome| -> Result<()> {
        let ei = geom
            .edge_index(e)
            .ok_or_else(|| Error::Internal(format!("sweep edge {e:?} missing")))?;
        if !membrane.insert(e) {
            membrane.remove(&e);
        }
        for &p in geom.edge_plaquette_indices(ei) {
            work.flip(p as usize);
        }
        Ok(())
    };
    for i in 0..work.len() {
        let PlaquetteSite::Face(f) = geom.plaquettes()[i].site else {
            continue;
        };
        if f.normal != t || f.anchor[t] != 0 || !work.is_minus(i) {
            continue;
        }
        let s0 = f.anchor[s];
        let range = if s0 < ls - s0 - 1 { 0..=s0 } else { s0 + 1..=ls };
        for k in range {
            let mut a = f.anchor;
            a[s] = k;
            flip(EdgeId::new(a, r), &mut work)?;
        }
    }
    let mut by_slab: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, p) in geom.plaquettes().iter().enumerate() {
        if let PlaquetteSite::Face(f) = p.site {
            if f.normal != t {
                by_slab.entry(f.anchor[t]).or_default().push(i);
            }
        }
    }
    for faces in by_slab.values() {
        for &i in faces {
            if !work.is_minus(i) {
                continue;
            }
            let PlaquetteSite::Face(f) = geom.plaquettes()[i].site else {
                unreachable!()
            };
            let along = if f.normal == s { r } else { s };
            flip(EdgeId::new(f.anchor + t.unit(), along), &mut work)?;
        }
    }
    let left = work.minus_indices().len();
    if left > 0 {
        return Err(Error::OpenStrings(left));
    }
    Ok(membrane)
}

/// Solves `pattern(W) = target` over GF(2) with `W` drawn from `allowed`.
/// Columns in `preferred` are pivoted first, which keeps solutions sparse.
pub fn solve_pattern(
    geom: &LatticeGeometry,
    target: &[usize],
    allowed: impl IntoIterator<Item = EdgeId>,
    preferred: &HashSet<EdgeId>,
) -> Option<Membrane> {
    let mut keyed: Vec<(bool, usize, EdgeId)> = allowed
        .into_iter()
        .filter_map(|e| geom.edge_index(e).map(|i| (!preferred.contains(&e), i, e)))
        .collect();
    keyed.sort_unstable();
    keyed.dedup();
    let cols: Vec<(usize, EdgeId)> = keyed.into_iter().map(|(_, i, e)| (i, e)).collect();
    // Rows are the plaquettes touched by the target or by an allowed edge.
    let mut row_of = vec![u32::MAX; geom.plaquettes().len()];
    let mut row_plaq: Vec<usize> = Vec::new();
    let mut add_row = |p: usize, row_plaq: &mut Vec<usize>| {
        if row_of[p] == u32::MAX {
            row_of[p] = row_plaq.len() as u32;
            row_plaq.push(p);
        }
        row_of[p] as usize
    };
    for &p in target {
        add_row(p, &mut row_plaq);
    }
    let ncols = cols.len();
    let words = ncols / 64 + 1;
    let mut entries = Vec::new();
    for (c, &(ei, _)) in cols.iter().enumerate() {
        for &p in geom.edge_plaquette_indices(ei) {
            entries.push((add_row(p as usize, &mut row_plaq), c));
        }
    }
    let nrows = row_plaq.len();
    let mut rows = vec![0u64; nrows * words];
    let mut rhs = vec![false; nrows];
    for &p in target {
        rhs[row_of[p] as usize] = true;
    }
    for (r, c) in entries {
        rows[r * words + c / 64] |= 1 << (c % 64);
    }
    let mut pivot_row = vec![0u64; words];
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut next = 0;
    for c in 0..ncols {
        let (w, b) = (c / 64, 1u64 << (c % 64));
        let Some(pr) = (next..nrows).find(|&r| rows[r * words + w] & b != 0) else {
            continue;
        };
        if pr != next {
            for k in 0..words {
                rows.swap(next * words + k, pr * words + k);
            }
            rhs.swap(next, pr);
        }
        pivot_row.copy_from_slice(&rows[next * words..(next + 1) * words]);
        let pivot_rhs = rhs[next];
        for r in 0..nrows {
            if r != next && rows[r * words + w] & b != 0 {
                for (x, y) in rows[r * words + w..(r + 1) * words].iter_mut().zip(&pivot_row[w..]) {
                    *x ^= y;
                }
                rhs[r] ^= pivot_rhs;
            }
        }
        pivots.push((next, c));
        next += 1;
        if next == nrows {
            break;
        }
    }
    if rhs[next..].iter().any(|&b| b) {
        return None;
    }
    Some(
        pivots
            .into_iter()
            .filter(|&(r, _)| rhs[r])
            .map(|(_, c)| cols[c].1)
            .collect(),
    )
}

/// Groups −1 plaquettes into clusters joined through shared constraint cells.
pub fn string_components(geom: &LatticeGeometry, strings: &GaugeOutcome) -> Vec<Vec<usize>> {
    let minus = strings.minus_indices();
    let pos: HashSet<usize> = minus.iter().copied().collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &start in &minus {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            for &c in geom.plaquette_cell_indices(p) {
                for &q in geom.cell_plaquette_indices(c as usize) {
                    let q = q as usize;
                    if pos.contains(&q) && seen.insert(q) {
                        comp.push(q);
                        stack.push(q);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Membrane with pattern `strings` built from local fills of each string
/// cluster. Each cluster is solved inside its bounding box, grown until a
/// solution exists; clusters that no box admits fall back to [`fix_gauge`].
/// The result differs from [`fix_gauge`] only by star operators.
pub fn fill_local(geom: &LatticeGeometry, strings: &GaugeOutcome) -> Result<Membrane> {
    let open = odd_cells(geom, strings).len();
    if open > 0 {
        return Err(Error::OpenStrings(open));
    }
    let mut total = Membrane::new();
    let span = Axis::ALL.iter().map(|&a| geom.extent(a)).max().unwrap_or(1);
    for comp in string_components(geom, strings) {
        let anchors: Vec<Coord3> = comp
            .iter()
            .map(|&p| plaquette_anchor(geom.plaquettes()[p].site))
            .collect();
        let (lo, hi) = crate::chunks::bounding_box(&anchors).expect("non-empty cluster");
        let mut preferred: BTreeMap<EdgeId, usize> = BTreeMap::new();
        for &p in &comp {
            for e in &geom.plaquettes()[p].edges {
                *preferred.entry(*e).or_default() += 1;
            }
        }
        // Edges shared by several cluster plaquettes first.
        let max_share = preferred.values().copied().max().unwrap_or(0);
        let mut solved = None;
        let mut grow = 1;
        loop {
            let allowed = edges_in_box(geom, lo, hi, grow);
            let mut best = None;
            for share in (1..=max_share).rev() {
                let pref: HashSet<EdgeId> = preferred
                    .iter()
                    .filter(|(_, &n)| n >= share)
                    .map(|(e, _)| *e)
                    .collect();
                if let Some(w) = solve_pattern(geom, &comp, allowed.iter().copied(), &pref) {
                    if best.as_ref().is_none_or(|b: &Membrane| w.len() < b.len()) {
                        best = Some(w);
                    }
                }
                if best.is_none() {
                    break;
                }
            }
            if best.is_some() {
                solved = best;
                break;
            }
            if grow > span {
                break;
            }
            grow *= 2;
        }
        let w = match solved {
            Some(w) => w,
            None => fix_gauge(geom, &GaugeOutcome::from_indices(geom, comp.iter().copied()))?,
        };
        for e in w {
            if !total.insert(e) {
                total.remove(&e);
            }
        }
    }
    Ok(total)
}

fn edges_in_box(geom: &LatticeGeometry, lo: Coord3, hi: Coord3, grow: i32) -> Vec<EdgeId> {
    let mut out = Vec::new();
    let clamp = |a: Axis, v: i32| v.clamp(0, geom.extent(a));
    for x in clamp(Axis::X, lo.x - grow)..=clamp(Axis::X, hi.x + grow) {
        for y in clamp(Axis::Y, lo.y - grow)..=clamp(Axis::Y, hi.y + grow) {
            for z in clamp(Axis::Z, lo.z - grow)..=clamp(Axis::Z, hi.z + grow) {
                for a in Axis::ALL {
                    let e = EdgeId::new(Coord3::new(x, y, z), a);
                    if geom.has_edge(e) {
                        out.push(e);
                    }
                }
            }
        }
    }
    out
}

/// Symmetric difference of two membranes.
pub fn xor_membranes(a: &Membrane, b: &Membrane) -> Membrane {
    a.symmetric_difference(b).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, BoundarySpec, CellId, FaceId};
    use crate::noise::MeasFlip;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cubic(l: i32) -> LatticeGeometry {
        build_lattice(LatticeKind::Cubic, l, BoundarySpec::rough_along(Axis::Z)).unwrap()
    }

    fn alt(l: i32) -> LatticeGeometry {
        build_lattice(LatticeKind::Alternative, l, BoundarySpec::rough_along(Axis::Z)).unwrap()
    }

    fn meas(geom: &LatticeGeometry, sites: &[PlaquetteSite]) -> ErrorSet {
        let mut e = ErrorSet::default();
        for s in sites {
            e.meas_flips.insert(MeasFlip(*s, crate::noise::plaquette_time(geom, *s)));
        }
        e
    }

    fn face(x: i32, y: i32, z: i32, n: Axis) -> PlaquetteSite {
        PlaquetteSite::Face(FaceId::new(Coord3::new(x, y, z), n))
    }

    #[test]
    fn random_gauge_is_closed() {
        for g in [cubic(4), alt(4)] {
            for t in 0..20 {
                let (out, frame) = sample_random_gauge(&g, 3, t);
                assert!(extract_defects(&g, &out).is_empty());
                assert_eq!(plaquette_pattern(&g, &frame), out);
            }
        }
        let g = cubic(3);
        assert!(plaquette_pattern(&g, &Membrane::new()).is_trivial());
    }

    #[test]
    fn outcome_frequency_is_half() {
        let g = cubic(3);
        let probe = g.face_index(FaceId::new(Coord3::new(1, 1, 1), Axis::Y)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| sample_random_gauge_with(&g, &mut rng).0.is_minus(probe))
            .count() as f64;
        assert!((hits - 5000.0).abs() < 5.0 * 50.0);
    }

    #[test]
    fn single_flip_defects() {
        let g = cubic(4);
        let base = GaugeOutcome::trivial(&g);
        assert_eq!(apply_errors(&g, &base, &ErrorSet::default()).unwrap(), base);
        let bulk = apply_errors(&g, &base, &meas(&g, &[face(2, 2, 2, Axis::Y)])).unwrap();
        let d = extract_defects(&g, &bulk);
        let cells: Vec<Coord3> = d.iter().map(|d| d.anchor()).collect();
        assert_eq!(cells, vec![Coord3::new(2, 1, 2), Coord3::new(2, 2, 2)]);
        let edge = apply_errors(&g, &base, &meas(&g, &[face(2, 0, 2, Axis::Y)])).unwrap();
        assert_eq!(extract_defects(&g, &edge).len(), 1);
    }

    #[test]
    fn string_has_two_endpoints() {
        let g = cubic(6);
        let sites: Vec<PlaquetteSite> = (1..5).map(|y| face(3, y, 2, Axis::Y)).collect();
        let out = apply_errors(&g, &GaugeOutcome::trivial(&g), &meas(&g, &sites)).unwrap();
        let d: Vec<Coord3> = extract_defects(&g, &out).iter().map(|d| d.anchor()).collect();
        assert_eq!(d, vec![Coord3::new(3, 0, 2), Coord3::new(3, 4, 2)]);
    }

    #[test]
    fn elementary_loop_fills_one_edge() {
        let g = cubic(4);
        let e = EdgeId::new(Coord3::new(2, 2, 1), Axis::Z);
        let loop_ = plaquette_pattern(&g, &[e]);
        assert_eq!(loop_.minus_indices().len(), 4);
        assert_eq!(fill_local(&g, &loop_).unwrap(), Membrane::from([e]));
        assert_eq!(plaquette_pattern(&g, &fix_gauge(&g, &loop_).unwrap()), loop_);
        assert!(fix_gauge(&g, &GaugeOutcome::trivial(&g)).unwrap().is_empty());
    }

    #[test]
    fn rectangular_loop_round_trip() {
        let g = cubic(6);
        let sheet: Vec<EdgeId> = (1..4)
            .flat_map(|y| (1..3).map(move |z| EdgeId::new(Coord3::new(2, y, z), Axis::X)))
            .collect();
        let loop_ = plaquette_pattern(&g, &sheet);
        let w = fix_gauge(&g, &loop_).unwrap();
        assert!(loop_.xor(&plaquette_pattern(&g, &w)).is_trivial());
        let local = fill_local(&g, &loop_).unwrap();
        assert!(loop_.xor(&plaquette_pattern(&g, &local)).is_trivial());
        assert!(local.len() <= sheet.len());
    }

    #[test]
    fn open_strings_rejected() {
        let g = cubic(4);
        let open = GaugeOutcome::from_sites(&g, [face(2, 2, 2, Axis::Y)]).unwrap();
        assert_eq!(fix_gauge(&g, &open), Err(Error::OpenStrings(2)));
    }

    #[test]
    fn boundary_strings_are_permitted() {
        let g = cubic(4);
        // A string from the smooth y boundary to the terminal face.
        let mut sites = vec![face(3, 0, 1, Axis::Y)];
        sites.push(face(4, 0, 1, Axis::X));
        let s = GaugeOutcome::from_sites(&g, sites).unwrap();
        assert!(extract_defects(&g, &s).is_empty());
        let w = fix_gauge(&g, &s).unwrap();
        assert_eq!(plaquette_pattern(&g, &w), s);
    }

    #[test]
    fn csv_export() {
        let g = cubic(3);
        let out = GaugeOutcome::from_sites(&g, [face(1, 1, 1, Axis::Y)]).unwrap();
        let mut buf = Vec::new();
        extract_defects(&g, &out).write_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "cell_x,cell_y,cell_t,kind\n0,1,1,cube\n1,1,1,cube\n");
        let a = alt(2);
        assert!(a.cell_index(ConstraintCell::Cube(CellId(Coord3::new(0, 0, 1)))).is_some());
    }

    fn arb_frame(g: &LatticeGeometry) -> impl Strategy<Value = Membrane> {
        let edges = g.edges().to_vec();
        prop::collection::btree_set(0..edges.len(), 0..12)
            .prop_map(move |ix| ix.into_iter().map(|i| edges[i]).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sweep_inverts_pattern(frame in arb_frame(&cubic(4))) {
            let g = cubic(4);
            let target = plaquette_pattern(&g, &frame);
            let w = fix_gauge(&g, &target).unwrap();
            prop_assert_eq!(plaquette_pattern(&g, &w), target.clone());
            // The oracle solve agrees on the pattern.
            let o = solve_pattern(&g, &target.minus_indices(), g.edges().iter().copied(), &HashSet::new()).unwrap();
            prop_assert_eq!(plaquette_pattern(&g, &o), target.clone());
            let l = fill_local(&g, &target).unwrap();
            prop_assert_eq!(plaquette_pattern(&g, &l), target);
        }

        #[test]
        fn sweep_is_linear(a in arb_frame(&cubic(3)), b in arb_frame(&cubic(3))) {
            let g = cubic(3);
            let pa = plaquette_pattern(&g, &a);
            let pb = plaquette_pattern(&g, &b);
            let wa = fix_gauge(&g, &pa).unwrap();
            let wb = fix_gauge(&g, &pb).unwrap();
            prop_assert_eq!(fix_gauge(&g, &pa.xor(&pb)).unwrap(), xor_membranes(&wa, &wb));
        }

        #[test]
        fn alternative_fill(frame in arb_frame(&alt(3))) {
            let g = alt(3);
            let target = plaquette_pattern(&g, &frame);
            prop_assert!(extract_defects(&g, &target).is_empty());
            let w = fix_gauge(&g, &target).unwrap();
            prop_assert_eq!(plaquette_pattern(&g, &w), target);
        }
    }
}
