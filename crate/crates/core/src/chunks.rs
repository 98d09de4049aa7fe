//! Chunk decomposition of an error's site set and the combinatorics built on it:
//! the diameter lemma, containers, tethering and the chunk probability bound.
//!
//! A level-0 chunk is a single site. A level-n chunk is the disjoint union of
//! two level-(n-1) chunks whose union has ℓ∞ diameter at most `Qⁿ/2`. `E_n`
//! collects the sites lying in some level-n chunk and `F_j = E_j \ E_{j+1}`.

use std::collections::{BTreeSet, HashSet};

use petgraph::algo::maximum_matching;
use petgraph::graph::{NodeIndex, UnGraph};
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extfloat::ExtFloat;
use crate::lattice::{Axis, Coord3};

/// Upper bound on the number of explicitly enumerated chunks at one level and
/// on the search nodes of one packing query.
pub const DEFAULT_CHUNK_CAP: usize = 2_000_000;

/// Scale and spread parameters shared by the decoders' guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderParams {
    pub q: u64,
    pub r: u64,
    pub s: u64,
}

impl Default for DecoderParams {
    fn default() -> Self {
        DecoderParams { q: 87, r: 2, s: 8 }
    }
}

impl DecoderParams {
    /// Smallest `Q` for which distinct same-level containers are never tethered.
    pub fn min_q_untethered(&self) -> u64 {
        3 * (self.r * (self.s + 2) + self.s + 1)
    }

    pub fn untethering_holds(&self) -> bool {
        self.q >= self.min_q_untethered()
    }

    pub fn jit_scale_holds(&self) -> bool {
        self.q >= 33
    }

    /// `Qʲ`, saturating.
    pub fn qpow(&self, j: u32) -> u128 {
        qpow(self.q, j)
    }

    /// Tethering distance `Δ_j = [r(s+2)+2]Qʲ`.
    pub fn delta(&self, j: u32) -> u128 {
        ((self.r * (self.s + 2) + 2) as u128).saturating_mul(self.qpow(j))
    }

    /// Fattened container diameter `D_j = (s+2)Qʲ`.
    pub fn fattened_diameter(&self, j: u32) -> u128 {
        ((self.s + 2) as u128).saturating_mul(self.qpow(j))
    }
}

pub fn qpow(q: u64, j: u32) -> u128 {
    (q as u128).saturating_pow(j)
}

pub fn diameter(points: &[Coord3]) -> i64 {
    match bounding_box(points) {
        Some((lo, hi)) => Axis::ALL
            .iter()
            .map(|&a| (hi[a] - lo[a]) as i64)
            .max()
            .unwrap_or(0),
        None => 0,
    }
}

pub fn bounding_box(points: &[Coord3]) -> Option<(Coord3, Coord3)> {
    let first = *points.first()?;
    let mut lo = first;
    let mut hi = first;
    for p in points {
        for a in Axis::ALL {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    Some((lo, hi))
}

/// Minimum ℓ∞ distance between two point sets, `None` if either is empty.
pub fn set_distance(a: &[Coord3], b: &[Coord3]) -> Option<i64> {
    a.iter()
        .flat_map(|p| b.iter().map(move |q| p.linf(*q) as i64))
        .min()
}

/// Maximal subsets that cannot be split into parts more than `radius` apart.
pub fn connected_components(sites: &[Coord3], radius: u128) -> Vec<Vec<Coord3>> {
    let pts: Vec<Coord3> = sites.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if pts.is_empty() {
        return Vec::new();
    }
    if radius as i64 >= diameter(&pts).max(0) || radius > i32::MAX as u128 {
        return vec![pts];
    }
    let radius = radius as i32;
    let mut uf = UnionFind::<usize>::new(pts.len());
    // Sweep along x; points sorted by (x, y, z).
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if pts[j].x - pts[i].x > radius {
                break;
            }
            if pts[i].linf(pts[j]) <= radius {
                uf.union(i, j);
            }
        }
    }
    let labels = uf.into_labeling();
    let mut groups: std::collections::BTreeMap<usize, Vec<Coord3>> = Default::default();
    for (i, p) in pts.iter().enumerate() {
        groups.entry(labels[i]).or_default().push(*p);
    }
    let mut out: Vec<Vec<Coord3>> = groups.into_values().collect();
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkDecomposition {
    pub q: u64,
    /// `levels[n]` is `E_n`, sorted. The last entry is non-empty.
    pub levels: Vec<Vec<Coord3>>,
}

impl ChunkDecomposition {
    /// Highest non-empty level, `None` for an empty error.
    pub fn max_level(&self) -> Option<usize> {
        self.levels.len().checked_sub(1)
    }

    pub fn e(&self, n: usize) -> &[Coord3] {
        self.levels.get(n).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `F_j = E_j \ E_{j+1}`.
    pub fn f(&self, j: usize) -> Vec<Coord3> {
        let next: HashSet<Coord3> = self.e(j + 1).iter().copied().collect();
        self.e(j).iter().copied().filter(|p| !next.contains(p)).collect()
    }

    /// `Qʲ`-connected components of `F_j`, for every level.
    pub fn components(&self) -> Vec<(u32, Vec<Coord3>)> {
        let mut out = Vec::new();
        for j in 0..self.levels.len() {
            for c in connected_components(&self.f(j), qpow(self.q, j as u32)) {
                out.push((j as u32, c));
            }
        }
        out
    }
}

type Chunk = Vec<u32>;

/// Exact chunk decomposition of `sites` at scale `q`.
pub fn decompose(sites: &[Coord3], q: u64) -> Result<ChunkDecomposition> {
    decompose_with_cap(sites, q, DEFAULT_CHUNK_CAP)
}

pub fn decompose_with_cap(sites: &[Coord3], q: u64, cap: usize) -> Result<ChunkDecomposition> {
    if q < 6 {
        return Err(Error::ChunkScaleTooSmall(q));
    }
    let pts: Vec<Coord3> = sites.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut levels = Vec::new();
    if pts.is_empty() {
        return Ok(ChunkDecomposition { q, levels });
    }
    levels.push(pts.clone());
    let mut chunks: Vec<Chunk> = (0..pts.len() as u32).map(|i| vec![i]).collect();
    let mut n: u32 = 1;
    loop {
        let prev: Vec<Coord3> = levels.last().cloned().unwrap_or_default();
        let qn = qpow(q, n);
        if 2 * diameter(&prev) as u128 <= qn {
            // From here on the diameter condition always holds, so level-k
            // chunks are exactly packings of 2^(k-n+1) level-(n-1) chunks.
            for k in n.. {
                let need = 1usize.checked_shl(k - n + 1).unwrap_or(usize::MAX);
                let members = packing_members(&chunks, pts.len(), need, cap)?;
                if members.is_empty() {
                    break;
                }
                levels.push(members.into_iter().map(|i| pts[i as usize]).collect());
            }
            break;
        }
        chunks = merge_level(&pts, &chunks, qn, cap)?;
        if chunks.is_empty() {
            break;
        }
        let members: BTreeSet<u32> = chunks.iter().flatten().copied().collect();
        levels.push(members.into_iter().map(|i| pts[i as usize]).collect());
        n += 1;
    }
    Ok(ChunkDecomposition { q, levels })
}

fn chunk_box(pts: &[Coord3], c: &[u32]) -> (Coord3, Coord3) {
    let v: Vec<Coord3> = c.iter().map(|&i| pts[i as usize]).collect();
    bounding_box(&v).expect("chunks are non-empty")
}

fn merge_level(pts: &[Coord3], chunks: &[Chunk], qn: u128, cap: usize) -> Result<Vec<Chunk>> {
    let boxes: Vec<(Coord3, Coord3)> = chunks.iter().map(|c| chunk_box(pts, c)).collect();
    let mut order: Vec<usize> = (0..chunks.len()).collect();
    order.sort_by_key(|&i| boxes[i].0.x);
    let limit = (qn / 2).min(i32::MAX as u128) as i64;
    let mut seen: HashSet<Chunk> = HashSet::new();
    let mut out = Vec::new();
    for (oi, &i) in order.iter().enumerate() {
        let (lo_i, hi_i) = boxes[i];
        for &j in &order[oi + 1..] {
            let (lo_j, hi_j) = boxes[j];
            if (lo_j.x - lo_i.x) as i64 > limit {
                break;
            }
            let mut diam = 0i64;
            for a in Axis::ALL {
                let d = (hi_i[a].max(hi_j[a]) - lo_i[a].min(lo_j[a])) as i64;
                diam = diam.max(d);
            }
            if 2 * diam as u128 > qn {
                continue;
            }
            if !disjoint(&chunks[i], &chunks[j]) {
                continue;
            }
            let mut u: Chunk = chunks[i].iter().chain(&chunks[j]).copied().collect();
            u.sort_unstable();
            if seen.insert(u.clone()) {
                out.push(u);
                if out.len() > cap {
                    return Err(Error::DecompositionOverflow(format!(
                        "more than {cap} chunks of size {}",
                        chunks[i].len() * 2
                    )));
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

fn disjoint(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return false,
        }
    }
    true
}

/// Sites lying in some family of `need` pairwise disjoint chunks.
fn packing_members(chunks: &[Chunk], n_sites: usize, need: usize, cap: usize) -> Result<BTreeSet<u32>> {
    let covered: BTreeSet<u32> = chunks.iter().flatten().copied().collect();
    if chunks.is_empty() || need == usize::MAX {
        return Ok(BTreeSet::new());
    }
    let size = chunks[0].len();
    if need.saturating_mul(size) > n_sites {
        return Ok(BTreeSet::new());
    }
    match size {
        1 => Ok(if chunks.len() >= need { covered } else { BTreeSet::new() }),
        2 => {
            let mut g = UnGraph::<(), ()>::with_capacity(n_sites, chunks.len());
            for _ in 0..n_sites {
                g.add_node(());
            }
            for c in chunks {
                g.add_edge(NodeIndex::new(c[0] as usize), NodeIndex::new(c[1] as usize), ());
            }
            // Any matched-or-adjacent vertex can be swapped into a maximum matching.
            let nu = maximum_matching(&g).len();
            Ok(if nu >= need { covered } else { BTreeSet::new() })
        }
        _ => {
            let mut out = BTreeSet::new();
            let mut budget = cap;
            for &u in &covered {
                if out.contains(&u) {
                    continue;
                }
                for (ci, c) in chunks.iter().enumerate() {
                    if !c.contains(&u) {
                        continue;
                    }
                    let mut used: HashSet<u32> = c.iter().copied().collect();
                    let mut picked = vec![ci];
                    if pack(chunks, need - 1, &mut used, &mut picked, 0, &mut budget)? {
                        for &p in &picked {
                            out.extend(chunks[p].iter().copied());
                        }
                        break;
                    }
                }
            }
            Ok(out)
        }
    }
}

fn pack(
    chunks: &[Chunk],
    need: usize,
    used: &mut HashSet<u32>,
    picked: &mut Vec<usize>,
    start: usize,
    budget: &mut usize,
) -> Result<bool> {
    if need == 0 {
        return Ok(true);
    }
    for i in start..chunks.len() {
        if *budget == 0 {
            return Err(Error::DecompositionOverflow("set packing search exhausted".into()));
        }
        *budget -= 1;
        if picked.contains(&i) || chunks[i].iter().any(|p| used.contains(p)) {
            continue;
        }
        used.extend(chunks[i].iter().copied());
        picked.push(i);
        if pack(chunks, need - 1, used, picked, i + 1, budget)? {
            return Ok(true);
        }
        picked.pop();
        for p in &chunks[i] {
            used.remove(p);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaViolation {
    pub level: u32,
    pub component_size: usize,
    pub diameter: i64,
    pub separation: Option<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub components_checked: usize,
    pub violations: Vec<LemmaViolation>,
}

impl LemmaReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every `Qⁿ`-component `M` of `F_n` has diameter at most `Qⁿ` and
/// lies more than `Q^{n+1}/3` from `E_n \ M`.
pub fn verify_diameter_lemma(decomp: &ChunkDecomposition) -> LemmaReport {
    let mut report = LemmaReport::default();
    for (j, comp) in decomp.components() {
        report.components_checked += 1;
        let set: HashSet<Coord3> = comp.iter().copied().collect();
        let rest: Vec<Coord3> = decomp
            .e(j as usize)
            .iter()
            .copied()
            .filter(|p| !set.contains(p))
            .collect();
        let diam = diameter(&comp);
        let sep = set_distance(&comp, &rest);
        let diam_ok = diam as u128 <= qpow(decomp.q, j);
        let sep_ok = sep.is_none_or(|d| 3 * d as u128 > qpow(decomp.q, j + 1));
        if !(diam_ok && sep_ok) {
            report.violations.push(LemmaViolation {
                level: j,
                component_size: comp.len(),
                diameter: diam,
                separation: sep,
            });
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContainerKind {
    RawBox,
    Container,
    Fattened,
}

/// Axis-aligned box at level `level`, inclusive bounds in site units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Container {
    pub level: u32,
    pub kind: ContainerKind,
    pub lo: Coord3,
    pub hi: Coord3,
}

impl Container {
    pub fn diameter(&self) -> i64 {
        Axis::ALL
            .iter()
            .map(|&a| (self.hi[a] - self.lo[a]) as i64)
            .max()
            .unwrap_or(0)
    }

    pub fn contains(&self, p: Coord3) -> bool {
        Axis::ALL.iter().all(|&a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    /// ℓ∞ gap between two boxes, zero when they overlap.
    pub fn separation(&self, other: &Container) -> i64 {
        Axis::ALL
            .iter()
            .map(|&a| {
                (other.lo[a] - self.hi[a])
                    .max(self.lo[a] - other.hi[a])
                    .max(0) as i64
            })
            .max()
            .unwrap_or(0)
    }

    /// Builds the box of `kind` around a level-`j` component.
    pub fn around(component: &[Coord3], level: u32, kind: ContainerKind, params: &DecoderParams) -> Option<Self> {
        let (lo, hi) = bounding_box(component)?;
        let qj = params.qpow(level);
        let grow = match kind {
            ContainerKind::RawBox => 1,
            ContainerKind::Container => (params.s.saturating_sub(1) as u128 * qj) / 2,
            ContainerKind::Fattened => ((params.s + 1) as u128 * qj) / 2,
        };
        let g = grow.min(i32::MAX as u128 / 4) as i32;
        let d = Coord3::new(g, g, g);
        Some(Container {
            level,
            kind,
            lo: lo - d,
            hi: hi + d,
        })
    }
}

/// Containers of the lower-level box are tethered to the other when they lie
/// within `Δ_j` of each other, `j` being the lower level.
pub fn tethered(a: &Container, b: &Container, params: &DecoderParams) -> bool {
    let j = a.level.min(b.level);
    a.separation(b) as u128 <= params.delta(j)
}

/// One container per `Qʲ`-component of each `F_j`.
pub fn containers(decomp: &ChunkDecomposition, kind: ContainerKind, params: &DecoderParams) -> Vec<Container> {
    decomp
        .components()
        .iter()
        .filter_map(|(j, c)| Container::around(c, *j, kind, params))
        .collect()
}

/// Pairs of distinct same-level containers that are tethered.
pub fn same_level_tethered_pairs(decomp: &ChunkDecomposition, params: &DecoderParams) -> usize {
    let cs = containers(decomp, ContainerKind::Container, params);
    let mut count = 0;
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            if cs[i].level == cs[j].level && tethered(&cs[i], &cs[j], params) {
                count += 1;
            }
        }
    }
    count
}

/// `L³ (3Q)⁻⁶ (3Q·p0)^(2^m)` in extended precision.
pub fn chunk_probability_bound(l: u64, q: u64, p0: f64, m: u32) -> Result<ExtFloat> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidProbability(p0));
    }
    let three_q = ExtFloat::from_u64(3 * q);
    let inv = three_q
        .powi(6)
        .recip()
        .ok_or_else(|| Error::Internal("Q must be positive".into()))?;
    let p = ExtFloat::from_f64(p0).ok_or(Error::InvalidProbability(p0))?;
    let base = three_q.mul(&p);
    Ok(ExtFloat::from_u64(l).powi(3).mul(&inv).mul(&base.pow_pow2(m)))
}

/// The site error rate below which the bound decays with `m`, and the per-qubit
/// rate it implies, next to the quoted figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub q: u64,
    pub qubits_per_site: u32,
    pub p0_threshold: f64,
    pub eps_implied: f64,
    pub eps_quoted: f64,
    pub quoted_over_implied: f64,
    pub p0_at_quoted_eps: f64,
}

pub const QUOTED_EPS_THRESHOLD: f64 = 6e-15;

pub fn threshold_report(q: u64, qubits_per_site: u32) -> Result<ThresholdReport> {
    if qubits_per_site == 0 {
        return Err(Error::ZeroQubitsPerSite);
    }
    let p0 = ExtFloat::from_u64(3 * q).powi(6).recip().map(|v| v.to_f64()).unwrap_or(0.0);
    let n = qubits_per_site as f64;
    let eps_implied = -f64::exp_m1(f64::ln_1p(-p0) / n);
    Ok(ThresholdReport {
        q,
        qubits_per_site,
        p0_threshold: p0,
        eps_implied,
        eps_quoted: QUOTED_EPS_THRESHOLD,
        quoted_over_implied: QUOTED_EPS_THRESHOLD / eps_implied,
        p0_at_quoted_eps: crate::noise::site_error_probability(QUOTED_EPS_THRESHOLD, qubits_per_site)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub size: usize,
    pub diameter: i64,
    pub separation: Option<i64>,
    pub lo: Coord3,
    pub hi: Coord3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: u32,
    pub e_size: usize,
    pub f_size: usize,
    pub components: Vec<ComponentSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub q: u64,
    pub m: Option<usize>,
    pub sites: usize,
    pub levels: Vec<LevelSummary>,
    pub lemma_violations: usize,
    pub same_level_tethered: usize,
}

pub fn decomposition_report(decomp: &ChunkDecomposition, params: &DecoderParams) -> DecompositionReport {
    let mut levels = Vec::new();
    for j in 0..decomp.levels.len() {
        let f = decomp.f(j);
        let e = decomp.e(j);
        let comps = connected_components(&f, qpow(decomp.q, j as u32))
            .into_iter()
            .map(|c| {
                let set: HashSet<Coord3> = c.iter().copied().collect();
                let rest: Vec<Coord3> = e.iter().copied().filter(|p| !set.contains(p)).collect();
                let (lo, hi) = bounding_box(&c).expect("non-empty component");
                ComponentSummary {
                    size: c.len(),
                    diameter: diameter(&c),
                    separation: set_distance(&c, &rest),
                    lo,
                    hi,
                }
            })
            .collect();
        levels.push(LevelSummary {
            level: j as u32,
            e_size: e.len(),
            f_size: f.len(),
            components: comps,
        });
    }
    DecompositionReport {
        q: decomp.q,
        m: decomp.max_level(),
        sites: decomp.e(0).len(),
        levels,
        lemma_violations: verify_diameter_lemma(decomp).violations.len(),
        same_level_tethered: same_level_tethered_pairs(decomp, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force over subsets: level-n chunks as bitmasks.
    fn oracle_levels(pts: &[Coord3], q: u64) -> Vec<Vec<Coord3>> {
        let n = pts.len();
        let diam_of = |mask: u32| -> i64 {
            let v: Vec<Coord3> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| pts[i]).collect();
            diameter(&v)
        };
        let mut levels = Vec::new();
        let mut chunks: Vec<u32> = (0..n).map(|i| 1u32 << i).collect();
        let mut level = 0u32;
        while !chunks.is_empty() {
            let union = chunks.iter().fold(0u32, |a, c| a | c);
            let mut set: Vec<Coord3> = (0..n).filter(|i| union >> i & 1 == 1).map(|i| pts[i]).collect();
            set.sort();
            levels.push(set);
            level += 1;
            let qn = qpow(q, level);
            let mut next = BTreeSet::new();
            for &a in &chunks {
                for &b in &chunks {
                    if a & b == 0 && 2 * diam_of(a | b) as u128 <= qn {
                        next.insert(a | b);
                    }
                }
            }
            chunks = next.into_iter().collect();
        }
        levels
    }

    fn c(x: i32, y: i32, z: i32) -> Coord3 {
        Coord3::new(x, y, z)
    }

    #[test]
    fn small_examples() {
        let d = decompose(&[c(1, 1, 1)], 6).unwrap();
        assert_eq!(d.max_level(), Some(0));
        assert_eq!(d.f(0), vec![c(1, 1, 1)]);
        let d = decompose(&[c(0, 0, 0), c(3, 0, 0)], 6).unwrap();
        assert_eq!(d.max_level(), Some(1));
        let d = decompose(&[c(0, 0, 0), c(4, 0, 0)], 6).unwrap();
        assert_eq!(d.max_level(), Some(0));
        assert_eq!(decompose(&[], 6).unwrap().max_level(), None);
        assert_eq!(decompose(&[c(0, 0, 0)], 5), Err(Error::ChunkScaleTooSmall(5)));
    }

    #[test]
    fn components_boundary() {
        assert!(connected_components(&[], 1).is_empty());
        assert_eq!(connected_components(&[c(0, 0, 0), c(2, 1, 0)], 2).len(), 1);
        assert_eq!(connected_components(&[c(0, 0, 0), c(3, 1, 0)], 2).len(), 2);
    }

    #[test]
    fn two_level_construction() {
        // Two close pairs, far enough apart to only merge at level 2 for Q = 6.
        let pts = [c(0, 0, 0), c(1, 0, 0), c(15, 0, 0), c(16, 0, 0), c(40, 40, 40)];
        let d = decompose(&pts, 6).unwrap();
        assert_eq!(d.max_level(), Some(2));
        assert_eq!(d.e(2).len(), 4);
        assert_eq!(d.f(0), vec![c(40, 40, 40)]);
        assert!(verify_diameter_lemma(&d).holds());
        assert_eq!(d.levels, oracle_levels(&pts, 6));
    }

    #[test]
    fn looser_scale_merges_more() {
        let pts = [c(0, 0, 0), c(4, 0, 0)];
        assert_eq!(decompose(&pts, 6).unwrap().max_level(), Some(0));
        assert_eq!(decompose(&pts, 8).unwrap().max_level(), Some(1));
    }

    #[test]
    fn tethering_boundary() {
        let p = DecoderParams::default();
        assert_eq!(p.min_q_untethered(), 87);
        assert_eq!(p.delta(0), 22);
        let a = Container { level: 0, kind: ContainerKind::Container, lo: c(0, 0, 0), hi: c(0, 0, 0) };
        let at = |x| Container { lo: c(x, 0, 0), hi: c(x, 0, 0), ..a };
        assert!(tethered(&a, &at(22), &p));
        assert!(!tethered(&a, &at(23), &p));
        // Two singletons at the smallest lemma separation have untethered containers.
        let s1 = Container::around(&[c(0, 0, 0)], 0, ContainerKind::Container, &p).unwrap();
        let s2 = Container::around(&[c(30, 0, 0)], 0, ContainerKind::Container, &p).unwrap();
        assert!(s1.diameter() <= 8);
        assert!(!tethered(&s1, &s2, &p));
    }

    #[test]
    fn container_diameters() {
        let p = DecoderParams::default();
        let comp = [c(0, 0, 0), c(87, 3, 0)];
        let b = Container::around(&comp, 1, ContainerKind::RawBox, &p).unwrap();
        assert!(b.diameter() as u128 <= p.qpow(1) + 2);
        let k = Container::around(&comp, 1, ContainerKind::Container, &p).unwrap();
        assert!(k.diameter() as u128 <= 8 * p.qpow(1));
        let f = Container::around(&comp, 1, ContainerKind::Fattened, &p).unwrap();
        assert!(f.diameter() as u128 <= p.fattened_diameter(1));
    }

    #[test]
    fn packing_with_larger_chunks() {
        // Quads at level 2 become vacuous at level 3 for Q = 6 (Q³ = 216).
        let mut pts = Vec::new();
        for base in [0, 15, 30, 45] {
            pts.extend([c(base, 0, 0), c(base + 1, 0, 0), c(base + 15 / 2, 0, 0), c(base + 8, 0, 0)]);
        }
        let d = decompose(&pts, 6).unwrap();
        let o = oracle_levels(&pts, 6);
        assert_eq!(d.levels, o);
    }

    #[test]
    fn overflow_is_reported() {
        let pts: Vec<Coord3> = (0..40).map(|i| c(i, 0, 0)).collect();
        assert!(matches!(decompose_with_cap(&pts, 6, 10), Err(Error::DecompositionOverflow(_))));
    }

    #[test]
    fn bound_examples() {
        assert!(chunk_probability_bound(10, 87, 0.0, 1).unwrap().is_zero());
        let v = chunk_probability_bound(10, 87, 1e-16, 0).unwrap().to_f64();
        let expect = 1e3 * 261f64.powi(-6) * 261.0 * 1e-16;
        assert!((v / expect - 1.0).abs() < 1e-12);
        let r = threshold_report(87, 120).unwrap();
        assert!((r.p0_threshold - 3.163420728016346e-15).abs() < 1e-27);
        assert!((r.eps_implied - 2.636183940013626e-17).abs() < 1e-28);
        assert!(r.quoted_over_implied > 200.0);
    }

    fn arb_points(max: usize, span: i32) -> impl Strategy<Value = Vec<Coord3>> {
        prop::collection::vec((0..span, 0..span, 0..span).prop_map(|(x, y, z)| c(x, y, z)), 0..max)
    }

    proptest! {
        #[test]
        fn matches_oracle(pts in arb_points(9, 30), q in 6u64..12) {
            let mut uniq: Vec<Coord3> = pts.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
            uniq.sort();
            let d = decompose(&uniq, q).unwrap();
            prop_assert_eq!(d.levels, oracle_levels(&uniq, q));
        }

        #[test]
        fn f_partitions_e(pts in arb_points(30, 40), q in 6u64..40) {
            let d = decompose(&pts, q).unwrap();
            let mut all: Vec<Coord3> = (0..d.levels.len()).flat_map(|j| d.f(j)).collect();
            let n = all.len();
            all.sort();
            all.dedup();
            prop_assert_eq!(all.len(), n);
            prop_assert_eq!(&all, &d.levels.first().cloned().unwrap_or_default());
        }

        #[test]
        fn lemma_holds(pts in arb_points(30, 40), q in 6u64..40) {
            let d = decompose(&pts, q).unwrap();
            prop_assert!(verify_diameter_lemma(&d).holds());
        }

        #[test]
        fn larger_q_never_lowers_m(pts in arb_points(20, 40), q in 6u64..30, extra in 1u64..30) {
            let a = decompose(&pts, q).unwrap().max_level();
            let b = decompose(&pts, q + extra).unwrap().max_level();
            prop_assert!(b >= a);
        }
    }
}
