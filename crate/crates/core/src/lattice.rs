//! Cell complexes for the two 3D surface-code families.
//!
//! Both families share one qubit layout: a qubit on every edge of a cubic
//! lattice with `ext[a]` cubes along axis `a`. Entities are addressed by an
//! anchor vertex plus an orientation, so incidence is computed arithmetically.
//!
//! * **Cubic**: stars on vertices, plaquettes on faces, one constraint per cube.
//!   Rough boundaries are realised with dangling edges: vertices and in-plane
//!   edges of a rough lattice face are removed, and stabilizers keep only the
//!   edges that remain.
//! * **Alternative**: cubes are bicoloured in a 3D checkerboard. Primal cubes
//!   carry 12-body X stars, dual cubes carry eight weight-3 Z plaquettes, one per
//!   corner. Constraint cells are the four plaquettes around a vertex and the
//!   eight plaquettes of a dual cube. Rough faces drop the primal stars of the
//!   adjacent cube layer; the edge set is never truncated.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::ops::{Add, Index, IndexMut, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }

    /// The two axes orthogonal to `self`, in increasing order.
    pub fn others(self) -> [Axis; 2] {
        match self {
            Axis::X => [Axis::Y, Axis::Z],
            Axis::Y => [Axis::X, Axis::Z],
            Axis::Z => [Axis::X, Axis::Y],
        }
    }

    pub fn unit(self) -> Coord3 {
        let mut c = Coord3::ZERO;
        c[self] = 1;
        c
    }

    pub fn label(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Some(Axis::X),
            "y" => Some(Axis::Y),
            "z" => Some(Axis::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Integer lattice coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Coord3 {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Coord3 {
    pub const ZERO: Coord3 = Coord3 { x: 0, y: 0, z: 0 };

    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Coord3 { x, y, z }
    }

    /// ℓ∞ distance.
    pub fn linf(self, other: Coord3) -> i32 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    pub fn as_array(self) -> [i32; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [i32; 3]) -> Self {
        Coord3::new(a[0], a[1], a[2])
    }
}

impl Index<Axis> for Coord3 {
    type Output = i32;
    fn index(&self, a: Axis) -> &i32 {
        match a {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }
}

impl IndexMut<Axis> for Coord3 {
    fn index_mut(&mut self, a: Axis) -> &mut i32 {
        match a {
            Axis::X => &mut self.x,
            Axis::Y => &mut self.y,
            Axis::Z => &mut self.z,
        }
    }
}

impl Add for Coord3 {
    type Output = Coord3;
    fn add(self, o: Coord3) -> Coord3 {
        Coord3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Coord3 {
    type Output = Coord3;
    fn sub(self, o: Coord3) -> Coord3 {
        Coord3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl fmt::Display for Coord3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub Coord3);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId(pub Coord3);

/// Edge from `anchor` to `anchor + axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "(i32, i32, i32, Axis)", from = "(i32, i32, i32, Axis)")]
pub struct EdgeId {
    pub anchor: Coord3,
    pub axis: Axis,
}

/// Unit square with lowest corner `anchor`, spanning the two axes orthogonal to `normal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "(i32, i32, i32, Axis)", from = "(i32, i32, i32, Axis)")]
pub struct FaceId {
    pub anchor: Coord3,
    pub normal: Axis,
}

macro_rules! tuple_conv {
    ($t:ident, $field:ident) => {
        impl From<$t> for (i32, i32, i32, Axis) {
            fn from(v: $t) -> Self {
                (v.anchor.x, v.anchor.y, v.anchor.z, v.$field)
            }
        }
        impl From<(i32, i32, i32, Axis)> for $t {
            fn from(t: (i32, i32, i32, Axis)) -> Self {
                $t {
                    anchor: Coord3::new(t.0, t.1, t.2),
                    $field: t.3,
                }
            }
        }
    };
}
tuple_conv!(EdgeId, axis);
tuple_conv!(FaceId, normal);

impl EdgeId {
    pub fn new(anchor: Coord3, axis: Axis) -> Self {
        EdgeId { anchor, axis }
    }

    pub fn endpoints(self) -> [Coord3; 2] {
        [self.anchor, self.anchor + self.axis.unit()]
    }
}

impl FaceId {
    pub fn new(anchor: Coord3, normal: Axis) -> Self {
        FaceId { anchor, normal }
    }

    /// The four boundary edges, before any truncation.
    pub fn raw_edges(self) -> [EdgeId; 4] {
        let [a, b] = self.normal.others();
        let v = self.anchor;
        [
            EdgeId::new(v, a),
            EdgeId::new(v + b.unit(), a),
            EdgeId::new(v, b),
            EdgeId::new(v + a.unit(), b),
        ]
    }
}

impl CellId {
    /// The twelve boundary edges of the unit cube.
    pub fn raw_edges(self) -> Vec<EdgeId> {
        let mut out = Vec::with_capacity(12);
        for axis in Axis::ALL {
            let [a, b] = axis.others();
            for (da, db) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let mut off = Coord3::ZERO;
                off[a] = da;
                off[b] = db;
                out.push(EdgeId::new(self.0 + off, axis));
            }
        }
        out
    }

    pub fn raw_faces(self) -> [FaceId; 6] {
        let c = self.0;
        [
            FaceId::new(c, Axis::X),
            FaceId::new(c + Axis::X.unit(), Axis::X),
            FaceId::new(c, Axis::Y),
            FaceId::new(c + Axis::Y.unit(), Axis::Y),
            FaceId::new(c, Axis::Z),
            FaceId::new(c + Axis::Z.unit(), Axis::Z),
        ]
    }

    pub fn corners(self) -> [VertexId; 8] {
        let c = self.0;
        let mut out = [VertexId(c); 8];
        for (i, slot) in out.iter_mut().enumerate() {
            let i = i as i32;
            *slot = VertexId(c + Coord3::new(i & 1, (i >> 1) & 1, (i >> 2) & 1));
        }
        out
    }

    /// Checkerboard colouring used by the alternative lattice.
    pub fn is_primal(self) -> bool {
        (self.0.x + self.0.y + self.0.z).rem_euclid(2) == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LatticeKind {
    Cubic,
    Alternative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryType {
    Rough,
    Smooth,
}

/// One of the six faces of the lattice block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockFace {
    pub axis: Axis,
    pub upper: bool,
}

impl BlockFace {
    pub const ALL: [BlockFace; 6] = [
        BlockFace { axis: Axis::X, upper: false },
        BlockFace { axis: Axis::X, upper: true },
        BlockFace { axis: Axis::Y, upper: false },
        BlockFace { axis: Axis::Y, upper: true },
        BlockFace { axis: Axis::Z, upper: false },
        BlockFace { axis: Axis::Z, upper: true },
    ];

    fn slot(self) -> usize {
        2 * self.axis.index() + self.upper as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySpec {
    faces: [BoundaryType; 6],
}

impl BoundarySpec {
    /// Rough on both faces normal to `axis`, smooth elsewhere.
    pub fn rough_along(axis: Axis) -> Self {
        let mut faces = [BoundaryType::Smooth; 6];
        faces[2 * axis.index()] = BoundaryType::Rough;
        faces[2 * axis.index() + 1] = BoundaryType::Rough;
        BoundarySpec { faces }
    }

    pub fn from_faces(assign: &[(BlockFace, BoundaryType)]) -> Self {
        let mut faces = [BoundaryType::Smooth; 6];
        for (f, t) in assign {
            faces[f.slot()] = *t;
        }
        BoundarySpec { faces }
    }

    pub fn get(&self, face: BlockFace) -> BoundaryType {
        self.faces[face.slot()]
    }

    /// The axis normal to the two rough faces.
    pub fn rough_axis(&self) -> Result<Axis> {
        let rough: Vec<BlockFace> = BlockFace::ALL
            .into_iter()
            .filter(|f| self.get(*f) == BoundaryType::Rough)
            .collect();
        match rough.as_slice() {
            [a, b] if a.axis == b.axis => Ok(a.axis),
            [_, _] => Err(Error::InvalidBoundary("rough faces are adjacent".into())),
            other => Err(Error::InvalidBoundary(format!(
                "{} rough faces",
                other.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliType {
    X,
    Z,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerSupport {
    pub pauli: PauliType,
    pub edges: Vec<EdgeId>,
}

impl StabilizerSupport {
    pub fn weight(&self) -> usize {
        self.edges.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StarSite {
    Vertex(VertexId),
    Cube(CellId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlaquetteSite {
    Face(FaceId),
    CubeCorner { cell: CellId, vertex: VertexId },
}

impl fmt::Display for PlaquetteSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlaquetteSite::Face(fc) => write!(f, "face{}{}", fc.anchor, fc.normal),
            PlaquetteSite::CubeCorner { cell, vertex } => {
                write!(f, "corner{}@{}", cell.0, vertex.0)
            }
        }
    }
}

/// A closed set of plaquettes whose product is the identity in the bulk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintCell {
    Cube(CellId),
    Vertex(VertexId),
}

impl ConstraintCell {
    /// Position on the doubled grid: vertices at even, cube centres at odd coordinates.
    pub fn doubled_position(self) -> Coord3 {
        match self {
            ConstraintCell::Cube(c) => {
                Coord3::new(2 * c.0.x + 1, 2 * c.0.y + 1, 2 * c.0.z + 1)
            }
            ConstraintCell::Vertex(v) => Coord3::new(2 * v.0.x, 2 * v.0.y, 2 * v.0.z),
        }
    }

    pub fn kind_label(self) -> &'static str {
        match self {
            ConstraintCell::Cube(_) => "cube",
            ConstraintCell::Vertex(_) => "vertex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KindCombination {
    CubicOnly,
    AlternativeOnly,
    FullTripleOverlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitCellCounts {
    pub data_qubits: u32,
    pub ancilla_qubits: u32,
    pub total: u32,
}

/// Qubits per 2×2×2 unit cell of the layered cluster state.
pub fn unit_cell_counts(combo: KindCombination) -> UnitCellCounts {
    const CUBES: u32 = 8;
    const EDGES_PER_CUBE: u32 = 3;
    const FACES_PER_CUBE: u32 = 3;
    const DUAL_CUBES: u32 = 4;
    const CORNERS: u32 = 8;
    let data = CUBES * EDGES_PER_CUBE;
    let cubic = UnitCellCounts {
        data_qubits: data,
        ancilla_qubits: CUBES * FACES_PER_CUBE,
        total: data + CUBES * FACES_PER_CUBE,
    };
    let alt = UnitCellCounts {
        data_qubits: data,
        ancilla_qubits: DUAL_CUBES * CORNERS,
        total: data + DUAL_CUBES * CORNERS,
    };
    match combo {
        KindCombination::CubicOnly => cubic,
        KindCombination::AlternativeOnly => alt,
        KindCombination::FullTripleOverlap => UnitCellCounts {
            data_qubits: cubic.data_qubits + 2 * alt.data_qubits,
            ancilla_qubits: cubic.ancilla_qubits + 2 * alt.ancilla_qubits,
            total: cubic.total + 2 * alt.total,
        },
    }
}

#[derive(Debug, Clone)]
pub struct Plaquette {
    pub site: PlaquetteSite,
    pub edges: Vec<EdgeId>,
}

#[derive(Debug, Clone)]
pub struct Star {
    pub site: StarSite,
    pub edges: Vec<EdgeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    Bulk,
    Rough,
    Smooth,
}

impl BoundaryTag {
    pub fn label(self) -> &'static str {
        match self {
            BoundaryTag::Bulk => "bulk",
            BoundaryTag::Rough => "rough",
            BoundaryTag::Smooth => "smooth",
        }
    }
}

/// Entity counts of a geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCounts {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub cells: usize,
}

/// Counts for an untruncated block of `n[0] × n[1] × n[2]` unit cubes.
pub fn block_counts(n: [i64; 3]) -> EntityCounts {
    let v: i64 = n.iter().map(|k| k + 1).product();
    let mut edges = 0;
    let mut faces = 0;
    for a in 0..3 {
        let mut e = 1;
        let mut f = 1;
        for (b, &nb) in n.iter().enumerate() {
            e *= if a == b { nb } else { nb + 1 };
            f *= if a == b { nb + 1 } else { nb };
        }
        edges += e;
        faces += f;
    }
    EntityCounts {
        vertices: v as usize,
        edges: edges as usize,
        faces: faces as usize,
        cells: n.iter().product::<i64>() as usize,
    }
}

/// Indexed 3D cell complex. Immutable once built.
#[derive(Debug, Clone)]
pub struct LatticeGeometry {
    kind: LatticeKind,
    size: i32,
    boundary: BoundarySpec,
    rough_axis: Axis,
    time_axis: Axis,
    ext: [i32; 3],
    edges: Vec<EdgeId>,
    edge_slots: Vec<u32>,
    plaquettes: Vec<Plaquette>,
    plaquette_lookup: HashMap<PlaquetteSite, u32>,
    edge_plaquettes: Vec<Vec<u32>>,
    stars: Vec<Star>,
    star_lookup: HashMap<StarSite, u32>,
    cells: Vec<ConstraintCell>,
    cell_lookup: HashMap<ConstraintCell, u32>,
    cell_plaquettes: Vec<Vec<u32>>,
    plaquette_cells: Vec<Vec<u32>>,
}

const NONE: u32 = u32::MAX;

/// Builds a geometry with the time axis as long as the spatial axes.
pub fn build_lattice(kind: LatticeKind, size: i32, boundary: BoundarySpec) -> Result<LatticeGeometry> {
    LatticeGeometry::new(kind, size, size, boundary)
}

impl LatticeGeometry {
    /// `size` cubes along the spatial axes and `time_extent` cubes along the
    /// time axis, which is the first smooth axis.
    pub fn new(kind: LatticeKind, size: i32, time_extent: i32, boundary: BoundarySpec) -> Result<Self> {
        if size < 2 {
            return Err(Error::LatticeTooSmall(size));
        }
        if time_extent < 1 {
            return Err(Error::TimeExtentTooSmall(time_extent));
        }
        let rough_axis = boundary.rough_axis()?;
        let time_axis = rough_axis.others()[0];
        let mut ext = [size; 3];
        ext[time_axis.index()] = time_extent;
        let mut g = LatticeGeometry {
            kind,
            size,
            boundary,
            rough_axis,
            time_axis,
            ext,
            edges: Vec::new(),
            edge_slots: Vec::new(),
            plaquettes: Vec::new(),
            plaquette_lookup: HashMap::new(),
            edge_plaquettes: Vec::new(),
            stars: Vec::new(),
            star_lookup: HashMap::new(),
            cells: Vec::new(),
            cell_lookup: HashMap::new(),
            cell_plaquettes: Vec::new(),
            plaquette_cells: Vec::new(),
        };
        g.index_edges();
        match kind {
            LatticeKind::Cubic => g.build_cubic(),
            LatticeKind::Alternative => g.build_alternative(),
        }
        g.finish_incidence();
        Ok(g)
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }
    pub fn size(&self) -> i32 {
        self.size
    }
    pub fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }
    pub fn rough_axis(&self) -> Axis {
        self.rough_axis
    }
    pub fn time_axis(&self) -> Axis {
        self.time_axis
    }
    /// The in-slice smooth axis (orthogonal to both time and rough axes).
    pub fn smooth_space_axis(&self) -> Axis {
        let [a, b] = self.time_axis.others();
        if a == self.rough_axis {
            b
        } else {
            a
        }
    }
    /// Number of unit cubes along `axis`.
    pub fn extent(&self, axis: Axis) -> i32 {
        self.ext[axis.index()]
    }
    pub fn time_extent(&self) -> i32 {
        self.extent(self.time_axis)
    }

    fn in_vertex_box(&self, v: Coord3) -> bool {
        Axis::ALL
            .iter()
            .all(|&a| v[a] >= 0 && v[a] <= self.ext[a.index()])
    }

    fn on_rough_plane(&self, v: Coord3) -> bool {
        let r = self.rough_axis;
        v[r] == 0 || v[r] == self.ext[r.index()]
    }

    fn slot(&self, v: Coord3, axis: Axis) -> usize {
        let n = [self.ext[0] + 1, self.ext[1] + 1, self.ext[2] + 1];
        (((axis.index() as i32 * n[0] + v.x) * n[1] + v.y) * n[2] + v.z) as usize
    }

    fn edge_exists_raw(&self, e: EdgeId) -> bool {
        let [p, q] = e.endpoints();
        if !self.in_vertex_box(p) || !self.in_vertex_box(q) {
            return false;
        }
        match self.kind {
            LatticeKind::Alternative => true,
            LatticeKind::Cubic => {
                let r = self.rough_axis;
                !(e.axis != r && self.on_rough_plane(p))
            }
        }
    }

    fn index_edges(&mut self) {
        let n = [self.ext[0] + 1, self.ext[1] + 1, self.ext[2] + 1];
        self.edge_slots = vec![NONE; (3 * n[0] * n[1] * n[2]) as usize];
        for axis in Axis::ALL {
            for x in 0..n[0] {
                for y in 0..n[1] {
                    for z in 0..n[2] {
                        let e = EdgeId::new(Coord3::new(x, y, z), axis);
                        if self.edge_exists_raw(e) {
                            let s = self.slot(e.anchor, axis);
                            self.edge_slots[s] = self.edges.len() as u32;
                            self.edges.push(e);
                        }
                    }
                }
            }
        }
    }

    /// Dense index of an edge, if present in the complex.
    pub fn edge_index(&self, e: EdgeId) -> Option<usize> {
        if !self.in_vertex_box(e.anchor) {
            return None;
        }
        match self.edge_slots[self.slot(e.anchor, e.axis)] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edge_index(e).is_some()
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    fn present(&self, raw: impl IntoIterator<Item = EdgeId>) -> Vec<EdgeId> {
        raw.into_iter().filter(|e| self.has_edge(*e)).collect()
    }

    fn all_cells(&self) -> impl Iterator<Item = CellId> + '_ {
        let e = self.ext;
        (0..e[0]).flat_map(move |x| {
            (0..e[1]).flat_map(move |y| (0..e[2]).map(move |z| CellId(Coord3::new(x, y, z))))
        })
    }

    pub fn contains_cell(&self, c: CellId) -> bool {
        Axis::ALL
            .iter()
            .all(|&a| c.0[a] >= 0 && c.0[a] < self.ext[a.index()])
    }

    fn push_plaquette(&mut self, site: PlaquetteSite, edges: Vec<EdgeId>) {
        if edges.is_empty() {
            return;
        }
        self.plaquette_lookup.insert(site, self.plaquettes.len() as u32);
        self.plaquettes.push(Plaquette { site, edges });
    }

    fn push_star(&mut self, site: StarSite, edges: Vec<EdgeId>) {
        if edges.is_empty() {
            return;
        }
        self.star_lookup.insert(site, self.stars.len() as u32);
        self.stars.push(Star { site, edges });
    }

    fn build_cubic(&mut self) {
        let n = self.ext;
        for normal in Axis::ALL {
            for x in 0..=n[0] {
                for y in 0..=n[1] {
                    for z in 0..=n[2] {
                        let f = FaceId::new(Coord3::new(x, y, z), normal);
                        let [a, b] = normal.others();
                        let far = f.anchor + a.unit() + b.unit();
                        if !self.in_vertex_box(far) {
                            continue;
                        }
                        let edges = self.present(f.raw_edges());
                        self.push_plaquette(PlaquetteSite::Face(f), edges);
                    }
                }
            }
        }
        for x in 0..=n[0] {
            for y in 0..=n[1] {
                for z in 0..=n[2] {
                    let v = Coord3::new(x, y, z);
                    if self.on_rough_plane(v) {
                        continue;
                    }
                    let edges = self.cubic_vertex_edges(v);
                    self.push_star(StarSite::Vertex(VertexId(v)), edges);
                }
            }
        }
        let cells: Vec<CellId> = self.all_cells().collect();
        for c in cells {
            let plaqs: Vec<u32> = c
                .raw_faces()
                .iter()
                .filter_map(|f| self.plaquette_lookup.get(&PlaquetteSite::Face(*f)).copied())
                .collect();
            self.push_cell_if_closed(ConstraintCell::Cube(c), plaqs);
        }
    }

    fn cubic_vertex_edges(&self, v: Coord3) -> Vec<EdgeId> {
        let mut raw = Vec::with_capacity(6);
        for a in Axis::ALL {
            raw.push(EdgeId::new(v, a));
            raw.push(EdgeId::new(v - a.unit(), a));
        }
        self.present(raw)
    }

    fn corner_edges(&self, c: CellId, v: VertexId) -> Vec<EdgeId> {
        let mut raw = Vec::with_capacity(3);
        for a in Axis::ALL {
            if v.0[a] == c.0[a] {
                raw.push(EdgeId::new(v.0, a));
            } else {
                raw.push(EdgeId::new(v.0 - a.unit(), a));
            }
        }
        self.present(raw)
    }

    fn build_alternative(&mut self) {
        let r = self.rough_axis;
        let cells: Vec<CellId> = self.all_cells().collect();
        for &c in &cells {
            if c.is_primal() {
                continue;
            }
            for v in c.corners() {
                let edges = self.corner_edges(c, v);
                self.push_plaquette(PlaquetteSite::CubeCorner { cell: c, vertex: v }, edges);
            }
        }
        for &c in &cells {
            if !c.is_primal() {
                continue;
            }
            if c.0[r] == 0 || c.0[r] == self.ext[r.index()] - 1 {
                continue;
            }
            let edges = self.present(c.raw_edges());
            self.push_star(StarSite::Cube(c), edges);
        }
        // Vertex cells: the corner plaquettes of every dual cube touching v.
        let n = self.ext;
        for x in 0..=n[0] {
            for y in 0..=n[1] {
                for z in 0..=n[2] {
                    let v = VertexId(Coord3::new(x, y, z));
                    let mut plaqs = Vec::new();
                    for i in 0..8 {
                        let off = Coord3::new(i & 1, (i >> 1) & 1, (i >> 2) & 1);
                        let c = CellId(v.0 - off);
                        if !self.contains_cell(c) || c.is_primal() {
                            continue;
                        }
                        let site = PlaquetteSite::CubeCorner { cell: c, vertex: v };
                        if let Some(&p) = self.plaquette_lookup.get(&site) {
                            plaqs.push(p);
                        }
                    }
                    self.push_cell_if_closed(ConstraintCell::Vertex(v), plaqs);
                }
            }
        }
        for &c in &cells {
            if c.is_primal() {
                continue;
            }
            let plaqs: Vec<u32> = c
                .corners()
                .iter()
                .filter_map(|v| {
                    self.plaquette_lookup
                        .get(&PlaquetteSite::CubeCorner { cell: c, vertex: *v })
                        .copied()
                })
                .collect();
            self.push_cell_if_closed(ConstraintCell::Cube(c), plaqs);
        }
    }

    /// Keeps a cell as a constraint only if its plaquettes multiply to identity.
    /// Open cells sit on boundaries where strings may terminate.
    fn push_cell_if_closed(&mut self, cell: ConstraintCell, plaqs: Vec<u32>) {
        if plaqs.is_empty() {
            return;
        }
        let mut acc: HashMap<EdgeId, u8> = HashMap::new();
        for &p in &plaqs {
            for e in &self.plaquettes[p as usize].edges {
                *acc.entry(*e).or_default() ^= 1;
            }
        }
        if acc.values().any(|&b| b == 1) {
            return;
        }
        self.cell_lookup.insert(cell, self.cells.len() as u32);
        self.cells.push(cell);
        self.cell_plaquettes.push(plaqs);
    }

    fn finish_incidence(&mut self) {
        self.edge_plaquettes = vec![Vec::new(); self.edges.len()];
        for (pi, p) in self.plaquettes.iter().enumerate() {
            for e in &p.edges {
                let i = self.edge_slots[self.slot(e.anchor, e.axis)] as usize;
                self.edge_plaquettes[i].push(pi as u32);
            }
        }
        self.plaquette_cells = vec![Vec::new(); self.plaquettes.len()];
        for (ci, plaqs) in self.cell_plaquettes.iter().enumerate() {
            for &p in plaqs {
                self.plaquette_cells[p as usize].push(ci as u32);
            }
        }
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }
    pub fn plaquette_index(&self, site: PlaquetteSite) -> Option<usize> {
        self.plaquette_lookup.get(&site).map(|&i| i as usize)
    }
    pub fn face_index(&self, f: FaceId) -> Option<usize> {
        self.plaquette_index(PlaquetteSite::Face(f))
    }
    pub fn stars(&self) -> &[Star] {
        &self.stars
    }
    pub fn star_index(&self, site: StarSite) -> Option<usize> {
        self.star_lookup.get(&site).map(|&i| i as usize)
    }
    pub fn constraint_cells(&self) -> &[ConstraintCell] {
        &self.cells
    }
    pub fn cell_index(&self, c: ConstraintCell) -> Option<usize> {
        self.cell_lookup.get(&c).map(|&i| i as usize)
    }
    /// Plaquette indices of constraint cell `ci`.
    pub fn cell_plaquette_indices(&self, ci: usize) -> &[u32] {
        &self.cell_plaquettes[ci]
    }
    /// Constraint cells bordering plaquette `pi` (0, 1 or 2 of them).
    pub fn plaquette_cell_indices(&self, pi: usize) -> &[u32] {
        &self.plaquette_cells[pi]
    }
    /// Plaquettes containing edge `ei`.
    pub fn edge_plaquette_indices(&self, ei: usize) -> &[u32] {
        &self.edge_plaquettes[ei]
    }

    pub fn star_support(&self, site: StarSite) -> Result<StabilizerSupport> {
        match (self.kind, site) {
            (LatticeKind::Cubic, StarSite::Vertex(_))
            | (LatticeKind::Alternative, StarSite::Cube(_)) => {}
            _ => return Err(Error::NotAStarSite(format!("{site:?}"))),
        }
        let i = self
            .star_index(site)
            .ok_or_else(|| Error::NotAStarSite(format!("{site:?}")))?;
        Ok(StabilizerSupport {
            pauli: PauliType::X,
            edges: self.stars[i].edges.clone(),
        })
    }

    pub fn plaquette_support(&self, site: PlaquetteSite) -> Result<StabilizerSupport> {
        if let PlaquetteSite::CubeCorner { cell, vertex } = site {
            let corner = cell.corners().contains(&vertex);
            if self.kind != LatticeKind::Alternative || !corner || cell.is_primal() {
                return Err(Error::NotAPlaquetteSite(site.to_string()));
            }
        } else if self.kind != LatticeKind::Cubic {
            return Err(Error::NotAPlaquetteSite(site.to_string()));
        }
        let i = self
            .plaquette_index(site)
            .ok_or_else(|| Error::NotAPlaquetteSite(site.to_string()))?;
        Ok(StabilizerSupport {
            pauli: PauliType::Z,
            edges: self.plaquettes[i].edges.clone(),
        })
    }

    pub fn cell_plaquettes(&self, cell: ConstraintCell) -> Result<Vec<PlaquetteSite>> {
        let ci = self
            .cell_index(cell)
            .ok_or_else(|| Error::NotAConstraintCell(format!("{cell:?}")))?;
        Ok(self.cell_plaquettes[ci]
            .iter()
            .map(|&p| self.plaquettes[p as usize].site)
            .collect())
    }

    pub fn entity_counts(&self) -> EntityCounts {
        let n = self.ext;
        let mut vertices = 0;
        for x in 0..=n[0] {
            for y in 0..=n[1] {
                for z in 0..=n[2] {
                    let v = Coord3::new(x, y, z);
                    if self.kind == LatticeKind::Alternative || !self.on_rough_plane(v) {
                        vertices += 1;
                    }
                }
            }
        }
        EntityCounts {
            vertices,
            edges: self.edges.len(),
            faces: self.plaquettes.len(),
            cells: self.all_cells().count(),
        }
    }

    fn tag_for_planes(&self, on_plane: impl Fn(BlockFace) -> bool) -> BoundaryTag {
        let mut tag = BoundaryTag::Bulk;
        for f in BlockFace::ALL {
            if on_plane(f) {
                match self.boundary.get(f) {
                    BoundaryType::Rough => return BoundaryTag::Rough,
                    BoundaryType::Smooth => tag = BoundaryTag::Smooth,
                }
            }
        }
        tag
    }

    fn plane_value(&self, f: BlockFace) -> i32 {
        if f.upper {
            self.ext[f.axis.index()]
        } else {
            0
        }
    }

    pub fn edge_tag(&self, e: EdgeId) -> BoundaryTag {
        self.tag_for_planes(|f| f.axis != e.axis && e.anchor[f.axis] == self.plane_value(f))
    }

    pub fn face_tag(&self, f: FaceId) -> BoundaryTag {
        self.tag_for_planes(|bf| bf.axis == f.normal && f.anchor[bf.axis] == self.plane_value(bf))
    }

    pub fn cell_tag(&self, c: CellId) -> BoundaryTag {
        self.tag_for_planes(|bf| {
            let last = if bf.upper { self.ext[bf.axis.index()] - 1 } else { 0 };
            c.0[bf.axis] == last
        })
    }

    pub fn vertex_tag(&self, v: VertexId) -> BoundaryTag {
        self.tag_for_planes(|bf| v.0[bf.axis] == self.plane_value(bf))
    }

    /// Writes one line per entity: `<type> <x> <y> <z> <orientation> <boundary-tag>`.
    pub fn dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.ext;
        for x in 0..=n[0] {
            for y in 0..=n[1] {
                for z in 0..=n[2] {
                    let v = VertexId(Coord3::new(x, y, z));
                    if self.kind == LatticeKind::Cubic && self.on_rough_plane(v.0) {
                        continue;
                    }
                    writeln!(out, "vertex {x} {y} {z} - {}", self.vertex_tag(v).label())?;
                }
            }
        }
        for e in &self.edges {
            let a = e.anchor;
            writeln!(out, "edge {} {} {} {} {}", a.x, a.y, a.z, e.axis, self.edge_tag(*e).label())?;
        }
        for p in &self.plaquettes {
            match p.site {
                PlaquetteSite::Face(f) => {
                    let a = f.anchor;
                    writeln!(out, "face {} {} {} {} {}", a.x, a.y, a.z, f.normal, self.face_tag(f).label())?;
                }
                PlaquetteSite::CubeCorner { cell, vertex } => {
                    let a = cell.0;
                    let d = vertex.0 - cell.0;
                    writeln!(
                        out,
                        "corner {} {} {} {}{}{} {}",
                        a.x,
                        a.y,
                        a.z,
                        d.x,
                        d.y,
                        d.z,
                        self.vertex_tag(vertex).label()
                    )?;
                }
            }
        }
        for c in self.all_cells() {
            let a = c.0;
            let orient = match self.kind {
                LatticeKind::Cubic => "-",
                LatticeKind::Alternative if c.is_primal() => "primal",
                LatticeKind::Alternative => "dual",
            };
            writeln!(out, "cell {} {} {} {} {}", a.x, a.y, a.z, orient, self.cell_tag(c).label())?;
        }
        Ok(())
    }
}
