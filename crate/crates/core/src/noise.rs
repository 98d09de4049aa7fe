//! I.i.d. Pauli noise over the spacetime lattice and its grouping into sites.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Axis, Coord3, EdgeId, LatticeGeometry, LatticeKind, PlaquetteSite};

/// Paper value for the number of qubits per site used in the threshold arithmetic.
pub const QUBITS_PER_SITE_THRESHOLD: u32 = 120;
/// Qubits in one unit cell when all three codes overlap.
pub const QUBITS_PER_UNIT_CELL: u32 = 160;

/// Independent random streams drawn within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Errors = 0,
    Gauge = 1,
    Prefix = 2,
    Partner = 3,
    Planted = 4,
}

/// Counter-based generator for `(seed, trial, stream)`. Streams never overlap.
pub fn trial_rng(seed: u64, trial: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng.set_word_pos((stream as u128) << 64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub eps: f64,
    pub seed: u64,
    pub qubits_per_site: u32,
}

impl NoiseParams {
    pub fn new(eps: f64, seed: u64) -> Result<Self> {
        check_probability(eps)?;
        Ok(NoiseParams {
            eps,
            seed,
            qubits_per_site: QUBITS_PER_SITE_THRESHOLD,
        })
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// A flipped plaquette outcome. The time index is the plaquette's coordinate
/// along the geometry's time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MeasFlip(pub PlaquetteSite, pub i32);

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorSet {
    #[serde(rename = "data")]
    pub data_flips: BTreeSet<EdgeId>,
    #[serde(rename = "meas")]
    pub meas_flips: BTreeSet<MeasFlip>,
}

impl ErrorSet {
    pub fn is_empty(&self) -> bool {
        self.data_flips.is_empty() && self.meas_flips.is_empty()
    }

    pub fn len(&self) -> usize {
        self.data_flips.len() + self.meas_flips.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Time coordinate of a plaquette.
pub fn plaquette_time(geom: &LatticeGeometry, site: PlaquetteSite) -> i32 {
    plaquette_anchor(site)[geom.time_axis()]
}

pub fn plaquette_anchor(site: PlaquetteSite) -> Coord3 {
    match site {
        PlaquetteSite::Face(f) => f.anchor,
        PlaquetteSite::CubeCorner { cell, .. } => cell.0,
    }
}

/// Edges of the incoming code's layer, which are not part of the sampled
/// spacetime for the cubic lattice.
pub fn in_initial_plane(geom: &LatticeGeometry, e: EdgeId) -> bool {
    let t = geom.time_axis();
    geom.kind() == LatticeKind::Cubic && e.axis != t && e.anchor[t] == 0
}

/// Samples data flips on every spacetime edge outside the initial plane and a
/// flip on every plaquette outcome, each with probability `eps`.
pub fn sample_errors(geom: &LatticeGeometry, params: &NoiseParams, trial: u64) -> Result<ErrorSet> {
    check_probability(params.eps)?;
    let mut rng = trial_rng(params.seed, trial, Stream::Errors);
    Ok(sample_with(geom, params.eps, &mut rng))
}

pub fn sample_with<R: Rng>(geom: &LatticeGeometry, eps: f64, rng: &mut R) -> ErrorSet {
    let mut out = ErrorSet::default();
    for &e in geom.edges() {
        if in_initial_plane(geom, e) {
            continue;
        }
        if rng.random_bool(eps) {
            out.data_flips.insert(e);
        }
    }
    for p in geom.plaquettes() {
        if rng.random_bool(eps) {
            out.meas_flips.insert(MeasFlip(p.site, plaquette_time(geom, p.site)));
        }
    }
    out
}

/// Independent flips on every edge of `geom`.
pub fn sample_edge_flips<R: Rng>(geom: &LatticeGeometry, eps: f64, rng: &mut R) -> BTreeSet<EdgeId> {
    geom.edges()
        .iter()
        .copied()
        .filter(|_| rng.random_bool(eps))
        .collect()
}

/// `1 - (1 - eps)^n`, evaluated without cancellation for small `eps`.
pub fn site_error_probability(eps: f64, n: u32) -> Result<f64> {
    check_probability(eps)?;
    if n == 0 {
        return Err(Error::ZeroQubitsPerSite);
    }
    if eps == 1.0 {
        return Ok(1.0);
    }
    Ok(-f64::exp_m1(n as f64 * f64::ln_1p(-eps)))
}

/// Groups lattice entities into cubic sites of side `side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteGrid {
    pub side: i32,
    max: Coord3,
}

impl SiteGrid {
    pub fn new(geom: &LatticeGeometry, side: i32) -> Self {
        let side = side.max(1);
        let mut max = Coord3::ZERO;
        for a in Axis::ALL {
            max[a] = (geom.extent(a) - 1).max(0).div_euclid(side);
        }
        SiteGrid { side, max }
    }

    /// Sites along each axis.
    pub fn dims(&self) -> Coord3 {
        Coord3::new(self.max.x + 1, self.max.y + 1, self.max.z + 1)
    }

    /// Site holding the entity whose lowest corner is `anchor`.
    pub fn site_of(&self, anchor: Coord3) -> Coord3 {
        let mut s = Coord3::ZERO;
        for a in Axis::ALL {
            s[a] = anchor[a].div_euclid(self.side).clamp(0, self.max[a]);
        }
        s
    }
}

/// Sites containing at least one flipped qubit.
pub fn to_sites(errors: &ErrorSet, grid: &SiteGrid) -> BTreeSet<Coord3> {
    errors
        .data_flips
        .iter()
        .map(|e| grid.site_of(e.anchor))
        .chain(
            errors
                .meas_flips
                .iter()
                .map(|m| grid.site_of(plaquette_anchor(m.0))),
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, BoundarySpec, FaceId};

    fn geom(l: i32) -> LatticeGeometry {
        build_lattice(LatticeKind::Cubic, l, BoundarySpec::rough_along(Axis::Z)).unwrap()
    }

    fn sample_size(g: &LatticeGeometry) -> usize {
        g.edges().iter().filter(|e| !in_initial_plane(g, **e)).count() + g.plaquettes().len()
    }

    #[test]
    fn extremes() {
        let g = geom(3);
        let none = sample_errors(&g, &NoiseParams::new(0.0, 1).unwrap(), 0).unwrap();
        assert!(none.is_empty());
        let all = sample_errors(&g, &NoiseParams::new(1.0, 1).unwrap(), 0).unwrap();
        assert_eq!(all.len(), sample_size(&g));
        assert!(NoiseParams::new(1.5, 0).is_err());
    }

    #[test]
    fn deterministic_per_trial() {
        let g = geom(4);
        let p = NoiseParams::new(0.2, 99).unwrap();
        let a = sample_errors(&g, &p, 7).unwrap();
        assert_eq!(a, sample_errors(&g, &p, 7).unwrap());
        assert_ne!(a, sample_errors(&g, &p, 8).unwrap());
    }

    #[test]
    fn flip_count_is_binomial() {
        let g = geom(4);
        let n = sample_size(&g) as f64;
        let p = NoiseParams::new(0.1, 5).unwrap();
        let trials = 1000;
        let total: usize = (0..trials)
            .map(|t| sample_errors(&g, &p, t).unwrap().len())
            .sum();
        let mean = n * 0.1 * trials as f64;
        let sigma = (n * 0.1 * 0.9 * trials as f64).sqrt();
        assert!((total as f64 - mean).abs() < 5.0 * sigma);
    }

    #[test]
    fn site_probability() {
        assert_eq!(site_error_probability(0.0, 120).unwrap(), 0.0);
        assert!((site_error_probability(0.3, 1).unwrap() - 0.3).abs() < 1e-15);
        let p = site_error_probability(0.01, 120).unwrap();
        assert!((p - (1.0 - 0.99f64.powi(120))).abs() < 1e-12);
        assert!((p - 0.7006).abs() < 1e-3);
        assert_eq!(site_error_probability(0.1, 0), Err(Error::ZeroQubitsPerSite));
    }

    #[test]
    fn site_frequency_converges() {
        // Sites of side 1 each hold the same fixed set of qubits in the bulk;
        // count a single bulk site.
        let g = geom(4);
        let grid = SiteGrid::new(&g, 1);
        let site = Coord3::new(1, 1, 1);
        let members = g.edges().iter().filter(|e| grid.site_of(e.anchor) == site).count()
            + g
                .plaquettes()
                .iter()
                .filter(|p| grid.site_of(plaquette_anchor(p.site)) == site)
                .count();
        let eps = 0.005;
        let expected = site_error_probability(eps, members as u32).unwrap();
        let params = NoiseParams::new(eps, 11).unwrap();
        let n = 10_000;
        let hits = (0..n)
            .filter(|&t| to_sites(&sample_errors(&g, &params, t).unwrap(), &grid).contains(&site))
            .count() as f64;
        let sigma = (n as f64 * expected * (1.0 - expected)).sqrt();
        assert!((hits - n as f64 * expected).abs() < 5.0 * sigma);
    }

    #[test]
    fn sites_use_set_semantics() {
        let g = geom(4);
        let grid = SiteGrid::new(&g, 2);
        let mut e = ErrorSet::default();
        assert!(to_sites(&e, &grid).is_empty());
        e.data_flips.insert(EdgeId::new(Coord3::new(2, 3, 1), Axis::Y));
        assert_eq!(to_sites(&e, &grid).into_iter().collect::<Vec<_>>(), vec![Coord3::new(1, 1, 0)]);
        e.data_flips.insert(EdgeId::new(Coord3::new(3, 2, 0), Axis::Z));
        assert_eq!(to_sites(&e, &grid).len(), 1);
        // Entities on the upper vertex plane fold into the last site.
        assert_eq!(grid.site_of(Coord3::new(4, 4, 4)), Coord3::new(1, 1, 1));
    }

    #[test]
    fn json_round_trip() {
        let mut e = ErrorSet::default();
        e.data_flips.insert(EdgeId::new(Coord3::new(1, 2, 3), Axis::X));
        let f = FaceId::new(Coord3::new(2, 0, 1), Axis::Y);
        e.meas_flips.insert(MeasFlip(PlaquetteSite::Face(f), 2));
        let s = e.to_json().unwrap();
        assert!(s.starts_with("{\"data\":"));
        assert_eq!(ErrorSet::from_json(&s).unwrap(), e);
    }
}
