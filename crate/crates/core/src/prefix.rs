//! Prefixing of the initial face: a global decode of a slab of plaquette
//! measurement history that ends on the initial face of the main volume.
//!
//! The slab shares the main geometry's spatial extent and boundaries; its
//! time extent is `t_pre` and its upper time face is identified with the main
//! volume's initial face. Flipped outcomes on that face are the main volume's
//! initial-face measurement errors.

use std::borrow::Cow;
use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Axis, BlockFace, FaceId, LatticeGeometry, LatticeKind, PlaquetteSite};
use crate::rg::{decode, CellSpace, Correction};
use crate::syndrome::{extract_defects, DefectSet, GaugeOutcome};

#[derive(Debug, Clone)]
pub struct PrefixVolume<'g> {
    pub geom: Cow<'g, LatticeGeometry>,
    pub outcome: GaugeOutcome,
    pub defects: DefectSet,
    time: Axis,
}

/// Main-volume faces on the initial face.
pub fn initial_face(main: &LatticeGeometry) -> Vec<FaceId> {
    let t = main.time_axis();
    main.plaquettes()
        .iter()
        .filter_map(|p| match p.site {
            PlaquetteSite::Face(f) if f.normal == t && f.anchor[t] == 0 => Some(f),
            _ => None,
        })
        .collect()
}

impl<'g> PrefixVolume<'g> {
    /// Slab geometry for `main` with time extent `t_pre`.
    pub fn slab(main: &LatticeGeometry, t_pre: i32) -> Result<LatticeGeometry> {
        if main.kind() != LatticeKind::Cubic {
            return Err(Error::UnsupportedGeometry);
        }
        if t_pre < 1 {
            return Err(Error::TimeExtentTooSmall(t_pre));
        }
        LatticeGeometry::new(LatticeKind::Cubic, main.size(), t_pre, *main.boundary())
    }

    /// Builds the slab from explicit flipped slab faces and initial-face flips
    /// given as main-volume faces.
    pub fn from_flips<'a, 'b>(
        main: &LatticeGeometry,
        t_pre: i32,
        slab_flips: impl IntoIterator<Item = &'b FaceId>,
        initial_flips: impl IntoIterator<Item = &'a FaceId>,
    ) -> Result<Self> {
        Self::from_flips_in(Cow::Owned(Self::slab(main, t_pre)?), slab_flips, initial_flips)
    }

    /// As [`PrefixVolume::from_flips`] on a prebuilt slab geometry.
    pub fn from_flips_in<'a, 'b>(
        geom: Cow<'g, LatticeGeometry>,
        slab_flips: impl IntoIterator<Item = &'b FaceId>,
        initial_flips: impl IntoIterator<Item = &'a FaceId>,
    ) -> Result<Self> {
        let t = geom.time_axis();
        let t_pre = geom.extent(t);
        let mut outcome = GaugeOutcome::trivial(&geom);
        for f in slab_flips {
            let i = geom
                .face_index(*f)
                .ok_or_else(|| Error::NotAPlaquetteSite(format!("{f:?}")))?;
            outcome.flip(i);
        }
        for f in initial_flips {
            if f.normal != t || f.anchor[t] != 0 {
                return Err(Error::NotAPlaquetteSite(format!("{f:?} is not on the initial face")));
            }
            let mut top = *f;
            top.anchor[t] = t_pre;
            let i = geom
                .face_index(top)
                .ok_or_else(|| Error::NotAPlaquetteSite(format!("{f:?}")))?;
            outcome.flip(i);
        }
        let defects = extract_defects(&geom, &outcome);
        Ok(PrefixVolume { geom, outcome, defects, time: t })
    }

    /// Samples i.i.d. flips with probability `eps` on slab faces strictly above
    /// the slab's lower time plane and strictly below its upper one.
    pub fn sample<'a, R: Rng>(
        main: &LatticeGeometry,
        t_pre: i32,
        eps: f64,
        rng: &mut R,
        initial_flips: impl IntoIterator<Item = &'a FaceId>,
    ) -> Result<Self> {
        Self::sample_in(Cow::Owned(Self::slab(main, t_pre)?), eps, rng, initial_flips)
    }

    /// As [`PrefixVolume::sample`] on a prebuilt slab geometry.
    pub fn sample_in<'a, R: Rng>(
        geom: Cow<'g, LatticeGeometry>,
        eps: f64,
        rng: &mut R,
        initial_flips: impl IntoIterator<Item = &'a FaceId>,
    ) -> Result<Self> {
        crate::noise::check_probability(eps)?;
        let t = geom.time_axis();
        let t_pre = geom.extent(t);
        let flips: Vec<FaceId> = geom
            .plaquettes()
            .iter()
            .filter_map(|p| match p.site {
                PlaquetteSite::Face(f) if f.anchor[t] >= 1 && f.anchor[t] < t_pre => Some(f),
                _ => None,
            })
            .filter(|_| rng.random_bool(eps))
            .collect();
        Self::from_flips_in(geom, &flips, initial_flips)
    }

    pub fn t_pre(&self) -> i32 {
        self.geom.extent(self.time)
    }
}

/// Initial-face plaquettes whose outcomes the prefix decode flags as wrong,
/// as main-volume faces and plaquette indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixFlags {
    pub faces: BTreeSet<FaceId>,
    pub plaquettes: Vec<usize>,
}

impl PrefixFlags {
    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// JSON list of main-volume plaquette indices.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.plaquettes)?)
    }

    pub fn outcome(&self, main: &LatticeGeometry) -> GaugeOutcome {
        GaugeOutcome::from_indices(main, self.plaquettes.iter().copied())
    }
}

/// Decodes the slab with the initial face first in the absorbing order, then
/// the two smooth sides, and flags every initial-face plaquette the correction
/// crosses.
pub fn prefix_initial_face(main: &LatticeGeometry, vol: &PrefixVolume) -> Result<(PrefixFlags, Correction<FaceId>)> {
    let t = vol.time;
    let s = vol.geom.smooth_space_axis();
    let space = CellSpace::for_geometry(
        &vol.geom,
        &[
            BlockFace { axis: t, upper: true },
            BlockFace { axis: s, upper: false },
            BlockFace { axis: s, upper: true },
        ],
    )?;
    let defects: Vec<_> = vol.defects.iter().map(|d| d.anchor()).collect();
    let corr = decode(&space, &defects);
    let t_pre = vol.t_pre();
    let mut flags = PrefixFlags::default();
    for f in &corr.elems {
        if f.normal == t && f.anchor[t] == t_pre {
            let mut g = *f;
            g.anchor[t] = 0;
            flags.faces.insert(g);
        }
    }
    flags.plaquettes = flags
        .faces
        .iter()
        .map(|f| {
            main.face_index(*f)
                .ok_or_else(|| Error::Internal(format!("flag {f:?} outside the main volume")))
        })
        .collect::<Result<_>>()?;
    Ok((flags, corr))
}
