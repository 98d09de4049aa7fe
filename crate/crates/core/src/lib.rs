//! Gauge fixing between 3D surface codes: lattices, noise, decoders and the
//! Monte Carlo harness.

pub mod chunks;
pub mod error;
pub mod extfloat;
pub mod harness;
pub mod jit;
pub mod lattice;
pub mod noise;
pub mod prefix;
pub mod rg;
pub mod syndrome;

pub use error::{Error, Result};
pub use chunks::{ChunkDecomposition, DecoderParams};
pub use harness::{run_sweep, run_trial, ExperimentConfig, Layout, SweepPoint, TrialParams, TrialRecord};
pub use jit::{JitRun, MatchDecision};
pub use lattice::{
    build_lattice, unit_cell_counts, Axis, BlockFace, BoundarySpec, BoundaryTag, BoundaryType, CellId, ConstraintCell,
    Coord3, EdgeId, FaceId, KindCombination, LatticeGeometry, LatticeKind, PlaquetteSite,
    StabilizerSupport, StarSite, VertexId,
};
pub use noise::ErrorSet;
pub use rg::{Correction, Outcome};
pub use syndrome::{DefectSet, GaugeOutcome};
