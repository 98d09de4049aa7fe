//! Inputs shared by the benchmarks.

use gaugefix_core::jit::defect_cells;
use gaugefix_core::noise::{sample_errors, to_sites, NoiseParams, SiteGrid};
use gaugefix_core::syndrome::{apply_errors, extract_defects, GaugeOutcome};
use gaugefix_core::{build_lattice, Axis, BoundarySpec, Coord3, LatticeGeometry, LatticeKind};

pub fn main_geometry(l: i32) -> LatticeGeometry {
    build_lattice(LatticeKind::Cubic, l, BoundarySpec::rough_along(Axis::Z)).expect("valid size")
}

/// Error sites of one sample on the main geometry, with unit-cell sites.
pub fn sampled_sites(l: i32, eps: f64, seed: u64) -> Vec<Coord3> {
    let g = main_geometry(l);
    let errors = sample_errors(&g, &NoiseParams::new(eps, seed).expect("valid eps"), 0).expect("sample");
    to_sites(&errors, &SiteGrid::new(&g, 2)).into_iter().collect()
}

/// Cube-cell defects of one sample against the trivial gauge.
pub fn sampled_defects(g: &LatticeGeometry, eps: f64, seed: u64) -> Vec<Coord3> {
    let errors = sample_errors(g, &NoiseParams::new(eps, seed).expect("valid eps"), 0).expect("sample");
    let out = apply_errors(g, &GaugeOutcome::trivial(g), &errors).expect("errors fit the geometry");
    defect_cells(&extract_defects(g, &out))
}
