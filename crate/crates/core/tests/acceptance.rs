//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;

use gaugefix_core::chunks::{
    chunk_probability_bound, decompose, qpow, same_level_tethered_pairs, threshold_report, verify_diameter_lemma, DecoderParams,
};
use gaugefix_core::harness::{estimate_resources, run_sweep, ExperimentConfig, Layout, SweepPoint};
use gaugefix_core::jit::{audit_error, planted_site, Regime};
use gaugefix_core::lattice::{
    build_lattice, unit_cell_counts, Axis, BoundarySpec, BoundaryTag, Coord3, EdgeId, KindCombination, LatticeKind, StarSite,
};
use gaugefix_core::noise::{sample_errors, to_sites, NoiseParams, SiteGrid};
use gaugefix_core::prefix::{initial_face, prefix_initial_face, PrefixVolume};
use gaugefix_core::rg::{decode_edges, Outcome, StarSpace};
use gaugefix_core::syndrome::{extract_defects, sample_random_gauge};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, name: &str, ok: bool, detail: &str) {
    println!("criterion {n} ({name}): {} | {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_1_exact_counts() {
    let cubic = unit_cell_counts(KindCombination::CubicOnly).total;
    let alt = unit_cell_counts(KindCombination::AlternativeOnly).total;
    let full = unit_cell_counts(KindCombination::FullTripleOverlap).total;
    let mut ok = (cubic, alt, full) == (48, 56, 160);
    for d in 3..=25u64 {
        let local = estimate_resources(d, Layout::Local).unwrap();
        let cyl = estimate_resources(d, Layout::Cylinder).unwrap();
        let d = d as u128;
        ok &= local.spacetime_volume == 30 * d * d * d && cyl.spacetime_volume == 18 * d * d * d;
        ok &= local.qubit_count == 10 * d * d && cyl.qubit_count == 6 * d * d;
        ok &= local.time_units == 3 * d && cyl.time_units == 3 * d;
    }
    report(1, "exact counts", ok, &format!("unit cells {cubic}/{alt}/{full}; volumes 30d³ and 18d³ for d = 3..25"));
}

#[test]
fn criterion_2_stabilizer_structure() {
    let mut checked = 0usize;
    let mut bad = Vec::new();
    for kind in [LatticeKind::Cubic, LatticeKind::Alternative] {
        for l in 2..=4 {
            for rough in Axis::ALL {
                let g = build_lattice(kind, l, BoundarySpec::rough_along(rough)).unwrap();
                let plaq: Vec<BTreeSet<EdgeId>> = g.plaquettes().iter().map(|p| p.edges.iter().copied().collect()).collect();
                for s in g.stars() {
                    for p in &plaq {
                        checked += 1;
                        if s.edges.iter().filter(|e| p.contains(e)).count() % 2 != 0 {
                            bad.push(format!("{kind:?} L={l} star {:?} odd overlap", s.site));
                        }
                    }
                    if kind == LatticeKind::Alternative {
                        if let StarSite::Cube(c) = s.site {
                            if g.cell_tag(c) == BoundaryTag::Bulk && s.edges.len() != 12 {
                                bad.push(format!("interior star {c:?} weight {}", s.edges.len()));
                            }
                        }
                    }
                }
                for ci in 0..g.constraint_cells().len() {
                    let mut acc = BTreeSet::new();
                    for &pi in g.cell_plaquette_indices(ci) {
                        for e in &g.plaquettes()[pi as usize].edges {
                            if !acc.remove(e) {
                                acc.insert(*e);
                            }
                        }
                    }
                    if !acc.is_empty() {
                        bad.push(format!("{kind:?} L={l} cell {:?} not closed", g.constraint_cells()[ci]));
                    }
                }
                if kind == LatticeKind::Alternative {
                    if let Some(p) = g.plaquettes().iter().find(|p| p.edges.len() != 3) {
                        bad.push(format!("plaquette {} weight {}", p.site, p.edges.len()));
                    }
                }
            }
        }
    }
    report(2, "stabilizer structure", bad.is_empty(), &format!("{checked} star/plaquette pairs; issues: {:?}", bad.iter().take(3).collect::<Vec<_>>()));
}

#[test]
fn criterion_3_noiseless_gauge_closure() {
    let mut defects = 0;
    for kind in [LatticeKind::Cubic, LatticeKind::Alternative] {
        let g = build_lattice(kind, 6, BoundarySpec::rough_along(Axis::Z)).unwrap();
        for trial in 0..10_000 {
            let (gauge, _) = sample_random_gauge(&g, 2024, trial);
            defects += extract_defects(&g, &gauge).len();
        }
    }
    report(3, "gauge closure", defects == 0, &format!("2 × 10⁴ samples at L = 6, {defects} defects"));
}

#[test]
fn criterion_4_chunk_machinery() {
    let fact1 = DecoderParams::default();
    let mut violations = 0;
    let mut tethered = 0;
    let mut decompositions = 0;
    let mut max_m = 0;
    for i in 0..10_000u64 {
        let l = [4, 6, 8, 10, 12][(i % 5) as usize];
        let eps = if i % 2 == 0 { 0.01 } else { 0.05 };
        let g = build_lattice(LatticeKind::Cubic, l, BoundarySpec::rough_along(Axis::Z)).unwrap();
        let errors = sample_errors(&g, &NoiseParams::new(eps, 4).unwrap(), i).unwrap();
        let sites: Vec<Coord3> = to_sites(&errors, &SiteGrid::new(&g, 2)).into_iter().collect();
        for q in [6, 33, 87] {
            let d = decompose(&sites, q).unwrap();
            decompositions += 1;
            max_m = max_m.max(d.max_level().unwrap_or(0));
            violations += verify_diameter_lemma(&d).violations.len();
            if q == fact1.q {
                tethered += same_level_tethered_pairs(&d, &fact1);
            }
        }
    }
    report(
        4,
        "chunk machinery",
        violations == 0 && tethered == 0,
        &format!("{decompositions} decompositions (max m = {max_m}), {violations} lemma violations, {tethered} tethered same-level pairs at Q = 87"),
    );
}

fn rational_of(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

fn rational_of_ext(mantissa: &BigUint, exponent: i128) -> BigRational {
    let m = BigInt::from(mantissa.clone());
    let two = BigInt::from(2);
    if exponent >= 0 {
        BigRational::from_integer(m * num_traits::pow(two, exponent as usize))
    } else {
        BigRational::new(m, num_traits::pow(two, (-exponent) as usize))
    }
}

#[test]
fn criterion_5_threshold_arithmetic() {
    let tol = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), 12));
    let mut worst = 0.0f64;
    let mut ok = true;
    let mut cases = 0;
    for l in [4u64, 10, 100, 1000] {
        for q in [6u64, 33, 87] {
            for p0 in [1e-16, 3.1e-15, 1e-10, 1e-3, 0.3] {
                for m in 0..6u32 {
                    let got = chunk_probability_bound(l, q, p0, m).unwrap();
                    let three_q = BigRational::from_integer(BigInt::from(3 * q));
                    let base = three_q.clone() * rational_of(p0);
                    let exact = BigRational::from_integer(BigInt::from(l).pow(3)) / num_traits::pow(three_q, 6)
                        * num_traits::pow(base, 1usize << m);
                    let approx = rational_of_ext(got.mantissa(), got.exponent());
                    let rel = ((approx - &exact) / &exact).abs();
                    cases += 1;
                    ok &= rel < tol;
                    worst = worst.max(rel.to_f64().unwrap_or(f64::INFINITY));
                }
            }
        }
    }
    ok &= chunk_probability_bound(10, 87, 0.0, 1).unwrap().is_zero();
    let r = threshold_report(87, 120).unwrap();
    ok &= (r.p0_threshold - 3.163420728016346e-15).abs() < 1e-27;
    report(
        5,
        "threshold arithmetic",
        ok,
        &format!(
            "{cases} cases, worst relative error {worst:.2e}; p0 < 261⁻⁶ = {:.6e}, implied eps = {:.6e} at N = 120, quoted eps 6e-15 is {:.1}× larger (p0 there = {:.2e})",
            r.p0_threshold, r.eps_implied, r.quoted_over_implied, r.p0_at_quoted_eps
        ),
    );
}

#[test]
fn criterion_6_jit_bounds() {
    let l = 16;
    let g = build_lattice(LatticeKind::Cubic, l, BoundarySpec::rough_along(Axis::Z)).unwrap();
    let params = DecoderParams { q: 33, ..DecoderParams::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut bulk, mut boundary) = (0, 0);
    let mut failures = Vec::new();
    let mut max_s = [0.0f64; 2];
    let mut max_life = [0i64; 2];
    while bulk < 1000 || boundary < 1000 {
        let want_bulk = bulk < 1000;
        let y = if want_bulk {
            rng.random_range(7..=8)
        } else if rng.random_bool(0.5) {
            rng.random_range(0..=5)
        } else {
            rng.random_range(11..=l)
        };
        let a = Coord3::new(rng.random_range(2..=5), y, rng.random_range(0..=l));
        let e = planted_site(&g, a, &mut rng);
        let (_, rep) = audit_error(&g, &e, &params).unwrap();
        for c in &rep.components {
            let k = match c.regime {
                Regime::Bulk => {
                    bulk += 1;
                    if c.s_emp > 3.0 {
                        failures.push(format!("bulk s_emp {} at {a:?}", c.s_emp));
                    }
                    0
                }
                Regime::Boundary => {
                    boundary += 1;
                    1
                }
                Regime::TimeBoundary => continue,
            };
            max_s[k] = max_s[k].max(c.s_emp);
            max_life[k] = max_life[k].max(c.max_lifetime);
            if !c.within_bounds(params.q) || c.s_emp > 8.0 {
                failures.push(format!("{a:?}: {c:?}"));
            }
        }
    }
    // Lemma 3 on random below-threshold errors.
    let mut cross = 0;
    let mut small = build_lattice(LatticeKind::Cubic, 8, BoundarySpec::rough_along(Axis::Z)).unwrap();
    for trial in 0..1000 {
        if trial == 500 {
            small = g.clone();
        }
        let e = sample_errors(&small, &NoiseParams::new(1e-3, 66).unwrap(), trial).unwrap();
        let (_, rep) = audit_error(&small, &e, &params).unwrap();
        cross += rep.cross_box_pairs;
    }
    report(
        6,
        "JIT bounds",
        failures.is_empty() && cross == 0,
        &format!(
            "{bulk} bulk / {boundary} boundary components; max lifetime {} / {} (bounds {} / {}); max s_emp {} / {}; {cross} cross-box pairings over 10³ trials; issues: {:?}",
            max_life[0],
            max_life[1],
            2 * (qpow(33, 0) + 2),
            3 * (qpow(33, 0) + 2),
            max_s[0],
            max_s[1],
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

/// Random error confined to a box of diameter `diam` at a random position.
fn boxed_error(space: &StarSpace, lo: Coord3, diam: i32, density: f64, rng: &mut ChaCha8Rng) -> BTreeSet<EdgeId> {
    let mut out = BTreeSet::new();
    while out.is_empty() {
        for x in lo.x..=lo.x + diam {
            for y in lo.y..=lo.y + diam {
                for z in lo.z..=lo.z + diam {
                    for a in Axis::ALL {
                        let e = EdgeId::new(Coord3::new(x, y, z), a);
                        let [_, q] = e.endpoints();
                        if q[a] <= lo[a] + diam && space.has_edge(e) && rng.random_bool(density) {
                            out.insert(e);
                        }
                    }
                }
            }
        }
    }
    out
}

#[test]
fn criterion_7_rg_soundness() {
    let mut single = (0, 0);
    for rough in Axis::ALL {
        let s = StarSpace::new([4, 4, 4], rough);
        for x in 0..=4 {
            for y in 0..=4 {
                for z in 0..=4 {
                    for a in Axis::ALL {
                        let e = EdgeId::new(Coord3::new(x, y, z), a);
                        if s.has_edge(e) {
                            single.1 += 1;
                            if decode_edges(&s, &BTreeSet::from([e])).unwrap() == Outcome::Success {
                                single.0 += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    // Level-0 spread errors at Q = 87, s = 8, r = 2: containers of diameter
    // ≤ sQ⁰ = 8, untethered (separation > Δ₀ = 22), with D₀ = 10 < L/3.
    let params = DecoderParams::default();
    let diam = (params.s * qpow(params.q, 0) as u64) as i32;
    let delta = params.delta(0) as i32;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut spread = (0, 0);
    while spread.1 < 500 {
        let l = rng.random_range(31..=45);
        assert!(params.fattened_diameter(0) * 3 < l as u128);
        let s = StarSpace::new([l, l, l], Axis::ALL[rng.random_range(0..3)]);
        let density = [0.05, 0.2, 0.5][spread.1 % 3];
        let pick = |rng: &mut ChaCha8Rng| Coord3::new(rng.random_range(0..=l - diam), rng.random_range(0..=l - diam), rng.random_range(0..=l - diam));
        let a = pick(&mut rng);
        let mut err = boxed_error(&s, a, diam, density, &mut rng);
        if rng.random_bool(0.5) {
            let b = pick(&mut rng);
            if a.linf(b) > diam + delta {
                err.extend(boxed_error(&s, b, diam, density, &mut rng));
            }
        }
        spread.1 += 1;
        if decode_edges(&s, &err).unwrap() == Outcome::Success {
            spread.0 += 1;
        }
    }
    report(
        7,
        "RG soundness",
        single.0 == single.1 && spread.0 == spread.1,
        &format!("single errors at L = 4: {}/{}; spread-error instances: {}/{}", single.0, single.1, spread.0, spread.1),
    );
}

#[test]
fn criterion_8_prefixing() {
    let (mut hits, mut total, mut false_flags) = (0, 0, 0);
    for l in 2..=8 {
        let g = build_lattice(LatticeKind::Cubic, l, BoundarySpec::rough_along(Axis::Z)).unwrap();
        let slab = PrefixVolume::slab(&g, l).unwrap();
        for f in initial_face(&g) {
            let vol = PrefixVolume::from_flips_in(std::borrow::Cow::Borrowed(&slab), &[], &[f]).unwrap();
            let (flags, _) = prefix_initial_face(&g, &vol).unwrap();
            total += 1;
            if flags.faces.contains(&f) {
                hits += 1;
            }
            false_flags += flags.faces.iter().filter(|&&x| x != f).count();
        }
        let empty = PrefixVolume::from_flips_in(std::borrow::Cow::Borrowed(&slab), &[], &[]).unwrap();
        false_flags += prefix_initial_face(&g, &empty).unwrap().0.len();
    }
    report(8, "prefixing", hits == total && false_flags == 0, &format!("recall {hits}/{total}, {false_flags} false flags, L = 2..8, T_pre = L"));
}

fn overlap(a: &SweepPoint, b: &SweepPoint) -> bool {
    a.ci_lo <= b.ci_hi && b.ci_lo <= a.ci_hi
}

#[test]
fn criterion_9_threshold_existence() {
    let sizes = vec![4, 6, 8];
    let low = run_sweep(&ExperimentConfig::new(sizes.clone(), vec![0.005], 60_000, 9)).unwrap();
    let rest = run_sweep(&ExperimentConfig::new(sizes.clone(), vec![0.008, 0.012, 0.02], 1000, 9)).unwrap();
    let mut all: Vec<SweepPoint> = low.into_iter().chain(rest).collect();
    all.sort_by(|a, b| a.eps.total_cmp(&b.eps).then(a.l.cmp(&b.l)));
    for p in &all {
        println!(
            "  L={} eps={} failure {:.5} [{:.5}, {:.5}] discard {:.4} accepted failure {:.5}",
            p.l,
            p.eps,
            p.failure_rate(),
            p.ci_lo,
            p.ci_hi,
            p.discard_rate,
            p.accepted_failure_rate()
        );
    }
    let at = |eps: f64| -> Vec<&SweepPoint> { all.iter().filter(|p| p.eps == eps).collect() };
    let lo = at(0.005);
    let hi = at(0.02);
    let decreasing = lo.windows(2).all(|w| w[0].failure_rate() > w[1].failure_rate());
    let increasing = hi.windows(2).all(|w| w[0].failure_rate() < w[1].failure_rate());
    let separated = !overlap(lo[0], lo[2]) && !overlap(hi[0], hi[2]);
    let dominance = all.iter().all(|p| p.accepted_failure_rate() <= p.failure_rate());
    report(
        9,
        "threshold existence",
        decreasing && increasing && separated && dominance,
        &format!(
            "decreasing at eps = 0.005: {decreasing}; increasing at eps = 0.02: {increasing}; L = 4 vs 8 intervals disjoint at both: {separated}; post-selection dominance: {dominance}"
        ),
    );
}
