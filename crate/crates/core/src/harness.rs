//! End-to-end trials, Monte Carlo sweeps and resource estimates.
//!
//! A trial grows a cubic code with rough faces normal to z for `L` time steps
//! along x from a prefixed initial face, decodes the gauge-fixing defects with
//! the JIT decoder and, for comparison, with a global RG decode, and hands the
//! residual X error on to a partner code with rough faces normal to y, where
//! every residual qubit becomes a Z error at the same coordinates.

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chunks::{decompose, DecoderParams};
use crate::error::{Error, Result};
use crate::jit::{self, JitFrame};
use crate::lattice::{build_lattice, Axis, BlockFace, BoundarySpec, Coord3, EdgeId, FaceId, LatticeGeometry, LatticeKind, PlaquetteSite};
use crate::noise::{self, sample_with, to_sites, trial_rng, ErrorSet, SiteGrid, Stream};
use crate::prefix::{prefix_initial_face, PrefixVolume};
use crate::rg::{self, decode_edges, CellSpace, Outcome, StarSpace};
use crate::syndrome::{apply_errors, extract_defects, fill_local, plaquette_pattern, sample_random_gauge, GaugeOutcome, Membrane};

/// Environment variable that sets the sweep thread count.
pub const THREADS_ENV: &str = "GAUGEFIX_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Local,
    Cylinder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub d: u64,
    pub layout: Layout,
    pub qubit_count: u128,
    pub time_units: u128,
    pub spacetime_volume: u128,
    /// Time spent moving the code, reported apart from the occupation time.
    pub transit_time: u128,
}

pub fn estimate_resources(d: u64, layout: Layout) -> Result<ResourceEstimate> {
    if d == 0 {
        return Err(Error::Config("code distance must be at least 1".into()));
    }
    let d = d as u128;
    let area = match layout {
        Layout::Local => 10,
        Layout::Cylinder => 6,
    };
    let qubit_count = area * d * d;
    let time_units = 3 * d;
    Ok(ResourceEstimate {
        d: d as u64,
        layout,
        qubit_count,
        time_units,
        spacetime_volume: qubit_count * time_units,
        transit_time: 2 * d,
    })
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64;
    let n = n as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

fn default_kind() -> LatticeKind {
    LatticeKind::Cubic
}
fn default_trials() -> u64 {
    1000
}
fn default_q() -> u64 {
    DecoderParams::default().q
}
fn default_r() -> u64 {
    DecoderParams::default().r
}
fn default_s() -> u64 {
    DecoderParams::default().s
}
fn default_layout() -> Layout {
    Layout::Local
}
fn default_true() -> bool {
    true
}

/// Flat experiment configuration, read from TOML or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_kind")]
    pub kind: LatticeKind,
    #[serde(rename = "L")]
    pub sizes: Vec<i32>,
    pub eps: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(rename = "Q", default = "default_q")]
    pub q: u64,
    #[serde(default = "default_r")]
    pub r: u64,
    #[serde(default = "default_s")]
    pub s: u64,
    /// Prefix slab depth; defaults to L.
    #[serde(default)]
    pub t_pre: Option<i32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_layout")]
    pub layout: Layout,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub prefix: bool,
    /// I.i.d. Z noise of strength eps on the partner code.
    #[serde(default)]
    pub partner_noise: bool,
    #[serde(default)]
    pub audit_spread: bool,
}

impl ExperimentConfig {
    pub fn new(sizes: Vec<i32>, eps: Vec<f64>, trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            kind: LatticeKind::Cubic,
            sizes,
            eps,
            trials,
            q: default_q(),
            r: default_r(),
            s: default_s(),
            t_pre: None,
            seed,
            layout: Layout::Local,
            output: None,
            prefix: true,
            partner_noise: false,
            audit_spread: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.kind != LatticeKind::Cubic {
            return Err(Error::Config("trials run on the cubic lattice only".into()));
        }
        if self.sizes.is_empty() || self.eps.is_empty() {
            return Err(Error::Config("L and eps lists must be non-empty".into()));
        }
        if let Some(&l) = self.sizes.iter().find(|&&l| l < 2) {
            return Err(Error::LatticeTooSmall(l));
        }
        for &e in &self.eps {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidProbability(e));
            }
        }
        if let Some(t) = self.t_pre {
            if t < 1 {
                return Err(Error::TimeExtentTooSmall(t));
            }
        }
        if self.q < 6 {
            return Err(Error::ChunkScaleTooSmall(self.q));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn decoder_params(&self) -> DecoderParams {
        DecoderParams { q: self.q, r: self.r, s: self.s }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn trial_params(&self, l: i32, eps: f64, trial: u64) -> TrialParams {
        TrialParams {
            l,
            eps,
            seed: self.seed,
            trial,
            t_pre: self.t_pre.unwrap_or(l),
            prefix: self.prefix,
            partner_noise: self.partner_noise,
            audit_spread: self.audit_spread,
            decoder: self.decoder_params(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub l: i32,
    pub eps: f64,
    pub seed: u64,
    pub trial: u64,
    pub t_pre: i32,
    pub prefix: bool,
    pub partner_noise: bool,
    pub audit_spread: bool,
    pub decoder: DecoderParams,
}

impl TrialParams {
    pub fn new(l: i32, eps: f64, seed: u64, trial: u64) -> Self {
        ExperimentConfig::new(vec![l], vec![eps], 1, seed).trial_params(l, eps, trial)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial: u64,
    #[serde(rename = "L")]
    pub l: i32,
    pub eps: f64,
    pub jit_success: bool,
    pub hp_success: bool,
    pub agreement: bool,
    pub postselect_accept: bool,
    pub max_s_emp: Option<f64>,
    /// Outcome of the JIT pipeline; the record exists only when every syndrome was neutralised.
    pub logical: Outcome,
    pub defects: usize,
    pub flags: usize,
    pub residual_weight: usize,
    /// Excluded from equality so that replays compare equal.
    pub wall_time_ns: u128,
}

impl PartialEq for TrialRecord {
    fn eq(&self, o: &Self) -> bool {
        self.seed == o.seed
            && self.trial == o.trial
            && self.l == o.l
            && self.eps.to_bits() == o.eps.to_bits()
            && self.jit_success == o.jit_success
            && self.hp_success == o.hp_success
            && self.agreement == o.agreement
            && self.postselect_accept == o.postselect_accept
            && self.max_s_emp.map(f64::to_bits) == o.max_s_emp.map(f64::to_bits)
            && self.logical == o.logical
            && self.defects == o.defects
            && self.flags == o.flags
            && self.residual_weight == o.residual_weight
    }
}

/// Geometry of code A for a trial of size `l`.
pub fn main_geometry(l: i32) -> Result<LatticeGeometry> {
    build_lattice(LatticeKind::Cubic, l, BoundarySpec::rough_along(Axis::Z))
}

/// Partner code receiving the handoff.
pub fn partner_space(main: &LatticeGeometry) -> StarSpace {
    StarSpace::new(
        [main.extent(Axis::X), main.extent(Axis::Y), main.extent(Axis::Z)],
        Axis::Y,
    )
}

/// Global decoder used for the post-selection comparison.
pub fn global_space(main: &LatticeGeometry) -> Result<CellSpace> {
    let s = main.smooth_space_axis();
    let t = main.time_axis();
    CellSpace::for_geometry(
        main,
        &[
            BlockFace { axis: s, upper: false },
            BlockFace { axis: s, upper: true },
            BlockFace { axis: t, upper: true },
        ],
    )
}

/// Residual code-A qubits that exist on the partner, as partner Z errors.
pub fn handoff(partner: &StarSpace, residual: &Membrane) -> BTreeSet<EdgeId> {
    residual.iter().copied().filter(|e| partner.has_edge(*e)).collect()
}

fn partner_noise<R: Rng>(partner: &StarSpace, eps: f64, rng: &mut R) -> BTreeSet<EdgeId> {
    let mut out = BTreeSet::new();
    if eps == 0.0 {
        return out;
    }
    for x in 0..=partner.ext(Axis::X) {
        for y in 0..=partner.ext(Axis::Y) {
            for z in 0..=partner.ext(Axis::Z) {
                for a in Axis::ALL {
                    let e = EdgeId::new(Coord3::new(x, y, z), a);
                    if partner.has_edge(e) && rng.random_bool(eps) {
                        out.insert(e);
                    }
                }
            }
        }
    }
    out
}

fn faces_outcome(geom: &LatticeGeometry, faces: &BTreeSet<FaceId>) -> Result<GaugeOutcome> {
    GaugeOutcome::from_sites(geom, faces.iter().map(|f| PlaquetteSite::Face(*f)))
}

fn xor_sets(a: &BTreeSet<EdgeId>, b: &BTreeSet<EdgeId>) -> BTreeSet<EdgeId> {
    a.symmetric_difference(b).copied().collect()
}

/// Geometries shared by every trial of one size.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub main: LatticeGeometry,
    pub slab: LatticeGeometry,
    pub partner: StarSpace,
    pub global: CellSpace,
}

impl TrialContext {
    pub fn new(l: i32, t_pre: i32) -> Result<Self> {
        let main = main_geometry(l)?;
        let slab = PrefixVolume::slab(&main, t_pre)?;
        Ok(TrialContext {
            partner: partner_space(&main),
            global: global_space(&main)?,
            main,
            slab,
        })
    }

    pub fn for_params(p: &TrialParams) -> Result<Self> {
        Self::new(p.l, p.t_pre)
    }

    fn matches(&self, p: &TrialParams) -> bool {
        self.main.size() == p.l && self.slab.extent(self.slab.time_axis()) == p.t_pre
    }
}

/// Everything a trial computes, for inspection and replay.
#[derive(Debug, Clone)]
pub struct TrialTrace {
    pub record: TrialRecord,
    pub errors: ErrorSet,
    pub flags: BTreeSet<FaceId>,
    pub jit: jit::JitRun,
    pub hp_correction: BTreeSet<FaceId>,
    pub residual: Membrane,
    pub partner_error: BTreeSet<EdgeId>,
}

/// Runs one trial with sampled errors; deterministic in `(seed, trial)`.
pub fn run_trial(p: &TrialParams) -> Result<TrialRecord> {
    Ok(run_trial_traced(&TrialContext::for_params(p)?, p, None)?.record)
}

/// Runs one trial on a planted error instead of a sampled one; the gauge,
/// prefix slab and partner noise are still sampled.
pub fn run_trial_planted(p: &TrialParams, planted: &ErrorSet) -> Result<TrialTrace> {
    run_trial_traced(&TrialContext::for_params(p)?, p, Some(planted))
}

pub fn run_trial_traced(ctx: &TrialContext, p: &TrialParams, planted: Option<&ErrorSet>) -> Result<TrialTrace> {
    let start = Instant::now();
    if !ctx.matches(p) {
        return Err(Error::Config(format!("context does not match L = {}, t_pre = {}", p.l, p.t_pre)));
    }
    let geom = &ctx.main;
    let t = geom.time_axis();
    let errors = match planted {
        Some(e) => e.clone(),
        None => {
            noise::NoiseParams::new(p.eps, p.seed)?;
            sample_with(geom, p.eps, &mut trial_rng(p.seed, p.trial, Stream::Errors))
        }
    };
    let (gauge, _) = sample_random_gauge(geom, p.seed, p.trial);

    // Initial-face measurement errors are seen by the prefix slab as its top face.
    let initial: Vec<FaceId> = errors
        .meas_flips
        .iter()
        .filter_map(|m| match m.0 {
            PlaquetteSite::Face(f) if f.normal == t && f.anchor[t] == 0 => Some(f),
            _ => None,
        })
        .collect();
    let flags: BTreeSet<FaceId> = if p.prefix {
        let mut rng = trial_rng(p.seed, p.trial, Stream::Prefix);
        let vol = PrefixVolume::sample_in(Cow::Borrowed(&ctx.slab), p.eps, &mut rng, &initial)?;
        prefix_initial_face(geom, &vol)?.0.faces
    } else {
        BTreeSet::new()
    };
    let flag_outcome = faces_outcome(geom, &flags)?;

    let observed = apply_errors(geom, &gauge, &errors)?.xor(&flag_outcome);
    let defects = jit::defect_cells(&extract_defects(geom, &observed));
    let jit_run = jit::run(JitFrame::for_geometry(geom)?, &defects)?;
    let hp = rg::decode(&ctx.global, &defects);
    if !hp.succeeded() {
        return Err(Error::Internal(format!("global decode left {} defects", hp.residual.len())));
    }
    let k_jit = faces_outcome(geom, &jit_run.correction)?;
    let k_hp = faces_outcome(geom, &hp.elems)?;

    // Measurement-error strings left after correction, together with the data
    // error outcomes; their local fill is the residual membrane.
    let meas_only = ErrorSet { meas_flips: errors.meas_flips.clone(), ..ErrorSet::default() };
    let strings = apply_errors(geom, &plaquette_pattern(geom, &errors.data_flips), &meas_only)?.xor(&flag_outcome);
    let residual_for = |k: &GaugeOutcome| -> Result<Membrane> {
        let s = strings.xor(k);
        if !extract_defects(geom, &s).is_empty() {
            return Err(Error::Internal("correction leaves open strings".into()));
        }
        Ok(xor_sets(&errors.data_flips, &fill_local(geom, &s)?))
    };
    let residual_jit = residual_for(&k_jit)?;
    let residual_hp = residual_for(&k_hp)?;

    let partner = ctx.partner;
    let noise_z = if p.partner_noise {
        partner_noise(&partner, p.eps, &mut trial_rng(p.seed, p.trial, Stream::Partner))
    } else {
        BTreeSet::new()
    };
    let partner_error = xor_sets(&handoff(&partner, &residual_jit), &noise_z);
    let jit_outcome = decode_edges(&partner, &partner_error)?;
    let hp_outcome = decode_edges(&partner, &xor_sets(&handoff(&partner, &residual_hp), &noise_z))?;

    // The decoders agree when their corrections fall in the same logical class
    // under the noiseless handoff.
    let agreement = if p.partner_noise {
        decode_edges(&partner, &handoff(&partner, &residual_jit))?
            == decode_edges(&partner, &handoff(&partner, &residual_hp))?
    } else {
        jit_outcome == hp_outcome
    };

    let max_s_emp = if p.audit_spread && !errors.is_empty() {
        let sites: Vec<Coord3> = to_sites(&errors, &SiteGrid::new(geom, 1)).into_iter().collect();
        match decompose(&sites, p.decoder.q) {
            Ok(d) => Some(jit::measure_spread(geom, &errors, &jit_run, &d, &p.decoder)?.max_s_emp),
            Err(Error::DecompositionOverflow(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let record = TrialRecord {
        seed: p.seed,
        trial: p.trial,
        l: p.l,
        eps: p.eps,
        jit_success: jit_outcome == Outcome::Success,
        hp_success: hp_outcome == Outcome::Success,
        agreement,
        postselect_accept: agreement,
        max_s_emp,
        logical: jit_outcome,
        defects: defects.len(),
        flags: flags.len(),
        residual_weight: residual_jit.len(),
        wall_time_ns: start.elapsed().as_nanos(),
    };
    Ok(TrialTrace {
        record,
        errors,
        flags,
        jit: jit_run,
        hp_correction: hp.elems,
        residual: residual_jit,
        partner_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    #[serde(rename = "L")]
    pub l: i32,
    pub eps: f64,
    pub trials: u64,
    pub failures: u64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub discard_rate: f64,
    pub accepted: u64,
    pub accepted_failures: u64,
    pub max_spread: Option<f64>,
    pub mean_spread: Option<f64>,
}

impl SweepPoint {
    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }

    pub fn accepted_failure_rate(&self) -> f64 {
        if self.accepted == 0 {
            0.0
        } else {
            self.accepted_failures as f64 / self.accepted as f64
        }
    }

    pub fn from_records(l: i32, eps: f64, records: &[TrialRecord]) -> Self {
        let trials = records.len() as u64;
        let failures = records.iter().filter(|r| r.logical == Outcome::LogicalFailure).count() as u64;
        let accepted = records.iter().filter(|r| r.postselect_accept).count() as u64;
        let accepted_failures = records
            .iter()
            .filter(|r| r.postselect_accept && r.logical == Outcome::LogicalFailure)
            .count() as u64;
        let spreads: Vec<f64> = records.iter().filter_map(|r| r.max_s_emp).collect();
        let (ci_lo, ci_hi) = wilson_interval(failures, trials);
        SweepPoint {
            l,
            eps,
            trials,
            failures,
            ci_lo,
            ci_hi,
            discard_rate: if trials == 0 { 0.0 } else { (trials - accepted) as f64 / trials as f64 },
            accepted,
            accepted_failures,
            max_spread: spreads.iter().copied().reduce(f64::max),
            mean_spread: (!spreads.is_empty()).then(|| spreads.iter().sum::<f64>() / spreads.len() as f64),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.l,
            self.eps,
            self.trials,
            self.failures,
            self.ci_lo,
            self.ci_hi,
            self.discard_rate,
            self.accepted_failures,
            self.max_spread.map(|s| s.to_string()).unwrap_or_default()
        )
    }
}

pub const CSV_HEADER: &str = "L,eps,trials,failures,ci_lo,ci_hi,discard_rate,accepted_failures,max_spread";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSeed {
    #[serde(rename = "L")]
    pub l: i32,
    pub eps: f64,
    pub seed: u64,
    pub first_trial: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub version: String,
    pub points: Vec<PointSeed>,
}

/// Path of the manifest written next to a sweep's CSV output.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_stem().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Internal(e.to_string()))
}

/// Runs every (L, eps) grid point. Trial `k` of grid point `i` uses stream
/// `i * trials + k`, so points are independent and replays are identical.
/// With an output path each point's row is appended and flushed as soon as it
/// finishes.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let pool = thread_pool()?;
    let mut grid = Vec::new();
    for &l in &config.sizes {
        for &eps in &config.eps {
            grid.push((l, eps));
        }
    }
    let mut csv = match &config.output {
        Some(path) => {
            let manifest = Manifest {
                config: config.clone(),
                config_hash: config.hash(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                points: grid
                    .iter()
                    .enumerate()
                    .map(|(i, &(l, eps))| PointSeed { l, eps, seed: config.seed, first_trial: i as u64 * config.trials })
                    .collect(),
            };
            std::fs::write(manifest_path(path), serde_json::to_string_pretty(&manifest)?)?;
            let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
            let mut w = BufWriter::new(OpenOptions::new().create(true).append(true).open(path)?);
            if fresh {
                writeln!(w, "{CSV_HEADER}")?;
                w.flush()?;
            }
            Some(w)
        }
        None => None,
    };
    let mut points = Vec::new();
    let mut ctx: Option<TrialContext> = None;
    for (i, &(l, eps)) in grid.iter().enumerate() {
        let base = i as u64 * config.trials;
        let first = config.trial_params(l, eps, base);
        if !ctx.as_ref().is_some_and(|c| c.matches(&first)) {
            ctx = Some(TrialContext::for_params(&first)?);
        }
        let ctx = ctx.as_ref().expect("context built");
        let records: Vec<TrialRecord> = pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|k| Ok(run_trial_traced(ctx, &config.trial_params(l, eps, base + k), None)?.record))
                .collect::<Result<_>>()
        })?;
        let point = SweepPoint::from_records(l, eps, &records);
        if let Some(w) = csv.as_mut() {
            writeln!(w, "{}", point.csv_row())?;
            w.flush()?;
        }
        points.push(point);
    }
    Ok(points)
}

/// Writes a sweep table to a fresh CSV file.
pub fn write_csv(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for p in points {
        writeln!(w, "{}", p.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::MeasFlip;

    #[test]
    fn resources() {
        for d in 3..=25u64 {
            let a = estimate_resources(d, Layout::Local).unwrap();
            let b = estimate_resources(d, Layout::Cylinder).unwrap();
            let d = d as u128;
            assert_eq!((a.qubit_count, a.time_units, a.spacetime_volume), (10 * d * d, 3 * d, 30 * d * d * d));
            assert_eq!((b.qubit_count, b.time_units, b.spacetime_volume), (6 * d * d, 3 * d, 18 * d * d * d));
            assert_eq!(b.qubit_count * 5, a.qubit_count * 3);
            assert_eq!(a.transit_time, 2 * d);
        }
        assert!(estimate_resources(0, Layout::Local).is_err());
    }

    #[test]
    fn wilson_brackets_rate() {
        let (lo, hi) = wilson_interval(10, 100);
        assert!(lo < 0.1 && hi > 0.1);
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.005);
    }

    #[test]
    fn config_round_trip_and_validation() {
        let c = ExperimentConfig::from_toml_str("L = [4, 6]\neps = [0.01]\ntrials = 10\nseed = 3\n").unwrap();
        assert_eq!(c.sizes, vec![4, 6]);
        assert_eq!(c.q, 87);
        let j = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json_str(&j).unwrap(), c);
        assert_eq!(c.hash(), ExperimentConfig::from_json_str(&j).unwrap().hash());
        assert!(matches!(
            ExperimentConfig::from_toml_str("L = [4]\neps = [0.01]\ntrials = 0\n"),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::from_toml_str("L = [1]\neps = [0.01]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("L = [4]\neps = [0.01]\nbogus = 1\n").is_err());
    }

    #[test]
    fn noiseless_trial_succeeds() {
        let p = TrialParams::new(4, 0.0, 1, 0);
        let r = run_trial_traced(&TrialContext::for_params(&p).unwrap(), &p, None).unwrap();
        assert!(r.record.jit_success && r.record.hp_success && r.record.agreement);
        assert!(r.jit.correction.is_empty() && r.residual.is_empty());
        assert_eq!(r.record.max_s_emp, None);
    }

    #[test]
    fn replay_is_identical() {
        let p = TrialParams::new(4, 0.02, 11, 5);
        assert_eq!(run_trial(&p).unwrap(), run_trial(&p).unwrap());
    }

    #[test]
    fn initial_face_flip_needs_prefixing() {
        let l = 6;
        let geom = main_geometry(l).unwrap();
        let face = FaceId::new(Coord3::new(0, 3, 3), Axis::X);
        let mut planted = ErrorSet::default();
        planted.meas_flips.insert(MeasFlip(PlaquetteSite::Face(face), 0));
        let mut p = TrialParams::new(l, 0.0, 2, 0);
        let with = run_trial_planted(&p, &planted).unwrap();
        assert_eq!(with.flags.iter().copied().collect::<Vec<_>>(), vec![face]);
        assert!(with.record.jit_success && with.residual.is_empty());
        p.prefix = false;
        let without = run_trial_planted(&p, &planted).unwrap();
        assert!(without.residual.len() > 1, "{:?}", without.residual);
        assert!(geom.face_index(face).is_some());
    }
}
