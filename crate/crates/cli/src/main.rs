use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaugefix_core::chunks::{decompose, decomposition_report, DecoderParams};
use gaugefix_core::harness::{
    estimate_resources, run_sweep, run_trial_traced, ExperimentConfig, CSV_HEADER, Layout, TrialContext, TrialParams,
};
use gaugefix_core::jit::audit_error;
use gaugefix_core::noise::{sample_errors, to_sites, NoiseParams, SiteGrid};
use gaugefix_core::{build_lattice, Axis, BoundarySpec, Error, LatticeKind};
use serde_json::json;

#[derive(Parser)]
#[command(name = "gaugefix", version, about = "Gauge fixing between 3D surface codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lattice geometry tools.
    Lattice {
        #[command(subcommand)]
        action: LatticeCmd,
    },
    /// Single end-to-end trials.
    Trial {
        #[command(subcommand)]
        action: TrialCmd,
    },
    /// Monte Carlo sweeps.
    Sweep {
        #[command(subcommand)]
        action: SweepCmd,
    },
    /// Spread audit of the just-in-time decoder.
    Spread {
        #[command(subcommand)]
        action: SpreadCmd,
    },
    /// Chunk decomposition of sampled errors.
    Chunk {
        #[command(subcommand)]
        action: ChunkCmd,
    },
    /// Resource estimate for code distance d.
    Resources {
        #[arg(short)]
        d: u64,
        #[arg(long, value_enum, default_value_t = LayoutArg::Local)]
        layout: LayoutArg,
        /// Added to the spacetime volume, e.g. for magic-state distillation.
        #[arg(long, default_value_t = 0)]
        distillation_volume: u128,
    },
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// One line per vertex, edge, plaquette: type, coordinates, orientation, boundary tag.
    Dump {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TrialCmd {
    /// Runs one trial and prints its record as JSON.
    Run {
        #[arg(short = 'L', long = "size")]
        l: i32,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Flat key-value config supplying decoder parameters and switches.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Writes the just-in-time decision log as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SweepCmd {
    /// Runs the grid of a config file and writes the CSV table.
    Run {
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SpreadCmd {
    /// Samples errors and reports per-component spread of the decoder.
    Audit {
        #[arg(short = 'L', long = "size")]
        l: i32,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(short = 'Q', long, default_value_t = 87)]
        q: u64,
    },
}

#[derive(Subcommand)]
enum ChunkCmd {
    /// Decomposes sampled errors into chunks and checks the diameter lemma.
    Analyze {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'Q', long, default_value_t = 87)]
        q: u64,
        /// Side of a site in lattice units.
        #[arg(long, default_value_t = 2)]
        site_side: i32,
    },
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Cubic)]
    kind: KindArg,
    #[arg(short = 'L', long = "size")]
    l: i32,
    #[arg(long, value_enum, default_value_t = AxisArg::Z)]
    rough: AxisArg,
}

impl LatticeArgs {
    fn build(&self) -> Result<gaugefix_core::LatticeGeometry, Error> {
        let kind = match self.kind {
            KindArg::Cubic => LatticeKind::Cubic,
            KindArg::Alternative => LatticeKind::Alternative,
        };
        let axis = match self.rough {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
            AxisArg::Z => Axis::Z,
        };
        build_lattice(kind, self.l, BoundarySpec::rough_along(axis))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Cubic,
    Alternative,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Local,
    Cylinder,
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Lattice { action: LatticeCmd::Dump { lattice, output } } => {
            let g = lattice.build()?;
            match output {
                Some(p) => g.dump(BufWriter::new(File::create(p)?))?,
                None => g.dump(BufWriter::new(io::stdout().lock()))?,
            }
        }
        Command::Trial { action: TrialCmd::Run { l, eps, seed, trial, config, log } } => {
            let params = match config {
                Some(path) => {
                    let mut c = ExperimentConfig::from_path(&path)?;
                    c.seed = seed;
                    c.trial_params(l, eps, trial)
                }
                None => TrialParams::new(l, eps, seed, trial),
            };
            if l < 2 {
                return Err(Error::Config(format!("L must be at least 2, got {l}")));
            }
            let ctx = TrialContext::for_params(&params)?;
            let trace = run_trial_traced(&ctx, &params, None)?;
            if let Some(p) = log {
                trace.jit.write_log(BufWriter::new(File::create(p)?))?;
            }
            print_json(&trace.record)?;
        }
        Command::Sweep { action: SweepCmd::Run { config, output } } => {
            let mut c = ExperimentConfig::from_path(&config)?;
            if output.is_some() {
                c.output = output;
            }
            let points = run_sweep(&c)?;
            if c.output.is_none() {
                let mut out = io::stdout().lock();
                writeln!(out, "{}", CSV_HEADER)?;
                for p in &points {
                    writeln!(out, "{}", p.csv_row())?;
                }
            }
        }
        Command::Spread { action: SpreadCmd::Audit { l, eps, seed, trials, q } } => {
            let g = build_lattice(LatticeKind::Cubic, l, BoundarySpec::rough_along(Axis::Z))?;
            let params = DecoderParams { q, ..DecoderParams::default() };
            let noise = NoiseParams::new(eps, seed)?;
            let mut reports = Vec::new();
            for k in 0..trials {
                let errors = sample_errors(&g, &noise, k)?;
                let (_, rep) = audit_error(&g, &errors, &params)?;
                reports.push(json!({ "trial": k, "report": rep }));
            }
            print_json(&reports)?;
        }
        Command::Chunk { action: ChunkCmd::Analyze { lattice, eps, seed, q, site_side } } => {
            let g = lattice.build()?;
            let errors = sample_errors(&g, &NoiseParams::new(eps, seed)?, 0)?;
            let sites: Vec<_> = to_sites(&errors, &SiteGrid::new(&g, site_side)).into_iter().collect();
            let params = DecoderParams { q, ..DecoderParams::default() };
            let d = decompose(&sites, q)?;
            print_json(&decomposition_report(&d, &params))?;
        }
        Command::Resources { d, layout, distillation_volume } => {
            let layout = match layout {
                LayoutArg::Local => Layout::Local,
                LayoutArg::Cylinder => Layout::Cylinder,
            };
            let r = estimate_resources(d, layout)?;
            print_json(&json!({
                "estimate": r,
                "distillation_volume": distillation_volume,
                "total_volume": r.spacetime_volume + distillation_volume,
            }))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Internal(_) | Error::UnneutralisedSyndrome(_) | Error::OpenStrings(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
