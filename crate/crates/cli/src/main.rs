use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "morph4d", version, about = "Landmark-motion synthesis and mesh deformation")]
struct Cli {
    /// Pipeline config (JSON); falls back to $MORPH4D_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Landmark sequence (JSON, CSV or OBJ directory) to SRVF JSON.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        /// Landmark indices for OBJ input; every vertex when absent.
        #[arg(long)]
        landmarks: Option<PathBuf>,
    },
    /// SRVF plus initial frame to a landmark sequence.
    Decode {
        #[arg(long)]
        srvf: PathBuf,
        /// Frame JSON or a sequence whose first frame is used.
        #[arg(long)]
        init: PathBuf,
        /// Keep the unit-length curve instead of restoring the stored length.
        #[arg(long)]
        unit: bool,
    },
    /// Geodesic interpolation between two SRVFs.
    Interpolate {
        #[arg(long)]
        q1: PathBuf,
        #[arg(long)]
        q2: PathBuf,
        /// Single point on the geodesic.
        #[arg(long, conflicts_with = "steps")]
        tau: Option<f64>,
        /// Evenly spaced points including both ends.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Peak-to-peak transition from two onset motions.
    SynthTransition {
        #[arg(long)]
        m1: PathBuf,
        #[arg(long)]
        m2: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Long sequence from a recipe of labels and a motion library.
    Compose {
        #[arg(long)]
        recipe: PathBuf,
        #[arg(long)]
        motions: PathBuf,
        #[arg(long)]
        init: PathBuf,
    },
    /// Source motion replayed from a new initial frame.
    Transfer {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
    /// PCA deformation model from neutral/expression mesh pairs.
    TrainModel {
        /// Directory of sequences (subdirectories of OBJ frames, frame 0 neutral).
        #[arg(long, required_unless_present = "pairs")]
        sequences: Option<PathBuf>,
        /// JSON list of {"neutral": path, "expression": path}.
        #[arg(long, conflicts_with = "sequences")]
        pairs: Option<PathBuf>,
        #[arg(long)]
        landmarks: Option<PathBuf>,
        /// Number of modes; overrides the config.
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Deform a neutral mesh to target landmarks.
    Fit {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        neutral: PathBuf,
        /// Single landmark frame; writes one OBJ.
        #[arg(long, required_unless_present = "sequence")]
        target: Option<PathBuf>,
        /// Landmark sequence; writes a directory of OBJ frames.
        #[arg(long, conflicts_with = "target")]
        sequence: Option<PathBuf>,
    },
    /// Metric report as JSON (stdout without --out).
    Evaluate(Evaluate),
    /// Per-vertex landmark-distance weights as CSV.
    Weights {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        landmarks: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Evaluate {
    #[command(subcommand)]
    metric: Metric,
}

#[derive(Subcommand)]
enum Metric {
    /// Mean per-vertex distance between two meshes.
    PerVertex {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Comma-separated ascending thresholds for a cumulative curve.
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<f64>,
    },
    /// Best per-vertex error within a temporal window.
    SlidingWindow {
        #[arg(long)]
        gen: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        window: usize,
    },
    /// Distance of generated landmark sequences to a reference.
    Specificity {
        #[arg(long, num_args = 1.., required = true)]
        gen: Vec<PathBuf>,
        #[arg(long)]
        reference: PathBuf,
    },
    /// Mean L1 between displacement fields relative to a neutral mesh.
    DisplacementL1 {
        #[arg(long)]
        neutral: PathBuf,
        #[arg(long)]
        gen: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// L1 vertex error weighted by landmark distance on the neutral mesh.
    WeightedL1 {
        #[arg(long)]
        neutral: PathBuf,
        #[arg(long)]
        gen: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        landmarks: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
