//! Command-line driver for the detection/tracking pipeline.
//!
//! Subcommands: `synth` renders a benchmark sequence with ground truth,
//! `detect` dumps round-one detections, `track` runs the full pipeline to a
//! trajectory, `eval` scores a trajectory against ground truth, `overlay`
//! draws a trajectory back onto the frames.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shuttletrack::associate::Trajectory;
use shuttletrack::config::{ClassifierSpec, PipelineConfig};
use shuttletrack::eval::{audit_fragments, recall_on_nof, score};
use shuttletrack::media::load_manifest;
use shuttletrack::pipeline::{
    overlay_to_dir, run_pipeline, write_report, PipelineOptions, StageDumps,
};
use shuttletrack::synth::{generate, scenarios, GroundTruth, SynthConfig};
use shuttletrack::Error;

#[derive(Parser)]
#[command(
    name = "shuttletrack",
    about = "Two-round coarse-to-fine ball detection and tracking for fixed-camera sports video",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Pipeline config file (`key = value` lines); defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Classifier backend: `heuristic` or `external:<command>`.
    #[arg(long)]
    classifier: Option<String>,
    /// Worker threads for the detection stage (0 = one per core).
    #[arg(long)]
    threads: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> shuttletrack::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        cfg.apply_env_overrides()?;
        if let Some(spec) = &self.classifier {
            cfg.classifier = ClassifierSpec::parse(spec)?;
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic benchmark sequence with ground truth.
    Synth {
        /// Scenario preset.
        #[arg(long, default_value = "clean", value_parser = ["clean", "occlusion", "fastball", "noise", "busy"])]
        scenario: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 640)]
        width: u32,
        #[arg(long, default_value_t = 360)]
        height: u32,
        /// Synthetic config file (JSON); overrides the preset.
        #[arg(long)]
        synth_config: Option<PathBuf>,
        /// Output directory for frames, manifest and ground truth.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run round-one detection only and dump classified detections.
    Detect {
        /// Sequence manifest (one frame file per line).
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Extra stage dumps: masks, proposals, tracklets, detections.
        #[arg(long = "dump-stage")]
        dump_stage: Vec<String>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the full pipeline and write the trajectory.
    Track {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth JSON; when given, an evaluation report is written too.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long = "dump-stage")]
        dump_stage: Vec<String>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score a trajectory CSV against ground truth.
    Eval {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Match tolerance in pixels.
        #[arg(long)]
        tau: Option<f64>,
        /// Directory for report.json/report.txt (stdout only when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Draw a trajectory onto the frames of a sequence.
    Overlay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn scenario_config(name: &str, seed: u64, width: u32, height: u32) -> SynthConfig {
    match name {
        "clean" => scenarios::clean_rally(seed, width, height),
        "occlusion" => scenarios::occlusion(seed, width, height),
        "fastball" => scenarios::fastball(seed, width, height),
        "noise" => scenarios::noise(seed, width, height),
        "busy" => scenarios::busy(seed, width, height),
        _ => unreachable!("clap validates the scenario name"),
    }
}

fn run(cli: Cli) -> shuttletrack::Result<()> {
    match cli.command {
        Command::Synth { scenario, seed, width, height, synth_config, out } => {
            let cfg = match synth_config {
                Some(path) => SynthConfig::load(&path)?,
                None => scenario_config(&scenario, seed, width, height),
            };
            let (manifest, truth) = generate(&cfg, &out)?;
            println!(
                "wrote {} frames, manifest and ground truth to {}",
                manifest.len(),
                out.display()
            );
            let (if_c, of_c, nof_c, vf) = shuttletrack::eval::frame_taxonomy(&truth);
            println!("frame classes: IF={if_c} OF={of_c} NOF={nof_c} (VF={vf})");
            Ok(())
        }
        Command::Detect { manifest, out, dump_stage, config } => {
            let cfg = config.load()?;
            let manifest = load_manifest(&manifest)?;
            let mut dumps = StageDumps::parse(&dump_stage)?;
            dumps.detections = true;
            let options = PipelineOptions { dumps, out_dir: Some(out.clone()) };
            let output = run_pipeline(&manifest, &cfg, &options)?;
            let n: usize = output.detections.iter().map(|d| d.len()).sum();
            let balls: usize = output
                .detections
                .iter()
                .flatten()
                .filter(|d| d.is_ball())
                .count();
            println!("{n} detections ({balls} ball-class) -> {}", out.display());
            Ok(())
        }
        Command::Track { manifest, out, truth, dump_stage, config } => {
            let cfg = config.load()?;
            let manifest = load_manifest(&manifest)?;
            let options = PipelineOptions {
                dumps: StageDumps::parse(&dump_stage)?,
                out_dir: Some(out.clone()),
            };
            let output = run_pipeline(&manifest, &cfg, &options)?;
            println!(
                "trajectory covers {} of {} frames ({} tracklets, {} correct, {} wrong)",
                output.trajectory.len(),
                manifest.len(),
                output.tracks.len(),
                output.groups.correct.len(),
                output.groups.wrong.len()
            );
            if let Some(truth_path) = truth {
                let truth = GroundTruth::load(&truth_path)?;
                let report = score(&output.trajectory, &truth, cfg.tau)?
                    .with_fragments(audit_fragments(&output.round_one_tracks, &truth, cfg.tau));
                print!("{}", report.to_table());
                println!(
                    "recall on NOF frames: {:.1}%",
                    100.0 * recall_on_nof(&output.trajectory, &truth, cfg.tau)
                );
                write_report(&out, &report)?;
            }
            Ok(())
        }
        Command::Eval { trajectory, truth, tau, out, config } => {
            let cfg = config.load()?;
            let text = std::fs::read_to_string(&trajectory)
                .map_err(|e| Error::io(&trajectory, e))?;
            let trajectory = Trajectory::from_csv(&text)?;
            let truth = GroundTruth::load(&truth)?;
            let report = score(&trajectory, &truth, tau.unwrap_or(cfg.tau))?;
            print!("{}", report.to_table());
            if let Some(dir) = out {
                write_report(&dir, &report)?;
            }
            Ok(())
        }
        Command::Overlay { manifest, trajectory, out } => {
            let manifest = load_manifest(&manifest)?;
            let text = std::fs::read_to_string(&trajectory)
                .map_err(|e| Error::io(&trajectory, e))?;
            let trajectory = Trajectory::from_csv(&text)?;
            overlay_to_dir(&manifest, &trajectory, &out)?;
            println!("wrote overlays to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
