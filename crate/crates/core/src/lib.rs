//! Detection and tracking of small fast-moving balls in fixed-camera sports
//! video, built as a two-round, coarse-to-fine pipeline:
//!
//! 1. three-frame differencing ([`motion`]) and contour proposals
//!    ([`proposals`]) feed a pluggable patch classifier ([`classify`]);
//! 2. rule-based tracklet tracking ([`track`]) splits the detections into
//!    short confident fragments;
//! 3. localized re-detection ([`redetect`]) fills gaps inside fragments and
//!    grows them toward their neighbours;
//! 4. data association ([`associate`]) merges consistent fragments into one
//!    trajectory and rejects contradicting noise.
//!
//! [`synth`] renders deterministic synthetic rallies with ground truth and
//! [`eval`] scores a trajectory with the valid-frame precision/recall/F1
//! protocol. [`pipeline`] wires the stages together behind [`config`].

pub mod associate;
pub mod classify;
pub mod config;
pub mod eval;
pub mod geom;
pub mod media;
pub mod motion;
pub mod pipeline;
pub mod proposals;
pub mod redetect;
pub mod synth;
pub mod track;

use std::path::PathBuf;

/// Crate-wide error type. CLI maps [`Error::Config`] to exit code 2 and
/// everything else to 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed pixmap: {reason}")]
    PixmapFormat { path: PathBuf, reason: String },
    #[error("{path}: frame is {got_w}x{got_h}, sequence is {want_w}x{want_h}")]
    DimensionMismatch {
        path: PathBuf,
        want_w: u32,
        want_h: u32,
        got_w: u32,
        got_h: u32,
    },
    #[error("frame is {w}x{h}; frames must be at least {min}x{min}", min = crate::media::MIN_DIM)]
    FrameTooSmall { w: u32, h: u32 },
    #[error("inputs have different dimensions: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(u32, u32, u32, u32),
    #[error("blur kernel must be odd, got {0}")]
    EvenKernel(u32),
    #[error("empty pixel set")]
    EmptyRegion,
    #[error("frame {frame} has no neighbour on both sides")]
    Boundary { frame: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("classifier backend: {0}")]
    Backend(String),
    #[error("sequence has {0} frames; at least 3 are required for motion masks")]
    SequenceTooShort(usize),
    #[error("trajectory frame {frame} outside ground-truth range 0..{len}")]
    RangeMismatch { frame: usize, len: usize },
    #[error("synthetic config: {0}")]
    Synth(String),
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// True for errors caused by an invalid configuration (CLI exit code 2).
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
