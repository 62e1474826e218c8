//! Pipeline configuration: every tunable of every stage, with defaults,
//! a plain `key = value` file format, environment-variable overrides and
//! validation. Length and area parameters are stored at the 1280×720
//! reference resolution and scaled to the actual frame size at run time
//! (lengths by the square root of the area ratio, areas by the ratio).

use std::collections::BTreeMap;
use std::path::Path;

use crate::classify::HeuristicParams;
use crate::proposals::{HslWindow, ProposalParams};
use crate::redetect::RedetectParams;
use crate::track::TrackerParams;
use crate::{Error, Result};

/// Reference resolution for scale-dependent defaults.
pub const REFERENCE_WIDTH: u32 = 1280;
pub const REFERENCE_HEIGHT: u32 = 720;

/// Prefix for environment overrides: `SHUTTLETRACK_<KEY>` (upper-case key).
pub const ENV_PREFIX: &str = "SHUTTLETRACK_";

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    Heuristic,
    External(String),
}

impl ClassifierSpec {
    pub fn parse(s: &str) -> Result<ClassifierSpec> {
        if s == "heuristic" {
            Ok(ClassifierSpec::Heuristic)
        } else if let Some(cmd) = s.strip_prefix("external:") {
            if cmd.trim().is_empty() {
                return Err(Error::Config("external classifier command is empty".into()));
            }
            Ok(ClassifierSpec::External(cmd.to_string()))
        } else {
            Err(Error::Config(format!(
                "classifier must be `heuristic` or `external:<command>`, got `{s}`"
            )))
        }
    }
}

impl std::fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassifierSpec::Heuristic => write!(f, "heuristic"),
            ClassifierSpec::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    // motion
    pub motion_threshold: u8,
    // proposals
    pub blur_kernel: u32,
    pub blur_passes: u32,
    pub hue_window: f64,
    pub sat_window: f64,
    pub lum_window: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub a_human: f64,
    pub max_regions: usize,
    // tracker
    pub d: f64,
    pub t_valid: u32,
    pub t_valid_fast: u32,
    pub t_lost: u32,
    pub cos_min: f64,
    pub sim_min: f64,
    pub k_fit: usize,
    pub fast_tracker: bool,
    // re-detection
    pub r_intra: f64,
    pub r0: f64,
    pub r_growth: f64,
    pub g_max: usize,
    // association / evaluation
    pub epsilon: f64,
    pub tau: f64,
    // classifier backend
    pub classifier: ClassifierSpec,
    pub brightness_percentile: f64,
    pub min_variation: f64,
    // execution
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            motion_threshold: 25,
            blur_kernel: 3,
            blur_passes: 2,
            hue_window: 10.0,
            sat_window: 0.15,
            lum_window: 0.12,
            c_min: 8.0,
            c_max: 150.0,
            a_human: 1500.0,
            max_regions: 64,
            d: 40.0,
            t_valid: 5,
            t_valid_fast: 3,
            t_lost: 4,
            cos_min: 0.8,
            sim_min: 0.9,
            k_fit: 5,
            fast_tracker: true,
            r_intra: 25.0,
            r0: 20.0,
            r_growth: 8.0,
            g_max: 12,
            epsilon: 5.0,
            tau: 5.0,
            classifier: ClassifierSpec::Heuristic,
            brightness_percentile: 85.0,
            min_variation: 12.0 / 255.0,
            threads: 1,
        }
    }
}

impl PipelineConfig {
    /// Parses a plain `key = value` file: one assignment per line, `#`
    /// comments, unknown keys rejected. Missing keys keep their defaults.
    pub fn from_file(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected `key = value`",
                    path.display(),
                    ln + 1
                )));
            };
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `SHUTTLETRACK_<KEY>` environment overrides for every key.
    pub fn apply_env_overrides(&mut self) -> Result<()> {
        for (var, value) in std::env::vars() {
            if let Some(key) = var.strip_prefix(ENV_PREFIX) {
                self.set(&key.to_lowercase(), &value)?;
            }
        }
        Ok(())
    }

    /// Sets one key from its textual form. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| {
                Error::Config(format!("bad value `{value}` for key `{key}`"))
            })
        }
        match key {
            "motion_threshold" => self.motion_threshold = parse(key, value)?,
            "blur_kernel" => self.blur_kernel = parse(key, value)?,
            "blur_passes" => self.blur_passes = parse(key, value)?,
            "hue_window" => self.hue_window = parse(key, value)?,
            "sat_window" => self.sat_window = parse(key, value)?,
            "lum_window" => self.lum_window = parse(key, value)?,
            "c_min" => self.c_min = parse(key, value)?,
            "c_max" => self.c_max = parse(key, value)?,
            "a_human" => self.a_human = parse(key, value)?,
            "max_regions" => self.max_regions = parse(key, value)?,
            "d" => self.d = parse(key, value)?,
            "t_valid" => self.t_valid = parse(key, value)?,
            "t_valid_fast" => self.t_valid_fast = parse(key, value)?,
            "t_lost" => self.t_lost = parse(key, value)?,
            "cos_min" => self.cos_min = parse(key, value)?,
            "sim_min" => self.sim_min = parse(key, value)?,
            "k_fit" => self.k_fit = parse(key, value)?,
            "fast_tracker" => self.fast_tracker = parse(key, value)?,
            "r_intra" => self.r_intra = parse(key, value)?,
            "r0" => self.r0 = parse(key, value)?,
            "r_growth" => self.r_growth = parse(key, value)?,
            "g_max" => self.g_max = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "classifier" => self.classifier = ClassifierSpec::parse(value)?,
            "brightness_percentile" => self.brightness_percentile = parse(key, value)?,
            "min_variation" => self.min_variation = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_min > 0.0 && self.c_min < self.c_max) {
            return Err(Error::Config(format!(
                "require 0 < c_min < c_max, got ({}, {})",
                self.c_min, self.c_max
            )));
        }
        if self.a_human <= self.c_max * self.c_max / 16.0 {
            return Err(Error::Config(format!(
                "a_human ({}) must exceed c_max²/16 ({})",
                self.a_human,
                self.c_max * self.c_max / 16.0
            )));
        }
        if self.blur_kernel % 2 == 0 || self.blur_kernel == 0 {
            return Err(Error::Config(format!(
                "blur_kernel must be odd, got {}",
                self.blur_kernel
            )));
        }
        if self.d <= 0.0 {
            return Err(Error::Config("d must be positive".into()));
        }
        if self.t_valid < 3 {
            return Err(Error::Config("t_valid must be at least 3".into()));
        }
        if self.t_lost < 1 {
            return Err(Error::Config("t_lost must be at least 1".into()));
        }
        if !(0.0 < self.cos_min && self.cos_min <= 1.0) {
            return Err(Error::Config("cos_min must lie in (0, 1]".into()));
        }
        if !(0.0 < self.sim_min && self.sim_min <= 1.0) {
            return Err(Error::Config("sim_min must lie in (0, 1]".into()));
        }
        if self.k_fit < 2 {
            return Err(Error::Config("k_fit must be at least 2".into()));
        }
        if self.max_regions == 0 {
            return Err(Error::Config("max_regions must be at least 1".into()));
        }
        if self.epsilon <= 0.0 || self.tau <= 0.0 {
            return Err(Error::Config("epsilon and tau must be positive".into()));
        }
        if !(0.0..=100.0).contains(&self.brightness_percentile) {
            return Err(Error::Config(
                "brightness_percentile must lie in [0, 100]".into(),
            ));
        }
        if self.r_intra <= 0.0 || self.r0 <= 0.0 || self.r_growth < 0.0 {
            return Err(Error::Config("ROI radii out of range".into()));
        }
        Ok(())
    }

    /// Length scale factor relative to the reference resolution.
    pub fn length_scale(width: u32, height: u32) -> f64 {
        ((width as f64 * height as f64)
            / (REFERENCE_WIDTH as f64 * REFERENCE_HEIGHT as f64))
            .sqrt()
    }

    pub fn proposal_params(&self, width: u32, height: u32) -> ProposalParams {
        let s = Self::length_scale(width, height);
        ProposalParams {
            window: HslWindow {
                hue: self.hue_window,
                sat: self.sat_window,
                lum: self.lum_window,
            },
            c_min: self.c_min * s,
            c_max: self.c_max * s,
            a_human: self.a_human * s * s,
            max_regions: self.max_regions,
            blur_kernel: self.blur_kernel,
            blur_passes: self.blur_passes,
        }
    }

    pub fn tracker_params(&self, width: u32, height: u32) -> TrackerParams {
        let s = Self::length_scale(width, height);
        TrackerParams {
            d: self.d * s,
            t_valid: self.t_valid,
            t_valid_fast: self.t_valid_fast,
            t_lost: self.t_lost,
            cos_min: self.cos_min,
            sim_min: self.sim_min,
            k_fit: self.k_fit,
            fast_enabled: self.fast_tracker,
        }
    }

    pub fn redetect_params(&self, width: u32, height: u32) -> RedetectParams {
        let s = Self::length_scale(width, height);
        RedetectParams {
            r_intra: self.r_intra * s,
            r0: self.r0 * s,
            r_growth: self.r_growth * s,
            g_max: self.g_max,
            k_fit: self.k_fit,
            confirm_epsilon: self.epsilon,
        }
    }

    pub fn heuristic_params(&self) -> HeuristicParams {
        HeuristicParams {
            brightness_percentile: self.brightness_percentile,
            min_variation: self.min_variation,
            ..Default::default()
        }
    }

    /// All keys and current values, for `--print-config` style output.
    pub fn entries(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("motion_threshold", self.motion_threshold.to_string());
        m.insert("blur_kernel", self.blur_kernel.to_string());
        m.insert("blur_passes", self.blur_passes.to_string());
        m.insert("hue_window", self.hue_window.to_string());
        m.insert("sat_window", self.sat_window.to_string());
        m.insert("lum_window", self.lum_window.to_string());
        m.insert("c_min", self.c_min.to_string());
        m.insert("c_max", self.c_max.to_string());
        m.insert("a_human", self.a_human.to_string());
        m.insert("max_regions", self.max_regions.to_string());
        m.insert("d", self.d.to_string());
        m.insert("t_valid", self.t_valid.to_string());
        m.insert("t_valid_fast", self.t_valid_fast.to_string());
        m.insert("t_lost", self.t_lost.to_string());
        m.insert("cos_min", self.cos_min.to_string());
        m.insert("sim_min", self.sim_min.to_string());
        m.insert("k_fit", self.k_fit.to_string());
        m.insert("fast_tracker", self.fast_tracker.to_string());
        m.insert("r_intra", self.r_intra.to_string());
        m.insert("r0", self.r0.to_string());
        m.insert("r_growth", self.r_growth.to_string());
        m.insert("g_max", self.g_max.to_string());
        m.insert("epsilon", self.epsilon.to_string());
        m.insert("tau", self.tau.to_string());
        m.insert("classifier", self.classifier.to_string());
        m.insert("brightness_percentile", self.brightness_percentile.to_string());
        m.insert("min_variation", self.min_variation.to_string());
        m.insert("threads", self.threads.to_string());
        m
    }
}
