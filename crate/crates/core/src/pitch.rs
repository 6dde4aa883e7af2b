//! Fundamental-frequency contours: loading, validation, normalization and decimation.
//!
//! Contours are consumed from the output of an external pitch tracker. Unvoiced
//! frames carry `f0 == 0.0` and are excluded from every statistic.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum allowed deviation of an inter-frame delta from the frame step, in seconds.
pub const STEP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum PitchError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("frame {index}: time delta {delta} s deviates from frame step {step} s")]
    NonUniformStep { index: usize, delta: f64, step: f64 },
    #[error("contour has no frames")]
    EmptyContour,
    #[error("no voiced frames")]
    NoVoicedFrames,
    #[error("normalization mean must be strictly positive, got {0}")]
    ZeroMean(f64),
    #[error("decimation factor must be >= 1, got {0}")]
    InvalidFactor(usize),
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

/// One analysis frame of a pitch track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F0Frame {
    pub time: f64,
    /// Hertz (or dimensionless after normalization); `0.0` when unvoiced.
    pub f0: f64,
    pub voiced: bool,
}

impl F0Frame {
    pub fn voiced(time: f64, f0: f64) -> Self {
        Self { time, f0, voiced: true }
    }

    pub fn unvoiced(time: f64) -> Self {
        Self { time, f0: 0.0, voiced: false }
    }
}

/// A uniformly sampled pitch track with voicing decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F0Contour {
    frames: Vec<F0Frame>,
    frame_step: f64,
    f0_min: f64,
    f0_max: f64,
}

impl F0Contour {
    /// Validates and builds a contour.
    ///
    /// Frames must be strictly increasing in time with deltas equal to
    /// `frame_step` (within [`STEP_TOLERANCE`]); voiced values must lie within
    /// `[f0_min, f0_max]`.
    pub fn new(
        frames: Vec<F0Frame>,
        frame_step: f64,
        f0_min: f64,
        f0_max: f64,
    ) -> Result<Self, PitchError> {
        if frames.is_empty() {
            return Err(PitchError::EmptyContour);
        }
        if !(frame_step > 0.0) || !frame_step.is_finite() {
            return Err(PitchError::InvalidContour(format!(
                "frame step must be positive, got {frame_step}"
            )));
        }
        if !(f0_min >= 0.0 && f0_min < f0_max) {
            return Err(PitchError::InvalidContour(format!(
                "invalid f0 bounds [{f0_min}, {f0_max}]"
            )));
        }
        check_uniform(&frames, frame_step)?;
        for (i, fr) in frames.iter().enumerate() {
            if !fr.time.is_finite() || fr.time < 0.0 {
                return Err(PitchError::InvalidContour(format!(
                    "frame {i}: invalid time {}",
                    fr.time
                )));
            }
            if fr.voiced && !(fr.f0 >= f0_min && fr.f0 <= f0_max) {
                return Err(PitchError::InvalidContour(format!(
                    "frame {i}: voiced f0 {} outside [{f0_min}, {f0_max}]",
                    fr.f0
                )));
            }
            if !fr.voiced && fr.f0 != 0.0 {
                return Err(PitchError::InvalidContour(format!(
                    "frame {i}: unvoiced frame carries f0 {}",
                    fr.f0
                )));
            }
        }
        Ok(Self {
            frames,
            frame_step,
            f0_min,
            f0_max,
        })
    }

    /// Builds an all-voiced contour from uniformly spaced values starting at `start`.
    pub fn from_values(
        start: f64,
        frame_step: f64,
        values: &[f64],
        f0_min: f64,
        f0_max: f64,
    ) -> Result<Self, PitchError> {
        let frames = values
            .iter()
            .enumerate()
            .map(|(i, &v)| F0Frame::voiced(start + i as f64 * frame_step, v))
            .collect();
        Self::new(frames, frame_step, f0_min, f0_max)
    }

    pub fn frames(&self) -> &[F0Frame] {
        &self.frames
    }

    pub fn frame_step(&self) -> f64 {
        self.frame_step
    }

    pub fn f0_min(&self) -> f64 {
        self.f0_min
    }

    pub fn f0_max(&self) -> f64 {
        self.f0_max
    }

    pub fn voiced(&self) -> impl Iterator<Item = &F0Frame> {
        self.frames.iter().filter(|f| f.voiced)
    }

    pub fn voiced_count(&self) -> usize {
        self.voiced().count()
    }

    pub fn start_time(&self) -> f64 {
        self.frames[0].time
    }

    pub fn end_time(&self) -> f64 {
        self.frames[self.frames.len() - 1].time
    }

    /// Writes the contour as `time_s,f0_hz,voiced` CSV with a header.
    ///
    /// Values use the shortest representation that parses back to the same `f64`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("time_s,f0_hz,voiced\n");
        for fr in &self.frames {
            let _ = writeln!(out, "{:?},{:?},{}", fr.time, fr.f0, u8::from(fr.voiced));
        }
        out
    }
}

fn check_uniform(frames: &[F0Frame], step: f64) -> Result<(), PitchError> {
    for (i, pair) in frames.windows(2).enumerate() {
        let delta = pair[1].time - pair[0].time;
        if (delta - step).abs() > STEP_TOLERANCE {
            return Err(PitchError::NonUniformStep {
                index: i + 1,
                delta,
                step,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum F0Format {
    /// `time_s,f0_hz[,voiced]`, optional header.
    Csv,
    /// Whitespace separated `time_s f0_hz` lines.
    TwoColumnText,
}

impl F0Format {
    /// Guesses the format from a file extension: `.csv` is CSV, anything else is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => F0Format::Csv,
            _ => F0Format::TwoColumnText,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct F0LoadOptions {
    /// Expected hop. `None` infers it from the first two frames.
    pub frame_step: Option<f64>,
    pub f0_min: f64,
    pub f0_max: f64,
}

impl Default for F0LoadOptions {
    fn default() -> Self {
        Self {
            frame_step: None,
            f0_min: 50.0,
            f0_max: 600.0,
        }
    }
}

/// Step used for single-frame files when none is declared.
pub const DEFAULT_FRAME_STEP: f64 = 0.01;

pub fn load_f0(
    path: impl AsRef<Path>,
    format: F0Format,
    opts: &F0LoadOptions,
) -> Result<F0Contour, PitchError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PitchError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_f0(&text, format, opts)
}

/// Parses contour text. Rows with `f0 <= 0`, a zero voicing flag, or a value
/// outside the configured bounds become unvoiced frames.
pub fn parse_f0(text: &str, format: F0Format, opts: &F0LoadOptions) -> Result<F0Contour, PitchError> {
    let mut rows: Vec<(f64, f64, Option<bool>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = match format {
            F0Format::Csv => line.split(',').map(str::trim).collect(),
            F0Format::TwoColumnText => line.split_whitespace().collect(),
        };
        let max_cols = match format {
            F0Format::Csv => 3,
            F0Format::TwoColumnText => 2,
        };
        if fields.len() < 2 || fields.len() > max_cols {
            return Err(PitchError::MalformedRow {
                line: lineno + 1,
                reason: format!("expected 2..={max_cols} columns, got {}", fields.len()),
            });
        }
        let time = fields[0].parse::<f64>();
        let f0 = fields[1].parse::<f64>();
        let (time, f0) = match (time, f0) {
            (Ok(t), Ok(f)) => (t, f),
            _ if rows.is_empty() && format == F0Format::Csv && fields[0].parse::<f64>().is_err() => {
                // header row
                continue;
            }
            _ => {
                return Err(PitchError::MalformedRow {
                    line: lineno + 1,
                    reason: format!("non-numeric value in '{line}'"),
                })
            }
        };
        let flag = match fields.get(2) {
            None => None,
            Some(s) => match *s {
                "1" | "true" | "True" => Some(true),
                "0" | "false" | "False" => Some(false),
                other => {
                    return Err(PitchError::MalformedRow {
                        line: lineno + 1,
                        reason: format!("bad voicing flag '{other}'"),
                    })
                }
            },
        };
        if !time.is_finite() || !f0.is_finite() {
            return Err(PitchError::MalformedRow {
                line: lineno + 1,
                reason: "non-finite value".into(),
            });
        }
        rows.push((time, f0, flag));
    }
    if rows.is_empty() {
        return Err(PitchError::EmptyContour);
    }
    let step = match opts.frame_step {
        Some(s) => s,
        None if rows.len() >= 2 => rows[1].0 - rows[0].0,
        None => DEFAULT_FRAME_STEP,
    };
    let frames = rows
        .into_iter()
        .map(|(time, f0, flag)| {
            let voiced = flag.unwrap_or(true) && f0 > 0.0 && f0 >= opts.f0_min && f0 <= opts.f0_max;
            if voiced {
                F0Frame::voiced(time, f0)
            } else {
                F0Frame::unvoiced(time)
            }
        })
        .collect::<Vec<_>>();
    check_uniform(&frames, step)?;
    F0Contour::new(frames, step, opts.f0_min, opts.f0_max)
}

/// Arithmetic mean over the voiced frames of all contours.
pub fn compute_mean_f0<'a, I>(contours: I) -> Result<f64, PitchError>
where
    I: IntoIterator<Item = &'a F0Contour>,
{
    let (sum, n) = contours
        .into_iter()
        .flat_map(|c| c.voiced())
        .fold((0.0, 0usize), |(s, n), f| (s + f.f0, n + 1));
    if n == 0 {
        return Err(PitchError::NoVoicedFrames);
    }
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    #[default]
    Phrase,
    Speaker,
}

impl std::fmt::Display for NormMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormMode::Phrase => "phrase",
            NormMode::Speaker => "speaker",
        })
    }
}

impl std::str::FromStr for NormMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phrase" => Ok(NormMode::Phrase),
            "speaker" => Ok(NormMode::Speaker),
            other => Err(format!("unknown normalization mode '{other}'")),
        }
    }
}

/// The constant a contour is divided by, and where it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationScope {
    pub mode: NormMode,
    pub mean_f0: f64,
}

impl NormalizationScope {
    pub fn new(mode: NormMode, mean_f0: f64) -> Result<Self, PitchError> {
        if !(mean_f0 > 0.0) || !mean_f0.is_finite() {
            return Err(PitchError::ZeroMean(mean_f0));
        }
        Ok(Self { mode, mean_f0 })
    }

    /// Phrase scope from the voiced mean of a single contour.
    pub fn phrase(contour: &F0Contour) -> Result<Self, PitchError> {
        Self::new(NormMode::Phrase, compute_mean_f0([contour])?)
    }
}

/// Divides every voiced value (and the bounds) by `scope.mean_f0`.
pub fn normalize_f0(contour: &F0Contour, scope: &NormalizationScope) -> Result<F0Contour, PitchError> {
    let m = scope.mean_f0;
    if !(m > 0.0) {
        return Err(PitchError::ZeroMean(m));
    }
    let frames = contour
        .frames
        .iter()
        .map(|f| if f.voiced { F0Frame::voiced(f.time, f.f0 / m) } else { *f })
        .collect();
    Ok(F0Contour {
        frames,
        frame_step: contour.frame_step,
        f0_min: contour.f0_min / m,
        f0_max: contour.f0_max / m,
    })
}

/// Moving-average low-pass followed by keeping every `factor`-th frame.
///
/// The averaging window has `factor` frames, starts `(factor - 1) / 2` frames
/// before the kept frame and never crosses a voicing boundary. Unvoiced kept
/// frames stay unvoiced.
pub fn resample_with_lowpass(contour: &F0Contour, factor: usize) -> Result<F0Contour, PitchError> {
    if factor < 1 {
        return Err(PitchError::InvalidFactor(factor));
    }
    if factor == 1 {
        return Ok(contour.clone());
    }
    let frames = &contour.frames;
    let n = frames.len();
    // run id per frame; -1 for unvoiced
    let mut run = vec![usize::MAX; n];
    let mut current = 0usize;
    for i in 0..n {
        if frames[i].voiced {
            if i > 0 && !frames[i - 1].voiced {
                current += 1;
            }
            run[i] = current;
        }
    }
    let back = (factor - 1) / 2;
    let out = (0..n)
        .step_by(factor)
        .map(|i| {
            let fr = frames[i];
            if !fr.voiced {
                return fr;
            }
            let lo = i.saturating_sub(back);
            let hi = (lo + factor).min(n);
            let (sum, cnt) = (lo..hi)
                .filter(|&j| run[j] == run[i])
                .fold((0.0, 0usize), |(s, c), j| (s + frames[j].f0, c + 1));
            F0Frame::voiced(fr.time, sum / cnt as f64)
        })
        .collect::<Vec<_>>();
    let step = contour.frame_step * factor as f64;
    // averaging keeps values inside the original bounds
    Ok(F0Contour {
        frames: out,
        frame_step: step,
        f0_min: contour.f0_min,
        f0_max: contour.f0_max,
    })
}
