//! Per-word pitch patterns: the spline slice under each word, time-normalized
//! to a fixed number of points, divided by the scope mean and split into a
//! mean level and a zero-mean shape.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::UtteranceAlignment;
use crate::momel::MomelSpline;
use crate::pitch::NormalizationScope;

/// Allowed distance between a word interval and the spline domain, seconds.
pub const DOMAIN_SLACK: f64 = 0.05;
pub const MIN_N_F0: usize = 4;
pub const DEFAULT_N_F0: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum PatternError {
    #[error("word {index} [{start}, {end}] lies outside spline domain [{d0}, {d1}]")]
    TimeBaseMismatch {
        index: usize,
        start: f64,
        end: f64,
        d0: f64,
        d1: f64,
    },
    #[error("normalization mean must be strictly positive, got {0}")]
    ZeroMean(f64),
    #[error("n_f0 must be >= {MIN_N_F0}, got {0}")]
    TooFewPoints(usize),
    #[error("row {row}: expected {expected} values, got {got}")]
    LengthMismatch { row: usize, expected: usize, got: usize },
    #[error("pattern matrix io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordPattern {
    #[serde(rename = "utt")]
    pub utterance_id: String,
    #[serde(rename = "i")]
    pub word_index: usize,
    /// Mean of the normalized samples.
    pub level: f64,
    /// Normalized samples minus `level`.
    pub values: Vec<f64>,
}

impl WordPattern {
    pub fn n_f0(&self) -> usize {
        self.values.len()
    }

    /// The normalized slice samples `level + values`.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.values.iter().map(|v| v + self.level).collect()
    }
}

/// Samples the normalized spline under every word of `alignment`.
pub fn extract_patterns(
    spline: &MomelSpline,
    alignment: &UtteranceAlignment,
    scope: &NormalizationScope,
    n_f0: usize,
    utterance_id: &str,
) -> Result<Vec<WordPattern>, PatternError> {
    if n_f0 < MIN_N_F0 {
        return Err(PatternError::TooFewPoints(n_f0));
    }
    let mean = scope.mean_f0;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(PatternError::ZeroMean(mean));
    }
    let (d0, d1) = spline.domain();
    alignment
        .words
        .iter()
        .enumerate()
        .map(|(index, w)| {
            if w.start < d0 - DOMAIN_SLACK || w.end > d1 + DOMAIN_SLACK {
                return Err(PatternError::TimeBaseMismatch {
                    index,
                    start: w.start,
                    end: w.end,
                    d0,
                    d1,
                });
            }
            let slice = spline
                .slice(w.start, w.end)
                .expect("validated alignment words have start < end");
            let samples: Vec<f64> = slice.sample(n_f0).into_iter().map(|v| v / mean).collect();
            Ok(center(samples, utterance_id, index))
        })
        .collect()
}

/// Splits normalized samples into level and zero-mean shape.
pub fn center(samples: Vec<f64>, utterance_id: &str, word_index: usize) -> WordPattern {
    let level = samples.iter().sum::<f64>() / samples.len() as f64;
    WordPattern {
        utterance_id: utterance_id.to_string(),
        word_index,
        level,
        values: samples.into_iter().map(|v| v - level).collect(),
    }
}

/// The corpus matrix of word patterns, `rows × n_f0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatternMatrix {
    rows: Vec<WordPattern>,
    n_f0: usize,
}

impl PatternMatrix {
    pub fn new(n_f0: usize) -> Self {
        Self { rows: Vec::new(), n_f0 }
    }

    pub fn from_rows(n_f0: usize, rows: Vec<WordPattern>) -> Result<Self, PatternError> {
        let mut m = Self::new(n_f0);
        for r in rows {
            m.push(r)?;
        }
        Ok(m)
    }

    pub fn push(&mut self, row: WordPattern) -> Result<(), PatternError> {
        if row.values.len() != self.n_f0 {
            return Err(PatternError::LengthMismatch {
                row: self.rows.len(),
                expected: self.n_f0,
                got: row.values.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[WordPattern] {
        &self.rows
    }

    pub fn n_f0(&self) -> usize {
        self.n_f0
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// One JSON object per line: `{"utt", "i", "level", "values"}`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), PatternError> {
        for r in &self.rows {
            let line = serde_json::to_string(r).map_err(|e| PatternError::Io(e.to_string()))?;
            writeln!(out, "{line}").map_err(|e| PatternError::Io(e.to_string()))?;
        }
        Ok(())
    }

    /// Reads JSON lines; the first row fixes `n_f0`.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, PatternError> {
        let mut rows = Vec::new();
        for line in input.lines() {
            let line = line.map_err(|e| PatternError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            rows.push(serde_json::from_str::<WordPattern>(&line).map_err(|e| PatternError::Io(e.to_string()))?);
        }
        let n = rows.first().map_or(0, |r| r.values.len());
        Self::from_rows(n, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::WordInterval;
    use crate::momel::MomelAnchor;
    use crate::pitch::NormMode;

    fn scope(m: f64) -> NormalizationScope {
        NormalizationScope::new(NormMode::Phrase, m).unwrap()
    }

    fn one_word(start: f64, end: f64) -> UtteranceAlignment {
        UtteranceAlignment::new(vec![WordInterval::new("w", start, end)], "w").unwrap()
    }

    #[test]
    fn constant_spline_gives_flat_unit_pattern() {
        let s = MomelSpline::new(vec![MomelAnchor::new(0.5, 120.0)], (0.0, 1.0)).unwrap();
        let p = extract_patterns(&s, &one_word(0.2, 0.7), &scope(120.0), 8, "u").unwrap();
        assert_eq!(p[0].level, 1.0);
        assert!(p[0].values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_anchor_three_points() {
        let s = MomelSpline::from_anchors(vec![MomelAnchor::new(0.0, 100.0), MomelAnchor::new(1.0, 200.0)]).unwrap();
        // the three-point case bypasses the n_f0 floor through the sampler directly
        let raw: Vec<f64> = s.slice(0.0, 1.0).unwrap().sample(3).into_iter().map(|v| v / 150.0).collect();
        let p = center(raw, "u", 0);
        assert!((p.level - 1.0).abs() < 1e-12);
        let want = [-1.0 / 3.0, 0.0, 1.0 / 3.0];
        for (a, b) in p.values.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn word_after_domain_is_mismatch() {
        let s = MomelSpline::from_anchors(vec![MomelAnchor::new(0.0, 100.0), MomelAnchor::new(1.0, 200.0)]).unwrap();
        let err = extract_patterns(&s, &one_word(2.0, 2.5), &scope(150.0), 8, "u").unwrap_err();
        assert!(matches!(err, PatternError::TimeBaseMismatch { index: 0, .. }));
        // within the slack is fine
        assert!(extract_patterns(&s, &one_word(0.5, 1.04), &scope(150.0), 8, "u").is_ok());
    }

    #[test]
    fn guards() {
        let s = MomelSpline::from_anchors(vec![MomelAnchor::new(0.0, 100.0), MomelAnchor::new(1.0, 200.0)]).unwrap();
        let bad = NormalizationScope {
            mode: NormMode::Phrase,
            mean_f0: 0.0,
        };
        assert_eq!(
            extract_patterns(&s, &one_word(0.0, 1.0), &bad, 8, "u").unwrap_err(),
            PatternError::ZeroMean(0.0)
        );
        assert_eq!(
            extract_patterns(&s, &one_word(0.0, 1.0), &scope(1.0), 3, "u").unwrap_err(),
            PatternError::TooFewPoints(3)
        );
    }

    #[test]
    fn matrix_jsonl_round_trip() {
        let rows = vec![
            center(vec![0.9, 1.0, 1.1, 1.2], "a", 0),
            center(vec![1.3, 1.0, 0.7, 1.0 / 3.0], "b", 4),
        ];
        let m = PatternMatrix::from_rows(4, rows).unwrap();
        let mut buf = Vec::new();
        m.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"utt\":\"a\",\"i\":0,\"level\":"));
        assert_eq!(PatternMatrix::read_jsonl(&buf[..]).unwrap(), m);
        let short = center(vec![1.0; 5], "c", 0);
        assert!(matches!(
            PatternMatrix::from_rows(4, vec![short]),
            Err(PatternError::LengthMismatch { .. })
        ));
    }
}
