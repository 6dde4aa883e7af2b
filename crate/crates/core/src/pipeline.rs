//! Corpus runs: training, markup and dataset export.
//!
//! A corpus is a CSV manifest with the columns
//! `utterance_id,speaker_id,f0_path,alignment_path,text`. Relative paths are
//! resolved against the manifest's directory and file formats come from the
//! extensions. Utterances that fail to load or fit are logged and skipped.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{load_alignment, AlignmentFormat, UtteranceAlignment};
use crate::clustering::{train, ClusterError, ClusterModel, Metric, TrainOutput, TrainParams};
use crate::momel::{fit_momel, MomelFitParams};
use crate::patterns::{extract_patterns, PatternMatrix, WordPattern, DEFAULT_N_F0, MIN_N_F0};
use crate::pitch::{
    compute_mean_f0, load_f0, resample_with_lowpass, F0Contour, F0Format, F0LoadOptions, NormMode,
    NormalizationScope,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error("all {0} utterances were skipped")]
    AllUtterancesSkipped(usize),
    #[error("model does not match the run configuration: {0}")]
    ModelMismatch(String),
    #[error("utterance '{0}' is not in the manifest")]
    IdMismatch(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

impl PipelineError {
    /// Errors caused by the request itself rather than by the data.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_)
                | PipelineError::ModelMismatch(_)
                | PipelineError::Cluster(ClusterError::InvalidParams(_))
        )
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// One manifest row with resolved paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub utterance_id: String,
    pub speaker_id: String,
    pub f0_path: PathBuf,
    pub alignment_path: PathBuf,
    pub text: String,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<UtteranceRecord>, PipelineError> {
    let path = path.as_ref();
    let err = |message: String| PipelineError::Manifest {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out: Vec<UtteranceRecord> = Vec::new();
    for row in reader.deserialize::<UtteranceRecord>() {
        let mut r = row.map_err(|e| err(e.to_string()))?;
        if r.utterance_id.is_empty() {
            return Err(err(format!("row {}: empty utterance_id", out.len() + 1)));
        }
        if out.iter().any(|o| o.utterance_id == r.utterance_id) {
            return Err(err(format!("duplicate utterance_id '{}'", r.utterance_id)));
        }
        r.f0_path = base.join(&r.f0_path);
        r.alignment_path = base.join(&r.alignment_path);
        out.push(r);
    }
    Ok(out)
}

/// How contours become word patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub n_f0: usize,
    pub norm_mode: NormMode,
    pub momel: MomelFitParams,
    pub f0: F0LoadOptions,
    /// Keep every n-th frame after low-pass averaging; 1 disables.
    pub decimation: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            n_f0: DEFAULT_N_F0,
            norm_mode: NormMode::Phrase,
            momel: MomelFitParams::default(),
            f0: F0LoadOptions::default(),
            decimation: 1,
        }
    }
}

impl FeatureConfig {
    /// Features matching a trained model, other settings at defaults.
    pub fn for_model(model: &ClusterModel) -> Self {
        Self {
            n_f0: model.n_f0,
            norm_mode: model.norm_mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.n_f0 < MIN_N_F0 {
            return Err(PipelineError::Config(format!("n_f0 must be >= {MIN_N_F0}, got {}", self.n_f0)));
        }
        if self.decimation == 0 {
            return Err(PipelineError::Config("decimation factor must be >= 1".into()));
        }
        if !(self.f0.f0_min > 0.0 && self.f0.f0_max > self.f0.f0_min) {
            return Err(PipelineError::Config("need 0 < f0_min < f0_max".into()));
        }
        self.momel.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub k: usize,
    pub s: usize,
    pub metric: Metric,
    pub seed: u64,
    pub max_iter: usize,
    pub dba_iter: usize,
    pub band: Option<usize>,
    pub features: FeatureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let p = TrainParams::default();
        Self {
            k: p.k,
            s: p.s,
            metric: p.metric,
            seed: p.seed,
            max_iter: p.max_iter,
            dba_iter: p.dba_iter,
            band: p.band,
            features: FeatureConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.k == 0 || self.s == 0 {
            return Err(PipelineError::Config("k and s must be >= 1".into()));
        }
        if self.max_iter == 0 {
            return Err(PipelineError::Config("max_iter must be >= 1".into()));
        }
        self.features.validate()
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams {
            k: self.k,
            s: self.s,
            metric: self.metric,
            seed: self.seed,
            max_iter: self.max_iter,
            dba_iter: self.dba_iter,
            band: self.band,
            norm_mode: self.features.norm_mode,
        }
    }
}

/// An utterance left out of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub utterance_id: String,
    pub reason: String,
}

/// Word patterns of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceFeatures {
    pub utterance_id: String,
    pub alignment: UtteranceAlignment,
    pub patterns: Vec<WordPattern>,
}

struct Loaded {
    contour: F0Contour,
    alignment: UtteranceAlignment,
}

fn load_one(rec: &UtteranceRecord, cfg: &FeatureConfig) -> Result<Loaded, String> {
    let contour = load_f0(&rec.f0_path, F0Format::from_path(&rec.f0_path), &cfg.f0).map_err(|e| e.to_string())?;
    let contour = if cfg.decimation > 1 {
        resample_with_lowpass(&contour, cfg.decimation).map_err(|e| e.to_string())?
    } else {
        contour
    };
    let alignment = load_alignment(&rec.alignment_path, AlignmentFormat::from_path(&rec.alignment_path))
        .map_err(|e| e.to_string())?;
    Ok(Loaded { contour, alignment })
}

/// Loads, stylizes and slices every utterance. Results keep manifest order;
/// failures are logged and returned separately.
pub fn extract_corpus(
    records: &[UtteranceRecord],
    cfg: &FeatureConfig,
) -> Result<(Vec<UtteranceFeatures>, Vec<Skipped>), PipelineError> {
    cfg.validate()?;
    let loaded: Vec<Result<Loaded, String>> = records.par_iter().map(|r| load_one(r, cfg)).collect();

    let speaker_means: HashMap<&str, Result<f64, String>> = match cfg.norm_mode {
        NormMode::Phrase => HashMap::new(),
        NormMode::Speaker => {
            let mut by_speaker: BTreeMap<&str, Vec<&F0Contour>> = BTreeMap::new();
            for (r, l) in records.iter().zip(&loaded) {
                if let Ok(l) = l {
                    by_speaker.entry(r.speaker_id.as_str()).or_default().push(&l.contour);
                }
            }
            by_speaker
                .into_iter()
                .map(|(s, cs)| (s, compute_mean_f0(cs).map_err(|e| e.to_string())))
                .collect()
        }
    };

    let results: Vec<Result<UtteranceFeatures, String>> = records
        .par_iter()
        .zip(loaded.into_par_iter())
        .map(|(rec, l)| {
            let l = l?;
            let scope = match cfg.norm_mode {
                NormMode::Phrase => NormalizationScope::phrase(&l.contour),
                NormMode::Speaker => {
                    let m = speaker_means[rec.speaker_id.as_str()].clone()?;
                    NormalizationScope::new(NormMode::Speaker, m)
                }
            }
            .map_err(|e| e.to_string())?;
            let spline = fit_momel(&l.contour, &cfg.momel).map_err(|e| e.to_string())?;
            let patterns = extract_patterns(&spline, &l.alignment, &scope, cfg.n_f0, &rec.utterance_id)
                .map_err(|e| e.to_string())?;
            Ok(UtteranceFeatures {
                utterance_id: rec.utterance_id.clone(),
                alignment: l.alignment,
                patterns,
            })
        })
        .collect();

    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for (rec, r) in records.iter().zip(results) {
        match r {
            Ok(f) => ok.push(f),
            Err(reason) => {
                log::warn!("skipping utterance '{}': {reason}", rec.utterance_id);
                skipped.push(Skipped {
                    utterance_id: rec.utterance_id.clone(),
                    reason,
                });
            }
        }
    }
    Ok((ok, skipped))
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub output: TrainOutput,
    pub matrix: PatternMatrix,
    pub skipped: Vec<Skipped>,
}

pub fn run_train(records: &[UtteranceRecord], cfg: &TrainConfig) -> Result<TrainRun, PipelineError> {
    cfg.validate()?;
    let (features, skipped) = extract_corpus(records, &cfg.features)?;
    if features.is_empty() {
        return Err(PipelineError::AllUtterancesSkipped(records.len()));
    }
    let mut matrix = PatternMatrix::new(cfg.features.n_f0);
    for p in features.into_iter().flat_map(|f| f.patterns) {
        matrix.push(p).expect("patterns share n_f0");
    }
    if matrix.is_empty() {
        return Err(PipelineError::AllUtterancesSkipped(records.len()));
    }
    log::info!(
        "training on {} words from {} utterances ({} skipped)",
        matrix.len(),
        records.len() - skipped.len(),
        skipped.len()
    );
    let output = train(&matrix, &cfg.train_params())?;
    Ok(TrainRun {
        output,
        matrix,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkupWord {
    pub text: String,
    pub pattern_id: usize,
    pub state_id: usize,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkupRecord {
    pub utterance_id: String,
    pub words: Vec<MarkupWord>,
}

pub fn run_markup(
    records: &[UtteranceRecord],
    model: &ClusterModel,
    cfg: &FeatureConfig,
) -> Result<(Vec<MarkupRecord>, Vec<Skipped>), PipelineError> {
    if cfg.n_f0 != model.n_f0 {
        return Err(PipelineError::ModelMismatch(format!(
            "model n_f0 = {}, run n_f0 = {}",
            model.n_f0, cfg.n_f0
        )));
    }
    if cfg.norm_mode != model.norm_mode {
        return Err(PipelineError::ModelMismatch(format!(
            "model normalization = {}, run normalization = {}",
            model.norm_mode, cfg.norm_mode
        )));
    }
    let (features, skipped) = extract_corpus(records, cfg)?;
    let out = features
        .into_par_iter()
        .map(|f| {
            let words = f
                .alignment
                .words
                .iter()
                .zip(&f.patterns)
                .map(|(w, p)| {
                    let l = model.assign(p)?;
                    Ok(MarkupWord {
                        text: w.text.clone(),
                        pattern_id: l.pattern_id,
                        state_id: l.state_id,
                        start: w.start,
                        end: w.end,
                    })
                })
                .collect::<Result<Vec<_>, ClusterError>>()?;
            Ok(MarkupRecord {
                utterance_id: f.utterance_id,
                words,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok((out, skipped))
}

/// One classifier training sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub text: String,
    pub labels: Vec<(String, usize, usize)>,
}

/// Joins markups with manifest texts, one record per sentence.
pub fn export_dataset(markups: &[MarkupRecord], records: &[UtteranceRecord]) -> Result<Vec<DatasetRecord>, PipelineError> {
    let texts: HashMap<&str, &str> = records
        .iter()
        .map(|r| (r.utterance_id.as_str(), r.text.as_str()))
        .collect();
    markups
        .iter()
        .map(|m| {
            let text = texts
                .get(m.utterance_id.as_str())
                .ok_or_else(|| PipelineError::IdMismatch(m.utterance_id.clone()))?;
            Ok(DatasetRecord {
                text: text.to_string(),
                labels: m
                    .words
                    .iter()
                    .map(|w| (w.text.clone(), w.pattern_id, w.state_id))
                    .collect(),
            })
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<(), PipelineError> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for it in items {
        serde_json::to_writer(&mut buf, it).map_err(|e| PipelineError::io(path, e))?;
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(|e| PipelineError::io(path, e))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>, PipelineError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| PipelineError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn save_model(path: impl AsRef<Path>, model: &ClusterModel) -> Result<(), PipelineError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(model).map_err(|e| PipelineError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ClusterModel, PipelineError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn save_matrix(path: impl AsRef<Path>, matrix: &PatternMatrix) -> Result<(), PipelineError> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| PipelineError::io(path, e))?;
    matrix.write_jsonl(&mut file).map_err(|e| PipelineError::io(path, e))?;
    file.flush().map_err(|e| PipelineError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_paths_resolve_against_manifest_dir() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.csv");
        fs::write(
            &m,
            "utterance_id,speaker_id,f0_path,alignment_path,text\nu1,s1,f0/u1.csv,al/u1.json,\"Hi, there\"\n",
        )
        .unwrap();
        let recs = read_manifest(&m).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].f0_path, dir.path().join("f0/u1.csv"));
        assert_eq!(recs[0].text, "Hi, there");
        fs::write(&m, "utterance_id,speaker_id,f0_path,alignment_path,text\nu1,s,a,b,t\nu1,s,a,b,t\n").unwrap();
        assert!(matches!(read_manifest(&m), Err(PipelineError::Manifest { .. })));
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::default();
        assert!(c.validate().is_ok());
        c.features.n_f0 = 2;
        assert!(c.validate().unwrap_err().is_validation());
        let c = TrainConfig {
            k: 0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn export_joins_texts() {
        let recs = vec![UtteranceRecord {
            utterance_id: "a".into(),
            speaker_id: "s".into(),
            f0_path: "x".into(),
            alignment_path: "y".into(),
            text: "one two".into(),
        }];
        let word = |t: &str, p| MarkupWord {
            text: t.into(),
            pattern_id: p,
            state_id: 1,
            start: 0.0,
            end: 1.0,
        };
        let m = vec![MarkupRecord {
            utterance_id: "a".into(),
            words: vec![word("one", 2), word("two", 0)],
        }];
        let d = export_dataset(&m, &recs).unwrap();
        assert_eq!(
            serde_json::to_string(&d[0]).unwrap(),
            r#"{"text":"one two","labels":[["one",2,1],["two",0,1]]}"#
        );
        let stray = vec![MarkupRecord {
            utterance_id: "b".into(),
            words: vec![],
        }];
        assert!(matches!(export_dataset(&stray, &recs), Err(PipelineError::IdMismatch(id)) if id == "b"));
    }
}
