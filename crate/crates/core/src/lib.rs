//! Word-wise intonation modeling.
//!
//! The crate turns pitch tracks and word alignments into a compact per-word
//! description: a *pattern* (the quantized shape of the word's stylized pitch
//! curve) and a *state* (its quantized mean level relative to the speaker or
//! phrase mean).
//!
//! - [`pitch`]: F0 contour loading, normalization and decimation.
//! - [`momel`]: quadratic-spline stylization with zero-slope anchors.
//! - [`alignment`]: word/phone alignments from word JSON or Praat TextGrid.
//! - [`patterns`]: fixed-length, mean-centered per-word pitch vectors.
//! - [`clustering`]: DTW k-means with barycenter averaging, plus level states.
//! - [`intsint`]: INTSINT coding and rule-based synthesis from ToRI accents.
//! - [`pipeline`]: corpus-level training, markup and dataset export.
//! - [`plot`]: SVG renderings of models, markups and splines.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod alignment;
pub mod clustering;
pub mod intsint;
pub mod momel;
pub mod patterns;
pub mod pipeline;
pub mod pitch;
pub mod plot;

pub use alignment::{load_alignment, AlignmentError, AlignmentFormat, Phone, UtteranceAlignment, WordInterval};
pub use clustering::{
    assign, dtw_distance, euclidean_distance, train, ClusterError, ClusterModel, Metric, PastaLabel, TrainOutput,
    TrainParams,
};
pub use intsint::{
    decode_intsint, encode_intsint, synthesize_markup, tori_to_intsint, Accent, CommunicativeType, IntsintError,
    IntsintMark, IntsintParams, IntsintSymbol, PlanWord, PseudoTimeline, SynthesisPlan, SynthesisResult, ToRIAccent,
    ToRIOptions,
};
pub use momel::{fit_momel, MomelAnchor, MomelError, MomelFitParams, MomelSpline, SplineSlice};
pub use patterns::{extract_patterns, PatternError, PatternMatrix, WordPattern};
pub use pipeline::{
    export_dataset, read_manifest, run_markup, run_train, DatasetRecord, FeatureConfig, MarkupRecord, MarkupWord,
    PipelineError, TrainConfig, UtteranceRecord,
};
pub use pitch::{
    compute_mean_f0, load_f0, normalize_f0, resample_with_lowpass, F0Contour, F0Format, F0Frame, F0LoadOptions,
    NormMode, NormalizationScope, PitchError,
};
