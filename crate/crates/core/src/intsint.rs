//! INTSINT coding and rule-based synthesis.
//!
//! Absolute tones T/M/B sit at `key + range/2`, `key` and `key − range/2`.
//! Relative tones move from the previous target P: H and L halfway to the top
//! or bottom, U and D a quarter of the way, S holds. A ToRI pitch accent on a
//! nucleus word is turned into marks on a pseudo-timeline, decoded into a
//! normalized spline and labelled with a trained model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{AlignmentError, UtteranceAlignment, WordInterval};
use crate::clustering::{ClusterError, ClusterModel, PastaLabel};
use crate::momel::{MomelAnchor, MomelError, MomelSpline};
use crate::patterns::{extract_patterns, PatternError};
use crate::pipeline::MarkupWord;
use crate::pitch::NormalizationScope;

pub const DEFAULT_MEAN_PHONE_S: f64 = 0.08;

#[derive(Debug, Error, PartialEq)]
pub enum IntsintError {
    #[error("no marks or anchors given")]
    EmptyInput,
    #[error("first mark {0} is relative; a sequence must start with T, M or B")]
    FirstMarkRelative(IntsintSymbol),
    #[error("mark {index} at {time} s does not follow the previous mark")]
    UnorderedMarks { index: usize, time: f64 },
    #[error("invalid INTSINT parameters: {0}")]
    InvalidParams(String),
    #[error("nucleus word {0} has no stressed vowel")]
    MissingStress(usize),
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
    #[error(transparent)]
    Spline(#[from] MomelError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntsintSymbol {
    T,
    M,
    B,
    H,
    L,
    U,
    D,
    S,
}

impl IntsintSymbol {
    /// Encoder tie-break order.
    pub const ALL: [IntsintSymbol; 8] = [
        IntsintSymbol::T,
        IntsintSymbol::M,
        IntsintSymbol::B,
        IntsintSymbol::H,
        IntsintSymbol::L,
        IntsintSymbol::U,
        IntsintSymbol::D,
        IntsintSymbol::S,
    ];
    pub const ABSOLUTE: [IntsintSymbol; 3] = [IntsintSymbol::T, IntsintSymbol::M, IntsintSymbol::B];

    pub fn is_absolute(self) -> bool {
        matches!(self, IntsintSymbol::T | IntsintSymbol::M | IntsintSymbol::B)
    }

    /// Target reached from previous target `prev`.
    pub fn target(self, prev: f64, params: &IntsintParams) -> f64 {
        let top = params.top();
        let bottom = params.bottom();
        let v = match self {
            IntsintSymbol::T => top,
            IntsintSymbol::M => params.key,
            IntsintSymbol::B => bottom,
            IntsintSymbol::H => (prev + top) / 2.0,
            IntsintSymbol::L => (prev + bottom) / 2.0,
            IntsintSymbol::U => prev + (top - prev) / 4.0,
            IntsintSymbol::D => prev - (prev - bottom) / 4.0,
            IntsintSymbol::S => prev,
        };
        v.clamp(bottom, top)
    }
}

impl std::fmt::Display for IntsintSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntsintMark {
    #[serde(rename = "sym")]
    pub symbol: IntsintSymbol,
    #[serde(rename = "t")]
    pub time: f64,
}

impl IntsintMark {
    pub fn new(symbol: IntsintSymbol, time: f64) -> Self {
        Self { symbol, time }
    }
}

/// Key and range on the normalized pitch scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntsintParams {
    pub key: f64,
    pub range: f64,
}

impl Default for IntsintParams {
    fn default() -> Self {
        Self {
            key: 1.0,
            range: 2.0 / 3.0,
        }
    }
}

impl IntsintParams {
    pub fn new(key: f64, range: f64) -> Result<Self, IntsintError> {
        let p = Self { key, range };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), IntsintError> {
        if !(self.key > 0.0) || !self.key.is_finite() {
            return Err(IntsintError::InvalidParams(format!("key must be > 0, got {}", self.key)));
        }
        if !(self.range > 0.0 && self.range < 2.0 * self.key) {
            return Err(IntsintError::InvalidParams(format!(
                "range must lie in (0, 2·key), got {}",
                self.range
            )));
        }
        Ok(())
    }

    pub fn top(&self) -> f64 {
        self.key + self.range / 2.0
    }

    /// `top − range`; equal to `key − range/2` but rounds to 2/3 for the defaults.
    pub fn bottom(&self) -> f64 {
        self.top() - self.range
    }
}

/// Decodes marks into anchors on the normalized scale.
pub fn decode_intsint(marks: &[IntsintMark], params: &IntsintParams) -> Result<Vec<MomelAnchor>, IntsintError> {
    params.validate()?;
    let first = marks.first().ok_or(IntsintError::EmptyInput)?;
    if !first.symbol.is_absolute() {
        return Err(IntsintError::FirstMarkRelative(first.symbol));
    }
    let mut prev = params.key;
    let mut out = Vec::with_capacity(marks.len());
    for (index, m) in marks.iter().enumerate() {
        if !m.time.is_finite() || (index > 0 && !(m.time > marks[index - 1].time)) {
            return Err(IntsintError::UnorderedMarks { index, time: m.time });
        }
        prev = m.symbol.target(prev, params);
        out.push(MomelAnchor::new(m.time, prev));
    }
    Ok(out)
}

/// Greedy coder: each anchor takes the symbol whose target from the running
/// previous target is nearest, ties resolved in [`IntsintSymbol::ALL`] order.
pub fn encode_intsint(anchors: &[MomelAnchor], params: &IntsintParams) -> Result<Vec<IntsintMark>, IntsintError> {
    params.validate()?;
    if anchors.is_empty() {
        return Err(IntsintError::EmptyInput);
    }
    let mut prev = params.key;
    let mut out = Vec::with_capacity(anchors.len());
    for (i, a) in anchors.iter().enumerate() {
        let choices: &[IntsintSymbol] = if i == 0 {
            &IntsintSymbol::ABSOLUTE
        } else {
            &IntsintSymbol::ALL
        };
        let mut best = (choices[0], f64::INFINITY, prev);
        for &sym in choices {
            let t = sym.target(prev, params);
            let err = (t - a.value).abs();
            if err < best.1 {
                best = (sym, err, t);
            }
        }
        prev = best.2;
        out.push(IntsintMark::new(best.0, a.time));
    }
    Ok(out)
}

/// The six ToRI pitch accents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Accent {
    #[serde(rename = "H*L")]
    HstarL,
    #[serde(rename = "H*H")]
    HstarH,
    #[serde(rename = "H*M")]
    HstarM,
    #[serde(rename = "L*")]
    Lstar,
    #[serde(rename = "HL*")]
    HLstar,
    #[serde(rename = "L*H")]
    LstarH,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToRIAccent {
    pub accent: Accent,
    pub nucleus_word_index: usize,
}

/// Phrase types with a default accent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommunicativeType {
    Statement,
    Question,
    Exclamation,
    Continuative,
}

impl CommunicativeType {
    pub fn accent(self) -> Accent {
        match self {
            CommunicativeType::Statement => Accent::Lstar,
            CommunicativeType::Question => Accent::HstarL,
            CommunicativeType::Exclamation => Accent::HLstar,
            CommunicativeType::Continuative => Accent::LstarH,
        }
    }
}

/// A word as given in a synthesis plan: text, optional phones and the index
/// of the stressed unit (phone, or letter when phones are absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanWord {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phones: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stress: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoWord {
    pub word_index: usize,
    pub text: String,
    pub phone_count: usize,
    pub start: f64,
    pub end: f64,
    pub stressed_vowel_time: Option<f64>,
    /// Centre of the unit before the stressed one, or the word start.
    pub pre_stress_time: Option<f64>,
    /// Centre of the first vowel after the stressed one.
    pub post_stress_time: Option<f64>,
}

impl PseudoWord {
    /// Where level tones go: the stressed vowel, else the word midpoint.
    pub fn level_time(&self) -> f64 {
        self.stressed_vowel_time.unwrap_or((self.start + self.end) / 2.0)
    }
}

/// Contiguous words laid out with a fixed duration per phone.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoTimeline {
    pub mean_phone_s: f64,
    pub words: Vec<PseudoWord>,
}

fn is_vowel(unit: &str) -> bool {
    unit.chars()
        .next()
        .map(|c| "aeiouyаеёиоуыэюяæøœɛɔəɪʊʌɑɒɜ".contains(c.to_lowercase().next().unwrap_or(c)))
        .unwrap_or(false)
}

impl PseudoTimeline {
    pub fn new(words: &[PlanWord], mean_phone_s: f64) -> Result<Self, IntsintError> {
        if !(mean_phone_s > 0.0) || !mean_phone_s.is_finite() {
            return Err(IntsintError::InvalidTimeline(format!(
                "mean_phone_s must be > 0, got {mean_phone_s}"
            )));
        }
        if words.is_empty() {
            return Err(IntsintError::EmptyInput);
        }
        let mut t = 0.0;
        let mut out = Vec::with_capacity(words.len());
        for (word_index, w) in words.iter().enumerate() {
            let units: Vec<String> = match &w.phones {
                Some(p) if !p.is_empty() => p.clone(),
                _ => w.text.chars().filter(|c| c.is_alphabetic()).map(String::from).collect(),
            };
            if units.is_empty() {
                return Err(IntsintError::InvalidTimeline(format!("word {word_index} '{}' has no units", w.text)));
            }
            let start = t;
            let centre = |u: usize| start + (u as f64 + 0.5) * mean_phone_s;
            let (stressed, pre, post) = match w.stress {
                Some(s) if s >= units.len() => {
                    return Err(IntsintError::InvalidTimeline(format!(
                        "word {word_index}: stress {s} beyond {} units",
                        units.len()
                    )))
                }
                Some(s) => (
                    Some(centre(s)),
                    Some(if s == 0 { start } else { centre(s - 1) }),
                    (s + 1..units.len()).find(|&u| is_vowel(&units[u])).map(centre),
                ),
                None => (None, None, None),
            };
            t = start + units.len() as f64 * mean_phone_s;
            out.push(PseudoWord {
                word_index,
                text: w.text.clone(),
                phone_count: units.len(),
                start,
                end: t,
                stressed_vowel_time: stressed,
                pre_stress_time: pre,
                post_stress_time: post,
            });
        }
        Ok(Self { mean_phone_s, words: out })
    }

    pub fn start(&self) -> f64 {
        self.words.first().map_or(0.0, |w| w.start)
    }

    pub fn end(&self) -> f64 {
        self.words.last().map_or(0.0, |w| w.end)
    }

    pub fn alignment(&self) -> Result<UtteranceAlignment, IntsintError> {
        let words: Vec<WordInterval> = self
            .words
            .iter()
            .map(|w| {
                let mut wi = WordInterval::new(&w.text, w.start, w.end);
                wi.stressed_vowel_time = w.stressed_vowel_time;
                wi
            })
            .collect();
        let text = self.words.iter().map(|w| w.text.as_str()).collect::<Vec<_>>().join(" ");
        Ok(UtteranceAlignment::new(words, &text)?)
    }
}

/// Options for [`tori_to_intsint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToRIOptions {
    /// Phrase-initial absolute tone.
    pub initial_tone: IntsintSymbol,
    /// Realize HL* as T then B instead of T then L.
    pub exclamation_tb: bool,
}

impl Default for ToRIOptions {
    fn default() -> Self {
        Self {
            initial_tone: IntsintSymbol::M,
            exclamation_tb: false,
        }
    }
}

/// Places INTSINT marks for a ToRI accent on a pseudo-timeline.
///
/// Marks that land on the same time keep only the one placed last.
pub fn tori_to_intsint(
    accent: ToRIAccent,
    timeline: &PseudoTimeline,
    opts: &ToRIOptions,
) -> Result<Vec<IntsintMark>, IntsintError> {
    use IntsintSymbol::*;
    if !opts.initial_tone.is_absolute() {
        return Err(IntsintError::FirstMarkRelative(opts.initial_tone));
    }
    let nucleus = timeline
        .words
        .get(accent.nucleus_word_index)
        .ok_or_else(|| IntsintError::InvalidTimeline(format!("no word {}", accent.nucleus_word_index)))?;
    let stress = nucleus
        .stressed_vowel_time
        .ok_or(IntsintError::MissingStress(accent.nucleus_word_index))?;
    let pre = nucleus.pre_stress_time.unwrap_or(nucleus.start);

    let mut marks = vec![IntsintMark::new(opts.initial_tone, timeline.start())];
    for w in &timeline.words[..accent.nucleus_word_index] {
        marks.push(IntsintMark::new(S, w.level_time()));
    }
    let (lead, head, trail): (Option<IntsintSymbol>, IntsintSymbol, Option<IntsintSymbol>) = match accent.accent {
        Accent::Lstar => (None, L, None),
        Accent::HstarL => (None, T, Some(L)),
        Accent::HstarH => (None, T, Some(S)),
        Accent::HstarM => (None, T, Some(M)),
        Accent::LstarH => (None, L, Some(H)),
        Accent::HLstar => (Some(T), if opts.exclamation_tb { B } else { L }, None),
    };
    if let Some(l) = lead {
        marks.push(IntsintMark::new(l, pre));
    }
    marks.push(IntsintMark::new(head, stress));
    if let (Some(t), Some(post)) = (trail, nucleus.post_stress_time) {
        marks.push(IntsintMark::new(t, post));
    }
    for w in &timeline.words[accent.nucleus_word_index + 1..] {
        marks.push(IntsintMark::new(B, w.level_time()));
    }

    // stable sort, then the later of two coincident marks wins
    marks.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut out: Vec<IntsintMark> = Vec::with_capacity(marks.len());
    for m in marks {
        match out.last_mut() {
            Some(last) if last.time == m.time => *last = m,
            _ => out.push(m),
        }
    }
    if !out[0].symbol.is_absolute() {
        return Err(IntsintError::FirstMarkRelative(out[0].symbol));
    }
    Ok(out)
}

/// Decodes marks into a normalized spline over the timeline and labels every
/// word with `model`.
pub fn synthesize_markup(
    marks: &[IntsintMark],
    timeline: &PseudoTimeline,
    model: &ClusterModel,
    params: &IntsintParams,
) -> Result<Vec<PastaLabel>, IntsintError> {
    let anchors = decode_intsint(marks, params)?;
    let spline = synth_spline(anchors, timeline)?;
    let scope = NormalizationScope::new(model.norm_mode, 1.0).map_err(|_| PatternError::ZeroMean(1.0))?;
    let patterns = extract_patterns(&spline, &timeline.alignment()?, &scope, model.n_f0, "synth")?;
    Ok(patterns.iter().map(|p| model.assign(p)).collect::<Result<_, _>>()?)
}

/// The spline decoded from `anchors`, with a domain covering the timeline.
pub fn synth_spline(anchors: Vec<MomelAnchor>, timeline: &PseudoTimeline) -> Result<MomelSpline, IntsintError> {
    let first = anchors.first().ok_or(IntsintError::EmptyInput)?.time;
    let last = anchors.last().unwrap().time;
    let domain = (timeline.start().min(first), timeline.end().max(last));
    Ok(MomelSpline::new(anchors, domain)?)
}

fn default_mean_phone() -> f64 {
    DEFAULT_MEAN_PHONE_S
}

/// A text-side synthesis request. Marks come from the first of `intsint`,
/// `tori` or `type` that is present; the nucleus defaults to the last word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisPlan {
    pub words: Vec<PlanWord>,
    #[serde(default = "default_mean_phone")]
    pub mean_phone_s: f64,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub kind: Option<CommunicativeType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tori: Option<Accent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intsint: Option<Vec<IntsintMark>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nucleus: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_tone: Option<IntsintSymbol>,
    #[serde(default)]
    pub exclamation_tb: bool,
    #[serde(default)]
    pub params: IntsintParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub marks: Vec<IntsintMark>,
    pub words: Vec<MarkupWord>,
}

impl SynthesisPlan {
    pub fn timeline(&self) -> Result<PseudoTimeline, IntsintError> {
        PseudoTimeline::new(&self.words, self.mean_phone_s)
    }

    pub fn marks(&self, timeline: &PseudoTimeline) -> Result<Vec<IntsintMark>, IntsintError> {
        if let Some(m) = &self.intsint {
            return Ok(m.clone());
        }
        let accent = match (self.tori, self.kind) {
            (Some(a), _) => a,
            (None, Some(k)) => k.accent(),
            (None, None) => {
                return Err(IntsintError::InvalidTimeline(
                    "plan needs one of `intsint`, `tori` or `type`".into(),
                ))
            }
        };
        let opts = ToRIOptions {
            initial_tone: self.initial_tone.unwrap_or(IntsintSymbol::M),
            exclamation_tb: self.exclamation_tb,
        };
        let nucleus_word_index = self.nucleus.unwrap_or(timeline.words.len().saturating_sub(1));
        tori_to_intsint(
            ToRIAccent {
                accent,
                nucleus_word_index,
            },
            timeline,
            &opts,
        )
    }

    pub fn run(&self, model: &ClusterModel) -> Result<SynthesisResult, IntsintError> {
        let timeline = self.timeline()?;
        let marks = self.marks(&timeline)?;
        let labels = synthesize_markup(&marks, &timeline, model, &self.params)?;
        let words = timeline
            .words
            .iter()
            .zip(labels)
            .map(|(w, l)| MarkupWord {
                text: w.text.clone(),
                pattern_id: l.pattern_id,
                state_id: l.state_id,
                start: w.start,
                end: w.end,
            })
            .collect();
        Ok(SynthesisResult { marks, words })
    }
}

#[cfg(test)]
mod tests {
    use super::IntsintSymbol::*;
    use super::*;
    use crate::pitch::NormMode;

    fn marks(syms: &[IntsintSymbol]) -> Vec<IntsintMark> {
        syms.iter().enumerate().map(|(i, &s)| IntsintMark::new(s, i as f64)).collect()
    }

    fn values(a: &[MomelAnchor]) -> Vec<f64> {
        a.iter().map(|a| a.value).collect()
    }

    #[test]
    fn absolute_targets() {
        let p = IntsintParams::default();
        let v = values(&decode_intsint(&marks(&[T, M, B]), &p).unwrap());
        assert_eq!(v, vec![4.0 / 3.0, 1.0, 2.0 / 3.0]);
        assert_eq!(values(&decode_intsint(&marks(&[M, S, S]), &p).unwrap()), vec![1.0; 3]);
        assert_eq!(values(&decode_intsint(&marks(&[B, H]), &p).unwrap()), vec![2.0 / 3.0, 1.0]);
    }

    #[test]
    fn decode_errors() {
        let p = IntsintParams::default();
        assert_eq!(decode_intsint(&marks(&[H, M]), &p).unwrap_err(), IntsintError::FirstMarkRelative(H));
        let m = vec![IntsintMark::new(M, 1.0), IntsintMark::new(S, 0.5)];
        assert!(matches!(
            decode_intsint(&m, &p).unwrap_err(),
            IntsintError::UnorderedMarks { index: 1, .. }
        ));
        assert_eq!(decode_intsint(&[], &p).unwrap_err(), IntsintError::EmptyInput);
        assert!(IntsintParams::new(1.0, 2.0).is_err());
        assert!(IntsintParams::new(0.0, 0.5).is_err());
    }

    #[test]
    fn encode_examples() {
        let p = IntsintParams::default();
        let anchors = decode_intsint(&marks(&[T, M, B]), &p).unwrap();
        let code = encode_intsint(&anchors, &p).unwrap();
        assert_eq!(values(&decode_intsint(&code, &p).unwrap()), values(&anchors));
        assert_eq!(
            encode_intsint(&[MomelAnchor::new(0.0, 1.0)], &p).unwrap(),
            vec![IntsintMark::new(M, 0.0)]
        );
        for s in IntsintSymbol::ABSOLUTE {
            let a = decode_intsint(&[IntsintMark::new(s, 0.0)], &p).unwrap();
            assert_eq!(encode_intsint(&a, &p).unwrap()[0].symbol, s);
        }
        assert_eq!(encode_intsint(&[], &p).unwrap_err(), IntsintError::EmptyInput);
    }

    #[test]
    fn symbol_order_from_key() {
        let p = IntsintParams::default();
        let t = |s: IntsintSymbol| s.target(p.key, &p);
        let order = [B, L, D, M, U, H, T];
        for w in order.windows(2) {
            assert!(t(w[0]) < t(w[1]), "{:?} !< {:?}", w[0], w[1]);
        }
        assert_eq!(t(S), t(M));
    }

    fn timeline(words: &[(&str, Option<usize>)]) -> PseudoTimeline {
        let w: Vec<PlanWord> = words
            .iter()
            .map(|(t, s)| PlanWord {
                text: t.to_string(),
                phones: None,
                stress: *s,
            })
            .collect();
        PseudoTimeline::new(&w, 0.1).unwrap()
    }

    fn syms(m: &[IntsintMark]) -> Vec<IntsintSymbol> {
        m.iter().map(|m| m.symbol).collect()
    }

    #[test]
    fn timeline_layout() {
        let tl = timeline(&[("da", Some(1)), ("mama", Some(1))]);
        assert_eq!(tl.words[1].start, 0.2);
        assert!((tl.words[1].end - 0.6).abs() < 1e-12);
        assert!((tl.words[1].stressed_vowel_time.unwrap() - 0.35).abs() < 1e-12);
        assert!((tl.words[1].post_stress_time.unwrap() - 0.55).abs() < 1e-12);
        assert_eq!(tl.words[0].post_stress_time, None);
    }

    #[test]
    fn statement_one_word() {
        let tl = timeline(&[("mama", Some(1))]);
        let acc = ToRIAccent {
            accent: Accent::Lstar,
            nucleus_word_index: 0,
        };
        let m = tori_to_intsint(acc, &tl, &ToRIOptions::default()).unwrap();
        assert_eq!(syms(&m), vec![M, L]);
        assert_eq!(m[0].time, 0.0);
        assert!((m[1].time - 0.15).abs() < 1e-12);
    }

    #[test]
    fn question_trailing_mark() {
        let acc = ToRIAccent {
            accent: Accent::HstarL,
            nucleus_word_index: 1,
        };
        let tl = timeline(&[("ty", Some(1)), ("mama", Some(1))]);
        let m = tori_to_intsint(acc, &tl, &ToRIOptions::default()).unwrap();
        assert_eq!(syms(&m), vec![M, S, T, L]);
        assert!((m[3].time - tl.words[1].post_stress_time.unwrap()).abs() < 1e-12);
        // stress on the final vowel: no post-stress syllable
        let tl = timeline(&[("ty", Some(1)), ("mama", Some(3))]);
        let m = tori_to_intsint(acc, &tl, &ToRIOptions::default()).unwrap();
        assert_eq!(syms(&m), vec![M, S, T]);
    }

    #[test]
    fn post_nucleus_low_and_missing_stress() {
        let tl = timeline(&[("ona", Some(2)), ("doma", None), ("byla", None)]);
        let acc = ToRIAccent {
            accent: Accent::HLstar,
            nucleus_word_index: 0,
        };
        let m = tori_to_intsint(acc, &tl, &ToRIOptions::default()).unwrap();
        assert_eq!(syms(&m), vec![M, T, L, B, B]);
        let tb = ToRIOptions {
            exclamation_tb: true,
            ..ToRIOptions::default()
        };
        assert_eq!(syms(&tori_to_intsint(acc, &tl, &tb).unwrap()), vec![M, T, B, B, B]);
        let acc = ToRIAccent {
            accent: Accent::Lstar,
            nucleus_word_index: 1,
        };
        assert_eq!(
            tori_to_intsint(acc, &tl, &ToRIOptions::default()).unwrap_err(),
            IntsintError::MissingStress(1)
        );
    }

    #[test]
    fn coincident_mark_replaces_initial() {
        let tl = timeline(&[("avto", Some(0))]);
        let acc = ToRIAccent {
            accent: Accent::HLstar,
            nucleus_word_index: 0,
        };
        let m = tori_to_intsint(acc, &tl, &ToRIOptions::default()).unwrap();
        assert_eq!(syms(&m), vec![T, L]);
        assert_eq!(m[0].time, 0.0);
    }

    #[test]
    fn flat_synthesis_picks_flattest_barycenter() {
        let model = ClusterModel::new(
            crate::clustering::Metric::Dtw,
            vec![vec![-0.3, -0.1, 0.1, 0.3], vec![0.01, -0.01, 0.01, -0.01], vec![0.3, 0.1, -0.1, -0.3]],
            vec![0.8, 1.0, 1.2],
            NormMode::Phrase,
            0,
        )
        .unwrap();
        let tl = timeline(&[("one", None), ("two", None), ("three", None)]);
        let m = vec![IntsintMark::new(M, 0.0), IntsintMark::new(M, tl.end())];
        let labels = synthesize_markup(&m, &tl, &model, &IntsintParams::default()).unwrap();
        assert_eq!(labels.len(), 3);
        assert!(labels.iter().all(|l| l.pattern_id == 1 && l.state_id == 1));
    }
}
