//! Word (and optional phone) time alignments produced by forced aligners.
//!
//! Two inputs are accepted: a small word-level JSON document and Praat
//! TextGrid files (long or short text format) with a `words` interval tier and
//! an optional `phones` tier. Tokens without any alphanumeric character are
//! treated as punctuation and dropped.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed when checking that phones tile their word, seconds.
const PHONE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum AlignmentError {
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("words {0} and {1} overlap or are out of order")]
    OverlappingWords(usize, usize),
    #[error("alignment has no words")]
    EmptyAlignment,
    #[error("word {index} ('{text}'): {reason}")]
    InvalidWord { index: usize, text: String, reason: String },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phone {
    pub label: String,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordInterval {
    pub text: String,
    pub start: f64,
    pub end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phones: Option<Vec<Phone>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stressed_vowel_time: Option<f64>,
}

impl WordInterval {
    pub fn new(text: impl Into<String>, start: f64, end: f64) -> Self {
        Self {
            text: text.into(),
            start,
            end,
            phones: None,
            stressed_vowel_time: None,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceAlignment {
    pub words: Vec<WordInterval>,
    pub text: String,
}

impl UtteranceAlignment {
    /// Drops punctuation-only tokens and validates the remaining words.
    pub fn new(words: Vec<WordInterval>, text: impl Into<String>) -> Result<Self, AlignmentError> {
        let words: Vec<WordInterval> = words.into_iter().filter(|w| !is_punctuation(&w.text)).collect();
        validate(&words)?;
        Ok(Self {
            words,
            text: text.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// True when `text` has no alphanumeric character.
pub fn is_punctuation(text: &str) -> bool {
    !text.chars().any(char::is_alphanumeric)
}

fn validate(words: &[WordInterval]) -> Result<(), AlignmentError> {
    if words.is_empty() {
        return Err(AlignmentError::EmptyAlignment);
    }
    for (i, w) in words.iter().enumerate() {
        let bad = |reason: String| AlignmentError::InvalidWord {
            index: i,
            text: w.text.clone(),
            reason,
        };
        if !(w.start.is_finite() && w.end.is_finite() && w.start >= 0.0 && w.start < w.end) {
            return Err(bad(format!("invalid interval [{}, {}]", w.start, w.end)));
        }
        if let Some(s) = w.stressed_vowel_time {
            if !(s >= w.start && s <= w.end) {
                return Err(bad(format!("stressed vowel time {s} outside the word")));
            }
        }
        if let Some(phones) = &w.phones {
            check_phones(w, phones).map_err(bad)?;
        }
    }
    for (i, pair) in words.windows(2).enumerate() {
        if pair[1].start < pair[0].end {
            return Err(AlignmentError::OverlappingWords(i, i + 1));
        }
    }
    Ok(())
}

fn check_phones(w: &WordInterval, phones: &[Phone]) -> Result<(), String> {
    if phones.is_empty() {
        return Err("empty phone list".into());
    }
    let mut cursor = w.start;
    for p in phones {
        if !(p.start < p.end) {
            return Err(format!("phone '{}' has invalid interval [{}, {}]", p.label, p.start, p.end));
        }
        if (p.start - cursor).abs() > PHONE_TOLERANCE {
            return Err(format!("phone '{}' starts at {} but previous ends at {cursor}", p.label, p.start));
        }
        cursor = p.end;
    }
    if (cursor - w.end).abs() > PHONE_TOLERANCE {
        return Err(format!("phones end at {cursor}, word ends at {}", w.end));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlignmentFormat {
    WordJson,
    TextGrid,
}

impl AlignmentFormat {
    /// `.json` is word JSON; anything else is read as a TextGrid.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => AlignmentFormat::WordJson,
            _ => AlignmentFormat::TextGrid,
        }
    }
}

pub fn load_alignment(path: impl AsRef<Path>, format: AlignmentFormat) -> Result<UtteranceAlignment, AlignmentError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| AlignmentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let text = decode_text(&bytes)?;
    match format {
        AlignmentFormat::WordJson => parse_word_json(&text),
        AlignmentFormat::TextGrid => parse_textgrid(&text),
    }
}

/// UTF-8, or UTF-16 when a byte-order mark is present (Praat writes both).
fn decode_text(bytes: &[u8]) -> Result<String, AlignmentError> {
    let utf16 = |le: bool| {
        let units: Vec<u16> = bytes[2..]
            .chunks_exact(2)
            .map(|c| if le { u16::from_le_bytes([c[0], c[1]]) } else { u16::from_be_bytes([c[0], c[1]]) })
            .collect();
        String::from_utf16(&units).map_err(|e| AlignmentError::ParseError(e.to_string()))
    };
    match bytes {
        [0xFF, 0xFE, ..] => utf16(true),
        [0xFE, 0xFF, ..] => utf16(false),
        [0xEF, 0xBB, 0xBF, rest @ ..] => {
            String::from_utf8(rest.to_vec()).map_err(|e| AlignmentError::ParseError(e.to_string()))
        }
        _ => String::from_utf8(bytes.to_vec()).map_err(|e| AlignmentError::ParseError(e.to_string())),
    }
}

#[derive(Deserialize)]
struct JsonDoc {
    #[serde(default)]
    text: Option<String>,
    words: Vec<JsonWord>,
}

#[derive(Deserialize)]
struct JsonWord {
    word: String,
    start: f64,
    end: f64,
    #[serde(default)]
    phones: Option<Vec<(String, f64, f64)>>,
    #[serde(default)]
    stressed_vowel_time: Option<f64>,
}

/// Parses `{"text": ..., "words": [{"word", "start", "end", "phones"?, "stressed_vowel_time"?}]}`.
pub fn parse_word_json(text: &str) -> Result<UtteranceAlignment, AlignmentError> {
    let doc: JsonDoc = serde_json::from_str(text).map_err(|e| AlignmentError::ParseError(e.to_string()))?;
    let words: Vec<WordInterval> = doc
        .words
        .into_iter()
        .map(|w| WordInterval {
            text: w.word,
            start: w.start,
            end: w.end,
            phones: w.phones.map(|ps| {
                ps.into_iter()
                    .map(|(label, start, end)| Phone { label, start, end })
                    .collect()
            }),
            stressed_vowel_time: w.stressed_vowel_time,
        })
        .collect();
    let joined = doc.text.unwrap_or_else(|| join_words(&words));
    UtteranceAlignment::new(words, joined)
}

fn join_words(words: &[WordInterval]) -> String {
    words
        .iter()
        .filter(|w| !is_punctuation(&w.text))
        .map(|w| w.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Str(String),
    Num(f64),
    Flag(bool),
}

/// Splits TextGrid text into the value tokens Praat itself reads: quoted
/// strings, numbers and `<exists>`/`<absent>` flags. Labels such as `xmin =`,
/// `item [1]:` or `intervals: size =` carry no information and are skipped.
fn tokenize(text: &str) -> Result<Vec<Token>, AlignmentError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') if chars.peek() == Some(&'"') => {
                        chars.next();
                        s.push('"');
                    }
                    Some('"') => break,
                    Some(ch) => s.push(ch),
                    None => return Err(AlignmentError::ParseError("unterminated string".into())),
                }
            }
            out.push(Token::Str(s));
        } else if c == '[' {
            for ch in chars.by_ref() {
                if ch == ']' {
                    break;
                }
            }
        } else if c == '!' {
            // comment to end of line
            for ch in chars.by_ref() {
                if ch == '\n' {
                    break;
                }
            }
        } else {
            let mut word = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || ch == '"' || ch == '[' {
                    break;
                }
                word.push(ch);
                chars.next();
            }
            match word.as_str() {
                "<exists>" => out.push(Token::Flag(true)),
                "<absent>" => out.push(Token::Flag(false)),
                w => {
                    if let Ok(v) = w.parse::<f64>() {
                        out.push(Token::Num(v));
                    }
                }
            }
        }
    }
    Ok(out)
}

struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
}

impl Cursor {
    fn next(&mut self) -> Result<Token, AlignmentError> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| AlignmentError::ParseError("unexpected end of TextGrid".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn string(&mut self) -> Result<String, AlignmentError> {
        match self.next()? {
            Token::Str(s) => Ok(s),
            other => Err(AlignmentError::ParseError(format!("expected string, found {other:?}"))),
        }
    }

    fn number(&mut self) -> Result<f64, AlignmentError> {
        match self.next()? {
            Token::Num(v) => Ok(v),
            other => Err(AlignmentError::ParseError(format!("expected number, found {other:?}"))),
        }
    }

    fn count(&mut self) -> Result<usize, AlignmentError> {
        let v = self.number()?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(AlignmentError::ParseError(format!("bad count {v}")));
        }
        Ok(v as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextGridInterval {
    pub start: f64,
    pub end: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextGridTier {
    pub name: String,
    /// Empty for point tiers.
    pub intervals: Vec<TextGridInterval>,
}

/// Reads all interval tiers of a TextGrid (point tiers are returned empty).
pub fn read_textgrid_tiers(text: &str) -> Result<Vec<TextGridTier>, AlignmentError> {
    let mut cur = Cursor {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let file_type = cur.string()?;
    let class = cur.string()?;
    if file_type != "ooTextFile" || class != "TextGrid" {
        return Err(AlignmentError::ParseError(format!("not a TextGrid: {file_type} / {class}")));
    }
    cur.number()?;
    cur.number()?;
    match cur.next()? {
        Token::Flag(true) => {}
        Token::Flag(false) => return Ok(Vec::new()),
        other => return Err(AlignmentError::ParseError(format!("expected tier flag, found {other:?}"))),
    }
    let n_tiers = cur.count()?;
    let mut tiers = Vec::with_capacity(n_tiers);
    for _ in 0..n_tiers {
        let kind = cur.string()?;
        let name = cur.string()?;
        cur.number()?;
        cur.number()?;
        let n = cur.count()?;
        let mut intervals = Vec::new();
        match kind.as_str() {
            "IntervalTier" => {
                for _ in 0..n {
                    let start = cur.number()?;
                    let end = cur.number()?;
                    let text = cur.string()?;
                    intervals.push(TextGridInterval { start, end, text });
                }
            }
            "TextTier" => {
                for _ in 0..n {
                    cur.number()?;
                    cur.string()?;
                }
            }
            other => return Err(AlignmentError::ParseError(format!("unknown tier class '{other}'"))),
        }
        tiers.push(TextGridTier { name, intervals });
    }
    Ok(tiers)
}

/// Builds an alignment from the `words` tier (and `phones`, if present).
pub fn parse_textgrid(text: &str) -> Result<UtteranceAlignment, AlignmentError> {
    let tiers = read_textgrid_tiers(text)?;
    let find = |name: &str| tiers.iter().find(|t| t.name.eq_ignore_ascii_case(name));
    let words_tier = find("words").ok_or_else(|| AlignmentError::ParseError("no 'words' tier".into()))?;
    let phones_tier = find("phones");
    let mut words: Vec<WordInterval> = words_tier
        .intervals
        .iter()
        .filter(|iv| !iv.text.trim().is_empty())
        .map(|iv| WordInterval::new(iv.text.trim(), iv.start, iv.end))
        .collect();
    if let Some(pt) = phones_tier {
        for w in &mut words {
            let inside: Vec<Phone> = pt
                .intervals
                .iter()
                .filter(|p| !p.text.trim().is_empty())
                .filter(|p| {
                    let mid = 0.5 * (p.start + p.end);
                    mid > w.start && mid < w.end
                })
                .map(|p| Phone {
                    label: p.text.trim().to_string(),
                    start: p.start,
                    end: p.end,
                })
                .collect();
            if !inside.is_empty() {
                w.phones = Some(inside);
            }
        }
    }
    let joined = join_words(&words);
    UtteranceAlignment::new(words, joined)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const LONG: &str = r#"File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 1.5
tiers? <exists>
size = 2
item []:
    item [1]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 1.5
        intervals: size = 5
        intervals [1]:
            xmin = 0
            xmax = 0.1
            text = ""
        intervals [2]:
            xmin = 0.1
            xmax = 0.5
            text = "мама"
        intervals [3]:
            xmin = 0.5
            xmax = 0.9
            text = "мыла"
        intervals [4]:
            xmin = 0.9
            xmax = 1.4
            text = "раму"
        intervals [5]:
            xmin = 1.4
            xmax = 1.5
            text = "."
    item [2]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 1.5
        intervals: size = 3
        intervals [1]:
            xmin = 0
            xmax = 0.1
            text = "sil"
        intervals [2]:
            xmin = 0.1
            xmax = 0.3
            text = "m"
        intervals [3]:
            xmin = 0.3
            xmax = 0.5
            text = "a"
"#;

    #[test]
    fn word_json_single_word() {
        let a = parse_word_json(r#"{"words":[{"word":"да","start":0.1,"end":0.5}]}"#).unwrap();
        assert_eq!(a.words.len(), 1);
        assert_eq!(a.words[0], WordInterval::new("да", 0.1, 0.5));
        assert_eq!(a.text, "да");
    }

    #[test]
    fn word_json_rejects_overlap() {
        let doc = r#"{"words":[{"word":"a","start":0.1,"end":0.5},{"word":"b","start":0.4,"end":0.8}]}"#;
        assert_eq!(parse_word_json(doc).unwrap_err(), AlignmentError::OverlappingWords(0, 1));
    }

    #[test]
    fn word_json_punctuation_and_empty() {
        let doc = r#"{"text":"да!","words":[{"word":"да","start":0.1,"end":0.5},{"word":"!","start":0.5,"end":0.6}]}"#;
        assert_eq!(parse_word_json(doc).unwrap().words.len(), 1);
        let doc = r#"{"words":[{"word":"?","start":0.1,"end":0.5}]}"#;
        assert_eq!(parse_word_json(doc).unwrap_err(), AlignmentError::EmptyAlignment);
        assert!(matches!(parse_word_json("{"), Err(AlignmentError::ParseError(_))));
    }

    #[test]
    fn word_json_phones_and_stress() {
        let doc = r#"{"words":[{"word":"мама","start":0.0,"end":0.4,
            "phones":[["m",0.0,0.1],["a",0.1,0.2],["m",0.2,0.3],["a",0.3,0.4]],
            "stressed_vowel_time":0.15}]}"#;
        let a = parse_word_json(doc).unwrap();
        assert_eq!(a.words[0].phones.as_ref().unwrap().len(), 4);
        assert_eq!(a.words[0].stressed_vowel_time, Some(0.15));

        let gap = r#"{"words":[{"word":"ma","start":0.0,"end":0.4,"phones":[["m",0.0,0.1],["a",0.2,0.4]]}]}"#;
        assert!(matches!(parse_word_json(gap), Err(AlignmentError::InvalidWord { .. })));
        let stress = r#"{"words":[{"word":"ma","start":0.0,"end":0.4,"stressed_vowel_time":0.9}]}"#;
        assert!(matches!(parse_word_json(stress), Err(AlignmentError::InvalidWord { .. })));
    }

    #[test]
    fn textgrid_long_format() {
        let a = parse_textgrid(LONG).unwrap();
        let texts: Vec<&str> = a.words.iter().map(|w| w.text.as_str()).collect();
        assert_eq!(texts, ["мама", "мыла", "раму"]);
        assert_eq!(a.words[0].phones.as_ref().unwrap().len(), 2);
        assert!(a.words[1].phones.is_none());
        assert_eq!(a.text, "мама мыла раму");
    }

    #[test]
    fn textgrid_short_format() {
        let short = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n1\n<exists>\n1\n\"IntervalTier\"\n\"words\"\n0\n1\n2\n0\n0.4\n\"say \"\"hi\"\"\"\n0.4\n1\n\"there\"\n";
        let a = parse_textgrid(short).unwrap();
        assert_eq!(a.words.len(), 2);
        assert_eq!(a.words[0].text, "say \"hi\"");
        assert_eq!((a.words[1].start, a.words[1].end), (0.4, 1.0));
    }

    #[test]
    fn textgrid_errors_are_typed() {
        assert!(matches!(parse_textgrid(""), Err(AlignmentError::ParseError(_))));
        let truncated = &LONG[..LONG.len() / 2];
        assert!(matches!(parse_textgrid(truncated), Err(AlignmentError::ParseError(_))));
        let no_words = LONG.replace("\"words\"", "\"tokens\"");
        assert!(matches!(parse_textgrid(&no_words), Err(AlignmentError::ParseError(_))));
    }

    #[test]
    fn utf16_textgrid() {
        let mut bytes = vec![0xFF, 0xFE];
        for u in LONG.encode_utf16() {
            bytes.extend_from_slice(&u.to_le_bytes());
        }
        let text = decode_text(&bytes).unwrap();
        assert_eq!(parse_textgrid(&text).unwrap().words.len(), 3);
    }
}
