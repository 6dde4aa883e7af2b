//! Writes the synthetic test corpus: 12 utterances from two speakers, each
//! word drawn from a known spline shape (flat, rise, fall or hump).
//!
//! ```text
//! cargo run -p pasta-core --example make_fixture -- crates/core/tests/fixtures/corpus
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pasta_core::{MomelAnchor, MomelSpline};

const STEP: f64 = 0.01;
const LEAD: f64 = 0.15;

const SENTENCES: [&[&str]; 12] = [
    &["мама", "мыла", "раму"],
    &["she", "sold", "sea", "shells"],
    &["вот", "наш", "дом"],
    &["the", "cat", "sat", "down", "slowly"],
    &["он", "пришёл", "домой", "поздно"],
    &["green", "leaves", "fall"],
    &["мы", "идём", "гулять"],
    &["rain", "came", "again", "today"],
    &["дети", "пели", "песни", "громко"],
    &["birds", "fly", "south"],
    &["она", "читает", "книгу"],
    &["we", "waited", "for", "the", "train"],
];

#[derive(Clone, Copy)]
enum Family {
    Flat,
    Rise,
    Fall,
    Hump,
}

fn family(i: usize, j: usize, last: bool) -> Family {
    if last && i % 3 != 2 {
        return Family::Fall;
    }
    match (3 * i + 5 * j) % 4 {
        0 => Family::Flat,
        1 => Family::Rise,
        2 => Family::Hump,
        _ => Family::Fall,
    }
}

/// `amp` scales the movement around the word level.
fn word_anchors(f: Family, s: f64, d: f64, level: f64, amp: f64) -> Vec<MomelAnchor> {
    let a = |frac: f64, rel: f64| MomelAnchor::new(s + frac * d, (1.0 + amp * (rel - 1.0)) * level);
    match f {
        Family::Flat => vec![a(0.5, 1.0)],
        Family::Rise => vec![a(0.2, 0.85), a(0.85, 1.2)],
        Family::Fall => vec![a(0.15, 1.2), a(0.8, 0.85)],
        Family::Hump => vec![a(0.15, 0.9), a(0.5, 1.25), a(0.85, 0.9)],
    }
}

struct Word {
    text: String,
    start: f64,
    end: f64,
}

fn word_json(words: &[Word], with_phones: bool) -> String {
    let items: Vec<serde_json::Value> = words
        .iter()
        .map(|w| {
            let mut v = serde_json::json!({"word": w.text, "start": w.start, "end": w.end});
            if with_phones {
                let letters: Vec<char> = w.text.chars().collect();
                let step = (w.end - w.start) / letters.len() as f64;
                let phones: Vec<serde_json::Value> = letters
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let end = if k + 1 == letters.len() { w.end } else { w.start + step * (k + 1) as f64 };
                        serde_json::json!([c.to_string(), w.start + step * k as f64, end])
                    })
                    .collect();
                v["phones"] = serde_json::Value::Array(phones);
            }
            v
        })
        .collect();
    let text = words.iter().map(|w| w.text.as_str()).collect::<Vec<_>>().join(" ");
    let mut s = serde_json::to_string_pretty(&serde_json::json!({"text": text, "words": items})).unwrap();
    s.push('\n');
    s
}

fn textgrid(words: &[Word], total: f64) -> String {
    let mut iv: Vec<(f64, f64, &str)> = vec![(0.0, words[0].start, "")];
    iv.extend(words.iter().map(|w| (w.start, w.end, w.text.as_str())));
    iv.push((words.last().unwrap().end, total, ""));
    let mut s = String::new();
    let _ = write!(
        s,
        "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\nxmin = 0\nxmax = {total}\ntiers? <exists>\nsize = 1\nitem []:\n    item [1]:\n        class = \"IntervalTier\"\n        name = \"words\"\n        xmin = 0\n        xmax = {total}\n        intervals: size = {}\n",
        iv.len()
    );
    for (k, (a, b, t)) in iv.iter().enumerate() {
        let _ = write!(
            s,
            "        intervals [{}]:\n            xmin = {a}\n            xmax = {b}\n            text = \"{t}\"\n",
            k + 1
        );
    }
    s
}

fn round(x: f64, digits: i32) -> f64 {
    let p = 10f64.powi(digits);
    (x * p).round() / p
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus"));
    fs::create_dir_all(out.join("f0"))?;
    fs::create_dir_all(out.join("align"))?;
    let mut manifest = String::from("utterance_id,speaker_id,f0_path,alignment_path,text\n");

    for (i, sentence) in SENTENCES.iter().enumerate() {
        let id = format!("u{:02}", i + 1);
        let (speaker, base) = if i % 2 == 0 { ("s1", 120.0) } else { ("s2", 210.0) };
        let base = base * (1.0 + 0.02 * ((i % 5) as f64 - 2.0));

        let mut words = Vec::new();
        let mut anchors = Vec::new();
        let mut t = LEAD;
        for (j, w) in sentence.iter().enumerate() {
            let d = 0.30 + 0.05 * ((i + 2 * j) % 4) as f64;
            let level = base * [1.0, 1.1, 0.9][(i + j) % 3];
            let amp = if (i + j) % 2 == 0 { 1.0 } else { 0.5 };
            anchors.extend(word_anchors(family(i, j, j + 1 == sentence.len()), t, d, level, amp));
            words.push(Word {
                text: w.to_string(),
                start: round(t, 3),
                end: round(t + d, 3),
            });
            t += d;
        }
        let speech_end = t;
        let total = round(speech_end + LEAD, 2);
        let spline = MomelSpline::new(anchors, (0.0, total))?;

        // unvoiced stretches around some word boundaries
        let gaps: Vec<(f64, f64)> = words
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(j, _)| (i + j) % 3 == 0)
            .map(|(_, w)| (w.start - 0.03, w.start + 0.03))
            .collect();

        let csv = i % 2 == 0;
        let mut f0 = String::from(if csv { "time,f0\n" } else { "" });
        let frames = (total / STEP).round() as usize;
        for k in 0..=frames {
            let time = round(k as f64 * STEP, 2);
            let voiced = time >= LEAD && time <= speech_end && !gaps.iter().any(|&(a, b)| time > a && time < b);
            let v = if voiced { round(spline.eval(time), 2) } else { 0.0 };
            if csv {
                let _ = writeln!(f0, "{time:.2},{v:.2}");
            } else {
                let _ = writeln!(f0, "{time:.2} {v:.2}");
            }
        }
        let f0_rel = format!("f0/{id}.{}", if csv { "csv" } else { "txt" });
        fs::write(out.join(&f0_rel), f0)?;

        let al_rel = if i % 3 == 1 {
            let p = format!("align/{id}.TextGrid");
            fs::write(out.join(&p), textgrid(&words, total))?;
            p
        } else {
            let p = format!("align/{id}.json");
            fs::write(out.join(&p), word_json(&words, i % 3 == 0))?;
            p
        };
        let text = sentence.join(" ");
        let _ = writeln!(manifest, "{id},{speaker},{f0_rel},{al_rel},{text}");
    }
    fs::write(out.join("manifest.csv"), manifest)?;
    println!("wrote {}", out.display());
    Ok(())
}
