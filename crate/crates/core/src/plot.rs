//! Plain SVG renderings. Output depends only on the inputs, so repeated runs
//! produce identical bytes.

use std::fmt::Write;

use crate::clustering::ClusterModel;
use crate::momel::MomelSpline;
use crate::patterns::PatternMatrix;
use crate::pipeline::MarkupRecord;
use crate::pitch::F0Contour;

const PANEL_W: f64 = 160.0;
const PANEL_H: f64 = 110.0;
const PAD: f64 = 12.0;
const WIDE_W: f64 = 800.0;
const WIDE_H: f64 = 300.0;
const SPLINE_SAMPLES: usize = 400;

/// Maps data coordinates into a pixel box.
#[derive(Clone, Copy)]
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn new(x0: f64, y0: f64, w: f64, h: f64, (xmin, xmax): (f64, f64), (ymin, ymax): (f64, f64)) -> Self {
        let (ymin, ymax) = if ymax - ymin < 1e-9 {
            (ymin - 0.5, ymax + 0.5)
        } else {
            let m = 0.05 * (ymax - ymin);
            (ymin - m, ymax + m)
        };
        let xmax = if xmax - xmin < 1e-12 { xmin + 1.0 } else { xmax };
        Self {
            x0,
            y0,
            w,
            h,
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.xmin) / (self.xmax - self.xmin) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + (self.ymax - v) / (self.ymax - self.ymin) * self.h
    }

    fn polyline(&self, pts: impl IntoIterator<Item = (f64, f64)>, attrs: &str) -> String {
        let mut s = String::from("<polyline points=\"");
        for (i, (x, y)) in pts.into_iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", self.x(x), self.y(y));
        }
        let _ = write!(s, "\" fill=\"none\" {attrs}/>");
        s
    }
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn bounds<'a>(vals: impl IntoIterator<Item = &'a f64>) -> (f64, f64) {
    vals.into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn series(v: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    v.iter().enumerate().map(|(i, &y)| (i as f64, y))
}

/// One panel per barycenter, barycenters in red. When `members` is given
/// with per-row labels, member patterns are drawn in black underneath.
pub fn plot_model(model: &ClusterModel, members: Option<(&PatternMatrix, &[usize])>) -> String {
    let k = model.barycenters.len();
    let cols = (k as f64).sqrt().ceil().max(1.0) as usize;
    let rows = k.div_ceil(cols);
    let w = cols as f64 * (PANEL_W + PAD) + PAD;
    let h = rows as f64 * (PANEL_H + PAD) + PAD;

    let mut all: Vec<f64> = model.barycenters.iter().flatten().copied().collect();
    if let Some((m, _)) = members {
        all.extend(m.rows().iter().flat_map(|r| r.values.iter().copied()));
    }
    let yb = bounds(&all);
    let xb = (0.0, model.n_f0.saturating_sub(1) as f64);

    let mut out = header(w, h);
    for (c, bary) in model.barycenters.iter().enumerate() {
        let x0 = PAD + (c % cols) as f64 * (PANEL_W + PAD);
        let y0 = PAD + (c / cols) as f64 * (PANEL_H + PAD);
        let f = Frame::new(x0, y0, PANEL_W, PANEL_H, xb, yb);
        let _ = writeln!(out, "<g class=\"panel\" id=\"panel-{c}\">");
        let _ = writeln!(
            out,
            "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{PANEL_W:.2}\" height=\"{PANEL_H:.2}\" fill=\"none\" stroke=\"#999\"/>"
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" font-family=\"sans-serif\">{c}</text>",
            x0 + 4.0,
            y0 + 12.0
        );
        if let Some((m, labels)) = members {
            for (r, _) in m.rows().iter().zip(labels).filter(|(_, &l)| l == c) {
                let _ = writeln!(
                    out,
                    "{}",
                    f.polyline(series(&r.values), "stroke=\"black\" stroke-opacity=\"0.25\" stroke-width=\"0.6\"")
                );
            }
        }
        let _ = writeln!(out, "{}", f.polyline(series(bary), "stroke=\"red\" stroke-width=\"2\""));
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// The spline curve with one circle per anchor, optionally over the voiced
/// frames of the contour it was fitted to.
pub fn plot_spline(spline: &MomelSpline, contour: Option<&F0Contour>) -> String {
    let (t0, t1) = spline.domain();
    let n = SPLINE_SAMPLES;
    let curve: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let t = t0 + (t1 - t0) * j as f64 / (n - 1) as f64;
            (t, spline.eval(t))
        })
        .collect();
    let mut ys: Vec<f64> = curve.iter().map(|p| p.1).collect();
    if let Some(c) = contour {
        ys.extend(c.voiced().map(|f| f.f0));
    }
    let f = Frame::new(PAD, PAD, WIDE_W - 2.0 * PAD, WIDE_H - 2.0 * PAD, (t0, t1), bounds(&ys));
    let mut out = header(WIDE_W, WIDE_H);
    if let Some(c) = contour {
        out.push_str("<g class=\"f0\">\n");
        for fr in c.voiced() {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.2\" fill=\"#888\"/>",
                f.x(fr.time),
                f.y(fr.f0)
            );
        }
        out.push_str("</g>\n");
    }
    let _ = writeln!(out, "{}", f.polyline(curve, "stroke=\"black\" stroke-width=\"1.5\""));
    for a in spline.anchors() {
        let _ = writeln!(
            out,
            "<circle class=\"anchor\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"red\"/>",
            f.x(a.time),
            f.y(a.value)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Each word drawn as its barycenter raised to its state level, on the
/// word's time interval.
pub fn plot_markup(record: &MarkupRecord, model: &ClusterModel) -> String {
    let shape = |w: &crate::pipeline::MarkupWord| -> Vec<f64> {
        let level = model.state_centroids.get(w.state_id).copied().unwrap_or(1.0);
        model
            .barycenters
            .get(w.pattern_id)
            .map(|b| b.iter().map(|v| v + level).collect())
            .unwrap_or_default()
    };
    let shapes: Vec<Vec<f64>> = record.words.iter().map(shape).collect();
    let t0 = record.words.first().map_or(0.0, |w| w.start);
    let t1 = record.words.last().map_or(1.0, |w| w.end);
    let yb = bounds(shapes.iter().flatten());
    let yb = if yb.0.is_finite() { yb } else { (0.0, 2.0) };
    let f = Frame::new(PAD, PAD, WIDE_W - 2.0 * PAD, WIDE_H - 2.0 * PAD - 20.0, (t0, t1), yb);
    let mut out = header(WIDE_W, WIDE_H);
    let _ = writeln!(out, "<title>{}</title>", escape(&record.utterance_id));
    for (w, s) in record.words.iter().zip(&shapes) {
        let _ = writeln!(out, "<g class=\"word\">");
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{PAD:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#ccc\"/>",
            WIDE_H - PAD - 20.0,
            x = f.x(w.start)
        );
        if s.len() > 1 {
            let step = (w.end - w.start) / (s.len() - 1) as f64;
            let pts = s.iter().enumerate().map(|(i, &v)| (w.start + step * i as f64, v));
            let _ = writeln!(out, "{}", f.polyline(pts, "stroke=\"red\" stroke-width=\"2\""));
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"middle\">{} ({}/{})</text>",
            f.x((w.start + w.end) / 2.0),
            WIDE_H - PAD,
            escape(&w.text),
            w.pattern_id,
            w.state_id
        );
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Metric;
    use crate::momel::MomelAnchor;
    use crate::pipeline::MarkupWord;
    use crate::pitch::NormMode;

    fn model() -> ClusterModel {
        let b = |s: f64| vec![-s, -s / 3.0, s / 3.0, s];
        ClusterModel::new(
            Metric::Dtw,
            vec![b(0.1), b(-0.1), b(0.0), b(0.3)],
            vec![0.9, 1.1],
            NormMode::Phrase,
            1,
        )
        .unwrap()
    }

    #[test]
    fn model_plot_has_one_panel_per_barycenter() {
        let svg = plot_model(&model(), None);
        assert_eq!(svg.matches("class=\"panel\"").count(), 4);
        assert_eq!(svg.matches("stroke=\"red\"").count(), 4);
        assert_eq!(svg, plot_model(&model(), None));
    }

    #[test]
    fn spline_plot_marks_each_anchor() {
        let s = MomelSpline::from_anchors(vec![
            MomelAnchor::new(0.1, 120.0),
            MomelAnchor::new(0.7, 180.0),
            MomelAnchor::new(1.3, 110.0),
        ])
        .unwrap();
        let svg = plot_spline(&s, None);
        assert_eq!(svg.matches("class=\"anchor\"").count(), 3);
        assert_eq!(svg, plot_spline(&s, None));
    }

    #[test]
    fn markup_plot_escapes_text() {
        let r = MarkupRecord {
            utterance_id: "u<1>".into(),
            words: vec![MarkupWord {
                text: "a&b".into(),
                pattern_id: 3,
                state_id: 1,
                start: 0.0,
                end: 0.4,
            }],
        };
        let svg = plot_markup(&r, &model());
        assert!(svg.contains("a&amp;b (3/1)"));
        assert!(svg.contains("u&lt;1&gt;"));
    }
}
