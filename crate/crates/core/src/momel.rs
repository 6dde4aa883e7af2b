//! Momel quadratic splines: evaluation, slicing and anchor fitting.
//!
//! Between two adjacent anchors `(t1, f1)` and `(t2, f2)` the curve is made of
//! two parabolas with zero slope at the anchors that meet at the temporal
//! midpoint with value `(f1 + f2) / 2`. Outside the anchor span the curve is
//! constant.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pitch::F0Contour;

#[derive(Debug, Error, PartialEq)]
pub enum MomelError {
    #[error("need at least 3 voiced frames, got {0}")]
    TooFewVoicedFrames(usize),
    #[error("no anchor candidates survived")]
    NoAnchorsFound,
    #[error("empty slice interval [{0}, {1}]")]
    EmptyInterval(f64, f64),
    #[error("invalid spline: {0}")]
    InvalidSpline(String),
    #[error("invalid fit parameters: {0}")]
    InvalidParams(String),
}

/// A spline knot: the curve has zero derivative here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomelAnchor {
    #[serde(rename = "t")]
    pub time: f64,
    #[serde(rename = "v")]
    pub value: f64,
}

impl MomelAnchor {
    pub fn new(time: f64, value: f64) -> Self {
        Self { time, value }
    }
}

#[derive(Deserialize)]
struct RawSpline {
    anchors: Vec<MomelAnchor>,
    domain: [f64; 2],
}

impl TryFrom<RawSpline> for MomelSpline {
    type Error = MomelError;

    fn try_from(raw: RawSpline) -> Result<Self, Self::Error> {
        MomelSpline::new(raw.anchors, (raw.domain[0], raw.domain[1]))
    }
}

/// Piecewise-quadratic macromelodic curve defined by its anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpline")]
pub struct MomelSpline {
    anchors: Vec<MomelAnchor>,
    #[serde(with = "domain_serde")]
    domain: (f64, f64),
}

mod domain_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(d: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
        [d.0, d.1].serialize(s)
    }

    #[allow(dead_code)]
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        let [a, b] = <[f64; 2]>::deserialize(d)?;
        Ok((a, b))
    }
}

impl MomelSpline {
    pub fn new(anchors: Vec<MomelAnchor>, domain: (f64, f64)) -> Result<Self, MomelError> {
        if anchors.is_empty() {
            return Err(MomelError::InvalidSpline("no anchors".into()));
        }
        let (d0, d1) = domain;
        if !(d0.is_finite() && d1.is_finite() && d0 <= d1) {
            return Err(MomelError::InvalidSpline(format!("bad domain [{d0}, {d1}]")));
        }
        for a in &anchors {
            if !(a.value > 0.0) || !a.value.is_finite() {
                return Err(MomelError::InvalidSpline(format!("non-positive anchor value {}", a.value)));
            }
            if !(a.time >= d0 && a.time <= d1) {
                return Err(MomelError::InvalidSpline(format!(
                    "anchor time {} outside domain [{d0}, {d1}]",
                    a.time
                )));
            }
        }
        if anchors.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(MomelError::InvalidSpline("anchor times not strictly increasing".into()));
        }
        Ok(Self { anchors, domain })
    }

    /// Spline whose domain is exactly the anchor span.
    pub fn from_anchors(anchors: Vec<MomelAnchor>) -> Result<Self, MomelError> {
        let domain = match (anchors.first(), anchors.last()) {
            (Some(a), Some(b)) => (a.time, b.time),
            _ => return Err(MomelError::InvalidSpline("no anchors".into())),
        };
        Self::new(anchors, domain)
    }

    pub fn anchors(&self) -> &[MomelAnchor] {
        &self.anchors
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn eval(&self, t: f64) -> f64 {
        eval_anchors(&self.anchors, t)
    }

    /// Restriction of the curve to `[start, end]`.
    pub fn slice(&self, start: f64, end: f64) -> Result<SplineSlice, MomelError> {
        if !(start < end) {
            return Err(MomelError::EmptyInterval(start, end));
        }
        let a = &self.anchors;
        // last anchor at or before `start`, first anchor at or after `end`
        let lo = a.partition_point(|x| x.time <= start).saturating_sub(1);
        let hi = a.partition_point(|x| x.time < end).min(a.len() - 1);
        Ok(SplineSlice {
            anchors: a[lo..=hi].to_vec(),
            start,
            end,
        })
    }

    /// Same curve with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, MomelError> {
        let anchors = self
            .anchors
            .iter()
            .map(|a| MomelAnchor::new(a.time, a.value * factor))
            .collect();
        Self::new(anchors, self.domain)
    }
}

/// Two-parabola interpolation between one pair of anchors.
#[inline]
fn segment(a: MomelAnchor, b: MomelAnchor, t: f64) -> f64 {
    let (t1, f1, t2, f2) = (a.time, a.value, b.time, b.value);
    let span = t2 - t1;
    let tm = (t1 + t2) / 2.0;
    if t <= tm {
        let u = (t - t1) / span;
        f1 + 2.0 * (f2 - f1) * (u * u)
    } else {
        let u = (t2 - t) / span;
        f2 - 2.0 * (f2 - f1) * (u * u)
    }
}

fn eval_anchors(a: &[MomelAnchor], t: f64) -> f64 {
    let first = a[0];
    let last = a[a.len() - 1];
    if t <= first.time {
        return first.value;
    }
    if t >= last.time {
        return last.value;
    }
    let j = a.partition_point(|x| x.time <= t);
    segment(a[j - 1], a[j], t)
}

/// One quadratic piece `c0 + c1·(t − t0) + c2·(t − t0)²` on `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPiece {
    pub t0: f64,
    pub t1: f64,
    pub coeffs: [f64; 3],
}

impl QuadraticPiece {
    pub fn eval(&self, t: f64) -> f64 {
        let x = t - self.t0;
        self.coeffs[0] + x * (self.coeffs[1] + x * self.coeffs[2])
    }
}

/// A time window of a [`MomelSpline`]; evaluates bit-identically to its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSlice {
    anchors: Vec<MomelAnchor>,
    start: f64,
    end: f64,
}

impl SplineSlice {
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    /// Evaluates the parent curve at `t`, clamped into the slice interval.
    pub fn eval(&self, t: f64) -> f64 {
        eval_anchors(&self.anchors, t.clamp(self.start, self.end))
    }

    /// `n` values at evenly spaced instants including both endpoints.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![self.eval(self.start)],
            _ => {
                let span = self.end - self.start;
                let denom = (n - 1) as f64;
                (0..n)
                    .map(|j| {
                        let t = if j == n - 1 {
                            self.end
                        } else {
                            self.start + (j as f64 * span) / denom
                        };
                        self.eval(t)
                    })
                    .collect()
            }
        }
    }

    /// The slice as a list of quadratic pieces covering `[start, end]`.
    pub fn pieces(&self) -> Vec<QuadraticPiece> {
        let a = &self.anchors;
        let mut breaks = vec![self.start];
        let mut parts: Vec<(f64, f64, [f64; 3])> = Vec::new();
        // breakpoints: anchors and segment midpoints inside the interval
        for w in a.windows(2) {
            let tm = (w[0].time + w[1].time) / 2.0;
            for bp in [w[0].time, tm, w[1].time] {
                if bp > self.start && bp < self.end && bp > *breaks.last().unwrap() {
                    breaks.push(bp);
                }
            }
        }
        breaks.push(self.end);
        for w in breaks.windows(2) {
            let (p0, p1) = (w[0], w[1]);
            let mid = 0.5 * (p0 + p1);
            parts.push((p0, p1, self.local_quadratic(mid, p0)));
        }
        parts
            .into_iter()
            .map(|(t0, t1, coeffs)| QuadraticPiece { t0, t1, coeffs })
            .collect()
    }

    /// Coefficients of the parabola active at `probe`, expanded around `origin`.
    fn local_quadratic(&self, probe: f64, origin: f64) -> [f64; 3] {
        let a = &self.anchors;
        let first = a[0];
        let last = a[a.len() - 1];
        if probe <= first.time {
            return [first.value, 0.0, 0.0];
        }
        if probe >= last.time {
            return [last.value, 0.0, 0.0];
        }
        let j = a.partition_point(|x| x.time <= probe);
        let (l, r) = (a[j - 1], a[j]);
        let span = r.time - l.time;
        let k = 2.0 * (r.value - l.value) / (span * span);
        // vertex form v0 + s·k·(t − tv)² with the vertex at the anchor of this half
        let (tv, v0, sign) = if probe <= (l.time + r.time) / 2.0 {
            (l.time, l.value, 1.0)
        } else {
            (r.time, r.value, -1.0)
        };
        let c2 = sign * k;
        let d = origin - tv;
        [v0 + c2 * d * d, 2.0 * c2 * d, c2]
    }
}

/// Parameters of the anchor detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MomelFitParams {
    /// Width of the local quadratic regression window, seconds.
    pub window_a: f64,
    /// Relative residual above which a frame is dropped from the local fit.
    pub delta: f64,
    /// Width of the window used to partition candidates, seconds.
    pub window_b: f64,
    /// Candidates further than this many standard deviations from their
    /// partition mean are ignored.
    pub outlier_sigma: f64,
    /// Anchors closer than this are merged, seconds.
    pub merge_gap: f64,
    /// Rounds of least-squares anchor refinement; 0 disables it.
    pub refine_rounds: usize,
}

impl Default for MomelFitParams {
    fn default() -> Self {
        Self {
            window_a: 0.30,
            delta: 0.05,
            window_b: 0.20,
            outlier_sigma: 1.0,
            merge_gap: 0.05,
            refine_rounds: 10,
        }
    }
}

impl MomelFitParams {
    pub fn validate(&self) -> Result<(), MomelError> {
        let ok = self.window_a > 0.0
            && self.delta > 0.0
            && self.window_b > 0.0
            && self.outlier_sigma > 0.0
            && self.merge_gap >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(MomelError::InvalidParams(format!("{self:?}")))
        }
    }
}

const FLAT_CURVATURE: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    center: f64,
    time: f64,
    value: f64,
}

/// Fits a Momel spline to the voiced frames of `contour`.
///
/// The domain of the result is the time span of the whole contour; unvoiced
/// frames are bridged by the spline.
pub fn fit_momel(contour: &F0Contour, params: &MomelFitParams) -> Result<MomelSpline, MomelError> {
    params.validate()?;
    let (ts, ys): (Vec<f64>, Vec<f64>) = contour.voiced().map(|f| (f.time, f.f0)).unzip();
    if ts.len() < 3 {
        return Err(MomelError::TooFewVoicedFrames(ts.len()));
    }
    let bounds = (contour.f0_min(), contour.f0_max());
    let domain = (contour.start_time(), contour.end_time());

    let cands = candidates(&ts, &ys, params, bounds);
    if cands.is_empty() {
        return Err(MomelError::NoAnchorsFound);
    }
    let mut anchors = reduce(&cands, params);
    anchors = merge_close(anchors, params.merge_gap);
    if params.refine_rounds > 0 {
        anchors = refine(anchors, &ts, &ys, params, domain);
        anchors = merge_close(anchors, params.merge_gap);
    }
    let anchors = anchors
        .into_iter()
        .map(|a| MomelAnchor::new(a.time.clamp(domain.0, domain.1), a.value.clamp(bounds.0, bounds.1)))
        .collect::<Vec<_>>();
    let anchors = dedup_times(anchors);
    if anchors.iter().any(|a| !(a.value > 0.0)) {
        return Err(MomelError::NoAnchorsFound);
    }
    MomelSpline::new(anchors, domain)
}

/// Least-squares `y ≈ c0 + c1·x + c2·x²`; `None` if the system is singular.
fn quad_fit(xs: &[f64], ys: &[f64], keep: &[bool]) -> Option<[f64; 3]> {
    let mut s = [0.0f64; 5];
    let mut r = [0.0f64; 3];
    for ((&x, &y), &k) in xs.iter().zip(ys).zip(keep) {
        if !k {
            continue;
        }
        let mut p = 1.0;
        for (i, si) in s.iter_mut().enumerate() {
            *si += p;
            if i < 3 {
                r[i] += p * y;
            }
            p *= x;
        }
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    solve3(m, r)
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for c in col..3 {
                m[row][c] -= f * m[col][c];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = r[row];
        for c in row + 1..3 {
            acc -= m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Candidate pass: one local quadratic regression per voiced frame.
fn candidates(ts: &[f64], ys: &[f64], p: &MomelFitParams, bounds: (f64, f64)) -> Vec<Candidate> {
    let half = p.window_a / 2.0;
    let eps = 1e-9;
    let mut out = Vec::new();
    let mut lo = 0usize;
    let mut hi = 0usize;
    for &tc in ts {
        while ts[lo] < tc - half - eps {
            lo += 1;
        }
        while hi < ts.len() && ts[hi] <= tc + half + eps {
            hi += 1;
        }
        // regress on u = (t − tc) / half for conditioning
        let us: Vec<f64> = ts[lo..hi].iter().map(|&t| (t - tc) / half).collect();
        let ws = &ys[lo..hi];
        let mut keep = vec![true; us.len()];
        let coef = loop {
            if keep.iter().filter(|&&k| k).count() < 3 {
                break None;
            }
            let Some(c) = quad_fit(&us, ws, &keep) else {
                break None;
            };
            let mut changed = false;
            for (i, (&u, &y)) in us.iter().zip(ws).enumerate() {
                let fit = c[0] + u * (c[1] + u * c[2]);
                let still = keep[i] && ((y - fit) / fit).abs() <= p.delta;
                if still != keep[i] {
                    keep[i] = still;
                    changed = true;
                }
            }
            if !changed {
                break Some(c);
            }
        };
        let Some([c0, c1, c2]) = coef else { continue };
        let curvature = c2 / (half * half);
        let (u_v, v) = if curvature.abs() < FLAT_CURVATURE {
            // only a genuinely level window yields a target at its centre
            if (c1.abs()) > p.delta * c0.abs() {
                continue;
            }
            (0.0, c0)
        } else {
            let u_v = -c1 / (2.0 * c2);
            (u_v, c0 + u_v * (c1 + u_v * c2))
        };
        let (u_min, u_max) = (us[0], us[us.len() - 1]);
        if !(u_v >= u_min - eps && u_v <= u_max + eps) || !(v >= bounds.0 && v <= bounds.1) {
            continue;
        }
        out.push(Candidate {
            center: tc,
            time: tc + u_v * half,
            value: v,
        });
    }
    out
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Reduction pass: partitions the candidate sequence and averages each partition.
fn reduce(c: &[Candidate], p: &MomelFitParams) -> Vec<MomelAnchor> {
    let n = c.len();
    let half = p.window_b / 2.0;
    let level = mean(c.iter().map(|x| x.value)).unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
    // distance between the left and right half-window means around each candidate
    let mut d = vec![0.0; n];
    for i in 0..n {
        let ci = c[i].center;
        let left = c[..i].iter().rev().take_while(|x| x.center >= ci - half);
        let right = c[i + 1..].iter().take_while(|x| x.center <= ci + half);
        let (lt, lv) = (mean(left.clone().map(|x| x.time)), mean(left.map(|x| x.value)));
        let (rt, rv) = (mean(right.clone().map(|x| x.time)), mean(right.map(|x| x.value)));
        if let (Some(lt), Some(lv), Some(rt), Some(rv)) = (lt, lv, rt, rv) {
            d[i] = (lt - rt).abs() / p.window_b + (lv - rv).abs() / level;
        }
    }
    let threshold = mean(d.iter().copied()).unwrap_or(0.0);
    let mut bounds = Vec::new();
    for i in 0..n {
        let rises = i == 0 || d[i] >= d[i - 1];
        let falls = i == n - 1 || d[i] > d[i + 1];
        if d[i] > threshold && rises && falls {
            bounds.push(i);
        }
    }
    let mut starts = vec![0];
    starts.extend(bounds.into_iter().filter(|&b| b > 0));
    starts.push(n);
    starts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| partition_target(&c[w[0]..w[1]], p.outlier_sigma))
        .collect()
}

fn partition_target(part: &[Candidate], k_sigma: f64) -> MomelAnchor {
    let stats = |f: &dyn Fn(&Candidate) -> f64| {
        let m = mean(part.iter().map(f)).unwrap();
        let var = mean(part.iter().map(|x| (f(x) - m).powi(2))).unwrap();
        (m, var.sqrt())
    };
    let (mt, st) = stats(&|x| x.time);
    let (mv, sv) = stats(&|x| x.value);
    let tol = 1e-12;
    let inliers: Vec<&Candidate> = part
        .iter()
        .filter(|x| (x.time - mt).abs() <= k_sigma * st + tol && (x.value - mv).abs() <= k_sigma * sv + tol)
        .collect();
    if inliers.is_empty() {
        return MomelAnchor::new(mt, mv);
    }
    MomelAnchor::new(
        mean(inliers.iter().map(|x| x.time)).unwrap(),
        mean(inliers.iter().map(|x| x.value)).unwrap(),
    )
}

/// Repeatedly averages the closest pair of anchors nearer than `gap`.
fn merge_close(mut a: Vec<MomelAnchor>, gap: f64) -> Vec<MomelAnchor> {
    a.sort_by(|x, y| x.time.total_cmp(&y.time));
    loop {
        let closest = a
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i, w[1].time - w[0].time))
            .filter(|&(_, dt)| dt < gap)
            .min_by(|x, y| x.1.total_cmp(&y.1));
        let Some((i, _)) = closest else { break };
        let (l, r) = (a[i], a[i + 1]);
        a[i] = MomelAnchor::new((l.time + r.time) / 2.0, (l.value + r.value) / 2.0);
        a.remove(i + 1);
    }
    a
}

fn dedup_times(mut a: Vec<MomelAnchor>) -> Vec<MomelAnchor> {
    a.dedup_by(|next, prev| {
        if next.time <= prev.time {
            prev.value = (prev.value + next.value) / 2.0;
            true
        } else {
            false
        }
    });
    a
}

/// Interpolation weights of anchors `(j, j+1)` at `t`; the curve is linear in anchor values.
fn weights(times: &[f64], t: f64) -> (usize, f64, f64) {
    let k = times.len();
    if t <= times[0] {
        return (0, 1.0, 0.0);
    }
    if t >= times[k - 1] {
        return (k - 1, 1.0, 0.0);
    }
    let j = times.partition_point(|&x| x <= t) - 1;
    let (t1, t2) = (times[j], times[j + 1]);
    let span = t2 - t1;
    if t <= (t1 + t2) / 2.0 {
        let u = (t - t1) / span;
        let w2 = 2.0 * u * u;
        (j, 1.0 - w2, w2)
    } else {
        let u = (t2 - t) / span;
        let w1 = 2.0 * u * u;
        (j, w1, 1.0 - w1)
    }
}

/// Least-squares anchor values for fixed anchor times, lightly pulled toward `prior`.
fn solve_values(times: &[f64], prior: &[f64], ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let k = times.len();
    let ridge = 1e-6;
    let mut diag = vec![ridge; k];
    let mut off = vec![0.0; k.saturating_sub(1)];
    let mut rhs: Vec<f64> = prior.iter().map(|v| ridge * v).collect();
    for (&t, &y) in ts.iter().zip(ys) {
        let (j, w1, w2) = weights(times, t);
        diag[j] += w1 * w1;
        rhs[j] += w1 * y;
        if w2 != 0.0 {
            diag[j + 1] += w2 * w2;
            off[j] += w1 * w2;
            rhs[j + 1] += w2 * y;
        }
    }
    // Thomas algorithm on the symmetric tridiagonal system
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    for i in 0..k {
        let sub = if i > 0 { off[i - 1] } else { 0.0 };
        let denom = diag[i] - sub * if i > 0 { c[i - 1] } else { 0.0 };
        c[i] = if i + 1 < k { off[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub * if i > 0 { d[i - 1] } else { 0.0 }) / denom;
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        x[i] = d[i] - if i + 1 < k { c[i] * x[i + 1] } else { 0.0 };
    }
    x
}

fn sse(times: &[f64], values: &[f64], ts: &[f64], ys: &[f64]) -> f64 {
    ts.iter()
        .zip(ys)
        .map(|(&t, &y)| {
            let (j, w1, w2) = weights(times, t);
            let f = w1 * values[j] + if w2 != 0.0 { w2 * values[j + 1] } else { 0.0 };
            (f - y) * (f - y)
        })
        .sum()
}

/// Refinement pass: re-solves anchor values by least squares and moves each
/// anchor time by golden-section search within half a regression window.
fn refine(
    anchors: Vec<MomelAnchor>,
    ts: &[f64],
    ys: &[f64],
    p: &MomelFitParams,
    domain: (f64, f64),
) -> Vec<MomelAnchor> {
    let mut times: Vec<f64> = anchors.iter().map(|a| a.time.clamp(domain.0, domain.1)).collect();
    let mut values: Vec<f64> = anchors.iter().map(|a| a.value).collect();
    let objective = |times: &[f64], values: &[f64]| {
        let v = solve_values(times, values, ts, ys);
        (sse(times, &v, ts, ys), v)
    };
    let (mut best, v) = objective(&times, &values);
    values = v;
    let min_gap = p.merge_gap.max(1e-3);
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..p.refine_rounds {
        let mut improved = false;
        for j in 0..times.len() {
            let lo = (times[j] - p.window_a / 2.0)
                .max(domain.0)
                .max(if j > 0 { times[j - 1] + min_gap } else { f64::NEG_INFINITY });
            let hi = (times[j] + p.window_a / 2.0).min(domain.1).min(if j + 1 < times.len() {
                times[j + 1] - min_gap
            } else {
                f64::INFINITY
            });
            if !(lo < hi) {
                continue;
            }
            let mut trial = times.clone();
            let mut eval_at = |x: f64| {
                trial[j] = x;
                objective(&trial, &values).0
            };
            let (mut a, mut b) = (lo, hi);
            let mut x1 = b - golden * (b - a);
            let mut x2 = a + golden * (b - a);
            let (mut f1, mut f2) = (eval_at(x1), eval_at(x2));
            for _ in 0..48 {
                if f1 <= f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - golden * (b - a);
                    f1 = eval_at(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + golden * (b - a);
                    f2 = eval_at(x2);
                }
            }
            let x = if f1 <= f2 { x1 } else { x2 };
            let mut cand = times.clone();
            cand[j] = x;
            let (f, v) = objective(&cand, &values);
            if f < best {
                best = f;
                times = cand;
                values = v;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    times.into_iter().zip(values).map(|(t, v)| MomelAnchor::new(t, v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pitch::{F0Contour, F0Frame};

    fn two() -> MomelSpline {
        MomelSpline::from_anchors(vec![MomelAnchor::new(0.0, 100.0), MomelAnchor::new(1.0, 200.0)]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let s = two();
        assert_eq!(s.eval(0.5), 150.0);
        assert_eq!(s.eval(-5.0), 100.0);
        assert_eq!(s.eval(7.0), 200.0);
        assert_eq!(s.eval(0.25), 112.5);
    }

    #[test]
    fn slice_examples() {
        let s = two();
        let sl = s.slice(0.25, 0.75).unwrap();
        assert_eq!(sl.eval(0.5), 150.0);
        let full = s.slice(0.0, 1.0).unwrap();
        for i in 0..100 {
            let t = i as f64 / 99.0;
            assert_eq!(full.eval(t), s.eval(t));
        }
        assert_eq!(s.slice(0.3, 0.3).unwrap_err(), MomelError::EmptyInterval(0.3, 0.3));
    }

    #[test]
    fn pieces_reproduce_slice() {
        let s = MomelSpline::from_anchors(vec![
            MomelAnchor::new(0.1, 120.0),
            MomelAnchor::new(0.7, 180.0),
            MomelAnchor::new(1.3, 110.0),
        ])
        .unwrap();
        let sl = s.slice(0.0, 1.2).unwrap();
        let pieces = sl.pieces();
        assert_eq!(pieces.first().unwrap().t0, 0.0);
        assert_eq!(pieces.last().unwrap().t1, 1.2);
        for p in &pieces {
            for k in 0..=10 {
                let t = p.t0 + (p.t1 - p.t0) * k as f64 / 10.0;
                assert!((p.eval(t) - sl.eval(t)).abs() < 1e-9, "t={t}");
            }
        }
    }

    #[test]
    fn constructor_rejects_bad_anchors() {
        let dup = vec![MomelAnchor::new(0.0, 1.0), MomelAnchor::new(0.0, 2.0)];
        assert!(MomelSpline::from_anchors(dup).is_err());
        let neg = vec![MomelAnchor::new(0.0, -1.0)];
        assert!(MomelSpline::from_anchors(neg).is_err());
        let outside = vec![MomelAnchor::new(2.0, 1.0)];
        assert!(MomelSpline::new(outside, (0.0, 1.0)).is_err());
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let s = MomelSpline::new(
            vec![MomelAnchor::new(0.1 + 1e-17, 1.0 / 3.0), MomelAnchor::new(0.7, 2.0f64.sqrt())],
            (0.0, 1.0),
        )
        .unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.starts_with("{\"anchors\":[{\"t\":"));
        let back: MomelSpline = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"anchors":[{"t":1.0,"v":1.0},{"t":0.5,"v":1.0}],"domain":[0,2]}"#;
        assert!(serde_json::from_str::<MomelSpline>(bad).is_err());
    }

    #[test]
    fn constant_contour_gives_constant_spline() {
        let c = F0Contour::from_values(0.0, 0.01, &vec![150.0; 101], 50.0, 600.0).unwrap();
        let s = fit_momel(&c, &MomelFitParams::default()).unwrap();
        for i in 0..=200 {
            let t = -0.5 + i as f64 * 0.01;
            assert!((s.eval(t) - 150.0).abs() < 1e-6);
        }
    }

    #[test]
    fn too_few_voiced_frames() {
        let frames = vec![
            F0Frame::voiced(0.0, 100.0),
            F0Frame::unvoiced(0.01),
            F0Frame::voiced(0.02, 110.0),
        ];
        let c = F0Contour::new(frames, 0.01, 50.0, 600.0).unwrap();
        assert_eq!(
            fit_momel(&c, &MomelFitParams::default()).unwrap_err(),
            MomelError::TooFewVoicedFrames(2)
        );
    }

    #[test]
    fn solve_values_recovers_exact_values() {
        let times = [0.1, 0.7, 1.3];
        let truth = [120.0, 180.0, 110.0];
        let s = MomelSpline::from_anchors(times.iter().zip(truth).map(|(&t, v)| MomelAnchor::new(t, v)).collect())
            .unwrap();
        let ts: Vec<f64> = (0..=140).map(|i| i as f64 * 0.01).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| s.eval(t)).collect();
        let v = solve_values(&times, &[100.0; 3], &ts, &ys);
        for (a, b) in v.iter().zip(truth) {
            assert!((a - b).abs() < 1e-3, "{v:?}");
        }
    }

    #[test]
    fn merge_close_averages_neighbours() {
        let a = vec![
            MomelAnchor::new(0.0, 1.0),
            MomelAnchor::new(0.02, 3.0),
            MomelAnchor::new(0.5, 1.0),
        ];
        let m = merge_close(a, 0.05);
        assert_eq!(m, vec![MomelAnchor::new(0.01, 2.0), MomelAnchor::new(0.5, 1.0)]);
    }
}
