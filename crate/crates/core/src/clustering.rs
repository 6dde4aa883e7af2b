//! Quantization of word patterns.
//!
//! Pattern shapes are clustered with k-means under dynamic time warping (DTW)
//! or Euclidean distance; for DTW the centroid update is DTW barycenter
//! averaging (DBA). Word levels are clustered separately with 1-D k-means into
//! ordered *states*.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::patterns::{PatternMatrix, WordPattern};
use crate::pitch::NormMode;

pub const MODEL_VERSION: u32 = 1;
/// Tolerance for the zero-mean barycenter invariant.
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("empty input vector")]
    EmptyInput,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("k = {k} exceeds the {rows} available rows")]
    KTooLarge { k: usize, rows: usize },
    #[error("s = {s} exceeds the {distinct} distinct levels")]
    STooLarge { s: usize, distinct: usize },
    #[error("pattern matrix is empty")]
    EmptyMatrix,
    #[error("invalid training parameters: {0}")]
    InvalidParams(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Dtw,
    Euclidean,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Dtw => "dtw",
            Metric::Euclidean => "euclidean",
        })
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dtw" => Ok(Metric::Dtw),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(format!("unknown metric '{other}'")),
        }
    }
}

/// Accumulated squared-difference DTW cost matrix, `(n+1) × (m+1)` row-major.
fn dtw_matrix(a: &[f64], b: &[f64], band: Option<usize>) -> Vec<f64> {
    let (n, m) = (a.len(), b.len());
    let w = band.map(|w| w.max(n.abs_diff(m)));
    let cols = m + 1;
    let mut acc = vec![f64::INFINITY; (n + 1) * cols];
    acc[0] = 0.0;
    for i in 1..=n {
        let (lo, hi) = match w {
            Some(w) => (i.saturating_sub(w).max(1), (i + w).min(m)),
            None => (1, m),
        };
        for j in lo..=hi {
            let d = a[i - 1] - b[j - 1];
            let best = acc[(i - 1) * cols + j - 1]
                .min(acc[(i - 1) * cols + j])
                .min(acc[i * cols + j - 1]);
            acc[i * cols + j] = d * d + best;
        }
    }
    acc
}

/// Classic DTW: squared local cost, match/insert/delete steps, full window.
/// Returns the square root of the optimal accumulated cost.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64, ClusterError> {
    dtw_distance_banded(a, b, None)
}

/// DTW restricted to a Sakoe-Chiba band of half-width `band` (widened to the
/// length difference when needed).
pub fn dtw_distance_banded(a: &[f64], b: &[f64], band: Option<usize>) -> Result<f64, ClusterError> {
    if a.is_empty() || b.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    Ok(dtw_cost(a, b, band).sqrt())
}

fn dtw_cost(a: &[f64], b: &[f64], band: Option<usize>) -> f64 {
    let (n, m) = (a.len(), b.len());
    let w = band.map(|w| w.max(n.abs_diff(m)));
    // two-row version of `dtw_matrix`
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        cur.fill(f64::INFINITY);
        let (lo, hi) = match w {
            Some(w) => (i.saturating_sub(w).max(1), (i + w).min(m)),
            None => (1, m),
        };
        for j in lo..=hi {
            let d = a[i - 1] - b[j - 1];
            cur[j] = d * d + prev[j - 1].min(prev[j]).min(cur[j - 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Optimal warping path as `(index in a, index in b)` pairs from the start,
/// plus its accumulated cost. Ties prefer the diagonal step.
pub fn dtw_path(a: &[f64], b: &[f64], band: Option<usize>) -> Result<(Vec<(usize, usize)>, f64), ClusterError> {
    if a.is_empty() || b.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    let (n, m) = (a.len(), b.len());
    let cols = m + 1;
    let acc = dtw_matrix(a, b, band);
    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        path.push((i - 1, j - 1));
        let diag = acc[(i - 1) * cols + j - 1];
        let up = acc[(i - 1) * cols + j];
        let left = acc[i * cols + j - 1];
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    path.reverse();
    Ok((path, acc[n * cols + m]))
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64, ClusterError> {
    if a.is_empty() || b.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    if a.len() != b.len() {
        return Err(ClusterError::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(sq_euclidean(a, b).sqrt())
}

fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared distance under `metric`; inputs are assumed non-empty and equal length.
fn sq_distance(metric: Metric, band: Option<usize>, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::Dtw => dtw_cost(a, b, band),
        Metric::Euclidean => sq_euclidean(a, b),
    }
}

/// Quantized label of one word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PastaLabel {
    pub pattern_id: usize,
    pub state_id: usize,
}

#[derive(Deserialize)]
struct RawModel {
    version: u32,
    metric: Metric,
    n_f0: usize,
    k: usize,
    s: usize,
    seed: u64,
    barycenters: Vec<Vec<f64>>,
    state_centroids: Vec<f64>,
    norm_mode: NormMode,
    #[serde(default)]
    band: Option<usize>,
}

impl TryFrom<RawModel> for ClusterModel {
    type Error = ClusterError;

    fn try_from(r: RawModel) -> Result<Self, Self::Error> {
        if r.version != MODEL_VERSION {
            return Err(ClusterError::InvalidModel(format!("unsupported version {}", r.version)));
        }
        if r.k != r.barycenters.len() || r.s != r.state_centroids.len() {
            return Err(ClusterError::InvalidModel("k/s disagree with stored centroids".into()));
        }
        let m = ClusterModel {
            version: r.version,
            metric: r.metric,
            n_f0: r.n_f0,
            k: r.k,
            s: r.s,
            seed: r.seed,
            barycenters: r.barycenters,
            state_centroids: r.state_centroids,
            norm_mode: r.norm_mode,
            band: r.band,
        };
        m.validate()?;
        Ok(m)
    }
}

/// A trained pattern/state quantizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct ClusterModel {
    pub version: u32,
    pub metric: Metric,
    pub n_f0: usize,
    pub k: usize,
    pub s: usize,
    pub seed: u64,
    pub barycenters: Vec<Vec<f64>>,
    pub state_centroids: Vec<f64>,
    pub norm_mode: NormMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<usize>,
}

impl ClusterModel {
    /// Builds a model from explicit centroids, checking its invariants.
    pub fn new(
        metric: Metric,
        barycenters: Vec<Vec<f64>>,
        state_centroids: Vec<f64>,
        norm_mode: NormMode,
        seed: u64,
    ) -> Result<Self, ClusterError> {
        let n_f0 = barycenters.first().map_or(0, Vec::len);
        let m = Self {
            version: MODEL_VERSION,
            metric,
            n_f0,
            k: barycenters.len(),
            s: state_centroids.len(),
            seed,
            barycenters,
            state_centroids,
            norm_mode,
            band: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        let bad = |m: String| Err(ClusterError::InvalidModel(m));
        if self.barycenters.is_empty() || self.state_centroids.is_empty() {
            return bad("need at least one barycenter and one state".into());
        }
        for (i, b) in self.barycenters.iter().enumerate() {
            if b.len() != self.n_f0 || b.is_empty() {
                return bad(format!("barycenter {i} has length {} (n_f0 = {})", b.len(), self.n_f0));
            }
            let mean = b.iter().sum::<f64>() / b.len() as f64;
            if !(mean.abs() <= ZERO_MEAN_TOLERANCE) {
                return bad(format!("barycenter {i} has mean {mean}"));
            }
        }
        if self.state_centroids.iter().any(|c| !c.is_finite())
            || self.state_centroids.windows(2).any(|w| !(w[1] > w[0]))
        {
            return bad("state centroids must be finite and strictly ascending".into());
        }
        Ok(())
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        sq_distance(self.metric, self.band, a, b).sqrt()
    }

    /// Nearest barycenter and nearest state; ties go to the lower index.
    pub fn assign(&self, pattern: &WordPattern) -> Result<PastaLabel, ClusterError> {
        if pattern.values.len() != self.n_f0 {
            return Err(ClusterError::LengthMismatch {
                expected: self.n_f0,
                got: pattern.values.len(),
            });
        }
        Ok(PastaLabel {
            pattern_id: self.nearest_pattern(&pattern.values).0,
            state_id: nearest_scalar(&self.state_centroids, pattern.level),
        })
    }

    fn nearest_pattern(&self, values: &[f64]) -> (usize, f64) {
        nearest(&self.barycenters, values, self.metric, self.band)
    }
}

/// Free-function form of [`ClusterModel::assign`].
pub fn assign(model: &ClusterModel, pattern: &WordPattern) -> Result<PastaLabel, ClusterError> {
    model.assign(pattern)
}

fn nearest(centroids: &[Vec<f64>], x: &[f64], metric: Metric, band: Option<usize>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_distance(metric, band, x, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn nearest_scalar(centroids: &[f64], x: f64) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, &c) in centroids.iter().enumerate() {
        let d = (x - c).abs();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub k: usize,
    pub s: usize,
    pub metric: Metric,
    pub seed: u64,
    /// Cap on outer k-means iterations.
    pub max_iter: usize,
    /// DBA refinement iterations per centroid update.
    pub dba_iter: usize,
    /// Optional Sakoe-Chiba half-width for DTW.
    pub band: Option<usize>,
    pub norm_mode: NormMode,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            k: 24,
            s: 5,
            metric: Metric::Dtw,
            seed: 0,
            max_iter: 100,
            dba_iter: 10,
            band: None,
            norm_mode: NormMode::Phrase,
        }
    }
}

/// A trained model together with the final training assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub model: ClusterModel,
    pub pattern_labels: Vec<usize>,
    pub state_labels: Vec<usize>,
    /// Pattern inertia (sum of squared distances) after each assignment step.
    pub inertia: Vec<f64>,
}

impl TrainOutput {
    pub fn labels(&self) -> Vec<PastaLabel> {
        self.pattern_labels
            .iter()
            .zip(&self.state_labels)
            .map(|(&pattern_id, &state_id)| PastaLabel { pattern_id, state_id })
            .collect()
    }
}

/// Trains pattern barycenters and state centroids on `matrix`.
pub fn train(matrix: &PatternMatrix, params: &TrainParams) -> Result<TrainOutput, ClusterError> {
    if matrix.is_empty() {
        return Err(ClusterError::EmptyMatrix);
    }
    if params.k == 0 || params.s == 0 {
        return Err(ClusterError::InvalidParams("k and s must be >= 1".into()));
    }
    if matrix.n_f0() == 0 {
        return Err(ClusterError::EmptyInput);
    }
    let rows: Vec<&[f64]> = matrix.rows().iter().map(|r| r.values.as_slice()).collect();
    if params.k > rows.len() {
        return Err(ClusterError::KTooLarge {
            k: params.k,
            rows: rows.len(),
        });
    }
    let levels: Vec<f64> = matrix.rows().iter().map(|r| r.level).collect();
    let mut distinct = levels.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if params.s > distinct.len() {
        return Err(ClusterError::STooLarge {
            s: params.s,
            distinct: distinct.len(),
        });
    }

    let km = PatternKMeans {
        rows: &rows,
        metric: params.metric,
        band: params.band,
        dba_iter: params.dba_iter,
    };
    let (barycenters, pattern_labels, inertia) = km.run(params.k, params.seed, params.max_iter);
    let (state_centroids, state_labels) = state_kmeans(&levels, &distinct, params.s, params.max_iter);

    let model = ClusterModel {
        version: MODEL_VERSION,
        metric: params.metric,
        n_f0: matrix.n_f0(),
        k: params.k,
        s: params.s,
        seed: params.seed,
        barycenters,
        state_centroids,
        norm_mode: params.norm_mode,
        band: params.band,
    };
    model.validate()?;
    Ok(TrainOutput {
        model,
        pattern_labels,
        state_labels,
        inertia,
    })
}

struct PatternKMeans<'a> {
    rows: &'a [&'a [f64]],
    metric: Metric,
    band: Option<usize>,
    dba_iter: usize,
}

impl PatternKMeans<'_> {
    fn d2(&self, a: &[f64], b: &[f64]) -> f64 {
        sq_distance(self.metric, self.band, a, b)
    }

    fn run(&self, k: usize, seed: u64, max_iter: usize) -> (Vec<Vec<f64>>, Vec<usize>, Vec<f64>) {
        let mut centroids = self.kmeans_plus_plus(k, seed);
        let (mut labels, mut dists) = self.assign_all(&centroids);
        let mut inertia = vec![dists.iter().sum::<f64>()];
        for _ in 0..max_iter {
            let updated = self.update(&centroids, &labels, &dists);
            let (new_labels, new_dists) = self.assign_all(&updated);
            let total: f64 = new_dists.iter().sum();
            if total > *inertia.last().unwrap() {
                // rounding noise at convergence; keep the previous state
                break;
            }
            let stable = new_labels == labels;
            centroids = updated;
            labels = new_labels;
            dists = new_dists;
            inertia.push(total);
            if stable {
                break;
            }
        }
        (centroids, labels, inertia)
    }

    /// k-means++ seeding under the training metric.
    fn kmeans_plus_plus(&self, k: usize, seed: u64) -> Vec<Vec<f64>> {
        let n = self.rows.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chosen = vec![rng.random_range(0..n)];
        let mut d2: Vec<f64> = self.rows.par_iter().map(|r| self.d2(r, self.rows[chosen[0]])).collect();
        while chosen.len() < k {
            let total: f64 = d2.iter().sum();
            let next = if total > 0.0 {
                let target = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = None;
                for (i, &d) in d2.iter().enumerate() {
                    if d <= 0.0 {
                        continue;
                    }
                    acc += d;
                    pick = Some(i);
                    if acc > target {
                        break;
                    }
                }
                pick.expect("positive total implies a positive weight")
            } else {
                // every row coincides with a chosen centroid
                (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
            };
            chosen.push(next);
            let c = self.rows[next];
            let fresh: Vec<f64> = self.rows.par_iter().map(|r| self.d2(r, c)).collect();
            for (d, f) in d2.iter_mut().zip(fresh) {
                *d = d.min(f);
            }
        }
        chosen.into_iter().map(|i| self.rows[i].to_vec()).collect()
    }

    fn assign_all(&self, centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
        self.rows
            .par_iter()
            .map(|r| nearest(centroids, r, self.metric, self.band))
            .unzip()
    }

    fn update(&self, centroids: &[Vec<f64>], labels: &[usize], dists: &[f64]) -> Vec<Vec<f64>> {
        let k = centroids.len();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        let mut next: Vec<Option<Vec<f64>>> = (0..k)
            .into_par_iter()
            .map(|c| {
                if members[c].is_empty() {
                    return None;
                }
                let rows: Vec<&[f64]> = members[c].iter().map(|&i| self.rows[i]).collect();
                Some(match self.metric {
                    Metric::Dtw => dba(&centroids[c], &rows, self.dba_iter, self.band),
                    Metric::Euclidean => euclidean_mean(&rows),
                })
            })
            .collect();
        // empty clusters take the rows farthest from their current centroid
        let mut taken = vec![false; self.rows.len()];
        for c in 0..k {
            if next[c].is_some() {
                continue;
            }
            let far = (0..self.rows.len())
                .filter(|&i| !taken[i])
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                .unwrap_or(0);
            taken[far] = true;
            next[c] = Some(self.rows[far].to_vec());
        }
        next.into_iter().map(Option::unwrap).collect()
    }
}

fn euclidean_mean(rows: &[&[f64]]) -> Vec<f64> {
    let n = rows[0].len();
    let mut out = vec![0.0; n];
    for r in rows {
        for (o, v) in out.iter_mut().zip(r.iter()) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= rows.len() as f64);
    out
}

/// DTW barycenter averaging restricted to zero-mean barycenters.
///
/// Each iteration aligns every member to the current barycenter and replaces
/// each barycenter point by the average of the member points warped onto it,
/// shifted by the common offset that keeps the barycenter mean at zero (the
/// exact constrained least-squares solution for the fixed alignment).
pub fn dba(start: &[f64], members: &[&[f64]], iterations: usize, band: Option<usize>) -> Vec<f64> {
    let n = start.len();
    let mut bary = start.to_vec();
    for _ in 0..iterations {
        let mut sums = vec![0.0; n];
        let mut counts = vec![0usize; n];
        for m in members {
            let (path, _) = dtw_path(&bary, m, band).expect("non-empty series");
            for (i, j) in path {
                sums[i] += m[j];
                counts[i] += 1;
            }
        }
        let inv: f64 = counts.iter().map(|&c| 1.0 / c as f64).sum();
        let shift = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).sum::<f64>() / inv;
        let next: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| (s - shift) / c as f64)
            .collect();
        if next == bary {
            break;
        }
        bary = next;
    }
    bary
}

/// 1-D k-means over levels with quantile seeding; centroids come back ascending.
fn state_kmeans(levels: &[f64], distinct: &[f64], s: usize, max_iter: usize) -> (Vec<f64>, Vec<usize>) {
    let m = distinct.len();
    let mut centroids: Vec<f64> = (0..s).map(|i| distinct[((2 * i + 1) * m) / (2 * s)]).collect();
    let mut labels: Vec<usize> = levels.iter().map(|&x| nearest_scalar(&centroids, x)).collect();
    for _ in 0..max_iter.max(1) {
        let mut sum = vec![0.0; s];
        let mut cnt = vec![0usize; s];
        for (&x, &l) in levels.iter().zip(&labels) {
            sum[l] += x;
            cnt[l] += 1;
        }
        for c in 0..s {
            if cnt[c] > 0 {
                centroids[c] = sum[c] / cnt[c] as f64;
            } else {
                let far = levels
                    .iter()
                    .zip(&labels)
                    .enumerate()
                    .max_by(|(ia, (a, la)), (ib, (b, lb))| {
                        (*a - centroids[**la])
                            .abs()
                            .total_cmp(&(*b - centroids[**lb]).abs())
                            .then(ib.cmp(ia))
                    })
                    .map(|(i, _)| i)
                    .unwrap();
                centroids[c] = levels[far];
            }
        }
        let next: Vec<usize> = levels.iter().map(|&x| nearest_scalar(&centroids, x)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| centroids[a].total_cmp(&centroids[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| centroids[i]).collect();
    let labels = levels.iter().map(|&x| nearest_scalar(&sorted, x)).collect();
    (sorted, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::center;

    /// Brute force over every monotone alignment path.
    fn dtw_brute(a: &[f64], b: &[f64]) -> f64 {
        fn go(a: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
            let c = (a[i] - b[j]).powi(2);
            if i + 1 == a.len() && j + 1 == b.len() {
                return c;
            }
            let mut best = f64::INFINITY;
            if i + 1 < a.len() && j + 1 < b.len() {
                best = best.min(go(a, b, i + 1, j + 1));
            }
            if i + 1 < a.len() {
                best = best.min(go(a, b, i + 1, j));
            }
            if j + 1 < b.len() {
                best = best.min(go(a, b, i, j + 1));
            }
            c + best
        }
        go(a, b, 0, 0).sqrt()
    }

    #[test]
    fn dtw_examples() {
        let a = [0.3, -1.0, 2.0, 0.5];
        assert_eq!(dtw_distance(&a, &a).unwrap(), 0.0);
        let x = [0.0, 0.0, 1.0, 0.0];
        let y = [0.0, 1.0, 0.0, 0.0];
        let d = dtw_distance(&x, &y).unwrap();
        assert_eq!(d, dtw_brute(&x, &y));
        assert!(d < 2f64.sqrt());
        assert_eq!(dtw_distance(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 2f64.sqrt());
        assert_eq!(dtw_brute(&[0.0, 0.0], &[1.0, 1.0]), 2f64.sqrt());
        assert_eq!(dtw_distance(&[], &[1.0]).unwrap_err(), ClusterError::EmptyInput);
    }

    #[test]
    fn dtw_matches_brute_force_on_small_vectors() {
        let cases: [(&[f64], &[f64]); 4] = [
            (&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0, 0.0]),
            (&[0.5, -0.5, 0.5, -0.5], &[0.0, 0.0, 1.0, -1.0]),
            (&[2.0], &[1.0, 2.0, 3.0]),
            (&[0.1, 0.4, 0.2, 0.9, 0.3], &[0.0, 0.5, 0.5, 0.1, 0.8]),
        ];
        for (a, b) in cases {
            let fast = dtw_distance(a, b).unwrap();
            assert!((fast - dtw_brute(a, b)).abs() < 1e-12);
            let (path, cost) = dtw_path(a, b, None).unwrap();
            assert!((cost.sqrt() - fast).abs() < 1e-12);
            let along: f64 = path.iter().map(|&(i, j)| (a[i] - b[j]).powi(2)).sum();
            assert!((along - cost).abs() < 1e-12);
            assert_eq!(path[0], (0, 0));
            assert_eq!(*path.last().unwrap(), (a.len() - 1, b.len() - 1));
        }
    }

    #[test]
    fn band_zero_is_euclidean_for_equal_lengths() {
        let a = [0.0, 1.0, 0.5, -0.2];
        let b = [0.3, 0.1, 0.9, 0.0];
        let banded = dtw_distance_banded(&a, &b, Some(0)).unwrap();
        assert!((banded - euclidean_distance(&a, &b).unwrap()).abs() < 1e-12);
        assert!(dtw_distance(&a, &b).unwrap() <= banded);
    }

    fn zero_mean(v: &[f64]) -> Vec<f64> {
        center(v.to_vec(), "x", 0).values
    }

    fn matrix(rows: Vec<(Vec<f64>, f64)>) -> PatternMatrix {
        let n = rows[0].0.len();
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, (v, level))| WordPattern {
                utterance_id: "t".into(),
                word_index: i,
                level,
                values: v,
            })
            .collect();
        PatternMatrix::from_rows(n, rows).unwrap()
    }

    #[test]
    fn separable_patterns_and_levels() {
        let a = zero_mean(&[0.0, 0.1, 0.3, 0.6, 1.0, 1.0]);
        let b = zero_mean(&[1.0, 0.8, 0.2, 0.0, 0.0, 0.1]);
        let mut rows = Vec::new();
        for i in 0..10 {
            rows.push((a.clone(), 0.8));
            rows.push((b.clone(), if i % 2 == 0 { 1.2 } else { 0.8 }));
        }
        for metric in [Metric::Dtw, Metric::Euclidean] {
            let params = TrainParams {
                k: 2,
                s: 2,
                metric,
                seed: 3,
                ..TrainParams::default()
            };
            let out = train(&matrix(rows.clone()), &params).unwrap();
            let la = out.pattern_labels[0];
            let lb = out.pattern_labels[1];
            assert_ne!(la, lb);
            for (i, &l) in out.pattern_labels.iter().enumerate() {
                assert_eq!(l, if i % 2 == 0 { la } else { lb });
            }
            for (x, y) in out.model.barycenters[la].iter().zip(&a) {
                assert!((x - y).abs() < 1e-6);
            }
            for (x, y) in out.model.barycenters[lb].iter().zip(&b) {
                assert!((x - y).abs() < 1e-6);
            }
            let sc = &out.model.state_centroids;
            assert!((sc[0] - 0.8).abs() < 1e-6 && (sc[1] - 1.2).abs() < 1e-6, "{sc:?}");
        }
    }

    #[test]
    fn train_guards() {
        let rows = vec![(vec![0.0; 4], 1.0), (vec![0.0; 4], 1.1)];
        let m = matrix(rows);
        let p = |k, s| TrainParams {
            k,
            s,
            ..TrainParams::default()
        };
        assert_eq!(train(&m, &p(3, 1)).unwrap_err(), ClusterError::KTooLarge { k: 3, rows: 2 });
        assert_eq!(train(&m, &p(1, 3)).unwrap_err(), ClusterError::STooLarge { s: 3, distinct: 2 });
        assert_eq!(
            train(&PatternMatrix::new(4), &p(1, 1)).unwrap_err(),
            ClusterError::EmptyMatrix
        );
        // identical rows still seed k distinct indices
        let out = train(&m, &p(2, 2)).unwrap();
        assert_eq!(out.model.k, 2);
    }

    fn model(barycenters: Vec<Vec<f64>>, states: Vec<f64>) -> ClusterModel {
        ClusterModel::new(Metric::Dtw, barycenters, states, NormMode::Phrase, 0).unwrap()
    }

    fn pat(values: Vec<f64>, level: f64) -> WordPattern {
        WordPattern {
            utterance_id: "u".into(),
            word_index: 0,
            level,
            values,
        }
    }

    #[test]
    fn assign_examples() {
        let v = zero_mean(&[0.0, 0.2, 0.9, 0.4]);
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let bs = vec![
            zero_mean(&[0.0, 0.0, 0.0, 1.0]),
            v.clone(),
            zero_mean(&[1.0, 0.0, 0.0, 0.0]),
            zero_mean(&[0.0, 1.0, 1.0, 0.0]),
            neg.clone(),
        ];
        let m = model(bs.clone(), vec![0.5, 1.5]);
        assert_eq!(m.assign(&pat(bs[3].clone(), 1.0)).unwrap().pattern_id, 3);
        // exactly midway between two states
        assert_eq!(m.assign(&pat(bs[3].clone(), 1.0)).unwrap().state_id, 0);
        // the zero pattern is equidistant from v and −v
        let zero = vec![0.0; 4];
        let d1 = dtw_distance(&zero, &v).unwrap();
        let d4 = dtw_distance(&zero, &neg).unwrap();
        assert_eq!(d1, d4);
        let mut only = bs.clone();
        only[0] = zero_mean(&[0.0, 0.0, 0.0, 5.0]);
        only[2] = zero_mean(&[5.0, 0.0, 0.0, 0.0]);
        only[3] = zero_mean(&[0.0, 5.0, 5.0, 0.0]);
        let m = model(only, vec![1.0]);
        assert_eq!(m.assign(&pat(zero, 1.0)).unwrap().pattern_id, 1);
        assert_eq!(
            m.assign(&pat(vec![0.0; 3], 1.0)).unwrap_err(),
            ClusterError::LengthMismatch { expected: 4, got: 3 }
        );
    }

    #[test]
    fn dba_keeps_zero_mean() {
        let a = zero_mean(&[0.0, 1.0, 0.0, 0.0, 0.0]);
        let b = zero_mean(&[0.0, 0.0, 0.0, 1.0, 0.0]);
        let c = zero_mean(&[0.0, 0.0, 1.0, 0.0, 0.0]);
        let bary = dba(&a, &[&a, &b, &c], 10, None);
        assert!(bary.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn model_json_schema_and_validation() {
        let m = model(vec![vec![0.5, -0.5], vec![-0.25, 0.25]], vec![0.9, 1.1]);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(
            json,
            r#"{"version":1,"metric":"dtw","n_f0":2,"k":2,"s":2,"seed":0,"barycenters":[[0.5,-0.5],[-0.25,0.25]],"state_centroids":[0.9,1.1],"norm_mode":"phrase"}"#
        );
        assert_eq!(serde_json::from_str::<ClusterModel>(&json).unwrap(), m);
        let unsorted = json.replace("[0.9,1.1]", "[1.1,0.9]");
        assert!(serde_json::from_str::<ClusterModel>(&unsorted).is_err());
        let biased = json.replace("[0.5,-0.5]", "[0.5,0.5]");
        assert!(serde_json::from_str::<ClusterModel>(&biased).is_err());
        let wrong_k = json.replace("\"k\":2", "\"k\":3");
        assert!(serde_json::from_str::<ClusterModel>(&wrong_k).is_err());
    }
}
