//! Linear probing classifiers: multinomial logistic regression trained by
//! full-batch gradient descent on single frames.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::FrameTable;
use crate::error::{Error, Result};
use crate::reduce::{dot, pairwise_sum, pairwise_sum_rows, pairwise_sum_vecs};

/// Frames per gradient work unit. Fixed so the reduction tree does not
/// depend on the thread count.
const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeTarget {
    Speaker,
    Phone,
}

impl ProbeTarget {
    fn label_of(self, t: &FrameTable, row: usize) -> &str {
        match self {
            ProbeTarget::Speaker => t.speaker_label(row),
            ProbeTarget::Phone => t.phone_label(row),
        }
    }
}

impl std::fmt::Display for ProbeTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProbeTarget::Speaker => "speaker",
            ProbeTarget::Phone => "phone",
        })
    }
}

/// Utterance-level train/test split, half of each speaker's utterances on
/// each side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_utterances: BTreeSet<String>,
    pub test_utterances: BTreeSet<String>,
    pub seed: u64,
}

impl SplitSpec {
    fn rows(&self, t: &FrameTable, train: bool) -> Vec<usize> {
        let set = if train { &self.train_utterances } else { &self.test_utterances };
        let member: Vec<bool> = t.utterances().iter().map(|u| set.contains(u)).collect();
        (0..t.len()).filter(|&i| member[t.utterance_of()[i]]).collect()
    }

    pub fn train_rows(&self, t: &FrameTable) -> Vec<usize> {
        self.rows(t, true)
    }

    pub fn test_rows(&self, t: &FrameTable) -> Vec<usize> {
        self.rows(t, false)
    }
}

/// Shuffles each speaker's utterances with a seeded generator and puts the
/// first `ceil(n / 2)` in the training half.
pub fn split_half_by_speaker(t: &FrameTable, seed: u64) -> Result<SplitSpec> {
    let mut by_speaker: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (u, &s) in t.utterances().iter().zip(t.utterance_speaker()) {
        by_speaker.entry(t.speaker_set()[s].as_str()).or_default().push(u);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = SplitSpec {
        train_utterances: BTreeSet::new(),
        test_utterances: BTreeSet::new(),
        seed,
    };
    for (speaker, mut utts) in by_speaker {
        if utts.len() < 2 {
            return Err(Error::Data(format!(
                "speaker {speaker} has {} utterance(s); a half split needs at least 2",
                utts.len()
            )));
        }
        utts.sort_unstable();
        utts.shuffle(&mut rng);
        let n_train = utts.len().div_ceil(2);
        split.train_utterances.extend(utts[..n_train].iter().map(|u| u.to_string()));
        split.test_utterances.extend(utts[n_train..].iter().map(|u| u.to_string()));
    }
    Ok(split)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Cap on training frames per class, sampled with `seed`. Off by default.
    pub max_frames_per_class: Option<usize>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            learning_rate: 0.5,
            iterations: 300,
            seed: 0,
            max_frames_per_class: None,
        }
    }
}

/// A trained linear classifier over raw frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    /// `C x D`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub class_labels: Vec<String>,
    pub target: ProbeTarget,
    /// Mean training cross-entropy before each update.
    pub loss_history: Vec<f64>,
}

impl ProbeModel {
    /// Index of the highest-scoring class; ties go to the lowest index.
    pub fn predict(&self, z: &[f64]) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (c, w) in self.weights.rows().into_iter().enumerate() {
            let s = dot(w.as_slice().unwrap(), z) + self.bias[c];
            if s > best_score {
                best = c;
                best_score = s;
            }
        }
        best
    }
}

/// Gradient partial for one chunk: (`C x D` weight gradient, `C` bias
/// gradient, summed loss).
fn chunk_gradient(
    x: &Array2<f64>,
    y: &[usize],
    lo: usize,
    hi: usize,
    w: &Array2<f64>,
    b: &Array1<f64>,
) -> (Vec<f64>, Vec<f64>, f64) {
    let (c, d) = w.dim();
    let mut gw = vec![0.0; c * d];
    let mut gb = vec![0.0; c];
    let mut loss = 0.0;
    let mut p = vec![0.0; c];
    for i in lo..hi {
        let xi = x.row(i);
        let xi = xi.as_slice().unwrap();
        for (k, pk) in p.iter_mut().enumerate() {
            *pk = dot(w.row(k).as_slice().unwrap(), xi) + b[k];
        }
        let m = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for pk in p.iter_mut() {
            *pk = (*pk - m).exp();
            z += *pk;
        }
        loss += z.ln() + m - (dot(w.row(y[i]).as_slice().unwrap(), xi) + b[y[i]]);
        for (k, pk) in p.iter_mut().enumerate() {
            *pk /= z;
            let r = *pk - if k == y[i] { 1.0 } else { 0.0 };
            gb[k] += r;
            for (g, xv) in gw[k * d..(k + 1) * d].iter_mut().zip(xi) {
                *g += r * xv;
            }
        }
    }
    (gw, gb, loss)
}

/// Fits a softmax classifier on the training half of `split`.
///
/// Features are centered and scaled by one global factor (per-coordinate
/// RMS of the training frames) before optimization; the stored weights are mapped back so the
/// model applies to raw frames.
pub fn train_probe(t: &FrameTable, split: &SplitSpec, target: ProbeTarget, config: &ProbeConfig) -> Result<ProbeModel> {
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument("learning_rate must be positive".into()));
    }
    let mut rows = split.train_rows(t);
    let class_labels: Vec<String> = rows
        .iter()
        .map(|&r| target.label_of(t, r))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    if class_labels.len() < 2 {
        return Err(Error::Data(format!(
            "training frames cover {} class(es); a probe needs at least 2",
            class_labels.len()
        )));
    }
    if let Some(cap) = config.max_frames_per_class {
        rows = subsample_per_class(t, &rows, target, cap, config.seed);
    }
    let class_index: BTreeMap<&str, usize> = class_labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let y: Vec<usize> = rows.iter().map(|&r| class_index[target.label_of(t, r)]).collect();

    let n = rows.len();
    let d = t.dim();
    let c = class_labels.len();
    let mut mu = pairwise_sum_rows(n, d, &|i| t.frame(rows[i]));
    mu.iter_mut().for_each(|v| *v /= n as f64);
    let sq: Vec<f64> = rows
        .iter()
        .map(|&r| t.frame(r).iter().zip(&mu).map(|(z, m)| (z - m) * (z - m)).sum())
        .collect();
    let rms = (pairwise_sum(&sq) / (n * d) as f64).sqrt();
    let scale = if rms > 0.0 { rms } else { 1.0 };
    let x = Array2::from_shape_fn((n, d), |(i, j)| (t.frame(rows[i])[j] - mu[j]) / scale);

    let mut w = Array2::<f64>::zeros((c, d));
    let mut b = Array1::<f64>::zeros(c);
    let mut loss_history = Vec::with_capacity(config.iterations);
    let chunks: Vec<(usize, usize)> = (0..n).step_by(CHUNK).map(|lo| (lo, (lo + CHUNK).min(n))).collect();
    for _ in 0..config.iterations {
        let parts: Vec<(Vec<f64>, Vec<f64>, f64)> = chunks
            .par_iter()
            .map(|&(lo, hi)| chunk_gradient(&x, &y, lo, hi, &w, &b))
            .collect();
        let mut gws = Vec::with_capacity(parts.len());
        let mut gbs = Vec::with_capacity(parts.len());
        let mut losses = Vec::with_capacity(parts.len());
        for (gw, gb, l) in parts {
            gws.push(gw);
            gbs.push(gb);
            losses.push(l);
        }
        let gw = pairwise_sum_vecs(&gws, c * d);
        let gb = pairwise_sum_vecs(&gbs, c);
        loss_history.push(pairwise_sum(&losses) / n as f64);
        let step = config.learning_rate / n as f64;
        for (wv, g) in w.iter_mut().zip(&gw) {
            *wv -= step * g;
        }
        for (bv, g) in b.iter_mut().zip(&gb) {
            *bv -= step * g;
        }
    }

    let weights = w.mapv(|v| v / scale);
    let bias = Array1::from_shape_fn(c, |k| b[k] - dot(weights.row(k).as_slice().unwrap(), &mu));
    Ok(ProbeModel {
        weights,
        bias,
        class_labels,
        target,
        loss_history,
    })
}

fn subsample_per_class(t: &FrameTable, rows: &[usize], target: ProbeTarget, cap: usize, seed: u64) -> Vec<usize> {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &r in rows {
        by_class.entry(target.label_of(t, r)).or_default().push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::new();
    for (_, mut members) in by_class {
        if members.len() > cap {
            members.shuffle(&mut rng);
            members.truncate(cap);
        }
        kept.extend(members);
    }
    kept.sort_unstable();
    kept
}

/// Fraction of test-half frames whose predicted class differs from the true
/// label. Labels the model never saw count as errors.
pub fn evaluate_probe(m: &ProbeModel, t: &FrameTable, split: &SplitSpec) -> Result<f64> {
    let rows = split.test_rows(t);
    error_rate_on_rows(m, t, &rows)
}

pub(crate) fn error_rate_on_rows(m: &ProbeModel, t: &FrameTable, rows: &[usize]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::Data("no test frames".into()));
    }
    if t.dim() != m.weights.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.weights.ncols(),
            found: t.dim(),
        });
    }
    let errors: usize = rows
        .par_iter()
        .filter(|&&r| {
            let truth = m.target.label_of(t, r);
            m.class_labels[m.predict(t.frame(r))] != truth
        })
        .count();
    Ok(errors as f64 / rows.len() as f64)
}

/// Summary of one probe run, as written to reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub target: ProbeTarget,
    pub error_rate: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub config: ProbeConfig,
}

pub fn run_probe(t: &FrameTable, split: &SplitSpec, target: ProbeTarget, config: &ProbeConfig) -> Result<ProbeResult> {
    let model = train_probe(t, split, target, config)?;
    let error_rate = evaluate_probe(&model, t, split)?;
    Ok(ProbeResult {
        target,
        error_rate,
        n_train: split.train_rows(t).len(),
        n_test: split.test_rows(t).len(),
        seed: split.seed,
        config: *config,
    })
}
