//! Machine ABX phone discrimination over triphone tokens.
//!
//! A cell fixes a center-phone pair `(A, B)`, a shared context `(l, r)` and
//! either one speaker (within) or an ordered speaker pair `(u, v)` (across).
//! Each triplet `(a, b, x)` with `a, x` of type `A` and `b` of type `B`
//! scores 1 when `x` is closer to `b`, 0.5 on a tie, 0 otherwise.
//!
//! Cell errors are averaged in this order: over the two directions
//! `(A, B)` / `(B, A)`, then contexts, then speakers (or speaker pairs),
//! then unordered phone pairs. Every average is a plain left-to-right sum in
//! sorted key order, so the result does not depend on scheduling.

mod dtw;

pub use dtw::{dtw_distance, dtw_outcome, frame_cost, DtwOutcome};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{segment_of_frames, AlignmentTable, CorpusOptions, FrameTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbxMode {
    Within,
    Across,
}

impl fmt::Display for AbxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AbxMode::Within => "within",
            AbxMode::Across => "across",
        })
    }
}

impl FromStr for AbxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "within" => Ok(AbxMode::Within),
            "across" => Ok(AbxMode::Across),
            _ => Err(Error::InvalidArgument(format!("unknown ABX mode {s:?}"))),
        }
    }
}

/// Which frames make up a token.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenSpan {
    /// All frames of the three segments.
    #[default]
    Triphone,
    /// Only the center segment; context still constrains matching.
    Center,
}

impl FromStr for TokenSpan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triphone" => Ok(TokenSpan::Triphone),
            "center" => Ok(TokenSpan::Center),
            _ => Err(Error::InvalidArgument(format!("unknown token span {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriphoneToken {
    pub speaker: String,
    pub left: String,
    pub center: String,
    pub right: String,
    pub frames: Array2<f64>,
    pub utterance: String,
    /// Frame index range `[start, end)` within the utterance covered by all
    /// three segments.
    pub frame_span: (usize, usize),
}

/// One token per run of three consecutive retained segments whose frames
/// are contiguous. Runs slide one segment at a time.
pub fn extract_triphones(
    t: &FrameTable,
    alignments: &AlignmentTable,
    opts: &CorpusOptions,
    span: TokenSpan,
) -> Vec<TriphoneToken> {
    let groups = t.rows_by_utterance();
    let per_utt: Vec<Vec<TriphoneToken>> = groups
        .par_iter()
        .enumerate()
        .map(|(u, rows)| {
            let utt = &t.utterances()[u];
            let Some(segments) = alignments.get(utt) else {
                return Vec::new();
            };
            let Some(last) = rows.iter().map(|&r| t.frame_index()[r]).max() else {
                return Vec::new();
            };
            let seg_of = segment_of_frames(last + 1, segments, opts.frame_period);
            let mut seg_rows: Vec<Vec<usize>> = vec![Vec::new(); segments.len()];
            for &r in rows {
                if let Some(s) = seg_of[t.frame_index()[r]] {
                    seg_rows[s].push(r);
                }
            }
            let usable = |s: usize| !seg_rows[s].is_empty() && !opts.excluded_phones.contains(&segments[s].phone);
            let contiguous = |s: usize| {
                let end = t.frame_index()[*seg_rows[s].last().unwrap()];
                let start = t.frame_index()[seg_rows[s + 1][0]];
                start == end + 1
            };
            let mut out = Vec::new();
            for j in 0..segments.len().saturating_sub(2) {
                if !(usable(j) && usable(j + 1) && usable(j + 2) && contiguous(j) && contiguous(j + 1)) {
                    continue;
                }
                let chosen: Vec<usize> = match span {
                    TokenSpan::Triphone => seg_rows[j..j + 3].concat(),
                    TokenSpan::Center => seg_rows[j + 1].clone(),
                };
                out.push(TriphoneToken {
                    speaker: t.speaker_set()[t.utterance_speaker()[u]].clone(),
                    left: segments[j].phone.clone(),
                    center: segments[j + 1].phone.clone(),
                    right: segments[j + 2].phone.clone(),
                    frames: t.frames().select(Axis(0), &chosen),
                    utterance: utt.clone(),
                    frame_span: (
                        t.frame_index()[seg_rows[j][0]],
                        t.frame_index()[*seg_rows[j + 2].last().unwrap()] + 1,
                    ),
                });
            }
            out
        })
        .collect();
    per_utt.into_iter().flatten().collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AbxOptions {
    /// Score at most this many triplets per cell, sampled with `seed`.
    pub max_triplets_per_cell: Option<usize>,
    pub seed: u64,
}

/// One directed cell of the evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbxCell {
    /// Center phone of `a` and `x`.
    pub phone_a: String,
    /// Center phone of `b`.
    pub phone_b: String,
    pub left: String,
    pub right: String,
    /// Speaker of `a` and `b`.
    pub speaker: String,
    /// Speaker of `x`; equals `speaker` in within mode.
    pub speaker_x: String,
    pub error: f64,
    pub triplets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbxModeReport {
    pub mode: AbxMode,
    pub error: f64,
    pub phone_pairs: usize,
    pub triplets: usize,
    /// Set when some frame had zero norm and was scored by convention.
    pub zero_norm_frames: bool,
    /// Per-cell detail; exported through [`AbxReport::cells_csv`], not JSON.
    #[serde(skip)]
    pub cells: Vec<AbxCell>,
}

/// Within- and across-speaker results.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AbxReport {
    pub within: Option<AbxModeReport>,
    pub across: Option<AbxModeReport>,
}

impl AbxReport {
    pub fn within_error(&self) -> Option<f64> {
        self.within.as_ref().map(|r| r.error)
    }

    pub fn across_error(&self) -> Option<f64> {
        self.across.as_ref().map(|r| r.error)
    }

    /// Per-contrast table as CSV.
    pub fn cells_csv(&self) -> String {
        let mut out = String::from("mode,phone_a,phone_b,left,right,speaker,speaker_x,error,triplets\n");
        for r in self.within.iter().chain(&self.across) {
            for c in &r.cells {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.mode, c.phone_a, c.phone_b, c.left, c.right, c.speaker, c.speaker_x, c.error, c.triplets
                ));
            }
        }
        out
    }
}

/// Tokens of one context, grouped by center phone and speaker (indices into
/// the sorted phone/speaker lists).
struct ContextGroup {
    left: usize,
    right: usize,
    members: Vec<usize>,
    by_center: BTreeMap<usize, BTreeMap<usize, Vec<usize>>>,
}

pub fn abx_error(tokens: &[TriphoneToken], mode: AbxMode, opts: &AbxOptions) -> Result<AbxModeReport> {
    if tokens.is_empty() {
        return Err(Error::Data("no ABX tokens".into()));
    }
    let dim = tokens[0].frames.ncols();
    if let Some(t) = tokens.iter().find(|t| t.frames.ncols() != dim || t.frames.nrows() == 0) {
        return Err(Error::Data(format!(
            "token from {} has shape {:?}",
            t.utterance,
            t.frames.dim()
        )));
    }
    let phones: Vec<&str> = tokens
        .iter()
        .flat_map(|t| [t.left.as_str(), t.center.as_str(), t.right.as_str()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let speakers: Vec<&str> = tokens
        .iter()
        .map(|t| t.speaker.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pid = |p: &str| phones.binary_search(&p).unwrap();
    let sid = |s: &str| speakers.binary_search(&s).unwrap();

    let mut contexts: BTreeMap<(usize, usize), ContextGroup> = BTreeMap::new();
    for (i, t) in tokens.iter().enumerate() {
        let (l, r) = (pid(&t.left), pid(&t.right));
        let g = contexts.entry((l, r)).or_insert_with(|| ContextGroup {
            left: l,
            right: r,
            members: Vec::new(),
            by_center: BTreeMap::new(),
        });
        g.members.push(i);
        g.by_center
            .entry(pid(&t.center))
            .or_default()
            .entry(sid(&t.speaker))
            .or_default()
            .push(i);
    }
    let norms: Vec<Vec<f64>> = tokens.par_iter().map(|t| dtw::row_norms(t.frames.view())).collect();

    let scored: Vec<(Vec<ScoredCell>, bool)> = contexts
        .values()
        .filter(|g| g.by_center.len() >= 2)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|g| score_context(tokens, &norms, g, mode, opts))
        .collect();

    let zero_norm_frames = scored.iter().any(|(_, z)| *z);
    let cells: Vec<AbxCell> = scored
        .into_iter()
        .flat_map(|(c, _)| c)
        .map(|c| AbxCell {
            phone_a: phones[c.a].to_string(),
            phone_b: phones[c.b].to_string(),
            left: phones[c.left].to_string(),
            right: phones[c.right].to_string(),
            speaker: speakers[c.u].to_string(),
            speaker_x: speakers[c.v].to_string(),
            error: c.error,
            triplets: c.triplets,
        })
        .collect();
    let (error, phone_pairs) = hierarchical_average(&cells)
        .ok_or_else(|| Error::Data(format!("no scoreable {mode}-speaker ABX cell")))?;
    Ok(AbxModeReport {
        mode,
        error,
        phone_pairs,
        triplets: cells.iter().map(|c| c.triplets).sum(),
        zero_norm_frames,
        cells,
    })
}

/// Runs every requested mode.
pub fn abx_evaluate(tokens: &[TriphoneToken], modes: &[AbxMode], opts: &AbxOptions) -> Result<AbxReport> {
    let mut report = AbxReport::default();
    for &mode in modes {
        let r = abx_error(tokens, mode, opts)?;
        match mode {
            AbxMode::Within => report.within = Some(r),
            AbxMode::Across => report.across = Some(r),
        }
    }
    Ok(report)
}

struct ScoredCell {
    a: usize,
    b: usize,
    left: usize,
    right: usize,
    u: usize,
    v: usize,
    error: f64,
    triplets: usize,
}

fn score_context(
    tokens: &[TriphoneToken],
    norms: &[Vec<f64>],
    g: &ContextGroup,
    mode: AbxMode,
    opts: &AbxOptions,
) -> (Vec<ScoredCell>, bool) {
    // Pairwise distances among this context's tokens.
    let n = g.members.len();
    let local: BTreeMap<usize, usize> = g.members.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let upper: Vec<Vec<dtw::DtwOutcome>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let ti = g.members[p];
            ((p + 1)..n)
                .map(|q| {
                    let tj = g.members[q];
                    dtw::dtw_with_norms(tokens[ti].frames.view(), &norms[ti], tokens[tj].frames.view(), &norms[tj])
                })
                .collect()
        })
        .collect();
    let zero_norm = upper.iter().flatten().any(|o| o.zero_norm);
    let dist = |i: usize, j: usize| -> f64 {
        let (p, q) = (local[&i], local[&j]);
        match p.cmp(&q) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => upper[p][q - p - 1].distance,
            std::cmp::Ordering::Greater => upper[q][p - q - 1].distance,
        }
    };

    let mut cells = Vec::new();
    for (&a, a_by_spk) in &g.by_center {
        for (&b, b_by_spk) in &g.by_center {
            if a == b {
                continue;
            }
            for (&u, a_u) in a_by_spk {
                let Some(b_u) = b_by_spk.get(&u) else { continue };
                let x_groups: Vec<(usize, &Vec<usize>)> = match mode {
                    AbxMode::Within => vec![(u, a_u)],
                    AbxMode::Across => a_by_spk.iter().filter(|(&v, _)| v != u).map(|(&v, xs)| (v, xs)).collect(),
                };
                for (v, a_v) in x_groups {
                    let cell_seed = opts.seed ^ cell_hash(&[a, b, g.left, g.right, u, v]);
                    if let Some((error, triplets)) = score_cell(a_u, b_u, a_v, &dist, opts.max_triplets_per_cell, cell_seed) {
                        cells.push(ScoredCell {
                            a,
                            b,
                            left: g.left,
                            right: g.right,
                            u,
                            v,
                            error,
                            triplets,
                        });
                    }
                }
            }
        }
    }
    (cells, zero_norm)
}

fn cell_hash(parts: &[usize]) -> u64 {
    // FNV-1a over the key indices.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &p in parts {
        for byte in (p as u64).to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

#[inline]
fn triplet_score(d_xa: f64, d_xb: f64) -> f64 {
    if d_xa > d_xb {
        1.0
    } else if d_xa == d_xb {
        0.5
    } else {
        0.0
    }
}

/// Mean triplet score of a cell, or `None` when no admissible triplet exists.
fn score_cell(
    a_u: &[usize],
    b_u: &[usize],
    x_v: &[usize],
    dist: &dyn Fn(usize, usize) -> f64,
    cap: Option<usize>,
    seed: u64,
) -> Option<(f64, usize)> {
    let admissible = |x: usize, a: usize| x != a;
    let total: usize = x_v
        .iter()
        .map(|&x| a_u.iter().filter(|&&a| admissible(x, a)).count() * b_u.len())
        .sum();
    if total == 0 {
        return None;
    }
    match cap {
        Some(cap) if total > cap => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut sum = 0.0;
            let mut drawn = 0;
            while drawn < cap {
                let x = x_v[rng.random_range(0..x_v.len())];
                let a = a_u[rng.random_range(0..a_u.len())];
                let b = b_u[rng.random_range(0..b_u.len())];
                if !admissible(x, a) {
                    continue;
                }
                sum += triplet_score(dist(x, a), dist(x, b));
                drawn += 1;
            }
            Some((sum / cap as f64, cap))
        }
        _ => {
            let mut sum = 0.0;
            for &x in x_v {
                for &a in a_u {
                    if !admissible(x, a) {
                        continue;
                    }
                    let d_xa = dist(x, a);
                    for &b in b_u {
                        sum += triplet_score(d_xa, dist(x, b));
                    }
                }
            }
            Some((sum / total as f64, total))
        }
    }
}

fn seq_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    sum / n as f64
}

/// Returns the final error and the number of phone pairs that contributed.
fn hierarchical_average(cells: &[AbxCell]) -> Option<(f64, usize)> {
    type Dirs = BTreeMap<bool, f64>;
    type Level<'a, T> = BTreeMap<(&'a str, &'a str), T>;
    // phone pair -> speaker pair -> context -> direction
    let mut tree: Level<Level<Level<Dirs>>> = BTreeMap::new();
    for c in cells {
        let forward = c.phone_a < c.phone_b;
        let pair = if forward {
            (c.phone_a.as_str(), c.phone_b.as_str())
        } else {
            (c.phone_b.as_str(), c.phone_a.as_str())
        };
        tree.entry(pair)
            .or_default()
            .entry((c.speaker.as_str(), c.speaker_x.as_str()))
            .or_default()
            .entry((c.left.as_str(), c.right.as_str()))
            .or_default()
            .insert(!forward, c.error);
    }
    if tree.is_empty() {
        return None;
    }
    let n_pairs = tree.len();
    let err = seq_mean(tree.values().map(|by_spk| {
        seq_mean(by_spk.values().map(|by_ctx| seq_mean(by_ctx.values().map(|dirs| seq_mean(dirs.values().copied())))))
    }));
    Some((err, n_pairs))
}
