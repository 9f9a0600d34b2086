//! Per-speaker, per-phone and per-(speaker, phone) mean representations.

use std::fmt;

use ndarray::Array2;
use rayon::prelude::*;

use crate::corpus::FrameTable;
use crate::error::{Error, Result};
use crate::reduce::pairwise_sum_rows;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AggregateKey {
    Speaker(String),
    Phone(String),
    Joint { speaker: String, phone: String },
}

impl AggregateKey {
    pub fn speaker(&self) -> Option<&str> {
        match self {
            AggregateKey::Speaker(s) | AggregateKey::Joint { speaker: s, .. } => Some(s),
            AggregateKey::Phone(_) => None,
        }
    }

    pub fn phone(&self) -> Option<&str> {
        match self {
            AggregateKey::Phone(p) | AggregateKey::Joint { phone: p, .. } => Some(p),
            AggregateKey::Speaker(_) => None,
        }
    }
}

impl fmt::Display for AggregateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregateKey::Speaker(s) => f.write_str(s),
            AggregateKey::Phone(p) => f.write_str(p),
            AggregateKey::Joint { speaker, phone } => write!(f, "{speaker}/{phone}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    Speaker,
    Phone,
    Joint,
}

/// Rows of averaged frames, one per key.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateMatrix {
    pub rows: Array2<f64>,
    pub row_keys: Vec<AggregateKey>,
    pub row_counts: Vec<usize>,
    pub grouping: Grouping,
}

impl AggregateMatrix {
    pub fn num_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    /// Key columns followed by one column per dimension.
    pub fn to_tsv(&self) -> String {
        let mut out = match self.grouping {
            Grouping::Speaker => "speaker".to_string(),
            Grouping::Phone => "phone".to_string(),
            Grouping::Joint => "speaker\tphone".to_string(),
        };
        for d in 0..self.dim() {
            out.push_str(&format!("\td{d}"));
        }
        out.push('\n');
        for (key, row) in self.row_keys.iter().zip(self.rows.rows()) {
            match key {
                AggregateKey::Speaker(s) | AggregateKey::Phone(s) => out.push_str(s),
                AggregateKey::Joint { speaker, phone } => {
                    out.push_str(speaker);
                    out.push('\t');
                    out.push_str(phone);
                }
            }
            for v in row {
                out.push_str(&format!("\t{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn aggregate_groups(
    t: &FrameTable,
    groups: Vec<(AggregateKey, Vec<usize>)>,
    grouping: Grouping,
) -> Result<AggregateMatrix> {
    if groups.len() < 2 {
        return Err(Error::Degenerate(format!(
            "aggregation by {grouping:?} yields {} row(s); at least 2 are required",
            groups.len()
        )));
    }
    let dim = t.dim();
    let sums: Vec<Vec<f64>> = groups
        .par_iter()
        .map(|(_, rows)| {
            let n = rows.len() as f64;
            let mut s = pairwise_sum_rows(rows.len(), dim, &|i| t.frame(rows[i]));
            s.iter_mut().for_each(|v| *v /= n);
            s
        })
        .collect();
    let row_counts = groups.iter().map(|(_, r)| r.len()).collect();
    let row_keys = groups.into_iter().map(|(k, _)| k).collect();
    let rows = Array2::from_shape_vec((sums.len(), dim), sums.concat()).expect("shape");
    Ok(AggregateMatrix {
        rows,
        row_keys,
        row_counts,
        grouping,
    })
}

fn bucket(n_keys: usize, labels: &[usize]) -> Vec<Vec<usize>> {
    let mut buckets = vec![Vec::new(); n_keys];
    for (i, &k) in labels.iter().enumerate() {
        buckets[k].push(i);
    }
    buckets
}

/// Mean frame of each speaker, in speaker-set order.
pub fn aggregate_by_speaker(t: &FrameTable) -> Result<AggregateMatrix> {
    let groups = bucket(t.speaker_set().len(), t.speaker_of())
        .into_iter()
        .enumerate()
        .filter(|(_, rows)| !rows.is_empty())
        .map(|(s, rows)| (AggregateKey::Speaker(t.speaker_set()[s].clone()), rows))
        .collect();
    aggregate_groups(t, groups, Grouping::Speaker)
}

/// Mean frame of each phone, in phone-set order.
pub fn aggregate_by_phone(t: &FrameTable) -> Result<AggregateMatrix> {
    let groups = bucket(t.phone_set().len(), t.phone_of())
        .into_iter()
        .enumerate()
        .filter(|(_, rows)| !rows.is_empty())
        .map(|(p, rows)| (AggregateKey::Phone(t.phone_set()[p].clone()), rows))
        .collect();
    aggregate_groups(t, groups, Grouping::Phone)
}

/// Mean frame of each (speaker, phone) cell holding at least `min_count`
/// frames; speaker-major, phone-minor. Sparse cells are omitted, not
/// zero-filled.
pub fn aggregate_joint(t: &FrameTable, min_count: usize) -> Result<AggregateMatrix> {
    if min_count == 0 {
        return Err(Error::InvalidArgument("min_count must be at least 1".into()));
    }
    let n_phones = t.phone_set().len();
    let cells: Vec<usize> = t
        .speaker_of()
        .iter()
        .zip(t.phone_of())
        .map(|(&s, &p)| s * n_phones + p)
        .collect();
    let groups = bucket(t.speaker_set().len() * n_phones, &cells)
        .into_iter()
        .enumerate()
        .filter(|(_, rows)| rows.len() >= min_count)
        .map(|(c, rows)| {
            let key = AggregateKey::Joint {
                speaker: t.speaker_set()[c / n_phones].clone(),
                phone: t.phone_set()[c % n_phones].clone(),
            };
            (key, rows)
        })
        .collect();
    aggregate_groups(t, groups, Grouping::Joint)
}

pub fn aggregate(t: &FrameTable, grouping: Grouping, min_count: usize) -> Result<AggregateMatrix> {
    match grouping {
        Grouping::Speaker => aggregate_by_speaker(t),
        Grouping::Phone => aggregate_by_phone(t),
        Grouping::Joint => aggregate_joint(t, min_count),
    }
}
