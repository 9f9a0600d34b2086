//! Baseline normalizers: per-group centering and standardization.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::FrameTable;
use crate::error::{Error, Result};
use crate::reduce::pairwise_sum_rows;

pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Utterance,
    Speaker,
}

/// Every normalization a pipeline can apply before probing and ABX.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMethod {
    None,
    UttCenter,
    UttStandardize,
    SpkCenter,
    SpkStandardize,
    Collapse,
}

impl NormalizeMethod {
    pub const ALL: [NormalizeMethod; 6] = [
        NormalizeMethod::None,
        NormalizeMethod::UttCenter,
        NormalizeMethod::UttStandardize,
        NormalizeMethod::SpkCenter,
        NormalizeMethod::SpkStandardize,
        NormalizeMethod::Collapse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NormalizeMethod::None => "none",
            NormalizeMethod::UttCenter => "utt-center",
            NormalizeMethod::UttStandardize => "utt-standardize",
            NormalizeMethod::SpkCenter => "spk-center",
            NormalizeMethod::SpkStandardize => "spk-standardize",
            NormalizeMethod::Collapse => "collapse",
        }
    }

    /// Applies a baseline. `Collapse` needs a basis and is handled by
    /// [`crate::subspace::collapse_table`]; asking for it here is an error.
    pub fn apply_baseline(self, t: &FrameTable, epsilon: f64) -> Result<FrameTable> {
        match self {
            NormalizeMethod::None => Ok(t.clone()),
            NormalizeMethod::UttCenter => center(t, GroupBy::Utterance),
            NormalizeMethod::UttStandardize => standardize(t, GroupBy::Utterance, epsilon),
            NormalizeMethod::SpkCenter => center(t, GroupBy::Speaker),
            NormalizeMethod::SpkStandardize => standardize(t, GroupBy::Speaker, epsilon),
            NormalizeMethod::Collapse => Err(Error::InvalidArgument("collapse requires a basis".into())),
        }
    }
}

impl fmt::Display for NormalizeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NormalizeMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown normalization {s:?}")))
    }
}

fn groups(t: &FrameTable, by: GroupBy) -> Vec<Vec<usize>> {
    match by {
        GroupBy::Utterance => t.rows_by_utterance(),
        GroupBy::Speaker => {
            let mut g = vec![Vec::new(); t.speaker_set().len()];
            for (i, &s) in t.speaker_of().iter().enumerate() {
                g[s].push(i);
            }
            g
        }
    }
}

/// Applies `f(frame, mean, std)` group-wise. `std` is the population
/// standard deviation, computed only when `with_std` is set.
fn per_group<F>(t: &FrameTable, by: GroupBy, with_std: bool, f: F) -> Result<FrameTable>
where
    F: Fn(&mut [f64], &[f64], Option<&[f64]>) + Sync,
{
    let dim = t.dim();
    let updates: Vec<(Vec<usize>, Vec<f64>)> = groups(t, by)
        .into_par_iter()
        .filter(|rows| !rows.is_empty())
        .map(|rows| {
            let n = rows.len() as f64;
            let mut mean = pairwise_sum_rows(rows.len(), dim, &|i| t.frame(rows[i]));
            mean.iter_mut().for_each(|v| *v /= n);
            let std = (with_std && rows.len() >= 2).then(|| {
                let sq: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|&r| t.frame(r).iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).collect())
                    .collect();
                let mut var = pairwise_sum_rows(sq.len(), dim, &|i| sq[i].as_slice());
                var.iter_mut().for_each(|v| *v = (*v / n).sqrt());
                var
            });
            let mut out = Vec::with_capacity(rows.len() * dim);
            for &r in &rows {
                let mut z = t.frame(r).to_vec();
                f(&mut z, &mean, std.as_deref());
                out.extend(z);
            }
            (rows, out)
        })
        .collect();
    let mut frames = Array2::zeros((t.len(), dim));
    for (rows, vals) in updates {
        for (&r, z) in rows.iter().zip(vals.chunks_exact(dim)) {
            frames.row_mut(r).as_slice_mut().unwrap().copy_from_slice(z);
        }
    }
    t.with_frames(frames)
}

/// Subtracts each group's per-dimension mean.
pub fn center(t: &FrameTable, group_by: GroupBy) -> Result<FrameTable> {
    per_group(t, group_by, false, |z, mean, _| {
        z.iter_mut().zip(mean).for_each(|(x, m)| *x -= m);
    })
}

/// Per group and dimension, `(x - mean) / (std + epsilon)`. Groups with a
/// single frame are only centered; constant dimensions map to zero.
pub fn standardize(t: &FrameTable, group_by: GroupBy, epsilon: f64) -> Result<FrameTable> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
    }
    per_group(t, group_by, true, move |z, mean, std| {
        for (j, x) in z.iter_mut().enumerate() {
            let c = *x - mean[j];
            *x = match std {
                Some(s) if s[j] > 0.0 => c / (s[j] + epsilon),
                Some(_) => 0.0,
                None => c,
            };
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabeledFrame;
    use ndarray::{array, Array1};

    fn table(rows: &[(&str, &str, Vec<f64>)]) -> FrameTable {
        let vals: Vec<Array1<f64>> = rows.iter().map(|r| Array1::from(r.2.clone())).collect();
        FrameTable::from_frames(
            vals[0].len(),
            rows.iter().zip(&vals).enumerate().map(|(i, (r, v))| LabeledFrame {
                speaker: r.0,
                utterance: r.1,
                phone: "P",
                frame_index: i,
                values: v.view(),
            }),
        )
        .unwrap()
    }

    #[test]
    fn centering_examples() {
        let t = table(&[("s", "u1", vec![1.0, 3.0]), ("s", "u1", vec![3.0, 5.0]), ("s", "u2", vec![7.0, 7.0])]);
        let c = center(&t, GroupBy::Utterance).unwrap();
        assert_eq!(c.frames(), array![[-1.0, -1.0], [1.0, 1.0], [0.0, 0.0]]);
        assert_eq!(center(&c, GroupBy::Utterance).unwrap(), c);
        assert_eq!(c.utterance_of(), t.utterance_of());
    }

    #[test]
    fn standardize_examples() {
        let t = table(&[("s", "u", vec![0.0, 5.0]), ("s", "u", vec![2.0, 5.0])]);
        let s = standardize(&t, GroupBy::Speaker, 0.0).unwrap();
        assert_eq!(s.frames(), array![[-1.0, 0.0], [1.0, 0.0]]);
        let single = table(&[("s", "u", vec![4.0, 1.0])]);
        assert_eq!(standardize(&single, GroupBy::Speaker, 0.0).unwrap().frames(), array![[0.0, 0.0]]);
        assert!(standardize(&t, GroupBy::Speaker, -1.0).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in NormalizeMethod::ALL {
            assert_eq!(m.as_str().parse::<NormalizeMethod>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        assert!("bogus".parse::<NormalizeMethod>().is_err());
    }
}
