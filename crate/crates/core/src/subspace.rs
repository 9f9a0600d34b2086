//! Relationships between principal bases, and the collapse operation that
//! removes a set of directions from every frame.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::FrameTable;
use crate::error::{Error, Result};
use crate::pca::{thin_svd, PcaBasis};
use crate::reduce::dot;

/// `|a_i . b_j|` for the leading directions of two bases.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub values: Array2<f64>,
    pub basis_labels: (String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityStats {
    /// For each row direction, its similarity with the most aligned column
    /// direction.
    pub per_direction_max: Vec<f64>,
    pub mean: f64,
    /// Population variance of `per_direction_max`.
    pub variance: f64,
    pub max: f64,
}

fn check_dims(a: &PcaBasis, b: &PcaBasis, ka: usize, kb: usize) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if ka > a.k_max() || kb > b.k_max() {
        return Err(Error::InvalidArgument(format!(
            "requested {ka}x{kb} directions from bases with {} and {}",
            a.k_max(),
            b.k_max()
        )));
    }
    Ok(())
}

pub fn direction_similarity(
    a: &PcaBasis,
    b: &PcaBasis,
    ka: usize,
    kb: usize,
    labels: (&str, &str),
) -> Result<SimilarityMatrix> {
    check_dims(a, b, ka, kb)?;
    let values = Array2::from_shape_fn((ka, kb), |(i, j)| dot(a.component(i), b.component(j)).abs().min(1.0));
    Ok(SimilarityMatrix {
        values,
        basis_labels: (labels.0.to_string(), labels.1.to_string()),
    })
}

pub fn orthogonality_stats(s: &SimilarityMatrix) -> Result<OrthogonalityStats> {
    if s.values.is_empty() {
        return Err(Error::InvalidArgument("empty similarity matrix".into()));
    }
    let per_direction_max: Vec<f64> = s
        .values
        .rows()
        .into_iter()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let n = per_direction_max.len() as f64;
    let mean = per_direction_max.iter().sum::<f64>() / n;
    let variance = per_direction_max.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let max = per_direction_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(OrthogonalityStats {
        per_direction_max,
        mean,
        variance,
        max,
    })
}

/// Principal angles in radians between the spans of the leading `ka` and
/// `kb` directions, in non-decreasing order.
pub fn principal_angles(a: &PcaBasis, b: &PcaBasis, ka: usize, kb: usize) -> Result<Vec<f64>> {
    check_dims(a, b, ka, kb)?;
    if ka == 0 || kb == 0 {
        return Ok(Vec::new());
    }
    let cross = Array2::from_shape_fn((ka, kb), |(i, j)| dot(a.component(i), b.component(j)));
    let (sv, _) = thin_svd(cross.view(), false)?;
    Ok(sv.into_iter().map(|s| s.clamp(0.0, 1.0).acos()).collect())
}

/// Removes the leading `k` directions of `b` from every row:
/// `z' = z - sum_i (z . v_i) v_i`. Rows are not centered first.
pub fn collapse(frames: ArrayView2<'_, f64>, b: &PcaBasis, k: usize) -> Result<Array2<f64>> {
    let dim = frames.ncols();
    if dim != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            found: dim,
        });
    }
    if k > b.k_max() {
        return Err(Error::InvalidArgument(format!(
            "cannot collapse {k} directions from a basis with {}",
            b.k_max()
        )));
    }
    let mut out = frames.as_standard_layout().into_owned();
    if k == 0 {
        return Ok(out);
    }
    out.as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(dim)
        .for_each(|z| {
            let coeffs: Vec<f64> = (0..k).map(|i| dot(z, b.component(i))).collect();
            for (c, i) in coeffs.iter().zip(0..k) {
                for (zj, vj) in z.iter_mut().zip(b.component(i)) {
                    *zj -= c * vj;
                }
            }
        });
    Ok(out)
}

/// [`collapse`] applied to a frame table's frames; labels are unchanged.
pub fn collapse_table(t: &FrameTable, b: &PcaBasis, k: usize) -> Result<FrameTable> {
    if k == 0 {
        return Ok(t.clone());
    }
    t.with_frames(collapse(t.frames(), b, k)?)
}
