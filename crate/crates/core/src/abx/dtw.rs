//! Dynamic time warping with an angular frame distance.

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// DTW distance together with whether any zero-norm frame was met.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtwOutcome {
    pub distance: f64,
    pub zero_norm: bool,
}

/// Angular distance between `f` and `g` scaled to `[0, 1]`. Computed as
/// `2 atan2(|f^ - g^|, |f^ + g^|) / pi`, which stays accurate near 0 and 1
/// where `arccos` does not. A zero-norm frame is treated as orthogonal to
/// everything (0.5) and flagged.
#[inline]
pub fn frame_cost(f: &[f64], g: &[f64], norm_f: f64, norm_g: f64) -> (f64, bool) {
    if norm_f == 0.0 || norm_g == 0.0 {
        return (0.5, true);
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (&a, &b) in f.iter().zip(g) {
        let (a, b) = (a / norm_f, b / norm_g);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    (2.0 * diff.sqrt().atan2(sum.sqrt()) / std::f64::consts::PI, false)
}

pub(crate) fn row_norms(x: ArrayView2<'_, f64>) -> Vec<f64> {
    x.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect()
}

/// Path-length-normalized DTW cost with steps (1,0), (0,1), (1,1).
pub fn dtw_distance(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
    dtw_outcome(x, y).map(|o| o.distance)
}

pub fn dtw_outcome(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<DtwOutcome> {
    if x.nrows() == 0 || y.nrows() == 0 {
        return Err(Error::InvalidArgument("DTW needs non-empty sequences".into()));
    }
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: y.ncols(),
        });
    }
    let x = x.as_standard_layout();
    let y = y.as_standard_layout();
    Ok(dtw_with_norms(
        x.view(),
        &row_norms(x.view()),
        y.view(),
        &row_norms(y.view()),
    ))
}

/// Core recursion on pre-validated, contiguous inputs.
///
/// The optimal path minimizes accumulated cost; among equal-cost
/// predecessors the shorter path wins, then the diagonal step. The result
/// is therefore the same for `(x, y)` and `(y, x)` bit for bit.
pub(crate) fn dtw_with_norms(x: ArrayView2<'_, f64>, nx: &[f64], y: ArrayView2<'_, f64>, ny: &[f64]) -> DtwOutcome {
    let (n, m) = (x.nrows(), y.nrows());
    let mut zero_norm = false;
    // Rolling rows of (cost, length).
    let mut prev = vec![(f64::INFINITY, 0u32); m];
    let mut cur = vec![(f64::INFINITY, 0u32); m];
    for (i, &nxi) in nx.iter().enumerate().take(n) {
        let xi = x.row(i);
        let xi = xi.as_slice().expect("contiguous");
        for j in 0..m {
            let yj = y.row(j);
            let (c, z) = frame_cost(xi, yj.as_slice().expect("contiguous"), nxi, ny[j]);
            zero_norm |= z;
            let best = if i == 0 && j == 0 {
                (0.0, 0)
            } else {
                let mut best = (f64::INFINITY, u32::MAX);
                let candidates = [
                    (i > 0 && j > 0).then(|| prev[j - 1]),
                    (i > 0).then(|| prev[j]),
                    (j > 0).then(|| cur[j - 1]),
                ];
                for cand in candidates.into_iter().flatten() {
                    if cand.0 < best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                        best = cand;
                    }
                }
                best
            };
            cur[j] = (best.0 + c, best.1 + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (cost, len) = prev[m - 1];
    DtwOutcome {
        distance: cost / len as f64,
        zero_norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_is_zero() {
        let x = array![[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]];
        assert_eq!(dtw_distance(x.view(), x.view()).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_single_frames() {
        let d = dtw_distance(array![[1.0, 0.0]].view(), array![[0.0, 2.0]].view()).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_norm_is_flagged() {
        let o = dtw_outcome(array![[0.0, 0.0]].view(), array![[1.0, 0.0]].view()).unwrap();
        assert_eq!(o.distance, 0.5);
        assert!(o.zero_norm);
    }

    #[test]
    fn bad_inputs() {
        let empty = ndarray::Array2::<f64>::zeros((0, 2));
        assert!(dtw_distance(empty.view(), array![[1.0, 0.0]].view()).is_err());
        assert!(dtw_distance(array![[1.0]].view(), array![[1.0, 0.0]].view()).is_err());
    }

    #[test]
    fn repeated_frame_is_free() {
        // y repeats x's frames; warping absorbs the repetition at zero cost.
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        let y = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert_eq!(dtw_distance(x.view(), y.view()).unwrap(), 0.0);
    }
}
