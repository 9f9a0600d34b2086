//! Order-fixed summation helpers.
//!
//! Every reduction in the crate goes through these so that results depend
//! only on the order of the inputs, never on how work was split across
//! threads.

const LEAF: usize = 8;

/// Pairwise (tree) sum of a slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of a set of equal-length vectors, accumulating element-wise.
///
/// `row(i)` must return a slice of length `dim` for every `i < count`.
pub fn pairwise_sum_rows<'a, F>(count: usize, dim: usize, row: &F) -> Vec<f64>
where
    F: Fn(usize) -> &'a [f64],
{
    fn go<'a, F: Fn(usize) -> &'a [f64]>(lo: usize, hi: usize, dim: usize, row: &F) -> Vec<f64> {
        if hi - lo <= LEAF {
            let mut acc = vec![0.0; dim];
            for i in lo..hi {
                for (a, v) in acc.iter_mut().zip(row(i)) {
                    *a += v;
                }
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        let mut left = go(lo, mid, dim, row);
        let right = go(mid, hi, dim, row);
        for (a, b) in left.iter_mut().zip(&right) {
            *a += b;
        }
        left
    }
    go(0, count, dim, row)
}

/// Pairwise sum of already-computed partial vectors, in the given order.
pub fn pairwise_sum_vecs(parts: &[Vec<f64>], dim: usize) -> Vec<f64> {
    if parts.is_empty() {
        return vec![0.0; dim];
    }
    pairwise_sum_rows(parts.len(), dim, &|i| parts[i].as_slice())
}

/// Arithmetic mean via [`pairwise_sum`]; `None` for an empty slice.
pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(pairwise_sum(values) / values.len() as f64)
    }
}

/// Plain dot product of two equal-length slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        let rows: Vec<Vec<f64>> = (0..37).map(|i| vec![i as f64, 1.0]).collect();
        assert_eq!(pairwise_sum_rows(37, 2, &|i| rows[i].as_slice()), vec![666.0, 37.0]);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(mean(&[]), None);
        assert_eq!(pairwise_sum_vecs(&[], 3), vec![0.0; 3]);
    }
}
