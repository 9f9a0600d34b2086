//! Principal component bases of aggregate matrices.

use std::fs;
use std::path::{Path, PathBuf};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{svd, svd_scratch, ComputeSvdVectors};
use faer::diag::Diag;
use faer::{Mat, Par};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::aggregate::AggregateMatrix;
use crate::error::{Error, Result};
use crate::reduce::{dot, pairwise_sum_rows};

pub const BASIS_MAGIC: &[u8; 4] = b"SSPB";
pub const BASIS_VERSION: u32 = 1;

/// Tolerance on `|v_i . v_j - delta_ij|` for a valid basis.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// Mean vector plus orthonormal principal directions sorted by descending
/// variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pub mean: Array1<f64>,
    /// `k_max x dim`; row `i` is direction `i`.
    pub components: Array2<f64>,
    pub variances: Vec<f64>,
    pub variance_ratios: Vec<f64>,
}

impl PcaBasis {
    /// Builds a basis from parts, checking shapes, orthonormality and
    /// variance ordering. Ratios are `variances / sum(variances)`.
    pub fn from_parts(mean: Array1<f64>, components: Array2<f64>, variances: Vec<f64>) -> Result<Self> {
        let dim = mean.len();
        if components.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: components.ncols(),
            });
        }
        if variances.len() != components.nrows() {
            return Err(Error::DimensionMismatch {
                expected: components.nrows(),
                found: variances.len(),
            });
        }
        if variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Data("variances must be finite and non-negative".into()));
        }
        if variances.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Data("variances must be non-increasing".into()));
        }
        let total: f64 = variances.iter().sum();
        let variance_ratios = if total > 0.0 {
            variances.iter().map(|v| v / total).collect()
        } else {
            vec![0.0; variances.len()]
        };
        let b = PcaBasis {
            mean,
            components: components.as_standard_layout().into_owned(),
            variances,
            variance_ratios,
        };
        let err = b.orthonormality_error();
        if err > ORTHONORMAL_TOL {
            return Err(Error::Data(format!("components are not orthonormal (error {err:e})")));
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k_max(&self) -> usize {
        self.components.nrows()
    }

    pub fn component(&self, i: usize) -> &[f64] {
        self.components.row(i).to_slice().expect("standard layout")
    }

    /// Largest `|v_i . v_j - delta_ij|` over all pairs of components.
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.k_max();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in i..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(self.component(i), self.component(j)) - target).abs());
            }
        }
        worst
    }

    pub fn cumulative_variance(&self, k: usize) -> f64 {
        self.variance_ratios[..k.min(self.k_max())].iter().sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(BASIS_MAGIC);
        out.extend_from_slice(&BASIS_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.k_max() as u32).to_le_bytes());
        for v in self.mean.iter().chain(self.components.iter()).chain(&self.variances) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != BASIS_MAGIC {
            return Err(Error::Format("not a basis file (bad magic)".into()));
        }
        let word = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]) as usize;
        if word(4) != BASIS_VERSION as usize {
            return Err(Error::Format(format!("unsupported basis version {}", word(4))));
        }
        let (dim, k) = (word(8), word(12));
        let n = dim + k * dim + k;
        if bytes.len() != 16 + 8 * n {
            return Err(Error::Format(format!(
                "basis payload has {} bytes, header implies {}",
                bytes.len() - 16,
                8 * n
            )));
        }
        let vals: Vec<f64> = bytes[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mean = Array1::from(vals[..dim].to_vec());
        let components = Array2::from_shape_vec((k, dim), vals[dim..dim + k * dim].to_vec()).expect("shape");
        PcaBasis::from_parts(mean, components, vals[dim + k * dim..].to_vec())
    }

    /// Writes the binary basis to `path` and a JSON summary next to it
    /// (`<path>.json`).
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))?;
        let sidecar = sidecar_path(path);
        let summary = BasisSummary {
            dim: self.dim(),
            k_max: self.k_max(),
            variances: self.variances.clone(),
            variance_ratios: self.variance_ratios.clone(),
        };
        let json = serde_json::to_string_pretty(&summary)?;
        fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        PcaBasis::from_bytes(&bytes)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BasisSummary {
    pub dim: usize,
    pub k_max: usize,
    pub variances: Vec<f64>,
    pub variance_ratios: Vec<f64>,
}

/// PCA of an aggregate matrix's rows.
pub fn fit_pca(m: &AggregateMatrix) -> Result<PcaBasis> {
    fit_pca_rows(m.rows.view())
}

/// PCA of arbitrary rows: centered, SVD-based, with the largest-magnitude
/// entry of each direction made positive.
pub fn fit_pca_rows(rows: ArrayView2<'_, f64>) -> Result<PcaBasis> {
    let (r, dim) = rows.dim();
    if r < 2 {
        return Err(Error::Degenerate(format!("PCA needs at least 2 rows, got {r}")));
    }
    let rows = rows.as_standard_layout();
    let mut mean = pairwise_sum_rows(r, dim, &|i| rows.row(i).to_slice().unwrap());
    mean.iter_mut().for_each(|v| *v /= r as f64);
    let mean = Array1::from(mean);
    let centered = &rows - &mean.view().insert_axis(Axis(0));
    if centered.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("all rows are identical".into()));
    }

    let (sigma, v_t) = thin_svd(centered.view(), true)?;
    let v_t = v_t.expect("requested V^T");

    let k_max = (r - 1).min(dim);
    let denom = (r - 1) as f64;
    let total: f64 = sigma.iter().map(|s| s * s / denom).sum();
    let mut components = Array2::zeros((k_max, dim));
    let mut variances = Vec::with_capacity(k_max);
    for (i, &s) in sigma.iter().take(k_max).enumerate() {
        let mut v = v_t.row(i).to_vec();
        normalize_sign(&mut v);
        components.row_mut(i).assign(&Array1::from(v));
        variances.push(s * s / denom);
    }
    // Keep the ordering invariant exact even if rounding produced a tiny
    // inversion between (near-)equal singular values.
    for i in 1..variances.len() {
        if variances[i] > variances[i - 1] {
            variances[i] = variances[i - 1];
        }
    }
    let variance_ratios = variances.iter().map(|v| v / total).collect();
    let mut basis = PcaBasis {
        mean,
        components,
        variances,
        variance_ratios,
    };
    if basis.orthonormality_error() > ORTHONORMAL_TOL {
        reorthonormalize(&mut basis.components);
    }
    Ok(basis)
}

/// Thin SVD of `m`, computed sequentially so results never depend on the
/// thread count. Returns the singular values in non-increasing order and,
/// if requested, the matching right singular vectors as rows.
pub(crate) fn thin_svd(m: ArrayView2<'_, f64>, want_v: bool) -> Result<(Vec<f64>, Option<Array2<f64>>)> {
    let (r, c) = m.dim();
    let size = r.min(c);
    let a = Mat::<f64>::from_fn(r, c, |i, j| m[[i, j]]);
    let mut s = Diag::<f64>::zeros(size);
    let mut v = Mat::<f64>::zeros(c, size);
    let compute_v = if want_v { ComputeSvdVectors::Thin } else { ComputeSvdVectors::No };
    let mut mem = MemBuffer::new(svd_scratch::<f64>(r, c, ComputeSvdVectors::No, compute_v, Par::Seq, Default::default()));
    svd(
        a.as_ref(),
        s.as_mut(),
        None,
        want_v.then(|| v.as_mut()),
        Par::Seq,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|_| Error::Degenerate("SVD did not converge".into()))?;
    let sigma: Vec<f64> = (0..size).map(|i| s[i]).collect();
    let v_t = want_v.then(|| Array2::from_shape_fn((size, c), |(i, j)| v[(j, i)]));
    Ok((sigma, v_t))
}

/// Flips `v` so that its largest-magnitude entry (lowest index on ties) is
/// positive.
pub fn normalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Modified Gram-Schmidt over the rows, in place.
fn reorthonormalize(rows: &mut Array2<f64>) {
    for i in 0..rows.nrows() {
        for j in 0..i {
            let prev = rows.row(j).to_owned();
            let proj = rows.row(i).dot(&prev);
            rows.row_mut(i).scaled_add(-proj, &prev);
        }
        let norm = rows.row(i).dot(&rows.row(i)).sqrt();
        if norm > 0.0 {
            rows.row_mut(i).mapv_inplace(|x| x / norm);
        }
    }
}

/// Smallest `k >= 1` whose cumulative variance ratio reaches `tau` of the
/// total.
pub fn num_components_for_variance(b: &PcaBasis, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidArgument(format!("tau must lie in (0, 1], got {tau}")));
    }
    let total: f64 = b.variance_ratios.iter().sum();
    let target = tau * total;
    let mut cum = 0.0;
    for (i, r) in b.variance_ratios.iter().enumerate() {
        cum += r;
        if cum >= target {
            return Ok(i + 1);
        }
    }
    Ok(b.k_max().max(1))
}

/// Coordinates of `(row - mean)` along the selected components.
pub fn project_coordinates(b: &PcaBasis, rows: ArrayView2<'_, f64>, dims: &[usize]) -> Result<Array2<f64>> {
    if rows.ncols() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            found: rows.ncols(),
        });
    }
    if let Some(&bad) = dims.iter().find(|&&d| d >= b.k_max()) {
        return Err(Error::InvalidArgument(format!(
            "component index {bad} out of range (k_max = {})",
            b.k_max()
        )));
    }
    let mut out = Array2::zeros((rows.nrows(), dims.len()));
    for (r, row) in rows.rows().into_iter().enumerate() {
        let centered: Vec<f64> = row.iter().zip(&b.mean).map(|(x, m)| x - m).collect();
        for (j, &d) in dims.iter().enumerate() {
            out[(r, j)] = dot(&centered, b.component(d));
        }
    }
    Ok(out)
}
