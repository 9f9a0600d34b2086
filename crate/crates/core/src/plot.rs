//! CSV exports for external plotting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::aggregate::{aggregate_by_phone, aggregate_by_speaker, aggregate_joint, AggregateMatrix};
use crate::corpus::FrameTable;
use crate::error::{Error, Result};
use crate::pca::{fit_pca, project_coordinates, PcaBasis};
use crate::pipeline::{RunReport, SweepPoint};
use crate::subspace::{direction_similarity, SimilarityMatrix};

pub const SIMILARITY_CSV: &str = "similarity.csv";
pub const PROJECTION_CSV: &str = "joint_projection.csv";
pub const SWEEP_CSV: &str = "k_sweep.csv";

/// Heat-map grid: one row per direction of the first basis, one column per
/// direction of the second. Values use shortest round-trip formatting, so
/// parsing them back gives the matrix entries exactly.
pub fn similarity_csv(s: &SimilarityMatrix) -> String {
    let (a, b) = &s.basis_labels;
    let mut out = format!("{a}\\{b}");
    for j in 0..s.values.ncols() {
        write!(out, ",{b}{j}").unwrap();
    }
    out.push('\n');
    for (i, row) in s.values.rows().into_iter().enumerate() {
        write!(out, "{a}{i}").unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Scatter data: one line per (row of `m`, selected dim).
pub fn projection_csv(m: &AggregateMatrix, basis: &PcaBasis, dims: &[usize]) -> Result<String> {
    let coords = project_coordinates(basis, m.rows.view(), dims)?;
    let mut out = String::from("speaker,phone,dim,coordinate\n");
    for (r, key) in m.row_keys.iter().enumerate() {
        for (c, &d) in dims.iter().enumerate() {
            writeln!(
                out,
                "{},{},{d},{}",
                key.speaker().unwrap_or(""),
                key.phone().unwrap_or(""),
                coords[[r, c]]
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// One line per swept `k`.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("k,cumulative_variance,speaker_error,abx_error\n");
    for p in points {
        let spk = p.speaker_error.map(|e| e.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{spk},{}", p.k, p.cumulative_variance, p.abx_across).unwrap();
    }
    out
}

/// Sweep CSV from a run report; fails if the run did not sweep.
pub fn sweep_csv_from_report(report: &RunReport) -> Result<String> {
    report
        .sweep
        .as_deref()
        .map(sweep_csv)
        .ok_or_else(|| Error::InvalidArgument("report has no k sweep; run the pipeline in sweep mode".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    /// Leading speaker directions in the heat map (clamped to what exists).
    pub speaker_directions: usize,
    /// Joint-basis dims for the projection scatter.
    pub projection_dims: Vec<usize>,
    /// Minimum frames per (speaker, phone) cell.
    pub min_count: usize,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            speaker_directions: 20,
            projection_dims: vec![0, 1],
            min_count: 1,
        }
    }
}

/// Writes the heat map and projection CSVs for `t`, plus the sweep CSV when
/// `report` is given. Returns the written paths.
pub fn emit_plot_data(dir: &Path, t: &FrameTable, report: Option<&RunReport>, opts: &PlotOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let spk = fit_pca(&aggregate_by_speaker(t)?)?;
    let phn = fit_pca(&aggregate_by_phone(t)?)?;
    let joint_m = aggregate_joint(t, opts.min_count)?;
    let joint = fit_pca(&joint_m)?;
    let sim = direction_similarity(
        &spk,
        &phn,
        opts.speaker_directions.min(spk.k_max()),
        phn.k_max(),
        ("speaker", "phone"),
    )?;
    let mut files = vec![
        (SIMILARITY_CSV, similarity_csv(&sim)),
        (PROJECTION_CSV, projection_csv(&joint_m, &joint, &opts.projection_dims)?),
    ];
    if let Some(r) = report {
        files.push((SWEEP_CSV, sweep_csv_from_report(r)?));
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
