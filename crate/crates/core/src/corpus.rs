//! On-disk corpus formats and the labeled frame table.
//!
//! A corpus is a manifest of per-utterance feature files plus a table of
//! time-aligned phone segments. [`build_frame_table`] joins the two into a
//! [`FrameTable`]: one row per retained frame, labeled with its speaker,
//! utterance and phone.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Magic bytes opening every feature file.
pub const FEATURE_MAGIC: &[u8; 4] = b"SSFV";
pub const FEATURE_VERSION: u32 = 1;
const FEATURE_HEADER_LEN: usize = 16;

/// Default frame period in seconds.
pub const DEFAULT_FRAME_PERIOD: f64 = 0.010;

/// Phone labels dropped from analysis unless overridden.
pub const DEFAULT_EXCLUDED_PHONES: [&str; 2] = ["SIL", "SPN"];

pub fn default_excluded_phones() -> BTreeSet<String> {
    DEFAULT_EXCLUDED_PHONES.iter().map(|s| s.to_string()).collect()
}

/// Frame-level representations of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub utterance_id: String,
    /// `num_frames x dim`, row-major.
    pub frames: Array2<f32>,
}

impl FeatureFile {
    pub fn new(utterance_id: impl Into<String>, frames: Array2<f32>) -> Result<Self> {
        let f = FeatureFile {
            utterance_id: utterance_id.into(),
            frames,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }

    pub fn num_frames(&self) -> usize {
        self.frames.nrows()
    }

    fn validate(&self) -> Result<()> {
        if self.num_frames() == 0 {
            return Err(Error::Data(format!("{}: zero frames", self.utterance_id)));
        }
        if self.dim() == 0 {
            return Err(Error::Data(format!("{}: zero dimension", self.utterance_id)));
        }
        if self.frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("{}: non-finite value", self.utterance_id)));
        }
        Ok(())
    }

    /// Serializes to the binary layout: magic, version, dim, num_frames, then
    /// `num_frames * dim` little-endian f32 values row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FEATURE_HEADER_LEN + self.frames.len() * 4);
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_frames() as u32).to_le_bytes());
        for v in self.frames.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses the binary layout. `path` is only used in error messages; the
    /// utterance id is taken from the file stem.
    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Self> {
        let (dim, num_frames) = parse_feature_header(path, bytes)?;
        let expected = FEATURE_HEADER_LEN + dim * num_frames * 4;
        if bytes.len() != expected {
            return Err(Error::Corruption {
                path: path.to_path_buf(),
                reason: format!("expected {expected} bytes, found {}", bytes.len()),
            });
        }
        let values: Vec<f32> = bytes[FEATURE_HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let frames = Array2::from_shape_vec((num_frames, dim), values)
            .expect("payload length checked against header");
        let utterance_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        FeatureFile::new(utterance_id, frames)
    }
}

fn parse_feature_header(path: &Path, bytes: &[u8]) -> Result<(usize, usize)> {
    if bytes.len() < FEATURE_HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != FEATURE_MAGIC {
            return Err(Error::Format(format!("{}: bad magic", path.display())));
        }
        return Err(Error::Corruption {
            path: path.to_path_buf(),
            reason: "truncated header".into(),
        });
    }
    if &bytes[..4] != FEATURE_MAGIC {
        return Err(Error::Format(format!("{}: bad magic", path.display())));
    }
    let word = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    let version = word(4);
    if version != FEATURE_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let dim = word(8) as usize;
    let num_frames = word(12) as usize;
    if num_frames == 0 || dim == 0 {
        return Err(Error::Data(format!(
            "{}: header declares {num_frames} frames of dimension {dim}",
            path.display()
        )));
    }
    Ok((dim, num_frames))
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureFile::from_bytes(path, &bytes)
}

/// Reads only the header, returning `(dim, num_frames)`.
pub fn read_feature_header(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    use std::io::Read;
    let path = path.as_ref();
    let mut buf = [0u8; FEATURE_HEADER_LEN];
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
    parse_feature_header(path, &buf[..n])
}

pub fn write_feature_file(path: impl AsRef<Path>, f: &FeatureFile) -> Result<()> {
    let path = path.as_ref();
    f.validate()?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&f.to_bytes()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub utterance_id: String,
    pub speaker_id: String,
    pub feature_path: PathBuf,
    pub num_frames: usize,
}

/// Utterance list of a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_HEADER: [&str; 4] = ["utterance_id", "speaker_id", "feature_path", "num_frames"];
pub const ALIGNMENT_HEADER: [&str; 4] = ["utterance_id", "start_s", "end_s", "phone"];

impl Manifest {
    /// Parses the TSV form. Relative feature paths are resolved against
    /// `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, header)) if header.split('\t').eq(MANIFEST_HEADER.iter().copied()) => {}
            _ => {
                return Err(Error::Format(format!(
                    "manifest must start with header `{}`",
                    MANIFEST_HEADER.join("\t")
                )))
            }
        }
        let mut entries = Vec::new();
        for (lineno, line) in lines {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::Format(format!(
                    "manifest line {}: expected 4 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let num_frames = cols[3].trim().parse().map_err(|_| {
                Error::Format(format!("manifest line {}: bad num_frames {:?}", lineno + 1, cols[3]))
            })?;
            let rel = PathBuf::from(cols[2]);
            let feature_path = if rel.is_absolute() { rel } else { base_dir.join(rel) };
            entries.push(ManifestEntry {
                utterance_id: cols[0].to_string(),
                speaker_id: cols[1].to_string(),
                feature_path,
                num_frames,
            });
        }
        let m = Manifest { entries };
        m.check_unique()?;
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// TSV form with feature paths written relative to `base_dir` when possible.
    pub fn to_tsv(&self, base_dir: &Path) -> String {
        let mut out = MANIFEST_HEADER.join("\t");
        out.push('\n');
        for e in &self.entries {
            let p = e.feature_path.strip_prefix(base_dir).unwrap_or(&e.feature_path);
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.utterance_id,
                e.speaker_id,
                p.display(),
                e.num_frames
            ));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = self.to_tsv(path.parent().unwrap_or(Path::new(".")));
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.utterance_id.as_str()) {
                return Err(Error::Data(format!("duplicate utterance id {}", e.utterance_id)));
            }
        }
        Ok(())
    }

    /// Checks that every referenced file exists and its header agrees with
    /// the declared frame count.
    pub fn validate(&self) -> Result<()> {
        self.check_unique()?;
        self.entries.par_iter().try_for_each(|e| {
            let (_, n) = read_feature_header(&e.feature_path)?;
            if n != e.num_frames {
                return Err(Error::Data(format!(
                    "{}: manifest declares {} frames, file has {n}",
                    e.utterance_id, e.num_frames
                )));
            }
            Ok(())
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub phone: String,
}

/// Phone segments per utterance, ordered by start time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentTable {
    utterances: BTreeMap<String, Vec<Segment>>,
}

impl AlignmentTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an utterance's segments, checking ordering and positivity.
    pub fn insert(&mut self, utterance_id: impl Into<String>, segments: Vec<Segment>) -> Result<()> {
        let utterance_id = utterance_id.into();
        validate_segments(&utterance_id, &segments)?;
        self.utterances.insert(utterance_id, segments);
        Ok(())
    }

    pub fn get(&self, utterance_id: &str) -> Option<&[Segment]> {
        self.utterances.get(utterance_id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Segment])> {
        self.utterances.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Parses the TSV form; a leading header row is optional.
    pub fn parse(text: &str) -> Result<Self> {
        let mut grouped: BTreeMap<String, Vec<Segment>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if lineno == 0 && cols.first() == Some(&ALIGNMENT_HEADER[0]) {
                continue;
            }
            if cols.len() != 4 {
                return Err(Error::Format(format!(
                    "alignment line {}: expected 4 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Format(format!("alignment line {}: bad time {s:?}", lineno + 1)))
            };
            grouped.entry(cols[0].to_string()).or_default().push(Segment {
                start: num(cols[1])?,
                end: num(cols[2])?,
                phone: cols[3].trim().to_string(),
            });
        }
        let mut table = AlignmentTable::new();
        for (utt, segs) in grouped {
            table.insert(utt, segs)?;
        }
        Ok(table)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        AlignmentTable::parse(&text)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = ALIGNMENT_HEADER.join("\t");
        out.push('\n');
        for (utt, segs) in &self.utterances {
            for s in segs {
                out.push_str(&format!("{utt}\t{}\t{}\t{}\n", s.start, s.end, s.phone));
            }
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

fn validate_segments(utt: &str, segments: &[Segment]) -> Result<()> {
    for (i, s) in segments.iter().enumerate() {
        if s.end.partial_cmp(&s.start) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Data(format!(
                "{utt}: segment {i} has end {} <= start {}",
                s.end, s.start
            )));
        }
        if i > 0 && s.start < segments[i - 1].end {
            return Err(Error::Data(format!("{utt}: segment {i} overlaps its predecessor")));
        }
    }
    Ok(())
}

/// Index of the segment containing each frame midpoint, using half-open
/// `[start, end)` intervals.
pub(crate) fn segment_of_frames(num_frames: usize, segments: &[Segment], frame_period: f64) -> Vec<Option<usize>> {
    (0..num_frames)
        .map(|i| {
            let t = (i as f64 + 0.5) * frame_period;
            let idx = segments.partition_point(|s| s.start <= t);
            idx.checked_sub(1).filter(|&j| t < segments[j].end)
        })
        .collect()
}

/// Phone label for each frame of `f`, or `None` when the frame's midpoint
/// falls outside every segment or inside an excluded one.
pub fn label_frames(
    f: &FeatureFile,
    align: &AlignmentTable,
    excluded_phones: &BTreeSet<String>,
    frame_period: f64,
) -> Result<Vec<Option<String>>> {
    let segments = align
        .get(&f.utterance_id)
        .ok_or_else(|| Error::Labeling(format!("no alignment for utterance {}", f.utterance_id)))?;
    Ok(segment_of_frames(f.num_frames(), segments, frame_period)
        .into_iter()
        .map(|s| {
            s.map(|j| &segments[j].phone)
                .filter(|p| !excluded_phones.contains(*p))
                .cloned()
        })
        .collect())
}

/// All retained frames of a corpus with their labels.
///
/// Labels are stored as indices into the sorted `speaker_set` / `phone_set`
/// and into `utterances` (manifest order).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTable {
    frames: Array2<f64>,
    speaker_of: Vec<usize>,
    phone_of: Vec<usize>,
    utterance_of: Vec<usize>,
    frame_index: Vec<usize>,
    speaker_set: Vec<String>,
    phone_set: Vec<String>,
    utterances: Vec<String>,
    utterance_speaker: Vec<usize>,
}

/// One labeled frame, used to assemble a [`FrameTable`].
#[derive(Debug, Clone)]
pub struct LabeledFrame<'a> {
    pub speaker: &'a str,
    pub utterance: &'a str,
    pub phone: &'a str,
    /// Position of the frame within its utterance.
    pub frame_index: usize,
    pub values: ArrayView1<'a, f64>,
}

impl FrameTable {
    /// Assembles a table from frames in the order given.
    pub fn from_frames<'a>(dim: usize, frames: impl IntoIterator<Item = LabeledFrame<'a>>) -> Result<Self> {
        let frames: Vec<LabeledFrame<'a>> = frames.into_iter().collect();
        if frames.is_empty() {
            return Err(Error::Degenerate("frame table has no frames".into()));
        }
        let speaker_set: Vec<String> = sorted_unique(frames.iter().map(|f| f.speaker));
        let phone_set: Vec<String> = sorted_unique(frames.iter().map(|f| f.phone));
        let mut utterances: Vec<String> = Vec::new();
        let mut utt_index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut utterance_speaker = Vec::new();
        let mut data = Vec::with_capacity(frames.len() * dim);
        let mut speaker_of = Vec::with_capacity(frames.len());
        let mut phone_of = Vec::with_capacity(frames.len());
        let mut utterance_of = Vec::with_capacity(frames.len());
        let mut frame_index = Vec::with_capacity(frames.len());
        for f in &frames {
            if f.values.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: f.values.len(),
                });
            }
            let spk = speaker_set.binary_search_by(|s| s.as_str().cmp(f.speaker)).unwrap();
            let u = *utt_index.entry(f.utterance).or_insert_with(|| {
                utterances.push(f.utterance.to_string());
                utterance_speaker.push(spk);
                utterances.len() - 1
            });
            if utterance_speaker[u] != spk {
                return Err(Error::Data(format!("utterance {} has frames from two speakers", f.utterance)));
            }
            speaker_of.push(spk);
            phone_of.push(phone_set.binary_search_by(|p| p.as_str().cmp(f.phone)).unwrap());
            utterance_of.push(u);
            frame_index.push(f.frame_index);
            data.extend(f.values.iter().copied());
        }
        let frames = Array2::from_shape_vec((frames.len(), dim), data).expect("shape checked");
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite frame value".into()));
        }
        Ok(FrameTable {
            frames,
            speaker_of,
            phone_of,
            utterance_of,
            frame_index,
            speaker_set,
            phone_set,
            utterances,
            utterance_speaker,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }

    pub fn frames(&self) -> ArrayView2<'_, f64> {
        self.frames.view()
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        self.frames
            .row(i)
            .to_slice()
            .expect("frame table rows are contiguous")
    }

    pub fn speaker_of(&self) -> &[usize] {
        &self.speaker_of
    }

    pub fn phone_of(&self) -> &[usize] {
        &self.phone_of
    }

    pub fn utterance_of(&self) -> &[usize] {
        &self.utterance_of
    }

    pub fn frame_index(&self) -> &[usize] {
        &self.frame_index
    }

    pub fn speaker_set(&self) -> &[String] {
        &self.speaker_set
    }

    pub fn phone_set(&self) -> &[String] {
        &self.phone_set
    }

    pub fn utterances(&self) -> &[String] {
        &self.utterances
    }

    /// Speaker index of each utterance.
    pub fn utterance_speaker(&self) -> &[usize] {
        &self.utterance_speaker
    }

    pub fn speaker_label(&self, i: usize) -> &str {
        &self.speaker_set[self.speaker_of[i]]
    }

    pub fn phone_label(&self, i: usize) -> &str {
        &self.phone_set[self.phone_of[i]]
    }

    /// Same labels, new frame values. Used by the normalizers.
    pub fn with_frames(&self, frames: Array2<f64>) -> Result<Self> {
        if frames.nrows() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: frames.nrows(),
            });
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite frame value".into()));
        }
        Ok(FrameTable {
            frames: frames.as_standard_layout().into_owned(),
            ..self.clone_labels()
        })
    }

    fn clone_labels(&self) -> Self {
        FrameTable {
            frames: Array2::zeros((0, 0)),
            speaker_of: self.speaker_of.clone(),
            phone_of: self.phone_of.clone(),
            utterance_of: self.utterance_of.clone(),
            frame_index: self.frame_index.clone(),
            speaker_set: self.speaker_set.clone(),
            phone_set: self.phone_set.clone(),
            utterances: self.utterances.clone(),
            utterance_speaker: self.utterance_speaker.clone(),
        }
    }

    /// Row indices grouped by utterance, each group in table order.
    pub fn rows_by_utterance(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.utterances.len()];
        for (i, &u) in self.utterance_of.iter().enumerate() {
            groups[u].push(i);
        }
        groups
    }

    /// Splits the table back into one feature file per utterance. Dropped
    /// frames are absent, so frame counts may be smaller than the source.
    pub fn to_feature_files(&self) -> Result<Vec<FeatureFile>> {
        self.rows_by_utterance()
            .into_iter()
            .enumerate()
            .map(|(u, rows)| {
                let sub = self.frames.select(Axis(0), &rows).mapv(|v| v as f32);
                FeatureFile::new(self.utterances[u].clone(), sub)
            })
            .collect()
    }
}

fn sorted_unique<'a>(it: impl Iterator<Item = &'a str>) -> Vec<String> {
    it.collect::<BTreeSet<_>>().into_iter().map(str::to_string).collect()
}

/// Options shared by every corpus-loading entry point.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusOptions {
    pub excluded_phones: BTreeSet<String>,
    pub frame_period: f64,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            excluded_phones: default_excluded_phones(),
            frame_period: DEFAULT_FRAME_PERIOD,
        }
    }
}

/// Reads every feature file of the manifest, labels frames, and concatenates
/// the retained ones in manifest order.
pub fn build_frame_table(manifest: &Manifest, alignments: &AlignmentTable, opts: &CorpusOptions) -> Result<FrameTable> {
    let files: Vec<FeatureFile> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let mut f = read_feature_file(&e.feature_path)?;
            if f.num_frames() != e.num_frames {
                return Err(Error::Data(format!(
                    "{}: manifest declares {} frames, file has {}",
                    e.utterance_id,
                    e.num_frames,
                    f.num_frames()
                )));
            }
            f.utterance_id = e.utterance_id.clone();
            Ok(f)
        })
        .collect::<Result<_>>()?;
    let speakers: Vec<&str> = manifest.entries.iter().map(|e| e.speaker_id.as_str()).collect();
    frame_table_from_features(&files, &speakers, alignments, opts)
}

/// In-memory variant of [`build_frame_table`]; `speakers[i]` is the speaker
/// of `files[i]`.
pub fn frame_table_from_features(
    files: &[FeatureFile],
    speakers: &[&str],
    alignments: &AlignmentTable,
    opts: &CorpusOptions,
) -> Result<FrameTable> {
    let dim = files
        .first()
        .map(FeatureFile::dim)
        .ok_or_else(|| Error::Degenerate("empty manifest".into()))?;
    let mut converted = Vec::with_capacity(files.len());
    for f in files {
        if f.dim() != dim {
            return Err(Error::Data(format!(
                "{}: dimension {} differs from {dim}",
                f.utterance_id,
                f.dim()
            )));
        }
        let labels = label_frames(f, alignments, &opts.excluded_phones, opts.frame_period)?;
        converted.push((f.frames.mapv(f64::from), labels));
    }
    let labeled = files
        .iter()
        .zip(speakers)
        .zip(&converted)
        .flat_map(|((f, spk), (values, labels))| {
            labels.iter().enumerate().filter_map(move |(i, l)| {
                l.as_deref().map(|phone| LabeledFrame {
                    speaker: spk,
                    utterance: &f.utterance_id,
                    phone,
                    frame_index: i,
                    values: values.row(i),
                })
            })
        });
    FrameTable::from_frames(dim, labeled).map_err(|e| match e {
        Error::Degenerate(_) => Error::Degenerate("every frame was dropped; frame table is empty".into()),
        other => other,
    })
}

/// Writes a feature file per utterance plus the manifest into `dir`.
pub fn write_corpus(dir: &Path, files: &[FeatureFile], speakers: &[&str]) -> Result<Manifest> {
    let feat_dir = dir.join("features");
    fs::create_dir_all(&feat_dir).map_err(|e| Error::io(&feat_dir, e))?;
    let entries = files
        .par_iter()
        .zip(speakers)
        .map(|(f, spk)| {
            let path = feat_dir.join(format!("{}.ssfv", f.utterance_id));
            write_feature_file(&path, f)?;
            Ok(ManifestEntry {
                utterance_id: f.utterance_id.clone(),
                speaker_id: spk.to_string(),
                feature_path: path,
                num_frames: f.num_frames(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest { entries };
    manifest.write(dir.join("manifest.tsv"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn seg(start: f64, end: f64, phone: &str) -> Segment {
        Segment {
            start,
            end,
            phone: phone.into(),
        }
    }

    fn file(id: &str, frames: Array2<f32>) -> FeatureFile {
        FeatureFile::new(id, frames).unwrap()
    }

    #[test]
    fn hand_built_bytes_decode() {
        // Bytes laid out by hand: header then six f32 values.
        let mut bytes = b"SSFV".to_vec();
        for w in [1u32, 3, 2] {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let f = FeatureFile::from_bytes(Path::new("u1.ssfv"), &bytes).unwrap();
        assert_eq!(f.frames, array![[1.0f32, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert_eq!(f.utterance_id, "u1");
        assert_eq!(f.to_bytes(), bytes);
    }

    #[test]
    fn single_value_file_has_one_payload_value() {
        let f = file("x", array![[0.0f32]]);
        assert_eq!(f.to_bytes().len(), FEATURE_HEADER_LEN + 4);
    }

    #[test]
    fn rejects_bad_inputs() {
        let good = file("u", array![[1.0f32, 2.0]]).to_bytes();
        let p = Path::new("u.ssfv");

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(FeatureFile::from_bytes(p, &bad_magic), Err(Error::Format(_))));

        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert!(matches!(FeatureFile::from_bytes(p, &bad_version), Err(Error::Format(_))));

        assert!(matches!(
            FeatureFile::from_bytes(p, &good[..good.len() - 1]),
            Err(Error::Corruption { .. })
        ));

        let mut zero_frames = good[..FEATURE_HEADER_LEN].to_vec();
        zero_frames[12..16].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(FeatureFile::from_bytes(p, &zero_frames), Err(Error::Data(_))));

        let mut nan = good.clone();
        nan[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(FeatureFile::from_bytes(p, &nan), Err(Error::Data(_))));
    }

    #[test]
    fn midpoint_labeling() {
        let mut align = AlignmentTable::new();
        align.insert("a", vec![seg(0.0, 0.05, "AA")]).unwrap();
        align
            .insert("b", vec![seg(0.0, 0.02, "SIL"), seg(0.02, 0.04, "B")])
            .unwrap();
        let excluded = default_excluded_phones();

        let fa = file("a", Array2::zeros((5, 2)));
        let labels = label_frames(&fa, &align, &excluded, 0.01).unwrap();
        assert!(labels.iter().all(|l| l.as_deref() == Some("AA")));

        let fb = file("b", Array2::zeros((4, 2)));
        let labels = label_frames(&fb, &align, &excluded, 0.01).unwrap();
        assert_eq!(labels, vec![None, None, Some("B".into()), Some("B".into())]);

        let missing = file("c", Array2::zeros((1, 2)));
        assert!(matches!(label_frames(&missing, &align, &excluded, 0.01), Err(Error::Labeling(_))));
    }

    #[test]
    fn boundary_midpoint_goes_to_later_interval() {
        let mut align = AlignmentTable::new();
        align.insert("a", vec![seg(0.0, 0.02, "A"), seg(0.02, 0.04, "B")]).unwrap();
        // 40 ms frames: the first midpoint is exactly 0.02.
        let f = file("a", Array2::zeros((1, 1)));
        let labels = label_frames(&f, &align, &BTreeSet::new(), 0.04).unwrap();
        assert_eq!(labels, vec![Some("B".into())]);
    }

    #[test]
    fn alignment_validation() {
        let mut align = AlignmentTable::new();
        assert!(align.insert("a", vec![seg(0.1, 0.1, "A")]).is_err());
        assert!(align.insert("a", vec![seg(0.0, 0.2, "A"), seg(0.1, 0.3, "B")]).is_err());
        let parsed = AlignmentTable::parse("utterance_id\tstart_s\tend_s\tphone\nu\t0\t0.5\tAA\nu\t0.5\t1\tB\n").unwrap();
        assert_eq!(parsed.get("u").unwrap().len(), 2);
        assert_eq!(AlignmentTable::parse(&parsed.to_tsv()).unwrap(), parsed);
    }

    #[test]
    fn frame_table_concatenates_in_order() {
        let mut align = AlignmentTable::new();
        align
            .insert("u1", vec![seg(0.0, 0.03, "B"), seg(0.03, 0.04, "SIL")])
            .unwrap();
        align.insert("u2", vec![seg(0.0, 0.03, "A")]).unwrap();
        let files = vec![
            file("u1", Array2::from_shape_fn((4, 2), |(i, j)| (i * 2 + j) as f32)),
            file("u2", Array2::from_shape_fn((3, 2), |(i, _)| -(i as f32))),
        ];
        let t = frame_table_from_features(&files, &["s2", "s1"], &align, &CorpusOptions::default()).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(t.utterance_of(), &[0, 0, 0, 1, 1, 1]);
        assert_eq!(t.speaker_set(), &["s1".to_string(), "s2".into()]);
        assert_eq!(t.phone_set(), &["A".to_string(), "B".into()]);
        assert_eq!(t.speaker_label(0), "s2");
        assert_eq!(t.phone_label(5), "A");
        assert_eq!(t.frame(2), &[4.0, 5.0]);
    }

    #[test]
    fn all_silence_is_an_error() {
        let mut align = AlignmentTable::new();
        align.insert("u", vec![seg(0.0, 1.0, "SIL")]).unwrap();
        let files = vec![file("u", Array2::zeros((3, 2)))];
        let err = frame_table_from_features(&files, &["s"], &align, &CorpusOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn dimension_mismatch_across_files() {
        let mut align = AlignmentTable::new();
        align.insert("a", vec![seg(0.0, 1.0, "A")]).unwrap();
        align.insert("b", vec![seg(0.0, 1.0, "A")]).unwrap();
        let files = vec![file("a", Array2::zeros((2, 2))), file("b", Array2::zeros((2, 3)))];
        let err = frame_table_from_features(&files, &["s", "s"], &align, &CorpusOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn manifest_round_trip_and_header() {
        let base = Path::new("/data");
        let text = "utterance_id\tspeaker_id\tfeature_path\tnum_frames\nu1\ts1\tf/u1.ssfv\t10\n";
        let m = Manifest::parse(text, base).unwrap();
        assert_eq!(m.entries[0].feature_path, PathBuf::from("/data/f/u1.ssfv"));
        assert_eq!(m.to_tsv(base), text);
        assert!(Manifest::parse("u1\ts1\tx\t1\n", base).is_err());
        assert!(Manifest::parse(&format!("{text}u1\ts2\ty\t3\n"), base).is_err());
    }
}
