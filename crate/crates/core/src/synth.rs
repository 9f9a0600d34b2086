//! Synthetic corpora with known, mutually orthogonal speaker and phone
//! subspaces.
//!
//! Every frame is `mean + speaker_offset + phone_offset + noise`, with the
//! speaker offsets confined to one random subspace and the phone offsets to
//! another, orthogonal one. The subspaces, the mean and the phone offsets
//! are drawn from `world_seed`; speakers and noise from `seed`. Corpora that
//! share a `world_seed` but not a `seed` therefore model different speakers
//! of the same language.
//!
//! Each utterance alternates one context phone with every other phone
//! (`c q0 c q1 c ...`), so all (speaker, phone) cells are populated and
//! tokens `c-q-c` share contexts across centers.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    frame_table_from_features, write_corpus, AlignmentTable, CorpusOptions, FeatureFile, FrameTable, Manifest,
    Segment, DEFAULT_FRAME_PERIOD,
};
use crate::error::{Error, Result};
use crate::pca::PcaBasis;

pub const SILENCE: &str = "SIL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub dim: usize,
    pub speaker_dims: usize,
    pub phone_dims: usize,
    pub n_speakers: usize,
    pub n_phones: usize,
    /// Frames in every phone segment.
    pub frames_per_segment: usize,
    pub noise_sigma: f64,
    pub speaker_scale: f64,
    pub phone_scale: f64,
    /// Scale of the global mean vector.
    pub mean_scale: f64,
    pub utterances_per_speaker: usize,
    pub segments_per_utterance: usize,
    /// Number of distinct context phones (phones `0..n`); each utterance
    /// uses every one of them for an equal share of its centers.
    pub context_phones: usize,
    /// Adds one silence segment at each end of every utterance.
    pub edge_silence: bool,
    pub speaker_prefix: String,
    pub seed: u64,
    pub world_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dim: 64,
            speaker_dims: 5,
            phone_dims: 8,
            n_speakers: 20,
            n_phones: 10,
            frames_per_segment: 4,
            noise_sigma: 0.1,
            speaker_scale: 1.0,
            phone_scale: 3.0,
            mean_scale: 1.0,
            utterances_per_speaker: 4,
            segments_per_utterance: 17,
            context_phones: 2,
            edge_silence: true,
            speaker_prefix: "spk".into(),
            seed: 1,
            world_seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.speaker_dims + self.phone_dims > self.dim {
            return bad(format!(
                "speaker_dims + phone_dims = {} exceeds dim = {}",
                self.speaker_dims + self.phone_dims,
                self.dim
            ));
        }
        if self.n_speakers < 2 || self.n_phones < 2 {
            return bad("need at least 2 speakers and 2 phones".into());
        }
        if self.utterances_per_speaker < 2 {
            return bad("need at least 2 utterances per speaker".into());
        }
        if self.frames_per_segment == 0 || self.segments_per_utterance == 0 {
            return bad("segments and frames per segment must be positive".into());
        }
        if self.context_phones == 0 || self.context_phones > self.n_phones {
            return bad(format!("context_phones must lie in 1..={}", self.n_phones));
        }
        for (name, v) in [
            ("noise_sigma", self.noise_sigma),
            ("speaker_scale", self.speaker_scale),
            ("phone_scale", self.phone_scale),
            ("mean_scale", self.mean_scale),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn phone_name(&self, p: usize) -> String {
        format!("P{p:02}")
    }

    pub fn speaker_name(&self, s: usize) -> String {
        format!("{}{s:03}", self.speaker_prefix)
    }

    /// Phone index of every segment of utterance `j` of speaker `s`.
    ///
    /// Even positions hold context phones, odd positions hold centers. The
    /// centers are split into `context_phones` equal blocks and block `h`
    /// is flanked by phone `h`. Centers cycle through the remaining phones
    /// starting at offset `s + j`, so when the center count is a multiple of
    /// `n_phones - context_phones` every utterance has the same phone
    /// composition and only the order changes.
    pub fn phone_script(&self, s: usize, j: usize) -> Vec<usize> {
        let n_centers = self.segments_per_utterance / 2;
        let block = |i: usize| (i.min(n_centers.saturating_sub(1)) * self.context_phones) / n_centers.max(1);
        let free: Vec<usize> = (self.context_phones..self.n_phones).collect();
        (0..self.segments_per_utterance)
            .map(|k| {
                let h = block(k / 2);
                if k % 2 == 0 {
                    return h;
                }
                let i = k / 2 + s + j;
                if free.is_empty() {
                    // Every phone is a context phone: use any phone but h.
                    (h + 1 + i % (self.n_phones - 1)) % self.n_phones
                } else {
                    free[i % free.len()]
                }
            })
            .collect()
    }
}

/// Generator parameters that tests compare recovered structure against.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `speaker_dims x dim`, orthonormal rows.
    pub speaker_basis: Array2<f64>,
    /// `phone_dims x dim`, orthonormal rows, orthogonal to `speaker_basis`.
    pub phone_basis: Array2<f64>,
    pub speaker_offsets: Vec<Array1<f64>>,
    pub phone_offsets: Vec<Array1<f64>>,
    pub mean: Array1<f64>,
}

impl GroundTruth {
    /// Packs a ground-truth subspace as a basis; directions are ordered by
    /// the variance of the offsets along them.
    pub fn as_basis(&self, speaker: bool) -> Result<PcaBasis> {
        let (basis, offsets) = if speaker {
            (&self.speaker_basis, &self.speaker_offsets)
        } else {
            (&self.phone_basis, &self.phone_offsets)
        };
        let n = offsets.len() as f64;
        let mut dirs: Vec<(f64, usize)> = basis
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let coords: Vec<f64> = offsets.iter().map(|o| o.dot(&v)).collect();
                let m = coords.iter().sum::<f64>() / n;
                (coords.iter().map(|c| (c - m).powi(2)).sum::<f64>() / n, i)
            })
            .collect();
        dirs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let rows: Vec<usize> = dirs.iter().map(|d| d.1).collect();
        PcaBasis::from_parts(
            self.mean.clone(),
            basis.select(ndarray::Axis(0), &rows),
            dirs.iter().map(|d| d.0).collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub config: SynthConfig,
    pub features: Vec<FeatureFile>,
    /// Speaker of each feature file.
    pub speakers: Vec<String>,
    pub alignments: AlignmentTable,
    pub table: FrameTable,
    pub truth: GroundTruth,
}

impl SynthCorpus {
    pub fn speaker_refs(&self) -> Vec<&str> {
        self.speakers.iter().map(String::as_str).collect()
    }

    /// Writes feature files, `manifest.tsv`, `alignments.tsv`, both
    /// ground-truth bases and the config into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Manifest> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = write_corpus(dir, &self.features, &self.speaker_refs())?;
        self.alignments.write(dir.join("alignments.tsv"))?;
        self.truth.as_basis(true)?.write(dir.join("ground_truth_speaker.sspb"))?;
        self.truth.as_basis(false)?.write(dir.join("ground_truth_phone.sspb"))?;
        let cfg = dir.join("synth_config.json");
        fs::write(&cfg, serde_json::to_string_pretty(&self.config)? + "\n").map_err(|e| Error::io(&cfg, e))?;
        Ok(manifest)
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Orthonormal rows spanning a random `k`-dimensional subspace of `R^dim`
/// (modified Gram-Schmidt, applied twice).
fn random_orthonormal_rows(rng: &mut ChaCha8Rng, k: usize, dim: usize) -> Array2<f64> {
    let mut m = Array2::from_shape_vec((k, dim), gaussian_vec(rng, k * dim)).expect("shape");
    for _ in 0..2 {
        for i in 0..k {
            for j in 0..i {
                let prev = m.row(j).to_owned();
                let proj = m.row(i).dot(&prev);
                m.row_mut(i).scaled_add(-proj, &prev);
            }
            let norm = m.row(i).dot(&m.row(i)).sqrt();
            m.row_mut(i).mapv_inplace(|x| x / norm);
        }
    }
    m
}

fn combine(basis: &Array2<f64>, coords: &[f64], scale: f64) -> Array1<f64> {
    let mut out = Array1::zeros(basis.ncols());
    for (c, row) in coords.iter().zip(basis.rows()) {
        out.scaled_add(scale * c, &row);
    }
    out
}

fn mix_seed(parts: &[u64]) -> u64 {
    // SplitMix64 finalizer folded over the parts.
    let mut h = 0x9e37_79b9_7f4a_7c15u64;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let dim = config.dim;

    let mut world = ChaCha8Rng::seed_from_u64(config.world_seed);
    let joint = random_orthonormal_rows(&mut world, config.speaker_dims + config.phone_dims, dim);
    let speaker_basis = joint.slice(ndarray::s![..config.speaker_dims, ..]).to_owned();
    let phone_basis = joint.slice(ndarray::s![config.speaker_dims.., ..]).to_owned();
    let mean = Array1::from(gaussian_vec(&mut world, dim)) * config.mean_scale;
    let phone_offsets: Vec<Array1<f64>> = (0..config.n_phones)
        .map(|_| {
            let g = gaussian_vec(&mut world, config.phone_dims);
            combine(&phone_basis, &g, config.phone_scale)
        })
        .collect();

    let mut spk_rng = ChaCha8Rng::seed_from_u64(mix_seed(&[config.seed, 0]));
    let speaker_offsets: Vec<Array1<f64>> = (0..config.n_speakers)
        .map(|_| {
            let g = gaussian_vec(&mut spk_rng, config.speaker_dims);
            combine(&speaker_basis, &g, config.speaker_scale)
        })
        .collect();

    let f = config.frames_per_segment;
    let lead = if config.edge_silence { f } else { 0 };
    let utts: Vec<(usize, usize)> = (0..config.n_speakers)
        .flat_map(|s| (0..config.utterances_per_speaker).map(move |j| (s, j)))
        .collect();
    let generated: Vec<(FeatureFile, Vec<Segment>)> = utts
        .par_iter()
        .map(|&(s, j)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[config.seed, 1, s as u64, j as u64]));
            let script = config.phone_script(s, j);
            let n_frames = lead * 2 + script.len() * f;
            let mut frames = Array2::<f32>::zeros((n_frames, dim));
            let base = &mean + &speaker_offsets[s];
            for i in 0..n_frames {
                let in_speech = i >= lead && i < lead + script.len() * f;
                let clean = if in_speech {
                    &base + &phone_offsets[script[(i - lead) / f]]
                } else {
                    base.clone()
                };
                for (k, v) in frames.row_mut(i).iter_mut().enumerate() {
                    let noise: f64 = rng.sample(StandardNormal);
                    *v = (clean[k] + config.noise_sigma * noise) as f32;
                }
            }
            let t = |frame: usize| frame as f64 * DEFAULT_FRAME_PERIOD;
            let mut segments = Vec::with_capacity(script.len() + 2);
            if config.edge_silence {
                segments.push(Segment {
                    start: 0.0,
                    end: t(lead),
                    phone: SILENCE.into(),
                });
            }
            for (k, &p) in script.iter().enumerate() {
                segments.push(Segment {
                    start: t(lead + k * f),
                    end: t(lead + (k + 1) * f),
                    phone: config.phone_name(p),
                });
            }
            if config.edge_silence {
                segments.push(Segment {
                    start: t(lead + script.len() * f),
                    end: t(n_frames),
                    phone: SILENCE.into(),
                });
            }
            let id = format!("{}-u{j:02}", config.speaker_name(s));
            (FeatureFile::new(id, frames).expect("finite synthetic frames"), segments)
        })
        .collect();

    let mut alignments = AlignmentTable::new();
    let mut features = Vec::with_capacity(generated.len());
    let mut speakers = Vec::with_capacity(generated.len());
    for ((file, segments), &(s, _)) in generated.into_iter().zip(&utts) {
        alignments.insert(file.utterance_id.clone(), segments)?;
        speakers.push(config.speaker_name(s));
        features.push(file);
    }
    let speaker_refs: Vec<&str> = speakers.iter().map(String::as_str).collect();
    let table = frame_table_from_features(&features, &speaker_refs, &alignments, &CorpusOptions::default())?;
    Ok(SynthCorpus {
        config: config.clone(),
        features,
        speakers,
        alignments,
        table,
        truth: GroundTruth {
            speaker_basis,
            phone_basis,
            speaker_offsets,
            phone_offsets,
            mean,
        },
    })
}
