//! End-to-end runs: ingest, aggregate, fit the speaker basis, pick how many
//! directions to collapse, then probe and ABX every requested normalization.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abx::{abx_evaluate, extract_triphones, AbxMode, AbxModeReport, AbxOptions, TokenSpan};
use crate::aggregate::{aggregate_by_phone, aggregate_by_speaker};
use crate::corpus::{
    build_frame_table, AlignmentTable, CorpusOptions, FrameTable, Manifest, DEFAULT_EXCLUDED_PHONES,
    DEFAULT_FRAME_PERIOD,
};
use crate::error::{Error, Result, StageContext};
use crate::normalize::{NormalizeMethod, DEFAULT_EPSILON};
use crate::pca::{fit_pca, num_components_for_variance, PcaBasis};
use crate::probe::{run_probe, split_half_by_speaker, ProbeConfig, ProbeResult, ProbeTarget};
use crate::subspace::{collapse_table, direction_similarity, orthogonality_stats, OrthogonalityStats};
use crate::synth::{generate, SynthConfig};

/// Where a corpus comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorpusSource {
    Files { manifest: PathBuf, alignments: PathBuf },
    Synth { synth: SynthConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Cumulative-variance breakpoints turned into `k` values.
    pub taus: Vec<f64>,
    /// Explicit `k` values; overrides `taus` when present.
    pub ks: Option<Vec<usize>>,
}

pub const DEFAULT_SWEEP_TAUS: [f64; 6] = [0.80, 0.90, 0.95, 0.98, 0.99, 1.0];

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            taus: DEFAULT_SWEEP_TAUS.to_vec(),
            ks: None,
        }
    }
}

/// How many speaker directions to collapse. Precedence: `k`, then `tau`,
/// then a sweep on the dev corpus (when `sweep` is set or a dev corpus is
/// given), otherwise every direction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollapseConfig {
    pub k: Option<usize>,
    pub tau: Option<f64>,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub targets: Vec<ProbeTarget>,
    pub learning_rate: f64,
    pub iterations: usize,
    pub max_frames_per_class: Option<usize>,
}

impl Default for ProbeSection {
    fn default() -> Self {
        let d = ProbeConfig::default();
        ProbeSection {
            targets: vec![ProbeTarget::Speaker, ProbeTarget::Phone],
            learning_rate: d.learning_rate,
            iterations: d.iterations,
            max_frames_per_class: d.max_frames_per_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbxSection {
    pub modes: Vec<AbxMode>,
    pub span: TokenSpan,
    pub max_triplets_per_cell: Option<usize>,
}

impl Default for AbxSection {
    fn default() -> Self {
        AbxSection {
            modes: vec![AbxMode::Within, AbxMode::Across],
            span: TokenSpan::Triphone,
            max_triplets_per_cell: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    /// Corpus the speaker basis is learned from.
    pub train: CorpusSource,
    /// Corpus used to choose `k` by sweeping.
    #[serde(default)]
    pub dev: Option<CorpusSource>,
    /// Corpus probed and scored; defaults to `train`.
    #[serde(default)]
    pub eval: Option<CorpusSource>,
    #[serde(default = "default_excluded")]
    pub excluded_phones: Vec<String>,
    #[serde(default = "default_frame_period")]
    pub frame_period: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<NormalizeMethod>,
    #[serde(default)]
    pub collapse: CollapseConfig,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub abx: AbxSection,
    #[serde(default = "default_epsilon")]
    pub standardize_epsilon: f64,
    /// Number of leading speaker directions compared against the phone
    /// basis.
    #[serde(default = "default_speaker_directions")]
    pub speaker_directions: usize,
}

fn default_excluded() -> Vec<String> {
    DEFAULT_EXCLUDED_PHONES.iter().map(|s| s.to_string()).collect()
}
fn default_frame_period() -> f64 {
    DEFAULT_FRAME_PERIOD
}
fn default_methods() -> Vec<NormalizeMethod> {
    NormalizeMethod::ALL.to_vec()
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_speaker_directions() -> usize {
    20
}

impl PipelineConfig {
    /// A config with defaults everywhere except the training corpus.
    pub fn new(train: CorpusSource) -> Self {
        PipelineConfig {
            seed: 0,
            train,
            dev: None,
            eval: None,
            excluded_phones: default_excluded(),
            frame_period: default_frame_period(),
            methods: default_methods(),
            collapse: CollapseConfig::default(),
            probe: ProbeSection::default(),
            abx: AbxSection::default(),
            standardize_epsilon: default_epsilon(),
            speaker_directions: default_speaker_directions(),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn corpus_options(&self) -> CorpusOptions {
        CorpusOptions {
            excluded_phones: self.excluded_phones.iter().cloned().collect(),
            frame_period: self.frame_period,
        }
    }
}

/// Seeds derived from the top-level seed, one per consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubSeeds {
    pub split: u64,
    pub probe: u64,
    pub abx: u64,
}

pub fn derive_seed(seed: u64, name: &str) -> u64 {
    let digest = Sha256::digest(format!("{seed}:{name}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

impl SubSeeds {
    pub fn from_seed(seed: u64) -> Self {
        SubSeeds {
            split: derive_seed(seed, "split"),
            probe: derive_seed(seed, "probe"),
            abx: derive_seed(seed, "abx"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub frames: usize,
    pub dim: usize,
    pub speakers: usize,
    pub phones: usize,
    pub utterances: usize,
}

impl CorpusSummary {
    pub fn of(t: &FrameTable) -> Self {
        CorpusSummary {
            frames: t.len(),
            dim: t.dim(),
            speakers: t.speaker_set().len(),
            phones: t.phone_set().len(),
            utterances: t.utterances().len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisReport {
    pub k_max: usize,
    pub variance_ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub speaker_directions: usize,
    pub phone_directions: usize,
    pub stats: OrthogonalityStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub cumulative_variance: f64,
    pub speaker_error: Option<f64>,
    pub abx_across: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KRule {
    Fixed,
    Variance,
    Sweep,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbxSummary {
    pub error: f64,
    pub phone_pairs: usize,
    pub triplets: usize,
    pub zero_norm_frames: bool,
}

impl From<&AbxModeReport> for AbxSummary {
    fn from(r: &AbxModeReport) -> Self {
        AbxSummary {
            error: r.error,
            phone_pairs: r.phone_pairs,
            triplets: r.triplets,
            zero_norm_frames: r.zero_norm_frames,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: NormalizeMethod,
    pub probes: Vec<ProbeResult>,
    pub abx_within: Option<AbxSummary>,
    pub abx_across: Option<AbxSummary>,
}

/// Everything a pipeline run produced. Contains no timestamps, so equal
/// inputs and config give byte-identical JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: ToolInfo,
    pub config: PipelineConfig,
    pub seeds: SubSeeds,
    /// SHA-256 of every input, keyed by role.
    pub inputs: BTreeMap<String, String>,
    pub corpora: BTreeMap<String, CorpusSummary>,
    pub speaker_basis: BasisReport,
    pub orthogonality: Option<OrthogonalityReport>,
    pub sweep: Option<Vec<SweepPoint>>,
    pub k_rule: KRule,
    pub selected_k: usize,
    pub results: Vec<MethodResult>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn result(&self, method: NormalizeMethod) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// A loaded corpus.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub table: FrameTable,
    pub alignments: AlignmentTable,
    pub digests: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_corpus(source: &CorpusSource, base_dir: &Path, opts: &CorpusOptions) -> Result<LoadedCorpus> {
    match source {
        CorpusSource::Files { manifest, alignments } => {
            let manifest_path = resolve(base_dir, manifest);
            let align_path = resolve(base_dir, alignments);
            let read = |p: &Path| fs::read(p).map_err(|e| Error::io(p, e));
            let manifest_bytes = read(&manifest_path)?;
            let align_bytes = read(&align_path)?;
            let m = Manifest::read(&manifest_path)?;
            let a = AlignmentTable::read(&align_path)?;
            let table = build_frame_table(&m, &a, opts)?;
            let mut features = Sha256::new();
            for e in &m.entries {
                features.update(read(&e.feature_path)?);
            }
            let digests = BTreeMap::from([
                ("manifest".to_string(), sha256_hex(&manifest_bytes)),
                ("alignments".to_string(), sha256_hex(&align_bytes)),
                ("features".to_string(), hex::encode(features.finalize())),
            ]);
            Ok(LoadedCorpus {
                table,
                alignments: a,
                digests,
            })
        }
        CorpusSource::Synth { synth } => {
            let c = generate(synth)?;
            let json = serde_json::to_vec(synth)?;
            let table = if opts == &CorpusOptions::default() {
                c.table
            } else {
                let spk = c.speaker_refs();
                crate::corpus::frame_table_from_features(&c.features, &spk, &c.alignments, opts)?
            };
            Ok(LoadedCorpus {
                table,
                alignments: c.alignments,
                digests: BTreeMap::from([("synth".to_string(), sha256_hex(&json))]),
            })
        }
    }
}

/// Probe and ABX results for one normalized table.
pub fn evaluate_table(
    t: &FrameTable,
    alignments: &AlignmentTable,
    config: &PipelineConfig,
    seeds: &SubSeeds,
    targets: &[ProbeTarget],
    modes: &[AbxMode],
) -> Result<(Vec<ProbeResult>, Option<AbxModeReport>, Option<AbxModeReport>)> {
    let probe_cfg = ProbeConfig {
        learning_rate: config.probe.learning_rate,
        iterations: config.probe.iterations,
        seed: seeds.probe,
        max_frames_per_class: config.probe.max_frames_per_class,
    };
    let probes = if targets.is_empty() {
        Vec::new()
    } else {
        let split = split_half_by_speaker(t, seeds.split).stage("probe")?;
        targets
            .iter()
            .map(|&target| run_probe(t, &split, target, &probe_cfg))
            .collect::<Result<Vec<_>>>()
            .stage("probe")?
    };
    if modes.is_empty() {
        return Ok((probes, None, None));
    }
    let tokens = extract_triphones(t, alignments, &config.corpus_options(), config.abx.span);
    let abx_opts = AbxOptions {
        max_triplets_per_cell: config.abx.max_triplets_per_cell,
        seed: seeds.abx,
    };
    let report = abx_evaluate(&tokens, modes, &abx_opts).stage("abx")?;
    Ok((probes, report.within, report.across))
}

fn sweep_grid(basis: &PcaBasis, sweep: &SweepConfig) -> Result<Vec<usize>> {
    let ks: BTreeSet<usize> = match &sweep.ks {
        Some(ks) => ks.iter().copied().collect(),
        None => sweep
            .taus
            .iter()
            .map(|&tau| num_components_for_variance(basis, tau))
            .collect::<Result<_>>()?,
    };
    if let Some(&bad) = ks.iter().find(|&&k| k > basis.k_max()) {
        return Err(Error::Config(format!(
            "sweep k = {bad} exceeds the {} available directions",
            basis.k_max()
        )));
    }
    if ks.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    Ok(ks.into_iter().collect())
}

/// Collapses the dev corpus at every grid point and scores it. Returns the
/// points and the `k` with the lowest across-speaker ABX error (smallest
/// `k` on ties).
pub fn run_sweep(
    basis: &PcaBasis,
    dev: &LoadedCorpus,
    ks: &[usize],
    config: &PipelineConfig,
    seeds: &SubSeeds,
) -> Result<(Vec<SweepPoint>, usize)> {
    let targets: Vec<ProbeTarget> = config
        .probe
        .targets
        .iter()
        .copied()
        .filter(|t| *t == ProbeTarget::Speaker)
        .collect();
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        let t = collapse_table(&dev.table, basis, k).stage("collapse")?;
        let (probes, _, across) = evaluate_table(&t, &dev.alignments, config, seeds, &targets, &[AbxMode::Across])?;
        points.push(SweepPoint {
            k,
            cumulative_variance: basis.cumulative_variance(k),
            speaker_error: probes.first().map(|p| p.error_rate),
            abx_across: across.expect("across requested").error,
        });
    }
    let best = points
        .iter()
        .min_by(|a, b| a.abx_across.total_cmp(&b.abx_across).then(a.k.cmp(&b.k)))
        .map(|p| p.k)
        .ok_or_else(|| Error::Config("empty sweep grid".into()))?;
    Ok((points, best))
}

/// Runs the configured pipeline. Relative paths resolve against `base_dir`.
pub fn run_pipeline(config: &PipelineConfig, base_dir: &Path) -> Result<RunReport> {
    let opts = config.corpus_options();
    let seeds = SubSeeds::from_seed(config.seed);
    let mut inputs = BTreeMap::new();
    let mut corpora = BTreeMap::new();
    let mut load = |role: &str, src: &CorpusSource| -> Result<LoadedCorpus> {
        let c = load_corpus(src, base_dir, &opts).stage("ingest")?;
        for (k, v) in &c.digests {
            inputs.insert(format!("{role}.{k}"), v.clone());
        }
        corpora.insert(role.to_string(), CorpusSummary::of(&c.table));
        Ok(c)
    };
    let train = load("train", &config.train)?;
    let dev = config.dev.as_ref().map(|d| load("dev", d)).transpose()?;
    let eval = config.eval.as_ref().map(|e| load("eval", e)).transpose()?;
    let eval = eval.as_ref().unwrap_or(&train);

    let m_spk = aggregate_by_speaker(&train.table).stage("aggregate")?;
    let basis = fit_pca(&m_spk).stage("pca")?;
    let orthogonality = match aggregate_by_phone(&train.table) {
        Ok(m_phn) => {
            let phone_basis = fit_pca(&m_phn).stage("pca")?;
            let ka = config.speaker_directions.min(basis.k_max());
            let kb = phone_basis.k_max();
            let sim = direction_similarity(&basis, &phone_basis, ka, kb, ("speaker", "phone")).stage("similarity")?;
            Some(OrthogonalityReport {
                speaker_directions: ka,
                phone_directions: kb,
                stats: orthogonality_stats(&sim).stage("similarity")?,
            })
        }
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e).stage("aggregate"),
    };

    let (k_rule, selected_k, sweep) = if let Some(k) = config.collapse.k {
        if k > basis.k_max() {
            return Err(Error::Config(format!("k = {k} exceeds the {} available directions", basis.k_max())));
        }
        (KRule::Fixed, k, None)
    } else if let Some(tau) = config.collapse.tau {
        (KRule::Variance, num_components_for_variance(&basis, tau)?, None)
    } else if config.collapse.sweep.is_some() || dev.is_some() {
        let sweep_cfg = config.collapse.sweep.clone().unwrap_or_default();
        let grid = sweep_grid(&basis, &sweep_cfg).stage("sweep")?;
        let (points, best) = run_sweep(&basis, dev.as_ref().unwrap_or(&train), &grid, config, &seeds)?;
        (KRule::Sweep, best, Some(points))
    } else {
        (KRule::All, basis.k_max(), None)
    };

    let mut results = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let t = match method {
            NormalizeMethod::Collapse => collapse_table(&eval.table, &basis, selected_k).stage("collapse")?,
            other => other
                .apply_baseline(&eval.table, config.standardize_epsilon)
                .stage("normalize")?,
        };
        let (probes, within, across) =
            evaluate_table(&t, &eval.alignments, config, &seeds, &config.probe.targets, &config.abx.modes)?;
        results.push(MethodResult {
            method,
            probes,
            abx_within: within.as_ref().map(AbxSummary::from),
            abx_across: across.as_ref().map(AbxSummary::from),
        });
    }

    Ok(RunReport {
        tool: ToolInfo {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        config: config.clone(),
        seeds,
        inputs,
        corpora,
        speaker_basis: BasisReport {
            k_max: basis.k_max(),
            variance_ratios: basis.variance_ratios.clone(),
        },
        orthogonality,
        sweep,
        k_rule,
        selected_k,
        results,
    })
}

/// [`run_pipeline`] on a dedicated pool of `threads` workers.
pub fn run_pipeline_with_threads(config: &PipelineConfig, base_dir: &Path, threads: usize) -> Result<RunReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_pipeline(config, base_dir))
}
