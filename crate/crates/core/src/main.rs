use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use orthospeech::abx::{abx_evaluate, extract_triphones, AbxMode, AbxOptions, TokenSpan};
use orthospeech::aggregate::{aggregate, Grouping};
use orthospeech::corpus::{
    build_frame_table, write_corpus, AlignmentTable, CorpusOptions, FeatureFile, FrameTable, Manifest,
    DEFAULT_EXCLUDED_PHONES, DEFAULT_FRAME_PERIOD,
};
use orthospeech::normalize::{NormalizeMethod, DEFAULT_EPSILON};
use orthospeech::pca::{fit_pca, num_components_for_variance, PcaBasis};
use orthospeech::pipeline::{run_pipeline, CorpusSummary, PipelineConfig, RunReport};
use orthospeech::plot::{emit_plot_data, PlotOptions};
use orthospeech::probe::{run_probe, split_half_by_speaker, ProbeConfig, ProbeTarget};
use orthospeech::subspace::{collapse, collapse_table, direction_similarity, orthogonality_stats, principal_angles};
use orthospeech::synth::{generate, SynthConfig};
use orthospeech::{Error, Result};

#[derive(Parser)]
#[command(name = "orthospeech", version, about = "Speaker and phone subspaces of speech representations")]
struct Cli {
    /// Worker threads (0 = all cores). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CorpusArgs {
    /// Manifest TSV (utterance_id, speaker_id, feature_path, num_frames).
    #[arg(long)]
    manifest: PathBuf,
    /// Alignment TSV (utterance_id, start_s, end_s, phone).
    #[arg(long)]
    alignments: PathBuf,
    /// Phone labels dropped before analysis.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EXCLUDED_PHONES.map(String::from))]
    exclude: Vec<String>,
    /// Frame period in seconds.
    #[arg(long, default_value_t = DEFAULT_FRAME_PERIOD)]
    frame_period: f64,
}

impl CorpusArgs {
    fn options(&self) -> CorpusOptions {
        CorpusOptions {
            excluded_phones: self.exclude.iter().cloned().collect(),
            frame_period: self.frame_period,
        }
    }

    fn load(&self) -> Result<(Manifest, AlignmentTable, FrameTable)> {
        let m = Manifest::read(&self.manifest)?;
        let a = AlignmentTable::read(&self.alignments)?;
        let t = build_frame_table(&m, &a, &self.options())?;
        Ok((m, a, t))
    }
}

#[derive(Args, Clone)]
struct NormalizeArgs {
    /// Normalization applied before evaluation.
    #[arg(long, default_value = "none")]
    normalize: NormalizeMethod,
    /// Speaker basis for `--normalize collapse`.
    #[arg(long)]
    basis: Option<PathBuf>,
    /// Directions to collapse (default: all in the basis).
    #[arg(long)]
    k: Option<usize>,
    /// Pick `k` as the smallest count reaching this cumulative variance.
    #[arg(long, conflicts_with = "k")]
    tau: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

impl NormalizeArgs {
    fn apply(&self, t: &FrameTable) -> Result<FrameTable> {
        match self.normalize {
            NormalizeMethod::Collapse => {
                let path = self
                    .basis
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("--normalize collapse needs --basis".into()))?;
                let b = PcaBasis::read(path)?;
                let k = resolve_k(&b, self.k, self.tau)?;
                collapse_table(t, &b, k)
            }
            m => m.apply_baseline(t, self.epsilon),
        }
    }
}

fn resolve_k(b: &PcaBasis, k: Option<usize>, tau: Option<f64>) -> Result<usize> {
    match (k, tau) {
        (Some(k), _) => Ok(k),
        (None, Some(tau)) => num_components_for_variance(b, tau),
        (None, None) => Ok(b.k_max()),
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum By {
    Speaker,
    Phone,
    Joint,
}

impl From<By> for Grouping {
    fn from(b: By) -> Self {
        match b {
            By::Speaker => Grouping::Speaker,
            By::Phone => Grouping::Phone,
            By::Joint => Grouping::Joint,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Speaker,
    Phone,
}

#[derive(Clone, Copy, ValueEnum)]
enum Modes {
    Within,
    Across,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus and summarize it.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with known subspaces.
    Synth {
        /// SynthConfig JSON; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean representation per speaker, phone or (speaker, phone).
    Aggregate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum)]
        by: By,
        #[arg(long, default_value_t = 1)]
        min_count: usize,
        /// TSV output (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit principal directions of an aggregate matrix.
    Pca {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum)]
        by: By,
        #[arg(long, default_value_t = 1)]
        min_count: usize,
        /// Basis file; a JSON summary is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the leading directions of two bases.
    Similarity {
        #[arg(long)]
        basis_a: PathBuf,
        #[arg(long)]
        basis_b: PathBuf,
        #[arg(long)]
        ka: Option<usize>,
        #[arg(long)]
        kb: Option<usize>,
        /// Heat-map grid CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project speaker directions out of every frame of every feature file.
    Collapse {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, conflicts_with = "k")]
        tau: Option<f64>,
        /// Output directory for the collapsed corpus.
        #[arg(long)]
        out: PathBuf,
    },
    /// Linear speaker or phone probe.
    Probe {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        norm: NormalizeArgs,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = ProbeConfig::default().learning_rate)]
        learning_rate: f64,
        #[arg(long, default_value_t = ProbeConfig::default().iterations)]
        iterations: usize,
        #[arg(long)]
        max_frames_per_class: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ABX phone discrimination.
    Abx {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        norm: NormalizeArgs,
        #[arg(long, value_enum, default_value = "both")]
        mode: Modes,
        #[arg(long, default_value = "triphone")]
        span: TokenSpan,
        #[arg(long)]
        max_triplets_per_cell: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-cell CSV.
        #[arg(long)]
        cells_csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full pipeline from a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, conflicts_with = "k")]
        tau: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write CSVs for the similarity heat map, joint projection and k sweep.
    PlotData {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Pipeline report providing the k sweep.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        speaker_directions: usize,
        #[arg(long, default_value_t = 1)]
        min_count: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    write_or_print(&text, out)
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
            _ => Ok(()),
        },
    }
}

#[derive(Serialize)]
struct SimilarityReport {
    ka: usize,
    kb: usize,
    stats: orthospeech::subspace::OrthogonalityStats,
    principal_angles_deg: Vec<f64>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { corpus, out } => {
            let m = Manifest::read(&corpus.manifest)?;
            m.validate()?;
            let (_, _, t) = corpus.load()?;
            emit(&CorpusSummary::of(&t), out.as_deref())
        }
        Command::Synth { config, seed, out } => {
            let mut cfg: SynthConfig = match config {
                Some(p) => {
                    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
                }
                None => SynthConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            generate(&cfg)?.write(&out)?;
            Ok(())
        }
        Command::Aggregate {
            corpus,
            by,
            min_count,
            out,
        } => {
            let (_, _, t) = corpus.load()?;
            write_or_print(&aggregate(&t, by.into(), min_count)?.to_tsv(), out.as_deref())
        }
        Command::Pca {
            corpus,
            by,
            min_count,
            out,
        } => {
            let (_, _, t) = corpus.load()?;
            fit_pca(&aggregate(&t, by.into(), min_count)?)?.write(&out)
        }
        Command::Similarity {
            basis_a,
            basis_b,
            ka,
            kb,
            csv,
            out,
        } => {
            let a = PcaBasis::read(&basis_a)?;
            let b = PcaBasis::read(&basis_b)?;
            let ka = ka.unwrap_or(a.k_max());
            let kb = kb.unwrap_or(b.k_max());
            let s = direction_similarity(&a, &b, ka, kb, ("a", "b"))?;
            if let Some(p) = csv {
                fs::write(&p, orthospeech::plot::similarity_csv(&s)).map_err(|e| Error::io(&p, e))?;
            }
            let report = SimilarityReport {
                ka,
                kb,
                stats: orthogonality_stats(&s)?,
                principal_angles_deg: principal_angles(&a, &b, ka, kb)?
                    .into_iter()
                    .map(f64::to_degrees)
                    .collect(),
            };
            emit(&report, out.as_deref())
        }
        Command::Collapse {
            manifest,
            basis,
            k,
            tau,
            out,
        } => {
            let m = Manifest::read(&manifest)?;
            let b = PcaBasis::read(&basis)?;
            let k = resolve_k(&b, k, tau)?;
            let mut files = Vec::with_capacity(m.entries.len());
            for e in &m.entries {
                let f = orthospeech::read_feature_file(&e.feature_path)?;
                let z = collapse(f.frames.mapv(f64::from).view(), &b, k)?;
                files.push(FeatureFile::new(f.utterance_id.clone(), z.mapv(|v| v as f32))?);
            }
            let speakers: Vec<&str> = m.entries.iter().map(|e| e.speaker_id.as_str()).collect();
            write_corpus(&out, &files, &speakers)?;
            Ok(())
        }
        Command::Probe {
            corpus,
            norm,
            target,
            seed,
            learning_rate,
            iterations,
            max_frames_per_class,
            out,
        } => {
            let (_, _, t) = corpus.load()?;
            let t = norm.apply(&t)?;
            let split = split_half_by_speaker(&t, seed)?;
            let cfg = ProbeConfig {
                learning_rate,
                iterations,
                seed,
                max_frames_per_class,
            };
            let target = match target {
                Target::Speaker => ProbeTarget::Speaker,
                Target::Phone => ProbeTarget::Phone,
            };
            emit(&run_probe(&t, &split, target, &cfg)?, out.as_deref())
        }
        Command::Abx {
            corpus,
            norm,
            mode,
            span,
            max_triplets_per_cell,
            seed,
            cells_csv,
            out,
        } => {
            let opts = corpus.options();
            let (_, a, t) = corpus.load()?;
            let t = norm.apply(&t)?;
            let tokens = extract_triphones(&t, &a, &opts, span);
            let modes: &[AbxMode] = match mode {
                Modes::Within => &[AbxMode::Within],
                Modes::Across => &[AbxMode::Across],
                Modes::Both => &[AbxMode::Within, AbxMode::Across],
            };
            let abx_opts = AbxOptions {
                max_triplets_per_cell,
                seed,
            };
            let report = abx_evaluate(&tokens, modes, &abx_opts)?;
            if let Some(p) = cells_csv {
                fs::write(&p, report.cells_csv()).map_err(|e| Error::io(&p, e))?;
            }
            emit(&report, out.as_deref())
        }
        Command::Pipeline {
            config,
            seed,
            k,
            tau,
            out,
        } => {
            let mut cfg = PipelineConfig::read(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if k.is_some() || tau.is_some() {
                cfg.collapse.k = k;
                cfg.collapse.tau = tau;
            }
            let base = config.parent().unwrap_or(Path::new("."));
            let report = run_pipeline(&cfg, base)?;
            write_or_print(&report.to_json()?, out.as_deref())
        }
        Command::PlotData {
            corpus,
            report,
            dims,
            speaker_directions,
            min_count,
            out,
        } => {
            let (_, _, t) = corpus.load()?;
            let report: Option<RunReport> = match report {
                Some(p) => {
                    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    Some(serde_json::from_str(&text)?)
                }
                None => None,
            };
            let opts = PlotOptions {
                speaker_directions,
                projection_dims: dims,
                min_count,
            };
            for p in emit_plot_data(&out, &t, report.as_ref(), &opts)? {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(cli)),
        Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
