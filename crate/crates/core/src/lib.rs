//! Speaker and phone subspaces of self-supervised speech representations.
//!
//! Frame-level features are grouped by speaker, phone, or both; PCA over the
//! group means yields principal directions. The speaker directions turn out
//! to be nearly orthogonal to the phone directions, so projecting them out of
//! every frame ("collapse") removes speaker information while keeping phone
//! information. Linear probes and ABX discrimination measure both effects.
//!
//! ```
//! use orthospeech::{aggregate_by_speaker, collapse_table, fit_pca, generate, SynthConfig};
//!
//! let cfg = SynthConfig { n_speakers: 6, utterances_per_speaker: 2, ..SynthConfig::default() };
//! let corpus = generate(&cfg).unwrap();
//! let basis = fit_pca(&aggregate_by_speaker(&corpus.table).unwrap()).unwrap();
//! let collapsed = collapse_table(&corpus.table, &basis, cfg.speaker_dims).unwrap();
//! assert_eq!(collapsed.len(), corpus.table.len());
//! ```

pub mod abx;
pub mod aggregate;
pub mod corpus;
pub mod error;
pub mod normalize;
pub mod pca;
pub mod pipeline;
pub mod plot;
pub mod probe;
pub mod reduce;
pub mod subspace;
pub mod synth;

pub use abx::{
    abx_error, abx_evaluate, dtw_distance, extract_triphones, AbxMode, AbxOptions, AbxReport, TokenSpan,
    TriphoneToken,
};
pub use aggregate::{aggregate, aggregate_by_phone, aggregate_by_speaker, aggregate_joint, AggregateMatrix, Grouping};
pub use corpus::{
    build_frame_table, read_feature_file, write_feature_file, AlignmentTable, CorpusOptions, FeatureFile, FrameTable,
    Manifest, Segment,
};
pub use error::{Error, Result};
pub use normalize::{center, standardize, GroupBy, NormalizeMethod};
pub use pca::{fit_pca, num_components_for_variance, PcaBasis};
pub use pipeline::{run_pipeline, run_pipeline_with_threads, PipelineConfig, RunReport};
pub use probe::{run_probe, split_half_by_speaker, ProbeConfig, ProbeResult, ProbeTarget};
pub use subspace::{collapse, collapse_table, direction_similarity, orthogonality_stats, principal_angles};
pub use synth::{generate, SynthConfig, SynthCorpus};
