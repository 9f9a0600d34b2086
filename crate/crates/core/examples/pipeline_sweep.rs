// Learn speaker directions on one corpus, pick k by sweeping on a dev
// corpus with different speakers, and evaluate on a third.

use std::path::Path;

use orthospeech::normalize::NormalizeMethod;
use orthospeech::pipeline::{run_pipeline, CorpusSource, PipelineConfig};
use orthospeech::synth::SynthConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = |seed, prefix: &str| CorpusSource::Synth {
        synth: SynthConfig {
            n_speakers: 8,
            noise_sigma: 1.0,
            speaker_scale: 1.5,
            speaker_prefix: prefix.into(),
            seed,
            ..SynthConfig::default()
        },
    };
    let mut cfg = PipelineConfig::new(corpus(1, "train"));
    cfg.dev = Some(corpus(2, "dev"));
    cfg.eval = Some(corpus(3, "eval"));
    cfg.methods = vec![NormalizeMethod::None, NormalizeMethod::SpkCenter, NormalizeMethod::Collapse];
    cfg.abx.max_triplets_per_cell = Some(20);

    let report = run_pipeline(&cfg, Path::new("."))?;
    for p in report.sweep.as_deref().unwrap_or_default() {
        println!("k {:2}: variance {:.3}, across ABX {:.2}%", p.k, p.cumulative_variance, 100.0 * p.abx_across);
    }
    println!("selected k = {}", report.selected_k);
    for r in &report.results {
        let errors: Vec<String> = r.probes.iter().map(|p| format!("{} {:.1}%", p.target, 100.0 * p.error_rate)).collect();
        let across = r.abx_across.as_ref().map_or(f64::NAN, |a| 100.0 * a.error);
        println!("{:>10}: {}; across ABX {across:.2}%", r.method, errors.join(", "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
