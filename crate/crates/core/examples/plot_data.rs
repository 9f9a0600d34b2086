// Export the CSVs behind the similarity heat map, the joint projection
// scatter and the k-sweep curves.

use std::path::Path;

use orthospeech::pipeline::{run_pipeline, CorpusSource, PipelineConfig, SweepConfig};
use orthospeech::plot::{emit_plot_data, PlotOptions};
use orthospeech::synth::{generate, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig {
        n_speakers: 6,
        ..SynthConfig::default()
    };
    let mut cfg = PipelineConfig::new(CorpusSource::Synth { synth: synth.clone() });
    cfg.methods = vec![];
    cfg.collapse.sweep = Some(SweepConfig {
        ks: Some(vec![0, 2, 5]),
        ..SweepConfig::default()
    });
    cfg.abx.max_triplets_per_cell = Some(10);
    let report = run_pipeline(&cfg, Path::new("."))?;

    let table = generate(&synth)?.table;
    let dir = tempfile::tempdir()?;
    let opts = PlotOptions {
        projection_dims: vec![0, 1, 2],
        ..PlotOptions::default()
    };
    for path in emit_plot_data(dir.path(), &table, Some(&report), &opts)? {
        let text = std::fs::read_to_string(&path)?;
        println!("{}: {} lines", path.file_name().unwrap().to_string_lossy(), text.lines().count());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
