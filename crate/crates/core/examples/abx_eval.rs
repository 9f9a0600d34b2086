// Within- and across-speaker ABX on triphone tokens.

use orthospeech::abx::{abx_evaluate, extract_triphones, AbxMode, AbxOptions, TokenSpan};
use orthospeech::corpus::CorpusOptions;
use orthospeech::synth::{generate, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        n_speakers: 4,
        n_phones: 6,
        segments_per_utterance: 11,
        noise_sigma: 1.5,
        speaker_scale: 1.5,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg)?;
    let tokens = extract_triphones(&corpus.table, &corpus.alignments, &CorpusOptions::default(), TokenSpan::Triphone);
    let opts = AbxOptions {
        max_triplets_per_cell: Some(50),
        seed: 0,
    };
    let report = abx_evaluate(&tokens, &[AbxMode::Within, AbxMode::Across], &opts)?;
    println!("{} tokens", tokens.len());
    for r in [&report.within, &report.across].into_iter().flatten() {
        println!(
            "{:>6}: {:.2}% over {} phone pairs, {} triplets",
            r.mode,
            100.0 * r.error,
            r.phone_pairs,
            r.triplets
        );
    }
    println!("{}", report.cells_csv().lines().take(3).collect::<Vec<_>>().join("\n"));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
