// Remove the speaker directions from every frame.

use orthospeech::aggregate::aggregate_by_speaker;
use orthospeech::pca::fit_pca;
use orthospeech::reduce::dot;
use orthospeech::subspace::collapse_table;
use orthospeech::synth::{generate, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        n_speakers: 10,
        utterances_per_speaker: 2,
        ..SynthConfig::default()
    };
    let t = generate(&cfg)?.table;
    let basis = fit_pca(&aggregate_by_speaker(&t)?)?;
    let k = cfg.speaker_dims;
    let collapsed = collapse_table(&t, &basis, k)?;

    let worst = (0..collapsed.len())
        .flat_map(|r| (0..k).map(move |i| (r, i)))
        .map(|(r, i)| dot(collapsed.frame(r), basis.component(i)).abs())
        .fold(0.0, f64::max);
    println!("collapsed {k} directions from {} frames; max residual projection {worst:.2e}", t.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
