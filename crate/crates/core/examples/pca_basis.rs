// Fit a speaker basis, save it, and choose k from a variance threshold.

use orthospeech::aggregate::aggregate_by_speaker;
use orthospeech::pca::{fit_pca, num_components_for_variance, PcaBasis};
use orthospeech::synth::{generate, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        n_speakers: 12,
        utterances_per_speaker: 2,
        ..SynthConfig::default()
    };
    let t = generate(&cfg)?.table;
    let basis = fit_pca(&aggregate_by_speaker(&t)?)?;
    println!("k_max = {}", basis.k_max());
    for (i, r) in basis.variance_ratios.iter().take(7).enumerate() {
        println!("  direction {i}: {:.4}", r);
    }
    for tau in [0.5, 0.9, 0.99, 1.0] {
        println!("tau {tau}: k = {}", num_components_for_variance(&basis, tau)?);
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("speaker.sspb");
    basis.write(&path)?;
    assert_eq!(PcaBasis::read(&path)?, basis);
    println!("orthonormality error {:.2e}", basis.orthonormality_error());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
