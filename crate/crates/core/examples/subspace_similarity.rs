// Measure how orthogonal the speaker and phone directions are, and how
// close the fitted speaker subspace is to the planted one.

use orthospeech::aggregate::{aggregate_by_phone, aggregate_by_speaker};
use orthospeech::pca::fit_pca;
use orthospeech::subspace::{direction_similarity, orthogonality_stats, principal_angles};
use orthospeech::synth::{generate, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig::default();
    let corpus = generate(&cfg)?;
    let spk = fit_pca(&aggregate_by_speaker(&corpus.table)?)?;
    let phn = fit_pca(&aggregate_by_phone(&corpus.table)?)?;

    let sim = direction_similarity(&spk, &phn, cfg.speaker_dims, cfg.phone_dims, ("speaker", "phone"))?;
    let stats = orthogonality_stats(&sim)?;
    println!("speaker vs phone |cos|: mean {:.4}, max {:.4}", stats.mean, stats.max);

    let truth = corpus.truth.as_basis(true)?;
    let angles = principal_angles(&spk, &truth, cfg.speaker_dims, cfg.speaker_dims)?;
    let degrees: Vec<String> = angles.iter().map(|a| format!("{:.2}", a.to_degrees())).collect();
    println!("principal angles to the true speaker subspace (deg): {}", degrees.join(" "));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
