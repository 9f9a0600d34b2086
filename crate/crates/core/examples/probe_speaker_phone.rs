// Linear speaker and phone probes before and after collapsing the speaker
// subspace.

use orthospeech::aggregate::aggregate_by_speaker;
use orthospeech::pca::fit_pca;
use orthospeech::probe::{run_probe, split_half_by_speaker, ProbeConfig, ProbeTarget};
use orthospeech::subspace::collapse_table;
use orthospeech::synth::{generate, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        n_speakers: 8,
        ..SynthConfig::default()
    };
    let t = generate(&cfg)?.table;
    let basis = fit_pca(&aggregate_by_speaker(&t)?)?;
    let collapsed = collapse_table(&t, &basis, cfg.speaker_dims)?;
    let split = split_half_by_speaker(&t, 0)?;
    let probe = ProbeConfig::default();
    for (name, table) in [("original", &t), ("collapsed", &collapsed)] {
        let spk = run_probe(table, &split, ProbeTarget::Speaker, &probe)?;
        let phn = run_probe(table, &split, ProbeTarget::Phone, &probe)?;
        println!(
            "{name:>9}: speaker error {:5.1}%, phone error {:5.1}% ({} train / {} test frames)",
            100.0 * spk.error_rate,
            100.0 * phn.error_rate,
            spk.n_train,
            spk.n_test
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
