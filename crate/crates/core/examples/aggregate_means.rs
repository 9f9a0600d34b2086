// Average frames per speaker, per phone and per (speaker, phone) cell.

use orthospeech::aggregate::{aggregate_by_phone, aggregate_by_speaker, aggregate_joint};
use orthospeech::synth::{generate, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        n_speakers: 5,
        n_phones: 4,
        utterances_per_speaker: 2,
        segments_per_utterance: 7,
        ..SynthConfig::default()
    };
    let t = generate(&cfg)?.table;
    let spk = aggregate_by_speaker(&t)?;
    let phn = aggregate_by_phone(&t)?;
    let joint = aggregate_joint(&t, 4)?;
    println!("M_spk {}x{}, M_phn {}x{}, M_joint {}x{}", spk.num_rows(), spk.dim(), phn.num_rows(), phn.dim(), joint.num_rows(), joint.dim());
    for (key, n) in joint.row_keys.iter().zip(&joint.row_counts).take(4) {
        println!("  {key}: {n} frames");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
