// Per-utterance and per-speaker centering and standardization.

use orthospeech::normalize::NormalizeMethod;
use orthospeech::synth::{generate, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        n_speakers: 4,
        utterances_per_speaker: 2,
        dim: 16,
        ..SynthConfig::default()
    };
    let t = generate(&cfg)?.table;
    for method in NormalizeMethod::ALL {
        if method == NormalizeMethod::Collapse {
            continue;
        }
        let n = method.apply_baseline(&t, 1e-8)?;
        let first = n.frame(0);
        println!("{method:>16}: first frame starts {:.3} {:.3}", first[0], first[1]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
