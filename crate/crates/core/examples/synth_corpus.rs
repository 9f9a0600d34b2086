// Generate a synthetic corpus with planted speaker and phone subspaces and
// write it to disk in the standard corpus layout.

use orthospeech::synth::{generate, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        n_speakers: 6,
        utterances_per_speaker: 4,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg)?;
    let dir = tempfile::tempdir()?;
    let manifest = corpus.write(dir.path())?;

    println!("{} utterances, {} labeled frames", manifest.entries.len(), corpus.table.len());
    let mut names: Vec<String> = std::fs::read_dir(dir.path())?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    names.sort();
    println!("wrote {names:?}");

    let truth = corpus.truth.as_basis(true)?;
    println!("true speaker subspace: {} directions in {} dims", truth.k_max(), truth.dim());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
