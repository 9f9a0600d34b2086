// Write a tiny corpus by hand, read it back, and label its frames.

use ndarray::array;
use orthospeech::corpus::{write_corpus, AlignmentTable, CorpusOptions, FeatureFile, Manifest, Segment};
use orthospeech::build_frame_table;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let files = vec![
        FeatureFile::new("u1", array![[1.0f32, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9]])?,
        FeatureFile::new("u2", array![[1.0f32, 0.2], [0.2, 1.0], [0.0, 0.0]])?,
    ];
    write_corpus(dir.path(), &files, &["alice", "bob"])?;

    let mut align = AlignmentTable::new();
    let seg = |start, end, phone: &str| Segment { start, end, phone: phone.into() };
    align.insert("u1", vec![seg(0.0, 0.02, "AA"), seg(0.02, 0.04, "IY")])?;
    align.insert("u2", vec![seg(0.0, 0.01, "AA"), seg(0.01, 0.02, "IY"), seg(0.02, 0.03, "SIL")])?;
    let align_path = dir.path().join("alignments.tsv");
    align.write(&align_path)?;

    let manifest = Manifest::read(dir.path().join("manifest.tsv"))?;
    manifest.validate()?;
    let align = AlignmentTable::read(&align_path)?;
    let table = build_frame_table(&manifest, &align, &CorpusOptions::default())?;
    println!("{} labeled frames of dim {}", table.len(), table.dim());
    for i in 0..table.len() {
        println!("  {} {} {:?}", table.speaker_label(i), table.phone_label(i), table.frame(i));
    }
    assert_eq!(table.len(), 6, "the SIL frame is dropped");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
