use std::fs;

use orthospeech::corpus::{frame_table_from_features, read_feature_header, FEATURE_MAGIC};
use orthospeech::pca::PcaBasis;
use orthospeech::*;

fn small() -> SynthConfig {
    SynthConfig {
        n_speakers: 4,
        utterances_per_speaker: 2,
        dim: 16,
        ..SynthConfig::default()
    }
}

#[test]
fn written_corpus_reads_back_identically() {
    let corpus = generate(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    corpus.write(dir.path()).unwrap();

    let manifest = Manifest::read(dir.path().join("manifest.tsv")).unwrap();
    let alignments = AlignmentTable::read(dir.path().join("alignments.tsv")).unwrap();
    assert_eq!(alignments, corpus.alignments);
    let table = build_frame_table(&manifest, &alignments, &CorpusOptions::default()).unwrap();
    assert_eq!(table, corpus.table);

    for f in &corpus.features {
        let path = dir.path().join("features").join(format!("{}.ssfv", f.utterance_id));
        assert_eq!(read_feature_header(&path).unwrap(), (f.dim(), f.num_frames()));
        assert_eq!(&read_feature_file(&path).unwrap(), f);
    }
    let truth = PcaBasis::read(dir.path().join("ground_truth_speaker.sspb")).unwrap();
    assert_eq!(truth, corpus.truth.as_basis(true).unwrap());
}

#[test]
fn feature_file_damage_is_classified() {
    let dir = tempfile::tempdir().unwrap();
    let f = FeatureFile::new("u1", ndarray::Array2::from_elem((3, 2), 0.5f32)).unwrap();
    let path = dir.path().join("u1.ssfv");
    write_feature_file(&path, &f).unwrap();
    let good = fs::read(&path).unwrap();
    assert_eq!(&good[..4], FEATURE_MAGIC);

    let check = |bytes: &[u8]| {
        fs::write(&path, bytes).unwrap();
        read_feature_file(&path).unwrap_err()
    };
    assert!(matches!(check(&good[..good.len() - 1]), Error::Corruption { .. }));
    assert!(matches!(check(&good[..10]), Error::Corruption { .. }));
    let mut extra = good.clone();
    extra.push(0);
    assert!(matches!(check(&extra), Error::Corruption { .. }));
    let mut magic = good.clone();
    magic[0] = b'X';
    assert!(matches!(check(&magic), Error::Format(_)));
    let mut version = good.clone();
    version[4] = 9;
    assert!(matches!(check(&version), Error::Format(_)));
    let mut nan = good.clone();
    nan[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(matches!(check(&nan), Error::Data(_)));

    assert!(matches!(
        read_feature_file(dir.path().join("missing.ssfv")).unwrap_err(),
        Error::Io { .. }
    ));
}

#[test]
fn manifest_frame_count_must_match_file() {
    let corpus = generate(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    corpus.write(dir.path()).unwrap();
    let manifest_path = dir.path().join("manifest.tsv");
    let mut manifest = Manifest::read(&manifest_path).unwrap();
    manifest.entries[0].num_frames += 1;
    let err = build_frame_table(&manifest, &corpus.alignments, &CorpusOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Data(_)), "{err}");
}

#[test]
fn missing_alignment_is_a_labeling_error() {
    let corpus = generate(&small()).unwrap();
    let mut alignments = AlignmentTable::new();
    for (u, segs) in corpus.alignments.iter().skip(1) {
        alignments.insert(u, segs.to_vec()).unwrap();
    }
    let err = frame_table_from_features(
        &corpus.features,
        &corpus.speaker_refs(),
        &alignments,
        &CorpusOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Labeling(_)), "{err}");
}

#[test]
fn excluded_phones_never_reach_the_table() {
    let corpus = generate(&small()).unwrap();
    let opts = CorpusOptions {
        excluded_phones: ["SIL", "P00"].iter().map(|s| s.to_string()).collect(),
        ..CorpusOptions::default()
    };
    let t = frame_table_from_features(&corpus.features, &corpus.speaker_refs(), &corpus.alignments, &opts).unwrap();
    assert!(!t.phone_set().iter().any(|p| p == "P00" || p == "SIL"));
    assert!(t.len() < corpus.table.len());
}
