//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::{array, Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use orthospeech::abx::{abx_error, dtw_distance, extract_triphones, AbxMode, AbxOptions, TokenSpan, TriphoneToken};
use orthospeech::aggregate::{aggregate_by_phone, aggregate_by_speaker};
use orthospeech::corpus::{CorpusOptions, FrameTable};
use orthospeech::normalize::{center, standardize, GroupBy, NormalizeMethod};
use orthospeech::pca::{fit_pca, num_components_for_variance, PcaBasis};
use orthospeech::probe::{run_probe, split_half_by_speaker, ProbeConfig, ProbeTarget};
use orthospeech::subspace::{collapse, collapse_table, direction_similarity, orthogonality_stats, principal_angles};
use orthospeech::synth::{generate, SynthConfig};

// Tolerances and budgets.
const PCA_MIN_ABS_DOT: f64 = 0.99;
const PCA_RATIO_TOL: f64 = 0.05;
const PCA_BUDGET: Duration = Duration::from_secs(1);
const COLLAPSE_REL_TOL: f64 = 1e-9;
const COLLAPSE_IDEMPOTENCE_TOL: f64 = 1e-12;
const COLLAPSE_BUDGET: Duration = Duration::from_secs(5);
const ORTHO_MAX_DOT: f64 = 0.15;
const ORTHO_MAX_ANGLE_DEG: f64 = 5.0;
const SPEAKER_ERR_BEFORE_MAX: f64 = 0.05;
const SPEAKER_ERR_AFTER_MIN: f64 = 0.90;
const PHONE_ERR_CHANGE_MAX: f64 = 0.02;
const ABX_INCREASE_MAX: f64 = 0.005;
const EFFICACY_BUDGET: Duration = Duration::from_secs(120);
const DTW_TOL: f64 = 1e-12;
const CENTER_TOL: f64 = 1e-9;
const STD_TOL: f64 = 1e-6;

type Outcome = Result<String, Box<dyn std::error::Error>>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail.into())
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

// ---------------------------------------------------------------------------

fn rotation(a: f64, b: f64, c: f64) -> Array2<f64> {
    let rz = array![[a.cos(), -a.sin(), 0.0], [a.sin(), a.cos(), 0.0], [0.0, 0.0, 1.0]];
    let ry = array![[b.cos(), 0.0, b.sin()], [0.0, 1.0, 0.0], [-b.sin(), 0.0, b.cos()]];
    let rx = array![[1.0, 0.0, 0.0], [0.0, c.cos(), -c.sin()], [0.0, c.sin(), c.cos()]];
    rz.dot(&ry).dot(&rx)
}

fn pca_recovery() -> Outcome {
    let variances: [f64; 3] = [4.0, 1.0, 0.25];
    let rot = rotation(0.7, -0.4, 1.1);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let latent = Array2::from_shape_fn((200, 3), |(_, j)| variances[j].sqrt() * gaussian(&mut rng));
    // Sample i is rot * latent_i.
    let samples = latent.dot(&rot.t());

    let start = Instant::now();
    let basis = orthospeech::pca::fit_pca_rows(samples.view())?;
    let elapsed = start.elapsed();

    let total: f64 = variances.iter().sum();
    let mut worst_dot: f64 = 1.0;
    let mut worst_ratio: f64 = 0.0;
    for (i, v) in variances.iter().enumerate() {
        let truth = rot.column(i);
        let d = basis.component(i).iter().zip(truth.iter()).map(|(a, b)| a * b).sum::<f64>().abs();
        worst_dot = worst_dot.min(d);
        worst_ratio = worst_ratio.max((basis.variance_ratios[i] - v / total).abs());
    }
    check(
        worst_dot >= PCA_MIN_ABS_DOT && worst_ratio <= PCA_RATIO_TOL && elapsed < PCA_BUDGET,
        format!("min |dot| {worst_dot:.5}, max ratio error {worst_ratio:.4}, {elapsed:?}"),
    )
}

// ---------------------------------------------------------------------------

fn collapse_exactness() -> Outcome {
    let cfg = SynthConfig {
        utterances_per_speaker: 8,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg)?;
    let t = &corpus.table;
    if t.len() < 10_000 {
        return Err(format!("corpus has only {} frames", t.len()).into());
    }
    let basis = fit_pca(&aggregate_by_speaker(t)?)?;
    let mut worst_proj: f64 = 0.0;
    let mut worst_idem: f64 = 0.0;
    let mut contraction_ok = true;
    let mut elapsed = Duration::ZERO;
    for k in [cfg.speaker_dims, basis.k_max()] {
        let start = Instant::now();
        let once = collapse(t.frames(), &basis, k)?;
        let twice = collapse(once.view(), &basis, k)?;
        elapsed += start.elapsed();
        for r in 0..t.len() {
            let z = t.frame(r);
            let norm_z = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let zc = once.row(r);
            for i in 0..k {
                let p: f64 = zc.iter().zip(basis.component(i)).map(|(a, b)| a * b).sum();
                worst_proj = worst_proj.max(p.abs() / norm_z);
            }
            let idem = zc.iter().zip(twice.row(r)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst_idem = worst_idem.max(idem / norm_z);
            let norm_c = zc.iter().map(|v| v * v).sum::<f64>().sqrt();
            contraction_ok &= norm_c <= norm_z * (1.0 + 1e-15);
        }
    }
    check(
        worst_proj <= COLLAPSE_REL_TOL && worst_idem <= COLLAPSE_IDEMPOTENCE_TOL && contraction_ok && elapsed < COLLAPSE_BUDGET,
        format!(
            "{} frames, max |z'.v|/|z| {worst_proj:.2e}, idempotence {worst_idem:.2e}, contraction {contraction_ok}, {elapsed:?}",
            t.len()
        ),
    )
}

// ---------------------------------------------------------------------------

fn orthogonality_discovery() -> Outcome {
    let cfg = SynthConfig::default();
    let corpus = generate(&cfg)?;
    let spk = fit_pca(&aggregate_by_speaker(&corpus.table)?)?;
    let phn = fit_pca(&aggregate_by_phone(&corpus.table)?)?;
    let sim = direction_similarity(&spk, &phn, cfg.speaker_dims, cfg.phone_dims, ("speaker", "phone"))
        ?;
    let stats = orthogonality_stats(&sim)?;
    let truth = corpus.truth.as_basis(true)?;
    let angles = principal_angles(&spk, &truth, cfg.speaker_dims, cfg.speaker_dims)?;
    let max_angle = angles.iter().copied().fold(0.0, f64::max).to_degrees();
    check(
        stats.max <= ORTHO_MAX_DOT && max_angle <= ORTHO_MAX_ANGLE_DEG,
        format!("max |dot| {:.4} (mean {:.4}), max principal angle {max_angle:.3} deg", stats.max, stats.mean),
    )
}

// ---------------------------------------------------------------------------

struct Scores {
    speaker: f64,
    phone: f64,
    within: f64,
    across: f64,
}

fn scores(t: &FrameTable, corpus: &orthospeech::SynthCorpus) -> Result<Scores, Box<dyn std::error::Error>> {
    let split = split_half_by_speaker(t, 0)?;
    let probe = ProbeConfig::default();
    let speaker = run_probe(t, &split, ProbeTarget::Speaker, &probe)?.error_rate;
    let phone = run_probe(t, &split, ProbeTarget::Phone, &probe)?.error_rate;
    let tokens = extract_triphones(t, &corpus.alignments, &CorpusOptions::default(), TokenSpan::Triphone);
    let opts = AbxOptions::default();
    let within = abx_error(&tokens, AbxMode::Within, &opts)?.error;
    let across = abx_error(&tokens, AbxMode::Across, &opts)?.error;
    Ok(Scores {
        speaker,
        phone,
        within,
        across,
    })
}

fn before_after(cfg: &SynthConfig) -> Result<(Scores, Scores), Box<dyn std::error::Error>> {
    let corpus = generate(cfg)?;
    let basis = fit_pca(&aggregate_by_speaker(&corpus.table)?)?;
    let collapsed = collapse_table(&corpus.table, &basis, cfg.speaker_dims)?;
    Ok((scores(&corpus.table, &corpus)?, scores(&collapsed, &corpus)?))
}

fn normalization_efficacy() -> Outcome {
    let start = Instant::now();
    let default = SynthConfig::default();
    let (b, a) = before_after(&default)?;
    // Noise level where baseline ABX errors are a few percent, so a change
    // is measurable; at the default noise every triplet is scored correctly.
    let hard = SynthConfig {
        noise_sigma: 2.0,
        speaker_scale: default.phone_scale / 2.0,
        ..SynthConfig::default()
    };
    let (hb, ha) = before_after(&hard)?;
    let elapsed = start.elapsed();
    let ok = b.speaker <= SPEAKER_ERR_BEFORE_MAX
        && a.speaker >= SPEAKER_ERR_AFTER_MIN
        && (a.phone - b.phone).abs() <= PHONE_ERR_CHANGE_MAX
        && a.within <= b.within + ABX_INCREASE_MAX
        && a.across <= b.across + ABX_INCREASE_MAX
        && ha.within < hb.within
        && ha.across < hb.across
        && elapsed < EFFICACY_BUDGET;
    check(
        ok,
        format!(
            "speaker {:.2}% -> {:.2}%, phone {:.2}% -> {:.2}%, ABX within {:.3}% -> {:.3}%, across {:.3}% -> {:.3}%; \
             speaker_scale = phone_scale/2: within {:.3}% -> {:.3}%, across {:.3}% -> {:.3}%; {elapsed:.1?}",
            100.0 * b.speaker,
            100.0 * a.speaker,
            100.0 * b.phone,
            100.0 * a.phone,
            100.0 * b.within,
            100.0 * a.within,
            100.0 * b.across,
            100.0 * a.across,
            100.0 * hb.within,
            100.0 * ha.within,
            100.0 * hb.across,
            100.0 * ha.across,
        ),
    )
}

// ---------------------------------------------------------------------------

fn tok(speaker: &str, l: &str, c: &str, r: &str, frames: Array2<f64>) -> TriphoneToken {
    TriphoneToken {
        speaker: speaker.into(),
        left: l.into(),
        center: c.into(),
        right: r.into(),
        frames,
        utterance: format!("{speaker}-{l}{c}{r}"),
        frame_span: (0, 0),
    }
}

fn abx_fixture() -> Vec<TriphoneToken> {
    vec![
        tok("s1", "L", "A", "R", array![[1.0, 0.1, 0.0], [0.9, 0.2, 0.1]]),
        tok("s1", "L", "A", "R", array![[0.8, 0.3, 0.0], [1.0, 0.0, 0.2], [0.7, 0.1, 0.1]]),
        tok("s1", "L", "B", "R", array![[0.1, 1.0, 0.0], [0.2, 0.8, 0.3]]),
        tok("s1", "L", "B", "R", array![[0.9, 0.2, 0.1]]),
        tok("s2", "L", "A", "R", array![[0.6, 0.5, 0.4], [1.0, 0.1, 0.0]]),
        tok("s2", "L", "A", "R", array![[0.2, 0.9, 0.1]]),
        tok("s2", "L", "B", "R", array![[0.0, 1.0, 0.2], [0.1, 0.9, 0.0], [0.3, 0.7, 0.0]]),
        tok("s2", "M", "A", "R", array![[0.5, 0.5, 0.5]]),
        tok("s2", "M", "B", "R", array![[0.5, 0.5, 0.5]]),
        tok("s2", "M", "B", "R", array![[0.4, 0.6, 0.5], [0.5, 0.5, 0.5]]),
    ]
}

fn mean(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        s += x;
    }
    s / v.len() as f64
}

/// Enumerates every (a, b, x) triplet directly from the definition.
fn brute_force_abx(tokens: &[TriphoneToken], within: bool) -> Option<f64> {
    let n = tokens.len();
    let d = |i: usize, j: usize| dtw_distance(tokens[i].frames.view(), tokens[j].frames.view()).unwrap();
    // (A, B, l, r, u, v) -> triplet scores
    type CellKey = (String, String, String, String, String, String);
    let mut cells: BTreeMap<CellKey, Vec<f64>> = BTreeMap::new();
    for x in 0..n {
        for a in 0..n {
            for b in 0..n {
                let (ta, tb, tx) = (&tokens[a], &tokens[b], &tokens[x]);
                if a == x || ta.center == tb.center || tx.center != ta.center {
                    continue;
                }
                let context = (&ta.left, &ta.right);
                if context != (&tb.left, &tb.right) || context != (&tx.left, &tx.right) {
                    continue;
                }
                if ta.speaker != tb.speaker || within != (tx.speaker == ta.speaker) {
                    continue;
                }
                let (dxa, dxb) = (d(x, a), d(x, b));
                let s = if dxa > dxb {
                    1.0
                } else if dxa == dxb {
                    0.5
                } else {
                    0.0
                };
                cells
                    .entry((
                        ta.center.clone(),
                        tb.center.clone(),
                        ta.left.clone(),
                        ta.right.clone(),
                        ta.speaker.clone(),
                        tx.speaker.clone(),
                    ))
                    .or_default()
                    .push(s);
            }
        }
    }
    // pair -> speakers -> context -> directions
    type Level<T> = BTreeMap<(String, String), T>;
    let mut tree: Level<Level<Level<Vec<f64>>>> = BTreeMap::new();
    for ((pa, pb, l, r, u, v), s) in &cells {
        let forward = pa < pb;
        let pair = if forward { (pa.clone(), pb.clone()) } else { (pb.clone(), pa.clone()) };
        let dirs = tree
            .entry(pair)
            .or_default()
            .entry((u.clone(), v.clone()))
            .or_default()
            .entry((l.clone(), r.clone()))
            .or_default();
        // Forward direction first so the two-direction mean sums in a fixed order.
        if forward {
            dirs.insert(0, mean(s));
        } else {
            dirs.push(mean(s));
        }
    }
    if tree.is_empty() {
        return None;
    }
    let per_pair: Vec<f64> = tree
        .values()
        .map(|spk| {
            let per_spk: Vec<f64> = spk
                .values()
                .map(|ctx| mean(&ctx.values().map(|dirs| mean(dirs)).collect::<Vec<_>>()))
                .collect();
            mean(&per_spk)
        })
        .collect();
    Some(mean(&per_pair))
}

fn abx_oracle() -> Outcome {
    let tokens = abx_fixture();
    let mut details = Vec::new();
    let mut ok = tokens.len() <= 10;
    for (mode, within) in [(AbxMode::Within, true), (AbxMode::Across, false)] {
        let got = abx_error(&tokens, mode, &AbxOptions::default())?.error;
        let want = brute_force_abx(&tokens, within).ok_or("oracle found no cell")?;
        ok &= got.to_bits() == want.to_bits();
        details.push(format!("{mode} {got} vs oracle {want}"));
    }
    check(ok, format!("{} tokens: {}", tokens.len(), details.join(", ")))
}

// ---------------------------------------------------------------------------

fn angular(f: &[f64], g: &[f64]) -> f64 {
    let nf = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ng = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nf == 0.0 || ng == 0.0 {
        return 0.5;
    }
    let c = f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / (nf * ng);
    c.clamp(-1.0, 1.0).acos() / std::f64::consts::PI
}

/// Walks every monotone path; keeps the lowest total cost, breaking cost
/// ties by the shorter path, and returns cost / length.
fn exhaustive_dtw(x: ArrayView2<f64>, y: ArrayView2<f64>) -> f64 {
    fn walk(i: usize, j: usize, cost: f64, len: usize, c: &Array2<f64>, best: &mut (f64, usize)) {
        let cost = cost + c[[i, j]];
        let len = len + 1;
        let (n, m) = c.dim();
        if i == n - 1 && j == m - 1 {
            if cost < best.0 || (cost == best.0 && len < best.1) {
                *best = (cost, len);
            }
            return;
        }
        if i + 1 < n {
            walk(i + 1, j, cost, len, c, best);
        }
        if j + 1 < m {
            walk(i, j + 1, cost, len, c, best);
        }
        if i + 1 < n && j + 1 < m {
            walk(i + 1, j + 1, cost, len, c, best);
        }
    }
    let c = Array2::from_shape_fn((x.nrows(), y.nrows()), |(i, j)| {
        angular(x.row(i).as_slice().unwrap(), y.row(j).as_slice().unwrap())
    });
    let mut best = (f64::INFINITY, usize::MAX);
    walk(0, 0, 0.0, 0, &c, &mut best);
    best.0 / best.1 as f64
}

fn dtw_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (n, m, d) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=4));
        let x = Array2::from_shape_fn((n, d), |_| gaussian(&mut rng));
        let y = Array2::from_shape_fn((m, d), |_| gaussian(&mut rng));
        let got = dtw_distance(x.view(), y.view())?;
        worst = worst.max((got - exhaustive_dtw(x.view(), y.view())).abs());
    }
    check(worst <= DTW_TOL, format!("50 random pairs, max |diff| {worst:.2e}"))
}

// ---------------------------------------------------------------------------

fn group_stats(t: &FrameTable, by: GroupBy) -> (f64, f64) {
    // Returns (max |group mean|, max |group std - 1|) over groups with > 1 frame.
    let key = |r: usize| match by {
        GroupBy::Utterance => t.utterance_of()[r],
        GroupBy::Speaker => t.speaker_of()[r],
    };
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for r in 0..t.len() {
        groups.entry(key(r)).or_default().push(r);
    }
    let (mut worst_mean, mut worst_std) = (0.0f64, 0.0f64);
    for rows in groups.values() {
        let n = rows.len() as f64;
        for j in 0..t.dim() {
            let m = rows.iter().map(|&r| t.frame(r)[j]).sum::<f64>() / n;
            let var = rows.iter().map(|&r| (t.frame(r)[j] - m).powi(2)).sum::<f64>() / n;
            worst_mean = worst_mean.max(m.abs());
            if rows.len() > 1 {
                worst_std = worst_std.max((var.sqrt() - 1.0).abs());
            }
        }
    }
    (worst_mean, worst_std)
}

fn baseline_behavior() -> Outcome {
    let cfg = SynthConfig {
        n_speakers: 6,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg)?;
    let t = &corpus.table;
    let mut worst_mean: f64 = 0.0;
    let mut worst_std: f64 = 0.0;
    for by in [GroupBy::Utterance, GroupBy::Speaker] {
        let c = center(t, by)?;
        worst_mean = worst_mean.max(group_stats(&c, by).0);
        let s = standardize(t, by, 1e-8)?;
        let (m, sd) = group_stats(&s, by);
        worst_mean = worst_mean.max(m);
        worst_std = worst_std.max(sd);
    }

    // k = 0 collapse against no normalization: frames and every report.
    let basis = fit_pca(&aggregate_by_speaker(t)?)?;
    let zero = collapse_table(t, &basis, 0)?;
    let none = NormalizeMethod::None.apply_baseline(t, 1e-8)?;
    let frames_equal = zero.frames() == none.frames();
    let split = split_half_by_speaker(t, 3)?;
    let probe = ProbeConfig::default();
    let mut reports_equal = frames_equal;
    for target in [ProbeTarget::Speaker, ProbeTarget::Phone] {
        let a = run_probe(&zero, &split, target, &probe)?;
        let b = run_probe(&none, &split, target, &probe)?;
        reports_equal &= a == b;
    }
    let opts = CorpusOptions::default();
    let tz = extract_triphones(&zero, &corpus.alignments, &opts, TokenSpan::Triphone);
    let tn = extract_triphones(&none, &corpus.alignments, &opts, TokenSpan::Triphone);
    for mode in [AbxMode::Within, AbxMode::Across] {
        let a = abx_error(&tz, mode, &AbxOptions::default())?;
        let b = abx_error(&tn, mode, &AbxOptions::default())?;
        reports_equal &= a == b;
    }
    check(
        worst_mean <= CENTER_TOL && worst_std <= STD_TOL && reports_equal,
        format!("max |group mean| {worst_mean:.2e}, max |std - 1| {worst_std:.2e}, k=0 reports identical: {reports_equal}"),
    )
}

// ---------------------------------------------------------------------------

fn determinism() -> Outcome {
    let dir = tempfile::tempdir()?;
    let train = SynthConfig {
        n_speakers: 6,
        noise_sigma: 1.0,
        speaker_scale: 1.5,
        ..SynthConfig::default()
    };
    generate(&train)
        .and_then(|c| c.write(&dir.path().join("train")))
        ?;
    let config = serde_json::json!({
        "seed": 11,
        "train": {"manifest": "train/manifest.tsv", "alignments": "train/alignments.tsv"},
        "dev": {"synth": {"n_speakers": 5, "noise_sigma": 1.0, "speaker_scale": 1.5, "speaker_prefix": "dev", "seed": 2}},
        "eval": {"synth": {"n_speakers": 5, "noise_sigma": 1.0, "speaker_scale": 1.5, "speaker_prefix": "ev", "seed": 3}},
        "probe": {"max_frames_per_class": 120},
        "abx": {"max_triplets_per_cell": 40}
    });
    let config_path = dir.path().join("pipeline.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap())?;

    let run = |threads: usize| -> Result<Vec<u8>, Box<dyn std::error::Error>> {
        let out = dir.path().join(format!("report-{threads}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_orthospeech"))
            .args(["--threads", &threads.to_string(), "pipeline", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(&out)
            .status()
            ?;
        if !status.success() {
            return Err(format!("pipeline with {threads} threads exited with {status}").into());
        }
        Ok(std::fs::read(&out)?)
    };
    let one = run(1)?;
    let eight = run(8)?;
    let again = run(8)?;
    check(
        one == eight && eight == again,
        format!("{} byte report; 1 vs 8 threads identical: {}; rerun identical: {}", one.len(), one == eight, eight == again),
    )
}

// ---------------------------------------------------------------------------

fn basis_with_variances(variances: &[f64]) -> PcaBasis {
    let k = variances.len();
    let components = Array2::from_shape_fn((k, k), |(i, j)| if i == j { 1.0 } else { 0.0 });
    PcaBasis::from_parts(Array1::zeros(k), components, variances.to_vec()).unwrap()
}

fn dimension_selection() -> Outcome {
    // (variances, tau, k worked out by hand from the cumulative ratios)
    let cases: [(&[f64], f64, usize); 5] = [
        (&[4.0, 2.0, 1.0, 1.0], 0.75, 2),  // 0.5, 0.75 reaches tau exactly
        (&[4.0, 2.0, 1.0, 1.0], 0.8, 3),   // 0.5, 0.75, 0.875
        (&[6.0, 3.0, 1.0], 0.95, 3),       // 0.6, 0.9, 1.0
        (&[5.0, 3.0, 2.0, 0.0], 1.0, 3),   // trailing zero variance adds nothing
        (&[1.0, 1.0, 1.0, 1.0, 1.0], 1.0, 5),
    ];
    let mut bad = Vec::new();
    for (vars, tau, want) in cases {
        let got = num_components_for_variance(&basis_with_variances(vars), tau)?;
        if got != want {
            bad.push(format!("{vars:?} tau {tau}: got {got}, want {want}"));
        }
    }
    if bad.is_empty() {
        Ok("5 ratio vectors match, including tau = 1.0".into())
    } else {
        Err(bad.join("; ").into())
    }
}

// ---------------------------------------------------------------------------

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("PCA recovery", pca_recovery),
        ("Collapse exactness", collapse_exactness),
        ("Orthogonality discovery", orthogonality_discovery),
        ("Normalization efficacy", normalization_efficacy),
        ("ABX oracle equivalence", abx_oracle),
        ("DTW oracle equivalence", dtw_oracle),
        ("Baseline behavior", baseline_behavior),
        ("Determinism", determinism),
        ("Dimension selection", dimension_selection),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
