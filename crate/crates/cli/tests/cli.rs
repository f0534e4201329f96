use std::path::{Path, PathBuf};
use std::process::Command;

use cpdrums::commands::{data, evaluate, generate, preprocess, train};
use cpdrums::config::Overrides;
use cpdrums::render::score_to_phrase;
use cpdrums::store::{self, StatsFile};
use cpdrums::RunConfig;
use cpdrums_core::codec::encode_drums;
use cpdrums_core::midi::parse_midi;
use tempfile::TempDir;

fn toy_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy_corpus")
}

fn write_config(dir: &Path, corpus: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        "corpus_dir = {:?}\nwork_dir = \"work\"\nseed = 3\npreset = \"desk\"\n{extra}",
        corpus.display().to_string()
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn config(dir: &Path, extra: &str) -> RunConfig {
    RunConfig::load(&write_config(dir, &toy_corpus(), extra), &Overrides::default()).unwrap()
}

const SHORT_RUN: &str = "[train]\nmax_epochs = 2\n[generate]\nlimit = 2\n";

fn prepare(config: &RunConfig) {
    preprocess::run(config).unwrap();
    data::vocab(config).unwrap();
    data::tokenize(config).unwrap();
}

#[test]
fn committed_toy_corpus_matches_the_generator() {
    let tmp = TempDir::new().unwrap();
    let written = cpdrums::toy::write_toy_corpus(tmp.path()).unwrap();
    assert_eq!(written.len(), cpdrums::toy::TOY_FILES);
    for path in written {
        let name = path.file_name().unwrap();
        let committed = std::fs::read(toy_corpus().join(name)).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), committed, "{name:?} differs; rerun `cpdrums toy-corpus`");
    }
}

#[test]
fn empty_corpus_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("empty");
    std::fs::create_dir(&corpus).unwrap();
    let cfg = RunConfig::load(&write_config(tmp.path(), &corpus, ""), &Overrides::default()).unwrap();
    let err = preprocess::run(&cfg).unwrap_err();
    assert!(err.to_string().contains("no input files"), "{err}");
}

#[test]
fn preprocessing_is_deterministic_and_filters_files() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (ca, cb) = (config(a.path(), ""), config(b.path(), ""));
    let sa = preprocess::run(&ca).unwrap();
    preprocess::run(&cb).unwrap();
    for f in [preprocess::PHRASES, preprocess::SPLITS, preprocess::STATS] {
        assert_eq!(std::fs::read(ca.path(f)).unwrap(), std::fs::read(cb.path(f)).unwrap(), "{f}");
    }
    let stats: StatsFile = store::read_json(&ca.path(preprocess::STATS)).unwrap();
    assert_eq!(stats.stats.phrases, sa.stats.phrases);
    assert_eq!(sa.stats.phrases, 33);
    assert_eq!(sa.stats.files_used, cpdrums::toy::TOY_FILES - 1);
    let missing = cpdrums::toy::file_name(cpdrums::toy::NO_BASS_FILE);
    assert!(sa.stats.excluded[&missing].contains("bass"), "{:?}", sa.stats.excluded);
    assert_eq!(sa.stats.dropped_drum_pitches.get(&56).copied(), Some(3));
    assert_eq!(sa.stats.split_sizes.iter().sum::<usize>(), 33);
    // A different seed gives a different split but the same phrases.
    let c = TempDir::new().unwrap();
    let mut cc = config(c.path(), "");
    cc.settings.seed = 4;
    preprocess::run(&cc).unwrap();
    let ids = |cfg: &RunConfig| store::read_phrases(&cfg.path(preprocess::PHRASES)).unwrap().1;
    assert_eq!(ids(&ca), ids(&cc));
    assert_ne!(std::fs::read(ca.path(preprocess::SPLITS)).unwrap(), std::fs::read(cc.path(preprocess::SPLITS)).unwrap());
}

#[test]
fn stale_artifacts_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), SHORT_RUN);
    prepare(&cfg);
    let mut other = cfg.clone();
    other.settings.grid = 2;
    let err = data::tokenize(&other).unwrap_err();
    assert!(format!("{err:#}").contains("config"), "{err:#}");
    // Rebuilding the vocabulary under another tempo binning invalidates the token files.
    let mut rebinned = cfg.clone();
    rebinned.settings.codec.tempo_bin_width += 1;
    preprocess::run(&rebinned).unwrap();
    data::vocab(&rebinned).unwrap();
    let err = train::run(&rebinned, &train::TrainOptions::default()).unwrap_err();
    assert!(format!("{err:#}").contains("hash"), "{err:#}");
}

#[test]
fn resumed_training_matches_an_uninterrupted_run() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (ca, cb) = (config(a.path(), SHORT_RUN), config(b.path(), SHORT_RUN));
    prepare(&ca);
    prepare(&cb);
    let whole = train::run(&ca, &train::TrainOptions { fresh: true, epochs: None }).unwrap();
    assert_eq!(whole.epochs_completed, 2);
    let first = train::run(&cb, &train::TrainOptions { fresh: true, epochs: Some(1) }).unwrap();
    assert_eq!(first.epochs_completed, 1);
    // The interrupted run's last checkpoint loads cleanly on its own.
    let last = cpdrums::checkpoint::resolve_marker(&cb.path(train::CHECKPOINTS), "last").unwrap().unwrap();
    assert_eq!(cpdrums::checkpoint::Checkpoint::read(&last).unwrap().meta.epoch, 0);
    let rest = train::run(&cb, &train::TrainOptions::default()).unwrap();
    assert_eq!(rest.resumed_after_epoch, Some(0));
    assert_eq!(rest.epochs_completed, 2);

    let la = train::read_log(&ca.path(train::TRAIN_LOG)).unwrap();
    let lb = train::read_log(&cb.path(train::TRAIN_LOG)).unwrap();
    assert_eq!(la.len(), lb.len());
    for (x, y) in la.iter().zip(&lb) {
        if let (train::LogRecord::Step { loss: p, .. }, train::LogRecord::Step { loss: q, .. }) = (x, y) {
            assert!((p - q).abs() <= 1e-6, "{p} vs {q}");
        }
    }
    assert_eq!(la, lb);
    for f in ["epoch-000.cpck", "epoch-001.cpck"] {
        let dir = |c: &RunConfig| c.path(train::CHECKPOINTS).join(f);
        assert_eq!(std::fs::read(dir(&ca)).unwrap(), std::fs::read(dir(&cb)).unwrap(), "{f}");
    }
    // Running again after the budget is spent is a no-op.
    let again = train::run(&ca, &train::TrainOptions::default()).unwrap();
    assert_eq!(again.steps, whole.steps);
}

#[test]
fn generation_and_evaluation() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), SHORT_RUN);
    prepare(&cfg);
    train::run(&cfg, &train::TrainOptions::default()).unwrap();
    let out = generate::run(&cfg, &generate::GenerateArgs { split: Some("valid".into()), limit: Some(2), ..Default::default() })
        .unwrap();
    assert_eq!(out.items.len(), 2);
    let (phrases, manifest) = data::load_phrases(&cfg).unwrap();
    let seeds = store::select(&phrases, &manifest, "valid").unwrap();
    let (vocab, _) = store::read_vocab(&cfg.path(data::VOCAB), &cfg.data_hash()).unwrap();
    for (item, seed) in out.items.iter().zip(seeds) {
        assert_eq!(item.source_id, seed.source_id);
        let path = cfg.path(generate::GENERATED_DIR).join(&item.file);
        let score = parse_midi(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(score.tracks.len(), 3);
        let channels: Vec<_> = score.tracks.iter().map(|t| t.channel).collect();
        assert_eq!(channels, [0, 1, 9]);
        let back = score_to_phrase(&score, cfg.settings.grid, "g").unwrap();
        // Bar indices count from the source file's start; meter and tempo must match.
        let shape = |bars: &[cpdrums_core::preprocess::Bar]| bars.iter().map(|b| (b.ts, b.tempo)).collect::<Vec<_>>();
        assert_eq!(shape(&back.bars), shape(&seed.bars));
        assert_eq!(back.guitar, seed.guitar);
        assert_eq!(back.bass, seed.bass);
        assert_eq!(item.bars, seed.bars.len());
        // The written drum track re-tokenizes to the emitted stream.
        let stem = item.file.trim_end_matches(".mid");
        let stream: generate::TokenStream =
            store::read_json(&cfg.path(generate::GENERATED_DIR).join(format!("{stem}.tokens.json"))).unwrap();
        let words: Vec<[u32; 2]> = encode_drums(&back, &vocab).unwrap().iter().map(|w| w.ids()).collect();
        assert_eq!(words, stream.ids, "{stem} stopped by {:?}", stream.stop);
        assert_eq!(stream.tau, Some(1.0));
    }

    let bundle = evaluate::run(&cfg, &evaluate::EvaluateArgs::default()).unwrap();
    assert!(bundle.unpaired.is_empty());
    assert!(bundle.diff_table.contains("Groove Consistency"));
    assert!(cfg.path(evaluate::REPORTS).join("diff.txt").exists());

    let truth = cfg.path(generate::TRUTH_DIR);
    let own = evaluate::evaluate_dirs(&truth, &truth, &tmp.path().join("self"), &cfg.settings.metric_config(), "h", 3).unwrap();
    assert!(!own.diff.is_empty());
    for row in &own.diff {
        assert_eq!(row.mean, [0.0; 5]);
        assert_eq!(row.stddev, [0.0; 5]);
    }
}

#[test]
fn binary_reports_structured_errors() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("empty");
    std::fs::create_dir(&corpus).unwrap();
    let cfg = write_config(tmp.path(), &corpus, "");
    let out = Command::new(env!("CARGO_BIN_EXE_cpdrums"))
        .args(["preprocess", "--config"])
        .arg(&cfg)
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    assert!(!out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["status"], "error");
    assert_eq!(report["command"], "preprocess");
    assert!(report["message"].as_str().unwrap().contains("no input files"));

    let points = tmp.path().join("points.txt");
    let text: String = (0..4).flat_map(|t| [(0, 0), (1, 2), (2, 1), (3, 3)].map(|(x, y)| format!("{} {y}\n", x + 10 * t))).collect();
    std::fs::write(&points, text).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cpdrums")).args(["metrics", "--points"]).arg(&points).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["compression_ratio"], "16/7");
}
