//! End-to-end checks of the diaryforge binary: subcommand wiring, exit
//! codes, and the flags-over-config-file rule.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diaryforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

/// Small corpus shared by the smoke tests.
fn make_fixture(root: &Path) {
    let out = run(&[
        "fixture",
        "--seed",
        "9",
        "--out",
        root.to_str().unwrap(),
        "--years",
        "2",
        "--weeks",
        "2",
        "--instances",
        "3",
        "--entity-entries",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn fixture_and_segment_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    make_fixture(&corpus);
    assert!(corpus.join("ground_truth.json").is_file());
    assert!(corpus.join("lexicon.csv").is_file());

    let out_dir = dir.path().join("out");
    let out = run(&[
        "segment",
        "--root",
        corpus.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("segment:"));
    assert!(out_dir.join("manifest.json").is_file());
    assert!(out_dir.join("segments.json").is_file());
}

#[test]
fn empty_corpus_segments_to_zero_snippets() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty");
    std::fs::create_dir_all(&corpus).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "segment",
        "--root",
        corpus.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("0 snippets"));
}

#[test]
fn single_period_canonical_skips_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = run(&[
        "fixture",
        "--seed",
        "3",
        "--out",
        corpus.to_str().unwrap(),
        "--years",
        "1",
        "--weeks",
        "1",
        "--instances",
        "3",
    ]);
    assert!(out.status.success());
    let out_dir = dir.path().join("out");
    let out = run(&[
        "canonical",
        "--root",
        corpus.to_str().unwrap(),
        "--word",
        "of",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("canonical/of/1917_10_week1.png").is_file());
    assert!(!out_dir.join("canonical/of/cross_dtw.csv").exists());
    assert!(!out_dir.join("canonical/of/comparison.csv").exists());
}

#[test]
fn nonexistent_root_exits_2() {
    let out = run(&["segment", "--root", "/nonexistent/corpus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn similarity_with_one_snippet_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let folder = dir.path().join("snips");
    std::fs::create_dir_all(&folder).unwrap();
    let img = diaryforge_core::imagecore::GrayImage::constant(30, 20, 90).unwrap();
    diaryforge_core::io::save_gray_png(&img, &folder.join("only.png")).unwrap();
    let out = run(&[
        "similarity",
        "--folder",
        folder.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_flag_value_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    make_fixture(&corpus);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "segment",
        "--root",
        corpus.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--threshold",
        "255",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.join("manifest.json").exists(), "no partial output");
}

#[test]
fn unknown_flag_exits_2() {
    let out = run(&["segment", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_file_and_echo_into_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    make_fixture(&corpus);
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, r#"{"threshold": 100, "min_area": 32}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "segment",
        "--root",
        corpus.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
        "--threshold",
        "150",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["threshold"], 150, "flag wins");
    assert_eq!(manifest["config"]["min_area"], 32, "file value survives");
}

#[test]
fn full_command_surface_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    make_fixture(&corpus);
    let corpus_s = corpus.to_str().unwrap().to_string();
    let lexicon = corpus.join("lexicon.csv");
    let entity = corpus.join("entity.json");

    let seg_out = dir.path().join("seg");
    assert!(run(&[
        "segment",
        "--root",
        &corpus_s,
        "--out",
        seg_out.to_str().unwrap()
    ])
    .status
    .success());

    // Similarity over one labelled snippet folder produced by segment.
    let word_dir = seg_out.join("1917/10/week1/of");
    let sim_out = dir.path().join("sim");
    let out = run(&[
        "similarity",
        "--folder",
        word_dir.to_str().unwrap(),
        "--metric",
        "all",
        "--out",
        sim_out.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["mse.csv", "ssim.csv", "dtw.csv", "mse.svg", "ssim.svg", "dtw.svg", "comparison.csv"] {
        assert!(sim_out.join(name).is_file(), "missing {name}");
    }

    let canon_out = dir.path().join("canon");
    let out = run(&[
        "canonical",
        "--root",
        &corpus_s,
        "--word",
        "of",
        "--out",
        canon_out.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(canon_out.join("canonical/of/cross_dtw.csv").is_file());

    let sent_out = dir.path().join("sent");
    let out = run(&[
        "sentiment",
        "--root",
        &corpus_s,
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--entity",
        entity.to_str().unwrap(),
        "--out",
        sent_out.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(sent_out.join("sentiment/weekly.csv").is_file());
    assert!(sent_out.join("sentiment/weekly.svg").is_file());
    assert!(sent_out.join("sentiment/yearly.csv").is_file());
    assert!(sent_out.join("sentiment/entity_dorothy.csv").is_file());

    // Chart and CSV describe the same data: one plotted point per scored row.
    let weekly_csv = std::fs::read_to_string(sent_out.join("sentiment/weekly.csv")).unwrap();
    let scored_rows = weekly_csv
        .lines()
        .skip(1)
        .filter(|l| !l.ends_with(",,0,0") && !l.split(',').nth(4).unwrap_or("").is_empty())
        .count();
    let weekly_svg = std::fs::read_to_string(sent_out.join("sentiment/weekly.svg")).unwrap();
    assert_eq!(weekly_svg.matches("<circle").count(), scored_rows);

    let ent_out = dir.path().join("ent");
    let out = run(&[
        "entity",
        "--root",
        &corpus_s,
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--spec",
        entity.to_str().unwrap(),
        "--out",
        ent_out.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let rep_out = dir.path().join("rep");
    let out = run(&[
        "report",
        "--root",
        &corpus_s,
        "--word",
        "of",
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--out",
        rep_out.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(rep_out.join("report/report.svg").is_file());
    assert!(rep_out.join("report/sentiment.csv").is_file());
}

#[test]
fn entity_without_matches_writes_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    make_fixture(&corpus);
    let spec_path = dir.path().join("nobody.json");
    std::fs::write(&spec_path, r#"{"name": "Nobody", "aliases": ["Nobody"]}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "entity",
        "--root",
        corpus.to_str().unwrap(),
        "--lexicon",
        corpus.join("lexicon.csv").to_str().unwrap(),
        "--spec",
        spec_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(out_dir.join("sentiment/entity_nobody.csv")).unwrap();
    assert_eq!(csv, "entity,year,week_no,count,score\n");
}

#[test]
fn missing_lexicon_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    make_fixture(&corpus);
    let out = run(&[
        "sentiment",
        "--root",
        corpus.to_str().unwrap(),
        "--lexicon",
        "/nonexistent/lexicon.csv",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixture_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for root in [&a, &b] {
        let out = run(&[
            "fixture",
            "--seed",
            "5",
            "--out",
            root.to_str().unwrap(),
            "--years",
            "1",
            "--weeks",
            "2",
        ]);
        assert!(out.status.success());
    }
    let ga = std::fs::read(a.join("ground_truth.json")).unwrap();
    let gb = std::fs::read(b.join("ground_truth.json")).unwrap();
    assert_eq!(ga, gb);
    let pa = std::fs::read(a.join("1917/10/week1/page1.png")).unwrap();
    let pb = std::fs::read(b.join("1917/10/week1/page1.png")).unwrap();
    assert_eq!(pa, pb);
}
