//! Report-level behavior that spans modules: missing transcripts must stay
//! visible as gaps in the sentiment series panel.

use diaryforge_core::corpus::fixture::{generate_fixture_corpus, FixtureSpec};
use diaryforge_core::pipeline::{run_report, Config};

#[test]
fn report_keeps_missing_transcript_periods_as_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("corpus");
    let spec = FixtureSpec {
        years: 2,
        weeks_per_year: 2,
        instances_per_word: 3,
        entity_entries: 1,
        decoy_entries: 0,
        ..FixtureSpec::default()
    };
    generate_fixture_corpus(21, &spec, &root).unwrap();
    // Knock out one weekly transcript; its page images stay.
    std::fs::remove_file(root.join("1918/10/week2/transcript.txt")).unwrap();

    let out = dir.path().join("out");
    let cfg = Config::default();
    run_report(&root, "of", &root.join("lexicon.csv"), &cfg, None, &out).unwrap();

    let csv = std::fs::read_to_string(out.join("report/sentiment.csv")).unwrap();
    let gap_row = csv
        .lines()
        .find(|l| l.starts_with("1918,10,2,"))
        .expect("gap period must appear in the series");
    // year,month,week_no,week_date,score,in_vocab,total with empty score
    assert_eq!(gap_row, "1918,10,2,,,0,0");
    assert_eq!(csv.lines().count(), 1 + 4, "header plus all four periods");

    // The remaining weeks keep their scores.
    assert!(csv
        .lines()
        .any(|l| l.starts_with("1917,10,1,") && !l.contains(",,0,0")));
}
