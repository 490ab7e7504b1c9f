//! Lexicon-based happiness scoring of transcripts: per-entry averages,
//! weekly series, yearly distribution statistics, and top/bottom evidence
//! words.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use crate::corpus::DiaryEntry;
use crate::error::{Error, Result};

/// Word -> happiness score in [1, 9].
#[derive(Debug, Clone)]
pub struct Lexicon {
    map: HashMap<String, f64>,
}

impl Lexicon {
    pub fn from_entries(entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut map = HashMap::new();
        for (word, score) in entries {
            let word = word.to_lowercase();
            if word.is_empty() {
                return Err(Error::invalid("lexicon words must be non-empty"));
            }
            if !(1.0..=9.0).contains(&score) {
                return Err(Error::invalid(format!(
                    "lexicon score {score} for '{word}' outside [1, 9]"
                )));
            }
            if map.insert(word.clone(), score).is_some() {
                return Err(Error::invalid(format!("duplicate lexicon word '{word}'")));
            }
        }
        Ok(Lexicon { map })
    }

    /// Load a two-column CSV with header `word,happiness`. Errors name the
    /// offending line.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, &path.display().to_string())
    }

    pub fn from_reader(reader: impl Read, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse {
            path: source.to_string(),
            line: 1,
            message: e.to_string(),
        })?;
        if headers.len() != 2 || &headers[0] != "word" || &headers[1] != "happiness" {
            return Err(Error::Parse {
                path: source.to_string(),
                line: 1,
                message: format!("expected header 'word,happiness', got '{headers:?}'"),
            });
        }
        let mut map = HashMap::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse {
                path: source.to_string(),
                line: e
                    .position()
                    .map(|p| p.line() as usize)
                    .unwrap_or_default(),
                message: e.to_string(),
            })?;
            let line = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or_default();
            if record.len() != 2 {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("expected 2 fields, got {}", record.len()),
                });
            }
            let word = record[0].to_lowercase();
            if word.is_empty() {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line,
                    message: "empty word".into(),
                });
            }
            let score: f64 = record[1].parse().map_err(|e| Error::Parse {
                path: source.to_string(),
                line,
                message: format!("bad score '{}': {e}", &record[1]),
            })?;
            if !(1.0..=9.0).contains(&score) {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("score {score} outside [1, 9]"),
                });
            }
            if map.insert(word.clone(), score).is_some() {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("duplicate word '{word}'"),
                });
            }
        }
        Ok(Lexicon { map })
    }

    pub fn score_of(&self, word: &str) -> Option<f64> {
        self.map.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Scoring knobs; the neutral band excludes lexicon words whose score falls
/// strictly inside the interval (off by default).
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct ScoreOptions {
    pub neutral_band: Option<(f64, f64)>,
}

impl ScoreOptions {
    fn admits(&self, score: f64) -> bool {
        match self.neutral_band {
            Some((lo, hi)) => !(score > lo && score < hi),
            None => true,
        }
    }
}

/// Normalize raw transcript text: lowercase, strip everything but
/// alphanumerics, apostrophes, and hyphens between alphanumerics, collapse
/// whitespace.
pub fn clean_text(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let chars: Vec<char> = lowered.chars().collect();
    let mut kept = String::with_capacity(lowered.len());
    for (i, &c) in chars.iter().enumerate() {
        let keep = if c.is_alphanumeric() || c == '\'' || c == '\u{2019}' {
            true
        } else if c == '-' {
            let prev_ok = i > 0 && chars[i - 1].is_alphanumeric();
            let next_ok = i + 1 < chars.len() && chars[i + 1].is_alphanumeric();
            prev_ok && next_ok
        } else {
            false
        };
        if c == '\u{2019}' {
            kept.push('\'');
        } else if keep {
            kept.push(c);
        } else {
            kept.push(' ');
        }
    }
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Mean lexicon score with token-level repeat counting.
#[derive(Debug, Clone, PartialEq)]
pub struct TextScore {
    pub score: Option<f64>,
    pub in_vocab_tokens: usize,
    pub total_tokens: usize,
}

/// Average the lexicon scores of the in-vocabulary tokens of cleaned text;
/// out-of-vocabulary tokens are ignored, zero matches give an absent score.
pub fn score_text(text: &str, lex: &Lexicon, opts: &ScoreOptions) -> TextScore {
    let mut total = 0usize;
    let mut matched = 0usize;
    let mut sum = 0.0;
    for token in text.split_whitespace() {
        total += 1;
        if let Some(score) = lex.score_of(token) {
            if opts.admits(score) {
                matched += 1;
                sum += score;
            }
        }
    }
    TextScore {
        score: (matched > 0).then(|| sum / matched as f64),
        in_vocab_tokens: matched,
        total_tokens: total,
    }
}

/// Distinct in-vocabulary words ranked by score: top k descending and bottom
/// k ascending, ties broken alphabetically.
pub fn top_bottom(
    text: &str,
    lex: &Lexicon,
    k: usize,
    opts: &ScoreOptions,
) -> (Vec<(String, f64)>, Vec<(String, f64)>) {
    let mut seen = HashSet::new();
    let mut scored: Vec<(String, f64)> = Vec::new();
    for token in text.split_whitespace() {
        if let Some(score) = lex.score_of(token) {
            if opts.admits(score) && seen.insert(token.to_string()) {
                scored.push((token.to_string(), score));
            }
        }
    }
    let mut top = scored.clone();
    top.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    top.truncate(k);
    let mut bottom = scored;
    bottom.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    bottom.truncate(k);
    (top, bottom)
}

/// Weekly sentiment of one diary entry, with evidence words.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentRecord {
    pub year: i32,
    pub month: u32,
    pub week_no: u32,
    pub week_date: String,
    pub score: Option<f64>,
    pub in_vocab_tokens: usize,
    pub total_tokens: usize,
    pub top5: Vec<(String, f64)>,
    pub bottom5: Vec<(String, f64)>,
}

impl SentimentRecord {
    pub fn from_entry(entry: &DiaryEntry, lex: &Lexicon, opts: &ScoreOptions) -> SentimentRecord {
        let ts = score_text(&entry.text, lex, opts);
        let (top5, bottom5) = top_bottom(&entry.text, lex, 5, opts);
        SentimentRecord {
            year: entry.year,
            month: entry.month,
            week_no: entry.week_no,
            week_date: entry.week_date.clone(),
            score: ts.score,
            in_vocab_tokens: ts.in_vocab_tokens,
            total_tokens: ts.total_tokens,
            top5,
            bottom5,
        }
    }
}

/// One record per entry in chronological (year, week_no) order; entries with
/// no in-vocabulary tokens keep an absent score so gaps stay visible.
pub fn weekly_series(
    entries: &[DiaryEntry],
    lex: &Lexicon,
    opts: &ScoreOptions,
) -> Result<Vec<SentimentRecord>> {
    let mut seen: HashMap<(i32, u32), usize> = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        if let Some(&first) = seen.get(&(e.year, e.week_no)) {
            return Err(Error::DuplicateKey {
                key: format!("year {} week {}", e.year, e.week_no),
                first: format!("entry #{first}"),
                second: format!("entry #{i}"),
            });
        }
        seen.insert((e.year, e.week_no), i);
    }
    let mut records: Vec<SentimentRecord> = entries
        .iter()
        .map(|e| SentimentRecord::from_entry(e, lex, opts))
        .collect();
    records.sort_by_key(|r| (r.year, r.week_no));
    Ok(records)
}

/// Five-number summary plus mean of the scored weeks of one year.
#[derive(Debug, Clone, PartialEq)]
pub struct YearStats {
    pub year: i32,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Inclusive linear-interpolation quantile of sorted values.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-year box-plot statistics over present scores; years with zero scored
/// weeks are omitted.
pub fn year_stats(series: &[SentimentRecord]) -> Vec<YearStats> {
    let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for r in series {
        if let Some(s) = r.score {
            by_year.entry(r.year).or_default().push(s);
        }
    }
    by_year
        .into_iter()
        .map(|(year, mut scores)| {
            scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            YearStats {
                year,
                min: scores[0],
                q1: quantile(&scores, 0.25),
                median: quantile(&scores, 0.5),
                q3: quantile(&scores, 0.75),
                max: scores[scores.len() - 1],
                mean,
            }
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV form of the weekly series: year,month,week_no,week_date,score,in_vocab,total.
pub fn series_csv(series: &[SentimentRecord]) -> String {
    let mut out = String::from("year,month,week_no,week_date,score,in_vocab,total\n");
    for r in series {
        let score = r.score.map(|s| format!("{s:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.year,
            r.month,
            r.week_no,
            csv_field(&r.week_date),
            score,
            r.in_vocab_tokens,
            r.total_tokens
        ));
    }
    out
}

/// CSV form of yearly statistics: year,min,q1,median,q3,max,mean.
pub fn year_stats_csv(stats: &[YearStats]) -> String {
    let mut out = String::from("year,min,q1,median,q3,max,mean\n");
    for s in stats {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            s.year, s.min, s.q1, s.median, s.q3, s.max, s.mean
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(pairs: &[(&str, f64)]) -> Lexicon {
        Lexicon::from_entries(pairs.iter().map(|(w, s)| (w.to_string(), *s))).unwrap()
    }

    fn entry(year: i32, week: u32, text: &str) -> DiaryEntry {
        DiaryEntry {
            year,
            month: 10,
            week_no: week,
            week_date: String::new(),
            text: clean_text(text),
        }
    }

    #[test]
    fn load_two_rows() {
        let csv = "word,happiness\ngood,7.0\nbad,3.0\n";
        let lex = Lexicon::from_reader(csv.as_bytes(), "mem").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.score_of("good"), Some(7.0));
    }

    #[test]
    fn load_rejects_duplicate_naming_line() {
        let csv = "word,happiness\ngood,7.0\ngood,6.0\n";
        let err = Lexicon::from_reader(csv.as_bytes(), "mem").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mem:3"), "line missing from: {msg}");
        assert!(msg.contains("duplicate"));
    }

    #[test]
    fn load_rejects_out_of_range_score() {
        let csv = "word,happiness\ngood,9.5\n";
        let err = Lexicon::from_reader(csv.as_bytes(), "mem").unwrap_err();
        assert!(err.to_string().contains("outside [1, 9]"));
    }

    #[test]
    fn load_rejects_malformed_row() {
        let csv = "word,happiness\ngood,abc\n";
        assert!(Lexicon::from_reader(csv.as_bytes(), "mem").is_err());
        let csv = "word,happiness\n,5.0\n";
        assert!(Lexicon::from_reader(csv.as_bytes(), "mem").is_err());
    }

    #[test]
    fn load_rejects_wrong_header() {
        let csv = "token,score\ngood,7.0\n";
        assert!(Lexicon::from_reader(csv.as_bytes(), "mem").is_err());
    }

    #[test]
    fn clean_keeps_unicode_words() {
        assert_eq!(clean_text("Went to  Trá Mór!!"), "went to trá mór");
    }

    #[test]
    fn clean_empty_is_empty() {
        assert_eq!(clean_text(""), "");
    }

    #[test]
    fn clean_double_hyphen_separates() {
        assert_eq!(clean_text("don't--stop"), "don't stop");
        assert_eq!(clean_text("well-known"), "well-known");
        assert_eq!(clean_text("-dash at края-"), "dash at края");
    }

    #[test]
    fn clean_is_idempotent_on_samples() {
        for s in [
            "Went to  Trá Mór!!",
            "don't--stop",
            "İstanbul 42nd; St.",
            "a—b — c",
            "semi;colon, and.dots",
        ] {
            let once = clean_text(s);
            assert_eq!(clean_text(&once), once, "not idempotent for {s:?}");
        }
    }

    #[test]
    fn score_mean_of_two() {
        let l = lex(&[("glad", 8.0), ("grim", 2.0)]);
        let ts = score_text("glad grim", &l, &ScoreOptions::default());
        assert_eq!(ts.score, Some(5.0));
        assert_eq!(ts.in_vocab_tokens, 2);
        assert_eq!(ts.total_tokens, 2);
    }

    #[test]
    fn score_absent_when_all_oov() {
        let l = lex(&[("glad", 8.0)]);
        let ts = score_text("entirely unknown words", &l, &ScoreOptions::default());
        assert_eq!(ts.score, None);
        assert_eq!(ts.in_vocab_tokens, 0);
        assert_eq!(ts.total_tokens, 3);
    }

    #[test]
    fn score_counts_repeats() {
        let l = lex(&[("a", 5.0), ("happy", 8.0)]);
        let ts = score_text("a happy happy day", &l, &ScoreOptions::default());
        assert_eq!(ts.score, Some(7.0));
        assert_eq!(ts.in_vocab_tokens, 3);
        assert_eq!(ts.total_tokens, 4);
    }

    #[test]
    fn score_oov_token_neutral() {
        let l = lex(&[("glad", 8.0), ("grim", 2.0)]);
        let base = score_text("glad grim", &l, &ScoreOptions::default());
        let with_oov = score_text("glad grim zzzz", &l, &ScoreOptions::default());
        assert_eq!(base.score, with_oov.score);
    }

    #[test]
    fn score_duplication_invariance() {
        let l = lex(&[("glad", 8.0), ("grim", 2.0), ("so", 5.5)]);
        let text = "glad so grim so glad";
        let once = score_text(text, &l, &ScoreOptions::default()).score.unwrap();
        let doubled = score_text(&format!("{text} {text}"), &l, &ScoreOptions::default())
            .score
            .unwrap();
        assert!((once - doubled).abs() < 1e-12);
    }

    #[test]
    fn neutral_band_drops_middle_words() {
        let l = lex(&[("meh", 5.0), ("glad", 8.0)]);
        let opts = ScoreOptions {
            neutral_band: Some((4.0, 6.0)),
        };
        let ts = score_text("meh glad", &l, &opts);
        assert_eq!(ts.score, Some(8.0));
        assert_eq!(ts.in_vocab_tokens, 1);
    }

    #[test]
    fn top_bottom_short_lists() {
        let l = lex(&[("a", 2.0), ("b", 5.0), ("c", 8.0)]);
        let (top, bottom) = top_bottom("a b c", &l, 5, &ScoreOptions::default());
        assert_eq!(top.len(), 3);
        assert_eq!(bottom.len(), 3);
        assert!(top_bottom("", &l, 5, &ScoreOptions::default()).0.is_empty());
    }

    #[test]
    fn top_bottom_rankings_with_ties() {
        let l = lex(&[
            ("w9", 9.0),
            ("w8", 8.0),
            ("w7", 7.0),
            ("w2", 2.0),
            ("w1", 1.0),
            ("aa5", 5.0),
            ("bb5", 5.0),
        ]);
        let (top, bottom) = top_bottom(
            "w9 w8 w7 w2 w1 aa5 bb5",
            &l,
            5,
            &ScoreOptions::default(),
        );
        let top_scores: Vec<f64> = top.iter().map(|t| t.1).collect();
        assert_eq!(top_scores, vec![9.0, 8.0, 7.0, 5.0, 5.0]);
        assert_eq!(top[3].0, "aa5");
        let bottom_scores: Vec<f64> = bottom.iter().map(|t| t.1).collect();
        assert_eq!(bottom_scores, vec![1.0, 2.0, 5.0, 5.0, 7.0]);
        assert_eq!(bottom[2].0, "aa5");
    }

    #[test]
    fn top_bottom_disjoint_with_enough_words() {
        let l = lex(&[
            ("q1", 1.0),
            ("q2", 2.0),
            ("q3", 3.0),
            ("q4", 4.0),
            ("q5", 5.0),
            ("q6", 6.0),
            ("q7", 7.0),
            ("q8", 8.0),
            ("q9", 9.0),
            ("q9b", 8.5),
        ]);
        let (top, bottom) = top_bottom(
            "q1 q2 q3 q4 q5 q6 q7 q8 q9 q9b",
            &l,
            5,
            &ScoreOptions::default(),
        );
        let top_words: HashSet<&str> = top.iter().map(|t| t.0.as_str()).collect();
        assert!(bottom.iter().all(|b| !top_words.contains(b.0.as_str())));
    }

    #[test]
    fn weekly_series_ordering_and_gaps() {
        let l = lex(&[("glad", 8.0)]);
        let entries = vec![
            entry(1918, 2, "glad day"),
            entry(1917, 1, "glad glad"),
            entry(1917, 3, ""),
        ];
        let series = weekly_series(&entries, &l, &ScoreOptions::default()).unwrap();
        assert_eq!(series.len(), 3);
        assert_eq!((series[0].year, series[0].week_no), (1917, 1));
        assert_eq!((series[1].year, series[1].week_no), (1917, 3));
        assert_eq!((series[2].year, series[2].week_no), (1918, 2));
        assert_eq!(series[1].score, None);
        let keys: Vec<(i32, u32)> = series.iter().map(|r| (r.year, r.week_no)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn weekly_series_rejects_duplicate_keys() {
        let l = lex(&[]);
        let entries = vec![entry(1917, 1, "x"), entry(1917, 1, "y")];
        let err = weekly_series(&entries, &l, &ScoreOptions::default()).unwrap_err();
        assert!(err.to_string().contains("1917"));
    }

    #[test]
    fn weekly_series_mean_matches_individual_scores() {
        let l = lex(&[("glad", 8.0), ("grim", 2.0), ("walk", 6.0)]);
        let words = ["glad", "grim", "walk"];
        let entries: Vec<DiaryEntry> = (0..52)
            .map(|i| {
                let w = words[i % 3];
                entry(1917, i as u32 + 1, &format!("{w} {w} day"))
            })
            .collect();
        let series = weekly_series(&entries, &l, &ScoreOptions::default()).unwrap();
        let series_mean: f64 = series.iter().filter_map(|r| r.score).sum::<f64>() / 52.0;
        let direct_mean: f64 = entries
            .iter()
            .filter_map(|e| score_text(&e.text, &l, &ScoreOptions::default()).score)
            .sum::<f64>()
            / 52.0;
        assert!((series_mean - direct_mean).abs() < 1e-12);
    }

    #[test]
    fn quartiles_inclusive_interpolation() {
        let l = lex(&[("w4", 4.0), ("w5", 5.0), ("w6", 6.0)]);
        let entries = vec![
            entry(1917, 1, "w4"),
            entry(1917, 2, "w5"),
            entry(1917, 3, "w6"),
        ];
        let series = weekly_series(&entries, &l, &ScoreOptions::default()).unwrap();
        let stats = year_stats(&series);
        assert_eq!(stats.len(), 1);
        let s = &stats[0];
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (4.0, 4.5, 5.0, 5.5, 6.0));
        assert!((s.mean - 5.0).abs() < 1e-12);
    }

    #[test]
    fn single_score_collapses_stats() {
        let l = lex(&[("v", 5.2)]);
        let series = weekly_series(&[entry(1917, 1, "v")], &l, &ScoreOptions::default()).unwrap();
        let s = &year_stats(&series)[0];
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max, s.mean), (5.2, 5.2, 5.2, 5.2, 5.2, 5.2));
    }

    #[test]
    fn unscored_year_omitted() {
        let l = lex(&[("glad", 8.0)]);
        let entries = vec![entry(1917, 1, "glad"), entry(1918, 1, "nothing known")];
        let series = weekly_series(&entries, &l, &ScoreOptions::default()).unwrap();
        let stats = year_stats(&series);
        assert_eq!(stats.len(), 1);
        assert_eq!(stats[0].year, 1917);
    }

    #[test]
    fn stats_are_ordered() {
        let l = lex(&[("a", 2.0), ("b", 4.0), ("c", 6.5), ("d", 8.0)]);
        let entries = vec![
            entry(1917, 1, "a b"),
            entry(1917, 2, "c"),
            entry(1917, 3, "d d a"),
            entry(1917, 4, "b c d"),
        ];
        let series = weekly_series(&entries, &l, &ScoreOptions::default()).unwrap();
        let s = &year_stats(&series)[0];
        assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
    }

    #[test]
    fn series_csv_has_gap_rows() {
        let l = lex(&[("glad", 8.0)]);
        let entries = vec![entry(1917, 1, "glad"), entry(1917, 2, "zzz")];
        let series = weekly_series(&entries, &l, &ScoreOptions::default()).unwrap();
        let csv = series_csv(&series);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "year,month,week_no,week_date,score,in_vocab,total");
        assert!(lines[1].starts_with("1917,10,1,,8.000000,1,1"));
        assert!(lines[2].starts_with("1917,10,2,,,0,1"));
    }
}
