//! End-to-end command orchestration shared by the CLI and the test suites:
//! each `run_*` function is deterministic given (inputs, config, seed) and
//! records everything it writes in a hash manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::chart;
use crate::cluster::{canonical_pipeline_k, compare_canonicals, CanonicalForm};
use crate::corpus::{
    self, fixture::FixtureGroundTruth, fixture::FixtureSpec, fixture::StampRecord, load_entries,
    page_identifier, scan, Manifest, OutputWriter, Period,
};
use crate::entities::{self, EntitySpec};
use crate::error::{Error, Result};
use crate::hedonometer::{
    series_csv, weekly_series, year_stats, year_stats_csv, Lexicon, ScoreOptions,
};
use crate::imagecore::GrayImage;
use crate::io::load_image;
use crate::segmentation::{segment_page, SegmentationConfig, WordSnippet};
use crate::similarity::{
    align_images, matrix_from_images, table_from_images, Metric, SimilarityConfig, SsimOptions,
};

/// Effective pipeline configuration; JSON-loadable, echoed into every
/// manifest for provenance.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Config {
    pub threshold: u8,
    pub line_kernel: (u32, u32),
    pub word_kernel: (u32, u32),
    pub min_area: u32,
    pub snippet_width: u32,
    pub snippet_height: u32,
    pub ssim_window: u32,
    pub ssim_gaussian: bool,
    pub metric: Metric,
    pub clusters: usize,
    pub neutral_band: Option<(f64, f64)>,
    pub crop_from_gray: bool,
    pub cap_width: u32,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            threshold: 155,
            line_kernel: (25, 1),
            word_kernel: (3, 3),
            min_area: 64,
            snippet_width: 128,
            snippet_height: 64,
            ssim_window: 7,
            ssim_gaussian: false,
            metric: Metric::Dtw,
            clusters: 2,
            neutral_band: None,
            crop_from_gray: false,
            cap_width: 1000,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = serde_json::from_str(&raw).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check every field against the preconditions of the module that owns
    /// it, so bad values fail at startup rather than mid-run.
    pub fn validate(&self) -> Result<()> {
        if self.threshold == u8::MAX {
            return Err(Error::invalid("threshold must be below 255"));
        }
        for (w, h) in [self.line_kernel, self.word_kernel] {
            if w == 0 || h == 0 || w % 2 == 0 || h % 2 == 0 {
                return Err(Error::invalid(format!(
                    "kernel dimensions must be odd and positive, got {w}x{h}"
                )));
            }
        }
        if self.snippet_width == 0 || self.snippet_height == 0 {
            return Err(Error::invalid("snippet target dimensions must be positive"));
        }
        if self.ssim_window < 2
            || self.ssim_window > self.snippet_width.min(self.snippet_height)
        {
            return Err(Error::invalid(format!(
                "ssim window {} must fit the {}x{} snippet target",
                self.ssim_window, self.snippet_width, self.snippet_height
            )));
        }
        if self.clusters < 2 {
            return Err(Error::invalid("cluster count must be at least 2"));
        }
        if let Some((lo, hi)) = self.neutral_band {
            if lo >= hi {
                return Err(Error::invalid("neutral band must be an open interval"));
            }
        }
        if self.cap_width == 0 {
            return Err(Error::invalid("width cap must be at least 1"));
        }
        Ok(())
    }

    pub fn segmentation(&self) -> SegmentationConfig {
        SegmentationConfig {
            threshold: self.threshold,
            line_kernel: self.line_kernel,
            word_kernel: self.word_kernel,
            iterations: 1,
            min_area: self.min_area,
            crop_from_gray: self.crop_from_gray,
        }
    }

    pub fn similarity(&self) -> SimilarityConfig {
        SimilarityConfig {
            target_w: self.snippet_width,
            target_h: self.snippet_height,
            ssim: SsimOptions {
                window: self.ssim_window,
                gaussian: self.ssim_gaussian,
            },
            profile_threshold: self.threshold,
        }
    }

    pub fn score_options(&self) -> ScoreOptions {
        ScoreOptions {
            neutral_band: self.neutral_band,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Load ground-truth stamps to use as the snippet label source, if present.
fn load_labels(path: Option<&Path>, corpus_root: &Path) -> Result<Vec<StampRecord>> {
    match path {
        Some(p) => Ok(FixtureGroundTruth::load(p)?.stamps),
        None => {
            let default = corpus_root.join("ground_truth.json");
            if default.is_file() {
                Ok(FixtureGroundTruth::load(&default)?.stamps)
            } else {
                Ok(Vec::new())
            }
        }
    }
}

/// Word label for a snippet: the stamp on the same page whose center falls
/// inside the snippet box, nearest to the box center if several do.
fn label_for(snippet: &WordSnippet, stamps: &[StampRecord]) -> Option<String> {
    let (bx, by) = snippet.bounds.center();
    stamps
        .iter()
        .filter(|s| s.page_id == snippet.page_id)
        .filter(|s| {
            let (cx, cy) = s.bounds.center();
            snippet.bounds.contains(cx, cy)
        })
        .min_by_key(|s| {
            let (cx, cy) = s.bounds.center();
            let dx = cx as i64 - bx as i64;
            let dy = cy as i64 - by as i64;
            dx * dx + dy * dy
        })
        .map(|s| s.label.clone())
}

/// Segment every page of the corpus in memory.
fn segment_corpus(corpus_root: &Path, cfg: &Config) -> Result<Vec<WordSnippet>> {
    let layout = scan(corpus_root)?;
    let seg_cfg = cfg.segmentation();
    let mut snippets = Vec::new();
    for period in &layout.periods {
        for image_path in &period.images {
            let stem = image_path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("page");
            let page_id = page_identifier(period.period, stem);
            let gray = load_image(image_path)?.into_gray();
            let capped = gray.resize_capped(cfg.cap_width)?;
            snippets.extend(segment_page(&capped, &page_id, period.period, &seg_cfg)?);
        }
    }
    Ok(snippets)
}

#[derive(Debug, serde::Serialize)]
struct SnippetRecord {
    page_id: String,
    label: String,
    line: usize,
    word: usize,
    bounds: crate::segmentation::BoundingBox,
}

#[derive(Debug)]
pub struct SegmentSummary {
    pub per_period: Vec<(Period, usize)>,
    pub total: usize,
    pub manifest: Manifest,
}

/// Segment all pages, persist snippets under
/// `segments/<year>/<month>/week<k>/<label>/<page>_<line>_<word>.png`, and
/// record box coordinates and ordering in `segments.json`.
pub fn run_segment(
    corpus_root: &Path,
    cfg: &Config,
    labels_path: Option<&Path>,
    out_root: &Path,
) -> Result<SegmentSummary> {
    cfg.validate()?;
    let stamps = load_labels(labels_path, corpus_root)?;
    let snippets = segment_corpus(corpus_root, cfg)?;
    let mut writer = OutputWriter::new(out_root)?;
    let mut per_period: BTreeMap<Period, usize> = BTreeMap::new();
    let mut records = Vec::new();
    for snippet in &snippets {
        let label = label_for(snippet, &stamps).unwrap_or_else(|| "unlabeled".to_string());
        let period = snippet.period;
        let rel = format!(
            "{}/{}/week{}/{}/{}.png",
            period.year,
            period.month,
            period.week,
            label,
            snippet.label()
        );
        writer.write_bytes(&rel, &crate::io::encode_gray_png(&snippet.image)?, "segment")?;
        *per_period.entry(period).or_default() += 1;
        records.push(SnippetRecord {
            page_id: snippet.page_id.clone(),
            label,
            line: snippet.line_index,
            word: snippet.word_index,
            bounds: snippet.bounds,
        });
    }
    let listing = serde_json::to_string_pretty(&records)
        .map_err(|e| Error::Internal(format!("segment listing: {e}")))?;
    writer.write_text("segments.json", &format!("{listing}\n"), "segment")?;
    let manifest = writer.finish(cfg.to_json())?;
    Ok(SegmentSummary {
        per_period: per_period.into_iter().collect(),
        total: snippets.len(),
        manifest,
    })
}

#[derive(Debug)]
pub struct SimilaritySummary {
    pub snippet_count: usize,
    pub metrics: Vec<Metric>,
    pub manifest: Manifest,
}

/// Build matrices, heatmaps, and the comparison table for one folder of
/// snippet images.
pub fn run_similarity(
    folder: &Path,
    metric: Option<Metric>,
    cfg: &Config,
    out_root: &Path,
) -> Result<SimilaritySummary> {
    cfg.validate()?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(folder)
        .map_err(|e| Error::io(folder, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(folder, e))?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| e.eq_ignore_ascii_case("png"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "similarity needs at least 2 snippets, found {} in {}",
            paths.len(),
            folder.display()
        )));
    }
    let labels: Vec<String> = paths
        .iter()
        .map(|p| {
            p.file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("snippet")
                .to_string()
        })
        .collect();
    let raw: Vec<GrayImage> = paths
        .iter()
        .map(|p| Ok(load_image(p)?.into_gray()))
        .collect::<Result<Vec<_>>>()?;
    let sim_cfg = cfg.similarity();
    let images = align_images(raw.iter(), sim_cfg.target_w, sim_cfg.target_h)?;

    let metrics: Vec<Metric> = metric.map(|m| vec![m]).unwrap_or_else(|| Metric::all().to_vec());
    let mut writer = OutputWriter::new(out_root)?;
    for &m in &metrics {
        let matrix = matrix_from_images(&images, labels.clone(), m, &sim_cfg)?;
        let stem = m.name().to_lowercase();
        writer.write_text(&format!("{stem}.csv"), &matrix.to_csv(), "similarity")?;
        writer.write_text(
            &format!("{stem}.svg"),
            &chart::heatmap_svg(&matrix, &format!("{} similarity", m.name())),
            "similarity",
        )?;
    }
    let table = table_from_images(&images, &labels, 0, &sim_cfg)?;
    writer.write_text("comparison.csv", &table.to_csv(), "similarity")?;
    let manifest = writer.finish(cfg.to_json())?;
    Ok(SimilaritySummary {
        snippet_count: paths.len(),
        metrics,
        manifest,
    })
}

#[derive(Debug)]
pub struct CanonicalSummary {
    pub canonicals: Vec<CanonicalForm>,
    pub skipped: Vec<Period>,
    pub manifest: Manifest,
}

/// Labelled snippets of `word`, grouped by period.
fn word_groups(
    corpus_root: &Path,
    word: &str,
    cfg: &Config,
    labels_path: Option<&Path>,
) -> Result<BTreeMap<Period, Vec<WordSnippet>>> {
    let stamps = load_labels(labels_path, corpus_root)?;
    if stamps.is_empty() {
        return Err(Error::InsufficientData(
            "no label manifest found; canonical groups need labelled snippets".into(),
        ));
    }
    let snippets = segment_corpus(corpus_root, cfg)?;
    let mut groups: BTreeMap<Period, Vec<WordSnippet>> = BTreeMap::new();
    for snippet in snippets {
        if label_for(&snippet, &stamps).as_deref() == Some(word) {
            groups.entry(snippet.period).or_default().push(snippet);
        }
    }
    Ok(groups)
}

/// Canonical form per period for one word, plus the cross-period comparison.
pub fn run_canonical(
    corpus_root: &Path,
    word: &str,
    cfg: &Config,
    labels_path: Option<&Path>,
    out_root: &Path,
) -> Result<CanonicalSummary> {
    cfg.validate()?;
    let groups = word_groups(corpus_root, word, cfg, labels_path)?;
    let sim_cfg = cfg.similarity();
    let mut writer = OutputWriter::new(out_root)?;
    let mut canonicals = Vec::new();
    let mut skipped = Vec::new();
    for (period, group) in &groups {
        if group.len() < 2 {
            skipped.push(*period);
            continue;
        }
        let form = canonical_pipeline_k(group, word, cfg.metric, &sim_cfg, cfg.clusters)?;
        writer.write_bytes(
            &format!("canonical/{word}/{period}.png"),
            &crate::io::encode_gray_png(&form.image)?,
            "canonical",
        )?;
        canonicals.push(form);
    }
    if canonicals.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no period has at least 2 labelled '{word}' snippets"
        )));
    }
    if canonicals.len() >= 2 {
        let comparison = compare_canonicals(&canonicals, &sim_cfg)?;
        for matrix in &comparison.matrices {
            let stem = matrix.metric.name().to_lowercase();
            writer.write_text(
                &format!("canonical/{word}/cross_{stem}.csv"),
                &matrix.to_csv(),
                "canonical",
            )?;
            writer.write_text(
                &format!("canonical/{word}/cross_{stem}.svg"),
                &chart::heatmap_svg(
                    matrix,
                    &format!("canonical {} across periods", matrix.metric.name()),
                ),
                "canonical",
            )?;
        }
        writer.write_text(
            &format!("canonical/{word}/comparison.csv"),
            &comparison.table.to_csv(),
            "canonical",
        )?;
    }
    let manifest = writer.finish(cfg.to_json())?;
    Ok(CanonicalSummary {
        canonicals,
        skipped,
        manifest,
    })
}

#[derive(Debug)]
pub struct SentimentSummary {
    pub weeks: usize,
    pub scored_weeks: usize,
    pub entity_records: usize,
    /// Years whose weeks all lack in-vocabulary tokens, omitted from the
    /// yearly statistics.
    pub unscored_years: Vec<i32>,
    pub manifest: Manifest,
}

/// Weekly series, yearly box-plot stats, and (optionally) the
/// entity-conditioned report.
pub fn run_sentiment(
    corpus_root: &Path,
    lexicon_path: &Path,
    entity_spec_path: Option<&Path>,
    cfg: &Config,
    out_root: &Path,
) -> Result<SentimentSummary> {
    cfg.validate()?;
    let layout = scan(corpus_root)?;
    let entries = load_entries(&layout)?;
    if entries.is_empty() {
        return Err(Error::InsufficientData(
            "no weekly transcripts found in the corpus".into(),
        ));
    }
    let lexicon = Lexicon::load_csv(lexicon_path)?;
    let opts = cfg.score_options();
    let series = weekly_series(&entries, &lexicon, &opts)?;
    let stats = year_stats(&series);
    let mut unscored_years: Vec<i32> = series
        .iter()
        .map(|r| r.year)
        .filter(|y| !stats.iter().any(|s| s.year == *y))
        .collect();
    unscored_years.dedup();

    let mut writer = OutputWriter::new(out_root)?;
    writer.write_text("sentiment/weekly.csv", &series_csv(&series), "sentiment")?;
    writer.write_text(
        "sentiment/weekly.svg",
        &chart::line_chart_svg(&series, "weekly sentiment"),
        "sentiment",
    )?;
    writer.write_text("sentiment/yearly.csv", &year_stats_csv(&stats), "sentiment")?;
    writer.write_text(
        "sentiment/yearly.svg",
        &chart::box_plot_svg(&stats, &[], None, "yearly sentiment"),
        "sentiment",
    )?;

    let mut entity_records = 0usize;
    if let Some(spec_path) = entity_spec_path {
        let spec = EntitySpec::load_json(spec_path)?;
        entity_records = write_entity_outputs(&mut writer, &entries, &spec, &lexicon, &opts, &stats)?;
    }
    let manifest = writer.finish(cfg.to_json())?;
    Ok(SentimentSummary {
        weeks: series.len(),
        scored_weeks: series.iter().filter(|r| r.score.is_some()).count(),
        entity_records,
        unscored_years,
        manifest,
    })
}

fn write_entity_outputs(
    writer: &mut OutputWriter,
    entries: &[crate::corpus::DiaryEntry],
    spec: &EntitySpec,
    lexicon: &Lexicon,
    opts: &ScoreOptions,
    stats: &[crate::hedonometer::YearStats],
) -> Result<usize> {
    let mentions = entities::find_mentions(entries, spec);
    let records = entities::entity_sentiment(entries, spec, lexicon, opts);
    let name = spec.name.to_lowercase();
    writer.write_text(
        &format!("sentiment/entity_{name}.csv"),
        &entities::entity_csv(spec, &mentions, &records),
        "entity",
    )?;
    let tables = records
        .first()
        .map(|r| (r.top5.as_slice(), r.bottom5.as_slice()));
    writer.write_text(
        &format!("sentiment/entity_{name}.svg"),
        &chart::box_plot_svg(
            stats,
            &records,
            tables,
            &format!("entries mentioning {}", spec.name),
        ),
        "entity",
    )?;
    Ok(records.len())
}

#[derive(Debug)]
pub struct EntitySummary {
    pub mentions: usize,
    pub records: usize,
    pub manifest: Manifest,
}

/// Entity-conditioned sentiment report on its own.
pub fn run_entity(
    corpus_root: &Path,
    lexicon_path: &Path,
    entity_spec_path: &Path,
    cfg: &Config,
    out_root: &Path,
) -> Result<EntitySummary> {
    cfg.validate()?;
    let layout = scan(corpus_root)?;
    let entries = load_entries(&layout)?;
    if entries.is_empty() {
        return Err(Error::InsufficientData(
            "no weekly transcripts found in the corpus".into(),
        ));
    }
    let lexicon = Lexicon::load_csv(lexicon_path)?;
    let spec = EntitySpec::load_json(entity_spec_path)?;
    let opts = cfg.score_options();
    let series = weekly_series(&entries, &lexicon, &opts)?;
    let stats = year_stats(&series);
    let mentions = entities::find_mentions(&entries, &spec);
    let mut writer = OutputWriter::new(out_root)?;
    let records = write_entity_outputs(&mut writer, &entries, &spec, &lexicon, &opts, &stats)?;
    let manifest = writer.finish(cfg.to_json())?;
    Ok(EntitySummary {
        mentions: mentions.len(),
        records,
        manifest,
    })
}

#[derive(Debug)]
pub struct ReportSummary {
    pub periods: usize,
    pub canonical_members: usize,
    pub manifest: Manifest,
}

/// Combined figure: per-period sentiment series beside the canonical
/// similarity heatmap, with the underlying CSVs.
pub fn run_report(
    corpus_root: &Path,
    word: &str,
    lexicon_path: &Path,
    cfg: &Config,
    labels_path: Option<&Path>,
    out_root: &Path,
) -> Result<ReportSummary> {
    cfg.validate()?;
    let layout = scan(corpus_root)?;
    let entries = load_entries(&layout)?;
    if entries.is_empty() {
        return Err(Error::InsufficientData(
            "no weekly transcripts found in the corpus".into(),
        ));
    }
    let lexicon = Lexicon::load_csv(lexicon_path)?;
    let opts = cfg.score_options();
    let mut series = weekly_series(&entries, &lexicon, &opts)?;
    // Periods whose transcript is missing stay visible as gaps in the
    // report series.
    for period in layout.transcript_gaps() {
        let key = (period.year, period.week);
        if !series.iter().any(|r| (r.year, r.week_no) == key) {
            series.push(crate::hedonometer::SentimentRecord {
                year: period.year,
                month: period.month,
                week_no: period.week,
                week_date: String::new(),
                score: None,
                in_vocab_tokens: 0,
                total_tokens: 0,
                top5: Vec::new(),
                bottom5: Vec::new(),
            });
        }
    }
    series.sort_by_key(|r| (r.year, r.week_no));

    let groups = word_groups(corpus_root, word, cfg, labels_path)?;
    let sim_cfg = cfg.similarity();
    let mut canonicals = Vec::new();
    for group in groups.values() {
        if group.len() >= 2 {
            canonicals.push(canonical_pipeline_k(
                group,
                word,
                cfg.metric,
                &sim_cfg,
                cfg.clusters,
            )?);
        }
    }
    if canonicals.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "report needs canonical forms for at least 2 periods of '{word}'"
        )));
    }
    let comparison = compare_canonicals(&canonicals, &sim_cfg)?;
    let matrix = comparison
        .matrices
        .iter()
        .find(|m| m.metric == cfg.metric)
        .expect("requested metric is always computed");

    let mut writer = OutputWriter::new(out_root)?;
    writer.write_text("report/sentiment.csv", &series_csv(&series), "report")?;
    let stem = cfg.metric.name().to_lowercase();
    writer.write_text(
        &format!("report/canonical_{stem}.csv"),
        &matrix.to_csv(),
        "report",
    )?;
    writer.write_text(
        "report/report.svg",
        &chart::report_svg(&series, matrix, &format!("'{word}' across periods")),
        "report",
    )?;
    let manifest = writer.finish(cfg.to_json())?;
    Ok(ReportSummary {
        periods: canonicals.len(),
        canonical_members: canonicals.iter().map(|c| c.member_count).sum(),
        manifest,
    })
}

#[derive(Debug)]
pub struct FixtureSummary {
    pub periods: usize,
    pub stamps: usize,
    pub entity_entries: usize,
}

/// Generate the seeded synthetic corpus.
pub fn run_fixture(seed: u64, spec: &FixtureSpec, out_root: &Path) -> Result<FixtureSummary> {
    let (layout, truth) = corpus::fixture::generate_fixture_corpus(seed, spec, out_root)?;
    Ok(FixtureSummary {
        periods: layout.periods.len(),
        stamps: truth.stamps.len(),
        entity_entries: truth.entity_entries.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrips_and_validates() {
        let cfg = Config::default();
        cfg.validate().unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: Config = serde_json::from_str(&json).unwrap();
        assert_eq!(back.threshold, cfg.threshold);
        assert_eq!(back.metric, cfg.metric);
    }

    #[test]
    fn config_partial_json_fills_defaults() {
        let cfg: Config = serde_json::from_str(r#"{"threshold": 140}"#).unwrap();
        assert_eq!(cfg.threshold, 140);
        assert_eq!(cfg.min_area, 64);
    }

    #[test]
    fn config_rejects_bad_values() {
        for json in [
            r#"{"threshold": 255}"#,
            r#"{"line_kernel": [24, 1]}"#,
            r#"{"ssim_window": 1}"#,
            r#"{"clusters": 1}"#,
            r#"{"neutral_band": [6.0, 4.0]}"#,
            r#"{"cap_width": 0}"#,
        ] {
            let cfg: Config = serde_json::from_str(json).unwrap();
            assert!(cfg.validate().is_err(), "accepted {json}");
        }
    }

    #[test]
    fn segment_missing_root_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_segment(
            &dir.path().join("absent"),
            &Config::default(),
            None,
            &dir.path().join("out"),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn similarity_needs_two_snippets() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::constant(20, 20, 100).unwrap();
        crate::io::save_gray_png(&img, &dir.path().join("one.png")).unwrap();
        let err = run_similarity(
            dir.path(),
            None,
            &Config::default(),
            &dir.path().join("out"),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
