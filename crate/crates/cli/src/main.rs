//! diaryforge: segment scanned diary pages into word snippets, compare
//! handwriting with MSE/SSIM/DTW, blend canonical word forms, and score
//! transcripts against a happiness lexicon.
//!
//! Exit codes: 0 success, 2 usage/input error, 3 insufficient data,
//! 4 internal error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use diaryforge_core::corpus::fixture::FixtureSpec;
use diaryforge_core::error::Error;
use diaryforge_core::pipeline::{
    run_canonical, run_entity, run_fixture, run_report, run_segment, run_sentiment,
    run_similarity, Config,
};
use diaryforge_core::similarity::Metric;

#[derive(Parser)]
#[command(name = "diaryforge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config-file plus per-flag overrides; explicit flags win over the file.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Binarization threshold (0-254).
    #[arg(long)]
    threshold: Option<u8>,
    /// Minimum box area kept after contour detection, in px^2.
    #[arg(long)]
    min_area: Option<u32>,
    /// Snippet target width in pixels.
    #[arg(long)]
    snippet_width: Option<u32>,
    /// Snippet target height in pixels.
    #[arg(long)]
    snippet_height: Option<u32>,
    /// Crop snippets from the grayscale page instead of the binarized one.
    #[arg(long)]
    crop_gray: bool,
    /// Exclude lexicon scores inside the open interval LO,HI.
    #[arg(long, value_name = "LO,HI")]
    neutral_band: Option<String>,
}

impl ConfigArgs {
    fn build(&self) -> Result<Config, Error> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(t) = self.threshold {
            cfg.threshold = t;
        }
        if let Some(a) = self.min_area {
            cfg.min_area = a;
        }
        if let Some(w) = self.snippet_width {
            cfg.snippet_width = w;
        }
        if let Some(h) = self.snippet_height {
            cfg.snippet_height = h;
        }
        if self.crop_gray {
            cfg.crop_from_gray = true;
        }
        if let Some(band) = &self.neutral_band {
            let parts: Vec<&str> = band.split(',').collect();
            let parsed = (parts.len() == 2)
                .then(|| {
                    Some((
                        parts[0].trim().parse::<f64>().ok()?,
                        parts[1].trim().parse::<f64>().ok()?,
                    ))
                })
                .flatten();
            match parsed {
                Some(b) => cfg.neutral_band = Some(b),
                None => {
                    return Err(Error::invalid(format!(
                        "neutral band must be 'LO,HI', got '{band}'"
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Segment every corpus page into word snippets.
    Segment {
        /// Corpus root laid out as <year>/<month>/week<k>/.
        #[arg(long)]
        root: PathBuf,
        /// Label manifest (defaults to <root>/ground_truth.json when present).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Output root.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Similarity matrices and comparison table for one snippet folder.
    Similarity {
        /// Folder of snippet PNGs.
        #[arg(long)]
        folder: PathBuf,
        /// mse, ssim, dtw, or all.
        #[arg(long, default_value = "all")]
        metric: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Canonical word forms per period and their cross-period comparison.
    Canonical {
        #[arg(long)]
        root: PathBuf,
        /// Target word, e.g. "of".
        #[arg(long)]
        word: String,
        /// Metric driving the clustering: mse, ssim, or dtw.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Weekly sentiment series and yearly box-plot statistics.
    Sentiment {
        #[arg(long)]
        root: PathBuf,
        /// Lexicon CSV with header word,happiness.
        #[arg(long)]
        lexicon: PathBuf,
        /// Optional entity spec JSON for a conditioned report.
        #[arg(long)]
        entity: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Entity-conditioned sentiment report.
    Entity {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        /// Entity spec JSON: {"name": "...", "aliases": ["..."]}.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Combined figure: sentiment series beside the canonical heatmap.
    Report {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long)]
        lexicon: PathBuf,
        /// Metric for the canonical heatmap: mse, ssim, or dtw.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate the seeded synthetic corpus with ground truth.
    Fixture {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "fixture")]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        years: u32,
        #[arg(long, default_value_t = 4)]
        weeks: u32,
        /// True instances of each word per period.
        #[arg(long, default_value_t = 6)]
        instances: u32,
        /// Mislabelled stamps per word group.
        #[arg(long, default_value_t = 1)]
        outliers: u32,
        /// Placement and intensity noise amplitude.
        #[arg(long, default_value_t = 1)]
        jitter: u32,
        /// Entries mentioning the planted entity.
        #[arg(long, default_value_t = 15)]
        entity_entries: u32,
    },
}

fn run(cli: Cli) -> Result<String, Error> {
    match cli.command {
        Command::Segment {
            root,
            labels,
            out,
            config,
        } => {
            let cfg = config.build()?;
            let summary = run_segment(&root, &cfg, labels.as_deref(), &out)?;
            for (period, count) in &summary.per_period {
                eprintln!("{period}: {count} snippets");
            }
            Ok(format!(
                "segment: {} snippets across {} periods -> {}",
                summary.total,
                summary.per_period.len(),
                out.display()
            ))
        }
        Command::Similarity {
            folder,
            metric,
            out,
            config,
        } => {
            let cfg = config.build()?;
            let chosen = match metric.as_str() {
                "all" => None,
                other => Some(Metric::from_str(other)?),
            };
            let summary = run_similarity(&folder, chosen, &cfg, &out)?;
            Ok(format!(
                "similarity: {} snippets, {} metric(s) -> {}",
                summary.snippet_count,
                summary.metrics.len(),
                out.display()
            ))
        }
        Command::Canonical {
            root,
            word,
            metric,
            labels,
            out,
            config,
        } => {
            let mut cfg = config.build()?;
            if let Some(m) = &metric {
                cfg.metric = Metric::from_str(m)?;
            }
            let summary = run_canonical(&root, &word, &cfg, labels.as_deref(), &out)?;
            for period in &summary.skipped {
                eprintln!("warning: {period} skipped, fewer than 2 '{word}' snippets");
            }
            Ok(format!(
                "canonical: {} periods of '{}' -> {}",
                summary.canonicals.len(),
                word,
                out.display()
            ))
        }
        Command::Sentiment {
            root,
            lexicon,
            entity,
            out,
            config,
        } => {
            let cfg = config.build()?;
            let summary = run_sentiment(&root, &lexicon, entity.as_deref(), &cfg, &out)?;
            for year in &summary.unscored_years {
                eprintln!("warning: year {year} has no scored weeks, omitted from yearly stats");
            }
            Ok(format!(
                "sentiment: {} weeks ({} scored), {} entity records -> {}",
                summary.weeks,
                summary.scored_weeks,
                summary.entity_records,
                out.display()
            ))
        }
        Command::Entity {
            root,
            lexicon,
            spec,
            out,
            config,
        } => {
            let cfg = config.build()?;
            let summary = run_entity(&root, &lexicon, &spec, &cfg, &out)?;
            Ok(format!(
                "entity: {} mentions, {} records -> {}",
                summary.mentions,
                summary.records,
                out.display()
            ))
        }
        Command::Report {
            root,
            word,
            lexicon,
            metric,
            labels,
            out,
            config,
        } => {
            let mut cfg = config.build()?;
            if let Some(m) = &metric {
                cfg.metric = Metric::from_str(m)?;
            }
            let summary = run_report(&root, &word, &lexicon, &cfg, labels.as_deref(), &out)?;
            Ok(format!(
                "report: '{}' over {} periods -> {}",
                word,
                summary.periods,
                out.display()
            ))
        }
        Command::Fixture {
            seed,
            out,
            years,
            weeks,
            instances,
            outliers,
            jitter,
            entity_entries,
        } => {
            let spec = FixtureSpec {
                years,
                weeks_per_year: weeks,
                instances_per_word: instances,
                outliers_per_word: outliers,
                jitter,
                entity_entries,
                ..FixtureSpec::default()
            };
            let summary = run_fixture(seed, &spec, &out)?;
            Ok(format!(
                "fixture: {} periods, {} stamps, {} entity entries -> {}",
                summary.periods,
                summary.stamps,
                summary.entity_entries,
                out.display()
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
