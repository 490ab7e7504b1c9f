//! Corpus ingestion: the year/month/week folder layout, transcript parsing,
//! and the deterministic output writer with its hash manifest.

pub mod fixture;

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hedonometer::clean_text;

/// One (year, month, week) cell of the corpus timeline.
#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    serde::Serialize,
    serde::Deserialize,
)]
pub struct Period {
    pub year: i32,
    pub month: u32,
    pub week: u32,
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}_week{}", self.year, self.month, self.week)
    }
}

/// Identifier joining a page image to its period, used in snippet labels and
/// ground-truth manifests.
pub fn page_identifier(period: Period, stem: &str) -> String {
    format!("{period}_{stem}")
}

/// Files discovered for one period.
#[derive(Debug, Clone)]
pub struct PeriodEntry {
    pub period: Period,
    pub dir: PathBuf,
    pub images: Vec<PathBuf>,
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct CorpusLayout {
    pub root: PathBuf,
    pub periods: Vec<PeriodEntry>,
}

impl CorpusLayout {
    /// Periods that have images but no transcript.
    pub fn transcript_gaps(&self) -> Vec<Period> {
        self.periods
            .iter()
            .filter(|p| p.transcript.is_none())
            .map(|p| p.period)
            .collect()
    }
}

/// One parsed weekly transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiaryEntry {
    pub year: i32,
    pub month: u32,
    pub week_no: u32,
    pub week_date: String,
    /// Cleaned transcript body; may be empty.
    pub text: String,
}

fn sorted_dir(path: &Path) -> Result<Vec<PathBuf>> {
    let mut items: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))?
        .into_iter()
        .map(|e| e.path())
        .collect();
    items.sort();
    Ok(items)
}

/// Discover `<year>/<month>/week<k>/` folders under the root. Years must be
/// 4-digit numbers, weeks 1 through 5; anything else is skipped. Missing
/// transcripts are recorded as gaps, not errors.
pub fn scan(root: &Path) -> Result<CorpusLayout> {
    let mut periods = Vec::new();
    for year_dir in sorted_dir(root)? {
        if !year_dir.is_dir() {
            continue;
        }
        let Some(year) = year_dir
            .file_name()
            .and_then(|n| n.to_str())
            .filter(|n| n.len() == 4)
            .and_then(|n| n.parse::<i32>().ok())
        else {
            continue;
        };
        for month_dir in sorted_dir(&year_dir)? {
            if !month_dir.is_dir() {
                continue;
            }
            let Some(month) = month_dir
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.parse::<u32>().ok())
                .filter(|&m| (1..=12).contains(&m))
            else {
                continue;
            };
            for week_dir in sorted_dir(&month_dir)? {
                if !week_dir.is_dir() {
                    continue;
                }
                let Some(week) = week_dir
                    .file_name()
                    .and_then(|n| n.to_str())
                    .and_then(|n| n.strip_prefix("week"))
                    .and_then(|n| n.parse::<u32>().ok())
                    .filter(|&w| (1..=5).contains(&w))
                else {
                    continue;
                };
                let mut images = Vec::new();
                let mut transcript = None;
                for file in sorted_dir(&week_dir)? {
                    if !file.is_file() {
                        continue;
                    }
                    let ext = file
                        .extension()
                        .and_then(|e| e.to_str())
                        .map(|e| e.to_ascii_lowercase());
                    match ext.as_deref() {
                        Some("tif") | Some("tiff") | Some("png") => images.push(file),
                        _ => {
                            if file.file_name().and_then(|n| n.to_str())
                                == Some("transcript.txt")
                            {
                                transcript = Some(file);
                            }
                        }
                    }
                }
                periods.push(PeriodEntry {
                    period: Period { year, month, week },
                    dir: week_dir,
                    images,
                    transcript,
                });
            }
        }
    }
    periods.sort_by_key(|p| p.period);
    Ok(CorpusLayout {
        root: root.to_path_buf(),
        periods,
    })
}

/// Parse `WEEK <n>: <date range>` from the first transcript line, if present.
fn parse_week_header(line: &str) -> Option<(u32, String)> {
    let trimmed = line.trim();
    let rest = trimmed
        .strip_prefix("WEEK")
        .or_else(|| trimmed.strip_prefix("Week"))
        .or_else(|| trimmed.strip_prefix("week"))?;
    let rest = rest.trim_start();
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        return None;
    }
    let tail = rest[digits.len()..].trim_start();
    let date = tail.strip_prefix(':')?;
    Some((digits.parse().ok()?, date.trim().to_string()))
}

/// Parse every transcript in the layout into chronological diary entries.
/// The header week number wins over the folder week when present; duplicate
/// (year, week_no) keys are an error naming both files.
pub fn load_entries(layout: &CorpusLayout) -> Result<Vec<DiaryEntry>> {
    let mut entries = Vec::new();
    let mut seen: HashMap<(i32, u32), PathBuf> = HashMap::new();
    for period in &layout.periods {
        let Some(transcript) = &period.transcript else {
            continue;
        };
        let raw = std::fs::read_to_string(transcript).map_err(|e| Error::io(transcript, e))?;
        let (week_no, week_date, body) = match raw.lines().next().and_then(parse_week_header) {
            Some((n, date)) => {
                let body_start = raw.find('\n').map(|i| i + 1).unwrap_or(raw.len());
                (n, date, &raw[body_start..])
            }
            None => (period.period.week, String::new(), raw.as_str()),
        };
        let key = (period.period.year, week_no);
        if let Some(first) = seen.get(&key) {
            return Err(Error::DuplicateKey {
                key: format!("year {} week {}", key.0, key.1),
                first: first.display().to_string(),
                second: transcript.display().to_string(),
            });
        }
        seen.insert(key, transcript.clone());
        entries.push(DiaryEntry {
            year: period.period.year,
            month: period.period.month,
            week_no,
            week_date,
            text: clean_text(body),
        });
    }
    entries.sort_by_key(|e| (e.year, e.week_no));
    Ok(entries)
}

/// One produced file with its content hash.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub producer: String,
}

/// Deterministic record of everything a command wrote.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Manifest {
    pub config: serde_json::Value,
    pub files: Vec<ManifestEntry>,
}

/// Collects output files under one root and finishes with a sorted
/// `manifest.json` of content hashes.
pub struct OutputWriter {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl OutputWriter {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputWriter {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8], producer: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher.finalize();
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.entries.push(ManifestEntry {
            path: rel.to_string(),
            sha256,
            producer: producer.to_string(),
        });
        Ok(())
    }

    pub fn write_text(&mut self, rel: &str, text: &str, producer: &str) -> Result<()> {
        self.write_bytes(rel, text.as_bytes(), producer)
    }

    pub fn file_count(&self) -> usize {
        self.entries.len()
    }

    /// Sort entries, embed the effective config, and write `manifest.json`.
    pub fn finish(mut self, config: serde_json::Value) -> Result<Manifest> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            config,
            files: self.entries,
        };
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Internal(format!("manifest serialization: {e}")))?;
        let path = self.root.join("manifest.json");
        std::fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}
