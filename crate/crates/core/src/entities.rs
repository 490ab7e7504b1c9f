//! Named-entity mention spotting over cleaned transcripts and
//! entity-conditioned sentiment records.

use std::collections::HashSet;
use std::path::Path;

use crate::corpus::DiaryEntry;
use crate::error::{Error, Result};
use crate::hedonometer::{clean_text, Lexicon, ScoreOptions, SentimentRecord};

/// A canonical entity name with its surface forms.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EntitySpec {
    pub name: String,
    pub aliases: Vec<String>,
}

impl EntitySpec {
    pub fn new(name: impl Into<String>, aliases: Vec<String>) -> Result<Self> {
        let spec = EntitySpec {
            name: name.into(),
            aliases,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.aliases.is_empty() {
            return Err(Error::invalid(format!(
                "entity '{}' needs at least one alias",
                self.name
            )));
        }
        let mut seen = HashSet::new();
        for alias in &self.aliases {
            let folded = clean_text(alias);
            if folded.is_empty() {
                return Err(Error::invalid(format!(
                    "entity '{}' has an alias with no word content: '{alias}'",
                    self.name
                )));
            }
            if !seen.insert(folded.clone()) {
                return Err(Error::invalid(format!(
                    "entity '{}' has duplicate alias '{folded}' after case folding",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Load `{"name": "...", "aliases": ["...", ...]}` from JSON.
    pub fn load_json(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: EntitySpec = serde_json::from_str(&raw).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    /// Aliases as cleaned token sequences, longest first for deterministic
    /// reporting.
    fn alias_tokens(&self) -> Vec<Vec<String>> {
        let mut folded: Vec<Vec<String>> = self
            .aliases
            .iter()
            .map(|a| clean_text(a).split_whitespace().map(str::to_string).collect())
            .collect();
        folded.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        folded
    }
}

/// All mentions of an entity within one diary entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityMention {
    pub entity: String,
    pub year: i32,
    pub month: u32,
    pub week_no: u32,
    /// Surface form matched at the first occurrence.
    pub alias: String,
    /// Character offset of the first occurrence in the cleaned text.
    pub offset: usize,
    /// Number of token positions in the entry where some alias matches.
    pub count: usize,
}

/// Case-insensitive whole-token alias matching; multi-word aliases match
/// consecutive token runs. One record per entry that mentions the entity.
pub fn find_mentions(entries: &[DiaryEntry], spec: &EntitySpec) -> Vec<EntityMention> {
    let alias_seqs = spec.alias_tokens();
    let mut mentions = Vec::new();
    for entry in entries {
        // Token list with character offsets into the cleaned text.
        let mut tokens: Vec<(&str, usize)> = Vec::new();
        let mut offset = 0usize;
        for token in entry.text.split(' ') {
            if !token.is_empty() {
                tokens.push((token, offset));
            }
            offset += token.chars().count() + 1;
        }
        let mut count = 0usize;
        let mut first: Option<(usize, &Vec<String>)> = None;
        for start in 0..tokens.len() {
            // Longest alias wins at a position; each position counts once.
            let hit = alias_seqs.iter().find(|seq| {
                seq.len() <= tokens.len() - start
                    && seq
                        .iter()
                        .zip(&tokens[start..start + seq.len()])
                        .all(|(a, (t, _))| a == t)
            });
            if let Some(seq) = hit {
                count += 1;
                if first.is_none() {
                    first = Some((tokens[start].1, seq));
                }
            }
        }
        if let Some((offset, seq)) = first {
            mentions.push(EntityMention {
                entity: spec.name.clone(),
                year: entry.year,
                month: entry.month,
                week_no: entry.week_no,
                alias: seq.join(" "),
                offset,
                count,
            });
        }
    }
    mentions
}

/// Sentiment records for exactly the entries that mention the entity.
pub fn entity_sentiment(
    entries: &[DiaryEntry],
    spec: &EntitySpec,
    lex: &Lexicon,
    opts: &ScoreOptions,
) -> Vec<SentimentRecord> {
    let mentioned: HashSet<(i32, u32)> = find_mentions(entries, spec)
        .iter()
        .map(|m| (m.year, m.week_no))
        .collect();
    let mut records: Vec<SentimentRecord> = entries
        .iter()
        .filter(|e| mentioned.contains(&(e.year, e.week_no)))
        .map(|e| SentimentRecord::from_entry(e, lex, opts))
        .collect();
    records.sort_by_key(|r| (r.year, r.week_no));
    records
}

/// CSV of entity-conditioned scores: entity,year,week_no,count,score.
pub fn entity_csv(
    spec: &EntitySpec,
    mentions: &[EntityMention],
    records: &[SentimentRecord],
) -> String {
    let mut out = String::from("entity,year,week_no,count,score\n");
    for m in mentions {
        let score = records
            .iter()
            .find(|r| (r.year, r.week_no) == (m.year, m.week_no))
            .and_then(|r| r.score)
            .map(|s| format!("{s:.6}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            spec.name, m.year, m.week_no, m.count, score
        ));
    }
    out
}
