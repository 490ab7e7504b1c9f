//! Seeded synthetic corpus generator: procedurally drawn word stamps placed
//! on diary-like pages with per-year drift and per-instance jitter, plus
//! matching transcripts and a ground-truth manifest. Stands in for archival
//! page scans that cannot ship with the code.

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{page_identifier, scan, CorpusLayout, Period};
use crate::error::{Error, Result};
use crate::imagecore::GrayImage;
use crate::segmentation::BoundingBox;

/// The five frequent words stamped onto fixture pages.
pub const TARGET_WORDS: [&str; 5] = ["the", "of", "to", "in", "a"];

const PAPER: u8 = 235;
const INK: u8 = 40;
const PAGE_MARGIN: u32 = 16;
const WORD_GAP: u32 = 16;
const LINE_PITCH: u32 = 40;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FixtureSpec {
    pub start_year: i32,
    pub years: u32,
    pub month: u32,
    pub weeks_per_year: u32,
    /// True instances of each target word per period.
    pub instances_per_word: u32,
    /// Mislabelled stamps per word group (drawn as a different word).
    pub outliers_per_word: u32,
    pub words_per_line: u32,
    /// Placement and intensity noise amplitude in pixels/levels.
    pub jitter: u32,
    /// Slant added to stroke tops per year index, in pixels.
    pub year_drift: f64,
    /// Body words per weekly transcript.
    pub words_per_entry: u32,
    /// Entries that mention the planted entity "Dorothy".
    pub entity_entries: u32,
    /// Entries that mention the near-miss token "Dorothea".
    pub decoy_entries: u32,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            start_year: 1917,
            years: 5,
            month: 10,
            weeks_per_year: 4,
            instances_per_word: 6,
            outliers_per_word: 1,
            words_per_line: 5,
            jitter: 1,
            year_drift: 1.5,
            words_per_entry: 40,
            entity_entries: 15,
            decoy_entries: 3,
        }
    }
}

/// Planted stamp location and label.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StampRecord {
    pub page_id: String,
    pub year: i32,
    pub month: u32,
    pub week: u32,
    pub label: String,
    pub bounds: BoundingBox,
    pub outlier: bool,
}

/// Everything the generator planted, for oracle-style verification.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FixtureGroundTruth {
    pub seed: u64,
    pub stamps: Vec<StampRecord>,
    pub entity_entries: Vec<(i32, u32)>,
    pub decoy_entries: Vec<(i32, u32)>,
}

impl FixtureGroundTruth {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// The ten-word lexicon shipped with the fixture corpus.
pub fn fixture_lexicon_csv() -> &'static str {
    "word,happiness\n\
     happy,8.2\n\
     delight,7.9\n\
     sunshine,7.5\n\
     lovely,7.1\n\
     friend,7.0\n\
     dark,3.0\n\
     trouble,2.6\n\
     war,1.8\n\
     lonely,2.2\n\
     sad,2.4\n"
}

const HAPPY_POOL: [&str; 8] = [
    "happy", "delight", "sunshine", "lovely", "friend", "laughter", "garden", "music",
];
const SAD_POOL: [&str; 8] = [
    "war", "trouble", "lonely", "dark", "sad", "fear", "rain", "grey",
];
const FILLER_POOL: [&str; 15] = [
    "the", "of", "to", "in", "a", "walk", "house", "day", "week", "letter", "road", "morning",
    "evening", "paper", "town",
];

enum Stroke {
    Line(f64, f64, f64, f64),
    Ellipse(f64, f64, f64, f64),
}

/// Stroke skeleton of one lowercase glyph on a 24-high cell.
fn glyph(c: char) -> (f64, Vec<Stroke>) {
    use Stroke::*;
    match c {
        't' => (8.0, vec![Line(4.0, 6.0, 4.0, 22.0), Line(1.5, 12.0, 7.0, 12.0)]),
        'h' => (
            10.0,
            vec![
                Line(2.0, 2.0, 2.0, 22.0),
                Line(2.0, 16.0, 5.0, 12.5),
                Line(5.0, 12.5, 8.0, 16.0),
                Line(8.0, 16.0, 8.0, 22.0),
            ],
        ),
        'e' => (
            10.0,
            vec![Ellipse(4.5, 17.0, 3.5, 5.0), Line(1.5, 17.0, 8.0, 17.0)],
        ),
        'o' => (10.0, vec![Ellipse(4.5, 17.0, 3.5, 5.0)]),
        'f' => (
            9.0,
            vec![
                Line(4.5, 6.0, 4.5, 22.0),
                Line(4.5, 6.0, 7.5, 4.0),
                Line(2.0, 12.0, 7.5, 12.0),
            ],
        ),
        'i' => (6.0, vec![Line(3.0, 12.0, 3.0, 22.0), Ellipse(3.0, 8.0, 0.9, 0.9)]),
        'n' => (
            10.0,
            vec![
                Line(2.0, 12.0, 2.0, 22.0),
                Line(2.0, 16.0, 5.0, 12.5),
                Line(5.0, 12.5, 8.0, 16.0),
                Line(8.0, 16.0, 8.0, 22.0),
            ],
        ),
        'a' => (
            10.0,
            vec![Ellipse(4.5, 17.0, 3.5, 5.0), Line(8.0, 12.5, 8.0, 22.0)],
        ),
        other => panic!("fixture font has no glyph for '{other}'"),
    }
}

/// Rasterize a word as an ink mask, sheared so stroke tops lean right by
/// `lean` pixels. Returns the trimmed mask with its dimensions.
fn render_word(word: &str, lean: f64) -> (Vec<bool>, u32, u32) {
    const BASELINE: f64 = 22.0;
    const RADIUS: f64 = 1.1;
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut cursor = 1.0f64;
    for c in word.chars() {
        let (width, strokes) = glyph(c);
        for stroke in strokes {
            match stroke {
                Stroke::Line(x0, y0, x1, y1) => {
                    let steps = ((x1 - x0).hypot(y1 - y0) * 4.0).ceil() as usize + 1;
                    for s in 0..=steps {
                        let t = s as f64 / steps as f64;
                        points.push((cursor + x0 + (x1 - x0) * t, y0 + (y1 - y0) * t));
                    }
                }
                Stroke::Ellipse(cx, cy, rx, ry) => {
                    let steps = (std::f64::consts::TAU * rx.max(ry) * 4.0).ceil() as usize + 8;
                    for s in 0..steps {
                        let t = std::f64::consts::TAU * s as f64 / steps as f64;
                        points.push((cursor + cx + rx * t.cos(), cy + ry * t.sin()));
                    }
                }
            }
        }
        cursor += width - 2.0;
    }
    // Shear tops rightward.
    let sheared: Vec<(f64, f64)> = points
        .into_iter()
        .map(|(x, y)| (x + lean * (BASELINE - y) / 20.0, y))
        .collect();

    let canvas_w = (cursor + lean.abs() + 4.0).ceil() as i64;
    let canvas_h = 28i64;
    let mut mask = vec![false; (canvas_w * canvas_h) as usize];
    for &(px, py) in &sheared {
        let x_lo = (px - RADIUS).floor() as i64;
        let x_hi = (px + RADIUS).ceil() as i64;
        let y_lo = (py - RADIUS).floor() as i64;
        let y_hi = (py + RADIUS).ceil() as i64;
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                if x < 0 || y < 0 || x >= canvas_w || y >= canvas_h {
                    continue;
                }
                let dx = x as f64 + 0.5 - px;
                let dy = y as f64 + 0.5 - py;
                if dx * dx + dy * dy <= RADIUS * RADIUS {
                    mask[(y * canvas_w + x) as usize] = true;
                }
            }
        }
    }
    // Trim to the inked bounding box.
    let mut min_x = canvas_w;
    let mut max_x = -1i64;
    let mut min_y = canvas_h;
    let mut max_y = -1i64;
    for y in 0..canvas_h {
        for x in 0..canvas_w {
            if mask[(y * canvas_w + x) as usize] {
                min_x = min_x.min(x);
                max_x = max_x.max(x);
                min_y = min_y.min(y);
                max_y = max_y.max(y);
            }
        }
    }
    let w = (max_x - min_x + 1) as u32;
    let h = (max_y - min_y + 1) as u32;
    let mut trimmed = vec![false; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            trimmed[(y * w + x) as usize] =
                mask[((y as i64 + min_y) * canvas_w + x as i64 + min_x) as usize];
        }
    }
    (trimmed, w, h)
}

struct PlannedStamp {
    label: usize,
    drawn: usize,
    outlier: bool,
}

/// Generate the corpus under `root` and return the scanned layout with the
/// ground truth of everything planted.
pub fn generate_fixture_corpus(
    seed: u64,
    spec: &FixtureSpec,
    root: &Path,
) -> Result<(CorpusLayout, FixtureGroundTruth)> {
    if spec.years == 0 || spec.weeks_per_year == 0 || spec.weeks_per_year > 5 {
        return Err(Error::invalid(
            "fixture needs 1+ years and 1..=5 weeks per year",
        ));
    }
    if spec.words_per_line == 0 || spec.instances_per_word == 0 {
        return Err(Error::invalid(
            "fixture needs positive words per line and instances per word",
        ));
    }
    if spec.month == 0 || spec.month > 12 {
        return Err(Error::invalid("fixture month must be in 1..=12"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;

    let cells: Vec<(i32, u32)> = (0..spec.years)
        .flat_map(|y| {
            (1..=spec.weeks_per_year).map(move |w| (0i32 /*placeholder*/, y, w))
        })
        .map(|(_, y, w)| (spec.start_year + y as i32, w))
        .collect();
    let mut shuffled = cells.clone();
    for i in (1..shuffled.len()).rev() {
        let j = rng.random_range(0..=i);
        shuffled.swap(i, j);
    }
    let n_entity = (spec.entity_entries as usize).min(shuffled.len());
    let entity_cells: Vec<(i32, u32)> = shuffled[..n_entity].to_vec();
    let n_decoy = (spec.decoy_entries as usize).min(shuffled.len() - n_entity);
    let decoy_cells: Vec<(i32, u32)> = shuffled[n_entity..n_entity + n_decoy].to_vec();

    let mut stamps = Vec::new();
    for year_idx in 0..spec.years {
        let year = spec.start_year + year_idx as i32;
        let lean = spec.year_drift * year_idx as f64;
        // One rendered mask per word per year; instances reuse it.
        let masks: Vec<(Vec<bool>, u32, u32)> = TARGET_WORDS
            .iter()
            .map(|w| render_word(w, lean))
            .collect();
        for week in 1..=spec.weeks_per_year {
            let period = Period {
                year,
                month: spec.month,
                week,
            };
            // Plan the stamp sequence: one run of all five words per row,
            // shuffled within the run; the last runs carry the outliers.
            let runs = spec.instances_per_word + spec.outliers_per_word;
            let mut planned: Vec<PlannedStamp> = Vec::new();
            for run in 0..runs {
                let mut order: Vec<usize> = (0..TARGET_WORDS.len()).collect();
                for i in (1..order.len()).rev() {
                    let j = rng.random_range(0..=i);
                    order.swap(i, j);
                }
                let outlier_run = run >= spec.instances_per_word;
                for &w in &order {
                    planned.push(PlannedStamp {
                        label: w,
                        drawn: if outlier_run { (w + 1) % TARGET_WORDS.len() } else { w },
                        outlier: outlier_run,
                    });
                }
            }

            // Lay the sequence out line by line.
            let per_line = spec.words_per_line as usize;
            let lines: Vec<&[PlannedStamp]> = planned.chunks(per_line).collect();
            let jitter = spec.jitter as i64;
            let line_width = |line: &[PlannedStamp]| -> u32 {
                let total: u32 = line.iter().map(|p| masks[p.drawn].1).sum();
                total + WORD_GAP * (line.len().saturating_sub(1)) as u32
            };
            let page_w = lines.iter().map(|l| line_width(l)).max().unwrap_or(0)
                + 2 * PAGE_MARGIN
                + 2 * spec.jitter
                + 8;
            let page_h = 2 * PAGE_MARGIN + lines.len() as u32 * LINE_PITCH;
            let mut pixels = vec![PAPER; (page_w * page_h) as usize];

            let stem = "page1";
            let page_id = page_identifier(period, stem);
            for (line_idx, line) in lines.iter().enumerate() {
                let mut x_cursor = (PAGE_MARGIN + spec.jitter) as i64;
                let y_base = (PAGE_MARGIN + line_idx as u32 * LINE_PITCH) as i64;
                for p in line.iter() {
                    let (mask, mw, mh) = &masks[p.drawn];
                    let (dx, dy, shade) = if jitter > 0 {
                        (
                            rng.random_range(-jitter..=jitter),
                            rng.random_range(-jitter..=jitter),
                            rng.random_range(-(8 * jitter)..=(8 * jitter)),
                        )
                    } else {
                        (0, 0, 0)
                    };
                    let x0 = x_cursor + dx;
                    let y0 = y_base + dy;
                    let ink = (INK as i64 + shade).clamp(10, 110) as u8;
                    for my in 0..*mh {
                        for mx in 0..*mw {
                            if mask[(my * mw + mx) as usize] {
                                let px = x0 + mx as i64;
                                let py = y0 + my as i64;
                                if px >= 0
                                    && py >= 0
                                    && px < page_w as i64
                                    && py < page_h as i64
                                {
                                    pixels[(py as u32 * page_w + px as u32) as usize] = ink;
                                }
                            }
                        }
                    }
                    stamps.push(StampRecord {
                        page_id: page_id.clone(),
                        year,
                        month: spec.month,
                        week,
                        label: TARGET_WORDS[p.label].to_string(),
                        bounds: BoundingBox {
                            x: x0 as u32,
                            y: y0 as u32,
                            w: *mw,
                            h: *mh,
                        },
                        outlier: p.outlier,
                    });
                    x_cursor += *mw as i64 + WORD_GAP as i64;
                }
            }

            let page = GrayImage::new(page_w, page_h, pixels)?;
            let dir = root
                .join(year.to_string())
                .join(spec.month.to_string())
                .join(format!("week{week}"));
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            crate::io::save_gray_png(&page, &dir.join(format!("{stem}.png")))?;

            let transcript = build_transcript(
                &mut rng,
                spec,
                period,
                entity_cells.contains(&(year, week)),
                decoy_cells.contains(&(year, week)),
            );
            std::fs::write(dir.join("transcript.txt"), transcript)
                .map_err(|e| Error::io(&dir, e))?;
        }
    }

    let truth = FixtureGroundTruth {
        seed,
        stamps,
        entity_entries: {
            let mut v = entity_cells;
            v.sort_unstable();
            v
        },
        decoy_entries: {
            let mut v = decoy_cells;
            v.sort_unstable();
            v
        },
    };
    let truth_json = serde_json::to_string_pretty(&truth)
        .map_err(|e| Error::Internal(format!("ground truth serialization: {e}")))?;
    std::fs::write(root.join("ground_truth.json"), format!("{truth_json}\n"))
        .map_err(|e| Error::io(root, e))?;
    std::fs::write(root.join("lexicon.csv"), fixture_lexicon_csv())
        .map_err(|e| Error::io(root, e))?;
    std::fs::write(
        root.join("entity.json"),
        "{\n  \"name\": \"Dorothy\",\n  \"aliases\": [\"Dorothy\"]\n}\n",
    )
    .map_err(|e| Error::io(root, e))?;

    let layout = scan(root)?;
    Ok((layout, truth))
}

fn build_transcript(
    rng: &mut ChaCha8Rng,
    spec: &FixtureSpec,
    period: Period,
    with_entity: bool,
    with_decoy: bool,
) -> String {
    let day0 = (period.week - 1) * 7 + 1;
    let day1 = period.week * 7;
    let mut words: Vec<String> = Vec::with_capacity(spec.words_per_entry as usize + 2);
    for i in 0..spec.words_per_entry {
        let roll = rng.random_range(0..10u32);
        // Entity weeks lean happy so entity-conditioned means sit above the
        // corpus mean.
        let pool: &[&str] = if with_entity {
            match roll {
                0..=4 => &FILLER_POOL,
                5..=8 => &HAPPY_POOL,
                _ => &SAD_POOL,
            }
        } else {
            match roll {
                0..=5 => &FILLER_POOL,
                6..=7 => &HAPPY_POOL,
                _ => &SAD_POOL,
            }
        };
        let mut word = pool[rng.random_range(0..pool.len())].to_string();
        if i % 7 == 6 {
            word.push(',');
        } else if i % 11 == 10 {
            word.push('.');
        }
        words.push(word);
    }
    if with_entity {
        let occurrences = 1 + rng.random_range(0..2u32);
        for _ in 0..occurrences {
            let pos = rng.random_range(0..=words.len());
            words.insert(pos, "Dorothy".to_string());
        }
    }
    if with_decoy {
        let pos = rng.random_range(0..=words.len());
        words.insert(pos, "Dorothea".to_string());
    }
    format!(
        "WEEK {}: {}-{} Oct {}\n{}\n",
        period.week,
        day0,
        day1,
        period.year,
        words.join(" ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> FixtureSpec {
        FixtureSpec {
            years: 2,
            weeks_per_year: 1,
            instances_per_word: 2,
            outliers_per_word: 1,
            words_per_entry: 20,
            entity_entries: 1,
            decoy_entries: 1,
            ..FixtureSpec::default()
        }
    }

    fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
        let mut files = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(&dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    let rel = path.strip_prefix(root).unwrap().display().to_string();
                    files.push((rel, std::fs::read(&path).unwrap()));
                }
            }
        }
        files.sort();
        files
    }

    #[test]
    fn same_seed_same_bytes() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        generate_fixture_corpus(1, &small_spec(), d1.path()).unwrap();
        generate_fixture_corpus(1, &small_spec(), d2.path()).unwrap();
        assert_eq!(read_tree(d1.path()), read_tree(d2.path()));
    }

    #[test]
    fn different_seed_differs() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        generate_fixture_corpus(1, &small_spec(), d1.path()).unwrap();
        generate_fixture_corpus(2, &small_spec(), d2.path()).unwrap();
        assert_ne!(read_tree(d1.path()), read_tree(d2.path()));
    }

    #[test]
    fn ground_truth_counts_and_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small_spec();
        let (layout, truth) = generate_fixture_corpus(7, &spec, dir.path()).unwrap();
        assert_eq!(layout.periods.len(), 2);
        // 2 years x 1 week x 5 words x 3 runs
        assert_eq!(truth.stamps.len(), 30);
        assert_eq!(truth.stamps.iter().filter(|s| s.outlier).count(), 10);
        for s in &truth.stamps {
            assert!(TARGET_WORDS.contains(&s.label.as_str()));
        }
        for p in &layout.periods {
            assert_eq!(p.images.len(), 1);
            let img = crate::io::load_image(&p.images[0]).unwrap().into_gray();
            for s in truth.stamps.iter().filter(|s| {
                (s.year, s.week) == (p.period.year, p.period.week)
            }) {
                assert!(s.bounds.x + s.bounds.w <= img.width());
                assert!(s.bounds.y + s.bounds.h <= img.height());
            }
        }
    }

    #[test]
    fn zero_jitter_stamps_identical_within_period() {
        let dir = tempfile::tempdir().unwrap();
        let spec = FixtureSpec {
            jitter: 0,
            ..small_spec()
        };
        let (layout, truth) = generate_fixture_corpus(3, &spec, dir.path()).unwrap();
        let p = &layout.periods[0];
        let img = crate::io::load_image(&p.images[0]).unwrap().into_gray();
        // Compare the two true instances of "of" pixel by pixel.
        let of_stamps: Vec<&StampRecord> = truth
            .stamps
            .iter()
            .filter(|s| {
                s.label == "of"
                    && !s.outlier
                    && (s.year, s.week) == (p.period.year, p.period.week)
            })
            .collect();
        assert_eq!(of_stamps.len(), 2);
        let crop = |s: &StampRecord| {
            img.crop(s.bounds.x, s.bounds.y, s.bounds.w, s.bounds.h).unwrap()
        };
        assert_eq!(crop(of_stamps[0]), crop(of_stamps[1]));
    }

    #[test]
    fn words_per_page_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let spec = FixtureSpec {
            years: 1,
            weeks_per_year: 1,
            instances_per_word: 2,
            outliers_per_word: 0,
            words_per_line: 4,
            ..FixtureSpec::default()
        };
        let (_, truth) = generate_fixture_corpus(5, &spec, dir.path()).unwrap();
        assert_eq!(truth.stamps.len(), 10);
    }

    #[test]
    fn entity_and_decoy_cells_planted() {
        let dir = tempfile::tempdir().unwrap();
        let spec = FixtureSpec {
            years: 5,
            weeks_per_year: 4,
            entity_entries: 15,
            decoy_entries: 3,
            ..FixtureSpec::default()
        };
        let (layout, truth) = generate_fixture_corpus(11, &spec, dir.path()).unwrap();
        assert_eq!(truth.entity_entries.len(), 15);
        assert_eq!(truth.decoy_entries.len(), 3);
        for cell in &truth.entity_entries {
            assert!(!truth.decoy_entries.contains(cell));
        }
        let entries = crate::corpus::load_entries(&layout).unwrap();
        for e in &entries {
            let has = e.text.split_whitespace().any(|t| t == "dorothy");
            assert_eq!(
                has,
                truth.entity_entries.contains(&(e.year, e.week_no)),
                "entity token mismatch at {} w{}",
                e.year,
                e.week_no
            );
        }
    }

    #[test]
    fn glyphs_render_nonempty() {
        for word in TARGET_WORDS {
            let (mask, w, h) = render_word(word, 0.0);
            assert!(w > 4 && h > 10, "{word} mask {w}x{h}");
            assert!(mask.iter().filter(|&&b| b).count() > 20);
        }
    }
}
