//! Page segmentation: binarize, dilate twice (lines then words), trace
//! contours, and crop ordered word snippets.

use crate::corpus::Period;
use crate::error::{Error, Result};
use crate::imagecore::{BinaryImage, GrayImage};

/// Boundary trace of one 8-connected foreground component. Points are stored
/// in trace order; consecutive points are 8-adjacent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<(u32, u32)>,
}

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn center(&self) -> (u32, u32) {
        (self.x + self.w / 2, self.y + self.h / 2)
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }

    fn vertical_overlap(&self, other: &BoundingBox) -> u32 {
        let top = self.y.max(other.y);
        let bottom = (self.y + self.h).min(other.y + other.h);
        bottom.saturating_sub(top)
    }
}

/// A cropped word image with its location in the corpus.
#[derive(Debug, Clone)]
pub struct WordSnippet {
    pub image: GrayImage,
    pub bounds: BoundingBox,
    pub page_id: String,
    pub line_index: usize,
    pub word_index: usize,
    pub period: Period,
}

impl WordSnippet {
    /// Stable identifier used as matrix label and output file stem.
    pub fn label(&self) -> String {
        format!("{}_{}_{}", self.page_id, self.line_index, self.word_index)
    }
}

#[derive(Debug, Clone)]
pub struct SegmentationConfig {
    pub threshold: u8,
    /// Wide horizontal kernel merging words into line blobs (w, h).
    pub line_kernel: (u32, u32),
    /// Small kernel closing gaps inside a word (w, h).
    pub word_kernel: (u32, u32),
    pub iterations: u32,
    /// Boxes below this area are dropped as ink specks.
    pub min_area: u32,
    /// Crop snippets from the grayscale page instead of the binarized one.
    pub crop_from_gray: bool,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            threshold: crate::imagecore::DEFAULT_THRESHOLD,
            line_kernel: (25, 1),
            word_kernel: (3, 3),
            iterations: 1,
            min_area: 64,
            crop_from_gray: false,
        }
    }
}

// Clockwise Moore neighborhood starting west (screen coordinates, y down).
const RING: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

/// One contour per 8-connected foreground component, ordered by the scanline
/// position of each component's first pixel. All outer boundary points are
/// stored.
pub fn find_contours(img: &BinaryImage) -> Vec<Contour> {
    let w = img.width() as usize;
    let h = img.height() as usize;
    let mut visited = vec![false; w * h];
    let mut contours = Vec::new();

    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if visited[idx] || !img.is_foreground(x as u32, y as u32) {
                continue;
            }
            // Flood-fill the component so later scanlines skip it.
            let mut stack = vec![(x, y)];
            visited[idx] = true;
            while let Some((cx, cy)) = stack.pop() {
                for (dx, dy) in RING {
                    let nx = cx as i64 + dx;
                    let ny = cy as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let nidx = ny as usize * w + nx as usize;
                    if !visited[nidx] && img.is_foreground(nx as u32, ny as u32) {
                        visited[nidx] = true;
                        stack.push((nx as usize, ny as usize));
                    }
                }
            }
            contours.push(Contour {
                points: trace_boundary(img, (x as u32, y as u32)),
            });
        }
    }
    contours
}

/// Moore-neighbor boundary trace from the component's first scanline pixel.
fn trace_boundary(img: &BinaryImage, start: (u32, u32)) -> Vec<(u32, u32)> {
    let fg = |x: i64, y: i64| -> bool {
        x >= 0
            && y >= 0
            && x < img.width() as i64
            && y < img.height() as i64
            && img.is_foreground(x as u32, y as u32)
    };
    let s = (start.0 as i64, start.1 as i64);
    let b0 = (s.0 - 1, s.1);
    let mut points = vec![start];
    let mut current = s;
    let mut backtrack = b0;
    // A trace can visit a pixel at most once per entry direction.
    let cap = 8 * img.width() as usize * img.height() as usize;

    loop {
        let rel = (backtrack.0 - current.0, backtrack.1 - current.1);
        let sidx = RING
            .iter()
            .position(|&o| o == rel)
            .expect("backtrack is always 8-adjacent");
        let mut next = None;
        let mut last_bg = backtrack;
        for k in 1..=8 {
            let o = RING[(sidx + k) % 8];
            let cand = (current.0 + o.0, current.1 + o.1);
            if fg(cand.0, cand.1) {
                next = Some(cand);
                break;
            }
            last_bg = cand;
        }
        let Some(next_px) = next else {
            break; // isolated pixel
        };
        backtrack = last_bg;
        current = next_px;
        if current == s && backtrack == b0 {
            break; // closed the loop entering the start as we first did
        }
        points.push((current.0 as u32, current.1 as u32));
        if points.len() > cap {
            break;
        }
    }
    points
}

/// Tight boxes around contours; boxes smaller than `min_area` are dropped.
pub fn bounding_boxes(contours: &[Contour], min_area: u32) -> Vec<BoundingBox> {
    contours
        .iter()
        .filter(|c| !c.points.is_empty())
        .map(|c| {
            let min_x = c.points.iter().map(|p| p.0).min().unwrap();
            let max_x = c.points.iter().map(|p| p.0).max().unwrap();
            let min_y = c.points.iter().map(|p| p.1).min().unwrap();
            let max_y = c.points.iter().map(|p| p.1).max().unwrap();
            BoundingBox {
                x: min_x,
                y: min_y,
                w: max_x - min_x + 1,
                h: max_y - min_y + 1,
            }
        })
        .filter(|b| b.area() >= min_area as u64)
        .collect()
}

/// Segment a resize-capped grayscale page into word snippets, ordered
/// top-to-bottom by line and left-to-right within each line.
pub fn segment_page(
    page: &GrayImage,
    page_id: &str,
    period: Period,
    cfg: &SegmentationConfig,
) -> Result<Vec<WordSnippet>> {
    let (lk_w, lk_h) = cfg.line_kernel;
    let (wk_w, wk_h) = cfg.word_kernel;
    let max_kw = lk_w.max(wk_w);
    let max_kh = lk_h.max(wk_h);
    if page.width() < max_kw || page.height() < max_kh {
        return Err(Error::invalid(format!(
            "page {}x{} is smaller than the {}x{} kernel",
            page.width(),
            page.height(),
            max_kw,
            max_kh
        )));
    }

    let bin = page.threshold_inverse(cfg.threshold, 255)?;

    let line_dilated = bin.dilate(lk_w, lk_h, cfg.iterations)?;
    let mut line_boxes = bounding_boxes(&find_contours(&line_dilated), cfg.min_area);
    line_boxes.sort_by_key(|b| (b.y, b.x));

    let word_dilated = bin.dilate(wk_w, wk_h, cfg.iterations)?;
    let word_boxes = bounding_boxes(&find_contours(&word_dilated), cfg.min_area);

    if line_boxes.is_empty() || word_boxes.is_empty() {
        return Ok(Vec::new());
    }

    // Assign each word box to the line with maximal vertical overlap; ties go
    // to the upper line.
    let mut per_line: Vec<Vec<BoundingBox>> = vec![Vec::new(); line_boxes.len()];
    for wb in &word_boxes {
        let mut best = 0usize;
        let mut best_overlap = 0u32;
        for (i, lb) in line_boxes.iter().enumerate() {
            let ov = wb.vertical_overlap(lb);
            if ov > best_overlap {
                best_overlap = ov;
                best = i;
            }
        }
        if best_overlap == 0 {
            // No overlap at all: fall back to nearest line center.
            let wc = wb.y as i64 + wb.h as i64 / 2;
            best = line_boxes
                .iter()
                .enumerate()
                .min_by_key(|(_, lb)| (lb.y as i64 + lb.h as i64 / 2 - wc).abs())
                .map(|(i, _)| i)
                .unwrap();
        }
        per_line[best].push(*wb);
    }

    let crop_source = if cfg.crop_from_gray {
        page.clone()
    } else {
        bin.to_gray()
    };

    let mut snippets = Vec::new();
    for (line_index, boxes) in per_line.iter_mut().enumerate() {
        boxes.sort_by_key(|b| (b.x, b.y, b.w, b.h));
        for (word_index, b) in boxes.iter().enumerate() {
            let image = crop_source.crop(b.x, b.y, b.w, b.h)?;
            snippets.push(WordSnippet {
                image,
                bounds: *b,
                page_id: page_id.to_string(),
                line_index,
                word_index,
                period,
            });
        }
    }
    Ok(snippets)
}
