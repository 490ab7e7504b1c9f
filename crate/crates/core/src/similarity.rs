//! Pairwise word-image similarity: MSE, windowed SSIM, and dynamic time
//! warping over vertical projection profiles, plus labelled n x n matrices
//! for word groups.

use crate::error::{Error, Result};
use crate::imagecore::GrayImage;
use crate::segmentation::WordSnippet;

pub const DEFAULT_SNIPPET_WIDTH: u32 = 128;
pub const DEFAULT_SNIPPET_HEIGHT: u32 = 64;
pub const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
pub const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mse,
    Ssim,
    Dtw,
}

impl Metric {
    pub fn all() -> [Metric; 3] {
        [Metric::Mse, Metric::Ssim, Metric::Dtw]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Mse => "MSE",
            Metric::Ssim => "SSIM",
            Metric::Dtw => "DTW",
        }
    }

    /// Self-comparison value placed on the matrix diagonal.
    pub fn diagonal(&self) -> f64 {
        match self {
            Metric::Mse => 0.0,
            Metric::Ssim | Metric::Dtw => 1.0,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(Metric::Mse),
            "ssim" => Ok(Metric::Ssim),
            "dtw" => Ok(Metric::Dtw),
            other => Err(Error::invalid(format!("unknown metric '{other}'"))),
        }
    }
}

/// Per-column foreground fraction of a binarized image, scaled so the tallest
/// column is 1 (an all-zero profile stays all-zero).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionProfile {
    values: Vec<f64>,
}

impl ProjectionProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("profile entries must lie in [0, 1]"));
        }
        Ok(ProjectionProfile { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SsimOptions {
    /// Side of the square uniform window.
    pub window: u32,
    /// Use an 11x11 Gaussian window (sigma 1.5) instead of the uniform one.
    pub gaussian: bool,
}

impl Default for SsimOptions {
    fn default() -> Self {
        SsimOptions {
            window: 7,
            gaussian: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimilarityConfig {
    pub target_w: u32,
    pub target_h: u32,
    pub ssim: SsimOptions,
    /// Binarization threshold for projection profiles.
    pub profile_threshold: u8,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            target_w: DEFAULT_SNIPPET_WIDTH,
            target_h: DEFAULT_SNIPPET_HEIGHT,
            ssim: SsimOptions::default(),
            profile_threshold: crate::imagecore::DEFAULT_THRESHOLD,
        }
    }
}

/// Bring a snippet group onto common dimensions: resize, then sharpen.
pub fn common_resize(group: &[WordSnippet], target_w: u32, target_h: u32) -> Result<Vec<GrayImage>> {
    if group.is_empty() {
        return Err(Error::invalid("cannot resize an empty snippet group"));
    }
    align_images(group.iter().map(|s| &s.image), target_w, target_h)
}

/// The same alignment pipeline over bare images.
pub fn align_images<'a>(
    images: impl IntoIterator<Item = &'a GrayImage>,
    target_w: u32,
    target_h: u32,
) -> Result<Vec<GrayImage>> {
    images
        .into_iter()
        .map(|img| Ok(img.resize(target_w, target_h)?.sharpen()))
        .collect()
}

/// Mean squared pixel difference; 0 means identical.
pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::invalid(format!(
            "mse dimension mismatch: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let sum: i64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            d * d
        })
        .sum();
    Ok(sum as f64 / a.pixels().len() as f64)
}

/// Mean local SSIM over sliding windows with the standard stabilizers.
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    ssim_with(a, b, &SsimOptions::default())
}

pub fn ssim_with(a: &GrayImage, b: &GrayImage, opts: &SsimOptions) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::invalid(format!(
            "ssim dimension mismatch: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if opts.gaussian {
        return Ok(ssim_gaussian(a, b));
    }
    let win = opts.window;
    if win < 2 {
        return Err(Error::invalid("ssim window must be at least 2"));
    }
    if a.width() < win || a.height() < win {
        return Err(Error::invalid(format!(
            "image {}x{} is smaller than the {win}x{win} ssim window",
            a.width(),
            a.height()
        )));
    }

    // Integral images of a, b, a^2, b^2, ab make every window a handful of
    // integer lookups; all sums stay exact in i64.
    let w = a.width() as usize;
    let h = a.height() as usize;
    let pa = a.pixels();
    let pb = b.pixels();
    let mut sa = vec![0i64; (w + 1) * (h + 1)];
    let mut sb = vec![0i64; (w + 1) * (h + 1)];
    let mut saa = vec![0i64; (w + 1) * (h + 1)];
    let mut sbb = vec![0i64; (w + 1) * (h + 1)];
    let mut sab = vec![0i64; (w + 1) * (h + 1)];
    let stride = w + 1;
    for y in 0..h {
        for x in 0..w {
            let va = pa[y * w + x] as i64;
            let vb = pb[y * w + x] as i64;
            let i = (y + 1) * stride + (x + 1);
            sa[i] = va + sa[i - 1] + sa[i - stride] - sa[i - stride - 1];
            sb[i] = vb + sb[i - 1] + sb[i - stride] - sb[i - stride - 1];
            saa[i] = va * va + saa[i - 1] + saa[i - stride] - saa[i - stride - 1];
            sbb[i] = vb * vb + sbb[i - 1] + sbb[i - stride] - sbb[i - stride - 1];
            sab[i] = va * vb + sab[i - 1] + sab[i - stride] - sab[i - stride - 1];
        }
    }
    let window_sum = |s: &[i64], x: usize, y: usize, side: usize| -> i64 {
        let x1 = x + side;
        let y1 = y + side;
        s[y1 * stride + x1] - s[y * stride + x1] - s[y1 * stride + x] + s[y * stride + x]
    };

    let side = win as usize;
    let n = (side * side) as f64;
    let norm = n - 1.0;
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=(h - side) {
        for x in 0..=(w - side) {
            let s1 = window_sum(&sa, x, y, side) as f64;
            let s2 = window_sum(&sb, x, y, side) as f64;
            let q11 = window_sum(&saa, x, y, side) as f64;
            let q22 = window_sum(&sbb, x, y, side) as f64;
            let q12 = window_sum(&sab, x, y, side) as f64;
            let ux = s1 / n;
            let uy = s2 / n;
            let vx = (q11 - s1 * s1 / n) / norm;
            let vy = (q22 - s2 * s2 / n) / norm;
            let vxy = (q12 - s1 * s2 / n) / norm;
            let num = (2.0 * ux * uy + SSIM_C1) * (2.0 * vxy + SSIM_C2);
            let den = (ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// SSIM with an 11x11 Gaussian window, sigma 1.5, weighted population stats.
fn ssim_gaussian(a: &GrayImage, b: &GrayImage) -> f64 {
    const SIDE: i64 = 11;
    const SIGMA: f64 = 1.5;
    let mut weights = [[0.0f64; SIDE as usize]; SIDE as usize];
    let mut wsum = 0.0;
    for (dy, row) in weights.iter_mut().enumerate() {
        for (dx, cell) in row.iter_mut().enumerate() {
            let rx = dx as f64 - 5.0;
            let ry = dy as f64 - 5.0;
            *cell = (-(rx * rx + ry * ry) / (2.0 * SIGMA * SIGMA)).exp();
            wsum += *cell;
        }
    }
    for row in weights.iter_mut() {
        for cell in row.iter_mut() {
            *cell /= wsum;
        }
    }

    let w = a.width() as i64;
    let h = a.height() as i64;
    let at = |img: &GrayImage, x: i64, y: i64| -> f64 {
        img.get(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32) as f64
    };
    let mut total = 0.0;
    let mut count = 0usize;
    for cy in 0..h {
        for cx in 0..w {
            let mut ux = 0.0;
            let mut uy = 0.0;
            for dy in 0..SIDE {
                for dx in 0..SIDE {
                    let wgt = weights[dy as usize][dx as usize];
                    ux += wgt * at(a, cx + dx - 5, cy + dy - 5);
                    uy += wgt * at(b, cx + dx - 5, cy + dy - 5);
                }
            }
            let mut vx = 0.0;
            let mut vy = 0.0;
            let mut vxy = 0.0;
            for dy in 0..SIDE {
                for dx in 0..SIDE {
                    let wgt = weights[dy as usize][dx as usize];
                    let da = at(a, cx + dx - 5, cy + dy - 5) - ux;
                    let db = at(b, cx + dx - 5, cy + dy - 5) - uy;
                    vx += wgt * da * da;
                    vy += wgt * db * db;
                    vxy += wgt * da * db;
                }
            }
            let num = (2.0 * ux * uy + SSIM_C1) * (2.0 * vxy + SSIM_C2);
            let den = (ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2);
            total += num / den;
            count += 1;
        }
    }
    total / count as f64
}

/// Binarize and count foreground pixels per column, scaled by the maximum
/// count.
pub fn vertical_projection(img: &GrayImage, threshold: u8) -> Result<ProjectionProfile> {
    let bin = img.threshold_inverse(threshold, 255)?;
    let w = bin.width();
    let mut counts = vec![0u32; w as usize];
    for y in 0..bin.height() {
        for (x, count) in counts.iter_mut().enumerate() {
            if bin.is_foreground(x as u32, y) {
                *count += 1;
            }
        }
    }
    let max = *counts.iter().max().unwrap_or(&0);
    let values = if max == 0 {
        vec![0.0; w as usize]
    } else {
        counts.iter().map(|&c| c as f64 / max as f64).collect()
    };
    ProjectionProfile::new(values)
}

/// Similarity of two profiles under dynamic time warping with unit steps
/// right/down/diagonal, per-step cost |p_i - q_j|, and pinned endpoints.
///
/// The value is 1 minus the best average per-step cost over all monotone
/// alignments, clamped to [0, 1]. Minimizing the average (rather than the
/// total) makes the result independent of path-length ties.
pub fn dtw_similarity(p: &ProjectionProfile, q: &ProjectionProfile) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::invalid("dtw profiles must be non-empty"));
    }
    let a = p.values();
    let b = q.values();
    let n = a.len();
    let m = b.len();

    // dp over the number of matched pairs t: dp_t(i, j) is the cheapest path
    // of exactly t pairs from (0,0) to (i,j). Feasible iff
    // max(i,j) <= t-1 <= i+j.
    let mut prev = vec![f64::INFINITY; n * m];
    let mut curr = vec![f64::INFINITY; n * m];
    prev[0] = (a[0] - b[0]).abs();
    let mut best = f64::INFINITY;
    if n == 1 && m == 1 {
        best = prev[0];
    }
    let lmax = n + m - 1;
    for t in 2..=lmax {
        let k = t - 1;
        let i_lo = k.saturating_sub(m - 1);
        let i_hi = k.min(n - 1);
        for i in i_lo..=i_hi {
            let j_lo = k.saturating_sub(i);
            let j_hi = k.min(m - 1);
            for j in j_lo..=j_hi {
                let mut from = f64::INFINITY;
                if i > 0 {
                    from = from.min(prev[(i - 1) * m + j]);
                }
                if j > 0 {
                    from = from.min(prev[i * m + (j - 1)]);
                }
                if i > 0 && j > 0 {
                    from = from.min(prev[(i - 1) * m + (j - 1)]);
                }
                curr[i * m + j] = if from.is_finite() {
                    from + (a[i] - b[j]).abs()
                } else {
                    f64::INFINITY
                };
            }
        }
        let tail = curr[(n - 1) * m + (m - 1)];
        if tail.is_finite() {
            best = best.min(tail / t as f64);
        }
        std::mem::swap(&mut prev, &mut curr);
        curr.fill(f64::INFINITY);
    }
    Ok((1.0 - best).clamp(0.0, 1.0))
}

/// Labelled symmetric metric matrix for one word group.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub labels: Vec<String>,
    pub metric: Metric,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(labels: Vec<String>, metric: Metric, values: Vec<f64>) -> Result<Self> {
        if values.len() != labels.len() * labels.len() {
            return Err(Error::invalid("matrix size does not match label count"));
        }
        Ok(SimilarityMatrix {
            labels,
            metric,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// CSV with labels in the header row and first column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for i in 0..self.n() {
            out.push_str(&self.labels[i]);
            for j in 0..self.n() {
                out.push_str(&format!(",{:.6}", self.get(i, j)));
            }
            out.push('\n');
        }
        out
    }
}

/// One row per group member with all three metrics against the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub reference: String,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub mse: f64,
    pub ssim: f64,
    pub dtw: f64,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,mse,ssim,dtw\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6}\n",
                r.label, r.mse, r.ssim, r.dtw
            ));
        }
        out
    }
}

fn metric_value(
    metric: Metric,
    images: &[GrayImage],
    profiles: &[ProjectionProfile],
    i: usize,
    j: usize,
    cfg: &SimilarityConfig,
) -> Result<f64> {
    match metric {
        Metric::Mse => mse(&images[i], &images[j]),
        Metric::Ssim => ssim_with(&images[i], &images[j], &cfg.ssim),
        Metric::Dtw => dtw_similarity(&profiles[i], &profiles[j]),
    }
}

/// Pairwise metric matrix over already-aligned images; pairs are computed
/// once and mirrored, the diagonal is fixed by the metric convention.
pub fn matrix_from_images(
    images: &[GrayImage],
    labels: Vec<String>,
    metric: Metric,
    cfg: &SimilarityConfig,
) -> Result<SimilarityMatrix> {
    if images.len() < 2 {
        return Err(Error::invalid("similarity matrix needs at least 2 images"));
    }
    if images.len() != labels.len() {
        return Err(Error::invalid("label count does not match image count"));
    }
    let profiles = if metric == Metric::Dtw {
        images
            .iter()
            .map(|img| vertical_projection(img, cfg.profile_threshold))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let n = images.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = metric.diagonal();
        for j in (i + 1)..n {
            let v = metric_value(metric, images, &profiles, i, j, cfg)?;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    SimilarityMatrix::new(labels, metric, values)
}

/// Common-resize a snippet group and build its metric matrix.
pub fn similarity_matrix(
    group: &[WordSnippet],
    metric: Metric,
    cfg: &SimilarityConfig,
) -> Result<SimilarityMatrix> {
    if group.len() < 2 {
        return Err(Error::invalid(
            "similarity matrix needs a group of at least 2 snippets",
        ));
    }
    let images = common_resize(group, cfg.target_w, cfg.target_h)?;
    let labels = group.iter().map(|s| s.label()).collect();
    matrix_from_images(&images, labels, metric, cfg)
}

/// All three metrics of every member against one reference member.
pub fn comparison_table(
    group: &[WordSnippet],
    reference_index: usize,
    cfg: &SimilarityConfig,
) -> Result<ComparisonTable> {
    if reference_index >= group.len() {
        return Err(Error::invalid(format!(
            "reference index {reference_index} out of range for group of {}",
            group.len()
        )));
    }
    let images = common_resize(group, cfg.target_w, cfg.target_h)?;
    let labels: Vec<String> = group.iter().map(|s| s.label()).collect();
    table_from_images(&images, &labels, reference_index, cfg)
}

pub fn table_from_images(
    images: &[GrayImage],
    labels: &[String],
    reference_index: usize,
    cfg: &SimilarityConfig,
) -> Result<ComparisonTable> {
    if reference_index >= images.len() {
        return Err(Error::invalid("reference index out of range"));
    }
    let profiles = images
        .iter()
        .map(|img| vertical_projection(img, cfg.profile_threshold))
        .collect::<Result<Vec<_>>>()?;
    let r = reference_index;
    let mut rows = Vec::with_capacity(images.len());
    for i in 0..images.len() {
        let (m, s, d) = if i == r {
            (0.0, 1.0, 1.0)
        } else {
            (
                mse(&images[r], &images[i])?,
                ssim_with(&images[r], &images[i], &cfg.ssim)?,
                dtw_similarity(&profiles[r], &profiles[i])?,
            )
        };
        rows.push(ComparisonRow {
            label: labels[i].clone(),
            mse: m,
            ssim: s,
            dtw: d,
        });
    }
    Ok(ComparisonTable {
        reference: labels[r].clone(),
        rows,
    })
}
