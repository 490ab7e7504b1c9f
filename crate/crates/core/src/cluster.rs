//! Outlier removal by 2-way spectral clustering and canonical-form blending,
//! plus cross-period comparison of the blended forms.

mod eigen;

pub use eigen::{symmetric_eigen, SymmetricEigen};

use crate::corpus::Period;
use crate::error::{Error, Result};
use crate::imagecore::GrayImage;
use crate::segmentation::WordSnippet;
use crate::similarity::{
    common_resize, matrix_from_images, table_from_images, ComparisonTable, Metric,
    SimilarityConfig, SimilarityMatrix,
};

/// Symmetric nonnegative affinity matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinity {
    n: usize,
    values: Vec<f64>,
}

impl Affinity {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::invalid("affinity matrix must be square"));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::invalid("affinity entries must be finite and >= 0"));
                }
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::invalid("affinity matrix must be symmetric"));
                }
            }
        }
        Ok(Affinity { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn degree(&self, i: usize) -> f64 {
        (0..self.n).map(|j| self.get(i, j)).sum()
    }
}

/// Two-way cluster labels; the main (larger) cluster always carries id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub main_cluster: usize,
}

impl ClusterAssignment {
    pub fn main_members(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == self.main_cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn main_size(&self) -> usize {
        self.labels
            .iter()
            .filter(|&&l| l == self.main_cluster)
            .count()
    }
}

/// Pixel-wise mean of a main cluster, with its provenance.
#[derive(Debug, Clone)]
pub struct CanonicalForm {
    pub image: GrayImage,
    pub word_label: String,
    pub period: Period,
    pub member_count: usize,
    /// Labels of the blended members.
    pub members: Vec<String>,
}

/// Turn a metric matrix into a nonnegative affinity. Similarities pass
/// through ([0,1]-clamped for SSIM); MSE distances map through
/// exp(-v / median off-diagonal), the parameter-free bandwidth.
pub fn to_affinity(m: &SimilarityMatrix) -> Affinity {
    let n = m.n();
    let mut values = vec![0.0; n * n];
    match m.metric {
        Metric::Dtw => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        values[i * n + j] = m.get(i, j);
                    }
                }
            }
        }
        Metric::Ssim => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        values[i * n + j] = m.get(i, j).clamp(0.0, 1.0);
                    }
                }
            }
        }
        Metric::Mse => {
            let mut off: Vec<f64> = Vec::with_capacity(n * (n - 1));
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off.push(m.get(i, j));
                    }
                }
            }
            off.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = if off.is_empty() {
                0.0
            } else if off.len() % 2 == 1 {
                off[off.len() / 2]
            } else {
                (off[off.len() / 2 - 1] + off[off.len() / 2]) / 2.0
            };
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        values[i * n + j] = if median == 0.0 {
                            1.0
                        } else {
                            (-m.get(i, j) / median).exp()
                        };
                    }
                }
            }
        }
    }
    Affinity { n, values }
}

/// Bipartition by the sign pattern of the Fiedler vector of the symmetric
/// normalized Laplacian. Degenerate cases resolve deterministically: a
/// uniform affinity splits by index, an all-same-sign vector isolates the
/// minimum-degree node, and zero-degree nodes join the minority side.
pub fn spectral_bipartition(a: &Affinity) -> Result<ClusterAssignment> {
    let n = a.n();
    if n < 2 {
        return Err(Error::invalid(
            "spectral bipartition needs at least 2 members",
        ));
    }

    // Uniform affinities carry no structure; split by index with the first
    // half (containing index 0) as the main cluster.
    let first_off = a.get(0, 1);
    let uniform = (0..n).all(|i| (0..n).all(|j| i == j || a.get(i, j) == first_off));
    if uniform {
        let main_len = n.div_ceil(2);
        let labels = (0..n).map(|i| usize::from(i >= main_len)).collect();
        return Ok(ClusterAssignment {
            labels,
            main_cluster: 0,
        });
    }

    let degrees: Vec<f64> = (0..n).map(|i| a.degree(i)).collect();
    let active: Vec<usize> = (0..n).filter(|&i| degrees[i] > 0.0).collect();
    let isolated: Vec<usize> = (0..n).filter(|&i| degrees[i] == 0.0).collect();
    debug_assert!(active.len() >= 2, "positive affinities come in pairs");

    // Symmetric normalized Laplacian over the connected (active) nodes.
    let k = active.len();
    let mut lap = vec![0.0; k * k];
    for (r, &i) in active.iter().enumerate() {
        for (c, &j) in active.iter().enumerate() {
            lap[r * k + c] = if r == c {
                1.0
            } else {
                -a.get(i, j) / (degrees[i] * degrees[j]).sqrt()
            };
        }
    }
    let eig = symmetric_eigen(&lap, k)?;
    let fiedler = &eig.vectors[1];

    let mut side_a: Vec<usize> = Vec::new();
    let mut side_b: Vec<usize> = Vec::new();
    for (r, &i) in active.iter().enumerate() {
        if fiedler[r] >= 0.0 {
            side_a.push(i);
        } else {
            side_b.push(i);
        }
    }
    if side_a.is_empty() || side_b.is_empty() {
        // All one sign: peel off the weakest-connected node.
        let lone = *active
            .iter()
            .min_by(|&&x, &&y| degrees[x].partial_cmp(&degrees[y]).unwrap().then(x.cmp(&y)))
            .unwrap();
        side_b = vec![lone];
        side_a = active.iter().copied().filter(|&i| i != lone).collect();
    }

    // Zero-degree nodes join the smaller side.
    for &i in &isolated {
        if side_b.len() <= side_a.len() {
            side_b.push(i);
        } else {
            side_a.push(i);
        }
    }

    // Main cluster: larger side; ties go to the side holding the snippet
    // with the highest total affinity (then the lowest index).
    let a_is_main = match side_a.len().cmp(&side_b.len()) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => {
            let strongest = (0..n)
                .max_by(|&x, &y| {
                    degrees[x]
                        .partial_cmp(&degrees[y])
                        .unwrap()
                        .then(y.cmp(&x))
                })
                .unwrap();
            side_a.contains(&strongest)
        }
    };

    let mut labels = vec![1usize; n];
    let main = if a_is_main { &side_a } else { &side_b };
    for &i in main {
        labels[i] = 0;
    }
    Ok(ClusterAssignment {
        labels,
        main_cluster: 0,
    })
}

/// k-way spectral clustering for k > 2: row-normalized embedding over the
/// first k eigenvectors, then deterministic farthest-first k-means.
pub fn spectral_kway(a: &Affinity, k: usize) -> Result<Vec<usize>> {
    let n = a.n();
    if k < 2 || k > n {
        return Err(Error::invalid(format!(
            "cluster count {k} out of range for {n} members"
        )));
    }
    if k == 2 {
        return Ok(spectral_bipartition(a)?.labels);
    }
    let degrees: Vec<f64> = (0..n).map(|i| a.degree(i)).collect();
    let mut lap = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            lap[i * n + j] = if i == j {
                1.0
            } else if degrees[i] > 0.0 && degrees[j] > 0.0 {
                -a.get(i, j) / (degrees[i] * degrees[j]).sqrt()
            } else {
                0.0
            };
        }
    }
    let eig = symmetric_eigen(&lap, n)?;
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..k).map(|c| eig.vectors[c][i]).collect())
        .collect();
    for row in rows.iter_mut() {
        let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }

    // Farthest-first seeding from row 0, then Lloyd iterations.
    let dist = |x: &[f64], y: &[f64]| -> f64 {
        x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    };
    let mut centers: Vec<Vec<f64>> = vec![rows[0].clone()];
    while centers.len() < k {
        let far = (0..n)
            .max_by(|&x, &y| {
                let dx = centers.iter().map(|c| dist(&rows[x], c)).fold(f64::MAX, f64::min);
                let dy = centers.iter().map(|c| dist(&rows[y], c)).fold(f64::MAX, f64::min);
                dx.partial_cmp(&dy).unwrap().then(y.cmp(&x))
            })
            .unwrap();
        centers.push(rows[far].clone());
    }
    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, row) in rows.iter().enumerate() {
            let best = (0..k)
                .min_by(|&x, &y| {
                    dist(row, &centers[x])
                        .partial_cmp(&dist(row, &centers[y]))
                        .unwrap()
                        .then(x.cmp(&y))
                })
                .unwrap();
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = rows
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == c)
                .map(|(r, _)| r)
                .collect();
            if members.is_empty() {
                continue;
            }
            for (d, slot) in center.iter_mut().enumerate() {
                *slot = members.iter().map(|r| r[d]).sum::<f64>() / members.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(labels)
}

/// Equal-weight per-pixel mean, rounded half-up.
pub fn blend_canonical(
    members: &[GrayImage],
    word_label: &str,
    period: Period,
    member_labels: Vec<String>,
) -> Result<CanonicalForm> {
    if members.is_empty() {
        return Err(Error::invalid("cannot blend an empty member list"));
    }
    let (w, h) = (members[0].width(), members[0].height());
    if members.iter().any(|m| m.width() != w || m.height() != h) {
        return Err(Error::invalid("blend members must share dimensions"));
    }
    if member_labels.len() != members.len() {
        return Err(Error::invalid("blend labels must match member count"));
    }
    let count = members.len() as f64;
    let len = (w * h) as usize;
    let mut sums = vec![0u32; len];
    for m in members {
        for (s, &p) in sums.iter_mut().zip(m.pixels()) {
            *s += p as u32;
        }
    }
    let pixels = sums
        .iter()
        .map(|&s| (s as f64 / count).round() as u8)
        .collect();
    Ok(CanonicalForm {
        image: GrayImage::new(w, h, pixels)?,
        word_label: word_label.to_string(),
        period,
        member_count: members.len(),
        members: member_labels,
    })
}

/// Full canonical-form pipeline for one word group in one period:
/// common-resize, similarity matrix, affinity, bipartition, blend the main
/// cluster.
pub fn canonical_pipeline(
    group: &[WordSnippet],
    word_label: &str,
    metric: Metric,
    cfg: &SimilarityConfig,
) -> Result<CanonicalForm> {
    canonical_pipeline_k(group, word_label, metric, cfg, 2)
}

/// Canonical pipeline with a configurable cluster count; k > 2 switches to
/// k-means over the spectral embedding and blends the largest cluster.
pub fn canonical_pipeline_k(
    group: &[WordSnippet],
    word_label: &str,
    metric: Metric,
    cfg: &SimilarityConfig,
    k: usize,
) -> Result<CanonicalForm> {
    if group.len() < 2 {
        return Err(Error::invalid(
            "canonical pipeline needs a group of at least 2 snippets",
        ));
    }
    let images = common_resize(group, cfg.target_w, cfg.target_h)?;
    let labels: Vec<String> = group.iter().map(|s| s.label()).collect();
    let matrix = matrix_from_images(&images, labels.clone(), metric, cfg)?;
    let affinity = to_affinity(&matrix);
    let members: Vec<usize> = if k <= 2 {
        spectral_bipartition(&affinity)?.main_members()
    } else {
        let k = k.min(group.len());
        let assignment = spectral_kway(&affinity, k)?;
        let mut counts = vec![0usize; k];
        for &l in &assignment {
            counts[l] += 1;
        }
        let main = (0..k)
            .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
            .unwrap();
        assignment
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == main)
            .map(|(i, _)| i)
            .collect()
    };
    let member_images: Vec<GrayImage> = members.iter().map(|&i| images[i].clone()).collect();
    let member_labels: Vec<String> = members.iter().map(|&i| labels[i].clone()).collect();
    blend_canonical(&member_images, word_label, group[0].period, member_labels)
}

/// Cross-period similarity of canonical forms: all three metric matrices and
/// the comparison table against the first form.
#[derive(Debug, Clone)]
pub struct CanonicalComparison {
    pub matrices: Vec<SimilarityMatrix>,
    pub table: ComparisonTable,
}

pub fn compare_canonicals(
    forms: &[CanonicalForm],
    cfg: &SimilarityConfig,
) -> Result<CanonicalComparison> {
    if forms.len() < 2 {
        return Err(Error::invalid("canonical comparison needs at least 2 forms"));
    }
    let (w, h) = (forms[0].image.width(), forms[0].image.height());
    if forms.iter().any(|f| f.image.width() != w || f.image.height() != h) {
        return Err(Error::invalid("canonical forms must share dimensions"));
    }
    let images: Vec<GrayImage> = forms.iter().map(|f| f.image.clone()).collect();
    let labels: Vec<String> = forms.iter().map(|f| f.period.to_string()).collect();
    let matrices = Metric::all()
        .iter()
        .map(|&m| matrix_from_images(&images, labels.clone(), m, cfg))
        .collect::<Result<Vec<_>>>()?;
    let table = table_from_images(&images, &labels, 0, cfg)?;
    Ok(CanonicalComparison { matrices, table })
}
