//! Bag-of-features channel: dense local gradient descriptors, a k-means
//! visual vocabulary, and L1-normalized word histograms per model.
//!
//! Descriptors are sampled on a fixed grid instead of around detected
//! keypoints: at every grid point whose patch touches foreground, a 4x4 grid
//! of 8-bin gradient-orientation histograms (128 values) is accumulated with
//! Gaussian weighting, L2-normalized, clamped at 0.2 and renormalized. All
//! views of a model pool their descriptors into a single bag.

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::projection::ViewSet;

/// Spatial cells per side and orientation bins per cell.
const GRID_CELLS: usize = 4;
const ORIENTATION_BINS: usize = 8;
/// Descriptor dimensionality: 4 x 4 cells x 8 bins.
pub const DESCRIPTOR_DIM: usize = GRID_CELLS * GRID_CELLS * ORIENTATION_BINS;

/// Descriptor entries above this fraction of the L2 norm are clamped before
/// the final renormalization.
const CLAMP: f64 = 0.2;

/// One local gradient-orientation descriptor with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDescriptor {
    pub values: Vec<f64>,
    pub model_id: String,
    pub view_index: usize,
}

/// Dense sampling parameters, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExtractParams {
    pub grid_step: usize,
    pub patch_size: usize,
}

impl Default for ExtractParams {
    fn default() -> Self {
        ExtractParams {
            grid_step: 8,
            patch_size: 16,
        }
    }
}

/// Extract the pooled descriptor bag of a view set. Patches whose pixels are
/// all background, and patches with no gradient energy at all, contribute
/// nothing; an entirely blank model yields an empty list.
pub fn extract_descriptors(views: &ViewSet, params: ExtractParams) -> Result<Vec<LocalDescriptor>> {
    if params.patch_size < GRID_CELLS || params.grid_step == 0 {
        return Err(Error::InvalidConfig(format!(
            "patch size {} / grid step {} unusable",
            params.patch_size, params.grid_step
        )));
    }
    let mut bag = Vec::new();
    for image in &views.images {
        if params.patch_size > image.width || params.patch_size > image.height {
            return Err(Error::InvalidConfig(format!(
                "patch size {} exceeds image {}x{}",
                params.patch_size, image.width, image.height
            )));
        }
        let (w, h) = (image.width, image.height);
        // central-difference gradients with clamped borders
        let mut gx = vec![0.0; w * h];
        let mut gy = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let xm = image.get(x.saturating_sub(1), y);
                let xp = image.get((x + 1).min(w - 1), y);
                let ym = image.get(x, y.saturating_sub(1));
                let yp = image.get(x, (y + 1).min(h - 1));
                gx[y * w + x] = (xp - xm) * 0.5;
                gy[y * w + x] = (yp - ym) * 0.5;
            }
        }

        let half = params.patch_size / 2;
        let sigma = params.patch_size as f64 / 2.0;
        let mut origin_y = 0;
        while origin_y + params.patch_size <= h {
            let mut origin_x = 0;
            while origin_x + params.patch_size <= w {
                let mut foreground = false;
                'scan: for py in 0..params.patch_size {
                    for px in 0..params.patch_size {
                        if image.get(origin_x + px, origin_y + py) != 0.0 {
                            foreground = true;
                            break 'scan;
                        }
                    }
                }
                if foreground {
                    let mut values = vec![0.0; DESCRIPTOR_DIM];
                    for py in 0..params.patch_size {
                        for px in 0..params.patch_size {
                            let (x, y) = (origin_x + px, origin_y + py);
                            let (dx, dy) = (gx[y * w + x], gy[y * w + x]);
                            let magnitude = (dx * dx + dy * dy).sqrt();
                            if magnitude == 0.0 {
                                continue;
                            }
                            let du = px as f64 + 0.5 - half as f64;
                            let dv = py as f64 + 0.5 - half as f64;
                            let weight = (-(du * du + dv * dv) / (2.0 * sigma * sigma)).exp();
                            let cell_x = (px * GRID_CELLS / params.patch_size).min(GRID_CELLS - 1);
                            let cell_y = (py * GRID_CELLS / params.patch_size).min(GRID_CELLS - 1);
                            let angle = dy.atan2(dx); // (-pi, pi]
                            let mut bin = ((angle + std::f64::consts::PI)
                                / (2.0 * std::f64::consts::PI)
                                * ORIENTATION_BINS as f64)
                                .floor() as usize;
                            if bin >= ORIENTATION_BINS {
                                bin = 0; // angle == +pi wraps around
                            }
                            values[(cell_y * GRID_CELLS + cell_x) * ORIENTATION_BINS + bin] +=
                                weight * magnitude;
                        }
                    }
                    if normalize_descriptor(&mut values) {
                        bag.push(LocalDescriptor {
                            values,
                            model_id: views.model_id.clone(),
                            view_index: image.view_index,
                        });
                    }
                }
                origin_x += params.grid_step;
            }
            origin_y += params.grid_step;
        }
    }
    Ok(bag)
}

/// L2-normalize, clamp at 0.2, renormalize. Returns false for descriptors
/// with no gradient energy, which are dropped.
fn normalize_descriptor(values: &mut [f64]) -> bool {
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return false;
    }
    for v in values.iter_mut() {
        *v = (*v / norm).min(CLAMP);
    }
    let norm2 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in values.iter_mut() {
        *v /= norm2;
    }
    true
}

/// A learned visual vocabulary: K centroids in descriptor space.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub centroids: Array2<f64>,
    pub rng_seed: u64,
    pub iterations: usize,
}

impl Vocabulary {
    pub fn word_count(&self) -> usize {
        self.centroids.nrows()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid, ties resolved to the lowest index.
fn nearest_centroid(point: &[f64], centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.rows().into_iter().enumerate() {
        let d = squared_distance(point, c.as_slice().unwrap());
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// K-means with k-means++ seeding and Lloyd iterations, run until the total
/// centroid movement drops below 1e-6 or 100 iterations pass. Also returns
/// the per-iteration mean distortion, which never increases.
pub fn build_vocabulary_traced(
    descriptors: &[LocalDescriptor],
    k: usize,
    seed: u64,
) -> Result<(Vocabulary, Vec<f64>)> {
    if k == 0 {
        return Err(Error::InvalidConfig("vocabulary size must be >= 1".into()));
    }
    if descriptors.len() < k {
        return Err(Error::InvalidInput(format!(
            "{} descriptors cannot seed {} words",
            descriptors.len(),
            k
        )));
    }
    let dim = descriptors[0].values.len();
    if descriptors.iter().any(|d| d.values.len() != dim) {
        return Err(Error::DimensionMismatch(
            "descriptors disagree on dimensionality".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centroids = Array2::zeros((k, dim));
    let first = rng.random_range(0..descriptors.len());
    centroids.row_mut(0).assign(
        &ndarray::ArrayView1::from(descriptors[first].values.as_slice()),
    );
    let mut best_sq: Vec<f64> = descriptors
        .iter()
        .map(|d| squared_distance(&d.values, centroids.row(0).as_slice().unwrap()))
        .collect();
    for next in 1..k {
        let total: f64 = best_sq.iter().sum();
        let chosen = if total > 0.0 {
            let weights = WeightedIndex::new(&best_sq)
                .map_err(|e| Error::InvalidInput(format!("k-means++ weights: {e}")))?;
            weights.sample(&mut rng)
        } else {
            // all remaining mass is zero: duplicate points, pick uniformly
            rng.random_range(0..descriptors.len())
        };
        centroids
            .row_mut(next)
            .assign(&ndarray::ArrayView1::from(descriptors[chosen].values.as_slice()));
        for (b, d) in best_sq.iter_mut().zip(descriptors) {
            let dd = squared_distance(&d.values, centroids.row(next).as_slice().unwrap());
            if dd < *b {
                *b = dd;
            }
        }
    }

    // Lloyd iterations
    let mut distortions = Vec::new();
    let mut iterations = 0;
    for _ in 0..100 {
        iterations += 1;
        let mut sums = Array2::<f64>::zeros((k, dim));
        let mut counts = vec![0usize; k];
        let mut distortion = 0.0;
        for d in descriptors {
            let (idx, sq) = nearest_centroid(&d.values, &centroids);
            distortion += sq;
            counts[idx] += 1;
            let mut row = sums.row_mut(idx);
            for (s, v) in row.iter_mut().zip(&d.values) {
                *s += v;
            }
        }
        distortions.push(distortion / descriptors.len() as f64);

        let mut movement = 0.0;
        for idx in 0..k {
            if counts[idx] == 0 {
                continue; // empty cluster keeps its centroid
            }
            let inv = 1.0 / counts[idx] as f64;
            let mut moved_sq = 0.0;
            for (c, s) in centroids.row_mut(idx).iter_mut().zip(sums.row(idx)) {
                let updated = s * inv;
                moved_sq += (updated - *c) * (updated - *c);
                *c = updated;
            }
            movement += moved_sq.sqrt();
        }
        if movement < 1e-6 {
            break;
        }
    }

    Ok((
        Vocabulary {
            centroids,
            rng_seed: seed,
            iterations,
        },
        distortions,
    ))
}

/// [`build_vocabulary_traced`] without the distortion trace.
pub fn build_vocabulary(descriptors: &[LocalDescriptor], k: usize, seed: u64) -> Result<Vocabulary> {
    build_vocabulary_traced(descriptors, k, seed).map(|(v, _)| v)
}

/// Draw at most `cap` descriptors uniformly without replacement for
/// vocabulary training.
pub fn sample_descriptors(
    descriptors: &[LocalDescriptor],
    cap: usize,
    seed: u64,
) -> Vec<LocalDescriptor> {
    if descriptors.len() <= cap {
        return descriptors.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..descriptors.len()).collect();
    indices.shuffle(&mut rng);
    indices.truncate(cap);
    indices.sort_unstable();
    indices.into_iter().map(|i| descriptors[i].clone()).collect()
}

/// L1-normalized visual-word histogram of one model. `empty` marks models
/// that produced no descriptors; their histogram is uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct BofHistogram {
    pub model_id: String,
    pub values: Vec<f64>,
    pub empty: bool,
}

/// Vote each descriptor into its nearest visual word and L1-normalize the
/// counts. An empty descriptor list yields the flagged uniform histogram.
pub fn quantize(
    model_id: &str,
    descriptors: &[LocalDescriptor],
    vocabulary: &Vocabulary,
) -> BofHistogram {
    let k = vocabulary.word_count();
    if descriptors.is_empty() {
        return BofHistogram {
            model_id: model_id.to_string(),
            values: vec![1.0 / k as f64; k],
            empty: true,
        };
    }
    let mut counts = vec![0.0; k];
    for d in descriptors {
        let (idx, _) = nearest_centroid(&d.values, &vocabulary.centroids);
        counts[idx] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    for c in counts.iter_mut() {
        *c /= total;
    }
    BofHistogram {
        model_id: model_id.to_string(),
        values: counts,
        empty: false,
    }
}

/// L1 distance between two histograms.
pub fn bof_distance(h1: &BofHistogram, h2: &BofHistogram) -> Result<f64> {
    if h1.values.len() != h2.values.len() {
        return Err(Error::DimensionMismatch(format!(
            "histogram sizes {} vs {}",
            h1.values.len(),
            h2.values.len()
        )));
    }
    Ok(h1
        .values
        .iter()
        .zip(&h2.values)
        .map(|(a, b)| (a - b).abs())
        .sum())
}
