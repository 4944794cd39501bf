//! Automatic seed selection.
//!
//! Seeds are drawn in four steps:
//!
//! 1. keep only *interior* foreground pixels, whose whole `R×R` window is
//!    foreground and inside the image (boundary pixels and outliers drop out);
//! 2. describe each surviving candidate by its normalized position and intensity;
//! 3. cluster the candidates with K-means;
//! 4. snap each centroid to its nearest candidate, then give every ROI that
//!    still has no seed a fallback seed near its centroid.
//!
//! Optionally, snapping only considers *homogeneous* candidates, i.e. those
//! whose window intensity spread does not exceed the median window spread over
//! the foreground pixels of their ROI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{kmeans, KMeansModel};
use crate::raster::{same_dims, BinaryMask, GrayImage, LabelMap};
use crate::roi::Roi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedCandidate {
    pub x: usize,
    pub y: usize,
    pub intensity: u8,
    pub roi_id: u32,
}

/// Normalized `(x, y, intensity)` feature; each component lies in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub fx: f64,
    pub fy: f64,
    pub fi: f64,
}

impl FeatureVector {
    #[inline]
    pub fn dist2(&self, other: &FeatureVector) -> f64 {
        let dx = self.fx - other.fx;
        let dy = self.fy - other.fy;
        let di = self.fi - other.fi;
        dx * dx + dy * dy + di * di
    }

    fn scaled(&self, w: &FeatureWeights) -> FeatureVector {
        FeatureVector {
            fx: self.fx * w.x,
            fy: self.fy * w.y,
            fi: self.fi * w.intensity,
        }
    }
}

/// Per-axis multipliers applied to features before clustering and snapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights {
    pub x: f64,
    pub y: f64,
    pub intensity: f64,
}

impl Default for FeatureWeights {
    fn default() -> Self {
        Self {
            x: 1.0,
            y: 1.0,
            intensity: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub x: usize,
    pub y: usize,
    pub intensity: u8,
    pub roi_id: u32,
    pub cluster_id: usize,
    /// Added by ROI coverage enforcement rather than by snapping a centroid.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct SeedSelection {
    pub seeds: Vec<Seed>,
    /// ROIs that own no candidate and therefore received no seed.
    pub seedless_rois: Vec<u32>,
    pub model: KMeansModel,
}

/// Foreground pixels whose full `r×r` window (radius `r/2`) is foreground
/// and inside the image, in raster order.
pub fn interior_candidates(
    mask: &BinaryMask,
    labels: &LabelMap,
    img: &GrayImage,
    r: usize,
) -> Result<Vec<SeedCandidate>> {
    check_window(r)?;
    let dims = (mask.width(), mask.height());
    same_dims(dims, (labels.width(), labels.height()), "mask vs labels")?;
    same_dims(dims, (img.width(), img.height()), "mask vs image")?;
    let (w, h) = dims;
    let half = r / 2;
    if w < r || h < r {
        return Ok(Vec::new());
    }

    // summed-area table of foreground counts, (w+1)x(h+1)
    let stride = w + 1;
    let mut sat = vec![0u32; stride * (h + 1)];
    for y in 0..h {
        let mut row = 0u32;
        for x in 0..w {
            row += mask.get(x, y) as u32;
            sat[(y + 1) * stride + x + 1] = sat[y * stride + x + 1] + row;
        }
    }
    let full = (r * r) as u32;

    let mut out = Vec::new();
    for y in half..h - half {
        for x in half..w - half {
            let roi_id = labels.get(x, y);
            if roi_id == 0 {
                continue;
            }
            let (x0, y0, x1, y1) = (x - half, y - half, x + half + 1, y + half + 1);
            let count = sat[y1 * stride + x1] + sat[y0 * stride + x0]
                - sat[y0 * stride + x1]
                - sat[y1 * stride + x0];
            if count == full {
                out.push(SeedCandidate {
                    x,
                    y,
                    intensity: img.get(x, y),
                    roi_id,
                });
            }
        }
    }
    Ok(out)
}

/// Maps candidates to `(x/(w−1), y/(h−1), intensity/255)`; a one-pixel axis maps to 0.
pub fn extract_features(cands: &[SeedCandidate], img: &GrayImage) -> Result<Vec<FeatureVector>> {
    if cands.is_empty() {
        return Err(Error::NoCandidates);
    }
    let sx = img.width().saturating_sub(1) as f64;
    let sy = img.height().saturating_sub(1) as f64;
    Ok(cands
        .iter()
        .map(|c| FeatureVector {
            fx: if sx > 0.0 { c.x as f64 / sx } else { 0.0 },
            fy: if sy > 0.0 { c.y as f64 / sy } else { 0.0 },
            fi: c.intensity as f64 / 255.0,
        })
        .collect())
}

/// Scaled intensity spread of the `r×r` window around `(x, y)`, replicate-padded:
/// `n·Σv² − (Σv)²`, which is `n²` times the window variance.
pub fn window_spread(img: &GrayImage, x: usize, y: usize, r: usize) -> u64 {
    let half = (r / 2) as isize;
    let (mut s, mut s2) = (0u64, 0u64);
    for dy in -half..=half {
        for dx in -half..=half {
            let v = img.get_clamped(x as isize + dx, y as isize + dy) as u64;
            s += v;
            s2 += v * v;
        }
    }
    let n = (r * r) as u64;
    n * s2 - s * s
}

/// Per-ROI lower median of [`window_spread`] over all foreground pixels,
/// indexed by ROI id (entry 0 unused).
pub fn roi_median_spread(labels: &LabelMap, img: &GrayImage, r: usize) -> Vec<Option<u64>> {
    let n = labels.max_label() as usize;
    let mut per_roi: Vec<Vec<u64>> = vec![Vec::new(); n + 1];
    let w = labels.width();
    for (i, &l) in labels.labels().iter().enumerate() {
        if l != 0 {
            per_roi[l as usize].push(window_spread(img, i % w, i / w, r));
        }
    }
    per_roi
        .into_iter()
        .map(|mut v| {
            if v.is_empty() {
                None
            } else {
                let mid = (v.len() - 1) / 2;
                Some(*v.select_nth_unstable(mid).1)
            }
        })
        .collect()
}

/// Marks candidates whose window spread is at most their ROI's median spread.
///
/// A ROI where no candidate qualifies keeps all of its candidates eligible.
pub fn homogeneous_candidates(
    cands: &[SeedCandidate],
    labels: &LabelMap,
    img: &GrayImage,
    r: usize,
) -> Vec<bool> {
    let medians = roi_median_spread(labels, img, r);
    let mut eligible: Vec<bool> = cands
        .iter()
        .map(|c| {
            medians
                .get(c.roi_id as usize)
                .copied()
                .flatten()
                .is_some_and(|m| window_spread(img, c.x, c.y, r) <= m)
        })
        .collect();
    let mut any = vec![false; medians.len()];
    for (c, &e) in cands.iter().zip(&eligible) {
        if e {
            any[c.roi_id as usize] = true;
        }
    }
    for (c, e) in cands.iter().zip(eligible.iter_mut()) {
        if !any.get(c.roi_id as usize).copied().unwrap_or(false) {
            *e = true;
        }
    }
    eligible
}

pub fn select_seeds(
    cands: &[SeedCandidate],
    feats: &[FeatureVector],
    rois: &[Roi],
    k: usize,
    rng_seed: u64,
) -> Result<SeedSelection> {
    select_seeds_with(
        cands,
        feats,
        rois,
        k,
        rng_seed,
        &FeatureWeights::default(),
        None,
    )
}

/// Clusters all candidates, snaps each centroid to the nearest eligible
/// candidate and enforces one seed per ROI that has candidates.
///
/// `eligible`, when given, restricts which candidates may become seeds; the
/// clustering itself always sees every candidate.
pub fn select_seeds_with(
    cands: &[SeedCandidate],
    feats: &[FeatureVector],
    rois: &[Roi],
    k: usize,
    rng_seed: u64,
    weights: &FeatureWeights,
    eligible: Option<&[bool]>,
) -> Result<SeedSelection> {
    if cands.is_empty() {
        return Err(Error::NoCandidates);
    }
    if feats.len() != cands.len() || eligible.is_some_and(|e| e.len() != cands.len()) {
        return Err(Error::DimensionMismatch(
            "candidate, feature and eligibility lists differ in length".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if k > cands.len() {
        return Err(Error::TooManyClusters {
            k,
            available: cands.len(),
            what: "seed candidates",
        });
    }
    let is_eligible = |i: usize| eligible.is_none_or(|e| e[i]);

    let scaled: Vec<FeatureVector> = feats.iter().map(|f| f.scaled(weights)).collect();
    let model = kmeans(&scaled, k, rng_seed)?;

    let mut used = vec![false; cands.len()];
    let mut seeds = Vec::with_capacity(k);
    for (j, centroid) in model.centroids.iter().enumerate() {
        let best = argmin_by((0..cands.len()).filter(|&i| is_eligible(i)), |i| {
            scaled[i].dist2(centroid)
        });
        if let Some(i) = best {
            if !used[i] {
                used[i] = true;
                seeds.push(seed_from(&cands[i], j, false));
            }
        }
    }

    let mut seedless = Vec::new();
    for roi in rois {
        if seeds.iter().any(|s| s.roi_id == roi.id) {
            continue;
        }
        let (cx, cy) = roi.centroid;
        let in_roi = (0..cands.len()).filter(|&i| cands[i].roi_id == roi.id);
        let pick = argmin_by(in_roi.filter(|&i| is_eligible(i)), |i| {
            let dx = cands[i].x as f64 - cx;
            let dy = cands[i].y as f64 - cy;
            dx * dx + dy * dy
        });
        match pick {
            Some(i) => {
                used[i] = true;
                seeds.push(seed_from(&cands[i], model.assignments[i], true));
            }
            None => seedless.push(roi.id),
        }
    }

    Ok(SeedSelection {
        seeds,
        seedless_rois: seedless,
        model,
    })
}

fn seed_from(c: &SeedCandidate, cluster_id: usize, fallback: bool) -> Seed {
    Seed {
        x: c.x,
        y: c.y,
        intensity: c.intensity,
        roi_id: c.roi_id,
        cluster_id,
        fallback,
    }
}

/// First index with the strictly smallest key.
fn argmin_by(indices: impl Iterator<Item = usize>, key: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in indices {
        let d = key(i);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

pub(crate) fn check_window(r: usize) -> Result<()> {
    if r == 0 || r.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "seed mask size R must be odd and positive, got {r}"
        )));
    }
    Ok(())
}
