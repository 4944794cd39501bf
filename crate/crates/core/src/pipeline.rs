//! End-to-end segmentation: denoise, threshold, extract ROIs, pick seeds, grow.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grow::{accept, grow_regions, GrowConfig, GrowResult, NeighborhoodRule};
use crate::kmeans::KMeansModel;
use crate::preprocess::median_filter;
use crate::raster::{histogram, BinaryMask, GrayImage, LabelMap};
use crate::roi::{connected_components, filter_small, Connectivity, Roi};
use crate::seed_select::{
    check_window, extract_features, homogeneous_candidates, interior_candidates, select_seeds_with,
    FeatureWeights, Seed, SeedCandidate, SeedSelection,
};
use crate::threshold::{binarize, otsu_threshold, OtsuResult, Polarity};

pub const SCHEMA_VERSION: u32 = 1;

/// Frontier discipline used by [`grow_regions`], echoed in reports.
pub const GROWTH_ORDER: &str = "best_first_abs_diff_region_mean_fifo_ties";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Number of K-means clusters, i.e. seeds before ROI coverage.
    pub k: usize,
    /// Side of the square window a seed candidate must fill (odd).
    pub seed_mask_r: usize,
    pub median_radius: usize,
    pub grow_radius: usize,
    pub connectivity: Connectivity,
    pub polarity: Polarity,
    pub min_area: usize,
    pub rng_seed: u64,
    pub neighborhood_rule: NeighborhoodRule,
    pub feature_weights: FeatureWeights,
    /// Only snap seeds to candidates whose window is at least as flat as the
    /// median window of their ROI.
    pub homogeneous_seeds: bool,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            k: 4,
            seed_mask_r: 3,
            median_radius: 1,
            grow_radius: 1,
            connectivity: Connectivity::Four,
            polarity: Polarity::BrightForeground,
            min_area: 9,
            rng_seed: 0,
            neighborhood_rule: NeighborhoodRule::PixelAndMean,
            feature_weights: FeatureWeights::default(),
            homogeneous_seeds: true,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        check_window(self.seed_mask_r)?;
        let w = &self.feature_weights;
        if [w.x, w.y, w.intensity]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::InvalidParameter(
                "feature weights must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn grow_config(&self, threshold: u8) -> GrowConfig {
        GrowConfig {
            threshold,
            polarity: self.polarity,
            grow_radius: self.grow_radius,
            connectivity: self.connectivity,
            neighborhood_rule: self.neighborhood_rule,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub median: f64,
    pub otsu: f64,
    pub roi: f64,
    pub candidates: f64,
    pub seeds: f64,
    pub grow: f64,
    pub total: f64,
}

/// Every intermediate product of one run.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub config: SegmentationConfig,
    pub filtered: GrayImage,
    pub otsu: OtsuResult,
    pub mask: BinaryMask,
    pub roi_labels: LabelMap,
    pub rois: Vec<Roi>,
    pub candidates: Vec<SeedCandidate>,
    pub selection: SeedSelection,
    pub seeds: Vec<Seed>,
    pub grow_config: GrowConfig,
    pub grown: GrowResult,
    pub warnings: Vec<String>,
    pub timings: StageTimings,
}

impl Segmentation {
    pub fn labels(&self) -> &LabelMap {
        &self.grown.labels
    }

    pub fn kmeans(&self) -> &KMeansModel {
        &self.selection.model
    }

    pub fn report(&self, input: Option<&str>, with_timings: bool) -> RunReport {
        RunReport {
            schema_version: SCHEMA_VERSION,
            input: input.map(str::to_owned),
            config: self.config.clone(),
            growth_order: GROWTH_ORDER.to_owned(),
            otsu: self.otsu,
            roi_count: self.rois.len(),
            rois: self.rois.clone(),
            candidate_count: self.candidates.len(),
            kmeans: KMeansSummary {
                iterations: self.selection.model.iterations,
                inertia: self.selection.model.inertia,
            },
            seeds: self.seeds.clone(),
            seedless_rois: self.selection.seedless_rois.clone(),
            region_sizes: self.grown.region_sizes.clone(),
            frontier_rejections: self.grown.frontier_rejections,
            warnings: self.warnings.clone(),
            timings_ms: with_timings.then(|| self.timings.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansSummary {
    pub iterations: usize,
    pub inertia: f64,
}

/// Machine-readable summary of a run. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub input: Option<String>,
    pub config: SegmentationConfig,
    pub growth_order: String,
    pub otsu: OtsuResult,
    pub roi_count: usize,
    pub rois: Vec<Roi>,
    pub candidate_count: usize,
    pub kmeans: KMeansSummary,
    pub seeds: Vec<Seed>,
    pub seedless_rois: Vec<u32>,
    pub region_sizes: Vec<usize>,
    pub frontier_rejections: usize,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings_ms: Option<StageTimings>,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn segment(img: &GrayImage, cfg: &SegmentationConfig) -> Result<Segmentation> {
    cfg.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let mut warnings = Vec::new();

    let t = Instant::now();
    let filtered = median_filter(img, cfg.median_radius);
    timings.median = ms_since(t);

    let t = Instant::now();
    let otsu = otsu_threshold(&histogram(&filtered))?;
    let mask = binarize(&filtered, otsu.threshold, cfg.polarity);
    timings.otsu = ms_since(t);

    let t = Instant::now();
    let (all_labels, all_rois) = connected_components(&mask, cfg.connectivity);
    let (roi_labels, rois) = filter_small(&all_rois, &all_labels, cfg.min_area);
    timings.roi = ms_since(t);
    if rois.is_empty() {
        return Err(Error::NoRoi);
    }
    if rois.len() < all_rois.len() {
        warnings.push(format!(
            "{} component(s) smaller than {} px ignored",
            all_rois.len() - rois.len(),
            cfg.min_area
        ));
    }

    let t = Instant::now();
    let candidates = interior_candidates(&mask, &roi_labels, &filtered, cfg.seed_mask_r)?;
    timings.candidates = ms_since(t);
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    if cfg.k > candidates.len() {
        return Err(Error::TooManyClusters {
            k: cfg.k,
            available: candidates.len(),
            what: "seed candidates",
        });
    }

    let t = Instant::now();
    let feats = extract_features(&candidates, &filtered)?;
    let eligible = cfg
        .homogeneous_seeds
        .then(|| homogeneous_candidates(&candidates, &roi_labels, &filtered, cfg.seed_mask_r));
    let selection = select_seeds_with(
        &candidates,
        &feats,
        &rois,
        cfg.k,
        cfg.rng_seed,
        &cfg.feature_weights,
        eligible.as_deref(),
    )?;
    timings.seeds = ms_since(t);
    for id in &selection.seedless_rois {
        warnings.push(format!(
            "ROI {id} has no interior candidate and stays seedless"
        ));
    }

    let grow_config = cfg.grow_config(otsu.threshold);
    let mut seeds = Vec::with_capacity(selection.seeds.len());
    for s in &selection.seeds {
        if accept(&filtered, s.x, s.y, &grow_config) {
            seeds.push(*s);
        } else {
            warnings.push(format!(
                "seed at ({}, {}) fails the growth acceptance rule and was dropped",
                s.x, s.y
            ));
        }
    }

    let t = Instant::now();
    let grown = grow_regions(&filtered, &seeds, &grow_config)?;
    timings.grow = ms_since(t);
    timings.total = ms_since(start);

    Ok(Segmentation {
        config: cfg.clone(),
        filtered,
        otsu,
        mask,
        roi_labels,
        rois,
        candidates,
        selection,
        seeds,
        grow_config,
        grown,
        warnings,
        timings,
    })
}

/// Copy of `img` with every seed pixel set to 0 (bright objects) or 255 (dark objects).
pub fn seed_overlay(img: &GrayImage, seeds: &[Seed], polarity: Polarity) -> GrayImage {
    let mark = match polarity {
        Polarity::BrightForeground => 0,
        Polarity::DarkForeground => 255,
    };
    let mut out = img.clone();
    let w = out.width();
    for s in seeds {
        out.pixels_mut()[s.y * w + s.x] = mark;
    }
    out
}
