//! Segmentation quality against ground truth: Dice overlap with greedy
//! one-to-one region matching, plus over-/under-segmentation flags.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::raster::{same_dims, LabelMap};

/// Dice score at or above which a region pair counts as overlapping for the
/// over-/under-segmentation flags.
pub const OVERLAP_DICE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMatch {
    pub gt: u32,
    pub pred: u32,
    pub dice: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_gt_regions: usize,
    pub n_pred_regions: usize,
    pub matches: Vec<RegionMatch>,
    pub mean_dice: f64,
    pub over_segmented: bool,
    pub under_segmented: bool,
}

#[inline]
pub fn dice(intersection: usize, size_a: usize, size_b: usize) -> f64 {
    if size_a + size_b == 0 {
        return 1.0;
    }
    2.0 * intersection as f64 / (size_a + size_b) as f64
}

/// Matches predicted regions to ground-truth regions by descending overlap.
///
/// Unmatched ground-truth regions contribute zero to `mean_dice`, whose
/// denominator is the ground-truth region count. Two empty maps score 1.
pub fn dice_match(pred: &LabelMap, gt: &LabelMap) -> Result<EvalReport> {
    same_dims(
        (pred.width(), pred.height()),
        (gt.width(), gt.height()),
        "prediction vs ground truth",
    )?;

    let mut pred_sizes: BTreeMap<u32, usize> = BTreeMap::new();
    let mut gt_sizes: BTreeMap<u32, usize> = BTreeMap::new();
    let mut inter: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        if p != 0 {
            *pred_sizes.entry(p).or_default() += 1;
        }
        if g != 0 {
            *gt_sizes.entry(g).or_default() += 1;
        }
        if p != 0 && g != 0 {
            *inter.entry((g, p)).or_default() += 1;
        }
    }

    // descending overlap, then descending dice, then ids
    let mut pairs: Vec<((u32, u32), usize)> = inter.iter().map(|(&k, &v)| (k, v)).collect();
    let score = |&((g, p), n): &((u32, u32), usize)| dice(n, gt_sizes[&g], pred_sizes[&p]);
    pairs.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(score(b).total_cmp(&score(a)))
            .then(a.0.cmp(&b.0))
    });

    let mut gt_taken = BTreeMap::new();
    let mut pred_taken = BTreeMap::new();
    let mut matches = Vec::new();
    for ((g, p), n) in pairs {
        if gt_taken.contains_key(&g) || pred_taken.contains_key(&p) {
            continue;
        }
        gt_taken.insert(g, p);
        pred_taken.insert(p, g);
        matches.push(RegionMatch {
            gt: g,
            pred: p,
            dice: dice(n, gt_sizes[&g], pred_sizes[&p]),
        });
    }
    matches.sort_by_key(|m| m.gt);

    let n_gt = gt_sizes.len();
    let n_pred = pred_sizes.len();
    let mean_dice = if n_gt == 0 {
        if n_pred == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        matches.iter().map(|m| m.dice).sum::<f64>() / n_gt as f64
    };

    let mut gt_partners: BTreeMap<u32, usize> = BTreeMap::new();
    let mut pred_partners: BTreeMap<u32, usize> = BTreeMap::new();
    for (&(g, p), &n) in &inter {
        if dice(n, gt_sizes[&g], pred_sizes[&p]) >= OVERLAP_DICE {
            *gt_partners.entry(g).or_default() += 1;
            *pred_partners.entry(p).or_default() += 1;
        }
    }
    let over_segmented = n_pred > n_gt || gt_partners.values().any(|&c| c >= 2);
    let under_segmented = pred_partners.values().any(|&c| c >= 2);

    Ok(EvalReport {
        n_gt_regions: n_gt,
        n_pred_regions: n_pred,
        matches,
        mean_dice,
        over_segmented,
        under_segmented,
    })
}
