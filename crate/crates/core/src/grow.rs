//! Multi-seed region growing gated by a global threshold.
//!
//! A pixel may join a region only if it lies on the foreground side of the
//! threshold and, under [`NeighborhoodRule::PixelAndMean`], the mean of its
//! `(2r+1)²` neighborhood does too. Thin bright structures (bridges, specks)
//! fail the neighborhood test, which keeps regions from leaking through them.
//!
//! All regions share one best-first frontier keyed by
//! `|intensity − region mean|`; equal keys pop in insertion order. A pixel is
//! claimed once and never reassigned.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, LabelMap};
use crate::roi::Connectivity;
use crate::seed_select::Seed;
use crate::threshold::Polarity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodRule {
    PixelOnly,
    #[default]
    PixelAndMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowConfig {
    pub threshold: u8,
    pub polarity: Polarity,
    pub grow_radius: usize,
    pub connectivity: Connectivity,
    pub neighborhood_rule: NeighborhoodRule,
}

impl GrowConfig {
    pub fn new(threshold: u8, polarity: Polarity) -> Self {
        Self {
            threshold,
            polarity,
            grow_radius: 1,
            connectivity: Connectivity::Four,
            neighborhood_rule: NeighborhoodRule::PixelAndMean,
        }
    }

    fn uses_window(&self) -> bool {
        self.neighborhood_rule == NeighborhoodRule::PixelAndMean && self.grow_radius > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowResult {
    /// Region `i + 1` grows from seed `i`.
    pub labels: LabelMap,
    pub region_sizes: Vec<usize>,
    /// Distinct pixels that reached the front of the queue and failed [`accept`].
    pub frontier_rejections: usize,
}

/// Acceptance test for a single pixel.
pub fn accept(img: &GrayImage, x: usize, y: usize, cfg: &GrowConfig) -> bool {
    if !cfg.polarity.is_foreground(img.get(x, y), cfg.threshold) {
        return false;
    }
    if !cfg.uses_window() {
        return true;
    }
    let r = cfg.grow_radius as isize;
    let mut sum = 0u64;
    for dy in -r..=r {
        for dx in -r..=r {
            sum += img.get_clamped(x as isize + dx, y as isize + dy) as u64;
        }
    }
    let n = ((2 * r + 1) * (2 * r + 1)) as u64;
    mean_on_foreground_side(sum, n, cfg)
}

/// [`accept`] evaluated at every pixel.
pub fn acceptance_mask(img: &GrayImage, cfg: &GrowConfig) -> BinaryMask {
    let (w, h) = (img.width(), img.height());
    let pass_pixel = img
        .pixels()
        .iter()
        .map(|&p| cfg.polarity.is_foreground(p, cfg.threshold));
    if !cfg.uses_window() {
        return BinaryMask::new(w, h, pass_pixel.collect()).expect("valid image dims");
    }

    // window sums over a replicate-padded copy via a summed-area table
    let r = cfg.grow_radius;
    let (pw, ph) = (w + 2 * r, h + 2 * r);
    let stride = pw + 1;
    let mut sat = vec![0u64; stride * (ph + 1)];
    for py in 0..ph {
        let mut row = 0u64;
        for px in 0..pw {
            row += img.get_clamped(px as isize - r as isize, py as isize - r as isize) as u64;
            sat[(py + 1) * stride + px + 1] = sat[py * stride + px + 1] + row;
        }
    }
    let side = 2 * r + 1;
    let n = (side * side) as u64;
    let bits = pass_pixel
        .enumerate()
        .map(|(i, pass)| {
            if !pass {
                return false;
            }
            let (x, y) = (i % w, i / w);
            let (x1, y1) = (x + side, y + side);
            let sum = sat[y1 * stride + x1] + sat[y * stride + x]
                - sat[y * stride + x1]
                - sat[y1 * stride + x];
            mean_on_foreground_side(sum, n, cfg)
        })
        .collect();
    BinaryMask::new(w, h, bits).expect("valid image dims")
}

#[inline]
fn mean_on_foreground_side(sum: u64, n: u64, cfg: &GrowConfig) -> bool {
    let scaled_t = cfg.threshold as u64 * n;
    match cfg.polarity {
        Polarity::BrightForeground => sum > scaled_t,
        Polarity::DarkForeground => sum <= scaled_t,
    }
}

/// Exact rational priority `num / den` with FIFO tie-break on `order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    num: u64,
    den: u64,
    order: u64,
    pixel: usize,
    region: u32,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: invert so the smallest priority pops first
        let lhs = self.num as u128 * other.den as u128;
        let rhs = other.num as u128 * self.den as u128;
        rhs.cmp(&lhs).then_with(|| other.order.cmp(&self.order))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Open,
    Labeled,
    Rejected,
}

pub fn grow_regions(img: &GrayImage, seeds: &[Seed], cfg: &GrowConfig) -> Result<GrowResult> {
    let (w, h) = (img.width(), img.height());
    let accepted = acceptance_mask(img, cfg);
    let pass = accepted.bits();

    let mut labels = vec![0u32; w * h];
    let mut state = vec![State::Open; w * h];
    let mut sums = vec![0u64; seeds.len()];
    let mut counts = vec![0u64; seeds.len()];

    for (i, s) in seeds.iter().enumerate() {
        if s.x >= w || s.y >= h {
            return Err(Error::InvalidParameter(format!(
                "seed {i} at ({}, {}) lies outside the {w}x{h} image",
                s.x, s.y
            )));
        }
        let p = s.y * w + s.x;
        if state[p] == State::Labeled {
            return Err(Error::DuplicateSeed { x: s.x, y: s.y });
        }
        if !pass[p] {
            return Err(Error::SeedRejected {
                index: i,
                x: s.x,
                y: s.y,
            });
        }
        state[p] = State::Labeled;
        labels[p] = i as u32 + 1;
        sums[i] = img.pixels()[p] as u64;
        counts[i] = 1;
    }

    let mut heap = BinaryHeap::new();
    let mut order = 0u64;
    let pixels = img.pixels();
    let push_neighbors = |heap: &mut BinaryHeap<Entry>,
                          order: &mut u64,
                          state: &[State],
                          p: usize,
                          region: u32,
                          sum: u64,
                          count: u64| {
        for n in cfg.connectivity.neighbors(p % w, p / w, w, h) {
            if state[n] != State::Open {
                continue;
            }
            let v = pixels[n] as u64;
            heap.push(Entry {
                num: (v * count).abs_diff(sum),
                den: count,
                order: *order,
                pixel: n,
                region,
            });
            *order += 1;
        }
    };

    for (i, s) in seeds.iter().enumerate() {
        push_neighbors(
            &mut heap,
            &mut order,
            &state,
            s.y * w + s.x,
            i as u32 + 1,
            sums[i],
            counts[i],
        );
    }

    let mut rejections = 0usize;
    while let Some(e) = heap.pop() {
        match state[e.pixel] {
            State::Labeled | State::Rejected => continue,
            State::Open => {}
        }
        if !pass[e.pixel] {
            state[e.pixel] = State::Rejected;
            rejections += 1;
            continue;
        }
        let r = e.region as usize - 1;
        state[e.pixel] = State::Labeled;
        labels[e.pixel] = e.region;
        sums[r] += pixels[e.pixel] as u64;
        counts[r] += 1;
        push_neighbors(
            &mut heap, &mut order, &state, e.pixel, e.region, sums[r], counts[r],
        );
    }

    Ok(GrowResult {
        labels: LabelMap::new(w, h, labels)?,
        region_sizes: counts.iter().map(|&c| c as usize).collect(),
        frontier_rejections: rejections,
    })
}
