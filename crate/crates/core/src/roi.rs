//! Connected-component extraction of regions of interest from a binary mask.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::raster::{BinaryMask, LabelMap};

/// Pixel adjacency used for labeling and growing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    /// Edge-sharing neighbors only.
    #[default]
    Four,
    /// Edge and corner neighbors.
    Eight,
}

const N4: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
const N8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

impl Connectivity {
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &N4,
            Connectivity::Eight => &N8,
        }
    }

    /// In-bounds neighbors of `(x, y)` as linear indices.
    #[inline]
    pub(crate) fn neighbors(
        self,
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    ) -> impl Iterator<Item = usize> {
        self.offsets().iter().filter_map(move |&(dx, dy)| {
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            (nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height)
                .then(|| ny as usize * width + nx as usize)
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Connectivity::Four => "four",
            Connectivity::Eight => "eight",
        }
    }
}

impl std::str::FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "four" | "4" => Ok(Connectivity::Four),
            "eight" | "8" => Ok(Connectivity::Eight),
            other => Err(Error::InvalidParameter(format!(
                "unknown connectivity {other:?} (expected four or eight)"
            ))),
        }
    }
}

/// Summary statistics of one connected foreground component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub id: u32,
    pub pixel_count: usize,
    /// `(min_x, min_y, max_x, max_y)`, inclusive.
    pub bbox: (usize, usize, usize, usize),
    pub centroid: (f64, f64),
}

/// Labels maximal connected foreground sets `1..=n` in raster order of their
/// first pixel.
pub fn connected_components(mask: &BinaryMask, c: Connectivity) -> (LabelMap, Vec<Roi>) {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut labels = vec![0u32; w * h];
    let mut rois = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..w * h {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let id = rois.len() as u32 + 1;
        labels[start] = id;
        queue.push_back(start);
        let mut acc = RoiAccumulator::new(id);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            acc.add(x, y);
            for n in c.neighbors(x, y, w, h) {
                if bits[n] && labels[n] == 0 {
                    labels[n] = id;
                    queue.push_back(n);
                }
            }
        }
        rois.push(acc.finish());
    }

    let map = LabelMap::new(w, h, labels).expect("dimensions come from a valid mask");
    (map, rois)
}

/// Drops components smaller than `min_area` and renumbers the survivors `1..=m`
/// in their original order.
pub fn filter_small(rois: &[Roi], labels: &LabelMap, min_area: usize) -> (LabelMap, Vec<Roi>) {
    let max = labels.max_label() as usize;
    let mut remap = vec![0u32; max + 1];
    let mut kept = Vec::new();
    for roi in rois {
        if roi.pixel_count >= min_area {
            let new_id = kept.len() as u32 + 1;
            if let Some(slot) = remap.get_mut(roi.id as usize) {
                *slot = new_id;
            }
            kept.push(Roi {
                id: new_id,
                ..roi.clone()
            });
        }
    }
    let relabeled = labels.labels().iter().map(|&l| remap[l as usize]).collect();
    let map = LabelMap::new(labels.width(), labels.height(), relabeled)
        .expect("dimensions come from a valid label map");
    (map, kept)
}

/// Recomputes ROI statistics from a label map, one entry per id `1..=max_label`.
pub fn region_stats(labels: &LabelMap) -> Vec<Roi> {
    let n = labels.max_label() as usize;
    let mut accs: Vec<RoiAccumulator> = (1..=n as u32).map(RoiAccumulator::new).collect();
    let w = labels.width();
    for (i, &l) in labels.labels().iter().enumerate() {
        if l != 0 {
            accs[l as usize - 1].add(i % w, i / w);
        }
    }
    accs.into_iter()
        .filter(|a| a.count > 0)
        .map(RoiAccumulator::finish)
        .collect()
}

struct RoiAccumulator {
    id: u32,
    count: usize,
    sum_x: u64,
    sum_y: u64,
    bbox: (usize, usize, usize, usize),
}

impl RoiAccumulator {
    fn new(id: u32) -> Self {
        Self {
            id,
            count: 0,
            sum_x: 0,
            sum_y: 0,
            bbox: (usize::MAX, usize::MAX, 0, 0),
        }
    }

    fn add(&mut self, x: usize, y: usize) {
        self.count += 1;
        self.sum_x += x as u64;
        self.sum_y += y as u64;
        self.bbox.0 = self.bbox.0.min(x);
        self.bbox.1 = self.bbox.1.min(y);
        self.bbox.2 = self.bbox.2.max(x);
        self.bbox.3 = self.bbox.3.max(y);
    }

    fn finish(self) -> Roi {
        Roi {
            id: self.id,
            pixel_count: self.count,
            bbox: self.bbox,
            centroid: (
                self.sum_x as f64 / self.count as f64,
                self.sum_y as f64 / self.count as f64,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(w: usize, h: usize, rows: &[&str]) -> BinaryMask {
        let bits = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        BinaryMask::new(w, h, bits).unwrap()
    }

    #[test]
    fn all_background() {
        let m = BinaryMask::new(4, 3, vec![false; 12]).unwrap();
        let (labels, rois) = connected_components(&m, Connectivity::Four);
        assert!(rois.is_empty());
        assert!(labels.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn diagonal_pair() {
        let m = mask(2, 2, &["#.", ".#"]);
        assert_eq!(connected_components(&m, Connectivity::Four).1.len(), 2);
        assert_eq!(connected_components(&m, Connectivity::Eight).1.len(), 1);
    }

    #[test]
    fn raster_order_numbering_and_stats() {
        let m = mask(5, 3, &["..##.", "#.##.", "#...."]);
        let (labels, rois) = connected_components(&m, Connectivity::Four);
        assert_eq!(
            labels.labels(),
            &[0, 0, 1, 1, 0, 2, 0, 1, 1, 0, 2, 0, 0, 0, 0]
        );
        assert_eq!(rois[0].pixel_count, 4);
        assert_eq!(rois[0].bbox, (2, 0, 3, 1));
        assert_eq!(rois[0].centroid, (2.5, 0.5));
        assert_eq!(rois[1].bbox, (0, 1, 0, 2));
        assert_eq!(region_stats(&labels), rois);
    }

    #[test]
    fn filter_small_identity_and_removal() {
        let m = mask(4, 1, &["#.##"]);
        let (labels, rois) = connected_components(&m, Connectivity::Four);
        let (l0, r0) = filter_small(&rois, &labels, 0);
        assert_eq!((l0, r0), (labels.clone(), rois.clone()));

        let single = mask(3, 1, &[".#."]);
        let (sl, sr) = connected_components(&single, Connectivity::Four);
        let (l, r) = filter_small(&sr, &sl, 2);
        assert!(r.is_empty());
        assert!(l.labels().iter().all(|&v| v == 0));

        let (l, r) = filter_small(&rois, &labels, 2);
        assert_eq!(l.labels(), &[0, 0, 1, 1]);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].id, 1);
        assert_eq!(r[0].pixel_count, 2);
    }

    proptest! {
        #[test]
        fn eight_never_more_than_four(bits in prop::collection::vec(any::<bool>(), 16 * 16)) {
            let m = BinaryMask::new(16, 16, bits).unwrap();
            let n4 = connected_components(&m, Connectivity::Four).1.len();
            let n8 = connected_components(&m, Connectivity::Eight).1.len();
            prop_assert!(n8 <= n4);
        }

        #[test]
        fn stats_consistent_with_map(bits in prop::collection::vec(any::<bool>(), 12 * 9), min_area in 0usize..6) {
            let m = BinaryMask::new(12, 9, bits).unwrap();
            let (labels, rois) = connected_components(&m, Connectivity::Eight);
            let (fl, fr) = filter_small(&rois, &labels, min_area);
            let tallies = fl.tallies();
            prop_assert_eq!(tallies.len() - 1, fr.len());
            for roi in &fr {
                prop_assert_eq!(tallies[roi.id as usize], roi.pixel_count);
                prop_assert!(roi.pixel_count >= min_area);
                let (cx, cy) = roi.centroid;
                prop_assert!(cx >= roi.bbox.0 as f64 && cx <= roi.bbox.2 as f64);
                prop_assert!(cy >= roi.bbox.1 as f64 && cy <= roi.bbox.3 as f64);
            }
            prop_assert_eq!(region_stats(&fl), fr);
        }
    }
}
