//! Brute-force reference implementations shared by the oracle suites.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use autoseed_core::grow::GrowConfig;
use autoseed_core::{BinaryMask, Connectivity, FeatureVector, GrayImage, Histogram};
use num_bigint::BigInt;

/// Otsu by scanning every t in 0..=254 for the largest `w0 w1 (mu0 - mu1)^2`.
/// Lowest t wins ties; a single occupied level is returned as is.
///
/// Scaled by `N^2`, the variance is `(s0 w1 - s1 w0)^2 / (w0 w1)`; candidates
/// are compared by exact cross-multiplication.
pub fn otsu_oracle(h: &Histogram) -> u8 {
    let counts = h.counts();
    let occupied: Vec<usize> = (0..256).filter(|&v| counts[v] > 0).collect();
    if occupied.len() == 1 {
        return occupied[0] as u8;
    }
    let mut best_t = 0u8;
    let (mut best_num, mut best_den) = (BigInt::from(0), BigInt::from(1));
    for t in 0..255 {
        let w0: u64 = counts[..=t].iter().sum();
        let w1: u64 = counts[t + 1..].iter().sum();
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let s0: u64 = (0..=t).map(|v| v as u64 * counts[v]).sum();
        let s1: u64 = (t + 1..256).map(|v| v as u64 * counts[v]).sum();
        let diff = BigInt::from(s0) * w1 - BigInt::from(s1) * w0;
        let num = &diff * &diff;
        let den = BigInt::from(w0) * w1;
        if &num * &best_den > &best_num * &den {
            best_num = num;
            best_den = den;
            best_t = t as u8;
        }
    }
    best_t
}

/// Median of each replicate-padded `(2r+1)^2` window by sorting.
pub fn median_oracle(img: &GrayImage, r: usize) -> GrayImage {
    let r = r as isize;
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut win = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                win.push(img.get_clamped(x as isize + dx, y as isize + dy));
            }
        }
        win.sort_unstable();
        win[win.len() / 2]
    })
    .unwrap()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Component representative per pixel (`None` for background).
pub fn union_find_components(mask: &BinaryMask, c: Connectivity) -> Vec<Option<usize>> {
    let (w, h) = (mask.width(), mask.height());
    let mut uf = UnionFind::new(w * h);
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            for &(dx, dy) in c.offsets() {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                if mask.get(nx as usize, ny as usize) {
                    uf.union(y * w + x, ny as usize * w + nx as usize);
                }
            }
        }
    }
    (0..w * h)
        .map(|i| mask.bits()[i].then(|| uf.find(i)))
        .collect()
}

/// True if two labelings induce the same partition (0 / `None` is background).
pub fn same_partition(labels: &[u32], reference: &[Option<usize>]) -> bool {
    if labels.len() != reference.len() {
        return false;
    }
    let mut fwd: HashMap<u32, usize> = HashMap::new();
    let mut back: HashMap<usize, u32> = HashMap::new();
    for (&l, r) in labels.iter().zip(reference) {
        match (l, r) {
            (0, None) => {}
            (0, Some(_)) | (_, None) => return false,
            (l, Some(r)) => {
                if *fwd.entry(l).or_insert(*r) != *r || *back.entry(*r).or_insert(l) != l {
                    return false;
                }
            }
        }
    }
    true
}

/// Pixels reachable from `starts` through `mask` under `c`.
pub fn flood(mask: &BinaryMask, starts: &[(usize, usize)], c: Connectivity) -> Vec<bool> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::new();
    for &(x, y) in starts {
        if mask.get(x, y) && !seen[y * w + x] {
            seen[y * w + x] = true;
            queue.push_back((x, y));
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for &(dx, dy) in c.offsets() {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if mask.get(nx, ny) && !seen[ny * w + nx] {
                seen[ny * w + nx] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    seen
}

/// Brute-force acceptance mask: pixel on the foreground side and, for a
/// positive radius under the mean rule, the window mean too.
pub fn acceptance_oracle(img: &GrayImage, cfg: &GrowConfig) -> BinaryMask {
    use autoseed_core::NeighborhoodRule;
    let r = cfg.grow_radius as isize;
    BinaryMask::from_fn(img.width(), img.height(), |x, y| {
        if !cfg.polarity.is_foreground(img.get(x, y), cfg.threshold) {
            return false;
        }
        if cfg.neighborhood_rule == NeighborhoodRule::PixelOnly || r == 0 {
            return true;
        }
        let mut sum = 0u64;
        for dy in -r..=r {
            for dx in -r..=r {
                sum += img.get_clamped(x as isize + dx, y as isize + dy) as u64;
            }
        }
        // mean vs threshold without division
        let scaled_t = cfg.threshold as u64 * ((2 * r + 1) * (2 * r + 1)) as u64;
        match cfg.polarity {
            autoseed_core::Polarity::BrightForeground => sum > scaled_t,
            autoseed_core::Polarity::DarkForeground => sum <= scaled_t,
        }
    })
    .unwrap()
}

/// Number of c-connected components of `mask`.
pub fn component_count(mask: &BinaryMask, c: Connectivity) -> usize {
    let mut reps: Vec<usize> = union_find_components(mask, c)
        .into_iter()
        .flatten()
        .collect();
    reps.sort_unstable();
    reps.dedup();
    reps.len()
}

/// Two 6x6 blobs of 200 on a 0 background joined by a one-pixel bridge of
/// 200 along row 5; left blob cols 2..8, right blob cols 16..22, rows 3..9.
pub const BRIDGE_SEEDS: [(usize, usize); 2] = [(4, 5), (18, 5)];

pub fn bridge_fixture() -> GrayImage {
    GrayImage::from_fn(24, 12, |x, y| {
        let in_blob = (3..9).contains(&y) && ((2..8).contains(&x) || (16..22).contains(&x));
        let on_bridge = y == 5 && (8..16).contains(&x);
        if in_blob || on_bridge {
            200
        } else {
            0
        }
    })
    .unwrap()
}

pub fn sse(points: &[FeatureVector], labels: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for j in 0..k {
        let members: Vec<&FeatureVector> = points
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == j)
            .map(|(p, _)| p)
            .collect();
        if members.is_empty() {
            continue;
        }
        let n = members.len() as f64;
        let c = FeatureVector {
            fx: members.iter().map(|p| p.fx).sum::<f64>() / n,
            fy: members.iter().map(|p| p.fy).sum::<f64>() / n,
            fi: members.iter().map(|p| p.fi).sum::<f64>() / n,
        };
        total += members.iter().map(|p| p.dist2(&c)).sum::<f64>();
    }
    total
}

/// Minimum SSE over every partition into exactly k non-empty clusters,
/// enumerated as restricted growth strings.
pub fn exhaustive_optimum(points: &[FeatureVector], k: usize) -> (f64, Vec<usize>) {
    fn rec(
        i: usize,
        used: usize,
        k: usize,
        labels: &mut Vec<usize>,
        pts: &[FeatureVector],
        best: &mut (f64, Vec<usize>),
    ) {
        let n = pts.len();
        if n - i < k - used {
            return;
        }
        if i == n {
            let s = sse(pts, labels, k);
            if s < best.0 {
                *best = (s, labels.clone());
            }
            return;
        }
        for l in 0..=used.min(k - 1) {
            labels[i] = l;
            rec(i + 1, used.max(l + 1), k, labels, pts, best);
        }
    }
    let mut best = (f64::INFINITY, vec![]);
    let mut labels = vec![0; points.len()];
    rec(0, 0, k, &mut labels, points, &mut best);
    best
}
