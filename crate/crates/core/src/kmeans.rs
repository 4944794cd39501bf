//! Deterministic Lloyd K-means over seed-candidate feature vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed_select::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Lloyd stops once no centroid moves by this much or more.
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub centroids: Vec<FeatureVector>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each assignment step, in order.
    pub inertia_history: Vec<f64>,
}

impl KMeansModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Index of the nearest centroid; ties go to the lowest index.
    pub fn assign(&self, p: &FeatureVector) -> usize {
        nearest(&self.centroids, p).0
    }
}

pub fn kmeans(points: &[FeatureVector], k: usize, rng_seed: u64) -> Result<KMeansModel> {
    kmeans_with(points, k, rng_seed, &KMeansOptions::default())
}

/// Deterministic K-means.
///
/// Each run starts from a greedy farthest-point seeding: a first center, then
/// repeatedly the point with the largest distance to its nearest chosen center
/// (ties to the lowest index). Lloyd iterations follow, then single-point
/// transfers (Hartigan's rule, best move first) until no transfer lowers the
/// SSE. The canonical run starts from the point nearest the dataset mean;
/// further runs start from every other point when there are at most
/// [`ALL_STARTS_LIMIT`] points, otherwise from the first [`TRAVERSAL_STARTS`]
/// points of the canonical farthest-point traversal. The lowest-inertia run
/// wins, earlier runs winning ties.
///
/// `_rng_seed` is accepted for API stability; no randomness is consumed.
pub fn kmeans_with(
    points: &[FeatureVector],
    k: usize,
    _rng_seed: u64,
    opts: &KMeansOptions,
) -> Result<KMeansModel> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    let distinct = count_distinct(points);
    if k > distinct {
        return Err(Error::TooManyClusters {
            k,
            available: distinct,
            what: "distinct feature points",
        });
    }

    let first = nearest_to_mean(points);
    let mut starts = vec![first];
    if points.len() <= ALL_STARTS_LIMIT {
        starts.extend((0..points.len()).filter(|&i| i != first));
    } else {
        let traversal = farthest_point_order(points, first, TRAVERSAL_STARTS.max(k));
        starts.extend(traversal.into_iter().skip(1).take(TRAVERSAL_STARTS - 1));
    }

    let mut best: Option<KMeansModel> = None;
    for s in starts {
        let init: Vec<FeatureVector> = farthest_point_order(points, s, k)
            .into_iter()
            .map(|i| points[i])
            .collect();
        let model = run_from(points, init, opts);
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Runs with at most this many points start from every point.
pub const ALL_STARTS_LIMIT: usize = 64;
/// Number of starts drawn from the farthest-point traversal for larger inputs.
pub const TRAVERSAL_STARTS: usize = 8;

fn run_from(
    points: &[FeatureVector],
    mut centroids: Vec<FeatureVector>,
    opts: &KMeansOptions,
) -> KMeansModel {
    let k = centroids.len();
    let mut assignments = vec![0usize; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;

    loop {
        while iterations < opts.max_iter {
            iterations += 1;
            let inertia = assign_all(points, &centroids, &mut assignments);
            history.push(inertia);
            reseed_empty(points, &centroids, &mut assignments, k);
            let updated = cluster_means(points, &assignments, &centroids);
            let shift = centroids
                .iter()
                .zip(&updated)
                .map(|(a, b)| a.dist2(b).sqrt())
                .fold(0.0, f64::max);
            centroids = updated;
            if shift < opts.tol {
                break;
            }
        }
        let inertia = assign_all(points, &centroids, &mut assignments);
        history.push(inertia);
        reseed_empty(points, &centroids, &mut assignments, k);
        if !hartigan_refine(points, &mut assignments, k) || iterations >= opts.max_iter {
            break;
        }
        centroids = cluster_means(points, &assignments, &centroids);
    }

    centroids = cluster_means(points, &assignments, &centroids);
    let inertia = assign_all(points, &centroids, &mut assignments);
    if history.last() != Some(&inertia) {
        history.push(inertia);
    }
    KMeansModel {
        centroids,
        assignments,
        inertia,
        iterations,
        inertia_history: history,
    }
}

/// Applies the single-point transfer with the largest SSE decrease until
/// none decreases it. Returns whether anything moved.
fn hartigan_refine(points: &[FeatureVector], assignments: &mut [usize], k: usize) -> bool {
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    let mut centroids = cluster_means(points, assignments, &vec![FeatureVector::default(); k]);
    let mut moved_any = false;
    loop {
        // (gain, point, target)
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, p) in points.iter().enumerate() {
            let from = assignments[i];
            if sizes[from] < 2 {
                continue;
            }
            let nf = sizes[from] as f64;
            let removal = nf / (nf - 1.0) * p.dist2(&centroids[from]);
            for (j, c) in centroids.iter().enumerate() {
                if j == from {
                    continue;
                }
                let nj = sizes[j] as f64;
                let gain = removal - nj / (nj + 1.0) * p.dist2(c);
                if gain > 1e-12 * removal.max(f64::MIN_POSITIVE)
                    && best.is_none_or(|(g, _, _)| gain > g)
                {
                    best = Some((gain, i, j));
                }
            }
        }
        let Some((_, i, to)) = best else {
            return moved_any;
        };
        let from = assignments[i];
        let p = &points[i];
        centroids[from] = shift_mean(&centroids[from], p, sizes[from] as f64, -1.0);
        centroids[to] = shift_mean(&centroids[to], p, sizes[to] as f64, 1.0);
        sizes[from] -= 1;
        sizes[to] += 1;
        assignments[i] = to;
        moved_any = true;
    }
}

/// Mean of `n` points after adding (`sign = 1`) or removing (`sign = -1`) `p`.
fn shift_mean(mean: &FeatureVector, p: &FeatureVector, n: f64, sign: f64) -> FeatureVector {
    let m = n + sign;
    FeatureVector {
        fx: (mean.fx * n + sign * p.fx) / m,
        fy: (mean.fy * n + sign * p.fy) / m,
        fi: (mean.fi * n + sign * p.fi) / m,
    }
}

fn count_distinct(points: &[FeatureVector]) -> usize {
    let mut keys: Vec<[u64; 3]> = points
        .iter()
        .map(|p| [p.fx.to_bits(), p.fy.to_bits(), p.fi.to_bits()])
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

fn nearest_to_mean(points: &[FeatureVector]) -> usize {
    let n = points.len() as f64;
    let mean = points
        .iter()
        .fold(FeatureVector::default(), |acc, p| FeatureVector {
            fx: acc.fx + p.fx / n,
            fy: acc.fy + p.fy / n,
            fi: acc.fi + p.fi / n,
        });
    argmin(points.iter().map(|p| p.dist2(&mean)))
}

/// `count` point indices: `first`, then greedy farthest-point picks.
fn farthest_point_order(points: &[FeatureVector], first: usize, count: usize) -> Vec<usize> {
    let count = count.min(points.len());
    let mut order = vec![first];
    let mut min_d: Vec<f64> = points.iter().map(|p| p.dist2(&points[first])).collect();
    while order.len() < count {
        let next = argmax(min_d.iter().copied());
        order.push(next);
        let c = points[next];
        for (d, p) in min_d.iter_mut().zip(points) {
            *d = d.min(p.dist2(&c));
        }
    }
    order
}

fn nearest(centroids: &[FeatureVector], p: &FeatureVector) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = p.dist2(c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign_all(points: &[FeatureVector], centroids: &[FeatureVector], out: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (a, p) in out.iter_mut().zip(points) {
        let (j, d) = nearest(centroids, p);
        *a = j;
        inertia += d;
    }
    inertia
}

/// Moves the point farthest from its centroid into each empty cluster.
fn reseed_empty(
    points: &[FeatureVector],
    centroids: &[FeatureVector],
    assignments: &mut [usize],
    k: usize,
) {
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for j in 0..k {
        if sizes[j] > 0 {
            continue;
        }
        let donor = argmax(points.iter().zip(assignments.iter()).map(|(p, &a)| {
            if sizes[a] > 1 {
                p.dist2(&centroids[a])
            } else {
                f64::NEG_INFINITY
            }
        }));
        sizes[assignments[donor]] -= 1;
        assignments[donor] = j;
        sizes[j] = 1;
    }
}

fn cluster_means(
    points: &[FeatureVector],
    assignments: &[usize],
    previous: &[FeatureVector],
) -> Vec<FeatureVector> {
    let k = previous.len();
    let mut sums = vec![[0.0f64; 3]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        sums[a][0] += p.fx;
        sums[a][1] += p.fy;
        sums[a][2] += p.fi;
        counts[a] += 1;
    }
    (0..k)
        .map(|j| {
            if counts[j] == 0 {
                previous[j]
            } else {
                let n = counts[j] as f64;
                FeatureVector {
                    fx: sums[j][0] / n,
                    fy: sums[j][1] / n,
                    fi: sums[j][2] / n,
                }
            }
        })
        .collect()
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(fx: f64, fy: f64, fi: f64) -> FeatureVector {
        FeatureVector { fx, fy, fi }
    }

    fn line(xs: &[f64]) -> Vec<FeatureVector> {
        xs.iter().map(|&x| fv(x, 0.0, 0.0)).collect()
    }

    #[test]
    fn exact_cover() {
        let pts = vec![
            fv(0.1, 0.2, 0.3),
            fv(0.9, 0.1, 0.0),
            fv(0.5, 0.5, 0.5),
            fv(0.0, 1.0, 1.0),
        ];
        let m = kmeans(&pts, 4, 0).unwrap();
        assert_eq!(m.inertia, 0.0);
        let mut cs: Vec<_> = m.centroids.iter().map(|c| (c.fx, c.fy, c.fi)).collect();
        let mut ps: Vec<_> = pts.iter().map(|c| (c.fx, c.fy, c.fi)).collect();
        cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(cs, ps);
    }

    #[test]
    fn single_cluster_is_mean() {
        let pts = vec![fv(0.0, 0.0, 0.0), fv(1.0, 0.5, 0.25), fv(0.5, 1.0, 0.5)];
        let m = kmeans(&pts, 1, 0).unwrap();
        let c = m.centroids[0];
        assert!((c.fx - 0.5).abs() < 1e-12);
        assert!((c.fy - 0.5).abs() < 1e-12);
        assert!((c.fi - 0.25).abs() < 1e-12);
        assert!(m.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn two_groups_on_a_line() {
        let pts = line(&[0.0, 0.04, 0.9, 0.94]);
        let m = kmeans(&pts, 2, 0).unwrap();
        assert_eq!(m.assignments[0], m.assignments[1]);
        assert_eq!(m.assignments[2], m.assignments[3]);
        assert_ne!(m.assignments[0], m.assignments[2]);
        let lo = m.centroids[m.assignments[0]].fx;
        let hi = m.centroids[m.assignments[2]].fx;
        assert!((lo - 0.02).abs() < 1e-12);
        assert!((hi - 0.92).abs() < 1e-12);
        assert!((m.inertia - 4.0 * 0.02f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn too_many_clusters() {
        let pts = line(&[0.1, 0.1, 0.2]);
        assert!(matches!(
            kmeans(&pts, 3, 0),
            Err(Error::TooManyClusters {
                k: 3,
                available: 2,
                ..
            })
        ));
        assert!(kmeans(&pts, 0, 0).is_err());
    }

    #[test]
    fn assign_exact_hit_and_tie() {
        let model = KMeansModel {
            centroids: line(&[0.25, 0.75]),
            assignments: vec![],
            inertia: 0.0,
            iterations: 0,
            inertia_history: vec![],
        };
        assert_eq!(model.assign(&fv(0.75, 0.0, 0.0)), 1);
        assert_eq!(model.assign(&fv(0.25, 0.0, 0.0)), 0);
        assert_eq!(model.assign(&fv(0.5, 0.0, 0.0)), 0);
    }
}
