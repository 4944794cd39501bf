//! Otsu, median and connected components checked against brute force.

mod common;

use autoseed_core::{
    binarize, connected_components, histogram, median_filter, otsu_threshold, BinaryMask,
    Connectivity, GrayImage, Histogram, Polarity,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{median_oracle, otsu_oracle, same_partition, union_find_components};

fn random_histogram(rng: &mut ChaCha8Rng) -> Histogram {
    let mut c = [0u64; 256];
    match rng.random_range(0..4) {
        // dense
        0 => c.iter_mut().for_each(|v| *v = rng.random_range(0..50)),
        // a few spikes, ties likely
        1 => {
            for _ in 0..rng.random_range(1..5) {
                c[rng.random_range(0..256)] += rng.random_range(1..4);
            }
        }
        // sparse with wide counts
        2 => {
            for _ in 0..rng.random_range(2..30) {
                c[rng.random_range(0..256)] += rng.random_range(1..1_000_000);
            }
        }
        // two bumps
        _ => {
            let (a, b) = (rng.random_range(0..128), rng.random_range(128..256));
            for _ in 0..2000 {
                let centre = if rng.random_bool(0.4) { a } else { b };
                let v = (centre + rng.random_range(-20..=20)).clamp(0, 255);
                c[v as usize] += 1;
            }
        }
    }
    if c.iter().all(|&v| v == 0) {
        c[rng.random_range(0..256)] = 1;
    }
    Histogram::from_counts(c)
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    let levels = rng.random_range(2..=256u32);
    let pixels = (0..w * h)
        .map(|_| (rng.random_range(0..levels) * 255 / (levels - 1).max(1)) as u8)
        .collect();
    GrayImage::new(w, h, pixels).unwrap()
}

#[test]
fn otsu_matches_exhaustive_scan_on_histograms() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..1000 {
        let h = random_histogram(&mut rng);
        let got = otsu_threshold(&h).unwrap().threshold;
        assert_eq!(got, otsu_oracle(&h), "histogram {i}");
    }
}

#[test]
fn otsu_matches_exhaustive_scan_on_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..100 {
        let img = random_image(&mut rng, 64, 64);
        let h = histogram(&img);
        assert_eq!(
            otsu_threshold(&h).unwrap().threshold,
            otsu_oracle(&h),
            "image {i}"
        );
    }
}

#[test]
fn otsu_constant_image() {
    let img = GrayImage::filled(5, 5, 77).unwrap();
    let r = otsu_threshold(&histogram(&img)).unwrap();
    assert_eq!((r.threshold, r.between_class_variance), (77, 0.0));
}

#[test]
fn median_matches_window_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for i in 0..100 {
        let img = random_image(&mut rng, 32, 32);
        for r in 0..=3 {
            assert_eq!(
                median_filter(&img, r),
                median_oracle(&img, r),
                "image {i} radius {r}"
            );
        }
    }
}

#[test]
fn median_on_odd_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (w, h) in [(1, 1), (1, 9), (9, 1), (2, 3), (7, 5)] {
        let img = random_image(&mut rng, w, h);
        for r in 0..=4 {
            assert_eq!(
                median_filter(&img, r),
                median_oracle(&img, r),
                "{w}x{h} radius {r}"
            );
        }
    }
}

#[test]
fn components_match_union_find() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for i in 0..200 {
        let density = rng.random_range(0.1..0.9);
        let bits = (0..32 * 32).map(|_| rng.random_bool(density)).collect();
        let mask = BinaryMask::new(32, 32, bits).unwrap();
        for c in [Connectivity::Four, Connectivity::Eight] {
            let (labels, rois) = connected_components(&mask, c);
            let reference = union_find_components(&mask, c);
            assert!(
                same_partition(labels.labels(), &reference),
                "mask {i} {c:?}"
            );
            assert_eq!(rois.len() as u32, labels.max_label());
            let sizes = labels.tallies();
            for roi in &rois {
                assert_eq!(roi.pixel_count, sizes[roi.id as usize]);
            }
        }
    }
}

#[test]
fn thresholded_image_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..20 {
        let img = random_image(&mut rng, 32, 32);
        let t = otsu_threshold(&histogram(&img)).unwrap().threshold;
        let mask = binarize(&img, t, Polarity::BrightForeground);
        let (labels, _) = connected_components(&mask, Connectivity::Eight);
        assert!(same_partition(
            labels.labels(),
            &union_find_components(&mask, Connectivity::Eight)
        ));
    }
}
