//! Median denoising ahead of thresholding.

use rayon::prelude::*;

use crate::raster::GrayImage;

/// Median over the `(2r+1)²` square window with replicate-edge padding.
///
/// Each row keeps a running 256-bin histogram that slides one column at a
/// time, so the cost per pixel is `O(r)` rather than `O(r² log r)`.
pub fn median_filter(img: &GrayImage, radius: usize) -> GrayImage {
    if radius == 0 {
        return img.clone();
    }
    let w = img.width();
    let r = radius as isize;
    let side = 2 * radius + 1;
    let rank = (side * side) / 2; // zero-based rank of the median

    let mut out = img.clone();
    out.pixels_mut()
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            let y = y as isize;
            let mut hist = [0u32; 256];
            for dy in -r..=r {
                for dx in -r..=r {
                    hist[img.get_clamped(dx, y + dy) as usize] += 1;
                }
            }
            row[0] = select_rank(&hist, rank);
            for x in 1..w as isize {
                for dy in -r..=r {
                    hist[img.get_clamped(x - r - 1, y + dy) as usize] -= 1;
                    hist[img.get_clamped(x + r, y + dy) as usize] += 1;
                }
                row[x as usize] = select_rank(&hist, rank);
            }
        });
    out
}

#[inline]
fn select_rank(hist: &[u32; 256], rank: usize) -> u8 {
    let mut seen = 0usize;
    for (v, &c) in hist.iter().enumerate() {
        seen += c as usize;
        if seen > rank {
            return v as u8;
        }
    }
    unreachable!("window histogram holds (2r+1)^2 samples")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sort_oracle(img: &GrayImage, radius: usize) -> GrayImage {
        let r = radius as isize;
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

    #[test]
    fn radius_zero_is_identity() {
        let img = GrayImage::from_fn(7, 5, |x, y| (x * 31 + y * 17) as u8).unwrap();
        assert_eq!(median_filter(&img, 0), img);
    }

    #[test]
    fn constant_image_unchanged() {
        let img = GrayImage::filled(9, 4, 77).unwrap();
        for r in 0..4 {
            assert_eq!(median_filter(&img, r), img);
        }
    }

    #[test]
    fn impulse_removed() {
        let img = GrayImage::new(3, 3, vec![10, 10, 10, 10, 200, 10, 10, 10, 10]).unwrap();
        let out = median_filter(&img, 1);
        assert_eq!(out.get(1, 1), 10);
        assert_eq!(out, sort_oracle(&img, 1));
        assert_eq!(out, GrayImage::filled(3, 3, 10).unwrap());
    }

    #[test]
    fn single_row_and_column_images() {
        let row = GrayImage::new(5, 1, vec![9, 0, 200, 3, 3]).unwrap();
        assert_eq!(median_filter(&row, 2), sort_oracle(&row, 2));
        let col = GrayImage::new(1, 5, vec![9, 0, 200, 3, 3]).unwrap();
        assert_eq!(median_filter(&col, 1), sort_oracle(&col, 1));
    }

    proptest! {
        #[test]
        fn matches_sort_oracle(pixels in prop::collection::vec(any::<u8>(), 32 * 32), radius in 0usize..4) {
            let img = GrayImage::new(32, 32, pixels).unwrap();
            let out = median_filter(&img, radius);
            prop_assert_eq!(&out, &sort_oracle(&img, radius));
            let present: std::collections::HashSet<u8> = img.pixels().iter().copied().collect();
            prop_assert!(out.pixels().iter().all(|p| present.contains(p)));
        }
    }
}
