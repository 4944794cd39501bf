//! Raster containers shared by every stage of the pipeline.
//!
//! All rasters are stored row-major with `x` as the column and `y` as the
//! row, origin at the top-left corner.

use crate::error::{Error, Result};

/// An 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the image (replicate padding).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[cy * self.width + cx]
    }

    pub(crate) fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }
}

/// Per-pixel foreground/background classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count_foreground(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

/// Per-pixel region ids; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_dims(width, height, labels.len())?;
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Largest label present (the region count for a compact map).
    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Number of distinct non-zero labels.
    pub fn region_count(&self) -> usize {
        let mut ids: Vec<u32> = self.labels.iter().copied().filter(|&l| l != 0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Pixel tally per label, indexed by label (entry 0 is the background).
    pub fn tallies(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.max_label() as usize + 1];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    pub fn foreground(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l != 0).collect(),
        }
    }
}

/// Intensity tallies over the 256 gray levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: [u64; 256],
}

impl Histogram {
    pub fn from_counts(counts: [u64; 256]) -> Self {
        Self { counts }
    }

    #[inline]
    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

impl Default for Histogram {
    fn default() -> Self {
        Self { counts: [0; 256] }
    }
}

pub fn histogram(img: &GrayImage) -> Histogram {
    let mut counts = [0u64; 256];
    for &p in img.pixels() {
        counts[p as usize] += 1;
    }
    Histogram { counts }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::DimensionMismatch(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    match width.checked_mul(height) {
        Some(n) if n == len => Ok(()),
        _ => Err(Error::DimensionMismatch(format!(
            "{width}x{height} raster needs {} values, got {len}",
            width.saturating_mul(height)
        ))),
    }
}

pub(crate) fn same_dims(a: (usize, usize), b: (usize, usize), what: &str) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn histogram_single_level() {
        let img = GrayImage::new(2, 1, vec![5, 5]).unwrap();
        let h = histogram(&img);
        assert_eq!(h.counts()[5], 2);
        assert_eq!(h.total(), 2);
        assert!(h
            .counts()
            .iter()
            .enumerate()
            .all(|(v, &c)| v == 5 || c == 0));
    }

    #[test]
    fn histogram_direct_tally() {
        let img = GrayImage::new(2, 2, vec![0, 0, 255, 7]).unwrap();
        let h = histogram(&img);
        assert_eq!(h.counts()[0], 2);
        assert_eq!(h.counts()[7], 1);
        assert_eq!(h.counts()[255], 1);
        assert_eq!(h.total(), 4);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
        assert!(LabelMap::new(3, 1, vec![0; 4]).is_err());
        assert!(BinaryMask::new(1, 1, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn histogram_matches_brute_force(pixels in prop::collection::vec(any::<u8>(), 1024)) {
            let img = GrayImage::new(32, 32, pixels.clone()).unwrap();
            let h = histogram(&img);
            prop_assert_eq!(h.total(), 1024);
            for v in 0..=255u8 {
                let n = pixels.iter().filter(|&&p| p == v).count() as u64;
                prop_assert_eq!(h.counts()[v as usize], n);
            }
        }
    }
}
