//! Synthetic disk-blob scenes with exact ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{GrayImage, LabelMap};

/// Minimum background gap between two blob rims, in pixels.
pub const MIN_SEPARATION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub center: (f64, f64),
    pub radius: f64,
    pub intensity: u8,
}

impl BlobSpec {
    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        let dx = x as f64 - self.center.0;
        let dy = y as f64 - self.center.1;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// A full scene description, as accepted by the `synth` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub blobs: Vec<BlobSpec>,
    pub bg_intensity: u8,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl SceneSpec {
    pub fn generate(&self) -> Result<(GrayImage, LabelMap)> {
        generate_blobs(
            self.width,
            self.height,
            &self.blobs,
            self.bg_intensity,
            self.noise_sigma,
            self.rng_seed,
        )
    }
}

pub fn validate_blobs(
    width: usize,
    height: usize,
    blobs: &[BlobSpec],
    bg_intensity: u8,
    noise_sigma: f64,
) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidBlob(
            "image dimensions must be positive".into(),
        ));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidBlob(format!(
            "noise sigma {noise_sigma} must be finite and >= 0"
        )));
    }
    for (i, b) in blobs.iter().enumerate() {
        let (cx, cy) = b.center;
        if !(b.radius > 0.0 && b.radius.is_finite()) {
            return Err(Error::InvalidBlob(format!(
                "blob {i}: radius must be positive"
            )));
        }
        if cx - b.radius < 0.0
            || cy - b.radius < 0.0
            || cx + b.radius > (width - 1) as f64
            || cy + b.radius > (height - 1) as f64
        {
            return Err(Error::InvalidBlob(format!(
                "blob {i} at ({cx}, {cy}) radius {} does not fit in {width}x{height}",
                b.radius
            )));
        }
        let gap = (b.intensity as f64 - bg_intensity as f64).abs();
        if gap < 4.0 * noise_sigma {
            return Err(Error::InvalidBlob(format!(
                "blob {i}: intensity gap {gap} is below 4 sigma ({})",
                4.0 * noise_sigma
            )));
        }
        for (j, o) in blobs[..i].iter().enumerate() {
            let d = ((cx - o.center.0).powi(2) + (cy - o.center.1).powi(2)).sqrt();
            if d - b.radius - o.radius < MIN_SEPARATION {
                return Err(Error::InvalidBlob(format!(
                    "blobs {j} and {i} overlap or are closer than {MIN_SEPARATION} px"
                )));
            }
        }
    }
    Ok(())
}

/// Renders disks over a constant background with clamped Gaussian noise.
///
/// Blob `i` is labeled `i + 1` in the returned ground truth.
pub fn generate_blobs(
    width: usize,
    height: usize,
    blobs: &[BlobSpec],
    bg_intensity: u8,
    noise_sigma: f64,
    rng_seed: u64,
) -> Result<(GrayImage, LabelMap)> {
    validate_blobs(width, height, blobs, bg_intensity, noise_sigma)?;
    let mut clean = vec![bg_intensity; width * height];
    let mut gt = vec![0u32; width * height];
    for (i, b) in blobs.iter().enumerate() {
        let x0 = (b.center.0 - b.radius).floor().max(0.0) as usize;
        let y0 = (b.center.1 - b.radius).floor().max(0.0) as usize;
        let x1 = ((b.center.0 + b.radius).ceil() as usize).min(width - 1);
        let y1 = ((b.center.1 + b.radius).ceil() as usize).min(height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                if b.contains(x, y) {
                    clean[y * width + x] = b.intensity;
                    gt[y * width + x] = i as u32 + 1;
                }
            }
        }
    }

    let pixels = if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let normal = Normal::new(0.0, noise_sigma).expect("sigma validated above");
        clean
            .into_iter()
            .map(|v| {
                (v as f64 + normal.sample(&mut rng))
                    .round()
                    .clamp(0.0, 255.0) as u8
            })
            .collect()
    } else {
        clean
    };
    Ok((
        GrayImage::new(width, height, pixels)?,
        LabelMap::new(width, height, gt)?,
    ))
}

/// Places `n` disks on a jittered grid, one per cell, so every placement
/// satisfies [`validate_blobs`].
///
/// Blob intensities scatter around `fg_intensity` by up to a tenth of the
/// foreground/background gap. A single global threshold can only separate
/// all blobs when their levels sit on the same side of it, so the levels are
/// kept in one band rather than spread over the whole range.
pub fn random_scene(
    width: usize,
    height: usize,
    n: usize,
    bg_intensity: u8,
    fg_intensity: u8,
    noise_sigma: f64,
    rng_seed: u64,
) -> Result<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x5eed_b10b);
    let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    let rows = n.div_ceil(cols).max(1);
    let (cw, ch) = (width as f64 / cols as f64, height as f64 / rows as f64);
    let margin = MIN_SEPARATION / 2.0 + 1.0;
    let max_r = (cw.min(ch) / 2.0 - margin).floor();
    if n > 0 && max_r < 3.0 {
        return Err(Error::InvalidBlob(format!(
            "{n} blobs do not fit in {width}x{height}"
        )));
    }
    let gap = fg_intensity as f64 - bg_intensity as f64;
    if n > 0 && gap.abs() < 4.0 * noise_sigma {
        return Err(Error::InvalidBlob(format!(
            "foreground {fg_intensity} and background {bg_intensity} are closer than 4 sigma ({})",
            4.0 * noise_sigma
        )));
    }
    // jitter that never pulls a blob under the 4 sigma floor
    let jitter = (gap.abs() / 10.0)
        .min(gap.abs() - 4.0 * noise_sigma)
        .floor()
        .max(0.0) as i32;

    let mut blobs = Vec::with_capacity(n);
    for i in 0..n {
        let (col, row) = (i % cols, i / cols);
        let radius = rng.random_range((max_r * 0.6).max(3.0)..=max_r).floor();
        let slack_x = (cw / 2.0 - margin - radius).max(0.0);
        let slack_y = (ch / 2.0 - margin - radius).max(0.0);
        let cx = (col as f64 + 0.5) * cw + rng.random_range(-slack_x..=slack_x);
        let cy = (row as f64 + 0.5) * ch + rng.random_range(-slack_y..=slack_y);
        let delta = rng.random_range(-jitter..=jitter);
        let intensity = (fg_intensity as i32 + delta).clamp(0, 255) as u8;
        blobs.push(BlobSpec {
            center: (cx.round(), cy.round()),
            radius,
            intensity,
        });
    }
    let spec = SceneSpec {
        width,
        height,
        blobs,
        bg_intensity,
        noise_sigma,
        rng_seed,
    };
    validate_blobs(width, height, &spec.blobs, bg_intensity, noise_sigma)?;
    Ok(spec)
}
