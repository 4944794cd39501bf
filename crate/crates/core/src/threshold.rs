//! Otsu thresholding and binarization.
//!
//! The threshold search maximizes the between-class variance
//! `ω₀ω₁(μ₀ − μ₁)²` with class 0 holding levels `≤ t`. Scores are compared
//! exactly using integer arithmetic: with `N` pixels, `S` total intensity and
//! `w₀, s₀` the class-0 count and intensity sum,
//!
//! ```text
//! σ²_B(t) = (s₀·N − S·w₀)² / (N² · w₀ · w₁)
//! ```
//!
//! so two candidates are ordered by cross-multiplying `(s₀N − Sw₀)²` against
//! `w₀w₁`. Ties resolve to the lowest level.

use std::cmp::Ordering;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, Histogram};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtsuResult {
    pub threshold: u8,
    pub between_class_variance: f64,
}

/// Which side of the threshold holds the objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Polarity {
    /// Foreground is `intensity > t`.
    #[default]
    #[serde(rename = "bright", alias = "bright_foreground")]
    BrightForeground,
    /// Foreground is `intensity <= t`.
    #[serde(rename = "dark", alias = "dark_foreground")]
    DarkForeground,
}

impl Polarity {
    #[inline]
    pub fn is_foreground(self, intensity: u8, threshold: u8) -> bool {
        match self {
            Polarity::BrightForeground => intensity > threshold,
            Polarity::DarkForeground => intensity <= threshold,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::BrightForeground => "bright",
            Polarity::DarkForeground => "dark",
        }
    }
}

impl std::str::FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bright" | "bright_foreground" => Ok(Polarity::BrightForeground),
            "dark" | "dark_foreground" => Ok(Polarity::DarkForeground),
            other => Err(Error::InvalidParameter(format!(
                "unknown polarity {other:?} (expected bright or dark)"
            ))),
        }
    }
}

/// Exact score `(s₀N − Sw₀)² / (w₀w₁)` kept as numerator root and denominator.
#[derive(Debug, Clone, Copy)]
struct Score {
    root: u128,
    den: u128,
}

impl Score {
    const ZERO: Score = Score { root: 0, den: 1 };

    fn cmp(&self, other: &Score) -> Ordering {
        let lhs = self
            .root
            .checked_mul(self.root)
            .and_then(|sq| sq.checked_mul(other.den));
        let rhs = other
            .root
            .checked_mul(other.root)
            .and_then(|sq| sq.checked_mul(self.den));
        match (lhs, rhs) {
            (Some(l), Some(r)) => l.cmp(&r),
            _ => {
                let l = BigUint::from(self.root).pow(2u32) * BigUint::from(other.den);
                let r = BigUint::from(other.root).pow(2u32) * BigUint::from(self.den);
                l.cmp(&r)
            }
        }
    }
}

pub fn otsu_threshold(h: &Histogram) -> Result<OtsuResult> {
    let counts = h.counts();
    let n: u128 = counts.iter().map(|&c| c as u128).sum();
    if n == 0 {
        return Err(Error::EmptyHistogram);
    }
    let occupied: Vec<usize> = (0..256).filter(|&v| counts[v] > 0).collect();
    if occupied.len() == 1 {
        return Ok(OtsuResult {
            threshold: occupied[0] as u8,
            between_class_variance: 0.0,
        });
    }
    let total_sum: u128 = counts
        .iter()
        .enumerate()
        .map(|(v, &c)| v as u128 * c as u128)
        .sum();

    let mut best_t = 0u8;
    let mut best = Score::ZERO;
    let (mut w0, mut s0) = (0u128, 0u128);
    for (t, &c) in counts.iter().enumerate().take(255) {
        w0 += c as u128;
        s0 += t as u128 * c as u128;
        let w1 = n - w0;
        let score = if w0 == 0 || w1 == 0 {
            Score::ZERO
        } else {
            let a = s0 * n;
            let b = total_sum * w0;
            Score {
                root: a.abs_diff(b),
                den: w0 * w1,
            }
        };
        if score.cmp(&best) == Ordering::Greater {
            best = score;
            best_t = t as u8;
        }
    }

    let nf = n as f64;
    let variance = if best.root == 0 {
        0.0
    } else {
        let r = best.root as f64 / nf;
        r * r / best.den as f64
    };
    Ok(OtsuResult {
        threshold: best_t,
        between_class_variance: variance,
    })
}

pub fn binarize(img: &GrayImage, t: u8, polarity: Polarity) -> BinaryMask {
    let bits = img
        .pixels()
        .iter()
        .map(|&p| polarity.is_foreground(p, t))
        .collect();
    BinaryMask::new(img.width(), img.height(), bits).expect("dimensions come from a valid image")
}
