//! Automatic seeded region growing for 2D grayscale images.
//!
//! The pipeline runs median denoising, Otsu thresholding, connected-component
//! ROI extraction, interior seed-candidate filtering, K-means seed selection
//! and threshold-gated multi-seed region growing. [`pipeline::segment`] wires
//! the stages together; each stage is also usable on its own.

pub mod error;
pub mod eval;
pub mod grow;
pub mod io;
pub mod kmeans;
pub mod pipeline;
pub mod preprocess;
pub mod raster;
pub mod roi;
pub mod seed_select;
pub mod synth;
pub mod threshold;

pub use error::{Error, Result};
pub use eval::{dice_match, EvalReport};
pub use grow::{accept, acceptance_mask, grow_regions, GrowConfig, GrowResult, NeighborhoodRule};
pub use io::{load_gray, load_label_map, save_gray, save_label_png};
pub use kmeans::{kmeans, KMeansModel};
pub use pipeline::{segment, RunReport, Segmentation, SegmentationConfig};
pub use preprocess::median_filter;
pub use raster::{histogram, BinaryMask, GrayImage, Histogram, LabelMap};
pub use roi::{connected_components, filter_small, Connectivity, Roi};
pub use seed_select::{
    extract_features, interior_candidates, select_seeds, FeatureVector, Seed, SeedCandidate,
};
pub use synth::{generate_blobs, BlobSpec, SceneSpec};
pub use threshold::{binarize, otsu_threshold, OtsuResult, Polarity};
