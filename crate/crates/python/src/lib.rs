//! Python bindings: images, label maps, the segmentation pipeline and the
//! synthetic-scene and evaluation helpers.

use autoseed_core as core;
use autoseed_core::{Connectivity, NeighborhoodRule, Polarity};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn to_py_err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Parses serialized JSON into Python objects with the stdlib `json` module.
fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// 8-bit grayscale image.
#[pyclass(name = "GrayImage", module = "autoseed", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGrayImage {
    inner: core::GrayImage,
}

#[pymethods]
impl PyGrayImage {
    /// Row-major pixels as `bytes`, `bytearray` or a sequence of ints.
    #[new]
    fn new(width: usize, height: usize, pixels: Vec<u8>) -> PyResult<Self> {
        Ok(Self {
            inner: core::GrayImage::new(width, height, pixels).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::load_gray(path).map_err(to_py_err)?,
        })
    }

    /// Writes PGM for a `.pgm` extension, PNG otherwise.
    fn save(&self, path: &str) -> PyResult<()> {
        core::save_gray(&self.inner, path).map_err(to_py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.pixels())
    }

    fn get(&self, x: usize, y: usize) -> PyResult<u8> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err(format!(
                "({x}, {y}) is outside the image"
            )));
        }
        Ok(self.inner.get(x, y))
    }

    fn __repr__(&self) -> String {
        format!("GrayImage({}x{})", self.inner.width(), self.inner.height())
    }
}

/// Per-pixel region ids; 0 is background.
#[pyclass(name = "LabelMap", module = "autoseed", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyLabelMap {
    inner: core::LabelMap,
}

#[pymethods]
impl PyLabelMap {
    #[new]
    fn new(width: usize, height: usize, labels: Vec<u32>) -> PyResult<Self> {
        Ok(Self {
            inner: core::LabelMap::new(width, height, labels).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::load_label_map(path).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        core::save_label_png(&self.inner, path).map_err(to_py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn labels(&self) -> Vec<u32> {
        self.inner.labels().to_vec()
    }

    fn region_count(&self) -> usize {
        self.inner.region_count()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<u32> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err(format!(
                "({x}, {y}) is outside the map"
            )));
        }
        Ok(self.inner.get(x, y))
    }

    fn __repr__(&self) -> String {
        format!(
            "LabelMap({}x{}, {} regions)",
            self.inner.width(),
            self.inner.height(),
            self.inner.region_count()
        )
    }
}

/// Pipeline parameters. Enum-valued fields take their JSON spellings
/// (`"four"`/`"eight"`, `"bright"`/`"dark"`, `"pixel_only"`/`"pixel_and_mean"`).
#[pyclass(name = "SegmentationConfig", module = "autoseed", skip_from_py_object)]
#[derive(Clone, Default)]
pub struct PyConfig {
    inner: core::SegmentationConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut cfg = Self::default();
        if let Some(kw) = kwargs {
            for (key, value) in kw.iter() {
                let key: String = key.extract()?;
                cfg.set(&key, &value)?;
            }
        }
        cfg.inner.validate().map_err(to_py_err)?;
        Ok(cfg)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: core::SegmentationConfig =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(to_py_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __getattr__(&self, py: Python<'_>, name: &str) -> PyResult<Py<PyAny>> {
        let value =
            serde_json::to_value(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))?;
        match value.get(name) {
            Some(v) => Ok(json_to_py(py, &v.to_string())?.unbind()),
            None => Err(pyo3::exceptions::PyAttributeError::new_err(
                name.to_string(),
            )),
        }
    }

    fn __setattr__(&mut self, name: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        self.set(name, value)
    }

    fn __repr__(&self) -> PyResult<String> {
        Ok(format!("SegmentationConfig({})", self.to_json()?))
    }
}

impl PyConfig {
    fn set(&mut self, name: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        let c = &mut self.inner;
        match name {
            "k" => c.k = value.extract()?,
            "seed_mask_r" => c.seed_mask_r = value.extract()?,
            "median_radius" => c.median_radius = value.extract()?,
            "grow_radius" => c.grow_radius = value.extract()?,
            "min_area" => c.min_area = value.extract()?,
            "rng_seed" => c.rng_seed = value.extract()?,
            "homogeneous_seeds" => c.homogeneous_seeds = value.extract()?,
            "connectivity" => {
                c.connectivity = value
                    .extract::<String>()?
                    .parse::<Connectivity>()
                    .map_err(to_py_err)?
            }
            "polarity" => {
                c.polarity = value
                    .extract::<String>()?
                    .parse::<Polarity>()
                    .map_err(to_py_err)?
            }
            "neighborhood_rule" => {
                c.neighborhood_rule = match value.extract::<String>()?.as_str() {
                    "pixel_only" => NeighborhoodRule::PixelOnly,
                    "pixel_and_mean" => NeighborhoodRule::PixelAndMean,
                    other => {
                        return Err(PyValueError::new_err(format!(
                            "unknown neighborhood rule {other:?}"
                        )))
                    }
                }
            }
            other => {
                return Err(pyo3::exceptions::PyAttributeError::new_err(format!(
                    "no config field {other:?}"
                )))
            }
        }
        Ok(())
    }
}

/// Outcome of [`segment`]: grown labels, seeds and the run report.
#[pyclass(
    name = "Segmentation",
    module = "autoseed",
    frozen,
    skip_from_py_object
)]
pub struct PySegmentation {
    inner: core::Segmentation,
}

#[pymethods]
impl PySegmentation {
    #[getter]
    fn labels(&self) -> PyLabelMap {
        PyLabelMap {
            inner: self.inner.labels().clone(),
        }
    }

    #[getter]
    fn threshold(&self) -> u8 {
        self.inner.otsu.threshold
    }

    /// Seeds as `(x, y)` tuples, in region order.
    #[getter]
    fn seeds(&self) -> Vec<(usize, usize)> {
        self.inner.seeds.iter().map(|s| (s.x, s.y)).collect()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    /// The run report as a dict (same content as the CLI's report.json).
    #[pyo3(signature = (input=None))]
    fn report<'py>(&self, py: Python<'py>, input: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &to_json(&self.inner.report(input, false))?)
    }
}

#[pyfunction]
#[pyo3(signature = (image, config=None))]
fn segment(image: &PyGrayImage, config: Option<&PyConfig>) -> PyResult<PySegmentation> {
    let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
    Ok(PySegmentation {
        inner: core::segment(&image.inner, &cfg).map_err(to_py_err)?,
    })
}

/// Returns `(threshold, between_class_variance)`.
#[pyfunction]
fn otsu_threshold(image: &PyGrayImage) -> PyResult<(u8, f64)> {
    let r = core::otsu_threshold(&core::histogram(&image.inner)).map_err(to_py_err)?;
    Ok((r.threshold, r.between_class_variance))
}

#[pyfunction]
fn median_filter(image: &PyGrayImage, radius: usize) -> PyGrayImage {
    PyGrayImage {
        inner: core::median_filter(&image.inner, radius),
    }
}

/// Renders `(cx, cy, radius, intensity)` disks; returns `(image, ground_truth)`.
#[pyfunction]
#[pyo3(signature = (width, height, blobs, bg_intensity, noise_sigma=0.0, rng_seed=0))]
fn generate_blobs(
    width: usize,
    height: usize,
    blobs: Vec<(f64, f64, f64, u8)>,
    bg_intensity: u8,
    noise_sigma: f64,
    rng_seed: u64,
) -> PyResult<(PyGrayImage, PyLabelMap)> {
    let specs: Vec<core::BlobSpec> = blobs
        .into_iter()
        .map(|(cx, cy, radius, intensity)| core::BlobSpec {
            center: (cx, cy),
            radius,
            intensity,
        })
        .collect();
    let (img, gt) =
        core::generate_blobs(width, height, &specs, bg_intensity, noise_sigma, rng_seed)
            .map_err(to_py_err)?;
    Ok((PyGrayImage { inner: img }, PyLabelMap { inner: gt }))
}

/// `n` random disks around `fg_intensity`; returns `(image, ground_truth)`.
#[pyfunction]
#[pyo3(signature = (width, height, n, bg_intensity=40, fg_intensity=160, noise_sigma=0.0, rng_seed=0))]
fn random_scene(
    width: usize,
    height: usize,
    n: usize,
    bg_intensity: u8,
    fg_intensity: u8,
    noise_sigma: f64,
    rng_seed: u64,
) -> PyResult<(PyGrayImage, PyLabelMap)> {
    let spec = core::synth::random_scene(
        width,
        height,
        n,
        bg_intensity,
        fg_intensity,
        noise_sigma,
        rng_seed,
    )
    .map_err(to_py_err)?;
    let (img, gt) = spec.generate().map_err(to_py_err)?;
    Ok((PyGrayImage { inner: img }, PyLabelMap { inner: gt }))
}

/// Dice evaluation of `pred` against `gt` as a dict.
#[pyfunction]
fn dice_match<'py>(
    py: Python<'py>,
    pred: &PyLabelMap,
    gt: &PyLabelMap,
) -> PyResult<Bound<'py, PyAny>> {
    let report = core::dice_match(&pred.inner, &gt.inner).map_err(to_py_err)?;
    json_to_py(py, &to_json(&report)?)
}

/// K-means on `(fx, fy, fi)` points; returns `(centroids, assignments, inertia)`.
#[pyfunction]
#[pyo3(signature = (points, k, rng_seed=0))]
#[allow(clippy::type_complexity)]
fn kmeans(
    points: Vec<(f64, f64, f64)>,
    k: usize,
    rng_seed: u64,
) -> PyResult<(Vec<(f64, f64, f64)>, Vec<usize>, f64)> {
    let pts: Vec<core::FeatureVector> = points
        .into_iter()
        .map(|(fx, fy, fi)| core::FeatureVector { fx, fy, fi })
        .collect();
    let m = core::kmeans(&pts, k, rng_seed).map_err(to_py_err)?;
    let centroids = m.centroids.iter().map(|c| (c.fx, c.fy, c.fi)).collect();
    Ok((centroids, m.assignments, m.inertia))
}

#[pymodule]
fn autoseed(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrayImage>()?;
    m.add_class::<PyLabelMap>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PySegmentation>()?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(otsu_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(median_filter, m)?)?;
    m.add_function(wrap_pyfunction!(generate_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(random_scene, m)?)?;
    m.add_function(wrap_pyfunction!(dice_match, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    Ok(())
}
