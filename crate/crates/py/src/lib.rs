//! Python bindings: masks, change maps, area quantification, metrics, losses
//! and the colour-channel segmenter.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use riverbank_core as core;
use riverbank_core::{
    AreaUnit, ChangeClass, ChannelMode, Connectivity, LossKind, LossParams, PositiveClass,
    SegmenterParams, ThresholdMode,
};

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e: T::Err| PyValueError::new_err(e.to_string()))
}

fn connectivity(n: u8) -> PyResult<Connectivity> {
    match n {
        4 => Ok(Connectivity::Four),
        8 => Ok(Connectivity::Eight),
        _ => Err(PyValueError::new_err("connectivity must be 4 or 8")),
    }
}

/// Land/water raster: 1 = land, 0 = water, row-major.
#[pyclass(name = "BinaryMask", module = "riverbank", frozen)]
struct PyBinaryMask {
    inner: core::BinaryMask,
}

#[pymethods]
impl PyBinaryMask {
    #[new]
    fn new(width: usize, height: usize, data: Vec<u8>) -> PyResult<Self> {
        Ok(Self {
            inner: core::BinaryMask::new(width, height, data).map_err(err)?,
        })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::io::read_mask(path).map_err(err)?,
        })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        core::io::write_mask(path, &self.inner).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn data<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.as_slice())
    }

    fn get(&self, x: usize, y: usize) -> PyResult<u8> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err("pixel out of bounds"));
        }
        Ok(self.inner.get(x, y))
    }

    fn count_land(&self) -> usize {
        self.inner.count_ones()
    }

    fn count_water(&self) -> usize {
        self.inner.count_zeros()
    }

    fn invert(&self) -> Self {
        Self {
            inner: self.inner.invert(),
        }
    }

    /// Drops land components smaller than `min_px`.
    #[pyo3(signature = (min_px, connectivity = 8))]
    fn filter_min_area(&self, min_px: usize, connectivity: u8) -> PyResult<Self> {
        Ok(Self {
            inner: core::filter_min_area(&self.inner, min_px, self::connectivity(connectivity)?),
        })
    }

    /// Number of land components.
    #[pyo3(signature = (connectivity = 8))]
    fn component_count(&self, connectivity: u8) -> PyResult<usize> {
        Ok(
            core::connected_components(&self.inner, self::connectivity(connectivity)?)
                .0
                .len(),
        )
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "BinaryMask({}x{}, land={})",
            self.inner.width(),
            self.inner.height(),
            self.inner.count_ones()
        )
    }
}

/// Per-pixel change classes between two epochs.
#[pyclass(name = "ChangeMap", module = "riverbank", frozen)]
struct PyChangeMap {
    inner: core::ChangeMap,
}

#[pymethods]
impl PyChangeMap {
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::io::read_change_map(path).map_err(err)?,
        })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        core::io::write_rgb(path, &core::render_change_map(&self.inner)).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    /// Class name at `(x, y)`.
    fn get(&self, x: usize, y: usize) -> PyResult<&'static str> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err("pixel out of bounds"));
        }
        Ok(self.inner.get(x, y).name())
    }

    fn counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = self.inner.counts();
        let d = PyDict::new(py);
        for class in ChangeClass::ALL {
            d.set_item(class.name(), c.get(class))?;
        }
        Ok(d)
    }

    /// Mask of pixels in the named class.
    fn class_mask(&self, class: &str) -> PyResult<PyBinaryMask> {
        let class = ChangeClass::ALL
            .into_iter()
            .find(|c| c.name() == class)
            .ok_or_else(|| PyValueError::new_err(format!("unknown class {class}")))?;
        Ok(PyBinaryMask {
            inner: self.inner.class_mask(class),
        })
    }

    /// The `(t1, t2)` masks implied by the classes.
    fn reconstruct(&self) -> (PyBinaryMask, PyBinaryMask) {
        let (a, b) = self.inner.reconstruct();
        (PyBinaryMask { inner: a }, PyBinaryMask { inner: b })
    }

    /// Palette-rendered RGB bytes, row-major.
    fn to_rgb<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, core::render_change_map(&self.inner).as_raw())
    }
}

#[pyfunction]
fn classify_change(t1: &PyBinaryMask, t2: &PyBinaryMask) -> PyResult<PyChangeMap> {
    Ok(PyChangeMap {
        inner: core::classify_change(&t1.inner, &t2.inner).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (change_map, min_px = 500, connectivity = 8))]
fn filter_change(
    change_map: &PyChangeMap,
    min_px: usize,
    connectivity: u8,
) -> PyResult<PyChangeMap> {
    Ok(PyChangeMap {
        inner: core::filter_change(&change_map.inner, min_px, self::connectivity(connectivity)?),
    })
}

#[pyfunction]
fn pixel_area_m2(resolution_m: f64) -> PyResult<f64> {
    core::pixel_area_m2(resolution_m).map_err(err)
}

/// Area of `n` pixels in `unit` (`m2`, `ha` or `km2`).
#[pyfunction]
#[pyo3(signature = (n, resolution_m, unit = "km2"))]
fn area_from_pixels(n: u64, resolution_m: f64, unit: &str) -> PyResult<f64> {
    core::area_from_pixels(n, resolution_m, parse::<AreaUnit>(unit)?).map_err(err)
}

/// Areas for a change map as a dict, plus the CSV report under `"csv"`.
#[pyfunction]
fn quantify<'py>(
    py: Python<'py>,
    change_map: &PyChangeMap,
    resolution_m: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let a =
        core::ChangeAreas::from_counts(&change_map.inner.counts(), resolution_m).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("erosion_px", a.erosion_px)?;
    d.set_item("accretion_px", a.accretion_px)?;
    d.set_item("stable_px", a.stable_px)?;
    d.set_item("erosion_km2", a.erosion_km2)?;
    d.set_item("accretion_km2", a.accretion_km2)?;
    d.set_item("stable_km2", a.stable_km2)?;
    d.set_item("net_change_km2", a.net_change_km2)?;
    d.set_item("uncertainty_fraction", a.uncertainty_fraction)?;
    d.set_item("uncertainty_extrapolated", a.uncertainty_extrapolated)?;
    d.set_item("csv", a.to_csv())?;
    Ok(d)
}

/// IoU, F1, precision, recall, pixel accuracy and boundary IoU.
#[pyfunction]
#[pyo3(signature = (pred, gt, positive = "water", boundary_band = 2))]
fn metrics<'py>(
    py: Python<'py>,
    pred: &PyBinaryMask,
    gt: &PyBinaryMask,
    positive: &str,
    boundary_band: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let positive = parse::<PositiveClass>(positive)?;
    let (c, m) =
        core::eval::evaluate_pair(&pred.inner, &gt.inner, positive, boundary_band).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("tp", c.tp)?;
    d.set_item("fp", c.fp)?;
    d.set_item("fn", c.fn_)?;
    d.set_item("tn", c.tn)?;
    d.set_item("iou", m.iou)?;
    d.set_item("f1", m.f1)?;
    d.set_item("precision", m.precision)?;
    d.set_item("recall", m.recall)?;
    d.set_item("pixel_accuracy", m.pixel_accuracy)?;
    d.set_item("boundary_iou", m.boundary_iou)?;
    Ok(d)
}

/// Boundary IoU of the land (value 1) regions.
#[pyfunction]
#[pyo3(signature = (pred, gt, band_px = 2))]
fn boundary_iou(pred: &PyBinaryMask, gt: &PyBinaryMask, band_px: usize) -> PyResult<f64> {
    core::boundary_iou(&pred.inner, &gt.inner, band_px).map_err(err)
}

#[pyfunction]
fn cohens_kappa(a: &PyBinaryMask, b: &PyBinaryMask) -> PyResult<f64> {
    core::cohens_kappa(&a.inner, &b.inner).map_err(err)
}

fn loss_kind(name: &str) -> PyResult<LossKind> {
    LossKind::ALL
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| {
            PyValueError::new_err(format!("unknown loss {name} (focal, dice, iou, total)"))
        })
}

#[allow(clippy::too_many_arguments)]
fn loss_inputs(
    p: Vec<f64>,
    y: &PyBinaryMask,
    lambda_focal: f64,
    lambda_dice: f64,
    lambda_iou: f64,
    alpha: f64,
    gamma: f64,
    alpha_balanced: bool,
) -> PyResult<(core::ProbMap, LossParams)> {
    let p = core::ProbMap::new(y.inner.width(), y.inner.height(), p).map_err(err)?;
    let params = LossParams {
        lambda_focal,
        lambda_dice,
        lambda_iou,
        alpha,
        gamma,
        alpha_balanced,
    };
    Ok((p, params))
}

/// `(value, gradient)` of one loss term; `p` is the land probability per
/// pixel, shaped like `y`.
#[pyfunction]
#[pyo3(signature = (kind, p, y, lambda_focal = 20.0, lambda_dice = 1.0, lambda_iou = 1.0, alpha = 0.25, gamma = 2.0, alpha_balanced = false))]
#[allow(clippy::too_many_arguments)]
fn loss(
    kind: &str,
    p: Vec<f64>,
    y: &PyBinaryMask,
    lambda_focal: f64,
    lambda_dice: f64,
    lambda_iou: f64,
    alpha: f64,
    gamma: f64,
    alpha_balanced: bool,
) -> PyResult<(f64, Vec<f64>)> {
    let (p, params) = loss_inputs(
        p,
        y,
        lambda_focal,
        lambda_dice,
        lambda_iou,
        alpha,
        gamma,
        alpha_balanced,
    )?;
    let out = loss_kind(kind)?.eval(&p, &y.inner, &params).map_err(err)?;
    Ok((out.value, out.grad))
}

/// Largest relative error between analytic and central-difference gradients.
#[pyfunction]
#[pyo3(signature = (kind, p, y, h = 1e-5, lambda_focal = 20.0, lambda_dice = 1.0, lambda_iou = 1.0, alpha = 0.25, gamma = 2.0, alpha_balanced = false))]
#[allow(clippy::too_many_arguments)]
fn check_gradient(
    kind: &str,
    p: Vec<f64>,
    y: &PyBinaryMask,
    h: f64,
    lambda_focal: f64,
    lambda_dice: f64,
    lambda_iou: f64,
    alpha: f64,
    gamma: f64,
    alpha_balanced: bool,
) -> PyResult<f64> {
    let (p, params) = loss_inputs(
        p,
        y,
        lambda_focal,
        lambda_dice,
        lambda_iou,
        alpha,
        gamma,
        alpha_balanced,
    )?;
    core::check_gradient(loss_kind(kind)?, &p, &y.inner, &params, h).map_err(err)
}

/// Land/water mask from row-major RGB bytes. `threshold=None` uses Otsu.
#[pyfunction]
#[pyo3(signature = (width, height, rgb, channel_mode = "blue_dominance", threshold = None, refine_radius = 1, min_area = 500, equalize = true))]
#[allow(clippy::too_many_arguments)]
fn segment(
    width: u32,
    height: u32,
    rgb: Vec<u8>,
    channel_mode: &str,
    threshold: Option<f64>,
    refine_radius: usize,
    min_area: usize,
    equalize: bool,
) -> PyResult<PyBinaryMask> {
    let image = image_from(width, height, rgb)?;
    let params = SegmenterParams {
        channel_mode: parse::<ChannelMode>(channel_mode)?,
        threshold_mode: threshold.map_or(ThresholdMode::Otsu, ThresholdMode::Fixed),
        refine_radius,
        refine_min_area: min_area,
    };
    let image = if equalize {
        core::histogram_equalize(&image)
    } else {
        image
    };
    let raw = core::color_channel_segment(&image, &params).map_err(err)?;
    Ok(PyBinaryMask {
        inner: core::refine_mask(&raw, &params),
    })
}

fn image_from(width: u32, height: u32, rgb: Vec<u8>) -> PyResult<core::RgbImage> {
    core::RgbImage::from_raw(width, height, rgb)
        .ok_or_else(|| PyValueError::new_err("rgb length must be width * height * 3"))
}

#[pymodule]
fn riverbank(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBinaryMask>()?;
    m.add_class::<PyChangeMap>()?;
    m.add_function(wrap_pyfunction!(classify_change, m)?)?;
    m.add_function(wrap_pyfunction!(filter_change, m)?)?;
    m.add_function(wrap_pyfunction!(pixel_area_m2, m)?)?;
    m.add_function(wrap_pyfunction!(area_from_pixels, m)?)?;
    m.add_function(wrap_pyfunction!(quantify, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_iou, m)?)?;
    m.add_function(wrap_pyfunction!(cohens_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(loss, m)?)?;
    m.add_function(wrap_pyfunction!(check_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    Ok(())
}
