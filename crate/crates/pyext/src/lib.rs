//! Python bindings: geodesic threshold networks and growth fits.
//!
//! Build with `cargo build -p geonet-py --release`; the resulting
//! `libgeonet_py.so` imports as the `geonet_py` module once renamed (see
//! `python/smoke_test.py`, which wires this up automatically).

use chrono::NaiveDate;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use geonet::community;
use geonet::geo::{haversine_distance, GeoPoint};
use geonet::growthfit::{self, FitResult, GrowthSeries};
use geonet::metrics;
use geonet::netbuild::{connectivity_parameter, DistanceMatrix, Snapshot};
use geonet::spectral;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn geo_point(lat: f64, lon: f64) -> PyResult<GeoPoint> {
    GeoPoint::new(lat, lon).map_err(value_err)
}

/// Great-circle distance in kilometers between two (lat, lon) pairs in
/// decimal degrees, by the haversine formula.
#[pyfunction]
fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> PyResult<f64> {
    Ok(haversine_distance(geo_point(lat1, lon1)?, geo_point(lat2, lon2)?))
}

/// A geodesic threshold network over (lat, lon) coordinates.
///
/// Without a threshold the connectivity parameter (smallest distance that
/// makes the network connected) is derived automatically; a fixed
/// threshold may leave the network disconnected.
#[pyclass(frozen)]
struct Network {
    snapshot: Snapshot,
}

#[pymethods]
impl Network {
    #[new]
    #[pyo3(signature = (coords, threshold_km=None))]
    fn new(coords: Vec<(f64, f64)>, threshold_km: Option<f64>) -> PyResult<Self> {
        let points: Vec<GeoPoint> = coords
            .iter()
            .map(|&(lat, lon)| geo_point(lat, lon))
            .collect::<PyResult<_>>()?;
        let d = DistanceMatrix::from_points(&points);
        let ids = (0..points.len()).map(|i| i.to_string()).collect();
        let date = NaiveDate::from_ymd_opt(1970, 1, 1).expect("epoch");
        let snapshot = Snapshot::build(date, ids, &d, threshold_km).map_err(value_err)?;
        Ok(Network { snapshot })
    }

    fn vertex_count(&self) -> usize {
        self.snapshot.n()
    }

    fn edge_count(&self) -> usize {
        self.snapshot.edge_count()
    }

    /// The threshold d(t) in km: auto-derived unless one was supplied.
    fn connectivity_param_km(&self) -> f64 {
        self.snapshot.connectivity_param()
    }

    fn is_connected(&self) -> bool {
        self.snapshot.is_connected()
    }

    fn component_count(&self) -> usize {
        self.snapshot.component_count()
    }

    fn degrees(&self) -> Vec<usize> {
        self.snapshot.degrees().to_vec()
    }

    /// (max degree, average degree).
    fn degree_stats(&self) -> (usize, f64) {
        metrics::degree_stats(&self.snapshot)
    }

    /// Average clustering coefficient; degree < 2 vertices count as 0 and
    /// stay in the average unless `exclude_low_degree`.
    #[pyo3(signature = (exclude_low_degree=false))]
    fn avg_clustering(&self, exclude_low_degree: bool) -> f64 {
        metrics::clustering(&self.snapshot, exclude_low_degree).1
    }

    fn clustering_per_vertex(&self) -> Vec<f64> {
        metrics::clustering(&self.snapshot, false).0
    }

    fn triangle_count(&self) -> u64 {
        metrics::triangle_count(&self.snapshot)
    }

    /// (diameter, average path length) in hops; raises on a disconnected
    /// network.
    fn path_metrics(&self) -> PyResult<(u32, f64)> {
        metrics::path_metrics(&self.snapshot).map_err(value_err)
    }

    /// Largest adjacency eigenvalue.
    #[pyo3(signature = (tol=1e-9))]
    fn spectral_radius(&self, tol: f64) -> PyResult<f64> {
        spectral::spectral_radius(&self.snapshot, tol)
            .map(|est| est.value)
            .map_err(runtime_err)
    }

    /// Second-smallest Laplacian eigenvalue (0 for disconnected networks).
    #[pyo3(signature = (tol=1e-9))]
    fn algebraic_connectivity(&self, tol: f64) -> PyResult<f64> {
        spectral::algebraic_connectivity(&self.snapshot, tol)
            .map(|est| est.value)
            .map_err(runtime_err)
    }

    /// Louvain communities: (per-vertex labels, modularity). `restarts`
    /// keeps the best modularity over consecutive seeds.
    #[pyo3(signature = (seed=42, restarts=1))]
    fn louvain(&self, seed: u64, restarts: u32) -> PyResult<(Vec<u32>, f64)> {
        let (partition, stats) = community::louvain_best_of(&self.snapshot, seed, restarts)
            .map_err(value_err)?;
        Ok((
            partition.labels().to_vec(),
            stats.modularity.expect("set by louvain"),
        ))
    }

    /// Newman–Girvan modularity of an explicit labeling.
    fn modularity(&self, labels: Vec<u32>) -> PyResult<f64> {
        let partition = community::Partition::from_labels(&labels);
        community::modularity(&self.snapshot, &partition).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(n={}, edges={}, d_km={:.6}, connected={})",
            self.snapshot.n(),
            self.snapshot.edge_count(),
            self.snapshot.connectivity_param(),
            self.snapshot.is_connected()
        )
    }
}

/// Smallest threshold that connects the coordinate set, in km.
#[pyfunction]
fn connectivity_param_km(coords: Vec<(f64, f64)>) -> PyResult<f64> {
    let points: Vec<GeoPoint> = coords
        .iter()
        .map(|&(lat, lon)| geo_point(lat, lon))
        .collect::<PyResult<_>>()?;
    Ok(connectivity_parameter(&DistanceMatrix::from_points(&points)))
}

/// A fitted growth model.
#[pyclass(frozen)]
struct FitOutcome {
    inner: FitResult,
}

#[pymethods]
impl FitOutcome {
    #[getter]
    fn model(&self) -> &'static str {
        self.inner.model.as_str()
    }

    /// (a₃, a₂, a₁, a₀) for cubic; (α, β, c, γ) for tanh.
    #[getter]
    fn params(&self) -> Vec<f64> {
        self.inner.params.clone()
    }

    #[getter]
    fn rss(&self) -> f64 {
        self.inner.rss
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn iterations(&self) -> u32 {
        self.inner.iterations
    }

    /// Evaluate the fitted curve at the given x values.
    fn evaluate(&self, xs: Vec<f64>) -> PyResult<Vec<f64>> {
        growthfit::extrapolate(&self.inner, &xs).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "FitOutcome(model={}, params={:?}, rss={:e}, converged={})",
            self.inner.model.as_str(),
            self.inner.params,
            self.inner.rss,
            self.inner.converged
        )
    }
}

fn series(x: Vec<i64>, y: Vec<f64>) -> PyResult<GrowthSeries> {
    GrowthSeries::new(x, y).map_err(value_err)
}

/// Least-squares cubic fit of y over integer day indices x.
#[pyfunction]
fn fit_cubic(x: Vec<i64>, y: Vec<f64>) -> PyResult<FitOutcome> {
    let fit = growthfit::fit_cubic(&series(x, y)?).map_err(runtime_err)?;
    Ok(FitOutcome { inner: fit })
}

/// Damped Gauss-Newton fit of α·tanh(β(x−c)) + γ.
#[pyfunction]
#[pyo3(signature = (x, y, init=None))]
fn fit_tanh(x: Vec<i64>, y: Vec<f64>, init: Option<[f64; 4]>) -> PyResult<FitOutcome> {
    let fit = growthfit::fit_tanh(&series(x, y)?, init).map_err(runtime_err)?;
    Ok(FitOutcome { inner: fit })
}

#[pymodule]
fn geonet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_class::<FitOutcome>()?;
    m.add_function(wrap_pyfunction!(haversine_km, m)?)?;
    m.add_function(wrap_pyfunction!(connectivity_param_km, m)?)?;
    m.add_function(wrap_pyfunction!(fit_cubic, m)?)?;
    m.add_function(wrap_pyfunction!(fit_tanh, m)?)?;
    m.add("EARTH_RADIUS_KM", geonet::geo::EARTH_RADIUS_KM)?;
    Ok(())
}
