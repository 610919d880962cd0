//! Python bindings: Betti numbers of point clouds, the synthetic datasets,
//! the stacked-sine activation, and saved networks.
//!
//! Arrays cross the boundary as nested lists; anything iterable (including
//! NumPy arrays) is accepted on input.

use std::path::PathBuf;

use ndarray::Array2;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use toponet::datasets::{LabeledCloud, SampleShape, Split};
use toponet::nn::{ActivationKind, Network, NetworkSpec, TrainConfig};
use toponet::pointcloud::{pairwise_distances, PointCloud};
use toponet::topology::{self, BettiConfig};

create_exception!(toponet_py, ToponetError, PyException);
create_exception!(toponet_py, SimplexBudgetExceeded, ToponetError);

fn to_py(e: toponet::Error) -> PyErr {
    match e {
        toponet::Error::SimplexBudgetExceeded { .. } => SimplexBudgetExceeded::new_err(e.to_string()),
        e => ToponetError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(ToponetError::new_err("rows have different lengths"));
    }
    Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect()).map_err(|e| ToponetError::new_err(e.to_string()))
}

fn rows(x: &Array2<f64>) -> Vec<Vec<f64>> {
    x.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn cloud(points: Vec<Vec<f64>>) -> PyResult<PointCloud> {
    PointCloud::new(matrix(points)?).map_err(to_py)
}

/// Betti numbers of a point cloud at the quantile-selected scale.
///
/// Returns a dict with `betti`, `eps`, `subsample` (landmarks used) and
/// `simplices`.
#[pyfunction]
#[pyo3(signature = (points, subsample=300, quantile=0.15, max_dim=2, seed=0, robust_delta=None, simplex_budget=5_000_000))]
#[allow(clippy::too_many_arguments)]
fn betti_numbers<'py>(
    py: Python<'py>,
    points: Vec<Vec<f64>>,
    subsample: usize,
    quantile: f64,
    max_dim: usize,
    seed: u64,
    robust_delta: Option<f64>,
    simplex_budget: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cloud = cloud(points)?;
    let cfg = BettiConfig { subsample, seed, quantile, max_dim, robust_delta, simplex_budget };
    let p = py.detach(|| topology::betti_profile(&cloud, &cfg)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("betti", p.betti.betti.clone())?;
    out.set_item("eps", p.eps())?;
    out.set_item("subsample", p.subsample)?;
    out.set_item("simplices", p.simplices)?;
    Ok(out)
}

/// Persistence intervals `(dim, birth, death)` of the Rips filtration up to
/// `eps_max`; essential classes die at `inf`.
#[pyfunction]
#[pyo3(signature = (points, eps_max, max_dim=2))]
fn persistence_diagram(py: Python<'_>, points: Vec<Vec<f64>>, eps_max: f64, max_dim: usize) -> PyResult<Vec<(usize, f64, f64)>> {
    let cloud = cloud(points)?;
    let pd = py
        .detach(|| {
            let dm = pairwise_distances(&cloud);
            let f = topology::build_vr_filtration(&dm, eps_max, max_dim + 1)?;
            topology::reduce_boundary_matrix(&f)
        })
        .map_err(to_py)?;
    Ok(pd
        .intervals
        .iter()
        .enumerate()
        .take(max_dim + 1)
        .flat_map(|(k, ivs)| ivs.iter().map(move |iv| (k, iv.birth, iv.death)))
        .collect())
}

/// Betti numbers at `eps` by rank computation over all simplices; small
/// clouds only.
#[pyfunction]
#[pyo3(signature = (points, eps, max_dim=2))]
fn brute_force_betti(points: Vec<Vec<f64>>, eps: f64, max_dim: usize) -> PyResult<Vec<usize>> {
    let dm = pairwise_distances(&cloud(points)?);
    Ok(topology::brute_force_betti(&dm, eps, max_dim).map_err(to_py)?.betti)
}

/// Stacked sine of each value; `width` defaults to 3π/4.
#[pyfunction]
#[pyo3(signature = (x, width=None))]
fn stacked_sine(x: Vec<f64>, width: Option<f64>) -> PyResult<Vec<f64>> {
    let kind = match width {
        Some(width) => ActivationKind::StackedSine { width },
        None => ActivationKind::stacked_sine(),
    };
    kind.validate().map_err(to_py)?;
    Ok(x.into_iter().map(|v| kind.eval(v)).collect())
}

type Split4 = (Vec<Vec<f64>>, Vec<usize>, Vec<Vec<f64>>, Vec<usize>);

fn unpack((train, test): (LabeledCloud, LabeledCloud)) -> Split4 {
    (rows(&train.features), train.labels, rows(&test.features), test.labels)
}

/// `(x_train, y_train, x_test, y_test)` of the nine-rings dataset.
#[pyfunction]
#[pyo3(signature = (n_train=16_000, n_test=2_000, seed=0))]
fn gen_nine_rings(n_train: usize, n_test: usize, seed: u64) -> PyResult<Split4> {
    Ok(unpack(toponet::datasets::gen_nine_rings(n_train, n_test, seed).map_err(to_py)?))
}

/// `(x_train, y_train, x_test, y_test)` of the nine-spheres dataset.
#[pyfunction]
#[pyo3(signature = (n_train=16_000, n_test=2_000, seed=0))]
fn gen_nine_spheres(n_train: usize, n_test: usize, seed: u64) -> PyResult<Split4> {
    Ok(unpack(toponet::datasets::gen_nine_spheres(n_train, n_test, seed).map_err(to_py)?))
}

fn labeled(x: Vec<Vec<f64>>, y: Vec<usize>, classes: usize, split: Split, shape: SampleShape) -> PyResult<LabeledCloud> {
    let x = matrix(x)?;
    let shape = if shape.features() == x.ncols() { shape } else { SampleShape::Flat(x.ncols()) };
    LabeledCloud::new(x, y, classes, split, shape).map_err(to_py)
}

/// A feed-forward network (dense, conv, max-pool layers).
#[pyclass(name = "Network", module = "toponet_py", skip_from_py_object)]
#[derive(Clone)]
struct PyNetwork {
    inner: Network,
}

#[pymethods]
impl PyNetwork {
    /// Builds a freshly initialized network from its JSON spec.
    #[new]
    fn new(spec_json: &str) -> PyResult<Self> {
        let spec: NetworkSpec = serde_json::from_str(spec_json).map_err(|e| ToponetError::new_err(e.to_string()))?;
        Ok(Self { inner: Network::new(spec).map_err(to_py)? })
    }

    /// `depth` hidden layers of `width` units; `activation` as on the
    /// command line (`relu`, `stacked-sine`, ...).
    #[staticmethod]
    #[pyo3(signature = (inputs, classes, depth=9, width=25, activation="relu", seed=0))]
    fn mlp(inputs: usize, classes: usize, depth: usize, width: usize, activation: &str, seed: u64) -> PyResult<Self> {
        let kind: ActivationKind = activation.parse().map_err(to_py)?;
        let spec = toponet::nn::mlp(inputs, depth, width, classes, kind, seed);
        Ok(Self { inner: Network::new(spec).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: Network::load(&dir).map_err(to_py)? })
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.save(&dir).map_err(to_py)
    }

    fn spec_json(&self) -> String {
        serde_json::to_string(self.inner.spec()).expect("spec serializes")
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    #[getter]
    fn classes(&self) -> usize {
        self.inner.classes()
    }

    fn predict_proba(&self, py: Python<'_>, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let x = matrix(x)?;
        let p = py.detach(|| self.inner.predict_proba(x.view())).map_err(to_py)?;
        Ok(rows(&p))
    }

    fn predict(&self, py: Python<'_>, x: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        let x = matrix(x)?;
        py.detach(|| self.inner.predict(x.view())).map_err(to_py)
    }

    /// Trains in place and returns one dict per epoch.
    #[pyo3(signature = (x, y, x_test, y_test, epochs=10, lr=1e-3, batch_size=32, optimizer="adam", seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn fit<'py>(
        &mut self,
        py: Python<'py>,
        x: Vec<Vec<f64>>,
        y: Vec<usize>,
        x_test: Vec<Vec<f64>>,
        y_test: Vec<usize>,
        epochs: usize,
        lr: f64,
        batch_size: usize,
        optimizer: &str,
        seed: u64,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let classes = self.inner.classes();
        let shape = self.inner.spec().input;
        let train = labeled(x, y, classes, Split::Train, shape)?;
        let test = labeled(x_test, y_test, classes, Split::Test, shape)?;
        let cfg = TrainConfig { optimizer: optimizer.parse().map_err(to_py)?, lr, batch_size, epochs, seed, ..Default::default() };
        let (net, log) = py.detach(|| toponet::nn::train(&self.inner, &train, &test, &cfg)).map_err(to_py)?;
        self.inner = net;
        log.records
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("epoch", r.epoch)?;
                d.set_item("train_loss", r.train_loss)?;
                d.set_item("train_acc", r.train_acc)?;
                d.set_item("test_acc", r.test_acc)?;
                Ok(d)
            })
            .collect()
    }

    /// Betti numbers of class `label` at the input and after each layer, as
    /// `(layer name, betti or None)` pairs.
    #[pyo3(signature = (x, y, label, subsample=300, quantile=0.15, max_dim=2, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn layer_betti(
        &self,
        py: Python<'_>,
        x: Vec<Vec<f64>>,
        y: Vec<usize>,
        label: usize,
        subsample: usize,
        quantile: f64,
        max_dim: usize,
        seed: u64,
    ) -> PyResult<Vec<(String, Option<Vec<usize>>)>> {
        let data = labeled(x, y, self.inner.classes(), Split::Test, self.inner.spec().input)?;
        let cfg = BettiConfig { subsample, seed, quantile, max_dim, ..Default::default() };
        let prog = py.detach(|| toponet::experiments::layerwise_betti(&self.inner, &data, label, &cfg)).map_err(to_py)?;
        Ok(prog.layers.into_iter().map(|l| (l.name, l.betti.map(|b| b.betti))).collect())
    }

    fn __repr__(&self) -> String {
        let names: Vec<&str> = self.inner.spec().layers.iter().map(|l| l.name()).collect();
        format!("Network([{}], params={})", names.join(", "), self.inner.param_count())
    }
}

#[pymodule]
fn toponet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ToponetError", m.py().get_type::<ToponetError>())?;
    m.add("SimplexBudgetExceeded", m.py().get_type::<SimplexBudgetExceeded>())?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(betti_numbers, m)?)?;
    m.add_function(wrap_pyfunction!(persistence_diagram, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_betti, m)?)?;
    m.add_function(wrap_pyfunction!(stacked_sine, m)?)?;
    m.add_function(wrap_pyfunction!(gen_nine_rings, m)?)?;
    m.add_function(wrap_pyfunction!(gen_nine_spheres, m)?)?;
    Ok(())
}
