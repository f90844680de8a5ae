//! Python bindings. Users are passed as `(id, x, y, z)` tuples and points as
//! `(x, y, z)` tuples.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use uavcover::multiuav::{self, ClusterPlan, MultiUavConfig, RateUsers};
use uavcover::optimize::{GdConfig, PsoConfig};
use uavcover::propagation::{self, Band, RadioParams};
use uavcover::scenario::{self, IndoorUser, UavPlacement, UserHeight};
use uavcover::{placement, Point3};

type UserTuple = (u32, f64, f64, f64);
type PointTuple = (f64, f64, f64);

fn py_err(e: uavcover::Error) -> PyErr {
    match e.exit_code() {
        1 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn point(p: PointTuple) -> Point3 {
    Point3::new(p.0, p.1, p.2)
}

fn tuple(p: Point3) -> PointTuple {
    (p.x, p.y, p.z)
}

fn users_in(users: Vec<UserTuple>) -> Vec<IndoorUser> {
    users
        .into_iter()
        .map(|(id, x, y, z)| IndoorUser::new(id, Point3::new(x, y, z)))
        .collect()
}

fn users_out(users: Vec<IndoorUser>) -> Vec<UserTuple> {
    users
        .into_iter()
        .map(|u| (u.id, u.position.x, u.position.y, u.position.z))
        .collect()
}

fn height(mid_floor: bool) -> UserHeight {
    if mid_floor {
        UserHeight::MidFloor
    } else {
        UserHeight::FloorLevels
    }
}

#[pyclass(frozen, name = "Building")]
struct PyBuilding(scenario::Building);

#[pymethods]
impl PyBuilding {
    #[new]
    #[pyo3(signature = (x_b, y_b, z_b, floor_height = 5.0))]
    fn new(x_b: f64, y_b: f64, z_b: f64, floor_height: f64) -> PyResult<Self> {
        scenario::Building::new(x_b, y_b, z_b, floor_height)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn x_b(&self) -> f64 {
        self.0.x_b
    }

    #[getter]
    fn y_b(&self) -> f64 {
        self.0.y_b
    }

    #[getter]
    fn z_b(&self) -> f64 {
        self.0.z_b
    }

    #[getter]
    fn floor_height(&self) -> f64 {
        self.0.floor_height
    }

    fn contains(&self, p: PointTuple) -> bool {
        self.0.contains(point(p))
    }

    fn center_line(&self, x: f64) -> PointTuple {
        tuple(self.0.center_line(x))
    }

    fn __repr__(&self) -> String {
        let b = &self.0;
        format!("Building(x_b={}, y_b={}, z_b={}, floor_height={})", b.x_b, b.y_b, b.z_b, b.floor_height)
    }
}

#[pyclass(frozen, name = "Radio")]
struct PyRadio(RadioParams);

#[pymethods]
impl PyRadio {
    /// `band` is `"low_shf"` or `"high_shf"`.
    #[new]
    fn new(band: &str, frequency_ghz: f64) -> PyResult<Self> {
        let band = match band {
            "low_shf" => Band::LowShf,
            "high_shf" => Band::HighShf,
            other => return Err(PyValueError::new_err(format!("unknown band `{other}`"))),
        };
        RadioParams::new(band, frequency_ghz).map(Self).map_err(py_err)
    }

    #[getter]
    fn band(&self) -> &'static str {
        self.0.band.name()
    }

    #[getter]
    fn frequency_ghz(&self) -> f64 {
        self.0.carrier_frequency_ghz
    }

    /// Loss of one link as `(free_space, penetration, indoor, total)` in dB.
    fn path_loss(&self, uav: PointTuple, user: PointTuple, building: &PyBuilding) -> PyResult<(f64, f64, f64, f64)> {
        let geom = propagation::link_geometry(point(uav), point(user), &building.0).map_err(py_err)?;
        let l = propagation::path_loss(&geom, &self.0).map_err(py_err)?;
        Ok((l.free_space, l.penetration, l.indoor, l.total))
    }

    fn __repr__(&self) -> String {
        format!("Radio('{}', {})", self.0.band.name(), self.0.carrier_frequency_ghz)
    }
}

#[pyclass(frozen, get_all, name = "Placement")]
struct PyPlacement {
    position: PointTuple,
    standoff: f64,
    total_path_loss: f64,
    transmit_power_w: Option<f64>,
    /// Number of descent steps; `None` for swarm placements.
    iterations: Option<usize>,
}

impl PyPlacement {
    fn new(p: &UavPlacement, building: &scenario::Building, iterations: Option<usize>) -> Self {
        Self {
            position: tuple(p.position),
            standoff: p.standoff(building),
            total_path_loss: p.total_path_loss,
            transmit_power_w: p.transmit_power_w,
            iterations,
        }
    }
}

#[pymethods]
impl PyPlacement {
    fn __repr__(&self) -> String {
        let (x, y, z) = self.position;
        format!("Placement(position=({x:.3}, {y:.3}, {z:.3}), total_path_loss={:.3})", self.total_path_loss)
    }
}

#[pyclass(frozen, get_all, name = "ClusterPlan")]
struct PyClusterPlan {
    method: &'static str,
    k: usize,
    feasible: bool,
    max_power_w: f64,
    powers_w: Vec<f64>,
    member_counts: Vec<usize>,
    positions: Vec<Option<PointTuple>>,
    assignment: Vec<(u32, usize)>,
    scan: Vec<(usize, f64)>,
}

impl From<ClusterPlan> for PyClusterPlan {
    fn from(p: ClusterPlan) -> Self {
        Self {
            method: p.method.name(),
            k: p.k,
            feasible: p.feasible,
            max_power_w: p.max_power_w(),
            positions: p.placements.iter().map(|s| s.map(|q| tuple(q.position))).collect(),
            powers_w: p.powers_w,
            member_counts: p.member_counts,
            assignment: p.assignment,
            scan: p.scan,
        }
    }
}

#[pymethods]
impl PyClusterPlan {
    fn __repr__(&self) -> String {
        format!("ClusterPlan(method='{}', k={}, max_power_w={:.4e})", self.method, self.k, self.max_power_w)
    }
}

#[pyfunction]
fn worst_case_angle_low_shf(radio: &PyRadio) -> PyResult<f64> {
    placement::worst_case_angle_low_shf(&radio.0.low_shf).map_err(py_err)
}

#[pyfunction]
fn worst_case_angle_high_shf(building: &PyBuilding, radio: &PyRadio) -> PyResult<f64> {
    placement::worst_case_angle_high_shf(&building.0, &radio.0, &placement::default_high_shf_bracket()).map_err(py_err)
}

/// Standoff from the wall at which the worst corner is seen under `angle_deg`.
#[pyfunction]
fn worst_case_standoff(building: &PyBuilding, angle_deg: f64) -> PyResult<f64> {
    placement::worst_case_standoff(&building.0, angle_deg).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (building, users_per_floor, seed = 1, mid_floor = false))]
fn symmetric_users(building: &PyBuilding, users_per_floor: usize, seed: u64, mid_floor: bool) -> PyResult<Vec<UserTuple>> {
    scenario::generate_symmetric_users(&building.0, users_per_floor, height(mid_floor), seed)
        .map(users_out)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (building, users_per_floor, seed = 1, mid_floor = false))]
fn uniform_users(building: &PyBuilding, users_per_floor: usize, seed: u64, mid_floor: bool) -> PyResult<Vec<UserTuple>> {
    scenario::generate_uniform_users(&building.0, users_per_floor, height(mid_floor), seed)
        .map(users_out)
        .map_err(py_err)
}

#[pyfunction]
fn total_path_loss(uav: PointTuple, users: Vec<UserTuple>, radio: &PyRadio, building: &PyBuilding) -> PyResult<f64> {
    scenario::total_path_loss(point(uav), &users_in(users), &radio.0, &building.0).map_err(py_err)
}

/// Gradient of the summed loss with respect to the UAV position.
#[pyfunction]
fn gradient(uav: PointTuple, users: Vec<UserTuple>, radio: &PyRadio) -> PyResult<PointTuple> {
    let g = placement::grad_total(point(uav), &users_in(users), &radio.0).map_err(py_err)?;
    Ok((g.d_dx, g.d_dy, g.d_dz))
}

/// Gradient descent along the centre line; the roster must be mirror-symmetric.
#[pyfunction]
#[pyo3(signature = (building, users, radio, step_size = 0.01, max_iterations = 500))]
fn place_symmetric(
    py: Python<'_>,
    building: &PyBuilding,
    users: Vec<UserTuple>,
    radio: &PyRadio,
    step_size: f64,
    max_iterations: usize,
) -> PyResult<PyPlacement> {
    let users = users_in(users);
    let cfg = GdConfig {
        step_size,
        max_iterations,
        ..GdConfig::default()
    };
    let (p, gd) = py
        .detach(|| placement::place_symmetric(&building.0, &users, &radio.0, &cfg))
        .map_err(py_err)?;
    Ok(PyPlacement::new(&p, &building.0, Some(gd.iterations)))
}

#[pyfunction]
#[pyo3(signature = (building, users, radio, seed = 1, population = 50, max_iterations = 200))]
fn place_pso(
    py: Python<'_>,
    building: &PyBuilding,
    users: Vec<UserTuple>,
    radio: &PyRadio,
    seed: u64,
    population: usize,
    max_iterations: usize,
) -> PyResult<PyPlacement> {
    let users = users_in(users);
    let cfg = PsoConfig {
        seed,
        population,
        max_iterations,
        ..PsoConfig::default()
    };
    let (p, _) = py
        .detach(|| placement::place_pso(&building.0, &users, &radio.0, &cfg))
        .map_err(py_err)?;
    Ok(PyPlacement::new(&p, &building.0, None))
}

fn fleet_config(max_power_w: f64, noise_dbm: f64, seed: u64, max_k: usize, per_cluster_rate: bool) -> MultiUavConfig {
    MultiUavConfig {
        max_power_w,
        noise_dbm,
        kmeans_seed: seed,
        pso_seed: seed,
        max_k,
        rate_users: if per_cluster_rate {
            RateUsers::PerCluster
        } else {
            RateUsers::Total
        },
        ..MultiUavConfig::default()
    }
}

#[pyfunction]
#[pyo3(signature = (users, building, max_power_w = 5.0, noise_dbm = -150.0, seed = 1, max_k = 50, per_cluster_rate = false))]
#[allow(clippy::too_many_arguments)]
fn plan_clustered(
    py: Python<'_>,
    users: Vec<UserTuple>,
    building: &PyBuilding,
    max_power_w: f64,
    noise_dbm: f64,
    seed: u64,
    max_k: usize,
    per_cluster_rate: bool,
) -> PyResult<PyClusterPlan> {
    let users = users_in(users);
    let cfg = fleet_config(max_power_w, noise_dbm, seed, max_k, per_cluster_rate);
    py.detach(|| multiuav::plan_clustered(&users, &building.0, &cfg))
        .map(Into::into)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (users, building, max_power_w = 5.0, noise_dbm = -150.0, seed = 1, max_k = 50, per_cluster_rate = false))]
#[allow(clippy::too_many_arguments)]
fn plan_uniform_split(
    py: Python<'_>,
    users: Vec<UserTuple>,
    building: &PyBuilding,
    max_power_w: f64,
    noise_dbm: f64,
    seed: u64,
    max_k: usize,
    per_cluster_rate: bool,
) -> PyResult<PyClusterPlan> {
    let users = users_in(users);
    let cfg = fleet_config(max_power_w, noise_dbm, seed, max_k, per_cluster_rate);
    py.detach(|| multiuav::plan_uniform_split(&users, &building.0, &cfg))
        .map(Into::into)
        .map_err(py_err)
}

/// Run an experiment file; returns the written CSV paths.
#[pyfunction]
#[pyo3(signature = (path, output_dir = None, seed = None))]
fn run_experiment(py: Python<'_>, path: PathBuf, output_dir: Option<PathBuf>, seed: Option<u64>) -> PyResult<Vec<PathBuf>> {
    let opts = uavcover::experiment::RunOptions { output_dir, seed };
    py.detach(|| uavcover::experiment::run_file(&path, &opts))
        .map(|s| s.files)
        .map_err(py_err)
}

#[pymodule]
fn pyuavcover(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyBuilding>()?;
    m.add_class::<PyRadio>()?;
    m.add_class::<PyPlacement>()?;
    m.add_class::<PyClusterPlan>()?;
    m.add_function(wrap_pyfunction!(worst_case_angle_low_shf, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_angle_high_shf, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_standoff, m)?)?;
    m.add_function(wrap_pyfunction!(symmetric_users, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_users, m)?)?;
    m.add_function(wrap_pyfunction!(total_path_loss, m)?)?;
    m.add_function(wrap_pyfunction!(gradient, m)?)?;
    m.add_function(wrap_pyfunction!(place_symmetric, m)?)?;
    m.add_function(wrap_pyfunction!(place_pso, m)?)?;
    m.add_function(wrap_pyfunction!(plan_clustered, m)?)?;
    m.add_function(wrap_pyfunction!(plan_uniform_split, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
