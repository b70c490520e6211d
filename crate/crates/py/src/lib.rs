//! Python bindings: scenario generation, the energy model, the three
//! optimization strategies, deployment, and impact summaries.
//!
//! From Python: `import nesopt_py`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nesopt_core::deployment::{solve_deployment, CapacityParams};
use nesopt_core::energy::{fit_linear_cost, idle_cycle_energy};
use nesopt_core::impact::analyze;
use nesopt_core::radio::SnrTable;
use nesopt_core::scenario::{total_baseline_beams, validate};
use nesopt_core::strategies::{
    baseline_plan, optimize_with_table, uncovered_required_tps, ActivationPlan as CorePlan, PlanFile,
    SolveLimits, Strategy,
};
use nesopt_core::twin::{generate, TwinConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Immutable world model handle.
#[pyclass(name = "Scenario")]
struct PyScenario {
    inner: nesopt_core::Scenario,
}

#[pymethods]
impl PyScenario {
    /// Generate a scenario from a twin-config JSON string. Missing fields
    /// take defaults.
    #[staticmethod]
    fn generate(config_json: &str) -> PyResult<Self> {
        let config: TwinConfig = serde_json::from_str(config_json).map_err(value_err)?;
        Ok(Self { inner: generate(&config).map_err(value_err)? })
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(Self { inner: nesopt_core::Scenario::from_json_str(json).map_err(value_err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: nesopt_core::Scenario::load(std::path::Path::new(path)).map_err(value_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json_string().map_err(runtime_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(std::path::Path::new(path)).map_err(runtime_err)
    }

    /// Broken invariants as human-readable strings; empty means valid.
    fn validate(&self) -> Vec<String> {
        validate(&self.inner).iter().map(|v| v.to_string()).collect()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.n_cells()
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.site_ids().len()
    }

    #[getter]
    fn n_traffic_points(&self) -> usize {
        self.inner.n_traffic_points()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn total_baseline_beams(&self) -> usize {
        total_baseline_beams(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(cells={}, sites={}, traffic_points={}, seed={})",
            self.inner.n_cells(),
            self.inner.site_ids().len(),
            self.inner.n_traffic_points(),
            self.inner.seed,
        )
    }
}

/// A solved activation plan.
#[pyclass(name = "ActivationPlan")]
struct PyPlan {
    inner: CorePlan,
    strategy: String,
    threshold_db: f64,
}

#[pymethods]
impl PyPlan {
    #[getter]
    fn strategy(&self) -> &str {
        &self.strategy
    }

    #[getter]
    fn threshold_db(&self) -> f64 {
        self.threshold_db
    }

    #[getter]
    fn n_active_cells(&self) -> usize {
        self.inner.n_active_cells()
    }

    #[getter]
    fn total_active_beams(&self) -> usize {
        self.inner.total_active_beams()
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective_value
    }

    #[getter]
    fn status(&self) -> String {
        self.inner.solver_status.to_string()
    }

    #[getter]
    fn gap(&self) -> f64 {
        self.inner.gap
    }

    #[getter]
    fn solve_time_s(&self) -> f64 {
        self.inner.solve_time_s
    }

    fn active_cell_ids(&self) -> Vec<usize> {
        self.inner
            .active_cells
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect()
    }

    fn beams_per_cell(&self) -> Vec<Vec<u32>> {
        self.inner.beams_per_cell.clone()
    }

    /// Serialize in the same JSON format the CLI writes.
    fn to_json(&self, scenario: &PyScenario) -> PyResult<String> {
        let file = PlanFile::from_plan(&self.inner, &scenario.inner, &self.strategy, self.threshold_db);
        serde_json::to_string_pretty(&file).map_err(runtime_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "ActivationPlan(strategy='{}', cells={}, beams={}, objective={:.3}, status='{}')",
            self.strategy,
            self.inner.n_active_cells(),
            self.inner.total_active_beams(),
            self.inner.objective_value,
            self.inner.solver_status,
        )
    }
}

fn limits(exact_limit: usize, node_budget: u64) -> SolveLimits {
    SolveLimits { exact_var_limit: exact_limit, node_budget }
}

/// Run one strategy ("local-beam", "cell", "joint") or "baseline".
#[pyfunction]
#[pyo3(signature = (scenario, strategy, threshold_db=-6.0, exact_limit=5000, node_budget=1_000_000))]
fn optimize(
    scenario: &PyScenario,
    strategy: &str,
    threshold_db: f64,
    exact_limit: usize,
    node_budget: u64,
) -> PyResult<PyPlan> {
    let table = SnrTable::compute(&scenario.inner).map_err(value_err)?;
    let fitted = fit_linear_cost(&scenario.inner.power_model).map_err(value_err)?;
    let plan = if strategy == "baseline" {
        baseline_plan(&table, &fitted).map_err(runtime_err)?
    } else {
        let strategy: Strategy = strategy.parse().map_err(value_err)?;
        let plan = optimize_with_table(&table, strategy, &fitted, threshold_db, &limits(exact_limit, node_budget))
            .map_err(runtime_err)?;
        let uncovered = uncovered_required_tps(&table, &plan, threshold_db);
        if !uncovered.is_empty() {
            return Err(runtime_err(format!("{} traffic points left uncovered", uncovered.len())));
        }
        plan
    };
    Ok(PyPlan { inner: plan, strategy: strategy.to_string(), threshold_db })
}

/// Linear energy pricing fitted to the scenario's power model:
/// dict with c_static, m, r_squared.
#[pyfunction]
fn fit_pricing(py: Python<'_>, scenario: &PyScenario) -> PyResult<Py<PyDict>> {
    let fitted = fit_linear_cost(&scenario.inner.power_model).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("c_static", fitted.c_static)?;
    d.set_item("m", fitted.m)?;
    d.set_item("r_squared", fitted.r_squared)?;
    Ok(d.into())
}

/// Energy one cell spends per broadcast period running `n_beams` beams,
/// under the scenario's power model.
#[pyfunction]
fn cell_cycle_energy(scenario: &PyScenario, n_beams: u32) -> PyResult<f64> {
    idle_cycle_energy(n_beams, &scenario.inner.power_model).map_err(value_err)
}

/// Impact summary of a plan versus the always-on baseline.
#[pyfunction]
#[pyo3(signature = (scenario, plan, threshold_db=None))]
fn impact_summary(
    py: Python<'_>,
    scenario: &PyScenario,
    plan: &PyPlan,
    threshold_db: Option<f64>,
) -> PyResult<Py<PyDict>> {
    let threshold = threshold_db.unwrap_or(plan.threshold_db);
    let table = SnrTable::compute(&scenario.inner).map_err(value_err)?;
    let report = analyze(&table, &plan.inner, threshold).map_err(runtime_err)?;
    let n = report.tp_ids.len().max(1) as f64;
    let d = PyDict::new(py);
    d.set_item("threshold_db", report.threshold_db)?;
    d.set_item("covered_traffic_points", report.tp_ids.len())?;
    d.set_item("mean_snr_baseline_db", report.snr_baseline_db.iter().sum::<f64>() / n)?;
    d.set_item("mean_snr_plan_db", report.snr_plan_db.iter().sum::<f64>() / n)?;
    d.set_item(
        "mean_diversity_baseline",
        report.diversity_baseline.iter().map(|&x| x as f64).sum::<f64>() / n,
    )?;
    d.set_item("mean_diversity_plan", report.diversity_plan.iter().map(|&x| x as f64).sum::<f64>() / n)?;
    d.set_item("search_reduction_factor", report.search_reduction_factor)?;
    d.set_item("beams_per_cell_histogram", report.beams_per_cell_histogram)?;
    Ok(d.into())
}

/// Capacity-driven pole selection; returns a dict with the chosen sites and
/// achieved coverage.
#[pyfunction]
#[pyo3(signature = (scenario, alpha=0.8, activity_factor=0.1, target_rate_mbps=50.0))]
fn deploy(
    py: Python<'_>,
    scenario: &PyScenario,
    alpha: f64,
    activity_factor: f64,
    target_rate_mbps: f64,
) -> PyResult<Py<PyDict>> {
    let table = SnrTable::compute(&scenario.inner).map_err(value_err)?;
    let params = CapacityParams { alpha, activity_factor, target_rate_mbps, ..CapacityParams::default() };
    let plan = solve_deployment(&scenario.inner, &table, &params, &SolveLimits::default())
        .map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("selected_sites", plan.selected_sites)?;
    d.set_item("covered_count", plan.covered_count)?;
    d.set_item("coverage_target", plan.coverage_target)?;
    d.set_item("achieved_fraction", plan.achieved_fraction)?;
    d.set_item("status", plan.status.to_string())?;
    d.set_item(
        "k_star_per_cell",
        plan.profiles.iter().map(|p| (p.cell_id, p.k_star)).collect::<Vec<_>>(),
    )?;
    Ok(d.into())
}

#[pymodule]
fn nesopt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(fit_pricing, m)?)?;
    m.add_function(wrap_pyfunction!(cell_cycle_energy, m)?)?;
    m.add_function(wrap_pyfunction!(impact_summary, m)?)?;
    m.add_function(wrap_pyfunction!(deploy, m)?)?;
    Ok(())
}
