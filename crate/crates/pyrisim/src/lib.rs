//! Python bindings for the RIS downlink simulator: the special functions,
//! scenario configuration, episode runner and sweep driver.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use risim::simkit;

fn map_err(e: risim::Error) -> PyErr {
    match e {
        risim::Error::InvalidArgument(_) | risim::Error::Config { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

#[pyfunction]
fn bessel_j0(x: f64) -> PyResult<f64> {
    risim::mathkit::bessel_j0(x).map_err(map_err)
}

#[pyfunction]
fn rice_envelope_mean(k: f64) -> PyResult<f64> {
    risim::mathkit::rice_envelope_mean(k).map_err(map_err)
}

#[pyfunction]
fn lognormal_interference_mean(mu: f64, sigma: f64) -> PyResult<f64> {
    risim::mathkit::lognormal_interference_mean(mu, sigma).map_err(map_err)
}

#[pyfunction]
fn db_to_linear(db: f64) -> f64 {
    risim::mathkit::db_to_linear(db)
}

#[pyfunction]
fn dbm_to_watts(dbm: f64) -> f64 {
    risim::mathkit::dbm_to_watts(dbm)
}

#[pyfunction]
fn coherence_time(rho_th: f64, velocity_mps: f64, f_c_hz: f64) -> PyResult<f64> {
    risim::channel::coherence_time(rho_th, velocity_mps, f_c_hz).map_err(map_err)
}

#[pyfunction]
fn coherence_block(t_c: f64, tau_max: f64, rho_th: f64) -> PyResult<(f64, u64)> {
    risim::channel::coherence_block(t_c, tau_max, rho_th).map_err(map_err)
}

#[pyfunction]
fn correlation(f_d_hz: f64, delay_s: f64) -> PyResult<f64> {
    risim::channel::correlation(f_d_hz, delay_s).map_err(map_err)
}

#[pyfunction]
fn n_max(f_d_hz: f64, t_c: f64, t1: f64) -> PyResult<usize> {
    risim::channel::n_max(f_d_hz, t_c, t1).map_err(map_err)
}

#[pyfunction]
fn boxplot_stats(samples: Vec<u64>) -> PyResult<(f64, f64, f64, f64, f64)> {
    let b = simkit::boxplot_stats(&samples).map_err(map_err)?;
    Ok((b.min, b.q1, b.median, b.q3, b.max))
}

#[pyfunction]
fn change_frequency(skips: Vec<u64>) -> u64 {
    simkit::change_frequency(&skips)
}

fn toml_value(value: &Bound<'_, PyAny>) -> PyResult<toml::Value> {
    if let Ok(s) = value.extract::<String>() {
        Ok(toml::Value::String(s))
    } else if let Ok(i) = value.extract::<i64>() {
        Ok(toml::Value::Integer(i))
    } else if let Ok(f) = value.extract::<f64>() {
        Ok(toml::Value::Float(f))
    } else {
        Err(PyValueError::new_err(
            "configuration values must be numbers or strings",
        ))
    }
}

/// Full system configuration. Build with `Scenario.desk()` or
/// `Scenario.paper()` and adjust with `set(key, value)` using the same keys
/// as the CLI configuration file.
#[pyclass]
#[derive(Clone)]
struct Scenario {
    inner: simkit::Scenario,
}

#[pymethods]
impl Scenario {
    /// CI-sized defaults.
    #[staticmethod]
    fn desk() -> Self {
        Scenario {
            inner: simkit::Scenario::desk_default(),
        }
    }

    /// Full published parameter set.
    #[staticmethod]
    fn paper() -> Self {
        Scenario {
            inner: simkit::Scenario::paper_default(),
        }
    }

    /// Apply one configuration entry (same keys as the config file, e.g.
    /// `p_tot_dbm`, `num_ues`, `policy`).
    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        let v = toml_value(value)?;
        self.inner.set_key(key, &v).map_err(map_err)
    }

    /// Validate and return the derived timing quantities.
    fn derive<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = self.inner.derive().map_err(map_err)?;
        let out = PyDict::new_bound(py);
        out.set_item("slot_duration_s", d.coherence.slot_duration_s)?;
        out.set_item("coherence_bandwidth_hz", d.coherence.coherence_bandwidth_hz)?;
        out.set_item("coherence_block_symbols", d.coherence.coherence_block_symbols)?;
        out.set_item("pilot_overhead_symbols", d.coherence.pilot_overhead_symbols)?;
        out.set_item("doppler_hz", d.f_d_hz)?;
        out.set_item("n_max", d.n_max)?;
        out.set_item("num_slots", d.num_slots)?;
        out.set_item("psi_slots", d.psi_slots)?;
        out.set_item("rbs_per_ue", d.rbs_per_ue)?;
        Ok(out)
    }

    #[getter]
    fn num_ues(&self) -> usize {
        self.inner.num_ues
    }

    #[getter]
    fn num_ris_elements(&self) -> usize {
        self.inner.num_ris_elements
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(U={}, M={}, policy={}, seed={})",
            self.inner.num_ues,
            self.inner.num_ris_elements,
            self.inner.policy.label(),
            self.inner.seed
        )
    }
}

/// Episode outputs.
#[pyclass]
struct EpisodeMetrics {
    inner: simkit::EpisodeMetrics,
}

#[pymethods]
impl EpisodeMetrics {
    #[getter]
    fn sum_throughput_bps(&self) -> f64 {
        self.inner.sum_throughput_bps
    }

    #[getter]
    fn skip_counts(&self) -> Vec<u64> {
        self.inner.skip_counts.clone()
    }

    #[getter]
    fn change_frequency(&self) -> u64 {
        self.inner.change_frequency
    }

    /// Per-UE realized rate time series (bits/s per slot).
    fn per_ue_rates(&self) -> Vec<Vec<f64>> {
        self.inner.per_ue_rates.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "EpisodeMetrics(sum_throughput={:.4e} bps, epochs={}, changes={})",
            self.inner.sum_throughput_bps,
            self.inner.skip_counts.len(),
            self.inner.change_frequency
        )
    }
}

/// Simulate one episode. `policy` overrides the scenario's policy when
/// given (`proposed` or `coherence:<rho>`); `seed` likewise.
#[pyfunction]
#[pyo3(signature = (scenario, policy=None, seed=None))]
fn run_episode(
    scenario: &Scenario,
    policy: Option<&str>,
    seed: Option<u64>,
) -> PyResult<EpisodeMetrics> {
    let mut sc = scenario.inner.clone();
    if let Some(p) = policy {
        sc.policy = simkit::parse_policy(p, sc.policy.rho_bar_threshold).map_err(map_err)?;
    }
    if let Some(s) = seed {
        sc.seed = s;
    }
    Ok(EpisodeMetrics {
        inner: simkit::run_episode(&sc).map_err(map_err)?,
    })
}

/// Run a sweep and return one dict per (value, policy) row.
#[pyfunction]
#[pyo3(signature = (scenario, axis=None, values=None, policies=None, seeds=5, seed_base=1000))]
fn sweep<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    axis: Option<&str>,
    values: Option<Vec<f64>>,
    policies: Option<Vec<String>>,
    seeds: usize,
    seed_base: u64,
) -> PyResult<Bound<'py, PyList>> {
    let axis = match axis {
        Some(name) => Some(simkit::SweepAxis::parse(name).map_err(map_err)?),
        None => None,
    };
    let policy_list: Vec<risim::scheduler::Policy> = match policies {
        Some(names) => names
            .iter()
            .map(|n| simkit::parse_policy(n, scenario.inner.policy.rho_bar_threshold))
            .collect::<risim::Result<_>>()
            .map_err(map_err)?,
        None => vec![
            risim::scheduler::Policy::proposed(scenario.inner.policy.rho_bar_threshold),
            risim::scheduler::Policy::coherence_fixed(0.9),
            risim::scheduler::Policy::coherence_fixed(0.7),
        ],
    };
    let rows = simkit::sweep(
        &scenario.inner,
        axis,
        &values.unwrap_or_default(),
        &policy_list,
        seeds,
        seed_base,
    )
    .map_err(map_err)?;
    let out = PyList::empty_bound(py);
    for r in rows {
        let d = PyDict::new_bound(py);
        d.set_item("value", r.value)?;
        d.set_item("policy", r.policy)?;
        d.set_item("mean_throughput_bps", r.mean_throughput_bps)?;
        d.set_item("stderr", r.stderr_bps)?;
        d.set_item("skip_min", r.skip_stats.min)?;
        d.set_item("skip_q1", r.skip_stats.q1)?;
        d.set_item("skip_median", r.skip_stats.median)?;
        d.set_item("skip_q3", r.skip_stats.q3)?;
        d.set_item("skip_max", r.skip_stats.max)?;
        d.set_item("change_frequency_mean", r.change_frequency_mean)?;
        out.append(d)?;
    }
    Ok(out)
}

#[pymodule]
fn pyrisim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(bessel_j0, m)?)?;
    m.add_function(wrap_pyfunction!(rice_envelope_mean, m)?)?;
    m.add_function(wrap_pyfunction!(lognormal_interference_mean, m)?)?;
    m.add_function(wrap_pyfunction!(db_to_linear, m)?)?;
    m.add_function(wrap_pyfunction!(dbm_to_watts, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_time, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_block, m)?)?;
    m.add_function(wrap_pyfunction!(correlation, m)?)?;
    m.add_function(wrap_pyfunction!(n_max, m)?)?;
    m.add_function(wrap_pyfunction!(boxplot_stats, m)?)?;
    m.add_function(wrap_pyfunction!(change_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_class::<Scenario>()?;
    m.add_class::<EpisodeMetrics>()?;
    Ok(())
}
