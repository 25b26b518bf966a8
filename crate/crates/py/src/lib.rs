use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use squid_grover::analysis::{self, Figure, FigureGrid};
use squid_grover::device::{paper_device, DeviceParams, NoiseConfig};
use squid_grover::error::Error;
use squid_grover::gates::{extract_logical_matrix, phase_gate_schedule, three_qubit_phase_gate};
use squid_grover::grover::{self, GroverConfig};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_target(target: &str) -> PyResult<[usize; 3]> {
    let bits: Vec<usize> = target
        .chars()
        .map(|c| c.to_digit(2).map(|d| d as usize))
        .collect::<Option<_>>()
        .ok_or_else(|| PyValueError::new_err(format!("target must be three bits, got {target:?}")))?;
    <[usize; 3]>::try_from(bits).map_err(|_| PyValueError::new_err(format!("target must be three bits, got {target:?}")))
}

fn device(gamma3_over_g: f64, kappa_over_g: f64) -> (DeviceParams, NoiseConfig) {
    let mut p = paper_device();
    p.gamma3 = gamma3_over_g * p.g[0];
    p.kappa = kappa_over_g * p.g[0];
    let noise = NoiseConfig { enable_gamma3: gamma3_over_g != 0.0, enable_kappa: kappa_over_g != 0.0, ..NoiseConfig::ideal() };
    (p, noise)
}

/// 8×8 logical action of the pulse-level phase gate (rows of complex numbers).
#[pyfunction]
fn phase_gate_matrix() -> PyResult<Vec<Vec<Complex64>>> {
    let p = paper_device();
    let ideal = NoiseConfig::ideal();
    let m = extract_logical_matrix(|s| three_qubit_phase_gate(s, &ideal, &p), &p.level_map).map_err(py_err)?;
    Ok((0..8).map(|i| (0..8).map(|j| m.matrix()[(i, j)]).collect()).collect())
}

/// Per-iteration records of one search on the reference device.
#[pyfunction]
#[pyo3(signature = (target = "111", iterations = 10, gamma3_over_g = 0.0, kappa_over_g = 0.0))]
fn grover_run(target: &str, iterations: usize, gamma3_over_g: f64, kappa_over_g: f64) -> PyResult<Vec<BTreeMap<&'static str, f64>>> {
    let (params, noise) = device(gamma3_over_g, kappa_over_g);
    let run = grover::grover_run(&GroverConfig { target: parse_target(target)?, iterations, noise, params }).map_err(py_err)?;
    Ok(run
        .records
        .iter()
        .map(|r| {
            BTreeMap::from([
                ("iteration", r.iteration as f64),
                ("target_probability", r.target_probability),
                ("target_probability_conditional", r.conditional_target_probability),
                ("fidelity_joint", r.joint_fidelity),
                ("fidelity_conditional", r.conditional_fidelity),
                ("norm_sqr", r.norm_sqr),
                ("leakage", r.leakage),
            ])
        })
        .collect())
}

#[pyfunction]
fn ideal_success_probability(k: usize) -> f64 {
    grover::ideal_success_probability(k)
}

/// (analytic, simulated) average phase-gate fidelity under level decay.
#[pyfunction]
fn favg_level_decay(gamma3_over_g: f64) -> PyResult<(f64, f64)> {
    let p = paper_device();
    let [a, s] = analysis::level_decay_reports(gamma3_over_g * p.g[0], &p).map_err(py_err)?;
    Ok((a.f_ave, s.f_ave))
}

/// Closed-form (F_ave, P) under cavity decay over one exchange time.
#[pyfunction]
fn favg_cavity_decay(kappa_over_g: f64) -> PyResult<(f64, f64)> {
    analysis::favg_cavity_decay(kappa_over_g, std::f64::consts::FRAC_PI_2).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (omega12_over_g3, delta_c_over_g3 = 10.0))]
fn favg_offresonant(omega12_over_g3: f64, delta_c_over_g3: f64) -> PyResult<f64> {
    analysis::favg_offresonant(omega12_over_g3, 1.0, delta_c_over_g3).map_err(py_err)
}

/// Default-grid data of a figure as (header, rows).
#[pyfunction]
fn figure(id: &str) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let fig: Figure = id.parse().map_err(py_err)?;
    let table = analysis::figure_data(fig, &FigureGrid::default_for(fig), &paper_device()).map_err(py_err)?;
    Ok((table.header, table.rows))
}

/// Gate and algorithm durations in seconds.
#[pyfunction]
#[pyo3(signature = (iterations = 2))]
fn timing(iterations: usize) -> PyResult<BTreeMap<String, f64>> {
    let t = analysis::timing_budget(&paper_device()).map_err(py_err)?;
    let mut out: BTreeMap<String, f64> = t.terms.iter().cloned().collect();
    out.insert("tau_gate".into(), t.tau_gate);
    out.insert("tau_single".into(), t.tau_single);
    out.insert("tau_algorithm".into(), t.tau_algorithm(iterations));
    Ok(out)
}

#[pyfunction]
fn schedule_dump() -> PyResult<String> {
    let p = paper_device();
    Ok(phase_gate_schedule(&p).map_err(py_err)?.dump(&p))
}

#[pymodule]
fn squid_grover_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(phase_gate_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(grover_run, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(favg_level_decay, m)?)?;
    m.add_function(wrap_pyfunction!(favg_cavity_decay, m)?)?;
    m.add_function(wrap_pyfunction!(favg_offresonant, m)?)?;
    m.add_function(wrap_pyfunction!(figure, m)?)?;
    m.add_function(wrap_pyfunction!(timing, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_dump, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
