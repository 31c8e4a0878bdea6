//! Browser bindings for three quick views of the simulator: the vacuum Rabi
//! map, the two-gate voltage plane and the closed-form coherence budget.

use std::f64::consts::TAU;

use wasm_bindgen::prelude::*;

use cqedsim::device::{
    coherence_budget as budget, DeviceParams, QubitParams, ResonatorParams, VoltageTuningMap,
};
use cqedsim::spectroscopy;

const MHZ: f64 = 1e6;

fn grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, String> {
    if n < 2 || !(hi > lo) {
        return Err(format!(
            "need n >= 2 and an increasing range (got {lo}..{hi}, n = {n})"
        ));
    }
    Ok((0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect())
}

/// `|A/A0|²` for the sweet-spot device, row-major with one row of `n_f`
/// probe frequencies per gate voltage.
#[wasm_bindgen]
pub fn vacuum_rabi_map(
    dv_min_mv: f64,
    dv_max_mv: f64,
    n_dv: usize,
    span_mhz: f64,
    n_f: usize,
) -> Result<Vec<f64>, String> {
    let device = DeviceParams::sweet_spot_qubit();
    let f_r = device.resonator.f_r;
    let f_p = grid(f_r - 0.5 * span_mhz * MHZ, f_r + 0.5 * span_mhz * MHZ, n_f)?;
    let dv = grid(dv_min_mv * 1e-3, dv_max_mv * 1e-3, n_dv)?;
    let map = spectroscopy::vacuum_rabi_map(&device.resonator, &device.qubits[0], &f_p, &dv)
        .map_err(|e| e.to_string())?;
    Ok(map.values.iter().map(|z| z.norm_sqr()).collect())
}

/// `|A/A0|²` at the bare resonator frequency over the `(dv_r, dv_rg)` plane of
/// the two-qubit device, row-major with one row of `n` `dv_rg` values per `dv_r`.
#[wasm_bindgen]
pub fn two_qubit_map(n: usize) -> Result<Vec<f64>, String> {
    let device = DeviceParams::two_qubit_device();
    let dv_r = grid(3.4e-3, 11.4e-3, n)?;
    let dv_rg = grid(0.227, 0.307, n)?;
    let map = spectroscopy::two_qubit_map(
        &device.resonator,
        [&device.qubits[0], &device.qubits[1]],
        &dv_r,
        &dv_rg,
    )
    .map_err(|e| e.to_string())?;
    Ok(map.values.iter().map(|z| z.norm_sqr()).collect())
}

/// Closed-form lifetimes (μs) and dispersive shift (MHz) as a JSON object.
///
/// Non-positive or non-finite `t_nr_us` / `t_phi_us` switch that channel off.
#[wasm_bindgen]
pub fn coherence_budget(
    kappa_over_2pi_mhz: f64,
    g_over_2pi_mhz: f64,
    detuning_mhz: f64,
    t_nr_us: f64,
    t_phi_us: f64,
) -> Result<String, String> {
    let f_r = 6.0e9;
    let res =
        ResonatorParams::new(f_r, TAU * kappa_over_2pi_mhz * MHZ).map_err(|e| e.to_string())?;
    let f_q = f_r + detuning_mhz * MHZ;
    let on = |t: f64| t > 0.0 && t.is_finite();
    let q = QubitParams {
        g: TAU * g_over_2pi_mhz * MHZ,
        gamma: 0.0,
        gamma_nr: if on(t_nr_us) { 1e6 / t_nr_us } else { 0.0 },
        t_phi: if on(t_phi_us) {
            t_phi_us * 1e-6
        } else {
            f64::INFINITY
        },
        tuning: VoltageTuningMap::quadratic(f_q, 0.0, 1e10).map_err(|e| e.to_string())?,
    };
    q.validate().map_err(|e| e.to_string())?;
    let b = budget(&res, &q, f_q).map_err(|e| e.to_string())?;
    Ok(format!(
        "{{\"purcell_us\":{},\"t1_us\":{},\"t2_us\":{},\"t_rabi_us\":{},\"chi_over_2pi_mhz\":{}}}",
        1e6 / b.gamma_r,
        b.t1 * 1e6,
        b.t2 * 1e6,
        b.t_rabi_predicted * 1e6,
        b.chi / TAU / MHZ
    ))
}
