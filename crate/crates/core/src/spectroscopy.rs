//! Linear-response transmission of the resonator with qubits as Lorentzian
//! susceptibilities, and the spectroscopy maps built from it.

use std::f64::consts::TAU;

use rayon::prelude::*;
use thiserror::Error;

use crate::device::{
    coherence_budget, qubit_frequency, spectroscopic_t2, two_qubit_frequencies, ChargeNoiseModel,
    DeviceError, QubitParams, ResonatorParams,
};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectroscopyError {
    #[error("grid `{0}` must be non-empty and strictly increasing")]
    Grid(&'static str),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// A qubit as seen by the resonator: bare frequency (Hz), coupling and linewidth (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitLine {
    pub f_q: f64,
    pub g: f64,
    pub gamma: f64,
}

/// Normalized transmission `A/A0` at probe frequency `f_p`.
pub fn transmission(res: &ResonatorParams, qubits: &[QubitLine], f_p: f64) -> C64 {
    let half_kappa = 0.5 * res.kappa;
    let mut denom = C64::new(half_kappa, TAU * (res.f_r - f_p));
    for q in qubits {
        denom += q.g * q.g / C64::new(0.5 * q.gamma, TAU * (q.f_q - f_p));
    }
    C64::from(half_kappa) / denom
}

/// Transmission of a bare resonator at frequency `f_res`.
pub fn lorentzian(kappa: f64, f_res: f64, f_p: f64) -> C64 {
    C64::from(0.5 * kappa) / C64::new(0.5 * kappa, TAU * (f_res - f_p))
}

pub(crate) fn check_grid(grid: &[f64], name: &'static str) -> Result<(), SpectroscopyError> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SpectroscopyError::Grid(name));
    }
    Ok(())
}

/// Complex transmission over a probe-frequency grid, optionally per voltage.
///
/// `values` is row-major: one row of `f_p.len()` entries per voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSpectrum {
    pub f_p: Vec<f64>,
    pub voltage: Option<Vec<f64>>,
    pub values: Vec<C64>,
}

impl TransmissionSpectrum {
    pub fn rows(&self) -> usize {
        self.voltage.as_ref().map_or(1, Vec::len)
    }

    pub fn row(&self, k: usize) -> &[C64] {
        let n = self.f_p.len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn magnitude2_row(&self, k: usize) -> Vec<f64> {
        self.row(k).iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Single-qubit transmission over `(dv_rg, f_p)` with the qubit on a quadratic map.
pub fn vacuum_rabi_map(
    res: &ResonatorParams,
    qubit: &QubitParams,
    f_p: &[f64],
    dv: &[f64],
) -> Result<TransmissionSpectrum, SpectroscopyError> {
    check_grid(f_p, "f_p")?;
    check_grid(dv, "dv_rg")?;
    let freqs = dv
        .iter()
        .map(|&v| qubit_frequency(&qubit.tuning, v))
        .collect::<Result<Vec<_>, _>>()?;
    let values = freqs
        .par_iter()
        .flat_map_iter(|&f_q| {
            let line = [QubitLine {
                f_q,
                g: qubit.g,
                gamma: qubit.gamma,
            }];
            f_p.iter().map(move |&f| transmission(res, &line, f))
        })
        .collect();
    Ok(TransmissionSpectrum {
        f_p: f_p.to_vec(),
        voltage: Some(dv.to_vec()),
        values,
    })
}

/// Steady-state excited population of a driven two-level system.
///
/// `omega` is the Rabi rate and `detuning` the angular drive detuning.
pub fn steady_state_excitation(omega: f64, detuning: f64, t1: f64, t2: f64) -> f64 {
    let sat = omega * omega * t1 * t2;
    0.5 * sat / (1.0 + detuning * detuning * t2 * t2 + sat)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoToneMap {
    pub f_d: Vec<f64>,
    pub voltage: Vec<f64>,
    /// Transmission phase at `f_p = f_r`, row-major per voltage.
    pub phase: Vec<f64>,
    pub p_e: Vec<f64>,
}

impl TwoToneMap {
    pub fn phase_row(&self, k: usize) -> &[f64] {
        let n = self.f_d.len();
        &self.phase[k * n..(k + 1) * n]
    }

    /// Drive frequency of the largest phase excursion per voltage row: the
    /// qubit line traced by the map.
    pub fn qubit_locus(&self) -> Vec<f64> {
        (0..self.voltage.len())
            .map(|k| {
                let row = self.phase_row(k);
                let base = row[0];
                let idx = row
                    .iter()
                    .enumerate()
                    .max_by(|a, b| (a.1 - base).abs().total_cmp(&(b.1 - base).abs()))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                self.f_d[idx]
            })
            .collect()
    }
}

/// Two-tone spectroscopy: probe fixed at the bare resonator, drive swept.
///
/// The drive saturates the qubit per the steady-state Bloch result, which pulls
/// the resonator from `f_r - χ/2π` toward `f_r` by `χ·2P_e/2π`. Photons in the
/// probe add the ac Stark shift `χ·n̄/π` to the qubit line. Dispersive
/// expressions are evaluated with `|Δ|` floored at `g`.
pub fn two_tone_map(
    res: &ResonatorParams,
    qubit: &QubitParams,
    noise: &ChargeNoiseModel,
    omega: f64,
    nbar: f64,
    f_d: &[f64],
    dv: &[f64],
) -> Result<TwoToneMap, SpectroscopyError> {
    check_grid(f_d, "f_d")?;
    check_grid(dv, "dv_rg")?;
    let rows = dv
        .par_iter()
        .map(|&v| {
            let f_q = qubit_frequency(&qubit.tuning, v)?;
            let floor = qubit.g / TAU;
            let f_eval = if (f_q - res.f_r).abs() < floor {
                res.f_r + floor.copysign(f_q - res.f_r)
            } else {
                f_q
            };
            let budget = coherence_budget(res, qubit, f_eval)?;
            let t2 = spectroscopic_t2(budget.t1, qubit, noise, v);
            let f_line = f_q + ac_stark_shift(budget.chi, nbar);
            let row: Vec<(f64, f64)> = f_d
                .iter()
                .map(|&fd| {
                    let p_e = steady_state_excitation(omega, TAU * (fd - f_line), budget.t1, t2);
                    let f_eff = res.f_r - budget.chi * (1.0 - 2.0 * p_e) / TAU;
                    (lorentzian(res.kappa, f_eff, res.f_r).arg(), p_e)
                })
                .collect();
            Ok(row)
        })
        .collect::<Result<Vec<_>, DeviceError>>()?;
    let (phase, p_e) = rows.into_iter().flatten().unzip();
    Ok(TwoToneMap {
        f_d: f_d.to_vec(),
        voltage: dv.to_vec(),
        phase,
        p_e,
    })
}

/// Qubit frequency shift (Hz) from `n̄` resonator photons: `χ n̄ / π`.
pub fn ac_stark_shift(chi: f64, nbar: f64) -> f64 {
    chi * nbar / std::f64::consts::PI
}

/// Inverse of [`ac_stark_shift`].
pub fn photon_number_from_shift(chi: f64, shift: f64) -> f64 {
    shift * std::f64::consts::PI / chi
}

/// `|A/A0|²` over the `(dv_r, dv_rg)` plane at a fixed probe frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltagePlaneMap {
    pub dv_r: Vec<f64>,
    pub dv_rg: Vec<f64>,
    pub f_p: f64,
    /// Row-major: one row of `dv_rg.len()` entries per `dv_r`.
    pub values: Vec<C64>,
}

impl VoltagePlaneMap {
    pub fn at(&self, i_r: usize, i_rg: usize) -> C64 {
        self.values[i_r * self.dv_rg.len() + i_rg]
    }
}

fn two_qubit_lines(
    qubits: [&QubitParams; 2],
    dv_r: f64,
    dv_rg: f64,
) -> Result<[QubitLine; 2], DeviceError> {
    let (f1, f2) = two_qubit_frequencies([&qubits[0].tuning, &qubits[1].tuning], dv_r, dv_rg)?;
    Ok([
        QubitLine {
            f_q: f1,
            g: qubits[0].g,
            gamma: qubits[0].gamma,
        },
        QubitLine {
            f_q: f2,
            g: qubits[1].g,
            gamma: qubits[1].gamma,
        },
    ])
}

pub fn two_qubit_map(
    res: &ResonatorParams,
    qubits: [&QubitParams; 2],
    dv_r: &[f64],
    dv_rg: &[f64],
) -> Result<VoltagePlaneMap, SpectroscopyError> {
    check_grid(dv_r, "dv_r")?;
    check_grid(dv_rg, "dv_rg")?;
    let rows = dv_r
        .par_iter()
        .map(|&vr| {
            dv_rg
                .iter()
                .map(|&vrg| {
                    Ok(transmission(
                        res,
                        &two_qubit_lines(qubits, vr, vrg)?,
                        res.f_r,
                    ))
                })
                .collect::<Result<Vec<_>, DeviceError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VoltagePlaneMap {
        dv_r: dv_r.to_vec(),
        dv_rg: dv_rg.to_vec(),
        f_p: res.f_r,
        values: rows.into_iter().flatten().collect(),
    })
}

/// Probe-frequency spectrum of the two-qubit system along `dv_rg` at fixed `dv_r`.
pub fn two_qubit_line_cut(
    res: &ResonatorParams,
    qubits: [&QubitParams; 2],
    dv_r: f64,
    f_p: &[f64],
    dv_rg: &[f64],
) -> Result<TransmissionSpectrum, SpectroscopyError> {
    check_grid(f_p, "f_p")?;
    check_grid(dv_rg, "dv_rg")?;
    let rows = dv_rg
        .par_iter()
        .map(|&vrg| {
            let lines = two_qubit_lines(qubits, dv_r, vrg)?;
            Ok(f_p
                .iter()
                .map(|&f| transmission(res, &lines, f))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, DeviceError>>()?;
    Ok(TransmissionSpectrum {
        f_p: f_p.to_vec(),
        voltage: Some(dv_rg.to_vec()),
        values: rows.into_iter().flatten().collect(),
    })
}

/// Indices of strict local maxima of `y` that reach at least `min_fraction` of the global maximum.
pub fn find_peaks(y: &[f64], min_fraction: f64) -> Vec<usize> {
    let top = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] >= min_fraction * top)
        .collect()
}

/// Parabolic refinement of a sampled maximum at index `i` on a uniform grid.
pub fn refine_peak(x: &[f64], y: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= y.len() {
        return x[i];
    }
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return x[i];
    }
    x[i] + 0.5 * (a - c) / denom * (x[i + 1] - x[i - 1]) * 0.5
}
