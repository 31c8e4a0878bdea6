//! Device parameters, voltage tuning maps, charge noise and closed-form coherence rates.
//!
//! Conventions: frequencies `f_*` are ordinary frequencies in Hz; `kappa`, `g`,
//! `gamma` and detunings `delta` are angular (rad/s); rates `gamma_nr` are 1/s.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::stream_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("expected a {expected} tuning map")]
    WrongMapKind { expected: &'static str },
    #[error("dispersive formulas need a non-zero detuning")]
    ZeroDetuning,
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorParams {
    /// Bare resonator frequency (Hz).
    pub f_r: f64,
    /// Total energy decay rate (rad/s).
    pub kappa: f64,
}

impl ResonatorParams {
    pub fn new(f_r: f64, kappa: f64) -> Result<Self, DeviceError> {
        if !(f_r > 0.0 && kappa > 0.0) {
            return Err(DeviceError::Invalid(format!(
                "resonator needs f_r > 0 and kappa > 0 (got {f_r}, {kappa})"
            )));
        }
        Ok(Self { f_r, kappa })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VoltageTuningMap {
    /// `f = f_ss + curvature · dv²` around the sweet spot.
    Quadratic {
        f_ss: f64,
        v_ss: f64,
        /// Hz/V².
        curvature: f64,
    },
    /// `f = intercept + slope_r · dv_r + slope_rg · dv_rg`.
    Linear2d {
        intercept: f64,
        slope_r: f64,
        slope_rg: f64,
    },
}

impl VoltageTuningMap {
    pub fn quadratic(f_ss: f64, v_ss: f64, curvature: f64) -> Result<Self, DeviceError> {
        if !(curvature > 0.0) {
            return Err(DeviceError::Invalid(format!(
                "quadratic map needs curvature > 0 (got {curvature})"
            )));
        }
        Ok(Self::Quadratic {
            f_ss,
            v_ss,
            curvature,
        })
    }

    /// Linear map whose resonance with `f_r` passes through `(dv_r, dv_rg)`.
    pub fn linear_through(f_r: f64, crossing: (f64, f64), slope_r: f64, slope_rg: f64) -> Self {
        Self::Linear2d {
            intercept: f_r - slope_r * crossing.0 - slope_rg * crossing.1,
            slope_r,
            slope_rg,
        }
    }

    /// Frequency change when a fluctuation `dv_noise` is added to the bias `dv`.
    /// Linear maps respond through the resonator-guard slope.
    pub fn frequency_shift(&self, dv: f64, dv_noise: f64) -> f64 {
        match *self {
            Self::Quadratic { curvature, .. } => curvature * dv_noise * (2.0 * dv + dv_noise),
            Self::Linear2d { slope_rg, .. } => slope_rg * dv_noise,
        }
    }

    /// `df/dv` at bias `dv` (Hz/V).
    pub fn slope(&self, dv: f64) -> f64 {
        match *self {
            Self::Quadratic { curvature, .. } => 2.0 * curvature * dv,
            Self::Linear2d { slope_rg, .. } => slope_rg,
        }
    }

    /// Frequency at bias `dv` irrespective of the map kind.
    pub fn frequency_at(&self, dv: f64) -> f64 {
        match *self {
            Self::Quadratic {
                f_ss, curvature, ..
            } => f_ss + curvature * dv * dv,
            Self::Linear2d {
                intercept,
                slope_rg,
                ..
            } => intercept + slope_rg * dv,
        }
    }

    /// Mean frequency offset induced by zero-mean noise of variance `var` (V²).
    pub fn mean_noise_shift(&self, var: f64) -> f64 {
        match *self {
            Self::Quadratic { curvature, .. } => curvature * var,
            Self::Linear2d { .. } => 0.0,
        }
    }
}

pub fn qubit_frequency(map: &VoltageTuningMap, dv: f64) -> Result<f64, DeviceError> {
    match *map {
        VoltageTuningMap::Quadratic {
            f_ss, curvature, ..
        } => Ok(f_ss + curvature * dv * dv),
        _ => Err(DeviceError::WrongMapKind {
            expected: "quadratic",
        }),
    }
}

pub fn two_qubit_frequencies(
    maps: [&VoltageTuningMap; 2],
    dv_r: f64,
    dv_rg: f64,
) -> Result<(f64, f64), DeviceError> {
    let eval = |m: &VoltageTuningMap| match *m {
        VoltageTuningMap::Linear2d {
            intercept,
            slope_r,
            slope_rg,
        } => Ok(intercept + slope_r * dv_r + slope_rg * dv_rg),
        _ => Err(DeviceError::WrongMapKind {
            expected: "linear2d",
        }),
    };
    Ok((eval(maps[0])?, eval(maps[1])?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    /// Coupling strength (rad/s).
    pub g: f64,
    /// Qubit linewidth used in spectroscopy (rad/s).
    pub gamma: f64,
    /// Nonradiative decay rate (1/s).
    pub gamma_nr: f64,
    /// White-noise pure dephasing time (s); `f64::INFINITY` disables it.
    pub t_phi: f64,
    pub tuning: VoltageTuningMap,
}

impl QubitParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.g > 0.0) {
            return Err(DeviceError::Invalid(format!(
                "g must be > 0 (got {})",
                self.g
            )));
        }
        if self.gamma < 0.0 || self.gamma_nr < 0.0 || !(self.t_phi > 0.0) {
            return Err(DeviceError::Invalid(
                "rates must be >= 0 and t_phi > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn t_phi_rate(&self) -> f64 {
        if self.t_phi.is_finite() {
            1.0 / self.t_phi
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuComponent {
    /// Stationary standard deviation (V).
    pub amplitude: f64,
    /// Correlation time (s).
    pub tau: f64,
}

/// Quasi-static Gaussian offset plus a ladder of Ornstein-Uhlenbeck processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeNoiseModel {
    pub sigma_quasistatic: f64,
    pub ou_components: Vec<OuComponent>,
    pub seed: u64,
}

impl ChargeNoiseModel {
    pub fn silent() -> Self {
        Self {
            sigma_quasistatic: 0.0,
            ou_components: Vec::new(),
            seed: 0,
        }
    }

    /// OU ladder with log-spaced corner frequencies `f_c = 1/(2π τ)` from `f_lo` to `f_hi`
    /// and equal stationary amplitudes.
    pub fn log_ladder(
        sigma_quasistatic: f64,
        amplitude: f64,
        f_lo: f64,
        f_hi: f64,
        count: usize,
        seed: u64,
    ) -> Self {
        let ou_components = (0..count)
            .map(|k| {
                let frac = if count > 1 {
                    k as f64 / (count - 1) as f64
                } else {
                    0.0
                };
                let f_c = f_lo * (f_hi / f_lo).powf(frac);
                OuComponent {
                    amplitude,
                    tau: 1.0 / (TAU * f_c),
                }
            })
            .collect();
        Self {
            sigma_quasistatic,
            ou_components,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let bad = self.sigma_quasistatic < 0.0
            || self
                .ou_components
                .iter()
                .any(|c| c.amplitude < 0.0 || !(c.tau > 0.0));
        if bad {
            return Err(DeviceError::Invalid(
                "noise amplitudes must be >= 0 and correlation times > 0".into(),
            ));
        }
        Ok(())
    }

    /// Total stationary variance (V²).
    pub fn variance(&self) -> f64 {
        self.sigma_quasistatic.powi(2)
            + self
                .ou_components
                .iter()
                .map(|c| c.amplitude * c.amplitude)
                .sum::<f64>()
    }

    pub fn is_silent(&self) -> bool {
        self.variance() == 0.0
    }

    /// Shortest correlation time, or `None` without OU terms.
    pub fn shortest_tau(&self) -> Option<f64> {
        self.ou_components
            .iter()
            .filter(|c| c.amplitude > 0.0)
            .map(|c| c.tau)
            .min_by(f64::total_cmp)
    }
}

/// Samples `floor(duration/dt) + 1` voltage offsets at `t = k·dt`.
///
/// The quasi-static part is fixed per trajectory; each OU term starts from its
/// stationary distribution and is advanced with the exact discrete update.
pub fn sample_noise_trajectory(
    model: &ChargeNoiseModel,
    duration: f64,
    dt: f64,
    stream: u64,
) -> Vec<f64> {
    assert!(
        duration > 0.0 && dt > 0.0,
        "duration and dt must be positive"
    );
    let n = (duration / dt).floor() as usize + 1;
    let mut rng = stream_rng(model.seed, stream);
    let offset = model.sigma_quasistatic * rng.sample::<f64, _>(StandardNormal);
    let mut out = vec![offset; n];
    for comp in &model.ou_components {
        if comp.amplitude == 0.0 {
            continue;
        }
        let decay = (-dt / comp.tau).exp();
        let kick = comp.amplitude * (-(-2.0 * dt / comp.tau).exp_m1()).sqrt();
        let mut x = comp.amplitude * rng.sample::<f64, _>(StandardNormal);
        for v in out.iter_mut() {
            *v += x;
            x = x * decay + kick * rng.sample::<f64, _>(StandardNormal);
        }
    }
    out
}

/// Qubit frequency deviation (Hz) on a uniform time grid, relative to the
/// frame the experiment is calibrated against.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyNoise {
    pub dt: f64,
    pub offsets: Vec<f64>,
    cumulative: Vec<f64>,
}

impl FrequencyNoise {
    pub fn new(dt: f64, offsets: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(offsets.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in offsets.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dt;
            cumulative.push(acc);
        }
        if offsets.is_empty() {
            cumulative.clear();
        }
        Self {
            dt,
            offsets,
            cumulative,
        }
    }

    pub fn constant(offset: f64, duration: f64) -> Self {
        Self::new(duration.max(1e-12), vec![offset, offset])
    }

    /// Maps a voltage trajectory through `map` at bias `dv`, subtracting the
    /// ensemble-mean shift so a calibrated frame sees zero average detuning.
    pub fn from_voltage(
        map: &VoltageTuningMap,
        dv: f64,
        voltage: &[f64],
        dt: f64,
        variance: f64,
    ) -> Self {
        let mean = map.mean_noise_shift(variance);
        let offsets = voltage
            .iter()
            .map(|&x| map.frequency_shift(dv, x) - mean)
            .collect();
        Self::new(dt, offsets)
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.offsets.len().saturating_sub(1)) as f64
    }

    /// Linear interpolation, held constant past the ends.
    pub fn at(&self, t: f64) -> f64 {
        interp(&self.offsets, self.dt, t)
    }

    /// `∫_0^t δf dt'` (Hz·s).
    pub fn integral_to(&self, t: f64) -> f64 {
        let end = self.duration();
        if t <= end {
            interp(&self.cumulative, self.dt, t)
        } else {
            self.cumulative.last().copied().unwrap_or(0.0)
                + (t - end) * self.offsets.last().copied().unwrap_or(0.0)
        }
    }

    /// Accumulated phase `2π ∫_a^b δf dt` (rad).
    pub fn phase(&self, a: f64, b: f64) -> f64 {
        TAU * (self.integral_to(b) - self.integral_to(a))
    }
}

fn interp(values: &[f64], dt: f64, t: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let s = (t / dt).max(0.0);
            let k = s.floor() as usize;
            if k >= n - 1 {
                return values[n - 1];
            }
            let w = s - k as f64;
            values[k] * (1.0 - w) + values[k + 1] * w
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceBudget {
    /// Detuning `2π(f_q - f_r)` (rad/s).
    pub delta: f64,
    /// Purcell rate `κ g² / Δ²` (1/s).
    pub gamma_r: f64,
    pub gamma_nr: f64,
    pub gamma_total: f64,
    pub t1: f64,
    pub t_phi: f64,
    pub t2: f64,
    /// Driven-decay time from `1/T_Rabi = 3/(4 T1) + 1/(2 Tφ)`.
    pub t_rabi_predicted: f64,
    /// Dispersive shift `g²/Δ` (rad/s).
    pub chi: f64,
}

pub fn coherence_budget(
    res: &ResonatorParams,
    q: &QubitParams,
    f_q: f64,
) -> Result<CoherenceBudget, DeviceError> {
    let delta = TAU * (f_q - res.f_r);
    if delta == 0.0 {
        return Err(DeviceError::ZeroDetuning);
    }
    let g2 = q.g * q.g;
    let gamma_r = res.kappa * g2 / (delta * delta);
    let gamma_total = gamma_r + q.gamma_nr;
    let t1 = 1.0 / gamma_total;
    let phi_rate = q.t_phi_rate();
    Ok(CoherenceBudget {
        delta,
        gamma_r,
        gamma_nr: q.gamma_nr,
        gamma_total,
        t1,
        t_phi: q.t_phi,
        t2: 1.0 / (0.5 * gamma_total + phi_rate),
        t_rabi_predicted: 1.0 / (0.75 * gamma_total + 0.5 * phi_rate),
        chi: g2 / delta,
    })
}

/// Quasi-static estimate of the dephasing time seen in spectroscopy at bias `dv`.
///
/// Uses the frequency-noise standard deviation of the full noise variance
/// through the tuning map, converted to a Lorentzian-equivalent rate `π√2·σ_f`.
pub fn spectroscopic_t2(t1: f64, q: &QubitParams, noise: &ChargeNoiseModel, dv: f64) -> f64 {
    let var = noise.variance();
    let sigma_f = match q.tuning {
        VoltageTuningMap::Quadratic { curvature, .. } => {
            let slope = 2.0 * curvature * dv;
            (slope * slope * var + 2.0 * curvature * curvature * var * var).sqrt()
        }
        VoltageTuningMap::Linear2d { slope_rg, .. } => slope_rg.abs() * var.sqrt(),
    };
    1.0 / (0.5 / t1 + q.t_phi_rate() + PI * std::f64::consts::SQRT_2 * sigma_f)
}

/// A named, self-consistent parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub resonator: ResonatorParams,
    pub qubits: Vec<QubitParams>,
    pub noise: ChargeNoiseModel,
    /// Bias offsets from the sweet spot (V) at which time-domain experiments run.
    pub bias: Vec<f64>,
}

pub const MHZ: f64 = 1e6;
pub const US: f64 = 1e-6;

impl DeviceParams {
    /// Single qubit at its charge sweet spot, 34.7 MHz below the resonator.
    ///
    /// Curvature places the resonance crossings at ±30 mV. Noise amplitudes
    /// are calibrated so that the Ramsey time at the sweet spot is close to
    /// 43 μs while the Hahn echo stays near 2·T1.
    pub fn sweet_spot_qubit() -> Self {
        let f_r = 6.4262e9;
        let f_ss = 6.3915e9;
        let curvature = (f_r - f_ss) / (30e-3f64).powi(2);
        Self {
            resonator: ResonatorParams {
                f_r,
                kappa: TAU * 0.46 * MHZ,
            },
            qubits: vec![QubitParams {
                g: TAU * 2.3 * MHZ,
                gamma: TAU * 0.36 * MHZ,
                gamma_nr: 1.0 / (125.0 * US),
                t_phi: f64::INFINITY,
                tuning: VoltageTuningMap::Quadratic {
                    f_ss,
                    v_ss: -0.270,
                    curvature,
                },
            }],
            noise: sweet_spot_noise(),
            bias: vec![0.0],
        }
    }

    /// Second device at a sweet spot 288 MHz below the resonator (T1 ≈ 82.8 μs),
    /// used for decoupling, readout and benchmarking.
    pub fn long_t1_qubit() -> Self {
        let f_r = 6.4262e9;
        let f_ss = f_r - 288.0 * MHZ;
        let curvature = 288.0 * MHZ / (60e-3f64).powi(2);
        let g = TAU * 2.3 * MHZ;
        let kappa = TAU * 0.46 * MHZ;
        let delta = TAU * 288.0 * MHZ;
        let gamma_r = kappa * g * g / (delta * delta);
        Self {
            resonator: ResonatorParams { f_r, kappa },
            qubits: vec![QubitParams {
                g,
                gamma: TAU * 0.36 * MHZ,
                gamma_nr: 1.0 / (82.8 * US) - gamma_r,
                t_phi: f64::INFINITY,
                tuning: VoltageTuningMap::Quadratic {
                    f_ss,
                    v_ss: -0.270,
                    curvature,
                },
            }],
            noise: long_t1_noise(),
            bias: vec![0.0],
        }
    }

    /// Two qubits on linear gate maps sharing the resonator, both resonant at
    /// `(dv_r, dv_rg) = (7.4 mV, 0.267 V)`.
    pub fn two_qubit_device() -> Self {
        let f_r = 6.4262e9;
        let crossing = (7.4e-3, 0.267);
        let q1 = QubitParams {
            g: TAU * 3.6 * MHZ,
            gamma: TAU * 1.5 * MHZ,
            gamma_nr: 0.0,
            t_phi: f64::INFINITY,
            tuning: VoltageTuningMap::linear_through(f_r, crossing, 8e9, 3e8),
        };
        let q2 = QubitParams {
            g: TAU * 1.8 * MHZ,
            gamma: TAU * 1.6 * MHZ,
            tuning: VoltageTuningMap::linear_through(f_r, crossing, -4e9, 6e8),
            ..q1
        };
        Self {
            resonator: ResonatorParams {
                f_r,
                kappa: TAU * 0.46 * MHZ,
            },
            qubits: vec![q1, q2],
            noise: ChargeNoiseModel::silent(),
            bias: vec![crossing.1; 2],
        }
    }

    pub fn qubit_frequency(&self, j: usize) -> f64 {
        self.qubits[j].tuning.frequency_at(self.bias[j])
    }

    pub fn budget(&self, j: usize) -> Result<CoherenceBudget, DeviceError> {
        coherence_budget(&self.resonator, &self.qubits[j], self.qubit_frequency(j))
    }
}

fn sweet_spot_noise() -> ChargeNoiseModel {
    calibration::SWEET_SPOT.model()
}

fn long_t1_noise() -> ChargeNoiseModel {
    calibration::LONG_T1.model()
}

/// Default noise parameters, calibrated against simulated Ramsey/echo/CPMG traces.
pub mod calibration {
    use super::{ChargeNoiseModel, OuComponent};

    pub struct NoisePreset {
        pub sigma_quasistatic: f64,
        /// `(amplitude V, corner frequency Hz)`
        pub ladder: &'static [(f64, f64)],
        pub seed: u64,
    }

    impl NoisePreset {
        pub fn model(&self) -> ChargeNoiseModel {
            ChargeNoiseModel {
                sigma_quasistatic: self.sigma_quasistatic,
                ou_components: self
                    .ladder
                    .iter()
                    .map(|&(amplitude, f_c)| OuComponent {
                        amplitude,
                        tau: 1.0 / (std::f64::consts::TAU * f_c),
                    })
                    .collect(),
                seed: self.seed,
            }
        }
    }

    /// Ramsey T2* ≈ 43 μs and Hahn echo ≈ 1.85·T1 at the sweet spot of
    /// [`DeviceParams::sweet_spot_qubit`](super::DeviceParams::sweet_spot_qubit).
    pub const SWEET_SPOT: NoisePreset = NoisePreset {
        sigma_quasistatic: 3.25e-4,
        ladder: &[
            (7e-5, 1e2),
            (7e-5, 1e3),
            (7e-5, 1e4),
            (7e-5, 1e5),
            (7e-5, 1e6),
        ],
        seed: 20_221,
    };

    /// Ramsey T2* ≈ 6 μs, echo ≈ 26 μs and CPMG times rising about fivefold
    /// from one to 256 pulses on [`DeviceParams::long_t1_qubit`](super::DeviceParams::long_t1_qubit).
    pub const LONG_T1: NoisePreset = NoisePreset {
        sigma_quasistatic: 4.6e-4,
        ladder: &[
            (2.5e-4, 1e2),
            (2.5e-4, 1e3),
            (2.5e-4, 1e4),
            (2.5e-4, 1e5),
            (2.5e-4, 1e6),
        ],
        seed: 20_222,
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweet_spot_qubit_params() -> QubitParams {
        DeviceParams::sweet_spot_qubit().qubits[0]
    }

    #[test]
    fn sweet_spot_frequency() {
        let map = sweet_spot_qubit_params().tuning;
        assert_eq!(qubit_frequency(&map, 0.0).unwrap(), 6.3915e9);
        let a = qubit_frequency(&map, 1.3e-3).unwrap();
        let b = qubit_frequency(&map, -1.3e-3).unwrap();
        assert_eq!(a, b);
        let map = VoltageTuningMap::quadratic(6.3915e9, 0.0, 1e6 / 1e-6).unwrap();
        let f = qubit_frequency(&map, 2e-3).unwrap();
        assert!((f - (6.3915e9 + 4e6)).abs() < 1e-3);
    }

    #[test]
    fn wrong_map_kind_rejected() {
        let lin = VoltageTuningMap::linear_through(6.4e9, (0.0, 0.0), 1.0, 1.0);
        assert!(qubit_frequency(&lin, 0.0).is_err());
        let quad = sweet_spot_qubit_params().tuning;
        assert!(two_qubit_frequencies([&quad, &lin], 0.0, 0.0).is_err());
        assert!(VoltageTuningMap::quadratic(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn sweet_spot_is_first_order_insensitive() {
        let map = sweet_spot_qubit_params().tuning;
        let c = match map {
            VoltageTuningMap::Quadratic { curvature, .. } => curvature,
            _ => unreachable!(),
        };
        let h = 1e-6;
        let slope =
            (qubit_frequency(&map, h).unwrap() - qubit_frequency(&map, -h).unwrap()) / (2.0 * h);
        assert!(slope.abs() < c * 1e-6);
    }

    #[test]
    fn linear_maps_cross_at_configured_point() {
        let f_r = 6.4262e9;
        let crossing = (7.4e-3, 0.267);
        let m1 = VoltageTuningMap::linear_through(f_r, crossing, 3e9, 4e7);
        let m2 = VoltageTuningMap::linear_through(f_r, crossing, -1.5e9, 9e7);
        let (f1, f2) = two_qubit_frequencies([&m1, &m2], crossing.0, crossing.1).unwrap();
        assert!((f1 - f_r).abs() < 1e-3 && (f2 - f_r).abs() < 1e-3);
        let (i1, i2) = two_qubit_frequencies([&m1, &m2], 0.0, 0.0).unwrap();
        match (m1, m2) {
            (
                VoltageTuningMap::Linear2d { intercept: a, .. },
                VoltageTuningMap::Linear2d { intercept: b, .. },
            ) => {
                assert_eq!((i1, i2), (a, b));
            }
            _ => unreachable!(),
        }
        // Resonance locus of qubit 1 is a straight line: three collinear points.
        let line = |dv_rg: f64| crossing.0 - 4e7 * (dv_rg - crossing.1) / 3e9;
        for dv_rg in [0.1, 0.2, 0.3] {
            let (f1, _) = two_qubit_frequencies([&m1, &m2], line(dv_rg), dv_rg).unwrap();
            assert!((f1 - f_r).abs() < 1e-3);
        }
    }

    #[test]
    fn budget_reproduces_purcell_and_chi() {
        let dev = DeviceParams::sweet_spot_qubit();
        let b = dev.budget(0).unwrap();
        assert!((b.delta / TAU / MHZ + 34.7).abs() < 1e-6);
        let purcell_us = 1.0 / b.gamma_r / US;
        assert!((purcell_us - 78.7).abs() / 78.7 < 5e-3, "{purcell_us}");
        let chi_mhz = b.chi / TAU / MHZ;
        assert!((chi_mhz + 0.152).abs() / 0.152 < 5e-3, "{chi_mhz}");
        let t1_us = b.t1 / US;
        assert!((t1_us - 48.3).abs() < 0.05, "{t1_us}");
        assert_eq!(b.gamma_total, b.gamma_r + b.gamma_nr);
    }

    #[test]
    fn budget_identities_hold() {
        let res = ResonatorParams::new(6.4e9, TAU * 0.5e6).unwrap();
        for (t_phi, f_q) in [(30e-6, 6.3e9), (1e-3, 6.45e9), (2e-6, 6.1e9)] {
            let q = QubitParams {
                t_phi,
                ..sweet_spot_qubit_params()
            };
            let b = coherence_budget(&res, &q, f_q).unwrap();
            let lhs = 1.0 / b.t2;
            let rhs = 1.0 / (2.0 * b.t1) + 1.0 / b.t_phi;
            assert!((lhs - rhs).abs() / rhs < 1e-12);
            let lhs = 1.0 / b.t_rabi_predicted;
            let rhs = 3.0 / (4.0 * b.t1) + 1.0 / (2.0 * b.t_phi);
            assert!((lhs - rhs).abs() / rhs < 1e-12);
        }
        assert_eq!(
            coherence_budget(&res, &sweet_spot_qubit_params(), 6.4e9),
            Err(DeviceError::ZeroDetuning)
        );
    }

    #[test]
    fn long_t1_preset_has_expected_t1() {
        let b = DeviceParams::long_t1_qubit().budget(0).unwrap();
        assert!((b.t1 / US - 82.8).abs() < 1e-9);
        assert!((b.delta / TAU / MHZ + 288.0).abs() < 1e-6);
    }

    #[test]
    fn silent_noise_is_zero() {
        let traj = sample_noise_trajectory(&ChargeNoiseModel::silent(), 1e-5, 1e-8, 3);
        assert_eq!(traj.len(), 1001);
        assert!(traj.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_is_deterministic_per_stream() {
        let model = ChargeNoiseModel::log_ladder(1e-6, 1e-6, 1e2, 1e6, 5, 11);
        let a = sample_noise_trajectory(&model, 1e-5, 1e-8, 4);
        let b = sample_noise_trajectory(&model, 1e-5, 1e-8, 4);
        let c = sample_noise_trajectory(&model, 1e-5, 1e-8, 5);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn frequency_noise_integral_of_constant() {
        let fn_ = FrequencyNoise::new(1e-8, vec![1e3; 101]);
        assert!((fn_.phase(0.0, 1e-6) - TAU * 1e-3).abs() < 1e-15);
        assert!((fn_.phase(2e-7, 5e-7) - TAU * 3e-4).abs() < 1e-15);
        // Past the end, the last value is held.
        assert!((fn_.phase(0.0, 2e-6) - TAU * 2e-3).abs() < 1e-14);
    }

    #[test]
    fn spectroscopic_t2_shrinks_off_spot() {
        let dev = DeviceParams::sweet_spot_qubit();
        let t1 = dev.budget(0).unwrap().t1;
        let on = spectroscopic_t2(t1, &dev.qubits[0], &dev.noise, 0.0);
        let off = spectroscopic_t2(t1, &dev.qubits[0], &dev.noise, 30e-3);
        assert!(off < on / 10.0);
        assert!(on <= 2.0 * t1);
    }
}
