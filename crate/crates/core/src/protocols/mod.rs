//! Experiment orchestration: coherence sweeps, single-shot readout and
//! randomized benchmarking.
//!
//! Every ensemble member draws from its own rng stream, and reductions run in
//! index order, so results do not depend on the number of worker threads.

pub mod clifford;
pub mod rb;
pub mod readout;

use std::f64::consts::{FRAC_PI_2, PI};

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use thiserror::Error;

use crate::device::{
    sample_noise_trajectory, ChargeNoiseModel, DeviceError, DeviceParams, FrequencyNoise,
};
use crate::dynamics::{
    self, calibrate_amplitude, Bloch, DynamicsError, EvolveOptions, PulseEnvelope, PulseSequence,
    ReducedQubit,
};
use crate::estimation::{fit_decay, fit_decaying_sinusoid, DecayEnvelope, FitError, FitResult};
use crate::quantum::{build_space, DensityMatrix};
use crate::rng::{stream_id, stream_rng};

pub use clifford::{clifford_sequence, CliffordGate, CliffordGroup, Rotation};
pub use rb::{run_rb, RbConfig, RbErrorModel, RbResult};
pub use readout::{
    calibrate_snr, readout_fidelity, readout_pair, simulate_readout, FidelityConvention, IqRecord,
    PrepState, ReadoutFidelity,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("degenerate data: {0}")]
    Degenerate(String),
}

pub(crate) const TAG_COHERENCE: u16 = 1;
pub(crate) const TAG_SHOTS: u16 = 2;
pub(crate) const TAG_RB: u16 = 3;
pub(crate) const TAG_RB_NOISE: u16 = 4;
pub(crate) const TAG_READOUT: u16 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherenceKind {
    Rabi,
    T1,
    Ramsey,
    Echo,
    Cpmg { n_pi: usize },
}

impl CoherenceKind {
    pub fn name(&self) -> &'static str {
        match self {
            CoherenceKind::Rabi => "rabi",
            CoherenceKind::T1 => "t1",
            CoherenceKind::Ramsey => "ramsey",
            CoherenceKind::Echo => "echo",
            CoherenceKind::Cpmg { .. } => "cpmg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Qubit-only Bloch model with ideal instantaneous pulses.
    Reduced,
    /// Qubit–resonator master equation with calibrated Gaussian pulses.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceConfig {
    pub kind: CoherenceKind,
    /// Drive duration (Rabi) or delay (others), s.
    pub times: Vec<f64>,
    /// Rabi drive rate (rad/s).
    pub rabi_amplitude: f64,
    /// Noise realizations averaged per point.
    pub realizations: usize,
    /// Projective shots per point; 0 reports the exact ensemble mean.
    pub shots: usize,
    pub model: ModelKind,
    pub pulse_sigma: f64,
    pub truncation: f64,
    /// Noise sampling step; defaults to a tenth of the shortest correlation time.
    pub noise_dt: Option<f64>,
    /// Seed for shot sampling.
    pub seed: u64,
}

impl CoherenceConfig {
    pub fn new(kind: CoherenceKind, times: Vec<f64>) -> Self {
        Self {
            kind,
            times,
            rabi_amplitude: 0.0,
            realizations: 400,
            shots: 0,
            model: ModelKind::Reduced,
            pulse_sigma: 8e-9,
            truncation: 2.5,
            noise_dt: None,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        if self.times.is_empty() {
            return Err(ProtocolError::Schedule("no sweep points".into()));
        }
        if self.times[0] < 0.0 || self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ProtocolError::Schedule(
                "sweep points must be >= 0 and strictly increasing".into(),
            ));
        }
        if let CoherenceKind::Cpmg { n_pi: 0 } = self.kind {
            return Err(ProtocolError::Schedule("cpmg needs n_pi >= 1".into()));
        }
        if self.kind == CoherenceKind::Rabi && !(self.rabi_amplitude > 0.0) {
            return Err(ProtocolError::Schedule(
                "rabi needs a drive amplitude > 0".into(),
            ));
        }
        if self.realizations == 0 {
            return Err(ProtocolError::Schedule(
                "need at least one realization".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTrace {
    pub x: Vec<f64>,
    pub p_e: Vec<f64>,
    /// Standard error of each point.
    pub std: Vec<f64>,
    pub shots: usize,
}

/// Noise sampling step for a sweep of length `duration`.
pub fn noise_step(noise: &ChargeNoiseModel, duration: f64, requested: Option<f64>) -> f64 {
    if let Some(dt) = requested {
        return dt;
    }
    match noise.shortest_tau() {
        Some(tau) => (0.1 * tau).min(duration / 8.0),
        None => duration / 8.0,
    }
}

/// One frequency-noise realization for qubit `j`, indexed by `r`.
pub fn frequency_realization(
    device: &DeviceParams,
    j: usize,
    noise: &ChargeNoiseModel,
    duration: f64,
    dt: f64,
    stream: u64,
) -> FrequencyNoise {
    if noise.is_silent() {
        return FrequencyNoise::constant(0.0, duration);
    }
    let v = sample_noise_trajectory(noise, duration, dt, stream);
    FrequencyNoise::from_voltage(
        &device.qubits[j].tuning,
        device.bias[j],
        &v,
        dt,
        noise.variance(),
    )
}

/// π pulses of a CPMG block of length `tau`, at `τ(2k − 1)/(2N)`.
pub fn cpmg_pulse_times(tau: f64, n_pi: usize) -> Vec<f64> {
    (1..=n_pi)
        .map(|k| tau * (2 * k - 1) as f64 / (2 * n_pi) as f64)
        .collect()
}

fn reduced_point(kind: CoherenceKind, q: &ReducedQubit, fnoise: &FrequencyNoise, tau: f64) -> f64 {
    match kind {
        CoherenceKind::T1 => q.idle(Bloch::EXCITED, tau, 0.0).p_e(),
        CoherenceKind::Ramsey => {
            let b = Bloch::GROUND.rotate(FRAC_PI_2, 0.0);
            let b = q.idle(b, tau, fnoise.phase(0.0, tau));
            b.rotate(FRAC_PI_2, 0.0).p_e()
        }
        CoherenceKind::Echo => reduced_point(CoherenceKind::Cpmg { n_pi: 1 }, q, fnoise, tau),
        CoherenceKind::Cpmg { n_pi } => {
            let mut b = Bloch::GROUND.rotate(FRAC_PI_2, 0.0);
            let mut t = 0.0;
            for tp in cpmg_pulse_times(tau, n_pi) {
                b = q.idle(b, tp - t, fnoise.phase(t, tp));
                b = b.rotate(PI, FRAC_PI_2);
                t = tp;
            }
            b = q.idle(b, tau - t, fnoise.phase(t, tau));
            b.rotate(FRAC_PI_2, 0.0).p_e()
        }
        CoherenceKind::Rabi => unreachable!("rabi traces are integrated as a whole"),
    }
}

fn reduced_rabi_trace(
    q: &ReducedQubit,
    omega: f64,
    fnoise: &FrequencyNoise,
    times: &[f64],
) -> Vec<f64> {
    let mut grid: Vec<f64> = times.to_vec();
    let dt = fnoise.dt;
    let end = *times.last().unwrap();
    let varying = fnoise.offsets.iter().any(|&v| v != fnoise.offsets[0]);
    if varying {
        let mut t = dt;
        while t < end {
            grid.push(t);
            t += dt;
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut out = Vec::with_capacity(times.len());
    let mut b = Bloch::GROUND;
    let mut t = 0.0;
    let mut next = 0;
    for &g in &grid {
        if g > t {
            let delta = std::f64::consts::TAU * fnoise.at(0.5 * (t + g));
            b = q.drive(b, omega, 0.0, delta, g - t);
            t = g;
        }
        while next < times.len() && times[next] <= t {
            out.push(b.p_e());
            next += 1;
        }
    }
    out
}

fn full_point(
    kind: CoherenceKind,
    device: &DeviceParams,
    cfg: &CoherenceConfig,
    amps: (f64, f64),
    fnoise: &FrequencyNoise,
    tau: f64,
) -> Result<f64, ProtocolError> {
    let (a_pi, a_half) = amps;
    let env = PulseEnvelope::gaussian(cfg.pulse_sigma, cfg.truncation, a_pi, 0.0);
    let half = env.with_amplitude(a_half);
    let width = env.duration;
    let mut seq = PulseSequence::default();
    // Delays run between pulse centers, so each pulse starts at its nominal time.
    let t_out = match kind {
        CoherenceKind::T1 => {
            seq.append(0, env);
            width + tau
        }
        CoherenceKind::Rabi => {
            if tau > 0.0 {
                seq.append(0, PulseEnvelope::square(tau, cfg.rabi_amplitude, 0.0));
            }
            tau
        }
        CoherenceKind::Ramsey => {
            seq.append(0, half);
            seq.insert(tau, 0, half)?;
            tau + width
        }
        CoherenceKind::Echo | CoherenceKind::Cpmg { .. } => {
            let n = match kind {
                CoherenceKind::Cpmg { n_pi } => n_pi,
                _ => 1,
            };
            seq.append(0, half);
            for tp in cpmg_pulse_times(tau, n) {
                seq.insert(tp, 0, env.with_phase(FRAC_PI_2))?;
            }
            seq.insert(tau, 0, half)?;
            tau + width
        }
    };
    if t_out <= 0.0 {
        return Ok(0.0);
    }
    let space = build_space(4, device.qubits.len()).map_err(DynamicsError::from)?;
    let noise = if fnoise.offsets.iter().all(|v| *v == 0.0) {
        Vec::new()
    } else {
        vec![fnoise.clone()]
    };
    let opts = EvolveOptions {
        times: vec![t_out],
        ..EvolveOptions::default()
    };
    let res = dynamics::evolve(&DensityMatrix::ground(space), device, &seq, &noise, &opts)?;
    Ok(res.final_p_e(0).clamp(0.0, 1.0))
}

/// Ensemble-averaged excited population for qubit 0 of `device`.
pub fn run_coherence(
    device: &DeviceParams,
    cfg: &CoherenceConfig,
    noise: &ChargeNoiseModel,
) -> Result<PopulationTrace, ProtocolError> {
    cfg.validate()?;
    noise.validate()?;
    let budget = device.budget(0)?;
    let q = ReducedQubit::from_budget(&budget);
    let end = *cfg.times.last().unwrap();
    let duration = end.max(1e-9) * 1.001 + 1e-7;
    let dt = noise_step(noise, duration, cfg.noise_dt);
    let realizations = if noise.is_silent() || cfg.kind == CoherenceKind::T1 {
        1
    } else {
        cfg.realizations
    };
    let amps = if cfg.model == ModelKind::Full && cfg.kind != CoherenceKind::Rabi {
        (
            calibrate_amplitude(device, cfg.pulse_sigma, cfg.truncation, PI)?,
            calibrate_amplitude(device, cfg.pulse_sigma, cfg.truncation, FRAC_PI_2)?,
        )
    } else {
        (0.0, 0.0)
    };

    let rows: Vec<Result<Vec<f64>, ProtocolError>> = (0..realizations)
        .into_par_iter()
        .map(|r| {
            let stream = stream_id(TAG_COHERENCE, r as u64, 0);
            let fnoise = frequency_realization(device, 0, noise, duration, dt, stream);
            match (cfg.model, cfg.kind) {
                (ModelKind::Reduced, CoherenceKind::Rabi) => Ok(reduced_rabi_trace(
                    &q,
                    cfg.rabi_amplitude,
                    &fnoise,
                    &cfg.times,
                )),
                (ModelKind::Reduced, kind) => Ok(cfg
                    .times
                    .iter()
                    .map(|&t| reduced_point(kind, &q, &fnoise, t))
                    .collect()),
                (ModelKind::Full, kind) => cfg
                    .times
                    .iter()
                    .map(|&t| full_point(kind, device, cfg, amps, &fnoise, t))
                    .collect(),
            }
        })
        .collect();

    let n = cfg.times.len();
    let mut sum = vec![0.0; n];
    let mut sum2 = vec![0.0; n];
    for row in rows {
        let row = row?;
        for (k, p) in row.iter().enumerate() {
            sum[k] += p;
            sum2[k] += p * p;
        }
    }
    let rf = realizations as f64;
    let mut p_e: Vec<f64> = sum.iter().map(|s| (s / rf).clamp(0.0, 1.0)).collect();
    let mut std: Vec<f64> = sum
        .iter()
        .zip(&sum2)
        .map(|(s, s2)| {
            if realizations < 2 {
                0.0
            } else {
                let m = s / rf;
                ((s2 / rf - m * m).max(0.0) / (rf - 1.0)).sqrt()
            }
        })
        .collect();
    if cfg.shots > 0 {
        let mut rng = stream_rng(cfg.seed, stream_id(TAG_SHOTS, cfg.kind_code(), 0));
        for k in 0..n {
            let p = p_e[k];
            let hits = Binomial::new(cfg.shots as u64, p)
                .expect("probability in [0, 1]")
                .sample(&mut rng);
            let ph = hits as f64 / cfg.shots as f64;
            p_e[k] = ph;
            std[k] = (ph * (1.0 - ph) / cfg.shots as f64).sqrt();
        }
    }
    Ok(PopulationTrace {
        x: cfg.times.clone(),
        p_e,
        std,
        shots: cfg.shots,
    })
}

impl CoherenceConfig {
    fn kind_code(&self) -> u64 {
        match self.kind {
            CoherenceKind::Rabi => 0,
            CoherenceKind::T1 => 1,
            CoherenceKind::Ramsey => 2,
            CoherenceKind::Echo => 3,
            CoherenceKind::Cpmg { n_pi } => 4 + n_pi as u64,
        }
    }
}

/// Fits the natural model for a trace: decaying sinusoid for Rabi, a decay otherwise.
pub fn fit_coherence(
    kind: CoherenceKind,
    trace: &PopulationTrace,
    envelope: DecayEnvelope,
) -> Result<FitResult, ProtocolError> {
    Ok(match kind {
        CoherenceKind::Rabi => fit_decaying_sinusoid(&trace.x, &trace.p_e)?,
        _ => fit_decay(&trace.x, &trace.p_e, envelope)?,
    })
}

#[cfg(test)]
mod tests;
