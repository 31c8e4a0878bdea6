//! Single-qubit Clifford randomized benchmarking.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::device::{ChargeNoiseModel, DeviceParams};
use crate::dynamics::reduced::reduced_pulse_amplitude;
use crate::dynamics::{Bloch, PulseEnvelope, ReducedQubit};
use crate::estimation::{fit_rb_power_law, RbFit};
use crate::rng::{stream_id, stream_rng};

use super::clifford::{clifford_sequence, CliffordGate, Rotation};
use super::{frequency_realization, noise_step, ProtocolError, TAG_RB, TAG_RB_NOISE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RbErrorModel {
    /// Calibrated Gaussian pulses on the reduced qubit model with T1, white
    /// dephasing and charge-noise detuning.
    Lindblad,
    /// Perfect gates, each Clifford followed by `ρ → (1 − p)ρ + p·I/2`.
    Depolarizing { p: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbConfig {
    pub depths: Vec<usize>,
    pub sequences: usize,
    /// Projective shots per sequence; 0 reports the exact ground-state probability.
    pub shots: usize,
    pub model: RbErrorModel,
    pub sigma: f64,
    pub truncation: f64,
    /// Idle time after every physical pulse (s).
    pub gap: f64,
    pub seed: u64,
    /// Overrides the device noise model when set.
    pub noise: Option<ChargeNoiseModel>,
}

impl RbConfig {
    pub fn new(depths: Vec<usize>, sequences: usize, model: RbErrorModel) -> Self {
        Self {
            depths,
            sequences,
            shots: 0,
            model,
            sigma: 8e-9,
            truncation: 2.5,
            gap: 20e-9,
            seed: 0,
            noise: None,
        }
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        if self.depths.is_empty() || self.depths.contains(&0) {
            return Err(ProtocolError::Schedule(
                "depths must be non-empty and >= 1".into(),
            ));
        }
        if self.sequences == 0 {
            return Err(ProtocolError::Schedule("need at least one sequence".into()));
        }
        if let RbErrorModel::Depolarizing { p } = self.model {
            if !(0.0..=1.0).contains(&p) {
                return Err(ProtocolError::Schedule(format!(
                    "depolarizing probability must lie in [0, 1] (got {p})"
                )));
            }
        }
        if !(self.sigma > 0.0 && self.truncation > 0.0 && self.gap >= 0.0) {
            return Err(ProtocolError::Schedule(
                "pulse sigma, truncation must be > 0 and gap >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbResult {
    pub depths: Vec<usize>,
    /// `per_sequence[d][s]`: ground-state probability of sequence `s` at depth `d`.
    pub per_sequence: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Standard error of each mean.
    pub std: Vec<f64>,
    pub fit: RbFit,
}

struct PulseLibrary {
    quarter: PulseEnvelope,
    half: PulseEnvelope,
    gap: f64,
}

impl PulseLibrary {
    fn new(cfg: &RbConfig) -> Self {
        let a_pi = reduced_pulse_amplitude(cfg.sigma, cfg.truncation, PI);
        let a_half = reduced_pulse_amplitude(cfg.sigma, cfg.truncation, FRAC_PI_2);
        Self {
            half: PulseEnvelope::gaussian(cfg.sigma, cfg.truncation, a_pi, 0.0),
            quarter: PulseEnvelope::gaussian(cfg.sigma, cfg.truncation, a_half, 0.0),
            gap: cfg.gap,
        }
    }

    fn envelope(&self, r: Rotation) -> PulseEnvelope {
        let base = if r.angle() == PI {
            self.half
        } else {
            self.quarter
        };
        base.with_phase(r.phase())
    }

    fn slot(&self) -> f64 {
        self.half.duration + self.gap
    }
}

fn pulse_count(gates: &[CliffordGate], recovery: &CliffordGate) -> usize {
    gates.iter().map(|g| g.decomposition.len()).sum::<usize>() + recovery.decomposition.len()
}

fn depolarizing_sequence(gates: &[CliffordGate], recovery: &CliffordGate, p: f64) -> f64 {
    let shrink = 1.0 - p;
    let mut b = Bloch::GROUND;
    for g in gates.iter().chain(std::iter::once(recovery)) {
        for r in &g.decomposition {
            b = b.rotate(r.angle(), r.phase());
        }
        b = Bloch {
            x: b.x * shrink,
            y: b.y * shrink,
            z: b.z * shrink,
        };
    }
    1.0 - b.p_e()
}

/// Ground-state probability after a sequence of calibrated pulses.
///
/// The detuning is held at its value at each pulse center; idle gaps
/// accumulate the integrated noise phase.
fn lindblad_sequence(
    q: &ReducedQubit,
    lib: &PulseLibrary,
    gates: &[CliffordGate],
    recovery: &CliffordGate,
    fnoise: &crate::device::FrequencyNoise,
) -> f64 {
    let mut b = Bloch::GROUND;
    let mut t = 0.0;
    for g in gates.iter().chain(std::iter::once(recovery)) {
        for &r in &g.decomposition {
            let env = lib.envelope(r);
            let delta = TAU * fnoise.at(t + 0.5 * env.duration);
            b = q.pulse(b, &env, delta);
            t += env.duration;
            if lib.gap > 0.0 {
                b = q.idle(b, lib.gap, fnoise.phase(t, t + lib.gap));
                t += lib.gap;
            }
        }
    }
    1.0 - b.p_e()
}

pub fn run_rb(device: &DeviceParams, cfg: &RbConfig) -> Result<RbResult, ProtocolError> {
    cfg.validate()?;
    let noise = cfg.noise.clone().unwrap_or_else(|| device.noise.clone());
    noise.validate()?;
    let budget = device.budget(0)?;
    let q = ReducedQubit::from_budget(&budget);
    let lib = PulseLibrary::new(cfg);
    let max_depth = *cfg.depths.iter().max().unwrap();
    // Upper bound: at most three pulses per Clifford.
    let horizon = (3 * (max_depth + 1)) as f64 * lib.slot() + lib.slot();
    let dt = noise_step(&noise, horizon, None);

    let items: Vec<(usize, usize)> = (0..cfg.depths.len())
        .flat_map(|d| (0..cfg.sequences).map(move |s| (d, s)))
        .collect();
    let fidelities: Vec<f64> = items
        .par_iter()
        .map(|&(d, s)| {
            let m = cfg.depths[d];
            let mut rng = stream_rng(cfg.seed, stream_id(TAG_RB, m as u64, s as u64));
            let (gates, recovery) = clifford_sequence(m, &mut rng);
            let f = match cfg.model {
                RbErrorModel::Depolarizing { p } => depolarizing_sequence(&gates, &recovery, p),
                RbErrorModel::Lindblad => {
                    let duration = pulse_count(&gates, &recovery) as f64 * lib.slot() + lib.slot();
                    let stream = stream_id(TAG_RB_NOISE, m as u64, s as u64);
                    let fnoise = frequency_realization(device, 0, &noise, duration, dt, stream);
                    lindblad_sequence(&q, &lib, &gates, &recovery, &fnoise)
                }
            };
            let f = f.clamp(0.0, 1.0);
            if cfg.shots > 0 {
                let hits = Binomial::new(cfg.shots as u64, f)
                    .expect("probability in [0, 1]")
                    .sample(&mut rng);
                hits as f64 / cfg.shots as f64
            } else {
                f
            }
        })
        .collect();

    let per_sequence: Vec<Vec<f64>> = fidelities
        .chunks(cfg.sequences)
        .map(|c| c.to_vec())
        .collect();
    let n = cfg.sequences as f64;
    let mean: Vec<f64> = per_sequence
        .iter()
        .map(|v| v.iter().sum::<f64>() / n)
        .collect();
    let std: Vec<f64> = per_sequence
        .iter()
        .zip(&mean)
        .map(|(v, m)| {
            if v.len() < 2 {
                0.0
            } else {
                (v.iter().map(|f| (f - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            }
        })
        .collect();
    let x: Vec<f64> = cfg.depths.iter().map(|&m| m as f64).collect();
    let fit = fit_rb_power_law(&x, &mean)?;
    Ok(RbResult {
        depths: cfg.depths.clone(),
        per_sequence,
        mean,
        std,
        fit,
    })
}
