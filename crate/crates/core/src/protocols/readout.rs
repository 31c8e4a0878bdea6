//! Single-shot dispersive readout.
//!
//! Each shot integrates the steady-state transmission of the (possibly decaying)
//! qubit plus white Gaussian noise of standard deviation `1/(snr·√T)` per
//! quadrature, in units of the bare resonator amplitude.

use std::f64::consts::{SQRT_2, TAU};

use rand::Rng;
use rand_distr::{Exp, StandardNormal};
use statrs::function::erf::erf;

use crate::device::DeviceParams;
use crate::spectroscopy::lorentzian;
use crate::C64;

use crate::rng::{stream_id, stream_rng};

use super::{ProtocolError, TAG_READOUT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrepState {
    State0,
    State1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IqRecord {
    pub shots: Vec<(f64, f64)>,
    pub prep: PrepState,
    pub integration: f64,
}

/// Cloud centers `(S_0, S_1)` for a probe at the bare resonator frequency,
/// rotated so that `S_1 − S_0` points along +I.
pub fn cloud_centers(device: &DeviceParams, qubit: usize) -> Result<(C64, C64), ProtocolError> {
    let chi = device.budget(qubit)?.chi;
    let f_r = device.resonator.f_r;
    let kappa = device.resonator.kappa;
    let s0 = lorentzian(kappa, f_r - chi / TAU, f_r);
    let s1 = lorentzian(kappa, f_r + chi / TAU, f_r);
    let sep = s1 - s0;
    let rot = if sep.norm() > 0.0 {
        sep.conj() / sep.norm()
    } else {
        C64::from(1.0)
    };
    Ok((s0 * rot, s1 * rot))
}

/// Simulates `shots` integrated measurements of width `integration` (s).
pub fn simulate_readout<R: Rng + ?Sized>(
    device: &DeviceParams,
    qubit: usize,
    prep: PrepState,
    shots: usize,
    integration: f64,
    snr: f64,
    rng: &mut R,
) -> Result<IqRecord, ProtocolError> {
    if !(integration > 0.0) {
        return Err(ProtocolError::Schedule(
            "integration time must be > 0".into(),
        ));
    }
    let (s0, s1) = cloud_centers(device, qubit)?;
    let t1 = device.budget(qubit)?.t1;
    let sigma = if snr.is_infinite() {
        0.0
    } else {
        1.0 / (snr * integration.sqrt())
    };
    let flip = Exp::new(1.0 / t1).map_err(|e| ProtocolError::Schedule(e.to_string()))?;
    let out = (0..shots)
        .map(|_| {
            let center = match prep {
                PrepState::State0 => s0,
                PrepState::State1 => {
                    let t: f64 = rng.sample(flip);
                    if t >= integration {
                        s1
                    } else {
                        let w = t / integration;
                        s1 * w + s0 * (1.0 - w)
                    }
                }
            };
            let ni: f64 = rng.sample(StandardNormal);
            let nq: f64 = rng.sample(StandardNormal);
            (center.re + sigma * ni, center.im + sigma * nq)
        })
        .collect();
    Ok(IqRecord {
        shots: out,
        prep,
        integration,
    })
}

/// Both preparations with `shots` each, on independent streams derived from `seed`.
pub fn readout_pair(
    device: &DeviceParams,
    qubit: usize,
    shots: usize,
    integration: f64,
    snr: f64,
    seed: u64,
) -> Result<(IqRecord, IqRecord), ProtocolError> {
    let mut rng0 = stream_rng(seed, stream_id(TAG_READOUT, qubit as u64, 0));
    let mut rng1 = stream_rng(seed, stream_id(TAG_READOUT, qubit as u64, 1));
    Ok((
        simulate_readout(
            device,
            qubit,
            PrepState::State0,
            shots,
            integration,
            snr,
            &mut rng0,
        )?,
        simulate_readout(
            device,
            qubit,
            PrepState::State1,
            shots,
            integration,
            snr,
            &mut rng1,
        )?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FidelityConvention {
    /// `1 − ½[P(1|0) + P(0|1)]`.
    #[default]
    Assignment,
    /// `1 − P(1|0) − P(0|1)`.
    Visibility,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutFidelity {
    /// Assignment fidelity at the optimal threshold.
    pub fidelity: f64,
    /// `1 − P(1|0) − P(0|1)` at the same threshold.
    pub visibility: f64,
    /// Threshold on the projected coordinate `Re(s · e^{−iθ})`.
    pub threshold: f64,
    /// Angle `θ` of the separation axis.
    pub axis: f64,
    pub p10: f64,
    pub p01: f64,
}

impl ReadoutFidelity {
    pub fn value(&self, convention: FidelityConvention) -> f64 {
        match convention {
            FidelityConvention::Assignment => self.fidelity,
            FidelityConvention::Visibility => self.visibility,
        }
    }
}

fn mean(shots: &[(f64, f64)]) -> C64 {
    let n = shots.len() as f64;
    let (i, q) = shots.iter().fold((0.0, 0.0), |a, s| (a.0 + s.0, a.1 + s.1));
    C64::new(i / n, q / n)
}

/// Projects both records on the axis joining their means and picks the
/// threshold maximizing the assignment fidelity.
pub fn readout_fidelity(
    rec0: &IqRecord,
    rec1: &IqRecord,
) -> Result<ReadoutFidelity, ProtocolError> {
    if rec0.shots.is_empty() || rec1.shots.is_empty() {
        return Err(ProtocolError::Degenerate("empty record".into()));
    }
    let (m0, m1) = (mean(&rec0.shots), mean(&rec1.shots));
    let sep = m1 - m0;
    let axis = if sep.norm() > 0.0 { sep.arg() } else { 0.0 };
    let rot = C64::from_polar(1.0, -axis);
    let project = |s: &(f64, f64)| (C64::new(s.0, s.1) * rot).re;
    let mut x0: Vec<f64> = rec0.shots.iter().map(project).collect();
    let mut x1: Vec<f64> = rec1.shots.iter().map(project).collect();
    x0.sort_by(f64::total_cmp);
    x1.sort_by(f64::total_cmp);
    let all_same = x0.first() == x0.last() && x1.first() == x1.last() && x0.first() == x1.first();
    if all_same {
        return Err(ProtocolError::Degenerate(
            "all projected shots coincide".into(),
        ));
    }

    let (n0, n1) = (x0.len() as f64, x1.len() as f64);
    let mut cuts: Vec<f64> = x0.iter().chain(&x1).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    // Candidate thresholds: below everything, and midway between neighbours.
    let mut thresholds = vec![cuts[0] - 1.0];
    thresholds.extend(cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    thresholds.push(cuts[cuts.len() - 1] + 1.0);

    let mut best: Option<ReadoutFidelity> = None;
    let (mut i0, mut i1) = (0usize, 0usize);
    for thr in thresholds {
        while i0 < x0.len() && x0[i0] <= thr {
            i0 += 1;
        }
        while i1 < x1.len() && x1[i1] <= thr {
            i1 += 1;
        }
        let p10 = (x0.len() - i0) as f64 / n0;
        let p01 = i1 as f64 / n1;
        let f = 1.0 - 0.5 * (p10 + p01);
        if best.is_none_or(|b| f > b.fidelity) {
            best = Some(ReadoutFidelity {
                fidelity: f,
                visibility: 1.0 - p10 - p01,
                threshold: thr,
                axis,
                p10,
                p01,
            });
        }
    }
    Ok(best.expect("at least one threshold"))
}

/// Assignment fidelity of two unit-variance Gaussian clouds a distance `d` apart.
pub fn gaussian_overlap_fidelity(d: f64) -> f64 {
    0.5 + 0.5 * erf(d / (2.0 * SQRT_2))
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / SQRT_2))
}

/// Expected assignment fidelity for clouds `d` apart with per-quadrature noise
/// `sigma`, decay time `t1` and window `integration`, at the best threshold.
pub fn expected_fidelity(d: f64, sigma: f64, t1: f64, integration: f64) -> f64 {
    let survive = (-integration / t1).exp();
    let n = 400;
    let h = integration / n as f64;
    let p01 = |thr: f64| {
        // Simpson over flip times with density e^{−t/T1}/T1.
        let mut acc = 0.0;
        for k in 0..=n {
            let t = k as f64 * h;
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let dens = (-t / t1).exp() / t1;
            acc += w * dens * normal_cdf((thr - d * t / integration) / sigma);
        }
        acc * h / 3.0 + survive * normal_cdf((thr - d) / sigma)
    };
    let f = |thr: f64| 1.0 - 0.5 * ((1.0 - normal_cdf(thr / sigma)) + p01(thr));
    let (mut a, mut b) = (0.0, d);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - r * (b - a);
        let e = a + r * (b - a);
        if f(c) > f(e) {
            b = e;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b))
}

/// Signal-to-noise ratio (per √s) at which the expected assignment fidelity
/// reaches `target` for the device's T1 and the given window.
pub fn calibrate_snr(
    device: &DeviceParams,
    qubit: usize,
    integration: f64,
    target: f64,
) -> Result<f64, ProtocolError> {
    let (s0, s1) = cloud_centers(device, qubit)?;
    let d = (s1 - s0).norm();
    let t1 = device.budget(qubit)?.t1;
    let fid = |snr: f64| expected_fidelity(d, 1.0 / (snr * integration.sqrt()), t1, integration);
    let (mut lo, mut hi) = (1.0, 1.0);
    while fid(lo) > target {
        lo *= 0.5;
        if lo < 1e-6 {
            return Err(ProtocolError::Degenerate(
                "target below chance level".into(),
            ));
        }
    }
    while fid(hi) < target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(ProtocolError::Degenerate(format!(
                "fidelity {target} unreachable within the decay limit"
            )));
        }
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if fid(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_record(center: (f64, f64), n: usize, stream: u64, prep: PrepState) -> IqRecord {
        let mut rng = stream_rng(99, stream);
        let shots = (0..n)
            .map(|_| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                (center.0 + a, center.1 + b)
            })
            .collect();
        IqRecord {
            shots,
            prep,
            integration: 1.0,
        }
    }

    #[test]
    fn gaussian_clouds_match_overlap_formula() {
        let n = 20_000;
        let r0 = gaussian_record((0.0, 0.0), n, 1, PrepState::State0);
        let r1 = gaussian_record((4.2 / SQRT_2, 4.2 / SQRT_2), n, 2, PrepState::State1);
        let f = readout_fidelity(&r0, &r1).unwrap().fidelity;
        let oracle = gaussian_overlap_fidelity(4.2);
        let se = (oracle * (1.0 - oracle) / n as f64).sqrt();
        // Threshold optimization biases upward slightly; allow 3σ.
        assert!((f - oracle).abs() < 3.0 * se + 2e-3, "{f} vs {oracle}");
    }

    #[test]
    fn identical_clouds_give_chance() {
        let r0 = gaussian_record((0.0, 0.0), 5000, 3, PrepState::State0);
        let r1 = gaussian_record((0.0, 0.0), 5000, 4, PrepState::State1);
        let f = readout_fidelity(&r0, &r1).unwrap().fidelity;
        assert!((f - 0.5).abs() < 0.03, "{f}");
    }

    #[test]
    fn swapping_and_rigid_motions_leave_fidelity_unchanged() {
        let r0 = gaussian_record((0.0, 0.0), 3000, 5, PrepState::State0);
        let r1 = gaussian_record((1.5, -0.7), 3000, 6, PrepState::State1);
        let f = readout_fidelity(&r0, &r1).unwrap().fidelity;
        assert_eq!(readout_fidelity(&r1, &r0).unwrap().fidelity, f);
        let moved = |r: &IqRecord| IqRecord {
            shots: r
                .shots
                .iter()
                .map(|&(i, q)| {
                    let z = C64::new(i, q) * C64::from_polar(1.0, 0.9) + C64::new(3.0, -2.0);
                    (z.re, z.im)
                })
                .collect(),
            ..r.clone()
        };
        let g = readout_fidelity(&moved(&r0), &moved(&r1)).unwrap().fidelity;
        assert!((f - g).abs() < 1e-12);
    }

    #[test]
    fn degenerate_records_error() {
        let r = IqRecord {
            shots: vec![(1.0, 1.0); 10],
            prep: PrepState::State0,
            integration: 1.0,
        };
        assert!(readout_fidelity(&r, &r).is_err());
        let empty = IqRecord {
            shots: vec![],
            ..r.clone()
        };
        assert!(readout_fidelity(&empty, &r).is_err());
    }

    #[test]
    fn noiseless_readout_without_decay_is_perfect() {
        let mut dev = DeviceParams::long_t1_qubit();
        dev.qubits[0].gamma_nr = 0.0;
        dev.resonator.kappa *= 1e-12;
        let mut dev2 = DeviceParams::long_t1_qubit();
        dev2.qubits[0].gamma_nr = 1e-12;
        let mut rng = stream_rng(1, 0);
        let r0 = simulate_readout(
            &dev2,
            0,
            PrepState::State0,
            200,
            5e-6,
            f64::INFINITY,
            &mut rng,
        )
        .unwrap();
        let r1 = simulate_readout(
            &dev2,
            0,
            PrepState::State1,
            200,
            5e-6,
            f64::INFINITY,
            &mut rng,
        )
        .unwrap();
        assert_eq!(readout_fidelity(&r0, &r1).unwrap().fidelity, 1.0);
        let _ = dev;
    }

    #[test]
    fn zero_dispersive_shift_is_uninformative() {
        let mut dev = DeviceParams::long_t1_qubit();
        // Far-detuned qubit: χ → 0 within double precision of the cloud centers.
        dev.qubits[0].g = 1e-9;
        let mut rng = stream_rng(2, 0);
        let r0 = simulate_readout(&dev, 0, PrepState::State0, 5000, 5e-6, 1e3, &mut rng).unwrap();
        let r1 = simulate_readout(&dev, 0, PrepState::State1, 5000, 5e-6, 1e3, &mut rng).unwrap();
        let f = readout_fidelity(&r0, &r1).unwrap().fidelity;
        assert!((f - 0.5).abs() < 0.03, "{f}");
    }

    #[test]
    fn calibrated_snr_reproduces_target_in_monte_carlo() {
        let dev = DeviceParams::long_t1_qubit();
        let snr = calibrate_snr(&dev, 0, 5e-6, 0.981).unwrap();
        let mut rng = stream_rng(3, 0);
        let r0 = simulate_readout(&dev, 0, PrepState::State0, 5000, 5e-6, snr, &mut rng).unwrap();
        let r1 = simulate_readout(&dev, 0, PrepState::State1, 5000, 5e-6, snr, &mut rng).unwrap();
        let f = readout_fidelity(&r0, &r1).unwrap();
        assert!((f.fidelity - 0.981).abs() < 0.005, "{f:?}");
        assert!(f.visibility <= f.fidelity);
    }
}
