use super::*;
use crate::device::{DeviceParams, US};
use crate::estimation::fit_exp_decay;
use crate::quantum::{excited_population, expectation};

fn space(n_fock: usize) -> SpaceDescriptor {
    build_space(n_fock, 1).unwrap()
}

fn excited(n_fock: usize) -> DensityMatrix {
    DensityMatrix::basis_state(space(n_fock), 0, &[1]).unwrap()
}

fn pulse_device() -> DeviceParams {
    DeviceParams::long_t1_qubit()
}

fn pi_envelope(device: &DeviceParams) -> PulseEnvelope {
    let amp = calibrate_pi_amplitude(device, 8e-9, 2.5).unwrap();
    PulseEnvelope::gaussian(8e-9, 2.5, amp, 0.0)
}

#[test]
fn zero_amplitude_leaves_undriven_hamiltonian() {
    let dev = DeviceParams::sweet_spot_qubit();
    let sp = space(4);
    let frame = dressed_qubit_frequency(&dev, 0);
    let mut seq = PulseSequence::default();
    seq.append(0, PulseEnvelope::gaussian(8e-9, 2.5, 0.0, 0.0));
    let h = build_drive_hamiltonian(&dev, sp, &seq, 20e-9, frame).unwrap();
    let h0 = build_drive_hamiltonian(&dev, sp, &PulseSequence::default(), 20e-9, frame).unwrap();
    assert_eq!(h.matrix(), h0.matrix());
    assert!(h.hermiticity_defect() < 1e-12);
}

#[test]
fn frame_at_qubit_removes_qubit_detuning() {
    let dev = DeviceParams::sweet_spot_qubit();
    let sp = space(3);
    let h = build_drive_hamiltonian(
        &dev,
        sp,
        &PulseSequence::default(),
        0.0,
        dev.qubit_frequency(0),
    )
    .unwrap();
    let k = sp.index(0, &[1]);
    assert_eq!(h.matrix()[(k, k)].re, 0.0);
    let r = sp.index(1, &[0]);
    let expected = TAU * (dev.resonator.f_r - dev.qubit_frequency(0));
    assert!((h.matrix()[(r, r)].re - expected).abs() < 1e-6);
}

#[test]
fn gaussian_edges_follow_truncation() {
    let env = PulseEnvelope::gaussian(8e-9, 2.5, 1.0e8, 0.0);
    assert_eq!(env.duration, 40e-9);
    assert_eq!(env.rabi_rate(20e-9), 1.0e8);
    let edge = 1.0e8 * (-2.5f64 * 2.5 / 2.0).exp();
    assert!((env.rabi_rate(0.0) - edge).abs() < 1e-6);
    assert!((env.rabi_rate(40e-9) - edge).abs() < 1e-6);
    assert_eq!(env.rabi_rate(41e-9), 0.0);
}

#[test]
fn overlapping_pulses_are_rejected() {
    let mut seq = PulseSequence::default();
    seq.append(0, PulseEnvelope::square(40e-9, 1.0, 0.0));
    assert!(seq
        .insert(50e-9, 0, PulseEnvelope::square(40e-9, 1.0, 0.0))
        .is_err());
    let bad = PulseEnvelope {
        duration: 30e-9,
        ..PulseEnvelope::gaussian(8e-9, 2.5, 1.0, 0.0)
    };
    assert!(bad.validate().is_err());
}

#[test]
fn uncoupled_qubit_decays_at_nonradiative_rate() {
    let mut dev = DeviceParams::sweet_spot_qubit();
    dev.qubits[0].g = 0.0;
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * 20.0 * US).collect();
    let opts = EvolveOptions {
        times: times.clone(),
        ..EvolveOptions::default()
    };
    let res = evolve(&excited(3), &dev, &PulseSequence::default(), &[], &opts).unwrap();
    let rate = dev.qubits[0].gamma_nr;
    for (t, p) in times.iter().zip(&res.p_e[0]) {
        assert!((p - (-rate * t).exp()).abs() < 1e-6, "t = {t}: {p}");
    }
}

#[test]
fn purcell_decay_emerges_from_the_resonator() {
    let mut dev = DeviceParams::sweet_spot_qubit();
    dev.qubits[0].gamma_nr = 0.0;
    let times: Vec<f64> = (0..=40).map(|k| k as f64 * 5.0 * US).collect();
    let opts = EvolveOptions {
        times: times.clone(),
        ..EvolveOptions::default()
    };
    let res = evolve(&excited(3), &dev, &PulseSequence::default(), &[], &opts).unwrap();
    let fit = fit_exp_decay(&times, &res.p_e[0]).unwrap();
    let t = fit.get("decay_time").unwrap();
    assert!((t / (78.7 * US) - 1.0).abs() < 0.05, "T = {t}");
}

#[test]
fn calibrated_pi_pulse_inverts_the_qubit() {
    let dev = pulse_device();
    let env = pi_envelope(&dev);
    let mut seq = PulseSequence::default();
    seq.append(0, env);
    let res = evolve(
        &DensityMatrix::ground(space(3)),
        &dissipationless(&dev),
        &seq,
        &[],
        &EvolveOptions::default(),
    )
    .unwrap();
    assert!(res.final_p_e(0) > 0.9999);
}

#[test]
fn short_pulses_near_the_resonator_fail_calibration() {
    // At |Δ|/2π = 34.7 MHz an 8 ns Gaussian excites the resonator-like transition.
    let dev = DeviceParams::sweet_spot_qubit();
    assert!(matches!(
        calibrate_pi_amplitude(&dev, 8e-9, 2.5),
        Err(DynamicsError::Calibration(_))
    ));
    assert!(calibrate_pi_amplitude(&dev, 20e-9, 2.5).is_ok());
}

#[test]
fn amplitude_scales_with_pulse_area() {
    let dev = pulse_device();
    let a8 = calibrate_pi_amplitude(&dev, 8e-9, 2.5).unwrap();
    let a16 = calibrate_pi_amplitude(&dev, 16e-9, 2.5).unwrap();
    assert!((a16 / a8 - 0.5).abs() < 0.005);
    let half = calibrate_amplitude(&dev, 8e-9, 2.5, PI / 2.0).unwrap();
    assert!((half / a8 - 0.5).abs() < 1e-3, "{}", half / a8);
    let area = PulseEnvelope::gaussian(8e-9, 2.5, a8, 0.0).area();
    assert!((area / PI - 1.0).abs() < 0.01);
}

#[test]
fn tighter_tolerance_changes_little() {
    let dev = pulse_device();
    let mut seq = PulseSequence::default();
    seq.append(0, pi_envelope(&dev));
    let run = |rtol: f64, atol: f64| {
        let opts = EvolveOptions {
            tolerances: Tolerances {
                rtol,
                atol,
                ..Tolerances::default()
            },
            times: vec![200e-9],
            cache_idle: false,
            ..EvolveOptions::default()
        };
        evolve(&DensityMatrix::ground(space(4)), &dev, &seq, &[], &opts)
            .unwrap()
            .final_p_e(0)
    };
    assert!((run(1e-8, 1e-10) - run(0.5e-8, 0.5e-10)).abs() < 1e-6);
}

#[test]
fn fock_truncation_converges_by_eight() {
    let dev = pulse_device();
    let mut seq = PulseSequence::default();
    seq.append(0, pi_envelope(&dev));
    let opts = EvolveOptions {
        times: vec![1e-6],
        ..EvolveOptions::default()
    };
    let mut prev: Option<f64> = None;
    let mut converged_at = None;
    for n in 2..=8 {
        let p = evolve(&DensityMatrix::ground(space(n)), &dev, &seq, &[], &opts)
            .unwrap()
            .final_p_e(0);
        if let Some(q) = prev {
            if (p - q).abs() < 1e-8 {
                converged_at = Some(n);
                break;
            }
        }
        prev = Some(p);
    }
    assert!(converged_at.is_some());
}

#[test]
fn dissipationless_evolution_conserves_energy() {
    let dev = dissipationless(&DeviceParams::sweet_spot_qubit());
    let sp = space(4);
    let frame = dev.qubit_frequency(0);
    let h = build_drive_hamiltonian(&dev, sp, &PulseSequence::default(), 0.0, frame).unwrap();
    // (|0,e⟩ + |1,g⟩)/√2
    let d = sp.dim();
    let mut psi = nalgebra::DVector::<C64>::zeros(d);
    psi[sp.index(0, &[1])] = C64::from(0.5f64.sqrt());
    psi[sp.index(1, &[0])] = C64::from(0.5f64.sqrt());
    let rho0 = DensityMatrix::new(sp, &psi * psi.adjoint()).unwrap();
    let opts = EvolveOptions {
        frame: Some(frame),
        times: vec![0.1 * US, 0.5 * US],
        cache_idle: false,
        ..EvolveOptions::default()
    };
    let e0 = expectation(&rho0, &h).unwrap().re;
    let res = evolve(&rho0, &dev, &PulseSequence::default(), &[], &opts).unwrap();
    for s in &res.states {
        let e = expectation(s, &h).unwrap().re;
        assert!((e - e0).abs() <= 1e-8 * e0.abs());
    }
}

#[test]
fn outputs_are_physical_states() {
    let dev = pulse_device();
    let mut seq = PulseSequence::default();
    let env = pi_envelope(&dev);
    seq.append(0, env.with_amplitude(0.5 * env.amplitude));
    seq.append(0, env.with_phase(PI / 2.0));
    let opts = EvolveOptions {
        times: vec![10e-9, 30e-9, 60e-9, 100e-9, 2e-6],
        ..EvolveOptions::default()
    };
    let res = evolve(&DensityMatrix::ground(space(4)), &dev, &seq, &[], &opts).unwrap();
    for s in &res.states {
        s.validate().unwrap();
    }
}

#[test]
fn frequency_noise_detunes_the_qubit() {
    // A constant offset during a Ramsey-like free evolution rotates the phase.
    let dev = dissipationless(&pulse_device());
    let sp = space(3);
    let env = pi_envelope(&dev);
    let half = env.with_amplitude(calibrate_amplitude(&dev, 8e-9, 2.5, PI / 2.0).unwrap());
    let mut seq = PulseSequence::default();
    seq.append(0, half);
    seq.insert(1e-6, 0, half).unwrap();
    let run = |df: f64| {
        let noise = [FrequencyNoise::constant(df, 2e-6)];
        evolve(
            &DensityMatrix::ground(sp),
            &dev,
            &seq,
            &noise,
            &EvolveOptions::default(),
        )
        .unwrap()
        .final_p_e(0)
    };
    assert!(run(0.0) > 0.999);
    // Half a cycle of extra phase over ~1 μs sends the qubit back to ground.
    let df = 0.5 / (1e-6 - 40e-9);
    assert!(run(df) < 0.01, "{}", run(df));
}

#[test]
fn steady_state_is_ground_without_drive() {
    let dev = DeviceParams::sweet_spot_qubit();
    let rho = steady_state(&dev, space(3)).unwrap();
    assert!(excited_population(&rho, 0).unwrap().abs() < 1e-10);
}

#[test]
fn resonator_pull_matches_dispersive_shift() {
    let dev = DeviceParams::sweet_spot_qubit();
    let chi_hz = dev.budget(0).unwrap().chi / TAU;
    let f = dressed_resonator_frequency(&dev, 3, 1e6).unwrap();
    let pull = f - dev.resonator.f_r;
    assert!(
        (pull / -chi_hz - 1.0).abs() < 0.05,
        "pull {pull} vs χ/2π {chi_hz}"
    );
}
