use super::*;
use crate::device::{DeviceParams, US};
use crate::estimation::fit_exp_decay;

fn log_times(t_max: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| t_max * k as f64 / n as f64).collect()
}

#[test]
fn cpmg_with_one_pulse_is_the_echo() {
    let dev = DeviceParams::long_t1_qubit();
    let times = log_times(60.0 * US, 12);
    let mut echo = CoherenceConfig::new(CoherenceKind::Echo, times.clone());
    echo.realizations = 40;
    let mut cpmg = echo.clone();
    cpmg.kind = CoherenceKind::Cpmg { n_pi: 1 };
    let a = run_coherence(&dev, &echo, &dev.noise).unwrap();
    let b = run_coherence(&dev, &cpmg, &dev.noise).unwrap();
    assert_eq!(a.p_e, b.p_e);
}

#[test]
fn noiseless_ramsey_is_lifetime_limited() {
    let dev = DeviceParams::sweet_spot_qubit();
    let t1 = dev.budget(0).unwrap().t1;
    let cfg = CoherenceConfig::new(CoherenceKind::Ramsey, log_times(4.0 * t1, 40));
    let trace = run_coherence(&dev, &cfg, &ChargeNoiseModel::silent()).unwrap();
    let fit = fit_coherence(CoherenceKind::Ramsey, &trace, DecayEnvelope::Exponential).unwrap();
    let t2 = fit.get("decay_time").unwrap();
    assert!((t2 / (2.0 * t1) - 1.0).abs() < 0.05, "{t2} vs {}", 2.0 * t1);
}

#[test]
fn t1_at_the_sweet_spot() {
    let dev = DeviceParams::sweet_spot_qubit();
    let cfg = CoherenceConfig::new(CoherenceKind::T1, log_times(200.0 * US, 40));
    let trace = run_coherence(&dev, &cfg, &dev.noise).unwrap();
    let t1 = fit_coherence(CoherenceKind::T1, &trace, DecayEnvelope::Exponential)
        .unwrap()
        .get("decay_time")
        .unwrap();
    assert!((t1 / (48.2 * US) - 1.0).abs() < 0.05, "{t1}");
}

#[test]
fn invalid_schedules_are_rejected() {
    let dev = DeviceParams::long_t1_qubit();
    let bad = [
        CoherenceConfig::new(CoherenceKind::Cpmg { n_pi: 0 }, vec![1e-6]),
        CoherenceConfig::new(CoherenceKind::T1, vec![]),
        CoherenceConfig::new(CoherenceKind::T1, vec![2e-6, 1e-6]),
        CoherenceConfig::new(CoherenceKind::Rabi, vec![1e-6]),
    ];
    for cfg in bad {
        assert!(matches!(
            run_coherence(&dev, &cfg, &dev.noise),
            Err(ProtocolError::Schedule(_))
        ));
    }
}

#[test]
fn full_and_reduced_models_agree_without_noise() {
    let dev = DeviceParams::long_t1_qubit();
    let times = vec![1.0 * US, 20.0 * US, 60.0 * US];
    let silent = ChargeNoiseModel::silent();
    for kind in [
        CoherenceKind::T1,
        CoherenceKind::Ramsey,
        CoherenceKind::Echo,
    ] {
        let mut cfg = CoherenceConfig::new(kind, times.clone());
        let reduced = run_coherence(&dev, &cfg, &silent).unwrap();
        cfg.model = ModelKind::Full;
        let full = run_coherence(&dev, &cfg, &silent).unwrap();
        for (r, f) in reduced.p_e.iter().zip(&full.p_e) {
            assert!((r - f).abs() < 0.01, "{kind:?}: {r} vs {f}");
        }
    }
}

#[test]
fn rabi_decays_and_oscillates_at_the_drive_rate() {
    let dev = DeviceParams::sweet_spot_qubit();
    let omega = std::f64::consts::TAU * 2.0e6;
    let times: Vec<f64> = (0..300).map(|k| k as f64 * 0.1 * US).collect();
    let mut cfg = CoherenceConfig::new(CoherenceKind::Rabi, times);
    cfg.rabi_amplitude = omega;
    cfg.realizations = 20;
    let trace = run_coherence(&dev, &cfg, &dev.noise).unwrap();
    let fit = fit_coherence(CoherenceKind::Rabi, &trace, DecayEnvelope::Exponential).unwrap();
    let f = fit.get("frequency").unwrap();
    assert!((f / 2.0e6 - 1.0).abs() < 0.01, "{f}");
    let predicted = dev.budget(0).unwrap().t_rabi_predicted;
    let t = fit.get("decay_time").unwrap();
    assert!((t / predicted - 1.0).abs() < 0.1, "{t} vs {predicted}");
}

#[test]
fn shot_sampling_is_reproducible() {
    let dev = DeviceParams::long_t1_qubit();
    let mut cfg = CoherenceConfig::new(CoherenceKind::T1, log_times(100.0 * US, 10));
    cfg.shots = 200;
    cfg.seed = 4;
    let a = run_coherence(&dev, &cfg, &dev.noise).unwrap();
    let b = run_coherence(&dev, &cfg, &dev.noise).unwrap();
    assert_eq!(a, b);
    assert!(a.p_e.iter().all(|p| (0.0..=1.0).contains(p)));
    let fit = fit_exp_decay(&a.x, &a.p_e).unwrap();
    assert!(fit.get("decay_time").unwrap() > 50.0 * US);
}

#[test]
fn depolarizing_rb_recovers_the_channel() {
    let dev = DeviceParams::long_t1_qubit();
    let p = 6e-4;
    let cfg = RbConfig::new(
        vec![1, 32, 128, 512, 1024],
        10,
        RbErrorModel::Depolarizing { p },
    );
    let res = run_rb(&dev, &cfg).unwrap();
    assert!(
        (res.fit.f_gate - (1.0 - p / 2.0)).abs() < 5e-5,
        "{}",
        res.fit.f_gate
    );
    for w in res.mean.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn noiseless_rb_is_exact() {
    let dev = DeviceParams::long_t1_qubit();
    let cfg = RbConfig::new(vec![1, 2, 8, 64], 5, RbErrorModel::Depolarizing { p: 0.0 });
    let res = run_rb(&dev, &cfg).unwrap();
    for row in &res.per_sequence {
        for f in row {
            assert!((f - 1.0).abs() < 1e-12, "{f}");
        }
    }
    assert!(res.fit.degenerate);
    assert_eq!(res.fit.f_gate, 1.0);
}

#[test]
fn ideal_pulses_return_to_ground() {
    let mut dev = DeviceParams::long_t1_qubit();
    dev.qubits[0].gamma_nr = 0.0;
    dev.qubits[0].g = 1e-3;
    let mut cfg = RbConfig::new(vec![1, 16, 64], 4, RbErrorModel::Lindblad);
    cfg.noise = Some(ChargeNoiseModel::silent());
    let res = run_rb(&dev, &cfg).unwrap();
    for row in &res.per_sequence {
        for f in row {
            assert!((f - 1.0).abs() < 1e-7, "{f}");
        }
    }
}

#[test]
fn rb_rejects_empty_depths() {
    let dev = DeviceParams::long_t1_qubit();
    let cfg = RbConfig::new(vec![], 5, RbErrorModel::Lindblad);
    assert!(run_rb(&dev, &cfg).is_err());
}
