//! Property-based checks of model invariants.

use std::f64::consts::TAU;

use proptest::prelude::*;

use cqedsim::device::{
    sample_noise_trajectory, ChargeNoiseModel, DeviceParams, FrequencyNoise, ResonatorParams,
    VoltageTuningMap,
};
use cqedsim::dynamics::{
    dissipationless, evolve, Bloch, EvolveOptions, PulseEnvelope, PulseSequence, ReducedQubit,
};
use cqedsim::protocols::clifford::clifford_sequence;
use cqedsim::protocols::{readout_fidelity, IqRecord, PrepState};
use cqedsim::quantum::{build_space, DensityMatrix};
use cqedsim::rng::stream_rng;
use cqedsim::spectroscopy::{ac_stark_shift, transmission, QubitLine};
use cqedsim::C64;

fn norm(b: &Bloch) -> f64 {
    (b.x * b.x + b.y * b.y + b.z * b.z).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transmission_is_passive(
        kappa_mhz in 0.05f64..5.0,
        g_mhz in 0.0f64..10.0,
        gamma_mhz in 0.0f64..3.0,
        detuning_mhz in -50.0f64..50.0,
        probe_mhz in -20.0f64..20.0,
    ) {
        let res = ResonatorParams::new(6.4e9, TAU * kappa_mhz * 1e6).unwrap();
        let q = [QubitLine { f_q: 6.4e9 + detuning_mhz * 1e6, g: TAU * g_mhz * 1e6, gamma: TAU * gamma_mhz * 1e6 }];
        let a = transmission(&res, &q, 6.4e9 + probe_mhz * 1e6);
        prop_assert!(a.norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn quadratic_map_is_even_and_flat_at_the_sweet_spot(dv in -0.1f64..0.1, curvature in 1e6f64..1e12) {
        let map = VoltageTuningMap::quadratic(6.39e9, -0.27, curvature).unwrap();
        prop_assert_eq!(map.frequency_at(dv), map.frequency_at(-dv));
        prop_assert!(map.frequency_at(dv) >= map.frequency_at(0.0));
        prop_assert_eq!(map.slope(0.0), 0.0);
    }

    #[test]
    fn noise_phase_is_additive(seed in 0u64..1000, a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let mut t = [a, b, c].map(|x| x * 2e-6);
        t.sort_by(f64::total_cmp);
        let offsets: Vec<f64> = {
            let model = ChargeNoiseModel::log_ladder(1e-4, 1e-4, 1e3, 1e6, 4, seed);
            sample_noise_trajectory(&model, 2e-6, 1e-8, 0).iter().map(|v| v * 1e9).collect()
        };
        let f = FrequencyNoise::new(1e-8, offsets);
        let whole = f.phase(t[0], t[2]);
        let split = f.phase(t[0], t[1]) + f.phase(t[1], t[2]);
        prop_assert!((whole - split).abs() <= 1e-9 * (1.0 + whole.abs()));
    }

    #[test]
    fn bloch_rotations_preserve_length(theta in -10.0f64..10.0, phi in -10.0f64..10.0, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let z2 = 1.0 - 0.5 * (x * x + y * y);
        let b = Bloch { x: x / 2f64.sqrt(), y: y / 2f64.sqrt(), z: z2.max(0.0).sqrt() };
        let r = b.rotate(theta, phi);
        prop_assert!((norm(&r) - norm(&b)).abs() < 1e-12);
    }

    #[test]
    fn relaxation_keeps_populations_physical(
        t1_us in 1.0f64..200.0,
        tphi_us in 1.0f64..1000.0,
        omega_mhz in 0.0f64..20.0,
        delta_mhz in -5.0f64..5.0,
        dur_ns in 0.0f64..5000.0,
    ) {
        let q = ReducedQubit::new(t1_us * 1e-6, tphi_us * 1e-6);
        let b = q.drive(Bloch::GROUND, TAU * omega_mhz * 1e6, 0.3, TAU * delta_mhz * 1e6, dur_ns * 1e-9);
        prop_assert!(norm(&b) <= 1.0 + 1e-9);
        let p = 0.5 * (1.0 - b.z);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
    }

    #[test]
    fn clifford_sequences_invert(m in 1usize..200, seed in 0u64..10_000) {
        let mut rng = stream_rng(seed, 0);
        let (gates, recovery) = clifford_sequence(m, &mut rng);
        let mut b = Bloch::GROUND;
        for g in gates.iter().chain(std::iter::once(&recovery)) {
            for r in &g.decomposition {
                b = b.rotate(r.angle(), r.phase());
            }
        }
        prop_assert!((b.z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn readout_fidelity_ignores_rigid_motion(angle in 0.0f64..TAU, dx in -5.0f64..5.0, dy in -5.0f64..5.0, seed in 0u64..100) {
        let mut rng = stream_rng(seed, 1);
        use rand::Rng;
        let cloud = |cx: f64, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<(f64, f64)> {
            (0..300).map(|_| (cx + rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
        };
        let a = cloud(0.0, &mut rng);
        let b = cloud(0.7, &mut rng);
        let rec = |s: Vec<(f64, f64)>, prep| IqRecord { shots: s, prep, integration: 1.0 };
        let f0 = readout_fidelity(&rec(a.clone(), PrepState::State0), &rec(b.clone(), PrepState::State1)).unwrap().fidelity;
        let rot = C64::from_polar(1.0, angle);
        let mv = |s: &[(f64, f64)]| s.iter().map(|&(i, q)| { let z = C64::new(i, q) * rot + C64::new(dx, dy); (z.re, z.im) }).collect::<Vec<_>>();
        let f1 = readout_fidelity(&rec(mv(&a), PrepState::State0), &rec(mv(&b), PrepState::State1)).unwrap().fidelity;
        prop_assert!((f0 - f1).abs() < 1e-9);
    }

    #[test]
    fn ac_stark_shift_is_linear(chi_mhz in -2.0f64..2.0, n in 0.0f64..100.0, k in 0.0f64..5.0) {
        let chi = TAU * chi_mhz * 1e6;
        let lhs = ac_stark_shift(chi, k * n);
        let rhs = k * ac_stark_shift(chi, n);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn evolution_preserves_trace_and_positivity(amp in 0.0f64..2e8, phase in 0.0f64..TAU, t_ns in 50.0f64..400.0) {
        let dev = DeviceParams::long_t1_qubit();
        let space = build_space(3, 1).unwrap();
        let mut seq = PulseSequence::default();
        seq.append(0, PulseEnvelope::gaussian(8e-9, 2.5, amp, phase));
        let opts = EvolveOptions { times: vec![t_ns * 1e-9], ..EvolveOptions::default() };
        for d in [dev.clone(), dissipationless(&dev)] {
            let res = evolve(&DensityMatrix::ground(space), &d, &seq, &[], &opts).unwrap();
            let rho = &res.states[0];
            prop_assert!((rho.trace().re - 1.0).abs() < 1e-8);
            prop_assert!(rho.min_eigenvalue() > -1e-8);
        }
    }
}
