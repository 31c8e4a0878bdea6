use cqedsim_web::{coherence_budget, two_qubit_map, vacuum_rabi_map};

#[test]
fn rabi_map_has_requested_shape_and_is_passive() {
    let m = vacuum_rabi_map(-40.0, 40.0, 9, 12.0, 31).unwrap();
    assert_eq!(m.len(), 9 * 31);
    assert!(m.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
}

#[test]
fn rabi_map_is_symmetric_in_voltage() {
    let (n_dv, n_f) = (11, 21);
    let m = vacuum_rabi_map(-30.0, 30.0, n_dv, 10.0, n_f).unwrap();
    for k in 0..n_dv {
        for i in 0..n_f {
            let a = m[k * n_f + i];
            let b = m[(n_dv - 1 - k) * n_f + i];
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn bad_grids_are_rejected() {
    assert!(vacuum_rabi_map(1.0, -1.0, 5, 10.0, 5).is_err());
    assert!(two_qubit_map(1).is_err());
}

#[test]
fn plane_map_dips_below_unity() {
    let m = two_qubit_map(41).unwrap();
    assert_eq!(m.len(), 41 * 41);
    let min = m.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min < 0.5, "min {min}");
}

fn field(json: &str, key: &str) -> f64 {
    let start = json.find(&format!("\"{key}\":")).unwrap() + key.len() + 3;
    let rest = &json[start..];
    let end = rest.find([',', '}']).unwrap();
    rest[..end].parse().unwrap()
}

#[test]
fn budget_matches_purcell_formula() {
    let (kappa, g, delta) = (0.5, 2.0, 200.0);
    let json = coherence_budget(kappa, g, delta, 0.0, 0.0).unwrap();
    // Γ_R = κ g²/Δ² in angular units.
    let w = std::f64::consts::TAU * 1e6;
    let purcell_us = 1e6 / ((kappa * w) * (g * w).powi(2) / (delta * w).powi(2));
    assert!((field(&json, "purcell_us") / purcell_us - 1.0).abs() < 1e-12);
    assert!((field(&json, "t1_us") / purcell_us - 1.0).abs() < 1e-12);
    assert!((field(&json, "t2_us") / (2.0 * purcell_us) - 1.0).abs() < 1e-12);
    assert!((field(&json, "chi_over_2pi_mhz") - g * g / delta).abs() < 1e-9);
}

#[test]
fn budget_sweet_spot_values() {
    let json = coherence_budget(0.46, 2.3, -34.7, 125.0, 0.0).unwrap();
    let t1 = field(&json, "t1_us");
    assert!((t1 - 48.3).abs() < 0.2, "{json}");
    assert!(coherence_budget(0.46, 2.3, 0.0, 0.0, 0.0).is_err());
}
