//! Qubit-only model with effective rates, on the Bloch vector.
//!
//! Convention: `z = P_0 − P_1`, a drive of phase `φ` rotates about
//! `(cos φ, sin φ, 0)`, and a detuning `δ` (qubit above frame) precesses
//! `x + i y` as `e^{−iδt}`.

use nalgebra::{Matrix4, Vector4};

use crate::device::CoherenceBudget;

use super::PulseEnvelope;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bloch {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Bloch {
    pub const GROUND: Self = Self {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };
    pub const EXCITED: Self = Self {
        x: 0.0,
        y: 0.0,
        z: -1.0,
    };

    pub fn p_e(&self) -> f64 {
        (0.5 * (1.0 - self.z)).clamp(0.0, 1.0)
    }

    /// Ideal rotation by `theta` about the equatorial axis at angle `phi`.
    pub fn rotate(self, theta: f64, phi: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let (nx, ny) = (phi.cos(), phi.sin());
        let v = [self.x, self.y, self.z];
        let n = [nx, ny, 0.0];
        let dot = n[0] * v[0] + n[1] * v[1];
        let cross = [n[1] * v[2], -n[0] * v[2], n[0] * v[1] - n[1] * v[0]];
        let r: Vec<f64> = (0..3)
            .map(|i| v[i] * c + cross[i] * s + n[i] * dot * (1.0 - c))
            .collect();
        Self {
            x: r[0],
            y: r[1],
            z: r[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedQubit {
    /// Energy relaxation rate `1/T1`.
    pub gamma1: f64,
    /// Coherence decay rate `1/(2 T1) + 1/Tφ` from white-noise sources only.
    pub gamma2: f64,
}

/// RK4 step used for shaped pulses.
pub const PULSE_STEP: f64 = 0.1e-9;

impl ReducedQubit {
    pub fn new(t1: f64, t_phi: f64) -> Self {
        let gamma1 = if t1.is_finite() { 1.0 / t1 } else { 0.0 };
        let phi = if t_phi.is_finite() { 1.0 / t_phi } else { 0.0 };
        Self {
            gamma1,
            gamma2: 0.5 * gamma1 + phi,
        }
    }

    pub fn from_budget(b: &CoherenceBudget) -> Self {
        Self::new(b.t1, b.t_phi)
    }

    pub fn ideal() -> Self {
        Self {
            gamma1: 0.0,
            gamma2: 0.0,
        }
    }

    /// Free evolution for `duration` accumulating detuning phase `phase = ∫δ dt`.
    pub fn idle(&self, b: Bloch, duration: f64, phase: f64) -> Bloch {
        let decay2 = (-self.gamma2 * duration).exp();
        let (s, c) = phase.sin_cos();
        // (x + i y) · e^{−iΦ}
        let x = (b.x * c + b.y * s) * decay2;
        let y = (b.y * c - b.x * s) * decay2;
        let z = 1.0 + (b.z - 1.0) * (-self.gamma1 * duration).exp();
        Bloch { x, y, z }
    }

    fn derivative(&self, b: [f64; 3], omega: f64, phi: f64, delta: f64) -> [f64; 3] {
        let (wx, wy, wz) = (omega * phi.cos(), omega * phi.sin(), -delta);
        [
            wy * b[2] - wz * b[1] - self.gamma2 * b[0],
            wz * b[0] - wx * b[2] - self.gamma2 * b[1],
            wx * b[1] - wy * b[0] - self.gamma1 * (b[2] - 1.0),
        ]
    }

    /// Shaped pulse at constant detuning `delta` (rad/s), RK4 with step ≤ [`PULSE_STEP`].
    pub fn pulse(&self, b: Bloch, env: &PulseEnvelope, delta: f64) -> Bloch {
        let n = ((env.duration / PULSE_STEP).ceil() as usize).max(8);
        let h = env.duration / n as f64;
        let mut y = [b.x, b.y, b.z];
        let phi = env.phase;
        for k in 0..n {
            let t = k as f64 * h;
            let w0 = env.rabi_rate(t);
            let wm = env.rabi_rate(t + 0.5 * h);
            let w1 = env.rabi_rate(t + h);
            let k1 = self.derivative(y, w0, phi, delta);
            let y2 = add(y, k1, 0.5 * h);
            let k2 = self.derivative(y2, wm, phi, delta);
            let y3 = add(y, k2, 0.5 * h);
            let k3 = self.derivative(y3, wm, phi, delta);
            let y4 = add(y, k3, h);
            let k4 = self.derivative(y4, w1, phi, delta);
            for i in 0..3 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        Bloch {
            x: y[0],
            y: y[1],
            z: y[2],
        }
    }

    /// Exact propagation under a constant drive `omega` with phase `phi` and detuning `delta`.
    pub fn drive(&self, b: Bloch, omega: f64, phi: f64, delta: f64, duration: f64) -> Bloch {
        let (wx, wy, wz) = (omega * phi.cos(), omega * phi.sin(), -delta);
        let (g1, g2) = (self.gamma1, self.gamma2);
        #[rustfmt::skip]
        let gen = Matrix4::new(
            -g2, -wz,  wy, 0.0,
             wz, -g2, -wx, 0.0,
            -wy,  wx, -g1,  g1,
            0.0, 0.0, 0.0, 0.0,
        );
        let v = (gen * duration).exp() * Vector4::new(b.x, b.y, b.z, 1.0);
        Bloch {
            x: v[0],
            y: v[1],
            z: v[2],
        }
    }
}

fn add(y: [f64; 3], k: [f64; 3], h: f64) -> [f64; 3] {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]]
}

/// Peak rate of a Gaussian rotating by `angle` in the ideal reduced model,
/// refined against the RK4 pulse so discretization error is absorbed.
pub fn reduced_pulse_amplitude(sigma: f64, truncation: f64, angle: f64) -> f64 {
    let q = ReducedQubit::ideal();
    let a0 = super::area_amplitude(sigma, truncation, angle);
    let env = PulseEnvelope::gaussian(sigma, truncation, a0, 0.0);
    // Rotation angle about x from ground, unwrapped to (0, 2π).
    let angle_of = |amp: f64| {
        let b = q.pulse(Bloch::GROUND, &env.with_amplitude(amp), 0.0);
        (-b.y).atan2(b.z).rem_euclid(std::f64::consts::TAU)
    };
    let (mut lo, mut hi) = (0.9 * a0, 1.1 * a0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if angle_of(mid) < angle {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
