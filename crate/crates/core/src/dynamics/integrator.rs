//! Adaptive Dormand–Prince 5(4) stepper on dense complex matrices.

use crate::quantum::CMatrix;

use super::{DynamicsError, Tolerances};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo(y: &CMatrix, h: f64, terms: &[(f64, &CMatrix)]) -> CMatrix {
    let mut out = y.clone();
    for (c, k) in terms {
        if *c != 0.0 {
            out.zip_apply(k, |o, v| *o += v * (h * c));
        }
    }
    out
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1`, returning `y(t1)` and the
/// number of accepted steps. `h_hint` carries the last step size between calls.
pub(crate) fn dopri5<F>(
    f: F,
    t0: f64,
    t1: f64,
    y0: &CMatrix,
    tol: &Tolerances,
    h_hint: &mut f64,
) -> Result<(CMatrix, usize), DynamicsError>
where
    F: Fn(f64, &CMatrix) -> CMatrix,
{
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok((y0.clone(), 0));
    }
    let mut t = t0;
    let mut y = y0.clone();
    let mut h = if *h_hint > 0.0 {
        h_hint.min(span)
    } else {
        span.min(1e-9)
    };
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    let mut attempts = 0usize;
    let h_min = 1e-16 * span.max(t1.abs());

    while t < t1 {
        attempts += 1;
        if attempts > tol.max_steps {
            return Err(DynamicsError::Integrator {
                t,
                step: h,
                reason: format!("exceeded {} step attempts", tol.max_steps),
            });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, &combo(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &combo(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &combo(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &combo(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &combo(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = combo(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = f(t + h, &y_new);

        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                .norm()
                * h;
            let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max(e / scale);
        }
        if !err.is_finite() {
            return Err(DynamicsError::Integrator {
                t,
                step: h,
                reason: "non-finite error estimate".into(),
            });
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k7;
            steps += 1;
            if !last {
                *h_hint = h;
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < h_min && t < t1 {
            return Err(DynamicsError::Integrator {
                t,
                step: h,
                reason: "step size underflow".into(),
            });
        }
    }
    Ok((y, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        // y' = -i ω y
        let w = 2.0e8;
        let y0 = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let tol = Tolerances::default();
        let mut h = 0.0;
        let (y, _) = dopri5(|_, y| y * C64::new(0.0, -w), 0.0, 1e-6, &y0, &tol, &mut h).unwrap();
        let exact = C64::from_polar(1.0, -w * 1e-6);
        assert!((y[0] - exact).norm() < 1e-6);
    }
}
