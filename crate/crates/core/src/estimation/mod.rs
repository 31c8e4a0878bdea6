//! Least-squares fit kernels.
//!
//! Every fitter rescales its data to unit spans before optimizing and maps the
//! parameters back afterwards, so scaling `y` by a constant scales only the
//! amplitude-like parameters. Initial guesses:
//!
//! - decays: log-linear regression against a baseline just beyond the data range;
//! - oscillations: periodogram peak, then linear least squares for amplitude and phase;
//! - benchmarking curves: the fully depolarized asymptote `B = 1/2`;
//! - doublets: the two highest local maxima and the half-maximum width.

mod lm;

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use thiserror::Error;

pub use lm::{covariance, levenberg_marquardt, CurveModel, LmOptions, LmOutcome};

use crate::spectroscopy::find_peaks;
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("x and y lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("data contain non-finite values")]
    NonFinite,
    #[error("no spectral peak above the noise floor")]
    NoSpectralPeak,
    #[error("spectrum does not contain two resolvable maxima")]
    UnresolvedDoublet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<&'static str>,
    pub params: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub residual_norm: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Data carry no information about the shape parameters (flat curve).
    pub degenerate: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| *n == name)
            .map(|k| self.params[k])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| *n == name)
            .map(|k| self.std_errors[k])
    }

    fn degenerate(names: Vec<&'static str>, params: Vec<f64>) -> Self {
        let n = names.len();
        Self {
            names,
            params,
            std_errors: vec![f64::NAN; n],
            covariance: DMatrix::from_element(n, n, f64::NAN),
            residual_norm: 0.0,
            gradient_norm: 0.0,
            converged: false,
            degenerate: true,
        }
    }
}

fn check_data(x: &[f64], y: &[f64], need: usize) -> Result<(), FitError> {
    if x.len() != y.len() {
        return Err(FitError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < need {
        return Err(FitError::TooFewPoints { need, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    Ok(())
}

fn is_flat(y: &[f64]) -> bool {
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    hi - lo <= 1e-12 * scale
}

struct Normalized {
    u: Vec<f64>,
    v: Vec<f64>,
    x_span: f64,
    y_scale: f64,
}

fn normalize(x: &[f64], y: &[f64]) -> Normalized {
    let x_span = x
        .iter()
        .cloned()
        .fold(0.0, |a: f64, b| a.max(b.abs()))
        .max(f64::MIN_POSITIVE);
    let y_scale = y
        .iter()
        .cloned()
        .fold(0.0, |a: f64, b| a.max(b.abs()))
        .max(f64::MIN_POSITIVE);
    Normalized {
        u: x.iter().map(|v| v / x_span).collect(),
        v: y.iter().map(|v| v / y_scale).collect(),
        x_span,
        y_scale,
    }
}

/// Weighted least-squares line `y = a + b x`.
fn line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Option<(f64, f64)> {
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let b = (sw * sxy - sx * sy) / det;
    Some(((sy - b * sx) / sw, b))
}

/// Finishes a fit done in normalized units. `map` converts normalized
/// parameters and their Jacobian-transformed covariance to physical ones.
fn finish(
    names: Vec<&'static str>,
    out: LmOutcome,
    m: usize,
    y_scale: f64,
    to_physical: impl Fn(&[f64]) -> Vec<f64>,
) -> FitResult {
    let n = out.params.len();
    let cov_norm = covariance(&out.jtj, out.residual_norm, m);
    let phys = to_physical(&out.params);
    // Linearized transform of the covariance via a numerical Jacobian of `to_physical`.
    let mut jt = DMatrix::zeros(phys.len(), n);
    for k in 0..n {
        let h = 1e-7 * out.params[k].abs().max(1e-7);
        let mut p_hi = out.params.clone();
        let mut p_lo = out.params.clone();
        p_hi[k] += h;
        p_lo[k] -= h;
        let hi = to_physical(&p_hi);
        let lo = to_physical(&p_lo);
        for i in 0..phys.len() {
            jt[(i, k)] = (hi[i] - lo[i]) / (2.0 * h);
        }
    }
    let cov = &jt * cov_norm * jt.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    FitResult {
        std_errors: (0..phys.len())
            .map(|k| cov[(k, k)].max(0.0).sqrt())
            .collect(),
        names,
        params: phys,
        covariance: cov,
        residual_norm: out.residual_norm * y_scale,
        gradient_norm: out.gradient_norm,
        converged: out.converged,
        degenerate: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecayEnvelope {
    #[default]
    Exponential,
    Gaussian,
}

/// `A·exp(-(k u)^n) + C` in normalized units, `n` = 1 or 2.
struct DecayModel {
    envelope: DecayEnvelope,
}

impl CurveModel for DecayModel {
    fn n_params(&self) -> usize {
        3
    }

    fn value(&self, p: &[f64], u: f64) -> f64 {
        let s = p[1] * u;
        match self.envelope {
            DecayEnvelope::Exponential => p[0] * (-s).exp() + p[2],
            DecayEnvelope::Gaussian => p[0] * (-s * s).exp() + p[2],
        }
    }

    fn gradient(&self, p: &[f64], u: f64, out: &mut [f64]) {
        let s = p[1] * u;
        match self.envelope {
            DecayEnvelope::Exponential => {
                let e = (-s).exp();
                out[0] = e;
                out[1] = -p[0] * u * e;
            }
            DecayEnvelope::Gaussian => {
                let e = (-s * s).exp();
                out[0] = e;
                out[1] = -2.0 * p[0] * s * u * e;
            }
        }
        out[2] = 1.0;
    }

    fn project(&self, p: &mut [f64]) {
        p[1] = p[1].abs().max(1e-12);
    }
}

/// Fits `A·exp(-x/T) + C`. Parameters: `amplitude`, `decay_time`, `offset`.
pub fn fit_exp_decay(x: &[f64], y: &[f64]) -> Result<FitResult, FitError> {
    fit_decay(x, y, DecayEnvelope::Exponential)
}

/// Fits `A·exp(-x/T) + C` or `A·exp(-(x/T)²) + C`.
pub fn fit_decay(x: &[f64], y: &[f64], envelope: DecayEnvelope) -> Result<FitResult, FitError> {
    check_data(x, y, 4)?;
    let names = vec!["amplitude", "decay_time", "offset"];
    if is_flat(y) {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        return Ok(FitResult::degenerate(names, vec![0.0, f64::INFINITY, mean]));
    }
    let nd = normalize(x, y);
    let model = DecayModel { envelope };

    let mut starts = Vec::new();
    // Log-linear regression against a baseline just past the final value.
    let (first, last) = (nd.v[0], *nd.v.last().unwrap());
    let lo = nd.v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = nd.v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let c0 = if first >= last {
        lo - 0.02 * range
    } else {
        hi + 0.02 * range
    };
    let sign = if first >= last { 1.0 } else { -1.0 };
    let lx: Vec<f64> =
        nd.u.iter()
            .map(|&u| {
                if envelope == DecayEnvelope::Gaussian {
                    u * u
                } else {
                    u
                }
            })
            .collect();
    let ly: Vec<f64> =
        nd.v.iter()
            .map(|&v| (sign * (v - c0)).max(1e-12).ln())
            .collect();
    let w: Vec<f64> = nd.v.iter().map(|&v| (sign * (v - c0)).max(0.0)).collect();
    if let Some((a, b)) = line_fit(&lx, &ly, &w) {
        if b < 0.0 {
            let k = match envelope {
                DecayEnvelope::Exponential => -b,
                DecayEnvelope::Gaussian => (-b).sqrt(),
            };
            starts.push(vec![sign * a.exp(), k, c0]);
        }
    }
    for k in [0.3, 1.0, 3.0, 10.0] {
        starts.push(vec![first - last, k, last]);
    }

    let best = starts
        .iter()
        .map(|s| levenberg_marquardt(&model, &nd.u, &nd.v, s, LmOptions::default()))
        .min_by(|a, b| a.residual_norm.total_cmp(&b.residual_norm))
        .expect("at least one start");
    let (xs, ys) = (nd.x_span, nd.y_scale);
    Ok(finish(names, best, x.len(), ys, |p| {
        vec![p[0] * ys, xs / p[1], p[2] * ys]
    }))
}

/// `A·exp(-k u)·cos(2π ν u + φ) + C`.
struct DampedCosine;

impl CurveModel for DampedCosine {
    fn n_params(&self) -> usize {
        5
    }

    fn value(&self, p: &[f64], u: f64) -> f64 {
        p[0] * (-p[1] * u).exp() * (TAU * p[2] * u + p[3]).cos() + p[4]
    }

    fn gradient(&self, p: &[f64], u: f64, out: &mut [f64]) {
        let e = (-p[1] * u).exp();
        let arg = TAU * p[2] * u + p[3];
        let (s, c) = arg.sin_cos();
        out[0] = e * c;
        out[1] = -p[0] * u * e * c;
        out[2] = -p[0] * e * s * TAU * u;
        out[3] = -p[0] * e * s;
        out[4] = 1.0;
    }

    fn project(&self, p: &mut [f64]) {
        p[1] = p[1].max(0.0);
    }
}

/// Periodogram peak `(ν, power, median power)` in cycles per unit of `u`.
fn periodogram_peak(u: &[f64], v: &[f64]) -> (f64, f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let span = u.last().unwrap() - u[0];
    let nyquist = 0.5 * (u.len() - 1) as f64 / span;
    let step = 1.0 / (8.0 * span);
    let mut powers = Vec::new();
    let mut best = (0.0, 0.0);
    let mut nu = step;
    while nu <= nyquist {
        let z: C64 = u
            .iter()
            .zip(v)
            .map(|(&ui, &vi)| C64::from_polar(vi - mean, -TAU * nu * ui))
            .sum();
        let p = z.norm_sqr();
        if p > best.1 {
            best = (nu, p);
        }
        powers.push(p);
        nu += step;
    }
    powers.sort_by(f64::total_cmp);
    let median = powers.get(powers.len() / 2).copied().unwrap_or(0.0);
    (best.0, best.1, median)
}

/// Fits `A·exp(-x/T)·cos(2π f x + φ) + C`.
/// Parameters: `amplitude`, `frequency`, `phase`, `decay_time`, `offset`.
pub fn fit_decaying_sinusoid(x: &[f64], y: &[f64]) -> Result<FitResult, FitError> {
    check_data(x, y, 8)?;
    let names = vec!["amplitude", "frequency", "phase", "decay_time", "offset"];
    if is_flat(y) {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        return Ok(FitResult::degenerate(
            names,
            vec![0.0, f64::NAN, f64::NAN, f64::INFINITY, mean],
        ));
    }
    let nd = normalize(x, y);
    let (nu, peak, median) = periodogram_peak(&nd.u, &nd.v);
    if nu == 0.0 || peak < 10.0 * median {
        return Err(FitError::NoSpectralPeak);
    }
    let span = nd.u.last().unwrap() - nd.u[0];
    let mut best: Option<LmOutcome> = None;
    for k0 in [0.1 / span, 1.0 / span, 4.0 / span] {
        // Linear least squares for (a cos + b sin)·envelope + C at fixed ν and k.
        let rows: Vec<[f64; 3]> =
            nd.u.iter()
                .map(|&u| {
                    let e = (-k0 * u).exp();
                    let (s, c) = (TAU * nu * u).sin_cos();
                    [e * c, e * s, 1.0]
                })
                .collect();
        let a = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
        let b = nalgebra::DVector::from_column_slice(&nd.v);
        let Ok(sol) = a.svd(true, true).solve(&b, 1e-12) else {
            continue;
        };
        let amp = sol[0].hypot(sol[1]);
        let phi = (-sol[1]).atan2(sol[0]);
        let start = [amp, k0, nu, phi, sol[2]];
        let out = levenberg_marquardt(&DampedCosine, &nd.u, &nd.v, &start, LmOptions::default());
        if best
            .as_ref()
            .is_none_or(|b| out.residual_norm < b.residual_norm)
        {
            best = Some(out);
        }
    }
    let mut best = best.ok_or(FitError::NoSpectralPeak)?;
    if best.params[0] < 0.0 {
        best.params[0] = -best.params[0];
        best.params[3] += PI;
    }
    if best.params[2] < 0.0 {
        best.params[2] = -best.params[2];
        best.params[3] = -best.params[3];
    }
    best.params[3] = (best.params[3] + PI).rem_euclid(TAU) - PI;
    let (xs, ys) = (nd.x_span, nd.y_scale);
    Ok(finish(names, best, x.len(), ys, |p| {
        vec![p[0] * ys, p[2] / xs, p[3], xs / p[1], p[4] * ys]
    }))
}

struct PowerLaw;

impl CurveModel for PowerLaw {
    fn n_params(&self) -> usize {
        3
    }

    fn value(&self, p: &[f64], m: f64) -> f64 {
        p[0] * p[1].powf(m) + p[2]
    }

    fn gradient(&self, p: &[f64], m: f64, out: &mut [f64]) {
        let pm = p[1].powf(m);
        out[0] = pm;
        out[1] = if m == 0.0 {
            0.0
        } else {
            p[0] * m * p[1].powf(m - 1.0)
        };
        out[2] = 1.0;
    }

    fn project(&self, p: &mut [f64]) {
        p[1] = p[1].clamp(0.0, 1.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    /// `1 - (1 - p)/2`.
    pub f_gate: f64,
    pub degenerate: bool,
    pub fit: FitResult,
}

/// Fits `A·p^M + B` with `0 ≤ p ≤ 1`.
pub fn fit_rb_power_law(depths: &[f64], fidelity: &[f64]) -> Result<RbFit, FitError> {
    check_data(depths, fidelity, 3)?;
    let names = vec!["a", "p", "b"];
    if is_flat(fidelity) {
        let mean = fidelity.iter().sum::<f64>() / fidelity.len() as f64;
        let fit = FitResult::degenerate(names, vec![0.0, 1.0, mean]);
        return Ok(RbFit {
            a: 0.0,
            p: 1.0,
            b: mean,
            f_gate: 1.0,
            degenerate: true,
            fit,
        });
    }
    let b0 = fidelity.iter().cloned().fold(0.5, f64::min) - 1e-3;
    let w: Vec<f64> = fidelity.iter().map(|f| (f - b0).max(0.0)).collect();
    let ly: Vec<f64> = fidelity.iter().map(|f| (f - b0).max(1e-12).ln()).collect();
    let (a0, p0) = match line_fit(depths, &ly, &w) {
        Some((a, slope)) => (a.exp(), slope.exp().min(1.0)),
        None => (fidelity[0] - b0, 0.99),
    };
    let out = levenberg_marquardt(
        &PowerLaw,
        depths,
        fidelity,
        &[a0, p0, b0],
        LmOptions::default(),
    );
    let fit = finish(names, out, depths.len(), 1.0, |p| p.to_vec());
    let (a, p, b) = (fit.params[0], fit.params[1], fit.params[2]);
    Ok(RbFit {
        a,
        p,
        b,
        f_gate: 1.0 - (1.0 - p) / 2.0,
        degenerate: p >= 1.0,
        fit,
    })
}

/// On-resonance vacuum-Rabi transmission `S·|T|²` in ordinary-frequency units.
struct DoubletModel {
    kappa: Option<f64>,
}

impl DoubletModel {
    fn unpack(&self, p: &[f64]) -> (f64, f64, f64, f64, f64) {
        let kappa = self.kappa.unwrap_or_else(|| p[4]);
        (p[0], p[1], p[2], p[3], kappa)
    }

    fn parts(&self, p: &[f64], f: f64) -> (C64, [C64; 4]) {
        let (_, f0, g, gamma, kappa) = self.unpack(p);
        let i = C64::i();
        let delta = f0 - f;
        let e = i * delta + 0.5 * gamma;
        let d = i * delta + 0.5 * kappa + g * g / e;
        let t = 0.5 * kappa / d;
        let dt_dd = -0.5 * kappa / (d * d);
        let d_f0 = dt_dd * (i - g * g * i / (e * e));
        let d_g = dt_dd * (2.0 * g / e);
        let d_gamma = dt_dd * (-0.5 * g * g / (e * e));
        let d_kappa = 0.5 / d + dt_dd * 0.5;
        (t, [d_f0, d_g, d_gamma, d_kappa])
    }
}

impl CurveModel for DoubletModel {
    fn n_params(&self) -> usize {
        if self.kappa.is_some() {
            4
        } else {
            5
        }
    }

    fn value(&self, p: &[f64], f: f64) -> f64 {
        p[0] * self.parts(p, f).0.norm_sqr()
    }

    fn gradient(&self, p: &[f64], f: f64, out: &mut [f64]) {
        let (t, d) = self.parts(p, f);
        out[0] = t.norm_sqr();
        for k in 0..(self.n_params() - 1) {
            out[k + 1] = 2.0 * p[0] * (t.conj() * d[k]).re;
        }
    }

    fn project(&self, p: &mut [f64]) {
        for v in p.iter_mut().skip(2) {
            *v = v.abs().max(1e-9);
        }
    }
}

#[derive(Debug, Clone)]
pub struct DoubletFit {
    /// Ordinary frequencies (Hz): `g/2π`, `γ/2π`, `κ/2π`, and the common center.
    pub g: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub center: f64,
    pub scale: f64,
    pub fit: FitResult,
}

/// Fits the on-resonance transmission `|A/A0|²(f_p)`.
/// `kappa` (Hz, i.e. κ/2π) is held fixed when given, co-fitted otherwise.
pub fn fit_rabi_doublet(
    f_p: &[f64],
    magnitude2: &[f64],
    kappa: Option<f64>,
) -> Result<DoubletFit, FitError> {
    check_data(f_p, magnitude2, 8)?;
    let peaks = find_peaks(magnitude2, 0.3);
    if peaks.len() < 2 {
        return Err(FitError::UnresolvedDoublet);
    }
    let mut by_height = peaks.clone();
    by_height.sort_by(|&a, &b| magnitude2[b].total_cmp(&magnitude2[a]));
    let (i1, i2) = {
        let (a, b) = (by_height[0], by_height[1]);
        (a.min(b), a.max(b))
    };
    const UNIT: f64 = 1e6;
    let mid = 0.5 * (f_p[i1] + f_p[i2]);
    let nu: Vec<f64> = f_p.iter().map(|f| (f - mid) / UNIT).collect();
    let y_scale = magnitude2.iter().cloned().fold(0.0, f64::max);
    let v: Vec<f64> = magnitude2.iter().map(|y| y / y_scale).collect();

    let g0 = 0.5 * (nu[i2] - nu[i1]);
    let half = 0.5 * v[i1];
    let mut lo = i1;
    while lo > 0 && v[lo] > half {
        lo -= 1;
    }
    let mut hi = i1;
    while hi + 1 < v.len() && v[hi] > half && hi < i2 {
        hi += 1;
    }
    let fwhm = (nu[hi] - nu[lo]).max(1e-6);
    let kappa_n = kappa.map(|k| k / UNIT);
    let (gamma0, kappa0) = match kappa_n {
        Some(k) => ((2.0 * fwhm - k).max(0.1 * fwhm), k),
        None => (fwhm, fwhm),
    };
    let model = DoubletModel { kappa: kappa_n };
    let mut start = vec![1.0, 0.0, g0, gamma0];
    if kappa_n.is_none() {
        start.push(kappa0);
    }
    let shape: f64 = nu
        .iter()
        .zip(&v)
        .map(|(&f, &y)| y * model.value(&start, f))
        .sum::<f64>()
        / nu.iter()
            .map(|&f| model.value(&start, f).powi(2))
            .sum::<f64>();
    start[0] = shape;
    let out = levenberg_marquardt(&model, &nu, &v, &start, LmOptions::default());
    let mut names = vec!["scale", "center", "g", "gamma"];
    if kappa_n.is_none() {
        names.push("kappa");
    }
    let fit = finish(names, out, f_p.len(), y_scale, |p| {
        let mut q = vec![p[0] * y_scale, mid + p[1] * UNIT, p[2] * UNIT, p[3] * UNIT];
        if p.len() > 4 {
            q.push(p[4] * UNIT);
        }
        q
    });
    Ok(DoubletFit {
        scale: fit.params[0],
        center: fit.params[1],
        g: fit.params[2],
        gamma: fit.params[3],
        kappa: kappa.unwrap_or_else(|| fit.params[4]),
        fit,
    })
}
