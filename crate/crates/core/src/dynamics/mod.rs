//! Lindblad evolution of the driven qubit(s)–resonator system.
//!
//! All operators live in one rotating frame (by default the dressed frequency
//! of qubit 0). A pulse whose carrier is offset from the frame carries a
//! time-dependent phase `φ − 2π δ_c t`, so no frame changes are needed.

mod integrator;
pub mod reduced;

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::device::{DeviceParams, FrequencyNoise};
use crate::quantum::{
    build_space, embed_operator, CMatrix, DensityMatrix, Operator, OperatorKind, QuantumError,
    SpaceDescriptor, Subsystem,
};
use crate::C64;

pub use reduced::{Bloch, ReducedQubit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("integrator failed at t = {t:e} s (step {step:e} s): {reason}")]
    Integrator { t: f64, step: f64, reason: String },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("calibration did not converge: {0}")]
    Calibration(String),
    #[error("state invariant violated at t = {t:e} s: {what}")]
    Invariant { t: f64, what: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    Gaussian,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub shape: PulseShape,
    /// Gaussian width (s); unused for square pulses.
    pub sigma: f64,
    pub duration: f64,
    /// Peak Rabi rate (rad/s).
    pub amplitude: f64,
    pub phase: f64,
    /// Carrier offset from the frame (Hz).
    pub carrier_detuning: f64,
    /// Half-width in units of `sigma`.
    pub truncation: f64,
}

impl PulseEnvelope {
    pub fn gaussian(sigma: f64, truncation: f64, amplitude: f64, phase: f64) -> Self {
        Self {
            shape: PulseShape::Gaussian,
            sigma,
            duration: 2.0 * truncation * sigma,
            amplitude,
            phase,
            carrier_detuning: 0.0,
            truncation,
        }
    }

    pub fn square(duration: f64, amplitude: f64, phase: f64) -> Self {
        Self {
            shape: PulseShape::Square,
            sigma: 0.0,
            duration,
            amplitude,
            phase,
            carrier_detuning: 0.0,
            truncation: 0.0,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.duration > 0.0) {
            return Err(DynamicsError::Schedule("pulse duration must be > 0".into()));
        }
        if self.shape == PulseShape::Gaussian {
            let expected = 2.0 * self.truncation * self.sigma;
            if !(self.sigma > 0.0) || (self.duration - expected).abs() > 1e-12 * expected {
                return Err(DynamicsError::Schedule(
                    "gaussian pulse needs sigma > 0 and duration = 2·truncation·sigma".into(),
                ));
            }
        }
        Ok(())
    }

    /// Rabi rate (rad/s) at time `s` after the pulse start.
    pub fn rabi_rate(&self, s: f64) -> f64 {
        if !(0.0..=self.duration).contains(&s) {
            return 0.0;
        }
        match self.shape {
            PulseShape::Square => self.amplitude,
            PulseShape::Gaussian => {
                let u = (s - 0.5 * self.duration) / self.sigma;
                self.amplitude * (-0.5 * u * u).exp()
            }
        }
    }

    /// `∫ Ω dt` over the pulse (rad).
    pub fn area(&self) -> f64 {
        match self.shape {
            PulseShape::Square => self.amplitude * self.duration,
            PulseShape::Gaussian => {
                self.amplitude
                    * self.sigma
                    * (TAU).sqrt()
                    * erf(self.truncation / std::f64::consts::SQRT_2)
            }
        }
    }
}

/// Peak rate giving rotation `angle` for a truncated Gaussian (area theorem).
pub fn area_amplitude(sigma: f64, truncation: f64, angle: f64) -> f64 {
    angle / (sigma * TAU.sqrt() * erf(truncation / std::f64::consts::SQRT_2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledPulse {
    pub start: f64,
    pub qubit: usize,
    pub envelope: PulseEnvelope,
}

impl ScheduledPulse {
    pub fn end(&self) -> f64 {
        self.start + self.envelope.duration
    }
}

pub const DEFAULT_MIN_GAP: f64 = 20e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub pulses: Vec<ScheduledPulse>,
    /// `(start, length)` of the readout window (s).
    pub readout: Option<(f64, f64)>,
    pub min_gap: f64,
}

impl Default for PulseSequence {
    fn default() -> Self {
        Self {
            pulses: Vec::new(),
            readout: None,
            min_gap: DEFAULT_MIN_GAP,
        }
    }
}

impl PulseSequence {
    pub fn new(min_gap: f64) -> Self {
        Self {
            min_gap,
            ..Self::default()
        }
    }

    /// Appends a pulse `min_gap` after the previous one (or at `t = 0`).
    pub fn append(&mut self, qubit: usize, envelope: PulseEnvelope) -> &mut Self {
        let start = self.pulses.last().map_or(0.0, |p| p.end() + self.min_gap);
        self.pulses.push(ScheduledPulse {
            start,
            qubit,
            envelope,
        });
        self
    }

    /// Inserts a pulse at an explicit start time, keeping the list ordered.
    pub fn insert(
        &mut self,
        start: f64,
        qubit: usize,
        envelope: PulseEnvelope,
    ) -> Result<(), DynamicsError> {
        self.pulses.push(ScheduledPulse {
            start,
            qubit,
            envelope,
        });
        self.pulses.sort_by(|a, b| a.start.total_cmp(&b.start));
        self.validate()
    }

    pub fn end(&self) -> f64 {
        let pulses = self.pulses.iter().map(|p| p.end()).fold(0.0, f64::max);
        let readout = self.readout.map_or(0.0, |(s, l)| s + l);
        pulses.max(readout)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        for p in &self.pulses {
            p.envelope.validate()?;
            if p.start < 0.0 {
                return Err(DynamicsError::Schedule("pulse starts before t = 0".into()));
            }
        }
        for w in self.pulses.windows(2) {
            let gap = w[1].start - w[0].end();
            if gap < self.min_gap - 1e-15 {
                return Err(DynamicsError::Schedule(format!(
                    "pulses at {:e} s and {:e} s are separated by {gap:e} s < {:e} s",
                    w[0].start, w[1].start, self.min_gap
                )));
            }
        }
        if let Some((s, l)) = self.readout {
            if s < 0.0 || !(l > 0.0) {
                return Err(DynamicsError::Schedule(
                    "readout window must have length > 0".into(),
                ));
            }
        }
        Ok(())
    }

    fn active(&self, t: f64) -> impl Iterator<Item = &ScheduledPulse> {
        self.pulses
            .iter()
            .filter(move |p| t >= p.start && t <= p.end())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub tolerances: Tolerances,
    /// Frame frequency (Hz); defaults to the dressed frequency of qubit 0.
    pub frame: Option<f64>,
    /// Output times (s); defaults to the sequence end.
    pub times: Vec<f64>,
    /// Use cached `exp(L Δt)` on undriven, noiseless segments.
    pub cache_idle: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            frame: None,
            times: Vec::new(),
            cache_idle: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// `p_e[j][k]`: population of the dressed states in which qubit `j` is
    /// excited, at `times[k]`. This is what a dispersive readout distinguishes.
    pub p_e: Vec<Vec<f64>>,
    pub steps: usize,
}

impl EvolutionResult {
    pub fn final_p_e(&self, qubit: usize) -> f64 {
        *self.p_e[qubit].last().expect("at least one output time")
    }
}

/// Dressed frequency (Hz) of qubit `j` in the dispersive limit, `f_j + χ_j/2π`.
pub fn dressed_qubit_frequency(device: &DeviceParams, j: usize) -> f64 {
    let f_q = device.qubit_frequency(j);
    let delta = TAU * (f_q - device.resonator.f_r);
    let g = device.qubits[j].g;
    if delta == 0.0 || g == 0.0 {
        f_q
    } else {
        f_q + g * g / delta / TAU
    }
}

/// Static operators of the model in a given frame.
struct SystemModel {
    space: SpaceDescriptor,
    /// `H − (i/2) Σ L†L` without drive and noise.
    heff0: CMatrix,
    jumps: Vec<CMatrix>,
    number: Vec<CMatrix>,
    lowering: Vec<CMatrix>,
    annihilate: CMatrix,
    frame: f64,
}

impl SystemModel {
    fn new(
        device: &DeviceParams,
        space: SpaceDescriptor,
        frame: f64,
    ) -> Result<Self, DynamicsError> {
        if device.qubits.len() != space.n_qubits() || device.bias.len() != space.n_qubits() {
            return Err(DynamicsError::Schedule(format!(
                "device has {} qubit(s), state space has {}",
                device.qubits.len(),
                space.n_qubits()
            )));
        }
        let a = embed_operator(OperatorKind::Annihilate, Subsystem::Mode, space)?.into_matrix();
        let n_mode = embed_operator(OperatorKind::Number, Subsystem::Mode, space)?.into_matrix();
        let mut h = n_mode * C64::from(TAU * (device.resonator.f_r - frame));
        let mut jumps = Vec::new();
        if device.resonator.kappa > 0.0 {
            jumps.push(&a * C64::from(device.resonator.kappa.sqrt()));
        }
        let mut number = Vec::new();
        let mut lowering = Vec::new();
        for (j, q) in device.qubits.iter().enumerate() {
            let sm =
                embed_operator(OperatorKind::SigmaMinus, Subsystem::Qubit(j), space)?.into_matrix();
            let sp = sm.adjoint();
            let nq = &sp * &sm;
            let f_q = device.qubit_frequency(j);
            h += &nq * C64::from(TAU * (f_q - frame));
            h += (a.adjoint() * &sm + &a * &sp) * C64::from(q.g);
            if q.gamma_nr > 0.0 {
                jumps.push(&sm * C64::from(q.gamma_nr.sqrt()));
            }
            let phi = q.t_phi_rate();
            if phi > 0.0 {
                let sz =
                    embed_operator(OperatorKind::SigmaZ, Subsystem::Qubit(j), space)?.into_matrix();
                jumps.push(sz * C64::from((0.5 * phi).sqrt()));
            }
            number.push(nq);
            lowering.push(sm);
        }
        let mut heff0 = h;
        for l in &jumps {
            heff0 -= l.adjoint() * l * C64::new(0.0, 0.5);
        }
        Ok(Self {
            space,
            heff0,
            jumps,
            number,
            lowering,
            annihilate: a,
            frame,
        })
    }

    /// Projectors onto the undriven eigenstates whose dominant bare component
    /// has qubit `j` excited, one per qubit.
    fn dressed_excited_projectors(&self) -> Vec<CMatrix> {
        let d = self.space.dim();
        // Back to the lab frame so that excitation sectors are far apart.
        let mut h = (&self.heff0 + self.heff0.adjoint()) * C64::from(0.5);
        h += &self.annihilate.adjoint() * &self.annihilate * C64::from(TAU * self.frame);
        for n in &self.number {
            h += n * C64::from(TAU * self.frame);
        }
        let eig = h.symmetric_eigen();
        let nq = self.space.n_qubits();
        let mut out = vec![CMatrix::zeros(d, d); nq];
        for k in 0..d {
            let v = eig.eigenvectors.column(k);
            let dominant = (0..d)
                .max_by(|&a, &b| v[a].norm_sqr().total_cmp(&v[b].norm_sqr()))
                .expect("non-empty space");
            let proj = v * v.adjoint();
            for (j, p) in out.iter_mut().enumerate() {
                if (dominant >> (nq - 1 - j)) & 1 == 1 {
                    *p += &proj;
                }
            }
        }
        out
    }

    /// Hermitian part of `heff0` plus drive and noise at time `t`.
    fn hamiltonian(&self, sequence: &PulseSequence, noise: &[FrequencyNoise], t: f64) -> CMatrix {
        let mut h = (&self.heff0 + self.heff0.adjoint()) * C64::from(0.5);
        self.add_time_dependent(&mut h, sequence, noise, t);
        h
    }

    fn add_time_dependent(
        &self,
        h: &mut CMatrix,
        sequence: &PulseSequence,
        noise: &[FrequencyNoise],
        t: f64,
    ) {
        for (j, fnoise) in noise.iter().enumerate() {
            let df = fnoise.at(t);
            if df != 0.0 {
                *h += &self.number[j] * C64::from(TAU * df);
            }
        }
        for p in sequence.active(t) {
            let omega = p.envelope.rabi_rate(t - p.start);
            if omega == 0.0 {
                continue;
            }
            let phase = p.envelope.phase - TAU * p.envelope.carrier_detuning * t;
            let c = C64::from_polar(0.5 * omega, -phase);
            let sm = &self.lowering[p.qubit];
            *h += sm * c + sm.adjoint() * c.conj();
        }
    }

    fn rhs(
        &self,
        sequence: &PulseSequence,
        noise: &[FrequencyNoise],
        t: f64,
        rho: &CMatrix,
    ) -> CMatrix {
        let mut heff = self.heff0.clone();
        self.add_time_dependent(&mut heff, sequence, noise, t);
        let k = (&heff * rho) * C64::new(0.0, -1.0);
        let mut out = &k + k.adjoint();
        for l in &self.jumps {
            out += l * rho * l.adjoint();
        }
        out
    }

    /// Column-stacking superoperator of the static generator plus `extra` Hamiltonian.
    fn liouvillian(&self, extra: Option<&CMatrix>) -> CMatrix {
        let d = self.space.dim();
        let eye = CMatrix::identity(d, d);
        let mut heff = self.heff0.clone();
        if let Some(x) = extra {
            heff += x;
        }
        let i = C64::new(0.0, 1.0);
        let mut l = eye.kronecker(&heff) * (-i) + heff.conjugate().kronecker(&eye) * i;
        for j in &self.jumps {
            l += j.conjugate().kronecker(j);
        }
        l
    }
}

fn vec_of(m: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

fn unvec(v: &DVector<C64>, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

fn check_state(t: f64, rho: &CMatrix, space: SpaceDescriptor) -> Result<(), DynamicsError> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(DynamicsError::Invariant {
            t,
            what: format!("trace {tr}"),
        });
    }
    let defect = (rho - rho.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if defect > DensityMatrix::HERMITIAN_TOL {
        return Err(DynamicsError::Invariant {
            t,
            what: format!("hermiticity defect {defect:e}"),
        });
    }
    let _ = space;
    Ok(())
}

/// Rotating-frame Hamiltonian (rad/s) at time `t` for a frame at `frame` Hz.
pub fn build_drive_hamiltonian(
    device: &DeviceParams,
    space: SpaceDescriptor,
    sequence: &PulseSequence,
    t: f64,
    frame: f64,
) -> Result<Operator, DynamicsError> {
    let model = SystemModel::new(device, space, frame)?;
    Ok(Operator::new(space, model.hamiltonian(sequence, &[], t))?)
}

/// Integrates the master equation from `initial` at `t = 0`.
///
/// `noise` is empty or holds one frequency-noise realization per qubit.
pub fn evolve(
    initial: &DensityMatrix,
    device: &DeviceParams,
    sequence: &PulseSequence,
    noise: &[FrequencyNoise],
    opts: &EvolveOptions,
) -> Result<EvolutionResult, DynamicsError> {
    sequence.validate()?;
    let space = initial.space();
    if !noise.is_empty() && noise.len() != space.n_qubits() {
        return Err(DynamicsError::Schedule(format!(
            "{} noise realizations for {} qubit(s)",
            noise.len(),
            space.n_qubits()
        )));
    }
    let frame = opts
        .frame
        .unwrap_or_else(|| dressed_qubit_frequency(device, 0));
    let model = SystemModel::new(device, space, frame)?;
    let times = if opts.times.is_empty() {
        vec![sequence.end()]
    } else {
        opts.times.clone()
    };
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(DynamicsError::Schedule(
            "output times must be sorted and >= 0".into(),
        ));
    }
    let t_end = *times.last().unwrap();

    let mut breaks: Vec<f64> = vec![0.0];
    for p in &sequence.pulses {
        breaks.push(p.start);
        breaks.push(p.end());
    }
    breaks.extend(times.iter().copied());
    breaks.retain(|t| *t <= t_end);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let quiet = noise.iter().all(|n| n.offsets.iter().all(|v| *v == 0.0));
    let d = space.dim();
    let mut cache: HashMap<u64, CMatrix> = HashMap::new();
    let mut superop: Option<CMatrix> = None;
    let mut rho = initial.matrix().clone();
    let mut h_hint = 0.0;
    let mut steps = 0;
    let mut out_states = Vec::with_capacity(times.len());
    let mut next_out = 0;

    let record =
        |t: f64, rho: &CMatrix, out: &mut Vec<DensityMatrix>| -> Result<(), DynamicsError> {
            check_state(t, rho, space)?;
            out.push(DensityMatrix::from_matrix_unchecked(space, rho.clone()));
            Ok(())
        };

    while next_out < times.len() && times[next_out] <= 0.0 {
        record(0.0, &rho, &mut out_states)?;
        next_out += 1;
    }
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let driven = sequence.active(mid).next().is_some();
        if !driven && quiet && opts.cache_idle {
            let dt = b - a;
            let prop = cache.entry(dt.to_bits()).or_insert_with(|| {
                let l = superop.get_or_insert_with(|| model.liouvillian(None));
                (&*l * C64::from(dt)).exp()
            });
            rho = unvec(&(&*prop * vec_of(&rho)), d);
            steps += 1;
        } else {
            let (next, n) = integrator::dopri5(
                |t, r| model.rhs(sequence, noise, t, r),
                a,
                b,
                &rho,
                &opts.tolerances,
                &mut h_hint,
            )?;
            rho = next;
            steps += n;
        }
        while next_out < times.len() && times[next_out] <= b {
            record(b, &rho, &mut out_states)?;
            next_out += 1;
        }
    }

    let projectors = model.dressed_excited_projectors();
    let mut p_e = vec![Vec::with_capacity(times.len()); space.n_qubits()];
    for s in &out_states {
        for (j, row) in p_e.iter_mut().enumerate() {
            let p = (&projectors[j] * s.matrix()).trace().re;
            if !(-1e-9..=1.0 + 1e-9).contains(&p) {
                return Err(DynamicsError::Invariant {
                    t: 0.0,
                    what: format!("P_e = {p}"),
                });
            }
            row.push(p);
        }
    }
    Ok(EvolutionResult {
        times,
        states: out_states,
        p_e,
        steps,
    })
}

/// Null vector of a Liouvillian with unit trace.
fn steady_state_of(l: &CMatrix, d: usize) -> Result<CMatrix, DynamicsError> {
    let mut a = l.clone();
    let n = d * d;
    for c in 0..n {
        a[(0, c)] = C64::from(0.0);
    }
    for k in 0..d {
        a[(0, k * d + k)] = C64::from(1.0);
    }
    let mut rhs = DVector::zeros(n);
    rhs[0] = C64::from(1.0);
    let v = a.lu().solve(&rhs).ok_or_else(|| DynamicsError::Invariant {
        t: f64::INFINITY,
        what: "singular Liouvillian".into(),
    })?;
    let rho = unvec(&v, d);
    Ok((&rho + rho.adjoint()) * C64::from(0.5))
}

/// Undriven steady state of the device in `space`.
pub fn steady_state(
    device: &DeviceParams,
    space: SpaceDescriptor,
) -> Result<DensityMatrix, DynamicsError> {
    let model = SystemModel::new(device, space, dressed_qubit_frequency(device, 0))?;
    let rho = steady_state_of(&model.liouvillian(None), space.dim())?;
    Ok(DensityMatrix::from_matrix_unchecked(space, rho))
}

/// Steady-state `⟨a⟩/ε` under a weak resonator probe `ε(a + a†)` at `f_p`.
pub fn probe_response(
    device: &DeviceParams,
    n_fock: usize,
    f_p: f64,
) -> Result<C64, DynamicsError> {
    let space = build_space(n_fock, device.qubits.len())?;
    let model = SystemModel::new(device, space, f_p)?;
    let eps = 0.01 * device.resonator.kappa;
    let drive = (&model.annihilate + model.annihilate.adjoint()) * C64::from(eps);
    let rho = steady_state_of(&model.liouvillian(Some(&drive)), space.dim())?;
    Ok((&model.annihilate * rho).trace() / eps)
}

/// Frequency (Hz) of maximal probe response within `f_r ± window`, by golden-section search.
pub fn dressed_resonator_frequency(
    device: &DeviceParams,
    n_fock: usize,
    window: f64,
) -> Result<f64, DynamicsError> {
    let f_r = device.resonator.f_r;
    let objective = |f: f64| probe_response(device, n_fock, f).map(|z| -z.norm_sqr());
    golden_min(objective, f_r - window, f_r + window, 1e-3)
}

fn golden_min<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64, DynamicsError>
where
    F: Fn(f64) -> Result<f64, DynamicsError>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Copy of `device` with every dissipative channel switched off.
pub fn dissipationless(device: &DeviceParams) -> DeviceParams {
    let mut dev = device.clone();
    dev.resonator.kappa = 0.0;
    for q in &mut dev.qubits {
        q.gamma_nr = 0.0;
        q.t_phi = f64::INFINITY;
    }
    dev
}

const CALIBRATION_FOCK: usize = 3;

fn single_pulse_pe(device: &DeviceParams, envelope: PulseEnvelope) -> Result<f64, DynamicsError> {
    let space = build_space(CALIBRATION_FOCK, device.qubits.len())?;
    let mut seq = PulseSequence::default();
    seq.append(0, envelope);
    let opts = EvolveOptions {
        tolerances: Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
            ..Tolerances::default()
        },
        ..EvolveOptions::default()
    };
    Ok(evolve(&DensityMatrix::ground(space), device, &seq, &[], &opts)?.final_p_e(0))
}

/// Peak rate of a resonant truncated-Gaussian π pulse on qubit 0, refined on the
/// noiseless, dissipationless model until `P_e ≥ 0.9999`.
pub fn calibrate_pi_amplitude(
    device: &DeviceParams,
    sigma: f64,
    truncation: f64,
) -> Result<f64, DynamicsError> {
    calibrate_amplitude(device, sigma, truncation, PI)
}

/// Peak rate for a rotation by `angle ∈ (0, π]`.
pub fn calibrate_amplitude(
    device: &DeviceParams,
    sigma: f64,
    truncation: f64,
    angle: f64,
) -> Result<f64, DynamicsError> {
    if !(angle > 0.0 && angle <= PI) {
        return Err(DynamicsError::Calibration(format!(
            "angle {angle} outside (0, π]"
        )));
    }
    let dev = dissipationless(device);
    let a0 = area_amplitude(sigma, truncation, angle);
    let envelope = PulseEnvelope::gaussian(sigma, truncation, a0, 0.0);
    let pe = |amp: f64| single_pulse_pe(&dev, envelope.with_amplitude(amp));
    if angle == PI {
        let best = golden_min(|x| pe(x).map(|p| -p), 0.8 * a0, 1.2 * a0, 1e-9 * a0)?;
        let p = pe(best)?;
        if p < 0.9999 {
            return Err(DynamicsError::Calibration(format!(
                "best π pulse reaches P_e = {p}"
            )));
        }
        return Ok(best);
    }
    let target = (0.5 * angle).sin().powi(2);
    let (mut lo, mut hi) = (0.5 * a0, (1.5 * a0).min(a0 * PI / angle));
    if pe(lo)? > target || pe(hi)? < target {
        return Err(DynamicsError::Calibration(
            "target population not bracketed".into(),
        ));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if pe(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 * a0 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests;
