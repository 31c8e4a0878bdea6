//! One runner per subcommand: resolved config in, table out.

use std::f64::consts::TAU;

use thiserror::Error;

use cqedsim::device::DeviceParams;
use cqedsim::estimation::DecayEnvelope;
use cqedsim::protocols::{
    calibrate_snr, fit_coherence, readout_fidelity, readout_pair, run_coherence, run_rb,
    CoherenceConfig, CoherenceKind, ModelKind, RbConfig, RbErrorModel,
};
use cqedsim::spectroscopy::{ac_stark_shift, two_qubit_map, two_tone_map, vacuum_rabi_map};

use crate::config::{self, Config, ConfigError};
use crate::plot::PlotKind;

const GHZ: f64 = 1e9;
const MHZ: f64 = 1e6;
const US: f64 = 1e-6;
const NS: f64 = 1e-9;
const MV: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

fn runtime(e: impl std::fmt::Display) -> RunError {
    RunError::Runtime(e.to_string())
}

fn invalid(key: &str, reason: impl Into<String>) -> RunError {
    RunError::Config(ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    })
}

/// A finished experiment: a CSV table plus `#` metadata and a plot recipe.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub metadata: Vec<(String, String)>,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
    pub plot: PlotKind,
}

impl Table {
    fn new(columns: &[&str], plot: PlotKind) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
            summary: Vec::new(),
            plot,
        }
    }

    fn push(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&v| num(v)).collect());
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn to_csv(&self, header: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in header.iter().chain(&self.metadata) {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn lines(x: &str, ys: &[&str], log_x: bool) -> PlotKind {
    PlotKind::Lines {
        x: x.into(),
        ys: ys.iter().map(|s| s.to_string()).collect(),
        log_x,
    }
}

fn heat(x: &str, y: &str, z: &str) -> PlotKind {
    PlotKind::Heatmap {
        x: x.into(),
        y: y.into(),
        z: z.into(),
    }
}

fn grid(key: &str, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, RunError> {
    if n < 2 {
        return Err(invalid(key, "need at least 2 points"));
    }
    if !(hi > lo) {
        return Err(invalid(
            key,
            format!("range must be increasing ({lo} to {hi})"),
        ));
    }
    Ok((0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect())
}

fn qubit_index(key: &str, device: &DeviceParams, q: usize) -> Result<usize, RunError> {
    if q < device.qubits.len() {
        Ok(q)
    } else {
        Err(invalid(
            key,
            format!(
                "qubit {q} out of range ({} configured)",
                device.qubits.len()
            ),
        ))
    }
}

/// Runs `command` on a resolved config.
pub fn run(command: &str, cfg: &Config) -> Result<Table, RunError> {
    let device = config::to_device(cfg)?;
    let seed = cfg.seed.unwrap_or(0);
    match command {
        "budget" => budget(&device),
        "spectrum" => spectrum(&device, cfg),
        "two-tone" => two_tone(&device, cfg),
        "ac-stark" => ac_stark(&device, cfg),
        "rabi" | "t1" | "ramsey" | "echo" | "cpmg" => coherence(&device, cfg, command, seed),
        "readout" => readout(&device, cfg, seed),
        "rb" => rb(&device, cfg, seed),
        "two-qubit-map" => voltage_plane(&device, cfg),
        other => Err(invalid("command", format!("unknown experiment `{other}`"))),
    }
}

fn budget(device: &DeviceParams) -> Result<Table, RunError> {
    let mut t = Table::new(
        &[
            "qubit",
            "f_q_hz",
            "delta_over_2pi_hz",
            "purcell_time_s",
            "t1_s",
            "t_phi_s",
            "t2_s",
            "t_rabi_s",
            "chi_over_2pi_hz",
        ],
        lines("qubit", &["t1_s", "t2_s"], false),
    );
    for j in 0..device.qubits.len() {
        let b = device.budget(j).map_err(runtime)?;
        let f_q = device.qubit_frequency(j);
        t.push(&[
            j as f64,
            f_q,
            b.delta / TAU,
            1.0 / b.gamma_r,
            b.t1,
            b.t_phi,
            b.t2,
            b.t_rabi_predicted,
            b.chi / TAU,
        ]);
        t.summary.push(format!(
            "qubit {j}: f_q = {:.4} GHz, Δ/2π = {:.3} MHz",
            f_q / GHZ,
            b.delta / TAU / MHZ
        ));
        t.summary.push(format!(
            "  Γ_R⁻¹ = {:.2} μs, χ/2π = {:.4} MHz, T1 = {:.2} μs, T2 = {:.2} μs, T_Rabi = {:.2} μs",
            1.0 / b.gamma_r / US,
            b.chi / TAU / MHZ,
            b.t1 / US,
            b.t2 / US,
            b.t_rabi_predicted / US
        ));
    }
    Ok(t)
}

fn spectrum(device: &DeviceParams, cfg: &Config) -> Result<Table, RunError> {
    let s = cfg.spectrum.clone().unwrap_or_default();
    let q = qubit_index("spectrum.qubit", device, s.qubit.unwrap_or(0))?;
    let span = s.probe_span_mhz.unwrap_or(12.0) * MHZ;
    let f_r = device.resonator.f_r;
    let f_p = grid(
        "spectrum.probe_points",
        f_r - 0.5 * span,
        f_r + 0.5 * span,
        s.probe_points.unwrap_or(241),
    )?;
    let dv = grid(
        "spectrum.dv_points",
        s.dv_min_mv.unwrap_or(-45.0) * MV,
        s.dv_max_mv.unwrap_or(45.0) * MV,
        s.dv_points.unwrap_or(181),
    )?;
    let map = vacuum_rabi_map(&device.resonator, &device.qubits[q], &f_p, &dv).map_err(runtime)?;
    let mut t = Table::new(
        &["dv_v", "f_p_hz", "mag2", "phase_rad"],
        heat("dv_v", "f_p_hz", "mag2"),
    );
    for (k, &v) in dv.iter().enumerate() {
        for (&f, z) in f_p.iter().zip(map.row(k)) {
            t.push(&[v, f, z.norm_sqr(), z.arg()]);
        }
    }
    t.meta("qubit", q);
    t.summary.push(format!(
        "vacuum Rabi map: {} voltages × {} probe frequencies",
        dv.len(),
        f_p.len()
    ));
    Ok(t)
}

fn two_tone(device: &DeviceParams, cfg: &Config) -> Result<Table, RunError> {
    let s = cfg.two_tone.clone().unwrap_or_default();
    let q = qubit_index("two_tone.qubit", device, s.qubit.unwrap_or(0))?;
    let f_q = device.qubit_frequency(q);
    let f_d = grid(
        "two_tone.drive_points",
        s.drive_min_ghz.unwrap_or((f_q - 2.0 * MHZ) / GHZ) * GHZ,
        s.drive_max_ghz.unwrap_or((f_q + 6.0 * MHZ) / GHZ) * GHZ,
        s.drive_points.unwrap_or(401),
    )?;
    let dv = grid(
        "two_tone.dv_points",
        s.dv_min_mv.unwrap_or(-10.0) * MV,
        s.dv_max_mv.unwrap_or(10.0) * MV,
        s.dv_points.unwrap_or(41),
    )?;
    let omega = s.drive_over_2pi_mhz.unwrap_or(0.05) * TAU * MHZ;
    let nbar = s.nbar.unwrap_or(0.0);
    if nbar < 0.0 {
        return Err(invalid("two_tone.nbar", "must be >= 0"));
    }
    let map = two_tone_map(
        &device.resonator,
        &device.qubits[q],
        &device.noise,
        omega,
        nbar,
        &f_d,
        &dv,
    )
    .map_err(runtime)?;
    let mut t = Table::new(
        &["dv_v", "f_d_hz", "phase_rad", "p_e"],
        heat("dv_v", "f_d_hz", "phase_rad"),
    );
    let n = f_d.len();
    for (k, &v) in dv.iter().enumerate() {
        for (i, &f) in f_d.iter().enumerate() {
            t.push(&[v, f, map.phase[k * n + i], map.p_e[k * n + i]]);
        }
    }
    let locus = map.qubit_locus();
    if let (Some(lo), Some(hi)) = (
        locus.iter().copied().reduce(f64::min),
        locus.iter().copied().reduce(f64::max),
    ) {
        t.summary.push(format!(
            "qubit line spans {:.4} to {:.4} GHz",
            lo / GHZ,
            hi / GHZ
        ));
    }
    t.meta("qubit", q);
    Ok(t)
}

fn ac_stark(device: &DeviceParams, cfg: &Config) -> Result<Table, RunError> {
    let s = cfg.ac_stark.clone().unwrap_or_default();
    let q = qubit_index("ac_stark.qubit", device, s.qubit.unwrap_or(0))?;
    let nbar = grid(
        "ac_stark.points",
        0.0,
        s.nbar_max.unwrap_or(25.0),
        s.points.unwrap_or(26),
    )?;
    let per_nw = s.photons_per_nw.unwrap_or(1.0);
    if !(per_nw > 0.0) {
        return Err(invalid("ac_stark.photons_per_nw", "must be > 0"));
    }
    let chi = device.budget(q).map_err(runtime)?.chi;
    let mut t = Table::new(
        &["power_nw", "nbar", "shift_hz"],
        lines("nbar", &["shift_hz"], false),
    );
    for &n in &nbar {
        t.push(&[n / per_nw, n, ac_stark_shift(chi, n)]);
    }
    t.meta("chi_over_2pi_hz", num(chi / TAU));
    t.summary.push(format!(
        "ac Stark slope {:.4} MHz per photon",
        ac_stark_shift(chi, 1.0) / MHZ
    ));
    Ok(t)
}

fn coherence(
    device: &DeviceParams,
    cfg: &Config,
    command: &str,
    seed: u64,
) -> Result<Table, RunError> {
    let s = match command {
        "rabi" => &cfg.rabi,
        "t1" => &cfg.t1,
        "ramsey" => &cfg.ramsey,
        "echo" => &cfg.echo,
        _ => &cfg.cpmg,
    }
    .clone()
    .unwrap_or_default();
    let kind = match command {
        "rabi" => CoherenceKind::Rabi,
        "t1" => CoherenceKind::T1,
        "ramsey" => CoherenceKind::Ramsey,
        "echo" => CoherenceKind::Echo,
        _ => CoherenceKind::Cpmg {
            n_pi: s.n_pi.unwrap_or(1),
        },
    };
    let key = |k: &str| format!("{}.{k}", command);
    if let CoherenceKind::Cpmg { n_pi: 0 } = kind {
        return Err(invalid(&key("n_pi"), "must be >= 1"));
    }
    let t_max = s.time_max_us.unwrap_or(100.0) * US;
    let points = s.points.unwrap_or(61);
    if points < 4 {
        return Err(invalid(&key("points"), "need at least 4 points"));
    }
    if !(t_max > 0.0) {
        return Err(invalid(&key("time_max_us"), "must be > 0"));
    }
    // Sequences with free evolution start one step in so the pulses never overlap.
    let start = matches!(kind, CoherenceKind::Rabi | CoherenceKind::T1) as usize;
    let times: Vec<f64> = (0..points)
        .map(|k| t_max * (k + 1 - start) as f64 / (points - start) as f64)
        .collect();
    let mut c = CoherenceConfig::new(kind, times);
    if kind == CoherenceKind::Rabi {
        c.rabi_amplitude = s.drive_over_2pi_mhz.unwrap_or(0.0) * TAU * MHZ;
        if !(c.rabi_amplitude > 0.0) {
            return Err(invalid(&key("drive_over_2pi_mhz"), "must be > 0"));
        }
    }
    c.realizations = s.realizations.unwrap_or(400);
    if c.realizations == 0 {
        return Err(invalid(&key("realizations"), "must be >= 1"));
    }
    c.shots = s.shots.unwrap_or(0);
    c.model = match s.model.as_deref().unwrap_or("reduced") {
        "reduced" => ModelKind::Reduced,
        "full" => ModelKind::Full,
        other => {
            return Err(invalid(
                &key("model"),
                format!("`{other}` (expected reduced or full)"),
            ))
        }
    };
    let envelope = match s.envelope.as_deref().unwrap_or("exponential") {
        "exponential" => DecayEnvelope::Exponential,
        "gaussian" => DecayEnvelope::Gaussian,
        other => {
            return Err(invalid(
                &key("envelope"),
                format!("`{other}` (expected exponential or gaussian)"),
            ))
        }
    };
    c.pulse_sigma = s.pulse_sigma_ns.unwrap_or(8.0) * NS;
    c.truncation = s.truncation.unwrap_or(2.5);
    c.noise_dt = s.noise_dt_ns.map(|v| v * NS);
    c.seed = seed;

    let trace = run_coherence(device, &c, &device.noise).map_err(runtime)?;
    let mut t = Table::new(&["time_s", "p_e", "std"], lines("time_s", &["p_e"], false));
    for ((&x, &p), &e) in trace.x.iter().zip(&trace.p_e).zip(&trace.std) {
        t.push(&[x, p, e]);
    }
    if let CoherenceKind::Cpmg { n_pi } = kind {
        t.meta("n_pi", n_pi);
    }
    match fit_coherence(kind, &trace, envelope) {
        Ok(fit) => {
            for (name, (v, e)) in fit.names.iter().zip(fit.params.iter().zip(&fit.std_errors)) {
                t.meta(&format!("fit.{name}"), num(*v));
                t.meta(&format!("fit.{name}.std_error"), num(*e));
            }
            if let Some(tau) = fit.get("decay_time") {
                t.summary
                    .push(format!("{command}: decay time {:.2} μs", tau / US));
            }
            if let Some(f) = fit.get("frequency") {
                t.summary
                    .push(format!("{command}: oscillation {:.4} MHz", f / MHZ));
            }
        }
        Err(e) => {
            t.meta("fit", format!("failed: {e}"));
            t.summary.push(format!("{command}: fit failed: {e}"));
        }
    }
    Ok(t)
}

fn readout(device: &DeviceParams, cfg: &Config, seed: u64) -> Result<Table, RunError> {
    let s = cfg.readout.clone().unwrap_or_default();
    let q = qubit_index("readout.qubit", device, s.qubit.unwrap_or(0))?;
    let shots = s.shots.unwrap_or(5000);
    if shots == 0 {
        return Err(invalid("readout.shots", "must be >= 1"));
    }
    let integration = s.integration_us.unwrap_or(5.0) * US;
    if !(integration > 0.0) {
        return Err(invalid("readout.integration_us", "must be > 0"));
    }
    let snr = match s.snr_per_sqrt_s {
        Some(v) if v > 0.0 => v,
        Some(_) => return Err(invalid("readout.snr_per_sqrt_s", "must be > 0")),
        None => {
            let target = s.target_fidelity.unwrap_or(0.981);
            if !(target > 0.5 && target < 1.0) {
                return Err(invalid("readout.target_fidelity", "must lie in (0.5, 1)"));
            }
            calibrate_snr(device, q, integration, target).map_err(runtime)?
        }
    };
    let (r0, r1) = readout_pair(device, q, shots, integration, snr, seed).map_err(runtime)?;
    let fid = readout_fidelity(&r0, &r1).map_err(runtime)?;
    let mut t = Table::new(
        &["prep", "i", "q"],
        PlotKind::Histogram {
            value: "i".into(),
            group: "prep".into(),
            bins: 80,
        },
    );
    for (label, rec) in [("0", &r0), ("1", &r1)] {
        for &(i, qv) in &rec.shots {
            t.rows.push(vec![label.into(), num(i), num(qv)]);
        }
    }
    t.meta("snr_per_sqrt_s", num(snr));
    t.meta("fidelity", num(fid.fidelity));
    t.meta("visibility", num(fid.visibility));
    t.meta("threshold", num(fid.threshold));
    t.meta("p10", num(fid.p10));
    t.meta("p01", num(fid.p01));
    t.summary.push(format!(
        "readout: F = {:.2} %, visibility = {:.2} %, SNR = {:.0} /√s",
        100.0 * fid.fidelity,
        100.0 * fid.visibility,
        snr
    ));
    Ok(t)
}

fn rb(device: &DeviceParams, cfg: &Config, seed: u64) -> Result<Table, RunError> {
    let s = cfg.rb.clone().unwrap_or_default();
    let depths = s.depths.unwrap_or_else(|| vec![1, 32, 128, 512]);
    if depths.len() < 3 || depths.contains(&0) {
        return Err(invalid("rb.depths", "need at least 3 depths, all >= 1"));
    }
    let sequences = s.sequences.unwrap_or(30);
    if sequences == 0 {
        return Err(invalid("rb.sequences", "must be >= 1"));
    }
    let model = match s.model.as_deref().unwrap_or("lindblad") {
        "lindblad" => RbErrorModel::Lindblad,
        "depolarizing" => {
            let p = s.depolarizing_p.unwrap_or(6e-4);
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("rb.depolarizing_p", "must lie in [0, 1]"));
            }
            RbErrorModel::Depolarizing { p }
        }
        other => {
            return Err(invalid(
                "rb.model",
                format!("`{other}` (expected lindblad or depolarizing)"),
            ))
        }
    };
    let mut c = RbConfig::new(depths, sequences, model);
    c.shots = s.shots.unwrap_or(1000);
    c.sigma = s.sigma_ns.unwrap_or(8.0) * NS;
    c.truncation = s.truncation.unwrap_or(2.5);
    c.gap = s.gap_ns.unwrap_or(20.0) * NS;
    c.seed = seed;
    let r = run_rb(device, &c).map_err(runtime)?;

    let mut cols = vec![
        "depth".to_string(),
        "mean_fidelity".into(),
        "std".into(),
        "fit".into(),
    ];
    cols.extend((0..sequences).map(|k| format!("seq_{k}")));
    let mut t = Table::new(&[], lines("depth", &["mean_fidelity", "fit"], true));
    t.columns = cols;
    for (d, &m) in r.depths.iter().enumerate() {
        let fit = r.fit.a * r.fit.p.powf(m as f64) + r.fit.b;
        let mut row = vec![m as f64, r.mean[d], r.std[d], fit];
        row.extend(&r.per_sequence[d]);
        t.push(&row);
    }
    t.meta("fit.a", num(r.fit.a));
    t.meta("fit.p", num(r.fit.p));
    t.meta("fit.b", num(r.fit.b));
    t.meta("fit.f_gate", num(r.fit.f_gate));
    t.meta("fit.degenerate", r.fit.degenerate);
    t.summary.push(format!(
        "rb: p = {:.6}, average gate fidelity {:.3} %",
        r.fit.p,
        100.0 * r.fit.f_gate
    ));
    Ok(t)
}

fn voltage_plane(device: &DeviceParams, cfg: &Config) -> Result<Table, RunError> {
    if device.qubits.len() < 2 {
        return Err(invalid("device.qubits", "two-qubit-map needs two qubits"));
    }
    let s = cfg.two_qubit_map.clone().unwrap_or_default();
    let dv_r = grid(
        "two_qubit_map.dv_r_points",
        s.dv_r_min_mv.unwrap_or(3.4) * MV,
        s.dv_r_max_mv.unwrap_or(11.4) * MV,
        s.dv_r_points.unwrap_or(161),
    )?;
    let dv_rg = grid(
        "two_qubit_map.dv_rg_points",
        s.dv_rg_min_v.unwrap_or(0.227),
        s.dv_rg_max_v.unwrap_or(0.307),
        s.dv_rg_points.unwrap_or(161),
    )?;
    let map = two_qubit_map(
        &device.resonator,
        [&device.qubits[0], &device.qubits[1]],
        &dv_r,
        &dv_rg,
    )
    .map_err(runtime)?;
    let mut t = Table::new(
        &["dv_r_v", "dv_rg_v", "mag2"],
        heat("dv_rg_v", "dv_r_v", "mag2"),
    );
    for (i, &vr) in dv_r.iter().enumerate() {
        for (j, &vg) in dv_rg.iter().enumerate() {
            t.push(&[vr, vg, map.at(i, j).norm_sqr()]);
        }
    }
    t.summary.push(format!(
        "voltage plane: {} × {} points at f_p = {:.4} GHz",
        dv_r.len(),
        dv_rg.len(),
        map.f_p / GHZ
    ));
    Ok(t)
}
