//! Experiment configuration: TOML with explicit units in every key name.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use cqedsim::device::{
    calibration, ChargeNoiseModel, DeviceParams, OuComponent, QubitParams, ResonatorParams,
    VoltageTuningMap,
};

const GHZ: f64 = 1e9;
const MHZ: f64 = 1e6;
const US: f64 = 1e-6;
const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    pub name: Option<String>,
    #[serde(default)]
    pub device: DeviceSection,
    pub noise: Option<NoiseSection>,
    pub spectrum: Option<SpectrumSection>,
    pub two_tone: Option<TwoToneSection>,
    pub ac_stark: Option<AcStarkSection>,
    pub rabi: Option<CoherenceSection>,
    pub t1: Option<CoherenceSection>,
    pub ramsey: Option<CoherenceSection>,
    pub echo: Option<CoherenceSection>,
    pub cpmg: Option<CoherenceSection>,
    pub readout: Option<ReadoutSection>,
    pub rb: Option<RbSection>,
    pub two_qubit_map: Option<TwoQubitMapSection>,
    /// Provenance written into `.meta` files; ignored on input.
    pub meta: Option<MetaSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaSection {
    pub command: String,
    pub version: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    /// `sweet_spot`, `long_t1` or `two_qubit`; explicit keys override it.
    pub preset: Option<String>,
    pub f_r_ghz: Option<f64>,
    pub kappa_over_2pi_mhz: Option<f64>,
    pub bias_v: Option<Vec<f64>>,
    pub qubits: Option<Vec<QubitSection>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    pub g_over_2pi_mhz: Option<f64>,
    pub gamma_over_2pi_mhz: Option<f64>,
    /// Nonradiative lifetime `1/Γ_NR`; `inf` disables it.
    pub t_nr_us: Option<f64>,
    pub t_phi_us: Option<f64>,
    pub tuning: Option<TuningSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TuningSection {
    Quadratic {
        f_ss_ghz: f64,
        v_ss_v: f64,
        curvature_ghz_per_v2: f64,
    },
    Linear2d {
        intercept_ghz: f64,
        slope_r_ghz_per_v: f64,
        slope_rg_ghz_per_v: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// `sweet_spot`, `long_t1` or `silent`; explicit keys override it.
    pub preset: Option<String>,
    pub sigma_quasistatic_v: Option<f64>,
    pub seed: Option<u64>,
    pub ou: Option<Vec<OuSection>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuSection {
    pub amplitude_v: f64,
    pub corner_hz: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub qubit: Option<usize>,
    pub probe_span_mhz: Option<f64>,
    pub probe_points: Option<usize>,
    pub dv_min_mv: Option<f64>,
    pub dv_max_mv: Option<f64>,
    pub dv_points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoToneSection {
    pub qubit: Option<usize>,
    pub drive_over_2pi_mhz: Option<f64>,
    pub nbar: Option<f64>,
    pub drive_min_ghz: Option<f64>,
    pub drive_max_ghz: Option<f64>,
    pub drive_points: Option<usize>,
    pub dv_min_mv: Option<f64>,
    pub dv_max_mv: Option<f64>,
    pub dv_points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcStarkSection {
    pub qubit: Option<usize>,
    pub nbar_max: Option<f64>,
    pub points: Option<usize>,
    /// Conversion constant between probe power and intra-resonator photons.
    pub photons_per_nw: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceSection {
    /// Longest pulse duration (rabi) or delay (others).
    pub time_max_us: Option<f64>,
    pub points: Option<usize>,
    pub drive_over_2pi_mhz: Option<f64>,
    pub n_pi: Option<usize>,
    pub realizations: Option<usize>,
    pub shots: Option<usize>,
    /// `reduced` or `full`.
    pub model: Option<String>,
    /// `exponential` or `gaussian`.
    pub envelope: Option<String>,
    pub pulse_sigma_ns: Option<f64>,
    pub truncation: Option<f64>,
    pub noise_dt_ns: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    pub qubit: Option<usize>,
    pub shots: Option<usize>,
    pub integration_us: Option<f64>,
    /// Per-quadrature signal-to-noise per √s; calibrated to `target_fidelity` when absent.
    pub snr_per_sqrt_s: Option<f64>,
    pub target_fidelity: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbSection {
    pub depths: Option<Vec<usize>>,
    pub sequences: Option<usize>,
    pub shots: Option<usize>,
    /// `lindblad` or `depolarizing`.
    pub model: Option<String>,
    pub depolarizing_p: Option<f64>,
    pub sigma_ns: Option<f64>,
    pub truncation: Option<f64>,
    pub gap_ns: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitMapSection {
    pub dv_r_min_mv: Option<f64>,
    pub dv_r_max_mv: Option<f64>,
    pub dv_r_points: Option<usize>,
    pub dv_rg_min_v: Option<f64>,
    pub dv_rg_max_v: Option<f64>,
    pub dv_rg_points: Option<usize>,
}

pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Config, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

fn device_preset(name: &str) -> Result<DeviceParams, ConfigError> {
    match name {
        "sweet_spot" => Ok(DeviceParams::sweet_spot_qubit()),
        "long_t1" => Ok(DeviceParams::long_t1_qubit()),
        "two_qubit" => Ok(DeviceParams::two_qubit_device()),
        other => Err(invalid(
            "device.preset",
            format!("unknown preset `{other}` (expected sweet_spot, long_t1 or two_qubit)"),
        )),
    }
}

fn noise_preset(name: &str) -> Result<ChargeNoiseModel, ConfigError> {
    match name {
        "sweet_spot" => Ok(calibration::SWEET_SPOT.model()),
        "long_t1" => Ok(calibration::LONG_T1.model()),
        "silent" => Ok(ChargeNoiseModel::silent()),
        other => Err(invalid(
            "noise.preset",
            format!("unknown preset `{other}` (expected sweet_spot, long_t1 or silent)"),
        )),
    }
}

/// Rounds unit conversions to 12 significant digits so presets serialize cleanly.
fn tidy(x: f64) -> f64 {
    if x.is_finite() && x != 0.0 {
        format!("{x:.11e}").parse().unwrap_or(x)
    } else {
        x
    }
}

fn qubit_section(q: &QubitParams) -> QubitSection {
    let tuning = match q.tuning {
        VoltageTuningMap::Quadratic {
            f_ss,
            v_ss,
            curvature,
        } => TuningSection::Quadratic {
            f_ss_ghz: tidy(f_ss / GHZ),
            v_ss_v: v_ss,
            curvature_ghz_per_v2: tidy(curvature / GHZ),
        },
        VoltageTuningMap::Linear2d {
            intercept,
            slope_r,
            slope_rg,
        } => TuningSection::Linear2d {
            intercept_ghz: tidy(intercept / GHZ),
            slope_r_ghz_per_v: tidy(slope_r / GHZ),
            slope_rg_ghz_per_v: tidy(slope_rg / GHZ),
        },
    };
    QubitSection {
        g_over_2pi_mhz: Some(tidy(q.g / TAU / MHZ)),
        gamma_over_2pi_mhz: Some(tidy(q.gamma / TAU / MHZ)),
        t_nr_us: Some(if q.gamma_nr > 0.0 {
            tidy(1.0 / q.gamma_nr / US)
        } else {
            f64::INFINITY
        }),
        t_phi_us: Some(tidy(q.t_phi / US)),
        tuning: Some(tuning),
    }
}

fn noise_section(n: &ChargeNoiseModel) -> NoiseSection {
    NoiseSection {
        preset: None,
        sigma_quasistatic_v: Some(n.sigma_quasistatic),
        seed: Some(n.seed),
        ou: Some(
            n.ou_components
                .iter()
                .map(|c| OuSection {
                    amplitude_v: c.amplitude,
                    corner_hz: tidy(1.0 / (TAU * c.tau)),
                })
                .collect(),
        ),
    }
}

fn need<T: Clone>(value: &Option<T>, fallback: Option<T>, key: &str) -> Result<T, ConfigError> {
    value
        .clone()
        .or(fallback)
        .ok_or_else(|| ConfigError::Missing(key.into()))
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && !v.is_nan() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be > 0 (got {v})")))
    }
}

/// Fills every device key from the preset and explicit values.
fn resolve_device(d: &DeviceSection) -> Result<DeviceSection, ConfigError> {
    let preset = d.preset.as_deref().map(device_preset).transpose()?;
    let base = preset.as_ref().map(|p| DeviceSection {
        preset: None,
        f_r_ghz: Some(tidy(p.resonator.f_r / GHZ)),
        kappa_over_2pi_mhz: Some(tidy(p.resonator.kappa / TAU / MHZ)),
        bias_v: Some(p.bias.clone()),
        qubits: Some(p.qubits.iter().map(qubit_section).collect()),
    });
    let base = base.unwrap_or_default();
    let qubits_in = d.qubits.clone().or(base.qubits.clone());
    let Some(qubits_in) = qubits_in else {
        return Err(ConfigError::Missing("device.qubits".into()));
    };
    let base_q = base.qubits.clone().unwrap_or_default();
    let mut qubits = Vec::with_capacity(qubits_in.len());
    for (j, q) in qubits_in.iter().enumerate() {
        let b = base_q.get(j).cloned().unwrap_or_default();
        let key = |k: &str| format!("device.qubits[{j}].{k}");
        qubits.push(QubitSection {
            g_over_2pi_mhz: Some(need(
                &q.g_over_2pi_mhz,
                b.g_over_2pi_mhz,
                &key("g_over_2pi_mhz"),
            )?),
            gamma_over_2pi_mhz: Some(need(
                &q.gamma_over_2pi_mhz,
                b.gamma_over_2pi_mhz,
                &key("gamma_over_2pi_mhz"),
            )?),
            t_nr_us: Some(need(&q.t_nr_us, b.t_nr_us, &key("t_nr_us"))?),
            t_phi_us: Some(q.t_phi_us.or(b.t_phi_us).unwrap_or(f64::INFINITY)),
            tuning: Some(need(&q.tuning, b.tuning, &key("tuning"))?),
        });
    }
    let bias = d
        .bias_v
        .clone()
        .or(base.bias_v.clone())
        .unwrap_or_else(|| vec![0.0; qubits.len()]);
    if bias.len() != qubits.len() {
        return Err(invalid(
            "device.bias_v",
            format!("expected {} entries, one per qubit", qubits.len()),
        ));
    }
    Ok(DeviceSection {
        preset: None,
        f_r_ghz: Some(need(&d.f_r_ghz, base.f_r_ghz, "device.f_r_ghz")?),
        kappa_over_2pi_mhz: Some(need(
            &d.kappa_over_2pi_mhz,
            base.kappa_over_2pi_mhz,
            "device.kappa_over_2pi_mhz",
        )?),
        bias_v: Some(bias),
        qubits: Some(qubits),
    })
}

fn resolve_noise(
    n: Option<&NoiseSection>,
    device_preset_name: Option<&str>,
) -> Result<NoiseSection, ConfigError> {
    let preset_name = n.and_then(|n| n.preset.clone());
    let base = match (preset_name.as_deref(), device_preset_name) {
        (Some(p), _) => noise_section(&noise_preset(p)?),
        (None, Some(d)) => noise_section(&device_preset(d)?.noise),
        (None, None) => noise_section(&ChargeNoiseModel::silent()),
    };
    let Some(n) = n else { return Ok(base) };
    Ok(NoiseSection {
        preset: None,
        sigma_quasistatic_v: n.sigma_quasistatic_v.or(base.sigma_quasistatic_v),
        seed: n.seed.or(base.seed),
        ou: n.ou.clone().or(base.ou),
    })
}

/// Fills defaults for the device, the noise and the section used by `command`.
pub fn resolve(cfg: &Config, command: &str) -> Result<Config, ConfigError> {
    let device = resolve_device(&cfg.device)?;
    let noise = resolve_noise(cfg.noise.as_ref(), cfg.device.preset.as_deref())?;
    let mut out = Config {
        seed: Some(cfg.seed.unwrap_or(0)),
        output_dir: cfg.output_dir.clone(),
        name: cfg.name.clone(),
        device,
        noise: Some(noise),
        ..Config::default()
    };
    let params = to_device(&out)?;
    match command {
        "spectrum" => {
            let s = cfg.spectrum.clone().unwrap_or_default();
            out.spectrum = Some(SpectrumSection {
                qubit: Some(s.qubit.unwrap_or(0)),
                probe_span_mhz: Some(s.probe_span_mhz.unwrap_or(12.0)),
                probe_points: Some(s.probe_points.unwrap_or(241)),
                dv_min_mv: Some(s.dv_min_mv.unwrap_or(-45.0)),
                dv_max_mv: Some(s.dv_max_mv.unwrap_or(45.0)),
                dv_points: Some(s.dv_points.unwrap_or(181)),
            });
        }
        "two-tone" => {
            let s = cfg.two_tone.clone().unwrap_or_default();
            let f_ss = params.qubit_frequency(s.qubit.unwrap_or(0).min(params.qubits.len() - 1));
            out.two_tone = Some(TwoToneSection {
                qubit: Some(s.qubit.unwrap_or(0)),
                drive_over_2pi_mhz: Some(s.drive_over_2pi_mhz.unwrap_or(0.05)),
                nbar: Some(s.nbar.unwrap_or(0.0)),
                drive_min_ghz: Some(s.drive_min_ghz.unwrap_or((f_ss - 2.0 * MHZ) / GHZ)),
                drive_max_ghz: Some(s.drive_max_ghz.unwrap_or((f_ss + 6.0 * MHZ) / GHZ)),
                drive_points: Some(s.drive_points.unwrap_or(401)),
                dv_min_mv: Some(s.dv_min_mv.unwrap_or(-10.0)),
                dv_max_mv: Some(s.dv_max_mv.unwrap_or(10.0)),
                dv_points: Some(s.dv_points.unwrap_or(41)),
            });
        }
        "ac-stark" => {
            let s = cfg.ac_stark.clone().unwrap_or_default();
            out.ac_stark = Some(AcStarkSection {
                qubit: Some(s.qubit.unwrap_or(0)),
                nbar_max: Some(s.nbar_max.unwrap_or(25.0)),
                points: Some(s.points.unwrap_or(26)),
                photons_per_nw: Some(s.photons_per_nw.unwrap_or(1.0)),
            });
        }
        "rabi" | "t1" | "ramsey" | "echo" | "cpmg" => {
            let section = match command {
                "rabi" => &cfg.rabi,
                "t1" => &cfg.t1,
                "ramsey" => &cfg.ramsey,
                "echo" => &cfg.echo,
                _ => &cfg.cpmg,
            };
            let s = section.clone().unwrap_or_default();
            let key = command.replace('-', "_");
            let t1 = params.budget(0).map(|b| b.t1).unwrap_or(100.0 * US);
            let default_max = match command {
                "rabi" => 30.0,
                "ramsey" => 3.0 * t1 / US,
                _ => 4.0 * t1 / US,
            };
            let resolved = CoherenceSection {
                time_max_us: Some(s.time_max_us.unwrap_or(default_max)),
                points: Some(s.points.unwrap_or(if command == "rabi" { 301 } else { 61 })),
                drive_over_2pi_mhz: if command == "rabi" {
                    Some(need(
                        &s.drive_over_2pi_mhz,
                        None,
                        &format!("{key}.drive_over_2pi_mhz"),
                    )?)
                } else {
                    None
                },
                n_pi: if command == "cpmg" {
                    Some(s.n_pi.unwrap_or(1))
                } else {
                    None
                },
                realizations: Some(s.realizations.unwrap_or(400)),
                shots: Some(s.shots.unwrap_or(0)),
                model: Some(s.model.unwrap_or_else(|| "reduced".into())),
                envelope: Some(s.envelope.unwrap_or_else(|| "exponential".into())),
                pulse_sigma_ns: Some(s.pulse_sigma_ns.unwrap_or(8.0)),
                truncation: Some(s.truncation.unwrap_or(2.5)),
                noise_dt_ns: s.noise_dt_ns,
            };
            let slot = match command {
                "rabi" => &mut out.rabi,
                "t1" => &mut out.t1,
                "ramsey" => &mut out.ramsey,
                "echo" => &mut out.echo,
                _ => &mut out.cpmg,
            };
            *slot = Some(resolved);
        }
        "readout" => {
            let s = cfg.readout.clone().unwrap_or_default();
            out.readout = Some(ReadoutSection {
                qubit: Some(s.qubit.unwrap_or(0)),
                shots: Some(s.shots.unwrap_or(5000)),
                integration_us: Some(s.integration_us.unwrap_or(5.0)),
                snr_per_sqrt_s: s.snr_per_sqrt_s,
                target_fidelity: Some(s.target_fidelity.unwrap_or(0.981)),
            });
        }
        "rb" => {
            let s = cfg.rb.clone().unwrap_or_default();
            out.rb = Some(RbSection {
                depths: Some(s.depths.unwrap_or_else(|| vec![1, 32, 128, 512])),
                sequences: Some(s.sequences.unwrap_or(30)),
                shots: Some(s.shots.unwrap_or(1000)),
                model: Some(s.model.unwrap_or_else(|| "lindblad".into())),
                depolarizing_p: Some(s.depolarizing_p.unwrap_or(6e-4)),
                sigma_ns: Some(s.sigma_ns.unwrap_or(8.0)),
                truncation: Some(s.truncation.unwrap_or(2.5)),
                gap_ns: Some(s.gap_ns.unwrap_or(20.0)),
            });
        }
        "two-qubit-map" => {
            let s = cfg.two_qubit_map.clone().unwrap_or_default();
            out.two_qubit_map = Some(TwoQubitMapSection {
                dv_r_min_mv: Some(s.dv_r_min_mv.unwrap_or(3.4)),
                dv_r_max_mv: Some(s.dv_r_max_mv.unwrap_or(11.4)),
                dv_r_points: Some(s.dv_r_points.unwrap_or(161)),
                dv_rg_min_v: Some(s.dv_rg_min_v.unwrap_or(0.227)),
                dv_rg_max_v: Some(s.dv_rg_max_v.unwrap_or(0.307)),
                dv_rg_points: Some(s.dv_rg_points.unwrap_or(161)),
            });
        }
        "budget" => {}
        other => return Err(invalid("command", format!("unknown experiment `{other}`"))),
    }
    Ok(out)
}

/// Builds device parameters from a resolved config.
pub fn to_device(cfg: &Config) -> Result<DeviceParams, ConfigError> {
    let d = &cfg.device;
    let f_r = positive("device.f_r_ghz", need(&d.f_r_ghz, None, "device.f_r_ghz")?)? * GHZ;
    let kappa = positive(
        "device.kappa_over_2pi_mhz",
        need(&d.kappa_over_2pi_mhz, None, "device.kappa_over_2pi_mhz")?,
    )? * TAU
        * MHZ;
    let resonator =
        ResonatorParams::new(f_r, kappa).map_err(|e| invalid("device", e.to_string()))?;
    let qs = need(&d.qubits, None, "device.qubits")?;
    if qs.is_empty() {
        return Err(invalid("device.qubits", "need at least one qubit"));
    }
    let mut qubits = Vec::new();
    for (j, q) in qs.iter().enumerate() {
        let key = |k: &str| format!("device.qubits[{j}].{k}");
        let t_nr = need(&q.t_nr_us, None, &key("t_nr_us"))?;
        let tuning = match need(&q.tuning, None, &key("tuning"))? {
            TuningSection::Quadratic {
                f_ss_ghz,
                v_ss_v,
                curvature_ghz_per_v2,
            } => VoltageTuningMap::quadratic(f_ss_ghz * GHZ, v_ss_v, curvature_ghz_per_v2 * GHZ)
                .map_err(|e| invalid(&key("tuning.curvature_ghz_per_v2"), e.to_string()))?,
            TuningSection::Linear2d {
                intercept_ghz,
                slope_r_ghz_per_v,
                slope_rg_ghz_per_v,
            } => VoltageTuningMap::Linear2d {
                intercept: intercept_ghz * GHZ,
                slope_r: slope_r_ghz_per_v * GHZ,
                slope_rg: slope_rg_ghz_per_v * GHZ,
            },
        };
        let params = QubitParams {
            g: need(&q.g_over_2pi_mhz, None, &key("g_over_2pi_mhz"))? * TAU * MHZ,
            gamma: need(&q.gamma_over_2pi_mhz, None, &key("gamma_over_2pi_mhz"))? * TAU * MHZ,
            gamma_nr: if t_nr.is_infinite() {
                0.0
            } else {
                1.0 / (positive(&key("t_nr_us"), t_nr)? * US)
            },
            t_phi: positive(&key("t_phi_us"), q.t_phi_us.unwrap_or(f64::INFINITY))? * US,
            tuning,
        };
        params
            .validate()
            .map_err(|e| invalid(&format!("device.qubits[{j}]"), e.to_string()))?;
        qubits.push(params);
    }
    let bias = d.bias_v.clone().unwrap_or_else(|| vec![0.0; qubits.len()]);
    Ok(DeviceParams {
        resonator,
        noise: to_noise(cfg)?,
        bias,
        qubits,
    })
}

pub fn to_noise(cfg: &Config) -> Result<ChargeNoiseModel, ConfigError> {
    let Some(n) = &cfg.noise else {
        return Ok(ChargeNoiseModel::silent());
    };
    let model = ChargeNoiseModel {
        sigma_quasistatic: n.sigma_quasistatic_v.unwrap_or(0.0),
        ou_components: n
            .ou
            .clone()
            .unwrap_or_default()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                Ok(OuComponent {
                    amplitude: c.amplitude_v,
                    tau: 1.0 / (TAU * positive(&format!("noise.ou[{k}].corner_hz"), c.corner_hz)?),
                })
            })
            .collect::<Result<_, ConfigError>>()?,
        seed: n.seed.unwrap_or(0),
    };
    model
        .validate()
        .map_err(|e| invalid("noise", e.to_string()))?;
    Ok(model)
}

/// Serializes a resolved config plus provenance for a `.meta` sidecar.
pub fn to_meta(resolved: &Config, command: &str) -> String {
    let mut cfg = resolved.clone();
    cfg.meta = Some(MetaSection {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
    });
    toml::to_string(&cfg).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_resolves_completely() {
        let cfg = parse("[device]\npreset = \"sweet_spot\"\n").unwrap();
        let r = resolve(&cfg, "budget").unwrap();
        let dev = to_device(&r).unwrap();
        let reference = DeviceParams::sweet_spot_qubit();
        assert!((dev.resonator.f_r - reference.resonator.f_r).abs() < 1e-3);
        assert!((dev.budget(0).unwrap().t1 - reference.budget(0).unwrap().t1).abs() < 1e-12);
        assert_eq!(dev.noise, reference.noise);
    }

    #[test]
    fn missing_key_is_named() {
        let cfg = parse("[device]\nkappa_over_2pi_mhz = 0.46\n").unwrap();
        match resolve(&cfg, "budget") {
            Err(ConfigError::Missing(k)) => assert_eq!(k, "device.qubits"),
            other => panic!("{other:?}"),
        }
        let cfg = parse("[device]\npreset = \"sweet_spot\"\n").unwrap();
        match resolve(&cfg, "rabi") {
            Err(ConfigError::Missing(k)) => assert_eq!(k, "rabi.drive_over_2pi_mhz"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse("[device]\nkapa_over_2pi_mhz = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("kapa_over_2pi_mhz"));
    }

    #[test]
    fn meta_round_trips() {
        let cfg = parse("seed = 5\n[device]\npreset = \"long_t1\"\n[rb]\nsequences = 3\n").unwrap();
        let r = resolve(&cfg, "rb").unwrap();
        let back = parse(&to_meta(&r, "rb")).unwrap();
        let mut again = resolve(&back, "rb").unwrap();
        again.meta = None;
        assert_eq!(again, r);
    }
}
