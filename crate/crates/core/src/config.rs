//! Bench configuration files (TOML with unit-suffixed quantities), material
//! presets and the bundled reference configs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanics::calibrate_load_train;
use crate::model::{default_tangent_modulus, BilinearMaterial, Hardening, LoadTrain, SensorSpec, SpecimenGeometry};
use crate::protocol::{protocol_sweep, FatigueProtocol, MonotonicProtocol, SweepPlan};
use crate::simulator::{calibrate_fatigue_params, Bench, FatigueAnchor, ProtocolSpec};
use crate::units::{format_si, parse_quantity, Dimension};

/// Sensor-beam stiffness used when a config does not give one, N/m.
pub const DEFAULT_K_SENSOR: f64 = 15_000.0;
/// Mean stress reached per unit mean displacement in the Cu fatigue series:
/// 100 MPa at 0.9 um (and 300 MPa at 2.7 um).
pub const DEFAULT_CALIBRATION_STRESS: f64 = 100e6;
pub const DEFAULT_CALIBRATION_DISPLACEMENT: f64 = 0.9e-6;

pub const BUNDLED_CONFIGS: &[(&str, &str)] = &[
    ("cu-validation", include_str!("../configs/cu-validation.toml")),
    ("cu-300nm-monotonic", include_str!("../configs/cu-300nm-monotonic.toml")),
    ("cu-300nm-elastic", include_str!("../configs/cu-300nm-elastic.toml")),
    ("cu-300nm-fatigue-d2.7", include_str!("../configs/cu-300nm-fatigue-d2.7.toml")),
    ("cu-300nm-fatigue-d0.9", include_str!("../configs/cu-300nm-fatigue-d0.9.toml")),
    ("cu-300nm-sweep", include_str!("../configs/cu-300nm-sweep.toml")),
    ("cu-300nm-trend-sweep", include_str!("../configs/cu-300nm-trend-sweep.toml")),
    ("au-evap", include_str!("../configs/au-evap.toml")),
    ("tan-template", include_str!("../configs/tan-template.toml")),
];

pub fn bundled_config(name: &str) -> Option<&'static str> {
    BUNDLED_CONFIGS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

// ---------------------------------------------------------------------------
// material presets

#[derive(Debug, Clone, Copy, Default)]
struct PresetValues {
    youngs_modulus: Option<f64>,
    unloading_modulus: Option<f64>,
    yield_strength: Option<f64>,
    yield_strength_std: Option<f64>,
    uts: Option<f64>,
    fatigue_strength_coeff: Option<f64>,
    fatigue_exponent: Option<f64>,
}

pub const PRESET_NAMES: &[&str] = &["au-evap", "cu-validation", "cu-300nm", "tan-template"];

/// Basquin parameters of the 300 nm Cu film: b fixed at -0.05 and sigma_f
/// anchored at 3.3e3 cycles under 300 +/- 20 MPa.
pub fn cu_300nm_fatigue() -> (f64, f64) {
    let anchor = FatigueAnchor {
        sigma_mean: 300e6,
        sigma_amp: 20e6,
        cycles: 3.3e3,
        runout: false,
    };
    let fit = calibrate_fatigue_params(&[anchor], 575e6, Some(-0.05)).expect("anchor is well posed");
    (fit.sigma_f, fit.b)
}

fn preset(name: &str) -> Option<PresetValues> {
    let (sf, b) = cu_300nm_fatigue();
    match name {
        "cu-validation" => Some(PresetValues {
            youngs_modulus: Some(103e9),
            unloading_modulus: Some(107e9),
            yield_strength: Some(474.2e6),
            uts: Some(575e6),
            fatigue_strength_coeff: Some(sf),
            fatigue_exponent: Some(b),
            ..Default::default()
        }),
        "cu-300nm" => Some(PresetValues {
            youngs_modulus: Some(103e9),
            yield_strength: Some(410e6),
            uts: Some(575e6),
            fatigue_strength_coeff: Some(sf),
            fatigue_exponent: Some(b),
            ..Default::default()
        }),
        "au-evap" => Some(PresetValues {
            youngs_modulus: Some(79e9),
            yield_strength: Some(270e6),
            yield_strength_std: Some(13.4e6),
            uts: Some(330e6),
            ..Default::default()
        }),
        "tan-template" => Some(PresetValues::default()),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// file schema

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub geometry: RawGeometry,
    pub material: RawMaterial,
    #[serde(default)]
    pub load_train: RawTrain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<RawSensor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotonic: Option<RawMonotonic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fatigue: Option<RawFatigue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<RawSweep>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGeometry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_length: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<String>,
    pub thickness: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMaterial {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub youngs_modulus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unloading_modulus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yield_strength: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yield_strength_std: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangent_modulus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardening: Option<Hardening>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uts: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fatigue_strength_coeff: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fatigue_exponent: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTrain {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sensor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_align: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_rate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_stress: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_displacement: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSensor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disp_resolution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_resolution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disp_noise_std: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_noise_std: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMonotonic {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<String>,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unload: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_displacement: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFatigue {
    pub mean: String,
    /// Peak-to-peak.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<String>,
    /// The x of "+/- x".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_amplitude: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cycles: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_cycle: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub means: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_amplitudes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cycles: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_cycle: Option<usize>,
}

// ---------------------------------------------------------------------------
// normalized config

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialConfig {
    pub id: String,
    pub preset: Option<String>,
    pub material: BilinearMaterial,
    /// Specimen-to-specimen scatter of the yield strength, Pa.
    pub yield_strength_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrainConfig {
    Explicit(LoadTrain),
    /// `k_align` solved so the elastic stress per actuator displacement of
    /// the configured specimen equals `rate` (Pa/m).
    Calibrated { k_sensor: f64, rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub means: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub frequency: f64,
    pub max_cycles: u64,
    pub samples_per_cycle: usize,
}

impl SweepConfig {
    pub fn plan(&self) -> SweepPlan {
        let template = FatigueProtocol {
            mean_displacement: 0.0,
            amplitude: 0.0,
            frequency: self.frequency,
            max_cycles: self.max_cycles,
            samples_per_cycle: self.samples_per_cycle,
        };
        protocol_sweep(&self.means, &self.amplitudes, &template)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProtocolConfig {
    Monotonic(MonotonicProtocol),
    Fatigue(FatigueProtocol),
    Sweep(SweepConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub seed: u64,
    pub geometry: SpecimenGeometry,
    pub material: MaterialConfig,
    pub train: TrainConfig,
    pub sensor: SensorSpec,
    pub protocol: ProtocolConfig,
}

fn q(field: &str, text: &str, dim: Dimension) -> Result<f64> {
    parse_quantity(text, dim).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{field}: {msg}")),
        other => other,
    })
}

fn q_opt(field: &str, text: &Option<String>, dim: Dimension) -> Result<Option<f64>> {
    text.as_deref().map(|t| q(field, t, dim)).transpose()
}

fn config_err(e: Error, field: &str) -> Error {
    match e {
        Error::InvalidInput(msg) | Error::Protocol(msg) => Error::Config(format!("{field}: {msg}")),
        other => other,
    }
}

impl BenchConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(&raw)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let g = &raw.geometry;
        let geometry = SpecimenGeometry::new(
            q_opt("geometry.gauge_length", &g.gauge_length, Dimension::Length)?.unwrap_or(600e-6),
            q_opt("geometry.width", &g.width, Dimension::Length)?.unwrap_or(100e-6),
            q("geometry.thickness", &g.thickness, Dimension::Length)?,
        )
        .map_err(|e| config_err(e, "geometry"))?;

        let material = material_from_raw(&raw.material)?;
        let train = train_from_raw(&raw.load_train)?;

        let defaults = SensorSpec::default();
        let s = raw.sensor.clone().unwrap_or_default();
        let seed = raw.seed.unwrap_or(0);
        let sensor = SensorSpec {
            disp_resolution: q_opt("sensor.disp_resolution", &s.disp_resolution, Dimension::Length)?
                .unwrap_or(defaults.disp_resolution),
            load_resolution: q_opt("sensor.load_resolution", &s.load_resolution, Dimension::Force)?
                .unwrap_or(defaults.load_resolution),
            disp_noise_std: q_opt("sensor.disp_noise_std", &s.disp_noise_std, Dimension::Length)?
                .unwrap_or(defaults.disp_noise_std),
            load_noise_std: q_opt("sensor.load_noise_std", &s.load_noise_std, Dimension::Force)?
                .unwrap_or(defaults.load_noise_std),
            rng_seed: seed,
        };
        sensor.validate().map_err(|e| config_err(e, "sensor"))?;

        let sections = [raw.monotonic.is_some(), raw.fatigue.is_some(), raw.sweep.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if sections != 1 {
            return Err(Error::Config(format!(
                "exactly one of [monotonic], [fatigue], [sweep] is required, found {sections}"
            )));
        }
        let protocol = if let Some(m) = &raw.monotonic {
            ProtocolConfig::Monotonic(monotonic_from_raw(m)?)
        } else if let Some(f) = &raw.fatigue {
            ProtocolConfig::Fatigue(fatigue_from_raw(f)?)
        } else {
            ProtocolConfig::Sweep(sweep_from_raw(raw.sweep.as_ref().expect("checked above"))?)
        };

        Ok(Self {
            seed,
            geometry,
            material,
            train,
            sensor,
            protocol,
        })
    }

    /// Normalized SI form of the config; loading it gives back `self`.
    pub fn to_raw(&self) -> RawConfig {
        let m = &self.material.material;
        let p = |v: f64| Some(format_si(v, Dimension::Pressure));
        let l = |v: f64| format_si(v, Dimension::Length);
        let (monotonic, fatigue, sweep) = match &self.protocol {
            ProtocolConfig::Monotonic(mp) => (
                Some(RawMonotonic {
                    rate: Some(format_si(mp.displacement_rate, Dimension::Speed)),
                    target: l(mp.target_displacement),
                    unload: Some(mp.unload),
                    cycles: Some(mp.n_cycles),
                    sample_rate: Some(format_si(mp.sample_rate, Dimension::Frequency)),
                    final_displacement: mp.final_displacement.map(l),
                }),
                None,
                None,
            ),
            ProtocolConfig::Fatigue(fp) => (
                None,
                Some(RawFatigue {
                    mean: l(fp.mean_displacement),
                    amplitude: Some(l(fp.amplitude)),
                    half_amplitude: None,
                    frequency: Some(format_si(fp.frequency, Dimension::Frequency)),
                    max_cycles: Some(fp.max_cycles),
                    samples_per_cycle: Some(fp.samples_per_cycle),
                }),
                None,
            ),
            ProtocolConfig::Sweep(sw) => (
                None,
                None,
                Some(RawSweep {
                    means: sw.means.iter().map(|&v| l(v)).collect(),
                    amplitudes: Some(sw.amplitudes.iter().map(|&v| l(v)).collect()),
                    half_amplitudes: None,
                    frequency: Some(format_si(sw.frequency, Dimension::Frequency)),
                    max_cycles: Some(sw.max_cycles),
                    samples_per_cycle: Some(sw.samples_per_cycle),
                }),
            ),
        };
        let load_train = match self.train {
            TrainConfig::Explicit(t) => RawTrain {
                k_sensor: Some(format_si(t.k_sensor, Dimension::Stiffness)),
                k_align: Some(format_si(t.k_align, Dimension::Stiffness)),
                ..Default::default()
            },
            TrainConfig::Calibrated { k_sensor, rate } => RawTrain {
                k_sensor: Some(format_si(k_sensor, Dimension::Stiffness)),
                calibration_rate: Some(format_si(rate, Dimension::StressRate)),
                ..Default::default()
            },
        };
        RawConfig {
            seed: Some(self.seed),
            geometry: RawGeometry {
                gauge_length: Some(l(self.geometry.gauge_length)),
                width: Some(l(self.geometry.width)),
                thickness: l(self.geometry.thickness),
            },
            material: RawMaterial {
                preset: self.material.preset.clone(),
                name: Some(self.material.id.clone()),
                youngs_modulus: p(m.youngs_modulus),
                unloading_modulus: m.unloading_modulus.map(|v| format_si(v, Dimension::Pressure)),
                yield_strength: p(m.yield_strength),
                yield_strength_std: p(self.material.yield_strength_std),
                tangent_modulus: p(m.tangent_modulus),
                hardening: Some(m.hardening),
                uts: p(m.uts),
                fatigue_strength_coeff: p(m.fatigue_strength_coeff),
                fatigue_exponent: Some(m.fatigue_exponent),
            },
            load_train,
            sensor: Some(RawSensor {
                disp_resolution: Some(l(self.sensor.disp_resolution)),
                load_resolution: Some(format_si(self.sensor.load_resolution, Dimension::Force)),
                disp_noise_std: Some(l(self.sensor.disp_noise_std)),
                load_noise_std: Some(format_si(self.sensor.load_noise_std, Dimension::Force)),
            }),
            monotonic,
            fatigue,
            sweep,
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_raw()).expect("normalized config serializes")
    }

    /// Load train for the configured specimen.
    pub fn load_train(&self) -> Result<LoadTrain> {
        match self.train {
            TrainConfig::Explicit(t) => Ok(t),
            TrainConfig::Calibrated { k_sensor, rate } => {
                let k_align =
                    calibrate_load_train(rate, &self.geometry, self.material.material.youngs_modulus, k_sensor)?;
                LoadTrain::new(k_sensor, k_align)
            }
        }
    }

    /// Concrete bench for one specimen. A non-zero yield scatter draws the
    /// specimen's yield strength from a normal distribution seeded by `seed`.
    pub fn bench(&self, seed: u64) -> Result<Bench> {
        let train = self.load_train()?;
        let mut material = self.material.material.clone();
        if self.material.yield_strength_std > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let dist = Normal::new(material.yield_strength, self.material.yield_strength_std)
                .map_err(|e| Error::Config(format!("material.yield_strength_std: {e}")))?;
            material.yield_strength = dist.sample(&mut rng);
            material
                .validate()
                .map_err(|e| config_err(e, "material (drawn yield strength)"))?;
        }
        Ok(Bench {
            geometry: self.geometry,
            material_id: self.material.id.clone(),
            material,
            train,
            sensor: SensorSpec {
                rng_seed: seed,
                ..self.sensor
            },
        })
    }

    pub fn protocol_spec(&self) -> Option<ProtocolSpec> {
        match &self.protocol {
            ProtocolConfig::Monotonic(m) => Some(ProtocolSpec::Monotonic(*m)),
            ProtocolConfig::Fatigue(f) => Some(ProtocolSpec::Fatigue(*f)),
            ProtocolConfig::Sweep(_) => None,
        }
    }
}

fn material_from_raw(raw: &RawMaterial) -> Result<MaterialConfig> {
    let base = match &raw.preset {
        Some(name) => preset(name).ok_or_else(|| {
            Error::Config(format!(
                "material.preset: unknown material '{name}' (known: {})",
                PRESET_NAMES.join(", ")
            ))
        })?,
        None => PresetValues::default(),
    };
    let id = raw
        .name
        .clone()
        .or_else(|| raw.preset.clone())
        .unwrap_or_else(|| "custom".to_string());
    let pick = |field: &str, text: &Option<String>, fallback: Option<f64>| -> Result<Option<f64>> {
        Ok(q_opt(&format!("material.{field}"), text, Dimension::Pressure)?.or(fallback))
    };
    let require = |field: &str, v: Option<f64>| -> Result<f64> {
        v.ok_or_else(|| Error::Config(format!("material '{id}' has no {field}; set material.{field}")))
    };
    let e = require("youngs_modulus", pick("youngs_modulus", &raw.youngs_modulus, base.youngs_modulus)?)?;
    let sy = require("yield_strength", pick("yield_strength", &raw.yield_strength, base.yield_strength)?)?;
    let su = require("uts", pick("uts", &raw.uts, base.uts)?)?;
    let e_unload = pick("unloading_modulus", &raw.unloading_modulus, base.unloading_modulus)?;
    let std = pick("yield_strength_std", &raw.yield_strength_std, base.yield_strength_std)?.unwrap_or(0.0);
    if !(std >= 0.0) {
        return Err(Error::Config("material.yield_strength_std must be >= 0".into()));
    }
    let tangent = match q_opt("material.tangent_modulus", &raw.tangent_modulus, Dimension::Pressure)? {
        Some(h) => h,
        None => default_tangent_modulus(e, sy, su).map_err(|e| config_err(e, "material"))?,
    };
    let sf = pick(
        "fatigue_strength_coeff",
        &raw.fatigue_strength_coeff,
        base.fatigue_strength_coeff,
    )?
    .unwrap_or(su);
    let b = raw.fatigue_exponent.or(base.fatigue_exponent).unwrap_or(-0.05);
    let material = BilinearMaterial {
        youngs_modulus: e,
        unloading_modulus: e_unload,
        yield_strength: sy,
        tangent_modulus: tangent,
        hardening: raw.hardening.unwrap_or(Hardening::Kinematic),
        uts: su,
        fatigue_strength_coeff: sf,
        fatigue_exponent: b,
    };
    material.validate().map_err(|e| config_err(e, "material"))?;
    Ok(MaterialConfig {
        id,
        preset: raw.preset.clone(),
        material,
        yield_strength_std: std,
    })
}

fn train_from_raw(raw: &RawTrain) -> Result<TrainConfig> {
    let k_sensor = q_opt("load_train.k_sensor", &raw.k_sensor, Dimension::Stiffness)?.unwrap_or(DEFAULT_K_SENSOR);
    let k_align = q_opt("load_train.k_align", &raw.k_align, Dimension::Stiffness)?;
    let rate = q_opt("load_train.calibration_rate", &raw.calibration_rate, Dimension::StressRate)?;
    let stress = q_opt("load_train.calibration_stress", &raw.calibration_stress, Dimension::Pressure)?;
    let disp = q_opt(
        "load_train.calibration_displacement",
        &raw.calibration_displacement,
        Dimension::Length,
    )?;
    let pair = match (stress, disp) {
        (Some(s), Some(d)) => Some(s / d),
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "load_train: calibration_stress and calibration_displacement go together".into(),
            ))
        }
    };
    let given = [k_align.is_some(), rate.is_some(), pair.is_some()].iter().filter(|&&b| b).count();
    if given > 1 {
        return Err(Error::Config(
            "load_train: give only one of k_align, calibration_rate, calibration_stress/displacement".into(),
        ));
    }
    if let Some(k) = k_align {
        return Ok(TrainConfig::Explicit(
            LoadTrain::new(k_sensor, k).map_err(|e| config_err(e, "load_train"))?,
        ));
    }
    let rate = rate
        .or(pair)
        .unwrap_or(DEFAULT_CALIBRATION_STRESS / DEFAULT_CALIBRATION_DISPLACEMENT);
    if !(rate > 0.0 && k_sensor > 0.0) {
        return Err(Error::Config("load_train: stiffness and calibration rate must be > 0".into()));
    }
    Ok(TrainConfig::Calibrated { k_sensor, rate })
}

fn monotonic_from_raw(raw: &RawMonotonic) -> Result<MonotonicProtocol> {
    let defaults = MonotonicProtocol::ramp(1e-6);
    let p = MonotonicProtocol {
        displacement_rate: q_opt("monotonic.rate", &raw.rate, Dimension::Speed)?.unwrap_or(defaults.displacement_rate),
        target_displacement: q("monotonic.target", &raw.target, Dimension::Length)?,
        unload: raw.unload.unwrap_or(false),
        n_cycles: raw.cycles.unwrap_or(1),
        sample_rate: q_opt("monotonic.sample_rate", &raw.sample_rate, Dimension::Frequency)?
            .unwrap_or(defaults.sample_rate),
        final_displacement: q_opt("monotonic.final_displacement", &raw.final_displacement, Dimension::Length)?,
    };
    p.validate().map_err(|e| config_err(e, "monotonic"))?;
    Ok(p)
}

fn amplitude_of(section: &str, full: &Option<String>, half: &Option<String>) -> Result<f64> {
    match (full, half) {
        (Some(a), None) => q(&format!("{section}.amplitude"), a, Dimension::Length),
        (None, Some(h)) => Ok(2.0 * q(&format!("{section}.half_amplitude"), h, Dimension::Length)?),
        _ => Err(Error::Config(format!(
            "{section}: give exactly one of amplitude (peak-to-peak) or half_amplitude"
        ))),
    }
}

fn fatigue_from_raw(raw: &RawFatigue) -> Result<FatigueProtocol> {
    let p = FatigueProtocol {
        mean_displacement: q("fatigue.mean", &raw.mean, Dimension::Length)?,
        amplitude: amplitude_of("fatigue", &raw.amplitude, &raw.half_amplitude)?,
        frequency: q_opt("fatigue.frequency", &raw.frequency, Dimension::Frequency)?.unwrap_or(5.0),
        max_cycles: raw.max_cycles.unwrap_or(100_000),
        samples_per_cycle: raw.samples_per_cycle.unwrap_or(64),
    };
    p.validate().map_err(|e| config_err(e, "fatigue"))?;
    Ok(p)
}

fn sweep_from_raw(raw: &RawSweep) -> Result<SweepConfig> {
    let means = raw
        .means
        .iter()
        .map(|m| q("sweep.means", m, Dimension::Length))
        .collect::<Result<Vec<_>>>()?;
    let amplitudes = match (&raw.amplitudes, &raw.half_amplitudes) {
        (Some(a), None) => a
            .iter()
            .map(|v| q("sweep.amplitudes", v, Dimension::Length))
            .collect::<Result<Vec<_>>>()?,
        (None, Some(h)) => h
            .iter()
            .map(|v| Ok(2.0 * q("sweep.half_amplitudes", v, Dimension::Length)?))
            .collect::<Result<Vec<_>>>()?,
        _ => {
            return Err(Error::Config(
                "sweep: give exactly one of amplitudes or half_amplitudes".into(),
            ))
        }
    };
    if means.is_empty() || amplitudes.is_empty() {
        return Err(Error::Config("sweep: means and amplitudes must be non-empty".into()));
    }
    let sweep = SweepConfig {
        means,
        amplitudes,
        frequency: q_opt("sweep.frequency", &raw.frequency, Dimension::Frequency)?.unwrap_or(5.0),
        max_cycles: raw.max_cycles.unwrap_or(100_000),
        samples_per_cycle: raw.samples_per_cycle.unwrap_or(64),
    };
    if !(sweep.frequency > 0.0) || sweep.max_cycles == 0 || sweep.samples_per_cycle < 2 || sweep.samples_per_cycle % 2 != 0 {
        return Err(Error::Config(
            "sweep: frequency > 0, max_cycles >= 1 and an even samples_per_cycle are required".into(),
        ));
    }
    Ok(sweep)
}
