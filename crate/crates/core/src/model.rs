//! Specimen, material, load-train and sensor types plus the 1-D elastoplastic
//! constitutive update.
//!
//! All quantities are SI. The film follows a bilinear law: slope `E` up to
//! `sigma_y`, then slope `H` (the tangent modulus of the stress-strain curve).
//! Once the film has yielded, elastic unloading and reloading use the
//! unloading modulus, which defaults to `E`.

use serde::{Deserialize, Serialize};

use crate::analysis::{CurvePoint, Direction, StressStrainCurve};
use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Strain at which the default tangent modulus brings the curve to the UTS.
/// Relative overshoot of the yield surface still treated as elastic.
const YIELD_ROUNDOFF: f64 = 1e-13;

pub const DEFAULT_FAILURE_STRAIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecimenGeometry {
    /// Gauge length in m.
    pub gauge_length: f64,
    /// Width in m.
    pub width: f64,
    /// Film thickness in m.
    pub thickness: f64,
}

impl SpecimenGeometry {
    pub fn new(gauge_length: f64, width: f64, thickness: f64) -> Result<Self> {
        let g = Self {
            gauge_length,
            width,
            thickness,
        };
        g.validate()?;
        Ok(g)
    }

    /// The 600 um x 100 um gauge section with the given film thickness.
    pub fn standard(thickness: f64) -> Result<Self> {
        Self::new(600e-6, 100e-6, thickness)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("gauge_length", self.gauge_length)?;
        ensure_positive("width", self.width)?;
        ensure_positive("thickness", self.thickness)
    }

    pub fn cross_section_area(&self) -> f64 {
        self.width * self.thickness
    }

    /// Axial stiffness E*A/L0 of the gauge section for a given modulus.
    pub fn axial_stiffness(&self, modulus: f64) -> f64 {
        modulus * self.cross_section_area() / self.gauge_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hardening {
    Isotropic,
    Kinematic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearMaterial {
    /// Virgin loading modulus, Pa.
    pub youngs_modulus: f64,
    /// Elastic modulus after first yield, Pa. `None` means same as loading.
    pub unloading_modulus: Option<f64>,
    pub yield_strength: f64,
    /// Post-yield slope of the monotonic stress-strain curve, Pa.
    pub tangent_modulus: f64,
    pub hardening: Hardening,
    pub uts: f64,
    /// Basquin coefficient sigma_f, Pa.
    pub fatigue_strength_coeff: f64,
    /// Basquin exponent b (negative).
    pub fatigue_exponent: f64,
}

impl BilinearMaterial {
    /// Kinematic-hardening material whose tangent modulus carries the curve
    /// to the UTS at 5% strain. Fatigue parameters default to
    /// `sigma_f = uts`, `b = -0.05`; override with [`Self::with_fatigue`].
    pub fn new(youngs_modulus: f64, yield_strength: f64, uts: f64) -> Result<Self> {
        let tangent = default_tangent_modulus(youngs_modulus, yield_strength, uts)?;
        let m = Self {
            youngs_modulus,
            unloading_modulus: None,
            yield_strength,
            tangent_modulus: tangent,
            hardening: Hardening::Kinematic,
            uts,
            fatigue_strength_coeff: uts,
            fatigue_exponent: -0.05,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_tangent_modulus(mut self, h: f64) -> Result<Self> {
        self.tangent_modulus = h;
        self.validate()?;
        Ok(self)
    }

    pub fn with_unloading_modulus(mut self, e_unload: f64) -> Result<Self> {
        self.unloading_modulus = Some(e_unload);
        self.validate()?;
        Ok(self)
    }

    pub fn with_hardening(mut self, hardening: Hardening) -> Self {
        self.hardening = hardening;
        self
    }

    pub fn with_fatigue(mut self, sigma_f: f64, b: f64) -> Result<Self> {
        self.fatigue_strength_coeff = sigma_f;
        self.fatigue_exponent = b;
        self.validate()?;
        Ok(self)
    }

    pub fn elastic_unloading_modulus(&self) -> f64 {
        self.unloading_modulus.unwrap_or(self.youngs_modulus)
    }

    pub fn elastic_limit_strain(&self) -> f64 {
        self.yield_strength / self.youngs_modulus
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("youngs_modulus", self.youngs_modulus)?;
        ensure_positive("yield_strength", self.yield_strength)?;
        ensure_positive("uts", self.uts)?;
        ensure_positive("fatigue_strength_coeff", self.fatigue_strength_coeff)?;
        ensure_finite("tangent_modulus", self.tangent_modulus)?;
        ensure_finite("fatigue_exponent", self.fatigue_exponent)?;
        if let Some(eu) = self.unloading_modulus {
            ensure_positive("unloading_modulus", eu)?;
        }
        let e_min = self.youngs_modulus.min(self.elastic_unloading_modulus());
        if !(self.tangent_modulus >= 0.0 && self.tangent_modulus < e_min) {
            return Err(Error::InvalidInput(format!(
                "tangent_modulus must satisfy 0 <= H < E, got H={} E={}",
                self.tangent_modulus, e_min
            )));
        }
        if self.yield_strength >= self.uts {
            return Err(Error::InvalidInput(format!(
                "yield_strength ({}) must be below uts ({})",
                self.yield_strength, self.uts
            )));
        }
        if self.fatigue_exponent >= 0.0 {
            return Err(Error::InvalidInput(format!(
                "fatigue_exponent must be negative, got {}",
                self.fatigue_exponent
            )));
        }
        Ok(())
    }
}

/// Tangent modulus that makes the bilinear curve reach `uts` at 5% strain.
pub fn default_tangent_modulus(youngs_modulus: f64, yield_strength: f64, uts: f64) -> Result<f64> {
    ensure_positive("youngs_modulus", youngs_modulus)?;
    let eps_y = yield_strength / youngs_modulus;
    if eps_y >= DEFAULT_FAILURE_STRAIN {
        return Err(Error::InvalidInput(format!(
            "elastic limit strain {eps_y} is past the 5% default failure strain"
        )));
    }
    Ok((uts - yield_strength) / (DEFAULT_FAILURE_STRAIN - eps_y))
}

/// Internal variables of the film.
///
/// `kappa` is the isotropic yield-radius increase; `alpha` the kinematic
/// backstress. `accumulated_plastic_strain > 0` marks a film that has yielded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MaterialState {
    pub plastic_strain: f64,
    pub backstress: f64,
    pub kappa: f64,
    pub accumulated_plastic_strain: f64,
    pub damage: f64,
}

impl MaterialState {
    pub fn virgin() -> Self {
        Self::default()
    }

    pub fn has_yielded(&self) -> bool {
        self.accumulated_plastic_strain > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("plastic_strain", self.plastic_strain)?;
        ensure_finite("backstress", self.backstress)?;
        ensure_finite("kappa", self.kappa)?;
        let p = self.accumulated_plastic_strain;
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "accumulated plastic strain must be >= 0, got {p}"
            )));
        }
        if !(0.0..=1.0).contains(&self.damage) {
            return Err(Error::InvalidInput(format!(
                "damage must lie in [0, 1], got {}",
                self.damage
            )));
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidInput("kappa must be >= 0".into()));
        }
        Ok(())
    }
}

/// Return-mapping stress update for a total strain.
///
/// The first plastic step from a virgin state is taken in closed form on the
/// monotonic curve `sigma_y + H (e - sigma_y/E)`; later steps use the radial
/// return with plastic modulus `K = Eu H / (Eu - H)` so that the post-yield
/// slope stays `H` for any step size.
pub fn stress_update(
    material: &BilinearMaterial,
    state: &MaterialState,
    strain_total: f64,
) -> Result<(f64, MaterialState)> {
    ensure_finite("strain_total", strain_total)?;
    state.validate()?;

    let e0 = material.youngs_modulus;
    let eu = material.elastic_unloading_modulus();
    let h = material.tangent_modulus;
    let sy = material.yield_strength;

    let e_el = if state.has_yielded() { eu } else { e0 };
    let trial = e_el * (strain_total - state.plastic_strain);
    let (xi, radius) = match material.hardening {
        Hardening::Kinematic => (trial - state.backstress, sy),
        Hardening::Isotropic => (trial, sy + state.kappa),
    };
    let f = xi.abs() - radius;
    // a reload to the strain of the last plastic step lands a few ulps off
    // the surface; that is not new yielding
    if f <= YIELD_ROUNDOFF * radius {
        return Ok((trial, *state));
    }

    let s = xi.signum();
    let mut next = *state;
    let stress;
    if !state.has_yielded() {
        let e = strain_total - state.plastic_strain;
        stress = s * (sy + h * (e.abs() - sy / e0));
        let new_eps_p = strain_total - stress / eu;
        next.accumulated_plastic_strain += (new_eps_p - state.plastic_strain).abs();
        next.plastic_strain = new_eps_p;
        match material.hardening {
            Hardening::Kinematic => next.backstress = stress - s * sy,
            Hardening::Isotropic => next.kappa = stress.abs() - sy,
        }
    } else {
        let k = eu * h / (eu - h);
        let dgamma = f / (eu + k);
        stress = trial - eu * dgamma * s;
        next.plastic_strain += dgamma * s;
        next.accumulated_plastic_strain += dgamma;
        match material.hardening {
            Hardening::Kinematic => next.backstress += k * dgamma * s,
            Hardening::Isotropic => next.kappa += k * dgamma,
        }
    }
    Ok((stress, next))
}

/// Noise-free monotonic curve sampled uniformly in strain, with the elastic
/// limit inserted so the piecewise-linear curve passes through it.
pub fn monotonic_curve(
    material: &BilinearMaterial,
    geometry: &SpecimenGeometry,
    max_strain: f64,
    n_points: usize,
) -> Result<StressStrainCurve> {
    material.validate()?;
    geometry.validate()?;
    ensure_positive("max_strain", max_strain)?;
    if n_points < 2 {
        return Err(Error::InvalidInput(format!("n_points must be >= 2, got {n_points}")));
    }
    let mut strains: Vec<f64> = (0..n_points)
        .map(|i| max_strain * i as f64 / (n_points - 1) as f64)
        .collect();
    let knee = material.elastic_limit_strain();
    if knee < max_strain && !strains.contains(&knee) {
        let at = strains.partition_point(|&e| e < knee);
        strains.insert(at, knee);
    }
    let virgin = MaterialState::virgin();
    let mut points = Vec::with_capacity(strains.len());
    for eps in strains {
        let (stress, _) = stress_update(material, &virgin, eps)?;
        points.push(CurvePoint {
            strain: eps,
            stress,
            direction: Direction::Loading,
        });
    }
    Ok(StressStrainCurve { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadTrain {
    /// Force-sensor beam stiffness k1, N/m.
    pub k_sensor: f64,
    /// Alignment spring stiffness on the actuator side, N/m.
    pub k_align: f64,
}

impl LoadTrain {
    pub fn new(k_sensor: f64, k_align: f64) -> Result<Self> {
        let t = Self { k_sensor, k_align };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("k_sensor", self.k_sensor)?;
        ensure_positive("k_align", self.k_align)
    }

    /// Combined compliance of the two springs, m/N.
    pub fn spring_compliance(&self) -> f64 {
        1.0 / self.k_sensor + 1.0 / self.k_align
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub disp_resolution: f64,
    pub load_resolution: f64,
    pub disp_noise_std: f64,
    pub load_noise_std: f64,
    pub rng_seed: u64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            disp_resolution: 1e-11,
            load_resolution: 5e-5,
            disp_noise_std: 0.0,
            load_noise_std: 0.0,
            rng_seed: 0,
        }
    }
}

impl SensorSpec {
    /// Noise-free channels with quantization far below any simulated signal.
    pub fn ideal(rng_seed: u64) -> Self {
        Self {
            disp_resolution: 1e-18,
            load_resolution: 1e-18,
            disp_noise_std: 0.0,
            load_noise_std: 0.0,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("disp_resolution", self.disp_resolution)?;
        ensure_positive("load_resolution", self.load_resolution)?;
        for (name, v) in [
            ("disp_noise_std", self.disp_noise_std),
            ("load_noise_std", self.load_noise_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cu() -> BilinearMaterial {
        BilinearMaterial::new(103e9, 474.2e6, 575e6).unwrap()
    }

    #[test]
    fn area_is_width_times_thickness() {
        let g = SpecimenGeometry::standard(300e-9).unwrap();
        assert_relative_eq!(g.cross_section_area(), 3e-11, max_relative = 1e-15);
        assert!(SpecimenGeometry::new(0.0, 1.0, 1.0).is_err());
        assert!(SpecimenGeometry::new(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn elastic_branch() {
        let m = BilinearMaterial::new(100e9, 500e6, 600e6).unwrap();
        let (s, st) = stress_update(&m, &MaterialState::virgin(), 0.001).unwrap();
        assert_relative_eq!(s, 100e6, max_relative = 1e-14);
        assert_eq!(st.plastic_strain, 0.0);
        assert_eq!(st, MaterialState::virgin());
    }

    #[test]
    fn perfect_plasticity_plateau() {
        let m = cu().with_tangent_modulus(0.0).unwrap();
        let (s, st) = stress_update(&m, &MaterialState::virgin(), 0.01).unwrap();
        assert_eq!(s, 474.2e6);
        assert_relative_eq!(st.plastic_strain, 0.01 - 474.2e6 / 103e9, max_relative = 1e-12);
    }

    #[test]
    fn default_tangent_reaches_uts_at_five_percent() {
        let m = cu();
        let (s, _) = stress_update(&m, &MaterialState::virgin(), 0.05).unwrap();
        assert_relative_eq!(s, 575e6, max_relative = 1e-12);
    }

    #[test]
    fn non_finite_strain_rejected() {
        let r = stress_update(&cu(), &MaterialState::virgin(), f64::NAN);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn invalid_materials_rejected() {
        assert!(BilinearMaterial::new(-1.0, 1.0, 2.0).is_err());
        assert!(BilinearMaterial::new(100e9, 600e6, 500e6).is_err());
        assert!(cu().with_tangent_modulus(200e9).is_err());
        assert!(cu().with_fatigue(60e6, 0.1).is_err());
    }

    #[test]
    fn unloading_modulus_applies_after_yield() {
        let m = cu().with_unloading_modulus(107e9).unwrap();
        let (s1, st1) = stress_update(&m, &MaterialState::virgin(), 0.01).unwrap();
        let (s2, st2) = stress_update(&m, &st1, 0.009).unwrap();
        assert_eq!(st2, st1);
        assert_relative_eq!((s1 - s2) / 0.001, 107e9, max_relative = 1e-9);
    }

    #[test]
    fn isotropic_hardening_expands_yield_surface() {
        let m = cu().with_hardening(Hardening::Isotropic);
        let (s1, st1) = stress_update(&m, &MaterialState::virgin(), 0.02).unwrap();
        assert_relative_eq!(st1.kappa, s1 - 474.2e6, max_relative = 1e-12);
        // reverse yielding only once |stress| exceeds the expanded radius
        let eps_rev = st1.plastic_strain - s1 / 103e9 * 0.99;
        let (s2, st2) = stress_update(&m, &st1, eps_rev).unwrap();
        assert_eq!(st2, st1);
        assert!(s2 < 0.0 && s2.abs() < s1);
    }

    #[test]
    fn monotonic_curve_examples() {
        let g = SpecimenGeometry::standard(300e-9).unwrap();
        let m = BilinearMaterial::new(100e9, 500e6, 600e6).unwrap();
        let c = monotonic_curve(&m, &g, 0.004, 5).unwrap();
        let last = c.points.last().unwrap();
        assert_eq!(last.strain, 0.004);
        assert_relative_eq!(last.stress, 400e6, max_relative = 1e-14);

        let cu = cu();
        assert_relative_eq!(cu.elastic_limit_strain(), 4.603_883_495e-3, max_relative = 1e-9);

        let flat = cu.with_tangent_modulus(0.0).unwrap();
        let c = monotonic_curve(&flat, &g, 0.03, 31).unwrap();
        let max = c.points.iter().map(|p| p.stress).fold(f64::MIN, f64::max);
        assert_eq!(max, 474.2e6);
        assert!(c
            .points
            .iter()
            .any(|p| p.strain == flat.elastic_limit_strain() && (p.stress - 474.2e6).abs() < 1e-6));
        assert!(monotonic_curve(&flat, &g, 0.03, 1).is_err());
        assert!(monotonic_curve(&flat, &g, -0.03, 10).is_err());
    }
}
