//! Lumped 1-D load train: alignment spring, film and force-sensor beam in
//! series between the actuator and the fixed stage.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::model::{stress_update, BilinearMaterial, LoadTrain, MaterialState, SpecimenGeometry};

const MAX_ITERATIONS: usize = 200;

/// Guided-end cantilever stiffness 12 E I / L^3 for deflection along the
/// thickness direction, `I = width * thickness^3 / 12`.
pub fn fixed_guided_beam_stiffness(
    youngs_modulus: f64,
    width: f64,
    thickness: f64,
    length: f64,
) -> Result<f64> {
    ensure_positive("youngs_modulus", youngs_modulus)?;
    ensure_positive("width", width)?;
    ensure_positive("thickness", thickness)?;
    ensure_positive("length", length)?;
    let inertia = width * thickness.powi(3) / 12.0;
    Ok(12.0 * youngs_modulus * inertia / length.powi(3))
}

pub fn series_stiffness(ks: &[f64]) -> Result<f64> {
    if ks.is_empty() {
        return Err(Error::InvalidInput("series_stiffness needs at least one spring".into()));
    }
    let mut compliance = 0.0;
    for (i, &k) in ks.iter().enumerate() {
        ensure_positive(&format!("stiffness[{i}]"), k)?;
        compliance += 1.0 / k;
    }
    Ok(1.0 / compliance)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisalignmentAttenuation {
    /// Fraction of an imposed lateral grip offset reaching the gauge section.
    pub ratio: f64,
    /// `-log10(ratio)`.
    pub orders_of_magnitude: f64,
}

/// Lateral offset transmitted through the alignment spring into the film.
///
/// The axial stiffness of the alignment spring does not enter the lateral
/// split; it is validated so callers pass a complete spring description.
pub fn misalignment_attenuation(
    k_axial_align: f64,
    k_lateral_align: f64,
    k_specimen_lateral: f64,
) -> Result<MisalignmentAttenuation> {
    ensure_positive("k_axial_align", k_axial_align)?;
    ensure_positive("k_lateral_align", k_lateral_align)?;
    ensure_positive("k_specimen_lateral", k_specimen_lateral)?;
    let ratio = k_lateral_align / (k_lateral_align + k_specimen_lateral);
    Ok(MisalignmentAttenuation {
        ratio,
        orders_of_magnitude: -ratio.log10(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    /// Actuator command, m.
    pub u_act: f64,
    /// Marker A displacement, equal to the sensor-beam deflection, m.
    pub delta_x: f64,
    /// Marker B displacement, m.
    pub delta_y: f64,
    /// Film force, N.
    pub force: f64,
    /// Film elongation `delta_y - delta_x`, m.
    pub delta_f: f64,
}

impl EquilibriumPoint {
    pub fn stress(&self, geometry: &SpecimenGeometry) -> f64 {
        self.force / geometry.cross_section_area()
    }
}

/// Quasi-static equilibrium of the load train at actuator position `u_act`.
///
/// Solves for the film strain `e` with
/// `(u_act - L0 e) / C = A sigma(e)`, `C = 1/k1 + 1/k_align`, using Newton
/// steps safeguarded by bisection. The residual is monotone in `e`, so a
/// bracket always exists. A film whose stress-free length exceeds the
/// current gap goes slack: zero force, state untouched.
pub fn solve_equilibrium(
    train: &LoadTrain,
    geometry: &SpecimenGeometry,
    material: &BilinearMaterial,
    state: &MaterialState,
    u_act: f64,
) -> Result<(EquilibriumPoint, MaterialState)> {
    ensure_finite("u_act", u_act)?;
    if u_act < 0.0 {
        return Err(Error::InvalidInput(format!(
            "u_act must be >= 0 on a tension-only bench, got {u_act}"
        )));
    }
    train.validate()?;
    geometry.validate()?;
    state.validate()?;

    let area = geometry.cross_section_area();
    let l0 = geometry.gauge_length;
    let compliance = train.spring_compliance();

    let eps_hi = u_act / l0;
    let (sigma_hi, _) = stress_update(material, state, eps_hi)?;
    if sigma_hi <= 0.0 {
        let point = EquilibriumPoint {
            u_act,
            delta_x: 0.0,
            delta_y: u_act,
            force: 0.0,
            delta_f: u_act,
        };
        return Ok((point, *state));
    }

    // force-balance residual in N, decreasing in strain
    let residual = |eps: f64| -> Result<(f64, f64, MaterialState)> {
        let (sigma, next) = stress_update(material, state, eps)?;
        Ok(((u_act - l0 * eps) / compliance - area * sigma, sigma, next))
    };
    let tangent = |next: &MaterialState| -> f64 {
        if next.accumulated_plastic_strain != state.accumulated_plastic_strain {
            material.tangent_modulus
        } else if state.has_yielded() {
            material.elastic_unloading_modulus()
        } else {
            material.youngs_modulus
        }
    };

    let mut lo = state.plastic_strain.min(eps_hi);
    let mut span = (material.yield_strength / material.youngs_modulus)
        .max(state.plastic_strain.abs())
        .max(1e-9);
    while stress_update(material, state, lo)?.0 > 0.0 {
        lo -= span;
        span *= 2.0;
        if !lo.is_finite() {
            return Err(Error::SolverFailure {
                iterations: 0,
                residual: f64::NAN,
            });
        }
    }
    let mut hi = eps_hi;

    // elastic guess from the series-spring split
    let e_guess = if state.has_yielded() {
        material.elastic_unloading_modulus()
    } else {
        material.youngs_modulus
    };
    let k_film = e_guess * area / l0;
    let mut eps = state.plastic_strain
        + (u_act - l0 * state.plastic_strain) / l0 / (1.0 + k_film * compliance);
    if !(eps > lo && eps < hi) {
        eps = 0.5 * (lo + hi);
    }

    let mut last_r = f64::NAN;
    for _ in 0..MAX_ITERATIONS {
        let (r, sigma, next) = residual(eps)?;
        last_r = r;
        let force = area * sigma;
        if r.abs() <= 1e-12 * force.abs().max(1.0) {
            return Ok((build_point(train, u_act, l0, eps, force), next));
        }
        if r > 0.0 {
            lo = eps;
        } else {
            hi = eps;
        }
        let slope = -l0 / compliance - area * tangent(&next);
        let newton = eps - r / slope;
        eps = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            // strain pinned to machine precision; with very stiff springs one
            // ulp of strain moves the residual by more than the force tolerance
            let (r_lo, s_lo, n_lo) = residual(lo)?;
            let (r_hi, s_hi, n_hi) = residual(hi)?;
            let (e, s, n) = if r_lo.abs() <= r_hi.abs() { (lo, s_lo, n_lo) } else { (hi, s_hi, n_hi) };
            return Ok((build_point(train, u_act, l0, e, area * s), n));
        }
    }
    Err(Error::SolverFailure {
        iterations: MAX_ITERATIONS,
        residual: last_r,
    })
}

fn build_point(train: &LoadTrain, u_act: f64, l0: f64, eps: f64, film_force: f64) -> EquilibriumPoint {
    let delta_x = film_force / train.k_sensor;
    let force = train.k_sensor * delta_x;
    let delta_y = delta_x + l0 * eps;
    EquilibriumPoint {
        u_act,
        delta_x,
        delta_y,
        force,
        delta_f: delta_y - delta_x,
    }
}

/// Alignment-spring stiffness giving an elastic stress-per-actuator-
/// displacement rate `target` (Pa/m): `A * target = series(k1, k_align, E A / L0)`.
pub fn calibrate_load_train(
    target: f64,
    geometry: &SpecimenGeometry,
    youngs_modulus: f64,
    k_sensor: f64,
) -> Result<f64> {
    ensure_positive("target", target)?;
    ensure_positive("youngs_modulus", youngs_modulus)?;
    ensure_positive("k_sensor", k_sensor)?;
    geometry.validate()?;
    let area = geometry.cross_section_area();
    let k_film = geometry.axial_stiffness(youngs_modulus);
    let required = area * target;
    let inv_align = 1.0 / required - 1.0 / k_sensor - 1.0 / k_film;
    if inv_align <= 0.0 {
        let limit = series_stiffness(&[k_sensor, k_film])?;
        return Err(Error::Infeasible(format!(
            "target {:.6e} Pa/m needs a series stiffness of {:.6e} N/m, but the sensor beam \
             (k1 = {:.6e} N/m) and film (E A / L0 = {:.6e} N/m) alone allow at most {:.6e} N/m \
             ({:.6e} Pa/m)",
            target,
            required,
            k_sensor,
            k_film,
            limit,
            limit / area
        )));
    }
    Ok(1.0 / inv_align)
}

/// Largest attainable stress-per-displacement rate: rigid springs, film only.
pub fn max_calibration_rate(geometry: &SpecimenGeometry, youngs_modulus: f64) -> f64 {
    youngs_modulus / geometry.gauge_length
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cu() -> BilinearMaterial {
        BilinearMaterial::new(103e9, 474.2e6, 575e6).unwrap()
    }

    #[test]
    fn beam_stiffness_scaling_and_value() {
        let k = fixed_guided_beam_stiffness(100e9, 100e-6, 10e-6, 1e-3).unwrap();
        // 12 * 100e9 * (100e-6 * 1e-15 / 12) / 1e-9, by hand
        assert_relative_eq!(k, 10.0, max_relative = 1e-12);
        // the same beam bent across its width
        let k_w = fixed_guided_beam_stiffness(100e9, 10e-6, 100e-6, 1e-3).unwrap();
        assert_relative_eq!(k_w, 1000.0, max_relative = 1e-12);
        let k2 = fixed_guided_beam_stiffness(100e9, 100e-6, 10e-6, 2e-3).unwrap();
        assert_relative_eq!(k / k2, 8.0, max_relative = 1e-14);
        let kt = fixed_guided_beam_stiffness(100e9, 100e-6, 20e-6, 1e-3).unwrap();
        assert_relative_eq!(kt / k, 8.0, max_relative = 1e-14);
        assert!(fixed_guided_beam_stiffness(100e9, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn series_examples() {
        assert_relative_eq!(series_stiffness(&[700.0, 700.0]).unwrap(), 350.0, max_relative = 1e-15);
        assert_eq!(series_stiffness(&[1000.0]).unwrap(), 1000.0);
        assert_relative_eq!(
            series_stiffness(&[1000.0, 2000.0, 3000.0]).unwrap(),
            6000.0 / 11.0,
            max_relative = 1e-14
        );
        assert!(series_stiffness(&[]).is_err());
        assert!(series_stiffness(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn misalignment_examples() {
        let m = misalignment_attenuation(1.0, 5.0, 5.0).unwrap();
        assert_eq!(m.ratio, 0.5);
        let m = misalignment_attenuation(1.0, 1e-6, 1.0).unwrap();
        assert_relative_eq!(m.ratio, 1e-6, max_relative = 1e-5);
        assert_relative_eq!(m.orders_of_magnitude, 6.0, max_relative = 1e-5);
        let m = misalignment_attenuation(1.0, 1e300, 1.0).unwrap();
        assert_eq!(m.ratio, 1.0);
        assert!(misalignment_attenuation(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_displacement_is_zero_everything() {
        let g = SpecimenGeometry::standard(300e-9).unwrap();
        let t = LoadTrain::new(15_000.0, 25_000.0).unwrap();
        let (p, s) = solve_equilibrium(&t, &g, &cu(), &MaterialState::virgin(), 0.0).unwrap();
        assert_eq!(p.force, 0.0);
        assert_eq!(p.delta_x, 0.0);
        assert_eq!(p.delta_y, 0.0);
        assert_eq!(p.delta_f, 0.0);
        assert_eq!(s, MaterialState::virgin());
    }

    #[test]
    fn elastic_series_split() {
        let g = SpecimenGeometry::standard(300e-9).unwrap();
        let t = LoadTrain::new(15_000.0, 25_000.0).unwrap();
        let k_film = 103e9 * 3e-11 / 600e-6;
        assert_relative_eq!(k_film, 5150.0, max_relative = 1e-12);
        let k_eff = 1.0 / (1.0 / 15_000.0 + 1.0 / 25_000.0 + 1.0 / 5150.0);
        let (p, _) = solve_equilibrium(&t, &g, &cu(), &MaterialState::virgin(), 0.9e-6).unwrap();
        assert_relative_eq!(p.force, k_eff * 0.9e-6, max_relative = 1e-12);
        let sigma = p.stress(&g);
        assert!((sigma / 100e6 - 1.0).abs() < 0.01, "sigma = {sigma}");
    }

    #[test]
    fn equations_hold_on_points() {
        let g = SpecimenGeometry::standard(300e-9).unwrap();
        let t = LoadTrain::new(15_000.0, 25_000.0).unwrap();
        let m = cu();
        let mut st = MaterialState::virgin();
        for i in 0..=60 {
            let u = i as f64 * 0.5e-6;
            let (p, next) = solve_equilibrium(&t, &g, &m, &st, u).unwrap();
            assert_eq!(p.delta_f, p.delta_y - p.delta_x);
            assert_eq!(p.force, t.k_sensor * p.delta_x);
            let closure = p.delta_y + p.force / t.k_align;
            assert!((closure - u).abs() <= 1e-12 * u.max(1e-9), "u={u} closure={closure}");
            st = next;
        }
        assert!(st.has_yielded());
    }

    #[test]
    fn slack_after_plastic_unload() {
        let g = SpecimenGeometry::standard(300e-9).unwrap();
        let t = LoadTrain::new(15_000.0, 25_000.0).unwrap();
        let m = cu();
        let (_, st) = solve_equilibrium(&t, &g, &m, &MaterialState::virgin(), 20e-6).unwrap();
        let (p, st2) = solve_equilibrium(&t, &g, &m, &st, 1e-6).unwrap();
        assert_eq!(p.force, 0.0);
        assert_eq!(p.delta_f, 1e-6);
        assert_eq!(st2, st);
    }

    #[test]
    fn negative_displacement_rejected() {
        let g = SpecimenGeometry::standard(300e-9).unwrap();
        let t = LoadTrain::new(15_000.0, 25_000.0).unwrap();
        let r = solve_equilibrium(&t, &g, &cu(), &MaterialState::virgin(), -1e-9);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn plateau_slope_comes_from_springs_only() {
        let g = SpecimenGeometry::standard(300e-9).unwrap();
        let t = LoadTrain::new(15_000.0, 25_000.0).unwrap();
        let m = cu().with_tangent_modulus(0.0).unwrap();
        let (p1, s1) = solve_equilibrium(&t, &g, &m, &MaterialState::virgin(), 10e-6).unwrap();
        let (p2, _) = solve_equilibrium(&t, &g, &m, &s1, 10.01e-6).unwrap();
        // perfectly plastic film: force frozen, extra stroke goes into the film
        assert_relative_eq!(p1.force, 474.2e6 * 3e-11, max_relative = 1e-12);
        assert_relative_eq!(p2.force, p1.force, max_relative = 1e-12);
        let dfdu = (p2.force - p1.force) / 0.01e-6;
        assert!(dfdu.abs() < 1e-3);
    }

    #[test]
    fn calibration_examples() {
        let g = SpecimenGeometry::standard(300e-9).unwrap();
        let c = 100e6 / 0.9e-6;
        let k_align = calibrate_load_train(c, &g, 103e9, 15_000.0).unwrap();
        // 1/k = 1/(A c) - 1/k1 - L0/(E A), by hand
        let oracle = 1.0 / (0.9e-6 / (100e6 * 3e-11) - 1.0 / 15_000.0 - 600e-6 / (103e9 * 3e-11));
        assert_relative_eq!(k_align, oracle, max_relative = 1e-12);
        assert!(k_align > 2e4 && k_align < 3e4);

        assert_relative_eq!(max_calibration_rate(&g, 103e9), 171.666_666e12, max_relative = 1e-8);
        let err = calibrate_load_train(180e12, &g, 103e9, 1e15).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }
}
