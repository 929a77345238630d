//! Data reduction: raw marker/load channels to stress-strain curves and
//! material properties, plastic strain range, and S-N fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SpecimenGeometry;
use crate::simulator::{fit_log_log, goodman_equivalent_amplitude, FatigueOutcome, FatigueStatus, TestRecord};

/// Minimum number of points for a modulus fit.
pub const MIN_FIT_POINTS: usize = 5;

/// Attached to every report that contains a modulus.
pub const MODULUS_NOTE: &str = "modulus from E = F L0 / (A delta_f): the elongation is \
normalized by the gauge length; the uncorrected form F / (A delta_f) is not dimensionally a modulus";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Loading,
    Unloading,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub strain: f64,
    /// Pa.
    pub stress: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StressStrainCurve {
    pub points: Vec<CurvePoint>,
}

impl StressStrainCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sub-curve of points `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            points: self.points[range].to_vec(),
        }
    }

    /// Index range of the first contiguous run with the given direction.
    fn first_run(&self, direction: Direction) -> Option<std::ops::Range<usize>> {
        let start = self.points.iter().position(|p| p.direction == direction)?;
        let len = self.points[start..]
            .iter()
            .take_while(|p| p.direction == direction)
            .count();
        Some(start..start + len)
    }
}

/// Film modulus from one force/elongation pair, `F L0 / (A delta_f)`.
pub fn modulus_from_elongation(force: f64, area: f64, elongation: f64, gauge_length: f64) -> f64 {
    force * gauge_length / (area * elongation)
}

/// Stress `k1 dx / A` and strain `(dy - dx) / L0` per sample; direction
/// from the sign of the actuator step (the first sample counts as loading,
/// a zero step keeps the previous direction).
pub fn reduce(record: &TestRecord, geometry: &SpecimenGeometry, k_sensor: f64) -> Result<StressStrainCurve> {
    if record.samples.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "record has {} samples, need at least 2",
            record.samples.len()
        )));
    }
    if record.metadata.geometry != *geometry {
        return Err(Error::MetadataMismatch(format!(
            "geometry {:?} does not match record geometry {:?}",
            geometry, record.metadata.geometry
        )));
    }
    if record.metadata.train.k_sensor != k_sensor {
        return Err(Error::MetadataMismatch(format!(
            "k1 = {k_sensor} N/m does not match record k1 = {} N/m",
            record.metadata.train.k_sensor
        )));
    }
    let area = geometry.cross_section_area();
    let l0 = geometry.gauge_length;
    let mut direction = Direction::Loading;
    let mut prev_u = record.samples[0].u_act;
    let points = record
        .samples
        .iter()
        .map(|s| {
            if s.u_act > prev_u {
                direction = Direction::Loading;
            } else if s.u_act < prev_u {
                direction = Direction::Unloading;
            }
            prev_u = s.u_act;
            let force = k_sensor * s.dx;
            let elongation = s.dy - s.dx;
            CurvePoint {
                strain: elongation / l0,
                stress: force / area,
                direction,
            }
        })
        .collect();
    Ok(StressStrainCurve { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainWindow {
    pub min: f64,
    pub max: f64,
}

impl std::fmt::Display for StrainWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{:.6e}, {:.6e}]", self.min, self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusFit {
    pub modulus: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub window: StrainWindow,
    pub direction: Direction,
}

/// Ordinary least squares of stress on strain over the points of
/// `direction` whose strain lies in `window`.
pub fn fit_modulus(curve: &StressStrainCurve, window: StrainWindow, direction: Direction) -> Result<ModulusFit> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.direction == direction && p.strain >= window.min && p.strain <= window.max)
        .map(|p| (p.strain, p.stress))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            window: format!("{window} ({direction:?})"),
            found: pts.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(format!("all strains in window {window} coincide")));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(ModulusFit {
        modulus: slope,
        intercept,
        r_squared,
        n_points: pts.len(),
        window,
        direction,
    })
}

fn window_of<'a>(pts: impl Iterator<Item = &'a CurvePoint>) -> Option<StrainWindow> {
    let mut w: Option<StrainWindow> = None;
    for p in pts {
        let cur = w.get_or_insert(StrainWindow {
            min: p.strain,
            max: p.strain,
        });
        cur.min = cur.min.min(p.strain);
        cur.max = cur.max.max(p.strain);
    }
    w
}

/// Strain span of the first loading run with stress up to half that run's
/// peak, which keeps the plastic knee out of the fit.
pub fn default_loading_window(curve: &StressStrainCurve) -> Option<StrainWindow> {
    let run = curve.first_run(Direction::Loading)?;
    let pts = &curve.points[run];
    let peak = pts.iter().map(|p| p.stress).fold(f64::MIN, f64::max);
    window_of(pts.iter().filter(|p| p.stress <= 0.5 * peak))
}

/// Strain span of the first unloading run between 10% and 90% of the
/// stress it unloads from.
pub fn default_unloading_window(curve: &StressStrainCurve) -> Option<StrainWindow> {
    let run = curve.first_run(Direction::Unloading)?;
    let peak = if run.start > 0 {
        curve.points[run.start - 1].stress
    } else {
        curve.points[run.start].stress
    };
    window_of(
        curve.points[run]
            .iter()
            .filter(|p| p.stress >= 0.1 * peak && p.stress <= 0.9 * peak),
    )
}

/// Loading points that extend the strain envelope, in order.
fn loading_envelope(curve: &StressStrainCurve) -> Vec<CurvePoint> {
    let mut max_strain = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for p in &curve.points {
        if p.direction == Direction::Loading && p.strain > max_strain {
            max_strain = p.strain;
            out.push(*p);
        }
    }
    out
}

/// Stress where the line `E (strain - offset)` first meets the loading
/// envelope, by linear interpolation between the bracketing samples.
pub fn offset_yield(curve: &StressStrainCurve, modulus: f64, offset: f64) -> Result<f64> {
    if !(modulus.is_finite() && modulus > 0.0) {
        return Err(Error::InvalidInput(format!("modulus must be > 0, got {modulus}")));
    }
    let env = loading_envelope(curve);
    let gap = |p: &CurvePoint| p.stress - modulus * (p.strain - offset);
    for w in env.windows(2) {
        let (g0, g1) = (gap(&w[0]), gap(&w[1]));
        if g0 > 0.0 && g1 <= 0.0 {
            let frac = g0 / (g0 - g1);
            return Ok(w[0].stress + frac * (w[1].stress - w[0].stress));
        }
    }
    Err(Error::NoYield)
}

/// Maximum stress over loading samples (all samples when none is loading).
pub fn uts(curve: &StressStrainCurve) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::InvalidInput("empty curve".into()));
    }
    let loading = curve
        .points
        .iter()
        .filter(|p| p.direction == Direction::Loading)
        .map(|p| p.stress)
        .fold(f64::NEG_INFINITY, f64::max);
    if loading.is_finite() {
        Ok(loading)
    } else {
        Ok(curve.points.iter().map(|p| p.stress).fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Relative strain gap (of the loop's strain span) tolerated between the
/// first and last point of a hysteresis loop.
pub const LOOP_CLOSURE_TOL: f64 = 0.01;

fn crossing(points: &[CurvePoint], direction: Direction, level: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        if w[1].direction != direction {
            return None;
        }
        let (a, b) = (w[0].stress - level, w[1].stress - level);
        if a == 0.0 {
            return Some(w[0].strain);
        }
        if (a < 0.0) != (b < 0.0) || b == 0.0 {
            let frac = a / (a - b);
            Some(w[0].strain + frac * (w[1].strain - w[0].strain))
        } else {
            None
        }
    })
}

/// Width of a closed loop in strain at its mean stress.
pub fn plastic_strain_range(cycle: &StressStrainCurve) -> Result<f64> {
    let pts = &cycle.points;
    if pts.len() < 3 {
        return Err(Error::InvalidInput("a loop needs at least 3 points".into()));
    }
    let (lo, hi) = pts
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.strain), hi.max(p.strain)));
    let gap = (pts[0].strain - pts[pts.len() - 1].strain).abs();
    if gap > LOOP_CLOSURE_TOL * (hi - lo) {
        return Err(Error::OpenLoop { gap });
    }
    let (smin, smax) = pts
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.stress), hi.max(p.stress)));
    let mean = 0.5 * (smin + smax);
    let up = crossing(pts, Direction::Loading, mean);
    let down = crossing(pts, Direction::Unloading, mean);
    match (up, down) {
        (Some(a), Some(b)) => Ok((b - a).abs()),
        _ => Err(Error::InvalidInput(
            "loop lacks a loading or an unloading branch through its mean stress".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicReport {
    pub e_loading: f64,
    pub e_unloading: Option<f64>,
    /// `None` when the curve never leaves the elastic line.
    pub sigma_y_offset02: Option<f64>,
    pub uts: f64,
    pub elongation_at_failure: f64,
    pub loading_fit: ModulusFit,
    pub unloading_fit: Option<ModulusFit>,
    pub note: String,
}

/// Modulus (loading and, when present, unloading), 0.2% offset yield, UTS
/// and final elongation with the default fit windows.
pub fn analyze_monotonic(curve: &StressStrainCurve) -> Result<MonotonicReport> {
    let window = default_loading_window(curve).ok_or_else(|| Error::TooFewPoints {
        window: "first loading run".into(),
        found: 0,
        needed: MIN_FIT_POINTS,
    })?;
    // Later runs can re-enter the same strain span (slack reloads after a
    // plastic unload), so each fit only sees the run its window came from.
    let first_loading = curve.slice(curve.first_run(Direction::Loading).expect("window implies a loading run"));
    let loading_fit = fit_modulus(&first_loading, window, Direction::Loading)?;
    let unloading_fit = default_unloading_window(curve).and_then(|w| {
        let run = curve.first_run(Direction::Unloading)?;
        fit_modulus(&curve.slice(run), w, Direction::Unloading).ok()
    });
    let sigma_y = match offset_yield(curve, loading_fit.modulus, 0.002) {
        Ok(s) => Some(s),
        Err(Error::NoYield) => None,
        Err(e) => return Err(e),
    };
    Ok(MonotonicReport {
        e_loading: loading_fit.modulus,
        e_unloading: unloading_fit.map(|f| f.modulus),
        sigma_y_offset02: sigma_y,
        uts: uts(curve)?,
        elongation_at_failure: curve.points.last().map(|p| p.strain).unwrap_or(0.0),
        loading_fit,
        unloading_fit,
        note: MODULUS_NOTE.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub sigma_mean: f64,
    pub sigma_amp: f64,
    /// `None` when the last loop is open or lacks a branch.
    pub delta_eps_pl: Option<f64>,
    pub e_loading: Option<f64>,
}

/// Statistics of the last `samples_per_cycle + 1` points of a fatigue curve.
pub fn analyze_last_cycle(curve: &StressStrainCurve, samples_per_cycle: usize) -> Result<CycleReport> {
    let n = samples_per_cycle + 1;
    if curve.len() < n {
        return Err(Error::InvalidInput(format!(
            "curve has {} points, a cycle needs {n}",
            curve.len()
        )));
    }
    let cycle = curve.slice(curve.len() - n..curve.len());
    let (smin, smax) = cycle
        .points
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.stress), hi.max(p.stress)));
    let e_loading = window_of(cycle.points.iter().filter(|p| p.direction == Direction::Loading))
        .and_then(|w| fit_modulus(&cycle, w, Direction::Loading).ok())
        .map(|f| f.modulus);
    Ok(CycleReport {
        sigma_max: smax,
        sigma_min: smin,
        sigma_mean: 0.5 * (smax + smin),
        sigma_amp: 0.5 * (smax - smin),
        delta_eps_pl: plastic_strain_range(&cycle).ok(),
        e_loading,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunoutCheck {
    pub sigma_ar: f64,
    pub cycles: u64,
    pub predicted_life: f64,
    /// False when the model predicts failure before the observed runout.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SNModel {
    pub sigma_f: f64,
    pub b: f64,
    pub sigma_u: f64,
    /// `ln sigma_ar - ln(sigma_f (2N)^b)` per failure.
    pub residuals: Vec<f64>,
    pub runouts: Vec<RunoutCheck>,
}

impl SNModel {
    /// Reversals-based Basquin life `(sigma_ar / sigma_f)^(1/b) / 2`.
    pub fn predicted_life(&self, sigma_ar: f64) -> f64 {
        crate::simulator::basquin_life(sigma_ar, self.sigma_f, self.b)
    }

    /// Life at (amplitude, mean) after the Goodman correction.
    pub fn predicted_life_at(&self, sigma_amp: f64, sigma_mean: f64) -> f64 {
        match goodman_equivalent_amplitude(sigma_amp, sigma_mean, self.sigma_u) {
            Some(ar) => self.predicted_life(ar),
            None => 0.0,
        }
    }

    pub fn flagged_runouts(&self) -> impl Iterator<Item = &RunoutCheck> {
        self.runouts.iter().filter(|r| !r.consistent)
    }
}

/// Basquin fit over failed outcomes; runouts are checked against the fitted
/// curve but never enter the regression.
pub fn fit_sn(outcomes: &[FatigueOutcome], sigma_u: f64) -> Result<SNModel> {
    let mut failures = Vec::new();
    let mut runouts = Vec::new();
    for o in outcomes {
        let s = &o.steady_cycle_stats;
        let sigma_ar = goodman_equivalent_amplitude(s.sigma_amp, s.sigma_mean, sigma_u);
        match (o.status, sigma_ar) {
            (FatigueStatus::Failed(n), Some(ar)) => failures.push((ar, n as f64)),
            // static overloads carry no stress-life information
            (FatigueStatus::Failed(_), None) => {}
            (FatigueStatus::Runout(n), ar) => runouts.push((ar.unwrap_or(f64::INFINITY), n)),
        }
    }
    if failures.len() < 2 {
        return Err(Error::UnderDetermined(format!(
            "S-N fit needs at least 2 failures, got {}",
            failures.len()
        )));
    }
    let fit = fit_log_log(&failures, None)?;
    let mut model = SNModel {
        sigma_f: fit.sigma_f,
        b: fit.b,
        sigma_u,
        residuals: failures
            .iter()
            .map(|&(ar, n)| ar.ln() - (fit.sigma_f.ln() + fit.b * (2.0 * n).ln()))
            .collect(),
        runouts: Vec::new(),
    };
    model.runouts = runouts
        .into_iter()
        .map(|(ar, n)| {
            let predicted = model.predicted_life(ar);
            RunoutCheck {
                sigma_ar: ar,
                cycles: n,
                predicted_life: predicted,
                consistent: predicted >= n as f64,
            }
        })
        .collect();
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{monotonic_curve, stress_update, BilinearMaterial, MaterialState};
    use approx::assert_relative_eq;

    fn line(modulus: f64, n: usize, max: f64, direction: Direction) -> StressStrainCurve {
        StressStrainCurve {
            points: (0..n)
                .map(|i| {
                    let e = max * i as f64 / (n - 1) as f64;
                    CurvePoint {
                        strain: e,
                        stress: modulus * e,
                        direction,
                    }
                })
                .collect(),
        }
    }

    #[test]
    fn exact_line_fit() {
        let c = line(100e9, 20, 0.003, Direction::Loading);
        let f = fit_modulus(&c, StrainWindow { min: 0.0, max: 1.0 }, Direction::Loading).unwrap();
        assert_relative_eq!(f.modulus, 100e9, max_relative = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn too_few_points_names_window() {
        let c = line(100e9, 20, 0.003, Direction::Loading);
        let err = fit_modulus(&c, StrainWindow { min: 0.0, max: 0.0005 }, Direction::Loading).unwrap_err();
        match err {
            Error::TooFewPoints { window, found, .. } => {
                assert!(window.contains("5.0"));
                assert_eq!(found, 4);
            }
            e => panic!("{e}"),
        }
        let err = fit_modulus(&c, StrainWindow { min: 0.0, max: 1.0 }, Direction::Unloading).unwrap_err();
        assert!(matches!(err, Error::TooFewPoints { found: 0, .. }));
    }

    #[test]
    fn offset_yield_on_plateau_is_sigma_y() {
        let g = SpecimenGeometry::standard(300e-9).unwrap();
        let m = BilinearMaterial::new(103e9, 474.2e6, 575e6)
            .unwrap()
            .with_tangent_modulus(0.0)
            .unwrap();
        let c = monotonic_curve(&m, &g, 0.02, 101).unwrap();
        let s = offset_yield(&c, 103e9, 0.002).unwrap();
        assert_relative_eq!(s, 474.2e6, max_relative = 1e-12);
    }

    #[test]
    fn offset_yield_matches_closed_form_with_hardening() {
        let g = SpecimenGeometry::standard(300e-9).unwrap();
        let (e, sy, h) = (103e9, 474.2e6, 2e9);
        let m = BilinearMaterial::new(e, sy, 575e6).unwrap().with_tangent_modulus(h).unwrap();
        let c = monotonic_curve(&m, &g, 0.02, 57).unwrap();
        // E (x - 0.002) = sy + h (x - sy/E)
        let x = (sy - h * sy / e + 0.002 * e) / (e - h);
        let oracle = e * (x - 0.002);
        assert_relative_eq!(offset_yield(&c, e, 0.002).unwrap(), oracle, max_relative = 1e-12);
    }

    #[test]
    fn elastic_curve_has_no_yield() {
        let c = line(100e9, 20, 0.003, Direction::Loading);
        assert!(matches!(offset_yield(&c, 100e9, 0.002), Err(Error::NoYield)));
    }

    #[test]
    fn uts_examples() {
        let single = StressStrainCurve {
            points: vec![CurvePoint {
                strain: 0.001,
                stress: 123e6,
                direction: Direction::Loading,
            }],
        };
        assert_eq!(uts(&single).unwrap(), 123e6);
        let ramp = line(100e9, 41, 0.004, Direction::Loading);
        assert_relative_eq!(uts(&ramp).unwrap(), 400e6, max_relative = 1e-14);
        assert!(uts(&StressStrainCurve::default()).is_err());
    }

    fn strain_loop(m: &BilinearMaterial, amp: f64, n: usize) -> StressStrainCurve {
        // two warm-up cycles, then one recorded loop from -amp
        let mut st = MaterialState::virgin();
        let path = |k: usize| -> f64 {
            let x = (k % (2 * n)) as f64 / n as f64;
            if x <= 1.0 {
                -amp + 2.0 * amp * x
            } else {
                amp - 2.0 * amp * (x - 1.0)
            }
        };
        for k in 0..=n / 2 {
            st = stress_update(m, &st, -amp * k as f64 / (n / 2) as f64).unwrap().1;
        }
        for k in 0..4 * n {
            st = stress_update(m, &st, path(k)).unwrap().1;
        }
        let mut pts = Vec::new();
        for k in 0..=2 * n {
            let eps = path(k);
            let (s, next) = stress_update(m, &st, eps).unwrap();
            st = next;
            pts.push(CurvePoint {
                strain: eps,
                stress: s,
                direction: if k <= n { Direction::Loading } else { Direction::Unloading },
            });
        }
        StressStrainCurve { points: pts }
    }

    #[test]
    fn elastic_loop_has_zero_width() {
        let m = BilinearMaterial::new(100e9, 500e6, 600e6).unwrap();
        let c = strain_loop(&m, 0.001, 40);
        assert!(plastic_strain_range(&c).unwrap() < 1e-15);
    }

    #[test]
    fn kinematic_loop_matches_closed_form() {
        let (e, sy, h) = (100e9, 300e6, 1e9);
        let m = BilinearMaterial::new(e, sy, 600e6).unwrap().with_tangent_modulus(h).unwrap();
        let amp = 0.01;
        let c = strain_loop(&m, amp, 200);
        let dsigma = 2.0 * (sy + h * (amp - sy / e));
        let oracle = 2.0 * amp - dsigma / e;
        assert_relative_eq!(plastic_strain_range(&c).unwrap(), oracle, max_relative = 1e-9);
    }

    #[test]
    fn open_loop_reports_gap() {
        let mut c = line(100e9, 20, 0.003, Direction::Loading);
        c.points.push(CurvePoint {
            strain: 0.002,
            stress: 100e6,
            direction: Direction::Unloading,
        });
        match plastic_strain_range(&c) {
            Err(Error::OpenLoop { gap }) => assert_relative_eq!(gap, 0.002, max_relative = 1e-12),
            r => panic!("{r:?}"),
        }
    }
}
