//! Time-stepped virtual bench: drives the load train through a protocol,
//! records quantized sensor channels and accumulates fatigue damage.

mod life;
mod sensor;

pub use life::{
    basquin_amplitude, basquin_life, calibrate_fatigue_params, cycle_damage, goodman_equivalent_amplitude,
    BasquinFit, FatigueAnchor,
};
pub(crate) use life::fit_log_log;
pub use sensor::{quantize, sensor_read, sensor_rng, Channel};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanics::{solve_equilibrium, EquilibriumPoint};
use crate::model::{BilinearMaterial, LoadTrain, MaterialState, SensorSpec, SpecimenGeometry};
use crate::protocol::{fatigue_waveform, monotonic_waveform, FatigueProtocol, MonotonicProtocol};

/// Consecutive-cycle change in plastic strain range below which the
/// hysteresis loop counts as stable.
pub const LOOP_STABILITY_TOL: f64 = 1e-9;

/// Everything the bench needs besides the protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bench {
    pub geometry: SpecimenGeometry,
    pub material_id: String,
    pub material: BilinearMaterial,
    pub train: LoadTrain,
    pub sensor: SensorSpec,
}

impl Bench {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.material.validate()?;
        self.train.validate()?;
        self.sensor.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProtocolSpec {
    Monotonic(MonotonicProtocol),
    Fatigue(FatigueProtocol),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub geometry: SpecimenGeometry,
    pub material_id: String,
    pub material: BilinearMaterial,
    pub train: LoadTrain,
    pub sensor: SensorSpec,
    pub protocol: ProtocolSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordSample {
    pub t: f64,
    pub u_act: f64,
    /// Measured marker A displacement, m.
    pub dx: f64,
    /// Measured marker B displacement, m.
    pub dy: f64,
    /// Load-cell reading, N.
    pub force: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    SpecimenFailed { t: f64, sample_index: usize },
    SolverError { sample_index: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub metadata: RecordMetadata,
    pub samples: Vec<RecordSample>,
    pub termination: Termination,
    /// Fatigue runs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fatigue: Option<FatigueOutcome>,
}

struct Recorder {
    spec: SensorSpec,
    rng: ChaCha8Rng,
}

impl Recorder {
    fn new(spec: SensorSpec) -> Self {
        Self {
            rng: sensor_rng(&spec),
            spec,
        }
    }

    fn read(&mut self, t: f64, p: &EquilibriumPoint) -> RecordSample {
        let dx = sensor_read(p.delta_x, &self.spec, Channel::Displacement, &mut self.rng);
        let dy = sensor_read(p.delta_y, &self.spec, Channel::Displacement, &mut self.rng);
        let force = sensor_read(p.force, &self.spec, Channel::Load, &mut self.rng);
        RecordSample {
            t,
            u_act: p.u_act,
            dx,
            dy,
            force,
        }
    }
}

fn metadata(bench: &Bench, protocol: ProtocolSpec) -> RecordMetadata {
    RecordMetadata {
        geometry: bench.geometry,
        material_id: bench.material_id.clone(),
        material: bench.material.clone(),
        train: bench.train,
        sensor: bench.sensor,
        protocol,
        seed: bench.sensor.rng_seed,
    }
}

/// One equilibrium solve per waveform sample. Stops at the first sample
/// whose film stress reaches the UTS (that sample is kept). Solver failures
/// end the record with [`Termination::SolverError`].
pub fn run_monotonic(bench: &Bench, protocol: &MonotonicProtocol) -> Result<TestRecord> {
    bench.validate()?;
    let wave = monotonic_waveform(protocol)?;
    let area = bench.geometry.cross_section_area();
    let mut state = MaterialState::virgin();
    let mut rec = Recorder::new(bench.sensor);
    let mut samples = Vec::with_capacity(wave.len());
    let mut termination = Termination::Completed;
    for (i, w) in wave.iter().enumerate() {
        match solve_equilibrium(&bench.train, &bench.geometry, &bench.material, &state, w.u_act) {
            Ok((point, next)) => {
                state = next;
                samples.push(rec.read(w.t, &point));
                if point.force / area >= bench.material.uts {
                    termination = Termination::SpecimenFailed { t: w.t, sample_index: i };
                    break;
                }
            }
            Err(e @ Error::SolverFailure { .. }) => {
                termination = Termination::SolverError {
                    sample_index: i,
                    message: e.to_string(),
                };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(TestRecord {
        metadata: metadata(bench, ProtocolSpec::Monotonic(*protocol)),
        samples,
        termination,
        fatigue: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub sigma_mean: f64,
    pub sigma_amp: f64,
    /// Plastic strain range over the cycle.
    pub delta_eps_pl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "cycles", rename_all = "snake_case")]
pub enum FatigueStatus {
    Failed(u64),
    Runout(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatigueOutcome {
    pub protocol: FatigueProtocol,
    pub cycles_completed: u64,
    pub status: FatigueStatus,
    pub steady_cycle_stats: CycleStats,
    /// Miner sum at the end of the run.
    pub damage: f64,
    /// Damage of the last cycle (constant once the loop is stable).
    pub last_cycle_damage: f64,
    /// Cycle after which the loop was declared stable, if it was.
    pub stabilized_at: Option<u64>,
}

impl FatigueOutcome {
    pub fn is_failure(&self) -> bool {
        matches!(self.status, FatigueStatus::Failed(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepping {
    /// Simulate until the loop stabilizes, then finish in closed form.
    StabilizedShortcut,
    /// Simulate every cycle.
    CycleByCycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FatigueOptions {
    pub stepping: Stepping,
    pub keep_record: bool,
}

impl Default for FatigueOptions {
    fn default() -> Self {
        Self {
            stepping: Stepping::StabilizedShortcut,
            keep_record: true,
        }
    }
}

struct CycleTrace {
    points: Vec<(f64, EquilibriumPoint)>,
    stats: CycleStats,
}

fn simulate_cycle(
    bench: &Bench,
    protocol: &FatigueProtocol,
    cycle: u64,
    start: &(f64, EquilibriumPoint),
    state: &mut MaterialState,
) -> Result<CycleTrace> {
    let area = bench.geometry.cross_section_area();
    let wave = fatigue_waveform(protocol, cycle)?;
    let mut points = Vec::with_capacity(wave.len());
    points.push((wave[0].t, start.1));
    let mut eps_p_min = state.plastic_strain;
    let mut eps_p_max = state.plastic_strain;
    for w in &wave[1..] {
        let (p, next) = solve_equilibrium(&bench.train, &bench.geometry, &bench.material, state, w.u_act)?;
        *state = next;
        eps_p_min = eps_p_min.min(state.plastic_strain);
        eps_p_max = eps_p_max.max(state.plastic_strain);
        points.push((w.t, p));
    }
    let (mut smax, mut smin) = (f64::MIN, f64::MAX);
    for (_, p) in &points {
        let s = p.force / area;
        smax = smax.max(s);
        smin = smin.min(s);
    }
    Ok(CycleTrace {
        points,
        stats: CycleStats {
            sigma_max: smax,
            sigma_min: smin,
            sigma_mean: 0.5 * (smax + smin),
            sigma_amp: 0.5 * (smax - smin),
            delta_eps_pl: eps_p_max - eps_p_min,
        },
    })
}

fn loop_is_stable(prev: &CycleStats, cur: &CycleStats) -> bool {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    (cur.delta_eps_pl - prev.delta_eps_pl).abs() < LOOP_STABILITY_TOL
        && close(cur.sigma_max, prev.sigma_max)
        && close(cur.sigma_min, prev.sigma_min)
}

/// Smallest `n >= 1` with `damage + n * per_cycle >= 1`.
fn remaining_cycles(damage: f64, per_cycle: f64) -> Option<u64> {
    if per_cycle <= 0.0 {
        return None;
    }
    let mut n = ((1.0 - damage) / per_cycle).ceil().max(1.0);
    if !n.is_finite() || n > u64::MAX as f64 / 2.0 {
        return None;
    }
    while n > 1.0 && damage + (n - 1.0) * per_cycle >= 1.0 {
        n -= 1.0;
    }
    while damage + n * per_cycle < 1.0 {
        n += 1.0;
    }
    Some(n as u64)
}

/// Displacement-controlled tension-tension fatigue run.
///
/// Each simulated cycle yields (sigma_a, sigma_m); Goodman maps them to an
/// equivalent reversed amplitude, Basquin gives the life and Miner adds
/// `1/N_f`. With [`Stepping::StabilizedShortcut`] the remaining life after
/// the loop stabilizes is computed in closed form.
pub fn run_fatigue(
    bench: &Bench,
    protocol: &FatigueProtocol,
    options: FatigueOptions,
) -> Result<(FatigueOutcome, Option<TestRecord>)> {
    bench.validate()?;
    protocol.validate()?;
    let mut state = MaterialState::virgin();
    let (pre, next) = solve_equilibrium(&bench.train, &bench.geometry, &bench.material, &state, protocol.trough())?;
    state = next;

    let mut damage = 0.0;
    let mut start = (0.0, pre);
    let mut first: Option<Vec<(f64, EquilibriumPoint)>> = None;
    let mut prev: Option<CycleStats> = None;
    let mut last_trace: Vec<(f64, EquilibriumPoint)> = Vec::new();
    let mut last_cycle_index = 0u64;
    let mut stats = CycleStats {
        sigma_max: 0.0,
        sigma_min: 0.0,
        sigma_mean: 0.0,
        sigma_amp: 0.0,
        delta_eps_pl: 0.0,
    };
    let mut per_cycle = 0.0;
    let mut status = FatigueStatus::Runout(protocol.max_cycles);
    let mut completed = protocol.max_cycles;
    let mut stabilized_at = None;

    for k in 0..protocol.max_cycles {
        let trace = simulate_cycle(bench, protocol, k, &start, &mut state)?;
        stats = trace.stats;
        start = *trace.points.last().expect("cycle has points");
        if first.is_none() {
            first = Some(trace.points.clone());
        }
        last_cycle_index = k;
        let increment = if stats.sigma_max >= bench.material.uts {
            None
        } else {
            cycle_damage(&bench.material, stats.sigma_amp, stats.sigma_mean)
        };
        last_trace = trace.points;
        let Some(d) = increment else {
            // static overload
            damage = 1.0;
            per_cycle = f64::INFINITY;
            status = FatigueStatus::Failed(k + 1);
            completed = k + 1;
            break;
        };
        per_cycle = d;
        damage += per_cycle;
        if damage >= 1.0 {
            status = FatigueStatus::Failed(k + 1);
            completed = k + 1;
            break;
        }
        if options.stepping == Stepping::StabilizedShortcut {
            if let Some(p) = prev {
                if loop_is_stable(&p, &stats) {
                    let done = k + 1;
                    stabilized_at = Some(done);
                    match remaining_cycles(damage, per_cycle) {
                        Some(n) if done + n <= protocol.max_cycles => {
                            damage += n as f64 * per_cycle;
                            status = FatigueStatus::Failed(done + n);
                            completed = done + n;
                        }
                        _ => {
                            damage += (protocol.max_cycles - done) as f64 * per_cycle;
                            completed = protocol.max_cycles;
                        }
                    }
                    last_cycle_index = completed - 1;
                    break;
                }
            }
        }
        prev = Some(stats);
    }

    let outcome = FatigueOutcome {
        protocol: *protocol,
        cycles_completed: completed,
        status,
        steady_cycle_stats: stats,
        damage,
        last_cycle_damage: per_cycle,
        stabilized_at,
    };

    let record = if options.keep_record {
        Some(fatigue_record(
            bench,
            protocol,
            first.unwrap_or_default(),
            last_trace,
            last_cycle_index,
            outcome,
        ))
    } else {
        None
    };
    Ok((outcome, record))
}

fn fatigue_record(
    bench: &Bench,
    protocol: &FatigueProtocol,
    first: Vec<(f64, EquilibriumPoint)>,
    last: Vec<(f64, EquilibriumPoint)>,
    last_cycle_index: u64,
    outcome: FatigueOutcome,
) -> TestRecord {
    let mut rec = Recorder::new(bench.sensor);
    let mut samples: Vec<RecordSample> = first.iter().map(|(t, p)| rec.read(*t, p)).collect();
    if last_cycle_index > 0 {
        let period = 1.0 / protocol.frequency;
        let n = protocol.samples_per_cycle as f64;
        let t0 = last_cycle_index as f64 * period;
        for (j, (_, p)) in last.iter().enumerate() {
            let t = t0 + period * (j as f64 / n);
            if samples.last().is_some_and(|s| s.t >= t) {
                continue;
            }
            samples.push(rec.read(t, p));
        }
    }
    let termination = match outcome.status {
        FatigueStatus::Failed(_) => {
            let t = samples.last().map(|s| s.t).unwrap_or(0.0);
            Termination::SpecimenFailed {
                t,
                sample_index: samples.len().saturating_sub(1),
            }
        }
        FatigueStatus::Runout(_) => Termination::Completed,
    };
    TestRecord {
        metadata: metadata(bench, ProtocolSpec::Fatigue(*protocol)),
        samples,
        termination,
        fatigue: Some(outcome),
    }
}
