//! Actuator displacement waveforms for monotonic and fatigue tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MIN_SAMPLES_PER_RAMP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformPoint {
    /// Time, s.
    pub t: f64,
    /// Actuator command, m.
    pub u_act: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicProtocol {
    /// Actuator speed, m/s.
    pub displacement_rate: f64,
    /// Peak of each load/unload cycle, m.
    pub target_displacement: f64,
    pub unload: bool,
    pub n_cycles: u32,
    /// Hz.
    pub sample_rate: f64,
    /// Optional closing ramp after the cycles, typically pulled to failure.
    pub final_displacement: Option<f64>,
}

impl MonotonicProtocol {
    /// Single ramp at 0.1 um/s (a strain rate of 1.67e-4 /s over 600 um).
    pub fn ramp(target_displacement: f64) -> Self {
        Self {
            displacement_rate: 0.1e-6,
            target_displacement,
            unload: false,
            n_cycles: 1,
            sample_rate: 10.0,
            final_displacement: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Protocol(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("displacement_rate", self.displacement_rate)?;
        positive("target_displacement", self.target_displacement)?;
        positive("sample_rate", self.sample_rate)?;
        if self.n_cycles == 0 {
            return Err(Error::Protocol("n_cycles must be >= 1".into()));
        }
        if !self.unload && self.n_cycles > 1 {
            return Err(Error::Protocol("repeated cycles require unload = true".into()));
        }
        self.check_ramp("target_displacement", self.target_displacement)?;
        if let Some(fin) = self.final_displacement {
            let start = if self.unload { 0.0 } else { self.target_displacement };
            if !(fin.is_finite() && fin > start) {
                return Err(Error::Protocol(format!(
                    "final_displacement ({fin}) must exceed the displacement it starts from ({start})"
                )));
            }
            self.check_ramp("final_displacement", fin - start)?;
        }
        Ok(())
    }

    fn check_ramp(&self, name: &str, stroke: f64) -> Result<()> {
        let samples = stroke / self.displacement_rate * self.sample_rate;
        if samples < MIN_SAMPLES_PER_RAMP {
            return Err(Error::Protocol(format!(
                "{name}: sample_rate gives {samples:.2} samples per ramp, need >= 10"
            )));
        }
        Ok(())
    }

    fn legs(&self) -> Vec<(f64, f64)> {
        let mut legs = Vec::new();
        for _ in 0..self.n_cycles {
            legs.push((0.0, self.target_displacement));
            if self.unload {
                legs.push((self.target_displacement, 0.0));
            }
        }
        if let Some(fin) = self.final_displacement {
            let start = legs.last().map(|l| l.1).unwrap_or(0.0);
            legs.push((start, fin));
        }
        legs
    }
}

/// Piecewise-linear triangular ramps sampled uniformly in time within each
/// leg; leg end points are hit exactly.
pub fn monotonic_waveform(p: &MonotonicProtocol) -> Result<Vec<WaveformPoint>> {
    p.validate()?;
    let mut out = vec![WaveformPoint { t: 0.0, u_act: 0.0 }];
    let mut t0 = 0.0;
    for (from, to) in p.legs() {
        let duration = (to - from).abs() / p.displacement_rate;
        let n = (duration * p.sample_rate).round().max(1.0) as usize;
        for i in 1..=n {
            let (t, u) = if i == n {
                (t0 + duration, to)
            } else {
                let frac = i as f64 / n as f64;
                (t0 + duration * frac, from + (to - from) * frac)
            };
            out.push(WaveformPoint { t, u_act: u });
        }
        t0 += duration;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatigueProtocol {
    /// Mean displacement d, m.
    pub mean_displacement: f64,
    /// Peak-to-peak displacement amplitude A, m.
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    pub max_cycles: u64,
    pub samples_per_cycle: usize,
}

impl FatigueProtocol {
    pub fn new(mean_displacement: f64, amplitude: f64) -> Result<Self> {
        let p = Self {
            mean_displacement,
            amplitude,
            frequency: 5.0,
            max_cycles: 100_000,
            samples_per_cycle: 64,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds from a +/- half amplitude, as in "+/- 0.18 um".
    pub fn from_half_amplitude(mean_displacement: f64, half_amplitude: f64) -> Result<Self> {
        Self::new(mean_displacement, 2.0 * half_amplitude)
    }

    pub fn trough(&self) -> f64 {
        self.mean_displacement - self.amplitude / 2.0
    }

    pub fn peak(&self) -> f64 {
        self.mean_displacement + self.amplitude / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.mean_displacement;
        let a = self.amplitude;
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Protocol(format!("mean displacement must be > 0, got {d}")));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Protocol(format!("amplitude must be > 0, got {a}")));
        }
        if a / 2.0 > d {
            return Err(Error::Protocol(format!(
                "A/2 > d: amplitude {a} exceeds twice the mean displacement {d}"
            )));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::Protocol(format!("frequency must be > 0, got {}", self.frequency)));
        }
        if self.max_cycles == 0 {
            return Err(Error::Protocol("max_cycles must be >= 1".into()));
        }
        if self.samples_per_cycle < 2 || self.samples_per_cycle % 2 != 0 {
            return Err(Error::Protocol(format!(
                "samples_per_cycle must be even and >= 2, got {}",
                self.samples_per_cycle
            )));
        }
        Ok(())
    }
}

/// One triangular period, trough to trough, `samples_per_cycle + 1` points.
/// Cycle `k` occupies `[k/f, (k+1)/f]`; consecutive cycles share an end point.
pub fn fatigue_waveform(p: &FatigueProtocol, cycle_index: u64) -> Result<Vec<WaveformPoint>> {
    p.validate()?;
    let n = p.samples_per_cycle;
    let half = n / 2;
    let trough = p.trough();
    let peak = p.peak();
    // time from the global sample index, so cycle k's last sample and
    // cycle k+1's first carry the same t
    let first = cycle_index * n as u64;
    let rate = n as f64 * p.frequency;
    Ok((0..=n)
        .map(|j| {
            let u = if j == 0 || j == n {
                trough
            } else if j == half {
                peak
            } else if j < half {
                trough + (peak - trough) * (j as f64 / half as f64)
            } else {
                peak - (peak - trough) * ((j - half) as f64 / half as f64)
            };
            WaveformPoint {
                t: (first + j as u64) as f64 / rate,
                u_act: u,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub mean_displacement: f64,
    pub amplitude: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepPlan {
    pub protocols: Vec<FatigueProtocol>,
    pub excluded: Vec<Exclusion>,
}

/// Mean-major, amplitude-minor product of the two lists. Infeasible pairs
/// are reported in `excluded`, never silently dropped.
pub fn protocol_sweep(means: &[f64], amplitudes: &[f64], template: &FatigueProtocol) -> SweepPlan {
    let mut plan = SweepPlan::default();
    for &d in means {
        for &a in amplitudes {
            let candidate = FatigueProtocol {
                mean_displacement: d,
                amplitude: a,
                ..*template
            };
            match candidate.validate() {
                Ok(()) => plan.protocols.push(candidate),
                Err(e) => plan.excluded.push(Exclusion {
                    mean_displacement: d,
                    amplitude: a,
                    reason: match e {
                        Error::Protocol(msg) if msg.starts_with("A/2 > d") => "A/2 > d".to_string(),
                        other => other.to_string(),
                    },
                }),
            }
        }
    }
    plan
}
