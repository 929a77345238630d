//! Sweep summary table: one row per fatigue run.

use std::fmt::Write as _;

use microtensile::simulator::{FatigueOutcome, FatigueStatus};
use microtensile::Error;

pub const SUMMARY_HEADER: &str =
    "mean_m,amplitude_m,status,cycles,sigma_max_Pa,sigma_min_Pa,sigma_mean_Pa,sigma_amp_Pa,delta_eps_pl,damage";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub mean: f64,
    pub amplitude: f64,
    pub failed: bool,
    pub cycles: u64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub sigma_mean: f64,
    pub sigma_amp: f64,
    pub delta_eps_pl: f64,
    pub damage: f64,
}

impl From<&FatigueOutcome> for SummaryRow {
    fn from(o: &FatigueOutcome) -> Self {
        let (failed, cycles) = match o.status {
            FatigueStatus::Failed(n) => (true, n),
            FatigueStatus::Runout(n) => (false, n),
        };
        let s = o.steady_cycle_stats;
        Self {
            mean: o.protocol.mean_displacement,
            amplitude: o.protocol.amplitude,
            failed,
            cycles,
            sigma_max: s.sigma_max,
            sigma_min: s.sigma_min,
            sigma_mean: s.sigma_mean,
            sigma_amp: s.sigma_amp,
            delta_eps_pl: s.delta_eps_pl,
            damage: o.damage,
        }
    }
}

pub fn to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.8e},{:.8e},{},{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            r.mean,
            r.amplitude,
            if r.failed { "failed" } else { "runout" },
            r.cycles,
            r.sigma_max,
            r.sigma_min,
            r.sigma_mean,
            r.sigma_amp,
            r.delta_eps_pl,
            r.damage
        );
    }
    out
}

pub fn from_csv(text: &str) -> Result<Vec<SummaryRow>, Error> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SUMMARY_HEADER) {
        return Err(Error::RecordFormat {
            row: 1,
            message: format!("expected summary header '{SUMMARY_HEADER}'"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |message: String| Error::RecordFormat { row, message };
        if f.len() != 10 {
            return Err(bad(format!("expected 10 columns, found {}", f.len())));
        }
        let num = |k: usize| -> Result<f64, Error> {
            f[k].parse::<f64>()
                .map_err(|_| bad(format!("column {} '{}' is not a number", k + 1, f[k])))
        };
        let failed = match f[2] {
            "failed" => true,
            "runout" => false,
            other => return Err(bad(format!("status '{other}' is neither failed nor runout"))),
        };
        rows.push(SummaryRow {
            mean: num(0)?,
            amplitude: num(1)?,
            failed,
            cycles: f[3]
                .parse()
                .map_err(|_| bad(format!("column 4 '{}' is not a cycle count", f[3])))?,
            sigma_max: num(4)?,
            sigma_min: num(5)?,
            sigma_mean: num(6)?,
            sigma_amp: num(7)?,
            delta_eps_pl: num(8)?,
            damage: num(9)?,
        });
    }
    Ok(rows)
}
