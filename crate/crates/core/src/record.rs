//! Test record files: a CSV of the sampled channels plus a JSON sidecar
//! `<stem>.meta.json` carrying the metadata and termination.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{FatigueOutcome, RecordMetadata, RecordSample, Termination, TestRecord};

pub const CSV_HEADER: &str = "t_s,u_act_m,dx_m,dy_m,F_N";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub metadata: RecordMetadata,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fatigue: Option<FatigueOutcome>,
}

/// CSV text with 9 significant digits per value and LF line endings.
pub fn samples_to_csv(samples: &[RecordSample]) -> String {
    let mut out = String::with_capacity(64 * (samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(
            out,
            "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            s.t, s.u_act, s.dx, s.dy, s.force
        );
    }
    out
}

pub fn samples_from_csv(text: &str) -> Result<Vec<RecordSample>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        Some((_, h)) => {
            return Err(Error::RecordFormat {
                row: 1,
                message: format!("expected header '{CSV_HEADER}', found '{h}'"),
            })
        }
        None => {
            return Err(Error::RecordFormat {
                row: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::RecordFormat {
                row,
                message: format!("expected 5 columns, found {}", fields.len()),
            });
        }
        let mut v = [0.0f64; 5];
        for (k, f) in fields.iter().enumerate() {
            v[k] = f.trim().parse().map_err(|_| Error::RecordFormat {
                row,
                message: format!("column {} '{}' is not a number", k + 1, f),
            })?;
            if !v[k].is_finite() {
                return Err(Error::RecordFormat {
                    row,
                    message: format!("column {} is not finite", k + 1),
                });
            }
        }
        samples.push(RecordSample {
            t: v[0],
            u_act: v[1],
            dx: v[2],
            dy: v[3],
            force: v[4],
        });
    }
    Ok(samples)
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

pub fn sidecar_json(record: &TestRecord) -> String {
    let sidecar = Sidecar {
        metadata: record.metadata.clone(),
        termination: record.termination.clone(),
        fatigue: record.fatigue,
    };
    let mut s = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    s.push('\n');
    s
}

pub fn parse_sidecar(text: &str) -> Result<Sidecar> {
    serde_json::from_str(text).map_err(|e| Error::RecordFormat {
        row: e.line(),
        message: format!("sidecar: {e}"),
    })
}

/// Reads a CSV and its sidecar.
pub fn read_record(csv_path: &Path) -> Result<TestRecord> {
    let samples = samples_from_csv(&std::fs::read_to_string(csv_path)?)?;
    let side_path = sidecar_path(csv_path);
    let sidecar = parse_sidecar(&std::fs::read_to_string(&side_path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", side_path.display()),
        ))
    })?)?;
    Ok(TestRecord {
        metadata: sidecar.metadata,
        samples,
        termination: sidecar.termination,
        fatigue: sidecar.fatigue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_keeps_nine_digits() {
        let s = RecordSample {
            t: 0.1,
            u_act: 2.7e-6,
            dx: 1.234_567_891_23e-7,
            dy: -0.0,
            force: 2.99e-3,
        };
        let text = samples_to_csv(&[s]);
        assert!(text.starts_with("t_s,u_act_m,dx_m,dy_m,F_N\n"));
        assert!(!text.contains('\r'));
        let back = samples_from_csv(&text).unwrap();
        assert_eq!(back[0].t, 0.1);
        assert!((back[0].dx - s.dx).abs() / s.dx < 1e-8);
    }

    #[test]
    fn bad_row_is_reported_by_number() {
        let text = format!("{CSV_HEADER}\n1,2,3,4,5\n1,2,x,4,5\n");
        match samples_from_csv(&text) {
            Err(Error::RecordFormat { row, message }) => {
                assert_eq!(row, 3);
                assert!(message.contains("column 3"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            samples_from_csv("a,b\n"),
            Err(Error::RecordFormat { row: 1, .. })
        ));
    }

    #[test]
    fn sidecar_sits_next_to_csv() {
        assert_eq!(
            sidecar_path(Path::new("/tmp/run1.csv")),
            PathBuf::from("/tmp/run1.meta.json")
        );
    }
}
