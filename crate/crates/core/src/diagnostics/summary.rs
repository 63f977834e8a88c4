use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::diagnostics::EssReport;
use crate::error::{Error, Result};
use crate::samplers::RunRecord;

/// Flat per-chain record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub steps: u64,
    pub accepted: u64,
    pub acceptance: f64,
    pub energy_evals: u64,
    pub ess: f64,
    pub ess_per_eval: f64,
    /// Absent when wall-clock timing is disabled.
    pub ess_per_second: Option<f64>,
    /// Clamped proposal rows per step.
    pub clamp_rate: f64,
    pub hyperparameter: Option<f64>,
    pub seed: u64,
}

const HEADER: [&str; 10] = [
    "steps",
    "accepted",
    "acceptance",
    "energy_evals",
    "ess",
    "ess_per_eval",
    "ess_per_second",
    "clamp_rate",
    "hyperparameter",
    "seed",
];

/// Scientific notation with 17 significant digits; empty for `None`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn summarize(run: &RunRecord, ess: &EssReport, hyperparameter: Option<f64>) -> Result<Summary> {
    if run.steps == 0 {
        return Err(Error::EmptyRun("run has no steps".into()));
    }
    if run.accepted > run.steps {
        return Err(Error::Domain(format!(
            "{} accepted out of {} steps",
            run.accepted, run.steps
        )));
    }
    let ess_per_eval = ess.ess_per_eval.unwrap_or(if run.energy_evals == 0 {
        0.0
    } else {
        ess.ess / run.energy_evals as f64
    });
    Ok(Summary {
        steps: run.steps,
        accepted: run.accepted,
        acceptance: run.accepted as f64 / run.steps as f64,
        energy_evals: run.energy_evals,
        ess: ess.ess,
        ess_per_eval,
        ess_per_second: ess.ess_per_second,
        clamp_rate: run.clamp_events as f64 / run.steps as f64,
        hyperparameter,
        seed: run.seed,
    })
}

impl Summary {
    fn record(&self) -> Vec<String> {
        vec![
            self.steps.to_string(),
            self.accepted.to_string(),
            format_float(self.acceptance),
            self.energy_evals.to_string(),
            format_float(self.ess),
            format_float(self.ess_per_eval),
            format_opt(self.ess_per_second),
            format_float(self.clamp_rate),
            format_opt(self.hyperparameter),
            self.seed.to_string(),
        ]
    }

    fn parse(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        let bad = |field: &str, msg: String| Error::Parse {
            path: "<csv>".into(),
            line,
            column: HEADER.iter().position(|h| *h == field).unwrap_or(0) + 1,
            message: msg,
        };
        let get = |i: usize| rec.get(i).unwrap_or("");
        let int = |i: usize| -> Result<u64> { get(i).parse().map_err(|e| bad(HEADER[i], format!("{e}"))) };
        let float = |i: usize| -> Result<f64> { get(i).parse().map_err(|e| bad(HEADER[i], format!("{e}"))) };
        let opt = |i: usize| -> Result<Option<f64>> {
            if get(i).is_empty() {
                Ok(None)
            } else {
                float(i).map(Some)
            }
        };
        Ok(Summary {
            steps: int(0)?,
            accepted: int(1)?,
            acceptance: float(2)?,
            energy_evals: int(3)?,
            ess: float(4)?,
            ess_per_eval: float(5)?,
            ess_per_second: opt(6)?,
            clamp_rate: float(7)?,
            hyperparameter: opt(8)?,
            seed: int(9)?,
        })
    }
}

pub fn write_summaries_csv<W: Write>(rows: &[Summary], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_summaries_csv<R: Read>(input: R) -> Result<Vec<Summary>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(HEADER) {
        return Err(Error::Parse {
            path: "<csv>".into(),
            line: 1,
            column: 1,
            message: "unexpected header".into(),
        });
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| Summary::parse(&rec?, i + 2))
        .collect()
}
