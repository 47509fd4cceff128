//! Re-summarizing stored CSV files.

use std::io::Read;

use anyhow::{bail, Result};
use aznn_core::engine::tail_median;
use serde::Serialize;

use crate::output::{TraceRow, TrajectoryRow};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryReport {
    pub kind: String,
    pub rows: usize,
    pub steps: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub min_residual: f64,
    pub final_residual: f64,
    /// Median residual over the last 20% of rows.
    pub tail_median_residual: f64,
    /// Median recursion/solve term ratio over the last 10% of rows.
    pub tail_term_ratio: f64,
    pub phase_switch_steps: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceReport {
    pub kind: String,
    pub rows: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub initial_rel_error: f64,
    pub final_rel_error: f64,
    pub min_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Report {
    Trajectory(TrajectoryReport),
    Trace(TraceReport),
}

impl Report {
    pub fn to_toml(&self) -> Result<String> {
        Ok(match self {
            Report::Trajectory(r) => toml::to_string(r)?,
            Report::Trace(r) => toml::to_string(r)?,
        })
    }
}

/// Reads either a trajectory CSV or a static trace CSV, told apart by header.
pub fn summarize_csv<R: Read>(r: R) -> Result<Report> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    if headers.iter().any(|h| h == "phase") {
        let rows: Vec<TrajectoryRow> = rd.deserialize().collect::<Result<_, _>>()?;
        if rows.is_empty() {
            bail!("trajectory CSV has no rows");
        }
        let residuals: Vec<f64> = rows.iter().map(|r| r.residual).collect();
        let ratios: Vec<f64> = rows.iter().map(|r| r.recursion_term_norm / r.solve_term_norm).collect();
        // Row k carries the phase that produced step k, so a phase starting at
        // step count m first shows up in row m + 1.
        let phase_switch_steps =
            (1..rows.len()).filter(|&k| k >= 2 && rows[k].phase != rows[k - 1].phase).map(|k| k - 1).collect();
        let n = rows.len();
        Ok(Report::Trajectory(TrajectoryReport {
            kind: "trajectory".into(),
            rows: n,
            steps: n - 1,
            t_start: rows[0].t,
            t_end: rows[n - 1].t,
            min_residual: residuals.iter().copied().fold(f64::INFINITY, f64::min),
            final_residual: residuals[n - 1],
            tail_median_residual: tail_median(&residuals, n * 4 / 5),
            tail_term_ratio: tail_median(&ratios, n * 9 / 10),
            phase_switch_steps,
        }))
    } else if headers.iter().any(|h| h == "rel_error") {
        let rows: Vec<TraceRow> = rd.deserialize().collect::<Result<_, _>>()?;
        if rows.is_empty() {
            bail!("trace CSV has no rows");
        }
        let n = rows.len();
        Ok(Report::Trace(TraceReport {
            kind: "static_trace".into(),
            rows: n,
            t_start: rows[0].t,
            t_end: rows[n - 1].t,
            initial_rel_error: rows[0].rel_error,
            final_rel_error: rows[n - 1].rel_error,
            min_rel_error: rows.iter().map(|r| r.rel_error).fold(f64::INFINITY, f64::min),
        }))
    } else {
        bail!("unrecognized CSV header: {}", headers.iter().collect::<Vec<_>>().join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TimeVaryingConfig;
    use crate::experiment::run_time_varying;
    use crate::output::{trace_csv_bytes, trajectory_csv_bytes};
    use aznn_core::engine::NullClock;

    #[test]
    fn trajectory_report_matches_run() {
        let mut cfg = TimeVaryingConfig::sqrt_default();
        cfg.t_end = cfg.t0 + 1.0;
        cfg.eta_final = Some(1.0);
        cfg.final_switch_time = Some(cfg.t0 + 0.5);
        let res = run_time_varying(&cfg, &NullClock).unwrap();
        let bytes = trajectory_csv_bytes(&res.trajectory).unwrap();
        let Report::Trajectory(r) = summarize_csv(bytes.as_slice()).unwrap() else { panic!("wrong kind") };
        assert_eq!(r.rows, res.trajectory.times.len());
        assert_eq!(r.phase_switch_steps, res.summary.phase_switch_steps);
        assert_eq!(r.final_residual, res.summary.final_residual);
        assert_eq!(r.min_residual, res.summary.min_residual);
    }

    #[test]
    fn trace_report() {
        let bytes = trace_csv_bytes(&[(0.9, 1e-2), (0.95, 1e-9), (1.0, 1e-8)]).unwrap();
        let Report::Trace(r) = summarize_csv(bytes.as_slice()).unwrap() else { panic!("wrong kind") };
        assert_eq!(r.rows, 3);
        assert_eq!(r.final_rel_error, 1e-8);
        assert_eq!(r.min_rel_error, 1e-9);
    }

    #[test]
    fn unknown_header() {
        assert!(summarize_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
