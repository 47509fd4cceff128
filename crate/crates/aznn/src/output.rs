//! CSV trajectories, run summaries and static certificates.

use std::io::Write;

use anyhow::Result;
use aznn_core::engine::{h_report, Phase, Trajectory};
use aznn_core::static_symm::{StaticParams, SymmetrizerCertificate};
use serde::{Deserialize, Serialize};

use crate::config::TimeVaryingConfig;

/// One CSV row; row `k` is the state after step `k`, row 0 the initial guess.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub t: f64,
    pub residual: f64,
    pub solve_term_norm: f64,
    pub recursion_term_norm: f64,
    pub phase: String,
}

pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for k in 0..traj.times.len() {
        out.serialize(TrajectoryRow {
            step: k,
            t: traj.times[k],
            residual: traj.residuals[k],
            solve_term_norm: traj.solve_term_norms[k],
            recursion_term_norm: traj.recursion_term_norms[k],
            phase: traj.phases[k].label().to_string(),
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn trajectory_csv_bytes(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, traj)?;
    Ok(buf)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub rel_error: f64,
}

pub fn write_trace_csv<W: Write>(w: W, trace: &[(f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (k, &(t, rel_error)) in trace.iter().enumerate() {
        out.serialize(TraceRow { step: k, t, rel_error })?;
    }
    out.flush()?;
    Ok(())
}

pub fn trace_csv_bytes(trace: &[(f64, f64)]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, trace)?;
    Ok(buf)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HEntry {
    pub phase: String,
    pub eta: f64,
    pub tau: f64,
    pub h: f64,
}

pub fn h_entries(cfg: &aznn_core::engine::PhaseConfig, tau: f64) -> Vec<HEntry> {
    h_report(cfg, tau)
        .into_iter()
        .map(|(phase, h)| {
            let eta = match phase {
                Phase::Startup => cfg.eta_start,
                Phase::Iterate => cfg.eta_iter,
                Phase::Final => cfg.eta_final.unwrap_or(f64::NAN),
            };
            HEntry { phase: phase.label().to_string(), eta, tau, h }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub problem: String,
    pub flow: String,
    pub formula: String,
    pub n: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<String>,
    pub tau: f64,
    pub t0: f64,
    pub t_end: f64,
    pub baseline: bool,
    pub eta_start: f64,
    pub startup_steps: usize,
    pub eta_iter: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_switch_time: Option<f64>,
    pub snapshot_times: Vec<f64>,
}

impl ConfigEcho {
    pub fn new(cfg: &TimeVaryingConfig, flow: String) -> Self {
        let pc = cfg.phase_config();
        let symm = cfg.problem == crate::config::Problem::Symmetrizer;
        Self {
            problem: cfg.problem.label().to_string(),
            flow,
            formula: cfg.formula.label().to_string(),
            n: cfg.n,
            seed: cfg.seed,
            start_seed: symm.then_some(cfg.start_seed),
            solve: symm.then(|| format!("{:?}", cfg.solve).to_lowercase()),
            tau: cfg.tau,
            t0: cfg.t0,
            t_end: cfg.t_end,
            baseline: cfg.baseline,
            eta_start: pc.eta_start,
            startup_steps: pc.startup_steps,
            eta_iter: pc.eta_iter,
            eta_final: pc.eta_final,
            final_switch_time: pc.final_switch_time,
            snapshot_times: cfg.snapshot_times.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// `AZNN` or `basic ZNN`.
    pub label: String,
    /// `completed` or `diverged`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub steps: usize,
    pub min_residual: f64,
    pub final_residual: f64,
    pub phase_switch_steps: Vec<usize>,
    pub median_wall_time_per_step: f64,
    pub config: ConfigEcho,
    pub h: Vec<HEntry>,
}

impl Summary {
    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub source: String,
    pub n: usize,
    pub preset: String,
    pub eta: f64,
    pub approach_exponent: f64,
    pub t0: f64,
    pub tau: f64,
    pub bb_scale: f64,
    pub seed: u64,
    pub h: f64,
    pub steps: usize,
    pub rel_error: f64,
    pub cond2: f64,
    pub rank: usize,
    pub full_rank: bool,
}

impl CertificateSummary {
    pub fn new(source: String, p: &StaticParams, cert: &SymmetrizerCertificate) -> Self {
        Self {
            source,
            n: cert.s.rows(),
            preset: cert.preset.clone(),
            eta: p.eta,
            approach_exponent: p.approach_exponent,
            t0: p.t0,
            tau: p.tau,
            bb_scale: p.bb_scale,
            seed: p.seed,
            h: cert.h,
            steps: cert.steps_taken,
            rel_error: cert.rel_error,
            cond2: cert.cond2,
            rank: cert.rank,
            full_rank: cert.full_rank(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use aznn_core::engine::PhaseConfig;

    #[test]
    fn h_entries_are_exact_products() {
        let cfg = PhaseConfig::new(160.0, 12, 1.45).with_final(0.7, 100.0);
        let hs = h_entries(&cfg, 0.02);
        assert_eq!(hs.len(), 3);
        assert_eq!(hs[0].h, 160.0 * 0.02);
        assert_eq!(hs[1].h, 1.45 * 0.02);
        assert_eq!(hs[2].h, 0.7 * 0.02);
        assert_eq!(hs[2].phase, "final");
    }

    #[test]
    fn trace_csv_layout() {
        let bytes = trace_csv_bytes(&[(0.9, 1.0), (1.0, 1e-12)]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "step,t,rel_error\n0,0.9,1.0\n1,1.0,1e-12\n");
    }
}
