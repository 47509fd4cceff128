//! Wiring a validated config to the core engine.

use anyhow::Result;
use aznn_core::engine::{run, Clock, Trajectory};
use aznn_core::flows::{trial_flow_general, trial_flow_squared, MatrixFlow};
use aznn_core::problems::{SquareRootAdapter, SymmetrizerAdapter};
use aznn_core::Error;

use crate::config::{Problem, TimeVaryingConfig};
use crate::output::{h_entries, ConfigEcho, Summary};

pub struct TimeVaryingResult {
    pub trajectory: Trajectory,
    pub failure: Option<Error>,
    pub summary: Summary,
}

impl TimeVaryingResult {
    pub fn diverged(&self) -> bool {
        matches!(self.failure, Some(Error::Diverged { .. }))
    }
}

pub fn run_time_varying(cfg: &TimeVaryingConfig, clock: &dyn Clock) -> Result<TimeVaryingResult> {
    cfg.validate()?;
    let spec = cfg.run_spec();
    let (out, flow_desc) = match cfg.problem {
        Problem::Sqrt => {
            let flow = trial_flow_squared(cfg.n, cfg.seed)?;
            (run(&SquareRootAdapter::new(cfg.n), &flow, &spec, clock)?, flow.descriptor())
        }
        Problem::Symmetrizer => {
            let flow = trial_flow_general(cfg.n, cfg.seed, false)?;
            let adapter = SymmetrizerAdapter::new(cfg.n, cfg.start_seed).with_solve(cfg.solve);
            (run(&adapter, &flow, &spec, clock)?, flow.descriptor())
        }
    };
    let traj = out.trajectory;
    let summary = Summary {
        label: if spec.cfg.is_basic(&spec.formula) { "basic ZNN" } else { "AZNN" }.to_string(),
        status: if out.failure.is_some() { "diverged" } else { "completed" }.to_string(),
        failure: out.failure.as_ref().map(|e| e.to_string()),
        steps: traj.steps(),
        min_residual: traj.min_residual().unwrap_or(f64::NAN),
        final_residual: traj.final_residual().unwrap_or(f64::NAN),
        phase_switch_steps: traj.phase_marks.clone(),
        median_wall_time_per_step: traj.wall_time_per_step,
        config: ConfigEcho::new(cfg, flow_desc),
        h: h_entries(&spec.cfg, spec.tau),
    };
    Ok(TimeVaryingResult { trajectory: traj, failure: out.failure, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use aznn_core::engine::NullClock;

    #[test]
    fn short_sqrt_run_summary() {
        let mut cfg = TimeVaryingConfig::sqrt_default();
        cfg.t_end = cfg.t0 + 2.0;
        let res = run_time_varying(&cfg, &NullClock).unwrap();
        assert!(res.failure.is_none());
        assert_eq!(res.trajectory.times.len(), 101);
        let s = &res.summary;
        assert_eq!(s.label, "AZNN");
        assert_eq!(s.steps, 100);
        assert_eq!(s.phase_switch_steps, vec![12]);
        assert_eq!(s.h[0].h, 3.2);
        assert_eq!(s.h[1].h, 1.45 * 0.02);
        let text = s.to_toml().unwrap();
        let back: Summary = toml::from_str(&text).unwrap();
        assert_eq!(&back, s);
    }

    #[test]
    fn baseline_label() {
        let mut cfg = TimeVaryingConfig::sqrt_default();
        cfg.t_end = cfg.t0 + 1.0;
        cfg.baseline = true;
        cfg.eta_iter = 1.35;
        let res = run_time_varying(&cfg, &NullClock).unwrap();
        assert_eq!(res.summary.label, "basic ZNN");
        assert_eq!(res.summary.h.len(), 2);
        assert!(res.summary.h.iter().all(|e| e.h == 1.35 * 0.02));
    }
}
