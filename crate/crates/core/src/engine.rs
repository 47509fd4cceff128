//! Phase-adapted discretized ZNN driver.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::findiff::{predict_terms, FDFormula};
use crate::flows::MatrixFlow;
use crate::linalg::{frobenius, solve, DenseMatrix, SolveReport, DEFAULT_RANK_TOL};
use crate::C64;

/// Residuals above this abort the run.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// A time-varying matrix equation `E(X, t) = 0` in Kronecker form.
pub trait ProblemAdapter {
    fn dim(&self) -> usize;

    fn name(&self) -> &'static str;

    fn initial_guess(&self, a0: &DenseMatrix) -> DenseMatrix;

    /// `(P, q)` with `P·vec(Ẋ) = q` under `Ė = −η·E`.
    fn build_system(&self, x: &DenseMatrix, t: f64, eta: f64, flow: &dyn MatrixFlow) -> Result<(DenseMatrix, Vec<C64>)>;

    fn residual(&self, a: &DenseMatrix, x: &DenseMatrix) -> Result<f64>;

    fn enforce_structure(&self, x: DenseMatrix) -> DenseMatrix {
        x
    }

    /// `vec(Ẋ)` at `(X, t)`.
    fn solve_step(&self, x: &DenseMatrix, t: f64, eta: f64, flow: &dyn MatrixFlow) -> Result<SolveReport> {
        let (p, q) = self.build_system(x, t, eta, flow)?;
        solve(&p, &q, DEFAULT_RANK_TOL)
    }
}

/// Monotonic seconds, supplied by the caller (the core has no clock).
pub trait Clock {
    fn now(&self) -> f64;
}

/// A clock that never advances; wall times come out as zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseConfig {
    pub eta_start: f64,
    pub startup_steps: usize,
    pub eta_iter: f64,
    pub eta_final: Option<f64>,
    pub final_switch_time: Option<f64>,
}

impl PhaseConfig {
    pub fn new(eta_start: f64, startup_steps: usize, eta_iter: f64) -> Self {
        Self { eta_start, startup_steps, eta_iter, eta_final: None, final_switch_time: None }
    }

    pub fn with_final(mut self, eta_final: f64, switch_time: f64) -> Self {
        self.eta_final = Some(eta_final);
        self.final_switch_time = Some(switch_time);
        self
    }

    /// Basic ZNN: one `η` throughout and the shortest admissible start-up.
    pub fn basic(eta: f64, formula: &FDFormula) -> Self {
        Self::new(eta, required_startup(formula), eta)
    }

    pub fn validate(&self, formula: &FDFormula) -> Result<()> {
        let etas = [Some(self.eta_start), Some(self.eta_iter), self.eta_final];
        if etas.iter().flatten().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidArgument("decay constants must be finite and positive".into()));
        }
        if self.eta_final.is_some() != self.final_switch_time.is_some() {
            return Err(Error::InvalidArgument("eta_final and final_switch_time must be set together".into()));
        }
        let needed = required_startup(formula);
        if self.startup_steps < needed {
            return Err(Error::InsufficientHistory { needed, got: self.startup_steps });
        }
        Ok(())
    }

    pub fn is_basic(&self, formula: &FDFormula) -> bool {
        self.eta_start == self.eta_iter && self.eta_final.is_none() && self.startup_steps == required_startup(formula)
    }
}

/// `j + s − 1` start-up steps.
pub fn required_startup(formula: &FDFormula) -> usize {
    (formula.j + formula.s).saturating_sub(1).max(formula.history_len())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Startup,
    Iterate,
    Final,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Self::Startup => "startup",
            Self::Iterate => "iterate",
            Self::Final => "final",
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Self::Startup => 0,
            Self::Iterate => 1,
            Self::Final => 2,
        }
    }
}

/// `h = η·τ` of each configured phase.
pub fn h_report(cfg: &PhaseConfig, tau: f64) -> Vec<(Phase, f64)> {
    let mut out = alloc::vec![(Phase::Startup, cfg.eta_start * tau), (Phase::Iterate, cfg.eta_iter * tau)];
    if let Some(e) = cfg.eta_final {
        out.push((Phase::Final, e * tau));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub x: DenseMatrix,
}

/// Per-step log of a run. Row 0 is the initial guess at `t₀`; row `k` is the
/// state after step `k`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub phases: Vec<Phase>,
    /// Step counts at which the iterate and final phases began.
    pub phase_marks: Vec<usize>,
    pub solve_term_norms: Vec<f64>,
    pub recursion_term_norms: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// Median wall seconds per step.
    pub wall_time_per_step: f64,
    pub final_x: Option<DenseMatrix>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }

    pub fn min_residual(&self) -> Option<f64> {
        self.residuals.iter().copied().reduce(f64::min)
    }
}

/// Everything `run` needs besides the adapter and flow.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub cfg: PhaseConfig,
    pub formula: FDFormula,
    pub tau: f64,
    pub t0: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
}

impl RunSpec {
    /// Step count `round((t_end − t0)/τ)`.
    pub fn total_steps(&self) -> usize {
        let k = libm::round((self.t_end - self.t0) / self.tau);
        if k > 0.0 { k as usize } else { 0 }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.tau
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.t_end > self.t0) {
            return Err(Error::InvalidArgument(alloc::format!("t_end {} must exceed t0 {}", self.t_end, self.t0)));
        }
        self.cfg.validate(&self.formula)?;
        if self.total_steps() < self.cfg.startup_steps {
            return Err(Error::InvalidArgument(alloc::format!(
                "horizon holds {} steps, fewer than the {} start-up steps",
                self.total_steps(),
                self.cfg.startup_steps
            )));
        }
        Ok(())
    }
}

/// Result of `run`: the trajectory up to the last good step, plus the error
/// that stopped it early, if any.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub failure: Option<Error>,
}

struct State<'a> {
    adapter: &'a dyn ProblemAdapter,
    flow: &'a dyn MatrixFlow,
    spec: &'a RunSpec,
    clock: &'a dyn Clock,
    /// Newest first, `history_len` deep.
    history: Vec<DenseMatrix>,
    traj: Trajectory,
    snapshot_cursor: usize,
    step_walls: Vec<f64>,
}

impl State<'_> {
    fn record(&mut self, step: usize, x: &DenseMatrix, phase: Phase, solve_norm: f64, recursion_norm: f64) -> Result<()> {
        let t = self.spec.time(step);
        let a = self.flow.value(t)?;
        let r = self.adapter.residual(&a, x)?;
        self.traj.times.push(t);
        self.traj.residuals.push(r);
        self.traj.phases.push(phase);
        self.traj.solve_term_norms.push(solve_norm);
        self.traj.recursion_term_norms.push(recursion_norm);
        while let Some(&ts) = self.spec.snapshot_times.get(self.snapshot_cursor) {
            if t + 0.5 * self.spec.tau < ts {
                break;
            }
            self.traj.snapshots.push(Snapshot { step, t, x: x.clone() });
            self.snapshot_cursor += 1;
        }
        if !r.is_finite() || r > DIVERGENCE_THRESHOLD {
            return Err(Error::Diverged { step, t, residual: r });
        }
        Ok(())
    }

    fn push_history(&mut self, x: DenseMatrix, depth: usize) {
        self.history.insert(0, x);
        self.history.truncate(depth);
    }
}

/// Runs start-up then iteration over `[t0, t_end]`.
pub fn run(adapter: &dyn ProblemAdapter, flow: &dyn MatrixFlow, spec: &RunSpec, clock: &dyn Clock) -> Result<RunOutput> {
    spec.validate()?;
    let mut snapshot_times = spec.snapshot_times.clone();
    snapshot_times.sort_by(f64::total_cmp);
    let spec = &RunSpec { snapshot_times, ..spec.clone() };
    let mut st = State {
        adapter,
        flow,
        spec,
        clock,
        history: Vec::new(),
        traj: Trajectory::default(),
        snapshot_cursor: 0,
        step_walls: Vec::new(),
    };
    let outcome = startup_in(&mut st).and_then(|()| iterate_in(&mut st));
    st.traj.wall_time_per_step = median(&mut st.step_walls);
    st.traj.final_x = st.history.first().cloned();
    match outcome {
        Ok(()) => Ok(RunOutput { trajectory: st.traj, failure: None }),
        Err(e @ Error::Diverged { .. }) => Ok(RunOutput { trajectory: st.traj, failure: Some(e) }),
        Err(e) => Err(e),
    }
}

/// Euler start-up only; returns the history newest first.
pub fn startup(
    adapter: &dyn ProblemAdapter,
    flow: &dyn MatrixFlow,
    spec: &RunSpec,
    clock: &dyn Clock,
) -> Result<(Vec<DenseMatrix>, Trajectory)> {
    spec.validate()?;
    let mut st = State {
        adapter,
        flow,
        spec,
        clock,
        history: Vec::new(),
        traj: Trajectory::default(),
        snapshot_cursor: 0,
        step_walls: Vec::new(),
    };
    startup_in(&mut st)?;
    st.traj.wall_time_per_step = median(&mut st.step_walls);
    st.traj.final_x = st.history.first().cloned();
    Ok((st.history, st.traj))
}

fn startup_in(st: &mut State<'_>) -> Result<()> {
    let depth = st.spec.formula.history_len().max(1);
    let a0 = st.flow.value(st.spec.t0)?;
    let x0 = st.adapter.enforce_structure(st.adapter.initial_guess(&a0));
    if x0.rows() != st.adapter.dim() || !x0.is_square() {
        return Err(Error::DimensionMismatch {
            op: "initial_guess",
            detail: alloc::format!("{}x{} for dimension {}", x0.rows(), x0.cols(), st.adapter.dim()),
        });
    }
    st.record(0, &x0, Phase::Startup, 0.0, 0.0)?;
    st.push_history(x0, depth);
    let n = st.adapter.dim();
    let tau = st.spec.tau;
    for k in 0..st.spec.cfg.startup_steps {
        let began = st.clock.now();
        let t = st.spec.time(k);
        let x = &st.history[0];
        let rep = st.adapter.solve_step(x, t, st.spec.cfg.eta_start, st.flow)?;
        let dx = DenseMatrix::unvec(&rep.solution, n, n)?.scale_real(tau);
        let solve_norm = dx.frobenius_norm();
        let recursion_norm = x.frobenius_norm();
        let next = st.adapter.enforce_structure(x + &dx);
        st.step_walls.push(st.clock.now() - began);
        st.record(k + 1, &next, Phase::Startup, solve_norm, recursion_norm)?;
        st.push_history(next, depth);
    }
    Ok(())
}

fn iterate_in(st: &mut State<'_>) -> Result<()> {
    let spec = st.spec;
    let n = st.adapter.dim();
    let depth = spec.formula.history_len().max(1);
    let total = spec.total_steps();
    let first = spec.cfg.startup_steps;
    st.traj.phase_marks.push(first);
    let mut phase = Phase::Iterate;
    for k in first..total {
        let t = spec.time(k);
        if phase == Phase::Iterate {
            if let (Some(_), Some(ts)) = (spec.cfg.eta_final, spec.cfg.final_switch_time) {
                if t >= ts {
                    phase = Phase::Final;
                    st.traj.phase_marks.push(k);
                }
            }
        }
        let eta = match phase {
            Phase::Final => spec.cfg.eta_final.unwrap_or(spec.cfg.eta_iter),
            _ => spec.cfg.eta_iter,
        };
        let began = st.clock.now();
        let rep = st.adapter.solve_step(&st.history[0], t, eta, st.flow)?;
        let hist: Vec<&[C64]> = st.history.iter().map(|h| h.as_slice()).collect();
        let terms = predict_terms(&spec.formula, &rep.solution, &hist, spec.tau)?;
        let next: Vec<C64> = terms.solve_term.iter().zip(&terms.recursion_term).map(|(a, b)| a + b).collect();
        let next = st.adapter.enforce_structure(DenseMatrix::unvec(&next, n, n)?);
        st.step_walls.push(st.clock.now() - began);
        st.record(k + 1, &next, phase, frobenius(&terms.solve_term), frobenius(&terms.recursion_term))?;
        st.push_history(next, depth);
    }
    Ok(())
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

/// Median of `values[from..]` (empty tail gives NaN).
pub fn tail_median(values: &[f64], from: usize) -> f64 {
    let mut tail: Vec<f64> = values[from.min(values.len())..].to_vec();
    if tail.is_empty() { f64::NAN } else { median(&mut tail) }
}

/// Config echo line for summaries.
pub fn describe_phases(cfg: &PhaseConfig) -> String {
    let mut s = alloc::format!("eta_start={} startup_steps={} eta_iter={}", cfg.eta_start, cfg.startup_steps, cfg.eta_iter);
    if let (Some(e), Some(t)) = (cfg.eta_final, cfg.final_switch_time) {
        s.push_str(&alloc::format!(" eta_final={e} final_switch_time={t}"));
    }
    s
}
