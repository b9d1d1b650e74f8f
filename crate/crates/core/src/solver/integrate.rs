//! Time integration with per-step diagnostics.

use super::{
    pressure_of, step_rk4, Problem, ProblemKind, ReducedState, SolverConfig, PERIODICITY_TOL,
};
use crate::diagnostics::{
    c1_monitor, candidate_functionals, conservation_report, divergence_residual,
    endpoint_taylor_fit, energy, envelope_rate, speeds_squared, FailureRecord, Row, RunReport,
    RunSummary,
};
use crate::error::{Error, Result};

/// A recorded state with its pressure (absent for homogeneous runs).
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub state: ReducedState,
    pub pressure: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub report: RunReport,
    pub summary: RunSummary,
    /// The error that stopped the run, if any.
    pub error: Option<Error>,
}

impl Trajectory {
    pub fn final_state(&self) -> &ReducedState {
        &self
            .snapshots
            .last()
            .expect("the initial state is always recorded")
            .state
    }
}

struct Monitor<'a> {
    problem: &'a Problem,
    config: &'a SolverConfig,
    speeds0: Vec<f64>,
    w0_max: f64,
    rate: f64,
    c_integral: f64,
    prev_c: f64,
    has_taylor: bool,
}

impl<'a> Monitor<'a> {
    fn new(problem: &'a Problem, config: &'a SolverConfig, s0: &ReducedState) -> Self {
        let sq = speeds_squared(problem, s0);
        let w0_max = vertical_max(problem, s0);
        let has_taylor =
            problem.kind() == ProblemKind::Interval && endpoint_taylor_fit(problem, s0).is_ok();
        Self {
            problem,
            config,
            speeds0: sq.iter().map(|x| x.sqrt()).collect(),
            w0_max,
            rate: envelope_rate(problem),
            c_integral: 0.0,
            prev_c: s0.c,
            has_taylor,
        }
    }

    /// Row for `state` plus the pressure, or the pressure check failure.
    fn observe(
        &mut self,
        step: usize,
        state: &ReducedState,
    ) -> (Row, Option<Vec<f64>>, Option<String>) {
        let p = self.problem;
        self.c_integral +=
            self.prev_c.abs().max(state.c.abs()) * if step == 0 { 0.0 } else { self.config.dt };
        self.prev_c = state.c;
        let sq = speeds_squared(p, state);
        let speed_drift = sq
            .iter()
            .zip(&self.speeds0)
            .map(|(s, s0)| (s.sqrt() - s0).abs())
            .fold(0.0, f64::max);
        let (pressure, p_periodicity) = match p.kind() {
            ProblemKind::Homogeneous => (None, 0.0),
            _ => match pressure_of(p, state, self.config) {
                Ok(f) => (Some(f.p), f.periodicity_residual),
                Err(_) => (None, f64::NAN),
            },
        };
        let problem_msg = (p.kind() == ProblemKind::Circle && !(p_periodicity < PERIODICITY_TOL)).then(|| {
            format!("pressure periodicity residual {p_periodicity:.3e} exceeds {PERIODICITY_TOL:.0e}")
        });
        let row = Row {
            step,
            t: state.t,
            energy: energy(p, state),
            c: state.c,
            max_speed: sq.iter().cloned().fold(0.0, f64::max).sqrt(),
            speed_drift,
            w_max: vertical_max(p, state),
            envelope: self.w0_max * (2.0 * self.rate * self.c_integral).exp(),
            c1: c1_monitor(p, state),
            div_residual: divergence_residual(p, state),
            p_periodicity,
            taylor: if self.has_taylor {
                endpoint_taylor_fit(p, state).ok()
            } else {
                None
            },
        };
        (row, pressure, problem_msg)
    }
}

fn vertical_max(problem: &Problem, state: &ReducedState) -> f64 {
    let nodes = problem.nodes();
    (0..state.nodes())
        .map(|j| super::bilinear(&nodes[j].gram, state.v_at(j), state.v_at(j)))
        .fold(0.0, f64::max)
}

/// Integrates from the problem's initial state to `t_end`. Numerical
/// failures end the run early and are reported in the trajectory; only an
/// invalid configuration is an `Err`.
pub fn integrate(problem: &Problem, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    let steps = config.steps();
    let mut state = problem.initial().clone();
    let mut monitor = Monitor::new(problem, config, &state);
    let mut rows = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let mut failure: Option<FailureRecord> = None;
    let mut error = None;

    let mut step = 0;
    loop {
        let (row, pressure, check) = monitor.observe(step, &state);
        rows.push(row);
        if step % config.snapshot_every == 0 || step == steps {
            snapshots.push(Snapshot {
                step,
                state: state.clone(),
                pressure: pressure.clone(),
            });
        }
        if let Some(detail) = check {
            if failure.is_none() {
                failure = Some(FailureRecord {
                    step,
                    t: state.t,
                    kind: "pressure_periodicity".into(),
                    detail: detail.clone(),
                });
            }
            if config.halt_on_failure {
                if snapshots.last().map(|s| s.step) != Some(step) {
                    snapshots.push(Snapshot {
                        step,
                        state: state.clone(),
                        pressure,
                    });
                }
                error = Some(Error::numerical(state.t, detail));
                break;
            }
        }
        if step == steps {
            break;
        }
        match step_rk4(problem, &state, config) {
            Ok(next) => {
                // Keep the time grid exact rather than accumulated.
                state = ReducedState {
                    t: (step + 1) as f64 * config.dt,
                    ..next
                };
                step += 1;
            }
            Err(e) => {
                let (kind, detail) = match &e {
                    Error::Numerical { detail, .. } if detail.starts_with("CFL") => {
                        ("cfl", detail.clone())
                    }
                    Error::Numerical { detail, .. } => ("non_finite", detail.clone()),
                    other => ("error", other.to_string()),
                };
                let record = FailureRecord {
                    step,
                    t: state.t,
                    kind: kind.into(),
                    detail,
                };
                // A hard stop always takes precedence in the record.
                failure = Some(record);
                if snapshots.last().map(|s| s.step) != Some(step) {
                    snapshots.push(Snapshot {
                        step,
                        state: state.clone(),
                        pressure: None,
                    });
                }
                error = Some(e);
                break;
            }
        }
    }

    let report = RunReport {
        kind: problem.kind(),
        h0_energy: problem.h0_energy(),
        functionals_initial: candidate_functionals(problem, problem.initial()),
        functionals_final: candidate_functionals(problem, &state),
        rows,
        failure,
    };
    let summary = conservation_report(&report);
    Ok(Trajectory {
        snapshots,
        report,
        summary,
        error,
    })
}
