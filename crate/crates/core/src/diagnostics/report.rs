//! Per-step diagnostic rows and the run summary.

use serde::Serialize;

use super::{C1Monitor, TaylorFit};
use crate::solver::ProblemKind;

/// Diagnostics of one time step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub c: f64,
    pub max_speed: f64,
    /// `max_j |speed_j(t) − speed_j(0)|`.
    pub speed_drift: f64,
    /// `max_j v_jᵀ g v_j`.
    pub w_max: f64,
    /// Max-principle bound on `w_max`.
    pub envelope: f64,
    pub c1: C1Monitor,
    pub div_residual: f64,
    pub p_periodicity: f64,
    pub taylor: Option<TaylorFit>,
}

/// Where and why a run stopped early, or the first failed per-step check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub step: usize,
    pub t: f64,
    pub kind: String,
    pub detail: String,
}

/// Time series plus the context needed to judge it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub kind: ProblemKind,
    /// `∮ h0² vol dr` (0 off the circle).
    pub h0_energy: f64,
    pub rows: Vec<Row>,
    pub functionals_initial: Vec<f64>,
    pub functionals_final: Vec<f64>,
    pub failure: Option<FailureRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub energy_drift: f64,
    pub speed_drift: f64,
    pub c_bound_slack: f64,
    pub envelope_slack: f64,
    pub divergence: f64,
    pub periodicity: f64,
    pub growth_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy_drift: 1e-6,
            speed_drift: 1e-8,
            c_bound_slack: 1e-8,
            envelope_slack: 0.05,
            divergence: 1e-8,
            periodicity: 1e-8,
            growth_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    EnergyDrift,
    SpeedDrift,
    CBound,
    Envelope,
    Divergence,
    PressurePeriodicity,
    C1Growth,
    TaylorGrowth,
    ParityMisfitGrowth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Functionals {
    pub initial: Vec<f64>,
    #[serde(rename = "final")]
    pub last: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub kind: &'static str,
    pub steps: usize,
    pub t_final: f64,
    pub energy_initial: f64,
    pub max_energy_drift: f64,
    pub max_speed_drift: f64,
    /// `2E0 / ∮ h0² vol dr` on a circle.
    pub c_bound: Option<f64>,
    /// `min_t (c_bound + slack − c²)`; negative means violated.
    pub c_bound_margin: Option<f64>,
    /// `min_t ((1 + slack) envelope − w_max) / envelope`.
    pub envelope_margin: f64,
    pub max_div_residual: f64,
    pub max_p_periodicity: f64,
    pub c1_initial: f64,
    pub c1_max: f64,
    pub c1_raw_max: f64,
    pub c1_shape_max: f64,
    pub parity_misfit_initial: Option<f64>,
    pub parity_misfit_max: Option<f64>,
    pub flags: Vec<Flag>,
    pub failure: Option<FailureRecord>,
    pub candidate_functionals: Functionals,
    pub tolerances: Tolerances,
}

impl RunSummary {
    pub fn ok(&self) -> bool {
        self.flags.is_empty() && self.failure.is_none()
    }
}

/// Drifts, margins and flags over every recorded step.
pub fn conservation_report(report: &RunReport) -> RunSummary {
    conservation_report_with(report, Tolerances::default())
}

pub fn conservation_report_with(report: &RunReport, tol: Tolerances) -> RunSummary {
    let rows = &report.rows;
    let first = rows.first();
    let e0 = first.map_or(0.0, |r| r.energy);
    let rel = |e: f64| {
        if e0 > 0.0 {
            (e - e0).abs() / e0
        } else {
            (e - e0).abs()
        }
    };
    let max_energy_drift = rows.iter().map(|r| rel(r.energy)).fold(0.0, f64::max);
    let max_speed_drift = rows.iter().map(|r| r.speed_drift).fold(0.0, f64::max);
    let circle = report.kind == ProblemKind::Circle;
    let c_bound = (circle && report.h0_energy > 0.0).then(|| 2.0 * e0 / report.h0_energy);
    let c_bound_margin = c_bound.map(|b| {
        rows.iter()
            .map(|r| b + tol.c_bound_slack - r.c * r.c)
            .fold(f64::INFINITY, f64::min)
    });
    let envelope_margin = rows
        .iter()
        .map(|r| {
            if r.envelope > 0.0 {
                ((1.0 + tol.envelope_slack) * r.envelope - r.w_max) / r.envelope
            } else if r.w_max > 0.0 {
                -1.0
            } else {
                tol.envelope_slack
            }
        })
        .fold(f64::INFINITY, f64::min);
    let max_div_residual = rows.iter().map(|r| r.div_residual).fold(0.0, f64::max);
    let max_p_periodicity = rows.iter().map(|r| r.p_periodicity).fold(0.0, f64::max);
    let c1_initial = first.map_or(0.0, |r| r.c1.total);
    let c1_max = rows.iter().map(|r| r.c1.total).fold(0.0, f64::max);
    let c1_raw_max = rows.iter().map(|r| r.c1.raw).fold(0.0, f64::max);
    let c1_shape_max = rows.iter().map(|r| r.c1.shape).fold(0.0, f64::max);
    let taylor0 = first.and_then(|r| r.taylor.as_ref());
    let parity_misfit_initial = taylor0.map(|t| t.parity_misfit);
    let parity_misfit_max = taylor0.map(|_| {
        rows.iter()
            .filter_map(|r| r.taylor.as_ref())
            .map(|t| t.parity_misfit)
            .fold(0.0, f64::max)
    });

    let g = tol.growth_factor;
    let grew = |now: f64, then: f64, floor: f64| now.abs() > g * then.abs() + floor;
    let mut flags = Vec::new();
    if circle && !(max_energy_drift <= tol.energy_drift) {
        flags.push(Flag::EnergyDrift);
    }
    if !circle && !(max_speed_drift <= tol.speed_drift) {
        flags.push(Flag::SpeedDrift);
    }
    if c_bound_margin.is_some_and(|m| !(m >= 0.0)) {
        flags.push(Flag::CBound);
    }
    if !(envelope_margin >= 0.0) {
        flags.push(Flag::Envelope);
    }
    if !(max_div_residual <= tol.divergence) {
        flags.push(Flag::Divergence);
    }
    if circle && !(max_p_periodicity <= tol.periodicity) {
        flags.push(Flag::PressurePeriodicity);
    }
    if grew(c1_max, c1_initial, 1e-12) || !c1_max.is_finite() {
        flags.push(Flag::C1Growth);
    }
    if let Some(t0) = taylor0 {
        let coef_grew = rows.iter().filter_map(|r| r.taylor.as_ref()).any(|t| {
            t.alpha
                .iter()
                .zip(&t0.alpha)
                .any(|(a, a0)| grew(*a, *a0, 1e-12))
                || t.beta
                    .iter()
                    .zip(&t0.beta)
                    .any(|(b, b0)| grew(*b, *b0, 1e-12))
        });
        if coef_grew {
            flags.push(Flag::TaylorGrowth);
        }
        if parity_misfit_max.is_some_and(|m| grew(m, t0.parity_misfit, 1e-10)) {
            flags.push(Flag::ParityMisfitGrowth);
        }
    }

    let last = rows.last();
    RunSummary {
        kind: report.kind.name(),
        steps: last.map_or(0, |r| r.step),
        t_final: last.map_or(0.0, |r| r.t),
        energy_initial: e0,
        max_energy_drift,
        max_speed_drift,
        c_bound,
        c_bound_margin,
        envelope_margin,
        max_div_residual,
        max_p_periodicity,
        c1_initial,
        c1_max,
        c1_raw_max,
        c1_shape_max,
        parity_misfit_initial,
        parity_misfit_max,
        flags,
        failure: report.failure.clone(),
        candidate_functionals: Functionals {
            initial: report.functionals_initial.clone(),
            last: report.functionals_final.clone(),
        },
        tolerances: tol,
    }
}
