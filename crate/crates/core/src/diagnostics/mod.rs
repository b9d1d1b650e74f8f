//! Conservation, regularity and blow-up monitors for reduced runs.

mod report;

pub use report::{
    conservation_report, conservation_report_with, FailureRecord, Flag, Functionals, Row,
    RunReport, RunSummary, Tolerances,
};

use serde::Serialize;

use crate::coho::{mean_curvature, MetricProfile};
use crate::error::{Error, Result};
use crate::exec::{map_indices, ExecPolicy};
use crate::numerics::{central_derivative, max_abs, weighted_sum};
use crate::solver::{bilinear, mat_vec, Problem, ProblemKind, ReducedState, MAX_WIDTH};

/// Nodes used in the endpoint fit.
pub const TAYLOR_WINDOW: usize = 6;
/// Nodes probed for the vertical divergence.
pub const DIVERGENCE_PROBES: usize = 8;

/// `E = ½ ∮ (c² h0² + vᵀ g_r v) vol dr`.
pub fn energy(problem: &Problem, state: &ReducedState) -> f64 {
    let nodes = problem.nodes();
    let dens: Vec<f64> = (0..state.nodes())
        .map(|j| {
            let g = &nodes[j];
            let h = state.c * g.h0;
            (h * h + bilinear(&g.gram, state.v_at(j), state.v_at(j))) * g.vol
        })
        .collect();
    0.5 * weighted_sum(problem.weights(), &dens)
}

/// `h_j² + v_jᵀ g v_j` at every node.
pub fn speeds_squared(problem: &Problem, state: &ReducedState) -> Vec<f64> {
    let nodes = problem.nodes();
    (0..state.nodes())
        .map(|j| {
            let h = state.c * nodes[j].h0;
            h * h + bilinear(&nodes[j].gram, state.v_at(j), state.v_at(j))
        })
        .collect()
}

/// `sqrt(h_j² + v_jᵀ g v_j)`.
pub fn pointwise_speed(problem: &Problem, state: &ReducedState, j: usize) -> Result<f64> {
    if j >= state.nodes() {
        return Err(Error::input(format!(
            "node {j} out of range (0..{})",
            state.nodes()
        )));
    }
    Ok(speeds_squared(problem, state)[j].sqrt())
}

/// Components of the C¹ proxy. `raw` is the sup of the speed plus the sup of
/// the `r`-derivatives of `h` and each `v_i`; `shape` is the sup of `‖S_r v‖_g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C1Monitor {
    pub total: f64,
    pub raw: f64,
    pub shape: f64,
}

pub fn c1_monitor(problem: &Problem, state: &ReducedState) -> C1Monitor {
    let nodes = problem.nodes();
    let speed = speeds_squared(problem, state)
        .into_iter()
        .fold(0.0, f64::max)
        .sqrt();
    let dv = max_abs(&problem.r_derivative(state));
    let dh = nodes
        .iter()
        .map(|g| (state.c * g.h0_prime).abs())
        .fold(0.0, f64::max);
    let w = state.width;
    let shape = (0..state.nodes())
        .map(|j| {
            let mut sv = [0.0; MAX_WIDTH];
            mat_vec(&nodes[j].shape, state.v_at(j), &mut sv[..w]);
            bilinear(&nodes[j].gram, &sv[..w], &sv[..w]).max(0.0).sqrt()
        })
        .fold(0.0, f64::max);
    let raw = speed + dv.max(dh);
    C1Monitor {
        total: raw + shape,
        raw,
        shape,
    }
}

/// `max |h' − H h|` over the grid, with `h'` from a fourth-order difference
/// of `h = c h0`, combined with the homogeneous divergence of `v` at a few
/// probe nodes.
pub fn divergence_residual(problem: &Problem, state: &ReducedState) -> f64 {
    let nodes = problem.nodes();
    let horizontal = state.c.abs() * nodes.iter().map(|g| g.h0_divergence).fold(0.0, f64::max);
    let n = state.nodes();
    let probes = DIVERGENCE_PROBES.min(n);
    let vertical = (0..probes)
        .map(|k| {
            let j = if probes <= 1 {
                0
            } else {
                k * (n - 1) / (probes - 1)
            };
            let tr = &nodes[j].div_trace;
            state
                .v_at(j)
                .iter()
                .zip(tr)
                .map(|(v, t)| v * t)
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    horizontal.max(vertical)
}

/// `max |h' − H h|` for an arbitrary horizontal amplitude `h(r)`, using a
/// five-point difference with step `L·1e-3`.
pub fn divergence_residual_of(
    profile: &MetricProfile,
    grid: &[f64],
    h: impl Fn(f64) -> f64 + Sync,
) -> Result<f64> {
    let step = profile.length() * 1e-3;
    let vals = map_indices(ExecPolicy::default(), grid.len(), |j| -> Result<f64> {
        let r = grid[j];
        let d = central_derivative(&h, r, step);
        Ok((d - mean_curvature(profile, r)? * h(r)).abs())
    });
    vals.into_iter().try_fold(0.0_f64, |m, x| Ok(m.max(x?)))
}

/// Least-squares fit `v_i ≈ α_i + β_i s²` on the nodes nearest the first
/// singular endpoint, `s` being the distance to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorFit {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Largest absolute residual of the even fit.
    pub parity_misfit: f64,
}

pub fn endpoint_taylor_fit(problem: &Problem, state: &ReducedState) -> Result<TaylorFit> {
    let profile = problem
        .profile()
        .filter(|_| problem.kind() == ProblemKind::Interval)
        .ok_or_else(|| Error::validation("the endpoint monitor needs an interval problem"))?;
    let end = *profile
        .orbit_space()
        .singular_endpoints()
        .first()
        .ok_or_else(|| Error::validation("the endpoint monitor needs a singular endpoint"))?;
    let n = state.nodes();
    if n < TAYLOR_WINDOW {
        return Err(Error::validation(format!(
            "the endpoint monitor needs at least {TAYLOR_WINDOW} interior nodes"
        )));
    }
    let idx: Vec<usize> = if end == 0.0 {
        (0..TAYLOR_WINDOW).collect()
    } else {
        (n - TAYLOR_WINDOW..n).rev().collect()
    };
    let s2: Vec<f64> = idx
        .iter()
        .map(|&j| (problem.grid()[j] - end).powi(2))
        .collect();
    let m = TAYLOR_WINDOW as f64;
    let sx: f64 = s2.iter().sum();
    let sxx: f64 = s2.iter().map(|x| x * x).sum();
    let det = m * sxx - sx * sx;
    let w = state.width;
    let mut alpha = vec![0.0; w];
    let mut beta = vec![0.0; w];
    let mut misfit = 0.0_f64;
    for i in 0..w {
        let y: Vec<f64> = idx.iter().map(|&j| state.v_at(j)[i]).collect();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = y.iter().zip(&s2).map(|(a, b)| a * b).sum();
        let b = (m * sxy - sx * sy) / det;
        let a = (sy - b * sx) / m;
        alpha[i] = a;
        beta[i] = b;
        for (yk, xk) in y.iter().zip(&s2) {
            misfit = misfit.max((yk - a - b * xk).abs());
        }
    }
    Ok(TaylorFit {
        alpha,
        beta,
        parity_misfit: misfit,
    })
}

/// Endpoint fits along a sequence of states.
pub fn endpoint_taylor_monitor<'a>(
    problem: &Problem,
    states: impl IntoIterator<Item = &'a ReducedState>,
) -> Result<Vec<TaylorFit>> {
    states
        .into_iter()
        .map(|s| endpoint_taylor_fit(problem, s))
        .collect()
}

/// `∮ g_ii v_i² vol dr` for each coefficient.
pub fn candidate_functionals(problem: &Problem, state: &ReducedState) -> Vec<f64> {
    let nodes = problem.nodes();
    let w = state.width;
    (0..w)
        .map(|i| {
            let dens: Vec<f64> = (0..state.nodes())
                .map(|j| nodes[j].gram[i * w + i] * state.v_at(j)[i].powi(2) * nodes[j].vol)
                .collect();
            weighted_sum(problem.weights(), &dens)
        })
        .collect()
}

/// `max_r |h| ‖S_r‖ / |c|`: growth rate of the max-principle envelope per unit `|c|`.
pub(crate) fn envelope_rate(problem: &Problem) -> f64 {
    problem
        .nodes()
        .iter()
        .map(|g| g.h0.abs() * g.shape_norm)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests;
