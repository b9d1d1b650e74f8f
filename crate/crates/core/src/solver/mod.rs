//! Reduced Euler integrators: the homogeneous Euler–Arnold ODE, decoupled
//! per-orbit ODEs on an interval, and the circle transport system with the
//! horizontal amplitude `c(t)`.
//!
//! On a circle the vertical coefficients obey
//! `∂_t v = 2h S v − h ∂_r v − ∇^r_v v` with `h = c h0`, and `c` follows from
//! periodicity of the pressure: `ċ = −∮q / ∮h0` where `q = g_r(S v, v)`.

mod geometry;
mod integrate;

pub use integrate::{integrate, Snapshot, Trajectory};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub(crate) use geometry::{bilinear, mat_vec, NodeGeometry};

use crate::coho::{relative_orbit_volume, EndpointKind, MetricProfile, OrbitSpace};
use crate::error::{Error, Result};
use crate::exec::{for_each_node, map_indices, ExecPolicy};
use crate::homogeneous::{connection_supported, m_structure_constants, InvariantMetric};
use crate::numerics::{
    bounded_derivative, closed_simpson_weights, cumulative_simpson, cumulative_simpson_periodic,
    periodic_derivative, periodic_simpson_weights, weighted_sum,
};

/// Relative tolerance on `∮ p' dr`.
pub const PERIODICITY_TOL: f64 = 1e-8;
/// Floor on `|h|` in the CFL guard.
pub const CFL_EPS: f64 = 1e-12;
/// Smallest circle grid.
pub const MIN_CIRCLE_NODES: usize = 16;
/// Smallest interval grid (the endpoint fit uses six nodes).
pub const MIN_INTERVAL_NODES: usize = 8;
/// Largest supported number of vertical coefficients.
pub const MAX_WIDTH: usize = 16;

fn check_width(n: usize) -> Result<()> {
    if n > MAX_WIDTH {
        return Err(Error::unsupported(format!(
            "more than {MAX_WIDTH} vertical coefficients"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Homogeneous,
    Interval,
    Circle,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Homogeneous => "homogeneous",
            ProblemKind::Interval => "interval",
            ProblemKind::Circle => "circle",
        }
    }
}

/// Reduced velocity. `v` is node-major with `width` coefficients per node;
/// homogeneous states have a single node and an empty grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub t: f64,
    pub c: f64,
    pub v: Vec<f64>,
    pub width: usize,
    pub grid: Arc<[f64]>,
}

impl ReducedState {
    pub fn nodes(&self) -> usize {
        self.v.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn v_at(&self, j: usize) -> &[f64] {
        &self.v[j * self.width..(j + 1) * self.width]
    }

    fn is_finite(&self) -> bool {
        self.c.is_finite() && self.v.iter().all(|x| x.is_finite())
    }
}

/// Pressure samples on the grid with gauge `p(r_0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureField {
    pub p: Vec<f64>,
    /// `|∮ p' dr| / ∮ |p'| dr` on a circle, 0 on an interval.
    pub periodicity_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub cfl_guard: f64,
    /// Stop at the first failed per-step check. When false, failures are
    /// recorded and integration continues while the state stays finite.
    pub halt_on_failure: bool,
    pub policy: ExecPolicy,
    /// Test-only offset added to `ċ`, used to exercise the periodicity check.
    pub dcdt_offset: f64,
    pub snapshot_every: usize,
    pub diagnostics_every: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            cfl_guard: 0.5,
            halt_on_failure: true,
            policy: ExecPolicy::default(),
            dcdt_offset: 0.0,
            snapshot_every: usize::MAX,
            diagnostics_every: 1,
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation("dt must be positive"));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::validation("t_end must be positive"));
        }
        if !(self.cfl_guard.is_finite() && self.cfl_guard > 0.0) {
            return Err(Error::validation("cfl_guard must be positive"));
        }
        if self.snapshot_every == 0 || self.diagnostics_every == 0 {
            return Err(Error::validation("output cadences must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Geometry {
    Homogeneous(InvariantMetric),
    Profile(MetricProfile),
}

/// A discretized reduced problem: geometry cache plus initial state.
#[derive(Debug, Clone)]
pub struct Problem {
    kind: ProblemKind,
    geometry: Geometry,
    grid: Arc<[f64]>,
    dr: f64,
    width: usize,
    nodes: Vec<NodeGeometry>,
    /// Quadrature weights in `r` (without the volume factor).
    weights: Vec<f64>,
    /// `∮ h0 dr` on a circle.
    h0_integral: f64,
    /// `∮ h0² vol dr` on a circle.
    h0_energy: f64,
    initial: ReducedState,
}

impl Problem {
    /// Rigid-body type problem on a single homogeneous orbit.
    pub fn homogeneous(metric: InvariantMetric, x0: &[f64]) -> Result<Self> {
        connection_supported(metric.split())?;
        let n = metric.split().dim_m();
        check_width(n)?;
        if x0.len() != n {
            return Err(Error::structural(format!(
                "initial vector has {} entries, expected {n}",
                x0.len()
            )));
        }
        let node =
            geometry::homogeneous_node(&m_structure_constants(metric.split()), metric.gram())?;
        let grid: Arc<[f64]> = Arc::from(Vec::<f64>::new());
        let initial = ReducedState {
            t: 0.0,
            c: 0.0,
            v: x0.to_vec(),
            width: n,
            grid: grid.clone(),
        };
        let p = Self {
            kind: ProblemKind::Homogeneous,
            geometry: Geometry::Homogeneous(metric),
            grid,
            dr: 0.0,
            width: n,
            nodes: vec![node],
            weights: vec![1.0],
            h0_integral: 0.0,
            h0_energy: 0.0,
            initial,
        };
        p.check_initial()?;
        Ok(p)
    }

    /// Interval problem with `n` unknown nodes. Singular endpoints carry no
    /// unknowns; boundary endpoints are grid nodes.
    pub fn interval(
        profile: MetricProfile,
        n: usize,
        v0: impl Fn(f64) -> Vec<f64>,
    ) -> Result<Self> {
        let OrbitSpace::Interval { length, endpoints } = *profile.orbit_space() else {
            return Err(Error::input(
                "interval problem needs an interval orbit space",
            ));
        };
        if n < MIN_INTERVAL_NODES {
            return Err(Error::validation(format!(
                "interval grids need at least {MIN_INTERVAL_NODES} nodes"
            )));
        }
        let singular = endpoints
            .iter()
            .filter(|k| **k == EndpointKind::Singular)
            .count();
        let points = n + singular;
        let dr = length / (points - 1) as f64;
        let all_weights = closed_simpson_weights(points, dr);
        let first = usize::from(endpoints[0] == EndpointKind::Singular);
        let keep = first..first + n;
        let grid: Vec<f64> = keep
            .clone()
            .map(|k| {
                if k == points - 1 {
                    length
                } else {
                    k as f64 * dr
                }
            })
            .collect();
        let weights = all_weights[keep].to_vec();
        Self::from_profile(ProblemKind::Interval, profile, grid, dr, weights, 0.0, v0)
    }

    /// Circle problem on `n` uniform nodes `r_j = jL/n`.
    pub fn circle(
        profile: MetricProfile,
        n: usize,
        c0: f64,
        v0: impl Fn(f64) -> Vec<f64>,
    ) -> Result<Self> {
        let OrbitSpace::Circle { length } = *profile.orbit_space() else {
            return Err(Error::input("circle problem needs a circle orbit space"));
        };
        if n < MIN_CIRCLE_NODES || !n.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "circle grids need an even node count of at least {MIN_CIRCLE_NODES}"
            )));
        }
        let dr = length / n as f64;
        let grid: Vec<f64> = (0..n).map(|j| j as f64 * dr).collect();
        let weights = periodic_simpson_weights(n, dr);
        Self::from_profile(ProblemKind::Circle, profile, grid, dr, weights, c0, v0)
    }

    fn from_profile(
        kind: ProblemKind,
        profile: MetricProfile,
        grid: Vec<f64>,
        dr: f64,
        weights: Vec<f64>,
        c0: f64,
        v0: impl Fn(f64) -> Vec<f64>,
    ) -> Result<Self> {
        connection_supported(profile.split())?;
        let width = profile.split().dim_m0();
        check_width(width)?;
        let structure = m_structure_constants(profile.split());
        let vol_mid = if kind == ProblemKind::Circle {
            let resid = crate::coho::periodicity_residual(&profile);
            if !(resid < crate::coho::PERIODICITY_TOL) {
                return Err(Error::validation(format!(
                    "metric profile is not periodic (residual {resid:.3e})"
                )));
            }
            Some(relative_orbit_volume(&profile, 0.5 * profile.length())?)
        } else {
            None
        };
        let nodes = map_indices(ExecPolicy::default(), grid.len(), |j| {
            geometry::profile_node(&profile, &structure, grid[j], vol_mid)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let mut v = Vec::with_capacity(grid.len() * width);
        for &r in &grid {
            let vr = v0(r);
            if vr.len() != width {
                return Err(Error::structural(format!(
                    "initial data has {} coefficients, expected {width}",
                    vr.len()
                )));
            }
            v.extend(vr);
        }
        let h0: Vec<f64> = nodes.iter().map(|g| g.h0).collect();
        let h0_sq_vol: Vec<f64> = nodes.iter().map(|g| g.h0 * g.h0 * g.vol).collect();
        let grid: Arc<[f64]> = Arc::from(grid);
        let p = Self {
            kind,
            geometry: Geometry::Profile(profile),
            grid: grid.clone(),
            dr,
            width,
            h0_integral: weighted_sum(&weights, &h0),
            h0_energy: weighted_sum(&weights, &h0_sq_vol),
            nodes,
            weights,
            initial: ReducedState {
                t: 0.0,
                c: if kind == ProblemKind::Circle { c0 } else { 0.0 },
                v,
                width,
                grid,
            },
        };
        p.check_initial()?;
        Ok(p)
    }

    fn check_initial(&self) -> Result<()> {
        if self.initial.is_finite() {
            Ok(())
        } else {
            Err(Error::input("initial data must be finite"))
        }
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn initial(&self) -> &ReducedState {
        &self.initial
    }

    /// Replaces the initial state (same grid and width).
    pub fn with_initial(mut self, c: f64, v: Vec<f64>) -> Result<Self> {
        if v.len() != self.initial.v.len() {
            return Err(Error::structural("initial state has the wrong size"));
        }
        self.initial.c = if self.kind == ProblemKind::Circle {
            c
        } else {
            0.0
        };
        self.initial.v = v;
        self.check_initial()?;
        Ok(self)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn profile(&self) -> Option<&MetricProfile> {
        match &self.geometry {
            Geometry::Profile(p) => Some(p),
            Geometry::Homogeneous(_) => None,
        }
    }

    pub fn metric(&self) -> Option<&InvariantMetric> {
        match &self.geometry {
            Geometry::Homogeneous(m) => Some(m),
            Geometry::Profile(_) => None,
        }
    }

    pub(crate) fn nodes(&self) -> &[NodeGeometry] {
        &self.nodes
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∮ h0² vol dr`, the denominator of the amplitude bound.
    pub fn h0_energy(&self) -> f64 {
        self.h0_energy
    }

    /// `g_r` at node `j` as a matrix.
    pub fn gram_at(&self, j: usize) -> DMatrix<f64> {
        let n = self.width;
        DMatrix::from_row_slice(n, n, &self.nodes[j].gram)
    }

    /// `h0(r_j)` (zero off the circle).
    pub fn h0_at(&self, j: usize) -> f64 {
        self.nodes[j].h0
    }

    /// `vol(r_j)`.
    pub fn vol_at(&self, j: usize) -> f64 {
        self.nodes[j].vol
    }

    /// Quadrature weight of node `j`.
    pub fn weight_at(&self, j: usize) -> f64 {
        self.weights[j]
    }

    /// `q_j = g_r(S v_j, v_j)` at every node.
    pub(crate) fn shape_contraction(&self, state: &ReducedState, policy: ExecPolicy) -> Vec<f64> {
        map_indices(policy, state.nodes(), |j| {
            bilinear(&self.nodes[j].gram_shape, state.v_at(j), state.v_at(j))
        })
    }

    /// `∂_r` of each coefficient, node-major.
    pub(crate) fn r_derivative(&self, state: &ReducedState) -> Vec<f64> {
        let n = state.nodes();
        let w = self.width;
        let mut out = vec![0.0; n * w];
        if self.kind == ProblemKind::Homogeneous || n == 0 {
            return out;
        }
        let mut col = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..w {
            for j in 0..n {
                col[j] = state.v[j * w + i];
            }
            if self.kind == ProblemKind::Circle {
                periodic_derivative(&col, self.dr, &mut d);
            } else {
                bounded_derivative(&col, self.dr, &mut d);
            }
            for j in 0..n {
                out[j * w + i] = d[j];
            }
        }
        out
    }

    /// `ċ = −∮q / ∮h0` (plus the test offset).
    fn dcdt(&self, state: &ReducedState, policy: ExecPolicy, offset: f64) -> f64 {
        if self.kind != ProblemKind::Circle {
            return 0.0;
        }
        let q = self.shape_contraction(state, policy);
        -weighted_sum(&self.weights, &q) / self.h0_integral + offset
    }

    /// Time derivative `(ċ, v̇)` of the full state.
    pub(crate) fn rhs(
        &self,
        state: &ReducedState,
        policy: ExecPolicy,
        offset: f64,
    ) -> (f64, Vec<f64>) {
        let w = self.width;
        let mut dv = vec![0.0; state.v.len()];
        match self.kind {
            ProblemKind::Homogeneous | ProblemKind::Interval => {
                for_each_node(policy, &mut dv, w, |j, out| {
                    let v = state.v_at(j);
                    self.nodes[j].gamma.apply(v, v, out);
                    out.iter_mut().for_each(|x| *x = -*x);
                });
                (0.0, dv)
            }
            ProblemKind::Circle => {
                let dvdr = self.r_derivative(state);
                let c = state.c;
                for_each_node(policy, &mut dv, w, |j, out| {
                    let node = &self.nodes[j];
                    let v = state.v_at(j);
                    let h = c * node.h0;
                    let mut sv = [0.0; MAX_WIDTH];
                    let mut nab = [0.0; MAX_WIDTH];
                    mat_vec(&node.shape, v, &mut sv[..w]);
                    node.gamma.apply(v, v, &mut nab[..w]);
                    for i in 0..w {
                        out[i] = 2.0 * h * sv[i] - h * dvdr[j * w + i] - nab[i];
                    }
                });
                (self.dcdt(state, policy, offset), dv)
            }
        }
    }

    /// Largest stable `dt` under the CFL guard (infinite off the circle).
    pub fn cfl_limit(&self, c: f64, cfl_guard: f64) -> f64 {
        if self.kind != ProblemKind::Circle {
            return f64::INFINITY;
        }
        let hmax = self
            .nodes
            .iter()
            .map(|n| (c * n.h0).abs())
            .fold(0.0, f64::max);
        cfl_guard * self.dr / hmax.max(CFL_EPS)
    }
}

/// `−∇_X X` for a homogeneous metric.
pub fn homogeneous_rhs(metric: &InvariantMetric, x: &DVector<f64>) -> Result<DVector<f64>> {
    crate::homogeneous::euler_arnold_rhs(metric, x)
}

fn require(problem: &Problem, kind: ProblemKind) -> Result<()> {
    if problem.kind == kind {
        Ok(())
    } else {
        Err(Error::input(format!(
            "expected a {} problem, got {}",
            kind.name(),
            problem.kind.name()
        )))
    }
}

/// `v̇_j = −∇^{r_j}_{v_j} v_j` at every node.
pub fn interval_rhs(problem: &Problem, state: &ReducedState) -> Result<Vec<f64>> {
    require(problem, ProblemKind::Interval)?;
    Ok(problem.rhs(state, ExecPolicy::default(), 0.0).1)
}

/// `(ċ, v̇)` for the circle system.
pub fn circle_rhs(problem: &Problem, state: &ReducedState) -> Result<(f64, Vec<f64>)> {
    require(problem, ProblemKind::Circle)?;
    Ok(problem.rhs(state, ExecPolicy::default(), 0.0))
}

/// Integrates `p' = −ċ h0 − c² h0 h0' − q` (circle) or `p' = −q` (interval).
pub fn pressure_reconstruct(
    problem: &Problem,
    state: &ReducedState,
    dcdt: f64,
) -> Result<PressureField> {
    if problem.kind == ProblemKind::Homogeneous {
        return Err(Error::input("pressure is constant on a homogeneous orbit"));
    }
    let q = problem.shape_contraction(state, ExecPolicy::default());
    let c = state.c;
    let pp: Vec<f64> = problem
        .nodes
        .iter()
        .zip(&q)
        .map(|(g, q)| -dcdt * g.h0 - c * c * g.h0 * g.h0_prime - q)
        .collect();
    if problem.kind == ProblemKind::Interval {
        return Ok(PressureField {
            p: cumulative_simpson(&pp, problem.dr),
            periodicity_residual: 0.0,
        });
    }
    let cum = cumulative_simpson_periodic(&pp, problem.dr);
    let n = pp.len();
    let abs: Vec<f64> = pp.iter().map(|x| x.abs()).collect();
    let scale = weighted_sum(&problem.weights, &abs);
    let residual = if scale > 0.0 {
        cum[n].abs() / scale
    } else {
        cum[n].abs()
    };
    Ok(PressureField {
        p: cum[..n].to_vec(),
        periodicity_residual: residual,
    })
}

/// Pressure with `ċ` taken from the dynamics.
pub fn pressure_of(
    problem: &Problem,
    state: &ReducedState,
    config: &SolverConfig,
) -> Result<PressureField> {
    let dc = problem.dcdt(state, config.policy, config.dcdt_offset);
    pressure_reconstruct(problem, state, dc)
}

/// One classical RK4 step over `(c, v)` jointly.
pub fn step_rk4(
    problem: &Problem,
    state: &ReducedState,
    config: &SolverConfig,
) -> Result<ReducedState> {
    let dt = config.dt;
    let limit = problem.cfl_limit(state.c, config.cfl_guard);
    if dt > limit {
        return Err(Error::numerical(
            state.t,
            format!("CFL violation: dt = {dt} exceeds {limit:.6e}"),
        ));
    }
    let f = |s: &ReducedState| problem.rhs(s, config.policy, config.dcdt_offset);
    let stage = |base: &ReducedState, k: &(f64, Vec<f64>), a: f64| -> ReducedState {
        ReducedState {
            t: base.t + a,
            c: base.c + a * k.0,
            v: base.v.iter().zip(&k.1).map(|(v, d)| v + a * d).collect(),
            width: base.width,
            grid: base.grid.clone(),
        }
    };
    let check = |s: &ReducedState, idx: usize| -> Result<()> {
        if s.is_finite() {
            Ok(())
        } else {
            Err(Error::numerical(
                state.t,
                format!("non-finite value at RK4 stage {idx}"),
            ))
        }
    };
    let k1 = f(state);
    let s2 = stage(state, &k1, 0.5 * dt);
    check(&s2, 1)?;
    let k2 = f(&s2);
    let s3 = stage(state, &k2, 0.5 * dt);
    check(&s3, 2)?;
    let k3 = f(&s3);
    let s4 = stage(state, &k3, dt);
    check(&s4, 3)?;
    let k4 = f(&s4);
    let sixth = dt / 6.0;
    let next = ReducedState {
        t: state.t + dt,
        c: state.c + sixth * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        v: (0..state.v.len())
            .map(|i| state.v[i] + sixth * (k1.1[i] + 2.0 * k2.1[i] + 2.0 * k3.1[i] + k4.1[i]))
            .collect(),
        width: state.width,
        grid: state.grid.clone(),
    };
    check(&next, 4)?;
    Ok(next)
}

#[cfg(test)]
mod tests;
