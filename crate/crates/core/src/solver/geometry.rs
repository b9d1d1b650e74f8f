//! Per-node geometric data, computed once per problem.

use nalgebra::DMatrix;

use crate::coho::{mean_curvature, relative_orbit_volume, MetricProfile};
use crate::error::{Error, Result};
use crate::homogeneous::{relative_volume, ConnectionTensor};
use crate::numerics::central_derivative;

/// Geometry at one grid node. Matrices are row-major `n0 × n0`.
#[derive(Debug, Clone)]
pub(crate) struct NodeGeometry {
    pub gram: Vec<f64>,
    pub shape: Vec<f64>,
    /// `g_r S_r = -½ g_r'`, symmetric.
    pub gram_shape: Vec<f64>,
    pub gamma: ConnectionTensor,
    pub h0: f64,
    /// `h0' = H h0`.
    pub h0_prime: f64,
    pub vol: f64,
    /// `g_r`-operator norm of `S_r` (largest absolute eigenvalue).
    pub shape_norm: f64,
    /// `|h0' - H h0|` with `h0'` from a finite difference of the closed form.
    pub h0_divergence: f64,
    /// Trace of `Y ↦ ∇_Y e_j`, so the vertical divergence of `v` is `Σ_j tr_j v_j`.
    pub div_trace: Vec<f64>,
}

pub(crate) fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n * n).map(|k| m[(k / n, k % n)]).collect()
}

fn div_trace(gamma: &ConnectionTensor) -> Vec<f64> {
    let n = gamma.dim();
    (0..n)
        .map(|j| (0..n).map(|i| gamma.get(i, i, j)).sum())
        .collect()
}

/// Geometry of a homogeneous orbit with a fixed gram.
pub(crate) fn homogeneous_node(structure: &[f64], gram: &DMatrix<f64>) -> Result<NodeGeometry> {
    let n = gram.nrows();
    let gamma = ConnectionTensor::from_parts(structure, gram)?;
    Ok(NodeGeometry {
        gram: flat(gram),
        shape: vec![0.0; n * n],
        gram_shape: vec![0.0; n * n],
        div_trace: div_trace(&gamma),
        gamma,
        h0: 0.0,
        h0_prime: 0.0,
        vol: relative_volume(gram)?,
        shape_norm: 0.0,
        h0_divergence: 0.0,
    })
}

/// Geometry at `r` on a cohomogeneity-one profile. `vol_mid` is `vol(L/2)`
/// on a circle and `None` on an interval (where `h0` is unused).
pub(crate) fn profile_node(
    profile: &MetricProfile,
    structure: &[f64],
    r: f64,
    vol_mid: Option<f64>,
) -> Result<NodeGeometry> {
    let (g, gp) = crate::coho::metric_at(profile, r)?;
    let chol = g.clone().cholesky().ok_or_else(|| Error::Domain {
        r,
        detail: "orbit metric is not positive definite".into(),
    })?;
    let gs = &gp * -0.5;
    let s = chol.solve(&gs);
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::input("singular Cholesky factor"))?;
    let sym = &linv * &gs * linv.transpose();
    let shape_norm = if sym.nrows() == 0 {
        0.0
    } else {
        let sym = (&sym + sym.transpose()) * 0.5;
        sym.symmetric_eigenvalues().amax()
    };
    let gamma = ConnectionTensor::from_parts(structure, &g)?;
    let vol = relative_volume(&g)?;
    let (h0, h0_prime, h0_divergence) = match vol_mid {
        Some(mid) => {
            let curv = mean_curvature(profile, r)?;
            let h0 = mid / vol;
            let closed = |x: f64| {
                relative_orbit_volume(profile, x)
                    .map(|v| mid / v)
                    .unwrap_or(f64::NAN)
            };
            let fd = central_derivative(closed, r, profile.length() * 1e-3);
            (h0, curv * h0, (fd - curv * h0).abs())
        }
        None => (0.0, 0.0, 0.0),
    };
    Ok(NodeGeometry {
        gram: flat(&g),
        shape: flat(&s),
        gram_shape: flat(&gs),
        div_trace: div_trace(&gamma),
        gamma,
        h0,
        h0_prime,
        vol,
        shape_norm,
        h0_divergence,
    })
}

/// `aᵀ M b` for a row-major `n × n` matrix.
#[inline]
pub(crate) fn bilinear(m: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        let mut t = 0.0;
        for j in 0..n {
            t += row[j] * b[j];
        }
        s += a[i] * t;
    }
    s
}

/// `out = M x` for a row-major `n × n` matrix.
#[inline]
pub(crate) fn mat_vec(m: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        out[i] = (0..n).map(|j| m[i * n + j] * x[j]).sum();
    }
}
