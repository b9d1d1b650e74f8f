//! Invariant metrics on an orbit `G/H`, the Levi-Civita connection of
//! invariant vector fields and the Euler–Arnold vector field `-∇_X X`.
//!
//! Inner products of invariant fields are constant on the orbit, so the
//! Koszul formula loses its derivative terms:
//!
//! `2⟨∇_X Y, Z⟩ = ⟨[X,Y],Z⟩ − ⟨[Y,Z],X⟩ + ⟨[Z,X],Y⟩`.
//!
//! The bracket of invariant fields equals the projected algebra bracket when
//! `H` is trivial or acts trivially on `m`; other isotropy is refused.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::ReductiveSplit;
use crate::report::ValidationReport;

pub const INVARIANCE_TOL: f64 = 1e-10;

/// A `G`-invariant inner product on `m`, given by its Gram matrix in the
/// `m_basis` of the split.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantMetric {
    split: ReductiveSplit,
    gram: DMatrix<f64>,
}

impl InvariantMetric {
    pub fn new(split: ReductiveSplit, gram: DMatrix<f64>) -> Result<Self> {
        let d = split.dim_m();
        if gram.nrows() != d || gram.ncols() != d {
            return Err(Error::structural(format!(
                "gram is {}x{}, expected {d}x{d}",
                gram.nrows(),
                gram.ncols()
            )));
        }
        if gram.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("gram has non-finite entries"));
        }
        Ok(Self { split, gram })
    }

    pub fn split(&self) -> &ReductiveSplit {
        &self.split
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `gram(a, b)` for `m`-coordinate vectors.
    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.gram * b))
    }
}

/// Symmetry, positivity and `ad(h)`-invariance of the gram.
pub fn check_metric_invariance(metric: &InvariantMetric) -> ValidationReport {
    let g = metric.gram();
    let mut report = ValidationReport::new();
    report.record("gram_symmetric", (g - g.transpose()).amax(), INVARIANCE_TOL);
    let min_eig = if g.nrows() == 0 {
        f64::INFINITY
    } else {
        ((g + g.transpose()) * 0.5).symmetric_eigenvalues().min()
    };
    report
        .record_outcome("gram_positive_definite", min_eig > 0.0, "")
        .with_detail(format!("min eigenvalue {min_eig:.6e}"));
    let mut resid = 0.0_f64;
    for x in metric.split().h_basis() {
        let a = metric.split().ad_m(x);
        let r = a.transpose() * g + g * &a;
        resid = resid.max(r.amax());
    }
    report.record("ad_h_invariance", resid, INVARIANCE_TOL);
    report
}

/// Errors unless invariant-field brackets are the projected algebra bracket.
pub fn connection_supported(split: &ReductiveSplit) -> Result<()> {
    if split.isotropy_is_trivial() || split.m0_is_full() {
        Ok(())
    } else {
        Err(Error::unsupported(
            "nontrivial isotropy acting nontrivially on m: the bracket of invariant fields is not available",
        ))
    }
}

/// Projected structure constants on `m`: `D[i][j][k] = (proj_m [m_i, m_j])_k`.
pub fn m_structure_constants(split: &ReductiveSplit) -> Vec<f64> {
    let n = split.dim_m();
    let mut d = vec![0.0; n * n * n];
    let unit = |i: usize| DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
    for i in 0..n {
        for j in 0..n {
            let b = split.m_bracket(&unit(i), &unit(j));
            for k in 0..n {
                d[(i * n + j) * n + k] = b[k];
            }
        }
    }
    d
}

/// Christoffel-type tensor of the invariant connection in a fixed frame:
/// `∇_{e_i} e_j = Σ_k Γ[k][i][j] e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionTensor {
    n: usize,
    data: Vec<f64>,
}

impl ConnectionTensor {
    /// Builds the tensor from projected structure constants and a gram.
    pub fn from_parts(structure: &[f64], gram: &DMatrix<f64>) -> Result<Self> {
        let n = gram.nrows();
        debug_assert_eq!(structure.len(), n * n * n);
        let mut data = vec![0.0; n * n * n];
        if n == 0 {
            return Ok(Self { n, data });
        }
        if structure.iter().all(|&c| c == 0.0) {
            return Ok(Self { n, data });
        }
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::input("gram is not positive definite"))?;
        // ⟨[e_a, e_b], e_c⟩
        let br = |a: usize, b: usize, c: usize| -> f64 {
            (0..n)
                .map(|k| structure[(a * n + b) * n + k] * gram[(k, c)])
                .sum()
        };
        for i in 0..n {
            for j in 0..n {
                let rhs =
                    DVector::from_fn(n, |z, _| 0.5 * (br(i, j, z) - br(j, z, i) + br(z, i, j)));
                let sol = chol.solve(&rhs);
                for k in 0..n {
                    data[(k * n + i) * n + j] = sol[k];
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_metric(metric: &InvariantMetric) -> Result<Self> {
        connection_supported(metric.split())?;
        Self::from_parts(&m_structure_constants(metric.split()), metric.gram())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    /// `out = ∇_x y`.
    pub fn apply(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (k, o) in out.iter_mut().enumerate().take(n) {
            let mut s = 0.0;
            for i in 0..n {
                let row = &self.data[(k * n + i) * n..(k * n + i + 1) * n];
                let mut t = 0.0;
                for j in 0..n {
                    t += row[j] * y[j];
                }
                s += x[i] * t;
            }
            *o = s;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }
}

/// `∇_X Y` for invariant fields with `m`-coordinates `x` and `y`.
pub fn invariant_connection(
    metric: &InvariantMetric,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = metric.split().dim_m();
    if x.len() != n || y.len() != n {
        return Err(Error::input(format!(
            "connection arguments must have length {n}"
        )));
    }
    let gamma = ConnectionTensor::from_metric(metric)?;
    let mut out = DVector::zeros(n);
    gamma.apply(x.as_slice(), y.as_slice(), out.as_mut_slice());
    Ok(out)
}

/// `sqrt(det gram)`: orbit volume relative to the reference density of the
/// `m` basis.
pub fn orbit_volume(metric: &InvariantMetric) -> Result<f64> {
    relative_volume(metric.gram())
}

pub(crate) fn relative_volume(gram: &DMatrix<f64>) -> Result<f64> {
    if gram.nrows() == 0 {
        return Ok(1.0);
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::input("gram is not positive definite"))?;
    Ok(chol.l_dirty().diagonal().iter().product::<f64>())
}

/// `-∇_X X`, the right-hand side of the homogeneous Euler equation.
pub fn euler_arnold_rhs(metric: &InvariantMetric, x: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(-invariant_connection(metric, x, x)?)
}
