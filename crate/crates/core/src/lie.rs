//! Compact Lie algebras given by structure constants, isotropy subalgebras and
//! the reductive split `g = h ⊕ m` with its `Ad(H)`-fixed subspace `m0`.
//!
//! Vectors in `g` are coefficient columns in the algebra basis `e_1..e_n`.
//! Vectors in `m` are coefficient columns in the `m_basis` of a split.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::report::ValidationReport;

/// Threshold for exact algebraic identities (antisymmetry, Jacobi, invariance).
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Singular-value cutoff used when extracting the fixed subspace.
pub const KERNEL_CUTOFF: f64 = 1e-10;

/// Finite-dimensional real Lie algebra with an ad-invariant inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebraSpec {
    dim: usize,
    /// `C[i][j][k]` stored at `(i * dim + j) * dim + k`.
    structure: Vec<f64>,
    q: DMatrix<f64>,
}

impl LieAlgebraSpec {
    /// Builds an algebra from a dense structure array. Only shapes and
    /// finiteness are checked here; see [`validate_structure`] for the rest.
    pub fn new(dim: usize, structure: Vec<f64>, q: DMatrix<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::structural("algebra dimension must be at least 1"));
        }
        if structure.len() != dim * dim * dim {
            return Err(Error::structural(format!(
                "structure array has {} entries, expected {}",
                structure.len(),
                dim * dim * dim
            )));
        }
        if q.nrows() != dim || q.ncols() != dim {
            return Err(Error::structural(format!(
                "Q is {}x{}, expected {dim}x{dim}",
                q.nrows(),
                q.ncols()
            )));
        }
        if structure.iter().chain(q.iter()).any(|x| !x.is_finite()) {
            return Err(Error::input("non-finite entry in structure constants or Q"));
        }
        Ok(Self { dim, structure, q })
    }

    /// Builds an algebra from brackets `[e_i, e_j] = value · e_k`. The
    /// antisymmetric partner `[e_j, e_i]` is filled in automatically.
    pub fn from_triplets(
        dim: usize,
        triplets: &[(usize, usize, usize, f64)],
        q: DMatrix<f64>,
    ) -> Result<Self> {
        let mut c = vec![0.0; dim * dim * dim];
        let mut set = vec![false; dim * dim * dim];
        let idx = |i: usize, j: usize, k: usize| (i * dim + j) * dim + k;
        for &(i, j, k, value) in triplets {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::structural(format!(
                    "bracket index ({i},{j},{k}) out of range for dimension {dim}"
                )));
            }
            if i == j && value != 0.0 {
                return Err(Error::input(format!("[e_{i}, e_{i}] must vanish")));
            }
            for (a, b, v) in [(i, j, value), (j, i, -value)] {
                let slot = idx(a, b, k);
                if set[slot] && c[slot] != v {
                    return Err(Error::input(format!(
                        "conflicting values for bracket coefficient ({a},{b},{k})"
                    )));
                }
                set[slot] = true;
                c[slot] = v;
            }
        }
        Self::new(dim, c, q)
    }

    /// `su(2)` with `[e_i, e_j] = ε_ijk e_k` and `Q = identity`.
    pub fn su2() -> Self {
        Self::from_triplets(
            3,
            &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)],
            DMatrix::identity(3, 3),
        )
        .expect("su(2) is well formed")
    }

    /// The abelian algebra `R^n` with `Q = identity`.
    pub fn abelian(n: usize) -> Self {
        Self::new(n, vec![0.0; n * n * n], DMatrix::identity(n, n))
            .expect("abelian algebra is well formed")
    }

    /// `su(2) ⊕ R^n`, with the abelian summand in slots `3..3+n`.
    pub fn su2_plus_abelian(n: usize) -> Self {
        let dim = 3 + n;
        Self::from_triplets(
            dim,
            &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)],
            DMatrix::identity(dim, dim),
        )
        .expect("su(2) + R^n is well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Structure constant `C[i][j][k]`.
    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.structure[(i * self.dim + j) * self.dim + k]
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn is_abelian(&self) -> bool {
        self.structure.iter().all(|&c| c == 0.0)
    }

    pub fn basis_vector(&self, i: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim);
        e[i] = 1.0;
        e
    }

    /// `Q(x, y)`.
    pub fn q_inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.q * y))
    }

    fn check_len(&self, v: &DVector<f64>, what: &str) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::input(format!(
                "{what} has length {}, expected {}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Bracket without the length check, for internal hot paths.
    pub(crate) fn bracket_unchecked(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                let base = (i * n + j) * n;
                for k in 0..n {
                    out[k] += xy * self.structure[base + k];
                }
            }
        }
        out
    }

    /// Matrix of `ad(x) = [x, ·]` acting on `g`.
    pub fn ad(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |k, j| (0..n).map(|i| x[i] * self.c(i, j, k)).sum())
    }
}

/// `[x, y] = Σ_ij x_i y_j C[i][j][·]`.
pub fn bracket(alg: &LieAlgebraSpec, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    alg.check_len(x, "x")?;
    alg.check_len(y, "y")?;
    Ok(alg.bracket_unchecked(x, y))
}

/// Antisymmetry, Jacobi identity, positivity of `Q` and ad-invariance of `Q`.
pub fn validate_structure(alg: &LieAlgebraSpec) -> ValidationReport {
    let n = alg.dim;
    let mut report = ValidationReport::new();

    let mut antisym = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                antisym = antisym.max((alg.c(i, j, k) + alg.c(j, i, k)).abs());
            }
        }
    }
    report.record("antisymmetry", antisym, STRUCTURE_TOL);

    let basis: Vec<DVector<f64>> = (0..n).map(|i| alg.basis_vector(i)).collect();
    let mut jacobi = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (x, y, z) = (&basis[i], &basis[j], &basis[k]);
                let cyc = alg.bracket_unchecked(x, &alg.bracket_unchecked(y, z))
                    + alg.bracket_unchecked(y, &alg.bracket_unchecked(z, x))
                    + alg.bracket_unchecked(z, &alg.bracket_unchecked(x, y));
                jacobi = jacobi.max(cyc.amax());
            }
        }
    }
    report.record("jacobi", jacobi, STRUCTURE_TOL);

    let q = alg.q();
    let q_sym = (q - q.transpose()).amax();
    report.record("q_symmetric", q_sym, STRUCTURE_TOL);
    let sym = (q + q.transpose()) * 0.5;
    let min_eig = sym.symmetric_eigenvalues().min();
    report
        .record_outcome("q_positive_definite", min_eig > 0.0, "")
        .with_detail(format!("min eigenvalue {min_eig:.6e}"));

    let mut ad_inv = 0.0_f64;
    for x in &basis {
        for y in &basis {
            for z in &basis {
                let r = alg.q_inner(&alg.bracket_unchecked(x, y), z)
                    + alg.q_inner(y, &alg.bracket_unchecked(x, z));
                ad_inv = ad_inv.max(r.abs());
            }
        }
    }
    report.record("q_ad_invariance", ad_inv, STRUCTURE_TOL);
    report
}

/// The split `g = h ⊕ m` with `m` the `Q`-orthogonal complement of `h`, and
/// `m0 ⊆ m` the joint kernel of `proj_m ∘ ad(x)` over `x ∈ h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductiveSplit {
    algebra: LieAlgebraSpec,
    h_basis: Vec<DVector<f64>>,
    /// `Q`-orthogonal (not normalized) basis of `m`, as vectors in `g`.
    m_basis: Vec<DVector<f64>>,
    /// Basis of `m0` in `m`-coordinates.
    m0_basis: Vec<DVector<f64>>,
    /// `Q(m_b, m_b)` for each `m` basis vector.
    m_norms: Vec<f64>,
}

impl ReductiveSplit {
    pub fn algebra(&self) -> &LieAlgebraSpec {
        &self.algebra
    }

    pub fn h_basis(&self) -> &[DVector<f64>] {
        &self.h_basis
    }

    pub fn m_basis(&self) -> &[DVector<f64>] {
        &self.m_basis
    }

    pub fn m0_basis(&self) -> &[DVector<f64>] {
        &self.m0_basis
    }

    pub fn dim_m(&self) -> usize {
        self.m_basis.len()
    }

    pub fn dim_m0(&self) -> usize {
        self.m0_basis.len()
    }

    /// True when `m0 = m`; the `m0` basis is then the `m` coordinate basis.
    pub fn m0_is_full(&self) -> bool {
        self.m0_basis.len() == self.m_basis.len()
    }

    pub fn isotropy_is_trivial(&self) -> bool {
        self.h_basis.is_empty()
    }

    /// Vector in `g` with the given `m`-coordinates.
    pub fn m_to_g(&self, coords: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.algebra.dim());
        for (c, b) in coords.iter().zip(&self.m_basis) {
            out.axpy(*c, b, 1.0);
        }
        out
    }

    /// `m`-coordinates of the `Q`-orthogonal projection of `y ∈ g` onto `m`.
    pub fn proj_m(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.m_basis.len(),
            self.m_basis
                .iter()
                .zip(&self.m_norms)
                .map(|(b, nb)| self.algebra.q_inner(b, y) / nb),
        )
    }

    /// `proj_m ∘ ad(x)` restricted to `m`, in `m`-coordinates.
    pub fn ad_m(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self
            .m_basis
            .iter()
            .map(|b| self.proj_m(&self.algebra.bracket_unchecked(x, b)))
            .collect();
        if cols.is_empty() {
            return DMatrix::zeros(0, 0);
        }
        DMatrix::from_columns(&cols)
    }

    /// `proj_m [a, b]` for `a, b` in `m`-coordinates.
    pub fn m_bracket(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        self.proj_m(
            &self
                .algebra
                .bracket_unchecked(&self.m_to_g(a), &self.m_to_g(b)),
        )
    }
}

/// Gram–Schmidt in the `Q` inner product. Returns orthonormal vectors.
fn q_orthonormalize(alg: &LieAlgebraSpec, vs: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut u = v.clone();
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for b in &out {
                let c = alg.q_inner(b, &u);
                u.axpy(-c, b, 1.0);
            }
        }
        let norm = alg.q_inner(&u, &u).sqrt();
        if norm > 1e-12 {
            out.push(u / norm);
        }
    }
    out
}

/// Splits `g` along the isotropy subalgebra spanned by `h_basis`.
pub fn reductive_split(alg: &LieAlgebraSpec, h_basis: &[DVector<f64>]) -> Result<ReductiveSplit> {
    let n = alg.dim();
    for (a, h) in h_basis.iter().enumerate() {
        if h.len() != n {
            return Err(Error::input(format!(
                "isotropy vector {a} has length {}, expected {n}",
                h.len()
            )));
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::input(format!(
                "isotropy vector {a} has non-finite entries"
            )));
        }
    }
    if !h_basis.is_empty() {
        if h_basis.len() > n {
            return Err(Error::input("isotropy basis has more vectors than dim g"));
        }
        let mat = DMatrix::from_columns(h_basis);
        let sv = mat.singular_values();
        let (max, min) = (sv.max(), sv.min());
        if max == 0.0 || min / max < KERNEL_CUTOFF {
            return Err(Error::input("isotropy basis is linearly dependent"));
        }
    }
    let h_on = q_orthonormalize(alg, h_basis);

    // Closure of h under the bracket.
    let mut off = 0.0_f64;
    for x in &h_on {
        for y in &h_on {
            let mut z = alg.bracket_unchecked(x, y);
            for b in &h_on {
                let c = alg.q_inner(b, &z);
                z.axpy(-c, b, 1.0);
            }
            off = off.max(z.amax());
        }
    }
    if off >= STRUCTURE_TOL {
        return Err(Error::validation(format!(
            "isotropy basis does not span a subalgebra (off-h bracket residual {off:.3e})"
        )));
    }

    // m: project the coordinate basis off h and orthogonalize the survivors.
    let mut m_basis: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        let e = alg.basis_vector(i);
        let scale = alg.q_inner(&e, &e).sqrt();
        let mut u = e;
        for _ in 0..2 {
            for b in &h_on {
                let c = alg.q_inner(b, &u);
                u.axpy(-c, b, 1.0);
            }
            for b in &m_basis {
                let c = alg.q_inner(b, &u) / alg.q_inner(b, b);
                u.axpy(-c, b, 1.0);
            }
        }
        if alg.q_inner(&u, &u).sqrt() > 1e-8 * scale {
            u.iter_mut().for_each(|x| {
                if x.abs() < 1e-15 {
                    *x = 0.0
                }
            });
            m_basis.push(u);
        }
        if m_basis.len() + h_on.len() == n {
            break;
        }
    }
    if m_basis.len() + h_on.len() != n {
        return Err(Error::structural(
            "failed to complete the isotropy basis to g",
        ));
    }
    let m_norms: Vec<f64> = m_basis.iter().map(|b| alg.q_inner(b, b)).collect();

    let mut split = ReductiveSplit {
        algebra: alg.clone(),
        h_basis: h_basis.to_vec(),
        m_basis,
        m0_basis: Vec::new(),
        m_norms,
    };
    split.m0_basis = fixed_subspace(&split);
    Ok(split)
}

/// Joint kernel of `{proj_m ∘ ad(x) : x ∈ h}` on `m`, in `m`-coordinates.
fn fixed_subspace(split: &ReductiveSplit) -> Vec<DVector<f64>> {
    let dm = split.dim_m();
    let identity = || {
        (0..dm)
            .map(|i| DVector::from_fn(dm, |k, _| if k == i { 1.0 } else { 0.0 }))
            .collect()
    };
    if dm == 0 {
        return Vec::new();
    }
    if split.h_basis.is_empty() {
        return identity();
    }
    // Work in Q-orthonormal coordinates so the singular values are meaningful.
    let s: Vec<f64> = split.m_norms.iter().map(|x| x.sqrt()).collect();
    let blocks: Vec<DMatrix<f64>> = split
        .h_basis
        .iter()
        .map(|x| {
            let a = split.ad_m(x);
            DMatrix::from_fn(dm, dm, |k, l| s[k] * a[(k, l)] / s[l])
        })
        .collect();
    let mut stacked = DMatrix::zeros(dm * blocks.len(), dm);
    for (b, blk) in blocks.iter().enumerate() {
        stacked.view_mut((b * dm, 0), (dm, dm)).copy_from(blk);
    }
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let kernel: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &sv)| sv < KERNEL_CUTOFF)
        .map(|(i, _)| {
            let row = v_t.row(i).transpose();
            DVector::from_fn(dm, |l, _| row[l] / s[l])
        })
        .collect();
    if kernel.len() == dm {
        return identity();
    }
    if kernel.is_empty() {
        return Vec::new();
    }
    canonical_basis(&kernel)
}

/// Deterministic basis of `span(vs)`: project the coordinate vectors onto the
/// span and orthonormalize the survivors in order.
fn canonical_basis(vs: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let d = vs[0].len();
    let mut on: Vec<DVector<f64>> = Vec::new();
    for v in vs {
        let mut u = v.clone();
        for b in &on {
            let c = b.dot(&u);
            u.axpy(-c, b, 1.0);
        }
        let nu = u.norm();
        if nu > 1e-12 {
            on.push(u / nu);
        }
    }
    let mut out: Vec<DVector<f64>> = Vec::new();
    for i in 0..d {
        let mut p = DVector::zeros(d);
        for b in &on {
            p.axpy(b[i], b, 1.0);
        }
        for b in &out {
            let c = b.dot(&p);
            p.axpy(-c, b, 1.0);
        }
        let np = p.norm();
        if np > 1e-8 {
            let mut u = p / np;
            u.iter_mut().for_each(|x| {
                if x.abs() < 1e-15 {
                    *x = 0.0
                }
            });
            out.push(u);
        }
        if out.len() == on.len() {
            break;
        }
    }
    out
}

/// Closure, orthogonality and `ad(h)`-invariance checks on a split.
pub fn validate_split(split: &ReductiveSplit) -> ValidationReport {
    let alg = split.algebra();
    let mut report = ValidationReport::new();
    let h_on = q_orthonormalize(alg, split.h_basis());

    let mut off = 0.0_f64;
    for x in &h_on {
        for y in &h_on {
            let mut z = alg.bracket_unchecked(x, y);
            for b in &h_on {
                let c = alg.q_inner(b, &z);
                z.axpy(-c, b, 1.0);
            }
            off = off.max(z.amax());
        }
    }
    report.record("h_subalgebra", off, STRUCTURE_TOL);

    let mut orth = 0.0_f64;
    for h in split.h_basis() {
        for m in split.m_basis() {
            orth = orth.max(alg.q_inner(h, m).abs());
        }
    }
    report.record("h_m_orthogonal", orth, STRUCTURE_TOL);
    report.record_outcome(
        "dimension_count",
        split.h_basis().len() + split.dim_m() == alg.dim(),
        format!(
            "dim h = {}, dim m = {}, dim g = {}",
            split.h_basis().len(),
            split.dim_m(),
            alg.dim()
        ),
    );

    let mut fixed = 0.0_f64;
    for x in split.h_basis() {
        let a = split.ad_m(x);
        for y in split.m0_basis() {
            fixed = fixed.max((&a * y).amax());
        }
    }
    report.record("m0_fixed_by_h", fixed, KERNEL_CUTOFF);
    report
}
