//! Orbit-space descriptors and one-parameter families of orbit metrics
//! `g = dr² + g_r`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};

use super::spline::CubicSpline;
use crate::error::{Error, Result};
use crate::lie::{reductive_split, LieAlgebraSpec, ReductiveSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointKind {
    /// The orbit collapses to a lower-dimensional (singular) orbit.
    Singular,
    /// A principal orbit lying in the boundary of the manifold.
    Boundary,
}

/// The orbit space `M/G`: an interval `[0, L]` or a circle of length `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitSpace {
    Interval {
        length: f64,
        endpoints: [EndpointKind; 2],
    },
    Circle {
        length: f64,
    },
}

impl OrbitSpace {
    pub fn length(&self) -> f64 {
        match *self {
            OrbitSpace::Interval { length, .. } | OrbitSpace::Circle { length } => length,
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, OrbitSpace::Circle { .. })
    }

    pub fn endpoints(&self) -> Option<[EndpointKind; 2]> {
        match *self {
            OrbitSpace::Interval { endpoints, .. } => Some(endpoints),
            OrbitSpace::Circle { .. } => None,
        }
    }

    /// Positions (0 or `L`) of the singular endpoints.
    pub fn singular_endpoints(&self) -> Vec<f64> {
        match *self {
            OrbitSpace::Interval { length, endpoints } => endpoints
                .iter()
                .zip([0.0, length])
                .filter(|(k, _)| **k == EndpointKind::Singular)
                .map(|(_, r)| r)
                .collect(),
            OrbitSpace::Circle { .. } => Vec::new(),
        }
    }

    /// Checks `r` against the domain and reduces it modulo `L` on a circle.
    pub fn admit(&self, r: f64) -> Result<f64> {
        if !r.is_finite() {
            return Err(Error::Domain {
                r,
                detail: "non-finite coordinate".into(),
            });
        }
        match *self {
            OrbitSpace::Circle { length } => Ok(r.rem_euclid(length)),
            OrbitSpace::Interval { length, endpoints } => {
                let left_ok = match endpoints[0] {
                    EndpointKind::Singular => r > 0.0,
                    EndpointKind::Boundary => r >= 0.0,
                };
                let right_ok = match endpoints[1] {
                    EndpointKind::Singular => r < length,
                    EndpointKind::Boundary => r <= length,
                };
                if left_ok && right_ok {
                    Ok(r)
                } else {
                    Err(Error::Domain {
                        r,
                        detail: format!("interval [0, {length}] with endpoints {endpoints:?}"),
                    })
                }
            }
        }
    }
}

/// Truncated Fourier series `a0 + Σ_k a_k cos(2πkr/L) + b_k sin(2πkr/L)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FourierSeries {
    pub a0: f64,
    /// `(a_k, b_k)` for `k = 1, 2, ...`.
    pub modes: Vec<(f64, f64)>,
}

impl FourierSeries {
    pub fn constant(a0: f64) -> Self {
        Self {
            a0,
            modes: Vec::new(),
        }
    }

    pub fn new(a0: f64, modes: Vec<(f64, f64)>) -> Self {
        Self { a0, modes }
    }

    /// `n`-th derivative at `r` for period `length`.
    pub fn derivative(&self, r: f64, length: f64, n: u32) -> f64 {
        let mut s = if n == 0 { self.a0 } else { 0.0 };
        for (k, &(a, b)) in self.modes.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64 / length;
            let (sn, cs) = (w * r).sin_cos();
            // d^n/dr^n [a cos + b sin] cycles with period 4.
            let (c_term, s_term) = match n % 4 {
                0 => (a * cs, b * sn),
                1 => (-a * sn, b * cs),
                2 => (-a * cs, -b * sn),
                _ => (a * sn, -b * cs),
            };
            s += w.powi(n as i32) * (c_term + s_term);
        }
        s
    }

    pub fn value(&self, r: f64, length: f64) -> f64 {
        self.derivative(r, length, 0)
    }

    pub fn is_finite(&self) -> bool {
        self.a0.is_finite()
            && self
                .modes
                .iter()
                .all(|(a, b)| a.is_finite() && b.is_finite())
    }
}

/// Tabulated gram samples with user-supplied derivative samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    pub r: Vec<f64>,
    pub gram: Vec<DMatrix<f64>>,
    pub gram_prime: Vec<DMatrix<f64>>,
    gram_splines: Vec<CubicSpline>,
    prime_splines: Vec<CubicSpline>,
}

impl TabulatedProfile {
    pub fn new(
        r: Vec<f64>,
        gram: Vec<DMatrix<f64>>,
        gram_prime: Vec<DMatrix<f64>>,
        periodic: bool,
    ) -> Result<Self> {
        if r.len() != gram.len() || r.len() != gram_prime.len() {
            return Err(Error::structural(
                "tabulated profile columns differ in length",
            ));
        }
        let d = gram.first().map(|g| g.nrows()).unwrap_or(0);
        if gram
            .iter()
            .chain(&gram_prime)
            .any(|g| g.nrows() != d || g.ncols() != d)
        {
            return Err(Error::structural(
                "tabulated gram samples have inconsistent shapes",
            ));
        }
        let build = |samples: &[DMatrix<f64>]| -> Result<Vec<CubicSpline>> {
            let mut out = Vec::new();
            for i in 0..d {
                for j in i..d {
                    let ys: Vec<f64> = samples.iter().map(|g| g[(i, j)]).collect();
                    out.push(if periodic {
                        CubicSpline::periodic(&r, &ys)?
                    } else {
                        CubicSpline::natural(&r, &ys)?
                    });
                }
            }
            Ok(out)
        };
        let gram_splines = build(&gram)?;
        let prime_splines = build(&gram_prime)?;
        Ok(Self {
            r,
            gram,
            gram_prime,
            gram_splines,
            prime_splines,
        })
    }

    pub fn dim(&self) -> usize {
        self.gram.first().map(|g| g.nrows()).unwrap_or(0)
    }

    fn eval(splines: &[CubicSpline], d: usize, r: f64) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(d, d);
        let mut idx = 0;
        for i in 0..d {
            for j in i..d {
                let v = splines[idx].eval(r);
                g[(i, j)] = v;
                g[(j, i)] = v;
                idx += 1;
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileFamily {
    /// `g_r = diag(cos²r, sin²r)` on `(0, π/2)`: the round 3-sphere under the
    /// maximal torus.
    RoundS3T2,
    /// Abelian fibers with `f_i(r)² = exp(series_i(r))`.
    WarpedTorus(Vec<FourierSeries>),
    /// `SU(2)` fibers with diagonal `f_i(r)² = exp(series_i(r))`.
    BergerCircle(Vec<FourierSeries>),
    Tabulated(TabulatedProfile),
}

impl ProfileFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileFamily::RoundS3T2 => "round_s3_t2",
            ProfileFamily::WarpedTorus(_) => "warped_torus",
            ProfileFamily::BergerCircle(_) => "berger_circle",
            ProfileFamily::Tabulated(_) => "tabulated",
        }
    }
}

/// A cohomogeneity-one metric: isotropy split, orbit space and the family of
/// orbit metrics `g_r` on `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricProfile {
    split: ReductiveSplit,
    orbit_space: OrbitSpace,
    family: ProfileFamily,
}

impl MetricProfile {
    pub fn new(
        split: ReductiveSplit,
        orbit_space: OrbitSpace,
        family: ProfileFamily,
    ) -> Result<Self> {
        let d = split.dim_m();
        let length = orbit_space.length();
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::input("orbit space length must be positive"));
        }
        match &family {
            ProfileFamily::RoundS3T2 => {
                let expected = OrbitSpace::Interval {
                    length: FRAC_PI_2,
                    endpoints: [EndpointKind::Singular; 2],
                };
                if orbit_space != expected || d != 2 {
                    return Err(Error::input(
                        "round_s3_t2 requires a 2-dimensional m over the interval (0, pi/2) with singular endpoints",
                    ));
                }
            }
            ProfileFamily::WarpedTorus(series) | ProfileFamily::BergerCircle(series) => {
                if series.len() != d {
                    return Err(Error::structural(format!(
                        "{} series for a {d}-dimensional m",
                        series.len()
                    )));
                }
                if series.iter().any(|s| !s.is_finite()) {
                    return Err(Error::input("non-finite Fourier coefficient"));
                }
                if matches!(family, ProfileFamily::WarpedTorus(_)) && !split.algebra().is_abelian()
                {
                    return Err(Error::input("warped_torus requires an abelian algebra"));
                }
            }
            ProfileFamily::Tabulated(t) => {
                if t.dim() != d {
                    return Err(Error::structural(format!(
                        "tabulated samples are {}x{}, m has dimension {d}",
                        t.dim(),
                        t.dim()
                    )));
                }
                let (first, last) = (t.r[0], *t.r.last().unwrap());
                if first.abs() > 1e-12 || (last - length).abs() > 1e-12 * length.max(1.0) {
                    return Err(Error::input(format!(
                        "tabulated r must span [0, {length}], got [{first}, {last}]"
                    )));
                }
            }
        }
        Ok(Self {
            split,
            orbit_space,
            family,
        })
    }

    /// `S³ ⊂ C²` with the round metric under the `T²` action.
    pub fn round_s3_t2() -> Self {
        let split = reductive_split(&LieAlgebraSpec::abelian(2), &[]).expect("abelian split");
        Self::new(
            split,
            OrbitSpace::Interval {
                length: FRAC_PI_2,
                endpoints: [EndpointKind::Singular; 2],
            },
            ProfileFamily::RoundS3T2,
        )
        .expect("round S3 profile is valid")
    }

    /// Flat-or-warped torus bundle over `orbit_space` with abelian fibers.
    pub fn warped_torus(orbit_space: OrbitSpace, series: Vec<FourierSeries>) -> Result<Self> {
        let split = reductive_split(&LieAlgebraSpec::abelian(series.len()), &[])?;
        Self::new(split, orbit_space, ProfileFamily::WarpedTorus(series))
    }

    /// `SU(2)` fibers with a diagonal (Berger-type) left-invariant metric.
    pub fn berger(orbit_space: OrbitSpace, series: Vec<FourierSeries>) -> Result<Self> {
        let split = reductive_split(&LieAlgebraSpec::su2(), &[])?;
        Self::new(split, orbit_space, ProfileFamily::BergerCircle(series))
    }

    pub fn split(&self) -> &ReductiveSplit {
        &self.split
    }

    pub fn orbit_space(&self) -> &OrbitSpace {
        &self.orbit_space
    }

    pub fn family(&self) -> &ProfileFamily {
        &self.family
    }

    pub fn length(&self) -> f64 {
        self.orbit_space.length()
    }

    pub fn dim(&self) -> usize {
        self.split.dim_m()
    }

    /// `(g_r, g_r')` without the domain check. Used for endpoint limits.
    pub(crate) fn metric_unchecked(&self, r: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let length = self.length();
        match &self.family {
            ProfileFamily::RoundS3T2 => {
                let (s, c) = r.sin_cos();
                let g = DMatrix::from_diagonal(&DVector::from_vec(vec![c * c, s * s]));
                let gp =
                    DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0 * s * c, 2.0 * s * c]));
                (g, gp)
            }
            ProfileFamily::WarpedTorus(series) | ProfileFamily::BergerCircle(series) => {
                let d = series.len();
                let mut g = DMatrix::zeros(d, d);
                let mut gp = DMatrix::zeros(d, d);
                for (i, s) in series.iter().enumerate() {
                    let e = s.value(r, length).exp();
                    g[(i, i)] = e;
                    gp[(i, i)] = e * s.derivative(r, length, 1);
                }
                (g, gp)
            }
            ProfileFamily::Tabulated(t) => {
                let d = t.dim();
                (
                    TabulatedProfile::eval(&t.gram_splines, d, r),
                    TabulatedProfile::eval(&t.prime_splines, d, r),
                )
            }
        }
    }
}

/// Identification of vertical coefficient slots with the `m0` basis vectors.
/// Frames are `r`-independent with identity monodromy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub n0: usize,
}

impl Frame {
    pub fn of(profile: &MetricProfile) -> Self {
        Self {
            n0: profile.split().dim_m0(),
        }
    }
}
