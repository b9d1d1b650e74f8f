//! Geometry of `g = dr² + g_r`: shape operator, mean curvature, the
//! divergence-free horizontal profile `h0`, and endpoint checks.
//!
//! Conventions. For an `r`-independent invariant frame, `∂_r g_r = -2 g_r S_r`,
//! so `S_r = -½ g_r⁻¹ g_r'`. The mean curvature is `H = tr S_r`, which equals
//! `-d/dr ln vol(r)` with `vol = sqrt(det g_r)`. With this convention the
//! divergence of `h ∂_r` is `h' - H h`, so the solenoidal profile on a circle
//! is `h0(r) = vol(L/2) / vol(r)`.

mod profile;
mod spline;

pub use profile::{
    EndpointKind, FourierSeries, Frame, MetricProfile, OrbitSpace, ProfileFamily, TabulatedProfile,
};
pub use spline::CubicSpline;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec::{map_indices, ExecPolicy};
use crate::homogeneous::relative_volume;
use crate::numerics::central_derivative;
use crate::report::ValidationReport;

/// Probe count for profile validation.
pub const PROBE_POINTS: usize = 512;
/// Finite-difference step for the trace identity.
pub const FD_STEP: f64 = 1e-5;
/// Threshold for the trace identity `tr S + (ln vol)' = 0`.
pub const TRACE_IDENTITY_TOL: f64 = 1e-6;
/// Gram-symmetry threshold for `S_r`.
pub const SHAPE_SYMMETRY_TOL: f64 = 1e-12;
/// Periodicity threshold on the circle (values and first derivatives).
pub const PERIODICITY_TOL: f64 = 1e-10;
/// Relative volume must fall below this near a singular endpoint.
pub const COLLAPSE_TOL: f64 = 1e-6;

/// `(g_r, g_r')` at `r`.
pub fn metric_at(profile: &MetricProfile, r: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let r = profile.orbit_space().admit(r)?;
    Ok(profile.metric_unchecked(r))
}

fn shape_from(gram: &DMatrix<f64>, gram_prime: &DMatrix<f64>, r: f64) -> Result<DMatrix<f64>> {
    let chol = gram.clone().cholesky().ok_or_else(|| Error::Domain {
        r,
        detail: "orbit metric is not positive definite".into(),
    })?;
    Ok(chol.solve(gram_prime) * -0.5)
}

/// `S_r = -½ g_r⁻¹ g_r'` on `m`-coordinates.
pub fn shape_operator(profile: &MetricProfile, r: f64) -> Result<DMatrix<f64>> {
    let (g, gp) = metric_at(profile, r)?;
    shape_from(&g, &gp, r)
}

/// `H(r) = tr S_r`.
pub fn mean_curvature(profile: &MetricProfile, r: f64) -> Result<f64> {
    Ok(shape_operator(profile, r)?.trace())
}

/// `sqrt(det g_r)`, relative to the reference density of the `m` basis.
pub fn relative_orbit_volume(profile: &MetricProfile, r: f64) -> Result<f64> {
    let (g, _) = metric_at(profile, r)?;
    relative_volume(&g).map_err(|_| Error::Domain {
        r,
        detail: "orbit metric is not positive definite".into(),
    })
}

fn require_periodic(profile: &MetricProfile) -> Result<()> {
    if !profile.orbit_space().is_circle() {
        return Err(Error::unsupported(
            "h0 exists only on a circle orbit space; on an interval the horizontal part vanishes",
        ));
    }
    let resid = periodicity_residual(profile);
    if !(resid < PERIODICITY_TOL) {
        return Err(Error::validation(format!(
            "metric profile is not periodic (residual {resid:.3e})"
        )));
    }
    Ok(())
}

/// `h0(r) = vol(L/2) / vol(r)`.
pub fn h0_closed_form(profile: &MetricProfile, r: f64) -> Result<f64> {
    require_periodic(profile)?;
    let mid = relative_orbit_volume(profile, 0.5 * profile.length())?;
    Ok(mid / relative_orbit_volume(profile, r)?)
}

/// Solves `h0' = H h0` with `h0(L/2) = 1` by RK4 from the midpoint out to each
/// requested grid value.
pub fn h0_profile(profile: &MetricProfile, grid: &[f64]) -> Result<Vec<f64>> {
    require_periodic(profile)?;
    let length = profile.length();
    let mid = 0.5 * length;
    let max_step = length / 4096.0;
    let solve = |r_target: f64| -> Result<f64> {
        let span = r_target - mid;
        let steps = ((span.abs() / max_step).ceil() as usize).max(1);
        let dr = span / steps as f64;
        let mut r = mid;
        let mut h = 1.0;
        for _ in 0..steps {
            let k1 = mean_curvature(profile, r)? * h;
            let k2 = mean_curvature(profile, r + 0.5 * dr)? * (h + 0.5 * dr * k1);
            let k3 = mean_curvature(profile, r + 0.5 * dr)? * (h + 0.5 * dr * k2);
            let k4 = mean_curvature(profile, r + dr)? * (h + dr * k3);
            h += dr / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            r += dr;
        }
        Ok(h)
    };
    map_indices(ExecPolicy::default(), grid.len(), |j| solve(grid[j]))
        .into_iter()
        .collect()
}

/// Largest mismatch of `g` and `g'` between `r = 0` and `r = L`.
pub fn periodicity_residual(profile: &MetricProfile) -> f64 {
    let (g0, gp0) = profile.metric_unchecked(0.0);
    let (g1, gp1) = profile.metric_unchecked(profile.length());
    (g0 - g1).amax().max((gp0 - gp1).amax())
}

/// `tr S_r + d/dr ln sqrt(det g_r)` with a five-point central difference of
/// step [`FD_STEP`], scaled by `max(1, |H|)`.
pub fn trace_identity_residual(profile: &MetricProfile, r: f64) -> Result<f64> {
    let h = mean_curvature(profile, r)?;
    let ln_vol = |x: f64| {
        let (g, _) = profile.metric_unchecked(x);
        0.5 * g.determinant().ln()
    };
    let d = central_derivative(ln_vol, r, FD_STEP);
    Ok((h + d).abs() / h.abs().max(1.0))
}

/// Probe abscissae strictly inside the orbit space.
pub fn probe_grid(profile: &MetricProfile, n: usize) -> Vec<f64> {
    let length = profile.length();
    (0..n)
        .map(|k| length * (k as f64 + 0.5) / n as f64)
        .collect()
}

/// Reconstructs `(h, v)` at `r` from the reduced amplitudes.
pub fn reconstruct_velocity(
    c: f64,
    v: &[f64],
    profile: &MetricProfile,
    r: f64,
) -> Result<(f64, Vec<f64>)> {
    let r = profile.orbit_space().admit(r)?;
    let h = if profile.orbit_space().is_circle() {
        c * h0_closed_form(profile, r)?
    } else {
        0.0
    };
    Ok((h, v.to_vec()))
}

/// `h² + vᵀ g_r v`.
pub fn speed_squared(profile: &MetricProfile, h: f64, v: &[f64], r: f64) -> Result<f64> {
    let (g, _) = metric_at(profile, r)?;
    let vv = DVector::from_column_slice(v);
    Ok(h * h + vv.dot(&(&g * &vv)))
}

/// Positivity on the probe grid, circle periodicity, volume collapse at
/// singular endpoints, the trace identity, and endpoint parity for the
/// round `S³` family.
pub fn validate_profile(profile: &MetricProfile) -> ValidationReport {
    let mut report = ValidationReport::new();
    let probes = probe_grid(profile, PROBE_POINTS);

    if let ProfileFamily::Tabulated(t) = profile.family() {
        let bad = t
            .gram
            .iter()
            .zip(&t.r)
            .filter(|(g, &r)| {
                !is_spd(g) && !profile.orbit_space().singular_endpoints().contains(&r)
            })
            .map(|(_, r)| *r)
            .next();
        report.record_outcome(
            "spd_samples",
            bad.is_none(),
            bad.map(|r| format!("gram sample is not positive definite at r = {r}"))
                .unwrap_or_default(),
        );
    }

    let spd: Vec<bool> = map_indices(ExecPolicy::default(), probes.len(), |k| {
        is_spd(&profile.metric_unchecked(probes[k]).0)
    });
    let first_bad = spd.iter().position(|ok| !ok).map(|k| probes[k]);
    report.record_outcome(
        "spd_probe",
        first_bad.is_none(),
        first_bad
            .map(|r| format!("gram is not positive definite at r = {r}"))
            .unwrap_or_else(|| format!("{} probes", probes.len())),
    );

    if profile.orbit_space().is_circle() {
        report.record(
            "periodicity",
            periodicity_residual(profile),
            PERIODICITY_TOL,
        );
    }

    for end in profile.orbit_space().singular_endpoints() {
        let (passed, detail) = collapse_check(profile, end);
        report.record_outcome(format!("volume_collapse@{end}"), passed, detail);
    }

    if first_bad.is_none() {
        let residuals: Vec<f64> = map_indices(ExecPolicy::default(), probes.len(), |k| {
            trace_identity_residual(profile, probes[k]).unwrap_or(f64::NAN)
        });
        let worst =
            residuals
                .iter()
                .cloned()
                .fold(0.0_f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) });
        report
            .record("trace_identity", worst, TRACE_IDENTITY_TOL)
            .with_detail(
                "H = tr S = -d/dr ln vol; the factor-1/2 variant of this identity does not hold",
            );

        let halved: f64 = probes
            .iter()
            .map(|&r| {
                let h = mean_curvature(profile, r).unwrap_or(f64::NAN);
                let ln_vol = |x: f64| 0.5 * profile.metric_unchecked(x).0.determinant().ln();
                (h + 0.5 * central_derivative(ln_vol, r, FD_STEP)).abs()
            })
            .fold(0.0, f64::max);
        report
            .record_outcome("mean_curvature_convention", true, "")
            .with_detail(format!(
                "max |tr S + 1/2 (ln vol)'| = {halved:.3e} (nonzero unless H vanishes); solenoidal profile uses h0 = vol(L/2)/vol(r)"
            ));
    }

    if matches!(profile.family(), ProfileFamily::RoundS3T2) {
        for end in profile.orbit_space().singular_endpoints() {
            let (passed, detail) = parity_check(profile, end);
            report.record_outcome(format!("endpoint_parity@{end}"), passed, detail);
        }
    }
    report
}

fn is_spd(g: &DMatrix<f64>) -> bool {
    g.iter().all(|x| x.is_finite())
        && (g - g.transpose()).amax() <= 1e-12 * g.amax().max(1.0)
        && g.clone().cholesky().is_some()
}

/// Relative volume must decay monotonically toward the endpoint and fall
/// below [`COLLAPSE_TOL`].
fn collapse_check(profile: &MetricProfile, end: f64) -> (bool, String) {
    let length = profile.length();
    let inward = if end == 0.0 { 1.0 } else { -1.0 };
    let vols: Vec<f64> = (2..=8)
        .map(|k| {
            let r = end + inward * length * 10f64.powi(-k);
            let det = profile.metric_unchecked(r).0.determinant();
            det.max(0.0).sqrt()
        })
        .collect();
    let monotone = vols.windows(2).all(|w| w[1] <= w[0]);
    let last = *vols.last().unwrap();
    (
        monotone && last < COLLAPSE_TOL,
        format!(
            "vol at distance {:.0e}: {last:.3e}, monotone: {monotone}",
            length * 1e-8
        ),
    )
}

/// Near a singular endpoint at distance `s`, collapsing diagonal entries must
/// behave like `κ s²` and the others must be even (`g' = O(s)`).
fn parity_check(profile: &MetricProfile, end: f64) -> (bool, String) {
    let inward = if end == 0.0 { 1.0 } else { -1.0 };
    let s = 1e-3;
    let (g1, gp1) = profile.metric_unchecked(end + inward * s);
    let (g2, _) = profile.metric_unchecked(end + inward * 2.0 * s);
    let (g_end, _) = profile.metric_unchecked(end);
    let mut ok = true;
    let mut notes = Vec::new();
    for i in 0..g1.nrows() {
        if g_end[(i, i)].abs() < 1e-12 {
            let k1 = g1[(i, i)] / (s * s);
            let k2 = g2[(i, i)] / (4.0 * s * s);
            let good = k1 > 0.0 && (k1 - k2).abs() <= 1e-4 * k1;
            ok &= good;
            notes.push(format!("g{i}{i} ~ {k1:.6} s^2"));
        } else {
            let slope = (gp1[(i, i)] * inward).abs();
            let good = slope <= 10.0 * s * g_end[(i, i)].abs().max(1.0);
            ok &= good;
            notes.push(format!("g{i}{i}' = {:.3e}", gp1[(i, i)]));
        }
    }
    (ok, notes.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

    fn circle(length: f64) -> OrbitSpace {
        OrbitSpace::Circle { length }
    }

    fn sine_fiber() -> MetricProfile {
        // f(r)^2 = exp(sin 2πr), L = 1
        MetricProfile::warped_torus(circle(1.0), vec![FourierSeries::new(0.0, vec![(0.0, 1.0)])])
            .unwrap()
    }

    #[test]
    fn round_s3_metric_at_quarter_turn() {
        let p = MetricProfile::round_s3_t2();
        let (g, gp) = metric_at(&p, FRAC_PI_4).unwrap();
        assert!((g - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
        assert!((gp - DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0]))).amax() < 1e-15);
        assert!(matches!(metric_at(&p, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(
            metric_at(&p, FRAC_PI_2),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn constant_and_sine_profiles() {
        let flat = MetricProfile::warped_torus(circle(1.0), vec![FourierSeries::constant(0.0); 2])
            .unwrap();
        let (g, gp) = metric_at(&flat, 0.37).unwrap();
        assert_eq!(g, DMatrix::identity(2, 2));
        assert_eq!(gp, DMatrix::zeros(2, 2));
        let p = sine_fiber();
        let (g, gp) = metric_at(&p, 0.0).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((gp[(0, 0)] - 2.0 * PI).abs() < 1e-14);
        // circle coordinates wrap
        let (g2, _) = metric_at(&p, 1.25).unwrap();
        assert!((g2[(0, 0)] - 1f64.exp()).abs() < 1e-13);
    }

    #[test]
    fn shape_operator_examples() {
        let p = MetricProfile::round_s3_t2();
        let s = shape_operator(&p, FRAC_PI_4).unwrap();
        assert!((s - DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))).amax() < 1e-15);
        let flat =
            MetricProfile::warped_torus(circle(1.0), vec![FourierSeries::constant(0.3)]).unwrap();
        assert_eq!(shape_operator(&flat, 0.2).unwrap(), DMatrix::zeros(1, 1));
        // f^2 = e^{2r}: a one-mode series cannot express 2r, so use tabulated data.
        let r: Vec<f64> = (0..=40).map(|k| k as f64 * 0.025).collect();
        let g: Vec<_> = r
            .iter()
            .map(|x| DMatrix::from_element(1, 1, (2.0 * x).exp()))
            .collect();
        let gp: Vec<_> = r
            .iter()
            .map(|x| DMatrix::from_element(1, 1, 2.0 * (2.0 * x).exp()))
            .collect();
        let split =
            crate::lie::reductive_split(&crate::lie::LieAlgebraSpec::abelian(1), &[]).unwrap();
        let tab = MetricProfile::new(
            split,
            OrbitSpace::Interval {
                length: 1.0,
                endpoints: [EndpointKind::Boundary; 2],
            },
            ProfileFamily::Tabulated(TabulatedProfile::new(r, g, gp, false).unwrap()),
        )
        .unwrap();
        let s = shape_operator(&tab, 0.5).unwrap();
        assert!((s[(0, 0)] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn mean_curvature_examples() {
        let p = MetricProfile::round_s3_t2();
        assert!(mean_curvature(&p, FRAC_PI_4).unwrap().abs() < 1e-15);
        let expected = 1.0 / 3f64.sqrt() - 3f64.sqrt();
        assert!((mean_curvature(&p, FRAC_PI_6).unwrap() - expected).abs() < 1e-14);
        assert!((expected + 2.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn h0_examples() {
        let flat = MetricProfile::warped_torus(circle(1.0), vec![FourierSeries::constant(0.0); 3])
            .unwrap();
        let grid: Vec<f64> = (0..16).map(|j| j as f64 / 16.0).collect();
        for h in h0_profile(&flat, &grid).unwrap() {
            assert!((h - 1.0).abs() < 1e-15);
        }
        let p = sine_fiber();
        let hs = h0_profile(&p, &grid).unwrap();
        for (h, r) in hs.iter().zip(&grid) {
            let exact = (-0.5 * (2.0 * PI * r).sin()).exp();
            assert!((h - exact).abs() / exact < 1e-8);
            assert!((h0_closed_form(&p, *r).unwrap() - exact).abs() < 1e-14);
        }
        assert!((h0_profile(&p, &[0.5]).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!(matches!(
            h0_profile(&MetricProfile::round_s3_t2(), &[0.3]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn round_s3_validates() {
        let r = validate_profile(&MetricProfile::round_s3_t2());
        assert!(r.passed(), "{r}");
        assert!(r.get("volume_collapse@0").unwrap().passed);
        assert!(r.get("endpoint_parity@0").is_some());
    }

    #[test]
    fn fourier_circle_validates() {
        let r = validate_profile(&sine_fiber());
        assert!(r.passed(), "{r}");
        assert!(r.get("periodicity").unwrap().residual < 1e-12);
    }

    #[test]
    fn tabulated_non_collapsing_singular_endpoint_fails() {
        let r: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
        let g: Vec<_> = r.iter().map(|_| DMatrix::identity(1, 1)).collect();
        let gp: Vec<_> = r.iter().map(|_| DMatrix::zeros(1, 1)).collect();
        let split =
            crate::lie::reductive_split(&crate::lie::LieAlgebraSpec::abelian(1), &[]).unwrap();
        let p = MetricProfile::new(
            split,
            OrbitSpace::Interval {
                length: 1.0,
                endpoints: [EndpointKind::Singular, EndpointKind::Boundary],
            },
            ProfileFamily::Tabulated(TabulatedProfile::new(r, g, gp, false).unwrap()),
        )
        .unwrap();
        let report = validate_profile(&p);
        assert!(!report.passed());
        assert!(!report.get("volume_collapse@0").unwrap().passed);
    }

    #[test]
    fn non_spd_sample_is_named() {
        let r: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let g: Vec<_> = r
            .iter()
            .map(|&x| DMatrix::identity(1, 1) * if (x - 0.3).abs() < 1e-9 { -1.0 } else { 1.0 })
            .collect();
        let gp: Vec<_> = r.iter().map(|_| DMatrix::zeros(1, 1)).collect();
        let split =
            crate::lie::reductive_split(&crate::lie::LieAlgebraSpec::abelian(1), &[]).unwrap();
        let p = MetricProfile::new(
            split,
            OrbitSpace::Interval {
                length: 1.0,
                endpoints: [EndpointKind::Boundary; 2],
            },
            ProfileFamily::Tabulated(TabulatedProfile::new(r, g, gp, false).unwrap()),
        )
        .unwrap();
        let report = validate_profile(&p);
        let c = report.get("spd_samples").unwrap();
        assert!(!c.passed);
        assert!(c.detail.contains("0.3"), "{}", c.detail);
    }

    #[test]
    fn reconstruct_examples() {
        let p = MetricProfile::round_s3_t2();
        let (h, v) = reconstruct_velocity(5.0, &[1.0, 2.0], &p, 0.4).unwrap();
        assert_eq!(h, 0.0);
        assert_eq!(v, vec![1.0, 2.0]);
        let r = 0.4_f64;
        let s2 = speed_squared(&p, h, &[3.0, -2.0], r).unwrap();
        assert!((s2 - (9.0 * r.cos().powi(2) + 4.0 * r.sin().powi(2))).abs() < 1e-14);
        let flat = MetricProfile::warped_torus(circle(1.0), vec![FourierSeries::constant(0.0); 2])
            .unwrap();
        for r in [0.0, 0.3, 0.99] {
            assert!(
                (reconstruct_velocity(2.0, &[0.0, 0.0], &flat, r).unwrap().0 - 2.0).abs() < 1e-15
            );
        }
    }

    #[test]
    fn coordinate_divergence_oracle_fixes_convention() {
        // dr² + f(r)² dθ²: div(h ∂r) = h' + (f'/f) h.
        let p = sine_fiber();
        let f = |r: f64| (0.5 * (2.0 * PI * r).sin()).exp();
        let fp = |r: f64| f(r) * 0.5 * 2.0 * PI * (2.0 * PI * r).cos();
        let h = |r: f64| (3.0 * r).cos() + 2.0;
        let hp = |r: f64| -3.0 * (3.0 * r).sin();
        for r in [0.05, 0.3, 0.71] {
            let oracle = hp(r) + fp(r) / f(r) * h(r);
            let module = hp(r) - mean_curvature(&p, r).unwrap() * h(r);
            assert!((oracle - module).abs() < 1e-13);
        }
    }

    fn berger_strategy() -> impl Strategy<Value = (MetricProfile, f64)> {
        (
            proptest::collection::vec((-0.3..0.3f64, -0.3..0.3f64, -0.3..0.3f64), 3),
            0.0..1.0f64,
        )
            .prop_map(|(coef, r)| {
                let series = coef
                    .into_iter()
                    .map(|(a0, a1, b2)| FourierSeries::new(a0, vec![(a1, 0.0), (0.0, b2)]))
                    .collect();
                (
                    MetricProfile::berger(OrbitSpace::Circle { length: 1.0 }, series).unwrap(),
                    r,
                )
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn shape_operator_is_gram_symmetric((p, r) in berger_strategy()) {
            let (g, _) = metric_at(&p, r).unwrap();
            let s = shape_operator(&p, r).unwrap();
            let gs = &g * &s;
            prop_assert!((&gs - gs.transpose()).amax() < SHAPE_SYMMETRY_TOL);
        }

        #[test]
        fn trace_identity_holds((p, r) in berger_strategy()) {
            prop_assert!(trace_identity_residual(&p, r).unwrap() < TRACE_IDENTITY_TOL);
        }
    }
}
