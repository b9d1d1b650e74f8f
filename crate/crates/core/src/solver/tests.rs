use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};

use super::*;
use crate::coho::FourierSeries;
use crate::lie::{reductive_split, LieAlgebraSpec};

fn su2_metric(i: [f64; 3]) -> InvariantMetric {
    let split = reductive_split(&LieAlgebraSpec::su2(), &[]).unwrap();
    InvariantMetric::new(split, DMatrix::from_diagonal(&DVector::from_row_slice(&i))).unwrap()
}

/// Classical Euler top `İ1 ω̇1 = (I2 − I3) ω2 ω3` and cyclic.
fn euler_top(i: [f64; 3], w: [f64; 3]) -> [f64; 3] {
    [
        (i[1] - i[2]) / i[0] * w[1] * w[2],
        (i[2] - i[0]) / i[1] * w[2] * w[0],
        (i[0] - i[1]) / i[2] * w[0] * w[1],
    ]
}

fn flat_circle(dim: usize) -> MetricProfile {
    MetricProfile::warped_torus(
        OrbitSpace::Circle { length: 1.0 },
        vec![FourierSeries::constant(0.0); dim],
    )
    .unwrap()
}

fn berger_constant_interval(i: [f64; 3]) -> MetricProfile {
    MetricProfile::berger(
        OrbitSpace::Interval {
            length: 1.0,
            endpoints: [EndpointKind::Boundary; 2],
        },
        i.iter().map(|x| FourierSeries::constant(x.ln())).collect(),
    )
    .unwrap()
}

fn sine_circle() -> MetricProfile {
    MetricProfile::berger(
        OrbitSpace::Circle { length: 1.0 },
        vec![
            FourierSeries::new(0.0, vec![(0.1, 0.0)]),
            FourierSeries::new(2f64.ln(), vec![(0.0, 0.1)]),
            FourierSeries::new(3f64.ln(), vec![(0.0, 0.0), (0.05, 0.0)]),
        ],
    )
    .unwrap()
}

#[test]
fn homogeneous_rhs_examples() {
    let id = su2_metric([1.0, 1.0, 1.0]);
    let x = DVector::from_vec(vec![0.3, -1.2, 0.7]);
    assert!(homogeneous_rhs(&id, &x).unwrap().amax() < 1e-15);
    let split = reductive_split(&LieAlgebraSpec::abelian(2), &[]).unwrap();
    let flat = InvariantMetric::new(
        split,
        DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 5.0])),
    )
    .unwrap();
    assert_eq!(
        homogeneous_rhs(&flat, &DVector::from_vec(vec![1.0, 2.0]))
            .unwrap()
            .amax(),
        0.0
    );
    let m = su2_metric([1.0, 2.0, 3.0]);
    let rhs = homogeneous_rhs(&m, &DVector::from_vec(vec![0.0, 1.0, 1.0])).unwrap();
    let oracle = euler_top([1.0, 2.0, 3.0], [0.0, 1.0, 1.0]);
    for k in 0..3 {
        assert!((rhs[k] - oracle[k]).abs() < 1e-14, "{rhs} vs {oracle:?}");
    }
}

#[test]
fn homogeneous_rhs_matches_euler_top_at_random_states() {
    let inertia = [1.3, 2.1, 0.7];
    let m = su2_metric(inertia);
    for k in 0..20 {
        let w = [
            (k as f64).sin(),
            (1.7 * k as f64).cos(),
            0.3 * k as f64 - 2.0,
        ];
        let rhs = homogeneous_rhs(&m, &DVector::from_row_slice(&w)).unwrap();
        let oracle = euler_top(inertia, w);
        for i in 0..3 {
            assert!((rhs[i] - oracle[i]).abs() < 1e-13);
        }
    }
}

#[test]
fn interval_rhs_examples() {
    let p = Problem::interval(MetricProfile::round_s3_t2(), 32, |r| {
        vec![r.cos() + 2.0, r * r]
    })
    .unwrap();
    assert!(interval_rhs(&p, p.initial())
        .unwrap()
        .iter()
        .all(|&x| x == 0.0));

    let q = Problem::interval(berger_constant_interval([1.0, 2.0, 3.0]), 16, |_| {
        vec![0.0; 3]
    })
    .unwrap();
    assert!(interval_rhs(&q, q.initial())
        .unwrap()
        .iter()
        .all(|&x| x == 0.0));

    let q = Problem::interval(berger_constant_interval([1.0, 2.0, 3.0]), 16, |_| {
        vec![0.0, 1.0, 1.0]
    })
    .unwrap();
    let dv = interval_rhs(&q, q.initial()).unwrap();
    let hom = homogeneous_rhs(
        &su2_metric([1.0, 2.0, 3.0]),
        &DVector::from_vec(vec![0.0, 1.0, 1.0]),
    )
    .unwrap();
    for j in 0..16 {
        for k in 0..3 {
            assert!((dv[3 * j + k] - hom[k]).abs() < 1e-14);
        }
    }
    assert!(circle_rhs(&q, q.initial()).is_err());
}

#[test]
fn interval_grid_layout() {
    let p = Problem::interval(MetricProfile::round_s3_t2(), 128, |_| vec![1.0, 2.0]).unwrap();
    let g = p.grid();
    assert_eq!(g.len(), 128);
    let dr = FRAC_PI_2 / 129.0;
    assert!((g[0] - dr).abs() < 1e-15);
    assert!((g[127] - 128.0 * dr).abs() < 1e-14);
    let q = Problem::interval(berger_constant_interval([1.0, 1.0, 1.0]), 11, |_| {
        vec![0.0; 3]
    })
    .unwrap();
    assert_eq!(q.grid()[0], 0.0);
    assert_eq!(q.grid()[10], 1.0);
    assert!(Problem::interval(MetricProfile::round_s3_t2(), 4, |_| vec![0.0; 2]).is_err());
}

#[test]
fn circle_rhs_examples() {
    let p = Problem::circle(sine_circle(), 64, 0.7, |_| vec![0.0; 3]).unwrap();
    let (dc, dv) = circle_rhs(&p, p.initial()).unwrap();
    assert_eq!(dc, 0.0);
    assert!(dv.iter().all(|&x| x == 0.0));

    let p = Problem::circle(flat_circle(3), 32, 1.3, |_| vec![0.5, -1.0, 2.0]).unwrap();
    let (dc, dv) = circle_rhs(&p, p.initial()).unwrap();
    assert_eq!(dc, 0.0);
    assert!(dv.iter().all(|x| x.abs() < 1e-12));

    let n = 256;
    let p = Problem::circle(flat_circle(1), n, 1.0, |r| vec![(2.0 * PI * r).sin()]).unwrap();
    let (dc, dv) = circle_rhs(&p, p.initial()).unwrap();
    assert_eq!(dc, 0.0);
    let dr = 1.0 / n as f64;
    let bound = (2.0 * PI).powi(5) * dr.powi(4) / 30.0 * 1.01;
    for (j, d) in dv.iter().enumerate() {
        let exact = -2.0 * PI * (2.0 * PI * j as f64 * dr).cos();
        assert!((d - exact).abs() < bound);
    }
}

#[test]
fn circle_rejects_bad_grids() {
    assert!(matches!(
        Problem::circle(flat_circle(1), 15, 1.0, |_| vec![0.0]),
        Err(Error::Validation(_))
    ));
    assert!(matches!(
        Problem::circle(flat_circle(1), 8, 1.0, |_| vec![0.0]),
        Err(Error::Validation(_))
    ));
    assert!(Problem::circle(MetricProfile::round_s3_t2(), 16, 1.0, |_| vec![0.0; 2]).is_err());
}

#[test]
fn pressure_examples() {
    let (a, b) = (1.0, 2.0);
    let p = Problem::interval(MetricProfile::round_s3_t2(), 128, |_| vec![a, b]).unwrap();
    let f = pressure_reconstruct(&p, p.initial(), 0.0).unwrap();
    let exact = |r: f64| -(a * a - b * b) * r.sin().powi(2) / 2.0;
    let r0 = p.grid()[0];
    assert_eq!(f.p[0], 0.0);
    for (pj, r) in f.p.iter().zip(p.grid()) {
        assert!((pj - (exact(*r) - exact(r0))).abs() < 1e-8);
    }
    let p = Problem::interval(MetricProfile::round_s3_t2(), 64, |_| vec![1.5, 1.5]).unwrap();
    let f = pressure_reconstruct(&p, p.initial(), 0.0).unwrap();
    assert!(f.p.iter().all(|x| x.abs() < 1e-15));

    let c = 1.7;
    let p = Problem::circle(sine_circle(), 256, c, |_| vec![0.0; 3]).unwrap();
    let f = pressure_reconstruct(&p, p.initial(), 0.0).unwrap();
    let h00 = p.h0_at(0);
    for (j, pj) in f.p.iter().enumerate() {
        let h = p.h0_at(j);
        let e = (pj + c * c * (h * h - h00 * h00) / 2.0).abs();
        assert!(e < 1e-8, "j {j} err {e:e}");
    }
    assert!(f.periodicity_residual < 1e-12);
}

#[test]
fn pressure_periodicity_detects_wrong_dcdt() {
    let p = Problem::circle(sine_circle(), 64, 0.5, |r| {
        vec![0.2 * (2.0 * PI * r).cos(), 0.1, 0.0]
    })
    .unwrap();
    let (dc, _) = circle_rhs(&p, p.initial()).unwrap();
    assert!(
        pressure_reconstruct(&p, p.initial(), dc)
            .unwrap()
            .periodicity_residual
            < 1e-12
    );
    assert!(
        pressure_reconstruct(&p, p.initial(), dc + 1.0)
            .unwrap()
            .periodicity_residual
            > 1e-2
    );
}

#[test]
fn rk4_leaves_steady_states_alone() {
    let p = Problem::interval(MetricProfile::round_s3_t2(), 16, |_| vec![1.0, 2.0]).unwrap();
    let cfg = SolverConfig::new(0.01, 1.0);
    let s = step_rk4(&p, p.initial(), &cfg).unwrap();
    assert_eq!(s.v, p.initial().v);
    assert_eq!(s.t, 0.01);
}

fn rigid_body_error(dt: f64) -> f64 {
    let x0 = [1.0, 1.0, 1.0].map(|x: f64| x / 6f64.sqrt());
    let p = Problem::homogeneous(su2_metric([1.0, 2.0, 3.0]), &x0).unwrap();
    let run = |dt: f64| {
        let cfg = SolverConfig::new(dt, 2.0);
        let mut s = p.initial().clone();
        for _ in 0..cfg.steps() {
            s = step_rk4(&p, &s, &cfg).unwrap();
        }
        s.v
    };
    let reference = run(dt / 8.0);
    run(dt)
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[test]
fn rk4_is_fourth_order_on_rigid_body() {
    let ratio = rigid_body_error(0.1) / rigid_body_error(0.05);
    assert!(ratio > 14.0 && ratio < 18.5, "ratio {ratio}");
}

#[test]
fn transport_returns_after_one_period() {
    let p = Problem::circle(flat_circle(1), 256, 1.0, |r| vec![(2.0 * PI * r).sin()]).unwrap();
    let traj = integrate(&p, &SolverConfig::new(1e-3, 1.0)).unwrap();
    assert!(traj.error.is_none());
    let s = traj.final_state();
    let err =
        s.v.iter()
            .zip(&p.initial().v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
    assert!(err < 1e-5, "err {err}");
    assert_eq!(s.c, 1.0);
}

#[test]
fn integrate_examples() {
    let p = Problem::interval(MetricProfile::round_s3_t2(), 32, |_| vec![1.0, 2.0]).unwrap();
    let traj = integrate(&p, &SolverConfig::new(1e-2, 10.0)).unwrap();
    assert!(traj.error.is_none());
    assert!((traj.final_state().t - 10.0).abs() < 1e-12);
    let d = traj
        .final_state()
        .v
        .iter()
        .zip(&p.initial().v)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(d < 1e-10);

    let p = Problem::circle(flat_circle(3), 32, 3.0, |_| vec![0.0; 3]).unwrap();
    let traj = integrate(&p, &SolverConfig::new(1e-3, 5.0)).unwrap();
    assert_eq!(traj.final_state().c, 3.0);
    assert!(traj.summary.ok(), "{:?}", traj.summary.flags);
}

#[test]
fn cfl_violation_is_a_numerical_failure() {
    let p = Problem::circle(flat_circle(1), 32, 100.0, |_| vec![0.0]).unwrap();
    let err = step_rk4(&p, p.initial(), &SolverConfig::new(0.01, 1.0)).unwrap_err();
    assert!(matches!(err, Error::Numerical { .. }));
    assert!(err.to_string().contains("0.01"));
    let traj = integrate(&p, &SolverConfig::new(0.01, 1.0)).unwrap();
    assert_eq!(traj.report.failure.as_ref().unwrap().kind, "cfl");
    assert_eq!(traj.snapshots.len(), 1);
}

#[test]
fn injected_dcdt_offset_halts_on_periodicity() {
    let p = Problem::circle(sine_circle(), 32, 0.5, |r| {
        vec![0.1 * (2.0 * PI * r).sin(), 0.0, 0.1]
    })
    .unwrap();
    let mut cfg = SolverConfig::new(1e-3, 0.1);
    cfg.dcdt_offset = 1.0;
    let traj = integrate(&p, &cfg).unwrap();
    assert!(matches!(traj.error, Some(Error::Numerical { .. })));
    assert_eq!(
        traj.report.failure.as_ref().unwrap().kind,
        "pressure_periodicity"
    );
}

#[test]
fn parallel_and_sequential_runs_agree_bitwise() {
    let p = Problem::circle(sine_circle(), 256, 0.5, |r| {
        vec![0.2 * (2.0 * PI * r).sin(), 0.1 * (4.0 * PI * r).cos(), 0.05]
    })
    .unwrap();
    let mut cfg = SolverConfig::new(1e-3, 0.05);
    cfg.policy = ExecPolicy::Sequential;
    let a = integrate(&p, &cfg).unwrap();
    cfg.policy = ExecPolicy::Parallel;
    let b = crate::exec::with_workers(Some(4), || integrate(&p, &cfg).unwrap());
    assert_eq!(a.final_state(), b.final_state());
    assert_eq!(a.report.rows, b.report.rows);
}
