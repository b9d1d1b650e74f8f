use std::f64::consts::{FRAC_PI_4, PI};

use super::*;
use crate::coho::{EndpointKind, FourierSeries, OrbitSpace};
use crate::solver::{integrate, SolverConfig};

fn flat_circle(dim: usize) -> MetricProfile {
    MetricProfile::warped_torus(
        OrbitSpace::Circle { length: 1.0 },
        vec![FourierSeries::constant(0.0); dim],
    )
    .unwrap()
}

fn sine_fiber() -> MetricProfile {
    MetricProfile::warped_torus(
        OrbitSpace::Circle { length: 1.0 },
        vec![FourierSeries::new(0.0, vec![(0.0, 1.0)])],
    )
    .unwrap()
}

#[test]
fn energy_examples() {
    let p = Problem::circle(flat_circle(2), 32, 0.0, |_| vec![0.0; 2]).unwrap();
    assert_eq!(energy(&p, p.initial()), 0.0);
    let p = Problem::circle(flat_circle(2), 32, 1.0, |_| vec![0.0; 2]).unwrap();
    assert!((energy(&p, p.initial()) - 0.5).abs() < 1e-15);
    // 2E = ∫ cos² r · sin r cos r dr = 1/4 over (0, π/2)
    let p = Problem::interval(MetricProfile::round_s3_t2(), 128, |_| vec![1.0, 0.0]).unwrap();
    assert!((energy(&p, p.initial()) - 0.125).abs() < 1e-9);
}

#[test]
fn speed_examples() {
    let p = Problem::interval(MetricProfile::round_s3_t2(), 16, |_| vec![0.0; 2]).unwrap();
    assert_eq!(pointwise_speed(&p, p.initial(), 3).unwrap(), 0.0);
    assert!(pointwise_speed(&p, p.initial(), 16).is_err());
    // nodes at kπ/34; k = 8.5 is not a node, so use the quarter point on a 33-node grid.
    let (a, b) = (1.5, -0.5);
    let p = Problem::interval(MetricProfile::round_s3_t2(), 33, |_| vec![a, b]).unwrap();
    assert!((p.grid()[16] - FRAC_PI_4).abs() < 1e-15);
    let s = pointwise_speed(&p, p.initial(), 16).unwrap();
    assert!((s - ((a * a + b * b) / 2.0).sqrt()).abs() < 1e-14);
    let p = Problem::circle(flat_circle(1), 16, 2.0, |_| vec![0.0]).unwrap();
    assert_eq!(pointwise_speed(&p, p.initial(), 5).unwrap(), 2.0);
}

#[test]
fn c1_examples() {
    let p = Problem::circle(flat_circle(1), 16, 0.0, |_| vec![0.0]).unwrap();
    assert_eq!(c1_monitor(&p, p.initial()).total, 0.0);

    let p = Problem::interval(MetricProfile::round_s3_t2(), 64, |_| vec![1.0, 2.0]).unwrap();
    let traj = integrate(&p, &SolverConfig::new(0.05, 5.0)).unwrap();
    let c0 = traj.report.rows[0].c1.total;
    assert!(traj
        .report
        .rows
        .iter()
        .all(|r| (r.c1.total - c0).abs() < 1e-10));
    // ‖S v‖_g stays bounded at the collapsing ends.
    assert!(traj.report.rows[0].c1.shape <= 2.0 + 1e-12);

    let p = Problem::circle(flat_circle(1), 256, 1.0, |r| vec![(2.0 * PI * r).sin()]).unwrap();
    let traj = integrate(&p, &SolverConfig::new(1e-3, 1.0)).unwrap();
    // The sup of |∂_r v| is sampled on the grid, so it wobbles with the phase
    // of the translated profile by up to 2π(1 − cos(π Δr)).
    let c0 = traj.report.rows[0].c1.total;
    let wobble = 2.0 * PI * (1.0 - (PI / 256.0).cos());
    assert!(traj
        .report
        .rows
        .iter()
        .all(|r| (r.c1.total - c0).abs() < 1.2 * wobble + 1e-6));
}

#[test]
fn divergence_examples() {
    let p = Problem::interval(MetricProfile::round_s3_t2(), 32, |r| vec![r.cos(), 3.0]).unwrap();
    assert!(divergence_residual(&p, p.initial()) < 1e-10);
    let p = Problem::circle(sine_fiber(), 256, 1.3, |_| vec![0.4]).unwrap();
    assert!(divergence_residual(&p, p.initial()) < 1e-8);
    // h = const on a variable-volume circle is not solenoidal.
    let grid: Vec<f64> = p.grid().to_vec();
    assert!(divergence_residual_of(&sine_fiber(), &grid, |_| 1.0).unwrap() > 0.1);
    let h0 = |r: f64| (-0.5 * (2.0 * PI * r).sin()).exp();
    assert!(divergence_residual_of(&sine_fiber(), &grid, h0).unwrap() < 1e-8);
}

#[test]
fn taylor_examples() {
    let p = Problem::interval(MetricProfile::round_s3_t2(), 64, |_| vec![0.0; 2]).unwrap();
    let fit = endpoint_taylor_fit(&p, p.initial()).unwrap();
    assert!(fit.alpha.iter().chain(&fit.beta).all(|&x| x == 0.0));
    assert_eq!(fit.parity_misfit, 0.0);

    let p = Problem::interval(MetricProfile::round_s3_t2(), 64, |r| vec![r, 1.0]).unwrap();
    assert!(endpoint_taylor_fit(&p, p.initial()).unwrap().parity_misfit > 1e-4);

    let p = Problem::interval(MetricProfile::round_s3_t2(), 64, |r| {
        vec![2.0 + 3.0 * r * r, 1.0]
    })
    .unwrap();
    let fit = endpoint_taylor_fit(&p, p.initial()).unwrap();
    assert!((fit.alpha[0] - 2.0).abs() < 1e-12 && (fit.beta[0] - 3.0).abs() < 1e-9);
    assert!(fit.parity_misfit < 1e-12);

    let traj = integrate(&p, &SolverConfig::new(0.1, 2.0)).unwrap();
    let fits = endpoint_taylor_monitor(&p, traj.snapshots.iter().map(|s| &s.state)).unwrap();
    assert!(fits.iter().all(|f| *f == fits[0]));

    let boundary = MetricProfile::berger(
        OrbitSpace::Interval {
            length: 1.0,
            endpoints: [EndpointKind::Boundary; 2],
        },
        vec![FourierSeries::constant(0.0); 3],
    )
    .unwrap();
    let q = Problem::interval(boundary, 16, |_| vec![0.0; 3]).unwrap();
    assert!(endpoint_taylor_fit(&q, q.initial()).is_err());
}

#[test]
fn steady_run_reports_no_drift() {
    let p = Problem::interval(MetricProfile::round_s3_t2(), 32, |_| vec![1.0, 2.0]).unwrap();
    let traj = integrate(&p, &SolverConfig::new(0.1, 3.0)).unwrap();
    let s = &traj.summary;
    assert_eq!(s.max_energy_drift, 0.0);
    assert_eq!(s.max_speed_drift, 0.0);
    assert!(s.ok(), "{:?}", s.flags);
}

#[test]
fn fault_injection_flags_periodicity_and_energy() {
    let profile = MetricProfile::berger(
        OrbitSpace::Circle { length: 1.0 },
        vec![
            FourierSeries::new(0.0, vec![(0.1, 0.0)]),
            FourierSeries::new(2f64.ln(), vec![(0.0, 0.1)]),
            FourierSeries::new(3f64.ln(), vec![]),
        ],
    )
    .unwrap();
    let p = Problem::circle(profile, 64, 0.5, |r| {
        vec![0.2 * (2.0 * PI * r).sin(), 0.1, 0.0]
    })
    .unwrap();
    let mut cfg = SolverConfig::new(1e-3, 0.5);
    cfg.dcdt_offset = 1.0;
    cfg.halt_on_failure = false;
    let traj = integrate(&p, &cfg).unwrap();
    let flags = &traj.summary.flags;
    assert!(flags.contains(&Flag::PressurePeriodicity), "{flags:?}");
    assert!(flags.contains(&Flag::EnergyDrift), "{flags:?}");
}
