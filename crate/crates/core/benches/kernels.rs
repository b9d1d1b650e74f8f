//! Sequential vs data-parallel RK4 steps on circle grids of growing size.

use std::f64::consts::PI;
use std::hint::black_box;

use coho_euler::coho::{FourierSeries, MetricProfile, OrbitSpace};
use coho_euler::exec::ExecPolicy;
use coho_euler::solver::{step_rk4, Problem, SolverConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn berger_problem(n: usize) -> Problem {
    let profile = MetricProfile::berger(
        OrbitSpace::Circle { length: 1.0 },
        vec![
            FourierSeries::new(0.0, vec![(0.1, 0.0)]),
            FourierSeries::new(2f64.ln(), vec![(0.0, 0.1)]),
            FourierSeries::new(3f64.ln(), vec![]),
        ],
    )
    .expect("berger profile");
    Problem::circle(profile, n, 0.5, |r| {
        let s = (2.0 * PI * r).sin();
        vec![0.05 * s, 0.05 * (4.0 * PI * r).cos(), 0.02]
    })
    .expect("circle problem")
}

fn rk4_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("rk4_step");
    for n in [256, 1024, 4096, 16384] {
        let problem = berger_problem(n);
        // Keep the step under the CFL limit at every size.
        let dt = 0.1 / n as f64;
        for (label, policy) in [
            ("sequential", ExecPolicy::Sequential),
            ("parallel", ExecPolicy::Parallel),
        ] {
            let mut config = SolverConfig::new(dt, 1.0);
            config.policy = policy;
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
                b.iter(|| {
                    step_rk4(black_box(&problem), black_box(problem.initial()), &config).unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, rk4_step);
criterion_main!(benches);
