use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fluidq::scaling::{run_plan, MetricSet};
use fluidq::{ClassLaws, Distribution, Execution, InitialCondition, ScalingPlan, SimConfig};

fn plan(reps: usize) -> ScalingPlan {
    let base = SimConfig {
        classes: vec![ClassLaws {
            interarrival: Distribution::exponential(2.0),
            service: Distribution::exponential(1.0),
            deadline: Distribution::exponential(1.0),
        }],
        horizon: 6.0,
        scale: 1,
        seed: 1,
        initial: InitialCondition::Empty,
    };
    ScalingPlan::with_defaults(base, vec![10, 100, 1000], reps).unwrap()
}

fn scaling_harness(c: &mut Criterion) {
    let mut group = c.benchmark_group("scaling_harness");
    group.sample_size(10);
    for reps in [1, 5] {
        let plan = plan(reps);
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, reps), &plan, |b, plan| {
                b.iter(|| run_plan(plan, MetricSet::ALL, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn simulator(c: &mut Criterion) {
    let mut config = plan(1).base;
    config.scale = 1000;
    c.bench_function("simulate_n1000_T6", |b| b.iter(|| fluidq::simulator::run(&config).unwrap()));
}

criterion_group!(benches, scaling_harness, simulator);
criterion_main!(benches);
