use fluidq::scaling::{build_scaled, run_plan, uniform_time_grid, MetricSet};
use fluidq::{ClassLaws, Distribution, Execution, InitialCondition, ScalingPlan, SimConfig};

fn base(horizon: f64, initial: InitialCondition) -> SimConfig {
    SimConfig {
        classes: vec![ClassLaws {
            interarrival: Distribution::exponential(2.0),
            service: Distribution::exponential(1.0),
            deadline: Distribution::exponential(1.0),
        }],
        horizon,
        scale: 1,
        seed: 99,
        initial,
    }
}

#[test]
fn scaled_laws() {
    let b = base(1.0, InitialCondition::Empty);
    let s = build_scaled(&b, 10);
    assert_eq!(s.interarrival_law(0), Distribution::exponential(20.0));
    assert_eq!(s.service_law(0), Distribution::exponential(10.0));
    assert_eq!(s.deadline_law(0), &Distribution::exponential(1.0));
    for n in [1, 7, 10, 1000, 123_456] {
        assert_eq!(build_scaled(&b, n).rho(), b.rho());
    }
}

#[test]
fn time_grid_covers_horizon() {
    let g = uniform_time_grid(6.0, 0.1);
    assert_eq!(g.len(), 61);
    assert_eq!(g[0], 0.0);
    assert_eq!(*g.last().unwrap(), 6.0);
    assert_eq!(uniform_time_grid(0.25, 0.1).len(), 4);
}

#[test]
fn fluid_values_come_from_the_fluid_model_alone() {
    let mut plan = ScalingPlan::with_defaults(base(2.0, InitialCondition::Empty), vec![5, 50], 2).unwrap();
    plan.time_grid = vec![0.0, 0.5, 1.0, 2.0];
    let report = run_plan(&plan, MetricSet::ALL, Execution::default()).unwrap();
    let fluid = plan.fluid_solution().unwrap();
    let input = fluid.input();
    for row in &report.rows {
        let t = row.t;
        let expected = match row.metric.as_str() {
            "workload" => fluid.workload(t).unwrap(),
            "idle" | "rect_measure" => 0.0,
            "queue_length" => fluid.queue_length(0, t).unwrap(),
            "nonabandoning" => fluid.nonabandoning(0, t).unwrap(),
            "abandoning" => fluid.abandoning(0, t).unwrap(),
            m if m.starts_with("age_count:u=") => fluid.age_count(0, t, m[12..].parse().unwrap()).unwrap(),
            m if m.starts_with("A_tail:c=") || m.starts_with("V_tail:c=") => {
                input.residual_deadline_limit(0, t, m[9..].parse().unwrap()).unwrap()
            }
            _ => continue,
        };
        assert_eq!(row.fluid_value.to_bits(), expected.to_bits(), "{} at t = {t}", row.metric);
    }
}

#[test]
fn reports_are_reproducible() {
    let plan = ScalingPlan::with_defaults(base(1.5, InitialCondition::Empty), vec![10, 40], 3).unwrap();
    let a = run_plan(&plan, MetricSet::ALL, Execution::Parallel).unwrap();
    let b = run_plan(&plan, MetricSet::ALL, Execution::Sequential).unwrap();
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    let mut other = plan.clone();
    other.base.seed += 1;
    let c = run_plan(&other, MetricSet::ALL, Execution::Parallel).unwrap();
    assert_ne!(a.rows, c.rows);
}

#[test]
fn residual_deadline_target_and_service_gap() {
    let mut plan = ScalingPlan::with_defaults(base(1.0, InitialCondition::Empty), vec![10, 1000], 5).unwrap();
    plan.time_grid = vec![0.0, 1.0];
    let report = run_plan(&plan, MetricSet { residual_deadlines: true, ..MetricSet::NONE }, Execution::default()).unwrap();
    for row in report.rows.iter().filter(|r| r.t == 0.0) {
        assert_eq!((row.sim_value, row.fluid_value), (0.0, 0.0));
    }
    let target = report.rows.iter().find(|r| r.t == 1.0 && r.metric == "A_tail:c=0").unwrap();
    assert!((target.fluid_value - 2.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);

    // V - A tail gap shrinks as services shrink
    let gap = |n: u64| {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.n == n && r.t == 1.0).collect();
        let mut total = 0.0;
        for a in rows.iter().filter(|r| r.base_metric() == "A_tail") {
            let v_name = a.metric.replacen("A_tail", "V_tail", 1);
            let v = rows.iter().find(|r| r.rep == a.rep && r.metric == v_name).unwrap();
            assert!(v.sim_value >= a.sim_value);
            total += v.sim_value - a.sim_value;
        }
        total
    };
    assert!(gap(1000) < gap(10));
}

#[test]
fn empty_start_errors_shrink_with_n() {
    // R = 5; one inversion across adjacent pairs is tolerated
    let plan = ScalingPlan::with_defaults(base(4.0, InitialCondition::Empty), vec![10, 100, 1000], 5).unwrap();
    let report = run_plan(&plan, MetricSet { workload: true, state: true, ..MetricSet::NONE }, Execution::default()).unwrap();
    for metric in ["workload", "queue_length"] {
        let e: Vec<f64> = plan
            .scales
            .iter()
            .map(|&n| report.summary_for(n, metric).unwrap().mean_sup_error)
            .collect();
        let inversions = e.windows(2).filter(|p| p[1] >= p[0]).count();
        assert!(inversions <= 1, "{metric}: {e:?}");
        assert!(e[2] < e[0], "{metric}: {e:?}");
    }
    for row in report.rows_for("idle") {
        assert!(row.sim_value >= 0.0);
    }
}

#[test]
fn warm_start_tracks_the_fixed_point() {
    let plan = ScalingPlan::with_defaults(base(2.0, InitialCondition::WarmStart { warmup: 8.0 }), vec![2000], 2).unwrap();
    let report = run_plan(&plan, MetricSet { workload: true, state: true, ..MetricSet::NONE }, Execution::default()).unwrap();
    for row in report.rows_for("workload") {
        assert!((row.fluid_value - std::f64::consts::LN_2).abs() < 1e-3);
    }
    for row in report.rows_for("queue_length") {
        assert!((row.fluid_value - 1.0).abs() < 1e-3);
    }
    assert!(report.summary_for(2000, "workload").unwrap().mean_sup_error < 0.15);
}

#[test]
fn corner_probe_is_monotone_in_kappa() {
    let mut plan = ScalingPlan::with_defaults(base(1.0, InitialCondition::WarmStart { warmup: 5.0 }), vec![100], 3).unwrap();
    plan.kappas = vec![0.025, 0.05, 0.1, 0.2, 0.4];
    let report = run_plan(&plan, MetricSet { corner_probe: true, ..MetricSet::NONE }, Execution::default()).unwrap();
    for rep in 0..3 {
        let masses: Vec<f64> = plan
            .kappas
            .iter()
            .map(|k| {
                report
                    .rows
                    .iter()
                    .find(|r| r.rep == rep && r.metric == format!("corner_mass:kappa={k}"))
                    .unwrap()
                    .sim_value
            })
            .collect();
        assert!(masses.windows(2).all(|p| p[0] <= p[1]), "{masses:?}");
    }

    let mut empty = ScalingPlan::with_defaults(base(1.0, InitialCondition::Empty), vec![100], 1).unwrap();
    empty.time_grid = vec![0.0];
    let report = run_plan(&empty, MetricSet { corner_probe: true, ..MetricSet::NONE }, Execution::default()).unwrap();
    assert!(report.rows.iter().all(|r| r.sim_value == 0.0 && r.fluid_value == 0.0));
}
