use fluidq::measures::{Atom2, ExitCause};
use fluidq::simulator::run;
use fluidq::{ClassLaws, Distribution, InitialCondition, SimConfig, SimTrace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn hand_trace_config() -> SimConfig {
    SimConfig {
        classes: vec![ClassLaws {
            interarrival: Distribution::replay(vec![1.0, 1.0, 1.0, 100.0]),
            service: Distribution::replay(vec![5.0, 5.0, 5.0]),
            deadline: Distribution::replay(vec![10.0, 2.0, 3.0]),
        }],
        horizon: 8.0,
        scale: 1,
        seed: 0,
        initial: InitialCondition::Empty,
    }
}

fn mm1m(horizon: f64, seed: u64, initial: InitialCondition) -> SimConfig {
    SimConfig {
        classes: vec![ClassLaws {
            interarrival: Distribution::exponential(2.0),
            service: Distribution::exponential(1.0),
            deadline: Distribution::exponential(1.0),
        }],
        horizon,
        scale: 1,
        seed,
        initial,
    }
}

fn sorted(atoms: &[Atom2]) -> Vec<(f64, f64, f64)> {
    let mut v: Vec<_> = atoms.iter().map(|a| (a.w, a.p, a.mass)).collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

#[test]
fn hand_trace_jobs() {
    let trace = run(&hand_trace_config()).unwrap();
    let jobs = trace.jobs();
    assert_eq!(jobs.len(), 3);
    let expect = [
        (1.0, 0.0, 5.0, 15.0, true, 6.0, ExitCause::Service),
        (2.0, 4.0, 4.0, 2.0, false, 4.0, ExitCause::Abandonment),
        (3.0, 3.0, 3.0, 3.0, false, 6.0, ExitCause::Abandonment),
    ];
    for (job, &(arrival, before, w, p, served, exit, cause)) in jobs.iter().zip(&expect) {
        assert_eq!(job.arrival, arrival);
        assert_eq!(job.workload_before, before);
        assert_eq!(job.sojourn, w);
        assert_eq!(job.patience, p);
        assert_eq!(job.served, served);
        assert_eq!(job.exit_time, exit);
        assert_eq!(job.exit_cause, cause);
    }
}

#[test]
fn hand_trace_paths() {
    let trace = run(&hand_trace_config()).unwrap();
    for (t, w) in [(0.5, 0.0), (1.0, 5.0), (2.0, 4.0), (3.0, 3.0), (6.0, 0.0), (7.0, 0.0)] {
        assert_eq!(trace.workload_at(t).unwrap(), w, "t = {t}");
    }
    assert_eq!(trace.idle_at(1.0).unwrap(), 1.0);
    assert_eq!(trace.idle_at(8.0).unwrap(), 3.0);
    let z = |t| trace.queue_lengths(t).unwrap()[0];
    assert_eq!((z(3.5).total, z(3.5).nonabandoning, z(3.5).abandoning), (3, 1, 2));
    assert_eq!(z(4.5).total, 2);
    assert_eq!(z(6.0).total, 0);
    let snap = trace.snapshot(3.5).unwrap();
    assert_eq!(
        sorted(snap[0].atoms()),
        vec![(2.5, 0.5, 1.0), (2.5, 2.5, 1.0), (2.5, 12.5, 1.0)]
    );
    let measures = trace.residual_deadline_measures(3.5).unwrap();
    let mut residual: Vec<f64> = measures[0].residual.atoms().iter().map(|a| a.x).collect();
    residual.sort_by(f64::total_cmp);
    assert_eq!(residual, vec![0.5, 2.5, 7.5]);
}

#[test]
fn empty_when_first_arrival_is_late() {
    let mut config = mm1m(1.0, 3, InitialCondition::Empty);
    config.classes[0].interarrival = Distribution::deterministic(5.0);
    let trace = run(&config).unwrap();
    assert!(trace.jobs().is_empty());
    assert_eq!(trace.workload_at(1.0).unwrap(), 0.0);
    assert_eq!(trace.idle_at(1.0).unwrap(), 1.0);
    assert!(trace.snapshot(0.0).unwrap()[0].is_empty());
}

fn arrival_free_windows(trace: &SimTrace, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut arrivals: Vec<f64> = trace.jobs().iter().map(|j| j.arrival).filter(|&a| a >= 0.0).collect();
    arrivals.push(trace.horizon());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut windows = Vec::new();
    while windows.len() < count {
        let i = rng.random_range(0..arrivals.len() - 1);
        let (lo, hi) = (arrivals[i], arrivals[i + 1]);
        let t = lo + (hi - lo) * rng.random::<f64>();
        let h = (hi - t) * rng.random::<f64>();
        if h > 0.0 {
            windows.push((t, h));
        }
    }
    windows
}

/// Checks `snapshot(t + h) == evolve(snapshot(t), h)`: same number of atoms,
/// identical masses, coordinates equal up to rounding of `t + h - arrival`.
fn assert_dynamics(trace: &SimTrace, windows: &[(f64, f64)]) {
    for &(t, h) in windows {
        let before = trace.snapshot(t).unwrap();
        let after = trace.snapshot(t + h).unwrap();
        for (k, m) in before.iter().enumerate() {
            let (evolved, _) = m.evolve(h).unwrap();
            let (a, b) = (sorted(evolved.atoms()), sorted(after[k].atoms()));
            // atoms within rounding distance of an axis may sit on either side
            let near_axis = |x: &(f64, f64, f64)| x.0.min(x.1) < 1e-9;
            let a: Vec<_> = a.into_iter().filter(|x| !near_axis(x)).collect();
            let b: Vec<_> = b.into_iter().filter(|x| !near_axis(x)).collect();
            assert_eq!(a.len(), b.len(), "window ({t}, {h})");
            for (x, y) in a.iter().zip(&b) {
                assert!((x.0 - y.0).abs() < 1e-9 && (x.1 - y.1).abs() < 1e-9, "{x:?} vs {y:?}");
                assert_eq!(x.2, y.2);
            }
        }
    }
}

#[test]
fn dynamics_consistency_on_arrival_free_windows() {
    let trace = run(&mm1m(50.0, 11, InitialCondition::Empty)).unwrap();
    let windows = arrival_free_windows(&trace, 100, 5);
    assert_dynamics(&trace, &windows);
}

#[test]
fn workload_recursion_replays_job_log() {
    let trace = run(&mm1m(30.0, 2, InitialCondition::Empty)).unwrap();
    let mut w: f64 = 0.0;
    let mut last = 0.0;
    for job in trace.jobs() {
        w = (w - (job.arrival - last)).max(0.0);
        assert_eq!(w, job.workload_before);
        if job.served {
            w += job.service;
        }
        assert_eq!(trace.workload_at(job.arrival).unwrap(), w);
        last = job.arrival;
    }
}

#[test]
fn served_jobs_leave_in_fifo_order() {
    let trace = run(&mm1m(40.0, 9, InitialCondition::Empty)).unwrap();
    let exits: Vec<f64> = trace.jobs().iter().filter(|j| j.served).map(|j| j.exit_time).collect();
    assert!(exits.windows(2).all(|p| p[0] <= p[1]));
    for job in trace.jobs() {
        assert_eq!(job.served, job.deadline > job.workload_before);
        assert!((job.sojourn_time() - (job.exit_time - job.arrival)).abs() <= 1e-12 * job.exit_time.max(1.0));
    }
}

#[test]
fn idle_time_accrues_only_when_empty() {
    let trace = run(&mm1m(20.0, 4, InitialCondition::Empty)).unwrap();
    let bp = trace.breakpoints();
    for pair in bp.windows(2) {
        let gap = pair[1].t - pair[0].t;
        let expected = (gap - pair[0].workload).max(0.0);
        assert!((pair[1].idle - pair[0].idle - expected).abs() < 1e-12);
        assert!(pair[0].workload >= 0.0);
    }
    let mut prev = 0.0;
    for i in 0..=2000 {
        let idle = trace.idle_at(i as f64 * 0.01).unwrap();
        assert!(idle >= prev);
        prev = idle;
    }
}

#[test]
fn warm_start_state_shape() {
    let trace = run(&mm1m(10.0, 21, InitialCondition::WarmStart { warmup: 8.0 })).unwrap();
    let initial: Vec<_> = trace.jobs().iter().filter(|j| j.arrival <= 0.0).collect();
    assert!(!initial.is_empty());
    let mut last_served_residual = 0.0;
    for job in &initial {
        let (w, p) = job.residual(0.0).unwrap();
        if job.served {
            assert!(w > last_served_residual);
            last_served_residual = w;
            assert!(w < p);
        } else {
            assert!(p <= w);
        }
    }
    assert_eq!(trace.snapshot(0.0).unwrap()[0].len(), initial.len());
    assert_eq!(trace.workload_at(0.0).unwrap(), trace.breakpoints()[0].workload);
    let windows = arrival_free_windows(&trace, 50, 8);
    assert_dynamics(&trace, &windows);
}

#[test]
fn runs_are_bitwise_reproducible() {
    let a = run(&mm1m(10.0, 77, InitialCondition::WarmStart { warmup: 2.0 })).unwrap();
    let b = run(&mm1m(10.0, 77, InitialCondition::WarmStart { warmup: 2.0 })).unwrap();
    assert_eq!(a, b);
    let c = run(&mm1m(10.0, 78, InitialCondition::WarmStart { warmup: 2.0 })).unwrap();
    assert_ne!(a, c);
}

#[test]
fn multiclass_snapshot_partition() {
    let config = SimConfig {
        classes: vec![
            ClassLaws {
                interarrival: Distribution::exponential(1.0),
                service: Distribution::uniform(0.5, 1.5),
                deadline: Distribution::hyper_exponential(&[(0.5, 1.0), (0.5, 3.0)]),
            },
            ClassLaws {
                interarrival: Distribution::exponential(1.5),
                service: Distribution::exponential(2.0),
                deadline: Distribution::uniform_mixture(&[(0.5, 0.0, 1.0), (0.5, 2.0, 3.0)]),
            },
        ],
        horizon: 15.0,
        scale: 1,
        seed: 5,
        initial: InitialCondition::Empty,
    };
    let trace = run(&config).unwrap();
    for t in [1.0, 5.0, 10.0, 15.0] {
        let snap = trace.snapshot(t).unwrap();
        let counts = trace.queue_lengths(t).unwrap();
        for k in 0..2 {
            assert_eq!(snap[k].len(), counts[k].total);
            let n = snap[k].atoms().iter().filter(|a| a.w < a.p).count();
            assert_eq!(n, counts[k].nonabandoning);
            assert_eq!(trace.age_counts(t, 0.0).unwrap()[k], counts[k].total);
            let m = &trace.residual_deadline_measures(t).unwrap()[k];
            for c in [0.0, 0.5, 1.0, 2.0] {
                assert!(m.residual_with_service.tail(c) >= m.residual.tail(c));
            }
        }
    }
}
