//! Fluid-scaled comparison of simulated systems against the fluid model.
//!
//! Every `(n, replication)` cell simulates the n-th time-accelerated system
//! once and compares its fluid-scaled functionals to targets computed from
//! the fluid model alone. Cells are independent and seeded from
//! `(base_seed, n, rep)`, so the report does not depend on how the cells are
//! scheduled.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::fluid_model::{FluidError, FluidSolution, InitialFluidMeasure};
use crate::measures::{rect_distance, MeasureError, Rect};
use crate::simulator::{self, InitialCondition, SimConfig, SimError, SimTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("invalid scaling plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// The n-th system: interarrival and service times divided by `n`,
/// deadlines unchanged.
pub fn build_scaled(base: &SimConfig, n: u64) -> SimConfig {
    SimConfig {
        scale: base.scale * n,
        ..base.clone()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of cell `(n, rep)`.
pub fn cell_seed(base_seed: u64, n: u64, rep: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ n) ^ rep as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPlan {
    /// Unscaled system (`scale == 1`); its seed is the base seed.
    pub base: SimConfig,
    pub scales: Vec<u64>,
    pub replications: usize,
    pub time_grid: Vec<f64>,
    pub rect_grid: Vec<Rect>,
    /// Tail points `c` for the residual-deadline comparison.
    pub c_grid: Vec<f64>,
    /// Ages `u` for the age-count comparison.
    pub age_grid: Vec<f64>,
    pub kappas: Vec<f64>,
    /// Corner points `(x, y)` scanned by the regularity probe.
    pub corner_points: Vec<(f64, f64)>,
    pub fluid_tol: f64,
}

const DEFAULT_TIME_STEP: f64 = 0.1;
const GRID_SIDE: usize = 6;
const CORNER_SIDE: usize = 9;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// `0, T/m, 2T/m, ..., T` with `m = ceil(T / step)`.
pub fn uniform_time_grid(horizon: f64, step: f64) -> Vec<f64> {
    if !(horizon > 0.0) {
        return vec![0.0];
    }
    let m = (horizon / step - 1e-9).ceil().max(1.0) as usize;
    (0..=m).map(|i| horizon * i as f64 / m as f64).collect()
}

impl ScalingPlan {
    /// Plan with the default grids derived from the fluid data of `base`.
    pub fn with_defaults(base: SimConfig, scales: Vec<u64>, replications: usize) -> Result<Self, HarnessError> {
        let input = base.fluid_input()?;
        let band = input.equilibrium_band();
        let mean_deadline = input
            .classes()
            .iter()
            .map(|c| c.deadline.mean())
            .fold(0.0, f64::max);
        let d_tilde = input.d_max().min(3.0 * mean_deadline);
        let w_span = band.upper + d_tilde;
        let rect_grid = linspace(0.0, w_span, GRID_SIDE)
            .into_iter()
            .flat_map(|a| {
                linspace(0.0, d_tilde, GRID_SIDE)
                    .into_iter()
                    .map(move |c| Rect::upper_right(a, c))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let corner_points = linspace(0.0, w_span, CORNER_SIDE)
            .into_iter()
            .flat_map(|x| linspace(0.0, d_tilde, CORNER_SIDE).into_iter().map(move |y| (x, y)))
            .collect();
        Ok(ScalingPlan {
            time_grid: uniform_time_grid(base.horizon, DEFAULT_TIME_STEP),
            base,
            scales,
            replications,
            rect_grid,
            c_grid: vec![0.0, 0.5, 1.0],
            age_grid: vec![0.25, 0.5],
            kappas: vec![0.05, 0.1, 0.2, 0.4],
            corner_points,
            fluid_tol: 1e-10,
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.base.validate()?;
        if self.base.scale != 1 {
            return Err(HarnessError::Plan("base config must have scale 1".into()));
        }
        if self.base.classes.iter().any(|c| {
            c.interarrival.is_replay() || c.service.is_replay() || c.deadline.is_replay()
        }) {
            return Err(HarnessError::Plan("replay laws are not allowed in convergence runs".into()));
        }
        if self.scales.is_empty() || self.scales[0] == 0 || self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Plan("scales must be positive and strictly increasing".into()));
        }
        if self.replications == 0 {
            return Err(HarnessError::Plan("at least one replication is required".into()));
        }
        if self.time_grid.is_empty() {
            return Err(HarnessError::Plan("time grid is empty".into()));
        }
        if let Some(&t) = self
            .time_grid
            .iter()
            .find(|&&t| !(t >= 0.0 && t <= self.base.horizon))
        {
            return Err(HarnessError::Plan(format!(
                "time grid point {t} outside the horizon [0, {}]",
                self.base.horizon
            )));
        }
        if self.rect_grid.is_empty() {
            return Err(MeasureError::EmptyGrid.into());
        }
        if self.kappas.iter().any(|&k| !(k > 0.0)) {
            return Err(HarnessError::Plan("kappas must be positive".into()));
        }
        if self.c_grid.iter().chain(&self.age_grid).any(|&x| !(x >= 0.0)) {
            return Err(HarnessError::Plan("c and age grids must be nonnegative".into()));
        }
        Ok(())
    }

    /// Warm-up length mapped onto fluid time (0 for an empty start).
    pub fn fluid_offset(&self) -> f64 {
        match self.base.initial {
            InitialCondition::Empty => 0.0,
            InitialCondition::WarmStart { warmup } => warmup,
        }
    }

    /// Fluid model solution the simulations are compared against.
    ///
    /// Both initial conditions start from an empty system; a warm start is
    /// matched by the empty-start fluid solution shifted by the warm-up.
    pub fn fluid_solution(&self) -> Result<FluidSolution, HarnessError> {
        Ok(FluidSolution::new(
            self.base.fluid_input()?,
            InitialFluidMeasure::Zero,
            self.fluid_offset() + self.base.horizon,
            self.fluid_tol,
        )?)
    }

    fn cells(&self) -> Vec<(u64, usize)> {
        self.scales
            .iter()
            .flat_map(|&n| (0..self.replications).map(move |rep| (n, rep)))
            .collect()
    }

    pub fn cell_config(&self, n: u64, rep: usize) -> SimConfig {
        let mut config = build_scaled(&self.base, n);
        config.seed = cell_seed(self.base.seed, n, rep);
        config
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: u64,
    pub rep: usize,
    pub t: f64,
    pub metric: String,
    /// `None` for aggregate quantities (workload, idle time, corner probe).
    pub class: Option<usize>,
    pub sim_value: f64,
    pub fluid_value: f64,
    pub abs_err: f64,
}

impl ReportRow {
    /// Metric name without its `:param=value` suffix.
    pub fn base_metric(&self) -> &str {
        self.metric.split(':').next().unwrap_or(&self.metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryEntry {
    pub n: u64,
    pub metric: String,
    pub reps: usize,
    /// Mean over replications of `sup` of `abs_err` over the metric's rows.
    pub mean_sup_error: f64,
    pub max_sup_error: f64,
    /// Sample standard deviation (zero for a single replication).
    pub std_sup_error: f64,
    /// Mean over replications of `sup` of the simulated value.
    pub mean_sup_sim_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ReportRow>,
    pub summary: Vec<SummaryEntry>,
    pub notes: Vec<String>,
}

impl ScalingReport {
    fn from_rows(rows: Vec<ReportRow>, replications: usize, notes: Vec<String>) -> Self {
        // (n, metric) -> per-rep (sup err, sup sim)
        let mut sups: BTreeMap<(u64, String), BTreeMap<usize, (f64, f64)>> = BTreeMap::new();
        for row in &rows {
            let entry = sups
                .entry((row.n, row.base_metric().to_string()))
                .or_default()
                .entry(row.rep)
                .or_insert((0.0, f64::NEG_INFINITY));
            entry.0 = entry.0.max(row.abs_err);
            entry.1 = entry.1.max(row.sim_value);
        }
        let summary = sups
            .into_iter()
            .map(|((n, metric), per_rep)| {
                let errs: Vec<f64> = per_rep.values().map(|v| v.0).collect();
                let sims: Vec<f64> = per_rep.values().map(|v| v.1).collect();
                let reps = errs.len();
                let mean = errs.iter().sum::<f64>() / reps as f64;
                let var = if reps > 1 {
                    errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps - 1) as f64
                } else {
                    0.0
                };
                SummaryEntry {
                    n,
                    metric,
                    reps,
                    mean_sup_error: mean,
                    max_sup_error: errs.iter().copied().fold(0.0, f64::max),
                    std_sup_error: var.sqrt(),
                    mean_sup_sim_value: sims.iter().sum::<f64>() / reps as f64,
                }
            })
            .collect();
        let mut notes = notes;
        notes.push(format!(
            "sup errors are taken over the time grid, classes and metric parameters; statistics use {replications} replication(s) per scale"
        ));
        ScalingReport { rows, summary, notes }
    }

    pub fn summary_for(&self, n: u64, metric: &str) -> Option<&SummaryEntry> {
        self.summary.iter().find(|e| e.n == n && e.metric == metric)
    }

    pub fn rows_for<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    /// `n,rep,t,metric,class,sim_value,fluid_value,abs_err`; aggregate rows
    /// carry an empty class field.
    pub fn write_csv<W: io::Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "n,rep,t,metric,class,sim_value,fluid_value,abs_err")?;
        for r in &self.rows {
            let class = r.class.map(|c| c.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.n, r.rep, r.t, r.metric, class, r.sim_value, r.fluid_value, r.abs_err
            )?;
        }
        Ok(())
    }
}

/// Which comparisons a run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSet {
    pub workload: bool,
    pub state: bool,
    pub residual_deadlines: bool,
    pub corner_probe: bool,
}

impl MetricSet {
    pub const ALL: MetricSet = MetricSet {
        workload: true,
        state: true,
        residual_deadlines: true,
        corner_probe: true,
    };
    pub const NONE: MetricSet = MetricSet {
        workload: false,
        state: false,
        residual_deadlines: false,
        corner_probe: false,
    };
}

/// Fluid targets at one grid time, computed once per plan.
struct FluidAt {
    workload: f64,
    queue: Vec<f64>,
    nonabandoning: Vec<f64>,
    abandoning: Vec<f64>,
    /// `[u index][class]`, `None` when `u > t`.
    age: Vec<Option<Vec<f64>>>,
    /// `[class][rect index]`.
    rects: Vec<Vec<f64>>,
    /// `[class][c index]`.
    residual: Vec<Vec<f64>>,
}

fn fluid_targets(plan: &ScalingPlan, fluid: &FluidSolution, metrics: MetricSet) -> Result<Vec<FluidAt>, HarnessError> {
    let offset = plan.fluid_offset();
    let input = fluid.input();
    let classes = 0..input.num_classes();
    plan.time_grid
        .iter()
        .map(|&t| {
            let ft = offset + t;
            let per_class = |f: &dyn Fn(usize) -> Result<f64, FluidError>| -> Result<Vec<f64>, FluidError> {
                classes.clone().map(f).collect()
            };
            let mut at = FluidAt {
                workload: fluid.workload(ft)?,
                queue: Vec::new(),
                nonabandoning: Vec::new(),
                abandoning: Vec::new(),
                age: Vec::new(),
                rects: Vec::new(),
                residual: Vec::new(),
            };
            if metrics.state {
                at.queue = per_class(&|k| fluid.queue_length(k, ft))?;
                at.nonabandoning = per_class(&|k| fluid.nonabandoning(k, ft))?;
                at.abandoning = per_class(&|k| fluid.abandoning(k, ft))?;
                at.age = plan
                    .age_grid
                    .iter()
                    .map(|&u| {
                        if u <= t {
                            per_class(&|k| fluid.age_count(k, ft, u)).map(Some)
                        } else {
                            Ok(None)
                        }
                    })
                    .collect::<Result<_, _>>()?;
                at.rects = classes
                    .clone()
                    .map(|k| plan.rect_grid.iter().map(|r| fluid.eval(k, ft, r)).collect())
                    .collect::<Result<_, _>>()?;
            }
            if metrics.residual_deadlines {
                // arrivals after time 0 only, so the limit uses unshifted t
                at.residual = classes
                    .clone()
                    .map(|k| {
                        plan.c_grid
                            .iter()
                            .map(|&c| input.residual_deadline_limit(k, t, c))
                            .collect()
                    })
                    .collect::<Result<_, _>>()?;
            }
            Ok(at)
        })
        .collect()
}

fn row(n: u64, rep: usize, t: f64, metric: String, class: Option<usize>, sim: f64, fluid: f64) -> ReportRow {
    ReportRow {
        n,
        rep,
        t,
        metric,
        class,
        sim_value: sim,
        fluid_value: fluid,
        abs_err: (sim - fluid).abs(),
    }
}

fn cell_rows(
    plan: &ScalingPlan,
    fluid: &FluidSolution,
    targets: &[FluidAt],
    metrics: MetricSet,
    n: u64,
    rep: usize,
) -> Result<Vec<ReportRow>, HarnessError> {
    let trace: SimTrace = simulator::run(&plan.cell_config(n, rep))?;
    let inv_n = 1.0 / n as f64;
    let num_classes = trace.num_classes();
    let mut rows = Vec::new();
    // (mass, t, x, y) of the largest corner mass per kappa
    let mut corner_best: Vec<Option<(f64, f64, f64, f64)>> = vec![None; plan.kappas.len()];

    for (&t, target) in plan.time_grid.iter().zip(targets) {
        if metrics.workload {
            rows.push(row(n, rep, t, "workload".into(), None, trace.workload_at(t)?, target.workload));
            rows.push(row(n, rep, t, "idle".into(), None, trace.idle_at(t)?, 0.0));
        }
        let needs_snapshot = metrics.state || metrics.corner_probe;
        let snapshot = if needs_snapshot {
            trace
                .snapshot(t)?
                .into_iter()
                .map(|m| m.scaled(inv_n))
                .collect::<Vec<_>>()
        } else {
            Vec::new()
        };
        if metrics.state {
            let counts = trace.queue_lengths(t)?;
            for k in 0..num_classes {
                let c = counts[k];
                let scaled = |x: usize| x as f64 * inv_n;
                rows.push(row(n, rep, t, "queue_length".into(), Some(k), scaled(c.total), target.queue[k]));
                rows.push(row(n, rep, t, "nonabandoning".into(), Some(k), scaled(c.nonabandoning), target.nonabandoning[k]));
                rows.push(row(n, rep, t, "abandoning".into(), Some(k), scaled(c.abandoning), target.abandoning[k]));
            }
            for (ui, &u) in plan.age_grid.iter().enumerate() {
                if let Some(fluid_age) = &target.age[ui] {
                    let ages = trace.age_counts(t, u)?;
                    for k in 0..num_classes {
                        rows.push(row(
                            n,
                            rep,
                            t,
                            format!("age_count:u={u}"),
                            Some(k),
                            ages[k] as f64 * inv_n,
                            fluid_age[k],
                        ));
                    }
                }
            }
            for k in 0..num_classes {
                let fluid_vals = &target.rects[k];
                let lookup = |r: &Rect| {
                    let idx = plan.rect_grid.iter().position(|g| g == r).expect("grid rect");
                    fluid_vals[idx]
                };
                let dist = rect_distance(&snapshot[k], &lookup, &plan.rect_grid)?;
                rows.push(row(n, rep, t, "rect_measure".into(), Some(k), dist, 0.0));
            }
        }
        if metrics.residual_deadlines {
            let measures = trace.residual_deadline_measures(t)?;
            for k in 0..num_classes {
                for (ci, &c) in plan.c_grid.iter().enumerate() {
                    let limit = target.residual[k][ci];
                    let a_tail = measures[k].residual.tail(c) * inv_n;
                    let v_tail = measures[k].residual_with_service.tail(c) * inv_n;
                    rows.push(row(n, rep, t, format!("A_tail:c={c}"), Some(k), a_tail, limit));
                    rows.push(row(n, rep, t, format!("V_tail:c={c}"), Some(k), v_tail, limit));
                }
            }
        }
        if metrics.corner_probe {
            for (ki, &kappa) in plan.kappas.iter().enumerate() {
                for m in &snapshot {
                    for &(x, y) in &plan.corner_points {
                        let mass = m.corner_mass(x, y, kappa)?;
                        if corner_best[ki].is_none_or(|b| mass > b.0) {
                            corner_best[ki] = Some((mass, t, x, y));
                        }
                    }
                }
            }
        }
    }
    if metrics.corner_probe {
        let offset = plan.fluid_offset();
        for (ki, &kappa) in plan.kappas.iter().enumerate() {
            if let Some((mass, t, x, y)) = corner_best[ki] {
                let bound = fluid.corner_mass(offset + t, x, y, kappa)?;
                rows.push(row(n, rep, t, format!("corner_mass:kappa={kappa}"), None, mass, bound));
            }
        }
    }
    Ok(rows)
}

/// Runs every `(n, rep)` cell and assembles the report.
pub fn run_plan(plan: &ScalingPlan, metrics: MetricSet, exec: Execution) -> Result<ScalingReport, HarnessError> {
    plan.validate()?;
    let fluid = plan.fluid_solution()?;
    let targets = fluid_targets(plan, &fluid, metrics)?;
    let cells = plan.cells();
    let per_cell = exec.map(&cells, |&(n, rep)| cell_rows(plan, &fluid, &targets, metrics, n, rep));
    let mut rows = Vec::new();
    for cell in per_cell {
        rows.extend(cell?);
    }
    let mut notes = Vec::new();
    if metrics.corner_probe {
        notes.push(
            "corner_mass rows: sim_value is the largest fluid-scaled mass within kappa of a corner set over the time grid, classes and corner points; fluid_value is the fluid stripe bound at the same point".into(),
        );
    }
    if metrics.state {
        notes.push("rect_measure rows: sim_value is the rectangle-grid distance between the scaled snapshot and the fluid state".into());
    }
    Ok(ScalingReport::from_rows(rows, plan.replications, notes))
}

/// Workload and idle-time comparison (metrics `workload`, `idle`).
pub fn compare_workload(plan: &ScalingPlan) -> Result<ScalingReport, HarnessError> {
    run_plan(plan, MetricSet { workload: true, ..MetricSet::NONE }, Execution::default())
}

/// Queue-length, age and rectangle-grid comparison of the state descriptor.
pub fn compare_state(plan: &ScalingPlan) -> Result<ScalingReport, HarnessError> {
    run_plan(plan, MetricSet { state: true, ..MetricSet::NONE }, Execution::default())
}

/// Residual-deadline tails (`A_tail`, `V_tail`) against their common limit.
pub fn compare_residual_deadlines(plan: &ScalingPlan) -> Result<ScalingReport, HarnessError> {
    run_plan(
        plan,
        MetricSet {
            residual_deadlines: true,
            ..MetricSet::NONE
        },
        Execution::default(),
    )
}

/// Largest fluid-scaled corner mass per `(n, kappa)`.
pub fn corner_regularity_probe(plan: &ScalingPlan) -> Result<ScalingReport, HarnessError> {
    run_plan(
        plan,
        MetricSet {
            corner_probe: true,
            ..MetricSet::NONE
        },
        Execution::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;
    use crate::simulator::ClassLaws;

    fn base(horizon: f64) -> SimConfig {
        SimConfig {
            classes: vec![ClassLaws {
                interarrival: Distribution::exponential(2.0),
                service: Distribution::exponential(1.0),
                deadline: Distribution::exponential(1.0),
            }],
            horizon,
            scale: 1,
            seed: 17,
            initial: InitialCondition::Empty,
        }
    }

    #[test]
    fn build_scaled_examples() {
        let b = base(1.0);
        assert_eq!(build_scaled(&b, 1), b);
        let s = build_scaled(&b, 10);
        assert_eq!(s.interarrival_law(0), Distribution::exponential(20.0));
        assert_eq!(s.rho(), b.rho());
    }

    #[test]
    fn seeds_are_distinct_per_cell() {
        let seeds: std::collections::BTreeSet<u64> = [10u64, 100, 1000]
            .iter()
            .flat_map(|&n| (0..5).map(move |r| cell_seed(1, n, r)))
            .collect();
        assert_eq!(seeds.len(), 15);
        assert_eq!(cell_seed(1, 10, 0), cell_seed(1, 10, 0));
    }

    #[test]
    fn plan_validation() {
        let mut plan = ScalingPlan::with_defaults(base(2.0), vec![10, 100], 2).unwrap();
        assert!(plan.validate().is_ok());
        assert_eq!(plan.rect_grid.len(), 36);
        plan.scales = vec![100, 10];
        assert!(plan.validate().is_err());
        plan.scales = vec![10];
        plan.time_grid.push(3.0);
        assert!(matches!(plan.validate(), Err(HarnessError::Plan(_))));
        let mut replay = base(2.0);
        replay.classes[0].service = Distribution::replay(vec![1.0]);
        let plan = ScalingPlan::with_defaults(replay, vec![10], 1).unwrap();
        assert!(plan.validate().is_err());
    }

    #[test]
    fn time_zero_rows_vanish() {
        let mut plan = ScalingPlan::with_defaults(base(1.0), vec![10], 1).unwrap();
        plan.time_grid = vec![0.0];
        let report = run_plan(&plan, MetricSet::ALL, Execution::Sequential).unwrap();
        for r in report.rows.iter().filter(|r| !r.metric.starts_with("corner")) {
            assert_eq!(r.sim_value, 0.0, "{}", r.metric);
            assert_eq!(r.fluid_value, 0.0, "{}", r.metric);
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let plan = ScalingPlan::with_defaults(base(1.0), vec![5, 20], 2).unwrap();
        let a = run_plan(&plan, MetricSet::ALL, Execution::Sequential).unwrap();
        let b = run_plan(&plan, MetricSet::ALL, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partition_identity_per_path() {
        let plan = ScalingPlan::with_defaults(base(2.0), vec![50], 1).unwrap();
        let report = compare_state(&plan).unwrap();
        let pick = |m: &str| report.rows_for(m).map(|r| r.sim_value).collect::<Vec<_>>();
        let (z, nn, a) = (pick("queue_length"), pick("nonabandoning"), pick("abandoning"));
        for i in 0..z.len() {
            let count = |x: f64| (x * 50.0).round() as i64;
            assert_eq!(count(z[i]), count(nn[i]) + count(a[i]));
        }
    }

    #[test]
    fn summary_statistics() {
        let rows = vec![
            row(10, 0, 0.0, "workload".into(), None, 1.0, 0.5),
            row(10, 0, 1.0, "workload".into(), None, 1.0, 0.8),
            row(10, 1, 0.0, "workload".into(), None, 1.0, 0.0),
            row(10, 0, 0.0, "A_tail:c=0".into(), Some(0), 1.0, 0.75),
            row(10, 0, 0.0, "A_tail:c=1".into(), Some(0), 1.0, 0.5),
        ];
        let report = ScalingReport::from_rows(rows, 2, vec![]);
        let w = report.summary_for(10, "workload").unwrap();
        assert_eq!(w.reps, 2);
        assert_eq!(w.mean_sup_error, 0.75);
        assert_eq!(w.max_sup_error, 1.0);
        assert!((w.std_sup_error - (0.125f64).sqrt()).abs() < 1e-15);
        let a = report.summary_for(10, "A_tail").unwrap();
        assert_eq!(a.mean_sup_error, 0.5);
    }
}
