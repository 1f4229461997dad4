use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fluidq::fluid_model::{invariant_state, output_grid};
use fluidq::scaling::{run_plan, MetricSet};
use fluidq::{
    simulator, Execution, FluidModelInput, FluidSolution, InitialBox, InitialFluidMeasure, Rect, ScalingPlan,
    SummaryEntry,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const SEED_ENV: &str = "FLUIDQ_SEED";

/// Options shared by all subcommands after command-line resolution.
pub struct Invocation {
    pub config: RunConfig,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

impl Invocation {
    pub fn new(config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self, CliError> {
        let config = RunConfig::load(config_path)?;
        let out = out
            .or_else(|| config.output.directory.clone())
            .ok_or_else(|| CliError::Config("no output directory: pass --out or set output.directory".into()))?;
        Ok(Invocation { config, out, seed })
    }

    /// Seed precedence: `--seed`, then the environment, then `sim.seed`.
    fn seed(&self) -> Result<u64, CliError> {
        if let Some(seed) = self.seed {
            return Ok(seed);
        }
        if let Ok(value) = std::env::var(SEED_ENV) {
            return value
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}={value:?} is not an unsigned integer")));
        }
        Ok(self.config.sim_block()?.seed)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::Io(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(BufWriter::new(file))
    }

    fn fluid_input(&self) -> Result<FluidModelInput, CliError> {
        let sim = fluidq::SimConfig {
            classes: self.config.class_laws(),
            horizon: 0.0,
            scale: 1,
            seed: 0,
            initial: fluidq::InitialCondition::Empty,
        };
        Ok(sim.fluid_input()?)
    }
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Serialize)]
struct BandEndpoint {
    w: f64,
    z_w: Vec<f64>,
    n_w: Vec<f64>,
}

#[derive(Serialize)]
struct BandReport {
    rho: f64,
    w_l: f64,
    w_u: f64,
    /// `null` for unbounded deadlines.
    d_max: Option<f64>,
    endpoints: Vec<BandEndpoint>,
}

fn band_report(input: &FluidModelInput) -> BandReport {
    let band = input.equilibrium_band();
    let endpoint = |w: f64| BandEndpoint {
        w,
        z_w: (0..input.num_classes()).map(|k| input.invariant_queue_length(k, w)).collect(),
        n_w: (0..input.num_classes()).map(|k| input.invariant_nonabandoning(k, w)).collect(),
    };
    BandReport {
        rho: input.rho(),
        w_l: band.lower,
        w_u: band.upper,
        d_max: finite_or_none(input.d_max()),
        endpoints: vec![endpoint(band.lower), endpoint(band.upper)],
    }
}

fn initial_measure(inv: &Invocation, input: &FluidModelInput) -> Result<InitialFluidMeasure, CliError> {
    let fluid = inv
        .config
        .fluid
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [fluid] block".into()))?;
    if !fluid.boxes.is_empty() {
        let boxes = fluid
            .boxes
            .iter()
            .map(|b| {
                Ok(InitialBox {
                    class: b.class,
                    rect: Rect::new(b.a, b.b, b.c, b.d).map_err(|e| CliError::Config(format!("fluid.boxes: {e}")))?,
                    mass: b.mass,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let initial = InitialFluidMeasure::BoxMixture(boxes);
        if let Some(w0) = fluid.w0 {
            if w0 != initial.right_edge() {
                return Err(CliError::Config(format!(
                    "fluid.w0 = {w0} disagrees with the right edge {} of fluid.boxes",
                    initial.right_edge()
                )));
            }
        }
        return Ok(initial);
    }
    let w0 = fluid.w0.unwrap_or(0.0);
    input.check_initial_workload(w0)?;
    if w0 == 0.0 {
        Ok(InitialFluidMeasure::Zero)
    } else if input.in_band(w0) {
        Ok(InitialFluidMeasure::Invariant { w: w0 })
    } else {
        let band = input.equilibrium_band();
        Err(CliError::Config(format!(
            "fluid.w0 = {w0} is neither 0 nor in the equilibrium band [{}, {}]; describe the initial state with [[fluid.boxes]]",
            band.lower, band.upper
        )))
    }
}

pub fn fluid(inv: &Invocation) -> Result<(), CliError> {
    let input = inv.fluid_input()?;
    let initial = initial_measure(inv, &input)?;
    let block = inv.config.fluid.as_ref().expect("checked in initial_measure");
    let solution = FluidSolution::new(input, initial, block.horizon, block.tol)?;
    if inv.config.output.wants("csv") {
        let mut out = inv.create("workload.csv")?;
        solution.write_workload_csv(&mut out, block.step)?;
        out.flush()?;
        let mut out = inv.create("functionals.csv")?;
        solution.write_functionals_csv(&mut out, block.step)?;
        out.flush()?;
    }
    if inv.config.output.wants("json") {
        let mut out = inv.create("band.json")?;
        serde_json::to_writer_pretty(&mut out, &band_report(solution.input()))?;
        writeln!(out)?;
        out.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SnapshotRow {
    t: f64,
    class: usize,
    w: f64,
    p: f64,
    mass: f64,
}

pub fn simulate(inv: &Invocation) -> Result<(), CliError> {
    let config = inv.config.simulation(inv.seed()?)?;
    let trace = simulator::run(&config)?;
    if !inv.config.output.wants("csv") {
        return Ok(());
    }
    let mut out = inv.create("jobs.csv")?;
    trace.write_jobs_csv(&mut out)?;
    out.flush()?;
    let mut out = inv.create("workload.csv")?;
    trace.write_workload_csv(&mut out)?;
    out.flush()?;

    let block = inv.config.sim_block()?;
    let step = block.snapshot_step.unwrap_or(config.horizon / 10.0);
    let mut writer = csv::Writer::from_writer(inv.create("snapshots.csv")?);
    for t in output_grid(config.horizon, step) {
        for (class, measure) in trace.snapshot(t)?.iter().enumerate() {
            for atom in measure.atoms() {
                writer.serialize(SnapshotRow { t, class, w: atom.w, p: atom.p, mass: atom.mass })?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ConvergeSummary<'a> {
    scales: &'a [u64],
    reps: usize,
    seed: u64,
    summary: &'a [SummaryEntry],
    notes: &'a [String],
}

pub fn converge_plan(inv: &Invocation) -> Result<ScalingPlan, CliError> {
    let block = inv
        .config
        .converge
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [converge] block".into()))?;
    let base = inv.config.simulation(inv.seed()?)?;
    if base.scale != 1 {
        return Err(CliError::Config("sim.n must be 1 for converge; list the scales in converge.scales".into()));
    }
    if base.classes.iter().any(|c| c.interarrival.is_replay() || c.service.is_replay() || c.deadline.is_replay()) {
        return Err(CliError::Config("replay laws are not allowed in converge".into()));
    }
    let mut plan = ScalingPlan::with_defaults(base, block.scales.clone(), block.reps)?;
    if let Some(grid) = &block.time_grid {
        plan.time_grid = grid.clone();
    }
    if let Some(grid) = inv.config.rect_grid()? {
        plan.rect_grid = grid;
    }
    if let Some(grid) = &block.c_grid {
        plan.c_grid = grid.clone();
    }
    if let Some(grid) = &block.age_grid {
        plan.age_grid = grid.clone();
    }
    if let Some(kappas) = &block.kappas {
        plan.kappas = kappas.clone();
    }
    plan.validate()?;
    Ok(plan)
}

pub fn converge(inv: &Invocation) -> Result<(), CliError> {
    let plan = converge_plan(inv)?;
    let report = run_plan(&plan, MetricSet::ALL, Execution::default())?;
    if inv.config.output.wants("csv") {
        let mut out = inv.create("report.csv")?;
        report.write_csv(&mut out)?;
        out.flush()?;
    }
    if inv.config.output.wants("json") {
        let mut out = inv.create("summary.json")?;
        let summary = ConvergeSummary {
            scales: &plan.scales,
            reps: plan.replications,
            seed: plan.base.seed,
            summary: &report.summary,
            notes: &report.notes,
        };
        serde_json::to_writer_pretty(&mut out, &summary)?;
        writeln!(out)?;
        out.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct InvariantRow {
    kind: &'static str,
    class: usize,
    a: Option<f64>,
    b: Option<f64>,
    c: Option<f64>,
    d: Option<f64>,
    value: f64,
}

const INVARIANT_GRID: usize = 5;

pub fn invariant(inv: &Invocation, w: Option<f64>) -> Result<(), CliError> {
    let input = inv.fluid_input()?;
    let w = w.unwrap_or_else(|| input.equilibrium_band().lower);
    let theta = invariant_state(&input, w)?;
    let mean_deadline = input.classes().iter().map(|c| c.deadline.mean()).fold(0.0, f64::max);
    let d_tilde = input.d_max().min(3.0 * mean_deadline);
    let edges = |hi: f64| -> Vec<f64> {
        (0..=INVARIANT_GRID).map(|i| hi * i as f64 / INVARIANT_GRID as f64).collect()
    };
    let a_edges = edges(w);
    let mut c_edges = edges(d_tilde);
    c_edges.push(f64::INFINITY);

    let mut writer = csv::Writer::from_writer(inv.create("invariant.csv")?);
    for k in 0..input.num_classes() {
        for a in a_edges.windows(2) {
            for c in c_edges.windows(2) {
                let rect = Rect::new(a[0], a[1], c[0], c[1]).map_err(|e| CliError::Config(e.to_string()))?;
                writer.serialize(InvariantRow {
                    kind: "box",
                    class: k,
                    a: Some(a[0]),
                    b: Some(a[1]),
                    c: Some(c[0]),
                    d: Some(c[1]),
                    value: theta.eval(k, &rect),
                })?;
            }
        }
        for (kind, value) in [("z_w", theta.queue_length(k)), ("n_w", theta.nonabandoning(k))] {
            writer.serialize(InvariantRow { kind, class: k, a: None, b: None, c: None, d: None, value })?;
        }
    }
    writer.flush()?;
    Ok(())
}
