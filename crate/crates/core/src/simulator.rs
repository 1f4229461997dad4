//! Exact simulation of the multiclass FIFO single-server queue with
//! abandonment.
//!
//! Under FIFO with abandonment before service, the workload seen by an
//! arrival decides everything about that job: whether it is served, its
//! virtual sojourn time, its patience time and its exit epoch. The simulator
//! therefore only walks arrival epochs; no departure events are scheduled.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io;

use thiserror::Error;

use crate::distributions::{Distribution, DistributionError, VariateStream};
use crate::fluid_model::{FluidClass, FluidError, FluidModelInput};
use crate::measures::{AtomicMeasure1D, AtomicMeasure2D, ExitCause};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("class {class} {role} law: {source}")]
    Law {
        class: usize,
        role: &'static str,
        source: DistributionError,
    },
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
}

/// Interarrival, service and deadline laws of one class, in unscaled time.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassLaws {
    pub interarrival: Distribution,
    pub service: Distribution,
    pub deadline: Distribution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Empty,
    /// Run from empty for `warmup` time units and start the clock there.
    WarmStart { warmup: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub classes: Vec<ClassLaws>,
    pub horizon: f64,
    /// Time-acceleration factor: interarrival and service times are divided
    /// by `scale`, deadlines are not.
    pub scale: u64,
    pub seed: u64,
    pub initial: InitialCondition,
}

const STREAMS_PER_CLASS: u64 = 3;

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.classes.is_empty() {
            return Err(SimError::Config("at least one class is required".into()));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(SimError::Config(format!(
                "horizon must be finite and nonnegative, got {}",
                self.horizon
            )));
        }
        if self.scale == 0 {
            return Err(SimError::Config("scale must be at least 1".into()));
        }
        if let InitialCondition::WarmStart { warmup } = self.initial {
            if !(warmup.is_finite() && warmup >= 0.0) {
                return Err(SimError::Config(format!(
                    "warm-up duration must be finite and nonnegative, got {warmup}"
                )));
            }
        }
        for (class, laws) in self.classes.iter().enumerate() {
            let wrap = |role| move |source| SimError::Law { class, role, source };
            laws.interarrival.validate().map_err(wrap("interarrival"))?;
            laws.service.validate().map_err(wrap("service"))?;
            laws.deadline.validate_deadline().map_err(wrap("deadline"))?;
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    fn scaled(&self, law: &Distribution) -> Distribution {
        if self.scale == 1 {
            law.clone()
        } else {
            law.time_scaled(self.scale as f64)
        }
    }

    /// Interarrival law of class `k` in the accelerated system.
    pub fn interarrival_law(&self, k: usize) -> Distribution {
        self.scaled(&self.classes[k].interarrival)
    }

    /// Service law of class `k` in the accelerated system.
    pub fn service_law(&self, k: usize) -> Distribution {
        self.scaled(&self.classes[k].service)
    }

    pub fn deadline_law(&self, k: usize) -> &Distribution {
        &self.classes[k].deadline
    }

    /// Offered load, computed from the unscaled laws and hence independent
    /// of `scale`.
    pub fn rho(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| c.service.mean() / c.interarrival.mean())
            .sum()
    }

    /// Fluid data `(λ, μ, Γ)` matching this configuration.
    pub fn fluid_input(&self) -> Result<FluidModelInput, FluidError> {
        FluidModelInput::new(
            self.classes
                .iter()
                .map(|c| FluidClass {
                    lambda: 1.0 / c.interarrival.mean(),
                    mu: 1.0 / c.service.mean(),
                    deadline: c.deadline.clone(),
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub class: usize,
    /// 1-based index within the class, in arrival order.
    pub index: usize,
    /// Arrival epoch; negative for jobs that arrived during a warm-up.
    pub arrival: f64,
    pub service: f64,
    pub deadline: f64,
    /// `W(t-)` at the arrival epoch.
    pub workload_before: f64,
    /// Virtual sojourn time.
    pub sojourn: f64,
    /// Patience time.
    pub patience: f64,
    pub served: bool,
    pub exit_time: f64,
    pub exit_cause: ExitCause,
}

impl JobRecord {
    pub fn sojourn_time(&self) -> f64 {
        self.sojourn.min(self.patience)
    }

    /// Residual `(w(t), p(t))` when the job is present at `t`.
    pub fn residual(&self, t: f64) -> Option<(f64, f64)> {
        if self.arrival > t {
            return None;
        }
        let age = t - self.arrival;
        let (w, p) = (self.sojourn - age, self.patience - age);
        (w > 0.0 && p > 0.0).then_some((w, p))
    }
}

/// Workload right after an arrival epoch (or the time-0 origin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub t: f64,
    pub workload: f64,
    pub idle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueueCounts {
    pub total: usize,
    pub nonabandoning: usize,
    pub abandoning: usize,
}

/// Residual-deadline-related measures of one class.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeadlineMeasures {
    /// Raw deadlines of arrivals in `(0, t]`.
    pub deadlines: AtomicMeasure1D,
    /// Atoms at `(d - age)^+`.
    pub residual: AtomicMeasure1D,
    /// Atoms at `(d + v - age)^+`.
    pub residual_with_service: AtomicMeasure1D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    num_classes: usize,
    horizon: f64,
    jobs: Vec<JobRecord>,
    breakpoints: Vec<Breakpoint>,
    exit_prefix_max: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    t: f64,
    class: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // min-heap on (t, class)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.class.cmp(&self.class))
    }
}

struct ClassStreams {
    interarrival: VariateStream,
    service: VariateStream,
    deadline: VariateStream,
}

/// Simulates the configured system on `[0, horizon]`.
pub fn run(config: &SimConfig) -> Result<SimTrace, SimError> {
    config.validate()?;
    let start = match config.initial {
        InitialCondition::Empty => 0.0,
        InitialCondition::WarmStart { warmup } => -warmup,
    };
    let mut streams: Vec<ClassStreams> = (0..config.num_classes())
        .map(|k| {
            let base = STREAMS_PER_CLASS * k as u64;
            ClassStreams {
                interarrival: VariateStream::new(config.interarrival_law(k), config.seed, base),
                service: VariateStream::new(config.service_law(k), config.seed, base + 1),
                deadline: VariateStream::new(config.deadline_law(k).clone(), config.seed, base + 2),
            }
        })
        .collect();
    let draw = |stream: &mut VariateStream, class, role| {
        stream
            .next_value()
            .map_err(|source| SimError::Law { class, role, source })
    };

    let mut heap = BinaryHeap::with_capacity(config.num_classes());
    for (class, s) in streams.iter_mut().enumerate() {
        let t = start + draw(&mut s.interarrival, class, "interarrival")?;
        if t <= config.horizon {
            heap.push(Pending { t, class });
        }
    }

    let mut jobs = Vec::new();
    let mut events: Vec<(f64, f64)> = Vec::new();
    let mut counts = vec![0usize; config.num_classes()];
    let (mut last_t, mut last_w) = (start, 0.0f64);
    while let Some(Pending { t, class }) = heap.pop() {
        let s = &mut streams[class];
        let service = draw(&mut s.service, class, "service")?;
        let deadline = draw(&mut s.deadline, class, "deadline")?;
        let before = (last_w - (t - last_t)).max(0.0);
        let served = deadline > before;
        let (sojourn, patience, exit_time, exit_cause) = if served {
            let w = before + service;
            (w, deadline + service, t + w, ExitCause::Service)
        } else {
            (before, deadline, t + deadline, ExitCause::Abandonment)
        };
        counts[class] += 1;
        jobs.push(JobRecord {
            class,
            index: counts[class],
            arrival: t,
            service,
            deadline,
            workload_before: before,
            sojourn,
            patience,
            served,
            exit_time,
            exit_cause,
        });
        last_t = t;
        last_w = if served { sojourn } else { before };
        events.push((t, last_w));

        let next = t + draw(&mut s.interarrival, class, "interarrival")?;
        if next <= config.horizon {
            heap.push(Pending { t: next, class });
        }
    }

    Ok(SimTrace::assemble(config.num_classes(), config.horizon, jobs, &events))
}

impl SimTrace {
    /// Drops warm-up history and builds the workload breakpoints from time 0.
    fn assemble(num_classes: usize, horizon: f64, jobs: Vec<JobRecord>, events: &[(f64, f64)]) -> Self {
        let first_live = events.partition_point(|&(t, _)| t <= 0.0);
        let w0 = if first_live == 0 {
            0.0
        } else {
            let (t, w) = events[first_live - 1];
            (w - (0.0 - t)).max(0.0)
        };
        let mut breakpoints = Vec::with_capacity(events.len() - first_live + 1);
        breakpoints.push(Breakpoint {
            t: 0.0,
            workload: w0,
            idle: 0.0,
        });
        for &(t, w) in &events[first_live..] {
            let prev = breakpoints.last().unwrap();
            let idle = prev.idle + ((t - prev.t) - prev.workload).max(0.0);
            breakpoints.push(Breakpoint { t, workload: w, idle });
        }

        let mut jobs: Vec<JobRecord> = jobs.into_iter().filter(|j| j.exit_time > 0.0).collect();
        // renumber so the jobs present at time 0 come first within each class
        let mut counts = vec![0usize; num_classes];
        for j in &mut jobs {
            counts[j.class] += 1;
            j.index = counts[j.class];
        }
        let mut running = f64::NEG_INFINITY;
        let exit_prefix_max = jobs
            .iter()
            .map(|j| {
                running = running.max(j.exit_time);
                running
            })
            .collect();
        SimTrace {
            num_classes,
            horizon,
            jobs,
            breakpoints,
            exit_prefix_max,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn jobs(&self) -> &[JobRecord] {
        &self.jobs
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    fn check_time(&self, t: f64) -> Result<(), SimError> {
        if t >= 0.0 && t <= self.horizon {
            Ok(())
        } else {
            Err(SimError::TimeOutOfRange {
                t,
                horizon: self.horizon,
            })
        }
    }

    /// Jobs that may be present at `t`: everything after the last index whose
    /// prefix of exit times has closed by `t`, up to the last arrival `<= t`.
    fn window(&self, t: f64) -> &[JobRecord] {
        let lo = self.exit_prefix_max.partition_point(|&e| e <= t);
        let hi = self.jobs.partition_point(|j| j.arrival <= t);
        if lo >= hi {
            &[]
        } else {
            &self.jobs[lo..hi]
        }
    }

    fn last_breakpoint(&self, t: f64) -> &Breakpoint {
        let idx = self.breakpoints.partition_point(|b| b.t <= t);
        &self.breakpoints[idx.saturating_sub(1)]
    }

    /// `W(t)`, right-continuous.
    pub fn workload_at(&self, t: f64) -> Result<f64, SimError> {
        self.check_time(t)?;
        let b = self.last_breakpoint(t);
        Ok((b.workload - (t - b.t)).max(0.0))
    }

    /// Cumulative idle time `I(t)` since time 0.
    pub fn idle_at(&self, t: f64) -> Result<f64, SimError> {
        self.check_time(t)?;
        let b = self.last_breakpoint(t);
        Ok(b.idle + ((t - b.t) - b.workload).max(0.0))
    }

    /// State descriptor `𝒵_k(t)` for every class.
    pub fn snapshot(&self, t: f64) -> Result<Vec<AtomicMeasure2D>, SimError> {
        self.check_time(t)?;
        let mut out: Vec<AtomicMeasure2D> =
            (0..self.num_classes).map(AtomicMeasure2D::with_class).collect();
        for job in self.window(t) {
            if let Some((w, p)) = job.residual(t) {
                out[job.class].push(w, p, 1.0);
            }
        }
        Ok(out)
    }

    pub fn queue_lengths(&self, t: f64) -> Result<Vec<QueueCounts>, SimError> {
        self.check_time(t)?;
        let mut out = vec![QueueCounts::default(); self.num_classes];
        for job in self.window(t) {
            if job.residual(t).is_some() {
                let c = &mut out[job.class];
                c.total += 1;
                if job.served {
                    c.nonabandoning += 1;
                } else {
                    c.abandoning += 1;
                }
            }
        }
        Ok(out)
    }

    /// Per class, the number of jobs present at `t` that arrived by `t - u`.
    pub fn age_counts(&self, t: f64, u: f64) -> Result<Vec<usize>, SimError> {
        self.check_time(t)?;
        let mut out = vec![0; self.num_classes];
        for job in self.window(t) {
            if job.arrival <= t - u && job.residual(t).is_some() {
                out[job.class] += 1;
            }
        }
        Ok(out)
    }

    /// Deadline, residual-deadline and residual-deadline-plus-service measures
    /// built from the arrivals in `(0, t]`.
    pub fn residual_deadline_measures(&self, t: f64) -> Result<Vec<DeadlineMeasures>, SimError> {
        self.check_time(t)?;
        let mut out = vec![DeadlineMeasures::default(); self.num_classes];
        let first = self.jobs.partition_point(|j| j.arrival <= 0.0);
        for job in self.jobs[first..].iter().take_while(|j| j.arrival <= t) {
            let age = t - job.arrival;
            let m = &mut out[job.class];
            m.deadlines.push(job.deadline, 1.0);
            m.residual.push(job.deadline - age, 1.0);
            m.residual_with_service.push(job.deadline + job.service - age, 1.0);
        }
        Ok(out)
    }

    /// `class,j,arrival,v,d,workload_before,w,p,served,exit_time,exit_cause`.
    pub fn write_jobs_csv<W: io::Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "class,j,arrival,v,d,workload_before,w,p,served,exit_time,exit_cause"
        )?;
        for j in &self.jobs {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                j.class,
                j.index,
                j.arrival,
                j.service,
                j.deadline,
                j.workload_before,
                j.sojourn,
                j.patience,
                j.served,
                j.exit_time,
                j.exit_cause.as_str()
            )?;
        }
        Ok(())
    }

    /// `t,W` at time 0, at every arrival (post-jump value) and at the horizon.
    pub fn write_workload_csv<W: io::Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "t,W")?;
        for b in &self.breakpoints {
            writeln!(out, "{},{}", b.t, b.workload)?;
        }
        let end = self.workload_at(self.horizon).map_err(io::Error::other)?;
        writeln!(out, "{},{}", self.horizon, end)
    }
}
