//! Simulation and fluid approximation of an overloaded multiclass FIFO
//! queue with reneging.
//!
//! The queue state is kept as a pair of measures per class on
//! `(waiting time, residual patience)`. [`simulator`] produces exact sample
//! paths, [`fluid_model`] solves the deterministic limit, and [`scaling`]
//! compares the two as the system is accelerated.

pub mod distributions;
pub mod exec;
pub mod fluid_model;
pub mod measures;
pub mod numerics;
pub mod scaling;
pub mod simulator;

pub use distributions::{Distribution, DistributionError, VariateStream};
pub use exec::Execution;
pub use fluid_model::{
    EquilibriumBand, FluidClass, FluidError, FluidModelInput, FluidSolution, InitialBox,
    InitialFluidMeasure, InvariantState, WorkloadPath,
};
pub use measures::{AtomicMeasure1D, AtomicMeasure2D, BoxMeasure, MeasureError, Rect};
pub use scaling::{HarnessError, MetricSet, ReportRow, ScalingPlan, ScalingReport, SummaryEntry};
pub use simulator::{ClassLaws, InitialCondition, SimConfig, SimError, SimTrace};
