//! Deterministic fluid model of the overloaded queue.
//!
//! The workload fluid path solves `w'(t) = Σ_k ρ_k G_k(w(t)) - 1`. The
//! measure-valued fluid state is never materialised: each class measure is
//! evaluated on boxes in closed form, by shifting the initial measure along
//! the diagonal and integrating arriving fluid between the two arrival times
//! `τ(a + t)` and `τ(b + t)` that bracket the box's first coordinate.

use std::io;

use thiserror::Error;

use crate::distributions::{Distribution, DistributionError};
use crate::measures::{MeasureError, Rect};
use crate::numerics::{adaptive_gauss_legendre, bisect_predicate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidError {
    #[error("system is not overloaded: rho = {0} <= 1")]
    NotOverloaded(f64),
    #[error("class {class}: {what} must be finite and positive, got {value}")]
    InvalidRate {
        class: usize,
        what: &'static str,
        value: f64,
    },
    #[error("at least one class is required")]
    NoClasses,
    #[error("class {class} deadline: {source}")]
    Deadline {
        class: usize,
        source: DistributionError,
    },
    #[error("class index {0} out of range")]
    ClassOutOfRange(usize),
    #[error("initial measure: {0}")]
    InitialMeasure(String),
    #[error("initial workload {w0} exceeds the maximal deadline {d_max}")]
    ExceedsMaxDeadline { w0: f64, d_max: f64 },
    #[error("initial workload must be finite and nonnegative, got {0}")]
    InvalidWorkload(f64),
    #[error("w = {w} lies outside the equilibrium band [{lower}, {upper}]")]
    OutsideBand { w: f64, lower: f64, upper: f64 },
    #[error("time {t} outside the solved horizon [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("age {u} exceeds time {t}")]
    AgeExceedsTime { u: f64, t: f64 },
    #[error("horizon and tolerance must be positive (horizon may be 0), got T = {horizon}, tol = {tol}")]
    InvalidSolverSettings { horizon: f64, tol: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Rates and deadline law of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidClass {
    pub lambda: f64,
    pub mu: f64,
    pub deadline: Distribution,
}

/// Supercritical fluid data `(λ, μ, Γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidModelInput {
    classes: Vec<FluidClass>,
}

/// Endpoints of the fixed-point set `{u : Σ ρ_k G_k(u) = 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumBand {
    pub lower: f64,
    pub upper: f64,
}

const BAND_TOL: f64 = 1e-13;
const BAND_MEMBERSHIP_SLACK: f64 = 1e-10;

impl FluidModelInput {
    pub fn new(classes: Vec<FluidClass>) -> Result<Self, FluidError> {
        if classes.is_empty() {
            return Err(FluidError::NoClasses);
        }
        for (k, c) in classes.iter().enumerate() {
            for (what, value) in [("lambda", c.lambda), ("mu", c.mu)] {
                if !(value.is_finite() && value > 0.0) {
                    return Err(FluidError::InvalidRate { class: k, what, value });
                }
            }
            c.deadline
                .validate_deadline()
                .map_err(|source| FluidError::Deadline { class: k, source })?;
        }
        let input = FluidModelInput { classes };
        let rho = input.rho();
        if !(rho > 1.0) {
            return Err(FluidError::NotOverloaded(rho));
        }
        Ok(input)
    }

    pub fn classes(&self) -> &[FluidClass] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, k: usize) -> Result<&FluidClass, FluidError> {
        self.classes.get(k).ok_or(FluidError::ClassOutOfRange(k))
    }

    pub fn rho_k(&self, k: usize) -> f64 {
        self.classes[k].lambda / self.classes[k].mu
    }

    pub fn rho(&self) -> f64 {
        (0..self.classes.len()).map(|k| self.rho_k(k)).sum()
    }

    pub fn d_max(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| c.deadline.sup_support())
            .fold(0.0, f64::max)
    }

    /// `Σ_k ρ_k G_k(u)`.
    pub fn offered_survival(&self, u: f64) -> f64 {
        self.classes
            .iter()
            .map(|c| c.lambda / c.mu * c.deadline.survival_ext(u))
            .sum()
    }

    /// Right-hand side of the workload fluid equation.
    pub fn drift(&self, w: f64) -> f64 {
        self.offered_survival(w) - 1.0
    }

    /// The equilibrium band `[w_l, w_u]`, located by bisection.
    pub fn equilibrium_band(&self) -> EquilibriumBand {
        let mut upper_bracket = self.d_max();
        if !upper_bracket.is_finite() {
            upper_bracket = 1.0;
            while self.drift(upper_bracket) >= 0.0 {
                upper_bracket *= 2.0;
            }
        }
        let (_, lower) = bisect_predicate(0.0, upper_bracket, BAND_TOL, |u| self.drift(u) <= 0.0);
        let (upper, _) = bisect_predicate(0.0, upper_bracket, BAND_TOL, |u| self.drift(u) < 0.0);
        EquilibriumBand {
            lower,
            upper: upper.max(lower),
        }
    }

    pub fn in_band(&self, w: f64) -> bool {
        let band = self.equilibrium_band();
        w >= band.lower - BAND_MEMBERSHIP_SLACK && w <= band.upper + BAND_MEMBERSHIP_SLACK
    }

    /// `ℛ*_k(t)([c, ∞)) = λ_k ∫_c^{c+t} G_k(u) du`, the fluid limit of the
    /// residual-deadline measures.
    pub fn residual_deadline_limit(&self, k: usize, t: f64, c: f64) -> Result<f64, FluidError> {
        let class = self.class(k)?;
        Ok(class.lambda * class.deadline.survival_integral_unchecked(c, c + t))
    }

    /// `z_k^w = λ_k ∫_0^w G_k`.
    pub fn invariant_queue_length(&self, k: usize, w: f64) -> f64 {
        let c = &self.classes[k];
        c.lambda * c.deadline.survival_integral_unchecked(0.0, w)
    }

    /// `n_k^w = λ_k w G_k(w)`.
    pub fn invariant_nonabandoning(&self, k: usize, w: f64) -> f64 {
        let c = &self.classes[k];
        c.lambda * w * c.deadline.survival_ext(w)
    }

    /// Rejects a negative initial workload or one beyond the largest deadline.
    pub fn check_initial_workload(&self, w0: f64) -> Result<(), FluidError> {
        if !(w0.is_finite() && w0 >= 0.0) {
            return Err(FluidError::InvalidWorkload(w0));
        }
        let d_max = self.d_max();
        if w0 > d_max {
            return Err(FluidError::ExceedsMaxDeadline { w0, d_max });
        }
        Ok(())
    }
}

/// A positive-area box of uniformly spread initial mass for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialBox {
    pub class: usize,
    pub rect: Rect,
    pub mass: f64,
}

/// Initial fluid measures supported by the closed-form evaluator.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialFluidMeasure {
    Zero,
    /// The invariant state `θ^w` for `w` in the equilibrium band.
    Invariant { w: f64 },
    /// Piecewise-constant densities.
    BoxMixture(Vec<InitialBox>),
}

/// Area of `rect ∩ {(w, p) : w < p}` for a bounded box.
fn area_above_diagonal(rect: &Rect) -> f64 {
    if rect.is_empty() {
        return 0.0;
    }
    let Rect { a, b, c, d } = *rect;
    let mut area = 0.0;
    // w <= c: the whole column [c, d) lies above the diagonal
    let hi = b.min(c);
    if hi > a {
        area += (hi - a) * (d - c);
    }
    // c < w < d: column (w, d)
    let lo = a.max(c);
    let hi = b.min(d);
    if hi > lo {
        area += 0.5 * ((d - lo) * (d - lo) - (d - hi) * (d - hi));
    }
    area
}

impl InitialFluidMeasure {
    /// `w_ϑ`, the right edge of the support of the superposition.
    pub fn right_edge(&self) -> f64 {
        match self {
            InitialFluidMeasure::Zero => 0.0,
            InitialFluidMeasure::Invariant { w } => *w,
            InitialFluidMeasure::BoxMixture(boxes) => {
                boxes.iter().map(|b| b.rect.b).fold(0.0, f64::max)
            }
        }
    }

    /// Checks that the measure is finite, charges no lines and has support
    /// within the largest deadline; invariant states must lie in the band.
    pub fn validate(&self, input: &FluidModelInput) -> Result<(), FluidError> {
        match self {
            InitialFluidMeasure::Zero => {}
            InitialFluidMeasure::Invariant { w } => {
                if !input.in_band(*w) {
                    let band = input.equilibrium_band();
                    return Err(FluidError::OutsideBand {
                        w: *w,
                        lower: band.lower,
                        upper: band.upper,
                    });
                }
            }
            InitialFluidMeasure::BoxMixture(boxes) => {
                for (i, b) in boxes.iter().enumerate() {
                    input.class(b.class)?;
                    let r = b.rect;
                    if !(r.b.is_finite() && r.d.is_finite()) {
                        return Err(FluidError::InitialMeasure(format!(
                            "box {i} must be bounded"
                        )));
                    }
                    if !(r.a < r.b && r.c < r.d) {
                        return Err(FluidError::InitialMeasure(format!(
                            "box {i} has zero area and would charge a line"
                        )));
                    }
                    if !(b.mass.is_finite() && b.mass > 0.0) {
                        return Err(FluidError::InitialMeasure(format!(
                            "box {i} mass must be finite and positive"
                        )));
                    }
                }
            }
        }
        input.check_initial_workload(self.right_edge())
    }

    /// `ϑ_k(rect)`.
    pub fn eval(&self, input: &FluidModelInput, k: usize, rect: &Rect) -> f64 {
        match self {
            InitialFluidMeasure::Zero => 0.0,
            InitialFluidMeasure::Invariant { w } => invariant_box_mass(input, k, *w, rect),
            InitialFluidMeasure::BoxMixture(boxes) => boxes
                .iter()
                .filter(|b| b.class == k)
                .map(|b| b.mass * b.rect.intersect(rect).area() / b.rect.area())
                .sum(),
        }
    }

    /// `ϑ_k({(w, p) : w ≥ t, p ≥ t, w < p})`, the part of `U_t`.
    fn eval_upper(&self, input: &FluidModelInput, k: usize, t: f64) -> f64 {
        match self {
            InitialFluidMeasure::Zero => 0.0,
            InitialFluidMeasure::Invariant { w } => {
                let c = &input.classes[k];
                c.lambda * (w - t).max(0.0) * c.deadline.survival_ext(*w)
            }
            InitialFluidMeasure::BoxMixture(boxes) => {
                let quadrant = Rect::upper_right(t, t).expect("t is nonnegative");
                boxes
                    .iter()
                    .filter(|b| b.class == k)
                    .map(|b| b.mass * area_above_diagonal(&b.rect.intersect(&quadrant)) / b.rect.area())
                    .sum()
            }
        }
    }
}

/// `θ_k^w([a, b) x [c, d)) = λ_k ∫_{w-b}^{w-a} Γ_k([c+u, d+u)) du`, with the
/// box clipped to `[0, w)` in its first coordinate.
fn invariant_box_mass(input: &FluidModelInput, k: usize, w: f64, rect: &Rect) -> f64 {
    let b = rect.b.min(w);
    if rect.a >= b || rect.c >= rect.d {
        return 0.0;
    }
    let class = &input.classes[k];
    let g = &class.deadline;
    let (u_lo, u_hi) = (w - b, w - rect.a);
    let mut mass = g.survival_integral_unchecked(rect.c + u_lo, rect.c + u_hi);
    if rect.d.is_finite() {
        mass -= g.survival_integral_unchecked(rect.d + u_lo, rect.d + u_hi);
    }
    (class.lambda * mass).max(0.0)
}

/// The invariant state `θ^w` together with its closed-form functionals.
#[derive(Debug, Clone, Copy)]
pub struct InvariantState<'a> {
    input: &'a FluidModelInput,
    w: f64,
}

/// Builds `θ^w`; `w` must lie in the equilibrium band.
pub fn invariant_state(input: &FluidModelInput, w: f64) -> Result<InvariantState<'_>, FluidError> {
    let state = InitialFluidMeasure::Invariant { w };
    state.validate(input)?;
    Ok(InvariantState { input, w })
}

impl<'a> InvariantState<'a> {
    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn eval(&self, k: usize, rect: &Rect) -> f64 {
        invariant_box_mass(self.input, k, self.w, rect)
    }

    pub fn queue_length(&self, k: usize) -> f64 {
        self.input.invariant_queue_length(k, self.w)
    }

    pub fn nonabandoning(&self, k: usize) -> f64 {
        self.input.invariant_nonabandoning(k, self.w)
    }

    pub fn as_initial(&self) -> InitialFluidMeasure {
        InitialFluidMeasure::Invariant { w: self.w }
    }
}

/// Workload fluid path on a uniform grid.
///
/// Interpolation acts on `g(s) = w(s) + s` with Hermite cubics whose node
/// slopes are the exact ODE slopes `Σ ρ_k G_k(w)`, clipped by the
/// Fritsch-Carlson condition so `g` stays monotone between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadPath {
    horizon: f64,
    step: f64,
    g: Vec<f64>,
    slope: Vec<f64>,
}

const MAX_STEPS: usize = 1 << 24;
const MIN_STEPS: usize = 16;

fn rk4_path(input: &FluidModelInput, w0: f64, horizon: f64, steps: usize) -> Vec<f64> {
    let h = horizon / steps as f64;
    let mut w = Vec::with_capacity(steps + 1);
    let mut x = w0;
    w.push(x);
    for _ in 0..steps {
        let k1 = input.drift(x);
        let k2 = input.drift(x + 0.5 * h * k1);
        let k3 = input.drift(x + 0.5 * h * k2);
        let k4 = input.drift(x + h * k3);
        x = (x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).max(0.0);
        w.push(x);
    }
    w
}

/// Solves the workload fluid equation on `[0, horizon]` with RK4, halving
/// the step until two successive resolutions agree to `tol` at every shared
/// node.
pub fn solve_workload(
    input: &FluidModelInput,
    w0: f64,
    horizon: f64,
    tol: f64,
) -> Result<WorkloadPath, FluidError> {
    input.check_initial_workload(w0)?;
    if !(horizon.is_finite() && horizon >= 0.0 && tol.is_finite() && tol > 0.0) {
        return Err(FluidError::InvalidSolverSettings { horizon, tol });
    }
    if horizon == 0.0 {
        return Ok(WorkloadPath::from_nodes(input, vec![w0], 0.0));
    }
    let h0 = tol.powf(0.25).min(0.05);
    let mut steps = ((horizon / h0).ceil() as usize).max(MIN_STEPS);
    let mut coarse = rk4_path(input, w0, horizon, steps);
    loop {
        let fine = rk4_path(input, w0, horizon, 2 * steps);
        let gap = coarse
            .iter()
            .enumerate()
            .map(|(i, c)| (c - fine[2 * i]).abs())
            .fold(0.0, f64::max);
        steps *= 2;
        if gap <= tol || steps >= MAX_STEPS {
            return Ok(WorkloadPath::from_nodes(input, fine, horizon));
        }
        coarse = fine;
    }
}

impl WorkloadPath {
    fn from_nodes(input: &FluidModelInput, w: Vec<f64>, horizon: f64) -> Self {
        let n = w.len();
        let step = if n > 1 { horizon / (n - 1) as f64 } else { 0.0 };
        let g: Vec<f64> = w
            .iter()
            .enumerate()
            .map(|(i, wi)| wi + i as f64 * step)
            .collect();
        let mut slope: Vec<f64> = w.iter().map(|&wi| input.offered_survival(wi)).collect();
        for i in 0..n.saturating_sub(1) {
            let secant = (g[i + 1] - g[i]) / step;
            if secant <= 0.0 {
                slope[i] = 0.0;
                slope[i + 1] = 0.0;
                continue;
            }
            let alpha = slope[i] / secant;
            let beta = slope[i + 1] / secant;
            let r2 = alpha * alpha + beta * beta;
            if r2 > 9.0 {
                let scale = 3.0 / r2.sqrt();
                slope[i] = scale * alpha * secant;
                slope[i + 1] = scale * beta * secant;
            }
        }
        WorkloadPath {
            horizon,
            step,
            g,
            slope,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn num_nodes(&self) -> usize {
        self.g.len()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn initial(&self) -> f64 {
        self.g[0]
    }

    /// Node values `(t_i, w(t_i))`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.g
            .iter()
            .enumerate()
            .map(move |(i, gi)| {
                let t = i as f64 * self.step;
                (t, gi - t)
            })
    }

    /// `g(s) = w(s) + s` for `s ∈ [0, horizon]`.
    fn g_at(&self, s: f64) -> f64 {
        if self.g.len() == 1 || s <= 0.0 {
            return self.g[0] + s.max(0.0);
        }
        let last = self.g.len() - 1;
        let i = ((s / self.step) as usize).min(last - 1);
        let h = self.step;
        let x = ((s - i as f64 * h) / h).clamp(0.0, 1.0);
        let x2 = x * x;
        let x3 = x2 * x;
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        h00 * self.g[i] + h10 * h * self.slope[i] + h01 * self.g[i + 1] + h11 * h * self.slope[i + 1]
    }

    /// `w(t)`; arguments are clamped to `[0, horizon]`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon);
        (self.g_at(t) - t).max(0.0)
    }

    /// `min(τ(x), cap)` where `τ(x) = inf{s ≥ 0 : w(s) + s ≥ x}`; only the
    /// path on `[0, cap]` is consulted.
    pub fn arrival_time_capped(&self, x: f64, cap: f64) -> f64 {
        if x <= self.g[0] {
            return 0.0;
        }
        if x >= self.g_at(cap) {
            return cap;
        }
        // narrow to one grid cell, then bisect on the cubic
        let (mut lo, mut hi) = (0.0, cap);
        if self.g.len() > 1 {
            let last_node = ((cap / self.step) as usize).min(self.g.len() - 1);
            let idx = self.g[..=last_node].partition_point(|&gi| gi < x);
            if idx > 0 {
                lo = (idx - 1) as f64 * self.step;
            }
            if idx <= last_node {
                hi = (idx as f64 * self.step).min(cap);
            }
        }
        let (_, s) = bisect_predicate(lo, hi, 1e-14, |s| self.g_at(s) >= x);
        s
    }
}

/// Unique fluid model solution for given data and initial measure.
#[derive(Debug, Clone)]
pub struct FluidSolution {
    input: FluidModelInput,
    initial: InitialFluidMeasure,
    path: WorkloadPath,
}

/// Absolute tolerance for the `∫ G_k(w(v)) dv` quadrature.
const QUAD_TOL: f64 = 1e-12;
const SUPPORT_MASS_FLOOR: f64 = 1e-13;

impl FluidSolution {
    pub fn new(
        input: FluidModelInput,
        initial: InitialFluidMeasure,
        horizon: f64,
        tol: f64,
    ) -> Result<Self, FluidError> {
        initial.validate(&input)?;
        let path = solve_workload(&input, initial.right_edge(), horizon, tol)?;
        Ok(FluidSolution {
            input,
            initial,
            path,
        })
    }

    pub fn input(&self) -> &FluidModelInput {
        &self.input
    }

    pub fn initial(&self) -> &InitialFluidMeasure {
        &self.initial
    }

    pub fn path(&self) -> &WorkloadPath {
        &self.path
    }

    pub fn horizon(&self) -> f64 {
        self.path.horizon
    }

    fn check_time(&self, t: f64) -> Result<(), FluidError> {
        if t >= 0.0 && t <= self.path.horizon {
            Ok(())
        } else {
            Err(FluidError::TimeOutOfRange {
                t,
                horizon: self.path.horizon,
            })
        }
    }

    fn check_class(&self, k: usize) -> Result<&FluidClass, FluidError> {
        self.input.class(k)
    }

    pub fn workload(&self, t: f64) -> Result<f64, FluidError> {
        self.check_time(t)?;
        Ok(self.path.eval(t))
    }

    /// `τ(t) = inf{0 ≤ s ≤ t : w(s) + s ≥ t}`.
    pub fn tau(&self, t: f64) -> Result<f64, FluidError> {
        self.check_time(t)?;
        Ok(self.path.arrival_time_capped(t, t))
    }

    /// `ζ_k(t)(rect)`.
    pub fn eval(&self, k: usize, t: f64, rect: &Rect) -> Result<f64, FluidError> {
        self.check_time(t)?;
        let class = self.check_class(k)?;
        let initial = self.initial.eval(&self.input, k, &rect.shifted(t));
        if t == 0.0 || rect.is_empty() {
            return Ok(initial);
        }
        let s_lo = self.path.arrival_time_capped(rect.a + t, t);
        let s_hi = if rect.b.is_finite() {
            self.path.arrival_time_capped(rect.b + t, t)
        } else {
            t
        };
        if s_hi <= s_lo {
            return Ok(initial);
        }
        // ∫_{s_lo}^{s_hi} G(c + t - s) - G(d + t - s) ds with u = t - s
        let g = &class.deadline;
        let (u_lo, u_hi) = (t - s_hi, t - s_lo);
        let mut arrived = g.survival_integral_unchecked(rect.c + u_lo, rect.c + u_hi);
        if rect.d.is_finite() {
            arrived -= g.survival_integral_unchecked(rect.d + u_lo, rect.d + u_hi);
        }
        Ok(initial + (class.lambda * arrived).max(0.0))
    }

    /// Superposition `ζ_+(t)(rect)`.
    pub fn eval_superposition(&self, t: f64, rect: &Rect) -> Result<f64, FluidError> {
        (0..self.input.num_classes()).try_fold(0.0, |acc, k| Ok(acc + self.eval(k, t, rect)?))
    }

    /// Box evaluator of `ζ_k(t)` usable with [`crate::measures::rect_distance`].
    pub fn class_measure(&self, k: usize, t: f64) -> Result<impl Fn(&Rect) -> f64 + '_, FluidError> {
        self.check_time(t)?;
        self.check_class(k)?;
        Ok(move |r: &Rect| self.eval(k, t, r).expect("time and class checked"))
    }

    /// `∫_lo^hi G_k(w(v)) dv`.
    fn served_fraction_integral(&self, k: usize, lo: f64, hi: f64) -> f64 {
        let g = &self.input.classes[k].deadline;
        adaptive_gauss_legendre(|v| g.survival_ext(self.path.eval(v)), lo, hi, QUAD_TOL)
    }

    /// `z_k(t) = ζ_k(t)(R_+^2)`.
    pub fn queue_length(&self, k: usize, t: f64) -> Result<f64, FluidError> {
        self.check_time(t)?;
        let class = self.check_class(k)?;
        let g = &class.deadline;
        let w0 = self.path.initial();
        if t < w0 {
            let shifted = Rect::upper_right(t, t)?;
            Ok(self.initial.eval(&self.input, k, &shifted)
                + class.lambda * g.survival_integral_unchecked(0.0, t))
        } else {
            let age = self.path.eval(self.path.arrival_time_capped(t, t));
            Ok(class.lambda * g.survival_integral_unchecked(0.0, age))
        }
    }

    /// `n_k(t) = ζ_k(t)(U)` with `U = {w < p}`.
    pub fn nonabandoning(&self, k: usize, t: f64) -> Result<f64, FluidError> {
        self.check_time(t)?;
        let class = self.check_class(k)?;
        let w0 = self.path.initial();
        if t < w0 {
            Ok(self.initial.eval_upper(&self.input, k, t)
                + class.lambda * self.served_fraction_integral(k, 0.0, t))
        } else {
            let tau = self.path.arrival_time_capped(t, t);
            Ok(class.lambda * self.served_fraction_integral(k, tau, t))
        }
    }

    /// `a_k(t) = ζ_k(t)(L)` with `L = {p ≤ w}`.
    pub fn abandoning(&self, k: usize, t: f64) -> Result<f64, FluidError> {
        self.check_time(t)?;
        let class = self.check_class(k)?;
        let g = &class.deadline;
        let w0 = self.path.initial();
        if t < w0 {
            let shifted = Rect::upper_right(t, t)?;
            let initial_lower = self.initial.eval(&self.input, k, &shifted)
                - self.initial.eval_upper(&self.input, k, t);
            Ok(initial_lower
                + class.lambda
                    * (g.survival_integral_unchecked(0.0, t) - self.served_fraction_integral(k, 0.0, t)))
        } else {
            let tau = self.path.arrival_time_capped(t, t);
            Ok(class.lambda
                * (g.survival_integral_unchecked(0.0, t - tau) - self.served_fraction_integral(k, tau, t)))
        }
    }

    /// `z_k(t, u)`: class-k fluid in system at `t` of age at least `u`.
    pub fn age_count(&self, k: usize, t: f64, u: f64) -> Result<f64, FluidError> {
        self.check_time(t)?;
        let class = self.check_class(k)?;
        if !(u >= 0.0 && u <= t) {
            return Err(FluidError::AgeExceedsTime { u, t });
        }
        let g = &class.deadline;
        let w0 = self.path.initial();
        if t < w0 {
            let width = (self.path.eval(t - u) - u).max(0.0);
            let region = Rect::new(t, t + width, t, f64::INFINITY)?;
            Ok(self.initial.eval(&self.input, k, &region)
                + class.lambda * g.survival_integral_unchecked(u, t))
        } else {
            let oldest = self.path.eval(self.path.arrival_time_capped(t, t));
            if u < oldest {
                Ok(class.lambda * g.survival_integral_unchecked(u, oldest))
            } else {
                Ok(0.0)
            }
        }
    }

    /// Upper bound on `ζ_+(t)(C^κ_{(x,y)})` from two covering stripes.
    pub fn corner_mass(&self, t: f64, x: f64, y: f64, kappa: f64) -> Result<f64, FluidError> {
        if !(kappa > 0.0) {
            return Err(MeasureError::NonPositiveKappa(kappa).into());
        }
        let vertical = Rect::new((x - kappa).max(0.0), x + kappa, 0.0, f64::INFINITY)?;
        let horizontal = Rect::new(0.0, f64::INFINITY, (y - kappa).max(0.0), y + kappa)?;
        Ok(self.eval_superposition(t, &vertical)? + self.eval_superposition(t, &horizontal)?)
    }

    /// Right edge of the support of `ζ_+(t)`, found by bisection on
    /// `x ↦ ζ_+(t)([x, ∞) x R_+)`.
    pub fn support_right_edge(&self, t: f64) -> Result<f64, FluidError> {
        self.check_time(t)?;
        let tail = |x: f64| {
            let r = Rect::upper_right(x, 0.0).expect("x is nonnegative");
            self.eval_superposition(t, &r).expect("time checked")
        };
        let mut hi = self.initial.right_edge().max(self.path.eval(t)) + 1.0;
        while tail(hi) > SUPPORT_MASS_FLOOR {
            hi *= 2.0;
        }
        if tail(0.0) <= SUPPORT_MASS_FLOOR {
            return Ok(0.0);
        }
        let (lo, _) = bisect_predicate(0.0, hi, 1e-12, |x| tail(x) <= SUPPORT_MASS_FLOOR);
        Ok(lo)
    }

    /// Writes `t,w,tau` rows on the grid `0, step, 2 step, ...` up to the horizon.
    pub fn write_workload_csv<W: io::Write>(&self, out: &mut W, step: f64) -> io::Result<()> {
        writeln!(out, "t,w,tau")?;
        for t in output_grid(self.horizon(), step) {
            let w = self.path.eval(t);
            let tau = self.path.arrival_time_capped(t, t);
            writeln!(out, "{t},{w},{tau}")?;
        }
        Ok(())
    }

    /// Writes `t,class,z,n,a` rows on the output grid.
    pub fn write_functionals_csv<W: io::Write>(&self, out: &mut W, step: f64) -> io::Result<()> {
        writeln!(out, "t,class,z,n,a")?;
        for t in output_grid(self.horizon(), step) {
            for k in 0..self.input.num_classes() {
                let z = self.queue_length(k, t).map_err(io::Error::other)?;
                let n = self.nonabandoning(k, t).map_err(io::Error::other)?;
                let a = self.abandoning(k, t).map_err(io::Error::other)?;
                writeln!(out, "{t},{k},{z},{n},{a}")?;
            }
        }
        Ok(())
    }
}

/// `0, step, 2 step, ...` through `horizon`, always ending at `horizon`.
pub fn output_grid(horizon: f64, step: f64) -> Vec<f64> {
    if !(horizon > 0.0) || !(step > 0.0) {
        return vec![0.0];
    }
    let n = (horizon / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(horizon)).collect();
    if horizon - grid[n] > 1e-9 * step {
        grid.push(horizon);
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mm1m() -> FluidModelInput {
        FluidModelInput::new(vec![FluidClass {
            lambda: 2.0,
            mu: 1.0,
            deadline: Distribution::exponential(1.0),
        }])
        .unwrap()
    }

    fn single(deadline: Distribution) -> FluidModelInput {
        FluidModelInput::new(vec![FluidClass {
            lambda: 2.0,
            mu: 1.0,
            deadline,
        }])
        .unwrap()
    }

    #[test]
    fn band_examples() {
        let ln2 = 2f64.ln();
        let band = mm1m().equilibrium_band();
        assert_abs_diff_eq!(band.lower, ln2, epsilon = 1e-12);
        assert_abs_diff_eq!(band.upper, ln2, epsilon = 1e-12);

        let band = single(Distribution::uniform(0.0, 2.0)).equilibrium_band();
        assert_abs_diff_eq!(band.lower, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(band.upper, 1.0, epsilon = 1e-12);

        let gapped = single(Distribution::uniform_mixture(&[(0.5, 0.0, 1.0), (0.5, 2.0, 3.0)]));
        let band = gapped.equilibrium_band();
        assert_abs_diff_eq!(band.lower, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(band.upper, 2.0, epsilon = 1e-12);
        assert!(band.upper < gapped.d_max());
    }

    #[test]
    fn underloaded_rejected() {
        let err = FluidModelInput::new(vec![FluidClass {
            lambda: 0.5,
            mu: 1.0,
            deadline: Distribution::exponential(1.0),
        }]);
        assert_eq!(err, Err(FluidError::NotOverloaded(0.5)));
        let err = FluidModelInput::new(vec![FluidClass {
            lambda: 2.0,
            mu: 1.0,
            deadline: Distribution::deterministic(1.0),
        }]);
        assert!(matches!(err, Err(FluidError::Deadline { .. })));
    }

    #[test]
    fn workload_fixed_point_and_limit() {
        let input = mm1m();
        let ln2 = 2f64.ln();
        let path = solve_workload(&input, ln2, 5.0, 1e-10).unwrap();
        for (_, w) in path.nodes() {
            assert_abs_diff_eq!(w, ln2, epsilon = 1e-12);
        }
        let path = solve_workload(&input, 0.0, 40.0, 1e-10).unwrap();
        assert_abs_diff_eq!(path.eval(40.0), ln2, epsilon = 1e-12);
        assert_abs_diff_eq!(path.eval(1.0), (2.0 - (-1f64).exp()).ln(), epsilon = 1e-10);
    }

    #[test]
    fn bounded_deadline_guard() {
        let input = single(Distribution::uniform(0.0, 2.0));
        assert!(matches!(
            solve_workload(&input, 2.5, 1.0, 1e-8),
            Err(FluidError::ExceedsMaxDeadline { .. })
        ));
        // w0 = d_max is admissible and decreases at slope 1 initially
        let path = solve_workload(&input, 2.0, 1.0, 1e-10).unwrap();
        assert!(path.eval(0.1) < 2.0);
    }

    #[test]
    fn tau_examples() {
        let ln2 = 2f64.ln();
        let at_rest =
            FluidSolution::new(mm1m(), InitialFluidMeasure::Invariant { w: ln2 }, 5.0, 1e-10).unwrap();
        assert_eq!(at_rest.tau(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(at_rest.tau(2.0).unwrap(), 2.0 - ln2, epsilon = 1e-10);
        assert!(at_rest.tau(6.0).is_err());
    }

    #[test]
    fn area_above_diagonal_cases() {
        let r = |a, b, c, d| Rect::new(a, b, c, d).unwrap();
        assert_abs_diff_eq!(area_above_diagonal(&r(0.0, 1.0, 0.0, 1.0)), 0.5);
        assert_abs_diff_eq!(area_above_diagonal(&r(0.0, 1.0, 2.0, 3.0)), 1.0);
        assert_abs_diff_eq!(area_above_diagonal(&r(2.0, 3.0, 0.0, 1.0)), 0.0);
        assert_abs_diff_eq!(area_above_diagonal(&r(0.0, 2.0, 1.0, 3.0)), 3.5);
    }

    #[test]
    fn box_mixture_validation() {
        let input = single(Distribution::uniform(0.0, 2.0));
        let boxed = |a, b, c, d| InitialFluidMeasure::BoxMixture(vec![InitialBox {
            class: 0,
            rect: Rect::new(a, b, c, d).unwrap(),
            mass: 1.0,
        }]);
        assert!(boxed(0.0, 1.0, 0.0, 1.0).validate(&input).is_ok());
        assert!(matches!(
            boxed(0.0, 0.0, 0.0, 1.0).validate(&input),
            Err(FluidError::InitialMeasure(_))
        ));
        assert!(matches!(
            boxed(0.0, 3.0, 0.0, 1.0).validate(&input),
            Err(FluidError::ExceedsMaxDeadline { .. })
        ));
        assert!(matches!(
            InitialFluidMeasure::Invariant { w: 1.5 }.validate(&input),
            Err(FluidError::OutsideBand { .. })
        ));
    }

    #[test]
    fn output_grid_ends_at_horizon() {
        assert_eq!(output_grid(0.0, 0.1), vec![0.0]);
        let g = output_grid(1.0, 0.3);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(output_grid(1.0, 0.25).len(), 5);
    }
}
