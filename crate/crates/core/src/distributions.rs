//! Probability laws for interarrival, service and deadline times.
//!
//! Every family has a closed-form survival function and a closed-form
//! survival integral `∫_a^b G(u) du`. The fluid formulas are evaluated
//! through these integrals, so no family here may fall back to quadrature.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
    #[error("integration bounds out of order: a = {a} > b = {b}")]
    ReversedBounds { a: f64, b: f64 },
    #[error("deadline law must have a continuous distribution, {0} does not")]
    DiscontinuousDeadline(&'static str),
    #[error("replay sequence of length {0} exhausted")]
    ReplayExhausted(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpPhase {
    pub weight: f64,
    pub rate: f64,
}

/// A positive random variable with finite mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Exponential { rate: f64 },
    UniformInterval { lo: f64, hi: f64 },
    UniformMixture { components: Vec<MixtureComponent> },
    Deterministic { value: f64 },
    HyperExponential { phases: Vec<ExpPhase> },
    /// Explicit finite sample list, consumed in order. Intended for scripted
    /// traces in tests; its distributional functions are those of the
    /// empirical law of `values`.
    Replay { values: Vec<f64> },
}

const WEIGHT_SUM_TOL: f64 = 1e-12;

fn check_finite_positive(name: &str, x: f64) -> Result<(), DistributionError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(DistributionError::InvalidParameter(format!(
            "{name} must be finite and positive, got {x}"
        )))
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<(), DistributionError> {
    if lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi {
        Ok(())
    } else {
        Err(DistributionError::InvalidParameter(format!(
            "uniform interval requires 0 <= lo < hi < inf, got [{lo}, {hi}]"
        )))
    }
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<(), DistributionError> {
    let mut total = 0.0;
    let mut count = 0;
    for w in weights {
        check_finite_positive("mixture weight", w)?;
        total += w;
        count += 1;
    }
    if count == 0 {
        return Err(DistributionError::InvalidParameter(
            "mixture needs at least one component".into(),
        ));
    }
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(DistributionError::InvalidParameter(format!(
            "mixture weights must sum to 1, got {total}"
        )));
    }
    Ok(())
}

/// `∫_0^x G(u) du` for the uniform law on `[lo, hi]`.
fn uniform_cumulative_survival(lo: f64, hi: f64, x: f64) -> f64 {
    if x <= lo {
        x
    } else if x < hi {
        let width = hi - lo;
        let left = hi - x;
        lo + (width * width - left * left) / (2.0 * width)
    } else {
        lo + 0.5 * (hi - lo)
    }
}

fn uniform_survival(lo: f64, hi: f64, x: f64) -> f64 {
    if x < lo {
        1.0
    } else if x < hi {
        (hi - x) / (hi - lo)
    } else {
        0.0
    }
}

/// `∫_a^b e^{-r u} du`, accurate for short intervals.
fn exp_survival_integral(rate: f64, a: f64, b: f64) -> f64 {
    -(-rate * a).exp() * (-rate * (b - a)).exp_m1() / rate
}

/// Uniform variate on the open interval (0, 1) built from the top 53 bits of
/// one 64-bit draw, so the value is identical on every platform.
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

impl Distribution {
    pub fn exponential(rate: f64) -> Self {
        Distribution::Exponential { rate }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Distribution::UniformInterval { lo, hi }
    }

    pub fn uniform_mixture(parts: &[(f64, f64, f64)]) -> Self {
        Distribution::UniformMixture {
            components: parts
                .iter()
                .map(|&(weight, lo, hi)| MixtureComponent { weight, lo, hi })
                .collect(),
        }
    }

    pub fn deterministic(value: f64) -> Self {
        Distribution::Deterministic { value }
    }

    pub fn hyper_exponential(parts: &[(f64, f64)]) -> Self {
        Distribution::HyperExponential {
            phases: parts
                .iter()
                .map(|&(weight, rate)| ExpPhase { weight, rate })
                .collect(),
        }
    }

    pub fn replay(values: Vec<f64>) -> Self {
        Distribution::Replay { values }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Distribution::Exponential { .. } => "exponential",
            Distribution::UniformInterval { .. } => "uniform_interval",
            Distribution::UniformMixture { .. } => "uniform_mixture",
            Distribution::Deterministic { .. } => "deterministic",
            Distribution::HyperExponential { .. } => "hyper_exponential",
            Distribution::Replay { .. } => "replay",
        }
    }

    /// Checks the parameter constraints of the family.
    pub fn validate(&self) -> Result<(), DistributionError> {
        match self {
            Distribution::Exponential { rate } => check_finite_positive("rate", *rate),
            Distribution::UniformInterval { lo, hi } => check_interval(*lo, *hi),
            Distribution::UniformMixture { components } => {
                check_weights(components.iter().map(|c| c.weight))?;
                components
                    .iter()
                    .try_for_each(|c| check_interval(c.lo, c.hi))
            }
            Distribution::Deterministic { value } => check_finite_positive("value", *value),
            Distribution::HyperExponential { phases } => {
                check_weights(phases.iter().map(|p| p.weight))?;
                phases
                    .iter()
                    .try_for_each(|p| check_finite_positive("rate", p.rate))
            }
            Distribution::Replay { values } => {
                if values.is_empty() {
                    return Err(DistributionError::InvalidParameter(
                        "replay needs at least one value".into(),
                    ));
                }
                values
                    .iter()
                    .try_for_each(|&v| check_finite_positive("replay value", v))
            }
        }
    }

    /// Validation for a deadline law: parameters valid and the CDF continuous.
    /// Replay is accepted so scripted traces can pin deadlines.
    pub fn validate_deadline(&self) -> Result<(), DistributionError> {
        self.validate()?;
        match self {
            Distribution::Deterministic { .. } => {
                Err(DistributionError::DiscontinuousDeadline("deterministic"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_replay(&self) -> bool {
        matches!(self, Distribution::Replay { .. })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Distribution::Exponential { rate } => 1.0 / rate,
            Distribution::UniformInterval { lo, hi } => 0.5 * (lo + hi),
            Distribution::UniformMixture { components } => components
                .iter()
                .map(|c| c.weight * 0.5 * (c.lo + c.hi))
                .sum(),
            Distribution::Deterministic { value } => *value,
            Distribution::HyperExponential { phases } => {
                phases.iter().map(|p| p.weight / p.rate).sum()
            }
            Distribution::Replay { values } => values.iter().sum::<f64>() / values.len() as f64,
        }
    }

    /// Standard deviation; used only for Monte Carlo sanity checks.
    pub fn std_dev(&self) -> f64 {
        let second = match self {
            Distribution::Exponential { rate } => 2.0 / (rate * rate),
            Distribution::UniformInterval { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
            Distribution::UniformMixture { components } => components
                .iter()
                .map(|c| c.weight * (c.lo * c.lo + c.lo * c.hi + c.hi * c.hi) / 3.0)
                .sum(),
            Distribution::Deterministic { value } => value * value,
            Distribution::HyperExponential { phases } => phases
                .iter()
                .map(|p| 2.0 * p.weight / (p.rate * p.rate))
                .sum(),
            Distribution::Replay { values } => {
                values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64
            }
        };
        let mean = self.mean();
        (second - mean * mean).max(0.0).sqrt()
    }

    /// `G(x) = P(X > x)`, extended by `G(x) = 1` for `x < 0`.
    pub(crate) fn survival_ext(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match self {
            Distribution::Exponential { rate } => (-rate * x).exp(),
            Distribution::UniformInterval { lo, hi } => uniform_survival(*lo, *hi, x),
            Distribution::UniformMixture { components } => components
                .iter()
                .map(|c| c.weight * uniform_survival(c.lo, c.hi, x))
                .sum(),
            Distribution::Deterministic { value } => {
                if x < *value {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::HyperExponential { phases } => phases
                .iter()
                .map(|p| p.weight * (-p.rate * x).exp())
                .sum(),
            Distribution::Replay { values } => {
                values.iter().filter(|&&v| v > x).count() as f64 / values.len() as f64
            }
        }
    }

    pub fn survival(&self, x: f64) -> Result<f64, DistributionError> {
        if !(x >= 0.0) {
            return Err(DistributionError::NegativeArgument(x));
        }
        Ok(self.survival_ext(x))
    }

    pub fn cdf(&self, x: f64) -> Result<f64, DistributionError> {
        if !(x >= 0.0) {
            return Err(DistributionError::NegativeArgument(x));
        }
        let f = match self {
            Distribution::Exponential { rate } => -(-rate * x).exp_m1(),
            _ => 1.0 - self.survival_ext(x),
        };
        Ok(f)
    }

    /// `Φ(x) = ∫_0^x G(u) du` for `x ≥ 0`, with `Φ(∞) = mean`.
    pub(crate) fn cumulative_survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x == f64::INFINITY {
            return self.mean();
        }
        match self {
            Distribution::Exponential { rate } => -(-rate * x).exp_m1() / rate,
            Distribution::UniformInterval { lo, hi } => uniform_cumulative_survival(*lo, *hi, x),
            Distribution::UniformMixture { components } => components
                .iter()
                .map(|c| c.weight * uniform_cumulative_survival(c.lo, c.hi, x))
                .sum(),
            Distribution::Deterministic { value } => x.min(*value),
            Distribution::HyperExponential { phases } => phases
                .iter()
                .map(|p| -p.weight * (-p.rate * x).exp_m1() / p.rate)
                .sum(),
            Distribution::Replay { values } => {
                values.iter().map(|&v| v.min(x)).sum::<f64>() / values.len() as f64
            }
        }
    }

    /// `∫_a^b G(u) du` for `0 ≤ a ≤ b ≤ ∞` without argument checks.
    pub(crate) fn survival_integral_unchecked(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            Distribution::Exponential { rate } => {
                if b == f64::INFINITY {
                    (-rate * a).exp() / rate
                } else {
                    exp_survival_integral(*rate, a, b)
                }
            }
            Distribution::HyperExponential { phases } => phases
                .iter()
                .map(|p| {
                    if b == f64::INFINITY {
                        p.weight * (-p.rate * a).exp() / p.rate
                    } else {
                        p.weight * exp_survival_integral(p.rate, a, b)
                    }
                })
                .sum(),
            _ => (self.cumulative_survival(b) - self.cumulative_survival(a)).max(0.0),
        }
    }

    /// `∫_a^b G(u) du`.
    pub fn integrate_survival(&self, a: f64, b: f64) -> Result<f64, DistributionError> {
        if !(a >= 0.0) {
            return Err(DistributionError::NegativeArgument(a));
        }
        if !(a <= b) {
            return Err(DistributionError::ReversedBounds { a, b });
        }
        Ok(self.survival_integral_unchecked(a, b))
    }

    /// Supremum of the support, `sup{x : G(x) > 0}`.
    pub fn sup_support(&self) -> f64 {
        match self {
            Distribution::Exponential { .. } | Distribution::HyperExponential { .. } => {
                f64::INFINITY
            }
            Distribution::UniformInterval { hi, .. } => *hi,
            Distribution::UniformMixture { components } => {
                components.iter().map(|c| c.hi).fold(0.0, f64::max)
            }
            Distribution::Deterministic { value } => *value,
            Distribution::Replay { values } => values.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Inverse-CDF transform of a uniform `u ∈ (0, 1)`.
    ///
    /// Hyperexponential draws use composition: the first uniform picks a
    /// phase and is then rescaled into a fresh uniform for that phase.
    /// Replay has no inverse CDF and is handled by [`VariateStream`].
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Distribution::Exponential { rate } => -(-u).ln_1p() / rate,
            Distribution::UniformInterval { lo, hi } => lo + u * (hi - lo),
            Distribution::UniformMixture { components } => mixture_quantile(components, u),
            Distribution::Deterministic { value } => *value,
            Distribution::HyperExponential { phases } => {
                let mut acc = 0.0;
                for (i, p) in phases.iter().enumerate() {
                    let next = acc + p.weight;
                    if u < next || i + 1 == phases.len() {
                        let v = ((u - acc) / p.weight).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                        return -(-v).ln_1p() / p.rate;
                    }
                    acc = next;
                }
                unreachable!("hyperexponential has at least one phase")
            }
            Distribution::Replay { values } => {
                let idx = ((u * values.len() as f64) as usize).min(values.len() - 1);
                values[idx]
            }
        }
    }

    /// Law of `X / n`: the time-accelerated version used by the n-th system.
    pub fn time_scaled(&self, n: f64) -> Self {
        match self {
            Distribution::Exponential { rate } => Distribution::Exponential { rate: rate * n },
            Distribution::UniformInterval { lo, hi } => Distribution::UniformInterval {
                lo: lo / n,
                hi: hi / n,
            },
            Distribution::UniformMixture { components } => Distribution::UniformMixture {
                components: components
                    .iter()
                    .map(|c| MixtureComponent {
                        weight: c.weight,
                        lo: c.lo / n,
                        hi: c.hi / n,
                    })
                    .collect(),
            },
            Distribution::Deterministic { value } => Distribution::Deterministic { value: value / n },
            Distribution::HyperExponential { phases } => Distribution::HyperExponential {
                phases: phases
                    .iter()
                    .map(|p| ExpPhase {
                        weight: p.weight,
                        rate: p.rate * n,
                    })
                    .collect(),
            },
            Distribution::Replay { values } => Distribution::Replay {
                values: values.iter().map(|v| v / n).collect(),
            },
        }
    }
}

/// Inverts the piecewise-linear CDF of a uniform mixture.
fn mixture_quantile(components: &[MixtureComponent], u: f64) -> f64 {
    let cdf = |x: f64| -> f64 {
        components
            .iter()
            .map(|c| c.weight * (1.0 - uniform_survival(c.lo, c.hi, x)))
            .sum()
    };
    let mut knots: Vec<f64> = components.iter().flat_map(|c| [c.lo, c.hi]).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut prev_x = knots[0];
    let mut prev_f = 0.0;
    for &x in &knots[1..] {
        let f = cdf(x);
        if f >= u && f > prev_f {
            return prev_x + (u - prev_f) / (f - prev_f) * (x - prev_x);
        }
        prev_x = x;
        prev_f = f;
    }
    *knots.last().unwrap()
}

/// A deterministic stream of variates from one law.
///
/// Streams are keyed by `(seed, stream_id)`; ChaCha's stream parameter keeps
/// distinct ids independent under the same seed.
#[derive(Debug, Clone)]
pub struct VariateStream {
    law: Distribution,
    rng: ChaCha8Rng,
    cursor: usize,
}

impl VariateStream {
    pub fn new(law: Distribution, seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        VariateStream {
            law,
            rng,
            cursor: 0,
        }
    }

    pub fn law(&self) -> &Distribution {
        &self.law
    }

    pub fn next_value(&mut self) -> Result<f64, DistributionError> {
        if let Distribution::Replay { values } = &self.law {
            let v = values
                .get(self.cursor)
                .copied()
                .ok_or(DistributionError::ReplayExhausted(values.len()))?;
            self.cursor += 1;
            return Ok(v);
        }
        let u = open_unit(&mut self.rng);
        Ok(self.law.quantile(u))
    }
}
