//! Demand distribution algebra.
//!
//! Customer demands are independent random variables from a handful of
//! families that are closed under summation (Poisson; normal; binomial with a
//! common success probability; Erlang with a common rate; negative binomial
//! with a common success probability) plus finite discrete tables, which are
//! closed under exact convolution. Every recourse and bound computation in the
//! crate reduces to cumulative probabilities of such sums, so this module
//! keeps those sums in closed form whenever it can and only falls back to
//! dense convolution tables for the discrete case.

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, gamma_ur};
use thiserror::Error;

/// Probabilities this small in magnitude are treated as floating noise and
/// clamped to zero; anything more negative is an internal-consistency error.
pub const PROB_NOISE: f64 = 1e-12;

/// Default ceiling on the support length of convolved discrete tables.
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("invalid parameter for {family}: {reason}")]
    InvalidParameter { family: &'static str, reason: String },
    #[error("cannot sum {left} with {right}: families are not closed under this combination")]
    UnsupportedCombination { left: String, right: String },
    #[error("discrete support of length {len} exceeds cap {cap}")]
    SupportExplosion { len: usize, cap: usize },
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
}

/// Finite discrete distribution over non-negative integer support.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiscreteTable {
    values: Vec<u32>,
    probs: Vec<f64>,
}

impl DiscreteTable {
    /// Builds a table from `(value, probability)` pairs. Values must be
    /// distinct and probabilities must sum to 1 within `1e-12`.
    pub fn new(mut pairs: Vec<(u32, f64)>) -> Result<Self, DistributionError> {
        if pairs.is_empty() {
            return Err(DistributionError::InvalidParameter {
                family: "finite discrete",
                reason: "empty support".into(),
            });
        }
        pairs.sort_by_key(|&(v, _)| v);
        let mut total = 0.0;
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(DistributionError::InvalidParameter {
                    family: "finite discrete",
                    reason: format!("duplicate support value {}", w[0].0),
                });
            }
        }
        for &(_, p) in &pairs {
            if !(0.0..=1.0 + PROB_NOISE).contains(&p) {
                return Err(DistributionError::InvalidParameter {
                    family: "finite discrete",
                    reason: format!("probability {p} outside [0,1]"),
                });
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(DistributionError::InvalidParameter {
                family: "finite discrete",
                reason: format!("probabilities sum to {total}, expected 1"),
            });
        }
        let (values, probs) = pairs.into_iter().unzip();
        Ok(Self { values, probs })
    }

    /// Point mass at a single value.
    pub fn point(value: u32) -> Self {
        Self { values: vec![value], probs: vec![1.0] }
    }

    pub fn support(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.support().map(|(v, p)| v as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support().map(|(v, p)| (v as f64 - m).powi(2) * p).sum()
    }

    pub fn max_value(&self) -> u32 {
        *self.values.last().expect("non-empty support")
    }

    /// Right-continuous step evaluation of `P(X <= t)`; exact.
    pub fn cdf(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (v, p) in self.support() {
            if (v as f64) <= t {
                acc += p;
            } else {
                break;
            }
        }
        acc.min(1.0)
    }

    /// Exact convolution on a dense integer-indexed table.
    pub fn convolve(&self, other: &Self, cap: usize) -> Result<Self, DistributionError> {
        let max = self.max_value() as usize + other.max_value() as usize;
        if max + 1 > cap {
            return Err(DistributionError::SupportExplosion { len: max + 1, cap });
        }
        let mut dense = vec![0.0f64; max + 1];
        for (a, pa) in self.support() {
            for (b, pb) in other.support() {
                dense[a as usize + b as usize] += pa * pb;
            }
        }
        let pairs: Vec<(u32, f64)> = dense
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
            .map(|(v, p)| (v as u32, p))
            .collect();
        Ok(Self {
            values: pairs.iter().map(|&(v, _)| v).collect(),
            probs: pairs.iter().map(|&(_, p)| p).collect(),
        })
    }
}

/// A customer demand distribution.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum DemandDistribution {
    Poisson { lambda: f64 },
    Normal { mean: f64, variance: f64 },
    Binomial { trials: u32, success: f64 },
    Erlang { shape: u32, rate: f64 },
    NegativeBinomial { successes: u32, success: f64 },
    FiniteDiscrete(DiscreteTable),
}

impl DemandDistribution {
    pub fn validate(&self) -> Result<(), DistributionError> {
        let bad = |family: &'static str, reason: String| {
            Err(DistributionError::InvalidParameter { family, reason })
        };
        match self {
            Self::Poisson { lambda } => {
                if !(*lambda > 0.0) {
                    return bad("Poisson", format!("lambda {lambda} must be > 0"));
                }
            }
            Self::Normal { variance, .. } => {
                if !(*variance >= 0.0) {
                    return bad("Normal", format!("variance {variance} must be >= 0"));
                }
            }
            Self::Binomial { trials, success } => {
                if *trials == 0 {
                    return bad("Binomial", "trials must be positive".into());
                }
                if !(*success > 0.0 && *success < 1.0) {
                    return bad("Binomial", format!("success {success} must be in (0,1)"));
                }
            }
            Self::Erlang { shape, rate } => {
                if *shape == 0 {
                    return bad("Erlang", "shape must be positive".into());
                }
                if !(*rate > 0.0) {
                    return bad("Erlang", format!("rate {rate} must be > 0"));
                }
            }
            Self::NegativeBinomial { successes, success } => {
                if *successes == 0 {
                    return bad("NegativeBinomial", "successes must be positive".into());
                }
                if !(*success > 0.0 && *success < 1.0) {
                    return bad("NegativeBinomial", format!("success {success} must be in (0,1)"));
                }
            }
            Self::FiniteDiscrete(_) => {}
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Poisson { lambda } => *lambda,
            Self::Normal { mean, .. } => *mean,
            Self::Binomial { trials, success } => *trials as f64 * success,
            Self::Erlang { shape, rate } => *shape as f64 / rate,
            Self::NegativeBinomial { successes, success } => {
                *successes as f64 * (1.0 - success) / success
            }
            Self::FiniteDiscrete(t) => t.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Poisson { lambda } => *lambda,
            Self::Normal { variance, .. } => *variance,
            Self::Binomial { trials, success } => *trials as f64 * success * (1.0 - success),
            Self::Erlang { shape, rate } => *shape as f64 / (rate * rate),
            Self::NegativeBinomial { successes, success } => {
                *successes as f64 * (1.0 - success) / (success * success)
            }
            Self::FiniteDiscrete(t) => t.variance(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Poisson { .. } => "Poisson",
            Self::Normal { .. } => "Normal",
            Self::Binomial { .. } => "Binomial",
            Self::Erlang { .. } => "Erlang",
            Self::NegativeBinomial { .. } => "NegativeBinomial",
            Self::FiniteDiscrete(_) => "FiniteDiscrete",
        }
    }

    /// `P(X <= t)`, absolute error below 1e-10 for the closed families and
    /// exact for finite discrete tables.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Self::Poisson { lambda } => poisson_cdf(*lambda, t),
            Self::Normal { mean, variance } => normal_cdf(*mean, *variance, t),
            Self::Binomial { trials, success } => binomial_cdf(*trials as u64, *success, t),
            Self::Erlang { shape, rate } => erlang_cdf(*shape as u64, *rate, t),
            Self::NegativeBinomial { successes, success } => {
                negative_binomial_cdf(*successes as u64, *success, t)
            }
            Self::FiniteDiscrete(table) => table.cdf(t),
        }
    }

    /// Distribution of the sum of `n` independent copies.
    pub fn n_fold_sum(&self, n: u64) -> Result<PartialSum, DistributionError> {
        let mut sum = PartialSum::empty();
        if n == 0 {
            return Ok(sum);
        }
        match self {
            Self::FiniteDiscrete(t) => {
                // Repeated convolution; fine for the small fold counts the
                // sufficient-condition checks use.
                let mut table = t.clone();
                for _ in 1..n {
                    table = table.convolve(t, DEFAULT_SUPPORT_CAP)?;
                }
                sum = PartialSum {
                    kind: SumKind::Discrete(table),
                    count: n as usize,
                };
            }
            _ => {
                for _ in 0..n {
                    sum.push(self)?;
                }
            }
        }
        Ok(sum)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum SumKind {
    PointZero,
    Poisson { lambda: f64 },
    Normal { mean: f64, variance: f64 },
    Binomial { trials: u64, success: f64 },
    Erlang { shape: u64, rate: f64 },
    NegativeBinomial { successes: u64, success: f64 },
    Discrete(DiscreteTable),
}

/// Running sum of independent demands, kept in closed form while the family
/// allows it. The empty sum is a point mass at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSum {
    kind: SumKind,
    count: usize,
}

/// Shared-parameter tolerance: binomial/negative-binomial sums need a common
/// success probability, Erlang sums a common rate.
const PARAM_TOL: f64 = 1e-12;

impl PartialSum {
    pub fn empty() -> Self {
        Self { kind: SumKind::PointZero, count: 0 }
    }

    pub fn constituents(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Adds one more independent demand to the running sum.
    pub fn push(&mut self, d: &DemandDistribution) -> Result<(), DistributionError> {
        let incompatible = |sum: &SumKind, d: &DemandDistribution| DistributionError::UnsupportedCombination {
            left: match sum {
                SumKind::PointZero => "empty".to_string(),
                SumKind::Poisson { .. } => "Poisson".to_string(),
                SumKind::Normal { .. } => "Normal".to_string(),
                SumKind::Binomial { .. } => "Binomial".to_string(),
                SumKind::Erlang { .. } => "Erlang".to_string(),
                SumKind::NegativeBinomial { .. } => "NegativeBinomial".to_string(),
                SumKind::Discrete(_) => "FiniteDiscrete".to_string(),
            },
            right: d.family_name().to_string(),
        };
        let next = match (&self.kind, d) {
            (SumKind::PointZero, _) => match d {
                DemandDistribution::Poisson { lambda } => SumKind::Poisson { lambda: *lambda },
                DemandDistribution::Normal { mean, variance } => {
                    SumKind::Normal { mean: *mean, variance: *variance }
                }
                DemandDistribution::Binomial { trials, success } => {
                    SumKind::Binomial { trials: *trials as u64, success: *success }
                }
                DemandDistribution::Erlang { shape, rate } => {
                    SumKind::Erlang { shape: *shape as u64, rate: *rate }
                }
                DemandDistribution::NegativeBinomial { successes, success } => {
                    SumKind::NegativeBinomial { successes: *successes as u64, success: *success }
                }
                DemandDistribution::FiniteDiscrete(t) => SumKind::Discrete(t.clone()),
            },
            (SumKind::Poisson { lambda }, DemandDistribution::Poisson { lambda: l2 }) => {
                SumKind::Poisson { lambda: lambda + l2 }
            }
            (
                SumKind::Normal { mean, variance },
                DemandDistribution::Normal { mean: m2, variance: v2 },
            ) => SumKind::Normal { mean: mean + m2, variance: variance + v2 },
            (
                SumKind::Binomial { trials, success },
                DemandDistribution::Binomial { trials: t2, success: p2 },
            ) => {
                if (success - p2).abs() > PARAM_TOL {
                    return Err(incompatible(&self.kind, d));
                }
                SumKind::Binomial { trials: trials + *t2 as u64, success: *success }
            }
            (SumKind::Erlang { shape, rate }, DemandDistribution::Erlang { shape: s2, rate: r2 }) => {
                if (rate - r2).abs() > PARAM_TOL {
                    return Err(incompatible(&self.kind, d));
                }
                SumKind::Erlang { shape: shape + *s2 as u64, rate: *rate }
            }
            (
                SumKind::NegativeBinomial { successes, success },
                DemandDistribution::NegativeBinomial { successes: s2, success: p2 },
            ) => {
                if (success - p2).abs() > PARAM_TOL {
                    return Err(incompatible(&self.kind, d));
                }
                SumKind::NegativeBinomial { successes: successes + *s2 as u64, success: *success }
            }
            (SumKind::Discrete(table), DemandDistribution::FiniteDiscrete(t2)) => {
                SumKind::Discrete(table.convolve(t2, DEFAULT_SUPPORT_CAP)?)
            }
            _ => return Err(incompatible(&self.kind, d)),
        };
        self.kind = next;
        self.count += 1;
        Ok(())
    }

    /// Non-mutating variant of [`push`](Self::push).
    pub fn with(&self, d: &DemandDistribution) -> Result<Self, DistributionError> {
        let mut sum = self.clone();
        sum.push(d)?;
        Ok(sum)
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            SumKind::PointZero => 0.0,
            SumKind::Poisson { lambda } => *lambda,
            SumKind::Normal { mean, .. } => *mean,
            SumKind::Binomial { trials, success } => *trials as f64 * success,
            SumKind::Erlang { shape, rate } => *shape as f64 / rate,
            SumKind::NegativeBinomial { successes, success } => {
                *successes as f64 * (1.0 - success) / success
            }
            SumKind::Discrete(t) => t.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match &self.kind {
            SumKind::PointZero => 0.0,
            SumKind::Poisson { lambda } => *lambda,
            SumKind::Normal { variance, .. } => *variance,
            SumKind::Binomial { trials, success } => *trials as f64 * success * (1.0 - success),
            SumKind::Erlang { shape, rate } => *shape as f64 / (rate * rate),
            SumKind::NegativeBinomial { successes, success } => {
                *successes as f64 * (1.0 - success) / (success * success)
            }
            SumKind::Discrete(t) => t.variance(),
        }
    }

    /// Whether the sum's non-negativity is approximate (normal components).
    pub fn is_approximate(&self) -> bool {
        matches!(self.kind, SumKind::Normal { .. })
    }

    /// Least upper bound of the support, when the sum is bounded.
    pub fn upper_bound(&self) -> Option<f64> {
        match &self.kind {
            SumKind::PointZero => Some(0.0),
            SumKind::Binomial { trials, .. } => Some(*trials as f64),
            SumKind::Discrete(t) => Some(t.max_value() as f64),
            _ => None,
        }
    }

    /// `P(X <= t)` of the running sum.
    pub fn cdf(&self, t: f64) -> f64 {
        match &self.kind {
            SumKind::PointZero => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SumKind::Poisson { lambda } => poisson_cdf(*lambda, t),
            SumKind::Normal { mean, variance } => normal_cdf(*mean, *variance, t),
            SumKind::Binomial { trials, success } => binomial_cdf(*trials, *success, t),
            SumKind::Erlang { shape, rate } => erlang_cdf(*shape, *rate, t),
            SumKind::NegativeBinomial { successes, success } => {
                negative_binomial_cdf(*successes, *success, t)
            }
            SumKind::Discrete(t2) => t2.cdf(t),
        }
    }
}

/// Sums a sequence of demands sharing a closed family (or all finite
/// discrete). The empty sequence yields the point mass at zero.
pub fn sum_of(demands: &[DemandDistribution]) -> Result<PartialSum, DistributionError> {
    let mut sum = PartialSum::empty();
    for d in demands {
        sum.push(d)?;
    }
    Ok(sum)
}

/// `P(prefix <= l*Q < prefix + next)`: the probability that the `l`-th
/// restocking trip happens exactly at the customer whose demand is `next`,
/// given the accumulated demand `prefix` of the customers before it.
///
/// Normal demands are regarded as non-negative without truncation; where
/// that approximation leaks (a heavy left tail can make the raw cdf
/// difference negative), the mass is clamped to zero instead of being
/// treated as an internal error.
pub fn failure_interval_mass(
    prefix: &PartialSum,
    next: &DemandDistribution,
    l: u32,
    capacity: u32,
) -> Result<f64, DistributionError> {
    debug_assert!(l >= 1);
    let threshold = l as f64 * capacity as f64;
    let with_next = prefix.with(next)?;
    let raw = prefix.cdf(threshold) - with_next.cdf(threshold);
    if with_next.is_approximate() {
        return Ok(raw.clamp(0.0, 1.0));
    }
    clamp_probability(raw)
}

/// Clamps floating noise out of a probability; values below `-PROB_NOISE`
/// indicate a real bug upstream and are reported as such.
pub fn clamp_probability(p: f64) -> Result<f64, DistributionError> {
    if p < -PROB_NOISE {
        return Err(DistributionError::Inconsistent(format!(
            "probability {p} below -1e-12"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `P_u(s)`: probability that exactly `s` draws of the i.i.d. unit demand are
/// needed for the cumulative sum to first exceed the threshold `u`.
pub fn unit_failure_pmf(
    unit: &DemandDistribution,
    s: u64,
    u: f64,
) -> Result<f64, DistributionError> {
    debug_assert!(s >= 1);
    debug_assert!(u >= 0.0);
    let below = unit.n_fold_sum(s - 1)?;
    let upto = unit.n_fold_sum(s)?;
    clamp_probability(below.cdf(u) - upto.cdf(u))
}

fn poisson_cdf(lambda: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    if lambda == 0.0 {
        return 1.0;
    }
    let k = t.floor();
    // P(X <= k) equals the regularized upper incomplete gamma Q(k+1, lambda).
    gamma_ur(k + 1.0, lambda)
}

fn normal_cdf(mean: f64, variance: f64, t: f64) -> f64 {
    if variance <= 0.0 {
        return if t >= mean { 1.0 } else { 0.0 };
    }
    let sd = variance.sqrt();
    0.5 * erfc((mean - t) / (sd * std::f64::consts::SQRT_2))
}

fn binomial_cdf(trials: u64, success: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let k = t.floor();
    if k >= trials as f64 {
        return 1.0;
    }
    // P(X <= k) = I_{1-p}(n-k, k+1).
    beta_reg(trials as f64 - k, k + 1.0, 1.0 - success)
}

fn erlang_cdf(shape: u64, rate: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    gamma_lr(shape as f64, rate * t)
}

fn negative_binomial_cdf(successes: u64, success: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let k = t.floor();
    // Failures-before-r-th-success convention: P(X <= k) = I_p(r, k+1).
    beta_reg(successes as f64, k + 1.0, success)
}
