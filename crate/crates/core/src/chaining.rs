//! The explicit generic-chaining tail bound.
//!
//! Given `E|X_t - X_s|^beta <= B_eps d(s, t)^(1 + alpha)` and the partition
//! family of [`crate::metric`], the chain is cut at levels `n > n0` with
//! weights `w_n = (1 - 2^-h) 2^(-h (n - n0))`, `h = (alpha - gamma) / beta`.
//! Markov's inequality on every link of `H_n` then gives
//!
//! ```text
//! P(sup_t |X_t - X_t0| >= delta / 2) <= C * B_eps * S
//! C = (delta/2)^-beta (1 - 2^-h)^-beta 6^(1+alpha) 2^(-beta h n0)
//! S = sum_{n > n0} |H_n| 2^(-(1+gamma) n)
//! ```
//!
//! and Chebyshev at `t0` adds `4 E(X_t0)^2 / delta^2`.

use crate::error::{Error, Result};
use crate::metric::{IndexSpace, PartitionFamily};
use serde::Serialize;

/// Link multiplicity bound `|H_n| <= 5 |T_n|` for dyadic families.
pub const PAIR_MULTIPLICITY: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainingParams {
    /// Hölder excess in the increment bound.
    pub alpha: f64,
    /// Moment order of the increment bound.
    pub beta: f64,
    /// Entropy exponent, `0 <= gamma < alpha`.
    pub gamma: f64,
    /// Threshold on the supremum.
    pub delta: f64,
}

impl ChainingParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        let params = ChainingParams {
            alpha,
            beta,
            gamma,
            delta,
        };
        params.validate()?;
        Ok(params)
    }

    /// `gamma = alpha / 2`.
    pub fn with_default_gamma(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        Self::new(alpha, beta, 0.5 * alpha, delta)
    }

    pub fn validate(&self) -> Result<()> {
        let ChainingParams {
            alpha,
            beta,
            gamma,
            delta,
        } = *self;
        let fail = |what: String| Err(Error::InvalidParams(what));
        if !(alpha > 0.0 && alpha.is_finite()) {
            return fail(format!("alpha must be positive and finite, got {alpha}"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return fail(format!("beta must be positive and finite, got {beta}"));
        }
        if !(gamma >= 0.0) {
            return fail(format!("gamma must be non-negative, got {gamma}"));
        }
        if !(gamma < alpha) {
            return fail(format!("gamma < alpha is required, got gamma = {gamma}, alpha = {alpha}"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return fail(format!("delta must be positive and finite, got {delta}"));
        }
        Ok(())
    }

    /// `h = (alpha - gamma) / beta`.
    pub fn h(&self) -> f64 {
        (self.alpha - self.gamma) / self.beta
    }
}

/// `w_n = (1 - 2^-h) 2^(-h (n - n0))`.
pub fn chaining_weight(n: i32, params: &ChainingParams, n0: i32) -> Result<f64> {
    params.validate()?;
    if n < n0 {
        return Err(Error::Domain(format!("chaining weight needs n >= n0 = {n0}, got {n}")));
    }
    let h = params.h();
    Ok((1.0 - (-h).exp2()) * (-h * f64::from(n - n0)).exp2())
}

/// `S = sum_{n > n0} |H_n| 2^(-(1+gamma) n)`, split at `n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropySum {
    pub gamma: f64,
    pub n0: i32,
    pub n_max: i32,
    /// Terms `n0 + 1 ..= n_max` summed from the built levels.
    pub partial: f64,
    /// Bound on the terms beyond `n_max`; infinite when the series diverges.
    pub tail: f64,
}

impl EntropySum {
    pub fn total(&self) -> f64 {
        self.partial + self.tail
    }

    pub fn is_divergent(&self) -> bool {
        !self.tail.is_finite()
    }

    /// Sums explicit `(n, |H_n|)` counts with no tail term.
    pub fn from_level_counts(n0: i32, counts: &[(i32, u64)], gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::Domain(format!("entropy sum needs gamma >= 0, got {gamma}")));
        }
        let partial = counts
            .iter()
            .map(|&(n, h)| h as f64 * (-(1.0 + gamma) * f64::from(n)).exp2())
            .sum();
        Ok(EntropySum {
            gamma,
            n0,
            n_max: counts.iter().map(|c| c.0).max().unwrap_or(n0),
            partial,
            tail: 0.0,
        })
    }
}

/// Entropy sum over the built levels of `family`, plus the `5 |T_n|` tail.
pub fn entropy_sum(family: &PartitionFamily, gamma: f64) -> Result<EntropySum> {
    let counts: Vec<(i32, u64)> = family.levels()[1..].iter().map(|l| (l.n(), l.h_count())).collect();
    let mut sum = EntropySum::from_level_counts(family.n0(), &counts, gamma)?;
    sum.n_max = family.n_max();
    sum.tail = dyadic_tail(family.space(), family.n_max(), gamma);
    Ok(sum)
}

/// `sum_{n > n_max} 5 ceil(L 2^(n-1)) 2^(-(1+gamma) n)`.
fn dyadic_tail(space: &IndexSpace, n_max: i32, gamma: f64) -> f64 {
    if gamma <= 0.0 {
        return f64::INFINITY;
    }
    let len = space.diameter();
    let decay = (-gamma).exp2();
    let next = f64::from(n_max + 1);
    let mut tail = PAIR_MULTIPLICITY * 0.5 * len * (-gamma * next).exp2() / (1.0 - decay);
    // ceil only bites when the cell counts past n_max are not exact
    if (len * f64::from(n_max).exp2()).fract() != 0.0 {
        let ratio = (-(1.0 + gamma)).exp2();
        tail += PAIR_MULTIPLICITY * (-(1.0 + gamma) * next).exp2() / (1.0 - ratio);
    }
    tail
}

/// `C = (delta/2)^-beta (1 - 2^-h)^-beta 6^(1+alpha) 2^(-beta h n0)`.
pub fn bound_constant(params: &ChainingParams, n0: i32) -> Result<f64> {
    params.validate()?;
    let ChainingParams {
        alpha, beta, delta, ..
    } = *params;
    let h = params.h();
    Ok((0.5 * delta).powf(-beta)
        * (1.0 - (-h).exp2()).powf(-beta)
        * 6f64.powf(1.0 + alpha)
        * (-beta * h * f64::from(n0)).exp2())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailBoundReport {
    /// `S`, including the tail beyond `n_max`.
    pub entropy_sum: f64,
    /// `C`.
    pub constant: f64,
    pub b_eps: f64,
    pub var_t0: f64,
    /// `C B_eps S` before clamping.
    pub chain_raw: f64,
    /// Bound on `P(sup |X - X_t0| >= delta/2)`.
    pub chain_bound: f64,
    /// Bound on `P(|X_t0| >= delta/2)`.
    pub center_bound: f64,
    /// Bound on `P(sup |X| >= delta)`.
    pub total_bound: f64,
}

/// Precomputed `C` and `S` for one family and parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainingBound {
    params: ChainingParams,
    constant: f64,
    entropy: EntropySum,
}

impl ChainingBound {
    pub fn new(params: &ChainingParams, family: &PartitionFamily) -> Result<Self> {
        params.validate()?;
        let entropy = entropy_sum(family, params.gamma)?;
        if entropy.is_divergent() {
            return Err(Error::DivergentEntropy {
                gamma: params.gamma,
            });
        }
        Ok(ChainingBound {
            params: *params,
            constant: bound_constant(params, family.n0())?,
            entropy,
        })
    }

    pub fn params(&self) -> &ChainingParams {
        &self.params
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn entropy(&self) -> &EntropySum {
        &self.entropy
    }

    pub fn evaluate(&self, b_eps: f64, var_t0: f64) -> Result<TailBoundReport> {
        if !(b_eps >= 0.0 && b_eps.is_finite()) {
            return Err(Error::Domain(format!("B_eps must be finite and non-negative, got {b_eps}")));
        }
        if !(var_t0 >= 0.0 && var_t0.is_finite()) {
            return Err(Error::Domain(format!("E(X_t0)^2 must be finite and non-negative, got {var_t0}")));
        }
        let s = self.entropy.total();
        let chain_raw = self.constant * b_eps * s;
        let chain_bound = chain_raw.min(1.0);
        let delta = self.params.delta;
        let center_bound = (4.0 * var_t0 / (delta * delta)).min(1.0);
        Ok(TailBoundReport {
            entropy_sum: s,
            constant: self.constant,
            b_eps,
            var_t0,
            chain_raw,
            chain_bound,
            center_bound,
            total_bound: (chain_bound + center_bound).min(1.0),
        })
    }
}

pub fn tail_bound(
    params: &ChainingParams,
    family: &PartitionFamily,
    b_eps: f64,
    var_t0: f64,
) -> Result<TailBoundReport> {
    ChainingBound::new(params, family)?.evaluate(b_eps, var_t0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Diagnoses the parameter and entropy hypotheses without failing.
pub fn hypothesis_check(params: &ChainingParams, family: &PartitionFamily) -> HypothesisReport {
    let ChainingParams {
        alpha,
        beta,
        gamma,
        delta,
    } = *params;
    let h = params.h();
    let mut checks = vec![
        HypothesisCheck {
            name: "alpha > 0",
            passed: alpha > 0.0,
            detail: format!("alpha = {alpha}"),
        },
        HypothesisCheck {
            name: "beta > 0",
            passed: beta > 0.0,
            detail: format!("beta = {beta}"),
        },
        HypothesisCheck {
            name: "gamma >= 0",
            passed: gamma >= 0.0,
            detail: format!("gamma = {gamma}"),
        },
        HypothesisCheck {
            name: "gamma < alpha",
            passed: gamma < alpha,
            detail: format!("gamma = {gamma}, alpha = {alpha}"),
        },
        HypothesisCheck {
            name: "h > 0",
            passed: h > 0.0,
            detail: format!("h = {h}"),
        },
        HypothesisCheck {
            name: "delta > 0",
            passed: delta > 0.0,
            detail: format!("delta = {delta}"),
        },
    ];
    let entropy = match entropy_sum(family, gamma) {
        Ok(s) if !s.is_divergent() => HypothesisCheck {
            name: "entropy sum finite",
            passed: true,
            detail: format!("S = {} (partial {}, tail {})", s.total(), s.partial, s.tail),
        },
        Ok(_) => HypothesisCheck {
            name: "entropy sum finite",
            passed: false,
            detail: format!("dyadic tail diverges for gamma = {gamma}"),
        },
        Err(e) => HypothesisCheck {
            name: "entropy sum finite",
            passed: false,
            detail: e.to_string(),
        },
    };
    checks.push(entropy);
    HypothesisReport { checks }
}
