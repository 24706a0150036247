//! Replicated estimates of sup-probabilities and increment moments.
//!
//! Every replicate owns an RNG stream derived from `(seed, eps, index)`, and
//! per-replicate outputs are collected in index order before any floating
//! point reduction, so results do not depend on the rayon worker count.

use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chaining::{hypothesis_check, ChainingBound, ChainingParams, HypothesisReport};
use crate::error::{Error, Result};
use crate::metric::{IndexSpace, PartitionFamily};
use crate::processes::{
    replicate_rng, CppModel, IndicatorModel, KernelSpec, PowerLawIntensity, ProcessModel, TauPolicy,
};

pub const MIN_REPLICATES: u64 = 100;
pub const DEFAULT_REPLICATES: u64 = 10_000;
pub const DEFAULT_GRID_EXPONENT: u32 = 10;
pub const MAX_GRID_EXPONENT: u32 = 24;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SupMode {
    /// `sup_t |X_t - X_t0| >= delta / 2`.
    Centered,
    /// `sup_t |X_t| >= delta`.
    Absolute,
}

/// A model family with `eps` left open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Indicator,
    Cpp {
        intensity: PowerLawIntensity,
        kernel: KernelSpec,
        tau_policy: TauPolicy,
    },
}

impl ModelSpec {
    pub fn at_eps(&self, eps: f64, t0: f64) -> Result<ProcessModel> {
        Ok(match *self {
            ModelSpec::Indicator => ProcessModel::Indicator(IndicatorModel::new(eps)?),
            ModelSpec::Cpp {
                intensity,
                kernel,
                tau_policy,
            } => ProcessModel::Cpp(CppModel::new(intensity, kernel, eps, tau_policy)?.truncate(t0)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub params: ChainingParams,
    pub t0: f64,
    pub n_max: i32,
    pub eps_list: Vec<f64>,
    pub grid_exponent: u32,
    pub replicates: u64,
    pub seed: u64,
    pub sup_mode: SupMode,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let bad = |what: String| Err(Error::Domain(what));
        if self.replicates < MIN_REPLICATES {
            return bad(format!("at least {MIN_REPLICATES} replicates are required, got {}", self.replicates));
        }
        if self.eps_list.is_empty() {
            return bad("eps list is empty".into());
        }
        if let Some(e) = self.eps_list.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return bad(format!("eps = {e} lies outside (0, 1]"));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps list must be strictly decreasing".into());
        }
        if !(1..=MAX_GRID_EXPONENT).contains(&self.grid_exponent) {
            return bad(format!("grid exponent must lie in 1..={MAX_GRID_EXPONENT}, got {}", self.grid_exponent));
        }
        if !(0.0..=1.0).contains(&self.t0) {
            return bad(format!("t0 = {} lies outside [0, 1]", self.t0));
        }
        if self.model == ModelSpec::Indicator {
            let min_eps = self.eps_list[self.eps_list.len() - 1];
            if self.grid_spacing() > 0.5 * min_eps {
                return bad(format!(
                    "indicator grid spacing {} exceeds eps / 2 = {}",
                    self.grid_spacing(),
                    0.5 * min_eps
                ));
            }
        }
        Ok(())
    }

    pub fn grid_spacing(&self) -> f64 {
        (-f64::from(self.grid_exponent)).exp2()
    }

    /// `{i 2^-g : 0 <= i <= 2^g}`.
    pub fn grid(&self) -> Vec<f64> {
        let m = 1u64 << self.grid_exponent;
        (0..=m).map(|i| i as f64 / m as f64).collect()
    }

    pub fn threshold(&self) -> f64 {
        match self.sup_mode {
            SupMode::Centered => 0.5 * self.params.delta,
            SupMode::Absolute => self.params.delta,
        }
    }
}

/// 95% Wilson score interval for `hits` successes out of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilsonInterval {
    pub low: f64,
    pub high: f64,
}

pub fn wilson_interval(hits: u64, n: u64, z: f64) -> WilsonInterval {
    if n == 0 {
        return WilsonInterval { low: 0.0, high: 1.0 };
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    WilsonInterval {
        low: (center - half).max(0.0).min(p),
        high: (center + half).min(1.0).max(p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupEstimate {
    pub hits: u64,
    pub replicates: u64,
    pub prob: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SupEstimate {
    fn from_hits(hits: u64, replicates: u64) -> Self {
        let ci = wilson_interval(hits, replicates, Z_95);
        SupEstimate {
            hits,
            replicates,
            prob: hits as f64 / replicates as f64,
            ci_low: ci.low,
            ci_high: ci.high,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Runs `f` once per replicate stream, in parallel, returning outputs in index order.
pub fn replicate_map<T, F>(seed: u64, replicates: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    (0..replicates)
        .into_par_iter()
        .map(|i| f(&mut replicate_rng(seed, i)))
        .collect()
}

/// Seed for the replicates at one `eps`, so sweeps never share streams across rows.
pub fn eps_seed(seed: u64, eps: f64) -> u64 {
    // splitmix64 finalizer
    let mut z = (seed ^ eps.to_bits()).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fraction of replicates whose grid supremum reaches the threshold.
pub fn estimate_sup_prob(config: &ExperimentConfig, eps: f64) -> Result<SupEstimate> {
    config.validate()?;
    let model = config.model.at_eps(eps, config.t0)?;
    Ok(estimate_for_model(config, &model))
}

fn estimate_for_model(config: &ExperimentConfig, model: &ProcessModel) -> SupEstimate {
    let mut points = config.grid();
    points.push(config.t0);
    let grid_len = points.len() - 1;
    let threshold = config.threshold();
    let mode = config.sup_mode;
    let hit = replicate_map(eps_seed(config.seed, model.eps()), config.replicates, |rng| {
        let values = model.sample(&points, rng);
        let anchor = match mode {
            SupMode::Centered => values[grid_len],
            SupMode::Absolute => 0.0,
        };
        let sup = values[..grid_len].iter().fold(0.0f64, |m, v| m.max((v - anchor).abs()));
        sup >= threshold
    });
    let hits = hit.iter().filter(|&&h| h).count() as u64;
    SupEstimate::from_hits(hits, config.replicates)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub b_eps: f64,
    pub var_t0: f64,
    pub entropy_sum: f64,
    pub constant: f64,
    /// `chain_bound` in centered mode, `total_bound` in absolute mode;
    /// NaN when the model does not meet the increment hypothesis.
    pub theory_bound: f64,
    pub estimate: SupEstimate,
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Informational checks never fail the sweep.
    pub required: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupExperimentResult {
    pub model: ModelSpec,
    pub params: ChainingParams,
    pub sup_mode: SupMode,
    pub seed: u64,
    pub grid_exponent: u32,
    pub hypotheses: HypothesisReport,
    pub rows: Vec<SweepRow>,
}

impl SupExperimentResult {
    pub fn theory_applicable(&self) -> bool {
        self.rows.iter().all(|r| !r.theory_bound.is_nan())
    }

    pub fn checks(&self) -> Vec<SweepCheck> {
        let mut checks = vec![SweepCheck {
            name: "theorem_hypotheses",
            passed: self.hypotheses.all_passed() && self.theory_applicable(),
            required: false,
            detail: if self.theory_applicable() {
                "parameters, entropy sum and increment modulus meet the hypotheses".into()
            } else {
                "the model's increment modulus does not meet the hypothesis; theory bound not evaluated".into()
            },
        }];
        if self.theory_applicable() {
            let worst = self
                .rows
                .iter()
                .map(|r| (r.eps, r.estimate.prob - r.theory_bound - 2.0 * r.estimate.half_width()))
                .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            checks.push(SweepCheck {
                name: "bound_domination",
                passed: worst.1 <= 0.0,
                required: true,
                detail: format!("max over eps of empirical - bound - 2 half-width = {} at eps = {}", worst.1, worst.0),
            });
            if let (Some(first), Some(last)) = (self.rows.first(), self.rows.last()) {
                let (p0, p1) = (first.estimate.prob, last.estimate.prob);
                checks.push(SweepCheck {
                    name: "vanishing_limit",
                    passed: p1 < p0 || (p0 < 0.01 && p1 < 0.01),
                    required: true,
                    detail: format!("empirical {p0} at eps = {} vs {p1} at eps = {}", first.eps, last.eps),
                });
            }
        }
        if self.model == ModelSpec::Indicator {
            let all_one = self.rows.iter().all(|r| r.estimate.prob == 1.0);
            checks.push(SweepCheck {
                name: "indicator_sup_one",
                passed: all_one,
                required: true,
                detail: "every replicate reaches the threshold when grid spacing <= eps / 2".into(),
            });
        }
        let monotone = self.rows.windows(2).all(|w| {
            let slack = 2.0 * (w[0].estimate.half_width() + w[1].estimate.half_width());
            w[1].estimate.prob <= w[0].estimate.prob + slack
        });
        checks.push(SweepCheck {
            name: "monotone_in_eps",
            passed: monotone,
            required: false,
            detail: "empirical probability non-increasing as eps decreases, up to 2x interval slack".into(),
        });
        checks
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed || !c.required)
    }
}

/// Per-eps analytic inputs, chaining bound and empirical estimate.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SupExperimentResult> {
    config.validate()?;
    let family = PartitionFamily::with_anchor(&IndexSpace::unit_interval(), config.n_max, config.t0)?;
    let hypotheses = hypothesis_check(&config.params, &family);
    let bound = ChainingBound::new(&config.params, &family)?;
    let mut rows = Vec::with_capacity(config.eps_list.len());
    for &eps in &config.eps_list {
        let row = sweep_row(config, &bound, eps).map_err(|e| Error::Runtime(format!("sweep aborted at eps = {eps}: {e}")))?;
        rows.push(row);
    }
    Ok(SupExperimentResult {
        model: config.model,
        params: config.params,
        sup_mode: config.sup_mode,
        seed: config.seed,
        grid_exponent: config.grid_exponent,
        hypotheses,
        rows,
    })
}

/// Whether the second-moment modulus of `model` is of the form the chaining bound needs.
pub fn theory_applies(params: &ChainingParams, model: &ProcessModel) -> bool {
    params.beta == 2.0 && model.modulus().alpha >= params.alpha
}

fn sweep_row(config: &ExperimentConfig, bound: &ChainingBound, eps: f64) -> Result<SweepRow> {
    let started = Instant::now();
    let model = config.model.at_eps(eps, config.t0)?;
    let modulus = model.modulus();
    let var_t0 = model.var_t0(config.t0);
    let report = bound.evaluate(modulus.b_eps, var_t0)?;
    let theory_bound = if theory_applies(&config.params, &model) {
        match config.sup_mode {
            SupMode::Centered => report.chain_bound,
            SupMode::Absolute => report.total_bound,
        }
    } else {
        f64::NAN
    };
    let estimate = estimate_for_model(config, &model);
    Ok(SweepRow {
        eps,
        b_eps: modulus.b_eps,
        var_t0,
        entropy_sum: report.entropy_sum,
        constant: report.constant,
        theory_bound,
        estimate,
        runtime: started.elapsed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentAuditRow {
    pub s: f64,
    pub t: f64,
    pub mc_moment: f64,
    pub stderr: f64,
    pub bound: f64,
    /// Closed-form `E(X_t - X_s)^2` of the sampled process, NaN when unknown.
    pub exact: f64,
    pub violation: bool,
}

/// Monte Carlo `E(X_t - X_s)^2` per pair against the analytic bound; a
/// violation is an excess beyond four standard errors.
pub fn moment_audit(config: &ExperimentConfig, eps: f64, pairs: &[(f64, f64)]) -> Result<Vec<MomentAuditRow>> {
    config.validate()?;
    if let Some(p) = pairs.iter().find(|(s, t)| !((0.0..=1.0).contains(s) && (0.0..=1.0).contains(t))) {
        return Err(Error::Domain(format!("audit pair {p:?} lies outside [0, 1]^2")));
    }
    let model = config.model.at_eps(eps, config.t0)?;
    let points: Vec<f64> = pairs.iter().flat_map(|&(s, t)| [s, t]).collect();
    let squares = replicate_map(eps_seed(config.seed, eps), config.replicates, |rng| {
        let v = model.sample(&points, rng);
        v.chunks(2).map(|c| (c[1] - c[0]) * (c[1] - c[0])).collect::<Vec<f64>>()
    });
    let n = config.replicates as f64;
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(k, &(s, t))| {
            let mean = squares.iter().map(|r| r[k]).sum::<f64>() / n;
            let var = squares.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let stderr = (var / n).sqrt();
            let bound = model.increment_bound(s, t);
            MomentAuditRow {
                s,
                t,
                mc_moment: mean,
                stderr,
                bound,
                exact: model.increment_exact(s, t).unwrap_or(f64::NAN),
                violation: mean > bound + 4.0 * stderr,
            }
        })
        .collect())
}
