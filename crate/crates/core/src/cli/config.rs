//! TOML experiment configs.
//!
//! ```toml
//! [model]
//! kind = "cpp"            # "cpp" | "indicator"
//! rho = 0.5               # cpp: intensity c |u|^(-1-rho)
//! c = 1.0
//! kernel = "linear"       # "linear" | "sinusoid" | "hoelder"
//! hoelder_p = 0.75        # hoelder only
//! # kernel_alpha, kernel_c: override the declared Hölder data
//! # tau_tolerance = 1e-4  or  tau = 1e-5
//!
//! [params]
//! alpha = 1.0
//! beta = 2.0
//! gamma = 0.5             # default alpha / 2
//! delta = 0.5
//!
//! [experiment]
//! eps = [0.2, 0.1, 0.05, 0.02]
//! grid_exponent = 10
//! replicates = 10000
//! seed = 20100527
//! sup_mode = "centered"   # "centered" | "absolute"
//! t0 = 0.5
//! n_max = 20
//! exploratory = false
//!
//! [audit]
//! pairs = [[0.2, 0.7], [0.4, 0.45]]
//! kernel_samples = 20000
//! # eps, replicates: default to the first experiment eps and its replicates
//!
//! [[bound.rows]]          # optional raw (b_eps, var_t0) rows for `bound`
//! b_eps = 0.0
//! var_t0 = 0.01
//!
//! [output]
//! csv = "sweep.csv"
//! json = "sweep.json"
//! ```
//!
//! Unknown keys are rejected and every numeric range is checked here, so
//! errors name the offending key.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::chaining::ChainingParams;
use crate::error::{Error, Result};
use crate::metric::MAX_LEVEL;
use crate::montecarlo::{
    ExperimentConfig, ModelSpec, SupMode, DEFAULT_GRID_EXPONENT, DEFAULT_REPLICATES, MAX_GRID_EXPONENT,
    MIN_REPLICATES,
};
use crate::processes::{KernelFamily, KernelSpec, PowerLawIntensity, TauPolicy};

/// Seed used when neither the config nor `--seed` gives one.
pub const DEFAULT_SEED: u64 = 20_100_527;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default)]
    pub bound: BoundSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Indicator,
    Cpp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Linear,
    Sinusoid,
    Hoelder,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub rho: Option<f64>,
    pub c: Option<f64>,
    pub kernel: Option<KernelName>,
    pub hoelder_p: Option<f64>,
    pub kernel_alpha: Option<f64>,
    pub kernel_c: Option<f64>,
    pub tau_tolerance: Option<f64>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
    pub delta: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            alpha: 1.0,
            beta: 2.0,
            gamma: None,
            delta: 0.5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub eps: Vec<f64>,
    pub grid_exponent: u32,
    pub replicates: u64,
    pub seed: u64,
    pub sup_mode: SupModeName,
    pub t0: f64,
    pub n_max: i32,
    pub exploratory: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupModeName {
    Centered,
    Absolute,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            eps: vec![0.2, 0.1, 0.05, 0.02],
            grid_exponent: DEFAULT_GRID_EXPONENT,
            replicates: DEFAULT_REPLICATES,
            seed: DEFAULT_SEED,
            sup_mode: SupModeName::Centered,
            t0: 0.5,
            n_max: 20,
            exploratory: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSection {
    pub pairs: Vec<[f64; 2]>,
    pub kernel_samples: usize,
    pub eps: Option<f64>,
    pub replicates: Option<u64>,
}

impl Default for AuditSection {
    fn default() -> Self {
        AuditSection {
            pairs: vec![[0.2, 0.25], [0.2, 0.7], [0.4, 0.45], [0.0, 1.0], [0.5, 0.5]],
            kernel_samples: 20_000,
            eps: None,
            replicates: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundSection {
    pub rows: Vec<BoundRowSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRowSpec {
    pub eps: Option<f64>,
    pub b_eps: f64,
    pub var_t0: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub grid_exponent: Option<u32>,
}

/// A validated config.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub experiment: ExperimentConfig,
    pub exploratory: bool,
    pub audit_pairs: Vec<(f64, f64)>,
    pub audit_kernel_samples: usize,
    pub audit_eps: f64,
    pub audit_replicates: u64,
    pub bound_rows: Vec<BoundRowSpec>,
    pub output: OutputSection,
}

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| {
        let reason = e.message().to_string();
        // the message names unknown or mistyped keys; fall back to the document
        let key = reason
            .split('`')
            .nth(1)
            .filter(|_| reason.starts_with("unknown field"))
            .unwrap_or("<document>")
            .to_string();
        Error::Config { key, reason }
    })
}

pub fn load_config(path: &Path, overrides: Overrides) -> Result<ResolvedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err("--config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)?.resolve(overrides)
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(key, format!("must be positive and finite, got {v}")))
    }
}

impl ConfigFile {
    pub fn resolve(&self, overrides: Overrides) -> Result<ResolvedConfig> {
        let model = self.resolve_model()?;
        let params = self.resolve_params()?;
        let exp = &self.experiment;

        let replicates = overrides.replicates.unwrap_or(exp.replicates);
        if replicates < MIN_REPLICATES {
            return Err(config_err(
                "experiment.replicates",
                format!("at least {MIN_REPLICATES} replicates are required, got {replicates}"),
            ));
        }
        let grid_exponent = overrides.grid_exponent.unwrap_or(exp.grid_exponent);
        if !(1..=MAX_GRID_EXPONENT).contains(&grid_exponent) {
            return Err(config_err(
                "experiment.grid_exponent",
                format!("must lie in 1..={MAX_GRID_EXPONENT}, got {grid_exponent}"),
            ));
        }
        if exp.eps.is_empty() {
            return Err(config_err("experiment.eps", "must list at least one value"));
        }
        if let Some(e) = exp.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(config_err("experiment.eps", format!("{e} lies outside (0, 1]")));
        }
        if exp.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config_err("experiment.eps", "must be strictly decreasing"));
        }
        if model == ModelSpec::Indicator {
            if exp.eps[0] >= 1.0 {
                return Err(config_err("experiment.eps", "indicator widths must be below 1"));
            }
            let spacing = (-f64::from(grid_exponent)).exp2();
            let min_eps = exp.eps[exp.eps.len() - 1];
            if spacing > 0.5 * min_eps {
                return Err(config_err(
                    "experiment.grid_exponent",
                    format!("grid spacing {spacing} exceeds the smallest eps / 2 = {}", 0.5 * min_eps),
                ));
            }
        }
        if !(0.0..=1.0).contains(&exp.t0) {
            return Err(config_err("experiment.t0", format!("{} lies outside [0, 1]", exp.t0)));
        }
        if !(2..=MAX_LEVEL).contains(&exp.n_max) {
            return Err(config_err("experiment.n_max", format!("must lie in 2..={MAX_LEVEL}, got {}", exp.n_max)));
        }
        let sup_mode = match exp.sup_mode {
            SupModeName::Centered => SupMode::Centered,
            SupModeName::Absolute => SupMode::Absolute,
        };

        let audit = &self.audit;
        let audit_pairs: Vec<(f64, f64)> = audit.pairs.iter().map(|p| (p[0], p[1])).collect();
        if let Some(p) = audit_pairs
            .iter()
            .find(|(s, t)| !((0.0..=1.0).contains(s) && (0.0..=1.0).contains(t)))
        {
            return Err(config_err("audit.pairs", format!("{p:?} lies outside [0, 1]^2")));
        }
        if audit.kernel_samples < 1000 {
            return Err(config_err("audit.kernel_samples", format!("must be at least 1000, got {}", audit.kernel_samples)));
        }
        let audit_eps = audit.eps.unwrap_or(exp.eps[0]);
        let audit_eps_ok = match model {
            ModelSpec::Indicator => audit_eps > 0.0 && audit_eps < 1.0,
            ModelSpec::Cpp { .. } => audit_eps > 0.0 && audit_eps <= 1.0,
        };
        if !audit_eps_ok {
            return Err(config_err("audit.eps", format!("{audit_eps} is not a valid width for this model")));
        }
        let audit_replicates = overrides.replicates.or(audit.replicates).unwrap_or(replicates);
        if audit_replicates < MIN_REPLICATES {
            return Err(config_err("audit.replicates", format!("at least {MIN_REPLICATES} are required")));
        }

        for (i, row) in self.bound.rows.iter().enumerate() {
            if !(row.b_eps >= 0.0 && row.b_eps.is_finite()) {
                return Err(config_err(&format!("bound.rows[{i}].b_eps"), "must be finite and non-negative"));
            }
            if !(row.var_t0 >= 0.0 && row.var_t0.is_finite()) {
                return Err(config_err(&format!("bound.rows[{i}].var_t0"), "must be finite and non-negative"));
            }
        }

        Ok(ResolvedConfig {
            experiment: ExperimentConfig {
                model,
                params,
                t0: exp.t0,
                n_max: exp.n_max,
                eps_list: exp.eps.clone(),
                grid_exponent,
                replicates,
                seed: overrides.seed.unwrap_or(exp.seed),
                sup_mode,
            },
            exploratory: exp.exploratory,
            audit_pairs,
            audit_kernel_samples: audit.kernel_samples,
            audit_eps,
            audit_replicates,
            bound_rows: self.bound.rows.clone(),
            output: self.output.clone(),
        })
    }

    fn resolve_params(&self) -> Result<ChainingParams> {
        let p = &self.params;
        positive("params.alpha", p.alpha)?;
        positive("params.beta", p.beta)?;
        positive("params.delta", p.delta)?;
        let gamma = p.gamma.unwrap_or(0.5 * p.alpha);
        if !(gamma >= 0.0) {
            return Err(config_err("params.gamma", format!("must be non-negative, got {gamma}")));
        }
        if !(gamma < p.alpha) {
            return Err(Error::Hypothesis(format!(
                "gamma < alpha is required (params.gamma = {gamma}, params.alpha = {})",
                p.alpha
            )));
        }
        ChainingParams::new(p.alpha, p.beta, gamma, p.delta)
    }

    fn resolve_model(&self) -> Result<ModelSpec> {
        let m = &self.model;
        let cpp_only = [
            ("model.rho", m.rho.is_some()),
            ("model.c", m.c.is_some()),
            ("model.kernel", m.kernel.is_some()),
            ("model.hoelder_p", m.hoelder_p.is_some()),
            ("model.kernel_alpha", m.kernel_alpha.is_some()),
            ("model.kernel_c", m.kernel_c.is_some()),
            ("model.tau_tolerance", m.tau_tolerance.is_some()),
            ("model.tau", m.tau.is_some()),
        ];
        match m.kind {
            ModelKind::Indicator => {
                if let Some((key, _)) = cpp_only.iter().find(|(_, set)| *set) {
                    return Err(config_err(key, "only applies to kind = \"cpp\""));
                }
                Ok(ModelSpec::Indicator)
            }
            ModelKind::Cpp => {
                let rho = m.rho.ok_or_else(|| config_err("model.rho", "is required for kind = \"cpp\""))?;
                if !(rho > 0.0 && rho < 2.0) {
                    return Err(config_err("model.rho", format!("must lie in (0, 2), got {rho}")));
                }
                let c = positive("model.c", m.c.unwrap_or(1.0))?;
                let intensity = PowerLawIntensity::new(rho, c)?;

                let family = match m.kernel.unwrap_or(KernelName::Linear) {
                    KernelName::Linear => KernelFamily::Linear,
                    KernelName::Sinusoid => KernelFamily::Sinusoid,
                    KernelName::Hoelder => {
                        let p = m
                            .hoelder_p
                            .ok_or_else(|| config_err("model.hoelder_p", "is required for kernel = \"hoelder\""))?;
                        if !(0.5..=1.0).contains(&p) {
                            return Err(config_err("model.hoelder_p", format!("must lie in [0.5, 1], got {p}")));
                        }
                        KernelFamily::Hoelder { p }
                    }
                };
                if m.hoelder_p.is_some() && !matches!(family, KernelFamily::Hoelder { .. }) {
                    return Err(config_err("model.hoelder_p", "only applies to kernel = \"hoelder\""));
                }
                let alpha = m.kernel_alpha.unwrap_or(family.natural_alpha());
                if !(alpha >= 0.0 && alpha.is_finite()) {
                    return Err(config_err("model.kernel_alpha", format!("must be finite and non-negative, got {alpha}")));
                }
                let c_bar = positive("model.kernel_c", m.kernel_c.unwrap_or(family.natural_constant()))?;
                let kernel = KernelSpec::declared(family, alpha, c_bar)?;

                let tau_policy = match (m.tau_tolerance, m.tau) {
                    (Some(_), Some(_)) => {
                        return Err(config_err("model.tau", "set either tau or tau_tolerance, not both"))
                    }
                    (None, Some(tau)) => TauPolicy::Fixed {
                        tau: positive("model.tau", tau)?,
                    },
                    (Some(tol), None) => {
                        if !(tol > 0.0 && tol < 1.0) {
                            return Err(config_err("model.tau_tolerance", format!("must lie in (0, 1), got {tol}")));
                        }
                        TauPolicy::RelativeVariance { tolerance: tol }
                    }
                    (None, None) => TauPolicy::default(),
                };
                Ok(ModelSpec::Cpp {
                    intensity,
                    kernel,
                    tau_policy,
                })
            }
        }
    }
}
