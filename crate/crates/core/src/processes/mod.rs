//! Exact samplers and analytic moments for the two model families.

pub mod cpp;
pub mod indicator;
pub mod kernel;

pub use cpp::{b_eps_at, cpp_path, region_mass, CppModel, PowerLawIntensity, TauPolicy, TruncatedCpp};
pub use indicator::{indicator_moments, indicator_path, IndicatorModel, IndicatorMoments};
pub use kernel::{kernel_hoelder_audit, HoelderAudit, Jump, KernelFamily, KernelSpec};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Identifies one replicate: its RNG is ChaCha8 seeded with `seed` on stream `index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReplicateId {
    pub seed: u64,
    pub index: u64,
}

impl ReplicateId {
    pub fn rng(&self) -> ChaCha8Rng {
        replicate_rng(self.seed, self.index)
    }
}

/// Independent, schedule-free RNG stream for replicate `index`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One sampled path on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample<'g> {
    pub grid: &'g [f64],
    pub values: Vec<f64>,
    pub seed: u64,
    pub replicate_index: u64,
}

impl<'g> PathSample<'g> {
    fn new(grid: &'g [f64], values: Vec<f64>, id: ReplicateId) -> Self {
        PathSample {
            grid,
            values,
            seed: id.seed,
            replicate_index: id.index,
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain("sampling grid is empty".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Domain(format!("grid point {t} lies outside [0, 1]")));
    }
    Ok(())
}

/// A sampling-ready model at a fixed `eps`.
#[derive(Debug, Clone)]
pub enum ProcessModel {
    Indicator(IndicatorModel),
    Cpp(TruncatedCpp),
}

/// `E|X_t - X_s|^2 <= b_eps |t - s|^(1 + alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    pub b_eps: f64,
    pub alpha: f64,
}

impl ProcessModel {
    pub fn eps(&self) -> f64 {
        match self {
            ProcessModel::Indicator(m) => m.eps(),
            ProcessModel::Cpp(m) => m.model().eps,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, points: &[f64], rng: &mut R) -> Vec<f64> {
        match self {
            ProcessModel::Indicator(m) => m.sample(points, rng),
            ProcessModel::Cpp(m) => m.sample(points, rng),
        }
    }

    /// Analytic `E(X_t0)^2` of the untruncated model.
    pub fn var_t0(&self, t0: f64) -> f64 {
        var_t0(self, t0)
    }

    /// Second-moment modulus of continuity. The indicator model only has
    /// `2 eps |t - s|`, i.e. `alpha = 0`.
    pub fn modulus(&self) -> Modulus {
        match self {
            ProcessModel::Indicator(m) => Modulus {
                b_eps: 2.0 * m.eps(),
                alpha: 0.0,
            },
            ProcessModel::Cpp(m) => Modulus {
                b_eps: m.model().b_eps(),
                alpha: m.model().kernel.alpha,
            },
        }
    }

    /// Analytic bound on `E(X_t - X_s)^2`.
    pub fn increment_bound(&self, s: f64, t: f64) -> f64 {
        match self {
            ProcessModel::Indicator(m) => m.increment_bound(s, t),
            ProcessModel::Cpp(_) => {
                let Modulus { b_eps, alpha } = self.modulus();
                b_eps * (t - s).abs().powf(1.0 + alpha)
            }
        }
    }

    /// Exact `E(X_t - X_s)^2` of what the sampler produces, when known in closed form.
    pub fn increment_exact(&self, s: f64, t: f64) -> Option<f64> {
        match self {
            ProcessModel::Indicator(m) => {
                Some(m.second_moment(s) + m.second_moment(t) - 2.0 * m.cross_moment(s, t))
            }
            ProcessModel::Cpp(m) => m.sampled_increment_variance(s, t),
        }
    }
}

/// Analytic `E(X_t0^eps)^2`: `min(eps, 1 - t0)` or `∫ K^2 u^2 nu` over `|u| < eps`.
pub fn var_t0(model: &ProcessModel, t0: f64) -> f64 {
    match model {
        ProcessModel::Indicator(m) => m.second_moment(t0),
        ProcessModel::Cpp(m) => m.model().variance(t0),
    }
}
