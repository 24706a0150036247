//! Compensated Poisson integrals `X_t = ∫∫_{0<|u|<eps} K(t, w) u Ñ(du dw)`
//! with `nu(du dw) = c |u|^(-1-rho) du dw` on `(-1, 1) x [0, 1]`.
//!
//! `nu` has infinite mass near `u = 0`, so jumps below `tau` are dropped and
//! `tau` is chosen to keep the neglected variance under a tolerance. The
//! intensity and the region `{tau <= |u| < eps}` are symmetric under
//! `u -> -u`, hence the compensator integral vanishes and the compensated
//! integral is the raw jump sum.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use super::kernel::{Jump, KernelSpec};
use super::{PathSample, ReplicateId};
use crate::error::{Error, Result};

/// Expected jump counts above this are rejected as unrunnable.
pub const MAX_EXPECTED_JUMPS: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawIntensity {
    pub rho: f64,
    pub c: f64,
}

impl PowerLawIntensity {
    pub fn new(rho: f64, c: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 2.0) {
            return Err(Error::Model(format!(
                "rho must lie in (0, 2) for infinite mass and finite second moment, got {rho}"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Model(format!("intensity scale c must be positive, got {c}")));
        }
        Ok(PowerLawIntensity { rho, c })
    }

    /// `nu({lo <= |u| < hi} x Omega) = 2c (lo^-rho - hi^-rho) / rho`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        2.0 * self.c * (lo.powf(-self.rho) - hi.powf(-self.rho)) / self.rho
    }

    /// `∫∫_{lo <= |u| < hi} u^2 nu(du dw) = 2c (hi^(2-rho) - lo^(2-rho)) / (2 - rho)`.
    pub fn second_moment(&self, lo: f64, hi: f64) -> f64 {
        let q = 2.0 - self.rho;
        2.0 * self.c * (hi.powf(q) - lo.powf(q)) / q
    }

    /// Inverse CDF of `|u|` on `[lo, hi)` with density proportional to `|u|^(-1-rho)`.
    #[inline]
    pub fn magnitude_quantile(&self, lo: f64, hi: f64, q: f64) -> f64 {
        let a = lo.powf(-self.rho);
        let b = hi.powf(-self.rho);
        (a - q * (a - b)).powf(-1.0 / self.rho)
    }
}

/// `nu({tau <= |u| < eps} x Omega)`.
pub fn region_mass(intensity: &PowerLawIntensity, tau: f64, eps: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < eps && eps <= 1.0) {
        return Err(Error::Domain(format!("region mass needs 0 < tau < eps <= 1, got tau = {tau}, eps = {eps}")));
    }
    Ok(intensity.mass(tau, eps))
}

/// How the inner cutoff `tau` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TauPolicy {
    /// Neglected variance at most `tolerance * E(X_t0)^2` (untruncated).
    /// When `E(X_t0)^2 = 0`, the untruncated `sup|K|^2 ∫∫ u^2 nu` is the reference.
    RelativeVariance { tolerance: f64 },
    /// A fixed cutoff; `tau >= eps` yields the zero process.
    Fixed { tau: f64 },
}

impl Default for TauPolicy {
    fn default() -> Self {
        TauPolicy::RelativeVariance { tolerance: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CppModel {
    pub intensity: PowerLawIntensity,
    pub kernel: KernelSpec,
    pub eps: f64,
    pub tau_policy: TauPolicy,
}

impl CppModel {
    pub fn new(intensity: PowerLawIntensity, kernel: KernelSpec, eps: f64, tau_policy: TauPolicy) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Model(format!("outer cutoff eps must lie in (0, 1], got {eps}")));
        }
        match tau_policy {
            TauPolicy::RelativeVariance { tolerance } if !(tolerance > 0.0 && tolerance < 1.0) => {
                return Err(Error::Model(format!("truncation tolerance must lie in (0, 1), got {tolerance}")))
            }
            TauPolicy::Fixed { tau } if !(tau > 0.0) => {
                return Err(Error::Model(format!("fixed tau must be positive, got {tau}")))
            }
            _ => {}
        }
        Ok(CppModel {
            intensity,
            kernel,
            eps,
            tau_policy,
        })
    }

    /// `B_eps = c_bar ∫∫_{|u| < eps} u^2 nu(du dw) = c_bar 2c eps^(2-rho) / (2 - rho)`.
    pub fn b_eps(&self) -> f64 {
        b_eps_at(&self.intensity, &self.kernel, self.eps)
    }

    /// Untruncated `E(X_t)^2 = ∫ K(t, w)^2 dw * 2c eps^(2-rho) / (2 - rho)`.
    pub fn variance(&self, t: f64) -> f64 {
        self.kernel.mark_second_moment(t) * self.intensity.second_moment(0.0, self.eps)
    }

    /// Upper bound on the variance lost below `tau` at any `t`.
    pub fn neglected_variance_bound(&self, tau: f64) -> f64 {
        self.kernel.sup_abs().powi(2) * self.intensity.second_moment(0.0, tau.min(self.eps))
    }

    /// Resolves the cutoff for anchor `t0` and prepares the sampler.
    pub fn truncate(&self, t0: f64) -> Result<TruncatedCpp> {
        let tau = match self.tau_policy {
            TauPolicy::Fixed { tau } => tau.min(self.eps),
            TauPolicy::RelativeVariance { tolerance } => {
                let reference = match self.variance(t0) {
                    v if v > 0.0 => v,
                    _ => self.neglected_variance_bound(self.eps),
                };
                let sup2 = self.kernel.sup_abs().powi(2);
                let q = 2.0 - self.intensity.rho;
                // sup|K|^2 2c tau^q / q = tolerance * reference
                let tau = (tolerance * reference * q / (2.0 * self.intensity.c * sup2)).powf(1.0 / q);
                tau.min(self.eps)
            }
        };
        if !(tau.is_normal() && tau > 1e-300) {
            return Err(Error::Model(format!("truncation cutoff tau = {tau:e} underflows")));
        }
        let mass = if tau < self.eps {
            region_mass(&self.intensity, tau, self.eps)?
        } else {
            0.0
        };
        if !(mass <= MAX_EXPECTED_JUMPS) {
            return Err(Error::Model(format!(
                "truncation at tau = {tau:e} needs {mass:e} expected jumps per path"
            )));
        }
        let counts = if mass > 0.0 {
            Some(Poisson::new(mass).map_err(|e| Error::Model(format!("poisson({mass}): {e}")))?)
        } else {
            None
        };
        Ok(TruncatedCpp {
            model: *self,
            tau,
            mass,
            counts,
        })
    }
}

/// `B_eps` for an arbitrary `eps >= 0`.
pub fn b_eps_at(intensity: &PowerLawIntensity, kernel: &KernelSpec, eps: f64) -> f64 {
    kernel.c_omega_bar * intensity.second_moment(0.0, eps)
}

/// A [`CppModel`] with its inner cutoff fixed, ready to sample.
#[derive(Debug, Clone)]
pub struct TruncatedCpp {
    model: CppModel,
    tau: f64,
    mass: f64,
    counts: Option<Poisson<f64>>,
}

impl TruncatedCpp {
    pub fn model(&self) -> &CppModel {
        &self.model
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Expected number of jumps per path.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Variance actually carried by the sampler at `t`.
    pub fn sampled_variance(&self, t: f64) -> f64 {
        if self.tau >= self.model.eps {
            return 0.0;
        }
        self.model.kernel.mark_second_moment(t) * self.model.intensity.second_moment(self.tau, self.model.eps)
    }

    /// `E(X_t - X_s)^2` of the sampled process, where the kernel has a closed form.
    pub fn sampled_increment_variance(&self, s: f64, t: f64) -> Option<f64> {
        if self.tau >= self.model.eps {
            return Some(0.0);
        }
        let m = self.model.kernel.mark_increment_moment(s, t)?;
        Some(m * self.model.intensity.second_moment(self.tau, self.model.eps))
    }

    /// Draws the jumps on `{tau <= |u| < eps} x [0, 1]`.
    ///
    /// Per jump the draws are, in order: magnitude quantile, sign, mark.
    pub fn sample_jumps<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Jump> {
        let Some(counts) = &self.counts else {
            return Vec::new();
        };
        let n = counts.sample(rng) as usize;
        let (lo, hi) = (self.tau, self.model.eps);
        (0..n)
            .map(|_| {
                let magnitude = self.model.intensity.magnitude_quantile(lo, hi, rng.random());
                let size = if rng.random::<bool>() { magnitude } else { -magnitude };
                Jump {
                    size,
                    mark: rng.random(),
                }
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, points: &[f64], rng: &mut R) -> Vec<f64> {
        let jumps = self.sample_jumps(rng);
        let mut out = vec![0.0; points.len()];
        self.model.kernel.accumulate(&jumps, points, &mut out);
        out
    }
}

pub fn cpp_path<'g>(model: &TruncatedCpp, grid: &'g [f64], id: ReplicateId) -> Result<PathSample<'g>> {
    super::check_grid(grid)?;
    let values = model.sample(grid, &mut id.rng());
    Ok(PathSample::new(grid, values, id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::kernel::KernelSpec;

    fn intensity() -> PowerLawIntensity {
        PowerLawIntensity::new(0.5, 1.0).unwrap()
    }

    /// Composite Simpson on `[a, b]` after `u = a + (b - a) x^3`, which tames the `u^-1.5` end.
    fn simpson_substituted(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let g = |x: f64| f(a + (b - a) * x * x * x) * 3.0 * x * x * (b - a);
        let h = 1.0 / panels as f64;
        let mut s = g(0.0) + g(1.0);
        for i in 1..panels {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn region_mass_examples() {
        let nu = intensity();
        assert!((region_mass(&nu, 0.01, 1.0).unwrap() - 36.0).abs() < 1e-12);
        let quad = 2.0 * simpson_substituted(|u| u.powf(-1.5), 0.01, 1.0, 20_000);
        assert!((quad - 36.0).abs() < 1e-6, "{quad}");
        assert!(region_mass(&nu, 0.999_999, 1.0).unwrap() < 1e-5);
        assert!(region_mass(&nu, 1e-12, 1.0).unwrap() > 1e6);
        assert!(region_mass(&nu, 0.5, 0.5).is_err());
        assert!(region_mass(&nu, 0.0, 0.5).is_err());
    }

    #[test]
    fn intensity_validation() {
        assert!(PowerLawIntensity::new(0.0, 1.0).is_err());
        assert!(PowerLawIntensity::new(2.0, 1.0).is_err());
        assert!(PowerLawIntensity::new(0.5, 0.0).is_err());
        let nu = intensity();
        assert!((nu.second_moment(0.0, 1.0) - 2.0 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn b_eps_examples() {
        let nu = intensity();
        let k = KernelSpec::linear();
        let b = b_eps_at(&nu, &k, 0.1);
        assert!((b - 2.0 * 0.1f64.powf(1.5) / 1.5).abs() < 1e-16);
        let quad = 2.0 * simpson_substituted(f64::sqrt, 0.0, 0.1, 20_000);
        assert!((b - quad).abs() < 1e-8 * b, "{b} vs {quad}");
        assert_eq!(b_eps_at(&nu, &k, 0.0), 0.0);
        assert!((b_eps_at(&nu, &k, 0.2) / b - 2f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn quantile_maps_onto_the_band() {
        let nu = intensity();
        assert!((nu.magnitude_quantile(0.01, 0.1, 0.0) - 0.01).abs() < 1e-15);
        assert!((nu.magnitude_quantile(0.01, 0.1, 1.0) - 0.1).abs() < 1e-15);
        // median splits the mass in half
        let m = nu.magnitude_quantile(0.01, 0.1, 0.5);
        assert!((nu.mass(0.01, m) - nu.mass(m, 0.1)).abs() < 1e-9);
    }

    #[test]
    fn default_policy_meets_its_tolerance() {
        let m = CppModel::new(intensity(), KernelSpec::linear(), 0.1, TauPolicy::default()).unwrap();
        let t = m.truncate(0.7).unwrap();
        assert!(t.tau() > 0.0 && t.tau() < 0.1);
        let lost = m.neglected_variance_bound(t.tau());
        assert!(lost <= 1e-4 * m.variance(0.7) * (1.0 + 1e-12));
        assert!((m.variance(0.7) - t.sampled_variance(0.7) - 0.49 * nu_moment(t.tau())).abs() < 1e-15);
        // K(0, w) = 0: the reference falls back to sup|K|^2
        let zero = m.truncate(0.0).unwrap();
        assert!(zero.tau() > t.tau());
    }

    fn nu_moment(tau: f64) -> f64 {
        intensity().second_moment(0.0, tau)
    }

    #[test]
    fn degenerate_cutoff_gives_the_zero_process() {
        let m = CppModel::new(intensity(), KernelSpec::linear(), 0.1, TauPolicy::Fixed { tau: 0.1 }).unwrap();
        let t = m.truncate(0.5).unwrap();
        assert_eq!(t.mass(), 0.0);
        let path = cpp_path(&t, &[0.0, 0.5, 1.0], ReplicateId { seed: 1, index: 9 }).unwrap();
        assert_eq!(path.values, vec![0.0; 3]);
    }

    #[test]
    fn unreachable_tolerance_is_a_configuration_error() {
        let m = CppModel::new(intensity(), KernelSpec::linear(), 0.1, TauPolicy::RelativeVariance { tolerance: 1e-30 })
            .unwrap();
        assert!(matches!(m.truncate(0.5), Err(Error::Model(_))));
        assert!(CppModel::new(intensity(), KernelSpec::linear(), 1.5, TauPolicy::default()).is_err());
        assert!(CppModel::new(intensity(), KernelSpec::linear(), 0.1, TauPolicy::Fixed { tau: 0.0 }).is_err());
    }

    #[test]
    fn paths_are_reproducible_and_symmetric_in_sign() {
        let m = CppModel::new(intensity(), KernelSpec::sinusoid(), 0.2, TauPolicy::default()).unwrap();
        let t = m.truncate(0.5).unwrap();
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let id = ReplicateId { seed: 42, index: 7 };
        let a = cpp_path(&t, &grid, id).unwrap();
        let b = cpp_path(&t, &grid, id).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.values.iter().all(|v| v.is_finite()));
        let c = cpp_path(&t, &grid, ReplicateId { seed: 42, index: 8 }).unwrap();
        assert_ne!(a.values, c.values);
    }
}
