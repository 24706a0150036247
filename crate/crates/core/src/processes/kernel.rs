use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use super::replicate_rng;
use crate::error::{Error, Result};

/// Kernels `K(t, omega)` on `[0, 1] x [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelFamily {
    /// `K(t, omega) = t`.
    Linear,
    /// `K(t, omega) = sin(2 pi (t + omega))`.
    Sinusoid,
    /// `K(t, omega) = |t - omega|^p`, `p in [1/2, 1]`.
    Hoelder { p: f64 },
}

impl KernelFamily {
    /// Hölder excess `alpha` with `|K(t) - K(s)|^2 <= C |t - s|^(1 + alpha)`.
    pub fn natural_alpha(&self) -> f64 {
        match *self {
            KernelFamily::Linear | KernelFamily::Sinusoid => 1.0,
            KernelFamily::Hoelder { p } => 2.0 * p - 1.0,
        }
    }

    /// Smallest constant `C(omega)` for the natural exponent.
    pub fn natural_constant(&self) -> f64 {
        match self {
            KernelFamily::Linear | KernelFamily::Hoelder { .. } => 1.0,
            KernelFamily::Sinusoid => 4.0 * PI * PI,
        }
    }
}

/// A kernel family with its declared Hölder data.
///
/// Every built-in family has a constant `C(omega)`, so `c_omega_bar`, the
/// integral of `C` against the uniform mark law, is also the pointwise
/// constant used by [`kernel_hoelder_audit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub alpha: f64,
    pub c_omega_bar: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily) -> Result<Self> {
        Self::declared(family, family.natural_alpha(), family.natural_constant())
    }

    pub fn linear() -> Self {
        Self::new(KernelFamily::Linear).expect("linear kernel")
    }

    pub fn sinusoid() -> Self {
        Self::new(KernelFamily::Sinusoid).expect("sinusoid kernel")
    }

    pub fn hoelder(p: f64) -> Result<Self> {
        Self::new(KernelFamily::Hoelder { p })
    }

    /// A kernel with caller-declared `alpha` and `C`. Nothing checks the
    /// declaration here; see [`kernel_hoelder_audit`].
    pub fn declared(family: KernelFamily, alpha: f64, c_omega_bar: f64) -> Result<Self> {
        if let KernelFamily::Hoelder { p } = family {
            if !(0.5..=1.0).contains(&p) {
                return Err(Error::Model(format!("hoelder exponent p must lie in [1/2, 1], got {p}")));
            }
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Model(format!("kernel alpha must be finite and non-negative, got {alpha}")));
        }
        if !(c_omega_bar > 0.0 && c_omega_bar.is_finite()) {
            return Err(Error::Model(format!("kernel constant must be positive, got {c_omega_bar}")));
        }
        Ok(KernelSpec {
            family,
            alpha,
            c_omega_bar,
        })
    }

    #[inline]
    pub fn eval(&self, t: f64, omega: f64) -> f64 {
        match self.family {
            KernelFamily::Linear => t,
            KernelFamily::Sinusoid => (2.0 * PI * (t + omega)).sin(),
            KernelFamily::Hoelder { p } => (t - omega).abs().powf(p),
        }
    }

    /// `K(t, omega) - K(s, omega)`, free of cancellation for the sinusoid.
    #[inline]
    pub fn increment(&self, s: f64, t: f64, omega: f64) -> f64 {
        match self.family {
            KernelFamily::Linear => t - s,
            KernelFamily::Sinusoid => 2.0 * (PI * (s + t + 2.0 * omega)).cos() * (PI * (t - s)).sin(),
            KernelFamily::Hoelder { .. } => self.eval(t, omega) - self.eval(s, omega),
        }
    }

    /// `C(omega)`; constant for the built-in families.
    pub fn c_omega(&self, _omega: f64) -> f64 {
        self.c_omega_bar
    }

    /// `sup |K|` over `[0, 1]^2`.
    pub fn sup_abs(&self) -> f64 {
        1.0
    }

    /// `∫_0^1 K(t, omega)^2 d omega`.
    pub fn mark_second_moment(&self, t: f64) -> f64 {
        match self.family {
            KernelFamily::Linear => t * t,
            KernelFamily::Sinusoid => 0.5,
            KernelFamily::Hoelder { p } => {
                let q = 2.0 * p + 1.0;
                (t.powf(q) + (1.0 - t).powf(q)) / q
            }
        }
    }

    /// `∫_0^1 (K(t, omega) - K(s, omega))^2 d omega` where a closed form exists.
    pub fn mark_increment_moment(&self, s: f64, t: f64) -> Option<f64> {
        match self.family {
            KernelFamily::Linear => Some((t - s) * (t - s)),
            KernelFamily::Sinusoid => Some(2.0 * (PI * (t - s)).sin().powi(2)),
            KernelFamily::Hoelder { .. } => None,
        }
    }

    /// Adds `sum_i K(t_k, omega_i) u_i` to `out[k]` for every point.
    pub fn accumulate(&self, jumps: &[Jump], points: &[f64], out: &mut [f64]) {
        match self.family {
            KernelFamily::Linear => {
                let total: f64 = jumps.iter().map(|j| j.size).sum();
                for (o, &t) in out.iter_mut().zip(points) {
                    *o += t * total;
                }
            }
            KernelFamily::Sinusoid => {
                // sin(a + b) = sin a cos b + cos a sin b splits into two sums
                let (mut cos_part, mut sin_part) = (0.0, 0.0);
                for j in jumps {
                    let (s, c) = (2.0 * PI * j.mark).sin_cos();
                    cos_part += c * j.size;
                    sin_part += s * j.size;
                }
                for (o, &t) in out.iter_mut().zip(points) {
                    let (s, c) = (2.0 * PI * t).sin_cos();
                    *o += s * cos_part + c * sin_part;
                }
            }
            KernelFamily::Hoelder { .. } => {
                for (o, &t) in out.iter_mut().zip(points) {
                    *o += jumps.iter().map(|j| self.eval(t, j.mark) * j.size).sum::<f64>();
                }
            }
        }
    }
}

/// A jump of the Poisson random measure: signed size `u` and mark `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub size: f64,
    pub mark: f64,
}

/// Worst ratio `|K(t, w) - K(s, w)|^2 / (C(w) |t - s|^(1 + alpha))` found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoelderAudit {
    pub kernel: KernelSpec,
    pub samples: usize,
    pub worst_ratio: f64,
    pub worst_s: f64,
    pub worst_t: f64,
    pub worst_omega: f64,
}

impl HoelderAudit {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn passed(&self) -> bool {
        self.worst_ratio <= 1.0 + Self::TOLERANCE
    }

    /// Turns a failed audit into [`Error::MisdeclaredKernel`].
    pub fn check(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::MisdeclaredKernel {
                ratio: self.worst_ratio,
                s: self.worst_s,
                t: self.worst_t,
                omega: self.worst_omega,
            })
        }
    }
}

const AUDIT_SEED: u64 = 0x4b45_524e_454c;

/// Audits the declared Hölder bound on `samples` triples: half on a
/// deterministic lattice (including near-diagonal pairs), half drawn at random.
pub fn kernel_hoelder_audit(kernel: &KernelSpec, samples: usize) -> Result<HoelderAudit> {
    if samples < 1000 {
        return Err(Error::Domain(format!("kernel audit needs at least 1000 samples, got {samples}")));
    }
    let mut audit = HoelderAudit {
        kernel: *kernel,
        samples,
        worst_ratio: 0.0,
        worst_s: f64::NAN,
        worst_t: f64::NAN,
        worst_omega: f64::NAN,
    };
    let mut visit = |s: f64, t: f64, omega: f64| {
        if s == t {
            return;
        }
        let diff = kernel.increment(s, t, omega);
        let ratio = diff * diff / (kernel.c_omega(omega) * (t - s).abs().powf(1.0 + kernel.alpha));
        if ratio > audit.worst_ratio || audit.worst_s.is_nan() {
            audit.worst_ratio = ratio;
            audit.worst_s = s;
            audit.worst_t = t;
            audit.worst_omega = omega;
        }
    };

    let lattice = samples / 2;
    let side = (lattice as f64).cbrt().floor().max(2.0) as usize;
    let step = 1.0 / (side - 1) as f64;
    let mut used = 0;
    'lattice: for i in 0..side {
        for k in 0..side {
            for gap in 0..side {
                if used == lattice {
                    break 'lattice;
                }
                let s = i as f64 * step;
                let omega = k as f64 * step;
                // gaps from 2^-20 up to 1 on a log scale
                let h = (-20.0 * (1.0 - gap as f64 / (side - 1) as f64)).exp2();
                let t = if s + h <= 1.0 { s + h } else { s - h };
                visit(s, t, omega);
                used += 1;
            }
        }
    }
    let mut rng = replicate_rng(AUDIT_SEED, 0);
    for _ in used..samples {
        let s: f64 = rng.random();
        let t: f64 = rng.random();
        let omega: f64 = rng.random();
        visit(s, t, omega);
    }
    Ok(audit)
}
