mod common;

use chaining_lab::chaining::ChainingParams;
use chaining_lab::montecarlo::{moment_audit, replicate_map, ExperimentConfig, ModelSpec, SupMode};
use chaining_lab::processes::{
    kernel_hoelder_audit, CppModel, KernelSpec, PowerLawIntensity, TauPolicy, TruncatedCpp,
};

use common::*;

fn cpp(kernel: KernelSpec, eps: f64, t0: f64) -> TruncatedCpp {
    CppModel::new(PowerLawIntensity::new(0.5, 1.0).unwrap(), kernel, eps, TauPolicy::default())
        .unwrap()
        .truncate(t0)
        .unwrap()
}

fn config(model: ModelSpec, replicates: u64) -> ExperimentConfig {
    ExperimentConfig {
        model,
        params: ChainingParams::new(1.0, 2.0, 0.5, 0.5).unwrap(),
        t0: 0.5,
        n_max: 20,
        eps_list: vec![0.1],
        grid_exponent: 10,
        replicates,
        seed: 99,
        sup_mode: SupMode::Centered,
    }
}

fn linear_spec() -> ModelSpec {
    ModelSpec::Cpp {
        intensity: PowerLawIntensity::new(0.5, 1.0).unwrap(),
        kernel: KernelSpec::linear(),
        tau_policy: TauPolicy::default(),
    }
}

#[test]
fn jump_counts_are_poisson_with_the_region_mass() {
    let model = cpp(KernelSpec::linear(), 0.1, 0.5);
    let counts = replicate_map(5, 20_000, |rng| model.sample_jumps(rng).len() as f64);
    let (mean, se) = mean_stderr(&counts);
    let mass = 2.0 * (model.tau().powf(-0.5) - 0.1f64.powf(-0.5)) / 0.5;
    assert!((model.mass() - mass).abs() < 1e-9 * mass);
    assert!((mean - mass).abs() < 4.0 * se, "{mean} vs {mass}");
    let (var_mean, _) = mean_stderr(&counts.iter().map(|c| (c - mass).powi(2)).collect::<Vec<_>>());
    assert!((var_mean / mass - 1.0).abs() < 0.05);
}

#[test]
fn jump_magnitudes_follow_the_power_law() {
    let model = cpp(KernelSpec::linear(), 0.1, 0.5);
    let tau = model.tau();
    // P(|u| > x | tau <= |u| < eps) = (x^-rho - eps^-rho) / (tau^-rho - eps^-rho)
    let x: f64 = 1e-3;
    let expected = (x.powf(-0.5) - 0.1f64.powf(-0.5)) / (tau.powf(-0.5) - 0.1f64.powf(-0.5));
    let sizes: Vec<f64> = replicate_map(6, 2000, |rng| model.sample_jumps(rng)).into_iter().flatten().map(|j| j.size).collect();
    let above = sizes.iter().filter(|u| u.abs() > x).count() as f64 / sizes.len() as f64;
    let se = (expected * (1.0 - expected) / sizes.len() as f64).sqrt();
    assert!((above - expected).abs() < 4.0 * se, "{above} vs {expected}");
    assert!(sizes.iter().all(|u| u.abs() >= tau && u.abs() < 0.1));
    let positive = sizes.iter().filter(|u| **u > 0.0).count() as f64 / sizes.len() as f64;
    assert!((positive - 0.5).abs() < 4.0 * (0.25 / sizes.len() as f64).sqrt());
}

#[test]
fn sinusoid_characteristic_function() {
    let (eps, t) = (0.2, 0.3);
    let model = cpp(KernelSpec::sinusoid(), eps, t);
    let values = replicate_map(7, 40_000, |rng| model.sample(&[t], rng)[0]);
    for zeta in [2.0, 6.0] {
        let cosines: Vec<f64> = values.iter().map(|x| (zeta * x).cos()).collect();
        let (re, se) = mean_stderr(&cosines);
        let target = sinusoid_char_function(0.5, 1.0, t, zeta, model.tau(), eps);
        assert!((re - target).abs() < 4.0 * se, "zeta {zeta}: {re} vs {target} (se {se})");
    }
}

#[test]
fn hoelder_kernel_variance_matches_quadrature() {
    let (eps, t, p) = (0.2, 0.3, 0.75);
    let model = cpp(KernelSpec::hoelder(p).unwrap(), eps, t);
    let mark = integrate(|w| (t - w).abs().powf(2.0 * p), 0.0, 1.0, 1e-12);
    let radial = 2.0 * integrate_log_panels(|u| u * u * density(0.5, 1.0, u), model.tau(), eps, 1e-13);
    let exact = mark * radial;
    assert!((model.sampled_variance(t) - exact).abs() < 1e-9 * exact);
    let squares = replicate_map(8, 40_000, |rng| model.sample(&[t], rng)[0].powi(2));
    let (mean, se) = mean_stderr(&squares);
    assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact}");
}

#[test]
fn linear_pair_matches_the_isometry() {
    let eps = 0.1;
    let model = cpp(KernelSpec::linear(), eps, 0.5);
    let rows = moment_audit(&config(linear_spec(), 100_000), eps, &[(0.2, 0.7), (0.4, 0.4)]).unwrap();
    let tau = model.tau();
    let isometry = 0.25 * 2.0 * (eps.powf(1.5) - tau.powf(1.5)) / 1.5;
    let r = rows[0];
    assert!((r.exact - isometry).abs() < 1e-12 * isometry);
    assert!((r.mc_moment - isometry).abs() < 4.0 * r.stderr, "{} vs {isometry}", r.mc_moment);
    // the linear kernel attains the bound up to truncation, so only the 4-stderr rule applies
    assert!(!r.violation && r.exact <= r.bound);
    assert_eq!((rows[1].mc_moment, rows[1].stderr), (0.0, 0.0));
}

#[test]
fn indicator_audit_reports_the_pair_bound() {
    let rows = moment_audit(&config(ModelSpec::Indicator, 20_000), 0.1, &[(0.2, 0.25), (0.3, 0.3)]).unwrap();
    assert!((rows[0].bound - 0.1).abs() < 1e-15);
    assert!(!rows[0].violation);
    assert_eq!(rows[1].mc_moment, 0.0);
}

#[test]
fn kernel_audits() {
    let linear = kernel_hoelder_audit(&KernelSpec::linear(), 10_000).unwrap();
    assert!((linear.worst_ratio - 1.0).abs() < 1e-12 && linear.passed());
    assert!(kernel_hoelder_audit(&KernelSpec::sinusoid(), 10_000).unwrap().passed());
    assert!(kernel_hoelder_audit(&KernelSpec::hoelder(0.6).unwrap(), 10_000).unwrap().passed());
    let misdeclared = KernelSpec::declared(KernelSpec::sinusoid().family, 1.0, 1.0).unwrap();
    let audit = kernel_hoelder_audit(&misdeclared, 10_000).unwrap();
    assert!(audit.worst_ratio > 30.0 && audit.check().is_err());
}
