//! Independent numerical oracles shared by the integration tests and the
//! acceptance runner. Nothing here calls into the library's closed forms.
#![allow(dead_code)]

use std::path::PathBuf;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, &x) in XGK[..7].iter().enumerate() {
        let pair = f(c - h * x) + f(c + h * x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, err: f64, tol: f64, depth: u32) -> f64 {
        if err <= tol || depth == 0 {
            return whole;
        }
        let m = 0.5 * (a + b);
        let (l, le) = gk15(f, a, m);
        let (r, re) = gk15(f, m, b);
        recurse(f, a, m, l, le, 0.5 * tol, depth - 1) + recurse(f, m, b, r, re, 0.5 * tol, depth - 1)
    }
    let (whole, err) = gk15(&f, a, b);
    let tol = (rel_tol * whole.abs()).max(1e-300);
    recurse(&f, a, b, whole, err, tol, 50)
}

/// `∫_lo^hi g(u) du` on a log-spaced set of panels, for integrands with a
/// power singularity at zero and `lo` possibly tiny.
pub fn integrate_log_panels<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    assert!(lo > 0.0 && hi > lo);
    let mut total = 0.0;
    let mut b = hi;
    while b > lo {
        let a = (b / 16.0).max(lo);
        total += integrate(&g, a, b, rel_tol);
        b = a;
    }
    total
}

/// Lévy-measure density `c |u|^(-1 - rho)` restricted to `u > 0`.
pub fn density(rho: f64, c: f64, u: f64) -> f64 {
    c * u.powf(-1.0 - rho)
}

/// `∫∫ u^2 K(t, w)^2 nu(du dw)` over `tau <= |u| < eps` for `K(t, w) = t`.
pub fn linear_variance_quadrature(rho: f64, c: f64, t: f64, tau: f64, eps: f64) -> f64 {
    2.0 * t * t * integrate_log_panels(|u| u * u * density(rho, c, u), tau, eps, 1e-13)
}

/// `exp ∫∫ (cos(zeta K u) - 1) nu(du dw)` over `tau <= |u| < eps` for `K = t`.
pub fn linear_char_function(rho: f64, c: f64, t: f64, zeta: f64, tau: f64, eps: f64) -> f64 {
    // 1 - cos(x) = 2 sin^2(x / 2) avoids cancellation for small jumps
    let g = |u: f64| -2.0 * (0.5 * zeta * t * u).sin().powi(2) * density(rho, c, u);
    (2.0 * integrate_log_panels(g, tau, eps, 1e-13)).exp()
}

/// Same for `K(t, w) = sin(2 pi (t + w))`, integrating the mark over [0, 1].
pub fn sinusoid_char_function(rho: f64, c: f64, t: f64, zeta: f64, tau: f64, eps: f64) -> f64 {
    let inner = |w: f64| {
        let k = (2.0 * std::f64::consts::PI * (t + w)).sin();
        let g = |u: f64| -2.0 * (0.5 * zeta * k * u).sin().powi(2) * density(rho, c, u);
        2.0 * integrate_log_panels(g, tau, eps, 1e-12)
    };
    integrate(inner, 0.0, 1.0, 1e-10).exp()
}

/// `∫_{|u| < eps} u^2 nu(du)` by quadrature, scaled by the mark constant.
pub fn b_eps_quadrature(rho: f64, c: f64, c_bar: f64, eps: f64) -> f64 {
    // the piece below eps * 1e-40 is O(1e-40^(2 - rho)) relative and dropped
    c_bar * 2.0 * integrate_log_panels(|u| u * u * density(rho, c, u), eps * 1e-40, eps, 1e-14)
}

/// Greedy cover of `[0, 1]` by closed balls of radius `a`: place a center
/// at the first uncovered point plus `a`, repeat.
pub fn greedy_cover_unit(a: f64) -> u64 {
    let mut covered = 0.0;
    let mut count = 0;
    while covered < 1.0 {
        count += 1;
        covered += 2.0 * a;
    }
    count
}

/// Dyadic midpoint net on `[0, 1]` at level `n >= 2`; `{t0}` at level 1.
pub fn dyadic_net(n: i32, t0: f64) -> Vec<f64> {
    if n == 1 {
        return vec![t0];
    }
    let cells = 1u64 << (n - 1);
    (0..cells).map(|i| (2 * i + 1) as f64 / (2 * cells) as f64).collect()
}

/// `|H_n|`: pairs `(u, v)` of `T_n x T_(n-1)` within `6 * 2^-n`, by exhaustion.
pub fn brute_force_h(n: i32, t0: f64) -> u64 {
    let fine = dyadic_net(n, t0);
    let coarse = dyadic_net(n - 1, t0);
    let r = 6.0 * (-f64::from(n)).exp2();
    let mut count = 0;
    for &u in &fine {
        for &v in &coarse {
            if (u - v).abs() <= r {
                count += 1;
            }
        }
    }
    count
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

/// Mean and standard error of a sample.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
