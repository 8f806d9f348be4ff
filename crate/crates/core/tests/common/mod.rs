//! Shared test oracles, independent of the library's evaluation paths.
//!
//! Bessel values come from the integral representations
//!   J_n(x) = (1/π)∫₀^π cos(nθ − x sin θ) dθ
//!   Y_n(x) = (1/π)∫₀^π sin(x sin θ − nθ) dθ
//!           − (1/π)∫₀^∞ [e^{nt} + (−1)^n e^{−nt}] e^{−x sinh t} dt
//! (trapezoid on the periodic part, composite Simpson elsewhere), plus an
//! ODE march for large arguments. Nothing here shares code with the crate's
//! ascending-series / asymptotic implementation.

#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

/// Periodic trapezoid for the oscillatory J integral; spectrally accurate.
pub fn oracle_j(n: u32, x: f64) -> f64 {
    let nodes = 512 + 2 * (1.5 * (x + n as f64)).ceil() as usize;
    let h = PI / nodes as f64;
    let mut s = 0.0;
    for i in 0..=nodes {
        let th = i as f64 * h;
        let w = if i == 0 || i == nodes { 0.5 } else { 1.0 };
        s += w * (n as f64 * th - x * th.sin()).cos();
    }
    s * h / PI
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n_half: usize) -> f64 {
    let n = 2 * n_half;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Y_n by quadrature of the two integral representations. Intended for
/// moderate arguments (x ≲ 80) and orders (n ≲ 15).
pub fn oracle_y(n: u32, x: f64) -> f64 {
    assert!(x > 0.0);
    let nf = n as f64;
    let osc = simpson(|th| (x * th.sin() - nf * th).sin(), 0.0, PI, 120_000);
    // Truncation point: e^{nt − x sinh t} below 1e-19 of the peak.
    let log_peak = if nf > x {
        let tstar = (nf / x).acosh();
        nf * tstar - x * tstar.sinh()
    } else {
        0.0
    };
    let mut t_end: f64 = 1.0;
    while nf * t_end - x * t_end.sinh() > log_peak - 46.0 {
        t_end += 0.5;
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let exp_part = simpson(
        |t| ((nf * t).exp() + sign * (-nf * t).exp()) * (-x * t.sinh()).exp(),
        0.0,
        t_end,
        120_000,
    );
    (osc - exp_part) / PI
}

pub fn oracle_h1(n: u32, x: f64) -> Complex64 {
    Complex64::new(oracle_j(n, x), oracle_y(n, x))
}

/// d/dx of order n from the recurrence f' = (f_{n−1} − f_{n+1})/2 (n ≥ 1)
/// or f₀' = −f₁.
pub fn oracle_h1_derivative(n: u32, x: f64) -> Complex64 {
    if n == 0 {
        -oracle_h1(1, x)
    } else {
        (oracle_h1(n - 1, x) - oracle_h1(n + 1, x)) * 0.5
    }
}

/// March the Bessel system y'' + y'/x + y = 0 outward from x₀ with RK4,
/// reporting (J₀, Y₀, J₁, Y₁) at the requested checkpoints. Initial data is
/// taken from the integral-representation oracle, so the march is an
/// independent large-argument reference.
pub fn oracle_ode_march(checkpoints: &[f64]) -> Vec<(f64, f64, f64, f64, f64)> {
    let x0 = 40.0;
    // State: (J₀, J₀', Y₀, Y₀').
    let mut state = [
        oracle_j(0, x0),
        -oracle_j(1, x0),
        oracle_y(0, x0),
        -oracle_y(1, x0),
    ];
    let deriv = |x: f64, s: &[f64; 4]| -> [f64; 4] {
        [s[1], -s[1] / x - s[0], s[3], -s[3] / x - s[2]]
    };
    let mut leg_start = x0;
    let mut out = Vec::new();
    let mut cps: Vec<f64> = checkpoints.to_vec();
    cps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &cp in &cps {
        assert!(cp >= x0);
        let span = cp - leg_start;
        let steps = ((span / 2.5e-4).ceil() as usize).max(1);
        let h = span / steps as f64;
        for i in 0..steps {
            // Abscissa formed multiplicatively so it cannot drift over the
            // ~10⁵ steps of a leg.
            let x = leg_start + i as f64 * h;
            let k1 = deriv(x, &state);
            let s2 = add(&state, &k1, h / 2.0);
            let k2 = deriv(x + h / 2.0, &s2);
            let s3 = add(&state, &k2, h / 2.0);
            let k3 = deriv(x + h / 2.0, &s3);
            let s4 = add(&state, &k3, h);
            let k4 = deriv(x + h, &s4);
            for i in 0..4 {
                state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        leg_start = cp;
        out.push((cp, state[0], state[2], -state[1], -state[3]));
    }
    out
}

fn add(s: &[f64; 4], k: &[f64; 4], h: f64) -> [f64; 4] {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2], s[3] + h * k[3]]
}

/// Analytic eigenvalues of the parametrized boundary operators on a circle
/// of radius `a` for the angular density e^{imθ}:
///   V:  (iπa/2)·J_m(ka)·H_m(ka)
///   K, K̃: (iπak/4)·[J_m'(ka)H_m(ka) + J_m(ka)H_m'(ka)]
///   W:  (iπak²/2)·J_m'(ka)·H_m'(ka)
pub struct CircleEigen {
    pub v: Complex64,
    pub k: Complex64,
    pub w: Complex64,
}

pub fn circle_eigenvalues(m: u32, wavenumber: f64, radius: f64) -> CircleEigen {
    let z = wavenumber * radius;
    let i = Complex64::new(0.0, 1.0);
    let jm = oracle_j(m, z);
    let hm = oracle_h1(m, z);
    let jpm = if m == 0 {
        -oracle_j(1, z)
    } else {
        (oracle_j(m - 1, z) - oracle_j(m + 1, z)) * 0.5
    };
    let hpm = oracle_h1_derivative(m, z);
    CircleEigen {
        v: i * PI * radius / 2.0 * jm * hm,
        k: i * PI * radius * wavenumber / 4.0 * (jpm * hm + jm * hpm),
        w: i * PI * radius * wavenumber * wavenumber / 2.0 * jpm * hpm,
    }
}

/// Max-norm relative difference of complex slices.
pub fn max_rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale
}
