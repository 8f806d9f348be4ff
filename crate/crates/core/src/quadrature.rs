//! Quadrature rules: the spectrally accurate log-kernel weights for closed
//! curves and plain trapezoidal helpers.
//!
//! On a uniform 2n-point grid over [0, 2π), the weights
//!   R_m = −(2π/n)·Σ_{p=1}^{n−1} cos(pmπ/n)/p − (−1)^m·π/n²
//! integrate A(τ)·ln(4sin²((t−τ)/2)) exactly for trigonometric polynomials A
//! of degree ≤ n, with m = |i − j| the node offset.

use std::f64::consts::PI;

/// Log-kernel quadrature weights R_m, m = 0..2n−1, for a 2n-point grid.
pub fn mk_log_weights(n_half: usize) -> Vec<f64> {
    assert!(n_half >= 1);
    let n = n_half as f64;
    (0..2 * n_half)
        .map(|m| {
            let mut s = 0.0;
            for p in 1..n_half {
                s += ((p * m) as f64 * PI / n).cos() / p as f64;
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / n * s - sign * PI / (n * n)
        })
        .collect()
}

/// Trapezoidal weights on [a, b] with n nodes including both endpoints.
pub fn trapezoid_weights(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let h = (b - a) / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    let weights: Vec<f64> = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect();
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_weights_integrate_cosines_exactly() {
        // ∫₀^{2π} ln(4sin²((t−τ)/2))·cos(m(t−τ)) dτ = −2π/m (m ≥ 1), 0 (m = 0).
        let n_half = 16;
        let r = mk_log_weights(n_half);
        let nn = 2 * n_half;
        let t_i = 3; // arbitrary collocation node
        for m in 0..=n_half {
            let mut q = 0.0;
            for j in 0..nn {
                let diff = (t_i as f64 - j as f64) * PI / n_half as f64;
                let idx = (t_i as i64 - j as i64).unsigned_abs() as usize;
                q += r[idx] * (m as f64 * diff).cos();
            }
            let exact = if m == 0 { 0.0 } else { -2.0 * PI / m as f64 };
            assert!((q - exact).abs() < 1e-12, "m={m}: {q} vs {exact}");
        }
    }

    #[test]
    fn log_weights_match_reference_integral() {
        // Smooth non-polynomial density: compare against a converged
        // composite evaluation of ∫ ln(4sin²(s/2))·e^{cos s} ds.
        let f = |s: f64| (s.cos()).exp();
        // Reference by trapezoid on the product with singularity subtracted:
        // ∫ ln(4sin²(s/2)) (f(s) − f(0)) ds + f(0)·0, fine grid.
        let big = 1 << 15;
        let mut reference = 0.0;
        for j in 1..big {
            let s = 2.0 * PI * j as f64 / big as f64;
            reference += (4.0 * (s / 2.0).sin().powi(2)).ln() * (f(s) - f(0.0)) * 2.0 * PI
                / big as f64;
        }
        for n_half in [8usize, 16, 32] {
            let r = mk_log_weights(n_half);
            let mut q = 0.0;
            for j in 0..2 * n_half {
                let s = PI * j as f64 / n_half as f64;
                q += r[j] * f(s);
            }
            let err = (q - reference).abs();
            assert!(err < 1e-6 / (n_half * n_half) as f64 + 1e-10, "n={n_half} err={err}");
        }
    }

    #[test]
    fn trapezoid_weights_sum_to_interval() {
        let (nodes, w) = trapezoid_weights(-3.0, 5.0, 41);
        assert_eq!(nodes.len(), 41);
        assert!((w.iter().sum::<f64>() - 8.0).abs() < 1e-13);
        assert_eq!(nodes[0], -3.0);
        assert_eq!(*nodes.last().unwrap(), 5.0);
    }
}
