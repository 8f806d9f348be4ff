//! Slow-rise window function used to truncate the unit-cell wall integrals.
//!
//! χ(y, y₀, y₁) is identically 1 on |y| ≤ y₀, identically 0 on |y| ≥ y₁, and
//! infinitely smooth in between, so windowed oscillatory integrals of
//! radiative traces decay super-algebraically as the window grows.

/// χ(y, y₀, y₁) = exp(2e^{−1/u}/(u−1)) with u = (|y|−y₀)/(y₁−y₀) on the rise.
pub fn window_value(y: f64, y0: f64, y1: f64) -> f64 {
    debug_assert!(0.0 < y0 && y0 < y1);
    let a = y.abs();
    if a <= y0 {
        1.0
    } else if a >= y1 {
        0.0
    } else {
        let u = (a - y0) / (y1 - y0);
        (2.0 * (-1.0 / u).exp() / (u - 1.0)).exp()
    }
}

/// dχ/dy. Needed for curve parametrizations that use χ as a smooth cutoff.
pub fn window_derivative(y: f64, y0: f64, y1: f64) -> f64 {
    debug_assert!(0.0 < y0 && y0 < y1);
    let a = y.abs();
    if a <= y0 || a >= y1 {
        0.0
    } else {
        let w = y1 - y0;
        let u = (a - y0) / w;
        let g = 2.0 * (-1.0 / u).exp() / (u - 1.0);
        // g'(u) = 2 e^{−1/u} ((u−1) − u²) / (u² (u−1)²)
        let gp = 2.0 * (-1.0 / u).exp() * ((u - 1.0) - u * u) / (u * u * (u - 1.0) * (u - 1.0));
        g.exp() * gp * y.signum() / w
    }
}
