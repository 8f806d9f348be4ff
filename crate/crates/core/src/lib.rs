//! Boundary integral solver for time-harmonic planewave scattering by
//! 2D periodic line arrays of penetrable obstacles.
//!
//! The formulation is a direct second-kind system for the transmission
//! problem on the obstacle boundary plus the two unit-cell walls, built
//! entirely from free-space Helmholtz kernels. Integrals over the unbounded
//! walls are truncated with a smooth slow-rise window, and the Rayleigh
//! radiation condition is restored by a finite-rank correction of the
//! windowed operator. The corrected system stays accurate at and around
//! Rayleigh–Wood anomalies, where quasi-periodic Green function methods
//! break down.
//!
//! Module layout:
//!
//! - [`specfun`]: Bessel/Hankel functions of orders 0 and 1 with the
//!   splittings needed for logarithmic kernel quadrature.
//! - [`window`]: the slow-rise window function.
//! - [`geometry`]: parametrized obstacle and wall curves.
//! - [`modes`]: problem configuration and the Rayleigh mode table.
//! - [`kernels`]: parametrized layer-potential kernels and their gradients.
//! - [`quadrature`]: spectral log-kernel weights and trapezoidal helpers.
//! - [`assembly`]: grids and the dense windowed block system.
//! - [`correction`]: radiation-condition functionals and the corrected operator.
//! - [`solver`]: dense LU and (preconditioned) GMRES.
//! - [`postprocess`]: field evaluation, Rayleigh coefficients, energy balance,
//!   quasi-periodicity and radiation diagnostics.
//! - [`scenario`]: named experiment setups, sweeps, and CSV output.

pub mod assembly;
pub mod correction;
pub mod geometry;
pub mod kernels;
pub mod modes;
pub mod postprocess;
pub mod quadrature;
pub mod scenario;
pub mod solver;
pub mod specfun;
pub mod window;

pub use num_complex::Complex64;

#[doc(hidden)]
pub fn debug_wdiag() {
    use crate::geometry::Curve;
    let kite = Curve::kite();
    let (k1, k2) = (10.68, 20.0);
    let t = 1.1;
    let a_pt = kite.point(0, t);
    let (ad, bd) = crate::kernels::w_diff_diag(k2, k1, a_pt.jacobian);
    println!("diag: a={ad:.10e} b={bd:.10e}");
    for dt in [1e-1, 1e-2, 1e-3, 1e-4] {
        let b_pt = kite.point(0, t - dt);
        let e1 = crate::kernels::kernel_eval(k1, a_pt.position, b_pt.position);
        let e2 = crate::kernels::kernel_eval(k2, a_pt.position, b_pt.position);
        let s2 = 4.0 * (dt_f(dt) / 2.0).sin().powi(2);
        let rho = e1.r / s2.sqrt();
        let (a, b) = crate::kernels::w_diff_split(k2, &e2, k1, &e1, a_pt.normal, b_pt.normal, (rho / 2.0).ln());
        // reassembly check
        let direct = crate::kernels::q_w(k2, &e2, a_pt.normal, b_pt.normal) - crate::kernels::q_w(k1, &e1, a_pt.normal, b_pt.normal);
        let re = a * s2.ln() + b;
        println!("dt={dt:.1e}: a={a:.10e} b={b:.10e} | reasm err={:.3e} | diag diff a={:.3e} b={:.3e}", (re - direct).norm(), (a - ad).abs(), (b - bd).norm());
    }
    fn dt_f(x: f64) -> f64 { x }
}
