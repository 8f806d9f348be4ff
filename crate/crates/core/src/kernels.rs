//! Parametrized free-space Helmholtz kernels for the four boundary integral
//! operators, their target gradients, and the splittings used by the
//! spectral log-kernel quadrature on closed curves.
//!
//! With R⃗ = target − source, R = |R⃗|, the kernels are
//!   Q_V  = (i/4)·H₀⁽¹⁾(kR)
//!   Q_K  = (ik/4)·H₁⁽¹⁾(kR)·(R⃗·n_src)/R
//!   Q_K̃ = −(ik/4)·H₁⁽¹⁾(kR)·(R⃗·n_tgt)/R
//!   Q_W  = (ik/4)·[H₁⁽¹⁾(kR)/R·(n_tgt·n_src)
//!          + {kR·H₀⁽¹⁾(kR) − 2H₁⁽¹⁾(kR)}·(R⃗·n_src)(R⃗·n_tgt)/R³].
//!
//! Q_W is hypersingular on its own; only differences Q_W(k_a) − Q_W(k_b) are
//! weakly singular, and the splitting helpers below exist for that difference.

use crate::geometry::CurvePoint;
use crate::specfun::{self, Bessel01};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelError {
    CoincidentPoints,
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelError::CoincidentPoints => write!(f, "kernel evaluated at coincident points"),
        }
    }
}

impl std::error::Error for KernelError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    SingleLayer,
    DoubleLayer,
    AdjointDoubleLayer,
    Hypersingular,
}

/// Geometry and Bessel data shared by every kernel at one (target, source) pair.
#[derive(Debug, Clone, Copy)]
pub struct KernelEval {
    pub rvec: [f64; 2],
    pub r: f64,
    /// z = kR.
    pub z: f64,
    pub b: Bessel01,
}

pub fn kernel_eval(k: f64, target: [f64; 2], source: [f64; 2]) -> KernelEval {
    let rvec = [target[0] - source[0], target[1] - source[1]];
    let r = (rvec[0] * rvec[0] + rvec[1] * rvec[1]).sqrt();
    let z = k * r;
    KernelEval { rvec, r, z, b: specfun::bessel01_raw(z) }
}

#[inline]
pub fn h0(e: &KernelEval) -> Complex64 {
    Complex64::new(e.b.j0, e.b.y0)
}

#[inline]
pub fn h1(e: &KernelEval) -> Complex64 {
    Complex64::new(e.b.j1, e.b.y1)
}

const I4: Complex64 = Complex64::new(0.0, 0.25);

#[inline]
pub fn q_v(e: &KernelEval) -> Complex64 {
    I4 * h0(e)
}

#[inline]
pub fn q_k(k: f64, e: &KernelEval, n_src: [f64; 2]) -> Complex64 {
    let d = (e.rvec[0] * n_src[0] + e.rvec[1] * n_src[1]) / e.r;
    I4 * k * h1(e) * d
}

#[inline]
pub fn q_kt(k: f64, e: &KernelEval, n_tgt: [f64; 2]) -> Complex64 {
    let d = (e.rvec[0] * n_tgt[0] + e.rvec[1] * n_tgt[1]) / e.r;
    -I4 * k * h1(e) * d
}

#[inline]
pub fn q_w(k: f64, e: &KernelEval, n_tgt: [f64; 2], n_src: [f64; 2]) -> Complex64 {
    let rns = e.rvec[0] * n_src[0] + e.rvec[1] * n_src[1];
    let rnt = e.rvec[0] * n_tgt[0] + e.rvec[1] * n_tgt[1];
    let ndot = n_tgt[0] * n_src[0] + n_tgt[1] * n_src[1];
    let r3 = e.r * e.r * e.r;
    I4 * k * (h1(e) / e.r * ndot + (h0(e) * e.z - 2.0 * h1(e)) * (rns * rnt / r3))
}

/// Target gradient of the single-layer kernel: ∇_t Q_V = −(ik/4)H₁(kR)·R⃗/R.
pub fn grad_v(k: f64, e: &KernelEval) -> [Complex64; 2] {
    let c = -I4 * k * h1(e) / e.r;
    [c * e.rvec[0], c * e.rvec[1]]
}

/// Target gradient of the double-layer kernel:
/// ∇_t Q_K = (ik/4)[{kR·H₀ − 2H₁}(R⃗·n_src)·R⃗/R³ + H₁·n_src/R].
pub fn grad_k(k: f64, e: &KernelEval, n_src: [f64; 2]) -> [Complex64; 2] {
    let rns = e.rvec[0] * n_src[0] + e.rvec[1] * n_src[1];
    let r3 = e.r * e.r * e.r;
    let c = I4 * k * (h0(e) * e.z - 2.0 * h1(e)) * (rns / r3);
    let d = I4 * k * h1(e) / e.r;
    [c * e.rvec[0] + d * n_src[0], c * e.rvec[1] + d * n_src[1]]
}

/// Public single-kernel evaluation (off-diagonal use only).
pub fn kernel(
    op: OpKind,
    k: f64,
    target: &CurvePoint,
    source: &CurvePoint,
) -> Result<Complex64, KernelError> {
    let dx = target.position[0] - source.position[0];
    let dy = target.position[1] - source.position[1];
    if dx * dx + dy * dy == 0.0 {
        return Err(KernelError::CoincidentPoints);
    }
    let e = kernel_eval(k, target.position, source.position);
    Ok(match op {
        OpKind::SingleLayer => q_v(&e),
        OpKind::DoubleLayer => q_k(k, &e, source.normal),
        OpKind::AdjointDoubleLayer => q_kt(k, &e, target.normal),
        OpKind::Hypersingular => q_w(k, &e, target.normal, source.normal),
    })
}

// ---------------------------------------------------------------------------
// Splittings  kernel(t,τ) = A(t,τ)·ln(4sin²((t−τ)/2)) + B(t,τ)  on closed
// curves. `log_k_rho_half` is ln(kρ/2) with ρ = R/(2|sin((t−τ)/2)|), which
// tends to ln(k|r′(t)|/2) on the diagonal. Jacobian factors are applied by
// the caller.
// ---------------------------------------------------------------------------

pub fn v_split(e: &KernelEval, log_k_rho_half: f64) -> (f64, Complex64) {
    let a = -e.b.j0 / (4.0 * PI);
    let b = Complex64::new(
        -0.25 * e.b.y0_smooth - log_k_rho_half * e.b.j0 / (2.0 * PI),
        0.25 * e.b.j0,
    );
    (a, b)
}

pub fn v_diag(k: f64, jacobian: f64) -> (f64, Complex64) {
    const EULER: f64 = 0.5772156649015329;
    let a = -1.0 / (4.0 * PI);
    let b = Complex64::new(
        -EULER / (2.0 * PI) - (k * jacobian / 2.0).ln() / (2.0 * PI),
        0.25,
    );
    (a, b)
}

pub fn k_split(k: f64, e: &KernelEval, n_src: [f64; 2], log_k_rho_half: f64) -> (f64, Complex64) {
    let d = (e.rvec[0] * n_src[0] + e.rvec[1] * n_src[1]) / e.r;
    let a = -k * e.b.j1 * d / (4.0 * PI);
    let b = Complex64::new(
        -0.25 * k * e.b.y1_smooth * d - k * log_k_rho_half * e.b.j1 * d / (2.0 * PI),
        0.25 * k * e.b.j1 * d,
    );
    (a, b)
}

pub fn kt_split(k: f64, e: &KernelEval, n_tgt: [f64; 2], log_k_rho_half: f64) -> (f64, Complex64) {
    let d = (e.rvec[0] * n_tgt[0] + e.rvec[1] * n_tgt[1]) / e.r;
    let a = k * e.b.j1 * d / (4.0 * PI);
    let b = Complex64::new(
        0.25 * k * e.b.y1_smooth * d + k * log_k_rho_half * e.b.j1 * d / (2.0 * PI),
        -0.25 * k * e.b.j1 * d,
    );
    (a, b)
}

/// Shared diagonal of the double-layer and adjoint double-layer splittings.
/// The splittings carry unit normals (the jacobian is applied by the
/// assembly), so the limit is (y′x″ − x′y″)/(4π|r′|³).
pub fn k_diag(tangent: [f64; 2], second: [f64; 2], jacobian: f64) -> Complex64 {
    Complex64::new(
        (tangent[1] * second[0] - tangent[0] * second[1])
            / (4.0 * PI * jacobian * jacobian * jacobian),
        0.0,
    )
}

/// Splitting of the hypersingular difference Q_W(k_a) − Q_W(k_b); the static
/// 1/R² and 1/R⁴ parts cancel algebraically and never get evaluated.
pub fn w_diff_split(
    k_a: f64,
    e_a: &KernelEval,
    k_b: f64,
    e_b: &KernelEval,
    n_tgt: [f64; 2],
    n_src: [f64; 2],
    log_rho_half_no_k: f64, // ln(ρ/2), ρ = R/(2|sin((t−τ)/2)|); the k factor differs per term
) -> (f64, Complex64) {
    let rns = e_a.rvec[0] * n_src[0] + e_a.rvec[1] * n_src[1];
    let rnt = e_a.rvec[0] * n_tgt[0] + e_a.rvec[1] * n_tgt[1];
    let ndot = n_tgt[0] * n_src[0] + n_tgt[1] * n_src[1];

    let profile = |k: f64, e: &KernelEval| -> (f64, f64, Complex64, Complex64) {
        let k2 = k * k;
        let k4 = k2 * k2;
        let g1 = specfun::j1_over_x(e.z);
        let g2 = specfun::w_log_aux(e.z);
        let g3 = specfun::k_smooth_aux(e.z);
        let hh = specfun::w_smooth_aux(e.z);
        let lg = log_rho_half_no_k + k.ln();
        // Smooth parts of the 1/R²-type and (R⃗·n)(R⃗·n)-type pieces.
        let p = Complex64::new(-0.25 * k2 * g3 - k2 * lg * g1 / (2.0 * PI), 0.25 * k2 * g1);
        let s = Complex64::new(-0.25 * k4 * hh - k4 * lg * g2 / (2.0 * PI), 0.25 * k4 * g2);
        (k2 * g1, k4 * g2, p, s)
    };

    let (a1_a, a2_a, p_a, s_a) = profile(k_a, e_a);
    let (a1_b, a2_b, p_b, s_b) = profile(k_b, e_b);

    let a = -((a1_a - a1_b) * ndot + (a2_a - a2_b) * rns * rnt) / (4.0 * PI);
    let b = (p_a - p_b) * ndot + (s_a - s_b) * (rns * rnt);
    (a, b)
}

pub fn w_diff_diag(k_a: f64, k_b: f64, jacobian: f64) -> (f64, Complex64) {
    const EULER: f64 = 0.5772156649015329;
    let d2 = k_a * k_a - k_b * k_b;
    let a = -d2 / (8.0 * PI);
    let g3_0 = (2.0 * EULER - 1.0) / (2.0 * PI);
    let b = Complex64::new(
        -0.25 * g3_0 * d2
            - (k_a * k_a * (k_a * jacobian / 2.0).ln() - k_b * k_b * (k_b * jacobian / 2.0).ln())
                / (4.0 * PI),
        0.125 * d2,
    );
    (a, b)
}
