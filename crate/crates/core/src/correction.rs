//! Finite-rank correction of the windowed operator.
//!
//! The naive windowed system silently admits incoming-mode content for modes
//! with small |β_n|, which wrecks accuracy at and around grazing (anomalous)
//! configurations. The fix adds, for each mode n in the correction set C_δ,
//! a rank-≤2 update Φ_n·L_n built from the mode traces Φ_n^± on Γ₁ and
//! discretized radiation functionals L_n^±. The functionals integrate the
//! (∂_y ∓ iβ_n)-combination of the layer potentials over one period at
//! height ±h, using a three-period supercell so no kernel is ever evaluated
//! near its source curve.
//!
//! Because β_n enters L_n^± only through the multiplier ∓iβ_n, each
//! functional is stored as a pair of rows (plain value and ∂_y projections);
//! the β-derivative rows needed by the degenerate branch at anomalies are
//! then exact.

use crate::assembly::BlockSystem;
use crate::kernels;
use crate::modes::{mode_trace_at, wood_derivative_trace_at, ModeClass, ModeEntry, ModeTable, Sign};
use crate::quadrature::trapezoid_weights;
use num_complex::Complex64;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum CorrectionError {
    NotAnomalous { n: i32 },
    ModeOutOfRange { n: i32 },
}

impl fmt::Display for CorrectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrectionError::NotAnomalous { n } => {
                write!(f, "mode {n} is not anomalous; no degenerate functional exists")
            }
            CorrectionError::ModeOutOfRange { n } => write!(f, "mode {n} outside the table range"),
        }
    }
}

impl std::error::Error for CorrectionError {}

/// Default segment quadrature size for the radiation functionals.
pub fn default_functional_quadrature(k1: f64, period: f64) -> usize {
    ((8.0 * k1 * period / std::f64::consts::PI).ceil() as usize).max(64)
}

/// One mode's contribution to the corrected operator.
#[derive(Debug, Clone)]
pub struct CorrectionTerm {
    pub n: i32,
    pub alpha_n: f64,
    pub beta_n: Complex64,
    pub wood: bool,
    /// Φ_n⁺: traces of u_n⁻ on Γ₁ (Dirichlet block then Neumann block), zero
    /// on wall rows.
    pub column_plus: Vec<Complex64>,
    /// Φ_n⁻: traces of u_n⁺.
    pub column_minus: Vec<Complex64>,
    /// ∂βΦ_n at β = 0 (anomalous modes only, else empty).
    pub column_deriv: Vec<Complex64>,
    /// Row of ∂_y-projections at +h (window applied to wall entries).
    pub grad_row_plus: Vec<Complex64>,
    pub val_row_plus: Vec<Complex64>,
    pub grad_row_minus: Vec<Complex64>,
    pub val_row_minus: Vec<Complex64>,
}

impl CorrectionTerm {
    /// Discretized L_n^± = grad_row^± ∓ iβ_n·val_row^±.
    pub fn functional_row(&self, sign: Sign) -> Vec<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let (g, v) = match sign {
            Sign::Plus => (&self.grad_row_plus, &self.val_row_plus),
            Sign::Minus => (&self.grad_row_minus, &self.val_row_minus),
        };
        g.iter()
            .zip(v)
            .map(|(gc, vc)| gc - i * self.beta_n * sign.factor() * vc)
            .collect()
    }

    /// ∂β L_n^± = ∓i·val_row^± (exact: β enters only through the multiplier).
    pub fn functional_derivative_row(&self, sign: Sign) -> Vec<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let v = match sign {
            Sign::Plus => &self.val_row_plus,
            Sign::Minus => &self.val_row_minus,
        };
        v.iter().map(|vc| -i * sign.factor() * vc).collect()
    }

    /// Regular-branch scale e^{iβ_n h}/(2iβ_n).
    pub fn scale(&self, h: f64) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        (i * self.beta_n * h).exp() / (2.0 * i * self.beta_n)
    }
}

/// Builds the correction term for one mode entry (possibly synthetic, e.g.
/// for continuity studies with an artificial β).
pub fn build_correction_term(system: &BlockSystem, entry: &ModeEntry, n_quad: usize) -> CorrectionTerm {
    let n1 = system.n1;
    let n2 = system.n2;
    let n = system.n();
    let wood = entry.class == ModeClass::Anomalous;

    // Mode-trace columns on Γ₁.
    let mut column_plus = vec![Complex64::new(0.0, 0.0); n];
    let mut column_minus = vec![Complex64::new(0.0, 0.0); n];
    let mut column_deriv = Vec::new();
    for (i, p) in system.gamma1.points.iter().enumerate() {
        let (dm, nm) = mode_trace_at(entry, Sign::Minus, p);
        column_plus[i] = dm;
        column_plus[n1 + i] = nm;
        let (dp, np) = mode_trace_at(entry, Sign::Plus, p);
        column_minus[i] = dp;
        column_minus[n1 + i] = np;
    }
    if wood {
        column_deriv = vec![Complex64::new(0.0, 0.0); n];
        for (i, p) in system.gamma1.points.iter().enumerate() {
            let (d, nm) = wood_derivative_trace_at(entry, p).expect("anomalous entry");
            column_deriv[i] = d;
            column_deriv[n1 + i] = nm;
        }
    }

    // Radiation-functional rows via the supercell quadrature.
    let cfg = &system.cfg;
    let period = cfg.period;
    let h = system.window.h;
    let (xs, ws) = trapezoid_weights(-period / 2.0, period / 2.0, n_quad);
    let gamma = cfg.gamma;
    let gamma_inv = Complex64::new(1.0, 0.0) / gamma;
    let gamma2 = gamma * gamma;
    let i_unit = Complex64::new(0.0, 1.0);

    let mut grad_row_plus = vec![Complex64::new(0.0, 0.0); n];
    let mut val_row_plus = vec![Complex64::new(0.0, 0.0); n];
    let mut grad_row_minus = vec![Complex64::new(0.0, 0.0); n];
    let mut val_row_minus = vec![Complex64::new(0.0, 0.0); n];

    for (m, (&xm, &wm)) in xs.iter().zip(&ws).enumerate() {
        let _ = m;
        let phase = (-i_unit * entry.alpha_n * xm).exp() * (wm / period);
        for (target_sign, grad_row, val_row) in [
            (1.0, &mut grad_row_plus, &mut val_row_plus),
            (-1.0, &mut grad_row_minus, &mut val_row_minus),
        ] {
            let target = [xm, target_sign * h];
            // Obstacle copies at shifts −L, 0, +L with Bloch weights γ^j.
            for (shift, wgt) in [(-period, gamma_inv), (0.0, Complex64::new(1.0, 0.0)), (period, gamma)]
            {
                for (i, p) in system.gamma1.points.iter().enumerate() {
                    let src = [p.position[0] + shift, p.position[1]];
                    let e = kernels::kernel_eval(cfg.k1, target, src);
                    let w = system.gamma1.weights[i] * p.jacobian;
                    let qk = kernels::q_k(cfg.k1, &e, p.normal);
                    let gk = kernels::grad_k(cfg.k1, &e, p.normal)[1];
                    let qv = kernels::q_v(&e);
                    let gv = kernels::grad_v(cfg.k1, &e)[1];
                    let c = wgt * phase * w;
                    val_row[i] += c * qk;
                    grad_row[i] += c * gk;
                    val_row[n1 + i] -= c * cfg.eta * qv;
                    grad_row[n1 + i] -= c * cfg.eta * gv;
                }
            }
            // Supercell walls: Γ₂ − L (weight γ⁻¹) and Γ₃ + L (weight −γ²).
            for (grid, shift, wgt) in [
                (&system.wall2, -period, gamma_inv),
                (&system.wall3, period, -gamma2),
            ] {
                for (q, p) in grid.points.iter().enumerate() {
                    let src = [p.position[0] + shift, p.position[1]];
                    let e = kernels::kernel_eval(cfg.k1, target, src);
                    let w = grid.weights[q] * p.jacobian * system.window_weights[q];
                    let qk = kernels::q_k(cfg.k1, &e, p.normal);
                    let gk = kernels::grad_k(cfg.k1, &e, p.normal)[1];
                    let qv = kernels::q_v(&e);
                    let gv = kernels::grad_v(cfg.k1, &e)[1];
                    let c = wgt * phase * w;
                    val_row[2 * n1 + q] += c * qk;
                    grad_row[2 * n1 + q] += c * gk;
                    val_row[2 * n1 + n2 + q] -= c * qv;
                    grad_row[2 * n1 + n2 + q] -= c * gv;
                }
            }
        }
    }

    CorrectionTerm {
        n: entry.n,
        alpha_n: entry.alpha_n,
        beta_n: entry.beta_n,
        wood,
        column_plus,
        column_minus,
        column_deriv,
        grad_row_plus,
        val_row_plus,
        grad_row_minus,
        val_row_minus,
    }
}

/// Discretized functional L_n^sign for a table mode.
pub fn functional_row(
    system: &BlockSystem,
    table: &ModeTable,
    n: i32,
    sign: Sign,
    n_quad: usize,
) -> Result<Vec<Complex64>, CorrectionError> {
    let entry = table.get(n).map_err(|_| CorrectionError::ModeOutOfRange { n })?;
    Ok(build_correction_term(system, entry, n_quad).functional_row(sign))
}

/// Discretized ∂βL_n^sign at β_n = 0; anomalous modes only.
pub fn functional_derivative_row(
    system: &BlockSystem,
    table: &ModeTable,
    n: i32,
    sign: Sign,
    n_quad: usize,
) -> Result<Vec<Complex64>, CorrectionError> {
    let entry = table.get(n).map_err(|_| CorrectionError::ModeOutOfRange { n })?;
    if entry.class != ModeClass::Anomalous {
        return Err(CorrectionError::NotAnomalous { n });
    }
    Ok(build_correction_term(system, entry, n_quad).functional_derivative_row(sign))
}

/// Adds one term's rank-≤2 update to the dense matrix (rows of the Γ₁
/// blocks only; the mode-trace columns vanish on wall rows).
pub fn apply_term(matrix: &mut [Complex64], n: usize, n1: usize, term: &CorrectionTerm, h: f64) {
    if term.wood {
        // (1/2i)[Φ_n ∂β(L⁻ − L⁺) + ∂βΦ_n (L⁻ + L⁺)] at β = 0
        //   = ½ Φ_n (val⁺ + val⁻) − (i/2) ∂βΦ_n (grad⁺ + grad⁻).
        let half = Complex64::new(0.5, 0.0);
        let mhalf_i = Complex64::new(0.0, -0.5);
        for r in 0..2 * n1 {
            let c0 = term.column_plus[r]; // Φ_n (both columns coincide at β = 0)
            let cd = term.column_deriv[r];
            if c0.norm_sqr() == 0.0 && cd.norm_sqr() == 0.0 {
                continue;
            }
            let row = &mut matrix[r * n..(r + 1) * n];
            for c in 0..n {
                let vsum = term.val_row_plus[c] + term.val_row_minus[c];
                let gsum = term.grad_row_plus[c] + term.grad_row_minus[c];
                row[c] += half * c0 * vsum + mhalf_i * cd * gsum;
            }
        }
    } else {
        let scale = term.scale(h);
        let i = Complex64::new(0.0, 1.0);
        for r in 0..2 * n1 {
            let cm = term.column_minus[r];
            let cp = term.column_plus[r];
            let row = &mut matrix[r * n..(r + 1) * n];
            for c in 0..n {
                let lm = term.grad_row_minus[c] + i * term.beta_n * term.val_row_minus[c];
                let lp = term.grad_row_plus[c] - i * term.beta_n * term.val_row_plus[c];
                row[c] += scale * (cm * lm - cp * lp);
            }
        }
    }
}

/// Builds and applies all corrections for the modes in C_δ, returning the
/// corrected system (which keeps the terms for field evaluation).
pub fn assemble_corrected(
    mut system: BlockSystem,
    table: &ModeTable,
    n_quad: usize,
) -> BlockSystem {
    let h = system.window.h;
    let n = system.n();
    let n1 = system.n1;
    let mut terms = Vec::new();
    for nn in table.c_delta() {
        let entry = table.get(nn).expect("C_δ indices live in the table");
        let term = build_correction_term(&system, entry, n_quad);
        apply_term(&mut system.matrix, n, n1, &term, h);
        terms.push(term);
    }
    system.corrections = terms;
    system
}
