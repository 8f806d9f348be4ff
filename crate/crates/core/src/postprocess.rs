//! Post-processing: scattered/transmitted field evaluation, Rayleigh
//! coefficient extraction, energy balance, reflectance/transmittance, and the
//! quasi-periodicity and radiation diagnostics.
//!
//! Measurement-line quantities (coefficients, radiation residuals, mismatch
//! errors) are evaluated through a three-period supercell representation of
//! the scattered field, so the integration segment never touches a source
//! curve. Pointwise field queries use the single-cell representation and
//! refuse evaluation within two node spacings of any curve.

use crate::assembly::BlockSystem;
use crate::kernels;
use crate::modes::{ModeClass, ModeTable, ProblemConfig};
use crate::solver::SolveReport;
use num_complex::Complex64;
use std::fmt;
use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub enum FieldError {
    /// Evaluation point within two node spacings of a source curve.
    TooCloseToBoundary { distance: f64, limit: f64 },
    /// Measurement height outside (max{h⁺, −h⁻}, cA).
    HeightOutOfRange { h: f64, lo: f64, hi: f64 },
    ModeOutOfRange { n: i32 },
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::TooCloseToBoundary { distance, limit } => write!(
                f,
                "evaluation point {distance:.3e} from a source curve (near-singular below {limit:.3e})"
            ),
            FieldError::HeightOutOfRange { h, lo, hi } => {
                write!(f, "measurement height {h} outside ({lo}, {hi})")
            }
            FieldError::ModeOutOfRange { n } => write!(f, "mode {n} outside the table range"),
        }
    }
}

impl std::error::Error for FieldError {}

/// Functional dot products for one correction term, fixed by the solved density.
#[derive(Debug, Clone, Copy)]
struct ModalValues {
    grad_plus: Complex64,
    grad_minus: Complex64,
    val_plus: Complex64,
    val_minus: Complex64,
}

/// A solved system bundled with everything field evaluation needs.
#[derive(Debug, Clone)]
pub struct Solution {
    pub system: BlockSystem,
    pub table: ModeTable,
    pub report: SolveReport,
    modal: Vec<ModalValues>,
}

fn row_dot(row: &[Complex64], x: &[Complex64]) -> Complex64 {
    row.iter().zip(x).map(|(a, b)| a * b).sum()
}

impl Solution {
    pub fn new(system: BlockSystem, table: ModeTable, report: SolveReport) -> Solution {
        let modal = system
            .corrections
            .iter()
            .map(|t| ModalValues {
                grad_plus: row_dot(&t.grad_row_plus, &report.density),
                grad_minus: row_dot(&t.grad_row_minus, &report.density),
                val_plus: row_dot(&t.val_row_plus, &report.density),
                val_minus: row_dot(&t.val_row_minus, &report.density),
            })
            .collect();
        Solution { system, table, report, modal }
    }

    pub fn density(&self) -> &[Complex64] {
        &self.report.density
    }

    pub fn cfg(&self) -> &ProblemConfig {
        &self.system.cfg
    }

    fn phi(&self, block: usize, i: usize) -> Complex64 {
        let (n1, n2) = (self.system.n1, self.system.n2);
        let off = match block {
            1 => 0,
            2 => n1,
            3 => 2 * n1,
            4 => 2 * n1 + n2,
            _ => unreachable!(),
        };
        self.report.density[off + i]
    }
}

struct Evaluator<'a> {
    sol: &'a Solution,
    supercell: bool,
    include_modal: bool,
    check_distance: bool,
}

impl<'a> Evaluator<'a> {
    fn distance_guard(&self, x: f64, y: f64) -> Result<(), FieldError> {
        let sys = &self.sol.system;
        let shifts: &[f64] = if self.supercell {
            &[-1.0, 0.0, 1.0]
        } else {
            &[0.0]
        };
        let period = sys.cfg.period;
        for grid in [&sys.gamma1, &sys.wall2, &sys.wall3] {
            for (p, w) in grid.points.iter().zip(&grid.weights) {
                let limit = 2.0 * w * p.jacobian;
                for s in shifts {
                    let dx = x - (p.position[0] + s * period);
                    let dy = y - p.position[1];
                    let d = (dx * dx + dy * dy).sqrt();
                    if d < limit {
                        return Err(FieldError::TooCloseToBoundary { distance: d, limit });
                    }
                }
            }
        }
        Ok(())
    }

    /// Scattered-field value and gradient at (x, y).
    fn eval(&self, x: f64, y: f64, want_grad: bool) -> Result<(Complex64, [Complex64; 2]), FieldError> {
        if self.check_distance {
            self.distance_guard(x, y)?;
        }
        let sys = &self.sol.system;
        let cfg = &sys.cfg;
        let k1 = cfg.k1;
        let eta = cfg.eta;
        let gamma = cfg.gamma;
        let period = cfg.period;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let target = [x, y];

        let mut value = zero;
        let mut grad = [zero, zero];

        // (shift, weight) pairs for the obstacle and wall contributions.
        let obstacle_copies: Vec<(f64, Complex64)> = if self.supercell {
            vec![(-period, one / gamma), (0.0, one), (period, gamma)]
        } else {
            vec![(0.0, one)]
        };
        let wall_copies: Vec<(usize, f64, Complex64)> = if self.supercell {
            // (wall index: 2 or 3, shift, weight)
            vec![(2, -period, one / gamma), (3, period, -gamma * gamma)]
        } else {
            vec![(2, 0.0, one), (3, 0.0, -gamma)]
        };

        for (shift, wgt) in &obstacle_copies {
            for (i, p) in sys.gamma1.points.iter().enumerate() {
                let src = [p.position[0] + shift, p.position[1]];
                let e = kernels::kernel_eval(k1, target, src);
                let w = sys.gamma1.weights[i] * p.jacobian;
                let d1 = self.sol.phi(1, i);
                let d2 = self.sol.phi(2, i);
                value += wgt * w * (kernels::q_k(k1, &e, p.normal) * d1 - eta * kernels::q_v(&e) * d2);
                if want_grad {
                    let gk = kernels::grad_k(k1, &e, p.normal);
                    let gv = kernels::grad_v(k1, &e);
                    for axis in 0..2 {
                        grad[axis] += wgt * w * (gk[axis] * d1 - eta * gv[axis] * d2);
                    }
                }
            }
        }

        for (wall_idx, shift, wgt) in &wall_copies {
            let grid = if *wall_idx == 2 { &sys.wall2 } else { &sys.wall3 };
            for (q, p) in grid.points.iter().enumerate() {
                let src = [p.position[0] + shift, p.position[1]];
                let e = kernels::kernel_eval(k1, target, src);
                let w = grid.weights[q] * p.jacobian * sys.window_weights[q];
                let d3 = self.sol.phi(3, q);
                let d4 = self.sol.phi(4, q);
                value += wgt * w * (kernels::q_k(k1, &e, p.normal) * d3 - kernels::q_v(&e) * d4);
                if want_grad {
                    let gk = kernels::grad_k(k1, &e, p.normal);
                    let gv = kernels::grad_v(k1, &e);
                    for axis in 0..2 {
                        grad[axis] += wgt * w * (gk[axis] * d3 - gv[axis] * d4);
                    }
                }
            }
        }

        if self.include_modal {
            let h = sys.window.h;
            let i = Complex64::new(0.0, 1.0);
            for (term, mv) in sys.corrections.iter().zip(&self.sol.modal) {
                let phase = (i * term.alpha_n * x).exp();
                if term.wood {
                    // −½ [ v_n(r)(ℓ₀⁺ + ℓ₀⁻) + u_n(r)(m⁺ + m⁻) ]
                    let gsum = mv.grad_plus + mv.grad_minus;
                    let vsum = mv.val_plus + mv.val_minus;
                    let u_n = phase;
                    let v_n = phase * y;
                    value += -0.5 * (v_n * gsum + u_n * vsum);
                    if want_grad {
                        let du = [i * term.alpha_n * u_n, zero];
                        let dv = [i * term.alpha_n * v_n, u_n];
                        for axis in 0..2 {
                            grad[axis] += -0.5 * (dv[axis] * gsum + du[axis] * vsum);
                        }
                    }
                } else {
                    let b = term.beta_n;
                    let scale = (i * b * h).exp() / (2.0 * i * b);
                    let l_plus = mv.grad_plus - i * b * mv.val_plus;
                    let l_minus = mv.grad_minus + i * b * mv.val_minus;
                    let u_m = phase * (-i * b * y).exp();
                    let u_p = phase * (i * b * y).exp();
                    value += scale * (u_m * l_plus - u_p * l_minus);
                    if want_grad {
                        let du_m = [i * term.alpha_n * u_m, -i * b * u_m];
                        let du_p = [i * term.alpha_n * u_p, i * b * u_p];
                        for axis in 0..2 {
                            grad[axis] += scale * (du_m[axis] * l_plus - du_p[axis] * l_minus);
                        }
                    }
                }
            }
        }

        Ok((value, grad))
    }
}

/// Scattered field u^s_A at a point of the exterior plateau region.
///
/// With `corrected` the mode-correction terms of the solved system are
/// included (no-op for a naive solve).
pub fn scattered_field(sol: &Solution, point: [f64; 2], corrected: bool) -> Result<Complex64, FieldError> {
    let ev = Evaluator { sol, supercell: false, include_modal: corrected, check_distance: true };
    Ok(ev.eval(point[0], point[1], false)?.0)
}

/// Transmitted field u^t = −D₂φ₁ + S₂φ₂ at an interior point.
pub fn transmitted_field(sol: &Solution, point: [f64; 2]) -> Result<Complex64, FieldError> {
    let sys = &sol.system;
    let k2 = sys.cfg.k2;
    // Near-boundary guard against Γ₁ only (interior points are far from walls).
    for (p, w) in sys.gamma1.points.iter().zip(&sys.gamma1.weights) {
        let limit = 2.0 * w * p.jacobian;
        let d = ((point[0] - p.position[0]).powi(2) + (point[1] - p.position[1]).powi(2)).sqrt();
        if d < limit {
            return Err(FieldError::TooCloseToBoundary { distance: d, limit });
        }
    }
    let mut value = Complex64::new(0.0, 0.0);
    for (i, p) in sys.gamma1.points.iter().enumerate() {
        let e = kernels::kernel_eval(k2, point, p.position);
        let w = sys.gamma1.weights[i] * p.jacobian;
        value += w * (-kernels::q_k(k2, &e, p.normal) * sol.phi(1, i) + kernels::q_v(&e) * sol.phi(2, i));
    }
    Ok(value)
}

/// Even-odd test against the sampled boundary polygon of any Γ₁ component.
pub fn point_in_obstacle(sol: &Solution, point: [f64; 2]) -> bool {
    let grid = &sol.system.gamma1;
    for (c, &nc) in grid.component_sizes.iter().enumerate() {
        let off = grid.component_offsets[c];
        let mut inside = false;
        for i in 0..nc {
            let a = grid.points[off + i].position;
            let b = grid.points[off + (i + 1) % nc].position;
            if (a[1] > point[1]) != (b[1] > point[1]) {
                let t = (point[1] - a[1]) / (b[1] - a[1]);
                if point[0] < a[0] + t * (b[0] - a[0]) {
                    inside = !inside;
                }
            }
        }
        if inside {
            return true;
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Rayleigh coefficients, energy balance, reflectance/transmittance
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct SpectrumEntry {
    pub n: i32,
    pub b_plus: Complex64,
    pub b_minus: Complex64,
}

#[derive(Debug, Clone)]
pub struct RayleighSpectrum {
    pub coefficients: Vec<SpectrumEntry>,
    pub energy_balance_error: f64,
    pub reflectance: f64,
    pub transmittance: f64,
    pub h: f64,
    pub n_quad: usize,
}

fn check_height(sol: &Solution, h: f64) -> Result<(), FieldError> {
    let (hp, hm) = sol.system.bounds;
    let lo = hp.max(-hm);
    let hi = sol.system.window.c * sol.system.window.a;
    if h <= lo || h > hi {
        return Err(FieldError::HeightOutOfRange { h, lo, hi });
    }
    Ok(())
}

/// Midpoint nodes over one period (the integrands are L-periodic up to the
/// windowing error, so the uniform rule is spectrally accurate).
fn period_nodes(period: f64, n_quad: usize) -> (Vec<f64>, f64) {
    let dx = period / n_quad as f64;
    let xs = (0..n_quad)
        .map(|m| -period / 2.0 + (m as f64 + 0.5) * dx)
        .collect();
    (xs, dx)
}

/// Extracts B̃_n^± = e^{−iβ_n h}·(1/L)∫ u^s_A(x, ±h) e^{−iα_n x} dx and the
/// derived energy quantities. Evanescent modes are rescaled by the same
/// factor (then e^{|β_n|h}); once that amplification exceeds the double
/// precision range the coefficient is reported as zero.
pub fn rayleigh_coefficients(sol: &Solution, h: f64, n_quad: usize) -> Result<RayleighSpectrum, FieldError> {
    check_height(sol, h)?;
    let cfg = sol.cfg();
    let (xs, dx) = period_nodes(cfg.period, n_quad);
    let ev = Evaluator { sol, supercell: true, include_modal: true, check_distance: false };
    let top: Vec<Complex64> = xs.iter().map(|&x| ev.eval(x, h, false).map(|v| v.0)).collect::<Result<_, _>>()?;
    let bottom: Vec<Complex64> =
        xs.iter().map(|&x| ev.eval(x, -h, false).map(|v| v.0)).collect::<Result<_, _>>()?;

    let i = Complex64::new(0.0, 1.0);
    let mut coefficients = Vec::new();
    for entry in sol.table.entries() {
        let mut m_plus = Complex64::new(0.0, 0.0);
        let mut m_minus = Complex64::new(0.0, 0.0);
        for (m, &x) in xs.iter().enumerate() {
            let w = (-i * entry.alpha_n * x).exp() * (dx / cfg.period);
            m_plus += w * top[m];
            m_minus += w * bottom[m];
        }
        let exponent = -i * entry.beta_n * h;
        let rescale = if exponent.re > 40.0 {
            Complex64::new(0.0, 0.0)
        } else {
            exponent.exp()
        };
        coefficients.push(SpectrumEntry {
            n: entry.n,
            b_plus: rescale * m_plus,
            b_minus: rescale * m_minus,
        });
    }
    let (energy_balance_error, reflectance, transmittance) =
        energy_and_power(&coefficients, cfg, &sol.table);
    Ok(RayleighSpectrum {
        coefficients,
        energy_balance_error,
        reflectance,
        transmittance,
        h,
        n_quad,
    })
}

/// Energy-balance error, reflectance and transmittance from computed
/// coefficients:
///   error_eb = |2Re(B₀⁻) + Σ_{n∈U}(β_n/β)(|B_n⁻|² + |B_n⁺|²)|
///   R = Σ_{n∈U}(β_n/β)|B_n⁺|²,  T = 1 + 2Re(B₀⁻) + Σ_{n∈U}(β_n/β)|B_n⁻|².
pub fn energy_and_power(
    coefficients: &[SpectrumEntry],
    cfg: &ProblemConfig,
    table: &ModeTable,
) -> (f64, f64, f64) {
    let mut sum_both = 0.0;
    let mut r = 0.0;
    let mut t_sum = 0.0;
    let mut re_b0_minus = 0.0;
    for c in coefficients {
        let Ok(entry) = table.get(c.n) else { continue };
        if c.n == 0 {
            re_b0_minus = c.b_minus.re;
        }
        if entry.class == ModeClass::Propagative {
            let ratio = entry.beta_n.re / cfg.beta;
            sum_both += ratio * (c.b_minus.norm_sqr() + c.b_plus.norm_sqr());
            r += ratio * c.b_plus.norm_sqr();
            t_sum += ratio * c.b_minus.norm_sqr();
        }
    }
    let error_eb = (2.0 * re_b0_minus + sum_both).abs();
    let t = 1.0 + 2.0 * re_b0_minus + t_sum;
    (error_eb, r, t)
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// Quasi-periodicity mismatch (error_left, error_right): the supercell field
/// compared against its Bloch-shifted translates at the sample points.
pub fn qp_mismatch(sol: &Solution, sample_points: &[[f64; 2]]) -> Result<(f64, f64), FieldError> {
    let cfg = sol.cfg();
    let gamma = cfg.gamma;
    let period = cfg.period;
    let ev = Evaluator { sol, supercell: true, include_modal: true, check_distance: false };
    let mut base = Vec::new();
    let mut right = Vec::new();
    let mut left = Vec::new();
    for p in sample_points {
        base.push(ev.eval(p[0], p[1], false)?.0);
        right.push(ev.eval(p[0] + period, p[1], false)?.0);
        left.push(ev.eval(p[0] - period, p[1], false)?.0);
    }
    let scale = base.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let err_r = base
        .iter()
        .zip(&right)
        .map(|(u, ur)| (u - ur / gamma).norm())
        .fold(0.0, f64::max)
        / scale;
    let err_l = base
        .iter()
        .zip(&left)
        .map(|(u, ul)| (u - gamma * ul).norm())
        .fold(0.0, f64::max)
        / scale;
    Ok((err_l, err_r))
}

/// Default mismatch sample points (±L/4, ±y₀).
pub fn default_qp_samples(period: f64, y0: f64) -> Vec<[f64; 2]> {
    vec![
        [-period / 4.0, -y0],
        [period / 4.0, -y0],
        [-period / 4.0, y0],
        [period / 4.0, y0],
    ]
}

/// Radiation-condition residuals per mode:
/// error^{(±,n)} = |(1/L)∫ {∂_y u^s_A ∓ iβ_n u^s_A}(x, ±h) e^{−iα_n x} dx|.
pub fn radiation_errors(
    sol: &Solution,
    h: f64,
    modes: &[i32],
    n_quad: usize,
) -> Result<Vec<(i32, f64, f64)>, FieldError> {
    check_height(sol, h)?;
    let cfg = sol.cfg();
    let (xs, dx) = period_nodes(cfg.period, n_quad);
    let ev = Evaluator { sol, supercell: true, include_modal: true, check_distance: false };
    let mut top = Vec::with_capacity(xs.len());
    let mut bottom = Vec::with_capacity(xs.len());
    for &x in &xs {
        top.push(ev.eval(x, h, true)?);
        bottom.push(ev.eval(x, -h, true)?);
    }
    let i = Complex64::new(0.0, 1.0);
    let mut out = Vec::new();
    for &n in modes {
        let entry = *sol.table.get(n).map_err(|_| FieldError::ModeOutOfRange { n })?;
        let mut e_plus = Complex64::new(0.0, 0.0);
        let mut e_minus = Complex64::new(0.0, 0.0);
        for (m, &x) in xs.iter().enumerate() {
            let w = (-i * entry.alpha_n * x).exp() * (dx / cfg.period);
            let (u_t, g_t) = top[m];
            let (u_b, g_b) = bottom[m];
            e_plus += w * (g_t[1] - i * entry.beta_n * u_t);
            e_minus += w * (g_b[1] + i * entry.beta_n * u_b);
        }
        out.push((n, e_plus.norm(), e_minus.norm()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Field grid export
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Exterior,
    Interior,
    Excluded,
}

#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub value: Option<Complex64>,
    pub region: Region,
}

/// Total field on a uniform grid over the plateau closure
/// [−L/2, L/2] × [−cA, cA]. Points near curves are marked excluded.
pub fn field_grid(sol: &Solution, nx: usize, ny: usize) -> Vec<FieldSample> {
    let cfg = sol.cfg();
    let ca = sol.system.window.c * sol.system.window.a;
    let mut out = Vec::with_capacity(nx * ny);
    for jy in 0..ny {
        let y = -ca + 2.0 * ca * jy as f64 / (ny - 1) as f64;
        for jx in 0..nx {
            let x = -cfg.period / 2.0 + cfg.period * jx as f64 / (nx - 1) as f64;
            let sample = if point_in_obstacle(sol, [x, y]) {
                match transmitted_field(sol, [x, y]) {
                    Ok(v) => FieldSample { x, y, value: Some(v), region: Region::Interior },
                    Err(_) => FieldSample { x, y, value: None, region: Region::Excluded },
                }
            } else {
                match scattered_field(sol, [x, y], true) {
                    Ok(v) => FieldSample {
                        x,
                        y,
                        value: Some(v + cfg.incident_field(x, y)),
                        region: Region::Exterior,
                    },
                    Err(_) => FieldSample { x, y, value: None, region: Region::Excluded },
                }
            };
            out.push(sample);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// CSV writers
// ---------------------------------------------------------------------------

pub fn write_spectrum_csv<W: Write>(
    w: &mut W,
    spectrum: &RayleighSpectrum,
    table: &ModeTable,
) -> io::Result<()> {
    writeln!(w, "n,alpha_n,re_beta_n,im_beta_n,class,re_b_plus,im_b_plus,re_b_minus,im_b_minus")?;
    for c in &spectrum.coefficients {
        let e = table.get(c.n).expect("spectrum entries come from the table");
        let class = match e.class {
            ModeClass::Propagative => "U",
            ModeClass::Evanescent => "V",
            ModeClass::Anomalous => "W",
        };
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            c.n,
            e.alpha_n,
            e.beta_n.re,
            e.beta_n.im,
            class,
            c.b_plus.re,
            c.b_plus.im,
            c.b_minus.re,
            c.b_minus.im
        )?;
    }
    Ok(())
}

pub fn write_report_csv<W: Write>(w: &mut W, fields: &[(&str, String)]) -> io::Result<()> {
    let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
    let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
    writeln!(w, "{}", header.join(","))?;
    writeln!(w, "{}", values.join(","))
}

pub fn write_field_csv<W: Write>(w: &mut W, samples: &[FieldSample]) -> io::Result<()> {
    writeln!(w, "x,y,re_u,im_u,region")?;
    for s in samples {
        let region = match s.region {
            Region::Exterior => "exterior",
            Region::Interior => "interior",
            Region::Excluded => "excluded",
        };
        match s.value {
            Some(v) => writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{}", s.x, s.y, v.re, v.im, region)?,
            None => writeln!(w, "{:.16e},{:.16e},,,{}", s.x, s.y, region)?,
        }
    }
    Ok(())
}
