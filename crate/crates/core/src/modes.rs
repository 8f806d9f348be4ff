//! Problem configuration and the Rayleigh mode table.
//!
//! For exterior wavenumber k₁, period L and incidence angle θ, the scattered
//! field expands in modes e^{i(α_n x ± β_n y)} with α_n = k₁sin θ + 2πn/L and
//! β_n = sqrt(k₁² − α_n²) taken positive real (propagative) or positive
//! imaginary (evanescent). A mode with β_n = 0 grazes along the array: a
//! Rayleigh–Wood anomaly. Floating-point parameters never hit an anomaly
//! exactly, so modes are flagged anomalous within a relative tolerance and
//! handled by the degenerate (L'Hôpital) branch of the correction.

use crate::geometry::{Curve, CurvePoint};
use num_complex::Complex64;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ModesError {
    InvalidParameter { name: &'static str, value: f64 },
    OutOfRange { n: i32 },
    NotAnomalous { n: i32 },
}

impl fmt::Display for ModesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModesError::InvalidParameter { name, value } => {
                write!(f, "invalid problem parameter {name} = {value}")
            }
            ModesError::OutOfRange { n } => write!(f, "mode index {n} outside the table range"),
            ModesError::NotAnomalous { n } => {
                write!(f, "mode {n} is not flagged anomalous; the degenerate branch does not apply")
            }
        }
    }
}

impl std::error::Error for ModesError {}

/// Physical setup: wavenumbers, period, incidence, transmission ratio η.
#[derive(Debug, Clone, Copy)]
pub struct ProblemConfig {
    pub k1: f64,
    pub k2: f64,
    /// μ₁/μ₂ in TE polarization, ε₁/ε₂ in TM polarization.
    pub eta: f64,
    pub period: f64,
    pub theta_inc: f64,
    /// α = k₁ sin θ.
    pub alpha: f64,
    /// β = k₁ cos θ ≥ 0.
    pub beta: f64,
    /// Bloch phase γ = e^{iαL} across one period.
    pub gamma: Complex64,
}

impl ProblemConfig {
    pub fn new(k1: f64, k2: f64, eta: f64, period: f64, theta_inc: f64) -> Result<Self, ModesError> {
        let check = |name: &'static str, v: f64, ok: bool| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(ModesError::InvalidParameter { name, value: v })
            }
        };
        check("k1", k1, k1 > 0.0)?;
        check("k2", k2, k2 > 0.0)?;
        check("eta", eta, eta > 0.0)?;
        check("period", period, period > 0.0)?;
        check("theta_inc", theta_inc, theta_inc.abs() <= std::f64::consts::FRAC_PI_2)?;
        let alpha = k1 * theta_inc.sin();
        let beta = k1 * theta_inc.cos();
        let gamma = Complex64::new(0.0, alpha * period).exp();
        Ok(ProblemConfig { k1, k2, eta, period, theta_inc, alpha, beta, gamma })
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k1
    }

    /// Incident planewave e^{iαx − iβy}.
    pub fn incident_field(&self, x: f64, y: f64) -> Complex64 {
        Complex64::new(0.0, self.alpha * x - self.beta * y).exp()
    }

    /// Gradient of the incident planewave.
    pub fn incident_gradient(&self, x: f64, y: f64) -> [Complex64; 2] {
        let u = self.incident_field(x, y);
        let i = Complex64::new(0.0, 1.0);
        [i * self.alpha * u, -i * self.beta * u]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeClass {
    /// β_n real positive: carries energy (set U).
    Propagative,
    /// β_n positive imaginary: decays away from the array (set V).
    Evanescent,
    /// β_n ≈ 0: Rayleigh–Wood anomaly (set W).
    Anomalous,
}

#[derive(Debug, Clone, Copy)]
pub struct ModeEntry {
    pub n: i32,
    pub alpha_n: f64,
    pub beta_n: Complex64,
    pub class: ModeClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModeTable {
    entries: Vec<ModeEntry>,
    n_min: i32,
    pub delta: f64,
    pub rw_tolerance: f64,
}

/// Relative tolerance |k₁² − α_n²| ≤ tol·k₁² flagging the anomalous branch.
pub const DEFAULT_RW_TOLERANCE: f64 = 1e-8;

/// Smallest N with |α_{±N}| > k₁ + 2δ, guaranteeing the correction set is
/// complete within the table range.
pub fn auto_n_range(cfg: &ProblemConfig, delta: f64) -> usize {
    let target = cfg.k1 + 2.0 * delta;
    let step = 2.0 * std::f64::consts::PI / cfg.period;
    let mut n = 1usize;
    while (cfg.alpha - step * n as f64).abs() <= target || (cfg.alpha + step * n as f64).abs() <= target
    {
        n += 1;
        assert!(n < 100_000, "mode range failed to close");
    }
    n
}

pub fn build_mode_table(cfg: &ProblemConfig, delta: f64, n_range: usize) -> ModeTable {
    build_mode_table_with_tolerance(cfg, delta, n_range, DEFAULT_RW_TOLERANCE)
}

pub fn build_mode_table_with_tolerance(
    cfg: &ProblemConfig,
    delta: f64,
    n_range: usize,
    rw_tolerance: f64,
) -> ModeTable {
    let m = n_range as i32;
    let mut entries = Vec::with_capacity(2 * n_range + 1);
    for n in -m..=m {
        let alpha_n = cfg.alpha + 2.0 * std::f64::consts::PI * n as f64 / cfg.period;
        let disc = cfg.k1 * cfg.k1 - alpha_n * alpha_n;
        let (beta_n, class) = if disc.abs() <= rw_tolerance * cfg.k1 * cfg.k1 {
            (Complex64::new(0.0, 0.0), ModeClass::Anomalous)
        } else if disc > 0.0 {
            (Complex64::new(disc.sqrt(), 0.0), ModeClass::Propagative)
        } else {
            (Complex64::new(0.0, (-disc).sqrt()), ModeClass::Evanescent)
        };
        entries.push(ModeEntry { n, alpha_n, beta_n, class });
    }
    ModeTable { entries, n_min: -m, delta, rw_tolerance }
}

impl ModeTable {
    pub fn get(&self, n: i32) -> Result<&ModeEntry, ModesError> {
        let idx = n - self.n_min;
        if idx < 0 || idx as usize >= self.entries.len() {
            return Err(ModesError::OutOfRange { n });
        }
        Ok(&self.entries[idx as usize])
    }

    pub fn entries(&self) -> &[ModeEntry] {
        &self.entries
    }

    pub fn indices(&self) -> impl Iterator<Item = i32> + '_ {
        self.entries.iter().map(|e| e.n)
    }

    fn select(&self, class: ModeClass) -> Vec<i32> {
        self.entries.iter().filter(|e| e.class == class).map(|e| e.n).collect()
    }

    /// Set U of propagative modes.
    pub fn propagative(&self) -> Vec<i32> {
        self.select(ModeClass::Propagative)
    }

    /// Set V of evanescent modes.
    pub fn evanescent(&self) -> Vec<i32> {
        self.select(ModeClass::Evanescent)
    }

    /// Set W of grazing (anomalous) modes.
    pub fn anomalous(&self) -> Vec<i32> {
        self.select(ModeClass::Anomalous)
    }

    /// Correction set C_δ = {n : |β_n| ≤ δ}, sorted.
    pub fn c_delta(&self) -> Vec<i32> {
        self.entries
            .iter()
            .filter(|e| e.beta_n.norm() <= self.delta)
            .map(|e| e.n)
            .collect()
    }
}

/// Mode value u_n^±(x, y) = e^{i(α_n x ± β_n y)}.
pub fn mode_value(entry: &ModeEntry, sign: Sign, x: f64, y: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    (i * (entry.alpha_n * x) + i * entry.beta_n * (sign.factor() * y)).exp()
}

/// Degenerate companion mode v_n(x, y) = y·e^{iα_n x} for anomalous n.
pub fn wood_mode_value(entry: &ModeEntry, x: f64, y: f64) -> Complex64 {
    Complex64::new(0.0, entry.alpha_n * x).exp() * y
}

/// Dirichlet/Neumann traces of u_n^± at a curve point.
pub fn mode_trace_at(entry: &ModeEntry, sign: Sign, point: &CurvePoint) -> (Complex64, Complex64) {
    let [x, y] = point.position;
    let dirichlet = mode_value(entry, sign, x, y);
    let i = Complex64::new(0.0, 1.0);
    let ndot = point.normal[0] * entry.alpha_n
        + Complex64::new(point.normal[1], 0.0) * entry.beta_n * sign.factor();
    (dirichlet, i * ndot * dirichlet)
}

/// Traces of the β_n-derivative of u_n^± at β_n = 0 (anomalous modes only):
/// dirichlet = i·y·e^{iα_n x}, neumann = n·(−y·α_n, i)·e^{iα_n x}.
pub fn wood_derivative_trace_at(
    entry: &ModeEntry,
    point: &CurvePoint,
) -> Result<(Complex64, Complex64), ModesError> {
    if entry.class != ModeClass::Anomalous {
        return Err(ModesError::NotAnomalous { n: entry.n });
    }
    let [x, y] = point.position;
    let phase = Complex64::new(0.0, entry.alpha_n * x).exp();
    let i = Complex64::new(0.0, 1.0);
    let dirichlet = i * y * phase;
    let neumann =
        (Complex64::new(-point.normal[0] * y * entry.alpha_n, 0.0) + i * point.normal[1]) * phase;
    Ok((dirichlet, neumann))
}

/// Convenience wrappers taking (curve, component, parameter).
pub fn mode_trace(
    table: &ModeTable,
    n: i32,
    sign: Sign,
    curve: &Curve,
    component: usize,
    t: f64,
) -> Result<(Complex64, Complex64), ModesError> {
    let entry = table.get(n)?;
    Ok(mode_trace_at(entry, sign, &curve.point(component, t)))
}

pub fn wood_derivative_trace(
    table: &ModeTable,
    n: i32,
    curve: &Curve,
    component: usize,
    t: f64,
) -> Result<(Complex64, Complex64), ModesError> {
    let entry = table.get(n)?;
    wood_derivative_trace_at(entry, &curve.point(component, t))
}
