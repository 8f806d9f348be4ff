//! Quadrature grids and assembly of the dense windowed block system
//! E + M·W_A acting on the stacked densities (φ₁, φ₂, φ₃, φ₄).
//!
//! φ₁, φ₂ are the interior Dirichlet/Neumann traces on the obstacle boundary
//! Γ₁; φ₃, φ₄ the scattered-field traces on the left unit-cell wall Γ₂. The
//! 16 operator blocks combine free-space kernels on (Γ₁, Γ₂, Γ₃ = Γ₂ + L) so
//! that every self-interaction is at most logarithmically singular; those are
//! integrated with the spectral log-kernel rule, everything else with the
//! trapezoidal rule. Wall columns carry the window weights w_A.

use crate::geometry::{self, Curve, CurveKind, CurvePoint, GeometryError};
use crate::kernels::{self, OpKind};
use crate::modes::ProblemConfig;
use crate::quadrature::{mk_log_weights, trapezoid_weights};
use crate::window::window_value;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

pub use crate::correction::CorrectionTerm;

#[derive(Debug)]
pub enum AssemblyError {
    Geometry(GeometryError),
    /// The standalone hypersingular operator is not exposed; assemble the
    /// difference of two wavenumbers instead.
    HypersingularNeedsDifference,
    InvalidWindow(String),
}

impl fmt::Display for AssemblyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssemblyError::Geometry(e) => write!(f, "{e}"),
            AssemblyError::HypersingularNeedsDifference => {
                write!(f, "standalone hypersingular block refused; assemble a wavenumber difference")
            }
            AssemblyError::InvalidWindow(msg) => write!(f, "invalid window configuration: {msg}"),
        }
    }
}

impl std::error::Error for AssemblyError {}

impl From<GeometryError> for AssemblyError {
    fn from(e: GeometryError) -> Self {
        AssemblyError::Geometry(e)
    }
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// Quadrature grid over a curve: nodes, plain weights, and cached geometry.
#[derive(Debug, Clone)]
pub struct Grid {
    pub curve: Curve,
    pub params: Vec<f64>,
    pub component: Vec<usize>,
    pub points: Vec<CurvePoint>,
    pub second_derivs: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub component_sizes: Vec<usize>,
    pub component_offsets: Vec<usize>,
}

impl Grid {
    /// Uniform grid over each closed component; node counts must be even
    /// (required by the spectral log-kernel rule).
    pub fn closed(curve: &Curve, nodes_per_component: &[usize]) -> Grid {
        assert_eq!(curve.kind(), CurveKind::Closed);
        assert_eq!(nodes_per_component.len(), curve.components());
        let mut params = Vec::new();
        let mut component = Vec::new();
        let mut weights = Vec::new();
        let mut offsets = Vec::new();
        for (c, &nc) in nodes_per_component.iter().enumerate() {
            assert!(nc >= 4 && nc % 2 == 0, "component node count must be even and ≥ 4");
            offsets.push(params.len());
            for j in 0..nc {
                params.push(2.0 * PI * j as f64 / nc as f64);
                component.push(c);
                weights.push(2.0 * PI / nc as f64);
            }
        }
        let mut grid = Grid {
            curve: curve.clone(),
            params,
            component,
            points: Vec::new(),
            second_derivs: Vec::new(),
            weights,
            component_sizes: nodes_per_component.to_vec(),
            component_offsets: offsets,
        };
        grid.refresh_points();
        grid
    }

    /// Uniform trapezoidal grid on [−half_width, half_width] for a wall curve.
    pub fn wall(curve: &Curve, half_width: f64, nodes: usize) -> Grid {
        assert_eq!(curve.kind(), CurveKind::Wall);
        let (params, weights) = trapezoid_weights(-half_width, half_width, nodes);
        let mut grid = Grid {
            curve: curve.clone(),
            component: vec![0; params.len()],
            params,
            points: Vec::new(),
            second_derivs: Vec::new(),
            weights,
            component_sizes: vec![nodes],
            component_offsets: vec![0],
        };
        grid.refresh_points();
        grid
    }

    /// Same parameters and weights on a different curve (e.g. a translate).
    pub fn with_curve(&self, curve: Curve) -> Grid {
        let mut g = self.clone();
        g.curve = curve;
        g.refresh_points();
        g
    }

    fn refresh_points(&mut self) {
        self.points = self
            .params
            .iter()
            .zip(&self.component)
            .map(|(&t, &c)| self.curve.point(c, t))
            .collect();
        self.second_derivs = self
            .params
            .iter()
            .zip(&self.component)
            .map(|(&t, &c)| self.curve.second_derivative(c, t))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Largest physical node spacing (weight × jacobian).
    pub fn max_spacing(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.points)
            .map(|(w, p)| w * p.jacobian)
            .fold(0.0, f64::max)
    }
}

/// Even node counts per component targeting `ppw` points per wavelength of
/// the larger wavenumber, with a floor for coarse problems. One padding
/// block of 8 nodes is added on top of the target density; the arclength
/// estimate is approximate and the padding keeps the requested density a
/// lower bound.
pub fn closed_node_counts(curve: &Curve, k_max: f64, ppw: f64, min_nodes: usize) -> Vec<usize> {
    let samples = 512;
    (0..curve.components())
        .map(|c| {
            let mut len = 0.0;
            for i in 0..samples {
                let t = 2.0 * PI * i as f64 / samples as f64;
                len += curve.point(c, t).jacobian * 2.0 * PI / samples as f64;
            }
            let wavelengths = len * k_max / (2.0 * PI);
            let mut n = (ppw * wavelengths).ceil() as usize + 8;
            n = n.max(min_nodes);
            if n % 2 == 1 {
                n += 1;
            }
            n
        })
        .collect()
}

/// Smoothly graded wall grid on [−a, a]: node density `1/s_center` at the
/// origin easing into `1/s_edge` at the window tails, through the analytic
/// map t = a·σ(σ² + q)/(1 + q) on a uniform σ-grid. Windowed integrands stay
/// smooth and compactly supported in σ, so the trapezoid rule keeps its
/// superalgebraic accuracy. Falls back to the uniform grid when no extra
/// center resolution is requested.
pub fn graded_wall_grid(curve: &Curve, a: f64, s_center: f64, s_edge: f64) -> Grid {
    assert!(s_center > 0.0 && s_edge > 0.0);
    if s_center >= s_edge {
        let n = ((2.0 * a / s_edge).ceil() as usize + 16).max(33);
        return Grid::wall(curve, a, n);
    }
    let rho = s_edge / s_center;
    let q = 3.0 / (rho - 1.0);
    // Edge spacing g'(±1)·Δσ = a(3+q)/(1+q)·2/(N−1) ≤ s_edge.
    let n = ((2.0 * a * (3.0 + q) / ((1.0 + q) * s_edge)).ceil() as usize + 16).max(33);
    let dsigma = 2.0 / (n - 1) as f64;
    let mut params = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let sigma = -1.0 + dsigma * j as f64;
        params.push(a * sigma * (sigma * sigma + q) / (1.0 + q));
        let gp = a * (3.0 * sigma * sigma + q) / (1.0 + q);
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        weights.push(w * gp * dsigma);
    }
    let mut grid = Grid {
        curve: curve.clone(),
        component: vec![0; n],
        params,
        points: Vec::new(),
        second_derivs: Vec::new(),
        weights,
        component_sizes: vec![n],
        component_offsets: vec![0],
    };
    grid.refresh_points();
    grid
}

/// Wall node count for a truncated wall of half-width `a`.
pub fn wall_node_count(curve: &Curve, a: f64, k: f64, ppw: f64) -> usize {
    let samples = 1024;
    let mut len = 0.0;
    for i in 0..samples {
        let t = -a + 2.0 * a * (i as f64 + 0.5) / samples as f64;
        len += curve.point(0, t).jacobian * 2.0 * a / samples as f64;
    }
    let n = (ppw * len * k / (2.0 * PI)).ceil() as usize + 16;
    n.max(33)
}

// ---------------------------------------------------------------------------
// Window configuration
// ---------------------------------------------------------------------------

/// Window half-size A, rise-start fraction c, and functional height h.
#[derive(Debug, Clone, Copy)]
pub struct WindowConfig {
    pub a: f64,
    pub c: f64,
    pub h: f64,
}

impl WindowConfig {
    /// Validates c ∈ (0,1), cA > max(h⁺, −h⁻) and max(h⁺, −h⁻) < h < cA.
    pub fn validate(&self, h_plus: f64, h_minus: f64) -> Result<(), AssemblyError> {
        let hmax = h_plus.max(-h_minus);
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(AssemblyError::InvalidWindow(format!("c = {} not in (0,1)", self.c)));
        }
        if !(self.a > 0.0) {
            return Err(AssemblyError::InvalidWindow(format!("A = {} not positive", self.a)));
        }
        if self.c * self.a <= hmax {
            return Err(AssemblyError::InvalidWindow(format!(
                "plateau cA = {} does not cover the obstacles (max height {hmax})",
                self.c * self.a
            )));
        }
        if !(self.h > hmax && self.h < self.c * self.a) {
            return Err(AssemblyError::InvalidWindow(format!(
                "h = {} outside ({hmax}, {})",
                self.h,
                self.c * self.a
            )));
        }
        Ok(())
    }

    pub fn weight(&self, t: f64) -> f64 {
        window_value(t, self.c * self.a, self.a)
    }
}

// ---------------------------------------------------------------------------
// Dense blocks (row-major)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DenseBlock {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl DenseBlock {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseBlock { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

struct MkCache {
    by_size: HashMap<usize, Vec<f64>>,
}

impl MkCache {
    fn new(grid: &Grid) -> Self {
        let mut by_size = HashMap::new();
        for &nc in &grid.component_sizes {
            by_size.entry(nc).or_insert_with(|| mk_log_weights(nc / 2));
        }
        MkCache { by_size }
    }

    fn weights(&self, nc: usize) -> &[f64] {
        &self.by_size[&nc]
    }
}

/// Spectral log-kernel assembly of one weakly singular operator on the
/// closed curve of `grid`. Cross-component interactions are smooth and use
/// the plain trapezoidal weights. The standalone hypersingular operator is
/// refused; see [`assemble_gamma1_w_difference`].
pub fn assemble_gamma1_self(op: OpKind, k: f64, grid: &Grid) -> Result<DenseBlock, AssemblyError> {
    if op == OpKind::Hypersingular {
        return Err(AssemblyError::HypersingularNeedsDifference);
    }
    let mk = MkCache::new(grid);
    let n = grid.len();
    let mut block = DenseBlock::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            block.set(i, j, gamma1_self_entry(op, k, grid, &mk, i, j));
        }
    }
    Ok(block)
}

fn gamma1_self_entry(op: OpKind, k: f64, grid: &Grid, mk: &MkCache, i: usize, j: usize) -> Complex64 {
    let pi_ = grid.points[i];
    let pj = grid.points[j];
    if grid.component[i] != grid.component[j] {
        let e = kernels::kernel_eval(k, pi_.position, pj.position);
        let q = match op {
            OpKind::SingleLayer => kernels::q_v(&e),
            OpKind::DoubleLayer => kernels::q_k(k, &e, pj.normal),
            OpKind::AdjointDoubleLayer => kernels::q_kt(k, &e, pi_.normal),
            OpKind::Hypersingular => unreachable!(),
        };
        return q * grid.weights[j] * pj.jacobian;
    }
    let c = grid.component[i];
    let nc = grid.component_sizes[c];
    let off = grid.component_offsets[c];
    let rw = mk.weights(nc);
    let w_smooth = 2.0 * PI / nc as f64;
    let (a, b) = if i == j {
        match op {
            OpKind::SingleLayer => kernels::v_diag(k, pi_.jacobian),
            OpKind::DoubleLayer | OpKind::AdjointDoubleLayer => (
                0.0,
                kernels::k_diag(pi_.tangent, grid.second_derivs[i], pi_.jacobian),
            ),
            OpKind::Hypersingular => unreachable!(),
        }
    } else {
        let e = kernels::kernel_eval(k, pi_.position, pj.position);
        let dt = grid.params[i] - grid.params[j];
        let s2 = 4.0 * (dt / 2.0).sin().powi(2);
        let lkrh = (k * e.r / (2.0 * s2.sqrt())).ln();
        match op {
            OpKind::SingleLayer => kernels::v_split(&e, lkrh),
            OpKind::DoubleLayer => kernels::k_split(k, &e, pj.normal, lkrh),
            OpKind::AdjointDoubleLayer => kernels::kt_split(k, &e, pi_.normal, lkrh),
            OpKind::Hypersingular => unreachable!(),
        }
    };
    let m = (i as i64 - off as i64 - (j as i64 - off as i64)).unsigned_abs() as usize;
    (Complex64::new(rw[m] * a, 0.0) + w_smooth * b) * pj.jacobian
}

/// The weakly singular difference W_{k_a} − W_{k_b} on the closed curve.
pub fn assemble_gamma1_w_difference(k_a: f64, k_b: f64, grid: &Grid) -> DenseBlock {
    let mk = MkCache::new(grid);
    let n = grid.len();
    let mut block = DenseBlock::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            block.set(i, j, w_difference_entry(k_a, k_b, grid, &mk, i, j));
        }
    }
    block
}

fn w_difference_entry(k_a: f64, k_b: f64, grid: &Grid, mk: &MkCache, i: usize, j: usize) -> Complex64 {
    let pi_ = grid.points[i];
    let pj = grid.points[j];
    if grid.component[i] != grid.component[j] {
        let ea = kernels::kernel_eval(k_a, pi_.position, pj.position);
        let eb = kernels::kernel_eval(k_b, pi_.position, pj.position);
        let q = kernels::q_w(k_a, &ea, pi_.normal, pj.normal)
            - kernels::q_w(k_b, &eb, pi_.normal, pj.normal);
        return q * grid.weights[j] * pj.jacobian;
    }
    let c = grid.component[i];
    let nc = grid.component_sizes[c];
    let off = grid.component_offsets[c];
    let rw = mk.weights(nc);
    let w_smooth = 2.0 * PI / nc as f64;
    let (a, b) = if i == j {
        kernels::w_diff_diag(k_a, k_b, pi_.jacobian)
    } else {
        let ea = kernels::kernel_eval(k_a, pi_.position, pj.position);
        let eb = kernels::kernel_eval(k_b, pi_.position, pj.position);
        let dt = grid.params[i] - grid.params[j];
        let s2 = 4.0 * (dt / 2.0).sin().powi(2);
        let log_rho_half = (ea.r / (2.0 * s2.sqrt())).ln();
        kernels::w_diff_split(k_a, &ea, k_b, &eb, pi_.normal, pj.normal, log_rho_half)
    };
    let m = (i as i64 - off as i64 - (j as i64 - off as i64)).unsigned_abs() as usize;
    (Complex64::new(rw[m] * a, 0.0) + w_smooth * b) * pj.jacobian
}

/// Trapezoidal assembly between disjoint curves, optionally windowing the
/// source columns.
pub fn assemble_cross(
    op: OpKind,
    k: f64,
    target: &Grid,
    source: &Grid,
    window: Option<&[f64]>,
) -> DenseBlock {
    let mut block = DenseBlock::zeros(target.len(), source.len());
    for i in 0..target.len() {
        let ti = target.points[i];
        for j in 0..source.len() {
            let sj = source.points[j];
            let e = kernels::kernel_eval(k, ti.position, sj.position);
            let q = match op {
                OpKind::SingleLayer => kernels::q_v(&e),
                OpKind::DoubleLayer => kernels::q_k(k, &e, sj.normal),
                OpKind::AdjointDoubleLayer => kernels::q_kt(k, &e, ti.normal),
                OpKind::Hypersingular => kernels::q_w(k, &e, ti.normal, sj.normal),
            };
            let w = window.map_or(1.0, |w| w[j]);
            block.set(i, j, q * source.weights[j] * sj.jacobian * w);
        }
    }
    block
}

/// Warns when two grids approach within two local node spacings.
pub fn near_contact_warning(a: &Grid, b: &Grid, label: &str) -> Option<String> {
    let mut worst: Option<(f64, f64)> = None;
    for (p, wp) in a.points.iter().zip(&a.weights) {
        for (q, wq) in b.points.iter().zip(&b.weights) {
            let d = ((p.position[0] - q.position[0]).powi(2)
                + (p.position[1] - q.position[1]).powi(2))
            .sqrt();
            let local = 2.0 * (wp * p.jacobian).max(wq * q.jacobian);
            if d < local && worst.map_or(true, |(dw, lw)| d / lw.max(1e-300) < dw / local) {
                worst = Some((d, local));
            }
        }
    }
    worst.map(|(d, local)| {
        format!("{label}: curves approach within {d:.3e} < 2 local node spacings ({local:.3e})")
    })
}

// ---------------------------------------------------------------------------
// Full block system
// ---------------------------------------------------------------------------

/// Obstacle boundary plus the left unit-cell wall; the right wall is the
/// period translate.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub gamma1: Curve,
    pub wall: Curve,
}

/// Dense discretization of E + M·W_A with its right-hand side.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub cfg: ProblemConfig,
    pub gamma1: Grid,
    pub wall2: Grid,
    pub wall3: Grid,
    pub window: WindowConfig,
    /// w_A at the wall nodes.
    pub window_weights: Vec<f64>,
    /// Row-major (2n₁+2n₂)² matrix, E included (and corrections, once applied).
    pub matrix: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
    pub n1: usize,
    pub n2: usize,
    /// Obstacle bounding heights (h⁺, h⁻).
    pub bounds: (f64, f64),
    /// Finite-rank corrections applied to the matrix (empty for the naive form).
    pub corrections: Vec<CorrectionTerm>,
    pub warnings: Vec<String>,
}

impl BlockSystem {
    pub fn n(&self) -> usize {
        2 * self.n1 + 2 * self.n2
    }

    /// Diagonal E entry for a given row.
    pub fn e_entry(&self, row: usize) -> Complex64 {
        if row < self.n1 {
            Complex64::new(1.0, 0.0)
        } else if row < 2 * self.n1 {
            Complex64::new((1.0 + self.cfg.eta) / 2.0, 0.0)
        } else {
            self.cfg.gamma
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        assert_eq!(x.len(), n);
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let row = &self.matrix[i * n..(i + 1) * n];
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        });
        y
    }

    /// ‖Ax − b‖₂ / ‖b‖₂ for the assembled system.
    pub fn relative_residual(&self, x: &[Complex64]) -> f64 {
        let ax = self.matvec(x);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.n() {
            num += (ax[i] - self.rhs[i]).norm_sqr();
            den += self.rhs[i].norm_sqr();
        }
        (num / den).sqrt()
    }
}

/// Assembles the naive windowed system. `g1` discretizes Γ₁ and `gw` the
/// truncated wall Γ₂ on [−A, A]; Γ₃ reuses the wall parameters on the
/// translated curve.
pub fn assemble_naive_system(
    cfg: &ProblemConfig,
    geom: &Geometry,
    window: &WindowConfig,
    g1: &Grid,
    gw: &Grid,
) -> Result<BlockSystem, AssemblyError> {
    let bounds = geom.gamma1.bounding_heights();
    window.validate(bounds.0, bounds.1)?;

    let wall3_curve = geom.wall.translated(cfg.period);
    let wall3 = gw.with_curve(wall3_curve);
    let wall2 = gw.clone();

    // Walls must clear the obstacles.
    let range = (bounds.1 - 1.0, bounds.0 + 1.0);
    geometry::check_clearance(&geom.wall, &geom.gamma1, range)?;
    geometry::check_clearance(&wall3.curve, &geom.gamma1, range)?;

    let mut warnings = Vec::new();
    for (wg, label) in [(&wall2, "gamma1-wall2"), (&wall3, "gamma1-wall3")] {
        if let Some(w) = near_contact_warning(g1, wg, label) {
            warnings.push(w);
        }
    }

    let window_weights: Vec<f64> = gw.params.iter().map(|&t| window.weight(t)).collect();

    let n1 = g1.len();
    let n2 = gw.len();
    let n = 2 * n1 + 2 * n2;
    let mut matrix = vec![Complex64::new(0.0, 0.0); n * n];

    let mk = MkCache::new(g1);
    let k1 = cfg.k1;
    let k2 = cfg.k2;
    let eta = cfg.eta;
    let gamma = cfg.gamma;
    let gamma2 = gamma * gamma;

    // Band split: rows [0,n1), [n1,2n1), [2n1,2n1+n2), [2n1+n2,2n).
    let (band12, band34) = matrix.split_at_mut(2 * n1 * n);
    let (band1, band2) = band12.split_at_mut(n1 * n);
    let (band3, band4) = band34.split_at_mut(n2 * n);

    band1
        .par_chunks_mut(n)
        .zip(band2.par_chunks_mut(n))
        .enumerate()
        .for_each(|(i, (row1, row2))| {
            let pi_ = g1.points[i];
            // Γ₁ self columns.
            for j in 0..n1 {
                let pj = g1.points[j];
                let (m11, m12, m21, m22);
                if g1.component[i] != g1.component[j] {
                    let e1 = kernels::kernel_eval(k1, pi_.position, pj.position);
                    let e2 = kernels::kernel_eval(k2, pi_.position, pj.position);
                    let w = g1.weights[j] * pj.jacobian;
                    m11 = (kernels::q_k(k2, &e2, pj.normal) - kernels::q_k(k1, &e1, pj.normal)) * w;
                    m12 = (eta * kernels::q_v(&e1) - kernels::q_v(&e2)) * w;
                    m21 = (kernels::q_w(k2, &e2, pi_.normal, pj.normal)
                        - kernels::q_w(k1, &e1, pi_.normal, pj.normal))
                        * w;
                    m22 = (eta * kernels::q_kt(k1, &e1, pi_.normal)
                        - kernels::q_kt(k2, &e2, pi_.normal))
                        * w;
                } else {
                    let c = g1.component[i];
                    let nc = g1.component_sizes[c];
                    let rw = mk.weights(nc);
                    let w_smooth = 2.0 * PI / nc as f64;
                    let m = (i as i64 - j as i64).unsigned_abs() as usize;
                    let rm = rw[m];
                    let combine = |a: f64, b: Complex64| -> Complex64 {
                        (Complex64::new(rm * a, 0.0) + w_smooth * b) * pj.jacobian
                    };
                    if i == j {
                        let (av1, bv1) = kernels::v_diag(k1, pi_.jacobian);
                        let (av2, bv2) = kernels::v_diag(k2, pi_.jacobian);
                        let bk = kernels::k_diag(pi_.tangent, g1.second_derivs[i], pi_.jacobian);
                        let (aw, bw) = kernels::w_diff_diag(k2, k1, pi_.jacobian);
                        // K and K̃ share a k-independent diagonal, so the
                        // K₂ − K₁ difference vanishes there.
                        m11 = Complex64::new(0.0, 0.0);
                        m12 = eta * combine(av1, bv1) - combine(av2, bv2);
                        m21 = combine(aw, bw);
                        m22 = (eta - 1.0) * combine(0.0, bk);
                    } else {
                        let e1 = kernels::kernel_eval(k1, pi_.position, pj.position);
                        let e2 = kernels::kernel_eval(k2, pi_.position, pj.position);
                        let dt = g1.params[i] - g1.params[j];
                        let s2 = 4.0 * (dt / 2.0).sin().powi(2);
                        let lg1 = (k1 * e1.r / (2.0 * s2.sqrt())).ln();
                        let lg2 = (k2 * e1.r / (2.0 * s2.sqrt())).ln();
                        let (ak1, bk1) = kernels::k_split(k1, &e1, pj.normal, lg1);
                        let (ak2, bk2) = kernels::k_split(k2, &e2, pj.normal, lg2);
                        let (av1, bv1) = kernels::v_split(&e1, lg1);
                        let (av2, bv2) = kernels::v_split(&e2, lg2);
                        let (akt1, bkt1) = kernels::kt_split(k1, &e1, pi_.normal, lg1);
                        let (akt2, bkt2) = kernels::kt_split(k2, &e2, pi_.normal, lg2);
                        let (aw, bw) = kernels::w_diff_split(
                            k2,
                            &e2,
                            k1,
                            &e1,
                            pi_.normal,
                            pj.normal,
                            (e1.r / (2.0 * s2.sqrt())).ln(),
                        );
                        m11 = combine(ak2, bk2) - combine(ak1, bk1);
                        m12 = eta * combine(av1, bv1) - combine(av2, bv2);
                        m21 = combine(aw, bw);
                        m22 = eta * combine(akt1, bkt1) - combine(akt2, bkt2);
                    }
                }
                row1[j] = m11;
                row1[n1 + j] = m12;
                row2[j] = m21;
                row2[n1 + j] = m22;
            }
            // Wall columns (sources on Γ₂ and Γ₃), windowed.
            for q in 0..n2 {
                let p2 = wall2.points[q];
                let p3 = wall3.points[q];
                let e2q = kernels::kernel_eval(k1, pi_.position, p2.position);
                let e3q = kernels::kernel_eval(k1, pi_.position, p3.position);
                let w = gw.weights[q] * p2.jacobian * window_weights[q];
                let m13 = (gamma * kernels::q_k(k1, &e3q, p3.normal)
                    - kernels::q_k(k1, &e2q, p2.normal))
                    * w;
                let m14 =
                    (kernels::q_v(&e2q) - gamma * kernels::q_v(&e3q)) * w;
                let m23 = (gamma * kernels::q_w(k1, &e3q, pi_.normal, p3.normal)
                    - kernels::q_w(k1, &e2q, pi_.normal, p2.normal))
                    * w;
                let m24 = (kernels::q_kt(k1, &e2q, pi_.normal)
                    - gamma * kernels::q_kt(k1, &e3q, pi_.normal))
                    * w;
                row1[2 * n1 + q] = m13;
                row1[2 * n1 + n2 + q] = m14;
                row2[2 * n1 + q] = m23;
                row2[2 * n1 + n2 + q] = m24;
            }
        });

    band3
        .par_chunks_mut(n)
        .zip(band4.par_chunks_mut(n))
        .enumerate()
        .for_each(|(i, (row3, row4))| {
            let t2 = wall2.points[i];
            let t3 = wall3.points[i];
            let nw = t2.normal;
            // Γ₁ columns.
            for j in 0..n1 {
                let pj = g1.points[j];
                let w = g1.weights[j] * pj.jacobian;
                let e2j = kernels::kernel_eval(k1, t2.position, pj.position);
                let e3j = kernels::kernel_eval(k1, t3.position, pj.position);
                row3[j] = (-gamma * kernels::q_k(k1, &e2j, pj.normal)
                    - kernels::q_k(k1, &e3j, pj.normal))
                    * w;
                row3[n1 + j] =
                    eta * (gamma * kernels::q_v(&e2j) + kernels::q_v(&e3j)) * w;
                row4[j] = (-gamma * kernels::q_w(k1, &e2j, nw, pj.normal)
                    - kernels::q_w(k1, &e3j, t3.normal, pj.normal))
                    * w;
                row4[n1 + j] = eta
                    * (gamma * kernels::q_kt(k1, &e2j, nw) + kernels::q_kt(k1, &e3j, t3.normal))
                    * w;
            }
            // Wall columns (cross-wall only).
            for q in 0..n2 {
                let p2 = wall2.points[q];
                let p3 = wall3.points[q];
                let w = gw.weights[q] * p2.jacobian * window_weights[q];
                let e23 = kernels::kernel_eval(k1, t2.position, p3.position);
                let e32 = kernels::kernel_eval(k1, t3.position, p2.position);
                row3[2 * n1 + q] = (gamma2 * kernels::q_k(k1, &e23, p3.normal)
                    - kernels::q_k(k1, &e32, p2.normal))
                    * w;
                row3[2 * n1 + n2 + q] =
                    (kernels::q_v(&e32) - gamma2 * kernels::q_v(&e23)) * w;
                row4[2 * n1 + q] = (gamma2 * kernels::q_w(k1, &e23, nw, p3.normal)
                    - kernels::q_w(k1, &e32, t3.normal, p2.normal))
                    * w;
                row4[2 * n1 + n2 + q] = (kernels::q_kt(k1, &e32, t3.normal)
                    - gamma2 * kernels::q_kt(k1, &e23, nw))
                    * w;
            }
        });

    // E diagonal and right-hand side.
    for i in 0..n1 {
        matrix[i * n + i] += Complex64::new(1.0, 0.0);
        let d = n1 + i;
        matrix[d * n + d] += Complex64::new((1.0 + eta) / 2.0, 0.0);
    }
    for q in 0..2 * n2 {
        let d = 2 * n1 + q;
        matrix[d * n + d] += gamma;
    }

    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    for (i, p) in g1.points.iter().enumerate() {
        let [x, y] = p.position;
        rhs[i] = cfg.incident_field(x, y);
        let grad = cfg.incident_gradient(x, y);
        rhs[n1 + i] = grad[0] * p.normal[0] + grad[1] * p.normal[1];
    }

    Ok(BlockSystem {
        cfg: *cfg,
        gamma1: g1.clone(),
        wall2,
        wall3,
        window: *window,
        window_weights,
        matrix,
        rhs,
        n1,
        n2,
        bounds,
        corrections: Vec::new(),
        warnings,
    })
}
