//! Dense solves: LU with partial pivoting (reference path) and unrestarted
//! GMRES, optionally left-preconditioned by the exact diagonal E⁻¹ as used
//! for the larger spectra runs.

use crate::assembly::BlockSystem;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Gmres,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub density: Vec<Complex64>,
    pub method: SolveMethod,
    pub iterations: usize,
    /// ‖(E + M_c W_A)φ − φ^inc‖₂ / ‖φ^inc‖₂, recomputed on the assembled matrix.
    pub residual: f64,
    pub condition_estimate: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum SolverError {
    Singular { condition_estimate: f64 },
    NoConvergence { best_residual: f64, iterations: usize },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Singular { condition_estimate } => {
                write!(f, "singular system matrix (condition estimate {condition_estimate:.3e})")
            }
            SolverError::NoConvergence { best_residual, iterations } => write!(
                f,
                "GMRES did not reach tolerance after {iterations} iterations (best residual {best_residual:.3e})"
            ),
        }
    }
}

impl std::error::Error for SolverError {}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// LU-factorized dense solve.
pub fn solve_direct(system: &BlockSystem, estimate_condition: bool) -> Result<SolveReport, SolverError> {
    let n = system.n();
    let a = DMatrix::from_row_slice(n, n, &system.matrix);
    let b = nalgebra::DVector::from_column_slice(&system.rhs);
    let lu = a.lu();
    let x = lu.solve(&b).ok_or(SolverError::Singular { condition_estimate: f64::INFINITY })?;
    let density: Vec<Complex64> = x.iter().copied().collect();
    let residual = system.relative_residual(&density);
    if !residual.is_finite() || residual > 1e-3 {
        return Err(SolverError::Singular { condition_estimate: estimate_cond(system, &lu) });
    }
    let condition_estimate = estimate_condition.then(|| estimate_cond(system, &lu));
    Ok(SolveReport {
        density,
        method: SolveMethod::Direct,
        iterations: 0,
        residual,
        condition_estimate,
    })
}

/// Crude 2-norm condition estimate from a few power iterations on A and A⁻¹.
fn estimate_cond(system: &BlockSystem, lu: &nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let n = system.n();
    // Deterministic pseudo-random start vector.
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new((1.7 * i as f64).sin(), (2.3 * i as f64 + 0.4).cos()))
        .collect();
    let mut sigma_max = 0.0;
    for _ in 0..8 {
        let nv = norm(&v);
        v.iter_mut().for_each(|z| *z /= nv);
        let w = system.matvec(&v);
        sigma_max = norm(&w);
        v = w;
    }
    let mut u = nalgebra::DVector::from_fn(n, |i, _| {
        Complex64::new((0.9 * i as f64).cos(), (1.1 * i as f64).sin())
    });
    let mut inv_norm = 1.0;
    for _ in 0..8 {
        let nu = u.norm();
        u /= Complex64::new(nu, 0.0);
        if let Some(w) = lu.solve(&u) {
            inv_norm = w.norm();
            u = w;
        } else {
            return f64::INFINITY;
        }
    }
    sigma_max * inv_norm
}

/// Unrestarted GMRES with modified Gram–Schmidt and Givens rotations.
///
/// With `precondition` the iteration runs on E⁻¹(E + M_c W_A); the reported
/// residual is always the unpreconditioned one, and the inner tolerance is
/// tightened by cond(E) so the requested tolerance holds for the original
/// system.
pub fn solve_gmres(
    system: &BlockSystem,
    tol: f64,
    max_iter: usize,
    precondition: bool,
) -> Result<SolveReport, SolverError> {
    assert!(tol > 0.0);
    let n = system.n();
    let e_inv: Option<Vec<Complex64>> = precondition.then(|| {
        (0..n).map(|i| Complex64::new(1.0, 0.0) / system.e_entry(i)).collect()
    });
    let kappa_e = if precondition {
        let mags: Vec<f64> = (0..n).map(|i| system.e_entry(i).norm()).collect();
        mags.iter().cloned().fold(0.0, f64::max) / mags.iter().cloned().fold(f64::INFINITY, f64::min)
    } else {
        1.0
    };
    let inner_tol = tol / kappa_e;

    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        let mut y = system.matvec(x);
        if let Some(ei) = &e_inv {
            y.iter_mut().zip(ei).for_each(|(z, e)| *z *= e);
        }
        y
    };
    let mut b = system.rhs.clone();
    if let Some(ei) = &e_inv {
        b.iter_mut().zip(ei).for_each(|(z, e)| *z *= e);
    }

    let b_norm = norm(&b);
    if b_norm == 0.0 {
        return Ok(SolveReport {
            density: vec![Complex64::new(0.0, 0.0); n],
            method: SolveMethod::Gmres,
            iterations: 0,
            residual: 0.0,
            condition_estimate: None,
        });
    }

    // Arnoldi data
    let mut basis: Vec<Vec<Complex64>> = vec![b.iter().map(|z| z / b_norm).collect()];
    let mut hess: Vec<Vec<Complex64>> = Vec::new(); // hess[j] holds column j (len j+2)
    let mut cs: Vec<Complex64> = Vec::new();
    let mut sn: Vec<Complex64> = Vec::new();
    let mut g = vec![Complex64::new(b_norm, 0.0)];
    let mut iterations = 0;

    for j in 0..max_iter {
        iterations = j + 1;
        let mut w = apply(&basis[j]);
        let mut hcol = Vec::with_capacity(j + 2);
        for v in basis.iter() {
            let hij = dot(v, &w);
            w.iter_mut().zip(v).for_each(|(wz, vz)| *wz -= hij * vz);
            hcol.push(hij);
        }
        let hlast = norm(&w);
        hcol.push(Complex64::new(hlast, 0.0));
        // Apply accumulated rotations.
        for i in 0..j {
            let t = cs[i] * hcol[i] + sn[i] * hcol[i + 1];
            hcol[i + 1] = -sn[i].conj() * hcol[i] + cs[i].conj() * hcol[i + 1];
            hcol[i] = t;
        }
        // New rotation eliminating hcol[j+1].
        let (c, s) = givens(hcol[j], hcol[j + 1]);
        let t = c * hcol[j] + s * hcol[j + 1];
        hcol[j] = t;
        hcol[j + 1] = Complex64::new(0.0, 0.0);
        cs.push(c);
        sn.push(s);
        g.push(-s.conj() * g[j]);
        g[j] = c * g[j];
        hess.push(hcol);

        let rel = g[j + 1].norm() / b_norm;
        if rel < inner_tol {
            break;
        }
        if hlast == 0.0 {
            break;
        }
        basis.push(w.iter().map(|z| z / hlast).collect());
    }

    // Back-substitution for y in H y = g.
    let m = iterations;
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    for i in (0..m).rev() {
        let mut s = g[i];
        for k in (i + 1)..m {
            s -= hess[k][i] * y[k];
        }
        y[i] = s / hess[i][i];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (k, yk) in y.iter().enumerate() {
        x.iter_mut().zip(&basis[k]).for_each(|(xz, vz)| *xz += yk * vz);
    }

    let residual = system.relative_residual(&x);
    if residual > tol {
        return Err(SolverError::NoConvergence { best_residual: residual, iterations });
    }
    Ok(SolveReport {
        density: x,
        method: SolveMethod::Gmres,
        iterations,
        residual,
        condition_estimate: None,
    })
}

/// Complex Givens rotation zeroing the second component.
fn givens(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    if b.norm() == 0.0 {
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    } else if a.norm() == 0.0 {
        (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    } else {
        let denom = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let c = Complex64::new(a.norm() / denom, 0.0);
        let phase = a / a.norm();
        let s = phase * b.conj() / denom;
        (c, s)
    }
}
