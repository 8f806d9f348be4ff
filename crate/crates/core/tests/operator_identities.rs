//! Operator-level validation of the spectral quadrature assembly:
//! closed-form circle eigenvalues, the interior Calderón identity, the
//! parallel-wall kernel identities, jump relations, and the windowed-wall
//! reproduction of Rayleigh modes.

mod common;

use common::{circle_eigenvalues, max_rel_diff};
use num_complex::Complex64;
use std::f64::consts::PI;
use wgf2d::assembly::{
    assemble_cross, assemble_gamma1_self, assemble_gamma1_w_difference, closed_node_counts, Grid,
    WindowConfig,
};
use wgf2d::geometry::Curve;
use wgf2d::kernels::{self, OpKind};
use wgf2d::modes::{build_mode_table, mode_trace_at, ProblemConfig, Sign};

fn apply_to_mode(block: &wgf2d::assembly::DenseBlock, grid: &Grid, m: i32) -> Vec<Complex64> {
    let density: Vec<Complex64> = grid
        .params
        .iter()
        .map(|&t| Complex64::new(0.0, m as f64 * t).exp())
        .collect();
    block.apply(&density)
}

#[test]
fn circle_eigenvalues_single_and_double_layer() {
    let radius = 0.8;
    let k = 6.0;
    let circle = Curve::circle([0.0, 0.0], radius);
    let grid = Grid::closed(&circle, &[64]);
    let v = assemble_gamma1_self(OpKind::SingleLayer, k, &grid).unwrap();
    let kk = assemble_gamma1_self(OpKind::DoubleLayer, k, &grid).unwrap();
    let kt = assemble_gamma1_self(OpKind::AdjointDoubleLayer, k, &grid).unwrap();
    for m in 0..=6u32 {
        let eig = circle_eigenvalues(m, k, radius);
        let expect: Vec<Complex64> = grid
            .params
            .iter()
            .map(|&t| Complex64::new(0.0, m as f64 * t).exp())
            .collect();
        let got_v = apply_to_mode(&v, &grid, m as i32);
        let want_v: Vec<Complex64> = expect.iter().map(|e| eig.v * e).collect();
        assert!(max_rel_diff(&got_v, &want_v) < 1e-11, "V eigenvalue m={m}");
        let got_k = apply_to_mode(&kk, &grid, m as i32);
        let want_k: Vec<Complex64> = expect.iter().map(|e| eig.k * e).collect();
        assert!(max_rel_diff(&got_k, &want_k) < 1e-11, "K eigenvalue m={m}");
        // The adjoint double layer shares the double-layer eigenvalues on a circle.
        let got_kt = apply_to_mode(&kt, &grid, m as i32);
        assert!(max_rel_diff(&got_kt, &want_k) < 1e-11, "K~ eigenvalue m={m}");
    }
}

#[test]
fn circle_eigenvalues_hypersingular_difference() {
    let radius = 0.8;
    let (kb, ka) = (6.0, 11.0);
    let circle = Curve::circle([0.0, 0.0], radius);
    let grid = Grid::closed(&circle, &[80]);
    let wd = assemble_gamma1_w_difference(ka, kb, &grid);
    for m in 0..=6u32 {
        let ea = circle_eigenvalues(m, ka, radius);
        let eb = circle_eigenvalues(m, kb, radius);
        let lambda = ea.w - eb.w;
        let expect: Vec<Complex64> = grid
            .params
            .iter()
            .map(|&t| Complex64::new(0.0, m as f64 * t).exp())
            .collect();
        let got = apply_to_mode(&wd, &grid, m as i32);
        let want: Vec<Complex64> = expect.iter().map(|e| lambda * e).collect();
        assert!(
            max_rel_diff(&got, &want) < 1e-10,
            "W-difference eigenvalue m={m}: rel {}",
            max_rel_diff(&got, &want)
        );
    }
}

/// Interior Calderón identity (1/2)u + K₂u − V₂(∂_n u) = 0 on Γ₁ for a
/// planewave with the interior wavenumber; spectral accuracy doubling.
fn calderon_residual(ppw: f64) -> f64 {
    let kite = Curve::kite();
    let k2 = 20.0;
    let counts = closed_node_counts(&kite, k2, ppw, 16);
    let grid = Grid::closed(&kite, &counts);
    let dir = [0.6f64, 0.8];
    let i = Complex64::new(0.0, 1.0);
    let u: Vec<Complex64> = grid
        .points
        .iter()
        .map(|p| (i * k2 * (dir[0] * p.position[0] + dir[1] * p.position[1])).exp())
        .collect();
    let dn: Vec<Complex64> = grid
        .points
        .iter()
        .zip(&u)
        .map(|(p, uv)| i * k2 * (dir[0] * p.normal[0] + dir[1] * p.normal[1]) * uv)
        .collect();
    let kmat = assemble_gamma1_self(OpKind::DoubleLayer, k2, &grid).unwrap();
    let vmat = assemble_gamma1_self(OpKind::SingleLayer, k2, &grid).unwrap();
    let ku = kmat.apply(&u);
    let vdn = vmat.apply(&dn);
    let mut worst = 0.0f64;
    for j in 0..grid.len() {
        let r = 0.5 * u[j] + ku[j] - vdn[j];
        worst = worst.max(r.norm());
    }
    worst
}

#[test]
fn calderon_identity_reaches_spectral_accuracy() {
    let r8 = calderon_residual(8.0);
    let r16 = calderon_residual(16.0);
    assert!(r8 < 1e-8, "8 ppw residual {r8}");
    assert!(r16 < 1e-12, "16 ppw residual {r16}");
}

/// Interior Calderón identity for the Neumann row using the hypersingular
/// difference: [(1+η)/2]ψ₂ − ... reduces on manufactured interior planewaves
/// u (wavenumber k₂) and v (wavenumber k₁) to
///   (W₂ − W₁)u = [K̃₂∂u − ∂u/2] − W₁u,
/// which cannot be isolated without a standalone W; instead check the
/// difference acting on the two traces against the two half-identities:
///   (W₂−W₁)(u) + W₁u = K̃₂∂u − ∂u/2  with  W₁u ≈ (W₁−W₀.. )  — not
/// available. The kite-level validation of the difference therefore relies
/// on spectral self-convergence on a non-circular curve.
#[test]
fn w_difference_self_convergence_on_kite() {
    let kite = Curve::kite();
    let (ka, kb) = (20.0, 10.68);
    let apply_at = |nodes: usize, t_eval: &[f64]| -> Vec<Complex64> {
        let grid = Grid::closed(&kite, &[nodes]);
        let wd = assemble_gamma1_w_difference(ka, kb, &grid);
        let density: Vec<Complex64> = grid
            .params
            .iter()
            .map(|&t| Complex64::new((2.0 * t).cos(), (3.0 * t).sin() * 0.5))
            .collect();
        let out = wd.apply(&density);
        // Sample at shared parameter values (nodes divisible by 8).
        t_eval
            .iter()
            .map(|&te| {
                let idx = (te / (2.0 * PI) * nodes as f64).round() as usize % nodes;
                out[idx]
            })
            .collect()
    };
    let t_eval: Vec<f64> = (0..8).map(|i| 2.0 * PI * i as f64 / 8.0).collect();
    let coarse = apply_at(64, &t_eval);
    let mid = apply_at(128, &t_eval);
    let fine = apply_at(256, &t_eval);
    let e_coarse = max_rel_diff(&coarse, &fine);
    let e_mid = max_rel_diff(&mid, &fine);
    assert!(e_coarse < 1e-4, "coarse error {e_coarse}");
    assert!(
        e_mid < e_coarse * 1e-2,
        "doubling must gain orders of magnitude: {e_coarse} -> {e_mid}"
    );
    assert!(e_mid < 1e-9, "mid error {e_mid}");
}

#[test]
fn parallel_wall_identities_hold_discretely() {
    // Prop-style identities for the assembled wall interactions.
    let wall2 = Curve::vertical_wall(-1.0);
    let wall3 = wall2.translated(2.0);
    let k = 10.68;
    let g2 = Grid::wall(&wall2, 5.0, 96);
    let g3 = g2.with_curve(wall3);
    // Self-kernels V^{2,2} vs V^{3,3} agree entrywise (off-diagonal values).
    for i in (0..96).step_by(13) {
        for j in (0..96).step_by(7) {
            if i == j {
                continue;
            }
            let v22 = kernels::kernel(OpKind::SingleLayer, k, &g2.points[i], &g2.points[j]).unwrap();
            let v33 = kernels::kernel(OpKind::SingleLayer, k, &g3.points[i], &g3.points[j]).unwrap();
            assert!((v22 - v33).norm() < 1e-13);
            let w22 = kernels::kernel(OpKind::Hypersingular, k, &g2.points[i], &g2.points[j]).unwrap();
            let w33 = kernels::kernel(OpKind::Hypersingular, k, &g3.points[i], &g3.points[j]).unwrap();
            assert!((w22 - w33).norm() < 1e-13);
        }
    }
    // Cross blocks: V^{2,3} = V^{3,2}, K^{2,3} = −K^{3,2}, K̃^{2,3} = −K̃^{3,2},
    // W^{2,3} = W^{3,2}.
    let v23 = assemble_cross(OpKind::SingleLayer, k, &g2, &g3, None);
    let v32 = assemble_cross(OpKind::SingleLayer, k, &g3, &g2, None);
    let k23 = assemble_cross(OpKind::DoubleLayer, k, &g2, &g3, None);
    let k32 = assemble_cross(OpKind::DoubleLayer, k, &g3, &g2, None);
    let kt23 = assemble_cross(OpKind::AdjointDoubleLayer, k, &g2, &g3, None);
    let kt32 = assemble_cross(OpKind::AdjointDoubleLayer, k, &g3, &g2, None);
    let w23 = assemble_cross(OpKind::Hypersingular, k, &g2, &g3, None);
    let w32 = assemble_cross(OpKind::Hypersingular, k, &g3, &g2, None);
    for i in 0..96 {
        for j in 0..96 {
            assert!((v23.at(i, j) - v32.at(i, j)).norm() < 1e-13);
            assert!((k23.at(i, j) + k32.at(i, j)).norm() < 1e-13);
            assert!((kt23.at(i, j) + kt32.at(i, j)).norm() < 1e-13);
            assert!((w23.at(i, j) - w32.at(i, j)).norm() < 1e-13);
        }
    }
}

/// Double-layer jump relations: DL[φ](x ± δn) → ±φ/2 + Kφ as δ → 0,
/// Richardson-extrapolated in δ.
#[test]
fn double_layer_jump_relations() {
    let kite = Curve::kite();
    let k = 7.0;
    let grid = Grid::closed(&kite, &[4096]);
    let density: Vec<Complex64> = grid
        .params
        .iter()
        .map(|&t| Complex64::new((3.0 * t).cos() + 0.5, 0.4 * t.sin()))
        .collect();
    let kmat = assemble_gamma1_self(OpKind::DoubleLayer, k, &grid).unwrap();
    let k_phi = kmat.apply(&density);

    let dl_at = |pos: [f64; 2]| -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (j, p) in grid.points.iter().enumerate() {
            let e = kernels::kernel_eval(k, pos, p.position);
            s += kernels::q_k(k, &e, p.normal) * density[j] * grid.weights[j] * p.jacobian;
        }
        s
    };

    for &idx in &[0usize, 811, 2057, 3193] {
        let p = grid.points[idx];
        for side in [1.0, -1.0] {
            // Richardson over δ, first-order limit model.
            let deltas = [0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625];
            let mut vals: Vec<Complex64> = deltas
                .iter()
                .map(|&d| {
                    dl_at([
                        p.position[0] + side * d * p.normal[0],
                        p.position[1] + side * d * p.normal[1],
                    ])
                })
                .collect();
            for level in 1..deltas.len() {
                for i in (level..deltas.len()).rev() {
                    let f = 2f64.powi(level as i32);
                    vals[i] = (f * vals[i] - vals[i - 1]) / (f - 1.0);
                }
            }
            let expected = side * 0.5 * density[idx] + k_phi[idx];
            let got = vals[deltas.len() - 1];
            assert!(
                (got - expected).norm() < 1e-6,
                "side {side} idx {idx}: {got} vs {expected}"
            );
        }
    }
}

/// Windowed wall-only representation reproduces Rayleigh modes in the
/// plateau, with superalgebraic tail decay in the window size.
fn mode_reproduction_residual(n: i32, a_lambda: f64) -> f64 {
    let cfg = ProblemConfig::new(10.68, 20.0, 1.0, 2.0, PI / 4.0).unwrap();
    let table = build_mode_table(&cfg, 8.01, 8);
    let entry = *table.get(n).unwrap();
    let lambda = cfg.wavelength();
    let a = a_lambda * lambda;
    let window = WindowConfig { a, c: 0.5, h: 1.0 };
    let wall2 = Curve::vertical_wall(-1.0);
    let wall3 = wall2.translated(2.0);
    let nw = wgf2d::assembly::wall_node_count(&wall2, a, cfg.k1, 8.0);
    let g2 = Grid::wall(&wall2, a, nw);
    let g3 = g2.with_curve(wall3);
    let ww: Vec<f64> = g2.params.iter().map(|&t| window.weight(t)).collect();

    let eval = |r: [f64; 2]| -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        // Direct mode traces on each wall carry the Bloch factor already, so
        // the combination is (∫_{Γ₂} − ∫_{Γ₃}) with unit coefficients.
        let m_one = -Complex64::new(1.0, 0.0);
        for (grid, coef) in [(&g2, Complex64::new(1.0, 0.0)), (&g3, m_one)] {
            for (q, p) in grid.points.iter().enumerate() {
                let (d, nm) = mode_trace_at(&entry, Sign::Plus, p);
                let e = kernels::kernel_eval(cfg.k1, r, p.position);
                let w = grid.weights[q] * p.jacobian * ww[q];
                s += coef * w * (kernels::q_k(cfg.k1, &e, p.normal) * d - kernels::q_v(&e) * nm);
            }
        }
        s
    };

    let targets = [[0.3, 0.5], [-0.7, -1.2], [0.1, 2.0]];
    let mut worst = 0.0f64;
    for r in targets {
        let exact = wgf2d::modes::mode_value(&entry, Sign::Plus, r[0], r[1]);
        worst = worst.max((eval(r) - exact).norm());
    }
    worst
}

#[test]
fn windowed_walls_reproduce_propagative_modes() {
    // Green-identity oracle: the wall-only combination reproduces the mode in
    // the plateau with an error that keeps decaying in A. The trace of a
    // full mode feeds both an outgoing-phase tail (k₁ + β_n, very fast) and
    // an incoming-phase tail (k₁ − β_n), whose slower onset dominates here.
    for n in [0, -5] {
        let r10 = mode_reproduction_residual(n, 10.0);
        let r30 = mode_reproduction_residual(n, 30.0);
        let r60 = mode_reproduction_residual(n, 60.0);
        assert!(r30 < 5e-3, "mode {n}: residual {r30} at 30λ");
        assert!(r30 < r10 / 10.0, "mode {n}: {r10} -> {r30}");
        assert!(r60 < r30 / 10.0, "mode {n}: {r30} -> {r60}");
    }
}

#[test]
fn windowed_outgoing_tail_decays_superalgebraically() {
    // One-sided tail of the single layer against an outgoing-mode trace,
    // |V^{1,2}[χ_A⁺ e^{iβ_n t}]| at fixed Γ₁ targets, measured against a far
    // reference window: faster than A⁻³ between A = 10λ and A = 40λ.
    let cfg = ProblemConfig::new(10.68, 20.0, 1.0, 2.0, PI / 4.0).unwrap();
    let table = build_mode_table(&cfg, 8.01, 8);
    let entry = *table.get(0).unwrap();
    let lambda = cfg.wavelength();
    let b_ref = 200.0 * lambda;
    let kite = Curve::kite();
    let targets = [kite.point(0, 0.3), kite.point(0, 2.4)];
    let wall = Curve::vertical_wall(-1.0);
    let n_nodes = (10.0 * 200.0 * 2.0) as usize;
    let tail = |a_lambda: f64| -> f64 {
        let a = a_lambda * lambda;
        let mut worst = 0.0f64;
        for tp in &targets {
            let mut s = Complex64::new(0.0, 0.0);
            for q in 0..n_nodes {
                // Upper half-wall parameters (0, b_ref].
                let t = b_ref * (q as f64 + 0.5) / n_nodes as f64;
                let w_a = wgf2d::window::window_value(t, 0.5 * a, a);
                let w_b = wgf2d::window::window_value(t, 0.5 * b_ref, b_ref);
                if w_b - w_a == 0.0 {
                    continue;
                }
                let p = wall.point(0, t);
                let e = kernels::kernel_eval(cfg.k1, tp.position, p.position);
                let phase = Complex64::new(0.0, entry.beta_n.re * t).exp();
                s += (w_b - w_a) * kernels::q_v(&e) * phase * (b_ref / n_nodes as f64);
            }
            worst = worst.max(s.norm());
        }
        worst
    };
    let r10 = tail(10.0);
    let r40 = tail(40.0);
    assert!(
        r40 < r10 * (10.0f64 / 40.0).powi(3),
        "one-sided tail decay too slow: {r10} -> {r40}"
    );
}
