//! Parametrized curves: obstacle boundaries (closed, 2π-periodic, possibly
//! multi-component) and unit-cell walls (open curves running along the y-axis).
//!
//! Closed components are positively oriented, so the unit normal
//! n = (y′, −x′)/|r′| points out of the obstacle. Wall curves satisfy
//! y(t) = t for all t, which keeps the windowed truncation aligned with the
//! vertical coordinate.

use crate::window::{window_derivative, window_value};
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    /// Lattice circles overlap (or touch) for the requested parameters.
    OverlappingComponents { distance: f64, min_required: f64 },
    /// A wall passes through (or touches) an obstacle boundary.
    WallIntersectsObstacle { clearance: f64 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::OverlappingComponents { distance, min_required } => write!(
                f,
                "lattice circles overlap: center distance {distance} < required {min_required}"
            ),
            GeometryError::WallIntersectsObstacle { clearance } => {
                write!(f, "unit-cell wall intersects an obstacle (sampled clearance {clearance})")
            }
        }
    }
}

impl std::error::Error for GeometryError {}

/// Point data used by the quadrature and kernel evaluations.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub position: [f64; 2],
    pub tangent: [f64; 2],
    /// Unit normal (y′, −x′)/|r′|.
    pub normal: [f64; 2],
    /// |r′(t)| > 0.
    pub jacobian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// 2π-periodic closed component(s).
    Closed,
    /// Open wall parametrized by t ∈ ℝ with y(t) = t.
    Wall,
}

#[derive(Debug, Clone)]
enum Shape {
    Kite,
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    VerticalWall {
        x0: f64,
    },
    /// x(t) = x0 + amplitude · sin(ωt + phase) · χ(t, taper_start, taper_end).
    /// The window factor makes the wall exactly vertical for |t| ≥ taper_end.
    BumpWall {
        x0: f64,
        amplitude: f64,
        omega: f64,
        phase: f64,
        taper_start: f64,
        taper_end: f64,
    },
}

impl Shape {
    fn position(&self, t: f64) -> [f64; 2] {
        match *self {
            Shape::Kite => [
                0.5 * t.cos() + 0.325 * (2.0 * t).cos() - 0.325,
                0.75 * t.sin(),
            ],
            Shape::Circle { center, radius } => {
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            }
            Shape::VerticalWall { x0 } => [x0, t],
            Shape::BumpWall { x0, amplitude, omega, phase, taper_start, taper_end } => [
                x0 + amplitude * (omega * t + phase).sin() * window_value(t, taper_start, taper_end),
                t,
            ],
        }
    }

    fn derivative(&self, t: f64) -> [f64; 2] {
        match *self {
            Shape::Kite => [-0.5 * t.sin() - 0.65 * (2.0 * t).sin(), 0.75 * t.cos()],
            Shape::Circle { radius, .. } => [-radius * t.sin(), radius * t.cos()],
            Shape::VerticalWall { .. } => [0.0, 1.0],
            Shape::BumpWall { amplitude, omega, phase, taper_start, taper_end, .. } => {
                let chi = window_value(t, taper_start, taper_end);
                let dchi = window_derivative(t, taper_start, taper_end);
                let s = (omega * t + phase).sin();
                let c = (omega * t + phase).cos();
                [amplitude * (omega * c * chi + s * dchi), 1.0]
            }
        }
    }

    fn second_derivative(&self, t: f64) -> [f64; 2] {
        match *self {
            Shape::Kite => [-0.5 * t.cos() - 1.3 * (2.0 * t).cos(), -0.75 * t.sin()],
            Shape::Circle { radius, .. } => [-radius * t.cos(), -radius * t.sin()],
            Shape::VerticalWall { .. } => [0.0, 0.0],
            // Walls never enter curvature-dependent quadrature; finite
            // differences are plenty for the diagnostics that remain.
            Shape::BumpWall { .. } => {
                let h = 1e-6;
                let dp = self.derivative(t + h);
                let dm = self.derivative(t - h);
                [(dp[0] - dm[0]) / (2.0 * h), (dp[1] - dm[1]) / (2.0 * h)]
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Curve {
    kind: CurveKind,
    shapes: Vec<Shape>,
    x_shift: f64,
}

impl Curve {
    /// Kite-shaped obstacle boundary
    /// r(t) = ((1/2)cos t + (13/40)cos 2t − 13/40, (3/4)sin t).
    pub fn kite() -> Self {
        Curve { kind: CurveKind::Closed, shapes: vec![Shape::Kite], x_shift: 0.0 }
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        assert!(radius > 0.0);
        Curve { kind: CurveKind::Closed, shapes: vec![Shape::Circle { center, radius }], x_shift: 0.0 }
    }

    /// Straight wall r(t) = (x0, t) with unit normal e₁.
    pub fn vertical_wall(x0: f64) -> Self {
        Curve { kind: CurveKind::Wall, shapes: vec![Shape::VerticalWall { x0 }], x_shift: 0.0 }
    }

    /// Sine-modulated wall, exactly vertical beyond |t| = taper_end.
    ///
    /// With amplitude = 0 this reduces to `vertical_wall(x0)`.
    pub fn bump_wall(
        x0: f64,
        amplitude: f64,
        omega: f64,
        phase: f64,
        taper_start: f64,
        taper_end: f64,
    ) -> Self {
        assert!(0.0 < taper_start && taper_start < taper_end);
        let shape = if amplitude == 0.0 {
            Shape::VerticalWall { x0 }
        } else {
            Shape::BumpWall { x0, amplitude, omega, phase, taper_start, taper_end }
        };
        Curve { kind: CurveKind::Wall, shapes: vec![shape], x_shift: 0.0 }
    }

    /// Centered-rectangular lattice of 2·rows − 1 circular pores of radius `r`:
    /// centers ((−1)^{l−1} a1/4, (rows − l) a2/2), l = 1..=2·rows−1.
    pub fn circle_lattice(a1: f64, a2: f64, r: f64, rows: usize) -> Result<Self, GeometryError> {
        assert!(rows >= 1);
        let n = 2 * rows - 1;
        let mut shapes = Vec::with_capacity(n);
        for l in 1..=n {
            let sx = if l % 2 == 1 { 1.0 } else { -1.0 };
            let cy = (rows as f64 - l as f64) * a2 / 2.0;
            shapes.push(Shape::Circle { center: [sx * a1 / 4.0, cy], radius: r });
        }
        // Non-overlap: the closest pair of centers must be further than 2r apart.
        let min_center_dist = f64::min(a2, (a1 * a1 / 4.0 + a2 * a2 / 4.0).sqrt());
        if min_center_dist <= 2.0 * r {
            return Err(GeometryError::OverlappingComponents {
                distance: min_center_dist,
                min_required: 2.0 * r,
            });
        }
        Ok(Curve { kind: CurveKind::Closed, shapes, x_shift: 0.0 })
    }

    /// Horizontal translate of the curve (used for supercell constructions).
    pub fn translated(&self, dx: f64) -> Self {
        let mut c = self.clone();
        c.x_shift += dx;
        c
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn components(&self) -> usize {
        self.shapes.len()
    }

    pub fn shift(&self) -> f64 {
        self.x_shift
    }

    pub fn position(&self, component: usize, t: f64) -> [f64; 2] {
        let p = self.shapes[component].position(t);
        [p[0] + self.x_shift, p[1]]
    }

    pub fn point(&self, component: usize, t: f64) -> CurvePoint {
        let p = self.position(component, t);
        let d = self.shapes[component].derivative(t);
        let jac = (d[0] * d[0] + d[1] * d[1]).sqrt();
        CurvePoint {
            position: p,
            tangent: d,
            normal: [d[1] / jac, -d[0] / jac],
            jacobian: jac,
        }
    }

    pub fn second_derivative(&self, component: usize, t: f64) -> [f64; 2] {
        self.shapes[component].second_derivative(t)
    }

    /// (h⁺, h⁻): extreme y values over all closed components, sampled densely
    /// and widened by a small safety margin. Only the windows and measurement
    /// lines depend on these, so sampling accuracy is ample.
    pub fn bounding_heights(&self) -> (f64, f64) {
        assert_eq!(self.kind, CurveKind::Closed);
        let mut ymin = f64::INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        for c in 0..self.shapes.len() {
            for i in 0..4096 {
                let t = 2.0 * PI * i as f64 / 4096.0;
                let y = self.position(c, t)[1];
                ymin = ymin.min(y);
                ymax = ymax.max(y);
            }
        }
        let margin = 1e-3 * ymax.abs().max(ymin.abs()).max(1e-12);
        (ymax + margin, ymin - margin)
    }
}

/// Sampled minimum distance between two curves. Wall parameters are sampled
/// over `wall_range`; closed components over a full period.
pub fn min_distance(a: &Curve, b: &Curve, wall_range: (f64, f64), samples: usize) -> f64 {
    let sample = |c: &Curve| -> Vec<[f64; 2]> {
        let mut pts = Vec::new();
        for comp in 0..c.components() {
            for i in 0..samples {
                let t = match c.kind() {
                    CurveKind::Closed => 2.0 * PI * i as f64 / samples as f64,
                    CurveKind::Wall => {
                        wall_range.0 + (wall_range.1 - wall_range.0) * i as f64 / (samples - 1) as f64
                    }
                };
                pts.push(c.position(comp, t));
            }
        }
        pts
    };
    let pa = sample(a);
    let pb = sample(b);
    let mut best = f64::INFINITY;
    for p in &pa {
        for q in &pb {
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            if d2 < best {
                best = d2;
            }
        }
    }
    best.sqrt()
}

/// Construction-time clearance check between a wall and the obstacle curve:
/// rejects walls passing through any obstacle, returns the sampled clearance
/// otherwise.
pub fn check_clearance(
    wall: &Curve,
    obstacles: &Curve,
    wall_range: (f64, f64),
) -> Result<f64, GeometryError> {
    // A wall crossing an obstacle has sample points inside its boundary
    // polygon; minimum boundary-to-boundary distance alone cannot see that.
    let samples = 512;
    let polys: Vec<Vec<[f64; 2]>> = (0..obstacles.components())
        .map(|c| {
            (0..samples)
                .map(|i| obstacles.position(c, 2.0 * PI * i as f64 / samples as f64))
                .collect()
        })
        .collect();
    for i in 0..samples {
        let t = wall_range.0 + (wall_range.1 - wall_range.0) * i as f64 / (samples - 1) as f64;
        let p = wall.position(0, t);
        for poly in &polys {
            let mut inside = false;
            for k in 0..poly.len() {
                let a = poly[k];
                let b = poly[(k + 1) % poly.len()];
                if (a[1] > p[1]) != (b[1] > p[1]) {
                    let s = (p[1] - a[1]) / (b[1] - a[1]);
                    if p[0] < a[0] + s * (b[0] - a[0]) {
                        inside = !inside;
                    }
                }
            }
            if inside {
                return Err(GeometryError::WallIntersectsObstacle { clearance: 0.0 });
            }
        }
    }
    let d = min_distance(wall, obstacles, wall_range, 512);
    if d <= 0.0 {
        Err(GeometryError::WallIntersectsObstacle { clearance: d })
    } else {
        Ok(d)
    }
}
