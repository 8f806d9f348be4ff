//! Bessel and Hankel functions of orders 0 and 1 for positive real argument.
//!
//! The solver needs H₀⁽¹⁾ and H₁⁽¹⁾ for the free-space Helmholtz kernels, plus
//! the smooth remainders Y_ν(x) − (2/π)·ln(x/2)·J_ν(x) that the spectral
//! log-kernel quadrature splits on. Everything here targets ≲1e-13 relative
//! error (measured against |H_ν⁽¹⁾|) over x ∈ [1e-8, 1e4].
//!
//! Implementation: ascending series summed in double-double arithmetic up to
//! x = 17 (the alternating series loses ~6 digits there in plain f64, none in
//! double-double), and the standard large-argument P/Q asymptotic expansion
//! beyond, where its optimal truncation error is below 1e-15.

use num_complex::Complex64;
use std::fmt;

/// Switch point between the ascending series and the asymptotic expansion.
const SERIES_CUTOFF: f64 = 17.0;

const EULER_HI: f64 = 0.5772156649015329;
const EULER_LO: f64 = -4.942915152430645e-18;
const TWO_OVER_PI_HI: f64 = 0.6366197723675814;
const TWO_OVER_PI_LO: f64 = -3.935735335036497e-17;
const FRAC_2_PI: f64 = 0.6366197723675814;

#[derive(Debug, Clone, PartialEq)]
pub enum SpecFunError {
    /// Argument outside the supported domain (x must be positive and finite).
    OutOfDomain(f64),
}

impl fmt::Display for SpecFunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecFunError::OutOfDomain(x) => {
                write!(f, "special function argument must be positive and finite, got {x}")
            }
        }
    }
}

impl std::error::Error for SpecFunError {}

// ---------------------------------------------------------------------------
// Double-double arithmetic (only the handful of operations the series need).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    (s, (a - (s - v)) + (b - v))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    #[inline]
    fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    #[inline]
    fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn value(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + other.lo);
        Dd::new(hi, lo)
    }

    #[inline]
    fn neg(self) -> Dd {
        Dd::new(-self.hi, -self.lo)
    }

    #[inline]
    fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let (hi, lo) = quick_two_sum(p, e + self.hi * other.lo + self.lo * other.hi);
        Dd::new(hi, lo)
    }

    #[inline]
    fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd::new(hi, lo)
    }

    #[inline]
    fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let (p, e) = two_prod(q1, b);
        let q2 = ((self.hi - p) + self.lo - e) / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd::new(hi, lo)
    }
}

// ---------------------------------------------------------------------------
// Core evaluation
// ---------------------------------------------------------------------------

/// All order-0/1 values the kernel assembly needs at a single argument.
#[derive(Debug, Clone, Copy)]
pub struct Bessel01 {
    pub j0: f64,
    pub y0: f64,
    pub j1: f64,
    pub y1: f64,
    /// Y₀(x) − (2/π)·ln(x/2)·J₀(x); analytic through x = 0.
    pub y0_smooth: f64,
    /// Y₁(x) − (2/π)·ln(x/2)·J₁(x); behaves like −2/(πx) near 0.
    pub y1_smooth: f64,
}

/// Ascending-series evaluation in double-double arithmetic.
///
/// J₀ = Σ (−q)^m/(m!)², J₁ = (x/2)·Σ (−q)^m/(m!(m+1)!), q = x²/4, and the
/// companion sums carrying the harmonic numbers h_m that make up the smooth
/// parts of Y₀ and Y₁:
///   Y₀ = (2/π)[(ln(x/2)+γ)J₀ + Σ_{m≥1}(−1)^{m+1} h_m q^m/(m!)²]
///   Y₁ = (2/π)ln(x/2)J₁ − 2/(πx) + (2γ/π)J₁ − (1/π)Σ (−1)^m (h_m+h_{m+1})(x/2)q^m/(m!(m+1)!)
fn bessel01_series(x: f64) -> Bessel01 {
    let xd = Dd::from_f64(x);
    let q = xd.mul(xd).div_f64(4.0);
    let half_x = xd.div_f64(2.0);

    // Running terms: u = q^m/(m!)², v = q^m/(m!(m+1)!), h = h_m.
    let mut u = Dd::from_f64(1.0);
    let mut v = Dd::from_f64(1.0);
    let mut h = Dd::from_f64(0.0);

    let mut j0 = Dd::from_f64(1.0);
    let mut s0 = Dd::from_f64(0.0); // Σ_{m≥1} (−1)^{m+1} h_m u_m
    let mut j1s = Dd::from_f64(1.0); // Σ (−1)^m v_m
    let mut s1s = Dd::from_f64(1.0); // Σ (−1)^m (h_m + h_{m+1}) v_m, m=0 term = h_1 = 1
    let mut sign = -1.0;

    for m in 1..80usize {
        let mf = m as f64;
        u = u.mul(q).div_f64(mf * mf);
        v = v.mul(q).div_f64(mf * (mf + 1.0));
        h = h.add(Dd::from_f64(1.0).div_f64(mf));
        let h_next = h.add(Dd::from_f64(1.0).div_f64(mf + 1.0));

        j0 = j0.add(u.mul_f64(sign));
        s0 = s0.add(u.mul(h).mul_f64(-sign));
        j1s = j1s.add(v.mul_f64(sign));
        s1s = s1s.add(v.mul(h.add(h_next)).mul_f64(sign));
        sign = -sign;

        if u.hi < 1e-34 && v.hi < 1e-34 {
            break;
        }
    }

    let j1 = half_x.mul(j1s);
    let gamma = Dd::new(EULER_HI, EULER_LO);
    let two_over_pi = Dd::new(TWO_OVER_PI_HI, TWO_OVER_PI_LO);

    // y0_smooth = (2/π)(γ J₀ + S₀)
    let y0s = two_over_pi.mul(gamma.mul(j0).add(s0));
    // y1_smooth = −2/(πx) + (2γ/π)J₁ − (1/π)(x/2)S₁
    let pole = two_over_pi.div_f64(x).neg();
    let y1s = pole
        .add(two_over_pi.mul(gamma).mul(j1))
        .add(two_over_pi.mul(half_x).mul(s1s).div_f64(2.0).neg());

    let lg = FRAC_2_PI * (x / 2.0).ln();
    let j0v = j0.value();
    let j1v = j1.value();
    let y0sv = y0s.value();
    let y1sv = y1s.value();
    Bessel01 {
        j0: j0v,
        y0: y0sv + lg * j0v,
        j1: j1v,
        y1: y1sv + lg * j1v,
        y0_smooth: y0sv,
        y1_smooth: y1sv,
    }
}

/// Large-argument evaluation through the P/Q asymptotic expansion:
/// J_ν = √(2/πx)(P cos χ − Q sin χ), Y_ν = √(2/πx)(P sin χ + Q cos χ),
/// χ = x − (2ν+1)π/4. The phase is formed from sin x and cos x directly so
/// the libm argument reduction is the only reduction performed.
fn bessel01_asymptotic(x: f64) -> Bessel01 {
    #[inline]
    fn pq(nu_sq4: f64, x: f64) -> (f64, f64) {
        let mut p = 1.0;
        let mut q = 0.0;
        let mut term = 1.0f64;
        let mut prev = f64::INFINITY;
        for m in 1..40usize {
            let mf = m as f64;
            let c = 2.0 * mf - 1.0;
            term *= (nu_sq4 - c * c) / (8.0 * mf * x);
            if term.abs() >= prev {
                break;
            }
            prev = term.abs();
            match m % 4 {
                1 => q += term,
                2 => p -= term,
                3 => q -= term,
                _ => p += term,
            }
            if term.abs() < 1e-18 {
                break;
            }
        }
        (p, q)
    }

    let amp = (2.0 / (std::f64::consts::PI * x)).sqrt();
    let (s, c) = x.sin_cos();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    // χ₀ = x − π/4, χ₁ = x − 3π/4
    let cos0 = (c + s) * inv_sqrt2;
    let sin0 = (s - c) * inv_sqrt2;
    let cos1 = sin0;
    let sin1 = -(s + c) * inv_sqrt2;

    let (p0, q0) = pq(0.0, x);
    let (p1, q1) = pq(4.0, x);

    let j0 = amp * (p0 * cos0 - q0 * sin0);
    let y0 = amp * (p0 * sin0 + q0 * cos0);
    let j1 = amp * (p1 * cos1 - q1 * sin1);
    let y1 = amp * (p1 * sin1 + q1 * cos1);

    let lg = FRAC_2_PI * (x / 2.0).ln();
    Bessel01 {
        j0,
        y0,
        j1,
        y1,
        y0_smooth: y0 - lg * j0,
        y1_smooth: y1 - lg * j1,
    }
}

/// Unchecked fast path used by the kernel assembly (argument known positive).
pub(crate) fn bessel01_raw(x: f64) -> Bessel01 {
    debug_assert!(x > 0.0 && x.is_finite());
    if x <= SERIES_CUTOFF {
        bessel01_series(x)
    } else {
        bessel01_asymptotic(x)
    }
}

#[inline]
fn check_domain(x: f64) -> Result<(), SpecFunError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(SpecFunError::OutOfDomain(x))
    }
}

/// Hankel function of the first kind, order 0: H₀⁽¹⁾(x) = J₀(x) + iY₀(x).
pub fn hankel1_0(x: f64) -> Result<Complex64, SpecFunError> {
    check_domain(x)?;
    let b = bessel01_raw(x);
    Ok(Complex64::new(b.j0, b.y0))
}

/// Hankel function of the first kind, order 1: H₁⁽¹⁾(x) = J₁(x) + iY₁(x).
pub fn hankel1_1(x: f64) -> Result<Complex64, SpecFunError> {
    check_domain(x)?;
    let b = bessel01_raw(x);
    Ok(Complex64::new(b.j1, b.y1))
}

/// Returns (J₀(x), Y₀(x) − (2/π)·ln(x/2)·J₀(x)).
///
/// The second component is the smooth remainder of Y₀ after removing the
/// logarithmic factor matched by the quadrature splitting; it tends to
/// (2/π)·γ as x → 0⁺.
pub fn log_split_j0(x: f64) -> Result<(f64, f64), SpecFunError> {
    check_domain(x)?;
    let b = bessel01_raw(x);
    Ok((b.j0, b.y0_smooth))
}

/// Returns (J₁(x), Y₁(x) − (2/π)·ln(x/2)·J₁(x)).
///
/// The remainder keeps the −2/(πx) pole of Y₁ but no logarithm.
pub fn log_split_j1(x: f64) -> Result<(f64, f64), SpecFunError> {
    check_domain(x)?;
    let b = bessel01_raw(x);
    Ok((b.j1, b.y1_smooth))
}

// ---------------------------------------------------------------------------
// Auxiliary profiles for the hypersingular-difference kernel splitting.
//
// The difference Q_W(k₂) − Q_W(k₁) of hypersingular kernels is weakly
// singular; writing its quadrature splitting requires the analytic (even)
// profiles below, each of which would suffer cancellation if formed naively
// from J/Y values at small argument.
// ---------------------------------------------------------------------------

/// J₁(x)/x; → 1/2 as x → 0.
pub(crate) fn j1_over_x(x: f64) -> f64 {
    if x < 1e-4 {
        let q = x * x / 4.0;
        0.5 * (1.0 - q / 2.0 + q * q / 12.0)
    } else {
        bessel01_raw(x).j1 / x
    }
}

/// (x·J₀(x) − 2J₁(x))/x³; → −1/8 as x → 0.
pub(crate) fn w_log_aux(x: f64) -> f64 {
    if x < 2.0 {
        // Term m of Σ_{m≥1} (−1)^m m x^{2(m−1)}/(4^m (m!)² (m+1)); consecutive
        // terms are related by −x²/(4m(m+2)).
        let q = x * x;
        let mut sum = 0.0;
        let mut term = -0.125; // m = 1
        for m in 1..25usize {
            sum += term;
            let mf = m as f64;
            term *= -q / (4.0 * mf * (mf + 2.0));
            if term.abs() < 1e-19 {
                break;
            }
        }
        sum
    } else {
        let b = bessel01_raw(x);
        (x * b.j0 - 2.0 * b.j1) / (x * x * x)
    }
}

/// (Y₁smooth(x) + 2/(πx))/x; → (2γ−1)/(2π) as x → 0.
pub(crate) fn k_smooth_aux(x: f64) -> f64 {
    if x < 1e-3 {
        (2.0 * EULER_HI - 1.0) / (2.0 * std::f64::consts::PI)
    } else {
        let b = bessel01_raw(x);
        (b.y1_smooth + FRAC_2_PI / x) / x
    }
}

/// (x·Y₀smooth(x) − 2(Y₁smooth(x) + 2/(πx)))/x³; → 1/(πx²)·[1 + O(x²)] as x → 0,
/// i.e. the 1/x² pole is kept (it is tamed by an O(R⁴) geometric factor).
pub(crate) fn w_smooth_aux(x: f64) -> f64 {
    if x < 1e-2 {
        // Leading behaviour 1/(πx²) + c₁ with the m=1 series coefficient.
        1.0 / (std::f64::consts::PI * x * x)
    } else {
        let b = bessel01_raw(x);
        (x * b.y0_smooth - 2.0 * (b.y1_smooth + FRAC_2_PI / x)) / (x * x * x)
    }
}
