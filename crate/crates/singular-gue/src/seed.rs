//! Small-u2 initial conditions for the flows.
//!
//! The seeds come from the u2 → 0 expansion of the canonical coordinates in
//! the scaled variable ũ1 = u1/√u2. The expansion coefficients are built from
//!
//!   φ±,j = -(1/2πi) ∮_{Γ±} s^{-j-1} e^{-s²/2 + ũ1 s} ds,
//!
//! with base cases φ±,0 = ±1/2 + (i/√2π)∫₀^{ũ1} e^{s²/2} ds,
//! φ±,1 = ũ1 φ±,0 - (i/√2π) e^{ũ1²/2}, and the recursion
//! φ±,j = (ũ1 φ±,j-1 - φ±,j-2)/j.
//!
//! At ũ1 = 0 the four coordinate series reduce to explicit constants in π
//! (transcribed separately in [`seed_u1zero`]); the general-ũ1 series in
//! [`seed_general`] is validated against the u1-flow: its endpoint defects
//! scale as the first omitted order of each coordinate (u2^{5/2} for P1,
//! u2^{3/2} for Q1 and Q2, u2³ for P2).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::state::{CanonicalState, ReducedState};

/// Largest u2 accepted by the seeding routines by default.
pub const SEED_WINDOW: f64 = 1e-3;
/// Validity window of the Gaussian-type integrals.
pub const GAUSS_WINDOW: f64 = 10.0;
/// Validity window of the scaled variable ũ1.
pub const UT1_WINDOW: f64 = 3.0;

const SQRT_2PI: f64 = 2.506_628_274_631_000_6;

/// ∫₀ˣ e^{σ s²/2} ds by piecewise Taylor marching with centers every half unit.
///
/// The Taylor coefficients about a center m obey (k+1)a_{k+1} = σ(m a_k + a_{k-1}),
/// so each subinterval sums a rapidly convergent series with no cancellation.
fn exp_quadratic_integral(x: f64, sigma: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x < 0.0 {
        return -exp_quadratic_integral(-x, sigma);
    }
    let n_sub = (x / 0.5).ceil() as usize;
    let step = x / n_sub as f64;
    let mut acc = 0.0;
    for i in 0..n_sub {
        let a = i as f64 * step;
        let m = a + 0.5 * step;
        let w = 0.5 * step;
        let mut coeff_prev = 0.0;
        let mut coeff = (sigma * m * m / 2.0).exp();
        let mut sum = 0.0;
        let mut wpow = w; // w^{k+1}
        for k in 0..200usize {
            if k % 2 == 0 {
                let term = 2.0 * coeff * wpow / (k as f64 + 1.0);
                sum += term;
                if term.abs() < 1e-18 * sum.abs() && k > 4 {
                    break;
                }
            }
            let next = sigma * (m * coeff + coeff_prev) / (k as f64 + 1.0);
            coeff_prev = coeff;
            coeff = next;
            wpow *= w;
        }
        acc += sum;
    }
    acc
}

/// The two Gaussian-type integrals `(∫₀ˣ e^{s²/2} ds, ∫₀ˣ e^{-s²/2} ds)`.
pub fn gauss_integrals(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() || x.abs() > GAUSS_WINDOW {
        return Err(Error::OutsideWindow { value: x, window: GAUSS_WINDOW });
    }
    Ok((exp_quadratic_integral(x, 1.0), exp_quadratic_integral(x, -1.0)))
}

/// Seed-expansion coefficients φ±,j together with the auxiliary quantities
/// entering the general seed series.
#[derive(Debug, Clone)]
pub struct PhiTable {
    pub ut1: f64,
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
    /// ϕ = (i/√2π)∫₀^{ũ1} e^{s²/2} ds, the mean of φ±,0; leading P2 coefficient.
    pub varphi: Complex64,
    /// -(i/√2π) e^{ũ1²/2} = φ±,1 - ũ1 φ±,0, the sign-free part of φ±,1;
    /// the coefficient written φ₁ in the general seed series.
    pub phi1: Complex64,
}

/// Taylor coefficients of e^{-x²/2 + ũ1 x}, computed by the double sum over
/// the product of the two exponential series (independent of the recursion).
fn jump_series(ut1: f64, jmax: usize) -> Vec<f64> {
    let mut t = vec![0.0; jmax + 1];
    for (k, tk) in t.iter_mut().enumerate() {
        let mut sum = 0.0;
        let mut m = 0;
        while 2 * m <= k {
            let mut term = 1.0;
            for i in 1..=m {
                term *= -0.5 / i as f64;
            }
            for i in 1..=(k - 2 * m) {
                term *= ut1 / i as f64;
            }
            sum += term;
            m += 1;
        }
        *tk = sum;
    }
    t
}

impl PhiTable {
    /// Max deviation of the jumps φ+,k - φ-,k from the Taylor coefficients of
    /// e^{-x²/2 + ũ1 x} through order jmax.
    pub fn jump_residual(&self) -> f64 {
        let t = jump_series(self.ut1, self.plus.len() - 1);
        self.plus
            .iter()
            .zip(&self.minus)
            .zip(&t)
            .map(|((p, m), tk)| (p - m - Complex64::from(*tk)).norm())
            .fold(0.0, f64::max)
    }
}

/// Build the φ±,j table through j = jmax.
pub fn phi_table(ut1: f64, jmax: usize) -> Result<PhiTable> {
    if jmax < 1 {
        return Err(Error::InvalidConfig("phi table needs jmax >= 1".into()));
    }
    let (gp, gm) = gauss_integrals(ut1)?;
    let i = Complex64::new(0.0, 1.0);
    let base = i * gp / SQRT_2PI;
    let exp_term = i * (ut1 * ut1 / 2.0).exp() / SQRT_2PI;
    let mut plus = Vec::with_capacity(jmax + 1);
    let mut minus = Vec::with_capacity(jmax + 1);
    plus.push(Complex64::from(0.5) + base);
    minus.push(Complex64::from(-0.5) + base);
    plus.push(ut1 * plus[0] - exp_term);
    minus.push(ut1 * minus[0] - exp_term);
    for j in 2..=jmax {
        let jf = j as f64;
        plus.push((ut1 * plus[j - 1] - plus[j - 2]) / jf);
        minus.push((ut1 * minus[j - 1] - minus[j - 2]) / jf);
    }
    let table = PhiTable {
        ut1,
        plus,
        minus,
        varphi: base,
        phi1: -exp_term,
    };
    let res = table.jump_residual();
    if !(res < 1e-10) {
        return Err(Error::InvalidConfig(format!(
            "phi table failed its jump identities (residual {res:.3e})"
        )));
    }
    let _ = gm; // the e^{-s²/2} integral is part of the operation contract
    Ok(table)
}

/// Highest included power of √u2 per coordinate of a truncated seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationOrders {
    pub p1: i32,
    pub q1: i32,
    pub p2: i32,
    pub q2: i32,
}

/// A truncated-series initial condition with its order-of-validity metadata.
#[derive(Debug, Clone, Copy)]
pub struct SeedState {
    pub state: CanonicalState,
    pub orders: TruncationOrders,
    pub experimental: bool,
}

fn check_window(u2: f64, window: f64) -> Result<()> {
    if u2 > 0.0 && u2 <= window && u2.is_finite() {
        Ok(())
    } else {
        Err(Error::SeedWindow { u2, window })
    }
}

/// Reduced-coordinate series (P, Q) at u1 = 0, truncated at u2² and u2.
pub fn seed_reduced_with_window(u2: f64, window: f64) -> Result<ReducedState> {
    check_window(u2, window)?;
    let i = Complex64::new(0.0, 1.0);
    let su = u2.sqrt();
    let pi32 = PI.powf(1.5);
    let c1 = 1.0 / SQRT_2PI;
    let c2 = 2.0 / PI;
    let c3 = 2.0_f64.powf(2.5) / pi32 - 2.0_f64.sqrt() / pi32 - 3.0 / SQRT_2PI;
    let c4 = 2.0 / 3.0 + 8.0 / (PI * PI) - 32.0 / (9.0 * PI);
    let p = i * (c1 * su + c2 * u2 + c3 * su * u2 + c4 * u2 * u2);
    let q0 = (2.0 / PI).sqrt();
    let q3 = 2.0_f64.powf(1.5) / PI.sqrt() + 2.0_f64.powf(3.5) / pi32
        - 3.0 * 2.0_f64.sqrt() / PI.sqrt()
        - 2.0_f64.powf(1.5) / pi32;
    let q4 = 16.0 / (PI * PI) - 64.0 / (9.0 * PI);
    let q = i * (q0 / su - 2.0 + 4.0 / PI + q3 * su + q4 * u2);
    ReducedState::new(u2, p, q)
}

/// Reduced seed inside the default window.
pub fn seed_reduced(u2: f64) -> Result<ReducedState> {
    seed_reduced_with_window(u2, SEED_WINDOW)
}

/// Canonical seed at u1 = 0: the explicit-constant series with P2 = 0.
///
/// Truncation: P1 through u2², Q1 and Q2 through u2, P2 = 0 (first neglected
/// contribution O(u2³), below the other coordinates' truncation error). The
/// constraint residual of the output is O(u2^{3/2}).
pub fn seed_u1zero_with_window(u2: f64, window: f64) -> Result<SeedState> {
    let r = seed_reduced_with_window(u2, window)?;
    let i = Complex64::new(0.0, 1.0);
    let su = u2.sqrt();
    let pi32 = PI.powf(1.5);
    let r3 = 3.0 * 2.0_f64.powf(2.5) / pi32 + 7.0 * 2.0_f64.powf(1.5) / (3.0 * PI.sqrt())
        - 2.0_f64.powf(2.5) / PI.sqrt()
        - 2.0_f64.powf(4.5) / pi32;
    let r4 = 32.0 / (9.0 * PI) - 8.0 / (PI * PI);
    let q2 = Complex64::from(
        -2.0_f64.powf(1.5) / (PI * u2).sqrt() + 2.0 - 4.0 / PI + r3 * su + r4 * u2,
    );
    let state = CanonicalState {
        u1: 0.0,
        u2,
        p1: r.p,
        q1: r.q,
        p2: Complex64::new(0.0, 0.0),
        q2,
    };
    let _ = i;
    Ok(SeedState {
        state,
        orders: TruncationOrders { p1: 4, q1: 2, p2: 6, q2: 2 },
        experimental: false,
    })
}

/// Canonical seed at u1 = 0 inside the default window.
pub fn seed_u1zero(u2: f64) -> Result<SeedState> {
    seed_u1zero_with_window(u2, SEED_WINDOW)
}

/// General-ũ1 seed from the φ±,j series (experimental surface).
///
/// Flow-validated: endpoint defects against integrating the u1-flow from the
/// ũ1 = 0 seed scale as the first omitted order of every coordinate.
pub fn seed_general_with_window(ut1: f64, u2: f64, window: f64) -> Result<SeedState> {
    check_window(u2, window)?;
    if !ut1.is_finite() || ut1.abs() > UT1_WINDOW {
        return Err(Error::OutsideWindow { value: ut1, window: UT1_WINDOW });
    }
    let t = phi_table(ut1, 2)?;
    let i = Complex64::new(0.0, 1.0);
    let f0 = t.minus[0];
    let f1 = t.minus[1];
    let f2 = t.minus[2];
    let p1 = t.phi1;
    let vphi = t.varphi;
    let su = u2.sqrt();
    let u2_32 = u2 * su;
    let u2_2 = u2 * u2;
    let u2_52 = u2_2 * su;

    let f0_2 = f0 * f0;
    let f0_3 = f0_2 * f0;
    let f0_4 = f0_2 * f0_2;
    let f1_2 = f1 * f1;
    let f1_3 = f1_2 * f1;

    let p1_coef = [
        p1 / (2.0 * f0),
        -i * (p1 * f1 / f0_2 + 2.0 * f0 + 1.0),
        -2.0 * p1 * f1_2 / f0_3 + p1 * (f2 - f1_2) / f0_2 - f1 / f0 + 4.0 * f1 - 2.0 * p1
            + 4.0 * f1 * f0,
        2.0 * i
            * (2.0 * p1 * f1_3 / f0_4
                + (p1 * f1 * (9.0 * f1_2 + 9.0 * p1 * f1 - 17.0 * f2) - p1 * p1 * f2)
                    / (9.0 * f0_3)
                + 2.0 * f1 * (3.0 * f1 + p1) / (9.0 * f0_2)
                + (10.0 * f1_2 - 5.0 * p1 * f1 + p1 * p1) / (3.0 * f0)
                + 6.0 * f1_2
                - 4.0 * p1 * f1
                + 1.0 / 3.0
                + 4.0 * f1_2 * f0),
    ];
    let p1_val = p1_coef[0] * su + p1_coef[1] * u2 + p1_coef[2] * u2_32 + p1_coef[3] * u2_2;

    let q1_val = (f1 / f0) / su - 2.0 * i * (p1 * f1 / f0_2 + 1.0)
        + 2.0 * (-2.0 * p1 * f1_2 / f0_3 + p1 * (f2 - f1_2) / f0_2 - f1 / f0 - 2.0 * f1) * su
        + i * (2.0 * p1 * f1_2 * (19.0 * f1 + 17.0 * p1) / (9.0 * f0_4)
            + 4.0 * p1 * (9.0 * f1_3 + 9.0 * p1 * f1_2 - p1 * f2) / (9.0 * f0_3)
            + 6.0 * f1 * (4.0 * f1 + 7.0 * p1) / (9.0 * f0_2)
            + 8.0 * p1 * f1 / f0
            + 4.0 / 3.0
            + 8.0 * f0 / 3.0)
            * u2;

    let p2_val = vphi * u2
        + i * (4.0 * vphi * vphi * ut1 - ut1 + 4.0 * vphi * p1) * u2_32
        + (p1 * ut1 + (3.0 * ut1 * ut1 - 12.0 * p1 * p1) * vphi
            - 24.0 * p1 * ut1 * vphi * vphi
            - 12.0 * ut1 * ut1 * vphi * vphi * vphi)
            * u2_2
        + i * (4.0 * p1 * p1 * ut1 - 8.0 * ut1.powi(3) / 9.0
            + ((140.0 * ut1 * ut1 - 28.0) / 9.0 * p1 - 32.0 * p1 * p1 * p1) * vphi
            + (104.0 * ut1.powi(3) / 9.0 - 96.0 * p1 * p1 * ut1) * vphi * vphi
            - 96.0 * p1 * ut1 * ut1 * vphi.powu(3)
            - 32.0 * ut1.powi(3) * vphi.powu(4))
            * u2_52;

    let q2_val = 2.0 * i * (f1 / f0) / su + 4.0 * (f1_2 / f0_2 + (f1_2 - f2) / f0)
        - 2.0
            * i
            * ((3.0 * p1 * f1_2 + f1_3) / f0_3
                + 6.0 * p1 * f1_2 / f0_2
                + (2.0 * ut1 * f2 + 7.0 * f1) / (3.0 * f0)
                + 4.0 * f1)
            * su
        - (f1_2 * (33.0 * f1_2 + 79.0 * p1 * f1 + 32.0 * p1 * p1) / (9.0 * f0_4)
            + (6.0 * f1_2 * (11.0 * f1_2 + 14.0 * p1 * f1 + 23.0 * p1 * p1)
                - 2.0 * p1 * p1 * f2)
                / (9.0 * f0_3)
            + f1 * (22.0 * f1 + 15.0 * p1 + 24.0 * p1 * f1_2) / (3.0 * f0_2)
            + (24.0 * f1_2 + 52.0 * p1 * f1) / (3.0 * f0)
            + 8.0 * f1_2
            + 5.0 / 3.0
            + 10.0 * f0 / 3.0)
            * u2;

    let state = CanonicalState {
        u1: ut1 * su,
        u2,
        p1: p1_val,
        q1: q1_val,
        p2: p2_val,
        q2: q2_val,
    };
    Ok(SeedState {
        state,
        orders: TruncationOrders { p1: 4, q1: 2, p2: 5, q2: 2 },
        experimental: true,
    })
}

/// General seed inside the default windows.
pub fn seed_general(ut1: f64, u2: f64) -> Result<SeedState> {
    seed_general_with_window(ut1, u2, SEED_WINDOW)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson oracle, independent of the Taylor marching.
    fn simpson_oracle(x: f64, sigma: f64) -> f64 {
        let n = 200_000;
        let h = x / n as f64;
        let f = |s: f64| (sigma * s * s / 2.0).exp();
        let mut sum = f(0.0) + f(x);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(k as f64 * h);
        }
        sum * h / 3.0
    }

    #[test]
    fn gauss_integrals_at_zero() {
        assert_eq!(gauss_integrals(0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn gauss_integrals_are_odd() {
        for x in [0.3, 1.7, 6.0] {
            let (p, m) = gauss_integrals(x).unwrap();
            let (pn, mn) = gauss_integrals(-x).unwrap();
            assert_eq!(p, -pn);
            assert_eq!(m, -mn);
        }
    }

    #[test]
    fn gauss_integrals_match_quadrature_oracle() {
        for x in [0.5, 1.0, 2.0, 5.0, 8.0, 10.0] {
            let (p, m) = gauss_integrals(x).unwrap();
            let op = simpson_oracle(x, 1.0);
            let om = simpson_oracle(x, -1.0);
            assert!((p - op).abs() <= 1e-12 * op.abs(), "plus at {x}: {p} vs {op}");
            assert!((m - om).abs() <= 1e-12 * om.abs(), "minus at {x}: {m} vs {om}");
        }
    }

    #[test]
    fn gauss_integrals_reject_outside_window() {
        assert!(matches!(gauss_integrals(10.5), Err(Error::OutsideWindow { .. })));
    }

    #[test]
    fn phi_base_cases_at_ut1_zero() {
        let t = phi_table(0.0, 3).unwrap();
        let c = 1.0 / SQRT_2PI;
        assert!((t.plus[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((t.minus[0] - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
        assert!((t.plus[1] - Complex64::new(0.0, -c)).norm() < 1e-15);
        assert!((t.minus[1] - Complex64::new(0.0, -c)).norm() < 1e-15);
        // recursion gives phi_{±,2} = ∓1/4 and the jump -1/2
        assert!((t.plus[2] - Complex64::new(-0.25, 0.0)).norm() < 1e-15);
        assert!((t.minus[2] - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        assert!((t.plus[2] - t.minus[2] - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn explicit_jump_relations() {
        for ut1 in [0.5_f64, -2.0] {
            let t = phi_table(ut1, 3).unwrap();
            let jumps = [
                Complex64::from(1.0),
                Complex64::from(ut1),
                Complex64::from(-0.5 + ut1 * ut1 / 2.0),
                Complex64::from(-0.5 * ut1 + ut1.powi(3) / 6.0),
            ];
            for (k, expect) in jumps.iter().enumerate() {
                let got = t.plus[k] - t.minus[k];
                assert!((got - expect).norm() < 1e-14, "jump {k} at ut1={ut1}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn generating_identity_holds_through_jmax_eight() {
        for ut1 in [0.0, 0.5, -0.5, 2.0, -2.0] {
            let t = phi_table(ut1, 8).unwrap();
            assert!(t.jump_residual() < 1e-12, "residual at ut1={ut1}: {}", t.jump_residual());
        }
    }

    #[test]
    fn seed_leading_orders() {
        let u2 = 1e-4;
        let s = seed_u1zero(u2).unwrap().state;
        let lead = u2.sqrt() / SQRT_2PI;
        assert!((s.p1.im - lead).abs() / lead < 0.05, "P1 leading order");
        assert_eq!(s.p1.re, 0.0);
        assert_eq!(s.p2, Complex64::new(0.0, 0.0));
        // Q1·√u2 → i√(2/π)
        let q_lim = (2.0 / PI).sqrt();
        assert!((s.q1.im * u2.sqrt() - q_lim).abs() < 0.01);
        assert_eq!(s.q1.re, 0.0);
        assert_eq!(s.q2.im, 0.0);
    }

    #[test]
    fn seed_constraint_residual_scales_linearly_in_u2() {
        // the Q1 truncation error O(u2^{3/2}) enters the residual multiplied
        // by Q1 ~ u2^{-1/2}, so the truncated series sits off the constraint
        // by O(u2); measured constant ~0.85
        let mut prev = f64::INFINITY;
        for u2 in [1e-3, 1e-4, 1e-5] {
            let s = seed_u1zero(u2).unwrap().state;
            let (r1, r2) = s.constraint_residual().unwrap();
            assert_eq!(r1.norm(), 0.0);
            assert!(r2.norm() < 2.0 * u2, "residual {} at u2={u2}", r2.norm());
            assert!(r2.norm() > 0.2 * u2, "residual unexpectedly small: {}", r2.norm());
            assert!(r2.norm() < prev);
            prev = r2.norm();
        }
    }

    #[test]
    fn general_seed_reduces_to_explicit_constants_at_ut1_zero() {
        // two independent transcriptions of the same coefficients
        for u2 in [1e-3, 1e-4, 1e-6] {
            let a = seed_u1zero(u2).unwrap().state;
            let b = seed_general(0.0, u2).unwrap().state;
            for (x, y, tag) in [
                (a.p1, b.p1, "P1"),
                (a.q1, b.q1, "Q1"),
                (a.p2, b.p2, "P2"),
                (a.q2, b.q2, "Q2"),
            ] {
                let rel = (x - y).norm() / (1.0 + y.norm());
                assert!(rel < 1e-13, "{tag} differs at u2={u2}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn general_seed_p2_vanishes_at_ut1_zero() {
        let s = seed_general(0.0, 1e-4).unwrap();
        assert!(s.state.p2.norm() < 1e-18);
        assert!(s.experimental);
    }

    #[test]
    fn seed_windows_are_enforced() {
        assert!(matches!(seed_u1zero(2e-3), Err(Error::SeedWindow { .. })));
        assert!(matches!(seed_u1zero(0.0), Err(Error::SeedWindow { .. })));
        assert!(matches!(seed_general(3.5, 1e-4), Err(Error::OutsideWindow { .. })));
        assert!(seed_u1zero_with_window(0.01, 0.05).is_ok());
    }
}
