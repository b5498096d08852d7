//! Closed-form Hamiltonians of the two deformation flows, their shift terms,
//! analytic gradients, and the u1-derivatives of H1 on the reduced manifold.
//!
//! The u_j-flow is generated by H_j + h_j through
//!
//!   ∂P_k/∂u_j = -∂(H_j + h_j)/∂Q_k,   ∂Q_k/∂u_j = +∂(H_j + h_j)/∂P_k,
//!
//! where h_j converts the explicit parameter dependence into time-dependent
//! Hamiltonian form. All formulas are polynomial in the canonical coordinates
//! and rational in u1, u2 with poles only at u2 = 0.

use num_complex::Complex64;

use crate::error::Result;
use crate::state::{ensure_u2, CanonicalState, ReducedState};

/// Which deformation parameter a Hamiltonian generates the flow in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowVar {
    U1,
    U2,
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Flow Hamiltonian H1 or H2.
pub fn hamiltonian(s: &CanonicalState, var: FlowVar) -> Result<Complex64> {
    ensure_u2(s.u2)?;
    let (u1, u2) = (s.u1, s.u2);
    let (p1, q1, p2, q2) = (s.p1, s.q1, s.p2, s.q2);
    let v = match var {
        FlowVar::U1 => {
            2.0 * I * p2 / u2 + 0.5 * u1 * q2 - 0.5 * u2 * q1 * q2 - u1 * u1 * q1 / (4.0 * u2)
                + 0.5 * u1 * q1 * q1
                - 0.25 * u2 * q1 * q1 * q1
                + 2.0 * p1 * p2 * q2 / u2
                + p1 * p1 * q1 / u2
        }
        FlowVar::U2 => {
            -I * p1 / u2 + I * p2 * q1 / u2 + u2 * q1 * q1 * q2 / 8.0 + u2 * q2 * q2 / 8.0
                - p1 * p1 * q2 / (2.0 * u2)
                - p2 * p2 * q2 * q2 / (2.0 * u2)
                - I * p2 * u1 / (u2 * u2)
                + u1 * u1 * u1 * q1 / (8.0 * u2 * u2)
                - u1 * u1 * q1 * q1 / (4.0 * u2)
                + u1 * q1 * q1 * q1 / 8.0
                - u1 * p1 * p2 * q2 / (u2 * u2)
                - u1 * p1 * p1 * q1 / (2.0 * u2 * u2)
                - u1 * u1 * q2 / (8.0 * u2)
        }
    };
    Ok(v)
}

/// Shift term h1 or h2 of the time-dependent Hamiltonian form.
pub fn shift(s: &CanonicalState, var: FlowVar) -> Result<Complex64> {
    ensure_u2(s.u2)?;
    let (u1, u2) = (s.u1, s.u2);
    let v = match var {
        FlowVar::U1 => s.p1 / u2,
        FlowVar::U2 => -s.p2 * s.q2 / u2 - s.p1 * s.q1 / (2.0 * u2) - u1 * s.p1 / (2.0 * u2 * u2),
    };
    Ok(v)
}

/// H_j + h_j, the generator of the u_j-flow.
pub fn total(s: &CanonicalState, var: FlowVar) -> Result<Complex64> {
    Ok(hamiltonian(s, var)? + shift(s, var)?)
}

/// Partial derivatives of a flow generator H_j + h_j.
#[derive(Debug, Clone, Copy)]
pub struct HamiltonianGradient {
    pub d_p1: Complex64,
    pub d_q1: Complex64,
    pub d_p2: Complex64,
    pub d_q2: Complex64,
    /// Explicit partial with respect to u1 at fixed canonical coordinates.
    pub d_u1: Complex64,
    /// Explicit partial with respect to u2 at fixed canonical coordinates.
    pub d_u2: Complex64,
}

/// Analytic gradient of H_j + h_j.
pub fn gradient(s: &CanonicalState, var: FlowVar) -> Result<HamiltonianGradient> {
    ensure_u2(s.u2)?;
    let (u1, u2) = (s.u1, s.u2);
    let u2sq = u2 * u2;
    let (p1, q1, p2, q2) = (s.p1, s.q1, s.p2, s.q2);
    let g = match var {
        FlowVar::U1 => HamiltonianGradient {
            d_p1: 2.0 * p2 * q2 / u2 + 2.0 * p1 * q1 / u2 + Complex64::from(1.0 / u2),
            d_q1: -0.5 * u2 * q2 - Complex64::from(u1 * u1 / (4.0 * u2)) + u1 * q1
                - 0.75 * u2 * q1 * q1
                + p1 * p1 / u2,
            d_p2: 2.0 * I / u2 + 2.0 * p1 * q2 / u2,
            d_q2: Complex64::from(0.5 * u1) - 0.5 * u2 * q1 + 2.0 * p1 * p2 / u2,
            d_u1: 0.5 * q2 - u1 * q1 / (2.0 * u2) + 0.5 * q1 * q1,
            d_u2: -2.0 * I * p2 / u2sq - 0.5 * q1 * q2 + u1 * u1 * q1 / (4.0 * u2sq)
                - 0.25 * q1 * q1 * q1
                - 2.0 * p1 * p2 * q2 / u2sq
                - p1 * p1 * q1 / u2sq
                - p1 / u2sq,
        },
        FlowVar::U2 => HamiltonianGradient {
            d_p1: -I / u2 - p1 * q2 / u2 - u1 * p2 * q2 / u2sq - u1 * p1 * q1 / u2sq
                - q1 / (2.0 * u2)
                - Complex64::from(u1 / (2.0 * u2sq)),
            d_q1: I * p2 / u2 + 0.25 * u2 * q1 * q2 + Complex64::from(u1 * u1 * u1 / (8.0 * u2sq))
                - u1 * u1 * q1 / (2.0 * u2)
                + 0.375 * u1 * q1 * q1
                - u1 * p1 * p1 / (2.0 * u2sq)
                - p1 / (2.0 * u2),
            d_p2: I * q1 / u2 - p2 * q2 * q2 / u2 - I * u1 / u2sq - u1 * p1 * q2 / u2sq - q2 / u2,
            d_q2: u2 * q1 * q1 / 8.0 + 0.25 * u2 * q2 - p1 * p1 / (2.0 * u2)
                - p2 * p2 * q2 / u2
                - u1 * p1 * p2 / u2sq
                - Complex64::from(u1 * u1 / (8.0 * u2))
                - p2 / u2,
            d_u1: -I * p2 / u2sq + 3.0 * u1 * u1 * q1 / (8.0 * u2sq) - u1 * q1 * q1 / (2.0 * u2)
                + q1 * q1 * q1 / 8.0
                - p1 * p2 * q2 / u2sq
                - p1 * p1 * q1 / (2.0 * u2sq)
                - u1 * q2 / (4.0 * u2)
                - p1 / (2.0 * u2sq),
            d_u2: I * p1 / u2sq - I * p2 * q1 / u2sq + q1 * q1 * q2 / 8.0 + q2 * q2 / 8.0
                + p1 * p1 * q2 / (2.0 * u2sq)
                + p2 * p2 * q2 * q2 / (2.0 * u2sq)
                + 2.0 * I * p2 * u1 / (u2sq * u2)
                - u1 * u1 * u1 * q1 / (4.0 * u2sq * u2)
                + u1 * u1 * q1 * q1 / (4.0 * u2sq)
                + 2.0 * u1 * p1 * p2 * q2 / (u2sq * u2)
                + u1 * p1 * p1 * q1 / (u2sq * u2)
                + u1 * u1 * q2 / (8.0 * u2sq)
                + p2 * q2 / u2sq
                + p1 * q1 / (2.0 * u2sq)
                + u1 * p1 / (u2sq * u2),
        },
    };
    Ok(g)
}

/// Reduced Hamiltonian H0 of the constrained u1 = 0 system.
pub fn reduced_hamiltonian(r: &ReducedState) -> Result<Complex64> {
    ensure_u2(r.u2)?;
    let u2 = r.u2;
    let d = u2 * u2 * r.q * r.q - 4.0 * r.p * r.p;
    Ok(-d * d / (32.0 * u2 * u2 * u2) - I * r.p / u2)
}

/// Reduced shift term h0 = -PQ/(2u2).
pub fn reduced_shift(r: &ReducedState) -> Result<Complex64> {
    ensure_u2(r.u2)?;
    Ok(-r.p * r.q / (2.0 * r.u2))
}

/// Analytic (∂/∂P, ∂/∂Q) of H0 + h0.
pub fn reduced_gradient(r: &ReducedState) -> Result<(Complex64, Complex64)> {
    ensure_u2(r.u2)?;
    let u2 = r.u2;
    let d = u2 * u2 * r.q * r.q - 4.0 * r.p * r.p;
    let dp = r.p * d / (2.0 * u2 * u2 * u2) - I / u2 - r.q / (2.0 * u2);
    let dq = -r.q * d / (8.0 * u2) - r.p / (2.0 * u2);
    Ok((dp, dq))
}

/// Order of the total u1-derivative of H1 taken along the u1-flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOrder {
    First,
    Third,
}

/// Total derivative d^k H1/du1^k along the u1-flow, evaluated at u1 = 0 on the
/// constraint manifold and expressed through the reduced coordinates.
///
/// Order one is P²/u2² - Q²/4. The third-order prefactor of (u2²Q² - 4P²)² is
/// 1/(4u2⁴), fixed by transporting H1 three times with the full flow generator
/// and cross-checked against exact finite-N fourth t-derivatives of log E_N.
pub fn dh1_du1_at_zero(r: &ReducedState, order: DerivativeOrder) -> Result<Complex64> {
    ensure_u2(r.u2)?;
    let u2 = r.u2;
    let v = match order {
        DerivativeOrder::First => r.p * r.p / (u2 * u2) - r.q * r.q / 4.0,
        DerivativeOrder::Third => {
            let d = u2 * u2 * r.q * r.q - 4.0 * r.p * r.p;
            d * d / (4.0 * u2 * u2 * u2 * u2) + 2.0 * I * r.p / (u2 * u2)
        }
    };
    Ok(v)
}
