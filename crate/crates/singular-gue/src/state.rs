//! Phase-space states and the reduction constraint.
//!
//! The full system lives on (u1, u2, P1, Q1, P2, Q2); at u1 = 0 the physical
//! branch satisfies the algebraic constraint
//!
//!   P2 = 0,   Q2 = -(u2²Q1² - 4P1²) / (2u2²),
//!
//! on which the dynamics reduces to the two-coordinate system (u2, P, Q).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance for accepting a state as lying on the constraint manifold.
pub const CONSTRAINT_TOL: f64 = 1e-6;

/// Point on the full phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalState {
    pub u1: f64,
    pub u2: f64,
    pub p1: Complex64,
    pub q1: Complex64,
    pub p2: Complex64,
    pub q2: Complex64,
}

/// Point of the constrained u1 = 0 system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub u2: f64,
    pub p: Complex64,
    pub q: Complex64,
}

pub(crate) fn ensure_u2(u2: f64) -> Result<()> {
    if u2 > 0.0 && u2.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveU2(u2))
    }
}

impl CanonicalState {
    pub fn new(u1: f64, u2: f64, p1: Complex64, q1: Complex64, p2: Complex64, q2: Complex64) -> Result<Self> {
        ensure_u2(u2)?;
        Ok(Self { u1, u2, p1, q1, p2, q2 })
    }

    /// Residual of the reduction constraint: `(P2, Q2 + (u2²Q1² - 4P1²)/(2u2²))`.
    ///
    /// Both components vanish on the physical branch at u1 = 0.
    pub fn constraint_residual(&self) -> Result<(Complex64, Complex64)> {
        ensure_u2(self.u2)?;
        let u2sq = self.u2 * self.u2;
        let second = self.q2 + (u2sq * self.q1 * self.q1 - 4.0 * self.p1 * self.p1) / (2.0 * u2sq);
        Ok((self.p2, second))
    }

    /// Project onto the reduced system, rejecting states off the constraint manifold.
    pub fn reduce(&self, tol: f64) -> Result<ReducedState> {
        if self.u1.abs() > tol {
            return Err(Error::NonZeroU1 { u1: self.u1, tol });
        }
        let (r1, r2) = self.constraint_residual()?;
        if r1.norm() > tol || r2.norm() > tol {
            return Err(Error::ConstraintViolated {
                p2: r1.norm(),
                q2: r2.norm(),
                tol,
            });
        }
        Ok(ReducedState {
            u2: self.u2,
            p: self.p1,
            q: self.q1,
        })
    }
}

impl ReducedState {
    pub fn new(u2: f64, p: Complex64, q: Complex64) -> Result<Self> {
        ensure_u2(u2)?;
        Ok(Self { u2, p, q })
    }

    /// Embed into the full phase space at u1 = 0 with P2 = 0 and Q2 from the constraint.
    pub fn lift(&self) -> CanonicalState {
        let u2sq = self.u2 * self.u2;
        CanonicalState {
            u1: 0.0,
            u2: self.u2,
            p1: self.p,
            q1: self.q,
            p2: Complex64::new(0.0, 0.0),
            q2: -(u2sq * self.q * self.q - 4.0 * self.p * self.p) / (2.0 * u2sq),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lift_then_reduce_is_identity() {
        let r = ReducedState::new(0.7, c(0.0, 0.3), c(0.0, -1.1)).unwrap();
        let s = r.lift();
        let (r1, r2) = s.constraint_residual().unwrap();
        assert_eq!(r1, c(0.0, 0.0));
        assert_eq!(r2, c(0.0, 0.0));
        let back = s.reduce(CONSTRAINT_TOL).unwrap();
        assert_eq!(back.p, r.p);
        assert_eq!(back.q, r.q);
        assert_eq!(back.u2, r.u2);
    }

    #[test]
    fn reduce_rejects_nonzero_p2() {
        let mut s = ReducedState::new(1.0, c(0.0, 0.5), c(0.0, 0.5)).unwrap().lift();
        s.p2 = c(1.0, 0.0);
        let err = s.reduce(CONSTRAINT_TOL).unwrap_err();
        assert!(matches!(err, Error::ConstraintViolated { .. }));
    }

    #[test]
    fn reduce_rejects_nonzero_u1() {
        let mut s = ReducedState::new(1.0, c(0.0, 0.5), c(0.0, 0.5)).unwrap().lift();
        s.u1 = 0.1;
        assert!(matches!(s.reduce(CONSTRAINT_TOL), Err(Error::NonZeroU1 { .. })));
    }

    #[test]
    fn nonpositive_u2_is_rejected() {
        assert!(CanonicalState::new(0.0, 0.0, c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)).is_err());
        assert!(ReducedState::new(-1.0, c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }
}
