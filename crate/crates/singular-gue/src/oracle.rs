//! Exact finite-N evaluation of E_N(z, t) and its logarithmic derivatives.
//!
//! E_N(z, t) equals the Hankel determinant of the weight
//! w(x) = exp(-z²/(2x²) + t/x - x²/2), which factorizes as ∏ h_j over the
//! norms of the monic orthogonal polynomials of w. The norms are computed by
//! the Stieltjes procedure on a discretized measure (never through raw-moment
//! determinants, whose Hankel matrices are catastrophically ill-conditioned),
//! and the log-derivatives come from weighted integrals of the
//! Christoffel-Darboux one-point function
//!
//!   ∂_t log E_N = ∫ K_N(x,x)/x dx,    ∂_z log E_N = -z ∫ K_N(x,x)/x² dx,
//!
//! with K_N(x,x) = w(x) Σ_{j<N} π_j(x)²/h_j.
//!
//! E_N(z, t) is even in t (substitute x → -x in the defining integral); the
//! suite asserts this symmetry.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::report::fmt_f64;

/// Largest matrix dimension supported in plain double precision.
pub const MAX_N: usize = 50;

/// Relative h_j drift allowed between two refinement levels.
pub const REFINEMENT_TOL: f64 = 1e-9;

/// Parameters of the weight w(x) = exp(-z²/(2x²) + t/x - x²/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightParams {
    pub n: usize,
    pub z: f64,
    pub t: f64,
}

impl WeightParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidWeight("N must be at least 1".into()));
        }
        if self.n > MAX_N {
            return Err(Error::OracleSizeCap { n: self.n, cap: MAX_N });
        }
        if !(self.z >= 0.0 && self.z.is_finite() && self.t.is_finite()) {
            return Err(Error::InvalidWeight(format!(
                "need z >= 0 and finite t, got z = {}, t = {}",
                self.z, self.t
            )));
        }
        if self.z == 0.0 && self.t != 0.0 {
            return Err(Error::InvalidWeight(
                "z = 0 removes the origin suppression and the t/x term makes the weight non-integrable".into(),
            ));
        }
        Ok(())
    }

    /// Weight value; continuous at x = 0 (limit 0) when z > 0.
    pub fn weight(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        (-self.z * self.z / (2.0 * x * x) + self.t / x - x * x / 2.0).exp()
    }

    /// Truncation radius of the quadrature domain.
    fn domain_radius(&self) -> f64 {
        8.0_f64.max(3.0 * (2.0 * self.n as f64).sqrt())
    }

    /// Radius inside which the integrand is below 1e-300 (z > 0 only).
    fn hole_radius(&self) -> f64 {
        self.z / 1400.0_f64.sqrt()
    }
}

/// Composite Gauss-Legendre grid: panels geometrically graded toward the
/// origin when z > 0, uniform in the bulk; symmetric about 0.
fn build_grid(p: &WeightParams, refinement: u32) -> (Vec<f64>, Vec<f64>) {
    let order = 24;
    let (gx, gw) = gauss_legendre(order);
    let l = p.domain_radius();
    let scale = 2.0_f64.powi(refinement as i32);
    let bulk_width = 0.25 / scale;

    let mut edges = Vec::new();
    if p.z > 0.0 {
        let d0 = p.hole_radius();
        let ratio = 1.35_f64.powf(1.0 / scale);
        let inner_end = 1.0_f64.min(l);
        let mut x = d0;
        edges.push(x);
        while x < inner_end {
            x = (x * ratio).min(inner_end);
            edges.push(x);
        }
    } else {
        edges.push(0.0);
        edges.push(1.0_f64.min(l));
    }
    let start_bulk = *edges.last().unwrap();
    if start_bulk < l {
        let n_bulk = ((l - start_bulk) / bulk_width).ceil() as usize;
        for k in 1..=n_bulk {
            edges.push(start_bulk + (l - start_bulk) * k as f64 / n_bulk as f64);
        }
    }
    if p.z == 0.0 {
        // refine the inner [0, 1] panel uniformly as well
        let mut inner = Vec::new();
        let n_inner = (4.0 * scale).ceil() as usize;
        for k in 0..=n_inner {
            inner.push(edges[0] + (edges[1] - edges[0]) * k as f64 / n_inner as f64);
        }
        inner.extend_from_slice(&edges[2..]);
        edges = inner;
    }

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for (x, w) in gx.iter().zip(&gw) {
            let xp = mid + half * x;
            nodes.push(xp);
            weights.push(half * w);
            nodes.push(-xp);
            weights.push(half * w);
        }
    }
    (nodes, weights)
}

struct StieltjesResult {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    norms: Vec<f64>,
    nodes: Vec<f64>,
    weighted: Vec<f64>,
}

/// Monic three-term recurrence by successive inner products on the grid.
fn stieltjes(p: &WeightParams, refinement: u32) -> Result<StieltjesResult> {
    let (nodes, gl_weights) = build_grid(p, refinement);
    let weighted: Vec<f64> = nodes
        .iter()
        .zip(&gl_weights)
        .map(|(x, w)| w * p.weight(*x))
        .collect();
    let m = nodes.len();
    let mut pi_prev = vec![0.0; m];
    let mut pi_cur = vec![1.0; m];
    let mut alpha = Vec::with_capacity(p.n);
    let mut beta = Vec::with_capacity(p.n);
    let mut norms = Vec::with_capacity(p.n);
    let mut h_prev = 0.0;
    for j in 0..p.n {
        let mut h = 0.0;
        let mut xh = 0.0;
        for i in 0..m {
            let v = weighted[i] * pi_cur[i] * pi_cur[i];
            h += v;
            xh += nodes[i] * v;
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidWeight(format!(
                "norm h_{j} lost positivity on the discretized measure (h = {h:.3e})"
            )));
        }
        let a = xh / h;
        let b = if j == 0 { h } else { h / h_prev };
        alpha.push(a);
        beta.push(b);
        norms.push(h);
        let bj = if j == 0 { 0.0 } else { b };
        for i in 0..m {
            let next = (nodes[i] - a) * pi_cur[i] - bj * pi_prev[i];
            pi_prev[i] = pi_cur[i];
            pi_cur[i] = next;
        }
        h_prev = h;
    }
    Ok(StieltjesResult { alpha, beta, norms, nodes, weighted })
}

/// Orthogonal-polynomial data of the weight on a refinement-validated grid.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    pub params: WeightParams,
    pub refinement: u32,
    /// Recurrence coefficients α_j; β_j with the convention β_0 = h_0.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Norms h_j = β_0 β_1 ... β_j.
    pub norms: Vec<f64>,
    /// Max relative h_j drift against the next refinement level.
    pub est_error: f64,
    nodes: Vec<f64>,
    weighted: Vec<f64>,
}

/// Build the basis at `refinement`, validating the norms against the next
/// refinement level; the returned data is from the finer grid.
pub fn build_basis(p: &WeightParams, refinement: u32) -> Result<OrthoBasis> {
    p.validate()?;
    let coarse = stieltjes(p, refinement)?;
    let fine = stieltjes(p, refinement + 1)?;
    let mut drift: f64 = 0.0;
    for (hc, hf) in coarse.norms.iter().zip(&fine.norms) {
        drift = drift.max((hc - hf).abs() / hf.abs());
    }
    if drift > REFINEMENT_TOL {
        return Err(Error::RefinementFailure { drift, tol: REFINEMENT_TOL });
    }
    Ok(OrthoBasis {
        params: *p,
        refinement,
        alpha: fine.alpha,
        beta: fine.beta,
        norms: fine.norms,
        est_error: drift,
        nodes: fine.nodes,
        weighted: fine.weighted,
    })
}

impl OrthoBasis {
    /// Node count of the validated grid.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Diagonal Christoffel-Darboux sum Σ_j π_j(x_i)²/h_j on the grid.
    fn kernel_sums(&self) -> Vec<f64> {
        let m = self.nodes.len();
        let mut pi_prev = vec![0.0; m];
        let mut pi_cur = vec![1.0; m];
        let mut acc = vec![0.0; m];
        for j in 0..self.params.n {
            for i in 0..m {
                acc[i] += pi_cur[i] * pi_cur[i] / self.norms[j];
            }
            let bj = if j == 0 { 0.0 } else { self.beta[j] };
            for i in 0..m {
                let next = (self.nodes[i] - self.alpha[j]) * pi_cur[i] - bj * pi_prev[i];
                pi_prev[i] = pi_cur[i];
                pi_cur[i] = next;
            }
        }
        acc
    }

    /// ∫ K_N(x, x) dx; equals N by orthonormality.
    pub fn kernel_trace(&self) -> f64 {
        let k = self.kernel_sums();
        self.weighted.iter().zip(&k).map(|(w, ki)| w * ki).sum()
    }

    /// Largest normalized off-diagonal Gram entry |<π_j, π_k>|/√(h_j h_k).
    pub fn gram_residual(&self) -> f64 {
        let n = self.params.n;
        let m = self.nodes.len();
        let mut values = Vec::with_capacity(n);
        let mut pi_prev = vec![0.0; m];
        let mut pi_cur = vec![1.0; m];
        for j in 0..n {
            values.push(pi_cur.clone());
            let bj = if j == 0 { 0.0 } else { self.beta[j] };
            for i in 0..m {
                let next = (self.nodes[i] - self.alpha[j]) * pi_cur[i] - bj * pi_prev[i];
                pi_prev[i] = pi_cur[i];
                pi_cur[i] = next;
            }
        }
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in (j + 1)..n {
                let mut ip = 0.0;
                for i in 0..m {
                    ip += self.weighted[i] * values[j][i] * values[k][i];
                }
                worst = worst.max(ip.abs() / (self.norms[j] * self.norms[k]).sqrt());
            }
        }
        worst
    }

    /// Plain-text cache: one "alpha beta" pair per line, 17 significant digits.
    pub fn write_coefficients<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (a, b) in self.alpha.iter().zip(&self.beta) {
            writeln!(w, "{} {}", fmt_f64(*a), fmt_f64(*b))?;
        }
        Ok(())
    }
}

/// Parse a coefficient cache written by [`OrthoBasis::write_coefficients`].
pub fn read_coefficients<R: std::io::BufRead>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let a = parts
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| Error::CacheFormat(format!("line {}: missing alpha", ln + 1)))?;
        let b = parts
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| Error::CacheFormat(format!("line {}: missing beta", ln + 1)))?;
        alpha.push(a);
        beta.push(b);
    }
    if alpha.is_empty() {
        return Err(Error::CacheFormat("empty coefficient cache".into()));
    }
    Ok((alpha, beta))
}

/// log E_N from the norm product.
pub fn log_e(basis: &OrthoBasis) -> f64 {
    basis.norms.iter().map(|h| h.ln()).sum()
}

/// log E_N from cached recurrence coefficients (β_0 = h_0 convention).
pub fn log_e_from_beta(beta: &[f64]) -> f64 {
    let mut log_h = 0.0;
    let mut acc = 0.0;
    for b in beta {
        log_h += b.ln();
        acc += log_h;
    }
    acc
}

/// (∂_t log E_N, ∂_z log E_N) from the one-point function; requires z > 0.
pub fn log_derivs(basis: &OrthoBasis) -> Result<(f64, f64)> {
    if basis.params.z <= 0.0 {
        return Err(Error::ZeroZ);
    }
    let k = basis.kernel_sums();
    let mut dt = 0.0;
    let mut dz = 0.0;
    for i in 0..basis.nodes.len() {
        let x = basis.nodes[i];
        let kw = basis.weighted[i] * k[i];
        dt += kw / x;
        dz += kw / (x * x);
    }
    Ok((dt, -basis.params.z * dz))
}

/// Full oracle record for one (N, z, t).
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub z: f64,
    pub t: f64,
    pub log_e: f64,
    pub dlog_e_dt: Option<f64>,
    pub dlog_e_dz: Option<f64>,
    pub node_count: usize,
    pub refinement_level: u32,
    pub est_error: f64,
}

/// Evaluate the oracle at the given refinement level.
pub fn evaluate(p: &WeightParams, refinement: u32) -> Result<OracleReport> {
    let basis = build_basis(p, refinement)?;
    let (dt, dz) = if p.z > 0.0 {
        let (a, b) = log_derivs(&basis)?;
        (Some(a), Some(b))
    } else {
        (None, None)
    };
    Ok(OracleReport {
        n: p.n,
        z: p.z,
        t: p.t,
        log_e: log_e(&basis),
        dlog_e_dt: dt,
        dlog_e_dz: dz,
        node_count: basis.node_count(),
        refinement_level: refinement,
        est_error: basis.est_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(n: usize) -> WeightParams {
        WeightParams { n, z: 0.0, t: 0.0 }
    }

    #[test]
    fn gaussian_recurrence_is_classical() {
        let basis = build_basis(&gaussian(12), 0).unwrap();
        let sqrt_2pi = (2.0 * PI).sqrt();
        assert!((basis.beta[0] - sqrt_2pi).abs() < 1e-10);
        let mut factorial = 1.0;
        for j in 1..12 {
            assert!(basis.alpha[j].abs() < 1e-12, "alpha_{j} = {}", basis.alpha[j]);
            assert!(
                (basis.beta[j] - j as f64).abs() < 1e-9 * j as f64,
                "beta_{j} = {}",
                basis.beta[j]
            );
            factorial *= j as f64;
            let expect = sqrt_2pi * factorial;
            assert!(
                (basis.norms[j] - expect).abs() < 1e-9 * expect,
                "h_{j} = {} vs {}",
                basis.norms[j],
                expect
            );
        }
        assert!(basis.alpha[0].abs() < 1e-12);
    }

    #[test]
    fn gaussian_log_e_small_n() {
        let b1 = build_basis(&gaussian(1), 0).unwrap();
        assert!((log_e(&b1) - 0.5 * (2.0 * PI).ln()).abs() < 1e-10);
        let b2 = build_basis(&gaussian(2), 0).unwrap();
        assert!((log_e(&b2) - (2.0 * PI).ln()).abs() < 1e-10);
    }

    #[test]
    fn two_by_two_determinant_cross_check() {
        // h_0 h_1 must equal μ0 μ2 - μ1² computed directly on the same grid
        let p = gaussian(2);
        let basis = build_basis(&p, 0).unwrap();
        let (nodes, glw) = super::build_grid(&p, 1);
        let mut mu = [0.0; 3];
        for (x, w) in nodes.iter().zip(&glw) {
            let ww = w * p.weight(*x);
            mu[0] += ww;
            mu[1] += ww * x;
            mu[2] += ww * x * x;
        }
        let det = mu[0] * mu[2] - mu[1] * mu[1];
        assert!((det - 2.0 * PI).abs() < 1e-9, "2x2 determinant {det}");
        assert!(((log_e(&basis)).exp() - det).abs() < 1e-8 * det);
    }

    #[test]
    fn evenness_in_t_and_alpha_flip() {
        let plus = build_basis(&WeightParams { n: 6, z: 0.2, t: 0.3 }, 0).unwrap();
        let minus = build_basis(&WeightParams { n: 6, z: 0.2, t: -0.3 }, 0).unwrap();
        assert!((log_e(&plus) - log_e(&minus)).abs() < 1e-10);
        for j in 0..6 {
            assert!((plus.alpha[j] + minus.alpha[j]).abs() < 1e-10, "alpha flip at {j}");
            assert!((plus.norms[j] - minus.norms[j]).abs() < 1e-10 * plus.norms[j]);
            assert!(plus.alpha[j].abs() > 1e-6, "t should break the even symmetry");
        }
    }

    #[test]
    fn kernel_trace_equals_n() {
        for p in [
            gaussian(6),
            WeightParams { n: 9, z: 0.25, t: 0.1 },
            WeightParams { n: 4, z: 0.35, t: 0.0 },
        ] {
            let basis = build_basis(&p, 0).unwrap();
            let trace = basis.kernel_trace();
            assert!(
                (trace - p.n as f64).abs() < 1e-10 * p.n as f64,
                "trace {trace} vs N = {}",
                p.n
            );
        }
    }

    #[test]
    fn gram_matrix_is_diagonal() {
        let basis = build_basis(&WeightParams { n: 8, z: 0.3, t: 0.1 }, 0).unwrap();
        assert!(basis.gram_residual() < 1e-12, "gram residual {}", basis.gram_residual());
    }

    #[test]
    fn log_derivs_match_finite_differences() {
        let n = 9;
        let z = (0.5_f64 / 9.0).sqrt();
        let t = 0.4 / 3.0;
        let basis = build_basis(&WeightParams { n, z, t }, 0).unwrap();
        let (dt, dz) = log_derivs(&basis).unwrap();
        let h = 1e-4;
        let le = |z: f64, t: f64| log_e(&build_basis(&WeightParams { n, z, t }, 0).unwrap());
        let fd_t = (le(z, t + h) - le(z, t - h)) / (2.0 * h);
        let fd_z = (le(z + h, t) - le(z - h, t)) / (2.0 * h);
        assert!((dt - fd_t).abs() <= 1e-6 * fd_t.abs().max(1.0), "dt {dt} vs {fd_t}");
        assert!((dz - fd_z).abs() <= 1e-6 * fd_z.abs().max(1.0), "dz {dz} vs {fd_z}");
    }

    #[test]
    fn t_derivative_vanishes_at_even_weight() {
        let basis = build_basis(&WeightParams { n: 6, z: 0.3, t: 0.0 }, 0).unwrap();
        let (dt, _) = log_derivs(&basis).unwrap();
        assert!(dt.abs() < 1e-9, "dt at t=0: {dt:.3e}");
    }

    #[test]
    fn refinement_report_is_stable() {
        let report = evaluate(&WeightParams { n: 16, z: 0.17, t: 0.05 }, 0).unwrap();
        assert!(report.est_error < REFINEMENT_TOL);
        assert!(report.dlog_e_dt.is_some());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(WeightParams { n: 0, z: 0.0, t: 0.0 }.validate().is_err());
        assert!(WeightParams { n: 51, z: 0.0, t: 0.0 }.validate().is_err());
        assert!(WeightParams { n: 4, z: 0.0, t: 0.5 }.validate().is_err());
        assert!(WeightParams { n: 4, z: -0.1, t: 0.0 }.validate().is_err());
        let basis = build_basis(&gaussian(4), 0).unwrap();
        assert!(matches!(log_derivs(&basis), Err(Error::ZeroZ)));
    }

    #[test]
    fn coefficient_cache_round_trips() {
        let basis = build_basis(&WeightParams { n: 5, z: 0.2, t: 0.1 }, 0).unwrap();
        let mut buf = Vec::new();
        basis.write_coefficients(&mut buf).unwrap();
        let (alpha, beta) = read_coefficients(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(alpha.len(), 5);
        for j in 0..5 {
            assert!((alpha[j] - basis.alpha[j]).abs() <= 1e-15 * basis.alpha[j].abs().max(1.0));
            assert!((beta[j] - basis.beta[j]).abs() <= 1e-15 * basis.beta[j].abs());
        }
        let via_cache = log_e_from_beta(&beta);
        assert!((via_cache - log_e(&basis)).abs() < 1e-10 * log_e(&basis).abs().max(1.0));
    }
}
