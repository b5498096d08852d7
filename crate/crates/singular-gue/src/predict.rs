//! Large-N predictions of log E_N(z, t) and its logarithmic derivatives.
//!
//! With u1 = √N t and u2 = N z², the prediction assembles
//!
//!   log E_N = (N/2) log 2π + Σ_{j=1}^{N-1} log j!
//!             - ∫₀^{u2} H0 du2'
//!             - Σ_j d^{2j-1}H1/du1^{2j-1}|₀ (√N t)^{2j} / (2j)!
//!
//! and the derivative laws ∂_t log E_N ≈ -√N·H1, ∂_z log E_N ≈ -2zN·H2. The
//! t-series is truncated at j = 2, the highest order with a closed form.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::flow::{flow_reduced, flow_reduced_accumulating, reach, IntegratorConfig};
use crate::hamiltonian::{
    dh1_du1_at_zero, hamiltonian, reduced_hamiltonian, DerivativeOrder, FlowVar,
};
use crate::quad::{gauss_legendre, integrate_panel};
use crate::seed::{seed_reduced_with_window, SEED_WINDOW};
use crate::state::ReducedState;

/// Configuration of the prediction pipeline.
#[derive(Debug, Clone, Copy)]
pub struct PredictorConfig {
    pub integrator: IntegratorConfig,
    /// Split point of the H0 integral: series quadrature on (0, ε), flow
    /// transport beyond.
    pub eps_split: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self { integrator: IntegratorConfig::default(), eps_split: 1e-4 }
    }
}

/// Exact log of the Gaussian normalization (N/2)·log 2π + Σ_{j=1}^{N-1} log j!.
pub fn log_prefactor(n: usize) -> f64 {
    let mut acc = 0.5 * n as f64 * (2.0 * PI).ln();
    for k in 2..n {
        acc += (n - k) as f64 * (k as f64).ln();
    }
    acc
}

/// Value of ∫₀^{u2_max} H0 du2 along the reduced flow.
#[derive(Debug, Clone, Copy)]
pub struct H0Integral {
    pub value: f64,
    pub im_residual: f64,
    /// Reduced state transported to u2_max, reused for the t-series.
    pub terminal: ReducedState,
}

/// u2 at which the reduced flow is seeded inside [`integral_h0`]; chosen so
/// the series truncation error injected into the flow sits below the
/// integrator tolerances for any split point ε ≥ this value.
const H0_FLOW_SEED_U2: f64 = 1e-6;

/// Integral of H0 from 0 to `u2_max`: the integrable u2^{-1/2} head on
/// (0, ε) is integrated in s = √u2 with H0 from the seed series, the rest is
/// carried by the flow with an accumulator equation. The flow state itself is
/// seeded at a fixed small u2 so that the split point ε only selects which
/// representation of the integrand covers (0, ε).
pub fn integral_h0(u2_max: f64, cfg: &PredictorConfig) -> Result<H0Integral> {
    if u2_max <= 0.0 || !u2_max.is_finite() {
        return Err(Error::NonPositiveU2(u2_max));
    }
    if cfg.eps_split <= 0.0 || cfg.eps_split > SEED_WINDOW {
        return Err(Error::InvalidConfig(format!(
            "eps_split {} must lie in (0, {SEED_WINDOW}]",
            cfg.eps_split
        )));
    }
    let eps = cfg.eps_split.min(u2_max);

    // series head: u2 = s², integrand 2s·H0(s²), analytic through s = 0
    let (nodes, weights) = gauss_legendre(48);
    let mut head_im: f64 = 0.0;
    let head = integrate_panel(&nodes, &weights, 0.0, eps.sqrt(), |s| {
        let r = seed_reduced_with_window(s * s, SEED_WINDOW).expect("s² inside seed window");
        let h0 = reduced_hamiltonian(&r).expect("positive u2");
        head_im = head_im.max(h0.im.abs());
        2.0 * s * h0.re
    });

    if u2_max <= eps {
        let terminal = seed_reduced_with_window(u2_max, SEED_WINDOW)?;
        return Ok(H0Integral { value: head, im_residual: head_im, terminal });
    }

    let seed_u2 = H0_FLOW_SEED_U2.min(eps);
    let r_seed = seed_reduced_with_window(seed_u2, SEED_WINDOW)?;
    let r_eps = if eps > seed_u2 {
        flow_reduced(&r_seed, eps, &cfg.integrator)?.terminal
    } else {
        r_seed
    };
    let (terminal, tail) = flow_reduced_accumulating(&r_eps, u2_max, &cfg.integrator)?;
    Ok(H0Integral {
        value: head + tail.re,
        im_residual: head_im.max(tail.im.abs()),
        terminal,
    })
}

/// One term of the truncated t-series: the coefficient of t^{order}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TSeriesTerm {
    pub order: u32,
    pub coefficient: f64,
}

/// Assembled prediction record.
#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub n: usize,
    pub z: f64,
    pub t: f64,
    pub u1: f64,
    pub u2: f64,
    pub log_prefactor: f64,
    pub integral_h0: f64,
    pub t_series: Vec<TSeriesTerm>,
    pub log_e: f64,
    pub dlog_e_dt: f64,
    pub dlog_e_dz: f64,
    pub im_residual: f64,
}

/// Predicted (∂_t log E_N, ∂_z log E_N) = (-√N·H1, -2zN·H2) at the
/// transported state.
pub fn predict_log_derivs(n: usize, z: f64, t: f64, cfg: &PredictorConfig) -> Result<(f64, f64)> {
    let (d, _) = log_derivs_with_residual(n, z, t, cfg)?;
    Ok(d)
}

fn log_derivs_with_residual(
    n: usize,
    z: f64,
    t: f64,
    cfg: &PredictorConfig,
) -> Result<((f64, f64), f64)> {
    if n == 0 {
        return Err(Error::InvalidConfig("N must be at least 1".into()));
    }
    if z <= 0.0 {
        return Err(Error::NonPositiveU2(z));
    }
    let nf = n as f64;
    let u1 = nf.sqrt() * t;
    let u2 = nf * z * z;
    let s = reach(u1, u2, &cfg.integrator)?;
    let h1 = hamiltonian(&s, FlowVar::U1)?;
    let h2 = hamiltonian(&s, FlowVar::U2)?;
    let im = h1.im.abs().max(h2.im.abs());
    Ok(((-nf.sqrt() * h1.re, -2.0 * z * nf * h2.re), im))
}

/// Full prediction of log E_N(z, t) with the t-series truncated at `jmax_t`.
pub fn predict_log_e(
    n: usize,
    z: f64,
    t: f64,
    jmax_t: usize,
    cfg: &PredictorConfig,
) -> Result<Prediction> {
    if n == 0 {
        return Err(Error::InvalidConfig("N must be at least 1".into()));
    }
    if !(1..=2).contains(&jmax_t) {
        return Err(Error::InvalidConfig(format!(
            "t-series order jmax_t = {jmax_t} unsupported; closed forms exist for 1 and 2"
        )));
    }
    if z <= 0.0 || !z.is_finite() {
        return Err(Error::NonPositiveU2(z));
    }
    let nf = n as f64;
    let u1 = nf.sqrt() * t;
    let u2 = nf * z * z;
    let prefactor = log_prefactor(n);
    let h0int = integral_h0(u2, cfg)?;
    let mut im_residual = h0int.im_residual;

    let mut t_series = Vec::with_capacity(jmax_t);
    let mut series_sum = 0.0;
    for j in 1..=jmax_t {
        let order = match j {
            1 => DerivativeOrder::First,
            _ => DerivativeOrder::Third,
        };
        let deriv: Complex64 = dh1_du1_at_zero(&h0int.terminal, order)?;
        im_residual = im_residual.max(deriv.im.abs());
        let factorial_2j = (1..=2 * j).map(|k| k as f64).product::<f64>();
        let coeff = -deriv.re * nf.powi(j as i32) / factorial_2j;
        t_series.push(TSeriesTerm { order: 2 * j as u32, coefficient: coeff });
        series_sum += coeff * t.powi(2 * j as i32);
    }
    let log_e = prefactor - h0int.value + series_sum;

    let ((dt, dz), im_d) = log_derivs_with_residual(n, z, t, cfg)?;
    im_residual = im_residual.max(im_d);

    Ok(Prediction {
        n,
        z,
        t,
        u1,
        u2,
        log_prefactor: prefactor,
        integral_h0: h0int.value,
        t_series,
        log_e,
        dlog_e_dt: dt,
        dlog_e_dz: dz,
        im_residual,
    })
}
