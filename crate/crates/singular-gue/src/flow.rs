//! Adaptive integration of the deformation flows.
//!
//! Both canonical flows and the reduced u1 = 0 system are integrated with an
//! embedded Dormand-Prince 5(4) pair under PI step-size control. u2-flows
//! that enter the region u2 < 1e-3 are integrated in s = √u2, which turns the
//! u2^{-1/2} coordinate growth near the origin into a plain 1/s and keeps the
//! step counts modest from seeds as small as u2 = 1e-8.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{gradient, hamiltonian, reduced_hamiltonian, FlowVar};
use crate::seed::{seed_u1zero_with_window, SEED_WINDOW};
use crate::state::{ensure_u2, CanonicalState, ReducedState};

/// Tolerances and limits of the embedded Runge-Kutta integration.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Integrate u2-legs below u2 = 1e-3 in s = √u2.
    pub sqrt_substitution: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 200_000,
            sqrt_substitution: true,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<()> {
        if self.rel_tol <= 0.0 || self.abs_tol <= 0.0 {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Step statistics of one integration.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlowStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Threshold below which u2-flows switch to the √u2 parameterization.
const SQRT_SUBST_THRESHOLD: f64 = 1e-3;

/// Samples are decimated to at most this many points.
const MAX_SAMPLES: usize = 1024;

// Dormand-Prince 5(4) tableau; the last A row doubles as the 5th-order weights
// and the scheme is FSAL.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Controller {
    facold: f64,
    last_rejected: bool,
}

impl Controller {
    const BETA: f64 = 0.04;
    const SAFE: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;

    fn new() -> Self {
        Self { facold: 1e-4, last_rejected: false }
    }

    fn scale(&mut self, err: f64, accepted: bool) -> f64 {
        let expo1 = 0.2 - Self::BETA * 0.75;
        let fac11 = err.max(1e-30).powf(expo1);
        if accepted {
            let fac = fac11 / self.facold.powf(Self::BETA);
            let fac = (fac / Self::SAFE).clamp(1.0 / Self::FAC_MAX, 1.0 / Self::FAC_MIN);
            self.facold = err.max(1e-4);
            let mut s = 1.0 / fac;
            if self.last_rejected {
                s = s.min(1.0);
            }
            self.last_rejected = false;
            s
        } else {
            self.last_rejected = true;
            1.0 / (fac11 / Self::SAFE).min(1.0 / Self::FAC_MIN)
        }
    }
}

fn weighted_err<const N: usize>(
    y0: &[Complex64; N],
    y1: &[Complex64; N],
    err_vec: &[Complex64; N],
    cfg: &IntegratorConfig,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].norm().max(y1[i].norm());
        let r = err_vec[i].norm() / sc;
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

fn integrate<const N: usize, F, S>(
    f: F,
    t0: f64,
    t1: f64,
    y0: [Complex64; N],
    cfg: &IntegratorConfig,
    mut sink: S,
) -> Result<([Complex64; N], FlowStats)>
where
    F: Fn(f64, &[Complex64; N]) -> [Complex64; N],
    S: FnMut(f64, &[Complex64; N]),
{
    cfg.validate()?;
    let mut stats = FlowStats::default();
    sink(t0, &y0);
    if t0 == t1 {
        return Ok((y0, stats));
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);

    // crude first step from the scaled magnitudes of y and f
    let mut h = {
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..N {
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].norm();
            d0 += (y[i].norm() / sc).powi(2);
            d1 += (k1[i].norm() / sc).powi(2);
        }
        let (d0, d1) = (d0.sqrt(), d1.sqrt());
        let guess = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 * span } else { 0.01 * d0 / d1 };
        dir * guess.min(span)
    };

    let mut controller = Controller::new();
    let mut k = [[Complex64::new(0.0, 0.0); N]; 7];

    loop {
        if (t - t1) * dir >= 0.0 {
            break;
        }
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::MaxStepsExceeded(cfg.max_steps));
        }
        if h.abs() < 1e-14 * t.abs().max(span) {
            return Err(Error::StepSizeUnderflow { at: t, accepted: stats.accepted });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }

        k[0] = k1;
        for stage in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage - 1][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += kj[i] * (a * h);
                    }
                }
            }
            k[stage] = f(t + C[stage] * h, &ys);
        }
        // stage 7 used the 5th-order solution itself (FSAL)
        let mut y1 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = A[5][j];
            if b != 0.0 {
                for i in 0..N {
                    y1[i] += kj[i] * (b * h);
                }
            }
        }
        let mut err_vec = [Complex64::new(0.0, 0.0); N];
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                for i in 0..N {
                    err_vec[i] += kj[i] * (E[j] * h);
                }
            }
        }
        let err = weighted_err(&y, &y1, &err_vec, cfg);

        if err <= 1.0 {
            stats.accepted += 1;
            t += h;
            y = y1;
            k1 = k[6];
            sink(t, &y);
            h *= controller.scale(err, true);
        } else {
            stats.rejected += 1;
            h *= controller.scale(err, false);
        }
    }
    Ok((y, stats))
}

/// Bounded sample reservoir with stride doubling.
struct Sampler<T> {
    samples: Vec<(f64, T)>,
    stride: usize,
    count: usize,
}

impl<T: Copy> Sampler<T> {
    fn new() -> Self {
        Self { samples: Vec::new(), stride: 1, count: 0 }
    }

    fn push(&mut self, t: f64, v: T) {
        if self.count % self.stride == 0 {
            if self.samples.len() == MAX_SAMPLES {
                let mut keep = Vec::with_capacity(MAX_SAMPLES / 2);
                for (i, s) in self.samples.drain(..).enumerate() {
                    if i % 2 == 0 {
                        keep.push(s);
                    }
                }
                self.samples = keep;
                self.stride *= 2;
            }
            self.samples.push((t, v));
        }
        self.count += 1;
    }

    fn finish(mut self, t: f64, v: T) -> Vec<(f64, T)> {
        match self.samples.last() {
            Some((tl, _)) if *tl == t => {}
            _ => self.samples.push((t, v)),
        }
        self.samples
    }
}

/// Integrated path of the full system.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// (flow parameter, state) samples, strictly monotone in the parameter.
    pub samples: Vec<(f64, CanonicalState)>,
    pub terminal: CanonicalState,
    pub stats: FlowStats,
}

/// Integrated path of the reduced system.
#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    pub samples: Vec<(f64, ReducedState)>,
    pub terminal: ReducedState,
    pub stats: FlowStats,
}

fn pack(s: &CanonicalState) -> [Complex64; 4] {
    [s.p1, s.q1, s.p2, s.q2]
}

fn unpack(u1: f64, u2: f64, y: &[Complex64; 4]) -> CanonicalState {
    CanonicalState { u1, u2, p1: y[0], q1: y[1], p2: y[2], q2: y[3] }
}

fn canonical_rhs(var: FlowVar, u1: f64, u2: f64, y: &[Complex64; 4]) -> [Complex64; 4] {
    let s = unpack(u1, u2, y);
    let g = gradient(&s, var).expect("u2 stays positive along the flow");
    [-g.d_q1, g.d_p1, -g.d_q2, g.d_p2]
}

/// Integrate the u1-flow to `u1_target` at fixed u2.
pub fn flow_u1(s: &CanonicalState, u1_target: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    ensure_u2(s.u2)?;
    let u2 = s.u2;
    let mut sampler = Sampler::new();
    let (y, stats) = integrate(
        |u1, y| canonical_rhs(FlowVar::U1, u1, u2, y),
        s.u1,
        u1_target,
        pack(s),
        cfg,
        |t, y| sampler.push(t, unpack(t, u2, y)),
    )?;
    let terminal = unpack(u1_target, u2, &y);
    Ok(Trajectory { samples: sampler.finish(u1_target, terminal), terminal, stats })
}

/// Integrate the u2-flow to `u2_target` at fixed u1.
pub fn flow_u2(s: &CanonicalState, u2_target: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    ensure_u2(s.u2)?;
    if u2_target <= 0.0 || !u2_target.is_finite() {
        return Err(Error::CrossesOrigin(u2_target));
    }
    let u1 = s.u1;
    let mut sampler = Sampler::new();
    let use_subst = cfg.sqrt_substitution && s.u2.min(u2_target) < SQRT_SUBST_THRESHOLD;
    let (y, stats) = if use_subst {
        integrate(
            |sv, y| {
                let mut dy = canonical_rhs(FlowVar::U2, u1, sv * sv, y);
                for c in dy.iter_mut() {
                    *c *= 2.0 * sv;
                }
                dy
            },
            s.u2.sqrt(),
            u2_target.sqrt(),
            pack(s),
            cfg,
            |t, y| sampler.push(t * t, unpack(u1, t * t, y)),
        )?
    } else {
        integrate(
            |u2, y| canonical_rhs(FlowVar::U2, u1, u2, y),
            s.u2,
            u2_target,
            pack(s),
            cfg,
            |t, y| sampler.push(t, unpack(u1, t, y)),
        )?
    };
    let terminal = unpack(u1, u2_target, &y);
    Ok(Trajectory { samples: sampler.finish(u2_target, terminal), terminal, stats })
}

/// Right-hand side of the reduced u2-flow (closed form).
pub fn reduced_flow_field(r: &ReducedState) -> Result<(Complex64, Complex64)> {
    ensure_u2(r.u2)?;
    let u2 = r.u2;
    let i = Complex64::new(0.0, 1.0);
    let d = u2 * u2 * r.q * r.q - 4.0 * r.p * r.p;
    let dp = r.q * d / (8.0 * u2) + r.p / (2.0 * u2);
    let dq = r.p * d / (2.0 * u2 * u2 * u2) - r.q / (2.0 * u2) - i / u2;
    Ok((dp, dq))
}

fn reduced_rhs(u2: f64, y: &[Complex64; 2]) -> [Complex64; 2] {
    let r = ReducedState { u2, p: y[0], q: y[1] };
    let (dp, dq) = reduced_flow_field(&r).expect("u2 stays positive along the flow");
    [dp, dq]
}

/// Integrate the reduced system to `u2_target`.
pub fn flow_reduced(
    r: &ReducedState,
    u2_target: f64,
    cfg: &IntegratorConfig,
) -> Result<ReducedTrajectory> {
    ensure_u2(r.u2)?;
    if u2_target <= 0.0 || !u2_target.is_finite() {
        return Err(Error::CrossesOrigin(u2_target));
    }
    let mut sampler = Sampler::new();
    let use_subst = cfg.sqrt_substitution && r.u2.min(u2_target) < SQRT_SUBST_THRESHOLD;
    let y0 = [r.p, r.q];
    let mk = |u2: f64, y: &[Complex64; 2]| ReducedState { u2, p: y[0], q: y[1] };
    let (y, stats) = if use_subst {
        integrate(
            |sv, y| {
                let mut dy = reduced_rhs(sv * sv, y);
                for c in dy.iter_mut() {
                    *c *= 2.0 * sv;
                }
                dy
            },
            r.u2.sqrt(),
            u2_target.sqrt(),
            y0,
            cfg,
            |t, y| sampler.push(t * t, mk(t * t, y)),
        )?
    } else {
        integrate(reduced_rhs, r.u2, u2_target, y0, cfg, |t, y| sampler.push(t, mk(t, y)))?
    };
    let terminal = mk(u2_target, &y);
    Ok(ReducedTrajectory { samples: sampler.finish(u2_target, terminal), terminal, stats })
}

/// Reduced flow augmented with the running integral of H0 along the path.
///
/// Returns the terminal state and ∫ H0 du2 over [r.u2, u2_target].
pub(crate) fn flow_reduced_accumulating(
    r: &ReducedState,
    u2_target: f64,
    cfg: &IntegratorConfig,
) -> Result<(ReducedState, Complex64)> {
    ensure_u2(r.u2)?;
    if u2_target <= 0.0 || !u2_target.is_finite() {
        return Err(Error::CrossesOrigin(u2_target));
    }
    let rhs = |u2: f64, y: &[Complex64; 3]| {
        let rr = ReducedState { u2, p: y[0], q: y[1] };
        let (dp, dq) = reduced_flow_field(&rr).expect("u2 stays positive along the flow");
        let h0 = reduced_hamiltonian(&rr).expect("u2 stays positive along the flow");
        [dp, dq, h0]
    };
    let y0 = [r.p, r.q, Complex64::new(0.0, 0.0)];
    let use_subst = cfg.sqrt_substitution && r.u2.min(u2_target) < SQRT_SUBST_THRESHOLD;
    let (y, _) = if use_subst {
        integrate(
            |sv, y| {
                let mut dy = rhs(sv * sv, y);
                for c in dy.iter_mut() {
                    *c *= 2.0 * sv;
                }
                dy
            },
            r.u2.sqrt(),
            u2_target.sqrt(),
            y0,
            cfg,
            |_, _| {},
        )?
    } else {
        integrate(rhs, r.u2, u2_target, y0, cfg, |_, _| {})?
    };
    Ok((ReducedState { u2: u2_target, p: y[0], q: y[1] }, y[2]))
}

/// Seed point used by [`reach`]; well inside the seeding window so that the
/// truncation error of the series is below the integrator tolerances.
pub const REACH_SEED_U2: f64 = 1e-6;

/// State at (u1, u2) on the physical branch: seed at u1 = 0 and small u2,
/// flow u2 up first, then u1.
pub fn reach(u1: f64, u2: f64, cfg: &IntegratorConfig) -> Result<CanonicalState> {
    ensure_u2(u2)?;
    let u2_seed = REACH_SEED_U2.min(u2);
    let seed = seed_u1zero_with_window(u2_seed, SEED_WINDOW)?;
    let at_u2 = flow_u2(&seed.state, u2, cfg)?.terminal;
    if u1 == 0.0 {
        return Ok(at_u2);
    }
    Ok(flow_u1(&at_u2, u1, cfg)?.terminal)
}

/// Max coordinate distance between the two orders of composing the flows
/// from the constraint point at (0, u2a) to (u1, u2b).
pub fn commutativity_defect(
    u1: f64,
    u2a: f64,
    u2b: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    if !(0.0 < u2a && u2a < u2b) {
        return Err(Error::InvalidConfig(format!(
            "commutativity defect needs 0 < u2a < u2b, got ({u2a}, {u2b})"
        )));
    }
    let base = reach(0.0, u2a, cfg)?;
    let path_a = flow_u2(&flow_u1(&base, u1, cfg)?.terminal, u2b, cfg)?.terminal;
    let path_b = flow_u1(&flow_u2(&base, u2b, cfg)?.terminal, u1, cfg)?.terminal;
    let d = [
        (path_a.p1 - path_b.p1).norm(),
        (path_a.q1 - path_b.q1).norm(),
        (path_a.p2 - path_b.p2).norm(),
        (path_a.q2 - path_b.q2).norm(),
    ];
    Ok(d.into_iter().fold(0.0, f64::max))
}

impl Trajectory {
    /// CSV with the flow parameter, coordinates, Hamiltonian values, and
    /// constraint residual magnitudes per retained sample.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        use crate::report::fmt_f64 as f;
        writeln!(
            w,
            "parameter,p1_re,p1_im,q1_re,q1_im,p2_re,p2_im,q2_re,q2_im,\
             h1_re,h1_im,h2_re,h2_im,constraint_p2_abs,constraint_q2_abs"
        )?;
        for (t, s) in &self.samples {
            let h1 = hamiltonian(s, FlowVar::U1).unwrap_or_default();
            let h2 = hamiltonian(s, FlowVar::U2).unwrap_or_default();
            let (r1, r2) = s.constraint_residual().unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                f(*t),
                f(s.p1.re),
                f(s.p1.im),
                f(s.q1.re),
                f(s.q1.im),
                f(s.p2.re),
                f(s.p2.im),
                f(s.q2.re),
                f(s.q2.im),
                f(h1.re),
                f(h1.im),
                f(h2.re),
                f(h2.im),
                f(r1.norm()),
                f(r2.norm()),
            )?;
        }
        Ok(())
    }
}

impl ReducedTrajectory {
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        use crate::report::fmt_f64 as f;
        writeln!(w, "parameter,p_re,p_im,q_re,q_im,h0_re,h0_im")?;
        for (t, r) in &self.samples {
            let h0 = reduced_hamiltonian(r).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                f(*t),
                f(r.p.re),
                f(r.p.im),
                f(r.q.re),
                f(r.q.im),
                f(h0.re),
                f(h0.im),
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::reduced_gradient;
    use crate::seed::{seed_general, seed_u1zero};
    use crate::state::CONSTRAINT_TOL;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn state_distance(a: &CanonicalState, b: &CanonicalState) -> f64 {
        [
            (a.p1 - b.p1).norm(),
            (a.q1 - b.q1).norm(),
            (a.p2 - b.p2).norm(),
            (a.q2 - b.q2).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    #[test]
    fn zero_length_flows_are_identity() {
        let cfg = IntegratorConfig::default();
        let s = seed_u1zero(1e-4).unwrap().state;
        let t1 = flow_u2(&s, s.u2, &cfg).unwrap();
        assert_eq!(state_distance(&t1.terminal, &s), 0.0);
        let t2 = flow_u1(&s, 0.0, &cfg).unwrap();
        assert_eq!(state_distance(&t2.terminal, &s), 0.0);
    }

    #[test]
    fn flow_u2_rejects_nonpositive_target() {
        let cfg = IntegratorConfig::default();
        let s = seed_u1zero(1e-4).unwrap().state;
        assert!(matches!(flow_u2(&s, -0.5, &cfg), Err(Error::CrossesOrigin(_))));
        assert!(matches!(flow_u2(&s, 0.0, &cfg), Err(Error::CrossesOrigin(_))));
    }

    #[test]
    fn reduced_field_two_codings_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..100 {
            let r = ReducedState::new(
                rng.gen_range(0.1..5.0),
                c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            )
            .unwrap();
            let (dp, dq) = reduced_flow_field(&r).unwrap();
            let (gp, gq) = reduced_gradient(&r).unwrap();
            // Hamilton's equations: dP = -dT/dQ, dQ = +dT/dP
            assert!((dp + gq).norm() < 1e-12 * (1.0 + gq.norm()), "dP mismatch");
            assert!((dq - gp).norm() < 1e-12 * (1.0 + gp.norm()), "dQ mismatch");
        }
    }

    #[test]
    fn u2_flow_round_trip() {
        // coordinates grow like u2^{-1/2} at the seed, so reversibility is
        // measured per coordinate relative to its magnitude
        let cfg = IntegratorConfig::default();
        let s = seed_u1zero(1e-4).unwrap().state;
        let up = flow_u2(&s, 0.5, &cfg).unwrap();
        let back = flow_u2(&up.terminal, 1e-4, &cfg).unwrap();
        let b = back.terminal;
        let d = [
            (b.p1 - s.p1).norm() / s.p1.norm().max(1.0),
            (b.q1 - s.q1).norm() / s.q1.norm().max(1.0),
            (b.p2 - s.p2).norm(),
            (b.q2 - s.q2).norm() / s.q2.norm().max(1.0),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        assert!(d < 1e-7, "round trip drift {d:.3e}");
    }

    #[test]
    fn reduced_flow_round_trip() {
        let cfg = IntegratorConfig::default();
        let r = crate::seed::seed_reduced(1e-4).unwrap();
        let up = flow_reduced(&r, 0.5, &cfg).unwrap();
        let back = flow_reduced(&up.terminal, 1e-4, &cfg).unwrap();
        let d = (back.terminal.p - r.p).norm().max((back.terminal.q - r.q).norm());
        assert!(d < 1e-7, "round trip drift {d:.3e}");
    }

    #[test]
    fn constraint_is_invariant_along_u1_zero_flow() {
        let cfg = IntegratorConfig::default();
        // start exactly on the constraint manifold
        let s = crate::seed::seed_reduced(1e-4).unwrap().lift();
        let traj = flow_u2(&s, 2.0, &cfg).unwrap();
        for (_, sample) in traj.samples.iter().step_by(50).chain([&traj.samples[traj.samples.len() - 1]]) {
            let (r1, r2) = sample.constraint_residual().unwrap();
            assert!(r1.norm() < 1e-8, "P2 drift {:.3e}", r1.norm());
            assert!(r2.norm() < 1e-8, "Q2 drift {:.3e}", r2.norm());
        }
    }

    #[test]
    fn reduced_flow_matches_full_flow_on_constraint() {
        let cfg = IntegratorConfig::default();
        let r0 = crate::seed::seed_reduced(1e-4).unwrap();
        let seed = r0.lift();
        for target in [0.05, 0.5, 4.0] {
            let full = flow_u2(&seed, target, &cfg).unwrap().terminal;
            let red = flow_reduced(&r0, target, &cfg).unwrap().terminal;
            let via_full = full.reduce(CONSTRAINT_TOL).unwrap();
            let d = (via_full.p - red.p).norm().max((via_full.q - red.q).norm());
            assert!(d < 1e-8, "reduced/full mismatch {d:.3e} at u2={target}");
        }
    }

    #[test]
    fn u1_flow_parity_of_h1() {
        let cfg = IntegratorConfig::default();
        let base = reach(0.0, 0.5, &cfg).unwrap();
        let plus = flow_u1(&base, 0.4, &cfg).unwrap().terminal;
        let minus = flow_u1(&base, -0.4, &cfg).unwrap().terminal;
        let h_plus = hamiltonian(&plus, FlowVar::U1).unwrap();
        let h_minus = hamiltonian(&minus, FlowVar::U1).unwrap();
        assert!(
            (h_plus + h_minus).norm() < 1e-9,
            "H1 parity violated: {h_plus} vs {h_minus}"
        );
    }

    #[test]
    fn reality_of_hamiltonians_on_physical_branch() {
        let cfg = IntegratorConfig::default();
        let s = reach(0.4, 0.5, &cfg).unwrap();
        let h1 = hamiltonian(&s, FlowVar::U1).unwrap();
        let h2 = hamiltonian(&s, FlowVar::U2).unwrap();
        assert!(h1.im.abs() < 1e-8, "Im H1 = {:.3e}", h1.im);
        assert!(h2.im.abs() < 1e-8, "Im H2 = {:.3e}", h2.im);
    }

    #[test]
    fn two_seed_flow_stability() {
        let cfg = IntegratorConfig::default();
        let a = flow_u2(&seed_u1zero(1e-5).unwrap().state, 1e-2, &cfg).unwrap().terminal;
        let b = flow_u2(&seed_u1zero(1e-4).unwrap().state, 1e-2, &cfg).unwrap().terminal;
        let num = state_distance(&a, &b);
        let scale = a.p1.norm().max(a.q1.norm()).max(a.q2.norm());
        assert!(num / scale <= 1e-3, "two-seed relative drift {:.3e}", num / scale);
    }

    #[test]
    fn commutativity_defect_small_and_tolerance_scaled() {
        let tight = IntegratorConfig::default();
        let defect = commutativity_defect(0.4, 0.1, 0.5, &tight).unwrap();
        assert!(defect < 1e-6, "defect {defect:.3e}");
        let loose = IntegratorConfig { rel_tol: 1e-6, abs_tol: 1e-8, ..tight };
        let defect_loose = commutativity_defect(0.4, 0.1, 0.5, &loose).unwrap();
        assert!(
            defect <= defect_loose,
            "defect did not shrink with tolerance: tight {defect:.3e} loose {defect_loose:.3e}"
        );
    }

    #[test]
    fn commutativity_defect_vanishes_at_u1_zero() {
        let cfg = IntegratorConfig::default();
        let defect = commutativity_defect(0.0, 0.1, 0.5, &cfg).unwrap();
        assert!(defect < 1e-9, "defect {defect:.3e}");
    }

    #[test]
    fn general_seed_matches_u1_flow() {
        // the phi1 and varphi readings are fixed by this cross-check
        let cfg = IntegratorConfig::default();
        let u2 = 1e-4;
        let ut1 = 0.5;
        let base = seed_u1zero(u2).unwrap().state;
        let flowed = flow_u1(&base, ut1 * u2.sqrt(), &cfg).unwrap().terminal;
        let series = seed_general(ut1, u2).unwrap().state;
        assert!((series.p1 - flowed.p1).norm() < 1e-8, "P1 defect {:.3e}", (series.p1 - flowed.p1).norm());
        assert!((series.q1 - flowed.q1).norm() < 5e-5, "Q1 defect {:.3e}", (series.q1 - flowed.q1).norm());
        assert!((series.p2 - flowed.p2).norm() < 1e-10, "P2 defect {:.3e}", (series.p2 - flowed.p2).norm());
        assert!((series.q2 - flowed.q2).norm() < 5e-5, "Q2 defect {:.3e}", (series.q2 - flowed.q2).norm());
    }

    #[test]
    fn trajectory_sampling_is_monotone_and_bounded() {
        let cfg = IntegratorConfig::default();
        let s = seed_u1zero(1e-5).unwrap().state;
        let traj = flow_u2(&s, 3.0, &cfg).unwrap();
        assert!(traj.samples.len() <= MAX_SAMPLES + 1);
        assert!(traj.samples.windows(2).all(|w| w[0].0 < w[1].0), "samples not monotone");
        assert_eq!(traj.samples.last().unwrap().0, 3.0);
        for (_, st) in &traj.samples {
            assert!(st.u2 > 0.0);
        }
    }

    #[test]
    fn csv_export_has_fixed_header_and_rows() {
        let cfg = IntegratorConfig::default();
        let s = seed_u1zero(1e-4).unwrap().state;
        let traj = flow_u2(&s, 0.01, &cfg).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("parameter,p1_re,p1_im"));
        assert_eq!(lines.count(), traj.samples.len());
    }
}
