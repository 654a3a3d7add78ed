//! The walk's determinantal kernel
//!
//!   K(t1,x1; t2,x2) = 1[x1>=x2] 1[t1>t2] (-1)^(x1-x2+1) binom(t1-t2, x1-x2)
//!     + t1!/(t2-1)! (2 pi i)^-2
//!       int_{Re z = x2-t2+1/2} dz  oint_{w poles} dw
//!       (z-x2+1)_{t2-1} / (w-x1)_{t1+1} * 1/(w-z)
//!       * sin(pi w)/sin(pi z) * ((1-beta)/beta)^{w-z} prod_i (z-d_i)/(w-d_i),
//!
//! where the w contour encircles the poles {x1-t1, ..., x1} n {d_i}.
//!
//! Evaluation strategy. Combining the Pochhammer factors with the sine
//! terms through the reflection formula cancels the sines identically:
//!
//!   z side:  (z-x2+1)_{t2-1} / sin(pi z) = (-1)^(x2+1) G(u) G(t2-u) / pi,
//!            u = z - x2 + t2,
//!   w side:  sin(pi w) / (w-x1)_{t1+1} = (-1)^(x1) pi / (G(v+1) G(t1+1-v)),
//!            v = w - x1 + t1,
//!
//! leaving gamma factors that are stable on the contours. The z integrand
//! is then analytic in the whole strip x2-t2 < Re z < x2 (the Pochhammer
//! zeros cancel every sine pole there, and the residues of the 1/(w-z)
//! coupling at real w vanish for the same reason), so the line may be
//! placed anywhere in the strip; for large systems it runs through the
//! saddle inside the particle gap.
//!
//! The w integral has two modes:
//! * residue sum over the finite pole set (exact, used for small systems);
//! * quadrature along steepest-descent loops of the w exponent (the
//!   residue sum hides exponentially large cancellations once the pole
//!   blocks carry hundreds of nats, the loops do not).

use super::{KernelError, KernelValue};
use crate::nbrw::{log_binomial, ParticleConfig};
use crate::numeric::{digamma_complex, ln_gamma_complex, ln_gamma_real, LogSumAcc};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WIntegralMode {
    Auto,
    Residues,
    Descent,
}

#[derive(Clone, Copy, Debug)]
pub struct BernoulliKernelOpts {
    /// real part of the z line, in lattice units; defaults to x2 - t2 + 1/2
    pub z_line: Option<f64>,
    pub mode: WIntegralMode,
    pub rel_tol: f64,
}

impl Default for BernoulliKernelOpts {
    fn default() -> Self {
        BernoulliKernelOpts { z_line: None, mode: WIntegralMode::Auto, rel_tol: 1e-8 }
    }
}

/// Scaled complex value: exp(log) * phase.
#[derive(Clone, Copy, Debug)]
struct ScaledC {
    log: f64,
    phase: Complex64,
}

impl ScaledC {
    const ZERO: ScaledC = ScaledC { log: f64::NEG_INFINITY, phase: Complex64 { re: 0.0, im: 0.0 } };

    fn to_f64(self) -> f64 {
        if self.log == f64::NEG_INFINITY {
            0.0
        } else {
            (self.phase * self.log.exp()).re
        }
    }
}

struct Ctx<'a> {
    t1: i64,
    x1: i64,
    t2: i64,
    x2: i64,
    d: &'a [i64],
    ln_theta: f64,
}

impl Ctx<'_> {
    /// Complex log of the z-side integrand (times the sign (-1)^(x2+1)
    /// handled by the caller):
    /// log[G(u) G(t2-u)/pi] + z ln(theta) + sum_i Log(z - d_i).
    fn phi_log(&self, z: Complex64) -> Complex64 {
        let u = z - Complex64::new((self.x2 - self.t2) as f64, 0.0);
        let mut acc = ln_gamma_complex(u) + ln_gamma_complex(Complex64::new(self.t2 as f64, 0.0) - u)
            - Complex64::new(PI.ln(), 0.0)
            + z * self.ln_theta;
        for &di in self.d {
            acc += (z - Complex64::new(di as f64, 0.0)).ln();
        }
        acc
    }

    /// Complex log of the w-side integrand (times (-1)^(x1)):
    /// log[pi / (G(v+1) G(t1+1-v))] - w ln(theta) - sum_i Log(w - d_i).
    fn w_log(&self, w: Complex64) -> Complex64 {
        let v = w - Complex64::new((self.x1 - self.t1) as f64, 0.0);
        let mut acc = Complex64::new(PI.ln(), 0.0)
            - ln_gamma_complex(v + Complex64::new(1.0, 0.0))
            - ln_gamma_complex(Complex64::new((self.t1 + 1) as f64, 0.0) - v)
            - w * self.ln_theta;
        for &di in self.d {
            acc -= (w - Complex64::new(di as f64, 0.0)).ln();
        }
        acc
    }

    /// d/dw of `w_log`.
    fn w_log_deriv(&self, w: Complex64) -> Complex64 {
        let v = w - Complex64::new((self.x1 - self.t1) as f64, 0.0);
        let mut acc = -digamma_complex(v + Complex64::new(1.0, 0.0))
            + digamma_complex(Complex64::new((self.t1 + 1) as f64, 0.0) - v)
            - Complex64::new(self.ln_theta, 0.0);
        for &di in self.d {
            acc -= 1.0 / (w - Complex64::new(di as f64, 0.0));
        }
        acc
    }
}

/// Residue data at a real pole w0: log-magnitude and sign of
/// pi * theta^(-w0) / ((x1-w0)! (t1-x1+w0)! prod_{d_i != w0} (w0 - d_i)).
fn residue_log(ctx: &Ctx, w0: i64) -> (f64, f64) {
    let mut log = PI.ln() - w0 as f64 * ctx.ln_theta
        - ln_gamma_real((ctx.x1 - w0) as f64 + 1.0)
        - ln_gamma_real((ctx.t1 - ctx.x1 + w0) as f64 + 1.0);
    let mut sign = 1.0f64;
    for &di in ctx.d {
        if di == w0 {
            continue;
        }
        let f = (w0 - di) as f64;
        log -= f.abs().ln();
        if f < 0.0 {
            sign = -sign;
        }
    }
    (log, sign)
}

/// The pole set {x1-t1, ..., x1} n {d_i}.
fn pole_set(t1: i64, x1: i64, d: &[i64]) -> Vec<i64> {
    d.iter().copied().filter(|&di| di >= x1 - t1 && di <= x1).collect()
}

/// The kernel, ungauged.
pub fn kernel_bernoulli(
    p1: super::SpaceTimePoint,
    p2: super::SpaceTimePoint,
    d: &ParticleConfig,
    beta: f64,
    opts: &BernoulliKernelOpts,
) -> Result<KernelValue, KernelError> {
    let (value, err, diag) = kernel_scaled(p1, p2, d, beta, opts, 0.0, 1.0)?;
    Ok(KernelValue {
        value: value.to_f64(),
        abs_error_estimate: err,
        pole_count: diag.0,
        nodes: diag.1,
        peak_log: diag.2,
    })
}

/// The kernel multiplied by the conjugation gauge
/// (-1)^(x1-x2) B^(x1-x2) (1-B)^(t1-t2+x2-x1).
pub fn kernel_bernoulli_gauged(
    p1: super::SpaceTimePoint,
    p2: super::SpaceTimePoint,
    d: &ParticleConfig,
    beta: f64,
    b_cap: f64,
    opts: &BernoulliKernelOpts,
) -> Result<KernelValue, KernelError> {
    let dx = (p1.x - p2.x) as f64;
    let dtx = (p1.t - p2.t - p1.x + p2.x) as f64;
    let gauge_log = dx * b_cap.ln() + dtx * (1.0 - b_cap).ln();
    let gauge_sign = if (p1.x - p2.x).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let (value, err, diag) = kernel_scaled(p1, p2, d, beta, opts, gauge_log, gauge_sign)?;
    Ok(KernelValue {
        value: value.to_f64(),
        abs_error_estimate: err * gauge_log.exp(),
        pole_count: diag.0,
        nodes: diag.1,
        peak_log: diag.2,
    })
}

fn kernel_scaled(
    p1: super::SpaceTimePoint,
    p2: super::SpaceTimePoint,
    d: &ParticleConfig,
    beta: f64,
    opts: &BernoulliKernelOpts,
    gauge_log: f64,
    gauge_sign: f64,
) -> Result<(ScaledC, f64, (usize, usize, f64)), KernelError> {
    if p1.t < 1 || p2.t < 1 {
        return Err(KernelError::BadTime(p1.t.min(p2.t)));
    }
    let (t1, x1, t2, x2) = (p1.t, p1.x, p2.t, p2.x);
    let ctx = Ctx { t1, x1, t2, x2, d: &d.positions, ln_theta: (beta / (1.0 - beta)).ln() };

    // binomial term
    let mut binom = ScaledC::ZERO;
    if t1 > t2 && x1 >= x2 && x1 - x2 <= t1 - t2 {
        let sign = if (x1 - x2 + 1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        binom = ScaledC {
            log: log_binomial(t1 - t2, x1 - x2) + gauge_log,
            phase: Complex64::new(sign * gauge_sign, 0.0),
        };
    }

    let poles = pole_set(t1, x1, &d.positions);
    if poles.is_empty() {
        return Ok((binom, 0.0, (0, 0, binom.log)));
    }

    let use_descent = match opts.mode {
        WIntegralMode::Residues => false,
        WIntegralMode::Descent => true,
        WIntegralMode::Auto => {
            // residues cancel by roughly the pole blocks' log-envelope
            // spread; switch when that exceeds what f64 can absorb
            let spread = residue_spread(&ctx, &poles);
            spread > 18.0
        }
    };

    // prefactor log: t1!/(t2-1)!, the gauge, and the (2 pi)^-! pieces
    let pref_log = ln_gamma_real(t1 as f64 + 1.0) - ln_gamma_real(t2 as f64) + gauge_log;

    let (integral, err, nodes, peak) = if use_descent {
        descent_integral(&ctx, &poles, beta, opts, pref_log)?
    } else {
        residue_integral(&ctx, &poles, opts, pref_log)?
    };

    // combine binom + gauge_sign * s1 * s2 * integral
    let s12 = if (x1 + x2 + 1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let total_phase = gauge_sign * s12;
    let sum = add_scaled(
        binom,
        ScaledC { log: integral.log, phase: integral.phase * total_phase },
    );
    Ok((sum, err, (poles.len(), nodes, peak)))
}

fn add_scaled(a: ScaledC, b: ScaledC) -> ScaledC {
    if a.log == f64::NEG_INFINITY {
        return b;
    }
    if b.log == f64::NEG_INFINITY {
        return a;
    }
    let m = a.log.max(b.log);
    let v = a.phase * (a.log - m).exp() + b.phase * (b.log - m).exp();
    ScaledC { log: m, phase: v }
}

/// Log-envelope spread of the residues: max over poles of the w-exponent
/// minus its value at the saddle-ish gap point. Estimates how many nats of
/// cancellation the residue sum hides.
fn residue_spread(ctx: &Ctx, poles: &[i64]) -> f64 {
    let mut max_res = f64::NEG_INFINITY;
    for &w0 in poles {
        let (l, _) = residue_log(ctx, w0);
        max_res = max_res.max(l);
    }
    // reference: the w-part at a point in the biggest d-gap within the window
    let gap_mid = biggest_gap_mid(ctx.d).unwrap_or((ctx.x1 - ctx.t1 + ctx.x1) as f64 / 2.0);
    let w_ref = ctx.w_log(Complex64::new(gap_mid, 0.0)).re;
    max_res - w_ref
}

fn gap_bounds(d: &[i64], mid: f64) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &di in d {
        let v = di as f64;
        if v < mid {
            lo = lo.max(v);
        } else {
            hi = hi.min(v);
        }
    }
    (lo, hi)
}

fn biggest_gap_mid(d: &[i64]) -> Option<f64> {
    let mut best: Option<(i64, f64)> = None;
    for w in d.windows(2) {
        let gap = w[1] - w[0];
        if best.map(|(g, _)| gap > g).unwrap_or(true) {
            best = Some((gap, 0.5 * (w[0] + w[1]) as f64));
        }
    }
    best.map(|(_, m)| m)
}

/// z-line position: prescribed, or the default x2 - t2 + 1/2, nudged off
/// integers; clamped into the strip.
fn z_line_position(ctx: &Ctx, opts: &BernoulliKernelOpts) -> f64 {
    let lo = (ctx.x2 - ctx.t2) as f64;
    let hi = ctx.x2 as f64;
    let mut zl = opts.z_line.unwrap_or(lo + 0.5);
    zl = zl.clamp(lo + 0.25, hi - 0.25);
    if (zl - zl.round()).abs() < 0.05 {
        zl = zl.round() + 0.5;
    }
    zl
}

/// w integral as an exact residue sum; z integral by refining trapezoid
/// sums on the vertical line.
fn residue_integral(
    ctx: &Ctx,
    poles: &[i64],
    opts: &BernoulliKernelOpts,
    pref_log: f64,
) -> Result<(ScaledC, f64, usize, f64), KernelError> {
    let res: Vec<(f64, f64, f64)> = poles
        .iter()
        .map(|&w0| {
            let (l, s) = residue_log(ctx, w0);
            (w0 as f64, l, s)
        })
        .collect();
    let res_max = res.iter().fold(f64::NEG_INFINITY, |a, r| a.max(r.1));
    let zl = z_line_position(ctx, opts);

    // node value: e^{phi_log(z)} * sum_poles e^{res}/(w0 - z)
    let node_val = |y: f64| -> ScaledC {
        let z = Complex64::new(zl, y);
        let phi = ctx.phi_log(z);
        let mut inner = Complex64::new(0.0, 0.0);
        for &(w0, l, s) in &res {
            inner += Complex64::new(s * (l - res_max).exp(), 0.0) / (Complex64::new(w0, 0.0) - z);
        }
        ScaledC { log: phi.re + res_max, phase: Complex64::from_polar(1.0, phi.im) * inner }
    };
    let (v, err, nodes, peak) = z_line_quadrature(node_val, pref_log, opts.rel_tol)?;
    Ok((v, err, nodes, peak))
}

/// Adaptive trapezoid on the upper half line (y >= 0), doubled via the
/// conjugate symmetry: (1/2 pi) int dy f = (1/pi) Re int_{y>=0} dy f with
/// half weight at y = 0.
fn z_line_quadrature(
    node_val: impl Fn(f64) -> ScaledC,
    pref_log: f64,
    rel_tol: f64,
) -> Result<(ScaledC, f64, usize, f64), KernelError> {
    // locate the peak scale and reach along y
    let probe = |y: f64| node_val(y).log;
    let base = probe(0.0);
    let mut y_max = 1.0;
    let mut peak = base;
    while y_max < 2e6 {
        let l = probe(y_max);
        peak = peak.max(l);
        if l < peak - 45.0 {
            break;
        }
        y_max *= 1.3;
    }
    if y_max >= 2e6 {
        return Err(KernelError::QuadratureNonConvergence(f64::INFINITY));
    }
    let mut h = (y_max / 64.0).min(0.5);
    let mut prev: Option<ScaledC> = None;
    #[allow(unused_assignments)]
    let mut nodes_used = 0usize;
    #[allow(unused_assignments)]
    let mut peak_log = f64::NEG_INFINITY;
    for _ in 0..14 {
        let mut acc = LogSumAcc::new();
        let mut y = 0.0;
        let mut below = 0;
        let mut local_peak = f64::NEG_INFINITY;
        let mut count = 0usize;
        while below < 3 {
            let v = node_val(y);
            let wt: f64 = if y == 0.0 { 0.5 } else { 1.0 };
            acc.add(v.log + h.ln() + wt.ln(), v.phase);
            local_peak = local_peak.max(v.log);
            if v.log < local_peak - 45.0 {
                below += 1;
            } else {
                below = 0;
            }
            y += h;
            count += 1;
            if count > (1 << 20) {
                return Err(KernelError::QuadratureNonConvergence(f64::NAN));
            }
            if std::env::var("KDBG").is_ok() && count % 100_000 == 0 {
                eprintln!("z-quad: y = {y}, h = {h}, count = {count}, log = {}", v.log);
            }
        }
        nodes_used = count;
        peak_log = local_peak + pref_log;
        let (log_scale, s) = acc.value_scaled();
        // (1/pi) * 2 * Re of the upper-half sum
        let cur = ScaledC {
            log: log_scale + pref_log - PI.ln(),
            phase: Complex64::new(s.re, 0.0),
        };
        if let Some(p) = prev {
            let denom = cur.log.max(p.log);
            let change = (cur.phase * (cur.log - denom).exp() - p.phase * (p.log - denom).exp()).norm()
                / cur.phase.norm().max(1e-300);
            if std::env::var("KDBG").is_ok() {
                eprintln!("refine h={h}: log={} phase={} change={change}", cur.log, cur.phase);
            }
            if change < rel_tol {
                return Ok((cur, change * cur.phase.norm() * cur.log.exp().min(f64::MAX), nodes_used, peak_log));
            }
        }
        prev = Some(cur);
        h *= 0.5;
    }
    let cur = prev.unwrap();
    Err(KernelError::QuadratureNonConvergence(cur.log))
}

/// w integral along steepest-descent loops, z integral on the saddle line
/// through the particle gap.
fn descent_integral(
    ctx: &Ctx,
    poles: &[i64],
    beta: f64,
    opts: &BernoulliKernelOpts,
    pref_log: f64,
) -> Result<(ScaledC, f64, usize, f64), KernelError> {
    let _ = beta;
    // saddle: the maximum of the w-exponent on the real gap; the z-line
    // runs through it as well unless prescribed
    let gap_mid = biggest_gap_mid(ctx.d).ok_or_else(|| {
        KernelError::PathTracing("no interior gap for the saddle line".into())
    })?;
    let (gap_lo, gap_hi) = gap_bounds(ctx.d, gap_mid);
    let scan = |f: &dyn Fn(f64) -> f64, maximize: bool| -> f64 {
        let m = 400;
        let mut best = (if maximize { f64::NEG_INFINITY } else { f64::INFINITY }, gap_mid);
        for k in 1..m {
            let x = gap_lo + 0.5 + (gap_hi - gap_lo - 1.0) * k as f64 / m as f64;
            let v = f(x);
            if (maximize && v > best.0) || (!maximize && v < best.0) {
                best = (v, x);
            }
        }
        best.1
    };
    // the w loops cross the axis at the mountain pass of the w exponent;
    // the z line passes through the real maximum of the z exponent
    let saddle = scan(&|x| ctx.w_log(Complex64::new(x, 0.0)).re, false);
    let zl = match opts.z_line {
        Some(v) => v,
        None => scan(&|x| ctx.phi_log(Complex64::new(x, 0.0)).re, true),
    };
    let zl = {
        let mut v = zl;
        if (v - v.round()).abs() < 0.05 {
            v = v.round() + 0.5;
        }
        v
    };
    let p_left: Vec<i64> = poles.iter().copied().filter(|&p| (p as f64) < zl).collect();
    let p_right: Vec<i64> = poles.iter().copied().filter(|&p| (p as f64) > zl).collect();

    let mut w_nodes: Vec<(Complex64, Complex64)> = Vec::new();
    if !p_left.is_empty() {
        let seed = Complex64::new(saddle, 0.0);
        let beyond = *p_left.iter().min().unwrap() as f64 - 1.5;
        // left loop traversed outward on top (counterclockwise); the trace
        // must stay in the left half relative to the saddle
        let trace = trace_descent(ctx, seed, 3.0 * PI / 4.0, |w| w.re < beyond, saddle + 2.0, false, 1.0)?;
        w_nodes.extend(trace);
    }
    if !p_right.is_empty() {
        let seed = Complex64::new(saddle, 0.0);
        let beyond = *p_right.iter().max().unwrap() as f64 + 1.5;
        // right loop runs inward on top: negate the traced orientation
        let trace = trace_descent(ctx, seed, PI / 4.0, |w| w.re > beyond, saddle - 2.0, true, -1.0)?;
        w_nodes.extend(trace);
    }
    // w-side scaled values
    let w_vals: Vec<(Complex64, Complex64, f64)> = w_nodes
        .iter()
        .map(|&(w, wt)| {
            let l = ctx.w_log(w);
            (w, wt * Complex64::from_polar(1.0, l.im), l.re)
        })
        .collect();
    let w_peak = w_vals.iter().fold(f64::NEG_INFINITY, |a, v| a.max(v.2));
    if std::env::var("KDBG").is_ok() {
        let bad = w_vals.iter().filter(|v| !v.1.is_finite() || !(v.2 == v.2)).count();
        eprintln!("descent: {} w nodes, peak {w_peak}, {} non-finite", w_vals.len(), bad);
    }

    let node_val = |y: f64| -> ScaledC {
        let z = Complex64::new(zl, y);
        let phi = ctx.phi_log(z);
        let mut inner = Complex64::new(0.0, 0.0);
        for &(w, wphase, wlog) in &w_vals {
            inner += wphase * (wlog - w_peak).exp() / (w - z);
        }
        // both w half-loops are upper-half; the conjugate halves are
        // accounted by taking 2 Re over z in the caller, which pairs each
        // (z, w) with (conj z, conj w)
        ScaledC {
            log: phi.re + w_peak,
            phase: Complex64::from_polar(1.0, phi.im) * inner,
        }
    };
    // the (2 pi i)^-2 dz dw with dz = i dy leaves (1/(2 pi i)) * (1/(2 pi)) *
    // ... ; relative to the residue normalization (1/pi stays in
    // z_line_quadrature) the loop integral carries an extra 1/(2 pi i)
    let (v, err, nodes, peak) = z_line_quadrature(node_val, pref_log, opts.rel_tol)?;
    let v = ScaledC { log: v.log - (2.0 * PI).ln(), phase: v.phase * Complex64::new(0.0, -1.0) };
    Ok((v, err / (2.0 * PI), nodes + w_vals.len(), peak))
}

/// Traces the steepest-descent path of Re(w_log) from `seed + delta e^{i
/// angle}` until `stop` holds and the exponent has dropped 50 nats, then
/// closes to the real axis. Returns trapezoid nodes (w, dw * orient).
#[allow(clippy::too_many_arguments)]
fn trace_descent(
    ctx: &Ctx,
    seed: Complex64,
    angle: f64,
    stop: impl Fn(Complex64) -> bool,
    re_guard: f64,
    guard_is_lower: bool,
    orient: f64,
) -> Result<Vec<(Complex64, Complex64)>, KernelError> {
    let mut pts = vec![seed];
    let mut w = seed + Complex64::from_polar(0.35, angle);
    pts.push(w);
    let peak = ctx.w_log(seed).re;
    let mut steps = 0usize;
    loop {
        steps += 1;
        if steps > 40_000 {
            return Err(KernelError::PathTracing(format!(
                "no landing after {steps} steps (at {w})"
            )));
        }
        let g = ctx.w_log_deriv(w);
        let gn = g.norm();
        if gn < 1e-14 {
            return Err(KernelError::PathTracing("stalled at a critical point".into()));
        }
        // descent direction of Re(w_log)
        let dir = -g.conj() / gn;
        // step: bounded by distance to the real axis and a nat target
        let nat_step = 1.5 / gn;
        let h = nat_step.min(0.4 * w.im.abs().max(0.2)).min(4.0);
        let mut w_next = w + dir * h;
        // keep off the real axis until the landing zone
        if w_next.im < 0.05 && !stop(w_next) {
            w_next = Complex64::new(w_next.re, 0.05);
        }
        // a trace leaving its half-plane has lost the saddle geometry
        let escaped = if guard_is_lower { w_next.re < re_guard } else { w_next.re > re_guard };
        if escaped {
            return Err(KernelError::PathTracing(format!(
                "descent path left its half-plane at {w_next}"
            )));
        }
        if (w_next - w).norm() < 1e-9 {
            return Err(KernelError::PathTracing(format!("descent path stalled at {w}")));
        }
        pts.push(w_next);
        w = w_next;
        let drop = ctx.w_log(w).re - peak;
        if stop(w) && drop < -50.0 {
            break;
        }
        if drop < -500.0 {
            break;
        }
    }
    // close down to the real axis
    pts.push(Complex64::new(w.re, 0.0));
    // trapezoid weights from consecutive midpoints
    let mut out = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let prev = if i == 0 { pts[0] } else { pts[i - 1] };
        let next = if i + 1 == pts.len() { pts[i] } else { pts[i + 1] };
        let dw = (next - prev) * 0.5 * orient;
        out.push((pts[i], dw));
    }
    Ok(out)
}

/// Debug hook: the w-side complex log at a point.
pub fn kernels_debug_w_log(
    t1: i64,
    x1: i64,
    t2: i64,
    x2: i64,
    d: &[i64],
    beta: f64,
    w: Complex64,
) -> Complex64 {
    let ctx = Ctx { t1, x1, t2, x2, d, ln_theta: (beta / (1.0 - beta)).ln() };
    ctx.w_log(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::SpaceTimePoint;

    fn cfg(p: &[i64]) -> ParticleConfig {
        ParticleConfig::new(0, p.to_vec()).unwrap()
    }

    /// Direct (unreduced) z-side integrand: Poch * theta^z / sin(pi z) *
    /// prod (z - d_i), for validating the gamma-form reduction.
    fn phi_direct(ctx: &Ctx, z: Complex64) -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for j in 1..ctx.t2 {
            v *= z - Complex64::new((ctx.x2 - j) as f64, 0.0);
        }
        v *= (z * ctx.ln_theta).exp();
        v /= (Complex64::new(PI, 0.0) * z).sin();
        for &di in ctx.d {
            v *= z - Complex64::new(di as f64, 0.0);
        }
        v
    }

    #[test]
    fn gamma_form_matches_direct_product() {
        let d = [0i64, 3, 5];
        let ctx = Ctx { t1: 4, x1: 5, t2: 3, x2: 4, d: &d, ln_theta: (0.4f64 / 0.6).ln() };
        for &(re, im) in &[(1.5, 0.7), (2.5, -0.3), (3.3, 2.0)] {
            let z = Complex64::new(re, im);
            let lhs = ctx.phi_log(z).exp() * if (ctx.x2 + 1) % 2 == 0 { 1.0 } else { -1.0 };
            let rhs = phi_direct(&ctx, z);
            assert!(
                (lhs - rhs).norm() < 1e-10 * rhs.norm(),
                "gamma form {lhs} vs direct {rhs} at {z}"
            );
        }
    }

    #[test]
    fn w_gamma_form_matches_direct() {
        let d = [0i64, 3, 5];
        let ctx = Ctx { t1: 4, x1: 5, t2: 3, x2: 4, d: &d, ln_theta: (0.4f64 / 0.6).ln() };
        let direct = |w: Complex64| -> Complex64 {
            let mut v = (Complex64::new(PI, 0.0) * w).sin();
            v *= (-w * ctx.ln_theta).exp();
            for j in 0..=ctx.t1 {
                v /= w - Complex64::new((ctx.x1 - ctx.t1 + j) as f64, 0.0);
            }
            for &di in ctx.d {
                v /= w - Complex64::new(di as f64, 0.0);
            }
            v
        };
        for &(re, im) in &[(2.4, 1.0), (-0.7, 0.6), (4.6, -1.2)] {
            let w = Complex64::new(re, im);
            let lhs = ctx.w_log(w).exp() * if ctx.x1 % 2 == 0 { 1.0 } else { -1.0 };
            let rhs = direct(w);
            assert!(
                (lhs - rhs).norm() < 1e-10 * rhs.norm(),
                "w gamma form {lhs} vs direct {rhs} at {w}"
            );
        }
    }

    #[test]
    fn empty_pole_set_reduces_to_binomial() {
        // d far above the window
        let d = cfg(&[50, 53]);
        let p1 = SpaceTimePoint { t: 3, x: 4 };
        let p2 = SpaceTimePoint { t: 2, x: 2 };
        let kv = kernel_bernoulli(p1, p2, &d, 0.4, &BernoulliKernelOpts::default()).unwrap();
        assert_eq!(kv.pole_count, 0);
        // binom(1, 2) = 0 here: t1-t2 = 1 < x1-x2 = 2
        assert_eq!(kv.value, 0.0);
    }

    #[test]
    fn one_point_density_matches_oracle_small() {
        let d = cfg(&[0, 3]);
        let beta = 0.4;
        for t in 1..=3i64 {
            for x in -1..=6i64 {
                let p = SpaceTimePoint { t, x };
                let kv = kernel_bernoulli(p, p, &d, beta, &BernoulliKernelOpts::default()).unwrap();
                let oracle = crate::kernels::brute_force_correlations(&d, beta, t, &[p]).unwrap();
                assert!(
                    (kv.value - oracle).abs() < 1e-8,
                    "K({t},{x};{t},{x}) = {} vs oracle {}",
                    kv.value,
                    oracle
                );
            }
        }
    }

    #[test]
    fn two_point_determinants_match_oracle() {
        let d = cfg(&[0, 3]);
        let beta = 0.4;
        let opts = BernoulliKernelOpts::default();
        let pts = [
            (SpaceTimePoint { t: 1, x: 1 }, SpaceTimePoint { t: 1, x: 3 }),
            (SpaceTimePoint { t: 2, x: 1 }, SpaceTimePoint { t: 2, x: 4 }),
            (SpaceTimePoint { t: 1, x: 0 }, SpaceTimePoint { t: 3, x: 2 }),
            (SpaceTimePoint { t: 3, x: 2 }, SpaceTimePoint { t: 1, x: 0 }),
        ];
        for (a, b) in pts {
            let kaa = kernel_bernoulli(a, a, &d, beta, &opts).unwrap().value;
            let kbb = kernel_bernoulli(b, b, &d, beta, &opts).unwrap().value;
            let kab = kernel_bernoulli(a, b, &d, beta, &opts).unwrap().value;
            let kba = kernel_bernoulli(b, a, &d, beta, &opts).unwrap().value;
            let det = kaa * kbb - kab * kba;
            let oracle = crate::kernels::brute_force_correlations(
                &d,
                beta,
                a.t.max(b.t),
                &[a, b],
            )
            .unwrap();
            assert!(
                (det - oracle).abs() < 1e-8,
                "det {} vs oracle {} at {a:?},{b:?}",
                det,
                oracle
            );
        }
    }

    #[test]
    fn z_line_position_is_free_in_the_strip() {
        // the integrand is analytic in the strip: shifting the line must not
        // change the value
        let d = cfg(&[-2, 0, 3, 4]);
        let beta = 0.55;
        let p1 = SpaceTimePoint { t: 3, x: 3 };
        let p2 = SpaceTimePoint { t: 2, x: 2 };
        let base = kernel_bernoulli(p1, p2, &d, beta, &BernoulliKernelOpts::default()).unwrap();
        for zl in [0.5, 1.5, -0.75, 1.2] {
            let opts = BernoulliKernelOpts { z_line: Some(zl), ..Default::default() };
            let kv = kernel_bernoulli(p1, p2, &d, beta, &opts).unwrap();
            assert!(
                (kv.value - base.value).abs() < 1e-9 * (1.0 + base.value.abs()),
                "line {zl}: {} vs {}",
                kv.value,
                base.value
            );
        }
    }

    #[test]
    fn descent_mode_matches_residues_medium() {
        // a medium system where both w-integral modes are accurate
        let rho = crate::slope::symmetric_two_block();
        let n = 120u64;
        let d = crate::nbrw::quantile_initial(&rho, n, 80, 80).unwrap();
        let beta = 0.5;
        // near the cusp scaling point: t ~ n t_c, x ~ n x_c
        let p1 = SpaceTimePoint { t: 120, x: 60 };
        let p2 = SpaceTimePoint { t: 120, x: 60 };
        let r = kernel_bernoulli(
            p1,
            p2,
            &d,
            beta,
            &BernoulliKernelOpts { mode: WIntegralMode::Residues, ..Default::default() },
        )
        .unwrap();
        let dsc = kernel_bernoulli(
            p1,
            p2,
            &d,
            beta,
            &BernoulliKernelOpts { mode: WIntegralMode::Descent, ..Default::default() },
        )
        .unwrap();
        assert!(
            (r.value - dsc.value).abs() < 1e-6 * (1.0 + r.value.abs()),
            "residues {} vs descent {}",
            r.value,
            dsc.value
        );
    }
}
