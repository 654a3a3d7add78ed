//! Rescaled-kernel comparison at the cusp, the binomial-vs-Gaussian and
//! log-prefactor cross-checks, and the key functions D1, D2.

use super::bernoulli::{kernel_bernoulli_gauged, BernoulliKernelOpts, WIntegralMode};
use super::pearcey::kernel_pearcey;
use super::{KernelError, KernelValue, SpaceTimePoint};
use crate::cusp::CuspData;
use crate::nbrw::{log_binomial, quantile_initial, ParticleConfig};
use crate::numeric::ln_gamma_real;
use crate::slope::SlopeField;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Maximal quantile configuration the density supports at scale n.
pub fn full_quantile_config(field: &SlopeField, n: u64) -> Result<ParticleConfig, KernelError> {
    let (e_minus, e_plus) = field
        .rho0
        .gap_interval()
        .ok_or_else(|| KernelError::PathTracing("density has no gap".into()))?;
    let nf = n as f64;
    let m_lo = (nf * field.rho0.mass_left_of(e_minus) - 1e-9).floor() as usize;
    let n_hi = (nf * field.rho0.mass_right_of(e_plus) - 1e-9).floor() as usize;
    Ok(quantile_initial(&field.rho0, n, m_lo, n_hi)?)
}

/// Both sides of the conjugated kernel comparison at one argument tuple.
#[derive(Clone, Copy, Debug)]
pub struct RescaledPair {
    pub lhs: KernelValue,
    pub rhs: KernelValue,
    pub t1: i64,
    pub x1: i64,
    pub t2: i64,
    pub x2: i64,
}

/// Gauged lattice kernel vs the scaled Pearcey kernel at
/// (tau_1, gamma_1; tau_2, gamma_2).
pub fn rescaled_kernel_pair(
    tau1: f64,
    gamma1: f64,
    tau2: f64,
    gamma2: f64,
    n: u64,
    field: &SlopeField,
    cusp: &CuspData,
) -> Result<RescaledPair, KernelError> {
    let nf = n as f64;
    let (a_cap, b_cap) = (cusp.a_cap, cusp.b_cap);
    let t1 = (nf * cusp.t_c + nf.sqrt() * tau1).round() as i64;
    let t2 = (nf * cusp.t_c + nf.sqrt() * tau2).round() as i64;
    let x1 = (nf * cusp.x_c + b_cap * nf.sqrt() * tau1 + nf.powf(0.25) * gamma1).round() as i64;
    let x2 = (nf * cusp.x_c + b_cap * nf.sqrt() * tau2 + nf.powf(0.25) * gamma2).round() as i64;
    let d = full_quantile_config(field, n)?;
    let opts = BernoulliKernelOpts {
        z_line: Some(nf * cusp.z_c),
        mode: WIntegralMode::Auto,
        rel_tol: 1e-8,
    };
    let lhs = kernel_bernoulli_gauged(
        SpaceTimePoint { t: t1, x: x1 },
        SpaceTimePoint { t: t2, x: x2 },
        &d,
        cusp.beta,
        b_cap,
        &opts,
    )?;
    let scale = std::f64::consts::SQRT_2 * nf.powf(0.25) * a_cap.powf(0.25) * b_cap * (1.0 - b_cap);
    let ts = 2.0 * a_cap.sqrt() * b_cap * (1.0 - b_cap);
    let xs = std::f64::consts::SQRT_2 * a_cap.powf(0.25) * b_cap * (1.0 - b_cap);
    let kp = kernel_pearcey(-tau1 / ts, gamma1 / xs, -tau2 / ts, gamma2 / xs)?;
    let rhs = KernelValue {
        value: kp.value / scale,
        abs_error_estimate: kp.abs_error_estimate / scale,
        ..kp
    };
    Ok(RescaledPair { lhs, rhs, t1, x1, t2, x2 })
}

/// Exact log-prefactor of the conjugated kernel at the saddle versus its
/// asymptotic form (t1 - t2 + 1) log n - log(t_c B (1-B)). Returns
/// (exact, asymptotic).
pub fn prefactor_check(
    tau1: f64,
    gamma1: f64,
    tau2: f64,
    gamma2: f64,
    n: u64,
    field: &SlopeField,
    cusp: &CuspData,
) -> Result<(f64, f64), KernelError> {
    let nf = n as f64;
    let b_cap = cusp.b_cap;
    let t1 = (nf * cusp.t_c + nf.sqrt() * tau1).round() as i64;
    let t2 = (nf * cusp.t_c + nf.sqrt() * tau2).round() as i64;
    let x1 = (nf * cusp.x_c + b_cap * nf.sqrt() * tau1 + nf.powf(0.25) * gamma1).round() as i64;
    let x2 = (nf * cusp.x_c + b_cap * nf.sqrt() * tau2 + nf.powf(0.25) * gamma2).round() as i64;
    let _ = field;
    // n D2(z_c) - n D1(z_c): all shared terms cancel, leaving the two
    // Pochhammer log sums
    let zc = nf * cusp.z_c;
    let mut d2_minus_d1 = 0.0;
    for j in (x2 - t2 + 1)..=(x2 - 1) {
        d2_minus_d1 += (zc - j as f64).abs().ln();
    }
    for j in (x1 - t1)..=x1 {
        d2_minus_d1 -= (zc - j as f64).abs().ln();
    }
    let exact = (x1 - x2) as f64 * b_cap.ln()
        + (t1 - t2 + x2 - x1) as f64 * (1.0 - b_cap).ln()
        + ln_gamma_real(t1 as f64 + 1.0)
        - ln_gamma_real(t2 as f64)
        + d2_minus_d1;
    let asymptotic = (t1 - t2 + 1) as f64 * nf.ln() - (cusp.t_c * b_cap * (1.0 - b_cap)).ln();
    Ok((exact, asymptotic))
}

/// Exact gauged binomial term and its Gaussian approximation. Arguments
/// are lattice points; n fixes the Pearcey coordinates.
pub fn binomial_gaussian_check(
    t1: i64,
    x1: i64,
    t2: i64,
    x2: i64,
    b_cap: f64,
    n: u64,
) -> Result<(f64, f64), KernelError> {
    if t1 <= t2 || x1 < x2 || x1 - x2 > t1 - t2 {
        return Err(KernelError::OutOfSupport);
    }
    let (tp, xp) = ((t1 - t2) as f64, (x1 - x2) as f64);
    let exact =
        (xp * b_cap.ln() + (tp - xp) * (1.0 - b_cap).ln() + log_binomial(t1 - t2, x1 - x2)).exp();
    let nf = n as f64;
    let tau = tp / nf.sqrt();
    let gamma = (xp - b_cap * tp) / nf.powf(0.25);
    let gaussian = nf.powf(-0.25) / (2.0 * PI * tau * b_cap * (1.0 - b_cap)).sqrt()
        * (-(gamma * gamma) / (2.0 * b_cap * (1.0 - b_cap) * tau)).exp();
    Ok((exact, gaussian))
}

/// Which key function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DKind {
    D1,
    D2,
}

/// Parameters of the key functions.
#[derive(Clone, Debug)]
pub struct DParams {
    pub t1: i64,
    pub x1: i64,
    pub t2: i64,
    pub x2: i64,
    pub d: Vec<i64>,
    pub beta: f64,
    pub n: u64,
}

impl DParams {
    /// the gap (d_{-1}/n, d_0/n) straddling the largest spacing
    fn gap(&self) -> Option<(f64, f64)> {
        let mut best: Option<(i64, i64, i64)> = None;
        for w in self.d.windows(2) {
            if best.map(|(g, _, _)| w[1] - w[0] > g).unwrap_or(true) {
                best = Some((w[1] - w[0], w[0], w[1]));
            }
        }
        best.map(|(_, a, b)| (a as f64 / self.n as f64, b as f64 / self.n as f64))
    }
}

/// D1 or D2 at z, normalized to be real on the particle gap.
pub fn key_function_d(kind: DKind, z: Complex64, p: &DParams) -> Result<Complex64, KernelError> {
    let nf = p.n as f64;
    let (gl, gh) = p.gap().ok_or(KernelError::OnPole)?;
    if z.im == 0.0 && !(z.re > gl && z.re < gh) {
        return Err(KernelError::OnPole);
    }
    if z.im < 0.0 {
        let v = key_function_d(kind, z.conj(), p)?;
        return Ok(v.conj());
    }
    if z.im == 0.0 {
        // on the gap the gamma-form magnitudes are the real normalization
        let x = z.re;
        let mut v = 0.0;
        for &di in &p.d {
            v += (x - di as f64 / nf).abs().ln();
        }
        v /= nf;
        let xnf = x * nf;
        v += match kind {
            DKind::D2 => {
                crate::numeric::ln_gamma_real(xnf - (p.x2 - p.t2) as f64)
                    + crate::numeric::ln_gamma_real(p.t2 as f64 - xnf + (p.x2 - p.t2) as f64)
            }
            DKind::D1 => {
                crate::numeric::ln_gamma_real(xnf - (p.x1 - p.t1) as f64 + 1.0)
                    + crate::numeric::ln_gamma_real((p.t1 + 1) as f64 - xnf + (p.x1 - p.t1) as f64)
            }
        } / nf;
        v -= PI.ln() / nf;
        v += x * (p.beta / (1.0 - p.beta)).ln();
        return Ok(Complex64::new(v, 0.0));
    }
    let raw = d_raw(kind, z, p);
    // subtract the constant imaginary part, fixed at a reference point on
    // the gap midway between lattice points
    let k_mid = ((0.5 * (gl + gh) * nf).floor() + 0.5) / nf;
    let c = d_raw(kind, Complex64::new(k_mid, 1e-9), p).im;
    Ok(raw - Complex64::new(0.0, c))
}

/// Analytic branch on the upper half-plane via the gamma form of the
/// Pochhammer/sine combination (whose branch is continuous there, unlike
/// the principal-log sum):
///   D2: Poch/sin = (-1)^(x2+1) G(u) G(t2-u) / pi,   u = n z - x2 + t2
///   D1: Poch/sin = (-1)^(x1)   G(v+1) G(t1+1-v)/pi, v = n z - x1 + t1
/// (the overall sign only shifts the imaginary normalization constant).
fn d_raw(kind: DKind, z: Complex64, p: &DParams) -> Complex64 {
    let nf = p.n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for &di in &p.d {
        acc += (z - Complex64::new(di as f64 / nf, 0.0)).ln();
    }
    acc /= nf;
    let znf = z * nf;
    acc += match kind {
        DKind::D2 => {
            let u = znf - Complex64::new((p.x2 - p.t2) as f64, 0.0);
            crate::numeric::ln_gamma_complex(u)
                + crate::numeric::ln_gamma_complex(Complex64::new(p.t2 as f64, 0.0) - u)
        }
        DKind::D1 => {
            let v = znf - Complex64::new((p.x1 - p.t1) as f64, 0.0);
            crate::numeric::ln_gamma_complex(v + Complex64::new(1.0, 0.0))
                + crate::numeric::ln_gamma_complex(Complex64::new((p.t1 + 1) as f64, 0.0) - v)
        }
    } / nf;
    acc -= Complex64::new(PI.ln() / nf, 0.0);
    acc + z * (p.beta / (1.0 - p.beta)).ln()
}

/// d/dz of D1 or D2; single-valued (no branch constants).
pub fn key_function_d_deriv(kind: DKind, z: Complex64, p: &DParams) -> Complex64 {
    let nf = p.n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for &di in &p.d {
        acc += 1.0 / (z - Complex64::new(di as f64 / nf, 0.0));
    }
    acc /= nf;
    let znf = z * nf;
    acc += match kind {
        DKind::D2 => {
            let u = znf - Complex64::new((p.x2 - p.t2) as f64, 0.0);
            crate::numeric::digamma_complex(u)
                - crate::numeric::digamma_complex(Complex64::new(p.t2 as f64, 0.0) - u)
        }
        DKind::D1 => {
            let v = znf - Complex64::new((p.x1 - p.t1) as f64, 0.0);
            crate::numeric::digamma_complex(v + Complex64::new(1.0, 0.0))
                - crate::numeric::digamma_complex(Complex64::new((p.t1 + 1) as f64, 0.0) - v)
        }
    };
    acc + Complex64::new((p.beta / (1.0 - p.beta)).ln(), 0.0)
}



/// Winding number of D2' around the circle |z - center| = r (argument
/// principle: equals the zero count inside when no poles are enclosed).
pub fn d_prime_winding(kind: DKind, center: Complex64, r: f64, p: &DParams, samples: usize) -> i64 {
    let mut prev_arg: Option<f64> = None;
    let mut total = 0.0;
    for k in 0..=samples {
        let ang = 2.0 * PI * k as f64 / samples as f64;
        let z = center + Complex64::from_polar(r, ang);
        let v = key_function_d_deriv(kind, z, p);
        let a = v.arg();
        if let Some(pa) = prev_arg {
            let mut da = a - pa;
            while da > PI {
                da -= 2.0 * PI;
            }
            while da < -PI {
                da += 2.0 * PI;
            }
            total += da;
        }
        prev_arg = Some(a);
    }
    (total / (2.0 * PI)).round() as i64
}
