//! Shared numerical machinery: extended-range scalars, double-double
//! arithmetic, complex log-gamma, quadrature rules and root finding.

mod ddouble;
mod gamma;
mod quad;
mod scaled;

pub use ddouble::{DDouble, ScaledDD};
pub use gamma::{digamma_complex, ln_gamma_complex, ln_gamma_real, ln_sin_pi_complex};
pub use quad::{adaptive_simpson, gauss_legendre};
pub use scaled::Scaled;

use num_complex::Complex64;

/// Accumulates a sum of complex terms supplied as `exp(log_mag) * phase`,
/// where `log_mag` may be far outside the range representable by `f64`.
/// Terms are rescaled against the running peak so the final value is
/// `exp(log_scale) * sum`.
#[derive(Clone, Debug)]
pub struct LogSumAcc {
    peak: f64,
    sum: Complex64,
}

impl LogSumAcc {
    pub fn new() -> Self {
        LogSumAcc { peak: f64::NEG_INFINITY, sum: Complex64::new(0.0, 0.0) }
    }

    pub fn add(&mut self, log_mag: f64, phase: Complex64) {
        if log_mag == f64::NEG_INFINITY {
            return;
        }
        if log_mag > self.peak {
            if self.peak > f64::NEG_INFINITY {
                self.sum *= (self.peak - log_mag).exp();
            }
            self.peak = log_mag;
            self.sum += phase;
        } else {
            self.sum += phase * (log_mag - self.peak).exp();
        }
    }

    pub fn add_complex_log(&mut self, log_term: Complex64) {
        self.add(log_term.re, Complex64::new(0.0, log_term.im).exp());
    }

    /// Peak log-magnitude seen so far.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    /// The accumulated value as `(log_scale, mantissa)` with
    /// `value = exp(log_scale) * mantissa`.
    pub fn value_scaled(&self) -> (f64, Complex64) {
        (self.peak, self.sum)
    }

    /// The accumulated value collapsed to `f64` range (may overflow to inf).
    pub fn value(&self) -> Complex64 {
        if self.peak == f64::NEG_INFINITY {
            Complex64::new(0.0, 0.0)
        } else {
            self.sum * self.peak.exp()
        }
    }
}

impl Default for LogSumAcc {
    fn default() -> Self {
        Self::new()
    }
}

/// Dense LU with partial pivoting; returns the log of |det| and its sign.
/// Returns `None` when the matrix is singular to working precision.
pub fn lu_log_det(a: &mut [Vec<f64>]) -> Option<(f64, i8)> {
    let n = a.len();
    let mut log_det = 0.0;
    let mut sign = 1i8;
    for k in 0..n {
        let mut p = k;
        let mut best = a[k][k].abs();
        for i in k + 1..n {
            if a[i][k].abs() > best {
                best = a[i][k].abs();
                p = i;
            }
        }
        if best == 0.0 {
            return None;
        }
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        let piv = a[k][k];
        log_det += piv.abs().ln();
        if piv < 0.0 {
            sign = -sign;
        }
        for i in k + 1..n {
            let m = a[i][k] / piv;
            if m == 0.0 {
                continue;
            }
            a[i][k] = 0.0;
            for j in k + 1..n {
                let akj = a[k][j];
                a[i][j] -= m * akj;
            }
        }
    }
    Some((log_det, sign))
}

/// Determinant of a small dense matrix via LU; `f64` range only.
pub fn det(a: &[Vec<f64>]) -> f64 {
    let mut m = a.to_vec();
    match lu_log_det(&mut m) {
        None => 0.0,
        Some((l, s)) => s as f64 * l.exp(),
    }
}

/// Brent's method on a bracketing interval. `f(lo)` and `f(hi)` must have
/// opposite signs.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = b - a;
    for _ in 0..max_iter {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (p, q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)), (q - 1.0) * (r - 1.0) * (s - 1.0))
            };
            let (p, q) = if p > 0.0 { (p, -q) } else { (-p, q) };
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1 * xm.signum() };
        fb = f(b);
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_det_matches_small_cases() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        assert!((det(&a) - 5.0).abs() < 1e-12);
        let b = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!((det(&b) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.powf(1.0 / 3.0)).abs() < 1e-16);
    }

    #[test]
    fn log_sum_acc_handles_large_scales() {
        let mut acc = LogSumAcc::new();
        acc.add(5000.0, Complex64::new(1.0, 0.0));
        acc.add(5000.0 + 2f64.ln(), Complex64::new(-1.0, 0.0));
        let (log_scale, v) = acc.value_scaled();
        // exp(5000) - 2*exp(5000) = -exp(5000)
        assert!((v.re * (log_scale - 5000.0).exp() + 1.0).abs() < 1e-12);
    }
}
