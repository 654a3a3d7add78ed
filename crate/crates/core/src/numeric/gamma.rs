//! Log-gamma for real and complex arguments (Lanczos approximation) and a
//! stable `log sin(pi z)` for large imaginary parts.
//!
//! Branches: the imaginary parts returned here are only meaningful modulo
//! 2*pi for our callers, which exponentiate sums of these logs.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// log Gamma(z) for complex z, principal-ish branch (imaginary part is
/// continuous in the right half-plane; callers exponentiate so 2*pi*i shifts
/// from the reflection path are harmless).
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection: log Gamma(z) = log(pi / sin(pi z)) - log Gamma(1 - z)
        let lnpi = Complex64::new(PI.ln(), 0.0);
        return lnpi - ln_sin_pi_complex(z) - ln_gamma_complex(Complex64::new(1.0, 0.0) - z);
    }
    let zm1 = z - Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (zm1 + Complex64::new(k as f64, 0.0));
    }
    let t = zm1 + Complex64::new(LANCZOS_G + 0.5, 0.0);
    (zm1 + Complex64::new(0.5, 0.0)) * t.ln() - t + (2.0 * PI).sqrt().ln() + acc.ln()
}

/// log Gamma(x) for real x > 0.
pub fn ln_gamma_real(x: f64) -> f64 {
    ln_gamma_complex(Complex64::new(x, 0.0)).re
}

/// Digamma for complex arguments: recurrence into Re z > 10, then the
/// asymptotic series.
pub fn digamma_complex(z: Complex64) -> Complex64 {
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.re < 10.0 {
        shift -= 1.0 / z;
        z += Complex64::new(1.0, 0.0);
    }
    // psi(z) ~ ln z - 1/(2z) - sum B_2k / (2k z^{2k})
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = Complex64::new(1.0 / 12.0, 0.0) * inv2
        - Complex64::new(1.0 / 120.0, 0.0) * inv2 * inv2
        + Complex64::new(1.0 / 252.0, 0.0) * inv2 * inv2 * inv2;
    shift + z.ln() - inv * 0.5 - series
}

/// log sin(pi z), stable for |Im z| large (where sin overflows).
pub fn ln_sin_pi_complex(z: Complex64) -> Complex64 {
    let y = z.im;
    if y > 3.0 {
        // sin(pi z) = e^{-i pi z} (e^{2 pi i z} - 1) / (-2i); |e^{2 pi i z}| small
        let e = (Complex64::new(0.0, 2.0 * PI) * z).exp();
        Complex64::new(0.0, -PI) * z + (Complex64::new(0.0, 1.0) * (Complex64::new(1.0, 0.0) - e) / 2.0).ln()
    } else if y < -3.0 {
        let e = (Complex64::new(0.0, -2.0 * PI) * z).exp();
        Complex64::new(0.0, PI) * z + (Complex64::new(0.0, -1.0) * (Complex64::new(1.0, 0.0) - e) / 2.0).ln()
    } else {
        (Complex64::new(PI, 0.0) * z).sin().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_factorials() {
        for n in 1..20u64 {
            let mut lf = 0.0;
            for k in 2..=n {
                lf += (k as f64).ln();
            }
            assert!((ln_gamma_real(n as f64 + 1.0) - lf).abs() < 1e-10 * (1.0 + lf.abs()));
        }
    }

    #[test]
    fn complex_recurrence() {
        // Gamma(z+1) = z Gamma(z)
        let z = Complex64::new(2.3, 1.7);
        let lhs = ln_gamma_complex(z + Complex64::new(1.0, 0.0));
        let rhs = ln_gamma_complex(z) + z.ln();
        let diff = (lhs - rhs).exp();
        assert!((diff - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn reflection_left_half_plane() {
        // |Gamma(-1.5 + 0.5i)| via reflection against direct product form
        let z = Complex64::new(-1.5, 0.5);
        let lg = ln_gamma_complex(z);
        // Gamma(z) = Gamma(z+3) / (z (z+1) (z+2))
        let direct = ln_gamma_complex(z + Complex64::new(3.0, 0.0))
            - (z * (z + Complex64::new(1.0, 0.0)) * (z + Complex64::new(2.0, 0.0))).ln();
        assert!((lg.re - direct.re).abs() < 1e-10);
    }

    #[test]
    fn ln_sin_large_imag() {
        let z = Complex64::new(0.3, 40.0);
        let v = ln_sin_pi_complex(z);
        // |sin(pi z)| ~ e^{pi * 40} / 2
        assert!((v.re - (PI * 40.0 - 2f64.ln())).abs() < 1e-8);
    }
}
