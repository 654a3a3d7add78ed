//! Cusp location and Pearcey scaling parameters.
//!
//! For a slope field with a gap, the cusp data (x_c, t_c, z_c) solves
//!
//!   x_c = z_c + t_c f(z_c)/(f(z_c)+1),
//!   1 + t_c f'(z_c)/(f(z_c)+1)^2 = 0,
//!   f''(z_c) - 2 f'(z_c)^2/(f(z_c)+1) = 0,
//!
//! with f = f_0 the time-zero complex slope. The third equation is solved
//! first by bracketing inside the gap, then t_c and x_c follow in closed
//! form. The scaling parameters are
//!
//!   A = t_c^4 int rho_0(x)/(4 (z_c-x)^4) dx
//!       - t_c^4 / (12 (t_c+z_c-x_c)^3) - t_c^4 / (12 (x_c-z_c)^3),
//!   B = (x_c - z_c)/t_c,
//!
//! and the curvature parameters (r, q) of an arctic-curve cusp map to them
//! by B = 1/r, A = r^2 / (4 (r-1) q^2).

use crate::numeric::brent;
use crate::slope::{stieltjes, DensityProfile, SlopeField, SlopeError};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CuspError {
    #[error("cusp equation has no sign change on the gap bracket")]
    NoSignChange,
    #[error("scaling parameter A is not positive (got {0})")]
    NonPositiveA(f64),
    #[error("curvature parameters out of range")]
    OutOfRange,
    #[error("density has no marked or inferable gap")]
    NoGap,
    #[error("evaluation point lies on a branch cut")]
    OnBranchCut,
    #[error(transparent)]
    Slope(#[from] SlopeError),
}

/// Solved cusp data for a slope field.
#[derive(Clone, Debug)]
pub struct CuspData {
    pub x_c: f64,
    pub t_c: f64,
    pub z_c: f64,
    pub a_cap: f64,
    pub b_cap: f64,
    pub beta: f64,
    pub multi_root: bool,
}

/// Curvature parameters of an upward-oriented arctic cusp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureParams {
    pub r: f64,
    pub q: f64,
}

fn real_m(field: &SlopeField, z: f64, order: u8) -> Result<f64, SlopeError> {
    Ok(stieltjes(&field.rho0, Complex64::new(z, 0.0), order)?.re)
}

/// g(z) = m''(z) (f+1) + m'(z)^2 (1-f), whose root is z_c.
///
/// This regrouping of f'' - 2 f'^2/(f+1) = 0 (divided by f/(f+1)) avoids
/// the cancellation between the two Vandermonde-sized terms.
fn cusp_g(field: &SlopeField, z: f64) -> Result<f64, SlopeError> {
    let m0 = real_m(field, z, 0)?;
    let m1 = real_m(field, z, 1)?;
    let m2 = real_m(field, z, 2)?;
    let f = field.theta() * m0.exp();
    Ok(m2 * (f + 1.0) + m1 * m1 * (1.0 - f))
}

/// Solves the cusp system on the gap of the field's density.
pub fn solve_cusp(field: &SlopeField) -> Result<CuspData, CuspError> {
    let (e_minus, e_plus) = field.rho0.gap_interval().ok_or(CuspError::NoGap)?;
    let delta = 1e-9 * (e_plus - e_minus);
    let (lo, hi) = (e_minus + delta, e_plus - delta);
    let g = |z: f64| cusp_g(field, z).unwrap_or(f64::NAN);

    // sign scan: the proof guarantees one change; exotic densities may give
    // more, in which case the root minimizing |G'''| wins
    let n_scan = 1000;
    let mut roots = Vec::new();
    let mut prev_z = lo;
    let mut prev_g = g(lo);
    for k in 1..=n_scan {
        let z = lo + (hi - lo) * k as f64 / n_scan as f64;
        let cur = g(z);
        if prev_g == 0.0 || (prev_g.is_finite() && cur.is_finite() && prev_g.signum() != cur.signum()) {
            if let Some(r) = brent(g, prev_z, z, 1e-15 * (hi - lo), 300) {
                roots.push(r);
            }
        }
        prev_z = z;
        prev_g = cur;
    }
    if roots.is_empty() {
        return Err(CuspError::NoSignChange);
    }
    let multi_root = roots.len() > 1;
    let mut best: Option<CuspData> = None;
    for z_c in roots {
        let data = finish_cusp(field, z_c)?;
        let keep = match &best {
            None => true,
            Some(prev) => {
                // tie-break on |G'''(z_c)| (zero at a genuine cusp)
                let g3_new = key_function_g_from(&data, field, Complex64::new(data.z_c, 0.0), 3)
                    .map(|v| v.norm())
                    .unwrap_or(f64::INFINITY);
                let g3_old = key_function_g_from(prev, field, Complex64::new(prev.z_c, 0.0), 3)
                    .map(|v| v.norm())
                    .unwrap_or(f64::INFINITY);
                g3_new < g3_old
            }
        };
        if keep {
            best = Some(data);
        }
    }
    let mut data = best.unwrap();
    data.multi_root = multi_root;
    Ok(data)
}

fn finish_cusp(field: &SlopeField, z_c: f64) -> Result<CuspData, CuspError> {
    let m0 = real_m(field, z_c, 0)?;
    let m1 = real_m(field, z_c, 1)?;
    let f = field.theta() * m0.exp();
    // 1 + t_c f'/(f+1)^2 = 0 with f' = f m'
    let t_c = -(f + 1.0) * (f + 1.0) / (f * m1);
    let x_c = z_c + t_c * f / (f + 1.0);
    let (a_cap, b_cap) = scaling_params_at(&field.rho0, x_c, t_c, z_c)?;
    Ok(CuspData { x_c, t_c, z_c, a_cap, b_cap, beta: field.beta, multi_root: false })
}

/// A and B from the closed-form piecewise integral.
pub fn scaling_params_at(
    rho: &DensityProfile,
    x_c: f64,
    t_c: f64,
    z_c: f64,
) -> Result<(f64, f64), CuspError> {
    // int rho(x)/(4 (z_c - x)^4) dx = sum rho_p [(z_c-b)^-3 - (z_c-a)^-3]/12
    let mut integral = 0.0;
    for p in &rho.pieces {
        integral += p.rho * ((z_c - p.b).powi(-3) - (z_c - p.a).powi(-3)) / 12.0;
    }
    let t4 = t_c.powi(4);
    let a_cap = t4 * integral
        - t4 / (12.0 * (t_c + z_c - x_c).powi(3))
        - t4 / (12.0 * (x_c - z_c).powi(3));
    let b_cap = (x_c - z_c) / t_c;
    if !(a_cap > 0.0) {
        return Err(CuspError::NonPositiveA(a_cap));
    }
    Ok((a_cap, b_cap))
}

/// Residuals of the three defining equations at the solved point.
pub fn cusp_residuals(field: &SlopeField, c: &CuspData) -> Result<[f64; 3], CuspError> {
    let m0 = real_m(field, c.z_c, 0)?;
    let m1 = real_m(field, c.z_c, 1)?;
    let m2 = real_m(field, c.z_c, 2)?;
    let f = field.theta() * m0.exp();
    let f1 = f * m1;
    let f2 = f * (m2 + m1 * m1);
    let r1 = c.x_c - c.z_c - c.t_c * f / (f + 1.0);
    let r2 = 1.0 + c.t_c * f1 / ((f + 1.0) * (f + 1.0));
    let r3 = (f2 - 2.0 * f1 * f1 / (f + 1.0)) / (1.0 + f2.abs());
    Ok([r1, r2, r3])
}

/// beta solving beta/(1-beta) = f_star / exp(m(z_c)).
pub fn match_drift(f_star: f64, rho: &DensityProfile, z_c: f64) -> Result<f64, CuspError> {
    assert!(f_star > 0.0);
    let m = stieltjes(rho, Complex64::new(z_c, 0.0), 0)?.re;
    let theta = f_star * (-m).exp();
    Ok(theta / (1.0 + theta))
}

/// (r, q) -> (A, B): B = 1/r, A = r^2 / (4 (r-1) q^2).
pub fn curvature_to_scaling(p: CurvatureParams) -> Result<(f64, f64), CuspError> {
    if !(p.r > 1.0 && p.q > 0.0) {
        return Err(CuspError::OutOfRange);
    }
    Ok((p.r * p.r / (4.0 * (p.r - 1.0) * p.q * p.q), 1.0 / p.r))
}

/// (A, B) -> (r, q): r = 1/B, q = 1/sqrt(4 A B (1-B)).
pub fn scaling_to_curvature(a_cap: f64, b_cap: f64) -> Result<CurvatureParams, CuspError> {
    if !(a_cap > 0.0 && b_cap > 0.0 && b_cap < 1.0) {
        return Err(CuspError::OutOfRange);
    }
    Ok(CurvatureParams { r: 1.0 / b_cap, q: 1.0 / (4.0 * a_cap * b_cap * (1.0 - b_cap)).sqrt() })
}

/// The key function G and its derivatives, evaluated in the frame translated
/// so the cusp sits at x_c = 0:
///
///   G(z) = int_left log(z-x) rho + int_right log(x-z) rho
///          + (z+t_c) log(z+t_c) - z log(-z) + z log(beta/(1-beta)),
///
/// with derivatives
///
///   G'   = m(z) + log(z+t_c) - log(-z) + log theta
///   G''  = m' + 1/(z+t_c) - 1/z
///   G''' = m'' - 1/(z+t_c)^2 + 1/z^2
///   G'''' = m''' + 2/(z+t_c)^3 - 2/z^3.
///
/// `z` is given in the original frame; the shift by x_c happens internally.
pub fn key_function_g(cusp: &CuspData, field: &SlopeField, z: Complex64, order: u8) -> Result<Complex64, CuspError> {
    key_function_g_from(cusp, field, z, order)
}

fn key_function_g_from(
    cusp: &CuspData,
    field: &SlopeField,
    z: Complex64,
    order: u8,
) -> Result<Complex64, CuspError> {
    assert!(order <= 4);
    let (e_minus, e_plus) = field.rho0.gap_interval().ok_or(CuspError::NoGap)?;
    // branch cuts: (-inf, E-] and [E+, inf) in the original frame
    if z.im == 0.0 && (z.re <= e_minus || z.re >= e_plus) {
        return Err(CuspError::OnBranchCut);
    }
    let zs = z - Complex64::new(cusp.x_c, 0.0);
    let t_c = Complex64::new(cusp.t_c, 0.0);
    let theta = field.theta();
    if order == 0 {
        // closed-form piece integrals of log(z - x) and log(x - z), shifted
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &field.rho0.pieces {
            let a = p.a - cusp.x_c;
            let b = p.b - cusp.x_c;
            let za = zs - Complex64::new(a, 0.0);
            let zb = zs - Complex64::new(b, 0.0);
            let term = if p.b <= e_minus {
                // int_a^b log(z-x) dx = (z-a)log(z-a) - (z-b)log(z-b) - (b-a)
                za * za.ln() - zb * zb.ln() - (b - a)
            } else {
                // int_a^b log(x-z) dx = (b-z)log(b-z) - (a-z)log(a-z) - (b-a)
                (-zb) * (-zb).ln() - (-za) * (-za).ln() - (b - a)
            };
            acc += term * p.rho;
        }
        acc += (zs + t_c) * (zs + t_c).ln() - zs * (-zs).ln() + zs * theta.ln();
        return Ok(acc);
    }
    // derivatives reduce to the shifted Stieltjes transform
    let shifted = shift_profile(&field.rho0, cusp.x_c);
    let m = stieltjes(&shifted, zs, order - 1)?;
    let v = match order {
        1 => m + (zs + t_c).ln() - (-zs).ln() + Complex64::new(theta.ln(), 0.0),
        2 => m + (zs + t_c).powi(-1) - zs.powi(-1),
        3 => m - (zs + t_c).powi(-2) + zs.powi(-2),
        4 => m + (zs + t_c).powi(-3) * 2.0 - zs.powi(-3) * 2.0,
        _ => unreachable!(),
    };
    Ok(v)
}

fn shift_profile(rho: &DensityProfile, by: f64) -> DensityProfile {
    DensityProfile {
        pieces: rho
            .pieces
            .iter()
            .map(|p| crate::slope::Piece { a: p.a - by, b: p.b - by, rho: p.rho })
            .collect(),
        gap: rho.gap.map(|(a, b)| (a - by, b - by)),
    }
}
