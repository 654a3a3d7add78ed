//! The extended Pearcey kernel
//!
//!   K(s,x;t,y) = -1[s<t] exp(-(x-y)^2 / (2(t-s))) / sqrt(2 pi (t-s))
//!     + (2 pi i)^-2 int int dz dw / (z - w)
//!         exp(-z^4/4 + w^4/4 + (t z^2 - s w^2)/2 - y z + x w),
//!
//! with the z contour the vertical line Re z = -eps0 (offset keeps it clear
//! of the w rays) traversed upwards, and the w contour running in from
//! inf e^{i pi/4} and inf e^{5 i pi/4} to 0 and out to inf e^{3 i pi/4} and
//! inf e^{7 i pi/4}. Contours are truncated where the quartic exponent has
//! fallen ~45 nats below its peak.
//!
//! Two evaluation paths share the contours: a direct tensor sum over
//! (z, w) node pairs for single arguments, and a batch path for Nystrom
//! grids that trades the 1/(z-w) coupling for an exponential integral,
//! 1/(z-w) = int_0^inf e^{-u(z-w)} du (valid for Re(z-w) > 0; mirrored on
//! the right rays), leaving only outer products of one-dimensional
//! transforms plus a small direct near-origin correction.

use super::{KernelError, KernelValue};
use crate::numeric::gauss_legendre;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Quadrature controls.
#[derive(Clone, Copy, Debug)]
pub struct PearceyQuad {
    /// z-line offset (Re z = -eps0)
    pub eps0: f64,
    /// base panel width on the contours
    pub panel: f64,
    /// nat drop at which contours are truncated
    pub nat_cut: f64,
    /// |Re w| below which pairs are handled directly in the batch path
    pub split: f64,
}

impl Default for PearceyQuad {
    fn default() -> Self {
        PearceyQuad { eps0: 1e-3, panel: 0.125, nat_cut: 45.0, split: 0.4 }
    }
}

impl PearceyQuad {
    pub fn refined(&self) -> Self {
        PearceyQuad { panel: self.panel * 0.5, ..*self }
    }
}

const GL_PTS: usize = 16;

/// Contour nodes with weights (complex weight includes direction and
/// orientation).
fn z_nodes(q: &PearceyQuad, t: f64, y: f64) -> Vec<(Complex64, Complex64)> {
    // reach: -v^4/4 + |t| v^2/2 + |y| v >= -nat_cut
    let r = reach(q.nat_cut, t.abs(), y.abs());
    let mut nodes = Vec::new();
    let (gx, gw) = gauss_legendre(GL_PTS);
    let edges = graded_edges(q, r);
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for (xk, wk) in gx.iter().zip(&gw) {
            let v = 0.5 * (a + b) + 0.5 * (b - a) * xk;
            let w = 0.5 * (b - a) * wk;
            // upper node and its conjugate (line traversed upwards)
            nodes.push((Complex64::new(-q.eps0, v), Complex64::new(0.0, w)));
            nodes.push((Complex64::new(-q.eps0, -v), Complex64::new(0.0, w)));
        }
    }
    nodes
}

/// w-ray nodes; `filter` selects by |Re w| (None = all, Some(true) = only
/// |Re w| >= split, Some(false) = only |Re w| < split).
fn w_nodes(
    q: &PearceyQuad,
    s: f64,
    x: f64,
    filter: Option<bool>,
) -> Vec<(Complex64, Complex64)> {
    let r = reach(q.nat_cut, s.abs(), x.abs());
    let (gx, gw) = gauss_legendre(GL_PTS);
    let edges = graded_edges(q, r);
    let mut nodes = Vec::new();
    // (angle, orientation): incoming rays get -1
    let rays = [
        (PI / 4.0, -1.0),
        (3.0 * PI / 4.0, 1.0),
        (5.0 * PI / 4.0, -1.0),
        (7.0 * PI / 4.0, 1.0),
    ];
    let cut = q.split / (0.5f64).sqrt(); // radius where |Re w| = split
    for (ang, orient) in rays {
        let dir = Complex64::from_polar(1.0, ang);
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            for (xk, wk) in gx.iter().zip(&gw) {
                let rr = 0.5 * (a + b) + 0.5 * (b - a) * xk;
                let keep = match filter {
                    None => true,
                    Some(outer) => (rr >= cut) == outer,
                };
                if !keep {
                    continue;
                }
                let wnode = dir * rr;
                let wt = dir * (0.5 * (b - a) * wk * orient);
                nodes.push((wnode, wt));
            }
        }
    }
    nodes
}

/// Panel edges geometrically graded toward the origin (down to the scale
/// of the contour offset, where the 1/(z-w) coupling peaks), then uniform.
fn graded_edges(q: &PearceyQuad, r: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut e = (q.eps0 * 0.5).min(q.panel / 256.0);
    while e < q.panel {
        edges.push(e);
        e *= 2.0;
    }
    let mut e = q.panel;
    while e < r {
        edges.push(e);
        e += q.panel;
    }
    edges.push(r);
    edges
}

fn reach(nat_cut: f64, quad_coeff: f64, lin_coeff: f64) -> f64 {
    // solve r^4/4 - q r^2/2 - l r = nat_cut by bisection
    let f = |r: f64| r.powi(4) / 4.0 - quad_coeff * r * r / 2.0 - lin_coeff * r - nat_cut;
    let mut hi = 3.0;
    while f(hi) < 0.0 {
        hi *= 1.5;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let m = 0.5 * (lo + hi);
        if f(m) < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    hi
}

fn phi_z(z: Complex64, t: f64, y: f64) -> Complex64 {
    -z.powi(4) * 0.25 + z * z * (0.5 * t) - z * y
}

fn psi_w(w: Complex64, s: f64, x: f64) -> Complex64 {
    w.powi(4) * 0.25 - w * w * (0.5 * s) + w * x
}

/// Double contour integral, direct tensor sum (one argument tuple).
fn double_integral_direct(q: &PearceyQuad, s: f64, x: f64, t: f64, y: f64) -> (Complex64, usize) {
    let zs = z_nodes(q, t, y);
    let ws = w_nodes(q, s, x, None);
    // precompute exponentials
    let ez: Vec<(Complex64, Complex64)> =
        zs.iter().map(|&(z, wt)| (z, wt * phi_z(z, t, y).exp())).collect();
    let ew: Vec<(Complex64, Complex64)> =
        ws.iter().map(|&(w, wt)| (w, wt * psi_w(w, s, x).exp())).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for &(w, cw) in &ew {
        let mut inner = Complex64::new(0.0, 0.0);
        for &(z, cz) in &ez {
            inner += cz / (z - w);
        }
        acc += cw * inner;
    }
    // (2 pi i)^-2 = -1/(4 pi^2)
    (acc * Complex64::new(-1.0 / (4.0 * PI * PI), 0.0), ez.len() * ew.len())
}

/// Probe: raw double integral real part at the given quadrature (tests).
pub fn kernel_pearcey_probe(q: &PearceyQuad, s: f64, x: f64, t: f64, y: f64) -> f64 {
    double_integral_direct(q, s, x, t, y).0.re
}

/// The extended Pearcey kernel at one argument tuple, with Richardson
/// extrapolation in the line offset and a refinement-based error estimate.
pub fn kernel_pearcey(s: f64, x: f64, t: f64, y: f64) -> Result<KernelValue, KernelError> {
    kernel_pearcey_with(&PearceyQuad::default(), s, x, t, y)
}

pub fn kernel_pearcey_with(
    q: &PearceyQuad,
    s: f64,
    x: f64,
    t: f64,
    y: f64,
) -> Result<KernelValue, KernelError> {
    let gauss = gaussian_term(s, x, t, y);
    // the z-line shift to -eps0 crosses the w = z pole over the short ray
    // segments with Re w in (-eps0, 0); the induced error is linear in
    // eps0, so extrapolate from eps0 and 2 eps0 — at two panel sizes for
    // the error estimate
    let extrap = |panel: f64| -> (Complex64, usize) {
        let qa = PearceyQuad { panel, ..*q };
        let qb = PearceyQuad { panel, eps0: 2.0 * q.eps0, ..*q };
        let (va, na) = double_integral_direct(&qa, s, x, t, y);
        let (vb, nb) = double_integral_direct(&qb, s, x, t, y);
        (va * 2.0 - vb, na + nb)
    };
    let (base, n1) = extrap(q.panel);
    let (fine, n2) = extrap(q.panel * 0.5);
    let err = (fine - base).norm() + fine.im.abs();
    let value = gauss + fine.re;
    if !value.is_finite() {
        return Err(KernelError::QuadratureNonConvergence(err));
    }
    Ok(KernelValue {
        value,
        abs_error_estimate: err,
        pole_count: 0,
        nodes: n1 + n2,
        peak_log: 0.0,
    })
}

fn gaussian_term(s: f64, x: f64, t: f64, y: f64) -> f64 {
    if s < t {
        -(-(x - y) * (x - y) / (2.0 * (t - s))).exp() / (2.0 * PI * (t - s)).sqrt()
    } else {
        0.0
    }
}

/// Batch evaluation of the kernel matrix K(s, xs[a]; t, ys[b]) sharing the
/// contour work across the grid.
pub fn kernel_pearcey_batch(
    q: &PearceyQuad,
    s: f64,
    xs: &[f64],
    t: f64,
    ys: &[f64],
) -> Result<Vec<Vec<f64>>, KernelError> {
    let a = batch_at_offset(q, s, xs, t, ys)?;
    let qb = PearceyQuad { eps0: 2.0 * q.eps0, ..*q };
    let b = batch_at_offset(&qb, s, xs, t, ys)?;
    let mut out = a;
    for (ra, rb) in out.iter_mut().zip(&b) {
        for (va, vb) in ra.iter_mut().zip(rb) {
            // values contain the Gaussian term; extrapolation acts on the
            // integral part, and the Gaussian cancels linearly as well
            *va = 2.0 * *va - *vb;
        }
    }
    Ok(out)
}

fn batch_at_offset(
    q: &PearceyQuad,
    s: f64,
    xs: &[f64],
    t: f64,
    ys: &[f64],
) -> Result<Vec<Vec<f64>>, KernelError> {
    let xmax = xs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let ymax = ys.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let zs = z_nodes(q, t, ymax);
    // z-side one-dimensional transform: Z(v) = sum wt e^{phi0(z)} e^{-v z}
    let z_base: Vec<(Complex64, Complex64)> = zs
        .iter()
        .map(|&(z, wt)| (z, wt * (-z.powi(4) * 0.25 + z * z * (0.5 * t)).exp()))
        .collect();
    let z_transform = |v: f64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(z, c) in &z_base {
            acc += c * (-z * v).exp();
        }
        acc
    };
    // w-side transforms over the outer ray parts
    let w_outer = w_nodes(q, s, xmax, Some(true));
    let w_base_outer: Vec<(Complex64, Complex64)> = w_outer
        .iter()
        .map(|&(w, wt)| (w, wt * (w.powi(4) * 0.25 - w * w * (0.5 * s)).exp()))
        .collect();
    let w_transform = |v: f64, left: bool| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(w, c) in &w_base_outer {
            if (w.re < 0.0) == left {
                acc += c * (w * v).exp();
            }
        }
        acc
    };
    // u-grid: panels until the integrand is negligible
    let (gx, gw) = gauss_legendre(GL_PTS);
    let mut u_nodes = Vec::new();
    let u_max = 8.0 + 2.0 * (xmax + ymax) + 3.0 * (s.abs() + t.abs());
    let du = 1.0;
    let mut a = 0.0;
    while a < u_max {
        let b = (a + du).min(u_max);
        for (xk, wk) in gx.iter().zip(&gw) {
            u_nodes.push((0.5 * (a + b) + 0.5 * (b - a) * xk, 0.5 * (b - a) * wk));
        }
        a = b;
    }
    // near-origin direct part
    let w_inner = w_nodes(q, s, xmax, Some(false));
    let w_base_inner: Vec<(Complex64, Complex64)> = w_inner
        .iter()
        .map(|&(w, wt)| (w, wt * (w.powi(4) * 0.25 - w * w * (0.5 * s)).exp()))
        .collect();
    // S_b(w) = sum_z c_z e^{-y_b z}/(z - w) for inner w
    let mut s_inner = vec![vec![Complex64::new(0.0, 0.0); w_base_inner.len()]; ys.len()];
    for (bi, &y) in ys.iter().enumerate() {
        for (wi, &(w, _)) in w_base_inner.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(z, c) in &z_base {
                acc += c * (-z * y).exp() / (z - w);
            }
            s_inner[bi][wi] = acc;
        }
    }
    let scale = -1.0 / (4.0 * PI * PI);
    let mut out = vec![vec![0.0; ys.len()]; xs.len()];
    for (ai, &x) in xs.iter().enumerate() {
        for (bi, &y) in ys.iter().enumerate() {
            // outer part via the u-integral
            let mut acc = Complex64::new(0.0, 0.0);
            for &(u, wu) in &u_nodes {
                let zl = z_transform(y + u);
                let wl = w_transform(x + u, true);
                let zr = z_transform(y - u);
                let wr = w_transform(x - u, false);
                acc += (zl * wl - zr * wr) * wu;
            }
            // inner direct part
            for (wi, &(w, cw)) in w_base_inner.iter().enumerate() {
                acc += cw * (w * x).exp() * s_inner[bi][wi];
            }
            out[ai][bi] = gaussian_term(s, x, t, y) + (acc * scale).re;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_term_only_for_s_less_t() {
        assert_eq!(gaussian_term(1.0, 0.0, 1.0, 0.0), 0.0);
        assert_eq!(gaussian_term(2.0, 0.0, 1.0, 0.0), 0.0);
        assert!(gaussian_term(0.0, 0.0, 1.0, 0.0) < 0.0);
    }

    #[test]
    fn realness_on_real_arguments() {
        for &(s, x, t, y) in &[
            (0.0, 0.0, 0.0, 0.0),
            (0.5, -1.0, 0.2, 0.7),
            (-1.0, 2.0, 1.0, -2.0),
        ] {
            let (v, _) = double_integral_direct(&PearceyQuad::default(), s, x, t, y);
            assert!(v.im.abs() < 1e-8, "Im = {} at ({s},{x},{t},{y})", v.im);
        }
    }

    #[test]
    fn refinement_self_consistency() {
        let q = PearceyQuad::default();
        let (v1, _) = double_integral_direct(&q, 0.3, 0.5, 0.8, -0.4);
        let (v2, _) = double_integral_direct(&q.refined(), 0.3, 0.5, 0.8, -0.4);
        assert!((v1 - v2).norm() < 1e-6, "diff {}", (v1 - v2).norm());
    }

    #[test]
    fn batch_matches_direct() {
        let q = PearceyQuad::default();
        let xs = [-0.8, 0.3, 1.1];
        let ys = [-0.5, 0.9];
        let m = kernel_pearcey_batch(&q, 0.4, &xs, -0.2, &ys).unwrap();
        for (a, &x) in xs.iter().enumerate() {
            for (b, &y) in ys.iter().enumerate() {
                let kv = kernel_pearcey_with(&q, 0.4, x, -0.2, y).unwrap();
                assert!(
                    (m[a][b] - kv.value).abs() < 5e-6,
                    "batch {} vs direct {} at ({x},{y})",
                    m[a][b],
                    kv.value
                );
            }
        }
    }

    #[test]
    fn diagonal_density_positive() {
        // the one-time kernel diagonal is a density
        for &x in &[-1.0, 0.0, 1.0] {
            let kv = kernel_pearcey(0.0, x, 0.0, x).unwrap();
            assert!(kv.value > 0.0, "K(0,{x};0,{x}) = {}", kv.value);
        }
    }
}
