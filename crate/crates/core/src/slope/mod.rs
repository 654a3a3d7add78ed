//! Continuum layer: piecewise-constant densities, their Stieltjes transforms
//! in closed form, the complex slope f_t and its characteristic-flow
//! evolution, density recovery from boundary values, and quantile
//! trajectories.
//!
//! Conventions. For a density rho supported away from a marked gap
//! [E-, E+], the Stieltjes transform is m(z) = int rho(x)/(z-x) dx and the
//! complex slope at time zero is f_0(z) = beta/(1-beta) * exp(m_0(z)). With
//! w = f/(f+1), the flow solves xi = u + t w_0(u) and f_t(xi) = f_0(u).
//! Densities are recovered through arg* f_t(x + i0), where arg* takes values
//! in [-pi, 0].

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SlopeError {
    #[error("evaluation point lies on the support of the density")]
    OnSupport,
    #[error("density profile is invalid: {0}")]
    BadProfile(String),
    #[error("no characteristic reaches the requested point")]
    NoCharacteristic,
    #[error("Newton iteration for the characteristic foot diverged")]
    NewtonDivergence,
    #[error("quantile integrator step underflow near an arctic edge (t = {0})")]
    StiffNearEdge(f64),
}

/// One constant piece of a density profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub rho: f64,
}

/// Piecewise-constant density with an optional marked zero-density gap.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityProfile {
    pub pieces: Vec<Piece>,
    pub gap: Option<(f64, f64)>,
}

impl DensityProfile {
    pub fn new(mut pieces: Vec<Piece>, gap: Option<(f64, f64)>) -> Result<Self, SlopeError> {
        if pieces.is_empty() {
            return Err(SlopeError::BadProfile("no pieces".into()));
        }
        pieces.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap());
        for p in &pieces {
            if !(p.a < p.b) || !(p.rho > 0.0 && p.rho <= 1.0 + 1e-12) {
                return Err(SlopeError::BadProfile(format!("bad piece {p:?}")));
            }
        }
        for w in pieces.windows(2) {
            if w[0].b > w[1].a + 1e-14 {
                return Err(SlopeError::BadProfile("overlapping pieces".into()));
            }
        }
        if let Some((lo, hi)) = gap {
            if !(lo < hi) {
                return Err(SlopeError::BadProfile("empty gap".into()));
            }
            for p in &pieces {
                if p.a < hi && lo < p.b {
                    return Err(SlopeError::BadProfile("gap overlaps a piece".into()));
                }
            }
        }
        Ok(DensityProfile { pieces, gap })
    }

    /// The marked gap, or the widest interior gap between pieces.
    pub fn gap_interval(&self) -> Option<(f64, f64)> {
        if self.gap.is_some() {
            return self.gap;
        }
        let mut best: Option<(f64, f64)> = None;
        for w in self.pieces.windows(2) {
            let g = (w[0].b, w[1].a);
            if g.1 > g.0 && best.map(|(a, b)| g.1 - g.0 > b - a).unwrap_or(true) {
                best = Some(g);
            }
        }
        best
    }

    pub fn total_mass(&self) -> f64 {
        self.pieces.iter().map(|p| p.rho * (p.b - p.a)).sum()
    }

    /// Mass strictly right of `x`.
    pub fn mass_right_of(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.rho * (p.b.max(x) - p.a.max(x)).max(0.0))
            .sum()
    }

    /// Mass strictly left of `x`.
    pub fn mass_left_of(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.rho * (p.b.min(x) - p.a.min(x)).max(0.0))
            .sum()
    }

    pub fn support_bounds(&self) -> (f64, f64) {
        (self.pieces[0].a, self.pieces.last().unwrap().b)
    }

    pub fn on_support(&self, x: f64) -> bool {
        self.pieces.iter().any(|p| x >= p.a && x <= p.b)
    }

    /// Pointwise value (at a jump point, the value of the right-closed
    /// piece).
    pub fn value_at(&self, x: f64) -> f64 {
        for p in &self.pieces {
            if x >= p.a && x < p.b {
                return p.rho;
            }
        }
        0.0
    }

    /// x such that the mass on (start, x) equals q, walking right.
    pub fn quantile_right(&self, start: f64, q: f64) -> Option<f64> {
        let mut need = q;
        for p in &self.pieces {
            if p.b <= start {
                continue;
            }
            let a = p.a.max(start);
            let cap = p.rho * (p.b - a);
            if need <= cap + 1e-15 {
                return Some(a + need / p.rho);
            }
            need -= cap;
        }
        None
    }

    /// x such that the mass on (x, start) equals q, walking left.
    pub fn quantile_left(&self, start: f64, q: f64) -> Option<f64> {
        let mut need = q;
        for p in self.pieces.iter().rev() {
            if p.a >= start {
                continue;
            }
            let b = p.b.min(start);
            let cap = p.rho * (b - p.a);
            if need <= cap + 1e-15 {
                return Some(b - need / p.rho);
            }
            need -= cap;
        }
        None
    }
}

/// Stieltjes transform of a piecewise-constant density and its first four
/// derivatives, in closed form per piece:
///
/// order 0: sum rho_p \[log(z-a) - log(z-b)\]
/// order k >= 1: sum rho_p (-1)^(k-1) (k-1)! \[(z-a)^-k - (z-b)^-k\]
pub fn stieltjes(rho: &DensityProfile, z: Complex64, order: u8) -> Result<Complex64, SlopeError> {
    assert!(order <= 4);
    if z.im == 0.0 && rho.on_support(z.re) {
        return Err(SlopeError::OnSupport);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for p in &rho.pieces {
        let za = z - Complex64::new(p.a, 0.0);
        let zb = z - Complex64::new(p.b, 0.0);
        let term = match order {
            0 => za.ln() - zb.ln(),
            k => {
                let k = k as i32;
                let fac = [1.0, 1.0, 2.0, 6.0][(k - 1) as usize];
                let sgn = if k % 2 == 1 { 1.0 } else { -1.0 };
                (za.powi(-k) - zb.powi(-k)) * sgn * fac
            }
        };
        acc += term * p.rho;
    }
    Ok(acc)
}

/// The complex slope field built over a density and a drift parameter.
#[derive(Clone, Debug)]
pub struct SlopeField {
    pub rho0: DensityProfile,
    pub beta: f64,
}

impl SlopeField {
    pub fn new(rho0: DensityProfile, beta: f64) -> Result<Self, SlopeError> {
        if !(0.0 < beta && beta < 1.0) {
            return Err(SlopeError::BadProfile(format!("beta = {beta} outside (0,1)")));
        }
        Ok(SlopeField { rho0, beta })
    }

    pub fn theta(&self) -> f64 {
        self.beta / (1.0 - self.beta)
    }

    /// f_0(z) = theta * exp(m_0(z)).
    pub fn slope0(&self, z: Complex64) -> Result<Complex64, SlopeError> {
        Ok(stieltjes(&self.rho0, z, 0)?.exp() * self.theta())
    }

    /// w_0 = f_0 / (f_0 + 1).
    pub fn w0(&self, z: Complex64) -> Result<Complex64, SlopeError> {
        let f = self.slope0(z)?;
        Ok(f / (f + 1.0))
    }

    /// d/dz w_0 = f_0' / (f_0+1)^2 with f_0' = f_0 m_0'.
    pub fn w0_prime(&self, z: Complex64) -> Result<Complex64, SlopeError> {
        let f = self.slope0(z)?;
        let m1 = stieltjes(&self.rho0, z, 1)?;
        Ok(f * m1 / ((f + 1.0) * (f + 1.0)))
    }

    /// Solves xi = u + t w_0(u) for the characteristic foot u and returns
    /// (f_t(xi), w_t(xi)).
    pub fn evolve(&self, t: f64, xi: Complex64) -> Result<(Complex64, Complex64), SlopeError> {
        if t == 0.0 {
            let f = self.slope0(xi)?;
            return Ok((f, f / (f + 1.0)));
        }
        let u = self.characteristic_foot(t, xi)?;
        let f = self.slope0(u)?;
        Ok((f, f / (f + 1.0)))
    }

    /// The characteristic foot u with u + t w_0(u) = xi.
    ///
    /// For Im(xi) > 0 the iteration u <- xi - t w_0(u) is an analytic
    /// self-map of the upper half-plane (Im w_0 < 0 there), so it converges
    /// to its unique fixed point — the physical branch of the inverse — for
    /// every starting point. A Newton polish runs once the iteration has
    /// localized the root.
    pub fn characteristic_foot(&self, t: f64, xi: Complex64) -> Result<Complex64, SlopeError> {
        if t == 0.0 {
            return Ok(xi);
        }
        if t < 0.0 {
            return Err(SlopeError::NoCharacteristic);
        }
        let scale = 1.0 + xi.norm();
        let lift = if xi.im > 0.0 { xi } else { xi + Complex64::new(0.0, 1e-12 * scale) };
        let mut u = lift;
        let mut step = f64::INFINITY;
        for k in 0..60_000 {
            let w = self.w0(u)?;
            let u1 = lift - w * t;
            // Steffensen acceleration on the fixed-point map
            let w1 = self.w0(u1)?;
            let u2 = lift - w1 * t;
            let d1 = u1 - u;
            let d2 = u2 - u1;
            let denom = d2 - d1;
            let mut next = u2;
            if denom.norm() > 1e-300 {
                let acc = u - d1 * d1 / denom;
                if acc.im > 0.0 {
                    if let Ok(wa) = self.w0(acc) {
                        if (acc + wa * t - lift).norm() < (u2 + self.w0(u2)? * t - lift).norm() {
                            next = acc;
                        }
                    }
                }
            }
            step = (next - u).norm();
            u = next;
            if step < 1e-14 * scale {
                break;
            }
            // once localized, finish quadratically
            if step < 1e-6 * scale && k % 2 == 0 {
                if let Some(v) = self.newton_root(t, lift, u) {
                    if v.im >= -1e-12 && (v - u).norm() <= 16.0 * step {
                        u = v;
                        step = 0.0;
                        break;
                    }
                }
            }
        }
        let res = (u + self.w0(u)? * t - lift).norm();
        if res > 1e-9 * scale && step > 1e-11 * scale {
            return Err(SlopeError::NewtonDivergence);
        }
        Ok(u)
    }

    /// Support intervals of the evolved density. Over each off-support
    /// interval of rho_0 the real characteristics sweep out the zero set of
    /// rho_t: its extent is the range of x(u) = u + t w_0(u) there, bounded
    /// by fold points (where dx/du = 0, square-root edges) or by the
    /// transported interval endpoints (hard edges).
    pub fn evolved_support(&self, t: f64) -> Result<Vec<(f64, f64)>, SlopeError> {
        if t == 0.0 {
            return Ok(self.rho0.pieces.iter().map(|p| (p.a, p.b)).collect());
        }
        let (lo, hi) = self.rho0.support_bounds();
        let span = hi - lo;
        let big = 3.0 * span + 3.0 * t;
        let mut intervals = vec![(lo - big, lo)];
        for w in self.rho0.pieces.windows(2) {
            if w[1].a > w[0].b {
                intervals.push((w[0].b, w[1].a));
            }
        }
        intervals.push((hi, hi + big));
        let x_of = |u: f64| -> Result<f64, SlopeError> {
            Ok(u + t * self.w0(Complex64::new(u, 0.0))?.re)
        };
        let dxdu = |u: f64| -> Result<f64, SlopeError> {
            Ok(1.0 + t * self.w0_prime(Complex64::new(u, 0.0))?.re)
        };
        let mut zero_intervals: Vec<(f64, f64)> = Vec::new();
        for (iv, (a, b)) in intervals.iter().enumerate() {
            let eps = 1e-10 * span;
            let (a, b) = (a + eps, b - eps);
            let n = 512;
            let mut xmin = f64::INFINITY;
            let mut xmax = f64::NEG_INFINITY;
            let mut prev_u = a;
            let mut prev_d = dxdu(a)?;
            for k in 0..=n {
                // cosine clustering toward both endpoints
                let s = 0.5 - 0.5 * (std::f64::consts::PI * k as f64 / n as f64).cos();
                let u = a + (b - a) * s;
                let x = x_of(u)?;
                xmin = xmin.min(x);
                xmax = xmax.max(x);
                let d = dxdu(u)?;
                if k > 0 && prev_d.signum() != d.signum() {
                    if let Some(r) =
                        crate::numeric::brent(|v| dxdu(v).unwrap_or(f64::NAN), prev_u, u, 1e-15 * span, 200)
                    {
                        let xr = x_of(r)?;
                        xmin = xmin.min(xr);
                        xmax = xmax.max(xr);
                    }
                }
                prev_u = u;
                prev_d = d;
            }
            if iv == 0 {
                zero_intervals.push((f64::NEG_INFINITY, xmax));
            } else if iv + 1 == intervals.len() {
                zero_intervals.push((xmin, f64::INFINITY));
            } else {
                zero_intervals.push((xmin, xmax));
            }
        }
        let mut support = Vec::new();
        for w in zero_intervals.windows(2) {
            if w[1].0 > w[0].1 {
                support.push((w[0].1, w[1].0));
            }
        }
        if support.is_empty() {
            // past the merge time the interior gap has closed
            support.push((zero_intervals[0].1, zero_intervals.last().unwrap().0));
        }
        Ok(support)
    }

    /// Total mass of the evolved density by edge-aware quadrature of
    /// `density_at`. Frozen plateaus (rho identically 1) are located by
    /// bisection and contribute their width exactly; the liquid parts are
    /// integrated with square-root substitutions at both endpoints, which
    /// absorb the square-root edges and melting fronts.
    pub fn evolved_mass(&self, t: f64) -> Result<f64, SlopeError> {
        let support = self.evolved_support(t)?;
        let mut mass = 0.0;
        for &(a, b) in &support {
            // split into frozen plateaus and liquid segments
            let probe = 96;
            let thresh = 1.0 - 1e-4;
            let mut marks = vec![(a, self.density_at(t, a + 1e-12 * (b - a))? >= thresh)];
            let mut cur = marks[0].1;
            for k in 1..probe {
                let x = a + (b - a) * k as f64 / probe as f64;
                let frozen = self.density_at(t, x)? >= thresh;
                if frozen != cur {
                    // bisect the transition
                    let mut lo = a + (b - a) * (k - 1) as f64 / probe as f64;
                    let mut hi = x;
                    for _ in 0..60 {
                        let m = 0.5 * (lo + hi);
                        if (self.density_at(t, m)? >= thresh) == cur {
                            lo = m;
                        } else {
                            hi = m;
                        }
                    }
                    marks.push((0.5 * (lo + hi), frozen));
                    cur = frozen;
                }
            }
            marks.push((b, cur));
            let (gl_x, gl_w) = crate::numeric::gauss_legendre(48);
            for w2 in marks.windows(2) {
                let (xa, frozen) = w2[0];
                let (xb, _) = w2[1];
                if frozen {
                    mass += xb - xa;
                    continue;
                }
                let mid = 0.5 * (xa + xb);
                let sa = (mid - xa).sqrt();
                for (xk, wk) in gl_x.iter().zip(&gl_w) {
                    let s = 0.5 * sa * (xk + 1.0);
                    mass += wk * sa * s * self.density_at(t, xa + s * s)?;
                }
                let sb = (xb - mid).sqrt();
                for (xk, wk) in gl_x.iter().zip(&gl_w) {
                    let s = 0.5 * sb * (xk + 1.0);
                    mass += wk * sb * s * self.density_at(t, xb - s * s)?;
                }
            }
        }
        Ok(mass)
    }

    fn newton_root(&self, t: f64, xi: Complex64, seed: Complex64) -> Option<Complex64> {
        let mut u = seed;
        for _ in 0..80 {
            let w = self.w0(u).ok()?;
            let g = u + w * t - xi;
            let gn = g.norm();
            if gn < 1e-14 * (1.0 + xi.norm()) {
                return Some(u);
            }
            let wp = self.w0_prime(u).ok()?;
            let dg = Complex64::new(1.0, 0.0) + wp * t;
            if dg.norm() < 1e-300 {
                return None;
            }
            let step = g / dg;
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let cand = u - step * lambda;
                if let Ok(wc) = self.w0(cand) {
                    let gc = (cand + wc * t - xi).norm();
                    if gc < gn {
                        u = cand;
                        improved = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !improved {
                return None;
            }
        }
        let w = self.w0(u).ok()?;
        if (u + w * t - xi).norm() < 1e-10 * (1.0 + xi.norm()) {
            Some(u)
        } else {
            None
        }
    }

    /// Density at time t and position x from the boundary limit
    /// rho_t(x) = -arg*(f_t(x + i0)) / pi, with Richardson extrapolation in
    /// the regularization height.
    pub fn density_at(&self, t: f64, x: f64) -> Result<f64, SlopeError> {
        let etas = [1e-4, 1e-5, 1e-6];
        let mut vals = [0.0; 3];
        for (k, &eta) in etas.iter().enumerate() {
            let u = self.characteristic_foot(t, Complex64::new(x, eta))?;
            let f = self.slope0(u)?;
            vals[k] = -arg_star(f) / std::f64::consts::PI;
        }
        // fit v(eta) = a + b sqrt(eta) + c eta; the sqrt term carries the
        // boundary behavior near square-root spectral edges
        let (s0, s1, s2) = (etas[0].sqrt(), etas[1].sqrt(), etas[2].sqrt());
        let det = |a: [[f64; 3]; 3]| -> f64 {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        };
        let m = [[1.0, s0, etas[0]], [1.0, s1, etas[1]], [1.0, s2, etas[2]]];
        let d = det(m);
        let ma = [[vals[0], s0, etas[0]], [vals[1], s1, etas[1]], [vals[2], s2, etas[2]]];
        let extrap = det(ma) / d;
        Ok(extrap.clamp(0.0, 1.0))
    }

    /// Quantile trajectories gamma_i(t) for the given mass labels on the
    /// time grid, by RK4 on gamma' = arg*(f+1)/arg*(f) with a regularized
    /// right side. Labels: q >= 0 is mass q right of E+; q < 0 is mass |q|
    /// left of E-.
    pub fn quantile_trajectories(
        &self,
        labels: &[f64],
        t_grid: &[f64],
    ) -> Result<Vec<Vec<f64>>, SlopeError> {
        let (e_minus, e_plus) = self
            .rho0
            .gap_interval()
            .ok_or_else(|| SlopeError::BadProfile("no gap".into()))?;
        let mut out = Vec::with_capacity(labels.len());
        for &q in labels {
            // sign of zero distinguishes the sides: +0.0 sits at E+, -0.0 at E-
            let x0 = if q.is_sign_negative() {
                self.rho0.quantile_left(e_minus, -q).ok_or(SlopeError::OnSupport)?
            } else {
                self.rho0.quantile_right(e_plus, q).ok_or(SlopeError::OnSupport)?
            };
            let mut xs = Vec::with_capacity(t_grid.len());
            let mut x = x0;
            let mut t_cur = t_grid[0];
            xs.push(x);
            for &t_next in &t_grid[1..] {
                let dt_total = t_next - t_cur;
                let n_sub = ((dt_total / 0.02).abs().ceil() as usize).max(1);
                let h = dt_total / n_sub as f64;
                for _ in 0..n_sub {
                    if h.abs() < 1e-12 {
                        return Err(SlopeError::StiffNearEdge(t_cur));
                    }
                    let k1 = self.quantile_velocity(t_cur, x)?;
                    let k2 = self.quantile_velocity(t_cur + 0.5 * h, x + 0.5 * h * k1)?;
                    let k3 = self.quantile_velocity(t_cur + 0.5 * h, x + 0.5 * h * k2)?;
                    let k4 = self.quantile_velocity(t_cur + h, x + h * k3)?;
                    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                    t_cur += h;
                }
                t_cur = t_next;
                xs.push(x);
            }
            out.push(xs);
        }
        Ok(out)
    }

    /// gamma'(t) = arg*(f_t + 1) / arg*(f_t) evaluated just above the axis.
    pub fn quantile_velocity(&self, t: f64, x: f64) -> Result<f64, SlopeError> {
        let eta = 1e-6;
        let (f, _) = self.evolve(t, Complex64::new(x, eta))?;
        let num = arg_star(f + 1.0);
        let den = arg_star(f);
        if den.abs() < 1e-13 {
            return Err(SlopeError::StiffNearEdge(t));
        }
        Ok(num / den)
    }

    /// Direct quantile inversion at time t: the x in (x_lo, x_hi) with
    /// int_{x_lo}^{x} rho_t = mass_from_lo (trapezoid scan).
    pub fn quantile_invert(
        &self,
        t: f64,
        x_lo: f64,
        x_hi: f64,
        mass_from_lo: f64,
    ) -> Result<f64, SlopeError> {
        let n = 400;
        let h = (x_hi - x_lo) / n as f64;
        let mut acc = 0.0;
        let mut prev = self.density_at(t, x_lo)?;
        for k in 1..=n {
            let x = x_lo + h * k as f64;
            let cur = self.density_at(t, x)?;
            let add = 0.5 * (prev + cur) * h;
            if acc + add >= mass_from_lo {
                let frac = (mass_from_lo - acc) / add.max(1e-300);
                return Ok(x - h + frac * h);
            }
            acc += add;
            prev = cur;
        }
        Err(SlopeError::NoCharacteristic)
    }
}

/// arg* maps R union the closed lower half-plane to [-pi, 0]:
/// arg*(positive real) = 0, arg*(negative real) = -pi.
pub fn arg_star(z: Complex64) -> f64 {
    let a = (-z).arg() - std::f64::consts::PI;
    a.clamp(-std::f64::consts::PI, 0.0)
}

/// The symmetric two-block unit density on [-1,-1/3] and [1/3,1].
pub fn symmetric_two_block() -> DensityProfile {
    DensityProfile::new(
        vec![
            Piece { a: -1.0, b: -1.0 / 3.0, rho: 1.0 },
            Piece { a: 1.0 / 3.0, b: 1.0, rho: 1.0 },
        ],
        Some((-1.0 / 3.0, 1.0 / 3.0)),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stieltjes_log_example() {
        // rho = 1 on [0,1], z = 2: m = log 2
        let rho = DensityProfile::new(vec![Piece { a: 0.0, b: 1.0, rho: 1.0 }], None).unwrap();
        let m = stieltjes(&rho, Complex64::new(2.0, 0.0), 0).unwrap();
        assert!((m.re - 2f64.ln()).abs() < 1e-14);
        assert!(m.im.abs() < 1e-14);
    }

    #[test]
    fn stieltjes_symmetric_values() {
        let rho = symmetric_two_block();
        let z = Complex64::new(0.0, 0.0);
        assert!(stieltjes(&rho, z, 0).unwrap().norm() < 1e-14);
        assert!((stieltjes(&rho, z, 1).unwrap().re + 4.0).abs() < 1e-12);
        assert!(stieltjes(&rho, z, 2).unwrap().norm() < 1e-12);
    }

    #[test]
    fn stieltjes_derivatives_match_finite_differences() {
        let rho = symmetric_two_block();
        let pts = [
            Complex64::new(0.1, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(-0.2, 0.3),
            Complex64::new(1.7, -0.4),
        ];
        for &z in &pts {
            for k in 1..=4u8 {
                let h = 1e-6;
                let up = stieltjes(&rho, z + Complex64::new(h, 0.0), k - 1).unwrap();
                let dn = stieltjes(&rho, z - Complex64::new(h, 0.0), k - 1).unwrap();
                let fd = (up - dn) / (2.0 * h);
                let an = stieltjes(&rho, z, k).unwrap();
                assert!(
                    (fd - an).norm() <= 1e-6 * an.norm().max(1.0),
                    "order {k} at {z}: fd {fd} vs {an}"
                );
            }
        }
    }

    #[test]
    fn on_support_detected() {
        let rho = symmetric_two_block();
        assert!(matches!(
            stieltjes(&rho, Complex64::new(0.5, 0.0), 1),
            Err(SlopeError::OnSupport)
        ));
    }

    #[test]
    fn slope_symmetric_center() {
        let field = SlopeField::new(symmetric_two_block(), 0.5).unwrap();
        let f = field.slope0(Complex64::new(0.0, 0.0)).unwrap();
        assert!((f - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        let w = field.w0(Complex64::new(0.0, 0.0)).unwrap();
        assert!((w - Complex64::new(0.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn beta_factorization() {
        let rho = symmetric_two_block();
        let z = Complex64::new(0.05, 0.3);
        let f1 = SlopeField::new(rho.clone(), 0.3).unwrap().slope0(z).unwrap();
        let f2 = SlopeField::new(rho, 0.7).unwrap().slope0(z).unwrap();
        let ratio = (0.3 / 0.7) / (0.7 / 0.3);
        assert!((f1 / f2 - Complex64::new(ratio, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn pick_property_grid() {
        // Im m < 0 and Im f < 0 for Im z > 0 near the gap
        let field = SlopeField::new(symmetric_two_block(), 0.5).unwrap();
        for i in 0..20 {
            for j in 1..10 {
                let z = Complex64::new(-0.3 + 0.6 * i as f64 / 19.0, 0.02 * j as f64);
                assert!(stieltjes(&field.rho0, z, 0).unwrap().im < 0.0);
                assert!(field.slope0(z).unwrap().im < 0.0);
            }
        }
    }

    #[test]
    fn evolve_t0_is_slope() {
        let field = SlopeField::new(symmetric_two_block(), 0.5).unwrap();
        let xi = Complex64::new(0.1, 0.2);
        let (f, _) = field.evolve(0.0, xi).unwrap();
        assert!((f - field.slope0(xi).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn flow_identity_along_characteristics() {
        // w_s(z + (s-t) w_t(z)) = w_t(z), checked on characteristics whose
        // evaluation points stay in the upper half-plane
        let field = SlopeField::new(symmetric_two_block(), 0.5).unwrap();
        let (t, s) = (0.3, 0.8);
        let mut used = 0;
        for k in 0..40 {
            let u = Complex64::new(-1.2 + 2.4 * k as f64 / 39.0, 0.5);
            let w0 = field.w0(u).unwrap();
            let z1 = u + w0 * t;
            let z2 = u + w0 * s;
            if z1.im < 0.05 || z2.im < 0.05 {
                continue;
            }
            used += 1;
            let (_, wt) = field.evolve(t, z1).unwrap();
            let z2b = z1 + wt * (s - t);
            let (_, ws) = field.evolve(s, z2b).unwrap();
            assert!(
                (ws - wt).norm() < 1e-8 && (wt - w0).norm() < 1e-8,
                "flow identity residual {} at foot {u}",
                (ws - wt).norm()
            );
        }
        assert!(used >= 30);
    }

    #[test]
    fn density_t0_values() {
        let field = SlopeField::new(symmetric_two_block(), 0.5).unwrap();
        let d = field.density_at(0.0, 0.6).unwrap();
        assert!((d - 1.0).abs() < 1e-4, "density {d}");
        let d = field.density_at(0.0, 0.0).unwrap();
        assert!(d.abs() < 1e-4, "density {d}");
    }

    #[test]
    fn mass_conserved_at_positive_time() {
        let field = SlopeField::new(symmetric_two_block(), 0.5).unwrap();
        let mass = field.evolved_mass(0.5).unwrap();
        assert!(
            (mass - field.rho0.total_mass()).abs() < 1e-6,
            "mass {mass} vs {}",
            field.rho0.total_mass()
        );
    }

    #[test]
    fn quantile_symmetry() {
        // for the symmetric density at beta = 1/2, the particle-hole
        // reflection x -> t - x maps the system to itself, so the edge
        // quantiles obey gamma_0(t) + gamma_{-1}(t) = t (they are mirror
        // images about the drifting center x = t/2, and meet at the cusp
        // (x_c, t_c) = (1/2, 1))
        let field = SlopeField::new(symmetric_two_block(), 0.5).unwrap();
        let grid: Vec<f64> = (0..=8).map(|k| k as f64 * 0.1).collect();
        let gs = field.quantile_trajectories(&[0.0, -0.0], &grid).unwrap();
        for (k, t) in grid.iter().enumerate() {
            let sum = gs[0][k] + gs[1][k];
            assert!((sum - t).abs() < 1e-4, "symmetry violated: {sum} vs {t} at step {k}");
        }
    }
}
