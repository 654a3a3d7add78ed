//! Fredholm gap probabilities det(I - chi K) by Gauss-Legendre Nystrom
//! discretization over finitely many (time, interval) blocks.

use super::pearcey::{kernel_pearcey_batch, PearceyQuad};
use super::KernelError;
use crate::numeric::{gauss_legendre, lu_log_det};

/// A two-time kernel evaluated on grids (batch interface).
pub trait Kernel2T {
    fn eval_block(&self, ti: f64, xs: &[f64], tj: f64, ys: &[f64]) -> Result<Vec<Vec<f64>>, KernelError>;
}

/// The extended Pearcey kernel as a Fredholm operator.
pub struct PearceyOperator {
    pub quad: PearceyQuad,
}

impl Default for PearceyOperator {
    fn default() -> Self {
        PearceyOperator { quad: PearceyQuad::default() }
    }
}

impl Kernel2T for PearceyOperator {
    fn eval_block(&self, ti: f64, xs: &[f64], tj: f64, ys: &[f64]) -> Result<Vec<Vec<f64>>, KernelError> {
        // K(s, x; t, y) acting on f(t, y): rows are (ti, x), columns (tj, y)
        kernel_pearcey_batch(&self.quad, ti, xs, tj, ys)
    }
}

/// Gap event: no particles in `intervals[i]` at `times[i]`.
#[derive(Clone, Debug)]
pub struct GapSpec {
    pub times: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
}

/// det(I - chi K): Nystrom with m Gauss-Legendre nodes per interval,
/// converged when doubling m changes the value by < 1e-5.
pub fn fredholm_gap<K: Kernel2T>(spec: &GapSpec, kernel: &K, m: usize) -> Result<f64, KernelError> {
    assert_eq!(spec.times.len(), spec.intervals.len());
    if spec.times.is_empty() {
        return Ok(1.0);
    }
    let v1 = nystrom_det(spec, kernel, m)?;
    let v2 = nystrom_det(spec, kernel, 2 * m)?;
    let change = (v2 - v1).abs();
    if change > 1e-5 {
        return Err(KernelError::NotConverged(change));
    }
    if !(-1e-6..=1.0 + 1e-6).contains(&v2) {
        return Err(KernelError::NotConverged(v2));
    }
    Ok(v2.clamp(0.0, 1.0))
}

fn nystrom_det<K: Kernel2T>(spec: &GapSpec, kernel: &K, m: usize) -> Result<f64, KernelError> {
    let (gx, gw) = gauss_legendre(m);
    let blocks = spec.times.len();
    // nodes and weights per block
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(blocks);
    let mut ws: Vec<Vec<f64>> = Vec::with_capacity(blocks);
    for &(a, b) in &spec.intervals {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        xs.push(gx.iter().map(|&x| mid + half * x).collect());
        ws.push(gw.iter().map(|&w| half * w).collect());
    }
    let n = blocks * m;
    let mut mat = vec![vec![0.0f64; n]; n];
    for i in 0..blocks {
        for j in 0..blocks {
            let kb = kernel.eval_block(spec.times[i], &xs[i], spec.times[j], &xs[j])?;
            for a in 0..m {
                for b in 0..m {
                    let sym = (ws[i][a] * ws[j][b]).sqrt();
                    mat[i * m + a][j * m + b] = -sym * kb[a][b];
                }
            }
        }
    }
    for (r, row) in mat.iter_mut().enumerate() {
        row[r] += 1.0;
    }
    match lu_log_det(&mut mat) {
        None => Ok(0.0),
        Some((l, s)) => Ok(s as f64 * l.exp()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_is_one() {
        let spec = GapSpec { times: vec![], intervals: vec![] };
        let op = PearceyOperator::default();
        assert_eq!(fredholm_gap(&spec, &op, 10).unwrap(), 1.0);
    }

    #[test]
    fn single_time_gap_in_unit_range() {
        let spec = GapSpec { times: vec![0.0], intervals: vec![(-1.0, 1.0)] };
        let op = PearceyOperator::default();
        let p = fredholm_gap(&spec, &op, 12).unwrap();
        assert!(p > 0.0 && p < 1.0, "gap probability {p}");
    }

    #[test]
    fn interval_monotonicity() {
        let op = PearceyOperator::default();
        let mut prev = 1.0;
        for half in [0.25, 0.5, 0.75, 1.0] {
            let spec = GapSpec { times: vec![0.0], intervals: vec![(-half, half)] };
            let p = fredholm_gap(&spec, &op, 12).unwrap();
            assert!(p <= prev + 1e-8, "gap not monotone: {p} after {prev}");
            prev = p;
        }
    }

    #[test]
    fn two_time_gap_below_single() {
        let op = PearceyOperator::default();
        let single = fredholm_gap(
            &GapSpec { times: vec![0.0], intervals: vec![(-0.5, 0.5)] },
            &op,
            10,
        )
        .unwrap();
        let double = fredholm_gap(
            &GapSpec { times: vec![0.0, 0.6], intervals: vec![(-0.5, 0.5), (-0.5, 0.5)] },
            &op,
            10,
        )
        .unwrap();
        assert!(double <= single + 1e-8, "two-time {double} vs single {single}");
    }
}
