//! Brute-force joint occupation probabilities by exhaustive weighted
//! enumeration of all trajectories of the walk — the independent oracle
//! against which determinantal values are checked.

use super::{KernelError, SpaceTimePoint};
use crate::nbrw::{enumerate_transitions, ParticleConfig};
use std::collections::BTreeMap;

/// Exact probability that every requested point is occupied:
/// P(for all (t, x) in points: some particle sits at x at time t).
pub fn brute_force_correlations(
    d: &ParticleConfig,
    beta: f64,
    horizon: i64,
    points: &[SpaceTimePoint],
) -> Result<f64, KernelError> {
    let k = d.len() as f64;
    let branches = 2f64.powf(k * horizon as f64);
    if branches > 1e7 {
        return Err(KernelError::TooLarge(branches));
    }
    for p in points {
        if p.t < 1 {
            return Err(KernelError::BadTime(p.t));
        }
        if p.t > horizon {
            return Err(KernelError::BadTime(p.t));
        }
    }
    // group the requested points by time
    let mut by_time: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for p in points {
        by_time.entry(p.t).or_default().push(p.x);
    }
    let mut total = 0.0;
    rec(&d.positions, beta, 1, horizon, &by_time, 1.0, true, &mut total);
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn rec(
    cur: &[i64],
    beta: f64,
    t: i64,
    horizon: i64,
    by_time: &BTreeMap<i64, Vec<i64>>,
    weight: f64,
    ok_so_far: bool,
    total: &mut f64,
) {
    if !ok_so_far {
        return;
    }
    if t > horizon {
        *total += weight;
        return;
    }
    let cfg = ParticleConfig { first_label: 0, positions: cur.to_vec() };
    for (y, w) in enumerate_transitions(&cfg, beta) {
        let ok = match by_time.get(&t) {
            None => true,
            Some(xs) => xs.iter().all(|x| y.positions.binary_search(x).is_ok()),
        };
        rec(&y.positions, beta, t + 1, horizon, by_time, weight * w, ok, total);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_walker_one_step() {
        let d = ParticleConfig::new(0, vec![5]).unwrap();
        let p = brute_force_correlations(&d, 0.3, 1, &[SpaceTimePoint { t: 1, x: 6 }]).unwrap();
        assert!((p - 0.3).abs() < 1e-14);
        let p = brute_force_correlations(&d, 0.3, 1, &[SpaceTimePoint { t: 1, x: 5 }]).unwrap();
        assert!((p - 0.7).abs() < 1e-14);
    }

    #[test]
    fn impossible_points_probability_zero() {
        // two particles cannot occupy three sites at one time
        let d = ParticleConfig::new(0, vec![0, 3]).unwrap();
        let pts = [
            SpaceTimePoint { t: 2, x: 0 },
            SpaceTimePoint { t: 2, x: 1 },
            SpaceTimePoint { t: 2, x: 3 },
        ];
        let p = brute_force_correlations(&d, 0.4, 2, &pts).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn one_point_sums_to_particle_count() {
        let d = ParticleConfig::new(0, vec![0, 3]).unwrap();
        let t = 2;
        let mut sum = 0.0;
        for x in -2..8 {
            sum += brute_force_correlations(&d, 0.4, t, &[SpaceTimePoint { t, x }]).unwrap();
        }
        assert!((sum - 2.0).abs() < 1e-12, "sum {sum}");
    }
}
