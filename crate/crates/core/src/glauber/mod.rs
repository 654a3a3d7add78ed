//! Single-site Markov chain samplers for uniform non-intersecting Bernoulli
//! paths and uniform lozenge tilings, with the monotone couplings used to
//! compare chains driven by a shared update stream.
//!
//! Updates are random-scan Metropolis moves with a uniform target: a proposal
//! `(t, i, e)` adds `e = +-1` to path `i` at an interior time `t` and is
//! accepted exactly when the result is still an admissible ensemble. The
//! analogous tiling move raises or lowers the height function at an interior
//! vertex.

use crate::lattice::{
    height_from_tiling, tiling_from_height, Boundary, HeightFunction, LatticeDomain, LatticeError,
    PathEnsemble, PathSpan, Tiling,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GlauberError {
    #[error("no admissible configuration for the given boundary data")]
    Infeasible,
    #[error("update site out of range")]
    SiteOutOfRange,
    #[error("state space larger than the enumeration guard ({0} partial states)")]
    TooLarge(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Boundary data for a family of `m` paths over times `0..=horizon`.
#[derive(Clone, Debug)]
pub struct PathSystem {
    pub entrance: Vec<i64>,
    pub exit: Vec<i64>,
    pub left: Boundary,
    pub right: Boundary,
    pub horizon: usize,
}

impl PathSystem {
    pub fn num_paths(&self) -> usize {
        self.entrance.len()
    }

    fn check(&self) -> Result<(), GlauberError> {
        if self.entrance.len() != self.exit.len() || self.entrance.is_empty() || self.horizon < 1 {
            return Err(GlauberError::Infeasible);
        }
        for w in self.entrance.windows(2) {
            if w[0] >= w[1] {
                return Err(GlauberError::Infeasible);
            }
        }
        for w in self.exit.windows(2) {
            if w[0] >= w[1] {
                return Err(GlauberError::Infeasible);
            }
        }
        Ok(())
    }
}

/// Mutable Glauber chain on path configurations.
#[derive(Clone, Debug)]
pub struct GlauberState {
    pub system: PathSystem,
    /// positions\[i\]\[t\] for path i at time t
    pub positions: Vec<Vec<i64>>,
    rng: ChaCha8Rng,
    pub sweep_count: u64,
}

/// One proposed single-site update.
#[derive(Clone, Copy, Debug)]
pub struct Site {
    pub t: usize,
    pub path: usize,
    pub e: i64,
}

impl GlauberState {
    /// Starts from the unique lowest admissible configuration.
    pub fn new(system: PathSystem, seed: u64) -> Result<Self, GlauberError> {
        system.check()?;
        let positions = lowest_configuration(&system)?;
        Ok(GlauberState {
            system,
            positions,
            rng: ChaCha8Rng::seed_from_u64(seed),
            sweep_count: 0,
        })
    }

    pub fn ensemble(&self) -> PathEnsemble {
        PathEnsemble {
            first_index: 0,
            paths: self
                .positions
                .iter()
                .map(|p| vec![PathSpan { t_start: 0, positions: p.clone() }])
                .collect(),
        }
    }

    fn draw_site(&mut self) -> Site {
        let m = self.system.num_paths();
        let r = self.system.horizon;
        let t = self.rng.gen_range(1..r);
        let path = self.rng.gen_range(0..m);
        let e = if self.rng.gen::<bool>() { 1 } else { -1 };
        Site { t, path, e }
    }

    /// Attempts the update; returns whether it was accepted.
    pub fn step(&mut self, site: Site) -> Result<bool, GlauberError> {
        let Site { t, path, e } = site;
        if t == 0 || t >= self.system.horizon || path >= self.system.num_paths() || e.abs() != 1 {
            return Err(GlauberError::SiteOutOfRange);
        }
        let cand = self.positions[path][t] + e;
        if self.admissible(path, t, cand) {
            self.positions[path][t] = cand;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn admissible(&self, path: usize, t: usize, x: i64) -> bool {
        let p = &self.positions[path];
        // Bernoulli increments around t
        let dl = x - p[t - 1];
        if dl != 0 && dl != 1 {
            return false;
        }
        let dr = p[t + 1] - x;
        if dr != 0 && dr != 1 {
            return false;
        }
        // non-intersection with neighbors (consecutive labels: strict order)
        if path > 0 && self.positions[path - 1][t] >= x {
            return false;
        }
        if path + 1 < self.positions.len() && self.positions[path + 1][t] <= x {
            return false;
        }
        if let Some(f) = self.system.left.at(t) {
            if x < f {
                return false;
            }
        }
        if let Some(g) = self.system.right.at(t) {
            if x > g {
                return false;
            }
        }
        true
    }

    /// One sweep = (number of interior sites) random-scan update attempts.
    pub fn sweep(&mut self) {
        let n_sites = self.system.num_paths() * (self.system.horizon - 1);
        for _ in 0..n_sites {
            let s = self.draw_site();
            let _ = self.step(s);
        }
        self.sweep_count += 1;
    }
}

/// Default burn-in: 10 * ceil(log2(sites) + 1) sweeps of all sites.
pub fn default_burn_in_sweeps(n_sites: usize) -> usize {
    10 * ((n_sites.max(2) as f64).log2().ceil() as usize + 1)
}

/// Pointwise-lowest admissible configuration for the boundary data.
fn lowest_configuration(system: &PathSystem) -> Result<Vec<Vec<i64>>, GlauberError> {
    let m = system.num_paths();
    let r = system.horizon;
    let mut paths: Vec<Vec<i64>> = Vec::with_capacity(m);
    for i in 0..m {
        // obstacle from below: left boundary and the previous path + 1
        let mut low = vec![i64::MIN / 4; r + 1];
        for (t, l) in low.iter_mut().enumerate() {
            if let Some(f) = system.left.at(t) {
                *l = f;
            }
            if i > 0 {
                *l = (*l).max(paths[i - 1][t] + 1);
            }
        }
        // closure: non-decreasing forward, rise <= 1 backward
        for t in 1..=r {
            let prev = low[t - 1];
            if low[t] < prev {
                low[t] = prev;
            }
        }
        for t in (0..r).rev() {
            let next = low[t + 1] - 1;
            if low[t] < next {
                low[t] = next;
            }
        }
        let d = system.entrance[i];
        let e = system.exit[i];
        let mut b = vec![0i64; r + 1];
        for t in 0..=r {
            let ramp = e - (r as i64 - t as i64);
            b[t] = d.max(ramp).max(low[t]);
        }
        if b[0] != d || b[r] != e {
            return Err(GlauberError::Infeasible);
        }
        for t in 0..r {
            let s = b[t + 1] - b[t];
            if s != 0 && s != 1 {
                return Err(GlauberError::Infeasible);
            }
        }
        for (t, bt) in b.iter().enumerate() {
            if let Some(g) = system.right.at(t) {
                if *bt > g {
                    return Err(GlauberError::Infeasible);
                }
            }
        }
        paths.push(b);
    }
    Ok(paths)
}

/// Samples an approximately uniform path ensemble after `sweeps` sweeps.
pub fn sample_uniform_paths(
    system: &PathSystem,
    sweeps: usize,
    seed: u64,
) -> Result<PathEnsemble, GlauberError> {
    let mut st = GlauberState::new(system.clone(), seed)?;
    for _ in 0..sweeps {
        st.sweep();
    }
    Ok(st.ensemble())
}

/// Exhaustively enumerates all admissible configurations, column by column.
pub fn enumerate_configs(system: &PathSystem) -> Result<Vec<Vec<Vec<i64>>>, GlauberError> {
    system.check()?;
    let m = system.num_paths();
    let r = system.horizon;
    let guard = 1_000_000usize;
    // partial trajectories, extended one time column at a time
    let mut partial: Vec<Vec<Vec<i64>>> = vec![vec![system.entrance.clone()]];
    let mut total = 1usize;
    for t in 1..=r {
        let mut next: Vec<Vec<Vec<i64>>> = Vec::new();
        for traj in partial.iter() {
            let cur = traj.last().unwrap();
            let mut stack: Vec<(usize, Vec<i64>)> = vec![(0, Vec::new())];
            while let Some((i, col)) = stack.pop() {
                if i == m {
                    let mut nt = traj.clone();
                    nt.push(col);
                    next.push(nt);
                    total += 1;
                    if total > guard {
                        return Err(GlauberError::TooLarge(total));
                    }
                    continue;
                }
                for e in 0..=1i64 {
                    let x = cur[i] + e;
                    if i > 0 && x <= col[i - 1] {
                        continue;
                    }
                    if let Some(f) = system.left.at(t) {
                        if x < f {
                            continue;
                        }
                    }
                    if let Some(g) = system.right.at(t) {
                        if x > g {
                            continue;
                        }
                    }
                    // can still reach the exit
                    let remain = r - t;
                    let need = system.exit[i] - x;
                    if need < 0 || need > remain as i64 {
                        continue;
                    }
                    let mut c2 = col.clone();
                    c2.push(x);
                    stack.push((i + 1, c2));
                }
            }
        }
        partial = next;
        if partial.is_empty() {
            return Ok(Vec::new());
        }
    }
    // transpose: per config, paths[i][t]
    let mut out = Vec::with_capacity(partial.len());
    for traj in partial {
        let mut cfg = vec![vec![0i64; r + 1]; m];
        for (t, col) in traj.iter().enumerate() {
            for (i, row) in cfg.iter_mut().enumerate() {
                row[t] = col[i];
            }
        }
        out.push(cfg);
    }
    Ok(out)
}

/// Two chains driven by one update stream, with boundary data within `K`.
pub struct CoupledPair {
    pub a: GlauberState,
    pub b: GlauberState,
    pub bound: i64,
    rng: ChaCha8Rng,
}

impl CoupledPair {
    pub fn new(sys_a: PathSystem, sys_b: PathSystem, bound: i64, seed: u64) -> Result<Self, GlauberError> {
        let a = GlauberState::new(sys_a, 0)?;
        let b = GlauberState::new(sys_b, 0)?;
        if a.system.num_paths() != b.system.num_paths() || a.system.horizon != b.system.horizon {
            return Err(GlauberError::Infeasible);
        }
        Ok(CoupledPair { a, b, bound, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn max_difference(&self) -> i64 {
        let mut d = 0;
        for (pa, pb) in self.a.positions.iter().zip(&self.b.positions) {
            for (xa, xb) in pa.iter().zip(pb) {
                d = d.max((xa - xb).abs());
            }
        }
        d
    }

    /// Runs `updates` shared single-site updates, recording the max
    /// difference after every accepted update.
    pub fn run(&mut self, updates: usize) -> Vec<i64> {
        let m = self.a.system.num_paths();
        let r = self.a.system.horizon;
        let mut trace = vec![self.max_difference()];
        for _ in 0..updates {
            let t = self.rng.gen_range(1..r);
            let path = self.rng.gen_range(0..m);
            let e = if self.rng.gen::<bool>() { 1 } else { -1 };
            let site = Site { t, path, e };
            let acc_a = self.a.step(site).unwrap();
            let acc_b = self.b.step(site).unwrap();
            if acc_a || acc_b {
                trace.push(self.max_difference());
            }
        }
        trace
    }
}

/// Glauber chain on height functions of a tileable domain: single flips
/// `H(v) -> H(v) +- 1` at interior vertices.
pub struct HeightState {
    pub height: HeightFunction,
    interior: Vec<(i64, i64)>,
    /// per interior vertex: (neighbor vertex, lo, hi) bounds on H(nb) - H(v)
    constraints: Vec<Vec<((i64, i64), i64, i64)>>,
    rng: ChaCha8Rng,
}

impl HeightState {
    pub fn new(domain: &LatticeDomain, seed: u64) -> Result<Self, GlauberError> {
        let height = lowest_height(domain)?;
        let boundary: std::collections::HashSet<(i64, i64)> =
            domain.boundary_cycle().iter().copied().collect();
        let interior: Vec<(i64, i64)> = domain
            .vertices()
            .iter()
            .copied()
            .filter(|v| !boundary.contains(v))
            .collect();
        let mut adj: BTreeMap<(i64, i64), Vec<((i64, i64), i64, i64)>> = BTreeMap::new();
        for e in domain.edges() {
            let (a, b) = (e.from, e.to());
            let (lo, hi) = match e.dir {
                crate::lattice::EdgeDir::Horizontal | crate::lattice::EdgeDir::Diagonal => (0, 1),
                crate::lattice::EdgeDir::Vertical => (-1, 0),
            };
            adj.entry(a).or_default().push((b, lo, hi));
            adj.entry(b).or_default().push((a, -hi, -lo));
        }
        let constraints = interior
            .iter()
            .map(|v| adj.get(v).cloned().unwrap_or_default())
            .collect();
        Ok(HeightState { height, interior, constraints, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn n_sites(&self) -> usize {
        self.interior.len()
    }

    pub fn try_flip(&mut self, site: usize, e: i64) -> bool {
        let v = self.interior[site];
        let hv = self.height.values[&v] + e;
        for &(w, lo, hi) in &self.constraints[site] {
            let inc = self.height.values[&w] - hv;
            if inc < lo || inc > hi {
                return false;
            }
        }
        *self.height.values.get_mut(&v).unwrap() = hv;
        true
    }

    pub fn sweep(&mut self) {
        for _ in 0..self.interior.len().max(1) {
            let site = self.rng.gen_range(0..self.interior.len());
            let e = if self.rng.gen::<bool>() { 1 } else { -1 };
            self.try_flip(site, e);
        }
    }
}

/// The pointwise-lowest height function of a tileable domain.
pub fn lowest_height(domain: &LatticeDomain) -> Result<HeightFunction, GlauberError> {
    extremal_height(domain, false)
}

/// The pointwise-highest height function of a tileable domain.
pub fn highest_height(domain: &LatticeDomain) -> Result<HeightFunction, GlauberError> {
    extremal_height(domain, true)
}

fn extremal_height(domain: &LatticeDomain, high: bool) -> Result<HeightFunction, GlauberError> {
    let boundary = crate::lattice::boundary_height(domain)?;
    let bvals: BTreeMap<(i64, i64), i64> = boundary.into_iter().collect();
    let mut values: BTreeMap<(i64, i64), i64> = bvals.clone();
    let mut edges: Vec<((i64, i64), (i64, i64), i64, i64)> = Vec::new();
    for e in domain.edges() {
        let (a, b) = (e.from, e.to());
        let (lo, hi) = match e.dir {
            crate::lattice::EdgeDir::Horizontal | crate::lattice::EdgeDir::Diagonal => (0, 1),
            crate::lattice::EdgeDir::Vertical => (-1, 0),
        };
        edges.push((a, b, lo, hi));
    }
    let init = if high { i64::MAX / 4 } else { i64::MIN / 4 };
    for v in domain.vertices() {
        values.entry(*v).or_insert(init);
    }
    // Bellman relaxation of the difference constraints lo <= H(b)-H(a) <= hi
    let nv = domain.vertices().len();
    for round in 0..=nv {
        let mut changed = false;
        for &(a, b, lo, hi) in &edges {
            if high {
                let bound_b = values[&a] + hi;
                if values[&b] > bound_b {
                    if bvals.contains_key(&b) {
                        return Err(GlauberError::Infeasible);
                    }
                    values.insert(b, bound_b);
                    changed = true;
                }
                let bound_a = values[&b] - lo;
                if values[&a] > bound_a {
                    if bvals.contains_key(&a) {
                        return Err(GlauberError::Infeasible);
                    }
                    values.insert(a, bound_a);
                    changed = true;
                }
            } else {
                let bound_b = values[&a] + lo;
                if values[&b] < bound_b {
                    if bvals.contains_key(&b) {
                        return Err(GlauberError::Infeasible);
                    }
                    values.insert(b, bound_b);
                    changed = true;
                }
                let bound_a = values[&b] - hi;
                if values[&a] < bound_a {
                    if bvals.contains_key(&a) {
                        return Err(GlauberError::Infeasible);
                    }
                    values.insert(a, bound_a);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        if round == nv {
            return Err(GlauberError::Infeasible);
        }
    }
    let h = HeightFunction { domain: domain.clone(), values };
    h.validate().map_err(|_| GlauberError::Infeasible)?;
    Ok(h)
}

/// Samples an approximately uniform tiling via height flips.
pub fn sample_uniform_tiling(
    domain: &LatticeDomain,
    sweeps: usize,
    seed: u64,
) -> Result<Tiling, GlauberError> {
    let mut st = HeightState::new(domain, seed)?;
    for _ in 0..sweeps {
        st.sweep();
    }
    Ok(tiling_from_height(&st.height)?)
}

/// Height function of a tiling, normalized so the boundary minimum is zero.
pub fn height_of_tiling(domain: &LatticeDomain, t: &Tiling) -> Result<HeightFunction, GlauberError> {
    let anchor = *domain.vertices().first().ok_or(GlauberError::Infeasible)?;
    Ok(height_from_tiling(domain, t, anchor, 0)?.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_system(entrance: Vec<i64>, exit: Vec<i64>, horizon: usize) -> PathSystem {
        PathSystem { entrance, exit, left: Boundary::NegInf, right: Boundary::PosInf, horizon }
    }

    #[test]
    fn lowest_config_is_admissible_and_low() {
        let sys = free_system(vec![0, 2], vec![1, 3], 3);
        let st = GlauberState::new(sys, 1).unwrap();
        assert_eq!(st.positions[0], vec![0, 0, 0, 1]);
        assert_eq!(st.positions[1], vec![2, 2, 2, 3]);
    }

    #[test]
    fn single_path_step_rules() {
        // flat path at 0: the +1 move at t=1 breaks the step rule
        let sys = free_system(vec![0], vec![0], 2);
        let mut st = GlauberState::new(sys, 1).unwrap();
        assert_eq!(st.positions[0], vec![0, 0, 0]);
        assert!(!st.step(Site { t: 1, path: 0, e: 1 }).unwrap());

        // with b(0)=0, b(2)=1 the middle site can move up
        let sys = free_system(vec![0], vec![1], 2);
        let mut st = GlauberState::new(sys, 1).unwrap();
        assert_eq!(st.positions[0], vec![0, 0, 1]);
        assert!(st.step(Site { t: 1, path: 0, e: 1 }).unwrap());
        assert_eq!(st.positions[0], vec![0, 1, 1]);
    }

    #[test]
    fn non_intersection_blocks_moves() {
        let sys = free_system(vec![0, 1], vec![1, 2], 2);
        let mut st = GlauberState::new(sys, 1).unwrap();
        assert!(!st.step(Site { t: 1, path: 1, e: -1 }).unwrap());
    }

    #[test]
    fn enumerate_single_path_free_exit_variants() {
        // one path, span [0,2], exits 0..2: four paths total
        let mut count = 0;
        for exit in 0..=2 {
            let sys = free_system(vec![0], vec![exit], 2);
            count += enumerate_configs(&sys).unwrap().len();
        }
        assert_eq!(count, 4); // (000),(001),(011),(111)
    }

    #[test]
    fn infeasible_exit_below_entrance() {
        let sys = free_system(vec![5], vec![3], 4);
        assert!(enumerate_configs(&sys).unwrap().is_empty());
        assert!(GlauberState::new(sys, 1).is_err());
    }

    #[test]
    fn degenerate_zero_slack() {
        let sys = free_system(vec![0, 5], vec![0, 5], 4);
        let cfgs = enumerate_configs(&sys).unwrap();
        assert_eq!(cfgs.len(), 1);
        let e = sample_uniform_paths(&sys, 5, 7).unwrap();
        assert_eq!(e.position(0, 2), Some(0));
        assert_eq!(e.position(1, 2), Some(5));
    }

    #[test]
    fn coupled_identical_systems_stay_identical() {
        let sys = free_system(vec![0, 2], vec![2, 4], 4);
        let mut pair = CoupledPair::new(sys.clone(), sys, 0, 11).unwrap();
        let trace = pair.run(2000);
        assert!(trace.iter().all(|&d| d == 0));
    }

    #[test]
    fn extremal_heights_bracket() {
        let d = LatticeDomain::hexagon(2, 2, 2);
        let lo = lowest_height(&d).unwrap();
        let hi = highest_height(&d).unwrap();
        for v in d.vertices() {
            assert!(lo.values[v] <= hi.values[v]);
        }
        tiling_from_height(&lo).unwrap();
        tiling_from_height(&hi).unwrap();
    }

    #[test]
    fn unit_hexagon_two_tilings_sampled() {
        let d = LatticeDomain::hexagon(1, 1, 1);
        let mut seen = std::collections::HashSet::new();
        for seed in 0..40 {
            let t = sample_uniform_tiling(&d, 20, seed).unwrap();
            seen.insert(format!("{:?}", t.lozenges()));
        }
        assert_eq!(seen.len(), 2);
    }
}
