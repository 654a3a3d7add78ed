use super::domain::{LatticeDomain, Orient};
use super::height::HeightFunction;
use super::{LatticeError, Lozenge, LozengeType, Tiling};
use std::collections::BTreeMap;

/// Left/right boundary for a family of paths; `Value` holds the bound per
/// time offset from the common start time.
#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    NegInf,
    PosInf,
    Values(Vec<i64>),
}

impl Boundary {
    pub fn at(&self, offset: usize) -> Option<i64> {
        match self {
            Boundary::NegInf | Boundary::PosInf => None,
            Boundary::Values(v) => Some(v[offset]),
        }
    }
}

/// A maximal run of consecutive times on one path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSpan {
    pub t_start: i64,
    pub positions: Vec<i64>,
}

impl PathSpan {
    pub fn t_end(&self) -> i64 {
        self.t_start + self.positions.len() as i64 - 1
    }

    pub fn at(&self, t: i64) -> Option<i64> {
        if t < self.t_start || t > self.t_end() {
            None
        } else {
            Some(self.positions[(t - self.t_start) as usize])
        }
    }
}

/// A family of non-intersecting Bernoulli paths indexed by a contiguous
/// label range; each path's time span is a sorted list of disjoint runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathEnsemble {
    pub first_index: i64,
    pub paths: Vec<Vec<PathSpan>>,
}

impl PathEnsemble {
    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn index_range(&self) -> std::ops::Range<i64> {
        self.first_index..self.first_index + self.paths.len() as i64
    }

    pub fn position(&self, index: i64, t: i64) -> Option<i64> {
        let i = (index - self.first_index) as usize;
        self.paths.get(i)?.iter().find_map(|s| s.at(t))
    }

    /// Checks the Bernoulli step rule and pairwise non-intersection
    /// (`b_i(t) - i <= b_j(t) - j` for `i < j` on shared times).
    pub fn validate(&self) -> Result<(), LatticeError> {
        for spans in &self.paths {
            for s in spans {
                for w in s.positions.windows(2) {
                    let d = w[1] - w[0];
                    if d != 0 && d != 1 {
                        return Err(LatticeError::InconsistentPaths);
                    }
                }
            }
            for w in spans.windows(2) {
                if w[1].t_start <= w[0].t_end() {
                    return Err(LatticeError::InconsistentPaths);
                }
            }
        }
        let r = self.index_range();
        for i in r.clone() {
            for j in i + 1..r.end {
                let all_t: Vec<i64> = self.times_of(i);
                for t in all_t {
                    if let (Some(bi), Some(bj)) = (self.position(i, t), self.position(j, t)) {
                        if bi - i > bj - j {
                            return Err(LatticeError::InconsistentPaths);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn times_of(&self, index: i64) -> Vec<i64> {
        let i = (index - self.first_index) as usize;
        self.paths[i]
            .iter()
            .flat_map(|s| s.t_start..=s.t_end())
            .collect()
    }

    /// All occupied (t, x) pairs with path indices.
    pub fn points(&self) -> Vec<(i64, i64, i64)> {
        let mut out = Vec::new();
        for (k, spans) in self.paths.iter().enumerate() {
            let idx = self.first_index + k as i64;
            for s in spans {
                for (off, &x) in s.positions.iter().enumerate() {
                    out.push((s.t_start + off as i64, x, idx));
                }
            }
        }
        out.sort();
        out
    }
}

/// Extracts the path ensemble of a height function: `b_i(t)` is the x with
/// `H(x,t) = i` and `H(x+1,t) = i+1`. Indices are normalized so the lowest
/// path present at the earliest time has index 0.
pub fn paths_from_height(height: &HeightFunction) -> PathEnsemble {
    // level -> (t -> x); a crossing counts only when the horizontal edge
    // (x,t)-(x+1,t) belongs to the domain
    let mut levels: BTreeMap<i64, BTreeMap<i64, i64>> = BTreeMap::new();
    for (&(x, t), &h) in &height.values {
        if height.get(&(x + 1, t)) == Some(h + 1) {
            let above = super::Face::up(x, t);
            let below = super::Face::down(x, t - 1);
            if height.domain.contains_face(&above) || height.domain.contains_face(&below) {
                levels.entry(h).or_default().insert(t, x);
            }
        }
    }
    if levels.is_empty() {
        return PathEnsemble { first_index: 0, paths: Vec::new() };
    }
    // normalization: earliest time overall, then lowest level present there
    let t_min = levels.values().flat_map(|m| m.keys().copied()).min().unwrap();
    let base = levels
        .iter()
        .filter(|(_, m)| m.contains_key(&t_min))
        .map(|(&lvl, _)| lvl)
        .min()
        .unwrap();
    let lvl_lo = *levels.keys().next().unwrap();
    let lvl_hi = *levels.keys().next_back().unwrap();
    let mut paths = Vec::new();
    for lvl in lvl_lo..=lvl_hi {
        let mut spans: Vec<PathSpan> = Vec::new();
        if let Some(m) = levels.get(&lvl) {
            for (&t, &x) in m {
                match spans.last_mut() {
                    Some(s) if t == s.t_end() + 1 && (0..=1).contains(&(x - *s.positions.last().unwrap())) => {
                        s.positions.push(x)
                    }
                    _ => spans.push(PathSpan { t_start: t, positions: vec![x] }),
                }
            }
        }
        paths.push(spans);
    }
    PathEnsemble { first_index: lvl_lo - base, paths }
}

/// Rebuilds a tiling from a path ensemble on a given domain: jumps become
/// type-2 lozenges, non-jumps type-3, and all remaining faces are filled
/// with type-1 lozenges.
pub fn tiling_from_paths(ensemble: &PathEnsemble, domain: &LatticeDomain) -> Result<Tiling, LatticeError> {
    ensemble.validate()?;
    let mut lozenges = Vec::new();
    let mut covered: BTreeMap<super::Face, ()> = BTreeMap::new();
    let cover = |loz: Lozenge, covered: &mut BTreeMap<super::Face, ()>| -> Result<(), LatticeError> {
        for f in loz.faces() {
            if !domain.contains_face(&f) || covered.insert(f, ()).is_some() {
                return Err(LatticeError::InconsistentPaths);
            }
        }
        Ok(())
    };
    for spans in &ensemble.paths {
        for s in spans {
            for (off, w) in s.positions.windows(2).enumerate() {
                let t = s.t_start + off as i64;
                let kind = if w[1] == w[0] + 1 { LozengeType::Two } else { LozengeType::Three };
                let loz = Lozenge { x: w[0], t, kind };
                cover(loz, &mut covered)?;
                lozenges.push(loz);
            }
        }
    }
    // fill with vertical (type-1) lozenges
    for f in domain.faces() {
        if f.orient == Orient::Down && !covered.contains_key(f) {
            let partner = super::Face::up(f.x, f.t + 1);
            if !domain.contains_face(&partner) || covered.contains_key(&partner) {
                return Err(LatticeError::InconsistentPaths);
            }
            let loz = Lozenge { x: f.x, t: f.t, kind: LozengeType::One };
            cover(loz, &mut covered)?;
            lozenges.push(loz);
        }
    }
    if covered.len() != domain.num_faces() {
        return Err(LatticeError::InconsistentPaths);
    }
    Ok(Tiling::new(lozenges))
}

/// Realizes a path ensemble as a tiling of a synthesized staircase domain:
/// takes the step lozenges, declares the full face range of each time slab
/// between the extreme paths present there, and closes the remaining faces
/// with type-1 lozenges. Fails when no such completion exists.
pub fn realize_on_staircase(ensemble: &PathEnsemble) -> Result<(LatticeDomain, Tiling), LatticeError> {
    ensemble.validate()?;
    let mut steps: Vec<Lozenge> = Vec::new();
    for spans in &ensemble.paths {
        for s in spans {
            for (off, w) in s.positions.windows(2).enumerate() {
                let t = s.t_start + off as i64;
                let kind = if w[1] == w[0] + 1 { LozengeType::Two } else { LozengeType::Three };
                steps.push(Lozenge { x: w[0], t, kind });
            }
        }
    }
    if steps.is_empty() {
        return Err(LatticeError::InconsistentPaths);
    }
    let mut covered: BTreeMap<super::Face, Lozenge> = BTreeMap::new();
    for s in &steps {
        for f in s.faces() {
            if covered.insert(f, *s).is_some() {
                return Err(LatticeError::InconsistentPaths);
            }
        }
    }
    // between consecutive paths both stepping at slab t, declare the bridge
    // faces; the region there is height-flat and closes with type-1 lozenges
    let mut per_slab: BTreeMap<i64, Vec<(i64, bool)>> = BTreeMap::new();
    for s in &steps {
        per_slab
            .entry(s.t)
            .or_default()
            .push((s.x, s.kind == LozengeType::Two));
    }
    let mut demanded: Vec<super::Face> = Vec::new();
    for (&t, anchors) in per_slab.iter_mut() {
        anchors.sort();
        for w in anchors.windows(2) {
            let (bl, jl) = w[0];
            let (br, jr) = w[1];
            for c in bl + 1..br {
                demanded.push(super::Face::up(c, t));
            }
            for c in bl + jl as i64 + 1..br + jr as i64 {
                demanded.push(super::Face::down(c, t));
            }
        }
    }
    // a path entering or leaving mid-domain forces a boundary notch: the
    // column of faces just outside its crossing edge stays out of the domain
    let mut excluded: std::collections::HashSet<super::Face> = std::collections::HashSet::new();
    for spans in &ensemble.paths {
        for s in spans {
            let xe = *s.positions.last().unwrap();
            excluded.insert(super::Face::up(xe, s.t_end()));
            excluded.insert(super::Face::down(xe, s.t_end()));
            excluded.insert(super::Face::down(s.positions[0], s.t_start - 1));
            excluded.insert(super::Face::up(s.positions[0], s.t_start - 1));
        }
    }
    demanded.retain(|f| !excluded.contains(f));
    let mut lozenges = steps;
    let mut qi = 0;
    while qi < demanded.len() {
        let f = demanded[qi];
        qi += 1;
        if covered.contains_key(&f) {
            continue;
        }
        // pair an uncovered face with its vertical type-1 partner
        let loz = match f.orient {
            Orient::Down => Lozenge { x: f.x, t: f.t, kind: LozengeType::One },
            Orient::Up => Lozenge { x: f.x, t: f.t - 1, kind: LozengeType::One },
        };
        for g in loz.faces() {
            if g != f && (covered.contains_key(&g) || excluded.contains(&g)) {
                return Err(LatticeError::InconsistentPaths);
            }
        }
        for g in loz.faces() {
            covered.insert(g, loz);
        }
        lozenges.push(loz);
    }
    let faces: Vec<super::Face> = covered.keys().copied().collect();
    let domain = LatticeDomain::new(faces)?;
    let tiling = Tiling::new(lozenges);
    tiling.face_matching(&domain)?;
    Ok((domain, tiling))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::height::{height_from_tiling, tiling_from_height};

    #[test]
    fn empty_ensemble_from_all_type1() {
        // a 1 x 2 parallelogram tiled by two type-1 lozenges stacked: heights
        // constant horizontally
        let loz = vec![
            Lozenge { x: 0, t: 0, kind: LozengeType::One },
        ];
        let t = Tiling::new(loz.clone());
        let faces: Vec<_> = loz.iter().flat_map(|l| l.faces()).collect();
        let d = LatticeDomain::new(faces).unwrap();
        let h = height_from_tiling(&d, &t, (0, 0), 0).unwrap();
        let e = paths_from_height(&h);
        assert_eq!(e.num_paths(), 0);
    }

    #[test]
    fn single_jump_reconstructs() {
        let loz = Lozenge { x: 3, t: 1, kind: LozengeType::Two };
        let d = LatticeDomain::new(loz.faces().to_vec()).unwrap();
        let t = Tiling::new(vec![loz]);
        let h = height_from_tiling(&d, &t, (3, 1), 0).unwrap();
        let e = paths_from_height(&h);
        assert_eq!(e.num_paths(), 1);
        assert_eq!(e.position(0, 1), Some(3));
        assert_eq!(e.position(0, 2), Some(4));
        let t2 = tiling_from_paths(&e, &d).unwrap();
        assert_eq!(t, t2);
    }

    #[test]
    fn six_path_figure_round_trip() {
        // Six non-intersecting Bernoulli paths with staggered spans, as in
        // the walks-and-tiling figure: jumps must come back as type-2
        // lozenges anchored at (b(t), t).
        let paths_data: Vec<(i64, Vec<i64>)> = vec![
            (2, vec![1, 1, 2]),
            (2, vec![2, 3, 3, 4]),
            (2, vec![4, 4, 5, 5, 5]),
            (2, vec![6, 6, 7, 7]),
            (2, vec![7, 8, 8]),
            (2, vec![9, 9, 10, 10]),
        ];
        let ensemble = PathEnsemble {
            first_index: 0,
            paths: paths_data
                .iter()
                .map(|(t0, xs)| vec![PathSpan { t_start: *t0, positions: xs.clone() }])
                .collect(),
        };
        ensemble.validate().unwrap();
        let (domain, tiling) = realize_on_staircase(&ensemble).unwrap();
        // every jump appears as a type-2 lozenge at (b(t), t)
        for (t0, xs) in paths_data.iter() {
            for (off, w) in xs.windows(2).enumerate() {
                if w[1] == w[0] + 1 {
                    assert!(tiling
                        .lozenges()
                        .contains(&Lozenge { x: w[0], t: t0 + off as i64, kind: LozengeType::Two }));
                }
            }
        }
        // round trip through the height function, modulo a global index shift
        let h = height_from_tiling(&domain, &tiling, *domain.vertices().first().unwrap(), 0).unwrap();
        let back = paths_from_height(&h);
        assert_eq!(back.num_paths(), 6);
        let pts_a = ensemble.points();
        let pts_b = back.points();
        let shift = pts_b[0].2 - pts_a[0].2;
        assert_eq!(
            pts_a.iter().map(|&(t, x, i)| (t, x, i + shift)).collect::<Vec<_>>(),
            pts_b
        );
        let t2 = tiling_from_paths(&back, &domain).unwrap();
        assert_eq!(tiling, t2);
    }
}
