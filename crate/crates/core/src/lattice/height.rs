use super::domain::{Edge, EdgeDir, Face, LatticeDomain, Vertex};
use super::{LatticeError, Lozenge, LozengeType, Tiling};
use std::collections::{BTreeMap, VecDeque};

/// Integer height function on the vertices of a domain.
#[derive(Clone, Debug)]
pub struct HeightFunction {
    pub domain: LatticeDomain,
    pub values: BTreeMap<Vertex, i64>,
}

impl HeightFunction {
    pub fn get(&self, v: &Vertex) -> Option<i64> {
        self.values.get(v).copied()
    }

    /// Checks the step rules on every edge of the domain.
    pub fn validate(&self) -> Result<(), LatticeError> {
        for e in self.domain.edges() {
            let (a, b) = (e.from, e.to());
            let (ha, hb) = match (self.get(&a), self.get(&b)) {
                (Some(ha), Some(hb)) => (ha, hb),
                _ => return Err(LatticeError::StepRuleViolation { from: a, to: b }),
            };
            let d = hb - ha;
            let ok = match e.dir {
                EdgeDir::Horizontal => d == 0 || d == 1,
                EdgeDir::Vertical => d == -1 || d == 0,
                EdgeDir::Diagonal => d == 0 || d == 1,
            };
            if !ok {
                return Err(LatticeError::StepRuleViolation { from: a, to: b });
            }
        }
        Ok(())
    }

    /// Restriction to the boundary cycle, in traversal order.
    pub fn boundary_values(&self) -> Vec<(Vertex, i64)> {
        self.domain
            .boundary_cycle()
            .iter()
            .map(|v| (*v, self.values[v]))
            .collect()
    }

    /// Shifts all values so the minimum over the boundary is zero.
    pub fn normalized(mut self) -> Self {
        let min = self
            .domain
            .boundary_cycle()
            .iter()
            .map(|v| self.values[v])
            .min()
            .unwrap_or(0);
        for h in self.values.values_mut() {
            *h -= min;
        }
        self
    }
}

/// Height increment across `e` (traversed from `e.from` to `e.to()`) given
/// the face matching of a tiling.
fn edge_increment(e: &Edge, matching: &BTreeMap<Face, Face>) -> i64 {
    let [fa, fb] = e.incident_faces();
    let interior_pair = matching.get(&fa) == Some(&fb);
    match e.dir {
        EdgeDir::Horizontal => {
            if interior_pair {
                0
            } else {
                1
            }
        }
        EdgeDir::Vertical => {
            if interior_pair {
                -1
            } else {
                0
            }
        }
        EdgeDir::Diagonal => {
            if interior_pair {
                1
            } else {
                0
            }
        }
    }
}

/// Builds the height function of a tiling, anchored by `H(anchor) = h0`.
pub fn height_from_tiling(
    domain: &LatticeDomain,
    tiling: &Tiling,
    anchor: Vertex,
    h0: i64,
) -> Result<HeightFunction, LatticeError> {
    if !domain.contains_vertex(&anchor) {
        return Err(LatticeError::AnchorOutsideDomain);
    }
    let matching = tiling.face_matching(domain)?;

    // adjacency with increments, both directions
    let mut adj: BTreeMap<Vertex, Vec<(Vertex, i64)>> = BTreeMap::new();
    for e in domain.edges() {
        let inc = edge_increment(&e, &matching);
        adj.entry(e.from).or_default().push((e.to(), inc));
        adj.entry(e.to()).or_default().push((e.from, -inc));
    }

    let mut values = BTreeMap::new();
    values.insert(anchor, h0);
    let mut queue = VecDeque::new();
    queue.push_back(anchor);
    while let Some(v) = queue.pop_front() {
        let hv = values[&v];
        for &(w, inc) in &adj[&v] {
            match values.get(&w) {
                None => {
                    values.insert(w, hv + inc);
                    queue.push_back(w);
                }
                Some(&hw) => {
                    if hw != hv + inc {
                        return Err(LatticeError::InvalidTiling);
                    }
                }
            }
        }
    }
    if values.len() != domain.vertices().len() {
        return Err(LatticeError::InvalidTiling);
    }
    let h = HeightFunction { domain: domain.clone(), values };
    h.validate()?;
    Ok(h)
}

/// Recovers the tiling from a valid height function.
pub fn tiling_from_height(height: &HeightFunction) -> Result<Tiling, LatticeError> {
    height.validate()?;
    let domain = &height.domain;
    let mut lozenges = Vec::new();
    let mut covered_down: BTreeMap<Face, ()> = BTreeMap::new();
    for f in domain.faces() {
        if f.orient != super::domain::Orient::Up {
            continue;
        }
        let (x, t) = (f.x, f.t);
        let h = |v: Vertex| height.values[&v];
        let dh_horiz = h((x + 1, t)) - h((x, t));
        let dh_vert = h((x + 1, t + 1)) - h((x + 1, t));
        let dh_diag = h((x + 1, t + 1)) - h((x, t));
        let (loz, partner) = if dh_horiz == 0 {
            (Lozenge { x, t: t - 1, kind: LozengeType::One }, Face::down(x, t - 1))
        } else if dh_vert == -1 {
            (Lozenge { x, t, kind: LozengeType::Two }, Face::down(x + 1, t))
        } else if dh_diag == 1 {
            (Lozenge { x, t, kind: LozengeType::Three }, Face::down(x, t))
        } else {
            return Err(LatticeError::StepRuleViolation { from: (x, t), to: (x + 1, t + 1) });
        };
        if !domain.contains_face(&partner) {
            return Err(LatticeError::StepRuleViolation { from: (x, t), to: partner.vertices()[0] });
        }
        if covered_down.insert(partner, ()).is_some() {
            return Err(LatticeError::InvalidTiling);
        }
        lozenges.push(loz);
    }
    let n_down = domain.faces().iter().filter(|f| f.orient == super::domain::Orient::Down).count();
    if covered_down.len() != n_down {
        return Err(LatticeError::InvalidTiling);
    }
    Ok(Tiling::new(lozenges))
}

/// The boundary height function of a domain, canonicalized so its minimum is
/// zero. Along the boundary only the nothing-interior increments apply:
/// +1 per horizontal step, 0 per vertical or diagonal step.
pub fn boundary_height(domain: &LatticeDomain) -> Result<Vec<(Vertex, i64)>, LatticeError> {
    let cycle = domain.boundary_cycle();
    let empty = BTreeMap::new();
    let mut vals = Vec::with_capacity(cycle.len());
    let mut h = 0i64;
    for i in 0..cycle.len() {
        vals.push((cycle[i], h));
        let a = cycle[i];
        let b = cycle[(i + 1) % cycle.len()];
        let (e, forward) = edge_between(a, b).ok_or(LatticeError::InvalidDomain)?;
        let inc = edge_increment(&e, &empty);
        h += if forward { inc } else { -inc };
    }
    if h != 0 {
        return Err(LatticeError::NotTileable(h));
    }
    let min = vals.iter().map(|&(_, v)| v).min().unwrap();
    for v in vals.iter_mut() {
        v.1 -= min;
    }
    Ok(vals)
}

fn edge_between(a: Vertex, b: Vertex) -> Option<(Edge, bool)> {
    let d = (b.0 - a.0, b.1 - a.1);
    let (from, dir, forward) = match d {
        (1, 0) => (a, EdgeDir::Horizontal, true),
        (-1, 0) => (b, EdgeDir::Horizontal, false),
        (0, 1) => (a, EdgeDir::Vertical, true),
        (0, -1) => (b, EdgeDir::Vertical, false),
        (1, 1) => (a, EdgeDir::Diagonal, true),
        (-1, -1) => (b, EdgeDir::Diagonal, false),
        _ => return None,
    };
    Some((Edge { from, dir }, forward))
}

/// Exhaustively enumerates all tilings of a domain by extending height
/// functions vertex by vertex. Intended for small test domains; `limit`
/// bounds the number of tilings produced.
pub fn enumerate_tilings(domain: &LatticeDomain, limit: usize) -> Result<Vec<Tiling>, LatticeError> {
    let boundary = boundary_height(domain)?;
    let bvals: BTreeMap<Vertex, i64> = boundary.into_iter().collect();
    let verts: Vec<Vertex> = domain.vertices().to_vec();
    // constraint edges grouped per vertex against earlier vertices
    let edges = domain.edges();
    let idx: BTreeMap<Vertex, usize> = verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut constraints: Vec<Vec<(usize, EdgeDir, bool)>> = vec![Vec::new(); verts.len()];
    for e in &edges {
        let (i, j) = (idx[&e.from], idx[&e.to()]);
        if i < j {
            constraints[j].push((i, e.dir, true));
        } else {
            constraints[i].push((j, e.dir, false));
        }
    }
    let mut out = Vec::new();
    let mut values: Vec<Option<i64>> = vec![None; verts.len()];
    fn admissible(dir: EdgeDir, inc: i64) -> bool {
        match dir {
            EdgeDir::Horizontal | EdgeDir::Diagonal => inc == 0 || inc == 1,
            EdgeDir::Vertical => (-1..=0).contains(&inc),
        }
    }
    fn rec(
        k: usize,
        verts: &[Vertex],
        bvals: &BTreeMap<Vertex, i64>,
        constraints: &[Vec<(usize, EdgeDir, bool)>],
        values: &mut Vec<Option<i64>>,
        domain: &LatticeDomain,
        out: &mut Vec<Tiling>,
        limit: usize,
    ) {
        if out.len() >= limit {
            return;
        }
        if k == verts.len() {
            let vals: BTreeMap<Vertex, i64> =
                verts.iter().enumerate().map(|(i, v)| (*v, values[i].unwrap())).collect();
            let h = HeightFunction { domain: domain.clone(), values: vals };
            if let Ok(t) = tiling_from_height(&h) {
                out.push(t);
            }
            return;
        }
        let candidates: Vec<i64> = if let Some(&b) = bvals.get(&verts[k]) {
            vec![b]
        } else {
            // bounded by constraints to earlier vertices; heights live in a
            // small window around neighbor values
            let mut lo = i64::MIN / 4;
            let mut hi = i64::MAX / 4;
            for &(j, dir, fwd) in &constraints[k] {
                let hj = values[j].unwrap();
                let (a, b) = match dir {
                    EdgeDir::Horizontal | EdgeDir::Diagonal => (0, 1),
                    EdgeDir::Vertical => (-1, 0),
                };
                // fwd: increment from j to k in [a, b]
                let (a, b) = if fwd { (hj + a, hj + b) } else { (hj - b, hj - a) };
                lo = lo.max(a);
                hi = hi.min(b);
            }
            if lo > hi {
                return;
            }
            (lo..=hi).collect()
        };
        'next: for v in candidates {
            for &(j, dir, fwd) in &constraints[k] {
                let hj = values[j].unwrap();
                let inc = if fwd { v - hj } else { hj - v };
                if !admissible(dir, inc) {
                    continue 'next;
                }
            }
            values[k] = Some(v);
            rec(k + 1, verts, bvals, constraints, values, domain, out, limit);
            values[k] = None;
        }
    }
    rec(0, &verts, &bvals, &constraints, &mut values, domain, &mut out, limit);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::domain::Orient;

    #[test]
    fn unit_hexagon_floor_heights() {
        let d = LatticeDomain::hexagon(1, 1, 1);
        // the "empty box" tiling of the unit hexagon
        let floor = Tiling::new(vec![
            Lozenge { x: 0, t: 0, kind: LozengeType::One },
            Lozenge { x: 0, t: 0, kind: LozengeType::Two },
            Lozenge { x: 1, t: 1, kind: LozengeType::Three },
        ]);
        let h = height_from_tiling(&d, &floor, (0, 0), 0).unwrap();
        // boundary heights follow the +1/0/0 rules
        assert_eq!(h.get(&(1, 0)), Some(1));
        assert_eq!(h.get(&(0, 1)), Some(0));
        assert_eq!(h.get(&(2, 1)), Some(1));
        assert_eq!(h.get(&(2, 2)), Some(1));
        assert_eq!(h.get(&(1, 2)), Some(0));
        // center vertex sits at the floor
        assert_eq!(h.get(&(1, 1)), Some(0));
        // the other tiling of the unit hexagon raises the center by one
        let full = Tiling::new(vec![
            Lozenge { x: 0, t: 0, kind: LozengeType::Three },
            Lozenge { x: 0, t: 1, kind: LozengeType::Two },
            Lozenge { x: 1, t: 0, kind: LozengeType::One },
        ]);
        let h2 = height_from_tiling(&d, &full, (0, 0), 0).unwrap();
        assert_eq!(h2.get(&(1, 1)), Some(1));
        // boundary restrictions agree
        for (v, hv) in h.boundary_values() {
            assert_eq!(h2.get(&v), Some(hv));
        }
    }

    #[test]
    fn tiling_height_round_trip() {
        let d = LatticeDomain::hexagon(2, 2, 2);
        for t in enumerate_tilings(&d, 10_000).unwrap() {
            let h = height_from_tiling(&d, &t, (0, 0), 5).unwrap();
            let t2 = tiling_from_height(&h).unwrap();
            assert_eq!(t, t2);
        }
    }

    #[test]
    fn hexagon_222_has_twenty_tilings() {
        let d = LatticeDomain::hexagon(2, 2, 2);
        let all = enumerate_tilings(&d, 10_000).unwrap();
        assert_eq!(all.len(), 20);
    }

    #[test]
    fn boundary_height_matches_all_tilings() {
        let d = LatticeDomain::hexagon(2, 2, 2);
        let b = boundary_height(&d).unwrap();
        for t in enumerate_tilings(&d, 10_000).unwrap() {
            let h = height_from_tiling(&d, &t, (0, 0), 0).unwrap().normalized();
            for (v, hv) in &b {
                assert_eq!(h.get(v), Some(*hv), "boundary height differs at {v:?}");
            }
        }
    }

    #[test]
    fn lone_triangle_not_tileable() {
        let d = LatticeDomain::new(vec![Face::up(0, 0)]).unwrap();
        match boundary_height(&d) {
            Err(LatticeError::NotTileable(w)) => assert_ne!(w, 0),
            other => panic!("expected NotTileable, got {other:?}"),
        }
    }
}
