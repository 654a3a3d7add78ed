use super::LatticeError;
use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

pub type Vertex = (i64, i64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orient {
    Up,
    Down,
}

/// A unit triangular face anchored at its lower-left vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Face {
    pub x: i64,
    pub t: i64,
    pub orient: Orient,
}

impl Face {
    pub fn up(x: i64, t: i64) -> Face {
        Face { x, t, orient: Orient::Up }
    }

    pub fn down(x: i64, t: i64) -> Face {
        Face { x, t, orient: Orient::Down }
    }

    pub fn vertices(&self) -> [Vertex; 3] {
        match self.orient {
            Orient::Up => [(self.x, self.t), (self.x + 1, self.t), (self.x + 1, self.t + 1)],
            Orient::Down => [(self.x, self.t), (self.x, self.t + 1), (self.x + 1, self.t + 1)],
        }
    }

    /// The up-to-three faces sharing an edge with this one.
    pub fn neighbors(&self) -> [Face; 3] {
        match self.orient {
            Orient::Up => [
                Face::down(self.x, self.t),     // shared diagonal
                Face::down(self.x + 1, self.t), // shared vertical
                Face::down(self.x, self.t - 1), // shared horizontal
            ],
            Orient::Down => [
                Face::up(self.x, self.t),     // shared diagonal
                Face::up(self.x - 1, self.t), // shared vertical
                Face::up(self.x, self.t + 1), // shared horizontal
            ],
        }
    }
}

/// Undirected lattice edge, stored with its lower-left endpoint first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeDir {
    Horizontal,
    Vertical,
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: Vertex,
    pub dir: EdgeDir,
}

impl Edge {
    pub fn to(&self) -> Vertex {
        let (x, t) = self.from;
        match self.dir {
            EdgeDir::Horizontal => (x + 1, t),
            EdgeDir::Vertical => (x, t + 1),
            EdgeDir::Diagonal => (x + 1, t + 1),
        }
    }

    /// The two faces that would contain this edge (either may be outside a
    /// given domain).
    pub fn incident_faces(&self) -> [Face; 2] {
        let (x, t) = self.from;
        match self.dir {
            EdgeDir::Horizontal => [Face::up(x, t), Face::down(x, t - 1)],
            EdgeDir::Vertical => [Face::down(x, t), Face::up(x - 1, t)],
            EdgeDir::Diagonal => [Face::up(x, t), Face::down(x, t)],
        }
    }
}

/// A finite, simply-connected union of triangular faces.
#[derive(Clone, Debug)]
pub struct LatticeDomain {
    faces: Vec<Face>,
    face_set: HashSet<Face>,
    vertices: Vec<Vertex>,
    boundary: Vec<Vertex>,
}

impl LatticeDomain {
    pub fn new(faces: Vec<Face>) -> Result<Self, LatticeError> {
        let face_set: HashSet<Face> = faces.iter().copied().collect();
        if face_set.is_empty() || face_set.len() != faces.len() {
            return Err(LatticeError::InvalidDomain);
        }
        let mut faces: Vec<Face> = face_set.iter().copied().collect();
        faces.sort();

        // connectivity over shared edges
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        queue.push_back(faces[0]);
        seen.insert(faces[0]);
        while let Some(f) = queue.pop_front() {
            for nb in f.neighbors() {
                if face_set.contains(&nb) && seen.insert(nb) {
                    queue.push_back(nb);
                }
            }
        }
        if seen.len() != faces.len() {
            return Err(LatticeError::InvalidDomain);
        }

        let mut vertex_set = BTreeSet::new();
        for f in &faces {
            for v in f.vertices() {
                vertex_set.insert(v);
            }
        }
        let vertices: Vec<Vertex> = vertex_set.into_iter().collect();

        let mut edge_set = BTreeSet::new();
        for f in &faces {
            for e in face_edges(f) {
                edge_set.insert(e);
            }
        }
        // Euler characteristic V - E + F = 1 for a simply-connected complex.
        let euler = vertices.len() as i64 - edge_set.len() as i64 + faces.len() as i64;
        if euler != 1 {
            return Err(LatticeError::InvalidDomain);
        }

        let boundary = trace_boundary(&face_set, &edge_set)?;
        Ok(LatticeDomain { faces, face_set, vertices, boundary })
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn contains_face(&self, f: &Face) -> bool {
        self.face_set.contains(f)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn contains_vertex(&self, v: &Vertex) -> bool {
        self.vertices.binary_search(v).is_ok()
    }

    /// The boundary vertex cycle, in traversal order (closed: first vertex
    /// is not repeated at the end).
    pub fn boundary_cycle(&self) -> &[Vertex] {
        &self.boundary
    }

    /// All lattice edges with at least one incident face in the domain.
    pub fn edges(&self) -> Vec<Edge> {
        let mut set = BTreeSet::new();
        for f in &self.faces {
            for e in face_edges(f) {
                set.insert(e);
            }
        }
        set.into_iter().collect()
    }

    /// An edge is interior if both incident faces belong to the domain.
    pub fn edge_is_interior(&self, e: &Edge) -> bool {
        let [a, b] = e.incident_faces();
        self.contains_face(&a) && self.contains_face(&b)
    }

    /// The a*b*c hexagon with corners (0,0), (a,0), (a+c,c), (a+c,b+c),
    /// (c,b+c)... in lattice coordinates: the standard hexagonal region whose
    /// tilings are boxed plane partitions in an a x b x c box.
    pub fn hexagon(a: i64, b: i64, c: i64) -> LatticeDomain {
        assert!(a >= 1 && b >= 1 && c >= 1);
        let mut faces = Vec::new();
        // Region between left boundary l(t) and right boundary r(t):
        // rows t in [0, b+c). Up face (x,t) present iff the whole triangle
        // fits; enumerate by scanning a generous box and testing vertices.
        let inside = |x: i64, t: i64| -> bool {
            // hexagon with vertices (0,0),(a,0),(a+c,c),(a+c,c+b),(c,c+b),(0,b)
            t >= 0 && t <= b + c && x >= 0 && x <= a + c && t - x <= b && x - t <= a
        };
        for t in -1..=b + c + 1 {
            for x in -1..=a + c + 1 {
                let up = Face::up(x, t);
                if up.vertices().iter().all(|&(vx, vt)| inside(vx, vt)) {
                    faces.push(up);
                }
                let down = Face::down(x, t);
                if down.vertices().iter().all(|&(vx, vt)| inside(vx, vt)) {
                    faces.push(down);
                }
            }
        }
        LatticeDomain::new(faces).expect("hexagon is a valid domain")
    }

    /// Serializes as "x t U|D" lines under a version header.
    pub fn to_text(&self) -> String {
        let mut out = String::from("domain v1\n");
        for f in &self.faces {
            let o = match f.orient {
                Orient::Up => "U",
                Orient::Down => "D",
            };
            out.push_str(&format!("{} {} {}\n", f.x, f.t, o));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LatticeError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "domain v1" => {}
            _ => return Err(LatticeError::Parse("missing 'domain v1' header".into())),
        }
        let mut faces = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let (x, t, o) = match (it.next(), it.next(), it.next(), it.next()) {
                (Some(x), Some(t), Some(o), None) => (x, t, o),
                _ => return Err(LatticeError::Parse(format!("bad domain line: {line}"))),
            };
            let x: i64 = x.parse().map_err(|_| LatticeError::Parse(format!("bad x: {line}")))?;
            let t: i64 = t.parse().map_err(|_| LatticeError::Parse(format!("bad t: {line}")))?;
            let orient = match o {
                "U" => Orient::Up,
                "D" => Orient::Down,
                _ => return Err(LatticeError::Parse(format!("bad orientation: {line}"))),
            };
            faces.push(Face { x, t, orient });
        }
        LatticeDomain::new(faces)
    }
}

pub(super) fn face_edges(f: &Face) -> [Edge; 3] {
    match f.orient {
        Orient::Up => [
            Edge { from: (f.x, f.t), dir: EdgeDir::Horizontal },
            Edge { from: (f.x + 1, f.t), dir: EdgeDir::Vertical },
            Edge { from: (f.x, f.t), dir: EdgeDir::Diagonal },
        ],
        Orient::Down => [
            Edge { from: (f.x, f.t), dir: EdgeDir::Vertical },
            Edge { from: (f.x, f.t + 1), dir: EdgeDir::Horizontal },
            Edge { from: (f.x, f.t), dir: EdgeDir::Diagonal },
        ],
    }
}

/// Walks the boundary edges into a single vertex cycle. Fails when a vertex
/// has more than two incident boundary edges (pinched domain).
fn trace_boundary(
    face_set: &HashSet<Face>,
    edge_set: &BTreeSet<Edge>,
) -> Result<Vec<Vertex>, LatticeError> {
    let mut incident: BTreeMap<Vertex, Vec<(Vertex, Edge)>> = BTreeMap::new();
    let mut n_boundary = 0usize;
    for e in edge_set {
        let [a, b] = e.incident_faces();
        let count = face_set.contains(&a) as u8 + face_set.contains(&b) as u8;
        if count == 1 {
            n_boundary += 1;
            incident.entry(e.from).or_default().push((e.to(), *e));
            incident.entry(e.to()).or_default().push((e.from, *e));
        }
    }
    if n_boundary == 0 {
        return Err(LatticeError::InvalidDomain);
    }
    for (_, nbrs) in incident.iter() {
        if nbrs.len() != 2 {
            return Err(LatticeError::InvalidDomain);
        }
    }
    let start = *incident.keys().next().unwrap();
    let mut cycle = vec![start];
    let mut prev_edge: Option<Edge> = None;
    let mut cur = start;
    loop {
        let nbrs = &incident[&cur];
        let (next, edge) = if Some(nbrs[0].1) == prev_edge { nbrs[1] } else { nbrs[0] };
        if next == start {
            if cycle.len() != n_boundary {
                return Err(LatticeError::InvalidDomain);
            }
            return Ok(cycle);
        }
        cycle.push(next);
        prev_edge = Some(edge);
        cur = next;
        if cycle.len() > n_boundary {
            return Err(LatticeError::InvalidDomain);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hexagon_face_count() {
        // the a*b*c hexagon has 2(ab+bc+ca) faces
        for (a, b, c) in [(1, 1, 1), (2, 2, 2), (2, 3, 1)] {
            let d = LatticeDomain::hexagon(a, b, c);
            assert_eq!(d.num_faces() as i64, 2 * (a * b + b * c + c * a));
        }
    }

    #[test]
    fn single_triangle_is_valid_domain() {
        let d = LatticeDomain::new(vec![Face::up(0, 0)]).unwrap();
        assert_eq!(d.boundary_cycle().len(), 3);
    }

    #[test]
    fn disconnected_rejected() {
        let err = LatticeDomain::new(vec![Face::up(0, 0), Face::up(10, 10)]);
        assert!(err.is_err());
    }

    #[test]
    fn text_round_trip() {
        let d = LatticeDomain::hexagon(2, 1, 1);
        let d2 = LatticeDomain::from_text(&d.to_text()).unwrap();
        assert_eq!(d.faces(), d2.faces());
    }
}
