//! Discrete geometry on the triangular lattice: domains, lozenge tilings,
//! height functions, non-intersecting Bernoulli paths, and the bijections
//! among them.
//!
//! Conventions. The lattice has vertex set Z^2 with edges in the directions
//! (1,0), (0,1) and (1,1). Faces come in two orientations anchored at their
//! lower-left vertex:
//!
//! * `Up`   at (x,t): vertices (x,t), (x+1,t), (x+1,t+1)
//! * `Down` at (x,t): vertices (x,t), (x,t+1), (x+1,t+1)
//!
//! A lozenge pairs two adjacent faces:
//!
//! * type 1 anchored (x,t): `Down(x,t)` + `Up(x,t+1)` (vertical lozenge)
//! * type 2 anchored (x,t): `Up(x,t)` + `Down(x+1,t)` (jump lozenge)
//! * type 3 anchored (x,t): `Up(x,t)` + `Down(x,t)`   (unit square)
//!
//! Height increments across an edge of the lattice:
//!
//! * horizontal (x,t) -> (x+1,t): 0 if the edge is interior to a type-1
//!   lozenge, else +1;
//! * vertical (x,t) -> (x,t+1): -1 if interior to a type-2 lozenge, else 0;
//! * diagonal (x,t) -> (x+1,t+1): +1 if interior to a type-3 lozenge, else 0.
//!
//! Paths: `b_i(t)` is the unique x with `H(x,t) = i`, `H(x+1,t) = i+1`. A
//! type-2 lozenge anchored (x,t) is a right-jump of the level-`H(x,t)` path,
//! a type-3 lozenge a non-jump.

mod domain;
mod height;
mod paths;

pub use domain::{Edge, EdgeDir, Face, LatticeDomain, Orient, Vertex};
pub use height::{
    boundary_height, enumerate_tilings, height_from_tiling, tiling_from_height, HeightFunction,
};
pub use paths::{
    paths_from_height, realize_on_staircase, tiling_from_paths, Boundary, PathEnsemble, PathSpan,
};

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("domain is empty, disconnected, or not simply connected")]
    InvalidDomain,
    #[error("tiling does not perfectly match the domain faces")]
    InvalidTiling,
    #[error("anchor vertex lies outside the domain")]
    AnchorOutsideDomain,
    #[error("height step rule violated on edge {from:?} -> {to:?}")]
    StepRuleViolation { from: Vertex, to: Vertex },
    #[error("path ensemble is inconsistent with a tiling of the domain")]
    InconsistentPaths,
    #[error("domain is not tileable (boundary increments close with winding {0})")]
    NotTileable(i64),
    #[error("malformed file: {0}")]
    Parse(String),
}

/// Lozenge orientation class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LozengeType {
    One = 1,
    Two = 2,
    Three = 3,
}

/// A lozenge anchored at its lower-left vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lozenge {
    pub x: i64,
    pub t: i64,
    pub kind: LozengeType,
}

impl Lozenge {
    /// The two faces covered by this lozenge.
    pub fn faces(&self) -> [Face; 2] {
        match self.kind {
            LozengeType::One => [Face::down(self.x, self.t), Face::up(self.x, self.t + 1)],
            LozengeType::Two => [Face::up(self.x, self.t), Face::down(self.x + 1, self.t)],
            LozengeType::Three => [Face::up(self.x, self.t), Face::down(self.x, self.t)],
        }
    }
}

/// A lozenge tiling, stored as a sorted anchor list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tiling {
    lozenges: Vec<Lozenge>,
}

impl Tiling {
    pub fn new(mut lozenges: Vec<Lozenge>) -> Self {
        lozenges.sort();
        Tiling { lozenges }
    }

    pub fn lozenges(&self) -> &[Lozenge] {
        &self.lozenges
    }

    pub fn len(&self) -> usize {
        self.lozenges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lozenges.is_empty()
    }

    /// Validates that the lozenges partition the faces of `domain`, and
    /// returns the face -> partner-face matching.
    pub fn face_matching(&self, domain: &LatticeDomain) -> Result<BTreeMap<Face, Face>, LatticeError> {
        let mut m = BTreeMap::new();
        for loz in &self.lozenges {
            let [a, b] = loz.faces();
            if !domain.contains_face(&a) || !domain.contains_face(&b) {
                return Err(LatticeError::InvalidTiling);
            }
            if m.insert(a, b).is_some() || m.insert(b, a).is_some() {
                return Err(LatticeError::InvalidTiling);
            }
        }
        if m.len() != domain.num_faces() {
            return Err(LatticeError::InvalidTiling);
        }
        Ok(m)
    }

    /// Serializes as "x t type" lines under a version header.
    pub fn to_text(&self) -> String {
        let mut out = String::from("tiling v1\n");
        for l in &self.lozenges {
            out.push_str(&format!("{} {} {}\n", l.x, l.t, l.kind as u8));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LatticeError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "tiling v1" => {}
            _ => return Err(LatticeError::Parse("missing 'tiling v1' header".into())),
        }
        let mut lozenges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let (x, t, k) = (it.next(), it.next(), it.next());
            let (x, t, k) = match (x, t, k, it.next()) {
                (Some(x), Some(t), Some(k), None) => (x, t, k),
                _ => return Err(LatticeError::Parse(format!("bad tiling line: {line}"))),
            };
            let x: i64 = x.parse().map_err(|_| LatticeError::Parse(format!("bad x: {line}")))?;
            let t: i64 = t.parse().map_err(|_| LatticeError::Parse(format!("bad t: {line}")))?;
            let kind = match k {
                "1" => LozengeType::One,
                "2" => LozengeType::Two,
                "3" => LozengeType::Three,
                _ => return Err(LatticeError::Parse(format!("bad type: {line}"))),
            };
            lozenges.push(Lozenge { x, t, kind });
        }
        Ok(Tiling::new(lozenges))
    }
}
