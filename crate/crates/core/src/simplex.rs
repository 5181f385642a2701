//! The nonlocal simplex spanned by the canonical PR box and the eight local
//! deterministic vertices on its CHSH facet, its faces, and the void-edge graph.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::behavior::{canonical_pr, index_of, local_box, Behavior, FreeVector};
use crate::error::{Error, Result};

/// `(α1, α2, β1, β2)` of L1..L8; vertex `L_i` has free vector `e_i`.
pub const LOCAL_VERTEX_PARAMS: [(usize, usize, usize, usize); 8] = [
    (1, 0, 1, 1),
    (1, 1, 1, 0),
    (0, 0, 1, 0),
    (0, 1, 1, 1),
    (1, 1, 0, 1),
    (1, 0, 0, 0),
    (0, 0, 0, 0),
    (0, 1, 0, 1),
];

/// Zeroed masks of the two special four-element voids.
pub const S1: u8 = 0b1100_0011; // {1, 2, 7, 8}
pub const S2: u8 = 0b0011_1100; // {3, 4, 5, 6}

/// Local vertex `L_i`, `i ∈ 1..=8`.
pub fn local_vertex(i: usize) -> Behavior {
    assert!((1..=8).contains(&i), "local vertex index {i} out of range");
    let (a1, a2, b1, b2) = LOCAL_VERTEX_PARAMS[i - 1];
    local_box(a1, a2, b1, b2)
}

/// L1..L8 followed by the PR box.
pub fn nl_vertices() -> Vec<Behavior> {
    let mut v: Vec<Behavior> = (1..=8).map(local_vertex).collect();
    v.push(canonical_pr());
    v
}

/// Rank of the difference vectors `row_i - row_9` of the vertex matrix.
pub fn affine_rank() -> usize {
    let rows = nl_vertices();
    let pr = rows[8].index_vector().expect("chsh scenario");
    let diffs = DMatrix::from_fn(8, 16, |r, c| {
        rows[r].index_vector().expect("chsh scenario")[c] - pr[c]
    });
    diffs.rank(1e-10)
}

/// Nonempty set of zeroed free variables, stored as a bit mask (bit `i-1` ↔ `p_i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Face(u8);

impl Face {
    pub fn from_mask(mask: u8) -> Result<Face> {
        if mask == 0 {
            return Err(Error::InvalidArgument("face mask must be nonzero".into()));
        }
        Ok(Face(mask))
    }

    pub fn from_zeroed(indices: &[usize]) -> Result<Face> {
        let mut mask = 0u8;
        for &i in indices {
            if !(1..=8).contains(&i) {
                return Err(Error::InvalidArgument(format!(
                    "free index {i} not in 1..8"
                )));
            }
            mask |= 1 << (i - 1);
        }
        Face::from_mask(mask)
    }

    /// Every face of the simplex except the full one, ordered by mask.
    pub fn all() -> impl Iterator<Item = Face> {
        (1..=255u8).map(Face)
    }

    pub fn mask(&self) -> u8 {
        self.0
    }

    pub fn zeroed(&self) -> Vec<usize> {
        (1..=8).filter(|i| self.is_zeroed(*i)).collect()
    }

    pub fn is_zeroed(&self, i: usize) -> bool {
        self.0 & (1 << (i - 1)) != 0
    }

    pub fn dim(&self) -> usize {
        8 - self.0.count_ones() as usize
    }

    pub fn local_vertices(&self) -> Vec<usize> {
        (1..=8).filter(|i| !self.is_zeroed(*i)).collect()
    }

    /// True when `self`'s zeroed set contains `other`'s.
    pub fn zeroes_all_of(&self, other_mask: u8) -> bool {
        self.0 & other_mask == other_mask
    }

    /// Checks that `beh` lies on the face within `tol`.
    pub fn holds(&self, beh: &Behavior, tol: f64) -> Result<bool> {
        let f = beh.free_vector()?;
        Ok(self.zeroed().iter().all(|&i| f.0[i - 1].abs() <= tol))
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.zeroed().iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// `μ·PR + (1−μ)·Σ wᵢ Lᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub weights: [f64; 8],
}

impl Segment {
    pub fn new(weights: [f64; 8]) -> Result<Segment> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "segment weights must be nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "segment weights sum to {sum}, not 1"
            )));
        }
        Ok(Segment { weights })
    }

    /// Segment towards an arbitrary local point of the simplex, given by its free vector.
    pub fn towards(local: &FreeVector) -> Result<Segment> {
        Segment::new(local.0)
    }

    pub fn free_point(&self, mu: f64) -> FreeVector {
        let mut f = [0.0; 8];
        for (fi, w) in f.iter_mut().zip(&self.weights) {
            *fi = (1.0 - mu) * w;
        }
        FreeVector(f)
    }

    pub fn point(&self, mu: f64) -> Behavior {
        self.free_point(mu)
            .to_behavior()
            .expect("convex combination of simplex vertices")
    }

    pub fn local_point(&self) -> Behavior {
        self.point(0.0)
    }

    /// Smallest face containing the segment.
    pub fn face(&self) -> Option<Face> {
        let mut mask = 0u8;
        for (i, w) in self.weights.iter().enumerate() {
            if *w == 0.0 {
                mask |= 1 << i;
            }
        }
        Face::from_mask(mask).ok()
    }
}

/// Segment from the uniform mixture of the face's local vertices to the PR box.
pub fn center_segment(face: Face) -> Result<Segment> {
    let verts = face.local_vertices();
    if verts.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "face {face} has no local vertex, so it has no center segment"
        )));
    }
    let w = 1.0 / verts.len() as f64;
    let mut weights = [0.0; 8];
    for i in verts {
        weights[i - 1] = w;
    }
    Segment::new(weights)
}

/// Which family of zero-probability conditions produced an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeFamily {
    /// Zeros `p(a⊕1, a⊕xy|x,y)` and `p(a⊕1, a⊕xy⊕x|x,y⊕1)`.
    SameX,
    /// Zeros `p(a⊕1, a⊕xy|x,y)` and `p(a⊕1⊕y, a⊕xy|x⊕1,y)`.
    SameY,
}

/// `(a, x, y)` label with the pair of free indices it forces to zero.
pub type LabeledEdge = ((usize, usize, usize), (usize, usize));

/// Zero-probability pairs (as free indices) for every `(a,x,y)` in one family.
pub fn edge_family(family: EdgeFamily) -> Vec<LabeledEdge> {
    let mut out = Vec::new();
    for a in 0..2 {
        for x in 0..2 {
            for y in 0..2 {
                let first = index_of(a ^ 1, a ^ (x & y), x, y);
                let second = match family {
                    EdgeFamily::SameX => index_of(a ^ 1, a ^ (x & y) ^ x, x, y ^ 1),
                    EdgeFamily::SameY => index_of(a ^ 1 ^ y, a ^ (x & y), x ^ 1, y),
                };
                out.push(((a, x, y), (first.min(second), first.max(second))));
            }
        }
    }
    out
}

/// Deduplicated union of both families, as sorted pairs.
pub fn void_edges() -> Vec<(usize, usize)> {
    let set: BTreeSet<(usize, usize)> = [EdgeFamily::SameX, EdgeFamily::SameY]
        .into_iter()
        .flat_map(edge_family)
        .map(|(_, e)| e)
        .collect();
    set.into_iter().collect()
}

pub fn edge_mask((i, j): (usize, usize)) -> u8 {
    (1 << (i - 1)) | (1 << (j - 1))
}

/// Why the combinatorial rule declares a face void.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoidReason {
    Edge(usize, usize),
    ContainsS1,
    ContainsS2,
}

impl fmt::Display for VoidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VoidReason::Edge(i, j) => write!(f, "edge {i}-{j}"),
            VoidReason::ContainsS1 => write!(f, "S1"),
            VoidReason::ContainsS2 => write!(f, "S2"),
        }
    }
}

/// First void edge contained in the zeroed set, else S1/S2 containment.
pub fn void_reason(face: Face) -> Option<VoidReason> {
    for e in void_edges() {
        if face.zeroes_all_of(edge_mask(e)) {
            return Some(VoidReason::Edge(e.0, e.1));
        }
    }
    if face.zeroes_all_of(S1) {
        return Some(VoidReason::ContainsS1);
    }
    if face.zeroes_all_of(S2) {
        return Some(VoidReason::ContainsS2);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_matrix_rows() {
        let v = nl_vertices();
        let row3 = v[2].index_vector().unwrap();
        let expected = [
            0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 0., 1., 0., 1., 0.,
        ];
        assert_eq!(row3, expected);
        let pr = v[8].index_vector().unwrap();
        for (i, p) in pr.iter().enumerate() {
            assert_eq!(*p, if i >= 8 { 0.5 } else { 0.0 });
        }
        for i in 1..=8 {
            assert_eq!(v[i - 1].free_vector().unwrap(), FreeVector::unit(i));
        }
        assert_eq!(affine_rank(), 8);
    }

    #[test]
    fn edge_examples() {
        let fam1 = edge_family(EdgeFamily::SameX);
        let (_, e) = fam1.iter().find(|(axy, _)| *axy == (1, 1, 1)).unwrap();
        assert_eq!(*e, (5, 7));
        let fam2 = edge_family(EdgeFamily::SameY);
        let (_, e) = fam2.iter().find(|(axy, _)| *axy == (0, 0, 0)).unwrap();
        assert_eq!(*e, (2, 6));
    }

    #[test]
    fn eight_edges() {
        let edges = void_edges();
        assert_eq!(
            edges,
            vec![
                (1, 3),
                (1, 5),
                (2, 4),
                (2, 6),
                (3, 8),
                (4, 7),
                (5, 7),
                (6, 8)
            ]
        );
    }

    #[test]
    fn center_segment_weights() {
        let seg = center_segment(Face::from_zeroed(&[6, 8]).unwrap()).unwrap();
        for i in 1..=8 {
            let w = if i == 6 || i == 8 { 0.0 } else { 1.0 / 6.0 };
            assert_eq!(seg.weights[i - 1], w);
        }
        let seg = center_segment(Face::from_zeroed(&[8]).unwrap()).unwrap();
        assert!(seg.weights[..7]
            .iter()
            .all(|w| (*w - 1.0 / 7.0).abs() < 1e-15));
        assert!(center_segment(Face::from_mask(0xff).unwrap()).is_err());
    }

    #[test]
    fn segment_face_and_display() {
        let f = Face::from_zeroed(&[2, 3, 4, 7, 8]).unwrap();
        assert_eq!(center_segment(f).unwrap().face(), Some(f));
        assert_eq!(f.to_string(), "{2,3,4,7,8}");
        assert_eq!(f.dim(), 3);
        assert_eq!(f.local_vertices(), vec![1, 5, 6]);
    }

    #[test]
    fn reasons() {
        assert_eq!(
            void_reason(Face::from_mask(S1).unwrap()),
            Some(VoidReason::ContainsS1)
        );
        assert_eq!(void_reason(Face::from_zeroed(&[7]).unwrap()), None);
        assert_eq!(
            void_reason(Face::from_zeroed(&[5, 7]).unwrap()),
            Some(VoidReason::Edge(5, 7))
        );
    }
}
