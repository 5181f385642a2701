//! Probability tables p(a,b|x,y) for two parties with binary outcomes.
//!
//! The CHSH case (two inputs per party) additionally carries the 16-entry
//! vector layout used throughout the crate: entry `i` holds p(a,b|x,y) with
//! `i = 8c + 4x + 2y + a + 1` and `c = a ⊕ b ⊕ xy ⊕ 1`. Entries 1..=8 are the
//! free coordinates of the nonlocal simplex spanned by the canonical PR box and
//! the eight local vertices on its CHSH facet.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for analytic equality checks.
pub const EXACT_TOL: f64 = 1e-12;

/// A conditional distribution p(a,b|x,y) with binary outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    inputs_a: usize,
    inputs_b: usize,
    p: Vec<f64>,
}

impl Behavior {
    /// Builds a behavior by evaluating `f(a, b, x, y)` on every tuple.
    pub fn from_fn(
        inputs_a: usize,
        inputs_b: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut p = vec![0.0; inputs_a * inputs_b * 4];
        for x in 0..inputs_a {
            for y in 0..inputs_b {
                for a in 0..2 {
                    for b in 0..2 {
                        p[((x * inputs_b + y) * 2 + a) * 2 + b] = f(a, b, x, y);
                    }
                }
            }
        }
        Behavior {
            inputs_a,
            inputs_b,
            p,
        }
    }

    pub fn inputs(&self) -> (usize, usize) {
        (self.inputs_a, self.inputs_b)
    }

    pub fn is_chsh(&self) -> bool {
        self.inputs_a == 2 && self.inputs_b == 2
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[((x * self.inputs_b + y) * 2 + a) * 2 + b]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, x: usize, y: usize, value: f64) {
        self.p[((x * self.inputs_b + y) * 2 + a) * 2 + b] = value;
    }

    /// Alice's marginal p_A(a|x), read off the y = 0 block.
    pub fn marginal_a(&self, a: usize, x: usize) -> f64 {
        self.get(a, 0, x, 0) + self.get(a, 1, x, 0)
    }

    /// Bob's marginal p_B(b|y), read off the x = 0 block.
    pub fn marginal_b(&self, b: usize, y: usize) -> f64 {
        self.get(0, b, 0, y) + self.get(1, b, 0, y)
    }

    /// Raw entries in `(x, y, a, b)` row-major order.
    pub fn raw(&self) -> &[f64] {
        &self.p
    }

    /// Checks range, normalization and no-signaling within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (k, &v) in self.p.iter().enumerate() {
            if !(v >= -tol && v <= 1.0 + tol) {
                return Err(Error::InvalidBehavior(format!(
                    "entry {k} = {v} outside [0, 1]"
                )));
            }
        }
        for x in 0..self.inputs_a {
            for y in 0..self.inputs_b {
                let s: f64 = (0..4).map(|ab| self.get(ab / 2, ab % 2, x, y)).sum();
                if (s - 1.0).abs() > tol {
                    return Err(Error::InvalidBehavior(format!(
                        "block (x={x}, y={y}) sums to {s}"
                    )));
                }
            }
        }
        for x in 0..self.inputs_a {
            for a in 0..2 {
                let reference = self.marginal_a(a, x);
                for y in 1..self.inputs_b {
                    let m = self.get(a, 0, x, y) + self.get(a, 1, x, y);
                    if (m - reference).abs() > tol {
                        return Err(Error::InvalidBehavior(format!(
                            "Alice's marginal p({a}|{x}) depends on y"
                        )));
                    }
                }
            }
        }
        for y in 0..self.inputs_b {
            for b in 0..2 {
                let reference = self.marginal_b(b, y);
                for x in 1..self.inputs_a {
                    let m = self.get(0, b, x, y) + self.get(1, b, x, y);
                    if (m - reference).abs() > tol {
                        return Err(Error::InvalidBehavior(format!(
                            "Bob's marginal p({b}|{y}) depends on x"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.validate(tol).is_ok()
    }

    /// `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &Behavior, weight: f64) -> Behavior {
        assert_eq!(self.inputs(), other.inputs(), "scenario mismatch");
        Behavior {
            inputs_a: self.inputs_a,
            inputs_b: self.inputs_b,
            p: self
                .p
                .iter()
                .zip(&other.p)
                .map(|(u, v)| weight * u + (1.0 - weight) * v)
                .collect(),
        }
    }

    /// Convex (or affine) combination of behaviors sharing one scenario.
    pub fn combine<'a>(terms: impl IntoIterator<Item = (f64, &'a Behavior)>) -> Behavior {
        let mut iter = terms.into_iter();
        let (w0, first) = iter.next().expect("at least one term");
        let mut out = Behavior {
            inputs_a: first.inputs_a,
            inputs_b: first.inputs_b,
            p: first.p.iter().map(|v| w0 * v).collect(),
        };
        for (w, b) in iter {
            assert_eq!(out.inputs(), b.inputs(), "scenario mismatch");
            for (o, v) in out.p.iter_mut().zip(&b.p) {
                *o += w * v;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Behavior) -> f64 {
        assert_eq!(self.inputs(), other.inputs(), "scenario mismatch");
        self.p
            .iter()
            .zip(&other.p)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max)
    }

    fn require_chsh(&self) -> Result<()> {
        if self.is_chsh() {
            Ok(())
        } else {
            Err(Error::Scenario {
                expected: "2-input",
                got: format!("{}x{}", self.inputs_a, self.inputs_b),
            })
        }
    }

    /// The 16 probabilities in `index_of` order (position `i - 1` holds index `i`).
    pub fn index_vector(&self) -> Result<[f64; 16]> {
        self.require_chsh()?;
        let mut out = [0.0; 16];
        for (a, b, x, y) in tuples() {
            out[index_of(a, b, x, y) - 1] = self.get(a, b, x, y);
        }
        Ok(out)
    }

    pub fn from_index_vector(v: &[f64; 16]) -> Behavior {
        Behavior::from_fn(2, 2, |a, b, x, y| v[index_of(a, b, x, y) - 1])
    }

    /// The free coordinates p_1..p_8 of a CHSH behavior.
    pub fn free_vector(&self) -> Result<FreeVector> {
        let v = self.index_vector()?;
        let mut f = [0.0; 8];
        f.copy_from_slice(&v[..8]);
        Ok(FreeVector(f))
    }

    /// Probability with 1-based simplex index `i` (1..=16).
    pub fn by_index(&self, i: usize) -> f64 {
        let (a, b, x, y) = tuple_of(i);
        self.get(a, b, x, y)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&BehaviorFile::from(self))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Behavior> {
        let text = std::fs::read_to_string(path)?;
        Behavior::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&BehaviorFile::from(self))?)
    }

    pub fn from_json_str(text: &str) -> Result<Behavior> {
        let file: BehaviorFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// All `(a, b, x, y)` bit tuples.
pub fn tuples() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|k| ((k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1))
}

/// 1-based vector index of p(a,b|x,y) in the simplex ordering.
pub fn index_of(a: usize, b: usize, x: usize, y: usize) -> usize {
    debug_assert!(a < 2 && b < 2 && x < 2 && y < 2);
    let c = a ^ b ^ (x & y) ^ 1;
    8 * c + 4 * x + 2 * y + a + 1
}

/// Inverse of [`index_of`].
pub fn tuple_of(i: usize) -> (usize, usize, usize, usize) {
    assert!((1..=16).contains(&i), "index {i} out of range");
    let k = i - 1;
    let c = k >> 3;
    let x = (k >> 2) & 1;
    let y = (k >> 1) & 1;
    let a = k & 1;
    let b = c ^ a ^ (x & y) ^ 1;
    (a, b, x, y)
}

/// The eight free-variable probabilities p_1..p_8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeVector(pub [f64; 8]);

impl FreeVector {
    pub fn zero() -> Self {
        FreeVector([0.0; 8])
    }

    /// `e_i` for 1-based `i`.
    pub fn unit(i: usize) -> Self {
        let mut f = [0.0; 8];
        f[i - 1] = 1.0;
        FreeVector(f)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Reconstructs the no-signaling behavior with these free coordinates.
    ///
    /// Each dependent entry is `p_j = p_l + p_m + p_n + (1 - Σ p_i) / 2`.
    pub fn to_behavior(&self) -> Result<Behavior> {
        let f = &self.0;
        let mut v = [0.0; 16];
        v[..8].copy_from_slice(f);
        let slack = 0.5 * (1.0 - self.sum());
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    let j = index_of(a, a ^ (x & y), x, y);
                    let l = 4 * x + 2 * (y ^ 1) + a + 1;
                    let m = 4 * (x ^ 1) + 2 * y + (a ^ y ^ 1) + 1;
                    let n = 4 * (x ^ 1) + 2 * (y ^ 1) + (a ^ y) + 1;
                    v[j - 1] = f[l - 1] + f[m - 1] + f[n - 1] + slack;
                }
            }
        }
        for (k, &value) in v.iter().enumerate() {
            if !(-EXACT_TOL..=1.0 + EXACT_TOL).contains(&value) {
                return Err(Error::OutOfSimplex {
                    index: k + 1,
                    value,
                });
            }
        }
        Ok(Behavior::from_index_vector(&v))
    }
}

/// See [`FreeVector::to_behavior`].
pub fn from_free(f: &FreeVector) -> Result<Behavior> {
    f.to_behavior()
}

/// PR box `½ δ(a⊕b, xy ⊕ αx ⊕ βy ⊕ γ)`.
pub fn pr_box(alpha: usize, beta: usize, gamma: usize) -> Behavior {
    Behavior::from_fn(2, 2, |a, b, x, y| {
        if a ^ b == (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma {
            0.5
        } else {
            0.0
        }
    })
}

/// The canonical PR box.
pub fn canonical_pr() -> Behavior {
    pr_box(0, 0, 0)
}

/// Deterministic box with `a = α₁x ⊕ α₂` and `b = β₁y ⊕ β₂`.
pub fn local_box(alpha1: usize, alpha2: usize, beta1: usize, beta2: usize) -> Behavior {
    Behavior::from_fn(2, 2, |a, b, x, y| {
        if a == (alpha1 & x) ^ alpha2 && b == (beta1 & y) ^ beta2 {
            1.0
        } else {
            0.0
        }
    })
}

/// White noise p = 1/4 for any input count.
pub fn white_noise(inputs_a: usize, inputs_b: usize) -> Behavior {
    Behavior::from_fn(inputs_a, inputs_b, |_, _, _, _| 0.25)
}

/// CHSH value in free coordinates: `1 - Σ_{i≤8} p_i`. Positive means nonlocal.
pub fn chsh_value(beh: &Behavior) -> Result<f64> {
    Ok(1.0 - beh.free_vector()?.sum())
}

/// CH form `p(00|00)+p(00|01)+p(00|10)-p(00|11)-p_A(0|0)-p_B(0|0)`.
pub fn chsh_ch_form(beh: &Behavior) -> Result<f64> {
    beh.require_chsh()?;
    Ok(
        beh.get(0, 0, 0, 0) + beh.get(0, 0, 0, 1) + beh.get(0, 0, 1, 0)
            - beh.get(0, 0, 1, 1)
            - beh.marginal_a(0, 0)
            - beh.marginal_b(0, 0),
    )
}

/// Two-point and marginal correlators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlators {
    pub cxy: [[f64; 2]; 2],
    pub cx: [f64; 2],
    pub cy: [f64; 2],
}

pub fn correlators(beh: &Behavior) -> Result<Correlators> {
    beh.require_chsh()?;
    let mut cxy = [[0.0; 2]; 2];
    for (x, row) in cxy.iter_mut().enumerate() {
        for (y, c) in row.iter_mut().enumerate() {
            *c = beh.get(0, 0, x, y) + beh.get(1, 1, x, y)
                - beh.get(0, 1, x, y)
                - beh.get(1, 0, x, y);
        }
    }
    let cx = [0, 1].map(|x| beh.marginal_a(0, x) - beh.marginal_a(1, x));
    let cy = [0, 1].map(|y| beh.marginal_b(0, y) - beh.marginal_b(1, y));
    Ok(Correlators { cxy, cx, cy })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BehaviorFile {
    scenario: [usize; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<KeyedEntry>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KeyedEntry {
    a: usize,
    b: usize,
    x: usize,
    y: usize,
    p: f64,
}

impl From<&Behavior> for BehaviorFile {
    fn from(beh: &Behavior) -> Self {
        let scenario = [beh.inputs_a, beh.inputs_b, 2, 2];
        if beh.is_chsh() {
            let v = beh.index_vector().expect("CHSH scenario");
            BehaviorFile {
                scenario,
                p: Some(v.to_vec()),
                entries: None,
            }
        } else {
            let mut entries = Vec::with_capacity(beh.p.len());
            for x in 0..beh.inputs_a {
                for y in 0..beh.inputs_b {
                    for a in 0..2 {
                        for b in 0..2 {
                            entries.push(KeyedEntry {
                                a,
                                b,
                                x,
                                y,
                                p: beh.get(a, b, x, y),
                            });
                        }
                    }
                }
            }
            BehaviorFile {
                scenario,
                p: None,
                entries: Some(entries),
            }
        }
    }
}

impl TryFrom<BehaviorFile> for Behavior {
    type Error = Error;

    fn try_from(file: BehaviorFile) -> Result<Behavior> {
        let [na, nb, oa, ob] = file.scenario;
        if oa != 2 || ob != 2 || na == 0 || nb == 0 {
            return Err(Error::InvalidBehavior(format!(
                "unsupported scenario {:?}",
                file.scenario
            )));
        }
        match (file.p, file.entries) {
            (Some(p), None) => {
                if na != 2 || nb != 2 {
                    return Err(Error::InvalidBehavior(
                        "flat `p` layout is only defined for [2,2,2,2]".into(),
                    ));
                }
                let v: [f64; 16] = p.try_into().map_err(|p: Vec<f64>| {
                    Error::InvalidBehavior(format!("expected 16 entries, got {}", p.len()))
                })?;
                Ok(Behavior::from_index_vector(&v))
            }
            (None, Some(entries)) => {
                let mut beh = Behavior::from_fn(na, nb, |_, _, _, _| f64::NAN);
                for e in entries {
                    if e.a > 1 || e.b > 1 || e.x >= na || e.y >= nb {
                        return Err(Error::InvalidBehavior(format!(
                            "entry ({},{}|{},{}) outside scenario",
                            e.a, e.b, e.x, e.y
                        )));
                    }
                    beh.set(e.a, e.b, e.x, e.y, e.p);
                }
                if beh.p.iter().any(|v| v.is_nan()) {
                    return Err(Error::InvalidBehavior("missing entries".into()));
                }
                Ok(beh)
            }
            _ => Err(Error::InvalidBehavior(
                "exactly one of `p` or `entries` must be present".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_examples() {
        assert_eq!(index_of(0, 1, 0, 0), 1);
        assert_eq!(index_of(0, 0, 0, 0), 9);
        assert_eq!(index_of(1, 1, 1, 1), 8);
    }

    #[test]
    fn index_is_bijection_with_free_half() {
        let mut seen = [false; 16];
        for (a, b, x, y) in tuples() {
            let i = index_of(a, b, x, y);
            assert!(!seen[i - 1]);
            seen[i - 1] = true;
            let c = a ^ b ^ (x & y) ^ 1;
            assert_eq!(c == 0, i <= 8);
            assert_eq!(tuple_of(i), (a, b, x, y));
        }
    }

    #[test]
    fn unit_free_vector_gives_vertex_row() {
        let beh = from_free(&FreeVector::unit(1)).unwrap();
        let expected = [
            1.0, 0., 0., 0., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 1.,
        ];
        assert_eq!(beh.index_vector().unwrap(), expected);
    }

    #[test]
    fn zero_free_vector_is_pr() {
        let beh = from_free(&FreeVector::zero()).unwrap();
        assert!(beh.max_abs_diff(&canonical_pr()) < EXACT_TOL);
    }

    #[test]
    fn out_of_simplex_rejected() {
        let mut f = [0.0; 8];
        f[0] = 1.0;
        f[1] = 1.0;
        assert!(matches!(
            from_free(&FreeVector(f)),
            Err(Error::OutOfSimplex { .. })
        ));
    }

    #[test]
    fn pr_boxes_and_anticorrelated_sign() {
        for k in 0..8 {
            assert!(pr_box(k >> 2, (k >> 1) & 1, k & 1).is_valid(EXACT_TOL));
        }
        assert!(chsh_value(&pr_box(0, 0, 1)).unwrap() < 0.0);
        assert_eq!(chsh_value(&canonical_pr()).unwrap(), 1.0);
    }

    #[test]
    fn local_boxes_distinct_and_valid() {
        let boxes: Vec<_> = (0..16)
            .map(|k| local_box(k >> 3, (k >> 2) & 1, (k >> 1) & 1, k & 1))
            .collect();
        for (i, u) in boxes.iter().enumerate() {
            assert!(u.is_valid(0.0));
            for v in &boxes[i + 1..] {
                assert!(u.max_abs_diff(v) > 0.5);
            }
        }
        let l7 = local_box(0, 0, 0, 0);
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(l7.get(0, 0, x, y), 1.0);
            }
        }
        let l1 = local_box(1, 0, 1, 1);
        assert_eq!(l1.free_vector().unwrap(), FreeVector::unit(1));
    }

    #[test]
    fn ch_form_examples() {
        assert!((chsh_ch_form(&canonical_pr()).unwrap() - 0.5).abs() < EXACT_TOL);
        assert_eq!(chsh_ch_form(&local_box(0, 0, 0, 0)).unwrap(), 0.0);
    }

    #[test]
    fn correlator_examples() {
        let c = correlators(&canonical_pr()).unwrap();
        assert_eq!(c.cxy, [[1.0, 1.0], [1.0, -1.0]]);
        assert_eq!(c.cx, [0.0, 0.0]);
        assert_eq!(c.cy, [0.0, 0.0]);
        let c = correlators(&local_box(0, 0, 0, 0)).unwrap();
        assert_eq!(c.cxy, [[1.0; 2]; 2]);
        assert_eq!((c.cx, c.cy), ([1.0; 2], [1.0; 2]));
        let c = correlators(&white_noise(2, 2)).unwrap();
        assert_eq!((c.cxy, c.cx, c.cy), ([[0.0; 2]; 2], [0.0; 2], [0.0; 2]));
    }

    #[test]
    fn signaling_box_rejected() {
        let beh = Behavior::from_fn(2, 2, |a, b, _, y| if a == y && b == 0 { 1.0 } else { 0.0 });
        assert!(beh.validate(EXACT_TOL).is_err());
    }

    #[test]
    fn three_input_json_uses_keyed_entries() {
        let beh = white_noise(3, 3);
        let text = beh.to_json_string().unwrap();
        assert!(text.contains("\"entries\""));
        assert_eq!(Behavior::from_json_str(&text).unwrap(), beh);
    }

    #[test]
    fn chsh_json_layout() {
        let text = canonical_pr().to_json_string().unwrap();
        assert!(text.starts_with("{\"scenario\":[2,2,2,2],\"p\":[0.0,"));
        assert!(Behavior::from_json_str(r#"{"scenario":[2,2,2,2],"p":[0.5]}"#).is_err());
    }
}
