//! Hardy's nonlocality argument on the CHSH facet: the eight argument
//! variants, the maximal quantum Hardy point and its local shadow `L_H`.

use serde::{Deserialize, Serialize};

use crate::behavior::{index_of, Behavior};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::quantum::{behavior_from_qubit, BlochAxis, QubitConfig};
use crate::simplex::{Face, Segment};

/// Tolerance on the three zero conditions when reading off a success probability.
pub const CONDITION_TOL: f64 = 1e-9;

/// The argument labelled by `(a, x, y)`: success entry `p(a, a⊕xy|x,y) > 0`
/// together with three vanishing entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HardyArgument {
    pub a: usize,
    pub x: usize,
    pub y: usize,
}

impl HardyArgument {
    pub fn canonical() -> Self {
        HardyArgument { a: 0, x: 0, y: 0 }
    }

    pub fn i(&self) -> usize {
        self.a ^ self.y ^ 1
    }

    pub fn j(&self) -> usize {
        (self.x & self.y) ^ self.x ^ self.a ^ 1
    }

    /// `(a, b, x, y)` of the success entry.
    pub fn success_entry(&self) -> (usize, usize, usize, usize) {
        let (a, x, y) = (self.a, self.x, self.y);
        (a, a ^ (x & y), x, y)
    }

    pub fn zero_entries(&self) -> [(usize, usize, usize, usize); 3] {
        let (a, x, y) = (self.a, self.x, self.y);
        let (i, j) = (self.i(), self.j());
        [
            (i, a ^ (x & y), x ^ 1, y),
            (a, j, x, y ^ 1),
            (i ^ 1, j ^ 1, x ^ 1, y ^ 1),
        ]
    }

    pub fn zero_indices(&self) -> [usize; 3] {
        self.zero_entries().map(|(a, b, x, y)| index_of(a, b, x, y))
    }

    pub fn face(&self) -> Face {
        Face::from_zeroed(&self.zero_indices()).expect("three valid indices")
    }

    /// Four conditions: zeros within `tol` and a positive success entry.
    pub fn is_satisfied_by(&self, beh: &Behavior, tol: f64) -> bool {
        let (a, b, x, y) = self.success_entry();
        self.zero_entries()
            .iter()
            .all(|&(a, b, x, y)| beh.get(a, b, x, y) <= tol)
            && beh.get(a, b, x, y) > tol
    }
}

pub fn enumerate_arguments() -> Vec<HardyArgument> {
    let mut out = Vec::with_capacity(8);
    for a in 0..2 {
        for x in 0..2 {
            for y in 0..2 {
                out.push(HardyArgument { a, x, y });
            }
        }
    }
    out
}

/// Success probability, after checking the three zero conditions.
pub fn hardy_success(beh: &Behavior, arg: &HardyArgument) -> Result<f64> {
    for (a, b, x, y) in arg.zero_entries() {
        let value = beh.get(a, b, x, y);
        if value.abs() > CONDITION_TOL {
            return Err(Error::ConditionsViolated { a, b, x, y, value });
        }
    }
    let (a, b, x, y) = arg.success_entry();
    Ok(beh.get(a, b, x, y))
}

fn sqrt5() -> f64 {
    5f64.sqrt()
}

/// `(5√5 − 11)/2`, the largest quantum success probability.
pub fn quantum_max_success() -> f64 {
    (5.0 * sqrt5() - 11.0) / 2.0
}

/// Measurement angle `α = 2·atan(√(√5 − 2))`; `|v⟩ = cos α|0⟩ + sin α|1⟩`.
pub fn hardy_alpha() -> f64 {
    2.0 * (sqrt5() - 2.0).sqrt().atan()
}

/// State and measurements reaching the maximal success probability for the
/// canonical argument.
pub fn hardy_config() -> QubitConfig {
    let s5 = sqrt5();
    let c00 = -((5.0 * s5 - 11.0) / 2.0).sqrt();
    let c01 = (-3.0 + s5) / 2.0;
    let c11 = ((s5 - 1.0) / 2.0).sqrt();
    let z = BlochAxis {
        theta: 0.0,
        phi: 0.0,
    };
    let v = BlochAxis {
        theta: 2.0 * hardy_alpha(),
        phi: 0.0,
    };
    QubitConfig {
        state: [c00, c01, c01, c11].map(|r| C64::new(r, 0.0)),
        axes: [z, v, z, v],
    }
}

pub fn hardy_max_point() -> Behavior {
    behavior_from_qubit(&hardy_config())
}

/// The closed-form table of the maximal Hardy distribution, rows `(x,y)`,
/// columns `(a,b)` in the order 00, 01, 10, 11.
pub fn max_point_closed_form() -> Behavior {
    let s5 = sqrt5();
    let h = (5.0 * s5 - 11.0) / 2.0;
    let q = (7.0 - 3.0 * s5) / 2.0;
    let g = (-1.0 + s5) / 2.0;
    let t = -2.0 + s5;
    let r = (3.0 - s5) / 2.0;
    let rows = [[h, q, q, g], [t, 0.0, q, g], [t, q, 0.0, g], [0.0, r, r, t]];
    Behavior::from_fn(2, 2, |a, b, x, y| rows[2 * x + y][2 * a + b])
}

/// Convex weights of `L_H` over L1..L8.
pub fn l_h_weights() -> [f64; 8] {
    let s5 = sqrt5();
    let w = (9.0 - s5) / 38.0;
    let w8 = (1.0 + 2.0 * s5) / 19.0;
    [w, w, 0.0, w, w, 0.0, 0.0, w8]
}

pub fn hardy_segment() -> Segment {
    let mut w = l_h_weights();
    // absorb the last-ulp rounding of the closed forms into L8
    let sum: f64 = w.iter().sum();
    w[7] += 1.0 - sum;
    Segment::new(w).expect("weights sum to one")
}

pub fn l_h_point() -> Behavior {
    hardy_segment().local_point()
}

/// A relabeled copy of the maximal Hardy configuration for every argument.
///
/// Input and output relabelings that fix the canonical PR box permute the
/// arguments among themselves; the first relabeling that lands on each
/// argument is used.
pub fn hardy_witnesses() -> Vec<(HardyArgument, QubitConfig)> {
    let base = hardy_config();
    let args = enumerate_arguments();
    let mut found: Vec<Option<QubitConfig>> = vec![None; args.len()];
    for code in 0u8..64 {
        let bit = |k: u8| code & (1 << k) != 0;
        let cfg = base.relabeled(bit(0), bit(1), [bit(2), bit(3)], [bit(4), bit(5)]);
        let beh = behavior_from_qubit(&cfg);
        for (slot, arg) in found.iter_mut().zip(&args) {
            if slot.is_none() && arg.is_satisfied_by(&beh, 1e-12) {
                *slot = Some(cfg.clone());
            }
        }
    }
    args.into_iter()
        .zip(found)
        .filter_map(|(a, c)| c.map(|c| (a, c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{canonical_pr, chsh_value};

    #[test]
    fn canonical_argument_indices() {
        let arg = HardyArgument::canonical();
        assert_eq!(arg.zero_indices(), [6, 3, 7]);
        assert_eq!(arg.success_entry(), (0, 0, 0, 0));
    }

    #[test]
    fn pr_box_satisfies_every_argument() {
        let pr = canonical_pr();
        for arg in enumerate_arguments() {
            assert!(arg.is_satisfied_by(&pr, 1e-12));
            assert_eq!(hardy_success(&pr, &arg).unwrap(), 0.5);
        }
    }

    #[test]
    fn max_point_matches_closed_forms() {
        let p = hardy_max_point();
        assert!(p.max_abs_diff(&max_point_closed_form()) < 1e-12);
        let s = hardy_success(&p, &HardyArgument::canonical()).unwrap();
        assert!((s - quantum_max_success()).abs() < 1e-12);
    }

    #[test]
    fn l_h_is_local_endpoint() {
        let w = l_h_weights();
        assert!((w[0] - 0.177_998_2).abs() < 1e-7);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(chsh_value(&l_h_point()).unwrap().abs() < 1e-12);
        assert_eq!(
            hardy_success(&l_h_point(), &HardyArgument::canonical()).unwrap(),
            0.0
        );
    }

    #[test]
    fn violated_condition_reported() {
        let beh = crate::simplex::local_vertex(6);
        assert!(matches!(
            hardy_success(&beh, &HardyArgument::canonical()),
            Err(Error::ConditionsViolated { .. })
        ));
    }

    #[test]
    fn every_argument_has_a_witness() {
        let w = hardy_witnesses();
        assert_eq!(w.len(), 8);
        for (arg, cfg) in w {
            let beh = behavior_from_qubit(&cfg);
            let s = hardy_success(&beh, &arg).unwrap();
            assert!((s - quantum_max_success()).abs() < 1e-12);
            assert!(chsh_value(&beh).unwrap() > 0.18);
        }
    }
}
