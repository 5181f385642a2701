//! Closed-form principle checks (Uffink's quadratic inequality and
//! macroscopic locality) and the bisection search for the boundary along a
//! segment.
//!
//! Uffink's inequality is only a necessary condition for information
//! causality; reports call it that.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::behavior::{correlators, Behavior};
use crate::error::{Error, Result};
use crate::simplex::{center_segment, Face, Segment};

pub const UFFINK_THRESHOLD: f64 = 4.0;
pub const ML_THRESHOLD: f64 = PI;
/// `1 - C²` at or below this marks a deterministic marginal.
pub const ML_DEGENERACY_EPS: f64 = 1e-9;
pub const DOMAIN_SLACK: f64 = 1e-9;
/// Absolute slack on the predicate thresholds, so points exactly on the
/// boundary are not rejected by round-off.
pub const PREDICATE_SLACK: f64 = 1e-12;
pub const BISECTION_ITERATIONS: usize = 60;
pub const DEFAULT_TOL_MU: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrincipleVerdict {
    pub value: f64,
    pub threshold: f64,
    pub satisfied: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Principle {
    /// Necessary condition for information causality.
    Uffink,
    MacroscopicLocality,
}

impl Principle {
    pub fn name(&self) -> &'static str {
        match self {
            Principle::Uffink => "uffink",
            Principle::MacroscopicLocality => "ml",
        }
    }

    pub fn verdict(&self, beh: &Behavior) -> Result<PrincipleVerdict> {
        match self {
            Principle::Uffink => uffink_verdict(beh),
            Principle::MacroscopicLocality => ml_value(beh),
        }
    }

    pub fn check(&self, beh: &Behavior) -> Result<bool> {
        Ok(self.verdict(beh)?.satisfied)
    }
}

/// `(C00 + C10)² + (C01 − C11)²`.
pub fn uffink_value(beh: &Behavior) -> Result<f64> {
    let c = correlators(beh)?.cxy;
    Ok((c[0][0] + c[1][0]).powi(2) + (c[0][1] - c[1][1]).powi(2))
}

pub fn uffink_verdict(beh: &Behavior) -> Result<PrincipleVerdict> {
    let value = uffink_value(beh)?;
    Ok(PrincipleVerdict {
        value,
        threshold: UFFINK_THRESHOLD,
        satisfied: value <= UFFINK_THRESHOLD + PREDICATE_SLACK,
        degenerate: false,
    })
}

/// `|asin D00 + asin D01 + asin D10 − asin D11|` against π.
pub fn ml_value(beh: &Behavior) -> Result<PrincipleVerdict> {
    let c = correlators(beh)?;
    let degenerate =
        c.cx.iter()
            .chain(c.cy.iter())
            .any(|m| 1.0 - m * m <= ML_DEGENERACY_EPS);
    if degenerate {
        return Ok(PrincipleVerdict {
            value: f64::NAN,
            threshold: ML_THRESHOLD,
            satisfied: true,
            degenerate: true,
        });
    }
    let mut sum = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let num = c.cxy[x][y] - c.cx[x] * c.cy[y];
            let den = ((1.0 - c.cx[x] * c.cx[x]) * (1.0 - c.cy[y] * c.cy[y])).sqrt();
            let d = num / den;
            if d.abs() > 1.0 + DOMAIN_SLACK {
                return Err(Error::Domain { x, y, value: d });
            }
            let term = d.clamp(-1.0, 1.0).asin();
            sum += if x == 1 && y == 1 { -term } else { term };
        }
    }
    let value = sum.abs();
    Ok(PrincipleVerdict {
        value,
        threshold: ML_THRESHOLD,
        satisfied: value <= ML_THRESHOLD + PREDICATE_SLACK,
        degenerate: false,
    })
}

/// Supremum of `μ` with `check(seg.point(μ))`, by bisection.
///
/// Stops when the bracket is narrower than `tol_mu` or after `max_iter`
/// halvings, and returns the lower (accepted) end.
pub fn bisect_mu<F>(seg: &Segment, mut check: F, tol_mu: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(&Behavior) -> Result<bool>,
{
    if !check(&seg.point(0.0))? {
        return Err(Error::PredicateInconsistent);
    }
    if check(&seg.point(1.0))? {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..max_iter {
        if hi - lo <= tol_mu {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if check(&seg.point(mid))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn boundary_mu<F>(seg: &Segment, check: F, tol_mu: f64) -> Result<f64>
where
    F: FnMut(&Behavior) -> Result<bool>,
{
    bisect_mu(seg, check, tol_mu, BISECTION_ITERATIONS)
}

/// Boundary along a segment for one of the closed-form principles.
pub fn principle_mu(seg: &Segment, principle: Principle) -> Result<f64> {
    boundary_mu(seg, |b| principle.check(b), 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrincipleCategory {
    /// Both principles give a zero boundary on the face.
    Both,
    MacroscopicLocalityOnly,
    UffinkOnly,
    Neither,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrincipleReport {
    pub mask: u8,
    pub uffink_mu: f64,
    pub ml_mu: f64,
    pub uffink_reproducible: bool,
    pub ml_reproducible: bool,
    pub category: PrincipleCategory,
}

/// Boundary of both principles on the center segment of a void face.
pub fn void_principle_report(face: Face, tol_mu: f64) -> Result<PrincipleReport> {
    let seg = center_segment(face)?;
    let uffink_mu = principle_mu(&seg, Principle::Uffink)?;
    let ml_mu = principle_mu(&seg, Principle::MacroscopicLocality)?;
    let u = uffink_mu <= tol_mu;
    let m = ml_mu <= tol_mu;
    let category = match (u, m) {
        (true, true) => PrincipleCategory::Both,
        (false, true) => PrincipleCategory::MacroscopicLocalityOnly,
        (true, false) => PrincipleCategory::UffinkOnly,
        (false, false) => PrincipleCategory::Neither,
    };
    Ok(PrincipleReport {
        mask: face.mask(),
        uffink_mu,
        ml_mu,
        uffink_reproducible: u,
        ml_reproducible: m,
        category,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{canonical_pr, local_box, white_noise};
    use crate::simplex::local_vertex;

    #[test]
    fn uffink_examples() {
        assert!((uffink_value(&canonical_pr()).unwrap() - 8.0).abs() < 1e-12);
        assert!((uffink_value(&local_box(0, 0, 0, 0)).unwrap() - 4.0).abs() < 1e-12);
        assert!(uffink_value(&white_noise(2, 2)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn ml_examples() {
        let v = ml_value(&canonical_pr()).unwrap();
        assert!((v.value - 2.0 * PI).abs() < 1e-12);
        assert!(!v.satisfied);
        for i in 1..=8 {
            let v = ml_value(&local_vertex(i)).unwrap();
            assert!(v.degenerate && v.satisfied);
        }
    }

    #[test]
    fn local_endpoint_must_satisfy() {
        let seg = Segment::new([1.0, 0., 0., 0., 0., 0., 0., 0.]).unwrap();
        let r = boundary_mu(&seg, |_| Ok(false), 1e-5);
        assert!(matches!(r, Err(Error::PredicateInconsistent)));
    }

    #[test]
    fn pr_to_l1_is_zero() {
        let seg = Segment::new([1.0, 0., 0., 0., 0., 0., 0., 0.]).unwrap();
        assert!(principle_mu(&seg, Principle::Uffink).unwrap() < DEFAULT_TOL_MU);
        assert!(principle_mu(&seg, Principle::MacroscopicLocality).unwrap() < DEFAULT_TOL_MU);
    }
}
