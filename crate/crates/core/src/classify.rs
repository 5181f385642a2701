//! Void / not-void classification of every nonlocal face of the simplex.
//!
//! A face is a quantum void when its zeroed set contains a void edge or one of
//! S1, S2. Every other face needs a concrete two-qubit witness on the face with
//! positive CHSH value: relabeled maximal Hardy points first, then a seeded
//! multi-start search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::chsh_value;
use crate::error::{Error, Result};
use crate::hardy::{hardy_witnesses, HardyArgument};
use crate::principles::{principle_mu, Principle};
use crate::quantum::{behavior_from_qubit, chsh_search, restart_seed, QubitConfig, SearchSettings};
use crate::simplex::{center_segment, void_reason, Face, VoidReason};

/// CHSH value a witness must exceed.
pub const WITNESS_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    QuantumVoid,
    NotVoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WitnessSource {
    Hardy(HardyArgument),
    Optimized { restarts_used: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub source: WitnessSource,
    pub config: QubitConfig,
    pub chsh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Evidence {
    Rule(VoidReason),
    Witness(Witness),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoidClassification {
    pub face: Face,
    pub verdict: Verdict,
    pub evidence: Evidence,
}

/// Source of quantum witnesses for faces the combinatorial rule leaves open.
pub trait WitnessSearch: Sync {
    fn find(&self, face: Face) -> Option<Witness>;

    /// Restart budget, reported when no witness is found.
    fn budget(&self) -> usize {
        0
    }
}

/// Hardy witnesses first, then the seeded qubit search (seeded per face).
pub struct StandardSearch {
    pub settings: SearchSettings,
    pub threshold: f64,
    hardy: Vec<(HardyArgument, QubitConfig)>,
}

impl StandardSearch {
    pub fn new(settings: SearchSettings) -> Self {
        StandardSearch {
            settings,
            threshold: WITNESS_THRESHOLD,
            hardy: hardy_witnesses(),
        }
    }
}

impl WitnessSearch for StandardSearch {
    fn find(&self, face: Face) -> Option<Witness> {
        for (arg, cfg) in &self.hardy {
            if arg.face().zeroes_all_of(face.mask()) {
                let chsh = chsh_value(&behavior_from_qubit(cfg)).ok()?;
                return Some(Witness {
                    source: WitnessSource::Hardy(*arg),
                    config: cfg.clone(),
                    chsh,
                });
            }
        }
        let settings = SearchSettings {
            seed: restart_seed(self.settings.seed, face.mask() as u64),
            ..self.settings
        };
        let out = chsh_search(&face.zeroed())
            .ok()?
            .maximize(&settings, Some(self.threshold))?;
        if out.value <= self.threshold {
            return None;
        }
        Some(Witness {
            source: WitnessSource::Optimized {
                restarts_used: out.restarts_used,
            },
            config: QubitConfig::from_model(&out.model).ok()?,
            chsh: out.value,
        })
    }

    fn budget(&self) -> usize {
        self.settings.restarts
    }
}

/// Checks that a witness lies on the face and is nonlocal.
pub fn witness_is_valid(face: Face, w: &Witness, zero_tol: f64, threshold: f64) -> bool {
    let beh = behavior_from_qubit(&w.config);
    matches!(face.holds(&beh, zero_tol), Ok(true)) && chsh_value(&beh).is_ok_and(|v| v > threshold)
}

pub fn classify_face(face: Face, search: &dyn WitnessSearch) -> Result<VoidClassification> {
    if let Some(reason) = void_reason(face) {
        return Ok(VoidClassification {
            face,
            verdict: Verdict::QuantumVoid,
            evidence: Evidence::Rule(reason),
        });
    }
    match search.find(face) {
        Some(w) => Ok(VoidClassification {
            face,
            verdict: Verdict::NotVoid,
            evidence: Evidence::Witness(w),
        }),
        None => Err(Error::WitnessNotFound {
            mask: face.mask(),
            restarts: search.budget(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimCount {
    pub dim: usize,
    pub faces: usize,
    pub voids: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationTable {
    pub rows: Vec<VoidClassification>,
    pub counts: Vec<DimCount>,
}

pub fn dimension_counts(rows: &[VoidClassification]) -> Vec<DimCount> {
    let mut counts: Vec<DimCount> = (0..8)
        .map(|dim| DimCount {
            dim,
            faces: 0,
            voids: 0,
        })
        .collect();
    for r in rows {
        let c = &mut counts[r.face.dim()];
        c.faces += 1;
        if r.verdict == Verdict::QuantumVoid {
            c.voids += 1;
        }
    }
    counts
}

/// Classifies every face, returning per-face outcomes in mask order.
pub fn classify_each(search: &dyn WitnessSearch) -> Vec<(Face, Result<VoidClassification>)> {
    let faces: Vec<Face> = Face::all().collect();
    faces
        .into_par_iter()
        .map(|f| (f, classify_face(f, search)))
        .collect()
}

/// All 255 faces; fails with the first face lacking a witness.
pub fn classify_all(search: &dyn WitnessSearch) -> Result<ClassificationTable> {
    let rows = classify_each(search)
        .into_iter()
        .map(|(_, r)| r)
        .collect::<Result<Vec<_>>>()?;
    let counts = dimension_counts(&rows);
    Ok(ClassificationTable { rows, counts })
}

/// Independent evidence for a void face: the best qubit CHSH value found on
/// it and the macroscopic-locality boundary on its center segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoidCheck {
    pub mask: u8,
    pub qubit_best: f64,
    pub ml_mu: Option<f64>,
}

pub fn verify_void(face: Face, settings: &SearchSettings) -> Result<VoidCheck> {
    let out = chsh_search(&face.zeroed())?.maximize(settings, None);
    let ml_mu = match center_segment(face) {
        Ok(seg) => Some(principle_mu(&seg, Principle::MacroscopicLocality)?),
        Err(_) => None,
    };
    Ok(VoidCheck {
        mask: face.mask(),
        qubit_best: out.map_or(0.0, |o| o.value.max(0.0)),
        ml_mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> StandardSearch {
        StandardSearch::new(SearchSettings {
            restarts: 32,
            seed: 7,
            ..SearchSettings::default()
        })
    }

    #[test]
    fn single_zero_face_uses_hardy() {
        let c = classify_face(Face::from_zeroed(&[7]).unwrap(), &quick()).unwrap();
        assert_eq!(c.verdict, Verdict::NotVoid);
        let Evidence::Witness(w) = c.evidence else {
            panic!("expected a witness")
        };
        assert!(matches!(w.source, WitnessSource::Hardy(_)));
    }

    #[test]
    fn hardy_face_is_not_void() {
        let f = Face::from_zeroed(&[3, 6, 7]).unwrap();
        let c = classify_face(f, &quick()).unwrap();
        let Evidence::Witness(w) = c.evidence else {
            panic!("expected a witness")
        };
        assert!(witness_is_valid(f, &w, 1e-12, WITNESS_THRESHOLD));
    }

    #[test]
    fn s1_is_void() {
        let c = classify_face(Face::from_mask(crate::simplex::S1).unwrap(), &quick()).unwrap();
        assert_eq!(c.verdict, Verdict::QuantumVoid);
    }

    #[test]
    fn three_of_s1_needs_search() {
        let f = Face::from_zeroed(&[1, 2, 7]).unwrap();
        let c = classify_face(f, &quick()).unwrap();
        let Evidence::Witness(w) = c.evidence else {
            panic!("expected a witness")
        };
        assert!(matches!(w.source, WitnessSource::Optimized { .. }));
        assert!(witness_is_valid(f, &w, 1e-8, WITNESS_THRESHOLD));
    }
}
