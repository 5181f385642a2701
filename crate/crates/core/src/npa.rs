//! Moment matrices of the NPA hierarchy at levels 1 and 1+ab for the CHSH
//! scenario, membership tests, and boundary searches along segments.
//!
//! Operators are the outcome-0 projectors `A_x`, `B_y`. A moment word is a pair
//! of Alice and Bob projector sequences (the parties commute). Words are
//! reduced by idempotence, and a word and its adjoint share one real unknown.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::behavior::{tuples, Behavior};
use crate::error::{Error, Result};
use crate::principles::bisect_mu;
use crate::sdp::{
    self, AffineFamily, SdpProblem, SdpResult, SdpSettings, SdpStatus, DEFAULT_FEAS_TOL,
};
use crate::simplex::Segment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    L1,
    L1AB,
}

impl Level {
    pub fn label(&self) -> &'static str {
        match self {
            Level::L1 => "1",
            Level::L1AB => "1+ab",
        }
    }
}

impl std::str::FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Level> {
        match s {
            "1" => Ok(Level::L1),
            "1+ab" | "1ab" => Ok(Level::L1AB),
            _ => Err(Error::InvalidArgument(format!("unknown NPA level {s:?}"))),
        }
    }
}

/// Projector sequences `(A inputs, B inputs)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl Word {
    fn new(alice: Vec<usize>, bob: Vec<usize>) -> Word {
        Word {
            alice: reduce(alice),
            bob: reduce(bob),
        }
    }

    fn adjoint(&self) -> Word {
        Word {
            alice: self.alice.iter().rev().copied().collect(),
            bob: self.bob.iter().rev().copied().collect(),
        }
    }

    /// `self† · other`, reduced and in canonical (min of word, adjoint) form.
    fn moment(&self, other: &Word) -> Word {
        let mut alice: Vec<usize> = self.alice.iter().rev().copied().collect();
        alice.extend(&other.alice);
        let mut bob: Vec<usize> = self.bob.iter().rev().copied().collect();
        bob.extend(&other.bob);
        let w = Word::new(alice, bob);
        let adj = w.adjoint();
        w.min(adj)
    }

    pub fn label(&self) -> String {
        let mut s = String::new();
        for x in &self.alice {
            s.push_str(&format!("A{x}"));
        }
        for y in &self.bob {
            s.push_str(&format!("B{y}"));
        }
        if s.is_empty() {
            s.push('1');
        }
        s
    }
}

fn reduce(mut seq: Vec<usize>) -> Vec<usize> {
    seq.dedup();
    seq
}

/// Moment determined by the behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Known {
    One,
    MarginalA(usize),
    MarginalB(usize),
    Joint(usize, usize),
}

impl Known {
    pub fn value(&self, beh: &Behavior) -> f64 {
        match *self {
            Known::One => 1.0,
            Known::MarginalA(x) => beh.marginal_a(0, x),
            Known::MarginalB(y) => beh.marginal_b(0, y),
            Known::Joint(x, y) => beh.get(0, 0, x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    Known(Known),
    Free(usize),
}

#[derive(Debug, Clone)]
pub struct MomentStructure {
    pub level: Level,
    pub words: Vec<Word>,
    pub entries: Vec<Vec<Entry>>,
    /// Canonical word of each free unknown.
    pub unknowns: Vec<Word>,
}

impl MomentStructure {
    pub fn build(level: Level) -> MomentStructure {
        let mut words = vec![Word::new(vec![], vec![])];
        words.push(Word::new(vec![0], vec![]));
        words.push(Word::new(vec![1], vec![]));
        words.push(Word::new(vec![], vec![0]));
        words.push(Word::new(vec![], vec![1]));
        if level == Level::L1AB {
            for x in 0..2 {
                for y in 0..2 {
                    words.push(Word::new(vec![x], vec![y]));
                }
            }
        }
        let n = words.len();
        let mut ids: BTreeMap<Word, usize> = BTreeMap::new();
        let mut unknowns = Vec::new();
        let mut entries = vec![vec![Entry::Known(Known::One); n]; n];
        for r in 0..n {
            for c in r..n {
                let m = words[r].moment(&words[c]);
                let e = match (m.alice.as_slice(), m.bob.as_slice()) {
                    ([], []) => Entry::Known(Known::One),
                    ([x], []) => Entry::Known(Known::MarginalA(*x)),
                    ([], [y]) => Entry::Known(Known::MarginalB(*y)),
                    ([x], [y]) => Entry::Known(Known::Joint(*x, *y)),
                    _ => {
                        let next = ids.len();
                        let id = *ids.entry(m.clone()).or_insert_with(|| {
                            unknowns.push(m.clone());
                            next
                        });
                        Entry::Free(id)
                    }
                };
                entries[r][c] = e;
                entries[c][r] = e;
            }
        }
        MomentStructure {
            level,
            words,
            entries,
            unknowns,
        }
    }

    pub fn dim(&self) -> usize {
        self.words.len()
    }

    pub fn num_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    fn word_index(&self, w: &Word) -> Option<usize> {
        self.words.iter().position(|v| v == w)
    }

    /// Fixed cells from the behavior and one cell group per unknown.
    pub fn instantiate(&self, beh: &Behavior) -> Result<SdpProblem> {
        if !beh.is_chsh() {
            return Err(Error::Scenario {
                expected: "CHSH",
                got: format!("{:?}", beh.inputs()),
            });
        }
        let n = self.dim();
        let mut fixed = Vec::new();
        let mut free = vec![Vec::new(); self.num_unknowns()];
        for r in 0..n {
            for c in 0..n {
                match self.entries[r][c] {
                    Entry::Known(k) => fixed.push((r, c, k.value(beh))),
                    Entry::Free(id) => free[id].push((r, c)),
                }
            }
        }
        Ok(SdpProblem {
            dim: n,
            fixed,
            free,
            objective: None,
            kernel: Vec::new(),
        })
    }

    /// Operator vectors `A^(a)_x B^(b)_y` (and single-party marginals) whose
    /// probability vanishes in `beh`. Each lies in the kernel of every PSD
    /// completion.
    pub fn kernel_vectors(&self, beh: &Behavior, zero_tol: f64) -> Vec<Vec<f64>> {
        let n = self.dim();
        let one = 0;
        let mut out = Vec::new();
        let mut push_combo = |terms: &[(Option<usize>, f64)]| {
            let mut v = vec![0.0; n];
            for &(idx, coef) in terms {
                match idx {
                    Some(i) => v[i] += coef,
                    None => return,
                }
            }
            out.push(v);
        };
        let a_word = |x: usize| self.word_index(&Word::new(vec![x], vec![]));
        let b_word = |y: usize| self.word_index(&Word::new(vec![], vec![y]));
        let ab_word = |x: usize, y: usize| self.word_index(&Word::new(vec![x], vec![y]));
        for x in 0..2 {
            let p0 = beh.marginal_a(0, x);
            if p0 <= zero_tol {
                push_combo(&[(a_word(x), 1.0)]);
            }
            if 1.0 - p0 <= zero_tol {
                push_combo(&[(Some(one), 1.0), (a_word(x), -1.0)]);
            }
        }
        for y in 0..2 {
            let p0 = beh.marginal_b(0, y);
            if p0 <= zero_tol {
                push_combo(&[(b_word(y), 1.0)]);
            }
            if 1.0 - p0 <= zero_tol {
                push_combo(&[(Some(one), 1.0), (b_word(y), -1.0)]);
            }
        }
        for (a, b, x, y) in tuples() {
            if beh.get(a, b, x, y) > zero_tol {
                continue;
            }
            let terms: Vec<(Option<usize>, f64)> = match (a, b) {
                (0, 0) => vec![(ab_word(x, y), 1.0)],
                (0, 1) => vec![(a_word(x), 1.0), (ab_word(x, y), -1.0)],
                (1, 0) => vec![(b_word(y), 1.0), (ab_word(x, y), -1.0)],
                _ => vec![
                    (Some(one), 1.0),
                    (a_word(x), -1.0),
                    (b_word(y), -1.0),
                    (ab_word(x, y), 1.0),
                ],
            };
            push_combo(&terms);
        }
        out
    }

    /// Completed moment matrix for an assignment of the unknowns.
    pub fn assemble(&self, beh: &Behavior, assignment: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| match self.entries[r][c] {
            Entry::Known(k) => k.value(beh),
            Entry::Free(id) => assignment[id],
        })
    }

    /// `Γ(μ, y) = Γ(point(0)) + μ·(Γ(PR) − Γ(point(0))) + Σ yₖ Fₖ`, with μ as the last variable.
    fn segment_family(&self, seg: &Segment) -> AffineFamily {
        let base = self.instantiate(&seg.point(0.0)).expect("chsh").family();
        let top = self.instantiate(&seg.point(1.0)).expect("chsh").family();
        let mut fk = base.fk.clone();
        fk.push(&top.f0 - &base.f0);
        AffineFamily { f0: base.f0, fk }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NpaOptions {
    pub feas_tol: f64,
    pub tol_mu: f64,
    /// Impose `Γv = 0` for operators of vanishing probability before testing.
    pub facial_reduction: bool,
    /// Probabilities at or below this count as exact zeros for the reduction.
    pub zero_tol: f64,
}

impl Default for NpaOptions {
    fn default() -> Self {
        NpaOptions {
            feas_tol: DEFAULT_FEAS_TOL,
            tol_mu: crate::principles::DEFAULT_TOL_MU,
            facial_reduction: true,
            zero_tol: 1e-12,
        }
    }
}

impl NpaOptions {
    fn settings(&self) -> SdpSettings {
        SdpSettings {
            feas_tol: self.feas_tol,
            ..SdpSettings::default()
        }
    }
}

/// Membership test with its certificate.
pub fn membership(
    beh: &Behavior,
    structure: &MomentStructure,
    opts: &NpaOptions,
    warm: Option<&[f64]>,
) -> Result<SdpResult> {
    let mut problem = structure.instantiate(beh)?;
    if opts.facial_reduction {
        problem.kernel = structure.kernel_vectors(beh, opts.zero_tol);
    }
    problem.validate()?;
    let kernel: Vec<DVector<f64>> = problem
        .kernel
        .iter()
        .map(|v| DVector::from_column_slice(v))
        .collect();
    Ok(sdp::solve_family(
        &problem.family(),
        &kernel,
        warm,
        &opts.settings(),
    ))
}

pub fn contains(beh: &Behavior, level: Level, opts: &NpaOptions) -> Result<bool> {
    let s = MomentStructure::build(level);
    let r = membership(beh, &s, opts, None)?;
    match r.status {
        SdpStatus::Feasible => Ok(true),
        SdpStatus::Infeasible => Ok(false),
        SdpStatus::MaxIterations => Err(Error::Inconclusive {
            iterations: r.iterations,
        }),
    }
}

#[derive(Debug, Clone)]
pub struct MuResult {
    pub mu_star: f64,
    /// Completed moment matrix at `mu_star`.
    pub certificate: DMatrix<f64>,
    pub certificate_min_eigenvalue: f64,
    /// Bisection steps whose solve hit the iteration cap (treated as outside).
    pub inconclusive_steps: usize,
}

/// Largest `μ` with `seg.point(μ) ∈ Q^(level)`, by bisection to `opts.tol_mu`.
pub fn max_mu(seg: &Segment, level: Level, opts: &NpaOptions) -> Result<MuResult> {
    let structure = MomentStructure::build(level);
    let mut warm: Option<Vec<f64>> = None;
    let mut inconclusive = 0;
    let mut accepted: Option<(f64, SdpResult)> = None;
    let mu_star = bisect_mu(
        seg,
        |beh| {
            let r = membership(beh, &structure, opts, warm.as_deref())?;
            match r.status {
                SdpStatus::Feasible => {
                    warm = Some(r.assignment.clone());
                    let mu = crate::behavior::chsh_value(beh)?;
                    if accepted.as_ref().is_none_or(|(m, _)| mu >= *m) {
                        accepted = Some((mu, r));
                    }
                    Ok(true)
                }
                SdpStatus::Infeasible => Ok(false),
                SdpStatus::MaxIterations => {
                    inconclusive += 1;
                    Ok(false)
                }
            }
        },
        opts.tol_mu,
        200,
    )?;
    let (certificate, lmin) = match &accepted {
        Some((_, r)) => {
            let beh = seg.point(mu_star);
            (structure.assemble(&beh, &r.assignment), r.min_eigenvalue)
        }
        None => (DMatrix::zeros(0, 0), f64::NAN),
    };
    Ok(MuResult {
        mu_star,
        certificate,
        certificate_min_eigenvalue: lmin,
        inconclusive_steps: inconclusive,
    })
}

/// Largest `μ` along the segment as a single SDP with `μ` as a variable.
pub fn max_mu_direct(seg: &Segment, level: Level, opts: &NpaOptions) -> Result<f64> {
    let structure = MomentStructure::build(level);
    let family = structure.segment_family(seg);
    let kernel: Vec<DVector<f64>> = if opts.facial_reduction {
        structure
            .kernel_vectors(&seg.point(0.5), opts.zero_tol)
            .into_iter()
            .map(DVector::from_vec)
            .collect()
    } else {
        Vec::new()
    };
    let mut objective = vec![0.0; family.num_vars()];
    *objective.last_mut().expect("mu variable") = 1.0;
    let r = sdp::maximize(&family, &kernel, &objective, &opts.settings())?;
    Ok(r.value)
}

/// Best Hardy success probability over `Q^(level)` along the PR → L_H segment.
pub fn hardy_bound(level: Level, opts: &NpaOptions) -> Result<f64> {
    Ok(max_mu(&crate::hardy::hardy_segment(), level, opts)?.mu_star / 2.0)
}

pub fn hardy_almost_quantum(opts: &NpaOptions) -> Result<f64> {
    hardy_bound(Level::L1AB, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{canonical_pr, local_box};

    #[test]
    fn structure_sizes() {
        let l1 = MomentStructure::build(Level::L1);
        assert_eq!(l1.dim(), 5);
        assert_eq!(l1.num_unknowns(), 2);
        let lab = MomentStructure::build(Level::L1AB);
        assert_eq!(lab.dim(), 9);
        assert_eq!(lab.num_unknowns(), 8);
    }

    #[test]
    fn cross_cell_is_joint_probability() {
        let s = MomentStructure::build(Level::L1);
        // A0 is word 1, B1 is word 4
        assert_eq!(s.entries[1][4], Entry::Known(Known::Joint(0, 1)));
        assert_eq!(s.entries[0][0], Entry::Known(Known::One));
        assert_eq!(s.entries[1][1], Entry::Known(Known::MarginalA(0)));
        let lab = MomentStructure::build(Level::L1AB);
        // A0 with A0B1 reduces to A0B1
        assert_eq!(lab.entries[1][6], Entry::Known(Known::Joint(0, 1)));
    }

    #[test]
    fn local_in_pr_out() {
        let opts = NpaOptions::default();
        for level in [Level::L1, Level::L1AB] {
            for code in 0..16 {
                let l = local_box(code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1);
                assert!(contains(&l, level, &opts).unwrap());
            }
            assert!(!contains(&canonical_pr(), level, &opts).unwrap());
        }
    }

    #[test]
    fn level_parse() {
        assert_eq!("1+ab".parse::<Level>().unwrap(), Level::L1AB);
        assert!("2".parse::<Level>().is_err());
    }
}
