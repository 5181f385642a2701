//! Born-rule models (pure bipartite states, rank-1 outcome-0 projectors) and
//! seeded multi-start searches for constrained Bell violations.
//!
//! Zero-probability constraints are linear in the state once the measurements
//! are fixed: `p(a,b|x,y) = 0` iff `ψ ⊥ range(Π_a^x ⊗ Π_b^y)`. The search
//! therefore optimizes over measurement directions only; the state is the top
//! eigenvector of the Bell operator compressed to the allowed subspace.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::{tuple_of, Behavior};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_top, orthonormal_complement, C64};

pub const DEFAULT_RESTARTS: usize = 200;
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
const GRADIENT_STEP: f64 = 1e-6;
const BFGS_MAX_ITER: usize = 200;
const CHUNK: usize = 16;
const INFEASIBLE_OFFSET: f64 = 10.0;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Measurement axis on the Bloch sphere; outcome 0 projects onto
/// `(cos θ/2, e^{iφ} sin θ/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAxis {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAxis {
    pub fn direction(&self) -> DVector<C64> {
        let (s, co) = (0.5 * self.theta).sin_cos();
        DVector::from_vec(vec![c(co), C64::from_polar(s, self.phi)])
    }

    /// Axis of a unit vector, ignoring its global phase.
    pub fn from_direction(v: &DVector<C64>) -> BlochAxis {
        let theta = 2.0 * v[1].norm().atan2(v[0].norm());
        let phi = if v[1].norm() < 1e-15 || v[0].norm() < 1e-15 {
            0.0
        } else {
            v[1].arg() - v[0].arg()
        };
        BlochAxis { theta, phi }
    }

    /// Same measurement with outcomes swapped.
    pub fn flipped(&self) -> BlochAxis {
        BlochAxis {
            theta: std::f64::consts::PI - self.theta,
            phi: self.phi + std::f64::consts::PI,
        }
    }
}

/// Pure state on `C^d ⊗ C^d` (Alice index major) with one outcome-0
/// direction per input and party.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveModel {
    pub dim: usize,
    pub state: DVector<C64>,
    pub alice: Vec<DVector<C64>>,
    pub bob: Vec<DVector<C64>>,
}

impl ProjectiveModel {
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if self.state.len() != d * d {
            return Err(Error::InvalidArgument("state length is not d²".into()));
        }
        if (self.state.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("state is not normalized".into()));
        }
        for v in self.alice.iter().chain(&self.bob) {
            if v.len() != d || (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(
                    "measurement direction is not a unit vector".into(),
                ));
            }
        }
        Ok(())
    }

    /// Born probabilities. Complements are taken exactly, so the output is
    /// no-signaling by construction.
    pub fn behavior(&self) -> Behavior {
        let d = self.dim;
        let psi = &self.state;
        let norm2 = psi.norm_squared();
        let alice_marg: Vec<f64> = self
            .alice
            .iter()
            .map(|v| {
                (0..d)
                    .map(|j| {
                        (0..d)
                            .map(|i| v[i].conj() * psi[i * d + j])
                            .sum::<C64>()
                            .norm_sqr()
                    })
                    .sum()
            })
            .collect();
        let bob_marg: Vec<f64> = self
            .bob
            .iter()
            .map(|w| {
                (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| w[j].conj() * psi[i * d + j])
                            .sum::<C64>()
                            .norm_sqr()
                    })
                    .sum()
            })
            .collect();
        let mut beh = Behavior::from_fn(self.alice.len(), self.bob.len(), |_, _, _, _| 0.0);
        for (x, v) in self.alice.iter().enumerate() {
            for (y, w) in self.bob.iter().enumerate() {
                let mut amp = c(0.0);
                for i in 0..d {
                    for j in 0..d {
                        amp += (v[i] * w[j]).conj() * psi[i * d + j];
                    }
                }
                let p00 = amp.norm_sqr();
                let pa = alice_marg[x];
                let pb = bob_marg[y];
                beh.set(0, 0, x, y, p00);
                beh.set(0, 1, x, y, pa - p00);
                beh.set(1, 0, x, y, pb - p00);
                beh.set(1, 1, x, y, norm2 - pa - pb + p00);
            }
        }
        beh
    }
}

/// Two-qubit configuration: amplitudes `|00⟩,|01⟩,|10⟩,|11⟩` and axes A0, A1, B0, B1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "QubitFile", try_from = "QubitFile")]
pub struct QubitConfig {
    pub state: [C64; 4],
    pub axes: [BlochAxis; 4],
}

impl QubitConfig {
    pub fn model(&self) -> ProjectiveModel {
        ProjectiveModel {
            dim: 2,
            state: DVector::from_column_slice(&self.state),
            alice: vec![self.axes[0].direction(), self.axes[1].direction()],
            bob: vec![self.axes[2].direction(), self.axes[3].direction()],
        }
    }

    pub fn from_model(m: &ProjectiveModel) -> Result<QubitConfig> {
        if m.dim != 2 || m.alice.len() != 2 || m.bob.len() != 2 {
            return Err(Error::Scenario {
                expected: "two-qubit, two-input",
                got: format!("d={}, inputs {}x{}", m.dim, m.alice.len(), m.bob.len()),
            });
        }
        let mut state = [c(0.0); 4];
        state.copy_from_slice(m.state.as_slice());
        let axes = [&m.alice[0], &m.alice[1], &m.bob[0], &m.bob[1]].map(BlochAxis::from_direction);
        Ok(QubitConfig { state, axes })
    }

    pub fn validate(&self) -> Result<()> {
        self.model().validate()
    }

    /// Relabels inputs and outputs: the new input `x'` uses old input
    /// `x' ⊕ swap_a`, with outcomes flipped when `flip_a[x']`; same for Bob.
    pub fn relabeled(
        &self,
        swap_a: bool,
        swap_b: bool,
        flip_a: [bool; 2],
        flip_b: [bool; 2],
    ) -> QubitConfig {
        let mut axes = self.axes;
        for xp in 0..2 {
            let ax = self.axes[xp ^ swap_a as usize];
            axes[xp] = if flip_a[xp] { ax.flipped() } else { ax };
            let bx = self.axes[2 + (xp ^ swap_b as usize)];
            axes[2 + xp] = if flip_b[xp] { bx.flipped() } else { bx };
        }
        QubitConfig {
            state: self.state,
            axes,
        }
    }
}

pub fn behavior_from_qubit(cfg: &QubitConfig) -> Behavior {
    cfg.model().behavior()
}

/// Two-qutrit configuration with three outcome-0 directions per party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "QutritFile", try_from = "QutritFile")]
pub struct QutritConfig {
    pub state: [C64; 9],
    pub alice: [[C64; 3]; 3],
    pub bob: [[C64; 3]; 3],
}

impl QutritConfig {
    pub fn model(&self) -> ProjectiveModel {
        ProjectiveModel {
            dim: 3,
            state: DVector::from_column_slice(&self.state),
            alice: self
                .alice
                .iter()
                .map(|v| DVector::from_column_slice(v))
                .collect(),
            bob: self
                .bob
                .iter()
                .map(|v| DVector::from_column_slice(v))
                .collect(),
        }
    }

    pub fn from_model(m: &ProjectiveModel) -> Result<QutritConfig> {
        if m.dim != 3 || m.alice.len() != 3 || m.bob.len() != 3 {
            return Err(Error::Scenario {
                expected: "two-qutrit, three-input",
                got: format!("d={}, inputs {}x{}", m.dim, m.alice.len(), m.bob.len()),
            });
        }
        let mut state = [c(0.0); 9];
        state.copy_from_slice(m.state.as_slice());
        let dirs = |vs: &[DVector<C64>]| -> [[C64; 3]; 3] {
            let mut out = [[c(0.0); 3]; 3];
            for (o, v) in out.iter_mut().zip(vs) {
                o.copy_from_slice(v.as_slice());
            }
            out
        };
        Ok(QutritConfig {
            state,
            alice: dirs(&m.alice),
            bob: dirs(&m.bob),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.model().validate()
    }
}

type Pair = [f64; 2];

fn pair(z: &C64) -> Pair {
    [z.re, z.im]
}

fn unpair(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

#[derive(Serialize, Deserialize)]
struct QubitFile {
    state: Vec<Pair>,
    axes: Vec<BlochAxis>,
}

impl From<QubitConfig> for QubitFile {
    fn from(cfg: QubitConfig) -> Self {
        QubitFile {
            state: cfg.state.iter().map(pair).collect(),
            axes: cfg.axes.to_vec(),
        }
    }
}

impl TryFrom<QubitFile> for QubitConfig {
    type Error = String;
    fn try_from(f: QubitFile) -> std::result::Result<Self, String> {
        let state: [C64; 4] = f
            .state
            .iter()
            .map(unpair)
            .collect::<Vec<_>>()
            .try_into()
            .map_err(|_| "qubit state needs 4 amplitudes".to_string())?;
        let axes: [BlochAxis; 4] = f
            .axes
            .try_into()
            .map_err(|_| "qubit config needs 4 axes".to_string())?;
        Ok(QubitConfig { state, axes })
    }
}

#[derive(Serialize, Deserialize)]
struct QutritFile {
    state: Vec<Pair>,
    alice: Vec<Vec<Pair>>,
    bob: Vec<Vec<Pair>>,
}

impl From<QutritConfig> for QutritFile {
    fn from(cfg: QutritConfig) -> Self {
        let dirs = |d: &[[C64; 3]; 3]| d.iter().map(|v| v.iter().map(pair).collect()).collect();
        QutritFile {
            state: cfg.state.iter().map(pair).collect(),
            alice: dirs(&cfg.alice),
            bob: dirs(&cfg.bob),
        }
    }
}

impl TryFrom<QutritFile> for QutritConfig {
    type Error = String;
    fn try_from(f: QutritFile) -> std::result::Result<Self, String> {
        let state: [C64; 9] = f
            .state
            .iter()
            .map(unpair)
            .collect::<Vec<_>>()
            .try_into()
            .map_err(|_| "qutrit state needs 9 amplitudes".to_string())?;
        let dirs = |d: &[Vec<Pair>]| -> std::result::Result<[[C64; 3]; 3], String> {
            if d.len() != 3 || d.iter().any(|v| v.len() != 3) {
                return Err("qutrit config needs 3 directions of length 3 per party".into());
            }
            let mut out = [[c(0.0); 3]; 3];
            for (o, v) in out.iter_mut().zip(d) {
                for (z, p) in o.iter_mut().zip(v) {
                    *z = unpair(p);
                }
            }
            Ok(out)
        };
        Ok(QutritConfig {
            state,
            alice: dirs(&f.alice)?,
            bob: dirs(&f.bob)?,
        })
    }
}

/// Linear functional `constant + Σ coeffs[k]·p_k` over the raw behavior layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BellExpression {
    pub inputs_a: usize,
    pub inputs_b: usize,
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl BellExpression {
    fn zero(inputs_a: usize, inputs_b: usize) -> Self {
        BellExpression {
            inputs_a,
            inputs_b,
            coeffs: vec![0.0; inputs_a * inputs_b * 4],
            constant: 0.0,
        }
    }

    fn slot(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((x * self.inputs_b + y) * 2 + a) * 2 + b
    }

    fn add(&mut self, a: usize, b: usize, x: usize, y: usize, w: f64) {
        let k = self.slot(a, b, x, y);
        self.coeffs[k] += w;
    }

    pub fn evaluate(&self, beh: &Behavior) -> Result<f64> {
        if beh.inputs() != (self.inputs_a, self.inputs_b) {
            return Err(Error::Scenario {
                expected: "matching input counts",
                got: format!("{:?}", beh.inputs()),
            });
        }
        Ok(self.constant
            + self
                .coeffs
                .iter()
                .zip(beh.raw())
                .map(|(c, p)| c * p)
                .sum::<f64>())
    }

    /// Hermitian Bell operator for the given outcome-0 projectors.
    fn operator(&self, d: usize, alice: &[DMatrix<C64>], bob: &[DMatrix<C64>]) -> DMatrix<C64> {
        let id = DMatrix::<C64>::identity(d, d);
        let comp = |p: &DMatrix<C64>| &id - p;
        let mut w = DMatrix::<C64>::identity(d * d, d * d) * c(self.constant);
        for (x, ax) in alice.iter().enumerate().take(self.inputs_a) {
            let pa = [ax.clone(), comp(ax)];
            for (y, by) in bob.iter().enumerate().take(self.inputs_b) {
                let pb = [by.clone(), comp(by)];
                for (a, pa) in pa.iter().enumerate() {
                    for (b, pb) in pb.iter().enumerate() {
                        let coef = self.coeffs[self.slot(a, b, x, y)];
                        if coef != 0.0 {
                            w += pa.kronecker(pb) * c(coef);
                        }
                    }
                }
            }
        }
        w
    }
}

/// `1 − Σ_{i≤8} p_i`.
pub fn chsh_expression() -> BellExpression {
    let mut e = BellExpression::zero(2, 2);
    e.constant = 1.0;
    for i in 1..=8 {
        let (a, b, x, y) = tuple_of(i);
        e.add(a, b, x, y, -1.0);
    }
    e
}

/// The I3322 functional with marginals expanded into joint probabilities.
pub fn i3322_expression() -> BellExpression {
    let mut e = BellExpression::zero(3, 3);
    for (x, y, s) in [
        (0, 0, 1.0),
        (0, 1, 1.0),
        (0, 2, 1.0),
        (1, 0, 1.0),
        (1, 1, 1.0),
        (1, 2, -1.0),
        (2, 0, 1.0),
        (2, 1, -1.0),
    ] {
        e.add(0, 0, x, y, s);
    }
    // p_B(0|0) from the x = 0 block, p_A(0|x) from the y = 0 block
    for a in 0..2 {
        e.add(a, 0, 0, 0, -1.0);
    }
    for b in 0..2 {
        e.add(0, b, 0, 0, -2.0);
        e.add(0, b, 1, 0, -1.0);
    }
    e
}

/// I3322 evaluated term by term from the printed expression.
pub fn i3322_value(beh: &Behavior) -> Result<f64> {
    if beh.inputs() != (3, 3) {
        return Err(Error::Scenario {
            expected: "3322",
            got: format!("{:?}", beh.inputs()),
        });
    }
    let p = |x, y| beh.get(0, 0, x, y);
    Ok(
        p(0, 0) + p(0, 1) + p(0, 2) + p(1, 0) + p(1, 1) - p(1, 2) + p(2, 0)
            - p(2, 1)
            - beh.marginal_b(0, 0)
            - 2.0 * beh.marginal_a(0, 0)
            - beh.marginal_a(0, 1),
    )
}

/// Zero constraints used by the dimension witness: `p(0,0|1,1) = 0`, `p(0,1|1,0) = 0`.
pub const WITNESS_ZEROS: [(usize, usize, usize, usize); 2] = [(0, 0, 1, 1), (0, 1, 1, 0)];

/// Maximize a Bell expression over `C^d ⊗ C^d` models subject to zero probabilities.
#[derive(Debug, Clone)]
pub struct SearchProblem {
    pub dim: usize,
    pub expr: BellExpression,
    /// `(a, b, x, y)` tuples forced to zero.
    pub zeros: Vec<(usize, usize, usize, usize)>,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchSettings {
    pub restarts: usize,
    pub seed: u64,
    pub zero_tol: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Best value found; a lower bound on the true maximum.
    pub value: f64,
    pub model: ProjectiveModel,
    pub behavior: Behavior,
    pub restarts_used: usize,
}

impl SearchProblem {
    fn num_params(&self) -> usize {
        (self.expr.inputs_a + self.expr.inputs_b) * 2 * self.dim
    }

    fn directions(&self, params: &[f64]) -> Vec<DVector<C64>> {
        let d = self.dim;
        params
            .chunks(2 * d)
            .map(|ch| {
                let v = DVector::from_fn(d, |i, _| C64::new(ch[i], ch[d + i]));
                let n = v.norm();
                if n < 1e-300 {
                    let mut e = DVector::from_element(d, c(0.0));
                    e[0] = c(1.0);
                    e
                } else {
                    v / c(n)
                }
            })
            .collect()
    }

    /// Best value and state for fixed measurement directions, or the least
    /// achievable constraint violation when no state meets the zeros.
    fn solve_state(&self, dirs: &[DVector<C64>]) -> std::result::Result<(f64, DVector<C64>), f64> {
        let d = self.dim;
        let na = self.expr.inputs_a;
        let (alice, bob) = dirs.split_at(na);
        let proj = |v: &DVector<C64>| v * v.adjoint();
        let pa: Vec<DMatrix<C64>> = alice.iter().map(proj).collect();
        let pb: Vec<DMatrix<C64>> = bob.iter().map(proj).collect();
        let range = |v: &DVector<C64>, outcome: usize| -> Vec<DVector<C64>> {
            if outcome == 0 {
                vec![v.clone()]
            } else {
                let q = orthonormal_complement(std::slice::from_ref(v), d);
                q.column_iter().map(|col| col.into_owned()).collect()
            }
        };
        let mut constraints = Vec::new();
        for &(a, b, x, y) in &self.zeros {
            for u in range(&alice[x], a) {
                for w in range(&bob[y], b) {
                    constraints.push(u.kronecker(&w));
                }
            }
        }
        let q = orthonormal_complement(&constraints, d * d);
        if q.ncols() == 0 {
            return Err(constraint_violation(&constraints, d * d));
        }
        let w = self.expr.operator(d, &pa, &pb);
        let h = q.adjoint() * w * &q;
        let h = (&h + h.adjoint()) * c(0.5);
        let (val, u) = hermitian_top(&h);
        Ok((val, q * u))
    }

    fn objective(&self, params: &[f64]) -> f64 {
        match self.solve_state(&self.directions(params)) {
            Ok((v, _)) => -v,
            // above every attainable Bell value, decreasing towards feasibility
            Err(violation) => INFEASIBLE_OFFSET + 100.0 * violation,
        }
    }

    fn model_at(&self, params: &[f64]) -> Option<ProjectiveModel> {
        let dirs = self.directions(params);
        let (_, state) = self.solve_state(&dirs).ok()?;
        let (alice, bob) = dirs.split_at(self.expr.inputs_a);
        Some(ProjectiveModel {
            dim: self.dim,
            state,
            alice: alice.to_vec(),
            bob: bob.to_vec(),
        })
    }

    fn single_restart(
        &self,
        seed: u64,
        restart: usize,
        zero_tol: f64,
    ) -> Option<(f64, ProjectiveModel, Behavior)> {
        let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, restart as u64));
        let x0: Vec<f64> = (0..self.num_params())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let x = bfgs(|p| self.objective(p), x0);
        let model = self.model_at(&x)?;
        let beh = model.behavior();
        if self
            .zeros
            .iter()
            .any(|&(a, b, xx, y)| beh.get(a, b, xx, y) > zero_tol)
        {
            return None;
        }
        let value = self.expr.evaluate(&beh).ok()?;
        Some((value, model, beh))
    }

    /// Seeded multi-start search. Restarts run in parallel chunks; when
    /// `stop_above` is set the search ends after the first chunk whose best
    /// value exceeds it. Results do not depend on the thread count.
    pub fn maximize(
        &self,
        settings: &SearchSettings,
        stop_above: Option<f64>,
    ) -> Option<SearchOutcome> {
        let mut best: Option<SearchOutcome> = None;
        let mut done = 0;
        while done < settings.restarts {
            let end = (done + CHUNK).min(settings.restarts);
            let results: Vec<Option<(f64, ProjectiveModel, Behavior)>> = (done..end)
                .into_par_iter()
                .map(|r| self.single_restart(settings.seed, r, settings.zero_tol))
                .collect();
            for (value, model, behavior) in results.into_iter().flatten() {
                if best.as_ref().is_none_or(|b| value > b.value) {
                    best = Some(SearchOutcome {
                        value,
                        model,
                        behavior,
                        restarts_used: end,
                    });
                }
            }
            done = end;
            if let (Some(t), Some(b)) = (stop_above, &best) {
                if b.value > t {
                    break;
                }
            }
        }
        if let Some(b) = best.as_mut() {
            b.restarts_used = done;
        }
        best
    }
}

/// Smallest total zero-probability mass over unit states.
fn constraint_violation(constraints: &[DVector<C64>], n: usize) -> f64 {
    let mut gram = DMatrix::<C64>::zeros(n, n);
    for v in constraints {
        gram -= v * v.adjoint();
    }
    let (top, _) = hermitian_top(&gram);
    -top
}

/// SplitMix64 of the pair, so each restart has an independent stream.
pub fn restart_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        ^ index
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + GRADIENT_STEP;
            let fp = f(&xp);
            xp[i] = orig - GRADIENT_STEP;
            let fm = f(&xp);
            xp[i] = orig;
            (fp - fm) / (2.0 * GRADIENT_STEP)
        })
        .collect()
}

/// Quasi-Newton minimization with an inverse-Hessian BFGS update and
/// backtracking line search.
pub fn bfgs<F: Fn(&[f64]) -> f64>(f: F, x0: Vec<f64>) -> Vec<f64> {
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x);
    let mut g = gradient(&f, &x);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut stalls = 0;
    for _ in 0..BFGS_MAX_ITER {
        let gv = DVector::from_column_slice(&g);
        if gv.amax() < 1e-9 {
            break;
        }
        let mut dir = -(&h * &gv);
        let mut slope = dir.dot(&gv);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            dir = -gv.clone();
            slope = -gv.norm_squared();
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-10 {
            let trial: Vec<f64> = x
                .iter()
                .zip(dir.iter())
                .map(|(a, d)| a + alpha * d)
                .collect();
            let ft = f(&trial);
            if ft <= fx + 1e-4 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            break;
        };
        let gn = gradient(&f, &xn);
        let s = DVector::from_iterator(n, xn.iter().zip(&x).map(|(a, b)| a - b));
        let yv = DVector::from_iterator(n, gn.iter().zip(&g).map(|(a, b)| a - b));
        let sy = s.dot(&yv);
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        if fx - fnew < 1e-13 * (1.0 + fx.abs()) {
            stalls += 1;
            if stalls >= 3 {
                x = xn;
                break;
            }
        } else {
            stalls = 0;
        }
        x = xn;
        fx = fnew;
        g = gn;
    }
    x
}

/// Best CHSH value over two-qubit models with the given free variables zeroed.
pub fn max_chsh_qubits(zeroed: &[usize], settings: &SearchSettings) -> Result<(f64, QubitConfig)> {
    let outcome = chsh_search(zeroed)?
        .maximize(settings, None)
        .ok_or(Error::WitnessNotFound {
            mask: zeroed.iter().fold(0u8, |m, i| m | (1 << (i - 1))),
            restarts: settings.restarts,
        })?;
    Ok((outcome.value, QubitConfig::from_model(&outcome.model)?))
}

pub fn chsh_search(zeroed: &[usize]) -> Result<SearchProblem> {
    if let Some(i) = zeroed.iter().find(|i| !(1..=8).contains(*i)) {
        return Err(Error::InvalidArgument(format!(
            "free index {i} not in 1..8"
        )));
    }
    Ok(SearchProblem {
        dim: 2,
        expr: chsh_expression(),
        zeros: zeroed.iter().map(|&i| tuple_of(i)).collect(),
    })
}

pub fn i3322_search(dim: usize, constrained: bool) -> SearchProblem {
    SearchProblem {
        dim,
        expr: i3322_expression(),
        zeros: if constrained {
            WITNESS_ZEROS.to_vec()
        } else {
            Vec::new()
        },
    }
}

/// Best constrained I3322 value over two-qutrit models.
pub fn max_i3322_qutrits(settings: &SearchSettings) -> Result<(f64, QutritConfig)> {
    let outcome = i3322_search(3, true)
        .maximize(settings, None)
        .ok_or(Error::WitnessNotFound {
            mask: 0,
            restarts: settings.restarts,
        })?;
    Ok((outcome.value, QutritConfig::from_model(&outcome.model)?))
}

/// Best constrained I3322 value over two-qubit models.
pub fn max_i3322_qubits(settings: &SearchSettings) -> Result<f64> {
    i3322_search(2, true)
        .maximize(settings, None)
        .map(|o| o.value)
        .ok_or(Error::WitnessNotFound {
            mask: 0,
            restarts: settings.restarts,
        })
}
