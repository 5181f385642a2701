//! Dense semidefinite feasibility for small moment matrices.
//!
//! Feasibility of `M(y) ⪰ 0` over an affine family `M(y) = F₀ + Σ yₖ Fₖ` is
//! decided by maximizing `t` subject to `M(y) - tI ⪰ 0` with a log-det barrier
//! interior-point method. The family is feasible when `t* ≥ -feas_tol`.
//!
//! Vectors known to lie in the kernel of every PSD member (for example from
//! zero probabilities in a moment matrix) can be supplied. They are imposed as
//! the linear equalities `M(y) v = 0`, and the search continues on the
//! orthogonal complement, where the problem is usually strictly feasible.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue;

pub const DEFAULT_FEAS_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const MAX_DIM: usize = 64;
/// Squared Newton decrement below which a barrier stage counts as centered.
const CENTERED: f64 = 1e-10;

/// Matrix pattern with fixed cells and groups of cells tied to one unknown.
#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    pub dim: usize,
    pub fixed: Vec<(usize, usize, f64)>,
    pub free: Vec<Vec<(usize, usize)>>,
    /// Coefficients of a linear objective over the unknowns (maximized).
    pub objective: Option<Vec<f64>>,
    /// Vectors in the kernel of every PSD completion.
    pub kernel: Vec<Vec<f64>>,
}

impl SdpProblem {
    /// Checks that each cell is covered exactly once and the pattern is symmetric.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "dimension {n} not in 1..={MAX_DIM}"
            )));
        }
        let mut owner: Vec<Option<Cell>> = vec![None; n * n];
        let mut claim = |r: usize, c: usize, who: Cell| -> Result<()> {
            if r >= n || c >= n {
                return Err(Error::InvalidArgument(format!(
                    "cell ({r},{c}) out of range"
                )));
            }
            if owner[r * n + c].is_some() {
                return Err(Error::InvalidArgument(format!(
                    "cell ({r},{c}) assigned twice"
                )));
            }
            owner[r * n + c] = Some(who);
            Ok(())
        };
        for &(r, c, v) in &self.fixed {
            claim(r, c, Cell::Fixed(v))?;
        }
        for (k, group) in self.free.iter().enumerate() {
            for &(r, c) in group {
                claim(r, c, Cell::Free(k))?;
            }
        }
        for r in 0..n {
            for c in 0..n {
                match (owner[r * n + c], owner[c * n + r]) {
                    (None, _) => {
                        return Err(Error::InvalidArgument(format!("cell ({r},{c}) unassigned")))
                    }
                    (Some(Cell::Fixed(u)), Some(Cell::Fixed(v))) if u == v => {}
                    (Some(Cell::Free(i)), Some(Cell::Free(j))) if i == j => {}
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "pattern is not symmetric at ({r},{c})"
                        )))
                    }
                }
            }
        }
        if let Some(obj) = &self.objective {
            if obj.len() != self.free.len() {
                return Err(Error::InvalidArgument("objective length mismatch".into()));
            }
        }
        for v in &self.kernel {
            if v.len() != n {
                return Err(Error::InvalidArgument(
                    "kernel vector length mismatch".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn family(&self) -> AffineFamily {
        let n = self.dim;
        let mut f0 = DMatrix::zeros(n, n);
        for &(r, c, v) in &self.fixed {
            f0[(r, c)] = v;
        }
        let fk = self
            .free
            .iter()
            .map(|group| {
                let mut m = DMatrix::zeros(n, n);
                for &(r, c) in group {
                    m[(r, c)] = 1.0;
                }
                m
            })
            .collect();
        AffineFamily { f0, fk }
    }

    fn kernel_vectors(&self) -> Vec<DVector<f64>> {
        self.kernel
            .iter()
            .map(|v| DVector::from_column_slice(v))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell {
    Fixed(f64),
    Free(usize),
}

/// `M(y) = F₀ + Σ yₖ Fₖ` with symmetric coefficient matrices.
#[derive(Debug, Clone)]
pub struct AffineFamily {
    pub f0: DMatrix<f64>,
    pub fk: Vec<DMatrix<f64>>,
}

impl AffineFamily {
    pub fn dim(&self) -> usize {
        self.f0.nrows()
    }

    pub fn num_vars(&self) -> usize {
        self.fk.len()
    }

    pub fn assemble(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = self.f0.clone();
        for (f, &v) in self.fk.iter().zip(y) {
            m += f * v;
        }
        m
    }

    /// Imposes `M(y) v = 0` for every kernel vector and compresses onto the
    /// complement. Returns `None` when the equalities are inconsistent.
    fn reduce(&self, kernel: &[DVector<f64>]) -> Option<Reduction> {
        let n = self.dim();
        let m = self.num_vars();
        let u = real_complement(kernel, n);
        if kernel.is_empty() || u.ncols() == n {
            return Some(Reduction {
                base: vec![0.0; m],
                directions: DMatrix::identity(m, m),
                complement: DMatrix::identity(n, n),
                family: self.clone(),
            });
        }

        let rows = n * kernel.len();
        let mut a = DMatrix::zeros(rows.max(m), m);
        let mut b = DVector::zeros(rows.max(m));
        for (j, v) in kernel.iter().enumerate() {
            let rhs = -(&self.f0 * v);
            for r in 0..n {
                b[j * n + r] = rhs[r];
            }
            for (k, f) in self.fk.iter().enumerate() {
                let col = f * v;
                for r in 0..n {
                    a[(j * n + r, k)] = col[r];
                }
            }
        }

        let (base, directions) = if m == 0 {
            (DVector::zeros(0), DMatrix::zeros(0, 0))
        } else {
            let svd = a.clone().svd(true, true);
            let u_mat = svd.u.as_ref().expect("u requested");
            let vt = svd.v_t.as_ref().expect("v_t requested");
            let smax = svd.singular_values.max();
            let cutoff = 1e-10 * smax.max(1.0);
            let mut base = DVector::zeros(m);
            let mut null_cols = Vec::new();
            for k in 0..m {
                let sigma = svd.singular_values[k];
                let vk = vt.row(k).transpose();
                if sigma > cutoff {
                    let coeff = u_mat.column(k).dot(&b) / sigma;
                    base += vk * coeff;
                } else {
                    null_cols.push(vk);
                }
            }
            let directions = if null_cols.is_empty() {
                DMatrix::zeros(m, 0)
            } else {
                DMatrix::from_columns(&null_cols)
            };
            (base, directions)
        };
        let residual = if m == 0 { b.clone() } else { &a * &base - &b };
        if residual.amax() > 1e-9 * (1.0 + b.amax()) {
            return None;
        }

        let base_vec: Vec<f64> = base.iter().copied().collect();
        let g0 = u.transpose() * self.assemble(&base_vec) * &u;
        let gk = (0..directions.ncols())
            .map(|j| {
                let mut f = DMatrix::zeros(n, n);
                for (k, fk) in self.fk.iter().enumerate() {
                    f += fk * directions[(k, j)];
                }
                u.transpose() * f * &u
            })
            .collect();
        Some(Reduction {
            base: base_vec,
            directions,
            complement: u,
            family: AffineFamily { f0: g0, fk: gk },
        })
    }
}

struct Reduction {
    base: Vec<f64>,
    directions: DMatrix<f64>,
    #[allow(dead_code)]
    complement: DMatrix<f64>,
    family: AffineFamily,
}

impl Reduction {
    fn lift(&self, z: &[f64]) -> Vec<f64> {
        let mut y = self.base.clone();
        for (j, &zj) in z.iter().enumerate() {
            for (k, yk) in y.iter_mut().enumerate() {
                *yk += self.directions[(k, j)] * zj;
            }
        }
        y
    }

    /// Least-squares projection of a full assignment onto the reduced coordinates.
    fn project(&self, y: &[f64]) -> Vec<f64> {
        let d = &self.directions;
        if d.ncols() == 0 {
            return Vec::new();
        }
        let diff = DVector::from_iterator(y.len(), y.iter().zip(&self.base).map(|(u, v)| u - v));
        (d.transpose() * diff).iter().copied().collect()
    }
}

fn real_complement(kernel: &[DVector<f64>], n: usize) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let push = |basis: &mut Vec<DVector<f64>>, mut v: DVector<f64>| {
        for _ in 0..2 {
            for b in basis.iter() {
                let p = b.dot(&v);
                v -= b * p;
            }
        }
        let norm = v.norm();
        if norm > 1e-10 {
            basis.push(v / norm);
        }
    };
    for v in kernel {
        push(&mut basis, v.clone());
    }
    let k = basis.len();
    for i in 0..n {
        push(
            &mut basis,
            DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 }),
        );
    }
    DMatrix::from_columns(&basis[k..])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SdpStatus {
    Feasible,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SdpResult {
    pub status: SdpStatus,
    /// Values of the unknowns; the completed matrix is the certificate.
    pub assignment: Vec<f64>,
    /// Smallest eigenvalue of the completed matrix (cyclic Jacobi).
    pub min_eigenvalue: f64,
    /// Upper bound on the best achievable smallest eigenvalue, from the duality gap.
    pub upper_bound: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct MaximizeResult {
    pub value: f64,
    pub assignment: Vec<f64>,
    pub min_eigenvalue: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpSettings {
    pub feas_tol: f64,
    pub max_iterations: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings {
            feas_tol: DEFAULT_FEAS_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

pub fn solve_feasibility(problem: &SdpProblem, feas_tol: f64) -> Result<SdpResult> {
    problem.validate()?;
    let settings = SdpSettings {
        feas_tol,
        ..SdpSettings::default()
    };
    Ok(solve_family(
        &problem.family(),
        &problem.kernel_vectors(),
        None,
        &settings,
    ))
}

/// Feasibility of an affine family, optionally warm-started from `warm`.
pub fn solve_family(
    family: &AffineFamily,
    kernel: &[DVector<f64>],
    warm: Option<&[f64]>,
    settings: &SdpSettings,
) -> SdpResult {
    let m = family.num_vars();
    let Some(reduction) = family.reduce(kernel) else {
        // Inconsistent kernel equalities: no PSD completion exists.
        let y = vec![0.0; m];
        let lmin = min_eigenvalue(&family.assemble(&y));
        return SdpResult {
            status: SdpStatus::Infeasible,
            assignment: y,
            min_eigenvalue: lmin,
            upper_bound: f64::NEG_INFINITY,
            iterations: 0,
        };
    };
    let z0 = warm
        .filter(|w| w.len() == m)
        .map(|w| reduction.project(w))
        .unwrap_or_else(|| vec![0.0; reduction.family.num_vars()]);
    let core = max_min_eigenvalue(&reduction.family, &z0, settings, StopRule::Feasibility);
    let y = reduction.lift(&core.z);
    let lmin = min_eigenvalue(&family.assemble(&y));
    SdpResult {
        status: core.status,
        assignment: y,
        min_eigenvalue: lmin,
        upper_bound: core.upper_bound,
        iterations: core.iterations,
    }
}

/// Maximizes `cᵀy` over `M(y) ⪰ 0`, starting from a strictly feasible point
/// of the kernel-reduced family found by a phase-I solve.
pub fn maximize(
    family: &AffineFamily,
    kernel: &[DVector<f64>],
    objective: &[f64],
    settings: &SdpSettings,
) -> Result<MaximizeResult> {
    if objective.len() != family.num_vars() {
        return Err(Error::InvalidArgument("objective length mismatch".into()));
    }
    let reduction = family
        .reduce(kernel)
        .ok_or_else(|| Error::InvalidArgument("kernel equalities are inconsistent".into()))?;
    let red = &reduction.family;
    let n = red.dim();
    let zdim = red.num_vars();
    let phase1 = max_min_eigenvalue(red, &vec![0.0; zdim], settings, StopRule::StrictlyPositive);
    if phase1.t <= 0.0 {
        return Err(Error::InvalidArgument(
            "family has no strictly feasible point after kernel reduction".into(),
        ));
    }
    // objective in reduced coordinates: c·(base + D z)
    let c: Vec<f64> = (0..zdim)
        .map(|j| {
            (0..objective.len())
                .map(|k| objective[k] * reduction.directions[(k, j)])
                .sum()
        })
        .collect();

    let mut z = phase1.z;
    let mut s = 1.0;
    let mut iterations = phase1.iterations;
    loop {
        let coeffs: Vec<&DMatrix<f64>> = red.fk.iter().collect();
        loop {
            let mat = red.assemble(&z);
            let Some(step) = newton_step(&mat, &coeffs, &c, s) else {
                break;
            };
            iterations += 1;
            if step.decrement_sq < CENTERED || iterations >= settings.max_iterations {
                break;
            }
            let phi = |zz: &[f64]| -> Option<f64> {
                let ld = log_det(&red.assemble(zz))?;
                Some(-s * dot(&c, zz) - ld)
            };
            let f0 = phi(&z).unwrap_or(f64::INFINITY);
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-12 {
                let trial: Vec<f64> = z
                    .iter()
                    .zip(&step.dir)
                    .map(|(a, d)| a + alpha * d)
                    .collect();
                if trial == z {
                    // step below the resolution of z
                    break;
                }
                if let Some(f) = phi(&trial) {
                    if f <= f0 - 0.25 * alpha * step.decrement_sq {
                        z = trial;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            // tiny accepted steps mean round-off, not progress
            if !moved || alpha < 1e-6 {
                break;
            }
        }
        if iterations >= settings.max_iterations {
            return Err(Error::Inconclusive { iterations });
        }
        if (n as f64) / s < 1e-8 {
            break;
        }
        s *= 8.0;
    }
    let y = reduction.lift(&z);
    let full = family.assemble(&y);
    Ok(MaximizeResult {
        value: dot(objective, &y),
        assignment: y,
        min_eigenvalue: min_eigenvalue(&full),
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum StopRule {
    /// Stop once `t ≥ -feas_tol` or the gap bound certifies infeasibility.
    Feasibility,
    /// Stop once `t > 0`.
    StrictlyPositive,
}

struct CoreResult {
    status: SdpStatus,
    z: Vec<f64>,
    t: f64,
    upper_bound: f64,
    iterations: usize,
}

/// Barrier method for `max t s.t. G(z) - tI ⪰ 0`.
fn max_min_eigenvalue(
    family: &AffineFamily,
    z0: &[f64],
    settings: &SdpSettings,
    rule: StopRule,
) -> CoreResult {
    let n = family.dim();
    let m = family.num_vars();
    if n == 0 {
        return CoreResult {
            status: SdpStatus::Feasible,
            z: z0.to_vec(),
            t: f64::INFINITY,
            upper_bound: f64::INFINITY,
            iterations: 0,
        };
    }
    let neg_identity = -DMatrix::<f64>::identity(n, n);
    let mut coeffs: Vec<&DMatrix<f64>> = family.fk.iter().collect();
    coeffs.push(&neg_identity);
    let mut c = vec![0.0; m + 1];
    c[m] = 1.0;

    // x = (z, t); start with slack one below the current smallest eigenvalue
    let mut x = z0.to_vec();
    x.push(min_eigenvalue(&family.assemble(z0)) - 1.0);
    let assemble = |x: &[f64]| -> DMatrix<f64> {
        let mut mat = family.assemble(&x[..m]);
        for i in 0..n {
            mat[(i, i)] -= x[m];
        }
        mat
    };

    let mut s = 1.0;
    let mut iterations = 0;
    let mut upper = f64::INFINITY;
    loop {
        loop {
            if rule == StopRule::Feasibility && x[m] >= -settings.feas_tol {
                return CoreResult {
                    status: SdpStatus::Feasible,
                    t: x[m],
                    z: x[..m].to_vec(),
                    upper_bound: upper,
                    iterations,
                };
            }
            if rule == StopRule::StrictlyPositive && x[m] > 0.0 {
                return CoreResult {
                    status: SdpStatus::Feasible,
                    t: x[m],
                    z: x[..m].to_vec(),
                    upper_bound: upper,
                    iterations,
                };
            }
            let mat = assemble(&x);
            let Some(step) = newton_step(&mat, &coeffs, &c, s) else {
                break;
            };
            if step.decrement_sq < CENTERED {
                break;
            }
            iterations += 1;
            if iterations >= settings.max_iterations {
                return CoreResult {
                    status: SdpStatus::MaxIterations,
                    t: x[m],
                    z: x[..m].to_vec(),
                    upper_bound: upper,
                    iterations,
                };
            }
            let phi = |xx: &[f64]| -> Option<f64> {
                let ld = log_det(&assemble(xx))?;
                Some(-s * xx[m] - ld)
            };
            let f0 = phi(&x).unwrap_or(f64::INFINITY);
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-12 {
                let trial: Vec<f64> = x
                    .iter()
                    .zip(&step.dir)
                    .map(|(a, d)| a + alpha * d)
                    .collect();
                if trial == x {
                    // step below the resolution of x
                    break;
                }
                if let Some(f) = phi(&trial) {
                    if f <= f0 - 0.25 * alpha * step.decrement_sq {
                        x = trial;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            // tiny accepted steps mean round-off, not progress
            if !moved || alpha < 1e-6 {
                break;
            }
        }
        // on the central path the dual gap is n / s
        let gap = n as f64 / s;
        upper = upper.min(x[m] + gap);
        match rule {
            StopRule::Feasibility if upper < -settings.feas_tol => {
                return CoreResult {
                    status: SdpStatus::Infeasible,
                    t: x[m],
                    z: x[..m].to_vec(),
                    upper_bound: upper,
                    iterations,
                };
            }
            StopRule::StrictlyPositive if upper <= 0.0 => {
                return CoreResult {
                    status: SdpStatus::Infeasible,
                    t: x[m],
                    z: x[..m].to_vec(),
                    upper_bound: upper,
                    iterations,
                };
            }
            _ => {}
        }
        if gap < 1e-12 * (1.0 + x[m].abs()) {
            // bracket [t, upper] is below round-off
            let status = match rule {
                StopRule::Feasibility if x[m] + gap >= -settings.feas_tol => SdpStatus::Feasible,
                _ => SdpStatus::Infeasible,
            };
            return CoreResult {
                status,
                t: x[m],
                z: x[..m].to_vec(),
                upper_bound: upper,
                iterations,
            };
        }
        s *= 8.0;
    }
}

struct NewtonStep {
    dir: Vec<f64>,
    decrement_sq: f64,
}

/// Newton direction for `-s cᵀx - log det(mat)` where `∂mat/∂xₐ = coeffs[a]`.
fn newton_step(
    mat: &DMatrix<f64>,
    coeffs: &[&DMatrix<f64>],
    c: &[f64],
    s: f64,
) -> Option<NewtonStep> {
    let k = coeffs.len();
    let inv = mat.clone().cholesky()?.inverse();
    let products: Vec<DMatrix<f64>> = coeffs.iter().map(|g| &inv * *g).collect();
    let mut grad = DVector::zeros(k);
    let mut hess = DMatrix::zeros(k, k);
    for a in 0..k {
        grad[a] = -s * c[a] - products[a].trace();
        for b in a..k {
            let h = products[a].component_mul(&products[b].transpose()).sum();
            hess[(a, b)] = h;
            hess[(b, a)] = h;
        }
    }
    if k == 0 {
        return Some(NewtonStep {
            dir: Vec::new(),
            decrement_sq: 0.0,
        });
    }
    let ridge = 1e-12 * (1.0 + hess.diagonal().amax());
    for a in 0..k {
        hess[(a, a)] += ridge;
    }
    let dir = match hess.clone().cholesky() {
        Some(ch) => ch.solve(&(-&grad)),
        None => hess.lu().solve(&(-&grad))?,
    };
    let decrement_sq = -grad.dot(&dir);
    Some(NewtonStep {
        dir: dir.iter().copied().collect(),
        decrement_sq: decrement_sq.max(0.0),
    })
}

fn log_det(mat: &DMatrix<f64>) -> Option<f64> {
    let ch = mat.clone().cholesky()?;
    let l = ch.l_dirty();
    Some((0..mat.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Plain-text grid of a matrix for debugging dumps.
pub fn dump_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:>22.15e}", m[(r, c)]))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}
