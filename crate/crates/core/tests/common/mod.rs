#![allow(dead_code)]

use bellscope::behavior::{local_box, pr_box, Behavior, FreeVector};
use bellscope::linalg::C64;
use bellscope::quantum::{BlochAxis, QubitConfig};
use bellscope::simplex::Segment;
use rand::Rng;

/// The 16 local deterministic boxes and 8 PR boxes.
pub fn ns_vertices() -> Vec<Behavior> {
    let mut v = Vec::new();
    for code in 0..16 {
        v.push(local_box(
            code & 1,
            (code >> 1) & 1,
            (code >> 2) & 1,
            (code >> 3) & 1,
        ));
    }
    for code in 0..8 {
        v.push(pr_box(code & 1, (code >> 1) & 1, (code >> 2) & 1));
    }
    v
}

/// Flat Dirichlet weights.
pub fn dirichlet<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn random_ns<R: Rng>(rng: &mut R) -> Behavior {
    let verts = ns_vertices();
    let w = dirichlet(rng, verts.len());
    Behavior::combine(w.iter().copied().zip(verts.iter()))
}

/// Uniform point of the nonlocal simplex as a free vector (PR weight is the remainder).
pub fn random_simplex_free<R: Rng>(rng: &mut R) -> FreeVector {
    let w = dirichlet(rng, 9);
    let mut f = [0.0; 8];
    f.copy_from_slice(&w[..8]);
    FreeVector(f)
}

pub fn random_segment<R: Rng>(rng: &mut R) -> Segment {
    let w = dirichlet(rng, 8);
    let mut a = [0.0; 8];
    a.copy_from_slice(&w);
    let sum: f64 = a.iter().sum();
    a[7] += 1.0 - sum;
    Segment::new(a).unwrap()
}

pub fn random_qubit<R: Rng>(rng: &mut R) -> QubitConfig {
    let mut state = [C64::new(0.0, 0.0); 4];
    for z in state.iter_mut() {
        *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let n: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in state.iter_mut() {
        *z /= n;
    }
    let mut axes = [BlochAxis {
        theta: 0.0,
        phi: 0.0,
    }; 4];
    for a in axes.iter_mut() {
        *a = BlochAxis {
            theta: rng.gen_range(0.0..std::f64::consts::PI),
            phi: rng.gen_range(0.0..2.0 * std::f64::consts::PI),
        };
    }
    QubitConfig { state, axes }
}
