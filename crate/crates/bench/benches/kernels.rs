use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use bellscope::classify::{classify_all, StandardSearch};
use bellscope::linalg::jacobi_eigen;
use bellscope::npa::{contains, max_mu, Level, NpaOptions};
use bellscope::quantum::{chsh_search, SearchSettings};
use bellscope::sdp::{solve_feasibility, DEFAULT_FEAS_TOL};
use bellscope::simplex::{center_segment, Face};
use bellscope_bench::{moment_problem, near_boundary_point, random_symmetric};

fn jacobi(c: &mut Criterion) {
    let mut g = c.benchmark_group("jacobi");
    for n in [5, 9, 16] {
        let m = random_symmetric(n, n as u64);
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| jacobi_eigen(black_box(m)))
        });
    }
    g.finish();
}

fn sdp(c: &mut Criterion) {
    let mut g = c.benchmark_group("sdp_feasibility");
    for level in [Level::L1, Level::L1AB] {
        let p = moment_problem(level);
        g.bench_function(level.label(), |b| {
            b.iter(|| solve_feasibility(black_box(&p), DEFAULT_FEAS_TOL).unwrap())
        });
    }
    g.finish();
}

fn npa(c: &mut Criterion) {
    let beh = near_boundary_point();
    let opts = NpaOptions::default();
    c.bench_function("npa_contains_1ab", |b| {
        b.iter(|| contains(black_box(&beh), Level::L1AB, &opts).unwrap())
    });
    let seg = center_segment(Face::from_zeroed(&[6, 8]).unwrap()).unwrap();
    let mut g = c.benchmark_group("npa_max_mu");
    g.sample_size(10);
    g.bench_function("level_1", |b| {
        b.iter(|| max_mu(&seg, Level::L1, &opts).unwrap())
    });
    g.finish();
}

fn search(c: &mut Criterion) {
    let problem = chsh_search(&[1, 2, 7]).unwrap();
    let settings = SearchSettings {
        restarts: 1,
        seed: 5,
        ..SearchSettings::default()
    };
    c.bench_function("qubit_search_one_restart", |b| {
        b.iter(|| problem.maximize(black_box(&settings), None))
    });
}

fn classify(c: &mut Criterion) {
    let search = StandardSearch::new(SearchSettings::default());
    let mut g = c.benchmark_group("classify");
    g.sample_size(10);
    g.bench_function("all_faces", |b| b.iter(|| classify_all(&search).unwrap()));
    g.finish();
}

criterion_group!(benches, jacobi, sdp, npa, search, classify);
criterion_main!(benches);
