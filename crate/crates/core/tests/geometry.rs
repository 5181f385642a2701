mod common;

use bellscope::behavior::chsh_value;
use bellscope::classify::{
    classify_all, witness_is_valid, ClassificationTable, Evidence, StandardSearch, Verdict,
    WITNESS_THRESHOLD,
};
use bellscope::hardy::enumerate_arguments;
use bellscope::npa::{max_mu, Level, NpaOptions};
use bellscope::principles::{principle_mu, uffink_value, Principle};
use bellscope::quantum::{max_chsh_qubits, SearchSettings};
use bellscope::simplex::{center_segment, edge_mask, local_vertex, void_edges, void_reason, Face};
use std::sync::OnceLock;

fn table() -> &'static ClassificationTable {
    static T: OnceLock<ClassificationTable> = OnceLock::new();
    T.get_or_init(|| {
        classify_all(&StandardSearch::new(SearchSettings {
            restarts: 200,
            seed: 0,
            ..SearchSettings::default()
        }))
        .unwrap()
    })
}

#[test]
fn voidness_is_monotone_under_zeroing() {
    let rows = &table().rows;
    for r in rows.iter().filter(|r| r.verdict == Verdict::QuantumVoid) {
        let m = r.face.mask();
        for s in rows.iter().filter(|s| s.face.mask() & m == m) {
            assert_eq!(
                s.verdict,
                Verdict::QuantumVoid,
                "{} void but {} not",
                r.face,
                s.face
            );
        }
    }
}

#[test]
fn every_witness_checks_out() {
    for r in &table().rows {
        if let Evidence::Witness(w) = &r.evidence {
            assert!(
                witness_is_valid(r.face, w, 1e-8, WITNESS_THRESHOLD),
                "face {}",
                r.face
            );
        }
    }
}

#[test]
fn classification_is_deterministic() {
    let again = classify_all(&StandardSearch::new(SearchSettings {
        restarts: 200,
        seed: 0,
        ..SearchSettings::default()
    }))
    .unwrap();
    assert_eq!(
        serde_json::to_string(&again.rows).unwrap(),
        serde_json::to_string(&table().rows).unwrap()
    );
}

#[test]
fn pairs_are_void_exactly_on_edges() {
    // numerical derivation of the edge set from the constrained search alone
    let edges = void_edges();
    let settings = SearchSettings {
        restarts: 64,
        seed: 3,
        ..SearchSettings::default()
    };
    for i in 1..=8 {
        for j in i + 1..=8 {
            let (best, _) = max_chsh_qubits(&[i, j], &settings).unwrap();
            if edges.contains(&(i, j)) {
                assert!(best <= 1e-6, "edge ({i},{j}) reached {best}");
            } else {
                assert!(
                    best > WITNESS_THRESHOLD,
                    "pair ({i},{j}) only reached {best}"
                );
            }
        }
    }
}

#[test]
fn independent_four_sets_are_the_two_special_sets() {
    let edges = void_edges();
    let independent: Vec<u8> = (0u8..=255)
        .filter(|m| m.count_ones() == 4)
        .filter(|m| edges.iter().all(|&e| m & edge_mask(e) != edge_mask(e)))
        .collect();
    assert_eq!(independent, vec![0b0011_1100, 0b1100_0011]);
}

#[test]
fn hardy_faces_avoid_void_edges() {
    for arg in enumerate_arguments() {
        let f = arg.face();
        assert!(
            void_reason(f).is_none(),
            "argument {arg:?} lands on void face {f}"
        );
    }
}

#[test]
fn center_segments_start_local_on_their_face() {
    for f in Face::all().filter(|f| f.dim() > 0) {
        let seg = center_segment(f).unwrap();
        let local = seg.local_point();
        assert!(chsh_value(&local).unwrap().abs() <= 1e-12);
        assert!(f.holds(&local, 1e-12).unwrap());
        assert!(f.holds(&seg.point(0.5), 1e-12).unwrap());
    }
}

#[test]
fn local_vertices_are_deterministic_boxes() {
    for i in 1..=8 {
        let v = local_vertex(i);
        assert!(v.raw().iter().all(|&p| p == 0.0 || p == 1.0));
        assert_eq!(chsh_value(&v).unwrap(), 0.0);
    }
}

#[test]
fn uffink_boundary_matches_quadratic_root() {
    // Uffink's value is quadratic in μ along a segment; solve value = 4 exactly
    let seg = center_segment(Face::from_zeroed(&[2, 4, 5, 6, 7, 8]).unwrap()).unwrap();
    let u = |mu: f64| uffink_value(&seg.point(mu)).unwrap();
    let (f0, fh, f1) = (u(0.0), u(0.5), u(1.0));
    let a = 2.0 * f1 - 4.0 * fh + 2.0 * f0;
    let b = 4.0 * fh - f1 - 3.0 * f0;
    let c = f0 - 4.0;
    let root = if a.abs() < 1e-14 {
        -c / b
    } else {
        let disc = (b * b - 4.0 * a * c).sqrt();
        [(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)]
            .into_iter()
            .filter(|r| (0.0..=1.0).contains(r))
            .fold(f64::NAN, f64::max)
    };
    let mu = principle_mu(&seg, Principle::Uffink).unwrap();
    assert!((mu - root).abs() <= 1e-9, "bisection {mu} vs root {root}");
}

#[test]
fn ml_and_level_one_agree_on_void_edges() {
    let opts = NpaOptions::default();
    for (i, j) in void_edges() {
        let seg = center_segment(Face::from_zeroed(&[i, j]).unwrap()).unwrap();
        let ml = principle_mu(&seg, Principle::MacroscopicLocality).unwrap();
        let npa = max_mu(&seg, Level::L1, &opts).unwrap().mu_star;
        assert!(
            (ml - npa).abs() <= 1e-4,
            "edge ({i},{j}): ml {ml}, npa {npa}"
        );
    }
}
