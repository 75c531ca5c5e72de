mod common;

use bootperc::engine::{percolation_time, span, ProcessParams};
use bootperc::lattice::{LatticeShape, SiteSet};
use bootperc::oracle::{
    bad_counts, exact_eta, exact_extremal, exact_max_percolation_time, exact_percolation_polynomial,
    naive_span, write_eta_csv,
};
use bootperc::sampler::{estimate_eta, estimate_pc, estimate_percolation, TrialPlan};
use common::{binom, mask_to_bools, ref_class, RefLattice};

const POLY_GOLDEN: &str = include_str!("golden/perc_poly_d2_n3_open_r2.csv");
const ETA_GOLDEN: &str = include_str!("golden/eta_d2_m3.csv");

fn golden_counts() -> Vec<u64> {
    POLY_GOLDEN
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

fn ref_polynomial(d: usize, n: usize, torus: bool, r: usize) -> Vec<u64> {
    let lat = RefLattice::new(d, n, torus);
    let v = lat.volume();
    let mut counts = vec![0; v + 1];
    for mask in 0..1u64 << v {
        if lat.percolation_time(&mask_to_bools(mask, v), r).is_some() {
            counts[mask.count_ones() as usize] += 1;
        }
    }
    counts
}

fn eval(counts: &[u64], p: f64) -> f64 {
    let n = counts.len() - 1;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
        .sum()
}

#[test]
fn three_by_three_polynomial_matches_reference_and_golden() {
    let shape = LatticeShape::open(2, 3).unwrap();
    let lib = exact_percolation_polynomial(&shape, 2).unwrap();
    let reference = ref_polynomial(2, 3, false, 2);
    assert_eq!(lib.counts, reference);
    assert_eq!(lib.counts, golden_counts());
    let mut buf = Vec::new();
    lib.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), POLY_GOLDEN);
}

#[test]
fn other_small_polynomials_match_reference() {
    for (d, n, torus, r) in [(1, 2, true, 1), (1, 6, false, 1), (2, 3, true, 2), (2, 4, true, 2), (2, 4, false, 2), (3, 2, true, 2), (2, 3, false, 3)] {
        let shape = if torus {
            LatticeShape::torus(d, n).unwrap()
        } else {
            LatticeShape::open(d, n).unwrap()
        };
        let lib = exact_percolation_polynomial(&shape, r).unwrap();
        let reference = ref_polynomial(d, n, torus, r);
        assert_eq!(lib.counts, reference, "d={d} n={n} torus={torus} r={r}");
        for (k, &c) in lib.counts.iter().enumerate() {
            assert!(c <= binom(lib.vertex_count as u64, k as u64));
        }
    }
}

#[test]
fn engine_and_naive_agree_on_every_configuration() {
    let shape = LatticeShape::open(2, 3).unwrap();
    let params = ProcessParams::new(shape, 2).unwrap();
    let lat = RefLattice::new(2, 3, false);
    for mask in 0..512u64 {
        let a0 = SiteSet::from_mask(shape, mask);
        let fast = span(&a0, &params).unwrap();
        assert_eq!(fast, naive_span(&a0, &params).unwrap(), "mask {mask:#x}");
        let times = lat.times(&mask_to_bools(mask, 9), 2);
        let reference: Vec<usize> = (0..9).filter(|&i| times[i].is_some()).collect();
        assert_eq!(fast.iter().collect::<Vec<_>>(), reference);
        assert_eq!(
            percolation_time(&a0, &params).unwrap(),
            lat.percolation_time(&mask_to_bools(mask, 9), 2)
        );
    }
}

#[test]
fn max_percolation_time_matches_reference() {
    for (d, n, torus, r) in [(2, 3, false, 2), (1, 4, true, 1), (1, 1, true, 1), (2, 4, true, 2)] {
        let shape = if torus {
            LatticeShape::torus(d, n).unwrap()
        } else {
            LatticeShape::open(d, n).unwrap()
        };
        let lat = RefLattice::new(d, n, torus);
        let v = lat.volume();
        let want = (0..1u64 << v)
            .filter_map(|m| lat.percolation_time(&mask_to_bools(m, v), r))
            .max()
            .unwrap();
        assert_eq!(exact_max_percolation_time(&shape, r).unwrap(), want);
    }
    let shape = LatticeShape::open(2, 3).unwrap();
    assert_eq!(exact_max_percolation_time(&shape, 2).unwrap(), 4);
}

#[test]
fn bad_counts_match_reference_classifier() {
    for (m, d) in [(3usize, 2usize), (4, 2), (2, 3), (2, 2)] {
        let v = m.pow(d as u32);
        let mut want = vec![0u64; v + 1];
        for mask in 0..1u64 << v {
            if ref_class(m, d, &mask_to_bools(mask, v)) == 2 {
                want[mask.count_ones() as usize] += 1;
            }
        }
        assert_eq!(bad_counts(m, d).unwrap(), want, "m={m} d={d}");
    }
}

#[test]
fn eta_golden_table() {
    let ps: Vec<f64> = ETA_GOLDEN
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    let mut buf = Vec::new();
    write_eta_csv(&mut buf, 3, 2, &ps).unwrap();
    let text = String::from_utf8(buf).unwrap();
    for (got, want) in text.lines().zip(ETA_GOLDEN.lines()).skip(1) {
        let g: f64 = got.rsplit(',').next().unwrap().parse().unwrap();
        let w: f64 = want.rsplit(',').next().unwrap().parse().unwrap();
        assert!((g - w).abs() <= 1e-12 * w.max(1e-300), "{got} vs {want}");
    }
    // Bad 3x3 configurations by size: 1, 8, 22, 12, then none.
    let want = 0.6f64.powi(9) + 8.0 * 0.4 * 0.6f64.powi(8) + 22.0 * 0.16 * 0.6f64.powi(7) + 12.0 * 0.064 * 0.6f64.powi(6);
    assert!((exact_eta(3, 2, 0.4).unwrap() - want).abs() < 1e-15);
    assert_eq!(exact_eta(3, 2, 1.0).unwrap(), 0.0);
    assert!((exact_eta(3, 2, 0.0).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn extremal_numbers() {
    assert_eq!(exact_extremal(2, 2, 1).unwrap(), 4);
    assert_eq!(exact_extremal(2, 2, 2).unwrap(), 8);
    assert_eq!(exact_extremal(3, 3, 1).unwrap(), 5);
    assert_eq!(exact_extremal(2, 2, 0).unwrap(), 1);
    for (d, r, t) in [(2, 2, 1), (2, 2, 2), (3, 3, 1), (2, 1, 2), (3, 2, 1), (2, 3, 2)] {
        assert_eq!(exact_extremal(d, r, t).unwrap() as u64, bootperc::bounds::p_count(d, r, t), "({d},{r},{t})");
    }
}

#[test]
fn percolation_estimate_within_three_standard_errors() {
    let shape = LatticeShape::open(2, 3).unwrap();
    let exact = eval(&golden_counts(), 0.3);
    let plan = TrialPlan::new(shape, 2, 0.3, 10_000, 2024).unwrap();
    let est = estimate_percolation(&plan);
    assert!((est.point - exact).abs() <= 3.0 * est.std_error(), "{est:?} vs {exact}");
}

#[test]
fn eta_estimate_within_three_standard_errors() {
    for (m, d, p) in [(3, 2, 0.4), (3, 2, 0.2), (4, 2, 0.3), (2, 3, 0.3)] {
        let exact = exact_eta(m, d, p).unwrap();
        let est = estimate_eta(m, d, p, 10_000, 77).unwrap();
        assert!((est.point - exact).abs() <= 3.0 * est.std_error(), "m={m} d={d} p={p}: {est:?} vs {exact}");
    }
}

#[test]
fn critical_probability_of_three_by_three() {
    let counts = golden_counts();
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eval(&counts, mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    assert!((root - 0.443814).abs() < 1e-6);
    let shape = LatticeShape::open(2, 3).unwrap();
    let est = estimate_pc(&shape, 2, 10_000, 1e-3, 5).unwrap();
    assert!((est.pc - root).abs() < 0.02, "{} vs {root}", est.pc);
}

#[test]
fn ring_eccentricity_from_a_single_site() {
    let shape = LatticeShape::torus(1, 5).unwrap();
    let params = ProcessParams::new(shape, 1).unwrap();
    for i in 0..5 {
        let a0 = SiteSet::from_indices(shape, [i]);
        assert_eq!(percolation_time(&a0, &params).unwrap(), Some(2));
    }
}

#[test]
fn lower_tail_bound_dominates_exact_probability() {
    // P(T <= t) on the 4x4 torus with r = 2, from the reference simulator.
    let lat = RefLattice::new(2, 4, true);
    let mut by_t = vec![vec![0u64; 17]; 8];
    for mask in 0..1u64 << 16 {
        if let Some(t) = lat.percolation_time(&mask_to_bools(mask, 16), 2) {
            for row in by_t.iter_mut().skip(t as usize) {
                row[mask.count_ones() as usize] += 1;
            }
        }
    }
    for t in 1..8 {
        for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let exact = eval(&by_t[t], p);
            let bound = bootperc::bounds::lower_tail_bound(4, 2, p, t);
            assert!(bound >= exact - 1e-12, "t={t} p={p}: {bound} < {exact}");
        }
    }
}
