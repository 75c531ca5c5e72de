//! Closed-form calculators for the extremal count, tail bounds, the cube-size
//! threshold and the bad-cube recursion.
//!
//! The absolute constants (`C`, `B`) and `p0` are not known numerically; they
//! are plain arguments here. The calculators are total on their domains and
//! may return values above 1 (they are bounds, not probabilities) or `+inf`
//! when an iterated exponential overflows.

use std::f64::consts::PI;

use itertools::Itertools;

/// `pi^2 / 18`, the sharp constant for `d = r = 2`.
pub const LAMBDA_2D: f64 = PI * PI / 18.0;

/// Default cut-off below which `K(p)` follows `p`.
pub const DEFAULT_P0: f64 = 0.1;

/// Default `lambda(d, r)`: only `d = r = 2` has a known value.
pub fn default_lambda(d: usize, r: usize) -> Option<f64> {
    (d == 2 && r == 2).then_some(LAMBDA_2D)
}

/// `|P_{d,r}(t)|`: points of the l1 ball of radius `t` around the origin of
/// `Z^d` whose last `r - 1` coordinates lie in `{0, 1}`, counted by direct
/// enumeration.
pub fn p_count(d: usize, r: usize, t: usize) -> u64 {
    let t = t as i64;
    let free = d + 1 - r.min(d + 1);
    (0..d)
        .map(|axis| {
            if axis < free {
                (-t..=t).collect::<Vec<_>>()
            } else {
                vec![0, 1]
            }
        })
        .multi_cartesian_product()
        .filter(|x| x.iter().map(|c| c.abs()).sum::<i64>() <= t)
        .count() as u64
}

/// `(1 - (1-p)^{2^d t})^{n^d / (2^d t)}`, an upper bound on `P(T <= t)`.
pub fn lower_tail_bound(n: usize, d: usize, p: f64, t: usize) -> f64 {
    let block = 2f64.powi(d as i32) * t as f64;
    let blocks = (n as f64).powi(d as i32) / block;
    (1.0 - (1.0 - p).powf(block)).powf(blocks)
}

/// Largest `t` with `2^d t ln(1/(1-p)) <= d ln n`; `None` when `p = 0`.
pub fn lower_time_threshold(n: usize, d: usize, p: f64) -> Option<u64> {
    if p <= 0.0 {
        return None;
    }
    let rate = -(1.0 - p).ln();
    if n <= 1 || rate.is_infinite() {
        return Some(0);
    }
    let x = d as f64 * (n as f64).ln() / (2f64.powi(d as i32) * rate);
    // Absorb rounding when the ratio is an exact integer.
    Some((x + 1e-9).floor() as u64)
}

/// `exp` applied `times` times.
pub fn iterated_exp(x: f64, times: usize) -> f64 {
    (0..times).fold(x, |acc, _| acc.exp())
}

/// `K(p) = exp^{(d-1)}(2 lambda / min(p, p0))`.
pub fn k_of_p(p: f64, d: usize, lambda: f64, p0: f64) -> f64 {
    let base = if p <= p0 { p } else { p0 };
    iterated_exp(2.0 * lambda / base, d.saturating_sub(1))
}

/// `16 K^3 ln(1/(1-p))^2 / ln(1/delta)^2` for a given `K`.
pub fn l_threshold_from_k(k: f64, p: f64, delta: f64) -> f64 {
    let a = -(1.0 - p).ln();
    let b = -delta.ln();
    16.0 * k.powi(3) * a * a / (b * b)
}

pub fn l_threshold(p: f64, delta: f64, d: usize, lambda: f64, p0: f64) -> f64 {
    l_threshold_from_k(k_of_p(p, d, lambda, p0), p, delta)
}

/// `log_{3/2} 2`.
pub fn log_three_halves_of_two() -> f64 {
    2f64.ln() / 1.5f64.ln()
}

/// `K (4 K ln(1/(1-p)) / ln(1/delta))^{log_{3/2} 2}` for a given `K`.
pub fn l_threshold_proof_form_from_k(k: f64, p: f64, delta: f64) -> f64 {
    let ratio = 4.0 * k * -(1.0 - p).ln() / -delta.ln();
    k * ratio.powf(log_three_halves_of_two())
}

pub fn l_threshold_proof_form(p: f64, delta: f64, d: usize, lambda: f64, p0: f64) -> f64 {
    l_threshold_proof_form_from_k(k_of_p(p, d, lambda, p0), p, delta)
}

/// `B L^{d-1} (1-p)^{2L-8}`.
pub fn eta_upper_bound(l: usize, d: usize, p: f64, b: f64) -> f64 {
    b * (l as f64).powi(d as i32 - 1) * (1.0 - p).powf(2.0 * l as f64 - 8.0)
}

/// `C eta_m^3 + B m^{d-1} (1-p)^{4m-8}`.
pub fn recursion_rhs(m: usize, d: usize, p: f64, eta_m: f64, c: f64, b: f64) -> f64 {
    c * eta_m.powi(3) + b * (m as f64).powi(d as i32 - 1) * (1.0 - p).powf(4.0 * m as f64 - 8.0)
}

/// `C (1-p)^{t-t'} / p`.
pub fn origin_tail_bound(t: u64, t_prime: u64, p: f64, c: f64) -> f64 {
    c * (1.0 - p).powf(t as f64 - t_prime as f64) / p
}

/// `n^d (1-p)^{t-t'} / p`, the union bound on `P(T >= t)`.
pub fn upper_tail_bound(n: usize, d: usize, p: f64, t: u64, t_prime: u64) -> f64 {
    (n as f64).powi(d as i32) * (1.0 - p).powf(t as f64 - t_prime as f64) / p
}

/// `g(p) = B L^d (1-p)^{-8}`.
pub fn g_of_p(l: usize, d: usize, p: f64, b: f64) -> f64 {
    b * (l as f64).powi(d as i32) * (1.0 - p).powi(-8)
}

/// Smallest `C >= 0` with `eta_big <= C eta_small^3 + B m^{d-1} (1-p)^{4m-8}`,
/// where `m` is the smaller cube's side. `None` if no finite `C` works.
pub fn fit_recursion_constant(eta_small: f64, eta_big: f64, m: usize, d: usize, p: f64, b: f64) -> Option<f64> {
    let slack = eta_big - recursion_rhs(m, d, p, 0.0, 0.0, b);
    if slack <= 0.0 {
        Some(0.0)
    } else if eta_small > 0.0 {
        Some(slack / eta_small.powi(3))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        ((a - b) / b).abs() < 1e-12
    }

    #[test]
    fn extremal_counts() {
        assert_eq!(p_count(2, 2, 0), 1);
        assert_eq!(p_count(3, 3, 0), 1);
        assert_eq!(p_count(2, 2, 1), 4);
        assert_eq!(p_count(3, 3, 1), 5);
        assert_eq!(p_count(2, 2, 2), 8);
        // For r = d the set is t-line plus a (t-1)-line, doubled per extra axis.
        for t in 1..6 {
            assert_eq!(p_count(2, 2, t), (2 * t + 1 + 2 * t - 1) as u64);
        }
    }

    #[test]
    fn lower_tail_examples() {
        // (1 - 2^-4)^4 = 50625 / 65536
        assert_eq!(lower_tail_bound(4, 2, 0.5, 1), 50625.0 / 65536.0);
        assert!((lower_tail_bound(50, 2, 0.999_999, 1) - 1.0).abs() < 1e-9);
        let mut prev = 0.0;
        for t in 1..20 {
            let v = lower_tail_bound(64, 2, 0.3, t);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn lower_threshold_examples() {
        assert_eq!(lower_time_threshold(256, 2, 0.5), Some(4));
        assert_eq!(lower_time_threshold(1, 2, 0.5), Some(0));
        assert_eq!(lower_time_threshold(100, 2, 0.0), None);
        let mut prev = 0;
        for n in 1..5000 {
            let v = lower_time_threshold(n, 3, 0.05).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn k_examples() {
        let p = LAMBDA_2D;
        assert!(close(k_of_p(p, 2, LAMBDA_2D, p), 2f64.exp()));
        assert!(close(k_of_p(0.3, 1, LAMBDA_2D, 0.1), 2.0 * LAMBDA_2D / 0.1));
        assert!(close(k_of_p(0.05, 1, 1.0, 0.1), 40.0));
        assert_eq!(k_of_p(0.2, 3, 1.0, 0.1), k_of_p(0.7, 3, 1.0, 0.1));
        assert!(k_of_p(0.01, 3, 1.0, 0.1).is_infinite());
    }

    #[test]
    fn l_threshold_examples() {
        let p = 1.0 - (-1f64).exp();
        let delta = (-1f64).exp();
        assert!(close(l_threshold_from_k(1.0, p, delta), 16.0));
        let proof = l_threshold_proof_form_from_k(1.0, p, delta);
        assert!(close(proof, 4f64.powf(2f64.ln() / 1.5f64.ln())));
        assert!((proof - 10.70).abs() < 0.01);
        assert!(l_threshold_proof_form_from_k(2.0, p, delta) > proof);
    }

    #[test]
    fn l_threshold_monotonicity() {
        // With K frozen above p0 only the log factor moves.
        let grid: Vec<f64> = (10..60).map(|i| i as f64 / 100.0).collect();
        for w in grid.windows(2) {
            assert!(l_threshold(w[1], 0.01, 2, LAMBDA_2D, 0.1) > l_threshold(w[0], 0.01, 2, LAMBDA_2D, 0.1));
        }
        // Below p0 the K^3 factor shrinks faster than the log factor grows.
        let below: Vec<f64> = (4..10).map(|i| i as f64 / 100.0).collect();
        for w in below.windows(2) {
            assert!(l_threshold(w[1], 0.01, 2, LAMBDA_2D, 0.1) < l_threshold(w[0], 0.01, 2, LAMBDA_2D, 0.1));
        }
    }

    #[test]
    fn l_threshold_dominates_proof_form() {
        for i in 2..=100 {
            let p = i as f64 / 1000.0;
            let stated = l_threshold(p, 0.01, 2, LAMBDA_2D, 0.1);
            let proof = l_threshold_proof_form(p, 0.01, 2, LAMBDA_2D, 0.1);
            assert!(stated >= proof, "p={p}: {stated} < {proof}");
        }
    }

    #[test]
    fn eta_bound_examples() {
        assert_eq!(eta_upper_bound(10, 3, 0.5, 1.0), 0.0244140625);
        assert_eq!(eta_upper_bound(10, 3, 1.0, 1.0), 0.0);
    }

    #[test]
    fn recursion_examples() {
        assert_eq!(recursion_rhs(4, 3, 1.0, 0.0, 1.0, 1.0), 0.0);
        assert!(close(recursion_rhs(4, 3, 0.5, 0.1, 1.0, 1.0), 0.0635));
        assert!(recursion_rhs(6, 3, 0.4, 0.2, 3.0, 1.0) >= 3.0 * 0.2f64.powi(3));
    }

    #[test]
    fn tail_examples() {
        assert_eq!(origin_tail_bound(5, 5, 0.5, 1.0), 2.0);
        assert_eq!(origin_tail_bound(12, 2, 0.5, 1.0), 0.001953125);
        assert!(origin_tail_bound(13, 2, 0.5, 1.0) < origin_tail_bound(12, 2, 0.5, 1.0));
        assert_eq!(upper_tail_bound(10, 2, 0.5, 10, 0), 0.1953125);
        assert_eq!(upper_tail_bound(10, 2, 0.5, 3, 3), 200.0);
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_of_p(2, 3, 0.0, 1.0), 8.0);
        assert_eq!(g_of_p(10, 2, 0.5, 1.0), 25600.0);
        assert!(g_of_p(10, 2, 0.6, 1.0) > g_of_p(10, 2, 0.5, 1.0));
    }

    #[test]
    fn recursion_constant_fit() {
        let c = fit_recursion_constant(0.2, 0.9, 4, 3, 0.35, 1.0).unwrap();
        assert!(c > 0.0);
        assert!((recursion_rhs(4, 3, 0.35, 0.2, c, 1.0) - 0.9).abs() < 1e-12);
        assert_eq!(fit_recursion_constant(0.2, 0.1, 4, 3, 0.35, 1.0), Some(0.0));
        assert_eq!(fit_recursion_constant(0.0, 1e-30, 4, 3, 0.35, 1.0), Some(0.0));
        assert_eq!(fit_recursion_constant(0.0, 0.9, 4, 3, 0.35, 1.0), None);
    }
}
