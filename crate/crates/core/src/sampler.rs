//! Seeded random initial sets and Monte Carlo estimators.
//!
//! Every field is a pure function of `(shape, p, seed)`: a ChaCha8 stream keyed
//! by the seed supplies one 64-bit word per site index, and the site is
//! initially infected iff the top 53 bits of its word, read as a uniform in
//! `[0, 1)`, fall below `p`. Because the word depends only on `(seed, index)`,
//! lowering `p` with the seed held fixed can only remove sites; `estimate_pc`
//! relies on this to use common random numbers across probes.
//!
//! Trial `k` of a plan uses the seed [`derive_seed`]`(master_seed, k)`, and all
//! aggregation is a count, so results do not depend on the thread count.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::engine::{class_of_run, CubeClass, Evolver, ProcessParams};
use crate::error::{input, Error, Result};
use crate::lattice::{Grid, LatticeShape, SiteSet};

/// Normal quantile for the two-sided 95% Wilson interval.
pub const Z95: f64 = 1.959963984540054;

pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng.next_u64()
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        input(format!("probability p={p} is outside [0, 1]"))
    }
}

#[inline]
fn unit_uniform(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Calls `f(index)` for every site of an `volume`-site field that is
/// initially infected.
fn for_each_seeded(volume: usize, p: f64, seed: u64, mut f: impl FnMut(usize)) {
    if p <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..volume {
        if unit_uniform(rng.next_u64()) < p {
            f(i);
        }
    }
}

fn seeded_indices(volume: usize, p: f64, seed: u64, out: &mut Vec<usize>) {
    out.clear();
    for_each_seeded(volume, p, seed, |i| out.push(i));
}

/// Bernoulli(p) initial set keyed by `(seed, site index)`.
pub fn bernoulli_field(shape: &LatticeShape, p: f64, seed: u64) -> Result<SiteSet> {
    check_p(p)?;
    let mut set = SiteSet::empty(*shape);
    for_each_seeded(shape.volume(), p, seed, |i| set.insert(i));
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialPlan {
    pub shape: LatticeShape,
    pub r: usize,
    pub p: f64,
    pub trials: usize,
    pub master_seed: u64,
}

impl TrialPlan {
    pub fn new(shape: LatticeShape, r: usize, p: f64, trials: usize, master_seed: u64) -> Result<Self> {
        check_p(p)?;
        if trials == 0 {
            return input("a trial plan needs at least one trial");
        }
        ProcessParams::new(shape, r)?;
        Ok(Self {
            shape,
            r,
            p,
            trials,
            master_seed,
        })
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        derive_seed(self.master_seed, trial as u64)
    }

    fn params(&self) -> ProcessParams {
        ProcessParams::new(self.shape, self.r).expect("validated in TrialPlan::new")
    }
}

/// Point estimate of a probability with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
    pub successes: usize,
}

impl EstimateResult {
    pub fn from_counts(successes: usize, trials: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, Z95);
        Self {
            point: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            trials,
            successes,
        }
    }

    /// Half-width of the Wilson interval in units of the normal quantile.
    pub fn std_error(&self) -> f64 {
        (self.ci_high - self.ci_low) / (2.0 * Z95)
    }
}

pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo.min(phat), hi.max(phat))
}

/// Percolation time of every trial, in trial order.
pub fn percolation_times(plan: &TrialPlan) -> Vec<Option<u32>> {
    let params = plan.params();
    (0..plan.trials)
        .into_par_iter()
        .map_init(
            || (Evolver::for_params(&params), Vec::new()),
            |(ev, buf), k| {
                seeded_indices(plan.shape.volume(), plan.p, plan.trial_seed(k), buf);
                ev.run(buf.iter().copied()).percolation_time()
            },
        )
        .collect()
}

fn count_percolating(params: &ProcessParams, p: f64, seeds: &[u64]) -> usize {
    let volume = params.shape().volume();
    seeds
        .par_iter()
        .map_init(
            || (Evolver::for_params(params), Vec::new()),
            |(ev, buf), &seed| {
                seeded_indices(volume, p, seed, buf);
                ev.run(buf.iter().copied()).percolates() as usize
            },
        )
        .sum()
}

/// Fraction of trials whose span is the whole lattice.
pub fn estimate_percolation(plan: &TrialPlan) -> EstimateResult {
    let seeds: Vec<u64> = (0..plan.trials).map(|k| plan.trial_seed(k)).collect();
    let hits = count_percolating(&plan.params(), plan.p, &seeds);
    EstimateResult::from_counts(hits, plan.trials)
}

/// Fraction of Bernoulli(p) fields on the open cube `[m]^d` (threshold `d`)
/// that classify as bad.
pub fn estimate_eta(m: usize, d: usize, p: f64, trials: usize, seed: u64) -> Result<EstimateResult> {
    check_p(p)?;
    if m < 2 {
        return input(format!("eta needs m >= 2 (got {m})"));
    }
    if trials == 0 {
        return input("eta needs at least one trial");
    }
    let shape = LatticeShape::open(d, m)?;
    let bad: usize = (0..trials)
        .into_par_iter()
        .map_init(
            || (Evolver::new(Grid::new(vec![m; d], false), d), Vec::new()),
            |(ev, buf), k| {
                seeded_indices(shape.volume(), p, derive_seed(seed, k as u64), buf);
                let summary = ev.run(buf.iter().copied());
                (class_of_run(ev, &summary, m) == CubeClass::Bad) as usize
            },
        )
        .sum();
    Ok(EstimateResult::from_counts(bad, trials))
}

/// Empirical quantiles of the percolation time over percolating trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeQuantiles {
    /// `(q, value)` pairs; empty when no trial percolated.
    pub values: Vec<(f64, f64)>,
    pub percolating: usize,
    pub non_percolating: usize,
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, 0.5))
}

pub fn time_quantiles(plan: &TrialPlan, quantiles: &[f64]) -> Result<TimeQuantiles> {
    if let Some(q) = quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return input(format!("quantile {q} is outside (0, 1)"));
    }
    let times = percolation_times(plan);
    Ok(quantiles_of(&times, quantiles))
}

pub(crate) fn quantiles_of(times: &[Option<u32>], quantiles: &[f64]) -> TimeQuantiles {
    let mut finite: Vec<f64> = times.iter().flatten().map(|&t| t as f64).collect();
    finite.sort_by(f64::total_cmp);
    let values = if finite.is_empty() {
        Vec::new()
    } else {
        quantiles
            .iter()
            .map(|&q| (q, quantile_sorted(&finite, q)))
            .collect()
    };
    TimeQuantiles {
        values,
        percolating: finite.len(),
        non_percolating: times.len() - finite.len(),
    }
}

/// One probability probed during bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub p: f64,
    pub estimate: EstimateResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcEstimate {
    pub pc: f64,
    pub bracket: (f64, f64),
    pub probes: Vec<Probe>,
}

/// Bisection for `sup{p : P_p(percolates) <= 1/2}`. Every probe reuses the
/// same trial seeds, so the empirical curve is monotone in `p`.
pub fn estimate_pc(
    shape: &LatticeShape,
    r: usize,
    trials_per_probe: usize,
    tol: f64,
    seed: u64,
) -> Result<PcEstimate> {
    if !(tol > 0.0) {
        return input(format!("bisection tolerance must be positive (got {tol})"));
    }
    if trials_per_probe == 0 {
        return input("bisection needs at least one trial per probe");
    }
    let params = ProcessParams::new(*shape, r)?;
    let seeds: Vec<u64> = (0..trials_per_probe as u64)
        .map(|k| derive_seed(seed, k))
        .collect();
    let mut probes = Vec::new();
    let mut probe = |p: f64| {
        let est = EstimateResult::from_counts(count_percolating(&params, p, &seeds), seeds.len());
        probes.push(Probe { p, estimate: est });
        est.point
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if probe(lo) > 0.5 || probe(hi) <= 0.5 {
        return Err(Error::Input(format!(
            "percolation probability does not cross 1/2 on [0, 1] for {shape} with r={r}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid) <= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PcEstimate {
        pc: 0.5 * (lo + hi),
        bracket: (lo, hi),
        probes,
    })
}
