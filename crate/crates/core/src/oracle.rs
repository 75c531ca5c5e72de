//! Brute-force ground truth on tiny instances.
//!
//! Every initial set of a lattice with at most [`MAX_ENUM_SITES`] sites is fed
//! through the engine. A fixed ~1% sample of configurations is additionally
//! replayed with [`naive_span`], which recounts every neighborhood each round,
//! and any disagreement is reported as an internal error.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::engine::{class_of_run, evolve_step, CubeClass, Evolver, ProcessParams};
use crate::error::{Error, Result};
use crate::lattice::{Grid, LatticeShape, Site, SiteSet};

pub const MAX_ENUM_SITES: usize = 24;
pub const MAX_BALL_SITES: usize = 20;

const CHUNK: u64 = 1 << 12;

/// Configurations whose index is a multiple of this are replayed naively.
const NAIVE_STRIDE: u64 = 97;

/// `P(p) = sum_k c_k p^k (1-p)^(N-k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PercPolynomial {
    pub vertex_count: usize,
    pub counts: Vec<u64>,
}

impl PercPolynomial {
    pub fn eval(&self, p: f64) -> f64 {
        weighted_sum(&self.counts, p)
    }

    /// `k,c_k` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,c_k")?;
        for (k, c) in self.counts.iter().enumerate() {
            writeln!(out, "{k},{c}")?;
        }
        Ok(())
    }
}

fn weighted_sum(counts: &[u64], p: f64) -> f64 {
    let n = counts.len() as i32 - 1;
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| c as f64 * p.powi(k as i32) * (1.0 - p).powi(n - k as i32))
        .sum()
}

fn check_capacity(volume: usize) -> Result<()> {
    if volume > MAX_ENUM_SITES {
        return Err(Error::Capacity(format!(
            "exact enumeration is limited to {MAX_ENUM_SITES} sites (got {volume})"
        )));
    }
    Ok(())
}

/// Span by repeated full recounts until nothing changes.
pub fn naive_span(a0: &SiteSet, params: &ProcessParams) -> Result<SiteSet> {
    let mut cur = a0.clone();
    loop {
        let next = evolve_step(&cur, params)?;
        if next == cur {
            return Ok(cur);
        }
        cur = next;
    }
}

#[derive(Debug, Clone)]
struct Tally {
    percolating: Vec<u64>,
    bad: Vec<u64>,
    max_time: Option<u32>,
}

impl Tally {
    fn new(volume: usize) -> Self {
        Tally {
            percolating: vec![0; volume + 1],
            bad: vec![0; volume + 1],
            max_time: None,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.percolating.iter_mut().zip(&other.percolating) {
            *a += b;
        }
        for (a, b) in self.bad.iter_mut().zip(&other.bad) {
            *a += b;
        }
        self.max_time = self.max_time.max(other.max_time);
        self
    }
}

fn seeds_of(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&i| mask >> i & 1 == 1)
}

/// Runs every configuration of `shape`. `cube_side` turns on cube
/// classification of each configuration as `[m]^d`.
fn enumerate(shape: LatticeShape, r: usize, cube_side: Option<usize>) -> Result<Tally> {
    let volume = shape.volume();
    check_capacity(volume)?;
    let params = ProcessParams::new(shape, r)?;
    let total = 1u64 << volume;
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut ev = Evolver::for_params(&params);
            let mut tally = Tally::new(volume);
            for mask in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let k = mask.count_ones() as usize;
                let summary = ev.run(seeds_of(mask));
                if summary.percolates() {
                    tally.percolating[k] += 1;
                    tally.max_time = tally.max_time.max(Some(summary.last_time));
                }
                if let Some(m) = cube_side {
                    if class_of_run(&ev, &summary, m) == CubeClass::Bad {
                        tally.bad[k] += 1;
                    }
                }
                if mask % NAIVE_STRIDE == 0 {
                    let a0 = SiteSet::from_mask(shape, mask);
                    let naive = naive_span(&a0, &params)?;
                    let fast = SiteSet::from_indices(shape, (0..volume).filter(|&i| ev.is_infected(i)));
                    if naive != fast {
                        return Err(Error::Internal(format!(
                            "engine and naive evolver disagree on configuration {mask:#x} of {shape}"
                        )));
                    }
                }
            }
            Ok(tally)
        })
        .try_reduce(|| Tally::new(volume), |a, b| Ok(a.merge(b)))
}

pub fn exact_percolation_polynomial(shape: &LatticeShape, r: usize) -> Result<PercPolynomial> {
    let tally = enumerate(*shape, r, None)?;
    Ok(PercPolynomial {
        vertex_count: shape.volume(),
        counts: tally.percolating,
    })
}

/// Exact percolation probability at `p`.
pub fn exact_percolation_probability(shape: &LatticeShape, r: usize, p: f64) -> Result<f64> {
    Ok(exact_percolation_polynomial(shape, r)?.eval(p))
}

/// Number of `k`-subsets of `[m]^d` that leave the cube bad, for each `k`
/// (threshold `r = d`).
pub fn bad_counts(m: usize, d: usize) -> Result<Vec<u64>> {
    if m < 2 {
        return Err(Error::Input(format!("cube classes need m >= 2 (got {m})")));
    }
    let shape = LatticeShape::open(d, m)?;
    Ok(enumerate(shape, d, Some(m))?.bad)
}

/// Probability that `[m]^d` is bad under Bernoulli(p) with `r = d`.
pub fn exact_eta(m: usize, d: usize, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Input(format!("probability p={p} is outside [0, 1]")));
    }
    Ok(weighted_sum(&bad_counts(m, d)?, p))
}

/// `eta(p)` from the output of [`bad_counts`].
pub fn eta_from_bad_counts(counts: &[u64], p: f64) -> f64 {
    weighted_sum(counts, p)
}

/// `m,d,p,eta_exact` rows for every `p` in `ps`.
pub fn write_eta_csv<W: Write>(mut out: W, m: usize, d: usize, ps: &[f64]) -> Result<()> {
    let counts = bad_counts(m, d)?;
    let io = |e: io::Error| Error::Internal(e.to_string());
    writeln!(out, "m,d,p,eta_exact").map_err(io)?;
    for &p in ps {
        writeln!(out, "{m},{d},{p},{}", eta_from_bad_counts(&counts, p)).map_err(io)?;
    }
    Ok(())
}

/// Largest percolation time over all percolating initial sets.
pub fn exact_max_percolation_time(shape: &LatticeShape, r: usize) -> Result<u32> {
    // The full set always percolates, so the maximum exists.
    Ok(enumerate(*shape, r, None)?.max_time.unwrap_or(0))
}

/// Smallest number of uninfected sites inside the l1 ball `B_t(0)` of `Z^d`
/// that keeps the origin uninfected through round `t` when everything outside
/// the ball is infected.
pub fn exact_extremal(d: usize, r: usize, t: usize) -> Result<usize> {
    if d == 0 || r == 0 {
        return Err(Error::Input("need d >= 1 and r >= 1".into()));
    }
    // Sites farther than t+1 from the origin cannot affect it by round t.
    let n = 2 * t + 3;
    let shape = LatticeShape::open(d, n)?;
    let center = Site::new(vec![(t + 2) as i64; d]);
    let ball: Vec<usize> = crate::lattice::ball(t, &center, &shape)?.iter().collect();
    if ball.len() > MAX_BALL_SITES {
        return Err(Error::Capacity(format!(
            "ball has {} sites, subset enumeration is limited to {MAX_BALL_SITES}",
            ball.len()
        )));
    }
    let origin = shape.index_of(&center)?;
    let outside: Vec<usize> = {
        let mut in_ball = vec![false; shape.volume()];
        ball.iter().for_each(|&i| in_ball[i] = true);
        (0..shape.volume()).filter(|&i| !in_ball[i]).collect()
    };
    let grid = Grid::new(vec![n; d], false);
    let t = t as u32;
    (0u64..1 << ball.len())
        .into_par_iter()
        .map_init(
            || Evolver::new(grid.clone(), r),
            |ev, uninfected| {
                let seeds = outside.iter().copied().chain(
                    ball.iter()
                        .enumerate()
                        .filter(|&(j, _)| uninfected >> j & 1 == 0)
                        .map(|(_, &i)| i),
                );
                ev.run(seeds);
                let time = ev.times()[origin];
                (time > t).then_some(uninfected.count_ones() as usize)
            },
        )
        .flatten()
        .min()
        .ok_or_else(|| Error::Internal("no subset keeps the origin uninfected".into()))
}
