//! Synchronous r-neighbor bootstrap percolation.
//!
//! The evolution keeps, for every uninfected site, the number of infected
//! neighbors and only touches the neighbors of sites infected in the previous
//! round, so a full run to fixation relaxes each edge at most twice.

use std::fmt;
use std::io::{self, Write};

use crate::error::{input, Error, Result};
use crate::lattice::{on_cube_side, Grid, LatticeShape, Region, Site, SiteSet};

/// Sentinel time of a site that is never infected.
pub const NEVER: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProcessParams {
    shape: LatticeShape,
    r: usize,
}

impl ProcessParams {
    pub fn new(shape: LatticeShape, r: usize) -> Result<Self> {
        if r == 0 {
            return input("infection threshold r must be at least 1");
        }
        Ok(Self { shape, r })
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// `r > 2d`: nothing outside the initial set can ever be infected.
    pub fn is_degenerate(&self) -> bool {
        self.r > 2 * self.shape.d()
    }
}

/// Outcome of one run to fixation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub infected: usize,
    pub volume: usize,
    /// Round in which the last site was infected (0 if nothing grew).
    pub last_time: u32,
}

impl RunSummary {
    pub fn percolates(&self) -> bool {
        self.infected == self.volume
    }

    /// `T = min{t : A_t = V}` when the span is everything.
    pub fn percolation_time(&self) -> Option<u32> {
        self.percolates().then_some(self.last_time)
    }
}

/// Reusable evolution state for one grid and threshold. Monte Carlo loops keep
/// one of these per worker so buffers are allocated once.
#[derive(Debug, Clone)]
pub struct Evolver {
    grid: Grid,
    r: u32,
    counts: Vec<u32>,
    times: Vec<u32>,
    frontier: Vec<usize>,
    next: Vec<usize>,
}

impl Evolver {
    pub fn new(grid: Grid, r: usize) -> Self {
        let volume = grid.volume();
        Self {
            grid,
            r: r.max(1) as u32,
            counts: vec![0; volume],
            times: vec![NEVER; volume],
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    pub fn for_params(params: &ProcessParams) -> Self {
        Self::new(params.shape.grid(), params.r)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[u32] {
        &self.times
    }

    pub fn is_infected(&self, index: usize) -> bool {
        self.times[index] != NEVER
    }

    pub fn run_set(&mut self, a0: &SiteSet) -> RunSummary {
        self.run(a0.iter())
    }

    /// Runs the dynamics from the given initially infected indices.
    pub fn run(&mut self, seeds: impl IntoIterator<Item = usize>) -> RunSummary {
        let Self {
            grid,
            r,
            counts,
            times,
            frontier,
            next,
        } = self;
        counts.fill(0);
        times.fill(NEVER);
        frontier.clear();
        for i in seeds {
            if times[i] == NEVER {
                times[i] = 0;
                frontier.push(i);
            }
        }
        let mut infected = frontier.len();
        let mut t = 0u32;
        let mut last_time = 0u32;
        while !frontier.is_empty() {
            t += 1;
            next.clear();
            for &v in frontier.iter() {
                grid.for_each_neighbor(v, |u| {
                    if times[u] == NEVER {
                        counts[u] += 1;
                        if counts[u] == *r {
                            next.push(u);
                        }
                    }
                });
            }
            for &u in next.iter() {
                times[u] = t;
            }
            if !next.is_empty() {
                last_time = t;
                infected += next.len();
            }
            std::mem::swap(frontier, next);
        }
        RunSummary {
            infected,
            volume: grid.volume(),
            last_time,
        }
    }
}

/// Per-site infection times of one trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfectionSchedule {
    shape: LatticeShape,
    times: Vec<u32>,
}

impl InfectionSchedule {
    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    /// Infection time of a site index, `None` for never.
    pub fn time(&self, index: usize) -> Option<u32> {
        let t = self.times[index];
        (t != NEVER).then_some(t)
    }

    pub fn time_of(&self, x: &Site) -> Result<Option<u32>> {
        Ok(self.time(self.shape.index_of(x)?))
    }

    pub fn raw_times(&self) -> &[u32] {
        &self.times
    }

    /// `A_t`: sites infected at or before round `t`.
    pub fn level_set(&self, t: u32) -> SiteSet {
        SiteSet::from_indices(
            self.shape,
            self.times
                .iter()
                .enumerate()
                .filter(|(_, &s)| s <= t)
                .map(|(i, _)| i),
        )
    }

    pub fn span(&self) -> SiteSet {
        self.level_set(NEVER - 1)
    }

    /// Last round in which some site was infected.
    pub fn fixation_time(&self) -> u32 {
        self.times.iter().copied().filter(|&t| t != NEVER).max().unwrap_or(0)
    }

    pub fn percolation_time(&self) -> Option<u32> {
        let mut worst = 0;
        for &t in &self.times {
            if t == NEVER {
                return None;
            }
            worst = worst.max(t);
        }
        Some(worst)
    }

    /// CSV with columns `site_index,x1..xd,time`; `site_index` is the 0-based
    /// row-major index (axis 1 fastest) and never-infected sites print
    /// `never`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.shape.d();
        let header: Vec<String> = std::iter::once("site_index".to_string())
            .chain((1..=d).map(|i| format!("x{i}")))
            .chain(std::iter::once("time".to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (i, &t) in self.times.iter().enumerate() {
            let x = self.shape.site_of(i);
            write!(out, "{i}")?;
            for c in x.coords() {
                write!(out, ",{c}")?;
            }
            if t == NEVER {
                writeln!(out, ",never")?;
            } else {
                writeln!(out, ",{t}")?;
            }
        }
        Ok(())
    }
}

fn check_shape(set: &SiteSet, params: &ProcessParams) -> Result<()> {
    if set.shape() == params.shape() {
        Ok(())
    } else {
        input(format!(
            "site set lives on {} but the process runs on {}",
            set.shape(),
            params.shape()
        ))
    }
}

/// One synchronous round: `A_i = A_{i-1} ∪ {v : |N(v) ∩ A_{i-1}| >= r}`.
pub fn evolve_step(infected: &SiteSet, params: &ProcessParams) -> Result<SiteSet> {
    check_shape(infected, params)?;
    let grid = params.shape.grid();
    let mut out = infected.clone();
    for v in 0..grid.volume() {
        if infected.contains(v) {
            continue;
        }
        let mut k = 0;
        grid.for_each_neighbor(v, |u| k += infected.contains(u) as usize);
        if k >= params.r {
            out.insert(v);
        }
    }
    Ok(out)
}

pub fn evolve_until_fixation(a0: &SiteSet, params: &ProcessParams) -> Result<InfectionSchedule> {
    check_shape(a0, params)?;
    let mut ev = Evolver::for_params(params);
    ev.run_set(a0);
    Ok(InfectionSchedule {
        shape: params.shape,
        times: ev.times,
    })
}

/// The span `[A_0]`.
pub fn span(a0: &SiteSet, params: &ProcessParams) -> Result<SiteSet> {
    Ok(evolve_until_fixation(a0, params)?.span())
}

pub fn percolation_time(a0: &SiteSet, params: &ProcessParams) -> Result<Option<u32>> {
    check_shape(a0, params)?;
    let mut ev = Evolver::for_params(params);
    Ok(ev.run_set(a0).percolation_time())
}

/// True iff `x` is still uninfected after round `t` (never counts as later).
pub fn uninfected_at(x: &Site, t: u32, schedule: &InfectionSchedule) -> Result<bool> {
    Ok(schedule.time_of(x)?.is_none_or(|s| s > t))
}

/// Classification of a cube by how much of it its own initial set spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CubeClass {
    StronglyGood,
    SemiGood,
    Bad,
}

impl CubeClass {
    pub fn is_good(self) -> bool {
        self != CubeClass::Bad
    }
}

impl fmt::Display for CubeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CubeClass::StronglyGood => "strongly_good",
            CubeClass::SemiGood => "semi_good",
            CubeClass::Bad => "bad",
        })
    }
}

/// The subcube `d` cut out of `a0`'s lattice as an open box, with the seeds
/// `a0 ∩ d` in local indices.
fn restrict(d: &Region, a0: &SiteSet) -> Result<(Grid, Vec<usize>)> {
    if !d.is_subcube() {
        return input(format!("{d} is not a subcube"));
    }
    let shape = a0.shape();
    d.check_in(shape)?;
    let dims: Vec<usize> = d.axes().iter().map(|a| a.len()).collect();
    let grid = Grid::new(dims, false);
    let n = shape.n();
    let mut seeds = Vec::new();
    for li in 0..grid.volume() {
        let mut global = 0usize;
        for axis in (0..grid.dims().len()).rev() {
            let c = d.axes()[axis].lo() as usize - 1 + grid.coord(li, axis);
            global = global * n + c;
        }
        if a0.contains(global) {
            seeds.push(li);
        }
    }
    Ok((grid, seeds))
}

/// `D ⊆ [D ∩ A_0]` with the dynamics confined to `D` (open boundary inside
/// `D`, same threshold).
pub fn is_internally_spanned(d: &Region, a0: &SiteSet, r: usize) -> Result<bool> {
    if r == 0 {
        return input("infection threshold r must be at least 1");
    }
    let (grid, seeds) = restrict(d, a0)?;
    let mut ev = Evolver::new(grid, r);
    Ok(ev.run(seeds).percolates())
}

/// Class of the cube from a finished local run on `[m]^d`.
pub(crate) fn class_of_run(ev: &Evolver, summary: &RunSummary, m: usize) -> CubeClass {
    if summary.percolates() {
        return CubeClass::StronglyGood;
    }
    let grid = ev.grid();
    let d = grid.dims().len();
    for i in 0..grid.volume() {
        if !ev.is_infected(i) && !on_cube_side((0..d).map(|a| grid.coord(i, a) + 1), m) {
            return CubeClass::Bad;
        }
    }
    CubeClass::SemiGood
}

pub fn classify_cube(d: &Region, a0: &SiteSet, r: usize) -> Result<CubeClass> {
    let m = d
        .cube_side()
        .ok_or_else(|| Error::Input(format!("{d} is not a cube")))?;
    if m < 2 {
        return input(format!("classification needs side length m >= 2 (got {m})"));
    }
    if r == 0 {
        return input("infection threshold r must be at least 1");
    }
    let (grid, seeds) = restrict(d, a0)?;
    let mut ev = Evolver::new(grid, r);
    let summary = ev.run(seeds);
    Ok(class_of_run(&ev, &summary, m))
}
