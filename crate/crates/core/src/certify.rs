//! Certificates of slow percolation and detectors for events on `[2m]^3`.

use std::fmt;

use rayon::prelude::*;

use crate::engine::{
    classify_cube, evolve_until_fixation, percolation_time, uninfected_at, CubeClass,
    ProcessParams,
};
use crate::error::{input, Error, Result};
use crate::lattice::{subcube_partition, AxisSpec, Boundary, LatticeShape, Region, Site, SiteSet};
use crate::sampler::{bernoulli_field, derive_seed};

/// An initially empty `[2t+1] x [2]^{d-1}` box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectangleCertificate {
    pub region: Region,
    pub t: usize,
}

/// The box with lower corner `corner` and long side along `axis` (0-based).
pub fn rectangle_at(corner: &Site, t: usize, axis: usize) -> Result<Region> {
    let d = corner.dim();
    if axis >= d {
        return input(format!("axis {axis} out of range for d={d}"));
    }
    let axes = corner
        .coords()
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let len = if i == axis { 2 * t as i64 + 1 } else { 2 };
            AxisSpec::Interval(c, c + len - 1)
        })
        .collect();
    Region::new(axes)
}

/// All sites except the box [`rectangle_at`]`(position, t, axis)`. The box
/// must fit without wrapping.
pub fn plant_rectangle(
    shape: &LatticeShape,
    r: usize,
    t: usize,
    position: &Site,
    axis: usize,
) -> Result<SiteSet> {
    ProcessParams::new(*shape, r)?;
    if position.dim() != shape.d() {
        return input(format!("position {position} does not match d={}", shape.d()));
    }
    let region = rectangle_at(position, t, axis)?;
    region.check_in(shape)?;
    let mut a0 = SiteSet::full(*shape);
    for x in region.sites() {
        a0.remove(shape.index_of(&x)?);
    }
    Ok(a0)
}

/// First fully uninfected box, scanning axes in order and then lower corners
/// lexicographically (x_1 most significant). Boxes never wrap.
pub fn find_empty_rectangle(a0: &SiteSet, t: usize) -> Option<RectangleCertificate> {
    let shape = a0.shape();
    let d = shape.d();
    let n = shape.n() as i64;
    for axis in 0..d {
        let span = |i: usize| if i == axis { 2 * t as i64 + 1 } else { 2 };
        if (0..d).any(|i| span(i) > n) {
            continue;
        }
        let ranges: Vec<AxisSpec> = (0..d).map(|i| AxisSpec::Interval(1, n - span(i) + 1)).collect();
        let corners = Region::new(ranges).ok()?;
        for corner in corners.sites() {
            let region = rectangle_at(&corner, t, axis).ok()?;
            if region
                .sites()
                .all(|x| !a0.contains(shape.index_of(&x).expect("box inside shape")))
            {
                return Some(RectangleCertificate { region, t });
            }
        }
    }
    None
}

/// Replays the dynamics and checks `T > cert.t`. A `false` here is a fault in
/// the certificate logic, not a property of the input.
pub fn verify_lower_certificate(
    a0: &SiteSet,
    params: &ProcessParams,
    cert: &RectangleCertificate,
) -> Result<bool> {
    let mut lens: Vec<usize> = cert.region.axes().iter().map(|a| a.len()).collect();
    lens.sort_unstable();
    let mut want = vec![2; cert.region.dim()];
    if let Some(last) = want.last_mut() {
        *last = 2 * cert.t + 1;
    }
    want.sort_unstable();
    if lens != want {
        return input(format!("{} is not a [2t+1] x [2]^(d-1) box for t={}", cert.region, cert.t));
    }
    if !a0.region_is_empty(&cert.region)? {
        return input(format!("certificate region {} is not empty", cert.region));
    }
    Ok(percolation_time(a0, params)?.is_none_or(|time| time as usize > cert.t))
}

fn check_p_set_args(d: usize, r: usize, t: usize, center: &Site, shape: &LatticeShape) -> Result<()> {
    if shape.d() != d {
        return input(format!("shape {shape} does not have d={d}"));
    }
    if r == 0 || r > d + 1 {
        return input(format!("p_set needs 1 <= r <= d+1 (got r={r}, d={d})"));
    }
    shape.check_site(center)?;
    let n = shape.n();
    match shape.boundary() {
        Boundary::Torus if n < 2 * t + 2 => {
            input(format!("ball of radius {t} wraps around on a torus of side {n}"))
        }
        Boundary::Open
            if center
                .coords()
                .iter()
                .any(|&c| c - (t as i64) < 1 || c + t as i64 > n as i64) =>
        {
            input(format!("ball of radius {t} around {center} leaves the grid"))
        }
        _ => Ok(()),
    }
}

/// Sites `center + y` with `|y|_1 <= t` and the last `r-1` offsets in `{0,1}`.
pub fn p_set(d: usize, r: usize, t: usize, center: &Site, shape: &LatticeShape) -> Result<SiteSet> {
    check_p_set_args(d, r, t, center, shape)?;
    let t = t as i64;
    let binary_from = d + 1 - r;
    let offsets: Vec<AxisSpec> = (0..d)
        .map(|i| {
            if i >= binary_from {
                AxisSpec::Interval(0, 1)
            } else {
                AxisSpec::Interval(-t, t)
            }
        })
        .collect();
    let mut set = SiteSet::empty(*shape);
    for y in Region::new(offsets)?.sites() {
        if y.coords().iter().map(|c| c.abs()).sum::<i64>() > t {
            continue;
        }
        let coords: Vec<i64> = center
            .coords()
            .iter()
            .zip(y.coords())
            .map(|(&c, &o)| shape.shift_coord(c, o).expect("checked to fit"))
            .collect();
        set.insert(shape.index_of(&Site::new(coords))?);
    }
    Ok(set)
}

/// Center of the shape, `(n+1)/2` on every axis.
pub fn shape_center(shape: &LatticeShape) -> Site {
    Site::new(vec![(shape.n() as i64 + 1) / 2; shape.d()])
}

/// Empties `p_set` around the center and checks the center is still
/// uninfected after round `t`.
pub fn verify_extremal(d: usize, r: usize, t: usize, shape: &LatticeShape) -> Result<bool> {
    let center = shape_center(shape);
    let a0 = p_set(d, r, t, &center, shape)?.complement();
    let params = ProcessParams::new(*shape, r)?;
    let schedule = evolve_until_fixation(&a0, &params)?;
    uninfected_at(&center, t as u32, &schedule)
}

/// Brute-force extremal number, see [`crate::oracle::exact_extremal`].
pub fn exhaustive_extremal_check(d: usize, r: usize, t: usize) -> Result<usize> {
    crate::oracle::exact_extremal(d, r, t)
}

/// A path `x = v_0, ..., v_t` with `v_{k+1} = v_k + e_i` and `v_k` uninfected
/// after round `t-k`. Torus only, `r = d`, `n >= 3`; the smallest usable axis
/// is taken at each step.
pub fn extract_staircase(
    a0: &SiteSet,
    x: &Site,
    t: usize,
    params: &ProcessParams,
) -> Result<Vec<Site>> {
    let shape = params.shape();
    if shape.boundary() != Boundary::Torus {
        return input("staircase extraction needs a torus");
    }
    if params.r() != shape.d() {
        return input(format!("staircase extraction needs r = d (got r={})", params.r()));
    }
    if shape.n() < 3 {
        return input("staircase extraction needs n >= 3");
    }
    let schedule = evolve_until_fixation(a0, params)?;
    if !uninfected_at(x, t as u32, &schedule)? {
        return input(format!("{x} is infected by round {t}"));
    }
    let mut path = vec![x.clone()];
    for k in 0..t {
        let cur = &path[k];
        let deadline = (t - k - 1) as u32;
        let next = (0..shape.d())
            .map(|axis| {
                let mut c = cur.clone();
                c.0[axis] = shape.shift_coord(c.0[axis], 1).expect("torus wraps");
                c
            })
            .find(|v| schedule.time_of(v).map(|s| s.is_none_or(|s| s > deadline)).unwrap_or(false));
        match next {
            Some(v) => path.push(v),
            None => {
                return Err(Error::Internal(format!(
                    "no uninfected up-neighbor of {cur} at round {deadline}"
                )))
            }
        }
    }
    Ok(path)
}

/// One coordinate slot of a segment event on `[2m]^3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// The two middle layers `m` and `m+1`.
    Seam,
    Fixed(i64),
    Interval(i64, i64),
}

impl Slot {
    fn specs(self, m: i64) -> Vec<AxisSpec> {
        match self {
            Slot::Seam => vec![AxisSpec::Fixed(m), AxisSpec::Fixed(m + 1)],
            Slot::Fixed(a) => vec![AxisSpec::Fixed(a)],
            Slot::Interval(a, b) => vec![AxisSpec::Interval(a, b)],
        }
    }
}

/// `B(s1,s2,s3)`: at least one of the segments obtained by resolving each seam
/// slot to `m` or `m+1` contains an initially infected site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentEvent(pub [Slot; 3]);

impl SegmentEvent {
    pub fn segments(&self, m: usize) -> Vec<Region> {
        let m = m as i64;
        let [a, b, c] = self.0.map(|s| s.specs(m));
        let mut out = Vec::new();
        for &x in &a {
            for &y in &b {
                for &z in &c {
                    out.push(Region::new(vec![x, y, z]).expect("nonempty slots"));
                }
            }
        }
        out
    }

    pub fn occurs(&self, m: usize, a0: &SiteSet) -> Result<bool> {
        for seg in self.segments(m) {
            if !a0.region_is_empty(&seg)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn label(&self, m: usize) -> String {
        SegmentLabel(self, m).to_string()
    }
}

struct SegmentLabel<'a>(&'a SegmentEvent, usize);

impl fmt::Display for SegmentLabel<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.1;
        f.write_str("B(")?;
        for (i, s) in self.0 .0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match s {
                Slot::Seam => write!(f, "{{{m},{}}}", m + 1)?,
                Slot::Fixed(a) => write!(f, "{a}")?,
                Slot::Interval(a, b) => write!(f, "({a},{b})")?,
            }
        }
        f.write_str(")")
    }
}

/// The segment events making up `B_1, ..., B_10`, each as a conjunction.
pub fn b_families(m: usize) -> [Vec<SegmentEvent>; 10] {
    use Slot::{Fixed as F, Interval as I, Seam as S};
    let m = m as i64;
    let full = I(1, 2 * m);
    let upper = I(m + 1, 2 * m);
    let lower = I(1, m);
    let ends = [2 * m, m + 1, m, 1];
    let top = [2 * m, m + 1];
    let ev = SegmentEvent;
    [
        ends.iter().map(|&a| ev([S, full, F(a)])).collect(),
        ends.iter().map(|&a| ev([full, S, F(a)])).collect(),
        vec![ev([S, S, upper]), ev([S, S, lower])],
        vec![ev([S, F(1), full]), ev([full, F(1), S])],
        vec![ev([F(2 * m), S, full]), ev([F(2 * m), full, S])],
        vec![ev([full, F(2 * m), S]), ev([S, F(2 * m), full])],
        vec![ev([F(1), S, full]), ev([F(1), full, S])],
        top.iter()
            .flat_map(|&a| [ev([S, F(a), full]), ev([full, F(a), S])])
            .chain([ev([S, upper, S])])
            .collect(),
        top.iter()
            .flat_map(|&a| [ev([F(a), S, full]), ev([F(a), full, S])])
            .chain([ev([upper, S, S])])
            .collect(),
        top.iter()
            .flat_map(|&a| [ev([S, full, F(a)]), ev([full, S, F(a)])])
            .chain([ev([S, S, upper])])
            .collect(),
    ]
}

/// Pairs of regions that must both be nonempty for `D(x=1)`, `D(y=1)` and
/// `D(z=1)`.
pub fn d_regions(m: usize) -> [[Region; 2]; 3] {
    use AxisSpec::{Fixed as F, Interval as I};
    let m = m as i64;
    let r = |a, b, c| Region::new(vec![a, b, c]).expect("nonempty axes");
    [
        [r(F(1), I(1, m), F(m)), r(F(1), F(m), I(1, m))],
        [r(I(1, m), F(1), F(m)), r(F(m), F(1), I(1, m))],
        [r(I(1, m), F(m), F(1)), r(F(m), I(1, m), F(1))],
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeamEventReport {
    pub m: usize,
    /// Every distinct segment event used by the families, with its flag, in
    /// first-use order.
    pub primitives: Vec<(String, bool)>,
    pub b: [bool; 10],
    /// Conjunction of `b[0..7]`.
    pub b_all: bool,
    pub d_x1: bool,
    pub d_y1: bool,
    pub d_z1: bool,
    pub classes: [CubeClass; 8],
    pub a: bool,
    pub a1: bool,
    pub a2: bool,
    pub e: bool,
}

pub fn seam_events_d3(m: usize, a0: &SiteSet) -> Result<SeamEventReport> {
    let shape = a0.shape();
    if m < 2 {
        return input(format!("seam events need m >= 2 (got {m})"));
    }
    if shape.d() != 3 || shape.n() != 2 * m || shape.boundary() != Boundary::Open {
        return input(format!("seam events live on the open grid [{}]^3, got {shape}", 2 * m));
    }
    let mut primitives: Vec<(String, bool)> = Vec::new();
    let mut b = [false; 10];
    for (i, family) in b_families(m).iter().enumerate() {
        let mut all = true;
        for ev in family {
            let label = ev.label(m);
            let flag = match primitives.iter().find(|(l, _)| *l == label) {
                Some(&(_, f)) => f,
                None => {
                    let f = ev.occurs(m, a0)?;
                    primitives.push((label, f));
                    f
                }
            };
            all &= flag;
        }
        b[i] = all;
    }
    let mut d_flags = [false; 3];
    for (flag, pair) in d_flags.iter_mut().zip(d_regions(m)) {
        *flag = !a0.region_is_empty(&pair[0])? && !a0.region_is_empty(&pair[1])?;
    }
    let mut classes = [CubeClass::Bad; 8];
    for (c, cube) in classes.iter_mut().zip(subcube_partition(m, 3)?) {
        *c = classify_cube(&cube, a0, 3)?;
    }
    let bad = classes.iter().filter(|c| !c.is_good()).count();
    let whole = Region::cube(&[1, 1, 1], 2 * m);
    Ok(SeamEventReport {
        m,
        primitives,
        b,
        b_all: b[..7].iter().all(|&x| x),
        d_x1: d_flags[0],
        d_y1: d_flags[1],
        d_z1: d_flags[2],
        classes,
        a: bad == 0,
        a1: bad == 1,
        a2: bad == 2,
        e: classify_cube(&whole, a0, 3)?.is_good(),
    })
}

/// One audited configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditRow {
    pub trial: usize,
    pub trial_seed: u64,
    pub a: bool,
    pub b: bool,
    pub e: bool,
}

impl AuditRow {
    pub fn is_counterexample(&self) -> bool {
        self.a && self.b && !self.e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOutcome {
    pub m: usize,
    pub p: f64,
    pub rows: Vec<AuditRow>,
    /// Initial sets of every counterexample, with their trial index.
    pub counterexamples: Vec<(usize, SiteSet)>,
}

impl AuditOutcome {
    pub fn count(&self) -> usize {
        self.counterexamples.len()
    }
}

/// Samples Bernoulli(p) fields on `[2m]^3` and collects those where all
/// eight subcubes are good and `B` holds but the whole cube is bad.
pub fn audit_lemma_ab(m: usize, p: f64, trials: usize, seed: u64) -> Result<AuditOutcome> {
    if m < 3 {
        return input(format!("audit needs m >= 3 (got {m})"));
    }
    let shape = LatticeShape::open(3, 2 * m)?;
    let results: Vec<(AuditRow, Option<SiteSet>)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = derive_seed(seed, trial as u64);
            let a0 = bernoulli_field(&shape, p, trial_seed)?;
            let rep = seam_events_d3(m, &a0)?;
            let row = AuditRow {
                trial,
                trial_seed,
                a: rep.a,
                b: rep.b_all,
                e: rep.e,
            };
            Ok((row, row.is_counterexample().then_some(a0)))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(trials);
    let mut counterexamples = Vec::new();
    for (row, witness) in results {
        if let Some(a0) = witness {
            counterexamples.push((row.trial, a0));
        }
        rows.push(row);
    }
    Ok(AuditOutcome {
        m,
        p,
        rows,
        counterexamples,
    })
}
