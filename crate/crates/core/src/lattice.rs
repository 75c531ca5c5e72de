//! Lattice geometry and region algebra.
//!
//! Sites use 1-based coordinates everywhere in the public surface. Internally
//! a site of a [`LatticeShape`] is addressed by its row-major index with axis 1
//! varying fastest, so `(x_1, ..., x_d)` maps to
//! `(x_1 - 1) + n (x_2 - 1) + ... + n^{d-1} (x_d - 1)`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;

use crate::error::{input, Error, Result};

/// Largest vertex count a shape may have; schedules store times as `u32`.
pub const MAX_VERTICES: usize = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Boundary {
    Torus,
    Open,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Torus => f.write_str("torus"),
            Boundary::Open => f.write_str("open"),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "torus" => Ok(Boundary::Torus),
            "open" | "grid" => Ok(Boundary::Open),
            other => input(format!("unknown boundary '{other}' (expected torus or open)")),
        }
    }
}

/// `[n]^d` with either periodic (torus) or open (grid graph) boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeShape {
    d: usize,
    n: usize,
    boundary: Boundary,
}

impl LatticeShape {
    pub fn new(d: usize, n: usize, boundary: Boundary) -> Result<Self> {
        if d == 0 || n == 0 {
            return input(format!("shape needs d >= 1 and n >= 1 (got d={d}, n={n})"));
        }
        match checked_volume(&vec![n; d]) {
            Some(_) => Ok(Self { d, n, boundary }),
            None => input(format!("n^d = {n}^{d} exceeds the site index space")),
        }
    }

    pub fn torus(d: usize, n: usize) -> Result<Self> {
        Self::new(d, n, Boundary::Torus)
    }

    pub fn open(d: usize, n: usize) -> Result<Self> {
        Self::new(d, n, Boundary::Open)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn volume(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn contains(&self, x: &Site) -> bool {
        x.dim() == self.d && x.0.iter().all(|&c| c >= 1 && c as usize <= self.n)
    }

    pub fn check_site(&self, x: &Site) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            input(format!("site {x} is not a vertex of [{}]^{}", self.n, self.d))
        }
    }

    pub fn index_of(&self, x: &Site) -> Result<usize> {
        self.check_site(x)?;
        Ok(self.index_unchecked(x))
    }

    pub(crate) fn index_unchecked(&self, x: &Site) -> usize {
        x.0.iter()
            .rev()
            .fold(0usize, |acc, &c| acc * self.n + (c as usize - 1))
    }

    pub fn site_of(&self, mut index: usize) -> Site {
        let mut coords = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            coords.push((index % self.n) as i64 + 1);
            index /= self.n;
        }
        Site(coords)
    }

    pub fn grid(&self) -> Grid {
        Grid::new(vec![self.n; self.d], self.boundary == Boundary::Torus)
    }

    /// Distinct neighbors of `x`; parallel edges from wraparound at `n <= 2`
    /// are collapsed and a site is never its own neighbor.
    pub fn neighbors(&self, x: &Site) -> Result<Vec<Site>> {
        let idx = self.index_of(x)?;
        let mut out = Vec::with_capacity(2 * self.d);
        self.grid().for_each_neighbor(idx, |j| out.push(self.site_of(j)));
        Ok(out)
    }

    /// Per-coordinate distance, wrapped on the torus.
    pub fn axis_distance(&self, a: i64, b: i64) -> i64 {
        let delta = (a - b).abs();
        match self.boundary {
            Boundary::Torus => delta.min(self.n as i64 - delta),
            Boundary::Open => delta,
        }
    }

    pub fn l1_distance(&self, x: &Site, y: &Site) -> i64 {
        x.0.iter()
            .zip(&y.0)
            .map(|(&a, &b)| self.axis_distance(a, b))
            .sum()
    }

    /// Coordinate `c + step` wrapped into `[1, n]` on the torus, or `None`
    /// when it leaves an open grid.
    pub fn shift_coord(&self, c: i64, step: i64) -> Option<i64> {
        let n = self.n as i64;
        let moved = c + step;
        match self.boundary {
            Boundary::Torus => Some((moved - 1).rem_euclid(n) + 1),
            Boundary::Open => (1..=n).contains(&moved).then_some(moved),
        }
    }
}

impl fmt::Display for LatticeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]^{} ({})", self.n, self.d, self.boundary)
    }
}

fn checked_volume(dims: &[usize]) -> Option<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &k| acc.checked_mul(k))
        .filter(|&v| v <= MAX_VERTICES)
}

/// Index-level view of a box lattice with per-axis extents. This is what the
/// evolution engine iterates over; boxes that are not cubes (internal spanning
/// of rectangles) use it directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    dims: Vec<usize>,
    strides: Vec<usize>,
    torus: bool,
    volume: usize,
}

impl Grid {
    pub fn new(dims: Vec<usize>, torus: bool) -> Self {
        let mut strides = Vec::with_capacity(dims.len());
        let mut acc = 1usize;
        for &k in &dims {
            strides.push(acc);
            acc *= k;
        }
        Self {
            dims,
            strides,
            torus,
            volume: acc,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn volume(&self) -> usize {
        self.volume
    }

    pub fn is_torus(&self) -> bool {
        self.torus
    }

    /// Zero-based coordinate of `index` along `axis`.
    #[inline]
    pub fn coord(&self, index: usize, axis: usize) -> usize {
        (index / self.strides[axis]) % self.dims[axis]
    }

    #[inline]
    pub fn for_each_neighbor(&self, index: usize, mut f: impl FnMut(usize)) {
        for (axis, (&k, &stride)) in self.dims.iter().zip(&self.strides).enumerate() {
            if k == 1 {
                continue;
            }
            let c = self.coord(index, axis);
            let up = if c + 1 < k {
                Some(index + stride)
            } else if self.torus {
                Some(index - c * stride)
            } else {
                None
            };
            let down = if c > 0 {
                Some(index - stride)
            } else if self.torus {
                Some(index + (k - 1) * stride)
            } else {
                None
            };
            if let Some(j) = up {
                f(j);
            }
            if let Some(j) = down {
                if Some(j) != up {
                    f(j);
                }
            }
        }
    }

    /// Index of the neighbor one step in the positive direction of `axis`.
    #[inline]
    pub fn step_up(&self, index: usize, axis: usize) -> Option<usize> {
        let k = self.dims[axis];
        let c = self.coord(index, axis);
        if c + 1 < k {
            Some(index + self.strides[axis])
        } else if self.torus && k > 1 {
            Some(index - c * self.strides[axis])
        } else {
            None
        }
    }
}

/// A vertex given by 1-based coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(pub Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Site(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().join(","))
    }
}

impl FromStr for Site {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let inner = compact
            .strip_prefix('(')
            .and_then(|rest| rest.strip_suffix(')'))
            .ok_or_else(|| Error::Input(format!("site '{s}' must look like (x1,...,xd)")))?;
        let coords = inner
            .split(',')
            .map(|tok| {
                tok.parse::<i64>()
                    .map_err(|_| Error::Input(format!("bad coordinate '{tok}' in site '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Site(coords))
    }
}

/// One axis of a [`Region`]: a fixed coordinate or a closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxisSpec {
    Fixed(i64),
    Interval(i64, i64),
}

impl AxisSpec {
    pub fn lo(&self) -> i64 {
        match *self {
            AxisSpec::Fixed(a) | AxisSpec::Interval(a, _) => a,
        }
    }

    pub fn hi(&self) -> i64 {
        match *self {
            AxisSpec::Fixed(a) | AxisSpec::Interval(_, a) => a,
        }
    }

    pub fn len(&self) -> usize {
        (self.hi() - self.lo() + 1).max(0) as usize
    }

    pub fn is_interval(&self) -> bool {
        matches!(self, AxisSpec::Interval(..))
    }

    pub fn contains(&self, c: i64) -> bool {
        self.lo() <= c && c <= self.hi()
    }
}

impl fmt::Display for AxisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisSpec::Fixed(a) => write!(f, "({a})"),
            AxisSpec::Interval(a, b) => write!(f, "({a},{b})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Subcube,
    SubGrid,
    LineSegment,
    Other,
}

/// Axis-aligned generalized box `[(a_1,b_1),(a_2),...]`. Regions never wrap
/// around the torus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    axes: Vec<AxisSpec>,
}

impl Region {
    /// Builds a region, rejecting empty intervals. Bounds are not checked
    /// against any shape here (buffers may poke one layer outside a cube);
    /// use [`Region::check_in`] for that.
    pub fn new(axes: Vec<AxisSpec>) -> Result<Self> {
        if axes.is_empty() {
            return input("region needs at least one axis");
        }
        for spec in &axes {
            if let AxisSpec::Interval(a, b) = *spec {
                if a > b {
                    return input(format!("interval ({a},{b}) is empty"));
                }
            }
        }
        Ok(Self { axes })
    }

    /// The box `[(lo,lo+m-1)]^d`.
    pub fn cube(lo: &[i64], m: usize) -> Self {
        let m = m as i64;
        Self {
            axes: lo.iter().map(|&a| AxisSpec::Interval(a, a + m - 1)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }

    pub fn volume(&self) -> usize {
        self.axes.iter().map(AxisSpec::len).product()
    }

    pub fn contains(&self, x: &Site) -> bool {
        x.dim() == self.dim() && self.axes.iter().zip(&x.0).all(|(s, &c)| s.contains(c))
    }

    pub fn kind(&self) -> RegionKind {
        let fixed = self.axes.iter().filter(|s| !s.is_interval()).count();
        let d = self.dim();
        if fixed == 0 {
            RegionKind::Subcube
        } else if fixed == 1 && d >= 2 {
            RegionKind::SubGrid
        } else if fixed + 1 == d {
            RegionKind::LineSegment
        } else {
            RegionKind::Other
        }
    }

    pub fn is_subcube(&self) -> bool {
        self.axes.iter().all(AxisSpec::is_interval)
    }

    /// Side length when the region is a subcube with equal extents.
    pub fn cube_side(&self) -> Option<usize> {
        if !self.is_subcube() {
            return None;
        }
        let m = self.axes[0].len();
        self.axes.iter().all(|s| s.len() == m).then_some(m)
    }

    pub fn check_in(&self, shape: &LatticeShape) -> Result<()> {
        if self.dim() != shape.d() {
            return input(format!(
                "region {self} has {} axes but the shape has d={}",
                self.dim(),
                shape.d()
            ));
        }
        let n = shape.n() as i64;
        if self.axes.iter().any(|s| s.lo() < 1 || s.hi() > n) {
            return input(format!("region {self} leaves [{n}]^{}", shape.d()));
        }
        Ok(())
    }

    /// Sites of the region in lexicographic order (x_1 most significant).
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.axes
            .iter()
            .map(|s| s.lo()..=s.hi())
            .multi_cartesian_product()
            .map(Site)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.axes.iter().join(","))
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let inner = compact
            .strip_prefix('[')
            .and_then(|rest| rest.strip_suffix(']'))
            .ok_or_else(|| Error::Input(format!("region '{s}' must be bracketed")))?;
        let mut axes = Vec::new();
        let mut rest = inner;
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::Input(format!("expected '(' in region '{s}'")))?;
            let close = body
                .find(')')
                .ok_or_else(|| Error::Input(format!("unbalanced parenthesis in region '{s}'")))?;
            let nums = body[..close]
                .split(',')
                .map(|t| {
                    t.parse::<i64>()
                        .map_err(|_| Error::Input(format!("bad number '{t}' in region '{s}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            axes.push(match nums.as_slice() {
                [a] => AxisSpec::Fixed(*a),
                [a, b] => AxisSpec::Interval(*a, *b),
                _ => return input(format!("axis spec must hold one or two numbers in '{s}'")),
            });
            rest = &body[close + 1..];
            if let Some(after) = rest.strip_prefix(',') {
                if after.is_empty() {
                    return input(format!("trailing comma in region '{s}'"));
                }
                rest = after;
            } else if !rest.is_empty() {
                return input(format!("expected ',' between axes in region '{s}'"));
            }
        }
        Region::new(axes)
    }
}

/// Sites of `r` in lexicographic order after checking it lies in `shape`.
pub fn enumerate_region(r: &Region, shape: &LatticeShape) -> Result<Vec<Site>> {
    r.check_in(shape)?;
    Ok(r.sites().collect())
}

/// The sides of a cube region: line segments that run the full length of the
/// cube along one axis with every other coordinate at one of the two extremes.
pub fn cube_sides(cube: &Region) -> Result<Vec<Region>> {
    let m = cube
        .cube_side()
        .ok_or_else(|| Error::Input(format!("{cube} is not a cube")))?;
    if m < 2 {
        return input("sides need a cube of side length at least 2");
    }
    let d = cube.dim();
    let mut out = BTreeSet::new();
    for j in 0..d {
        for corner in (0..d - 1).map(|_| [false, true]).multi_cartesian_product() {
            let mut picks = corner.into_iter();
            let axes = (0..d)
                .map(|i| {
                    let spec = cube.axes[i];
                    if i == j {
                        spec
                    } else if picks.next().unwrap_or(false) {
                        AxisSpec::Fixed(spec.hi())
                    } else {
                        AxisSpec::Fixed(spec.lo())
                    }
                })
                .collect();
            out.insert(Region { axes });
        }
    }
    // Canonical order: by interval axis, then by the fixed corner.
    let mut sides: Vec<Region> = out.into_iter().collect();
    sides.sort_by_key(|r| (r.axes.iter().position(AxisSpec::is_interval), r.clone()));
    Ok(sides)
}

/// All `2^{d-1} d` sides of `[m]^d`.
pub fn sides(m: usize, d: usize) -> Result<Vec<Region>> {
    if m < 2 {
        return input(format!("sides need m >= 2 (got m={m})"));
    }
    if d == 0 {
        return input("sides need d >= 1");
    }
    cube_sides(&Region::cube(&vec![1; d], m))
}

/// Whether the 1-based cube-local coordinate vector lies on a side of
/// `[m]^d`: at most one coordinate strictly between 1 and m.
pub(crate) fn on_cube_side(local: impl IntoIterator<Item = usize>, m: usize) -> bool {
    local
        .into_iter()
        .filter(|&c| c != 1 && c != m)
        .count()
        <= 1
}

/// `[m]^d` minus the union of its sides, as a set on the open grid `[m]^d`.
pub fn interior(m: usize, d: usize) -> Result<SiteSet> {
    if d < 2 {
        return input(format!("interior needs d >= 2 (got d={d})"));
    }
    let shape = LatticeShape::open(d, m)?;
    let mut set = SiteSet::full(shape);
    for side in sides(m, d)? {
        for x in side.sites() {
            set.remove(shape.index_unchecked(&x));
        }
    }
    Ok(set)
}

/// Orbit of a region under coordinate permutations, each axis spec moving as
/// a unit. Sorted and deduplicated.
pub fn perm_orbit(r: &Region) -> Vec<Region> {
    let d = r.dim();
    let orbit: BTreeSet<Region> = (0..d)
        .permutations(d)
        .map(|sigma| Region {
            axes: sigma.iter().map(|&i| r.axes[i]).collect(),
        })
        .collect();
    orbit.into_iter().collect()
}

/// The l1 ball of radius `t` around `center`, with wrapped distances on the
/// torus.
pub fn ball(t: usize, center: &Site, shape: &LatticeShape) -> Result<SiteSet> {
    shape.check_site(center)?;
    let t = t as i64;
    let mut set = SiteSet::empty(*shape);
    for idx in 0..shape.volume() {
        if shape.l1_distance(&shape.site_of(idx), center) <= t {
            set.insert(idx);
        }
    }
    Ok(set)
}

/// Buffers of a cube for one of its sides: for each fixed axis of the side, a
/// `2 x (m-2)` rectangle made of the side's inner stretch and the parallel
/// stretch in the layer just outside the cube along that axis.
pub fn buffers(cube: &Region, side: &Region) -> Result<Vec<Region>> {
    let m = cube
        .cube_side()
        .ok_or_else(|| Error::Input(format!("{cube} is not a cube")))?;
    if m < 3 {
        return input(format!("buffers need a cube of side >= 3 (got {m})"));
    }
    if side.dim() != cube.dim() {
        return input("side and cube differ in dimension");
    }
    let long: Vec<usize> = (0..side.dim())
        .filter(|&i| side.axes[i].is_interval())
        .collect();
    let [j] = long[..] else {
        return input(format!("{side} is not a line segment"));
    };
    let is_side = side.axes.iter().zip(&cube.axes).enumerate().all(|(i, (s, c))| {
        if i == j {
            s == c
        } else {
            let a = s.lo();
            a == c.lo() || a == c.hi()
        }
    });
    if !is_side {
        return input(format!("{side} is not a side of {cube}"));
    }
    let inner = AxisSpec::Interval(side.axes[j].lo() + 1, side.axes[j].hi() - 1);
    Ok((0..cube.dim())
        .filter(|&k| k != j)
        .map(|k| {
            let axes = (0..cube.dim())
                .map(|i| {
                    if i == j {
                        inner
                    } else if i == k {
                        let a = side.axes[k].lo();
                        if a == cube.axes[k].lo() {
                            AxisSpec::Interval(a - 1, a)
                        } else {
                            AxisSpec::Interval(a, a + 1)
                        }
                    } else {
                        side.axes[i]
                    }
                })
                .collect();
            Region { axes }
        })
        .collect())
}

/// The `2^d` subcubes of `[2m]^d` with lower corners in `{1, m+1}^d`, in
/// binary order of the corner vector with axis 1 as the least significant
/// bit (`C_1 = [(1,m),...]`, `C_2 = [(m+1,2m),(1,m),...]`, ...).
pub fn subcube_partition(m: usize, d: usize) -> Result<Vec<Region>> {
    if m == 0 || d == 0 {
        return input("subcube partition needs m >= 1 and d >= 1");
    }
    let m = m as i64;
    Ok((0..1usize << d)
        .map(|code| {
            let lo: Vec<i64> = (0..d)
                .map(|i| if code >> i & 1 == 1 { m + 1 } else { 1 })
                .collect();
            Region::cube(&lo, m as usize)
        })
        .collect())
}

/// Dense membership bitmap over the sites of a shape.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SiteSet {
    shape: LatticeShape,
    words: Vec<u64>,
}

impl SiteSet {
    pub fn empty(shape: LatticeShape) -> Self {
        let words = vec![0; shape.volume().div_ceil(64)];
        Self { shape, words }
    }

    pub fn full(shape: LatticeShape) -> Self {
        let mut set = Self::empty(shape);
        for w in &mut set.words {
            *w = !0;
        }
        set.trim();
        set
    }

    pub fn from_indices(shape: LatticeShape, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut set = Self::empty(shape);
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn from_sites<'a>(
        shape: LatticeShape,
        sites: impl IntoIterator<Item = &'a Site>,
    ) -> Result<Self> {
        let mut set = Self::empty(shape);
        for x in sites {
            set.insert(shape.index_of(x)?);
        }
        Ok(set)
    }

    /// Set whose membership is the low `volume` bits of `mask`.
    pub fn from_mask(shape: LatticeShape, mask: u64) -> Self {
        let mut set = Self::empty(shape);
        if let Some(w) = set.words.first_mut() {
            *w = mask;
        }
        set.trim();
        set
    }

    fn trim(&mut self) {
        let rem = self.shape.volume() % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn contains(&self, index: usize) -> bool {
        self.words[index / 64] >> (index % 64) & 1 == 1
    }

    pub fn contains_site(&self, x: &Site) -> bool {
        self.shape.contains(x) && self.contains(self.shape.index_unchecked(x))
    }

    #[inline]
    pub fn insert(&mut self, index: usize) {
        self.words[index / 64] |= 1 << (index % 64);
    }

    #[inline]
    pub fn remove(&mut self, index: usize) {
        self.words[index / 64] &= !(1 << (index % 64));
    }

    pub fn set(&mut self, index: usize, value: bool) {
        if value {
            self.insert(index)
        } else {
            self.remove(index)
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.shape.volume()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.iter().map(|i| self.shape.site_of(i))
    }

    fn check_same(&self, other: &SiteSet) -> Result<()> {
        if self.shape == other.shape {
            Ok(())
        } else {
            input(format!(
                "site sets live on different shapes ({} vs {})",
                self.shape, other.shape
            ))
        }
    }

    pub fn union(&self, other: &SiteSet) -> Result<SiteSet> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |a, b| a | b))
    }

    pub fn intersection(&self, other: &SiteSet) -> Result<SiteSet> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |a, b| a & b))
    }

    pub fn difference(&self, other: &SiteSet) -> Result<SiteSet> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |a, b| a & !b))
    }

    pub fn complement(&self) -> SiteSet {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        out.trim();
        out
    }

    pub fn is_subset(&self, other: &SiteSet) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0))
    }

    fn zip_with(&self, other: &SiteSet, f: impl Fn(u64, u64) -> u64) -> SiteSet {
        SiteSet {
            shape: self.shape,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Whether every site of `r` is absent from the set ("empty" region).
    pub fn region_is_empty(&self, r: &Region) -> Result<bool> {
        r.check_in(&self.shape)?;
        Ok(!r.sites().any(|x| self.contains(self.shape.index_unchecked(&x))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(coords: &[i64]) -> Site {
        Site::new(coords)
    }

    fn sorted(mut v: Vec<Site>) -> Vec<Site> {
        v.sort();
        v
    }

    #[test]
    fn torus_and_open_neighbors() {
        let torus = LatticeShape::torus(2, 4).unwrap();
        assert_eq!(
            sorted(torus.neighbors(&s(&[1, 1])).unwrap()),
            sorted(vec![s(&[2, 1]), s(&[4, 1]), s(&[1, 2]), s(&[1, 4])])
        );
        let open = LatticeShape::open(2, 3).unwrap();
        assert_eq!(
            sorted(open.neighbors(&s(&[1, 1])).unwrap()),
            vec![s(&[1, 2]), s(&[2, 1])]
        );
    }

    #[test]
    fn tiny_torus_collapses_parallel_edges() {
        let shape = LatticeShape::torus(1, 2).unwrap();
        // Brute force: every y with wrapped distance exactly 1.
        let expected: Vec<Site> = (1..=2)
            .map(|y| s(&[y]))
            .filter(|y| shape.l1_distance(y, &s(&[1])) == 1)
            .collect();
        assert_eq!(shape.neighbors(&s(&[1])).unwrap(), expected);
        assert_eq!(expected, vec![s(&[2])]);
        let single = LatticeShape::torus(2, 1).unwrap();
        assert!(single.neighbors(&s(&[1, 1])).unwrap().is_empty());
    }

    #[test]
    fn neighbors_rejects_invalid_site() {
        let shape = LatticeShape::open(2, 3).unwrap();
        assert!(shape.neighbors(&s(&[0, 1])).is_err());
        assert!(shape.neighbors(&s(&[1, 1, 1])).is_err());
    }

    #[test]
    fn neighbor_degree_ranges() {
        for d in 1..=3 {
            for n in 1..=5 {
                let open = LatticeShape::open(d, n).unwrap();
                let torus = LatticeShape::torus(d, n).unwrap();
                for i in 0..open.volume() {
                    let x = open.site_of(i);
                    let k = open.neighbors(&x).unwrap().len();
                    if n >= 2 {
                        assert!(k >= d && k <= 2 * d);
                    }
                    let kt = torus.neighbors(&x).unwrap().len();
                    if n >= 3 {
                        assert_eq!(kt, 2 * d);
                    }
                }
            }
        }
    }

    #[test]
    fn index_roundtrip_axis_one_fastest() {
        let shape = LatticeShape::open(3, 4).unwrap();
        assert_eq!(shape.index_of(&s(&[2, 1, 1])).unwrap(), 1);
        assert_eq!(shape.index_of(&s(&[1, 2, 1])).unwrap(), 4);
        assert_eq!(shape.index_of(&s(&[1, 1, 2])).unwrap(), 16);
        for i in 0..shape.volume() {
            assert_eq!(shape.index_of(&shape.site_of(i)).unwrap(), i);
        }
    }

    #[test]
    fn region_enumeration() {
        let shape = LatticeShape::open(2, 3).unwrap();
        let r: Region = "[(1,3),(2)]".parse().unwrap();
        assert_eq!(
            enumerate_region(&r, &shape).unwrap(),
            vec![s(&[1, 2]), s(&[2, 2]), s(&[3, 2])]
        );
        let r: Region = "[(2),(2)]".parse().unwrap();
        assert_eq!(enumerate_region(&r, &shape).unwrap(), vec![s(&[2, 2])]);
        let r: Region = "[(1,2),(1,2)]".parse().unwrap();
        assert_eq!(enumerate_region(&r, &shape).unwrap().len(), 4);
        let r: Region = "[(1,4),(1)]".parse().unwrap();
        assert!(enumerate_region(&r, &shape).is_err());
    }

    #[test]
    fn region_syntax() {
        let r: Region = " [ (1, 5),(3) ,(2,4)] ".parse().unwrap();
        assert_eq!(
            r.axes(),
            &[
                AxisSpec::Interval(1, 5),
                AxisSpec::Fixed(3),
                AxisSpec::Interval(2, 4)
            ]
        );
        assert_eq!(r.to_string(), "[(1,5),(3),(2,4)]");
        assert_eq!(r.kind(), RegionKind::SubGrid);
        for bad in ["(1,2)", "[(1,2,3)]", "[(3,1)]", "[(1),]", "[(1)(2)]", "[(a)]"] {
            assert!(bad.parse::<Region>().is_err(), "{bad}");
        }
        let x: Site = "( 1, 2 ,3)".parse().unwrap();
        assert_eq!(x, s(&[1, 2, 3]));
        assert!("1,2".parse::<Site>().is_err());
    }

    #[test]
    fn region_kinds() {
        let k = |t: &str| t.parse::<Region>().unwrap().kind();
        assert_eq!(k("[(1,2),(1,2),(1,2)]"), RegionKind::Subcube);
        assert_eq!(k("[(1,2),(3),(1,2)]"), RegionKind::SubGrid);
        assert_eq!(k("[(1),(3),(1,2)]"), RegionKind::LineSegment);
        assert_eq!(k("[(1),(3),(1),(1,2)]"), RegionKind::LineSegment);
    }

    #[test]
    fn side_counts() {
        assert_eq!(sides(3, 2).unwrap().len(), 4);
        assert_eq!(sides(3, 3).unwrap().len(), 12);
        for d in 1..=5 {
            for m in 2..=5 {
                assert_eq!(sides(m, d).unwrap().len(), (1 << (d - 1)) * d);
            }
        }
        assert!(sides(1, 2).is_err());
    }

    #[test]
    fn sides_of_square() {
        let got: BTreeSet<String> = sides(4, 2).unwrap().iter().map(|r| r.to_string()).collect();
        let want: BTreeSet<String> = ["[(1),(1,4)]", "[(4),(1,4)]", "[(1,4),(1)]", "[(1,4),(4)]"]
            .into_iter()
            .map(String::from)
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn interior_examples() {
        let i = interior(3, 2).unwrap();
        assert_eq!(i.len(), 1);
        assert!(i.contains_site(&s(&[2, 2])));
        assert_eq!(interior(4, 3).unwrap().len(), 32);
        assert!(interior(2, 3).unwrap().is_empty());
    }

    #[test]
    fn interior_closed_forms_and_partition() {
        for m in 2..=7usize {
            let mi = m as i64;
            assert_eq!(interior(m, 2).unwrap().len() as i64, (mi - 2) * (mi - 2));
            assert_eq!(interior(m, 3).unwrap().len() as i64, mi.pow(3) - 12 * mi + 16);
        }
        for d in 2..=4 {
            for m in 2..=5 {
                let int = interior(m, d).unwrap();
                let shape = *int.shape();
                let mut side_union = SiteSet::empty(shape);
                for side in sides(m, d).unwrap() {
                    for x in side.sites() {
                        side_union.insert(shape.index_of(&x).unwrap());
                    }
                }
                assert!(int.intersection(&side_union).unwrap().is_empty());
                assert!(int.union(&side_union).unwrap().is_full());
                // Counting characterization: on a side iff at most one
                // coordinate is strictly inside.
                for idx in 0..shape.volume() {
                    let x = shape.site_of(idx);
                    let on = on_cube_side(x.0.iter().map(|&c| c as usize), m);
                    assert_eq!(on, side_union.contains(idx));
                }
            }
        }
    }

    #[test]
    fn perm_orbit_examples() {
        let r = |t: &str| t.parse::<Region>().unwrap();
        assert_eq!(perm_orbit(&r("[(1),(1)]")).len(), 1);
        let orbit = perm_orbit(&r("[(1),(1,5)]"));
        assert_eq!(orbit, vec![r("[(1),(1,5)]"), r("[(1,5),(1)]")]);
        assert_eq!(perm_orbit(&r("[(1),(2),(1,5)]")).len(), 6);
        assert_eq!(perm_orbit(&r("[(1),(1),(1,5)]")).len(), 3);
        assert_eq!(perm_orbit(&r("[(2),(2),(2),(1,5)]")).len(), 4);
    }

    #[test]
    fn ball_examples() {
        let shape = LatticeShape::open(2, 99).unwrap();
        let c = s(&[50, 50]);
        assert_eq!(ball(0, &c, &shape).unwrap().len(), 1);
        assert_eq!(ball(1, &c, &shape).unwrap().len(), 5);
        let shape3 = LatticeShape::open(3, 99).unwrap();
        assert_eq!(ball(1, &s(&[50, 50, 50]), &shape3).unwrap().len(), 7);
        // Torus wraps: corner ball has the full cross.
        let torus = LatticeShape::torus(2, 9).unwrap();
        assert_eq!(ball(2, &s(&[1, 1]), &torus).unwrap().len(), 13);
        let open = LatticeShape::open(2, 9).unwrap();
        assert_eq!(ball(2, &s(&[1, 1]), &open).unwrap().len(), 6);
    }

    #[test]
    fn buffer_examples() {
        let d2: Region = "[(1,5),(1,5)]".parse().unwrap();
        let side: Region = "[(1),(1,5)]".parse().unwrap();
        let b = buffers(&d2, &side).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].volume(), 6);
        assert_eq!(b[0].to_string(), "[(0,1),(2,4)]");
        let d3 = Region::cube(&[3, 3, 3], 5);
        let side: Region = "[(7),(3,7),(3)]".parse().unwrap();
        let b = buffers(&d3, &side).unwrap();
        assert_eq!(b.len(), 2);
        assert!(b.iter().all(|r| r.volume() == 6));
        assert_eq!(b[0].to_string(), "[(7,8),(4,6),(3)]");
        assert_eq!(b[1].to_string(), "[(7),(4,6),(2,3)]");
        let not_side: Region = "[(4),(3,7),(3)]".parse().unwrap();
        assert!(buffers(&d3, &not_side).is_err());
        assert!(buffers(&Region::cube(&[1, 1], 2), &"[(1),(1,2)]".parse().unwrap()).is_err());
    }

    #[test]
    fn buffer_sites_hug_the_cube() {
        for d in 2..=4 {
            for m in 3..=5 {
                let cube = Region::cube(&vec![2; d], m);
                for side in cube_sides(&cube).unwrap() {
                    let bufs = buffers(&cube, &side).unwrap();
                    assert_eq!(bufs.len(), d - 1);
                    for b in bufs {
                        assert_eq!(b.volume(), 2 * (m - 2));
                        for x in b.sites() {
                            let outside = cube
                                .axes()
                                .iter()
                                .zip(x.coords())
                                .filter(|(a, &c)| !a.contains(c))
                                .collect::<Vec<_>>();
                            assert!(outside.len() <= 1);
                            for (a, &c) in outside {
                                assert!(c == a.lo() - 1 || c == a.hi() + 1);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn partition_tiles_the_doubled_cube() {
        let parts = subcube_partition(2, 3).unwrap();
        assert_eq!(parts.len(), 8);
        assert_eq!(parts[0].to_string(), "[(1,2),(1,2),(1,2)]");
        assert_eq!(parts[1].to_string(), "[(3,4),(1,2),(1,2)]");
        assert_eq!(parts[2].to_string(), "[(1,2),(3,4),(1,2)]");
        assert_eq!(parts[7].to_string(), "[(3,4),(3,4),(3,4)]");
        assert!(subcube_partition(1, 2).unwrap().iter().all(|r| r.volume() == 1));
        for d in 1..=3 {
            for m in 1..=3 {
                let shape = LatticeShape::open(d, 2 * m).unwrap();
                let mut seen = SiteSet::empty(shape);
                let mut total = 0;
                for part in subcube_partition(m, d).unwrap() {
                    for x in enumerate_region(&part, &shape).unwrap() {
                        let i = shape.index_of(&x).unwrap();
                        assert!(!seen.contains(i));
                        seen.insert(i);
                        total += 1;
                    }
                }
                assert_eq!(total, shape.volume());
                assert!(seen.is_full());
            }
        }
    }

    #[test]
    fn site_set_algebra() {
        let shape = LatticeShape::open(2, 9).unwrap();
        let a = SiteSet::from_indices(shape, [0, 5, 70, 80]);
        let b = SiteSet::from_indices(shape, [5, 80]);
        assert_eq!(a.len(), 4);
        assert!(b.is_subset(&a).unwrap());
        assert_eq!(a.difference(&b).unwrap().iter().collect::<Vec<_>>(), vec![0, 70]);
        assert_eq!(a.complement().len(), 81 - 4);
        assert_eq!(SiteSet::full(shape).len(), 81);
        let other = SiteSet::empty(LatticeShape::open(2, 8).unwrap());
        assert!(a.union(&other).is_err());
    }
}
