//! A deliberately simple reference simulator shared by the integration tests.
//! It works on plain coordinate vectors and shares no code with the library.

#![allow(dead_code)]

use std::collections::BTreeSet;

pub struct RefLattice {
    pub d: usize,
    pub n: usize,
    pub torus: bool,
}

impl RefLattice {
    pub fn new(d: usize, n: usize, torus: bool) -> Self {
        RefLattice { d, n, torus }
    }

    pub fn volume(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// 0-based coordinates, axis 0 varying fastest.
    pub fn coords(&self, mut i: usize) -> Vec<usize> {
        let mut c = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            c.push(i % self.n);
            i /= self.n;
        }
        c
    }

    pub fn index(&self, c: &[usize]) -> usize {
        c.iter().rev().fold(0, |acc, &x| acc * self.n + x)
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let c = self.coords(i);
        let mut out = BTreeSet::new();
        for axis in 0..self.d {
            for step in [-1i64, 1] {
                let x = c[axis] as i64 + step;
                let x = if self.torus {
                    x.rem_euclid(self.n as i64)
                } else if x < 0 || x >= self.n as i64 {
                    continue;
                } else {
                    x
                };
                let mut y = c.clone();
                y[axis] = x as usize;
                if y != c {
                    out.insert(self.index(&y));
                }
            }
        }
        out.into_iter().collect()
    }

    /// Infection round of every site (`None` = never), by repeated full
    /// sweeps.
    pub fn times(&self, initial: &[bool], r: usize) -> Vec<Option<u32>> {
        let nbrs: Vec<Vec<usize>> = (0..self.volume()).map(|i| self.neighbors(i)).collect();
        let mut times: Vec<Option<u32>> = initial.iter().map(|&b| b.then_some(0)).collect();
        let mut round = 0;
        loop {
            round += 1;
            let newly: Vec<usize> = (0..self.volume())
                .filter(|&i| times[i].is_none())
                .filter(|&i| nbrs[i].iter().filter(|&&j| times[j].is_some()).count() >= r)
                .collect();
            if newly.is_empty() {
                return times;
            }
            for i in newly {
                times[i] = Some(round);
            }
        }
    }

    pub fn percolation_time(&self, initial: &[bool], r: usize) -> Option<u32> {
        let times = self.times(initial, r);
        times.iter().try_fold(0, |acc, t| t.map(|t| acc.max(t)))
    }
}

pub fn mask_to_bools(mask: u64, len: usize) -> Vec<bool> {
    (0..len).map(|i| mask >> i & 1 == 1).collect()
}

/// Class of `[m]^d` from a run on the open box: 0 strongly good, 1 semi good,
/// 2 bad.
pub fn ref_class(m: usize, d: usize, initial: &[bool]) -> u8 {
    let lat = RefLattice::new(d, m, false);
    let times = lat.times(initial, d);
    if times.iter().all(Option::is_some) {
        return 0;
    }
    let interior_ok = (0..lat.volume()).all(|i| {
        let inner = lat.coords(i).iter().filter(|&&c| c != 0 && c != m - 1).count();
        inner <= 1 || times[i].is_some()
    });
    if interior_ok {
        1
    } else {
        2
    }
}

pub fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
