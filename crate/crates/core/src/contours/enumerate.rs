//! Exhaustive enumeration of contours surrounding a marked cell.
//!
//! Every contour around the marked cell crosses the horizontal ray leaving
//! the cell to the right an odd number of times. Walks start on the
//! rightmost crossing, traversed upwards, and may not cross the ray further
//! right; this fixes one starting edge and one orientation per contour.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{is_linked, Dir};
use crate::error::{Error, Result};
use crate::lattice::Site;

const DEFAULT_NODE_BUDGET: u64 = 20_000_000_000;

struct Walker {
    size: i32,
    // local coordinates: the marked cell sits at (c, c); vertex (i, j) is
    // the dual point (i + 1/2, j + 1/2)
    c: i32,
    start: (i32, i32),
    ray_stop: i32,
    max_length: u32,
    used_h: Vec<bool>,
    used_v: Vec<bool>,
    passes: Vec<u8>,
    first_linked: Vec<bool>,
    counts: BTreeMap<u32, u64>,
    nodes: u64,
    budget: u64,
}

impl Walker {
    fn vid(&self, v: (i32, i32)) -> usize {
        (v.1 * self.size + v.0) as usize
    }

    fn edge_slot(&self, v: (i32, i32), d: Dir) -> (bool, usize) {
        match d {
            Dir::E => (true, self.vid(v)),
            Dir::W => (true, self.vid((v.0 - 1, v.1))),
            Dir::N => (false, self.vid(v)),
            Dir::S => (false, self.vid((v.0, v.1 - 1))),
        }
    }

    fn is_used(&self, v: (i32, i32), d: Dir) -> bool {
        let (h, k) = self.edge_slot(v, d);
        if h {
            self.used_h[k]
        } else {
            self.used_v[k]
        }
    }

    fn set_used(&mut self, v: (i32, i32), d: Dir, val: bool) {
        let (h, k) = self.edge_slot(v, d);
        if h {
            self.used_h[k] = val;
        } else {
            self.used_v[k] = val;
        }
    }

    /// Position on the ray of a vertical edge leaving `v` in direction `d`,
    /// if the edge crosses the row of the marked cell.
    fn ray_position(&self, v: (i32, i32), d: Dir) -> Option<i32> {
        let crosses = match d {
            Dir::N => v.1 == self.c - 1,
            Dir::S => v.1 == self.c,
            _ => false,
        };
        (crosses && v.0 >= self.c).then_some(v.0)
    }

    fn dfs(&mut self, v: (i32, i32), din: Dir, steps: u32, parity: bool) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::TooLarge { work: self.nodes as u128, budget: self.budget as u128 });
        }
        let at_start = v == self.start;
        let vi = self.vid(v);
        for dout in Dir::ALL {
            if dout == din || self.is_used(v, dout) {
                continue;
            }
            let linked = is_linked(din, dout);
            if at_start {
                // passing through the start vertex: both passages there must be linked
                if self.passes[vi] != 0 || !linked {
                    continue;
                }
            } else if self.passes[vi] == 1 && !(linked && self.first_linked[vi]) {
                continue;
            }
            let mut par = parity;
            if let Some(p) = self.ray_position(v, dout) {
                if p >= self.ray_stop {
                    continue;
                }
                par = !par;
            }
            let (dx, dy) = dout.delta();
            let w = (v.0 + dx, v.1 + dy);
            let steps2 = steps + 1;
            let remaining = self.max_length - steps2;
            if w == self.start {
                let arrival = dout.opposite();
                let close_ok = self.passes[self.vid(w)] == 0 || arrival == Dir::W;
                if close_ok && par {
                    *self.counts.entry(steps2).or_default() += 1;
                }
            }
            let dist = (w.0 - self.start.0).unsigned_abs() + (w.1 - self.start.1).unsigned_abs();
            if dist > remaining || w.0 < 0 || w.1 < 0 || w.0 >= self.size || w.1 >= self.size {
                continue;
            }
            if w == self.start && remaining == 0 {
                continue;
            }
            self.set_used(v, dout, true);
            let prev = self.passes[vi];
            self.passes[vi] += 1;
            if prev == 0 {
                self.first_linked[vi] = linked;
            }
            self.dfs(w, dout.opposite(), steps2, par)?;
            self.passes[vi] -= 1;
            self.set_used(v, dout, false);
        }
        Ok(())
    }
}

fn run_from(offset: i32, max_length: u32, budget: u64) -> Result<BTreeMap<u32, u64>> {
    let half = (max_length / 2) as i32;
    let size = 2 * half + 6;
    let c = half + 3;
    // the start edge is the vertical edge between cells (c+offset, c) and
    // (c+offset+1, c), walked upwards from vertex (c+offset, c-1)
    let start = (c + offset, c - 1);
    let n = (size * size) as usize;
    let mut w = Walker {
        size,
        c,
        start,
        ray_stop: c + offset,
        max_length,
        used_h: vec![false; n],
        used_v: vec![false; n],
        passes: vec![0; n],
        first_linked: vec![false; n],
        counts: BTreeMap::new(),
        nodes: 0,
        budget,
    };
    w.set_used(start, Dir::N, true);
    w.dfs((start.0, start.1 + 1), Dir::S, 1, true)?;
    Ok(w.counts)
}

/// Number of contours with the marked cell inside, by length, up to
/// `max_length`. The counts do not depend on the marked cell.
pub fn enumerate_contours(marked: Site, max_length: u32) -> Result<BTreeMap<u32, u64>> {
    enumerate_contours_with_budget(marked, max_length, DEFAULT_NODE_BUDGET)
}

/// As [`enumerate_contours`] with an explicit cap on search-tree nodes.
pub fn enumerate_contours_with_budget(_marked: Site, max_length: u32, budget: u64) -> Result<BTreeMap<u32, u64>> {
    if max_length % 2 == 1 {
        return Err(Error::InvalidArgument("max_length must be even".into()));
    }
    let mut counts = BTreeMap::new();
    if max_length < 4 {
        return Ok(counts);
    }
    let offsets: Vec<i32> = (0..=(max_length as i32 / 2 - 2)).collect();
    let parts: Vec<Result<BTreeMap<u32, u64>>> =
        offsets.par_iter().map(|&o| run_from(o, max_length, budget)).collect();
    for part in parts {
        for (l, k) in part? {
            *counts.entry(l).or_default() += k;
        }
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeierlsSum {
    pub counts: BTreeMap<u32, u64>,
    pub partial_sum: f64,
    pub growth_rate: f64,
}

/// Σ count(ℓ) e^{-βℓ} up to `max_length`, and the exponential growth rate
/// of the counts fitted by least squares on the three largest lengths.
pub fn peierls_sum(beta: f64, max_length: u32) -> Result<PeierlsSum> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let counts = enumerate_contours(Site::new(0, 0), max_length)?;
    let partial_sum = counts.iter().map(|(&l, &k)| k as f64 * (-beta * l as f64).exp()).fold(0.0, |a, b| a + b);
    let top: Vec<(f64, f64)> = counts
        .iter()
        .rev()
        .take(3)
        .map(|(&l, &k)| (l as f64, (k as f64).ln()))
        .collect();
    let growth_rate = if top.len() >= 2 {
        let m = top.len() as f64;
        let mx = top.iter().map(|p| p.0).sum::<f64>() / m;
        let my = top.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = top.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = top.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxy / sxx).exp()
    } else {
        f64::NAN
    };
    Ok(PeierlsSum { counts, partial_sum, growth_rate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_counts() {
        let c = enumerate_contours(Site::new(0, 0), 6).unwrap();
        assert_eq!(c.get(&4), Some(&1));
        assert_eq!(c.get(&6), Some(&4));
    }

    #[test]
    fn peierls_beta_two() {
        let p = peierls_sum(2.0, 6).unwrap();
        let expect = (-8f64).exp() + 4.0 * (-12f64).exp();
        assert!((p.partial_sum - expect).abs() < 1e-15);
        assert!((p.partial_sum - 3.6004e-4).abs() < 1e-8);
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            enumerate_contours_with_budget(Site::new(0, 0), 16, 1000),
            Err(Error::TooLarge { .. })
        ));
    }
}
