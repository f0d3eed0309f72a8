//! Plain enumeration of every height configuration. Exponential cost; meant
//! for tiny regions and as an independent oracle for the frontier sums.

use rayon::prelude::*;

use crate::lattice::Region;
use crate::numeric::KahanSum;

/// H(φ) for heights indexed like `region.sites()`.
pub fn energy(region: &Region, heights: &[i32], boundary_level: i32) -> u64 {
    let mut e = 0u64;
    for i in 0..region.len() {
        let hi = heights[i];
        for &j in region.neighbors(i) {
            if i < j {
                e += hi.abs_diff(heights[j]) as u64;
            }
        }
        e += region.boundary_edges(i) as u64 * hi.abs_diff(boundary_level) as u64;
    }
    e
}

/// Calls `f` on every configuration with `heights[i]` in `ranges[i]`,
/// the last site varying fastest.
pub fn for_each_config<F: FnMut(&[i32])>(ranges: &[(i32, i32)], mut f: F) {
    if ranges.iter().any(|r| r.0 > r.1) {
        return;
    }
    let mut cur: Vec<i32> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&cur);
        let mut k = ranges.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if cur[k] < ranges[k].1 {
                cur[k] += 1;
                break;
            }
            cur[k] = ranges[k].0;
        }
    }
}

/// Parallel fold over all configurations, split on the height of the first
/// site. Partial results are merged in ascending order of that height.
pub fn fold_configs<T, I, F, M>(ranges: &[(i32, i32)], init: I, fold: F, merge: M) -> T
where
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, &[i32]) + Sync,
    M: Fn(T, T) -> T,
{
    if ranges.is_empty() {
        let mut acc = init();
        fold(&mut acc, &[]);
        return acc;
    }
    let (lo, hi) = ranges[0];
    let parts: Vec<T> = (lo..=hi)
        .into_par_iter()
        .map(|first| {
            let mut acc = init();
            let mut sub = ranges.to_vec();
            sub[0] = (first, first);
            for_each_config(&sub, |h| fold(&mut acc, h));
            acc
        })
        .collect();
    parts.into_iter().fold(init(), merge)
}

/// log Σ exp(-βH(φ) + pin·#{φ = level}) by enumeration.
pub fn log_sum(
    region: &Region,
    beta: f64,
    boundary_level: i32,
    ranges: &[(i32, i32)],
    pin: Option<(i32, f64)>,
) -> f64 {
    let s = fold_configs(
        ranges,
        KahanSum::new,
        |acc, h| {
            let mut lw = -beta * energy(region, h, boundary_level) as f64;
            if let Some((level, bonus)) = pin {
                lw += bonus * h.iter().filter(|&&x| x == level).count() as f64;
            }
            acc.add(lw.exp());
        },
        |mut a, b| {
            a.merge(&b);
            a
        },
    );
    s.value().ln()
}
