//! Weighted sums over height configurations by sweeping sites in canonical
//! order and keeping the heights of the sites that still have unprocessed
//! neighbours (the frontier).

use crate::error::{Error, Result};
use crate::lattice::Region;

/// Σ over heights φ(x) ∈ ranges[x] of exp(-βH(φ) + pin·#{x : φ(x) = pin_level}).
pub(crate) struct SumProblem<'a> {
    pub region: &'a Region,
    pub beta: f64,
    pub boundary_level: i32,
    pub ranges: Vec<(i32, i32)>,
    pub pin: Option<(i32, f64)>,
    pub budget: u128,
}

impl<'a> SumProblem<'a> {
    pub fn new(region: &'a Region, beta: f64, boundary_level: i32, range: (i32, i32), budget: u128) -> Self {
        SumProblem {
            region,
            beta,
            boundary_level,
            ranges: vec![range; region.len()],
            pin: None,
            budget,
        }
    }

    /// Intersects the range of site `i` with `[lo, hi]`.
    pub fn restrict(&mut self, i: usize, lo: i32, hi: i32) {
        let r = &mut self.ranges[i];
        r.0 = r.0.max(lo);
        r.1 = r.1.min(hi);
    }

    pub fn log_sum(&self) -> Result<f64> {
        let (log_scale, arr, _) = self.run(&[])?;
        Ok(match arr.first() {
            Some(&v) if v > 0.0 => log_scale + v.ln(),
            _ => f64::NEG_INFINITY,
        })
    }

    /// Log-weights of the joint law of the tracked sites, indexed in mixed
    /// radix with `tracked[0]` most significant; digit d of site t stands for
    /// height `ranges[t].0 + d`. Returns `None` when no configuration exists.
    pub fn log_joint(&self, tracked: &[usize]) -> Result<Option<Vec<f64>>> {
        let (log_scale, arr, order) = self.run(tracked)?;
        if arr.iter().all(|&v| v <= 0.0) {
            return Ok(None);
        }
        let radix: Vec<usize> = tracked.iter().map(|&t| self.width(t)).collect();
        let pos: Vec<usize> = tracked
            .iter()
            .map(|t| order.iter().position(|o| o == t).unwrap())
            .collect();
        let mut src_stride = vec![1usize; order.len()];
        for k in (0..order.len().saturating_sub(1)).rev() {
            src_stride[k] = src_stride[k + 1] * self.width(order[k + 1]);
        }
        let total: usize = radix.iter().product();
        let mut out = vec![f64::NEG_INFINITY; total];
        let mut digits = vec![0usize; tracked.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut rem = idx;
            for k in (0..tracked.len()).rev() {
                digits[k] = rem % radix[k];
                rem /= radix[k];
            }
            let src: usize = (0..tracked.len()).map(|k| digits[k] * src_stride[pos[k]]).sum();
            let v = arr[src];
            if v > 0.0 {
                *slot = log_scale + v.ln();
            }
        }
        Ok(Some(out))
    }

    fn width(&self, i: usize) -> usize {
        let (lo, hi) = self.ranges[i];
        (hi - lo + 1).max(0) as usize
    }

    fn run(&self, tracked: &[usize]) -> Result<(f64, Vec<f64>, Vec<usize>)> {
        let region = self.region;
        let n = region.len();
        if self.ranges.iter().any(|r| r.0 > r.1) {
            return Ok((0.0, vec![0.0], Vec::new()));
        }
        let mut last_needed: Vec<usize> = (0..n)
            .map(|i| region.neighbors(i).iter().copied().max().unwrap_or(i).max(i))
            .collect();
        for &t in tracked {
            last_needed[t] = usize::MAX;
        }
        let lo_all = self.ranges.iter().map(|r| r.0).min().unwrap_or(0).min(self.boundary_level);
        let hi_all = self.ranges.iter().map(|r| r.1).max().unwrap_or(0).max(self.boundary_level);
        let span = (hi_all - lo_all) as usize;
        let exp_tab: Vec<f64> = (0..=span).map(|d| (-self.beta * d as f64).exp()).collect();

        let mut frontier: Vec<usize> = Vec::new();
        let mut arr = vec![1.0f64];
        let mut log_scale = 0.0f64;
        for i in 0..n {
            let (lo_i, hi_i) = self.ranges[i];
            let ri = (hi_i - lo_i + 1) as usize;
            let work = arr.len() as u128 * ri as u128;
            if work > self.budget {
                return Err(Error::TooLarge { work, budget: self.budget });
            }
            let bdeg = region.boundary_edges(i) as usize;
            let self_w: Vec<f64> = (lo_i..=hi_i)
                .map(|h| {
                    let mut w = exp_tab[h.abs_diff(self.boundary_level) as usize].powi(bdeg as i32);
                    if let Some((level, bonus)) = self.pin {
                        if h == level {
                            w *= bonus.exp();
                        }
                    }
                    w
                })
                .collect();
            let nb_pos: Vec<usize> = region
                .neighbors(i)
                .iter()
                .filter(|&&j| j < i)
                .map(|j| frontier.iter().position(|f| f == j).expect("neighbour on frontier"))
                .collect();

            let old_radix: Vec<usize> = frontier.iter().map(|&f| self.width(f)).collect();
            let old_lo: Vec<i32> = frontier.iter().map(|&f| self.ranges[f].0).collect();
            let keep: Vec<bool> = frontier.iter().map(|&f| last_needed[f] > i).collect();
            let mut new_frontier: Vec<usize> =
                frontier.iter().zip(&keep).filter(|(_, &k)| k).map(|(&f, _)| f).collect();
            let keep_i = last_needed[i] > i;
            if keep_i {
                new_frontier.push(i);
            }
            // strides in the new array; i is least significant when kept
            let mut new_stride_of_old = vec![0usize; frontier.len()];
            let mut stride = if keep_i { ri } else { 1 };
            for k in (0..frontier.len()).rev() {
                if keep[k] {
                    new_stride_of_old[k] = stride;
                    stride *= old_radix[k];
                }
            }
            let new_len = stride;
            let mut next = vec![0.0f64; new_len];
            let mut digits = vec![0usize; frontier.len()];
            let mut w = vec![0.0f64; ri];
            for (idx, &a) in arr.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let mut rem = idx;
                for k in (0..frontier.len()).rev() {
                    digits[k] = rem % old_radix[k];
                    rem /= old_radix[k];
                }
                let base: usize = (0..frontier.len()).map(|k| digits[k] * new_stride_of_old[k]).sum();
                w.copy_from_slice(&self_w);
                for &p in &nb_pos {
                    let hp = old_lo[p] + digits[p] as i32;
                    for (d, wd) in w.iter_mut().enumerate() {
                        *wd *= exp_tab[(lo_i + d as i32).abs_diff(hp) as usize];
                    }
                }
                if keep_i {
                    let row = &mut next[base..base + ri];
                    for (r, wd) in row.iter_mut().zip(&w) {
                        *r += a * wd;
                    }
                } else {
                    next[base] += a * w.iter().sum::<f64>();
                }
            }
            let m = next.iter().cloned().fold(0.0f64, f64::max);
            if m == 0.0 {
                return Ok((0.0, vec![0.0], Vec::new()));
            }
            for v in next.iter_mut() {
                *v /= m;
            }
            log_scale += m.ln();
            arr = next;
            frontier = new_frontier;
        }
        Ok((log_scale, arr, frontier))
    }
}
