//! Exact single-site conditional law on Z (or Z₊ with pinning).
//!
//! Given neighbour heights a₁ ≤ … ≤ a_m, the weight exp(-βΣ|j - a_i|) is
//! geometric on each interval between consecutive neighbour values, so the
//! law splits into finitely many geometric pieces with closed-form masses.

/// One geometric piece: heights start, start+1, … (len of them, or
/// unbounded), with log-weight `log_w0 + t·log_r` at start + t.
#[derive(Clone, Copy, Debug)]
struct Segment {
    start: i64,
    len: Option<u64>,
    log_w0: f64,
    log_r: f64,
    /// Unbounded towards -∞: heights start, start-1, …
    downward: bool,
}

impl Segment {
    fn mass(&self, shift: f64) -> f64 {
        let w0 = (self.log_w0 - shift).exp();
        match self.len {
            None => w0 / -(self.log_r.exp_m1()),
            Some(n) => {
                if self.log_r == 0.0 {
                    w0 * n as f64
                } else {
                    // w0 (r^n - 1)/(r - 1)
                    w0 * (self.log_r * n as f64).exp_m1() / self.log_r.exp_m1()
                }
            }
        }
    }
}

/// The conditional law of one height given its neighbours.
#[derive(Clone, Debug)]
pub struct HeatBath {
    segments: Vec<Segment>,
    masses: Vec<f64>,
    total: f64,
    shift: f64,
}

impl HeatBath {
    /// `neighbors` lists one entry per edge, boundary edges included.
    /// `pin` = Some(h) restricts to j ≥ 0 with extra weight e^h at j = 0.
    pub fn new(neighbors: &[i32], beta: f64, pin: Option<f64>) -> HeatBath {
        let mut a: Vec<i64> = neighbors.iter().map(|&x| x as i64).collect();
        a.sort_unstable();
        let m = a.len() as i64;
        let energy = |j: i64| -> f64 { a.iter().map(|&x| (j - x).abs() as f64).sum() };
        let mut segs: Vec<Segment> = Vec::new();
        if m == 0 {
            // no edges at all: degenerate law, a point mass at 0
            segs.push(Segment { start: 0, len: None, log_w0: 0.0, log_r: f64::NEG_INFINITY, downward: false });
        } else {
            let lo = a[0];
            segs.push(Segment {
                start: lo - 1,
                len: None,
                log_w0: -beta * energy(lo - 1),
                log_r: -beta * m as f64,
                downward: true,
            });
            for k in 0..a.len() - 1 {
                let (s, e) = (a[k], a[k + 1]);
                if e > s {
                    let slope = 2 * (k as i64 + 1) - m;
                    segs.push(Segment {
                        start: s,
                        len: Some((e - s) as u64),
                        log_w0: -beta * energy(s),
                        log_r: -beta * slope as f64,
                        downward: false,
                    });
                }
            }
            let hi = a[a.len() - 1];
            segs.push(Segment { start: hi, len: None, log_w0: -beta * energy(hi), log_r: -beta * m as f64, downward: false });
        }
        if let Some(h) = pin {
            segs = clip_positive(segs, h);
        }
        let shift = segs.iter().map(|s| s.log_w0.max(s.log_w0 + end_log(s))).fold(f64::NEG_INFINITY, f64::max);
        let masses: Vec<f64> = segs.iter().map(|s| s.mass(shift)).collect();
        let total = masses.iter().sum();
        HeatBath { segments: segs, masses, total, shift }
    }

    /// Probability of height `j`.
    pub fn pmf(&self, j: i64) -> f64 {
        for s in &self.segments {
            let t = if s.downward { s.start - j } else { j - s.start };
            if t < 0 {
                continue;
            }
            if let Some(n) = s.len {
                if t as u64 >= n {
                    continue;
                }
            }
            return (s.log_w0 - self.shift + t as f64 * s.log_r).exp() / self.total;
        }
        0.0
    }

    /// Smallest j with P[X ≤ j] ≥ u, for u in (0, 1].
    pub fn quantile(&self, u: f64) -> i64 {
        let mut target = u * self.total;
        // downward tail first: it holds the smallest heights
        let order: Vec<usize> = (0..self.segments.len()).collect();
        for &k in &order {
            let s = &self.segments[k];
            let mass = self.masses[k];
            let last = k + 1 == self.segments.len();
            if target > mass && !last {
                target -= mass;
                continue;
            }
            let w0 = (s.log_w0 - self.shift).exp();
            if s.downward {
                // mass at or below start - t is w0 r^t / (1 - r); the
                // quantile is the deepest such height still covering target
                let r1 = -(s.log_r.exp_m1());
                let x = (target.min(mass) * r1 / w0).ln() / s.log_r;
                let t = if x.is_finite() { x.floor().max(0.0) as i64 } else { 0 };
                return s.start - t;
            }
            let target = target.min(mass);
            let t = if s.log_r == 0.0 {
                (target / w0).ceil() as i64 - 1
            } else {
                // smallest t with w0 (r^{t+1} - 1)/(r - 1) ≥ target
                // u = 1 would otherwise land at +∞ on an unbounded tail
                let arg = (target * s.log_r.exp_m1() / w0).max(-1.0 + f64::EPSILON);
                let x = arg.ln_1p() / s.log_r;
                if x.is_finite() { x.ceil() as i64 - 1 } else { 0 }
            };
            let t = t.max(0);
            let t = match s.len {
                Some(n) => t.min(n as i64 - 1),
                None => t,
            };
            return s.start + t;
        }
        unreachable!("segments cover the whole mass")
    }
}

fn end_log(s: &Segment) -> f64 {
    match s.len {
        Some(n) if n > 0 => (n - 1) as f64 * s.log_r,
        _ => 0.0,
    }
}

/// Restricts to j ≥ 0 and splits j = 0 off with reward e^h.
fn clip_positive(segs: Vec<Segment>, h: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut zero: Option<f64> = None;
    for s in segs {
        if s.downward {
            if s.start < 0 {
                continue;
            }
            // heights 0..=start as an upward run from 0
            let n = s.start as u64 + 1;
            let log_w_zero = s.log_w0 + s.start as f64 * s.log_r;
            let up = Segment { start: 0, len: Some(n), log_w0: log_w_zero, log_r: -s.log_r, downward: false };
            push_split(&mut out, &mut zero, up);
        } else {
            let end = s.len.map(|n| s.start + n as i64 - 1);
            if let Some(e) = end {
                if e < 0 {
                    continue;
                }
            }
            let mut s = s;
            if s.start < 0 {
                let skip = -s.start;
                s.log_w0 += skip as f64 * s.log_r;
                s.start = 0;
                s.len = s.len.map(|n| n - skip as u64);
            }
            push_split(&mut out, &mut zero, s);
        }
    }
    let mut segs = Vec::new();
    if let Some(lw) = zero {
        segs.push(Segment { start: 0, len: Some(1), log_w0: lw + h, log_r: 0.0, downward: false });
    }
    segs.extend(out);
    segs
}

fn push_split(out: &mut Vec<Segment>, zero: &mut Option<f64>, s: Segment) {
    if s.start == 0 && zero.is_none() {
        *zero = Some(s.log_w0);
        let rest = match s.len {
            Some(1) => return,
            Some(n) => Some(n - 1),
            None => None,
        };
        out.push(Segment { start: 1, len: rest, log_w0: s.log_w0 + s.log_r, log_r: s.log_r, downward: false });
    } else {
        out.push(s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_pmf(nb: &[i32], beta: f64, pin: Option<f64>, j: i64) -> f64 {
        let w = |x: i64| -> f64 {
            if pin.is_some() && x < 0 {
                return 0.0;
            }
            let e: f64 = nb.iter().map(|&a| (x - a as i64).abs() as f64).sum();
            let mut lw = -beta * e;
            if let (Some(h), 0) = (pin, x) {
                lw += h;
            }
            lw.exp()
        };
        let z: f64 = (-400..=400).map(w).sum();
        w(j) / z
    }

    #[test]
    fn matches_direct_normalisation() {
        let cases: &[(&[i32], Option<f64>)] = &[
            (&[0, 0, 0, 0], None),
            (&[-2, 1, 1, 5], None),
            (&[3, -1, 0, 7], Some(0.4)),
            (&[0, 0, 0, 0], Some(0.0)),
            (&[2, 4, 4, 9], Some(-1.0)),
            (&[0, 0], None),
            (&[1, 1, 1, 1], Some(2.0)),
        ];
        for &(nb, pin) in cases {
            let hb = HeatBath::new(nb, 0.7, pin);
            for j in -12..=20 {
                let a = hb.pmf(j);
                let b = brute_pmf(nb, 0.7, pin, j);
                assert!((a - b).abs() < 1e-13, "nb={nb:?} pin={pin:?} j={j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn free_flat_neighbours() {
        let hb = HeatBath::new(&[0, 0, 0, 0], 1.0, None);
        assert!((hb.pmf(0) - 0.96402).abs() < 1e-5);
        assert!((hb.pmf(1) - 0.0176568).abs() < 1e-7);
        assert!((hb.pmf(-1) - 0.0176568).abs() < 1e-7);
        let hb = HeatBath::new(&[0, 0, 0, 0], 1.0, Some(0.0));
        assert!((hb.pmf(0) - 0.98168).abs() < 1e-5);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let cases: &[(&[i32], Option<f64>)] =
            &[(&[-2, 1, 1, 5], None), (&[3, -1, 0, 7], Some(0.4)), (&[0, 0, 0, 0], None), (&[2, 4, 4, 9], Some(-1.0))];
        for &(nb, pin) in cases {
            let hb = HeatBath::new(nb, 0.9, pin);
            let mut cdf = 0.0;
            let mut prev_j = None;
            for j in -40..=60 {
                let p = hb.pmf(j);
                if p == 0.0 {
                    continue;
                }
                let lo = cdf;
                cdf += p;
                // any u strictly inside (lo, cdf] maps to j
                for frac in [0.25, 0.5, 0.999] {
                    let u = lo + frac * p;
                    if u > 0.0 && u < 1.0 && p > 1e-12 {
                        assert_eq!(hb.quantile(u), j, "nb={nb:?} u={u}");
                    }
                }
                prev_j = Some(j);
            }
            assert!(prev_j.is_some());
            let mut last = i64::MIN;
            for i in 1..=1000 {
                let q = hb.quantile(i as f64 / 1000.0);
                assert!(q >= last);
                last = q;
            }
        }
    }
}
