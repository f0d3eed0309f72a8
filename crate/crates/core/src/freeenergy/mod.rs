//! Strip free energies from column-to-column transfer operators, the 1D
//! pinning check, thermodynamic integration and the comparison against the
//! layering function.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::EnsembleSpec;
use crate::formulas::{self, DenominatorConvention, LayeringCoefficients, ModelParams};
use crate::numeric::{kahan, log_sum_exp, KahanSum};
use crate::sampler::EstimateSummary;

pub const DEFAULT_STATE_BUDGET: u64 = 200_000;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// What the two long sides of the strip see.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "level", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SideBoundary {
    /// Both sides pinned at a fixed height.
    Level(i32),
    /// Row W-1 is bonded to row 0 (a double bond when W = 2, none when W = 1).
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferSpec {
    pub width: u32,
    pub h_max: u32,
    pub params: ModelParams,
    /// FREE uses heights in [n - h_max, n + h_max], WETTING and POSITIVE
    /// heights in [0, h_max].
    pub ensemble: EnsembleSpec,
    pub side: SideBoundary,
    pub state_budget: u64,
}

impl TransferSpec {
    pub fn new(width: u32, h_max: u32, params: ModelParams, ensemble: EnsembleSpec) -> Self {
        TransferSpec { width, h_max, params, ensemble, side: SideBoundary::Level(0), state_budget: DEFAULT_STATE_BUDGET }
    }

    pub fn with_side(mut self, side: SideBoundary) -> Self {
        self.side = side;
        self
    }

    fn range(&self) -> (i32, i32) {
        self.ensemble.range(self.h_max)
    }

    fn n_states(&self) -> Result<usize> {
        if self.width == 0 {
            return Err(Error::InvalidArgument("width must be positive".into()));
        }
        let (lo, hi) = self.range();
        let r = (hi - lo + 1) as u128;
        let n = r.checked_pow(self.width).unwrap_or(u128::MAX);
        if n > self.state_budget as u128 {
            return Err(Error::TooLarge { work: n, budget: self.state_budget as u128 });
        }
        Ok(n as usize)
    }
}

/// Energy and pinning of a single column, as a log-weight.
fn column_log_weight(col: &[i32], spec: &TransferSpec) -> f64 {
    let w = col.len();
    let beta = spec.params.beta();
    let mut e = 0i64;
    match spec.side {
        SideBoundary::Level(n) => {
            for i in 0..w - 1 {
                e += (col[i] - col[i + 1]).abs() as i64;
            }
            e += (col[0] - n).abs() as i64 + (col[w - 1] - n).abs() as i64;
        }
        SideBoundary::Periodic => {
            for i in 0..w {
                e += (col[i] - col[(i + 1) % w]).abs() as i64;
            }
        }
    }
    let mut lw = -beta * e as f64;
    if let Some((level, h)) = spec.ensemble.pin() {
        lw += h * col.iter().filter(|&&x| x == level).count() as f64;
    }
    lw
}

fn decode(mut k: usize, lo: i32, r: usize, out: &mut [i32]) {
    for x in out.iter_mut() {
        *x = lo + (k % r) as i32;
        k /= r;
    }
}

/// The symmetric operator D^{1/2} K D^{1/2}, with D scaled by e^{-shift}.
struct Operator {
    r: usize,
    width: usize,
    decay: f64,
    sqrt_d: Vec<f64>,
    shift: f64,
}

impl Operator {
    fn new(spec: &TransferSpec) -> Result<Operator> {
        let n = spec.n_states()?;
        let (lo, hi) = spec.range();
        let r = (hi - lo + 1) as usize;
        let w = spec.width as usize;
        let lw: Vec<f64> = (0..n)
            .into_par_iter()
            .map_init(|| vec![0i32; w], |col, k| {
                decode(k, lo, r, col);
                column_log_weight(col, spec)
            })
            .collect();
        let shift = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sqrt_d = lw.iter().map(|&x| (0.5 * (x - shift)).exp()).collect();
        Ok(Operator { r, width: w, decay: (-spec.params.beta()).exp(), sqrt_d, shift })
    }

    /// out = D^{1/2} K D^{1/2} v, with K = ⊗ e^{-β|a-b|} applied one axis
    /// at a time by a forward and a backward geometric recursion.
    fn apply(&self, v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(v.iter().zip(&self.sqrt_d).map(|(a, d)| a * d));
        let r = self.r;
        let q = self.decay;
        let mut stride = 1usize;
        for _ in 0..self.width {
            let block = stride * r;
            out.par_chunks_mut(block).for_each_init(
                || (vec![0.0; r], vec![0.0; r]),
                |(fw, line), chunk| {
                    for o in 0..stride {
                        for a in 0..r {
                            line[a] = chunk[o + a * stride];
                        }
                        let mut acc = 0.0;
                        for a in 0..r {
                            acc = line[a] + q * acc;
                            fw[a] = acc;
                        }
                        let mut acc = 0.0;
                        for a in (0..r).rev() {
                            acc = line[a] + q * acc;
                            chunk[o + a * stride] = fw[a] + acc - line[a];
                        }
                    }
                },
            );
            stride = block;
        }
        for (x, d) in out.iter_mut().zip(&self.sqrt_d) {
            *x *= d;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    /// Stop once successive log Rayleigh quotients differ by less than this.
    pub tol: f64,
    /// ... and ‖Tv - λv‖/λ is below this.
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl PowerOptions {
    pub fn new(tol: f64) -> Self {
        PowerOptions { tol, residual_tol: tol.sqrt().max(1e-13), max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadingEigen {
    pub log_lambda: f64,
    /// Normalised leading eigenvector of the symmetric operator; its square
    /// is the law of one column in the infinite strip.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Power iteration from `start` (uniform when absent).
pub fn leading_eigen(spec: &TransferSpec, opts: &PowerOptions, start: Option<&[f64]>) -> Result<LeadingEigen> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let op = Operator::new(spec)?;
    let n = op.sqrt_d.len();
    let mut v: Vec<f64> = match start {
        Some(s) if s.len() == n => s.to_vec(),
        Some(_) => return Err(Error::InvalidArgument("start vector has the wrong length".into())),
        None => vec![1.0; n],
    };
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("start vector must be nonzero".into()));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    let mut w = Vec::with_capacity(n);
    let mut prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        op.apply(&v, &mut w);
        let lam = kahan(v.iter().zip(&w).map(|(a, b)| a * b));
        if !(lam > 0.0) {
            return Err(Error::ConvergenceFailure { iterations: it, residual });
        }
        residual = v.iter().zip(&w).map(|(a, b)| (b - lam * a).powi(2)).sum::<f64>().sqrt() / lam;
        let ll = lam.ln();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let done = (ll - prev).abs() < opts.tol && residual < opts.residual_tol;
        prev = ll;
        std::mem::swap(&mut v, &mut w);
        v.iter_mut().for_each(|x| *x /= norm);
        if done {
            return Ok(LeadingEigen { log_lambda: ll + op.shift, vector: v, iterations: it, residual });
        }
    }
    Err(Error::ConvergenceFailure { iterations: opts.max_iter, residual })
}

/// log of the leading eigenvalue of the column transfer operator.
pub fn transfer_log_eigenvalue(spec: &TransferSpec, tol: f64) -> Result<f64> {
    Ok(leading_eigen(spec, &PowerOptions::new(tol), None)?.log_lambda)
}

/// Free energy per site of the strip, log λ / W.
pub fn strip_free_energy(spec: &TransferSpec, tol: f64) -> Result<f64> {
    Ok(transfer_log_eigenvalue(spec, tol)? / spec.width as f64)
}

/// Fraction of sites at the pinning level in the infinite strip.
pub fn strip_contact_fraction(spec: &TransferSpec, opts: &PowerOptions) -> Result<f64> {
    let (level, _) = spec
        .ensemble
        .pin()
        .ok_or_else(|| Error::InvalidArgument("contact fraction needs a wetting ensemble".into()))?;
    let eig = leading_eigen(spec, opts, None)?;
    let (lo, hi) = spec.range();
    let r = (hi - lo + 1) as usize;
    let w = spec.width as usize;
    let mut col = vec![0i32; w];
    let mut acc = KahanSum::new();
    for (k, &x) in eig.vector.iter().enumerate() {
        decode(k, lo, r, &mut col);
        let z = col.iter().filter(|&&c| c == level).count();
        if z > 0 {
            acc.add(x * x * z as f64);
        }
    }
    Ok(acc.value() / w as f64)
}

/// log Tr(T^L): the partition function of a W × L torus along the length
/// (sides as in `spec`), computed by applying T^L to each basis vector.
pub fn transfer_log_trace(spec: &TransferSpec, length: u32) -> Result<f64> {
    if length == 0 {
        return Err(Error::InvalidArgument("length must be positive".into()));
    }
    let op = Operator::new(spec)?;
    let n = op.sqrt_d.len();
    if n > 4096 {
        return Err(Error::TooLarge { work: n as u128, budget: 4096 });
    }
    let diag: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut v = vec![0.0; n];
            v[k] = 1.0;
            let mut w = Vec::with_capacity(n);
            for _ in 0..length {
                op.apply(&v, &mut w);
                std::mem::swap(&mut v, &mut w);
            }
            v[k]
        })
        .collect();
    Ok(kahan(diag).ln() + length as f64 * op.shift)
}

/// The same torus summed configuration by configuration.
pub fn brute_force_log_trace(spec: &TransferSpec, length: u32) -> Result<f64> {
    if length == 0 || spec.width == 0 {
        return Err(Error::InvalidArgument("width and length must be positive".into()));
    }
    let (lo, hi) = spec.range();
    let r = (hi - lo + 1) as usize;
    let w = spec.width as usize;
    let l = length as usize;
    let cells = (w * l) as u32;
    let total = (r as u128).checked_pow(cells).unwrap_or(u128::MAX);
    if total > crate::exact::DEFAULT_BUDGET {
        return Err(Error::TooLarge { work: total, budget: crate::exact::DEFAULT_BUDGET });
    }
    let beta = spec.params.beta();
    let chunks: Vec<f64> = (0..r)
        .into_par_iter()
        .map(|first| {
            let mut hs = vec![0i32; w * l];
            let mut terms = Vec::new();
            let per = total as usize / r;
            for k in 0..per {
                decode(k * r + first, lo, r, &mut hs);
                let mut lw = 0.0;
                for c in 0..l {
                    let col = &hs[c * w..(c + 1) * w];
                    lw += column_log_weight(col, spec);
                    let next = (c + 1) % l;
                    for i in 0..w {
                        lw -= beta * (hs[c * w + i] - hs[next * w + i]).abs() as f64;
                    }
                }
                terms.push(lw);
            }
            log_sum_exp(&terms)
        })
        .collect();
    Ok(log_sum_exp(&chunks))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessFreeEnergy {
    pub u: f64,
    pub f_wet: f64,
    pub f_free: f64,
    pub fbar: f64,
}

fn excess_spec(beta: f64, u: f64, width: u32, h_max: u32, ensemble: EnsembleSpec) -> Result<TransferSpec> {
    let params = ModelParams::with_u(beta, u)?;
    Ok(TransferSpec::new(width, h_max, params, ensemble).with_side(SideBoundary::Periodic))
}

/// f_W(wetting at h_w + u) - f_W(free), both on periodic strips. At finite
/// W this carries an offset; subtract the u = 0 value before comparing.
pub fn excess_free_energy(beta: f64, u: f64, width: u32, h_max: u32, tol: f64) -> Result<ExcessFreeEnergy> {
    if !(-0.5..=1.0).contains(&u) {
        return Err(Error::InvalidArgument(format!("u must lie in [-0.5, 1], got {u}")));
    }
    let h = formulas::wetting_critical_point(beta)? + u;
    let wet = excess_spec(beta, u, width, h_max, EnsembleSpec::Wetting { h })?;
    let free = excess_spec(beta, u, width, h_max, EnsembleSpec::Free { boundary_level: 0 })?;
    let f_wet = strip_free_energy(&wet, tol)?;
    let f_free = strip_free_energy(&free, tol)?;
    Ok(ExcessFreeEnergy { u, f_wet, f_free, fbar: f_wet - f_free })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinningBracket {
    pub lo: f64,
    pub hi: f64,
    pub threshold: f64,
    pub contact_lo: f64,
    pub contact_hi: f64,
    pub evaluations: usize,
}

/// Contact fraction of the half-line chain j ≥ 0 with weights e^{-β|j-j'|}
/// and reward e^h at 0.
pub fn one_dimensional_contact(beta: f64, h: f64, h_max: u32) -> Result<f64> {
    let params = ModelParams::with_h(beta, h)?;
    let spec = TransferSpec::new(1, h_max, params, EnsembleSpec::Wetting { h }).with_side(SideBoundary::Periodic);
    strip_contact_fraction(&spec, &PowerOptions { tol: 1e-14, residual_tol: 1e-10, max_iter: 20 * DEFAULT_MAX_ITER })
}

/// Locates the pinning transition of the 1D chain: the first grid interval
/// on which the contact fraction crosses 2/h_max, refined by bisection.
pub fn one_dimensional_wetting_check(beta: f64, h_grid: &[f64], h_max: u32) -> Result<PinningBracket> {
    if h_max < 200 {
        return Err(Error::InvalidArgument("h_max must be at least 200".into()));
    }
    if h_grid.len() < 2 || h_grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::InvalidArgument("h grid must be strictly increasing with two or more points".into()));
    }
    let threshold = 2.0 / h_max as f64;
    let mut evaluations = 0;
    let mut eval = |h: f64| -> Result<f64> {
        evaluations += 1;
        one_dimensional_contact(beta, h, h_max)
    };
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for &h in h_grid {
        let c = eval(h)?;
        if c >= threshold {
            match prev {
                Some(p) => bracket = Some((p, (h, c))),
                None => {
                    return Err(Error::InvalidArgument("contact fraction already above threshold at the grid start".into()))
                }
            }
            break;
        }
        prev = Some((h, c));
    }
    let ((mut lo, mut c_lo), (mut hi, mut c_hi)) =
        bracket.ok_or_else(|| Error::InvalidArgument("grid does not reach the threshold".into()))?;
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        let c = eval(mid)?;
        if c >= threshold {
            hi = mid;
            c_hi = c;
        } else {
            lo = mid;
            c_lo = c;
        }
    }
    Ok(PinningBracket { lo, hi, threshold, contact_lo: c_lo, contact_hi: c_hi, evaluations })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoIntegral {
    pub delta_f: f64,
    /// Present when every point carries a standard error.
    pub stderr: Option<f64>,
}

/// Trapezoidal ∫ c(h) dh over the grid.
pub fn thermo_integration(h_grid: &[f64], values: &[EstimateSummary]) -> Result<ThermoIntegral> {
    if h_grid.len() != values.len() {
        return Err(Error::InvalidArgument("grid and values differ in length".into()));
    }
    if h_grid.len() < 2 || h_grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::InvalidArgument("h grid must be strictly increasing with two or more points".into()));
    }
    let n = h_grid.len();
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i > 0 { h_grid[i] - h_grid[i - 1] } else { 0.0 };
            let right = if i + 1 < n { h_grid[i + 1] - h_grid[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    let delta_f = kahan(weights.iter().zip(values).map(|(w, v)| w * v.mean));
    let stderr = values
        .iter()
        .zip(&weights)
        .map(|(v, w)| v.stderr.map(|s| (w * s).powi(2)))
        .sum::<Option<f64>>()
        .map(f64::sqrt);
    Ok(ThermoIntegral { delta_f, stderr })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub u: f64,
    /// fbar_W(u) - fbar_W(0), one entry per width.
    pub fbar: Vec<f64>,
    pub f_wet: Vec<f64>,
    pub f_free: Vec<f64>,
    pub f_printed: f64,
    pub f_derived: f64,
    /// fbar / F_printed per width (NaN where F vanishes).
    pub ratio: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub beta: f64,
    pub widths: Vec<u32>,
    pub h_max: u32,
    pub rows: Vec<ComparisonRow>,
    pub caveat: String,
}

/// Baseline-subtracted strip excess free energies next to the layering
/// function under both denominator conventions.
pub fn compare_to_f(
    beta: f64,
    u_grid: &[f64],
    alpha1: f64,
    alpha2: f64,
    widths: &[u32],
    h_max: u32,
    tol: f64,
) -> Result<ComparisonReport> {
    let j = formulas::coupling(beta);
    let printed = LayeringCoefficients::new(alpha1, alpha2, DenominatorConvention::AsPrinted)?;
    let derived = LayeringCoefficients::new(alpha1, alpha2, DenominatorConvention::AsDerived)?;
    let h_w = formulas::wetting_critical_point(beta)?;
    // the free strip does not depend on u
    let mut free = Vec::new();
    let mut base = Vec::new();
    for &w in widths {
        let ff = strip_free_energy(&excess_spec(beta, 0.0, w, h_max, EnsembleSpec::Free { boundary_level: 0 })?, tol)?;
        let f0 = strip_free_energy(&excess_spec(beta, 0.0, w, h_max, EnsembleSpec::Wetting { h: h_w })?, tol)?;
        free.push(ff);
        base.push(f0 - ff);
    }
    let mut rows = Vec::new();
    for &u in u_grid {
        if !(-0.5..=1.0).contains(&u) {
            return Err(Error::InvalidArgument(format!("u must lie in [-0.5, 1], got {u}")));
        }
        let mut fbar = Vec::new();
        let mut f_wet = Vec::new();
        for (k, &w) in widths.iter().enumerate() {
            let fw = strip_free_energy(&excess_spec(beta, u, w, h_max, EnsembleSpec::Wetting { h: h_w + u })?, tol)?;
            fbar.push(fw - free[k] - base[k]);
            f_wet.push(fw);
        }
        let f_free = free.clone();
        let f_printed = formulas::layering_f_auto(j, u, &printed).map(|v| v.value).unwrap_or(0.0);
        let f_derived = formulas::layering_f_auto(j, u, &derived).map(|v| v.value).unwrap_or(0.0);
        let ratio = fbar.iter().map(|&f| if f_printed > 0.0 { f / f_printed } else { f64::NAN }).collect();
        rows.push(ComparisonRow { u, fbar, f_wet, f_free, f_printed, f_derived, ratio });
    }
    Ok(ComparisonReport {
        beta,
        widths: widths.to_vec(),
        h_max,
        rows,
        caveat: "finite-width periodic strips with heights capped at h_max; fbar is shifted by its u = 0 value \
                 and the layering asymptotics only apply at large beta and width"
            .into(),
    })
}
