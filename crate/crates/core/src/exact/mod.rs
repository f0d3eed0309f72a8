//! Exact partition functions, marginals and conditional laws on small
//! regions, with heights truncated to a window whose width is certified by
//! doubling.

pub mod brute;
mod dp;
mod law;

use std::collections::BTreeSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulas::{self, ModelParams};
use crate::lattice::{connected_components, HeightField, Region, Site};
use crate::numeric::{kahan, log_sum_exp};

pub(crate) use dp::SumProblem;
pub use law::{intensity_law_check, unit_contour_presence, IntensityLaw, UnitContourPresence};

pub const DEFAULT_BUDGET: u128 = 100_000_000;
const MAX_H: u32 = 1 << 20;
/// Largest region for operations that sum over all subsets of sites.
pub const MAX_SUBSET_SITES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TruncationMode {
    Fixed,
    AdaptiveDoubling,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub h_max: u32,
    pub tol: f64,
    pub mode: TruncationMode,
    /// Cap on summation work per site step (frontier states × height range).
    pub budget: u128,
}

impl TruncationPolicy {
    pub fn fixed(h_max: u32) -> Self {
        TruncationPolicy { h_max, tol: 0.0, mode: TruncationMode::Fixed, budget: DEFAULT_BUDGET }
    }

    pub fn adaptive(h_max: u32, tol: f64) -> Self {
        TruncationPolicy { h_max, tol, mode: TruncationMode::AdaptiveDoubling, budget: DEFAULT_BUDGET }
    }

    /// h_max = 12 for β ≥ 1 (scaled up as 12/β below), doubling to tol 1e-12.
    pub fn default_for(beta: f64) -> Self {
        let h = if beta >= 1.0 { 12 } else { (12.0 / beta).ceil().min(4096.0) as u32 };
        Self::adaptive(h, 1e-12)
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.h_max == 0 {
            return Err(Error::InvalidArgument("h_max must be positive".into()));
        }
        if self.mode == TruncationMode::AdaptiveDoubling && !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("adaptive truncation needs tol > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EnsembleSpec {
    /// Heights in [n - h_max, n + h_max] with boundary level n.
    Free { boundary_level: i32 },
    /// Heights in [0, h_max], boundary 0.
    Positive,
    /// Heights in [0, h_max], boundary 0, reward h per site at height 0.
    Wetting { h: f64 },
}

impl EnsembleSpec {
    pub fn boundary_level(&self) -> i32 {
        match *self {
            EnsembleSpec::Free { boundary_level } => boundary_level,
            _ => 0,
        }
    }

    pub fn range(&self, h_max: u32) -> (i32, i32) {
        let h = h_max as i32;
        match *self {
            EnsembleSpec::Free { boundary_level: n } => (n - h, n + h),
            _ => (0, h),
        }
    }

    pub fn pin(&self) -> Option<(i32, f64)> {
        match *self {
            EnsembleSpec::Wetting { h } => Some((0, h)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let EnsembleSpec::Wetting { h } = *self {
            if !h.is_finite() {
                return Err(Error::InvalidArgument("wetting reward must be finite".into()));
            }
        }
        Ok(())
    }
}

/// The SOS energy of a field.
pub fn hamiltonian(field: &HeightField) -> u64 {
    brute::energy(field.region(), field.heights(), field.boundary_level())
}

pub(crate) fn problem<'a>(
    region: &'a Region,
    beta: f64,
    ensemble: &EnsembleSpec,
    h_max: u32,
    budget: u128,
) -> SumProblem<'a> {
    let mut p = SumProblem::new(region, beta, ensemble.boundary_level(), ensemble.range(h_max), budget);
    p.pin = ensemble.pin();
    p
}

/// A log-partition function together with the height cap it was certified at.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    /// Value at the last (largest) cap evaluated.
    pub value: f64,
    /// Smallest cap at which the value had settled to tolerance.
    pub h_max: u32,
}

/// Evaluates log Z and certifies the truncation.
pub fn certify(region: &Region, params: &ModelParams, ensemble: &EnsembleSpec, trunc: &TruncationPolicy) -> Result<Certified> {
    trunc.validate()?;
    ensemble.validate()?;
    let eval = |h: u32| problem(region, params.beta(), ensemble, h, trunc.budget).log_sum();
    match trunc.mode {
        TruncationMode::Fixed => Ok(Certified { value: eval(trunc.h_max)?, h_max: trunc.h_max }),
        TruncationMode::AdaptiveDoubling => {
            let mut h = trunc.h_max;
            let mut prev = eval(h)?;
            loop {
                if h >= MAX_H {
                    return Err(Error::TruncationFailure { h_max: h });
                }
                let next = eval(2 * h)?;
                if (next - prev).abs() < trunc.tol * (1.0 + next.abs()) {
                    return Ok(Certified { value: next, h_max: h });
                }
                h *= 2;
                prev = next;
            }
        }
    }
}

/// log Σ exp(-βH(φ)) (times e^{h·#zeros} for wetting) over truncated fields.
pub fn log_partition(region: &Region, params: &ModelParams, ensemble: &EnsembleSpec, trunc: &TruncationPolicy) -> Result<f64> {
    Ok(certify(region, params, ensemble, trunc)?.value)
}

fn region_of(sites: &[Site]) -> Result<Region> {
    if sites.is_empty() {
        return Err(Error::InvalidArgument("empty site set".into()));
    }
    Ok(Region::from_sites(sites.iter().copied()))
}

fn log_positive_at(sites: &[Site], beta: f64, h: u32, budget: u128) -> Result<f64> {
    let r = Region::from_sites(sites.iter().copied());
    problem(&r, beta, &EnsembleSpec::Positive, h, budget).log_sum()
}

/// H(A) = Σ over components of log Z⁺, at a fixed cap; 0 for the empty set.
fn log_positive_sets(sites: &[Site], beta: f64, h: u32, budget: u128) -> Result<f64> {
    let mut total = 0.0;
    for comp in connected_components(sites) {
        total += log_positive_at(&comp, beta, h, budget)?;
    }
    Ok(total)
}

/// H̄(Γ) = Σ over components of log Z⁺ - |component|·H1, at a fixed cap.
fn excess_at(sites: &[Site], beta: f64, h: u32, budget: u128) -> Result<f64> {
    let h1 = formulas::wetting_critical_point(beta)?;
    let mut total = 0.0;
    for comp in connected_components(sites) {
        total += log_positive_at(&comp, beta, h, budget)? - comp.len() as f64 * h1;
    }
    Ok(total)
}

/// H̄(Γ) = H(Γ) - |Γ| log(1/(1-J²)), summed over connected components.
pub fn excess_pair_energy(gamma: &[Site], params: &ModelParams, trunc: &TruncationPolicy) -> Result<f64> {
    let h1 = formulas::wetting_critical_point(params.beta())?;
    let mut total = 0.0;
    for comp in connected_components(gamma) {
        let r = Region::from_sites(comp.iter().copied());
        let z = log_partition(&r, params, &EnsembleSpec::Positive, trunc)?;
        total += z - comp.len() as f64 * h1;
    }
    Ok(total)
}

fn subset_sites(region: &Region, mask: u64) -> Vec<Site> {
    region
        .sites()
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, &s)| s)
        .collect()
}

fn check_subset_size(region: &Region) -> Result<()> {
    if region.len() > MAX_SUBSET_SITES {
        return Err(Error::TooLarge { work: 1u128 << region.len(), budget: 1u128 << MAX_SUBSET_SITES });
    }
    Ok(())
}

/// log Z with sites in `mask` restricted to heights ≥ t and the others to ≤ t-1.
fn log_split(mut p: SumProblem<'_>, mask: u64, t: i32) -> Result<f64> {
    for i in 0..p.region.len() {
        if mask >> i & 1 == 1 {
            p.restrict(i, t, i32::MAX);
        } else {
            p.restrict(i, i32::MIN, t - 1);
        }
    }
    p.log_sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityGap {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub h_max: u32,
}

/// Both sides of log Z^h = log Σ_φ e^{-βH(φ) + h|A| - H(A)}, A = φ^{-1}(-∞,0].
///
/// The right side is summed over the possible sets A, each term being a
/// free-field sum with A forced to non-positive and its complement to
/// positive heights. The reward is `params.h()`.
pub fn wetting_identity_check(region: &Region, params: &ModelParams, trunc: &TruncationPolicy) -> Result<IdentityGap> {
    check_subset_size(region)?;
    let beta = params.beta();
    let wet = EnsembleSpec::Wetting { h: params.h() };
    let h = certify(region, params, &wet, trunc)?.h_max;
    let lhs = problem(region, beta, &wet, h, trunc.budget).log_sum()?;
    let free = EnsembleSpec::Free { boundary_level: 0 };
    let n = region.len();
    let terms: Vec<Result<f64>> = (0..1u64 << n)
        .into_par_iter()
        .map(|mask| {
            let a = subset_sites(region, mask);
            let ha = log_positive_sets(&a, beta, h, trunc.budget)?;
            // A is the set of sites at height ≤ 0: complement of {φ ≥ 1}
            let z = log_split(problem(region, beta, &free, h, trunc.budget), !mask & ((1u64 << n) - 1), 1)?;
            Ok(params.h() * a.len() as f64 - ha + z)
        })
        .collect();
    let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
    let rhs = log_sum_exp(&terms);
    Ok(IdentityGap { lhs, rhs, gap: (lhs - rhs).abs(), h_max: h })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryShift {
    pub delta: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Compares log(Z^h/Z) with log E^{bc=n}[e^{u|A| - H̄(A)}], A = φ^{-1}(-∞,0],
/// where h = h_w + u is taken from `params`. The bound is β·n·(number of
/// boundary edges), i.e. 4nNβ on an N×N box.
pub fn boundary_shift_check(region: &Region, params: &ModelParams, n: i32, trunc: &TruncationPolicy) -> Result<BoundaryShift> {
    check_subset_size(region)?;
    let beta = params.beta();
    let free0 = EnsembleSpec::Free { boundary_level: 0 };
    let wet = EnsembleSpec::Wetting { h: params.h() };
    let freen = EnsembleSpec::Free { boundary_level: n };
    let h = certify(region, params, &free0, trunc)?
        .h_max
        .max(certify(region, params, &wet, trunc)?.h_max)
        .max(certify(region, params, &freen, trunc)?.h_max);
    let lzh = problem(region, beta, &wet, h, trunc.budget).log_sum()?;
    let lz = problem(region, beta, &free0, h, trunc.budget).log_sum()?;
    let lzn = problem(region, beta, &freen, h, trunc.budget).log_sum()?;
    let len = region.len();
    let terms: Vec<Result<f64>> = (0..1u64 << len)
        .into_par_iter()
        .map(|mask| {
            let a = subset_sites(region, mask);
            let hbar = if a.is_empty() { 0.0 } else { excess_at(&a, beta, h, trunc.budget)? };
            let z = log_split(problem(region, beta, &freen, h, trunc.budget), !mask & ((1u64 << len) - 1), 1)?;
            Ok(params.u() * a.len() as f64 - hbar + z)
        })
        .collect();
    let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
    let rhs = log_sum_exp(&terms) - lzn;
    let delta = ((lzh - lz) - rhs).abs();
    let bound = beta * n.unsigned_abs() as f64 * region.total_boundary_edges() as f64;
    Ok(BoundaryShift { delta, bound, holds: delta <= bound })
}

/// G^{k,u}(Γ) = log E⁺_Γ[exp(u|S| - H̄(S))], S = φ^{-1}[k,∞).
pub fn g_exact(gamma: &[Site], params: &ModelParams, k: u32, u: f64, trunc: &TruncationPolicy) -> Result<f64> {
    let region = region_of(gamma)?;
    if !region.is_connected() {
        return Err(Error::InvalidArgument("G is defined for connected sets".into()));
    }
    check_subset_size(&region)?;
    let beta = params.beta();
    let pos = EnsembleSpec::Positive;
    let cert = certify(&region, params, &pos, trunc)?;
    let h = cert.h_max;
    let lz = problem(&region, beta, &pos, h, trunc.budget).log_sum()?;
    let n = region.len();
    let terms: Vec<Result<f64>> = (0..1u64 << n)
        .into_par_iter()
        .map(|mask| {
            let s = subset_sites(&region, mask);
            let hbar = if s.is_empty() { 0.0 } else { excess_at(&s, beta, h, trunc.budget)? };
            let z = log_split(problem(&region, beta, &pos, h, trunc.budget), mask, k as i32)?;
            Ok(u * s.len() as f64 - hbar + z)
        })
        .collect();
    let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
    Ok(log_sum_exp(&terms) - lz)
}

/// Whether G^{k,u}(Γ) < 0.
pub fn uppg_sign_check(gamma: &[Site], params: &ModelParams, k: u32, u: f64, trunc: &TruncationPolicy) -> Result<bool> {
    Ok(g_exact(gamma, params, k, u, trunc)? < 0.0)
}

fn indices(region: &Region, sites: &[Site]) -> Result<Vec<usize>> {
    sites
        .iter()
        .map(|&s| {
            region
                .index_of(s)
                .ok_or_else(|| Error::InvalidArgument(format!("site ({}, {}) outside region", s.x, s.y)))
        })
        .collect()
}

fn check_pattern(sites: &[Site]) -> Result<()> {
    if sites.is_empty() || sites.len() > 3 {
        return Err(Error::InvalidArgument("tail events use one to three sites".into()));
    }
    if connected_components(sites).len() != 1 || sites.iter().collect::<BTreeSet<_>>().len() != sites.len() {
        return Err(Error::InvalidArgument("tail sites must be distinct and connected".into()));
    }
    Ok(())
}

/// P[min over `sites` of φ ≥ n] under the free measure with boundary 0.
pub fn site_tail_prob(region: &Region, params: &ModelParams, sites: &[Site], n: i32, trunc: &TruncationPolicy) -> Result<f64> {
    check_pattern(sites)?;
    let idx = indices(region, sites)?;
    let free = EnsembleSpec::Free { boundary_level: 0 };
    let cert = certify(region, params, &free, trunc)?;
    tail_at(region, params.beta(), &idx, n, cert.h_max, trunc.budget)
}

fn tail_at(region: &Region, beta: f64, idx: &[usize], n: i32, h: u32, budget: u128) -> Result<f64> {
    let free = EnsembleSpec::Free { boundary_level: 0 };
    let lz = problem(region, beta, &free, h, budget).log_sum()?;
    let mut p = problem(region, beta, &free, h, budget);
    for &i in idx {
        p.restrict(i, n, i32::MAX);
    }
    Ok((p.log_sum()? - lz).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftInequality {
    pub p_n: f64,
    pub p_next: f64,
    pub ratio: f64,
    /// e^{-β·cost}, cost = number of edges leaving the site set.
    pub bound: f64,
    /// P[φ(x) ≥ 0] for the first site.
    pub p_nonneg: f64,
    pub holds: bool,
}

/// P[min φ ≥ n+1] ≥ e^{-β·cost} P[min φ ≥ n], and P[φ(x) ≥ 0] ≥ 1/2.
pub fn shift_inequality_check(region: &Region, params: &ModelParams, sites: &[Site], n: i32, trunc: &TruncationPolicy) -> Result<ShiftInequality> {
    check_pattern(sites)?;
    let idx = indices(region, sites)?;
    let free = EnsembleSpec::Free { boundary_level: 0 };
    let h = certify(region, params, &free, trunc)?.h_max;
    let beta = params.beta();
    let p_n = tail_at(region, beta, &idx, n, h, trunc.budget)?;
    let p_next = tail_at(region, beta, &idx, n + 1, h, trunc.budget)?;
    let p_nonneg = tail_at(region, beta, &idx[..1], 0, h, trunc.budget)?;
    let set: BTreeSet<Site> = sites.iter().copied().collect();
    let cost = sites
        .iter()
        .flat_map(|s| s.neighbors4())
        .filter(|t| !set.contains(t))
        .count();
    let bound = (-beta * cost as f64).exp();
    let ratio = p_next / p_n;
    Ok(ShiftInequality { p_n, p_next, ratio, bound, p_nonneg, holds: ratio >= bound && p_nonneg >= 0.5 })
}

/// q(φ, x, n) bins: 0 when φ(x) < n, else the size of the component of x in
/// {φ ≥ n}, with 3 standing for "3 or more".
pub fn q_bins(region: &Region, heights: &[i32], n: i32) -> Vec<usize> {
    let up: Vec<Site> = region
        .sites()
        .iter()
        .zip(heights)
        .filter(|(_, &h)| h >= n)
        .map(|(&s, _)| s)
        .collect();
    let mut out = vec![0usize; region.len()];
    for comp in connected_components(&up) {
        let b = comp.len().min(3);
        for s in comp {
            out[region.index_of(s).unwrap()] = b;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterStat {
    pub site: Site,
    /// P[q = 0], P[q = 1], P[q = 2], P[q ≥ 3]
    pub probs: [f64; 4],
}

/// Exact law of q(φ, x, n) at every site, free measure with boundary 0.
pub fn cluster_statistics(region: &Region, params: &ModelParams, n: i32, trunc: &TruncationPolicy) -> Result<Vec<ClusterStat>> {
    check_subset_size(region)?;
    let free = EnsembleSpec::Free { boundary_level: 0 };
    let h = certify(region, params, &free, trunc)?.h_max;
    let beta = params.beta();
    let lz = problem(region, beta, &free, h, trunc.budget).log_sum()?;
    let len = region.len();
    let parts: Vec<Result<(f64, Vec<usize>)>> = (0..1u64 << len)
        .into_par_iter()
        .map(|mask| {
            let lp = log_split(problem(region, beta, &free, h, trunc.budget), mask, n)?;
            let up = subset_sites(region, mask);
            let mut bins = vec![0usize; len];
            for comp in connected_components(&up) {
                let b = comp.len().min(3);
                for s in comp {
                    bins[region.index_of(s).unwrap()] = b;
                }
            }
            Ok(((lp - lz).exp(), bins))
        })
        .collect();
    let mut acc = vec![[crate::numeric::KahanSum::new(); 4]; len];
    for part in parts {
        let (p, bins) = part?;
        for (i, &b) in bins.iter().enumerate() {
            acc[i][b].add(p);
        }
    }
    Ok(region
        .sites()
        .iter()
        .zip(acc)
        .map(|(&site, a)| ClusterStat { site, probs: [a[0].value(), a[1].value(), a[2].value(), a[3].value()] })
        .collect())
}

/// A monotone function of the field: the minimum of the heights on a site
/// list, or its negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    Min(Vec<Site>),
    NegMin(Vec<Site>),
}

impl Monotone {
    fn parts(&self) -> (&[Site], f64) {
        match self {
            Monotone::Min(s) => (s, 1.0),
            Monotone::NegMin(s) => (s, -1.0),
        }
    }
}

/// Cov(f, g) under the exact FREE or WETTING measure.
///
/// Uses Cov(X,Y) = Σ_{s,t} P[X≥s, Y≥t] - P[X≥s]P[Y≥t] for integer X, Y.
pub fn fkg_check(region: &Region, params: &ModelParams, ensemble: &EnsembleSpec, trunc: &TruncationPolicy, f: &Monotone, g: &Monotone) -> Result<f64> {
    if matches!(ensemble, EnsembleSpec::Positive) {
        return Err(Error::InvalidArgument("FKG check runs on the FREE or WETTING measure".into()));
    }
    let (fs, fsign) = f.parts();
    let (gs, gsign) = g.parts();
    if fs.is_empty() || gs.is_empty() {
        return Err(Error::InvalidArgument("empty site list".into()));
    }
    let fi = indices(region, fs)?;
    let gi = indices(region, gs)?;
    let h = certify(region, params, ensemble, trunc)?.h_max;
    let beta = params.beta();
    let lz = problem(region, beta, ensemble, h, trunc.budget).log_sum()?;
    let (lo, hi) = ensemble.range(h);
    let prob = |cons: &[(usize, i32)]| -> Result<f64> {
        let mut p = problem(region, beta, ensemble, h, trunc.budget);
        for &(i, t) in cons {
            p.restrict(i, t, i32::MAX);
        }
        Ok((p.log_sum()? - lz).exp())
    };
    let levels: Vec<i32> = (lo + 1..=hi).collect();
    let pf: Vec<f64> = levels
        .iter()
        .map(|&s| prob(&fi.iter().map(|&i| (i, s)).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let pg: Vec<f64> = levels
        .iter()
        .map(|&t| prob(&gi.iter().map(|&i| (i, t)).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..levels.len()).flat_map(|a| (0..levels.len()).map(move |b| (a, b))).collect();
    let terms: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut cons: Vec<(usize, i32)> = fi.iter().map(|&i| (i, levels[a])).collect();
            cons.extend(gi.iter().map(|&i| (i, levels[b])));
            Ok(prob(&cons)? - pf[a] * pg[b])
        })
        .collect();
    let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
    Ok(fsign * gsign * kahan(terms))
}

/// E|φ^{-1}(0)| / |Λ| under the wetting measure with reward `params.h()`.
pub fn contact_fraction(region: &Region, params: &ModelParams, trunc: &TruncationPolicy) -> Result<f64> {
    let wet = EnsembleSpec::Wetting { h: params.h() };
    let h = certify(region, params, &wet, trunc)?.h_max;
    let beta = params.beta();
    let lz = problem(region, beta, &wet, h, trunc.budget).log_sum()?;
    let ps: Vec<f64> = (0..region.len())
        .into_par_iter()
        .map(|i| {
            let mut p = problem(region, beta, &wet, h, trunc.budget);
            p.restrict(i, 0, 0);
            p.log_sum().map(|v| (v - lz).exp())
        })
        .collect::<Result<_>>()?;
    Ok(kahan(ps) / region.len() as f64)
}

/// Joint law of heights at `sites` as (heights, probability) pairs, in
/// lexicographic order of the height tuples.
pub fn joint_marginal(region: &Region, params: &ModelParams, ensemble: &EnsembleSpec, sites: &[Site], trunc: &TruncationPolicy) -> Result<Vec<(Vec<i32>, f64)>> {
    let idx = indices(region, sites)?;
    let h = certify(region, params, ensemble, trunc)?.h_max;
    let p = problem(region, params.beta(), ensemble, h, trunc.budget);
    let lw = p.log_joint(&idx)?.ok_or_else(|| Error::InvalidArgument("empty support".into()))?;
    let lz = log_sum_exp(&lw);
    let (lo, hi) = ensemble.range(h);
    let r = (hi - lo + 1) as usize;
    Ok(lw
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let mut rem = k;
            let mut hs = vec![0i32; idx.len()];
            for d in (0..idx.len()).rev() {
                hs[d] = lo + (rem % r) as i32;
                rem /= r;
            }
            (hs, (v - lz).exp())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::lattice::build_rect_region;

    #[test]
    fn hamiltonian_examples() {
        let r = Arc::new(build_rect_region(3, 3).unwrap());
        let mut f = HeightField::flat(r.clone(), 0);
        assert_eq!(hamiltonian(&f), 0);
        f.set(Site::new(2, 2), 2).unwrap();
        assert_eq!(hamiltonian(&f), 8);
        let one = Arc::new(build_rect_region(1, 1).unwrap());
        for j in -3..=3 {
            let f = HeightField::new(one.clone(), vec![j], 0).unwrap();
            assert_eq!(hamiltonian(&f), 4 * j.unsigned_abs() as u64);
        }
    }

    #[test]
    fn small_partition_functions() {
        let p = ModelParams::new(1.0).unwrap();
        let t = TruncationPolicy::default_for(1.0);
        let j: f64 = (-2.0f64).exp();
        let single = Region::from_sites([Site::new(0, 0)]);
        let z = log_partition(&single, &p, &EnsembleSpec::Positive, &t).unwrap();
        assert!((z - (-(-j * j).ln_1p())).abs() < 1e-13);
        let pair = Region::from_sites([Site::new(0, 0), Site::new(1, 0)]);
        let z = log_partition(&pair, &p, &EnsembleSpec::Positive, &t).unwrap();
        assert!((z - 0.0391172).abs() < 1e-7);
        let z = log_partition(&single, &p, &EnsembleSpec::Free { boundary_level: 0 }, &t).unwrap();
        assert!((z - ((1.0 + j * j) / (1.0 - j * j)).ln()).abs() < 1e-13);
        assert!((z - 0.0366354).abs() < 1e-7);
    }

    #[test]
    fn frontier_sum_matches_enumeration() {
        let r = build_rect_region(2, 3).unwrap();
        for ens in [EnsembleSpec::Free { boundary_level: 1 }, EnsembleSpec::Wetting { h: 0.7 }, EnsembleSpec::Positive] {
            let p = problem(&r, 0.8, &ens, 3, DEFAULT_BUDGET);
            let ranges = vec![ens.range(3); r.len()];
            let b = brute::log_sum(&r, 0.8, ens.boundary_level(), &ranges, ens.pin());
            assert!((p.log_sum().unwrap() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_refuses() {
        let r = build_rect_region(3, 3).unwrap();
        let p = ModelParams::new(1.0).unwrap();
        let t = TruncationPolicy::fixed(12).with_budget(1000);
        assert!(matches!(
            log_partition(&r, &p, &EnsembleSpec::Free { boundary_level: 0 }, &t),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn q_bins_on_small_field() {
        let r = build_rect_region(3, 1).unwrap();
        assert_eq!(q_bins(&r, &[1, 1, 0], 1), vec![2, 2, 0]);
        assert_eq!(q_bins(&r, &[1, 0, 1], 1), vec![1, 0, 1]);
        assert_eq!(q_bins(&r, &[5, 5, 5], 1), vec![3, 3, 3]);
    }
}
