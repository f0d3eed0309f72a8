//! Single-site heat-bath Monte Carlo for the free and wetting ensembles.

mod kernel;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kernel::HeatBath;

use crate::error::{Error, Result};
use crate::exact::{q_bins, EnsembleSpec};
use crate::formulas::ModelParams;
use crate::lattice::{build_rect_region, Region, Site};

/// Batch means below this count give no error bar.
pub const MIN_BATCHES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub nx: u32,
    pub ny: u32,
    pub params: ModelParams,
    pub ensemble: EnsembleSpec,
    pub seed: u64,
    /// Total sweeps per chain, burn-in included.
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub chains: u32,
    /// Batches per chain.
    pub batches: u32,
}

impl ChainConfig {
    pub fn new(nx: u32, ny: u32, params: ModelParams, ensemble: EnsembleSpec) -> Self {
        ChainConfig { nx, ny, params, ensemble, seed: 0, sweeps: 100_000, burn_in: 1_000, thin: 1, chains: 1, batches: 32 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidArgument("region dimensions must be positive".into()));
        }
        if self.sweeps == 0 || self.thin == 0 || self.chains == 0 || self.batches == 0 {
            return Err(Error::InvalidArgument("sweeps, thin, chains and batches must be positive".into()));
        }
        if self.burn_in >= self.sweeps {
            return Err(Error::InvalidArgument(format!(
                "burn_in ({}) must be below sweeps ({})",
                self.burn_in, self.sweeps
            )));
        }
        if self.recorded() == 0 {
            return Err(Error::InvalidArgument("thinning leaves no recorded sweeps".into()));
        }
        if let EnsembleSpec::Wetting { h } = self.ensemble {
            if !h.is_finite() {
                return Err(Error::InvalidArgument("wetting reward must be finite".into()));
            }
        }
        Ok(())
    }

    /// Recorded sweeps per chain.
    pub fn recorded(&self) -> u64 {
        (self.sweeps - self.burn_in.min(self.sweeps)) / self.thin.max(1)
    }

    pub fn region(&self) -> Result<Region> {
        build_rect_region(self.nx as i64, self.ny as i64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub mean: f64,
    /// Batch-means standard error; absent with fewer than 8 batches.
    pub stderr: Option<f64>,
    pub n_batches: usize,
    pub raw_count: u64,
}

impl EstimateSummary {
    /// |mean - target| in units of stderr, if there is one.
    pub fn z_score(&self, target: f64) -> Option<f64> {
        self.stderr.map(|s| {
            let d = (self.mean - target).abs();
            if s > 0.0 {
                d / s
            } else if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
    }
}

fn pin_of(ensemble: &EnsembleSpec) -> Option<f64> {
    match *ensemble {
        EnsembleSpec::Free { .. } => None,
        EnsembleSpec::Positive => Some(0.0),
        EnsembleSpec::Wetting { h } => Some(h),
    }
}

/// The exact conditional law of one height given its neighbours' heights
/// (boundary contributions included as entries).
pub fn conditional_law(neighbors: &[i32], beta: f64, ensemble: &EnsembleSpec) -> HeatBath {
    HeatBath::new(neighbors, beta, pin_of(ensemble))
}

/// One draw from [`conditional_law`].
pub fn conditional_height_sample<R: Rng + ?Sized>(
    neighbors: &[i32],
    beta: f64,
    ensemble: &EnsembleSpec,
    rng: &mut R,
) -> i32 {
    let u = 1.0 - rng.gen::<f64>();
    conditional_law(neighbors, beta, ensemble).quantile(u) as i32
}

/// A heat-bath chain on a fixed region.
#[derive(Clone, Debug)]
pub struct Chain {
    region: Arc<Region>,
    beta: f64,
    boundary: i32,
    pin: Option<f64>,
    heights: Vec<i32>,
}

impl Chain {
    /// Starts from the flat field at the boundary level.
    pub fn new(region: Arc<Region>, params: &ModelParams, ensemble: &EnsembleSpec) -> Chain {
        let boundary = ensemble.boundary_level();
        let heights = vec![boundary; region.len()];
        Chain { region, beta: params.beta(), boundary, pin: pin_of(ensemble), heights }
    }

    pub fn with_heights(mut self, heights: Vec<i32>) -> Result<Chain> {
        if heights.len() != self.region.len() {
            return Err(Error::InvalidArgument("height vector does not match region".into()));
        }
        if self.pin.is_some() && heights.iter().any(|&h| h < 0) {
            return Err(Error::InvalidArgument("wetting fields must be nonnegative".into()));
        }
        self.heights = heights;
        Ok(self)
    }

    pub fn heights(&self) -> &[i32] {
        &self.heights
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// One systematic sweep in row-major order.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let mut nb: Vec<i32> = Vec::with_capacity(4);
        for i in 0..self.heights.len() {
            nb.clear();
            nb.extend(self.region.neighbors(i).iter().map(|&k| self.heights[k]));
            for _ in 0..self.region.boundary_edges(i) {
                nb.push(self.boundary);
            }
            let u = 1.0 - rng.gen::<f64>();
            self.heights[i] = HeatBath::new(&nb, self.beta, self.pin).quantile(u) as i32;
        }
    }
}

/// The generator for chain `chain` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, chain: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Runs chain number `chain`, calling `observer(sweep, heights)` after every
/// recorded sweep (past burn-in, every `thin`-th).
pub fn run_chain<F: FnMut(u64, &[i32])>(config: &ChainConfig, chain: u32, mut observer: F) -> Result<()> {
    config.validate()?;
    let region = Arc::new(config.region()?);
    let mut c = Chain::new(region, &config.params, &config.ensemble);
    let mut rng = chain_rng(config.seed, chain);
    for s in 1..=config.sweeps {
        c.sweep(&mut rng);
        if s > config.burn_in && (s - config.burn_in) % config.thin == 0 {
            observer(s, &c.heights);
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
struct Batches {
    counts: Vec<u64>,
    // sums[b * n_obs + k]
    sums: Vec<f64>,
}

fn summarize(parts: &[Batches], n_obs: usize) -> Vec<EstimateSummary> {
    (0..n_obs)
        .map(|k| {
            let mut means = Vec::new();
            let mut total = 0.0;
            let mut count = 0u64;
            for p in parts {
                for (b, &c) in p.counts.iter().enumerate() {
                    if c > 0 {
                        let s = p.sums[b * n_obs + k];
                        means.push(s / c as f64);
                        total += s;
                        count += c;
                    }
                }
            }
            let nb = means.len();
            let mean = total / count as f64;
            let stderr = (nb >= MIN_BATCHES).then(|| {
                let m = means.iter().sum::<f64>() / nb as f64;
                let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (nb - 1) as f64;
                (var / nb as f64).sqrt()
            });
            EstimateSummary { mean, stderr, n_batches: nb, raw_count: count }
        })
        .collect()
}

/// Batch-means estimates of `n_obs` observables written by `f` into its
/// output slice at every recorded sweep, pooled over all chains.
pub fn measure<F>(config: &ChainConfig, n_obs: usize, f: F) -> Result<Vec<EstimateSummary>>
where
    F: Fn(&[i32], &mut [f64]) + Sync,
{
    config.validate()?;
    let rec = config.recorded();
    let nb = (config.batches as u64).min(rec) as usize;
    let parts: Vec<Result<Batches>> = (0..config.chains)
        .into_par_iter()
        .map(|ch| {
            let mut b = Batches { counts: vec![0; nb], sums: vec![0.0; nb * n_obs] };
            let mut buf = vec![0.0; n_obs];
            let mut k = 0u64;
            run_chain(config, ch, |_, hs| {
                let bi = (k as u128 * nb as u128 / rec as u128) as usize;
                buf.iter_mut().for_each(|x| *x = 0.0);
                f(hs, &mut buf);
                b.counts[bi] += 1;
                for (acc, &v) in b.sums[bi * n_obs..(bi + 1) * n_obs].iter_mut().zip(&buf) {
                    *acc += v;
                }
                k += 1;
            })?;
            Ok(b)
        })
        .collect();
    let parts: Vec<Batches> = parts.into_iter().collect::<Result<_>>()?;
    Ok(summarize(&parts, n_obs))
}

/// Mean fraction of sites at height zero.
pub fn estimate_contact_fraction(config: &ChainConfig) -> Result<EstimateSummary> {
    if pin_of(&config.ensemble).is_none() {
        return Err(Error::InvalidArgument("contact fraction needs a wetting ensemble".into()));
    }
    let n = (config.nx * config.ny) as f64;
    let out = measure(config, 1, |hs, o| {
        o[0] = hs.iter().filter(|&&h| h == 0).count() as f64 / n;
    })?;
    Ok(out[0])
}

/// P[min over `sites` of φ ≥ n] for each n in `levels`.
pub fn estimate_tail_probabilities(config: &ChainConfig, sites: &[Site], levels: &[i32]) -> Result<Vec<EstimateSummary>> {
    let region = config.region()?;
    let idx: Vec<usize> = sites
        .iter()
        .map(|&s| region.index_of(s).ok_or_else(|| Error::InvalidArgument(format!("site {s:?} outside region"))))
        .collect::<Result<_>>()?;
    if idx.is_empty() {
        return Err(Error::InvalidArgument("no sites given".into()));
    }
    measure(config, levels.len(), |hs, o| {
        let m = idx.iter().map(|&i| hs[i]).min().unwrap();
        for (k, &n) in levels.iter().enumerate() {
            o[k] = (m >= n) as u8 as f64;
        }
    })
}

/// The central block of a box: x and y each in {⌊(N+1)/2⌋, ⌊(N+2)/2⌋}.
pub fn measurement_block(nx: u32, ny: u32) -> Vec<Site> {
    let axis = |n: u32| -> Vec<i32> {
        let mut v = vec![((n + 1) / 2) as i32, ((n + 2) / 2) as i32];
        v.dedup();
        v
    };
    let mut out = Vec::new();
    for y in axis(ny) {
        for x in axis(nx) {
            out.push(Site::new(x, y));
        }
    }
    out
}

/// Adjacent pairs inside `block`; for a single-site block, the site and its
/// east (or north) neighbour when that lies in the region.
pub fn measurement_pairs(region: &Region, block: &[Site]) -> Vec<(Site, Site)> {
    let mut pairs = Vec::new();
    for (i, &a) in block.iter().enumerate() {
        for &b in &block[i + 1..] {
            if a.l1(b) == 1 {
                pairs.push((a, b));
            }
        }
    }
    if pairs.is_empty() {
        if let Some(&a) = block.first() {
            for b in [a.offset(1, 0), a.offset(0, 1)] {
                if region.contains(b) {
                    pairs.push((a, b));
                    break;
                }
            }
        }
    }
    pairs
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    pub n: u32,
    /// P[φ(x) ≥ n], averaged over the measurement block.
    pub p1: EstimateSummary,
    /// P[min(φ(x), φ(y)) ≥ n], averaged over adjacent pairs of the block.
    pub p2: EstimateSummary,
    pub alpha1_hat: f64,
    pub alpha1_stderr: Option<f64>,
    pub alpha2_hat: f64,
    pub alpha2_stderr: Option<f64>,
    /// False when no event was observed for one of the two probabilities.
    pub reliable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakAmplitudes {
    pub sites: Vec<Site>,
    pub pairs: Vec<(Site, Site)>,
    pub distance_to_boundary: u32,
    pub records: Vec<PeakRecord>,
}

/// Single and double peak probabilities at the centre of the box, scaled by
/// e^{4βn} and e^{6βn} into amplitude estimates.
pub fn estimate_peak_amplitudes(config: &ChainConfig, n_list: &[u32]) -> Result<PeakAmplitudes> {
    if config.ensemble != (EnsembleSpec::Free { boundary_level: 0 }) {
        return Err(Error::InvalidArgument("peak amplitudes need the free ensemble with boundary 0".into()));
    }
    let region = config.region()?;
    let sites = measurement_block(config.nx, config.ny);
    let pairs = measurement_pairs(&region, &sites);
    let si: Vec<usize> = sites.iter().map(|&s| region.index_of(s).unwrap()).collect();
    let pi: Vec<(usize, usize)> =
        pairs.iter().map(|&(a, b)| (region.index_of(a).unwrap(), region.index_of(b).unwrap())).collect();
    let distance_to_boundary = si.iter().map(|&i| region.distance_to_boundary(i)).min().unwrap_or(0);
    let m = n_list.len();
    let est = measure(config, 2 * m, |hs, o| {
        for (k, &n) in n_list.iter().enumerate() {
            let n = n as i32;
            o[k] = si.iter().filter(|&&i| hs[i] >= n).count() as f64 / si.len() as f64;
            if !pi.is_empty() {
                o[m + k] = pi.iter().filter(|&&(a, b)| hs[a].min(hs[b]) >= n).count() as f64 / pi.len() as f64;
            }
        }
    })?;
    let beta = config.params.beta();
    let records = n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let (p1, p2) = (est[k], est[m + k]);
            let s1 = (4.0 * beta * n as f64).exp();
            let s2 = (6.0 * beta * n as f64).exp();
            PeakRecord {
                n,
                p1,
                p2,
                alpha1_hat: s1 * p1.mean,
                alpha1_stderr: p1.stderr.map(|e| s1 * e),
                alpha2_hat: s2 * p2.mean,
                alpha2_stderr: p2.stderr.map(|e| s2 * e),
                reliable: p1.mean > 0.0 && p2.mean > 0.0,
            }
        })
        .collect();
    Ok(PeakAmplitudes { sites, pairs, distance_to_boundary, records })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterHistogram {
    pub n: i32,
    /// Sites averaged over: those away from the boundary, or all sites if
    /// there are none.
    pub sites: Vec<Site>,
    /// Frequencies of q = 0, 1, 2 and ≥ 3.
    pub bins: [EstimateSummary; 4],
}

/// Law of the size of the cluster of {φ ≥ n} containing a site.
pub fn estimate_cluster_histogram(config: &ChainConfig, n: i32) -> Result<ClusterHistogram> {
    if !matches!(config.ensemble, EnsembleSpec::Free { .. }) {
        return Err(Error::InvalidArgument("cluster histogram needs the free ensemble".into()));
    }
    let region = config.region()?;
    let mut idx: Vec<usize> = (0..region.len()).filter(|&i| region.boundary_edges(i) == 0).collect();
    if idx.is_empty() {
        idx = (0..region.len()).collect();
    }
    let sites = idx.iter().map(|&i| region.sites()[i]).collect();
    let w = 1.0 / idx.len() as f64;
    let est = measure(config, 4, |hs, o| {
        let q = q_bins(&region, hs, n);
        for &i in &idx {
            o[q[i]] += w;
        }
    })?;
    Ok(ClusterHistogram { n, sites, bins: [est[0], est[1], est[2], est[3]] })
}
