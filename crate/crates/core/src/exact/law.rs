//! The intensity of the unit contour around a site: presence probability
//! and conditional law, both from range-restricted sums and from plain
//! enumeration followed by decomposition.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{brute, certify, problem, EnsembleSpec, TruncationPolicy};
use crate::contours::{decompose, GeometricContour, Sign};
use crate::error::{Error, Result};
use crate::formulas::ModelParams;
use crate::lattice::{HeightField, Region, Site};
use crate::numeric::{kahan, KahanSum};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitContourPresence {
    pub center: Site,
    pub sign: Sign,
    /// P[the signed unit contour around `center` is a contour of φ]
    pub presence: f64,
    /// e^{-4β}
    pub bound: f64,
    /// P[intensity = k | present] for k = 1..=k_max
    pub conditional: Vec<f64>,
    /// (1 - r) r^{k-1}, r = e^{-4β}
    pub geometric: Vec<f64>,
    /// Total variation between the two laws, tails beyond k_max lumped.
    pub tv: f64,
}

/// Free measure with boundary 0. The unit contour with sign + is present
/// with intensity ≥ k iff φ(c) ≥ max over Δ⁺ of φ + k.
pub fn unit_contour_presence(
    region: &Region,
    params: &ModelParams,
    center: Site,
    sign: Sign,
    k_max: u32,
    trunc: &TruncationPolicy,
) -> Result<UnitContourPresence> {
    let ci = region
        .index_of(center)
        .ok_or_else(|| Error::InvalidArgument("center outside region".into()))?;
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be positive".into()));
    }
    let contour = GeometricContour::unit_square(center);
    let outer_in: Vec<usize> = contour.outer().iter().filter_map(|&s| region.index_of(s)).collect();
    let has_outside = outer_in.len() < contour.outer().len();
    let free = EnsembleSpec::Free { boundary_level: 0 };
    let h = certify(region, params, &free, trunc)?.h_max;
    let beta = params.beta();
    let lz = problem(region, beta, &free, h, trunc.budget).log_sum()?;
    let (lo, hi) = free.range(h);
    // probability that the neighbourhood extreme is beyond level m and the
    // centre is at least k past m
    let tail = |k: i32| -> Result<f64> {
        let mut terms = Vec::new();
        for m in lo..=hi {
            for (shift, sgn) in [(0, 1.0), (1, -1.0)] {
                let mut p = problem(region, beta, &free, h, trunc.budget);
                let ok = match sign {
                    Sign::Plus => {
                        let bound = m - shift;
                        for &i in &outer_in {
                            p.restrict(i, i32::MIN, bound);
                        }
                        p.restrict(ci, m + k, i32::MAX);
                        !has_outside || bound >= 0
                    }
                    Sign::Minus => {
                        let bound = m + shift;
                        for &i in &outer_in {
                            p.restrict(i, bound, i32::MAX);
                        }
                        p.restrict(ci, i32::MIN, m - k);
                        !has_outside || bound <= 0
                    }
                };
                if ok {
                    let v = p.log_sum()?;
                    if v > f64::NEG_INFINITY {
                        terms.push(sgn * (v - lz).exp());
                    }
                }
            }
        }
        Ok(kahan(terms))
    };
    let tails: Vec<f64> = (1..=k_max as i32 + 1).map(tail).collect::<Result<_>>()?;
    let presence = tails[0];
    let r = (-4.0 * beta).exp();
    let conditional: Vec<f64> = (0..k_max as usize).map(|k| (tails[k] - tails[k + 1]) / presence).collect();
    let geometric: Vec<f64> = (0..k_max).map(|k| (1.0 - r) * r.powi(k as i32)).collect();
    let tail_c = tails[k_max as usize] / presence;
    let tail_g = r.powi(k_max as i32);
    let tv = 0.5
        * (conditional.iter().zip(&geometric).map(|(a, b)| (a - b).abs()).sum::<f64>() + (tail_c - tail_g).abs());
    Ok(UnitContourPresence { center, sign, presence, bound: r, conditional, geometric, tv })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityLaw {
    /// Number of distinct (sign, remaining cylinders) classes seen.
    pub groups: usize,
    /// Largest total variation distance over classes.
    pub max_tv: f64,
    /// Class-weighted mean total variation distance.
    pub mean_tv: f64,
    /// Enumerated fields in which the unit contour occurs.
    pub fields_with_contour: u64,
}

fn encode_rest(cs: &[crate::contours::Cylinder], skip: usize, key: &mut Vec<i32>) {
    key.clear();
    for (i, c) in cs.iter().enumerate() {
        if i == skip {
            continue;
        }
        key.push(c.sign.value());
        key.push(c.intensity as i32);
        key.push(c.contour.length() as i32);
        for e in c.contour.edges() {
            let (a, b) = e.endpoints();
            key.extend([a.x, a.y, b.x, b.y]);
        }
    }
}

/// Enumerates every field with heights in [-h_enum, h_enum] (boundary 0),
/// decomposes it, and for fields containing the unit contour around
/// `center` groups them by sign and the remaining cylinders. Within each
/// group the law of the unit contour's intensity is compared with the
/// geometric law ∝ e^{-4βk} restricted to the intensities that occur.
pub fn intensity_law_check(region: &Region, beta: f64, center: Site, h_enum: u32) -> Result<IntensityLaw> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument("beta must be positive".into()));
    }
    if region.index_of(center).is_none() {
        return Err(Error::InvalidArgument("center outside region".into()));
    }
    let configs = (2 * h_enum as u128 + 1).pow(region.len() as u32);
    if configs > super::DEFAULT_BUDGET {
        return Err(Error::TooLarge { work: configs, budget: super::DEFAULT_BUDGET });
    }
    let unit = GeometricContour::unit_square(center);
    let arc = Arc::new(region.clone());
    let h = h_enum as i32;
    let ranges = vec![(-h, h); region.len()];
    type Groups = BTreeMap<Vec<i32>, BTreeMap<u32, KahanSum>>;
    let groups: (Groups, u64) = brute::fold_configs(
        &ranges,
        || (Groups::new(), 0u64),
        |acc, hs| {
            let field = HeightField::new(arc.clone(), hs.to_vec(), 0).unwrap();
            let cs = decompose(&field).expect("rectangles are simply connected");
            if let Some(pos) = cs.cylinders.iter().position(|c| c.contour == unit) {
                let mut key = Vec::new();
                encode_rest(&cs.cylinders, pos, &mut key);
                let c = &cs.cylinders[pos];
                key.insert(0, c.sign.value());
                let w = (-beta * super::brute::energy(region, hs, 0) as f64).exp();
                acc.0.entry(key).or_default().entry(c.intensity).or_default().add(w);
                acc.1 += 1;
            }
        },
        |mut a, b| {
            for (k, m) in b.0 {
                let e = a.0.entry(k).or_default();
                for (i, s) in m {
                    e.entry(i).or_default().merge(&s);
                }
            }
            a.1 += b.1;
            a
        },
    );
    let (groups, fields) = groups;
    let mut max_tv = 0.0f64;
    let mut weighted = KahanSum::new();
    let mut total = KahanSum::new();
    for m in groups.values() {
        let ks: Vec<u32> = m.keys().copied().collect();
        let obs: Vec<f64> = m.values().map(|s| s.value()).collect();
        let zo = kahan(obs.iter().copied());
        let geo: Vec<f64> = ks.iter().map(|&k| (-4.0 * beta * k as f64).exp()).collect();
        let zg = kahan(geo.iter().copied());
        let tv = 0.5 * kahan(obs.iter().zip(&geo).map(|(o, g)| (o / zo - g / zg).abs()));
        max_tv = max_tv.max(tv);
        weighted.add(tv * zo);
        total.add(zo);
    }
    Ok(IntensityLaw {
        groups: groups.len(),
        max_tv,
        mean_tv: if total.value() > 0.0 { weighted.value() / total.value() } else { 0.0 },
        fields_with_contour: fields,
    })
}
