//! The `verify` battery. Each check is keyed by an anchor id.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sos_core::contours::{self, decompose, reconstruct, Sign};
use sos_core::exact::{self, hamiltonian, EnsembleSpec, Monotone, TruncationPolicy};
use sos_core::formulas::{self, DenominatorConvention, LayeringCoefficients};
use sos_core::lattice::{build_rect_region, HeightField, Region, Site};
use sos_core::sampler::{self, ChainConfig, EstimateSummary};
use sos_core::ModelParams;

use crate::args::{Suite, VerifyArgs};
use crate::commands::{resolve_seed, Output};
use crate::emit::Table;
use crate::error::Result;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub suite: String,
    pub description: String,
    pub pass: bool,
    /// The worst observed deviation or the tested quantity.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

struct Battery {
    suite: String,
    results: Vec<CheckResult>,
}

impl Battery {
    fn record(&mut self, id: &str, description: &str, pass: bool, value: f64, tolerance: f64, detail: String) {
        self.results.push(CheckResult {
            id: id.into(),
            suite: self.suite.clone(),
            description: description.into(),
            pass,
            value,
            tolerance,
            detail,
        });
    }

    /// Runs `f`, turning an error into a failed check.
    fn run(&mut self, id: &str, description: &str, tolerance: f64, f: impl FnOnce() -> Result<(bool, f64, String)>) {
        match f() {
            Ok((pass, value, detail)) => self.record(id, description, pass, value, tolerance, detail),
            Err(e) => self.record(id, description, false, f64::NAN, tolerance, format!("error: {e}")),
        }
    }
}

fn rect(w: i64, h: i64) -> Result<Region> {
    Ok(build_rect_region(w, h)?)
}

fn small_animals() -> Vec<Vec<Site>> {
    let s = Site::new;
    vec![
        vec![s(0, 0)],
        vec![s(0, 0), s(1, 0)],
        vec![s(0, 0), s(0, 1)],
        vec![s(0, 0), s(1, 0), s(2, 0)],
        vec![s(0, 0), s(0, 1), s(0, 2)],
        vec![s(0, 0), s(1, 0), s(0, 1)],
        vec![s(0, 0), s(1, 0), s(1, 1)],
        vec![s(0, 0), s(0, 1), s(1, 1)],
        vec![s(1, 0), s(0, 1), s(1, 1)],
    ]
}

fn identities(b: &mut Battery, perturb_h2: f64) {
    let betas = [0.5, 1.0, 2.0];
    let positive_log_z = |sites: &[Site], beta: f64| -> Result<f64> {
        let p = ModelParams::new(beta)?;
        Ok(exact::log_partition(&Region::from_sites(sites.iter().copied()), &p, &EnsembleSpec::Positive, &TruncationPolicy::default_for(beta))?)
    };
    b.run("lehagga-i", "log Z+ of a single site equals H1", 1e-9, || {
        let mut worst = 0.0f64;
        for beta in betas {
            let want = formulas::small_cluster_constants(beta)?.H1;
            worst = worst.max(((positive_log_z(&[Site::new(0, 0)], beta)? - want) / want).abs());
        }
        Ok((worst < 1e-9, worst, format!("max relative error {worst:.2e} over beta in {betas:?}")))
    });
    b.run("lehagga-ii", "log Z+ of an adjacent pair equals H2", 1e-9, || {
        let mut worst = 0.0f64;
        for beta in betas {
            let want = formulas::small_cluster_constants(beta)?.H2 + perturb_h2;
            worst = worst.max(((positive_log_z(&[Site::new(0, 0), Site::new(1, 0)], beta)? - want) / want).abs());
        }
        Ok((worst < 1e-9, worst, format!("max relative error {worst:.2e} over beta in {betas:?}")))
    });
    b.run("represent", "wetting partition function equals its level-set expansion", 1e-8, || {
        let mut worst = 0.0f64;
        for beta in [0.5, 1.0] {
            let hw = formulas::wetting_critical_point(beta)?;
            for h in [0.0, hw, hw + 0.2] {
                let p = ModelParams::with_h(beta, h)?;
                for (w, ht) in [(1, 1), (2, 2), (2, 3)] {
                    worst = worst.max(exact::wetting_identity_check(&rect(w, ht)?, &p, &TruncationPolicy::default_for(beta))?.gap);
                }
            }
        }
        Ok((worst < 1e-8, worst, format!("max log gap {worst:.2e} on 1x1, 2x2, 2x3 boxes")))
    });
    let beta = 1.0;
    let p = ModelParams::new(beta).unwrap();
    let t = TruncationPolicy::default_for(beta);
    b.run("stimaG-i", "G of a single site matches g1", 1e-9, || {
        let mut worst = 0.0f64;
        for k in 0..4 {
            for u in [0.0, 0.1, 0.5] {
                let got = exact::g_exact(&[Site::new(0, 0)], &p, k, u, &t)?;
                worst = worst.max((got - formulas::g1(beta, k, u)?).abs());
            }
        }
        Ok((worst < 1e-9, worst, format!("max abs error {worst:.2e}, k in 0..4, u in {{0, 0.1, 0.5}}")))
    });
    b.run("stimaG-ii", "G of an adjacent pair at u = 0 matches g2", 1e-9, || {
        let mut worst = 0.0f64;
        for k in 0..4 {
            let got = exact::g_exact(&[Site::new(0, 0), Site::new(1, 0)], &p, k, 0.0, &t)?;
            worst = worst.max((got - formulas::g2_zero(beta, k)?).abs());
        }
        Ok((worst < 1e-9, worst, format!("max abs error {worst:.2e}, k in 0..4")))
    });
    b.run("stimaG-excess", "G(set, 0, 0) is minus the excess energy", 1e-12, || {
        let mut worst = 0.0f64;
        for g in small_animals() {
            worst = worst.max((exact::g_exact(&g, &p, 0, 0.0, &t)? + exact::excess_pair_energy(&g, &p, &t)?).abs());
        }
        Ok((worst <= 1e-12, worst, format!("max |G + excess| {worst:.2e} over 9 sets of size <= 3")))
    });
    b.run("uppg", "G at u = 0 is negative on sets of two or more sites", 0.0, || {
        let mut bad = 0;
        for g in small_animals().into_iter().filter(|g| g.len() >= 2) {
            for k in 0..4 {
                if !exact::uppg_sign_check(&g, &p, k, 0.0, &t)? {
                    bad += 1;
                }
            }
        }
        Ok((bad == 0, bad as f64, format!("{bad} of 32 cases non-negative")))
    });
    b.run("chalbound", "critical reward sits in the Chalker band", 0.0, || {
        let mut bad = 0;
        for i in 1..=60 {
            let beta = 0.05 * i as f64;
            let hw = formulas::wetting_critical_point(beta)?;
            let (lo, hi) = formulas::chalker_bounds(beta)?;
            if !(hw == lo && hw <= hi) {
                bad += 1;
            }
        }
        Ok((bad == 0, bad as f64, format!("{bad} of 60 betas outside")))
    });
    b.run("uds", "layering function scales as J^3 with geometric breakpoints", 1e-12, || {
        let mut worst = 0.0f64;
        let mut points = 0;
        for beta in [1.0, 1.5, 2.0] {
            let j = formulas::coupling(beta);
            for conv in [DenominatorConvention::AsPrinted, DenominatorConvention::AsDerived] {
                let c = LayeringCoefficients::new(1.3, 0.8, conv)?;
                for i in 0..40 {
                    let u = 10f64.powf(-6.0 + 0.15 * i as f64);
                    if formulas::maximizer_index(j, j * u, &c)? >= 1 {
                        let a = formulas::layering_f_auto(j, j * u, &c)?.value;
                        let bb = j.powi(3) * formulas::layering_f_auto(j, u, &c)?.value;
                        worst = worst.max(((a - bb) / bb).abs());
                        points += 1;
                    }
                }
                for n in 0..6 {
                    let r = formulas::breakpoint(&c, j, n + 1)? / formulas::breakpoint(&c, j, n)?;
                    worst = worst.max((r / j - 1.0).abs());
                }
            }
        }
        Ok((worst < 1e-12 && points > 0, worst, format!("max relative error {worst:.2e} over {points} scaling points and 36 breakpoint ratios")))
    });
    b.run("fkg", "increasing functions are positively correlated", 1e-12, || {
        let r = rect(3, 3)?;
        let mut worst = f64::INFINITY;
        for (ens, h) in [(EnsembleSpec::Free { boundary_level: 0 }, 0.0), (EnsembleSpec::Wetting { h: 0.5 }, 0.5)] {
            let p = ModelParams::with_h(1.0, h)?;
            for (f, g) in [
                (vec![Site::new(2, 2)], vec![Site::new(3, 2)]),
                (vec![Site::new(1, 1)], vec![Site::new(2, 2), Site::new(3, 2)]),
            ] {
                let cov = exact::fkg_check(&r, &p, &ens, &t, &Monotone::Min(f), &Monotone::Min(g))?;
                worst = worst.min(cov);
            }
        }
        Ok((worst >= -1e-12, worst, format!("smallest covariance {worst:.3e}")))
    });
}

fn round_trip(f: &HeightField) -> Result<bool> {
    let cs = decompose(f)?;
    let back = reconstruct(&cs, f.region_arc().clone(), f.boundary_level())?;
    Ok(back == *f && contours::contour_energy(&cs) == hamiltonian(f))
}

fn contour_suite(b: &mut Battery) {
    b.run("express", "contour decomposition round-trips and carries the energy", 0.0, || {
        let small = Arc::new(rect(2, 2)?);
        let mut bad = 0;
        for k in 0..625 {
            let hs: Vec<i32> = (0..4).map(|i| (k / 5i32.pow(i)) % 5 - 2).collect();
            bad += !round_trip(&HeightField::new(small.clone(), hs, 0)?)? as u32;
        }
        let big = Arc::new(rect(8, 8)?);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let n = rng.gen_range(-2..=2);
            let hs: Vec<i32> = (0..64).map(|_| rng.gen_range(-4..=4)).collect();
            bad += !round_trip(&HeightField::new(big.clone(), hs, n)?)? as u32;
        }
        Ok((bad == 0, bad as f64, format!("{bad} failures over 625 2x2 and 10000 random 8x8 fields")))
    });
    let beta = 1.0;
    let p = ModelParams::new(beta).unwrap();
    let t = TruncationPolicy::default_for(beta);
    b.run("geom", "unit contour intensity is geometric", 1e-9, || {
        let r = rect(3, 3)?;
        let c = Site::new(2, 2);
        let mut worst = 0.0f64;
        for sign in [Sign::Plus, Sign::Minus] {
            worst = worst.max(exact::unit_contour_presence(&r, &p, c, sign, 6, &t)?.tv);
        }
        let law = exact::intensity_law_check(&r, beta, c, 2)?;
        worst = worst.max(law.max_tv);
        Ok((worst < 1e-9, worst, format!("max total variation {worst:.2e}; {} enumerated classes", law.groups)))
    });
    b.run("restrict", "unit contour presence is below its Peierls weight", 0.0, || {
        let r = rect(3, 3)?;
        let mut margin = f64::INFINITY;
        for sign in [Sign::Plus, Sign::Minus] {
            let u = exact::unit_contour_presence(&r, &p, Site::new(2, 2), sign, 6, &t)?;
            margin = margin.min(u.bound - u.presence);
        }
        Ok((margin >= 0.0, margin, format!("smallest bound - presence {margin:.3e}")))
    });
}

fn peierls_suite(b: &mut Battery) {
    let beta = 1.0;
    let p = ModelParams::new(beta).unwrap();
    let t = TruncationPolicy::default_for(beta);
    let s = Site::new;
    let patterns: Vec<(Vec<Site>, f64, f64)> = vec![
        (vec![s(2, 2)], 0.5, 4.0),
        (vec![s(2, 2), s(3, 2)], 0.25, 6.0),
        (vec![s(1, 2), s(2, 2), s(3, 2)], 0.125, 8.0),
    ];
    b.run("rourou", "peak probabilities exceed their lower bands", 0.0, || {
        let r = rect(3, 3)?;
        let mut worst = f64::INFINITY;
        for (sites, pre, cost) in &patterns {
            for n in [1, 2] {
                let prob = exact::site_tail_prob(&r, &p, sites, n, &t)?;
                worst = worst.min(prob / (pre * (-beta * cost * n as f64).exp()));
            }
        }
        Ok((worst >= 1.0, worst, format!("smallest probability / band {worst:.4}")))
    });
    let shifts = || -> Result<Vec<exact::ShiftInequality>> {
        let r = rect(3, 3)?;
        let mut out = Vec::new();
        for (sites, _, _) in &patterns {
            for n in [1, 2] {
                out.push(exact::shift_inequality_check(&r, &p, sites, n, &t)?);
            }
        }
        Ok(out)
    };
    b.run("lezgop", "raising a peak by one costs at most its edge weight", 0.0, || {
        let all = shifts()?;
        let worst = all.iter().map(|x| x.ratio / x.bound).fold(f64::INFINITY, f64::min);
        Ok((worst >= 1.0, worst, format!("smallest ratio / bound {worst:.4}")))
    });
    b.run("dehalf", "a site is non-negative with probability at least one half", 0.0, || {
        let worst = shifts()?.iter().map(|x| x.p_nonneg).fold(f64::INFINITY, f64::min);
        Ok((worst >= 0.5, worst, format!("smallest P[phi >= 0] {worst:.6}")))
    });
    b.run("peierls-growth", "contour counts grow at a rate between 2 and 3", 0.0, || {
        let ps = contours::peierls_sum(beta, 16)?;
        let g = ps.growth_rate;
        Ok((g > 2.0 && g < 3.0, g, format!("growth rate {g:.4} from lengths up to 16")))
    });
}

fn sampler_suite(b: &mut Battery, seed: u64, sweeps: u64) {
    let beta = 1.0;
    let t = TruncationPolicy::default_for(beta);
    let mk = |ens: EnsembleSpec, h: f64| -> Result<ChainConfig> {
        let mut c = ChainConfig::new(3, 3, ModelParams::with_h(beta, h)?, ens);
        c.sweeps = sweeps;
        c.burn_in = 1_000.min(sweeps / 2);
        c.seed = seed;
        Ok(c)
    };
    let zcheck = |est: &[EstimateSummary], exact_vals: &[f64]| -> (bool, f64, Vec<String>) {
        let mut worst = 0.0f64;
        let mut ok = true;
        let mut parts = Vec::new();
        for (e, &x) in est.iter().zip(exact_vals) {
            let pass = match e.stderr {
                Some(0.0) => e.mean == x,
                Some(_) => e.z_score(x).is_some_and(|z| z < 3.0),
                None => false,
            };
            if let Some(z) = e.z_score(x).filter(|z| z.is_finite()) {
                worst = worst.max(z);
            }
            ok &= pass;
            parts.push(format!("{:.5} vs {x:.5}", e.mean));
        }
        (ok, worst, parts)
    };
    let centre = Site::new(2, 2);
    let free = EnsembleSpec::Free { boundary_level: 0 };
    b.run("sampler-contact", "contact fraction agrees with enumeration", 3.0, || {
        let cw = mk(EnsembleSpec::Wetting { h: 0.5 }, 0.5)?;
        let est = sampler::estimate_contact_fraction(&cw)?;
        let x = exact::contact_fraction(&rect(3, 3)?, &cw.params, &t)?;
        let (ok, z, parts) = zcheck(&[est], &[x]);
        Ok((ok, z, format!("|z| {z:.2}; {}", parts.join(", "))))
    });
    b.run("sampler-tails", "centre and pair tails agree with enumeration", 3.0, || {
        let cf = mk(free, 0.0)?;
        let r = rect(3, 3)?;
        let pair = [centre, Site::new(3, 2)];
        let mut est = sampler::estimate_tail_probabilities(&cf, &[centre], &[0, 1, 2])?;
        est.extend(sampler::estimate_tail_probabilities(&cf, &pair, &[1])?);
        let mut x = Vec::new();
        for n in [0, 1, 2] {
            x.push(exact::site_tail_prob(&r, &cf.params, &[centre], n, &t)?);
        }
        x.push(exact::site_tail_prob(&r, &cf.params, &pair, 1, &t)?);
        let (ok, z, parts) = zcheck(&est, &x);
        Ok((ok, z, format!("max |z| {z:.2}; {}", parts.join(", "))))
    });
    b.run("defq", "cluster-size law at the centre agrees with enumeration", 3.0, || {
        let cf = mk(free, 0.0)?;
        let est = sampler::estimate_cluster_histogram(&cf, 1)?;
        let stats = exact::cluster_statistics(&rect(3, 3)?, &cf.params, 1, &t)?;
        let x = stats.iter().find(|s| s.site == centre).map(|s| s.probs).unwrap_or([f64::NAN; 4]);
        let (ok, z, parts) = zcheck(&est.bins, &x);
        Ok((ok, z, format!("max |z| {z:.2}; {}", parts.join(", "))))
    });
    b.run("sampler-determinism", "a seeded run repeats exactly", 0.0, || {
        let mut c = mk(free, 0.0)?;
        c.sweeps = sweeps.min(20_000);
        c.burn_in = c.sweeps / 10;
        c.chains = 2;
        let a = sampler::estimate_tail_probabilities(&c, &[centre], &[1])?;
        let again = sampler::estimate_tail_probabilities(&c, &[centre], &[1])?;
        let same = a == again;
        Ok((same, if same { 0.0 } else { 1.0 }, format!("two runs with seed {seed} {}", if same { "identical" } else { "differ" })))
    });
}

pub fn verify_cmd(a: &VerifyArgs, seed: Option<u64>) -> Result<Output> {
    let suites: Vec<Suite> = match a.suite {
        Suite::All => vec![Suite::Identities, Suite::Contours, Suite::Peierls, Suite::Sampler],
        s => vec![s],
    };
    let seed = if suites.contains(&Suite::Sampler) { Some(resolve_seed(seed, "the sampler suite")?) } else { seed };
    let mut results = Vec::new();
    for s in &suites {
        let name = serde_json::to_value(s)?.as_str().unwrap_or_default().to_string();
        let mut b = Battery { suite: name, results: Vec::new() };
        match s {
            Suite::Identities => identities(&mut b, a.perturb_h2.unwrap_or(0.0)),
            Suite::Contours => contour_suite(&mut b),
            Suite::Peierls => peierls_suite(&mut b),
            Suite::Sampler => sampler_suite(&mut b, seed.unwrap_or(0), a.sweeps),
            Suite::All => unreachable!(),
        }
        results.extend(b.results);
    }
    let failures: Vec<String> = results.iter().filter(|r| !r.pass).map(|r| r.id.clone()).collect();
    let mut table = Table::new(&["id", "suite", "pass", "value", "tolerance", "detail"]);
    for r in &results {
        table.push(vec![r.id.clone().into(), r.suite.clone().into(), r.pass.into(), r.value.into(), r.tolerance.into(), r.detail.clone().into()]);
    }
    let checks: Vec<Value> = results
        .iter()
        .map(|r| {
            json!({
                "id": r.id,
                "anchor": r.id,
                "suite": r.suite,
                "description": r.description,
                "pass": r.pass,
                "value": if r.value.is_finite() { json!(r.value) } else { Value::Null },
                "tolerance": r.tolerance,
                "detail": r.detail,
            })
        })
        .collect();
    let record = json!({
        "suites": suites,
        "seed": seed,
        "checks": checks,
        "passed": results.len() - failures.len(),
        "failed": failures,
        "pass": failures.is_empty(),
    });
    Ok(Output { record, table, failures })
}
