use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sos_core::exact::{self, EnsembleSpec, TruncationPolicy};
use sos_core::lattice::{build_rect_region, Site};
use sos_core::sampler::*;
use sos_core::ModelParams;

const FREE0: EnsembleSpec = EnsembleSpec::Free { boundary_level: 0 };

#[test]
fn kernel_draws_follow_the_conditional_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1_000_000;
    let mut counts = [0u64; 3];
    for _ in 0..n {
        let j = conditional_height_sample(&[0, 0, 0, 0], 1.0, &FREE0, &mut rng);
        if (-1..=1).contains(&j) {
            counts[(j + 1) as usize] += 1;
        }
    }
    let law = conditional_law(&[0, 0, 0, 0], 1.0, &FREE0);
    for (k, &c) in counts.iter().enumerate() {
        let p = law.pmf(k as i64 - 1);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((c as f64 / n as f64 - p).abs() < 3.0 * sd, "j={} {} vs {p}", k as i64 - 1, c as f64 / n as f64);
    }
    let wet = conditional_law(&[0, 0, 0, 0], 1.0, &EnsembleSpec::Wetting { h: 0.0 });
    assert!((wet.pmf(0) - 0.9816844).abs() < 1e-7);
    assert_eq!(wet.pmf(-1), 0.0);
}

#[test]
fn kernel_is_reversible_with_respect_to_the_conditional() {
    // heat-bath: K(j → j') = π(j'), so π(j)K(j→j') = π(j)π(j') is symmetric;
    // check π against the unnormalised weights on a window
    for nb in [[-3, 0, 2, 2], [5, 5, 5, -1]] {
        for ens in [FREE0, EnsembleSpec::Wetting { h: 0.6 }] {
            let law = conditional_law(&nb, 0.8, &ens);
            let w = |j: i64| -> f64 {
                let e: i64 = nb.iter().map(|&a| (j - a as i64).abs()).sum();
                let pin = if j == 0 { ens.pin().map_or(0.0, |p| p.1) } else { 0.0 };
                (-0.8 * e as f64 + pin).exp()
            };
            for j in 0..8i64 {
                for k in 0..8i64 {
                    let lhs = law.pmf(j) * w(k);
                    let rhs = law.pmf(k) * w(j);
                    assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs().max(rhs.abs()));
                }
            }
        }
    }
}

#[test]
fn zero_temperature_limit_picks_the_median() {
    let law = conditional_law(&[1, 2, 2, 7], 40.0, &FREE0);
    assert!(law.pmf(2) > 1.0 - 1e-12);
}

#[test]
fn coupled_chains_stay_ordered() {
    let region = Arc::new(build_rect_region(5, 5).unwrap());
    let p = ModelParams::new(0.6).unwrap();
    for ens in [FREE0, EnsembleSpec::Wetting { h: 0.3 }] {
        let lo_start = vec![if ens.pin().is_some() { 0 } else { -6 }; 25];
        let mut lo = Chain::new(region.clone(), &p, &ens).with_heights(lo_start).unwrap();
        let mut hi = Chain::new(region.clone(), &p, &ens).with_heights(vec![6; 25]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100_000 {
            let mut r2 = rng.clone();
            lo.sweep(&mut rng);
            hi.sweep(&mut r2);
            assert!(lo.heights().iter().zip(hi.heights()).all(|(a, b)| a <= b));
        }
    }
}

fn config(ens: EnsembleSpec, h: f64) -> ChainConfig {
    let mut c = ChainConfig::new(3, 3, ModelParams::with_h(1.0, h).unwrap(), ens);
    c.sweeps = 1_000_000;
    c.burn_in = 1_000;
    c.seed = 20261016;
    c
}

#[test]
fn centre_tail_matches_exact() {
    let c = config(FREE0, 0.0);
    let region = build_rect_region(3, 3).unwrap();
    let t = TruncationPolicy::default_for(1.0);
    let est = estimate_tail_probabilities(&c, &[Site::new(2, 2)], &[1]).unwrap();
    let exact = exact::site_tail_prob(&region, &c.params, &[Site::new(2, 2)], 1, &t).unwrap();
    assert!(est[0].z_score(exact).unwrap() < 3.0, "{:?} vs {exact}", est[0]);
}

#[test]
fn contact_fraction_matches_exact() {
    let c = config(EnsembleSpec::Wetting { h: 0.5 }, 0.5);
    let region = build_rect_region(3, 3).unwrap();
    let exact = exact::contact_fraction(&region, &c.params, &TruncationPolicy::default_for(1.0)).unwrap();
    let est = estimate_contact_fraction(&c).unwrap();
    assert!(est.z_score(exact).unwrap() < 3.0, "{est:?} vs {exact}");
}

#[test]
fn strong_pinning_flattens() {
    let mut c = config(EnsembleSpec::Wetting { h: 8.0 }, 8.0);
    c.sweeps = 5_000;
    let est = estimate_contact_fraction(&c).unwrap();
    assert!(est.mean > 0.99);
}

#[test]
fn histogram_at_unreachable_level() {
    let mut c = config(FREE0, 0.0);
    c.params = ModelParams::new(3.0).unwrap();
    c.sweeps = 5_000;
    let h = estimate_cluster_histogram(&c, 50).unwrap();
    assert_eq!(h.bins[0].mean, 1.0);
    assert_eq!(h.sites, vec![Site::new(2, 2)]);
}

#[test]
fn peak_amplitudes_are_flagged_when_unobserved() {
    let mut c = config(FREE0, 0.0);
    c.params = ModelParams::new(2.5).unwrap();
    c.sweeps = 2_000;
    let a = estimate_peak_amplitudes(&c, &[0, 6]).unwrap();
    assert!(a.records[0].p1.mean >= 0.5);
    assert!(!a.records[1].reliable);
    assert_eq!(a.records[1].alpha1_hat, 0.0);
    assert_eq!(a.distance_to_boundary, 2);
}

#[test]
fn ensemble_preconditions() {
    let c = config(FREE0, 0.0);
    assert!(estimate_contact_fraction(&c).is_err());
    let w = config(EnsembleSpec::Wetting { h: 0.5 }, 0.5);
    assert!(estimate_peak_amplitudes(&w, &[1]).is_err());
    assert!(estimate_cluster_histogram(&w, 1).is_err());
}
