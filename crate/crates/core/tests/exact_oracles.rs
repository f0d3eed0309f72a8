use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;
use sos_core::exact::{self, brute, EnsembleSpec, Monotone, TruncationPolicy};
use sos_core::formulas::{self, ModelParams};
use sos_core::lattice::{build_rect_region, connected_components, Region, Site};

fn rect(w: i64, h: i64) -> Region {
    build_rect_region(w, h).unwrap()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// log Z⁺ of a site set by plain enumeration over [0, cap].
fn brute_log_positive(sites: &[Site], beta: f64, cap: i32) -> f64 {
    let r = Region::from_sites(sites.iter().copied());
    brute::log_sum(&r, beta, 0, &vec![(0, cap); r.len()], None)
}

/// Right side of the wetting identity, by enumerating the free field on
/// [-cap, cap] and computing H(A) by enumeration as well.
fn brute_identity_rhs(region: &Region, beta: f64, h: f64, cap: i32) -> f64 {
    let mut cache: HashMap<Vec<Site>, f64> = HashMap::new();
    let mut terms = Vec::new();
    brute::for_each_config(&vec![(-cap, cap); region.len()], |hs| {
        let a: Vec<Site> = region.sites().iter().zip(hs).filter(|(_, &v)| v <= 0).map(|(&s, _)| s).collect();
        let ha = *cache.entry(a.clone()).or_insert_with(|| {
            connected_components(&a).iter().map(|c| brute_log_positive(c, beta, cap)).sum()
        });
        let e = brute::energy(region, hs, 0) as f64;
        terms.push(-beta * e + h * a.len() as f64 - ha);
    });
    log_sum_exp(&terms)
}

#[test]
fn wetting_identity_against_enumeration() {
    let beta = 1.0;
    let cap = 7;
    for (w, hgt) in [(1, 1), (2, 1), (2, 2)] {
        let r = rect(w, hgt);
        for h in [0.0, formulas::wetting_critical_point(beta).unwrap(), 0.7] {
            let p = ModelParams::with_h(beta, h).unwrap();
            let lhs = brute::log_sum(&r, beta, 0, &vec![(0, cap); r.len()], Some((0, h)));
            let rhs = brute_identity_rhs(&r, beta, h, cap);
            let gap = exact::wetting_identity_check(&r, &p, &TruncationPolicy::default_for(beta)).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "oracle itself: {lhs} vs {rhs}");
            assert!((gap.lhs - lhs).abs() < 1e-9 && (gap.rhs - rhs).abs() < 1e-9, "{w}x{hgt} h={h}: {gap:?} vs {lhs} {rhs}");
            assert!(gap.gap < 1e-10);
        }
    }
}

#[test]
fn excess_pair_energy_closed_forms() {
    for beta in [0.5, 1.0, 2.0] {
        let p = ModelParams::new(beta).unwrap();
        let t = TruncationPolicy::default_for(beta);
        let k = formulas::small_cluster_constants(beta).unwrap();
        let single = exact::excess_pair_energy(&[Site::new(0, 0)], &p, &t).unwrap();
        assert!(single.abs() < 1e-12);
        let pair = exact::excess_pair_energy(&[Site::new(0, 0), Site::new(0, 1)], &p, &t).unwrap();
        assert!((pair - (k.H2 - 2.0 * k.H1)).abs() < 1e-12);
        // disjoint sets add up
        let two = exact::excess_pair_energy(&[Site::new(0, 0), Site::new(0, 1), Site::new(5, 5), Site::new(6, 5)], &p, &t).unwrap();
        assert!((two - 2.0 * pair).abs() < 1e-12);
    }
}

#[test]
fn g_at_zero_is_minus_excess() {
    let p = ModelParams::new(1.0).unwrap();
    let t = TruncationPolicy::default_for(1.0);
    let shapes: Vec<Vec<Site>> = vec![
        vec![Site::new(0, 0)],
        vec![Site::new(0, 0), Site::new(1, 0)],
        vec![Site::new(0, 0), Site::new(1, 0), Site::new(2, 0)],
        vec![Site::new(0, 0), Site::new(1, 0), Site::new(1, 1)],
    ];
    for g in shapes {
        let a = exact::g_exact(&g, &p, 0, 0.0, &t).unwrap();
        let b = exact::excess_pair_energy(&g, &p, &t).unwrap();
        assert!((a + b).abs() < 1e-10, "{g:?}: {a} vs {b}");
    }
}

#[test]
fn g_matches_closed_forms() {
    let beta = 1.0;
    let p = ModelParams::new(beta).unwrap();
    let t = TruncationPolicy::default_for(beta);
    for k in 0..4 {
        for u in [0.0, 0.1, 0.5] {
            let a = exact::g_exact(&[Site::new(0, 0)], &p, k, u, &t).unwrap();
            assert!((a - formulas::g1(beta, k, u).unwrap()).abs() < 1e-9);
        }
        let a = exact::g_exact(&[Site::new(0, 0), Site::new(1, 0)], &p, k, 0.0, &t).unwrap();
        assert!((a - formulas::g2_zero(beta, k).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn fkg_covariances_are_nonnegative() {
    let r = rect(2, 2);
    let p = ModelParams::with_h(0.8, 0.4).unwrap();
    let t = TruncationPolicy::fixed(6);
    let f = Monotone::Min(vec![Site::new(1, 1)]);
    let g = Monotone::Min(vec![Site::new(2, 2), Site::new(2, 1)]);
    for ens in [EnsembleSpec::Free { boundary_level: 0 }, EnsembleSpec::Wetting { h: 0.4 }] {
        let c = exact::fkg_check(&r, &p, &ens, &t, &f, &g).unwrap();
        assert!(c >= -1e-12, "{ens:?}: {c}");
        // Cov(f, -g) = -Cov(f, g)
        let neg = exact::fkg_check(&r, &p, &ens, &t, &f, &Monotone::NegMin(vec![Site::new(2, 2), Site::new(2, 1)])).unwrap();
        assert!((c + neg).abs() < 1e-14);
    }
}

#[test]
fn fkg_matches_direct_covariance() {
    let r = rect(2, 1);
    let p = ModelParams::new(0.9).unwrap();
    let cap = 5;
    let ens = EnsembleSpec::Free { boundary_level: 0 };
    let mut z = 0.0;
    let (mut ex, mut ey, mut exy) = (0.0, 0.0, 0.0);
    brute::for_each_config(&vec![(-cap, cap); 2], |hs| {
        let w = (-0.9 * brute::energy(&r, hs, 0) as f64).exp();
        z += w;
        ex += w * hs[0] as f64;
        ey += w * hs[1] as f64;
        exy += w * (hs[0] * hs[1]) as f64;
    });
    let cov = exy / z - ex * ey / (z * z);
    let c = exact::fkg_check(&r, &p, &ens, &TruncationPolicy::fixed(cap as u32), &Monotone::Min(vec![Site::new(1, 1)]), &Monotone::Min(vec![Site::new(2, 1)])).unwrap();
    assert!((c - cov).abs() < 1e-12, "{c} vs {cov}");
}

#[test]
fn thermodynamic_integration_of_exact_contact_fractions() {
    let r = rect(3, 3);
    let beta = 1.0;
    let t = TruncationPolicy::default_for(beta);
    let (h0, h1) = (0.0, 1.0);
    let n = 200;
    let grid: Vec<f64> = (0..=n).map(|i| h0 + (h1 - h0) * i as f64 / n as f64).collect();
    let vals: Vec<sos_core::sampler::EstimateSummary> = grid
        .iter()
        .map(|&h| {
            let c = exact::contact_fraction(&r, &ModelParams::with_h(beta, h).unwrap(), &t).unwrap();
            sos_core::sampler::EstimateSummary { mean: c * r.len() as f64, stderr: Some(0.0), n_batches: 32, raw_count: 1 }
        })
        .collect();
    let integral = sos_core::freeenergy::thermo_integration(&grid, &vals).unwrap();
    let z = |h: f64| exact::log_partition(&r, &ModelParams::with_h(beta, h).unwrap(), &EnsembleSpec::Wetting { h }, &t).unwrap();
    assert!((integral.delta_f - (z(h1) - z(h0))).abs() < 1e-3);
    assert_eq!(integral.stderr, Some(0.0));
}

#[test]
fn joint_marginal_is_a_distribution() {
    let r = rect(2, 2);
    let p = ModelParams::new(1.0).unwrap();
    let law = exact::joint_marginal(&r, &p, &EnsembleSpec::Free { boundary_level: 0 }, &[Site::new(1, 1), Site::new(2, 2)], &TruncationPolicy::fixed(4)).unwrap();
    let total: f64 = law.iter().map(|x| x.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
    // symmetric under φ → -φ
    let get = |a: i32, b: i32| law.iter().find(|x| x.0 == vec![a, b]).unwrap().1;
    assert!((get(1, 2) - get(-1, -2)).abs() < 1e-15);
}

#[test]
fn budget_refusal() {
    let r = rect(6, 6);
    let p = ModelParams::new(1.0).unwrap();
    let t = TruncationPolicy::fixed(40).with_budget(1000);
    assert!(matches!(
        exact::log_partition(&r, &p, &EnsembleSpec::Free { boundary_level: 0 }, &t),
        Err(sos_core::Error::TooLarge { .. })
    ));
}

#[test]
fn unit_contour_presence_and_law() {
    let r = rect(3, 3);
    let p = ModelParams::new(1.0).unwrap();
    let u = exact::unit_contour_presence(&r, &p, Site::new(2, 2), sos_core::contours::Sign::Plus, 4, &TruncationPolicy::default_for(1.0)).unwrap();
    assert!(u.presence <= u.bound);
    assert!(u.tv < 1e-9, "{u:?}");
}

#[test]
fn cluster_statistics_match_enumeration() {
    let r = rect(2, 2);
    let p = ModelParams::new(0.7).unwrap();
    let cap = 12;
    let stats = exact::cluster_statistics(&r, &p, 1, &TruncationPolicy::fixed(cap)).unwrap();
    let mut acc = vec![[0.0f64; 4]; 4];
    let mut z = 0.0;
    brute::for_each_config(&vec![(-(cap as i32), cap as i32); 4], |hs| {
        let w = (-0.7 * brute::energy(&r, hs, 0) as f64).exp();
        z += w;
        for (i, b) in exact::q_bins(&r, hs, 1).into_iter().enumerate() {
            acc[i][b] += w;
        }
    });
    for (i, s) in stats.iter().enumerate() {
        for b in 0..4 {
            assert!((s.probs[b] - acc[i][b] / z).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn frontier_sum_equals_enumeration(cells in proptest::collection::btree_set((0i32..4, 0i32..3), 1..6), beta in 0.3f64..2.0, h in -1.0f64..1.5, n in -1i32..2) {
        let r = Region::from_sites(cells.iter().map(|&(x, y)| Site::new(x, y)));
        let cap = 3u32;
        for ens in [EnsembleSpec::Free { boundary_level: n }, EnsembleSpec::Wetting { h }, EnsembleSpec::Positive] {
            let p = ModelParams::with_h(beta, h).unwrap();
            let a = exact::log_partition(&r, &p, &ens, &TruncationPolicy::fixed(cap)).unwrap();
            let b = brute::log_sum(&r, beta, ens.boundary_level(), &vec![ens.range(cap); r.len()], ens.pin());
            prop_assert!((a - b).abs() < 1e-11, "{:?}: {} vs {}", ens, a, b);
        }
    }
}

#[test]
fn hamiltonian_of_shared_region() {
    let r = Arc::new(rect(2, 2));
    let f = sos_core::HeightField::new(r, vec![1, 0, 0, -1], 0).unwrap();
    // 2 boundary edges each at ±1, 4 internal differences of 1
    assert_eq!(exact::hamiltonian(&f), 8);
}
