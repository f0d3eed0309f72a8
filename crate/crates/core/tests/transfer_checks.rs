use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sos_core::exact::EnsembleSpec;
use sos_core::freeenergy::*;
use sos_core::ModelParams;

#[test]
fn traces_match_enumerated_tori() {
    let p = ModelParams::with_h(0.9, 0.35).unwrap();
    for side in [SideBoundary::Level(0), SideBoundary::Periodic] {
        for ens in [EnsembleSpec::Free { boundary_level: 0 }, EnsembleSpec::Wetting { h: 0.35 }] {
            for w in 1..=2 {
                for l in 1..=4 {
                    for h_max in 0..=3 {
                        let spec = TransferSpec::new(w, h_max, p, ens).with_side(side);
                        let a = transfer_log_trace(&spec, l).unwrap();
                        let b = brute_force_log_trace(&spec, l).unwrap();
                        assert!((a - b).abs() < 1e-10, "{side:?} {ens:?} W={w} L={l} h={h_max}: {a} vs {b}");
                    }
                }
            }
        }
    }
}

#[test]
fn single_pinned_state() {
    let p = ModelParams::with_h(1.3, 0.25).unwrap();
    let spec = TransferSpec::new(1, 0, p, EnsembleSpec::Wetting { h: 0.25 });
    assert!((transfer_log_eigenvalue(&spec, 1e-14).unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn low_temperature_limit() {
    let p = ModelParams::new(25.0).unwrap();
    let spec = TransferSpec::new(2, 3, p, EnsembleSpec::Wetting { h: 0.0 });
    assert!(transfer_log_eigenvalue(&spec, 1e-14).unwrap().abs() < 1e-9);
}

#[test]
fn start_vector_does_not_matter() {
    let p = ModelParams::with_h(1.0, 0.2).unwrap();
    let spec = TransferSpec::new(3, 5, p, EnsembleSpec::Wetting { h: 0.2 });
    let tol = 1e-12;
    let opts = PowerOptions::new(tol);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a: Vec<f64> = (0..216).map(|_| rng.gen::<f64>() + 0.01).collect();
    let b: Vec<f64> = (0..216).map(|_| rng.gen::<f64>() + 0.01).collect();
    let ea = leading_eigen(&spec, &opts, Some(&a)).unwrap();
    let eb = leading_eigen(&spec, &opts, Some(&b)).unwrap();
    assert!((ea.log_lambda - eb.log_lambda).abs() < 10.0 * tol);
}

#[test]
fn strip_free_energy_is_convex_nondecreasing_in_h() {
    let beta = 1.0;
    let hs: Vec<f64> = (0..12).map(|i| -0.3 + 0.1 * i as f64).collect();
    let f: Vec<f64> = hs
        .iter()
        .map(|&h| {
            let spec = TransferSpec::new(2, 8, ModelParams::with_h(beta, h).unwrap(), EnsembleSpec::Wetting { h });
            strip_free_energy(&spec, 1e-13).unwrap()
        })
        .collect();
    for w in f.windows(2) {
        assert!(w[1] >= w[0] - 1e-12);
    }
    for w in f.windows(3) {
        assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-10);
    }
}

#[test]
fn widths_one_and_two_are_finite() {
    let p = ModelParams::new(1.0).unwrap();
    let f1 = strip_free_energy(&TransferSpec::new(1, 8, p, EnsembleSpec::Wetting { h: 0.0 }), 1e-12).unwrap();
    let f2 = strip_free_energy(&TransferSpec::new(2, 8, p, EnsembleSpec::Wetting { h: 0.0 }), 1e-12).unwrap();
    assert!(f1.is_finite() && f2.is_finite());
    assert!(f1 != f2);
}

#[test]
fn strong_pinning_in_one_dimension() {
    assert!(one_dimensional_contact(1.0, 3.0, 200).unwrap() > 0.5);
    assert!(one_dimensional_contact(1.0, 0.0, 200).unwrap() < 2.0 / 200.0);
}

#[test]
fn one_dimensional_bracket_at_beta_two() {
    let grid: Vec<f64> = (0..=20).map(|i| 0.05 * i as f64).collect();
    let b = one_dimensional_wetting_check(2.0, &grid, 200).unwrap();
    assert!(b.lo < b.hi && b.hi - b.lo <= 1e-4 + 1e-12);
    assert!(b.contact_lo < b.threshold && b.contact_hi >= b.threshold);
    // exact pinning threshold of this chain
    let exact = -(-(-2.0f64).exp()).ln_1p();
    assert!((0.5 * (b.lo + b.hi) - exact).abs() < 0.01);
    assert!(one_dimensional_wetting_check(2.0, &grid, 100).is_err());
}

#[test]
fn thermo_integration_constant_rate() {
    let s = |m: f64| sos_core::sampler::EstimateSummary { mean: m, stderr: Some(0.02), n_batches: 32, raw_count: 10 };
    let grid = [0.1, 0.2, 0.45, 0.5];
    let t = thermo_integration(&grid, &[s(0.7), s(0.7), s(0.7), s(0.7)]).unwrap();
    assert!((t.delta_f - 0.7 * 0.4).abs() < 1e-15);
    assert!(thermo_integration(&[0.2, 0.1], &[s(0.1), s(0.1)]).is_err());
}

#[test]
fn compare_report_shape() {
    let rep = compare_to_f(1.0, &[0.05, 0.1, 0.2], 1.0, 1.0, &[1, 2], 6, 1e-12).unwrap();
    assert_eq!(rep.rows.len(), 3);
    for w in rep.rows.windows(2) {
        assert!(w[1].u > w[0].u);
    }
    for r in &rep.rows {
        assert!(r.f_printed > 0.0 && r.f_derived > 0.0);
        assert_eq!(r.fbar.len(), 2);
    }
}
