//! Randomized invariants.

use proptest::prelude::*;

use record_moments::distributions::{make_family, to_h_rep, QuantileRep};
use record_moments::ers::{ers_compute, ers_from_t_moments, ers_to_t_moments, ErsSeq};
use record_moments::moments::{stieltjes_feasibility, MomentSeq};
use record_moments::numerics::{invert_monotone, Tolerance};
use record_moments::records::{record_cdf, record_cdf_left, simulate_quantile_records};
use record_moments::transform::{invariance_check, landing_check, phi_inverse, TDist};

fn tol() -> Tolerance {
    Tolerance::default()
}

fn fam(name: &str, p: &[f64]) -> QuantileRep {
    make_family(name, p).unwrap().build().unwrap()
}

/// A source law drawn from a few parametric families.
fn source() -> impl Strategy<Value = QuantileRep> {
    prop_oneof![
        (0.2f64..5.0).prop_map(|r| fam("exponential", &[r])),
        (-3.0f64..3.0, 0.1f64..4.0).prop_map(|(a, w)| fam("uniform", &[a, a + w])),
        (-2.0f64..2.0, 0.1f64..1.2).prop_map(|(m, s)| fam("lognormal", &[m, s])),
        (-2.0f64..2.0, 0.2f64..3.0).prop_map(|(m, b)| fam("gumbel", &[m, b])),
        (0.05f64..0.95).prop_map(|p| fam("bernoulli", &[p])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generalized_inverse_is_monotone(rate in 0.1f64..10.0, u1 in 0.001f64..0.999, u2 in 0.001f64..0.999) {
        let f = |x: f64| -(-rate * x).exp_m1();
        let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
        let a = invert_monotone(f, lo, (0.0, 1e3)).unwrap();
        let b = invert_monotone(f, hi, (0.0, 1e3)).unwrap();
        prop_assert!(a <= b);
        prop_assert!(f(a) >= lo - 1e-10);
    }

    #[test]
    fn record_laws_are_ordered_distribution_functions(d in source(), xs in prop::collection::vec(-6.0f64..8.0, 2..12)) {
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        for n in 1..=4 {
            let mut prev = 0.0;
            for &x in &xs {
                let c = record_cdf(&d, n, x).unwrap();
                let cl = record_cdf_left(&d, n, x).unwrap();
                prop_assert!((0.0..=1.0).contains(&c) && cl <= c + 1e-15);
                prop_assert!(c >= prev - 1e-15);
                // Later records are stochastically larger.
                prop_assert!(record_cdf(&d, n + 1, x).unwrap() <= c + 1e-12);
                prev = c;
            }
        }
    }

    #[test]
    fn expected_records_increase(d in source()) {
        let seq = ers_compute(&to_h_rep(&d), 12, &tol()).unwrap();
        // Bounded laws saturate at their upper end in double precision.
        prop_assert!(seq.rho[1] > seq.rho[0], "{:?}", seq.rho);
        prop_assert!(seq.rho.windows(2).all(|w| w[1] >= w[0]), "{:?}", seq.rho);
    }

    #[test]
    fn expected_records_are_affine_equivariant(d in source(), c in -5.0f64..5.0, lambda in 0.1f64..10.0) {
        let a = ers_compute(&to_h_rep(&d), 8, &tol()).unwrap();
        let b = ers_compute(&to_h_rep(&d.affine(c, lambda).unwrap()), 8, &tol()).unwrap();
        for (x, y) in a.rho.iter().zip(&b.rho) {
            let want = c + lambda * x;
            prop_assert!((y - want).abs() < 1e-8 * want.abs().max(1.0), "{y} vs {want}");
        }
    }

    #[test]
    fn moment_conversion_roundtrips(d in source()) {
        let seq = ers_compute(&to_h_rep(&d), 10, &tol()).unwrap();
        let m = ers_to_t_moments(&seq).unwrap();
        let back = ers_from_t_moments(seq.get(1), seq.get(2), &m.m).unwrap();
        for (x, y) in seq.rho.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-10 * x.abs().max(1.0));
        }
        let again = ers_to_t_moments(&ErsSeq::new(back, "back")).unwrap();
        for (x, y) in m.m.iter().zip(&again.m) {
            prop_assert!((x - y).abs() < 1e-6 * x.abs().max(1.0));
        }
    }

    #[test]
    fn atom_law_moments_are_feasible(atoms in prop::collection::vec((0.05f64..4.0, 0.05f64..1.0), 1..6)) {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let m: Vec<f64> = (0..=8)
            .map(|n| atoms.iter().map(|(t, p)| p / total * t.powi(n)).sum())
            .collect();
        let seq = stieltjes_feasibility(MomentSeq::new(m)).unwrap();
        prop_assert!(seq.feasible, "{:?}", seq.hints);
    }

    #[test]
    fn simulation_is_reproducible(seed in any::<u64>(), rate in 0.2f64..5.0) {
        let d = fam("exponential", &[rate]);
        let a = simulate_quantile_records(&d, 4, 16, seed).unwrap();
        let b = simulate_quantile_records(&d, 4, 16, seed).unwrap();
        prop_assert_eq!(&a, &b);
        for v in &a.values {
            prop_assert!(v.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn forward_map_ignores_location_and_scale(d in source(), c in -5.0f64..5.0, lambda in 0.2f64..5.0) {
        let r = invariance_check(&d, c, lambda, &tol()).unwrap();
        prop_assert!(r.max_discrepancy < 1e-6, "{r:?}");
    }

    #[test]
    fn reconstruction_lands_standardized(
        parts in prop::collection::vec((0.1f64..1.0, 0.5f64..6.0, 0.5f64..4.0), 1..4),
    ) {
        let comps: Vec<(f64, TDist)> = parts
            .iter()
            .map(|&(w, k, r)| (w, TDist::gamma(k, r).unwrap()))
            .collect();
        let total: f64 = comps.iter().map(|c| c.0).sum();
        let comps = comps.into_iter().map(|(w, t)| (w / total, t)).collect();
        let t = TDist::mixture(comps).unwrap();
        let h0 = phi_inverse(&t, &tol()).unwrap();
        let land = landing_check(&h0, 200, 15.0, &tol()).unwrap();
        prop_assert!(land.monotone, "{land:?}");
        prop_assert!(land.rho1.abs() < 1e-7 && (land.rho2 - 1.0).abs() < 1e-7, "{land:?}");
    }
}
