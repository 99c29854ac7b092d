//! Small hand-computed cases.

use sparse_olr::dictionaries::HaarIndex;
use sparse_olr::harness::{example_comparator, run_game, ComparatorKind, SignAdversary};
use sparse_olr::learner::haar_olr;
use sparse_olr::stats::{comparator_stats, sizen_bound, FeatureBound};
use sparse_olr::transform::{detail_sequence, haar_analyze};
use sparse_olr::Signal;

#[test]
fn single_wavelet_sequence() {
    let u = Signal::from_scalars(vec![1.0, 1.0, -1.0, -1.0]);
    let c = haar_analyze(&u).unwrap();
    assert!((c.get(HaarIndex::Wavelet { scale: 2, location: 1 }).unwrap()[0] - 2.0).abs() < 1e-15);
    assert!(c.allone()[0].abs() < 1e-15);
    for l in 1..=2 {
        assert!(c.get(HaarIndex::Wavelet { scale: 1, location: l }).unwrap()[0].abs() < 1e-15);
    }
    let detail = detail_sequence(&c, 2).unwrap();
    for (a, b) in detail.as_flat().iter().zip(u.as_flat()) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!(detail_sequence(&c, 1)
        .unwrap()
        .as_flat()
        .iter()
        .all(|v| v.abs() < 1e-15));
}

#[test]
fn sign_adversary_regret_within_bound_for_static_comparators() {
    let (levels, t) = (3u32, 8usize);
    let mut learner = haar_olr(levels, 1, 1.0, 1.0).unwrap();
    let trace = run_game(&mut SignAdversary::new(1.0), &mut learner, t).unwrap();
    let variances = learner.feature_variances();
    let gradient_sum: f64 = trace.gradients.as_flat().iter().sum();
    let player: f64 = trace.total_loss();
    for step in -40..=40 {
        let u = step as f64 * 0.25;
        // a constant comparator only has the all-one component, whose
        // per-round coefficient is u itself
        let features: Vec<FeatureBound> = (0..t)
            .map(|n| FeatureBound {
                coefficient_norm: if n == 0 { u.abs() } else { 0.0 },
                variance: variances[n],
            })
            .collect();
        let bound = sizen_bound(&features, &Signal::zeros(t, 1), 1.0, 1.0);
        let regret = player - gradient_sum * u;
        assert!(regret <= bound + 1e-12, "u = {u}: regret {regret} > bound {bound}");
    }
}

#[test]
fn outlier_example_statistics() {
    for m in [4u32, 6, 8, 10] {
        let t = 1usize << m;
        let root = (t as f64).sqrt();
        for k in [1usize, root as usize] {
            let s = comparator_stats(&example_comparator(ComparatorKind::Outlier, t, k).unwrap()).unwrap();
            assert_eq!(s.max_range, root);
            // S = (T - k) + k sqrt(T), between T and 2T
            assert!((s.norm_sum - ((t - k) as f64 + k as f64 * root)).abs() < 1e-9);
            assert!(s.norm_sum >= t as f64 && s.norm_sum <= 2.0 * t as f64);
            // |u_bar| <= 2 and S_bar <= 2 k sqrt(T)
            assert!(s.average[0] <= 2.0);
            assert!(s.first_variability <= 2.0 * k as f64 * root);
        }
    }
}

#[test]
fn oscillation_example_statistics() {
    for m in [4u32, 6, 8, 10] {
        let t = 1usize << m;
        for k in [1usize, 3, t - 1] {
            let s = comparator_stats(&example_comparator(ComparatorKind::Oscillation, t, k).unwrap()).unwrap();
            assert!((s.average[0] - 1.0).abs() < 1e-12);
            assert!((s.first_variability - (t as f64).sqrt()).abs() < 1e-9);
            assert!(s.norm_sum >= t as f64 - (t as f64).sqrt());
            assert_eq!(s.switches, k);
        }
    }
}
