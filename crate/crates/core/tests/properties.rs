use ergodic_smpc::conditions::{estimate_lipschitz, DomainBox};
use ergodic_smpc::ergodics::{
    ks_distance, stationarity_diagnostic_with_boundaries, DiagnosticOptions, tv_distance, wasserstein1_1d, BinRange, EmpiricalMeasure};
use ergodic_smpc::ifs::{normalize_probabilities, simulate, DiscreteIfs, IfsMap, StateVector};
use ergodic_smpc::smpc::project_simplex;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn finite_vec(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, len)
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_lands_on_simplex(v in finite_vec(1..=12)) {
        let p = project_simplex(&v).unwrap();
        let s: f64 = p.as_slice().iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
        prop_assert!(p.as_slice().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn projection_is_idempotent(v in finite_vec(1..=12)) {
        let p = project_simplex(&v).unwrap();
        let pp = project_simplex(p.as_slice()).unwrap();
        prop_assert!(l2(p.as_slice(), pp.as_slice()) <= 1e-12);
    }

    #[test]
    fn projection_is_nonexpansive((v, w) in (1usize..=12).prop_flat_map(|n| (finite_vec(n..=n), finite_vec(n..=n)))) {
        let pv = project_simplex(&v).unwrap();
        let pw = project_simplex(&w).unwrap();
        prop_assert!(l2(pv.as_slice(), pw.as_slice()) <= l2(&v, &w) + 1e-12);
    }

    #[test]
    fn projection_beats_simplex_points(v in finite_vec(3..=3), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let q = [lo, hi - lo, 1.0 - hi];
        let p = project_simplex(&v).unwrap();
        prop_assert!(l2(p.as_slice(), &v) <= l2(&q, &v) + 1e-12);
    }

    #[test]
    fn histogram_mass_is_conserved(xs in prop::collection::vec(-5.0..5.0f64, 1..300), bins in 1usize..20) {
        let m = EmpiricalMeasure::from_columns(&[xs.clone()], bins, &BinRange::Auto).unwrap();
        let total: f64 = m.proportions(0).iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert_eq!(m.count(), xs.len());
        prop_assert!(m.edges(0).windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tv_is_a_bounded_symmetric_distance(
        xs in prop::collection::vec(0.0..1.0f64, 1..200),
        ys in prop::collection::vec(0.0..1.0f64, 1..200),
    ) {
        let edges = vec![(0..=10).map(|i| i as f64 / 10.0).collect::<Vec<_>>()];
        let a = EmpiricalMeasure::on_edges(&[xs], &edges).unwrap();
        let b = EmpiricalMeasure::on_edges(&[ys], &edges).unwrap();
        let ab = tv_distance(&a, &b).unwrap()[0];
        let ba = tv_distance(&b, &a).unwrap()[0];
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&ab));
        prop_assert_eq!(tv_distance(&a, &a).unwrap()[0], 0.0);
    }

    #[test]
    fn ks_is_a_bounded_symmetric_distance(
        xs in prop::collection::vec(-3.0..3.0f64, 1..200),
        ys in prop::collection::vec(-3.0..3.0f64, 1..200),
    ) {
        let ab = ks_distance(&xs, &ys).unwrap();
        prop_assert_eq!(ab, ks_distance(&ys, &xs).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ks_distance(&xs, &xs).unwrap(), 0.0);
    }

    #[test]
    fn w1_matches_brute_force_assignment((xs, ys) in (1usize..=7).prop_flat_map(|n| (finite_vec(n..=n), finite_vec(n..=n)))) {
        let n = xs.len();
        let best = permutations(n)
            .iter()
            .map(|perm| perm.iter().enumerate().map(|(i, &j)| (xs[i] - ys[j]).abs()).sum::<f64>() / n as f64)
            .fold(f64::INFINITY, f64::min);
        let w = wasserstein1_1d(&xs, &ys, 0).unwrap();
        prop_assert!((w - best).abs() <= 1e-12 * (1.0 + best));
        prop_assert_eq!(w, wasserstein1_1d(&ys, &xs, 0).unwrap());
        prop_assert_eq!(wasserstein1_1d(&xs, &xs, 0).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_witness_reproduces_estimate(entries in prop::collection::vec(-2.0..2.0f64, 4), seed in any::<u64>()) {
        let m = DMatrix::from_row_slice(2, 2, &entries);
        let domain = DomainBox::cube(2, -1.0, 1.0).unwrap();
        let f = |x: &StateVector| &m * x.vector();
        let est = estimate_lipschitz(f, &domain, 200, seed).unwrap();
        prop_assert!((est.reevaluate(f) - est.value).abs() <= 1e-12);
        let svd_max = m.singular_values().max();
        prop_assert!(est.value <= svd_max * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn near_normalized_probabilities_are_accepted(p in 0.0..1.0f64, drift in -1e-10..1e-10f64) {
        let q = normalize_probabilities(vec![p, 1.0 - p + drift]).unwrap();
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn simulation_is_deterministic(x0 in -1.0..1.0f64, seed in any::<u64>()) {
        let ifs = DiscreteIfs::new(
            vec![IfsMap::scalar(|x| 0.5 * x), IfsMap::scalar(|x| 0.5 * x + 0.3)],
            |x| { let a = 0.25 + 0.5 / (1.0 + x[0] * x[0]); vec![a, 1.0 - a] },
        ).unwrap();
        let x0 = StateVector::scalar(x0).unwrap();
        let a = simulate(&ifs, &x0, 50, seed).unwrap();
        let b = simulate(&ifs, &x0, 50, seed).unwrap();
        prop_assert_eq!(a.states, b.states);
        prop_assert_eq!(a.selections, b.selections);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn repeated_split_point_is_a_noop(seed in any::<u64>(), extra in 0usize..5) {
        let traj = simulate(&ergodic_smpc::ifs::bernoulli_ifs(), &StateVector::scalar(0.0).unwrap(), 999, seed).unwrap();
        let bounds = vec![100, 325, 550, 775, 1000];
        let mut padded = bounds.clone();
        padded.push(bounds[extra]);
        let opts = DiagnosticOptions::default();
        let a = stationarity_diagnostic_with_boundaries(&traj, &bounds, &opts).unwrap();
        let b = stationarity_diagnostic_with_boundaries(&traj, &padded, &opts).unwrap();
        prop_assert_eq!(a, b);
    }
}
