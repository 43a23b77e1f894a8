use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;

use spherear::hilbert::{exp_map, geodesic_distance, geodesic_point, log_map, AmbientVector, SpherePoint};
use spherear::sar::{
    asymptotic_covariance, check_stationarity, project1, project2, psi_weights, InnovationMoments,
};
use spherear::skew::{hs_inner, lincomb, spherical_log, SkewAtom, SkewOperator};
use spherear::transforms::{
    composition_distance, estimate_density, fisher_rao_distance, fpsr, fpsr_inverse, psr, psr_inverse, Axis,
    Composition, DensityGrid,
};

fn vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0_f64, d)
}

fn sphere(d: usize) -> impl Strategy<Value = SpherePoint<f64>> {
    vector(d)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| SpherePoint::normalize(AmbientVector::euclidean(v).unwrap()).unwrap())
}

fn weighted_sphere(weights: Vec<f64>) -> impl Strategy<Value = SpherePoint<f64>> {
    vector(weights.len())
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(move |v| SpherePoint::normalize(AmbientVector::new(v, weights.clone()).unwrap()).unwrap())
}

fn operator(d: usize, max_atoms: usize) -> impl Strategy<Value = SkewOperator<f64>> {
    prop::collection::vec((-1.5..1.5_f64, vector(d), vector(d)), 1..=max_atoms).prop_map(move |atoms| {
        let atoms = atoms
            .into_iter()
            .map(|(coef, a, b)| SkewAtom {
                coef,
                a: AmbientVector::euclidean(a).unwrap(),
                b: AmbientVector::euclidean(b).unwrap(),
            })
            .collect();
        SkewOperator::from_atoms(vec![1.0; d].into(), atoms).unwrap()
    })
}

fn composition(d: usize) -> impl Strategy<Value = Composition<f64>> {
    prop::collection::vec(0.0..1.0_f64, d)
        .prop_filter("positive sum", |v| v.iter().sum::<f64>() > 1e-3)
        .prop_map(|v| Composition::normalized(v, 1.0).unwrap())
}

fn density(cells: usize) -> impl Strategy<Value = DensityGrid<f64>> {
    prop::collection::vec(0.0..1.0_f64, cells * cells)
        .prop_filter("positive mass", |v| v.iter().sum::<f64>() > 1e-3)
        .prop_map(move |v| {
            let axis = Axis::new(0.0, 1.0, cells).unwrap();
            DensityGrid::normalized(vec![axis, axis], v).unwrap()
        })
}

fn dot(a: &AmbientVector<f64>, b: &AmbientVector<f64>) -> f64 {
    a.inner(b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn distance_is_a_bounded_symmetric_metric(x in sphere(5), y in sphere(5), z in sphere(5)) {
        let dxy = geodesic_distance(&x, &y).unwrap();
        prop_assert!((0.0..=PI).contains(&dxy));
        prop_assert!((dxy - geodesic_distance(&y, &x).unwrap()).abs() < 1e-14);
        let via = geodesic_distance(&x, &z).unwrap() + geodesic_distance(&z, &y).unwrap();
        prop_assert!(dxy <= via + 1e-12);
    }

    #[test]
    fn geodesic_point_splits_distance(x in sphere(4), y in sphere(4), a in 0.0..1.0_f64) {
        prop_assume!(!x.is_antipodal_to(&y));
        let d = geodesic_distance(&x, &y).unwrap();
        let m = geodesic_point(&x, &y, a).unwrap();
        prop_assert!((geodesic_distance(&x, &m).unwrap() - a * d).abs() < 1e-9);
        prop_assert!((geodesic_distance(&m, &y).unwrap() - (1.0 - a) * d).abs() < 1e-9);
    }

    #[test]
    fn weighted_log_exp_round_trip(
        (x, y) in prop::collection::vec(0.1..2.0_f64, 6)
            .prop_flat_map(|w| (weighted_sphere(w.clone()), weighted_sphere(w)))
    ) {
        prop_assume!(geodesic_distance(&x, &y).unwrap() < PI - 1e-3);
        let v = log_map(&x, &y).unwrap();
        prop_assert!(dot(&v, &x).abs() < 1e-12);
        let back = exp_map(&x, &v).unwrap();
        prop_assert!(geodesic_distance(&back, &y).unwrap() < 1e-9);
        let op = spherical_log(&x, &y).unwrap();
        prop_assert!(geodesic_distance(&op.rotate(&x).unwrap(), &y).unwrap() < 1e-9);
    }

    #[test]
    fn operators_are_skew(op in operator(6, 4), x in vector(6), y in vector(6)) {
        let x = AmbientVector::euclidean(x).unwrap();
        let y = AmbientVector::euclidean(y).unwrap();
        let lhs = dot(&op.apply(&x).unwrap(), &y);
        let rhs = dot(&x, &op.apply(&y).unwrap());
        prop_assert!((lhs + rhs).abs() < 1e-10);
    }

    #[test]
    fn rotation_is_an_isometry(op in operator(7, 5), x in vector(7), y in vector(7)) {
        let x = AmbientVector::euclidean(x).unwrap();
        let y = AmbientVector::euclidean(y).unwrap();
        let rx = op.exp_apply(&x).unwrap();
        let ry = op.exp_apply(&y).unwrap();
        prop_assert!((dot(&rx, &ry) - dot(&x, &y)).abs() < 1e-10);
    }

    #[test]
    fn compression_preserves_action_and_inner_products(op in operator(8, 7), other in operator(8, 3), x in vector(8)) {
        let x = AmbientVector::euclidean(x).unwrap();
        let c = op.compress();
        prop_assert!(c.len() <= 4);
        let scale = 1.0 + op.hs_norm();
        prop_assert!(op.apply(&x).unwrap().max_abs_diff(&c.apply(&x).unwrap()) < 1e-10 * scale);
        let before = hs_inner(&op, &other).unwrap();
        let after = hs_inner(&c, &other).unwrap();
        prop_assert!((before - after).abs() < 1e-10 * scale * (1.0 + other.hs_norm()));
    }

    #[test]
    fn hs_inner_is_symmetric_and_positive(a in operator(5, 3), b in operator(5, 3)) {
        prop_assert!((hs_inner(&a, &b).unwrap() - hs_inner(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(hs_inner(&a, &a).unwrap() >= -1e-12);
        prop_assert!((a.hs_norm().powi(2) - hs_inner(&a, &a).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn lincomb_is_linear(a in operator(5, 3), b in operator(5, 3), s in -2.0..2.0_f64, t in -2.0..2.0_f64, x in vector(5)) {
        let x = AmbientVector::euclidean(x).unwrap();
        let combined = lincomb(&[(s, &a), (t, &b)]).unwrap().apply(&x).unwrap();
        let want = a.apply(&x).unwrap().scaled(s).add(&b.apply(&x).unwrap().scaled(t)).unwrap();
        prop_assert!(combined.max_abs_diff(&want) < 1e-10);
    }

    #[test]
    fn psr_lands_in_the_orthant(c in composition(4), other in composition(4), kappa in 0.1..50.0_f64) {
        let x = psr(&c).unwrap();
        prop_assert!(x.values().iter().all(|&v| v >= 0.0));
        prop_assert!((x.norm() - 1.0).abs() < 1e-12);
        prop_assert!(geodesic_distance(&x, &psr(&other).unwrap()).unwrap() <= FRAC_PI_2 + 1e-12);
        let back = psr_inverse(&x, 1.0).unwrap();
        prop_assert!(psr(&back).unwrap().max_abs_diff(&x) < 1e-12);
        let scale = |c: &Composition<f64>| Composition::normalized(c.parts().to_vec(), kappa).unwrap();
        let d1 = composition_distance(&c, &other).unwrap();
        let d2 = composition_distance(&scale(&c), &scale(&other)).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn fisher_rao_is_a_metric(f in density(4), g in density(4), h in density(4)) {
        let fg = fisher_rao_distance(&f, &g).unwrap();
        prop_assert!((fg - fisher_rao_distance(&g, &f).unwrap()).abs() < 1e-14);
        prop_assert!((0.0..=FRAC_PI_2 + 1e-12).contains(&fg));
        let via = fisher_rao_distance(&f, &h).unwrap() + fisher_rao_distance(&h, &g).unwrap();
        prop_assert!(fg <= via + 1e-9);
        prop_assert_eq!(fisher_rao_distance(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn fpsr_round_trip(f in density(5)) {
        let back = fpsr_inverse(&fpsr(&f).unwrap(), f.axes()).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn density_estimate_ignores_sample_order(
        samples in prop::collection::vec((0.0..1.0_f64, 0.0..1.0_f64), 5..40),
        shift in 1usize..40,
    ) {
        let samples: Vec<Vec<f64>> = samples.into_iter().map(|(x, y)| vec![x, y]).collect();
        prop_assume!(samples.iter().any(|s| s != &samples[0]));
        let mut rotated = samples.clone();
        rotated.rotate_left(shift % samples.len());
        rotated.reverse();
        let axes = vec![Axis::new(0.0, 1.0, 8).unwrap(), Axis::new(0.0, 1.0, 6).unwrap()];
        let a = estimate_density(&samples, &axes, 1.0).unwrap();
        let b = estimate_density(&rotated, &axes, 1.0).unwrap();
        prop_assert_eq!(a.values(), b.values());
        prop_assert!(a.values().iter().all(|&v| v >= 0.0));
        prop_assert!((a.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn proj2_is_a_nonnegative_fixed_point(x in sphere(3)) {
        prop_assume!(x.values().iter().any(|&v| v > 0.0));
        let p = project2(&x).unwrap();
        prop_assert!(p.values().iter().all(|&v| v >= 0.0));
        prop_assert!(project2(&p).unwrap().max_abs_diff(&p) < 1e-15);
        if x.values().iter().all(|&v| v >= 0.0) {
            prop_assert!(p.max_abs_diff(&x) < 1e-15);
        }
    }

    #[test]
    fn proj1_stays_in_the_orthant(x in sphere(4), op in operator(4, 2)) {
        let x = SpherePoint::normalize(AmbientVector::euclidean(x.values().iter().map(|v| v.abs()).collect()).unwrap()).unwrap();
        let (p, c1) = project1(&x, &op).unwrap();
        prop_assert!((0.0..=1.0).contains(&c1));
        prop_assert!(p.values().iter().all(|&v| v >= -1e-12));
        prop_assert!((p.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn asymptotic_covariance_is_symmetric(
        a1 in -0.6..0.6_f64,
        a2 in -0.3..0.3_f64,
        m1 in 0.1..2.0_f64,
        extra in 0.0..3.0_f64,
        c2 in 0.0..1.0_f64,
    ) {
        let alphas = [a1, a2];
        prop_assume!(check_stationarity(&alphas).stationary);
        let moments = InnovationMoments { m1, m2: m1 * m1 + extra, c2 };
        let psi = psi_weights(&alphas, 400).unwrap();
        let v = asymptotic_covariance(&psi, &moments, 3, psi.support(3) as usize).unwrap().v;
        for u in 0..4 {
            for w in 0..4 {
                prop_assert!((v[u][w] - v[w][u]).abs() <= 1e-12 * (1.0 + v[u][w].abs()));
            }
        }
    }

    #[test]
    fn psi_weights_are_summable(a1 in -0.9..0.9_f64, a2 in -0.5..0.5_f64) {
        let alphas = [a1, a2];
        prop_assume!(check_stationarity(&alphas).min_root_modulus_or_inf() > 1.05);
        let psi = psi_weights(&alphas, 2000).unwrap();
        prop_assert!(psi.psi.len() < 2000);
        prop_assert_eq!(psi.psi[0], 1.0);
        for j in 1..psi.psi.len() {
            let want: f64 = (1..=alphas.len().min(j)).map(|i| alphas[i - 1] * psi.psi[j - i]).sum();
            prop_assert!((psi.psi[j] - want).abs() < 1e-12);
        }
        prop_assert!(psi.psi.iter().map(|v| v.abs()).sum::<f64>().is_finite());
    }
}
