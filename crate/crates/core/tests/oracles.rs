//! Derived quantities checked against independent computations: dense
//! matrices, closed forms and brute-force searches.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spherear::hilbert::{geodesic_distance, AmbientVector, SpherePoint};
use spherear::sar::{check_stationarity, fit, predict_operator, project2, yule_walker, AutocovSequence, Variant};
use spherear::skew::{SkewAtom, SkewOperator};
use spherear::transforms::{fisher_rao_distance, Axis, DensityGrid};

fn random_vector(rng: &mut ChaCha8Rng, weights: &Arc<[f64]>) -> AmbientVector<f64> {
    let values = (0..weights.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    AmbientVector::with_weights(values, weights.clone()).unwrap()
}

fn random_operator(rng: &mut ChaCha8Rng, weights: &Arc<[f64]>, atoms: usize) -> SkewOperator<f64> {
    let atoms = (0..atoms)
        .map(|_| SkewAtom {
            coef: rng.random_range(-2.0..2.0),
            a: random_vector(rng, weights),
            b: random_vector(rng, weights),
        })
        .collect();
    SkewOperator::from_atoms(weights.clone(), atoms).unwrap()
}

/// `M_ij = Σ c (a_i b_j − b_i a_j)`, the operator as an element of `H⊗H`.
fn dense(op: &SkewOperator<f64>) -> Vec<Vec<f64>> {
    let d = op.dim();
    let mut m = vec![vec![0.0; d]; d];
    for atom in op.atoms() {
        let (a, b) = (atom.a.values(), atom.b.values());
        for i in 0..d {
            for j in 0..d {
                m[i][j] += atom.coef * (a[i] * b[j] - b[i] * a[j]);
            }
        }
    }
    m
}

#[test]
fn weighted_hs_inner_matches_dense_tensor() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let weights: Arc<[f64]> = (0..7).map(|i| 0.2 + 0.3 * i as f64).collect();
    for _ in 0..20 {
        let a = random_operator(&mut rng, &weights, 3);
        let b = random_operator(&mut rng, &weights, 4);
        let (ma, mb) = (dense(&a), dense(&b));
        let mut want = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                want += weights[i] * weights[j] * ma[i][j] * mb[i][j];
            }
        }
        let got = a.hs_inner(&b).unwrap();
        assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()), "{got} vs {want}");
    }
}

#[test]
fn weighted_apply_matches_dense_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let weights: Arc<[f64]> = (0..6).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let op = random_operator(&mut rng, &weights, 3);
    let m = dense(&op);
    let x = random_vector(&mut rng, &weights);
    let got = op.apply(&x).unwrap();
    for j in 0..6 {
        let want: f64 = (0..6).map(|i| m[i][j] * weights[i] * x.values()[i]).sum();
        assert!((got.values()[j] - want).abs() < 1e-12);
    }
}

#[test]
fn compress_many_atoms_in_high_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let weights: Arc<[f64]> = vec![1.0; 1000].into();
    let op = random_operator(&mut rng, &weights, 50);
    let c = op.compress();
    assert!(c.len() <= 50, "span gives at most 50 planes, got {}", c.len());
    for _ in 0..5 {
        let x = random_vector(&mut rng, &weights);
        let diff = op.apply(&x).unwrap().max_abs_diff(&c.apply(&x).unwrap());
        assert!(diff < 1e-9, "{diff}");
    }
    let atoms = c.atoms();
    for (i, p) in atoms.iter().enumerate() {
        assert!((p.a.norm() - 1.0).abs() < 1e-10 && (p.b.norm() - 1.0).abs() < 1e-10);
        for q in &atoms[i + 1..] {
            for (u, v) in [(&p.a, &q.a), (&p.a, &q.b), (&p.b, &q.a), (&p.b, &q.b)] {
                assert!(u.inner(v).unwrap().abs() < 1e-10);
            }
        }
    }
}

#[test]
fn proj2_matches_brute_force_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let steps = 400;
    let grid: Vec<[f64; 3]> = (0..=steps)
        .flat_map(|i| {
            (0..=steps).map(move |j| {
                let theta = FRAC_PI_2 * i as f64 / steps as f64;
                let phi = FRAC_PI_2 * j as f64 / steps as f64;
                [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
            })
        })
        .collect();
    for _ in 0..10 {
        let mut v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        v[rng.random_range(0..3)] = rng.random_range(0.1..1.0);
        let x = AmbientVector::euclidean(v.clone()).unwrap();
        let best = grid
            .iter()
            .max_by(|a, b| {
                let da: f64 = a.iter().zip(&v).map(|(p, q)| p * q).sum();
                let db: f64 = b.iter().zip(&v).map(|(p, q)| p * q).sum();
                da.total_cmp(&db)
            })
            .unwrap();
        let got = project2(&x).unwrap();
        let best = SpherePoint::euclidean(best.to_vec()).unwrap();
        assert!(geodesic_distance(&got, &best).unwrap() < 1e-2);
    }
}

#[test]
fn ar2_root_modulus_matches_quadratic_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let a1: f64 = rng.random_range(-2.0..2.0);
        let a2: f64 = rng.random_range(-1.5..1.5);
        // 1 − a1 z − a2 z² = 0  ⇔  a2 z² + a1 z − 1 = 0
        let disc = a1 * a1 + 4.0 * a2;
        let moduli = if disc >= 0.0 {
            let s = disc.sqrt();
            vec![((-a1 + s) / (2.0 * a2)).abs(), ((-a1 - s) / (2.0 * a2)).abs()]
        } else {
            // complex pair with |z|² = product of roots = −1/a2
            vec![(-1.0 / a2).sqrt(); 2]
        };
        let want = moduli.into_iter().fold(f64::INFINITY, f64::min);
        let report = check_stationarity(&[a1, a2]);
        let got = report.min_root_modulus_or_inf();
        assert!((got - want).abs() < 1e-8 * want.max(1.0), "{a1} {a2}: {got} vs {want}");
        if (want - 1.0).abs() > 1e-6 {
            assert_eq!(report.stationary, want > 1.0);
        }
    }
}

#[test]
fn yule_walker_matches_cramer_rule() {
    let (g0, g1, g2) = (2.0_f64, 0.9, 0.3);
    let acov = AutocovSequence {
        lags: vec![g0, g1, g2],
        n: 100,
        second_moment: g0,
    };
    let det = g0 * g0 - g1 * g1;
    let want = [(g1 * g0 - g1 * g2) / det, (g0 * g2 - g1 * g1) / det];
    let got = yule_walker(&acov).unwrap();
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn fisher_rao_matches_gaussian_closed_form() {
    let axis = Axis::new(-10.0, 10.0, 4000).unwrap();
    let sd = 1.3_f64;
    let gaussian = |mu: f64| {
        let values = axis
            .centers()
            .into_iter()
            .map(|x| (-(x - mu).powi(2) / (2.0 * sd * sd)).exp())
            .collect();
        DensityGrid::normalized(vec![axis], values).unwrap()
    };
    for (m1, m2) in [(0.0, 0.5), (-1.0, 1.0), (0.3, 2.8)] {
        let bhattacharyya = (-(m1 - m2) * (m1 - m2) / (8.0 * sd * sd)).exp();
        let want = bhattacharyya.acos();
        let got = fisher_rao_distance(&gaussian(m1), &gaussian(m2)).unwrap();
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
}

#[test]
fn predict_operator_matches_explicit_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut points = vec![SpherePoint::euclidean(vec![0.6, 0.5, 0.4, 0.3, 0.37]).unwrap()];
    for _ in 0..40 {
        let last = points.last().unwrap();
        let step = random_operator(&mut rng, last.weights_arc(), 1).scaled(0.05);
        points.push(step.rotate(last).unwrap());
    }
    for variant in [Variant::Sar, Variant::Dsar] {
        let model = fit(&points, 3, variant).unwrap();
        let op = predict_operator(&model).unwrap();
        for _ in 0..5 {
            let x = random_vector(&mut rng, points[0].weights_arc());
            let mut want = model.mean_op.apply(&x).unwrap();
            for (i, alpha) in model.alphas.iter().enumerate() {
                let r = &model.history[model.p - 1 - i];
                want = want.add(&r.apply(&x).unwrap().scaled(*alpha)).unwrap();
            }
            assert!(op.apply(&x).unwrap().max_abs_diff(&want) < 1e-10);
        }
    }
}
